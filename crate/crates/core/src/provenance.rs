//! Why-provenance of capability atoms and derivation certificates.
//!
//! `Why(v)` over a support universe `U` is the antichain of minimal `W ⊆ U`
//! with `v ∈ cl(W)`. A certificate pairs a base with the firing steps that
//! derive a target from it; checking one is a replay.

use std::fmt::Write as _;

use thiserror::Error;

use crate::antichain::{minimal_supports, Antichain};
use crate::atoms::{AtomId, AtomSet, AtomTable};
use crate::encoding::SafetyModel;
use crate::hypergraph::{EdgeId, FiringStep, FiringTrace};

/// Antichain cardinality bound used when the model has more than
/// [`EXACT_LIMIT`] atoms.
pub const DEFAULT_CAP: usize = 4096;
pub const EXACT_LIMIT: usize = 20;

/// Atoms whose antichain was cut at `cap` elements. Their entries are then
/// sound (every element is a witness) but may miss witnesses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruncationReport {
    pub cap: usize,
    pub atoms: Vec<AtomId>,
}

#[derive(Debug, Clone)]
pub struct WhyTable {
    pub universe: AtomSet,
    entries: Vec<Antichain>,
    forbidden: Antichain,
    pub passes: usize,
    pub truncation: Option<TruncationReport>,
}

impl WhyTable {
    pub fn entry(&self, v: AtomId) -> &Antichain {
        &self.entries[v.index()]
    }

    pub fn entries(&self) -> &[Antichain] {
        &self.entries
    }

    /// `⊕_{f∈F} Why(f)`: the minimal unsafe sets within the universe.
    pub fn forbidden(&self) -> &Antichain {
        &self.forbidden
    }

    pub fn is_exact(&self) -> bool {
        self.truncation.is_none()
    }
}

/// Exact below [`EXACT_LIMIT`] atoms, capped at [`DEFAULT_CAP`] above.
pub fn why_provenance(sm: &SafetyModel, universe: &AtomSet) -> WhyTable {
    let cap = (sm.n() > EXACT_LIMIT).then_some(DEFAULT_CAP);
    why_provenance_with(sm, universe, cap)
}

/// Edges are folded in id order each pass until no entry changes.
pub fn why_provenance_with(sm: &SafetyModel, universe: &AtomSet, cap: Option<usize>) -> WhyTable {
    let t = minimal_supports(
        sm.n(),
        sm.h.edges().map(|(_, e)| (e.tail(), e.head())),
        universe,
        cap,
    );
    let mut forbidden = Antichain::zero();
    for f in sm.forbidden.iter() {
        forbidden = forbidden.plus(&t.entries[f.index()]);
    }
    let truncation = match cap {
        Some(cap) if !t.truncated.is_empty() => Some(TruncationReport { cap, atoms: t.truncated }),
        _ => None,
    };
    WhyTable {
        universe: universe.clone(),
        entries: t.entries,
        forbidden,
        passes: t.passes,
        truncation,
    }
}

/// `v ∈ cl(W)` and `v ∉ cl(W∖{w})` for every `w ∈ W`.
pub fn is_minimal_witness(sm: &SafetyModel, w: &AtomSet, v: AtomId) -> bool {
    sm.h.closure(w).contains(v) && w.iter().all(|x| !sm.h.closure(&w.without(x)).contains(v))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub target: AtomId,
    pub base: AtomSet,
    pub trace: FiringTrace,
}

/// Derives `target` from `base`, keeping only the firings it depends on.
pub fn certify(sm: &SafetyModel, base: &AtomSet, target: AtomId) -> Option<Certificate> {
    let run = sm.h.closure_run(base, true);
    if !run.closed.contains(target) {
        return None;
    }
    let steps = run.trace.expect("trace requested").steps;
    let mut needed = AtomSet::singleton(target);
    let mut kept = Vec::new();
    for s in steps.iter().rev() {
        if !needed.contains(s.atom) {
            continue;
        }
        kept.push(*s);
        let e = sm.h.edge(s.edge).expect("trace edge is live");
        needed.extend(e.tail().iter().copied().filter(|t| !base.contains(*t)));
    }
    kept.reverse();
    Some(Certificate { target, base: base.clone(), trace: FiringTrace { steps: kept } })
}

/// Shrinks `a` greedily (ascending atom order) to a minimal `W ⊆ a` still
/// deriving `target`. The result is an element of `Why(target)` over `a`.
pub fn minimal_base(sm: &SafetyModel, a: &AtomSet, target: AtomId) -> Option<AtomSet> {
    let mut w = a.clone();
    if !sm.h.closure(&w).contains(target) {
        return None;
    }
    for x in a.iter() {
        let smaller = w.without(x);
        if sm.h.closure(&smaller).contains(target) {
            w = smaller;
        }
    }
    Some(w)
}

/// Certificate for `target` from a minimal base inside `a`.
pub fn minimal_certificate(sm: &SafetyModel, a: &AtomSet, target: AtomId) -> Option<Certificate> {
    certify(sm, &minimal_base(sm, a, target)?, target)
}

pub fn verify_certificate(sm: &SafetyModel, c: &Certificate) -> bool {
    c.trace
        .replay(&sm.h, &c.base)
        .is_ok_and(|reached| reached.contains(c.target))
}

impl Certificate {
    /// `target; base: a,b; steps: (edge,atom) (edge,atom)`
    pub fn to_text(&self, atoms: &AtomTable) -> String {
        let mut out = format!("{}; base: {}; steps:", atoms.name(self.target), atoms.set_names(&self.base).join(","));
        for s in &self.trace.steps {
            let _ = write!(out, " ({},{})", s.edge, atoms.name(s.atom));
        }
        out
    }

    pub fn parse(text: &str, atoms: &AtomTable) -> Result<Certificate, CertificateParseError> {
        let err = |m: &str| CertificateParseError(m.to_string());
        let atom = |name: &str| {
            atoms
                .get(name.trim())
                .ok_or_else(|| CertificateParseError(format!("unknown atom {:?}", name.trim())))
        };
        let mut parts = text.trim().splitn(3, ';');
        let target = atom(parts.next().ok_or_else(|| err("missing target"))?)?;
        let base_part = parts.next().ok_or_else(|| err("missing base"))?.trim();
        let base_list = base_part.strip_prefix("base:").ok_or_else(|| err("expected `base:`"))?;
        let mut base = AtomSet::new();
        for name in base_list.split(',').filter(|s| !s.trim().is_empty()) {
            base.insert(atom(name)?);
        }
        let steps_part = parts.next().ok_or_else(|| err("missing steps"))?.trim();
        let steps_list = steps_part.strip_prefix("steps:").ok_or_else(|| err("expected `steps:`"))?;
        let mut steps = Vec::new();
        for tok in steps_list.split_whitespace() {
            let inner = tok
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| err("step must look like (edge,atom)"))?;
            let (e, a) = inner.split_once(',').ok_or_else(|| err("step must look like (edge,atom)"))?;
            let edge: u32 = e.trim().parse().map_err(|_| err("bad edge number"))?;
            steps.push(FiringStep { edge: EdgeId(edge), atom: atom(a)? });
        }
        Ok(Certificate { target, base, trace: FiringTrace { steps } })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("bad certificate: {0}")]
pub struct CertificateParseError(pub String);
