//! Translations between capability hypergraphs and propositional Datalog.
//!
//! `cap_to_dl` emits `has(s₁) ∧ ⋯ ∧ has(s_k) ⇒ has(v)` for every edge and
//! `has(f) ⇒ forbidden` for every forbidden atom. Capability `v` keeps its id
//! as `has(v)`; the `forbidden` atom takes id `n`. `dl_to_cap` turns every
//! rule of a positive program into one edge over the same atoms.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::atoms::{AtomId, AtomSet, AtomTable};
use crate::datalog::{DatalogError, Program, Rule};
use crate::hypergraph::{Hyperedge, Hypergraph, HypergraphError};

/// Name of the distinguished query atom.
pub const FORBIDDEN: &str = "forbidden";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingError {
    #[error("program contains negated literals")]
    NegationPresent,
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
    #[error(transparent)]
    Datalog(#[from] DatalogError),
    #[error("line {line}: {msg}")]
    BadLabel { line: usize, msg: String },
}

/// A capability hypergraph with its forbidden set `F`.
#[derive(Debug, Clone)]
pub struct SafetyModel {
    pub h: Hypergraph,
    pub forbidden: AtomSet,
}

impl SafetyModel {
    pub fn new(h: Hypergraph, forbidden: AtomSet) -> Result<Self, HypergraphError> {
        if let Some(top) = forbidden.last() {
            if top.index() >= h.n() {
                return Err(HypergraphError::UnknownAtom(top, h.n()));
            }
        }
        Ok(SafetyModel { h, forbidden })
    }

    pub fn n(&self) -> usize {
        self.h.n()
    }

    pub fn atoms(&self) -> &AtomTable {
        self.h.atoms()
    }
}

/// Materialized correspondence `v ↔ has(v)` plus the `forbidden` atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    dl_of: Vec<AtomId>,
    cap_of: Vec<Option<AtomId>>,
    forbidden: AtomId,
}

impl LabelMap {
    pub fn to_dl(&self, v: AtomId) -> AtomId {
        self.dl_of[v.index()]
    }

    /// `None` for the `forbidden` atom.
    pub fn to_cap(&self, p: AtomId) -> Option<AtomId> {
        self.cap_of.get(p.index()).copied().flatten()
    }

    pub fn forbidden_atom(&self) -> AtomId {
        self.forbidden
    }

    pub fn cap_count(&self) -> usize {
        self.dl_of.len()
    }

    /// Capability atoms true in a Datalog model, with `has(·)` stripped.
    pub fn strip(&self, model: &AtomSet) -> AtomSet {
        model.iter().filter_map(|p| self.to_cap(p)).collect()
    }

    /// `D_A = {has(a) : a ∈ A}`.
    pub fn wrap(&self, a: &AtomSet) -> AtomSet {
        a.iter().map(|v| self.to_dl(v)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub program: Program,
    pub labels: LabelMap,
}

pub fn wrapped_name(cap: &str) -> String {
    format!("has({cap})")
}

/// Encodes `(H, F)` as a positive stratum-0 program whose extensional atoms
/// are exactly the `has(v)`.
pub fn cap_to_dl(sm: &SafetyModel) -> Encoded {
    let n = sm.n();
    let mut atoms = AtomTable::new();
    for name in sm.atoms().names() {
        atoms.intern(wrapped_name(name));
    }
    let forbidden = atoms.intern(FORBIDDEN);
    let mut rules: Vec<Rule> = sm
        .h
        .edges()
        .map(|(_, e)| Rule::horn(e.tail().iter().copied(), e.head()))
        .collect();
    rules.extend(sm.forbidden.iter().map(|f| Rule::horn([f], forbidden)));
    let program = Program::with_strata(atoms, rules, AtomSet::full(n), 1)
        .expect("encoded program is positive and in range");
    let labels = LabelMap {
        dl_of: (0..n).map(AtomId::from_index).collect(),
        cap_of: (0..n).map(|i| Some(AtomId::from_index(i))).chain([None]).collect(),
        forbidden,
    };
    Encoded { program, labels }
}

/// One edge per rule over the program's own atoms. Identical rules collapse.
pub fn dl_to_cap(p: &Program) -> Result<Hypergraph, EncodingError> {
    if !p.is_positive() {
        return Err(EncodingError::NegationPresent);
    }
    let mut h = Hypergraph::new(p.atoms().clone());
    for r in p.rules() {
        let e = Hyperedge::new(r.body.iter().map(|l| l.atom), r.head)?;
        match h.add_edge(e) {
            Ok(_) | Err(HypergraphError::DuplicateEdge(_)) => {}
            Err(err) => return Err(err.into()),
        }
    }
    Ok(h)
}

/// Recovers `(H, F)` from the hypergraph of an encoded program: edges into
/// `forbidden` become `F`, every other edge is mapped back through `labels`.
pub fn decode(h_dl: &Hypergraph, labels: &LabelMap, cap_atoms: AtomTable) -> Result<SafetyModel, EncodingError> {
    let mut h = Hypergraph::new(cap_atoms);
    let mut forbidden = AtomSet::new();
    let unmapped = |a: AtomId| HypergraphError::UnknownAtom(a, labels.cap_count());
    for (_, e) in h_dl.edges() {
        let tail: Vec<AtomId> = e
            .tail()
            .iter()
            .map(|&t| labels.to_cap(t).ok_or_else(|| unmapped(t)))
            .collect::<Result<_, _>>()?;
        if e.head() == labels.forbidden {
            if let [f] = tail[..] {
                forbidden.insert(f);
                continue;
            }
        }
        let head = labels.to_cap(e.head()).ok_or_else(|| unmapped(e.head()))?;
        h.add_edge(Hyperedge::new(tail, head)?)?;
    }
    Ok(SafetyModel::new(h, forbidden)?)
}

/// `H ≅ H_{Π_H}`: the hypergraph of the encoded program, minus the `forbidden`
/// rules, has the edge set of `sm.h` under `labels`, and the `forbidden`
/// rules are exactly `F`.
pub fn hypergraph_round_trip_holds(sm: &SafetyModel, enc: &Encoded) -> bool {
    let Ok(h_dl) = dl_to_cap(&enc.program) else {
        return false;
    };
    match decode(&h_dl, &enc.labels, sm.atoms().clone()) {
        Ok(back) => back.h.edge_list() == sm.h.edge_list() && back.forbidden == sm.forbidden,
        Err(_) => false,
    }
}

/// Rules as a set of `(sorted body, head)` pairs.
pub fn rule_set(p: &Program) -> BTreeSet<(Vec<AtomId>, AtomId)> {
    p.rules()
        .iter()
        .map(|r| {
            let mut body: Vec<AtomId> = r.body.iter().map(|l| l.atom).collect();
            body.sort_unstable();
            body.dedup();
            (body, r.head)
        })
        .collect()
}

/// `Π ≅ Π_{H_Π}`: encoding the hypergraph of `p` gives back the rule set of
/// `p` once `has(·)` is stripped.
pub fn program_round_trip_holds(p: &Program) -> bool {
    let Ok(h) = dl_to_cap(p) else {
        return false;
    };
    let sm = SafetyModel { h, forbidden: AtomSet::new() };
    let enc = cap_to_dl(&sm);
    let back: BTreeSet<(Vec<AtomId>, AtomId)> = rule_set(&enc.program)
        .into_iter()
        .filter_map(|(body, head)| {
            let body = body.iter().map(|&b| enc.labels.to_cap(b)).collect::<Option<Vec<_>>>()?;
            Some((body, enc.labels.to_cap(head)?))
        })
        .collect();
    back == rule_set(p)
}

/// Program text preceded by `% label has(v) = v` lines, so the encoding can be
/// decoded without string surgery on atom names.
pub fn encode_text(sm: &SafetyModel) -> String {
    let enc = cap_to_dl(sm);
    let mut out = String::new();
    for v in sm.atoms().ids() {
        out.push_str(&format!(
            "% label {} = {}\n",
            enc.program.atoms().name(enc.labels.to_dl(v)),
            sm.atoms().name(v)
        ));
    }
    out.push_str(&format!("% label {} = !forbidden\n", FORBIDDEN));
    out.push_str(&enc.program.to_text());
    out
}

/// Inverse of [`encode_text`]. Text without label lines is read as a plain
/// positive program: its atoms become capabilities and `F` is empty.
pub fn decode_text(text: &str) -> Result<SafetyModel, EncodingError> {
    let program = Program::parse(text)?;
    let h_dl = dl_to_cap(&program)?;
    let mut pairs: Vec<(usize, String, String)> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let Some(rest) = line.trim().strip_prefix('%') else {
            continue;
        };
        let Some(rest) = rest.trim().strip_prefix("label ") else {
            continue;
        };
        let (dl, cap) = rest.split_once(" = ").ok_or_else(|| EncodingError::BadLabel {
            line: ln + 1,
            msg: "expected `% label <atom> = <name>`".into(),
        })?;
        pairs.push((ln + 1, dl.trim().to_string(), cap.trim().to_string()));
    }
    if pairs.is_empty() {
        return Ok(SafetyModel { h: h_dl, forbidden: AtomSet::new() });
    }
    let n_dl = program.atoms().len();
    let mut cap_atoms = AtomTable::new();
    let mut dl_of = Vec::new();
    let mut cap_of = vec![None; n_dl];
    let mut forbidden = None;
    for (line, dl, cap) in pairs {
        let bad = |msg: String| EncodingError::BadLabel { line, msg };
        let p = program
            .atoms()
            .get(&dl)
            .ok_or_else(|| bad(format!("unknown atom {dl}")))?;
        if cap == "!forbidden" {
            forbidden = Some(p);
            continue;
        }
        if cap_of[p.index()].is_some() || cap_atoms.get(&cap).is_some() {
            return Err(bad(format!("label for {dl} is not one-to-one")));
        }
        let v = cap_atoms.intern(cap);
        dl_of.push(p);
        cap_of[p.index()] = Some(v);
    }
    let forbidden = match forbidden {
        Some(f) => f,
        None => return Err(EncodingError::BadLabel { line: 0, msg: "no label for the forbidden atom".into() }),
    };
    let labels = LabelMap { dl_of, cap_of, forbidden };
    decode(&h_dl, &labels, cap_atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::RawEdge;

    fn model() -> SafetyModel {
        let atoms = AtomTable::from_names(["c3", "c5", "c6", "c12"]);
        let raw = vec![RawEdge { tail: vec![AtomId(0), AtomId(1)], heads: vec![AtomId(2)] }];
        let h = Hypergraph::normalize(atoms, &raw).unwrap();
        SafetyModel::new(h, AtomSet::singleton(AtomId(3))).unwrap()
    }

    #[test]
    fn edge_becomes_rule_and_forbidden_rule_is_added() {
        let enc = cap_to_dl(&model());
        let text = enc.program.to_text();
        assert!(text.contains("has(c6) :- has(c3), has(c5)."), "{text}");
        assert!(text.contains("forbidden :- has(c12)."), "{text}");
        assert_eq!(enc.labels.forbidden_atom(), AtomId(4));
        assert_eq!(enc.program.rules().len(), 2);
    }

    #[test]
    fn empty_model_gives_empty_program() {
        let sm = SafetyModel::new(Hypergraph::new(AtomTable::new()), AtomSet::new()).unwrap();
        assert!(cap_to_dl(&sm).program.rules().is_empty());
    }

    #[test]
    fn least_model_is_closure() {
        let sm = model();
        let enc = cap_to_dl(&sm);
        let a: AtomSet = [AtomId(0), AtomId(1)].into_iter().collect();
        let m = enc.program.eval(&enc.labels.wrap(&a)).unwrap();
        assert_eq!(enc.labels.strip(&m.true_atoms), sm.h.closure(&a));
        assert!(!m.holds(enc.labels.forbidden_atom()));
    }

    #[test]
    fn round_trips() {
        let sm = model();
        let enc = cap_to_dl(&sm);
        assert!(hypergraph_round_trip_holds(&sm, &enc));
        assert!(program_round_trip_holds(&enc.program));
        let back = decode_text(&encode_text(&sm)).unwrap();
        assert_eq!(back.h.edge_list(), sm.h.edge_list());
        assert_eq!(back.atoms(), sm.atoms());
        assert_eq!(back.forbidden, sm.forbidden);
    }

    #[test]
    fn negation_is_rejected() {
        let p = Program::parse("% stratum 0\nb :- a.\n% stratum 1\nc :- !b.\n").unwrap();
        assert_eq!(dl_to_cap(&p).unwrap_err(), EncodingError::NegationPresent);
    }

    #[test]
    fn plain_program_decodes_to_same_atoms() {
        let p = Program::parse("q :- p1, p2.\n").unwrap();
        let h = dl_to_cap(&p).unwrap();
        assert_eq!(h.m(), 1);
        let e = h.edges().next().unwrap().1;
        assert_eq!(h.describe_edge(e), "p1 p2 -> q");
        assert_eq!(decode_text("q :- p1, p2.\n").unwrap().h.edge_list(), h.edge_list());
    }
}
