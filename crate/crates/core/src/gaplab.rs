//! Hard families, the probe oracle and the locality-gap harness.
//!
//! An [`OracleInstance`] hides a model and a configuration. Strategies see
//! the atom names and the update, and learn everything else through unit
//! cost probes: an atom probe returns `(inA, inCl)` before the update, a rule
//! probe returns the rules with a given head. A rule probe is charged as a
//! probe of its head atom.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::atoms::{AtomId, AtomSet, AtomTable};
use crate::audit::{audit_surface, AuditSurface};
use crate::encoding::SafetyModel;
use crate::hypergraph::{Hyperedge, Hypergraph};
use crate::incremental::{EdgeUpdate, IncrementalError, MaintainedState, Update};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GapError {
    #[error("{kind} needs n >= 2, got {n}")]
    TooSmall { kind: FamilyKind, n: usize },
    #[error("pair parameters out of range: k={k}, j={j}")]
    BadPair { k: usize, j: usize },
    #[error("probe of {0:?}, which is not an atom of the instance")]
    IllegalAccess(String),
    #[error("pair invariant failed: {0}")]
    PairInvariant(String),
    #[error("benchmark result disagrees with the scratch oracle at n={0}")]
    OracleMismatch(usize),
    #[error(transparent)]
    Update(#[from] IncrementalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Chain,
    HPrime,
}

impl fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FamilyKind::Chain => "CHAIN",
            FamilyKind::HPrime => "HPRIME",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Family {
    pub sm: SafetyModel,
    pub a: AtomSet,
    pub update: EdgeUpdate,
}

fn build(names: &[String], edges: &[(Vec<&str>, &str)], a: &[&str], forbidden: &[&str]) -> (SafetyModel, AtomSet) {
    let atoms = AtomTable::from_names(names.iter().cloned());
    let id = |s: &str| atoms.get(s).unwrap_or_else(|| panic!("family atom {s}"));
    let mut h = Hypergraph::new(atoms.clone());
    for (tail, head) in edges {
        let e = Hyperedge::new(tail.iter().map(|t| id(t)), id(head)).expect("family edge");
        h.add_edge(e).expect("family edges are distinct");
    }
    let a = a.iter().map(|s| id(s)).collect();
    let f = forbidden.iter().map(|s| id(s)).collect();
    (SafetyModel::new(h, f).expect("forbidden atoms exist"), a)
}

/// `CHAIN`: `v1 → v2 → ⋯ → vn`, `A = F = ∅`, update `{vn} → w`.
/// `HPRIME`: `{v1..v(n−1)} → vn` and `vn → xi` for every `i`,
/// `A = {v1..v(n−1)}`, `F = ∅`, update `{v(n−1)} → v(n)p` with `v(n)p` fresh.
pub fn gen_family(kind: FamilyKind, n: usize) -> Result<Family, GapError> {
    if n < 2 {
        return Err(GapError::TooSmall { kind, n });
    }
    let v: Vec<String> = (1..=n).map(|i| format!("v{i}")).collect();
    let vs: Vec<&str> = v.iter().map(String::as_str).collect();
    match kind {
        FamilyKind::Chain => {
            let edges: Vec<(Vec<&str>, &str)> = (0..n - 1).map(|i| (vec![vs[i]], vs[i + 1])).collect();
            let (sm, a) = build(&v, &edges, &[], &[]);
            Ok(Family { sm, a, update: EdgeUpdate { tail: vec![v[n - 1].clone()], head: "w".into() } })
        }
        FamilyKind::HPrime => {
            let x: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
            let mut names = v.clone();
            names.extend(x.iter().cloned());
            let mut edges: Vec<(Vec<&str>, &str)> = vec![(vs[..n - 1].to_vec(), vs[n - 1])];
            edges.extend(x.iter().map(|xi| (vec![vs[n - 1]], xi.as_str())));
            let (sm, a) = build(&names, &edges, &vs[..n - 1], &[]);
            let update = EdgeUpdate { tail: vec![v[n - 2].clone()], head: format!("v{n}p") };
            Ok(Family { sm, a, update })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtomProbeAnswer {
    pub in_a: bool,
    pub in_cl: bool,
}

/// A rule as returned by a rule probe.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NamedRule {
    pub tail: Vec<String>,
    pub head: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Probe {
    Atom(String),
    RulesInto(String),
}

impl Probe {
    /// The atom a probe is charged to.
    pub fn atom(&self) -> &str {
        match self {
            Probe::Atom(a) | Probe::RulesInto(a) => a,
        }
    }
}

/// A hidden pre-update instance behind the probe interface.
#[derive(Debug, Clone)]
pub struct OracleInstance {
    sm: SafetyModel,
    a: AtomSet,
    closed: AtomSet,
    log: Vec<Probe>,
}

impl OracleInstance {
    pub fn new(sm: SafetyModel, a: AtomSet) -> Self {
        let closed = sm.h.closure(&a);
        OracleInstance { sm, a, closed, log: Vec::new() }
    }

    /// The universe of names; known to every strategy at no cost.
    pub fn atom_names(&self) -> Vec<String> {
        self.sm.atoms().names().to_vec()
    }

    fn resolve(&self, name: &str) -> Result<AtomId, GapError> {
        self.sm.atoms().get(name).ok_or_else(|| GapError::IllegalAccess(name.to_string()))
    }

    pub fn probe_atom(&mut self, name: &str) -> Result<AtomProbeAnswer, GapError> {
        let a = self.resolve(name)?;
        self.log.push(Probe::Atom(name.to_string()));
        Ok(AtomProbeAnswer { in_a: self.a.contains(a), in_cl: self.closed.contains(a) })
    }

    /// Rules of the pre-update rule set whose head is `name`.
    pub fn probe_rules_into(&mut self, name: &str) -> Result<Vec<NamedRule>, GapError> {
        let a = self.resolve(name)?;
        self.log.push(Probe::RulesInto(name.to_string()));
        let atoms = self.sm.atoms();
        let mut out: Vec<NamedRule> = self
            .sm
            .h
            .edges_into(a)
            .iter()
            .map(|&id| {
                let e = self.sm.h.edge(id).expect("indexed edge is live");
                NamedRule {
                    tail: e.tail().iter().map(|&t| atoms.name(t).to_string()).collect(),
                    head: name.to_string(),
                }
            })
            .collect();
        out.sort();
        Ok(out)
    }

    pub fn probe_count(&self) -> usize {
        self.log.len()
    }

    pub fn probe_log(&self) -> &[Probe] {
        &self.log
    }

    pub fn reset_log(&mut self) {
        self.log.clear();
    }

    /// `G_F(A)` after applying `update`, computed from the hidden instance.
    pub fn correct_surface(&self, update: &EdgeUpdate) -> NamedSurface {
        let mut st = MaintainedState::new(self.sm.clone(), self.a.clone(), self.sm.n() + 1);
        st.certify = false;
        st.apply_naive(&Update::Insert(update.clone())).expect("update applies to a fresh instance");
        NamedSurface::from_surface(&st.surface(), st.model().atoms())
    }
}

/// A surface by atom names, so outputs of different instances compare.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedSurface {
    pub emergent: BTreeSet<String>,
    pub nmf: BTreeSet<String>,
    pub topk: Vec<(String, usize)>,
}

impl NamedSurface {
    pub fn from_surface(g: &AuditSurface, atoms: &AtomTable) -> Self {
        NamedSurface {
            emergent: atoms.set_names(&g.emergent).into_iter().collect(),
            nmf: atoms.set_names(&g.nmf).into_iter().collect(),
            topk: g.topk.iter().map(|&(v, gain)| (atoms.name(v).to_string(), gain)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Tail,
    Head,
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairKind::Tail => "TAIL",
            PairKind::Head => "HEAD",
        })
    }
}

/// Two instances that answer every probe alike except those charged to
/// `distinguishing_atom`.
#[derive(Debug, Clone)]
pub struct InstancePair {
    pub kind: PairKind,
    pub k: usize,
    pub j: usize,
    pub plus: OracleInstance,
    pub minus: OracleInstance,
    pub distinguishing_atom: String,
    pub update: EdgeUpdate,
}

/// Builds the pair for update `u = ({s1..sk} → vu)`.
///
/// `TAIL` (`1 ≤ j ≤ k`): atoms `s1..sk, vu, x1`, `A = {x1} ∪ S ∖ {sj}`; the
/// plus instance has the rule `x1 → sj`, the minus instance has no rules.
/// `HEAD`: for `k ≥ 2` no rules and `A = S` (plus) or `S ∪ {vu}` (minus).
/// For `k = 1` the update would be a singleton arc, so `s1` is derived from
/// fresh `y1 ∧ y2` with `A = {y1, y2}` to keep `vu` out of `cl₁`.
/// `u` itself is not part of the pre-update rule set. `F = ∅` throughout.
pub fn gen_pair(kind: PairKind, k: usize, j: usize) -> Result<InstancePair, GapError> {
    if k == 0 || (kind == PairKind::Tail && !(1..=k).contains(&j)) {
        return Err(GapError::BadPair { k, j });
    }
    let s: Vec<String> = (1..=k).map(|i| format!("s{i}")).collect();
    let update = EdgeUpdate { tail: s.clone(), head: "vu".into() };
    let mut names = s.clone();
    names.push("vu".into());
    let (plus, minus, p) = match kind {
        PairKind::Tail => {
            names.push("x1".into());
            let sj = s[j - 1].as_str();
            let a: Vec<&str> = s.iter().map(String::as_str).filter(|&x| x != sj).chain(["x1"]).collect();
            let (sm_plus, a_plus) = build(&names, &[(vec!["x1"], sj)], &a, &[]);
            let (sm_minus, a_minus) = build(&names, &[], &a, &[]);
            (OracleInstance::new(sm_plus, a_plus), OracleInstance::new(sm_minus, a_minus), sj.to_string())
        }
        PairKind::Head if k == 1 => {
            names.extend(["y1".to_string(), "y2".to_string()]);
            let edges = [(vec!["y1", "y2"], "s1")];
            let (sm_plus, a_plus) = build(&names, &edges, &["y1", "y2"], &[]);
            let (sm_minus, a_minus) = build(&names, &edges, &["y1", "y2", "vu"], &[]);
            (OracleInstance::new(sm_plus, a_plus), OracleInstance::new(sm_minus, a_minus), "vu".to_string())
        }
        PairKind::Head => {
            let a: Vec<&str> = s.iter().map(String::as_str).collect();
            let mut a_minus = a.clone();
            a_minus.push("vu");
            let (sm_plus, a_plus) = build(&names, &[], &a, &[]);
            let (sm_minus, a_minus) = build(&names, &[], &a_minus, &[]);
            (OracleInstance::new(sm_plus, a_plus), OracleInstance::new(sm_minus, a_minus), "vu".to_string())
        }
    };
    let pair = InstancePair {
        kind,
        k,
        j: if kind == PairKind::Tail { j } else { 0 },
        plus,
        minus,
        distinguishing_atom: p,
        update,
    };
    pair.verify()?;
    Ok(pair)
}

impl InstancePair {
    /// Exhaustive probe sweep plus the differing-output check.
    pub fn verify(&self) -> Result<(), GapError> {
        let (mut plus, mut minus) = (self.plus.clone(), self.minus.clone());
        let bad = |m: String| Err(GapError::PairInvariant(m));
        if plus.atom_names() != minus.atom_names() {
            return bad("instances have different universes".into());
        }
        let mut differing = Vec::new();
        for name in plus.atom_names() {
            let same_atom = plus.probe_atom(&name)? == minus.probe_atom(&name)?;
            let same_rules = plus.probe_rules_into(&name)? == minus.probe_rules_into(&name)?;
            if !same_atom || !same_rules {
                differing.push(name.clone());
            }
            if name == self.distinguishing_atom && same_atom {
                return bad(format!("atom probe of {name} does not separate the pair"));
            }
        }
        if differing != [self.distinguishing_atom.clone()] {
            return bad(format!("probes charged to {differing:?} differ"));
        }
        let phi: Vec<&String> = self.update.tail.iter().chain([&self.update.head]).collect();
        if !phi.contains(&&self.distinguishing_atom) {
            return bad("distinguishing atom is outside the update witness set".into());
        }
        if self.plus.correct_surface(&self.update) == self.minus.correct_surface(&self.update) {
            return bad("post-update surfaces coincide".into());
        }
        Ok(())
    }
}

/// Output of one strategy run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbedRun {
    pub surface: NamedSurface,
    pub probes: usize,
    /// Atom probes of `Φ(u)` issued before anything else.
    pub frontier_probes: usize,
}

/// A maintenance strategy that sees the instance only through probes.
pub trait Strategy {
    fn name(&self) -> String;
    fn run(&self, inst: &mut OracleInstance, update: &EdgeUpdate) -> Result<ProbedRun, GapError>;
}

/// Probes `Φ(u) = S_u ∪ {v_u}` first, then reads the remaining atoms and
/// every rule, and evaluates the updated surface on what it learned.
#[derive(Debug, Clone, Copy, Default)]
pub struct DRedFrontier;

/// Like [`DRedFrontier`] but never probes `skip` (neither its atom probe nor
/// the rules into it); it assumes `skip ∉ A` and that no rule derives it.
#[derive(Debug, Clone)]
pub struct PhiAvoiding {
    pub skip: String,
}

impl Strategy for DRedFrontier {
    fn name(&self) -> String {
        "dred".into()
    }

    fn run(&self, inst: &mut OracleInstance, update: &EdgeUpdate) -> Result<ProbedRun, GapError> {
        learn_and_evaluate(inst, update, None)
    }
}

impl Strategy for PhiAvoiding {
    fn name(&self) -> String {
        format!("avoid:{}", self.skip)
    }

    fn run(&self, inst: &mut OracleInstance, update: &EdgeUpdate) -> Result<ProbedRun, GapError> {
        learn_and_evaluate(inst, update, Some(&self.skip))
    }
}

fn learn_and_evaluate(inst: &mut OracleInstance, update: &EdgeUpdate, skip: Option<&str>) -> Result<ProbedRun, GapError> {
    let start = inst.probe_count();
    let names = inst.atom_names();
    let mut order: Vec<String> = Vec::new();
    for x in update.tail.iter().chain([&update.head]) {
        if !order.contains(x) {
            order.push(x.clone());
        }
    }
    let frontier_len = order.len();
    for x in &names {
        if !order.contains(x) {
            order.push(x.clone());
        }
    }

    let atoms = AtomTable::from_names(names.iter().cloned());
    let mut a = AtomSet::new();
    let mut frontier_probes = 0;
    for (i, x) in order.iter().enumerate() {
        if Some(x.as_str()) == skip {
            continue;
        }
        let ans = inst.probe_atom(x)?;
        if i < frontier_len {
            frontier_probes += 1;
        }
        if ans.in_a {
            a.insert(atoms.get(x).expect("name from the universe"));
        }
    }
    let mut h = Hypergraph::new(atoms.clone());
    for x in &order {
        if Some(x.as_str()) == skip {
            continue;
        }
        for r in inst.probe_rules_into(x)? {
            let tail = r.tail.iter().map(|t| atoms.get(t).expect("name from the universe"));
            let e = Hyperedge::new(tail, atoms.get(&r.head).expect("name from the universe")).expect("probed rule is well formed");
            h.add_edge(e).expect("rules of one head are distinct");
        }
    }
    let sm = SafetyModel::new(h, AtomSet::new()).expect("no forbidden atoms");
    let mut st = MaintainedState::new(sm, a, names.len() + 1);
    st.certify = false;
    st.insert_named(update)?;
    Ok(ProbedRun {
        surface: NamedSurface::from_surface(&st.surface(), st.model().atoms()),
        probes: inst.probe_count() - start,
        frontier_probes,
    })
}

pub const PROBE_CSV_HEADER: &str = "kind,k,j,strategy,probes,correct_plus,correct_minus";
pub const PROBE_CSV_SPLIT_COLUMNS: &str = ",frontier_probes,propagation_probes";

/// One strategy on both instances of a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeRow {
    pub kind: PairKind,
    pub k: usize,
    pub j: usize,
    pub strategy: String,
    /// Probes on the plus instance (the minus run is reported when larger).
    pub probes: usize,
    pub frontier_probes: usize,
    pub correct_plus: bool,
    pub correct_minus: bool,
    /// Both runs produced the same surface.
    pub same_output: bool,
}

impl ProbeRow {
    pub fn csv_row(&self, split: bool) -> String {
        let mut row = format!(
            "{},{},{},{},{},{},{}",
            self.kind,
            self.k,
            self.j,
            self.strategy,
            self.probes,
            u8::from(self.correct_plus),
            u8::from(self.correct_minus)
        );
        if split {
            row.push_str(&format!(",{},{}", self.frontier_probes, self.probes - self.frontier_probes));
        }
        row
    }
}

pub fn run_probed(strategy: &dyn Strategy, pair: &InstancePair) -> Result<ProbeRow, GapError> {
    let (mut plus, mut minus) = (pair.plus.clone(), pair.minus.clone());
    plus.reset_log();
    minus.reset_log();
    let rp = strategy.run(&mut plus, &pair.update)?;
    let rm = strategy.run(&mut minus, &pair.update)?;
    let (probes, frontier_probes) = if rm.probes > rp.probes {
        (rm.probes, rm.frontier_probes)
    } else {
        (rp.probes, rp.frontier_probes)
    };
    Ok(ProbeRow {
        kind: pair.kind,
        k: pair.k,
        j: pair.j,
        strategy: strategy.name(),
        probes,
        frontier_probes,
        correct_plus: rp.surface == pair.plus.correct_surface(&pair.update),
        correct_minus: rm.surface == pair.minus.correct_surface(&pair.update),
        same_output: rp.surface == rm.surface,
    })
}

/// Every TAIL pair `(k, j)` and the HEAD pair for each `k` in `ks`, each run
/// with the DRed strategy and with the strategy avoiding the pair's
/// distinguishing atom.
pub fn probe_experiment(ks: impl IntoIterator<Item = usize>) -> Result<Vec<ProbeRow>, GapError> {
    let mut rows = Vec::new();
    for k in ks {
        let mut pairs: Vec<InstancePair> = (1..=k).map(|j| gen_pair(PairKind::Tail, k, j)).collect::<Result<_, _>>()?;
        pairs.push(gen_pair(PairKind::Head, k, 0)?);
        for pair in &pairs {
            rows.push(run_probed(&DRedFrontier, pair)?);
            rows.push(run_probed(&PhiAvoiding { skip: pair.distinguishing_atom.clone() }, pair)?);
        }
    }
    Ok(rows)
}

pub const GAP_CSV_HEADER: &str = "n,incr_rederivations,incr_wall_ns,naive_closure_evals,naive_wall_ns";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapRow {
    pub n: usize,
    pub incr_rederivations: usize,
    pub incr_wall_ns: u128,
    pub naive_closure_evals: usize,
    pub naive_wall_ns: u128,
}

impl GapRow {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.n, self.incr_rederivations, self.incr_wall_ns, self.naive_closure_evals, self.naive_wall_ns
        )
    }
}

fn median(mut v: Vec<u128>) -> u128 {
    v.sort_unstable();
    v.get(v.len() / 2).copied().unwrap_or(0)
}

/// For each `n`: build HPRIME twice, apply its update incrementally on one
/// copy and naively on the other, check both surfaces against a scratch
/// recomputation, and keep median wall times over `trials` runs.
pub fn run_gap_bench(sizes: &[usize], trials: usize, k_param: usize) -> Result<Vec<GapRow>, GapError> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let fam = gen_family(FamilyKind::HPrime, n)?;
        let update = Update::Insert(fam.update.clone());
        let mut incr_walls = Vec::new();
        let mut naive_walls = Vec::new();
        let mut counters = None;
        for _ in 0..trials.max(1) {
            let mut inc = MaintainedState::new(fam.sm.clone(), fam.a.clone(), k_param);
            inc.certify = false;
            let mut naive = inc.clone();
            let ri = inc.apply(&update)?;
            let rn = naive.apply_naive(&update)?;
            let scratch = audit_surface(inc.model(), inc.config(), k_param);
            if inc.surface() != scratch || naive.surface() != scratch || inc.closed() != naive.closed() {
                return Err(GapError::OracleMismatch(n));
            }
            incr_walls.push(ri.wall_nanos);
            naive_walls.push(rn.wall_nanos);
            counters = Some((ri.rederivations, rn.closure_evals));
        }
        let (incr_rederivations, naive_closure_evals) = counters.expect("at least one trial");
        rows.push(GapRow {
            n,
            incr_rederivations,
            incr_wall_ns: median(incr_walls),
            naive_closure_evals,
            naive_wall_ns: median(naive_walls),
        });
    }
    Ok(rows)
}
