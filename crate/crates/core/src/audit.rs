//! The safe audit surface `G_F(A)` and its stratified view program.

use std::fmt::Write as _;

use thiserror::Error;

use crate::atoms::{AtomId, AtomSet, AtomTable};
use crate::datalog::{Literal, Program, Rule};
use crate::encoding::SafetyModel;
use crate::hypergraph::EdgeId;
use crate::safety::is_safe;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AuditError {
    #[error("atom {0} is already derived or forbidden, so it is not a gain candidate")]
    CandidateInvalid(AtomId),
    #[error("surfaces were computed with different k ({0} vs {1})")]
    ParamMismatch(usize, usize),
}

/// `(Emg(A) ∖ F, NMF_F(A), top-k by γ_F)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditSurface {
    pub emergent: AtomSet,
    pub nmf: AtomSet,
    /// Gain descending, then atom id ascending.
    pub topk: Vec<(AtomId, usize)>,
    pub k_param: usize,
}

/// A boundary edge and its single missing tail atom `μ(e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoundaryEdge {
    pub edge: EdgeId,
    pub missing: AtomId,
}

/// Edges with exactly one tail atom outside `closed`, in id order.
pub fn boundary(sm: &SafetyModel, closed: &AtomSet) -> Vec<BoundaryEdge> {
    sm.h
        .edges()
        .filter_map(|(id, e)| {
            let mut out = e.tail().iter().filter(|t| !closed.contains(**t));
            let first = *out.next()?;
            out.next().is_none().then_some(BoundaryEdge { edge: id, missing: first })
        })
        .collect()
}

pub fn audit_surface(sm: &SafetyModel, a: &AtomSet, k_param: usize) -> AuditSurface {
    let cl = sm.h.closure(a);
    let cl1 = sm.h.closure1(a);
    surface_from(sm, a, &cl, &cl1, k_param)
}

/// Surface given precomputed `cl(A)` and `cl₁(A)`.
pub fn surface_from(sm: &SafetyModel, a: &AtomSet, cl: &AtomSet, cl1: &AtomSet, k_param: usize) -> AuditSurface {
    let emergent = emergent_from(sm, a, cl, cl1);
    let mut nmf = AtomSet::new();
    for b in boundary(sm, cl) {
        if !nmf.contains(b.missing) && nmf_ok(sm, a, b.missing) {
            nmf.insert(b.missing);
        }
    }
    let blocked = cl.union(&sm.forbidden);
    let gains: Vec<(AtomId, usize)> = sm
        .atoms()
        .ids()
        .filter(|v| !blocked.contains(*v))
        .map(|v| (v, gain_against(sm, a, &blocked, v)))
        .collect();
    AuditSurface { emergent, nmf, topk: rank(gains, k_param), k_param }
}

pub(crate) fn emergent_from(sm: &SafetyModel, a: &AtomSet, cl: &AtomSet, cl1: &AtomSet) -> AtomSet {
    let mut e = cl.difference(a);
    e.difference_with(cl1);
    e.difference_with(&sm.forbidden);
    e
}

/// `μ ∉ F` and `A ∪ {μ}` safe.
pub(crate) fn nmf_ok(sm: &SafetyModel, a: &AtomSet, missing: AtomId) -> bool {
    !sm.forbidden.contains(missing) && is_safe(sm, &a.with(missing))
}

/// `|cl(A ∪ {v}) ∖ (cl(A) ∪ F)|` with `cl(A) ∪ F` given.
pub(crate) fn gain_against(sm: &SafetyModel, a: &AtomSet, blocked: &AtomSet, v: AtomId) -> usize {
    sm.h.closure(&a.with(v)).difference(blocked).len()
}

/// Sorts by gain descending then id ascending and keeps `k`.
pub(crate) fn rank(mut gains: Vec<(AtomId, usize)>, k: usize) -> Vec<(AtomId, usize)> {
    gains.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    gains.truncate(k);
    gains
}

/// `γ_F(v, A)`; one closure call.
pub fn marginal_gain(sm: &SafetyModel, a: &AtomSet, v: AtomId) -> Result<usize, AuditError> {
    let blocked = sm.h.closure(a).union(&sm.forbidden);
    if blocked.contains(v) || v.index() >= sm.n() {
        return Err(AuditError::CandidateInvalid(v));
    }
    Ok(gain_against(sm, a, &blocked, v))
}

/// Component-wise inclusion of two surfaces computed with the same `k`.
pub fn surface_containment(g1: &AuditSurface, g2: &AuditSurface) -> Result<bool, AuditError> {
    if g1.k_param != g2.k_param {
        return Err(AuditError::ParamMismatch(g1.k_param, g2.k_param));
    }
    let top1: AtomSet = g1.topk.iter().map(|&(v, _)| v).collect();
    let top2: AtomSet = g2.topk.iter().map(|&(v, _)| v).collect();
    Ok(g1.emergent.is_subset(&g2.emergent) && g1.nmf.is_subset(&g2.nmf) && top1.is_subset(&top2))
}

impl AuditSurface {
    /// Three labeled lines: `emergent: {..}`, `nmf: {..}`, `topk: a=3 b=1`.
    pub fn to_text(&self, atoms: &AtomTable) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "emergent: {}", atoms.format_set(&self.emergent));
        let _ = writeln!(out, "nmf: {}", atoms.format_set(&self.nmf));
        out.push_str("topk:");
        for &(v, g) in &self.topk {
            let _ = write!(out, " {}={}", atoms.name(v), g);
        }
        out.push('\n');
        out
    }
}

/// `Π_{G_F}` with handles to its output predicates.
#[derive(Debug, Clone)]
pub struct ViewProgram {
    pub program: Program,
    in_a: Vec<AtomId>,
    emergent: Vec<AtomId>,
    // (edge, μ candidate, boundary_miss atom)
    boundary_miss: Vec<(EdgeId, AtomId, AtomId)>,
}

/// Builds the view program over EDB atoms `in_A(v)`.
///
/// Stratum 0 computes `has` (closure rules plus `forbidden` rules and the
/// `forbidden(f)` facts), stratum 1 `has_single` and `all_except`, stratum 2
/// `emergent` and `boundary_miss`. Stratum 3 (NMF filter and top-k) is left
/// empty: those components are computed with direct closure calls.
pub fn build_view_program(sm: &SafetyModel) -> ViewProgram {
    let names = sm.atoms();
    let mut atoms = AtomTable::new();
    let mut rules = Vec::new();
    let n = sm.n();
    let in_a: Vec<AtomId> = names.names().iter().map(|v| atoms.intern(format!("in_A({v})"))).collect();
    let has: Vec<AtomId> = names.names().iter().map(|v| atoms.intern(format!("has({v})"))).collect();
    let rule = |body: Vec<Literal>, head: AtomId, stratum: usize| Rule { body, head, stratum };
    let pos = Literal::pos;

    for v in 0..n {
        rules.push(rule(vec![pos(in_a[v])], has[v], 0));
    }
    for (_, e) in sm.h.edges() {
        rules.push(rule(e.tail().iter().map(|t| pos(has[t.index()])).collect(), has[e.head().index()], 0));
    }
    let forbidden = atoms.intern("forbidden");
    let mut forbidden_v = vec![None; n];
    for f in sm.forbidden.iter() {
        let fv = atoms.intern(format!("forbidden({})", names.name(f)));
        forbidden_v[f.index()] = Some(fv);
        rules.push(rule(vec![], fv, 0));
        rules.push(rule(vec![pos(has[f.index()])], forbidden, 0));
    }

    let single: Vec<AtomId> = names.names().iter().map(|v| atoms.intern(format!("has_single({v})"))).collect();
    for v in 0..n {
        rules.push(rule(vec![pos(in_a[v])], single[v], 1));
    }
    let mut boundary_miss = Vec::new();
    let mut miss_rules = Vec::new();
    for (id, e) in sm.h.edges() {
        if let [s] = e.tail() {
            rules.push(rule(vec![pos(single[s.index()])], single[e.head().index()], 1));
        }
        for &s in e.tail() {
            let ae = atoms.intern(format!("all_except(e{},{})", id, names.name(s)));
            let others = e.tail().iter().filter(|&&t| t != s).map(|t| pos(has[t.index()])).collect();
            rules.push(rule(others, ae, 1));
            let bm = atoms.intern(format!("boundary_miss(e{},{})", id, names.name(s)));
            miss_rules.push(rule(vec![pos(ae), Literal::neg(has[s.index()])], bm, 2));
            boundary_miss.push((id, s, bm));
        }
    }

    let mut emergent = Vec::with_capacity(n);
    for v in 0..n {
        let em = atoms.intern(format!("emergent({})", names.name(AtomId::from_index(v))));
        let mut body = vec![pos(has[v]), Literal::neg(single[v]), Literal::neg(in_a[v])];
        if let Some(fv) = forbidden_v[v] {
            body.push(Literal::neg(fv));
        }
        rules.push(rule(body, em, 2));
        emergent.push(em);
    }
    rules.extend(miss_rules);

    let edb: AtomSet = in_a.iter().collect();
    let program = Program::with_strata(atoms, rules, edb, 4).expect("view program is stratified");
    ViewProgram { program, in_a, emergent, boundary_miss }
}

impl ViewProgram {
    pub fn edb_for(&self, a: &AtomSet) -> AtomSet {
        a.iter().map(|v| self.in_a[v.index()]).collect()
    }

    /// Emergent atoms and boundary edges read off the least model over `D_A`.
    pub fn evaluate(&self, a: &AtomSet) -> (AtomSet, Vec<BoundaryEdge>) {
        let m = self.program.eval(&self.edb_for(a)).expect("EDB is in_A atoms");
        let emergent = (0..self.emergent.len())
            .filter(|&v| m.holds(self.emergent[v]))
            .map(AtomId::from_index)
            .collect();
        let mut boundary: Vec<BoundaryEdge> = self
            .boundary_miss
            .iter()
            .filter(|(_, _, bm)| m.holds(*bm))
            .map(|&(edge, missing, _)| BoundaryEdge { edge, missing })
            .collect();
        boundary.sort();
        (emergent, boundary)
    }
}
