//! Maintenance of `cl(A)`, `cl₁(A)` and `G_F(A)` under edge insertion and
//! deletion.
//!
//! Two derivation engines run side by side, one over all edges and one over
//! singleton-tail edges only. Each keeps per-edge support counts (tail atoms
//! currently derived), the edges firing into each atom, and the set of lazy
//! edges whose tails are incomplete. Deletion is delete-and-rederive:
//! everything reachable through fired edges from the lost head is removed,
//! then atoms that still have a firing edge are put back and propagated.
//!
//! The surface is refreshed on the affected region only. Emergent membership
//! is rechecked for atoms whose closure status changed, boundary status for
//! edges touching them, and gains for candidates whose forward reach meets
//! the forward reach of the changed atoms and the updated edge. If a
//! forbidden atom changed status every candidate is recomputed.

use std::cmp::Reverse;
use std::collections::{BTreeSet, VecDeque};
use std::time::Instant;

use thiserror::Error;

use crate::audit::{self, AuditSurface};
use crate::atoms::{AtomId, AtomSet};
use crate::encoding::SafetyModel;
use crate::hypergraph::{EdgeId, Hyperedge, Hypergraph, HypergraphError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IncrementalError {
    #[error("edge {0} is already present")]
    DuplicateEdge(String),
    #[error("no live edge with id {0}")]
    UnknownEdge(EdgeId),
    #[error(transparent)]
    Hypergraph(HypergraphError),
}

impl From<HypergraphError> for IncrementalError {
    fn from(e: HypergraphError) -> Self {
        match e {
            HypergraphError::DuplicateEdge(s) => IncrementalError::DuplicateEdge(s),
            HypergraphError::UnknownEdge(id) => IncrementalError::UnknownEdge(id),
            other => IncrementalError::Hypergraph(other),
        }
    }
}

pub const CSV_HEADER: &str = "op,cone_size,rederivations,closure_evals,wall_nanos";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpdateReport {
    pub op: String,
    /// Atoms whose closure, singleton-closure or surface status changed.
    pub cone: AtomSet,
    /// Atom insertions performed by the two engines.
    pub rederivations: usize,
    pub closure_evals: usize,
    pub probes: Option<usize>,
    pub wall_nanos: u128,
}

impl UpdateReport {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.op,
            self.cone.len(),
            self.rederivations,
            self.closure_evals,
            self.wall_nanos
        )
    }
}

/// An insertion given by atom names; unknown names extend the universe.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeUpdate {
    pub tail: Vec<String>,
    pub head: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Update {
    Insert(EdgeUpdate),
    Delete(EdgeId),
}

#[derive(Debug, Clone)]
struct Engine {
    singles_only: bool,
    closed: AtomSet,
    support: Vec<usize>,
    derived_by: Vec<Vec<EdgeId>>,
    lazy: BTreeSet<EdgeId>,
}

impl Engine {
    fn build(h: &Hypergraph, a: &AtomSet, singles_only: bool) -> Self {
        let closed = if singles_only { h.closure1(a) } else { h.closure(a) };
        let mut eng = Engine {
            singles_only,
            closed,
            support: vec![0; h.edge_slots()],
            derived_by: vec![Vec::new(); h.n()],
            lazy: BTreeSet::new(),
        };
        for (id, e) in h.edges() {
            if !eng.keeps(e) {
                continue;
            }
            let s = e.tail().iter().filter(|t| eng.closed.contains(**t)).count();
            eng.support[id.index()] = s;
            if s == e.tail().len() {
                eng.derived_by[e.head().index()].push(id);
            } else {
                eng.lazy.insert(id);
            }
        }
        eng
    }

    fn keeps(&self, e: &Hyperedge) -> bool {
        !self.singles_only || e.tail().len() == 1
    }

    fn grow(&mut self, h: &Hypergraph) {
        self.support.resize(h.edge_slots(), 0);
        self.derived_by.resize(h.n(), Vec::new());
    }

    /// Forward propagation from atoms already inserted into `closed`.
    fn propagate(&mut self, h: &Hypergraph, mut queue: VecDeque<AtomId>, skip: Option<EdgeId>, changed: &mut Vec<AtomId>) -> usize {
        let mut inserted = 0;
        while let Some(x) = queue.pop_front() {
            for &f in h.edges_with_tail(x) {
                if Some(f) == skip {
                    continue;
                }
                let e = h.edge(f).expect("indexed edge is live");
                if !self.keeps(e) {
                    continue;
                }
                self.support[f.index()] += 1;
                if self.support[f.index()] == e.tail().len() {
                    self.lazy.remove(&f);
                    self.derived_by[e.head().index()].push(f);
                    if self.closed.insert(e.head()) {
                        inserted += 1;
                        changed.push(e.head());
                        queue.push_back(e.head());
                    }
                }
            }
        }
        inserted
    }

    fn insert(&mut self, h: &Hypergraph, id: EdgeId, changed: &mut Vec<AtomId>) -> usize {
        self.grow(h);
        let e = h.edge(id).expect("inserted edge is live");
        if !self.keeps(e) {
            return 0;
        }
        let s = e.tail().iter().filter(|t| self.closed.contains(**t)).count();
        self.support[id.index()] = s;
        if s < e.tail().len() {
            self.lazy.insert(id);
            return 0;
        }
        self.derived_by[e.head().index()].push(id);
        if !self.closed.insert(e.head()) {
            return 0;
        }
        changed.push(e.head());
        1 + self.propagate(h, VecDeque::from([e.head()]), None, changed)
    }

    /// Delete-and-rederive with `id` still present in `h` but ignored.
    fn delete(&mut self, h: &Hypergraph, id: EdgeId, a: &AtomSet, changed: &mut Vec<AtomId>) -> usize {
        let e = h.edge(id).expect("deleted edge is live");
        if !self.keeps(e) {
            return 0;
        }
        self.support[id.index()] = 0;
        if self.lazy.remove(&id) {
            return 0;
        }
        let head = e.head();
        self.derived_by[head.index()].retain(|&f| f != id);
        if a.contains(head) {
            return 0;
        }

        // over-delete
        let mut marked = AtomSet::singleton(head);
        let mut order = vec![head];
        let mut i = 0;
        while i < order.len() {
            let x = order[i];
            i += 1;
            for &f in h.edges_with_tail(x) {
                let fe = h.edge(f).expect("indexed edge is live");
                if f == id || !self.keeps(fe) || self.support[f.index()] != fe.tail().len() {
                    continue;
                }
                let y = fe.head();
                if !a.contains(y) && marked.insert(y) {
                    order.push(y);
                }
            }
        }
        for &x in &order {
            self.closed.remove(x);
        }
        for &x in &order {
            for &f in h.edges_with_tail(x) {
                let fe = h.edge(f).expect("indexed edge is live");
                if f == id || !self.keeps(fe) {
                    continue;
                }
                if self.support[f.index()] == fe.tail().len() {
                    self.derived_by[fe.head().index()].retain(|&g| g != f);
                    self.lazy.insert(f);
                }
                self.support[f.index()] -= 1;
            }
        }

        // re-derive from edges that still fire
        let mut queue = VecDeque::new();
        for &x in &order {
            if !self.derived_by[x.index()].is_empty() {
                self.closed.insert(x);
                queue.push_back(x);
            }
        }
        let mut back = Vec::new();
        let seeded = queue.len();
        let rederived = seeded + self.propagate(h, queue, Some(id), &mut back);
        changed.extend(order.into_iter().filter(|x| !self.closed.contains(*x)));
        rederived
    }

    fn check(&self, h: &Hypergraph, a: &AtomSet) -> Result<(), String> {
        let fresh = Engine::build(h, a, self.singles_only);
        let what = if self.singles_only { "cl1" } else { "cl" };
        if fresh.closed != self.closed {
            return Err(format!("{what}: maintained {:?} vs scratch {:?}", self.closed, fresh.closed));
        }
        for (id, e) in h.edges() {
            if self.keeps(e) && fresh.support[id.index()] != self.support[id.index()] {
                return Err(format!("{what}: support of edge {id} out of sync"));
            }
        }
        if fresh.lazy != self.lazy {
            return Err(format!("{what}: lazy set out of sync"));
        }
        for (x, fired) in self.derived_by.iter().enumerate() {
            let mut mine = fired.clone();
            mine.sort();
            let mut theirs = fresh.derived_by.get(x).cloned().unwrap_or_default();
            theirs.sort();
            if mine != theirs {
                return Err(format!("{what}: derived_by of atom {x} out of sync"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub gain: usize,
    pub safe_if_added: bool,
}

/// `G_F(A)` kept in sync with an evolving hypergraph.
#[derive(Debug, Clone)]
pub struct MaintainedState {
    sm: SafetyModel,
    a: AtomSet,
    k_param: usize,
    full: Engine,
    single: Engine,
    boundary_of: Vec<Option<AtomId>>,
    nmf_count: Vec<usize>,
    cand: Vec<Option<Candidate>>,
    ranking: BTreeSet<(Reverse<usize>, AtomId)>,
    emergent: AtomSet,
    nmf: AtomSet,
    /// Compare against a from-scratch recomputation after every update.
    pub certify: bool,
}

impl MaintainedState {
    pub fn new(sm: SafetyModel, a: AtomSet, k_param: usize) -> Self {
        let full = Engine::build(&sm.h, &a, false);
        let single = Engine::build(&sm.h, &a, true);
        let mut st = MaintainedState {
            sm,
            a,
            k_param,
            full,
            single,
            boundary_of: Vec::new(),
            nmf_count: Vec::new(),
            cand: Vec::new(),
            ranking: BTreeSet::new(),
            emergent: AtomSet::new(),
            nmf: AtomSet::new(),
            certify: cfg!(debug_assertions),
        };
        st.rebuild_surface();
        st
    }

    pub fn model(&self) -> &SafetyModel {
        &self.sm
    }

    pub fn config(&self) -> &AtomSet {
        &self.a
    }

    pub fn k_param(&self) -> usize {
        self.k_param
    }

    pub fn closed(&self) -> &AtomSet {
        &self.full.closed
    }

    pub fn closed1(&self) -> &AtomSet {
        &self.single.closed
    }

    pub fn lazy_edges(&self) -> &BTreeSet<EdgeId> {
        &self.full.lazy
    }

    pub fn candidate(&self, v: AtomId) -> Option<Candidate> {
        self.cand.get(v.index()).copied().flatten()
    }

    pub fn surface(&self) -> AuditSurface {
        AuditSurface {
            emergent: self.emergent.clone(),
            nmf: self.nmf.clone(),
            topk: self
                .ranking
                .iter()
                .take(self.k_param)
                .map(|&(Reverse(g), v)| (v, g))
                .collect(),
            k_param: self.k_param,
        }
    }

    fn grow(&mut self) {
        let n = self.sm.n();
        self.boundary_of.resize(self.sm.h.edge_slots(), None);
        self.nmf_count.resize(n, 0);
        self.cand.resize(n, None);
        self.full.grow(&self.sm.h);
        self.single.grow(&self.sm.h);
    }

    /// Returns the number of closure evaluations spent.
    fn rebuild_surface(&mut self) -> usize {
        self.grow();
        self.emergent = audit::emergent_from(&self.sm, &self.a, &self.full.closed, &self.single.closed);
        self.boundary_of.iter_mut().for_each(|b| *b = None);
        self.nmf_count.iter_mut().for_each(|c| *c = 0);
        for b in audit::boundary(&self.sm, &self.full.closed) {
            self.boundary_of[b.edge.index()] = Some(b.missing);
            self.nmf_count[b.missing.index()] += 1;
        }
        self.ranking.clear();
        self.cand.iter_mut().for_each(|c| *c = None);
        let mut evals = 0;
        for v in self.sm.atoms().ids().collect::<Vec<_>>() {
            evals += usize::from(self.recompute_candidate(v));
        }
        self.nmf = self.sm.atoms().ids().filter(|&v| self.nmf_member(v)).collect();
        evals
    }

    fn nmf_member(&self, v: AtomId) -> bool {
        self.nmf_count[v.index()] > 0 && self.candidate(v).is_some_and(|c| c.safe_if_added)
    }

    /// Updates candidate info and ranking for `v`; returns whether a closure
    /// was evaluated.
    fn recompute_candidate(&mut self, v: AtomId) -> bool {
        let is_cand = !self.full.closed.contains(v) && !self.sm.forbidden.contains(v);
        let next = is_cand.then(|| {
            let x = self.sm.h.closure(&self.a.with(v));
            Candidate {
                gain: x.iter().filter(|y| !self.full.closed.contains(*y) && !self.sm.forbidden.contains(*y)).count(),
                safe_if_added: x.is_disjoint(&self.sm.forbidden),
            }
        });
        let prev = std::mem::replace(&mut self.cand[v.index()], next);
        if let Some(p) = prev {
            self.ranking.remove(&(Reverse(p.gain), v));
        }
        if let Some(c) = next {
            self.ranking.insert((Reverse(c.gain), v));
        }
        is_cand
    }

    /// Surface refresh after the engines have absorbed an update of `edge`
    /// (`id` is its slot, possibly no longer live).
    fn refresh(&mut self, edge: &Hyperedge, id: EdgeId, changed: &[AtomId], changed1: &[AtomId]) -> (AtomSet, usize) {
        self.grow();
        let mut cone: AtomSet = changed.iter().chain(changed1).copied().collect();

        for &x in changed.iter().chain(changed1) {
            let now = self.full.closed.contains(x)
                && !self.a.contains(x)
                && !self.single.closed.contains(x)
                && !self.sm.forbidden.contains(x);
            if now != self.emergent.contains(x) {
                if now {
                    self.emergent.insert(x);
                } else {
                    self.emergent.remove(x);
                }
                cone.insert(x);
            }
        }

        let mut recheck: Vec<AtomId> = Vec::new();
        let mut edges: BTreeSet<EdgeId> = BTreeSet::from([id]);
        for &x in changed {
            edges.extend(self.sm.h.edges_with_tail(x).iter().copied());
        }
        for f in edges {
            let next = self.sm.h.edge(f).and_then(|e| {
                let len = e.tail().len();
                (len > 0 && self.full.support[f.index()] + 1 == len)
                    .then(|| *e.tail().iter().find(|t| !self.full.closed.contains(**t)).expect("one tail atom missing"))
            });
            let prev = std::mem::replace(&mut self.boundary_of[f.index()], next);
            if prev != next {
                if let Some(p) = prev {
                    self.nmf_count[p.index()] -= 1;
                    recheck.push(p);
                }
                if let Some(q) = next {
                    self.nmf_count[q.index()] += 1;
                    recheck.push(q);
                }
            }
        }

        let changed_set: AtomSet = changed.iter().copied().collect();
        let scope: Vec<AtomId> = if !changed_set.is_disjoint(&self.sm.forbidden) {
            self.sm.atoms().ids().collect()
        } else {
            let mut seeds = changed_set;
            seeds.extend(edge.tail().iter().copied());
            seeds.insert(edge.head());
            let forward = reach(&self.sm.h, &seeds, true);
            reach(&self.sm.h, &forward, false).to_vec()
        };
        let mut evals = 0;
        for v in scope {
            let before = self.candidate(v);
            evals += usize::from(self.recompute_candidate(v));
            if self.candidate(v) != before {
                cone.insert(v);
                recheck.push(v);
            }
        }

        for v in recheck {
            let now = self.nmf_member(v);
            if now != self.nmf.contains(v) {
                if now {
                    self.nmf.insert(v);
                } else {
                    self.nmf.remove(v);
                }
                cone.insert(v);
            }
        }
        (cone, evals)
    }

    /// Inserts an edge over existing atoms.
    pub fn insert_edge(&mut self, e: Hyperedge) -> Result<UpdateReport, IncrementalError> {
        let start = Instant::now();
        let id = self.sm.h.add_edge(e.clone())?;
        let (mut changed, mut changed1) = (Vec::new(), Vec::new());
        let mut rederivations = self.full.insert(&self.sm.h, id, &mut changed);
        rederivations += self.single.insert(&self.sm.h, id, &mut changed1);
        let (cone, closure_evals) = self.refresh(&e, id, &changed, &changed1);
        let report = UpdateReport {
            op: "insert".into(),
            cone,
            rederivations,
            closure_evals,
            probes: None,
            wall_nanos: start.elapsed().as_nanos(),
        };
        self.certify_now();
        Ok(report)
    }

    /// Inserts an edge given by names, interning fresh atoms first.
    pub fn insert_named(&mut self, u: &EdgeUpdate) -> Result<UpdateReport, IncrementalError> {
        let e = self.resolve(u)?;
        self.insert_edge(e)
    }

    /// Interns the atoms of `u` and builds its edge.
    pub fn resolve(&mut self, u: &EdgeUpdate) -> Result<Hyperedge, IncrementalError> {
        let tail: Vec<AtomId> = u.tail.iter().map(|t| self.sm.h.add_atom(t)).collect();
        let head = self.sm.h.add_atom(&u.head);
        self.grow();
        Ok(Hyperedge::new(tail, head)?)
    }

    pub fn delete_edge(&mut self, id: EdgeId) -> Result<UpdateReport, IncrementalError> {
        let start = Instant::now();
        let e = self.sm.h.edge(id).cloned().ok_or(IncrementalError::UnknownEdge(id))?;
        let (mut changed, mut changed1) = (Vec::new(), Vec::new());
        let mut rederivations = self.full.delete(&self.sm.h, id, &self.a, &mut changed);
        rederivations += self.single.delete(&self.sm.h, id, &self.a, &mut changed1);
        self.sm.h.remove_edge(id)?;
        let (cone, closure_evals) = self.refresh(&e, id, &changed, &changed1);
        let report = UpdateReport {
            op: "delete".into(),
            cone,
            rederivations,
            closure_evals,
            probes: None,
            wall_nanos: start.elapsed().as_nanos(),
        };
        self.certify_now();
        Ok(report)
    }

    pub fn apply(&mut self, u: &Update) -> Result<UpdateReport, IncrementalError> {
        match u {
            Update::Insert(eu) => self.insert_named(eu),
            Update::Delete(id) => self.delete_edge(*id),
        }
    }

    /// Baseline: drop every cache and rebuild the closure and the surface
    /// from their definitions. Gains are evaluated for every atom outside
    /// `A` before the candidate filter is applied, one closure each.
    pub fn naive_recompute(&mut self) -> UpdateReport {
        let start = Instant::now();
        let h = &self.sm.h;
        let run = h.closure_run(&self.a, false);
        let run1 = h.closure1_run(&self.a, false);
        let rederivations = run.stats.insertions + run1.stats.insertions;
        let cl = run.closed;
        let blocked = cl.union(&self.sm.forbidden);
        let mut evals = 1;
        let mut cand = vec![None; self.sm.n()];
        for v in h.atoms().ids() {
            if self.a.contains(v) {
                continue;
            }
            let x = h.closure(&self.a.with(v));
            evals += 1;
            if !blocked.contains(v) {
                cand[v.index()] = Some(Candidate {
                    gain: x.difference(&blocked).len(),
                    safe_if_added: x.is_disjoint(&self.sm.forbidden),
                });
            }
        }
        self.full = Engine::build(h, &self.a, false);
        self.single = Engine::build(h, &self.a, true);
        self.grow();
        self.emergent = audit::emergent_from(&self.sm, &self.a, &cl, &run1.closed);
        self.boundary_of.iter_mut().for_each(|b| *b = None);
        self.nmf_count.iter_mut().for_each(|c| *c = 0);
        for b in audit::boundary(&self.sm, &cl) {
            self.boundary_of[b.edge.index()] = Some(b.missing);
            self.nmf_count[b.missing.index()] += 1;
        }
        self.ranking = cand
            .iter()
            .enumerate()
            .filter_map(|(i, c)| c.map(|c| (Reverse(c.gain), AtomId::from_index(i))))
            .collect();
        self.cand = cand;
        self.nmf = self.sm.atoms().ids().filter(|&v| self.nmf_member(v)).collect();
        let report = UpdateReport {
            op: "naive".into(),
            cone: AtomSet::full(self.sm.n()),
            rederivations,
            closure_evals: evals,
            probes: None,
            wall_nanos: start.elapsed().as_nanos(),
        };
        self.certify_now();
        report
    }

    /// Applies the edge change without maintenance, then recomputes naively.
    pub fn apply_naive(&mut self, u: &Update) -> Result<UpdateReport, IncrementalError> {
        let start = Instant::now();
        match u {
            Update::Insert(eu) => {
                let e = self.resolve(eu)?;
                self.sm.h.add_edge(e)?;
            }
            Update::Delete(id) => {
                self.sm.h.remove_edge(*id)?;
            }
        }
        let mut r = self.naive_recompute();
        r.wall_nanos = start.elapsed().as_nanos();
        Ok(r)
    }

    fn certify_now(&self) {
        if self.certify {
            if let Err(msg) = self.check() {
                panic!("maintained state diverged from scratch: {msg}");
            }
        }
    }

    /// Compares every maintained structure with a from-scratch rebuild.
    pub fn check(&self) -> Result<(), String> {
        self.sm.h.check_invariants()?;
        self.full.check(&self.sm.h, &self.a)?;
        self.single.check(&self.sm.h, &self.a)?;
        let scratch = audit::audit_surface(&self.sm, &self.a, self.k_param);
        let mine = self.surface();
        if scratch != mine {
            return Err(format!("surface: maintained {mine:?} vs scratch {scratch:?}"));
        }
        Ok(())
    }
}

/// Reachability in the graph with an arc `s → head(e)` for every tail atom
/// `s` of every edge `e`; `forward = false` follows arcs backwards.
fn reach(h: &Hypergraph, seeds: &AtomSet, forward: bool) -> AtomSet {
    let mut seen = seeds.clone();
    let mut stack = seeds.to_vec();
    while let Some(x) = stack.pop() {
        if forward {
            for &f in h.edges_with_tail(x) {
                let y = h.edge(f).expect("indexed edge is live").head();
                if seen.insert(y) {
                    stack.push(y);
                }
            }
        } else {
            for &f in h.edges_into(x) {
                for &t in h.edge(f).expect("indexed edge is live").tail() {
                    if seen.insert(t) {
                        stack.push(t);
                    }
                }
            }
        }
    }
    seen
}
