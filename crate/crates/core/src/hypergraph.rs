//! Capability hypergraphs with singleton heads and the worklist closure.
//!
//! Raw hyperarcs `(S, T)` are split into one [`Hyperedge`] per head atom at
//! load time. Closure keeps one missing-tail counter per edge and a FIFO queue
//! of newly derived atoms, so a full run touches every atom at most once and
//! every `(atom, edge)` tail membership at most once: `O(n + mk)`.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::atoms::{AtomId, AtomSet, AtomTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("head atom {0} also appears in the tail of its edge")]
    HeadInTail(String),
    #[error("atom {0} is outside the universe of {1} atoms")]
    UnknownAtom(AtomId, usize),
    #[error("edge {0} is already present")]
    DuplicateEdge(String),
    #[error("no live edge with id {0}")]
    UnknownEdge(EdgeId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub u32);

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn from_index(i: usize) -> Self {
        EdgeId(u32::try_from(i).expect("edge index overflows u32"))
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A hyperarc with a single head: fires `head` once every tail atom is present.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hyperedge {
    tail: Vec<AtomId>,
    head: AtomId,
}

impl Hyperedge {
    /// Builds an edge; the tail is sorted and deduplicated.
    pub fn new(tail: impl IntoIterator<Item = AtomId>, head: AtomId) -> Result<Self, HypergraphError> {
        let mut tail: Vec<AtomId> = tail.into_iter().collect();
        tail.sort_unstable();
        tail.dedup();
        if tail.binary_search(&head).is_ok() {
            return Err(HypergraphError::HeadInTail(head.to_string()));
        }
        Ok(Hyperedge { tail, head })
    }

    pub fn tail(&self) -> &[AtomId] {
        &self.tail
    }

    pub fn head(&self) -> AtomId {
        self.head
    }

    pub fn tail_set(&self) -> AtomSet {
        self.tail.iter().collect()
    }

    fn max_atom(&self) -> AtomId {
        self.tail.last().copied().map_or(self.head, |t| t.max(self.head))
    }
}

/// A hyperarc as written in a model file: any number of heads.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub tail: Vec<AtomId>,
    pub heads: Vec<AtomId>,
}

/// `H = (V, F)` with singleton heads, per-atom tail and head indexes.
///
/// Edge ids are stable: removing an edge leaves a tombstone so the ids of
/// later edges never shift.
#[derive(Debug, Clone, Default)]
pub struct Hypergraph {
    atoms: AtomTable,
    edges: Vec<Option<Hyperedge>>,
    tail_index: Vec<Vec<EdgeId>>,
    head_index: Vec<Vec<EdgeId>>,
    lookup: HashMap<Hyperedge, EdgeId>,
    // tail_sizes[s] = number of live edges with |tail| = s
    tail_sizes: Vec<usize>,
    live: usize,
}

impl Hypergraph {
    /// An edgeless hypergraph over `atoms`.
    pub fn new(atoms: AtomTable) -> Self {
        let n = atoms.len();
        Hypergraph {
            atoms,
            tail_index: vec![Vec::new(); n],
            head_index: vec![Vec::new(); n],
            ..Default::default()
        }
    }

    /// Splits every raw hyperarc into singleton-head edges. Repeated
    /// `(tail, head)` pairs collapse to one edge.
    pub fn normalize(atoms: AtomTable, raw: &[RawEdge]) -> Result<Self, HypergraphError> {
        let mut h = Hypergraph::new(atoms);
        for r in raw {
            for &head in &r.heads {
                if r.tail.contains(&head) {
                    return Err(HypergraphError::HeadInTail(h.atoms.name(head).to_string()));
                }
            }
            for &head in &r.heads {
                let e = Hyperedge::new(r.tail.iter().copied(), head)?;
                match h.add_edge(e) {
                    Ok(_) | Err(HypergraphError::DuplicateEdge(_)) => {}
                    Err(err) => return Err(err),
                }
            }
        }
        Ok(h)
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.atoms
    }

    /// Atom count `n`.
    pub fn n(&self) -> usize {
        self.atoms.len()
    }

    /// Live edge count `m`.
    pub fn m(&self) -> usize {
        self.live
    }

    /// Maximum tail size `k` over live edges.
    pub fn k(&self) -> usize {
        self.tail_sizes.iter().rposition(|&c| c > 0).unwrap_or(0)
    }

    /// Number of edge id slots ever allocated (live and removed).
    pub fn edge_slots(&self) -> usize {
        self.edges.len()
    }

    /// Interns `name`, extending the universe if it is new.
    pub fn add_atom(&mut self, name: &str) -> AtomId {
        let id = self.atoms.intern(name);
        if self.tail_index.len() < self.atoms.len() {
            self.tail_index.resize(self.atoms.len(), Vec::new());
            self.head_index.resize(self.atoms.len(), Vec::new());
        }
        id
    }

    pub fn edge(&self, id: EdgeId) -> Option<&Hyperedge> {
        self.edges.get(id.index()).and_then(Option::as_ref)
    }

    /// Live edges in id order.
    pub fn edges(&self) -> impl Iterator<Item = (EdgeId, &Hyperedge)> + Clone {
        self.edges
            .iter()
            .enumerate()
            .filter_map(|(i, e)| e.as_ref().map(|e| (EdgeId::from_index(i), e)))
    }

    pub fn find_edge(&self, e: &Hyperedge) -> Option<EdgeId> {
        self.lookup.get(e).copied()
    }

    /// Live edges whose tail contains `a`, in id order.
    pub fn edges_with_tail(&self, a: AtomId) -> &[EdgeId] {
        self.tail_index.get(a.index()).map_or(&[], Vec::as_slice)
    }

    /// Live edges whose head is `a`, in id order.
    pub fn edges_into(&self, a: AtomId) -> &[EdgeId] {
        self.head_index.get(a.index()).map_or(&[], Vec::as_slice)
    }

    pub fn describe_edge(&self, e: &Hyperedge) -> String {
        let tail: Vec<&str> = e.tail.iter().map(|&a| self.atoms.name(a)).collect();
        format!("{} -> {}", tail.join(" "), self.atoms.name(e.head))
    }

    pub fn add_edge(&mut self, e: Hyperedge) -> Result<EdgeId, HypergraphError> {
        let top = e.max_atom();
        if top.index() >= self.n() {
            return Err(HypergraphError::UnknownAtom(top, self.n()));
        }
        if self.lookup.contains_key(&e) {
            return Err(HypergraphError::DuplicateEdge(self.describe_edge(&e)));
        }
        let id = EdgeId::from_index(self.edges.len());
        for &t in &e.tail {
            self.tail_index[t.index()].push(id);
        }
        self.head_index[e.head.index()].push(id);
        if self.tail_sizes.len() <= e.tail.len() {
            self.tail_sizes.resize(e.tail.len() + 1, 0);
        }
        self.tail_sizes[e.tail.len()] += 1;
        self.lookup.insert(e.clone(), id);
        self.edges.push(Some(e));
        self.live += 1;
        Ok(id)
    }

    pub fn remove_edge(&mut self, id: EdgeId) -> Result<Hyperedge, HypergraphError> {
        let e = self
            .edges
            .get_mut(id.index())
            .and_then(Option::take)
            .ok_or(HypergraphError::UnknownEdge(id))?;
        for &t in &e.tail {
            self.tail_index[t.index()].retain(|&x| x != id);
        }
        self.head_index[e.head.index()].retain(|&x| x != id);
        self.tail_sizes[e.tail.len()] -= 1;
        self.lookup.remove(&e);
        self.live -= 1;
        Ok(e)
    }

    /// Live edges as a canonical sorted list, for structural comparisons.
    pub fn edge_list(&self) -> Vec<Hyperedge> {
        let mut v: Vec<Hyperedge> = self.edges().map(|(_, e)| e.clone()).collect();
        v.sort();
        v
    }

    /// Checks the index invariants; returns a description of the first breach.
    pub fn check_invariants(&self) -> Result<(), String> {
        let n = self.n();
        if self.tail_index.len() != n || self.head_index.len() != n {
            return Err("index length differs from atom count".into());
        }
        let mut tail_seen = vec![Vec::new(); n];
        let mut head_seen = vec![Vec::new(); n];
        let mut k = 0;
        for (id, e) in self.edges() {
            if e.tail.contains(&e.head) {
                return Err(format!("edge {id} has its head in its tail"));
            }
            for &t in &e.tail {
                tail_seen[t.index()].push(id);
            }
            head_seen[e.head.index()].push(id);
            k = k.max(e.tail.len());
        }
        if tail_seen != self.tail_index || head_seen != self.head_index {
            return Err("tail/head index out of sync with edges".into());
        }
        if k != self.k() || self.edges().count() != self.m() {
            return Err("recorded m or k out of sync".into());
        }
        Ok(())
    }

    /// `cl(A)`: least superset of `a` closed under firing every edge.
    pub fn closure(&self, a: &AtomSet) -> AtomSet {
        self.run(a, false, |_| true).closed
    }

    /// Closure with optional firing trace, per-atom depth and work counters.
    pub fn closure_run(&self, a: &AtomSet, want_trace: bool) -> ClosureRun {
        self.run(a, want_trace, |_| true)
    }

    /// `cl₁(A)`: closure under edges with exactly one tail atom. Fact edges
    /// (empty tail) are not singleton-tail edges and are excluded.
    pub fn closure1(&self, a: &AtomSet) -> AtomSet {
        self.run(a, false, |e| e.tail.len() == 1).closed
    }

    pub fn closure1_run(&self, a: &AtomSet, want_trace: bool) -> ClosureRun {
        self.run(a, want_trace, |e| e.tail.len() == 1)
    }

    fn run(&self, a: &AtomSet, want_trace: bool, keep: impl Fn(&Hyperedge) -> bool) -> ClosureRun {
        let n = self.n().max(a.last().map_or(0, |x| x.index() + 1));
        let mut closed = a.clone();
        let mut depth = vec![u32::MAX; n];
        let mut missing: Vec<usize> = self
            .edges
            .iter()
            .map(|e| e.as_ref().map_or(usize::MAX, |e| e.tail.len()))
            .collect();
        let mut trace = want_trace.then(FiringTrace::default);
        let mut stats = ClosureStats::default();
        let mut queue: VecDeque<AtomId> = VecDeque::new();

        for x in a.iter() {
            depth[x.index()] = 0;
            queue.push_back(x);
        }
        // Fact edges fire unconditionally, one round after the seed.
        for (id, e) in self.edges() {
            if e.tail.is_empty() && keep(e) && closed.insert(e.head) {
                depth[e.head.index()] = 1;
                stats.insertions += 1;
                queue.push_back(e.head);
                if let Some(t) = trace.as_mut() {
                    t.steps.push(FiringStep { edge: id, atom: e.head });
                }
            }
        }
        while let Some(x) = queue.pop_front() {
            let Some(out) = self.tail_index.get(x.index()) else {
                continue;
            };
            for &id in out {
                let e = self.edges[id.index()].as_ref().expect("indexed edge is live");
                if !keep(e) {
                    continue;
                }
                stats.decrements += 1;
                let slot = &mut missing[id.index()];
                *slot -= 1;
                if *slot == 0 && closed.insert(e.head) {
                    depth[e.head.index()] = depth[x.index()] + 1;
                    stats.insertions += 1;
                    queue.push_back(e.head);
                    if let Some(t) = trace.as_mut() {
                        t.steps.push(FiringStep { edge: id, atom: e.head });
                    }
                }
            }
        }
        ClosureRun { closed, trace, depth, stats }
    }
}

/// Work counters of one closure run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClosureStats {
    /// Atoms added beyond the seed set (at most `n`).
    pub insertions: usize,
    /// Missing-tail counter decrements (at most `Σ|tail| ≤ mk`).
    pub decrements: usize,
}

#[derive(Debug, Clone)]
pub struct ClosureRun {
    pub closed: AtomSet,
    pub trace: Option<FiringTrace>,
    depth: Vec<u32>,
    pub stats: ClosureStats,
}

impl ClosureRun {
    /// Round of the naive fixed-point iteration at which `a` first appears.
    pub fn depth(&self, a: AtomId) -> Option<u32> {
        self.depth.get(a.index()).copied().filter(|&d| d != u32::MAX)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FiringStep {
    pub edge: EdgeId,
    pub atom: AtomId,
}

/// Ordered edge firings; replaying them from the seed reproduces a closure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FiringTrace {
    pub steps: Vec<FiringStep>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReplayError {
    #[error("step {step}: edge {edge} does not exist")]
    MissingEdge { step: usize, edge: EdgeId },
    #[error("step {step}: edge {edge} derives a different head")]
    WrongHead { step: usize, edge: EdgeId },
    #[error("step {step}: tail of edge {edge} is not yet derived")]
    TailNotDerived { step: usize, edge: EdgeId },
}

impl FiringTrace {
    /// Re-executes the firing sequence from `base`, checking each step.
    pub fn replay(&self, h: &Hypergraph, base: &AtomSet) -> Result<AtomSet, ReplayError> {
        let mut acc = base.clone();
        for (step, s) in self.steps.iter().enumerate() {
            let e = h
                .edge(s.edge)
                .ok_or(ReplayError::MissingEdge { step, edge: s.edge })?;
            if e.head != s.atom {
                return Err(ReplayError::WrongHead { step, edge: s.edge });
            }
            if !e.tail.iter().all(|&t| acc.contains(t)) {
                return Err(ReplayError::TailNotDerived { step, edge: s.edge });
            }
            acc.insert(s.atom);
        }
        Ok(acc)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
