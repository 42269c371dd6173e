//! Seeded random models, configurations and programs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::atoms::{AtomId, AtomSet, AtomTable};
use crate::datalog::Program;
use crate::encoding::SafetyModel;
use crate::hypergraph::{Hyperedge, Hypergraph};

#[derive(Debug, Clone, Copy)]
pub struct GenParams {
    pub n: usize,
    pub m: usize,
    /// Maximum tail size.
    pub k: usize,
    /// Number of forbidden atoms.
    pub forbidden: usize,
    /// Chance that an edge is a fact (empty tail).
    pub fact_prob: f64,
}

impl GenParams {
    pub fn new(n: usize, m: usize, k: usize) -> Self {
        GenParams { n, m, k, forbidden: 1, fact_prob: 0.0 }
    }
}

pub fn atom_names(n: usize) -> AtomTable {
    AtomTable::from_names((0..n).map(|i| format!("v{i}")))
}

/// Up to `m` distinct edges; draws that repeat an edge are dropped.
pub fn random_edges<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize, fact_prob: f64) -> Vec<Hyperedge> {
    let mut out: Vec<Hyperedge> = Vec::with_capacity(m);
    if n == 0 {
        return out;
    }
    let ids: Vec<AtomId> = (0..n).map(AtomId::from_index).collect();
    for _ in 0..m {
        let head = ids[rng.gen_range(0..n)];
        let size = if k == 0 || n == 1 || rng.gen_bool(fact_prob) { 0 } else { rng.gen_range(1..=k.min(n - 1)) };
        let others: Vec<AtomId> = ids.iter().copied().filter(|&a| a != head).collect();
        let tail: Vec<AtomId> = others.choose_multiple(rng, size).copied().collect();
        let e = Hyperedge::new(tail, head).expect("head excluded from tail");
        if !out.contains(&e) {
            out.push(e);
        }
    }
    out
}

pub fn random_model<R: Rng>(rng: &mut R, p: &GenParams) -> SafetyModel {
    let mut h = Hypergraph::new(atom_names(p.n));
    for e in random_edges(rng, p.n, p.m, p.k, p.fact_prob) {
        h.add_edge(e).expect("distinct edges over the universe");
    }
    let forbidden: AtomSet = (0..p.forbidden.min(p.n))
        .map(|_| AtomId::from_index(rng.gen_range(0..p.n)))
        .collect();
    SafetyModel::new(h, forbidden).expect("forbidden atoms in range")
}

/// Each atom joins independently with probability `density`.
pub fn random_config<R: Rng>(rng: &mut R, n: usize, density: f64) -> AtomSet {
    (0..n).filter(|_| rng.gen_bool(density)).map(AtomId::from_index).collect()
}

/// A positive stratum-0 program where every atom may be a fact.
pub fn random_positive_program<R: Rng>(rng: &mut R, n: usize, m: usize, k: usize) -> Program {
    let rules = random_edges(rng, n, m, k, 0.05)
        .into_iter()
        .map(|e| (e.tail().to_vec(), e.head()))
        .collect();
    Program::positive(atom_names(n), rules).expect("positive program")
}
