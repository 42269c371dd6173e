// Brute-force reference implementations. Each one restates a definition as
// directly as possible so it can be trusted without reading the library.
#![allow(dead_code)]

use capsafe::datalog::Program;
use capsafe::gen::{atom_names, random_positive_program};
use capsafe::hypergraph::Hyperedge;
use capsafe::incremental::{EdgeUpdate, MaintainedState, Update};
use capsafe::{AtomId, AtomSet, EdgeId, SafetyModel};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn edges(sm: &SafetyModel) -> Vec<(Vec<AtomId>, AtomId)> {
    sm.h.edges().map(|(_, e)| (e.tail().to_vec(), e.head())).collect()
}

/// Rescans every edge until nothing changes.
pub fn fixpoint(edges: &[(Vec<AtomId>, AtomId)], start: &AtomSet) -> AtomSet {
    let mut s = start.clone();
    loop {
        let mut changed = false;
        for (tail, head) in edges {
            if tail.iter().all(|t| s.contains(*t)) && s.insert(*head) {
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

pub fn closure(sm: &SafetyModel, a: &AtomSet) -> AtomSet {
    fixpoint(&edges(sm), a)
}

/// Singleton-tail edges only.
pub fn closure1(sm: &SafetyModel, a: &AtomSet) -> AtomSet {
    let singles: Vec<_> = edges(sm).into_iter().filter(|(t, _)| t.len() == 1).collect();
    fixpoint(&singles, a)
}

pub fn safe(sm: &SafetyModel, a: &AtomSet) -> bool {
    closure(sm, a).is_disjoint(&sm.forbidden)
}

pub fn subsets(universe: &AtomSet) -> Vec<AtomSet> {
    let items = universe.to_vec();
    (0u64..1 << items.len())
        .map(|mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &a)| a).collect())
        .collect()
}

/// Inclusion-minimal members of `family`, sorted.
pub fn minimal(family: Vec<AtomSet>) -> Vec<AtomSet> {
    let mut out: Vec<AtomSet> = family
        .iter()
        .filter(|s| !family.iter().any(|t| t != *s && t.is_subset(s)))
        .cloned()
        .collect();
    out.sort();
    out.dedup();
    out
}

pub fn brute_bf(sm: &SafetyModel) -> Vec<AtomSet> {
    minimal(subsets(&AtomSet::full(sm.n())).into_iter().filter(|s| !safe(sm, s)).collect())
}

pub fn brute_why(sm: &SafetyModel, universe: &AtomSet, v: AtomId) -> Vec<AtomSet> {
    minimal(subsets(universe).into_iter().filter(|s| closure(sm, s).contains(v)).collect())
}

pub fn sorted(sets: &[AtomSet]) -> Vec<AtomSet> {
    let mut v = sets.to_vec();
    v.sort();
    v
}

/// `(emergent, nmf, all gains ranked)` straight from the definitions.
pub fn surface(sm: &SafetyModel, a: &AtomSet, k: usize) -> (AtomSet, AtomSet, Vec<(AtomId, usize)>) {
    let cl = closure(sm, a);
    let cl1 = closure1(sm, a);
    let emergent: AtomSet = cl.iter().filter(|v| !a.contains(*v) && !cl1.contains(*v) && !sm.forbidden.contains(*v)).collect();
    let mut nmf = AtomSet::new();
    for (tail, _) in edges(sm) {
        let out: Vec<AtomId> = tail.iter().copied().filter(|t| !cl.contains(*t)).collect();
        if let [mu] = out[..] {
            if !sm.forbidden.contains(mu) && safe(sm, &a.with(mu)) {
                nmf.insert(mu);
            }
        }
    }
    let mut gains: Vec<(AtomId, usize)> = (0..sm.n())
        .map(AtomId::from_index)
        .filter(|v| !cl.contains(*v) && !sm.forbidden.contains(*v))
        .map(|v| {
            let g = closure(sm, &a.with(v)).iter().filter(|x| !cl.contains(*x) && !sm.forbidden.contains(*x)).count();
            (v, g)
        })
        .collect();
    gains.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(&y.0)));
    gains.truncate(k);
    (emergent, nmf, gains)
}

/// Least model of a positive program over database `d`.
pub fn least_model(p: &Program, d: &AtomSet) -> AtomSet {
    let rules: Vec<(Vec<AtomId>, AtomId)> = p
        .rules()
        .iter()
        .map(|r| {
            assert!(r.is_positive());
            (r.body.iter().map(|l| l.atom).collect(), r.head)
        })
        .collect();
    fixpoint(&rules, d)
}

/// `∀D. p1(D) ⊆ p2(D)`.
pub fn contained_everywhere(p1: &Program, p2: &Program) -> bool {
    let n = p1.atoms().len();
    subsets(&AtomSet::full(n)).iter().all(|d| least_model(p1, d).is_subset(&least_model(p2, d)))
}

/// `∀D. q ∈ p1(D) ⇒ q ∈ p2(D)`.
pub fn query_contained_everywhere(p1: &Program, p2: &Program, q: AtomId) -> bool {
    let n = p1.atoms().len();
    subsets(&AtomSet::full(n)).iter().all(|d| !least_model(p1, d).contains(q) || least_model(p2, d).contains(q))
}

/// A random insert (fresh edge) or delete (live edge).
pub fn random_update(r: &mut StdRng, st: &MaintainedState, k: usize) -> Update {
    let h = &st.model().h;
    let live: Vec<EdgeId> = h.edges().map(|(id, _)| id).collect();
    let n = h.n();
    if !live.is_empty() && r.gen_bool(0.45) {
        return Update::Delete(*live.choose(r).unwrap());
    }
    for _ in 0..1000 {
        let head = AtomId::from_index(r.gen_range(0..n));
        let others: Vec<AtomId> = (0..n).map(AtomId::from_index).filter(|&x| x != head).collect();
        let size = if others.is_empty() || r.gen_bool(0.05) { 0 } else { r.gen_range(1..=k.min(others.len())) };
        let tail: Vec<AtomId> = others.choose_multiple(r, size).copied().collect();
        let e = Hyperedge::new(tail, head).unwrap();
        if h.find_edge(&e).is_none() {
            let names = |v: AtomId| h.atoms().name(v).to_string();
            return Update::Insert(EdgeUpdate { tail: e.tail().iter().map(|&t| names(t)).collect(), head: names(head) });
        }
    }
    Update::Delete(*live.choose(r).expect("saturated model has edges"))
}

/// `p2` is `p1` with a few rules dropped, added or weakened, so containment
/// holds in a fair share of pairs.
pub fn mutate_program(r: &mut StdRng, p1: &Program, n: usize) -> Program {
    let mut rules: Vec<(Vec<AtomId>, AtomId)> =
        p1.rules().iter().map(|x| (x.body.iter().map(|l| l.atom).collect(), x.head)).collect();
    match r.gen_range(0..4) {
        0 => {
            rules.shuffle(r);
            rules.truncate(rules.len().saturating_sub(r.gen_range(0..=2)));
        }
        1 => {
            let extra = random_positive_program(r, n, 3, 2);
            rules.extend(extra.rules().iter().map(|x| (x.body.iter().map(|l| l.atom).collect(), x.head)));
        }
        2 => {
            for (body, _) in rules.iter_mut() {
                if !body.is_empty() && r.gen_bool(0.3) {
                    body.remove(r.gen_range(0..body.len()));
                }
            }
        }
        _ => {
            for (body, head) in rules.iter_mut() {
                if r.gen_bool(0.3) {
                    let extra = AtomId::from_index(r.gen_range(0..n));
                    if extra != *head && !body.contains(&extra) {
                        body.push(extra);
                    }
                }
            }
        }
    }
    rules.sort();
    rules.dedup();
    Program::positive(atom_names(n), rules).unwrap()
}
