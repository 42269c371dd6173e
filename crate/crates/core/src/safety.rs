//! Safety of configurations and the minimal unsafe antichain `B(F)`.

use std::collections::HashSet;

use thiserror::Error;

use crate::antichain::Antichain;
use crate::atoms::{AtomId, AtomSet};
use crate::encoding::SafetyModel;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SafetyError {
    #[error("the minimal unsafe family was truncated; coalition checks need it complete")]
    IncompleteFamily,
}

/// `cl(A) ∩ F = ∅`.
pub fn is_safe(sm: &SafetyModel, a: &AtomSet) -> bool {
    sm.h.closure(a).is_disjoint(&sm.forbidden)
}

/// `B` is unsafe and every one-atom deletion is safe. Costs `|B| + 1`
/// closures.
pub fn bf_member(sm: &SafetyModel, b: &AtomSet) -> bool {
    !is_safe(sm, b) && b.iter().all(|x| is_safe(sm, &b.without(x)))
}

/// `B(F)`, possibly cut short by a closure budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinimalUnsafeFamily {
    pub witnesses: Antichain,
    pub complete: bool,
    pub closure_evals: usize,
}

/// Atoms with a derivation path into `F` (including `F` itself). Every atom
/// of a minimal unsafe set lies here.
pub fn backward_cone(sm: &SafetyModel) -> AtomSet {
    let mut seen = sm.forbidden.clone();
    let mut stack: Vec<AtomId> = seen.to_vec();
    while let Some(x) = stack.pop() {
        for &id in sm.h.edges_into(x) {
            let e = sm.h.edge(id).expect("indexed edge is live");
            for &t in e.tail() {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
    }
    seen
}

/// Breadth-first search of the subset lattice over the backward cone of `F`.
///
/// Level `l` tests the `l`-sets all of whose `(l−1)`-subsets were safe;
/// unsafe ones are minimal by construction, safe ones seed level `l + 1`.
/// `budget` caps the number of closure evaluations.
pub fn bf_enumerate(sm: &SafetyModel, budget: Option<usize>) -> MinimalUnsafeFamily {
    let mut evals = 1;
    if !is_safe(sm, &AtomSet::new()) {
        return MinimalUnsafeFamily { witnesses: Antichain::one(), complete: true, closure_evals: evals };
    }
    let relevant = backward_cone(sm).to_vec();
    let mut found = Vec::new();
    let mut level: Vec<Vec<AtomId>> = relevant.iter().map(|&a| vec![a]).collect();
    let mut complete = true;
    'search: while !level.is_empty() {
        let mut safe = Vec::new();
        for cand in level {
            if budget.is_some_and(|b| evals >= b) {
                complete = false;
                break 'search;
            }
            evals += 1;
            let set: AtomSet = cand.iter().collect();
            if is_safe(sm, &set) {
                safe.push(cand);
            } else {
                found.push(set);
            }
        }
        level = next_level(&safe);
    }
    MinimalUnsafeFamily { witnesses: Antichain::from_sets(found), complete, closure_evals: evals }
}

/// Apriori join: `safe` holds sorted `l`-sets in lexicographic order.
fn next_level(safe: &[Vec<AtomId>]) -> Vec<Vec<AtomId>> {
    let lookup: HashSet<&[AtomId]> = safe.iter().map(Vec::as_slice).collect();
    let mut out = Vec::new();
    for (i, x) in safe.iter().enumerate() {
        let l = x.len();
        for y in &safe[i + 1..] {
            if x[..l - 1] != y[..l - 1] {
                break;
            }
            let mut cand = x.clone();
            cand.push(y[l - 1]);
            let all_safe = (0..l - 1).all(|skip| {
                let sub: Vec<AtomId> = cand
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != skip)
                    .map(|(_, &a)| a)
                    .collect();
                lookup.contains(sub.as_slice())
            });
            if all_safe {
                out.push(cand);
            }
        }
    }
    out
}

/// Safe iff no witness of `B(F)` lies inside the union of the configurations.
pub fn coalition_safe(
    configs: &[AtomSet],
    family: &MinimalUnsafeFamily,
) -> Result<bool, SafetyError> {
    if !family.complete {
        return Err(SafetyError::IncompleteFamily);
    }
    let mut union = AtomSet::new();
    for c in configs {
        union.union_with(c);
    }
    Ok(!family.witnesses.covers(&union))
}

/// Two safe configurations with an unsafe union, cut from the first witness
/// with at least two atoms: `(B ∖ {max B}, {max B})`.
pub fn split_witness(family: &MinimalUnsafeFamily) -> Result<Option<(AtomSet, AtomSet)>, SafetyError> {
    if !family.complete {
        return Err(SafetyError::IncompleteFamily);
    }
    Ok(family.witnesses.elements().iter().find(|b| b.len() >= 2).map(|b| {
        let top = b.last().expect("non-empty witness");
        (b.without(top), AtomSet::singleton(top))
    }))
}
