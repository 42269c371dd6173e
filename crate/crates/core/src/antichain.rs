//! Antichains of atom sets: the why-provenance semiring
//! `(2^{2^V}, ∪, ⋈, ∅, {∅})` with minimization after every operation.
//!
//! Also hosts the minimal-support fixed point shared by the provenance
//! tables and by exact query containment.

use std::fmt;

use crate::atoms::{AtomId, AtomSet, AtomTable};

/// Inclusion-minimal family of atom sets, kept in canonical order
/// (size, then lexicographic on indices).
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct Antichain {
    elems: Vec<AtomSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemiringOp {
    Plus,
    Times,
}

impl Antichain {
    /// The additive identity `∅`.
    pub fn zero() -> Self {
        Antichain { elems: Vec::new() }
    }

    /// The multiplicative identity `{∅}`.
    pub fn one() -> Self {
        Antichain { elems: vec![AtomSet::new()] }
    }

    pub fn singleton(s: AtomSet) -> Self {
        Antichain { elems: vec![s] }
    }

    /// Minimizes an arbitrary family.
    pub fn from_sets(sets: impl IntoIterator<Item = AtomSet>) -> Self {
        let mut elems: Vec<AtomSet> = sets.into_iter().collect();
        minimize(&mut elems);
        Antichain { elems }
    }

    pub fn elements(&self) -> &[AtomSet] {
        &self.elems
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    /// Is some element a subset of `s`?
    pub fn covers(&self, s: &AtomSet) -> bool {
        self.elems.iter().any(|e| e.is_subset(s))
    }

    pub fn contains(&self, s: &AtomSet) -> bool {
        self.elems.binary_search(s).is_ok()
    }

    /// `x ∪ y`, minimized.
    pub fn plus(&self, other: &Antichain) -> Antichain {
        Antichain::from_sets(self.elems.iter().chain(&other.elems).cloned())
    }

    /// `x ⋈ y = {a ∪ b}`, minimized.
    pub fn times(&self, other: &Antichain) -> Antichain {
        let mut out = Vec::with_capacity(self.elems.len() * other.elems.len());
        for a in &self.elems {
            for b in &other.elems {
                out.push(a.union(b));
            }
        }
        Antichain::from_sets(out)
    }

    pub fn combine(&self, other: &Antichain, op: SemiringOp) -> Antichain {
        match op {
            SemiringOp::Plus => self.plus(other),
            SemiringOp::Times => self.times(other),
        }
    }

    /// Keeps only the first `cap` elements in canonical order.
    pub(crate) fn truncate(&mut self, cap: usize) -> bool {
        let cut = self.elems.len() > cap;
        self.elems.truncate(cap);
        cut
    }

    pub fn format(&self, atoms: &AtomTable) -> String {
        let inner: Vec<String> = self.elems.iter().map(|s| atoms.format_set(s)).collect();
        format!("{{{}}}", inner.join(","))
    }
}

impl fmt::Debug for Antichain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(&self.elems).finish()
    }
}

/// Sorts canonically, drops duplicates and every proper superset.
fn minimize(sets: &mut Vec<AtomSet>) {
    sets.sort();
    sets.dedup();
    let mut kept: Vec<AtomSet> = Vec::with_capacity(sets.len());
    // Canonical order lists smaller sets first, so any subset of a candidate
    // has already been kept.
    for s in sets.drain(..) {
        if !kept.iter().any(|k| k.is_subset(&s)) {
            kept.push(s);
        }
    }
    *sets = kept;
}

/// Outcome of [`minimal_supports`].
#[derive(Debug, Clone)]
pub struct SupportTable {
    pub entries: Vec<Antichain>,
    /// Full passes over the rule list, including the final stable one.
    pub passes: usize,
    /// Passes that changed at least one entry.
    pub improving_passes: usize,
    /// Atoms whose antichain hit the cardinality budget.
    pub truncated: Vec<AtomId>,
}

/// Least fixed point of
/// `entry(v) = [v ∈ U]·{{v}} ⊕ ⨁_{(S→v)} ⨂_{s∈S} entry(s)`
/// over `n` atoms. At the fixed point `entry(v)` is the family of minimal
/// `W ⊆ universe` whose closure contains `v`.
///
/// Rules are processed in the given order each pass; entries are minimized
/// as they are combined. `cap` bounds each antichain's cardinality.
pub fn minimal_supports<'a, I>(n: usize, rules: I, universe: &AtomSet, cap: Option<usize>) -> SupportTable
where
    I: IntoIterator<Item = (&'a [AtomId], AtomId)>,
    I::IntoIter: Clone,
{
    let rules = rules.into_iter();
    let mut entries: Vec<Antichain> = (0..n)
        .map(|i| {
            let a = AtomId::from_index(i);
            if universe.contains(a) {
                Antichain::singleton(AtomSet::singleton(a))
            } else {
                Antichain::zero()
            }
        })
        .collect();
    let mut truncated = vec![false; n];
    let mut passes = 0;
    let mut improving_passes = 0;
    loop {
        passes += 1;
        let mut changed = false;
        for (tail, head) in rules.clone() {
            let mut prod = Antichain::one();
            for &s in tail {
                prod = prod.times(&entries[s.index()]);
                if prod.is_empty() {
                    break;
                }
            }
            if prod.is_empty() {
                continue;
            }
            let mut next = entries[head.index()].plus(&prod);
            if let Some(c) = cap {
                if next.truncate(c) {
                    truncated[head.index()] = true;
                }
            }
            if next != entries[head.index()] {
                entries[head.index()] = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        improving_passes += 1;
    }
    SupportTable {
        entries,
        passes,
        improving_passes,
        truncated: truncated
            .iter()
            .enumerate()
            .filter(|(_, &t)| t)
            .map(|(i, _)| AtomId::from_index(i))
            .collect(),
    }
}
