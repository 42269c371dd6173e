//! Atom identifiers, dense atom sets and the name interner.
//!
//! Every analysis in this crate works over a dense universe `0..n` of atoms.
//! [`AtomSet`] is a growable bitset with O(1) membership and ascending
//! iteration; its `Ord` is the canonical "size, then lexicographic" order used
//! wherever sets of atoms must be listed deterministically.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

/// Dense index of one capability / proposition within a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AtomId(pub u32);

impl AtomId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn from_index(i: usize) -> Self {
        AtomId(u32::try_from(i).expect("atom index overflows u32"))
    }
}

impl fmt::Display for AtomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

const WORD: usize = 64;

/// A set of atoms stored as a bitset.
///
/// Invariant: `words` never ends in a zero word, so structural equality is set
/// equality regardless of how large the set once grew.
#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct AtomSet {
    words: Vec<u64>,
}

/// Configurations are plain atom sets.
pub type Config = AtomSet;

impl AtomSet {
    pub fn new() -> Self {
        AtomSet { words: Vec::new() }
    }

    pub fn singleton(a: AtomId) -> Self {
        let mut s = AtomSet::new();
        s.insert(a);
        s
    }

    /// The full universe `0..n`.
    pub fn full(n: usize) -> Self {
        (0..n).map(AtomId::from_index).collect()
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    #[inline]
    pub fn contains(&self, a: AtomId) -> bool {
        let i = a.index();
        self.words
            .get(i / WORD)
            .is_some_and(|w| w & (1u64 << (i % WORD)) != 0)
    }

    /// Inserts `a`; returns `true` if it was not already present.
    pub fn insert(&mut self, a: AtomId) -> bool {
        let i = a.index();
        let w = i / WORD;
        if w >= self.words.len() {
            self.words.resize(w + 1, 0);
        }
        let bit = 1u64 << (i % WORD);
        let fresh = self.words[w] & bit == 0;
        self.words[w] |= bit;
        fresh
    }

    /// Removes `a`; returns `true` if it was present.
    pub fn remove(&mut self, a: AtomId) -> bool {
        let i = a.index();
        let w = i / WORD;
        if w >= self.words.len() {
            return false;
        }
        let bit = 1u64 << (i % WORD);
        let present = self.words[w] & bit != 0;
        self.words[w] &= !bit;
        self.trim();
        present
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Atoms in ascending index order.
    pub fn iter(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut bits = w;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(AtomId::from_index(wi * WORD + tz))
            })
        })
    }

    /// Largest member, if any.
    pub fn last(&self) -> Option<AtomId> {
        let last = self.words.len().checked_sub(1)?;
        let w = self.words[last];
        Some(AtomId::from_index(
            last * WORD + (WORD - 1 - w.leading_zeros() as usize),
        ))
    }

    pub fn union_with(&mut self, other: &AtomSet) {
        if other.words.len() > self.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= *b;
        }
    }

    pub fn intersect_with(&mut self, other: &AtomSet) {
        self.words.truncate(other.words.len());
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= *b;
        }
        self.trim();
    }

    pub fn difference_with(&mut self, other: &AtomSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !*b;
        }
        self.trim();
    }

    pub fn union(&self, other: &AtomSet) -> AtomSet {
        let mut s = self.clone();
        s.union_with(other);
        s
    }

    pub fn intersection(&self, other: &AtomSet) -> AtomSet {
        let mut s = self.clone();
        s.intersect_with(other);
        s
    }

    pub fn difference(&self, other: &AtomSet) -> AtomSet {
        let mut s = self.clone();
        s.difference_with(other);
        s
    }

    pub fn with(&self, a: AtomId) -> AtomSet {
        let mut s = self.clone();
        s.insert(a);
        s
    }

    pub fn without(&self, a: AtomId) -> AtomSet {
        let mut s = self.clone();
        s.remove(a);
        s
    }

    pub fn is_subset(&self, other: &AtomSet) -> bool {
        self.words.len() <= other.words.len()
            && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_disjoint(&self, other: &AtomSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & b == 0)
    }

    pub fn to_vec(&self) -> Vec<AtomId> {
        self.iter().collect()
    }
}

impl FromIterator<AtomId> for AtomSet {
    fn from_iter<I: IntoIterator<Item = AtomId>>(iter: I) -> Self {
        let mut s = AtomSet::new();
        for a in iter {
            s.insert(a);
        }
        s
    }
}

impl<'a> FromIterator<&'a AtomId> for AtomSet {
    fn from_iter<I: IntoIterator<Item = &'a AtomId>>(iter: I) -> Self {
        iter.into_iter().copied().collect()
    }
}

impl Extend<AtomId> for AtomSet {
    fn extend<I: IntoIterator<Item = AtomId>>(&mut self, iter: I) {
        for a in iter {
            self.insert(a);
        }
    }
}

impl Ord for AtomSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.iter().cmp(other.iter()))
    }
}

impl PartialOrd for AtomSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for AtomSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|a| a.0)).finish()
    }
}

/// Bijective name ↔ id mapping with ids assigned densely in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AtomTable {
    names: Vec<String>,
    ids: HashMap<String, AtomId>,
}

impl AtomTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_names<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut t = AtomTable::new();
        for n in names {
            t.intern(n);
        }
        t
    }

    /// Returns the id for `name`, allocating the next id if it is new.
    pub fn intern(&mut self, name: impl Into<String>) -> AtomId {
        let name = name.into();
        if let Some(&id) = self.ids.get(&name) {
            return id;
        }
        let id = AtomId::from_index(self.names.len());
        self.ids.insert(name.clone(), id);
        self.names.push(name);
        id
    }

    pub fn get(&self, name: &str) -> Option<AtomId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: AtomId) -> &str {
        &self.names[id.index()]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = AtomId> {
        (0..self.names.len()).map(AtomId::from_index)
    }

    /// Renders a set as `{a,b,c}` using atom names.
    pub fn format_set(&self, s: &AtomSet) -> String {
        let inner: Vec<&str> = s.iter().map(|a| self.name(a)).collect();
        format!("{{{}}}", inner.join(","))
    }

    pub fn set_names(&self, s: &AtomSet) -> Vec<String> {
        s.iter().map(|a| self.name(a).to_string()).collect()
    }
}
