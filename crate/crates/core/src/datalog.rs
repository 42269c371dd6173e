//! Propositional Datalog with stratified negation.
//!
//! Evaluation runs stratum by stratum. Inside a stratum it is semi-naive in
//! its propositional form: each rule keeps a count of positive body atoms not
//! yet derived, and only atoms derived in the current round (the delta) are
//! used to decrement counters. Negative literals only mention atoms that are
//! final before the stratum starts, so they are checked once up front.
//!
//! # Text format
//!
//! ```text
//! % atoms a, b, q, r
//! % edb a, b
//! % stratum 0
//! q :- a, b.
//! % stratum 1
//! r :- q, !b.
//! ```
//!
//! Body literals are separated by top-level commas (commas nested inside
//! parentheses belong to atom names such as `all_except(e0,s1)`), a fact is
//! written `h.`, and any other `%` line is a comment. Serialization is
//! canonical: `parse(to_text(p)) == p` and `to_text(parse(t)) == t` for
//! every `t` produced by `to_text`.

use thiserror::Error;

use crate::antichain::minimal_supports;
use crate::atoms::{AtomId, AtomSet, AtomTable};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DatalogError {
    #[error("stratification violated in rule for {head}: {reason}")]
    StratificationViolation { head: String, reason: String },
    #[error("fact {0} is not an extensional atom of the program")]
    NonExtensionalFact(String),
    #[error("programs are over different atom universes")]
    UniverseMismatch,
    #[error("program contains negated literals")]
    NegationPresent,
    #[error("atom {0} is outside the program universe")]
    UnknownAtom(AtomId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: AtomId,
    pub negated: bool,
}

impl Literal {
    pub fn pos(atom: AtomId) -> Self {
        Literal { atom, negated: false }
    }

    pub fn neg(atom: AtomId) -> Self {
        Literal { atom, negated: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub body: Vec<Literal>,
    pub head: AtomId,
    pub stratum: usize,
}

impl Rule {
    /// A positive rule in stratum 0.
    pub fn horn(body: impl IntoIterator<Item = AtomId>, head: AtomId) -> Self {
        Rule {
            body: body.into_iter().map(Literal::pos).collect(),
            head,
            stratum: 0,
        }
    }

    pub fn is_positive(&self) -> bool {
        self.body.iter().all(|l| !l.negated)
    }

    fn positive_atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        self.body.iter().filter(|l| !l.negated).map(|l| l.atom)
    }
}

/// `Π = (R, D₀)`: rules over a named atom universe plus the set of atoms that
/// may appear as extensional facts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    atoms: AtomTable,
    rules: Vec<Rule>,
    strata_count: usize,
    edb: AtomSet,
    // rule indices per atom, one entry per positive body occurrence
    pos_index: Vec<Vec<usize>>,
}

impl Program {
    /// Validates ids and the stratification condition.
    pub fn new(atoms: AtomTable, rules: Vec<Rule>, edb: AtomSet) -> Result<Self, DatalogError> {
        let strata = rules.iter().map(|r| r.stratum + 1).max().unwrap_or(0);
        Self::with_strata(atoms, rules, edb, strata)
    }

    /// Like [`Program::new`] but reserves `strata_count` strata even if the
    /// top ones hold no rules.
    pub fn with_strata(
        atoms: AtomTable,
        rules: Vec<Rule>,
        edb: AtomSet,
        strata_count: usize,
    ) -> Result<Self, DatalogError> {
        let n = atoms.len();
        let check = |a: AtomId| {
            if a.index() < n {
                Ok(())
            } else {
                Err(DatalogError::UnknownAtom(a))
            }
        };
        if let Some(a) = edb.last() {
            check(a)?;
        }
        let mut defined: Vec<Option<usize>> = vec![None; n];
        for r in &rules {
            check(r.head)?;
            for l in &r.body {
                check(l.atom)?;
            }
            if r.stratum >= strata_count {
                return Err(DatalogError::StratificationViolation {
                    head: atoms.name(r.head).to_string(),
                    reason: format!("stratum {} exceeds strata count {strata_count}", r.stratum),
                });
            }
            match defined[r.head.index()] {
                Some(s) if s != r.stratum => {
                    return Err(DatalogError::StratificationViolation {
                        head: atoms.name(r.head).to_string(),
                        reason: format!("defined in strata {s} and {}", r.stratum),
                    })
                }
                _ => defined[r.head.index()] = Some(r.stratum),
            }
        }
        for r in &rules {
            for l in &r.body {
                let Some(s) = defined[l.atom.index()] else {
                    continue;
                };
                let ok = if l.negated { s < r.stratum } else { s <= r.stratum };
                if !ok {
                    return Err(DatalogError::StratificationViolation {
                        head: atoms.name(r.head).to_string(),
                        reason: format!(
                            "{}{} is defined in stratum {s}, rule is in stratum {}",
                            if l.negated { "!" } else { "" },
                            atoms.name(l.atom),
                            r.stratum
                        ),
                    });
                }
            }
        }
        let mut pos_index = vec![Vec::new(); n];
        for (i, r) in rules.iter().enumerate() {
            for a in r.positive_atoms() {
                pos_index[a.index()].push(i);
            }
        }
        Ok(Program { atoms, rules, strata_count, edb, pos_index })
    }

    /// A positive stratum-0 program where every atom may be a fact.
    pub fn positive(atoms: AtomTable, rules: Vec<(Vec<AtomId>, AtomId)>) -> Result<Self, DatalogError> {
        let edb = AtomSet::full(atoms.len());
        Self::new(atoms, rules.into_iter().map(|(b, h)| Rule::horn(b, h)).collect(), edb)
    }

    pub fn atoms(&self) -> &AtomTable {
        &self.atoms
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn strata_count(&self) -> usize {
        self.strata_count
    }

    pub fn edb_atoms(&self) -> &AtomSet {
        &self.edb
    }

    pub fn is_positive(&self) -> bool {
        self.rules.iter().all(Rule::is_positive)
    }

    /// Least (stratified) model over `edb`.
    pub fn eval(&self, edb: &AtomSet) -> Result<Model, DatalogError> {
        if let Some(bad) = edb.difference(&self.edb).iter().next() {
            let name = if bad.index() < self.atoms.len() {
                self.atoms.name(bad).to_string()
            } else {
                bad.to_string()
            };
            return Err(DatalogError::NonExtensionalFact(name));
        }
        Ok(self.eval_unchecked(edb))
    }

    fn eval_unchecked(&self, edb: &AtomSet) -> Model {
        let mut model = edb.clone();
        let mut missing: Vec<usize> = vec![0; self.rules.len()];
        let mut delta: Vec<AtomId> = Vec::new();
        for s in 0..self.strata_count {
            delta.clear();
            for (i, r) in self.rules.iter().enumerate() {
                if r.stratum != s {
                    continue;
                }
                let blocked = r.body.iter().any(|l| l.negated && model.contains(l.atom));
                if blocked {
                    missing[i] = usize::MAX;
                    continue;
                }
                missing[i] = r.positive_atoms().filter(|&a| !model.contains(a)).count();
            }
            // Counters are taken against the model at stratum entry, so heads
            // are only inserted once every counter is set.
            for (i, r) in self.rules.iter().enumerate() {
                if r.stratum == s && missing[i] == 0 && model.insert(r.head) {
                    delta.push(r.head);
                }
            }
            while let Some(a) = delta.pop() {
                for &i in &self.pos_index[a.index()] {
                    let r = &self.rules[i];
                    if r.stratum != s || missing[i] == usize::MAX || missing[i] == 0 {
                        continue;
                    }
                    missing[i] -= 1;
                    if missing[i] == 0 && model.insert(r.head) {
                        delta.push(r.head);
                    }
                }
            }
        }
        Model { true_atoms: model }
    }

    /// `T_Π(I) = I ∪ {h : body of some rule for h holds in I}`.
    pub fn immediate_consequence(&self, i: &AtomSet) -> AtomSet {
        let mut out = i.clone();
        for r in &self.rules {
            let holds = r
                .body
                .iter()
                .all(|l| i.contains(l.atom) != l.negated);
            if holds {
                out.insert(r.head);
            }
        }
        out
    }

    /// Per-rule uniform containment test: `p1(D) ⊆ p2(D)` for every database
    /// `D` over the universe iff every rule `B ⇒ h` of `p1` has `h ∈ p2(B)`.
    pub fn is_uniformly_contained(p1: &Program, p2: &Program) -> Result<bool, DatalogError> {
        check_comparable(p1, p2)?;
        Ok(p1.rules.iter().all(|r| {
            let body: AtomSet = r.positive_atoms().collect();
            p2.eval_unchecked(&body).true_atoms.contains(r.head)
        }))
    }

    /// Writes the canonical text form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut header = |key: &str, ids: &mut dyn Iterator<Item = AtomId>| {
            out.push_str("% ");
            out.push_str(key);
            for (i, a) in ids.enumerate() {
                out.push_str(if i == 0 { " " } else { ", " });
                out.push_str(self.atoms.name(a));
            }
            out.push('\n');
        };
        header("atoms", &mut self.atoms.ids());
        header("edb", &mut self.edb.iter());
        for s in 0..self.strata_count {
            out.push_str(&format!("% stratum {s}\n"));
            for r in self.rules.iter().filter(|r| r.stratum == s) {
                out.push_str(self.atoms.name(r.head));
                if !r.body.is_empty() {
                    let body: Vec<String> = r
                        .body
                        .iter()
                        .map(|l| format!("{}{}", if l.negated { "!" } else { "" }, self.atoms.name(l.atom)))
                        .collect();
                    out.push_str(" :- ");
                    out.push_str(&body.join(", "));
                }
                out.push_str(".\n");
            }
        }
        out
    }

    /// Parses the text form. Atoms not listed in `% atoms` are interned in
    /// order of first appearance; without an `% edb` line every atom is
    /// extensional.
    pub fn parse(text: &str) -> Result<Program, DatalogError> {
        let mut atoms = AtomTable::new();
        let mut edb: Option<AtomSet> = None;
        let mut rules = Vec::new();
        let mut stratum: Option<usize> = None;
        let mut strata = 0;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| DatalogError::Parse { line: ln + 1, msg };
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('%') {
                let rest = rest.trim();
                if let Some(names) = directive(rest, "atoms") {
                    for n in split_top_level(names) {
                        atoms.intern(n);
                    }
                } else if let Some(names) = directive(rest, "edb") {
                    let set = edb.get_or_insert_with(AtomSet::new);
                    for n in split_top_level(names) {
                        set.insert(atoms.intern(n));
                    }
                } else if let Some(num) = directive(rest, "stratum") {
                    let s: usize = num
                        .parse()
                        .map_err(|_| err(format!("bad stratum number {num:?}")))?;
                    stratum = Some(s);
                    strata = strata.max(s + 1);
                }
                continue;
            }
            let body_text = line
                .strip_suffix('.')
                .ok_or_else(|| err("rule must end with '.'".into()))?;
            let (head, body) = match body_text.split_once(":-") {
                Some((h, b)) => (h.trim(), Some(b.trim())),
                None => (body_text.trim(), None),
            };
            if !valid_name(head) {
                return Err(err(format!("bad head atom {head:?}")));
            }
            let head = atoms.intern(head);
            let mut lits = Vec::new();
            if let Some(b) = body {
                for piece in split_top_level(b) {
                    let (negated, name) = match piece.strip_prefix('!') {
                        Some(n) => (true, n.trim()),
                        None => (false, piece),
                    };
                    if !valid_name(name) {
                        return Err(err(format!("bad body atom {name:?}")));
                    }
                    lits.push(Literal { atom: atoms.intern(name), negated });
                }
            }
            let s = stratum.unwrap_or(0);
            strata = strata.max(s + 1);
            rules.push(Rule { body: lits, head, stratum: s });
        }
        let edb = edb.unwrap_or_else(|| AtomSet::full(atoms.len()));
        Program::with_strata(atoms, rules, edb, strata)
    }
}

fn directive<'a>(line: &'a str, key: &str) -> Option<&'a str> {
    let rest = line.strip_prefix(key)?;
    if rest.is_empty() {
        return Some("");
    }
    rest.strip_prefix(char::is_whitespace).map(str::trim)
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('!')
        && !s.contains(char::is_whitespace)
        && !s.contains(":-")
}

/// Splits on commas that are not nested in parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(s[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    let last = s[start..].trim();
    if !last.is_empty() || !out.is_empty() {
        out.push(last);
    }
    out.retain(|p| !p.is_empty());
    out
}

fn check_comparable(p1: &Program, p2: &Program) -> Result<(), DatalogError> {
    if p1.atoms.names() != p2.atoms.names() {
        return Err(DatalogError::UniverseMismatch);
    }
    if !p1.is_positive() || !p2.is_positive() {
        return Err(DatalogError::NegationPresent);
    }
    Ok(())
}

/// Query containment: does `q ∈ p1(D)` imply `q ∈ p2(D)` for every database
/// `D` over the shared universe?
///
/// The per-rule uniform test is tried first; it is sufficient but not
/// necessary for a single query. When it fails the answer is settled exactly
/// by evaluating `p2` on each minimal witness of `q` in `p1`, since the
/// databases deriving `q` under `p1` form the upper set of those witnesses.
pub fn uniform_containment(p1: &Program, p2: &Program, q: AtomId) -> Result<bool, DatalogError> {
    if q.index() >= p1.atoms.len() {
        return Err(DatalogError::UnknownAtom(q));
    }
    if Program::is_uniformly_contained(p1, p2)? {
        return Ok(true);
    }
    let n = p1.atoms.len();
    let bodies: Vec<(Vec<AtomId>, AtomId)> = p1
        .rules
        .iter()
        .map(|r| (r.positive_atoms().collect(), r.head))
        .collect();
    let table = minimal_supports(
        n,
        bodies.iter().map(|(b, h)| (b.as_slice(), *h)),
        &AtomSet::full(n),
        None,
    );
    Ok(table.entries[q.index()]
        .elements()
        .iter()
        .all(|w| p2.eval_unchecked(w).true_atoms.contains(q)))
}

/// Least model of a program over a database.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    pub true_atoms: AtomSet,
}

impl Model {
    pub fn holds(&self, a: AtomId) -> bool {
        self.true_atoms.contains(a)
    }
}
