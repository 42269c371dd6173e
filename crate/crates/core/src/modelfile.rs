//! Line-oriented model files.
//!
//! ```text
//! # comment
//! atom c1 c2 c3          # optional; fixes id order
//! edge c1 -> c3 c7       # several heads are split into several edges
//! edge -> c2             # fact edge
//! forbidden c12
//! init c1 c2
//! ```
//!
//! Names are interned in order of first appearance. [`to_text`] writes an
//! `atom` line listing the whole universe, so parsing its output gives back
//! the same ids.

use thiserror::Error;

use crate::atoms::{AtomId, AtomSet, AtomTable};
use crate::encoding::SafetyModel;
use crate::hypergraph::{Hypergraph, HypergraphError, RawEdge};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {msg}")]
pub struct ModelError {
    pub line: usize,
    pub msg: String,
}

/// A model by name, before interning.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ModelSpec {
    pub atoms: Vec<String>,
    /// `(tail, heads)` pairs.
    pub edges: Vec<(Vec<String>, Vec<String>)>,
    pub forbidden: Vec<String>,
    pub init: Vec<String>,
}

/// Rejects names that would not survive the text formats used around the
/// crate (model files, rule text, certificates, comma lists).
pub fn valid_atom_name(s: &str) -> bool {
    !s.is_empty()
        && s != "->"
        && !s.chars().any(|c| c.is_whitespace() || ",#;!=()%".contains(c))
}

impl ModelSpec {
    pub fn parse(text: &str) -> Result<ModelSpec, ModelError> {
        let mut spec = ModelSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            let err = |msg: String| ModelError { line: i + 1, msg };
            let mut words = line.split_whitespace();
            let Some(kw) = words.next() else {
                continue;
            };
            let rest: Vec<String> = words.map(str::to_string).collect();
            if let Some(bad) = rest.iter().find(|w| *w != "->" && !valid_atom_name(w)) {
                return Err(err(format!("invalid atom name {bad:?}")));
            }
            match kw {
                "atom" => spec.atoms.extend(rest),
                "forbidden" => spec.forbidden.extend(rest),
                "init" => spec.init.extend(rest),
                "edge" => {
                    let arrow = rest
                        .iter()
                        .position(|w| w == "->")
                        .ok_or_else(|| err("edge needs `->`".into()))?;
                    let (tail, heads) = (&rest[..arrow], &rest[arrow + 1..]);
                    if heads.is_empty() {
                        return Err(err("edge needs at least one head".into()));
                    }
                    if heads.iter().any(|w| w == "->") {
                        return Err(err("edge has more than one `->`".into()));
                    }
                    if let Some(h) = heads.iter().find(|h| tail.contains(h)) {
                        return Err(err(format!("head {h} also appears in the tail")));
                    }
                    spec.edges.push((tail.to_vec(), heads.to_vec()));
                }
                other => return Err(err(format!("unknown keyword {other:?}"))),
            }
            if kw != "edge" && line.split_whitespace().any(|w| w == "->") {
                return Err(err("`->` outside an edge line".into()));
            }
        }
        Ok(spec)
    }

    /// Interns names (declared atoms first) and normalizes edges.
    pub fn build(&self) -> Result<(SafetyModel, AtomSet), ModelError> {
        let err = |msg: String| ModelError { line: 0, msg };
        let mut atoms = AtomTable::new();
        for a in &self.atoms {
            atoms.intern(a.as_str());
        }
        let mut raw = Vec::with_capacity(self.edges.len());
        for (tail, heads) in &self.edges {
            for name in tail.iter().chain(heads) {
                if !valid_atom_name(name) {
                    return Err(err(format!("invalid atom name {name:?}")));
                }
            }
            raw.push(RawEdge {
                tail: tail.iter().map(|t| atoms.intern(t.as_str())).collect(),
                heads: heads.iter().map(|h| atoms.intern(h.as_str())).collect(),
            });
        }
        let mut intern_all = |names: &[String]| -> AtomSet { names.iter().map(|n| atoms.intern(n.as_str())).collect() };
        let forbidden = intern_all(&self.forbidden);
        let init = intern_all(&self.init);
        let h = Hypergraph::normalize(atoms, &raw).map_err(|e| match e {
            HypergraphError::HeadInTail(h) => err(format!("head {h} also appears in the tail")),
            other => err(other.to_string()),
        })?;
        let sm = SafetyModel::new(h, forbidden).map_err(|e| err(e.to_string()))?;
        Ok((sm, init))
    }
}

/// Parses a model file into a model and its `init` configuration.
pub fn parse_model(text: &str) -> Result<(SafetyModel, AtomSet), ModelError> {
    ModelSpec::parse(text)?.build()
}

/// The `ModelSpec` of an existing model; edges come out split and in id order.
pub fn to_spec(sm: &SafetyModel, init: &AtomSet) -> ModelSpec {
    let atoms = sm.atoms();
    let names = |s: &AtomSet| atoms.set_names(s);
    ModelSpec {
        atoms: atoms.names().to_vec(),
        edges: sm
            .h
            .edges()
            .map(|(_, e)| {
                let tail = e.tail().iter().map(|&t| atoms.name(t).to_string()).collect();
                (tail, vec![atoms.name(e.head()).to_string()])
            })
            .collect(),
        forbidden: names(&sm.forbidden),
        init: names(init),
    }
}

pub fn to_text(sm: &SafetyModel, init: &AtomSet) -> String {
    let spec = to_spec(sm, init);
    let mut out = String::new();
    if !spec.atoms.is_empty() {
        out.push_str(&format!("atom {}\n", spec.atoms.join(" ")));
    }
    for (tail, heads) in &spec.edges {
        let mut line = String::from("edge");
        for t in tail {
            line.push(' ');
            line.push_str(t);
        }
        line.push_str(" -> ");
        line.push_str(&heads.join(" "));
        out.push_str(&line);
        out.push('\n');
    }
    for f in &spec.forbidden {
        out.push_str(&format!("forbidden {f}\n"));
    }
    if !spec.init.is_empty() {
        out.push_str(&format!("init {}\n", spec.init.join(" ")));
    }
    out
}

/// Resolves a comma or whitespace separated list of atom names.
pub fn parse_config(atoms: &AtomTable, list: &str) -> Result<AtomSet, String> {
    list.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|name| atoms.get(name).ok_or_else(|| format!("unknown atom {name:?}")))
        .collect::<Result<Vec<AtomId>, _>>()
        .map(|v| v.into_iter().collect())
}
