//! Model loading: plain-text model files, their JSON twin, bundled fixtures.

use std::fs;
use std::io::Read;

use anyhow::{bail, Context, Result};
use capsafe::modelfile::{parse_config, ModelSpec};
use capsafe::{fixtures, AtomSet, AtomTable, SafetyModel};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Text,
    Json,
}

/// JSON form of a model file.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelJson {
    #[serde(default)]
    pub atoms: Vec<String>,
    #[serde(default)]
    pub edges: Vec<EdgeJson>,
    #[serde(default)]
    pub forbidden: Vec<String>,
    #[serde(default)]
    pub init: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeJson {
    #[serde(default)]
    pub tail: Vec<String>,
    pub heads: Vec<String>,
}

impl From<ModelJson> for ModelSpec {
    fn from(j: ModelJson) -> Self {
        ModelSpec {
            atoms: j.atoms,
            edges: j.edges.into_iter().map(|e| (e.tail, e.heads)).collect(),
            forbidden: j.forbidden,
            init: j.init,
        }
    }
}

impl From<ModelSpec> for ModelJson {
    fn from(s: ModelSpec) -> Self {
        ModelJson {
            atoms: s.atoms,
            edges: s.edges.into_iter().map(|(tail, heads)| EdgeJson { tail, heads }).collect(),
            forbidden: s.forbidden,
            init: s.init,
        }
    }
}

/// Reads a path, `-` for stdin, or `@name` for a bundled fixture.
pub fn read_source(path: &str) -> Result<String> {
    if let Some(name) = path.strip_prefix('@') {
        return match name {
            "telco" => Ok(fixtures::TELCO.to_string()),
            "telco-and-violation" => Ok(fixtures::TELCO_AND_VIOLATION.to_string()),
            "empty" => Ok(fixtures::EMPTY.to_string()),
            other => bail!("no bundled fixture @{other} (have @telco, @telco-and-violation, @empty)"),
        };
    }
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).context("reading stdin")?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {path}"))
}

pub fn load_model(path: &str, format: Format) -> Result<(SafetyModel, AtomSet)> {
    let text = read_source(path)?;
    let spec = match format {
        Format::Text => ModelSpec::parse(&text).with_context(|| format!("parsing {path}"))?,
        Format::Json => serde_json::from_str::<ModelJson>(&text)
            .with_context(|| format!("parsing {path} as JSON"))?
            .into(),
    };
    Ok(spec.build().with_context(|| format!("building model from {path}"))?)
}

/// `--init` overrides the file's `init` lines when given.
pub fn config_or(atoms: &AtomTable, list: Option<&str>, fallback: AtomSet) -> Result<AtomSet> {
    match list {
        Some(l) => parse_config(atoms, l).map_err(anyhow::Error::msg),
        None => Ok(fallback),
    }
}

pub fn atom(atoms: &AtomTable, name: &str) -> Result<capsafe::AtomId> {
    atoms.get(name).with_context(|| format!("unknown atom {name:?}"))
}
