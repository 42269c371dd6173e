//! JSON output of every subcommand. Atoms are always given by name and sets
//! as name lists in atom id order.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDepth {
    pub atom: String,
    pub depth: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClosureOut {
    pub closure: Vec<String>,
    pub depths: Vec<AtomDepth>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSafeOut {
    pub safe: bool,
    pub reached_forbidden: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gain {
    pub atom: String,
    pub gain: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditOut {
    pub emergent: Vec<String>,
    pub nmf: Vec<String>,
    pub topk: Vec<Gain>,
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BfOut {
    pub witnesses: Vec<Vec<String>>,
    pub complete: bool,
    pub closure_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhyEntry {
    pub atom: String,
    pub witnesses: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WhyOut {
    pub universe: Vec<String>,
    pub exact: bool,
    pub entries: Vec<WhyEntry>,
    /// Minimal unsafe sets inside the universe.
    pub forbidden: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Step {
    pub edge: u32,
    pub atom: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateOut {
    pub target: String,
    pub base: Vec<String>,
    pub steps: Vec<Step>,
    /// Single-line form accepted by `certify --verify`.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOut {
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoalitionOut {
    pub safe: bool,
    pub union: Vec<String>,
    /// A minimal unsafe set inside the union, when there is one.
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContainOut {
    pub contained: bool,
    pub query: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncodeOut {
    pub program: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateOut {
    pub op: String,
    pub cone: Vec<String>,
    pub rederivations: usize,
    pub closure_evals: usize,
    pub wall_nanos: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DredTraceOut {
    pub updates: Vec<UpdateOut>,
    pub surface: AuditOut,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapRowOut {
    pub n: usize,
    pub incr_rederivations: usize,
    pub incr_wall_ns: u128,
    pub naive_closure_evals: usize,
    pub naive_wall_ns: u128,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeRowOut {
    pub kind: String,
    pub k: usize,
    pub j: usize,
    pub strategy: String,
    pub probes: usize,
    pub frontier_probes: usize,
    pub propagation_probes: usize,
    pub correct_plus: bool,
    pub correct_minus: bool,
}
