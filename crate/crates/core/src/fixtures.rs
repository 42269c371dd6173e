//! Bundled model files.

use crate::atoms::AtomSet;
use crate::encoding::SafetyModel;
use crate::modelfile::parse_model;

/// Every known Telco edge plus `h6` (`c3 ∧ c10 → c12`), `F = {c12}`.
pub const TELCO: &str = include_str!("../fixtures/telco.cap");

/// Only `h6` over the same twelve atoms, `F = {c12}`.
pub const TELCO_AND_VIOLATION: &str = include_str!("../fixtures/telco_and_violation.cap");

pub const EMPTY: &str = include_str!("../fixtures/empty.cap");

pub fn telco() -> SafetyModel {
    parse_model(TELCO).expect("bundled fixture parses").0
}

pub fn telco_and_violation() -> SafetyModel {
    parse_model(TELCO_AND_VIOLATION).expect("bundled fixture parses").0
}

/// Resolves `c`-names against a fixture's atom table.
pub fn config(sm: &SafetyModel, names: &[&str]) -> AtomSet {
    names
        .iter()
        .map(|n| sm.atoms().get(n).unwrap_or_else(|| panic!("no atom {n}")))
        .collect()
}
