//! Capability-safety analysis over directed hypergraphs and their
//! propositional Datalog encodings.

pub mod antichain;
pub mod atoms;
pub mod audit;
pub mod datalog;
pub mod encoding;
pub mod fixtures;
pub mod gaplab;
pub mod gen;
pub mod hypergraph;
pub mod incremental;
pub mod modelfile;
pub mod provenance;
pub mod safety;

pub use antichain::Antichain;
pub use atoms::{AtomId, AtomSet, AtomTable, Config};
pub use encoding::SafetyModel;
pub use hypergraph::{EdgeId, Hyperedge, Hypergraph};
