//! Command-line companion to the measurement-ordering toolkit: JSON input
//! and output schemas, result documents with independently checkable
//! witnesses, and the built-in counterexample demonstrations.

pub use povmkit_core as core;

pub mod counterexamples;
pub mod report;
pub mod schema;
