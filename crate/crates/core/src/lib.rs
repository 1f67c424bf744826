pub mod diagnostics;
pub mod dsl;
pub mod powl;
pub mod translation;
pub mod conformance;
pub mod semantics;
pub mod bench;
pub mod llm;
#[cfg(feature = "service")]
pub mod service;
