//! Evolution of multi-objective search operators through a language model.

pub mod metrics;
pub mod problems;
pub mod baseline;
pub mod llm;
pub mod sandbox;
pub mod evolution;
pub mod record;
