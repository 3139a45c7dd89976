//! Expected worst-case execution time of cyclic probabilistic timed automata.

pub mod accel;
pub mod bundled;
pub mod dbm;
pub mod engine;
pub mod error;
pub mod explorer;
pub mod model;
pub mod report;

pub use error::{AnalysisError, Result};
