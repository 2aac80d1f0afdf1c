//! Learning and executing DNF blocking schemes over heterogeneous dataset
//! pairs without labeled training data.

pub mod error;
pub mod learner;
pub mod matcher;
pub mod pipeline;
pub mod predicates;
pub mod rdf;
pub mod runtime;
pub mod synth;
pub mod table;

pub use error::{Error, Result};
