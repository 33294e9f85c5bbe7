//! Expressivity analysis of message-passing GNNs versus graph-augmented MLPs.

pub mod constructions;
pub mod error;
pub mod experiments;
pub mod gamlp;
pub mod generators;
pub mod graph;
pub mod operators;
pub mod report;
pub mod sbm;
pub mod scalar;
pub mod walks;
pub mod wl;

pub use error::{Error, Result};
