//! Multi-stage fake-news mitigation on simulated social networks.

pub mod agents;
pub mod cli;
pub mod env;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod hawkes;
pub mod network;
pub mod nn;
pub mod scenario;
pub mod seeds;

pub use error::{Error, Result};
