//! Simulation toolkit for recursive trees with fitness, their continuous-time
//! branching embeddings, and numerical tests of explosion criteria.

pub mod birth;
pub mod cmj;
pub mod config;
pub mod criteria;
pub mod error;
pub mod fitness;
pub mod harness;
pub mod plan;
pub mod quadrature;
pub mod rng;
pub mod sampler;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
