//! Finite symbolic abstractions of sampled-data stochastic control systems.
//!
//! The pipeline: verify an incremental-stability certificate, pick quantization
//! parameters (τ, η, μ) that make a lattice abstraction ε-approximately bisimilar
//! in the q-th moment, build the abstraction, solve a game on it, refine the
//! strategy into a sampled-data feedback, and check the result by simulation and
//! closed-form probability bounds.

pub mod abstraction;
pub mod certificate;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod model;
pub mod probounds;
pub mod quantizer;
pub mod rng;
pub mod stochsim;
pub mod synthesis;

pub use error::{Error, Result};
