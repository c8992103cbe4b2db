//! Agent-based simulation of a wholesale electricity market.
//!
//! Generation companies bid into a uniform-price spot market over representative time steps
//! and invest in new plants on expected net present value. Around the simulator sit
//! representative-day selection, stochastic perturbation, multi-objective optimisation and
//! a reinforcement-learning bidding agent.

pub mod bidding;
pub mod domain;
pub mod error;
pub mod investment;
pub mod market;
pub mod metrics;
pub mod optimize;
pub mod output;
pub mod scenario;
pub mod sim;
pub mod stochastic;
pub mod synthetic;
pub mod temporal;

pub use error::{Error, Result};
