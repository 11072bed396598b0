//! Optimistic contextual bandits built on counterfactual confidence bounds.
//!
//! The crate provides a realizable problem model, a seeded simulator, the
//! finite-action UCCB agent, its infinite-action extension UCCB-IA, the
//! epoch-based FALCON agent for linear action models, control baselines,
//! post-hoc audits and an experiment harness.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod baselines;
pub mod bounds;
pub mod config;
pub mod env;
pub mod error;
pub mod falcon;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod scenarios;
pub mod trace;
pub mod uccb;
pub mod uccb_ia;

pub use error::{Error, Result};
