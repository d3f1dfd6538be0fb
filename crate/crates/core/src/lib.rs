//! Model-based reinforcement learning with learned neural-network dynamics.
//!
//! The crate learns delta-state dynamics models from random off-policy rollouts,
//! plans through them with random-shooting MPC, improves them by aggregating
//! on-policy data, and hands the resulting controller off to a model-free
//! learner through behavioral cloning and DAgger.
//!
//! Module map:
//!
//! - [`nn`]: dense networks, backpropagation, Adam.
//! - [`dynamics`]: transition datasets, normalization, training, H-step validation.
//! - [`envs`]: analytic ground-truth environments and the random-rollout collector.
//! - [`control`]: rewards, random-shooting MPC, waypoint path following.
//! - [`aggregation`], [`imitation`], [`finetune`]: the outer learning loops.
//! - [`config`], [`commands`]: experiment configuration and the CLI commands.

pub mod aggregation;
pub mod commands;
pub mod config;
pub mod control;
pub mod dynamics;
pub mod envs;
pub mod error;
pub mod finetune;
pub mod imitation;
pub mod nn;
pub mod seeding;

pub use error::{Error, Result};
