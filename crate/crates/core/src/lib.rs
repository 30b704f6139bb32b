//! Simulation and learning toolkit for UAV-based communication networks whose
//! crew changes over time: UAVs quit when their batteries run low and join
//! again after recharging.
//!
//! * [`world`], [`coverage`] and [`energy`] model the network.
//! * [`nn`] holds MLPs with hand-written gradients, Adam, replay storage and
//!   checkpoints.
//! * [`ddpg`] trains a centralized positioning agent with parallel workers.
//! * [`marl`] trains one deep Q-learner per UAV on dual environment copies.
//! * [`solar`] designs charging profiles for solar-powered UAVs.
//! * [`cli`] drives experiments from TOML configs.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]
#![cfg_attr(test, allow(clippy::field_reassign_with_default))]

pub mod cli;
pub mod config;
pub mod coverage;
pub mod ddpg;
pub mod energy;
pub mod error;
pub mod geom;
pub mod marl;
pub mod nn;
pub mod seed;
pub mod solar;
pub mod trace;
pub mod world;

pub use error::{Error, Result};
