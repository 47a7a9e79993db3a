#![cfg_attr(not(test), no_std)]
// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
//! Robust fair welfare and malfare objectives.
//!
//! The crate evaluates weighted aggregators of per-group sentiment, computes
//! adversarial weight responses over structured weight sets, solves
//! maximin/minimax problems by projected subgradient methods and derives
//! continuity bounds. It needs only `alloc`.

extern crate alloc;

pub mod aggregators;
pub mod allocation;
pub mod bounds;
pub mod error;
pub mod games;
mod math;
pub mod matrix_game;
pub mod projection;
pub mod robust;
pub mod solvers;
pub mod weightsets;

pub use aggregators::{Aggregator, Power, Sense, SentimentFunctional, SentimentVector, WeightVector};
pub use error::{Error, Result};
pub use robust::RobustAggregator;
pub use weightsets::{BallBase, BestResponse, Diameter, Direction, Norm, WeightSet};
