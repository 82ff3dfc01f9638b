//! Object-goal navigation on procedurally generated 2D floor plans.
//!
//! The agent builds an occupancy belief from depth rays, clusters frontier
//! cells into islands, scores them (distance-weighted, optionally biased by
//! language-model votes), and drives an A* planner over the resulting
//! affordance map until it sees and reaches the goal object.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod grid;
pub mod harness;
pub mod islands;
pub mod language;
pub mod mapping;
pub mod planner;
pub mod scene;
pub mod valuemaps;

pub use config::Config;
pub use error::{Error, Result};
