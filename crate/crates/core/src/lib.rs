//! Total-variation mixing bounds for reflected Brownian motion in bounded
//! convex sets, with a mirror-coupling Monte Carlo engine that checks them
//! and exact one-dimensional reference solutions.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod coupling;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod oracle1d;
pub mod quadrature;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};
pub use geometry::ConvexBody;
