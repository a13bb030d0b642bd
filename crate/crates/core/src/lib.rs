//! Exact simulation of a ball breaking unit bricks in a strip or in the plane.
//!
//! - [`dynamics`]: event-driven motion among destructible bricks.
//! - [`strip`]: return map to the base of a strip and escape statistics.
//! - [`frontier`]: the reduced map on `T^2 x C*_K` and its induced maps.
//! - [`plane`]: plane orbits, periodicity detection and classification.
//! - [`export`]: CSV, JSON and image output.

pub mod dynamics;
pub mod export;
pub mod frontier;
pub mod num;
pub mod plane;
pub mod strip;

pub use num::{parse_q, q, qi, Q};
