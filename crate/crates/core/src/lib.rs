//! Joint frequency reuse and edge caching for backhaul-limited
//! small-cell networks: closed-form success-probability analytics, the
//! KKT/bisection cache-allocation optimizer, and a Poisson-point-process
//! Monte Carlo simulator for validating both.
//!
//! The crate is organized around the lifecycle of one design question —
//! how many subbands M and which cache storage allocation q maximize the
//! probability that a typical user is scheduled and meets its target
//! rate:
//!
//! - [`model`]: system parameters, Zipf popularity, the allocation
//!   vector, and the group placement map.
//! - [`analytic`]: the interference factor β(M, g₀), conditional
//!   scheduling/PHY success, expected loading, the approximate objective,
//!   and an exact small-instance oracle.
//! - [`optimizer`]: per-(M, L') water-filling subproblems, the
//!   enumeration with rounding and greedy residue allocation, and the
//!   baseline schemes.
//! - [`sim`]: the torus Monte Carlo engine with common-random-number
//!   stream splitting.

pub mod analytic;
pub mod error;
pub mod model;
pub mod optimizer;
pub mod sim;

pub use error::{Error, Result};
