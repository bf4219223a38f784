//! Constrained motion planning on learned latent manifolds, at desk scale.
//!
//! The crate plans collision-free motions for planar kinematic chains subject
//! to task constraints `h(q; c) = 0` (end-effector height, closed chains,
//! closed chains with a fixed tool orientation). Planning runs in a learned
//! low-dimensional latent chart of the constraint manifold: a conditional
//! autoencoder maps manifold configurations to latent vectors, a classifier
//! screens latent tree extensions, and a learned robot-to-obstacle minimum
//! distance model supplies gradients that push colliding latent waypoints back
//! into free space during path validation.
//!
//! Module map:
//!
//! - [`robot`] — planar chains, forward kinematics, envelope circles and the
//!   exact collision oracle.
//! - [`constraint`] — constraint functions, analytic Jacobians, pseudo-inverse
//!   projection, on-manifold sampling and interpolation.
//! - [`envfield`] — obstacle environments, occupancy grids, exact signed
//!   distance fields and robot clearance queries.
//! - [`nn`] — small dense networks with exact backpropagation, Adam, the five
//!   task networks, and the `CMPW` weight format.
//! - [`scenario`] — the three benchmark scenarios and input standardization.
//! - [`data`] — dataset generation and the `CMPD` dataset format.
//! - [`planner`] — the latent bidirectional planner, path validation with
//!   local path optimization, the configuration-space baseline, and the
//!   independent path validator.
//! - [`bench`] / [`report`] — benchmark protocol, aggregation and reporting.

pub mod bench;
pub mod constraint;
pub mod data;
pub mod envfield;
pub mod error;
pub mod geom;
pub mod nn;
pub mod planner;
pub mod report;
pub mod robot;
pub mod scenario;

pub use error::Error;

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Splits a base seed into a stream of decorrelated child seeds.
///
/// splitmix64; used everywhere a job derives per-item seeds so that
/// generation order and parallel fan-out cannot change the streams.
pub fn derive_seed(base: u64, salt: u64) -> u64 {
    let mut x = base ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_salt() {
        let a = derive_seed(7, 0);
        let b = derive_seed(7, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(7, 0));
    }
}
