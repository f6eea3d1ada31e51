//! Level-k highway driver modeling without the standard library.
//!
//! The crate holds the algorithmic core: the circular 5-lane traffic world,
//! the discrete action model, a small dense Q-network trained with Adam,
//! the level-k training hierarchy, trajectory cleaning, the
//! Kolmogorov-Smirnov test for step distributions and the per-driver
//! validation that ties them together. Everything that touches files,
//! threads or the command line lives in the `levelk` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod actions;
pub mod dqn;
pub mod env;
pub mod ingest;
pub mod kstest;
pub mod levelk;
pub mod rng;
pub mod validate;

pub use actions::{AccelerationModel, Action, LaneChange};
pub use env::{EnvConfig, WorldState};
pub use rng::{substream, SimRng, Stream};

/// `f64::rem_euclid` for targets without the standard library.
pub(crate) fn rem_euclid(a: f64, b: f64) -> f64 {
    let r = libm::fmod(a, b);
    if r < 0.0 {
        // a tiny negative remainder can round up to exactly b
        let s = r + libm::fabs(b);
        if s >= libm::fabs(b) {
            0.0
        } else {
            s
        }
    } else {
        r
    }
}
