//! Distribution of the first-stream SNR after zero-forcing detection on a
//! Rician MIMO channel with transmit-side correlation.
//!
//! The density has a power-series form whose alternating terms cancel
//! catastrophically once the Rician noncentrality grows, so direct summation
//! stops being trustworthy exactly where the interesting scenarios live.
//! This crate instead treats the density as the solution of a small linear
//! ODE system: the series seeds the state near the origin, where it is
//! rock solid, and an adaptive integrator carries the state out along a ray
//! to the evaluation point. Closed forms cover the central (Rayleigh) limit.
//!
//! Module map:
//!
//! * [`scenario`]: antenna/channel configuration and the derived parameters.
//! * [`special`]: confluent hypergeometric evaluation.
//! * [`series`]: power-series density, its derivatives, truncation control.
//! * [`ode`]: the embedded Runge-Kutta integrator.
//! * [`hgm`]: companion matrices and the ray evaluator.
//! * [`measures`]: outage, ergodic capacity, cumulative curves.
//! * [`montecarlo`]: channel-level simulation used as a reference.
//! * [`cli`]: the command-line front end.

pub mod cli;
pub mod error;
pub mod hgm;
pub mod measures;
pub mod montecarlo;
pub mod ode;
pub mod scenario;
pub mod series;
pub mod special;

pub use error::{Error, Result};

/// Version string baked into outputs for provenance.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Caps the global worker pool from `HGM_MIMO_THREADS` when the variable is
/// set to a positive integer. No effect once any pool exists, so call this
/// before the first parallel region.
pub fn configure_thread_pool_from_env() {
    if let Ok(v) = std::env::var("HGM_MIMO_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
