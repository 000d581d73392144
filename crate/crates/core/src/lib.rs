//! Coordinated uplink pilot design for multicell massive MIMO.
//!
//! The crate covers network generation, closed-form MMSE estimation metrics,
//! the quadratic-transform machinery and three pilot design algorithms:
//!
//! * [`nonorth::run_algorithm1`]: arbitrary complex pilots minimizing weighted sum MSE.
//! * [`orth::run_algorithm2`]: assignment and power control over a fixed orthogonal basis.
//! * [`maxmin::run_algorithm3`]: max-min asymptotic rate by Dinkelbach power control.
//!
//! Users are addressed by a flat index `u = l * K + k` (cell `l`, user `k`).

pub mod error;
pub mod estimation;
pub mod fp;
pub mod linalg;
pub mod maxmin;
pub mod network;
pub mod nonorth;
pub mod orth;
pub mod pilots;
pub mod rng;
pub mod solvers;
pub mod trace;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{CoreError, Result};
pub use network::{generate, NetworkConfig, NetworkInstance};
pub use pilots::{OrthogonalPilots, PilotConfiguration};
