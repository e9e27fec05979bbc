// SPDX-License-Identifier: Apache-2.0
//! Finite-fuel singular control of Brownian motion with discretionary
//! stopping: regime constants, moving free boundaries, the piecewise value
//! function, and two independent oracles (grid dynamic programming and
//! Monte Carlo) to check them against.
//!
//! The controller pays λx² per unit time while waiting, δx² on stopping
//! and one unit per unit of fuel spent pushing |x| towards zero, all
//! discounted at rate α.

pub mod boundaries;
pub mod error;
pub mod export;
pub mod model;
pub mod numeric;
pub mod oneshot;
pub mod oracle;
pub mod simulate;
pub mod special;
pub mod transform;
pub mod valuefn;
pub mod verify;

pub use boundaries::{BoundaryCurve, BoundaryType, Boundaries, FuelLevels};
pub use error::{Error, Result};
pub use model::{classify, f0, lambda_dagger, lambda_star, rho, ProblemParams, Regime, RegimeConstants};
pub use oneshot::{solve_v0, MinorantPiece, NoFuel, OneShotSolution};
pub use oracle::{compare, solve_dp, Comparison, GridConfig, GridSolution};
pub use simulate::{mc_estimate, McEstimate, SimConfig};
pub use valuefn::{PiecewiseValue, Region, RegionTag};
pub use verify::{verify_all, VerificationReport};
