// SPDX-License-Identifier: Apache-2.0
//! Shared fixtures for the criterion benches.

use fuelctrl::{lambda_dagger, lambda_star, ProblemParams};

/// λ midway between λ† and αδ at α = δ = 1.
pub fn vshape() -> ProblemParams {
    let l = 0.5 * (lambda_dagger(1.0, 1.0).expect("bracket") + 1.0);
    ProblemParams::new(l, 1.0, 1.0).expect("valid")
}

/// λ midway between λ* and λ† at α = δ = 1.
pub fn vlambda() -> ProblemParams {
    let l = 0.5 * (lambda_star(1.0, 1.0) + lambda_dagger(1.0, 1.0).expect("bracket"));
    ProblemParams::new(l, 1.0, 1.0).expect("valid")
}
