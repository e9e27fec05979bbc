// SPDX-License-Identifier: Apache-2.0
//! Error type shared by every solver stage.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("no sign change on [{lo}, {hi}] (f(lo) = {flo}, f(hi) = {fhi})")]
    Bracket { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("root search did not converge after {0} iterations")]
    NoConvergence(usize),

    #[error("continuation failed at c = {last_good}: {reason}")]
    Continuation { last_good: f64, reason: String },

    #[error("boundary crossing at c = {c}: {detail}")]
    BoundaryCrossing { c: f64, detail: String },

    #[error("ODE integration failed at t = {t}: {reason}")]
    Ode { t: f64, reason: String },

    #[error("no second tangent at c = {0}: minorant has a single linear piece")]
    NoSecondTangent(f64),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("grid solver did not converge on row {row} (residual {residual:e})")]
    GridNoConvergence { row: usize, residual: f64 },

    #[error("io: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
