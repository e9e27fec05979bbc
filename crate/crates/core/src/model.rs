// SPDX-License-Identifier: Apache-2.0
//! Problem parameters, the no-fuel constants and regime classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{brent, ROOT_TOL};

/// Running cost λx², discount α, terminal cost δx².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub lambda: f64,
    pub alpha: f64,
    pub delta: f64,
}

impl ProblemParams {
    pub fn new(lambda: f64, alpha: f64, delta: f64) -> Result<Self> {
        let p = Self { lambda, alpha, delta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("alpha", self.alpha), ("delta", self.delta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// √(2α), the exponential rate of the free solutions e^{±x√(2α)}.
    #[inline]
    pub fn s(&self) -> f64 {
        (2.0 * self.alpha).sqrt()
    }

    #[inline]
    pub fn ad(&self) -> f64 {
        self.alpha * self.delta
    }

    /// λ/α, the quadratic coefficient of the particular solution.
    #[inline]
    pub fn la(&self) -> f64 {
        self.lambda / self.alpha
    }

    /// λ/α², its constant term.
    #[inline]
    pub fn la2(&self) -> f64 {
        self.lambda / (self.alpha * self.alpha)
    }

    /// α/(2λ), the vertex of the waiting-region running-cost balance.
    #[inline]
    pub fn x_half_lambda(&self) -> f64 {
        self.alpha / (2.0 * self.lambda)
    }

    /// 1/(2δ).
    #[inline]
    pub fn x_half_delta(&self) -> f64 {
        0.5 / self.delta
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..*self }
    }
}

/// x² + 2x/√(2α) − (λ/α)/(αδ − λ).
pub fn rho(x: f64, p: &ProblemParams) -> Result<f64> {
    let gap = p.ad() - p.lambda;
    if gap == 0.0 {
        return Err(Error::Domain("rho is undefined at lambda = alpha*delta".into()));
    }
    Ok(x * x + 2.0 * x / p.s() - p.la() / gap)
}

/// Positive root of [`rho`]: the free boundary of the problem without fuel.
pub fn f0(p: &ProblemParams) -> Result<f64> {
    let ad = p.ad();
    if p.lambda >= ad {
        return Err(Error::Domain(format!(
            "f0 requires lambda < alpha*delta ({} >= {})",
            p.lambda, ad
        )));
    }
    Ok((((ad + p.lambda) / (ad - p.lambda)).sqrt() - 1.0) / p.s())
}

/// Closed-form λ*: the running cost at which f0 = 1/(2δ).
pub fn lambda_star(alpha: f64, delta: f64) -> f64 {
    let s = (2.0 * alpha).sqrt();
    alpha * delta / (1.0 + (delta / alpha) / (0.25 / delta + 1.0 / s))
}

/// λ† ∈ (λ*, αδ): the running cost at which f0 = α/(2λ).
pub fn lambda_dagger(alpha: f64, delta: f64) -> Result<f64> {
    let ad = alpha * delta;
    let lo = lambda_star(alpha, delta);
    let resid = |l: f64| {
        let p = ProblemParams { lambda: l, alpha, delta };
        2.0 * l * f0(&p).unwrap_or(f64::INFINITY) - alpha
    };
    let mut hi = ad * (1.0 - 1e-9);
    while resid(hi) <= 0.0 {
        hi = ad - 0.1 * (ad - hi);
    }
    brent(resid, lo, hi, ROOT_TOL * ad.max(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// λ ≥ αδ: stop or act, never wait.
    HighCost,
    /// λ ∈ [λ†, αδ).
    VShape,
    /// λ ∈ (λ*, λ†): a second waiting component appears at small fuel.
    VLambdaShape,
    /// λ ≤ λ*: classified, no-fuel solution only.
    LegacyBelowStar,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::HighCost => "HighCost",
            Regime::VShape => "VShape",
            Regime::VLambdaShape => "VLambdaShape",
            Regime::LegacyBelowStar => "LegacyBelowStar",
        }
    }

    pub fn is_solvable(&self) -> bool {
        matches!(self, Regime::VShape | Regime::VLambdaShape)
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub regime: Regime,
    /// The ordering of 1/(2δ), α/(2λ) and f0 realised by the parameters.
    pub chain: String,
    /// λ sits on λ* or λ† (within 1e-12 relative); geometry is degenerate there.
    pub boundary_case: bool,
}

pub fn classify(p: &ProblemParams) -> Classification {
    let ad = p.ad();
    let ls = lambda_star(p.alpha, p.delta);
    let ld = lambda_dagger(p.alpha, p.delta).expect("lambda_dagger bracket is analytic");
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-12 * b.abs().max(1.0);
    let boundary_case = near(p.lambda, ls) || near(p.lambda, ld);
    let regime = if p.lambda >= ad {
        Regime::HighCost
    } else if p.lambda >= ld {
        Regime::VShape
    } else if p.lambda > ls {
        Regime::VLambdaShape
    } else {
        Regime::LegacyBelowStar
    };
    let chain = match regime {
        Regime::HighCost => "alpha/(2*lambda) <= 1/(2*delta); f0 undefined".to_string(),
        Regime::VShape => "1/(2*delta) < alpha/(2*lambda) <= f0".to_string(),
        Regime::VLambdaShape => "1/(2*delta) < f0 < alpha/(2*lambda)".to_string(),
        Regime::LegacyBelowStar => "f0 <= 1/(2*delta) < alpha/(2*lambda)".to_string(),
    };
    Classification { regime, chain, boundary_case }
}

/// Flat record of the constants; entries that need λ < αδ are `None` otherwise.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeConstants {
    pub f0: Option<f64>,
    pub lambda_star: f64,
    pub lambda_dagger: f64,
    pub x_half_delta: f64,
    pub x_half_lambda: f64,
    #[serde(rename = "K")]
    pub big_k: Option<f64>,
    pub k: Option<f64>,
    pub k_bar: f64,
    #[serde(rename = "B0")]
    pub b0: Option<f64>,
    pub regime: Regime,
    pub boundary_case: bool,
}

impl RegimeConstants {
    pub fn compute(p: &ProblemParams) -> Result<Self> {
        p.validate()?;
        let cls = classify(p);
        let s = p.s();
        let f0v = f0(p).ok();
        let xhl = p.x_half_lambda();
        let xhd = p.x_half_delta();
        let gap = p.ad() - p.lambda;
        let big_k = f0v.map(|_| 2.0 * ((p.delta / gap).sqrt() - xhd));
        let k = f0v.map(|f| 2.0 * (xhl - f));
        let b0 = f0v.map(|f| -(2.0 * f / (p.alpha * s)) * gap * (f * s).exp());
        Ok(Self {
            f0: f0v,
            lambda_star: lambda_star(p.alpha, p.delta),
            lambda_dagger: lambda_dagger(p.alpha, p.delta)?,
            x_half_delta: xhd,
            x_half_lambda: xhl,
            big_k,
            k,
            k_bar: xhl - xhd,
            b0,
            regime: cls.regime,
            boundary_case: cls.boundary_case,
        })
    }

    pub fn f0(&self) -> Result<f64> {
        self.f0.ok_or_else(|| Error::Domain("f0 undefined for lambda >= alpha*delta".into()))
    }

    pub fn b0(&self) -> Result<f64> {
        self.b0.ok_or_else(|| Error::Domain("B0 undefined for lambda >= alpha*delta".into()))
    }
}
