// SPDX-License-Identifier: Apache-2.0
//! Natural ↔ transformed scale and the stopping obstacles.
//!
//! In the transformed coordinate y = Ψ(x) = e^{2x√(2α)} an obstacle g(x)
//! becomes H(y) = g(x)/φ_α(x) = e^{x√(2α)} g(x), and optimal stopping turns
//! into taking the greatest non-positive convex minorant of H.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ProblemParams, RegimeConstants};
use crate::numeric::{brent, ROOT_TOL};
use crate::oneshot::NoFuel;

/// Largest accepted ln y.
pub const LN_Y_MAX: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleMap {
    s: f64,
}

impl ScaleMap {
    pub fn new(alpha: f64) -> Self {
        Self { s: (2.0 * alpha).sqrt() }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn psi(&self, x: f64) -> f64 {
        (2.0 * self.s * x).exp()
    }

    /// Ψ with the e^{700} ceiling enforced.
    pub fn psi_checked(&self, x: f64) -> Result<f64> {
        if 2.0 * self.s * x > LN_Y_MAX {
            return Err(Error::OutOfRange(format!("Psi({x}) exceeds e^{LN_Y_MAX}")));
        }
        Ok(self.psi(x))
    }

    pub fn psi_inv(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::Domain(format!("Psi^-1 needs y > 0, got {y}")));
        }
        let ly = y.ln();
        if ly > LN_Y_MAX {
            return Err(Error::OutOfRange(format!("y = {y:e} exceeds e^{LN_Y_MAX}")));
        }
        Ok(ly / (2.0 * self.s))
    }

    /// φ_α(x) = e^{−x√(2α)}, decreasing free solution.
    pub fn phi_alpha(&self, x: f64) -> f64 {
        (-self.s * x).exp()
    }

    /// ψ_α(x) = e^{x√(2α)}, increasing free solution.
    pub fn psi_alpha(&self, x: f64) -> f64 {
        (self.s * x).exp()
    }
}

/// a0 + a1·x + a2·x² + coef·e^{rate·x}. Every obstacle piece has this form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPoly {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub coef: f64,
    pub rate: f64,
}

/// Tangent line to a transformed obstacle at y = Ψ(x), in the (y, H) plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub slope: f64,
    pub intercept: f64,
    /// d(slope)/dx = e^{−xs}(𝓛−α)g(x)/s.
    pub dslope: f64,
}

impl ExpPoly {
    pub fn quadratic(a0: f64, a1: f64, a2: f64) -> Self {
        Self { a0, a1, a2, coef: 0.0, rate: 0.0 }
    }

    fn poly(&self, x: f64) -> (f64, f64, f64) {
        (self.a0 + x * (self.a1 + x * self.a2), self.a1 + 2.0 * self.a2 * x, 2.0 * self.a2)
    }

    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        let (p, dp, ddp) = self.poly(x);
        if self.coef == 0.0 {
            return (p, dp, ddp);
        }
        let e = self.coef * (self.rate * x).exp();
        (p + e, dp + self.rate * e, ddp + self.rate * self.rate * e)
    }

    /// H(y), H'(y), H''(y) at y = Ψ(x); exponentials are combined before
    /// evaluation so B0·e^{−(x−c)s}-type terms never overflow.
    pub fn transformed(&self, x: f64, s: f64) -> (f64, f64, f64) {
        let (p, dp, ddp) = self.poly(x);
        let mut h = (s * x).exp() * p;
        let mut d1 = (-s * x).exp() * (dp + s * p) / (2.0 * s);
        let mut d2 = (-3.0 * s * x).exp() * (ddp - s * s * p) / (4.0 * s * s);
        if self.coef != 0.0 {
            let r = self.rate;
            h += self.coef * ((r + s) * x).exp();
            d1 += self.coef * (r + s) * ((r - s) * x).exp() / (2.0 * s);
            d2 += self.coef * (r * r - s * s) * ((r - 3.0 * s) * x).exp() / (4.0 * s * s);
        }
        (h, d1, d2)
    }

    pub fn tangent(&self, x: f64, s: f64) -> Tangent {
        let (p, dp, ddp) = self.poly(x);
        let em = (-s * x).exp();
        let ep = (s * x).exp();
        let mut slope = em * (dp + s * p) / (2.0 * s);
        let mut intercept = ep * (s * p - dp) / (2.0 * s);
        let mut dslope = em * (ddp - s * s * p) / (2.0 * s);
        if self.coef != 0.0 {
            let r = self.rate;
            slope += self.coef * (r + s) * ((r - s) * x).exp() / (2.0 * s);
            intercept += self.coef * (s - r) * ((r + s) * x).exp() / (2.0 * s);
            dslope += self.coef * (r * r - s * s) * ((r - s) * x).exp() / (2.0 * s);
        }
        Tangent { slope, intercept, dslope }
    }
}

/// Tangent data computed from a natural-scale jet (g, g', g'').
pub fn tangent_from_jet(x: f64, s: f64, jet: (f64, f64, f64)) -> Tangent {
    let (g, g1, g2) = jet;
    let em = (-s * x).exp();
    Tangent {
        slope: em * (g1 + s * g) / (2.0 * s),
        intercept: (s * x).exp() * (s * g - g1) / (2.0 * s),
        dslope: em * (g2 - s * s * g) / (2.0 * s),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObstacleKind {
    /// h_l: stop now.
    Left,
    /// h_{r1}: spend all fuel and land inside the no-fuel stopping set.
    Right1,
    /// h_{r2}: spend all fuel and land in the no-fuel waiting set.
    Right2,
    /// h_r: h_{r1} on |x − c| ≤ f0, no-fuel waiting value otherwise.
    Right,
    /// h = h_l ∧ h_r.
    Combined,
}

/// Obstacles after subtracting the particular solution (λ/α)x² + λ/α².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub kind: ObstacleKind,
    pub c: f64,
    nf: NoFuel,
}

impl Obstacle {
    pub fn new(kind: ObstacleKind, nf: NoFuel, c: f64) -> Self {
        Self { kind, c, nf }
    }

    pub fn left(nf: NoFuel) -> Self {
        Self::new(ObstacleKind::Left, nf, 0.0)
    }

    pub fn params(&self) -> &ProblemParams {
        &self.nf.p
    }

    /// h_l and h_r cross here.
    pub fn x_c(&self) -> f64 {
        self.nf.p.x_half_delta() + 0.5 * self.c
    }

    pub fn piece(&self, x: f64) -> ExpPoly {
        let p = &self.nf.p;
        let (la, la2, d) = (p.la(), p.la2(), p.delta);
        let c = self.c;
        let s = p.s();
        let left = ExpPoly::quadratic(-la2, 0.0, d - la);
        let r1 = ExpPoly::quadratic(d * c * c + c - la2, -2.0 * d * c, d - la);
        let r2 = ExpPoly {
            a0: la * c * c + c,
            a1: -2.0 * la * c,
            a2: 0.0,
            coef: self.nf.b0 * (c * s).exp(),
            rate: -s,
        };
        let mirror = ExpPoly { coef: self.nf.b0 * (-c * s).exp(), rate: s, ..r2 };
        let right = |x: f64| {
            if x - c > self.nf.f0 {
                r2
            } else if c - x > self.nf.f0 {
                mirror
            } else {
                r1
            }
        };
        match self.kind {
            ObstacleKind::Left => left,
            ObstacleKind::Right1 => r1,
            ObstacleKind::Right2 => r2,
            ObstacleKind::Right => right(x),
            ObstacleKind::Combined => {
                if x <= self.x_c() {
                    left
                } else {
                    right(x)
                }
            }
        }
    }

    /// g, g', g'' at natural x.
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        self.piece(x).jet(x)
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).0
    }

    /// (𝓛 − α)g = ½g'' − αg.
    pub fn generator(&self, x: f64) -> f64 {
        let (g, _, g2) = self.jet(x);
        0.5 * g2 - self.nf.p.alpha * g
    }

    pub fn tangent(&self, x: f64) -> Tangent {
        self.piece(x).tangent(x, self.nf.p.s())
    }

    pub fn transformed(&self) -> TransformedObstacle {
        TransformedObstacle { source: *self, map: ScaleMap::new(self.nf.p.alpha) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformedObstacle {
    pub source: Obstacle,
    pub map: ScaleMap,
}

impl TransformedObstacle {
    /// H(y), dH/dy, d²H/dy² for y ≥ 1 (and H(0) = 0).
    pub fn eval(&self, y: f64) -> Result<(f64, f64, f64)> {
        if y == 0.0 {
            return Ok((0.0, 0.0, 0.0));
        }
        if y < 1.0 {
            return Err(Error::Domain(format!("transformed obstacle needs y >= 1, got {y}")));
        }
        let x = self.map.psi_inv(y)?;
        Ok(self.source.piece(x).transformed(x, self.map.s()))
    }

    pub fn value(&self, y: f64) -> Result<f64> {
        Ok(self.eval(y)?.0)
    }

    /// Rows (y, H, dH, d2H) on the given y-grid.
    pub fn trace(&self, ys: &[f64]) -> Result<Vec<[f64; 4]>> {
        ys.iter()
            .map(|&y| {
                let (h, d1, d2) = self.eval(y)?;
                Ok([y, h, d1, d2])
            })
            .collect()
    }
}

/// H_l in closed form: √y(−λ/α² + ((δ−λ/α)/(8α))(ln y)²).
pub fn eval_hl(y: f64, p: &ProblemParams) -> Result<f64> {
    if y < 1.0 {
        return Err(Error::Domain(format!("H_l needs y >= 1, got {y}")));
    }
    let ly = y.ln();
    Ok(y.sqrt() * (-p.la2() + (p.delta - p.la()) / (8.0 * p.alpha) * ly * ly))
}

/// H_r(y; c) with its two y-derivatives.
pub fn eval_hr(y: f64, c: f64, nf: NoFuel) -> Result<(f64, f64, f64)> {
    Obstacle::new(ObstacleKind::Right, nf, c).transformed().eval(y)
}

/// Critical points of the right obstacle, in both scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalYs {
    pub y_c: f64,
    pub y_r: f64,
    pub y_m: f64,
    pub y_v: f64,
    pub x_c: f64,
    pub x_r: f64,
    pub x_m: f64,
    pub x_v: f64,
}

/// (𝓛−α)h_{r1} written out: δ − (αδ−λ)x² + cα(δ(2x−c) − 1).
pub fn generator_hr1(x: f64, c: f64, p: &ProblemParams) -> f64 {
    p.delta - (p.ad() - p.lambda) * x * x + c * p.alpha * (p.delta * (2.0 * x - c) - 1.0)
}

pub fn critical_ys(c: f64, rc: &RegimeConstants, p: &ProblemParams) -> Result<CriticalYs> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("critical points need c > 0, got {c}")));
    }
    let f0 = rc.f0()?;
    let big_k = rc.big_k.expect("K exists when f0 does");
    let map = ScaleMap::new(p.alpha);
    let x_c = p.x_half_delta() + 0.5 * c;
    let x_r = f0 + c;
    let x_m = p.x_half_lambda() + 0.5 * c;
    let x_v = if c > big_k {
        let vertex = p.ad() * c / (p.ad() - p.lambda);
        let hi = vertex.min(x_r);
        brent(|x| generator_hr1(x, c, p), x_c, hi, ROOT_TOL)?
    } else {
        x_c
    };
    Ok(CriticalYs {
        y_c: map.psi(x_c),
        y_r: map.psi(x_r),
        y_m: map.psi(x_m),
        y_v: map.psi(x_v),
        x_c,
        x_r,
        x_m,
        x_v,
    })
}
