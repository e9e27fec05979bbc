// SPDX-License-Identifier: Apache-2.0
//! Tangent-coefficient functions h₁…h₄, ℋ̃₃/ℋ̃₄, q, q̃ and the map 𝒳.

use crate::error::{Error, Result};
use crate::model::ProblemParams;
use crate::numeric::{brent, scan_bracket, ROOT_TOL};
use crate::oneshot::{LeftTangents, NoFuel};
use crate::transform::{Obstacle, ObstacleKind, Tangent};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialFunctions {
    pub p: ProblemParams,
    pub nf: NoFuel,
    pub lt: LeftTangents,
    s: f64,
    xhl: f64,
}

impl SpecialFunctions {
    pub fn new(p: &ProblemParams) -> Result<Self> {
        let nf = NoFuel::new(p)?;
        Ok(Self { p: *p, nf, lt: LeftTangents::new(nf), s: p.s(), xhl: p.x_half_lambda() })
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn h1(&self, x: f64) -> f64 {
        self.lt.h1(x)
    }

    pub fn h2(&self, x: f64) -> f64 {
        self.lt.h2(x)
    }

    pub fn h1_prime(&self, x: f64) -> f64 {
        self.lt.h1_prime(x)
    }

    pub fn h2_prime(&self, x: f64) -> f64 {
        self.lt.h2_prime(x)
    }

    pub fn h1_inv(&self, v: f64) -> f64 {
        self.lt.h1_inv(v).0
    }

    pub fn h3(&self, x: f64) -> f64 {
        self.p.la() * (self.xhl - x - 1.0 / self.s) * (-x * self.s).exp()
    }

    pub fn h4(&self, x: f64) -> f64 {
        self.p.la() * (x - self.xhl - 1.0 / self.s) * (x * self.s).exp()
    }

    pub fn h3_prime(&self, x: f64) -> f64 {
        self.p.la() * self.s * (x - self.xhl) * (-x * self.s).exp()
    }

    pub fn h4_prime(&self, x: f64) -> f64 {
        self.p.la() * self.s * (x - self.xhl) * (x * self.s).exp()
    }

    fn r1(&self, c: f64) -> Obstacle {
        Obstacle::new(ObstacleKind::Right1, self.nf, c)
    }

    /// Slope, intercept and x-derivative of the slope of H_{r1}(·; c) at Ψ(x).
    pub fn tangent_r1(&self, x: f64, c: f64) -> Tangent {
        self.r1(c).tangent(x)
    }

    /// ℋ̃₃(x, c): slope of the H_{r1}(·; c) tangent at Ψ(x).
    pub fn htilde3(&self, x: f64, c: f64) -> f64 {
        self.tangent_r1(x, c).slope
    }

    /// ℋ̃₄(x, c): its vertical-axis intercept.
    pub fn htilde4(&self, x: f64, c: f64) -> f64 {
        self.tangent_r1(x, c).intercept
    }

    pub fn htilde3_x(&self, x: f64, c: f64) -> f64 {
        self.tangent_r1(x, c).dslope
    }

    pub fn htilde4_x(&self, x: f64, c: f64) -> f64 {
        -(2.0 * x * self.s).exp() * self.htilde3_x(x, c)
    }

    /// ∂ℋ̃₃/∂c from (∂x + ∂c)ℋ̃₃ = h₃ − √(2α)ℋ̃₃.
    pub fn htilde3_c(&self, x: f64, c: f64) -> f64 {
        let t = self.tangent_r1(x, c);
        self.h3(x) - self.s * t.slope - t.dslope
    }

    /// ∂ℋ̃₄/∂c from (∂x + ∂c)ℋ̃₄ = √(2α)ℋ̃₄ − h₄.
    pub fn htilde4_c(&self, x: f64, c: f64) -> f64 {
        let t = self.tangent_r1(x, c);
        self.s * t.intercept - self.h4(x) - self.htilde4_x(x, c)
    }

    pub fn q(&self, x: f64, z: f64) -> f64 {
        let e = (2.0 * z * self.s).exp();
        self.s * (self.h2(z) - self.h1(z) * e) + self.h3(x) * e - self.h4(x)
    }

    pub fn q_x(&self, x: f64, z: f64) -> f64 {
        self.h3_prime(x) * (2.0 * z * self.s).exp() - self.h4_prime(x)
    }

    pub fn q_z(&self, x: f64, z: f64) -> f64 {
        let s = self.s;
        let e = (2.0 * z * s).exp();
        s * (self.h2_prime(z) - self.h1_prime(z) * e - 2.0 * s * self.h1(z) * e)
            + 2.0 * s * self.h3(x) * e
    }

    /// q(z; z) = e^{z√(2α)}(1 − 2δz).
    pub fn q_diag(&self, z: f64) -> f64 {
        (z * self.s).exp() * (1.0 - 2.0 * self.p.delta * z)
    }

    pub fn qtilde(&self, x: f64, z: f64) -> f64 {
        self.q(x, z) - self.q(z, z)
    }

    pub fn qtilde_z(&self, x: f64, z: f64) -> f64 {
        let d = self.p.delta;
        let diag = (z * self.s).exp() * (self.s * (1.0 - 2.0 * d * z) - 2.0 * d);
        self.q_z(x, z) - diag
    }

    /// 𝒳(z): the root of q̃(·; z) above α/(2λ) for z < α/(2λ), and z itself
    /// otherwise.
    pub fn chi(&self, z: f64) -> Result<f64> {
        if z <= self.p.x_half_delta() {
            return Err(Error::Domain(format!("chi needs z > 1/(2 delta), got {z}")));
        }
        if z >= self.xhl {
            return Ok(z);
        }
        let hi0 = (self.xhl + 1.0 / self.s).min(2.0 * self.xhl - z);
        let f = |x: f64| self.qtilde(x, z);
        if f(hi0) < 0.0 {
            return brent(f, self.xhl, hi0, ROOT_TOL);
        }
        let (a, b) = scan_bracket(f, self.xhl, self.xhl + 4.0 / self.s, 400)
            .ok_or_else(|| Error::Domain(format!("no root of qtilde(.; {z})")))?;
        brent(f, a, b, ROOT_TOL)
    }

    /// 𝒳'(z) by implicit differentiation of q̃(𝒳(z); z) = 0.
    pub fn chi_prime(&self, z: f64) -> Result<f64> {
        if z >= self.xhl {
            return Ok(1.0);
        }
        let x = self.chi(z)?;
        Ok(-self.qtilde_z(x, z) / self.q_x(x, z))
    }

    /// Root of q(·; z) in (α/(2λ), α/(2λ) + 1/√(2α)): the reflecting G for a
    /// given F in the large-fuel regime.
    pub fn q_root_above(&self, z: f64) -> Result<f64> {
        let lo = self.xhl;
        let hi = self.xhl + 1.0 / self.s;
        let f = |x: f64| self.q(x, z);
        if f(lo) <= 0.0 {
            return Err(Error::Domain(format!("q(alpha/(2 lambda); {z}) <= 0")));
        }
        if f(hi) >= 0.0 {
            return Err(Error::Domain(format!("q has no root below alpha/(2 lambda) + 1/s for z = {z}")));
        }
        brent(f, lo, hi, ROOT_TOL)
    }

    /// L(x) = I(x) − h₂(h₁⁻¹(S(x))) for a right tangent (S, I).
    pub fn big_l(&self, t: &Tangent) -> f64 {
        self.lt.mismatch(t)
    }

    /// ∂L/∂x = (e^{2z√(2α)} − e^{2x√(2α)})·∂S/∂x with z = h₁⁻¹(S).
    pub fn big_l_x(&self, x: f64, t: &Tangent) -> f64 {
        let z = self.h1_inv(t.slope);
        ((2.0 * z * self.s).exp() - (2.0 * x * self.s).exp()) * t.dslope
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lambda_dagger, lambda_star};
    use crate::numeric::d1_5pt;

    fn vl() -> SpecialFunctions {
        let l = 0.5 * (lambda_star(1.0, 1.0) + lambda_dagger(1.0, 1.0).unwrap());
        SpecialFunctions::new(&ProblemParams::new(l, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn q_diagonal_identity() {
        let sf = vl();
        for &z in &[0.1, 0.45, 0.6, 0.85] {
            assert!((sf.q(z, z) - sf.q_diag(z)).abs() < 1e-12 * (1.0 + sf.q_diag(z).abs()));
            assert!(sf.qtilde(z, z).abs() < 1e-12);
        }
    }

    #[test]
    fn q_partials_match_fd() {
        let sf = vl();
        let (x, z) = (0.95, 0.55);
        assert!((d1_5pt(|t| sf.q(t, z), x, 1e-4) - sf.q_x(x, z)).abs() < 1e-8);
        assert!((d1_5pt(|t| sf.q(x, t), z, 1e-4) - sf.q_z(x, z)).abs() < 1e-8);
        assert!((d1_5pt(|t| sf.qtilde(x, t), z, 1e-4) - sf.qtilde_z(x, z)).abs() < 1e-8);
    }

    #[test]
    fn htilde_identity_h3h4() {
        let sf = vl();
        let s = sf.s();
        for &(x, c) in &[(0.6, 0.05), (0.8, 0.2), (0.75, 0.1)] {
            let d3 = d1_5pt(|t| sf.htilde3(t, c), x, 1e-4);
            let d4 = d1_5pt(|t| sf.htilde4(t, c), x, 1e-4);
            assert!(((x * s).exp() * d3 + (-x * s).exp() * d4).abs() < 1e-8);
            let dc3 = d1_5pt(|t| sf.htilde3(x, t), c, 1e-4);
            let dc4 = d1_5pt(|t| sf.htilde4(x, t), c, 1e-4);
            assert!((dc3 - sf.htilde3_c(x, c)).abs() < 1e-8);
            assert!((dc4 - sf.htilde4_c(x, c)).abs() < 1e-7 * (1.0 + dc4.abs()));
        }
    }

    #[test]
    fn chi_bounds_and_residual() {
        let sf = vl();
        let (xhd, xhl, s) = (sf.p.x_half_delta(), sf.p.x_half_lambda(), sf.s());
        for i in 1..50 {
            let z = xhd + (xhl - xhd) * i as f64 / 50.0;
            let x = sf.chi(z).unwrap();
            assert!(sf.qtilde(x, z).abs() < 1e-11);
            assert!(xhl < x && x < (xhl + 1.0 / s).min(2.0 * xhl - z));
            assert!(sf.q_x(x, z) < 0.0);
            assert!(sf.h3(x) < sf.h3(z));
        }
        assert_eq!(sf.chi(xhl + 0.1).unwrap(), xhl + 0.1);
        assert!(sf.chi(xhd).is_err());
    }

    #[test]
    fn chi_prime_matches_fd() {
        let sf = vl();
        let z = 0.7;
        let fd = d1_5pt(|t| sf.chi(t).unwrap(), z, 1e-5);
        assert!((fd - sf.chi_prime(z).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn h1_tends_to_zero_at_f0() {
        let sf = vl();
        assert!(sf.h1(sf.nf.f0).abs() < 1e-14);
        assert!((sf.h2(sf.nf.f0) - sf.nf.b0).abs() < 1e-12);
    }
}
