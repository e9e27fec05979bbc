// SPDX-License-Identifier: Apache-2.0
//! Candidate value function Q̃(x, c), its regions and the acting
//! displacement ζ.
//!
//! Regions (x ≥ 0, c > 0): I stop, II and III wait, IV act. IV splits by
//! where the diagonal shift (x − u, c − u) first meets a reflecting
//! boundary: the reflecting part of G (IVa), Ḡ (IVb), or nothing before the
//! fuel runs out (IVc).

use serde::Serialize;

use crate::boundaries::Boundaries;
use crate::error::{Error, Result};
use crate::model::{ProblemParams, Regime, RegimeConstants};
use crate::numeric::brent;
use crate::oneshot::NoFuel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionTag {
    I,
    II,
    III,
    IVa,
    IVb,
    IVc,
}

impl RegionTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            RegionTag::I => "I",
            RegionTag::II => "II",
            RegionTag::III => "III",
            RegionTag::IVa => "IVa",
            RegionTag::IVb => "IVb",
            RegionTag::IVc => "IVc",
        }
    }

    pub fn is_action(&self) -> bool {
        matches!(self, RegionTag::IVa | RegionTag::IVb | RegionTag::IVc)
    }

    pub fn is_waiting(&self) -> bool {
        matches!(self, RegionTag::II | RegionTag::III)
    }
}

/// Region of a state; `zeta` is the fuel spent by the immediate action (0
/// outside IV) and (`x_land`, `c_land`) the post-action state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub tag: RegionTag,
    pub zeta: f64,
    pub x_land: f64,
    pub c_land: f64,
}

impl Region {
    fn rest(tag: RegionTag, x: f64, c: f64) -> Self {
        Self { tag, zeta: 0.0, x_land: x, c_land: c }
    }
}

/// Curve values that depend on c only; cached by callers that step in x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FuelSlice {
    pub c: f64,
    pub f: f64,
    pub g: f64,
    pub fbar: Option<f64>,
    pub gbar: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PiecewiseValue {
    pub p: ProblemParams,
    pub rc: RegimeConstants,
    pub nf: Option<NoFuel>,
    pub bnd: Option<Boundaries>,
}

impl PiecewiseValue {
    pub fn new(p: &ProblemParams) -> Result<Self> {
        let rc = RegimeConstants::compute(p)?;
        match rc.regime {
            Regime::HighCost => Ok(Self { p: *p, rc, nf: None, bnd: None }),
            Regime::LegacyBelowStar => Err(Error::UnsupportedRegime(format!(
                "lambda = {} <= lambda* = {}: full solve not supported",
                p.lambda, rc.lambda_star
            ))),
            _ => {
                let bnd = Boundaries::build(p)?;
                Ok(Self { p: *p, rc, nf: Some(bnd.nf()), bnd: Some(bnd) })
            }
        }
    }

    pub fn from_boundaries(bnd: Boundaries) -> Self {
        Self { p: bnd.p, rc: bnd.rc.clone(), nf: Some(bnd.nf()), bnd: Some(bnd) }
    }

    pub fn regime(&self) -> Regime {
        self.rc.regime
    }

    fn b(&self) -> &Boundaries {
        self.bnd.as_ref().expect("boundaries exist outside HighCost")
    }

    pub fn slice(&self, c: f64) -> FuelSlice {
        match &self.bnd {
            None => {
                let x = self.p.x_half_delta();
                FuelSlice { c, f: x, g: x, fbar: None, gbar: None }
            }
            Some(b) => {
                let ci = b.c_i().unwrap_or(0.0);
                let upper = c < ci;
                FuelSlice {
                    c,
                    f: b.f(c),
                    g: b.g(c),
                    fbar: if upper { b.fbar(c) } else { None },
                    gbar: if upper { b.gbar(c) } else { None },
                }
            }
        }
    }

    /// Region of (|x|, c).
    pub fn classify(&self, x: f64, c: f64) -> Region {
        if c <= 0.0 {
            return self.classify_no_fuel(x);
        }
        self.classify_in(x, &self.slice(c))
    }

    fn classify_no_fuel(&self, x: f64) -> Region {
        let x = x.abs();
        let edge = self.nf.map_or(f64::INFINITY, |nf| nf.f0);
        let tag = if x <= edge { RegionTag::I } else { RegionTag::II };
        Region::rest(tag, x, 0.0)
    }

    /// As [`classify`](Self::classify) with the c-dependent curve values given.
    pub fn classify_in(&self, x: f64, sl: &FuelSlice) -> Region {
        let x = x.abs();
        let c = sl.c;
        if c <= 0.0 {
            return self.classify_no_fuel(x);
        }
        if self.bnd.is_none() {
            let xs = self.p.x_half_delta();
            if x <= xs {
                return Region::rest(RegionTag::I, x, c);
            }
            let zeta = (x - xs).min(c);
            let tag = if zeta < c { RegionTag::IVa } else { RegionTag::IVc };
            return Region { tag, zeta, x_land: x - zeta, c_land: c - zeta };
        }
        if x <= sl.f {
            return Region::rest(RegionTag::I, x, c);
        }
        if x < sl.g {
            return Region::rest(RegionTag::II, x, c);
        }
        if let (Some(fb), Some(gb)) = (sl.fbar, sl.gbar) {
            if x > fb && x < gb {
                return Region::rest(RegionTag::III, x, c);
            }
        }
        let (tag, zeta) = self.zeta_in(x, sl);
        Region { tag, zeta, x_land: x - zeta, c_land: c - zeta }
    }

    /// ζ(x, c) for a state in IV (capped at c).
    pub fn zeta(&self, x: f64, c: f64) -> f64 {
        let r = self.classify(x, c);
        if r.tag.is_action() {
            r.zeta
        } else {
            0.0
        }
    }

    fn zeta_in(&self, x: f64, sl: &FuelSlice) -> (RegionTag, f64) {
        let b = self.b();
        let c = sl.c;
        let c_bar = b.c_bar();
        if c > c_bar {
            let phi = |u: f64| b.g(c - u) - (x - u);
            let top = c - c_bar;
            if phi(0.0) >= 0.0 {
                return (RegionTag::IVa, 0.0);
            }
            if phi(top) >= 0.0 {
                let u = brent(phi, 0.0, top, 1e-14).unwrap_or(top);
                return (RegionTag::IVa, u);
            }
        }
        if let Some(u) = &b.upper {
            if x < u.g0 + c {
                let u_lo = (c - u.c_i).max(0.0);
                let psi = |v: f64| u.gbar(c - v) - (x - v);
                let at_lo = psi(u_lo);
                if at_lo <= 0.0 {
                    let v = if at_lo == 0.0 {
                        u_lo
                    } else {
                        // ψ rises with slope ≥ 1, so the root is within −ψ(u_lo) of u_lo.
                        let hi = (u_lo - at_lo).min(c);
                        brent(psi, u_lo, hi, 1e-14).unwrap_or(hi)
                    };
                    return (RegionTag::IVb, v);
                }
            }
        }
        (RegionTag::IVc, c)
    }

    fn particular(&self, x: f64) -> (f64, f64) {
        let p = &self.p;
        (p.la() * x * x + p.la2(), 2.0 * p.la() * x)
    }

    /// Waiting-region closed form with coefficients (A, B, A', B') at x.
    /// Returns (Q, Q_x, Q_c, Q_xx, Q_xc).
    fn waiting_form(&self, x: f64, a: f64, bb: f64, ap: f64, bp: f64) -> [f64; 5] {
        let s = self.p.s();
        let (ep, em) = ((s * x).exp(), (-s * x).exp());
        let (part, dpart) = self.particular(x);
        [
            a * ep + bb * em + part,
            s * (a * ep - bb * em) + dpart,
            ap * ep + bp * em,
            s * s * (a * ep + bb * em) + 2.0 * self.p.la(),
            s * (ap * ep - bp * em),
        ]
    }

    /// (A, B, A', B') for region II at fuel c.
    pub fn coef_ii(&self, c: f64) -> (f64, f64, f64, f64) {
        let b = self.b();
        let (a, ap) = b.a2(c);
        let (bb, bp) = b.b2(c);
        (a, bb, ap, bp)
    }

    /// (Ã, B̃, Ã', B̃') for region III at fuel c ≤ c_ℐ.
    pub fn coef_iii(&self, c: f64) -> Option<(f64, f64, f64, f64)> {
        let u = self.b().upper.as_ref().filter(|u| c <= u.c_i)?;
        Some((u.a_tilde(c), u.b_tilde(c), u.a_tilde_prime(c), u.b_tilde_prime(c)))
    }

    /// Q and its partials at (|x|, c): [Q, Q_x, Q_c, Q_xx, Q_xc].
    pub fn jet(&self, x: f64, c: f64) -> [f64; 5] {
        self.jet_in(x, &self.slice(c.max(0.0)))
    }

    pub fn jet_in(&self, x: f64, sl: &FuelSlice) -> [f64; 5] {
        let ax = x.abs();
        let r = self.classify_in(ax, sl);
        let mut j = self.jet_region(ax, sl.c, &r);
        if x < 0.0 {
            j[1] = -j[1];
            j[4] = -j[4];
        }
        j
    }

    fn jet_region(&self, x: f64, c: f64, r: &Region) -> [f64; 5] {
        let p = &self.p;
        let d = p.delta;
        match (self.nf, r.tag) {
            (_, RegionTag::I) => [d * x * x, 2.0 * d * x, 0.0, 2.0 * d, 0.0],
            (None, _) => {
                // λ ≥ αδ: act towards 1/(2δ), stop afterwards.
                let xl = r.x_land;
                [r.zeta + d * xl * xl, 2.0 * d * xl, 1.0 - 2.0 * d * xl, 2.0 * d * (r.c_land == 0.0) as u8 as f64, 0.0]
            }
            (Some(nf), _) if c <= 0.0 => {
                let (v, v1, v2) = nf.jet(x);
                [v, v1, 0.0, v2, 0.0]
            }
            (Some(_), RegionTag::II) => {
                let (a, bb, ap, bp) = self.coef_ii(c);
                self.waiting_form(x, a, bb, ap, bp)
            }
            (Some(_), RegionTag::III) => {
                let (a, bb, ap, bp) = self.coef_iii(c).expect("III only below c_I");
                self.waiting_form(x, a, bb, ap, bp)
            }
            (Some(nf), RegionTag::IVc) => {
                let (v, v1, v2) = nf.jet(x - c);
                [v + c, v1, 1.0 - v1, v2, -v2]
            }
            (Some(_), tag) => {
                let (xl, cl, z) = (r.x_land, r.c_land, r.zeta);
                let land = if tag == RegionTag::IVa {
                    let (a, bb, ap, bp) = self.coef_ii(cl);
                    self.waiting_form(xl, a, bb, ap, bp)
                } else {
                    let (a, bb, ap, bp) = self.coef_iii(cl).expect("landing on G-bar");
                    self.waiting_form(xl, a, bb, ap, bp)
                };
                let q = land[0] + z;
                let qx = land[1];
                // Second derivative from the action-region generator identity.
                let gen = 2.0 * p.lambda * z * (xl - p.x_half_lambda()) + p.lambda * z * z;
                let qxx = 2.0 * (gen + p.alpha * q - p.lambda * x * x);
                [q, qx, 1.0 - qx, qxx, -qxx]
            }
        }
    }

    pub fn value(&self, x: f64, c: f64) -> f64 {
        if c <= 0.0 {
            return match self.nf {
                Some(nf) => nf.value(x),
                None => self.p.delta * x * x,
            };
        }
        self.jet(x, c)[0]
    }

    /// U = (∂x + ∂c)Q̃.
    pub fn marginal_u(&self, x: f64, c: f64) -> f64 {
        let j = self.jet(x, c);
        j[1] + j[2]
    }

    /// ∂U/∂x.
    pub fn marginal_u_x(&self, x: f64, c: f64) -> f64 {
        let j = self.jet(x, c);
        j[3] + j[4]
    }

    /// h*_r(x; c) = Q̃(x − ζ, c − ζ) + ζ − (λ/α)x² − λ/α² for c > c_ℐ.
    pub fn hstar_r(&self, x: f64, c: f64) -> Result<f64> {
        let u = self
            .bnd
            .as_ref()
            .and_then(|b| b.upper.as_ref())
            .ok_or_else(|| Error::UnsupportedRegime("h*_r needs the second waiting region".into()))?;
        if c <= u.c_i {
            return Err(Error::Domain(format!("h*_r needs c > c_I = {}", u.c_i)));
        }
        Ok(u.hstar_jet(x.abs(), c).0)
    }

    /// (𝓛 − α)Q̃ + λx² in closed form (I, IVa/b, IVc); zero in II/III.
    pub fn supersolution_residual(&self, x: f64, c: f64) -> f64 {
        let j = self.jet(x, c);
        0.5 * j[3] - self.p.alpha * j[0] + self.p.lambda * x * x
    }
}

/// Coefficient samples for export.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientSummary {
    pub c: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "B")]
    pub b: Vec<f64>,
    #[serde(rename = "A_tilde")]
    pub a_tilde: Vec<Option<f64>>,
    #[serde(rename = "B_tilde")]
    pub b_tilde: Vec<Option<f64>>,
}

pub fn coefficient_summary(pv: &PiecewiseValue, c_grid: &[f64]) -> CoefficientSummary {
    let mut out = CoefficientSummary { c: Vec::new(), a: Vec::new(), b: Vec::new(), a_tilde: Vec::new(), b_tilde: Vec::new() };
    if pv.bnd.is_none() {
        return out;
    }
    for &c in c_grid.iter().filter(|&&c| c > 0.0) {
        let (a, b, _, _) = pv.coef_ii(c);
        let t = pv.coef_iii(c);
        out.c.push(c);
        out.a.push(a);
        out.b.push(b);
        out.a_tilde.push(t.map(|t| t.0));
        out.b_tilde.push(t.map(|t| t.1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lambda_dagger, lambda_star};
    use crate::numeric::{d1_5pt, d2_5pt};

    fn vshape() -> PiecewiseValue {
        let l = 0.5 * (lambda_dagger(1.0, 1.0).unwrap() + 1.0);
        PiecewiseValue::new(&ProblemParams::new(l, 1.0, 1.0).unwrap()).unwrap()
    }

    fn vlambda() -> PiecewiseValue {
        let l = 0.5 * (lambda_star(1.0, 1.0) + lambda_dagger(1.0, 1.0).unwrap());
        PiecewiseValue::new(&ProblemParams::new(l, 1.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn value_at_zero_fuel_is_no_fuel_value() {
        let pv = vlambda();
        let nf = pv.nf.unwrap();
        for i in 0..50 {
            let x = i as f64 * 0.07;
            assert_eq!(pv.value(x, 0.0), nf.value(x));
        }
    }

    #[test]
    fn even_and_origin() {
        for pv in [vshape(), vlambda()] {
            for &c in &[0.05, 0.3, 1.0] {
                assert_eq!(pv.value(0.0, c), 0.0);
                for &x in &[0.3, 0.7, 1.1, 2.0] {
                    assert_eq!(pv.value(-x, c), pv.value(x, c));
                }
            }
        }
    }

    #[test]
    fn vshape_small_fuel_beyond_g_is_full_shot() {
        let pv = vshape();
        let nf = pv.nf.unwrap();
        let c = 0.1;
        let g = pv.bnd.as_ref().unwrap().g(c);
        for &x in &[g + 0.01, g + 0.3, 2.5] {
            assert_eq!(pv.classify(x, c).tag, RegionTag::IVc);
            assert!((pv.value(x, c) - (nf.value(x - c) + c)).abs() < 1e-14);
        }
    }

    #[test]
    fn region_examples() {
        let pv = vlambda();
        let nf = pv.nf.unwrap();
        assert_eq!(pv.classify(0.0, 0.2).tag, RegionTag::I);
        let eps = 1e-3;
        assert_eq!(pv.classify(nf.f0 + eps, eps / 2.0).tag, RegionTag::III);
        assert_eq!(pv.classify(50.0, 0.2).tag, RegionTag::IVc);
    }

    #[test]
    fn zeta_lands_on_gbar() {
        let pv = vlambda();
        let b = pv.bnd.as_ref().unwrap();
        let u = b.upper.as_ref().unwrap();
        let c = 0.5;
        let x = 0.5 * (u.d_of(c) + u.g0 + c);
        let r = pv.classify(x, c);
        assert_eq!(r.tag, RegionTag::IVb);
        assert!((x - r.zeta - u.gbar(c - r.zeta)).abs() < 1e-9);
        let c2 = 0.1;
        assert!(pv.zeta(u.gbar(c2), c2) < 1e-12);
    }

    fn waiting_points(pv: &PiecewiseValue) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for &c in &[0.05, 0.2, 0.6, 1.2] {
            let sl = pv.slice(c);
            pts.push((0.5 * (sl.f + sl.g), c));
            if let (Some(a), Some(b)) = (sl.fbar, sl.gbar) {
                pts.push((0.5 * (a + b), c));
            }
        }
        pts
    }

    #[test]
    fn feynman_kac_on_waiting_regions() {
        let pv = vlambda();
        let p = pv.p;
        for (x, c) in waiting_points(&pv) {
            let r = pv.classify(x, c);
            assert!(r.tag.is_waiting(), "{x} {c} {:?}", r.tag);
            let j = pv.jet(x, c);
            assert!((0.5 * j[3] - p.alpha * j[0] + p.lambda * x * x).abs() < 1e-12);
            let fd = d2_5pt(|t| pv.value(t, c), x, 1e-4);
            assert!((0.5 * fd - p.alpha * j[0] + p.lambda * x * x).abs() < 1e-7);
        }
    }

    #[test]
    fn analytic_partials_match_fd_on_waiting_regions() {
        let pv = vlambda();
        for (x, c) in waiting_points(&pv) {
            let j = pv.jet(x, c);
            let qx = d1_5pt(|t| pv.value(t, c), x, 1e-5);
            let qc = d1_5pt(|t| pv.value(x, t), c, 1e-5);
            assert!((qx - j[1]).abs() < 1e-6 * j[1].abs().max(1.0));
            assert!((qc - j[2]).abs() < 1e-6 * j[2].abs().max(1.0), "{qc} {}", j[2]);
        }
    }

    #[test]
    fn marginal_at_boundaries() {
        let pv = vlambda();
        let b = pv.bnd.as_ref().unwrap();
        let c = 0.15;
        let f = b.f(c);
        assert!((pv.marginal_u(f, c) - 2.0 * pv.p.delta * f).abs() < 1e-12);
        let gb = b.gbar(c).unwrap();
        let xin = gb - 1e-9;
        assert!((pv.marginal_u(xin, c) - 1.0).abs() < 1e-7);
        assert!(pv.marginal_u_x(xin, c).abs() < 1e-6);
        assert_eq!(pv.marginal_u(2.5, c), 1.0);
    }

    #[test]
    fn high_cost_assembly() {
        let pv = PiecewiseValue::new(&ProblemParams::new(1.5, 1.0, 1.0).unwrap()).unwrap();
        assert_eq!(pv.value(0.3, 1.0), 0.09);
        assert!((pv.value(1.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((pv.value(3.0, 1.0) - 5.0).abs() < 1e-15);
        assert_eq!(pv.value(2.0, 0.0), 4.0);
    }

    #[test]
    fn value_below_obstacle() {
        for pv in [vshape(), vlambda()] {
            for i in 0..60 {
                for &c in &[0.02, 0.2, 0.5, 1.5] {
                    let x = i as f64 * 0.05;
                    assert!(pv.value(x, c) <= pv.p.delta * x * x + 1e-12);
                }
            }
        }
    }

    #[test]
    fn hstar_matches_hr_outside_shift_zone() {
        let pv = vlambda();
        let u = pv.bnd.as_ref().unwrap().upper.as_ref().unwrap();
        let c = 0.5;
        let nf = pv.nf.unwrap();
        let p = pv.p;
        for &x in &[0.7, u.d_of(c) - 0.01, u.g0 + c + 0.01, 3.0] {
            let hr = nf.value(x - c) + c - p.la() * x * x - p.la2();
            assert!((pv.hstar_r(x, c).unwrap() - hr).abs() < 1e-12);
        }
        assert!(pv.hstar_r(1.0, 0.1).is_err());
    }

    #[test]
    fn legacy_regime_refused() {
        let l = 0.9 * lambda_star(1.0, 1.0);
        let e = PiecewiseValue::new(&ProblemParams::new(l, 1.0, 1.0).unwrap()).unwrap_err();
        assert!(e.to_string().contains("lambda*"));
    }
}
