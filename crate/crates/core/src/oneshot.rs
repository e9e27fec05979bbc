// SPDX-License-Identifier: Apache-2.0
//! The no-fuel stopping problem and the one-shot problem (spend all fuel at
//! a single instant), solved by the greatest non-positive convex minorant
//! of the transformed obstacle, both by tangency and numerically.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{classify, f0, ProblemParams, Regime, RegimeConstants};
use crate::numeric::{brent, scan_bracket, ROOT_TOL};
use crate::transform::{critical_ys, Obstacle, ObstacleKind, ScaleMap, Tangent};

/// Closed-form no-fuel value Ṽ₀: δx² on [0, f0], B0e^{−x√(2α)} + (λ/α)x² + λ/α²
/// beyond; even in x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoFuel {
    pub p: ProblemParams,
    pub f0: f64,
    pub b0: f64,
}

impl NoFuel {
    pub fn new(p: &ProblemParams) -> Result<Self> {
        let f = f0(p)?;
        let s = p.s();
        let b0 = -(2.0 * f / (p.alpha * s)) * (p.ad() - p.lambda) * (f * s).exp();
        Ok(Self { p: *p, f0: f, b0 })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x).0
    }

    /// Ṽ₀, Ṽ₀', Ṽ₀'' at x (the derivative is odd, the curvature even).
    pub fn jet(&self, x: f64) -> (f64, f64, f64) {
        let ax = x.abs();
        let sg = if x < 0.0 { -1.0 } else { 1.0 };
        let p = &self.p;
        if ax <= self.f0 {
            (p.delta * ax * ax, sg * 2.0 * p.delta * ax, 2.0 * p.delta)
        } else {
            let s = p.s();
            let e = self.b0 * (-s * ax).exp();
            (
                e + p.la() * ax * ax + p.la2(),
                sg * (-s * e + 2.0 * p.la() * ax),
                s * s * e + 2.0 * p.la(),
            )
        }
    }
}

/// Tangent coefficients of the left obstacle H_l at y = Ψ(x):
/// h1 is the slope, h2 the vertical-axis intercept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeftTangents {
    pub nf: NoFuel,
    s: f64,
    a2: f64,
}

impl LeftTangents {
    pub fn new(nf: NoFuel) -> Self {
        Self { nf, s: nf.p.s(), a2: nf.p.delta - nf.p.la() }
    }

    fn hl(&self, x: f64) -> (f64, f64) {
        (self.a2 * x * x - self.nf.p.la2(), 2.0 * self.a2 * x)
    }

    pub fn h1(&self, x: f64) -> f64 {
        let (g, g1) = self.hl(x);
        (-self.s * x).exp() * (g1 + self.s * g) / (2.0 * self.s)
    }

    pub fn h2(&self, x: f64) -> f64 {
        let (g, g1) = self.hl(x);
        (self.s * x).exp() * (self.s * g - g1) / (2.0 * self.s)
    }

    pub fn h1_prime(&self, x: f64) -> f64 {
        let (g, _) = self.hl(x);
        (-self.s * x).exp() * (self.a2 - self.nf.p.alpha * g) / self.s
    }

    pub fn h2_prime(&self, x: f64) -> f64 {
        -(2.0 * self.s * x).exp() * self.h1_prime(x)
    }

    /// Inverse of h1 on [0, f0]; slopes outside [h1(0), 0] are clamped to
    /// the end points. The flag reports clamping.
    pub fn h1_inv(&self, v: f64) -> (f64, bool) {
        let lo = self.h1(0.0);
        if v <= lo {
            return (0.0, v < lo);
        }
        if v >= 0.0 {
            return (self.nf.f0, v > 0.0);
        }
        // h1(f0) is zero only up to rounding.
        if self.h1(self.nf.f0) <= v {
            return (self.nf.f0, false);
        }
        match brent(|x| self.h1(x) - v, 0.0, self.nf.f0, ROOT_TOL) {
            Ok(x) => (x, false),
            Err(_) => (self.nf.f0, false),
        }
    }

    /// Intercept mismatch between the right tangent and the left tangent of
    /// equal slope.
    pub fn mismatch(&self, t: &Tangent) -> f64 {
        let (z, _) = self.h1_inv(t.slope);
        t.intercept - self.h2(z)
    }
}

/// A common tangent between H_l (at natural F) and a right obstacle (at G).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tangency {
    pub f: f64,
    pub g: f64,
    pub slope: f64,
    pub intercept: f64,
    /// The slope fell below h1(0): the left contact point sits at x = 0.
    pub clamped: bool,
}

/// Solve for the common tangent; `right(x)` gives the right obstacle's
/// tangent at Ψ(x). The mismatch must be positive at `lo`; the first sign
/// change on `[lo, hi]` is refined.
pub fn double_tangent<R: Fn(f64) -> Tangent>(
    lt: &LeftTangents,
    right: R,
    lo: f64,
    hi: f64,
) -> Result<Tangency> {
    let l = |x: f64| lt.mismatch(&right(x));
    let l_lo = l(lo);
    if !(l_lo > 0.0) {
        return Err(Error::Bracket { lo, hi, flo: l_lo, fhi: l(hi) });
    }
    let (a, b) = scan_bracket(l, lo, hi, 64)
        .ok_or_else(|| Error::Bracket { lo, hi, flo: l_lo, fhi: l(hi) })?;
    let g = brent(l, a, b, ROOT_TOL)?;
    let t = right(g);
    let (f, clamped) = lt.h1_inv(t.slope);
    Ok(Tangency { f, g, slope: t.slope, intercept: t.intercept, clamped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PieceKind {
    ObstacleFollowing,
    Linear,
}

/// One piece of the minorant W on [y_lo, y_hi]; linear pieces carry W = A·y + B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinorantPiece {
    pub kind: PieceKind,
    pub y_lo: f64,
    pub y_hi: f64,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    #[serde(rename = "B")]
    pub b: Option<f64>,
}

impl MinorantPiece {
    fn obstacle(y_lo: f64, y_hi: f64) -> Self {
        Self { kind: PieceKind::ObstacleFollowing, y_lo, y_hi, a: None, b: None }
    }

    fn linear(y_lo: f64, y_hi: f64, a: f64, b: f64) -> Self {
        Self { kind: PieceKind::Linear, y_lo, y_hi, a: Some(a), b: Some(b) }
    }
}

/// Relative contact tolerance for piece tagging.
pub const CONTACT_TOL: f64 = 1e-7;

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Greatest non-positive convex minorant of sampled `(ys, hs)` (ys strictly
/// increasing). Returns the tagged pieces.
pub fn convex_minorant_numeric(ys: &[f64], hs: &[f64]) -> Result<Vec<MinorantPiece>> {
    if ys.len() < 3 || ys.len() != hs.len() {
        return Err(Error::Domain("minorant needs at least 3 samples".into()));
    }
    let n = ys.len();
    // A concave tail means the envelope would still change beyond y_max.
    let d2 = |i: usize| {
        let (y0, y1, y2) = (ys[i - 1], ys[i], ys[i + 1]);
        ((hs[i + 1] - hs[i]) / (y2 - y1) - (hs[i] - hs[i - 1]) / (y1 - y0)) / (y2 - y0)
    };
    if d2(n - 2) < 0.0 && hs[n - 1] < 0.0 {
        return Err(Error::OutOfRange(
            "obstacle is not convex at y_max; increase y_max".into(),
        ));
    }
    let pts: Vec<(f64, f64)> = ys.iter().zip(hs).map(|(&y, &h)| (y, h.min(0.0))).collect();
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2
            && cross(pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]], pts[i]) <= 0.0
        {
            hull.pop();
        }
        hull.push(i);
    }
    let mut pieces: Vec<MinorantPiece> = Vec::new();
    for w in hull.windows(2) {
        let (i, j) = (w[0], w[1]);
        let a = (pts[j].1 - pts[i].1) / (pts[j].0 - pts[i].0);
        let b = pts[i].1 - a * pts[i].0;
        let contact = (i + 1..j).all(|k| {
            let chord = a * ys[k] + b;
            (hs[k] - chord).abs() < CONTACT_TOL * (1.0 + hs[k].abs())
        });
        let piece = if contact {
            MinorantPiece::obstacle(ys[i], ys[j])
        } else {
            MinorantPiece::linear(ys[i], ys[j], a, b)
        };
        match pieces.last_mut() {
            Some(last) if contact && last.kind == PieceKind::ObstacleFollowing => last.y_hi = ys[j],
            _ => pieces.push(piece),
        }
    }
    Ok(pieces)
}

/// Numeric minorant of the combined obstacle H(·; c) on a log-spaced grid,
/// refined around every linear-piece end point.
pub fn numeric_minorant(p: &ProblemParams, c: f64, n: usize) -> Result<Vec<MinorantPiece>> {
    let nf = NoFuel::new(p)?;
    let kind = if c > 0.0 { ObstacleKind::Combined } else { ObstacleKind::Left };
    let h = Obstacle::new(kind, nf, c).transformed();
    let map = ScaleMap::new(p.alpha);
    let x_max = nf.f0.max(p.x_half_lambda()) + c + 10.0 / p.s();
    let ln_max = 2.0 * p.s() * x_max;
    let mut ys: Vec<f64> = (0..n).map(|i| (ln_max * i as f64 / (n - 1) as f64).exp()).collect();
    let mut pieces = Vec::new();
    for round in 0..4 {
        let hs: Vec<f64> = ys.iter().map(|&y| h.value(y)).collect::<Result<_>>()?;
        pieces = convex_minorant_numeric(&ys, &hs)?;
        if round == 3 {
            break;
        }
        let mut extra = Vec::new();
        for pc in pieces.iter().filter(|pc| pc.kind == PieceKind::Linear) {
            for &ye in &[pc.y_lo, pc.y_hi] {
                let k = ys.partition_point(|&v| v < ye);
                let lo = ys[k.saturating_sub(3)];
                let hi = ys[(k + 3).min(ys.len() - 1)];
                extra.extend((0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0));
            }
        }
        if extra.is_empty() {
            break;
        }
        ys.extend(extra);
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * b.abs());
    }
    let _ = map;
    Ok(pieces)
}

/// Analytic tangency between H_l and H_{r1}: returns (ŷ₁, ŷ₂).
pub fn solve_tangency_12(c: f64, p: &ProblemParams) -> Result<(f64, f64)> {
    let t = tangency_12(c, p)?;
    let map = ScaleMap::new(p.alpha);
    Ok((map.psi(t.f), map.psi(t.g)))
}

/// Natural-scale version of [`solve_tangency_12`].
pub fn tangency_12(c: f64, p: &ProblemParams) -> Result<Tangency> {
    let rc = RegimeConstants::compute(p)?;
    if !matches!(rc.regime, Regime::VShape | Regime::VLambdaShape) {
        return Err(Error::UnsupportedRegime(format!(
            "tangency needs lambda in (lambda* = {}, alpha*delta)",
            rc.lambda_star
        )));
    }
    let nf = NoFuel::new(p)?;
    let cy = critical_ys(c, &rc, p)?;
    let r1 = Obstacle::new(ObstacleKind::Right1, nf, c);
    let lt = LeftTangents::new(nf);
    let lo = cy.x_c.max(cy.x_v);
    let t = double_tangent(&lt, |x| r1.tangent(x), lo, cy.x_r).map_err(|e| match e {
        Error::Bracket { .. } => Error::OutOfRange(format!(
            "c = {c}: no tangency with G <= f0 + c (c is beyond c1)"
        )),
        other => other,
    })?;
    if t.clamped {
        return Err(Error::OutOfRange(format!("c = {c}: left contact reached x = 0 (c beyond c_m)")));
    }
    Ok(t)
}

/// Double tangency between H_{r1} (at ŷ₃) and H_{r2} (at ŷ₄).
pub fn solve_tangency_34(c: f64, p: &ProblemParams) -> Result<(f64, f64)> {
    let (x3, x4) = tangency_34(c, p)?;
    let map = ScaleMap::new(p.alpha);
    Ok((map.psi(x3), map.psi(x4)))
}

/// Natural-scale contact points (x₃, x₄) of the second linear piece.
pub fn tangency_34(c: f64, p: &ProblemParams) -> Result<(f64, f64)> {
    let rc = RegimeConstants::compute(p)?;
    if rc.regime != Regime::VLambdaShape {
        return Err(Error::NoSecondTangent(c));
    }
    let nf = NoFuel::new(p)?;
    let cy = critical_ys(c, &rc, p)?;
    let t12 = tangency_12(c, p)?;
    let r1 = Obstacle::new(ObstacleKind::Right1, nf, c);
    let r2 = Obstacle::new(ObstacleKind::Right2, nf, c);
    let lo3 = cy.x_v.max(t12.g);
    let (s_lo, s_hi) = (r1.tangent(lo3).slope, r1.tangent(cy.x_r).slope);
    let x3_of = |slope: f64| -> f64 {
        if slope <= s_lo {
            lo3
        } else if slope >= s_hi {
            cy.x_r
        } else {
            brent(|x| r1.tangent(x).slope - slope, lo3, cy.x_r, ROOT_TOL).unwrap_or(cy.x_r)
        }
    };
    let resid = |x4: f64| {
        let t4 = r2.tangent(x4);
        let x3 = x3_of(t4.slope);
        r1.tangent(x3).intercept - t4.intercept
    };
    let hi = cy.x_m + 20.0 / p.s();
    let (a, b) = scan_bracket(resid, cy.x_m, hi, 400).ok_or(Error::NoSecondTangent(c))?;
    let x4 = brent(resid, a, b, ROOT_TOL)?;
    let x3 = x3_of(r2.tangent(x4).slope);
    if !(t12.g < x3 && x3 < cy.x_r && cy.x_r <= cy.x_m && cy.x_m < x4) {
        return Err(Error::NoSecondTangent(c));
    }
    Ok((x3, x4))
}

/// Solution of the one-shot problem at fuel c.
#[derive(Debug, Clone, Serialize)]
pub struct OneShotSolution {
    pub c: f64,
    pub pieces: Vec<MinorantPiece>,
    /// Stopping set as x-intervals; the last one is unbounded.
    pub stopping_set: Vec<(f64, f64)>,
    #[serde(skip)]
    nf: Option<NoFuel>,
    #[serde(skip)]
    p: ProblemParams,
    /// Natural-scale linear-piece end points with their (A, B).
    #[serde(skip)]
    lines: Vec<(f64, f64, f64, f64)>,
}

/// Ṽ₀ as a one-shot solution; for λ ≥ αδ the stopping set is everything.
pub fn solve_v0(p: &ProblemParams) -> Result<OneShotSolution> {
    p.validate()?;
    if p.lambda >= p.ad() {
        return Ok(OneShotSolution {
            c: 0.0,
            pieces: vec![MinorantPiece::obstacle(1.0, f64::INFINITY)],
            stopping_set: vec![(0.0, f64::INFINITY)],
            nf: None,
            p: *p,
            lines: Vec::new(),
        });
    }
    let nf = NoFuel::new(p)?;
    let map = ScaleMap::new(p.alpha);
    let yf = map.psi(nf.f0);
    Ok(OneShotSolution {
        c: 0.0,
        pieces: vec![
            MinorantPiece::obstacle(1.0, yf),
            MinorantPiece::linear(yf, f64::INFINITY, 0.0, nf.b0),
        ],
        stopping_set: vec![(0.0, nf.f0)],
        nf: Some(nf),
        p: *p,
        lines: vec![(nf.f0, f64::INFINITY, 0.0, nf.b0)],
    })
}

impl OneShotSolution {
    /// Analytic tangency where available, numeric minorant otherwise.
    pub fn solve(p: &ProblemParams, c: f64) -> Result<Self> {
        if c <= 0.0 {
            return solve_v0(p);
        }
        let regime = classify(p).regime;
        if regime == Regime::HighCost {
            return Err(Error::UnsupportedRegime(
                "one-shot problem with fuel needs lambda < alpha*delta".into(),
            ));
        }
        let nf = NoFuel::new(p)?;
        let map = ScaleMap::new(p.alpha);
        let mut lines = Vec::new();
        let analytic = if regime.is_solvable() { tangency_12(c, p).ok() } else { None };
        if let Some(t) = analytic {
            lines.push((t.f, t.g, t.slope, t.intercept));
            if let Ok((x3, x4)) = tangency_34(c, p) {
                let t4 = Obstacle::new(ObstacleKind::Right2, nf, c).tangent(x4);
                lines.push((x3, x4, t4.slope, t4.intercept));
            }
        } else {
            for pc in numeric_minorant(p, c, 20_000)? {
                if pc.kind == PieceKind::Linear {
                    lines.push((
                        map.psi_inv(pc.y_lo)?,
                        map.psi_inv(pc.y_hi)?,
                        pc.a.unwrap(),
                        pc.b.unwrap(),
                    ));
                }
            }
        }
        let mut pieces = Vec::new();
        let mut stopping_set = Vec::new();
        let mut x_prev = 0.0;
        for &(xa, xb, a, b) in &lines {
            pieces.push(MinorantPiece::obstacle(map.psi(x_prev), map.psi(xa)));
            pieces.push(MinorantPiece::linear(map.psi(xa), map.psi(xb), a, b));
            stopping_set.push((x_prev, xa));
            x_prev = xb;
        }
        pieces.push(MinorantPiece::obstacle(map.psi(x_prev), f64::INFINITY));
        stopping_set.push((x_prev, f64::INFINITY));
        Ok(Self { c, pieces, stopping_set, nf: Some(nf), p: *p, lines })
    }

    /// Ṽ(x; c), even in x.
    pub fn value(&self, x: f64) -> f64 {
        let x = x.abs();
        let p = &self.p;
        let Some(nf) = self.nf else {
            return p.delta * x * x;
        };
        let part = p.la() * x * x + p.la2();
        let s = p.s();
        for &(xa, xb, a, b) in &self.lines {
            if x > xa && x < xb {
                return a * (s * x).exp() + b * (-s * x).exp() + part;
            }
        }
        if self.c <= 0.0 {
            return nf.value(x);
        }
        (p.delta * x * x).min(nf.value(x - self.c) + self.c)
    }

    /// Waiting intervals (complement of the stopping set).
    pub fn waiting_set(&self) -> Vec<(f64, f64)> {
        self.lines.iter().map(|&(a, b, _, _)| (a, b)).collect()
    }

    pub fn is_stopping(&self, x: f64) -> bool {
        let x = x.abs();
        !self.lines.iter().any(|&(a, b, _, _)| x > a && x < b)
    }
}

pub fn oneshot_value(x: f64, c: f64, p: &ProblemParams) -> Result<f64> {
    Ok(OneShotSolution::solve(p, c)?.value(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lambda_dagger, lambda_star};
    use crate::oracle::solve_stopping_dp;

    fn unit(l: f64) -> ProblemParams {
        ProblemParams::new(l, 1.0, 1.0).unwrap()
    }

    fn vshape() -> ProblemParams {
        unit(0.5 * (lambda_dagger(1.0, 1.0).unwrap() + 1.0))
    }

    fn vlambda() -> ProblemParams {
        unit(0.5 * (lambda_star(1.0, 1.0) + lambda_dagger(1.0, 1.0).unwrap()))
    }

    #[test]
    fn no_fuel_c1_at_f0() {
        let nf = NoFuel::new(&vshape()).unwrap();
        let (a, da, _) = nf.jet(nf.f0);
        let (b, db, _) = nf.jet(nf.f0 * (1.0 + 1e-15));
        assert!((a - b).abs() < 1e-12);
        assert!((da - db).abs() < 1e-9);
        let p = nf.p;
        let right = nf.b0 * (-p.s() * nf.f0).exp() + p.la() * nf.f0 * nf.f0 + p.la2();
        assert!((right - p.delta * nf.f0 * nf.f0).abs() < 1e-13);
    }

    #[test]
    fn b0_is_hl_at_contact() {
        let p = vlambda();
        let nf = NoFuel::new(&p).unwrap();
        let y = ScaleMap::new(p.alpha).psi(nf.f0);
        let h = crate::transform::eval_hl(y, &p).unwrap();
        assert!((h - nf.b0).abs() < 1e-12);
    }

    #[test]
    fn h1_h2_derivative_identity() {
        let lt = LeftTangents::new(NoFuel::new(&vshape()).unwrap());
        for &x in &[0.05, 0.3, 0.7, 1.2] {
            let fd1 = crate::numeric::d1_5pt(|t| lt.h1(t), x, 1e-4);
            let fd2 = crate::numeric::d1_5pt(|t| lt.h2(t), x, 1e-4);
            assert!((fd1 - lt.h1_prime(x)).abs() < 1e-8);
            assert!((fd2 - lt.h2_prime(x)).abs() < 1e-7 * (1.0 + fd2.abs()));
        }
        let (z, _) = lt.h1_inv(lt.h1(0.4));
        assert!((z - 0.4).abs() < 1e-11);
    }

    #[test]
    fn minorant_of_convex_nonpositive_is_itself() {
        let ys: Vec<f64> = (0..1000).map(|i| 1.0 + i as f64 * 0.01).collect();
        let hs: Vec<f64> = ys.iter().map(|y| (y - 6.0) * (y - 6.0) / 100.0 - 1.0).collect();
        let pcs = convex_minorant_numeric(&ys, &hs).unwrap();
        assert_eq!(pcs.len(), 1);
        assert_eq!(pcs[0].kind, PieceKind::ObstacleFollowing);
    }

    #[test]
    fn minorant_rejects_concave_tail() {
        let ys: Vec<f64> = (0..100).map(|i| 1.0 + i as f64).collect();
        let hs: Vec<f64> = ys.iter().map(|y| -y * y).collect();
        assert!(convex_minorant_numeric(&ys, &hs).is_err());
    }

    #[test]
    fn minorant_of_hl_is_hl_then_b0() {
        let p = vlambda();
        let nf = NoFuel::new(&p).unwrap();
        let pcs = numeric_minorant(&p, 0.0, 20_000).unwrap();
        assert_eq!(pcs.len(), 2);
        assert_eq!(pcs[0].kind, PieceKind::ObstacleFollowing);
        assert_eq!(pcs[1].kind, PieceKind::Linear);
        let y_f0 = ScaleMap::new(p.alpha).psi(nf.f0);
        assert!((pcs[0].y_hi - y_f0).abs() < 1e-4);
        assert!(pcs[1].a.unwrap().abs() < 1e-9);
        assert!((pcs[1].b.unwrap() - nf.b0).abs() < 1e-9);
    }

    #[test]
    fn tangency_12_matches_numeric_envelope_vshape() {
        let p = vshape();
        for &c in &[0.02, 0.1, 0.2] {
            let (y1, y2) = solve_tangency_12(c, &p).unwrap();
            let pcs = numeric_minorant(&p, c, 20_000).unwrap();
            let lin: Vec<_> = pcs.iter().filter(|pc| pc.kind == PieceKind::Linear).collect();
            assert_eq!(lin.len(), 1, "c = {c}");
            assert!((lin[0].y_lo - y1).abs() < 1e-4, "c = {c}");
            assert!((lin[0].y_hi - y2).abs() < 1e-4, "c = {c}");
        }
    }

    #[test]
    fn tangency_34_matches_numeric_envelope_vlambda() {
        let p = vlambda();
        for &c in &[0.01, 0.05, 0.1] {
            let (y1, y2) = solve_tangency_12(c, &p).unwrap();
            let (y3, y4) = solve_tangency_34(c, &p).unwrap();
            let pcs = numeric_minorant(&p, c, 20_000).unwrap();
            let lin: Vec<_> = pcs.iter().filter(|pc| pc.kind == PieceKind::Linear).collect();
            assert_eq!(lin.len(), 2, "c = {c}");
            assert!((lin[0].y_lo - y1).abs() < 1e-4 && (lin[0].y_hi - y2).abs() < 1e-4);
            assert!((lin[1].y_lo - y3).abs() < 1e-4 && (lin[1].y_hi - y4).abs() < 1e-4);
        }
    }

    #[test]
    fn vshape_has_no_second_tangent() {
        assert!(matches!(solve_tangency_34(0.05, &vshape()), Err(Error::NoSecondTangent(_))));
    }

    #[test]
    fn y3_tends_to_psi_f0() {
        let p = vlambda();
        let nf = NoFuel::new(&p).unwrap();
        let x3 = |c: f64| tangency_34(c, &p).unwrap().0;
        let lim = crate::numeric::richardson3(x3(1e-3), x3(5e-4), x3(2.5e-4));
        assert!((lim - nf.f0).abs() < 1e-6);
    }

    #[test]
    fn oneshot_value_bounds() {
        for p in [vshape(), vlambda()] {
            let nf = NoFuel::new(&p).unwrap();
            for &c in &[0.05, 0.15] {
                let sol = OneShotSolution::solve(&p, c).unwrap();
                assert_eq!(sol.value(0.0), 0.0);
                for i in 0..400 {
                    let x = i as f64 * 0.01;
                    let v = sol.value(x);
                    let ob = (p.delta * x * x).min(nf.value(x - c) + c);
                    assert!(v <= ob + 1e-12 && v >= 0.0, "x = {x}");
                    if sol.is_stopping(x) {
                        assert!((v - ob).abs() < 1e-12);
                    } else {
                        assert!(v < ob);
                    }
                }
            }
        }
    }

    #[test]
    fn oneshot_matches_stopping_dp() {
        let p = vlambda();
        let nf = NoFuel::new(&p).unwrap();
        let c = 0.1;
        let sol = OneShotSolution::solve(&p, c).unwrap();
        let dx = 1e-3;
        let x_max = 4.0;
        let obstacle = |x: f64| (p.delta * x * x).min(nf.value(x - c) + c);
        let dp = solve_stopping_dp(&p, dx, x_max, &obstacle, 1e-11, 2_000_000).unwrap();
        let gap = dp
            .iter()
            .enumerate()
            .map(|(i, v)| (v - sol.value(i as f64 * dx)).abs())
            .fold(0.0, f64::max);
        assert!(gap < 5e-3, "gap {gap}");
    }

    #[test]
    fn minorant_json_shape() {
        let sol = OneShotSolution::solve(&vshape(), 0.1).unwrap();
        let js = serde_json::to_value(&sol.pieces).unwrap();
        assert_eq!(js[1]["kind"], "linear");
        assert!(js[0]["A"].is_null());
    }
}
