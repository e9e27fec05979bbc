// SPDX-License-Identifier: Apache-2.0
//! Moving boundaries F, G, F̄, Ḡ and the critical fuel levels.
//!
//! F and G come from the common tangent between H_l and the right obstacle
//! (H_{r1}, H_r, or its convexified form H*_r once the second waiting region
//! has closed), continued in c until q(G; F) = 0 at c̄. Beyond c̄ an ODE
//! for F takes over, with G the root of q(·; F). F̄ solves an ODE started
//! at f0 and Ḡ = 𝒳(F̄).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ProblemParams, Regime, RegimeConstants};
use crate::numeric::{brent, hermite_step, integrate, scan_bracket, HermiteCurve, OdeEvent, OdeOptions};
use crate::oneshot::{double_tangent, tangency_12, NoFuel, Tangency};
use crate::special::SpecialFunctions;
use crate::transform::{critical_ys, tangent_from_jet, Obstacle, ObstacleKind, Tangent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryType {
    Absorbing,
    Repelling,
    Reflecting,
}

impl BoundaryType {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundaryType::Absorbing => "absorbing",
            BoundaryType::Repelling => "repelling",
            BoundaryType::Reflecting => "reflecting",
        }
    }
}

/// A sampled boundary c ↦ x with its type on each fuel interval.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryCurve {
    pub name: String,
    pub samples: Vec<(f64, f64)>,
    pub types: Vec<(f64, f64, BoundaryType)>,
    pub valid: (f64, f64),
}

impl BoundaryCurve {
    pub fn type_at(&self, c: f64) -> Option<BoundaryType> {
        self.types.iter().find(|&&(a, b, _)| c >= a && c <= b).map(|t| t.2)
    }
}

/// Which part of the right obstacle touches the common tangent at G.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RightPiece {
    /// |x − c| ≤ f0: land in the no-fuel stopping set.
    R1,
    /// x − c > f0: land in the no-fuel waiting set.
    R2,
    /// Shift onto Ḡ with fuel left (H*_r middle branch).
    Shift,
}

/// F̄, Ḡ and the coefficient pair (Ã, B̃) on [0, c_ℐ].
#[derive(Debug, Clone)]
pub struct UpperWaiting {
    pub fbar: HermiteCurve,
    pub gbar: HermiteCurve,
    pub c_i: f64,
    pub g0: f64,
    sf: SpecialFunctions,
}

impl UpperWaiting {
    pub fn fbar(&self, c: f64) -> f64 {
        self.fbar.eval(c)
    }

    pub fn gbar(&self, c: f64) -> f64 {
        self.gbar.eval(c)
    }

    pub fn a_tilde(&self, c: f64) -> f64 {
        self.sf.htilde3(self.fbar(c), c)
    }

    pub fn b_tilde(&self, c: f64) -> f64 {
        self.sf.htilde4(self.fbar(c), c)
    }

    /// Ã' = h₃(Ḡ) − √(2α)Ã.
    pub fn a_tilde_prime(&self, c: f64) -> f64 {
        self.sf.h3(self.gbar(c)) - self.sf.s() * self.a_tilde(c)
    }

    /// B̃' = √(2α)B̃ − h₄(Ḡ).
    pub fn b_tilde_prime(&self, c: f64) -> f64 {
        self.sf.s() * self.b_tilde(c) - self.sf.h4(self.gbar(c))
    }

    /// D(c) = α/(2λ) − c_ℐ + c: left end of the shift-to-Ḡ zone.
    pub fn d_of(&self, c: f64) -> f64 {
        self.sf.p.x_half_lambda() - self.c_i + c
    }

    /// θ ∈ [0, c_ℐ] with Ḡ(θ) − θ = u.
    pub fn theta_for(&self, u: f64) -> Result<f64> {
        brent(|t| self.gbar(t) - t - u, 0.0, self.c_i, 1e-14)
    }

    /// H*_r in natural form with two derivatives, for c > c_ℐ.
    pub fn hstar_jet(&self, x: f64, c: f64) -> (f64, f64, f64, RightPiece) {
        let p = &self.sf.p;
        if x > self.d_of(c) && x < self.g0 + c {
            let th = self.theta_for(x - c).unwrap_or(if x - c > 0.5 * (self.g0 + self.d_of(0.0)) {
                0.0
            } else {
                self.c_i
            });
            let zeta = c - th;
            let xl = x - zeta;
            let s = self.sf.s();
            let (ea, eb) = (self.a_tilde(th) * (xl * s).exp(), self.b_tilde(th) * (-xl * s).exp());
            let q = ea + eb + p.la() * xl * xl + p.la2();
            let h = q + zeta - p.la() * x * x - p.la2();
            let h1 = s * (ea - eb) + 2.0 * p.la() * (xl - x);
            let h2 = s * s * (ea + eb);
            (h, h1, h2, RightPiece::Shift)
        } else {
            let ob = Obstacle::new(ObstacleKind::Right, self.sf.nf, c);
            let (h, h1, h2) = ob.jet(x);
            let piece = if x - c > self.sf.nf.f0 { RightPiece::R2 } else { RightPiece::R1 };
            (h, h1, h2, piece)
        }
    }
}

/// Integrate F̄ from f0 until it reaches α/(2λ) (at c_ℐ); Ḡ = 𝒳(F̄).
pub fn solve_fbar_gbar(p: &ProblemParams) -> Result<UpperWaiting> {
    let rc = RegimeConstants::compute(p)?;
    if rc.regime != Regime::VLambdaShape {
        return Err(Error::UnsupportedRegime(format!(
            "F-bar/G-bar exist only for lambda in (lambda* = {}, lambda-dagger = {})",
            rc.lambda_star, rc.lambda_dagger
        )));
    }
    let sf = SpecialFunctions::new(p)?;
    let xhl = p.x_half_lambda();
    let f0 = sf.nf.f0;
    let rhs = |c: f64, z: f64| -> Result<f64> {
        if z >= xhl {
            return Ok(1.0);
        }
        let d = sf.htilde3_x(z, c);
        if !(d > 0.0) {
            return Err(Error::Ode { t: c, reason: format!("d htilde3/dx = {d} <= 0") });
        }
        Ok(1.0 + (sf.h3(sf.chi(z)?) - sf.h3(z)) / d)
    };
    let gap = xhl - f0;
    let opts = OdeOptions { rtol: 1e-10, atol: 1e-13, h0: 1e-6, h_max: gap / 400.0, max_steps: 100_000 };
    let ev = [OdeEvent::terminal(|_, z| z - xhl)];
    let sol = integrate(rhs, 0.0, f0, 20.0 * gap + 1.0, opts, &ev)?;
    if sol.stopped_by != Some(0) {
        return Err(Error::Ode { t: sol.t_end(), reason: "F-bar never reached alpha/(2 lambda)".into() });
    }
    let c_i = sol.t_end();
    let mut ys = sol.y.clone();
    *ys.last_mut().unwrap() = xhl;
    let fbar = HermiteCurve::new(sol.t.clone(), ys.clone(), sol.dy.clone())?;
    let n = sol.t.len();
    let mut gv = Vec::with_capacity(n);
    let mut gd = Vec::with_capacity(n);
    for k in 0..n {
        gv.push(sf.chi(ys[k].min(xhl))?);
        gd.push(if k + 1 < n { sf.chi_prime(ys[k])? * sol.dy[k] } else { f64::NAN });
    }
    // 𝒳' is 0/0 at α/(2λ); extrapolate the slope linearly into the last
    // knot and any knot where it is not finite.
    let good: Vec<usize> = (0..n - 1).filter(|&k| gd[k].is_finite()).collect();
    if good.is_empty() {
        return Err(Error::Ode { t: c_i, reason: "no finite G-bar slope".into() });
    }
    for k in 0..n {
        if k + 1 < n && gd[k].is_finite() {
            continue;
        }
        let before: Vec<usize> = good.iter().copied().filter(|&i| i < k).collect();
        gd[k] = match before.as_slice() {
            [.., i, j] => gd[*j] + (gd[*j] - gd[*i]) / (sol.t[*j] - sol.t[*i]) * (sol.t[k] - sol.t[*j]),
            [j] => gd[*j],
            [] => gd[good[0]],
        };
    }
    let gbar = HermiteCurve::new(sol.t.clone(), gv.clone(), gd)?;
    Ok(UpperWaiting { fbar, gbar, c_i, g0: gv[0], sf })
}

/// One point of the small/intermediate-fuel branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FgPoint {
    pub c: f64,
    pub f: f64,
    pub g: f64,
    pub fp: f64,
    pub gp: f64,
    /// q(G; F): positive while G is repelling.
    pub q: f64,
    pub piece: RightPiece,
    pub clamped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Trichotomy {
    /// c̄ ≤ c*.
    CbarFirst,
    /// c* < c̄ < c†.
    CstarFirst,
    /// c† ≤ c̄.
    CdaggerFirst,
}

/// Critical fuel levels; `None` means not reached (+∞) or not applicable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FuelLevels {
    pub c1: Option<f64>,
    pub c0: f64,
    pub c_bar: f64,
    pub c_hat: Option<f64>,
    pub c_m: Option<f64>,
    pub c_g: Option<f64>,
    pub c_i: Option<f64>,
    pub c_star: Option<f64>,
    pub c_dagger: Option<f64>,
    pub g0: Option<f64>,
    pub g_delta: Option<f64>,
    pub trichotomy: Option<Trichotomy>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Large-fuel integration end, as a multiple of c̄ (at least).
    pub c_end_factor: f64,
    /// Explicit lower bound for the integration end.
    pub c_max: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { c_end_factor: 12.0, c_max: 0.0 }
    }
}

/// Piecewise Hermite table split at kinks.
#[derive(Debug, Clone)]
struct Segmented {
    segs: Vec<HermiteCurve>,
}

impl Segmented {
    fn seg(&self, c: f64) -> &HermiteCurve {
        self.segs.iter().find(|s| c <= s.t_max()).unwrap_or_else(|| self.segs.last().unwrap())
    }

    fn eval2(&self, c: f64) -> (f64, f64) {
        self.seg(c).eval2(c)
    }
}

#[derive(Debug, Clone)]
pub struct Boundaries {
    pub p: ProblemParams,
    pub rc: RegimeConstants,
    pub sf: SpecialFunctions,
    pub levels: FuelLevels,
    pub upper: Option<UpperWaiting>,
    /// Kink fuels on the small-fuel branch (obstacle piece changes at G).
    pub kinks: Vec<f64>,
    small_f: Segmented,
    small_g: Segmented,
    large_f: HermiteCurve,
    large_g: HermiteCurve,
    c_tab0: f64,
}

impl Boundaries {
    pub fn build(p: &ProblemParams) -> Result<Self> {
        Self::build_with(p, BuildOptions::default())
    }

    pub fn build_with(p: &ProblemParams, opts: BuildOptions) -> Result<Self> {
        let rc = RegimeConstants::compute(p)?;
        match rc.regime {
            Regime::VShape | Regime::VLambdaShape => {}
            Regime::HighCost => {
                return Err(Error::UnsupportedRegime(
                    "lambda >= alpha*delta: no waiting region, no moving boundaries".into(),
                ))
            }
            Regime::LegacyBelowStar => {
                return Err(Error::UnsupportedRegime(format!(
                    "lambda = {} <= lambda* = {}: full solve not supported",
                    p.lambda, rc.lambda_star
                )))
            }
        }
        let sf = SpecialFunctions::new(p)?;
        let upper = if rc.regime == Regime::VLambdaShape { Some(solve_fbar_gbar(p)?) } else { None };
        let mut b = Self {
            p: *p,
            rc: rc.clone(),
            sf,
            levels: FuelLevels {
                c1: None,
                c0: 0.0,
                c_bar: 0.0,
                c_hat: None,
                c_m: None,
                c_g: None,
                c_i: upper.as_ref().map(|u| u.c_i),
                c_star: None,
                c_dagger: None,
                g0: upper.as_ref().map(|u| u.g0),
                g_delta: None,
                trichotomy: None,
            },
            upper,
            kinks: Vec::new(),
            small_f: Segmented { segs: Vec::new() },
            small_g: Segmented { segs: Vec::new() },
            large_f: HermiteCurve::default(),
            large_g: HermiteCurve::default(),
            c_tab0: 0.0,
        };
        b.build_small()?;
        b.build_large(opts)?;
        b.compute_levels()?;
        Ok(b)
    }

    fn scale(&self) -> f64 {
        self.p.x_half_delta()
    }

    /// Right obstacle used for the common tangent at fuel c.
    pub fn right_jet(&self, x: f64, c: f64) -> (f64, f64, f64, RightPiece) {
        match &self.upper {
            Some(u) if c > u.c_i => u.hstar_jet(x, c),
            _ => {
                let ob = Obstacle::new(ObstacleKind::Right, self.sf.nf, c);
                let (h, h1, h2) = ob.jet(x);
                let piece = if x - c > self.sf.nf.f0 { RightPiece::R2 } else { RightPiece::R1 };
                (h, h1, h2, piece)
            }
        }
    }

    fn right_tangent(&self, x: f64, c: f64) -> (Tangent, RightPiece) {
        let (h, h1, h2, piece) = self.right_jet(x, c);
        (tangent_from_jet(x, self.sf.s(), (h, h1, h2)), piece)
    }

    /// Direct solve of the common tangent at fuel c with slopes from the
    /// analytic continuation formulas.
    pub fn fg_point(&self, c: f64) -> Result<FgPoint> {
        let p = &self.p;
        let cy = critical_ys(c, &self.rc, p)?;
        let lo = cy.x_c.max(cy.x_v);
        let hi = match &self.upper {
            Some(u) if c <= u.c_i => cy.x_r,
            _ => p.x_half_lambda().max(self.sf.nf.f0) + c + 10.0 / p.s(),
        };
        let t: Tangency = double_tangent(&self.sf.lt, |x| self.right_tangent(x, c).0, lo, hi)
            .map_err(|e| Error::Continuation { last_good: c, reason: format!("tangency: {e}") })?;
        let (tg, piece) = self.right_tangent(t.g, c);
        let s = self.sf.s();
        let q = self.sf.q(t.g, t.f);
        let lx = ((2.0 * t.f * s).exp() - (2.0 * t.g * s).exp()) * tg.dslope;
        let gp = 1.0 - q / lx;
        let fp = (tg.dslope * (gp - 1.0) + self.sf.h3(t.g) - s * self.sf.h1(t.f)) / self.sf.h1_prime(t.f);
        Ok(FgPoint { c, f: t.f, g: t.g, fp, gp, q, piece, clamped: t.clamped })
    }

    /// Direct solves on a c-grid (no tables), reported as curves.
    pub fn solve_fg_small(&self, c_grid: &[f64]) -> Result<(BoundaryCurve, BoundaryCurve)> {
        let mut fs = Vec::new();
        let mut gs = Vec::new();
        for &c in c_grid {
            let pt = self.fg_point(c)?;
            fs.push((c, pt.f));
            gs.push((c, pt.g));
        }
        let lo = c_grid.first().copied().unwrap_or(0.0);
        let hi = c_grid.last().copied().unwrap_or(0.0);
        let f = BoundaryCurve {
            name: "F".into(),
            samples: fs,
            types: vec![(lo, hi, BoundaryType::Absorbing)],
            valid: (lo, hi),
        };
        let g = BoundaryCurve {
            name: "G".into(),
            samples: gs,
            types: vec![(lo, hi, BoundaryType::Repelling)],
            valid: (lo, hi),
        };
        Ok((f, g))
    }

    fn build_small(&mut self) -> Result<()> {
        let scale = self.scale();
        let h_max = 0.004 * scale;
        let mut c = 1e-4 * scale;
        self.c_tab0 = c;
        let mut pts: Vec<FgPoint> = Vec::new();
        let mut kinks: Vec<f64> = Vec::new();
        let c_limit = 400.0 * scale;
        let c_bar = loop {
            let first = self.fg_point(c);
            if pts.is_empty() && c < 1e-2 * scale && first.as_ref().map_or(true, |pt| pt.q <= 0.0) {
                // The double tangent is ill-conditioned at tiny c; start later.
                c *= 2.0;
                self.c_tab0 = c;
                continue;
            }
            let pt = first.map_err(|e| match e {
                Error::Continuation { reason, .. } => Error::Continuation {
                    last_good: pts.last().map_or(0.0, |q| q.c),
                    reason,
                },
                other => other,
            })?;
            if pt.clamped {
                return Err(Error::Continuation {
                    last_good: pts.last().map_or(0.0, |q| q.c),
                    reason: "F reached 0 before q(G; F) = 0 (c_m < c-bar)".into(),
                });
            }
            if let Some(u) = &self.upper {
                if c <= u.c_i && pt.g >= u.fbar(c) {
                    return Err(Error::BoundaryCrossing {
                        c,
                        detail: format!("G = {} meets F-bar = {}", pt.g, u.fbar(c)),
                    });
                }
                if c <= u.c_i && pt.g >= self.sf.nf.f0 + c {
                    return Err(Error::Continuation {
                        last_good: c,
                        reason: "G reached f0 + c before c_I".into(),
                    });
                }
            }
            if let Some(prev) = pts.last().copied() {
                if pt.piece != prev.piece {
                    let from = prev.piece;
                    let (mut a, mut bb) = (prev.c, c);
                    for _ in 0..80 {
                        let m = 0.5 * (a + bb);
                        if self.fg_point(m)?.piece == from {
                            a = m;
                        } else {
                            bb = m;
                        }
                    }
                    kinks.push(0.5 * (a + bb));
                }
                if pt.q <= 0.0 {
                    let cb = brent(
                        |cc| self.fg_point(cc).map(|x| x.q).unwrap_or(f64::NAN),
                        prev.c,
                        c,
                        1e-13,
                    )?;
                    break cb;
                }
            } else if pt.q <= 0.0 {
                return Err(Error::Continuation { last_good: c, reason: "q <= 0 at the first point".into() });
            }
            pts.push(pt);
            if c > c_limit {
                return Err(Error::Continuation {
                    last_good: c,
                    reason: "no c-bar found (q(G; F) stays positive)".into(),
                });
            }
            c += (c / 10.0).min(h_max);
        };
        kinks.retain(|&k| k < c_bar);
        let end = self.fg_point(c_bar)?;
        pts.retain(|q| q.c < c_bar && kinks.iter().all(|&k| (q.c - k).abs() > 1e-9 * scale));
        pts.push(end);
        // Split at kinks with one-sided slopes.
        let mut seg_f = Vec::new();
        let mut seg_g = Vec::new();
        let mut cur: Vec<FgPoint> = Vec::new();
        let mut ki = 0;
        let eps = 1e-9 * scale;
        for pt in pts {
            while ki < kinks.len() && pt.c > kinks[ki] {
                let k = kinks[ki];
                let mid = self.fg_point(k)?;
                let left = self.fg_point(k - eps)?;
                let right = self.fg_point(k + eps)?;
                cur.push(FgPoint { fp: left.fp, gp: left.gp, ..mid });
                push_seg(&mut seg_f, &mut seg_g, &self.refine(cur)?)?;
                cur = vec![FgPoint { fp: right.fp, gp: right.gp, ..mid }];
                ki += 1;
            }
            cur.push(pt);
        }
        push_seg(&mut seg_f, &mut seg_g, &self.refine(cur)?)?;
        self.small_f = Segmented { segs: seg_f };
        self.small_g = Segmented { segs: seg_g };
        self.kinks = kinks;
        self.levels.c_bar = c_bar;
        Ok(())
    }

    /// Bisect knot intervals until the Hermite midpoint matches a direct
    /// solve; needed where G' blows up just past a kink.
    fn refine(&self, pts: Vec<FgPoint>) -> Result<Vec<FgPoint>> {
        let scale = self.scale();
        let tol = 1e-10 * scale;
        let mut out = Vec::with_capacity(pts.len());
        let mut stack: Vec<(FgPoint, FgPoint, u32)> = Vec::new();
        for w in pts.windows(2).rev() {
            stack.push((w[0], w[1], 0));
        }
        if let Some(first) = pts.first() {
            out.push(*first);
        }
        while let Some((a, b, depth)) = stack.pop() {
            let m = 0.5 * (a.c + b.c);
            if depth < 40 && b.c - a.c > 1e-12 * scale {
                let pm = self.fg_point(m)?;
                let fh = hermite_step(a.c, a.f, a.fp, b.c, b.f, b.fp, m).0;
                let gh = hermite_step(a.c, a.g, a.gp, b.c, b.g, b.gp, m).0;
                if (fh - pm.f).abs().max((gh - pm.g).abs()) > tol {
                    stack.push((pm, b, depth + 1));
                    stack.push((a, pm, depth + 1));
                    continue;
                }
            }
            out.push(b);
        }
        Ok(out)
    }

    fn build_large(&mut self, opts: BuildOptions) -> Result<()> {
        let sf = self.sf;
        let c_bar = self.levels.c_bar;
        let f_bar = self.small_f.eval2(c_bar).0;
        let c_end = (opts.c_end_factor * c_bar).max(opts.c_max).max(c_bar + self.scale());
        let rhs = |_c: f64, f: f64| -> Result<f64> {
            let g = sf.q_root_above(f)?;
            Ok((sf.h3(g) - sf.s() * sf.h1(f)) / sf.h1_prime(f))
        };
        let oo = OdeOptions { rtol: 1e-10, atol: 1e-13, h0: 1e-6, h_max: c_bar / 100.0, max_steps: 200_000 };
        let sol = integrate(rhs, c_bar, f_bar, c_end, oo, &[])?;
        let (xhd, xhl, s) = (self.p.x_half_delta(), self.p.x_half_lambda(), sf.s());
        let mut gv = Vec::with_capacity(sol.t.len());
        let mut gd = Vec::with_capacity(sol.t.len());
        for k in 0..sol.t.len() {
            let (f, fp) = (sol.y[k], sol.dy[k]);
            let g = sf.q_root_above(f)?;
            if !(f < xhd && xhd < xhl && xhl < g && g < xhl + 1.0 / s) {
                return Err(Error::Continuation {
                    last_good: sol.t[k],
                    reason: format!("large-fuel bounds violated: F = {f}, G = {g}"),
                });
            }
            gv.push(g);
            gd.push(-sf.q_z(g, f) * fp / sf.q_x(g, f));
        }
        self.large_f = sol.curve()?;
        self.large_g = HermiteCurve::new(sol.t.clone(), gv, gd)?;
        Ok(())
    }

    fn compute_levels(&mut self) -> Result<()> {
        let scale = self.scale();
        let c_bar = self.levels.c_bar;
        let c_end = self.c_end();
        let xhl = self.p.x_half_lambda();
        // c1 = ĉ ∧ c_m from the pure H_l/H_{r1} tangency family.
        let nf = self.sf.nf;
        let mut c = 1e-4 * scale;
        let mut prev_ok = None;
        while c < c_end.max(40.0 * scale) {
            match tangency_12(c, &self.p) {
                Ok(t) => {
                    prev_ok = Some((c, t));
                }
                Err(_) => break,
            }
            c += (c / 10.0).min(0.004 * scale);
        }
        if let Some((c_ok, _)) = prev_ok {
            if c < c_end.max(40.0 * scale) {
                let (mut a, mut bb) = (c_ok, c);
                for _ in 0..60 {
                    let m = 0.5 * (a + bb);
                    if tangency_12(m, &self.p).is_ok() {
                        a = m;
                    } else {
                        bb = m;
                    }
                }
                let c1 = a;
                self.levels.c1 = Some(c1);
                // Which obstruction binds just past c1.
                let p2 = bb;
                let cy = critical_ys(p2, &self.rc, &self.p)?;
                let r1 = Obstacle::new(ObstacleKind::Right1, nf, p2);
                let hit_r = double_tangent(&self.sf.lt, |x| r1.tangent(x), cy.x_c.max(cy.x_v), cy.x_r).is_err();
                if hit_r {
                    self.levels.c_hat = Some(c1);
                } else {
                    self.levels.c_m = Some(c1);
                }
            }
        }
        self.levels.c0 = self.levels.c1.map_or(c_bar, |c1| c1.min(c_bar));
        let g_minus = |target: &dyn Fn(f64) -> f64, lo: f64| -> Option<f64> {
            let f = |cc: f64| self.g(cc) - target(cc);
            let n = (((c_end - lo) / (0.002 * scale)).ceil() as usize).max(16);
            let (a, b) = scan_bracket(f, lo, c_end, n)?;
            brent(f, a, b, 1e-13).ok()
        };
        let c_g = g_minus(&|_| xhl, self.c_tab0);
        let mut c_star = None;
        let mut c_dagger = None;
        let mut trichotomy = None;
        let mut g_delta = None;
        if let Some(u) = &self.upper {
            let c_i = u.c_i;
            c_star = g_minus(&|cc| u.d_of(cc), c_i);
            c_dagger = g_minus(&|cc| u.g0 + cc, c_i);
            let cs = c_star.unwrap_or(f64::INFINITY);
            let cd = c_dagger.unwrap_or(f64::INFINITY);
            trichotomy = Some(if c_bar <= cs {
                Trichotomy::CbarFirst
            } else if c_bar < cd {
                Trichotomy::CstarFirst
            } else {
                Trichotomy::CdaggerFirst
            });
            g_delta = Some(self.sf.q_root_above(self.p.x_half_delta())?);
        }
        self.levels.c_g = c_g;
        self.levels.c_star = c_star;
        self.levels.c_dagger = c_dagger;
        self.levels.trichotomy = trichotomy;
        self.levels.g_delta = g_delta;
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        self.rc.regime
    }

    pub fn nf(&self) -> NoFuel {
        self.sf.nf
    }

    pub fn c_end(&self) -> f64 {
        self.large_f.t_max()
    }

    pub fn c_bar(&self) -> f64 {
        self.levels.c_bar
    }

    pub fn c_i(&self) -> Option<f64> {
        self.upper.as_ref().map(|u| u.c_i)
    }

    /// (F(c), F'(c)); past the integration end the curve is held flat.
    pub fn f2(&self, c: f64) -> (f64, f64) {
        if c < self.c_tab0 {
            // Chord from the common limit 1/(2δ) at c = 0.
            let x0 = self.p.x_half_delta();
            let k = (self.small_f.eval2(self.c_tab0).0 - x0) / self.c_tab0;
            return (x0 + k * c.max(0.0), k);
        }
        if c <= self.levels.c_bar {
            self.small_f.eval2(c)
        } else if c <= self.c_end() {
            self.large_f.eval2(c)
        } else {
            (self.large_f.eval(self.c_end()), 0.0)
        }
    }

    pub fn g2(&self, c: f64) -> (f64, f64) {
        if c < self.c_tab0 {
            // Chord from the common limit 1/(2δ) at c = 0.
            let x0 = self.p.x_half_delta();
            let k = (self.small_g.eval2(self.c_tab0).0 - x0) / self.c_tab0;
            return (x0 + k * c.max(0.0), k);
        }
        if c <= self.levels.c_bar {
            self.small_g.eval2(c)
        } else if c <= self.c_end() {
            self.large_g.eval2(c)
        } else {
            (self.large_g.eval(self.c_end()), 0.0)
        }
    }

    pub fn f(&self, c: f64) -> f64 {
        self.f2(c).0
    }

    pub fn g(&self, c: f64) -> f64 {
        self.g2(c).0
    }

    pub fn fbar(&self, c: f64) -> Option<f64> {
        self.upper.as_ref().filter(|u| c <= u.c_i).map(|u| u.fbar(c))
    }

    pub fn gbar(&self, c: f64) -> Option<f64> {
        self.upper.as_ref().filter(|u| c <= u.c_i).map(|u| u.gbar(c))
    }

    /// G is reflecting from c̄ on.
    pub fn g_reflecting(&self, c: f64) -> bool {
        c >= self.levels.c_bar
    }

    /// A(c) = h₁(F(c)) and A'(c).
    pub fn a2(&self, c: f64) -> (f64, f64) {
        let (f, fp) = self.f2(c);
        (self.sf.h1(f), self.sf.h1_prime(f) * fp)
    }

    /// B(c) = h₂(F(c)) and B'(c).
    pub fn b2(&self, c: f64) -> (f64, f64) {
        let (f, fp) = self.f2(c);
        (self.sf.h2(f), self.sf.h2_prime(f) * fp)
    }

    /// Boundary curves on the given c-grid.
    pub fn curves(&self, c_grid: &[f64]) -> Vec<BoundaryCurve> {
        let c_bar = self.levels.c_bar;
        let lo = c_grid.first().copied().unwrap_or(0.0);
        let hi = c_grid.last().copied().unwrap_or(0.0);
        let mut out = vec![
            BoundaryCurve {
                name: "F".into(),
                samples: c_grid.iter().map(|&c| (c, self.f(c))).collect(),
                types: vec![(0.0, f64::INFINITY, BoundaryType::Absorbing)],
                valid: (lo, hi),
            },
            BoundaryCurve {
                name: "G".into(),
                samples: c_grid.iter().map(|&c| (c, self.g(c))).collect(),
                types: vec![
                    (0.0, c_bar, BoundaryType::Repelling),
                    (c_bar, f64::INFINITY, BoundaryType::Reflecting),
                ],
                valid: (lo, hi),
            },
        ];
        if let Some(u) = &self.upper {
            let grid: Vec<f64> = c_grid.iter().copied().filter(|&c| c <= u.c_i).collect();
            out.push(BoundaryCurve {
                name: "Fbar".into(),
                samples: grid.iter().map(|&c| (c, u.fbar(c))).collect(),
                types: vec![(0.0, u.c_i, BoundaryType::Repelling)],
                valid: (0.0, u.c_i),
            });
            out.push(BoundaryCurve {
                name: "Gbar".into(),
                samples: grid.iter().map(|&c| (c, u.gbar(c))).collect(),
                types: vec![(0.0, u.c_i, BoundaryType::Reflecting)],
                valid: (0.0, u.c_i),
            });
        }
        out
    }

    /// (F(0+), G(0+)) by Richardson extrapolation from c, c/2, c/4.
    pub fn limits_at_zero(&self, c: f64) -> Result<(f64, f64)> {
        let a = self.fg_point(c)?;
        let b = self.fg_point(0.5 * c)?;
        let d = self.fg_point(0.25 * c)?;
        Ok((
            crate::numeric::richardson3(a.f, b.f, d.f),
            crate::numeric::richardson3(a.g, b.g, d.g),
        ))
    }

    /// First c in (0, c_ℐ] with G(c) ≥ F̄(c), if any.
    pub fn crossing_search(&self, n: usize) -> Option<f64> {
        let u = self.upper.as_ref()?;
        let f = |c: f64| u.fbar(c) - self.g(c);
        let (a, b) = scan_bracket(f, self.c_tab0, u.c_i, n)?;
        brent(f, a, b, 1e-13).ok()
    }
}

fn push_seg(seg_f: &mut Vec<HermiteCurve>, seg_g: &mut Vec<HermiteCurve>, pts: &[FgPoint]) -> Result<()> {
    if pts.len() < 2 {
        return Err(Error::Continuation {
            last_good: pts.first().map_or(0.0, |p| p.c),
            reason: "segment with fewer than two knots".into(),
        });
    }
    let t: Vec<f64> = pts.iter().map(|p| p.c).collect();
    seg_f.push(HermiteCurve::new(t.clone(), pts.iter().map(|p| p.f).collect(), pts.iter().map(|p| p.fp).collect())?);
    seg_g.push(HermiteCurve::new(t, pts.iter().map(|p| p.g).collect(), pts.iter().map(|p| p.gp).collect())?);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lambda_dagger, lambda_star};

    fn vshape() -> ProblemParams {
        ProblemParams::new(0.5 * (lambda_dagger(1.0, 1.0).unwrap() + 1.0), 1.0, 1.0).unwrap()
    }

    fn vlambda() -> ProblemParams {
        let l = 0.5 * (lambda_star(1.0, 1.0) + lambda_dagger(1.0, 1.0).unwrap());
        ProblemParams::new(l, 1.0, 1.0).unwrap()
    }

    #[test]
    fn vshape_c_bar_and_kink() {
        let b = Boundaries::build(&vshape()).unwrap();
        let cb = b.c_bar();
        assert!((cb - 0.3057575751699407).abs() < 1e-8, "{cb}");
        let pt = b.fg_point(cb).unwrap();
        assert!(pt.q.abs() < 1e-9);
        assert!((pt.gp - 1.0).abs() < 1e-6);
        assert!((b.f(cb) - 0.491904388).abs() < 1e-8);
        assert!((b.g(cb) - 0.8126666435).abs() < 1e-8);
    }

    #[test]
    fn table_matches_direct_solve() {
        for p in [vshape(), vlambda()] {
            let b = Boundaries::build(&p).unwrap();
            for i in 1..40 {
                let c = b.c_bar() * i as f64 / 40.0;
                let d = b.fg_point(c).unwrap();
                assert!((b.f(c) - d.f).abs() < 1e-9, "F at {c}");
                assert!((b.g(c) - d.g).abs() < 1e-9, "G at {c}");
            }
        }
    }

    #[test]
    fn g_slope_formula_matches_fd() {
        let b = Boundaries::build(&vlambda()).unwrap();
        for &c in &[0.05, 0.2, 0.4, 0.6] {
            let pt = b.fg_point(c).unwrap();
            let h = 1e-5;
            let fd_g = (b.fg_point(c + h).unwrap().g - b.fg_point(c - h).unwrap().g) / (2.0 * h);
            let fd_f = (b.fg_point(c + h).unwrap().f - b.fg_point(c - h).unwrap().f) / (2.0 * h);
            assert!((fd_g - pt.gp).abs() < 1e-4 * pt.gp.abs(), "G' at {c}");
            assert!((fd_f - pt.fp).abs() < 1e-4 * (1e-2 + pt.fp.abs()), "F' at {c}");
        }
    }

    #[test]
    fn vlambda_upper_waiting() {
        let p = vlambda();
        let b = Boundaries::build(&p).unwrap();
        let u = b.upper.as_ref().unwrap();
        let xhl = p.x_half_lambda();
        assert!((u.fbar(u.c_i) - xhl).abs() < 1e-6);
        assert!((u.gbar(u.c_i) - xhl).abs() < 1e-6);
        assert!((u.c_i - 0.26551747688501476).abs() < 1e-10, "{}", u.c_i);
        assert!((u.g0 - 1.0192817481234677).abs() < 1e-9);
        assert!(b.levels.trichotomy == Some(Trichotomy::CbarFirst));
        assert!(b.crossing_search(2000).is_none());
    }

    #[test]
    fn large_fuel_bounds_and_trend() {
        let p = vshape();
        let b = Boundaries::build(&p).unwrap();
        let cb = b.c_bar();
        let mut prev = (b.f(cb), b.g(cb));
        for i in 1..=50 {
            let c = cb * (1.0 + 9.0 * i as f64 / 50.0);
            let (f, g) = (b.f(c), b.g(c));
            assert!(f < p.x_half_delta() && g > p.x_half_lambda() && g < p.x_half_lambda() + 1.0 / p.s());
            assert!(f <= prev.0 + 1e-12 && g >= prev.1 - 1e-12);
            assert!(b.sf.q(g, f).abs() < 1e-9);
            prev = (f, g);
        }
    }
}
