// SPDX-License-Identifier: Apache-2.0
//! Scalar numerics: bracketed root finding, an embedded Runge-Kutta pair
//! with event location, cubic Hermite tables and Richardson extrapolation.

use crate::error::{Error, Result};

/// Absolute x-tolerance used by default for scalar roots.
pub const ROOT_TOL: f64 = 1e-12;

/// Brent's method on `[a, b]`. Requires a sign change (an exact zero at
/// either end is accepted).
pub fn brent<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, xtol: f64) -> Result<f64> {
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Bracket { lo: a, hi: b, flo: fa, fhi: fb });
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..300 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Domain(format!("non-finite residual at {b}")));
        }
    }
    Err(Error::NoConvergence(300))
}

/// Scan `n` equal cells of `[lo, hi]` and return the first cell whose
/// endpoints straddle a sign change.
pub fn scan_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    n: usize,
) -> Option<(f64, f64)> {
    let mut x0 = lo;
    let mut f0 = f(lo);
    for i in 1..=n {
        let x1 = lo + (hi - lo) * i as f64 / n as f64;
        let f1 = f(x1);
        if f0 == 0.0 || (f0.is_finite() && f1.is_finite() && f0.signum() != f1.signum()) {
            return Some((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    None
}

/// Two-level Richardson extrapolation from values at h, h/2 and h/4 for an
/// expansion `f(h) = f0 + a h + b h² + ...`.
pub fn richardson3(f_h: f64, f_h2: f64, f_h4: f64) -> f64 {
    let r1 = 2.0 * f_h2 - f_h;
    let r2 = 2.0 * f_h4 - f_h2;
    (4.0 * r2 - r1) / 3.0
}

/// Five-point central first derivative.
pub fn d1_5pt<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

/// Five-point central second derivative.
pub fn d2_5pt<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x - 2.0 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2.0 * h))
        / (12.0 * h * h)
}

/// Piecewise cubic Hermite interpolant through `(t, y, dy)` triples.
///
/// The slopes are supplied by the caller (typically exact derivatives from
/// an ODE right-hand side), so the interpolant is C¹ and fourth-order
/// accurate between knots.
#[derive(Debug, Clone, Default)]
pub struct HermiteCurve {
    t: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl HermiteCurve {
    pub fn new(t: Vec<f64>, y: Vec<f64>, dy: Vec<f64>) -> Result<Self> {
        if t.len() < 2 || t.len() != y.len() || t.len() != dy.len() {
            return Err(Error::Domain("hermite table needs ≥ 2 consistent knots".into()));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("hermite knots must be strictly increasing".into()));
        }
        Ok(Self { t, y, dy })
    }

    pub fn t_min(&self) -> f64 {
        self.t[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn knots(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.y
    }

    pub fn slopes(&self) -> &[f64] {
        &self.dy
    }

    fn segment(&self, t: f64) -> usize {
        let n = self.t.len();
        let k = self.t.partition_point(|&v| v <= t);
        k.clamp(1, n - 1) - 1
    }

    /// Value and derivative at `t`; the end segments extrapolate.
    pub fn eval2(&self, t: f64) -> (f64, f64) {
        let i = self.segment(t);
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let u = (t - t0) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let d = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
        (v, d)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.eval2(t).0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.eval2(t).1
    }
}

/// Step-size control for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h0: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h0: 1e-6, h_max: f64::INFINITY, max_steps: 200_000 }
    }
}

/// Outcome of a scalar integration.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
    /// Index of the terminal event that stopped integration, if any.
    pub stopped_by: Option<usize>,
    /// Non-terminal event crossings as `(event index, t)`.
    pub crossings: Vec<(usize, f64)>,
}

impl OdeSolution {
    pub fn curve(&self) -> Result<HermiteCurve> {
        HermiteCurve::new(self.t.clone(), self.y.clone(), self.dy.clone())
    }

    pub fn t_end(&self) -> f64 {
        *self.t.last().unwrap()
    }

    pub fn y_end(&self) -> f64 {
        *self.y.last().unwrap()
    }
}

/// Event function `g(t, y)`; a sign change marks the event.
pub struct OdeEvent<'a> {
    pub g: Box<dyn Fn(f64, f64) -> f64 + 'a>,
    pub terminal: bool,
}

impl<'a> OdeEvent<'a> {
    pub fn terminal(g: impl Fn(f64, f64) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), terminal: true }
    }

    pub fn watch(g: impl Fn(f64, f64) -> f64 + 'a) -> Self {
        Self { g: Box::new(g), terminal: false }
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Cubic Hermite value and slope at s on [t0, t1].
pub fn hermite_step(t0: f64, y0: f64, d0: f64, t1: f64, y1: f64, d1: f64, s: f64) -> (f64, f64) {
    let h = t1 - t0;
    let u = (s - t0) / h;
    let (u2, u3) = (u * u, u * u * u);
    let y = (2.0 * u3 - 3.0 * u2 + 1.0) * y0 + (u3 - 2.0 * u2 + u) * h * d0 + (-2.0 * u3 + 3.0 * u2) * y1 + (u3 - u2) * h * d1;
    let dy = ((6.0 * u2 - 6.0 * u) * y0 + (-6.0 * u2 + 6.0 * u) * y1) / h + (3.0 * u2 - 4.0 * u + 1.0) * d0 + (3.0 * u2 - 2.0 * u) * d1;
    (y, dy)
}

/// One Dormand-Prince step from `(t, y)` with first stage `k1`.
/// Returns `(y_new, f(t+h, y_new), error estimate)`.
fn dp_step<F>(f: &mut F, t: f64, y: f64, k1: f64, h: f64) -> Result<(f64, f64, f64)>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    let k2 = f(t + C2 * h, y + h * A21 * k1)?;
    let k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
    let k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
    let k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))?;
    let k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))?;
    let y1 = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
    let k7 = f(t + h, y1)?;
    let err = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
    Ok((y1, k7, err))
}

/// Integrate the scalar ODE `y' = f(t, y)` from `t0` to `t_end` (forward).
///
/// A failing right-hand side evaluation is treated as a rejected step.
/// Events are located by root finding on exact partial steps from the last
/// accepted point.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: f64,
    t_end: f64,
    opts: OdeOptions,
    events: &[OdeEvent<'_>],
) -> Result<OdeSolution>
where
    F: FnMut(f64, f64) -> Result<f64>,
{
    if !(t_end > t0) {
        return Err(Error::Ode { t: t0, reason: "t_end must exceed t0".into() });
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, y)?;
    let mut sol = OdeSolution {
        t: vec![t],
        y: vec![y],
        dy: vec![k1],
        stopped_by: None,
        crossings: Vec::new(),
    };
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, y)).collect();
    let mut h = opts.h0.min(t_end - t0).min(opts.h_max);
    let h_min = 1e-14 * (1.0 + t0.abs().max(t_end.abs()));
    for _ in 0..opts.max_steps {
        if t >= t_end {
            return Ok(sol);
        }
        h = h.min(t_end - t).min(opts.h_max);
        let step = dp_step(&mut f, t, y, k1, h);
        let (y1, k_new, err) = match step {
            Ok(v) => v,
            Err(_) => {
                h *= 0.25;
                if h < h_min {
                    return Err(Error::Ode { t, reason: "step size underflow".into() });
                }
                continue;
            }
        };
        let sc = opts.atol + opts.rtol * y.abs().max(y1.abs());
        let en = (err / sc).abs();
        if en > 1.0 || !y1.is_finite() {
            let fac = if y1.is_finite() { (0.9 * en.powf(-0.2)).max(0.1) } else { 0.1 };
            h *= fac;
            if h < h_min {
                return Err(Error::Ode { t, reason: "step size underflow".into() });
            }
            continue;
        }
        let t1 = t + h;
        // Event scan on the accepted step.
        let mut hit: Option<(usize, f64)> = None;
        let g_new: Vec<f64> = events.iter().map(|e| (e.g)(t1, y1)).collect();
        for (k, ev) in events.iter().enumerate() {
            let (ga, gb) = (g_prev[k], g_new[k]);
            if ga == 0.0 || ga.signum() == gb.signum() {
                continue;
            }
            // Refine on exact partial steps; the step's cubic interpolant
            // stands in where a partial step cannot be evaluated.
            let mut exact = |s: f64| {
                if s <= t {
                    return ga;
                }
                match dp_step(&mut f, t, y, k1, s - t) {
                    Ok((ys, _, _)) if ys.is_finite() => (ev.g)(s, ys),
                    _ => (ev.g)(s, hermite_step(t, y, k1, t1, y1, k_new, s).0),
                }
            };
            let te = brent(&mut exact, t, t1, 1e-15 * (1.0 + t1.abs()))?;
            if ev.terminal {
                if hit.map_or(true, |(_, th)| te < th) {
                    hit = Some((k, te));
                }
            } else {
                sol.crossings.push((k, te));
            }
        }
        if let Some((k, te)) = hit {
            sol.crossings.retain(|&(_, tc)| tc <= te);
            if te > t {
                let (ye, fe) = match dp_step(&mut f, t, y, k1, te - t) {
                    Ok((ye, _, _)) => match f(te, ye) {
                        Ok(fe) => (ye, fe),
                        Err(_) => (ye, hermite_step(t, y, k1, t1, y1, k_new, te).1),
                    },
                    Err(_) => hermite_step(t, y, k1, t1, y1, k_new, te),
                };
                sol.t.push(te);
                sol.y.push(ye);
                sol.dy.push(fe);
            }
            sol.stopped_by = Some(k);
            return Ok(sol);
        }
        t = t1;
        y = y1;
        k1 = k_new;
        g_prev = g_new;
        sol.t.push(t);
        sol.y.push(y);
        sol.dy.push(k1);
        let fac = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    Err(Error::Ode { t, reason: format!("exceeded {} steps", opts.max_steps) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_cubic_root() {
        let r = brent(|x| x * x * x - 2.0 * x - 5.0, 2.0, 3.0, 1e-14).unwrap();
        assert!((r - 2.0945514815423265).abs() < 1e-13);
    }

    #[test]
    fn brent_rejects_same_sign() {
        assert!(matches!(brent(|x| x * x + 1.0, -1.0, 1.0, 1e-12), Err(Error::Bracket { .. })));
    }

    #[test]
    fn brent_accepts_endpoint_zero() {
        assert_eq!(brent(|x| x - 1.0, 1.0, 2.0, 1e-12).unwrap(), 1.0);
    }

    #[test]
    fn scan_finds_first_cell() {
        let (a, b) = scan_bracket(|x| (x - 0.33) * (x - 0.77), 0.0, 1.0, 10).unwrap();
        assert!(a < 0.33 && 0.33 < b);
    }

    #[test]
    fn richardson_kills_linear_and_quadratic_terms() {
        let f = |h: f64| 1.5 + 0.3 * h - 2.0 * h * h;
        let v = richardson3(f(0.1), f(0.05), f(0.025));
        assert!((v - 1.5).abs() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let p = |t: f64| 1.0 - t + 0.5 * t * t * t;
        let dp = |t: f64| -1.0 + 1.5 * t * t;
        let ts = vec![0.0, 0.3, 1.0, 2.0];
        let c = HermiteCurve::new(
            ts.clone(),
            ts.iter().map(|&t| p(t)).collect(),
            ts.iter().map(|&t| dp(t)).collect(),
        )
        .unwrap();
        for &t in &[0.1, 0.55, 1.7, 2.0] {
            let (v, d) = c.eval2(t);
            assert!((v - p(t)).abs() < 1e-13);
            assert!((d - dp(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn rk45_exponential() {
        let sol = integrate(|_, y| Ok(-2.0 * y), 0.0, 1.0, 3.0, OdeOptions::default(), &[]).unwrap();
        assert!((sol.y_end() - (-6.0f64).exp()).abs() < 1e-10);
        assert!((sol.t_end() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn rk45_terminal_event_time() {
        // y = e^t hits 2 at t = ln 2.
        let ev = [OdeEvent::terminal(|_, y| y - 2.0)];
        let sol = integrate(|_, y| Ok(y), 0.0, 1.0, 5.0, OdeOptions::default(), &ev).unwrap();
        assert_eq!(sol.stopped_by, Some(0));
        assert!((sol.t_end() - 2f64.ln()).abs() < 1e-9);
        assert!((sol.y_end() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rk45_watch_event_records_crossing() {
        let ev = [OdeEvent::watch(|t, _| t - 0.5)];
        let sol = integrate(|t, _| Ok(t.cos()), 0.0, 0.0, 1.0, OdeOptions::default(), &ev).unwrap();
        assert_eq!(sol.crossings.len(), 1);
        assert!((sol.crossings[0].1 - 0.5).abs() < 1e-12);
        assert!((sol.y_end() - 1f64.sin()).abs() < 1e-9);
    }
}
