// SPDX-License-Identifier: Apache-2.0
//! Grid dynamic programming for the control problem and for 1-D stopping
//! problems, solved by projected successive over-relaxation.
//!
//! The chain moves ±Δx with probability ½ each over Δt = Δx², and acting
//! moves one cell diagonally, (x, c) → (x − Δx, c − Δx), at cost Δx. Since
//! acting only lowers c, the rows are solved bottom-up; each row is a 1-D
//! obstacle problem.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{fmt17, Table};
use crate::model::{ProblemParams, Regime, RegimeConstants};
use crate::oneshot::NoFuel;
use crate::valuefn::PiecewiseValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Stop,
    Wait,
    Act,
}

impl Policy {
    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Stop => "stop",
            Policy::Wait => "wait",
            Policy::Act => "act",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub dx: f64,
    pub x_max: f64,
    pub c_max: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl GridConfig {
    /// Smallest admissible x_max for the given fuel range, rounded up to the grid.
    pub fn min_x_max(p: &ProblemParams, dx: f64, c_max: f64) -> f64 {
        let edge = crate::model::f0(p).unwrap_or_else(|_| p.x_half_delta());
        let raw = edge.max(p.x_half_lambda()) + c_max + 5.0 / p.s();
        (raw / dx).ceil() * dx
    }

    pub fn new(p: &ProblemParams, dx: f64, c_max: f64) -> Self {
        Self { dx, x_max: Self::min_x_max(p, dx, c_max), c_max, tol: 1e-10, max_iter: 200_000 }
    }

    pub fn validate(&self, p: &ProblemParams) -> Result<()> {
        if !(self.dx > 0.0 && self.dx <= 0.02) {
            return Err(Error::InvalidParams(format!("dx = {} must lie in (0, 0.02]", self.dx)));
        }
        if !(self.c_max >= 0.0) {
            return Err(Error::InvalidParams(format!("c_max = {} must be >= 0", self.c_max)));
        }
        let need = Self::min_x_max(p, self.dx, self.c_max);
        if self.x_max < need - 1e-9 * need {
            return Err(Error::InvalidParams(format!("x_max = {} below required {need}", self.x_max)));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParams("tol and max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSolution {
    pub config: GridConfig,
    pub nx: usize,
    pub nc: usize,
    /// Row-major: index j * nx + i for (x_i, c_j).
    pub value: Vec<f64>,
    pub policy: Vec<Policy>,
    pub iterations: Vec<usize>,
    pub residuals: Vec<f64>,
}

impl GridSolution {
    pub fn dx(&self) -> f64 {
        self.config.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.config.dx
    }

    pub fn c(&self, j: usize) -> f64 {
        j as f64 * self.config.dx
    }

    pub fn v(&self, i: usize, j: usize) -> f64 {
        self.value[j * self.nx + i]
    }

    pub fn pol(&self, i: usize, j: usize) -> Policy {
        self.policy[j * self.nx + i]
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.value[j * self.nx..(j + 1) * self.nx]
    }

    pub fn policy_row(&self, j: usize) -> &[Policy] {
        &self.policy[j * self.nx..(j + 1) * self.nx]
    }

    /// Column index of the row closest to fuel c.
    pub fn row_for(&self, c: f64) -> usize {
        ((c / self.config.dx).round() as usize).min(self.nc - 1)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&["x", "c", "value", "policy"]);
        for j in 0..self.nc {
            for i in 0..self.nx {
                t.push(vec![fmt17(self.x(i)), fmt17(self.c(j)), fmt17(self.v(i, j)), self.pol(i, j).as_str().into()]);
            }
        }
        t
    }
}

fn sor_omega(alpha: f64, dx: f64, m: usize) -> f64 {
    let m = m.max(2) as f64;
    let rho = (std::f64::consts::PI / (m + 1.0)).cos() / (1.0 + alpha * dx * dx);
    2.0 / (1.0 + (1.0 - rho * rho).sqrt())
}

struct RowProblem<'a> {
    src: &'a [f64],
    disc: f64,
    omega: f64,
    tol: f64,
    max_iter: usize,
}

impl RowProblem<'_> {
    /// In-place PSOR on v with v ≤ ob; the last node stays fixed. Returns
    /// (sweeps, last sup-update).
    fn solve(&self, v: &mut [f64], ob: &[f64]) -> std::result::Result<usize, f64> {
        let n = v.len();
        let w = self.omega;
        let mut diff = f64::INFINITY;
        for it in 1..=self.max_iter {
            diff = 0.0;
            for i in 0..n - 1 {
                let left = if i == 0 { v[1] } else { v[i - 1] };
                let wait = (self.src[i] + 0.5 * (v[i + 1] + left)) * self.disc;
                let new = (v[i] + w * (wait - v[i])).min(ob[i]);
                diff = diff.max((new - v[i]).abs());
                v[i] = new;
            }
            if diff < self.tol {
                return Ok(it);
            }
        }
        Err(diff)
    }
}

fn wait_value(src: &[f64], disc: f64, v: &[f64], i: usize) -> f64 {
    let left = if i == 0 { v[1] } else { v[i - 1] };
    let right = if i + 1 < v.len() { v[i + 1] } else { v[i] };
    (src[i] + 0.5 * (right + left)) * disc
}

/// Warm start for a row whose stopping set is an interval at x = 0: eliminate
/// from the pinned right end down, then substitute upward with the
/// projection onto v ≤ ob. Exact for that structure; PSOR then only polishes.
fn brennan_schwartz(src: &[f64], adx2: f64, ob: &[f64], v: &mut [f64]) {
    let n = v.len();
    if n < 3 {
        return;
    }
    let b = 1.0 + adx2;
    let mut m = vec![0.0; n];
    let mut r = vec![0.0; n];
    m[n - 2] = b;
    r[n - 2] = src[n - 2] + 0.5 * v[n - 1];
    for i in (1..n - 2).rev() {
        m[i] = b - 0.25 / m[i + 1];
        r[i] = src[i] + 0.5 * r[i + 1] / m[i + 1];
    }
    let v0 = (src[0] + r[1] / m[1]) / (b - 0.5 / m[1]);
    v[0] = v0.min(ob[0]);
    for i in 1..n - 1 {
        v[i] = ((r[i] + 0.5 * v[i - 1]) / m[i]).min(ob[i]);
    }
}

/// Solve V = min{obstacle, wait(V)} on [0, x_max] with step dx; the last
/// node is pinned to `obstacle(x_max)`.
pub fn solve_stopping_dp(
    p: &ProblemParams,
    dx: f64,
    x_max: f64,
    obstacle: &dyn Fn(f64) -> f64,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = (x_max / dx).round() as usize + 1;
    let ob: Vec<f64> = (0..n).map(|i| obstacle(i as f64 * dx)).collect();
    let mut v = ob.clone();
    let src: Vec<f64> = (0..n).map(|i| p.lambda * (i as f64 * dx).powi(2) * dx * dx).collect();
    brennan_schwartz(&src, p.alpha * dx * dx, &ob, &mut v);
    let rp = RowProblem { src: &src, disc: 1.0 / (1.0 + p.alpha * dx * dx), omega: sor_omega(p.alpha, dx, n), tol, max_iter };
    rp.solve(&mut v, &ob).map_err(|r| Error::GridNoConvergence { row: 0, residual: r })?;
    Ok(v)
}

/// Value without fuel, closed form; δx² when λ ≥ αδ.
fn no_fuel_value(p: &ProblemParams) -> Result<Box<dyn Fn(f64) -> f64 + Send + Sync>> {
    if p.lambda < p.ad() {
        let nf = NoFuel::new(p)?;
        Ok(Box::new(move |x| nf.value(x)))
    } else {
        let d = p.delta;
        Ok(Box::new(move |x| d * x * x))
    }
}

pub fn solve_dp(p: &ProblemParams, cfg: &GridConfig) -> Result<GridSolution> {
    p.validate()?;
    cfg.validate(p)?;
    let dx = cfg.dx;
    let nx = (cfg.x_max / dx).round() as usize + 1;
    let nc = (cfg.c_max / dx).round() as usize + 1;
    let x: Vec<f64> = (0..nx).map(|i| i as f64 * dx).collect();
    let stop: Vec<f64> = x.iter().map(|&x| p.delta * x * x).collect();
    let src: Vec<f64> = x.iter().map(|&x| p.lambda * x * x * dx * dx).collect();
    let disc = 1.0 / (1.0 + p.alpha * dx * dx);
    let v0 = no_fuel_value(p)?;
    let x_last = x[nx - 1];

    let mut value = vec![0.0; nx * nc];
    let mut policy = vec![Policy::Wait; nx * nc];
    let mut iterations = Vec::with_capacity(nc);
    let mut residuals = Vec::with_capacity(nc);
    let mut ob = vec![0.0; nx];
    let mut act = vec![f64::INFINITY; nx];
    let mut v = stop.clone();
    let mut wait_nodes = nx;

    for j in 0..nc {
        let c = j as f64 * dx;
        if j > 0 {
            let prev = &value[(j - 1) * nx..j * nx];
            for i in 0..nx {
                let down = if i == 0 { prev[1] } else { prev[i - 1] };
                act[i] = down + dx;
            }
        }
        for i in 0..nx {
            ob[i] = stop[i].min(act[i]);
        }
        ob[nx - 1] = stop[nx - 1].min(c + v0(x_last - c));
        for i in 0..nx {
            v[i] = v[i].min(ob[i]);
        }
        v[nx - 1] = ob[nx - 1];
        let rp = RowProblem { src: &src, disc, omega: sor_omega(p.alpha, dx, wait_nodes), tol: cfg.tol, max_iter: cfg.max_iter };
        let it = rp.solve(&mut v, &ob).map_err(|r| Error::GridNoConvergence { row: j, residual: r })?;
        iterations.push(it);
        residuals.push(cfg.tol);

        let row = &mut value[j * nx..(j + 1) * nx];
        row.copy_from_slice(&v);
        let prow = &mut policy[j * nx..(j + 1) * nx];
        wait_nodes = 0;
        for i in 0..nx {
            let w = wait_value(&src, disc, &v, i);
            prow[i] = if stop[i] <= act[i].min(w) {
                Policy::Stop
            } else if act[i] <= w {
                Policy::Act
            } else {
                wait_nodes += 1;
                Policy::Wait
            };
        }
        if nx >= 2 {
            prow[nx - 1] = prow[nx - 2];
        }
    }
    Ok(GridSolution { config: *cfg, nx, nc, value, policy, iterations, residuals })
}

/// Policy changes along one c-row, labeled by order.
#[derive(Debug, Clone, Serialize)]
pub struct RowBoundaries {
    pub c: f64,
    pub switches: Vec<(f64, Policy, Policy)>,
    pub f: Option<f64>,
    pub g: Option<f64>,
    pub fbar: Option<f64>,
    pub gbar: Option<f64>,
    /// Half-cell location uncertainty.
    pub half_cell: f64,
    pub ambiguous: bool,
}

impl RowBoundaries {
    /// Number of maximal runs of waiting nodes.
    pub fn wait_components(&self) -> usize {
        self.switches.iter().filter(|s| s.2 == Policy::Wait).count()
    }
}

pub fn extract_row(sol: &GridSolution, j: usize) -> RowBoundaries {
    let dx = sol.dx();
    let pr = sol.policy_row(j);
    let mut sw = Vec::new();
    // The pinned last node is excluded.
    for i in 0..sol.nx.saturating_sub(2) {
        if pr[i] != pr[i + 1] {
            sw.push((sol.x(i) + 0.5 * dx, pr[i], pr[i + 1]));
        }
    }
    let mut out = RowBoundaries {
        c: sol.c(j),
        switches: sw.clone(),
        f: None,
        g: None,
        fbar: None,
        gbar: None,
        half_cell: 0.5 * dx,
        ambiguous: sw.len() > 4,
    };
    let find = |from: Policy, to: Policy, k: usize| sw.iter().filter(|s| s.1 == from && s.2 == to).nth(k).map(|s| s.0);
    out.f = sw.iter().find(|s| s.1 == Policy::Stop).map(|s| s.0);
    out.g = find(Policy::Wait, Policy::Act, 0);
    out.fbar = find(Policy::Act, Policy::Wait, 0);
    if out.fbar.is_some() {
        out.gbar = find(Policy::Wait, Policy::Act, 1);
    }
    out
}

pub fn extract_boundaries(sol: &GridSolution) -> Vec<RowBoundaries> {
    (0..sol.nc).map(|j| extract_row(sol, j)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub dx: f64,
    pub sup_abs: f64,
    pub sup_rel: f64,
    pub worst_x: f64,
    pub worst_c: f64,
    pub scale: f64,
    /// sup_abs / dx.
    pub fitted_c: f64,
}

/// Sup-norm gap between the grid values and Q̃ over every node; the relative
/// gap divides by sup |Q̃| on the same nodes.
pub fn compare(sol: &GridSolution, pv: &PiecewiseValue) -> Comparison {
    let mut sup = 0.0f64;
    let mut scale = 0.0f64;
    let (mut wx, mut wc) = (0.0, 0.0);
    for j in 0..sol.nc {
        let c = sol.c(j);
        let sl = pv.slice(c);
        for i in 0..sol.nx {
            let x = sol.x(i);
            let q = if c == 0.0 { pv.value(x, 0.0) } else { pv.jet_in(x, &sl)[0] };
            let e = (sol.v(i, j) - q).abs();
            scale = scale.max(q.abs());
            if e > sup {
                sup = e;
                wx = x;
                wc = c;
            }
        }
    }
    let dx = sol.dx();
    Comparison { dx, sup_abs: sup, sup_rel: sup / scale.max(f64::MIN_POSITIVE), worst_x: wx, worst_c: wc, scale, fitted_c: sup / dx }
}

/// Largest gap between extracted and analytic boundaries over rows with
/// c in [c_lo, c_hi]. Rows where G − F is at most `min_width` are skipped
/// (the grid cannot resolve II there); F̄ and Ḡ are compared only where
/// Ḡ − F̄ exceeds `min_width`.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundaryGaps {
    pub f: f64,
    pub g: f64,
    pub fbar: f64,
    pub gbar: f64,
    pub rows: usize,
    pub missing: usize,
}

impl BoundaryGaps {
    pub fn max(&self) -> f64 {
        self.f.max(self.g).max(self.fbar).max(self.gbar)
    }
}

pub fn boundary_gaps(sol: &GridSolution, pv: &PiecewiseValue, c_lo: f64, c_hi: f64, min_width: f64) -> BoundaryGaps {
    let mut out = BoundaryGaps::default();
    for j in 0..sol.nc {
        let c = sol.c(j);
        if c < c_lo || c > c_hi {
            continue;
        }
        let sl = pv.slice(c);
        if pv.bnd.is_some() && sl.g - sl.f <= min_width {
            continue;
        }
        let rb = extract_row(sol, j);
        out.rows += 1;
        let mut upd = |slot: &mut f64, got: Option<f64>, want: f64| match got {
            Some(x) => *slot = slot.max((x - want).abs()),
            None => out.missing += 1,
        };
        upd(&mut out.f, rb.f, sl.f);
        if pv.bnd.is_some() {
            upd(&mut out.g, rb.g, sl.g);
            if let (Some(a), Some(b)) = (sl.fbar, sl.gbar) {
                if b - a > min_width {
                    upd(&mut out.fbar, rb.fbar, a);
                    upd(&mut out.gbar, rb.gbar, b);
                }
            }
        }
    }
    out
}

/// Regime-aware grid for an oracle run.
pub fn default_config(p: &ProblemParams, dx: f64) -> Result<GridConfig> {
    let rc = RegimeConstants::compute(p)?;
    let c_max = match rc.regime {
        Regime::HighCost => 1.0,
        _ => 1.0f64.max(1.5 * p.x_half_lambda()),
    };
    Ok(GridConfig::new(p, dx, c_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lambda_dagger, lambda_star};

    fn vlambda() -> ProblemParams {
        let l = 0.5 * (lambda_star(1.0, 1.0) + lambda_dagger(1.0, 1.0).unwrap());
        ProblemParams::new(l, 1.0, 1.0).unwrap()
    }

    #[test]
    fn config_validation() {
        let p = vlambda();
        let mut cfg = GridConfig::new(&p, 0.01, 0.5);
        assert!(cfg.validate(&p).is_ok());
        cfg.dx = 0.05;
        assert!(cfg.validate(&p).is_err());
        let mut cfg = GridConfig::new(&p, 0.01, 0.5);
        cfg.x_max -= 0.5;
        assert!(cfg.validate(&p).is_err());
    }

    #[test]
    fn grid_invariants() {
        let p = vlambda();
        let sol = solve_dp(&p, &GridConfig::new(&p, 0.02, 0.6)).unwrap();
        for j in 0..sol.nc {
            assert_eq!(sol.v(0, j), 0.0);
            for i in 0..sol.nx {
                let x = sol.x(i);
                assert!(sol.v(i, j) <= p.delta * x * x + 1e-12);
                if j > 0 {
                    assert!(sol.v(i, j) <= sol.v(i, j - 1) + 1e-9);
                }
            }
        }
    }

    #[test]
    fn high_cost_single_switch() {
        let p = ProblemParams::new(1.3, 1.0, 1.0).unwrap();
        let sol = solve_dp(&p, &GridConfig::new(&p, 0.01, 0.5)).unwrap();
        for rb in extract_boundaries(&sol).iter().skip(1) {
            assert_eq!(rb.switches.len(), 1, "{rb:?}");
            assert!((rb.switches[0].0 - 0.5).abs() <= 0.01);
        }
    }

    #[test]
    fn csv_dump_shape() {
        let p = ProblemParams::new(1.3, 1.0, 1.0).unwrap();
        let sol = solve_dp(&p, &GridConfig::new(&p, 0.02, 0.04)).unwrap();
        let s = sol.to_table().to_string().unwrap();
        assert!(s.starts_with("x,c,value,policy\n"));
        assert_eq!(s.lines().count(), 1 + sol.nx * sol.nc);
    }
}
