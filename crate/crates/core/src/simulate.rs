// SPDX-License-Identifier: Apache-2.0
//! Euler–Maruyama simulation of (X, C) under the candidate optimal strategy
//! and Monte Carlo estimation of its discounted cost.
//!
//! Strategy: stop in I (and at |x| ≤ f₀ once the fuel is gone), diffuse in
//! II/III, and in IV shift by ζ along (−1, −1). A step that leaves II/III
//! through a reflecting boundary is projected back the same way, so
//! reflection and repulsion share one code path and differ only in the
//! logged event.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::export::{fmt17, Table};
use crate::valuefn::{FuelSlice, PiecewiseValue, RegionTag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    pub seed: u64,
    /// Negate every Gaussian increment.
    pub mirror: bool,
    /// Keep full event logs for this many leading paths.
    pub record: usize,
}

impl SimConfig {
    /// dt = 1e−4 and e^{−αT} = 1e−6.
    pub fn new(alpha: f64) -> Self {
        Self { dt: 1e-4, horizon: 1e6f64.ln() / alpha, paths: 10_000, seed: 0, mirror: false, record: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.horizon > self.dt) || self.paths == 0 {
            return Err(Error::InvalidParams(format!(
                "need dt > 0, horizon > dt and paths > 0 (dt = {}, horizon = {}, paths = {})",
                self.dt, self.horizon, self.paths
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Action at the start state.
    Initial,
    Reflect,
    Repel,
    Stop,
    Truncate,
}

/// Where an action left the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Landing {
    G,
    Gbar,
    Exhausted,
    /// λ ≥ αδ partial shot onto the stopping line.
    StopLine,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub landing: Landing,
    pub amount: f64,
    pub x: f64,
    pub c: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EventCounts {
    pub reflections: u64,
    pub repulsions: u64,
    /// Repulsions from G that land on Ḡ with fuel left.
    pub repel_g_to_gbar: u64,
    pub repel_fbar: u64,
    pub stops: u64,
    pub truncations: u64,
}

impl EventCounts {
    fn add(&mut self, o: &Self) {
        self.reflections += o.reflections;
        self.repulsions += o.repulsions;
        self.repel_g_to_gbar += o.repel_g_to_gbar;
        self.repel_fbar += o.repel_fbar;
        self.stops += o.stops;
        self.truncations += o.truncations;
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PathSample {
    pub cost: f64,
    pub t_end: f64,
    pub x_end: f64,
    pub c_end: f64,
    pub spent: f64,
    pub steps: u64,
    /// e^{−αT}δX_T² included in `cost` when truncated, else 0.
    pub tail: f64,
    pub counts: EventCounts,
    /// Recorded paths only.
    pub events: Vec<Event>,
    /// (t, cumulative expenditure) after each action; recorded paths only.
    pub trace: Vec<(f64, f64)>,
}

struct Walker<'a> {
    pv: &'a PiecewiseValue,
    sl: FuelSlice,
    f0: f64,
    x: f64,
    c: f64,
    c0: f64,
    t: f64,
    disc: f64,
    cost: f64,
    spent: f64,
    counts: EventCounts,
    record: bool,
    events: Vec<Event>,
    trace: Vec<(f64, f64)>,
    /// Waiting component the state was last in.
    zone: Prev,
}

#[derive(Clone, Copy)]
enum Prev {
    Start,
    Ii,
    Iii,
}

impl<'a> Walker<'a> {
    fn set_fuel(&mut self, c: f64) {
        if c != self.sl.c {
            self.sl = self.pv.slice(c);
        }
        self.c = c;
    }

    fn log(&mut self, kind: EventKind, landing: Landing, amount: f64) {
        if self.record {
            self.events.push(Event { t: self.t, kind, landing, amount, x: self.x, c: self.c });
        }
    }

    fn in_stop(&self, ax: f64) -> bool {
        if self.c <= 0.0 {
            ax <= self.f0
        } else {
            ax <= self.sl.f
        }
    }

    /// 0 stop, 1 II (or no-fuel wait), 2 III, 3 act.
    fn locate(&self, ax: f64) -> u8 {
        if self.in_stop(ax) {
            return 0;
        }
        if self.c <= 0.0 {
            return 1;
        }
        if self.pv.bnd.is_none() {
            return 3;
        }
        if ax < self.sl.g {
            return 1;
        }
        if let (Some(a), Some(b)) = (self.sl.fbar, self.sl.gbar) {
            if ax > a && ax < b {
                return 2;
            }
        }
        3
    }

    fn stop(&mut self) {
        self.cost += self.disc * self.pv.p.delta * self.x * self.x;
        self.counts.stops += 1;
        self.log(EventKind::Stop, Landing::None, 0.0);
    }

    /// Act from the current state (in IV). Returns true if the path stopped.
    fn act(&mut self, prev: Prev) -> bool {
        let ax = self.x.abs();
        let r = self.pv.classify_in(ax, &self.sl);
        debug_assert!(r.tag.is_action());
        let sign = if self.x < 0.0 { -1.0 } else { 1.0 };
        let landing = match r.tag {
            RegionTag::IVa if self.pv.bnd.is_none() => Landing::StopLine,
            RegionTag::IVa => Landing::G,
            RegionTag::IVb => Landing::Gbar,
            _ => Landing::Exhausted,
        };
        let amount = if landing == Landing::Exhausted { self.c } else { r.zeta };
        let above_gbar = self.sl.gbar.is_some_and(|b| ax >= b);
        let g_reflecting = self.pv.bnd.as_ref().is_some_and(|b| b.g_reflecting(self.c));
        self.cost += self.disc * amount;
        self.x = sign * r.x_land;
        if landing == Landing::Exhausted {
            self.spent = self.c0;
            self.set_fuel(0.0);
        } else {
            self.spent += amount;
            self.set_fuel(self.c0 - self.spent);
        }
        let kind = match prev {
            Prev::Start => EventKind::Initial,
            Prev::Ii if g_reflecting => EventKind::Reflect,
            Prev::Iii if above_gbar => EventKind::Reflect,
            _ => EventKind::Repel,
        };
        match kind {
            EventKind::Reflect => self.counts.reflections += 1,
            EventKind::Repel => {
                self.counts.repulsions += 1;
                if matches!(prev, Prev::Ii) && landing == Landing::Gbar && self.c > 0.0 {
                    self.counts.repel_g_to_gbar += 1;
                }
                if matches!(prev, Prev::Iii) {
                    self.counts.repel_fbar += 1;
                }
            }
            _ => {}
        }
        self.zone = if landing == Landing::Gbar { Prev::Iii } else { Prev::Ii };
        self.log(kind, landing, amount);
        if self.record {
            self.trace.push((self.t, self.spent));
        }
        if landing == Landing::StopLine || self.in_stop(self.x.abs()) {
            self.stop();
            return true;
        }
        false
    }
}

/// One path driven by `rng`.
pub fn simulate_path_rng<R: Rng>(x: f64, c: f64, pv: &PiecewiseValue, cfg: &SimConfig, rng: &mut R, record: bool) -> PathSample {
    let p = pv.p;
    let c = c.max(0.0);
    let mut w = Walker {
        pv,
        sl: pv.slice(c),
        f0: pv.nf.map_or(p.x_half_delta(), |nf| nf.f0),
        x,
        c,
        c0: c,
        t: 0.0,
        disc: 1.0,
        cost: 0.0,
        spent: 0.0,
        counts: EventCounts::default(),
        record,
        events: Vec::new(),
        trace: Vec::new(),
        zone: Prev::Ii,
    };
    let step_disc = (-p.alpha * cfg.dt).exp();
    let sq = cfg.dt.sqrt();
    let sgn = if cfg.mirror { -1.0 } else { 1.0 };
    let run = p.lambda * cfg.dt;
    let n_max = (cfg.horizon / cfg.dt).ceil() as u64;
    let mut steps = 0u64;
    let mut done = false;
    let mut tail = 0.0;

    match w.locate(x.abs()) {
        0 => {
            w.stop();
            done = true;
        }
        3 => done = w.act(Prev::Start),
        _ => {}
    }
    while !done {
        if steps == n_max {
            tail = w.disc * p.delta * w.x * w.x;
            w.cost += tail;
            w.counts.truncations += 1;
            w.log(EventKind::Truncate, Landing::None, 0.0);
            break;
        }
        w.cost += w.disc * run * w.x * w.x;
        let z: f64 = rng.sample(StandardNormal);
        w.x += sgn * sq * z;
        w.t += cfg.dt;
        w.disc *= step_disc;
        steps += 1;
        match w.locate(w.x.abs()) {
            0 => {
                w.stop();
                done = true;
            }
            3 => done = w.act(w.zone),
            1 => w.zone = Prev::Ii,
            _ => w.zone = Prev::Iii,
        }
    }
    PathSample {
        cost: w.cost,
        t_end: w.t,
        x_end: w.x,
        c_end: w.c,
        spent: w.spent,
        steps,
        tail,
        counts: w.counts,
        events: w.events,
        trace: w.trace,
    }
}

/// Generator for path `index`: stream `index` of the seed.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(index);
    r
}

pub fn simulate_path(x: f64, c: f64, pv: &PiecewiseValue, cfg: &SimConfig, index: u64) -> PathSample {
    let record = (index as usize) < cfg.record;
    simulate_path_rng(x, c, pv, cfg, &mut path_rng(cfg.seed, index), record)
}

#[derive(Debug, Clone, Serialize)]
pub struct McEstimate {
    pub x: f64,
    pub c: f64,
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    pub dt: f64,
    /// Mean of the truncation tails included in `mean`.
    pub bias_budget: f64,
    pub counts: EventCounts,
    pub mean_steps: f64,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 { v.iter().map(|c| (c - m).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (m, (var / n).sqrt())
}

/// All paths, in index order.
pub fn run_paths(x: f64, c: f64, pv: &PiecewiseValue, cfg: &SimConfig) -> Result<Vec<PathSample>> {
    cfg.validate()?;
    Ok((0..cfg.paths as u64).into_par_iter().map(|i| simulate_path(x, c, pv, cfg, i)).collect())
}

pub fn summarize(x: f64, c: f64, cfg: &SimConfig, paths: &[PathSample]) -> McEstimate {
    let costs: Vec<f64> = paths.iter().map(|p| p.cost).collect();
    let (mean, stderr) = mean_se(&costs);
    let mut counts = EventCounts::default();
    for p in paths {
        counts.add(&p.counts);
    }
    let n = paths.len() as f64;
    McEstimate {
        x,
        c,
        mean,
        stderr,
        n: paths.len(),
        dt: cfg.dt,
        bias_budget: paths.iter().map(|p| p.tail).sum::<f64>() / n,
        counts,
        mean_steps: paths.iter().map(|p| p.steps as f64).sum::<f64>() / n,
    }
}

pub fn mc_estimate(x: f64, c: f64, pv: &PiecewiseValue, cfg: &SimConfig) -> Result<McEstimate> {
    let paths = run_paths(x, c, pv, cfg)?;
    Ok(summarize(x, c, cfg, &paths))
}

/// Mean and standard error of cost(a) − cost(b) under common random numbers.
pub fn mc_difference(a: (f64, f64), b: (f64, f64), pv: &PiecewiseValue, cfg: &SimConfig) -> Result<(f64, f64)> {
    cfg.validate()?;
    let d: Vec<f64> = (0..cfg.paths as u64)
        .into_par_iter()
        .map(|i| simulate_path(a.0, a.1, pv, cfg, i).cost - simulate_path(b.0, b.1, pv, cfg, i).cost)
        .collect();
    Ok(mean_se(&d))
}

pub fn summary_table(rows: &[McEstimate]) -> Table {
    let mut t = Table::new(&["x", "c", "mean", "stderr", "n", "dt"]);
    for r in rows {
        t.push(vec![fmt17(r.x), fmt17(r.c), fmt17(r.mean), fmt17(r.stderr), r.n.to_string(), fmt17(r.dt)]);
    }
    t
}

#[derive(Serialize)]
struct EventLine<'a> {
    point: usize,
    path: usize,
    #[serde(flatten)]
    event: &'a Event,
}

/// JSON lines, one per recorded event, tagged with the start-point index.
pub fn events_jsonl(point: usize, paths: &[PathSample]) -> Result<String> {
    let mut out = String::new();
    for (i, p) in paths.iter().enumerate() {
        for e in &p.events {
            out.push_str(&serde_json::to_string(&EventLine { point, path: i, event: e })?);
            out.push('\n');
        }
    }
    Ok(out)
}

/// Rayon pool capped by FUELCTRL_THREADS when set.
pub fn thread_pool_from_env() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("FUELCTRL_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParams(format!("FUELCTRL_THREADS = {v:?} is not a positive integer")))?;
        b = b.num_threads(n.max(1));
    }
    b.build().map_err(|e| Error::InvalidParams(e.to_string()))
}

/// One start state per region present: the midpoint of the widest x-run of
/// that region on a probe fuel level. An unbounded run (IVc) uses a point
/// a quarter decay length past its start.
pub fn probe_states(pv: &PiecewiseValue) -> Vec<(RegionTag, f64, f64)> {
    let p = pv.p;
    let s = p.s();
    let (c_bar, c_i) = match &pv.bnd {
        Some(b) => (b.c_bar(), b.c_i()),
        None => (1.0, None),
    };
    let mut cands: Vec<(RegionTag, Vec<f64>)> = vec![
        (RegionTag::II, vec![0.25 * c_bar]),
        (RegionTag::IVa, vec![1.4 * c_bar]),
        (RegionTag::IVc, vec![0.25 * c_bar]),
    ];
    if let Some(ci) = c_i {
        cands.insert(1, (RegionTag::III, vec![0.4 * ci]));
        cands.insert(3, (RegionTag::IVb, vec![1.5 * ci, ci, 0.5 * ci]));
    }
    let x_hi = p.x_half_lambda().max(p.x_half_delta()) + 2.0 * c_bar + 4.0 / s;
    let n = 4000;
    let mut out = Vec::new();
    for (tag, cs) in cands {
        for c in cs {
            let sl = pv.slice(c);
            let mut best: Option<(f64, f64)> = None;
            let mut start: Option<f64> = None;
            for k in 0..=n {
                let x = x_hi * k as f64 / n as f64;
                let inside = k < n && pv.classify_in(x, &sl).tag == tag;
                match (inside, start) {
                    (true, None) => start = Some(x),
                    (false, Some(a)) => {
                        let b = if k == n { f64::INFINITY } else { x };
                        if best.map_or(true, |(u, v)| b - a > v - u) {
                            best = Some((a, b));
                        }
                        start = None;
                    }
                    _ => {}
                }
            }
            if let Some((a, b)) = best {
                let x = if b.is_finite() { 0.5 * (a + b) } else { a + 0.25 / s };
                out.push((tag, x, c));
                break;
            }
        }
    }
    out
}
