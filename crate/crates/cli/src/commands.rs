// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use fuelctrl::export::{closed_grid, fmt17, fmt_opt, open_grid, to_json, Table};
use fuelctrl::model::classify;
use fuelctrl::oracle::{boundary_gaps, default_config, extract_boundaries};
use fuelctrl::simulate::{events_jsonl, probe_states, run_paths, summarize, summary_table, thread_pool_from_env};
use fuelctrl::verify::VerifyGrid;
use fuelctrl::{compare, solve_dp, verify_all, PiecewiseValue, ProblemParams, RegimeConstants, SimConfig};
use serde_json::json;

use crate::args::{params, pick, Cli, Command, CurveArgs, FileConfig, Format, GridArgs, OracleArgs, SimArgs};

/// Bad input discovered after flag parsing (exit 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn run(cli: &Cli) -> Result<u8> {
    let file = FileConfig::load(cli.global.config.as_deref()).map_err(|e| UsageError(format!("{e:#}")))?;
    let p = params(&cli.global, &file)?;
    let pool = thread_pool_from_env()?;
    pool.install(|| dispatch(cli, &file, &p))
}

fn dispatch(cli: &Cli, file: &FileConfig, p: &ProblemParams) -> Result<u8> {
    let fmt = cli.global.format;
    let out = cli.global.out.as_deref();
    match &cli.command {
        Command::Regimes => regimes(p, fmt.unwrap_or(Format::Json), out),
        Command::Boundaries(a) => boundaries(p, file, a, fmt.unwrap_or(Format::Csv), out),
        Command::Value(a) => value(p, file, a, fmt.unwrap_or(Format::Csv), out),
        Command::Verify => verify(p, fmt.unwrap_or(Format::Json), out),
        Command::Oracle(a) => oracle(p, file, a, fmt.unwrap_or(Format::Csv), out),
        Command::Simulate(a) => simulate(p, file, a, fmt.unwrap_or(Format::Csv), out),
        Command::PhaseDiagram(a) => phase_diagram(p, file, a, fmt.unwrap_or(Format::Csv), out),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())?;
            so.flush()?;
            Ok(())
        }
    }
}

fn emit_table(out: Option<&Path>, fmt: Format, t: &Table) -> Result<()> {
    match fmt {
        Format::Csv => emit(out, &t.to_string()?),
        Format::Json => emit(out, &to_json(&t.to_json_rows())?),
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(UsageError(format!("--{name} must be positive and finite, got {v}")).into())
    }
}

fn at_least_one(name: &str, n: usize) -> Result<usize> {
    if n == 0 {
        return Err(UsageError(format!("--{name} must be at least 1")).into());
    }
    Ok(n)
}

fn solve(p: &ProblemParams) -> Result<PiecewiseValue> {
    eprintln!("solving boundaries for lambda = {}, alpha = {}, delta = {}", p.lambda, p.alpha, p.delta);
    Ok(PiecewiseValue::new(p)?)
}

fn default_cmax(pv: &PiecewiseValue) -> f64 {
    pv.bnd.as_ref().map_or(1.0, |b| 3.0 * b.c_bar())
}

fn regimes(p: &ProblemParams, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let rc = RegimeConstants::compute(p)?;
    let cls = classify(p);
    match fmt {
        Format::Json => emit(out, &to_json(&json!({ "params": p, "constants": rc, "classification": cls }))?)?,
        Format::Csv => {
            let mut t = Table::new(&["name", "value"]);
            for (k, v) in [
                ("lambda", Some(p.lambda)),
                ("alpha", Some(p.alpha)),
                ("delta", Some(p.delta)),
                ("lambda_star", Some(rc.lambda_star)),
                ("lambda_dagger", Some(rc.lambda_dagger)),
                ("f0", rc.f0),
                ("x_half_delta", Some(rc.x_half_delta)),
                ("x_half_lambda", Some(rc.x_half_lambda)),
                ("K", rc.big_k),
                ("k", rc.k),
                ("k_bar", Some(rc.k_bar)),
                ("B0", rc.b0),
            ] {
                t.push(vec![k.into(), fmt_opt(v)]);
            }
            t.push(vec!["regime".into(), rc.regime.as_str().into()]);
            t.push(vec!["boundary_case".into(), rc.boundary_case.to_string()]);
            emit(out, &t.to_string()?)?;
        }
    }
    Ok(0)
}

fn boundaries(p: &ProblemParams, file: &FileConfig, a: &CurveArgs, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let pv = solve(p)?;
    let cmax = positive("cmax", pick(a.cmax, file.cmax, default_cmax(&pv)))?;
    let t = fuelctrl::export::boundaries_table(&pv, &open_grid(cmax, at_least_one("nc", a.nc)?));
    emit_table(out, fmt, &t)?;
    Ok(0)
}

fn xc_grid(pv: &PiecewiseValue, file: &FileConfig, a: &GridArgs) -> Result<(Vec<f64>, Vec<f64>)> {
    let cmax = positive("cmax", pick(a.cmax, file.cmax, default_cmax(pv)))?;
    let xmax = match a.xmax.or(file.xmax) {
        Some(x) => positive("xmax", x)?,
        None => VerifyGrid { c_max: cmax, ..VerifyGrid::for_value(pv) }.x_max,
    };
    Ok((closed_grid(0.0, xmax, at_least_one("nx", a.nx)?), closed_grid(0.0, cmax, at_least_one("nc", a.nc)?)))
}

fn value(p: &ProblemParams, file: &FileConfig, a: &GridArgs, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let pv = solve(p)?;
    let (xs, cs) = xc_grid(&pv, file, a)?;
    let t = fuelctrl::export::value_table(&pv, &xs, &cs);
    match fmt {
        Format::Csv => emit(out, &t.to_string()?)?,
        Format::Json => {
            let coef = fuelctrl::valuefn::coefficient_summary(&pv, &cs);
            emit(out, &to_json(&json!({ "params": p, "coefficients": coef, "values": t.to_json_rows() }))?)?;
        }
    }
    Ok(0)
}

fn verify(p: &ProblemParams, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let pv = solve(p)?;
    eprintln!("running verification battery");
    let rep = verify_all(&pv);
    match fmt {
        Format::Json => emit(out, &to_json(&rep)?)?,
        Format::Csv => {
            let mut t = Table::new(&["check", "passed", "gating", "worst", "tolerance", "points"]);
            for c in &rep.checks {
                t.push(vec![
                    c.name.clone(),
                    c.passed.to_string(),
                    c.gating.to_string(),
                    fmt17(c.worst),
                    fmt17(c.tolerance),
                    c.points.to_string(),
                ]);
            }
            emit(out, &t.to_string()?)?;
        }
    }
    for c in rep.failures() {
        eprintln!("FAIL {}: worst {} > tolerance {}", c.name, c.worst, c.tolerance);
    }
    Ok(if rep.passed { 0 } else { 1 })
}

fn oracle(p: &ProblemParams, file: &FileConfig, a: &OracleArgs, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let pv = solve(p)?;
    let dx = positive("dx", pick(a.dx, file.dx, 0.005))?;
    let mut cfg = default_config(p, dx)?;
    if let Some(c) = a.cmax.or(file.cmax) {
        cfg.c_max = positive("cmax", c)?;
        cfg.x_max = fuelctrl::GridConfig::min_x_max(p, dx, cfg.c_max);
    }
    if let Some(x) = a.xmax.or(file.xmax) {
        cfg.x_max = positive("xmax", x)?;
    }
    cfg.tol = positive("tol", pick(a.tol, file.tol, cfg.tol))?;
    cfg.validate(p)?;
    eprintln!("grid DP: dx = {}, x_max = {}, c_max = {}", cfg.dx, cfg.x_max, cfg.c_max);
    let sol = solve_dp(p, &cfg)?;
    let cmp = compare(&sol, &pv);
    let gaps = boundary_gaps(&sol, &pv, dx, cfg.c_max, 4.0 * dx);
    eprintln!("sup gap {:e} (relative {:e})", cmp.sup_abs, cmp.sup_rel);
    if let Some(path) = &a.grid {
        let mut f = std::io::BufWriter::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        );
        sol.to_table().write(&mut f)?;
    }
    let rows = extract_boundaries(&sol);
    match fmt {
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| json!({ "c": r.c, "F": r.f, "G": r.g, "Fbar": r.fbar, "Gbar": r.gbar, "wait_components": r.wait_components() }))
                .collect();
            emit(out, &to_json(&json!({ "params": p, "config": cfg, "comparison": cmp, "boundary_gaps": gaps, "rows": rows }))?)?;
        }
        Format::Csv => {
            let mut t = Table::new(&[
                "c", "F_dp", "G_dp", "Fbar_dp", "Gbar_dp", "F", "G", "Fbar", "Gbar", "wait_components",
            ]);
            for r in &rows {
                let sl = pv.slice(r.c);
                let analytic_g = if pv.bnd.is_some() { Some(sl.g) } else { None };
                t.push(vec![
                    fmt17(r.c),
                    fmt_opt(r.f),
                    fmt_opt(r.g),
                    fmt_opt(r.fbar),
                    fmt_opt(r.gbar),
                    fmt17(sl.f),
                    fmt_opt(analytic_g),
                    fmt_opt(sl.fbar),
                    fmt_opt(sl.gbar),
                    r.wait_components().to_string(),
                ]);
            }
            emit(out, &t.to_string()?)?;
        }
    }
    Ok(0)
}

fn simulate(p: &ProblemParams, file: &FileConfig, a: &SimArgs, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let pv = solve(p)?;
    let mut cfg = SimConfig::new(p.alpha);
    cfg.dt = positive("dt", pick(a.dt, file.dt, cfg.dt))?;
    cfg.paths = at_least_one("paths", pick(a.paths, file.paths, cfg.paths))?;
    cfg.seed = pick(a.seed, file.seed, cfg.seed);
    cfg.record = if a.events.is_some() { a.record } else { 0 };
    cfg.validate()?;
    let points: Vec<(f64, f64)> = if a.points.is_empty() {
        probe_states(&pv).into_iter().map(|(_, x, c)| (x, c)).collect()
    } else {
        a.points.clone()
    };
    let mut rows = Vec::with_capacity(points.len());
    let mut events = String::new();
    for (k, &(x, c)) in points.iter().enumerate() {
        eprintln!("simulating {} paths from x = {x}, c = {c} ({}/{})", cfg.paths, k + 1, points.len());
        let paths = run_paths(x, c, &pv, &cfg)?;
        if a.events.is_some() {
            events.push_str(&events_jsonl(k, &paths)?);
        }
        rows.push(summarize(x, c, &cfg, &paths));
    }
    if let Some(path) = &a.events {
        std::fs::write(path, &events).with_context(|| format!("writing {}", path.display()))?;
    }
    match fmt {
        Format::Csv => emit(out, &summary_table(&rows).to_string()?)?,
        Format::Json => {
            let est: Vec<_> = rows
                .iter()
                .map(|r| {
                    let q = pv.value(r.x, r.c);
                    json!({ "estimate": r, "value": q, "region": pv.classify(r.x, r.c).tag.as_str() })
                })
                .collect();
            emit(out, &to_json(&json!({ "params": p, "config": cfg, "estimates": est }))?)?;
        }
    }
    Ok(0)
}

fn phase_diagram(p: &ProblemParams, file: &FileConfig, a: &GridArgs, fmt: Format, out: Option<&Path>) -> Result<u8> {
    let pv = solve(p)?;
    let (xs, cs) = xc_grid(&pv, file, a)?;
    let regions = fuelctrl::export::regions_table(&pv, &xs, &cs);
    match fmt {
        Format::Csv => emit(out, &regions.to_string()?)?,
        Format::Json => {
            let curves = fuelctrl::export::boundaries_table(&pv, &cs[1..]);
            let levels = pv.bnd.as_ref().map(|b| b.levels);
            let doc = json!({
                "params": p,
                "regime": pv.regime(),
                "levels": levels,
                "kinks": pv.bnd.as_ref().map(|b| b.kinks.clone()),
                "curves": curves.to_json_rows(),
                "grid": regions.to_json_rows(),
            });
            emit(out, &to_json(&doc)?)?;
        }
    }
    Ok(0)
}
