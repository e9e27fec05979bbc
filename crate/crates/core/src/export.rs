// SPDX-License-Identifier: Apache-2.0
//! CSV and JSON output. CSV: comma separated, header row, LF endings,
//! floats with 17 significant digits.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::valuefn::PiecewiseValue;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt17).unwrap_or_default()
}

/// A table of string cells written as one CSV document.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        wr.write_record(&self.header)?;
        for r in &self.rows {
            wr.write_record(r)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Rows as JSON objects keyed by header; numeric cells become numbers,
    /// empty cells null.
    pub fn to_json_rows(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let m: serde_json::Map<String, serde_json::Value> = self
                    .header
                    .iter()
                    .zip(r)
                    .map(|(h, v)| {
                        let jv = if v.is_empty() {
                            serde_json::Value::Null
                        } else {
                            match v.parse::<f64>().ok().and_then(serde_json::Number::from_f64) {
                                Some(n) => serde_json::Value::Number(n),
                                None => serde_json::Value::String(v.clone()),
                            }
                        };
                        (h.clone(), jv)
                    })
                    .collect();
                serde_json::Value::Object(m)
            })
            .collect();
        serde_json::Value::Array(rows)
    }

    pub fn to_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Uniform grid of n points on (0, hi] (excludes 0).
pub fn open_grid(hi: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|k| hi * k as f64 / n as f64).collect()
}

/// Uniform grid of n + 1 points on [lo, hi].
pub fn closed_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n.max(1) as f64).collect()
}

/// Boundary curves: c, F, G, Fbar, Gbar, type_F, type_G. F̄ and Ḡ are empty
/// past c_ℐ. With λ ≥ αδ both columns hold the single line 1/(2δ).
pub fn boundaries_table(pv: &PiecewiseValue, c_grid: &[f64]) -> Table {
    let mut t = Table::new(&["c", "F", "G", "Fbar", "Gbar", "type_F", "type_G"]);
    for &c in c_grid {
        match &pv.bnd {
            None => {
                let x = fmt17(pv.p.x_half_delta());
                t.push(vec![fmt17(c), x.clone(), x, String::new(), String::new(), "absorbing".into(), "repelling".into()]);
            }
            Some(b) => {
                let tg = if b.g_reflecting(c) { "reflecting" } else { "repelling" };
                t.push(vec![
                    fmt17(c),
                    fmt17(b.f(c)),
                    fmt17(b.g(c)),
                    fmt_opt(b.fbar(c)),
                    fmt_opt(b.gbar(c)),
                    "absorbing".into(),
                    tg.into(),
                ]);
            }
        }
    }
    t
}

/// Value surface: x, c, Q, region, U.
pub fn value_table(pv: &PiecewiseValue, xs: &[f64], cs: &[f64]) -> Table {
    let mut t = Table::new(&["x", "c", "Q", "region", "U"]);
    for &c in cs {
        let sl = pv.slice(c);
        for &x in xs {
            let (q, tag, u) = if c <= 0.0 {
                let r = pv.classify(x, 0.0);
                let j = pv.jet(x, 0.0);
                (j[0], r.tag, j[1] + j[2])
            } else {
                let j = pv.jet_in(x, &sl);
                (j[0], pv.classify_in(x, &sl).tag, j[1] + j[2])
            };
            t.push(vec![fmt17(x), fmt17(c), fmt17(q), tag.as_str().into(), fmt17(u)]);
        }
    }
    t
}

/// Region labels on a grid: x, c, region, zeta.
pub fn regions_table(pv: &PiecewiseValue, xs: &[f64], cs: &[f64]) -> Table {
    let mut t = Table::new(&["x", "c", "region", "zeta"]);
    for &c in cs {
        let sl = pv.slice(c);
        for &x in xs {
            let r = if c <= 0.0 { pv.classify(x, 0.0) } else { pv.classify_in(x, &sl) };
            t.push(vec![fmt17(x), fmt17(c), r.tag.as_str().into(), fmt17(r.zeta)]);
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fmt17_round_trips() {
        for &v in &[0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            assert_eq!(fmt17(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }

    #[test]
    fn boundaries_table_columns() {
        let p = crate::model::ProblemParams::new(0.5617, 1.0, 1.0).unwrap();
        let pv = PiecewiseValue::new(&p).unwrap();
        let t = boundaries_table(&pv, &open_grid(1.0, 50));
        assert_eq!(t.header.join(","), "c,F,G,Fbar,Gbar,type_F,type_G");
        let f: Vec<f64> = t.rows.iter().map(|r| r[1].parse().unwrap()).collect();
        assert!(f.windows(2).all(|w| w[1] < w[0]));
        assert!(t.rows.last().unwrap()[3].is_empty());
        assert!(!t.rows[0][3].is_empty());
    }

    #[test]
    fn csv_uses_lf() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt17(0.5)]);
        let s = t.to_string().unwrap();
        assert_eq!(s, "a,b\n1,5.0000000000000000e-1\n");
    }
}
