//! Trajectory rows and their CSV / JSON renderings.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use mtoda_core::continuous::LatticeWindow;
use mtoda_core::discrete::ABField;
use mtoda_core::exact::format_rational;
use mtoda_core::{MultiIndex, NNCoefficients, Rational};
use serde_json::{json, Map, Value};

/// One value of a trajectory: time, site, kind, 1-based channel, value.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub t: String,
    pub site: MultiIndex,
    pub kind: &'static str,
    pub channel: usize,
    pub value: String,
}

/// Floats print with 17 significant digits.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn push_nn<S>(rows: &mut Vec<Row>, t: &str, site: &MultiIndex, c: &NNCoefficients<S>, fmt: impl Fn(&S) -> String) {
    for (kind, vals) in [("a", &c.a), ("b", &c.b)] {
        for (j, v) in vals.iter().enumerate() {
            rows.push(Row {
                t: t.to_string(),
                site: site.clone(),
                kind,
                channel: j + 1,
                value: fmt(v),
            });
        }
    }
}

pub fn float_rows(snapshots: &[LatticeWindow<f64>]) -> Vec<Row> {
    let mut rows = Vec::new();
    for w in snapshots {
        let t = float(w.t);
        for n in w.lattice.sites() {
            push_nn(&mut rows, &t, &n, &w.field[&n], |x| float(*x));
        }
    }
    rows
}

pub fn exact_rows(snapshots: &[(Rational, Vec<(MultiIndex, NNCoefficients)>)]) -> Vec<Row> {
    let mut rows = Vec::new();
    for (t, sites) in snapshots {
        let t = format_rational(t);
        for (n, c) in sites {
            push_nn(&mut rows, &t, n, c, format_rational);
        }
    }
    rows
}

pub fn field_rows(fields: &[ABField]) -> Vec<Row> {
    let mut rows = Vec::new();
    for f in fields {
        let t = f.t.to_string();
        for n in f.lattice.sites() {
            for (kind, map) in [("A", &f.a), ("B", &f.b)] {
                if let Some(vals) = map.get(&n) {
                    for (j, v) in vals.iter().enumerate() {
                        rows.push(Row {
                            t: t.clone(),
                            site: n.clone(),
                            kind,
                            channel: j + 1,
                            value: format_rational(v),
                        });
                    }
                }
            }
        }
    }
    rows
}

pub fn csv(r: usize, rows: &[Row]) -> String {
    let mut out = String::from("t");
    for k in 1..=r {
        write!(out, ",n{k}").expect("string write");
    }
    out.push_str(",kind,channel,value\n");
    for row in rows {
        write!(out, "{},{},{},{},{}", row.t, row.site.key(), row.kind, row.channel, row.value).expect("string write");
        out.push('\n');
    }
    out
}

/// Rows grouped by time, for JSON output.
pub fn rows_json(rows: &[Row]) -> Value {
    let mut snapshots: Vec<(String, Map<String, Value>)> = Vec::new();
    for row in rows {
        if snapshots.last().map(|(t, _)| t != &row.t).unwrap_or(true) {
            snapshots.push((row.t.clone(), Map::new()));
        }
        let sites = &mut snapshots.last_mut().expect("just pushed").1;
        let entry = sites
            .entry(row.site.key())
            .or_insert_with(|| json!({}))
            .as_object_mut()
            .expect("object");
        entry
            .entry(row.kind)
            .or_insert_with(|| json!([]))
            .as_array_mut()
            .expect("array")
            .push(Value::String(row.value.clone()));
    }
    Value::Array(
        snapshots
            .into_iter()
            .map(|(t, sites)| json!({"t": t, "sites": sites}))
            .collect(),
    )
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

/// Write to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).context("writing to stdout")?;
            out.flush().context("writing to stdout")
        }
    }
}
