//! The identity suite behind `mtoda validate`.

use std::collections::BTreeMap;

use anyhow::Result;
use mtoda_core::continuous::{bilinear_residual, mtoda_rhs, verify_dp_dt, BoundaryProvider, LatticeWindow};
use mtoda_core::discrete::{
    ab_field_from_tau, dbilinear_residual, hirota_miwa_residual, verify_dgtoda, verify_div, verify_mkp, ABField,
};
use mtoda_core::mop::{nn_coeffs, verify_consistency, verify_initial_value_relations, verify_nn_recurrence};
use mtoda_core::stepline::{
    diagonal_embed, discrete_miura, dktoda_residual, ktoda_rhs, miura_from_table, miura_map, miura_map_dt,
    miura_sites, verify_spec2op, verify_stepline,
};
use mtoda_core::zero_curvature::{b_by_summation, ZeroCurvatureData};
use mtoda_core::{LatticeBox, MomentTable, MultiIndex, NNCoefficients, ResidualSet};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::simulate::{initial_field, order_for};

/// Number of failure labels kept per family.
const KEEP_FAILURES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Warn,
    Skipped,
}

impl Status {
    fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Warn => "warn",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub name: &'static str,
    pub status: Status,
    pub checks: usize,
    pub max_abs: f64,
    pub failures: Vec<String>,
}

impl Family {
    fn from_set(name: &'static str, set: ResidualSet) -> Self {
        Family {
            name,
            status: if set.all_zero() { Status::Pass } else { Status::Fail },
            checks: set.count(),
            max_abs: set.max_abs(),
            failures: set.failures().iter().take(KEEP_FAILURES).map(|f| f.label.clone()).collect(),
        }
    }

    fn skipped(name: &'static str) -> Self {
        Family {
            name,
            status: Status::Skipped,
            checks: 0,
            max_abs: 0.0,
            failures: Vec::new(),
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "family": self.name,
            "status": self.status.name(),
            "checks": self.checks,
            "max_abs_residual": self.max_abs,
            "failures": self.failures,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub families: Vec<Family>,
}

impl Report {
    /// True unless some family failed; warnings and skips do not count.
    pub fn passed(&self) -> bool {
        self.families.iter().all(|f| f.status != Status::Fail)
    }
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    lattice: LatticeBox,
    table: MomentTable,
    fields: Vec<ABField>,
}

fn pairs(r: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..r).flat_map(move |i| (0..r).filter(move |&j| j != i).map(move |j| (i, j)))
}

fn rec(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for n in c.lattice.sites() {
        for j in 0..n.r() {
            out.record_poly(|| format!("{n} j={}", j + 1), &verify_nn_recurrence(&c.table, &n, j)?);
        }
    }
    Ok(out)
}

fn diffcoeff(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for n in c.lattice.sites() {
        for (i, j) in pairs(n.r()) {
            let (first, second) = verify_consistency(&c.table, &n, i, j)?;
            out.record(|| format!("{n} sum i={} j={}", i + 1, j + 1), &first);
            out.record(|| format!("{n} ratio i={} j={}", i + 1, j + 1), &second);
        }
        if n.r() == 2 {
            for (k, v) in verify_initial_value_relations(&c.table, &n)?.iter().enumerate() {
                out.record(|| format!("{n} initial-value {}", k + 1), v);
            }
        }
    }
    Ok(out)
}

fn diff(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for n in c.lattice.sites() {
        out.record_poly(|| format!("{n}"), &verify_dp_dt(&c.table, &n)?);
    }
    Ok(out)
}

fn bilinear(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for n in c.lattice.sites() {
        out.record(|| format!("{n}"), &bilinear_residual(&c.table, &n)?);
    }
    Ok(out)
}

fn consecutive(c: &Ctx, check: fn(&ABField, &ABField) -> ResidualSet) -> ResidualSet {
    let mut out = ResidualSet::new();
    for w in c.fields.windows(2) {
        out.merge(check(&w[0], &w[1]));
    }
    out
}

fn hirota_miwa(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for t in 0..2 {
        for n in c.lattice.sites() {
            for (i, j) in pairs(n.r()).filter(|(i, j)| i < j) {
                let v = hirota_miwa_residual(&c.cfg.spec, &n, i, j, t)?;
                out.record(|| format!("{n} i={} j={} t={t}", i + 1, j + 1), &v);
            }
        }
    }
    Ok(out)
}

fn dbilinear(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for t in 1..3 {
        for n in c.lattice.sites() {
            out.record(|| format!("{n} t={t}"), &dbilinear_residual(&c.cfg.spec, &n, t)?);
        }
    }
    Ok(out)
}

/// Step-line length covered by the window.
fn stepline_len(c: &Ctx) -> usize {
    2 * c.lattice.extents().iter().copied().min().unwrap_or(0)
}

fn rec2op(c: &Ctx) -> Result<ResidualSet> {
    let len = stepline_len(c);
    let alpha = miura_from_table(&c.table, len)?;
    Ok(verify_stepline(&diagonal_embed(&c.table, len + 1)?, &alpha)?)
}

fn spec2op(c: &Ctx) -> Result<ResidualSet> {
    let alpha = miura_from_table(&c.table, stepline_len(c))?;
    Ok(verify_spec2op(&c.table, &alpha)?)
}

/// Miura image of the m-Toda velocities against the Kostant–Toda velocities
/// (which are written in reversed time).
fn ktoda_vs_miura(c: &Ctx) -> Result<ResidualSet> {
    let len = stepline_len(c).max(2);
    let sites = miura_sites(len);
    let extents = (0..2)
        .map(|k| sites.iter().map(|n| n.get(k)).max().unwrap_or(0) + 1)
        .collect();
    let lattice = LatticeBox::new(extents);
    let window = LatticeWindow::from_table(&c.table, lattice.clone())?;
    let halo = BoundaryProvider::frozen_from_table(&c.table, &lattice)?;
    let rates = mtoda_rhs(&window, &halo)?;
    let pick = |m: &BTreeMap<MultiIndex, NNCoefficients>| -> BTreeMap<MultiIndex, NNCoefficients> {
        sites.iter().map(|n| (n.clone(), m[n].clone())).collect()
    };
    let nn = pick(&window.field);
    let nn_dt = pick(&rates);
    let alpha = miura_map(&nn, len)?;
    let d_dt = miura_map_dt(&nn, &nn_dt, len)?;
    let d_ds = ktoda_rhs(&alpha)?;
    let mut out = ResidualSet::new();
    for big_n in 0..d_ds.len() {
        out.record(|| format!("alpha0 N={big_n}"), &(&d_ds.alpha0[big_n] + &d_dt.alpha0[big_n]));
        out.record(|| format!("alpha1 N={big_n}"), &(&d_ds.alpha1[big_n] + &d_dt.alpha1[big_n]));
        out.record(|| format!("alpha2 N={big_n}"), &(&d_ds.alpha2[big_n] + &d_dt.alpha2[big_n]));
    }
    Ok(out)
}

fn dktoda(c: &Ctx) -> Result<ResidualSet> {
    let smallest = c.lattice.extents().iter().copied().min().unwrap_or(0);
    let len = 2 * smallest.saturating_sub(1);
    let mut out = ResidualSet::new();
    for w in c.fields.windows(2) {
        let now = discrete_miura(&w[0], len)?;
        let next = discrete_miura(&w[1], len)?;
        out.merge(dktoda_residual(&now, &next, &c.cfg.lambda)?);
    }
    Ok(out)
}

fn mop_toda_dis(c: &Ctx) -> Result<ResidualSet> {
    let (e1, e2) = (c.lattice.extents()[0], c.lattice.extents()[1]);
    let data = ZeroCurvatureData::new(&c.cfg.spec, e1, e2, 2)?;
    let mut out = ResidualSet::new();
    for t in 0..2 {
        for n in 0..e1 {
            for m in 0..e2 {
                for (k, rel) in data.zero_curvature_residuals(n, m, t)?.iter().enumerate() {
                    out.record_polys(|| format!("relation {} at ({n},{m},{t})", k + 1), rel.entries());
                }
                out.merge(data.wavefunction_transport(n, m, t)?);
                out.record(|| format!("entry31 at ({n},{m},{t})"), &data.entry31_residual(n, m, t)?);
            }
        }
    }
    Ok(out)
}

fn summation_b(c: &Ctx) -> Result<ResidualSet> {
    let mut out = ResidualSet::new();
    for site in c.lattice.sites() {
        let (n, m) = (site.get(0), site.get(1));
        let (first, second) = b_by_summation(&c.table, n, m)?;
        let up = nn_coeffs(&c.table, &MultiIndex::new(vec![n, m + 1]))?;
        let right = nn_coeffs(&c.table, &MultiIndex::new(vec![n + 1, m]))?;
        out.record(|| format!("b_1 at ({n},{})", m + 1), &(first - &up.b[0]));
        out.record(|| format!("b_2 at ({},{m})", n + 1), &(second - &right.b[1]));
    }
    Ok(out)
}

/// Runs every identity family on the configured window.
///
/// Continuous families use the moments at `t0`; discrete families use
/// discrete times 0, 1, 2 with the configured `lambda`.
pub fn run_validation(cfg: &RunConfig) -> Result<Report> {
    cfg.check()?;
    let lattice = cfg.lattice();
    let r = cfg.spec.r();
    let table = cfg.spec.table_at(&cfg.t0, order_for(&lattice, 2) + 2)?;
    let fields = (0..3)
        .map(|t| ab_field_from_tau(&cfg.spec, &lattice, t, &cfg.lambda))
        .collect::<mtoda_core::Result<Vec<_>>>()?;
    let c = Ctx {
        cfg,
        lattice,
        table,
        fields,
    };
    let mut families = vec![
        Family::from_set("rec", rec(&c)?),
        if r >= 2 {
            Family::from_set("diffcoeff", diffcoeff(&c)?)
        } else {
            Family::skipped("diffcoeff")
        },
        Family::from_set("diff", diff(&c)?),
        Family::from_set("bilinear", bilinear(&c)?),
        Family::from_set("mkp", consecutive(&c, verify_mkp)),
    ];
    let mut div = Family::from_set("div", verify_div(&initial_field(cfg)?));
    if div.status == Status::Fail && !cfg.strict {
        div.status = Status::Warn;
    }
    families.push(div);
    families.push(Family::from_set("dgtoda", consecutive(&c, verify_dgtoda)));
    families.push(if r >= 2 {
        Family::from_set("hirota-miwa", hirota_miwa(&c)?)
    } else {
        Family::skipped("hirota-miwa")
    });
    families.push(Family::from_set("dbilinear", dbilinear(&c)?));
    type Check = fn(&Ctx) -> Result<ResidualSet>;
    let two_measure: [(&'static str, Check); 6] = [
        ("rec2op", rec2op),
        ("spec2op", spec2op),
        ("ktoda-vs-miura", ktoda_vs_miura),
        ("dktoda", dktoda),
        ("MOPTodaDis", mop_toda_dis),
        ("summation-b", summation_b),
    ];
    for (name, check) in two_measure {
        families.push(if r == 2 {
            Family::from_set(name, check(&c)?)
        } else {
            Family::skipped(name)
        });
    }
    Ok(Report { families })
}

pub fn report_json(cfg: &RunConfig, report: &Report) -> Value {
    json!({
        "config": cfg.summary(),
        "passed": report.passed(),
        "families": report.families.iter().map(Family::to_json).collect::<Vec<_>>(),
    })
}

/// Pretty JSON report and whether it passed.
pub fn report_text(cfg: &RunConfig) -> Result<(String, bool)> {
    let report = run_validation(cfg)?;
    Ok((crate::output::pretty(&report_json(cfg, &report)), report.passed()))
}
