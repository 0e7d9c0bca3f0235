//! Trajectory runs, closed-form oracle output and exports.

use anyhow::{bail, Context, Result};
use mtoda_core::continuous::{laguerre_closed_form_multi, rk4_trajectory, BoundaryProvider, LatticeWindow};
use mtoda_core::discrete::{ab_field_from_tau, dm_toda_step, ABField, StepOptions};
use mtoda_core::exact::{format_rational, from_usize, to_f64};
use mtoda_core::mop::nn_order;
use mtoda_core::stepline::{miura_from_table, BandedLax};
use mtoda_core::{LatticeBox, MultiIndex, MomentTable};
use serde_json::{json, Value};

use crate::config::{Format, Mode, RunConfig};
use crate::output::{self, Row};

/// Moment order that covers the recurrence coefficients on `lattice.grow(grow)`.
pub fn order_for(lattice: &LatticeBox, grow: usize) -> usize {
    let corner = MultiIndex::new(lattice.extents().iter().map(|e| e - 1 + grow).collect());
    nn_order(&corner)
}

fn table_at_t0(cfg: &RunConfig, grow: usize) -> Result<MomentTable> {
    Ok(cfg.spec.table_at(&cfg.t0, order_for(&cfg.lattice(), grow))?)
}

fn continuous_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let lattice = cfg.lattice();
    let table = table_at_t0(cfg, 1)?;
    let start = LatticeWindow::from_table(&table, lattice.clone())?.map(to_f64);
    let halo = match cfg.laguerre() {
        Some((delta, kappa)) => BoundaryProvider::LaguerreClosedForm { delta, kappa },
        None => BoundaryProvider::frozen_from_table(&table, &lattice)?,
    };
    let traj = rk4_trajectory(&start, &halo, to_f64(&cfg.t1), cfg.steps, cfg.samples)?;
    Ok(output::float_rows(&traj))
}

/// Initial discrete field: the configured one, or tau-generated at `t0`.
pub fn initial_field(cfg: &RunConfig) -> Result<ABField> {
    match &cfg.ab_field {
        Some(v) => {
            let f = ABField::from_value(v).context("config key \"ab_field\"")?;
            if f.r() != cfg.spec.r() {
                bail!("config key \"ab_field\": r = {} but the moments have r = {}", f.r(), cfg.spec.r());
            }
            Ok(f)
        }
        None => Ok(ab_field_from_tau(&cfg.spec, &cfg.lattice(), cfg.discrete_start()?, &cfg.lambda)?),
    }
}

/// The initial field followed by `steps` applications of the discrete flow.
pub fn discrete_fields(cfg: &RunConfig) -> Result<Vec<ABField>> {
    let first = initial_field(cfg)?;
    let smallest = first.lattice.extents().iter().copied().min().unwrap_or(0);
    if cfg.steps >= smallest {
        bail!(
            "config key \"steps\": {} steps would empty a box with smallest extent {smallest}",
            cfg.steps
        );
    }
    let opts = StepOptions {
        strict: cfg.strict,
        ..StepOptions::default()
    };
    let mut fields = vec![first];
    for _ in 0..cfg.steps {
        let next = dm_toda_step(fields.last().expect("nonempty"), &opts)?;
        fields.push(next);
    }
    Ok(fields)
}

fn oracle_rows(cfg: &RunConfig) -> Result<Vec<Row>> {
    let Some((delta, kappa)) = cfg.laguerre() else {
        bail!("config key \"kind\": oracle mode needs Laguerre moments");
    };
    let mut snapshots = Vec::new();
    for k in 0..=cfg.samples {
        let t = &cfg.t0 + (&cfg.t1 - &cfg.t0) * from_usize(k) / from_usize(cfg.samples);
        let sites = cfg
            .lattice()
            .sites()
            .into_iter()
            .map(|n| laguerre_closed_form_multi(&n, delta, &kappa, &t).map(|c| (n, c)))
            .collect::<mtoda_core::Result<Vec<_>>>()?;
        snapshots.push((t, sites));
    }
    Ok(output::exact_rows(&snapshots))
}

fn discrete_json(cfg: &RunConfig, fields: &[ABField]) -> Value {
    let first = &fields[0].lattice;
    let last = &fields.last().expect("nonempty").lattice;
    json!({
        "mode": "discrete",
        "lambda": format_rational(&cfg.lambda),
        "steps": cfg.steps,
        "initial_box": first.extents(),
        "final_box": last.extents(),
        "fields": fields.iter().map(ABField::to_value).collect::<Vec<_>>(),
    })
}

/// Output text of a run in the configured mode and format.
pub fn simulate_text(cfg: &RunConfig) -> Result<String> {
    cfg.check()?;
    let r = cfg.spec.r();
    match cfg.mode {
        Mode::Continuous | Mode::Oracle => {
            let rows = if cfg.mode == Mode::Continuous {
                continuous_rows(cfg)?
            } else {
                oracle_rows(cfg)?
            };
            Ok(match cfg.format {
                Format::Csv => output::csv(r, &rows),
                Format::Json => output::pretty(&json!({
                    "mode": cfg.mode.name(),
                    "window": cfg.window,
                    "snapshots": output::rows_json(&rows),
                })),
            })
        }
        Mode::Discrete => {
            let fields = discrete_fields(cfg)?;
            eprintln!(
                "discrete: box {:?} -> {:?} after {} steps",
                fields[0].lattice.extents(),
                fields.last().expect("nonempty").lattice.extents(),
                cfg.steps
            );
            Ok(match cfg.format {
                Format::Csv => output::csv(r, &output::field_rows(&fields)),
                Format::Json => output::pretty(&discrete_json(cfg, &fields)),
            })
        }
        Mode::Validate => Ok(crate::validate::report_text(cfg)?.0),
    }
}

/// Export text: trajectory CSV, an ABField (discrete mode) or a BandedLax.
pub fn export_text(cfg: &RunConfig) -> Result<String> {
    cfg.check()?;
    match (cfg.format, cfg.mode) {
        (Format::Csv, _) => simulate_text(cfg),
        (Format::Json, Mode::Discrete) => Ok(output::pretty(&initial_field(cfg)?.to_value())),
        (Format::Json, _) => {
            if cfg.spec.r() != 2 {
                bail!("config key \"r\": Lax export needs r = 2");
            }
            let len = cfg.lax_size + 1;
            let order = nn_order(&MultiIndex::new(vec![len / 2 + 2, len / 2 + 2]));
            let table = cfg.spec.table_at(&cfg.t0, order)?;
            let alpha = miura_from_table(&table, len)?;
            Ok(output::pretty(&BandedLax::new(alpha, cfg.lax_size)?.to_value()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_row_count() {
        let mut cfg = RunConfig::default_laguerre();
        cfg.window = vec![2, 2];
        cfg.steps = 20;
        cfg.samples = 4;
        let text = simulate_text(&cfg).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 2 * 4 * 5);
    }

    #[test]
    fn discrete_shrinks_by_one_shell_per_step() {
        let mut cfg = RunConfig::default_laguerre();
        cfg.mode = Mode::Discrete;
        cfg.window = vec![5, 5];
        cfg.steps = 3;
        let fields = discrete_fields(&cfg).unwrap();
        assert_eq!(fields.last().unwrap().lattice.extents(), &[2, 2]);
        cfg.steps = 5;
        assert!(discrete_fields(&cfg).is_err());
    }

    #[test]
    fn oracle_is_exact() {
        let mut cfg = RunConfig::default_laguerre();
        cfg.mode = Mode::Oracle;
        cfg.window = vec![1, 1];
        cfg.samples = 2;
        let text = simulate_text(&cfg).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 4 * 3);
        // b_{0,0,1} = 1/(1+t) at t = 1/2.
        assert!(lines.contains(&"1/2,0,0,b,1,2/3"));
    }
}
