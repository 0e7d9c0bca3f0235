//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Exact criteria compare rationals for equality. The floating-point
//! tolerances are pinned below.

use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use mtoda_core::continuous::{
    bilinear_residual, laguerre_closed_form_multi, laguerre_closed_form_multi_dt, laguerre_nn_closed_form,
    rk4_integrate, verify_dp_dt, BoundaryProvider, LatticeWindow,
};
use mtoda_core::discrete::{
    ab_field_from_tau, ab_from_tau, continuum_limit_error, dbilinear_residual, dm_toda_step, dtoda_lax_residual,
    hirota_miwa_residual, op_rec_from_qd, qd_residuals, StepOptions,
};
use mtoda_core::exact::{int, rat, to_f64};
use mtoda_core::moments::laguerre_moments;
use mtoda_core::mop::{nn_coeffs, tau, verify_consistency, verify_initial_value_relations};
use mtoda_core::stepline::{
    discrete_miura, dktoda_residual, interior, ktoda_rhs, laguerre_alpha, lax_commutator_residual, miura_from_table,
    miura_map, miura_map_dt, miura_sites,
};
use mtoda_core::zero_curvature::ZeroCurvatureData;
use mtoda_core::{LatticeBox, MomentSpec, MomentTable, MultiIndex, NNCoefficients, Rational};
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Criterion 1 wall-clock budget.
const LAGUERRE_BUDGET: Duration = Duration::from_secs(10);
/// Criterion 3: deviation from the closed form after 1000 RK4 steps.
const RK4_TOLERANCE: f64 = 1e-8;
/// Criterion 3: admissible observed order between 1000 and 2000 steps.
const RK4_ORDER: (f64, f64) = (3.7, 4.3);
/// Criterion 3 wall-clock budget.
const RK4_BUDGET: Duration = Duration::from_secs(30);
/// Criterion 10: admissible error ratio between delta = 1/100 and 1/1000.
const CONTINUUM_RATIO: (f64, f64) = (5.0, 20.0);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn kappa() -> Vec<Rational> {
    vec![int(1), int(2)]
}

fn laguerre() -> MomentSpec {
    MomentSpec::laguerre(0, kappa()).expect("valid")
}

/// Integer moments in [-6, 6] whose tau values are nonzero on
/// `LatticeBox::cube(r, side)` at discrete times `0..=times`.
fn random_spec(seed: u64, r: usize, order: usize, side: usize, times: usize) -> MomentSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let values: Vec<Vec<Rational>> = (0..r)
            .map(|_| (0..=order).map(|_| int(rng.gen_range(-6..=6))).collect())
            .collect();
        let spec = MomentSpec::explicit(values).expect("rectangular");
        let normal = (0..=times).all(|t| {
            spec.discrete_table(t, &int(0), order - times)
                .map(|table| {
                    LatticeBox::cube(r, side)
                        .sites()
                        .iter()
                        .all(|n| tau(&table, n).map(|v| !v.is_zero()).unwrap_or(false))
                })
                .unwrap_or(false)
        });
        if normal {
            return spec;
        }
    }
}

fn table(spec: &MomentSpec, t: &Rational, order: usize) -> MomentTable {
    spec.table_at(t, order).expect("table")
}

fn c1_laguerre_coefficients() -> Outcome {
    let start = Instant::now();
    let mut count = 0;
    for t in [int(0), rat(1, 2), int(1)] {
        let tab = laguerre_moments(0, &kappa(), &t, 16).map_err(e)?;
        for n in LatticeBox::cube(2, 5).sites() {
            let det = nn_coeffs(&tab, &n).map_err(e)?;
            let closed = laguerre_nn_closed_form(n.get(0), n.get(1), 0, &kappa()[0], &kappa()[1], &t).map_err(e)?;
            ensure(det == closed, || format!("mismatch at {n}, t = {t}"))?;
            count += 1;
        }
    }
    let took = start.elapsed();
    ensure(took < LAGUERRE_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("{count} sites exact in {took:.2?}"))
}

fn diffcoeff_residuals(spec: &MomentSpec) -> Result<usize, String> {
    let tab = table(spec, &int(0), 16);
    let mut checked = 0;
    // Sites whose stencil n + e_j stays in the 5x5 box.
    for n in LatticeBox::cube(2, 4).sites() {
        for (i, j) in [(0, 1), (1, 0)] {
            let (a, b) = verify_consistency(&tab, &n, i, j).map_err(e)?;
            ensure(a.is_zero() && b.is_zero(), || format!("consistency at {n} ({i},{j})"))?;
        }
        for v in verify_initial_value_relations(&tab, &n).map_err(e)? {
            ensure(v.is_zero(), || format!("initial-value relation at {n}"))?;
        }
        checked += 1;
    }
    Ok(checked)
}

fn c2_stationary_consistency() -> Outcome {
    let a = diffcoeff_residuals(&laguerre())?;
    let b = diffcoeff_residuals(&random_spec(11, 2, 18, 6, 0))?;
    Ok(format!("{a} Laguerre sites and {b} random sites exact"))
}

fn rk4_error(steps: usize) -> Result<f64, String> {
    let lattice = LatticeBox::cube(2, 3);
    let start = LatticeWindow::from_table(&table(&laguerre(), &int(0), 12), lattice).map_err(e)?;
    let halo = BoundaryProvider::LaguerreClosedForm {
        delta: 0,
        kappa: kappa(),
    };
    let out = rk4_integrate(&start.map(to_f64), &halo, 1.0, steps).map_err(e)?;
    let kf: Vec<f64> = kappa().iter().map(to_f64).collect();
    let mut worst: f64 = 0.0;
    for (n, c) in &out.field {
        let exact = laguerre_closed_form_multi(n, 0, &kf, &1.0).map_err(e)?;
        for (x, y) in c.a.iter().chain(&c.b).zip(exact.a.iter().chain(&exact.b)) {
            worst = worst.max((x - y).abs());
        }
    }
    Ok(worst)
}

fn c3_continuous_flow() -> Outcome {
    let start = Instant::now();
    let e1000 = rk4_error(1000)?;
    let e2000 = rk4_error(2000)?;
    let took = start.elapsed();
    let order = (e1000 / e2000).log2();
    ensure(e1000 <= RK4_TOLERANCE, || format!("error {e1000:e} at 1000 steps"))?;
    ensure((RK4_ORDER.0..=RK4_ORDER.1).contains(&order), || {
        format!("observed order {order:.3} (errors {e1000:e}, {e2000:e})")
    })?;
    ensure(took < RK4_BUDGET, || format!("took {took:?}"))?;
    Ok(format!("error {e1000:.2e}, order {order:.3}, {took:.2?}"))
}

fn c4_derivative_identities() -> Outcome {
    let mut count = 0;
    for spec in [laguerre(), random_spec(4, 2, 20, 7, 0)] {
        for t in [int(0), rat(1, 2)] {
            if t != int(0) && spec.kind() != laguerre().kind() {
                continue;
            }
            let tab = table(&spec, &t, 20);
            for n in LatticeBox::cube(2, 6).sites().into_iter().filter(|n| n.total() <= 5) {
                let p = verify_dp_dt(&tab, &n).map_err(e)?;
                ensure(p.is_zero(), || format!("dP/dt at {n}, t = {t}"))?;
                let b = bilinear_residual(&tab, &n).map_err(e)?;
                ensure(b.is_zero(), || format!("bilinear at {n}, t = {t}"))?;
                count += 1;
            }
        }
    }
    Ok(format!("{count} site checks exact"))
}

fn c5_discrete_flow() -> Outcome {
    let spec = laguerre();
    let mut f = ab_field_from_tau(&spec, &LatticeBox::cube(2, 6), 0, &int(0)).map_err(e)?;
    let opts = StepOptions {
        strict: true,
        ..StepOptions::default()
    };
    for t in 1..=4 {
        f = dm_toda_step(&f, &opts).map_err(e)?;
        ensure(f.lattice.extents() == [6 - t, 6 - t], || format!("box after {t} steps"))?;
        for n in f.lattice.sites() {
            for j in 0..2 {
                let (a, b) = ab_from_tau(&spec, &n, j, t).map_err(e)?;
                ensure(f.a[&n][j] == a && f.b[&n][j] == b, || format!("step {t} at {n}, channel {}", j + 1))?;
            }
        }
    }
    let factorial = MomentSpec::explicit(vec![(0..24u32).scan(int(1), |acc, i| {
        let out = acc.clone();
        *acc = &*acc * int(i as i64 + 1);
        Some(out)
    })
    .collect()])
    .map_err(e)?;
    for t in 0..3 {
        for n in 0..5 {
            ensure(qd_residuals(&factorial, n, t).map_err(e)?.all_zero(), || format!("qd at n={n}, t={t}"))?;
            let (a, b) = op_rec_from_qd(&factorial, n, t).map_err(e)?;
            let direct = nn_coeffs(&factorial.discrete_table(t, &int(0), 14).map_err(e)?, &MultiIndex::new(vec![n]))
                .map_err(e)?;
            ensure(direct.a[0] == a && direct.b[0] == b, || format!("qd recurrence at n={n}, t={t}"))?;
            if n >= 1 {
                ensure(dtoda_lax_residual(&factorial, n, t).map_err(e)?.all_zero(), || {
                    format!("r = 1 Lax pair at n={n}, t={t}")
                })?;
            }
        }
    }
    let mut g = ab_field_from_tau(&factorial, &LatticeBox::new(vec![6]), 0, &int(0)).map_err(e)?;
    for t in 1..=3 {
        g = dm_toda_step(&g, &opts).map_err(e)?;
        ensure(g == ab_field_from_tau(&factorial, &g.lattice, t, &int(0)).map_err(e)?, || {
            format!("r = 1 step {t}")
        })?;
    }
    Ok("t = 1..4 on 6x6 -> 2x2 exact; r = 1 qd exact".into())
}

fn c6_bilinear_discrete() -> Outcome {
    let spec = laguerre();
    let mut count = 0;
    for n in LatticeBox::cube(2, 5).sites().into_iter().filter(|n| n.total() <= 4) {
        for t in 0..=3 {
            ensure(hirota_miwa_residual(&spec, &n, 0, 1, t).map_err(e)?.is_zero(), || {
                format!("Hirota–Miwa at {n}, t = {t}")
            })?;
            if t >= 1 {
                ensure(dbilinear_residual(&spec, &n, t).map_err(e)?.is_zero(), || {
                    format!("discrete bilinear at {n}, t = {t}")
                })?;
            }
            count += 1;
        }
    }
    Ok(format!("{count} (site, time) pairs exact"))
}

fn c7_miura() -> Outcome {
    for t in [int(0), rat(1, 2), rat(7, 5)] {
        let len = 9;
        let nn: BTreeMap<MultiIndex, NNCoefficients> = miura_sites(len)
            .into_iter()
            .map(|n| laguerre_closed_form_multi(&n, 0, &kappa(), &t).map(|c| (n, c)))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let nn_dt: BTreeMap<MultiIndex, NNCoefficients> = nn
            .keys()
            .map(|n| laguerre_closed_form_multi_dt(n, 0, &kappa(), &t).map(|c| (n.clone(), c)))
            .collect::<Result<_, _>>()
            .map_err(e)?;
        let alpha = miura_map(&nn, len).map_err(e)?;
        let d_dt = miura_map_dt(&nn, &nn_dt, len).map_err(e)?;
        // The Kostant–Toda velocities run in reversed time.
        let d_ds = ktoda_rhs(&alpha).map_err(e)?;
        for k in 0..d_ds.len() {
            ensure(
                d_ds.alpha0[k] == -d_dt.alpha0[k].clone()
                    && d_ds.alpha1[k] == -d_dt.alpha1[k].clone()
                    && d_ds.alpha2[k] == -d_dt.alpha2[k].clone(),
                || format!("Kostant–Toda at N={k}, t = {t}"),
            )?;
        }
        let from_det = miura_from_table(&laguerre_moments(0, &kappa(), &t, 16).map_err(e)?, 8).map_err(e)?;
        for big_n in 0..8 {
            let (a0, a1, a2) = laguerre_alpha(big_n, 0, &kappa()[0], &kappa()[1], &t).map_err(e)?;
            ensure(
                from_det.alpha0[big_n] == a0 && from_det.alpha1[big_n] == a1 && from_det.alpha2[big_n] == a2,
                || format!("alpha closed form at N={big_n}, t = {t}"),
            )?;
        }
    }
    for lambda in [int(0), int(-1)] {
        let fields = (0..3)
            .map(|t| ab_field_from_tau(&laguerre(), &LatticeBox::cube(2, 5), t, &lambda))
            .collect::<Result<Vec<_>, _>>()
            .map_err(e)?;
        for w in fields.windows(2) {
            let now = discrete_miura(&w[0], 8).map_err(e)?;
            let next = discrete_miura(&w[1], 8).map_err(e)?;
            ensure(dktoda_residual(&now, &next, &lambda).map_err(e)?.all_zero(), || {
                format!("discrete Kostant–Toda at t = {}, lambda = {lambda}", w[0].t)
            })?;
        }
    }
    Ok("flow, closed forms and discrete map exact".into())
}

fn zero_curvature_for(spec: &MomentSpec) -> Result<usize, String> {
    let data = ZeroCurvatureData::new(spec, 4, 4, 3).map_err(e)?;
    let mut count = 0;
    for t in 0..=2 {
        for n in 0..=3 {
            for m in 0..=3 {
                for (k, rel) in data.zero_curvature_residuals(n, m, t).map_err(e)?.iter().enumerate() {
                    ensure(rel.is_zero(), || format!("relation {} at ({n},{m},{t})", k + 1))?;
                }
                let transport = data.wavefunction_transport(n, m, t).map_err(e)?;
                ensure(transport.all_zero(), || format!("transport at ({n},{m},{t})"))?;
                count += 1;
            }
        }
    }
    Ok(count)
}

fn c8_zero_curvature() -> Outcome {
    let a = zero_curvature_for(&laguerre())?;
    let b = zero_curvature_for(&random_spec(21, 2, 30, 6, 4))?;
    Ok(format!("{a} Laguerre and {b} random plaquettes vanish identically"))
}

fn c9_lax() -> Outcome {
    let size = 8;
    let sources = [
        table(&laguerre(), &int(0), 20),
        table(&laguerre(), &rat(1, 3), 20),
        table(&random_spec(5, 2, 22, 7, 0), &int(0), 20),
    ];
    for tab in &sources {
        let alpha = miura_from_table(tab, size + 1).map_err(e)?;
        let res = lax_commutator_residual(&alpha, size).map_err(e)?;
        ensure(interior(&res, 2).is_zero(), || format!("interior commutator at t = {}", tab.t_label()))?;
    }
    Ok(format!("{size}x{size} truncations, interior exact on {} sources", sources.len()))
}

fn c10_continuum() -> Outcome {
    let lattice = LatticeBox::cube(2, 2);
    let e1 = continuum_limit_error(&laguerre(), &rat(1, 100), &lattice).map_err(e)?;
    let e2 = continuum_limit_error(&laguerre(), &rat(1, 1000), &lattice).map_err(e)?;
    let ratio = e1 / e2;
    ensure((CONTINUUM_RATIO.0..=CONTINUUM_RATIO.1).contains(&ratio), || {
        format!("ratio {ratio:.3} (errors {e1:e}, {e2:e})")
    })?;
    Ok(format!("errors {e1:.3e}, {e2:.3e}, ratio {ratio:.3}"))
}

fn c11_cli() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_mtoda"))
            .arg("validate")
            .output()
            .map_err(e)
    };
    let first = run()?;
    let second = run()?;
    ensure(first.status.code() == Some(0), || format!("exit status {:?}", first.status.code()))?;
    ensure(first.stdout == second.stdout, || "outputs differ between runs".into())?;
    let report: Value = serde_json::from_slice(&first.stdout).map_err(e)?;
    let families = report["families"].as_array().ok_or("report lacks families")?;
    for f in families {
        ensure(f["status"] == "pass", || format!("family {} is {}", f["family"], f["status"]))?;
    }
    Ok(format!("{} families pass, byte-identical", families.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("1 Laguerre coefficient match", c1_laguerre_coefficients),
        ("2 stationary consistency", c2_stationary_consistency),
        ("3 continuous flow", c3_continuous_flow),
        ("4 exact derivative identities", c4_derivative_identities),
        ("5 discrete flow", c5_discrete_flow),
        ("6 bilinear discrete identities", c6_bilinear_discrete),
        ("7 Miura squares", c7_miura),
        ("8 zero curvature", c8_zero_curvature),
        ("9 Lax commutator", c9_lax),
        ("10 continuum limit", c10_continuum),
        ("11 CLI determinism", c11_cli),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
