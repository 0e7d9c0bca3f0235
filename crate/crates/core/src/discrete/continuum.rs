//! Small-step limit of the discrete lattice and discrete Laguerre data.

use num_traits::{Signed, Zero};

use super::ab_field_from_tau;
use crate::continuous::{laguerre_closed_form_multi, Scalar};
use crate::error::{Error, Result};
use crate::exact::{to_f64, Rational};
use crate::index::{LatticeBox, MultiIndex};
use crate::mop::{nn_coeffs, nn_order, tau};
use crate::moments::MomentSpec;
use crate::mop::NNCoefficients;

/// `a_{n,k}` alone, which stays defined at sites whose `b` would need a
/// vanishing `tau_{n+e_k}`.
fn a_only(table: &crate::moments::MomentTable, n: &MultiIndex) -> Result<Vec<Rational>> {
    let t = tau(table, n)?;
    if t.is_zero() {
        return Err(Error::normality(n));
    }
    let t2 = &t * &t;
    (0..n.r())
        .map(|k| match n.minus(k) {
            Some(down) => Ok(tau(table, &n.plus(k))? * tau(table, &down)? / &t2),
            None => Ok(Rational::zero()),
        })
        .collect()
}

/// Largest deviation on `lattice` between the scaled one-step differences of
/// the discrete lattice with `lambda = 1/delta` and the continuous right-hand
/// side at `t = 0`.
///
/// The discrete data are mapped back by `b ~ A + 1/delta` and `a ~ -B/delta`;
/// one step then approximates a time increment `delta`. The deviation is
/// `O(delta)`.
pub fn continuum_limit_error(spec: &MomentSpec, delta: &Rational, lattice: &LatticeBox) -> Result<f64> {
    if !delta.is_positive() {
        return Err(Error::invalid("the step delta must be positive"));
    }
    if lattice.r() != spec.r() {
        return Err(Error::Dimension(format!("box for r = {} against r = {}", lattice.r(), spec.r())));
    }
    let lambda = delta.recip();
    let f0 = ab_field_from_tau(spec, lattice, 0, &lambda)?;
    let f1 = ab_field_from_tau(spec, lattice, 1, &lambda)?;

    let sites = lattice.sites();
    let mut order = 0;
    for n in &sites {
        order = order.max(nn_order(n) + 1);
    }
    let table = spec.discrete_table(0, &Rational::zero(), order)?;
    let mut exact = std::collections::BTreeMap::new();
    for n in &sites {
        exact.insert(n.clone(), nn_coeffs(&table, n)?);
    }

    let sq = delta * delta;
    let mut worst: f64 = 0.0;
    for n in &sites {
        let here: &NNCoefficients = &exact[n];
        let a_sum: Rational = here.a.iter().sum();
        for k in 0..n.r() {
            let up = n.plus(k);
            let up_sum: Rational = match exact.get(&up) {
                Some(c) => c.a.iter().sum(),
                None => a_only(&table, &up)?.iter().sum(),
            };
            let b_dot = &a_sum - up_sum;
            let a_dot = match n.minus(k) {
                Some(down) => &here.a[k] * (&exact[&down].b[k] - &here.b[k]),
                None => Rational::zero(),
            };
            let b_scaled = (&f1.a[n][k] - &f0.a[n][k]) / delta;
            let a_scaled = -(&f1.b[n][k] - &f0.b[n][k]) / &sq;
            worst = worst
                .max(to_f64(&(b_scaled - b_dot).abs()))
                .max(to_f64(&(a_scaled - a_dot).abs()));
        }
    }
    Ok(worst)
}

/// Recurrence coefficients at discrete time `t` for the Laguerre weights
/// `x^{delta+t} exp(-kappa_j x)` (the lattice with `lambda = 0`).
pub fn laguerre_discrete_closed_form<S: Scalar>(
    n: &MultiIndex,
    delta: u32,
    t: usize,
    kappa: &[S],
) -> Result<NNCoefficients<S>> {
    let shifted = delta
        .checked_add(u32::try_from(t).map_err(|_| Error::invalid("time step too large"))?)
        .ok_or_else(|| Error::invalid("time step too large"))?;
    laguerre_closed_form_multi(n, shifted, kappa, &S::zero())
}
