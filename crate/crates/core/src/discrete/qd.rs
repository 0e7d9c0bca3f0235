//! The single-measure case: qd variables, their evolution and the 2×2 Lax pair.
//!
//! All times here use `lambda = 0`, so `tau^t_k` is the `k×k` Hankel
//! determinant of `mu_{t+i+j}`.

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::exact::{Poly, PolyMatrix, Rational};
use crate::index::MultiIndex;
use crate::moments::{MomentSpec, MomentTable};
use crate::mop::{mop_type2, tau};
use crate::residual::ResidualSet;

/// `V^t_n` and `W^t_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct QdPair {
    pub v: Rational,
    pub w: Rational,
}

fn require_single(spec: &MomentSpec) -> Result<()> {
    if spec.r() != 1 {
        return Err(Error::Dimension(format!("qd variables need r = 1, got r = {}", spec.r())));
    }
    Ok(())
}

/// Tables at times `t, t+1, ...` up to `t + extra`, each holding moments
/// through `order`.
fn ladder(spec: &MomentSpec, t: usize, extra: usize, order: usize) -> Result<Vec<MomentTable>> {
    let zero = Rational::zero();
    (t..=t + extra)
        .map(|s| spec.discrete_table(s, &zero, order))
        .collect()
}

fn hankel(table: &MomentTable, k: usize) -> Result<Rational> {
    tau(table, &MultiIndex::new(vec![k]))
}

fn nonzero(x: Rational, k: usize, t: usize) -> Result<Rational> {
    if x.is_zero() {
        Err(Error::normality_at(&MultiIndex::new(vec![k]), t))
    } else {
        Ok(x)
    }
}

fn qd_from(tabs: &[MomentTable], s: usize, n: usize, t: usize) -> Result<QdPair> {
    let (now, next, next2) = (&tabs[s], &tabs[s + 1], &tabs[s + 2]);
    let h0n = nonzero(hankel(now, n)?, n, t)?;
    let h0n1 = nonzero(hankel(now, n + 1)?, n + 1, t)?;
    let h1n = nonzero(hankel(next, n)?, n, t + 1)?;
    let h2n = nonzero(hankel(next2, n)?, n, t + 2)?;
    let h1n1 = hankel(next, n + 1)?;
    Ok(QdPair {
        v: &h1n1 * &h0n / (&h0n1 * &h1n),
        w: &h1n1 * &h1n / (&h0n1 * &h2n),
    })
}

/// `V^t_n = tau^{t+1}_{n+1} tau^t_n / (tau^t_{n+1} tau^{t+1}_n)`,
/// `W^t_n = tau^{t+1}_{n+1} tau^{t+1}_n / (tau^t_{n+1} tau^{t+2}_n)`.
pub fn qd_r1(spec: &MomentSpec, n: usize, t: usize) -> Result<QdPair> {
    require_single(spec)?;
    let tabs = ladder(spec, t, 2, 2 * n + 1)?;
    qd_from(&tabs, 0, n, t)
}

/// Residuals of the qd evolution at `(n, t)`:
/// `V^{t+2}_n + W^t_{n+1} - V^t_{n+1} - W^{t+1}_n` and
/// `W^t_n V^t_{n+1} - V^{t+1}_n W^t_{n+1}`.
pub fn qd_residuals(spec: &MomentSpec, n: usize, t: usize) -> Result<ResidualSet> {
    require_single(spec)?;
    let tabs = ladder(spec, t, 4, 2 * n + 3)?;
    let q = |s: usize, k: usize| qd_from(&tabs, s, k, t + s);
    let mut out = ResidualSet::new();
    out.record(
        || format!("qd-sum n={n} t={t}"),
        &(q(2, n)?.v + q(0, n + 1)?.w - q(0, n + 1)?.v - q(1, n)?.w),
    );
    out.record(
        || format!("qd-product n={n} t={t}"),
        &(q(0, n)?.w * q(0, n + 1)?.v - q(1, n)?.v * q(0, n + 1)?.w),
    );
    Ok(out)
}

/// Recurrence coefficients `(a^t_n, b^t_n)` rebuilt from qd variables.
///
/// With `B_n = V^{t+1}_{n-1} - W^t_{n-1}` (and `B_0 = 0`):
/// `a_n = B_n V^t_{n-1}` and `b_n = V^t_n + B_n`.
pub fn op_rec_from_qd(spec: &MomentSpec, n: usize, t: usize) -> Result<(Rational, Rational)> {
    require_single(spec)?;
    let tabs = ladder(spec, t, 3, 2 * n + 3)?;
    let here = qd_from(&tabs, 0, n, t)?;
    if n == 0 {
        return Ok((Rational::zero(), here.v));
    }
    let prev = qd_from(&tabs, 0, n - 1, t)?;
    let prev_next = qd_from(&tabs, 1, n - 1, t + 1)?;
    let geronimus = &prev_next.v - &prev.w;
    let a = &geronimus * &prev.v;
    Ok((a, here.v + geronimus))
}

/// `P^t_{n+1} - x P^{t+1}_n + V^t_n P^t_n` and `P^t_{n+1} - x P^{t+2}_n + W^t_n P^{t+1}_n`.
pub fn pt_residuals(spec: &MomentSpec, n: usize, t: usize) -> Result<[Poly; 2]> {
    require_single(spec)?;
    let tabs = ladder(spec, t, 2, 2 * n + 3)?;
    let qd = qd_from(&tabs, 0, n, t)?;
    let p = |s: usize, k: usize| mop_type2(&tabs[s], &MultiIndex::new(vec![k]));
    let up = p(0, n + 1)?;
    let first = &up - &p(1, n)?.shift(1) + p(0, n)?.scale(&qd.v);
    let second = &up - &p(2, n)?.shift(1) + p(1, n)?.scale(&qd.w);
    Ok([first, second])
}

fn lin(c: &Rational) -> Poly {
    Poly::from_coeffs(vec![-c.clone(), Rational::from_integer(1.into())])
}

/// `L_{n,t} = [[x - b_n, -a_n], [1, 0]]` with coefficients from qd variables.
fn lax_l(spec: &MomentSpec, n: usize, t: usize) -> Result<PolyMatrix> {
    let (a, b) = op_rec_from_qd(spec, n, t)?;
    PolyMatrix::from_rows(vec![
        vec![lin(&b), Poly::constant(-a)],
        vec![Poly::one(), Poly::zero()],
    ])
}

/// `x M_{n,t} = [[x - b_n + V_n, -a_n], [1, V_{n-1}]]`.
fn lax_xm(spec: &MomentSpec, n: usize, t: usize) -> Result<PolyMatrix> {
    let (a, b) = op_rec_from_qd(spec, n, t)?;
    let v = qd_r1(spec, n, t)?.v;
    let v_prev = qd_r1(spec, n - 1, t)?.v;
    PolyMatrix::from_rows(vec![
        vec![lin(&(b - v)), Poly::constant(-a)],
        vec![Poly::one(), Poly::constant(v_prev)],
    ])
}

/// Lax residuals for `n >= 1`: the compatibility
/// `x (L_{n,t+1} M_{n,t} - M_{n+1,t} L_{n,t})` and the two transports
/// `Psi_{n+1} - L_n Psi_n`, `x Psi^{t+1}_n - (x M_n) Psi^t_n` with `Psi_n = (P_n, P_{n-1})`.
pub fn dtoda_lax_residual(spec: &MomentSpec, n: usize, t: usize) -> Result<ResidualSet> {
    require_single(spec)?;
    if n == 0 {
        return Err(Error::invalid("the 2x2 Lax pair starts at n = 1"));
    }
    let mut out = ResidualSet::new();
    let comm = lax_l(spec, n, t + 1)?
        .mul(&lax_xm(spec, n, t)?)?
        .sub(&lax_xm(spec, n + 1, t)?.mul(&lax_l(spec, n, t)?)?)?;
    out.record_polys(|| format!("lax n={n} t={t}"), comm.entries());

    let tabs = ladder(spec, t, 1, 2 * n + 3)?;
    let p = |s: usize, k: usize| mop_type2(&tabs[s], &MultiIndex::new(vec![k]));
    let psi = vec![p(0, n)?, p(0, n - 1)?];
    let moved = lax_l(spec, n, t)?.apply(&psi)?;
    out.record_poly(|| format!("psi-space n={n}"), &(&p(0, n + 1)? - &moved[0]));
    out.record_poly(|| format!("psi-space n={n}"), &(&p(0, n)? - &moved[1]));
    let timed = lax_xm(spec, n, t)?.apply(&psi)?;
    out.record_poly(|| format!("psi-time n={n}"), &(&p(1, n)?.shift(1) - &timed[0]));
    out.record_poly(|| format!("psi-time n={n}"), &(&p(1, n - 1)?.shift(1) - &timed[1]));
    Ok(out)
}
