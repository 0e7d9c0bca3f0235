//! Step-line reduction for two measures.
//!
//! Along the diagonal `q_{2n} = P_{(n,n)}`, `q_{2n+1} = P_{(n+1,n)}` the
//! nearest-neighbour recurrences collapse to the four-term recurrence
//! `x q_N = q_{N+1} + alpha0_N q_N + alpha1_N q_{N-1} + alpha2_N q_{N-2}`.
//!
//! Time convention: the moments evolve as `exp(-x t)`. The Kostant–Toda
//! equations in [`ktoda_rhs`] and the Lax form are written in `s = -t`, so
//! `d/dt = -d/ds` when comparing with the m-Toda flow.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde_json::{Map, Value};

use crate::discrete::ABField;
use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, MatrixQ, Poly, Rational};
use crate::index::MultiIndex;
use crate::moments::MomentTable;
use crate::mop::{mop_type2, mop_type2_dt, nn_coeffs, NNCoefficients};
use crate::residual::ResidualSet;

/// Multi-index of `q_N`.
pub fn stepline_index(big_n: usize) -> MultiIndex {
    MultiIndex::new(vec![big_n.div_ceil(2), big_n / 2])
}

fn require_two(r: usize) -> Result<()> {
    if r != 2 {
        return Err(Error::Dimension(format!("step-line reduction needs r = 2, got r = {r}")));
    }
    Ok(())
}

/// The coefficient sequences of the four-term recurrence, `N = 0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct SteplineCoeffs {
    pub alpha0: Vec<Rational>,
    pub alpha1: Vec<Rational>,
    pub alpha2: Vec<Rational>,
}

impl SteplineCoeffs {
    pub fn len(&self) -> usize {
        self.alpha0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha0.is_empty()
    }

    fn zeros(len: usize) -> Self {
        SteplineCoeffs {
            alpha0: vec![Rational::zero(); len],
            alpha1: vec![Rational::zero(); len],
            alpha2: vec![Rational::zero(); len],
        }
    }

    fn check(&self) -> Result<()> {
        if self.alpha1.len() != self.len() || self.alpha2.len() != self.len() {
            return Err(Error::Dimension("alpha sequences differ in length".into()));
        }
        Ok(())
    }
}

/// Entry `k` of `v`, or zero below the start of the sequence.
fn at(v: &[Rational], k: isize) -> Rational {
    if k < 0 {
        Rational::zero()
    } else {
        v[k as usize].clone()
    }
}

/// `q_0, ..., q_{len-1}`.
pub fn diagonal_embed(table: &MomentTable, len: usize) -> Result<Vec<Poly>> {
    require_two(table.r())?;
    (0..len).map(|n| mop_type2(table, &stepline_index(n))).collect()
}

fn site(nn: &BTreeMap<MultiIndex, NNCoefficients>, parts: [isize; 2]) -> Result<Option<&NNCoefficients>> {
    if parts.iter().any(|&p| p < 0) {
        return Ok(None);
    }
    let idx = MultiIndex::new(vec![parts[0] as usize, parts[1] as usize]);
    nn.get(&idx).map(Some).ok_or(Error::Halo(idx))
}

/// Sites whose coefficients [`miura_map`] reads for `N < len`.
pub fn miura_sites(len: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for big_n in 0..len {
        let n = big_n / 2;
        let candidates: Vec<[isize; 2]> = if big_n % 2 == 0 {
            vec![[n as isize, n as isize], [n as isize - 1, n as isize - 1]]
        } else {
            vec![[n as isize + 1, n as isize], [n as isize, n as isize - 1]]
        };
        for c in candidates {
            if c.iter().all(|&p| p >= 0) {
                let m = MultiIndex::new(vec![c[0] as usize, c[1] as usize]);
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
    }
    out.sort();
    out
}

fn miura_core<S>(
    nn: &BTreeMap<MultiIndex, NNCoefficients>,
    len: usize,
    mut combine: impl FnMut(usize, &NNCoefficients, Option<&NNCoefficients>) -> S,
) -> Result<Vec<S>> {
    (0..len)
        .map(|big_n| {
            let n = (big_n / 2) as isize;
            let (here, below) = if big_n % 2 == 0 {
                (site(nn, [n, n])?, site(nn, [n - 1, n - 1])?)
            } else {
                (site(nn, [n + 1, n])?, site(nn, [n, n - 1])?)
            };
            Ok(combine(big_n, here.expect("nonnegative"), below))
        })
        .collect()
}

/// The Miura map from diagonal m-Toda data to step-line coefficients:
/// `alpha0_{2n} = b_{n,n,1}`, `alpha0_{2n+1} = b_{n+1,n,2}`, `alpha1` the sum of the `a`'s,
/// `alpha2_{2n} = a_{n,n,1}(b_{n-1,n-1,1} - b_{n-1,n-1,2})`,
/// `alpha2_{2n+1} = a_{n+1,n,2}(b_{n,n-1,2} - b_{n,n-1,1})`.
pub fn miura_map(nn: &BTreeMap<MultiIndex, NNCoefficients>, len: usize) -> Result<SteplineCoeffs> {
    let rows = miura_core(nn, len, |big_n, here, below| {
        let even = big_n % 2 == 0;
        let a0 = if even { here.b[0].clone() } else { here.b[1].clone() };
        let a1 = &here.a[0] + &here.a[1];
        let a2 = match below {
            None => Rational::zero(),
            Some(c) if even => &here.a[0] * (&c.b[0] - &c.b[1]),
            Some(c) => &here.a[1] * (&c.b[1] - &c.b[0]),
        };
        (a0, a1, a2)
    })?;
    let mut out = SteplineCoeffs::zeros(0);
    for (a0, a1, a2) in rows {
        out.alpha0.push(a0);
        out.alpha1.push(a1);
        out.alpha2.push(a2);
    }
    Ok(out)
}

/// Time derivative of [`miura_map`] given `d/dt` of the diagonal data.
pub fn miura_map_dt(
    nn: &BTreeMap<MultiIndex, NNCoefficients>,
    nn_dt: &BTreeMap<MultiIndex, NNCoefficients>,
    len: usize,
) -> Result<SteplineCoeffs> {
    let values = miura_core(nn, len, |big_n, here, below| (big_n, here.clone(), below.cloned()))?;
    let rates = miura_core(nn_dt, len, |_, here, below| (here.clone(), below.cloned()))?;
    let mut out = SteplineCoeffs::zeros(0);
    for ((big_n, here, below), (d_here, d_below)) in values.into_iter().zip(rates) {
        let even = big_n % 2 == 0;
        out.alpha0.push(if even { d_here.b[0].clone() } else { d_here.b[1].clone() });
        out.alpha1.push(&d_here.a[0] + &d_here.a[1]);
        out.alpha2.push(match (below, d_below) {
            (Some(c), Some(dc)) => {
                let k = if even { 0 } else { 1 };
                let diff = &c.b[k] - &c.b[1 - k];
                let d_diff = &dc.b[k] - &dc.b[1 - k];
                &d_here.a[k] * diff + &here.a[k] * d_diff
            }
            _ => Rational::zero(),
        });
    }
    Ok(out)
}

/// [`miura_map`] with the diagonal data computed from `table`.
pub fn miura_from_table(table: &MomentTable, len: usize) -> Result<SteplineCoeffs> {
    require_two(table.r())?;
    let mut nn = BTreeMap::new();
    for m in miura_sites(len) {
        let c = nn_coeffs(table, &m)?;
        nn.insert(m, c);
    }
    miura_map(&nn, len)
}

/// Printed closed forms of `(alpha0_N, alpha1_N, alpha2_N)` for the Laguerre
/// weights `x^delta exp(-x(kappa_j + t))`.
pub fn laguerre_alpha(
    big_n: usize,
    delta: u32,
    k1: &Rational,
    k2: &Rational,
    t: &Rational,
) -> Result<(Rational, Rational, Rational)> {
    let s1 = k1 + t;
    let s2 = k2 + t;
    if s1.is_zero() {
        return Err(Error::Pole { measure: 1 });
    }
    if s2.is_zero() {
        return Err(Error::Pole { measure: 2 });
    }
    let q = |k: usize| Rational::from_integer(k.into());
    let d = delta as usize;
    let n = big_n / 2;
    let sq = |x: &Rational| x * x;
    if big_n.is_multiple_of(2) {
        let a0 = q(3 * n + d + 1) / &s1 + q(n) / &s2;
        let a1 = q(n * (2 * n + d)) / sq(&s1) + q(n * (2 * n + d)) / sq(&s2);
        // n (2n+delta)(2n+delta-1) vanishes at n = 0 before the subtraction can underflow.
        let cubic = if n == 0 { q(0) } else { q(n * (2 * n + d) * (2 * n + d - 1)) };
        let a2 = (k2 - k1) * cubic / (sq(&s1) * &s1 * &s2);
        Ok((a0, a1, a2))
    } else {
        let a0 = q(3 * n + d + 2) / &s2 + q(n + 1) / &s1;
        let a1 = q((n + 1) * (2 * n + d + 1)) / sq(&s1) + q(n * (2 * n + d + 1)) / sq(&s2);
        let a2 = (k1 - k2) * q(n * (2 * n + d) * (2 * n + d + 1)) / (&s1 * sq(&s2) * &s2);
        Ok((a0, a1, a2))
    }
}

/// Residuals of the four-term recurrence for every `N` with `q_{N+1}` available.
pub fn verify_stepline(q: &[Poly], alpha: &SteplineCoeffs) -> Result<ResidualSet> {
    alpha.check()?;
    let mut out = ResidualSet::new();
    let top = q.len().saturating_sub(1).min(alpha.len());
    for big_n in 0..top {
        let mut res = q[big_n].shift(1) - q[big_n + 1].clone() - q[big_n].scale(&alpha.alpha0[big_n]);
        if big_n >= 1 {
            res = res - q[big_n - 1].scale(&alpha.alpha1[big_n]);
        }
        if big_n >= 2 {
            res = res - q[big_n - 2].scale(&alpha.alpha2[big_n]);
        }
        out.record_poly(|| format!("four-term N={big_n}"), &res);
    }
    Ok(out)
}

/// Residuals of `dq_N/ds = -alpha1_N q_{N-1} - alpha2_N q_{N-2}` (with `s = -t`),
/// the derivative taken from differentiated determinants.
pub fn verify_spec2op(table: &MomentTable, alpha: &SteplineCoeffs) -> Result<ResidualSet> {
    require_two(table.r())?;
    alpha.check()?;
    let q = diagonal_embed(table, alpha.len())?;
    let mut out = ResidualSet::new();
    for big_n in 0..alpha.len() {
        let dq_ds = -mop_type2_dt(table, &stepline_index(big_n))?;
        let mut res = dq_ds;
        if big_n >= 1 {
            res = res + q[big_n - 1].scale(&alpha.alpha1[big_n]);
        }
        if big_n >= 2 {
            res = res + q[big_n - 2].scale(&alpha.alpha2[big_n]);
        }
        out.record_poly(|| format!("spec2op N={big_n}"), &res);
    }
    Ok(out)
}

/// Kostant–Toda velocities in `s`, for `N = 0..len-1` (one index of halo on top):
/// `alpha0' = alpha1_{N+1} - alpha1_N`,
/// `alpha1' = alpha1_N (alpha0_N - alpha0_{N-1}) + alpha2_{N+1} - alpha2_N`,
/// `alpha2' = alpha2_N (alpha0_N - alpha0_{N-2})`.
pub fn ktoda_rhs(alpha: &SteplineCoeffs) -> Result<SteplineCoeffs> {
    alpha.check()?;
    if alpha.len() < 2 {
        return Err(Error::invalid("Kostant–Toda velocities need at least two entries"));
    }
    let (a0, a1, a2) = (&alpha.alpha0, &alpha.alpha1, &alpha.alpha2);
    let mut out = SteplineCoeffs::zeros(0);
    for big_n in 0..alpha.len() - 1 {
        let k = big_n as isize;
        out.alpha0.push(&a1[big_n + 1] - &a1[big_n]);
        out.alpha1.push(&a1[big_n] * (&a0[big_n] - at(a0, k - 1)) + &a2[big_n + 1] - &a2[big_n]);
        out.alpha2.push(&a2[big_n] * (&a0[big_n] - at(a0, k - 2)));
    }
    Ok(out)
}

/// Truncated lower Hessenberg Lax matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct BandedLax {
    pub size: usize,
    pub alpha: SteplineCoeffs,
}

impl BandedLax {
    pub fn new(alpha: SteplineCoeffs, size: usize) -> Result<Self> {
        alpha.check()?;
        if size > alpha.len() {
            return Err(Error::Dimension(format!("Lax size {size} from {} coefficients", alpha.len())));
        }
        let trim = |v: &[Rational]| v[..size].to_vec();
        Ok(BandedLax {
            size,
            alpha: SteplineCoeffs {
                alpha0: trim(&alpha.alpha0),
                alpha1: trim(&alpha.alpha1),
                alpha2: trim(&alpha.alpha2),
            },
        })
    }

    /// Ones on the superdiagonal, `alpha0_N` on the diagonal, `alpha1_N` at
    /// `(N, N-1)` and `alpha2_N` at `(N, N-2)`.
    pub fn matrix(&self) -> MatrixQ {
        let al = &self.alpha;
        MatrixQ::from_fn(self.size, self.size, |i, j| {
            if j == i + 1 {
                Rational::one()
            } else if j == i {
                al.alpha0[i].clone()
            } else if j + 1 == i {
                al.alpha1[i].clone()
            } else if j + 2 == i {
                al.alpha2[i].clone()
            } else {
                Rational::zero()
            }
        })
    }

    pub fn to_value(&self) -> Value {
        let seq = |v: &[Rational]| Value::Array(v.iter().map(|x| Value::String(format_rational(x))).collect());
        let mut obj = Map::new();
        obj.insert("L".into(), Value::from(self.size));
        obj.insert("alpha0".into(), seq(&self.alpha.alpha0));
        obj.insert("alpha1".into(), seq(&self.alpha.alpha1));
        obj.insert("alpha2".into(), seq(&self.alpha.alpha2));
        Value::Object(obj)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let size = v
            .get("L")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("Lax export needs an integer \"L\"".into()))? as usize;
        let seq = |name: &str| -> Result<Vec<Rational>> {
            v.get(name)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("Lax export needs an array {name:?}")))?
                .iter()
                .map(|x| match x {
                    Value::String(s) => parse_rational(s),
                    other => Err(Error::Parse(format!("bad entry {other} in {name}"))),
                })
                .collect()
        };
        let alpha = SteplineCoeffs {
            alpha0: seq("alpha0")?,
            alpha1: seq("alpha1")?,
            alpha2: seq("alpha2")?,
        };
        BandedLax::new(alpha, size)
    }
}

/// Strictly lower part.
fn lower(m: &MatrixQ) -> MatrixQ {
    MatrixQ::from_fn(m.rows(), m.cols(), |i, j| if j < i { m.get(i, j).clone() } else { Rational::zero() })
}

/// `dL/ds - [L, L_-]` on a `size × size` truncation, with `dL/ds` from
/// [`ktoda_rhs`]. Needs `size + 1` coefficients. Only the leading
/// `(size-2) × (size-2)` block is free of truncation effects; see
/// [`interior`].
pub fn lax_commutator_residual(alpha: &SteplineCoeffs, size: usize) -> Result<MatrixQ> {
    if size < 4 {
        return Err(Error::invalid("Lax truncation needs size >= 4"));
    }
    if alpha.len() < size + 1 {
        return Err(Error::Dimension(format!(
            "Lax size {size} needs {} coefficients, got {}",
            size + 1,
            alpha.len()
        )));
    }
    let l = BandedLax::new(alpha.clone(), size)?.matrix();
    let lm = lower(&l);
    let comm = l.mul(&lm)?.sub(&lm.mul(&l)?)?;
    let rate = BandedLax::new(ktoda_rhs(alpha)?, size)?.matrix();
    // The superdiagonal of ones does not move.
    let rate = MatrixQ::from_fn(size, size, |i, j| if j == i + 1 { Rational::zero() } else { rate.get(i, j).clone() });
    rate.sub(&comm)
}

/// The leading block of `m` that excludes the last `cut` rows and columns.
pub fn interior(m: &MatrixQ, cut: usize) -> MatrixQ {
    let k = m.rows().saturating_sub(cut);
    MatrixQ::from_fn(k, k, |i, j| m.get(i, j).clone())
}

/// Discrete step-line variables.
#[derive(Clone, Debug, PartialEq)]
pub struct XYZField {
    pub x: Vec<Rational>,
    pub y: Vec<Rational>,
    pub z: Vec<Rational>,
}

fn field_at(f: &ABField, parts: [usize; 2], which: char) -> Result<&[Rational]> {
    let idx = MultiIndex::new(parts.to_vec());
    let map = if which == 'a' { &f.a } else { &f.b };
    map.get(&idx).map(Vec::as_slice).ok_or(Error::Halo(idx))
}

/// Discrete Miura map, `N = 0..len`:
/// `X_{2n} = A_{n,n,1}`, `X_{2n+1} = A_{n+1,n,2}`, `Y` the row sums of `B`,
/// `Z_{2n} = B_{n,n,1}(A_{n-1,n,1} - A_{n,n-1,2})`,
/// `Z_{2n+1} = B_{n+1,n,2}(A_{n+1,n-1,2} - A_{n,n,1})`, with `Z_0 = Z_1 = 0`.
pub fn discrete_miura(f: &ABField, len: usize) -> Result<XYZField> {
    require_two(f.r())?;
    let mut out = XYZField {
        x: Vec::with_capacity(len),
        y: Vec::with_capacity(len),
        z: Vec::with_capacity(len),
    };
    for big_n in 0..len {
        let n = big_n / 2;
        let here = if big_n % 2 == 0 { [n, n] } else { [n + 1, n] };
        let ch = big_n % 2;
        let a = field_at(f, here, 'a')?;
        let b = field_at(f, here, 'b')?;
        out.x.push(a[ch].clone());
        out.y.push(&b[0] + &b[1]);
        out.z.push(if n == 0 {
            Rational::zero()
        } else if ch == 0 {
            &b[0] * (&field_at(f, [n - 1, n], 'a')?[0] - &field_at(f, [n, n - 1], 'a')?[1])
        } else {
            &b[1] * (&field_at(f, [n + 1, n - 1], 'a')?[1] - &field_at(f, [n, n], 'a')?[0])
        });
    }
    Ok(out)
}

/// Residuals of the discrete Kostant–Toda equations between `now` and `next`
/// for constant `lambda` (which cancels from the first equation).
pub fn dktoda_residual(now: &XYZField, next: &XYZField, lambda: &Rational) -> Result<ResidualSet> {
    let len = now.x.len().min(next.x.len());
    if now.y.len() < len || now.z.len() < len || next.y.len() < len || next.z.len() < len {
        return Err(Error::Dimension("X, Y, Z sequences differ in length".into()));
    }
    let mut out = ResidualSet::new();
    for big_n in 0..len.saturating_sub(1) {
        let k = big_n as isize;
        let first = &now.x[big_n] + &now.y[big_n + 1] + lambda - (&next.x[big_n] + &next.y[big_n] + lambda);
        out.record(|| format!("dktoda-1 N={big_n}"), &first);
        let second = &now.x[big_n] * &now.y[big_n] + &now.z[big_n + 1]
            - (at(&next.x, k - 1) * &next.y[big_n] + &next.z[big_n]);
        out.record(|| format!("dktoda-2 N={big_n}"), &second);
        let third = &now.x[big_n] * &now.z[big_n] - at(&next.x, k - 2) * &next.z[big_n];
        out.record(|| format!("dktoda-3 N={big_n}"), &third);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::continuous::{laguerre_closed_form_multi, laguerre_closed_form_multi_dt};
    use crate::discrete::ab_field_from_tau;
    use crate::exact::{int, rat};
    use crate::index::LatticeBox;
    use crate::moments::{laguerre_moments, MomentSpec};
    use crate::mop::tau;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kappa() -> [Rational; 2] {
        [int(1), int(2)]
    }

    fn lag(t: &Rational, order: usize) -> MomentTable {
        laguerre_moments(0, &kappa(), t, order).unwrap()
    }

    fn closed_nn(len: usize, t: &Rational) -> BTreeMap<MultiIndex, NNCoefficients> {
        miura_sites(len)
            .into_iter()
            .map(|m| {
                let c = laguerre_closed_form_multi(&m, 0, &kappa(), t).unwrap();
                (m, c)
            })
            .collect()
    }

    fn random_two(order: usize, len: usize, seed: u64) -> MomentTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let entries = (0..2)
                .map(|_| (0..=order).map(|_| int(rng.gen_range(-6..=6))).collect())
                .collect();
            let t = MomentTable::new(entries, int(0)).unwrap();
            let ok = LatticeBox::cube(2, len / 2 + 3)
                .sites()
                .iter()
                .all(|n| !tau(&t, n).unwrap().is_zero());
            if ok {
                return t;
            }
        }
    }

    #[test]
    fn embedding_examples() {
        let q = diagonal_embed(&lag(&int(0), 12), 6).unwrap();
        assert_eq!(q[0], Poly::one());
        assert_eq!(q[1], Poly::from_ints(&[-1, 1]));
        for (n, p) in q.iter().enumerate() {
            assert_eq!(p.degree(), n as isize);
            assert!(p.is_monic());
        }
        assert_eq!(stepline_index(5), MultiIndex::new(vec![3, 2]));
    }

    #[test]
    fn miura_examples_and_closed_forms() {
        let alpha = miura_from_table(&lag(&int(0), 16), 8).unwrap();
        assert_eq!(alpha.alpha0[0], int(1));
        assert_eq!(alpha.alpha2[0], int(0));
        for t in [int(0), rat(1, 2), int(1)] {
            let alpha = miura_map(&closed_nn(8, &t), 8).unwrap();
            for big_n in 0..8 {
                let (a0, a1, a2) = laguerre_alpha(big_n, 0, &int(1), &int(2), &t).unwrap();
                assert_eq!(alpha.alpha0[big_n], a0, "alpha0 N={big_n}");
                assert_eq!(alpha.alpha1[big_n], a1, "alpha1 N={big_n}");
                assert_eq!(alpha.alpha2[big_n], a2, "alpha2 N={big_n}");
            }
        }
        assert!(matches!(
            laguerre_alpha(1, 0, &int(1), &int(2), &int(-2)),
            Err(Error::Pole { measure: 2 })
        ));
    }

    #[test]
    fn printed_odd_alpha2_sign_fails_the_recurrence() {
        // alpha2_{2n+1} with the b-difference taken as b_1 - b_2.
        let table = lag(&int(0), 16);
        let alpha = miura_from_table(&table, 6).unwrap();
        let mut flipped = alpha.clone();
        for big_n in (3..6).step_by(2) {
            flipped.alpha2[big_n] = -flipped.alpha2[big_n].clone();
        }
        let q = diagonal_embed(&table, 7).unwrap();
        assert!(verify_stepline(&q, &alpha).unwrap().all_zero());
        assert!(!verify_stepline(&q, &flipped).unwrap().all_zero());
    }

    #[test]
    fn four_term_recurrence_and_derivative() {
        for table in [lag(&int(0), 16), lag(&rat(1, 3), 16), random_two(16, 6, 9)] {
            let alpha = miura_from_table(&table, 6).unwrap();
            let q = diagonal_embed(&table, 7).unwrap();
            let res = verify_stepline(&q, &alpha).unwrap();
            assert_eq!(res.count(), 6);
            assert!(res.all_zero(), "{:?}", res.failures());
            let res = verify_spec2op(&table, &alpha).unwrap();
            assert!(res.all_zero(), "{:?}", res.failures());
        }
    }

    #[test]
    fn ktoda_matches_the_miura_image_of_the_flow() {
        for t in [int(0), rat(1, 2), rat(7, 5)] {
            let nn = closed_nn(9, &t);
            let nn_dt: BTreeMap<_, _> = nn
                .keys()
                .map(|m| (m.clone(), laguerre_closed_form_multi_dt(m, 0, &kappa(), &t).unwrap()))
                .collect();
            let alpha = miura_map(&nn, 9).unwrap();
            let d_dt = miura_map_dt(&nn, &nn_dt, 9).unwrap();
            let d_ds = ktoda_rhs(&alpha).unwrap();
            for big_n in 0..8 {
                assert_eq!(-d_dt.alpha0[big_n].clone(), d_ds.alpha0[big_n], "N={big_n}");
                assert_eq!(-d_dt.alpha1[big_n].clone(), d_ds.alpha1[big_n], "N={big_n}");
                assert_eq!(-d_dt.alpha2[big_n].clone(), d_ds.alpha2[big_n], "N={big_n}");
            }
        }
        let still = SteplineCoeffs {
            alpha0: vec![int(3), int(1), int(4)],
            alpha1: vec![int(0); 3],
            alpha2: vec![int(0); 3],
        };
        let rate = ktoda_rhs(&still).unwrap();
        assert!(rate.alpha0.iter().chain(&rate.alpha1).chain(&rate.alpha2).all(Zero::is_zero));
    }

    #[test]
    fn lax_form_interior() {
        let alpha = miura_from_table(&lag(&int(0), 24), 9).unwrap();
        let res = lax_commutator_residual(&alpha, 8).unwrap();
        assert!(interior(&res, 2).is_zero(), "{res:?}");
        assert!(!res.is_zero(), "truncation rows are expected to be nonzero");

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut r = || rat(rng.gen_range(-9..=9), rng.gen_range(1..=4));
        let mut generic = SteplineCoeffs {
            alpha0: (0..9).map(|_| r()).collect(),
            alpha1: (0..9).map(|_| r()).collect(),
            alpha2: (0..9).map(|_| r()).collect(),
        };
        generic.alpha1[0] = int(0);
        generic.alpha2[0] = int(0);
        generic.alpha2[1] = int(0);
        assert!(interior(&lax_commutator_residual(&generic, 8).unwrap(), 2).is_zero());

        let flat = SteplineCoeffs {
            alpha0: vec![int(2); 6],
            alpha1: vec![int(0); 6],
            alpha2: vec![int(0); 6],
        };
        assert!(lax_commutator_residual(&flat, 5).unwrap().is_zero());
        assert!(lax_commutator_residual(&flat, 3).is_err());
    }

    #[test]
    fn lax_json_round_trip() {
        let alpha = miura_from_table(&lag(&int(0), 16), 6).unwrap();
        let lax = BandedLax::new(alpha, 5).unwrap();
        let v = lax.to_value();
        let text = serde_json::to_string(&v).unwrap();
        assert!(text.starts_with("{\"L\":5,\"alpha0\":[\"1\","));
        assert_eq!(BandedLax::from_value(&v).unwrap(), lax);
        let m = lax.matrix();
        assert_eq!(m.get(0, 1), &int(1));
        assert_eq!(m.get(0, 0), &int(1));
    }

    #[test]
    fn discrete_miura_examples() {
        let spec = MomentSpec::laguerre(0, kappa().to_vec()).unwrap();
        let f = ab_field_from_tau(&spec, &LatticeBox::cube(2, 5), 0, &int(0)).unwrap();
        let xyz = discrete_miura(&f, 7).unwrap();
        assert_eq!(xyz.x[0], int(1));
        assert_eq!(xyz.z[0], int(0));
        assert_eq!(xyz.z[1], int(0));
        assert_eq!(xyz.y[0], int(0));
        assert_eq!(xyz.y[1], int(1));
        assert!(matches!(discrete_miura(&f, 12), Err(Error::Halo(_))));
    }

    #[test]
    fn dktoda_on_tau_fields() {
        let lattice = LatticeBox::cube(2, 6);
        for (spec, lambda) in [
            (MomentSpec::laguerre(0, kappa().to_vec()).unwrap(), int(0)),
            (MomentSpec::laguerre(1, vec![int(1), rat(3, 2)]).unwrap(), int(-1)),
        ] {
            for t in 0..2 {
                let now = discrete_miura(&ab_field_from_tau(&spec, &lattice, t, &lambda).unwrap(), 9).unwrap();
                let next = discrete_miura(&ab_field_from_tau(&spec, &lattice, t + 1, &lambda).unwrap(), 9).unwrap();
                let res = dktoda_residual(&now, &next, &lambda).unwrap();
                assert_eq!(res.count(), 24);
                assert!(res.all_zero(), "{:?}", res.failures());
            }
        }
    }

    #[test]
    fn dktoda_degenerate_cases() {
        let x = vec![int(2), int(3), int(5)];
        let zeros = vec![int(0); 3];
        let now = XYZField {
            x: x.clone(),
            y: zeros.clone(),
            z: zeros.clone(),
        };
        let next = XYZField {
            x,
            y: zeros.clone(),
            z: zeros,
        };
        assert!(dktoda_residual(&now, &next, &int(4)).unwrap().all_zero());

        // A single measure gives X = A, Y = B, Z = 0.
        let spec = MomentSpec::laguerre(0, vec![int(1)]).unwrap();
        let single = |t| {
            let f = ab_field_from_tau(&spec, &LatticeBox::new(vec![6]), t, &int(0)).unwrap();
            XYZField {
                x: f.lattice.sites().iter().map(|n| f.a[n][0].clone()).collect(),
                y: f.lattice.sites().iter().map(|n| f.b[n][0].clone()).collect(),
                z: vec![int(0); 6],
            }
        };
        assert!(dktoda_residual(&single(0), &single(1), &int(0)).unwrap().all_zero());
    }
}
