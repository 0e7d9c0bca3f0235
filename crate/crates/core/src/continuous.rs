//! Continuous-time multidimensional Toda flow on a finite window of sites.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::Neg;

use num_traits::{Num, Zero};

use crate::error::{Error, Result};
use crate::exact::{from_usize, to_f64, Poly, Rational};
use crate::index::{LatticeBox, MultiIndex};
use crate::moments::MomentTable;
use crate::mop::{self, nn_coeffs, NNCoefficients};

pub use crate::mop::{tau_ddot, tau_dot};

/// Field scalars: exact rationals or binary floats.
pub trait Scalar: Num + Neg<Output = Self> + Clone + Debug {
    fn from_rational(x: &Rational) -> Self;

    fn from_count(n: usize) -> Self {
        Self::from_rational(&from_usize(n))
    }
}

impl Scalar for f64 {
    fn from_rational(x: &Rational) -> Self {
        to_f64(x)
    }
}

impl Scalar for Rational {
    fn from_rational(x: &Rational) -> Self {
        x.clone()
    }
}

/// Coefficients `{a_{n,k}, b_{n,k}}` on the box `0 <= n_k < N_k` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeWindow<S> {
    pub lattice: LatticeBox,
    pub field: BTreeMap<MultiIndex, NNCoefficients<S>>,
    pub t: S,
}

impl<S: Scalar> LatticeWindow<S> {
    pub fn r(&self) -> usize {
        self.lattice.r()
    }

    pub fn get(&self, n: &MultiIndex) -> Option<&NNCoefficients<S>> {
        self.field.get(n)
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> LatticeWindow<T> {
        LatticeWindow {
            lattice: self.lattice.clone(),
            field: self.field.iter().map(|(k, v)| (k.clone(), v.map(&f))).collect(),
            t: f(&self.t),
        }
    }

    fn check(&self) -> Result<()> {
        for n in self.lattice.sites() {
            let c = self.field.get(&n).ok_or_else(|| Error::Halo(n.clone()))?;
            if c.a.len() != self.r() || c.b.len() != self.r() {
                return Err(Error::Dimension(format!("site {n} has the wrong number of channels")));
            }
        }
        Ok(())
    }
}

impl LatticeWindow<Rational> {
    /// Exact coefficients from moments at every site of `lattice`.
    pub fn from_table(table: &MomentTable, lattice: LatticeBox) -> Result<Self> {
        let field = lattice
            .sites()
            .into_iter()
            .map(|n| nn_coeffs(table, &n).map(|c| (n, c)))
            .collect::<Result<_>>()?;
        Ok(LatticeWindow {
            lattice,
            field,
            t: table.t_label().clone(),
        })
    }
}

/// Values at sites just outside the window.
pub trait HaloSource<S> {
    fn halo(&self, n: &MultiIndex, t: &S) -> Result<NNCoefficients<S>>;
}

/// Where halo values come from.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryProvider {
    /// Fixed values, typically the initial data one shell beyond the window.
    Frozen(BTreeMap<MultiIndex, NNCoefficients<Rational>>),
    /// The exact Laguerre solution at the requested time.
    LaguerreClosedForm { delta: u32, kappa: Vec<Rational> },
}

impl BoundaryProvider {
    /// Sites of `lattice.grow(1)` not in `lattice`.
    pub fn halo_sites(lattice: &LatticeBox) -> Vec<MultiIndex> {
        lattice
            .grow(1)
            .sites()
            .into_iter()
            .filter(|n| !lattice.contains(n))
            .collect()
    }

    /// Frozen halo taken from the moments at the table's time.
    pub fn frozen_from_table(table: &MomentTable, lattice: &LatticeBox) -> Result<Self> {
        let map = Self::halo_sites(lattice)
            .into_iter()
            .map(|n| nn_coeffs(table, &n).map(|c| (n, c)))
            .collect::<Result<_>>()?;
        Ok(BoundaryProvider::Frozen(map))
    }
}

impl<S: Scalar> HaloSource<S> for BoundaryProvider {
    fn halo(&self, n: &MultiIndex, t: &S) -> Result<NNCoefficients<S>> {
        match self {
            BoundaryProvider::Frozen(map) => map
                .get(n)
                .map(|c| c.map(S::from_rational))
                .ok_or_else(|| Error::Halo(n.clone())),
            BoundaryProvider::LaguerreClosedForm { delta, kappa } => {
                let kappa: Vec<S> = kappa.iter().map(S::from_rational).collect();
                laguerre_closed_form_multi(n, *delta, &kappa, t)
            }
        }
    }
}

/// `d/dt` of every coefficient:
/// `a'_{n,k} = a_{n,k}(b_{n-e_k,k} - b_{n,k})`,
/// `b'_{n,k} = sum_j (a_{n,j} - a_{n+e_k,j})`.
pub fn mtoda_rhs<S: Scalar>(
    w: &LatticeWindow<S>,
    halo: &impl HaloSource<S>,
) -> Result<BTreeMap<MultiIndex, NNCoefficients<S>>> {
    w.check()?;
    let r = w.r();
    let mut halo_cache: BTreeMap<MultiIndex, NNCoefficients<S>> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for (n, c) in &w.field {
        let sum_a = c.a.iter().fold(S::zero(), |s, v| s + v.clone());
        let mut da = Vec::with_capacity(r);
        let mut db = Vec::with_capacity(r);
        for k in 0..r {
            da.push(match n.minus(k) {
                Some(down) => {
                    let cd = w.field.get(&down).ok_or_else(|| Error::Halo(down.clone()))?;
                    c.a[k].clone() * (cd.b[k].clone() - c.b[k].clone())
                }
                None => S::zero(),
            });
            let up = n.plus(k);
            let a_up = match w.field.get(&up) {
                Some(cu) => &cu.a,
                None => {
                    if !halo_cache.contains_key(&up) {
                        let v = halo.halo(&up, &w.t)?;
                        halo_cache.insert(up.clone(), v);
                    }
                    &halo_cache[&up].a
                }
            };
            let sum_up = a_up.iter().fold(S::zero(), |s, v| s + v.clone());
            db.push(sum_a.clone() - sum_up);
        }
        out.insert(n.clone(), NNCoefficients { a: da, b: db });
    }
    Ok(out)
}

fn axpy(w: &LatticeWindow<f64>, h: f64, k: &BTreeMap<MultiIndex, NNCoefficients<f64>>, t: f64) -> LatticeWindow<f64> {
    let field = w
        .field
        .iter()
        .map(|(n, c)| {
            let d = &k[n];
            let a = c.a.iter().zip(&d.a).map(|(x, y)| x + h * y).collect();
            let b = c.b.iter().zip(&d.b).map(|(x, y)| x + h * y).collect();
            (n.clone(), NNCoefficients { a, b })
        })
        .collect();
    LatticeWindow {
        lattice: w.lattice.clone(),
        field,
        t,
    }
}

/// Classical fixed-step RK4 from `w.t` to `t1`. Halo values are requested
/// at each stage time.
pub fn rk4_integrate(
    w: &LatticeWindow<f64>,
    halo: &impl HaloSource<f64>,
    t1: f64,
    steps: usize,
) -> Result<LatticeWindow<f64>> {
    rk4_trajectory(w, halo, t1, steps, steps).map(|mut v| v.pop().expect("at least one sample"))
}

/// As [`rk4_integrate`], also returning snapshots. `samples` snapshots are
/// taken at evenly spaced step counts, the last one at `t1`; the initial
/// window is prepended.
pub fn rk4_trajectory(
    w: &LatticeWindow<f64>,
    halo: &impl HaloSource<f64>,
    t1: f64,
    steps: usize,
    samples: usize,
) -> Result<Vec<LatticeWindow<f64>>> {
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let samples = samples.clamp(1, steps);
    let t0 = w.t;
    let h = (t1 - t0) / steps as f64;
    let mut cur = w.clone();
    let mut out = vec![cur.clone()];
    let mut next_sample = 1;
    for s in 0..steps {
        let t = t0 + h * s as f64;
        let k1 = mtoda_rhs(&cur, halo)?;
        let k2 = mtoda_rhs(&axpy(&cur, h / 2.0, &k1, t + h / 2.0), halo)?;
        let k3 = mtoda_rhs(&axpy(&cur, h / 2.0, &k2, t + h / 2.0), halo)?;
        let k4 = mtoda_rhs(&axpy(&cur, h, &k3, t + h), halo)?;
        let t_next = t0 + h * (s + 1) as f64;
        for (n, c) in cur.field.iter_mut() {
            let (d1, d2, d3, d4) = (&k1[n], &k2[n], &k3[n], &k4[n]);
            for k in 0..c.a.len() {
                c.a[k] += h / 6.0 * (d1.a[k] + 2.0 * d2.a[k] + 2.0 * d3.a[k] + d4.a[k]);
                c.b[k] += h / 6.0 * (d1.b[k] + 2.0 * d2.b[k] + 2.0 * d3.b[k] + d4.b[k]);
            }
        }
        cur.t = t_next;
        if (s + 1) * samples >= next_sample * steps {
            out.push(cur.clone());
            next_sample += 1;
        }
    }
    Ok(out)
}

/// Closed-form coefficients of the multiple Laguerre polynomials of the
/// second kind, weights `x^delta exp(-x(t + kappa_j))`:
/// `b_{n,j} = (|n|+delta+1)/(kappa_j+t) + sum_i n_i/(kappa_i+t)`,
/// `a_{n,j} = n_j(|n|+delta)/(kappa_j+t)^2`.
pub fn laguerre_closed_form_multi<S: Scalar>(n: &MultiIndex, delta: u32, kappa: &[S], t: &S) -> Result<NNCoefficients<S>> {
    if n.r() != kappa.len() {
        return Err(Error::Dimension(format!("{n} against {} measures", kappa.len())));
    }
    let s: Vec<S> = kappa.iter().map(|k| k.clone() + t.clone()).collect();
    if let Some(j) = s.iter().position(Zero::is_zero) {
        return Err(Error::Pole { measure: j + 1 });
    }
    let total = n.total() + delta as usize;
    let tail = (0..n.r()).fold(S::zero(), |acc, i| acc + S::from_count(n.get(i)) / s[i].clone());
    let b = (0..n.r())
        .map(|j| S::from_count(total + 1) / s[j].clone() + tail.clone())
        .collect();
    let a = (0..n.r())
        .map(|j| S::from_count(n.get(j) * total) / (s[j].clone() * s[j].clone()))
        .collect();
    Ok(NNCoefficients { a, b })
}

/// Time derivative of [`laguerre_closed_form_multi`].
pub fn laguerre_closed_form_multi_dt<S: Scalar>(n: &MultiIndex, delta: u32, kappa: &[S], t: &S) -> Result<NNCoefficients<S>> {
    if n.r() != kappa.len() {
        return Err(Error::Dimension(format!("{n} against {} measures", kappa.len())));
    }
    let s: Vec<S> = kappa.iter().map(|k| k.clone() + t.clone()).collect();
    if let Some(j) = s.iter().position(Zero::is_zero) {
        return Err(Error::Pole { measure: j + 1 });
    }
    let total = n.total() + delta as usize;
    let sq = |x: &S| x.clone() * x.clone();
    let tail = (0..n.r()).fold(S::zero(), |acc, i| acc + S::from_count(n.get(i)) / sq(&s[i]));
    let b = (0..n.r())
        .map(|j| -(S::from_count(total + 1) / sq(&s[j]) + tail.clone()))
        .collect();
    let a = (0..n.r())
        .map(|j| -(S::from_count(2 * n.get(j) * total) / (sq(&s[j]) * s[j].clone())))
        .collect();
    Ok(NNCoefficients { a, b })
}

/// The two-measure closed form at `(m, n)`.
pub fn laguerre_nn_closed_form(
    m: usize,
    n: usize,
    delta: u32,
    k1: &Rational,
    k2: &Rational,
    t: &Rational,
) -> Result<NNCoefficients<Rational>> {
    laguerre_closed_form_multi(&MultiIndex::new(vec![m, n]), delta, &[k1.clone(), k2.clone()], t)
}

/// `dP_n/dt - sum_k a_{n,k} P_{n-e_k}`, with `dP_n/dt` from differentiated determinants.
pub fn verify_dp_dt(table: &MomentTable, n: &MultiIndex) -> Result<Poly> {
    let dp = mop::mop_type2_dt(table, n)?;
    let nn = nn_coeffs(table, n)?;
    let mut res = dp;
    for k in 0..n.r() {
        if let Some(down) = n.minus(k) {
            res = res - mop::mop_type2(table, &down)?.scale(&nn.a[k]);
        }
    }
    Ok(res)
}

/// `tau tau'' - tau'^2 - sum_k tau_{n+e_k} tau_{n-e_k}`.
pub fn bilinear_residual(table: &MomentTable, n: &MultiIndex) -> Result<Rational> {
    let t = mop::tau(table, n)?;
    let td = tau_dot(table, n)?;
    let tdd = tau_ddot(table, n)?;
    let mut res = &t * &tdd - &td * &td;
    for k in 0..n.r() {
        res -= mop::tau(table, &n.plus(k))? * mop::tau_or_zero(table, n.minus(k).as_ref())?;
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use crate::moments::laguerre_moments;

    fn idx(v: &[usize]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    fn kappa() -> Vec<Rational> {
        vec![int(1), int(2)]
    }

    #[test]
    fn rhs_examples() {
        let table = laguerre_moments(0, &kappa(), &int(0), 20).unwrap();
        let w = LatticeWindow::from_table(&table, LatticeBox::cube(2, 3)).unwrap();
        let halo = BoundaryProvider::LaguerreClosedForm { delta: 0, kappa: kappa() };
        let d = mtoda_rhs(&w, &halo).unwrap();
        assert_eq!(d[&idx(&[1, 1])].b[0], rat(-17, 4));
        assert_eq!(d[&idx(&[1, 1])].a[0], int(-4));
    }

    #[test]
    fn zero_a_is_fixed_point() {
        let lattice = LatticeBox::cube(2, 2);
        let zero = |_: &MultiIndex| NNCoefficients { a: vec![0.0, 0.0], b: vec![1.5, -2.0] };
        let field: BTreeMap<_, _> = lattice.sites().iter().map(|n| (n.clone(), zero(n))).collect();
        let w = LatticeWindow { lattice: lattice.clone(), field, t: 0.0 };
        let halo = BoundaryProvider::Frozen(
            BoundaryProvider::halo_sites(&lattice)
                .into_iter()
                .map(|n| (n, NNCoefficients { a: vec![int(0), int(0)], b: vec![int(0), int(0)] }))
                .collect(),
        );
        let d = mtoda_rhs(&w, &halo).unwrap();
        assert!(d.values().all(|c| c.a.iter().chain(&c.b).all(|v| *v == 0.0)));
        let out = rk4_integrate(&w, &halo, 1.0, 10).unwrap();
        assert_eq!(out.field, w.field);
    }

    #[test]
    fn missing_halo_is_reported() {
        let lattice = LatticeBox::cube(1, 2);
        let table = laguerre_moments(0, &[int(1)], &int(0), 10).unwrap();
        let w = LatticeWindow::from_table(&table, lattice).unwrap();
        let halo = BoundaryProvider::Frozen(BTreeMap::new());
        assert_eq!(mtoda_rhs(&w, &halo), Err(Error::Halo(idx(&[2]))));
    }

    #[test]
    fn closed_form_examples() {
        let c = laguerre_nn_closed_form(1, 1, 0, &int(1), &int(2), &int(0)).unwrap();
        assert_eq!(c.b[0], rat(9, 2));
        assert_eq!(c.a[1], rat(1, 2));
        assert_eq!(
            laguerre_nn_closed_form(1, 1, 0, &int(1), &int(2), &int(-2)),
            Err(Error::Pole { measure: 2 })
        );
    }

    #[test]
    fn closed_form_matches_determinants() {
        for (delta, kappa, t) in [
            (0, kappa(), int(0)),
            (2, vec![rat(1, 2), int(3)], rat(1, 3)),
            (1, vec![int(1), int(2), int(5)], int(0)),
        ] {
            let r = kappa.len();
            let table = laguerre_moments(delta, &kappa, &t, 20).unwrap();
            let side = if r == 3 { 3 } else { 4 };
            for n in LatticeBox::cube(r, side).sites() {
                let c = laguerre_closed_form_multi(&n, delta, &kappa, &t).unwrap();
                assert_eq!(nn_coeffs(&table, &n).unwrap(), c, "{n}");
            }
        }
    }

    #[test]
    fn chain_rule_exact() {
        let t = rat(1, 2);
        let table = laguerre_moments(0, &kappa(), &t, 20).unwrap();
        let w = LatticeWindow::from_table(&table, LatticeBox::cube(2, 4)).unwrap();
        let halo = BoundaryProvider::LaguerreClosedForm { delta: 0, kappa: kappa() };
        for (n, d) in mtoda_rhs(&w, &halo).unwrap() {
            assert_eq!(d, laguerre_closed_form_multi_dt(&n, 0, &kappa(), &t).unwrap(), "{n}");
        }
    }

    fn tau_at(n: &MultiIndex, t: &Rational) -> Rational {
        mop::tau(&laguerre_moments(0, &kappa(), t, 20).unwrap(), n).unwrap()
    }

    /// Central differences converge to the column-shift derivatives at rate h^2.
    #[test]
    fn tau_derivatives_match_finite_differences() {
        let t0 = rat(1, 3);
        let table = laguerre_moments(0, &kappa(), &t0, 20).unwrap();
        for n in [idx(&[1, 0]), idx(&[1, 1]), idx(&[2, 1])] {
            let d1 = tau_dot(&table, &n).unwrap();
            let d2 = tau_ddot(&table, &n).unwrap();
            let mut errs = Vec::new();
            for h in [rat(1, 100), rat(1, 200)] {
                let (tp, tm, tc) = (tau_at(&n, &(&t0 + &h)), tau_at(&n, &(&t0 - &h)), tau_at(&n, &t0));
                let fd1 = (&tp - &tm) / (int(2) * &h);
                let fd2 = (&tp - int(2) * &tc + &tm) / (&h * &h);
                errs.push((to_f64(&(fd1 - &d1)).abs(), to_f64(&(fd2 - &d2)).abs()));
            }
            let (r1, r2) = (errs[0].0 / errs[1].0, errs[0].1 / errs[1].1);
            assert!((3.5..4.5).contains(&r1), "{n}: first derivative ratio {r1}");
            assert!((3.5..4.5).contains(&r2), "{n}: second derivative ratio {r2}");
        }
    }

    #[test]
    fn dp_dt_and_bilinear() {
        let table = laguerre_moments(0, &kappa(), &int(0), 20).unwrap();
        assert!(verify_dp_dt(&table, &idx(&[0, 0])).unwrap().is_zero());
        assert!(verify_dp_dt(&table, &idx(&[1, 1])).unwrap().is_zero());
        for n in [idx(&[0, 0]), idx(&[1, 1]), idx(&[2, 1])] {
            assert_eq!(bilinear_residual(&table, &n).unwrap(), int(0), "{n}");
        }
    }

    #[test]
    fn rk4_tracks_closed_form() {
        let kappa = kappa();
        let table = laguerre_moments(0, &kappa, &int(0), 20).unwrap();
        let w = LatticeWindow::from_table(&table, LatticeBox::cube(2, 3)).unwrap().map(to_f64);
        let halo = BoundaryProvider::LaguerreClosedForm { delta: 0, kappa: kappa.clone() };
        let out = rk4_integrate(&w, &halo, 1.0, 200).unwrap();
        assert!((out.t - 1.0).abs() < 1e-12);
        let kf: Vec<f64> = kappa.iter().map(to_f64).collect();
        for (n, c) in &out.field {
            let e = laguerre_closed_form_multi(n, 0, &kf, &1.0).unwrap();
            for (x, y) in c.a.iter().chain(&c.b).zip(e.a.iter().chain(&e.b)) {
                assert!((x - y).abs() < 1e-7, "{n}");
            }
        }
    }
}
