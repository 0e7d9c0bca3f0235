//! 3×3 transition matrices for two measures.
//!
//! The wave function is `Psi_{n,m,t} = (P^t_{n,m}, P^t_{n-1,m}, P^t_{n,m-1})`.
//! `L` steps `n`, `M` steps `m`, and `N` steps the discrete time (measures
//! multiplied by `x`, i.e. `lambda = 0`).
//!
//! Boundary convention: a slot that would hold `P_{-1,m}` or `P_{n,-1}` is
//! zero, and coefficients indexed below zero are taken as zero. Residual rows
//! of such destination slots and residual columns of such source slots are
//! masked.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::discrete::ab_from_tables;
use crate::error::{Error, Result};
use crate::exact::{MatrixQ, Poly, PolyMatrix, Rational};
use crate::index::MultiIndex;
use crate::moments::{MomentSpec, MomentTable};
use crate::mop::{mop_type2, nn_coeffs, tau, NNCoefficients};
use crate::residual::ResidualSet;

/// `(M0 + x M1)`, divided by `x` when `inverse_x` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub m0: MatrixQ,
    pub m1: MatrixQ,
    pub inverse_x: bool,
}

impl TransitionMatrix {
    /// The polynomial matrix `x^k (M0 + x M1) / x^k` with the `1/x` removed.
    pub fn cleared(&self) -> PolyMatrix {
        let rows = (0..3)
            .map(|i| {
                (0..3)
                    .map(|j| Poly::from_coeffs(vec![self.m0.get(i, j).clone(), self.m1.get(i, j).clone()]))
                    .collect()
            })
            .collect();
        PolyMatrix::from_rows(rows).expect("3x3")
    }

    /// Power of `x` divided out by [`TransitionMatrix::cleared`].
    pub fn x_shift(&self) -> usize {
        usize::from(self.inverse_x)
    }

    /// Apply to a wave function, returning `x^{x_shift}` times the image.
    pub fn apply_cleared(&self, psi: &[Poly]) -> Result<Vec<Poly>> {
        self.cleared().apply(psi)
    }
}

fn mat(rows: [[Rational; 3]; 3]) -> MatrixQ {
    MatrixQ::from_rows(rows.into_iter().map(Vec::from).collect()).expect("3x3")
}

fn zero() -> Rational {
    Rational::zero()
}

fn one() -> Rational {
    Rational::one()
}

fn e11() -> MatrixQ {
    mat([[one(), zero(), zero()], [zero(), zero(), zero()], [zero(), zero(), zero()]])
}

/// `L_{n,m}` from the coefficients at `(n,m)` and, when `m >= 1`, at `(n,m-1)`.
pub fn build_l(here: &NNCoefficients, below_m: Option<&NNCoefficients>) -> TransitionMatrix {
    let d = below_m.map(|c| &c.b[1] - &c.b[0]).unwrap_or_else(zero);
    TransitionMatrix {
        m0: mat([
            [-here.b[0].clone(), -here.a[0].clone(), -here.a[1].clone()],
            [one(), zero(), zero()],
            [one(), zero(), d],
        ]),
        m1: e11(),
        inverse_x: false,
    }
}

/// `M_{n,m}` from the coefficients at `(n,m)` and, when `n >= 1`, at `(n-1,m)`.
pub fn build_m(here: &NNCoefficients, below_n: Option<&NNCoefficients>) -> TransitionMatrix {
    let d = below_n.map(|c| &c.b[0] - &c.b[1]).unwrap_or_else(zero);
    TransitionMatrix {
        m0: mat([
            [-here.b[1].clone(), -here.a[0].clone(), -here.a[1].clone()],
            [one(), d, zero()],
            [one(), zero(), zero()],
        ]),
        m1: e11(),
        inverse_x: false,
    }
}

/// `N_{n,m,t}` from the coefficients at `(n,m)`, `A^t_{n,m,2}`, and when defined
/// `A^t_{n-1,m,1}` and `A^t_{n,m-1,2}`.
pub fn build_n(
    here: &NNCoefficients,
    a_here_2: &Rational,
    a_left_1: Option<&Rational>,
    a_below_2: Option<&Rational>,
) -> TransitionMatrix {
    let or_zero = |x: Option<&Rational>| x.cloned().unwrap_or_else(zero);
    TransitionMatrix {
        m0: mat([
            [a_here_2 - &here.b[1], -here.a[0].clone(), -here.a[1].clone()],
            [one(), or_zero(a_left_1), zero()],
            [one(), zero(), or_zero(a_below_2)],
        ]),
        m1: e11(),
        inverse_x: true,
    }
}

/// `det L_{n,m} = a_{n,m,1}(b_{n,m-1,2} - b_{n,m-1,1})`, a constant in `x`.
pub fn det_l_expected(here: &NNCoefficients, below_m: Option<&NNCoefficients>) -> Rational {
    below_m.map(|c| &here.a[0] * (&c.b[1] - &c.b[0])).unwrap_or_else(zero)
}

/// `det M_{n,m} = a_{n,m,2}(b_{n-1,m,1} - b_{n-1,m,2})`, a constant in `x`.
pub fn det_m_expected(here: &NNCoefficients, below_n: Option<&NNCoefficients>) -> Rational {
    below_n.map(|c| &here.a[1] * (&c.b[0] - &c.b[1])).unwrap_or_else(zero)
}

fn idx(n: usize, m: usize) -> MultiIndex {
    MultiIndex::new(vec![n, m])
}

/// Coefficients, Christoffel factors and polynomials for every site
/// `(n,m) <= (max_n, max_m)` and time `t <= max_t`.
pub struct ZeroCurvatureData {
    max: (usize, usize, usize),
    tables: Vec<MomentTable>,
    nn: BTreeMap<(usize, MultiIndex), NNCoefficients>,
    a: BTreeMap<(usize, MultiIndex), Vec<Rational>>,
}

impl ZeroCurvatureData {
    pub fn new(spec: &MomentSpec, max_n: usize, max_m: usize, max_t: usize) -> Result<Self> {
        if spec.r() != 2 {
            return Err(Error::Dimension(format!("transition matrices need r = 2, got r = {}", spec.r())));
        }
        let order = 2 * (max_n + max_m) + 6;
        let zero = Rational::zero();
        let tables = (0..=max_t + 1)
            .map(|t| spec.discrete_table(t, &zero, order))
            .collect::<Result<Vec<_>>>()?;
        let mut nn = BTreeMap::new();
        let mut a = BTreeMap::new();
        for t in 0..=max_t {
            for n in 0..=max_n {
                for m in 0..=max_m {
                    let s = idx(n, m);
                    nn.insert((t, s.clone()), nn_coeffs(&tables[t], &s)?);
                    let (av, _) = ab_from_tables(&tables[t], &tables[t + 1], &s, &zero)?;
                    a.insert((t, s), av);
                }
            }
        }
        Ok(ZeroCurvatureData {
            max: (max_n, max_m, max_t),
            tables,
            nn,
            a,
        })
    }

    fn nn_at(&self, n: usize, m: usize, t: usize) -> Result<&NNCoefficients> {
        self.nn.get(&(t, idx(n, m))).ok_or(Error::Halo(idx(n, m)))
    }

    fn nn_opt(&self, n: Option<usize>, m: Option<usize>, t: usize) -> Result<Option<&NNCoefficients>> {
        match (n, m) {
            (Some(n), Some(m)) => self.nn_at(n, m, t).map(Some),
            _ => Ok(None),
        }
    }

    fn a_at(&self, n: usize, m: usize, t: usize, j: usize) -> Result<&Rational> {
        self.a
            .get(&(t, idx(n, m)))
            .map(|v| &v[j])
            .ok_or(Error::Halo(idx(n, m)))
    }

    pub fn l(&self, n: usize, m: usize, t: usize) -> Result<TransitionMatrix> {
        Ok(build_l(self.nn_at(n, m, t)?, self.nn_opt(Some(n), m.checked_sub(1), t)?))
    }

    pub fn m(&self, n: usize, m: usize, t: usize) -> Result<TransitionMatrix> {
        Ok(build_m(self.nn_at(n, m, t)?, self.nn_opt(n.checked_sub(1), Some(m), t)?))
    }

    pub fn n(&self, n: usize, m: usize, t: usize) -> Result<TransitionMatrix> {
        let left = match n.checked_sub(1) {
            Some(k) => Some(self.a_at(k, m, t, 0)?),
            None => None,
        };
        let below = match m.checked_sub(1) {
            Some(k) => Some(self.a_at(n, k, t, 1)?),
            None => None,
        };
        Ok(build_n(self.nn_at(n, m, t)?, self.a_at(n, m, t, 1)?, left, below))
    }

    fn p(&self, n: Option<usize>, m: Option<usize>, t: usize) -> Result<Poly> {
        match (n, m) {
            (Some(n), Some(m)) => mop_type2(&self.tables[t], &idx(n, m)),
            _ => Ok(Poly::zero()),
        }
    }

    /// `Psi_{n,m,t}`.
    pub fn psi(&self, n: usize, m: usize, t: usize) -> Result<Vec<Poly>> {
        Ok(vec![
            self.p(Some(n), Some(m), t)?,
            self.p(n.checked_sub(1), Some(m), t)?,
            self.p(Some(n), m.checked_sub(1), t)?,
        ])
    }

    /// Residuals, with `1/x` factors cleared, of
    /// `L_{n,m+1,t} M_{n,m,t} - M_{n+1,m,t} L_{n,m,t}`,
    /// `M_{n,m,t+1} N_{n,m,t} - N_{n,m+1,t} M_{n,m,t}` and
    /// `L_{n,m,t+1} N_{n,m,t} - N_{n+1,m,t} L_{n,m,t}`.
    pub fn zero_curvature_residuals(&self, n: usize, m: usize, t: usize) -> Result<[PolyMatrix; 3]> {
        self.check_site(n + 1, m + 1, t + 1)?;
        let lm = self
            .l(n, m + 1, t)?
            .cleared()
            .mul(&self.m(n, m, t)?.cleared())?
            .sub(&self.m(n + 1, m, t)?.cleared().mul(&self.l(n, m, t)?.cleared())?)?;
        let mn = self
            .m(n, m, t + 1)?
            .cleared()
            .mul(&self.n(n, m, t)?.cleared())?
            .sub(&self.n(n, m + 1, t)?.cleared().mul(&self.m(n, m, t)?.cleared())?)?;
        let ln = self
            .l(n, m, t + 1)?
            .cleared()
            .mul(&self.n(n, m, t)?.cleared())?
            .sub(&self.n(n + 1, m, t)?.cleared().mul(&self.l(n, m, t)?.cleared())?)?;
        // Source Psi_{n,m,t}; destinations Psi_{n+1,m+1,t}, Psi_{n,m+1,t+1}, Psi_{n+1,m,t+1}.
        Ok([
            mask(&lm, [false; 3], source_mask(n, m)),
            mask(&mn, source_mask(n, m + 1), source_mask(n, m)),
            mask(&ln, source_mask(n + 1, m), source_mask(n, m)),
        ])
    }

    /// Residuals of `Psi_{n+1,m} = L Psi`, `Psi_{n,m+1} = M Psi` and `x Psi^{t+1} = (x N) Psi`.
    pub fn wavefunction_transport(&self, n: usize, m: usize, t: usize) -> Result<ResidualSet> {
        self.check_site(n + 1, m + 1, t + 1)?;
        let psi = self.psi(n, m, t)?;
        let mut out = ResidualSet::new();
        let moves = [
            ("L", self.l(n, m, t)?, self.psi(n + 1, m, t)?, source_mask(n + 1, m)),
            ("M", self.m(n, m, t)?, self.psi(n, m + 1, t)?, source_mask(n, m + 1)),
            ("N", self.n(n, m, t)?, self.psi(n, m, t + 1)?, source_mask(n, m)),
        ];
        for (name, tm, target, masked) in moves {
            let image = tm.apply_cleared(&psi)?;
            for k in 0..3 {
                if masked[k] {
                    continue;
                }
                let lhs = target[k].shift(tm.x_shift());
                out.record_poly(|| format!("{name} slot {} at ({n},{m},{t})", k + 1), &(&lhs - &image[k]));
            }
        }
        Ok(out)
    }

    /// `det L` and `det M` against their constant values.
    pub fn determinant_residuals(&self, n: usize, m: usize, t: usize) -> Result<ResidualSet> {
        let here = self.nn_at(n, m, t)?;
        let below_m = self.nn_opt(Some(n), m.checked_sub(1), t)?;
        let below_n = self.nn_opt(n.checked_sub(1), Some(m), t)?;
        let mut out = ResidualSet::new();
        let dl = self.l(n, m, t)?.cleared().det()? - Poly::constant(det_l_expected(here, below_m));
        out.record_poly(|| format!("det L at ({n},{m},{t})"), &dl);
        let dm = self.m(n, m, t)?.cleared().det()? - Poly::constant(det_m_expected(here, below_n));
        out.record_poly(|| format!("det M at ({n},{m},{t})"), &dm);
        Ok(out)
    }

    /// `b^{t+1}_{n,m,2} - b^t_{n,m+1,2} - (A^t_{n,m,2} - A^t_{n,m+1,2})`.
    pub fn entry31_residual(&self, n: usize, m: usize, t: usize) -> Result<Rational> {
        self.check_site(n, m + 1, t + 1)?;
        Ok(&self.nn_at(n, m, t + 1)?.b[1] - &self.nn_at(n, m + 1, t)?.b[1]
            - (self.a_at(n, m, t, 1)? - self.a_at(n, m + 1, t, 1)?))
    }

    fn check_site(&self, n: usize, m: usize, t: usize) -> Result<()> {
        let (max_n, max_m, max_t) = self.max;
        if n > max_n || m > max_m || t > max_t {
            return Err(Error::Halo(MultiIndex::new(vec![n, m, t])));
        }
        Ok(())
    }
}

/// Slots of `Psi_{n,m}` that are structurally zero.
fn source_mask(n: usize, m: usize) -> [bool; 3] {
    [false, n == 0, m == 0]
}

fn mask(res: &PolyMatrix, rows: [bool; 3], cols: [bool; 3]) -> PolyMatrix {
    let out = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| if rows[i] || cols[j] { Poly::zero() } else { res.get(i, j).clone() })
                .collect()
        })
        .collect();
    PolyMatrix::from_rows(out).expect("3x3")
}

fn nonzero(x: Rational, n: usize, m: usize) -> Result<Rational> {
    if x.is_zero() {
        Err(Error::normality(&idx(n, m)))
    } else {
        Ok(x)
    }
}

struct TauGrid<'a> {
    table: &'a MomentTable,
    cache: BTreeMap<(usize, usize), Rational>,
}

impl TauGrid<'_> {
    fn get(&mut self, n: usize, m: usize) -> Result<Rational> {
        if let Some(v) = self.cache.get(&(n, m)) {
            return Ok(v.clone());
        }
        let v = tau(self.table, &idx(n, m))?;
        self.cache.insert((n, m), v.clone());
        Ok(v)
    }

    /// `a_{n,m,1} + a_{n,m,2}` from tau ratios.
    fn a_sum(&mut self, n: usize, m: usize) -> Result<Rational> {
        let t = nonzero(self.get(n, m)?, n, m)?;
        let t2 = &t * &t;
        let mut s = Rational::zero();
        if n >= 1 {
            s += self.get(n + 1, m)? * self.get(n - 1, m)? / &t2;
        }
        if m >= 1 {
            s += self.get(n, m + 1)? * self.get(n, m - 1)? / &t2;
        }
        Ok(s)
    }

    /// `b_{n,m,1} - b_{n,m,2} = -tau_{n,m} tau_{n+1,m+1} / (tau_{n+1,m} tau_{n,m+1})`.
    fn b_gap(&mut self, n: usize, m: usize) -> Result<Rational> {
        let den = nonzero(self.get(n + 1, m)?, n + 1, m)? * nonzero(self.get(n, m + 1)?, n, m + 1)?;
        Ok(-(self.get(n, m)? * self.get(n + 1, m + 1)?) / den)
    }
}

/// `(b_{n,m+1,1}, b_{n+1,m,2})` from single-measure boundary values plus
/// telescoped sums:
/// `b_{n,m+1,1} = b_{n,0,1} + sum_{i=0}^{m} (asum_{n+1,i} - asum_{n,i+1}) / (b_{n,i,1} - b_{n,i,2})`,
/// `b_{n+1,m,2} = b_{0,m,2} + sum_{i=0}^{n} (asum_{i+1,m} - asum_{i,m+1}) / (b_{i,m,1} - b_{i,m,2})`,
/// where `asum` is `a_{.,1} + a_{.,2}` and every term is a tau ratio.
pub fn b_by_summation(table: &MomentTable, n: usize, m: usize) -> Result<(Rational, Rational)> {
    if table.r() != 2 {
        return Err(Error::Dimension(format!("summation needs r = 2, got r = {}", table.r())));
    }
    let first_base = nn_coeffs(&table.marginal(0), &MultiIndex::new(vec![n]))?.b[0].clone();
    let second_base = nn_coeffs(&table.marginal(1), &MultiIndex::new(vec![m]))?.b[0].clone();
    let mut grid = TauGrid {
        table,
        cache: BTreeMap::new(),
    };
    let mut first = first_base;
    for i in 0..=m {
        first += (grid.a_sum(n + 1, i)? - grid.a_sum(n, i + 1)?) / grid.b_gap(n, i)?;
    }
    let mut second = second_base;
    for i in 0..=n {
        second += (grid.a_sum(i + 1, m)? - grid.a_sum(i, m + 1)?) / grid.b_gap(i, m)?;
    }
    Ok((first, second))
}
