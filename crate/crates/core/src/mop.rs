//! Type I and type II multiple orthogonal polynomials, tau functions and
//! nearest-neighbour recurrence coefficients, all from moments.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::exact::{det, solve_linear, MatrixQ, Poly, Rational};
use crate::index::MultiIndex;
use crate::moments::MomentTable;

/// Column exponents of a block-Hankel determinant: block `j` holds the
/// exponents `c` of its columns `(mu_{row+c, j})_row`, in column order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ColumnLayout(pub Vec<Vec<usize>>);

impl ColumnLayout {
    /// Columns `0..n_j` in every block.
    pub fn standard(n: &MultiIndex) -> Self {
        ColumnLayout(n.parts().iter().map(|&nj| (0..nj).collect()).collect())
    }

    pub fn width(&self) -> usize {
        self.0.iter().map(Vec::len).sum()
    }

    pub fn max_exponent(&self) -> Option<usize> {
        self.0.iter().flatten().copied().max()
    }

    /// Layouts whose determinants sum to `-d/dt` of this one under
    /// `d/dt mu_i = -mu_{i+1}`: each column `c` is raised to `c+1`, and
    /// terms that would duplicate a column (and vanish) are dropped.
    pub fn shifted(&self) -> Vec<ColumnLayout> {
        let mut out = Vec::new();
        for (j, block) in self.0.iter().enumerate() {
            for (pos, &c) in block.iter().enumerate() {
                if !block.contains(&(c + 1)) {
                    let mut l = self.clone();
                    l.0[j][pos] = c + 1;
                    out.push(l);
                }
            }
        }
        out
    }
}

/// Determinant of `(mu_{row+c, j})` with the given rows and column layout.
pub fn moment_determinant(table: &MomentTable, rows: &[usize], cols: &ColumnLayout) -> Result<Rational> {
    if rows.len() != cols.width() {
        return Err(Error::Dimension(format!(
            "{} rows against {} columns",
            rows.len(),
            cols.width()
        )));
    }
    if rows.is_empty() {
        return Ok(Rational::one());
    }
    if cols.0.len() != table.r() {
        return Err(Error::Dimension(format!("{} blocks for {} measures", cols.0.len(), table.r())));
    }
    let top = rows.iter().max().copied().unwrap_or(0) + cols.max_exponent().unwrap_or(0);
    table.require(top)?;
    let flat: Vec<(usize, usize)> = cols
        .0
        .iter()
        .enumerate()
        .flat_map(|(j, b)| b.iter().map(move |&c| (j, c)))
        .collect();
    let m = MatrixQ::from_fn(rows.len(), flat.len(), |i, k| {
        let (j, c) = flat[k];
        table.mu(rows[i] + c, j).clone()
    });
    det(&m)
}

/// `d^k/dt^k` of a moment determinant, by repeated column shifting.
pub fn moment_determinant_derivative(
    table: &MomentTable,
    rows: &[usize],
    cols: &ColumnLayout,
    k: usize,
) -> Result<Rational> {
    let mut terms: BTreeMap<ColumnLayout, i64> = BTreeMap::new();
    terms.insert(cols.clone(), 1);
    for _ in 0..k {
        let mut next: BTreeMap<ColumnLayout, i64> = BTreeMap::new();
        for (layout, coeff) in &terms {
            for s in layout.shifted() {
                *next.entry(s).or_insert(0) -= coeff;
            }
        }
        next.retain(|_, c| *c != 0);
        terms = next;
    }
    let mut acc = Rational::zero();
    for (layout, coeff) in &terms {
        acc += moment_determinant(table, rows, layout)? * Rational::from_integer((*coeff).into());
    }
    Ok(acc)
}

fn check_r(table: &MomentTable, n: &MultiIndex) -> Result<()> {
    if n.r() != table.r() {
        return Err(Error::Dimension(format!(
            "multi-index {n} has {} parts, table has {} measures",
            n.r(),
            table.r()
        )));
    }
    Ok(())
}

/// Moment order needed by `tau(n)`.
pub fn tau_order(n: &MultiIndex) -> usize {
    (n.total() + n.max_part()).saturating_sub(2)
}

/// `tau_n`, the block-Hankel determinant on rows `0..|n|`.
pub fn tau(table: &MomentTable, n: &MultiIndex) -> Result<Rational> {
    check_r(table, n)?;
    let rows: Vec<usize> = (0..n.total()).collect();
    moment_determinant(table, &rows, &ColumnLayout::standard(n))
}

/// `tau` of an index that may have stepped below zero (`None`), which is 0.
pub fn tau_or_zero(table: &MomentTable, n: Option<&MultiIndex>) -> Result<Rational> {
    match n {
        Some(n) => tau(table, n),
        None => Ok(Rational::zero()),
    }
}

fn sigma_rows(total: usize) -> Vec<usize> {
    let mut rows: Vec<usize> = (0..total.saturating_sub(1)).collect();
    rows.push(total);
    rows
}

/// `sigma_n`: as `tau_n` but with the last row `|n|-1` replaced by row `|n|`.
/// `sigma_0 = 0`.
pub fn sigma(table: &MomentTable, n: &MultiIndex) -> Result<Rational> {
    check_r(table, n)?;
    if n.total() == 0 {
        return Ok(Rational::zero());
    }
    moment_determinant(table, &sigma_rows(n.total()), &ColumnLayout::standard(n))
}

/// Signed cofactors `s_i` with `tau_{n,x} = sum_i s_i x^i`.
fn tau_x_coeffs(table: &MomentTable, total: usize, cols: &ColumnLayout) -> Result<Vec<Rational>> {
    (0..=total)
        .map(|i| {
            let rows: Vec<usize> = (0..=total).filter(|&k| k != i).collect();
            let d = moment_determinant(table, &rows, cols)?;
            Ok(if (i + total).is_multiple_of(2) { d } else { -d })
        })
        .collect()
}

/// Orthogonality residuals `L_j[x^k p]` for `k < n_j`, in block order.
pub fn orthogonality_residuals(table: &MomentTable, n: &MultiIndex, p: &Poly) -> Result<Vec<Rational>> {
    check_r(table, n)?;
    let mut out = Vec::with_capacity(n.total());
    for j in 0..n.r() {
        for k in 0..n.get(j) {
            out.push(functional(table, j, p, k)?);
        }
    }
    Ok(out)
}

/// `L_j[x^shift p]`.
pub fn functional(table: &MomentTable, j: usize, p: &Poly, shift: usize) -> Result<Rational> {
    if p.is_zero() {
        return Ok(Rational::zero());
    }
    table.require(p.degree() as usize + shift)?;
    Ok(p
        .coeffs()
        .iter()
        .enumerate()
        .fold(Rational::zero(), |acc, (i, c)| acc + c * table.mu(i + shift, j)))
}

/// Monic type II polynomial `P_n`, solved from the orthogonality conditions.
pub fn mop_type2(table: &MomentTable, n: &MultiIndex) -> Result<Poly> {
    check_r(table, n)?;
    let total = n.total();
    if total == 0 {
        return Ok(Poly::one());
    }
    table.require(total + n.max_part() - 1)?;
    // Row (j,k): sum_i mu_{i+k,j} c_i = -mu_{N+k,j}.
    let conds: Vec<(usize, usize)> = (0..n.r()).flat_map(|j| (0..n.get(j)).map(move |k| (j, k))).collect();
    let a = MatrixQ::from_fn(total, total, |row, i| {
        let (j, k) = conds[row];
        table.mu(i + k, j).clone()
    });
    let rhs: Vec<Rational> = conds.iter().map(|&(j, k)| -table.mu(total + k, j)).collect();
    let mut coeffs = match solve_linear(&a, &rhs) {
        Ok(c) => c,
        Err(Error::Singular { .. }) => return Err(Error::normality(n)),
        Err(e) => return Err(e),
    };
    coeffs.push(Rational::one());
    let p = Poly::from_coeffs(coeffs);
    debug_assert!(orthogonality_residuals(table, n, &p)?.iter().all(Zero::is_zero));
    Ok(p)
}

/// `P_n = tau_{n,x} / tau_n` by cofactor expansion along the monomial column.
pub fn mop_type2_det(table: &MomentTable, n: &MultiIndex) -> Result<Poly> {
    check_r(table, n)?;
    let t = tau(table, n)?;
    if t.is_zero() {
        return Err(Error::normality(n));
    }
    let s = tau_x_coeffs(table, n.total(), &ColumnLayout::standard(n))?;
    Ok(Poly::from_coeffs(s.into_iter().map(|c| c / &t).collect()))
}

/// Exact `dP_n/dt` under `d/dt mu_i = -mu_{i+1}`, differentiating every
/// determinant in `tau_{n,x} / tau_n`.
pub fn mop_type2_dt(table: &MomentTable, n: &MultiIndex) -> Result<Poly> {
    check_r(table, n)?;
    let total = n.total();
    if total == 0 {
        return Ok(Poly::zero());
    }
    let cols = ColumnLayout::standard(n);
    let t = tau(table, n)?;
    if t.is_zero() {
        return Err(Error::normality(n));
    }
    let t_dot = tau_dot(table, n)?;
    let s = tau_x_coeffs(table, total, &cols)?;
    let mut s_dot = vec![Rational::zero(); total + 1];
    for layout in cols.shifted() {
        for (acc, v) in s_dot.iter_mut().zip(tau_x_coeffs(table, total, &layout)?) {
            *acc -= v;
        }
    }
    let t2 = &t * &t;
    Ok(Poly::from_coeffs(
        s.iter()
            .zip(&s_dot)
            .map(|(si, sdi)| (sdi * &t - si * &t_dot) / &t2)
            .collect(),
    ))
}

/// `d tau_n / dt`.
pub fn tau_dot(table: &MomentTable, n: &MultiIndex) -> Result<Rational> {
    check_r(table, n)?;
    let rows: Vec<usize> = (0..n.total()).collect();
    moment_determinant_derivative(table, &rows, &ColumnLayout::standard(n), 1)
}

/// `d^2 tau_n / dt^2`.
pub fn tau_ddot(table: &MomentTable, n: &MultiIndex) -> Result<Rational> {
    check_r(table, n)?;
    let rows: Vec<usize> = (0..n.total()).collect();
    moment_determinant_derivative(table, &rows, &ColumnLayout::standard(n), 2)
}

/// Nearest-neighbour recurrence data at one site.
#[derive(Clone, Debug, PartialEq)]
pub struct NNCoefficients<S = Rational> {
    pub a: Vec<S>,
    pub b: Vec<S>,
}

impl<S> NNCoefficients<S> {
    pub fn r(&self) -> usize {
        self.b.len()
    }

    pub fn map<T>(&self, f: impl Fn(&S) -> T) -> NNCoefficients<T> {
        NNCoefficients {
            a: self.a.iter().map(&f).collect(),
            b: self.b.iter().map(&f).collect(),
        }
    }
}

/// Moment order needed by `nn_coeffs(n)`.
pub fn nn_order(n: &MultiIndex) -> usize {
    n.total() + n.max_part() + 1
}

/// `b_{n,j} = sigma_{n+e_j}/tau_{n+e_j} - sigma_n/tau_n`,
/// `a_{n,j} = tau_{n+e_j} tau_{n-e_j} / tau_n^2` (zero when `n_j = 0`).
pub fn nn_coeffs(table: &MomentTable, n: &MultiIndex) -> Result<NNCoefficients> {
    check_r(table, n)?;
    table.require(nn_order(n))?;
    let t = tau(table, n)?;
    if t.is_zero() {
        return Err(Error::normality(n));
    }
    let base = sigma(table, n)? / &t;
    let t2 = &t * &t;
    let mut a = Vec::with_capacity(n.r());
    let mut b = Vec::with_capacity(n.r());
    for j in 0..n.r() {
        let up = n.plus(j);
        let t_up = tau(table, &up)?;
        if t_up.is_zero() {
            return Err(Error::normality(&up));
        }
        b.push(sigma(table, &up)? / &t_up - &base);
        a.push(match n.minus(j) {
            Some(down) => &t_up * tau(table, &down)? / &t2,
            None => Rational::zero(),
        });
    }
    Ok(NNCoefficients { a, b })
}

/// `x P_n - P_{n+e_j} - b_{n,j} P_n - sum_k a_{n,k} P_{n-e_k}`; zero for a normal stencil.
pub fn verify_nn_recurrence(table: &MomentTable, n: &MultiIndex, j: usize) -> Result<Poly> {
    let nn = nn_coeffs(table, n)?;
    let p = mop_type2(table, n)?;
    let mut res = p.shift(1) - mop_type2(table, &n.plus(j))? - p.scale(&nn.b[j]);
    for k in 0..n.r() {
        if let Some(down) = n.minus(k) {
            res = res - mop_type2(table, &down)?.scale(&nn.a[k]);
        }
    }
    Ok(res)
}

/// Residuals of the two stationary compatibility relations between
/// channels `i != j` at `n`:
///
/// * `sum_k (a_{n+e_j,k} - a_{n+e_i,k}) - (b_{n,j} - b_{n,i})(b_{n+e_j,i} - b_{n,i})`
/// * `a_{n,i}(b_{n,j} - b_{n,i}) - a_{n+e_j,i}(b_{n-e_i,j} - b_{n-e_i,i})`
///
/// The second is the cross-multiplied form of the ratio relation.
pub fn verify_consistency(table: &MomentTable, n: &MultiIndex, i: usize, j: usize) -> Result<(Rational, Rational)> {
    if i == j || i >= n.r() || j >= n.r() {
        return Err(Error::invalid(format!("consistency needs distinct channels, got {i} and {j}")));
    }
    let c = nn_coeffs(table, n)?;
    let cj = nn_coeffs(table, &n.plus(j))?;
    let ci = nn_coeffs(table, &n.plus(i))?;
    let sum_a = |x: &NNCoefficients| x.a.iter().fold(Rational::zero(), |s, v| s + v);
    let first = sum_a(&cj) - sum_a(&ci) - (&c.b[j] - &c.b[i]) * (&cj.b[i] - &c.b[i]);
    let second = match n.minus(i) {
        Some(down) => {
            let cd = nn_coeffs(table, &down)?;
            &c.a[i] * (&c.b[j] - &c.b[i]) - &cj.a[i] * (&cd.b[j] - &cd.b[i])
        }
        // a_{n,i} and a_{n+e_j,i} both vanish.
        None => Rational::zero(),
    };
    Ok((first, second))
}

/// The four contiguous initial-value relations of the two-measure lattice
/// at `(m, n)`, as residuals:
///
/// 1. `b_{m,n+1,1} - b_{m,n,1} - (b_{m+1,n,2} - b_{m,n,2})`
/// 2. `a_{m+1,n,1} - a_{m,n+1,1} + a_{m+1,n,2} - a_{m,n+1,2} - (b_{m,n,1} b_{m+1,n,2} - b_{m,n+1,1} b_{m,n,2})`
/// 3. `a_{m,n+1,1}(b_{m-1,n,1} - b_{m-1,n,2}) - a_{m,n,1}(b_{m,n,1} - b_{m,n,2})`
/// 4. `a_{m+1,n,2}(b_{m,n-1,1} - b_{m,n-1,2}) - a_{m,n,2}(b_{m,n,1} - b_{m,n,2})`
pub fn verify_initial_value_relations(table: &MomentTable, n: &MultiIndex) -> Result<[Rational; 4]> {
    if n.r() != 2 {
        return Err(Error::invalid("initial-value relations are stated for r = 2"));
    }
    let c = nn_coeffs(table, n)?;
    let c1 = nn_coeffs(table, &n.plus(0))?;
    let c2 = nn_coeffs(table, &n.plus(1))?;
    let r1 = &c2.b[0] - &c.b[0] - (&c1.b[1] - &c.b[1]);
    let r2 = &c1.a[0] - &c2.a[0] + &c1.a[1] - &c2.a[1] - (&c.b[0] * &c1.b[1] - &c2.b[0] * &c.b[1]);
    let diff = &c.b[0] - &c.b[1];
    let r3 = match n.minus(0) {
        Some(d) => {
            let cd = nn_coeffs(table, &d)?;
            &c2.a[0] * (&cd.b[0] - &cd.b[1]) - &c.a[0] * &diff
        }
        None => Rational::zero(),
    };
    let r4 = match n.minus(1) {
        Some(d) => {
            let cd = nn_coeffs(table, &d)?;
            &c1.a[1] * (&cd.b[0] - &cd.b[1]) - &c.a[1] * &diff
        }
        None => Rational::zero(),
    };
    Ok([r1, r2, r3, r4])
}

/// Type I polynomials `C_{n,j}` (degree `< n_j`) normalised so that
/// `sum_j L_j[x^k C_{n,j}]` is 0 for `k < |n|-1` and 1 for `k = |n|-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Type1System {
    pub index: MultiIndex,
    pub polys: Vec<Poly>,
    /// Coefficient of `x^{n_j-1}` in `C_{n,j}` (0 when `n_j = 0`).
    pub kappa_lead: Vec<Rational>,
}

pub fn type1_polynomials(table: &MomentTable, n: &MultiIndex) -> Result<Type1System> {
    check_r(table, n)?;
    let total = n.total();
    if total == 0 {
        return Err(Error::invalid("type I polynomials need |n| >= 1"));
    }
    table.require(total + n.max_part() - 2)?;
    let cols: Vec<(usize, usize)> = (0..n.r()).flat_map(|j| (0..n.get(j)).map(move |c| (j, c))).collect();
    let a = MatrixQ::from_fn(total, total, |k, col| {
        let (j, c) = cols[col];
        table.mu(k + c, j).clone()
    });
    let mut rhs = vec![Rational::zero(); total];
    rhs[total - 1] = Rational::one();
    let x = match solve_linear(&a, &rhs) {
        Ok(x) => x,
        Err(Error::Singular { .. }) => return Err(Error::normality(n)),
        Err(e) => return Err(e),
    };
    let mut polys = Vec::with_capacity(n.r());
    let mut kappa_lead = Vec::with_capacity(n.r());
    let mut off = 0;
    for j in 0..n.r() {
        let nj = n.get(j);
        let block = x[off..off + nj].to_vec();
        kappa_lead.push(block.last().cloned().unwrap_or_else(Rational::zero));
        polys.push(Poly::from_coeffs(block));
        off += nj;
    }
    Ok(Type1System {
        index: n.clone(),
        polys,
        kappa_lead,
    })
}

/// `int p Q_m dmu = sum_j L_j[p C_{m,j}]`.
pub fn type1_pairing(table: &MomentTable, p: &Poly, q: &Type1System) -> Result<Rational> {
    let mut acc = Rational::zero();
    for (j, c) in q.polys.iter().enumerate() {
        acc += functional(table, j, &(p * c), 0)?;
    }
    Ok(acc)
}

/// `b_{n,k} = int x P_n Q_{n+e_k} dmu`.
pub fn b_by_pairing(table: &MomentTable, n: &MultiIndex, k: usize) -> Result<Rational> {
    let p = mop_type2(table, n)?;
    let q = type1_polynomials(table, &n.plus(k))?;
    type1_pairing(table, &p.shift(1), &q)
}

/// `a_{n,j} = L_j[x^{n_j} P_n] / L_j[x^{n_j-1} P_{n-e_j}]` (0 when `n_j = 0`).
pub fn a_by_ratio(table: &MomentTable, n: &MultiIndex, j: usize) -> Result<Rational> {
    let Some(down) = n.minus(j) else {
        return Ok(Rational::zero());
    };
    let num = functional(table, j, &mop_type2(table, n)?, n.get(j))?;
    let den = functional(table, j, &mop_type2(table, &down)?, n.get(j) - 1)?;
    if den.is_zero() {
        return Err(Error::normality(&down));
    }
    Ok(num / den)
}

/// `int x P_n Q_n dmu`, which equals `sum_j a_{n,j}`.
pub fn trace_pairing(table: &MomentTable, n: &MultiIndex) -> Result<Rational> {
    let p = mop_type2(table, n)?;
    let q = type1_polynomials(table, n)?;
    type1_pairing(table, &p.shift(1), &q)
}

/// `kappa_{n+e_k,k} L_k[x^{n_k} P_n]`, which equals 1.
pub fn kappa_normalization(table: &MomentTable, n: &MultiIndex, k: usize) -> Result<Rational> {
    let q = type1_polynomials(table, &n.plus(k))?;
    let p = mop_type2(table, n)?;
    Ok(&q.kappa_lead[k] * functional(table, k, &p, n.get(k))?)
}
