//! Discrete-time multiple Toda.
//!
//! One time step multiplies every measure by `x - lambda`. The Christoffel
//! coefficients `A_{n,j}` and Geronimus coefficients `B_{n,k}` connect the
//! polynomials at consecutive times; [`dm_toda_step`] advances them without
//! touching moments.

mod continuum;
mod qd;

pub use continuum::{continuum_limit_error, laguerre_discrete_closed_form};
pub use qd::{
    dtoda_lax_residual, op_rec_from_qd, pt_residuals, qd_r1, qd_residuals, QdPair,
};

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::exact::{format_rational, parse_rational, Poly, Rational};
use crate::index::{LatticeBox, MultiIndex};
use crate::moments::{shift_moments_discrete, MomentSpec, MomentTable};
use crate::mop::{mop_type2, nn_coeffs, tau, tau_order};
use crate::residual::ResidualSet;

/// Christoffel (`a`) and Geronimus (`b`) coefficients on a box at one discrete time.
///
/// `a[n][j]` is `A_{n,j}` and `b[n][k]` is `B_{n,k}`; channels are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct ABField {
    pub t: usize,
    pub lambda: Rational,
    pub lattice: LatticeBox,
    pub a: BTreeMap<MultiIndex, Vec<Rational>>,
    pub b: BTreeMap<MultiIndex, Vec<Rational>>,
}

fn site_key(n: &MultiIndex, j: usize) -> String {
    format!("{}|{}", n.key(), j + 1)
}

fn parse_site_key(key: &str) -> Result<(MultiIndex, usize)> {
    let (site, ch) = key
        .split_once('|')
        .ok_or_else(|| Error::Parse(format!("field key {key:?} lacks a channel")))?;
    let ch: usize = ch
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("bad channel in {key:?}")))?;
    if ch == 0 {
        return Err(Error::Parse(format!("channels are 1-based in {key:?}")));
    }
    Ok((site.parse()?, ch - 1))
}

impl ABField {
    pub fn r(&self) -> usize {
        self.lattice.r()
    }

    pub fn a_at(&self, n: &MultiIndex, j: usize) -> Option<&Rational> {
        self.a.get(n).map(|v| &v[j])
    }

    pub fn b_at(&self, n: &MultiIndex, k: usize) -> Option<&Rational> {
        self.b.get(n).map(|v| &v[k])
    }

    /// `sum_k B_{n,k}`
    pub fn b_sum(&self, n: &MultiIndex) -> Option<Rational> {
        self.b.get(n).map(|v| v.iter().sum())
    }

    /// JSON with keys in site-then-channel order.
    pub fn to_value(&self) -> Value {
        let mut a = Map::new();
        let mut b = Map::new();
        for n in self.lattice.sites() {
            if let (Some(av), Some(bv)) = (self.a.get(&n), self.b.get(&n)) {
                for j in 0..self.r() {
                    a.insert(site_key(&n, j), Value::String(format_rational(&av[j])));
                }
                for k in 0..self.r() {
                    b.insert(site_key(&n, k), Value::String(format_rational(&bv[k])));
                }
            }
        }
        let mut obj = Map::new();
        obj.insert("t".into(), Value::from(self.t));
        obj.insert("lambda".into(), Value::String(format_rational(&self.lambda)));
        obj.insert("box".into(), Value::from(self.lattice.extents().to_vec()));
        obj.insert("A".into(), Value::Object(a));
        obj.insert("B".into(), Value::Object(b));
        Value::Object(obj)
    }

    pub fn from_value(v: &Value) -> Result<Self> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("field must be a JSON object".into()))?;
        let t = obj.get("t").and_then(Value::as_u64).unwrap_or(0) as usize;
        let lambda = match obj.get("lambda") {
            None => Rational::zero(),
            Some(Value::String(s)) => parse_rational(s)?,
            Some(Value::Number(n)) => parse_rational(&n.to_string())?,
            Some(other) => return Err(Error::Parse(format!("bad lambda {other}"))),
        };
        let extents = obj
            .get("box")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("field needs a \"box\" array".into()))?
            .iter()
            .map(|e| {
                e.as_u64()
                    .map(|x| x as usize)
                    .ok_or_else(|| Error::Parse(format!("bad box extent {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let lattice = LatticeBox::new(extents);
        let r = lattice.r();
        if r == 0 {
            return Err(Error::invalid("field box must have at least one axis"));
        }
        let read = |name: &str| -> Result<BTreeMap<MultiIndex, Vec<Rational>>> {
            let entries = obj
                .get(name)
                .and_then(Value::as_object)
                .ok_or_else(|| Error::Parse(format!("field needs an object {name:?}")))?;
            let mut out: BTreeMap<MultiIndex, Vec<Option<Rational>>> = BTreeMap::new();
            for (key, val) in entries {
                let (n, ch) = parse_site_key(key)?;
                if n.r() != r || ch >= r {
                    return Err(Error::Dimension(format!("{name} key {key:?} does not fit r = {r}")));
                }
                if !lattice.contains(&n) {
                    return Err(Error::invalid(format!("{name} key {key:?} lies outside the box")));
                }
                let x = match val {
                    Value::String(s) => parse_rational(s)?,
                    Value::Number(num) => parse_rational(&num.to_string())?,
                    other => return Err(Error::Parse(format!("bad value {other} at {key:?}"))),
                };
                out.entry(n).or_insert_with(|| vec![None; r])[ch] = Some(x);
            }
            let mut full = BTreeMap::new();
            for n in lattice.sites() {
                let v = out
                    .remove(&n)
                    .ok_or_else(|| Error::invalid(format!("{name} missing at site {n}")))?;
                let v = v
                    .into_iter()
                    .enumerate()
                    .map(|(ch, x)| x.ok_or_else(|| Error::invalid(format!("{name} missing at {n} channel {}", ch + 1))))
                    .collect::<Result<Vec<_>>>()?;
                full.insert(n, v);
            }
            Ok(full)
        };
        let a = read("A")?;
        let b = read("B")?;
        Ok(ABField { t, lambda, lattice, a, b })
    }
}

/// `A_{n,j} = -P_{n+e_j}(lambda) / P_n(lambda)`.
pub fn christoffel_coeffs(table: &MomentTable, n: &MultiIndex, j: usize, lambda: &Rational) -> Result<Rational> {
    if j >= n.r() {
        return Err(Error::Dimension(format!("channel {} of {}", j + 1, n.r())));
    }
    Ok(christoffel_row(table, n, lambda)?.swap_remove(j))
}

/// [`christoffel_coeffs`] for every channel at once.
pub fn christoffel_row(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<Vec<Rational>> {
    let p = mop_type2(table, n)?.eval(lambda);
    if p.is_zero() {
        return Err(Error::ForbiddenLambda {
            index: n.clone(),
            lambda: format_rational(lambda),
        });
    }
    (0..n.r())
        .map(|j| Ok(-mop_type2(table, &n.plus(j))?.eval(lambda) / &p))
        .collect()
}

/// `B_{n,k} = -a_{n,k} P_{n-e_k}(lambda) / P_n(lambda)`, zero when `n_k = 0`.
pub fn geronimus_coeffs(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<Vec<Rational>> {
    let p = mop_type2(table, n)?.eval(lambda);
    if p.is_zero() {
        return Err(Error::ForbiddenLambda {
            index: n.clone(),
            lambda: format_rational(lambda),
        });
    }
    let nn = nn_coeffs(table, n)?;
    (0..n.r())
        .map(|k| match n.minus(k) {
            Some(down) => Ok(-&nn.a[k] * mop_type2(table, &down)?.eval(lambda) / &p),
            None => Ok(Rational::zero()),
        })
        .collect()
}

/// `(x - lambda) P^{t+1}_n - P^t_{n+e_j} - A_{n,j} P^t_n` for each `j`.
pub fn christoffel_residuals(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<Vec<Poly>> {
    let next = shift_moments_discrete(table, lambda)?;
    let a = christoffel_row(table, n, lambda)?;
    let p = mop_type2(table, n)?;
    let lin = Poly::from_coeffs(vec![-lambda.clone(), Rational::one()]);
    let q = &lin * &mop_type2(&next, n)?;
    (0..n.r())
        .map(|j| Ok(&q - &mop_type2(table, &n.plus(j))? - p.scale(&a[j])))
        .collect()
}

/// `P^t_n - P^{t+1}_n - sum_k B_{n,k} P^{t+1}_{n-e_k}`.
pub fn geronimus_residual(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<Poly> {
    let next = shift_moments_discrete(table, lambda)?;
    let b = geronimus_coeffs(table, n, lambda)?;
    let mut res = mop_type2(table, n)? - mop_type2(&next, n)?;
    for k in 0..n.r() {
        if let Some(down) = n.minus(k) {
            res = res - mop_type2(&next, &down)?.scale(&b[k]);
        }
    }
    Ok(res)
}

/// Residuals of `b_{n,j} = A_{n,j} + sum_k B_{n,k} + lambda` and
/// `a_{n,j} = A_{n-e_j,j} B_{n,j}`.
pub fn tcoeff_residuals(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<ResidualSet> {
    let nn = nn_coeffs(table, n)?;
    let a = christoffel_row(table, n, lambda)?;
    let b = geronimus_coeffs(table, n, lambda)?;
    let bsum: Rational = b.iter().sum();
    let mut out = ResidualSet::new();
    for j in 0..n.r() {
        out.record(|| format!("b {n} j={}", j + 1), &(&nn.b[j] - &a[j] - &bsum - lambda));
        let rhs = match n.minus(j) {
            Some(down) => christoffel_coeffs(table, &down, j, lambda)? * &b[j],
            None => Rational::zero(),
        };
        out.record(|| format!("a {n} j={}", j + 1), &(&nn.a[j] - rhs));
    }
    Ok(out)
}

/// `(A_{n,j}, B_{n,j})` from determinants of the tables at times `t` and `t+1`.
///
/// `A_{n,j} = tau^{t+1}_{n+e_j} tau^t_n / (tau^t_{n+e_j} tau^{t+1}_n)`,
/// `B_{n,j} = tau^t_{n+e_j} tau^{t+1}_{n-e_j} / (tau^t_n tau^{t+1}_n)`.
///
/// `next` must be `now` shifted by `lambda`; a vanishing `tau^{t+1}_n` means
/// `P^t_n(lambda) = 0`.
pub fn ab_from_tables(
    now: &MomentTable,
    next: &MomentTable,
    n: &MultiIndex,
    lambda: &Rational,
) -> Result<(Vec<Rational>, Vec<Rational>)> {
    let nonzero = |x: Rational, idx: &MultiIndex| {
        if x.is_zero() {
            Err(Error::normality(idx))
        } else {
            Ok(x)
        }
    };
    let t0 = nonzero(tau(now, n)?, n)?;
    let t1 = tau(next, n)?;
    if t1.is_zero() {
        return Err(Error::ForbiddenLambda {
            index: n.clone(),
            lambda: format_rational(lambda),
        });
    }
    let mut a = Vec::with_capacity(n.r());
    let mut b = Vec::with_capacity(n.r());
    for j in 0..n.r() {
        let up = n.plus(j);
        let up0 = nonzero(tau(now, &up)?, &up)?;
        a.push(tau(next, &up)? * &t0 / (&up0 * &t1));
        b.push(match n.minus(j) {
            Some(down) => &up0 * tau(next, &down)? / (&t0 * &t1),
            None => Rational::zero(),
        });
    }
    Ok((a, b))
}

/// Moment order that covers `tau` at every site of `lattice` and its forward neighbours.
fn field_order(lattice: &LatticeBox) -> usize {
    let mut order = 0;
    for n in lattice.sites() {
        for j in 0..n.r() {
            order = order.max(tau_order(&n.plus(j)));
        }
    }
    order
}

fn tables(spec: &MomentSpec, t: usize, lambda: &Rational, order: usize) -> Result<(MomentTable, MomentTable)> {
    let now = spec.discrete_table(t, lambda, order + 1)?;
    let next = shift_moments_discrete(&now, lambda)?;
    Ok((now, next))
}

fn tag_time(e: Error, t: usize) -> Error {
    match e {
        Error::Normality { index, time: None } => Error::normality_at(&index, t),
        other => other,
    }
}

/// `(A_{n,j}, B_{n,j})` at discrete time `t` with `lambda = 0`.
pub fn ab_from_tau(spec: &MomentSpec, n: &MultiIndex, j: usize, t: usize) -> Result<(Rational, Rational)> {
    if j >= spec.r() {
        return Err(Error::Dimension(format!("channel {} of {}", j + 1, spec.r())));
    }
    let order = (0..n.r()).map(|k| tau_order(&n.plus(k))).max().unwrap_or(0);
    let (now, next) = tables(spec, t, &Rational::zero(), order)?;
    let (mut a, mut b) = ab_from_tables(&now, &next, n, &Rational::zero()).map_err(|e| tag_time(e, t))?;
    Ok((a.swap_remove(j), b.swap_remove(j)))
}

/// The full field on `lattice` at time `t`, from determinants.
pub fn ab_field_from_tau(spec: &MomentSpec, lattice: &LatticeBox, t: usize, lambda: &Rational) -> Result<ABField> {
    let (now, next) = tables(spec, t, lambda, field_order(lattice))?;
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    for n in lattice.sites() {
        let (av, bv) = ab_from_tables(&now, &next, &n, lambda).map_err(|e| tag_time(e, t))?;
        a.insert(n.clone(), av);
        b.insert(n, bv);
    }
    Ok(ABField {
        t,
        lambda: lambda.clone(),
        lattice: lattice.clone(),
        a,
        b,
    })
}

/// The same field through polynomial values at `lambda`.
pub fn ab_field_from_polys(spec: &MomentSpec, lattice: &LatticeBox, t: usize, lambda: &Rational) -> Result<ABField> {
    let mut order = field_order(lattice);
    for n in lattice.sites() {
        order = order.max(crate::mop::nn_order(&n) + 1);
    }
    let (now, _) = tables(spec, t, lambda, order)?;
    let mut a = BTreeMap::new();
    let mut b = BTreeMap::new();
    for n in lattice.sites() {
        let av = christoffel_row(&now, &n, lambda).map_err(|e| tag_time(e, t))?;
        let bv = geronimus_coeffs(&now, &n, lambda).map_err(|e| tag_time(e, t))?;
        a.insert(n.clone(), av);
        b.insert(n, bv);
    }
    Ok(ABField {
        t,
        lambda: lambda.clone(),
        lattice: lattice.clone(),
        a,
        b,
    })
}

/// Sign `s` with `P^t_n(lambda) = s tau^{t+1}_n / tau^t_n`; it comes out as `(-1)^{|n|}`.
pub fn ddetmops_sign(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<i8> {
    let next = shift_moments_discrete(table, lambda)?;
    let t0 = tau(table, n)?;
    if t0.is_zero() {
        return Err(Error::normality(n));
    }
    let ratio = tau(&next, n)? / t0;
    let p = mop_type2(table, n)?.eval(lambda);
    if p.is_zero() {
        return Err(Error::ForbiddenLambda {
            index: n.clone(),
            lambda: format_rational(lambda),
        });
    }
    if p == ratio {
        Ok(1)
    } else if p == -ratio.clone() {
        Ok(-1)
    } else {
        Err(Error::Consistency {
            site: n.clone(),
            family: "ddetmops".into(),
            residual: format_rational(&(p.abs() - ratio.abs())),
        })
    }
}

/// `P^t_n(lambda) - (-1)^{|n|} tau^{t+1}_n / tau^t_n`.
pub fn ddetmops_residual(table: &MomentTable, n: &MultiIndex, lambda: &Rational) -> Result<Rational> {
    let next = shift_moments_discrete(table, lambda)?;
    let t0 = tau(table, n)?;
    if t0.is_zero() {
        return Err(Error::normality(n));
    }
    let mut ratio = tau(&next, n)? / t0;
    if n.total() % 2 == 1 {
        ratio = -ratio;
    }
    Ok(mop_type2(table, n)?.eval(lambda) - ratio)
}

/// Site visiting order for [`dm_toda_step`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum MarchOrder {
    /// Shells of constant `|n|`.
    #[default]
    Shells,
    Lexicographic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StepOptions {
    /// Reject inputs that violate the fixed-time relations.
    pub strict: bool,
    pub order: MarchOrder,
}

/// Visits every fixed-time relation residual of `f`, labelled by site and family.
fn div_terms(f: &ABField, mut visit: impl FnMut(&MultiIndex, &'static str, usize, usize, Rational)) {
    let r = f.r();
    for n in f.lattice.sites() {
        for i in 0..r {
            for j in 0..r {
                if i == j {
                    continue;
                }
                let (ni, nj) = (n.plus(i), n.plus(j));
                let (Some(an), Some(ani), Some(anj)) = (f.a.get(&n), f.a.get(&ni), f.a.get(&nj)) else {
                    continue;
                };
                if i < j {
                    visit(&n, "div-product", i, j, &an[i] * &ani[j] - &an[j] * &anj[i]);
                    let bi = f.b_sum(&ni).expect("b follows a");
                    let bj = f.b_sum(&nj).expect("b follows a");
                    visit(&n, "div-sum", i, j, &anj[i] - &ani[j] + &an[j] - &an[i] - (bi - bj));
                }
                let bn = &f.b[&n][i];
                let bnj = &f.b[&nj][i];
                let shifted = match nj.minus(i) {
                    Some(m) => match f.a.get(&m) {
                        Some(v) => v[i].clone(),
                        None => continue,
                    },
                    None => Rational::zero(),
                };
                visit(&n, "div-ratio", i, j, bn * (&an[j] - &an[i]) - bnj * (&an[j] - shifted));
            }
        }
    }
}

/// Fixed-time relations between `A` and `B`; all residuals vanish for a field
/// that comes from a moment functional.
pub fn verify_div(f: &ABField) -> ResidualSet {
    let mut out = ResidualSet::new();
    div_terms(f, |n, family, i, j, v| {
        out.record(|| format!("{family} {n} i={} j={}", i + 1, j + 1), &v);
    });
    out
}

fn first_div_failure(f: &ABField) -> Option<Error> {
    let mut found = None;
    div_terms(f, |n, family, _, _, v| {
        if found.is_none() && !v.is_zero() {
            found = Some(Error::Consistency {
                site: n.clone(),
                family: family.to_string(),
                residual: format_rational(&v),
            });
        }
    });
    found
}

/// Advances `(A^t, B^t)` on a box to `(A^{t+1}, B^{t+1})` on the box shrunk by one.
///
/// `B^{t+1}_{n,j} = A^t_{n,j} B^t_{n,j} / A^{t+1}_{n-e_j,j}` and
/// `A^{t+1}_{n,j} = A^t_{n,j} + sum_k B^t_{n+e_j,k} - sum_k B^{t+1}_{n,k}`,
/// marching so that `n - e_j` is always done before `n`.
pub fn dm_toda_step(f: &ABField, opts: &StepOptions) -> Result<ABField> {
    if opts.strict {
        if let Some(e) = first_div_failure(f) {
            return Err(e);
        }
    }
    let r = f.r();
    let out_box = f.lattice.shrink(1);
    let sites: Vec<MultiIndex> = match opts.order {
        MarchOrder::Shells => out_box.shells().into_iter().flatten().collect(),
        MarchOrder::Lexicographic => out_box.sites(),
    };
    let mut a1: BTreeMap<MultiIndex, Vec<Rational>> = BTreeMap::new();
    let mut b1: BTreeMap<MultiIndex, Vec<Rational>> = BTreeMap::new();
    for n in sites {
        let a0 = f.a.get(&n).ok_or_else(|| Error::Halo(n.clone()))?;
        let b0 = f.b.get(&n).ok_or_else(|| Error::Halo(n.clone()))?;
        let mut bn = Vec::with_capacity(r);
        for j in 0..r {
            bn.push(match n.minus(j) {
                None => Rational::zero(),
                Some(down) => {
                    let d = &a1.get(&down).expect("marching order visits n - e_j first")[j];
                    if d.is_zero() {
                        return Err(Error::Degeneracy { site: down, channel: j });
                    }
                    &a0[j] * &b0[j] / d
                }
            });
        }
        let bsum: Rational = bn.iter().sum();
        let mut an = Vec::with_capacity(r);
        for j in 0..r {
            let up = n.plus(j);
            let up_sum = f.b_sum(&up).ok_or_else(|| Error::Halo(up.clone()))?;
            an.push(&a0[j] + up_sum - &bsum);
        }
        a1.insert(n.clone(), an);
        b1.insert(n, bn);
    }
    Ok(ABField {
        t: f.t + 1,
        lambda: f.lambda.clone(),
        lattice: out_box,
        a: a1,
        b: b1,
    })
}

/// Residuals of the two-time evolution equations between `now` and `next`.
pub fn verify_dgtoda(now: &ABField, next: &ABField) -> ResidualSet {
    let mut out = ResidualSet::new();
    let r = now.r();
    for n in next.lattice.sites() {
        let (Some(a1), Some(b1s)) = (next.a.get(&n), next.b_sum(&n)) else {
            continue;
        };
        for j in 0..r {
            let (Some(a0), Some(up)) = (now.a.get(&n), now.b_sum(&n.plus(j))) else {
                continue;
            };
            out.record(|| format!("sum {n} j={}", j + 1), &(&a1[j] + &b1s - &a0[j] - up));
            if let Some(down) = n.minus(j) {
                if let Some(ad) = next.a.get(&down) {
                    let lhs = &ad[j] * &next.b[&n][j];
                    let rhs = &a0[j] * &now.b[&n][j];
                    out.record(|| format!("product {n} j={}", j + 1), &(lhs - rhs));
                }
            }
        }
    }
    out
}

/// Residuals of the discrete multiple KP relations between `now` and `next`.
pub fn verify_mkp(now: &ABField, next: &ABField) -> ResidualSet {
    let mut out = ResidualSet::new();
    let r = now.r();
    for n in next.lattice.sites() {
        for i in 0..r {
            for j in (i + 1)..r {
                let (Some(a1), Some(anj), Some(ani)) = (next.a.get(&n), now.a.get(&n.plus(j)), now.a.get(&n.plus(i)))
                else {
                    continue;
                };
                let v = &a1[i] - &a1[j] - (&anj[i] - &ani[j]);
                out.record(|| format!("mkp-difference {n} i={} j={}", i + 1, j + 1), &v);
            }
        }
    }
    for n in now.lattice.sites() {
        for i in 0..r {
            for j in (i + 1)..r {
                let (Some(an), Some(ani), Some(anj)) = (now.a.get(&n), now.a.get(&n.plus(i)), now.a.get(&n.plus(j)))
                else {
                    continue;
                };
                let v = &an[i] * &ani[j] - &an[j] * &anj[i];
                out.record(|| format!("mkp-product {n} i={} j={}", i + 1, j + 1), &v);
            }
        }
    }
    out
}

fn check_pair(spec: &MomentSpec, n: &MultiIndex, i: usize, j: usize) -> Result<()> {
    if n.r() != spec.r() || i >= spec.r() || j >= spec.r() || i == j {
        return Err(Error::Dimension(format!(
            "channels ({}, {}) at {n} for r = {}",
            i + 1,
            j + 1,
            spec.r()
        )));
    }
    Ok(())
}

/// Discrete Hirota–Miwa residual at `lambda = 0`, with the pair oriented `i < j`:
/// `tau^t_{n+e_i+e_j} tau^{t+1}_n - tau^t_{n+e_i} tau^{t+1}_{n+e_j} + tau^t_{n+e_j} tau^{t+1}_{n+e_i}`.
pub fn hirota_miwa_residual(spec: &MomentSpec, n: &MultiIndex, i: usize, j: usize, t: usize) -> Result<Rational> {
    check_pair(spec, n, i, j)?;
    let (i, j) = (i.min(j), i.max(j));
    let top = n.plus(i).plus(j);
    let (now, next) = tables(spec, t, &Rational::zero(), tau_order(&top))?;
    Ok(tau(&now, &top)? * tau(&next, n)? - tau(&now, &n.plus(i))? * tau(&next, &n.plus(j))?
        + tau(&now, &n.plus(j))? * tau(&next, &n.plus(i))?)
}

/// `tau^{t+1}_n tau^{t-1}_n - (tau^t_n)^2 - sum_k tau^{t-1}_{n+e_k} tau^{t+1}_{n-e_k}` at `lambda = 0`, `t >= 1`.
pub fn dbilinear_residual(spec: &MomentSpec, n: &MultiIndex, t: usize) -> Result<Rational> {
    if t == 0 {
        return Err(Error::invalid("the discrete bilinear form needs t >= 1"));
    }
    if n.r() != spec.r() {
        return Err(Error::Dimension(format!("{n} for r = {}", spec.r())));
    }
    let mut order = tau_order(n);
    for k in 0..n.r() {
        order = order.max(tau_order(&n.plus(k)));
    }
    let zero = Rational::zero();
    let prev = spec.discrete_table(t - 1, &zero, order + 2)?;
    let now = shift_moments_discrete(&prev, &zero)?;
    let next = shift_moments_discrete(&now, &zero)?;
    let tn = tau(&now, n)?;
    let mut res = tau(&next, n)? * tau(&prev, n)? - &tn * &tn;
    for k in 0..n.r() {
        if let Some(down) = n.minus(k) {
            res -= tau(&prev, &n.plus(k))? * tau(&next, &down)?;
        }
    }
    Ok(res)
}
