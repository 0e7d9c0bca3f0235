//! Moment data `mu[i][j] = L_j[x^i]` for a system of `r` measures.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{format_rational, from_usize, parse_rational, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum MomentKind {
    /// Weights `x^delta exp(-x (t + kappa_j))` on the half line.
    Laguerre { delta: u32, kappa: Vec<Rational> },
    /// Literal moment rows, one per measure.
    Explicit { values: Vec<Vec<Rational>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentSpec {
    r: usize,
    kind: MomentKind,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    r: usize,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    delta: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kappa: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    moments: Option<Vec<Vec<String>>>,
}

impl MomentSpec {
    pub fn laguerre(delta: u32, kappa: Vec<Rational>) -> Result<Self> {
        if kappa.is_empty() {
            return Err(Error::invalid("kappa must have at least one entry"));
        }
        for (i, a) in kappa.iter().enumerate() {
            if !a.is_positive() {
                return Err(Error::invalid(format!("kappa[{i}] = {a} is not positive")));
            }
            if kappa[..i].contains(a) {
                return Err(Error::invalid(format!("kappa[{i}] = {a} repeats an earlier entry")));
            }
        }
        Ok(MomentSpec {
            r: kappa.len(),
            kind: MomentKind::Laguerre { delta, kappa },
        })
    }

    pub fn explicit(values: Vec<Vec<Rational>>) -> Result<Self> {
        let len = values.first().map(Vec::len).unwrap_or(0);
        if values.is_empty() || len == 0 {
            return Err(Error::invalid("explicit moments must be a non-empty r x (order+1) grid"));
        }
        if values.iter().any(|row| row.len() != len) {
            return Err(Error::invalid("explicit moment rows must have equal length"));
        }
        Ok(MomentSpec {
            r: values.len(),
            kind: MomentKind::Explicit { values },
        })
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn kind(&self) -> &MomentKind {
        &self.kind
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_value(v)
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let raw: RawSpec = serde_json::from_value(v).map_err(|e| Error::Parse(e.to_string()))?;
        let spec = match raw.kind.as_str() {
            "laguerre" => {
                let kappa = raw
                    .kappa
                    .ok_or_else(|| Error::invalid("laguerre spec needs \"kappa\""))?
                    .iter()
                    .map(|s| parse_rational(s))
                    .collect::<Result<Vec<_>>>()?;
                Self::laguerre(raw.delta.unwrap_or(0), kappa)?
            }
            "explicit" => {
                let values = raw
                    .moments
                    .ok_or_else(|| Error::invalid("explicit spec needs \"moments\""))?
                    .iter()
                    .map(|row| row.iter().map(|s| parse_rational(s)).collect())
                    .collect::<Result<Vec<Vec<_>>>>()?;
                Self::explicit(values)?
            }
            other => return Err(Error::invalid(format!("unknown moment kind {other:?}"))),
        };
        if spec.r != raw.r {
            return Err(Error::invalid(format!(
                "\"r\" is {} but the data describes {} measures",
                raw.r, spec.r
            )));
        }
        Ok(spec)
    }

    pub fn to_value(&self) -> serde_json::Value {
        let raw = match &self.kind {
            MomentKind::Laguerre { delta, kappa } => RawSpec {
                r: self.r,
                kind: "laguerre".into(),
                delta: Some(*delta),
                kappa: Some(kappa.iter().map(format_rational).collect()),
                moments: None,
            },
            MomentKind::Explicit { values } => RawSpec {
                r: self.r,
                kind: "explicit".into(),
                delta: None,
                kappa: None,
                moments: Some(
                    values
                        .iter()
                        .map(|row| row.iter().map(format_rational).collect())
                        .collect(),
                ),
            },
        };
        serde_json::to_value(raw).expect("plain struct serializes")
    }

    /// Moments at continuous time `t` (Laguerre only for `t != 0`).
    pub fn table_at(&self, t: &Rational, order: usize) -> Result<MomentTable> {
        match &self.kind {
            MomentKind::Laguerre { delta, kappa } => laguerre_moments(*delta, kappa, t, order),
            MomentKind::Explicit { .. } if t.is_zero() => require_order(self, order),
            MomentKind::Explicit { .. } => Err(Error::invalid(
                "explicit moments cannot be evaluated at nonzero continuous time",
            )),
        }
    }

    /// Moments at discrete time `t` for constant shift parameter `lambda`,
    /// with at least `order` entries per measure.
    pub fn discrete_table(&self, t: usize, lambda: &Rational, order: usize) -> Result<MomentTable> {
        let mut table = require_order(self, order + t)?;
        for _ in 0..t {
            table = shift_moments_discrete(&table, lambda)?;
        }
        Ok(table)
    }
}

/// Dense table `mu[i][j]`, `0 <= i <= order`, `0 <= j < r`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    /// `entries[j][i]`
    entries: Vec<Vec<Rational>>,
    order: usize,
    t_label: Rational,
}

impl MomentTable {
    pub fn new(entries: Vec<Vec<Rational>>, t_label: Rational) -> Result<Self> {
        let len = entries.first().map(Vec::len).unwrap_or(0);
        if len == 0 || entries.iter().any(|row| row.len() != len) {
            return Err(Error::invalid("moment table must be a non-empty rectangular grid"));
        }
        Ok(MomentTable {
            entries,
            order: len - 1,
            t_label,
        })
    }

    pub fn r(&self) -> usize {
        self.entries.len()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn t_label(&self) -> &Rational {
        &self.t_label
    }

    /// `mu_{i,j}` with bounds checking.
    pub fn get(&self, i: usize, j: usize) -> Result<&Rational> {
        if j >= self.r() {
            return Err(Error::Dimension(format!("measure {j} of {}", self.r())));
        }
        self.require(i)?;
        Ok(&self.entries[j][i])
    }

    /// `mu_{i,j}`; callers must have checked the order.
    pub(crate) fn mu(&self, i: usize, j: usize) -> &Rational {
        &self.entries[j][i]
    }

    pub fn row(&self, j: usize) -> &[Rational] {
        &self.entries[j]
    }

    pub fn require(&self, needed: usize) -> Result<()> {
        if needed > self.order {
            Err(Error::InsufficientMoments {
                needed,
                available: self.order,
            })
        } else {
            Ok(())
        }
    }

    /// The single-measure table of measure `j`.
    pub fn marginal(&self, j: usize) -> MomentTable {
        MomentTable {
            entries: vec![self.entries[j].clone()],
            order: self.order,
            t_label: self.t_label.clone(),
        }
    }

    /// The first `order + 1` moments of every measure.
    pub fn truncate(&self, order: usize) -> Result<MomentTable> {
        self.require(order)?;
        Ok(MomentTable {
            entries: self.entries.iter().map(|row| row[..=order].to_vec()).collect(),
            order,
            t_label: self.t_label.clone(),
        })
    }
}

/// `mu_{i,j} = (i+delta)! / (t+kappa_j)^(i+delta+1)`.
pub fn laguerre_moments(delta: u32, kappa: &[Rational], t: &Rational, order: usize) -> Result<MomentTable> {
    let mut entries = Vec::with_capacity(kappa.len());
    for (j, k) in kappa.iter().enumerate() {
        let s = t + k;
        if !s.is_positive() {
            return Err(Error::DivergentMeasure {
                measure: j + 1,
                value: format_rational(&s),
            });
        }
        let inv = s.recip();
        // delta! / s^(delta+1)
        let mut m = inv.clone();
        for d in 1..=delta as usize {
            m = m * from_usize(d) * &inv;
        }
        let mut row = Vec::with_capacity(order + 1);
        row.push(m.clone());
        for i in 0..order {
            m = m * from_usize(i + delta as usize + 1) * &inv;
            row.push(m.clone());
        }
        entries.push(row);
    }
    MomentTable::new(entries, t.clone())
}

/// `mu'_{i,j} = mu_{i+1,j} - lambda mu_{i,j}` (Christoffel step `x - lambda`).
pub fn shift_moments_discrete(table: &MomentTable, lambda: &Rational) -> Result<MomentTable> {
    if table.order == 0 {
        return Err(Error::InsufficientMoments { needed: 1, available: 0 });
    }
    let entries = table
        .entries
        .iter()
        .map(|row| (0..table.order).map(|i| &row[i + 1] - lambda * &row[i]).collect())
        .collect();
    MomentTable::new(entries, &table.t_label + Rational::one())
}

/// `d/dt mu_{i,j} = -mu_{i+1,j}`.
pub fn differentiate_moments(table: &MomentTable) -> Result<MomentTable> {
    if table.order == 0 {
        return Err(Error::InsufficientMoments { needed: 1, available: 0 });
    }
    let entries = table
        .entries
        .iter()
        .map(|row| row[1..].iter().map(|x| -x).collect())
        .collect();
    MomentTable::new(entries, table.t_label.clone())
}

/// A table at `t = 0` with order at least `needed`.
pub fn require_order(spec: &MomentSpec, needed: usize) -> Result<MomentTable> {
    match &spec.kind {
        MomentKind::Laguerre { delta, kappa } => laguerre_moments(*delta, kappa, &Rational::zero(), needed),
        MomentKind::Explicit { values } => {
            let available = values[0].len() - 1;
            if available < needed {
                return Err(Error::InsufficientMoments { needed, available });
            }
            MomentTable::new(values.clone(), Rational::zero())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};
    use proptest::prelude::*;

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn laguerre_examples() {
        let m = laguerre_moments(0, &[int(1), int(2)], &int(0), 3).unwrap();
        assert_eq!(m.get(0, 0).unwrap(), &int(1));
        assert_eq!(m.get(2, 1).unwrap(), &rat(1, 4));
        let m = laguerre_moments(0, &[int(1)], &int(1), 2).unwrap();
        assert_eq!(m.get(1, 0).unwrap(), &rat(1, 4));
        assert!(matches!(
            laguerre_moments(0, &[int(1)], &int(-1), 2),
            Err(Error::DivergentMeasure { measure: 1, .. })
        ));
    }

    #[test]
    fn shift_examples() {
        let t = MomentTable::new(vec![ints(&[1, 1, 2, 6])], int(0)).unwrap();
        let s = shift_moments_discrete(&t, &int(0)).unwrap();
        assert_eq!(s.row(0), ints(&[1, 2, 6]).as_slice());
        assert_eq!(s.t_label(), &int(1));
        let t = MomentTable::new(vec![ints(&[1, 1, 2])], int(0)).unwrap();
        assert_eq!(shift_moments_discrete(&t, &int(1)).unwrap().row(0), ints(&[0, 1]).as_slice());
        let t0 = MomentTable::new(vec![ints(&[1])], int(0)).unwrap();
        assert!(matches!(
            shift_moments_discrete(&t0, &int(0)),
            Err(Error::InsufficientMoments { .. })
        ));
    }

    #[test]
    fn shift_is_delta_increment() {
        let k = vec![int(1), rat(5, 2)];
        let a = shift_moments_discrete(&laguerre_moments(0, &k, &int(0), 6).unwrap(), &int(0)).unwrap();
        let b = laguerre_moments(1, &k, &int(0), 5).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn differentiate_examples() {
        let t = MomentTable::new(vec![ints(&[1, 1, 2, 6])], int(0)).unwrap();
        assert_eq!(differentiate_moments(&t).unwrap().row(0), ints(&[-1, -2, -6]).as_slice());
        let l = laguerre_moments(0, &[int(1)], &int(0), 3).unwrap();
        assert_eq!(differentiate_moments(&l).unwrap().get(1, 0).unwrap(), &int(-2));
        let t = MomentTable::new(vec![ints(&[1, 1, 2, 6, 24])], int(0)).unwrap();
        let d2 = differentiate_moments(&differentiate_moments(&t).unwrap()).unwrap();
        assert_eq!(d2.row(0), ints(&[2, 6, 24]).as_slice());
    }

    #[test]
    fn require_order_explicit() {
        let spec = MomentSpec::explicit(vec![ints(&[1, 1, 2])]).unwrap();
        assert!(require_order(&spec, 2).is_ok());
        assert_eq!(
            require_order(&spec, 4),
            Err(Error::InsufficientMoments { needed: 4, available: 2 })
        );
        let lag = MomentSpec::laguerre(0, vec![int(1)]).unwrap();
        assert_eq!(require_order(&lag, 9).unwrap().order(), 9);
    }

    #[test]
    fn spec_validation() {
        assert!(MomentSpec::laguerre(0, vec![int(1), int(1)]).is_err());
        assert!(MomentSpec::laguerre(0, vec![int(0)]).is_err());
        assert!(MomentSpec::explicit(vec![ints(&[1, 2]), ints(&[1])]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = r#"{"r":2,"kind":"explicit","moments":[["1","1","2"],["1/2","1/4","1/4"]]}"#;
        let spec = MomentSpec::from_json(s).unwrap();
        assert_eq!(serde_json::to_string(&spec.to_value()).unwrap(), s);
        let s = r#"{"r":2,"kind":"laguerre","delta":0,"kappa":["1","2"]}"#;
        let spec = MomentSpec::from_json(s).unwrap();
        assert_eq!(serde_json::to_string(&spec.to_value()).unwrap(), s);
        assert!(MomentSpec::from_json(r#"{"r":3,"kind":"laguerre","delta":0,"kappa":["1","2"]}"#).is_err());
        assert!(MomentSpec::from_json(r#"{"r":1,"kind":"hermite"}"#).is_err());
    }

    proptest! {
        #[test]
        fn laguerre_positive(delta in 0u32..4, kn in 1i64..20, kd in 1i64..6, tn in 0i64..10, td in 1i64..6) {
            let m = laguerre_moments(delta, &[rat(kn, kd)], &rat(tn, td), 6).unwrap();
            prop_assert!(m.row(0).iter().all(|x| x.is_positive()));
        }

        /// d/dt of (i+d)!/(t+k)^(i+d+1) is -(i+d+1)!/(t+k)^(i+d+2) by the quotient rule.
        #[test]
        fn derivative_matches_quotient_rule(
            delta in 0u32..4, kn in 1i64..20, kd in 1i64..6, tn in 0i64..10, td in 1i64..6, i in 0usize..5,
        ) {
            let (k, t) = (rat(kn, kd), rat(tn, td));
            let m = laguerre_moments(delta, std::slice::from_ref(&k), &t, 6).unwrap();
            let d = differentiate_moments(&m).unwrap();
            let p = i + delta as usize;
            let fact = (1..=p).fold(Rational::one(), |a, x| a * from_usize(x));
            let s = &t + &k;
            let mut denom = Rational::one();
            for _ in 0..p + 2 { denom *= &s; }
            let quotient = -(fact * from_usize(p + 1)) / denom;
            prop_assert_eq!(d.get(i, 0).unwrap(), &quotient);
        }
    }
}
