//! Accumulator for exact identity residuals.

use num_traits::{Signed, Zero};

use crate::exact::{to_f64, MatrixQ, Poly, Rational};

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualFailure {
    pub label: String,
    pub magnitude: f64,
}

/// A family of residuals that should all be exactly zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualSet {
    count: usize,
    max_abs: f64,
    failures: Vec<ResidualFailure>,
}

impl ResidualSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn fail(&mut self, label: String, magnitude: f64) {
        // A nonzero rational can round to 0.0; keep failures visible.
        let magnitude = if magnitude == 0.0 { f64::MIN_POSITIVE } else { magnitude };
        self.max_abs = self.max_abs.max(magnitude);
        self.failures.push(ResidualFailure { label, magnitude });
    }

    pub fn record(&mut self, label: impl FnOnce() -> String, value: &Rational) {
        self.count += 1;
        if !value.is_zero() {
            self.fail(label(), to_f64(&value.abs()));
        }
    }

    pub fn record_poly(&mut self, label: impl FnOnce() -> String, p: &Poly) {
        self.count += 1;
        if !p.is_zero() {
            self.fail(label(), p.max_abs_coeff());
        }
    }

    pub fn record_polys<'a>(&mut self, label: impl Fn() -> String, ps: impl IntoIterator<Item = &'a Poly>) {
        for p in ps {
            self.record_poly(&label, p);
        }
    }

    pub fn record_matrix(&mut self, label: impl FnOnce() -> String, m: &MatrixQ) {
        self.count += 1;
        if !m.is_zero() {
            let mut mag: f64 = 0.0;
            for i in 0..m.rows() {
                for x in m.row(i) {
                    mag = mag.max(to_f64(&x.abs()));
                }
            }
            self.fail(label(), mag);
        }
    }

    pub fn merge(&mut self, other: ResidualSet) {
        self.count += other.count;
        self.max_abs = self.max_abs.max(other.max_abs);
        self.failures.extend(other.failures);
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    pub fn failures(&self) -> &[ResidualFailure] {
        &self.failures
    }

    pub fn all_zero(&self) -> bool {
        self.failures.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    #[test]
    fn tracks_failures() {
        let mut s = ResidualSet::new();
        s.record(|| "a".into(), &rat(0, 1));
        assert!(s.all_zero());
        s.record(|| "b".into(), &rat(-1, 2));
        let mut t = ResidualSet::new();
        t.record_poly(|| "p".into(), &Poly::zero());
        s.merge(t);
        assert_eq!(s.count(), 3);
        assert_eq!(s.max_abs(), 0.5);
        assert_eq!(s.failures()[0].label, "b");
    }
}
