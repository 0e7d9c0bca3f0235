//! Multi-indices `n = (n_1, ..., n_r)` and finite boxes of them.
//!
//! Channels are 0-based in the API. Text formats (display, JSON keys, CSV)
//! use 1-based channel numbers.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<usize>);

impl MultiIndex {
    pub fn new(parts: Vec<usize>) -> Self {
        MultiIndex(parts)
    }

    pub fn zero(r: usize) -> Self {
        MultiIndex(vec![0; r])
    }

    pub fn unit(r: usize, k: usize) -> Self {
        let mut v = vec![0; r];
        v[k] = 1;
        MultiIndex(v)
    }

    pub fn r(&self) -> usize {
        self.0.len()
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, k: usize) -> usize {
        self.0[k]
    }

    /// `|n|`
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn max_part(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// `n + e_k`
    pub fn plus(&self, k: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[k] += 1;
        MultiIndex(v)
    }

    /// `n − e_k`, or `None` when `n_k = 0`.
    pub fn minus(&self, k: usize) -> Option<MultiIndex> {
        let mut v = self.0.clone();
        v[k] = v[k].checked_sub(1)?;
        Some(MultiIndex(v))
    }

    pub fn plus_n(&self, k: usize, by: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[k] += by;
        MultiIndex(v)
    }

    /// Comma-separated parts, as used in JSON keys: `"1,2"`.
    pub fn key(&self) -> String {
        self.0.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(v: Vec<usize>) -> Self {
        MultiIndex(v)
    }
}

impl<const R: usize> From<[usize; R]> for MultiIndex {
    fn from(v: [usize; R]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.key())
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    /// Accepts `"1,2"` or `"(1,2)"`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('(').trim_end_matches(')');
        let parts = t
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad multi-index {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MultiIndex(parts))
    }
}

/// The box `{n : 0 <= n_k < extents[k]}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBox {
    extents: Vec<usize>,
}

impl LatticeBox {
    pub fn new(extents: Vec<usize>) -> Self {
        LatticeBox { extents }
    }

    pub fn cube(r: usize, side: usize) -> Self {
        LatticeBox::new(vec![side; r])
    }

    pub fn r(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn is_empty(&self) -> bool {
        self.extents.contains(&0)
    }

    pub fn len(&self) -> usize {
        if self.extents.is_empty() {
            0
        } else {
            self.extents.iter().product()
        }
    }

    pub fn contains(&self, n: &MultiIndex) -> bool {
        n.r() == self.r() && n.parts().iter().zip(&self.extents).all(|(a, e)| a < e)
    }

    /// Every extent reduced by `by` (saturating at zero).
    pub fn shrink(&self, by: usize) -> LatticeBox {
        LatticeBox::new(self.extents.iter().map(|e| e.saturating_sub(by)).collect())
    }

    /// Every extent grown by `by`.
    pub fn grow(&self, by: usize) -> LatticeBox {
        LatticeBox::new(self.extents.iter().map(|e| e + by).collect())
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> Vec<MultiIndex> {
        if self.is_empty() || self.extents.is_empty() {
            return Vec::new();
        }
        let mut out = Vec::with_capacity(self.len());
        let mut cur = vec![0; self.r()];
        loop {
            out.push(MultiIndex(cur.clone()));
            let mut k = self.r();
            loop {
                if k == 0 {
                    return out;
                }
                k -= 1;
                cur[k] += 1;
                if cur[k] < self.extents[k] {
                    break;
                }
                cur[k] = 0;
            }
        }
    }

    /// Sites grouped by shells of constant `|n|`, lexicographic within a shell.
    pub fn shells(&self) -> Vec<Vec<MultiIndex>> {
        let sites = self.sites();
        let max = sites.iter().map(MultiIndex::total).max().unwrap_or(0);
        let mut shells = vec![Vec::new(); if sites.is_empty() { 0 } else { max + 1 }];
        for s in sites {
            shells[s.total()].push(s);
        }
        shells
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic() {
        let n = MultiIndex::from([1, 0]);
        assert_eq!(n.total(), 1);
        assert_eq!(n.plus(1), MultiIndex::from([1, 1]));
        assert_eq!(n.minus(0), Some(MultiIndex::zero(2)));
        assert_eq!(n.minus(1), None);
        assert_eq!(n.to_string(), "(1,0)");
        assert_eq!("(3,4)".parse::<MultiIndex>().unwrap(), MultiIndex::from([3, 4]));
        assert!("a,b".parse::<MultiIndex>().is_err());
    }

    #[test]
    fn box_iteration() {
        let b = LatticeBox::new(vec![2, 3]);
        let sites = b.sites();
        assert_eq!(sites.len(), 6);
        assert_eq!(sites[1], MultiIndex::from([0, 1]));
        let shells = b.shells();
        assert_eq!(shells.len(), 4);
        assert_eq!(shells[1], vec![MultiIndex::from([0, 1]), MultiIndex::from([1, 0])]);
        assert!(b.shrink(2).is_empty());
        assert!(b.shrink(2).sites().is_empty());
        assert!(b.contains(&MultiIndex::from([1, 2])));
        assert!(!b.contains(&MultiIndex::from([2, 0])));
    }
}
