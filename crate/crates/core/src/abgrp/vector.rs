use std::fmt;

use serde::{Deserialize, Serialize};

use crate::int::Int;

/// Sparse integer vector: strictly increasing indices, no stored zeros.
#[derive(Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SparseVec {
    entries: Vec<(usize, Int)>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec { entries: Vec::new() }
    }

    pub fn unit(i: usize) -> Self {
        SparseVec { entries: vec![(i, Int::ONE)] }
    }

    pub fn single(i: usize, v: Int) -> Self {
        if v.is_zero() {
            SparseVec::new()
        } else {
            SparseVec { entries: vec![(i, v)] }
        }
    }

    /// Builds from unsorted entries, summing duplicates.
    pub fn from_entries<I: IntoIterator<Item = (usize, Int)>>(it: I) -> Self {
        let mut e: Vec<(usize, Int)> = it.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        e.sort_by_key(|(i, _)| *i);
        let mut out: Vec<(usize, Int)> = Vec::with_capacity(e.len());
        for (i, v) in e {
            match out.last_mut() {
                Some((j, w)) if *j == i => *w += &v,
                _ => out.push((i, v)),
            }
        }
        out.retain(|(_, v)| !v.is_zero());
        SparseVec { entries: out }
    }

    /// Builds from entries already sorted by index and nonzero.
    pub fn from_sorted(entries: Vec<(usize, Int)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|(_, v)| !v.is_zero()));
        SparseVec { entries }
    }

    pub fn from_dense<T: Into<Int> + Clone>(d: &[T]) -> Self {
        SparseVec {
            entries: d
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.clone().into()))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    pub fn to_dense(&self, len: usize) -> Vec<Int> {
        let mut d = vec![Int::ZERO; len];
        for (i, v) in &self.entries {
            d[*i] = v.clone();
        }
        d
    }

    pub fn entries(&self) -> &[(usize, Int)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &Int)> {
        self.entries.iter().map(|(i, v)| (*i, v))
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> Int {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => self.entries[k].1.clone(),
            Err(_) => Int::ZERO,
        }
    }

    pub fn leading(&self) -> Option<(usize, &Int)> {
        self.entries.first().map(|(i, v)| (*i, v))
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|(i, _)| *i)
    }

    pub fn scale(&self, c: &Int) -> SparseVec {
        if c.is_zero() {
            return SparseVec::new();
        }
        SparseVec { entries: self.entries.iter().map(|(i, v)| (*i, v * c)).collect() }
    }

    pub fn neg(&self) -> SparseVec {
        SparseVec { entries: self.entries.iter().map(|(i, v)| (*i, -v)).collect() }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &SparseVec, c: &Int) -> SparseVec {
        if c.is_zero() || other.is_zero() {
            return self.clone();
        }
        let mut out = Vec::with_capacity(self.entries.len() + other.entries.len());
        let (mut a, mut b) = (0, 0);
        let (x, y) = (&self.entries, &other.entries);
        while a < x.len() || b < y.len() {
            if b == y.len() || (a < x.len() && x[a].0 < y[b].0) {
                out.push(x[a].clone());
                a += 1;
            } else if a == x.len() || y[b].0 < x[a].0 {
                out.push((y[b].0, &y[b].1 * c));
                b += 1;
            } else {
                let v = &x[a].1 + &(&y[b].1 * c);
                if !v.is_zero() {
                    out.push((x[a].0, v));
                }
                a += 1;
                b += 1;
            }
        }
        SparseVec { entries: out }
    }

    pub fn add(&self, other: &SparseVec) -> SparseVec {
        self.add_scaled(other, &Int::ONE)
    }

    pub fn sub(&self, other: &SparseVec) -> SparseVec {
        self.add_scaled(other, &Int::from(-1))
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: &Int, other: &SparseVec, b: &Int) -> SparseVec {
        self.scale(a).add_scaled(other, b)
    }

    pub fn shift(&self, offset: usize) -> SparseVec {
        SparseVec { entries: self.entries.iter().map(|(i, v)| (i + offset, v.clone())).collect() }
    }

    /// Keeps entries with index in `lo..hi`, re-based to start at zero.
    pub fn slice(&self, lo: usize, hi: usize) -> SparseVec {
        SparseVec {
            entries: self
                .entries
                .iter()
                .filter(|(i, _)| *i >= lo && *i < hi)
                .map(|(i, v)| (i - lo, v.clone()))
                .collect(),
        }
    }

    /// Re-indexes through `f`, summing collisions; `None` drops the entry.
    pub fn remap<F: Fn(usize) -> Option<usize>>(&self, f: F) -> SparseVec {
        SparseVec::from_entries(self.entries.iter().filter_map(|(i, v)| f(*i).map(|j| (j, v.clone()))))
    }

    pub fn push(&mut self, i: usize, v: Int) {
        if v.is_zero() {
            return;
        }
        debug_assert!(self.entries.last().map_or(true, |(j, _)| *j < i));
        self.entries.push((i, v));
    }

    /// Replaces entry `i` with `v`.
    pub fn set(&mut self, i: usize, v: Int) {
        match self.entries.binary_search_by_key(&i, |(j, _)| *j) {
            Ok(k) => {
                if v.is_zero() {
                    self.entries.remove(k);
                } else {
                    self.entries[k].1 = v;
                }
            }
            Err(k) => {
                if !v.is_zero() {
                    self.entries.insert(k, (i, v));
                }
            }
        }
    }

    pub fn dot(&self, other: &SparseVec) -> Int {
        let (mut a, mut b) = (0, 0);
        let mut s = Int::ZERO;
        let (x, y) = (&self.entries, &other.entries);
        while a < x.len() && b < y.len() {
            match x[a].0.cmp(&y[b].0) {
                std::cmp::Ordering::Less => a += 1,
                std::cmp::Ordering::Greater => b += 1,
                std::cmp::Ordering::Equal => {
                    s += &(&x[a].1 * &y[b].1);
                    a += 1;
                    b += 1;
                }
            }
        }
        s
    }
}

impl fmt::Debug for SparseVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, (i, v)) in self.entries.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}:{v}")?;
        }
        write!(f, "}}")
    }
}

/// Sum of `c_k * vecs[k]` over the sparse coefficient vector `coeffs`.
pub fn linear_combination(vecs: &[SparseVec], coeffs: &SparseVec) -> SparseVec {
    let mut acc: Vec<(usize, Int)> = Vec::new();
    for (k, c) in coeffs.iter() {
        for (i, v) in vecs[k].iter() {
            acc.push((i, v * c));
        }
    }
    SparseVec::from_entries(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_cancel() {
        let a = SparseVec::from_dense(&[1i64, 0, 2, 3]);
        let b = SparseVec::from_dense(&[0i64, 5, 1, 3]);
        let c = a.add_scaled(&b, &Int::from(-1));
        assert_eq!(c.to_dense(4), vec![1.into(), (-5).into(), 1.into(), Int::ZERO]);
        assert_eq!(c.nnz(), 3);
        assert_eq!(a.dot(&b), Int::from(11));
    }

    #[test]
    fn from_entries_sums_duplicates() {
        let v = SparseVec::from_entries(vec![(3, Int::from(1)), (1, Int::from(2)), (3, Int::from(-1))]);
        assert_eq!(v, SparseVec::single(1, Int::from(2)));
    }
}
