//! Incremental row echelon form of an integer lattice.
//!
//! Vectors are inserted one at a time and reduced against existing pivot rows
//! with gcd combinations, so the stored rows always form an echelon basis of
//! the span of everything inserted. With tracking enabled every row carries
//! its expression in terms of the inserted vectors, which yields kernels and
//! solutions of linear systems.

use std::collections::{BTreeMap, HashMap};

use super::vector::SparseVec;
use crate::int::Int;

#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<SparseVec>,
    tags: Vec<SparseVec>,
    pivots: HashMap<usize, usize>,
    singleton: HashMap<usize, usize>,
    track: bool,
    inserted: usize,
}

/// Outcome of reducing a vector against the lattice.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// Remainder after reduction.
    pub residual: SparseVec,
    /// Coefficients over inserted vectors with `v - residual = sum c_k input_k`.
    pub coeffs: SparseVec,
}

impl Echelon {
    pub fn new(track: bool) -> Self {
        Echelon { track, ..Default::default() }
    }

    pub fn from_vectors<'a, I: IntoIterator<Item = &'a SparseVec>>(it: I, track: bool) -> (Self, Vec<SparseVec>) {
        let mut e = Echelon::new(track);
        let mut kernel = Vec::new();
        for v in it {
            if let Some(k) = e.insert(v.clone()) {
                kernel.push(k);
            }
        }
        (e, kernel)
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    /// Leading coefficient at pivot position `p`, if any.
    pub fn pivot_at(&self, p: usize) -> Option<&Int> {
        self.pivots.get(&p).map(|&r| self.rows[r].leading().unwrap().1)
    }

    /// Inserts `v`; with tracking, returns the relation among inserted vectors
    /// when `v` lies in the span of the previous ones.
    pub fn insert(&mut self, v: SparseVec) -> Option<SparseVec> {
        let idx = self.inserted;
        self.inserted += 1;
        let tag = if self.track { SparseVec::unit(idx) } else { SparseVec::new() };
        self.insert_tagged(v, tag)
    }

    fn insert_tagged(&mut self, mut v: SparseVec, mut tag: SparseVec) -> Option<SparseVec> {
        loop {
            let (p, b) = match v.leading() {
                None => return if self.track { Some(tag) } else { None },
                Some((p, b)) => (p, b.clone()),
            };
            let r = match self.pivots.get(&p) {
                Some(&r) => r,
                None => {
                    if b.is_negative() {
                        v = v.neg();
                        tag = tag.neg();
                    }
                    let (v, tag) = self.reduce_tail(v, tag);
                    let r = self.rows.len();
                    if v.nnz() == 1 {
                        self.singleton.insert(p, r);
                    }
                    self.pivots.insert(p, r);
                    self.rows.push(v);
                    self.tags.push(tag);
                    return None;
                }
            };
            let a = self.rows[r].leading().unwrap().1.clone();
            if a.divides(&b) {
                let q = -b.div_exact(&a);
                v = v.add_scaled(&self.rows[r], &q);
                if self.track {
                    tag = tag.add_scaled(&self.tags[r], &q);
                }
                continue;
            }
            let (g, s, t) = a.ext_gcd(&b);
            let ag = a.div_exact(&g);
            let bg = -b.div_exact(&g);
            let row = self.rows[r].combine(&s, &v, &t);
            let rest = self.rows[r].combine(&bg, &v, &ag);
            if self.track {
                let rtag = self.tags[r].combine(&s, &tag, &t);
                tag = self.tags[r].combine(&bg, &tag, &ag);
                self.tags[r] = rtag;
            }
            let was_singleton = self.rows[r].nnz() == 1;
            let old_tag = std::mem::take(&mut self.tags[r]);
            let (row, rtag) = self.reduce_tail(row, old_tag);
            self.tags[r] = rtag;
            if was_singleton && row.nnz() != 1 {
                self.singleton.remove(&p);
            } else if row.nnz() == 1 {
                self.singleton.insert(p, r);
            }
            self.rows[r] = row;
            v = rest;
        }
    }

    /// Reduces non-leading entries modulo single-entry pivot rows.
    fn reduce_tail(&self, v: SparseVec, tag: SparseVec) -> (SparseVec, SparseVec) {
        if self.singleton.is_empty() || v.nnz() <= 1 {
            return (v, tag);
        }
        let lead = v.leading().unwrap().0;
        let mut out = v.clone();
        let mut tag = tag;
        for (i, c) in v.iter() {
            if i == lead {
                continue;
            }
            if let Some(&r) = self.singleton.get(&i) {
                let m = self.rows[r].leading().unwrap().1;
                let (q, _) = c.div_rem_euclid(m);
                if !q.is_zero() {
                    let nq = -q;
                    out = out.add_scaled(&self.rows[r], &nq);
                    if self.track {
                        tag = tag.add_scaled(&self.tags[r], &nq);
                    }
                }
            }
        }
        (out, tag)
    }

    /// Canonical representative of `v` modulo the lattice: pivot entries are
    /// brought into `[0, a)`, other entries are untouched.
    pub fn normal_form(&self, v: &SparseVec) -> SparseVec {
        self.normal_form_tracked(v).residual
    }

    pub fn normal_form_tracked(&self, v: &SparseVec) -> Reduction {
        let mut work: BTreeMap<usize, Int> = v.iter().map(|(i, c)| (i, c.clone())).collect();
        let mut used: Vec<(usize, Int)> = Vec::new();
        let mut cursor = 0usize;
        loop {
            let (p, b) = match work.range(cursor..).next() {
                None => break,
                Some((p, b)) => (*p, b.clone()),
            };
            if let Some(&r) = self.pivots.get(&p) {
                let a = self.rows[r].leading().unwrap().1;
                let (q, _) = b.div_rem_euclid(a);
                if !q.is_zero() {
                    for (i, c) in self.rows[r].iter() {
                        let e = work.entry(i).or_insert(Int::ZERO);
                        *e -= &(c * &q);
                        if e.is_zero() {
                            work.remove(&i);
                        }
                    }
                    used.push((r, q));
                }
            }
            cursor = p + 1;
        }
        let residual = SparseVec::from_sorted(work.into_iter().collect());
        Reduction { residual, coeffs: self.combine_tags(&used) }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.normal_form(v).is_zero()
    }

    fn combine_tags(&self, used: &[(usize, Int)]) -> SparseVec {
        if !self.track || used.is_empty() {
            return SparseVec::new();
        }
        let mut acc = Vec::new();
        for (r, q) in used {
            for (i, c) in self.tags[*r].iter() {
                acc.push((i, c * q));
            }
        }
        SparseVec::from_entries(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(d: &[i64]) -> SparseVec {
        SparseVec::from_dense(d)
    }

    #[test]
    fn gcd_combination_keeps_lattice() {
        let (e, ker) = Echelon::from_vectors(&[v(&[4, 1]), v(&[6, 0]), v(&[2, 2])], true);
        assert_eq!(e.rank(), 2);
        assert_eq!(ker.len(), 1);
        let k = &ker[0];
        let s = v(&[4, 1]).scale(&k.get(0)).add(&v(&[6, 0]).scale(&k.get(1))).add(&v(&[2, 2]).scale(&k.get(2)));
        assert!(s.is_zero());
        assert!(e.contains(&v(&[2, -4])));
        assert!(!e.contains(&v(&[1, 0])));
    }

    #[test]
    fn reduce_expresses_members() {
        let inputs = [v(&[2, 0, 1]), v(&[0, 3, 1]), v(&[2, 3, 0])];
        let (e, _) = Echelon::from_vectors(&inputs, true);
        let target = v(&[4, 3, 3]);
        let red = e.normal_form_tracked(&target);
        assert!(red.residual.is_zero());
        let mut s = SparseVec::new();
        for (k, c) in red.coeffs.iter() {
            s = s.add_scaled(&inputs[k], c);
        }
        assert_eq!(s, target);
    }

    #[test]
    fn normal_form_is_canonical() {
        let (e, _) = Echelon::from_vectors(&[v(&[3, 1]), v(&[0, 5])], false);
        let a = e.normal_form(&v(&[7, 2]));
        let b = e.normal_form(&v(&[7, 2]).add(&v(&[3, 1]).scale(&Int::from(-4))).add(&v(&[0, 5]).scale(&Int::from(9))));
        assert_eq!(a, b);
    }
}
