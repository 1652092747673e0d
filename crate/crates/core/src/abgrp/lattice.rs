//! Tracked lattices modulo the relations of an ambient group.
//!
//! When the ambient is `(Z/p)^n` presented by the diagonal relations `p e_i`
//! with `p` prime, the lattice `pZ^n + span(inputs)` is handled exactly by
//! elimination over `F_p`; otherwise the relations are inserted into an
//! integer [`Echelon`].

use std::collections::HashMap;

use super::echelon::{Echelon, Reduction};
use super::group::FpAbGroup;
use super::vector::SparseVec;
use crate::int::Int;

type Row = Vec<(usize, u64)>;

/// `a - c * b` over `F_p`, both sorted by index.
fn axpy(a: &Row, c: u64, b: &Row, p: u64) -> Row {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let neg = |x: u64| (p - (c * x) % p) % p;
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i]);
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            let v = neg(b[j].1);
            if v != 0 {
                out.push((b[j].0, v));
            }
            j += 1;
        } else {
            let v = (a[i].1 + neg(b[j].1)) % p;
            if v != 0 {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

fn scale_row(a: &mut Row, c: u64, p: u64) {
    for e in a.iter_mut() {
        e.1 = e.1 * c % p;
    }
}

fn inverse(a: u64, p: u64) -> u64 {
    let (mut base, mut e, mut acc) = (a % p, p - 2, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    acc
}

fn to_row(v: &SparseVec, p: u64) -> Row {
    let m = Int::from(p as i64);
    v.iter()
        .filter_map(|(i, c)| {
            let r = c.rem_euclid(&m).to_i64().unwrap() as u64;
            (r != 0).then_some((i, r))
        })
        .collect()
}

fn to_sparse(r: &Row) -> SparseVec {
    SparseVec::from_sorted(r.iter().map(|&(i, c)| (i, Int::from(c as i64))).collect())
}

/// Row echelon form over `F_p` with tracked input combinations.
#[derive(Clone, Debug)]
pub struct ModEchelon {
    p: u64,
    rows: Vec<Row>,
    tags: Vec<Row>,
    pivots: HashMap<usize, usize>,
    inserted: usize,
}

impl ModEchelon {
    pub fn new(p: u64) -> Self {
        ModEchelon { p, rows: Vec::new(), tags: Vec::new(), pivots: HashMap::new(), inserted: 0 }
    }

    pub fn insert(&mut self, v: &SparseVec) -> Option<SparseVec> {
        let p = self.p;
        let idx = self.inserted;
        self.inserted += 1;
        let mut v = to_row(v, p);
        let mut tag: Row = vec![(idx, 1)];
        while let Some(&(lead, c)) = v.first() {
            match self.pivots.get(&lead) {
                Some(&r) => {
                    v = axpy(&v, c, &self.rows[r], p);
                    tag = axpy(&tag, c, &self.tags[r], p);
                }
                None => {
                    let inv = inverse(c, p);
                    scale_row(&mut v, inv, p);
                    scale_row(&mut tag, inv, p);
                    self.pivots.insert(lead, self.rows.len());
                    self.rows.push(v);
                    self.tags.push(tag);
                    return None;
                }
            }
        }
        Some(to_sparse(&tag))
    }

    pub fn normal_form_tracked(&self, v: &SparseVec) -> Reduction {
        let p = self.p;
        let mut v = to_row(v, p);
        let mut residual = Vec::new();
        let mut coeffs: Row = Vec::new();
        while let Some(&(lead, c)) = v.first() {
            match self.pivots.get(&lead) {
                Some(&r) => {
                    v = axpy(&v, c, &self.rows[r], p);
                    coeffs = axpy(&coeffs, p - c, &self.tags[r], p);
                }
                None => {
                    residual.push((lead, c));
                    v.remove(0);
                }
            }
        }
        Reduction { residual: to_sparse(&residual), coeffs: to_sparse(&coeffs) }
    }
}

/// Lattice spanned by inserted vectors together with an ambient's relations.
#[derive(Clone, Debug)]
pub enum Lattice {
    Int(Echelon),
    Mod(ModEchelon),
}

impl Lattice {
    /// Empty lattice modulo the relations of `g`; in the integer case the
    /// relations occupy the first `inserted()` input slots.
    pub fn for_group(g: &FpAbGroup) -> Self {
        match g.elementary_prime() {
            Some(p) => Lattice::Mod(ModEchelon::new(p)),
            None => {
                let mut e = Echelon::new(true);
                for r in g.relations() {
                    e.insert(r.clone());
                }
                Lattice::Int(e)
            }
        }
    }

    /// Prime `p` when working over `F_p`.
    pub fn modulus(&self) -> Option<u64> {
        match self {
            Lattice::Int(_) => None,
            Lattice::Mod(m) => Some(m.p),
        }
    }

    pub fn inserted(&self) -> usize {
        match self {
            Lattice::Int(e) => e.inserted(),
            Lattice::Mod(m) => m.inserted,
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Lattice::Int(e) => e.rank(),
            Lattice::Mod(m) => m.rows.len(),
        }
    }

    /// Inserts `v`; returns the relation among inputs when `v` is dependent.
    pub fn insert(&mut self, v: &SparseVec) -> Option<SparseVec> {
        match self {
            Lattice::Int(e) => e.insert(v.clone()),
            Lattice::Mod(m) => m.insert(v),
        }
    }

    /// `v - residual` is the combination `coeffs` of inputs, modulo relations.
    pub fn normal_form_tracked(&self, v: &SparseVec) -> Reduction {
        match self {
            Lattice::Int(e) => e.normal_form_tracked(v),
            Lattice::Mod(m) => m.normal_form_tracked(v),
        }
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        match self {
            Lattice::Int(e) => e.contains(v),
            Lattice::Mod(m) => m.normal_form_tracked(v).residual.is_zero(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(d: &[i64]) -> SparseVec {
        SparseVec::from_dense(d)
    }

    #[test]
    fn mod_three_kernel() {
        let mut m = ModEchelon::new(3);
        assert!(m.insert(&v(&[1, 2, 0])).is_none());
        assert!(m.insert(&v(&[0, 1, 1])).is_none());
        let k = m.insert(&v(&[1, 0, 1])).unwrap();
        let combo = v(&[1, 2, 0]).scale(&k.get(0)).add(&v(&[0, 1, 1]).scale(&k.get(1))).add(&v(&[1, 0, 1]).scale(&k.get(2)));
        assert!(combo.iter().all(|(_, c)| c.rem_euclid(&Int::from(3)).is_zero()));
    }

    #[test]
    fn mod_reduction_expresses_members() {
        let mut m = ModEchelon::new(5);
        let inputs = [v(&[2, 1, 0]), v(&[0, 3, 4])];
        for i in &inputs {
            m.insert(i);
        }
        let target = v(&[4, 11, 12]);
        let red = m.normal_form_tracked(&target);
        assert!(red.residual.is_zero());
        let mut s = target.clone();
        for (k, c) in red.coeffs.iter() {
            s = s.sub(&inputs[k].scale(c));
        }
        assert!(s.iter().all(|(_, c)| c.rem_euclid(&Int::from(5)).is_zero()));
        assert!(!m.contains_for_test(&v(&[1, 0, 0])));
    }

    impl ModEchelon {
        fn contains_for_test(&self, x: &SparseVec) -> bool {
            self.normal_form_tracked(x).residual.is_zero()
        }
    }

    #[test]
    fn detection() {
        let g = FpAbGroup::from_orders(&[Int::from(2), Int::from(2)]);
        assert!(matches!(Lattice::for_group(&g), Lattice::Mod(_)));
        let g = FpAbGroup::from_orders(&[Int::from(4)]);
        assert!(matches!(Lattice::for_group(&g), Lattice::Int(_)));
        let g = FpAbGroup::from_orders(&[Int::from(3), Int::ZERO]);
        assert!(matches!(Lattice::for_group(&g), Lattice::Int(_)));
    }
}
