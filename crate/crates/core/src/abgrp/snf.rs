//! Dense integer matrices and Smith normal form.

use serde::{Deserialize, Serialize};

use super::vector::SparseVec;
use crate::int::Int;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Int>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![Int::ZERO; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Int::ONE);
        }
        m
    }

    pub fn from_rows<T: Into<Int> + Clone>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMatrix::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged matrix");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, v.clone().into());
            }
        }
        m
    }

    /// Builds a `rows x cols.len()` matrix whose columns are the given vectors.
    pub fn from_columns(rows: usize, cols: &[SparseVec]) -> Self {
        let mut m = IntMatrix::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for (i, v) in c.iter() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Int {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Int) {
        self.data[i * self.cols + j] = v;
    }

    pub fn column(&self, j: usize) -> SparseVec {
        SparseVec::from_sorted((0..self.rows).filter_map(|i| {
            let v = self.get(i, j);
            (!v.is_zero()).then(|| (i, v.clone()))
        }).collect())
    }

    pub fn to_rows(&self) -> Vec<Vec<Int>> {
        (0..self.rows).map(|i| self.data[i * self.cols..(i + 1) * self.cols].to_vec()).collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = IntMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let v = out.get(i, j) + &(a * b);
                        out.set(i, j, v);
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &SparseVec) -> SparseVec {
        let mut out = Vec::new();
        for i in 0..self.rows {
            let mut s = Int::ZERO;
            for (j, c) in v.iter() {
                let a = self.get(i, j);
                if !a.is_zero() {
                    s += &(a * c);
                }
            }
            if !s.is_zero() {
                out.push((i, s));
            }
        }
        SparseVec::from_sorted(out)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.is_zero())
    }

    /// Determinant by fraction-free Bareiss elimination.
    pub fn determinant(&self) -> Int {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Int::ONE;
        }
        let mut a = self.clone();
        let mut sign = Int::ONE;
        let mut prev = Int::ONE;
        for k in 0..n - 1 {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(i) => {
                        a.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return Int::ZERO,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &(a.get(i, j) * a.get(k, k)) - &(a.get(i, k) * a.get(k, j));
                    a.set(i, j, v.div_exact(&prev));
                }
            }
            prev = a.get(k, k).clone();
        }
        &sign * a.get(n - 1, n - 1)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] += c * row[src]
    fn add_row(&mut self, dst: usize, src: usize, c: &Int) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let s = self.get(src, j);
            if !s.is_zero() {
                let v = self.get(dst, j) + &(s * c);
                self.set(dst, j, v);
            }
        }
    }

    /// col[dst] += c * col[src]
    fn add_col(&mut self, dst: usize, src: usize, c: &Int) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let s = self.get(i, src);
            if !s.is_zero() {
                let v = self.get(i, dst) + &(s * c);
                self.set(i, dst, v);
            }
        }
    }

    fn neg_row(&mut self, r: usize) {
        for j in 0..self.cols {
            let v = -self.get(r, j);
            self.set(r, j, v);
        }
    }

    /// Applies the unimodular 2x2 transform [[a,b],[c,d]] to rows (i, k).
    fn mix_rows(&mut self, i: usize, k: usize, m: [&Int; 4]) {
        for j in 0..self.cols {
            let x = self.get(i, j).clone();
            let y = self.get(k, j).clone();
            if x.is_zero() && y.is_zero() {
                continue;
            }
            self.set(i, j, &(m[0] * &x) + &(m[1] * &y));
            self.set(k, j, &(m[2] * &x) + &(m[3] * &y));
        }
    }

    fn mix_cols(&mut self, i: usize, k: usize, m: [&Int; 4]) {
        for r in 0..self.rows {
            let x = self.get(r, i).clone();
            let y = self.get(r, k).clone();
            if x.is_zero() && y.is_zero() {
                continue;
            }
            self.set(r, i, &(m[0] * &x) + &(m[1] * &y));
            self.set(r, k, &(m[2] * &x) + &(m[3] * &y));
        }
    }
}

/// Smith normal form `U * M * V = S` together with `U^{-1}`.
#[derive(Clone, Debug)]
pub struct Snf {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub u_inv: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    /// Diagonal entries `d_1 | d_2 | ...` (length `min(rows, cols)`).
    pub fn diagonal(&self) -> Vec<Int> {
        (0..self.s.nrows().min(self.s.ncols())).map(|i| self.s.get(i, i).clone()).collect()
    }
}

/// Row operations are mirrored into `u` and inversely into `u_inv`, column
/// operations into `v`.
struct Tracker {
    m: IntMatrix,
    u: IntMatrix,
    u_inv: IntMatrix,
    v: IntMatrix,
}

impl Tracker {
    fn swap_rows(&mut self, a: usize, b: usize) {
        self.m.swap_rows(a, b);
        self.u.swap_rows(a, b);
        self.u_inv.swap_cols(a, b);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        self.m.swap_cols(a, b);
        self.v.swap_cols(a, b);
    }

    fn add_row(&mut self, dst: usize, src: usize, c: &Int) {
        self.m.add_row(dst, src, c);
        self.u.add_row(dst, src, c);
        self.u_inv.add_col(src, dst, &-c);
    }

    fn add_col(&mut self, dst: usize, src: usize, c: &Int) {
        self.m.add_col(dst, src, c);
        self.v.add_col(dst, src, c);
    }

    fn neg_row(&mut self, r: usize) {
        self.m.neg_row(r);
        self.u.neg_row(r);
        for i in 0..self.u_inv.nrows() {
            let v = -self.u_inv.get(i, r);
            self.u_inv.set(i, r, v);
        }
    }

    /// Rows (i, k) <- [[s, t], [-b/g, a/g]] (rows i, k); inverse is
    /// [[a/g, -t], [b/g, s]] applied to columns of `u_inv`.
    fn gcd_rows(&mut self, i: usize, k: usize, s: &Int, t: &Int, ag: &Int, bg: &Int) {
        let nbg = -bg;
        self.m.mix_rows(i, k, [s, t, &nbg, ag]);
        self.u.mix_rows(i, k, [s, t, &nbg, ag]);
        let nt = -t;
        // u_inv <- u_inv * inverse; columns (i, k) mix with the transpose pattern.
        for r in 0..self.u_inv.nrows() {
            let x = self.u_inv.get(r, i).clone();
            let y = self.u_inv.get(r, k).clone();
            if x.is_zero() && y.is_zero() {
                continue;
            }
            self.u_inv.set(r, i, &(&x * ag) + &(&y * bg));
            self.u_inv.set(r, k, &(&x * &nt) + &(&y * s));
        }
    }

    fn gcd_cols(&mut self, i: usize, k: usize, s: &Int, t: &Int, ag: &Int, bg: &Int) {
        let nbg = -bg;
        self.m.mix_cols(i, k, [s, t, &nbg, ag]);
        self.v.mix_cols(i, k, [s, t, &nbg, ag]);
    }
}

/// Computes the Smith normal form of `m`.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let (r, c) = (m.nrows(), m.ncols());
    let mut t = Tracker {
        m: m.clone(),
        u: IntMatrix::identity(r),
        u_inv: IntMatrix::identity(r),
        v: IntMatrix::identity(c),
    };
    let n = r.min(c);
    let mut k = 0;
    while k < n {
        // Pivot: smallest nonzero absolute value in the remaining block.
        let mut best: Option<(usize, usize, Int)> = None;
        for i in k..r {
            for j in k..c {
                let a = t.m.get(i, j);
                if !a.is_zero() {
                    let aa = a.abs();
                    if best.as_ref().map_or(true, |(_, _, b)| aa < *b) {
                        best = Some((i, j, aa));
                    }
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        t.swap_rows(k, pi);
        t.swap_cols(k, pj);
        loop {
            let mut dirty = false;
            for i in k + 1..r {
                let b = t.m.get(i, k).clone();
                if b.is_zero() {
                    continue;
                }
                let a = t.m.get(k, k).clone();
                if a.divides(&b) {
                    t.add_row(i, k, &-b.div_exact(&a));
                } else {
                    let (g, s, tt) = a.ext_gcd(&b);
                    let ag = a.div_exact(&g);
                    let bg = b.div_exact(&g);
                    t.gcd_rows(k, i, &s, &tt, &ag, &bg);
                }
            }
            for j in k + 1..c {
                let b = t.m.get(k, j).clone();
                if b.is_zero() {
                    continue;
                }
                let a = t.m.get(k, k).clone();
                if a.divides(&b) {
                    t.add_col(j, k, &-b.div_exact(&a));
                } else {
                    let (g, s, tt) = a.ext_gcd(&b);
                    let ag = a.div_exact(&g);
                    let bg = b.div_exact(&g);
                    t.gcd_cols(k, j, &s, &tt, &ag, &bg);
                    dirty = true;
                }
            }
            if dirty || (k + 1..r).any(|i| !t.m.get(i, k).is_zero()) {
                continue;
            }
            // Divisibility of the remaining block by the pivot.
            let a = t.m.get(k, k).clone();
            let bad = (k + 1..r).find(|&i| (k + 1..c).any(|j| !a.divides(t.m.get(i, j))));
            match bad {
                Some(i) => t.add_row(k, i, &Int::ONE),
                None => break,
            }
        }
        if t.m.get(k, k).is_negative() {
            t.neg_row(k);
        }
        k += 1;
    }
    Snf { s: t.m, u: t.u, u_inv: t.u_inv, v: t.v }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &IntMatrix) -> Snf {
        let snf = smith_normal_form(m);
        assert_eq!(snf.u.mul(m).mul(&snf.v), snf.s);
        assert_eq!(snf.u.mul(&snf.u_inv), IntMatrix::identity(m.nrows()));
        assert!(snf.u.determinant().is_unit());
        assert!(snf.v.determinant().is_unit());
        for i in 0..snf.s.nrows() {
            for j in 0..snf.s.ncols() {
                if i != j {
                    assert!(snf.s.get(i, j).is_zero());
                }
            }
        }
        let d = snf.diagonal();
        for w in d.windows(2) {
            assert!(w[0].divides(&w[1]));
        }
        assert!(d.iter().all(|x| !x.is_negative()));
        snf
    }

    #[test]
    fn two_by_two() {
        let m = IntMatrix::from_rows(&[vec![2i64, 4], vec![6, 8]]);
        let snf = check(&m);
        assert_eq!(snf.diagonal(), vec![Int::from(2), Int::from(4)]);
    }

    #[test]
    fn zero_and_identity() {
        let z = IntMatrix::zeros(2, 3);
        let snf = check(&z);
        assert_eq!(snf.u, IntMatrix::identity(2));
        assert_eq!(snf.v, IntMatrix::identity(3));
        let id = IntMatrix::identity(3);
        assert_eq!(check(&id).diagonal(), vec![Int::ONE; 3]);
    }

    #[test]
    fn needs_divisibility_fix() {
        let m = IntMatrix::from_rows(&[vec![2i64, 0], vec![0, 3]]);
        assert_eq!(check(&m).diagonal(), vec![Int::from(1), Int::from(6)]);
    }

    #[test]
    fn determinant_bareiss() {
        let m = IntMatrix::from_rows(&[vec![2i64, -1, 0], vec![1, 3, 4], vec![0, 5, -2]]);
        assert_eq!(m.determinant(), Int::from(-54));
    }
}
