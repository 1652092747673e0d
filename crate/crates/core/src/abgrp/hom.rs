use std::fmt;
use std::sync::{Arc, OnceLock};

use super::lattice::Lattice;
use super::group::FpAbGroup;
use super::snf::IntMatrix;
use super::vector::{linear_combination, SparseVec};
use crate::error::{Error, Result};
use crate::int::Int;

/// Homomorphism given by the images of the source generators.
#[derive(Clone)]
pub struct GroupHom {
    source: Arc<FpAbGroup>,
    target: Arc<FpAbGroup>,
    columns: Vec<SparseVec>,
    solver: OnceLock<Arc<Solver>>,
}

/// Tracked lattice of `[target relations | columns]`.
struct Solver {
    echelon: Lattice,
    n_rel: usize,
    kernel: Vec<SparseVec>,
}

impl fmt::Debug for GroupHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GroupHom({} -> {}, {:?})", self.source.generators(), self.target.generators(), self.columns)
    }
}

impl GroupHom {
    /// Builds without checking that relations map into relations.
    pub fn new(source: Arc<FpAbGroup>, target: Arc<FpAbGroup>, columns: Vec<SparseVec>) -> Self {
        assert_eq!(columns.len(), source.generators(), "one column per source generator");
        for c in &columns {
            assert!(c.max_index().map_or(true, |m| m < target.generators()), "column outside target");
        }
        GroupHom { source, target, columns, solver: OnceLock::new() }
    }

    pub fn checked(source: Arc<FpAbGroup>, target: Arc<FpAbGroup>, columns: Vec<SparseVec>) -> Result<Self> {
        let h = GroupHom::new(source, target, columns);
        if !h.is_well_defined() {
            return Err(Error::Invalid("homomorphism does not respect relations".into()));
        }
        Ok(h)
    }

    pub fn from_matrix(source: Arc<FpAbGroup>, target: Arc<FpAbGroup>, m: &IntMatrix) -> Result<Self> {
        assert_eq!(m.nrows(), target.generators());
        assert_eq!(m.ncols(), source.generators());
        GroupHom::checked(source, target, (0..m.ncols()).map(|j| m.column(j)).collect())
    }

    pub fn zero(source: Arc<FpAbGroup>, target: Arc<FpAbGroup>) -> Self {
        let n = source.generators();
        GroupHom::new(source, target, vec![SparseVec::new(); n])
    }

    pub fn identity(g: Arc<FpAbGroup>) -> Self {
        let n = g.generators();
        GroupHom::new(g.clone(), g, (0..n).map(SparseVec::unit).collect())
    }

    pub fn source(&self) -> &Arc<FpAbGroup> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FpAbGroup> {
        &self.target
    }

    pub fn columns(&self) -> &[SparseVec] {
        &self.columns
    }

    pub fn matrix(&self) -> IntMatrix {
        IntMatrix::from_columns(self.target.generators(), &self.columns)
    }

    pub fn apply(&self, x: &SparseVec) -> SparseVec {
        linear_combination(&self.columns, x)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &GroupHom) -> GroupHom {
        assert_eq!(self.target.generators(), other.source.generators(), "composition shape mismatch");
        let cols = self.columns.iter().map(|c| other.apply(c)).collect();
        GroupHom::new(self.source.clone(), other.target.clone(), cols)
    }

    pub fn add(&self, other: &GroupHom) -> GroupHom {
        let cols = self.columns.iter().zip(&other.columns).map(|(a, b)| a.add(b)).collect();
        GroupHom::new(self.source.clone(), self.target.clone(), cols)
    }

    pub fn scale(&self, c: &Int) -> GroupHom {
        let cols = self.columns.iter().map(|a| a.scale(c)).collect();
        GroupHom::new(self.source.clone(), self.target.clone(), cols)
    }

    pub fn is_well_defined(&self) -> bool {
        self.source.relations().iter().all(|r| self.target.is_zero_element(&self.apply(r)))
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| self.target.is_zero_element(c))
    }

    /// Equality as maps (modulo target relations).
    pub fn equals(&self, other: &GroupHom) -> bool {
        self.columns.len() == other.columns.len()
            && self.columns.iter().zip(&other.columns).all(|(a, b)| self.target.equal_elements(a, b))
    }

    fn solver(&self) -> &Solver {
        self.solver.get_or_init(|| {
            let mut e = Lattice::for_group(&self.target);
            let n_rel = e.inserted();
            let mut kernel = Vec::new();
            for c in &self.columns {
                if let Some(tag) = e.insert(c) {
                    let k = tag.remap(|i| i.checked_sub(n_rel));
                    if !k.is_zero() {
                        kernel.push(k);
                    }
                }
            }
            if let Some(p) = e.modulus() {
                let p = Int::from(p as i64);
                for k in 0..self.columns.len() {
                    let v = SparseVec::single(k, p.clone());
                    if !self.source.is_zero_element(&v) {
                        kernel.push(v);
                    }
                }
            }
            Arc::new(Solver { echelon: e, n_rel, kernel })
        })
    }

    /// Some `x` with `self(x) = b` modulo target relations.
    pub fn solve(&self, b: &SparseVec) -> Option<SparseVec> {
        let s = self.solver();
        let red = s.echelon.normal_form_tracked(b);
        if !red.residual.is_zero() {
            return None;
        }
        let x = red.coeffs.remap(|i| i.checked_sub(s.n_rel));
        debug_assert!(self.target.equal_elements(&self.apply(&x), b));
        Some(x)
    }

    pub fn in_image(&self, b: &SparseVec) -> bool {
        self.solver().echelon.contains(b)
    }

    /// Generators of the kernel, in source coordinates.
    pub fn kernel(&self) -> &[SparseVec] {
        &self.solver().kernel
    }

    pub fn is_injective(&self) -> bool {
        self.kernel().iter().all(|k| self.source.is_zero_element(k))
    }

    pub fn is_surjective(&self) -> bool {
        (0..self.target.generators()).all(|j| self.in_image(&SparseVec::unit(j)))
    }

    pub fn is_isomorphism(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// Block matrix from `blocks[i][j]: source_j -> target_i`; missing blocks are zero.
    pub fn block(sources: &[Arc<FpAbGroup>], targets: &[Arc<FpAbGroup>], blocks: &[(usize, usize, &GroupHom)]) -> GroupHom {
        let src = Arc::new(FpAbGroup::direct_sum(&sources.iter().map(|g| g.as_ref()).collect::<Vec<_>>()));
        let tgt = Arc::new(FpAbGroup::direct_sum(&targets.iter().map(|g| g.as_ref()).collect::<Vec<_>>()));
        GroupHom::block_into(src, tgt, sources, targets, blocks)
    }

    /// As [`GroupHom::block`] with the assembled sums supplied by the caller.
    pub fn block_into(
        src: Arc<FpAbGroup>,
        tgt: Arc<FpAbGroup>,
        sources: &[Arc<FpAbGroup>],
        targets: &[Arc<FpAbGroup>],
        blocks: &[(usize, usize, &GroupHom)],
    ) -> GroupHom {
        let soff = offsets(sources);
        let toff = offsets(targets);
        let mut cols: Vec<Vec<(usize, Int)>> = vec![Vec::new(); src.generators()];
        for (i, j, h) in blocks {
            assert_eq!(h.source.generators(), sources[*j].generators(), "block source mismatch");
            assert_eq!(h.target.generators(), targets[*i].generators(), "block target mismatch");
            for (k, c) in h.columns.iter().enumerate() {
                cols[soff[*j] + k].extend(c.iter().map(|(r, v)| (r + toff[*i], v.clone())));
            }
        }
        GroupHom::new(src, tgt, cols.into_iter().map(SparseVec::from_entries).collect())
    }
}

pub fn offsets(parts: &[Arc<FpAbGroup>]) -> Vec<usize> {
    let mut out = Vec::with_capacity(parts.len() + 1);
    let mut acc = 0;
    for p in parts {
        out.push(acc);
        acc += p.generators();
    }
    out.push(acc);
    out
}

/// `ker(f) / im(g)` for a complex `A --g--> B --f--> C`, with class coordinates.
pub struct Subquotient {
    ambient: Arc<FpAbGroup>,
    cycles: Vec<SparseVec>,
    express: Lattice,
    n_fixed: usize,
    group: FpAbGroup,
}

impl fmt::Debug for Subquotient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Subquotient({})", self.describe())
    }
}

impl Subquotient {
    pub fn new(ker_of: &GroupHom, im_of: &GroupHom) -> Result<Self> {
        if im_of.target.generators() != ker_of.source.generators() {
            return Err(Error::Invalid("subquotient maps are not composable".into()));
        }
        if !im_of.then(ker_of).is_zero() {
            return Err(Error::Invalid("not a complex: composite is nonzero".into()));
        }
        Ok(Subquotient::from_parts(ker_of.source.clone(), ker_of.kernel().to_vec(), im_of.columns()))
    }

    /// Quotient of the subgroup generated by `cycles` by `boundaries` (both in
    /// `ambient`), which must be contained in it.
    pub fn from_parts(ambient: Arc<FpAbGroup>, cycles: Vec<SparseVec>, boundaries: &[SparseVec]) -> Self {
        let mut express = Lattice::for_group(&ambient);
        for b in boundaries {
            express.insert(b);
        }
        let n_fixed = express.inserted();
        let mut rels = Vec::new();
        for z in &cycles {
            if let Some(tag) = express.insert(z) {
                let r = tag.remap(|i| i.checked_sub(n_fixed));
                if !r.is_zero() {
                    rels.push(r);
                }
            }
        }
        if let Some(p) = express.modulus() {
            let p = Int::from(p as i64);
            rels.extend((0..cycles.len()).map(|k| SparseVec::single(k, p.clone())));
        }
        let group = FpAbGroup::new(cycles.len(), rels);
        Subquotient { ambient, cycles, express, n_fixed, group }
    }

    pub fn ambient(&self) -> &Arc<FpAbGroup> {
        &self.ambient
    }

    pub fn cycles(&self) -> &[SparseVec] {
        &self.cycles
    }

    /// Presentation on the cycle generators.
    pub fn group(&self) -> &FpAbGroup {
        &self.group
    }

    pub fn orders(&self) -> &[Int] {
        &self.group.structure().orders
    }

    pub fn free_rank(&self) -> usize {
        self.group.structure().free_rank()
    }

    pub fn torsion(&self) -> Vec<Int> {
        self.group.structure().torsion()
    }

    pub fn describe(&self) -> String {
        self.group.structure().describe()
    }

    pub fn is_trivial(&self) -> bool {
        self.group.structure().is_trivial()
    }

    /// Whether `x` lies in the cycle subgroup.
    pub fn contains(&self, x: &SparseVec) -> bool {
        self.express.contains(x)
    }

    /// Class coordinates of the cycle `x` in the cyclic basis.
    pub fn class_of(&self, x: &SparseVec) -> Result<Vec<Int>> {
        let red = self.express.normal_form_tracked(x);
        if !red.residual.is_zero() {
            return Err(Error::Invalid("element is not a cycle".into()));
        }
        let c = red.coeffs.remap(|i| i.checked_sub(self.n_fixed));
        Ok(self.group.structure().coordinates(&c))
    }

    pub fn is_boundary(&self, x: &SparseVec) -> Result<bool> {
        Ok(self.class_of(x)?.iter().all(|c| c.is_zero()))
    }

    /// A cycle representing the cyclic generator `t`.
    pub fn representative(&self, t: usize) -> SparseVec {
        linear_combination(&self.cycles, self.group.structure().lift(t))
    }

    pub fn representative_of(&self, coords: &[Int]) -> SparseVec {
        linear_combination(&self.cycles, &self.group.structure().lift_coordinates(coords))
    }

    /// Presentation `⊕ Z/d_i` matching the class coordinates.
    pub fn cyclic_group(&self) -> FpAbGroup {
        FpAbGroup::from_orders(self.orders())
    }

    /// The map induced by `f` (on ambient coordinates) into `other`.
    pub fn induced(&self, other: &Subquotient, f: impl Fn(&SparseVec) -> SparseVec) -> Result<GroupHom> {
        let src = Arc::new(self.cyclic_group());
        let tgt = Arc::new(other.cyclic_group());
        let mut cols = Vec::new();
        for t in 0..self.orders().len() {
            let img = f(&self.representative(t));
            cols.push(SparseVec::from_dense(&other.class_of(&img)?));
        }
        GroupHom::checked(src, tgt, cols)
    }
}

/// Solves `f(x) = b`; thin wrapper kept for API symmetry.
pub fn solve(f: &GroupHom, b: &SparseVec) -> Option<SparseVec> {
    f.solve(b)
}

pub fn subquotient(ker_of: &GroupHom, im_of: &GroupHom) -> Result<Subquotient> {
    Subquotient::new(ker_of, im_of)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> Arc<FpAbGroup> {
        Arc::new(FpAbGroup::free(1))
    }

    fn times(k: i64, s: Arc<FpAbGroup>, t: Arc<FpAbGroup>) -> GroupHom {
        GroupHom::new(s, t, vec![SparseVec::single(0, Int::from(k))])
    }

    #[test]
    fn quotient_by_doubling() {
        let g = times(2, z(), z());
        let f = GroupHom::zero(z(), Arc::new(FpAbGroup::zero()));
        let h = subquotient(&f, &g).unwrap();
        assert_eq!(h.describe(), "Z/2");
        assert_eq!(h.class_of(&SparseVec::single(0, Int::from(3))).unwrap(), vec![Int::ONE]);
        assert_eq!(h.class_of(&SparseVec::single(0, Int::from(4))).unwrap(), vec![Int::ZERO]);
    }

    #[test]
    fn exact_identity_gives_zero() {
        let g = GroupHom::identity(z());
        let f = GroupHom::zero(z(), Arc::new(FpAbGroup::zero()));
        assert!(subquotient(&f, &g).unwrap().is_trivial());
    }

    #[test]
    fn rejects_non_complex() {
        let g = GroupHom::identity(z());
        let f = GroupHom::identity(z());
        assert!(subquotient(&f, &g).is_err());
    }

    #[test]
    fn solve_examples() {
        let f = times(2, z(), z());
        assert_eq!(f.solve(&SparseVec::single(0, Int::from(4))), Some(SparseVec::single(0, Int::from(2))));
        assert_eq!(f.solve(&SparseVec::single(0, Int::from(3))), None);
        let z4 = Arc::new(FpAbGroup::cyclic(&Int::from(4)));
        let red = times(1, z(), z4.clone());
        let x = red.solve(&SparseVec::single(0, Int::from(3))).unwrap();
        assert!(z4.equal_elements(&red.apply(&x), &SparseVec::single(0, Int::from(3))));
    }

    #[test]
    fn kernel_of_reduction() {
        let z4 = Arc::new(FpAbGroup::cyclic(&Int::from(4)));
        let red = times(2, z(), z4);
        let k = red.kernel();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0].get(0).abs(), Int::from(2));
    }

    #[test]
    fn isomorphism_detection() {
        let z2 = Arc::new(FpAbGroup::cyclic(&Int::from(2)));
        let z3 = Arc::new(FpAbGroup::cyclic(&Int::from(3)));
        let z6 = Arc::new(FpAbGroup::cyclic(&Int::from(6)));
        let h = GroupHom::block(&[z2.clone(), z3.clone()], &[z6.clone()], &[
            (0, 0, &times(3, z2.clone(), z6.clone())),
            (0, 1, &times(2, z3.clone(), z6.clone())),
        ]);
        assert!(h.is_well_defined());
        assert!(h.is_isomorphism());
        assert!(!times(2, z6.clone(), z6).is_isomorphism());
    }
}
