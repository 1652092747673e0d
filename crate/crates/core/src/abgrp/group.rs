use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::echelon::Echelon;
use super::snf::{smith_normal_form, IntMatrix};
use super::vector::SparseVec;
use crate::int::Int;

/// Finitely presented abelian group `Z^n / <relations>`.
#[derive(Clone, Serialize, Deserialize)]
pub struct FpAbGroup {
    generators: usize,
    relations: Vec<SparseVec>,
    #[serde(skip)]
    echelon: OnceLock<Arc<Echelon>>,
    #[serde(skip)]
    structure: OnceLock<Arc<GroupStructure>>,
    #[serde(skip)]
    prime: OnceLock<Option<u64>>,
}

impl fmt::Debug for FpAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FpAbGroup(gens={}, rels={})", self.generators, self.relations.len())
    }
}

impl PartialEq for FpAbGroup {
    /// Equality of presentations, not isomorphism.
    fn eq(&self, other: &Self) -> bool {
        self.generators == other.generators && self.relations == other.relations
    }
}

impl Eq for FpAbGroup {}

impl FpAbGroup {
    pub fn new(generators: usize, relations: Vec<SparseVec>) -> Self {
        for r in &relations {
            assert!(r.max_index().map_or(true, |m| m < generators), "relation outside generator range");
        }
        let relations = relations.into_iter().filter(|r| !r.is_zero()).collect();
        FpAbGroup { generators, relations, echelon: OnceLock::new(), structure: OnceLock::new(), prime: OnceLock::new() }
    }

    pub fn zero() -> Self {
        FpAbGroup::new(0, Vec::new())
    }

    pub fn free(n: usize) -> Self {
        FpAbGroup::new(n, Vec::new())
    }

    /// `Z/m` (with `m = 0` giving `Z`).
    pub fn cyclic(m: &Int) -> Self {
        if m.is_zero() {
            FpAbGroup::free(1)
        } else {
            FpAbGroup::new(1, vec![SparseVec::single(0, m.abs())])
        }
    }

    /// `⊕ Z/m_i`, with `m_i = 0` a free summand and `m_i = 1` a trivial one.
    pub fn from_orders(orders: &[Int]) -> Self {
        let rels = orders
            .iter()
            .enumerate()
            .filter(|(_, m)| !m.is_zero())
            .map(|(i, m)| SparseVec::single(i, m.abs()))
            .collect();
        FpAbGroup::new(orders.len(), rels)
    }

    pub fn direct_sum(parts: &[&FpAbGroup]) -> Self {
        let mut rels = Vec::new();
        let mut off = 0;
        for p in parts {
            rels.extend(p.relations.iter().map(|r| r.shift(off)));
            off += p.generators;
        }
        FpAbGroup::new(off, rels)
    }

    pub fn generators(&self) -> usize {
        self.generators
    }

    pub fn relations(&self) -> &[SparseVec] {
        &self.relations
    }

    /// `Some(p)` when the presentation is `p e_i` for every generator with
    /// `p` a prime below `2^31`.
    pub fn elementary_prime(&self) -> Option<u64> {
        *self.prime.get_or_init(|| {
            if self.generators == 0 || self.relations.len() != self.generators {
                return None;
            }
            let mut seen = vec![false; self.generators];
            let mut p: Option<u64> = None;
            for r in &self.relations {
                let (i, c) = match r.entries() {
                    [(i, c)] => (*i, c.abs().to_i64()?),
                    _ => return None,
                };
                if seen[i] || p.is_some_and(|q| q != c as u64) {
                    return None;
                }
                seen[i] = true;
                p = Some(c as u64);
            }
            p.filter(|&q| q >= 2 && q < (1 << 31) && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0))
        })
    }

    pub fn relation_matrix(&self) -> IntMatrix {
        IntMatrix::from_columns(self.generators, &self.relations)
    }

    pub fn echelon(&self) -> &Echelon {
        self.echelon.get_or_init(|| Arc::new(Echelon::from_vectors(&self.relations, false).0))
    }

    /// Canonical representative of `v` modulo relations.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        if self.relations.is_empty() {
            return v.clone();
        }
        self.echelon().normal_form(v)
    }

    pub fn is_zero_element(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_zero()
    }

    pub fn equal_elements(&self, a: &SparseVec, b: &SparseVec) -> bool {
        self.is_zero_element(&a.sub(b))
    }

    pub fn structure(&self) -> &GroupStructure {
        self.structure.get_or_init(|| Arc::new(GroupStructure::compute(self.generators, &self.relations)))
    }

    pub fn is_trivial(&self) -> bool {
        self.generators == 0 || self.structure().orders.is_empty()
    }

    pub fn element(self: &Arc<Self>, coords: SparseVec) -> Element {
        Element { group: self.clone(), coords }
    }
}

/// Decomposition `G ≅ ⊕ Z/d_i` with explicit coordinate and lift maps.
#[derive(Clone, Debug)]
pub struct GroupStructure {
    /// Orders of the cyclic summands: 0 for `Z`, otherwise at least 2.
    pub orders: Vec<Int>,
    /// Eliminated generators `(j, u, relation)` in application order.
    eliminations: Vec<(usize, Int, SparseVec)>,
    /// Surviving generator indices (the coordinates of the dense block).
    core: Vec<usize>,
    /// Map from core coordinates to cyclic coordinates (rows of `U`).
    to_cyclic: Vec<SparseVec>,
    /// Representatives of the cyclic generators in original coordinates.
    lifts: Vec<SparseVec>,
}

impl GroupStructure {
    fn compute(generators: usize, relations: &[SparseVec]) -> Self {
        let (eliminations, core, core_rels) = eliminate_units(generators, relations);
        let pos: std::collections::HashMap<usize, usize> = core.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        let local: Vec<SparseVec> = core_rels.iter().map(|r| r.remap(|i| pos.get(&i).copied())).collect();
        // Split into connected blocks so direct sums stay cheap.
        let k = core.len();
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut x = x;
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for r in &local {
            let mut it = r.iter().map(|(i, _)| i);
            if let Some(first) = it.next() {
                for j in it {
                    let (a, b) = (find(&mut parent, first), find(&mut parent, j));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut blocks: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
        for g in 0..k {
            let root = find(&mut parent, g);
            blocks.entry(root).or_default().0.push(g);
        }
        for (ri, r) in local.iter().enumerate() {
            if let Some((g, _)) = r.leading() {
                let root = find(&mut parent, g);
                blocks.get_mut(&root).unwrap().1.push(ri);
            }
        }
        let mut orders = Vec::new();
        let mut to_cyclic = Vec::new();
        let mut lifts = Vec::new();
        for (_, (gens, rels)) in blocks {
            let gpos: std::collections::HashMap<usize, usize> = gens.iter().enumerate().map(|(a, &g)| (g, a)).collect();
            let cols: Vec<SparseVec> = rels.iter().map(|&ri| local[ri].remap(|i| gpos.get(&i).copied())).collect();
            let m = IntMatrix::from_columns(gens.len(), &cols);
            let snf = smith_normal_form(&m);
            let d = snf.diagonal();
            for t in 0..gens.len() {
                let order = d.get(t).cloned().unwrap_or(Int::ZERO);
                if order.is_one() {
                    continue;
                }
                orders.push(order);
                let row: Vec<(usize, Int)> = (0..gens.len())
                    .filter_map(|a| {
                        let v = snf.u.get(t, a);
                        (!v.is_zero()).then(|| (core[gens[a]], v.clone()))
                    })
                    .collect();
                to_cyclic.push(SparseVec::from_entries(row));
                let col: Vec<(usize, Int)> = (0..gens.len())
                    .filter_map(|a| {
                        let v = snf.u_inv.get(a, t);
                        (!v.is_zero()).then(|| (core[gens[a]], v.clone()))
                    })
                    .collect();
                lifts.push(SparseVec::from_entries(col));
            }
        }
        GroupStructure { orders, eliminations, core, to_cyclic, lifts }
    }

    pub fn free_rank(&self) -> usize {
        self.orders.iter().filter(|d| d.is_zero()).count()
    }

    /// Invariant factors of the torsion part, in divisibility order.
    pub fn torsion(&self) -> Vec<Int> {
        let tors: Vec<Int> = self.orders.iter().filter(|d| !d.is_zero()).cloned().collect();
        if tors.len() <= 1 {
            return tors;
        }
        let m = IntMatrix::from_columns(
            tors.len(),
            &tors.iter().enumerate().map(|(i, d)| SparseVec::single(i, d.clone())).collect::<Vec<_>>(),
        );
        smith_normal_form(&m).diagonal().into_iter().filter(|d| !d.is_one()).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.orders.is_empty()
    }

    /// Number of cyclic summands.
    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    /// Coordinates of `v` against the cyclic basis, reduced into `[0, d_i)`.
    pub fn coordinates(&self, v: &SparseVec) -> Vec<Int> {
        let mut w = v.clone();
        for (j, u, r) in &self.eliminations {
            let c = w.get(*j);
            if !c.is_zero() {
                w = w.add_scaled(r, &-(&c * u));
            }
        }
        self.to_cyclic
            .iter()
            .zip(&self.orders)
            .map(|(row, d)| {
                let x = row.dot(&w);
                if d.is_zero() {
                    x
                } else {
                    x.rem_euclid(d)
                }
            })
            .collect()
    }

    /// Representative in original coordinates of the cyclic generator `t`.
    pub fn lift(&self, t: usize) -> &SparseVec {
        &self.lifts[t]
    }

    /// Representative of the element with the given cyclic coordinates.
    pub fn lift_coordinates(&self, coords: &[Int]) -> SparseVec {
        let mut acc = SparseVec::new();
        for (t, c) in coords.iter().enumerate() {
            acc = acc.add_scaled(&self.lifts[t], c);
        }
        acc
    }

    pub fn core_generators(&self) -> &[usize] {
        &self.core
    }

    /// Human-readable isomorphism type, e.g. `Z^2 + Z/2`.
    pub fn describe(&self) -> String {
        describe_group(self.free_rank(), &self.torsion())
    }
}

pub fn describe_group(rank: usize, torsion: &[Int]) -> String {
    let mut parts = Vec::new();
    match rank {
        0 => {}
        1 => parts.push("Z".to_string()),
        r => parts.push(format!("Z^{r}")),
    }
    for d in torsion {
        parts.push(format!("Z/{d}"));
    }
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

/// Sparse elimination of generators through relations with a unit entry.
///
/// Returns the eliminations in order, the surviving generators and the
/// remaining relations (supported on surviving generators).
fn eliminate_units(generators: usize, relations: &[SparseVec]) -> (Vec<(usize, Int, SparseVec)>, Vec<usize>, Vec<SparseVec>) {
    let mut rels: Vec<Option<SparseVec>> = relations.iter().map(|r| Some(r.clone())).collect();
    let mut occ: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); generators];
    for (ri, r) in relations.iter().enumerate() {
        for (g, _) in r.iter() {
            occ[g].insert(ri);
        }
    }
    let mut eliminated = vec![false; generators];
    let mut elims = Vec::new();
    let mut queue: Vec<usize> = (0..rels.len()).rev().collect();
    while let Some(ri) = queue.pop() {
        let Some(r) = rels[ri].clone() else { continue };
        let pick = r
            .iter()
            .filter(|(_, v)| v.is_unit())
            .min_by_key(|(g, _)| (occ[*g].len(), *g))
            .map(|(g, v)| (g, v.clone()));
        let Some((j, u)) = pick else { continue };
        rels[ri] = None;
        for (g, _) in r.iter() {
            occ[g].remove(&ri);
        }
        let others: Vec<usize> = occ[j].iter().copied().collect();
        for oi in others {
            let o = rels[oi].take().unwrap();
            let c = o.get(j);
            let n = o.add_scaled(&r, &-(&c * &u));
            for (g, _) in o.iter() {
                occ[g].remove(&oi);
            }
            for (g, _) in n.iter() {
                occ[g].insert(oi);
            }
            if !n.is_zero() {
                rels[oi] = Some(n);
                queue.push(oi);
            }
        }
        eliminated[j] = true;
        elims.push((j, u, r));
    }
    let core: Vec<usize> = (0..generators).filter(|&g| !eliminated[g]).collect();
    let rest: Vec<SparseVec> = rels.into_iter().flatten().collect();
    (elims, core, rest)
}

/// An element of a finitely presented group; equality reduces modulo relations.
#[derive(Clone)]
pub struct Element {
    pub group: Arc<FpAbGroup>,
    pub coords: SparseVec,
}

impl Element {
    pub fn reduced(&self) -> SparseVec {
        self.group.reduce(&self.coords)
    }

    pub fn is_zero(&self) -> bool {
        self.group.is_zero_element(&self.coords)
    }

    pub fn add(&self, other: &Element) -> Element {
        assert!(Arc::ptr_eq(&self.group, &other.group) || *self.group == *other.group);
        Element { group: self.group.clone(), coords: self.coords.add(&other.coords) }
    }

    pub fn neg(&self) -> Element {
        Element { group: self.group.clone(), coords: self.coords.neg() }
    }
}

impl PartialEq for Element {
    fn eq(&self, other: &Self) -> bool {
        *self.group == *other.group && self.group.equal_elements(&self.coords, &other.coords)
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.reduced())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_of_cyclic_sums() {
        let g = FpAbGroup::from_orders(&[Int::from(2), Int::from(3), Int::ZERO, Int::ONE]);
        let s = g.structure();
        assert_eq!(s.free_rank(), 1);
        assert_eq!(s.torsion(), vec![Int::from(6)]);
        assert_eq!(s.describe(), "Z + Z/6");
    }

    #[test]
    fn coordinates_respect_relations() {
        // Z^3 / <(1,2,0), (0,3,3)>  ≅ Z/3 ⊕ Z
        let g = FpAbGroup::new(3, vec![SparseVec::from_dense(&[1i64, 2, 0]), SparseVec::from_dense(&[0i64, 3, 3])]);
        let s = g.structure();
        assert_eq!(s.free_rank(), 1);
        assert_eq!(s.torsion(), vec![Int::from(3)]);
        for r in g.relations() {
            assert!(s.coordinates(r).iter().all(|c| c.is_zero()));
        }
        for t in 0..s.len() {
            let c = s.coordinates(s.lift(t));
            for (k, x) in c.iter().enumerate() {
                assert_eq!(*x, if k == t { Int::ONE } else { Int::ZERO });
            }
        }
    }

    #[test]
    fn element_equality_mod_relations() {
        let g = Arc::new(FpAbGroup::cyclic(&Int::from(4)));
        assert_eq!(g.element(SparseVec::single(0, Int::from(7))), g.element(SparseVec::single(0, Int::from(-1))));
        assert!(g.element(SparseVec::single(0, Int::from(8))).is_zero());
    }
}
