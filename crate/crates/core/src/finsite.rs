//! Finite spaces as posets and the site of formal disjoint unions of opens.
//!
//! Open sets are down-sets of the specialization order, so the minimal open
//! neighbourhood of `x` is `↓x`. A [`SiteObject`] is a list of opens (its
//! components); a [`SiteMorphism`] sends each source component into a target
//! component containing it.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Subset of the points of a space, as a bit set.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PointSet {
    words: Vec<u64>,
}

impl PointSet {
    pub fn empty(n: usize) -> Self {
        PointSet { words: vec![0; n.div_ceil(64).max(1)] }
    }

    pub fn from_points(n: usize, pts: impl IntoIterator<Item = usize>) -> Self {
        let mut s = PointSet::empty(n);
        for p in pts {
            s.insert(p);
        }
        s
    }

    pub fn insert(&mut self, p: usize) {
        self.words[p / 64] |= 1 << (p % 64);
    }

    pub fn remove(&mut self, p: usize) {
        self.words[p / 64] &= !(1 << (p % 64));
    }

    pub fn contains(&self, p: usize) -> bool {
        self.words.get(p / 64).is_some_and(|w| w >> (p % 64) & 1 == 1)
    }

    pub fn intersect(&self, other: &PointSet) -> PointSet {
        PointSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect() }
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        PointSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a | b).collect() }
    }

    pub fn minus(&self, other: &PointSet) -> PointSet {
        PointSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect() }
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    pub fn intersects(&self, other: &PointSet) -> bool {
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + b)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

impl fmt::Debug for PointSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A finite poset; `x ≤ y` means `x` lies in every open containing `y`.
#[derive(Clone, PartialEq, Eq)]
pub struct FinSpace {
    names: Vec<String>,
    down: Vec<PointSet>,
    up: Vec<PointSet>,
}

impl fmt::Debug for FinSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinSpace({:?})", self.names)
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceJson {
    points: Vec<String>,
    order: Vec<(String, String)>,
}

impl FinSpace {
    /// Builds from point names and generating pairs `(a, b)` meaning `a ≤ b`;
    /// takes the reflexive-transitive closure and rejects cycles.
    pub fn new(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self> {
        let n = names.len();
        let mut seen = HashMap::new();
        for (i, s) in names.iter().enumerate() {
            if seen.insert(s.clone(), i).is_some() {
                return Err(Error::Malformed(format!("duplicate point name {s:?}")));
            }
        }
        let mut le = vec![vec![false; n]; n];
        for (i, row) in le.iter_mut().enumerate() {
            row[i] = true;
        }
        for &(a, b) in pairs {
            if a >= n || b >= n {
                return Err(Error::Malformed("order pair refers to unknown point".into()));
            }
            le[a][b] = true;
        }
        for k in 0..n {
            for i in 0..n {
                if le[i][k] {
                    for j in 0..n {
                        if le[k][j] {
                            le[i][j] = true;
                        }
                    }
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if i != j && le[i][j] && le[j][i] {
                    return Err(Error::Malformed(format!(
                        "order is not antisymmetric: {} and {}",
                        names[i], names[j]
                    )));
                }
            }
        }
        let down = (0..n).map(|y| PointSet::from_points(n, (0..n).filter(|&x| le[x][y]))).collect();
        let up = (0..n).map(|x| PointSet::from_points(n, (0..n).filter(|&y| le[x][y]))).collect();
        Ok(FinSpace { names, down, up })
    }

    pub fn from_names(names: &[&str], pairs: &[(&str, &str)]) -> Result<Self> {
        let names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let idx: HashMap<&str, usize> = names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut ps = Vec::new();
        for (a, b) in pairs {
            let (Some(&i), Some(&j)) = (idx.get(a), idx.get(b)) else {
                return Err(Error::Malformed(format!("unknown point in pair ({a}, {b})")));
            };
            ps.push((i, j));
        }
        FinSpace::new(names, &ps)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let j: SpaceJson = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        let names: Vec<&str> = j.points.iter().map(|s| s.as_str()).collect();
        let pairs: Vec<(&str, &str)> = j.order.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        FinSpace::from_names(&names, &pairs)
    }

    /// JSON with the covering relation as generating pairs.
    pub fn to_json(&self) -> String {
        let mut order = Vec::new();
        for y in 0..self.len() {
            for x in self.strictly_below(y) {
                let covered = !self.strictly_below(y).any(|z| z != x && self.leq(x, z));
                if covered {
                    order.push((self.names[x].clone(), self.names[y].clone()));
                }
            }
        }
        serde_json::to_string(&SpaceJson { points: self.names.clone(), order }).unwrap()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, x: usize) -> &str {
        &self.names[x]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.down[y].contains(x)
    }

    pub fn lt(&self, x: usize, y: usize) -> bool {
        x != y && self.leq(x, y)
    }

    /// Minimal open neighbourhood `↓y`.
    pub fn down(&self, y: usize) -> &PointSet {
        &self.down[y]
    }

    pub fn up(&self, x: usize) -> &PointSet {
        &self.up[x]
    }

    pub fn strictly_below(&self, y: usize) -> impl Iterator<Item = usize> + '_ {
        self.down[y].iter().filter(move |&x| x != y)
    }

    pub fn all(&self) -> PointSet {
        PointSet::from_points(self.len(), 0..self.len())
    }

    pub fn empty_set(&self) -> PointSet {
        PointSet::empty(self.len())
    }

    pub fn is_open(&self, s: &PointSet) -> bool {
        s.iter().all(|y| self.down[y].is_subset(s))
    }

    /// Smallest open set containing `s`.
    pub fn open_hull(&self, s: &PointSet) -> PointSet {
        let mut out = self.empty_set();
        for y in s.iter() {
            out = out.union(&self.down[y]);
        }
        out
    }

    pub fn set_from_names(&self, pts: &[String]) -> Result<PointSet> {
        let mut s = self.empty_set();
        for p in pts {
            let i = self.index(p).ok_or_else(|| Error::Malformed(format!("unknown point {p:?}")))?;
            s.insert(i);
        }
        Ok(s)
    }

    pub fn set_names(&self, s: &PointSet) -> Vec<String> {
        s.iter().map(|i| self.names[i].clone()).collect()
    }

    /// Points in an order compatible with `≤` (smaller points first).
    pub fn linear_extension(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = (0..self.len()).collect();
        pts.sort_by_key(|&x| (self.down[x].len(), x));
        pts
    }

    /// Every open subset, for exhaustive checks on small spaces.
    pub fn all_opens(&self) -> Vec<PointSet> {
        assert!(self.len() <= 20, "too many points to enumerate opens");
        let n = self.len();
        (0u32..1 << n)
            .map(|m| PointSet::from_points(n, (0..n).filter(|i| m >> i & 1 == 1)))
            .filter(|s| self.is_open(s))
            .collect()
    }
}

/// Formal disjoint union of open sets.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SiteObject {
    components: Vec<PointSet>,
}

impl fmt::Debug for SiteObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.components).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct SiteObjectJson {
    components: Vec<Vec<String>>,
}

impl SiteObject {
    pub fn new(space: &FinSpace, components: Vec<PointSet>) -> Result<Self> {
        for c in &components {
            if !space.is_open(c) {
                return Err(Error::Invalid(format!("component {:?} is not open", space.set_names(c))));
            }
            if c.is_empty() {
                return Err(Error::Invalid("empty component".into()));
            }
        }
        Ok(SiteObject { components })
    }

    pub(crate) fn new_unchecked(components: Vec<PointSet>) -> Self {
        SiteObject { components }
    }

    /// The final object: the whole space as a single component.
    pub fn whole(space: &FinSpace) -> Self {
        SiteObject { components: vec![space.all()] }
    }

    pub fn empty() -> Self {
        SiteObject { components: Vec::new() }
    }

    pub fn components(&self) -> &[PointSet] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &PointSet {
        &self.components[i]
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn from_json(space: &FinSpace, s: &str) -> Result<Self> {
        let j: SiteObjectJson = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        SiteObject::from_names(space, &j.components)
    }

    pub fn from_names(space: &FinSpace, comps: &[Vec<String>]) -> Result<Self> {
        let comps = comps.iter().map(|c| space.set_from_names(c)).collect::<Result<Vec<_>>>()?;
        SiteObject::new(space, comps)
    }

    pub fn to_names(&self, space: &FinSpace) -> Vec<Vec<String>> {
        self.components.iter().map(|c| space.set_names(c)).collect()
    }

    pub fn to_json(&self, space: &FinSpace) -> String {
        serde_json::to_string(&SiteObjectJson { components: self.to_names(space) }).unwrap()
    }
}

/// Component-wise inclusion `source → target`.
#[derive(Clone, PartialEq, Eq)]
pub struct SiteMorphism {
    source: Arc<SiteObject>,
    target: Arc<SiteObject>,
    map: Vec<usize>,
}

impl fmt::Debug for SiteMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SiteMorphism({:?})", self.map)
    }
}

impl SiteMorphism {
    pub fn new(source: Arc<SiteObject>, target: Arc<SiteObject>, map: Vec<usize>) -> Result<Self> {
        if map.len() != source.len() {
            return Err(Error::Invalid("component map length differs from source".into()));
        }
        for (i, &j) in map.iter().enumerate() {
            if j >= target.len() || !source.components[i].is_subset(&target.components[j]) {
                return Err(Error::Invalid(format!("source component {i} is not contained in target component {j}")));
            }
        }
        Ok(SiteMorphism { source, target, map })
    }

    pub(crate) fn new_unchecked(source: Arc<SiteObject>, target: Arc<SiteObject>, map: Vec<usize>) -> Self {
        debug_assert!(SiteMorphism::new(source.clone(), target.clone(), map.clone()).is_ok());
        SiteMorphism { source, target, map }
    }

    pub fn identity(obj: Arc<SiteObject>) -> Self {
        let n = obj.len();
        SiteMorphism { source: obj.clone(), target: obj, map: (0..n).collect() }
    }

    /// The unique morphism to the final object.
    pub fn to_final(space: &FinSpace, obj: Arc<SiteObject>) -> Self {
        let n = obj.len();
        SiteMorphism { source: obj, target: Arc::new(SiteObject::whole(space)), map: vec![0; n] }
    }

    /// The cover of the whole space by all minimal opens `↓x`.
    pub fn minimal_open_cover(space: &FinSpace) -> Self {
        let obj = Arc::new(SiteObject::new_unchecked((0..space.len()).map(|x| space.down(x).clone()).collect()));
        SiteMorphism::to_final(space, obj)
    }

    /// Cover of the whole space by the given opens.
    pub fn cover_by(space: &FinSpace, opens: Vec<PointSet>) -> Result<Self> {
        let obj = Arc::new(SiteObject::new(space, opens)?);
        let f = SiteMorphism::to_final(space, obj);
        if !f.is_cover() {
            return Err(Error::Invalid("opens do not cover the space".into()));
        }
        Ok(f)
    }

    pub fn source(&self) -> &Arc<SiteObject> {
        &self.source
    }

    pub fn target(&self) -> &Arc<SiteObject> {
        &self.target
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn apply(&self, i: usize) -> usize {
        self.map[i]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &SiteMorphism) -> Result<SiteMorphism> {
        if *self.target != *other.source {
            return Err(Error::Invalid("composition of non-matching morphisms".into()));
        }
        Ok(SiteMorphism {
            source: self.source.clone(),
            target: other.target.clone(),
            map: self.map.iter().map(|&j| other.map[j]).collect(),
        })
    }

    /// Every point of every target component is hit.
    pub fn is_cover(&self) -> bool {
        let mut hit: Vec<Option<PointSet>> = vec![None; self.target.len()];
        for (i, &j) in self.map.iter().enumerate() {
            let c = &self.source.components[i];
            hit[j] = Some(match hit[j].take() {
                None => c.clone(),
                Some(h) => h.union(c),
            });
        }
        hit.iter().zip(&self.target.components).all(|(h, t)| h.as_ref().is_some_and(|h| t.is_subset(h)))
    }
}

/// `f ×_U g` with its two projections.
#[derive(Clone, Debug)]
pub struct FiberProduct {
    pub object: Arc<SiteObject>,
    pub p1: SiteMorphism,
    pub p2: SiteMorphism,
    /// Source component pair of each product component.
    pub pairs: Vec<(usize, usize)>,
}

/// Fiber product of two morphisms with a common target. Components are the
/// nonempty intersections, in lexicographic order of `(i, j)`.
pub fn fiber_product(f: &SiteMorphism, g: &SiteMorphism) -> Result<FiberProduct> {
    if *f.target != *g.target {
        return Err(Error::Invalid("fiber product of morphisms with different targets".into()));
    }
    let mut by_target: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (j, &t) in g.map.iter().enumerate() {
        by_target.entry(t).or_default().push(j);
    }
    let mut comps = Vec::new();
    let mut pairs = Vec::new();
    for (i, &t) in f.map.iter().enumerate() {
        if let Some(js) = by_target.get(&t) {
            for &j in js {
                let c = f.source.components[i].intersect(&g.source.components[j]);
                if !c.is_empty() {
                    comps.push(c);
                    pairs.push((i, j));
                }
            }
        }
    }
    let object = Arc::new(SiteObject::new_unchecked(comps));
    let p1 = SiteMorphism::new_unchecked(object.clone(), f.source.clone(), pairs.iter().map(|p| p.0).collect());
    let p2 = SiteMorphism::new_unchecked(object.clone(), g.source.clone(), pairs.iter().map(|p| p.1).collect());
    Ok(FiberProduct { object, p1, p2, pairs })
}

/// A family of morphisms into a common target.
#[derive(Clone, Debug)]
pub struct CoveringFamily {
    pub target: Arc<SiteObject>,
    pub members: Vec<SiteMorphism>,
}

impl CoveringFamily {
    pub fn new(target: Arc<SiteObject>, members: Vec<SiteMorphism>) -> Result<Self> {
        for m in &members {
            if *m.target != *target {
                return Err(Error::Invalid("family member with a different target".into()));
            }
        }
        Ok(CoveringFamily { target, members })
    }

    /// Whether the members are jointly surjective on every target component.
    pub fn is_jointly_surjective(&self) -> bool {
        let (obj, map) = self.union_parts();
        SiteMorphism { source: Arc::new(obj), target: self.target.clone(), map }.is_cover()
    }

    fn union_parts(&self) -> (SiteObject, Vec<usize>) {
        let mut comps = Vec::new();
        let mut map = Vec::new();
        for m in &self.members {
            comps.extend(m.source.components.iter().cloned());
            map.extend(m.map.iter().copied());
        }
        (SiteObject::new_unchecked(comps), map)
    }
}

/// Disjoint union of the members' sources, mapped into the common target.
pub fn covering_single(family: &CoveringFamily) -> Result<SiteMorphism> {
    let (obj, map) = family.union_parts();
    let f = SiteMorphism { source: Arc::new(obj), target: family.target.clone(), map };
    if !f.is_cover() {
        return Err(Error::Invalid("family is not jointly surjective".into()));
    }
    Ok(f)
}

pub fn is_cover(f: &SiteMorphism) -> bool {
    f.is_cover()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> FinSpace {
        FinSpace::from_names(&["a", "b", "c", "d"], &[("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]).unwrap()
    }

    #[test]
    fn closure_and_antisymmetry() {
        let s = FinSpace::from_names(&["x", "y", "z"], &[("x", "y"), ("y", "z")]).unwrap();
        assert!(s.leq(0, 2));
        assert!(FinSpace::from_names(&["x", "y"], &[("x", "y"), ("y", "x")]).is_err());
    }

    #[test]
    fn minimal_opens_are_down_sets() {
        let s = c4();
        assert_eq!(s.down(2).to_vec(), vec![0, 1, 2]);
        assert_eq!(s.down(0).to_vec(), vec![0]);
        assert!(s.is_open(&PointSet::from_points(4, [0, 1])));
        assert!(!s.is_open(&PointSet::from_points(4, [2])));
    }

    #[test]
    fn c4_self_intersections() {
        let s = c4();
        let u = SiteMorphism::minimal_open_cover(&s);
        let fp = fiber_product(&u, &u).unwrap();
        // Ordered pairs of minimal opens with nonempty intersection.
        let mut brute = 0;
        for x in 0..4 {
            for y in 0..4 {
                if s.down(x).intersects(s.down(y)) {
                    brute += 1;
                }
            }
        }
        assert_eq!(fp.object.len(), brute);
        assert_eq!(brute, 14);
        assert!(fp.p1.is_cover() && fp.p2.is_cover());
    }

    #[test]
    fn identity_and_disjoint_products() {
        let s = c4();
        let x = Arc::new(SiteObject::whole(&s));
        let id = SiteMorphism::identity(x.clone());
        let fp = fiber_product(&id, &id).unwrap();
        assert_eq!(*fp.object, *x);
        let a = Arc::new(SiteObject::new(&s, vec![PointSet::from_points(4, [0])]).unwrap());
        let b = Arc::new(SiteObject::new(&s, vec![PointSet::from_points(4, [1])]).unwrap());
        let fa = SiteMorphism::to_final(&s, a);
        let fb = SiteMorphism::to_final(&s, b);
        assert!(fiber_product(&fa, &fb).unwrap().object.is_empty());
    }

    #[test]
    fn covering_single_checks_surjectivity() {
        let s = c4();
        let x = Arc::new(SiteObject::whole(&s));
        let mk = |pts: &[usize]| {
            let o = Arc::new(SiteObject::new(&s, vec![PointSet::from_points(4, pts.iter().copied())]).unwrap());
            SiteMorphism::new(o, x.clone(), vec![0]).unwrap()
        };
        let fam = CoveringFamily::new(x.clone(), vec![mk(&[0, 1, 2]), mk(&[0, 1, 3])]).unwrap();
        let f = covering_single(&fam).unwrap();
        assert_eq!(f.source().len(), 2);
        assert!(f.is_cover());
        let bad = CoveringFamily::new(x.clone(), vec![mk(&[0, 1, 2])]).unwrap();
        assert!(covering_single(&bad).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = c4();
        let back = FinSpace::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let o = SiteObject::from_json(&s, r#"{"components":[["a","b","c"],["a"]]}"#).unwrap();
        assert_eq!(SiteObject::from_json(&s, &o.to_json(&s)).unwrap(), o);
    }
}
