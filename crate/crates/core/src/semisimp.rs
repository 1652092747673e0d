//! Semi-simplicial coverings, hypercoverings of type `r`, refinements and
//! simplicial homotopies.
//!
//! Levels are [`SiteObject`]s over one [`FinSpace`]; face operators are stored
//! as component index maps `faces[n][i][c]` for `f_i: U_n → U_{n-1}`.
//! Levels above the type are matching objects: a component of `U_n` is a
//! tuple `(c_0, …, c_n)` of components of `U_{n-1}` with `f_i c_j = f_{j-1} c_i`
//! for `i < j` and nonempty common intersection.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finsite::{FinSpace, PointSet, SiteMorphism, SiteObject};

#[derive(Clone, Debug)]
pub struct SemiSimplicialCover {
    space: Arc<FinSpace>,
    levels: Vec<Arc<SiteObject>>,
    faces: Vec<Vec<Vec<usize>>>,
    vertices: Vec<Vec<Vec<usize>>>,
}

impl SemiSimplicialCover {
    /// Builds and validates (identities, inclusions, covers).
    pub fn new(space: Arc<FinSpace>, levels: Vec<Arc<SiteObject>>, faces: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let s = Self::assemble(space, levels, faces)?;
        s.validate()?;
        Ok(s)
    }

    fn assemble(space: Arc<FinSpace>, levels: Vec<Arc<SiteObject>>, mut faces: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Invalid("a cover needs at least level 0".into()));
        }
        if faces.len() + 1 == levels.len() {
            faces.insert(0, Vec::new());
        }
        if faces.len() != levels.len() {
            return Err(Error::Malformed("face data does not match the number of levels".into()));
        }
        for n in 1..levels.len() {
            if faces[n].len() != n + 1 {
                return Err(Error::Malformed(format!("level {n} needs {} face maps", n + 1)));
            }
            for f in &faces[n] {
                if f.len() != levels[n].len() || f.iter().any(|&c| c >= levels[n - 1].len()) {
                    return Err(Error::Malformed(format!("face map at level {n} has the wrong shape")));
                }
            }
        }
        let mut s = SemiSimplicialCover { space, levels, faces, vertices: Vec::new() };
        s.vertices = (0..s.levels.len()).map(|n| (0..s.levels[n].len()).map(|c| s.compute_vertices(n, c)).collect()).collect();
        Ok(s)
    }

    fn compute_vertices(&self, n: usize, c: usize) -> Vec<usize> {
        (0..=n).map(|k| self.compute_vertex(n, c, k)).collect()
    }

    fn compute_vertex(&self, n: usize, c: usize, k: usize) -> usize {
        if n == 0 {
            c
        } else if k < n {
            self.compute_vertex(n - 1, self.faces[n][n][c], k)
        } else {
            self.compute_vertex(n - 1, self.faces[n][0][c], k - 1)
        }
    }

    /// Constant covering: every level is `X`, every face the identity.
    pub fn constant(space: Arc<FinSpace>, depth: usize) -> Self {
        let x = Arc::new(SiteObject::whole(&space));
        let levels = vec![x; depth + 1];
        let faces = (0..=depth).map(|n| if n == 0 { Vec::new() } else { vec![vec![0]; n + 1] }).collect();
        Self::assemble(space, levels, faces).unwrap()
    }

    pub fn space(&self) -> &Arc<FinSpace> {
        &self.space
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, n: usize) -> &Arc<SiteObject> {
        &self.levels[n]
    }

    pub fn levels(&self) -> &[Arc<SiteObject>] {
        &self.levels
    }

    pub fn level_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.len()).collect()
    }

    /// `f_i(c)` for a component `c` of `U_n`.
    pub fn face_of(&self, n: usize, i: usize, c: usize) -> usize {
        self.faces[n][i][c]
    }

    pub fn face_maps(&self, n: usize) -> &[Vec<usize>] {
        &self.faces[n]
    }

    /// `f_i: U_n → U_{n-1}` as a site morphism.
    pub fn face(&self, n: usize, i: usize) -> SiteMorphism {
        SiteMorphism::new_unchecked(self.levels[n].clone(), self.levels[n - 1].clone(), self.faces[n][i].clone())
    }

    /// Level-0 components at the vertices of `c ∈ U_n`.
    pub fn vertices(&self, n: usize, c: usize) -> &[usize] {
        &self.vertices[n][c]
    }

    /// Iterated face of `c ∈ U_n` onto the increasing vertex subset `sub`.
    pub fn iterated_face(&self, n: usize, c: usize, sub: &[usize]) -> usize {
        let mut cur = c;
        let mut level = n;
        for k in (0..=n).rev() {
            if !sub.contains(&k) {
                cur = self.faces[level][k][cur];
                level -= 1;
            }
        }
        cur
    }

    pub fn augmentation(&self) -> SiteMorphism {
        SiteMorphism::to_final(&self.space, self.levels[0].clone())
    }

    /// First `depth + 1` levels.
    pub fn truncate(&self, depth: usize) -> Self {
        let d = depth.min(self.depth());
        SemiSimplicialCover {
            space: self.space.clone(),
            levels: self.levels[..=d].to_vec(),
            faces: self.faces[..=d].to_vec(),
            vertices: self.vertices[..=d].to_vec(),
        }
    }

    /// Simplicial identities, inclusions along faces, and cover conditions.
    pub fn validate(&self) -> Result<()> {
        if !raw_cover(&self.levels[0], &SiteObject::whole(&self.space), &vec![0; self.levels[0].len()]) {
            return Err(Error::Invalid("augmentation U_0 -> X is not a cover".into()));
        }
        for n in 1..self.levels.len() {
            for i in 0..=n {
                let f = &self.faces[n][i];
                for (c, &t) in f.iter().enumerate() {
                    if !self.levels[n].component(c).is_subset(self.levels[n - 1].component(t)) {
                        return Err(Error::Invalid(format!("face {i} at level {n} is not an inclusion")));
                    }
                }
                if !raw_cover(&self.levels[n], &self.levels[n - 1], f) {
                    return Err(Error::Invalid(format!("face {i} at level {n} is not a cover")));
                }
            }
            if n >= 2 {
                for c in 0..self.levels[n].len() {
                    for j in 0..=n {
                        for i in 0..j {
                            let a = self.faces[n - 1][i][self.faces[n][j][c]];
                            let b = self.faces[n - 1][j - 1][self.faces[n][i][c]];
                            if a != b {
                                return Err(Error::Invalid(format!(
                                    "simplicial identity f_{i} f_{j} = f_{} f_{i} fails at level {n}",
                                    j - 1
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Matching object of the truncation `U_{≤ n-1}` in degree `n`.
    pub fn matching_object(&self, n: usize) -> Matching {
        assert!(n >= 1 && n <= self.levels.len());
        matching_object(&self.space, &self.levels, &self.faces, n)
    }
}

fn raw_cover(src: &SiteObject, tgt: &SiteObject, map: &[usize]) -> bool {
    let mut hit: Vec<Option<PointSet>> = vec![None; tgt.len()];
    for (c, &t) in map.iter().enumerate() {
        let s = src.component(c);
        hit[t] = Some(match hit[t].take() {
            Some(h) => h.union(s),
            None => s.clone(),
        });
    }
    tgt.components().iter().zip(&hit).all(|(c, h)| h.as_ref().is_some_and(|h| c.is_subset(h)))
}

/// Matching families in degree `n`: components and their face tuples.
#[derive(Clone, Debug)]
pub struct Matching {
    pub components: Vec<PointSet>,
    pub faces: Vec<Vec<usize>>,
}

impl Matching {
    pub fn index(&self) -> HashMap<Vec<usize>, usize> {
        self.faces.iter().enumerate().map(|(k, t)| (t.clone(), k)).collect()
    }
}

fn matching_object(space: &FinSpace, levels: &[Arc<SiteObject>], faces: &[Vec<Vec<usize>>], n: usize) -> Matching {
    let prev = &levels[n - 1];
    let m = prev.len();
    let mut out: Vec<(Vec<usize>, PointSet)> = Vec::new();
    if n == 1 {
        for a in 0..m {
            for b in 0..m {
                let s = prev.component(a).intersect(prev.component(b));
                if !s.is_empty() {
                    // (f_0, f_1) = (second, first)
                    out.push((vec![b, a], s));
                }
            }
        }
    } else {
        // by_face0[v] = components c with f_0 c = v
        let mut by_face0: HashMap<usize, Vec<usize>> = HashMap::new();
        for c in 0..m {
            by_face0.entry(faces[n - 1][0][c]).or_default().push(c);
        }
        let mut tuple = Vec::with_capacity(n + 1);
        let all = space.all();
        extend_matching(prev, faces, n, &by_face0, &mut tuple, all, &mut out);
    }
    // Sort by reversed face tuple: lexicographic in vertex order for Čech levels.
    out.sort_by(|a, b| a.0.iter().rev().cmp(b.0.iter().rev()));
    Matching { components: out.iter().map(|(_, s)| s.clone()).collect(), faces: out.into_iter().map(|(t, _)| t).collect() }
}

fn extend_matching(
    prev: &SiteObject,
    faces: &[Vec<Vec<usize>>],
    n: usize,
    by_face0: &HashMap<usize, Vec<usize>>,
    tuple: &mut Vec<usize>,
    acc: PointSet,
    out: &mut Vec<(Vec<usize>, PointSet)>,
) {
    let j = tuple.len();
    if j == n + 1 {
        out.push((tuple.clone(), acc));
        return;
    }
    let fl = &faces[n - 1];
    let candidates: Vec<usize> = if j == 0 {
        (0..prev.len()).collect()
    } else {
        // f_0 c_j = f_{j-1} c_0
        by_face0.get(&fl[j - 1][tuple[0]]).cloned().unwrap_or_default()
    };
    for c in candidates {
        if (1..j).any(|i| fl[i][c] != fl[j - 1][tuple[i]]) {
            continue;
        }
        let s = acc.intersect(prev.component(c));
        if s.is_empty() {
            continue;
        }
        tuple.push(c);
        extend_matching(prev, faces, n, by_face0, tuple, s, out);
        tuple.pop();
    }
}

/// A semi-simplicial covering that is coskeletal above degree `r`.
#[derive(Clone, Debug)]
pub struct Hypercovering {
    base: Arc<SemiSimplicialCover>,
    r: i32,
    index: Vec<HashMap<Vec<usize>, usize>>,
}

impl std::ops::Deref for Hypercovering {
    type Target = SemiSimplicialCover;
    fn deref(&self) -> &SemiSimplicialCover {
        &self.base
    }
}

impl Hypercovering {
    /// Type `-1`: the constant covering.
    pub fn constant(space: Arc<FinSpace>, depth: usize) -> Self {
        let base = SemiSimplicialCover::constant(space, depth);
        Self::wrap(base, -1)
    }

    fn wrap(base: SemiSimplicialCover, r: i32) -> Self {
        let index = (0..=base.depth())
            .map(|n| {
                if n as i32 > r && n > 0 {
                    (0..base.levels[n].len()).map(|c| ((0..=n).map(|i| base.faces[n][i][c]).collect(), c)).collect()
                } else {
                    HashMap::new()
                }
            })
            .collect();
        Hypercovering { base: Arc::new(base), r, index }
    }

    /// Čech covering of the cover `u: U → X` (type 0).
    pub fn cech(space: Arc<FinSpace>, u: Arc<SiteObject>, depth: usize) -> Result<Self> {
        let trunc = SemiSimplicialCover::new(space, vec![u], vec![Vec::new()])?;
        Self::coskeleton(&trunc, depth)
    }

    /// `cosk_r` of a truncation `U_0..U_r` (`r` = depth of the truncation).
    pub fn coskeleton(trunc: &SemiSimplicialCover, depth: usize) -> Result<Self> {
        trunc.validate()?;
        let r = trunc.depth();
        let mut levels = trunc.levels.clone();
        let mut faces = trunc.faces.clone();
        for n in r + 1..=depth {
            let m = matching_object(&trunc.space, &levels, &faces, n);
            let fs: Vec<Vec<usize>> = (0..=n).map(|i| m.faces.iter().map(|t| t[i]).collect()).collect();
            levels.push(Arc::new(SiteObject::new_unchecked(m.components)));
            faces.push(fs);
        }
        let base = SemiSimplicialCover::assemble(trunc.space.clone(), levels, faces)?;
        let h = Self::wrap(base, r as i32);
        h.base.validate()?;
        Ok(h)
    }

    /// Hypercovering from arbitrary levels, checked to be of type `r`.
    pub fn from_levels(base: SemiSimplicialCover, r: i32) -> Result<Self> {
        base.validate()?;
        let h = Self::wrap(base, r);
        h.validate()?;
        Ok(h)
    }

    pub fn base(&self) -> &Arc<SemiSimplicialCover> {
        &self.base
    }

    pub fn type_r(&self) -> i32 {
        self.r
    }

    /// Same truncation, coskeleton rebuilt to a new depth.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        if self.r < 0 {
            return Ok(Self::constant(self.space.clone(), depth));
        }
        let t = self.base.truncate(self.r as usize);
        Self::coskeleton(&t, depth)
    }

    /// Component of `U_n` (`n > r`) with the given face tuple.
    pub fn lookup(&self, n: usize, faces: &[usize]) -> Option<usize> {
        if self.r < 0 {
            return Some(0);
        }
        self.index[n].get(faces).copied()
    }

    /// Component of `U_n` whose vertices are `verts` (Čech levels only).
    pub fn lookup_vertices(&self, verts: &[usize]) -> Option<usize> {
        if self.r < 0 {
            return Some(0);
        }
        assert_eq!(self.r, 0, "vertex lookup needs a Čech covering");
        let n = verts.len() - 1;
        if n == 0 {
            return Some(verts[0]);
        }
        let mut tuple = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let mut v = verts.to_vec();
            v.remove(i);
            tuple.push(self.lookup_vertices(&v)?);
        }
        self.lookup(n, &tuple)
    }

    /// Type-`r` conditions: `U_n → M_n` covers for `n ≤ r`, and equals it above.
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.r < 0 {
            if self.levels.iter().any(|l| l.len() != 1 || l.component(0) != &self.space.all()) {
                return Err(Error::Invalid("type -1 requires the constant covering".into()));
            }
            return Ok(());
        }
        for n in 1..=self.depth() {
            let m = self.base.matching_object(n);
            let tuples: Vec<Vec<usize>> =
                (0..self.levels[n].len()).map(|c| (0..=n).map(|i| self.faces[n][i][c]).collect()).collect();
            let idx = m.index();
            if n as i32 > self.r {
                if m.faces.len() != tuples.len() || tuples.iter().any(|t| !idx.contains_key(t)) {
                    return Err(Error::Invalid(format!("level {n} is not the coskeleton level")));
                }
                for (c, t) in tuples.iter().enumerate() {
                    if &m.components[idx[t]] != self.levels[n].component(c) {
                        return Err(Error::Invalid(format!("level {n} is not the coskeleton level")));
                    }
                }
            } else {
                let map: Vec<usize> = tuples.iter().map(|t| idx[t]).collect();
                let mo = SiteObject::new_unchecked(m.components.clone());
                if !raw_cover(&self.levels[n], &mo, &map) {
                    return Err(Error::Invalid(format!("level {n} does not cover its matching object")));
                }
            }
        }
        Ok(())
    }

    /// Replaces `U_d` by the source of `w: W → U_d` (a cover), keeps lower
    /// degrees, pulls back intermediate degrees up to `r` and re-coskeletonizes.
    pub fn refine(&self, d: usize, w: &SiteMorphism) -> Result<(Hypercovering, Refinement)> {
        if self.r < 0 || d as i32 > self.r {
            return Err(Error::Invalid(format!("refinement degree {d} exceeds type {}", self.r)));
        }
        if w.target().components() != self.levels[d].components() {
            return Err(Error::Invalid("refining cover does not target the chosen level".into()));
        }
        if !w.is_cover() {
            return Err(Error::Invalid("refining family is not a cover".into()));
        }
        let r = self.r as usize;
        let mut levels: Vec<Arc<SiteObject>> = self.levels[..d].to_vec();
        let mut faces: Vec<Vec<Vec<usize>>> = self.faces[..d].to_vec();
        let mut theta: Vec<Vec<usize>> = (0..d).map(|n| (0..self.levels[n].len()).collect()).collect();
        levels.push(w.source().clone());
        faces.push(if d == 0 { Vec::new() } else { (0..=d).map(|i| w.map().iter().map(|&c| self.faces[d][i][c]).collect()).collect() });
        theta.push(w.map().to_vec());
        for n in d + 1..=r.min(self.depth()) {
            // Pairs (c ∈ U_n, matching family over the new U_{n-1}) compatible with θ_{n-1}.
            let m = matching_object(&self.space, &levels, &faces, n);
            let mut comps = Vec::new();
            let mut fs: Vec<Vec<usize>> = vec![Vec::new(); n + 1];
            let mut th = Vec::new();
            for c in 0..self.levels[n].len() {
                for (k, t) in m.faces.iter().enumerate() {
                    if (0..=n).all(|i| theta[n - 1][t[i]] == self.faces[n][i][c]) {
                        let s = m.components[k].intersect(self.levels[n].component(c));
                        if !s.is_empty() {
                            comps.push(s);
                            for i in 0..=n {
                                fs[i].push(t[i]);
                            }
                            th.push(c);
                        }
                    }
                }
            }
            levels.push(Arc::new(SiteObject::new_unchecked(comps)));
            faces.push(fs);
            theta.push(th);
        }
        let top = r.min(self.depth());
        let trunc = SemiSimplicialCover::assemble(self.space.clone(), levels, faces)?;
        let h = Self::coskeleton(&trunc, self.depth())?;
        h.validate()?;
        let refinement = Refinement::extend(Arc::new(h.clone()), Arc::new(self.clone()), theta, top)?;
        Ok((h, refinement))
    }

    /// Degree-wise products up to the type, then coskeleton.
    pub fn common_refinement(a: &Hypercovering, b: &Hypercovering) -> Result<(Hypercovering, Refinement, Refinement)> {
        if !Arc::ptr_eq(&a.space, &b.space) && a.space.names() != b.space.names() {
            return Err(Error::Invalid("hypercoverings live on different spaces".into()));
        }
        let depth = a.depth().min(b.depth());
        if a.r < 0 && b.r < 0 {
            let h = Hypercovering::constant(a.space.clone(), depth);
            let pa = Refinement::extend(Arc::new(h.clone()), Arc::new(a.clone()), vec![vec![0]], 0)?;
            let pb = Refinement::extend(Arc::new(h.clone()), Arc::new(b.clone()), vec![vec![0]], 0)?;
            return Ok((h, pa, pb));
        }
        let r = a.r.max(b.r).max(0) as usize;
        let a = a.with_depth(depth.max(r))?;
        let b = b.with_depth(depth.max(r))?;
        let mut levels = Vec::new();
        let mut faces: Vec<Vec<Vec<usize>>> = Vec::new();
        let mut pa: Vec<Vec<usize>> = Vec::new();
        let mut pb: Vec<Vec<usize>> = Vec::new();
        let mut pair_index: Vec<HashMap<(usize, usize), usize>> = Vec::new();
        for n in 0..=r {
            let mut comps = Vec::new();
            let mut ia = Vec::new();
            let mut ib = Vec::new();
            let mut idx = HashMap::new();
            for x in 0..a.levels[n].len() {
                for y in 0..b.levels[n].len() {
                    let s = a.levels[n].component(x).intersect(b.levels[n].component(y));
                    if !s.is_empty() {
                        idx.insert((x, y), comps.len());
                        comps.push(s);
                        ia.push(x);
                        ib.push(y);
                    }
                }
            }
            let fs = if n == 0 {
                Vec::new()
            } else {
                (0..=n)
                    .map(|i| (0..comps.len()).map(|k| pair_index[n - 1][&(a.faces[n][i][ia[k]], b.faces[n][i][ib[k]])]).collect())
                    .collect()
            };
            levels.push(Arc::new(SiteObject::new_unchecked(comps)));
            faces.push(fs);
            pa.push(ia);
            pb.push(ib);
            pair_index.push(idx);
        }
        let trunc = SemiSimplicialCover::assemble(a.space.clone(), levels, faces)?;
        let h = Self::coskeleton(&trunc, depth.max(r))?;
        let ha = Arc::new(h.clone());
        let ra = Refinement::extend(ha.clone(), Arc::new(a), pa, r)?;
        let rb = Refinement::extend(ha, Arc::new(b), pb, r)?;
        Ok((h, ra, rb))
    }

    pub fn to_json(&self) -> String {
        let top = self.r.max(0) as usize;
        let j = HyperJson {
            type_r: self.r,
            levels: (0..=top.min(self.depth())).map(|n| self.levels[n].to_names(&self.space)).collect(),
            faces: (1..=top.min(self.depth())).map(|n| self.faces[n].clone()).collect(),
        };
        serde_json::to_string(&j).unwrap()
    }

    pub fn from_json(space: Arc<FinSpace>, s: &str, depth: usize) -> Result<Self> {
        let j: HyperJson = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        if j.type_r < 0 {
            return Ok(Self::constant(space, depth));
        }
        if j.levels.len() != j.type_r as usize + 1 || j.faces.len() != j.type_r as usize {
            return Err(Error::Malformed("truncation must list levels 0..=r and their faces".into()));
        }
        let levels = j
            .levels
            .iter()
            .map(|l| SiteObject::from_names(&space, l).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        let mut faces = vec![Vec::new()];
        faces.extend(j.faces);
        let trunc = SemiSimplicialCover::assemble(space, levels, faces)?;
        Self::coskeleton(&trunc, depth)
    }
}

#[derive(Serialize, Deserialize)]
struct HyperJson {
    #[serde(rename = "type")]
    type_r: i32,
    levels: Vec<Vec<Vec<String>>>,
    faces: Vec<Vec<Vec<usize>>>,
}

/// Morphism of semi-simplicial coverings `θ_•: U_• → V_•`.
#[derive(Clone, Debug)]
pub struct Refinement {
    source: Arc<Hypercovering>,
    target: Arc<Hypercovering>,
    maps: Vec<Vec<usize>>,
}

impl Refinement {
    pub fn new(source: Arc<Hypercovering>, target: Arc<Hypercovering>, maps: Vec<Vec<usize>>) -> Result<Self> {
        let r = Refinement { source, target, maps };
        r.validate()?;
        Ok(r)
    }

    pub fn identity(h: Arc<Hypercovering>) -> Self {
        let maps = h.levels.iter().map(|l| (0..l.len()).collect()).collect();
        Refinement { source: h.clone(), target: h, maps }
    }

    /// Extends maps given on levels `0..=k` using that the target is
    /// coskeletal above `k` (or above its own type).
    pub fn extend(source: Arc<Hypercovering>, target: Arc<Hypercovering>, mut maps: Vec<Vec<usize>>, k: usize) -> Result<Self> {
        let depth = source.depth().min(target.depth());
        maps.truncate(k + 1);
        for n in maps.len()..=depth {
            if (n as i32) <= target.r {
                return Err(Error::Invalid(format!("level {n} of the target is not coskeletal")));
            }
            let mut m = Vec::with_capacity(source.levels[n].len());
            for c in 0..source.levels[n].len() {
                let t: Vec<usize> = (0..=n).map(|i| maps[n - 1][source.faces[n][i][c]]).collect();
                let v = target
                    .lookup(n, &t)
                    .ok_or_else(|| Error::Invalid(format!("no target component for a level-{n} family")))?;
                m.push(v);
            }
            maps.push(m);
        }
        Refinement::new(source, target, maps)
    }

    /// Into a Čech (or constant) target from level-0 choices.
    pub fn to_cech(source: Arc<Hypercovering>, target: Arc<Hypercovering>, theta0: Vec<usize>) -> Result<Self> {
        if target.r > 0 {
            return Err(Error::Invalid("target must be a Čech or constant covering".into()));
        }
        let depth = source.depth().min(target.depth());
        let mut maps = vec![theta0];
        for n in 1..=depth {
            let mut m = Vec::new();
            for c in 0..source.levels[n].len() {
                let verts: Vec<usize> = source.vertices(n, c).iter().map(|&v| maps[0][v]).collect();
                m.push(target.lookup_vertices(&verts).ok_or_else(|| Error::Invalid("vertex family has empty intersection".into()))?);
            }
            maps.push(m);
        }
        Refinement::new(source, target, maps)
    }

    pub fn source(&self) -> &Arc<Hypercovering> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Hypercovering> {
        &self.target
    }

    pub fn map(&self, n: usize) -> &[usize] {
        &self.maps[n]
    }

    pub fn depth(&self) -> usize {
        self.maps.len() - 1
    }

    pub fn level(&self, n: usize) -> SiteMorphism {
        SiteMorphism::new_unchecked(self.source.levels[n].clone(), self.target.levels[n].clone(), self.maps[n].clone())
    }

    pub fn then(&self, other: &Refinement) -> Refinement {
        let maps = self.maps.iter().zip(&other.maps).map(|(a, b)| a.iter().map(|&c| b[c]).collect()).collect();
        Refinement { source: self.source.clone(), target: other.target.clone(), maps }
    }

    pub fn validate(&self) -> Result<()> {
        let (s, t) = (&self.source, &self.target);
        for (n, m) in self.maps.iter().enumerate() {
            if m.len() != s.levels[n].len() {
                return Err(Error::Invalid(format!("refinement map at level {n} has the wrong length")));
            }
            for (c, &v) in m.iter().enumerate() {
                if v >= t.levels[n].len() || !s.levels[n].component(c).is_subset(t.levels[n].component(v)) {
                    return Err(Error::Invalid(format!("refinement at level {n} is not an inclusion")));
                }
                if n > 0 {
                    for i in 0..=n {
                        if self.maps[n - 1][s.faces[n][i][c]] != t.faces[n][i][v] {
                            return Err(Error::Invalid(format!("refinement does not commute with face {i} at level {n}")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.maps).unwrap()
    }
}

/// Simplicial homotopy `h_0..h_n: U_n → V_{n+1}` from `θ` to `ζ`.
#[derive(Clone, Debug)]
pub struct Homotopy {
    theta: Refinement,
    zeta: Refinement,
    /// `h[n][j][c]`.
    h: Vec<Vec<Vec<usize>>>,
}

impl Homotopy {
    pub fn new(theta: Refinement, zeta: Refinement, h: Vec<Vec<Vec<usize>>>) -> Result<Self> {
        let hom = Homotopy { theta, zeta, h };
        if !hom.is_valid() {
            return Err(Error::Invalid("simplicial homotopy identities fail".into()));
        }
        Ok(hom)
    }

    pub fn new_unchecked(theta: Refinement, zeta: Refinement, h: Vec<Vec<Vec<usize>>>) -> Self {
        Homotopy { theta, zeta, h }
    }

    /// Standard homotopy into a Čech covering:
    /// `h_j(u) = (ζ u_0, …, ζ u_j, θ u_j, …, θ u_n)` on vertices.
    pub fn cech(theta: Refinement, zeta: Refinement) -> Result<Self> {
        let u = theta.source.clone();
        let v = theta.target.clone();
        if v.r > 0 {
            return Err(Error::Invalid("target must be a Čech or constant covering".into()));
        }
        let depth = u.depth().min(v.depth() - 1).min(theta.depth()).min(zeta.depth());
        let mut h = Vec::new();
        for n in 0..=depth {
            let mut level = Vec::new();
            for j in 0..=n {
                let mut m = Vec::new();
                for c in 0..u.levels[n].len() {
                    let verts = u.vertices(n, c);
                    let mut t: Vec<usize> = verts[..=j].iter().map(|&x| zeta.maps[0][x]).collect();
                    t.extend(verts[j..].iter().map(|&x| theta.maps[0][x]));
                    m.push(v.lookup_vertices(&t).ok_or_else(|| Error::Invalid("homotopy family has empty intersection".into()))?);
                }
                level.push(m);
            }
            h.push(level);
        }
        Homotopy::new(theta, zeta, h)
    }

    pub fn theta(&self) -> &Refinement {
        &self.theta
    }

    pub fn zeta(&self) -> &Refinement {
        &self.zeta
    }

    /// Highest `n` with `h_•: U_n → V_{n+1}` present.
    pub fn depth(&self) -> usize {
        self.h.len() - 1
    }

    pub fn map(&self, n: usize, j: usize) -> &[usize] {
        &self.h[n][j]
    }

    pub fn level(&self, n: usize, j: usize) -> SiteMorphism {
        SiteMorphism::new_unchecked(
            self.theta.source.levels[n].clone(),
            self.theta.target.levels[n + 1].clone(),
            self.h[n][j].clone(),
        )
    }

    /// Replaces one component image (negative-control helper).
    pub fn corrupted(&self, n: usize, j: usize, c: usize, to: usize) -> Homotopy {
        let mut h = self.h.clone();
        h[n][j][c] = to;
        Homotopy { theta: self.theta.clone(), zeta: self.zeta.clone(), h }
    }

    pub fn is_valid(&self) -> bool {
        validate_homotopy(self)
    }
}

/// Boundary conditions, inclusions, and the four identity families.
pub fn validate_homotopy(hm: &Homotopy) -> bool {
    let u = &hm.theta.source;
    let v = &hm.theta.target;
    if !Arc::ptr_eq(u, &hm.zeta.source) && u.level_sizes() != hm.zeta.source.level_sizes() {
        return false;
    }
    let fv = |n: usize, i: usize, c: usize| v.faces[n][i][c];
    let fu = |n: usize, i: usize, c: usize| u.faces[n][i][c];
    for (n, level) in hm.h.iter().enumerate() {
        if level.len() != n + 1 || n + 1 > v.depth() {
            return false;
        }
        for m in level {
            if m.len() != u.levels[n].len() {
                return false;
            }
            for (c, &t) in m.iter().enumerate() {
                if t >= v.levels[n + 1].len() || !u.levels[n].component(c).is_subset(v.levels[n + 1].component(t)) {
                    return false;
                }
            }
        }
        for c in 0..u.levels[n].len() {
            let h = |j: usize| level[j][c];
            if fv(n + 1, 0, h(0)) != hm.theta.maps[n][c] || fv(n + 1, n + 1, h(n)) != hm.zeta.maps[n][c] {
                return false;
            }
            for j in 0..=n {
                for i in 0..=n + 1 {
                    let lhs = fv(n + 1, i, h(j));
                    let ok = if i < j {
                        lhs == hm.h[n - 1][j - 1][fu(n, i, c)]
                    } else if i == j && i >= 1 {
                        lhs == fv(n + 1, i, h(i - 1))
                    } else if i == j + 1 && i >= 1 && i <= n {
                        lhs == fv(n + 1, i, h(i))
                    } else if i > j + 1 {
                        lhs == hm.h[n - 1][j][fu(n, i - 1, c)]
                    } else {
                        true
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c4() -> Arc<FinSpace> {
        Arc::new(FinSpace::from_names(&["a", "b", "c", "d"], &[("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]).unwrap())
    }

    fn minimal(space: &Arc<FinSpace>) -> Arc<SiteObject> {
        SiteMorphism::minimal_open_cover(space).source().clone()
    }

    /// Ordered tuples of cover members with nonempty intersection.
    fn brute_tuples(obj: &SiteObject, len: usize, n: usize) -> usize {
        let m = obj.len();
        let mut count = 0;
        let total = m.pow(len as u32);
        for code in 0..total {
            let mut s = PointSet::from_points(n, 0..n);
            let mut k = code;
            for _ in 0..len {
                s = s.intersect(obj.component(k % m));
                k /= m;
            }
            if !s.is_empty() {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn cech_levels_on_c4() {
        let sp = c4();
        let u = minimal(&sp);
        let h = Hypercovering::cech(sp.clone(), u.clone(), 3).unwrap();
        let sizes = h.level_sizes();
        for n in 0..=3 {
            assert_eq!(sizes[n], brute_tuples(&u, n + 1, 4));
        }
        assert_eq!(sizes, vec![4, 14, 46, 146]);
        h.validate().unwrap();
        // Level 1 faces: p_0 = second factor, p_1 = first.
        let c = (0..sizes[1]).find(|&c| h.vertices(1, c) == [0, 2]).unwrap();
        assert_eq!(h.face_of(1, 0, c), 2);
        assert_eq!(h.face_of(1, 1, c), 0);
    }

    #[test]
    fn constant_and_identity_covers() {
        let sp = c4();
        let h = Hypercovering::constant(sp.clone(), 3);
        h.validate().unwrap();
        let x = Arc::new(SiteObject::whole(&sp));
        let cech = Hypercovering::cech(sp.clone(), x, 3).unwrap();
        assert_eq!(cech.level_sizes(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn coskeleton_reproduces_itself() {
        let sp = c4();
        let h = Hypercovering::cech(sp.clone(), minimal(&sp), 3).unwrap();
        let again = h.with_depth(3).unwrap();
        assert_eq!(again.level_sizes(), h.level_sizes());
        for n in 1..=3 {
            assert_eq!(again.face_maps(n), h.face_maps(n));
        }
    }

    #[test]
    fn refine_level_zero() {
        let sp = c4();
        let h = Hypercovering::cech(sp.clone(), minimal(&sp), 2).unwrap();
        // Split ↓c = {a,b,c} into {a} ∪ ... keep as {a,b,c} plus {a}: five members.
        let u0 = h.level(0).clone();
        let mut comps = u0.components().to_vec();
        comps.push(PointSet::from_points(4, [0]));
        let mut map: Vec<usize> = (0..4).collect();
        map.push(2);
        let w = SiteMorphism::new(Arc::new(SiteObject::new(&sp, comps).unwrap()), u0, map).unwrap();
        let (h2, r) = h.refine(0, &w).unwrap();
        assert_eq!(h2.level(0).len(), 5);
        r.validate().unwrap();
        assert!(h.refine(1, &w).is_err());
    }

    #[test]
    fn cech_homotopy_validates_and_corruption_fails() {
        let sp = c4();
        let v = Arc::new(Hypercovering::cech(sp.clone(), minimal(&sp), 3).unwrap());
        let u = v.clone();
        // θ = identity, ζ sends {a} and {b} into ↓c.
        let theta = Refinement::to_cech(u.clone(), v.clone(), vec![0, 1, 2, 3]).unwrap();
        let zeta = Refinement::to_cech(u.clone(), v.clone(), vec![2, 2, 2, 3]).unwrap();
        let h = Homotopy::cech(theta, zeta).unwrap();
        assert!(h.is_valid());
        let bad = h.corrupted(1, 0, 0, (h.map(1, 0)[0] + 1) % v.level(2).len());
        assert!(!bad.is_valid());
    }

    #[test]
    fn common_refinement_of_two_covers() {
        let sp = c4();
        let ab_c = PointSet::from_points(4, [0, 1, 2]);
        let ab_d = PointSet::from_points(4, [0, 1, 3]);
        let a = PointSet::from_points(4, [0]);
        let b = PointSet::from_points(4, [1]);
        let u = Arc::new(SiteObject::new(&sp, vec![ab_c.clone(), ab_d.clone()]).unwrap());
        let w = Arc::new(SiteObject::new(&sp, vec![a, b, ab_c, ab_d]).unwrap());
        let h1 = Hypercovering::cech(sp.clone(), u, 2).unwrap();
        let h2 = Hypercovering::cech(sp.clone(), w, 2).unwrap();
        let (h, p1, p2) = Hypercovering::common_refinement(&h1, &h2).unwrap();
        // nonempty pairwise intersections of the two families
        assert_eq!(h.level(0).len(), 2 * 4);
        p1.validate().unwrap();
        p2.validate().unwrap();
        let (d, q1, q2) = Hypercovering::common_refinement(&h1, &h1).unwrap();
        assert_eq!(d.level(0).len(), 4);
        assert_eq!(q1.level_sizes_match(&q2), true);
    }

    impl Refinement {
        fn level_sizes_match(&self, other: &Refinement) -> bool {
            self.maps.iter().map(|m| m.len()).eq(other.maps.iter().map(|m| m.len()))
        }
    }

    #[test]
    fn json_round_trip() {
        let sp = c4();
        let h = Hypercovering::cech(sp.clone(), minimal(&sp), 2).unwrap();
        let back = Hypercovering::from_json(sp.clone(), &h.to_json(), 2).unwrap();
        assert_eq!(back.level_sizes(), h.level_sizes());
    }
}
