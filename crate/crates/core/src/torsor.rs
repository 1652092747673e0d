//! Torsors under abelian sheaves.
//!
//! A torsor over a site object `B` is stored on the point cover of `B`: one
//! member `↓x` for each point `x` of each component. Transition data lives on
//! comparable pairs `z < x` of a component as an element `g_(z,x) ∈ F_z`, and
//! a section is a family `s_x ∈ F_x` with `ρ_{x→z} s_x − s_z = g_(z,x)`.
//! Every operation (wedge, inverse, induced torsor, pullback, alternating
//! preimage) is additive arithmetic on these chains.

use std::collections::{HashMap, HashSet};
use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::abgrp::{FpAbGroup, GroupHom, SparseVec};
use crate::cochain::{SheafCohomology, TotalComplex, Transport};
use crate::error::{Error, Result};
use crate::finsite::{FinSpace, SiteMorphism, SiteObject};
use crate::int::Int;
use crate::semisimp::{Hypercovering, SemiSimplicialCover};
use crate::sheaf::{Layout, Sheaf, SheafHom};

/// One coordinate block of a chain cochain group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub comp: usize,
    /// Strictly increasing chain `w_0 < … < w_k`; values live in `F_{w_0}`.
    pub chain: Vec<usize>,
    pub offset: usize,
    pub len: usize,
}

/// Chain cochains `C^0, C^1, C^2` of a sheaf over the point cover of a site
/// object, with `D0` and `D1`.
pub struct PosetCochains {
    sheaf: Arc<Sheaf>,
    base: Arc<SiteObject>,
    entries: [Vec<Entry>; 3],
    index: [HashMap<(usize, Vec<usize>), usize>; 3],
    groups: [Arc<FpAbGroup>; 3],
    d0: OnceLock<GroupHom>,
    d1: OnceLock<GroupHom>,
}

impl std::fmt::Debug for PosetCochains {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PosetCochains({} / {} / {} blocks)", self.entries[0].len(), self.entries[1].len(), self.entries[2].len())
    }
}

impl PosetCochains {
    pub fn new(sheaf: Arc<Sheaf>, base: Arc<SiteObject>) -> Arc<Self> {
        let sp = sheaf.space().clone();
        let mut entries: [Vec<Entry>; 3] = Default::default();
        let mut index: [HashMap<(usize, Vec<usize>), usize>; 3] = Default::default();
        let mut offs = [0usize; 3];
        let mut push = |k: usize, comp: usize, chain: Vec<usize>| {
            let len = sheaf.stalk(chain[0]).generators();
            index[k].insert((comp, chain.clone()), entries[k].len());
            entries[k].push(Entry { comp, chain, offset: offs[k], len });
            offs[k] += len;
        };
        for (c, comp) in base.components().iter().enumerate() {
            for x in comp.iter() {
                push(0, c, vec![x]);
            }
            for x in comp.iter() {
                for z in sp.strictly_below(x) {
                    push(1, c, vec![z, x]);
                }
            }
            for x in comp.iter() {
                for z in sp.strictly_below(x) {
                    for w in sp.strictly_below(z) {
                        push(2, c, vec![w, z, x]);
                    }
                }
            }
        }
        let group = |es: &[Entry]| {
            let parts: Vec<&FpAbGroup> = es.iter().map(|e| sheaf.stalk(e.chain[0]).as_ref()).collect();
            Arc::new(FpAbGroup::direct_sum(&parts))
        };
        let groups = [group(&entries[0]), group(&entries[1]), group(&entries[2])];
        Arc::new(PosetCochains { sheaf, base, entries, index, groups, d0: OnceLock::new(), d1: OnceLock::new() })
    }

    pub fn sheaf(&self) -> &Arc<Sheaf> {
        &self.sheaf
    }

    pub fn base(&self) -> &Arc<SiteObject> {
        &self.base
    }

    pub fn space(&self) -> &Arc<FinSpace> {
        self.sheaf.space()
    }

    pub fn entries(&self, k: usize) -> &[Entry] {
        &self.entries[k]
    }

    pub fn entry(&self, k: usize, comp: usize, chain: &[usize]) -> Option<&Entry> {
        self.index[k].get(&(comp, chain.to_vec())).map(|&i| &self.entries[k][i])
    }

    pub fn group(&self, k: usize) -> &Arc<FpAbGroup> {
        &self.groups[k]
    }

    /// Value of `v ∈ C^k` at one block, re-based to zero.
    pub fn value(&self, k: usize, v: &SparseVec, comp: usize, chain: &[usize]) -> SparseVec {
        match self.entry(k, comp, chain) {
            Some(e) => v.slice(e.offset, e.offset + e.len),
            None => SparseVec::new(),
        }
    }

    /// `C^0` coordinates agree with the section layout of the sheaf.
    pub fn layout(&self) -> Layout {
        Layout::new(&self.base, |x| self.sheaf.stalk(x).generators())
    }

    /// `(D0 s)_(z,x) = ρ_{x→z} s_x − s_z`.
    pub fn d0(&self) -> &GroupHom {
        self.d0.get_or_init(|| {
            let f = &self.sheaf;
            let mut cols: Vec<Vec<(usize, Int)>> = vec![Vec::new(); self.groups[0].generators()];
            for e in &self.entries[1] {
                let (z, x) = (e.chain[0], e.chain[1]);
                let ex = self.entry(0, e.comp, &[x]).unwrap();
                let ez = self.entry(0, e.comp, &[z]).unwrap();
                for g in 0..ex.len {
                    let r = f.restrict_element(x, z, &SparseVec::unit(g));
                    cols[ex.offset + g].extend(r.iter().map(|(i, v)| (e.offset + i, v.clone())));
                }
                for g in 0..ez.len {
                    cols[ez.offset + g].push((e.offset + g, -Int::ONE));
                }
            }
            let cols = cols.into_iter().map(SparseVec::from_entries).collect();
            GroupHom::new(self.groups[0].clone(), self.groups[1].clone(), cols)
        })
    }

    /// `(D1 g)_(w,z,x) = ρ_{z→w} g_(z,x) − g_(w,x) + g_(w,z)`.
    pub fn d1(&self) -> &GroupHom {
        self.d1.get_or_init(|| {
            let f = &self.sheaf;
            let mut cols: Vec<Vec<(usize, Int)>> = vec![Vec::new(); self.groups[1].generators()];
            for e in &self.entries[2] {
                let (w, z, x) = (e.chain[0], e.chain[1], e.chain[2]);
                let zx = self.entry(1, e.comp, &[z, x]).unwrap();
                for g in 0..zx.len {
                    let r = f.restrict_element(z, w, &SparseVec::unit(g));
                    cols[zx.offset + g].extend(r.iter().map(|(i, v)| (e.offset + i, v.clone())));
                }
                let wx = self.entry(1, e.comp, &[w, x]).unwrap();
                let wz = self.entry(1, e.comp, &[w, z]).unwrap();
                for g in 0..e.len {
                    cols[wx.offset + g].push((e.offset + g, -Int::ONE));
                    cols[wz.offset + g].push((e.offset + g, Int::ONE));
                }
            }
            let cols = cols.into_iter().map(SparseVec::from_entries).collect();
            GroupHom::new(self.groups[1].clone(), self.groups[2].clone(), cols)
        })
    }

    /// Pullback `C^k(src) → C^k(self)` along a component map into `src`'s base.
    pub fn pull_matrix(&self, src: &PosetCochains, map: &[usize], k: usize) -> Result<GroupHom> {
        if map.len() != self.base.len() {
            return Err(Error::Invalid("component map has the wrong length".into()));
        }
        let mut cols: Vec<Vec<(usize, Int)>> = vec![Vec::new(); src.groups[k].generators()];
        for e in &self.entries[k] {
            let s = src
                .entry(k, map[e.comp], &e.chain)
                .ok_or_else(|| Error::Invalid(format!("component {} does not map into component {}", e.comp, map[e.comp])))?;
            for g in 0..e.len {
                cols[s.offset + g].push((e.offset + g, Int::ONE));
            }
        }
        let cols = cols.into_iter().map(SparseVec::from_entries).collect();
        Ok(GroupHom::new(src.groups[k].clone(), self.groups[k].clone(), cols))
    }

    /// Pullback of one element.
    pub fn pull(&self, src: &PosetCochains, map: &[usize], k: usize, v: &SparseVec) -> Result<SparseVec> {
        let mut acc = Vec::new();
        for e in &self.entries[k] {
            let s = src
                .entry(k, map[e.comp], &e.chain)
                .ok_or_else(|| Error::Invalid(format!("component {} does not map into component {}", e.comp, map[e.comp])))?;
            acc.extend(v.slice(s.offset, s.offset + s.len).iter().map(|(i, c)| (e.offset + i, c.clone())));
        }
        Ok(SparseVec::from_entries(acc))
    }

    /// `Σ sign · pull(map)` over the given signed maps.
    pub fn pull_signed(&self, src: &PosetCochains, maps: &[(i64, Vec<usize>)], k: usize, v: &SparseVec) -> Result<SparseVec> {
        let mut acc = SparseVec::new();
        for (sign, m) in maps {
            acc = acc.add(&self.pull(src, m, k, v)?.scale(&Int::from(*sign)));
        }
        Ok(acc)
    }

    /// Stalkwise image under `h: src.sheaf → self.sheaf` (same base).
    pub fn map_along(&self, src: &PosetCochains, h: &SheafHom, k: usize, v: &SparseVec) -> Result<SparseVec> {
        if src.base.components() != self.base.components() {
            return Err(Error::Invalid("induced cochains need the same base".into()));
        }
        let mut acc = Vec::new();
        for (e, s) in self.entries[k].iter().zip(&src.entries[k]) {
            let val = h.at(e.chain[0]).apply(&v.slice(s.offset, s.offset + s.len));
            acc.extend(val.iter().map(|(i, c)| (e.offset + i, c.clone())));
        }
        Ok(SparseVec::from_entries(acc))
    }

    pub fn equal(&self, k: usize, a: &SparseVec, b: &SparseVec) -> bool {
        self.groups[k].equal_elements(a, b)
    }

    pub fn is_zero(&self, k: usize, a: &SparseVec) -> bool {
        self.groups[k].is_zero_element(a)
    }

    /// Random element of `C^k` with entries in `-bound..=bound`.
    pub fn random(&self, k: usize, rng: &mut impl Rng, bound: i64) -> SparseVec {
        SparseVec::from_entries((0..self.groups[k].generators()).map(|i| (i, Int::from(rng.gen_range(-bound..=bound)))))
    }
}

fn same_base(a: &PosetCochains, b: &PosetCochains) -> bool {
    Arc::ptr_eq(&a.sheaf, &b.sheaf) && a.base.components() == b.base.components()
}

/// A torsor on the point cover of its base, given by its pair cocycle.
#[derive(Clone, Debug)]
pub struct Torsor {
    cochains: Arc<PosetCochains>,
    cocycle: SparseVec,
}

impl Torsor {
    /// Checks the cocycle condition `D1 g = 0`.
    pub fn new(cochains: Arc<PosetCochains>, cocycle: SparseVec) -> Result<Self> {
        if cocycle.max_index().is_some_and(|m| m >= cochains.group(1).generators()) {
            return Err(Error::Malformed("cocycle has too many coordinates".into()));
        }
        if !cochains.is_zero(2, &cochains.d1().apply(&cocycle)) {
            return Err(Error::Invalid("transition data violates the cocycle condition".into()));
        }
        Ok(Torsor { cochains, cocycle })
    }

    /// `F` itself.
    pub fn trivial(cochains: Arc<PosetCochains>) -> Self {
        Torsor { cochains, cocycle: SparseVec::new() }
    }

    /// Torsor with transition data `D0 λ` (trivial, with section `λ`).
    pub fn from_trivialization(cochains: Arc<PosetCochains>, lambda: &SparseVec) -> Self {
        let g = cochains.d0().apply(lambda);
        Torsor { cochains, cocycle: g }
    }

    /// Converts transition functions on an arbitrary cover `w: W → base`.
    /// `g(a, b, x)` is the value at `x ∈ W_a ∩ W_b` of `g_ab`, with the
    /// convention that sections satisfy `σ_b − σ_a = g_ab`.
    pub fn from_transitions(cochains: Arc<PosetCochains>, w: &SiteMorphism, g: impl Fn(usize, usize, usize) -> SparseVec) -> Result<Self> {
        let base = cochains.base().clone();
        if w.target().components() != base.components() || !w.is_cover() {
            return Err(Error::Invalid("trivializing family does not cover the base".into()));
        }
        let src = w.source();
        let members: Vec<Vec<usize>> = (0..base.len()).map(|c| (0..src.len()).filter(|&a| w.apply(a) == c).collect()).collect();
        // Cocycle condition on triple overlaps, checked at every point.
        for ms in &members {
            for &a in ms {
                for x in src.component(a).iter() {
                    if !cochains.sheaf().stalk(x).is_zero_element(&g(a, a, x)) {
                        return Err(Error::Invalid("transition g_aa is not zero".into()));
                    }
                    for &b in ms.iter().filter(|&&b| src.component(b).contains(x)) {
                        for &c in ms.iter().filter(|&&c| src.component(c).contains(x)) {
                            let lhs = g(a, b, x).add(&g(b, c, x));
                            if !cochains.sheaf().stalk(x).equal_elements(&lhs, &g(a, c, x)) {
                                return Err(Error::Invalid("transition functions violate the cocycle condition".into()));
                            }
                        }
                    }
                }
            }
        }
        let lambda = |c: usize, x: usize| members[c].iter().copied().find(|&a| src.component(a).contains(x)).unwrap();
        let mut acc = Vec::new();
        for e in cochains.entries(1) {
            let (z, x) = (e.chain[0], e.chain[1]);
            let v = g(lambda(e.comp, z), lambda(e.comp, x), z);
            acc.extend(v.iter().map(|(i, c)| (e.offset + i, c.clone())));
        }
        Torsor::new(cochains, SparseVec::from_entries(acc))
    }

    /// Random torsor: a random cocycle plus a random coboundary.
    pub fn random(cochains: Arc<PosetCochains>, rng: &mut impl Rng) -> Self {
        let mut g = cochains.d0().apply(&cochains.random(0, rng, 3));
        for z in cochains.d1().kernel() {
            g = g.add(&z.scale(&Int::from(rng.gen_range(-2..=2i64))));
        }
        Torsor { cochains, cocycle: g }
    }

    pub fn cochains(&self) -> &Arc<PosetCochains> {
        &self.cochains
    }

    pub fn sheaf(&self) -> &Arc<Sheaf> {
        self.cochains.sheaf()
    }

    pub fn base(&self) -> &Arc<SiteObject> {
        self.cochains.base()
    }

    pub fn cocycle(&self) -> &SparseVec {
        &self.cocycle
    }

    fn check_same(&self, other: &Torsor) -> Result<()> {
        if !same_base(&self.cochains, &other.cochains) {
            return Err(Error::Invalid("torsors live over different bases or sheaves".into()));
        }
        Ok(())
    }

    /// Contracted product `T' ∧ T''`.
    pub fn wedge(&self, other: &Torsor) -> Result<Torsor> {
        self.check_same(other)?;
        Ok(Torsor { cochains: self.cochains.clone(), cocycle: self.cocycle.add(&other.cocycle) })
    }

    pub fn inverse(&self) -> Torsor {
        Torsor { cochains: self.cochains.clone(), cocycle: self.cocycle.neg() }
    }

    /// `T^{±1}` by sign.
    pub fn power(&self, sign: i64) -> Torsor {
        if sign >= 0 {
            self.clone()
        } else {
            self.inverse()
        }
    }

    /// Equal transition data, i.e. canonically the same torsor.
    pub fn same_as(&self, other: &Torsor) -> bool {
        same_base(&self.cochains, &other.cochains) && self.cochains.equal(1, &self.cocycle, &other.cocycle)
    }

    /// `F' ∧^F T` along `h: F → F'`; `target` carries `F'` over the same base.
    pub fn induce(&self, h: &SheafHom, target: Arc<PosetCochains>) -> Result<Torsor> {
        if !Arc::ptr_eq(h.source(), self.sheaf()) || !Arc::ptr_eq(h.target(), target.sheaf()) {
            return Err(Error::Invalid("sheaf map does not match the torsor".into()));
        }
        let g = target.map_along(&self.cochains, h, 1, &self.cocycle)?;
        Ok(Torsor { cochains: target, cocycle: g })
    }

    /// `f^* T` for a component map `f` from `target`'s base into this base.
    pub fn pullback(&self, target: Arc<PosetCochains>, map: &[usize]) -> Result<Torsor> {
        let g = target.pull(&self.cochains, map, 1, &self.cocycle)?;
        Ok(Torsor { cochains: target, cocycle: g })
    }

    /// `p_alt^*(T) = p_0^*(T) ∧ p_1^*(T^{-1}) ∧ …` for face maps `p_i`.
    pub fn alternating_preimage(&self, faces: &[Vec<usize>], target: Arc<PosetCochains>) -> Result<Torsor> {
        let maps: Vec<(i64, Vec<usize>)> = faces.iter().enumerate().map(|(i, f)| (alt(i), f.clone())).collect();
        let g = target.pull_signed(&self.cochains, &maps, 1, &self.cocycle)?;
        Ok(Torsor { cochains: target, cocycle: g })
    }

    /// A section over the base, if one exists.
    pub fn find_section(&self) -> Option<TorsorSection> {
        let s = self.cochains.d0().solve(&self.cocycle)?;
        Some(TorsorSection { torsor: self.clone(), data: s })
    }

    /// A section over `over`, mapped into the base by `map`.
    pub fn find_section_over(&self, over: Arc<PosetCochains>, map: &[usize]) -> Result<Option<TorsorSection>> {
        Ok(self.pullback(over, map)?.find_section())
    }

    /// Class in `H^1(X, F)`; the base must be the whole space.
    ///
    /// The pair cocycle is expanded to a Čech cocycle on the cover of `X` by
    /// minimal opens and transported through the total complex.
    pub fn h1_class(&self) -> Result<Vec<Int>> {
        let global = Arc::new(SheafCohomology::new(self.sheaf().clone(), 2)?);
        self.h1_class_in(&global)
    }

    /// As [`Torsor::h1_class`], against a given resolution of `F` (top ≥ 2).
    pub fn h1_class_in(&self, global: &Arc<SheafCohomology>) -> Result<Vec<Int>> {
        let sp = self.sheaf().space().clone();
        if self.base().len() != 1 || self.base().component(0) != &sp.all() {
            return Err(Error::Invalid("h1_class needs a torsor over the whole space".into()));
        }
        let u0 = SiteMorphism::minimal_open_cover(&sp).source().clone();
        let cover = Arc::new(Hypercovering::cech(sp.clone(), u0, 2)?);
        let tot = Arc::new(TotalComplex::new(cover.clone(), global.resolution().clone(), 1)?);
        let transport = Transport::new(global.clone(), tot.clone(), 1)?;
        let cech = self.cech_cocycle(&cover, tot.layout(1, 0))?;
        let z = tot.embed(1, 1, &cech);
        if !tot.complex().is_cycle(1, &z) {
            return Err(Error::Failed("expanded transition data is not a total cocycle".into()));
        }
        transport.class_of(&z)
    }

    /// `g_xy|_w = g_(w,y) − g_(w,x)` on `↓x ∩ ↓y`, members of the minimal cover
    /// ordered by point.
    fn cech_cocycle(&self, cover: &Hypercovering, layout: &Layout) -> Result<SparseVec> {
        let sp = self.sheaf().space();
        let pair = |w: usize, y: usize| -> SparseVec {
            if w == y {
                SparseVec::new()
            } else {
                self.cochains.value(1, &self.cocycle, 0, &[w, y])
            }
        };
        let mut acc = Vec::new();
        for x in 0..sp.len() {
            for y in 0..sp.len() {
                let meet = sp.down(x).intersect(sp.down(y));
                if meet.is_empty() {
                    continue;
                }
                let c = cover.lookup_vertices(&[x, y]).ok_or_else(|| Error::Failed("missing Čech component".into()))?;
                for w in meet.iter() {
                    let b = layout.block(c, w);
                    let v = pair(w, y).sub(&pair(w, x));
                    acc.extend(v.iter().map(|(i, c)| (b.offset + i, c.clone())));
                }
            }
        }
        Ok(SparseVec::from_entries(acc))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TorsorJson::from_torsor(self)).unwrap()
    }

    pub fn from_json(cochains: Arc<PosetCochains>, s: &str) -> Result<Torsor> {
        let j: TorsorJson = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        j.into_torsor(cochains)
    }
}

pub(crate) fn alt(i: usize) -> i64 {
    if i % 2 == 0 {
        1
    } else {
        -1
    }
}

/// A section of a torsor over its base.
#[derive(Clone, Debug)]
pub struct TorsorSection {
    pub torsor: Torsor,
    /// Point values `s_x ∈ F_x`, in the coordinates of `C^0`.
    pub data: SparseVec,
}

impl TorsorSection {
    pub fn new(torsor: Torsor, data: SparseVec) -> Result<Self> {
        let s = TorsorSection { torsor, data };
        if !s.is_valid() {
            return Err(Error::Invalid("data is not a section of the torsor".into()));
        }
        Ok(s)
    }

    pub fn is_valid(&self) -> bool {
        let c = &self.torsor.cochains;
        c.equal(1, &c.d0().apply(&self.data), &self.torsor.cocycle)
    }

    /// Translation by a local section `t` of `F`.
    pub fn translate(&self, t: &SparseVec) -> TorsorSection {
        TorsorSection { torsor: self.torsor.clone(), data: self.data.add(t) }
    }

    /// `s' ∧ s''` in `T' ∧ T''`.
    pub fn wedge(&self, other: &TorsorSection) -> Result<TorsorSection> {
        Ok(TorsorSection { torsor: self.torsor.wedge(&other.torsor)?, data: self.data.add(&other.data) })
    }

    pub fn inverse(&self) -> TorsorSection {
        TorsorSection { torsor: self.torsor.inverse(), data: self.data.neg() }
    }

    pub fn pullback(&self, target: Arc<PosetCochains>, map: &[usize]) -> Result<TorsorSection> {
        let data = target.pull(&self.torsor.cochains, map, 0, &self.data)?;
        Ok(TorsorSection { torsor: self.torsor.pullback(target, map)?, data })
    }

    pub fn to_json(&self) -> String {
        let j = SectionJson { torsor: TorsorJson::from_torsor(&self.torsor), data: entries_json(&self.torsor.cochains, 0, &self.data) };
        serde_json::to_string(&j).unwrap()
    }

    pub fn from_json(cochains: Arc<PosetCochains>, s: &str) -> Result<TorsorSection> {
        let j: SectionJson = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        let t = j.torsor.into_torsor(cochains.clone())?;
        let data = entries_from_json(&cochains, 0, &j.data)?;
        TorsorSection::new(t, data)
    }
}

/// Free sign-reversing involution on a signed index set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexInvolution {
    signs: Vec<i64>,
    pairing: Vec<usize>,
}

impl IndexInvolution {
    pub fn new(signs: Vec<i64>, pairing: Vec<usize>) -> Result<Self> {
        if signs.len() != pairing.len() {
            return Err(Error::Invalid("signs and pairing differ in length".into()));
        }
        for (i, &j) in pairing.iter().enumerate() {
            if j >= pairing.len() || pairing[j] != i {
                return Err(Error::Invalid("pairing is not an involution".into()));
            }
            if j == i {
                return Err(Error::Invalid(format!("index {i} is a fixed point")));
            }
            if signs[j] != -signs[i] || signs[i].abs() != 1 {
                return Err(Error::Invalid(format!("indices {i} and {j} do not carry opposite signs")));
            }
        }
        Ok(IndexInvolution { signs, pairing })
    }

    /// Index set `{(a, b) : 0 ≤ a ≤ m+1, 0 ≤ b ≤ m}` in lexicographic order
    /// with signs `(-1)^{a+b}` and `(a, b) ↦ (b, a−1)` for `b < a`.
    /// For `q_alt^* p_alt^*` in degree `n` take `m = n`, with `(a, b) = (j, i)`.
    pub fn simplicial(m: usize) -> Self {
        let idx = |a: usize, b: usize| a * (m + 1) + b;
        let mut signs = Vec::new();
        let mut pairing = Vec::new();
        for a in 0..=m + 1 {
            for b in 0..=m {
                signs.push(alt(a + b));
                pairing.push(if b < a { idx(b, a - 1) } else { idx(b + 1, a) });
            }
        }
        IndexInvolution { signs, pairing }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn signs(&self) -> &[i64] {
        &self.signs
    }

    pub fn partner(&self, i: usize) -> usize {
        self.pairing[i]
    }

    /// Pairs `(i, σ i)` with `i < σ i`, ascending.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.len()).filter(|&i| i < self.pairing[i]).map(|i| (i, self.pairing[i])).collect()
    }
}

/// The signed factors `⋀ T_i^{ε_i}` of a contracted product, kept apart.
#[derive(Clone, Debug)]
pub struct ContractedProduct {
    pub factors: Vec<Torsor>,
    pub signs: Vec<i64>,
}

impl ContractedProduct {
    pub fn new(factors: Vec<Torsor>, signs: Vec<i64>) -> Result<Self> {
        if factors.is_empty() || factors.len() != signs.len() {
            return Err(Error::Invalid("contracted product needs one sign per factor".into()));
        }
        for f in &factors[1..] {
            factors[0].check_same(f)?;
        }
        Ok(ContractedProduct { factors, signs })
    }

    /// The product as one torsor.
    pub fn torsor(&self) -> Torsor {
        let c = self.factors[0].cochains.clone();
        let mut g = SparseVec::new();
        for (f, &s) in self.factors.iter().zip(&self.signs) {
            g = g.add(&f.cocycle.scale(&Int::from(s)));
        }
        Torsor { cochains: c, cocycle: g }
    }

    /// Reorders factors by `perm` (new position `k` holds old `perm[k]`).
    pub fn permuted(&self, perm: &[usize]) -> ContractedProduct {
        ContractedProduct { factors: perm.iter().map(|&k| self.factors[k].clone()).collect(), signs: perm.iter().map(|&k| self.signs[k]).collect() }
    }
}

/// Canonical section of a sign-paired contracted product.
///
/// Each pair `T ∧ T^{-1}` contributes the preimage of the zero section under
/// `T ∧ T^{-1} = F`: a local trivialization `t` of `T` enters once with each
/// sign. The sum runs over pairs in ascending order of the smaller index.
pub fn canonical_section(p: &ContractedProduct, inv: &IndexInvolution) -> Result<TorsorSection> {
    if inv.len() != p.factors.len() || inv.signs() != p.signs.as_slice() {
        return Err(Error::Invalid("involution does not match the factorization".into()));
    }
    let product = p.torsor();
    let mut data = SparseVec::new();
    for (i, j) in inv.pairs() {
        if !p.factors[i].same_as(&p.factors[j]) {
            return Err(Error::Invalid(format!("paired factors {i} and {j} differ")));
        }
        // Shared trivialization of the pair: the zero family of the point cover.
        let t = SparseVec::new();
        data = data.add(&t.scale(&Int::from(p.signs[i]))).add(&t.scale(&Int::from(p.signs[j])));
    }
    let s = TorsorSection { torsor: product, data };
    if !s.is_valid() {
        return Err(Error::Failed("canonical section does not satisfy the compatibility equation".into()));
    }
    Ok(s)
}

/// Component map of `f: U_level → U_{level-1}` for face `i`; level-0 faces
/// are the augmentation to `X`.
pub fn face_map(cover: &SemiSimplicialCover, level: usize, i: usize) -> Vec<usize> {
    if level == 0 {
        vec![0; cover.level(0).len()]
    } else {
        cover.face_maps(level)[i].clone()
    }
}

/// Composite `f_b ∘ f_a` from `U_level` to `U_{level-2}`.
pub fn composite_face(cover: &SemiSimplicialCover, level: usize, a: usize, b: usize) -> Vec<usize> {
    let first = face_map(cover, level, a);
    let second = face_map(cover, level - 1, b);
    first.iter().map(|&c| second[c]).collect()
}

/// Factors `(f_b ∘ f_a)^* T` of the iterated alternating preimage from
/// `U_level` down to `U_{level-2}`, indexed as in [`IndexInvolution::simplicial`]
/// with `m = level − 1`.
pub fn iterated_preimage(cover: &SemiSimplicialCover, level: usize, t: &Torsor, target: &Arc<PosetCochains>) -> Result<(ContractedProduct, IndexInvolution)> {
    let m = level - 1;
    let inv = IndexInvolution::simplicial(m);
    let mut factors = Vec::new();
    for a in 0..=m + 1 {
        for b in 0..=m {
            factors.push(t.pullback(target.clone(), &composite_face(cover, level, a, b))?);
        }
    }
    let p = ContractedProduct::new(factors, inv.signs().to_vec())?;
    Ok((p, inv))
}

/// Checks the simplicial identities behind the pairing, component by
/// component: the composites of paired indices agree. Returns the number of
/// index pairs checked.
pub fn check_pairing(cover: &SemiSimplicialCover, level: usize) -> Result<usize> {
    let m = level - 1;
    let inv = IndexInvolution::simplicial(m);
    let decode = |k: usize| (k / (m + 1), k % (m + 1));
    let mut n = 0;
    for (i, j) in inv.pairs() {
        let (a, b) = decode(i);
        let (a2, b2) = decode(j);
        if composite_face(cover, level, a, b) != composite_face(cover, level, a2, b2) {
            return Err(Error::Invalid(format!("pairing ({a},{b}) ~ ({a2},{b2}) fails on level {level}")));
        }
        n += 1;
    }
    Ok(n)
}

/// Index set `M = {(j, i, k)}` with `0 ≤ j ≤ n+1`, `0 ≤ i ≤ n`, `0 ≤ k ≤ n−1`.
pub fn index_set_m(n: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::new();
    for j in 0..=n + 1 {
        for i in 0..=n {
            for k in 0..n {
                out.push((j, i, k));
            }
        }
    }
    out
}

/// `σ(j,i,k) = (i, j−1, k)` for `i < j`, extended as an involution.
pub fn sigma(t: (usize, usize, usize)) -> (usize, usize, usize) {
    let (j, i, k) = t;
    if i < j {
        (i, j - 1, k)
    } else {
        (i + 1, j, k)
    }
}

/// `η(j,i,k) = (j, k, i−1)` for `k < i`, extended as an involution.
pub fn eta(t: (usize, usize, usize)) -> (usize, usize, usize) {
    let (j, i, k) = t;
    if k < i {
        (j, k, i - 1)
    } else {
        (j, k + 1, i)
    }
}

/// Orbits of `⟨σ, η⟩` on `M`, each listed as a hexagon: starting from its
/// smallest element and alternating `σ`, `η`.
#[derive(Clone, Debug)]
pub struct DihedralReport {
    pub n: usize,
    pub size_m: usize,
    pub orbits: Vec<Vec<(usize, usize, usize)>>,
    pub group_order: usize,
}

impl DihedralReport {
    pub fn is_free(&self) -> bool {
        self.orbits.iter().all(|o| o.len() == 6) && self.group_order == 6
    }
}

pub fn dihedral_orbits(n: usize) -> Result<DihedralReport> {
    if n == 0 {
        return Err(Error::Invalid("dihedral orbits need n ≥ 1".into()));
    }
    let m = index_set_m(n);
    let pos: HashMap<(usize, usize, usize), usize> = m.iter().enumerate().map(|(k, &t)| (t, k)).collect();
    let perm = |f: fn((usize, usize, usize)) -> (usize, usize, usize)| -> Result<Vec<usize>> {
        m.iter()
            .map(|&t| pos.get(&f(t)).copied().ok_or_else(|| Error::Failed(format!("{t:?} leaves the index set"))))
            .collect()
    };
    let s = perm(sigma)?;
    let e = perm(eta)?;
    // Group generated by the two permutations, by closure.
    let id: Vec<usize> = (0..m.len()).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut frontier = vec![id];
    while let Some(g) = frontier.pop() {
        for gen in [&s, &e] {
            let h: Vec<usize> = g.iter().map(|&x| gen[x]).collect();
            if seen.insert(h.clone()) {
                frontier.push(h);
            }
        }
    }
    let mut done = vec![false; m.len()];
    let mut orbits = Vec::new();
    for start in 0..m.len() {
        if done[start] {
            continue;
        }
        let mut hex = vec![start];
        done[start] = true;
        let mut cur = start;
        let mut use_sigma = true;
        loop {
            let next = if use_sigma { s[cur] } else { e[cur] };
            use_sigma = !use_sigma;
            if next == start {
                break;
            }
            if done[next] {
                return Err(Error::Failed("orbit walk revisits an element".into()));
            }
            done[next] = true;
            hex.push(next);
            cur = next;
        }
        orbits.push(hex.into_iter().map(|k| m[k]).collect());
    }
    Ok(DihedralReport { n, size_m: m.len(), orbits, group_order: seen.len() })
}

/// Result of evaluating the coboundary canonical section.
#[derive(Clone, Debug)]
pub struct CoboundaryReport {
    pub section: TorsorSection,
    /// `q_alt^*(φ_can)` through the canonical identification with `F|U_{n+1}`.
    pub residue: SparseVec,
    pub hexagons: usize,
}

/// Cochains needed for one degree on one cover: `U_{n-2}` (or `X`), `U_{n-1}`,
/// `U_n`, `U_{n+1}`.
#[derive(Clone, Debug)]
pub struct LevelCochains {
    pub n: usize,
    pub low: Arc<PosetCochains>,
    pub mid: Arc<PosetCochains>,
    pub top: Arc<PosetCochains>,
    pub over: Arc<PosetCochains>,
}

impl LevelCochains {
    pub fn new(cover: &SemiSimplicialCover, sheaf: &Arc<Sheaf>, n: usize) -> Result<Self> {
        if n == 0 || cover.depth() < n + 1 {
            return Err(Error::Invalid(format!("degree {n} needs levels up to {}", n + 1)));
        }
        let low_obj = if n >= 2 { cover.level(n - 2).clone() } else { Arc::new(SiteObject::whole(sheaf.space())) };
        Ok(LevelCochains {
            n,
            low: PosetCochains::new(sheaf.clone(), low_obj),
            mid: PosetCochains::new(sheaf.clone(), cover.level(n - 1).clone()),
            top: PosetCochains::new(sheaf.clone(), cover.level(n).clone()),
            over: PosetCochains::new(sheaf.clone(), cover.level(n + 1).clone()),
        })
    }

    /// Signed face maps `U_level → U_{level-1}` (`level = n−1` uses the
    /// augmentation when `n = 1`).
    pub fn faces(cover: &SemiSimplicialCover, level: usize) -> Vec<(i64, Vec<usize>)> {
        let count = if level == 0 { 1 } else { level + 1 };
        (0..count).map(|i| (alt(i), face_map(cover, level, i))).collect()
    }
}

/// `φ_can` on `p_alt^*(r_alt^*(T_low))` together with its residue and an
/// evaluation of the hexagon identity with random local trivializations.
pub fn coboundary_canonical_section(
    cover: &SemiSimplicialCover,
    lc: &LevelCochains,
    t_low: &Torsor,
    rng: &mut impl Rng,
) -> Result<CoboundaryReport> {
    let n = lc.n;
    if !same_base(t_low.cochains(), &lc.low) {
        return Err(Error::Invalid("low torsor does not live on the low level".into()));
    }
    let r_faces: Vec<Vec<usize>> = LevelCochains::faces(cover, n - 1).into_iter().map(|(_, m)| m).collect();
    let t = t_low.alternating_preimage(&r_faces, lc.mid.clone())?;
    let p_faces: Vec<Vec<usize>> = LevelCochains::faces(cover, n).into_iter().map(|(_, m)| m).collect();
    let pt = t.alternating_preimage(&p_faces, lc.top.clone())?;

    // φ_can from the pairing of the factors (r_k ∘ p_i)^* T_low.
    let (product, inv) = iterated_preimage(cover, n, t_low, &lc.top)?;
    let phi = canonical_section(&product, &inv)?;
    if !phi.torsor.same_as(&pt) {
        return Err(Error::Failed("canonical identification of p_alt^* r_alt^* disagrees with the product".into()));
    }
    check_pairing(cover, n)?;
    check_pairing(cover, n + 1)?;

    // q_alt^*(φ_can), read through q_alt^* p_alt^* = F|U_{n+1}.
    let q_faces = LevelCochains::faces(cover, n + 1);
    let data = lc.over.pull_signed(&lc.top, &q_faces, 0, &phi.data)?;
    let (qp, qinv) = iterated_preimage(cover, n + 1, &t, &lc.over)?;
    let can = canonical_section(&qp, &qinv)?;
    let residue = data.sub(&can.data);

    let hexagons = hexagon_check(cover, lc, rng)?;
    Ok(CoboundaryReport { section: TorsorSection { torsor: pt, data: phi.data }, residue, hexagons })
}

/// Evaluates, for every component of `U_{n+1}` and every hexagon of `M`, the
/// alternating sums of a random local trivialization of the factors
/// `(r_k p_i q_j)^* T_low` along the `σ`-pairs and along the `η`-pairs. Both
/// must agree term by term with the composite face maps. Returns the number
/// of hexagons evaluated.
pub fn hexagon_check(cover: &SemiSimplicialCover, lc: &LevelCochains, rng: &mut impl Rng) -> Result<usize> {
    let n = lc.n;
    let report = dihedral_orbits(n)?;
    let lambda = lc.low.random(0, rng, 5);
    let comp_of = |u: usize, (j, i, k): (usize, usize, usize)| -> usize {
        let a = face_map(cover, n + 1, j)[u];
        let b = face_map(cover, n, i)[a];
        face_map(cover, n - 1, k)[b]
    };
    let sp = lc.low.space();
    let mut count = 0;
    for u in 0..cover.level(n + 1).len() {
        let comp = cover.level(n + 1).component(u);
        // Value of the trivialization of a factor at the top points of u.
        for hex in &report.orbits {
            let cs: Vec<usize> = hex.iter().map(|&t| comp_of(u, t)).collect();
            if cs.windows(2).any(|w| w[0] != w[1]) {
                return Err(Error::Failed(format!("hexagon {hex:?} spans different components over {u}")));
            }
            for x in comp.iter() {
                let vals: Vec<SparseVec> = cs.iter().map(|&c| lc.low.value(0, &lambda, c, &[x])).collect();
                let signed = |k: usize| vals[k].scale(&Int::from(alt(hex[k].0 + hex[k].1 + hex[k].2)));
                // σ pairs are (0,1), (2,3), (4,5); η pairs are (1,2), (3,4), (5,0).
                let f: Vec<SparseVec> = (0..3).map(|p| signed(2 * p).add(&signed(2 * p + 1))).collect();
                let g: Vec<SparseVec> = (0..3).map(|p| signed(2 * p + 1).add(&signed((2 * p + 2) % 6))).collect();
                let lhs = f[0].sub(&f[1]).add(&f[2]);
                let rhs = g[0].sub(&g[1]).add(&g[2]);
                let st = lc.low.sheaf().stalk(x);
                let paired = f.iter().chain(&g).all(|v| st.is_zero_element(v));
                if !paired || !st.equal_elements(&lhs, &rhs) {
                    return Err(Error::Failed(format!("hexagon identity fails at {} over {u}", sp.name(x))));
                }
            }
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Serialize, Deserialize)]
struct EntryJson {
    comp: usize,
    chain: Vec<String>,
    value: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct TorsorJson {
    cover: Vec<Vec<String>>,
    cocycle: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
struct SectionJson {
    torsor: TorsorJson,
    data: Vec<EntryJson>,
}

fn entries_json(c: &PosetCochains, k: usize, v: &SparseVec) -> Vec<EntryJson> {
    let sp = c.space();
    c.entries(k)
        .iter()
        .filter_map(|e| {
            let val = v.slice(e.offset, e.offset + e.len);
            if val.is_zero() {
                return None;
            }
            let value = val.to_dense(e.len).iter().map(|x| x.to_i64().unwrap_or(0)).collect();
            Some(EntryJson { comp: e.comp, chain: e.chain.iter().map(|&p| sp.name(p).to_string()).collect(), value })
        })
        .collect()
}

fn entries_from_json(c: &PosetCochains, k: usize, es: &[EntryJson]) -> Result<SparseVec> {
    let sp = c.space();
    let mut acc = Vec::new();
    for e in es {
        let chain: Vec<usize> = e
            .chain
            .iter()
            .map(|n| sp.index(n).ok_or_else(|| Error::Malformed(format!("unknown point {n:?}"))))
            .collect::<Result<_>>()?;
        let entry = c.entry(k, e.comp, &chain).ok_or_else(|| Error::Malformed(format!("no block for {:?} on component {}", e.chain, e.comp)))?;
        if e.value.len() != entry.len {
            return Err(Error::Malformed(format!("value for {:?} needs {} coordinates", e.chain, entry.len)));
        }
        acc.extend(e.value.iter().enumerate().map(|(i, &x)| (entry.offset + i, Int::from(x))));
    }
    Ok(SparseVec::from_entries(acc))
}

impl TorsorJson {
    fn from_torsor(t: &Torsor) -> Self {
        TorsorJson { cover: t.base().to_names(t.cochains.space()), cocycle: entries_json(&t.cochains, 1, &t.cocycle) }
    }

    fn into_torsor(self, cochains: Arc<PosetCochains>) -> Result<Torsor> {
        if self.cover != cochains.base().to_names(cochains.space()) {
            return Err(Error::Malformed("torsor base does not match".into()));
        }
        let g = entries_from_json(&cochains, 1, &self.cocycle)?;
        Torsor::new(cochains, g)
    }
}

/// Cocycle entries as JSON values (shared with the rtc and gerbe formats).
pub(crate) fn cochain_to_value(c: &PosetCochains, k: usize, v: &SparseVec) -> serde_json::Value {
    serde_json::to_value(entries_json(c, k, v)).unwrap()
}

pub(crate) fn cochain_from_value(c: &PosetCochains, k: usize, v: &serde_json::Value) -> Result<SparseVec> {
    let es: Vec<EntryJson> = serde_json::from_value(v.clone()).map_err(|e| Error::Malformed(e.to_string()))?;
    entries_from_json(c, k, &es)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::sheaf::Godement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c4(spec: &str) -> (Arc<FinSpace>, Arc<Sheaf>, Arc<PosetCochains>) {
        let sp = fixtures::space("C4").unwrap();
        let f = fixtures::constant_sheaf(&sp, spec).unwrap();
        let c = PosetCochains::new(f.clone(), Arc::new(SiteObject::whole(&sp)));
        (sp, f, c)
    }

    /// Generator torsor on C4: cover {↓c, ↓d}, transition 1 on a and 0 on b.
    fn generator(sp: &Arc<FinSpace>, c: &Arc<PosetCochains>) -> Torsor {
        let w = SiteMorphism::cover_by(sp, vec![sp.down(2).clone(), sp.down(3).clone()]).unwrap();
        Torsor::from_transitions(c.clone(), &w, |a, b, x| {
            let v = if x == 0 { 1 } else { 0 };
            let s = if a < b { v } else if a > b { -v } else { 0 };
            SparseVec::from_dense(&[s])
        })
        .unwrap()
    }

    #[test]
    fn differentials_compose_to_zero() {
        let (_, _, c) = c4("Z");
        let dd = c.d0().then(c.d1());
        assert!(dd.is_zero());
    }

    #[test]
    fn generator_class_and_additivity() {
        let (sp, _, c) = c4("Z");
        let t = generator(&sp, &c);
        let k = t.h1_class().unwrap();
        assert_eq!(k.len(), 1);
        assert!(k[0] == Int::ONE || k[0] == -Int::ONE);
        assert!(t.find_section().is_none());
        let two = t.wedge(&t).unwrap().h1_class().unwrap();
        assert_eq!(two[0], &k[0] + &k[0]);
        assert_eq!(t.inverse().h1_class().unwrap()[0], -k[0].clone());
        assert!(t.wedge(&t.inverse()).unwrap().find_section().is_some());
        assert_eq!(Torsor::trivial(c.clone()).h1_class().unwrap(), vec![Int::ZERO]);
    }

    #[test]
    fn reduction_mod_two() {
        let (sp, f, c) = c4("Z");
        let f2 = fixtures::constant_sheaf(&sp, "Z/2").unwrap();
        let c2 = PosetCochains::new(f2.clone(), c.base().clone());
        let h = SheafHom::scalar(f.clone(), f2.clone(), 1).unwrap();
        let t2 = generator(&sp, &c).induce(&h, c2.clone()).unwrap();
        assert_eq!(t2.h1_class().unwrap(), vec![Int::ONE]);
        let zero = SheafHom::zero(f.clone(), f2);
        assert!(generator(&sp, &c).induce(&zero, c2).unwrap().find_section().is_some());
    }

    #[test]
    fn induced_into_godement_has_sections() {
        let (sp, f, c) = c4("Z");
        let god = Godement::new(f.clone(), 1);
        let i0 = Arc::new(god.injective_term(0));
        let aug = god.term_map(0, &f, &i0);
        let ci = PosetCochains::new(i0, c.base().clone());
        let t = generator(&sp, &c).induce(&aug, ci).unwrap();
        assert!(t.find_section().unwrap().is_valid());
    }

    #[test]
    fn dihedral_counts() {
        let r = dihedral_orbits(2).unwrap();
        assert_eq!(r.size_m, 24);
        assert_eq!(r.orbits.len(), 4);
        assert!(r.is_free());
        let r = dihedral_orbits(1).unwrap();
        assert_eq!((r.size_m, r.orbits.len()), (6, 1));
    }

    #[test]
    fn simplicial_involution_is_valid() {
        for m in 0..5 {
            let inv = IndexInvolution::simplicial(m);
            IndexInvolution::new(inv.signs().to_vec(), inv.pairing.clone()).unwrap();
            assert_eq!(inv.len(), (m + 1) * (m + 2));
        }
    }

    #[test]
    fn coboundary_residue_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = fixtures::hypercovering("C4", "cech2", 3).unwrap();
        let f = fixtures::constant_sheaf(h.space(), "Z").unwrap();
        let lc = LevelCochains::new(&h, &f, 2).unwrap();
        let t = Torsor::random(lc.low.clone(), &mut rng);
        let rep = coboundary_canonical_section(&h, &lc, &t, &mut rng).unwrap();
        assert!(lc.over.is_zero(0, &rep.residue));
        assert!(rep.hexagons > 0);
        assert!(rep.section.is_valid());
    }

    #[test]
    fn json_round_trip() {
        let (sp, _, c) = c4("Z");
        let t = generator(&sp, &c);
        let back = Torsor::from_json(c.clone(), &t.to_json()).unwrap();
        assert!(back.same_as(&t));
    }
}
