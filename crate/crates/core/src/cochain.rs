//! Cochain complexes over semi-simplicial covers: Čech complexes, the total
//! complex of `Γ(U_•, I^•)`, transport to `H^n(X, F)`, and the three-term
//! complex with its maps `Ψ` and `Φ`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock};

use crate::abgrp::{FpAbGroup, GroupHom, SparseVec, Subquotient};
use crate::error::{Error, Result};
use crate::finsite::SiteObject;
use crate::int::Int;
use crate::semisimp::{Homotopy, Hypercovering, SemiSimplicialCover};
use crate::sheaf::{quotient_sheaf, Godement, Layout, Sections, Sheaf};

/// One term of a complex: an ambient group, optionally cut down to the
/// kernel of a constraint map (compatible families).
pub struct Term {
    ambient: Arc<FpAbGroup>,
    constraint: Option<GroupHom>,
    gens: OnceLock<Vec<SparseVec>>,
}

impl Term {
    pub fn free(ambient: Arc<FpAbGroup>) -> Self {
        Term { ambient, constraint: None, gens: OnceLock::new() }
    }

    pub fn constrained(ambient: Arc<FpAbGroup>, constraint: GroupHom) -> Self {
        Term { ambient, constraint: Some(constraint), gens: OnceLock::new() }
    }

    pub fn ambient(&self) -> &Arc<FpAbGroup> {
        &self.ambient
    }

    pub fn constraint(&self) -> Option<&GroupHom> {
        self.constraint.as_ref()
    }

    /// Generators of the term as a subgroup of the ambient.
    pub fn generators(&self) -> &[SparseVec] {
        self.gens.get_or_init(|| match &self.constraint {
            None => (0..self.ambient.generators()).map(SparseVec::unit).collect(),
            Some(c) => c.kernel().to_vec(),
        })
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        match &self.constraint {
            None => true,
            Some(c) => c.target().is_zero_element(&c.apply(v)),
        }
    }
}

/// Accumulates sparse columns block by block.
pub(crate) struct Columns {
    cols: Vec<Vec<(usize, Int)>>,
}

impl Columns {
    pub(crate) fn new(n: usize) -> Self {
        Columns { cols: vec![Vec::new(); n] }
    }

    pub(crate) fn add(&mut self, col_off: usize, row_off: usize, block: &[SparseVec], sign: i64) {
        for (k, c) in block.iter().enumerate() {
            let dst = &mut self.cols[col_off + k];
            for (i, v) in c.iter() {
                dst.push((row_off + i, if sign < 0 { -v.clone() } else { v.clone() }));
            }
        }
    }

    pub(crate) fn finish(self) -> Vec<SparseVec> {
        self.cols.into_iter().map(SparseVec::from_entries).collect()
    }
}

/// Cochain complex `T^0 → T^1 → …`; `diffs[k]: T^k → T^{k+1}`.
pub struct CochainComplex {
    terms: Vec<Term>,
    diffs: Vec<GroupHom>,
    coh: Vec<OnceLock<Subquotient>>,
}

impl CochainComplex {
    /// Builds and checks `d∘d = 0` on term generators.
    pub fn new(terms: Vec<Term>, diffs: Vec<GroupHom>) -> Result<Self> {
        let c = Self::unchecked(terms, diffs)?;
        c.check_square_zero()?;
        Ok(c)
    }

    pub fn unchecked(terms: Vec<Term>, diffs: Vec<GroupHom>) -> Result<Self> {
        if diffs.len() + 1 != terms.len() && diffs.len() != terms.len() {
            return Err(Error::Invalid("complex needs one differential between consecutive terms".into()));
        }
        for (k, d) in diffs.iter().enumerate().take(terms.len() - 1) {
            if d.source().generators() != terms[k].ambient.generators()
                || d.target().generators() != terms[k + 1].ambient.generators()
            {
                return Err(Error::Invalid(format!("differential {k} has the wrong shape")));
            }
        }
        let coh = (0..terms.len()).map(|_| OnceLock::new()).collect();
        Ok(CochainComplex { terms, diffs, coh })
    }

    pub fn check_square_zero(&self) -> Result<()> {
        for k in 0..self.diffs.len().saturating_sub(1).min(self.terms.len().saturating_sub(2)) {
            for g in self.terms[k].generators() {
                let dd = self.diffs[k + 1].apply(&self.diffs[k].apply(g));
                if !self.terms[k + 2].ambient.is_zero_element(&dd) {
                    return Err(Error::Failed(format!("d∘d is nonzero in degree {k}")));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, k: usize) -> &Term {
        &self.terms[k]
    }

    pub fn diff(&self, k: usize) -> &GroupHom {
        &self.diffs[k]
    }

    /// Whether `v` is an element of `T^k` killed by `d_k`.
    pub fn is_cycle(&self, k: usize, v: &SparseVec) -> bool {
        self.terms[k].contains(v)
            && (k >= self.diffs.len() || self.diffs[k].target().is_zero_element(&self.diffs[k].apply(v)))
    }

    /// `H^k`; a term without outgoing differential counts as all cycles.
    pub fn cohomology(&self, k: usize) -> &Subquotient {
        self.coh[k].get_or_init(|| {
            let term = &self.terms[k];
            let cycles: Vec<SparseVec> = if k < self.diffs.len() {
                let d = &self.diffs[k];
                let stacked = match &term.constraint {
                    None => d.clone(),
                    Some(c) => stack(d, c),
                };
                stacked.kernel().to_vec()
            } else {
                term.generators().to_vec()
            };
            let boundaries: Vec<SparseVec> = if k == 0 {
                Vec::new()
            } else {
                self.terms[k - 1].generators().iter().map(|g| self.diffs[k - 1].apply(g)).collect()
            };
            Subquotient::from_parts(term.ambient.clone(), cycles, &boundaries)
        })
    }
}

/// `x ↦ (f(x), g(x))` into the direct sum of targets.
pub fn stack(f: &GroupHom, g: &GroupHom) -> GroupHom {
    let tgt = Arc::new(FpAbGroup::direct_sum(&[f.target().as_ref(), g.target().as_ref()]));
    let off = f.target().generators();
    let cols = f.columns().iter().zip(g.columns()).map(|(a, b)| a.add(&b.shift(off))).collect();
    GroupHom::new(f.source().clone(), tgt, cols)
}

/// `(x, y) ↦ f(x) + g(y)` from the direct sum of sources.
pub fn juxtapose(f: &GroupHom, g: &GroupHom) -> GroupHom {
    let src = Arc::new(FpAbGroup::direct_sum(&[f.source().as_ref(), g.source().as_ref()]));
    let mut cols = f.columns().to_vec();
    cols.extend(g.columns().iter().cloned());
    GroupHom::new(src, f.target().clone(), cols)
}

/// Coefficients of a complex on a cover: a sheaf (sections as compatible
/// families) or a Godement term `I^q` (product coordinates).
#[derive(Clone, Copy)]
pub enum Coeff<'a> {
    Sheaf(&'a Arc<Sheaf>),
    Injective(&'a Godement, usize),
}

impl<'a> Coeff<'a> {
    pub fn layout(&self, obj: &SiteObject) -> Layout {
        match self {
            Coeff::Sheaf(f) => {
                let f = *f;
                Layout::new(obj, |x| f.stalk(x).generators())
            }
            Coeff::Injective(g, q) => g.layout(*q, obj),
        }
    }

    pub fn stalks(&self) -> &[Arc<FpAbGroup>] {
        match self {
            Coeff::Sheaf(f) => f.stalks(),
            Coeff::Injective(g, q) => g.term(*q).stalks(),
        }
    }

    pub fn term(&self, obj: &Arc<SiteObject>, layout: &Layout) -> Term {
        match self {
            Coeff::Sheaf(f) => {
                let s = Sections::new((*f).clone(), obj.clone());
                Term::constrained(s.ambient().clone(), s.compatibility().clone())
            }
            Coeff::Injective(..) => Term::free(Arc::new(layout.group(self.stalks()))),
        }
    }
}

/// Columns of `∂ = Σ_j (-1)^j q_j^*` from level `n` to level `n+1`.
pub fn cech_columns(u: &SemiSimplicialCover, n: usize, src: &Layout, tgt: &Layout) -> Vec<SparseVec> {
    let mut acc = Columns::new(src.total());
    for j in 0..=n + 1 {
        let cols = src.pullback_by_map(tgt, &u.face_maps(n + 1)[j]);
        acc.add(0, 0, &cols, if j % 2 == 0 { 1 } else { -1 });
    }
    acc.finish()
}

/// `Γ(U_•, G)` in degrees `0..=top` with differentials below `top`.
pub struct CechComplex {
    layouts: Vec<Layout>,
    complex: CochainComplex,
}

impl CechComplex {
    pub fn layout(&self, n: usize) -> &Layout {
        &self.layouts[n]
    }

    pub fn complex(&self) -> &CochainComplex {
        &self.complex
    }

    pub fn cohomology(&self, n: usize) -> &Subquotient {
        self.complex.cohomology(n)
    }
}

pub fn cech_complex(u: &SemiSimplicialCover, g: Coeff<'_>, top: usize) -> Result<CechComplex> {
    if top > u.depth() {
        return Err(Error::Invalid(format!("cover has depth {} below requested degree {top}", u.depth())));
    }
    let layouts: Vec<Layout> = (0..=top).map(|n| g.layout(u.level(n))).collect();
    let terms: Vec<Term> = (0..=top).map(|n| g.term(u.level(n), &layouts[n])).collect();
    let diffs = (0..top)
        .map(|n| {
            let cols = cech_columns(u, n, &layouts[n], &layouts[n + 1]);
            GroupHom::new(terms[n].ambient.clone(), terms[n + 1].ambient.clone(), cols)
        })
        .collect();
    Ok(CechComplex { layouts, complex: CochainComplex::new(terms, diffs)? })
}

/// `h^*` along a component map from `Γ(V_{m}, G)` to `Γ(U_{k}, G)`.
fn pull(src: &Layout, tgt: &Layout, map: &[usize], sa: &Arc<FpAbGroup>, ta: &Arc<FpAbGroup>) -> GroupHom {
    GroupHom::new(sa.clone(), ta.clone(), src.pullback_by_map(tgt, map))
}

/// Result of comparing `θ^* − ζ^*` with `s∂ ∓ ∂s` in each degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomotopyCheck {
    /// `θ^*_n − ζ^*_n = s∂ − ∂s` per degree.
    pub minus_form: Vec<bool>,
    /// `θ^*_n − ζ^*_n = s∂ + ∂s` per degree.
    pub plus_form: Vec<bool>,
}

/// Cochain homotopy `s_n = Σ_i (-1)^i h_i^*: Γ(V_{n+1}, G) → Γ(U_n, G)`.
pub struct HomotopyOperator {
    u_layouts: Vec<Layout>,
    v_layouts: Vec<Layout>,
    u_amb: Vec<Arc<FpAbGroup>>,
    v_terms: Vec<Term>,
    s: Vec<GroupHom>,
    theta: Vec<GroupHom>,
    zeta: Vec<GroupHom>,
    du: Vec<GroupHom>,
    dv: Vec<GroupHom>,
}

pub fn homotopy_operator(h: &Homotopy, g: Coeff<'_>, top: usize) -> Result<HomotopyOperator> {
    if !h.is_valid() {
        return Err(Error::Invalid("simplicial homotopy identities fail".into()));
    }
    let u = h.theta().source().clone();
    let v = h.theta().target().clone();
    let top = top.min(h.depth()).min(u.depth().saturating_sub(1)).min(v.depth().saturating_sub(1));
    let u_layouts: Vec<Layout> = (0..=top + 1).map(|n| g.layout(u.level(n))).collect();
    let v_layouts: Vec<Layout> = (0..=top + 1).map(|n| g.layout(v.level(n))).collect();
    let u_amb: Vec<Arc<FpAbGroup>> = u_layouts.iter().map(|l| Arc::new(l.group(g.stalks()))).collect();
    let v_terms: Vec<Term> = (0..=top + 1).map(|n| g.term(v.level(n), &v_layouts[n])).collect();
    let v_amb: Vec<Arc<FpAbGroup>> = v_terms.iter().map(|t| t.ambient.clone()).collect();
    let mut s = Vec::new();
    for n in 0..=top {
        let mut acc = Columns::new(v_layouts[n + 1].total());
        for i in 0..=n {
            let cols = v_layouts[n + 1].pullback_by_map(&u_layouts[n], h.map(n, i));
            acc.add(0, 0, &cols, if i % 2 == 0 { 1 } else { -1 });
        }
        s.push(GroupHom::new(v_amb[n + 1].clone(), u_amb[n].clone(), acc.finish()));
    }
    let theta = (0..=top).map(|n| pull(&v_layouts[n], &u_layouts[n], h.theta().map(n), &v_amb[n], &u_amb[n])).collect();
    let zeta = (0..=top).map(|n| pull(&v_layouts[n], &u_layouts[n], h.zeta().map(n), &v_amb[n], &u_amb[n])).collect();
    let du = (0..top)
        .map(|n| GroupHom::new(u_amb[n].clone(), u_amb[n + 1].clone(), cech_columns(&u, n, &u_layouts[n], &u_layouts[n + 1])))
        .collect();
    let dv = (0..=top)
        .map(|n| GroupHom::new(v_amb[n].clone(), v_amb[n + 1].clone(), cech_columns(&v, n, &v_layouts[n], &v_layouts[n + 1])))
        .collect();
    Ok(HomotopyOperator { u_layouts, v_layouts, u_amb, v_terms, s, theta, zeta, du, dv })
}

impl HomotopyOperator {
    pub fn top(&self) -> usize {
        self.s.len() - 1
    }

    /// `s_n: Γ(V_{n+1}) → Γ(U_n)`.
    pub fn s(&self, n: usize) -> &GroupHom {
        &self.s[n]
    }

    pub fn theta(&self, n: usize) -> &GroupHom {
        &self.theta[n]
    }

    pub fn zeta(&self, n: usize) -> &GroupHom {
        &self.zeta[n]
    }

    pub fn layouts(&self) -> (&[Layout], &[Layout]) {
        (&self.u_layouts, &self.v_layouts)
    }

    /// Evaluates both sign forms of the homotopy formula on every generator
    /// of `Γ(V_n, G)`, `n ≤ top`.
    pub fn check(&self) -> HomotopyCheck {
        let mut minus_form = Vec::new();
        let mut plus_form = Vec::new();
        for n in 0..=self.top() {
            let mut minus = true;
            let mut plus = true;
            for g in self.v_terms[n].generators() {
                let lhs = self.theta[n].apply(g).sub(&self.zeta[n].apply(g));
                let s_d = self.s[n].apply(&self.dv[n].apply(g));
                let d_s = if n == 0 { SparseVec::new() } else { self.du[n - 1].apply(&self.s[n - 1].apply(g)) };
                let amb = &self.u_amb[n];
                minus &= amb.is_zero_element(&lhs.sub(&s_d.sub(&d_s)));
                plus &= amb.is_zero_element(&lhs.sub(&s_d.add(&d_s)));
            }
            minus_form.push(minus);
            plus_form.push(plus);
        }
        HomotopyCheck { minus_form, plus_form }
    }
}

/// `Γ(X, I^•)` and `H^n(X, F)`.
pub struct SheafCohomology {
    sheaf: Arc<Sheaf>,
    god: Arc<Godement>,
    x: Arc<SiteObject>,
    layouts: Vec<Layout>,
    complex: CochainComplex,
}

impl SheafCohomology {
    /// Computes `Γ(X, I^q)` for `q ≤ top`; `H^n` is exact for `n < top`.
    pub fn new(sheaf: Arc<Sheaf>, top: usize) -> Result<Self> {
        let god = Arc::new(Godement::new(sheaf.clone(), top));
        Self::with_resolution(god)
    }

    pub fn with_resolution(god: Arc<Godement>) -> Result<Self> {
        let top = god.top();
        let x = Arc::new(SiteObject::whole(god.space()));
        let layouts: Vec<Layout> = (0..=top).map(|q| god.layout(q, &x)).collect();
        let terms: Vec<Term> = layouts.iter().enumerate().map(|(q, l)| Term::free(Arc::new(god.sections_group(q, l)))).collect();
        let diffs = (0..top)
            .map(|q| {
                let cols = god.differential_columns(q, &x, &layouts[q], &layouts[q + 1]);
                GroupHom::new(terms[q].ambient.clone(), terms[q + 1].ambient.clone(), cols)
            })
            .collect();
        let complex = CochainComplex::new(terms, diffs)?;
        Ok(SheafCohomology { sheaf: god.base().clone(), god, x, layouts, complex })
    }

    pub fn sheaf(&self) -> &Arc<Sheaf> {
        &self.sheaf
    }

    pub fn resolution(&self) -> &Arc<Godement> {
        &self.god
    }

    pub fn top(&self) -> usize {
        self.god.top()
    }

    pub fn layout(&self, q: usize) -> &Layout {
        &self.layouts[q]
    }

    pub fn whole(&self) -> &Arc<SiteObject> {
        &self.x
    }

    pub fn complex(&self) -> &CochainComplex {
        &self.complex
    }

    /// `H^n(X, F)`; requires `n < top`.
    pub fn group(&self, n: usize) -> Result<&Subquotient> {
        if n >= self.top() {
            return Err(Error::Invalid(format!("degree {n} needs a resolution of length {}", n + 1)));
        }
        Ok(self.complex.cohomology(n))
    }
}

/// Convenience: `H^n(X, F)` as a presentation summary.
pub fn cohomology(sheaf: &Arc<Sheaf>, n: usize) -> Result<(usize, Vec<Int>)> {
    let h = SheafCohomology::new(sheaf.clone(), n + 1)?;
    let g = h.group(n)?;
    Ok((g.free_rank(), g.torsion()))
}

/// `Tot^m = ⊕_{p+q=m} Γ(U_p, I^q)` with `D = ∂ + (-1)^p d`.
pub struct TotalComplex {
    cover: Arc<Hypercovering>,
    god: Arc<Godement>,
    top: usize,
    layouts: HashMap<(usize, usize), Layout>,
    offsets: Vec<Vec<usize>>,
    complex: CochainComplex,
}

impl TotalComplex {
    /// Degrees `0..=top`; the differential `D_m` exists for `m < top`.
    pub fn new(cover: Arc<Hypercovering>, god: Arc<Godement>, top: usize) -> Result<Self> {
        if top > god.top() || top > cover.depth() {
            return Err(Error::Invalid("total complex needs more levels or resolution terms".into()));
        }
        let mut layouts = HashMap::new();
        for p in 0..=top {
            for q in 0..=top - p {
                layouts.insert((p, q), god.layout(q, cover.level(p)));
            }
        }
        let mut offsets = Vec::new();
        let mut groups = Vec::new();
        for m in 0..=top {
            let mut off = Vec::new();
            let mut parts = Vec::new();
            let mut acc = 0;
            for p in 0..=m {
                off.push(acc);
                let l = &layouts[&(p, m - p)];
                acc += l.total();
                parts.push(l.group(god.term(m - p).stalks()));
            }
            off.push(acc);
            offsets.push(off);
            groups.push(Arc::new(FpAbGroup::direct_sum(&parts.iter().collect::<Vec<_>>())));
        }
        let mut diffs = Vec::new();
        for m in 0..top {
            let mut acc = Columns::new(offsets[m][m + 1]);
            for p in 0..=m {
                let q = m - p;
                let src = &layouts[&(p, q)];
                let d_hor = cech_columns(&cover, p, src, &layouts[&(p + 1, q)]);
                acc.add(offsets[m][p], offsets[m + 1][p + 1], &d_hor, 1);
                let d_ver = god.differential_columns(q, cover.level(p), src, &layouts[&(p, q + 1)]);
                acc.add(offsets[m][p], offsets[m + 1][p], &d_ver, if p % 2 == 0 { 1 } else { -1 });
            }
            diffs.push(GroupHom::new(groups[m].clone(), groups[m + 1].clone(), acc.finish()));
        }
        let terms = groups.into_iter().map(Term::free).collect();
        let complex = CochainComplex::new(terms, diffs)?;
        Ok(TotalComplex { cover, god, top, layouts, offsets, complex })
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn cover(&self) -> &Arc<Hypercovering> {
        &self.cover
    }

    pub fn resolution(&self) -> &Arc<Godement> {
        &self.god
    }

    pub fn layout(&self, p: usize, q: usize) -> &Layout {
        &self.layouts[&(p, q)]
    }

    pub fn complex(&self) -> &CochainComplex {
        &self.complex
    }

    /// Offset of the `(p, m-p)` block inside `Tot^m`.
    pub fn offset(&self, m: usize, p: usize) -> usize {
        self.offsets[m][p]
    }

    pub fn embed(&self, m: usize, p: usize, v: &SparseVec) -> SparseVec {
        v.shift(self.offsets[m][p])
    }

    pub fn component(&self, m: usize, p: usize, z: &SparseVec) -> SparseVec {
        z.slice(self.offsets[m][p], self.offsets[m][p + 1])
    }

    /// Augmentation `Γ(X, I^m) → Tot^m` (pullback to `U_0`).
    pub fn augmentation(&self, global: &SheafCohomology, m: usize) -> GroupHom {
        let map = vec![0; self.cover.level(0).len()];
        let cols = global.layout(m).pullback_by_map(self.layout(0, m), &map);
        let cols = cols.into_iter().map(|c| c.shift(self.offsets[m][0])).collect();
        GroupHom::new(global.complex().term(m).ambient().clone(), self.complex.term(m).ambient().clone(), cols)
    }
}

/// Class transport `H^n Tot → H^n(X, F)` by solving `aug(x) + D y = z`.
pub struct Transport {
    n: usize,
    global: Arc<SheafCohomology>,
    tot: Arc<TotalComplex>,
    aug: GroupHom,
    solver: GroupHom,
}

impl Transport {
    pub fn new(global: Arc<SheafCohomology>, tot: Arc<TotalComplex>, n: usize) -> Result<Self> {
        if n > tot.top() || n >= global.top() {
            return Err(Error::Invalid(format!("transport in degree {n} needs more terms")));
        }
        let aug = tot.augmentation(&global, n);
        let solver = if n == 0 { aug.clone() } else { juxtapose(&aug, tot.complex().diff(n - 1)) };
        Ok(Transport { n, global, tot, aug, solver })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn global(&self) -> &Arc<SheafCohomology> {
        &self.global
    }

    pub fn total(&self) -> &Arc<TotalComplex> {
        &self.tot
    }

    pub fn augmentation(&self) -> &GroupHom {
        &self.aug
    }

    /// Global cocycle `x` with `aug(x) ≡ z` modulo `D(Tot^{n-1})`.
    pub fn global_representative(&self, z: &SparseVec) -> Result<SparseVec> {
        let sol = self.solver.solve(z).ok_or_else(|| Error::Failed("transport failed".into()))?;
        Ok(sol.slice(0, self.aug.source().generators()))
    }

    /// Class of the total cocycle `z` in `H^n(X, F)`.
    pub fn class_of(&self, z: &SparseVec) -> Result<Vec<Int>> {
        let x = self.global_representative(z)?;
        self.global.group(self.n)?.class_of(&x)
    }

    /// Whether the augmentation induces an isomorphism on `H^n`.
    pub fn is_isomorphism(&self) -> Result<bool> {
        if self.n + 1 > self.tot.top() {
            return Err(Error::Invalid("total cohomology needs one more degree".into()));
        }
        let h_x = self.global.group(self.n)?;
        let h_t = self.tot.complex().cohomology(self.n);
        let f = h_x.induced(h_t, |x| self.aug.apply(x))?;
        Ok(f.is_isomorphism())
    }
}

/// `C^{n-1} --Ψ--> C^n --Φ--> C^{n+1}` on a hypercovering of type `n-2`.
pub struct ThreeTermComplex {
    n: usize,
    eps: i64,
    cover: Arc<Hypercovering>,
    god: Arc<Godement>,
    quotient: Option<Sections>,
    lay: HashMap<(usize, usize), Layout>,
    /// Offsets of the summands of `C^{n-1}`, `C^n`, `C^{n+1}`.
    offs: [Vec<usize>; 3],
    complex: CochainComplex,
    transport: Arc<Transport>,
}

impl ThreeTermComplex {
    pub fn new(cover: Arc<Hypercovering>, sheaf: Arc<Sheaf>, n: usize) -> Result<Self> {
        let god = Arc::new(Godement::new(sheaf, (n + 1).max(2)));
        Self::with_resolution(cover, god, n)
    }

    pub fn with_resolution(cover: Arc<Hypercovering>, god: Arc<Godement>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("three-term complex needs n ≥ 1".into()));
        }
        if cover.type_r() > n as i32 - 2 {
            return Err(Error::Invalid(format!("three-term complex in degree {n} needs type at most {}, got {}", n as i32 - 2, cover.type_r())));
        }
        if cover.depth() < n + 1 {
            return Err(Error::Invalid(format!("hypercovering needs levels up to {}", n + 1)));
        }
        if god.top() < (n + 1).max(2) {
            return Err(Error::Invalid("resolution too short".into()));
        }
        let eps: i64 = if (n - 1) % 2 == 0 { 1 } else { -1 };
        let mut lay = HashMap::new();
        for (p, q) in [(n - 1, 0), (n - 1, 1), (n - 1, 2), (n, 0), (n, 1), (n + 1, 0)] {
            lay.insert((p, q), god.layout(q, cover.level(p)));
        }
        if n >= 2 {
            lay.insert((n - 2, 1), god.layout(1, cover.level(n - 2)));
        }
        let amb = |p: usize, q: usize| lay[&(p, q)].group(god.term(q).stalks());

        // I^0/F as a sheaf; its sections over U_{n-2} are compatible families.
        let quotient = if n >= 2 {
            let i0 = Arc::new(god.injective_term(0));
            let aug = god.term_map(0, god.base(), &i0);
            let q = Arc::new(quotient_sheaf(&aug)?);
            Some(Sections::new(q, cover.level(n - 2).clone()))
        } else {
            None
        };

        let q_len = quotient.as_ref().map_or(0, |s| s.layout().total());
        let offs0 = vec![0, q_len, q_len + lay[&(n - 1, 0)].total()];
        let offs1 = vec![0, lay[&(n - 1, 1)].total(), lay[&(n - 1, 1)].total() + lay[&(n, 0)].total()];
        let a = lay[&(n - 1, 2)].total();
        let b = a + lay[&(n, 1)].total();
        let offs2 = vec![0, a, b, b + lay[&(n + 1, 0)].total()];

        let mut parts0: Vec<FpAbGroup> = Vec::new();
        if let Some(s) = &quotient {
            parts0.push(s.ambient().as_ref().clone());
        }
        parts0.push(amb(n - 1, 0));
        let c0 = Arc::new(FpAbGroup::direct_sum(&parts0.iter().collect::<Vec<_>>()));
        let c1 = Arc::new(FpAbGroup::direct_sum(&[&amb(n - 1, 1), &amb(n, 0)]));
        let c2 = Arc::new(FpAbGroup::direct_sum(&[&amb(n - 1, 2), &amb(n, 1), &amb(n + 1, 0)]));

        let obj = |p: usize| cover.level(p).as_ref();
        let dv = |p: usize, q: usize| god.differential_columns(q, obj(p), &lay[&(p, q)], &lay[&(p, q + 1)]);
        let dh = |p: usize, q: usize| cech_columns(&cover, p, &lay[&(p, q)], &lay[&(p + 1, q)]);

        // Φ = [[εd, 0], [∂, -εd], [0, ∂]]
        let mut phi = Columns::new(offs1[2]);
        phi.add(offs1[0], offs2[0], &dv(n - 1, 1), eps);
        phi.add(offs1[0], offs2[1], &dh(n - 1, 1), 1);
        phi.add(offs1[1], offs2[1], &dv(n, 0), -eps);
        phi.add(offs1[1], offs2[2], &dh(n, 0), 1);
        let phi = GroupHom::new(c1.clone(), c2.clone(), phi.finish());

        // Ψ = [[∂∘incl, εd], [0, ∂]]
        let mut psi = Columns::new(offs0[2]);
        if let Some(s) = &quotient {
            let incl = Self::inclusion_columns(&god, s, &lay[&(n - 2, 1)]);
            let d = GroupHom::new(
                Arc::new(amb(n - 2, 1)),
                Arc::new(amb(n - 1, 1)),
                cech_columns(&cover, n - 2, &lay[&(n - 2, 1)], &lay[&(n - 1, 1)]),
            );
            let composed: Vec<SparseVec> = incl.iter().map(|c| d.apply(c)).collect();
            psi.add(offs0[0], offs1[0], &composed, 1);
        }
        psi.add(offs0[1], offs1[0], &dv(n - 1, 0), eps);
        psi.add(offs0[1], offs1[1], &dh(n - 1, 0), 1);
        let psi = GroupHom::new(c0.clone(), c1.clone(), psi.finish());

        let t0 = match &quotient {
            Some(s) => {
                let c = s.compatibility();
                let mut cols = c.columns().to_vec();
                cols.extend((0..lay[&(n - 1, 0)].total()).map(|_| SparseVec::new()));
                Term::constrained(c0, GroupHom::new(c0_clone(&psi), c.target().clone(), cols))
            }
            None => Term::free(c0),
        };
        let complex = CochainComplex::new(vec![t0, Term::free(c1), Term::free(c2)], vec![psi, phi])?;

        let global = Arc::new(SheafCohomology::with_resolution(god.clone())?);
        let tot = Arc::new(TotalComplex::new(cover.clone(), god.clone(), n)?);
        let transport = Arc::new(Transport::new(global, tot, n)?);
        Ok(ThreeTermComplex { n, eps, cover, god, quotient, lay, offs: [offs0, offs1, offs2], complex, transport })
    }

    /// Canonical inclusion `Γ(V, I^0/F) → Γ(V, I^1)` via `π_p` at each point.
    fn inclusion_columns(god: &Godement, s: &Sections, target: &Layout) -> Vec<SparseVec> {
        let sp = god.space();
        let f = god.base();
        let mut cols = Vec::with_capacity(s.layout().total());
        for b in s.layout().blocks() {
            let p = b.point;
            let tb = target.block(b.comp, p);
            let sub: HashMap<usize, usize> = god.sub_blocks(1, p).iter().copied().collect();
            for x in sp.down(p).iter() {
                for g in 0..f.stalk(x).generators() {
                    let col = if x != p {
                        SparseVec::unit(tb.offset + sub[&x] + g)
                    } else {
                        let mut acc = Vec::new();
                        for (&z, &o) in &sub {
                            let r = f.restrict_element(p, z, &SparseVec::unit(g));
                            acc.extend(r.iter().map(|(i, v)| (tb.offset + o + i, -v.clone())));
                        }
                        SparseVec::from_entries(acc)
                    };
                    cols.push(col);
                }
            }
        }
        cols
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> i64 {
        self.eps
    }

    pub fn cover(&self) -> &Arc<Hypercovering> {
        &self.cover
    }

    pub fn resolution(&self) -> &Arc<Godement> {
        &self.god
    }

    pub fn transport(&self) -> &Arc<Transport> {
        &self.transport
    }

    pub fn complex(&self) -> &CochainComplex {
        &self.complex
    }

    pub fn psi(&self) -> &GroupHom {
        self.complex.diff(0)
    }

    pub fn phi(&self) -> &GroupHom {
        self.complex.diff(1)
    }

    /// Layout of `Γ(U_p, I^q)` for the blocks the complex uses.
    pub fn layout(&self, p: usize, q: usize) -> &Layout {
        &self.lay[&(p, q)]
    }

    pub fn quotient_sections(&self) -> Option<&Sections> {
        self.quotient.as_ref()
    }

    /// `ker Φ / im Ψ`.
    pub fn cohomology(&self) -> &Subquotient {
        self.complex.cohomology(1)
    }

    /// `(α_{n-1}, α_n) ∈ C^n`.
    pub fn pack(&self, alpha_nm1: &SparseVec, alpha_n: &SparseVec) -> SparseVec {
        alpha_nm1.add(&alpha_n.shift(self.offs[1][1]))
    }

    pub fn unpack(&self, c: &SparseVec) -> (SparseVec, SparseVec) {
        (c.slice(0, self.offs[1][1]), c.slice(self.offs[1][1], self.offs[1][2]))
    }

    /// `(β_{n-2}, β_{n-1}) ∈ C^{n-1}`.
    pub fn pack_low(&self, beta_nm2: &SparseVec, beta_nm1: &SparseVec) -> SparseVec {
        beta_nm2.add(&beta_nm1.shift(self.offs[0][1]))
    }

    pub fn is_cocycle(&self, c: &SparseVec) -> bool {
        self.complex.is_cycle(1, c)
    }

    /// `(0, …, 0, α_{n-1}, α_n) ∈ Tot^n`.
    pub fn to_total(&self, c: &SparseVec) -> SparseVec {
        let (a, b) = self.unpack(c);
        let tot = self.transport.total();
        tot.embed(self.n, self.n - 1, &a).add(&tot.embed(self.n, self.n, &b))
    }

    /// Class of a cocycle in `H^n(X, F)`.
    pub fn class_of(&self, c: &SparseVec) -> Result<Vec<Int>> {
        if !self.is_cocycle(c) {
            return Err(Error::Invalid("element is not in ker Φ".into()));
        }
        self.transport.class_of(&self.to_total(c))
    }

    /// `H^n(X, F)` as computed by the resolution.
    pub fn target_group(&self) -> &Subquotient {
        self.transport.global().group(self.n).unwrap()
    }

    /// The map `ker Φ / im Ψ → H^n(X, F)` on cyclic presentations.
    pub fn comparison_map(&self) -> Result<GroupHom> {
        let src = self.cohomology();
        let tgt = self.target_group();
        let s = Arc::new(src.cyclic_group());
        let t = Arc::new(tgt.cyclic_group());
        let mut cols = Vec::new();
        for k in 0..src.orders().len() {
            cols.push(SparseVec::from_dense(&self.class_of(&src.representative(k))?));
        }
        GroupHom::checked(s, t, cols)
    }
}

fn c0_clone(psi: &GroupHom) -> Arc<FpAbGroup> {
    psi.source().clone()
}

/// Outcome of comparing Čech cohomology with `H^n(X, F)`.
#[derive(Clone, Debug)]
pub struct EdgeMapReport {
    pub degree: usize,
    pub cech: String,
    pub sheaf: String,
    pub bijective: bool,
    pub injective: bool,
    pub surjective: bool,
}

/// Edge map `H^n Γ(U_•, F) → H^n(X, F)` via `α ↦ (0, …, 0, α)`.
pub fn edge_map_check(cover: &Arc<Hypercovering>, sheaf: &Arc<Sheaf>, n: usize) -> Result<EdgeMapReport> {
    let cover = if cover.depth() < n + 1 { Arc::new(cover.with_depth(n + 1)?) } else { cover.clone() };
    let god = Arc::new(Godement::new(sheaf.clone(), n + 1));
    let cech = cech_complex(&cover, Coeff::Sheaf(sheaf), n + 1)?;
    let global = Arc::new(SheafCohomology::with_resolution(god.clone())?);
    let tot = Arc::new(TotalComplex::new(cover.clone(), god, n)?);
    let tr = Transport::new(global.clone(), tot.clone(), n)?;
    let h_c = cech.cohomology(n);
    let h_x = global.group(n)?;
    let s = Arc::new(h_c.cyclic_group());
    let t = Arc::new(h_x.cyclic_group());
    let mut cols = Vec::new();
    for k in 0..h_c.orders().len() {
        let alpha = h_c.representative(k);
        cols.push(SparseVec::from_dense(&tr.class_of(&tot.embed(n, n, &alpha))?));
    }
    let f = GroupHom::checked(s, t, cols)?;
    Ok(EdgeMapReport {
        degree: n,
        cech: h_c.describe(),
        sheaf: h_x.describe(),
        bijective: f.is_isomorphism(),
        injective: f.is_injective(),
        surjective: f.is_surjective(),
    })
}

/// `H^p Γ(U_•, I^q)` for `1 ≤ p ≤ max_p`, `0 ≤ q ≤ max_q`: all zero for a
/// flasque resolution.
pub fn acyclicity_check(cover: &Hypercovering, god: &Godement, max_p: usize, max_q: usize) -> Result<Vec<(usize, usize, String)>> {
    let mut out = Vec::new();
    for q in 0..=max_q.min(god.top()) {
        let c = cech_complex(cover, Coeff::Injective(god, q), (max_p + 1).min(cover.depth()))?;
        for p in 1..=max_p.min(cover.depth().saturating_sub(1)) {
            out.push((p, q, c.cohomology(p).describe()));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finsite::{FinSpace, SiteMorphism};
    use crate::semisimp::Refinement;

    fn c4() -> Arc<FinSpace> {
        Arc::new(FinSpace::from_names(&["a", "b", "c", "d"], &[("a", "c"), ("a", "d"), ("b", "c"), ("b", "d")]).unwrap())
    }

    fn minimal_cech(sp: &Arc<FinSpace>, depth: usize) -> Arc<Hypercovering> {
        let u = SiteMorphism::minimal_open_cover(sp).source().clone();
        Arc::new(Hypercovering::cech(sp.clone(), u, depth).unwrap())
    }

    #[test]
    fn c4_cohomology() {
        let sp = c4();
        let z = Arc::new(Sheaf::constant_cyclic(sp.clone(), 0));
        let h = SheafCohomology::new(z, 3).unwrap();
        assert_eq!(h.group(0).unwrap().describe(), "Z");
        assert_eq!(h.group(1).unwrap().describe(), "Z");
        assert_eq!(h.group(2).unwrap().describe(), "0");
    }

    #[test]
    fn cech_on_c4() {
        let sp = c4();
        let z = Arc::new(Sheaf::constant_cyclic(sp.clone(), 0));
        let u = minimal_cech(&sp, 3);
        let c = cech_complex(&u, Coeff::Sheaf(&z), 3).unwrap();
        assert_eq!(c.cohomology(0).describe(), "Z");
        assert_eq!(c.cohomology(1).describe(), "Z");
        let k = Hypercovering::constant(sp.clone(), 3);
        let c = cech_complex(&k, Coeff::Sheaf(&z), 3).unwrap();
        assert_eq!(c.cohomology(0).describe(), "Z");
        assert!(c.cohomology(1).is_trivial());
        assert!(c.cohomology(2).is_trivial());
    }

    #[test]
    fn total_complex_and_transport() {
        let sp = c4();
        let z = Arc::new(Sheaf::constant_cyclic(sp.clone(), 0));
        let u = minimal_cech(&sp, 3);
        let god = Arc::new(Godement::new(z, 3));
        let tot = Arc::new(TotalComplex::new(u, god.clone(), 2).unwrap());
        assert_eq!(tot.complex().cohomology(1).describe(), "Z");
        let global = Arc::new(SheafCohomology::with_resolution(god).unwrap());
        let tr = Transport::new(global, tot, 1).unwrap();
        assert!(tr.is_isomorphism().unwrap());
    }

    #[test]
    fn three_term_degree_one() {
        let sp = c4();
        for m in [0, 2] {
            let f = Arc::new(Sheaf::constant_cyclic(sp.clone(), m));
            let k = Arc::new(Hypercovering::constant(sp.clone(), 2));
            let t = ThreeTermComplex::new(k, f, 1).unwrap();
            assert!(t.psi().then(t.phi()).is_zero());
            assert_eq!(t.cohomology().describe(), if m == 0 { "Z" } else { "Z/2" });
            assert!(t.comparison_map().unwrap().is_isomorphism());
        }
    }

    #[test]
    fn three_term_degree_two_on_c4() {
        let sp = c4();
        let f = Arc::new(Sheaf::constant_cyclic(sp.clone(), 0));
        let t = ThreeTermComplex::new(minimal_cech(&sp, 3), f, 2).unwrap();
        assert!(t.psi().then(t.phi()).is_zero());
        assert!(t.cohomology().is_trivial());
    }

    #[test]
    fn edge_map_on_c4() {
        let sp = c4();
        let z = Arc::new(Sheaf::constant_cyclic(sp.clone(), 0));
        let u = minimal_cech(&sp, 2);
        let r = edge_map_check(&u, &z, 1).unwrap();
        assert!(r.bijective, "{r:?}");
        let r = edge_map_check(&u, &z, 0).unwrap();
        assert!(r.bijective);
    }

    #[test]
    fn homotopy_operator_on_c4() {
        let sp = c4();
        let v = minimal_cech(&sp, 4);
        let theta = Refinement::to_cech(v.clone(), v.clone(), vec![0, 1, 2, 3]).unwrap();
        let zeta = Refinement::to_cech(v.clone(), v.clone(), vec![2, 3, 2, 3]).unwrap();
        let h = Homotopy::cech(theta, zeta).unwrap();
        let f = Arc::new(Sheaf::constant_cyclic(sp.clone(), 2));
        let op = homotopy_operator(&h, Coeff::Sheaf(&f), 3).unwrap();
        let check = op.check();
        assert!(check.plus_form.iter().all(|&b| b), "{check:?}");
    }

    #[test]
    fn flasque_acyclicity_on_c4() {
        let sp = c4();
        let z = Arc::new(Sheaf::constant_cyclic(sp.clone(), 0));
        let god = Godement::new(z, 2);
        for (p, q, d) in acyclicity_check(&minimal_cech(&sp, 4), &god, 3, 2).unwrap() {
            assert_eq!(d, "0", "H^{p} of I^{q}");
        }
    }
}
