//! Rigidified torsor cocycles `(U_•, T, φ)` in degree `n ≥ 1`.
//!
//! `T` is a torsor on `U_{n-1}` and `φ` a section of `p_alt^*(T)` over `U_n`.
//! The cocycle condition is read through `q_alt^* p_alt^* T ≅ F|U_{n+1}`: the
//! factors pair off by the simplicial identities, the canonical section has
//! point data zero, and `q_alt^*(φ)` becomes the family `Σ (-1)^j q_j^* φ`.

use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde_json::{json, Value};

use crate::abgrp::{offsets, GroupHom, SparseVec, Subquotient};
use crate::cochain::ThreeTermComplex;
use crate::error::{Error, Result};
use crate::fixtures;
use crate::int::Int;
use crate::semisimp::{Homotopy, Hypercovering, Refinement};
use crate::sheaf::{Sheaf, SheafHom};
use crate::torsor::{
    alt, canonical_section, check_pairing, cochain_from_value, cochain_to_value, iterated_preimage, LevelCochains, PosetCochains, Torsor,
    TorsorSection,
};

struct Injectives {
    aug: SheafHom,
    d01: SheafHom,
    mid_i0: Arc<PosetCochains>,
}

/// Fixture names a setting was built from; used by the JSON format.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SettingSpec {
    pub space: String,
    pub coefficients: String,
    pub cover: String,
    pub depth: usize,
}

/// A hypercovering of type at most `n-2` with a coefficient sheaf, and the
/// cochain groups of the levels an RTC touches.
pub struct RtcSetting {
    n: usize,
    cover: Arc<Hypercovering>,
    sheaf: Arc<Sheaf>,
    spec: Option<SettingSpec>,
    levels: LevelCochains,
    three: OnceLock<Arc<ThreeTermComplex>>,
    inj: OnceLock<Injectives>,
}

impl std::fmt::Debug for RtcSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RtcSetting(n = {}, levels {:?})", self.n, self.cover.level_sizes())
    }
}

impl RtcSetting {
    pub fn new(cover: Arc<Hypercovering>, sheaf: Arc<Sheaf>, n: usize) -> Result<Arc<Self>> {
        Self::build(cover, sheaf, n, None)
    }

    fn build(cover: Arc<Hypercovering>, sheaf: Arc<Sheaf>, n: usize, spec: Option<SettingSpec>) -> Result<Arc<Self>> {
        if n == 0 {
            return Err(Error::Invalid("rigidified torsor cocycles need n ≥ 1".into()));
        }
        if cover.type_r() > n as i32 - 2 {
            return Err(Error::Invalid(format!("degree {n} needs a hypercovering of type at most {}, got {}", n as i32 - 2, cover.type_r())));
        }
        if cover.depth() < n + 1 {
            return Err(Error::Invalid(format!("hypercovering needs levels up to {}", n + 1)));
        }
        if cover.space().names() != sheaf.space().names() {
            return Err(Error::Invalid("sheaf and hypercovering live on different spaces".into()));
        }
        let levels = LevelCochains::new(&cover, &sheaf, n)?;
        Ok(Arc::new(RtcSetting { n, cover, sheaf, spec, levels, three: OnceLock::new(), inj: OnceLock::new() }))
    }

    /// Setting from fixture names: space, coefficients (`Z`, `Z/m`) and
    /// hypercovering (`const`, `cech`, `cech2`, `type1`), with levels up to
    /// `n + 1`.
    pub fn fixture(space: &str, coefficients: &str, cover: &str, n: usize) -> Result<Arc<Self>> {
        Self::fixture_with_depth(space, coefficients, cover, n, n + 1)
    }

    pub fn fixture_with_depth(space: &str, coefficients: &str, cover: &str, n: usize, depth: usize) -> Result<Arc<Self>> {
        let h = fixtures::hypercovering(space, cover, depth.max(n + 1))?;
        let f = fixtures::constant_sheaf(h.space(), coefficients)?;
        let spec = SettingSpec { space: space.into(), coefficients: coefficients.into(), cover: cover.into(), depth: h.depth() };
        Self::build(h, f, n, Some(spec))
    }

    pub fn from_spec(spec: &SettingSpec, n: usize) -> Result<Arc<Self>> {
        Self::fixture_with_depth(&spec.space, &spec.coefficients, &spec.cover, n, spec.depth)
    }

    pub fn spec(&self) -> Option<&SettingSpec> {
        self.spec.as_ref()
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// `ε = (-1)^{n-1}`.
    pub fn epsilon(&self) -> i64 {
        alt(self.n - 1)
    }

    pub fn cover(&self) -> &Arc<Hypercovering> {
        &self.cover
    }

    pub fn sheaf(&self) -> &Arc<Sheaf> {
        &self.sheaf
    }

    pub fn levels(&self) -> &LevelCochains {
        &self.levels
    }

    pub fn three_term(&self) -> Result<&Arc<ThreeTermComplex>> {
        if let Some(t) = self.three.get() {
            return Ok(t);
        }
        let t = Arc::new(ThreeTermComplex::new(self.cover.clone(), self.sheaf.clone(), self.n)?);
        Ok(self.three.get_or_init(|| t))
    }

    /// `H^n(X, F)` as presented by the resolution.
    pub fn target_group(&self) -> Result<&Subquotient> {
        Ok(self.three_term()?.target_group())
    }

    /// Equality of two class vectors in `H^n(X, F)`.
    pub fn same_class(&self, a: &[Int], b: &[Int]) -> Result<bool> {
        let g = self.target_group()?.cyclic_group();
        Ok(g.equal_elements(&SparseVec::from_dense(a), &SparseVec::from_dense(b)))
    }

    fn injectives(&self) -> Result<&Injectives> {
        if let Some(i) = self.inj.get() {
            return Ok(i);
        }
        let god = self.three_term()?.resolution();
        let i0 = Arc::new(god.injective_term(0));
        let i1 = Arc::new(god.injective_term(1));
        let aug = god.term_map(0, &self.sheaf, &i0);
        let d01 = god.term_map(1, &i0, &i1);
        let mid_i0 = PosetCochains::new(i0, self.cover.level(self.n - 1).clone());
        Ok(self.inj.get_or_init(|| Injectives { aug, d01, mid_i0 }))
    }

    fn face_list(&self, level: usize) -> Vec<Vec<usize>> {
        LevelCochains::faces(&self.cover, level).into_iter().map(|(_, m)| m).collect()
    }

    /// `p_alt^*(T)` on `U_n`.
    pub fn p_alt(&self, t: &Torsor) -> Result<Torsor> {
        t.alternating_preimage(&self.face_list(self.n), self.levels.top.clone())
    }

    /// `r_alt^*(T_low)` on `U_{n-1}` (the augmentation when `n = 1`).
    pub fn r_alt(&self, t_low: &Torsor) -> Result<Torsor> {
        t_low.alternating_preimage(&self.face_list(self.n - 1), self.levels.mid.clone())
    }

    /// `Σ (-1)^i p_i^*` on point data, `U_{n-1} → U_n`.
    pub fn p_alt_data(&self, s: &SparseVec) -> Result<SparseVec> {
        self.levels.top.pull_signed(&self.levels.mid, &LevelCochains::faces(&self.cover, self.n), 0, s)
    }

    /// `Σ (-1)^j q_j^*` on point data, `U_n → U_{n+1}`.
    pub fn q_alt_data(&self, s: &SparseVec) -> Result<SparseVec> {
        self.levels.over.pull_signed(&self.levels.top, &LevelCochains::faces(&self.cover, self.n + 1), 0, s)
    }

    fn alt_matrix(&self, target: &PosetCochains, src: &PosetCochains, level: usize, k: usize) -> Result<GroupHom> {
        let mut acc: Option<GroupHom> = None;
        for (sign, m) in LevelCochains::faces(&self.cover, level) {
            let h = target.pull_matrix(src, &m, k)?.scale(&Int::from(sign));
            acc = Some(match acc {
                None => h,
                Some(a) => a.add(&h),
            });
        }
        Ok(acc.expect("at least one face"))
    }

    /// `z`-component of `e_(c,x) ∈ I^0_x = ⊕_{w ≤ x} F_w`.
    fn i0_component(&self, e: &SparseVec, c: usize, x: usize, z: usize) -> Result<SparseVec> {
        let inj = self.injectives()?;
        let v = inj.mid_i0.value(0, e, c, &[x]);
        let mut off = 0;
        for w in self.sheaf.space().down(x).iter() {
            let len = self.sheaf.stalk(w).generators();
            if w == z {
                return Ok(v.slice(off, off + len));
            }
            off += len;
        }
        Ok(SparseVec::new())
    }
}

fn same_levels(a: &Hypercovering, b: &Hypercovering, top: usize) -> bool {
    a.depth() >= top && b.depth() >= top && (0..=top).all(|k| a.level(k).components() == b.level(k).components())
}

/// A rigidified torsor cocycle.
#[derive(Clone, Debug)]
pub struct Rtc {
    setting: Arc<RtcSetting>,
    torsor: Torsor,
    rigidification: TorsorSection,
}

/// Data of a rigidified torsor coboundary: a torsor on `U_{n-2}` (a trivial
/// torsor on `X` when `n = 1`) and a section `s ∈ Γ(U_{n-1}, F)`.
#[derive(Clone, Debug)]
pub struct CoboundaryDatum {
    pub setting: Arc<RtcSetting>,
    pub low_torsor: Torsor,
    pub shift: SparseVec,
}

impl CoboundaryDatum {
    pub fn new(setting: Arc<RtcSetting>, low_torsor: Torsor, shift: SparseVec) -> Result<Self> {
        let lv = setting.levels();
        if low_torsor.base().components() != lv.low.base().components() {
            return Err(Error::Invalid("low torsor does not live on U_{n-2}".into()));
        }
        if setting.n == 1 && low_torsor.find_section().is_none() {
            return Err(Error::Invalid("in degree one the low torsor must be trivial".into()));
        }
        if !lv.mid.is_zero(1, &lv.mid.d0().apply(&shift)) {
            return Err(Error::Invalid("shift is not a section of F over U_{n-1}".into()));
        }
        Ok(CoboundaryDatum { setting, low_torsor, shift })
    }

    /// Random torsor on the low level with a random section shift.
    pub fn random(setting: Arc<RtcSetting>, rng: &mut impl Rng) -> Result<Self> {
        let lv = setting.levels().clone();
        let t = if setting.n == 1 { Torsor::trivial(lv.low.clone()) } else { Torsor::random(lv.low.clone(), rng) };
        let mut shift = SparseVec::new();
        for k in lv.mid.d0().kernel() {
            shift = shift.add(&k.scale(&Int::from(rng.gen_range(-2..=2i64))));
        }
        CoboundaryDatum::new(setting, t, shift)
    }
}

/// `(α_{n-1}, α_n) ∈ Γ(U_{n-1}, I^1) ⊕ Γ(U_n, I^0)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreeTermCocycle {
    pub alpha_nm1: SparseVec,
    pub alpha_n: SparseVec,
}

impl ThreeTermCocycle {
    pub fn pack(&self, three: &ThreeTermComplex) -> SparseVec {
        three.pack(&self.alpha_nm1, &self.alpha_n)
    }

    pub fn unpack(three: &ThreeTermComplex, c: &SparseVec) -> Self {
        let (a, b) = three.unpack(c);
        ThreeTermCocycle { alpha_nm1: a, alpha_n: b }
    }
}

/// Two RTCs on one setting differ by the coboundary of `datum`, after the
/// change of trivialization `iso ∈ C^0(U_{n-1})`.
#[derive(Clone, Debug)]
pub struct Witness {
    pub datum: CoboundaryDatum,
    pub iso: SparseVec,
}

/// Outcome of transporting one RTC along a pair of homotopic refinements.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomotopyReport {
    /// `θ^*g − ζ^*g = r'_alt(h_alt g) + h_alt(p_alt g)` on transition data.
    pub torsor_identity: bool,
    /// `θ^*φ = ζ^*φ + p'_alt(h_alt φ)`.
    pub rigidification_identity: bool,
    /// The same with `- p'_alt(h_alt φ)`.
    pub literal_sign_identity: bool,
    /// `θ^*` and `ζ^*` give the same class in `H^n`.
    pub classes_agree: bool,
}

impl HomotopyReport {
    pub fn passed(&self) -> bool {
        self.torsor_identity && self.rigidification_identity && self.classes_agree
    }
}

impl Rtc {
    /// Checks that `φ` is a section of `p_alt^*(T)`; the cocycle condition
    /// is [`Rtc::validate`].
    pub fn new(setting: Arc<RtcSetting>, torsor: Torsor, phi: SparseVec) -> Result<Self> {
        let lv = setting.levels();
        if torsor.base().components() != lv.mid.base().components() || !Arc::ptr_eq(torsor.sheaf(), &setting.sheaf) {
            return Err(Error::Invalid("torsor does not live on U_{n-1} with the setting's coefficients".into()));
        }
        let pt = setting.p_alt(&torsor)?;
        let rigidification = TorsorSection { torsor: pt, data: phi };
        if !rigidification.is_valid() {
            return Err(Error::Invalid("rigidification is not a section of p_alt^*(T)".into()));
        }
        Ok(Rtc { setting, torsor, rigidification })
    }

    /// `(F|U_{n-1}, 0)`.
    pub fn neutral(setting: Arc<RtcSetting>) -> Self {
        let t = Torsor::trivial(setting.levels().mid.clone());
        Rtc::new(setting, t, SparseVec::new()).expect("neutral object is well formed")
    }

    pub fn setting(&self) -> &Arc<RtcSetting> {
        &self.setting
    }

    pub fn degree(&self) -> usize {
        self.setting.n
    }

    pub fn cover(&self) -> &Arc<Hypercovering> {
        &self.setting.cover
    }

    pub fn torsor(&self) -> &Torsor {
        &self.torsor
    }

    pub fn rigidification(&self) -> &TorsorSection {
        &self.rigidification
    }

    pub fn phi(&self) -> &SparseVec {
        &self.rigidification.data
    }

    /// `q_alt^*(φ)` minus the canonical section, as a family over `U_{n+1}`.
    pub fn residue(&self) -> Result<SparseVec> {
        let s = &self.setting;
        check_pairing(&s.cover, s.n + 1)?;
        let (product, inv) = iterated_preimage(&s.cover, s.n + 1, &self.torsor, &s.levels.over)?;
        let can = canonical_section(&product, &inv)?;
        Ok(s.q_alt_data(self.phi())?.sub(&can.data))
    }

    /// The cocycle condition.
    pub fn validate(&self) -> Result<bool> {
        let r = self.residue()?;
        Ok(self.setting.levels.over.is_zero(0, &r))
    }

    fn check_same(&self, other: &Rtc) -> Result<()> {
        if !Arc::ptr_eq(&self.setting, &other.setting) {
            return Err(Error::Invalid("RTCs live on different settings; pull back to a common refinement first".into()));
        }
        Ok(())
    }

    pub fn wedge(&self, other: &Rtc) -> Result<Rtc> {
        self.check_same(other)?;
        Ok(Rtc {
            setting: self.setting.clone(),
            torsor: self.torsor.wedge(&other.torsor)?,
            rigidification: self.rigidification.wedge(&other.rigidification)?,
        })
    }

    pub fn inverse(&self) -> Rtc {
        Rtc { setting: self.setting.clone(), torsor: self.torsor.inverse(), rigidification: self.rigidification.inverse() }
    }

    /// Adds `t ∈ C^0(U_n)` to the rigidification (still checked as a section).
    pub fn translated(&self, t: &SparseVec) -> Result<Rtc> {
        Rtc::new(self.setting.clone(), self.torsor.clone(), self.phi().add(t))
    }

    /// `(r_alt^*(T_low), φ_can + p_alt^*(s))`.
    pub fn coboundary(d: &CoboundaryDatum) -> Result<Rtc> {
        let s = &d.setting;
        let t = s.r_alt(&d.low_torsor)?;
        let (product, inv) = iterated_preimage(&s.cover, s.n, &d.low_torsor, &s.levels.top)?;
        let phi_can = canonical_section(&product, &inv)?;
        let phi = phi_can.data.add(&s.p_alt_data(&d.shift)?);
        Rtc::new(s.clone(), t, phi)
    }

    /// Pullback along `θ: U' → U`, into a fresh setting on `U'`.
    pub fn pullback(&self, theta: &Refinement) -> Result<Rtc> {
        let target = RtcSetting::new(theta.source().clone(), self.setting.sheaf.clone(), self.setting.n)?;
        self.pullback_into(theta, &target)
    }

    /// Pullback along `θ` into a given setting on `θ`'s source.
    pub fn pullback_into(&self, theta: &Refinement, target: &Arc<RtcSetting>) -> Result<Rtc> {
        let n = self.setting.n;
        if theta.depth() < n || !same_levels(theta.target(), &self.setting.cover, n) {
            return Err(Error::Invalid("refinement does not end at this RTC's hypercovering".into()));
        }
        if !same_levels(theta.source(), &target.cover, n) {
            return Err(Error::Invalid("refinement does not start at the target setting".into()));
        }
        let tl = target.levels();
        let t = self.torsor.pullback(tl.mid.clone(), theta.map(n - 1))?;
        let phi = tl.top.pull(&self.setting.levels.top, theta.map(n), 0, self.phi())?;
        Rtc::new(target.clone(), t, phi)
    }

    /// The three-term cocycle: trivialize `T` after inducing into `I^0` and
    /// read off the discrepancies.
    pub fn three_term_cocycle(&self) -> Result<ThreeTermCocycle> {
        let s = &self.setting;
        let inj = s.injectives()?;
        let three = s.three_term()?;
        let god = three.resolution();
        let f = &s.sheaf;
        let eps = Int::from(three.epsilon());
        let n = s.n;

        let t0 = self.torsor.induce(&inj.aug, inj.mid_i0.clone())?;
        let sec = t0.find_section().ok_or_else(|| Error::Failed("no section of T^0".into()))?;
        let e = sec.data.neg();

        let mut a1 = Vec::new();
        for b in three.layout(n - 1, 1).blocks() {
            let z = b.point;
            let top = s.i0_component(&e, b.comp, z, z)?;
            for &(x, o) in god.sub_blocks(1, z) {
                let v = s.i0_component(&e, b.comp, z, x)?.sub(&f.restrict_element(z, x, &top)).scale(&eps);
                a1.extend(v.iter().map(|(i, c)| (b.offset + o + i, c.clone())));
            }
        }
        let faces = LevelCochains::faces(&s.cover, n);
        let mut a0 = Vec::new();
        for b in three.layout(n, 0).blocks() {
            let mut v = self.phi().slice(b.offset, b.offset + b.len);
            for (sign, m) in &faces {
                v = v.add(&s.i0_component(&e, m[b.comp], b.point, b.point)?.scale(&Int::from(*sign)));
            }
            a0.extend(v.iter().map(|(i, c)| (b.offset + i, c.clone())));
        }
        let c = ThreeTermCocycle { alpha_nm1: SparseVec::from_entries(a1), alpha_n: SparseVec::from_entries(a0) };
        if !three.is_cocycle(&c.pack(three)) {
            return Err(Error::Failed("extracted pair is not in ker Φ".into()));
        }
        Ok(c)
    }

    /// Class in `H^n(X, F)`.
    pub fn comparison(&self) -> Result<Vec<Int>> {
        let c = self.three_term_cocycle()?;
        let three = self.setting.three_term()?;
        three.class_of(&c.pack(three))
    }

    /// An RTC whose three-term cocycle is `c`.
    pub fn from_three_term(setting: Arc<RtcSetting>, c: &ThreeTermCocycle) -> Result<Rtc> {
        let three = setting.three_term()?.clone();
        if !three.is_cocycle(&c.pack(&three)) {
            return Err(Error::Invalid("pair is not in ker Φ".into()));
        }
        let inj = setting.injectives()?;
        let god = three.resolution();
        let sp = setting.sheaf.space().clone();
        let eps = Int::from(three.epsilon());
        let n = setting.n;
        let lv = setting.levels().clone();
        let l1 = three.layout(n - 1, 1);
        let k1 = god.term(1);

        // e_(c,x) ∈ I^0_x with d e_(c,x) = ε α_{n-1}|↓x, one point at a time.
        let mut e_entries = Vec::new();
        for ent in inj.mid_i0.entries(0) {
            let (comp, x) = (ent.comp, ent.chain[0]);
            let mut rhs = Vec::new();
            let mut off = 0;
            for w in sp.down(x).iter() {
                let b = l1.block(comp, w);
                let v = c.alpha_nm1.slice(b.offset, b.offset + b.len).scale(&eps);
                rhs.extend(v.iter().map(|(i, a)| (off + i, a.clone())));
                off += k1.stalk(w).generators();
            }
            let sol = inj
                .d01
                .at(x)
                .solve(&SparseVec::from_entries(rhs))
                .ok_or_else(|| Error::Failed(format!("α_(n-1) is not locally exact at {}", sp.name(x))))?;
            e_entries.extend(sol.iter().map(|(i, a)| (ent.offset + i, a.clone())));
        }
        let e = SparseVec::from_entries(e_entries);

        let mut g = Vec::new();
        for ent in lv.mid.entries(1) {
            let (z, x) = (ent.chain[0], ent.chain[1]);
            let v = setting.i0_component(&e, ent.comp, z, z)?.sub(&setting.i0_component(&e, ent.comp, x, z)?);
            g.extend(v.iter().map(|(i, a)| (ent.offset + i, a.clone())));
        }
        let torsor = Torsor::new(lv.mid.clone(), SparseVec::from_entries(g))?;

        let faces = LevelCochains::faces(&setting.cover, n);
        let mut phi = Vec::new();
        for b in three.layout(n, 0).blocks() {
            let mut v = c.alpha_n.slice(b.offset, b.offset + b.len);
            for (sign, m) in &faces {
                v = v.sub(&setting.i0_component(&e, m[b.comp], b.point, b.point)?.scale(&Int::from(*sign)));
            }
            phi.extend(v.iter().map(|(i, a)| (b.offset + i, a.clone())));
        }
        Rtc::new(setting, torsor, SparseVec::from_entries(phi))
    }

    /// One RTC per generator of `ker Φ / im Ψ`.
    pub fn generators(setting: &Arc<RtcSetting>) -> Result<Vec<Rtc>> {
        let three = setting.three_term()?.clone();
        let h = three.cohomology();
        (0..h.orders().len())
            .map(|k| Rtc::from_three_term(setting.clone(), &ThreeTermCocycle::unpack(&three, &h.representative(k))))
            .collect()
    }

    /// A random combination of generators wedged with a random coboundary.
    pub fn random(setting: &Arc<RtcSetting>, rng: &mut impl Rng) -> Result<Rtc> {
        let mut acc = Rtc::coboundary(&CoboundaryDatum::random(setting.clone(), rng)?)?;
        for g in Rtc::generators(setting)? {
            let k = rng.gen_range(-2..=2i64);
            let term = if k < 0 { g.inverse() } else { g };
            for _ in 0..k.unsigned_abs() {
                acc = acc.wedge(&term)?;
            }
        }
        Ok(acc)
    }

    /// Equivalence by comparison classes; the settings may differ.
    pub fn equivalent(&self, other: &Rtc) -> Result<bool> {
        if self.setting.n != other.setting.n {
            return Err(Error::Invalid("RTCs of different degrees".into()));
        }
        let a = self.comparison()?;
        let b = other.comparison()?;
        self.setting.same_class(&a, &b)
    }

    /// Explicit coboundary relating `self` and `other` on one setting.
    pub fn witness(&self, other: &Rtc) -> Result<Option<Witness>> {
        self.check_same(other)?;
        let s = &self.setting;
        let lv = s.levels();
        let mut r_alt = s.alt_matrix(&lv.mid, &lv.low, s.n - 1, 1)?;
        if s.n == 1 {
            r_alt = r_alt.scale(&Int::ZERO);
        }
        let p_alt = s.alt_matrix(&lv.top, &lv.mid, s.n, 0)?;
        let sources = [lv.low.group(1).clone(), lv.mid.group(0).clone()];
        let targets = [lv.mid.group(1).clone(), lv.top.group(0).clone(), lv.low.group(2).clone()];
        let m = GroupHom::block(&sources, &targets, &[(0, 0, &r_alt), (0, 1, lv.mid.d0()), (1, 1, &p_alt), (2, 0, lv.low.d1())]);
        let to = offsets(&targets);
        let rhs = self.torsor.cocycle().sub(other.torsor.cocycle()).add(&self.phi().sub(other.phi()).shift(to[1]));
        let Some(sol) = m.solve(&rhs) else {
            return Ok(None);
        };
        let so = offsets(&sources);
        let g_low = if s.n == 1 { SparseVec::new() } else { sol.slice(so[0], so[1]) };
        let iso = sol.slice(so[1], so[2]);
        let datum = CoboundaryDatum::new(s.clone(), Torsor::new(lv.low.clone(), g_low)?, SparseVec::new())?;
        Ok(Some(Witness { datum, iso }))
    }

    /// `T' = T'' ∧ r_alt^*(T_low)` up to `D0(iso)`, and
    /// `φ' = φ'' + φ_can + p_alt(iso)`.
    pub fn check_witness(&self, other: &Rtc, w: &Witness) -> Result<bool> {
        self.check_same(other)?;
        let s = &self.setting;
        let lv = s.levels();
        let rhs = other.wedge(&Rtc::coboundary(&w.datum)?)?;
        let g_ok = lv.mid.equal(1, self.torsor.cocycle(), &rhs.torsor.cocycle().add(&lv.mid.d0().apply(&w.iso)));
        let phi_ok = lv.top.equal(0, self.phi(), &rhs.phi().add(&s.p_alt_data(&w.iso)?));
        Ok(g_ok && phi_ok)
    }

    /// Compares `θ^*` and `ζ^*` of this RTC through the homotopy `h`.
    pub fn homotopy_transport_check(&self, h: &Homotopy) -> Result<HomotopyReport> {
        let s = &self.setting;
        let n = s.n;
        let (theta, zeta) = (h.theta(), h.zeta());
        if h.depth() < n {
            return Err(Error::Invalid(format!("homotopy needs levels up to {n}")));
        }
        let target = RtcSetting::new(theta.source().clone(), s.sheaf.clone(), n)?;
        let a = self.pullback_into(theta, &target)?;
        let b = self.pullback_into(zeta, &target)?;
        let tl = target.levels();
        let hs = |level: usize| -> Vec<(i64, Vec<usize>)> { (0..=level).map(|j| (alt(j), h.map(level, j).to_vec())).collect() };

        let g = self.torsor.cocycle();
        let mut rhs = tl.mid.pull_signed(&s.levels.top, &hs(n - 1), 1, s.p_alt(&self.torsor)?.cocycle())?;
        if n >= 2 {
            let low_h = tl.low.pull_signed(&s.levels.mid, &hs(n - 2), 1, g)?;
            rhs = rhs.add(target.r_alt(&Torsor::new(tl.low.clone(), low_h)?)?.cocycle());
        }
        let torsor_identity = tl.mid.equal(1, &a.torsor.cocycle().sub(b.torsor.cocycle()), &rhs);

        let h_phi = tl.mid.pull_signed(&s.levels.top, &hs(n - 1), 0, self.phi())?;
        let corr = target.p_alt_data(&h_phi)?;
        let diff = a.phi().sub(b.phi());
        let rigidification_identity = tl.top.equal(0, &diff, &corr);
        let literal_sign_identity = tl.top.equal(0, &diff, &corr.neg());

        let classes_agree = target.same_class(&a.comparison()?, &b.comparison()?)?;
        Ok(HomotopyReport { torsor_identity, rigidification_identity, literal_sign_identity, classes_agree })
    }

    pub fn to_json(&self) -> Result<String> {
        let s = &self.setting;
        let spec = s.spec.as_ref().ok_or_else(|| Error::Invalid("setting was not built from fixture names".into()))?;
        let v = json!({
            "space": spec.space,
            "coefficients": spec.coefficients,
            "cover": spec.cover,
            "depth": spec.depth,
            "degree": s.n,
            "torsor": cochain_to_value(&s.levels.mid, 1, self.torsor.cocycle()),
            "rigidification": cochain_to_value(&s.levels.top, 0, self.phi()),
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Reads an RTC file; the setting is rebuilt from its fixture names.
    pub fn from_json(text: &str) -> Result<Rtc> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let (spec, n) = spec_from_value(&v)?;
        let setting = RtcSetting::from_spec(&spec, n)?;
        Rtc::from_value_in(&setting, &v)
    }

    /// Torsor and rigidification of an RTC file, read into a given setting.
    pub fn from_value_in(setting: &Arc<RtcSetting>, v: &Value) -> Result<Rtc> {
        let lv = setting.levels();
        let g = cochain_from_value(&lv.mid, 1, &v["torsor"])?;
        let phi = cochain_from_value(&lv.top, 0, &v["rigidification"])?;
        let t = Torsor::new(lv.mid.clone(), g)?;
        Rtc::new(setting.clone(), t, phi)
    }
}

/// Setting fields of an RTC or gerbe file.
pub fn spec_from_value(v: &Value) -> Result<(SettingSpec, usize)> {
    let field =
        |k: &str| -> Result<String> { v[k].as_str().map(str::to_string).ok_or_else(|| Error::Malformed(format!("missing string field {k:?}"))) };
    let n = v["degree"].as_u64().ok_or_else(|| Error::Malformed("missing field \"degree\"".into()))? as usize;
    let depth = v["depth"].as_u64().map_or(n + 1, |d| d as usize);
    Ok((SettingSpec { space: field("space")?, coefficients: field("coefficients")?, cover: field("cover")?, depth }, n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generator_check(space: &str, coeff: &str, cover: &str, n: usize) {
        let s = RtcSetting::fixture(space, coeff, cover, n).unwrap();
        let gens = Rtc::generators(&s).unwrap();
        let three = s.three_term().unwrap();
        for (k, g) in gens.iter().enumerate() {
            assert!(g.validate().unwrap(), "{space} generator {k} fails the cocycle condition");
            let want = three.class_of(&three.cohomology().representative(k)).unwrap();
            assert!(s.same_class(&g.comparison().unwrap(), &want).unwrap());
        }
    }

    #[test]
    fn round_trip_c4_degree_one() {
        generator_check("C4", "Z", "const", 1);
        generator_check("C4", "Z/2", "const", 1);
    }

    #[test]
    fn round_trip_s2f_degree_two() {
        generator_check("S2F", "Z", "cech2", 2);
        generator_check("S2F", "Z", "cech", 2);
    }

    #[test]
    fn degree_one_matches_torsor_class() {
        let s = RtcSetting::fixture("C4", "Z", "const", 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..6 {
            let r = Rtc::random(&s, &mut rng).unwrap();
            assert!(r.validate().unwrap());
            let c = r.comparison().unwrap();
            let t = r.torsor().h1_class().unwrap();
            assert!(s.same_class(&c, &t).unwrap(), "{c:?} vs {t:?}");
        }
    }

    #[test]
    fn coboundaries_are_neutral() {
        let s = RtcSetting::fixture("S2F", "Z", "cech2", 2).unwrap();
        let e = Rtc::neutral(s.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..4 {
            let d = CoboundaryDatum::random(s.clone(), &mut rng).unwrap();
            let c = Rtc::coboundary(&d).unwrap();
            assert!(c.validate().unwrap());
            assert!(c.equivalent(&e).unwrap());
            let w = c.witness(&e).unwrap().expect("witness");
            assert!(c.check_witness(&e, &w).unwrap());
        }
    }

    #[test]
    fn group_law_is_additive() {
        let s = RtcSetting::fixture("S2F", "Z", "cech2", 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = Rtc::random(&s, &mut rng).unwrap();
        let b = Rtc::random(&s, &mut rng).unwrap();
        let ab = a.wedge(&b).unwrap();
        let sum: Vec<Int> = a.comparison().unwrap().iter().zip(b.comparison().unwrap()).map(|(x, y)| x.clone() + y).collect();
        assert!(s.same_class(&ab.comparison().unwrap(), &sum).unwrap());
        let w = a.wedge(&a.inverse()).unwrap();
        assert!(w.witness(&Rtc::neutral(s.clone())).unwrap().is_some());
    }

    #[test]
    fn generator_is_not_a_coboundary() {
        let s = RtcSetting::fixture("S2F", "Z", "cech2", 2).unwrap();
        let g = Rtc::generators(&s).unwrap().remove(0);
        assert!(!g.equivalent(&Rtc::neutral(s.clone())).unwrap());
        assert!(g.witness(&Rtc::neutral(s.clone())).unwrap().is_none());
    }

    #[test]
    fn json_round_trip() {
        let s = RtcSetting::fixture("S2F", "Z", "cech2", 2).unwrap();
        let g = Rtc::generators(&s).unwrap().remove(0);
        let text = g.to_json().unwrap();
        let back = Rtc::from_json(&text).unwrap();
        assert!(back.validate().unwrap());
        assert!(g.equivalent(&back).unwrap());
    }

    #[test]
    fn homotopic_refinements_agree() {
        let sp = fixtures::space("S2F").unwrap();
        let target = RtcSetting::fixture("S2F", "Z", "cech2", 2).unwrap();
        let src = Arc::new(Hypercovering::cech(sp.clone(), fixtures::minimal_cover(&sp), 3).unwrap());
        let g = Rtc::generators(&target).unwrap().remove(0);
        // e ↦ 0, f ↦ 1; the lower points may go to either member
        let theta = Refinement::to_cech(src.clone(), target.cover().clone(), vec![0, 1, 0, 1, 0, 1]).unwrap();
        let zeta = Refinement::to_cech(src, target.cover().clone(), vec![1, 0, 1, 0, 0, 1]).unwrap();
        let h = Homotopy::cech(theta, zeta).unwrap();
        let r = g.homotopy_transport_check(&h).unwrap();
        assert!(r.passed(), "{r:?}");
    }
}
