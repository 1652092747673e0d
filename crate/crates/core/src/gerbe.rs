//! Discrete bundle gerbes `(Y, P, μ)` and the Bockstein map of
//! `0 → Z --m--> Z → Z/m → 0`.
//!
//! `Y → X` is a cover, `P` a torsor on `Y_1 = Y ×_X Y` and `μ` a section of
//! `p_alt^*(P^{-1})` over `Y_2`. With the face dictionary `π_1 = p_2`,
//! `π_2 = p_0`, `π_3 = p_1`, the gerbe is the degree-2 RTC `(Y_•, P^{-1}, μ)`
//! on the Čech covering of `Y`.

use std::sync::Arc;

use serde_json::{json, Value};

use crate::abgrp::{GroupHom, SparseVec, Subquotient};
use crate::cochain::SheafCohomology;
use crate::error::{Error, Result};
use crate::finsite::{FinSpace, SiteMorphism, SiteObject};
use crate::fixtures;
use crate::int::Int;
use crate::rtc::{Rtc, RtcSetting};
use crate::semisimp::Hypercovering;
use crate::sheaf::{GodementMap, Sheaf, SheafHom};
use crate::torsor::{canonical_section, cochain_from_value, cochain_to_value, iterated_preimage, Torsor, TorsorSection};

/// Degree-2 setting on the Čech covering of `Y`.
pub fn gerbe_setting(sheaf: Arc<Sheaf>, y: Arc<SiteObject>) -> Result<Arc<RtcSetting>> {
    let sp = sheaf.space().clone();
    if !SiteMorphism::to_final(&sp, y.clone()).is_cover() {
        return Err(Error::Invalid("Y does not cover X".into()));
    }
    let h = Hypercovering::cech(sp, y, 3)?;
    RtcSetting::new(Arc::new(h), sheaf, 2)
}

#[derive(Clone, Debug)]
pub struct GerbeData {
    setting: Arc<RtcSetting>,
    coefficients: Option<String>,
    pair_torsor: Torsor,
    multiplication: TorsorSection,
}

/// `q_alt^*(μ)` computed twice: through the canonical identification and
/// as `f_a - f_b + f_c - f_d` over the four faces of each component of `Y_3`.
#[derive(Clone, Debug)]
pub struct Associativity {
    pub residue: SparseVec,
    pub four_scalar: SparseVec,
    pub associative: bool,
}

impl GerbeData {
    /// `μ` must be a section of `p_alt^*(P^{-1})`.
    pub fn new(setting: Arc<RtcSetting>, pair_torsor: Torsor, mu: SparseVec) -> Result<Self> {
        if setting.degree() != 2 || setting.cover().type_r() > 0 {
            return Err(Error::Invalid("gerbes live on the Čech covering of Y in degree 2".into()));
        }
        let lv = setting.levels();
        if pair_torsor.base().components() != lv.mid.base().components() {
            return Err(Error::Invalid("P does not live on Y_1".into()));
        }
        let target = setting.p_alt(&pair_torsor.inverse())?;
        let multiplication = TorsorSection { torsor: target, data: mu };
        if !multiplication.is_valid() {
            return Err(Error::Invalid("μ is not a section of p_alt^*(P^{-1})".into()));
        }
        Ok(GerbeData { setting, coefficients: None, pair_torsor, multiplication })
    }

    /// Trivial `P`, `μ = 0`.
    pub fn trivial(setting: Arc<RtcSetting>) -> Result<Self> {
        let t = Torsor::trivial(setting.levels().mid.clone());
        GerbeData::new(setting, t, SparseVec::new())
    }

    /// `P = π_1^*(Q^{-1}) ∧ π_2^*(Q)` for a torsor `Q` on `Y`, with the
    /// canonical `μ`.
    pub fn from_torsor_on_y(setting: Arc<RtcSetting>, q: &Torsor) -> Result<Self> {
        let p = setting.r_alt(q)?;
        let (product, inv) = iterated_preimage(setting.cover(), 2, &q.inverse(), &setting.levels().top)?;
        let mu = canonical_section(&product, &inv)?;
        GerbeData::new(setting, p, mu.data)
    }

    /// `P = T^{-1}`, `μ = φ`.
    pub fn from_rtc(r: &Rtc) -> Result<Self> {
        GerbeData::new(r.setting().clone(), r.torsor().inverse(), r.phi().clone())
    }

    pub fn with_coefficients(mut self, spec: &str) -> Self {
        self.coefficients = Some(spec.to_string());
        self
    }

    pub fn setting(&self) -> &Arc<RtcSetting> {
        &self.setting
    }

    /// `Y → X`.
    pub fn cover(&self) -> SiteMorphism {
        let sp = self.setting.sheaf().space();
        SiteMorphism::to_final(sp, self.setting.cover().level(0).clone())
    }

    pub fn pair_torsor(&self) -> &Torsor {
        &self.pair_torsor
    }

    pub fn multiplication(&self) -> &TorsorSection {
        &self.multiplication
    }

    /// `μ + t` for any family `t` over `Y_2` (checked as a section).
    pub fn translated(&self, t: &SparseVec) -> Result<Self> {
        let g = GerbeData::new(self.setting.clone(), self.pair_torsor.clone(), self.multiplication.data.add(t))?;
        Ok(GerbeData { coefficients: self.coefficients.clone(), ..g })
    }

    fn as_rtc(&self) -> Result<Rtc> {
        Rtc::new(self.setting.clone(), self.pair_torsor.inverse(), self.multiplication.data.clone())
    }

    pub fn associativity(&self) -> Result<Associativity> {
        let residue = self.as_rtc()?.residue()?;
        let lv = self.setting.levels();
        let cover = self.setting.cover();
        let mu = &self.multiplication.data;
        let mut acc = Vec::new();
        for e in lv.over.entries(0) {
            let f = |j: usize| lv.top.value(0, mu, cover.face_of(3, j, e.comp), &e.chain);
            let v = f(0).sub(&f(1)).add(&f(2)).sub(&f(3));
            acc.extend(v.iter().map(|(i, c)| (e.offset + i, c.clone())));
        }
        let four_scalar = SparseVec::from_entries(acc);
        let associative = lv.over.is_zero(0, &residue);
        Ok(Associativity { residue, four_scalar, associative })
    }

    pub fn is_associative(&self) -> Result<bool> {
        Ok(self.associativity()?.associative)
    }

    /// The degree-2 RTC `(Y_•, P^{-1}, μ)`.
    pub fn to_rtc2(&self) -> Result<Rtc> {
        if !self.is_associative()? {
            return Err(Error::Failed("q_alt(mu) != 0".into()));
        }
        self.as_rtc()
    }

    /// Class in `H^2(X, F)`.
    pub fn class(&self) -> Result<Vec<Int>> {
        self.to_rtc2()?.comparison()
    }

    pub fn to_json(&self) -> Result<String> {
        let sp = self.setting.sheaf().space();
        let coeff = self.coefficients.as_ref().ok_or_else(|| Error::Invalid("coefficients were not recorded".into()))?;
        let lv = self.setting.levels();
        let v = json!({
            "space": fixture_name(sp),
            "coefficients": coeff,
            "cover": self.setting.cover().level(0).to_names(sp),
            "pair_torsor": cochain_to_value(&lv.mid, 1, self.pair_torsor.cocycle()),
            "multiplication": cochain_to_value(&lv.top, 0, &self.multiplication.data),
        });
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// Reads `{space, coefficients, cover, pair_torsor, multiplication}`.
    /// Only the shape of `μ` is checked here; associativity is separate.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Malformed(e.to_string()))?;
        let space = v["space"].as_str().ok_or_else(|| Error::Malformed("missing field \"space\"".into()))?;
        let coeff = v["coefficients"].as_str().ok_or_else(|| Error::Malformed("missing field \"coefficients\"".into()))?;
        let sp = fixtures::space(space)?;
        let f = fixtures::constant_sheaf(&sp, coeff)?;
        let comps: Vec<Vec<String>> = serde_json::from_value(v["cover"].clone()).map_err(|e| Error::Malformed(format!("cover: {e}")))?;
        let y = Arc::new(SiteObject::from_names(&sp, &comps).map_err(|e| Error::Malformed(e.to_string()))?);
        let setting = gerbe_setting(f, y)?;
        let lv = setting.levels();
        let p = cochain_from_value(&lv.mid, 1, &v["pair_torsor"])?;
        let mu = cochain_from_value(&lv.top, 0, &v["multiplication"])?;
        let p = Torsor::new(lv.mid.clone(), p).map_err(|e| Error::Malformed(e.to_string()))?;
        Ok(GerbeData::new(setting, p, mu)?.with_coefficients(coeff))
    }
}

fn fixture_name(sp: &FinSpace) -> String {
    for name in ["PT", "SIERP", "C4", "S2F", "S3F", "RP2F"] {
        if let Ok(f) = fixtures::space(name) {
            if f.names() == sp.names() && (0..sp.len()).all(|x| f.down(x) == sp.down(x)) {
                return name.to_string();
            }
        }
    }
    "custom".to_string()
}

/// Connecting map `H^n(X, Z/m) → H^{n+1}(X, Z)`, through Godement resolutions.
pub struct Bockstein {
    m: i64,
    n: usize,
    source: SheafCohomology,
    target: SheafCohomology,
    /// `Γ(X, I^n Z) → Γ(X, I^n Z/m)`.
    reduce_n: GroupHom,
}

impl Bockstein {
    pub fn new(space: &Arc<FinSpace>, m: i64, n: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::Malformed(format!("modulus must be at least 2, got {m}")));
        }
        let fm = fixtures::constant_sheaf(space, &format!("Z/{m}"))?;
        let fz = fixtures::constant_sheaf(space, "Z")?;
        let source = SheafCohomology::new(fm.clone(), (n + 1).max(2))?;
        let target = SheafCohomology::new(fz.clone(), (n + 2).max(2))?;
        let red = SheafHom::scalar(fz, fm, 1)?;
        let map = GodementMap::new(target.resolution(), source.resolution(), &red);
        let cols = map.section_columns(n, target.layout(n), source.layout(n));
        let reduce_n = GroupHom::new(target.complex().term(n).ambient().clone(), source.complex().term(n).ambient().clone(), cols);
        Ok(Bockstein { m, n, source, target, reduce_n })
    }

    pub fn source_group(&self) -> Result<&Subquotient> {
        self.source.group(self.n)
    }

    pub fn target_group(&self) -> Result<&Subquotient> {
        self.target.group(self.n + 1)
    }

    /// `[c] ↦ [(1/m) d(lift c)]`.
    pub fn apply(&self, coords: &[Int]) -> Result<Vec<Int>> {
        let z = self.source_group()?.representative_of(coords);
        let y = self.reduce_n.solve(&z).ok_or_else(|| Error::Failed("lift failed".into()))?;
        let dy = self.target.complex().diff(self.n).apply(&y);
        let m = Int::from(self.m);
        if !dy.iter().all(|(_, c)| m.divides(c)) {
            return Err(Error::Failed("boundary of the lift is not divisible by m".into()));
        }
        let w = SparseVec::from_entries(dy.iter().map(|(i, c)| (i, c.div_exact(&m))));
        self.target_group()?.class_of(&w)
    }

    /// Reduction `H^n(X, Z) → H^n(X, Z/m)`.
    pub fn reduce(&self, coords: &[Int]) -> Result<Vec<Int>> {
        let y = self.target.group(self.n)?.representative_of(coords);
        self.source_group()?.class_of(&self.reduce_n.apply(&y))
    }
}

/// Class coordinates of `bockstein(c)` for `c ∈ H^n(X, Z/m)`.
pub fn bockstein(space: &Arc<FinSpace>, m: i64, n: usize, coords: &[Int]) -> Result<Vec<Int>> {
    Bockstein::new(space, m, n)?.apply(coords)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semisimp::Refinement;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setting(space: &str, coeff: &str) -> Arc<RtcSetting> {
        let sp = fixtures::space(space).unwrap();
        let f = fixtures::constant_sheaf(&sp, coeff).unwrap();
        gerbe_setting(f, fixtures::small_cover(space, &sp).unwrap()).unwrap()
    }

    fn is_zero_class(s: &RtcSetting, c: &[Int]) -> bool {
        s.same_class(c, &vec![Int::ZERO; c.len()]).unwrap()
    }

    #[test]
    fn trivial_gerbe() {
        let s = setting("C4", "Z");
        let g = GerbeData::trivial(s.clone()).unwrap();
        assert!(g.is_associative().unwrap());
        assert!(is_zero_class(&s, &g.class().unwrap()));
    }

    #[test]
    fn routes_agree_and_translation_by_non_cocycle_breaks_associativity() {
        let s = setting("C4", "Z/2");
        let g = GerbeData::trivial(s.clone()).unwrap();
        let lv = s.levels();
        for t in lv.top.d0().kernel() {
            let h = g.translated(t).unwrap();
            let a = h.associativity().unwrap();
            assert!(lv.over.equal(0, &a.residue, &a.four_scalar));
            let dt = s.q_alt_data(t).unwrap();
            assert!(lv.over.equal(0, &a.residue, &dt));
            assert_eq!(a.associative, lv.over.is_zero(0, &dt));
        }
    }

    #[test]
    fn generator_gerbe_on_s2f() {
        let s = setting("S2F", "Z");
        let r = Rtc::generators(&s).unwrap().remove(0);
        let g = GerbeData::from_rtc(&r).unwrap();
        assert!(g.is_associative().unwrap());
        let c = g.class().unwrap();
        assert!(!is_zero_class(&s, &c));
        assert!(s.same_class(&c, &r.comparison().unwrap()).unwrap());
    }

    #[test]
    fn gerbe_from_torsor_on_y_is_trivial() {
        let s = setting("S2F", "Z");
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let q = Torsor::random(s.levels().low.clone(), &mut rng);
            let g = GerbeData::from_torsor_on_y(s.clone(), &q).unwrap();
            assert!(g.is_associative().unwrap());
            assert!(is_zero_class(&s, &g.class().unwrap()));
        }
    }

    #[test]
    fn class_survives_refinement() {
        let s = setting("S2F", "Z");
        let sp = s.sheaf().space().clone();
        let r = GerbeData::from_rtc(&Rtc::generators(&s).unwrap().remove(0)).unwrap().to_rtc2().unwrap();
        let src = Arc::new(Hypercovering::cech(sp.clone(), fixtures::minimal_cover(&sp), 3).unwrap());
        let theta = Refinement::to_cech(src, s.cover().clone(), vec![0, 1, 0, 1, 0, 1]).unwrap();
        let back = r.pullback(&theta).unwrap();
        assert!(back.validate().unwrap());
        assert!(s.same_class(&back.comparison().unwrap(), &r.comparison().unwrap()).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let s = setting("S2F", "Z");
        let g = GerbeData::from_rtc(&Rtc::generators(&s).unwrap().remove(0)).unwrap().with_coefficients("Z");
        let back = GerbeData::from_json(&g.to_json().unwrap()).unwrap();
        assert!(back.is_associative().unwrap());
        assert!(back.setting().same_class(&back.class().unwrap(), &g.class().unwrap()).unwrap());
    }

    #[test]
    fn bockstein_on_rp2() {
        let sp = fixtures::space("RP2F").unwrap();
        let b = Bockstein::new(&sp, 2, 1).unwrap();
        assert_eq!(b.source_group().unwrap().describe(), "Z/2");
        assert_eq!(b.target_group().unwrap().describe(), "Z/2");
        let img = b.apply(&[Int::ONE]).unwrap();
        assert!(!img.iter().all(|c| c.rem_euclid(&Int::from(2)).is_zero()));
        assert!(b.apply(&[Int::ZERO]).unwrap().iter().all(Int::is_zero));
    }

    #[test]
    fn bockstein_kills_reductions() {
        for (space, n) in [("RP2F", 1), ("S2F", 2), ("C4", 1)] {
            let sp = fixtures::space(space).unwrap();
            let b = Bockstein::new(&sp, 2, n).unwrap();
            let hz = b.target.group(n).unwrap();
            for k in 0..hz.orders().len() {
                let mut c = vec![Int::ZERO; hz.orders().len()];
                c[k] = Int::ONE;
                let red = b.reduce(&c).unwrap();
                let img = b.apply(&red).unwrap();
                let g = b.target_group().unwrap().cyclic_group();
                assert!(g.is_zero_element(&SparseVec::from_dense(&img)), "{space}");
            }
        }
    }
}
