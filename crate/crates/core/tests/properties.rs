use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hypertorsor_core::gerbe::{gerbe_setting, GerbeData};
use hypertorsor_core::rtc::{CoboundaryDatum, Rtc, RtcSetting};
use hypertorsor_core::torsor::Torsor;
use hypertorsor_core::{fixtures, Int};

fn sphere() -> &'static Arc<RtcSetting> {
    static S: OnceLock<Arc<RtcSetting>> = OnceLock::new();
    S.get_or_init(|| RtcSetting::fixture("S2F", "Z", "cech2", 2).unwrap())
}

fn circle_type_one() -> &'static Arc<RtcSetting> {
    static S: OnceLock<Arc<RtcSetting>> = OnceLock::new();
    S.get_or_init(|| RtcSetting::fixture("C4", "Z/2", "type1", 3).unwrap())
}

fn sum(a: &[Int], b: &[Int]) -> Vec<Int> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn comparison_is_additive(seed in any::<u64>()) {
        let s = sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Rtc::random(s, &mut rng).unwrap();
        let b = Rtc::random(s, &mut rng).unwrap();
        let ab = a.wedge(&b).unwrap();
        prop_assert!(ab.validate().unwrap());
        let want = sum(&a.comparison().unwrap(), &b.comparison().unwrap());
        prop_assert!(s.same_class(&ab.comparison().unwrap(), &want).unwrap());
    }

    #[test]
    fn inverse_cancels_with_a_witness(seed in any::<u64>()) {
        let s = sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Rtc::random(s, &mut rng).unwrap();
        let z = a.wedge(&a.inverse()).unwrap();
        let neutral = Rtc::neutral(s.clone());
        let w = z.witness(&neutral).unwrap();
        prop_assert!(w.is_some());
        prop_assert!(z.check_witness(&neutral, &w.unwrap()).unwrap());
    }

    #[test]
    fn coboundaries_are_neutral(seed in any::<u64>()) {
        for s in [sphere(), circle_type_one()] {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = CoboundaryDatum::random(s.clone(), &mut rng).unwrap();
            let c = Rtc::coboundary(&d).unwrap();
            prop_assert!(c.validate().unwrap());
            prop_assert!(c.equivalent(&Rtc::neutral(s.clone())).unwrap());
        }
    }

    #[test]
    fn json_round_trip_preserves_the_class(seed in any::<u64>()) {
        let s = sphere();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Rtc::random(s, &mut rng).unwrap();
        let b = Rtc::from_json(&a.to_json().unwrap()).unwrap();
        prop_assert!(b.validate().unwrap());
        prop_assert!(a.equivalent(&b).unwrap());
    }

    #[test]
    fn torsor_classes_add(seed in any::<u64>()) {
        let s = RtcSetting::fixture("C4", "Z", "const", 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = Torsor::random(s.levels().mid.clone(), &mut rng);
        let b = Torsor::random(s.levels().mid.clone(), &mut rng);
        let ab = a.wedge(&b).unwrap();
        let want = sum(&a.h1_class().unwrap(), &b.h1_class().unwrap());
        prop_assert_eq!(ab.h1_class().unwrap(), want);
        let neg: Vec<Int> = a.h1_class().unwrap().iter().map(|x| -x.clone()).collect();
        prop_assert_eq!(a.inverse().h1_class().unwrap(), neg);
    }

    #[test]
    fn gerbes_from_torsors_on_the_cover_are_trivial(seed in any::<u64>()) {
        let sp = fixtures::space("S2F").unwrap();
        let f = fixtures::constant_sheaf(&sp, "Z").unwrap();
        let s = gerbe_setting(f, fixtures::small_cover("S2F", &sp).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = Torsor::random(s.levels().low.clone(), &mut rng);
        let g = GerbeData::from_torsor_on_y(s.clone(), &q).unwrap();
        prop_assert!(g.is_associative().unwrap());
        prop_assert!(s.same_class(&g.class().unwrap(), &[Int::ZERO]).unwrap());
    }
}
