//! Shared fixtures for the criterion benchmarks.

use std::sync::Arc;

use hypertorsor_core::fixtures;
use hypertorsor_core::gerbe::{gerbe_setting, GerbeData};
use hypertorsor_core::rtc::{Rtc, RtcSetting};
use hypertorsor_core::sheaf::Sheaf;

pub fn constant(space: &str, coeff: &str) -> Arc<Sheaf> {
    let sp = fixtures::space(space).expect("fixture space");
    fixtures::constant_sheaf(&sp, coeff).expect("coefficients")
}

/// A setting with its three-term complex already built, plus its first generator.
pub fn prepared(space: &str, coeff: &str, cover: &str, n: usize) -> (Arc<RtcSetting>, Rtc) {
    let s = RtcSetting::fixture(space, coeff, cover, n).expect("fixture setting");
    let g = Rtc::generators(&s).expect("generators").into_iter().next().expect("nonzero H^n");
    (s, g)
}

/// The trivial gerbe on the two-member cover of `space`.
pub fn trivial_gerbe(space: &str, coeff: &str) -> GerbeData {
    let f = constant(space, coeff);
    let y = fixtures::small_cover(space, f.space()).expect("cover");
    GerbeData::trivial(gerbe_setting(f, y).expect("gerbe setting")).expect("trivial gerbe")
}
