use criterion::{black_box, criterion_group, criterion_main, Criterion};

use hypertorsor_bench::{constant, prepared, trivial_gerbe};
use hypertorsor_core::cochain::cohomology;
use hypertorsor_core::gerbe::Bockstein;
use hypertorsor_core::rtc::RtcSetting;
use hypertorsor_core::{checks, fixtures};

fn sheaf_cohomology(c: &mut Criterion) {
    let mut g = c.benchmark_group("cohomology");
    for (space, coeff, n) in [("C4", "Z", 1), ("S2F", "Z", 2), ("RP2F", "Z", 2), ("S3F", "Z/2", 3)] {
        let f = constant(space, coeff);
        g.bench_function(format!("{space}/{coeff}/H{n}"), |b| b.iter(|| cohomology(black_box(&f), n).unwrap()));
    }
    g.finish();
}

fn three_term(c: &mut Criterion) {
    let mut g = c.benchmark_group("three_term");
    g.sample_size(10);
    for (space, coeff, cover, n) in [("S2F", "Z", "cech2", 2), ("S3F", "Z/2", "type1", 3)] {
        g.bench_function(format!("{space}/{cover}/n{n}"), |b| {
            b.iter(|| {
                let s = RtcSetting::fixture(space, coeff, cover, n).unwrap();
                s.three_term().unwrap().comparison_map().unwrap().is_isomorphism()
            })
        });
    }
    g.finish();
}

fn rtc(c: &mut Criterion) {
    let (_, gen) = prepared("S2F", "Z", "cech2", 2);
    c.bench_function("rtc/S2F/validate", |b| b.iter(|| gen.validate().unwrap()));
    c.bench_function("rtc/S2F/comparison", |b| b.iter(|| gen.comparison().unwrap()));
    let w = gen.wedge(&gen).unwrap();
    c.bench_function("rtc/S2F/witness", |b| b.iter(|| w.witness(&gen).unwrap()));
}

fn gerbe(c: &mut Criterion) {
    let t = trivial_gerbe("C4", "Z/2");
    c.bench_function("gerbe/C4/associativity", |b| b.iter(|| t.associativity().unwrap()));
    let sp = fixtures::space("RP2F").unwrap();
    c.bench_function("gerbe/RP2F/bockstein", |b| {
        b.iter(|| Bockstein::new(&sp, 2, 1).unwrap().apply(&[hypertorsor_core::Int::ONE]).unwrap())
    });
}

fn suite(c: &mut Criterion) {
    let mut g = c.benchmark_group("acceptance");
    g.sample_size(10);
    for id in [5, 11] {
        g.bench_function(format!("criterion{id}"), |b| b.iter(|| checks::run(id, 1)));
    }
    g.finish();
}

criterion_group!(engine, sheaf_cohomology, three_term, rtc, gerbe, suite);
criterion_main!(engine);
