//! One line per acceptance criterion. Run with `--nocapture` to see them.

mod common;

use hypertorsor_core::checks::{self, EXPECTED_COHOMOLOGY};
use hypertorsor_core::cochain::{homotopy_operator, Coeff};
use hypertorsor_core::fixtures;

const SEED: u64 = 20;

/// Criterion 1 is also compared with the order-complex oracle.
fn oracle_agrees() -> bool {
    EXPECTED_COHOMOLOGY.iter().all(|&(space, coeff, n, _)| {
        let sp = fixtures::space(space).unwrap();
        let f = fixtures::constant_sheaf(&sp, coeff).unwrap();
        let (rank, torsion) = hypertorsor_core::cochain::cohomology(&f, n).unwrap();
        let m = fixtures::parse_coefficients(coeff).unwrap() as i128;
        let torsion: Vec<i128> = torsion.iter().map(|d| d.to_i64().unwrap() as i128).collect();
        common::cohomology(space, m, n) == (rank, torsion)
    })
}

/// The identity with `+` in place of the stated `−`, on the criterion's fixtures.
fn corrected_homotopy_identity() -> (usize, bool) {
    let mut count = 0;
    let mut ok = true;
    for space in ["C4", "S2F"] {
        let hs = checks::fixture_homotopies(space, 5).unwrap();
        for coeff in ["Z", "Z/2"] {
            let f = fixtures::constant_sheaf(&fixtures::space(space).unwrap(), coeff).unwrap();
            for h in &hs {
                let c = homotopy_operator(h, Coeff::Sheaf(&f), 4).unwrap().check();
                ok &= c.plus_form.iter().all(|&b| b) && c.plus_form.len() == 5;
                count += 1;
            }
        }
    }
    (count, ok)
}

#[test]
fn acceptance() {
    let mut unexpected = Vec::new();
    for id in 1..=13 {
        let c = checks::run(id, SEED);
        match id {
            1 => {
                let agree = oracle_agrees();
                println!("{}; oracle agrees: {agree}", c.line());
                if !(c.passed && agree) {
                    unexpected.push(id);
                }
            }
            7 => {
                let (count, corrected) = corrected_homotopy_identity();
                println!("{}", c.line());
                println!("             corrected identity θ* − ζ* = s∂ + ∂s on {count} homotopies: {}", if corrected { "PASS" } else { "FAIL" });
                // the stated sign is expected to fail outside degree 0
                if c.passed || !corrected || count < 20 {
                    unexpected.push(id);
                }
            }
            _ => {
                println!("{}", c.line());
                if !c.passed {
                    unexpected.push(id);
                }
            }
        }
    }
    assert!(unexpected.is_empty(), "unexpected results for criteria {unexpected:?}");
}
