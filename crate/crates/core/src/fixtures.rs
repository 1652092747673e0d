//! Named finite spaces, coefficient sheaves and hypercoverings.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::finsite::{FinSpace, PointSet, SiteMorphism, SiteObject};
use crate::semisimp::{Hypercovering, SemiSimplicialCover};
use crate::sheaf::Sheaf;

pub const SPACE_NAMES: [&str; 6] = ["PT", "SIERP", "C4", "S2F", "S3F", "RP2F"];

/// Triangles of the six-vertex real projective plane.
pub const RP2_TRIANGLES: [[u8; 3]; 10] =
    [[1, 2, 3], [1, 3, 4], [1, 4, 5], [1, 5, 6], [1, 2, 6], [2, 3, 5], [3, 4, 6], [2, 4, 5], [3, 5, 6], [2, 4, 6]];

/// Minimal finite model of the sphere with `levels` pairs of points, each
/// pair below both points of the next.
fn suspension_tower(levels: usize) -> FinSpace {
    let names: Vec<String> = (0..2 * levels).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    let mut pairs = Vec::new();
    for l in 0..levels.saturating_sub(1) {
        for lo in [2 * l, 2 * l + 1] {
            for hi in [2 * l + 2, 2 * l + 3] {
                pairs.push((lo, hi));
            }
        }
    }
    FinSpace::new(names, &pairs).expect("tower is a valid poset")
}

fn rp2() -> FinSpace {
    let mut names: Vec<String> = (1..=6).map(|v| format!("v{v}")).collect();
    let mut edges: Vec<(u8, u8)> = Vec::new();
    for t in RP2_TRIANGLES {
        for (a, b) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
            let e = (a.min(b), a.max(b));
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
    }
    edges.sort();
    let mut pairs = Vec::new();
    for &(a, b) in &edges {
        let i = names.len();
        names.push(format!("e{a}{b}"));
        pairs.push((a as usize - 1, i));
        pairs.push((b as usize - 1, i));
    }
    for t in RP2_TRIANGLES {
        let mut t = t;
        t.sort();
        let i = names.len();
        names.push(format!("t{}{}{}", t[0], t[1], t[2]));
        for (a, b) in [(t[0], t[1]), (t[0], t[2]), (t[1], t[2])] {
            let e = edges.iter().position(|&x| x == (a, b)).unwrap();
            pairs.push((6 + e, i));
        }
    }
    FinSpace::new(names, &pairs).expect("face poset is a valid poset")
}

/// Looks up a fixture space by name.
pub fn space(name: &str) -> Result<Arc<FinSpace>> {
    let sp = match name {
        "PT" => FinSpace::from_names(&["p"], &[])?,
        "SIERP" => FinSpace::from_names(&["o", "c"], &[("o", "c")])?,
        "C4" => suspension_tower(2),
        "S2F" => suspension_tower(3),
        "S3F" => suspension_tower(4),
        "RP2F" => rp2(),
        _ => return Err(Error::Malformed(format!("unknown fixture space {name:?}"))),
    };
    Ok(Arc::new(sp))
}

/// Parses `Z` or `Z/m` into the order of the cyclic group (0 for `Z`).
pub fn parse_coefficients(spec: &str) -> Result<i64> {
    let s = spec.trim();
    if s == "Z" {
        return Ok(0);
    }
    match s.strip_prefix("Z/").map(str::parse::<i64>) {
        Some(Ok(m)) if m >= 1 => Ok(m),
        _ => Err(Error::Malformed(format!("coefficient spec {spec:?} is not Z or Z/m"))),
    }
}

/// Constant sheaf described by `Z` or `Z/m`.
pub fn constant_sheaf(space: &Arc<FinSpace>, spec: &str) -> Result<Arc<Sheaf>> {
    Ok(Arc::new(Sheaf::constant_cyclic(space.clone(), parse_coefficients(spec)?)))
}

fn downs(space: &FinSpace, names: &[&str]) -> Result<Vec<PointSet>> {
    names
        .iter()
        .map(|n| space.index(n).map(|i| space.down(i).clone()).ok_or_else(|| Error::Malformed(format!("unknown point {n:?}"))))
        .collect()
}

/// Cover of `X` by the minimal opens of the given points.
pub fn cover_by_points(space: &Arc<FinSpace>, points: &[&str]) -> Result<Arc<SiteObject>> {
    let f = SiteMorphism::cover_by(space, downs(space, points)?)?;
    Ok(f.source().clone())
}

/// Cover by all minimal opens.
pub fn minimal_cover(space: &Arc<FinSpace>) -> Arc<SiteObject> {
    SiteMorphism::minimal_open_cover(space).source().clone()
}

/// Two-member cover used for the larger fixtures.
pub fn small_cover(name: &str, space: &Arc<FinSpace>) -> Result<Arc<SiteObject>> {
    match name {
        "PT" | "SIERP" => Ok(Arc::new(SiteObject::whole(space))),
        "C4" => cover_by_points(space, &["c", "d"]),
        "S2F" => cover_by_points(space, &["e", "f"]),
        "S3F" => cover_by_points(space, &["g", "h"]),
        "RP2F" => {
            let t = space.index("t123").unwrap();
            let mut rest = space.all();
            rest.remove(t);
            let f = SiteMorphism::cover_by(space, vec![rest, space.down(t).clone()])?;
            Ok(f.source().clone())
        }
        _ => Err(Error::Malformed(format!("unknown fixture space {name:?}"))),
    }
}

/// Type-1 hypercovering: level 0 is `u0`; each ordered pair of level-0
/// members with nonempty overlap contributes the overlap to level 1, except
/// that the pairs listed in `split` contribute the given opens instead.
pub fn type_one(
    space: &Arc<FinSpace>,
    u0: Arc<SiteObject>,
    split: &[((usize, usize), Vec<PointSet>)],
    depth: usize,
) -> Result<Hypercovering> {
    let mut comps = Vec::new();
    let mut f0 = Vec::new();
    let mut f1 = Vec::new();
    for a in 0..u0.len() {
        for b in 0..u0.len() {
            let meet = u0.component(a).intersect(u0.component(b));
            if meet.is_empty() {
                continue;
            }
            let parts = match split.iter().find(|(k, _)| *k == (a, b)) {
                Some((_, p)) => p.clone(),
                None => vec![meet.clone()],
            };
            let mut union = space.empty_set();
            for p in parts {
                if !p.is_subset(&meet) {
                    return Err(Error::Invalid("split member is not inside the overlap".into()));
                }
                union = union.union(&p);
                comps.push(p);
                f0.push(b);
                f1.push(a);
            }
            if union != meet {
                return Err(Error::Invalid("split members do not cover the overlap".into()));
            }
        }
    }
    let u1 = Arc::new(SiteObject::new(space, comps)?);
    let trunc = SemiSimplicialCover::new(space.clone(), vec![u0, u1], vec![Vec::new(), vec![f0, f1]])?;
    Hypercovering::coskeleton(&trunc, depth)
}

/// Hypercovering by fixture name: `const`, `cech` (minimal opens),
/// `cech2` (two-member cover) or `type1`.
pub fn hypercovering(space_name: &str, spec: &str, depth: usize) -> Result<Arc<Hypercovering>> {
    let sp = space(space_name)?;
    let h = match spec {
        "const" => Hypercovering::constant(sp, depth),
        "cech" => Hypercovering::cech(sp.clone(), minimal_cover(&sp), depth)?,
        "cech2" => Hypercovering::cech(sp.clone(), small_cover(space_name, &sp)?, depth)?,
        "type1" => type_one_fixture(space_name, &sp, depth)?,
        _ => return Err(Error::Malformed(format!("unknown hypercovering spec {spec:?}"))),
    };
    Ok(Arc::new(h))
}

/// The type-1 fixture: two-member cover, both off-diagonal overlaps split
/// by the minimal opens of the two points just below.
pub fn type_one_fixture(space_name: &str, sp: &Arc<FinSpace>, depth: usize) -> Result<Hypercovering> {
    let below: [&str; 2] = match space_name {
        "C4" => ["a", "b"],
        "S2F" => ["c", "d"],
        "S3F" => ["e", "f"],
        _ => return Err(Error::Malformed(format!("no type-1 fixture on {space_name}"))),
    };
    let u0 = small_cover(space_name, sp)?;
    let parts = downs(sp, &below)?;
    type_one(sp, u0, &[((0, 1), parts.clone()), ((1, 0), parts)], depth)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let n: Vec<usize> = SPACE_NAMES.iter().map(|s| space(s).unwrap().len()).collect();
        assert_eq!(n, vec![1, 2, 4, 6, 8, 31]);
    }

    #[test]
    fn c4_minimal_opens() {
        let sp = space("C4").unwrap();
        let c = sp.index("c").unwrap();
        assert_eq!(sp.set_names(sp.down(c)), vec!["a", "b", "c"]);
    }

    #[test]
    fn coefficients() {
        assert_eq!(parse_coefficients("Z").unwrap(), 0);
        assert_eq!(parse_coefficients("Z/2").unwrap(), 2);
        assert!(parse_coefficients("Q").is_err());
        assert!(parse_coefficients("Z/0").is_err());
    }

    #[test]
    fn type_one_fixtures_validate() {
        for name in ["C4", "S2F", "S3F"] {
            let h = hypercovering(name, "type1", 3).unwrap();
            assert_eq!(h.type_r(), 1);
            h.validate().unwrap();
            assert_eq!(h.level(1).len(), 6);
        }
    }

    #[test]
    fn rp2_cover() {
        let h = hypercovering("RP2F", "cech2", 2).unwrap();
        assert_eq!(h.level_sizes()[0], 2);
    }
}
