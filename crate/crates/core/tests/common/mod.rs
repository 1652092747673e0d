//! Brute-force oracles, kept independent of the library's algebra.
#![allow(dead_code)]

/// Strict order of a fixture, from its description rather than the library.
pub fn poset(name: &str) -> (Vec<String>, Vec<Vec<bool>>) {
    let tower = |levels: usize| {
        let names: Vec<String> = (0..2 * levels).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
        let n = names.len();
        let lt = (0..n).map(|x| (0..n).map(|y| y / 2 > x / 2).collect()).collect();
        (names, lt)
    };
    match name {
        "PT" => (vec!["p".into()], vec![vec![false]]),
        "SIERP" => (vec!["o".into(), "c".into()], vec![vec![false, true], vec![false, false]]),
        "C4" => tower(2),
        "S2F" => tower(3),
        "S3F" => tower(4),
        "RP2F" => {
            // faces named by their vertex digits; order is inclusion
            let tris = hypertorsor_core::fixtures::RP2_TRIANGLES;
            let mut faces: Vec<Vec<u8>> = (1..=6).map(|v| vec![v]).collect();
            let mut edges = Vec::new();
            for t in tris {
                for e in [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]] {
                    let mut e = e.to_vec();
                    e.sort();
                    if !edges.contains(&e) {
                        edges.push(e);
                    }
                }
            }
            edges.sort();
            faces.extend(edges);
            faces.extend(tris.iter().map(|t| {
                let mut t = t.to_vec();
                t.sort();
                t
            }));
            let prefix = |f: &Vec<u8>| match f.len() {
                1 => "v",
                2 => "e",
                _ => "t",
            };
            let names = faces.iter().map(|f| format!("{}{}", prefix(f), f.iter().map(|d| d.to_string()).collect::<String>())).collect();
            let n = faces.len();
            let lt = (0..n).map(|x| (0..n).map(|y| x != y && faces[x].iter().all(|v| faces[y].contains(v))).collect()).collect();
            (names, lt)
        }
        _ => panic!("no oracle poset {name}"),
    }
}

/// Chains `x_0 < … < x_k`, grouped by `k`.
pub fn chains(lt: &[Vec<bool>]) -> Vec<Vec<Vec<usize>>> {
    let n = lt.len();
    let mut out: Vec<Vec<Vec<usize>>> = vec![(0..n).map(|x| vec![x]).collect()];
    loop {
        let next: Vec<Vec<usize>> = out
            .last()
            .unwrap()
            .iter()
            .flat_map(|c| {
                let top = *c.last().unwrap();
                (0..n).filter(move |&y| lt[top][y]).map(move |y| {
                    let mut d = c.clone();
                    d.push(y);
                    d
                })
            })
            .collect();
        if next.is_empty() {
            return out;
        }
        out.push(next);
    }
}

/// Nonzero diagonal of the Smith form.
pub fn smith(mut a: Vec<Vec<i128>>) -> Vec<i128> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // smallest nonzero entry in the remaining block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if a[i][j] != 0 && best.map_or(true, |(bi, bj)| a[i][j].abs() < a[bi][bj].abs()) {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        let mut clean = true;
        let p = a[t][t];
        for i in t + 1..rows {
            let q = a[i][t] / p;
            if q != 0 {
                for j in t..cols {
                    a[i][j] -= q * a[t][j];
                }
            }
            clean &= a[i][t] == 0;
        }
        for j in t + 1..cols {
            let q = a[t][j] / p;
            if q != 0 {
                for row in a.iter_mut().skip(t) {
                    row[j] -= q * row[t];
                }
            }
            clean &= a[t][j] == 0;
        }
        if !clean {
            continue;
        }
        // divisibility of the rest by the pivot
        let mut bad = None;
        'scan: for i in t + 1..rows {
            for j in t + 1..cols {
                if a[i][j] % p != 0 {
                    bad = Some(i);
                    break 'scan;
                }
            }
        }
        if let Some(i) = bad {
            for j in t..cols {
                a[t][j] += a[i][j];
            }
            continue;
        }
        diag.push(p.abs());
        t += 1;
    }
    diag
}

fn boundary(lower: &[Vec<usize>], upper: &[Vec<usize>]) -> Vec<Vec<i128>> {
    let mut m = vec![vec![0i128; upper.len()]; lower.len()];
    for (j, c) in upper.iter().enumerate() {
        for i in 0..c.len() {
            let mut f = c.clone();
            f.remove(i);
            let r = lower.iter().position(|x| *x == f).unwrap();
            m[r][j] += if i % 2 == 0 { 1 } else { -1 };
        }
    }
    m
}

/// Integral homology `(rank, torsion)` of the order complex, degrees `0..=top`.
pub fn homology(lt: &[Vec<bool>], top: usize) -> Vec<(usize, Vec<i128>)> {
    let ch = chains(lt);
    let size = |k: usize| ch.get(k).map_or(0, Vec::len);
    let diag = |k: usize| -> Vec<i128> {
        if k == 0 || k >= ch.len() {
            Vec::new()
        } else {
            smith(boundary(&ch[k - 1], &ch[k]))
        }
    };
    (0..=top)
        .map(|k| {
            let out = diag(k);
            let inc = diag(k + 1);
            let rank = size(k) - out.len() - inc.len();
            (rank, inc.into_iter().filter(|&d| d > 1).collect())
        })
        .collect()
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Invariant factors of a direct sum of cyclic groups.
pub fn invariant_factors(orders: &[i128]) -> Vec<i128> {
    let n = orders.len();
    let m = (0..n).map(|i| (0..n).map(|j| if i == j { orders[i] } else { 0 }).collect()).collect();
    let mut d: Vec<i128> = smith(m).into_iter().filter(|&d| d > 1).collect();
    d.sort();
    d
}

/// `H^n(X, Z)` (`m = 0`) or `H^n(X, Z/m)` by universal coefficients.
pub fn cohomology(name: &str, m: i128, n: usize) -> (usize, Vec<i128>) {
    let (_, lt) = poset(name);
    let h = homology(&lt, n);
    let (rank_n, _) = &h[n];
    let prev: &[i128] = if n == 0 { &[] } else { &h[n - 1].1 };
    if m == 0 {
        (*rank_n, invariant_factors(prev))
    } else {
        let mut parts = vec![m; *rank_n];
        parts.extend(h[n].1.iter().map(|&d| gcd(d, m)));
        parts.extend(prev.iter().map(|&d| gcd(d, m)));
        (0, invariant_factors(&parts))
    }
}

/// Connected components of a set of points under comparability.
pub fn components(lt: &[Vec<bool>], set: &[usize]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; set.len()];
    let mut out = Vec::new();
    for s in 0..set.len() {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let a = set[comp[k]];
            for t in 0..set.len() {
                let b = set[t];
                if !seen[t] && (lt[a][b] || lt[b][a]) {
                    seen[t] = true;
                    comp.push(t);
                }
            }
            k += 1;
        }
        out.push(comp.into_iter().map(|i| set[i]).collect());
    }
    out
}

/// Rank over F_2 of a 0/1 matrix.
pub fn rank_f2(mut rows: Vec<Vec<u8>>) -> usize {
    let cols = rows.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| rows[i][c] & 1 == 1) else { continue };
        rows.swap(r, p);
        for i in 0..rows.len() {
            if i != r && rows[i][c] & 1 == 1 {
                let pivot = rows[r].clone();
                for (x, y) in rows[i].iter_mut().zip(pivot) {
                    *x ^= y & 1;
                }
            }
        }
        r += 1;
    }
    r
}
