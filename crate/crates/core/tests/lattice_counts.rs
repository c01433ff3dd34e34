use prestrain_lattice::lattice::{coset_translations, enumerate_shell, lattice_set, signed_orbit, translations};
use proptest::prelude::*;
use std::collections::{BTreeSet, HashMap};

fn factorial(k: usize) -> u64 {
    (1..=k as u64).product()
}

/// `2^k n! / Π m!` over the multiplicities `m` of the distinct absolute values.
fn orbit_formula(zeta: &[i64]) -> u64 {
    let k = zeta.iter().filter(|&&v| v != 0).count() as u32;
    let mut mult: HashMap<i64, usize> = HashMap::new();
    for v in zeta {
        *mult.entry(v.abs()).or_default() += 1;
    }
    2u64.pow(k) * factorial(zeta.len()) / mult.values().map(|&m| factorial(m)).product::<u64>()
}

/// Every integer vector whose sorted absolute values equal `zeta`.
fn brute_orbit(zeta: &[i64]) -> BTreeSet<Vec<i64>> {
    let n = zeta.len();
    let r = zeta.iter().copied().max().unwrap_or(0);
    let mut out = BTreeSet::new();
    let mut cur = vec![-r; n];
    loop {
        let mut key: Vec<i64> = cur.iter().map(|v| v.abs()).collect();
        key.sort_unstable_by(|a, b| b.cmp(a));
        if key == zeta {
            out.insert(cur.clone());
        }
        let mut i = 0;
        while i < n && cur[i] == r {
            cur[i] = -r;
            i += 1;
        }
        if i == n {
            break;
        }
        cur[i] += 1;
    }
    out
}

#[test]
fn shells_are_exactly_the_integer_points_of_the_sphere() {
    for (n, max) in [(2usize, 25u64), (3, 14)] {
        for r2 in 1..=max {
            let shell = enumerate_shell(r2, n).unwrap();
            let from_shell: BTreeSet<Vec<i64>> = shell.vectors().into_iter().collect();
            let r = (r2 as f64).sqrt() as i64;
            let mut brute = BTreeSet::new();
            let side: Vec<i64> = (-r..=r).collect();
            let mut stack = vec![vec![]];
            while let Some(v) = stack.pop() {
                if v.len() == n {
                    if v.iter().map(|x: &i64| (x * x) as u64).sum::<u64>() == r2 {
                        brute.insert(v);
                    }
                    continue;
                }
                for &s in &side {
                    let mut w = v.clone();
                    w.push(s);
                    stack.push(w);
                }
            }
            assert_eq!(from_shell, brute, "n = {n}, r² = {r2}");
        }
    }
}

#[test]
fn orbit_and_family_counts() {
    for (n, max) in [(2usize, 25u64), (3, 14)] {
        for r2 in 1..=max {
            for zeta in enumerate_shell(r2, n).unwrap().members {
                let orbit = signed_orbit(&zeta);
                let k = orbit.nonzero_count();
                assert_eq!(orbit.vectors.len() as u64, orbit_formula(&zeta), "{zeta:?}");
                assert_eq!(orbit.vectors.iter().cloned().collect::<BTreeSet<_>>(), brute_orbit(&zeta));
                let families = lattice_set(&zeta).unwrap();
                assert_eq!(families.len(), k * orbit.vectors.len(), "{zeta:?}");
                let mut tally: HashMap<Vec<i64>, usize> = HashMap::new();
                for fam in &families {
                    assert_ne!(fam.basis.det(), 0);
                    for c in fam.basis.columns() {
                        assert_eq!(c.iter().map(|v| v * v).sum::<i64>() as u64, r2);
                        *tally.entry(c).or_default() += 1;
                    }
                }
                assert_eq!(tally.len(), orbit.vectors.len());
                assert!(tally.values().all(|&c| c == n * k), "{zeta:?}: {tally:?}");
            }
        }
    }
}

#[test]
fn nearest_families_are_signed_cyclic_shifts() {
    let fams = lattice_set(&[1, 0, 0]).unwrap();
    assert_eq!(fams.len(), 6);
    for f in &fams {
        assert_eq!(f.det().abs(), 1);
        assert!(f.translations.is_empty());
    }
}

/// Integer points `Bt` with `t` in the open cube or on a face `tᵢ = 1`, excluding the images of
/// cube vertices, by exhaustive search.
fn brute_translations(basis: &prestrain_lattice::linalg::IntMatrix) -> BTreeSet<Vec<i64>> {
    let n = basis.dim();
    let b = basis.to_f64();
    let inv = b.clone().try_inverse().unwrap();
    let bound: i64 = (0..n).map(|i| (0..n).map(|j| basis.get(i, j).abs()).sum::<i64>()).max().unwrap();
    let mut out = BTreeSet::new();
    let side: Vec<i64> = (-bound..=bound).collect();
    let mut stack = vec![vec![]];
    while let Some(v) = stack.pop() {
        if v.len() == n {
            let z = nalgebra::DVector::from_iterator(n, v.iter().map(|&x| x as f64));
            let t = &inv * z;
            let near = |s: f64, c: f64| (s - c).abs() < 1e-9;
            let inside = t.iter().all(|&s| s > -1e-9 && s < 1.0 + 1e-9);
            let interior = t.iter().all(|&s| s > 1e-9 && s < 1.0 - 1e-9);
            let upper = t.iter().any(|&s| near(s, 1.0));
            let vertex = t.iter().all(|&s| near(s, 0.0) || near(s, 1.0));
            if inside && (interior || upper) && !vertex {
                out.insert(v);
            }
            continue;
        }
        for &s in &side {
            let mut w = v.clone();
            w.push(s);
            stack.push(w);
        }
    }
    out
}

#[test]
fn translation_sets_match_exhaustive_search() {
    for (n, max) in [(2usize, 10u64), (3, 6)] {
        for r2 in 1..=max {
            for zeta in enumerate_shell(r2, n).unwrap().members {
                for fam in lattice_set(&zeta).unwrap() {
                    let got: BTreeSet<Vec<i64>> = translations(&fam.basis).unwrap().into_iter().collect();
                    assert_eq!(got, brute_translations(&fam.basis), "{:?}", fam.basis);
                    let cosets = coset_translations(&fam.basis);
                    assert_eq!(cosets.len() as i64, fam.det().abs(), "{:?}", fam.basis);
                    if n == 2 {
                        assert_eq!(got.len() as i64, fam.det().abs() - 1);
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn orbit_vectors_keep_their_length(a in 0i64..6, b in 0i64..6, c in 0i64..6) {
        prop_assume!(a + b + c > 0);
        let mut z = vec![a, b, c];
        z.sort_unstable_by(|x, y| y.cmp(x));
        let orbit = signed_orbit(&z);
        let r2: i64 = z.iter().map(|v| v * v).sum();
        for v in &orbit.vectors {
            prop_assert_eq!(v.iter().map(|x| x * x).sum::<i64>(), r2);
        }
        prop_assert_eq!(orbit.vectors.len() as u64, orbit_formula(&z));
    }
}
