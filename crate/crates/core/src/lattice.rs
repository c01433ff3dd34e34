//! Interaction shells, signed orbits, the basis-generation algorithm and translation sets.
//!
//! For a squared interaction length `r²`, the shell lists the multisets `ζ` of integers with
//! `|ζ|² = r²`. Each `ζ` spawns its signed orbit `N_ζ` (all distinct signed permutations)
//! and, for every `ξ ∈ N_ζ` and every nonzero coordinate of `ξ`, one lattice basis
//! `B = [ξ₁, …, ξ_n]` with `ξ₁ = ξ` whose columns all have length `r`.

use crate::error::{Error, Result};
use crate::geometry::{LatticeFrame, Region};
use crate::linalg::{factorial, IntMatrix};
use itertools::Itertools;
use std::collections::BTreeSet;

/// An unordered integer tuple, stored canonically: nonnegative, sorted descending.
pub type Multiset = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Shell {
    pub radius_sq: u64,
    pub dim: usize,
    pub members: Vec<Multiset>,
}

impl Shell {
    pub fn radius(&self) -> f64 {
        (self.radius_sq as f64).sqrt()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every interaction vector of squared length `radius_sq`.
    pub fn vectors(&self) -> Vec<Vec<i64>> {
        self.members.iter().flat_map(|z| signed_orbit(z).vectors).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedOrbit {
    pub base: Multiset,
    pub vectors: Vec<Vec<i64>>,
}

impl SignedOrbit {
    /// Number of nonzero entries, `k`.
    pub fn nonzero_count(&self) -> usize {
        nonzero_count(&self.base)
    }

    /// Closed-form orbit size `2^k n! / (k₁! ⋯ k_m!)` over the repetition counts of distinct values.
    pub fn expected_len(&self) -> u64 {
        orbit_size(&self.base)
    }
}

/// A lattice basis generated from `(ξ, s̄)` together with its translation set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeFamily {
    pub basis: IntMatrix,
    pub source: Vec<i64>,
    /// Zero-based position among the nonzero coordinates of `source`.
    pub pivot: usize,
    /// `V_B` at unit scale.
    pub translations: Vec<Vec<i64>>,
}

impl LatticeFamily {
    pub fn det(&self) -> i64 {
        self.basis.det()
    }

    /// Frames `ε(τ + BZⁿ)` for `τ ∈ {0} ∪ V_B` reduced to distinct cosets of `BZⁿ`.
    pub fn frames(&self, eps: f64) -> Result<Vec<LatticeFrame>> {
        coset_translations(&self.basis)
            .into_iter()
            .map(|t| LatticeFrame::new(eps, self.basis.clone(), t))
            .collect()
    }
}

fn nonzero_count(z: &[i64]) -> usize {
    z.iter().filter(|&&v| v != 0).count()
}

fn orbit_size(z: &[i64]) -> u64 {
    let k = nonzero_count(z) as u32;
    let mut denom = 1u64;
    for (_, group) in &z.iter().map(|v| v.abs()).sorted().chunk_by(|v| *v) {
        denom *= factorial(group.count());
    }
    2u64.pow(k) * factorial(z.len()) / denom
}

/// All multisets of `n` integers with squared norm `radius_sq`.
///
/// Searches `|ζⁱ| ≤ ⌊√radius_sq⌋` exhaustively; an empty shell is returned as such.
pub fn enumerate_shell(radius_sq: u64, n: usize) -> Result<Shell> {
    if radius_sq == 0 {
        return Err(Error::InvalidParameter("shell radius must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let bound = (radius_sq as f64).sqrt().floor() as i64;
    let mut members = Vec::new();
    let mut current = Vec::with_capacity(n);
    fill_shell(radius_sq as i64, n, bound, &mut current, &mut members);
    Ok(Shell { radius_sq, dim: n, members })
}

fn fill_shell(remaining: i64, slots: usize, max: i64, cur: &mut Vec<i64>, out: &mut Vec<Multiset>) {
    if slots == 0 {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for v in (0..=max).rev() {
        let sq = v * v;
        if sq > remaining {
            continue;
        }
        // the remaining slots hold values ≤ v
        if (slots as i64 - 1) * sq < remaining - sq {
            break;
        }
        cur.push(v);
        fill_shell(remaining - sq, slots - 1, v, cur, out);
        cur.pop();
    }
}

/// Distinct signed permutations of `ζ`, in lexicographic order.
pub fn signed_orbit(zeta: &[i64]) -> SignedOrbit {
    let n = zeta.len();
    let mut set = BTreeSet::new();
    for perm in (0..n).permutations(n) {
        for mask in 0..(1u32 << n) {
            let v: Vec<i64> = perm
                .iter()
                .enumerate()
                .map(|(i, &p)| if mask & (1 << i) != 0 { -zeta[p] } else { zeta[p] })
                .collect();
            set.insert(v);
        }
    }
    let base = canonical(zeta);
    SignedOrbit { base, vectors: set.into_iter().collect() }
}

fn canonical(z: &[i64]) -> Multiset {
    let mut c: Vec<i64> = z.iter().map(|v| v.abs()).collect();
    c.sort_unstable_by(|a, b| b.cmp(a));
    c
}

/// Columns `ξ₁ … ξ_n` generated from `ξ` and the `pivot`-th nonzero coordinate.
///
/// The first column is `ξ`. Columns `2..=k` flip the sign of one nonzero coordinate other
/// than the pivot, cycling through the nonzero coordinates starting after the pivot.
/// Columns `k+1..=n` move the pivot value into one zero slot each, zeroing the pivot.
pub fn basis_from_vector(xi: &[i64], pivot: usize) -> Result<IntMatrix> {
    if xi.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    let nonzero: Vec<usize> = (0..xi.len()).filter(|&i| xi[i] != 0).collect();
    let zeros: Vec<usize> = (0..xi.len()).filter(|&i| xi[i] == 0).collect();
    let k = nonzero.len();
    if pivot >= k {
        return Err(Error::ZeroPivot { vector: xi.to_vec(), index: pivot });
    }
    let pivot_coord = nonzero[pivot];
    let mut columns = vec![xi.to_vec()];
    for step in 1..k {
        let flip = nonzero[(pivot + step) % k];
        let mut c = xi.to_vec();
        c[flip] = -c[flip];
        columns.push(c);
    }
    for &slot in &zeros {
        let mut c = xi.to_vec();
        c[pivot_coord] = 0;
        c[slot] = xi[pivot_coord];
        columns.push(c);
    }
    let b = IntMatrix::from_columns(&columns);
    assert!(b.det() != 0, "generated basis is singular for {xi:?}, pivot {pivot}");
    Ok(b)
}

/// Pivot-indexed variant taking the coordinate index itself; errors if that coordinate is zero.
pub fn basis_from_coordinate(xi: &[i64], coordinate: usize) -> Result<IntMatrix> {
    if xi.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    if coordinate >= xi.len() || xi[coordinate] == 0 {
        return Err(Error::ZeroPivot { vector: xi.to_vec(), index: coordinate });
    }
    let pivot = (0..coordinate).filter(|&i| xi[i] != 0).count();
    basis_from_vector(xi, pivot)
}

/// Every family of `K_ζ`: one per `(ξ ∈ N_ζ, nonzero coordinate)`, no merging.
pub fn lattice_set(zeta: &[i64]) -> Result<Vec<LatticeFamily>> {
    let orbit = signed_orbit(zeta);
    let k = orbit.nonzero_count();
    let mut out = Vec::with_capacity(k * orbit.vectors.len());
    for xi in &orbit.vectors {
        for pivot in 0..k {
            let basis = basis_from_vector(xi, pivot)?;
            let translations = translations(&basis)?;
            out.push(LatticeFamily { basis, source: xi.clone(), pivot, translations });
        }
    }
    Ok(out)
}

/// `V_B` at unit scale: integer points of the open cell `B(0,1)ⁿ` and of its upper faces
/// `B{x ∈ [0,1]ⁿ : x_i = 1}`, excluding images of cube vertices.
///
/// Containment is decided exactly through `x = adj(B) z / det B`.
pub fn translations(basis: &IntMatrix) -> Result<Vec<Vec<i64>>> {
    let n = basis.dim();
    let det = basis.det();
    if det == 0 {
        return Err(Error::SingularBasis);
    }
    let adj = basis.adjugate();
    let (lo, hi) = cell_bounds(basis);
    let mut out = Vec::new();
    for z in integer_box(&lo, &hi) {
        // numerators of x = adj z / det, normalized to a positive denominator
        let num: Vec<i64> = adj.mul_vec(&z).iter().map(|v| v * det.signum()).collect();
        let d = det.abs();
        if num.iter().any(|&v| v < 0 || v > d) {
            continue;
        }
        let interior = num.iter().all(|&v| v > 0 && v < d);
        let upper_face = num.iter().any(|&v| v == d);
        let vertex = num.iter().all(|&v| v == 0 || v == d);
        if (interior || upper_face) && !vertex {
            out.push(z);
        }
    }
    debug_assert!(out.iter().all(|z| z.len() == n));
    Ok(out)
}

/// `{0} ∪ V_B` reduced to one representative per coset of `BZⁿ` (first occurrence kept).
///
/// In two dimensions this is `{0} ∪ V_B` itself; in higher dimensions opposite upper faces
/// can contribute equivalent points, which would double-count interactions.
pub fn coset_translations(basis: &IntMatrix) -> Vec<Vec<i64>> {
    let n = basis.dim();
    let det = basis.det();
    let adj = basis.adjugate();
    let key = |z: &[i64]| -> Vec<i64> { adj.mul_vec(z).iter().map(|v| v.rem_euclid(det.abs())).collect() };
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let zero = vec![0; n];
    for z in std::iter::once(zero).chain(translations(basis).unwrap_or_default()) {
        if seen.insert(key(&z)) {
            out.push(z);
        }
    }
    out
}

fn cell_bounds(basis: &IntMatrix) -> (Vec<i64>, Vec<i64>) {
    let n = basis.dim();
    let mut lo = vec![0i64; n];
    let mut hi = vec![0i64; n];
    for mask in 0..(1u32 << n) {
        let y: Vec<i64> = (0..n).map(|i| ((mask >> i) & 1) as i64).collect();
        let z = basis.mul_vec(&y);
        for i in 0..n {
            lo[i] = lo[i].min(z[i]);
            hi[i] = hi[i].max(z[i]);
        }
    }
    (lo, hi)
}

/// Integer points of the box `[lo, hi]`, lexicographic.
pub(crate) fn integer_box(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let ranges: Vec<Vec<i64>> = lo.iter().zip(hi).map(|(&l, &h)| (l..=h).collect()).collect();
    ranges.into_iter().multi_cartesian_product().collect()
}

/// Nodes `α ∈ εZⁿ` (unit-scale integers) with the closed segment `[α, α + εξ]` inside `region`.
///
/// For convex regions both endpoints suffice.
pub fn interacting_nodes<R: Region + ?Sized>(xi: &[i64], eps: f64, region: &R) -> Result<Vec<Vec<i64>>> {
    if xi.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    if !(eps > 0.0) {
        return Err(Error::NonPositiveScale(eps));
    }
    if xi.len() != region.dim() {
        return Err(Error::DimensionMismatch { expected: region.dim(), got: xi.len() });
    }
    let (lo, hi) = region.bounding_box();
    let lo_i: Vec<i64> = lo.iter().map(|v| (v / eps).floor() as i64).collect();
    let hi_i: Vec<i64> = hi.iter().map(|v| (v / eps).ceil() as i64).collect();
    Ok(integer_box(&lo_i, &hi_i)
        .into_iter()
        .filter(|z| {
            let a: Vec<f64> = z.iter().map(|&v| v as f64 * eps).collect();
            let b: Vec<f64> = z.iter().zip(xi).map(|(&v, &d)| (v + d) as f64 * eps).collect();
            region.contains(&a) && region.contains(&b)
        })
        .collect())
}
