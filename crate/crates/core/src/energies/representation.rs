use super::discrete::{Cutoff, CutoffTerm, DiscreteDeformation, InteractionSet, NodeRoots};
use crate::density::w;
use crate::error::{Error, Result};
use crate::geometry::{Domain, LatticeFrame, Simplex, Triangulation};
use crate::lattice::{enumerate_shell, lattice_set};
use crate::linalg::{factorial, pairwise_sum, IntMatrix};
use crate::metric::MetricField;
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Which end of an edge supplies `A` in the `λ` field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Orientation {
    /// The vertex preceding direction `j` along the edge chain.
    #[default]
    Forward,
    /// The vertex following it.
    Reversed,
}

/// Prefactor of the sheared `λ` field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LambdaScaling {
    /// `B diag{|A B e_j|⁻¹}`: each column of `∇u λ` is the stretch of one lattice edge.
    #[default]
    EdgeExact,
    /// `|ξ₀| B diag{|A B e_j|⁻¹}`.
    Literal,
}

impl LambdaScaling {
    fn factor(self, radius: f64) -> f64 {
        match self {
            LambdaScaling::EdgeExact => 1.0,
            LambdaScaling::Literal => radius,
        }
    }
}

/// Continuous, simplexwise affine interpolant of nodal values on a lattice triangulation.
#[derive(Clone, Debug)]
pub struct PiecewiseAffineField {
    pub frame: LatticeFrame,
    pub simplices: Vec<Simplex>,
    /// `∇u` on each simplex.
    pub gradients: Vec<DMatrix<f64>>,
    /// `u(x) = ∇u x + offset` on each simplex.
    pub offsets: Vec<DVector<f64>>,
    lookup: HashMap<(Vec<i64>, Vec<usize>), usize>,
}

impl PiecewiseAffineField {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// The simplex containing `x`, by the ordering of its fractional cell coordinates.
    pub fn locate(&self, x: &[f64]) -> Option<usize> {
        let y = self.frame.cell_coordinates(x);
        let cell: Vec<i64> = y.iter().map(|v| v.floor() as i64).collect();
        let frac: Vec<f64> = y.iter().zip(&cell).map(|(v, c)| v - *c as f64).collect();
        let mut perm: Vec<usize> = (0..y.len()).collect();
        perm.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]));
        self.lookup.get(&(cell, perm)).copied()
    }

    pub fn eval(&self, x: &[f64]) -> Option<Vec<f64>> {
        let k = self.locate(x)?;
        let y = &self.gradients[k] * DVector::from_column_slice(x) + &self.offsets[k];
        Some(y.iter().copied().collect())
    }

    /// `eval`, or outside the triangulated cells the affine map of the simplex with the nearest centroid.
    pub fn eval_extended(&self, x: &[f64]) -> Option<Vec<f64>> {
        if let Some(y) = self.eval(x) {
            return Some(y);
        }
        let k = self
            .simplices
            .iter()
            .map(|s| {
                let v = s.vertices(&self.frame);
                let m = v.len() as f64;
                (0..x.len()).map(|i| (v.iter().map(|p| p[i]).sum::<f64>() / m - x[i]).powi(2)).sum::<f64>()
            })
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))?
            .0;
        let y = &self.gradients[k] * DVector::from_column_slice(x) + &self.offsets[k];
        Some(y.iter().copied().collect())
    }
}

/// The P1 extension of `u` on every simplex of `t`.
pub fn extend_p1(u: &DiscreteDeformation, t: &Triangulation) -> Result<PiecewiseAffineField> {
    let frame = &t.frame;
    if (frame.eps - u.eps()).abs() > 1e-15 * u.eps() {
        return Err(Error::InvalidParameter(format!(
            "triangulation scale {} differs from deformation scale {}",
            frame.eps,
            u.eps()
        )));
    }
    let n = t.dim();
    let mut simplices = Vec::with_capacity(t.simplex_count());
    let mut gradients = Vec::with_capacity(t.simplex_count());
    let mut offsets = Vec::with_capacity(t.simplex_count());
    let mut lookup = HashMap::with_capacity(t.simplex_count());
    for s in t.simplices() {
        let nodes = s.vertex_nodes(frame);
        let x0 = frame.position(&nodes[0]);
        let u0 = DVector::from_column_slice(u.value(&nodes[0])?);
        let mut edges = DMatrix::zeros(n, n);
        let mut diffs = DMatrix::zeros(n, n);
        for (j, z) in nodes.iter().enumerate().skip(1) {
            let x = frame.position(z);
            let v = u.value(z)?;
            for i in 0..n {
                edges[(i, j - 1)] = x[i] - x0[i];
                diffs[(i, j - 1)] = v[i] - u0[i];
            }
        }
        // ∇u · edges = diffs
        let grad = edges
            .transpose()
            .lu()
            .solve(&diffs.transpose())
            .ok_or(Error::SingularBasis)?
            .transpose();
        let offset = &u0 - &grad * DVector::from_column_slice(&x0);
        lookup.insert((s.cell.clone(), s.perm.clone()), simplices.len());
        simplices.push(s);
        gradients.push(grad);
        offsets.push(offset);
    }
    Ok(PiecewiseAffineField { frame: frame.clone(), simplices, gradients, offsets, lookup })
}

/// The piecewise-constant field `λ` on each simplex of `t`, in `t.simplices()` order.
pub fn lambda_field<M: MetricField + ?Sized>(
    metric: &M,
    t: &Triangulation,
    radius: f64,
    orientation: Orientation,
    scaling: LambdaScaling,
) -> Result<Vec<DMatrix<f64>>> {
    let roots = NodeRoots::new(metric, t.frame.eps);
    lambda_field_cached(&roots, t, radius, orientation, scaling)
}

fn lambda_field_cached<M: MetricField + ?Sized>(
    roots: &NodeRoots<'_, M>,
    t: &Triangulation,
    radius: f64,
    orientation: Orientation,
    scaling: LambdaScaling,
) -> Result<Vec<DMatrix<f64>>> {
    let n = t.dim();
    let basis = &t.frame.basis;
    let factor = scaling.factor(radius);
    let b = basis.to_f64();
    let mut out = Vec::with_capacity(t.simplex_count());
    for s in t.simplices() {
        let nodes = s.vertex_nodes(&t.frame);
        let mut lam = DMatrix::zeros(n, n);
        for j in 0..n {
            let step = s.step_of(j);
            let anchor = match orientation {
                Orientation::Forward => &nodes[step],
                Orientation::Reversed => &nodes[step + 1],
            };
            let a = roots.at(anchor)?;
            let len = (&a * b.column(j)).norm();
            lam.set_column(j, &(b.column(j) * (factor / len)));
        }
        out.push(lam);
    }
    Ok(out)
}

/// `ε · max(√n |ξ₀|, diam(B C_n))` over the families of the shell.
///
/// Every cell meeting `Ω` shrunk by this margin lies inside `Ω`, so all its vertices carry values.
pub fn covering_margin(radius_sq: u64, n: usize, eps: f64) -> Result<f64> {
    let radius = (radius_sq as f64).sqrt();
    let mut unit = (n as f64).sqrt() * radius;
    for zeta in enumerate_shell(radius_sq, n)?.members {
        for fam in lattice_set(&zeta)? {
            let frame = LatticeFrame::new(1.0, fam.basis.clone(), vec![0; n])?;
            unit = unit.max(frame.cell_diameter());
        }
    }
    Ok(eps * unit)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RepresentationOptions {
    pub scaling: LambdaScaling,
    /// Overrides the covering margin of every shell.
    pub margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShellReport {
    pub radius_sq: u64,
    pub weight: f64,
    pub discrete: f64,
    pub represented: f64,
    pub bound: f64,
    pub margin: f64,
    pub families: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnergyReport {
    pub eps: f64,
    pub discrete: f64,
    pub represented: f64,
    /// `discrete − represented`.
    pub gap: f64,
    /// Interactions whose whole segment lies within `bound_margin` of `∂Ω`.
    pub bound: f64,
    pub bound_margin: f64,
    pub shells: Vec<ShellReport>,
}

/// `I_{ε,|ξ₀|}(u)` without the weight `ψ(|ξ₀|)`, and the number of families used.
fn shell_integral<M: MetricField + ?Sized>(
    u: &DiscreteDeformation,
    roots: &NodeRoots<'_, M>,
    radius_sq: u64,
    domain: &Domain,
    margin: f64,
    scaling: LambdaScaling,
) -> Result<(f64, usize)> {
    let n = u.dim();
    let radius = (radius_sq as f64).sqrt();
    let nf = factorial(n) as f64;
    let mut terms = Vec::new();
    let mut families = 0;
    for zeta in enumerate_shell(radius_sq, n)?.members {
        let k = zeta.iter().filter(|&&v| v != 0).count() as f64;
        for fam in lattice_set(&zeta)? {
            families += 1;
            let weight = 1.0 / (nf * n as f64 * k) * nf / fam.det().abs() as f64;
            for frame in fam.frames(u.eps())? {
                let t = Triangulation::covering(domain, frame, margin)?;
                let field = extend_p1(u, &t)?;
                let lam = lambda_field_cached(roots, &t, radius, Orientation::Forward, scaling)?;
                for (k, s) in field.simplices.iter().enumerate() {
                    terms.push(weight * s.volume(&t.frame) * w(&(&field.gradients[k] * &lam[k])));
                }
            }
        }
    }
    Ok((pairwise_sum(&terms), families))
}

/// `E_ε`, its integral representation `I_ε`, the gap and the boundary bound.
pub fn integral_representation<M: MetricField + ?Sized>(
    u: &DiscreteDeformation,
    metric: &M,
    cutoff: &Cutoff,
    domain: &Domain,
    options: &RepresentationOptions,
) -> Result<EnergyReport> {
    let n = u.dim();
    let eps = u.eps();
    let set = InteractionSet::build(u, metric, cutoff, domain)?;
    let roots = NodeRoots::new(metric, eps);
    let margins: Vec<f64> = cutoff
        .terms()
        .iter()
        .map(|t| options.margin.map_or_else(|| covering_margin(t.radius_sq, n, eps), Ok))
        .collect::<Result<_>>()?;
    let bound_margin = margins.iter().copied().fold(0.0, f64::max);
    let discrete_by_shell = set.per_shell(u.values());
    let bound_by_shell = boundary_bound(u, &set, domain, bound_margin);
    let mut shells = Vec::with_capacity(cutoff.terms().len());
    for (s, &CutoffTerm { radius_sq, weight }) in cutoff.terms().iter().enumerate() {
        let (integral, families) = shell_integral(u, &roots, radius_sq, domain, margins[s], options.scaling)?;
        shells.push(ShellReport {
            radius_sq,
            weight,
            discrete: discrete_by_shell[s],
            represented: weight * integral,
            bound: bound_by_shell[s],
            margin: margins[s],
            families,
        });
    }
    let discrete = set.energy(u.values());
    let represented = pairwise_sum(&shells.iter().map(|s| s.represented).collect::<Vec<_>>());
    let bound = pairwise_sum(&bound_by_shell);
    Ok(EnergyReport { eps, discrete, represented, gap: discrete - represented, bound, bound_margin, shells })
}

fn boundary_bound(u: &DiscreteDeformation, set: &InteractionSet, domain: &Domain, margin: f64) -> Vec<f64> {
    (0..set.shells.len())
        .map(|s| {
            let terms: Vec<f64> = set
                .interactions
                .iter()
                .enumerate()
                .filter(|(_, it)| it.shell == s)
                .filter(|(_, it)| domain.max_depth_on_segment(&u.position(it.from), &u.position(it.to)) <= margin)
                .map(|(k, _)| set.term(k, u.values()))
                .collect();
            pairwise_sum(&terms)
        })
        .collect()
}

/// Nearest-neighbour representation on the canonical lattice with forward and reversed fields:
/// `∫_U W(∇u λ) + W(∇u λ̄)` over cells meeting `Ω_{ε√n}`.
pub fn nearest_representation<M: MetricField + ?Sized>(
    u: &DiscreteDeformation,
    metric: &M,
    domain: &Domain,
) -> Result<f64> {
    let n = u.dim();
    let eps = u.eps();
    let frame = LatticeFrame::canonical(eps, n)?;
    let t = Triangulation::covering(domain, frame, eps * (n as f64).sqrt())?;
    let field = extend_p1(u, &t)?;
    let roots = NodeRoots::new(metric, eps);
    let fwd = lambda_field_cached(&roots, &t, 1.0, Orientation::Forward, LambdaScaling::EdgeExact)?;
    let rev = lambda_field_cached(&roots, &t, 1.0, Orientation::Reversed, LambdaScaling::EdgeExact)?;
    let terms: Vec<f64> = field
        .simplices
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let g = &field.gradients[k];
            s.volume(&t.frame) * (w(&(g * &fwd[k])) + w(&(g * &rev[k])))
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Reading of the two-lattice next-to-nearest representation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NextNearestVariant {
    /// `½∫_{U⁰} W(∇u⁰λ⁰) + W(∇u⁰λ̄⁰) + ½∫_{U¹} W(∇u¹λ¹) + W(∇u¹λ̄¹)`.
    #[default]
    Symmetric,
    /// The first integral takes `W(∇u¹λ̄¹)` in place of `W(∇u⁰λ̄⁰)`, evaluated on `U⁰`
    /// by midpoint sampling of a uniform subdivision of each simplex.
    AsPrinted { subdivisions: usize },
}

/// Next-to-nearest representation in 2D on `εB₀Z²` and `ε(e₁ + B₀Z²)`, `B₀ = [[1, −1], [1, 1]]`,
/// over cells meeting `Ω_{2ε}`.
pub fn next_nearest_representation<M: MetricField + ?Sized>(
    u: &DiscreteDeformation,
    metric: &M,
    domain: &Domain,
    variant: NextNearestVariant,
    scaling: LambdaScaling,
) -> Result<f64> {
    if u.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: u.dim() });
    }
    let eps = u.eps();
    let b0 = IntMatrix::from_rows(&[vec![1, -1], vec![1, 1]]);
    let roots = NodeRoots::new(metric, eps);
    let radius = 2f64.sqrt();
    let mut parts = Vec::new();
    for shift in [vec![0, 0], vec![1, 0]] {
        let frame = LatticeFrame::new(eps, b0.clone(), shift)?;
        let t = Triangulation::covering(domain, frame, 2.0 * eps)?;
        let field = extend_p1(u, &t)?;
        let fwd = lambda_field_cached(&roots, &t, radius, Orientation::Forward, scaling)?;
        let rev = lambda_field_cached(&roots, &t, radius, Orientation::Reversed, scaling)?;
        parts.push((t, field, fwd, rev));
    }
    let mut terms = Vec::new();
    for (idx, (t, field, fwd, rev)) in parts.iter().enumerate() {
        for (k, s) in field.simplices.iter().enumerate() {
            let g = &field.gradients[k];
            let vol = s.volume(&t.frame);
            terms.push(0.5 * vol * w(&(g * &fwd[k])));
            match variant {
                NextNearestVariant::AsPrinted { subdivisions } if idx == 0 => {
                    let (_, other, _, other_rev) = &parts[1];
                    let pts = subdivision_centroids(&s.vertices(&t.frame), subdivisions.max(1));
                    let sub = vol / pts.len() as f64;
                    for p in pts {
                        if let Some(j) = other.locate(&p) {
                            terms.push(0.5 * sub * w(&(&other.gradients[j] * &other_rev[j])));
                        }
                    }
                }
                _ => terms.push(0.5 * vol * w(&(g * &rev[k]))),
            }
        }
    }
    Ok(pairwise_sum(&terms))
}

/// Centroids of the `k²` congruent triangles of a uniform subdivision.
fn subdivision_centroids(v: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let point = |a: f64, b: f64| -> [f64; 2] {
        let (s, t) = (a / k as f64, b / k as f64);
        [
            v[0][0] + s * (v[1][0] - v[0][0]) + t * (v[2][0] - v[0][0]),
            v[0][1] + s * (v[1][1] - v[0][1]) + t * (v[2][1] - v[0][1]),
        ]
    };
    let mut out = Vec::with_capacity(k * k);
    for a in 0..k {
        for b in 0..k - a {
            let (a, b) = (a as f64, b as f64);
            let tri = [point(a, b), point(a + 1.0, b), point(a, b + 1.0)];
            out.push(vec![(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0]);
            if a + b + 2.0 <= k as f64 {
                let tri = [point(a + 1.0, b), point(a + 1.0, b + 1.0), point(a, b + 1.0)];
                out.push(vec![(tri[0][0] + tri[1][0] + tri[2][0]) / 3.0, (tri[0][1] + tri[1][1] + tri[2][1]) / 3.0]);
            }
        }
    }
    out
}

/// Helper for the shell margins shared by callers that triangulate every shell.
pub fn cutoff_margin(cutoff: &Cutoff, n: usize, eps: f64) -> Result<f64> {
    cutoff.terms().iter().try_fold(0.0, |m: f64, t| Ok(m.max(covering_margin(t.radius_sq, n, eps)?)))
}
