use super::discrete::Cutoff;
use crate::deformation::{Deformation, Precomposed};
use crate::density::{qw, w};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::lattice::{enumerate_shell, lattice_set};
use crate::linalg::{pairwise_sum, IntMatrix};
use crate::metric::{shell_lambda_from_sqrt, MetricField, PulledBackMetric};
use crate::quadrature::{Mesh, QuadPoint, Quadrature};
use nalgebra::DMatrix;
use std::f64::consts::FRAC_1_SQRT_2;

/// Anything that can report `∇u` at a quadrature point.
pub trait GradientSource {
    fn gradient_at(&self, q: &QuadPoint) -> DMatrix<f64>;
}

impl<D: Deformation + ?Sized> GradientSource for D {
    fn gradient_at(&self, q: &QuadPoint) -> DMatrix<f64> {
        self.gradient(&q.x)
    }
}

/// A P1 field on a background mesh, nodal values flattened `n` per node.
#[derive(Clone, Copy, Debug)]
pub struct MeshField<'a> {
    pub mesh: &'a Mesh,
    pub values: &'a [f64],
}

impl GradientSource for MeshField<'_> {
    fn gradient_at(&self, q: &QuadPoint) -> DMatrix<f64> {
        self.mesh.p1_gradient(q.element, self.values)
    }
}

fn nonempty(quad: &Quadrature) -> Result<()> {
    if quad.is_empty() || !(quad.total_weight() > 0.0) {
        return Err(Error::EmptyQuadrature);
    }
    Ok(())
}

/// The lower and upper bounds `I_Q ≤ 𝓕 ≤ I` on the limit energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitBounds {
    pub relaxed: f64,
    pub upper: f64,
}

/// `Σ ψ (1 + |V_B|)/(nk|det B|) ∫ QW(∇u λ^B)` and the same with `W`, over all shells and families.
pub fn limit_functional_bounds<U: GradientSource + ?Sized, M: MetricField + ?Sized>(
    u: &U,
    metric: &M,
    cutoff: &Cutoff,
    quad: &Quadrature,
) -> Result<LimitBounds> {
    nonempty(quad)?;
    let n = metric.dim();
    let roots: Vec<DMatrix<f64>> = quad.points.iter().map(|q| metric.sqrt_at(&q.x)).collect::<Result<_>>()?;
    let grads: Vec<DMatrix<f64>> = quad.points.iter().map(|q| u.gradient_at(q)).collect();
    let mut relaxed = Vec::new();
    let mut upper = Vec::new();
    for term in cutoff.terms() {
        let radius = term.radius();
        for zeta in enumerate_shell(term.radius_sq, n)?.members {
            let k = zeta.iter().filter(|&&v| v != 0).count() as f64;
            for fam in lattice_set(&zeta)? {
                let weight = term.weight * (1 + fam.translations.len()) as f64
                    / (n as f64 * k * fam.det().abs() as f64);
                for (i, q) in quad.points.iter().enumerate() {
                    let m = &grads[i] * shell_lambda_from_sqrt(&roots[i], &fam.basis, radius);
                    relaxed.push(weight * q.weight * qw(&m));
                    upper.push(weight * q.weight * w(&m));
                }
            }
        }
    }
    Ok(LimitBounds { relaxed: pairwise_sum(&relaxed), upper: pairwise_sum(&upper) })
}

/// The interaction ranges with a closed-form limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LimitCase {
    Nearest2D,
    NearestND,
    NextNearest2D,
}

impl std::str::FromStr for LimitCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest-2d" => Ok(LimitCase::Nearest2D),
            "nearest-nd" => Ok(LimitCase::NearestND),
            "next-nearest-2d" => Ok(LimitCase::NextNearest2D),
            other => Err(Error::InvalidParameter(format!("unknown limit case {other:?}"))),
        }
    }
}

impl LimitCase {
    pub fn cutoff(self) -> Cutoff {
        match self {
            LimitCase::Nearest2D | LimitCase::NearestND => Cutoff::nearest(),
            LimitCase::NextNearest2D => Cutoff::next_nearest(),
        }
    }
}

/// `B₀ = [[1, −1], [1, 1]]`.
pub fn next_nearest_basis() -> IntMatrix {
    IntMatrix::from_rows(&[vec![1, -1], vec![1, 1]])
}

/// `λ(x)` of the case: `diag{|A e_j|⁻¹}` or `√2 B₀ diag{|A B₀ e_j|⁻¹}`.
pub fn case_lambda(a: &DMatrix<f64>, case: LimitCase) -> DMatrix<f64> {
    match case {
        LimitCase::Nearest2D | LimitCase::NearestND => {
            shell_lambda_from_sqrt(a, &IntMatrix::identity(a.nrows()), 1.0)
        }
        LimitCase::NextNearest2D => shell_lambda_from_sqrt(a, &next_nearest_basis(), 2f64.sqrt()),
    }
}

/// `∫ QW(∇u λ)` with the case's `λ`; the limit energy is twice this.
pub fn relaxed_functional<U: GradientSource + ?Sized, M: MetricField + ?Sized>(
    u: &U,
    metric: &M,
    quad: &Quadrature,
    case: LimitCase,
) -> Result<f64> {
    nonempty(quad)?;
    let n = metric.dim();
    if matches!(case, LimitCase::Nearest2D | LimitCase::NextNearest2D) && n != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let terms: Vec<f64> = quad
        .points
        .iter()
        .map(|q| Ok(q.weight * qw(&(u.gradient_at(q) * case_lambda(&metric.sqrt_at(&q.x)?, case)))))
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

/// The closed-form Γ-limit `2 ∫ QW(∇u λ)`.
pub fn gamma_limit<U: GradientSource + ?Sized, M: MetricField + ?Sized>(
    u: &U,
    metric: &M,
    quad: &Quadrature,
    case: LimitCase,
) -> Result<f64> {
    Ok(2.0 * relaxed_functional(u, metric, quad, case)?)
}

/// `dist²(F, SO(2))` via `|F|² − 2√((F₁₁ + F₂₂)² + (F₂₁ − F₁₂)²) + 2`.
pub fn dist_sq_so2(f: &DMatrix<f64>) -> f64 {
    let trace = f[(0, 0)] + f[(1, 1)];
    let skew = f[(1, 0)] - f[(0, 1)];
    (f.norm_squared() - 2.0 * (trace * trace + skew * skew).sqrt() + 2.0).max(0.0)
}

/// `dist²(F, SO(n))` from the singular values, flipping the smallest when `det F < 0`.
pub fn dist_sq_rotations(f: &DMatrix<f64>) -> f64 {
    let svd = f.clone().svd(false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    if f.determinant() < 0.0 {
        if let Some(last) = s.last_mut() {
            *last = -*last;
        }
    }
    s.iter().map(|v| (v - 1.0).powi(2)).sum()
}

/// `∫ W̄(∇u A⁻¹)`, rejecting densities that do not vanish at the identity.
pub fn continuum_energy<U, M, F>(u: &U, metric: &M, quad: &Quadrature, density: F) -> Result<f64>
where
    U: GradientSource + ?Sized,
    M: MetricField + ?Sized,
    F: Fn(&DMatrix<f64>) -> f64,
{
    nonempty(quad)?;
    let n = metric.dim();
    let at_identity = density(&DMatrix::identity(n, n));
    if !(at_identity.abs() <= 1e-12) {
        return Err(Error::InvalidParameter(format!("stored energy is {at_identity} at the identity")));
    }
    let terms: Vec<f64> = quad
        .points
        .iter()
        .map(|q| {
            let a = metric.sqrt_at(&q.x)?;
            let inv = a.try_inverse().ok_or(Error::SingularBasis)?;
            Ok(q.weight * density(&(u.gradient_at(q) * inv)))
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&terms))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationCheck {
    /// `∫ QW(∇u λ_√2)` for `G`.
    pub lhs: f64,
    /// `∫ QW(∇v λ)` for `v = √2 u∘R` and the pulled-back metric `Rᵀ G(R·) R`.
    pub rhs: f64,
    pub difference: f64,
}

/// Both sides of the 45° rotation identity on a regular polygon inscribed in the unit disk.
pub fn rotation_identity_check<D, M>(u: &D, metric: &M, sides: usize, resolution: usize) -> Result<RotationCheck>
where
    D: Deformation + Clone,
    M: MetricField + Clone,
{
    let domain = Domain::unit_disk(sides)?;
    let quad = Mesh::for_domain(&domain, resolution)?.quadrature();
    let rotation = DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 1.0, 1.0]) * FRAC_1_SQRT_2;
    let lhs = relaxed_functional(u, metric, &quad, LimitCase::NextNearest2D)?;
    let pulled = PulledBackMetric { base: metric.clone(), map: rotation.clone() };
    let composed = Precomposed { inner: u.clone(), map: rotation, scale: 2f64.sqrt() };
    let rhs = relaxed_functional(&composed, &pulled, &quad, LimitCase::Nearest2D)?;
    Ok(RotationCheck { lhs, rhs, difference: lhs - rhs })
}
