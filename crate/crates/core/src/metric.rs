//! Prestrain metrics `G`, their square roots `A = √G`, the diagonal fields `λ` and Gaussian curvature.

use crate::deformation::Deformation;
use crate::error::{Error, Result};
use crate::linalg::IntMatrix;
use nalgebra::{DMatrix, Matrix3};
use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

/// Value, first and second partial derivatives of a metric at one point.
#[derive(Clone, Debug)]
pub struct MetricJet {
    pub value: DMatrix<f64>,
    /// `first[i] = ∂_i G`.
    pub first: Vec<DMatrix<f64>>,
    /// `second[i][j] = ∂_i ∂_j G`.
    pub second: Vec<Vec<DMatrix<f64>>>,
}

/// A field of symmetric positive-definite matrices.
pub trait MetricField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>>;

    /// `A(x) = √G(x)`.
    fn sqrt_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        sqrt_spd(&self.eval(x)?)
    }

    /// Analytic derivatives, when the metric knows them.
    fn jet(&self, _x: &[f64]) -> Option<Result<MetricJet>> {
        None
    }

    fn name(&self) -> String;
}

impl<M: MetricField + ?Sized> MetricField for Arc<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (**self).eval(x)
    }
    fn sqrt_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        (**self).sqrt_at(x)
    }
    fn jet(&self, x: &[f64]) -> Option<Result<MetricJet>> {
        (**self).jet(x)
    }
    fn name(&self) -> String {
        (**self).name()
    }
}

fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

fn constant_jet(value: DMatrix<f64>) -> MetricJet {
    let n = value.nrows();
    let zero = DMatrix::zeros(n, n);
    MetricJet { first: vec![zero.clone(); n], second: vec![vec![zero; n]; n], value }
}

/// Rejects asymmetric or indefinite matrices.
pub fn validate_spd(g: &DMatrix<f64>) -> Result<()> {
    if !g.is_square() {
        return Err(Error::DimensionMismatch { expected: g.nrows(), got: g.ncols() });
    }
    let scale = g.norm().max(f64::MIN_POSITIVE);
    let asym = (g - g.transpose()).norm();
    if !(asym <= 1e-12 * scale) {
        return Err(Error::NotSymmetric(asym));
    }
    let min = g.clone().symmetric_eigenvalues().min();
    if !(min > 0.0) {
        return Err(Error::NotPositiveDefinite(min));
    }
    Ok(())
}

/// The unique symmetric positive-definite square root, by spectral decomposition.
pub fn sqrt_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    validate_spd(g)?;
    let sym = (g + g.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let q = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let a = q * d * q.transpose();
    Ok((&a + a.transpose()) * 0.5)
}

/// `diag{|A(x) e_j|⁻¹}`.
pub fn lambda_nearest<M: MetricField + ?Sized>(metric: &M, x: &[f64]) -> Result<DMatrix<f64>> {
    let a = metric.sqrt_at(x)?;
    let n = a.ncols();
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 / a.column(j).norm() } else { 0.0 }))
}

/// `|ξ₀| B diag{|A(x) B e_j|⁻¹}`.
pub fn lambda_shell<M: MetricField + ?Sized>(
    metric: &M,
    x: &[f64],
    basis: &IntMatrix,
    radius: f64,
) -> Result<DMatrix<f64>> {
    if basis.det() == 0 {
        return Err(Error::SingularBasis);
    }
    let a = metric.sqrt_at(x)?;
    Ok(shell_lambda_from_sqrt(&a, basis, radius))
}

pub(crate) fn shell_lambda_from_sqrt(a: &DMatrix<f64>, basis: &IntMatrix, radius: f64) -> DMatrix<f64> {
    let b = basis.to_f64();
    let ab = a * &b;
    let mut out = b * radius;
    for j in 0..out.ncols() {
        let s = 1.0 / ab.column(j).norm();
        out.column_mut(j).scale_mut(s);
    }
    out
}

/// Gaussian curvature by the Brioschi formula, derivatives from central differences of step `h`.
pub fn gaussian_curvature<M: MetricField + ?Sized>(metric: &M, x: &[f64], h: f64) -> Result<f64> {
    if metric.dim() != 2 {
        return Err(Error::CurvatureDimension(metric.dim()));
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("finite-difference step must be positive, got {h}")));
    }
    check_dim(2, x)?;
    Ok(brioschi(&finite_difference_jet(metric, x, h)?))
}

/// Gaussian curvature from the metric's analytic derivatives; `None` without them.
pub fn gaussian_curvature_analytic<M: MetricField + ?Sized>(metric: &M, x: &[f64]) -> Result<Option<f64>> {
    if metric.dim() != 2 {
        return Err(Error::CurvatureDimension(metric.dim()));
    }
    match metric.jet(x) {
        None => Ok(None),
        Some(jet) => Ok(Some(brioschi(&jet?))),
    }
}

/// Second-order central-difference jet; the mixed derivative uses the four diagonal neighbours.
pub fn finite_difference_jet<M: MetricField + ?Sized>(metric: &M, x: &[f64], h: f64) -> Result<MetricJet> {
    let n = metric.dim();
    let at = |offsets: &[(usize, f64)]| -> Result<DMatrix<f64>> {
        let mut p = x.to_vec();
        for &(i, s) in offsets {
            p[i] += s * h;
        }
        metric.eval(&p)
    };
    let value = metric.eval(x)?;
    let mut first = Vec::with_capacity(n);
    let mut second = vec![vec![DMatrix::zeros(n, n); n]; n];
    for i in 0..n {
        let plus = at(&[(i, 1.0)])?;
        let minus = at(&[(i, -1.0)])?;
        first.push((&plus - &minus) / (2.0 * h));
        second[i][i] = (plus - &value * 2.0 + minus) / (h * h);
    }
    for i in 0..n {
        for j in i + 1..n {
            let pp = at(&[(i, 1.0), (j, 1.0)])?;
            let pm = at(&[(i, 1.0), (j, -1.0)])?;
            let mp = at(&[(i, -1.0), (j, 1.0)])?;
            let mm = at(&[(i, -1.0), (j, -1.0)])?;
            let d = (pp - pm - mp + mm) / (4.0 * h * h);
            second[i][j] = d.clone();
            second[j][i] = d;
        }
    }
    Ok(MetricJet { value, first, second })
}

/// Brioschi formula with `E = G₁₁`, `F = G₁₂`, `G = G₂₂`, `u = x₁`, `v = x₂`.
pub fn brioschi(jet: &MetricJet) -> f64 {
    let (e, f, g) = (jet.value[(0, 0)], jet.value[(0, 1)], jet.value[(1, 1)]);
    let d = |i: usize, a: usize, b: usize| jet.first[i][(a, b)];
    let dd = |i: usize, j: usize, a: usize, b: usize| jet.second[i][j][(a, b)];
    let (e_u, e_v) = (d(0, 0, 0), d(1, 0, 0));
    let (f_u, f_v) = (d(0, 0, 1), d(1, 0, 1));
    let (g_u, g_v) = (d(0, 1, 1), d(1, 1, 1));
    let e_vv = dd(1, 1, 0, 0);
    let f_uv = dd(0, 1, 0, 1);
    let g_uu = dd(0, 0, 1, 1);
    let m1 = Matrix3::new(
        -0.5 * e_vv + f_uv - 0.5 * g_uu, 0.5 * e_u, f_u - 0.5 * e_v,
        f_v - 0.5 * g_u, e, f,
        0.5 * g_v, f, g,
    );
    let m2 = Matrix3::new(
        0.0, 0.5 * e_v, 0.5 * g_u,
        0.5 * e_v, e, f,
        0.5 * g_u, f, g,
    );
    let area = e * g - f * f;
    (m1.determinant() - m2.determinant()) / (area * area)
}

#[derive(Clone, Debug)]
pub struct IdentityMetric {
    pub n: usize,
}

impl MetricField for IdentityMetric {
    fn dim(&self) -> usize {
        self.n
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.n, x)?;
        Ok(DMatrix::identity(self.n, self.n))
    }
    fn sqrt_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.eval(x)
    }
    fn jet(&self, x: &[f64]) -> Option<Result<MetricJet>> {
        Some(self.eval(x).map(constant_jet))
    }
    fn name(&self) -> String {
        "identity".into()
    }
}

/// A spatially constant metric; its square root is computed once.
#[derive(Clone, Debug)]
pub struct ConstantMetric {
    value: DMatrix<f64>,
    root: DMatrix<f64>,
}

impl ConstantMetric {
    pub fn new(value: DMatrix<f64>) -> Result<Self> {
        let root = sqrt_spd(&value)?;
        Ok(ConstantMetric { value, root })
    }

    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        ConstantMetric::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(entries)))
    }

    pub fn value(&self) -> &DMatrix<f64> {
        &self.value
    }
}

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.value.nrows()
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        Ok(self.value.clone())
    }
    fn sqrt_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        Ok(self.root.clone())
    }
    fn jet(&self, x: &[f64]) -> Option<Result<MetricJet>> {
        Some(self.eval(x).map(constant_jet))
    }
    fn name(&self) -> String {
        "constant".into()
    }
}

/// The profile `g(x₁)` of the first example, solving `g″ = g′²/(2(g − 2))`.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// `g = 2 + a (x₁ + b)²`.
    Closed { a: f64, b: f64 },
    /// Fourth-order Runge–Kutta from `g(0) = g0`, `g′(0) = g1`.
    Integrated { g0: f64, g1: f64, step: f64 },
}

impl Profile {
    /// `(g, g′, g″)` at `t`.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        let (g, dg) = match *self {
            Profile::Closed { a, b } => (2.0 + a * (t + b).powi(2), 2.0 * a * (t + b)),
            Profile::Integrated { g0, g1, step } => integrate_profile(g0, g1, t, step),
        };
        if !(g > 2.0) {
            return Err(Error::NotPositiveDefinite(g / 2.0 - 1.0));
        }
        Ok((g, dg, dg * dg / (2.0 * (g - 2.0))))
    }
}

fn integrate_profile(g0: f64, g1: f64, t: f64, max_step: f64) -> (f64, f64) {
    let steps = ((t.abs() / max_step).ceil() as usize).max(1);
    let h = t / steps as f64;
    let rhs = |g: f64, dg: f64| (dg, dg * dg / (2.0 * (g - 2.0)));
    let (mut g, mut dg) = (g0, g1);
    for _ in 0..steps {
        let k1 = rhs(g, dg);
        let k2 = rhs(g + 0.5 * h * k1.0, dg + 0.5 * h * k1.1);
        let k3 = rhs(g + 0.5 * h * k2.0, dg + 0.5 * h * k2.1);
        let k4 = rhs(g + h * k3.0, dg + h * k3.1);
        g += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        dg += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (g, dg)
}

/// `G = [[1/2, 1], [1, g(x₁)]]`: flat, while its diagonal part is curved.
#[derive(Clone, Debug)]
pub struct Example1Metric {
    pub profile: Profile,
}

/// The first example with `g = 2 + a (x₁ + b)²`.
pub fn example1_metric(a: f64, b: f64) -> Result<Example1Metric> {
    if !(a > 0.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!("example1 needs a > 0, got a = {a}")));
    }
    Ok(Example1Metric { profile: Profile::Closed { a, b } })
}

impl Example1Metric {
    /// Profile integrated numerically from `g(0) = g0 > 2`, `g′(0) = g1 > 0`.
    pub fn from_initial_data(g0: f64, g1: f64) -> Result<Self> {
        if !(g0 > 2.0) || !(g1 > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "example1 initial data needs g0 > 2 and g1 > 0, got ({g0}, {g1})"
            )));
        }
        Ok(Example1Metric { profile: Profile::Integrated { g0, g1, step: 1e-3 } })
    }

    /// Closed-form coefficients `(a, b)` matching the initial data `(g0, g1)`.
    pub fn closed_form_coefficients(g0: f64, g1: f64) -> (f64, f64) {
        let b = 2.0 * (g0 - 2.0) / g1;
        (g1 * g1 / (4.0 * (g0 - 2.0)), b)
    }
}

impl MetricField for Example1Metric {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(2, x)?;
        let (g, _, _) = self.profile.eval(x[0])?;
        Ok(DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, g]))
    }
    fn jet(&self, x: &[f64]) -> Option<Result<MetricJet>> {
        Some((|| {
            check_dim(2, x)?;
            let (g, dg, ddg) = self.profile.eval(x[0])?;
            let value = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, g]);
            let only22 = |v: f64| DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, v]);
            let zero = DMatrix::zeros(2, 2);
            Ok(MetricJet {
                value,
                first: vec![only22(dg), zero.clone()],
                second: vec![vec![only22(ddg), zero.clone()], vec![zero.clone(), zero]],
            })
        })())
    }
    fn name(&self) -> String {
        "example1".into()
    }
}

/// The angle field `w` of the second example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AngleField {
    Constant(f64),
    /// `w = offset + coupling · x₁ x₂`.
    Bilinear { offset: f64, coupling: f64 },
}

impl AngleField {
    /// `(w, ∂₁w, ∂₂w, ∂₁∂₂w)`; the pure second derivatives vanish for both variants.
    pub fn eval(&self, x: &[f64]) -> (f64, f64, f64, f64) {
        match *self {
            AngleField::Constant(w) => (w, 0.0, 0.0, 0.0),
            AngleField::Bilinear { offset, coupling } => {
                (offset + coupling * x[0] * x[1], coupling * x[1], coupling * x[0], coupling)
            }
        }
    }
}

/// `G = [[1, cos w], [cos w, 1]]`: curved, while its diagonal part is the identity.
#[derive(Clone, Debug)]
pub struct Example2Metric {
    pub angle: AngleField,
}

pub fn example2_metric(angle: AngleField) -> Example2Metric {
    Example2Metric { angle }
}

impl Example2Metric {
    fn angle_at(&self, x: &[f64]) -> Result<(f64, f64, f64, f64)> {
        check_dim(2, x)?;
        let a = self.angle.eval(x);
        if !(a.0 > 0.0 && a.0 < FRAC_PI_2) {
            return Err(Error::InvalidParameter(format!("angle {} at {x:?} outside (0, π/2)", a.0)));
        }
        Ok(a)
    }
}

impl MetricField for Example2Metric {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let (w, ..) = self.angle_at(x)?;
        let c = w.cos();
        Ok(DMatrix::from_row_slice(2, 2, &[1.0, c, c, 1.0]))
    }
    fn sqrt_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        // eigenvalues 1 ± cos w along (1, ±1)/√2
        let (w, ..) = self.angle_at(x)?;
        let (p, m) = ((1.0 + w.cos()).sqrt(), (1.0 - w.cos()).sqrt());
        let (s, t) = (0.5 * (p + m), 0.5 * (p - m));
        Ok(DMatrix::from_row_slice(2, 2, &[s, t, t, s]))
    }
    fn jet(&self, x: &[f64]) -> Option<Result<MetricJet>> {
        Some((|| {
            let (w, w1, w2, w12) = self.angle_at(x)?;
            let (s, c) = w.sin_cos();
            let off = |v: f64| DMatrix::from_row_slice(2, 2, &[0.0, v, v, 0.0]);
            let grad = [w1, w2];
            let mut second = vec![vec![DMatrix::zeros(2, 2); 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    let wij = if i == j { 0.0 } else { w12 };
                    second[i][j] = off(-c * grad[i] * grad[j] - s * wij);
                }
            }
            Ok(MetricJet {
                value: DMatrix::from_row_slice(2, 2, &[1.0, c, c, 1.0]),
                first: vec![off(-s * w1), off(-s * w2)],
                second,
            })
        })())
    }
    fn name(&self) -> String {
        "example2".into()
    }
}

/// `Ḡ = diag{G_jj} = diag{|A e_j|²}`, the metric seen by the nearest-neighbour limit.
#[derive(Clone)]
pub struct EffectiveMetric<M> {
    pub base: M,
}

fn diagonal_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(&m.diagonal())
}

impl<M: MetricField> MetricField for EffectiveMetric<M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(diagonal_part(&self.base.eval(x)?))
    }
    fn sqrt_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.base.eval(x)?;
        Ok(DMatrix::from_diagonal(&g.diagonal().map(f64::sqrt)))
    }
    fn jet(&self, x: &[f64]) -> Option<Result<MetricJet>> {
        self.base.jet(x).map(|jet| {
            jet.map(|j| MetricJet {
                value: diagonal_part(&j.value),
                first: j.first.iter().map(diagonal_part).collect(),
                second: j.second.iter().map(|row| row.iter().map(diagonal_part).collect()).collect(),
            })
        })
    }
    fn name(&self) -> String {
        format!("effective({})", self.base.name())
    }
}

/// `G = (∇u)ᵀ ∇u`, realised by construction.
#[derive(Clone)]
pub struct InducedMetric<D> {
    pub map: D,
}

impl<D: Deformation> MetricField for InducedMetric<D> {
    fn dim(&self) -> usize {
        self.map.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        let f = self.map.gradient(x);
        let g = f.transpose() * &f;
        Ok((&g + g.transpose()) * 0.5)
    }
    fn name(&self) -> String {
        "induced".into()
    }
}

/// Pull-back `G₁(x) = Rᵀ G(Rx) R` under a linear map `R`.
#[derive(Clone)]
pub struct PulledBackMetric<M> {
    pub base: M,
    pub map: DMatrix<f64>,
}

impl<M: MetricField> MetricField for PulledBackMetric<M> {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        let y = &self.map * nalgebra::DVector::from_column_slice(x);
        let g = self.base.eval(y.as_slice())?;
        let out = self.map.transpose() * g * &self.map;
        Ok((&out + out.transpose()) * 0.5)
    }
    fn name(&self) -> String {
        format!("pullback({})", self.base.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(sqrt_spd(&id).unwrap(), id, epsilon = 1e-15);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
        let r = sqrt_spd(&d).unwrap();
        assert_relative_eq!(r, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0])), epsilon = 1e-14);
    }

    #[test]
    fn sqrt_squares_back() {
        let g = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 1.0, 3.0]);
        let a = sqrt_spd(&g).unwrap();
        assert_relative_eq!(&a * &a, g, max_relative = 1e-12);
        assert_relative_eq!(a[(0, 1)], a[(1, 0)]);
        assert!(a.clone().symmetric_eigenvalues().min() > 0.0);
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(sqrt_spd(&asym), Err(Error::NotSymmetric(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(sqrt_spd(&indef), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn lambda_examples() {
        let x = [0.3, 0.4];
        assert_relative_eq!(lambda_nearest(&IdentityMetric { n: 2 }, &x).unwrap(), DMatrix::identity(2, 2));
        let g = ConstantMetric::diagonal(&[4.0, 9.0]).unwrap();
        let l = lambda_nearest(&g, &x).unwrap();
        assert_relative_eq!(l[(0, 0)], 0.5, epsilon = 1e-15);
        assert_relative_eq!(l[(1, 1)], 1.0 / 3.0, epsilon = 1e-15);
        let ex2 = example2_metric(AngleField::Constant(0.7));
        assert_relative_eq!(lambda_nearest(&ex2, &x).unwrap(), DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn lambda_shell_examples() {
        let x = [0.1, 0.2];
        let id = IdentityMetric { n: 2 };
        assert_relative_eq!(lambda_shell(&id, &x, &IntMatrix::identity(2), 1.0).unwrap(), DMatrix::identity(2, 2));
        let b = IntMatrix::from_rows(&[vec![1, -1], vec![1, 1]]);
        let l = lambda_shell(&id, &x, &b, 2f64.sqrt()).unwrap();
        assert_relative_eq!(l, b.to_f64(), epsilon = 1e-14);
        let g = ConstantMetric::diagonal(&[4.0, 1.0]).unwrap();
        let l = lambda_shell(&g, &x, &IntMatrix::identity(2), 1.0).unwrap();
        assert_relative_eq!(l, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0]), epsilon = 1e-14);
        let singular = IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]);
        assert_eq!(lambda_shell(&id, &x, &singular, 1.0), Err(Error::SingularBasis));
    }

    #[test]
    fn example2_closed_form_root() {
        let m = example2_metric(AngleField::Bilinear { offset: 0.8, coupling: 0.3 });
        let x = [0.4, 0.9];
        let a = m.sqrt_at(&x).unwrap();
        assert_relative_eq!(&a * &a, m.eval(&x).unwrap(), epsilon = 1e-14);
        assert_relative_eq!(a, sqrt_spd(&m.eval(&x).unwrap()).unwrap(), epsilon = 1e-14);
        assert!(example2_metric(AngleField::Constant(1.7)).eval(&x).is_err());
    }

    #[test]
    fn example1_profile_values() {
        let m = example1_metric(0.25, 2.0).unwrap();
        let (g, dg, _) = m.profile.eval(0.0).unwrap();
        assert_relative_eq!(g, 3.0);
        assert_relative_eq!(dg, 1.0);
        let p = example1_metric(1.0, 0.0).unwrap().profile;
        let (g, dg, ddg) = p.eval(1.0).unwrap();
        assert_eq!((g, dg, ddg), (3.0, 2.0, 2.0));
        assert!(example1_metric(0.0, 1.0).is_err());
    }

    #[test]
    fn integrated_profile_matches_closed_form() {
        let (a, b) = Example1Metric::closed_form_coefficients(3.0, 1.0);
        assert_relative_eq!(a, 0.25);
        assert_relative_eq!(b, 2.0);
        let closed = Profile::Closed { a, b };
        let rk = Example1Metric::from_initial_data(3.0, 1.0).unwrap().profile;
        for t in [-0.5, 0.0, 0.3, 1.0] {
            let (g1, d1, _) = closed.eval(t).unwrap();
            let (g2, d2, _) = rk.eval(t).unwrap();
            assert_relative_eq!(g1, g2, max_relative = 1e-10);
            assert_relative_eq!(d1, d2, max_relative = 1e-10);
        }
    }

    #[test]
    fn flat_metric_has_no_curvature() {
        let k = gaussian_curvature(&IdentityMetric { n: 2 }, &[0.2, 0.7], 1e-3).unwrap();
        assert!(k.abs() < 1e-8);
        assert!(matches!(gaussian_curvature(&IdentityMetric { n: 3 }, &[0.0; 3], 1e-3), Err(Error::CurvatureDimension(3))));
    }

    #[test]
    fn brioschi_on_round_sphere() {
        // sphere of radius 2 in (θ, φ): E = 4, G = 4 sin²θ, curvature 1/4
        struct Sphere;
        impl MetricField for Sphere {
            fn dim(&self) -> usize {
                2
            }
            fn eval(&self, x: &[f64]) -> Result<DMatrix<f64>> {
                Ok(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 4.0 * x[0].sin().powi(2)]))
            }
            fn name(&self) -> String {
                "sphere".into()
            }
        }
        let k = gaussian_curvature(&Sphere, &[1.0, 0.3], 1e-4).unwrap();
        assert_relative_eq!(k, 0.25, max_relative = 1e-6);
    }

    #[test]
    fn analytic_and_numeric_curvature_agree() {
        let m = example2_metric(AngleField::Bilinear { offset: 0.7, coupling: 0.2 });
        let x = [0.6, 0.35];
        let exact = gaussian_curvature_analytic(&m, &x).unwrap().unwrap();
        let w = 0.7 + 0.2 * 0.6 * 0.35;
        assert_relative_eq!(exact, -0.2 / f64::sin(w), max_relative = 1e-13);
        let fd = gaussian_curvature(&m, &x, 1e-3).unwrap();
        assert_relative_eq!(fd, exact, max_relative = 1e-5);
        assert!(gaussian_curvature_analytic(&InducedMetric { map: crate::deformation::IdentityMap { n: 2 } }, &x).unwrap().is_none());
    }

    #[test]
    fn effective_metric_is_the_diagonal() {
        let m = example1_metric(0.25, 2.0).unwrap();
        let e = EffectiveMetric { base: m.clone() };
        let x = [0.5, 0.5];
        let g = m.eval(&x).unwrap();
        let a = m.sqrt_at(&x).unwrap();
        for j in 0..2 {
            assert_relative_eq!(a.column(j).norm_squared(), g[(j, j)], max_relative = 1e-12);
        }
        assert_relative_eq!(e.eval(&x).unwrap(), DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, g[(1, 1)]]));
    }

    #[test]
    fn pullback_by_rotation() {
        let base = ConstantMetric::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let r = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        let p = PulledBackMetric { base: base.clone(), map: r.clone() };
        let expected = r.transpose() * base.value() * &r;
        assert_relative_eq!(p.eval(&[0.1, 0.1]).unwrap(), expected, epsilon = 1e-14);
    }
}
