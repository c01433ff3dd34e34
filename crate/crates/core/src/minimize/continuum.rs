use super::lbfgs::{self, LbfgsOptions, LbfgsReport};
use super::GaugeFixing;
use crate::density::{qw, qw_gradient};
use crate::energies::{case_lambda, LimitCase, MeshField};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::linalg::pairwise_sum;
use crate::metric::MetricField;
use crate::quadrature::Mesh;
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuumOptions {
    pub resolution: usize,
    pub lbfgs: LbfgsOptions,
    /// Weight of the `δ ∫ |∇u|²` regulariser.
    pub regularization: f64,
    /// Starting nodal values; `A(x₀) x` when absent.
    pub initial: Option<Vec<f64>>,
}

impl Default for ContinuumOptions {
    fn default() -> Self {
        ContinuumOptions { resolution: 32, lbfgs: LbfgsOptions::default(), regularization: 0.0, initial: None }
    }
}

#[derive(Clone, Debug)]
pub struct ContinuumSolution {
    pub mesh: Mesh,
    pub values: Vec<f64>,
    /// `2 ∫ QW(∇u λ)` at the result, without the regulariser.
    pub value: f64,
    pub report: LbfgsReport,
}

impl ContinuumSolution {
    pub fn field(&self) -> MeshField<'_> {
        MeshField { mesh: &self.mesh, values: &self.values }
    }
}

struct Objective {
    mesh: Mesh,
    lambdas: Vec<DMatrix<f64>>,
    delta: f64,
}

impl Objective {
    fn limit_value(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.mesh.elements.len())
            .map(|e| 2.0 * self.mesh.element_volume(e) * qw(&(self.mesh.p1_gradient(e, values) * &self.lambdas[e])))
            .collect();
        pairwise_sum(&terms)
    }

    fn value_and_gradient(&self, values: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.mesh.dim();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut terms = Vec::with_capacity(self.mesh.elements.len());
        for (e, nodes) in self.mesh.elements.iter().enumerate() {
            let vol = self.mesh.element_volume(e);
            let du = self.mesh.p1_gradient(e, values);
            let m = &du * &self.lambdas[e];
            terms.push(vol * (2.0 * qw(&m) + self.delta * du.norm_squared()));
            let dm = (qw_gradient(&m) * self.lambdas[e].transpose()) * (2.0 * vol) + &du * (2.0 * self.delta * vol);
            let local = dm * self.mesh.shape_gradients(e).transpose();
            for (a, &node) in nodes.iter().enumerate() {
                for i in 0..n {
                    grad[n * node + i] += local[(i, a)];
                }
            }
        }
        pairwise_sum(&terms)
    }
}

/// Minimises the P1 discretisation of `2 ∫ QW(∇u λ)` on a background mesh of `Ω`.
pub fn minimize_continuum<M: MetricField + ?Sized>(
    metric: &M,
    domain: &Domain,
    case: LimitCase,
    options: &ContinuumOptions,
) -> Result<ContinuumSolution> {
    if !(options.lbfgs.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if !(options.regularization >= 0.0) {
        return Err(Error::InvalidParameter("regularization must be nonnegative".into()));
    }
    let n = metric.dim();
    if domain.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: domain.dim() });
    }
    if matches!(case, LimitCase::Nearest2D | LimitCase::NextNearest2D) && n != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: n });
    }
    let mesh = Mesh::for_domain(domain, options.resolution)?;
    let lambdas = (0..mesh.elements.len())
        .map(|e| Ok(case_lambda(&metric.sqrt_at(&mesh.centroid(e))?, case)))
        .collect::<Result<Vec<_>>>()?;
    let mut x = match &options.initial {
        Some(v) if v.len() == n * mesh.nodes.len() => v.clone(),
        Some(v) => return Err(Error::DimensionMismatch { expected: n * mesh.nodes.len(), got: v.len() }),
        None => {
            let (lo, hi) = domain.bounding_box();
            let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
            let a = metric.sqrt_at(&center)?;
            mesh.nodes.iter().flat_map(|p| (&a * DVector::from_column_slice(p)).iter().copied().collect::<Vec<_>>()).collect()
        }
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial values".into()));
    }
    let objective = Objective { mesh, lambdas, delta: options.regularization };
    let report = lbfgs::minimize(
        &mut x,
        |v, g| objective.value_and_gradient(v, g),
        |v, g| GaugeFixing::PinMean.apply(v, g, n),
        &options.lbfgs,
    );
    let value = objective.limit_value(&x);
    Ok(ContinuumSolution { mesh: objective.mesh, values: x, value, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energies::gamma_limit;
    use crate::metric::{example2_metric, AngleField, ConstantMetric, IdentityMetric};
    use approx::assert_relative_eq;

    #[test]
    fn gradient_matches_differences() {
        let mesh = Mesh::for_domain(&Domain::unit_cube(2), 3).unwrap();
        let g = ConstantMetric::new(DMatrix::from_row_slice(2, 2, &[1.3, 0.2, 0.2, 0.6])).unwrap();
        let lambdas =
            (0..mesh.elements.len()).map(|e| case_lambda(&g.sqrt_at(&mesh.centroid(e)).unwrap(), LimitCase::NextNearest2D)).collect();
        let obj = Objective { mesh, lambdas, delta: 0.1 };
        let x: Vec<f64> = obj.mesh.nodes.iter().flat_map(|p| vec![1.7 * p[0] + 0.3 * p[1] * p[1], 1.1 * p[1] - 0.2 * p[0]]).collect();
        let mut grad = vec![0.0; x.len()];
        obj.value_and_gradient(&x, &mut grad);
        let h = 1e-6;
        let mut scratch = vec![0.0; x.len()];
        for k in [0, 3, 7, 12, x.len() - 1] {
            let mut p = x.clone();
            let mut m = x.clone();
            p[k] += h;
            m[k] -= h;
            let fd = (obj.value_and_gradient(&p, &mut scratch) - obj.value_and_gradient(&m, &mut scratch)) / (2.0 * h);
            assert_relative_eq!(fd, grad[k], epsilon = 1e-7);
        }
    }

    #[test]
    fn identity_metric_needs_no_work() {
        let d = Domain::unit_cube(2);
        let opts = ContinuumOptions { resolution: 4, ..Default::default() };
        let s = minimize_continuum(&IdentityMetric { n: 2 }, &d, LimitCase::Nearest2D, &opts).unwrap();
        assert_eq!(s.value, 0.0);
        assert_eq!(s.report.iterations, 0);
    }

    #[test]
    fn stretched_start_relaxes() {
        let d = Domain::unit_cube(2);
        let mesh = Mesh::for_domain(&d, 4).unwrap();
        let start: Vec<f64> = mesh.nodes.iter().flat_map(|p| vec![2.0 * p[0], 1.5 * p[1] + 0.2 * p[0]]).collect();
        let opts = ContinuumOptions { resolution: 4, initial: Some(start), ..Default::default() };
        let g = IdentityMetric { n: 2 };
        let s = minimize_continuum(&g, &d, LimitCase::Nearest2D, &opts).unwrap();
        assert!(s.report.converged, "{:?}", s.report);
        assert!(s.value < 1e-12);
        let q = s.mesh.quadrature();
        assert_relative_eq!(gamma_limit(&s.field(), &g, &q, LimitCase::Nearest2D).unwrap(), s.value, epsilon = 1e-15);
    }

    #[test]
    fn nearest_limit_vanishes_for_example_two() {
        let d = Domain::unit_cube(2);
        let g = example2_metric(AngleField::Bilinear { offset: std::f64::consts::FRAC_PI_4, coupling: 0.3 });
        let opts = ContinuumOptions { resolution: 8, ..Default::default() };
        let s = minimize_continuum(&g, &d, LimitCase::Nearest2D, &opts).unwrap();
        assert!(s.value < 1e-10, "{}", s.value);
    }

    #[test]
    fn rejects_bad_options() {
        let d = Domain::unit_cube(2);
        let g = IdentityMetric { n: 2 };
        let bad = ContinuumOptions { regularization: -1.0, ..Default::default() };
        assert!(minimize_continuum(&g, &d, LimitCase::Nearest2D, &bad).is_err());
        let bad = ContinuumOptions { initial: Some(vec![0.0; 3]), resolution: 2, ..Default::default() };
        assert!(minimize_continuum(&g, &d, LimitCase::Nearest2D, &bad).is_err());
        assert!(minimize_continuum(&IdentityMetric { n: 3 }, &Domain::unit_cube(3), LimitCase::Nearest2D, &Default::default()).is_err());
    }
}
