use super::lbfgs::{self, LbfgsOptions, LbfgsReport};
use super::GaugeFixing;
use crate::energies::{Cutoff, DiscreteDeformation, InteractionSet};
use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::metric::MetricField;
use nalgebra::DVector;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteOptions {
    pub gauge: GaugeFixing,
    pub lbfgs: LbfgsOptions,
    /// Smoothing of `|u(α + εξ) − u(α)|` in units of `ε`.
    pub smoothing: f64,
    pub workers: usize,
}

impl Default for DiscreteOptions {
    fn default() -> Self {
        DiscreteOptions { gauge: GaugeFixing::PinMean, lbfgs: LbfgsOptions::default(), smoothing: 1e-12, workers: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct DiscreteSolution {
    pub deformation: DiscreteDeformation,
    /// `E_ε` at the result, without smoothing.
    pub value: f64,
    /// Smoothed objective at the result.
    pub smoothed_value: f64,
    pub report: LbfgsReport,
}

/// `u(x) = A(x₀) x` on `εZⁿ ∩ Ω`, with `x₀` the centre of the bounding box.
pub fn affine_initial_guess<M: MetricField + ?Sized>(metric: &M, domain: &Domain, eps: f64) -> Result<DiscreteDeformation> {
    let (lo, hi) = domain.bounding_box();
    let center: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let a = metric.sqrt_at(&center)?;
    let nodes = crate::energies::lattice_nodes(domain, eps)?;
    let n = domain.dim();
    DiscreteDeformation::from_fn(eps, n, nodes, |x| (&a * DVector::from_column_slice(x)).iter().copied().collect())
}

/// Minimises `E_ε` over the nodal values of `init`, which fixes `ε` and the node set.
pub fn minimize_discrete<M: MetricField + ?Sized>(
    metric: &M,
    cutoff: &Cutoff,
    domain: &Domain,
    init: &DiscreteDeformation,
    options: &DiscreteOptions,
) -> Result<DiscreteSolution> {
    if !(options.lbfgs.tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    if init.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("initial values".into()));
    }
    let n = init.dim();
    let set = InteractionSet::build(init, metric, cutoff, domain)?;
    let eta = options.smoothing * init.eps();
    let mut x = init.values().to_vec();
    let gauge = options.gauge;
    let report = lbfgs::minimize(
        &mut x,
        |v, g| set.smoothed_energy_and_gradient_with(v, eta, g, options.workers),
        |v, g| gauge.apply(v, g, n),
        &options.lbfgs,
    );
    if !report.value.is_finite() {
        return Err(Error::NonFinite(format!("objective after {} iterations", report.iterations)));
    }
    let value = set.energy(&x);
    Ok(DiscreteSolution { deformation: init.with_values(x)?, value, smoothed_value: report.value, report })
}
