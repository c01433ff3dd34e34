use super::continuum::{minimize_continuum, ContinuumOptions};
use super::discrete::{affine_initial_guess, minimize_discrete, DiscreteOptions, DiscreteSolution};
use crate::energies::{extend_p1, lattice_nodes, Cutoff, DiscreteDeformation, LimitCase};
use crate::error::{Error, Result};
use crate::geometry::{Domain, LatticeFrame, Triangulation};
use crate::metric::MetricField;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StudyOptions {
    pub discrete: DiscreteOptions,
    pub continuum: ContinuumOptions,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub eps: f64,
    /// `min E_ε`, `NaN` when the minimisation failed.
    pub value: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    /// First-order Richardson extrapolation of the two finest successful rows.
    pub extrapolated: Option<f64>,
    /// `min F` on the P1 mesh, `NaN` when that minimisation failed.
    pub continuum: f64,
    pub continuum_error: Option<String>,
}

/// `(r E(ε_fine) − E(ε_coarse)) / (r − 1)` with `r = ε_coarse / ε_fine`.
pub fn richardson(coarse: (f64, f64), fine: (f64, f64)) -> f64 {
    let r = coarse.0 / fine.0;
    (r * fine.1 - coarse.1) / (r - 1.0)
}

/// Samples the P1 extension of a coarse solution at the nodes of a finer lattice.
fn resample(coarse: &DiscreteDeformation, domain: &Domain, eps: f64) -> Result<DiscreteDeformation> {
    let n = coarse.dim();
    let frame = LatticeFrame::canonical(coarse.eps(), n)?;
    let t = Triangulation::covering(domain, frame, coarse.eps() * (n as f64).sqrt())?;
    let field = extend_p1(coarse, &t)?;
    if field.is_empty() {
        return Err(Error::InvalidDomain("coarse lattice has no complete cell".into()));
    }
    let nodes = lattice_nodes(domain, eps)?;
    let mut values = Vec::with_capacity(n * nodes.len());
    for z in &nodes {
        let x: Vec<f64> = z.iter().map(|&v| v as f64 * eps).collect();
        values.extend(field.eval_extended(&x).ok_or(Error::MissingNode(z.clone()))?);
    }
    DiscreteDeformation::from_values(eps, n, nodes, values)
}

/// `min E_ε` along a decreasing ladder of `ε`, warm-started by P1 resampling, beside `min F`.
pub fn gamma_study<M: MetricField + ?Sized>(
    metric: &M,
    cutoff: &Cutoff,
    domain: &Domain,
    eps_list: &[f64],
    case: LimitCase,
    options: &StudyOptions,
) -> Result<StudyResult> {
    if eps_list.is_empty() {
        return Err(Error::InvalidParameter("empty ε list".into()));
    }
    if let Some(&e) = eps_list.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::NonPositiveScale(e));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("ε list must be strictly decreasing".into()));
    }
    if case.cutoff() != *cutoff {
        return Err(Error::InvalidParameter(format!("cutoff does not match the {case:?} limit")));
    }
    let mut rows = Vec::with_capacity(eps_list.len());
    let mut previous: Option<DiscreteSolution> = None;
    for &eps in eps_list {
        let run = || -> Result<DiscreteSolution> {
            let init = match &previous {
                Some(p) => resample(&p.deformation, domain, eps)?,
                None => affine_initial_guess(metric, domain, eps)?,
            };
            minimize_discrete(metric, cutoff, domain, &init, &options.discrete)
        };
        match run() {
            Ok(s) => {
                log::info!("ε = {eps}: min E = {:.6e} after {} iterations", s.value, s.report.iterations);
                rows.push(StudyRow {
                    eps,
                    value: s.value,
                    iterations: s.report.iterations,
                    grad_norm: s.report.grad_norm,
                    converged: s.report.converged,
                    error: None,
                });
                previous = Some(s);
            }
            Err(e) => {
                log::warn!("ε = {eps}: {e}");
                rows.push(StudyRow {
                    eps,
                    value: f64::NAN,
                    iterations: 0,
                    grad_norm: f64::NAN,
                    converged: false,
                    error: Some(e.to_string()),
                });
                previous = None;
            }
        }
    }
    let ok: Vec<&StudyRow> = rows.iter().filter(|r| r.error.is_none()).collect();
    let extrapolated = match ok.as_slice() {
        [.., c, f] => Some(richardson((c.eps, c.value), (f.eps, f.value))),
        _ => None,
    };
    let (continuum, continuum_error) = match minimize_continuum(metric, domain, case, &options.continuum) {
        Ok(s) => (s.value, None),
        Err(e) => (f64::NAN, Some(e.to_string())),
    };
    Ok(StudyResult { rows, extrapolated, continuum, continuum_error })
}
