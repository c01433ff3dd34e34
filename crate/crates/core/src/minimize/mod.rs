//! Minimisation of the discrete and continuum energies, and the ε → 0 study driver.

mod continuum;
mod discrete;
pub mod lbfgs;
mod study;

pub use continuum::{minimize_continuum, ContinuumOptions, ContinuumSolution};
pub use discrete::{affine_initial_guess, minimize_discrete, DiscreteOptions, DiscreteSolution};
pub use lbfgs::{LbfgsOptions, LbfgsReport};
pub use study::{gamma_study, richardson, StudyOptions, StudyResult, StudyRow};

/// Removal of the translation invariance `u ↦ u + c`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GaugeFixing {
    /// Mean nodal value pinned to zero.
    #[default]
    PinMean,
    /// The value at one node pinned to zero.
    PinNode(usize),
}

impl GaugeFixing {
    /// Translates `values` (flattened, `n` per node) into the gauge and projects `grad` onto its tangent space.
    pub fn apply(self, values: &mut [f64], grad: &mut [f64], n: usize) {
        let count = values.len() / n;
        if count == 0 {
            return;
        }
        match self {
            GaugeFixing::PinMean => {
                for i in 0..n {
                    let mean = values.iter().skip(i).step_by(n).sum::<f64>() / count as f64;
                    values.iter_mut().skip(i).step_by(n).for_each(|v| *v -= mean);
                    let gmean = grad.iter().skip(i).step_by(n).sum::<f64>() / count as f64;
                    grad.iter_mut().skip(i).step_by(n).for_each(|g| *g -= gmean);
                }
            }
            GaugeFixing::PinNode(k) => {
                let k = k.min(count - 1);
                for i in 0..n {
                    let pinned = values[n * k + i];
                    values.iter_mut().skip(i).step_by(n).for_each(|v| *v -= pinned);
                    values[n * k + i] = 0.0;
                    grad[n * k + i] = 0.0;
                }
            }
        }
    }
}
