//! Discrete energies, their integral representations and the continuum limit functionals.

mod discrete;
mod limit;
mod representation;

pub use discrete::{discrete_energy, lattice_nodes, Cutoff, CutoffTerm, DiscreteDeformation, Interaction, InteractionSet};
pub use limit::{
    case_lambda, continuum_energy, dist_sq_rotations, dist_sq_so2, gamma_limit, limit_functional_bounds,
    next_nearest_basis, relaxed_functional, rotation_identity_check, GradientSource, LimitBounds, LimitCase,
    MeshField, RotationCheck,
};
pub use representation::{
    covering_margin, cutoff_margin, extend_p1, integral_representation, lambda_field, nearest_representation,
    next_nearest_representation, EnergyReport, LambdaScaling, NextNearestVariant, Orientation,
    PiecewiseAffineField, RepresentationOptions, ShellReport,
};
