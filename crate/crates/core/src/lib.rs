pub mod deformation;
pub mod density;
pub mod energies;
pub mod error;
pub mod geometry;
pub mod lattice;
pub mod linalg;
pub mod metric;
pub mod minimize;
pub mod quadrature;

pub use error::{Error, Result};
