//! Analytic deformations `u: Rⁿ → Rⁿ` with known gradients.

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

pub trait Deformation: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
    /// `∇u(x)`, rows indexed by output component.
    fn gradient(&self, x: &[f64]) -> DMatrix<f64>;
}

impl<D: Deformation + ?Sized> Deformation for Arc<D> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        (**self).gradient(x)
    }
}

impl<D: Deformation + ?Sized> Deformation for &D {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        (**self).value(x)
    }
    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        (**self).gradient(x)
    }
}

#[derive(Clone, Debug)]
pub struct IdentityMap {
    pub n: usize,
}

impl Deformation for IdentityMap {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        x.to_vec()
    }
    fn gradient(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.n, self.n)
    }
}

/// `u(x) = M x + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub linear: DMatrix<f64>,
    pub offset: DVector<f64>,
}

impl AffineMap {
    pub fn linear(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        AffineMap { linear: m, offset: DVector::zeros(n) }
    }

    pub fn scaling(n: usize, s: f64) -> Self {
        AffineMap::linear(DMatrix::identity(n, n) * s)
    }
}

impl Deformation for AffineMap {
    fn dim(&self) -> usize {
        self.linear.nrows()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        (&self.linear * DVector::from_column_slice(x) + &self.offset).iter().copied().collect()
    }
    fn gradient(&self, _x: &[f64]) -> DMatrix<f64> {
        self.linear.clone()
    }
}

/// `u(x) = (x₁ + amplitude · sin x₂, x₂)`.
#[derive(Clone, Debug)]
pub struct ShearSine {
    pub amplitude: f64,
}

impl Deformation for ShearSine {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0] + self.amplitude * x[1].sin(), x[1]]
    }
    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, self.amplitude * x[1].cos(), 0.0, 1.0])
    }
}

/// `v(x) = scale · u(R x)`.
#[derive(Clone)]
pub struct Precomposed<D> {
    pub inner: D,
    pub map: DMatrix<f64>,
    pub scale: f64,
}

impl<D: Deformation> Precomposed<D> {
    fn inner_point(&self, x: &[f64]) -> Vec<f64> {
        (&self.map * DVector::from_column_slice(x)).iter().copied().collect()
    }
}

impl<D: Deformation> Deformation for Precomposed<D> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        self.inner.value(&self.inner_point(x)).iter().map(|v| v * self.scale).collect()
    }
    fn gradient(&self, x: &[f64]) -> DMatrix<f64> {
        self.inner.gradient(&self.inner_point(x)) * &self.map * self.scale
    }
}
