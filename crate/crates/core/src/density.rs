//! The lattice density `W`, its quasiconvex envelope `QW` and the radial convex envelope.

use nalgebra::DMatrix;

/// `Σ_j (|M e_j| − 1)²`.
pub fn w(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| (c.norm() - 1.0).powi(2)).sum()
}

/// `Σ_{|M e_j| > 1} (|M e_j| − 1)²`.
pub fn qw(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| cf_radial_norm(c.norm())).sum()
}

/// `0` inside the unit ball, `(|ξ| − 1)²` outside.
pub fn cf_radial(xi: &[f64]) -> f64 {
    cf_radial_norm(xi.iter().map(|v| v * v).sum::<f64>().sqrt())
}

fn cf_radial_norm(r: f64) -> f64 {
    if r > 1.0 {
        (r - 1.0).powi(2)
    } else {
        0.0
    }
}

/// `∂W/∂M`; columns of zero length contribute the subgradient `0`.
pub fn w_gradient(m: &DMatrix<f64>) -> DMatrix<f64> {
    column_gradient(m, |r| 2.0 * (r - 1.0))
}

/// `∂QW/∂M`, zero on compressive columns.
pub fn qw_gradient(m: &DMatrix<f64>) -> DMatrix<f64> {
    column_gradient(m, |r| if r > 1.0 { 2.0 * (r - 1.0) } else { 0.0 })
}

fn column_gradient(m: &DMatrix<f64>, outer: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(m.nrows(), m.ncols());
    for (j, c) in m.column_iter().enumerate() {
        let r = c.norm();
        if r > 0.0 {
            g.set_column(j, &(c * (outer(r) / r)));
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cols(c: &[[f64; 2]]) -> DMatrix<f64> {
        DMatrix::from_fn(2, c.len(), |i, j| c[j][i])
    }

    #[test]
    fn w_examples() {
        assert_eq!(w(&DMatrix::identity(2, 2)), 0.0);
        assert_eq!(w(&(DMatrix::identity(2, 2) * 2.0)), 2.0);
        assert_eq!(w(&cols(&[[0.5, 0.0], [0.0, 1.0]])), 0.25);
    }

    #[test]
    fn qw_examples() {
        assert_eq!(qw(&cols(&[[0.3, 0.4], [0.0, -1.0]])), 0.0);
        assert_eq!(qw(&(DMatrix::identity(2, 2) * 2.0)), 2.0);
        assert_eq!(qw(&cols(&[[0.5, 0.0], [0.0, 2.0]])), 1.0);
    }

    #[test]
    fn radial_examples() {
        assert_eq!(cf_radial(&[1.0, 0.0]), 0.0);
        assert_eq!(cf_radial(&[0.0, 3.0]), 4.0);
        assert_eq!(cf_radial(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn gradients_match_differences() {
        let m = cols(&[[1.3, -0.4], [0.2, 0.5]]);
        let h = 1e-7;
        for (f, g) in [(w as fn(&DMatrix<f64>) -> f64, w_gradient(&m)), (qw, qw_gradient(&m))] {
            for i in 0..2 {
                for j in 0..2 {
                    let mut p = m.clone();
                    let mut q = m.clone();
                    p[(i, j)] += h;
                    q[(i, j)] -= h;
                    assert_relative_eq!((f(&p) - f(&q)) / (2.0 * h), g[(i, j)], epsilon = 1e-6);
                }
            }
        }
    }
}
