#![allow(dead_code)]

//! Brute-force quasiconvexification on the unit square, plus shared test helpers.

use nalgebra::{DMatrix, Matrix2};
use prestrain_lattice::geometry::Domain;
use prestrain_lattice::minimize::lbfgs::{self, LbfgsOptions};
use prestrain_lattice::quadrature::Mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Boundary condition on the perturbation `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// `φ = 0` on the boundary of the square.
    Dirichlet,
    /// `φ` periodic on the unit torus.
    Periodic,
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub value: f64,
    pub converged: bool,
    pub best_start: usize,
}

/// `W` on 2×2 matrices: `Σ_j (|M e_j| − 1)²`.
pub fn w2(m: &Matrix2<f64>) -> f64 {
    m.column_iter().map(|c| (c.norm() - 1.0).powi(2)).sum()
}

pub fn w2_gradient(m: &Matrix2<f64>) -> Matrix2<f64> {
    let mut g = Matrix2::zeros();
    for j in 0..2 {
        let r = m.column(j).norm();
        if r > 0.0 {
            g.set_column(j, &(m.column(j) * (2.0 * (r - 1.0) / r)));
        }
    }
    g
}

struct Element {
    volume: f64,
    /// Rows are the shape-function gradients of the three vertices.
    shape: [[f64; 2]; 3],
    dofs: [Option<usize>; 3],
}

/// `inf ⨍ f(M + ∇φ)` over P1 perturbations on a `grid × grid` Kuhn mesh, by multi-start L-BFGS.
///
/// Every admissible `φ` gives an upper bound on `Qf(M)`.
pub fn quasiconvexify_oracle(
    f: impl Fn(&Matrix2<f64>) -> f64 + Sync,
    df: impl Fn(&Matrix2<f64>) -> Matrix2<f64> + Sync,
    m: &Matrix2<f64>,
    grid: usize,
    boundary: Boundary,
    starts: usize,
    seed: u64,
) -> OracleResult {
    assert!(grid >= 2);
    let mesh = Mesh::for_domain(&Domain::unit_cube(2), grid).unwrap();
    let mut count = 0;
    let mut seen = std::collections::HashMap::new();
    let dof_of: Vec<Option<usize>> = mesh
        .nodes
        .iter()
        .map(|x| {
            let i = (x[0] * grid as f64).round() as usize;
            let j = (x[1] * grid as f64).round() as usize;
            let slot = match boundary {
                Boundary::Dirichlet if i == 0 || j == 0 || i == grid || j == grid => return None,
                Boundary::Dirichlet => (i, j),
                Boundary::Periodic => (i % grid, j % grid),
            };
            Some(*seen.entry(slot).or_insert_with(|| {
                count += 1;
                count - 1
            }))
        })
        .collect();
    let dofs = count;
    let elements: Vec<Element> = mesh
        .elements
        .iter()
        .enumerate()
        .map(|(e, nodes)| {
            let s = mesh.shape_gradients(e);
            Element {
                volume: mesh.element_volume(e),
                shape: [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]], [s[(2, 0)], s[(2, 1)]]],
                dofs: [dof_of[nodes[0]], dof_of[nodes[1]], dof_of[nodes[2]]],
            }
        })
        .collect();
    let objective = |phi: &[f64], grad: &mut [f64]| -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut total = 0.0;
        for el in &elements {
            let mut arg = *m;
            for (a, d) in el.dofs.iter().enumerate() {
                if let Some(d) = *d {
                    for i in 0..2 {
                        for j in 0..2 {
                            arg[(i, j)] += phi[2 * d + i] * el.shape[a][j];
                        }
                    }
                }
            }
            total += el.volume * f(&arg);
            let back = df(&arg) * el.volume;
            for (a, d) in el.dofs.iter().enumerate() {
                if let Some(d) = *d {
                    for i in 0..2 {
                        grad[2 * d + i] += back[(i, 0)] * el.shape[a][0] + back[(i, 1)] * el.shape[a][1];
                    }
                }
            }
        }
        total
    };
    let opts = LbfgsOptions { tol: 1e-9, max_iter: 400, ..Default::default() };
    let results: Vec<(f64, bool)> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..starts.max(1))
            .map(|s| {
                let objective = &objective;
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(s as u64));
                    let scale = 1.0 / grid as f64;
                    let mut phi: Vec<f64> = (0..2 * dofs)
                        .map(|_| if s == 0 { 0.0 } else { scale * rng.random_range(-1.0..1.0) })
                        .collect();
                    let r = lbfgs::minimize(&mut phi, objective, |_, _| {}, &opts);
                    let mut g = vec![0.0; phi.len()];
                    (objective(&phi, &mut g), r.converged)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let (best_start, &(value, converged)) =
        results.iter().enumerate().min_by(|a, b| a.1 .0.total_cmp(&b.1 .0)).unwrap();
    OracleResult { value, converged, best_start }
}

/// Entries uniform in `[-range, range]`.
pub fn random_matrix(rng: &mut impl Rng, n: usize, range: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-range..range))
}

/// A rotation of the plane by `theta`.
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// A symmetric positive definite matrix `LLᵀ + shift·Id` with random `L`.
pub fn random_spd(rng: &mut impl Rng, n: usize, shift: f64) -> DMatrix<f64> {
    let l = random_matrix(rng, n, 1.0);
    &l * l.transpose() + DMatrix::identity(n, n) * shift
}

/// `M x + c` plus independent nodal noise of size `noise · ε`, on `εZⁿ ∩ Ω`.
pub fn random_deformation(
    rng: &mut impl Rng,
    eps: f64,
    domain: &Domain,
    noise: f64,
) -> prestrain_lattice::energies::DiscreteDeformation {
    let n = domain.dim();
    let m = DMatrix::identity(n, n) + random_matrix(rng, n, 0.5);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nodes = prestrain_lattice::energies::lattice_nodes(domain, eps).unwrap();
    let mut values = Vec::with_capacity(n * nodes.len());
    for z in &nodes {
        let x = nalgebra::DVector::from_iterator(n, z.iter().map(|&v| v as f64 * eps));
        let y = &m * x;
        values.extend((0..n).map(|i| y[i] + c[i] + noise * eps * rng.random_range(-1.0..1.0)));
    }
    prestrain_lattice::energies::DiscreteDeformation::from_values(eps, n, nodes, values).unwrap()
}
