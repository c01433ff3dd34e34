//! Background simplicial meshes of a domain, the centroid rule and P1 shape gradients.

use crate::error::{Error, Result};
use crate::geometry::Domain;
use crate::linalg::{factorial, permutations};
use itertools::Itertools;
use nalgebra::DMatrix;
use std::collections::HashMap;

/// A conforming simplicial mesh with precomputed shape-function gradients.
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    pub nodes: Vec<Vec<f64>>,
    pub elements: Vec<Vec<usize>>,
    /// Per element, row `a` holds `∇φ_a` for local vertex `a`.
    shape: Vec<DMatrix<f64>>,
    volume: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadPoint {
    pub x: Vec<f64>,
    pub weight: f64,
    pub element: usize,
}

/// One point per element; exact for integrands constant on elements.
#[derive(Clone, Debug)]
pub struct Quadrature {
    pub points: Vec<QuadPoint>,
}

impl Quadrature {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Mesh {
    pub fn new(dim: usize, nodes: Vec<Vec<f64>>, elements: Vec<Vec<usize>>) -> Result<Self> {
        let mut shape = Vec::with_capacity(elements.len());
        let mut volume = Vec::with_capacity(elements.len());
        for e in &elements {
            if e.len() != dim + 1 {
                return Err(Error::DimensionMismatch { expected: dim + 1, got: e.len() });
            }
            let v0 = &nodes[e[0]];
            let edges = DMatrix::from_fn(dim, dim, |i, j| nodes[e[j + 1]][i] - v0[i]);
            let det = edges.determinant();
            let inv = edges
                .try_inverse()
                .filter(|_| det.abs() > 0.0)
                .ok_or_else(|| Error::InvalidDomain("degenerate mesh element".into()))?;
            // ∇φ_a for a ≥ 1 are the rows of edges⁻¹; ∇φ_0 = −Σ of them
            let mut g = DMatrix::zeros(dim + 1, dim);
            for a in 0..dim {
                g.set_row(a + 1, &inv.row(a));
            }
            let first = -inv.row_sum();
            g.set_row(0, &first);
            shape.push(g);
            volume.push(det.abs() / factorial(dim) as f64);
        }
        Ok(Mesh { dim, nodes, elements, shape, volume })
    }

    /// Kuhn mesh of a box with `resolution` intervals per side, or a subdivided fan for a polygon.
    pub fn for_domain(domain: &Domain, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidParameter("mesh resolution must be positive".into()));
        }
        match domain {
            Domain::Box { lower, upper } => Mesh::kuhn_box(lower, upper, resolution),
            Domain::Polygon { vertices } => Mesh::polygon_fan(vertices, resolution),
        }
    }

    fn kuhn_box(lower: &[f64], upper: &[f64], res: usize) -> Result<Self> {
        let n = lower.len();
        let stride: Vec<usize> = (0..n).map(|i| (res + 1).pow((n - 1 - i) as u32)).collect();
        let index = |m: &[usize]| -> usize { m.iter().zip(&stride).map(|(a, s)| a * s).sum() };
        let nodes: Vec<Vec<f64>> = (0..n)
            .map(|_| 0..=res)
            .multi_cartesian_product()
            .map(|m| (0..n).map(|i| lower[i] + (upper[i] - lower[i]) * m[i] as f64 / res as f64).collect())
            .collect();
        let perms = permutations(n);
        let mut elements = Vec::new();
        for cell in (0..n).map(|_| 0..res).multi_cartesian_product() {
            for p in &perms {
                let mut m = cell.clone();
                let mut e = vec![index(&m)];
                for &d in p {
                    m[d] += 1;
                    e.push(index(&m));
                }
                elements.push(e);
            }
        }
        Mesh::new(n, nodes, elements)
    }

    fn polygon_fan(vertices: &[[f64; 2]], k: usize) -> Result<Self> {
        let nv = vertices.len() as f64;
        let c = vertices.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0] / nv, acc[1] + v[1] / nv]);
        let mut nodes: Vec<Vec<f64>> = Vec::new();
        let mut lookup: HashMap<(i64, i64), usize> = HashMap::new();
        let mut node_id = |p: [f64; 2], nodes: &mut Vec<Vec<f64>>| -> usize {
            let key = ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
            *lookup.entry(key).or_insert_with(|| {
                nodes.push(p.to_vec());
                nodes.len() - 1
            })
        };
        let mut elements = Vec::new();
        for i in 0..vertices.len() {
            let (v, w) = (vertices[i], vertices[(i + 1) % vertices.len()]);
            let point = |a: usize, b: usize| -> [f64; 2] {
                let (s, t) = (a as f64 / k as f64, b as f64 / k as f64);
                [c[0] + s * (v[0] - c[0]) + t * (w[0] - c[0]), c[1] + s * (v[1] - c[1]) + t * (w[1] - c[1])]
            };
            let mut id = HashMap::new();
            for a in 0..=k {
                for b in 0..=k - a {
                    id.insert((a, b), node_id(point(a, b), &mut nodes));
                }
            }
            for a in 0..k {
                for b in 0..k - a {
                    elements.push(vec![id[&(a, b)], id[&(a + 1, b)], id[&(a, b + 1)]]);
                    if a + b + 2 <= k {
                        elements.push(vec![id[&(a + 1, b)], id[&(a + 1, b + 1)], id[&(a, b + 1)]]);
                    }
                }
            }
        }
        Mesh::new(2, nodes, elements)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element_volume(&self, e: usize) -> f64 {
        self.volume[e]
    }

    pub fn centroid(&self, e: usize) -> Vec<f64> {
        let k = self.elements[e].len() as f64;
        (0..self.dim).map(|i| self.elements[e].iter().map(|&a| self.nodes[a][i]).sum::<f64>() / k).collect()
    }

    /// Rows are `∇φ_a` of the element's local vertices.
    pub fn shape_gradients(&self, e: usize) -> &DMatrix<f64> {
        &self.shape[e]
    }

    /// Gradient of the P1 field with nodal values `values[n·node + i]` on element `e`.
    pub fn p1_gradient(&self, e: usize, values: &[f64]) -> DMatrix<f64> {
        let n = self.dim;
        let local = DMatrix::from_fn(n, n + 1, |i, a| values[n * self.elements[e][a] + i]);
        local * &self.shape[e]
    }

    pub fn quadrature(&self) -> Quadrature {
        Quadrature {
            points: (0..self.elements.len())
                .map(|e| QuadPoint { x: self.centroid(e), weight: self.volume[e], element: e })
                .collect(),
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.volume.iter().sum()
    }

    /// Nodes lying on the boundary of `domain` (depth below `tol`).
    pub fn boundary_nodes(&self, domain: &Domain, tol: f64) -> Vec<bool> {
        self.nodes.iter().map(|x| domain.depth(x) <= tol).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_mesh_volume_and_counts() {
        let d = Domain::new_box(vec![0.0, -1.0], vec![2.0, 1.0]).unwrap();
        let m = Mesh::for_domain(&d, 4).unwrap();
        assert_eq!(m.nodes.len(), 25);
        assert_eq!(m.elements.len(), 32);
        assert_relative_eq!(m.total_volume(), 4.0, epsilon = 1e-12);
        let m3 = Mesh::for_domain(&Domain::unit_cube(3), 3).unwrap();
        assert_eq!(m3.elements.len(), 27 * 6);
        assert_relative_eq!(m3.quadrature().total_weight(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn polygon_mesh_volume() {
        let d = Domain::unit_disk(64).unwrap();
        let m = Mesh::for_domain(&d, 3).unwrap();
        assert_relative_eq!(m.total_volume(), d.measure(), epsilon = 1e-12);
        assert_eq!(m.elements.len(), 64 * 9);
        // shared fan edges are merged
        assert_eq!(m.nodes.len(), 1 + 64 * 3 + 64 * 3);
    }

    #[test]
    fn p1_reproduces_affine_maps() {
        let d = Domain::unit_disk(12).unwrap();
        let m = Mesh::for_domain(&d, 2).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.5, -0.3, 0.2, 0.7]);
        let values: Vec<f64> = m
            .nodes
            .iter()
            .flat_map(|x| {
                let y = &a * nalgebra::DVector::from_column_slice(x);
                vec![y[0] + 1.0, y[1] - 2.0]
            })
            .collect();
        for e in 0..m.elements.len() {
            assert_relative_eq!(m.p1_gradient(e, &values), a, epsilon = 1e-12);
        }
    }
}
