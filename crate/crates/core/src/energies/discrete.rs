use crate::deformation::Deformation;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Region};
use crate::lattice::{enumerate_shell, integer_box, interacting_nodes};
use crate::linalg::pairwise_sum;
use crate::metric::MetricField;
use nalgebra::{DMatrix, DVector};
use std::cell::RefCell;
use std::collections::HashMap;

/// Interaction weights `ψ(|ξ|)` on finitely many squared lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct Cutoff {
    terms: Vec<CutoffTerm>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffTerm {
    pub radius_sq: u64,
    pub weight: f64,
}

impl CutoffTerm {
    pub fn radius(&self) -> f64 {
        (self.radius_sq as f64).sqrt()
    }
}

impl Cutoff {
    /// Zero weights are dropped; terms are sorted by length.
    pub fn new(pairs: &[(u64, f64)]) -> Result<Self> {
        let mut terms: Vec<CutoffTerm> = Vec::new();
        for &(radius_sq, weight) in pairs {
            if radius_sq == 0 {
                return Err(Error::InvalidParameter("cutoff radius must be positive".into()));
            }
            if !(weight >= 0.0) || !weight.is_finite() {
                return Err(Error::InvalidParameter(format!("cutoff weight {weight} for radius² {radius_sq}")));
            }
            if terms.iter().any(|t| t.radius_sq == radius_sq) {
                return Err(Error::InvalidParameter(format!("radius² {radius_sq} listed twice")));
            }
            if weight > 0.0 {
                terms.push(CutoffTerm { radius_sq, weight });
            }
        }
        terms.sort_by_key(|t| t.radius_sq);
        Ok(Cutoff { terms })
    }

    pub fn nearest() -> Self {
        Cutoff { terms: vec![CutoffTerm { radius_sq: 1, weight: 1.0 }] }
    }

    /// Diagonal interactions only.
    pub fn next_nearest() -> Self {
        Cutoff { terms: vec![CutoffTerm { radius_sq: 2, weight: 1.0 }] }
    }

    pub fn terms(&self) -> &[CutoffTerm] {
        &self.terms
    }

    /// The range `M`: the largest interacting length.
    pub fn max_range(&self) -> f64 {
        self.terms.iter().map(|t| t.radius()).fold(0.0, f64::max)
    }
}

/// Nodal values on `εZⁿ ∩ Ω`, keyed by unit-scale integer coordinates.
///
/// Every sheared and translated lattice used by the representation is a sublattice of `Zⁿ`,
/// so one node table serves all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteDeformation {
    eps: f64,
    dim: usize,
    nodes: Vec<Vec<i64>>,
    index: HashMap<Vec<i64>, usize>,
    values: Vec<f64>,
}

/// Lattice nodes strictly inside the region, in lexicographic order.
pub fn lattice_nodes<R: Region + ?Sized>(region: &R, eps: f64) -> Result<Vec<Vec<i64>>> {
    if !(eps > 0.0) {
        return Err(Error::NonPositiveScale(eps));
    }
    let (lo, hi) = region.bounding_box();
    let lo: Vec<i64> = lo.iter().map(|v| (v / eps).floor() as i64).collect();
    let hi: Vec<i64> = hi.iter().map(|v| (v / eps).ceil() as i64).collect();
    Ok(integer_box(&lo, &hi)
        .into_iter()
        .filter(|z| region.contains(&z.iter().map(|&v| v as f64 * eps).collect::<Vec<_>>()))
        .collect())
}

impl DiscreteDeformation {
    pub fn from_values(eps: f64, dim: usize, nodes: Vec<Vec<i64>>, values: Vec<f64>) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::NonPositiveScale(eps));
        }
        if values.len() != dim * nodes.len() {
            return Err(Error::DimensionMismatch { expected: dim * nodes.len(), got: values.len() });
        }
        if let Some(z) = nodes.iter().find(|z| z.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, got: z.len() });
        }
        let index = nodes.iter().enumerate().map(|(i, z)| (z.clone(), i)).collect();
        Ok(DiscreteDeformation { eps, dim, nodes, index, values })
    }

    /// Values `f(εz)` on the given nodes.
    pub fn from_fn(eps: f64, dim: usize, nodes: Vec<Vec<i64>>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(dim * nodes.len());
        for z in &nodes {
            let x: Vec<f64> = z.iter().map(|&v| v as f64 * eps).collect();
            let y = f(&x);
            if y.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: y.len() });
            }
            values.extend(y);
        }
        DiscreteDeformation::from_values(eps, dim, nodes, values)
    }

    /// Restriction of an analytic map to `εZⁿ ∩ Ω`.
    pub fn sample<D: Deformation + ?Sized>(map: &D, eps: f64, domain: &Domain) -> Result<Self> {
        let nodes = lattice_nodes(domain, eps)?;
        DiscreteDeformation::from_fn(eps, domain.dim(), nodes, |x| map.value(x))
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec<i64>] {
        &self.nodes
    }

    pub fn index_of(&self, z: &[i64]) -> Option<usize> {
        self.index.get(z).copied()
    }

    pub fn position(&self, i: usize) -> Vec<f64> {
        self.nodes[i].iter().map(|&v| v as f64 * self.eps).collect()
    }

    pub fn value(&self, z: &[i64]) -> Result<&[f64]> {
        let i = self.index_of(z).ok_or_else(|| Error::MissingNode(z.to_vec()))?;
        Ok(self.value_at(i))
    }

    pub fn value_at(&self, i: usize) -> &[f64] {
        &self.values[self.dim * i..self.dim * (i + 1)]
    }

    /// Flat values, `dim` entries per node in node order.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch { expected: self.values.len(), got: values.len() });
        }
        self.values = values;
        Ok(())
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        let mut out = self.clone();
        out.set_values(values)?;
        Ok(out)
    }

    /// Applies `y ↦ R y + c` to every nodal value.
    pub fn rigid_motion(&self, rotation: &DMatrix<f64>, shift: &[f64]) -> Self {
        let mut out = self.clone();
        let c = DVector::from_column_slice(shift);
        for chunk in out.values.chunks_mut(self.dim) {
            let y = rotation * DVector::from_column_slice(chunk) + &c;
            chunk.copy_from_slice(y.as_slice());
        }
        out
    }
}

/// `A` at lattice nodes, computed once per node.
pub(crate) struct NodeRoots<'a, M: ?Sized> {
    metric: &'a M,
    eps: f64,
    cache: RefCell<HashMap<Vec<i64>, DMatrix<f64>>>,
}

impl<'a, M: MetricField + ?Sized> NodeRoots<'a, M> {
    pub(crate) fn new(metric: &'a M, eps: f64) -> Self {
        NodeRoots { metric, eps, cache: RefCell::new(HashMap::new()) }
    }

    pub(crate) fn at(&self, z: &[i64]) -> Result<DMatrix<f64>> {
        if let Some(a) = self.cache.borrow().get(z) {
            return Ok(a.clone());
        }
        let x: Vec<f64> = z.iter().map(|&v| v as f64 * self.eps).collect();
        let a = self.metric.sqrt_at(&x)?;
        self.cache.borrow_mut().insert(z.to_vec(), a.clone());
        Ok(a)
    }
}

/// One directed pair `(α, α + εξ)` with its rest length `ε|A(α)ξ|`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interaction {
    pub from: usize,
    pub to: usize,
    /// `εⁿ ψ(|ξ|)`.
    pub weight: f64,
    pub rest_length: f64,
    /// Position of the shell in the cutoff.
    pub shell: usize,
    pub direction: Vec<i64>,
}

/// All interactions of `E_ε` on a fixed node set.
#[derive(Clone, Debug)]
pub struct InteractionSet {
    pub eps: f64,
    pub dim: usize,
    pub interactions: Vec<Interaction>,
    pub shells: Vec<CutoffTerm>,
}

impl InteractionSet {
    pub fn build<M: MetricField + ?Sized, R: Region + ?Sized>(
        u: &DiscreteDeformation,
        metric: &M,
        cutoff: &Cutoff,
        region: &R,
    ) -> Result<Self> {
        let n = u.dim();
        if metric.dim() != n || region.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: metric.dim().min(region.dim()) });
        }
        let eps = u.eps();
        let roots = NodeRoots::new(metric, eps);
        let mut interactions = Vec::new();
        for (s, term) in cutoff.terms().iter().enumerate() {
            let weight = eps.powi(n as i32) * term.weight;
            for xi in enumerate_shell(term.radius_sq, n)?.vectors() {
                let xi_f = DVector::from_iterator(n, xi.iter().map(|&v| v as f64));
                for alpha in interacting_nodes(&xi, eps, region)? {
                    let target: Vec<i64> = alpha.iter().zip(&xi).map(|(a, b)| a + b).collect();
                    let from = u.index_of(&alpha).ok_or_else(|| Error::MissingNode(alpha.clone()))?;
                    let to = u.index_of(&target).ok_or(Error::MissingNode(target))?;
                    let rest_length = eps * (roots.at(&alpha)? * &xi_f).norm();
                    interactions.push(Interaction { from, to, weight, rest_length, shell: s, direction: xi.clone() });
                }
            }
        }
        Ok(InteractionSet { eps, dim: n, interactions, shells: cutoff.terms().to_vec() })
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }

    fn stretch(&self, it: &Interaction, values: &[f64]) -> f64 {
        let n = self.dim;
        (0..n)
            .map(|i| (values[n * it.to + i] - values[n * it.from + i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// `εⁿ ψ (|u(α+εξ) − u(α)| / (ε|A(α)ξ|) − 1)²`.
    pub fn term(&self, k: usize, values: &[f64]) -> f64 {
        let it = &self.interactions[k];
        it.weight * (self.stretch(it, values) / it.rest_length - 1.0).powi(2)
    }

    pub fn energy(&self, values: &[f64]) -> f64 {
        let terms: Vec<f64> = (0..self.len()).map(|k| self.term(k, values)).collect();
        pairwise_sum(&terms)
    }

    /// Energy restricted to each cutoff shell, in cutoff order.
    pub fn per_shell(&self, values: &[f64]) -> Vec<f64> {
        (0..self.shells.len())
            .map(|s| {
                let terms: Vec<f64> = (0..self.len())
                    .filter(|&k| self.interactions[k].shell == s)
                    .map(|k| self.term(k, values))
                    .collect();
                pairwise_sum(&terms)
            })
            .collect()
    }

    /// Energy with lengths smoothed to `√(r² + η²)`, and its gradient written into `grad`.
    pub fn smoothed_energy_and_gradient(&self, values: &[f64], eta: f64, grad: &mut [f64]) -> f64 {
        self.smoothed_energy_and_gradient_with(values, eta, grad, 1)
    }

    /// As [`Self::smoothed_energy_and_gradient`], splitting the interactions over `workers` threads.
    ///
    /// The value does not depend on `workers`; the gradient is summed chunk by chunk in a fixed order.
    pub fn smoothed_energy_and_gradient_with(&self, values: &[f64], eta: f64, grad: &mut [f64], workers: usize) -> f64 {
        let workers = workers.clamp(1, self.len().max(1));
        let chunk = self.len().div_ceil(workers).max(1);
        if workers == 1 {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let terms = self.smoothed_chunk(&self.interactions, values, eta, grad);
            return pairwise_sum(&terms);
        }
        let parts: Vec<(Vec<f64>, Vec<f64>)> = std::thread::scope(|scope| {
            let handles: Vec<_> = self
                .interactions
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        let mut local = vec![0.0; values.len()];
                        let terms = self.smoothed_chunk(part, values, eta, &mut local);
                        (terms, local)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut terms = Vec::with_capacity(self.len());
        for (t, local) in parts {
            terms.extend(t);
            grad.iter_mut().zip(&local).for_each(|(g, l)| *g += l);
        }
        pairwise_sum(&terms)
    }

    fn smoothed_chunk(&self, part: &[Interaction], values: &[f64], eta: f64, grad: &mut [f64]) -> Vec<f64> {
        let n = self.dim;
        let mut terms = Vec::with_capacity(part.len());
        let mut d = vec![0.0; n];
        for it in part {
            for i in 0..n {
                d[i] = values[n * it.to + i] - values[n * it.from + i];
            }
            let r = (d.iter().map(|v| v * v).sum::<f64>() + eta * eta).sqrt();
            let strain = r / it.rest_length - 1.0;
            terms.push(it.weight * strain * strain);
            let coef = 2.0 * it.weight * strain / (it.rest_length * r);
            for i in 0..n {
                grad[n * it.to + i] += coef * d[i];
                grad[n * it.from + i] -= coef * d[i];
            }
        }
        terms
    }
}

/// `E_ε(u)` over every `ξ` with `ψ(|ξ|) > 0` and every `α ∈ R_ε^ξ(Ω)`.
pub fn discrete_energy<M: MetricField + ?Sized>(
    u: &DiscreteDeformation,
    metric: &M,
    cutoff: &Cutoff,
    domain: &Domain,
) -> Result<f64> {
    Ok(InteractionSet::build(u, metric, cutoff, domain)?.energy(u.values()))
}
