use anyhow::{bail, ensure, Context, Result};
use nalgebra::{DMatrix, DVector};
use prestrain_lattice::deformation::{AffineMap, Deformation, IdentityMap, ShearSine};
use prestrain_lattice::energies::{Cutoff, DiscreteDeformation, LimitCase};
use prestrain_lattice::geometry::Domain;
use prestrain_lattice::metric::{
    example1_metric, example2_metric, AngleField, ConstantMetric, Example1Metric, IdentityMetric, MetricField,
};
use prestrain_lattice::minimize::lbfgs::LbfgsOptions;
use prestrain_lattice::minimize::{ContinuumOptions, DiscreteOptions, GaugeFixing, StudyOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::PathBuf;
use std::sync::Arc;

pub const WORKERS_ENV: &str = "PRESTRAIN_WORKERS";

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub workers: Option<usize>,
    #[serde(default)]
    pub domain: DomainSpec,
    #[serde(default)]
    pub metric: MetricSpec,
    #[serde(default)]
    pub cutoff: Vec<CutoffEntry>,
    pub deformation: Option<DeformationSpec>,
    #[serde(default = "default_eps")]
    pub eps: EpsSpec,
    #[serde(default = "default_case")]
    pub case: String,
    #[serde(default)]
    pub minimize: MinimizeSpec,
    #[serde(default)]
    pub continuum: ContinuumSpec,
    #[serde(default)]
    pub curvature: CurvatureSpec,
    #[serde(default)]
    pub output: OutputSpec,
}

fn default_eps() -> EpsSpec {
    EpsSpec::Single(0.125)
}

fn default_case() -> String {
    "nearest-2d".into()
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(untagged)]
pub enum EpsSpec {
    Single(f64),
    Ladder(Vec<f64>),
}

impl EpsSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            EpsSpec::Single(e) => vec![*e],
            EpsSpec::Ladder(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DomainSpec {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Polygon { vertices: Vec<[f64; 2]> },
    RegularPolygon { center: [f64; 2], radius: f64, sides: usize },
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] }
    }
}

impl DomainSpec {
    pub fn build(&self) -> Result<Domain> {
        Ok(match self {
            DomainSpec::Box { lower, upper } => Domain::new_box(lower.clone(), upper.clone())?,
            DomainSpec::Polygon { vertices } => Domain::convex_polygon(vertices.clone())?,
            DomainSpec::RegularPolygon { center, radius, sides } => Domain::regular_polygon(*center, *radius, *sides)?,
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MetricSpec {
    Identity { dim: usize },
    /// Row-major entries.
    Constant { dim: usize, entries: Vec<f64> },
    Diagonal { entries: Vec<f64> },
    /// `g = 2 + a (x₁ + b)²`.
    Example1 { a: f64, b: f64 },
    /// `g` integrated from `g(0)`, `g′(0)`.
    Example1Ode { g0: f64, g1: f64 },
    /// `w = offset + coupling · x₁ x₂`.
    Example2 { offset: f64, coupling: f64 },
}

impl Default for MetricSpec {
    fn default() -> Self {
        MetricSpec::Identity { dim: 2 }
    }
}

impl MetricSpec {
    pub fn build(&self) -> Result<Arc<dyn MetricField>> {
        Ok(match self {
            MetricSpec::Identity { dim } => Arc::new(IdentityMetric { n: *dim }),
            MetricSpec::Constant { dim, entries } => {
                ensure!(entries.len() == dim * dim, "constant metric needs {} entries, got {}", dim * dim, entries.len());
                Arc::new(ConstantMetric::new(DMatrix::from_row_slice(*dim, *dim, entries))?)
            }
            MetricSpec::Diagonal { entries } => Arc::new(ConstantMetric::diagonal(entries)?),
            MetricSpec::Example1 { a, b } => Arc::new(example1_metric(*a, *b)?),
            MetricSpec::Example1Ode { g0, g1 } => Arc::new(Example1Metric::from_initial_data(*g0, *g1)?),
            MetricSpec::Example2 { offset, coupling } => {
                Arc::new(example2_metric(AngleField::Bilinear { offset: *offset, coupling: *coupling }))
            }
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CutoffEntry {
    pub radius_sq: u64,
    pub weight: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(tag = "name", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DeformationSpec {
    Identity,
    /// `u(x) = M x + c`, `M` row-major.
    Affine { matrix: Vec<f64>, #[serde(default)] offset: Vec<f64> },
    /// `u(x) = (x₁ + amplitude · sin x₂, x₂)`.
    ShearSine { amplitude: f64 },
    /// `u(x) = M x` plus uniform nodal noise of size `noise · ε`, drawn from the run seed.
    Noisy { matrix: Vec<f64>, noise: f64 },
}

fn square_matrix(entries: &[f64], n: usize) -> Result<DMatrix<f64>> {
    ensure!(entries.len() == n * n, "expected {} matrix entries, got {}", n * n, entries.len());
    Ok(DMatrix::from_row_slice(n, n, entries))
}

impl DeformationSpec {
    fn analytic(&self, n: usize) -> Result<Box<dyn Deformation>> {
        Ok(match self {
            DeformationSpec::Identity => Box::new(IdentityMap { n }),
            DeformationSpec::Affine { matrix, offset } => {
                let offset = if offset.is_empty() { vec![0.0; n] } else { offset.clone() };
                ensure!(offset.len() == n, "offset has {} entries, expected {n}", offset.len());
                Box::new(AffineMap { linear: square_matrix(matrix, n)?, offset: DVector::from_vec(offset) })
            }
            DeformationSpec::ShearSine { amplitude } => {
                ensure!(n == 2, "shear-sine is two-dimensional");
                Box::new(ShearSine { amplitude: *amplitude })
            }
            DeformationSpec::Noisy { matrix, .. } => Box::new(AffineMap::linear(square_matrix(matrix, n)?)),
        })
    }

    /// The deformation restricted to `εZⁿ ∩ Ω`.
    pub fn sample(&self, domain: &Domain, eps: f64, seed: u64) -> Result<DiscreteDeformation> {
        let u = DiscreteDeformation::sample(&*self.analytic(domain.dim())?, eps, domain)?;
        match self {
            DeformationSpec::Noisy { noise, .. } => {
                ensure!(*noise >= 0.0, "noise must be nonnegative");
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let values = u.values().iter().map(|v| v + noise * eps * rng.random_range(-1.0..1.0)).collect();
                Ok(u.with_values(values)?)
            }
            _ => Ok(u),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeSpec {
    pub tol: f64,
    pub max_iter: usize,
    pub memory: usize,
    pub smoothing: f64,
    /// `"mean"` or `"node:<index>"`.
    pub gauge: String,
}

impl Default for MinimizeSpec {
    fn default() -> Self {
        let l = LbfgsOptions::default();
        let d = DiscreteOptions::default();
        MinimizeSpec { tol: l.tol, max_iter: l.max_iter, memory: l.memory, smoothing: d.smoothing, gauge: "mean".into() }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct ContinuumSpec {
    pub resolution: usize,
    pub regularization: f64,
}

impl Default for ContinuumSpec {
    fn default() -> Self {
        let c = ContinuumOptions::default();
        ContinuumSpec { resolution: c.resolution, regularization: c.regularization }
    }
}

/// Sample grid of the bounding box and finite-difference step.
#[derive(Clone, Debug, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CurvatureSpec {
    pub grid: usize,
    pub step: f64,
}

impl Default for CurvatureSpec {
    fn default() -> Self {
        CurvatureSpec { grid: 10, step: 1e-3 }
    }
}

#[derive(Clone, Debug, Default, Deserialize, Serialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub csv: Option<PathBuf>,
    pub svg: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut config: RunConfig = toml::from_str(text)?;
        config.workers = Some(config.resolved_workers()?);
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    fn resolved_workers(&self) -> Result<usize> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(s) => s.trim().parse().with_context(|| format!("{WORKERS_ENV}={s:?} is not a worker count")),
            Err(_) => Ok(1),
        }
    }

    fn validate(&self) -> Result<()> {
        ensure!(self.workers.is_some_and(|w| w >= 1), "workers must be at least 1");
        let domain = self.domain.build()?;
        let metric = self.metric.build()?;
        ensure!(
            metric.dim() == domain.dim(),
            "metric has dimension {} but the domain has dimension {}",
            metric.dim(),
            domain.dim()
        );
        let eps = self.eps.values();
        ensure!(!eps.is_empty(), "eps list is empty");
        if let Some(bad) = eps.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            bail!("eps must be positive, got {bad}");
        }
        self.case()?;
        self.cutoff()?;
        self.gauge()?;
        ensure!(self.minimize.tol > 0.0, "minimize.tol must be positive");
        ensure!(self.minimize.memory >= 1, "minimize.memory must be at least 1");
        ensure!(self.minimize.smoothing >= 0.0, "minimize.smoothing must be nonnegative");
        ensure!(self.continuum.resolution >= 1, "continuum.resolution must be at least 1");
        ensure!(self.continuum.regularization >= 0.0, "continuum.regularization must be nonnegative");
        ensure!(self.curvature.grid >= 1, "curvature.grid must be at least 1");
        ensure!(self.curvature.step > 0.0, "curvature.step must be positive");
        if let Some(d) = &self.deformation {
            d.analytic(domain.dim())?;
        }
        Ok(())
    }

    pub fn case(&self) -> Result<LimitCase> {
        Ok(self.case.parse()?)
    }

    /// The `[[cutoff]]` table, nearest neighbours when absent.
    pub fn cutoff(&self) -> Result<Cutoff> {
        if self.cutoff.is_empty() {
            return Ok(Cutoff::nearest());
        }
        let pairs: Vec<(u64, f64)> = self.cutoff.iter().map(|c| (c.radius_sq, c.weight)).collect();
        Ok(Cutoff::new(&pairs)?)
    }

    fn gauge(&self) -> Result<GaugeFixing> {
        match self.minimize.gauge.as_str() {
            "mean" => Ok(GaugeFixing::PinMean),
            other => match other.strip_prefix("node:").map(str::parse) {
                Some(Ok(i)) => Ok(GaugeFixing::PinNode(i)),
                _ => bail!("minimize.gauge must be \"mean\" or \"node:<index>\", got {other:?}"),
            },
        }
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn discrete_options(&self) -> Result<DiscreteOptions> {
        Ok(DiscreteOptions {
            gauge: self.gauge()?,
            lbfgs: LbfgsOptions {
                memory: self.minimize.memory,
                tol: self.minimize.tol,
                max_iter: self.minimize.max_iter,
                ..Default::default()
            },
            smoothing: self.minimize.smoothing,
            workers: self.workers(),
        })
    }

    pub fn study_options(&self) -> Result<StudyOptions> {
        let discrete = self.discrete_options()?;
        Ok(StudyOptions {
            discrete,
            continuum: ContinuumOptions {
                resolution: self.continuum.resolution,
                lbfgs: discrete.lbfgs,
                regularization: self.continuum.regularization,
                initial: None,
            },
        })
    }

    /// The resolved configuration as TOML, with every default filled in.
    pub fn resolved(&self) -> String {
        toml::to_string(self).expect("configuration serialises")
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.resolved().as_bytes()))
    }
}
