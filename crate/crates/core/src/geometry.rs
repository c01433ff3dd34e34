//! Domains, shrunken domains and the Kuhn triangulation of sheared, translated lattices.
//!
//! A lattice frame is the point set `ε (τ + B Zⁿ)` with an integer basis `B` and an
//! integer shift `τ` stored at unit scale. Cell `m` is the open parallelotope
//! `ε (τ + B (m + (0,1)ⁿ))`, and each cell is split into the `n!` simplices
//! `T^π = conv{m, m + e_π(1), …, m + e_π(1) + … + e_π(n)}` mapped through the frame.

use crate::error::{Error, Result};
use crate::linalg::{factorial, permutations, IntMatrix};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Open half-space `normal · x < offset` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    /// Signed distance from `x` to the bounding hyperplane, positive inside.
    pub fn depth(&self, x: &[f64]) -> f64 {
        self.offset - dot(&self.normal, x)
    }
}

/// A bounded open convex domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Axis-aligned box `(lower, upper)` in any dimension.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// Strictly convex polygon with counterclockwise vertices.
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Domain {
    pub fn new_box(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() != upper.len() {
            return Err(Error::InvalidDomain("box corners must have equal, nonzero length".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::InvalidDomain("box requires lower < upper in every coordinate".into()));
        }
        Ok(Domain::Box { lower, upper })
    }

    /// The open unit cube `(0,1)ⁿ`.
    pub fn unit_cube(n: usize) -> Self {
        Domain::Box { lower: vec![0.0; n], upper: vec![1.0; n] }
    }

    pub fn convex_polygon(vertices: Vec<[f64; 2]>) -> Result<Self> {
        let k = vertices.len();
        if k < 3 {
            return Err(Error::InvalidDomain("polygon needs at least three vertices".into()));
        }
        for i in 0..k {
            let a = vertices[i];
            let b = vertices[(i + 1) % k];
            let c = vertices[(i + 2) % k];
            if a == b {
                return Err(Error::InvalidDomain(format!("repeated vertex {a:?}")));
            }
            let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
            if !(cross > 0.0) {
                return Err(Error::InvalidDomain(
                    "polygon must be strictly convex and counterclockwise".into(),
                ));
            }
        }
        // winding number one: total turning of exactly 2π
        let turning: f64 = (0..k)
            .map(|i| {
                let a = vertices[i];
                let b = vertices[(i + 1) % k];
                let c = vertices[(i + 2) % k];
                let t1 = (b[1] - a[1]).atan2(b[0] - a[0]);
                let t2 = (c[1] - b[1]).atan2(c[0] - b[0]);
                let mut d = t2 - t1;
                while d <= -PI {
                    d += 2.0 * PI;
                }
                while d > PI {
                    d -= 2.0 * PI;
                }
                d
            })
            .sum();
        if (turning - 2.0 * PI).abs() > 1e-9 {
            return Err(Error::InvalidDomain("polygon winds more than once".into()));
        }
        Ok(Domain::Polygon { vertices })
    }

    /// Regular polygon inscribed in the circle of given center and radius, with a vertex at angle 0.
    pub fn regular_polygon(center: [f64; 2], radius: f64, sides: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InvalidDomain("polygon radius must be positive".into()));
        }
        let vertices = (0..sides)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / sides as f64;
                [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
            })
            .collect();
        Domain::convex_polygon(vertices)
    }

    /// Inscribed-polygon approximation of the unit disk.
    pub fn unit_disk(sides: usize) -> Result<Self> {
        Domain::regular_polygon([0.0, 0.0], 1.0, sides)
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::Polygon { .. } => 2,
        }
    }

    /// The domain as an intersection of open half-spaces.
    pub fn halfspaces(&self) -> Vec<HalfSpace> {
        match self {
            Domain::Box { lower, upper } => {
                let n = lower.len();
                let mut out = Vec::with_capacity(2 * n);
                for i in 0..n {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    out.push(HalfSpace { normal: e.clone(), offset: upper[i] });
                    e[i] = -1.0;
                    out.push(HalfSpace { normal: e, offset: -lower[i] });
                }
                out
            }
            Domain::Polygon { vertices } => {
                let k = vertices.len();
                (0..k)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % k];
                        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                        let len = (dx * dx + dy * dy).sqrt();
                        let normal = vec![dy / len, -dx / len];
                        let offset = normal[0] * a[0] + normal[1] * a[1];
                        HalfSpace { normal, offset }
                    })
                    .collect()
            }
        }
    }

    /// Distance to the boundary for interior points; nonpositive outside.
    ///
    /// Exact for convex domains, where it is the minimum over the facet hyperplanes.
    pub fn depth(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(x)
                .map(|((l, u), xi)| (xi - l).min(u - xi))
                .fold(f64::INFINITY, f64::min),
            Domain::Polygon { vertices } => {
                let k = vertices.len();
                (0..k)
                    .map(|i| {
                        let (a, b) = (vertices[i], vertices[(i + 1) % k]);
                        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
                        (dx * (x[1] - a[1]) - dy * (x[0] - a[0])) / (dx * dx + dy * dy).sqrt()
                    })
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.depth(x) > 0.0
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::Polygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for i in 0..2 {
                        lo[i] = lo[i].min(v[i]);
                        hi[i] = hi[i].max(v[i]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        match self {
            Domain::Box { lower, upper } => lower.iter().zip(upper).map(|(l, u)| u - l).product(),
            Domain::Polygon { vertices } => {
                let k = vertices.len();
                0.5 * (0..k)
                    .map(|i| {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % k];
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum::<f64>()
            }
        }
    }

    /// Largest distance to the boundary reached on the closed segment `[p, q]`.
    ///
    /// The depth is a minimum of affine functions along the segment, so its maximum is
    /// attained at an endpoint or at a crossing of two facet depths.
    pub fn max_depth_on_segment(&self, p: &[f64], q: &[f64]) -> f64 {
        let hs = self.halfspaces();
        let lines: Vec<(f64, f64)> = hs
            .iter()
            .map(|h| {
                let a = h.depth(p);
                (a, h.depth(q) - a)
            })
            .collect();
        let eval = |t: f64| lines.iter().map(|(a, b)| a + b * t).fold(f64::INFINITY, f64::min);
        let mut best = eval(0.0).max(eval(1.0));
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (a1, b1) = lines[i];
                let (a2, b2) = lines[j];
                if b1 != b2 {
                    let t = (a2 - a1) / (b1 - b2);
                    if t > 0.0 && t < 1.0 {
                        best = best.max(eval(t));
                    }
                }
            }
        }
        best
    }
}

/// The set `Ω_s = {x ∈ Ω : dist(x, ∂Ω) > s}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrunkenDomain {
    pub base: Domain,
    pub s: f64,
}

impl ShrunkenDomain {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.base.depth(x) > self.s
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn halfspaces(&self) -> Vec<HalfSpace> {
        self.base
            .halfspaces()
            .into_iter()
            .map(|h| HalfSpace { offset: h.offset - self.s, normal: h.normal })
            .collect()
    }

    /// For a box the shrunken set is again a box; `None` when it is empty.
    pub fn as_box(&self) -> Option<Domain> {
        match &self.base {
            Domain::Box { lower, upper } => {
                let lo: Vec<f64> = lower.iter().map(|l| l + self.s).collect();
                let hi: Vec<f64> = upper.iter().map(|u| u - self.s).collect();
                Domain::new_box(lo, hi).ok()
            }
            Domain::Polygon { .. } => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        interior_point(&self.halfspaces(), self.dim()).is_none()
    }
}

/// Region accepted by [`crate::lattice::interacting_nodes`].
pub trait Region {
    fn dim(&self) -> usize;
    fn contains(&self, x: &[f64]) -> bool;
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>);
}

impl Region for Domain {
    fn dim(&self) -> usize {
        Domain::dim(self)
    }
    fn contains(&self, x: &[f64]) -> bool {
        Domain::contains(self, x)
    }
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        Domain::bounding_box(self)
    }
}

impl Region for ShrunkenDomain {
    fn dim(&self) -> usize {
        ShrunkenDomain::dim(self)
    }
    fn contains(&self, x: &[f64]) -> bool {
        ShrunkenDomain::contains(self, x)
    }
    fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        self.base.bounding_box()
    }
}

/// Returns `Ω_s`; the membership test is exact for boxes and convex polygons.
pub fn shrink(domain: &Domain, s: f64) -> Result<ShrunkenDomain> {
    if !(s >= 0.0) {
        return Err(Error::NegativeShrink(s));
    }
    Ok(ShrunkenDomain { base: domain.clone(), s })
}

/// The lattice `ε (τ + B Zⁿ)` with integer basis and integer unit-scale shift.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeFrame {
    pub eps: f64,
    pub basis: IntMatrix,
    pub shift: Vec<i64>,
    det: i64,
    adj: IntMatrix,
}

impl LatticeFrame {
    pub fn new(eps: f64, basis: IntMatrix, shift: Vec<i64>) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::NonPositiveScale(eps));
        }
        if shift.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: shift.len() });
        }
        let det = basis.det();
        if det == 0 {
            return Err(Error::SingularBasis);
        }
        let adj = basis.adjugate();
        Ok(LatticeFrame { eps, basis, shift, det, adj })
    }

    /// The canonical lattice `εZⁿ`.
    pub fn canonical(eps: f64, n: usize) -> Result<Self> {
        LatticeFrame::new(eps, IntMatrix::identity(n), vec![0; n])
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn det(&self) -> i64 {
        self.det
    }

    /// Unit-scale integer coordinates of `τ + B p`.
    pub fn node(&self, p: &[i64]) -> Vec<i64> {
        self.basis.mul_vec(p).iter().zip(&self.shift).map(|(a, b)| a + b).collect()
    }

    pub fn position(&self, z: &[i64]) -> Vec<f64> {
        z.iter().map(|&v| v as f64 * self.eps).collect()
    }

    /// Cell coordinates `B⁻¹ (x/ε − τ)` of a physical point.
    pub fn cell_coordinates(&self, x: &[f64]) -> Vec<f64> {
        let local: Vec<f64> =
            x.iter().zip(&self.shift).map(|(xi, t)| xi / self.eps - *t as f64).collect();
        self.adj.mul_vec_f64(&local).iter().map(|v| v / self.det as f64).collect()
    }

    /// Volume of one cell, `εⁿ |det B|`.
    pub fn cell_volume(&self) -> f64 {
        self.eps.powi(self.dim() as i32) * self.det.abs() as f64
    }

    /// Diameter of one cell.
    pub fn cell_diameter(&self) -> f64 {
        let n = self.dim();
        let mut best = 0.0f64;
        // vertex differences of the unit cube are {-1,0,1}ⁿ; |B s| is convex so ±1 patterns suffice
        for mask in 0..(1u32 << n) {
            let s: Vec<i64> = (0..n).map(|i| if mask & (1 << i) != 0 { 1 } else { -1 }).collect();
            let v = self.basis.mul_vec(&s);
            let len = v.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt();
            best = best.max(len);
        }
        best * self.eps
    }

    /// Half-space description of the open cell `m`.
    fn cell_halfspaces(&self, m: &[i64]) -> Vec<HalfSpace> {
        let n = self.dim();
        let d = self.det as f64;
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            // y_i = (adj_i · (x/ε − τ)) / det − m_i
            let row: Vec<f64> = (0..n).map(|j| self.adj.get(i, j) as f64 / (d * self.eps)).collect();
            let c: f64 =
                (0..n).map(|j| self.adj.get(i, j) as f64 * self.shift[j] as f64).sum::<f64>() / d;
            let len = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            let unit: Vec<f64> = row.iter().map(|v| v / len).collect();
            // y_i < 1  ⇔  row·x < 1 + m_i + c
            out.push(HalfSpace { normal: unit.clone(), offset: (1.0 + m[i] as f64 + c) / len });
            // y_i > 0  ⇔  −row·x < −(m_i + c)
            out.push(HalfSpace {
                normal: unit.iter().map(|v| -v).collect(),
                offset: -(m[i] as f64 + c) / len,
            });
        }
        out
    }
}

/// The simplex `T^π` of cell `cell`, identified by the cell index and the permutation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Simplex {
    pub cell: Vec<i64>,
    pub perm: Vec<usize>,
}

impl Simplex {
    /// Unit-scale lattice coordinates of the `n + 1` vertices along the edge chain.
    pub fn vertex_nodes(&self, frame: &LatticeFrame) -> Vec<Vec<i64>> {
        let mut p = self.cell.clone();
        let mut out = Vec::with_capacity(self.perm.len() + 1);
        out.push(frame.node(&p));
        for &dir in &self.perm {
            p[dir] += 1;
            out.push(frame.node(&p));
        }
        out
    }

    pub fn vertices(&self, frame: &LatticeFrame) -> Vec<Vec<f64>> {
        self.vertex_nodes(frame).iter().map(|z| frame.position(z)).collect()
    }

    /// `εⁿ |det B| / n!`.
    pub fn volume(&self, frame: &LatticeFrame) -> f64 {
        frame.cell_volume() / factorial(frame.dim()) as f64
    }

    /// Position in the chain at which direction `j` is traversed, i.e. `π⁻¹(j)` (zero-based).
    pub fn step_of(&self, j: usize) -> usize {
        self.perm.iter().position(|&d| d == j).expect("perm is a permutation")
    }
}

/// Kuhn triangulation of the cells of a frame that meet `Ω_margin`.
#[derive(Clone, Debug)]
pub struct Triangulation {
    pub frame: LatticeFrame,
    pub cells: Vec<Vec<i64>>,
    perms: Vec<Vec<usize>>,
}

impl Triangulation {
    pub fn new(frame: LatticeFrame, cells: Vec<Vec<i64>>) -> Self {
        let perms = permutations(frame.dim());
        Triangulation { frame, cells, perms }
    }

    /// Triangulates the cells of `frame` meeting `Ω_margin`.
    pub fn covering(domain: &Domain, frame: LatticeFrame, margin: f64) -> Result<Self> {
        let cells = covered_cells(domain, &frame, margin)?;
        Ok(Triangulation::new(frame, cells))
    }

    pub fn dim(&self) -> usize {
        self.frame.dim()
    }

    pub fn simplex_count(&self) -> usize {
        self.cells.len() * self.perms.len()
    }

    /// All simplices, cell by cell, permutations in lexicographic order.
    pub fn simplices(&self) -> impl Iterator<Item = Simplex> + '_ {
        self.cells.iter().flat_map(move |c| {
            self.perms.iter().map(move |p| Simplex { cell: c.clone(), perm: p.clone() })
        })
    }

    pub fn total_volume(&self) -> f64 {
        self.cells.len() as f64 * self.frame.cell_volume()
    }
}

/// Enumerates `T^π_α` for every covered cell; alias kept for the operation name.
pub fn enumerate_simplices(t: &Triangulation) -> impl Iterator<Item = Simplex> + '_ {
    t.simplices()
}

/// Cells `m` (lexicographic) whose open cell `ε(τ + B(m + (0,1)ⁿ))` meets `Ω_margin`.
pub fn covered_cells(domain: &Domain, frame: &LatticeFrame, margin: f64) -> Result<Vec<Vec<i64>>> {
    if !(margin >= 0.0) {
        return Err(Error::NegativeShrink(margin));
    }
    let n = frame.dim();
    if domain.dim() != n {
        return Err(Error::DimensionMismatch { expected: domain.dim(), got: n });
    }
    let shrunk = shrink(domain, margin)?;
    let region = shrunk.halfspaces();
    let verts = match polytope_vertices(&region, n) {
        Some(v) if v.len() > n => v,
        _ => return Ok(Vec::new()),
    };
    if interior_point(&region, n).is_none() {
        return Ok(Vec::new());
    }
    // range of cell coordinates spanned by Ω_margin
    let mut lo = vec![f64::INFINITY; n];
    let mut hi = vec![f64::NEG_INFINITY; n];
    for v in &verts {
        let y = frame.cell_coordinates(v);
        for i in 0..n {
            lo[i] = lo[i].min(y[i]);
            hi[i] = hi[i].max(y[i]);
        }
    }
    let ranges: Vec<(i64, i64)> =
        lo.iter().zip(&hi).map(|(l, h)| (l.floor() as i64 - 1, h.ceil() as i64)).collect();
    let mut cells = Vec::new();
    let mut m: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    loop {
        let mut constraints = frame.cell_halfspaces(&m);
        constraints.extend(region.iter().cloned());
        if interior_point(&constraints, n).is_some() {
            cells.push(m.clone());
        }
        // odometer, last coordinate fastest ⇒ lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return Ok(cells);
            }
            i -= 1;
            m[i] += 1;
            if m[i] <= ranges[i].1 {
                break;
            }
            m[i] = ranges[i].0;
        }
    }
}

/// Vertices of the closed polytope `{x : normal·x ≤ offset}`, or `None` if it has none.
fn polytope_vertices(hs: &[HalfSpace], n: usize) -> Option<Vec<Vec<f64>>> {
    let tol = 1e-11;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let k = hs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    if k < n {
        return None;
    }
    loop {
        let a = DMatrix::from_fn(n, n, |r, c| hs[idx[r]].normal[c]);
        let b = DVector::from_fn(n, |r, _| hs[idx[r]].offset);
        if let Some(x) = a.lu().solve(&b) {
            let x: Vec<f64> = x.iter().copied().collect();
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if x.iter().all(|v| v.is_finite()) && hs.iter().all(|h| h.depth(&x) >= -tol * scale) {
                out.push(x);
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return if out.is_empty() { None } else { Some(out) };
            }
            i -= 1;
            if idx[i] < k - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// A point strictly inside the open polytope, if its interior is nonempty.
///
/// The vertex centroid of a bounded full-dimensional polytope is interior; for a
/// degenerate (lower-dimensional or empty) intersection it is not.
fn interior_point(hs: &[HalfSpace], n: usize) -> Option<Vec<f64>> {
    let verts = polytope_vertices(hs, n)?;
    let mut c = vec![0.0; n];
    for v in &verts {
        for i in 0..n {
            c[i] += v[i] / verts.len() as f64;
        }
    }
    let extent = verts
        .iter()
        .map(|v| v.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        .fold(0.0, f64::max);
    let tol = 1e-10 * extent.max(f64::MIN_POSITIVE);
    if extent > 0.0 && hs.iter().all(|h| h.depth(&c) > tol) {
        Some(c)
    } else {
        None
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
