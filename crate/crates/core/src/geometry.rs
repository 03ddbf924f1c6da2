//! Geometry of Lipschitz graph domains.
//!
//! The domain is the region above the graph of an L-Lipschitz function
//! `phi: R^n -> R`, embedded in `R^(n+1)`. All bookkeeping uses
//! graph-adapted coordinates `(x, h)` with `h = y - phi(x)`, so a "curved
//! cube" (a dyadic base cube with the vertical slab of matching height
//! hugging the graph) is simply the straight box `Q x [0, l(Q)]`. Dyadic
//! indices are exact integers; only evaluations of `phi` introduce floats.

use std::sync::Arc;

use crate::error::{LabError, Result};

/// Shape of the boundary function `phi`.
#[derive(Clone)]
pub enum GraphShape {
    /// `phi(x) = level`.
    Flat { level: f64 },
    /// `phi(x) = slope . x + offset`.
    Linear { slope: Vec<f64>, offset: f64 },
    /// `phi(x) = slope * |x|` (one-dimensional vee).
    Vee { slope: f64 },
    /// Piecewise-linear interpolation through sorted samples (n = 1).
    /// Outside the sampled range the boundary continues with the value of
    /// the nearest endpoint, which keeps the Lipschitz constant.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
    /// Arbitrary evaluator with a declared Lipschitz constant.
    Custom(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for GraphShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            GraphShape::Flat { level } => write!(f, "Flat {{ level: {level} }}"),
            GraphShape::Linear { slope, offset } => {
                write!(f, "Linear {{ slope: {slope:?}, offset: {offset} }}")
            }
            GraphShape::Vee { slope } => write!(f, "Vee {{ slope: {slope} }}"),
            GraphShape::Sampled { xs, .. } => write!(f, "Sampled {{ {} points }}", xs.len()),
            GraphShape::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// An L-Lipschitz graph boundary in `R^(n+1)`.
#[derive(Clone, Debug)]
pub struct LipschitzGraph {
    n: usize,
    lipschitz: f64,
    shape: GraphShape,
}

impl LipschitzGraph {
    /// Flat boundary `phi = level` in dimension `n`.
    pub fn flat(n: usize, level: f64) -> Self {
        LipschitzGraph {
            n,
            lipschitz: 0.0,
            shape: GraphShape::Flat { level },
        }
    }

    /// Affine boundary; the Lipschitz constant is the Euclidean norm of the
    /// slope vector.
    pub fn linear(slope: Vec<f64>, offset: f64) -> Self {
        let lipschitz = slope.iter().map(|s| s * s).sum::<f64>().sqrt();
        let n = slope.len();
        LipschitzGraph {
            n,
            lipschitz,
            shape: GraphShape::Linear { slope, offset },
        }
    }

    /// One-dimensional vee `phi(x) = slope * |x|`.
    pub fn vee(slope: f64) -> Self {
        LipschitzGraph {
            n: 1,
            lipschitz: slope.abs(),
            shape: GraphShape::Vee { slope },
        }
    }

    /// Piecewise-linear boundary through `(xs[i], ys[i])` (n = 1). The
    /// samples must be strictly increasing in `x` and finite; the Lipschitz
    /// constant is the largest absolute segment slope.
    pub fn from_samples(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(LabError::InvalidData(
                "boundary samples need at least two (x, phi) pairs".into(),
            ));
        }
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(LabError::InvalidData(
                "boundary samples must be finite".into(),
            ));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::InvalidData(
                "boundary sample x-coordinates must be strictly increasing".into(),
            ));
        }
        let lipschitz = xs
            .windows(2)
            .zip(ys.windows(2))
            .map(|(xw, yw)| ((yw[1] - yw[0]) / (xw[1] - xw[0])).abs())
            .fold(0.0_f64, f64::max);
        Ok(LipschitzGraph {
            n: 1,
            lipschitz,
            shape: GraphShape::Sampled { xs, ys },
        })
    }

    /// Custom evaluator with a declared Lipschitz constant. The constant is
    /// trusted; `ball_box_check` can expose a misdeclared one.
    pub fn custom(
        n: usize,
        lipschitz: f64,
        phi: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    ) -> Self {
        LipschitzGraph {
            n,
            lipschitz,
            shape: GraphShape::Custom(phi),
        }
    }

    /// Boundary dimension `n` (the domain lives in `R^(n+1)`).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Lipschitz constant of `phi`.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn shape(&self) -> &GraphShape {
        &self.shape
    }

    /// Evaluate `phi` at a base point.
    pub fn phi(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        match &self.shape {
            GraphShape::Flat { level } => *level,
            GraphShape::Linear { slope, offset } => {
                offset + slope.iter().zip(x).map(|(s, xi)| s * xi).sum::<f64>()
            }
            GraphShape::Vee { slope } => slope * x[0].abs(),
            GraphShape::Sampled { xs, ys } => {
                let t = x[0];
                if t <= xs[0] {
                    return ys[0];
                }
                if t >= *xs.last().unwrap() {
                    return *ys.last().unwrap();
                }
                let i = xs.partition_point(|&v| v <= t) - 1;
                let w = (t - xs[i]) / (xs[i + 1] - xs[i]);
                ys[i] + w * (ys[i + 1] - ys[i])
            }
            GraphShape::Custom(f) => f(x),
        }
    }

    /// One-dimensional convenience for `phi`.
    pub fn phi1(&self, x: f64) -> f64 {
        self.phi(&[x])
    }

    /// Gradient of `phi`; analytic where the shape allows, central finite
    /// differences (step `1e-6`) otherwise. At a vee kink the subgradient 0
    /// is returned.
    pub fn grad_phi(&self, x: &[f64]) -> Vec<f64> {
        match &self.shape {
            GraphShape::Flat { .. } => vec![0.0; self.n],
            GraphShape::Linear { slope, .. } => slope.clone(),
            GraphShape::Vee { slope } => {
                if x[0] == 0.0 {
                    vec![0.0]
                } else {
                    vec![slope * x[0].signum()]
                }
            }
            GraphShape::Sampled { xs, ys } => {
                let t = x[0];
                if t <= xs[0] || t >= *xs.last().unwrap() {
                    return vec![0.0];
                }
                let i = xs.partition_point(|&v| v <= t) - 1;
                vec![(ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])]
            }
            GraphShape::Custom(f) => {
                let step = 1e-6;
                let mut g = Vec::with_capacity(self.n);
                let mut xp = x.to_vec();
                for i in 0..self.n {
                    xp[i] = x[i] + step;
                    let hi = f(&xp);
                    xp[i] = x[i] - step;
                    let lo = f(&xp);
                    xp[i] = x[i];
                    g.push((hi - lo) / (2.0 * step));
                }
                g
            }
        }
    }

    /// Surface area element `sqrt(1 + |grad phi|^2)` of the graph measure.
    pub fn surface_element(&self, x: &[f64]) -> f64 {
        let g = self.grad_phi(x);
        (1.0 + g.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Height of a point above the graph, `h = y - phi(x)`.
    pub fn height(&self, p: &DomainPoint) -> f64 {
        p.y - self.phi(&p.x)
    }

    /// Whether a point lies strictly inside the domain.
    pub fn is_interior(&self, p: &DomainPoint) -> bool {
        self.height(p) > 0.0
    }

    /// Distance from an interior point to the boundary. Returns
    /// `(lower, estimate, upper)` where the bracket
    /// `h / sqrt(1 + L^2) <= d <= h` is exact and the estimate minimizes the
    /// Euclidean distance over `samples` boundary points, clamped to the
    /// bracket. Only base offsets up to `h` matter: beyond them the distance
    /// already exceeds the upper bound.
    pub fn boundary_distance(&self, z: &DomainPoint, samples: usize) -> Result<BoundaryDistance> {
        let h = self.height(z);
        if h <= 0.0 {
            return Err(LabError::Precondition(
                "boundary_distance requires an interior point".into(),
            ));
        }
        let upper = h;
        let lower = h / (1.0 + self.lipschitz * self.lipschitz).sqrt();
        let mut best = upper;
        let mut nearest = {
            let mut x = z.x.clone();
            let y = self.phi(&x);
            x.shrink_to_fit();
            DomainPoint { x, y }
        };
        if self.n == 1 && samples >= 2 {
            let x0 = z.x[0];
            for k in 0..samples {
                let t = x0 - h + 2.0 * h * (k as f64) / ((samples - 1) as f64);
                let yb = self.phi1(t);
                let d = ((t - x0).powi(2) + (yb - z.y).powi(2)).sqrt();
                if d < best {
                    best = d;
                    nearest = DomainPoint { x: vec![t], y: yb };
                }
            }
        }
        Ok(BoundaryDistance {
            lower,
            estimate: best.max(lower),
            upper,
            nearest,
        })
    }
}

/// Result of a boundary-distance query.
#[derive(Clone, Debug)]
pub struct BoundaryDistance {
    pub lower: f64,
    pub estimate: f64,
    pub upper: f64,
    pub nearest: DomainPoint,
}

/// A point of the ambient space `R^(n+1)`, split as `(x, y)` with `x` in the
/// base hyperplane.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainPoint {
    pub x: Vec<f64>,
    pub y: f64,
}

impl DomainPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        DomainPoint { x, y }
    }

    /// One-dimensional convenience constructor.
    pub fn xy(x: f64, y: f64) -> Self {
        DomainPoint { x: vec![x], y }
    }

    pub fn dist(&self, other: &DomainPoint) -> f64 {
        let mut s = (self.y - other.y).powi(2);
        for (a, b) in self.x.iter().zip(&other.x) {
            s += (a - b) * (a - b);
        }
        s.sqrt()
    }
}

/// The dyadic root cube: an axis-aligned base cube of side `side` with
/// corner `origin`, carrying the vertical slab `[0, side]` above the graph.
#[derive(Clone, Debug, PartialEq)]
pub struct RootCube {
    pub origin: Vec<f64>,
    pub side: f64,
}

impl RootCube {
    /// The unit cube `[0, 1]^n`.
    pub fn unit(n: usize) -> Self {
        RootCube {
            origin: vec![0.0; n],
            side: 1.0,
        }
    }

    pub fn n(&self) -> usize {
        self.origin.len()
    }

    pub fn cube(&self) -> CurvedCube {
        CurvedCube {
            root: self.clone(),
            m: 0,
            j: vec![0; self.origin.len()],
        }
    }
}

/// A dyadic curved cube: generation `m`, integer index `j` per axis
/// (`0 <= j[i] < 2^m`), interpreted over a root cube. In adapted coordinates
/// it is the box `Q x [0, l(Q)]` with `l(Q) = side * 2^-m`; in ambient
/// coordinates the slab `phi(x) <= y <= phi(x) + l(Q)` over the base cube.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvedCube {
    root: RootCube,
    m: u32,
    j: Vec<u64>,
}

impl CurvedCube {
    pub fn new(root: RootCube, m: u32, j: Vec<u64>) -> Result<Self> {
        if m > 52 {
            return Err(LabError::invalid_parameter(
                "m",
                "dyadic generation must not exceed 52 (exact f64 arithmetic)",
            ));
        }
        if j.len() != root.n() {
            return Err(LabError::InvalidData(
                "dyadic index dimension does not match the root cube".into(),
            ));
        }
        let cap = 1u64 << m;
        if j.iter().any(|&ji| ji >= cap) {
            return Err(LabError::InvalidData(format!(
                "dyadic index out of range: expected 0 <= j < 2^{m}"
            )));
        }
        Ok(CurvedCube { root, m, j })
    }

    pub fn root(&self) -> &RootCube {
        &self.root
    }

    pub fn generation(&self) -> u32 {
        self.m
    }

    pub fn index(&self) -> &[u64] {
        &self.j
    }

    pub fn n(&self) -> usize {
        self.j.len()
    }

    pub fn is_root(&self) -> bool {
        self.m == 0
    }

    /// Side length `l(Q) = side * 2^-m` (exact: a power of two scaling).
    pub fn side(&self) -> f64 {
        self.root.side * pow2(-(self.m as i32))
    }

    /// Base interval `[lo, hi]` along one axis.
    pub fn base_interval(&self, axis: usize) -> (f64, f64) {
        let l = self.side();
        let lo = self.root.origin[axis] + l * self.j[axis] as f64;
        (lo, lo + l)
    }

    /// Center of the base cube.
    pub fn base_center(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| {
                let (lo, hi) = self.base_interval(i);
                0.5 * (lo + hi)
            })
            .collect()
    }

    /// Whether a base point lies in the closed base cube.
    pub fn contains_base(&self, x: &[f64]) -> bool {
        (0..self.n()).all(|i| {
            let (lo, hi) = self.base_interval(i);
            lo <= x[i] && x[i] <= hi
        })
    }

    /// The `2^n` dyadic children, ordered by their index bits (axis 0 is the
    /// least significant bit), which fixes a deterministic traversal order.
    pub fn children(&self) -> Vec<CurvedCube> {
        let n = self.n();
        (0..1usize << n)
            .map(|bits| {
                let j = (0..n)
                    .map(|i| 2 * self.j[i] + ((bits >> i) & 1) as u64)
                    .collect();
                CurvedCube {
                    root: self.root.clone(),
                    m: self.m + 1,
                    j,
                }
            })
            .collect()
    }

    /// Parent cube, if any.
    pub fn parent(&self) -> Option<CurvedCube> {
        if self.m == 0 {
            return None;
        }
        Some(CurvedCube {
            root: self.root.clone(),
            m: self.m - 1,
            j: self.j.iter().map(|&ji| ji / 2).collect(),
        })
    }

    /// Whether `other` is contained in `self` (dyadic nesting, exact on
    /// integer indices).
    pub fn contains_cube(&self, other: &CurvedCube) -> bool {
        if other.m < self.m || self.root != other.root {
            return false;
        }
        let shift = other.m - self.m;
        self.j
            .iter()
            .zip(&other.j)
            .all(|(&a, &b)| (b >> shift) == a)
    }

    /// All cubes of generation `m` under this root (n = 1 ordering is by
    /// index; general n iterates the last axis fastest).
    pub fn descendants_at(&self, m: u32) -> Vec<CurvedCube> {
        assert!(m >= self.m);
        let shift = m - self.m;
        let per_axis = 1u64 << shift;
        let n = self.n();
        let mut out = Vec::new();
        let mut idx = vec![0u64; n];
        loop {
            let j = (0..n).map(|i| self.j[i] * per_axis + idx[i]).collect();
            out.push(CurvedCube {
                root: self.root.clone(),
                m,
                j,
            });
            let mut axis = n;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < per_axis {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    /// Whether the ambient point lies in the closed curved cube
    /// `{x in Q, phi(x) <= y <= phi(x) + l(Q)}`.
    pub fn contains(&self, graph: &LipschitzGraph, p: &DomainPoint) -> bool {
        if !self.contains_base(&p.x) {
            return false;
        }
        let b = graph.phi(&p.x);
        b <= p.y && p.y <= b + self.side()
    }

    /// The three marked points of a curved cube: the center
    /// `(x_Q, phi(x_Q) + l/2)`, the associated point one side-length above
    /// it, and the half-raised point half a side-length above it.
    pub fn centers(&self, graph: &LipschitzGraph) -> CubeCenters {
        let xq = self.base_center();
        let l = self.side();
        let yc = graph.phi(&xq) + 0.5 * l;
        CubeCenters {
            center: DomainPoint::new(xq.clone(), yc),
            associated: DomainPoint::new(xq.clone(), yc + l),
            half_raised: DomainPoint::new(xq, yc + 0.5 * l),
        }
    }

    /// The sampling box `T(Q)`: the band `l/2 <= h <= 3l/2` over the base
    /// cube, where `h` is height above the graph. For the root cube the band
    /// is clipped to the cube itself: `l/2 <= h <= l`.
    pub fn translated_box(&self) -> TranslatedBox {
        let l = self.side();
        let h_hi = if self.is_root() { l } else { 1.5 * l };
        TranslatedBox {
            cube: self.clone(),
            h_lo: 0.5 * l,
            h_hi,
        }
    }
}

/// Exact power of two as f64.
pub(crate) fn pow2(e: i32) -> f64 {
    f64::powi(2.0, e)
}

/// The marked points of a curved cube.
#[derive(Clone, Debug)]
pub struct CubeCenters {
    pub center: DomainPoint,
    pub associated: DomainPoint,
    pub half_raised: DomainPoint,
}

/// The band `{x in Q, h_lo <= y - phi(x) <= h_hi}` over a base cube.
#[derive(Clone, Debug)]
pub struct TranslatedBox {
    pub cube: CurvedCube,
    pub h_lo: f64,
    pub h_hi: f64,
}

impl TranslatedBox {
    pub fn contains(&self, graph: &LipschitzGraph, p: &DomainPoint) -> bool {
        if !self.cube.contains_base(&p.x) {
            return false;
        }
        let h = graph.height(p);
        self.h_lo <= h && h <= self.h_hi
    }
}

/// A truncated cone: aperture `alpha` and vertical truncation
/// `lower < y - phi(z) < upper` measured above the graph at the point's own
/// base coordinate. `upper` may be infinite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConeSpec {
    pub aperture: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ConeSpec {
    /// Full (untruncated) cone of the given aperture.
    pub fn untruncated(aperture: f64) -> Result<Self> {
        ConeSpec::new(aperture, 0.0, f64::INFINITY)
    }

    pub fn new(aperture: f64, lower: f64, upper: f64) -> Result<Self> {
        if !(aperture.is_finite() && aperture > 0.0) {
            return Err(LabError::invalid_parameter(
                "alpha",
                "cone aperture must be positive and finite",
            ));
        }
        if !(0.0..f64::INFINITY).contains(&lower) || upper <= lower {
            return Err(LabError::invalid_parameter(
                "cone truncation",
                "requires 0 <= lower < upper",
            ));
        }
        Ok(ConeSpec {
            aperture,
            lower,
            upper,
        })
    }

    /// Nontangential cones only open up to aperture `1/L`; beyond that they
    /// dip below the boundary.
    pub fn compatible_with(&self, graph: &LipschitzGraph) -> Result<()> {
        let l = graph.lipschitz();
        if l > 0.0 && self.aperture >= 1.0 / l {
            return Err(LabError::invalid_parameter(
                "alpha",
                format!(
                    "cone aperture {} must be below 1/L = {} for Lipschitz constant {}",
                    self.aperture,
                    1.0 / l,
                    l
                ),
            ));
        }
        Ok(())
    }
}

/// Membership in the truncated cone with vertex at the boundary point over
/// `vertex_x`:
/// `|p.x - vertex_x| < alpha * (p.y - phi(vertex_x))` together with
/// `phi(p.x) + lower < p.y < phi(p.x) + upper`. All inequalities strict.
pub fn cone_membership(
    graph: &LipschitzGraph,
    vertex_x: &[f64],
    cone: &ConeSpec,
    p: &DomainPoint,
) -> bool {
    let base: f64 = vertex_x
        .iter()
        .zip(&p.x)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let rise = p.y - graph.phi(vertex_x);
    if !(base < cone.aperture * rise) {
        return false;
    }
    let h = graph.height(p);
    cone.lower < h && h < cone.upper
}

/// Membership in the closed curved cube (free-function form).
pub fn cube_membership(graph: &LipschitzGraph, cube: &CurvedCube, p: &DomainPoint) -> bool {
    cube.contains(graph, p)
}

/// The shadow ball of an interior point: `B(z, (1 + alpha) * d(z, bd))`,
/// whose trace on the boundary is the nontangential shadow. Carries the
/// distance estimate and the nearest boundary point found.
#[derive(Clone, Debug)]
pub struct Shadow {
    pub center: DomainPoint,
    pub radius: f64,
    pub distance: BoundaryDistance,
}

pub fn shadow(graph: &LipschitzGraph, z: &DomainPoint, alpha: f64, samples: usize) -> Result<Shadow> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(LabError::invalid_parameter(
            "alpha",
            "shadow aperture must be positive and finite",
        ));
    }
    let distance = graph.boundary_distance(z, samples)?;
    Ok(Shadow {
        center: z.clone(),
        radius: (1.0 + alpha) * distance.estimate,
        distance,
    })
}

/// Result of the ball/box sanity check on a curved cube.
#[derive(Clone, Debug)]
pub struct BallBoxReport {
    pub holds: bool,
    /// Radius of the inscribed ball, `l(Q) / (2 (1 + L))`. This is the
    /// largest radius that fits for every Lipschitz constant; for a flat
    /// boundary it degenerates to the exact `l/2`.
    pub inner_radius: f64,
    /// Radius of the circumscribed ball, `sqrt(n + 1 + L^2) * l(Q)`.
    pub outer_radius: f64,
    pub witness: Option<DomainPoint>,
}

/// Checks by dense sampling that the ball of `inner_radius` around the cube
/// center sits inside the curved cube and that the curved cube sits inside
/// the ball of `outer_radius`. `samples` is the per-axis sampling density.
pub fn ball_box_check(
    graph: &LipschitzGraph,
    cube: &CurvedCube,
    samples: usize,
) -> BallBoxReport {
    let n = cube.n();
    let l = cube.side();
    let big_l = graph.lipschitz();
    let inner = 0.5 * l / (1.0 + big_l);
    let outer = ((n as f64 + 1.0) + big_l * big_l).sqrt() * l;
    let center = cube.centers(graph).center;
    let steps = samples.max(3);

    // Inner inclusion: lattice over the bounding box of the inner ball.
    let mut witness = None;
    let mut offsets = vec![0usize; n + 1];
    'outer_in: loop {
        let mut p = DomainPoint {
            x: vec![0.0; n],
            y: 0.0,
        };
        let mut norm2 = 0.0;
        for (axis, &o) in offsets.iter().enumerate() {
            let t = -inner + 2.0 * inner * (o as f64) / ((steps - 1) as f64);
            norm2 += t * t;
            if axis < n {
                p.x[axis] = center.x[axis] + t;
            } else {
                p.y = center.y + t;
            }
        }
        if norm2 < inner * inner && !cube.contains(graph, &p) {
            witness = Some(p);
            break 'outer_in;
        }
        if !advance(&mut offsets, steps) {
            break;
        }
    }

    // Outer inclusion: lattice over the cube itself (base cube times the
    // height slab).
    if witness.is_none() {
        let mut offsets = vec![0usize; n + 1];
        'outer_out: loop {
            let mut p = DomainPoint {
                x: vec![0.0; n],
                y: 0.0,
            };
            for (axis, &o) in offsets.iter().enumerate().take(n) {
                let (lo, hi) = cube.base_interval(axis);
                p.x[axis] = lo + (hi - lo) * (o as f64) / ((steps - 1) as f64);
            }
            let h = l * (offsets[n] as f64) / ((steps - 1) as f64);
            p.y = graph.phi(&p.x) + h;
            if p.dist(&center) > outer && cube.contains(graph, &p) {
                witness = Some(p);
                break 'outer_out;
            }
            if !advance(&mut offsets, steps) {
                break;
            }
        }
    }

    BallBoxReport {
        holds: witness.is_none(),
        inner_radius: inner,
        outer_radius: outer,
        witness,
    }
}

fn advance(offsets: &mut [usize], steps: usize) -> bool {
    for o in offsets.iter_mut() {
        *o += 1;
        if *o < steps {
            return true;
        }
        *o = 0;
    }
    false
}

/// The `2^n` dyadic children (free-function form).
pub fn dyadic_children(cube: &CurvedCube) -> Vec<CurvedCube> {
    cube.children()
}
