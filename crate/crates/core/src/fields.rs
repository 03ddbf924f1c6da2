//! Scalar fields on the domain and the interior-condition classifier.
//!
//! A [`ScalarField`] evaluates `u` (and, when available, its gradient and
//! Laplacian analytically) at ambient points `(x, y)` with a 1-d base. The
//! classifier probes pointwise conditions that control interior oscillation:
//! the product bound `|u du| <= theta |grad u|^2`, the oscillation/energy
//! ratio on interior balls, and several sign conditions on composite
//! Laplacians that imply the product bound.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::geometry::LipschitzGraph;
use crate::grid::{GridSpec, RegionQuadrature};

type Eval = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
type EvalGrad = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

/// A scalar field `u` on (a neighborhood of) the domain.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    u: Eval,
    grad: Option<EvalGrad>,
    laplacian: Option<Eval>,
    sup_norm_hint: Option<f64>,
    fd_step: f64,
}

impl std::fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarField({})", self.name)
    }
}

impl ScalarField {
    pub fn new(name: impl Into<String>, u: Eval) -> Self {
        ScalarField {
            name: name.into(),
            u,
            grad: None,
            laplacian: None,
            sup_norm_hint: None,
            fd_step: 1e-3,
        }
    }

    pub fn with_gradient(mut self, grad: EvalGrad) -> Self {
        self.grad = Some(grad);
        self
    }

    pub fn with_laplacian(mut self, laplacian: Eval) -> Self {
        self.laplacian = Some(laplacian);
        self
    }

    pub fn with_sup_norm_hint(mut self, hint: f64) -> Self {
        self.sup_norm_hint = Some(hint);
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        self.fd_step = step;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sup_norm_hint(&self) -> Option<f64> {
        self.sup_norm_hint
    }

    pub fn fd_step(&self) -> f64 {
        self.fd_step
    }

    #[inline]
    pub fn u(&self, x: f64, y: f64) -> f64 {
        (self.u)(x, y)
    }

    /// Gradient, analytic when declared, otherwise central differences with
    /// step `fd_step`.
    #[inline]
    pub fn gradient(&self, x: f64, y: f64) -> (f64, f64) {
        if let Some(g) = &self.grad {
            return g(x, y);
        }
        let d = self.fd_step;
        (
            (self.u(x + d, y) - self.u(x - d, y)) / (2.0 * d),
            (self.u(x, y + d) - self.u(x, y - d)) / (2.0 * d),
        )
    }

    #[inline]
    pub fn grad_norm(&self, x: f64, y: f64) -> f64 {
        let (gx, gy) = self.gradient(x, y);
        (gx * gx + gy * gy).sqrt()
    }

    /// Laplacian, analytic when declared, otherwise the 5-point stencil.
    #[inline]
    pub fn lap(&self, x: f64, y: f64) -> f64 {
        if let Some(l) = &self.laplacian {
            return l(x, y);
        }
        let d = self.fd_step;
        (self.u(x + d, y) + self.u(x - d, y) + self.u(x, y + d) + self.u(x, y - d)
            - 4.0 * self.u(x, y))
            / (d * d)
    }

    /// Clamp the field to `[-cap, cap]`. Derivatives vanish on the clamped
    /// set; on the free set they are inherited. The clamping locus itself is
    /// a null set and is assigned the free-side derivatives.
    pub fn clipped(&self, cap: f64) -> ScalarField {
        let u = self.u.clone();
        let base = self.clone();
        let grad_base = self.clone();
        let lap_base = self.clone();
        ScalarField {
            name: format!("{}_clipped", self.name),
            u: Arc::new(move |x, y| u(x, y).clamp(-cap, cap)),
            grad: Some(Arc::new(move |x, y| {
                if base.u(x, y).abs() > cap {
                    (0.0, 0.0)
                } else {
                    grad_base.gradient(x, y)
                }
            })),
            laplacian: Some(Arc::new(move |x, y| {
                if lap_base.u(x, y).abs() > cap {
                    0.0
                } else {
                    lap_base.lap(x, y)
                }
            })),
            sup_norm_hint: Some(cap),
            fd_step: self.fd_step,
        }
    }
}

/// Construct a named builtin field. Recognized names: `constant` (param
/// `c`), `coordinate_y`, `harmonic_sinexp`, `paraboloid`, `power_alpha`
/// (param `alpha` in (0, 2]).
pub fn builtin_field(name: &str, params: &BTreeMap<String, f64>) -> Result<ScalarField> {
    match name {
        "constant" => {
            let c = params.get("c").copied().unwrap_or(0.0);
            Ok(ScalarField::new("constant", Arc::new(move |_, _| c))
                .with_gradient(Arc::new(|_, _| (0.0, 0.0)))
                .with_laplacian(Arc::new(|_, _| 0.0))
                .with_sup_norm_hint(c.abs()))
        }
        "coordinate_y" => Ok(ScalarField::new("coordinate_y", Arc::new(|_, y| y))
            .with_gradient(Arc::new(|_, _| (0.0, 1.0)))
            .with_laplacian(Arc::new(|_, _| 0.0))),
        "harmonic_sinexp" => {
            use std::f64::consts::PI;
            Ok(ScalarField::new(
                "harmonic_sinexp",
                Arc::new(|x, y| (PI * x).sin() * (-PI * y).exp()),
            )
            .with_gradient(Arc::new(|x, y| {
                let e = (-PI * y).exp();
                (PI * (PI * x).cos() * e, -PI * (PI * x).sin() * e)
            }))
            .with_laplacian(Arc::new(|_, _| 0.0))
            .with_sup_norm_hint(1.0))
        }
        "paraboloid" => Ok(ScalarField::new("paraboloid", Arc::new(|x, y| x * x + y * y))
            .with_gradient(Arc::new(|x, y| (2.0 * x, 2.0 * y)))
            .with_laplacian(Arc::new(|_, _| 4.0))),
        "power_alpha" => {
            let alpha = *params.get("alpha").ok_or_else(|| {
                LabError::invalid_parameter("alpha", "power_alpha requires a parameter `alpha`")
            })?;
            if !(alpha > 0.0 && alpha <= 2.0) {
                return Err(LabError::invalid_parameter(
                    "alpha",
                    "power_alpha exponent must lie in (0, 2]",
                ));
            }
            Ok(ScalarField::new(
                format!("power_alpha_{alpha}"),
                Arc::new(move |_, y| if y > 0.0 { y.powf(alpha) } else { 0.0 }),
            )
            .with_gradient(Arc::new(move |_, y| {
                if y > 0.0 {
                    (0.0, alpha * y.powf(alpha - 1.0))
                } else {
                    (0.0, 0.0)
                }
            }))
            .with_laplacian(Arc::new(move |_, y| {
                if y > 0.0 {
                    alpha * (alpha - 1.0) * y.powf(alpha - 2.0)
                } else {
                    0.0
                }
            })))
        }
        other => Err(LabError::invalid_parameter(
            "field.builtin",
            format!("unknown builtin field `{other}`"),
        )),
    }
}

/// Sidecar metadata for a binary grid field: a regular Cartesian lattice
/// `x = x0 + i*dx` (`i < nx`), `y = y0 + j*dy` (`j < ny`), values row-major
/// with `x` fastest.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSidecar {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
}

/// A field sampled on a regular Cartesian grid, evaluated by bilinear
/// interpolation and clamped to the lattice hull outside it.
#[derive(Clone, Debug)]
pub struct GridField {
    pub meta: GridSidecar,
    pub data: Arc<Vec<f64>>,
}

impl GridField {
    pub fn new(meta: GridSidecar, data: Vec<f64>) -> Result<Self> {
        if meta.nx < 2 || meta.ny < 2 {
            return Err(LabError::InvalidData(
                "grid fields need at least 2 samples per axis".into(),
            ));
        }
        if !(meta.dx > 0.0 && meta.dy > 0.0) {
            return Err(LabError::InvalidData(
                "grid field steps must be positive".into(),
            ));
        }
        if data.len() != meta.nx * meta.ny {
            return Err(LabError::InvalidData(format!(
                "grid field expects {} values, got {}",
                meta.nx * meta.ny,
                data.len()
            )));
        }
        Ok(GridField {
            meta,
            data: Arc::new(data),
        })
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        let m = &self.meta;
        let fx = ((x - m.x0) / m.dx).clamp(0.0, (m.nx - 1) as f64);
        let fy = ((y - m.y0) / m.dy).clamp(0.0, (m.ny - 1) as f64);
        let i = (fx as usize).min(m.nx - 2);
        let j = (fy as usize).min(m.ny - 2);
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let at = |i: usize, j: usize| self.data[j * m.nx + i];
        (1.0 - tx) * (1.0 - ty) * at(i, j)
            + tx * (1.0 - ty) * at(i + 1, j)
            + (1.0 - tx) * ty * at(i, j + 1)
            + tx * ty * at(i + 1, j + 1)
    }

    pub fn into_field(self, name: impl Into<String>) -> ScalarField {
        let step = 0.5 * self.meta.dx.min(self.meta.dy);
        let me = self.clone();
        ScalarField::new(name, Arc::new(move |x, y| me.eval(x, y))).with_fd_step(step)
    }

    /// Load from a little-endian f64 binary file plus its JSON sidecar.
    pub fn from_binary(data_path: &Path, sidecar_path: &Path) -> Result<Self> {
        let sidecar = std::fs::read_to_string(sidecar_path)
            .map_err(|e| LabError::io(sidecar_path.display().to_string(), e))?;
        let meta: GridSidecar = serde_json::from_str(&sidecar)
            .map_err(|e| LabError::InvalidData(format!("grid sidecar: {e}")))?;
        let mut raw = Vec::new();
        std::fs::File::open(data_path)
            .and_then(|mut f| f.read_to_end(&mut raw))
            .map_err(|e| LabError::io(data_path.display().to_string(), e))?;
        if raw.len() != meta.nx * meta.ny * 8 {
            return Err(LabError::InvalidData(format!(
                "grid data length {} does not match sidecar {}x{}",
                raw.len(),
                meta.nx,
                meta.ny
            )));
        }
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        GridField::new(meta, data)
    }

    /// Write the binary data file and its JSON sidecar.
    pub fn write_binary(&self, data_path: &Path, sidecar_path: &Path) -> Result<()> {
        let mut raw = Vec::with_capacity(self.data.len() * 8);
        for v in self.data.iter() {
            raw.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(data_path)
            .and_then(|mut f| f.write_all(&raw))
            .map_err(|e| LabError::io(data_path.display().to_string(), e))?;
        let sidecar = serde_json::to_string_pretty(&self.meta).expect("sidecar serializes");
        std::fs::write(sidecar_path, sidecar)
            .map_err(|e| LabError::io(sidecar_path.display().to_string(), e))?;
        Ok(())
    }

    /// Load from CSV with header `x,y,u`; the rows must fill a complete
    /// regular lattice (any order).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| LabError::InvalidData(format!("field csv: {e}")))?;
        let headers = reader
            .headers()
            .map_err(|e| LabError::InvalidData(format!("field csv: {e}")))?
            .clone();
        let expect = ["x", "y", "u"];
        if headers.iter().collect::<Vec<_>>() != expect {
            return Err(LabError::InvalidData(
                "field csv must have header `x,y,u`".into(),
            ));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| LabError::InvalidData(format!("field csv: {e}")))?;
            let parse = |i: usize| -> Result<f64> {
                record[i]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| LabError::InvalidData(format!("field csv value: {e}")))
            };
            rows.push((parse(0)?, parse(1)?, parse(2)?));
        }
        if rows.is_empty() {
            return Err(LabError::InvalidData("field csv has no rows".into()));
        }
        let mut xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let mut ys: Vec<f64> = rows.iter().map(|r| r.1).collect();
        dedup_sorted(&mut xs);
        dedup_sorted(&mut ys);
        let (nx, ny) = (xs.len(), ys.len());
        if nx < 2 || ny < 2 || nx * ny != rows.len() {
            return Err(LabError::InvalidData(format!(
                "field csv must fill a regular lattice: {} rows vs {}x{} coordinates",
                rows.len(),
                nx,
                ny
            )));
        }
        let dx = (xs[nx - 1] - xs[0]) / (nx - 1) as f64;
        let dy = (ys[ny - 1] - ys[0]) / (ny - 1) as f64;
        let meta = GridSidecar {
            nx,
            ny,
            x0: xs[0],
            y0: ys[0],
            dx,
            dy,
        };
        let mut data = vec![f64::NAN; nx * ny];
        for (x, y, u) in rows {
            let i = ((x - meta.x0) / dx).round() as usize;
            let j = ((y - meta.y0) / dy).round() as usize;
            if i >= nx || j >= ny || !data[j * nx + i].is_nan() {
                return Err(LabError::InvalidData(
                    "field csv rows do not form a regular lattice".into(),
                ));
            }
            data[j * nx + i] = u;
        }
        if data.iter().any(|v| v.is_nan()) {
            return Err(LabError::InvalidData(
                "field csv leaves lattice holes".into(),
            ));
        }
        GridField::new(meta, data)
    }
}

fn dedup_sorted(v: &mut Vec<f64>) {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = 1e-9 * (v[v.len() - 1] - v[0]).abs().max(1.0);
    v.dedup_by(|a, b| (*a - *b).abs() <= tol);
}

/// Oscillation of a field over a sampled region: `max - min` over the
/// samples, plus the bound on how far the sampled value can sit below the
/// true oscillation, `2 * Lip(u) * (half sample spacing diagonal)` with the
/// Lipschitz bound taken as the largest sampled gradient norm.
#[derive(Clone, Copy, Debug)]
pub struct OscEstimate {
    pub osc: f64,
    pub grid_error: f64,
    pub min: f64,
    pub max: f64,
}

pub fn oscillation(
    field: &ScalarField,
    samples: &[(f64, f64)],
    spacing_diag: f64,
) -> Result<OscEstimate> {
    if samples.is_empty() {
        return Err(LabError::Precondition(
            "oscillation requires a nonempty sample set".into(),
        ));
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut lip = 0.0_f64;
    for &(x, y) in samples {
        let v = field.u(x, y);
        min = min.min(v);
        max = max.max(v);
        lip = lip.max(field.grad_norm(x, y));
    }
    Ok(OscEstimate {
        osc: max - min,
        grid_error: lip * spacing_diag,
        min,
        max,
    })
}

/// An interior ball in ambient coordinates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BallSpec {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

/// Default interior ball family: centers on a strided sub-lattice of the
/// working grid, radius `h / (2 (1 + eta))` over a flat boundary and
/// `h / (2 (1 + eta) sqrt(1 + L^2))` otherwise, which keeps the doubled and
/// inflated balls inside the domain by construction.
pub fn ball_sampler(
    graph: &LipschitzGraph,
    grid: &GridSpec,
    eta: f64,
    per_axis: usize,
) -> Vec<BallSpec> {
    let per_axis = per_axis.clamp(1, grid.nx());
    let stride = grid.nx() / per_axis;
    let l = graph.lipschitz();
    let shrink = if l == 0.0 {
        1.0
    } else {
        (1.0 + l * l).sqrt()
    };
    let mut balls = Vec::new();
    for a in 0..per_axis {
        let ix = a * stride + stride / 2;
        let x = grid.x_center(ix);
        let base = graph.phi1(x);
        for b in 0..per_axis {
            let jh = b * stride + stride / 2;
            let h = grid.h_center(jh);
            balls.push(BallSpec {
                cx: x,
                cy: base + h,
                r: h / (2.0 * (1.0 + eta) * shrink),
            });
        }
    }
    balls
}

fn ball_quadrature(
    graph: &LipschitzGraph,
    ball: BallSpec,
    inflate: f64,
    integrand: impl Fn(f64, f64) -> f64,
) -> f64 {
    let r = ball.r * inflate;
    let l = graph.lipschitz();
    let hc = ball.cy - graph.phi1(ball.cx);
    let pad = r * (1.0 + l);
    let quad = RegionQuadrature::covering(
        ball.cx - r,
        ball.cx + r,
        (hc - pad).max(0.0),
        hc + pad,
        r / 32.0,
    );
    quad.integrate(
        |x, h| {
            let y = graph.phi1(x) + h;
            (x - ball.cx).powi(2) + (y - ball.cy).powi(2) < r * r
        },
        |x, h| integrand(x, graph.phi1(x) + h),
    )
}

fn ball_osc(field: &ScalarField, graph: &LipschitzGraph, ball: BallSpec) -> OscEstimate {
    let steps = 64usize;
    let cell = 2.0 * ball.r / steps as f64;
    let mut samples = Vec::new();
    for a in 0..=steps {
        let x = ball.cx - ball.r + cell * a as f64;
        for b in 0..=steps {
            let y = ball.cy - ball.r + cell * b as f64;
            if (x - ball.cx).powi(2) + (y - ball.cy).powi(2) <= ball.r * ball.r {
                samples.push((x, y));
            }
        }
    }
    let _ = graph;
    oscillation(field, &samples, cell * std::f64::consts::SQRT_2)
        .expect("ball sample set is nonempty")
}

/// Report of the pointwise product-bound scan `|u du| <= theta |grad u|^2`.
#[derive(Clone, Debug, Serialize)]
pub struct SharpReport {
    /// Supremum of `|u du| / |grad u|^2` over the scanned samples
    /// (infinite when a hard failure was found).
    pub theta_sup: f64,
    /// A sample with vanishing gradient but nonvanishing `u du`, which rules
    /// the condition out entirely.
    pub hard_failure: Option<(f64, f64)>,
    pub samples: usize,
}

impl SharpReport {
    /// Whether the scan is consistent with the bound at the given theta.
    pub fn holds(&self, theta: f64) -> bool {
        self.hard_failure.is_none() && self.theta_sup <= theta
    }
}

pub fn check_sharp(field: &ScalarField, samples: &[(f64, f64)]) -> SharpReport {
    let mut sup = 0.0_f64;
    let mut hard = None;
    for &(x, y) in samples {
        let u = field.u(x, y);
        let (gx, gy) = field.gradient(x, y);
        let grad2 = gx * gx + gy * gy;
        let produ = (u * field.lap(x, y)).abs();
        let tiny = 1e-13 * (1.0 + u * u);
        if grad2 <= tiny {
            if produ > tiny {
                hard = Some((x, y));
                sup = f64::INFINITY;
                break;
            }
            continue;
        }
        sup = sup.max(produ / grad2);
    }
    SharpReport {
        theta_sup: sup,
        hard_failure: hard,
        samples: samples.len(),
    }
}

/// Report of the oscillation/energy comparison on interior balls:
/// `osc_{B_r}(u) <= C (r^(1-n) I)^(1/2)` with
/// `I = integral over (1+eta)B_r of (|grad u|^2 + |u du|)`.
#[derive(Clone, Debug, Serialize)]
pub struct StarReport {
    pub ratio_sup: f64,
    pub worst: Option<BallSpec>,
    pub balls: usize,
    /// Balls where the energy vanished but the oscillation did not.
    pub degenerate: usize,
}

impl StarReport {
    pub fn holds(&self, c: f64) -> bool {
        self.ratio_sup <= c
    }
}

pub fn check_star(
    field: &ScalarField,
    graph: &LipschitzGraph,
    balls: &[BallSpec],
    eta: f64,
) -> Result<StarReport> {
    ratio_over_balls(field, graph, balls, eta, true)
}

/// Same scan with the pure gradient energy and squared oscillation:
/// `osc^2 <= C r^(1-n) integral of |grad u|^2` over the inflated ball.
pub fn morrey_ratio(
    field: &ScalarField,
    graph: &LipschitzGraph,
    balls: &[BallSpec],
    eta: f64,
) -> Result<StarReport> {
    ratio_over_balls(field, graph, balls, eta, false)
}

fn ratio_over_balls(
    field: &ScalarField,
    graph: &LipschitzGraph,
    balls: &[BallSpec],
    eta: f64,
    with_product: bool,
) -> Result<StarReport> {
    let n = graph.n() as f64;
    let mut sup = 0.0_f64;
    let mut worst = None;
    let mut degenerate = 0usize;
    for &ball in balls {
        let z = crate::geometry::DomainPoint::xy(ball.cx, ball.cy);
        let d = graph.boundary_distance(&z, 129)?;
        // Open-ball semantics: radius exactly equal to the boundary
        // distance still keeps the ball inside the open domain.
        if 2.0 * (1.0 + eta) * ball.r > d.estimate * (1.0 + 1e-9) {
            return Err(LabError::Precondition(format!(
                "ball at ({}, {}) with radius {} leaves the domain when doubled",
                ball.cx, ball.cy, ball.r
            )));
        }
        let energy = ball_quadrature(graph, ball, 1.0 + eta, |x, y| {
            let (gx, gy) = field.gradient(x, y);
            let mut e = gx * gx + gy * gy;
            if with_product {
                e += (field.u(x, y) * field.lap(x, y)).abs();
            }
            e
        });
        let osc = ball_osc(field, graph, ball).osc;
        let rhs = ball.r.powf(1.0 - n) * energy;
        let ratio = if rhs > 0.0 {
            if with_product {
                osc / rhs.sqrt()
            } else {
                osc * osc / rhs
            }
        } else if osc > 0.0 {
            degenerate += 1;
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > sup {
            sup = ratio;
            worst = Some(ball);
        }
    }
    Ok(StarReport {
        ratio_sup: sup,
        worst,
        balls: balls.len(),
        degenerate,
    })
}

/// Laplacian of a composite map `g(x, y)` by the 5-point stencil.
fn lap_of(g: impl Fn(f64, f64) -> f64, x: f64, y: f64, d: f64) -> f64 {
    (g(x + d, y) + g(x - d, y) + g(x, y + d) + g(x, y - d) - 4.0 * g(x, y)) / (d * d)
}

/// Outcome of one sign-condition branch of the classifier.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct BranchReport {
    pub holds: bool,
    /// Samples skipped because the composite is undefined there (e.g.
    /// `ln u` at `u <= 0`). Reported, not fatal.
    pub skipped: usize,
}

/// Aggregate classification of a field over an interior sample set.
#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub sharp: SharpReport,
    pub star: StarReport,
    pub morrey: StarReport,
    /// `u >= 0` and `du >= 0` everywhere sampled.
    pub nonneg_subharmonic: BranchReport,
    /// `d(|grad u|^alpha) >= 0` for the requested alpha.
    pub grad_power_subharmonic: Option<BranchReport>,
    /// `d(ln u) <= 0` where `u > 0`.
    pub log_superharmonic: BranchReport,
    /// `d(1/u) >= 0` where `u > 0`.
    pub inverse_subharmonic: BranchReport,
    /// `d(u^alpha) <= 0` where `u > 0`; when it holds the product bound
    /// follows with `theta = 1 - alpha`.
    pub power_superharmonic: Option<BranchReport>,
    pub implied_theta: Option<f64>,
    pub alpha: Option<f64>,
}

/// Slack for finite-difference sign checks, scaled to the sample magnitude.
fn fd_slack(scale: f64) -> f64 {
    1e-7 * (1.0 + scale.abs())
}

fn sign_branch(
    samples: &[(f64, f64)],
    defined: impl Fn(f64, f64) -> bool,
    value: impl Fn(f64, f64) -> f64,
    want_nonneg: bool,
) -> BranchReport {
    let mut holds = true;
    let mut skipped = 0usize;
    for &(x, y) in samples {
        if !defined(x, y) {
            skipped += 1;
            continue;
        }
        let v = value(x, y);
        let slack = fd_slack(v);
        if want_nonneg {
            if v < -slack {
                holds = false;
                break;
            }
        } else if v > slack {
            holds = false;
            break;
        }
    }
    BranchReport { holds, skipped }
}

/// Classify a field: product-bound scan, ball ratios, and the sign-condition
/// branches, with `alpha` driving the two power branches when provided.
pub fn classify(
    field: &ScalarField,
    graph: &LipschitzGraph,
    samples: &[(f64, f64)],
    balls: &[BallSpec],
    eta: f64,
    alpha: Option<f64>,
) -> Result<ClassReport> {
    if let Some(a) = alpha {
        if !(a > 0.0 && a <= 2.0) {
            return Err(LabError::invalid_parameter(
                "alpha",
                "classifier exponent must lie in (0, 2]",
            ));
        }
    }
    let sharp = check_sharp(field, samples);
    let star = check_star(field, graph, balls, eta)?;
    let morrey = morrey_ratio(field, graph, balls, eta)?;
    let d = field.fd_step();

    let nonneg_subharmonic = {
        let mut holds = true;
        for &(x, y) in samples {
            let slack = fd_slack(field.u(x, y));
            if field.u(x, y) < -slack || field.lap(x, y) < -slack {
                holds = false;
                break;
            }
        }
        BranchReport { holds, skipped: 0 }
    };

    let grad_power_subharmonic = alpha.map(|a| {
        sign_branch(
            samples,
            |_, _| true,
            |x, y| lap_of(|x, y| field.grad_norm(x, y).powf(a), x, y, d),
            true,
        )
    });

    let positive = |x: f64, y: f64| field.u(x, y) > 0.0;
    let log_superharmonic = sign_branch(
        samples,
        positive,
        |x, y| lap_of(|x, y| field.u(x, y).max(f64::MIN_POSITIVE).ln(), x, y, d),
        false,
    );
    let inverse_subharmonic = sign_branch(
        samples,
        positive,
        |x, y| lap_of(|x, y| 1.0 / field.u(x, y).max(f64::MIN_POSITIVE), x, y, d),
        true,
    );
    let power_superharmonic = alpha.map(|a| {
        sign_branch(
            samples,
            positive,
            |x, y| lap_of(|x, y| field.u(x, y).max(0.0).powf(a), x, y, d),
            false,
        )
    });
    let implied_theta = match (alpha, &power_superharmonic) {
        (Some(a), Some(b)) if b.holds && a < 1.0 => Some(1.0 - a),
        _ => None,
    };

    Ok(ClassReport {
        sharp,
        star,
        morrey,
        nonneg_subharmonic,
        grad_power_subharmonic,
        log_superharmonic,
        inverse_subharmonic,
        power_superharmonic,
        implied_theta,
        alpha,
    })
}
