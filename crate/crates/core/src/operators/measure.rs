//! Discrete measures on a working grid: per-cell masses plus masses sitting
//! on faces between cells, with ball evaluation against boundary points and
//! a Carleson-constant estimator.
//!
//! Every atom is a point mass in ambient coordinates — cell masses at cell
//! centers, face masses at face midpoints — so all region queries share one
//! convention.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::geometry::LipschitzGraph;
use crate::grid::{GridSpec, Raster};

/// A face between two adjacent cells. `axis = 0` separates `(ix, jh)` from
/// `(ix + 1, jh)`; `axis = 1` separates `(ix, jh)` from `(ix, jh + 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Face {
    pub axis: u8,
    pub ix: usize,
    pub jh: usize,
}

/// A nonnegative measure supported on grid cells and faces.
#[derive(Clone, Debug)]
pub struct CellMeasure {
    grid: GridSpec,
    volume: Vec<f64>,
    faces: Vec<(Face, f64)>,
}

impl CellMeasure {
    pub fn new(grid: GridSpec) -> Self {
        let cells = grid.cell_count();
        CellMeasure {
            grid,
            volume: vec![0.0; cells],
            faces: Vec::new(),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn add_cell(&mut self, ix: usize, jh: usize, mass: f64) {
        self.volume[self.grid.idx(ix, jh)] += mass;
    }

    pub fn add_face(&mut self, face: Face, mass: f64) {
        self.faces.push((face, mass));
    }

    /// Sort and merge duplicate face atoms; call once after construction.
    pub fn normalize_faces(&mut self) {
        self.faces.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Face, f64)> = Vec::with_capacity(self.faces.len());
        for &(face, mass) in &self.faces {
            match merged.last_mut() {
                Some((last, m)) if *last == face => *m += mass,
                _ => merged.push((face, mass)),
            }
        }
        self.faces = merged;
    }

    pub fn total(&self) -> f64 {
        let mut sum = 0.0;
        for v in &self.volume {
            sum += v;
        }
        for (_, m) in &self.faces {
            sum += m;
        }
        sum
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn scaled(&self, c: f64) -> CellMeasure {
        CellMeasure {
            grid: self.grid,
            volume: self.volume.iter().map(|v| v * c).collect(),
            faces: self.faces.iter().map(|&(f, m)| (f, m * c)).collect(),
        }
    }

    /// All atoms as `(x, y, mass)` in ambient coordinates, zero masses
    /// skipped, in a fixed deterministic order.
    pub fn atoms(&self, graph: &LipschitzGraph) -> Vec<(f64, f64, f64)> {
        let g = &self.grid;
        let mut out = Vec::new();
        for jh in 0..g.nx() {
            let h = g.h_center(jh);
            for ix in 0..g.nx() {
                let mass = self.volume[g.idx(ix, jh)];
                if mass != 0.0 {
                    let x = g.x_center(ix);
                    out.push((x, graph.phi1(x) + h, mass));
                }
            }
        }
        let cell = g.cell();
        for &(face, mass) in &self.faces {
            if mass == 0.0 {
                continue;
            }
            let (x, h) = match face.axis {
                0 => (
                    g.x0 + (face.ix as f64 + 1.0) * cell,
                    (face.jh as f64 + 0.5) * cell,
                ),
                _ => (
                    g.x_center(face.ix),
                    (face.jh as f64 + 1.0) * cell,
                ),
            };
            out.push((x, graph.phi1(x) + h, mass));
        }
        out
    }

    /// Mass inside an ambient-coordinate region (atoms whose location
    /// satisfies the predicate).
    pub fn mass_where(&self, graph: &LipschitzGraph, mut member: impl FnMut(f64, f64) -> bool) -> f64 {
        let mut sum = 0.0;
        for (x, y, m) in self.atoms(graph) {
            if member(x, y) {
                sum += m;
            }
        }
        sum
    }
}

/// Total-variation measure of a piecewise-constant raster: every interior
/// face where the value jumps carries mass `|jump| * cell`.
pub fn tv_of_raster(values: &Raster<f64>) -> CellMeasure {
    jump_faces_impl(values, |_, _| true)
}

/// Faces where the mask changes, weighted by the value jump across the face
/// times the face length. Restricts the total-variation measure to the
/// boundary between the masked and unmasked regions.
pub fn jump_faces(mask: &Raster<bool>, values: &Raster<f64>) -> CellMeasure {
    jump_faces_impl(values, |a, b| mask.data[a] != mask.data[b])
}

fn jump_faces_impl(values: &Raster<f64>, keep: impl Fn(usize, usize) -> bool) -> CellMeasure {
    let g = values.grid;
    let cell = g.cell();
    let mut out = CellMeasure::new(g);
    for jh in 0..g.nx() {
        for ix in 0..g.nx() {
            let a = g.idx(ix, jh);
            if ix + 1 < g.nx() {
                let b = g.idx(ix + 1, jh);
                let jump = (values.data[b] - values.data[a]).abs();
                if jump > 0.0 && keep(a, b) {
                    out.add_face(Face { axis: 0, ix, jh }, jump * cell);
                }
            }
            if jh + 1 < g.nx() {
                let b = g.idx(ix, jh + 1);
                let jump = (values.data[b] - values.data[a]).abs();
                if jump > 0.0 && keep(a, b) {
                    out.add_face(Face { axis: 1, ix, jh }, jump * cell);
                }
            }
        }
    }
    out.normalize_faces();
    out
}

/// Result of the Carleson-constant scan: the supremum of
/// `mu(B(z, r)) / r^n` over boundary sample points `z` and ladder radii.
#[derive(Clone, Debug, Serialize)]
pub struct CarlesonReport {
    pub constant: f64,
    pub witness_x: f64,
    pub witness_r: f64,
    pub boundary_samples: usize,
    pub ladder: Vec<f64>,
}

/// Estimate the Carleson constant of a measure over a graph boundary.
///
/// Boundary points sample the grid's base interval at cell-center-aligned
/// positions; balls are open and centered on the graph. Each atom is binned
/// into the first ladder radius exceeding its distance, so one pass per
/// boundary point covers the whole ladder.
pub fn carleson_constant(
    measure: &CellMeasure,
    graph: &LipschitzGraph,
    boundary_samples: usize,
    ladder: &[f64],
) -> Result<CarlesonReport> {
    if boundary_samples == 0 {
        return Err(LabError::invalid_parameter(
            "boundary_samples",
            "need at least one boundary sample",
        ));
    }
    let mut radii: Vec<f64> = ladder.to_vec();
    radii.retain(|r| r.is_finite() && *r > 0.0);
    radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
    radii.dedup();
    if radii.is_empty() {
        return Err(LabError::invalid_parameter(
            "ladder",
            "need at least one positive radius",
        ));
    }
    let n = graph.n() as f64;
    let g = measure.grid();
    let atoms = measure.atoms(graph);
    let mut best = (0.0_f64, 0.0, 0.0);
    for i in 0..boundary_samples {
        let x = g.x0 + (i as f64 + 0.5) * g.side / boundary_samples as f64;
        let y = graph.phi1(x);
        let mut bins = vec![0.0; radii.len()];
        for &(ax, ay, m) in &atoms {
            let d = ((ax - x).powi(2) + (ay - y).powi(2)).sqrt();
            // First ladder radius strictly above the distance (open ball).
            let k = radii.partition_point(|r| *r <= d);
            if k < radii.len() {
                bins[k] += m;
            }
        }
        let mut cum = 0.0;
        for (k, r) in radii.iter().enumerate() {
            cum += bins[k];
            let ratio = cum / r.powf(n);
            if ratio > best.0 {
                best = (ratio, x, *r);
            }
        }
    }
    Ok(CarlesonReport {
        constant: best.0,
        witness_x: best.1,
        witness_r: best.2,
        boundary_samples,
        ladder: radii,
    })
}
