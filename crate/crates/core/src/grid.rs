//! Working grid in graph-adapted coordinates (one-dimensional base).
//!
//! The grid covers the adapted box `[x0, x0 + side] x [0, side]` of a root
//! cube with `2^depth` square cells per axis. Cell centers sit at odd
//! multiples of half the cell size, so they never touch a dyadic cube face
//! of any coarser generation; every raster lookup is unambiguous.

use crate::error::{LabError, Result};
use crate::geometry::{pow2, RootCube};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub depth: u32,
    pub x0: f64,
    pub side: f64,
}

impl GridSpec {
    pub fn new(depth: u32, x0: f64, side: f64) -> Result<Self> {
        if depth == 0 || depth > 24 {
            return Err(LabError::invalid_parameter(
                "grid_depth",
                "must lie in 1..=24",
            ));
        }
        if !(side.is_finite() && side > 0.0) || !x0.is_finite() {
            return Err(LabError::invalid_parameter(
                "root",
                "grid origin and side must be finite, side positive",
            ));
        }
        Ok(GridSpec { depth, x0, side })
    }

    /// Grid over a root cube (base dimension must be one).
    pub fn over_root(root: &RootCube, depth: u32) -> Result<Self> {
        if root.n() != 1 {
            return Err(LabError::InvalidData(
                "grids require a one-dimensional base".into(),
            ));
        }
        GridSpec::new(depth, root.origin[0], root.side)
    }

    /// Cells per axis.
    #[inline]
    pub fn nx(&self) -> usize {
        1usize << self.depth
    }

    /// Cell side length.
    #[inline]
    pub fn cell(&self) -> f64 {
        self.side * pow2(-(self.depth as i32))
    }

    #[inline]
    pub fn cell_count(&self) -> usize {
        self.nx() * self.nx()
    }

    #[inline]
    pub fn idx(&self, ix: usize, jh: usize) -> usize {
        jh * self.nx() + ix
    }

    #[inline]
    pub fn x_center(&self, ix: usize) -> f64 {
        self.x0 + (ix as f64 + 0.5) * self.cell()
    }

    #[inline]
    pub fn h_center(&self, jh: usize) -> f64 {
        (jh as f64 + 0.5) * self.cell()
    }

    /// Cell index containing an adapted x (None outside the box).
    pub fn cell_of_x(&self, x: f64) -> Option<usize> {
        let t = (x - self.x0) / self.cell();
        if t < 0.0 || t >= self.nx() as f64 {
            return None;
        }
        Some(t as usize)
    }

    /// Cell index containing a height h (None outside `[0, side)`).
    pub fn cell_of_h(&self, h: f64) -> Option<usize> {
        let t = h / self.cell();
        if t < 0.0 || t >= self.nx() as f64 {
            return None;
        }
        Some(t as usize)
    }
}

/// Dense per-cell raster over a grid.
#[derive(Clone, Debug)]
pub struct Raster<T> {
    pub grid: GridSpec,
    pub data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(grid: GridSpec, value: T) -> Self {
        Raster {
            data: vec![value; grid.cell_count()],
            grid,
        }
    }
}

impl<T> Raster<T> {
    #[inline]
    pub fn at(&self, ix: usize, jh: usize) -> &T {
        &self.data[self.grid.idx(ix, jh)]
    }

    #[inline]
    pub fn at_mut(&mut self, ix: usize, jh: usize) -> &mut T {
        let i = self.grid.idx(ix, jh);
        &mut self.data[i]
    }
}

/// Fraction of a rectangle `[x_lo, x_hi] x [h_lo, h_hi]` (adapted
/// coordinates) covered by a predicate, estimated on a `k x k` midpoint
/// lattice. Used to supersample cells that straddle a region boundary.
pub fn covered_fraction(
    x_lo: f64,
    x_hi: f64,
    h_lo: f64,
    h_hi: f64,
    k: usize,
    mut pred: impl FnMut(f64, f64) -> bool,
) -> f64 {
    let mut hits = 0usize;
    for a in 0..k {
        let x = x_lo + (x_hi - x_lo) * (a as f64 + 0.5) / k as f64;
        for b in 0..k {
            let h = h_lo + (h_hi - h_lo) * (b as f64 + 0.5) / k as f64;
            if pred(x, h) {
                hits += 1;
            }
        }
    }
    hits as f64 / (k * k) as f64
}

/// Midpoint quadrature over an arbitrary region of the plane given in
/// adapted coordinates: full cells where the predicate is uniformly true on
/// a coarse probe (center and four corners), `4x4` supersampling where it is
/// mixed. Returns the accumulated `integrand * area`.
pub struct RegionQuadrature {
    pub x_lo: f64,
    pub h_lo: f64,
    pub cell: f64,
    pub nx: usize,
    pub nh: usize,
}

impl RegionQuadrature {
    /// Covers `[x_lo, x_hi] x [h_lo, h_hi]` with square cells of size near
    /// `cell_hint` (the exact size divides the x-range evenly).
    pub fn covering(x_lo: f64, x_hi: f64, h_lo: f64, h_hi: f64, cell_hint: f64) -> Self {
        let nx = (((x_hi - x_lo) / cell_hint).ceil() as usize).max(1);
        let cell = (x_hi - x_lo) / nx as f64;
        let nh = (((h_hi - h_lo) / cell).ceil() as usize).max(1);
        RegionQuadrature {
            x_lo,
            h_lo,
            cell,
            nx,
            nh,
        }
    }

    pub fn integrate(
        &self,
        mut member: impl FnMut(f64, f64) -> bool,
        mut integrand: impl FnMut(f64, f64) -> f64,
    ) -> f64 {
        let area = self.cell * self.cell;
        let mut sum = 0.0;
        for a in 0..self.nx {
            let x_lo = self.x_lo + a as f64 * self.cell;
            let x_hi = x_lo + self.cell;
            let xc = 0.5 * (x_lo + x_hi);
            for b in 0..self.nh {
                let h_lo = self.h_lo + b as f64 * self.cell;
                let h_hi = h_lo + self.cell;
                let hc = 0.5 * (h_lo + h_hi);
                let probes = [
                    member(xc, hc),
                    member(x_lo, h_lo),
                    member(x_hi, h_lo),
                    member(x_lo, h_hi),
                    member(x_hi, h_hi),
                ];
                let inside = probes.iter().filter(|&&b| b).count();
                if inside == probes.len() {
                    sum += integrand(xc, hc) * area;
                } else if inside > 0 {
                    let frac = covered_fraction(x_lo, x_hi, h_lo, h_hi, 4, &mut member);
                    if frac > 0.0 {
                        sum += integrand(xc, hc) * area * frac;
                    }
                }
            }
        }
        sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_are_exact_dyadic_offsets() {
        let g = GridSpec::new(4, 0.0, 1.0).unwrap();
        assert_eq!(g.nx(), 16);
        assert_eq!(g.cell(), 1.0 / 16.0);
        assert_eq!(g.x_center(0), 1.0 / 32.0);
        assert_eq!(g.h_center(15), 31.0 / 32.0);
        assert_eq!(g.cell_of_x(0.999), Some(15));
        assert_eq!(g.cell_of_x(1.0), None);
        assert_eq!(g.cell_of_h(-0.01), None);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridSpec::new(0, 0.0, 1.0).is_err());
        assert!(GridSpec::new(30, 0.0, 1.0).is_err());
        assert!(GridSpec::new(4, 0.0, -1.0).is_err());
    }

    #[test]
    fn quadrature_recovers_disk_area() {
        // Area of the unit disk by midpoint + supersampling.
        let quad = RegionQuadrature::covering(-1.0, 1.0, -1.0, 1.0, 1.0 / 256.0);
        let area = quad.integrate(|x, h| x * x + h * h < 1.0, |_, _| 1.0);
        assert!(
            (area - std::f64::consts::PI).abs() < 2e-4,
            "disk area {area}"
        );
    }

    #[test]
    fn quadrature_handles_empty_region() {
        let quad = RegionQuadrature::covering(0.0, 1.0, 0.0, 1.0, 0.01);
        let v = quad.integrate(|_, _| false, |_, _| 1.0);
        assert_eq!(v, 0.0);
    }
}
