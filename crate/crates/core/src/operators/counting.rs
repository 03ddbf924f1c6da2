//! Oscillation-counting function on truncated cones and its averaged
//! boundary form.
//!
//! The counting function at a boundary point is the length of the longest
//! chain of cone points whose distances to the vertex decay geometrically
//! (each at most `beta` times the previous) while the field oscillates by
//! at least `eps` between consecutive points. Chains shorter than two
//! points carry no oscillation and count as zero.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::ScalarField;
use crate::geometry::{cone_membership, ConeSpec, DomainPoint, LipschitzGraph, RootCube};

/// Parameters of one counting-function evaluation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CountingParams {
    /// Cone truncation height and ball radius for the averaged form.
    pub r: f64,
    /// Minimum oscillation per step (inclusive).
    pub eps: f64,
    /// Distance decay factor per step, in (0, 1).
    pub beta: f64,
    /// Cone aperture.
    pub aperture: f64,
    /// Lattice resolution exponent: sample spacing `r / 2^depth`.
    pub depth: u32,
}

impl CountingParams {
    pub fn validate(&self, graph: &LipschitzGraph) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(LabError::invalid_parameter("r", "radius must be positive"));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(LabError::invalid_parameter(
                "eps",
                "oscillation threshold must be nonnegative",
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(LabError::invalid_parameter(
                "beta",
                "decay factor must lie in (0, 1)",
            ));
        }
        if !(2..=12).contains(&self.depth) {
            return Err(LabError::invalid_parameter(
                "depth",
                "lattice depth must lie in 2..=12",
            ));
        }
        ConeSpec::new(self.aperture, 0.0, self.r)?.compatible_with(graph)
    }
}

/// Max-segment-tree over value ranks.
struct MaxTree {
    size: usize,
    node: Vec<u32>,
}

impl MaxTree {
    fn new(size: usize) -> Self {
        MaxTree {
            size,
            node: vec![0; 2 * size.max(1)],
        }
    }

    fn update(&mut self, mut i: usize, v: u32) {
        i += self.size;
        if self.node[i] >= v {
            return;
        }
        self.node[i] = v;
        while i > 1 {
            i /= 2;
            let m = self.node[2 * i].max(self.node[2 * i + 1]);
            if self.node[i] == m {
                break;
            }
            self.node[i] = m;
        }
    }

    /// Max over rank range `[lo, hi)`.
    fn query(&self, mut lo: usize, mut hi: usize) -> u32 {
        let mut best = 0;
        lo += self.size;
        hi += self.size;
        while lo < hi {
            if lo & 1 == 1 {
                best = best.max(self.node[lo]);
                lo += 1;
            }
            if hi & 1 == 1 {
                hi -= 1;
                best = best.max(self.node[hi]);
            }
            lo /= 2;
            hi /= 2;
        }
        best
    }
}

/// Longest admissible chain through a point cloud given as
/// `(distance, value)` pairs. A step from `q` to `p` needs
/// `dist(p) < beta * dist(q)` and `|value(q) - value(p)| >= eps`.
/// Returns the number of points in the longest chain when that is at least
/// two, and zero otherwise.
pub fn longest_chain(points: &[(f64, f64)], eps: f64, beta: f64) -> u32 {
    let m = points.len();
    if m < 2 {
        return 0;
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .partial_cmp(&points[a].0)
            .unwrap()
            .then(points[a].1.partial_cmp(&points[b].1).unwrap())
    });
    let mut values: Vec<f64> = points.iter().map(|p| p.1).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank_ge = |v: f64| values.partition_point(|&u| u < v);
    let rank_gt = |v: f64| values.partition_point(|&u| u <= v);

    let mut tree = MaxTree::new(m);
    let mut dp = vec![0u32; m];
    let mut best = 0u32;
    let mut pool = 0usize;
    for &p in &order {
        let (dist_p, val_p) = points[p];
        // Admit predecessors whose distance strictly exceeds dist(p)/beta.
        let threshold = dist_p / beta;
        while pool < m {
            let q = order[pool];
            if points[q].0 > threshold {
                tree.update(rank_ge(points[q].1), dp[q]);
                pool += 1;
            } else {
                break;
            }
        }
        let above = tree.query(rank_ge(val_p + eps), m);
        let below = tree.query(0, rank_gt(val_p - eps));
        dp[p] = 1 + above.max(below);
        best = best.max(dp[p]);
    }
    if best >= 2 {
        best
    } else {
        0
    }
}

/// Reference implementation of [`longest_chain`] by direct quadratic
/// scanning; used to cross-check the tree-based version.
pub fn longest_chain_direct(points: &[(f64, f64)], eps: f64, beta: f64) -> u32 {
    let m = points.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| points[b].0.partial_cmp(&points[a].0).unwrap());
    let mut dp = vec![1u32; m];
    let mut best = 0u32;
    for i in 0..m {
        let p = order[i];
        for &q in &order[..i] {
            if points[q].0 > points[p].0 / beta
                && (points[q].1 >= points[p].1 + eps || points[q].1 <= points[p].1 - eps)
                && dp[q] + 1 > dp[p]
            {
                dp[p] = dp[q] + 1;
            }
        }
        best = best.max(dp[p]);
    }
    if best >= 2 {
        best
    } else {
        0
    }
}

fn cone_lattice(
    field: &ScalarField,
    graph: &LipschitzGraph,
    x: f64,
    params: &CountingParams,
) -> Vec<(f64, f64)> {
    let cone = ConeSpec::new(params.aperture, 0.0, params.r).expect("validated");
    let l = graph.lipschitz();
    let w = params.aperture * params.r / (1.0 - params.aperture * l).max(f64::MIN_POSITIVE);
    let base = graph.phi1(x);
    let y0 = base - l * w;
    let y1 = base + l * w + params.r;
    let step = params.r * crate::geometry::pow2(-(params.depth as i32));
    let nx = ((2.0 * w / step).ceil() as usize).max(1);
    let ny = (((y1 - y0) / step).ceil() as usize).max(1);
    let mut pts = Vec::new();
    for a in 0..nx {
        let px = x - w + 2.0 * w * (a as f64 + 0.5) / nx as f64;
        for b in 0..ny {
            let py = y0 + (y1 - y0) * (b as f64 + 0.5) / ny as f64;
            let p = DomainPoint::xy(px, py);
            if cone_membership(graph, &[x], &cone, &p) {
                let dist = ((px - x).powi(2) + (py - base).powi(2)).sqrt();
                pts.push((dist, field.u(px, py)));
            }
        }
    }
    pts
}

/// Counting function at one boundary point: longest oscillation chain over
/// a lattice filling the truncated cone.
pub fn counting_function(
    field: &ScalarField,
    graph: &LipschitzGraph,
    x: f64,
    params: &CountingParams,
) -> Result<u32> {
    params.validate(graph)?;
    let pts = cone_lattice(field, graph, x, params);
    Ok(longest_chain(&pts, params.eps, params.beta))
}

/// One row of the averaged-counting table.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct FatouRow {
    pub omega_x: f64,
    pub r: f64,
    /// `r^-n` times the surface integral of the counting function over the
    /// boundary ball at `omega`.
    pub average: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FatouReport {
    /// Supremum of the scaled averages over all centers and radii.
    pub sup: f64,
    pub witness_omega: f64,
    pub witness_r: f64,
    pub rows: Vec<FatouRow>,
}

/// Parameters of the averaged scan. Sample counts are fixed by the caller
/// (not derived from any grid), so refining other resolutions leaves the
/// quadrature identical.
#[derive(Clone, Debug, Serialize)]
pub struct FatouParams {
    pub counting: CountingParams,
    /// Boundary centers: this many, cell-aligned over the root base.
    pub omega_samples: usize,
    /// Integration nodes per boundary ball.
    pub z_samples: usize,
    /// Ball radii; each is also used as the cone truncation for counting.
    pub ladder: Vec<f64>,
}

/// Scaled averages of the counting function over boundary balls:
/// `r^-n * integral over the surface ball of N dsigma`, approximated by a
/// fixed midpoint rule with the graph surface element.
///
/// Requires a certified bound `sup |u| <= 1` (clip the field first if
/// necessary): the statistic is only meaningful on normalized fields.
pub fn fatou_average(
    field: &ScalarField,
    graph: &LipschitzGraph,
    root: &RootCube,
    params: &FatouParams,
) -> Result<FatouReport> {
    match field.sup_norm_hint() {
        Some(h) if h <= 1.0 + 1e-12 => {}
        Some(_) => {
            return Err(LabError::Precondition(
                "averaged counting needs sup |u| <= 1; clip the field to 1".into(),
            ))
        }
        None => {
            return Err(LabError::Precondition(
                "averaged counting needs a certified sup-norm bound; clip the field to 1".into(),
            ))
        }
    }
    if params.omega_samples == 0 || params.z_samples < 2 {
        return Err(LabError::invalid_parameter(
            "samples",
            "need at least one center and two integration nodes",
        ));
    }
    if params.ladder.is_empty() {
        return Err(LabError::invalid_parameter(
            "ladder",
            "need at least one radius",
        ));
    }
    let n = graph.n() as f64;
    let mut rows = Vec::new();
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..params.omega_samples {
        let omega_x = root.origin[0] + (i as f64 + 0.5) * root.side / params.omega_samples as f64;
        let omega = DomainPoint::xy(omega_x, graph.phi1(omega_x));
        for &r in &params.ladder {
            let counting = CountingParams {
                r,
                ..params.counting
            };
            counting.validate(graph)?;
            let dx = 2.0 * r / params.z_samples as f64;
            let mut integral = 0.0;
            for k in 0..params.z_samples {
                let zx = omega_x - r + (k as f64 + 0.5) * dx;
                let z = DomainPoint::xy(zx, graph.phi1(zx));
                if omega.dist(&z) >= r {
                    continue;
                }
                let count = counting_function(field, graph, zx, &counting)?;
                integral += count as f64 * dx * graph.surface_element(&[zx]);
            }
            let average = integral / r.powf(n);
            rows.push(FatouRow {
                omega_x,
                r,
                average,
            });
            if average > best.0 {
                best = (average, omega_x, r);
            }
        }
    }
    Ok(FatouReport {
        sup: best.0,
        witness_omega: best.1,
        witness_r: best.2,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn params(r: f64, eps: f64, beta: f64, aperture: f64) -> CountingParams {
        CountingParams {
            r,
            eps,
            beta,
            aperture,
            depth: 6,
        }
    }

    #[test]
    fn constant_fields_never_oscillate() {
        let f = crate::fields::builtin_field("constant", &BTreeMap::new()).unwrap();
        let g = LipschitzGraph::flat(1, 0.0);
        let n = counting_function(&f, &g, 0.5, &params(1.0, 0.6, 0.5, 1.0)).unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn height_field_gives_exactly_one_oscillation_step() {
        // u = y on the unit cone: values fill (0, 1), so one step of size
        // 0.6 fits but two cannot; the longest chain has two points.
        let f = crate::fields::builtin_field("coordinate_y", &BTreeMap::new()).unwrap();
        let g = LipschitzGraph::flat(1, 0.0);
        for depth in [4, 6, 8] {
            let mut p = params(1.0, 0.6, 0.5, 1.0);
            p.depth = depth;
            assert_eq!(counting_function(&f, &g, 0.25, &p).unwrap(), 2);
        }
    }

    #[test]
    fn tighter_thresholds_allow_longer_chains() {
        let f = crate::fields::builtin_field("coordinate_y", &BTreeMap::new()).unwrap();
        let g = LipschitzGraph::flat(1, 0.0);
        let loose = counting_function(&f, &g, 0.5, &params(1.0, 0.6, 0.5, 1.0)).unwrap();
        let tight = counting_function(&f, &g, 0.5, &params(1.0, 0.1, 0.5, 1.0)).unwrap();
        assert!(tight > loose, "{tight} vs {loose}");
    }

    #[test]
    fn chain_rejects_points_without_distance_decay() {
        // Two points at comparable distance cannot chain even with a large
        // oscillation.
        let pts = [(1.0, 0.0), (0.9, 1.0)];
        assert_eq!(longest_chain(&pts, 0.5, 0.5), 0);
        // Same oscillation with genuine decay chains.
        let pts = [(1.0, 0.0), (0.4, 1.0)];
        assert_eq!(longest_chain(&pts, 0.5, 0.5), 2);
    }

    #[test]
    fn averaged_height_field_has_exact_scaled_averages() {
        // At r = 1 the counting function is 2 at every center and the
        // scaled average is exactly 4. At r = 1/2 the cone caps u below
        // 0.5, no 0.6-oscillation fits, and the average is exactly 0.
        let f = crate::fields::builtin_field("coordinate_y", &BTreeMap::new())
            .unwrap()
            .clipped(1.0);
        let g = LipschitzGraph::flat(1, 0.0);
        let root = RootCube::unit(1);
        let fp = FatouParams {
            counting: params(1.0, 0.6, 0.5, 1.0),
            omega_samples: 3,
            z_samples: 8,
            ladder: vec![0.5, 1.0],
        };
        let report = fatou_average(&f, &g, &root, &fp).unwrap();
        assert!((report.sup - 4.0).abs() < 1e-9, "{}", report.sup);
        assert_eq!(report.witness_r, 1.0);
        for row in &report.rows {
            if row.r == 1.0 {
                assert!((row.average - 4.0).abs() < 1e-9);
            } else {
                assert_eq!(row.average, 0.0);
            }
        }
    }

    #[test]
    fn averaged_scan_requires_normalization() {
        let g = LipschitzGraph::flat(1, 0.0);
        let root = RootCube::unit(1);
        let fp = FatouParams {
            counting: params(1.0, 0.6, 0.5, 1.0),
            omega_samples: 1,
            z_samples: 4,
            ladder: vec![0.5],
        };
        let raw = crate::fields::builtin_field("coordinate_y", &BTreeMap::new()).unwrap();
        assert!(fatou_average(&raw, &g, &root, &fp).is_err());
        let big = crate::fields::builtin_field("constant", &{
            let mut m = BTreeMap::new();
            m.insert("c".into(), 2.0);
            m
        })
        .unwrap();
        assert!(fatou_average(&big, &g, &root, &fp).is_err());
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let f = crate::fields::builtin_field("coordinate_y", &BTreeMap::new()).unwrap();
        let g = LipschitzGraph::flat(1, 0.0);
        assert!(counting_function(&f, &g, 0.5, &params(1.0, 0.6, 1.5, 1.0)).is_err());
        assert!(counting_function(&f, &g, 0.5, &params(-1.0, 0.6, 0.5, 1.0)).is_err());
        let vee = LipschitzGraph::vee(2.0);
        assert!(counting_function(&f, &vee, 0.5, &params(1.0, 0.6, 0.5, 1.0)).is_err());
    }

    proptest! {
        #[test]
        fn tree_matches_direct_scan(
            pts in proptest::collection::vec((0.01_f64..10.0, -2.0_f64..2.0), 0..60),
            eps in 0.0_f64..1.5,
            beta in 0.1_f64..0.9,
        ) {
            prop_assert_eq!(
                longest_chain(&pts, eps, beta),
                longest_chain_direct(&pts, eps, beta)
            );
        }

        #[test]
        fn chains_shrink_with_eps_and_beta(
            pts in proptest::collection::vec((0.01_f64..10.0, -2.0_f64..2.0), 2..40),
            eps in 0.0_f64..1.0,
            beta in 0.2_f64..0.8,
        ) {
            let base = longest_chain(&pts, eps, beta);
            prop_assert!(longest_chain(&pts, eps + 0.2, beta) <= base);
            prop_assert!(longest_chain(&pts, eps, beta - 0.1) <= base);
        }
    }
}
