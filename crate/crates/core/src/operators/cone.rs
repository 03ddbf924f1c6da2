//! Cone functionals at a boundary point: the square (area) functional and
//! the nontangential maximal value, both on refining local lattices with a
//! reported refinement error.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::ScalarField;
use crate::geometry::{cone_membership, ConeSpec, DomainPoint, LipschitzGraph};
use crate::grid::RegionQuadrature;

/// Bounding box of a truncated cone over the graph, in ambient coordinates.
/// The half-width solves the tilt of the graph against the cone walls and
/// is finite because apertures are validated against `1/L`.
fn cone_bbox(graph: &LipschitzGraph, vertex_x: f64, cone: &ConeSpec) -> (f64, f64, f64, f64) {
    let l = graph.lipschitz();
    let w = cone.aperture * cone.upper / (1.0 - cone.aperture * l).max(f64::MIN_POSITIVE);
    let base = graph.phi1(vertex_x);
    (
        vertex_x - w,
        vertex_x + w,
        base - l * w + cone.lower,
        base + l * w + cone.upper,
    )
}

fn validate(graph: &LipschitzGraph, cone: &ConeSpec, depth: u32) -> Result<()> {
    if graph.n() != 1 {
        return Err(LabError::InvalidData(
            "cone functionals require a one-dimensional base".into(),
        ));
    }
    cone.compatible_with(graph)?;
    if !(2..=12).contains(&depth) {
        return Err(LabError::invalid_parameter(
            "depth",
            "cone lattice depth must lie in 2..=12",
        ));
    }
    if !(cone.upper.is_finite() && cone.upper > 0.0) {
        return Err(LabError::invalid_parameter(
            "cone.upper",
            "cone functionals need a finite truncation",
        ));
    }
    Ok(())
}

/// Square-functional estimate at one boundary point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AreaEstimate {
    /// The functional itself (square root of the weighted energy).
    pub value: f64,
    pub value_squared: f64,
    /// `|A(depth) - A(depth - 1)|`, a practical resolution error bar.
    pub refinement_error: f64,
    pub depth: u32,
}

/// Weighted gradient energy over the truncated cone at `vertex_x`:
/// `A^2 = integral over the cone of |grad u|^2 (y - phi(vertex_x))^(1 - n)`,
/// evaluated by midpoint quadrature with boundary supersampling on a local
/// lattice of resolution `upper / 2^depth`.
pub fn area_function(
    field: &ScalarField,
    graph: &LipschitzGraph,
    vertex_x: f64,
    cone: &ConeSpec,
    depth: u32,
) -> Result<AreaEstimate> {
    validate(graph, cone, depth)?;
    let coarse = area_squared(field, graph, vertex_x, cone, depth - 1);
    let fine = area_squared(field, graph, vertex_x, cone, depth);
    Ok(AreaEstimate {
        value: fine.sqrt(),
        value_squared: fine,
        refinement_error: (fine.sqrt() - coarse.sqrt()).abs(),
        depth,
    })
}

fn area_squared(
    field: &ScalarField,
    graph: &LipschitzGraph,
    vertex_x: f64,
    cone: &ConeSpec,
    depth: u32,
) -> f64 {
    let (x_lo, x_hi, y_lo, y_hi) = cone_bbox(graph, vertex_x, cone);
    let quad = RegionQuadrature::covering(
        x_lo,
        x_hi,
        y_lo,
        y_hi,
        cone.upper * crate::geometry::pow2(-(depth as i32)),
    );
    let base = graph.phi1(vertex_x);
    quad.integrate(
        |x, y| cone_membership(graph, &[vertex_x], cone, &DomainPoint::xy(x, y)),
        |x, y| {
            let (gx, gy) = field.gradient(x, y);
            // Weight (y - phi(vertex))^(1 - n); trivial for a 1-d base.
            let _ = base;
            gx * gx + gy * gy
        },
    )
}

/// Nontangential maximal estimate at one boundary point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct MaxEstimate {
    pub value: f64,
    pub refinement_error: f64,
    pub depth: u32,
    pub samples: usize,
}

/// `sup |u|` over a lattice filling the truncated cone at `vertex_x`.
pub fn nontangential_max(
    field: &ScalarField,
    graph: &LipschitzGraph,
    vertex_x: f64,
    cone: &ConeSpec,
    depth: u32,
) -> Result<MaxEstimate> {
    validate(graph, cone, depth)?;
    let (coarse, _) = sup_on_lattice(field, graph, vertex_x, cone, depth - 1);
    let (fine, samples) = sup_on_lattice(field, graph, vertex_x, cone, depth);
    Ok(MaxEstimate {
        value: fine,
        refinement_error: (fine - coarse).abs(),
        depth,
        samples,
    })
}

fn sup_on_lattice(
    field: &ScalarField,
    graph: &LipschitzGraph,
    vertex_x: f64,
    cone: &ConeSpec,
    depth: u32,
) -> (f64, usize) {
    let (x_lo, x_hi, y_lo, y_hi) = cone_bbox(graph, vertex_x, cone);
    let step = cone.upper * crate::geometry::pow2(-(depth as i32));
    let nx = (((x_hi - x_lo) / step).ceil() as usize).max(1);
    let ny = (((y_hi - y_lo) / step).ceil() as usize).max(1);
    let mut sup = 0.0_f64;
    let mut count = 0usize;
    for a in 0..nx {
        let x = x_lo + (x_hi - x_lo) * (a as f64 + 0.5) / nx as f64;
        for b in 0..ny {
            let y = y_lo + (y_hi - y_lo) * (b as f64 + 0.5) / ny as f64;
            if cone_membership(graph, &[vertex_x], cone, &DomainPoint::xy(x, y)) {
                sup = sup.max(field.u(x, y).abs());
                count += 1;
            }
        }
    }
    (sup, count)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn coordinate_y() -> ScalarField {
        crate::fields::builtin_field("coordinate_y", &BTreeMap::new()).unwrap()
    }

    #[test]
    fn area_of_unit_gradient_on_flat_cone() {
        // |grad u| = 1 over the cone of aperture a truncated at t gives
        // A^2 = a t^2, so A = t sqrt(a).
        let f = coordinate_y();
        let g = LipschitzGraph::flat(1, 0.0);
        for (aperture, t) in [(0.5, 1.0), (1.0, 0.5), (0.25, 2.0)] {
            let cone = ConeSpec::new(aperture, 0.0, t).unwrap();
            let est = area_function(&f, &g, 0.3, &cone, 7).unwrap();
            let expect = t * aperture.sqrt();
            assert!(
                (est.value - expect).abs() < 0.02 * expect,
                "aperture {aperture}, t {t}: {} vs {expect}",
                est.value
            );
            assert!(est.refinement_error < 0.05 * expect);
        }
    }

    #[test]
    fn area_is_translation_invariant_over_linear_graphs() {
        // For u = y over a sloped line, the cone at any vertex is a rigid
        // translate, so the functional cannot depend on the vertex.
        let f = coordinate_y();
        let g = LipschitzGraph::linear(vec![0.5], 0.0);
        let cone = ConeSpec::new(0.5, 0.0, 1.0).unwrap();
        let a = area_function(&f, &g, -1.0, &cone, 6).unwrap().value;
        let b = area_function(&f, &g, 2.0, &cone, 6).unwrap().value;
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn nontangential_max_of_height_is_truncation() {
        let f = coordinate_y();
        let g = LipschitzGraph::flat(1, 0.0);
        let cone = ConeSpec::new(1.0, 0.0, 1.0).unwrap();
        let est = nontangential_max(&f, &g, 0.0, &cone, 8).unwrap();
        assert!((est.value - 1.0).abs() < 0.01, "{}", est.value);
        assert!(est.samples > 0);
    }

    #[test]
    fn wider_cones_dominate() {
        let f = crate::fields::builtin_field("harmonic_sinexp", &BTreeMap::new()).unwrap();
        let g = LipschitzGraph::flat(1, 0.0);
        let narrow = ConeSpec::new(0.25, 0.0, 1.0).unwrap();
        let wide = ConeSpec::new(0.75, 0.0, 1.0).unwrap();
        for x in [0.1, 0.35, 0.6] {
            let a = area_function(&f, &g, x, &narrow, 6).unwrap().value;
            let b = area_function(&f, &g, x, &wide, 6).unwrap().value;
            assert!(b >= a, "x {x}: wide {b} < narrow {a}");
            let ma = nontangential_max(&f, &g, x, &narrow, 6).unwrap().value;
            let mb = nontangential_max(&f, &g, x, &wide, 6).unwrap().value;
            assert!(mb + 1e-12 >= ma);
        }
    }

    #[test]
    fn rejects_untruncated_or_incompatible_cones() {
        let f = coordinate_y();
        let g = LipschitzGraph::vee(0.5);
        let too_wide = ConeSpec::new(3.0, 0.0, 1.0).unwrap();
        assert!(area_function(&f, &g, 0.0, &too_wide, 6).is_err());
        let ok = ConeSpec::new(0.5, 0.0, 1.0).unwrap();
        assert!(area_function(&f, &g, 0.0, &ok, 1).is_err());
        let untruncated = ConeSpec::untruncated(0.5).unwrap();
        assert!(nontangential_max(&f, &g, 0.0, &untruncated, 6).is_err());
    }
}
