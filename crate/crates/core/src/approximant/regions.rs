//! Rasterized region decomposition of a stopping forest, the two-stage
//! piecewise approximant, and the measures attached to the construction.
//!
//! The working grid lives in graph-adapted coordinates, so every dyadic
//! cube maps to an exact integer range of cells. Nested selected cubes are
//! always forest ancestor/descendants, so writing nodes in ascending dyadic
//! depth leaves each cell owned by the deepest node whose slab contains it.

use crate::approximant::forest::{Color, StoppingForest};
use crate::error::{LabError, Result};
use crate::fields::ScalarField;
use crate::geometry::{pow2, CurvedCube, LipschitzGraph, RootCube};
use crate::grid::{GridSpec, Raster, RegionQuadrature};
use crate::operators::measure::{jump_faces, tv_of_raster, CellMeasure};

/// Owner, first-stage value, red-region, and unresolved rasters.
#[derive(Clone, Debug)]
pub struct RegionMaps {
    pub grid: GridSpec,
    /// Forest node owning each cell (deepest node whose slab contains it).
    pub owner: Raster<u32>,
    /// First-stage approximant: the owner's center value.
    pub phi1: Raster<f64>,
    /// Union of the band boxes of all red dyadic cubes.
    pub red: Raster<bool>,
    /// Cells owned by nodes selected at the depth cap.
    pub unresolved: Raster<bool>,
}

/// Rasterize a forest onto a grid of the given depth. The depth cap must
/// stay two generations above the grid so every band box spans whole cells
/// and no cell center can touch a dyadic face.
pub fn rasterize(forest: &StoppingForest, grid_depth: u32) -> Result<RegionMaps> {
    if forest.params.max_depth + 2 > grid_depth {
        return Err(LabError::invalid_parameter(
            "grid_depth",
            format!(
                "grid depth {} must exceed the stopping depth {} by at least 2",
                grid_depth, forest.params.max_depth
            ),
        ));
    }
    let grid = GridSpec::over_root(&forest.root, grid_depth)?;
    let g = grid_depth;
    let nx = grid.nx();

    let mut owner = Raster::filled(grid, 0u32);
    let mut phi1 = Raster::filled(grid, forest.nodes[0].center_value);
    let mut order: Vec<usize> = (0..forest.nodes.len()).collect();
    order.sort_by_key(|&i| (forest.nodes[i].depth, forest.nodes[i].index));
    for id in order {
        let node = &forest.nodes[id];
        if node.depth == 0 {
            continue;
        }
        let w = 1usize << (g - node.depth);
        let x0 = node.index as usize * w;
        for jh in 0..w {
            let row = jh * nx;
            for ix in x0..x0 + w {
                owner.data[row + ix] = id as u32;
                phi1.data[row + ix] = node.center_value;
            }
        }
    }

    let mut unresolved = Raster::filled(grid, false);
    for (i, &own) in owner.data.iter().enumerate() {
        unresolved.data[i] = forest.nodes[own as usize].at_depth_cap;
    }

    let mut red = Raster::filled(grid, false);
    for r in &forest.records {
        if r.color != Color::Red {
            continue;
        }
        let w = 1usize << (g - r.depth);
        let x0 = r.index as usize * w;
        let (h_lo, h_hi) = if r.depth == 0 {
            (nx / 2, nx - 1)
        } else {
            (w / 2, (3 * w / 2 - 1).min(nx - 1))
        };
        for jh in h_lo..=h_hi {
            let row = jh * nx;
            for ix in x0..x0 + w {
                red.data[row + ix] = true;
            }
        }
    }

    Ok(RegionMaps {
        grid,
        owner,
        phi1,
        red,
        unresolved,
    })
}

/// Two-stage approximant with the field sampled alongside it.
#[derive(Clone, Debug)]
pub struct Approximant {
    pub maps: RegionMaps,
    /// Final values: the field itself on the red region, the first stage
    /// elsewhere.
    pub values: Raster<f64>,
    /// Field at cell centers (ambient evaluation).
    pub field_values: Raster<f64>,
    /// Gradient norm at cell centers.
    pub grad_norm: Raster<f64>,
    pub sup_error: f64,
    /// Sup error over cells not owned by depth-capped nodes — the cells
    /// the construction actually certifies.
    pub sup_error_resolved: f64,
    pub unresolved_fraction: f64,
}

pub fn build_approximant(
    field: &ScalarField,
    graph: &LipschitzGraph,
    forest: &StoppingForest,
    grid_depth: u32,
) -> Result<Approximant> {
    let maps = rasterize(forest, grid_depth)?;
    let grid = maps.grid;
    let nx = grid.nx();
    let mut field_values = Raster::filled(grid, 0.0f64);
    let mut grad_norm = Raster::filled(grid, 0.0f64);
    let mut values = maps.phi1.clone();
    let mut sup_error = 0.0f64;
    let mut sup_error_resolved = 0.0f64;
    let mut unresolved = 0usize;
    for ix in 0..nx {
        let x = grid.x_center(ix);
        let base = graph.phi1(x);
        for jh in 0..nx {
            let i = grid.idx(ix, jh);
            let y = base + grid.h_center(jh);
            let u = field.u(x, y);
            field_values.data[i] = u;
            grad_norm.data[i] = field.grad_norm(x, y);
            if maps.red.data[i] {
                values.data[i] = u;
            }
            let err = (values.data[i] - u).abs();
            sup_error = sup_error.max(err);
            if maps.unresolved.data[i] {
                unresolved += 1;
            } else {
                sup_error_resolved = sup_error_resolved.max(err);
            }
        }
    }
    Ok(Approximant {
        maps,
        values,
        field_values,
        grad_norm,
        sup_error,
        sup_error_resolved,
        unresolved_fraction: unresolved as f64 / grid.cell_count() as f64,
    })
}

/// The three measures attached to the construction: the jump measure of the
/// first stage, the field energy restricted to the red region, and the
/// value jumps across the red/non-red interface.
#[derive(Clone, Debug)]
pub struct CarlesonDecomposition {
    pub jump_phi1: CellMeasure,
    pub energy_red: CellMeasure,
    pub red_interface: CellMeasure,
}

pub fn carleson_decomposition(approx: &Approximant) -> CarlesonDecomposition {
    let grid = approx.maps.grid;
    let cell_area = grid.cell() * grid.cell();
    let mut energy_red = CellMeasure::new(grid);
    for jh in 0..grid.nx() {
        for ix in 0..grid.nx() {
            let i = grid.idx(ix, jh);
            if approx.maps.red.data[i] {
                energy_red.add_cell(ix, jh, approx.grad_norm.data[i] * cell_area);
            }
        }
    }
    CarlesonDecomposition {
        jump_phi1: tv_of_raster(&approx.maps.phi1),
        energy_red,
        red_interface: jump_faces(&approx.maps.red, &approx.values),
    }
}

/// One piece of the region-boundary skeleton, in adapted coordinates.
/// Interior faces between two different owners carry multiplicity 2 (one
/// per region); grid-edge faces carry 1.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryFace {
    pub x: f64,
    pub h: f64,
    pub vertical: bool,
    pub multiplicity: u8,
}

pub fn region_boundary_faces(maps: &RegionMaps) -> Vec<BoundaryFace> {
    let g = maps.grid;
    let nx = g.nx();
    let cell = g.cell();
    let mut faces = Vec::new();
    for jh in 0..nx {
        let h_mid = (jh as f64 + 0.5) * cell;
        for ix in 0..nx {
            let x_mid = g.x_center(ix);
            let a = g.idx(ix, jh);
            // Vertical faces: grid edges at ix = 0 and ix = nx.
            if ix == 0 {
                faces.push(BoundaryFace {
                    x: g.x0,
                    h: h_mid,
                    vertical: true,
                    multiplicity: 1,
                });
            }
            if ix + 1 == nx {
                faces.push(BoundaryFace {
                    x: g.x0 + g.side,
                    h: h_mid,
                    vertical: true,
                    multiplicity: 1,
                });
            } else if maps.owner.data[a] != maps.owner.data[g.idx(ix + 1, jh)] {
                faces.push(BoundaryFace {
                    x: g.x0 + (ix as f64 + 1.0) * cell,
                    h: h_mid,
                    vertical: true,
                    multiplicity: 2,
                });
            }
            // Horizontal faces: grid edges at h = 0 and h = side.
            if jh == 0 {
                faces.push(BoundaryFace {
                    x: x_mid,
                    h: 0.0,
                    vertical: false,
                    multiplicity: 1,
                });
            }
            if jh + 1 == nx {
                faces.push(BoundaryFace {
                    x: x_mid,
                    h: g.side,
                    vertical: false,
                    multiplicity: 1,
                });
            } else if maps.owner.data[a] != maps.owner.data[g.idx(ix, jh + 1)] {
                faces.push(BoundaryFace {
                    x: x_mid,
                    h: (jh as f64 + 1.0) * cell,
                    vertical: false,
                    multiplicity: 2,
                });
            }
        }
    }
    faces
}

/// Accumulated region-boundary surface inside a window cube. Vertical faces
/// have exact ambient length; horizontal faces are curves over the graph,
/// bracketed between flat length and the Lipschitz stretch, with a midpoint
/// surface-element estimate in between.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerimeterSum {
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub faces: usize,
}

pub fn perimeter_in_window(
    faces: &[BoundaryFace],
    graph: &LipschitzGraph,
    maps: &RegionMaps,
    window: &CurvedCube,
) -> PerimeterSum {
    let cell = maps.grid.cell();
    let (x_lo, x_hi) = window.base_interval(0);
    let l = window.side();
    let stretch = (1.0 + graph.lipschitz() * graph.lipschitz()).sqrt();
    let mut sum = PerimeterSum::default();
    for f in faces {
        // The window is half-open at the bottom (the graph surface itself
        // is not part of it) and in x, closed at the top.
        if !(x_lo <= f.x && f.x < x_hi && 0.0 < f.h && f.h <= l) {
            continue;
        }
        let w = f.multiplicity as f64 * cell;
        sum.faces += 1;
        if f.vertical {
            sum.lower += w;
            sum.upper += w;
            sum.estimate += w;
        } else {
            sum.lower += w;
            sum.upper += w * stretch;
            sum.estimate += w * graph.surface_element(&[f.x]);
        }
    }
    sum
}

/// Packing/energy comparison below one forest node: the sum of child side
/// powers scaled by `eps^2` against the height-weighted gradient energy
/// over the union of the children's entry regions (band boxes for red
/// children, upper-deck cone unions for blue ones). `None` when the node
/// has no children.
#[derive(Clone, Copy, Debug)]
pub struct NodeEnergyRatio {
    pub node: u32,
    pub packing: f64,
    pub energy: f64,
    pub ratio: Option<f64>,
}

pub fn child_energy_ratio(
    field: &ScalarField,
    graph: &LipschitzGraph,
    forest: &StoppingForest,
    node: u32,
    aperture: f64,
    quad_depth: u32,
) -> Result<NodeEnergyRatio> {
    if !(aperture.is_finite() && aperture > 0.0) {
        return Err(LabError::invalid_parameter(
            "alpha",
            "cone aperture must be positive and finite",
        ));
    }
    let lip = graph.lipschitz();
    if lip > 0.0 && aperture >= 1.0 / lip {
        return Err(LabError::invalid_parameter(
            "alpha",
            "cone aperture must stay below 1/L",
        ));
    }
    let eps = forest.params.eps;
    let n = forest.root.n() as i32;
    let parent = &forest.nodes[node as usize];
    let mut children: Vec<u32> = parent.children.clone();
    children.sort_by_key(|&c| {
        let k = &forest.nodes[c as usize];
        (k.depth, k.index)
    });
    if children.is_empty() {
        return Ok(NodeEnergyRatio {
            node,
            packing: 0.0,
            energy: 0.0,
            ratio: None,
        });
    }

    struct ChildRegion {
        x_lo: f64,
        x_hi: f64,
        h_lo: f64,
        h_hi: f64,
        side: f64,
        // Elevated cone vertices for blue children; empty means band box.
        vertices: Vec<(f64, f64)>,
    }
    let vertex_samples = 33usize;
    let mut regions: Vec<ChildRegion> = Vec::new();
    let mut packing = 0.0;
    for &c in &children {
        let child = &forest.nodes[c as usize];
        let side = child.cube.side();
        packing += side.powi(n) * eps * eps;
        let (x_lo, x_hi) = child.cube.base_interval(0);
        let color = forest.record(child.depth, child.index).color;
        if color == Color::Red {
            regions.push(ChildRegion {
                x_lo,
                x_hi,
                h_lo: side / 2.0,
                h_hi: 1.5 * side,
                side,
                vertices: Vec::new(),
            });
        } else {
            let reach = aperture * side / (2.0 * (1.0 - aperture * lip).max(f64::MIN_POSITIVE));
            let mut vertices = Vec::with_capacity(vertex_samples);
            for k in 0..vertex_samples {
                let vx = x_lo + (x_hi - x_lo) * (k as f64 + 0.5) / vertex_samples as f64;
                vertices.push((vx, graph.phi1(vx)));
            }
            regions.push(ChildRegion {
                x_lo: x_lo - reach,
                x_hi: x_hi + reach,
                h_lo: side,
                h_hi: 1.5 * side,
                side,
                vertices,
            });
        }
    }

    let member = |r: &ChildRegion, x: f64, h: f64| -> bool {
        if !(r.x_lo <= x && x < r.x_hi) {
            return false;
        }
        if r.vertices.is_empty() {
            r.h_lo <= h && h <= r.h_hi
        } else {
            if !(r.h_lo < h && h < r.h_hi) {
                return false;
            }
            let y = graph.phi1(x) + h;
            r.vertices
                .iter()
                .any(|&(vx, vy)| (x - vx).abs() < aperture * (y - vy - r.side))
        }
    };

    // Disjointify overlapping regions so the union is integrated once:
    // each piece excludes all earlier pieces.
    let mut energy = 0.0;
    for (i, r) in regions.iter().enumerate() {
        let quad = RegionQuadrature::covering(
            r.x_lo,
            r.x_hi,
            r.h_lo,
            r.h_hi,
            r.side * pow2(-(quad_depth as i32)),
        );
        energy += quad.integrate(
            |x, h| member(r, x, h) && regions[..i].iter().all(|s| !member(s, x, h)),
            |x, h| {
                let y = graph.phi1(x) + h;
                let (gx, gy) = field.gradient(x, y);
                (gx * gx + gy * gy) * h
            },
        );
    }

    let ratio = if energy > 0.0 {
        Some(packing / energy)
    } else {
        Some(f64::INFINITY)
    };
    Ok(NodeEnergyRatio {
        node,
        packing,
        energy,
        ratio,
    })
}

/// Spread of the normalized square-functional mass over the dyadic cubes of
/// one generation: for each cube, the base integral of the square
/// functional truncated at the cube's side, divided by the side power.
#[derive(Clone, Copy, Debug)]
pub struct GenerationSpread {
    pub generation: u32,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub cubes: usize,
}

impl GenerationSpread {
    /// max/min spread; degenerate generations (all zero) report 1.
    pub fn spread(&self) -> f64 {
        if self.max_ratio == 0.0 {
            1.0
        } else if self.min_ratio == 0.0 {
            f64::INFINITY
        } else {
            self.max_ratio / self.min_ratio
        }
    }
}

pub fn area_ratio_spread(
    field: &ScalarField,
    graph: &LipschitzGraph,
    root: &RootCube,
    max_generation: u32,
    aperture: f64,
    x_nodes: usize,
    quad_depth: u32,
) -> Result<Vec<GenerationSpread>> {
    if x_nodes == 0 {
        return Err(LabError::invalid_parameter(
            "x_nodes",
            "need at least one base quadrature node",
        ));
    }
    let n = root.n() as f64;
    let mut out = Vec::new();
    for m in 0..=max_generation {
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio: f64 = 0.0;
        let mut cubes = 0usize;
        for cube in root.cube().descendants_at(m) {
            let l = cube.side();
            let cone = crate::geometry::ConeSpec::new(aperture, 0.0, l)?;
            let (x_lo, x_hi) = cube.base_interval(0);
            let dx = (x_hi - x_lo) / x_nodes as f64;
            let mut mass = 0.0;
            for k in 0..x_nodes {
                let x = x_lo + (k as f64 + 0.5) * dx;
                let est =
                    crate::operators::cone::area_function(field, graph, x, &cone, quad_depth)?;
                mass += est.value_squared * dx;
            }
            let ratio = mass / l.powf(n);
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            cubes += 1;
        }
        out.push(GenerationSpread {
            generation: m,
            min_ratio,
            max_ratio,
            cubes,
        });
    }
    Ok(out)
}

/// One window of the doubling extension: its own root, forest, and
/// approximant.
#[derive(Clone, Debug)]
pub struct ExtensionRing {
    pub root: RootCube,
    pub forest: StoppingForest,
    pub approximant: Approximant,
}

/// A ladder of centered, doubling windows around a base cube. Evaluation
/// picks the smallest window containing the queried point, so the base
/// approximant wins wherever it is defined.
#[derive(Clone, Debug)]
pub struct GlobalExtension {
    pub rings: Vec<ExtensionRing>,
}

pub fn global_extension(
    field: &ScalarField,
    graph: &LipschitzGraph,
    base: &RootCube,
    rings: usize,
    params: &crate::approximant::forest::ForestParams,
    grid_depth: u32,
) -> Result<GlobalExtension> {
    if rings == 0 || rings > 16 {
        return Err(LabError::invalid_parameter(
            "rings",
            "extension ring count must lie in 1..=16",
        ));
    }
    let mut out = Vec::with_capacity(rings);
    for k in 0..rings as u32 {
        let scale = pow2(k as i32);
        let root = RootCube {
            origin: vec![base.origin[0] - base.side * (scale - 1.0) / 2.0],
            side: base.side * scale,
        };
        let forest = crate::approximant::forest::build_forest(field, graph, &root, params)?;
        let approximant = build_approximant(field, graph, &forest, grid_depth)?;
        out.push(ExtensionRing {
            root,
            forest,
            approximant,
        });
    }
    Ok(GlobalExtension { rings: out })
}

impl GlobalExtension {
    /// Evaluate at an ambient point; `None` outside every window.
    pub fn eval(&self, graph: &LipschitzGraph, x: f64, y: f64) -> Option<f64> {
        let h = y - graph.phi1(x);
        for ring in &self.rings {
            let grid = ring.approximant.maps.grid;
            if let (Some(ix), Some(jh)) = (grid.cell_of_x(x), grid.cell_of_h(h)) {
                return Some(*ring.approximant.values.at(ix, jh));
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximant::forest::{build_forest, ForestParams};
    use std::collections::BTreeMap;

    fn height_field() -> ScalarField {
        crate::fields::builtin_field("coordinate_y", &BTreeMap::new()).unwrap()
    }

    fn flat() -> LipschitzGraph {
        LipschitzGraph::flat(1, 0.0)
    }

    fn height_forest(eps: f64, max_depth: u32) -> StoppingForest {
        build_forest(
            &height_field(),
            &flat(),
            &RootCube::unit(1),
            &ForestParams::new(eps, max_depth),
        )
        .unwrap()
    }

    #[test]
    fn owners_match_hand_forest() {
        // eps = 0.4 selects exactly the 16 depth-4 cubes, so cells below
        // height 1/16 belong to generation-1 nodes and the rest to the
        // root.
        let forest = height_forest(0.4, 5);
        let maps = rasterize(&forest, 7).unwrap();
        let nx = maps.grid.nx();
        for jh in 0..nx {
            for ix in 0..nx {
                let own = maps.owner.data[maps.grid.idx(ix, jh)] as usize;
                let expect_gen1 = (jh as f64 + 0.5) / nx as f64 <= 1.0 / 16.0;
                assert_eq!(
                    forest.nodes[own].stopping_generation,
                    u32::from(expect_gen1),
                    "cell ({ix}, {jh})"
                );
            }
        }
    }

    #[test]
    fn owner_slab_always_contains_its_cells() {
        let forest = build_forest(
            &crate::fields::builtin_field("harmonic_sinexp", &BTreeMap::new()).unwrap(),
            &flat(),
            &RootCube::unit(1),
            &ForestParams::new(0.1, 7),
        )
        .unwrap();
        let maps = rasterize(&forest, 9).unwrap();
        let g = maps.grid;
        let selected = forest.selected_map();
        for jh in 0..g.nx() {
            for ix in 0..g.nx() {
                let own = &forest.nodes[maps.owner.data[g.idx(ix, jh)] as usize];
                let w = 1usize << (9 - own.depth);
                assert!(ix >> (9 - own.depth) == own.index as usize);
                assert!(jh < w, "cell above the owner slab");
                // No selected strict descendant slab contains the cell.
                for (&(d, j), _) in selected.range((own.depth + 1, 0)..) {
                    let cw = 1usize << (9 - d);
                    if ix >> (9 - d) == j as usize && jh < cw {
                        panic!("deeper selected slab ({d}, {j}) contains ({ix}, {jh})");
                    }
                }
            }
        }
    }

    #[test]
    fn rasterization_requires_depth_margin() {
        let forest = height_forest(0.4, 8);
        assert!(rasterize(&forest, 9).is_err());
        assert!(rasterize(&forest, 10).is_ok());
    }

    #[test]
    fn approximant_is_exact_on_red_cells() {
        let f = crate::fields::builtin_field("harmonic_sinexp", &BTreeMap::new()).unwrap();
        let forest = build_forest(
            &f,
            &flat(),
            &RootCube::unit(1),
            &ForestParams::new(0.1, 6),
        )
        .unwrap();
        let approx = build_approximant(&f, &flat(), &forest, 8).unwrap();
        let g = approx.maps.grid;
        let mut red_cells = 0;
        for i in 0..g.cell_count() {
            if approx.maps.red.data[i] {
                assert_eq!(approx.values.data[i], approx.field_values.data[i]);
                red_cells += 1;
            }
        }
        assert!(red_cells > 0, "expected a nonempty red region");
    }

    #[test]
    fn two_builds_produce_identical_rasters() {
        let f = crate::fields::builtin_field("harmonic_sinexp", &BTreeMap::new()).unwrap();
        let build = || {
            let forest = build_forest(
                &f,
                &flat(),
                &RootCube::unit(1),
                &ForestParams::new(0.05, 6),
            )
            .unwrap();
            build_approximant(&f, &flat(), &forest, 8).unwrap()
        };
        let a = build();
        let b = build();
        assert_eq!(a.values.data, b.values.data);
        assert_eq!(a.maps.owner.data, b.maps.owner.data);
        assert_eq!(a.sup_error, b.sup_error);
    }

    #[test]
    fn decomposition_measures_have_expected_support() {
        let f = crate::fields::builtin_field("harmonic_sinexp", &BTreeMap::new()).unwrap();
        let forest = build_forest(
            &f,
            &flat(),
            &RootCube::unit(1),
            &ForestParams::new(0.1, 6),
        )
        .unwrap();
        let approx = build_approximant(&f, &flat(), &forest, 8).unwrap();
        let dec = carleson_decomposition(&approx);
        // The first-stage jump measure is purely a face measure.
        let faces_only = dec.jump_phi1.total()
            - dec
                .jump_phi1
                .atoms(&flat())
                .iter()
                .map(|a| a.2)
                .sum::<f64>();
        assert!(faces_only.abs() < 1e-12);
        assert!(dec.jump_phi1.face_count() > 0);
        // Red energy equals the direct sum over red cells.
        let g = approx.maps.grid;
        let mut direct = 0.0;
        for i in 0..g.cell_count() {
            if approx.maps.red.data[i] {
                direct += approx.grad_norm.data[i] * g.cell() * g.cell();
            }
        }
        assert!((dec.energy_red.total() - direct).abs() < 1e-12);
        assert!(dec.red_interface.total() > 0.0);
    }

    #[test]
    fn perimeter_of_trivial_forest_is_window_frame() {
        // A forest that never stops has one region; inside the root window
        // the only boundary faces are the four grid edges. Over a flat
        // graph the total is the unit-square perimeter.
        let f = crate::fields::builtin_field("constant", &BTreeMap::new()).unwrap();
        let forest = build_forest(
            &f,
            &flat(),
            &RootCube::unit(1),
            &ForestParams::new(0.1, 4),
        )
        .unwrap();
        let maps = rasterize(&forest, 6).unwrap();
        let faces = region_boundary_faces(&maps);
        let window = RootCube::unit(1).cube();
        let sum = perimeter_in_window(&faces, &flat(), &maps, &window);
        // The right edge sits at x = 1, excluded by the half-open window;
        // the bottom edge lies on the graph surface, which the window does
        // not contain. Left wall and top edge remain.
        assert!((sum.lower - 2.0).abs() < 1e-12, "{}", sum.lower);
        assert!((sum.upper - 2.0).abs() < 1e-12);
        assert!((sum.estimate - 2.0).abs() < 1e-12);
    }

    #[test]
    fn perimeter_counts_interior_interfaces_twice() {
        // eps = 0.4 height forest: 16 slabs of height 1/16 under the root.
        // Interior vertical walls between slabs: 15 walls of height 1/16,
        // doubled. Interior horizontal interface at h = 1/16: length 1,
        // doubled. Plus the window frame: left wall and top edge (the right
        // edge falls outside the half-open x range, the bottom face lies on
        // the excluded graph surface).
        let forest = height_forest(0.4, 8);
        let maps = rasterize(&forest, 10).unwrap();
        let faces = region_boundary_faces(&maps);
        let window = RootCube::unit(1).cube();
        let sum = perimeter_in_window(&faces, &flat(), &maps, &window);
        let expect = 2.0 + 2.0 * (15.0 / 16.0) + 2.0 * 1.0;
        assert!((sum.lower - expect).abs() < 1e-9, "{} vs {expect}", sum.lower);
    }

    #[test]
    fn child_energy_ratio_handles_leaves_and_trees() {
        let f = height_field();
        let forest = height_forest(0.4, 8);
        let leaf = child_energy_ratio(&f, &flat(), &forest, 1, 0.5, 5).unwrap();
        assert!(leaf.ratio.is_none());
        assert_eq!(leaf.packing, 0.0);

        let root = child_energy_ratio(&f, &flat(), &forest, 0, 0.5, 5).unwrap();
        // 16 children of side 1/16: packing = 16 * (1/16) * eps^2 = 0.16^2.
        assert!((root.packing - 0.16).abs() < 1e-12);
        assert!(root.energy > 0.0);
        assert!(root.ratio.unwrap().is_finite());
    }

    #[test]
    fn energy_region_respects_child_color() {
        // For u = y the eps = 0.4 children are blue (oscillation over a
        // band of height 2^-4 is 1/16 + error < 0.2), so their entry
        // regions are cone unions above the deck h = side; the energy must
        // then be smaller than the full band-box energy (gradient norm 1).
        let f = height_field();
        let forest = height_forest(0.4, 8);
        for &c in &forest.nodes[0].children {
            let node = &forest.nodes[c as usize];
            let rec = forest.record(node.depth, node.index);
            assert_eq!(rec.color, Color::Blue);
        }
        let r = child_energy_ratio(&f, &flat(), &forest, 0, 0.5, 6).unwrap();
        // Full band boxes would give energy ~ 16 * l * l * h-weight; the
        // cone union is a strict subset of the deck band.
        let side: f64 = 1.0 / 16.0;
        let deck_band = 16.0 * side * (0.5 * side) * (1.25 * side);
        assert!(r.energy < deck_band, "{} vs {deck_band}", r.energy);
        assert!(r.energy > 0.0);
    }

    #[test]
    fn area_spread_is_tight_for_translation_invariant_energy() {
        // Both corpus fields here have x-independent |grad u|^2 over a flat
        // graph, so per-generation ratios agree up to quadrature noise.
        let g = flat();
        let root = RootCube::unit(1);
        for name in ["coordinate_y", "harmonic_sinexp"] {
            let f = crate::fields::builtin_field(name, &BTreeMap::new()).unwrap();
            let spreads = area_ratio_spread(&f, &g, &root, 3, 0.5, 4, 5).unwrap();
            for s in &spreads {
                assert!(s.spread() < 1.1, "{name} gen {}: {}", s.generation, s.spread());
            }
            assert_eq!(spreads.len(), 4);
            assert_eq!(spreads[3].cubes, 8);
        }
    }

    #[test]
    fn extension_prefers_the_smallest_window() {
        let f = height_field();
        let g = flat();
        let ext = global_extension(
            &f,
            &g,
            &RootCube::unit(1),
            3,
            &ForestParams::new(0.4, 4),
            6,
        )
        .unwrap();
        assert_eq!(ext.rings.len(), 3);
        assert_eq!(ext.rings[1].root.origin[0], -0.5);
        assert_eq!(ext.rings[1].root.side, 2.0);
        assert_eq!(ext.rings[2].root.origin[0], -1.5);
        assert_eq!(ext.rings[2].root.side, 4.0);
        // Inside the base cube all windows apply; the base one must win.
        let base_val = ext.rings[0].approximant.values.data
            [ext.rings[0].approximant.maps.grid.idx(32, 32)];
        let got = ext.eval(&g, ext.rings[0].approximant.maps.grid.x_center(32), {
            ext.rings[0].approximant.maps.grid.h_center(32)
        });
        assert_eq!(got, Some(base_val));
        // Outside the base but inside ring 1.
        assert!(ext.eval(&g, -0.25, 0.5).is_some());
        // Outside everything.
        assert_eq!(ext.eval(&g, 10.0, 0.5), None);
        assert_eq!(ext.eval(&g, 0.5, -0.1), None);
    }

    #[test]
    fn unresolved_cells_track_depth_cap() {
        // Push the cap down to the first selection depth so every selected
        // node is a depth-cap leaf.
        let forest = height_forest(0.4, 4);
        let maps = rasterize(&forest, 6).unwrap();
        let frac = maps.unresolved.data.iter().filter(|&&b| b).count() as f64
            / maps.grid.cell_count() as f64;
        // Generation-1 slabs cover height 1/16 each over the whole base.
        assert!((frac - 1.0 / 16.0).abs() < 1e-12, "{frac}");
    }
}
