//! Stopping-time forest over the dyadic decomposition of a root cube.
//!
//! Starting at the root, each tree scans its dyadic descendants from the
//! top; a descendant is selected when the field at its associated point
//! jumps by more than `eps` against the value at the scanning tree's
//! center, and selected cubes seed the next generation. Alongside the
//! forest, every dyadic cube up to the depth cap gets a red/blue color:
//! blue when the sampled oscillation over its band box is certified below
//! `k_blue * eps`, red otherwise (ambiguity counts as red).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::fields::{oscillation, ScalarField};
use crate::geometry::{CurvedCube, DomainPoint, LipschitzGraph, RootCube};

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ForestParams {
    /// Stopping jump threshold.
    pub eps: f64,
    /// Deepest dyadic generation searched; selections at exactly this depth
    /// are flagged as unresolved leaves.
    pub max_depth: u32,
    /// Color threshold factor: blue needs certified oscillation at or below
    /// `k_blue * eps`.
    pub k_blue: f64,
    /// Band-box oscillation lattice: this many samples per axis.
    pub t_samples: usize,
}

impl ForestParams {
    pub fn new(eps: f64, max_depth: u32) -> Self {
        ForestParams {
            eps,
            max_depth,
            k_blue: 0.5,
            t_samples: 17,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(LabError::invalid_parameter(
                "eps",
                "stopping threshold must be positive and finite",
            ));
        }
        if !(1..=20).contains(&self.max_depth) {
            return Err(LabError::invalid_parameter(
                "max_depth",
                "stopping depth must lie in 1..=20",
            ));
        }
        if !(self.k_blue.is_finite() && self.k_blue > 0.0) {
            return Err(LabError::invalid_parameter(
                "k_blue",
                "color threshold factor must be positive and finite",
            ));
        }
        if self.t_samples < 3 {
            return Err(LabError::invalid_parameter(
                "t_samples",
                "band oscillation needs at least 3 samples per axis",
            ));
        }
        Ok(())
    }
}

/// Cube color from the certified band oscillation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Red,
    Blue,
}

/// One selected cube (or the root).
#[derive(Clone, Debug, Serialize)]
pub struct ForestNode {
    pub depth: u32,
    pub index: u64,
    pub stopping_generation: u32,
    pub parent: Option<u32>,
    pub children: Vec<u32>,
    /// Field value at the cube's center.
    pub center_value: f64,
    /// Selected at exactly the depth cap, so its subtree is unresolved.
    pub at_depth_cap: bool,
    #[serde(skip)]
    pub cube: CurvedCube,
}

/// Classification entry for one dyadic cube (selected or not).
#[derive(Clone, Debug, Serialize)]
pub struct CubeRecord {
    pub depth: u32,
    pub index: u64,
    pub selected: bool,
    /// Forest node governing this cube: itself when selected, otherwise the
    /// deepest selected ancestor.
    pub node: u32,
    pub stopping_generation: u32,
    pub color: Color,
    pub center_value: f64,
    pub osc_sampled: f64,
    pub osc_error: f64,
}

#[derive(Clone, Debug)]
pub struct StoppingForest {
    pub root: RootCube,
    pub params: ForestParams,
    /// Node 0 is the root tree; children indices always point forward.
    pub nodes: Vec<ForestNode>,
    /// All dyadic cubes with depth in `0..=max_depth`, ordered by
    /// `(depth, index)`.
    pub records: Vec<CubeRecord>,
}

impl StoppingForest {
    /// Position of `(depth, index)` in the record table.
    pub fn record_slot(depth: u32, index: u64) -> usize {
        ((1u64 << depth) - 1 + index) as usize
    }

    pub fn record(&self, depth: u32, index: u64) -> &CubeRecord {
        &self.records[Self::record_slot(depth, index)]
    }

    /// Map from `(depth, index)` to node id for all selected cubes.
    pub fn selected_map(&self) -> BTreeMap<(u32, u64), u32> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| ((n.depth, n.index), i as u32))
            .collect()
    }

    /// Node count per stopping generation.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        for n in &self.nodes {
            let k = n.stopping_generation as usize;
            if sizes.len() <= k {
                sizes.resize(k + 1, 0);
            }
            sizes[k] += 1;
        }
        sizes
    }

    /// Per-node subtree side sums: the node's own side length (base
    /// dimension power) plus the sums of all its forest descendants.
    pub fn subtree_side_sums(&self) -> Vec<f64> {
        let n = self.root.n() as i32;
        let mut sums = vec![0.0; self.nodes.len()];
        // Children always have larger indices, so one reverse sweep folds
        // the whole subtree.
        for i in (0..self.nodes.len()).rev() {
            let node = &self.nodes[i];
            let mut s = node.cube.side().powi(n);
            for &c in &node.children {
                s += sums[c as usize];
            }
            sums[i] = s;
        }
        sums
    }

    /// Deterministic dump of the forest and the full color table.
    pub fn dump_json(&self) -> String {
        #[derive(Serialize)]
        struct Dump<'a> {
            params: &'a ForestParams,
            root_origin: &'a [f64],
            root_side: f64,
            nodes: &'a [ForestNode],
            cubes: &'a [CubeRecord],
        }
        serde_json::to_string_pretty(&Dump {
            params: &self.params,
            root_origin: &self.root.origin,
            root_side: self.root.side,
            nodes: &self.nodes,
            cubes: &self.records,
        })
        .expect("forest dump serializes")
    }
}

fn value_at(field: &ScalarField, p: &DomainPoint) -> f64 {
    field.u(p.x[0], p.y)
}

/// Certified oscillation of the field over a cube's band box, sampled on a
/// `t x t` lattice with the worst-case sample-gap error added.
fn band_oscillation(
    field: &ScalarField,
    graph: &LipschitzGraph,
    cube: &CurvedCube,
    t_samples: usize,
) -> (f64, f64) {
    let band = cube.translated_box();
    let (x_lo, x_hi) = cube.base_interval(0);
    let t = t_samples;
    let dx = (x_hi - x_lo) / (t - 1) as f64;
    let dh = (band.h_hi - band.h_lo) / (t - 1) as f64;
    let mut samples = Vec::with_capacity(t * t);
    for a in 0..t {
        let x = x_lo + dx * a as f64;
        let base = graph.phi1(x);
        for b in 0..t {
            let h = band.h_lo + dh * b as f64;
            samples.push((x, base + h));
        }
    }
    let l = graph.lipschitz();
    let stretch = (1.0 + (1.0 + l) * (1.0 + l)).sqrt();
    let est = oscillation(field, &samples, dx.max(dh) * stretch).expect("lattice is nonempty");
    (est.osc, est.grid_error)
}

/// Build the stopping forest and the full cube color table.
pub fn build_forest(
    field: &ScalarField,
    graph: &LipschitzGraph,
    root: &RootCube,
    params: &ForestParams,
) -> Result<StoppingForest> {
    params.validate()?;
    if root.n() != 1 || graph.n() != 1 {
        return Err(LabError::InvalidData(
            "stopping forests require a one-dimensional base".into(),
        ));
    }

    let root_cube = root.cube();
    let mut nodes = vec![ForestNode {
        depth: 0,
        index: 0,
        stopping_generation: 0,
        parent: None,
        children: Vec::new(),
        center_value: value_at(field, &root_cube.centers(graph).center),
        at_depth_cap: false,
        cube: root_cube,
    }];

    // Breadth-first over trees; within a tree, a top-down scan keeps only
    // maximal (shallowest) jumping cubes.
    let mut queue = std::collections::VecDeque::from([0u32]);
    while let Some(tree) = queue.pop_front() {
        let reference = nodes[tree as usize].center_value;
        let generation = nodes[tree as usize].stopping_generation;
        let mut stack: Vec<CurvedCube> = nodes[tree as usize].cube.children();
        stack.reverse();
        while let Some(cube) = stack.pop() {
            let assoc = cube.centers(graph).associated;
            let jump = (value_at(field, &assoc) - reference).abs();
            if jump > params.eps {
                let id = nodes.len() as u32;
                let at_cap = cube.generation() == params.max_depth;
                nodes.push(ForestNode {
                    depth: cube.generation(),
                    index: cube.index()[0],
                    stopping_generation: generation + 1,
                    parent: Some(tree),
                    children: Vec::new(),
                    center_value: value_at(field, &cube.centers(graph).center),
                    at_depth_cap: at_cap,
                    cube,
                });
                nodes[tree as usize].children.push(id);
                queue.push_back(id);
            } else if cube.generation() < params.max_depth {
                let mut kids = cube.children();
                kids.reverse();
                stack.extend(kids);
            }
        }
    }

    // Color table over every dyadic cube up to the cap.
    let selected: BTreeMap<(u32, u64), u32> = nodes
        .iter()
        .enumerate()
        .map(|(i, n)| ((n.depth, n.index), i as u32))
        .collect();
    let mut records = Vec::new();
    for depth in 0..=params.max_depth {
        for index in 0..(1u64 << depth) {
            let cube = CurvedCube::new(root.clone(), depth, vec![index])?;
            let (osc_sampled, osc_error) =
                band_oscillation(field, graph, &cube, params.t_samples);
            let color = if osc_sampled + osc_error <= params.k_blue * params.eps {
                Color::Blue
            } else {
                Color::Red
            };
            // Governing node: deepest selected ancestor-or-self.
            let mut probe = (depth, index);
            let node = loop {
                if let Some(&id) = selected.get(&probe) {
                    break id;
                }
                debug_assert!(probe.0 > 0, "the root is always selected");
                probe = (probe.0 - 1, probe.1 >> 1);
            };
            records.push(CubeRecord {
                depth,
                index,
                selected: selected.contains_key(&(depth, index)),
                node,
                stopping_generation: nodes[node as usize].stopping_generation,
                color,
                center_value: value_at(field, &cube.centers(graph).center),
                osc_sampled,
                osc_error,
            });
        }
    }

    Ok(StoppingForest {
        root: root.clone(),
        params: *params,
        nodes,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap as Map;

    fn height_field() -> ScalarField {
        crate::fields::builtin_field("coordinate_y", &Map::new()).unwrap()
    }

    fn sinexp() -> ScalarField {
        crate::fields::builtin_field("harmonic_sinexp", &Map::new()).unwrap()
    }

    #[test]
    fn height_field_forest_matches_hand_computation() {
        // Root center value is 1/2; a depth-m candidate's associated point
        // has height 3*2^-m/2, so the jump is |1/2 - 3*2^-m/2|, first
        // exceeding 0.4 at depth 4 (0.40625). All 16 depth-4 cubes select,
        // and the cascade dies immediately below them.
        let f = height_field();
        let g = LipschitzGraph::flat(1, 0.0);
        let root = RootCube::unit(1);
        let forest = build_forest(&f, &g, &root, &ForestParams::new(0.4, 8)).unwrap();
        assert_eq!(forest.nodes.len(), 17);
        assert_eq!(forest.generation_sizes(), vec![1, 16]);
        for node in &forest.nodes[1..] {
            assert_eq!(node.depth, 4);
            assert_eq!(node.stopping_generation, 1);
            assert_eq!(node.parent, Some(0));
            assert!((node.center_value - 0.03125).abs() < 1e-15);
            assert!(!node.at_depth_cap);
        }
        assert_eq!(forest.nodes[0].children.len(), 16);
    }

    #[test]
    fn constant_fields_stop_nowhere() {
        let f = crate::fields::builtin_field("constant", &Map::new()).unwrap();
        let g = LipschitzGraph::flat(1, 0.0);
        let forest =
            build_forest(&f, &g, &RootCube::unit(1), &ForestParams::new(0.1, 6)).unwrap();
        assert_eq!(forest.nodes.len(), 1);
        // Zero oscillation everywhere: the whole table is blue.
        assert!(forest.records.iter().all(|r| r.color == Color::Blue));
        assert_eq!(forest.records.len(), (1 << 7) - 1);
    }

    #[test]
    fn selection_respects_maximality() {
        // No selected cube may sit strictly inside another selected cube of
        // the same stopping generation.
        let f = sinexp();
        let g = LipschitzGraph::flat(1, 0.0);
        let forest =
            build_forest(&f, &g, &RootCube::unit(1), &ForestParams::new(0.1, 8)).unwrap();
        for a in &forest.nodes[1..] {
            for b in &forest.nodes[1..] {
                if a.stopping_generation == b.stopping_generation
                    && a.depth < b.depth
                    && (b.index >> (b.depth - a.depth)) == a.index
                {
                    // b is inside a: must be a descendant across
                    // generations, which same-generation rules out.
                    panic!(
                        "nested same-generation selections: ({}, {}) in ({}, {})",
                        b.depth, b.index, a.depth, a.index
                    );
                }
            }
        }
        assert!(forest.nodes.len() > 1);
    }

    #[test]
    fn jump_certificate_holds_for_unselected_cubes() {
        // Walking any unselected cube whose governing node is the root:
        // the associated-point jump against the root value is at most eps.
        let f = sinexp();
        let g = LipschitzGraph::flat(1, 0.0);
        let root = RootCube::unit(1);
        let params = ForestParams::new(0.15, 7);
        let forest = build_forest(&f, &g, &root, &params).unwrap();
        let root_value = forest.nodes[0].center_value;
        for r in &forest.records {
            if r.depth == 0 || r.selected || r.node != 0 {
                continue;
            }
            let cube = CurvedCube::new(root.clone(), r.depth, vec![r.index]).unwrap();
            let assoc = cube.centers(&g).associated;
            let jump = (f.u(assoc.x[0], assoc.y) - root_value).abs();
            assert!(
                jump <= params.eps + 1e-12,
                "({}, {}) jump {jump}",
                r.depth,
                r.index
            );
        }
    }

    #[test]
    fn records_cover_every_cube_in_order() {
        let f = height_field();
        let g = LipschitzGraph::flat(1, 0.0);
        let forest =
            build_forest(&f, &g, &RootCube::unit(1), &ForestParams::new(0.4, 5)).unwrap();
        assert_eq!(forest.records.len(), (1 << 6) - 1);
        for (slot, r) in forest.records.iter().enumerate() {
            assert_eq!(StoppingForest::record_slot(r.depth, r.index), slot);
        }
        // Governing nodes are consistent: a selected record points at its
        // own node.
        let map = forest.selected_map();
        for r in &forest.records {
            if r.selected {
                assert_eq!(map[&(r.depth, r.index)], r.node);
            }
        }
    }

    #[test]
    fn subtree_sums_telescope() {
        let f = height_field();
        let g = LipschitzGraph::flat(1, 0.0);
        let forest =
            build_forest(&f, &g, &RootCube::unit(1), &ForestParams::new(0.05, 8)).unwrap();
        let sums = forest.subtree_side_sums();
        // Root subtree sum equals the plain sum over all nodes.
        let direct: f64 = forest.nodes.iter().map(|n| n.cube.side()).sum();
        assert!((sums[0] - direct).abs() < 1e-12);
        // Hand value: three full levels of slabs plus one broken cascade.
        for (i, node) in forest.nodes.iter().enumerate() {
            let child_sum: f64 = node
                .children
                .iter()
                .map(|&c| sums[c as usize])
                .sum::<f64>();
            assert!((sums[i] - node.cube.side() - child_sum).abs() < 1e-12);
        }
    }

    #[test]
    fn dumps_are_byte_identical() {
        let f = sinexp();
        let g = LipschitzGraph::flat(1, 0.0);
        let root = RootCube::unit(1);
        let params = ForestParams::new(0.1, 7);
        let a = build_forest(&f, &g, &root, &params).unwrap().dump_json();
        let b = build_forest(&f, &g, &root, &params).unwrap().dump_json();
        assert_eq!(a, b);
        assert!(a.contains("\"cubes\""));
    }

    #[test]
    fn rejects_bad_parameters() {
        let f = height_field();
        let g = LipschitzGraph::flat(1, 0.0);
        let root = RootCube::unit(1);
        assert!(build_forest(&f, &g, &root, &ForestParams::new(0.0, 8)).is_err());
        assert!(build_forest(&f, &g, &root, &ForestParams::new(0.1, 0)).is_err());
        let mut p = ForestParams::new(0.1, 8);
        p.k_blue = 0.0;
        assert!(build_forest(&f, &g, &root, &p).is_err());
        assert!(build_forest(&f, &g, &RootCube::unit(2), &ForestParams::new(0.1, 4)).is_err());
    }
}
