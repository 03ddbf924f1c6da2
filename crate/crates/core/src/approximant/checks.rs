//! Structural verifications for the stopping forest and its rasterized
//! regions: exact partition accounting, monotonicity of selections across
//! jump thresholds, and the sup-error budget implied by the construction.

use crate::approximant::forest::StoppingForest;
use crate::approximant::regions::RegionMaps;
use crate::geometry::LipschitzGraph;

/// Cell-exact partition audit: every cell must land in the region of the
/// deepest selected slab containing it, and region sizes must add up to the
/// whole grid.
#[derive(Clone, Debug)]
pub struct PartitionReport {
    pub exact: bool,
    pub cells: usize,
    pub region_cells: Vec<usize>,
}

pub fn partition_report(forest: &StoppingForest, maps: &RegionMaps) -> PartitionReport {
    let g = maps.grid;
    let depth = g.depth;
    let mut region_cells = vec![0usize; forest.nodes.len()];
    let selected = forest.selected_map();
    let mut exact = true;
    for jh in 0..g.nx() {
        for ix in 0..g.nx() {
            let own = maps.owner.data[g.idx(ix, jh)] as usize;
            region_cells[own] += 1;
            // The deepest selected slab containing this cell.
            let mut best = 0u32; // root node id
            let mut best_depth = 0u32;
            for (&(d, j), &id) in selected.iter() {
                if d > 0
                    && d <= depth
                    && (ix >> (depth - d)) as u64 == j
                    && jh < (1usize << (depth - d))
                    && d > best_depth
                {
                    best = id;
                    best_depth = d;
                }
            }
            if own as u32 != best {
                exact = false;
            }
        }
    }
    if region_cells.iter().sum::<usize>() != g.cell_count() {
        exact = false;
    }
    PartitionReport {
        exact,
        cells: g.cell_count(),
        region_cells,
    }
}

/// Checks that loosening the jump threshold only coarsens the selection:
/// every non-root cube selected at the larger threshold must sit inside a
/// cube (itself or an ancestor) selected at the smaller one.
pub fn selections_nest(coarse: &StoppingForest, fine: &StoppingForest) -> bool {
    if coarse.params.eps < fine.params.eps {
        return false;
    }
    let fine_sel = fine.selected_map();
    'outer: for node in &coarse.nodes[1..] {
        let mut d = node.depth;
        let mut j = node.index;
        while d > 0 {
            if fine_sel.contains_key(&(d, j)) {
                continue 'outer;
            }
            d -= 1;
            j >>= 1;
        }
        return false;
    }
    true
}

/// Worst-case gap between the rasterized approximant and the field that the
/// construction promises. Cells inside a certified band box differ from
/// their region's reference value by at most one jump threshold plus the
/// blue-box allowance, with a gradient correction across one grid cell.
/// Cells in the strip below the finest band boxes carry no certificate of
/// their own: they inherit the reference value from up to two
/// stopping-scale sides away. The gradient term therefore uses the larger
/// of the two distances, stretched by the slope when the height offset is
/// mapped back to ambient coordinates.
pub fn error_budget(
    forest: &StoppingForest,
    graph: &LipschitzGraph,
    cell: f64,
    grad_sup: f64,
) -> f64 {
    let lip = graph.lipschitz();
    let stretch = (1.0 + (1.0 + lip) * (1.0 + lip)).sqrt();
    let stopping = forest.root.side * crate::geometry::pow2(-(forest.params.max_depth as i32));
    let scale = (2.0 * cell).max(2.0 * stopping);
    (forest.params.k_blue + 1.0) * forest.params.eps + grad_sup * scale * stretch
}
