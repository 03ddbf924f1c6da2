//! Stopping-time forest construction and the piecewise approximant built
//! from it: selection of jump cubes, red/blue certification of dyadic
//! boxes, rasterized region maps, attached measures, and the doubling
//! extension of the construction to larger windows.

pub mod checks;
pub mod forest;
pub mod regions;

pub use checks::{error_budget, partition_report, selections_nest, PartitionReport};
pub use forest::{build_forest, Color, CubeRecord, ForestNode, ForestParams, StoppingForest};
pub use regions::{
    area_ratio_spread, build_approximant, carleson_decomposition, child_energy_ratio,
    global_extension, perimeter_in_window, rasterize, region_boundary_faces, Approximant,
    BoundaryFace, CarlesonDecomposition, ExtensionRing, GenerationSpread, GlobalExtension,
    NodeEnergyRatio, PerimeterSum, RegionMaps,
};
