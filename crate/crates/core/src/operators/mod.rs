//! Integral operators and boundary statistics: cell/face measures with
//! Carleson-constant estimation, cone area and maximal functionals, and the
//! oscillation-counting function with its averaged boundary form.

pub mod cone;
pub mod counting;
pub mod measure;

pub use cone::{area_function, nontangential_max, AreaEstimate, MaxEstimate};
pub use counting::{
    counting_function, fatou_average, longest_chain, CountingParams, FatouParams, FatouReport,
    FatouRow,
};
pub use measure::{
    carleson_constant, jump_faces, tv_of_raster, CarlesonReport, CellMeasure, Face,
};
