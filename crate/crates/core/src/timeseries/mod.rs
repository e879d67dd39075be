//! Loess smoothing and additive STL decomposition of a demand series.

mod loess;
mod stl;

pub use loess::loess_smooth;
pub use stl::{
    read_decomposition_csv, stl_decompose, stl_extend, stl_extend_with, write_decomposition_csv, Decomposition,
    Extension, Series, StlConfig,
};
