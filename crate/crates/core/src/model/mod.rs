//! Boxes, lattices, parametric gain functions and system descriptions.

pub mod boxes;
pub mod catalog;
pub mod gains;
pub mod system;

pub use boxes::{distance_to_set, grid_points, nearest_grid_point, nearest_index, BoxUnion, GridPoint};
pub use gains::{GainFn, KLFn};
pub use system::{Drift, Lipschitz, SystemSpec};
