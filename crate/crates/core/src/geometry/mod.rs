//! Lake domain `{phi > 0}`, the degenerate depth `b = phi^a`, the masked
//! Cartesian grid and the shore collar chart.

mod chart;
mod defining;
mod field;
mod grid;

pub use chart::{chart_point, BoundaryChart};
pub use defining::{eval_depth, DefiningFunction, DepthLaw, DepthProfile, Monomial, Polynomial};
pub use field::{ScalarField, VectorField};
pub use grid::{build_grid, Grid, EAST, NORTH, OFFSETS, SOUTH, WEST};

pub type Point = [f64; 2];
