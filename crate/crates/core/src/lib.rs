//! Simulation toolkit for the two-dimensional lake equations with a depth
//! `b = phi^a` that vanishes at the shore.
//!
//! * [`geometry`]: analytic shore function, depth, masked grid, collar chart.
//! * [`elliptic`]: the degenerate weighted Poisson solve for the stream
//!   function and velocity recovery.
//! * [`kernels`]: model-operator fundamental solution, parametrix kernels,
//!   Hardy averaging operators and the 1D Fuchsian solver.
//! * [`transport`]: viscous vorticity transport coupled to the elliptic solve.
//! * [`diagnostics`]: Hölder quotients, gradient constants, Osgood envelope.
//! * [`cli`]: config parsing and the subcommand runners behind the binary.

pub mod cli;
pub mod diagnostics;
pub mod elliptic;
mod error;
pub mod expr;
pub mod geometry;
pub mod kernels;
pub mod numeric;
pub mod quad;
pub mod transport;

pub use error::{ErrorClass, LakeError, Result};
