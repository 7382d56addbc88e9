//! Approximate MAP inference for pairwise MRFs whose pairwise potentials are
//! piecewise linear in the label difference.
//!
//! The crate builds the standard `O(L²)`-per-edge LP relaxation as well as the
//! compact `O(KL)`-per-edge reformulations, solves them with a diagonally
//! preconditioned primal-dual method, and ships exact (graph cut, brute
//! force) and message-passing (MPLP) baselines.

pub mod denoise;
pub mod error;
pub mod experiments;
pub mod graphcut;
pub mod model;
pub mod mplp;
pub mod oracle;
pub mod pdsolver;
pub mod pgm;
pub mod potentials;
pub mod relaxations;
pub mod rng;

pub use error::{Error, Result};
pub use model::{GraphTopology, LabelAssignment, MrfInstance, Orientation, Potential};
pub use potentials::{BoundedLinearPiece, ConvexHingePotential, Hinge, PiecewiseLinearPotential};
pub use relaxations::StructuredProgram;

/// Energy value used for "not allowed" label differences.
pub const INFEASIBLE: f64 = f64::INFINITY;
