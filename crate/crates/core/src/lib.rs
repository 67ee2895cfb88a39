//! Shape optimization on a moving hold-all mesh.
//!
//! The shape is the interface between the IN and OUT regions of a
//! triangulated box. Each iteration solves a Poisson state and adjoint on the
//! IN region, assembles the volume form of the shape derivative against
//! hold-all vector fields, turns it into a descent direction under an
//! elasticity or Sobolev-type metric, and moves the mesh vertices.

// `!(x > 0.0)` is used on purpose so that NaN fails parameter checks
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod fem;
pub mod geodesic;
pub mod mesh;
pub mod metrics;
pub mod optimizer;
pub mod problem;

pub use error::{Error, Result};
