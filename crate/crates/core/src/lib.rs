//! Atomistic model of a planar wedge disclination on a triangular lattice.
//!
//! A single wedge of the lattice (the unit equilateral triangle) is deformed
//! subject to the rotational constraint `u(R_{pi/3} x) = R_phi u(x)` on its
//! bottom side, so that rotated copies fit together around a 5- or 7-fold
//! defect. The crate provides the lattice and constraint maps, the
//! nearest-neighbour energy with analytic derivatives, a regularized
//! Newton minimizer, the refinement and fold studies built on top of it,
//! and numerical checks of the rigidity and relaxation properties of the
//! energy density.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lattice;
pub mod solver;
pub mod sparse;

pub use error::{Error, Result};
