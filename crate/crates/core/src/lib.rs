//! Mesh-free solver for parametric elliptic PDEs on irregular 2D/3D domains.
//!
//! The crate has two halves. The *truth* half builds a high-dimensional
//! collocation solver: scattered nodes are selected from a candidate cloud by a
//! power-function greedy ([`nodes`]), local differentiation weights are computed
//! on nearest-neighbor stencils from radial-kernel interpolants ([`rbffd`]), and
//! the resulting sparse operators are assembled per parameter and solved directly.
//! The *reduced* half ([`reduced`]) runs a greedy sampling loop over a parameter
//! training grid, orthonormalizes the selected truth snapshots, and precomputes
//! the small dense tables that let the online stage solve for reduced
//! coefficients and evaluate a rigorous error bound at a cost independent of the
//! truth dimension.
//!
//! [`harness`] wires the pieces into reproducible experiment drivers (node
//! studies, convergence sweeps, offline training, online queries, timing and
//! bound checks) with CSV/file outputs; the `r2bf` binary is a thin CLI over it.

pub mod error;
pub mod geometry;
pub mod harness;
pub mod kernels;
pub mod nodes;
pub mod numerics;
pub mod problems;
pub mod rbffd;
pub mod reduced;

pub use error::{Error, Result};
