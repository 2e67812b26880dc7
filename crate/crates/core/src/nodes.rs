//! Node selection and stencil construction.
//!
//! From a candidate cloud, nodes are chosen greedily to minimize the kernel
//! power function: at each step the candidate where the power function (the
//! norm of the pointwise interpolation error functional) is largest joins the
//! set. That greedy is *exactly* diagonally pivoted Cholesky on the kernel
//! matrix of the candidates — the remaining Schur-complement diagonal *is* the
//! squared power function — so selection runs as a pivoted factorization that
//! reads one kernel matrix row per step and never forms the full matrix.
//!
//! Interior and boundary candidates are selected independently and
//! concatenated interior-first, so row index alone determines whether a node
//! carries a PDE row or a boundary-condition row downstream.

use crate::error::{Error, Result};
use crate::geometry::CandidateSet;
use crate::kernels::Kernel;
use crate::numerics::{pivoted_gram_select, GramSelection};

/// Default stop threshold for selection, relative to `φ(0)`: pivots below this
/// mean the candidate set is numerically dependent at working precision.
pub const SELECT_STOP_REL: f64 = 1e-14;

/// A selected node set; interior nodes first, then boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    coords: Vec<[f64; 3]>,
    dim: usize,
    n_interior: usize,
}

impl NodeSet {
    pub fn new(coords: Vec<[f64; 3]>, dim: usize, n_interior: usize) -> Self {
        assert!(n_interior <= coords.len());
        assert!(dim == 2 || dim == 3);
        Self {
            coords,
            dim,
            n_interior,
        }
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_boundary(&self) -> usize {
        self.coords.len() - self.n_interior
    }

    pub fn coords(&self) -> &[[f64; 3]] {
        &self.coords
    }

    pub fn point(&self, i: usize) -> &[f64; 3] {
        &self.coords[i]
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        i >= self.n_interior
    }
}

/// Greedy power-function selection of `n_select` points from `points`.
///
/// Equivalent to diagonally pivoted Cholesky on the kernel matrix
/// `Φ[a][b] = φ(ε‖p_a − p_b‖)`; the returned `diag_trace` holds the squared
/// power function of the selected point at each step (non-increasing). The
/// kernel matrix is generated row-by-row on demand (`O(n_select × M)` memory).
///
/// `stop_rel` is relative to `φ(0)`; selection fails with
/// [`Error::SelectionExhausted`] once the largest remaining squared power
/// function falls below `stop_rel × φ(0)`.
pub fn power_function_select(
    points: &[[f64; 3]],
    kernel: &Kernel,
    n_select: usize,
    stop_rel: f64,
) -> Result<GramSelection> {
    let m = points.len();
    if n_select > m {
        return Err(Error::Config(format!(
            "cannot select {n_select} nodes from {m} candidates"
        )));
    }
    let phi0 = kernel.eval(0.0);
    let diag = vec![phi0; m];
    pivoted_gram_select(
        &diag,
        |p, buf| {
            let cp = &points[p];
            for (i, pi) in points.iter().enumerate() {
                buf[i] = kernel.value(cp, pi);
            }
        },
        n_select,
        stop_rel * phi0,
    )
}

/// Power-function diagnostics from node-set selection.
#[derive(Debug, Clone)]
pub struct SelectionDiagnostics {
    pub interior_trace: Vec<f64>,
    pub boundary_trace: Vec<f64>,
}

/// Selects `n_interior` interior and `n_boundary` boundary nodes from a
/// candidate cloud (each class independently) and concatenates interior-first.
pub fn select_node_set(
    candidates: &CandidateSet,
    kernel: &Kernel,
    n_interior: usize,
    n_boundary: usize,
) -> Result<(NodeSet, SelectionDiagnostics)> {
    let sel_i = power_function_select(&candidates.interior, kernel, n_interior, SELECT_STOP_REL)?;
    let sel_b = power_function_select(&candidates.boundary, kernel, n_boundary, SELECT_STOP_REL)?;
    let mut coords = Vec::with_capacity(n_interior + n_boundary);
    coords.extend(sel_i.indices.iter().map(|&i| candidates.interior[i]));
    coords.extend(sel_b.indices.iter().map(|&i| candidates.boundary[i]));
    let nodes = NodeSet::new(coords, candidates.domain.dim(), n_interior);
    let diag = SelectionDiagnostics {
        interior_trace: sel_i.diag_trace,
        boundary_trace: sel_b.diag_trace,
    };
    Ok((nodes, diag))
}

/// Nearest-neighbor stencils: for each node, the `n_loc` nearest nodes
/// (including itself) ordered by increasing distance, ties broken by index.
/// The owning node is always member 0.
#[derive(Debug, Clone)]
pub struct Stencils {
    members: Vec<usize>,
    n_loc: usize,
}

impl Stencils {
    pub fn n_loc(&self) -> usize {
        self.n_loc
    }

    pub fn members(&self, i: usize) -> &[usize] {
        &self.members[i * self.n_loc..(i + 1) * self.n_loc]
    }

    pub fn n_nodes(&self) -> usize {
        self.members.len() / self.n_loc
    }
}

/// Builds exact k-nearest-neighbor stencils by full pairwise search.
///
/// Node counts here stay in the low thousands, so the `O(N² log n_loc)` scan
/// is cheap, trivially deterministic, and free of tree-traversal edge cases.
pub fn build_stencils(nodes: &NodeSet, n_loc: usize) -> Result<Stencils> {
    let n = nodes.n();
    if n_loc == 0 || n_loc > n {
        return Err(Error::Config(format!(
            "stencil size {n_loc} invalid for {n} nodes"
        )));
    }
    let coords = nodes.coords();
    let mut members = vec![0usize; n * n_loc];
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let pi = &coords[i];
        scratch.clear();
        scratch.extend(coords.iter().enumerate().map(|(j, pj)| {
            let dx = pi[0] - pj[0];
            let dy = pi[1] - pj[1];
            let dz = pi[2] - pj[2];
            (dx * dx + dy * dy + dz * dz, j)
        }));
        scratch.select_nth_unstable_by(n_loc - 1, |a, b| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        });
        let head = &mut scratch[..n_loc];
        head.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        debug_assert_eq!(head[0].1, i, "node must be its own nearest neighbor");
        for (slot, &(_, j)) in head.iter().enumerate() {
            members[i * n_loc + slot] = j;
        }
    }
    Ok(Stencils { members, n_loc })
}
