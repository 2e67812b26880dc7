//! Reduced-basis compression of the truth solver.
//!
//! The offline stage walks a training grid of parameter values, solves the
//! truth system at greedily chosen parameters, and compresses the snapshots
//! into parameter-independent tables whose size depends only on the basis
//! dimension.  The online stage assembles and solves the reduced system from
//! those tables alone, and certifies each solution with a residual-based
//! error bound.

mod basis;
mod greedy;
mod model_io;
mod tables;

pub use basis::orthonormalize;
pub use greedy::{greedy_offline, GreedyOptions, GreedyStep, OnlineQuery, TrainedModel};
pub use model_io::{load_model, save_model};
pub use tables::{precompute_tables, OnlineSolution, ReducedTables};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::nodes::NodeSet;
use crate::numerics::{
    extreme_spd_eigen, CsrMatrix, DenseMatrix, Extreme, PivotedCholesky, SparseLu,
};

/// Relative convergence tolerance for the extreme-eigenvalue iterations that
/// back the stability constants.
const EIGEN_REL_TOL: f64 = 1e-9;

/// Iteration cap for the same.
const EIGEN_MAX_ITER: usize = 2000;

/// Which rule generated the points of a [`TrainingGrid`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    /// Endpoints included: `lo + i * (hi - lo) / (m - 1)`.
    Equispaced,
    /// Cell centers: `lo + (i + 1/2) * (hi - lo) / m`.  Offset half a cell
    /// from the box edges; the usual choice for held-out test parameters.
    CellCentered,
}

/// Tensor grid over a rectangular parameter box, stored row-major with the
/// first parameter as the outer index.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingGrid {
    kind: GridKind,
    param_box: [[f64; 2]; 2],
    dims: [usize; 2],
    mus: Vec<[f64; 2]>,
}

impl TrainingGrid {
    pub fn new(kind: GridKind, param_box: [[f64; 2]; 2], dims: [usize; 2]) -> Result<Self> {
        if dims[0] == 0 || dims[1] == 0 {
            return Err(Error::Config("training grid dimensions must be positive".into()));
        }
        for &[lo, hi] in &param_box {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("invalid parameter range [{lo}, {hi}]")));
            }
        }
        let coord = |axis: usize, i: usize| -> f64 {
            let [lo, hi] = param_box[axis];
            let m = dims[axis];
            match kind {
                GridKind::Equispaced => {
                    if m == 1 {
                        0.5 * (lo + hi)
                    } else {
                        lo + i as f64 * (hi - lo) / (m - 1) as f64
                    }
                }
                GridKind::CellCentered => lo + (i as f64 + 0.5) * (hi - lo) / m as f64,
            }
        };
        let mut mus = Vec::with_capacity(dims[0] * dims[1]);
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                mus.push([coord(0, i), coord(1, j)]);
            }
        }
        Ok(Self { kind, param_box, dims, mus })
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn param_box(&self) -> [[f64; 2]; 2] {
        self.param_box
    }

    pub fn dims(&self) -> [usize; 2] {
        self.dims
    }

    pub fn mus(&self) -> &[[f64; 2]] {
        &self.mus
    }

    pub fn len(&self) -> usize {
        self.mus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mus.is_empty()
    }

    /// Index of the grid point nearest to `mu`, resolved per axis in closed
    /// form.  Ties round half-way coordinates down to the lower index.
    pub fn nearest_index(&self, mu: [f64; 2]) -> usize {
        let axis_index = |axis: usize| -> usize {
            let [lo, hi] = self.param_box[axis];
            let m = self.dims[axis];
            if m == 1 || hi <= lo {
                return 0;
            }
            let t = match self.kind {
                GridKind::Equispaced => (mu[axis] - lo) / (hi - lo) * (m - 1) as f64,
                GridKind::CellCentered => (mu[axis] - lo) / (hi - lo) * m as f64 - 0.5,
            };
            (t.round().max(0.0) as usize).min(m - 1)
        };
        axis_index(0) * self.dims[1] + axis_index(1)
    }
}

/// Exact smallest squared singular value of `matrix`: the optimal stability
/// factor for the Euclidean error bound.  Costs a sparse LU factorization
/// plus an inverse power iteration, so it scales with the truth size and is
/// reserved for the offline stage.
pub fn beta_lb_exact(matrix: &CsrMatrix) -> Result<f64> {
    let lu = SparseLu::factor(matrix)?;
    extreme_spd_eigen(
        matrix.nrows(),
        |v| {
            let t = lu.solve_transpose(v);
            lu.solve(&t)
        },
        Extreme::Smallest,
        EIGEN_REL_TOL,
        EIGEN_MAX_ITER,
    )
}

/// Dense kernel matrix of a node set, `phi[i][j] = kernel(x_i, x_j)`.
pub fn kernel_gram(nodes: &NodeSet, kernel: &Kernel) -> DenseMatrix {
    let pts = nodes.coords();
    DenseMatrix::from_fn(pts.len(), pts.len(), |i, j| kernel.value(&pts[i], &pts[j]))
}

/// Stability numerator `alpha` for the error bound: an upper proxy for the
/// largest eigenvalue of the inverse kernel matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaBound {
    pub value: f64,
    /// True when the kernel matrix lost rank in floating point and `value`
    /// fell back to the reciprocal of the smallest accepted pivot.  The
    /// fallback only rescales every error estimate by a common factor, so
    /// greedy rankings are unaffected, but the certificate is no longer a
    /// proven bound.
    pub at_floor: bool,
}

/// Computes [`AlphaBound`] from the kernel matrix of `nodes`.  Full-rank
/// matrices get the exact `1 / lambda_min` via inverse iteration on the
/// pivoted Cholesky factorization; rank-deficient ones trigger the pivot
/// floor fallback.
pub fn alpha_ub(nodes: &NodeSet, kernel: &Kernel) -> Result<AlphaBound> {
    let phi = kernel_gram(nodes, kernel);
    let n = phi.nrows();
    let pc = PivotedCholesky::new(&phi, f64::EPSILON);
    if pc.rank() < n {
        return Ok(AlphaBound { value: 1.0 / pc.last_pivot(), at_floor: true });
    }
    let lambda_min = extreme_spd_eigen(
        n,
        |v| pc.solve(v).expect("factorization verified full rank"),
        Extreme::Smallest,
        EIGEN_REL_TOL,
        EIGEN_MAX_ITER,
    )?;
    Ok(AlphaBound { value: 1.0 / lambda_min, at_floor: false })
}

/// Factorized kernel matrix for measuring vectors in the norm it induces,
/// `|v|^2 = v' * phi^{-1} * v`.  Requires full numerical rank, so it is a
/// small-problem diagnostic tool rather than part of the trained model.
pub struct NativeNormFactor {
    phi: DenseMatrix,
    pc: PivotedCholesky,
}

impl NativeNormFactor {
    pub fn new(nodes: &NodeSet, kernel: &Kernel) -> Result<Self> {
        let phi = kernel_gram(nodes, kernel);
        let pc = PivotedCholesky::new(&phi, f64::EPSILON);
        pc.require_full_rank()?;
        Ok(Self { phi, pc })
    }

    /// Norm of `v` in the kernel-induced inner product.
    pub fn norm(&self, v: &[f64]) -> Result<f64> {
        let half = self.pc.half_solve(v)?;
        Ok(half.iter().map(|x| x * x).sum::<f64>().sqrt())
    }

    /// Smallest eigenvalue of `matrix' * phi^{-1} * matrix`: the stability
    /// factor paired with kernel-norm residuals.
    pub fn beta_lb(&self, matrix: &CsrMatrix) -> Result<f64> {
        let lu = SparseLu::factor(matrix)?;
        extreme_spd_eigen(
            matrix.nrows(),
            |v| {
                let t = lu.solve_transpose(v);
                let s = self.phi.matvec(&t);
                lu.solve(&s)
            },
            Extreme::Smallest,
            EIGEN_REL_TOL,
            EIGEN_MAX_ITER,
        )
    }
}
