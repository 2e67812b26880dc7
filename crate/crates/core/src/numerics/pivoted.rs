//! Diagonally pivoted Cholesky: full factorization with permutation for
//! near-singular SPD matrices, and a low-memory greedy selection variant that
//! reads matrix rows on demand.

use crate::error::{Error, Result};
use crate::numerics::dense::DenseMatrix;

/// Result of the greedy pivoted-Cholesky selection: chosen indices in pivot
/// order and the pivot diagonal value at each step (non-increasing).
#[derive(Debug, Clone)]
pub struct GramSelection {
    pub indices: Vec<usize>,
    pub diag_trace: Vec<f64>,
}

/// Greedy diagonal-pivoted Cholesky on an implicit symmetric PSD matrix.
///
/// `diag` holds the initial diagonal; `row(p, buf)` must fill `buf` with row
/// `p` of the matrix. Only the selected rows are ever requested, so the full
/// matrix is never formed: memory is `O(n_select * m)`.
///
/// At each step the largest remaining Schur-complement diagonal entry is
/// selected (ties broken toward the lowest index). Stops with
/// [`Error::SelectionExhausted`] if that entry falls to `stop_tol` or below
/// before `n_select` indices are chosen.
pub fn pivoted_gram_select(
    diag: &[f64],
    mut row: impl FnMut(usize, &mut [f64]),
    n_select: usize,
    stop_tol: f64,
) -> Result<GramSelection> {
    let m = diag.len();
    assert!(n_select <= m, "cannot select more points than provided");
    let mut d = diag.to_vec();
    let mut selected = vec![false; m];
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n_select);
    let mut indices = Vec::with_capacity(n_select);
    let mut diag_trace = Vec::with_capacity(n_select);
    let mut rbuf = vec![0.0; m];

    for step in 0..n_select {
        let mut p = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for i in 0..m {
            if !selected[i] && d[i] > best {
                best = d[i];
                p = i;
            }
        }
        if !(best > stop_tol) {
            return Err(Error::SelectionExhausted {
                selected: step,
                requested: n_select,
            });
        }

        row(p, &mut rbuf);
        let inv_sqrt = 1.0 / best.sqrt();
        let mut col = vec![0.0; m];
        for i in 0..m {
            let mut s = rbuf[i];
            for c in &cols {
                s -= c[p] * c[i];
            }
            col[i] = s * inv_sqrt;
        }
        for i in 0..m {
            if !selected[i] {
                d[i] -= col[i] * col[i];
            }
        }
        selected[p] = true;
        d[p] = f64::NEG_INFINITY;
        indices.push(p);
        diag_trace.push(best);
        cols.push(col);
    }

    Ok(GramSelection { indices, diag_trace })
}

/// Full diagonally pivoted Cholesky factorization `P A Pᵀ = L Lᵀ`.
///
/// Unlike plain Cholesky this survives numerically semi-definite input: it
/// stops once the remaining diagonal drops to `stop_rel` relative to the first
/// pivot and records the achieved `rank`. Solves require full rank.
#[derive(Debug, Clone)]
pub struct PivotedCholesky {
    /// Columns of `L` in factor order, each indexed by *original* row index.
    cols: Vec<Vec<f64>>,
    /// `order[k]` is the original index pivoted to position `k`.
    order: Vec<usize>,
    diag_trace: Vec<f64>,
    rank: usize,
    n: usize,
}

impl PivotedCholesky {
    /// Factors symmetric `a`, reading only its lower triangle. `stop_rel`
    /// terminates the factorization once the largest remaining diagonal entry
    /// is `<= stop_rel * first_pivot` (use `0.0` to run to breakdown).
    pub fn new(a: &DenseMatrix, stop_rel: f64) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "matrix must be square");
        let mut d: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
        let mut selected = vec![false; n];
        let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut order = Vec::with_capacity(n);
        let mut diag_trace = Vec::with_capacity(n);
        let mut threshold = 0.0;

        for step in 0..n {
            let mut p = usize::MAX;
            let mut best = f64::NEG_INFINITY;
            for i in 0..n {
                if !selected[i] && d[i] > best {
                    best = d[i];
                    p = i;
                }
            }
            if step == 0 {
                threshold = stop_rel * best;
            }
            if !(best > threshold) || best <= 0.0 {
                break;
            }
            let inv_sqrt = 1.0 / best.sqrt();
            let mut col = vec![0.0; n];
            for i in 0..n {
                // Lower-triangle access: a[max,min].
                let (r, c) = if i >= p { (i, p) } else { (p, i) };
                let mut s = a.get(r, c);
                for prev in &cols {
                    s -= prev[p] * prev[i];
                }
                col[i] = s * inv_sqrt;
            }
            for i in 0..n {
                if !selected[i] {
                    d[i] -= col[i] * col[i];
                }
            }
            selected[p] = true;
            d[p] = f64::NEG_INFINITY;
            order.push(p);
            diag_trace.push(best);
            cols.push(col);
        }

        let rank = order.len();
        Self {
            cols,
            order,
            diag_trace,
            rank,
            n,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Pivot order; `order()[k]` is the original index chosen at step `k`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Pivot diagonal values in selection order (non-increasing).
    pub fn diag_trace(&self) -> &[f64] {
        &self.diag_trace
    }

    /// Smallest accepted pivot (resolution floor of the factorization).
    pub fn last_pivot(&self) -> f64 {
        *self.diag_trace.last().unwrap_or(&0.0)
    }

    /// Errors unless the factorization ran to completion without hitting the
    /// pivot threshold.
    pub fn require_full_rank(&self) -> Result<()> {
        if self.rank < self.n {
            return Err(Error::NotPositiveDefinite { pivot: self.rank });
        }
        Ok(())
    }

    /// Solves `A x = b` through the pivoted factor. Requires full rank.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.require_full_rank()?;
        assert_eq!(b.len(), self.n);
        let y = self.forward_permuted(b);
        // Backward: Lᵀ z = y with L[t][k] = cols[k][order[t]].
        let n = self.n;
        let mut z = y;
        for k in (0..n).rev() {
            let colk = &self.cols[k];
            let mut s = z[k];
            for t in k + 1..n {
                s -= colk[self.order[t]] * z[t];
            }
            z[k] = s / colk[self.order[k]];
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.order[k]] = z[k];
        }
        Ok(x)
    }

    /// Computes `y = L⁻¹ P b` (factor-order coordinates). `‖y‖₂` is the
    /// energy norm of `b` in the metric defined by `A`. Requires full rank.
    pub fn half_solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.require_full_rank()?;
        assert_eq!(b.len(), self.n);
        Ok(self.forward_permuted(b))
    }

    fn forward_permuted(&self, b: &[f64]) -> Vec<f64> {
        // Forward: L y = P b with L[k][t] = cols[t][order[k]].
        let n = self.rank;
        let mut y = vec![0.0; n];
        for k in 0..n {
            let ok = self.order[k];
            let mut s = b[ok];
            for t in 0..k {
                s -= self.cols[t][ok] * y[t];
            }
            y[k] = s / self.cols[k][ok];
        }
        y
    }
}
