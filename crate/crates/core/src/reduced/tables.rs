//! Parameter-independent reduced tables and the online solve they power.
//!
//! Every inner product between operator images of basis vectors and forcing
//! components is taken once, offline.  The online stage then assembles the
//! reduced system and the residual norm for any parameter value in time that
//! depends only on the basis dimension and the number of affine terms.

use crate::error::{Error, Result};
use crate::numerics::{Cholesky, CsrMatrix, DenseMatrix};

/// Reduced systems whose estimated condition number exceeds this are
/// rejected as degenerate rather than solved into noise.
pub const DEGENERATE_COND_LIMIT: f64 = 1e14;

/// Squared residuals may dip below zero by cancellation; anything below this
/// fraction of the forcing scale is an inconsistency rather than roundoff.
pub const NEGATIVE_RESIDUAL_REL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Offline inner-product tables.
///
/// With operator images `w_{r,j} = L_r ξ_j` and forcing components `f_q`:
/// `m[r·qa+s](j, k) = w_{r,j} · w_{s,k}`, `g[r·qf+q][j] = w_{r,j} · f_q`, and
/// `f(q, q') = f_q · f_q'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTables {
    n: usize,
    qa: usize,
    qf: usize,
    m: Vec<DenseMatrix>,
    g: Vec<Vec<f64>>,
    f: DenseMatrix,
}

/// Builds [`ReducedTables`] from an orthonormal basis, the affine operator
/// terms, and the affine forcing components.
pub fn precompute_tables(
    basis: &[Vec<f64>],
    terms: &[&CsrMatrix],
    forcings: &[&[f64]],
) -> ReducedTables {
    let n = basis.len();
    let qa = terms.len();
    let qf = forcings.len();
    assert!(n > 0 && qa > 0 && qf > 0, "tables need a basis, terms, and forcing");

    let images: Vec<Vec<Vec<f64>>> = terms
        .iter()
        .map(|t| basis.iter().map(|b| t.matvec(b)).collect())
        .collect();

    let mut m = Vec::with_capacity(qa * qa);
    for r in 0..qa {
        for s in 0..qa {
            m.push(DenseMatrix::from_fn(n, n, |j, k| dot(&images[r][j], &images[s][k])));
        }
    }
    let mut g = Vec::with_capacity(qa * qf);
    for r in 0..qa {
        for q in 0..qf {
            g.push((0..n).map(|j| dot(&images[r][j], forcings[q])).collect());
        }
    }
    let f = DenseMatrix::from_fn(qf, qf, |q, p| dot(forcings[q], forcings[p]));

    ReducedTables { n, qa, qf, m, g, f }
}

/// Certified output of the online stage: reduced coefficients and the
/// Euclidean norm of the truth-space residual, both computed from tables
/// alone.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineSolution {
    pub coeffs: Vec<f64>,
    pub residual: f64,
}

impl ReducedTables {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn qa(&self) -> usize {
        self.qa
    }

    pub fn qf(&self) -> usize {
        self.qf
    }

    pub fn m_tables(&self) -> &[DenseMatrix] {
        &self.m
    }

    pub fn g_tables(&self) -> &[Vec<f64>] {
        &self.g
    }

    pub fn f_table(&self) -> &DenseMatrix {
        &self.f
    }

    /// Reassembles tables from stored parts, validating shapes.
    pub fn from_parts(
        m: Vec<DenseMatrix>,
        g: Vec<Vec<f64>>,
        f: DenseMatrix,
    ) -> Result<Self> {
        let qf = f.nrows();
        if f.ncols() != qf || qf == 0 {
            return Err(Error::ModelFormat("forcing table must be square".into()));
        }
        let qa2 = m.len();
        let qa = (qa2 as f64).sqrt().round() as usize;
        if qa * qa != qa2 || qa == 0 {
            return Err(Error::ModelFormat("operator table count must be a square".into()));
        }
        let n = m[0].nrows();
        if m.iter().any(|t| t.nrows() != n || t.ncols() != n) {
            return Err(Error::ModelFormat("operator tables must share one shape".into()));
        }
        if g.len() != qa * qf || g.iter().any(|v| v.len() != n) {
            return Err(Error::ModelFormat("cross table shape mismatch".into()));
        }
        Ok(Self { n, qa, qf, m, g, f })
    }

    /// Solves the reduced system for affine coefficients `theta_a`,
    /// `theta_f` using the leading `n_use` basis vectors, and evaluates the
    /// truth-space residual norm of the result.
    pub fn online_solve(
        &self,
        theta_a: &[f64],
        theta_f: &[f64],
        n_use: usize,
    ) -> Result<OnlineSolution> {
        if theta_a.len() != self.qa {
            return Err(Error::DimensionMismatch { expected: self.qa, got: theta_a.len() });
        }
        if theta_f.len() != self.qf {
            return Err(Error::DimensionMismatch { expected: self.qf, got: theta_f.len() });
        }
        if n_use == 0 || n_use > self.n {
            return Err(Error::Config(format!(
                "reduced dimension {n_use} outside 1..={}",
                self.n
            )));
        }

        let mut k = DenseMatrix::zeros(n_use, n_use);
        for r in 0..self.qa {
            for s in 0..self.qa {
                let w = theta_a[r] * theta_a[s];
                if w == 0.0 {
                    continue;
                }
                let block = &self.m[r * self.qa + s];
                for col in 0..n_use {
                    let src = block.col(col);
                    let dst = k.col_mut(col);
                    for row in 0..n_use {
                        dst[row] += w * src[row];
                    }
                }
            }
        }
        let mut h = vec![0.0; n_use];
        for r in 0..self.qa {
            for q in 0..self.qf {
                let w = theta_a[r] * theta_f[q];
                if w == 0.0 {
                    continue;
                }
                let gv = &self.g[r * self.qf + q];
                for j in 0..n_use {
                    h[j] += w * gv[j];
                }
            }
        }
        let mut f_scale = 0.0;
        for q in 0..self.qf {
            for p in 0..self.qf {
                f_scale += theta_f[q] * theta_f[p] * self.f.get(q, p);
            }
        }

        let chol = Cholesky::new(&k).map_err(|_| Error::DegenerateReducedSystem {
            cond_estimate: f64::INFINITY,
        })?;
        let cond = chol.cond_estimate();
        if cond > DEGENERATE_COND_LIMIT {
            return Err(Error::DegenerateReducedSystem { cond_estimate: cond });
        }
        let coeffs = chol.solve(&h);
        let kc = k.matvec(&coeffs);
        let r2 = f_scale - 2.0 * dot(&h, &coeffs) + dot(&coeffs, &kc);
        if r2 < -NEGATIVE_RESIDUAL_REL * f_scale.abs() {
            return Err(Error::NegativeResidual { value: r2, scale: f_scale });
        }
        Ok(OnlineSolution { coeffs, residual: r2.max(0.0).sqrt() })
    }
}
