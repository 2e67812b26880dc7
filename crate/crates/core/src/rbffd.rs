//! Local differentiation weights and sparse operator assembly.
//!
//! For each node, a differential operator is approximated on the node's
//! stencil by the weights that differentiate the kernel interpolant exactly:
//! solve `Φ w = b` where `Φ` is the stencil's kernel matrix and `b` holds the
//! operator applied to each kernel translate at the stencil's owning node.
//! Rows of weights form sparse differentiation matrices; a problem's affine
//! terms become a bank of matrices on one shared sparsity pattern (stencil
//! entries on interior rows, a unit diagonal on boundary rows carried by the
//! first term), so assembling the operator at a parameter value is a plain
//! linear combination of value arrays.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{Deriv, Kernel};
use crate::nodes::{NodeSet, Stencils};
use crate::numerics::{Cholesky, CsrMatrix, DenseMatrix, LuFactor, SparseLu};
use crate::problems::{ManufacturedCase, Problem};

/// Relative backward-error bound a direct solve must satisfy:
/// `‖b − Ax‖ ≤ RESIDUAL_LIMIT · (‖A‖_F ‖x‖ + ‖b‖)`.
pub const RESIDUAL_LIMIT: f64 = 1e-10;

/// Factorization of one stencil's kernel matrix: Cholesky for positive
/// definite profiles, pivoted LU for the conditionally positive definite
/// ones whose matrices are symmetric but indefinite.
enum StencilFactor {
    Chol(Cholesky),
    Lu(LuFactor),
}

impl StencilFactor {
    fn new(kernel: &Kernel, phi: &DenseMatrix) -> Result<Self> {
        if kernel.family().positive_definite() {
            Ok(Self::Chol(Cholesky::new(phi)?))
        } else {
            Ok(Self::Lu(LuFactor::new(phi)?))
        }
    }

    fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            Self::Chol(ch) => ch.solve_in_place(b),
            Self::Lu(lu) => {
                let x = lu.solve(b);
                b.copy_from_slice(&x);
            }
        }
    }
}

/// Weights that apply `deriv` at `coords[0]` (the stencil's owning node) to
/// nodal values on the stencil.
///
/// The returned `w` satisfies `Σ_k w_k g(x_k) = (deriv g)(x_0)` exactly for
/// every `g` in the span of the stencil's kernel translates. [`Deriv::Value`]
/// short-circuits to the exact point-evaluation row. The local kernel matrix
/// is factorized by Cholesky for positive definite profiles and by pivoted
/// LU otherwise.
pub fn local_weights(kernel: &Kernel, coords: &[[f64; 3]], deriv: Deriv) -> Result<Vec<f64>> {
    let n = coords.len();
    assert!(n > 0, "empty stencil");
    if matches!(deriv, Deriv::Value) {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        return Ok(w);
    }
    let phi = DenseMatrix::from_fn(n, n, |a, b| kernel.value(&coords[a], &coords[b]));
    let factor = StencilFactor::new(kernel, &phi)?;
    let master = coords[0];
    let mut b = Vec::with_capacity(n);
    for c in coords {
        b.push(kernel.partial(c, &master, deriv)?);
    }
    factor.solve_in_place(&mut b);
    Ok(b)
}

/// Per-node weight rows for several derivative operators, factorizing each
/// stencil once. Layout: `rows[node][d * n_loc + k]` with `d` indexing
/// `derivs` and `k` the stencil slot.
fn weight_rows(
    nodes: &NodeSet,
    stencils: &Stencils,
    kernel: &Kernel,
    derivs: &[Deriv],
    node_range: std::ops::Range<usize>,
) -> Result<Vec<Vec<f64>>> {
    let n_loc = stencils.n_loc();
    node_range
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let members = stencils.members(i);
            let coords: Vec<[f64; 3]> = members.iter().map(|&j| *nodes.point(j)).collect();
            let phi =
                DenseMatrix::from_fn(n_loc, n_loc, |a, b| kernel.value(&coords[a], &coords[b]));
            let factor = StencilFactor::new(kernel, &phi)
                .map_err(|_| Error::WeightFactorization { master: i })?;
            let master = coords[0];
            let mut out = vec![0.0; derivs.len() * n_loc];
            for (d, &deriv) in derivs.iter().enumerate() {
                let row = &mut out[d * n_loc..(d + 1) * n_loc];
                if matches!(deriv, Deriv::Value) {
                    row[0] = 1.0;
                    continue;
                }
                for (k, c) in coords.iter().enumerate() {
                    row[k] = kernel.partial(c, &master, deriv)?;
                }
                factor.solve_in_place(row);
            }
            Ok(out)
        })
        .collect()
}

/// Global sparse differentiation matrix: row `i` holds node `i`'s stencil
/// weights for `deriv` (every row, boundary nodes included).
pub fn assemble_diff_matrix(
    nodes: &NodeSet,
    stencils: &Stencils,
    kernel: &Kernel,
    deriv: Deriv,
) -> Result<CsrMatrix> {
    let n = nodes.n();
    let rows = weight_rows(nodes, stencils, kernel, &[deriv], 0..n)?;
    let n_loc = stencils.n_loc();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::with_capacity(n * n_loc);
    let mut values = Vec::with_capacity(n * n_loc);
    indptr.push(0);
    let mut order: Vec<usize> = Vec::with_capacity(n_loc);
    for i in 0..n {
        let members = stencils.members(i);
        order.clear();
        order.extend(0..n_loc);
        order.sort_by_key(|&k| members[k]);
        for &k in &order {
            indices.push(members[k]);
            values.push(rows[i][k]);
        }
        indptr.push(indices.len());
    }
    Ok(CsrMatrix::from_raw(n, n, indptr, indices, values))
}

/// Affine operator bank: one matrix per problem term, all sharing a sparsity
/// pattern. Interior rows discretize the term's atoms on the node's stencil;
/// boundary rows are the identity, carried by the first term and zero in the
/// others.
#[derive(Debug, Clone)]
pub struct OperatorBank {
    terms: Vec<CsrMatrix>,
    n_interior: usize,
}

impl OperatorBank {
    pub fn terms(&self) -> Vec<&CsrMatrix> {
        self.terms.iter().collect()
    }

    pub fn term(&self, q: usize) -> &CsrMatrix {
        &self.terms[q]
    }

    pub fn qa(&self) -> usize {
        self.terms.len()
    }

    pub fn n(&self) -> usize {
        self.terms[0].nrows()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Assembles `Σ_q theta[q] · L_q`.
    pub fn assemble(&self, theta: &[f64]) -> CsrMatrix {
        assert_eq!(theta.len(), self.terms.len());
        let refs: Vec<&CsrMatrix> = self.terms.iter().collect();
        CsrMatrix::combine_same_pattern(theta, &refs)
    }
}

/// Discretizes every affine term of `problem` on the given nodes and stencils.
pub fn build_operator_bank(
    problem: &Problem,
    nodes: &NodeSet,
    stencils: &Stencils,
    kernel: &Kernel,
) -> Result<OperatorBank> {
    let n = nodes.n();
    let n_int = nodes.n_interior();
    let n_loc = stencils.n_loc();
    let qa = problem.qa();
    let derivs = problem.operator_derivs();
    let rows = weight_rows(nodes, stencils, kernel, &derivs, 0..n_int)?;

    // Shared pattern: sorted stencil on interior rows, diagonal on boundary rows.
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut term_values: Vec<Vec<f64>> = vec![Vec::new(); qa];
    indptr.push(0);
    let mut order: Vec<usize> = Vec::with_capacity(n_loc);
    for i in 0..n_int {
        let members = stencils.members(i);
        order.clear();
        order.extend(0..n_loc);
        order.sort_by_key(|&k| members[k]);
        let xi = nodes.point(i);
        for &k in &order {
            indices.push(members[k]);
            for (q, term) in problem.terms.iter().enumerate() {
                let mut v = 0.0;
                for atom in &term.atoms {
                    let d = derivs.iter().position(|&dd| dd == atom.deriv).unwrap();
                    v += atom.scale * atom.weight.eval(xi) * rows[i][d * n_loc + k];
                }
                term_values[q].push(v);
            }
        }
        indptr.push(indices.len());
    }
    for i in n_int..n {
        indices.push(i);
        for (q, vals) in term_values.iter_mut().enumerate() {
            vals.push(if q == 0 { 1.0 } else { 0.0 });
        }
        indptr.push(indices.len());
    }

    let terms: Vec<CsrMatrix> = term_values
        .into_iter()
        .map(|vals| CsrMatrix::from_raw(n, n, indptr.clone(), indices.clone(), vals))
        .collect();
    Ok(OperatorBank {
        terms,
        n_interior: n_int,
    })
}

/// Right-hand side for the reduced stage: the problem's fixed forcing on
/// interior rows, homogeneous Dirichlet data on boundary rows.
pub fn rb_rhs(problem: &Problem, nodes: &NodeSet) -> Vec<f64> {
    (0..nodes.n())
        .map(|i| {
            if nodes.is_boundary(i) {
                0.0
            } else {
                problem.rb_forcing(nodes.point(i))
            }
        })
        .collect()
}

/// Right-hand side manufactured from a known exact solution: the strong
/// operator's value on interior rows, the solution's trace on boundary rows.
pub fn manufactured_system_rhs(
    problem: &Problem,
    case: ManufacturedCase,
    mu: [f64; 2],
    nodes: &NodeSet,
) -> Vec<f64> {
    let dim = problem.dim();
    (0..nodes.n())
        .map(|i| {
            let p = nodes.point(i);
            if nodes.is_boundary(i) {
                case.solution(dim, p)
            } else {
                crate::problems::manufactured_rhs(problem, case, mu, p)
            }
        })
        .collect()
}

/// Direct solve of the assembled truth system with backward-error validation:
/// the solution is rejected unless `‖b − Ax‖ ≤ 1e-10 (‖A‖_F ‖x‖ + ‖b‖)`.
pub fn truth_solve(matrix: &CsrMatrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let lu = SparseLu::factor(matrix)?;
    let x = lu.solve(rhs);
    validate_residual(matrix, &x, rhs)?;
    Ok(x)
}

pub(crate) fn validate_residual(matrix: &CsrMatrix, x: &[f64], rhs: &[f64]) -> Result<()> {
    let ax = matrix.matvec(x);
    let mut r2 = 0.0;
    for (ai, bi) in ax.iter().zip(rhs) {
        r2 += (ai - bi) * (ai - bi);
    }
    let norm_r = r2.sqrt();
    let norm_a: f64 = matrix.values().iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_x: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_b: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    let scale = norm_a * norm_x + norm_b;
    if norm_r > RESIDUAL_LIMIT * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::ResidualValidation {
            residual: norm_r / scale.max(f64::MIN_POSITIVE),
            limit: RESIDUAL_LIMIT,
        });
    }
    Ok(())
}

/// Root-mean-square ℓ² distance `‖a − b‖₂ / √N` between nodal vectors.
pub fn rms_error(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / a.len() as f64).sqrt()
}
