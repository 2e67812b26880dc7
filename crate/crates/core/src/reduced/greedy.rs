//! Greedy offline training: snapshot selection driven by the certified
//! error estimate.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::nodes::NodeSet;
use crate::problems::Problem;
use crate::rbffd::{rb_rhs, truth_solve, OperatorBank};

use super::basis::orthonormalize;
use super::tables::{precompute_tables, OnlineSolution, ReducedTables};
use super::{alpha_ub, beta_lb_exact, AlphaBound, TrainingGrid};

/// Stopping rule for the greedy loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyOptions {
    /// Basis-size cap.
    pub n_max: usize,
    /// Stop once the largest error estimate over the training grid falls to
    /// this value or below.
    pub tol: f64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self { n_max: 20, tol: 0.0 }
    }
}

/// One greedy round: with `n` basis vectors, the worst training parameter
/// and its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyStep {
    pub n: usize,
    pub mu: [f64; 2],
    pub max_estimate: f64,
}

/// Result of a certified online query.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineQuery {
    pub coeffs: Vec<f64>,
    /// Euclidean norm of the truth-space residual.
    pub residual: f64,
    /// Certified error estimate in the kernel norm.
    pub estimate: f64,
}

/// Everything the online stage needs, plus enough training metadata to
/// rebuild or audit the run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub problem: Problem,
    pub kernel: Kernel,
    pub nodes: NodeSet,
    pub n_loc: usize,
    pub training: TrainingGrid,
    /// Exact stability factor at each training parameter, in grid order.
    pub beta_values: Vec<f64>,
    pub alpha: AlphaBound,
    /// Greedily selected parameters, in selection order.
    pub selected: Vec<[f64; 2]>,
    /// Truth solutions at the selected parameters.
    pub snapshots: Vec<Vec<f64>>,
    /// Orthonormalized basis spanning the snapshots.
    pub basis: Vec<Vec<f64>>,
    pub tables: ReducedTables,
    pub history: Vec<GreedyStep>,
}

impl TrainedModel {
    /// Basis dimension.
    pub fn n_rb(&self) -> usize {
        self.basis.len()
    }

    /// Truth dimension.
    pub fn n_truth(&self) -> usize {
        self.nodes.n()
    }

    /// Stability factor at the training parameter nearest to `mu`.
    pub fn beta_nearest(&self, mu: [f64; 2]) -> f64 {
        self.beta_values[self.training.nearest_index(mu)]
    }

    /// Error estimate from a residual norm: `sqrt(alpha) * r / sqrt(beta)`.
    pub fn estimate_from_residual(&self, residual: f64, mu: [f64; 2]) -> f64 {
        self.alpha.value.sqrt() * residual / self.beta_nearest(mu).sqrt()
    }

    /// Certified reduced solve at `mu` with the leading `n_use` basis
    /// vectors.
    pub fn online_query(&self, mu: [f64; 2], n_use: usize) -> Result<OnlineQuery> {
        let theta = self.problem.coeff_values(mu);
        let OnlineSolution { coeffs, residual } =
            self.tables.online_solve(&theta, &[1.0], n_use)?;
        let estimate = self.estimate_from_residual(residual, mu);
        Ok(OnlineQuery { coeffs, residual, estimate })
    }

    /// Lifts reduced coefficients back to a truth-space vector.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        assert!(coeffs.len() <= self.basis.len());
        let mut out = vec![0.0; self.n_truth()];
        for (c, b) in coeffs.iter().zip(&self.basis) {
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }
}

/// Trains a reduced model.
///
/// The first snapshot is taken at the first training parameter; every later
/// round re-orthonormalizes all snapshots, rebuilds the tables, scans the
/// training grid for the largest error estimate (excluding already selected
/// parameters, ties to the lowest index), and solves the truth system there.
/// Stops at `opts.n_max` basis vectors, at `opts.tol`, or when the grid is
/// exhausted.
pub fn greedy_offline(
    problem: &Problem,
    kernel: &Kernel,
    nodes: &NodeSet,
    n_loc: usize,
    bank: &OperatorBank,
    training: TrainingGrid,
    opts: GreedyOptions,
) -> Result<TrainedModel> {
    if opts.n_max == 0 {
        return Err(Error::Config("basis-size cap must be positive".into()));
    }
    if training.is_empty() {
        return Err(Error::Config("training grid is empty".into()));
    }
    let mus = training.mus().to_vec();

    let beta_values: Vec<f64> = mus
        .par_iter()
        .map(|&mu| beta_lb_exact(&bank.assemble(&problem.coeff_values(mu))))
        .collect::<Result<_>>()?;
    let alpha = alpha_ub(nodes, kernel)?;
    let forcing = rb_rhs(problem, nodes);
    let metric = bank.assemble(&problem.coeff_values(problem.mu_center()));

    let solve_at = |mu: [f64; 2]| -> Result<Vec<f64>> {
        truth_solve(&bank.assemble(&problem.coeff_values(mu)), &forcing)
    };

    let mut selected_idx = vec![0usize];
    let mut selected = vec![mus[0]];
    let mut snapshots = vec![solve_at(mus[0])?];
    let mut history = Vec::new();

    loop {
        let (basis, _) = orthonormalize(&snapshots, &metric)?;
        let tables = precompute_tables(&basis, &bank.terms(), &[&forcing]);
        let n = basis.len();

        let estimates: Vec<f64> = mus
            .par_iter()
            .enumerate()
            .map(|(i, &mu)| -> Result<f64> {
                if selected_idx.contains(&i) {
                    return Ok(f64::NEG_INFINITY);
                }
                let sol = tables.online_solve(&problem.coeff_values(mu), &[1.0], n)?;
                Ok(alpha.value.sqrt() * sol.residual / beta_values[i].sqrt())
            })
            .collect::<Result<_>>()?;
        let mut best_i = 0;
        let mut best = f64::NEG_INFINITY;
        for (i, &e) in estimates.iter().enumerate() {
            if e > best {
                best = e;
                best_i = i;
            }
        }
        history.push(GreedyStep { n, mu: mus[best_i], max_estimate: best });

        if n >= opts.n_max || !(best > opts.tol) {
            return Ok(TrainedModel {
                problem: problem.clone(),
                kernel: *kernel,
                nodes: nodes.clone(),
                n_loc,
                training,
                beta_values,
                alpha,
                selected,
                snapshots,
                basis,
                tables,
                history,
            });
        }

        snapshots.push(solve_at(mus[best_i])?);
        selected_idx.push(best_i);
        selected.push(mus[best_i]);
    }
}
