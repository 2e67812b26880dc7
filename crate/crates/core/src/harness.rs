//! Experiment harness: configuration, pipeline assembly, CSV output, and
//! the drivers behind the command-line experiments.
//!
//! Every driver reads an [`ExperimentConfig`], resolves omitted fields to
//! dimension-appropriate defaults, writes its results as CSV files under
//! `out_dir` (configuration echoed in `#` comment lines, floats in
//! full-precision scientific notation), and returns the same results as a
//! struct. Drivers that load a saved model take the problem, kernel, and
//! discretization identity from the model file itself; config fields supply
//! only the query inputs (`mu`, `n_rb`, `samples`, `seed`, grid and timing
//! counts) and the file locations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::generate_candidates;
use crate::kernels::{Kernel, KernelFamily};
use crate::nodes::{build_stencils, select_node_set, NodeSet, SelectionDiagnostics, Stencils};
use crate::problems::{ManufacturedCase, Problem};
use crate::rbffd::{
    build_operator_bank, manufactured_system_rhs, rb_rhs, rms_error, truth_solve, OperatorBank,
};
use crate::reduced::{
    beta_lb_exact, greedy_offline, load_model, save_model, GreedyOptions, GridKind,
    NativeNormFactor, OnlineQuery, TrainedModel, TrainingGrid,
};

/// Experiment configuration.  Optional fields default per problem
/// dimension; see [`ExperimentConfig::resolve`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Problem name: `awave2d`, `diff2d`, `awave3d`, or `diff3d`.
    pub problem: String,
    /// Kernel family name (`imq`, `ga`, `mq`, `cubic`, `tps`).
    pub kernel: String,
    /// Shape parameter; defaults to 3.0 in 2D, 0.75 in 3D.
    pub eps: Option<f64>,
    /// Interior node count; defaults to 850 in 2D, 1364 in 3D.
    pub n_interior: Option<usize>,
    /// Boundary node count; defaults to 150 in 2D, 682 in 3D.
    pub n_boundary: Option<usize>,
    /// Stencil size; defaults to 50 in 2D, 125 in 3D.
    pub n_loc: Option<usize>,
    /// Interior candidate count offered to node selection; defaults to
    /// three times the interior target.
    pub candidate_interior: Option<usize>,
    /// Boundary candidate count; defaults to three times the boundary
    /// target.
    pub candidate_boundary: Option<usize>,
    /// Training grid dimensions over the parameter box.
    pub train_dims: [usize; 2],
    /// Held-out cell-centered test grid dimensions.
    pub test_dims: [usize; 2],
    /// Basis-size cap for the greedy loop.
    pub n_max: usize,
    /// Greedy stopping tolerance on the error estimate.
    pub tol: f64,
    /// Seed for every randomized sweep.
    pub seed: u64,
    /// Parameter value for single-solve experiments; defaults to the center
    /// of the parameter box (for online queries, the trained model's box).
    pub mu: Option<[f64; 2]>,
    /// Reduced dimension for online queries; defaults to the full basis.
    pub n_rb: Option<usize>,
    /// Manufactured solution for truth experiments: `trig` or `peaks`.
    pub case: String,
    /// Total node counts swept by the truth convergence study.
    pub n_values: Vec<usize>,
    /// Random parameter samples drawn by the bound check.
    pub samples: usize,
    /// Truth solves timed by the timing study.
    pub timing_truth: usize,
    /// Online solves timed by the timing study.
    pub timing_online: usize,
    /// Model file path; defaults to `out_dir/model_<problem>.r2bf`.
    pub model: Option<PathBuf>,
    /// Output directory for CSV files and models.
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "awave2d".into(),
            kernel: "imq".into(),
            eps: None,
            n_interior: None,
            n_boundary: None,
            n_loc: None,
            candidate_interior: None,
            candidate_boundary: None,
            train_dims: [33, 33],
            test_dims: [20, 20],
            n_max: 20,
            tol: 0.0,
            seed: 7,
            mu: None,
            n_rb: None,
            case: "trig".into(),
            n_values: vec![250, 500, 1000],
            samples: 50,
            timing_truth: 30,
            timing_online: 1000,
            model: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    /// Reads a config from a JSON file.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Fills in dimension-dependent defaults and parses names.
    pub fn resolve(&self) -> Result<Resolved> {
        let problem = Problem::by_name(&self.problem)?;
        let family = KernelFamily::parse(&self.kernel)?;
        let d3 = problem.dim() == 3;
        let kernel = Kernel::new(family, self.eps.unwrap_or(if d3 { 0.75 } else { 3.0 }))?;
        let n_interior = self.n_interior.unwrap_or(if d3 { 1364 } else { 850 });
        let n_boundary = self.n_boundary.unwrap_or(if d3 { 682 } else { 150 });
        let n_loc = self.n_loc.unwrap_or(if d3 { 125 } else { 50 });
        if n_interior == 0 || n_boundary == 0 {
            return Err(Error::Config("node counts must be positive".into()));
        }
        if n_loc == 0 || n_loc > n_interior + n_boundary {
            return Err(Error::Config(format!(
                "stencil size {n_loc} outside 1..={}",
                n_interior + n_boundary
            )));
        }
        let case = ManufacturedCase::parse(&self.case)?;
        let mu = self.mu.unwrap_or_else(|| problem.mu_center());
        let model_path = self
            .model
            .clone()
            .unwrap_or_else(|| self.out_dir.join(format!("model_{}.r2bf", problem.name)));
        Ok(Resolved {
            kernel,
            n_interior,
            n_boundary,
            n_loc,
            cand_interior: self.candidate_interior.unwrap_or(3 * n_interior),
            cand_boundary: self.candidate_boundary.unwrap_or(3 * n_boundary),
            case,
            mu,
            train_dims: self.train_dims,
            test_dims: self.test_dims,
            n_max: self.n_max,
            tol: self.tol,
            seed: self.seed,
            samples: self.samples,
            timing_truth: self.timing_truth,
            timing_online: self.timing_online,
            n_rb: self.n_rb,
            model_path,
            out_dir: self.out_dir.clone(),
            problem,
        })
    }
}

/// [`ExperimentConfig`] with every default filled in and every name parsed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub problem: Problem,
    pub kernel: Kernel,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub n_loc: usize,
    pub cand_interior: usize,
    pub cand_boundary: usize,
    pub case: ManufacturedCase,
    pub mu: [f64; 2],
    pub train_dims: [usize; 2],
    pub test_dims: [usize; 2],
    pub n_max: usize,
    pub tol: f64,
    pub seed: u64,
    pub samples: usize,
    pub timing_truth: usize,
    pub timing_online: usize,
    pub n_rb: Option<usize>,
    pub model_path: PathBuf,
    pub out_dir: PathBuf,
}

impl Resolved {
    fn comments(&self) -> Vec<String> {
        vec![
            format!("problem = {}", self.problem.name),
            format!("kernel = {} eps = {}", self.kernel.family().name(), self.kernel.eps()),
            format!(
                "n = {} (interior {}, boundary {})",
                self.n_interior + self.n_boundary,
                self.n_interior,
                self.n_boundary
            ),
            format!("n_loc = {}", self.n_loc),
            format!(
                "candidates = {} interior, {} boundary",
                self.cand_interior, self.cand_boundary
            ),
            format!("seed = {}", self.seed),
        ]
    }

    /// Comment header for experiments that load a saved model: the problem,
    /// kernel, and discretization identity come from the model file, not
    /// from config defaults.
    fn model_comments(&self, model: &TrainedModel) -> Vec<String> {
        vec![
            format!("problem = {}", model.problem.name),
            format!(
                "kernel = {} eps = {}",
                model.kernel.family().name(),
                model.kernel.eps()
            ),
            format!(
                "n = {} (interior {}, boundary {})",
                model.nodes.n(),
                model.nodes.n_interior(),
                model.nodes.n() - model.nodes.n_interior()
            ),
            format!("n_loc = {}", model.n_loc),
            format!("n_rb = {}", model.n_rb()),
            format!("seed = {}", self.seed),
        ]
    }

    /// Node selection plus stencils and the affine operator bank.
    pub fn build_truth(&self) -> Result<TruthSetup> {
        let cands = generate_candidates(
            self.problem.domain,
            self.cand_interior,
            self.cand_boundary,
        )?;
        let (nodes, diagnostics) =
            select_node_set(&cands, &self.kernel, self.n_interior, self.n_boundary)?;
        let stencils = build_stencils(&nodes, self.n_loc)?;
        let bank = build_operator_bank(&self.problem, &nodes, &stencils, &self.kernel)?;
        Ok(TruthSetup { nodes, stencils, bank, diagnostics })
    }
}

/// Discretization pipeline output: nodes, stencils, and per-term operator
/// matrices.
#[derive(Debug)]
pub struct TruthSetup {
    pub nodes: NodeSet,
    pub stencils: Stencils,
    pub bank: OperatorBank,
    pub diagnostics: SelectionDiagnostics,
}

/// Full-precision scientific notation, the CSV number format.
pub fn sci(x: f64) -> String {
    format!("{x:.17e}")
}

fn write_csv(
    path: &Path,
    comments: &[String],
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut text = String::new();
    for c in comments {
        text.push_str("# ");
        text.push_str(c);
        text.push('\n');
    }
    text.push_str(&header.join(","));
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// `count` parameter values drawn uniformly from the box, reproducibly.
pub fn sample_parameters(param_box: [[f64; 2]; 2], count: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            [
                param_box[0][0] + rng.random::<f64>() * (param_box[0][1] - param_box[0][0]),
                param_box[1][0] + rng.random::<f64>() * (param_box[1][1] - param_box[1][0]),
            ]
        })
        .collect()
}

fn load_model_checked(path: &Path) -> Result<TrainedModel> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "model file {} not found; run the offline stage first",
            path.display()
        )));
    }
    load_model(path)
}

fn rebuild_bank(model: &TrainedModel) -> Result<OperatorBank> {
    let stencils = build_stencils(&model.nodes, model.n_loc)?;
    build_operator_bank(&model.problem, &model.nodes, &stencils, &model.kernel)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Drivers
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct SelectNodesOutput {
    pub nodes: NodeSet,
    pub diagnostics: SelectionDiagnostics,
    pub files: Vec<PathBuf>,
}

/// Generates candidates, runs node selection, and writes the node list and
/// the pivot-decay traces.
pub fn run_select_nodes(cfg: &ExperimentConfig) -> Result<SelectNodesOutput> {
    let r = cfg.resolve()?;
    let cands =
        generate_candidates(r.problem.domain, r.cand_interior, r.cand_boundary)?;
    let (nodes, diagnostics) =
        select_node_set(&cands, &r.kernel, r.n_interior, r.n_boundary)?;

    let nodes_path = r.out_dir.join(format!("nodes_{}.csv", r.problem.name));
    let rows: Vec<Vec<String>> = nodes
        .coords()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                i.to_string(),
                sci(p[0]),
                sci(p[1]),
                sci(p[2]),
                (nodes.is_boundary(i) as u8).to_string(),
            ]
        })
        .collect();
    write_csv(&nodes_path, &r.comments(), &["index", "x", "y", "z", "boundary"], &rows)?;

    let trace_path = r
        .out_dir
        .join(format!("selection_trace_{}.csv", r.problem.name));
    let steps = diagnostics
        .interior_trace
        .len()
        .max(diagnostics.boundary_trace.len());
    let trace_rows: Vec<Vec<String>> = (0..steps)
        .map(|k| {
            let cell = |t: &[f64]| t.get(k).map(|&v| sci(v)).unwrap_or_default();
            vec![
                k.to_string(),
                cell(&diagnostics.interior_trace),
                cell(&diagnostics.boundary_trace),
            ]
        })
        .collect();
    write_csv(
        &trace_path,
        &r.comments(),
        &["step", "interior_pivot", "boundary_pivot"],
        &trace_rows,
    )?;

    Ok(SelectNodesOutput { nodes, diagnostics, files: vec![nodes_path, trace_path] })
}

#[derive(Debug)]
pub struct TruthSolveOutput {
    pub n: usize,
    pub rms: f64,
    pub max_abs: f64,
    pub seconds: f64,
    pub files: Vec<PathBuf>,
}

/// Solves the truth system against a manufactured solution at one parameter
/// value and reports the nodal error.
pub fn run_truth_solve(cfg: &ExperimentConfig) -> Result<TruthSolveOutput> {
    let r = cfg.resolve()?;
    let setup = r.build_truth()?;
    let theta = r.problem.coeff_values(r.mu);
    let rhs = manufactured_system_rhs(&r.problem, r.case, r.mu, &setup.nodes);

    let start = Instant::now();
    let matrix = setup.bank.assemble(&theta);
    let solution = truth_solve(&matrix, &rhs)?;
    let seconds = start.elapsed().as_secs_f64();

    let dim = r.problem.dim();
    let exact: Vec<f64> = setup
        .nodes
        .coords()
        .iter()
        .map(|p| r.case.solution(dim, p))
        .collect();
    let rms = rms_error(&solution, &exact);
    let max_abs = solution
        .iter()
        .zip(&exact)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let path = r.out_dir.join(format!("truth_solve_{}.csv", r.problem.name));
    let mut comments = r.comments();
    comments.push(format!("case = {}", r.case.name()));
    write_csv(
        &path,
        &comments,
        &["n", "mu1", "mu2", "rms_error", "max_error", "seconds"],
        &[vec![
            setup.nodes.n().to_string(),
            sci(r.mu[0]),
            sci(r.mu[1]),
            sci(rms),
            sci(max_abs),
            sci(seconds),
        ]],
    )?;
    Ok(TruthSolveOutput { n: setup.nodes.n(), rms, max_abs, seconds, files: vec![path] })
}

#[derive(Debug)]
pub struct ConvergencePoint {
    pub n: usize,
    pub rms: f64,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct TruthConvergenceOutput {
    pub points: Vec<ConvergencePoint>,
    pub files: Vec<PathBuf>,
}

/// Sweeps total node count and reports the manufactured-solution error at
/// each size, holding the boundary share and candidate ratio fixed.
pub fn run_truth_convergence(cfg: &ExperimentConfig) -> Result<TruthConvergenceOutput> {
    let r = cfg.resolve()?;
    if cfg.n_values.is_empty() {
        return Err(Error::Config("truth convergence needs a non-empty n_values".into()));
    }
    let share = r.n_boundary as f64 / (r.n_interior + r.n_boundary) as f64;
    let mut points = Vec::with_capacity(cfg.n_values.len());
    for &n in &cfg.n_values {
        let n_boundary = ((n as f64 * share).round() as usize).max(1);
        let n_interior = n
            .checked_sub(n_boundary)
            .filter(|&v| v > 0)
            .ok_or_else(|| Error::Config(format!("swept node count {n} is too small")))?;
        let sub = Resolved {
            n_interior,
            n_boundary,
            cand_interior: 3 * n_interior,
            cand_boundary: 3 * n_boundary,
            ..r.clone()
        };
        let setup = sub.build_truth()?;
        let theta = sub.problem.coeff_values(sub.mu);
        let rhs = manufactured_system_rhs(&sub.problem, sub.case, sub.mu, &setup.nodes);
        let start = Instant::now();
        let matrix = setup.bank.assemble(&theta);
        let solution = truth_solve(&matrix, &rhs)?;
        let seconds = start.elapsed().as_secs_f64();
        let dim = sub.problem.dim();
        let exact: Vec<f64> = setup
            .nodes
            .coords()
            .iter()
            .map(|p| sub.case.solution(dim, p))
            .collect();
        points.push(ConvergencePoint { n, rms: rms_error(&solution, &exact), seconds });
    }

    let path = r
        .out_dir
        .join(format!("truth_convergence_{}.csv", r.problem.name));
    let mut comments = r.comments();
    comments.push(format!("case = {}", r.case.name()));
    comments.push(format!("mu = [{}, {}]", r.mu[0], r.mu[1]));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![p.n.to_string(), sci(p.rms), sci(p.seconds)])
        .collect();
    write_csv(&path, &comments, &["n", "rms_error", "seconds"], &rows)?;
    Ok(TruthConvergenceOutput { points, files: vec![path] })
}

#[derive(Debug)]
pub struct OfflineOutput {
    pub model: TrainedModel,
    pub model_path: PathBuf,
    pub seconds: f64,
    pub files: Vec<PathBuf>,
}

/// Runs the full offline stage and saves the trained model.
pub fn run_offline(cfg: &ExperimentConfig) -> Result<OfflineOutput> {
    let r = cfg.resolve()?;
    let setup = r.build_truth()?;
    let training =
        TrainingGrid::new(GridKind::Equispaced, r.problem.param_box, r.train_dims)?;

    let start = Instant::now();
    let model = greedy_offline(
        &r.problem,
        &r.kernel,
        &setup.nodes,
        r.n_loc,
        &setup.bank,
        training,
        GreedyOptions { n_max: r.n_max, tol: r.tol },
    )?;
    let seconds = start.elapsed().as_secs_f64();

    if let Some(parent) = r.model_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    save_model(&r.model_path, &model)?;

    let path = r
        .out_dir
        .join(format!("offline_history_{}.csv", r.problem.name));
    let mut comments = r.comments();
    comments.push(format!(
        "training grid = {} x {} equispaced",
        r.train_dims[0], r.train_dims[1]
    ));
    comments.push(format!(
        "alpha = {} (floor: {})",
        sci(model.alpha.value),
        model.alpha.at_floor
    ));
    comments.push(format!("n_rb = {}", model.n_rb()));
    comments.push(format!("offline seconds = {}", sci(seconds)));
    let rows: Vec<Vec<String>> = model
        .history
        .iter()
        .map(|s| vec![s.n.to_string(), sci(s.mu[0]), sci(s.mu[1]), sci(s.max_estimate)])
        .collect();
    write_csv(&path, &comments, &["n", "worst_mu1", "worst_mu2", "max_estimate"], &rows)?;
    Ok(OfflineOutput { model, model_path: r.model_path.clone(), seconds, files: vec![path] })
}

#[derive(Debug)]
pub struct OnlineOutput {
    pub query: OnlineQuery,
    pub n_use: usize,
    pub seconds: f64,
    pub files: Vec<PathBuf>,
}

/// Loads a trained model and runs one certified online query. The parameter
/// defaults to the center of the model problem's box when the config leaves
/// it unset.
pub fn run_online(cfg: &ExperimentConfig) -> Result<OnlineOutput> {
    let r = cfg.resolve()?;
    let model = load_model_checked(&r.model_path)?;
    let n_use = r.n_rb.unwrap_or_else(|| model.n_rb());
    let mu = cfg.mu.unwrap_or_else(|| model.problem.mu_center());

    let start = Instant::now();
    let query = model.online_query(mu, n_use)?;
    let seconds = start.elapsed().as_secs_f64();

    let path = r
        .out_dir
        .join(format!("online_{}.csv", model.problem.name));
    let mut comments = r.model_comments(&model);
    comments.push(format!("model = {}", r.model_path.display()));
    write_csv(
        &path,
        &comments,
        &["mu1", "mu2", "n_rb", "residual", "estimate", "seconds"],
        &[vec![
            sci(mu[0]),
            sci(mu[1]),
            n_use.to_string(),
            sci(query.residual),
            sci(query.estimate),
            sci(seconds),
        ]],
    )?;
    let coeff_path = r
        .out_dir
        .join(format!("online_coeffs_{}.csv", model.problem.name));
    let rows: Vec<Vec<String>> = query
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, c)| vec![j.to_string(), sci(*c)])
        .collect();
    write_csv(&coeff_path, &comments, &["j", "coefficient"], &rows)?;
    Ok(OnlineOutput { query, n_use, seconds, files: vec![path, coeff_path] })
}

#[derive(Debug)]
pub struct RbConvergencePoint {
    pub n: usize,
    pub max_rel_error: f64,
    pub mean_rel_error: f64,
    pub max_estimate: f64,
}

#[derive(Debug)]
pub struct RbConvergenceOutput {
    pub points: Vec<RbConvergencePoint>,
    pub files: Vec<PathBuf>,
}

/// Measures true reduced-basis error against fresh truth solves over a
/// held-out test grid, for every basis size up to the trained one.
pub fn run_rb_convergence(cfg: &ExperimentConfig) -> Result<RbConvergenceOutput> {
    let r = cfg.resolve()?;
    let model = load_model_checked(&r.model_path)?;
    let bank = rebuild_bank(&model)?;
    let forcing = rb_rhs(&model.problem, &model.nodes);
    let grid = TrainingGrid::new(
        GridKind::CellCentered,
        model.problem.param_box,
        r.test_dims,
    )?;

    let truths: Vec<Vec<f64>> = grid
        .mus()
        .par_iter()
        .map(|&mu| truth_solve(&bank.assemble(&model.problem.coeff_values(mu)), &forcing))
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(model.n_rb());
    for n in 1..=model.n_rb() {
        let errs: Vec<(f64, f64)> = grid
            .mus()
            .par_iter()
            .zip(&truths)
            .map(|(&mu, u_truth)| -> Result<(f64, f64)> {
                let q = model.online_query(mu, n)?;
                let lifted = model.reconstruct(&q.coeffs);
                Ok((diff_l2(&lifted, u_truth) / l2(u_truth), q.estimate))
            })
            .collect::<Result<_>>()?;
        let max_rel_error = errs.iter().map(|e| e.0).fold(0.0, f64::max);
        let mean_rel_error = errs.iter().map(|e| e.0).sum::<f64>() / errs.len() as f64;
        let max_estimate = errs.iter().map(|e| e.1).fold(0.0, f64::max);
        points.push(RbConvergencePoint { n, max_rel_error, mean_rel_error, max_estimate });
    }

    let path = r
        .out_dir
        .join(format!("rb_convergence_{}.csv", model.problem.name));
    let mut comments = r.model_comments(&model);
    comments.push(format!(
        "test grid = {} x {} cell-centered",
        r.test_dims[0], r.test_dims[1]
    ));
    comments.push(format!("model = {}", r.model_path.display()));
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                sci(p.max_rel_error),
                sci(p.mean_rel_error),
                sci(p.max_estimate),
            ]
        })
        .collect();
    write_csv(
        &path,
        &comments,
        &["n", "max_rel_error", "mean_rel_error", "max_estimate"],
        &rows,
    )?;
    Ok(RbConvergenceOutput { points, files: vec![path] })
}

#[derive(Debug)]
pub struct TimingOutput {
    pub n: usize,
    pub n_rb: usize,
    pub truth_seconds: f64,
    pub online_seconds: f64,
    pub speedup: f64,
    pub files: Vec<PathBuf>,
}

/// Times repeated truth solves against repeated certified online queries at
/// random parameters, single-threaded on both sides.
pub fn run_timing(cfg: &ExperimentConfig) -> Result<TimingOutput> {
    let r = cfg.resolve()?;
    if r.timing_truth == 0 || r.timing_online == 0 {
        return Err(Error::Config("timing counts must be positive".into()));
    }
    let model = load_model_checked(&r.model_path)?;
    let bank = rebuild_bank(&model)?;
    let forcing = rb_rhs(&model.problem, &model.nodes);
    let n_use = r.n_rb.unwrap_or_else(|| model.n_rb());

    let truth_mus = sample_parameters(model.problem.param_box, r.timing_truth, r.seed);
    let start = Instant::now();
    for &mu in &truth_mus {
        let u = truth_solve(&bank.assemble(&model.problem.coeff_values(mu)), &forcing)?;
        std::hint::black_box(&u);
    }
    let truth_seconds = start.elapsed().as_secs_f64() / r.timing_truth as f64;

    let online_mus =
        sample_parameters(model.problem.param_box, r.timing_online, r.seed.wrapping_add(1));
    let start = Instant::now();
    for &mu in &online_mus {
        let q = model.online_query(mu, n_use)?;
        std::hint::black_box(&q);
    }
    let online_seconds = start.elapsed().as_secs_f64() / r.timing_online as f64;
    let speedup = truth_seconds / online_seconds;

    let path = r
        .out_dir
        .join(format!("timing_{}.csv", model.problem.name));
    let mut comments = r.model_comments(&model);
    comments.push(format!("model = {}", r.model_path.display()));
    write_csv(
        &path,
        &comments,
        &[
            "n",
            "n_rb",
            "truth_solves",
            "truth_seconds_each",
            "online_solves",
            "online_seconds_each",
            "speedup",
        ],
        &[vec![
            model.n_truth().to_string(),
            n_use.to_string(),
            r.timing_truth.to_string(),
            sci(truth_seconds),
            r.timing_online.to_string(),
            sci(online_seconds),
            sci(speedup),
        ]],
    )?;
    Ok(TimingOutput {
        n: model.n_truth(),
        n_rb: n_use,
        truth_seconds,
        online_seconds,
        speedup,
        files: vec![path],
    })
}

#[derive(Debug)]
pub struct BoundCheckRow {
    pub mu: [f64; 2],
    pub n: usize,
    pub err_h: f64,
    pub estimate: f64,
    pub estimate_s: f64,
    pub violation: bool,
}

#[derive(Debug)]
pub struct BoundCheckOutput {
    pub rows: Vec<BoundCheckRow>,
    pub violations: usize,
    pub violations_s: usize,
    pub files: Vec<PathBuf>,
}

/// Validates the certified bound: at random parameters and several basis
/// sizes, the kernel-norm truth error must never exceed the estimate built
/// from the exact per-parameter stability factor.
///
/// Also evaluates the kernel-norm residual variant of the estimate as a
/// second column.  Requires a truth size small enough for the kernel matrix
/// to keep full numerical rank.
pub fn run_bound_check(cfg: &ExperimentConfig) -> Result<BoundCheckOutput> {
    let r = cfg.resolve()?;
    if r.samples == 0 {
        return Err(Error::Config("bound check needs at least one sample".into()));
    }
    let model = load_model_checked(&r.model_path)?;
    let bank = rebuild_bank(&model)?;
    let forcing = rb_rhs(&model.problem, &model.nodes);
    let native = NativeNormFactor::new(&model.nodes, &model.kernel)?;
    let alpha_sqrt = model.alpha.value.sqrt();

    let mut n_values = vec![1, model.n_rb().div_ceil(2), model.n_rb()];
    n_values.dedup();

    let mus = sample_parameters(model.problem.param_box, r.samples, r.seed);
    let mut rows = Vec::with_capacity(mus.len() * n_values.len());
    let mut violations = 0;
    let mut violations_s = 0;
    for &mu in &mus {
        let theta = model.problem.coeff_values(mu);
        let matrix = bank.assemble(&theta);
        let u_truth = truth_solve(&matrix, &forcing)?;
        let beta = beta_lb_exact(&matrix)?;
        let beta_s = native.beta_lb(&matrix)?;
        for &n in &n_values {
            let q = model.online_query(mu, n)?;
            let lifted = model.reconstruct(&q.coeffs);
            let diff: Vec<f64> =
                lifted.iter().zip(&u_truth).map(|(a, b)| a - b).collect();
            let err_h = native.norm(&diff)?;
            let estimate = alpha_sqrt * q.residual / beta.sqrt();

            let op_u = matrix.matvec(&lifted);
            let res_vec: Vec<f64> =
                forcing.iter().zip(&op_u).map(|(f, a)| f - a).collect();
            let estimate_s = alpha_sqrt * native.norm(&res_vec)? / beta_s.sqrt();

            let violation = err_h > estimate * (1.0 + 1e-10);
            violations += violation as usize;
            violations_s += (err_h > estimate_s * (1.0 + 1e-10)) as usize;
            rows.push(BoundCheckRow { mu, n, err_h, estimate, estimate_s, violation });
        }
    }

    let path = r
        .out_dir
        .join(format!("bound_check_{}.csv", model.problem.name));
    let mut comments = r.model_comments(&model);
    comments.push(format!("samples = {}", r.samples));
    comments.push(format!("model = {}", r.model_path.display()));
    comments.push(format!("violations = {violations} (kernel-norm variant: {violations_s})"));
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            vec![
                sci(row.mu[0]),
                sci(row.mu[1]),
                row.n.to_string(),
                sci(row.err_h),
                sci(row.estimate),
                sci(row.estimate_s),
                (row.violation as u8).to_string(),
            ]
        })
        .collect();
    write_csv(
        &path,
        &comments,
        &["mu1", "mu2", "n", "err_h", "estimate", "estimate_s", "violation"],
        &csv_rows,
    )?;
    Ok(BoundCheckOutput { rows, violations, violations_s, files: vec![path] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_resolve_per_dimension() {
        let cfg = ExperimentConfig::default();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.n_interior, 850);
        assert_eq!(r.n_boundary, 150);
        assert_eq!(r.n_loc, 50);
        assert_eq!(r.kernel.eps(), 3.0);
        assert_eq!(r.cand_interior, 2550);
        assert_eq!(r.mu, [2.05, 1.0]);

        let cfg3 = ExperimentConfig { problem: "diff3d".into(), ..Default::default() };
        let r3 = cfg3.resolve().unwrap();
        assert_eq!(r3.n_interior, 1364);
        assert_eq!(r3.n_boundary, 682);
        assert_eq!(r3.n_loc, 125);
        assert_eq!(r3.kernel.eps(), 0.75);
    }

    #[test]
    fn json_round_trip_and_overrides() {
        let text = r#"{
            "problem": "diff2d",
            "kernel": "ga",
            "eps": 2.5,
            "n_interior": 100,
            "train_dims": [5, 5],
            "mu": [0.3, -0.4]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        let r = cfg.resolve().unwrap();
        assert_eq!(r.problem.name, "diff2d");
        assert_eq!(r.kernel.eps(), 2.5);
        assert_eq!(r.n_interior, 100);
        assert_eq!(r.n_boundary, 150);
        assert_eq!(r.train_dims, [5, 5]);
        assert_eq!(r.mu, [0.3, -0.4]);
    }

    #[test]
    fn unknown_fields_and_names_are_rejected() {
        let bad: std::result::Result<ExperimentConfig, _> =
            serde_json::from_str(r#"{"probelm": "awave2d"}"#);
        assert!(bad.is_err());

        let cfg = ExperimentConfig { problem: "heat9d".into(), ..Default::default() };
        assert!(matches!(cfg.resolve(), Err(Error::UnknownProblem(_))));

        let cfg = ExperimentConfig { kernel: "bessel".into(), ..Default::default() };
        assert!(matches!(cfg.resolve(), Err(Error::UnknownKernel(_))));

        let cfg = ExperimentConfig { n_loc: Some(0), ..Default::default() };
        assert!(matches!(cfg.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn parameter_sampling_is_reproducible_and_in_box() {
        let pb = [[0.1, 4.0], [0.0, 2.0]];
        let a = sample_parameters(pb, 64, 7);
        let b = sample_parameters(pb, 64, 7);
        assert_eq!(a, b);
        assert!(a.iter().all(|m| {
            m[0] >= 0.1 && m[0] <= 4.0 && m[1] >= 0.0 && m[1] <= 2.0
        }));
        let c = sample_parameters(pb, 64, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn csv_format_is_parseable() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("t.csv");
        write_csv(
            &path,
            &["alpha = 1".into()],
            &["a", "b"],
            &[vec![sci(1.5), "7".into()]],
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# alpha = 1"));
        assert_eq!(lines.next(), Some("a,b"));
        let row = lines.next().unwrap();
        let first = row.split(',').next().unwrap();
        assert_eq!(first.parse::<f64>().unwrap(), 1.5);
    }
}
