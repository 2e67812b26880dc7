//! Full acceptance sweep: truth accuracy and convergence, reduced-basis
//! quality, certified error bounds, online/direct-solver agreement, timing,
//! and exactness of the local differentiation weights.
//!
//! Each check prints one `[criterion N] PASS/FAIL — detail` line as it
//! finishes and the test asserts at the end that every check passed. The
//! suite trains several reduced models at realistic sizes, so expect a few
//! minutes of wall time; run with `-- --nocapture` to stream progress.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use r2bf::geometry::generate_candidates;
use r2bf::harness::sample_parameters;
use r2bf::kernels::{Axis, Deriv, Kernel, KernelFamily};
use r2bf::nodes::{
    build_stencils, power_function_select, select_node_set, NodeSet, Stencils, SELECT_STOP_REL,
};
use r2bf::numerics::SparseLu;
use r2bf::problems::{ManufacturedCase, Problem};
use r2bf::rbffd::{
    assemble_diff_matrix, build_operator_bank, local_weights, manufactured_system_rhs, rb_rhs,
    rms_error, truth_solve, OperatorBank,
};
use r2bf::reduced::{
    beta_lb_exact, greedy_offline, GreedyOptions, GridKind, NativeNormFactor, TrainedModel,
    TrainingGrid,
};

/// `Ok(detail)` when the check passed, `Err(detail)` when it failed.
type Crit = Result<String, String>;

// ---------------------------------------------------------------------------
// shared fixtures
// ---------------------------------------------------------------------------

/// A fully assembled truth stack for one problem: selected nodes, stencils,
/// and the affine operator bank.
struct TruthStack {
    problem: Problem,
    kernel: Kernel,
    nodes: NodeSet,
    stencils: Stencils,
    bank: OperatorBank,
}

fn truth_stack(
    name: &str,
    eps: f64,
    n_interior: usize,
    n_boundary: usize,
    n_loc: usize,
) -> r2bf::Result<TruthStack> {
    let problem = Problem::by_name(name)?;
    let kernel = Kernel::new(KernelFamily::Imq, eps)?;
    let cand = generate_candidates(problem.domain, 3 * n_interior, 3 * n_boundary)?;
    let (nodes, _) = select_node_set(&cand, &kernel, n_interior, n_boundary)?;
    let stencils = build_stencils(&nodes, n_loc)?;
    let bank = build_operator_bank(&problem, &nodes, &stencils, &kernel)?;
    Ok(TruthStack {
        problem,
        kernel,
        nodes,
        stencils,
        bank,
    })
}

/// RMS error of the truth solve against a manufactured solution at `mu`.
fn manufactured_rms(s: &TruthStack, case: ManufacturedCase, mu: [f64; 2]) -> r2bf::Result<f64> {
    let a = s.bank.assemble(&s.problem.coeff_values(mu));
    let rhs = manufactured_system_rhs(&s.problem, case, mu, &s.nodes);
    let u = truth_solve(&a, &rhs)?;
    let dim = s.problem.dim();
    let exact: Vec<f64> = (0..s.nodes.n())
        .map(|i| case.solution(dim, s.nodes.point(i)))
        .collect();
    Ok(rms_error(&u, &exact))
}

/// Reduced models trained on the large shared truth stack.
struct LargeModels {
    awave: TrainedModel,
    diff: TrainedModel,
    diff_bank: OperatorBank,
}

fn train_large_models(s: &TruthStack) -> r2bf::Result<LargeModels> {
    let opts = GreedyOptions {
        n_max: 16,
        tol: 0.0,
    };
    let train = |problem: &Problem, bank: &OperatorBank| -> r2bf::Result<TrainedModel> {
        let grid = TrainingGrid::new(GridKind::Equispaced, problem.param_box, [33, 33])?;
        greedy_offline(
            problem,
            &s.kernel,
            &s.nodes,
            s.stencils.n_loc(),
            bank,
            grid,
            opts,
        )
    };
    let awave = train(&s.problem, &s.bank)?;
    let diff_problem = Problem::by_name("diff2d")?;
    let diff_bank = build_operator_bank(&diff_problem, &s.nodes, &s.stencils, &s.kernel)?;
    let diff = train(&diff_problem, &diff_bank)?;
    Ok(LargeModels {
        awave,
        diff,
        diff_bank,
    })
}

/// A moderate-size trained model together with its operator bank, one per
/// built-in problem; used for the bound and oracle checks.
struct BoundModel {
    model: TrainedModel,
    bank: OperatorBank,
}

fn train_bound_models() -> r2bf::Result<Vec<BoundModel>> {
    let recipes: [(&str, f64, usize, usize, usize, [usize; 2]); 4] = [
        ("awave2d", 3.0, 340, 60, 50, [7, 7]),
        ("diff2d", 3.0, 340, 60, 50, [7, 7]),
        ("awave3d", 0.75, 266, 134, 125, [5, 5]),
        ("diff3d", 0.75, 266, 134, 125, [5, 5]),
    ];
    let mut out = Vec::with_capacity(recipes.len());
    for (name, eps, ni, nb, n_loc, dims) in recipes {
        let s = truth_stack(name, eps, ni, nb, n_loc)?;
        let grid = TrainingGrid::new(GridKind::Equispaced, s.problem.param_box, dims)?;
        let opts = GreedyOptions {
            n_max: 14,
            tol: 0.0,
        };
        let model = greedy_offline(
            &s.problem,
            &s.kernel,
            &s.nodes,
            n_loc,
            &s.bank,
            grid,
            opts,
        )?;
        out.push(BoundModel {
            model,
            bank: s.bank,
        });
    }
    Ok(out)
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// criterion 1: truth accuracy across the parameter box
// ---------------------------------------------------------------------------

fn criterion_1(s: &TruthStack) -> Crit {
    let grid = TrainingGrid::new(GridKind::Equispaced, s.problem.param_box, [20, 20])
        .map_err(|e| e.to_string())?;
    let errs: Vec<f64> = grid
        .mus()
        .par_iter()
        .map(|&mu| manufactured_rms(s, ManufacturedCase::Trig, mu).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    let worst = errs.iter().copied().fold(0.0, f64::max);
    let detail = format!(
        "worst rms {:.3e} against the smooth manufactured solution over a 20x20 parameter grid (n = {}, gate 1e-3)",
        worst,
        s.nodes.n()
    );
    if worst <= 1e-3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 2: error decreases with the number of nodes
// ---------------------------------------------------------------------------

fn criterion_2(big: &TruthStack) -> Crit {
    let small = truth_stack("awave2d", 3.0, 212, 38, 50).map_err(|e| e.to_string())?;
    let mid = truth_stack("awave2d", 3.0, 425, 75, 50).map_err(|e| e.to_string())?;
    let stacks = [&small, &mid, big];
    let mu = big.problem.mu_center();
    let mut parts = Vec::new();
    let mut ok = true;
    for case in [ManufacturedCase::Trig, ManufacturedCase::Peaks] {
        let mut errs = Vec::with_capacity(stacks.len());
        for s in stacks {
            errs.push(manufactured_rms(s, case, mu).map_err(|e| e.to_string())?);
        }
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        ok &= decreasing;
        parts.push(format!(
            "{}: {:.2e} / {:.2e} / {:.2e}{}",
            case.name(),
            errs[0],
            errs[1],
            errs[2],
            if decreasing { "" } else { " NOT DECREASING" }
        ));
    }
    let detail = format!("rms at n = 250/500/1000 — {}", parts.join("; "));
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 3: error drops sharply with stencil size
// ---------------------------------------------------------------------------

fn criterion_3() -> Crit {
    let problem = Problem::by_name("awave2d").map_err(|e| e.to_string())?;
    let kernel = Kernel::new(KernelFamily::Imq, 2.5).map_err(|e| e.to_string())?;
    let cand = generate_candidates(problem.domain, 2550, 450).map_err(|e| e.to_string())?;
    let (nodes, _) = select_node_set(&cand, &kernel, 850, 150).map_err(|e| e.to_string())?;
    let mu = problem.mu_center();
    let mut errs = Vec::new();
    for n_loc in [10usize, 50] {
        let stencils = build_stencils(&nodes, n_loc).map_err(|e| e.to_string())?;
        let bank =
            build_operator_bank(&problem, &nodes, &stencils, &kernel).map_err(|e| e.to_string())?;
        let s = TruthStack {
            problem: Problem::by_name("awave2d").map_err(|e| e.to_string())?,
            kernel: kernel.clone(),
            nodes: nodes.clone(),
            stencils,
            bank,
        };
        errs.push(manufactured_rms(&s, ManufacturedCase::Trig, mu).map_err(|e| e.to_string())?);
    }
    let ratio = errs[1] / errs[0];
    let detail = format!(
        "rms {:.2e} (n_loc = 10) vs {:.2e} (n_loc = 50), ratio {:.2e} (gate 1e-2)",
        errs[0], errs[1], ratio
    );
    if ratio <= 1e-2 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 4: reduced basis converges exponentially in n
// ---------------------------------------------------------------------------

/// Maximum relative l2 truth error over `test` for each basis size 1..=n_rb.
fn rb_error_profile(
    model: &TrainedModel,
    bank: &OperatorBank,
    test: &TrainingGrid,
) -> Result<Vec<f64>, String> {
    let n_rb = model.n_rb();
    let f = rb_rhs(&model.problem, &model.nodes);
    let per_mu: Vec<Vec<f64>> = test
        .mus()
        .par_iter()
        .map(|&mu| -> Result<Vec<f64>, String> {
            let a = bank.assemble(&model.problem.coeff_values(mu));
            let u = truth_solve(&a, &f).map_err(|e| e.to_string())?;
            let root_n = (u.len() as f64).sqrt();
            let mut errs = Vec::with_capacity(n_rb);
            for n in 1..=n_rb {
                let q = model.online_query(mu, n).map_err(|e| e.to_string())?;
                let ur = model.reconstruct(&q.coeffs);
                let diff: Vec<f64> = u.iter().zip(&ur).map(|(a, b)| a - b).collect();
                errs.push(l2(&diff) / root_n);
            }
            Ok(errs)
        })
        .collect::<Result<_, _>>()?;
    let mut max_rms = vec![0.0f64; n_rb];
    for row in &per_mu {
        for (k, v) in row.iter().enumerate() {
            max_rms[k] = max_rms[k].max(*v);
        }
    }
    Ok(max_rms)
}

fn criterion_4(s: &TruthStack, pm: &LargeModels) -> Crit {
    let mut parts = Vec::new();
    let mut ok = true;
    for (model, bank) in [(&pm.awave, &s.bank), (&pm.diff, &pm.diff_bank)] {
        let test = TrainingGrid::new(GridKind::CellCentered, model.problem.param_box, [20, 20])
            .map_err(|e| e.to_string())?;
        let profile = rb_error_profile(model, bank, &test)?;
        if profile.len() < 12 {
            return Err(format!(
                "{}: basis stopped at {} vectors, need 12",
                model.problem.name,
                profile.len()
            ));
        }
        let n_rb = profile.len();
        let e12 = profile[11];
        let geomean = (profile[n_rb - 1] / profile[0]).powf(4.0 / (n_rb - 1) as f64);
        let max_window = (0..n_rb - 4)
            .map(|i| profile[i + 4] / profile[i])
            .fold(0.0f64, f64::max);
        let pass = e12 <= 1e-3 && geomean <= 0.2 && max_window < 1.0;
        ok &= pass;
        parts.push(format!(
            "{}: worst rms err {:.1e}/{:.1e}/{:.1e} at n = 4/8/12, \
             per-4-step decay geomean {:.2}, worst window {:.2}{}",
            model.problem.name,
            profile[3],
            profile[7],
            e12,
            geomean,
            max_window,
            if pass { "" } else { " GATE MISSED" }
        ));
    }
    let detail = format!(
        "{} (gates: err(12) <= 1e-3, geomean <= 0.2, every window < 1)",
        parts.join("; ")
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 5: the online error estimate is a certified upper bound
// ---------------------------------------------------------------------------

fn criterion_5(models: &[BoundModel]) -> Crit {
    let mut checks = 0usize;
    let mut violations = 0usize;
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for (k, bm) in models.iter().enumerate() {
        let model = &bm.model;
        if model.alpha.at_floor {
            return Err(format!(
                "{}: kernel matrix lost rank, certificate is not strict",
                model.problem.name
            ));
        }
        let native =
            NativeNormFactor::new(&model.nodes, &model.kernel).map_err(|e| e.to_string())?;
        let alpha_sqrt = model.alpha.value.sqrt();
        let f = rb_rhs(&model.problem, &model.nodes);
        let n_rb = model.n_rb();
        let n_list = {
            let mut v = vec![1, n_rb.div_ceil(2), n_rb];
            v.dedup();
            v
        };
        let mus = sample_parameters(model.problem.param_box, 50, 11 + k as u64);
        let per_mu: Vec<(usize, usize, f64, f64)> = mus
            .par_iter()
            .map(|&mu| -> Result<(usize, usize, f64, f64), String> {
                let a = bank_assemble(bm, mu);
                let u = truth_solve(&a, &f).map_err(|e| e.to_string())?;
                let beta = beta_lb_exact(&a).map_err(|e| e.to_string())?;
                let mut checks = 0;
                let mut violations = 0;
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                for &n in &n_list {
                    let q = model.online_query(mu, n).map_err(|e| e.to_string())?;
                    let delta = alpha_sqrt * q.residual / beta.sqrt();
                    let ur = model.reconstruct(&q.coeffs);
                    let diff: Vec<f64> = u.iter().zip(&ur).map(|(a, b)| a - b).collect();
                    let err_h = native.norm(&diff).map_err(|e| e.to_string())?;
                    checks += 1;
                    if err_h > delta + 1e-10 {
                        violations += 1;
                    }
                    if err_h > 0.0 {
                        let ratio = delta / err_h;
                        lo = lo.min(ratio);
                        hi = hi.max(ratio);
                    }
                }
                Ok((checks, violations, lo, hi))
            })
            .collect::<Result<_, _>>()?;
        for (c, v, lo, hi) in per_mu {
            checks += c;
            violations += v;
            min_ratio = min_ratio.min(lo);
            max_ratio = max_ratio.max(hi);
        }
    }
    let detail = format!(
        "{checks} bound checks across 4 problems x 50 parameters x 3 basis sizes: {violations} violations; estimate/error in [{min_ratio:.2}, {max_ratio:.1e}]"
    );
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bank_assemble(bm: &BoundModel, mu: [f64; 2]) -> r2bf::numerics::CsrMatrix {
    bm.bank.assemble(&bm.model.problem.coeff_values(mu))
}

// ---------------------------------------------------------------------------
// criterion 6: online coefficients match a direct least-squares solver
// ---------------------------------------------------------------------------

fn criterion_6(models: &[BoundModel]) -> Crit {
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for (k, bm) in models.iter().enumerate() {
        let model = &bm.model;
        let n_pts = model.nodes.n();
        let f = rb_rhs(&model.problem, &model.nodes);
        let rhs = nalgebra::DVector::from_column_slice(&f);
        let n_top = model.n_rb().min(12);
        let mus = sample_parameters(model.problem.param_box, 20, 21 + k as u64);
        for &mu in &mus {
            let a = bank_assemble(bm, mu);
            let images: Vec<Vec<f64>> = model.basis.iter().map(|xi| a.matvec(xi)).collect();
            for n in 1..=n_top {
                let mat =
                    nalgebra::DMatrix::from_fn(n_pts, n, |i, j| images[j][i]);
                let direct = mat
                    .svd(true, true)
                    .solve(&rhs, 1e-14)
                    .map_err(|e| e.to_string())?;
                let q = model.online_query(mu, n).map_err(|e| e.to_string())?;
                let num: f64 = q
                    .coeffs
                    .iter()
                    .zip(direct.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let den = direct.norm();
                worst = worst.max(num / den);
                compared += 1;
            }
        }
    }
    let detail = format!(
        "{compared} coefficient vectors vs dense svd least squares, worst relative deviation {worst:.2e} (gate 1e-8)"
    );
    if worst <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 7: online cost is independent of n and far below the truth solve
// ---------------------------------------------------------------------------

fn mean_online_seconds(model: &TrainedModel, mus: &[[f64; 2]], n_use: usize, reps: usize) -> f64 {
    let start = Instant::now();
    for k in 0..reps {
        let q = model
            .online_query(mus[k % mus.len()], n_use)
            .expect("online query");
        std::hint::black_box(q.estimate);
    }
    start.elapsed().as_secs_f64() / reps as f64
}

fn criterion_7(s: &TruthStack, pm: &LargeModels) -> Crit {
    let big = truth_stack("awave2d", 3.0, 1800, 200, 50).map_err(|e| e.to_string())?;
    let grid = TrainingGrid::new(GridKind::Equispaced, big.problem.param_box, [9, 9])
        .map_err(|e| e.to_string())?;
    let opts = GreedyOptions {
        n_max: 12,
        tol: 0.0,
    };
    let model_2000 = greedy_offline(
        &big.problem,
        &big.kernel,
        &big.nodes,
        big.stencils.n_loc(),
        &big.bank,
        grid,
        opts,
    )
    .map_err(|e| e.to_string())?;
    let model_1000 = &pm.awave;
    if model_1000.n_rb() < 12 || model_2000.n_rb() < 12 {
        return Err("reduced bases smaller than 12, cannot compare".into());
    }

    let mus = sample_parameters(s.problem.param_box, 64, 99);
    let reps = 20_000;
    mean_online_seconds(model_1000, &mus, 12, reps / 10);
    mean_online_seconds(&model_2000, &mus, 12, reps / 10);
    let mut t1 = f64::INFINITY;
    let mut t2 = f64::INFINITY;
    for _ in 0..2 {
        t1 = t1.min(mean_online_seconds(model_1000, &mus, 12, reps));
        t2 = t2.min(mean_online_seconds(&model_2000, &mus, 12, reps));
    }
    let ratio = t1.max(t2) / t1.min(t2);

    let f = rb_rhs(&s.problem, &s.nodes);
    let assembled: Vec<_> = sample_parameters(s.problem.param_box, 30, 100)
        .iter()
        .map(|&mu| s.bank.assemble(&s.problem.coeff_values(mu)))
        .collect();
    let start = Instant::now();
    for a in &assembled {
        let lu = SparseLu::factor(a).expect("truth factorization");
        std::hint::black_box(lu.solve(&f)[0]);
    }
    let t_truth = start.elapsed().as_secs_f64() / assembled.len() as f64;
    let speedup = t_truth / t1;

    let detail = format!(
        "online {:.2}us (n = 1000) vs {:.2}us (n = 2000), ratio {ratio:.2} (gate 2); truth factor+solve {:.2}ms, speedup {speedup:.0}x (gate 20x)",
        t1 * 1e6,
        t2 * 1e6,
        t_truth * 1e3
    );
    if ratio < 2.0 && speedup >= 20.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// criterion 8: pivoted node selection equals the direct power-function greedy
// ---------------------------------------------------------------------------

/// Reference selection: at every step, recompute each candidate's squared
/// power function from scratch against the selected set and take the argmax
/// (ties to the lowest index).
fn oracle_select(pts: &[[f64; 3]], kernel: &Kernel, n_sel: usize) -> Vec<usize> {
    let m = pts.len();
    let phi0 = kernel.eval(0.0);
    let mut selected: Vec<usize> = Vec::new();
    let mut taken = vec![false; m];
    for _ in 0..n_sel {
        let (chol, cross) = if selected.is_empty() {
            (None, Vec::new())
        } else {
            let s = selected.len();
            let ks = nalgebra::DMatrix::from_fn(s, s, |a, b| {
                kernel.value(&pts[selected[a]], &pts[selected[b]])
            });
            let cross: Vec<nalgebra::DVector<f64>> = (0..m)
                .map(|i| {
                    nalgebra::DVector::from_fn(s, |a, _| kernel.value(&pts[selected[a]], &pts[i]))
                })
                .collect();
            (ks.cholesky(), cross)
        };
        let mut best = f64::NEG_INFINITY;
        let mut arg = usize::MAX;
        for i in 0..m {
            if taken[i] {
                continue;
            }
            let p2 = match &chol {
                None => phi0,
                Some(c) => phi0 - cross[i].dot(&c.solve(&cross[i])),
            };
            if p2 > best {
                best = p2;
                arg = i;
            }
        }
        selected.push(arg);
        taken[arg] = true;
    }
    selected
}

fn criterion_8() -> Crit {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut clouds = 0;
    for (m, n_sel) in [(50usize, 12usize), (120, 30), (200, 50)] {
        let pts: Vec<[f64; 3]> = (0..m)
            .map(|_| {
                [
                    2.0 * rng.random::<f64>() - 1.0,
                    2.0 * rng.random::<f64>() - 1.0,
                    0.0,
                ]
            })
            .collect();
        for family in [KernelFamily::Imq, KernelFamily::Ga] {
            let kernel = Kernel::new(family, 3.0).map_err(|e| e.to_string())?;
            let sel = power_function_select(&pts, &kernel, n_sel, SELECT_STOP_REL)
                .map_err(|e| format!("{m} candidates, {family:?}: {e}"))?;
            let reference = oracle_select(&pts, &kernel, n_sel);
            if sel.indices != reference {
                let first = sel
                    .indices
                    .iter()
                    .zip(&reference)
                    .position(|(a, b)| a != b)
                    .unwrap_or(0);
                return Err(format!(
                    "selection diverged from direct greedy at step {first} ({m} candidates, {n_sel} selected, {family:?})"
                ));
            }
            clouds += 1;
        }
    }
    Ok(format!(
        "pivoted selection identical to direct power-function greedy on {clouds} clouds (up to 200 candidates, imq and gaussian)"
    ))
}

// ---------------------------------------------------------------------------
// criterion 9: stencil weights are exact on kernel translates
// ---------------------------------------------------------------------------

/// Random stencil: owning node at the origin, neighbors in a unit ball with
/// a minimum separation, so the local kernel matrix stays well conditioned.
fn random_stencil(rng: &mut ChaCha8Rng, dim: usize, n_loc: usize) -> Vec<[f64; 3]> {
    let mut pts: Vec<[f64; 3]> = vec![[0.0; 3]];
    while pts.len() < n_loc {
        let mut p = [0.0; 3];
        for c in p.iter_mut().take(dim) {
            *c = 2.0 * rng.random::<f64>() - 1.0;
        }
        let r2: f64 = p.iter().map(|c| c * c).sum();
        if r2 > 1.0 {
            continue;
        }
        let sep_ok = pts.iter().all(|q| {
            let d2: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            d2 > 0.25 * 0.25
        });
        if sep_ok {
            pts.push(p);
        }
    }
    pts
}

fn criterion_9() -> Crit {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let families = [KernelFamily::Imq, KernelFamily::Ga, KernelFamily::Mq];
    let mut worst_stencil: f64 = 0.0;
    for trial in 0..500usize {
        let dim = 2 + trial % 2;
        let kernel = Kernel::new(families[trial % 3], 2.0 + 2.0 * rng.random::<f64>())
            .map_err(|e| e.to_string())?;
        let n_loc = 8 + (rng.random::<f64>() * 13.0) as usize;
        let pts = random_stencil(&mut rng, dim, n_loc);
        let axis = match (trial / 2) % dim {
            0 => Axis::X,
            1 => Axis::Y,
            _ => Axis::Z,
        };
        let deriv = if trial % 5 < 2 {
            Deriv::First(axis)
        } else {
            Deriv::Second(axis)
        };
        let w = local_weights(&kernel, &pts, deriv).map_err(|e| e.to_string())?;
        let coeffs: Vec<f64> = (0..n_loc).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let mut approx = 0.0;
        for (a, wa) in w.iter().enumerate() {
            let ua: f64 = (0..n_loc)
                .map(|k| coeffs[k] * kernel.value(&pts[k], &pts[a]))
                .sum();
            approx += wa * ua;
        }
        let mut exact = 0.0;
        let mut scale = 0.0;
        for k in 0..n_loc {
            let d = kernel
                .partial(&pts[k], &pts[0], deriv)
                .map_err(|e| e.to_string())?;
            exact += coeffs[k] * d;
            scale += (coeffs[k] * d).abs();
        }
        worst_stencil = worst_stencil.max((approx - exact).abs() / scale);
    }
    if worst_stencil > 1e-9 {
        return Err(format!(
            "worst relative defect {worst_stencil:.2e} over 500 random stencils (gate 1e-9)"
        ));
    }

    // Full-size stencils: every weight row must match the dense
    // differentiation matrix obtained by solving against the full kernel
    // matrix with an unrelated factorization.
    let n = 60usize;
    let mut pts: Vec<[f64; 3]> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = [
            2.0 * rng.random::<f64>() - 1.0,
            2.0 * rng.random::<f64>() - 1.0,
            0.0,
        ];
        if pts
            .iter()
            .all(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) > 0.2 * 0.2)
        {
            pts.push(p);
        }
    }
    let nodes = NodeSet::new(pts.clone(), 2, n);
    let stencils = build_stencils(&nodes, n).map_err(|e| e.to_string())?;
    let kernel = Kernel::new(KernelFamily::Imq, 4.0).map_err(|e| e.to_string())?;
    let phi = nalgebra::DMatrix::from_fn(n, n, |a, b| kernel.value(&pts[a], &pts[b]));
    let lu = phi.lu();
    let mut worst_row: f64 = 0.0;
    for deriv in [Deriv::Second(Axis::X), Deriv::First(Axis::Y)] {
        let sparse = assemble_diff_matrix(&nodes, &stencils, &kernel, deriv)
            .map_err(|e| e.to_string())?;
        let mut dense_rows = vec![vec![0.0f64; n]; n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = sparse.matvec(&e);
            for i in 0..n {
                dense_rows[i][j] = col[i];
            }
        }
        for i in 0..n {
            let b = nalgebra::DVector::from_fn(n, |j, _| {
                kernel.partial(&pts[j], &pts[i], deriv).expect("kernel derivative")
            });
            let wi = lu.solve(&b).ok_or("dense kernel matrix is singular")?;
            let denom = wi.amax();
            let num = dense_rows[i]
                .iter()
                .zip(wi.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            worst_row = worst_row.max(num / denom);
        }
    }
    let detail = format!(
        "500 random stencils exact to {worst_stencil:.1e} on kernel translates; 60 full-size weight rows match the dense differentiation matrix to {worst_row:.1e} (gates 1e-9, 1e-8)"
    );
    if worst_row <= 1e-8 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------------------
// driver
// ---------------------------------------------------------------------------

fn panic_detail(p: Box<dyn std::any::Any + Send>) -> String {
    let msg = p
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".to_string());
    format!("panicked: {msg}")
}

fn guard(f: impl FnOnce() -> Crit) -> Crit {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| Err(panic_detail(p)))
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, Crit)> = Vec::new();
    let record = |id: usize, outcome: Crit, results: &mut Vec<(usize, Crit)>| {
        match &outcome {
            Ok(d) => println!("[criterion {id}] PASS — {d}"),
            Err(d) => println!("[criterion {id}] FAIL — {d}"),
        }
        results.push((id, outcome));
    };

    let truth1000 = catch_unwind(|| truth_stack("awave2d", 3.0, 850, 150, 50))
        .unwrap_or_else(|p| Err(r2bf::Error::Config(panic_detail(p))));
    let shared_err = |e: &r2bf::Error| format!("shared truth stack failed: {e}");

    let c1 = match &truth1000 {
        Ok(s) => guard(|| criterion_1(s)),
        Err(e) => Err(shared_err(e)),
    };
    record(1, c1, &mut results);

    let c2 = match &truth1000 {
        Ok(s) => guard(|| criterion_2(s)),
        Err(e) => Err(shared_err(e)),
    };
    record(2, c2, &mut results);

    record(3, guard(criterion_3), &mut results);

    let large_models = match &truth1000 {
        Ok(s) => catch_unwind(AssertUnwindSafe(|| {
            train_large_models(s).map_err(|e| e.to_string())
        }))
        .unwrap_or_else(|p| Err(panic_detail(p))),
        Err(e) => Err(shared_err(e)),
    };

    let c4 = match (&truth1000, &large_models) {
        (Ok(s), Ok(pm)) => guard(|| criterion_4(s, pm)),
        (Err(e), _) => Err(shared_err(e)),
        (_, Err(e)) => Err(format!("offline training failed: {e}")),
    };
    record(4, c4, &mut results);

    let bound_models = catch_unwind(|| train_bound_models().map_err(|e| e.to_string()))
        .unwrap_or_else(|p| Err(panic_detail(p)));

    let c5 = match &bound_models {
        Ok(ms) => guard(|| criterion_5(ms)),
        Err(e) => Err(format!("small-model training failed: {e}")),
    };
    record(5, c5, &mut results);

    let c6 = match &bound_models {
        Ok(ms) => guard(|| criterion_6(ms)),
        Err(e) => Err(format!("small-model training failed: {e}")),
    };
    record(6, c6, &mut results);

    let c7 = match (&truth1000, &large_models) {
        (Ok(s), Ok(pm)) => guard(|| criterion_7(s, pm)),
        (Err(e), _) => Err(shared_err(e)),
        (_, Err(e)) => Err(format!("offline training failed: {e}")),
    };
    record(7, c7, &mut results);

    record(8, guard(criterion_8), &mut results);
    record(9, guard(criterion_9), &mut results);

    let failed: Vec<String> = results
        .iter()
        .filter_map(|(id, r)| r.as_ref().err().map(|e| format!("criterion {id}: {e}")))
        .collect();
    assert!(
        failed.is_empty(),
        "{} of {} acceptance criteria failed:\n{}",
        failed.len(),
        results.len(),
        failed.join("\n")
    );
}
