//! End-to-end runs of every experiment driver at small problem sizes,
//! sharing one output directory the way a command-line session would.

use r2bf::harness::{
    run_bound_check, run_offline, run_online, run_rb_convergence, run_select_nodes,
    run_timing, run_truth_convergence, run_truth_solve, ExperimentConfig,
};
use r2bf::Error;

fn tiny_config(out_dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        problem: "awave2d".into(),
        n_interior: Some(60),
        n_boundary: Some(20),
        n_loc: Some(16),
        train_dims: [3, 3],
        test_dims: [3, 3],
        n_max: 3,
        samples: 3,
        timing_truth: 3,
        timing_online: 40,
        n_values: vec![50, 90],
        out_dir: out_dir.to_path_buf(),
        ..Default::default()
    }
}

#[test]
fn drivers_run_end_to_end_and_write_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());

    let sel = run_select_nodes(&cfg).unwrap();
    assert_eq!(sel.nodes.n(), 80);
    assert_eq!(sel.nodes.n_interior(), 60);
    for trace in [&sel.diagnostics.interior_trace, &sel.diagnostics.boundary_trace] {
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "pivot trace increased");
    }

    let ts = run_truth_solve(&cfg).unwrap();
    assert_eq!(ts.n, 80);
    assert!(ts.rms.is_finite() && ts.rms > 0.0 && ts.rms < 1.0);
    assert!(ts.max_abs >= ts.rms);

    let tc = run_truth_convergence(&cfg).unwrap();
    assert_eq!(tc.points.len(), 2);
    assert!(tc.points.iter().all(|p| p.rms.is_finite() && p.rms > 0.0));

    let off = run_offline(&cfg).unwrap();
    assert_eq!(off.model.n_rb(), 3);
    assert_eq!(off.model.history.len(), 3);
    assert!(off.model_path.exists());

    let on = run_online(&cfg).unwrap();
    assert_eq!(on.n_use, 3);
    assert!(on.query.residual.is_finite());
    assert!(on.query.estimate >= 0.0);

    let rb = run_rb_convergence(&cfg).unwrap();
    assert_eq!(rb.points.len(), 3);
    assert!(
        rb.points.last().unwrap().max_rel_error < rb.points[0].max_rel_error,
        "reduced error did not shrink with basis size"
    );
    for p in &rb.points {
        assert!(p.max_rel_error >= p.mean_rel_error);
    }

    let tm = run_timing(&cfg).unwrap();
    assert!(tm.truth_seconds > 0.0 && tm.online_seconds > 0.0);
    assert!(tm.speedup > 1.0, "online slower than truth: {}", tm.speedup);

    let bc = run_bound_check(&cfg).unwrap();
    assert_eq!(bc.rows.len(), 3 * 3);
    assert_eq!(bc.violations, 0, "certified bound violated");
    assert_eq!(bc.violations_s, 0, "kernel-norm bound violated");
    for row in &bc.rows {
        assert!(row.estimate >= 0.0 && row.err_h >= 0.0);
    }

    let csvs: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    for expected in [
        "nodes_awave2d.csv",
        "selection_trace_awave2d.csv",
        "truth_solve_awave2d.csv",
        "truth_convergence_awave2d.csv",
        "offline_history_awave2d.csv",
        "online_awave2d.csv",
        "online_coeffs_awave2d.csv",
        "rb_convergence_awave2d.csv",
        "timing_awave2d.csv",
        "bound_check_awave2d.csv",
    ] {
        assert!(csvs.iter().any(|n| n == expected), "missing {expected}");
    }

    let text =
        std::fs::read_to_string(dir.path().join("rb_convergence_awave2d.csv")).unwrap();
    let comment_lines = text.lines().take_while(|l| l.starts_with("# ")).count();
    assert!(comment_lines >= 6, "config echo missing");
    let data: Vec<&str> = text.lines().skip(comment_lines).collect();
    assert_eq!(data[0], "n,max_rel_error,mean_rel_error,max_estimate");
    assert_eq!(data.len() - 1, 3);
    let first_row: Vec<&str> = data[1].split(',').collect();
    assert_eq!(first_row[0].parse::<usize>().unwrap(), 1);
    assert!(first_row[1].parse::<f64>().unwrap().is_finite());
    assert!(first_row[1].contains('e'), "numbers must be scientific notation");
}

/// Commands that load a saved model must label their output after the
/// model's own problem and default the query parameter to the model
/// problem's box center, even when the config still carries another
/// problem's name.
#[test]
fn model_loading_drivers_follow_the_model_not_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny_config(dir.path());
    cfg.problem = "diff2d".into();
    let off = run_offline(&cfg).unwrap();

    let query_cfg = ExperimentConfig {
        model: Some(off.model_path.clone()),
        out_dir: dir.path().to_path_buf(),
        samples: 2,
        timing_truth: 2,
        timing_online: 10,
        test_dims: [2, 2],
        ..Default::default()
    };
    assert_eq!(query_cfg.problem, "awave2d", "default problem changed");

    let on = run_online(&query_cfg).unwrap();
    run_rb_convergence(&query_cfg).unwrap();
    run_timing(&query_cfg).unwrap();
    run_bound_check(&query_cfg).unwrap();

    for name in [
        "online_diff2d.csv",
        "online_coeffs_diff2d.csv",
        "rb_convergence_diff2d.csv",
        "timing_diff2d.csv",
        "bound_check_diff2d.csv",
    ] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let text = std::fs::read_to_string(dir.path().join("online_diff2d.csv")).unwrap();
    assert!(text.contains("# problem = diff2d"), "wrong identity echoed:\n{text}");
    // diff2d's box is centered at the origin, unlike the default problem's.
    let row = text.lines().last().unwrap();
    let mu1: f64 = row.split(',').next().unwrap().parse().unwrap();
    assert_eq!(mu1, 0.0, "query parameter not defaulted from the model");
    assert!(on.query.residual.is_finite());
}

#[test]
fn online_without_model_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny_config(dir.path());
    match run_online(&cfg) {
        Err(e @ Error::Config(_)) => assert!(e.is_usage()),
        other => panic!("expected a usage error, got {other:?}"),
    }
}
