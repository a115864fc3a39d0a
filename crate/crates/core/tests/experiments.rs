use stiefel_mean::experiments::{
    run_convergence, run_experiment, run_runtime_vs_p, run_to_dir, ExperimentKind, ExperimentOutput, ExperimentSpec,
};
use stiefel_mean::MapPair;

fn csv_of(spec: &ExperimentSpec) -> String {
    let mut buf = Vec::new();
    run_experiment(spec).unwrap().write_csv(spec, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn discrepancy_and_convergence_csv_are_reproducible() {
    let mut disc = ExperimentSpec::desk(ExperimentKind::DiscrepancyStats, 17);
    disc.samples = 200;
    assert_eq!(csv_of(&disc), csv_of(&disc));

    let conv = ExperimentSpec::desk(ExperimentKind::Convergence, 17);
    let text = csv_of(&conv);
    assert_eq!(text, csv_of(&conv));
    for line in conv.header_lines() {
        assert!(text.contains(&line), "missing header {line}");
    }
}

#[test]
fn runtime_records_are_reproducible_apart_from_time() {
    let mut spec = ExperimentSpec::desk(ExperimentKind::RuntimeVsP, 3);
    spec.sweep = vec![10, 20];
    spec.trials = 3;
    spec.samples = 10;
    let strip = |spec: &ExperimentSpec| -> Vec<(MapPair, usize, usize, usize, bool)> {
        run_runtime_vs_p(spec)
            .unwrap()
            .records
            .into_iter()
            .map(|r| (r.pair, r.dim, r.trial, r.iterations, r.converged))
            .collect()
    };
    let first = strip(&spec);
    assert_eq!(first, strip(&spec));
    spec.parallel_trials = true;
    assert_eq!(first, strip(&spec));
}

#[test]
fn square_boundary_runs() {
    let mut spec = ExperimentSpec::desk(ExperimentKind::RuntimeVsP, 5);
    spec.sweep = vec![10];
    spec.trials = 2;
    let result = run_runtime_vs_p(&spec).unwrap();
    assert!(result.records.iter().all(|r| r.error.is_none() && r.converged));
}

#[test]
fn small_spread_converges_in_five_iterations() {
    let mut spec = ExperimentSpec::desk(ExperimentKind::Convergence, 23);
    spec.sigma = 1e-4;
    let result = run_convergence(&spec).unwrap();
    for outcome in &result.outcomes {
        let report = outcome.result.as_ref().unwrap();
        assert!(report.converged);
        assert!(report.iterations_used <= 5, "{}: {}", outcome.pair, report.iterations_used);
    }
}

#[test]
fn full_scale_values() {
    let spec = ExperimentSpec::full(ExperimentKind::DiscrepancyStats, 1);
    assert_eq!((spec.p, spec.n, spec.samples, spec.sigma), (20, 4, 20_000, 0.05));
    let spec = ExperimentSpec::full(ExperimentKind::RuntimeVsN, 1);
    assert_eq!((spec.p, spec.samples, spec.sigma, spec.trials), (100, 50, 0.01, 100));
    spec.validate().unwrap();
    let spec = ExperimentSpec::full(ExperimentKind::RuntimeVsP, 1);
    assert_eq!((spec.n, spec.trials), (10, 100));
    spec.validate().unwrap();
}

#[test]
fn run_to_dir_names_file_by_kind_and_seed() {
    let dir = std::env::temp_dir().join(format!("stiefel-exp-{}", std::process::id()));
    let mut spec = ExperimentSpec::desk(ExperimentKind::DiscrepancyStats, 9);
    spec.samples = 30;
    let (output, path) = run_to_dir(&spec, &dir).unwrap();
    assert_eq!(path, dir.join("discrepancy_stats_9.csv"));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("\nk,delta_C_Xk,Delta_C_Xk\n"));
    match output {
        ExperimentOutput::Discrepancy(stats) => assert_eq!(stats.rows.len(), 30),
        _ => unreachable!(),
    }
    std::fs::remove_dir_all(&dir).unwrap();
}
