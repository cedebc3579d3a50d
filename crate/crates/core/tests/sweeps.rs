use sumlab_core::report::{emit_report, Format, Report, CSV_COLUMNS};
use sumlab_core::verify::{run_verify, LambdaRule, SweepSpec, Target, VerifyError};

fn small() -> SweepSpec {
    SweepSpec {
        primes: vec![3, 5],
        kappa_min: 3,
        kappa_max: 5,
        samples: 6,
        n_max: 12,
        big_q: vec![1.0, 2.5, 7.0],
        x_max: 20.0,
        points: 4,
        ..SweepSpec::default()
    }
}

#[test]
fn every_target_passes_a_small_sweep() {
    // the kernel ratios settle only past τ ≈ 80, so this sweep goes to 200
    let spec = SweepSpec { x_max: 200.0, ..small() };
    for target in Target::ALL {
        let report = run_verify(target, &spec).unwrap();
        let failures: Vec<_> = report.records.iter().filter(|r| !r.pass).collect();
        assert!(failures.is_empty(), "{target}: {failures:?}");
        assert!(!report.records.is_empty(), "{target}");
        assert!(report.records.iter().all(|r| r.target == target.name()));
    }
}

#[test]
fn repeated_and_parallel_runs_agree() {
    for target in Target::ALL {
        let spec = small();
        let a = run_verify(target, &spec).unwrap();
        let b = run_verify(target, &spec).unwrap();
        let c = run_verify(target, &SweepSpec { jobs: 3, ..spec }).unwrap();
        assert_eq!(a.canonical_json(), b.canonical_json(), "{target}");
        assert_eq!(a.canonical_json(), c.canonical_json(), "{target}");
        assert_eq!(c.run_info.as_ref().unwrap().jobs, 3);
    }
}

#[test]
fn seeds_change_the_sample() {
    let a = run_verify(Target::CstarSplit, &small()).unwrap();
    let b = run_verify(Target::CstarSplit, &SweepSpec { seed: 99, ..small() }).unwrap();
    assert_ne!(a.canonical_json(), b.canonical_json());
}

#[test]
fn emitted_reports_parse_back_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_verify(Target::Lemma6, &small()).unwrap();
    let path = dir.path().join("lemma6.json");
    emit_report(&report, Format::Json, &path).unwrap();
    let back = Report::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back, report);
    for (x, y) in back.records.iter().zip(&report.records) {
        for (u, v) in [(x.oracle_re, y.oracle_re), (x.fast_im, y.fast_im), (x.ratio, y.ratio)] {
            assert_eq!(u.to_bits(), v.to_bits());
        }
    }
    let csv_path = dir.path().join("lemma6.csv");
    emit_report(&report, Format::Csv, &csv_path).unwrap();
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), report.records.len() + 1);
    assert!(csv.lines().skip(1).all(|l| l.split(',').count() == CSV_COLUMNS.len()));
}

#[test]
fn emit_reports_unwritable_paths() {
    let report = Report::new("circle", vec![]);
    let err = emit_report(&report, Format::Csv, std::path::Path::new("/nonexistent/dir/r.csv")).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/dir/r.csv"));
}

#[test]
fn depth_condition_is_enforced() {
    let spec = SweepSpec { kappa_min: 4, kappa_max: 4, lambda: LambdaRule::Explicit(vec![3]), ..small() };
    for target in [Target::Lemma6, Target::Lemma7, Target::Quintic] {
        assert!(matches!(run_verify(target, &spec), Err(VerifyError::SpecInvalid(_))), "{target}");
    }
    assert!(run_verify(Target::CstarSplit, &spec).is_ok());
    // automatic and swept lambdas drop the inadmissible values instead
    let sweep = SweepSpec { lambda: LambdaRule::Sweep, ..spec };
    let report = run_verify(Target::Lemma6, &sweep).unwrap();
    assert!(report.records.iter().filter_map(|r| r.lambda).all(|l| 3 * l <= 8));
}

#[test]
fn empty_kappa_range_gives_an_empty_passing_report() {
    let spec = SweepSpec { kappa_min: 6, kappa_max: 5, ..small() };
    for target in [Target::Eq43, Target::Lemma6, Target::Quintic] {
        let report = run_verify(target, &spec).unwrap();
        assert!(report.records.iter().all(|r| r.p.is_none() || r.kappa.is_none()), "{target}");
        assert!(report.pass());
    }
    let report = run_verify(Target::Eq43, &spec).unwrap();
    assert_eq!(report.summary.total, 0);
    assert_eq!(report.to_csv(), format!("{}\n", CSV_COLUMNS.join(",")));
}

#[test]
fn sweep_covers_every_residue_b() {
    let spec = SweepSpec { primes: vec![3], kappa_min: 4, kappa_max: 4, draws_per_b: 2, ..small() };
    let report = run_verify(Target::Eq43, &spec).unwrap();
    let mut bs: Vec<u64> = report.records.iter().map(|r| r.extras["b"] as u64).collect();
    bs.dedup();
    assert_eq!(bs, (0..9).collect::<Vec<_>>());
    assert_eq!(report.records.len(), 18);
}
