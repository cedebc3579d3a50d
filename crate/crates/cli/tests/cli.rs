use std::path::Path;
use std::process::{Command, Output};

use sumlab_core::report::{Report, CSV_COLUMNS};

fn sumlab(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sumlab"));
    cmd.args(args).env_remove("SUMLAB_JOBS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL: &str = "primes = 3\nkappa = 3..4\nsamples = 4\nn_max = 10\nbig_q = 1, 3\n";

#[test]
fn passing_run_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.conf", SMALL);
    let out = dir.path().join("circle.json");
    let run = sumlab(&["verify", "circle", "--config", &config, "--out", out.to_str().unwrap()], &[]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let report = Report::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.target, "circle");
    assert!(report.pass());
    assert_eq!(report.records.len(), 2 * 21 + 2 * 21);
}

#[test]
fn csv_format_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.conf", SMALL);
    let out = dir.path().join("a.csv");
    let run = sumlab(
        &["verify", "eq4_3", "--config", &config, "--p", "5", "--kappa", "3", "--lambda", "2", "--out", out.to_str().unwrap()],
        &[],
    );
    assert_eq!(run.status.code(), Some(0));
    let csv = std::fs::read_to_string(&out).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 25);
    assert!(rows.iter().all(|r| r[1] == "5" && r[2] == "3" && r[3] == "2" && r[18] == "true"));
}

#[test]
fn stdout_when_no_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.conf", SMALL);
    let run = sumlab(&["verify", "circle", "--config", &config, "--format", "csv"], &[]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8(run.stdout).unwrap().starts_with("target,p,kappa"));
}

#[test]
fn failed_claims_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "strict.conf", &format!("{SMALL}circle_tol = 1e-300\n"));
    let run = sumlab(&["verify", "circle", "--config", &config], &[]);
    assert_eq!(run.status.code(), Some(1));
    let report = Report::from_json(&String::from_utf8(run.stdout).unwrap()).unwrap();
    assert!(report.summary.failed > 0);
}

#[test]
fn invalid_specs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.conf", SMALL);
    let bogus = write(dir.path(), "bogus.conf", "colour = blue\n");
    for args in [
        vec!["verify", "circle", "--config", &bogus],
        vec!["verify", "nonsense", "--config", &config],
        vec!["verify", "lemma6", "--config", &config, "--kappa", "4", "--lambda", "3"],
        vec!["verify", "eq4_3", "--config", &config, "--p", "11"],
        vec!["verify", "circle", "--config", "/nonexistent/sweep.conf"],
    ] {
        let run = sumlab(&args, &[]);
        assert_eq!(run.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&run.stderr).contains("error"));
    }
}

#[test]
fn jobs_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "small.conf", SMALL);
    let pinned = write(dir.path(), "pinned.conf", &format!("{SMALL}jobs = 1\n"));
    let args = |c: &str| ["verify", "circle", "--config", c].map(String::from);
    let code = |a: &[String], env: &[(&str, &str)]| {
        sumlab(&a.iter().map(String::as_str).collect::<Vec<_>>(), env).status.code()
    };
    // the environment is the default, the config overrides it, the flag overrides both
    assert_eq!(code(&args(&config), &[("SUMLAB_JOBS", "0")]), Some(2));
    assert_eq!(code(&args(&pinned), &[("SUMLAB_JOBS", "0")]), Some(0));
    let mut flagged = args(&config).to_vec();
    flagged.extend(["--jobs".into(), "2".into()]);
    assert_eq!(code(&flagged, &[("SUMLAB_JOBS", "0")]), Some(0));
    let mut zero = args(&pinned).to_vec();
    zero.extend(["--jobs".into(), "0".into()]);
    assert_eq!(code(&zero, &[]), Some(2));
}

#[test]
fn repository_configs_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["default.conf", "full.conf"] {
        let text = std::fs::read_to_string(root.join(name)).unwrap();
        sumlab_core::verify::SweepSpec::from_config(&text).unwrap();
    }
}
