//! End-to-end contract of the `smm` binary: flags, CSV output, report
//! output, and the exit-status convention (0 pass, 1 verification failure,
//! 2 usage or input error), all exercised through real subprocesses.

use std::io::Write as _;
use std::process::{Command, Output};

fn smm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smm"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout is UTF-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr is UTF-8")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("process exits normally")
}

#[test]
fn soliton_profile_peaks_at_the_squared_wavenumber() {
    let out = smm(&[
        "soliton",
        "--family",
        "akns",
        "--solitons",
        "1",
        "--a0",
        "0.5",
        "--mode",
        "k=1,x0=0",
        "--grid",
        "a=-3:3:601,b=0:0:1",
        "--field",
        "Mx",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("a,b,value"));
    let max = lines
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(f64::NEG_INFINITY, f64::max);
    // The localized profile crests at exactly k^2 and the crest sits on a
    // grid node of this sampling.
    assert!((max - 1.0).abs() <= 1e-6, "peak {max}");
}

#[test]
fn csv_output_is_byte_identical_across_runs_and_lf_only() {
    let args = [
        "soliton",
        "--family",
        "nlbq",
        "--solitons",
        "1",
        "--a0",
        "1.0",
        "--mode",
        "a=2,x0=0.5",
        "--grid",
        "a=-2:2:17,b=-1:1:9",
        "--field",
        "M",
    ];
    let first = smm(&args);
    let second = smm(&args);
    assert_eq!(exit_code(&first), 0, "{}", stderr(&first));
    assert_eq!(first.stdout, second.stdout);
    assert!(!first.stdout.contains(&b'\r'));
    assert_eq!(stdout(&first).lines().count(), 1 + 17 * 9);
}

#[test]
fn zero_wavenumber_is_rejected_as_an_input_error() {
    let out = smm(&[
        "soliton", "--family", "akns", "--solitons", "1", "--a0", "0.5", "--mode", "k=0",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("nonzero"), "{}", stderr(&out));
}

#[test]
fn mode_count_must_match_the_soliton_count() {
    let out = smm(&[
        "soliton", "--family", "akns", "--solitons", "2", "--a0", "0.5", "--mode", "k=1",
    ]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("--mode"), "{}", stderr(&out));
}

#[test]
fn two_component_two_soliton_grid_samples_the_standard_box_without_poles() {
    let out = smm(&[
        "soliton",
        "--family",
        "nlbq",
        "--solitons",
        "2",
        "--a0",
        "1.0",
        "--mode",
        "a=2",
        "--mode",
        "a=3",
        "--grid",
        "a=-3:3:20,b=-3:3:20",
        "--field",
        "Mx",
    ]);
    // Grid sampling has no skip semantics: exit 0 proves every node
    // evaluated cleanly.
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 1 + 400);
}

#[test]
fn verify_builtin_passes_with_a_report_on_stdout() {
    let out = smm(&["verify", "--builtin", "akns-one-soliton"]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("name = \"akns-one-soliton\""));
    assert!(text.contains("pass = true"));
    assert!(text.contains("[[entry]]"));
}

#[test]
fn verify_negative_control_fails_with_the_corrupted_equation_flagged() {
    let out = smm(&["verify", "--builtin", "negative-control-lambda"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stdout(&out).contains("equation = \"AKNS_LAX_X\""));
    assert!(stdout(&out).contains("pass = false"));
    assert!(stderr(&out).contains("AKNS_LAX_X"), "{}", stderr(&out));
}

#[test]
fn verify_rejects_unknown_builtins_and_missing_files() {
    let out = smm(&["verify", "--builtin", "not-a-scenario"]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("not-a-scenario"));

    let out = smm(&["verify", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(exit_code(&out), 2);

    let out = smm(&["verify"]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn verify_runs_scenario_files_and_writes_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("seed.toml");
    let report_path = dir.path().join("report.toml");
    let mut f = std::fs::File::create(&scenario_path).unwrap();
    writeln!(f, "name = \"seed-solves-the-base-equation\"").unwrap();
    writeln!(f, "fields = {{ M = \"0.5*y\" }}").unwrap();
    writeln!(f, "equations = [\"AKNS_PDE\"]").unwrap();
    drop(f);

    let out = smm(&[
        "verify",
        "--scenario",
        scenario_path.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 0, "{}", stderr(&out));
    let report = std::fs::read_to_string(&report_path).unwrap();
    assert!(report.contains("[[entry]]"));
    assert!(report.contains("pass = true"));
    assert_eq!(report, stdout(&out));
}

#[test]
fn verify_rejects_malformed_scenario_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "name = \"x\"\nequations = [\n").unwrap();
    let out = smm(&["verify", "--scenario", path.to_str().unwrap()]);
    assert_eq!(exit_code(&out), 2);
    assert!(stderr(&out).contains("parse"), "{}", stderr(&out));
}

#[test]
fn parse_check_prints_the_expression_and_exits_zero() {
    let out = smm(&["parse-check", "--expr", "exp(2*x)"]);
    assert_eq!(exit_code(&out), 0);
    assert!(stdout(&out).contains("exp"));
}

#[test]
fn parse_check_reports_the_error_offset_and_exits_one() {
    let out = smm(&["parse-check", "--expr", "x +"]);
    assert_eq!(exit_code(&out), 1);
    assert!(stderr(&out).contains("offset 3"), "{}", stderr(&out));
}

#[test]
fn parse_check_eval_shows_the_exponential_homomorphism() {
    let lhs = smm(&["parse-check", "--expr", "exp(x)*exp(y)", "--eval-at", "0,0"]);
    let rhs = smm(&["parse-check", "--expr", "exp(x+y)", "--eval-at", "0,0"]);
    assert_eq!(exit_code(&lhs), 0);
    assert_eq!(exit_code(&rhs), 0);
    // Everything after the expression line (the evaluation point and every
    // partial derivative) must agree byte for byte.
    let tail = |out: &Output| -> Vec<String> {
        stdout(out).lines().skip(1).map(str::to_string).collect()
    };
    let l = tail(&lhs);
    assert_eq!(l, tail(&rhs));
    assert!(l.iter().any(|line| line == "d00 = 1.0"));
    assert!(l.len() > 10, "partials through order 3 are printed");
}

#[test]
fn no_arguments_is_a_usage_error() {
    let out = smm(&[]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn closing_the_output_pipe_early_is_not_an_error() {
    use std::io::Read as _;
    // A consumer like `head` closes stdout after a few lines; the CSV
    // producer must finish cleanly instead of aborting on the broken pipe.
    let mut child = Command::new(env!("CARGO_BIN_EXE_smm"))
        .args([
            "soliton", "--family", "akns", "--solitons", "1", "--a0", "0.5", "--mode", "k=1",
            "--grid", "a=-3:3:301,b=-3:3:301", "--field", "M",
        ])
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .expect("binary spawns");
    let mut buf = [0u8; 64];
    let mut stdout_pipe = child.stdout.take().expect("stdout is piped");
    stdout_pipe.read_exact(&mut buf).expect("first bytes arrive");
    drop(stdout_pipe);
    let status = child.wait().expect("child exits");
    let mut err = String::new();
    child.stderr.take().unwrap().read_to_string(&mut err).unwrap();
    assert_eq!(status.code(), Some(0), "stderr: {err}");
    assert!(err.is_empty(), "stderr: {err}");
}
