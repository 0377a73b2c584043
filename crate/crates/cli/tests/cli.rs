//! End-to-end checks of the `mnac` binary: exit codes, output formats, file
//! side effects, and byte-level reproducibility across reruns.

use std::path::Path;
use std::process::{Command, Output};

fn mnac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mnac")).args(args).output().expect("binary should spawn")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("stdout should be utf-8")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("stderr should be utf-8")
}

#[test]
fn capacity_reports_the_closed_form_point() {
    let out = mnac(&["capacity", "--n", "100", "--ell", "10000", "--alpha", "0.0025", "--power", "2"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("capacity"), "missing capacity line:\n{text}");
    assert!(text.contains("0.8734377613113979"), "unexpected value:\n{text}");
    assert!(text.contains("nats"));

    let bits = mnac(&[
        "capacity", "--n", "100", "--ell", "10000", "--alpha", "0.0025", "--power", "2",
        "--units", "bits",
    ]);
    assert!(stdout(&bits).contains("1.2601043267691119"), "bits conversion off:\n{}", stdout(&bits));
}

#[test]
fn capacity_rejects_bad_input_with_nonzero_exit() {
    let out = mnac(&["capacity", "--n", "100", "--ell", "10", "--alpha", "1.5", "--power", "2"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("alpha"), "error should name the bad field: {}", stderr(&out));
}

#[test]
fn sweep_writes_a_stable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let args = [
        "sweep", "--n-min", "100", "--n-max", "1000", "--points", "5",
        "--out", path.to_str().unwrap(),
    ];
    let out = mnac(&args);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("wrote"));

    let first = std::fs::read_to_string(&path).unwrap();
    let header = first
        .lines()
        .find(|l| !l.starts_with('#'))
        .expect("csv should have a header after the metadata block");
    assert_eq!(header, "n,ell,alpha,k,c1_nats,theta,capacity_nats,capacity_bits");
    assert_eq!(first.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 6);

    mnac(&args);
    let second = std::fs::read_to_string(&path).unwrap();
    assert_eq!(first, second, "rerun should be byte-identical");
}

#[test]
fn exponent_prints_er_and_writes_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exponent.csv");
    let out = mnac(&[
        "exponent", "--n", "200", "--k", "50", "--power", "2", "--epsilon", "0.2",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("Er=-0.039870587299758564"), "Er line missing or off:\n{text}");
    assert!(text.contains("union bound"));

    let csv = std::fs::read_to_string(&path).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "k,gamma,rho_star,f_star");
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 51);
}

#[test]
fn simulate_preset_is_deterministic_and_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("trials.csv");
    let args = [
        "simulate", "--preset", "tiny", "--trials", "100",
        "--out", out_path.to_str().unwrap(),
    ];
    let first = mnac(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.contains("p_hat"), "estimate line missing:\n{text}");
    assert!(text.contains("resolved: n = 16, n0 = 8, m = 2"), "{text}");
    let csv_first = std::fs::read_to_string(&out_path).unwrap();
    let header = csv_first.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "trial,detection_exact,tuple_exact,missed,false_alarms,message_errors,power_violation,error"
    );

    let second = mnac(&args);
    assert_eq!(stdout(&first), stdout(&second));
    assert_eq!(csv_first, std::fs::read_to_string(&out_path).unwrap());

    // A config file feeds the same resolver, and flags win over the file.
    let cfg_path = dir.path().join("exp.conf");
    std::fs::write(&cfg_path, "n = 32\nell = 8\ntrials = 50\n").unwrap();
    let cfg_run = mnac(&["simulate", "--config", cfg_path.to_str().unwrap(), "--n", "64"]);
    assert!(cfg_run.status.success(), "{}", stderr(&cfg_run));
    assert!(
        stdout(&cfg_run).contains("resolved: n = 64"),
        "flag should override the config file:\n{}",
        stdout(&cfg_run)
    );
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.conf");
    std::fs::write(&cfg_path, "n = 32\nwibble = 7\n").unwrap();
    let out = mnac(&["simulate", "--config", cfg_path.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("line 2"), "error should cite the offending line: {err}");
    assert!(err.contains("wibble"), "error should name the unknown key: {err}");
}

#[test]
fn fig1_emits_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("fig1");
    let out = mnac(&["fig1", "--out", base.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let csv_path = base.with_extension("csv");
    let svg_path = base.with_extension("svg");
    assert!(Path::exists(&csv_path) && Path::exists(&svg_path));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "curve,n,ell,alpha,k,c1_nats,theta,capacity_nats,capacity_bits");
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn validate_is_deterministic_at_fixed_seed() {
    let args = ["validate", "--seed", "5", "--trials", "40"];
    let first = mnac(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    assert!(text.contains("stage1") && text.contains("genie") && text.contains("end2end"));
    let second = mnac(&args);
    assert_eq!(text, stdout(&second));
}

#[test]
fn codebook_round_trips_through_dump_and_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("book.bin");
    let dump = mnac(&[
        "codebook", "--dump", path.to_str().unwrap(),
        "--ell", "6", "--n", "24", "--n0", "8", "--m", "3", "--power", "2", "--seed", "9",
    ]);
    assert!(dump.status.success(), "{}", stderr(&dump));
    assert!(stdout(&dump).contains("ell = 6, n = 24, n0 = 8, m = 3, seed = 9"));

    let load = mnac(&["codebook", "--load", path.to_str().unwrap()]);
    assert!(load.status.success(), "{}", stderr(&load));
    assert!(stdout(&load).contains("ell = 6, n = 24, n0 = 8, m = 3, seed = 9"));

    let truncated = dir.path().join("short.bin");
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&truncated, &bytes[..bytes.len() / 2]).unwrap();
    let bad = mnac(&["codebook", "--load", truncated.to_str().unwrap()]);
    assert!(!bad.status.success(), "truncated file should be rejected");

    let both = mnac(&["codebook"]);
    assert!(!both.status.success(), "one of --dump/--load is required");
}
