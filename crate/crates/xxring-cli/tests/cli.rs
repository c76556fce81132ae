//! End-to-end tests of the `xxring` binary: exit codes, determinism of the
//! written artifacts, and the verify deviation reporting.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn xxring(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xxring"));
    cmd.args(args)
        .env_remove("XXRING_WORKERS")
        .env_remove("XXRING_VERIFY_CORRUPT_G");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_RUN: &str = r#"
[run]
model = "uncorrelated"
length = 16
disorder = { kind = "power-law", strength = 2.0 }
realizations = 20
master-seed = 7

[[histogram]]
observable = "fidelity"
bins = 40
lo = 0.0
hi = 1.0
"#;

#[test]
fn sample_writes_deterministic_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    for out in [&out_a, &out_b] {
        let r = xxring(
            &[
                "sample",
                "--config",
                &config,
                "--out",
                out.to_str().unwrap(),
            ],
            &[],
        );
        assert!(
            r.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&r.stderr)
        );
    }
    let acc_a = fs::read(out_a.join("accumulator.json")).unwrap();
    let acc_b = fs::read(out_b.join("accumulator.json")).unwrap();
    assert_eq!(
        acc_a, acc_b,
        "accumulator must be byte-identical across reruns"
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "xxring");
    assert_eq!(manifest["master_seed"], 7);
    let fp = manifest["fingerprint"].as_str().unwrap();
    for name in manifest["outputs"].as_array().unwrap() {
        assert!(
            out_a.join(name.as_str().unwrap()).exists(),
            "manifest lists {name}"
        );
    }

    let summary = fs::read_to_string(out_a.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# manifest {fp}"),
        "csv references the manifest fingerprint"
    );
    assert_eq!(
        lines.next().unwrap(),
        "k,seed,m_tangle,q_nl,q_nl_normalized,max_ent_sep,max_nl_sep"
    );
    assert_eq!(lines.count(), 20, "one row per realization");

    let acc: serde_json::Value = serde_json::from_slice(&acc_a).unwrap();
    assert_eq!(acc["fingerprint"].as_str().unwrap(), fp);
}

#[test]
fn workers_do_not_change_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let out_flag = tmp.path().join("flag");
    let out_env = tmp.path().join("env");
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            out_flag.to_str().unwrap(),
            "--workers",
            "1",
        ],
        &[],
    );
    assert!(r.status.success());
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            out_env.to_str().unwrap(),
        ],
        &[("XXRING_WORKERS", "3")],
    );
    assert!(r.status.success());
    assert_eq!(
        fs::read(out_flag.join("accumulator.json")).unwrap(),
        fs::read(out_env.join("accumulator.json")).unwrap()
    );
}

#[test]
fn bad_worker_env_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        &[("XXRING_WORKERS", "many")],
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("XXRING_WORKERS"));
}

#[test]
fn unknown_config_key_exits_2_with_position() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        "[run]\nmodel = \"uncorrelated\"\nlenght = 16\ndisorder = { kind = \"box\", strength = 0.5 }\nrealizations = 4\nmaster-seed = 1\n",
    );
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(
        stderr.contains("lenght"),
        "diagnostic names the bad key: {stderr}"
    );
    assert!(
        stderr.contains("line"),
        "diagnostic is line-precise: {stderr}"
    );
}

#[test]
fn missing_section_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let r = xxring(
        &[
            "threshold",
            "--config",
            &config,
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("[threshold]"));
}

#[test]
fn pairs_csv_covers_the_window() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let out = tmp.path().join("o");
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
            "--pairs-csv",
            "--max-separation",
            "2",
        ],
        &[],
    );
    assert!(
        r.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    let pairs = fs::read_to_string(out.join("pairs.csv")).unwrap();
    let mut lines = pairs.lines();
    assert!(lines.next().unwrap().starts_with("# manifest "));
    assert_eq!(
        lines.next().unwrap(),
        "k,seed,i,j,separation,cxx,czz,fidelity,concurrence,bell,nonlocal"
    );
    // L=16 with distances 1 and 2: 32 pairs per realization, 20 realizations.
    assert_eq!(lines.count(), 32 * 20);
    // Capped window: no per-realization summaries.
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn hist_consumes_saved_accumulator_and_checks_fingerprint() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SMALL_RUN);
    let out = tmp.path().join("o");
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(r.status.success());

    let acc = out.join("accumulator.json");
    let hist_out = tmp.path().join("h");
    let r = xxring(
        &[
            "hist",
            "--config",
            &config,
            "--out",
            hist_out.to_str().unwrap(),
            "--from",
            acc.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        r.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&acc).unwrap()).unwrap();
    let csv = fs::read_to_string(hist_out.join("hist_0_fidelity.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# manifest {}", saved["fingerprint"].as_str().unwrap()),
        "histogram carries the fingerprint of the ensemble it came from"
    );
    assert_eq!(lines.next().unwrap(), "bin_lo,bin_hi,density");
    let mut mass = 0.0;
    let mut rows = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        mass += f[2] * (f[1] - f[0]);
        rows += 1;
    }
    assert_eq!(rows, 40);
    assert!(
        (mass - 1.0).abs() < 1e-9,
        "densities integrate to 1, got {mass}"
    );

    // A different master seed describes a different ensemble: refuse it.
    let other = tmp.path().join("other.toml");
    fs::write(
        &other,
        SMALL_RUN.replace("master-seed = 7", "master-seed = 8"),
    )
    .unwrap();
    let r = xxring(
        &[
            "hist",
            "--config",
            other.to_str().unwrap(),
            "--out",
            hist_out.to_str().unwrap(),
            "--from",
            acc.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("fingerprint"));
}

const SCAN_RUN: &str = r#"
[run]
model = "uncorrelated"
length = 8
disorder = { kind = "power-law", strength = 1.0 }
realizations = 50
master-seed = 11

[threshold]
grid = [0.5, 2.0, 8.0]
predicate = "nonlocal"

[maxsep]
strengths = [5.0]
"#;

#[test]
fn threshold_and_maxsep_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), SCAN_RUN);
    let out = tmp.path().join("t");
    let r = xxring(
        &[
            "threshold",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        r.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    let est: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("threshold.json")).unwrap()).unwrap();
    assert_eq!(est["predicate"], "nonlocal");
    assert!(
        est["onset"].is_number(),
        "strong disorder fires on L=8: {est}"
    );
    let report_fp = est["fingerprint"].as_str().unwrap().to_string();
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["fingerprint"].as_str().unwrap(), report_fp);

    let out = tmp.path().join("m");
    let r = xxring(
        &[
            "maxsep",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        r.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    let curve: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("maxsep.json")).unwrap()).unwrap();
    assert!(curve["fingerprint"].is_string());
    let pts = &curve["points"];
    assert_eq!(pts[0]["strength"], 5.0);
    assert!(pts[0]["max_entangled"]["separation"].is_number());
}

const VERIFY_RUN: &str = r#"
[run]
model = "uncorrelated"
length = 8
disorder = { kind = "power-law", strength = 1.0 }
realizations = 1
master-seed = 3

[verify]
lengths = [8]
disorders = [1.0]
seeds-per-combo = 3
"#;

#[test]
fn verify_passes_clean_and_catches_corruption() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), VERIFY_RUN);
    let out = tmp.path().join("v");
    let r = xxring(
        &[
            "verify",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        r.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
    let rep: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("verify.json")).unwrap()).unwrap();
    assert_eq!(rep["checked_chains"], 6, "3 seeds x 2 models");
    assert!(rep["failures"].as_array().unwrap().is_empty());
    assert!(rep["fingerprint"].is_string());

    let out = tmp.path().join("vc");
    let r = xxring(
        &[
            "verify",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[("XXRING_VERIFY_CORRUPT_G", "1")],
    );
    assert_eq!(
        r.status.code(),
        Some(3),
        "corrupted G must fail verification"
    );
    let stdout = String::from_utf8_lossy(&r.stdout);
    let stderr = String::from_utf8_lossy(&r.stderr);
    assert!(
        stdout.contains("FAIL"),
        "report marks the caught formula: {stdout}"
    );
    assert!(
        stderr.contains("cxx") || stderr.contains("czz"),
        "failure names the formula that caught the corruption: {stderr}"
    );
    assert!(stderr.contains("seed"), "failure names the seed: {stderr}");
}

/// At D = 10 nearly every realization is an fp-degenerate multiplet and the
/// |cxx| >= |czz| bookkeeping logs violations (18 at this master). The run
/// must write its outputs either way; the exit code is what the flag moves.
const DEGENERATE_RUN: &str = r#"
[run]
model = "uncorrelated"
length = 64
disorder = { kind = "power-law", strength = 10.0 }
realizations = 100
master-seed = 42
"#;

#[test]
fn counter_gate_respects_allow_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(tmp.path(), DEGENERATE_RUN);
    let out = tmp.path().join("strict");
    let r = xxring(
        &[
            "sample",
            "--config",
            &config,
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&r.stderr).contains("order violations"));
    assert!(
        out.join("accumulator.json").exists(),
        "outputs written before the gate"
    );
    assert!(out.join("manifest.json").exists());

    let allowed = tmp.path().join("allowed.toml");
    fs::write(
        &allowed,
        DEGENERATE_RUN.replace(
            "master-seed = 42",
            "master-seed = 42\nallow-order-violations = true",
        ),
    )
    .unwrap();
    let out = tmp.path().join("lax");
    let r = xxring(
        &[
            "sample",
            "--config",
            allowed.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        &[],
    );
    assert!(
        r.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&r.stderr)
    );
}

#[test]
fn verify_rejects_oversized_rings() {
    let tmp = tempfile::tempdir().unwrap();
    let config = write_config(
        tmp.path(),
        &VERIFY_RUN.replace("lengths = [8]", "lengths = [16]"),
    );
    let r = xxring(
        &[
            "verify",
            "--config",
            &config,
            "--out",
            tmp.path().join("o").to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(r.status.code(), Some(2));
}
