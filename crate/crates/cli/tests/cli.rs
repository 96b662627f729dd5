//! End-to-end tests of the `mfg` binary: exit codes, output files, and
//! byte-level determinism across repeated runs and worker counts.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mfg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mfg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).to_string()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_STATIONARY: &str = "[grid]\nn = 32\n";

const SMALL_EVOLVE: &str = r#"
[grid]
n = 32

[mesh]
t_final = 0.5
steps = 250

[initial]
kind = "m_eps"
eps = 0.2

[output]
snapshot_stride = 50
shift_lattice = 10
diagnostics_stride = 5
"#;

fn assert_same_bytes(a: &Path, b: &Path) {
    let left = fs::read(a).unwrap();
    let right = fs::read(b).unwrap();
    assert_eq!(
        left,
        right,
        "{} and {} differ",
        a.display(),
        b.display()
    );
}

#[test]
fn evolve_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "evolve.toml", SMALL_EVOLVE);
    let out1 = dir.path().join("run1");
    let out2 = dir.path().join("run2");
    for out in [&out1, &out2] {
        let result = mfg(&["evolve", "--config", &config, "--out", out.to_str().unwrap()]);
        assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    }
    for file in [
        "diagnostics.csv",
        "shift_bound.csv",
        "summary.json",
        "trajectory/trajectory.csv",
        "trajectory/mesh.json",
        "trajectory/m_0005.tgf",
        "trajectory/u_0000.tgf",
    ] {
        assert_same_bytes(&out1.join(file), &out2.join(file));
    }
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    assert_eq!(summary["lyapunov_nonincreasing"], true);
    assert_eq!(summary["shift_bound_ok"], true);
}

#[test]
fn stationary_finds_the_unique_subcritical_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.toml", SMALL_STATIONARY);
    let out1 = dir.path().join("s1");
    let out2 = dir.path().join("s2");
    let first = mfg(&[
        "stationary",
        "--config",
        &config,
        "--out",
        out1.to_str().unwrap(),
        "--jobs",
        "1",
    ]);
    assert_eq!(code(&first), 0, "stderr: {}", stderr(&first));
    let second = mfg(&[
        "stationary",
        "--config",
        &config,
        "--out",
        out2.to_str().unwrap(),
        "--jobs",
        "3",
    ]);
    assert_eq!(code(&second), 0);
    assert_same_bytes(&out1.join("summary.json"), &out2.join("summary.json"));
    assert_same_bytes(
        &out1.join("history_two-bump.csv"),
        &out2.join("history_two-bump.csv"),
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out1.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["schema"], 1);
    let seeds = summary["seeds"].as_array().unwrap();
    assert_eq!(seeds.len(), 5);
    for seed in seeds {
        assert_eq!(seed["converged"], true);
        assert!(seed["q1"].as_f64().unwrap() <= 1e-8);
        let history = out1.join(seed["history_file"].as_str().unwrap());
        let text = fs::read_to_string(history).unwrap();
        assert!(text.starts_with("iter,W1_step,r_hjb,r_fp,r_const\n"));
    }
    let distinct = summary["distinct"].as_array().unwrap();
    assert_eq!(distinct.len(), 1, "subcritical run must deduplicate to one");
    assert!(distinct[0]["w1_to_uniform"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn criteria_verdicts_match_the_coupling_strength() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("crit");
    // Subcritical: certificate granted, and the heat-flow bound holds at a
    // cosine-perturbed density.
    let density = dir.path().join("m.csv");
    {
        use mfg_core::measures::cosine_perturbed_uniform;
        use mfg_core::TorusGrid;
        let grid = TorusGrid::new(1, 64).unwrap();
        let m = cosine_perturbed_uniform(&grid, 0.2, &[1]).unwrap();
        mfg_core::io::export_density_csv(&density, &m).unwrap();
    }
    let result = mfg(&[
        "criteria",
        "--out",
        out.to_str().unwrap(),
        "--density",
        density.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let text = stdout(&result);
    assert!(text.contains("uniqueness certified"), "{text}");
    assert!(text.contains("heat-flow bound"), "{text}");
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("criteria.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], 1);
    assert_eq!(json["monotone"], false);
    assert_eq!(json["lambda"], 1.0);
    assert_eq!(json["half_critical"], 2.0);
    assert_eq!(json["certified"], true);
    assert_eq!(json["densities"][0]["satisfied"], true);

    // Supercritical: no certificate.
    let config = write_config(
        dir.path(),
        "super.toml",
        "[kernel]\npreset = \"kuramoto\"\nkappa = 6.0\n",
    );
    let result = mfg(&[
        "criteria",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    assert!(stdout(&result).contains("no uniqueness certificate"));

    // A monotone kernel certifies directly.
    let config = write_config(
        dir.path(),
        "monotone.toml",
        "[kernel]\nc0 = 0.5\nmodes = [{ k = [1], c = 0.25 }]\n",
    );
    let result = mfg(&[
        "criteria",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 0);
    assert!(stdout(&result).contains("at most one stationary equilibrium"));
}

#[test]
fn sweep_traces_the_synchronization_onset() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "small.toml", SMALL_STATIONARY);
    let out = dir.path().join("sweep");
    let result = mfg(&[
        "sweep",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--kappa",
        "2,6",
        "--jobs",
        "4",
    ]);
    assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("kappa,max_q1"));
    let row2: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row6: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row2[0], "2");
    assert!(row2[1].parse::<f64>().unwrap() <= 1e-6);
    assert_eq!(row6[0], "6");
    assert!(row6[1].parse::<f64>().unwrap() > 1e-3);

    let empty = mfg(&["sweep", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&empty), 2);
    assert!(stderr(&empty).contains("usage"), "{}", stderr(&empty));
}

#[test]
fn verify_emits_junit_and_text() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("v1");
    let out2 = dir.path().join("v2");
    for out in [&out1, &out2] {
        let result = mfg(&["verify", "--out", out.to_str().unwrap(), "--seed", "7"]);
        assert_eq!(code(&result), 0, "stderr: {}", stderr(&result));
        assert!(stdout(&result).contains("0 failed"));
    }
    assert_same_bytes(&out1.join("verify.txt"), &out2.join("verify.txt"));
    let xml = fs::read_to_string(out1.join("verify.xml")).unwrap();
    assert!(xml.contains("<testsuite"));
    assert!(xml.contains("failures=\"0\""));
}

#[test]
fn configuration_problems_exit_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_field = write_config(dir.path(), "bad.toml", "[params]\nrh = 1.0\n");
    let result = mfg(&["stationary", "--config", &bad_field]);
    assert_eq!(code(&result), 2);

    let result = mfg(&["evolve", "--config", "/nonexistent/config.toml"]);
    assert_eq!(code(&result), 2);

    let no_kappa = write_config(dir.path(), "nok.toml", "[kernel]\npreset = \"kuramoto\"\n");
    let result = mfg(&["criteria", "--config", &no_kappa]);
    assert_eq!(code(&result), 2);

    let missing_density = write_config(
        dir.path(),
        "file.toml",
        "[initial]\nkind = \"file\"\npath = \"/nonexistent/m.csv\"\n",
    );
    let result = mfg(&["evolve", "--config", &missing_density]);
    assert_eq!(code(&result), 2);
}

#[test]
fn nonconvergence_exits_with_code_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "starved.toml",
        "[kernel]\npreset = \"kuramoto\"\nkappa = 6.0\n\n[grid]\nn = 32\n\n[solver]\nmax_outer = 2\n",
    );
    let out = dir.path().join("out");
    let result = mfg(&[
        "stationary",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&result), 1, "stderr: {}", stderr(&result));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert!(summary["seeds"]
        .as_array()
        .unwrap()
        .iter()
        .any(|s| s["converged"] == false));
}

#[test]
fn print_config_is_stable_toml() {
    let first = mfg(&["evolve", "--print-config"]);
    assert_eq!(code(&first), 0);
    let second = mfg(&["stationary", "--print-config"]);
    assert_eq!(code(&second), 0);
    assert_eq!(stdout(&first), stdout(&second));
    let parsed: toml::Value = toml::from_str(&stdout(&first)).unwrap();
    assert_eq!(
        parsed["kernel"]["preset"].as_str(),
        Some("kuramoto"),
        "defaults expose the flagship preset"
    );
    assert_eq!(parsed["mesh"]["steps"].as_integer(), Some(20000));
}
