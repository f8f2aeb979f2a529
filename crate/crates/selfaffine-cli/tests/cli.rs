use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_selfaffine"))
}

fn fixture(name: &str, dir: &Path) -> std::path::PathBuf {
    let out = bin()
        .args(["fixtures", name, "--out"])
        .arg(dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "fixtures {name} failed: {out:?}");
    dir.join(format!("{name}.json"))
}

fn with_params(path: &Path, params: serde_json::Value) -> std::path::PathBuf {
    let mut cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    cfg["params"] = params;
    let out = path.with_extension("params.json");
    fs::write(&out, cfg.to_string()).unwrap();
    out
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code")
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pair = fixture("positive-pair", dir.path());
    let out = bin().args(["check", "--config"]).arg(&pair).output().unwrap();
    assert_eq!(code(&out), 0, "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["gamma"]["certified_upper"], 1.0);
    assert!(report["q0_bunching"].as_f64().unwrap() > 2.0);

    let overlap = fixture("overlapping-squares", dir.path());
    let out = bin().args(["check", "--config"]).arg(&overlap).output().unwrap();
    assert_eq!(code(&out), 2, "{out:?}");

    let neg = dir.path().join("neg.json");
    fs::write(
        &neg,
        r#"{"maps":[{"linear":[[0.5,-0.1],[0.1,0.5]],"translation":[0,0]},
                    {"linear":[[0.3,0.0],[0.0,0.3]],"translation":[0.5,0.5]}]}"#,
    )
    .unwrap();
    let out = bin().args(["check", "--config"]).arg(&neg).output().unwrap();
    assert_eq!(code(&out), 1, "{out:?}");
}

#[test]
fn config_errors_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{not json").unwrap();
    for cmd in ["check", "dim", "lq", "diag", "render"] {
        let out = bin().args([cmd, "--config"]).arg(&bad).output().unwrap();
        assert_eq!(code(&out), 64, "{cmd}: {out:?}");
    }
    let out = bin()
        .args(["dim", "--config", "/definitely/not/there.json"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 64);
    let out = bin().args(["dim"]).output().unwrap();
    assert_eq!(code(&out), 64);
    let out = bin().args(["fixtures", "no-such-system"]).output().unwrap();
    assert_eq!(code(&out), 64);
}

#[test]
fn dim_matches_the_similarity_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture("third-similarities", dir.path());
    let out = bin()
        .args(["dim", "--format", "csv", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let d_row = text.lines().nth(1).unwrap();
    let d: f64 = d_row.split(',').nth(1).unwrap().parse().unwrap();
    assert!((d - 2f64.ln() / 3f64.ln()).abs() <= 1e-6, "d = {d}");
}

#[test]
fn render_emits_probability_cells_and_an_image() {
    let dir = tempfile::tempdir().unwrap();
    let leb = fixture("lebesgue-square", dir.path());
    let out_dir = dir.path().join("leb");
    let out = bin()
        .args(["render", "--format", "csv", "--out"])
        .arg(&out_dir)
        .args(["--config"])
        .arg(&leb)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{out:?}");
    let cells = fs::read_to_string(out_dir.join("cells.csv")).unwrap();
    let rows: Vec<&str> = cells.lines().skip(1).collect();
    assert_eq!(rows.len(), 4096);
    let total: f64 = rows
        .iter()
        .map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() <= 1e-9, "total {total}");
    assert!(out_dir.join("render.png").exists());

    let cantor = fixture("cantor-corners", dir.path());
    let cfg = with_params(&cantor, serde_json::json!({ "delta": 0.004115226337448559 }));
    let out_dir = dir.path().join("cantor");
    let out = bin()
        .args(["render", "--format", "csv", "--out"])
        .arg(&out_dir)
        .args(["--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{out:?}");
    let cells = fs::read_to_string(out_dir.join("cells.csv")).unwrap();
    let rows: Vec<&str> = cells.lines().skip(1).collect();
    assert_eq!(rows.len(), 32, "expected 2^5 diagonal cells");
    for r in &rows {
        let mut it = r.split(',');
        let x = it.next().unwrap();
        let y = it.next().unwrap();
        assert_eq!(x, y, "off-diagonal cell {r}");
    }
}

#[test]
fn seeded_runs_are_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let pair = fixture("positive-pair", dir.path());
    let cfg = with_params(
        &pair,
        serde_json::json!({
            "s_values": [0.19], "depth": 8, "n_outer": 40, "n_inner": 20,
            "depth0": 5, "rounds": 2
        }),
    );
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out_dir = dir.path().join(format!("w{workers}"));
        let out = bin()
            .args(["diag", "--seed", "5", "--format", "csv", "--workers", workers, "--out"])
            .arg(&out_dir)
            .args(["--config"])
            .arg(&cfg)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{out:?}");
        outputs.push((
            fs::read(out_dir.join("diag_energy.csv")).unwrap(),
            fs::read(out_dir.join("diag_r.csv")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1], "worker count changed the output bytes");
}

#[test]
fn fixtures_round_trip_through_every_command_path() {
    let dir = tempfile::tempdir().unwrap();
    // Every built-in config parses and passes validation via `dim`.
    let out = bin().args(["fixtures", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 0);
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    assert_eq!(names.len(), 7);
    for path in names {
        let cfg = with_params(&path, serde_json::json!({ "depth": 5, "qs": [2.0] }));
        let out = bin().args(["dim", "--config"]).arg(&cfg).output().unwrap();
        assert_eq!(code(&out), 0, "{path:?}: {out:?}");
    }
    // Stdout form is one JSON object keyed by fixture name.
    let out = bin().arg("fixtures").output().unwrap();
    let all: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(all.as_object().unwrap().len(), 7);
}
