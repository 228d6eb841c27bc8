use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_qgdm");

fn qgdm(args: &[&str], cwd: &Path) -> Output {
    Command::new(BIN)
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("experiment.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SHORT_RUN: &str = r#"
variant = "qgdm"
n = 1
target = "pure"
seeds = [0, 1]
epochs = 4
"#;

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn train_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    for out in ["a", "b"] {
        let o = qgdm(&["train", "--config", &cfg, "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let files = [
        "checkpoint.json",
        "train.csv",
        "generation.csv",
        "reference_curve.csv",
        "target_state.json",
        "final_state.json",
        "result.json",
        "MANIFEST.json",
    ];
    for seed in ["seed_0", "seed_1"] {
        for f in files {
            let a = read(dir.path().join("a").join(seed).join(f));
            let b = read(dir.path().join("b").join(seed).join(f));
            assert_eq!(a, b, "{seed}/{f} differs between identical runs");
        }
    }
    assert_eq!(read(dir.path().join("a/summary.json")), read(dir.path().join("b/summary.json")));

    let csv = String::from_utf8(read(dir.path().join("a/seed_0/train.csv"))).unwrap();
    assert_eq!(csv.lines().next(), Some("epoch,loss,loss_L0,loss_batch_mean,lr,wall_time"));
    assert_eq!(csv.lines().count(), 5);
    let gen = String::from_utf8(read(dir.path().join("a/seed_0/generation.csv"))).unwrap();
    assert_eq!(gen.lines().next(), Some("t,fidelity,x,y,z"));
    assert_eq!(gen.lines().count(), 31);

    let manifest: serde_json::Value = serde_json::from_slice(&read(dir.path().join("a/seed_1/MANIFEST.json"))).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["artifacts"].as_object().unwrap().len(), files.len() - 1);
    let state: serde_json::Value = serde_json::from_slice(&read(dir.path().join("a/seed_0/final_state.json"))).unwrap();
    assert_eq!(state["n_qubits"], 1);
    assert_eq!(state["data"].as_array().unwrap().len(), 4);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let o = qgdm(
        &["train", "--config", &cfg, "--seed", "7", "--variant", "rqgdm", "--n", "2", "--target", "mixed", "--out", "r"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let result: serde_json::Value = serde_json::from_slice(&read(dir.path().join("r/seed_7/result.json"))).unwrap();
    assert_eq!(result["variant"], "rqgdm");
    assert_eq!(result["n"], 2);
    assert_eq!(result["target"], "mixed");
    assert!(!dir.path().join("r/seed_0").exists());
}

#[test]
fn invalid_configs_fail_before_any_work() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "n = 1\nbatch_size = 30\nseeds = [0]\n");
    let o = qgdm(&["train", "--config", &cfg, "--out", "never"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("batch_size"));
    assert!(!dir.path().join("never").exists());

    let o = qgdm(&["train", "--variant", "rqgdm", "--n", "1", "--out", "never"], dir.path());
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("rqgdm requires n ≥ 2"));

    let o = qgdm(&["train", "--variant", "qgdm", "--n", "5", "--out", "never"], dir.path());
    assert!(!o.status.success());

    let o = qgdm(&["train", "--variant", "bogus"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn single_value_sweep_matches_train() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    let o = qgdm(&["sweep-ntau", "--config", &cfg, "--ntau-values", "1", "--out", "sweep"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = qgdm(&["train", "--config", &cfg, "--ntau", "1", "--out", "train"], dir.path());
    assert!(o.status.success());
    for f in ["train.csv", "generation.csv", "checkpoint.json"] {
        assert_eq!(
            read(dir.path().join("sweep/ntau_1/seed_0").join(f)),
            read(dir.path().join("train/seed_0").join(f))
        );
    }
    let table = String::from_utf8(read(dir.path().join("sweep/sweep.csv"))).unwrap();
    assert!(table.starts_with("n_tau,runs,median,mean,std,min,max\n1,2,"));

    let o = qgdm(&["sweep-ntau", "--config", &cfg, "--variant", "rqgdm", "--n", "2"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn export_bloch_and_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHORT_RUN);
    assert!(qgdm(&["train", "--config", &cfg, "--out", "run"], dir.path()).status.success());

    let o = qgdm(&["export-bloch", "--checkpoint", "run/seed_0/checkpoint.json", "--out", "bloch.csv"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(read(dir.path().join("bloch.csv"))).unwrap();
    let rows: Vec<Vec<f64>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 30);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[0] as usize, i + 1);
        let norm = (r[1] * r[1] + r[2] * r[2] + r[3] * r[3]).sqrt();
        assert!((norm - 1.0).abs() < 1e-8);
    }

    std::fs::write(dir.path().join("base.txt"), "0.5 0.5").unwrap();
    let o = qgdm(&["summarize", "run", "--relative-to", "base.txt", "--out", "summary.json"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_slice(&read(dir.path().join("summary.json"))).unwrap();
    assert_eq!(report["groups"][0]["runs"], 2);
    let mean = report["groups"][0]["mean"].as_f64().unwrap();
    let rel = report["relative_change"].as_f64().unwrap();
    assert!((rel - (mean - 0.5) / 0.5).abs() < 1e-12);

    assert!(!qgdm(&["summarize", "missing_dir_or_file"], dir.path()).status.success());

    let cfg2 = write_config(dir.path(), "n = 2\nseeds = [0]\nepochs = 1\n");
    assert!(qgdm(&["train", "--config", &cfg2, "--out", "two"], dir.path()).status.success());
    let o = qgdm(&["export-bloch", "--checkpoint", "two/seed_0/checkpoint.json"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn failure_study_writes_distance_curves() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seeds = [3]\nepochs = 5\n");
    let o = qgdm(&["failure-study", "--config", &cfg, "--out", "fs"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let hs = String::from_utf8(read(dir.path().join("fs/seed_3/hs.csv"))).unwrap();
    assert_eq!(hs.lines().next(), Some("epoch,hs_joint,hs_output"));
    assert_eq!(hs.lines().count(), 6);
    let cmp: serde_json::Value = serde_json::from_slice(&read(dir.path().join("fs/seed_3/density_comparison.json"))).unwrap();
    assert_eq!(cmp["generated"]["data"].as_array().unwrap().len(), 4);
    assert_eq!(cmp["target"]["n_qubits"], 1);
    let result: serde_json::Value = serde_json::from_slice(&read(dir.path().join("fs/seed_3/result.json"))).unwrap();
    assert_eq!(result["variant"], "naive");
    let manifest: serde_json::Value = serde_json::from_slice(&read(dir.path().join("fs/seed_3/MANIFEST.json"))).unwrap();
    assert!(manifest["artifacts"]["hs.csv"].is_string());
    assert!(dir.path().join("fs/failure_study.json").is_file());
}

#[test]
fn shipped_presets_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let cfg = qgdm::experiment::ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 10);
    let big = qgdm::experiment::ExperimentConfig::load(dir.join("rqgdm_n8_mixed.toml")).unwrap();
    assert_eq!(big.train_config(0).steps, 90);
}

#[test]
fn readme_config_block_is_valid() {
    let readme = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../README.md")).unwrap();
    let block = readme.split("```toml\n").nth(1).unwrap().split("```").next().unwrap();
    let cfg = qgdm::experiment::ExperimentConfig::from_toml_str(block).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.train_config(0).denoise_layers, 2);
}
