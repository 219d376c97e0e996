//! End-to-end contracts of the command-line interface: output file layout,
//! determinism, error exits and the standalone tools.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lmsss"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lmsss_cli_{name}"));
    fs::remove_dir_all(&dir).ok();
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn small_config(dir: &Path, runs: usize) -> PathBuf {
    let config = dir.join("exp.toml");
    fs::write(
        &config,
        format!(
            r#"
runs = {runs}
base_seed = 5
output_dir = "out"
variants = ["nsga2", "lmsss"]

[budget]
pop_size = 10
total_generations = 5

[shrink]
n_mic = 20
n_nds = 8
lightweight_runs = 2
lightweight_generations = 2

[[datasets]]
name = "synth"
[datasets.synthetic]
instances = 60
features = 25
informative = 4
seed = 3
"#
        ),
    )
    .unwrap();
    config
}

#[test]
fn run_produces_the_complete_file_set() {
    let dir = workdir("file_set");
    let config = small_config(&dir, 5);
    let status = binary().arg("run").arg(&config).arg("--threads").arg("2").status().unwrap();
    assert!(status.success());

    let out = dir.join("out");
    let reports: Vec<_> = fs::read_dir(out.join("reports")).unwrap().collect();
    assert_eq!(reports.len(), 10, "2 variants x 5 runs");
    for metric in ["hv", "igd", "mce"] {
        assert!(out.join("tables").join(format!("{metric}.csv")).exists());
        assert!(out.join("tables").join(format!("{metric}.json")).exists());
    }
    assert!(out.join("fronts_train.csv").exists());
    assert!(out.join("fronts_test.csv").exists());
    assert!(out.join("timing.csv").exists());

    // Front CSV schema.
    let fronts = fs::read_to_string(out.join("fronts_test.csv")).unwrap();
    assert!(fronts.starts_with("run,variant,dataset,f1,loss,n_features,mask\n"));
    assert!(fronts.lines().count() > 10);

    // Table CSV schema with a summary row.
    let hv = fs::read_to_string(out.join("tables").join("hv.csv")).unwrap();
    assert!(hv.starts_with("dataset,variant,mean,std,mark\n"));
    assert!(hv.lines().any(|l| l.starts_with("summary,")));

    let timing = fs::read_to_string(out.join("timing.csv")).unwrap();
    assert!(timing.starts_with("dataset,variant,mean_seconds\n"));
    assert_eq!(timing.lines().count(), 3, "header plus one row per variant");
}

#[test]
fn rerun_is_identical_modulo_wall_time() {
    let dir = workdir("determinism");
    let config = small_config(&dir, 3);
    for out in ["a", "b"] {
        let status = binary()
            .arg("run")
            .arg(&config)
            .arg("--output-dir")
            .arg(dir.join(out))
            .status()
            .unwrap();
        assert!(status.success());
    }
    let mut compared = 0;
    for entry in fs::read_dir(dir.join("a").join("reports")).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        let mut a: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        let mut b: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.join("b").join("reports").join(&name)).unwrap(),
        )
        .unwrap();
        a["wall_time_seconds"] = serde_json::Value::Null;
        b["wall_time_seconds"] = serde_json::Value::Null;
        assert_eq!(a, b, "report {name} differs between reruns");
        compared += 1;
    }
    assert_eq!(compared, 6);
}

#[test]
fn every_variant_shares_the_split_at_a_run_index() {
    let dir = workdir("split_sharing");
    let config = small_config(&dir, 2);
    assert!(binary().arg("run").arg(&config).status().unwrap().success());

    for run in ["run000", "run001"] {
        let hashes: Vec<u64> = ["nsga2", "lmsss"]
            .iter()
            .map(|variant| {
                let path = dir
                    .join("out/reports")
                    .join(format!("synth__{variant}__{run}.json"));
                let report: serde_json::Value =
                    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
                report["split_hash"].as_u64().unwrap()
            })
            .collect();
        assert_eq!(hashes[0], hashes[1], "{run} split differs across variants");
    }
}

#[test]
fn missing_dataset_file_fails_naming_the_path() {
    let dir = workdir("missing_csv");
    let config = dir.join("exp.toml");
    fs::write(
        &config,
        r#"
variants = ["lmsss"]

[[datasets]]
name = "ghost"
path = "ghost_dataset.csv"
"#,
    )
    .unwrap();
    let output = binary().arg("run").arg(&config).output().unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("ghost_dataset.csv"), "stderr: {stderr}");
}

#[test]
fn gen_writes_csv_and_truth_file_deterministically() {
    let dir = workdir("gen");
    let out = dir.join("synth.csv");
    let args = |out: &Path| {
        vec![
            "gen".into(),
            "--instances".into(),
            "200".into(),
            "--features".into(),
            "500".into(),
            "--informative".into(),
            "10".into(),
            "--seed".into(),
            "7".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    assert!(binary().args(args(&out)).status().unwrap().success());

    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 501, "500 features plus the label");
    assert_eq!(lines.count(), 200);

    let truth: Vec<usize> =
        serde_json::from_str(&fs::read_to_string(dir.join("synth.truth.json")).unwrap()).unwrap();
    assert_eq!(truth.len(), 10);
    assert!(truth.iter().all(|&c| c < 500));

    // Same flags, second location: byte-identical files.
    let out2 = dir.join("again.csv");
    assert!(binary().args(args(&out2)).status().unwrap().success());
    assert_eq!(fs::read(&out).unwrap(), fs::read(&out2).unwrap());
    assert_eq!(
        fs::read(dir.join("synth.truth.json")).unwrap(),
        fs::read(dir.join("again.truth.json")).unwrap()
    );
}

#[test]
fn gen_rejects_impossible_parameters() {
    let dir = workdir("gen_bad");
    let status = binary()
        .args([
            "gen",
            "--instances",
            "100",
            "--features",
            "10",
            "--informative",
            "10",
            "--out",
        ])
        .arg(dir.join("bad.csv"))
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn shrink_respects_filter_and_budget_flags() {
    let dir = workdir("shrink");
    let csv = dir.join("data.csv");
    assert!(binary()
        .args([
            "gen",
            "--instances",
            "80",
            "--features",
            "60",
            "--informative",
            "6",
            "--seed",
            "2",
            "--out"
        ])
        .arg(&csv)
        .status()
        .unwrap()
        .success());

    let status = binary()
        .arg("shrink")
        .arg(&csv)
        .args([
            "--n-mic",
            "50",
            "--n-nds",
            "10",
            "--pop-size",
            "10",
            "--lightweight-runs",
            "2",
            "--lightweight-generations",
            "2",
            "--output-dir",
        ])
        .arg(&dir)
        .status()
        .unwrap();
    assert!(status.success());

    let result: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("shrink_result.json")).unwrap()).unwrap();
    let selected = result["selected"].as_array().unwrap();
    assert_eq!(selected.len(), 10);
    let filtered = result["filtered"].as_array().unwrap();
    assert_eq!(filtered.len(), 50, "n_mic top features");
    // Selected columns are a subset of the MIC-filtered set.
    let filtered_ids: Vec<u64> = filtered
        .iter()
        .map(|f| f["column"].as_u64().unwrap())
        .collect();
    for column in selected {
        assert!(filtered_ids.contains(&column.as_u64().unwrap()));
    }

    let scatter = fs::read_to_string(dir.join("shrink_scatter.csv")).unwrap();
    let mut lines = scatter.lines();
    assert_eq!(lines.next().unwrap(), "column_id,mic,freq,nds_rank");
    assert_eq!(lines.count(), 50, "one row per filtered feature");
}
