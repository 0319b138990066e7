use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qtl::checkpoint::load_checkpoint;
use qtl::features::{from_csv, to_csv};
use qtl::{save_checkpoint, Checkpoint, SavedModel};
use qtl_core::data::Dataset;
use qtl_core::{DressedCircuit, Model};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn qtl(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("spawn qtl")
}

fn code(output: &Output) -> i32 {
    output.status.code().unwrap_or(-1)
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn zero_iterations_saves_the_initial_model() {
    let dir = tempfile::tempdir().unwrap();
    let out = qtl(
        dir.path(),
        &[
            "train",
            "--preset",
            "spirals",
            "--iterations",
            "0",
            "--seed",
            "4",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let metrics = read(dir.path(), "metrics.csv");
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "iteration,epoch,train_loss,test_accuracy");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("0,"));

    let saved = load_checkpoint(&dir.path().join("model.ckpt.json"))
        .unwrap()
        .to_model()
        .unwrap();
    let initial = qtl::experiments::spirals_model(Default::default(), 4, 5, 4).unwrap();
    assert_eq!(saved, initial);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(code(&qtl(p, &["train", "--preset", "mnist"])), 2);
    assert_eq!(
        code(&qtl(p, &["train", "--preset", "spirals", "--lr", "0"])),
        2
    );
    assert_eq!(code(&qtl(p, &["frobnicate"])), 2);
    assert_eq!(
        code(&qtl(
            p,
            &[
                "eval",
                "--checkpoint",
                "missing.json",
                "--preset",
                "spirals"
            ]
        )),
        2
    );

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = SavedModel::Dressed(DressedCircuit::random(2, 2, 1, 2, &mut rng).unwrap());
    let mut ckpt = Checkpoint::from_model(&model, 0, None);
    ckpt.format_version = 99;
    let bad = p.join("future.ckpt.json");
    fs::write(&bad, ckpt.to_json()).unwrap();
    let out = qtl(
        p,
        &[
            "eval",
            "--checkpoint",
            bad.to_str().unwrap(),
            "--preset",
            "spirals",
        ],
    );
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("99"));
}

#[test]
fn eval_rejects_mismatched_width() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&qtl(
            p,
            &[
                "gen-features",
                "--width",
                "8",
                "--n-train",
                "10",
                "--n-test",
                "10"
            ]
        )),
        0
    );
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let model = SavedModel::Dressed(DressedCircuit::random(2, 2, 1, 2, &mut rng).unwrap());
    let ckpt = p.join("m.ckpt.json");
    save_checkpoint(&Checkpoint::from_model(&model, 0, None), &ckpt).unwrap();
    let features = p.join("features-test.csv");
    let out = qtl(
        p,
        &[
            "eval",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--features",
            features.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(!p.join("eval.json").exists());
}

#[test]
fn constant_model_has_one_region() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut model = DressedCircuit::random(2, 3, 2, 2, &mut rng).unwrap();
    model.post.weights.iter_mut().for_each(|w| *w = 0.0);
    model.post.bias = vec![0.0, 1.0];
    let ckpt = p.join("const.ckpt.json");
    save_checkpoint(
        &Checkpoint::from_model(&SavedModel::Dressed(model), 0, None),
        &ckpt,
    )
    .unwrap();
    let out = qtl(
        p,
        &[
            "decision-region",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--steps",
            "11",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = read(p, "decision_region.csv");
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 121);
    assert!(rows.iter().all(|r| r.ends_with(",1")));
}

#[test]
fn region_points_agree_with_eval() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&qtl(
            p,
            &["train", "--preset", "spirals", "--iterations", "50"]
        )),
        0
    );
    let ckpt = p.join("model.ckpt.json");
    let out = qtl(
        p,
        &[
            "decision-region",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--steps",
            "9",
            "--min",
            "-1",
            "--max",
            "1",
        ],
    );
    assert_eq!(code(&out), 0);
    let csv = read(p, "decision_region.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,predicted_class"));
    let (mut features, mut labels) = (Vec::new(), Vec::new());
    let mut points = Vec::new();
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let (x, y): (f64, f64) = (cols[0].parse().unwrap(), cols[1].parse().unwrap());
        points.push((x, y));
        features.extend([x, y]);
        labels.push(cols[2].parse::<usize>().unwrap());
    }
    assert_eq!(points[0], (-1.0, -1.0));
    assert_eq!(points[1], (-0.75, -1.0));
    assert_eq!(points[80], (1.0, 1.0));
    let grid = Dataset::new(2, features, labels, 2).unwrap();
    fs::write(p.join("grid.csv"), to_csv(&grid)).unwrap();
    let grid_path = p.join("grid.csv");
    let out = qtl(
        p,
        &[
            "eval",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--features",
            grid_path.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("accuracy: 1.0000 (81/81)"));
}

#[test]
fn eval_reproduces_training_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&qtl(
            p,
            &[
                "train",
                "--preset",
                "spirals",
                "--iterations",
                "100",
                "--seed",
                "2"
            ]
        )),
        0
    );
    let model = load_checkpoint(&p.join("model.ckpt.json"))
        .unwrap()
        .to_model()
        .unwrap();
    let (_, test) = qtl::experiments::spirals_data(2).unwrap();
    let expected = model.accuracy(&test).unwrap();
    let ckpt = p.join("model.ckpt.json");
    assert_eq!(
        code(&qtl(
            p,
            &[
                "eval",
                "--checkpoint",
                ckpt.to_str().unwrap(),
                "--preset",
                "spirals",
                "--seed",
                "2"
            ]
        )),
        0
    );
    let report: Value = serde_json::from_str(&read(p, "eval.json")).unwrap();
    assert_eq!(report["accuracy"].as_f64().unwrap(), expected);
    assert_eq!(report["n_samples"], 200);
}

#[test]
fn reruns_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [a.path(), b.path()] {
        assert_eq!(code(&qtl(dir, &["gen-spirals", "--seed", "9"])), 0);
        assert_eq!(
            code(&qtl(
                dir,
                &[
                    "train",
                    "--preset",
                    "spirals",
                    "--iterations",
                    "30",
                    "--seed",
                    "9"
                ]
            )),
            0
        );
    }
    for name in [
        "spirals-train.csv",
        "spirals-test.csv",
        "metrics.csv",
        "model.ckpt.json",
    ] {
        assert_eq!(read(a.path(), name), read(b.path(), name), "{name}");
    }
}

fn loss_column(csv: &str) -> Vec<Option<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().ok())
        .collect()
}

#[test]
fn qq_compare_summary_matches_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = qtl(
        p,
        &[
            "qq-compare",
            "--seeds",
            "2",
            "--iterations",
            "40",
            "--seed",
            "5",
        ],
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(p, "transfer.csv"), read(p, "transfer-seed5.csv"));
    assert_eq!(read(p, "scratch.csv"), read(p, "scratch-seed5.csv"));
    let summary: Value = serde_json::from_str(&read(p, "summary.json")).unwrap();
    let checkpoints: Vec<usize> = summary["checkpoints"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_u64().unwrap() as usize)
        .collect();
    assert_eq!(checkpoints, [0, 10, 20, 30, 40]);
    for run in summary["runs"].as_array().unwrap() {
        let seed = run["seed"].as_u64().unwrap();
        for arm in ["transfer", "scratch"] {
            let csv = read(p, &format!("{arm}-seed{seed}.csv"));
            assert_eq!(csv.lines().count(), 42);
            let losses = loss_column(&csv);
            let reported = run[format!("{arm}_loss")].as_array().unwrap();
            for (&it, value) in checkpoints.iter().zip(reported) {
                assert_eq!(
                    losses[it],
                    value.as_f64(),
                    "{arm} seed {seed} iteration {it}"
                );
            }
        }
    }
    assert_eq!(summary["median"]["iteration"], 10);
}

#[test]
fn qc_writes_a_reusable_extractor() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert_eq!(
        code(&qtl(p, &["train", "--preset", "qc", "--iterations", "20"])),
        0
    );
    let extractor = load_checkpoint(&p.join("extractor.ckpt.json")).unwrap();
    assert_eq!(extractor.model_kind.name(), "bare_qq");
    let train = from_csv(&read(p, "train-features.csv")).unwrap();
    assert_eq!(train.width(), 4);
    let ckpt = p.join("model.ckpt.json");
    let feats = p.join("test-features.csv");
    let out = qtl(
        p,
        &[
            "eval",
            "--checkpoint",
            ckpt.to_str().unwrap(),
            "--features",
            feats.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&out), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn feature_files_round_trip(
        width in 1usize..6,
        rows in prop::collection::vec((0usize..4, prop::collection::vec(any::<f64>().prop_filter("finite", |v| v.is_finite()), 5)), 1..20),
    ) {
        let features: Vec<f64> = rows.iter().flat_map(|(_, v)| v[..width].to_vec()).collect();
        let labels: Vec<usize> = rows.iter().map(|(l, _)| *l).collect();
        let n_classes = labels.iter().max().unwrap().max(&1) + 1;
        let ds = Dataset::new(width, features, labels, n_classes).unwrap();
        let back = from_csv(&to_csv(&ds)).unwrap();
        prop_assert_eq!(back, ds);
    }
}
