//! The binary end to end on a tiny N-body problem.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{expect, ok, read_json, s, with, TINY_DATA, TINY_MODEL};
use ietnet::eval::EVAL_REPORT_SCHEMA;

struct Trained {
    _dir: tempfile::TempDir,
    data: PathBuf,
    run: PathBuf,
}

impl Trained {
    fn model(&self) -> PathBuf {
        self.run.join("model.ckpt")
    }

    fn root(&self) -> &Path {
        self.data.parent().unwrap()
    }
}

fn trained(epochs: &str) -> Trained {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let run = dir.path().join("run");
    ok(&with(&["gen-nbody", "--out", s(&data)], &[TINY_DATA]));
    ok(&with(
        &["train", "--data", s(&data), "--out", s(&run), "--epochs", epochs],
        &[TINY_MODEL],
    ));
    Trained { _dir: dir, data, run }
}

#[test]
fn same_seed_gives_byte_identical_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&with(&["gen-nbody", "--out", s(&a)], &[TINY_DATA]));
    ok(&with(&["gen-nbody", "--out", s(&b), "--threads", "2"], &[TINY_DATA]));
    let mut other = TINY_DATA.to_vec();
    other[1] = "6";
    ok(&with(&["gen-nbody", "--out", s(&c)], &[&other]));
    for f in ["meta.json", "X.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    assert_ne!(fs::read(a.join("X.bin")).unwrap(), fs::read(c.join("X.bin")).unwrap());
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    expect(&["gen-nbody", "--out", s(&out), "--train", "0"], 2);
    expect(&["gen-nbody", "--out", s(&out), "--no-such-flag"], 2);
    expect(&["gen-nbody", "--out", s(&out), "--train", "many"], 2);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[train]\nbatchsize = 3\n").unwrap();
    expect(&["--config", s(&bad), "gen-nbody", "--out", s(&out)], 2);
    expect(&["--threads", "0", "gen-nbody", "--out", s(&out)], 2);
    assert!(!out.join("X.bin").exists());
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nothing");
    expect(&["train", "--data", s(&missing), "--out", s(&dir.path().join("r"))], 3);
}

#[test]
fn config_file_sets_values_and_flags_override_them() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "[nbody]\nn_train = 4\nn_val = 4\nn_test = 4\nsteps = 16\nseed = 9\n").unwrap();
    let out = dir.path().join("d");
    ok(&["--config", s(&cfg), "gen-nbody", "--out", s(&out), "--test", "6"]);
    let meta = read_json(&out.join("meta.json"));
    assert_eq!(meta["n_samples"], 14);
    assert_eq!(meta["seq_len"], 16);
    let echoed = read_json(&out.join("config.json"));
    assert_eq!(echoed["nbody"]["n_test"], 6);
    assert_eq!(echoed["nbody"]["seed"], 9);
}

#[test]
fn training_writes_log_config_and_checkpoint_deterministically() {
    let a = trained("3");
    let b = trained("3");
    let log = fs::read_to_string(a.run.join("train_log.jsonl")).unwrap();
    assert_eq!(log.lines().count(), 3);
    assert_eq!(log, fs::read_to_string(b.run.join("train_log.jsonl")).unwrap());
    assert_eq!(fs::read(a.model()).unwrap(), fs::read(b.model()).unwrap());
    let cfg = read_json(&a.run.join("config.json"));
    assert_eq!(cfg["model"]["dilations"], serde_json::json!([1, 2, 4]));
}

fn eval(t: &Trained, name: &str, extra: &[&str]) -> serde_json::Value {
    let report = t.root().join(format!("{name}.json"));
    ok(&with(
        &["eval", "--model", s(&t.model()), "--data", s(&t.data), "--report", s(&report)],
        &[extra],
    ));
    read_json(&report)
}

#[test]
fn eval_reports_validate_and_thresholds_behave() {
    let t = trained("2");
    let schema: serde_json::Value = serde_json::from_str(EVAL_REPORT_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();

    let auto = eval(&t, "auto", &[]);
    let errors: Vec<String> = validator.iter_errors(&auto).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{errors:?}");
    for f in ["auto.roc.csv", "auto.heatmap.csv", "auto.config.json"] {
        assert!(t.root().join(f).exists(), "{f}");
    }
    assert_eq!(auto["threshold"]["mode"], "auto");

    // the validation-optimal value, given explicitly, reproduces the report
    let value = auto["threshold"]["value"].as_f64().unwrap();
    let fixed = eval(&t, "fixed", &["--threshold", &value.to_string()]);
    assert!(validator.is_valid(&fixed));
    assert_eq!(fixed["confusion_matrix"], auto["confusion_matrix"]);
    assert_eq!(fixed["heatmap"], auto["heatmap"]);
    assert_eq!(fixed["ap"], auto["ap"]);

    let all_pos = eval(&t, "zero", &["--threshold", "0"]);
    let c = &all_pos["confusion_matrix"]["counts"];
    assert_eq!((c[0][0].as_u64(), c[1][0].as_u64()), (Some(0), Some(0)));
    let all_neg = eval(&t, "over", &["--threshold", "1.5"]);
    let c = &all_neg["confusion_matrix"]["counts"];
    assert_eq!((c[0][1].as_u64(), c[1][1].as_u64()), (Some(0), Some(0)));
    assert_eq!(all_neg["accuracy"], 0.5);

    let val = eval(&t, "val", &["--split", "val", "--ap-normalization", "paper", "--ks", "1,4"]);
    assert!(validator.is_valid(&val));
    assert_eq!(val["split"], "val");
    if !val["ap"].is_null() {
        assert_eq!(val["ap"]["normalization"], "paper");
        assert_eq!(val["ap"]["per_k"].as_array().unwrap().len(), 2);
    }
}

#[test]
fn explain_gates_sum_to_one_per_class() {
    let t = trained("1");
    let out = t.root().join("explain");
    ok(&["explain", "--model", s(&t.model()), "--data", s(&t.data), "--out", s(&out)]);
    let files: Vec<_> = fs::read_dir(out.join("instances")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(files.len(), 12);
    for f in files {
        let mut r = csv::Reader::from_path(&f).unwrap();
        let mut sums = [0.0; 2];
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec.unwrap();
            for (k, sum) in sums.iter_mut().enumerate() {
                *sum += rec[1 + k].parse::<f64>().unwrap();
            }
            rows += 1;
        }
        assert_eq!(rows, 8);
        for sum in sums {
            assert!((sum - 1.0).abs() <= 1e-5, "{}: {sum}", f.display());
        }
    }
    assert!(out.join("heatmap.csv").exists());

    let one = t.root().join("one");
    ok(&["explain", "--model", s(&t.model()), "--data", s(&t.data), "--out", s(&one), "--instance", "nbody-0030"]);
    assert_eq!(fs::read_dir(one.join("instances")).unwrap().count(), 1);
    expect(
        &["explain", "--model", s(&t.model()), "--data", s(&t.data), "--out", s(&one), "--instance", "nope"],
        2,
    );
}

#[test]
fn sweep_rows_are_consistent() {
    let t = trained("1");
    let out = t.root().join("sweep.csv");
    ok(&["sweep", "--model", s(&t.model()), "--data", s(&t.data), "--out", s(&out), "--points", "11"]);
    let mut r = csv::Reader::from_path(&out).unwrap();
    let rows: Vec<csv::StringRecord> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 11);
    let count = |rec: &csv::StringRecord, i: usize| rec[i].parse::<usize>().unwrap();
    for rec in &rows {
        assert_eq!((1..=4).map(|i| count(rec, i)).sum::<usize>(), 12);
    }
    // threshold 0 predicts everything positive
    assert_eq!((count(&rows[0], 1), count(&rows[0], 3)), (0, 0));
}

#[test]
fn csv_import_matches_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&with(&["gen-nbody", "--out", s(&data)], &[TINY_DATA]));
    let d = ietnet::data::load_dataset(&data).unwrap();
    let (csv, meta) = (dir.path().join("d.csv"), dir.path().join("d.json"));
    ietnet::data::export_csv(&d, &csv, &meta).unwrap();
    let back = dir.path().join("back");
    ok(&["import-csv", "--csv", s(&csv), "--meta", s(&meta), "--out", s(&back)]);
    assert_eq!(ietnet::data::load_dataset(&back).unwrap(), d);
}

#[test]
fn ablation_drops_channels_and_reports_both_runs() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    ok(&with(&["gen-nbody", "--out", s(&data)], &[TINY_DATA]));
    let out = dir.path().join("abl");
    ok(&with(
        &["ablate", "--data", s(&data), "--drop", "x1,y1", "--out", s(&out), "--epochs", "1"],
        &[TINY_MODEL],
    ));
    let r = read_json(&out.join("ablation.json"));
    assert_eq!(r["remaining_channels"].as_array().unwrap().len(), 6);
    assert!(!r["baseline"].is_null());
    assert_eq!(r["ground_truth_fully_dropped"], serde_json::json!([]));
    assert!(out.join("ablated/model.ckpt").exists());
    assert!(out.join("baseline/eval.json").exists());
    expect(&["ablate", "--data", s(&data), "--drop", "zz", "--out", s(&out)], 2);
}

#[test]
fn shipped_presets_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (name, top) in [("reference.toml", 512), ("reduced.toml", 128)] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("d");
        let args = ["--train", "2", "--val", "2", "--test", "2", "--steps", "8"];
        ok(&with(&["--config", s(&root.join(name)), "gen-nbody", "--out", s(&out)], &[&args]));
        let echoed = read_json(&out.join("config.json"));
        assert_eq!(echoed["model"]["dilations"].as_array().unwrap().last().unwrap(), top, "{name}");
    }
}
