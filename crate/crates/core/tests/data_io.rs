//! Dataset generation, CSV ingestion and the on-disk format.

use std::fs;
use std::path::Path;

use ietnet::data::{
    build_nbody_dataset, export_csv, import_csv, load_dataset, save_dataset, NBodyDatasetConfig, SimParams, Split,
    NBODY_CHANNELS,
};
use ietnet::Error;

fn small() -> NBodyDatasetConfig {
    NBodyDatasetConfig {
        n_train: 6,
        n_val: 4,
        n_test: 4,
        seed: 3,
        sim: SimParams {
            steps: 60,
            ..SimParams::default()
        },
    }
}

#[test]
fn nbody_layout_and_ground_truth() {
    let d = build_nbody_dataset(&small()).unwrap();
    assert_eq!(d.x.shape(), &[14, 8, 60]);
    assert_eq!(d.channel_names, NBODY_CHANNELS);
    assert_eq!(d.class_counts(Split::Train), vec![3, 3]);
    assert_eq!(d.class_counts(Split::Test), vec![2, 2]);
    assert_eq!(d.ground_truth_channels[&1], (0..4).collect());
    assert!(!d.ground_truth_channels.contains_key(&0));
}

#[test]
fn same_seed_same_data_other_seed_other_data() {
    let a = build_nbody_dataset(&small()).unwrap();
    let b = build_nbody_dataset(&small()).unwrap();
    assert_eq!(a, b);
    let c = build_nbody_dataset(&NBodyDatasetConfig { seed: 4, ..small() }).unwrap();
    assert_ne!(a.x, c.x);
}

#[test]
fn training_split_is_standardized() {
    let d = build_nbody_dataset(&small()).unwrap();
    let train = d.split_data(Split::Train).unwrap();
    let (n, c, t) = (train.x.shape()[0], train.x.shape()[1], train.x.shape()[2]);
    for ch in 0..c {
        let vals: Vec<f64> = (0..n)
            .flat_map(|i| (0..t).map(move |s| (i, s)))
            .map(|(i, s)| train.x.get(&[i, ch, s]).unwrap() as f64)
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() <= 1e-6, "channel {ch} mean {mean}");
        assert!((var.sqrt() - 1.0).abs() <= 1e-6, "channel {ch} std {}", var.sqrt());
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let d = build_nbody_dataset(&small()).unwrap();
    let (csv, meta) = (dir.path().join("d.csv"), dir.path().join("d.json"));
    export_csv(&d, &csv, &meta).unwrap();
    let back = import_csv(&csv, &meta).unwrap();
    assert_eq!(back, d);
}

fn write_csv(dir: &Path, body: &str, rows: [usize; 2]) -> (std::path::PathBuf, std::path::PathBuf) {
    let csv = dir.join("in.csv");
    let meta = dir.join("in.json");
    fs::write(&csv, body).unwrap();
    let sidecar = serde_json::json!({
        "channel_names": ["a", "b"],
        "class_names": ["no", "yes"],
        "samples": [
            {"id": "s0", "label": "no", "split": "train", "rows": rows[0]},
            {"id": "s1", "label": "yes", "split": "train", "rows": rows[1]},
        ],
        "ground_truth_channels": {"yes": ["b"]},
    });
    fs::write(&meta, sidecar.to_string()).unwrap();
    (csv, meta)
}

#[test]
fn csv_columns_in_any_order() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, meta) = write_csv(dir.path(), "b,extra,a\n1,9,2\n3,9,4\n5,9,6\n7,9,8\n", [2, 2]);
    let d = import_csv(&csv, &meta).unwrap();
    assert_eq!(d.x.data(), &[2.0, 4.0, 1.0, 3.0, 6.0, 8.0, 5.0, 7.0]);
    assert_eq!(d.ground_truth_channels[&1], [1].into());
}

#[test]
fn wrong_length_sample_names_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, meta) = write_csv(dir.path(), "a,b\n1,2\n3,4\n5,6\n", [2, 1]);
    match import_csv(&csv, &meta) {
        Err(Error::Sample { index, .. }) => assert_eq!(index, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncated_csv_names_the_sample() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, meta) = write_csv(dir.path(), "a,b\n1,2\n3,4\n5,6\n", [2, 2]);
    match import_csv(&csv, &meta) {
        Err(Error::Sample { index, .. }) => assert_eq!(index, 1),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bad_value_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, meta) = write_csv(dir.path(), "a,b\n1,2\n3,x\n5,6\n7,8\n", [2, 2]);
    match import_csv(&csv, &meta) {
        Err(Error::Csv { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "b")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn save_load_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = build_nbody_dataset(&small()).unwrap();
    save_dataset(&d, dir.path()).unwrap();
    assert_eq!(load_dataset(dir.path()).unwrap(), d);
}

#[test]
fn missing_metadata_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = build_nbody_dataset(&small()).unwrap();
    save_dataset(&d, dir.path()).unwrap();
    fs::remove_file(dir.path().join("meta.json")).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Io { .. })));
}

#[test]
fn short_blob_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = build_nbody_dataset(&small()).unwrap();
    save_dataset(&d, dir.path()).unwrap();
    let blob = dir.path().join("X.bin");
    let bytes = fs::read(&blob).unwrap();
    fs::write(&blob, &bytes[..bytes.len() - 4]).unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::Format { .. })));
}

#[test]
fn empty_split_is_a_config_error() {
    let cfg = NBodyDatasetConfig { n_train: 0, ..small() };
    assert!(matches!(build_nbody_dataset(&cfg), Err(Error::Config(_))));
}
