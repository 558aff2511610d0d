//! Dataset directory: `meta.json` plus `X.bin`, the raw `(N, C, T)` values as
//! little-endian `f32` with no header.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MvtsDataset, Normalization, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const DATASET_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub version: u32,
    pub n_samples: usize,
    pub n_channels: usize,
    pub seq_len: usize,
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    pub sample_ids: Vec<String>,
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
    pub ground_truth_channels: BTreeMap<usize, BTreeSet<usize>>,
    pub normalization: Option<Normalization>,
}

pub fn save_dataset(d: &MvtsDataset, dir: &Path) -> Result<()> {
    d.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = DatasetMeta {
        version: DATASET_FORMAT_VERSION,
        n_samples: d.n_samples(),
        n_channels: d.n_channels(),
        seq_len: d.seq_len(),
        channel_names: d.channel_names.clone(),
        class_names: d.class_names.clone(),
        sample_ids: d.sample_ids.clone(),
        labels: d.y.clone(),
        splits: d.split.clone(),
        ground_truth_channels: d.ground_truth_channels.clone(),
        normalization: d.normalization.clone(),
    };
    let meta_path = dir.join("meta.json");
    fs::write(&meta_path, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&meta_path, e))?;
    let mut blob = Vec::with_capacity(4 * d.x.numel());
    for v in d.x.data() {
        blob.extend_from_slice(&v.to_le_bytes());
    }
    let x_path = dir.join("X.bin");
    fs::write(&x_path, blob).map_err(|e| Error::io(&x_path, e))
}

pub fn load_dataset(dir: &Path) -> Result<MvtsDataset> {
    let meta_path = dir.join("meta.json");
    let text = fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: DatasetMeta =
        serde_json::from_slice(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    if meta.version != DATASET_FORMAT_VERSION {
        return Err(Error::format(
            &meta_path,
            format!("format version {} (expected {DATASET_FORMAT_VERSION})", meta.version),
        ));
    }
    let x_path = dir.join("X.bin");
    let blob = fs::read(&x_path).map_err(|e| Error::io(&x_path, e))?;
    let per_sample = 4 * meta.n_channels * meta.seq_len;
    if per_sample == 0 || blob.len() % per_sample != 0 || blob.len() / per_sample != meta.n_samples {
        return Err(Error::format(
            &x_path,
            format!(
                "{} bytes do not hold {} samples of {} x {} f32 values",
                blob.len(),
                meta.n_samples,
                meta.n_channels,
                meta.seq_len
            ),
        ));
    }
    let data = blob
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let d = MvtsDataset {
        x: Tensor::new(vec![meta.n_samples, meta.n_channels, meta.seq_len], data)?,
        y: meta.labels,
        sample_ids: meta.sample_ids,
        split: meta.splits,
        channel_names: meta.channel_names,
        class_names: meta.class_names,
        ground_truth_channels: meta.ground_truth_channels,
        normalization: meta.normalization,
    };
    d.validate()?;
    Ok(d)
}
