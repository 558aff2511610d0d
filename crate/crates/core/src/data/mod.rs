//! Labeled multivariate time series: the in-memory dataset, the synthetic
//! N-body benchmark, CSV ingestion, and on-disk persistence.

mod csv_io;
mod nbody;
mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use csv_io::{export_csv, import_csv, CsvMeta, CsvSample};
pub use nbody::{
    build_nbody_dataset, derive_seed, simulate_from, simulate_nbody, NBodyConfig, NBodyDatasetConfig, SimParams,
    TrajectoryRecord, FOUR_BODY_MASSES, NBODY_CHANNELS, TWO_BODY_MASSES,
};
pub use store::{load_dataset, save_dataset, DatasetMeta, DATASET_FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::Dataset(format!("unknown split {s:?} (expected train, val or test)"))),
        }
    }
}

/// Per-channel z-score statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalization {
    /// Population mean and standard deviation of each channel over the given
    /// samples and all time steps. Constant channels get `std = 1`.
    pub fn fit(x: &Tensor<f32>, samples: &[usize]) -> Result<Self> {
        let (c, t) = (x.shape()[1], x.shape()[2]);
        if samples.is_empty() {
            return Err(Error::Dataset("cannot fit normalization on zero samples".into()));
        }
        let count = (samples.len() * t) as f64;
        let mut mean = vec![0.0; c];
        let mut std = vec![0.0; c];
        for ch in 0..c {
            let rows = || samples.iter().map(move |&i| &x.data()[(i * c + ch) * t..(i * c + ch + 1) * t]);
            let mu = rows().flatten().map(|&v| v as f64).sum::<f64>() / count;
            let var = rows()
                .flatten()
                .map(|&v| (v as f64 - mu).powi(2))
                .sum::<f64>()
                / count;
            mean[ch] = mu;
            std[ch] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        }
        Ok(Normalization { mean, std })
    }

    pub fn apply(&self, x: &Tensor<f32>) -> Result<Tensor<f32>> {
        let (c, t) = (x.shape()[1], x.shape()[2]);
        if self.mean.len() != c || self.std.len() != c {
            return Err(Error::Dimension {
                op: "Normalization::apply",
                lhs: x.shape().to_vec(),
                rhs: vec![self.mean.len()],
            });
        }
        let mut out = x.clone();
        for (row, vals) in out.data_mut().chunks_exact_mut(t).enumerate() {
            let ch = row % c;
            let (mu, sd) = (self.mean[ch], self.std[ch]);
            for v in vals {
                *v = ((*v as f64 - mu) / sd) as f32;
            }
        }
        Ok(out)
    }

    fn select(&self, keep: &[usize]) -> Self {
        Normalization {
            mean: keep.iter().map(|&i| self.mean[i]).collect(),
            std: keep.iter().map(|&i| self.std[i]).collect(),
        }
    }
}

/// `N` samples of `C` synchronized channels with `T` steps each.
///
/// `x` holds raw values; [`MvtsDataset::split_data`] applies the stored
/// normalization, which is fitted on the training split only.
#[derive(Debug, Clone, PartialEq)]
pub struct MvtsDataset {
    /// `(N, C, T)`
    pub x: Tensor<f32>,
    pub y: Vec<usize>,
    pub sample_ids: Vec<String>,
    pub split: Vec<Split>,
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Class index -> channels known to carry that class's signal.
    pub ground_truth_channels: BTreeMap<usize, BTreeSet<usize>>,
    pub normalization: Option<Normalization>,
}

/// Normalized inputs and labels of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitData {
    pub x: Tensor<f32>,
    pub y: Vec<usize>,
    /// Positions of these samples in the parent dataset.
    pub indices: Vec<usize>,
}

impl SplitData {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Copies the given rows (positions within this split) into a batch.
    pub fn batch(&self, rows: &[usize]) -> Result<(Tensor<f32>, Vec<usize>)> {
        let per = self.x.shape()[1] * self.x.shape()[2];
        let mut data = Vec::with_capacity(rows.len() * per);
        for &r in rows {
            data.extend_from_slice(&self.x.data()[r * per..(r + 1) * per]);
        }
        let mut shape = self.x.shape().to_vec();
        shape[0] = rows.len();
        Ok((Tensor::new(shape, data)?, rows.iter().map(|&r| self.y[r]).collect()))
    }
}

impl MvtsDataset {
    /// Checks cross-field consistency.
    pub fn validate(&self) -> Result<()> {
        let shape = self.x.shape();
        if shape.len() != 3 {
            return Err(Error::Dataset(format!("X must be (N, C, T), found {shape:?}")));
        }
        let (n, c) = (shape[0], shape[1]);
        if self.y.len() != n || self.split.len() != n || self.sample_ids.len() != n {
            return Err(Error::Dataset(format!(
                "{n} samples but {} labels, {} split tags, {} ids",
                self.y.len(),
                self.split.len(),
                self.sample_ids.len()
            )));
        }
        if self.channel_names.len() != c {
            return Err(Error::Dataset(format!(
                "{c} channels but {} channel names",
                self.channel_names.len()
            )));
        }
        let k = self.class_names.len();
        if let Some((i, &label)) = self.y.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(Error::Sample {
                index: i,
                reason: format!("label {label} out of range for {k} classes"),
            });
        }
        for (&class, set) in &self.ground_truth_channels {
            if class >= k || set.iter().any(|&ch| ch >= c) {
                return Err(Error::Dataset(format!(
                    "ground truth for class {class} references unknown class or channel"
                )));
            }
        }
        if let Some(norm) = &self.normalization {
            if norm.mean.len() != c || norm.std.len() != c {
                return Err(Error::Dataset("normalization length differs from channel count".into()));
            }
        }
        Ok(())
    }

    pub fn n_samples(&self) -> usize {
        self.x.shape()[0]
    }

    pub fn n_channels(&self) -> usize {
        self.x.shape()[1]
    }

    pub fn seq_len(&self) -> usize {
        self.x.shape()[2]
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.n_samples()).filter(|&i| self.split[i] == split).collect()
    }

    pub fn split_counts(&self) -> BTreeMap<Split, usize> {
        let mut out: BTreeMap<Split, usize> = Split::ALL.iter().map(|&s| (s, 0)).collect();
        for s in &self.split {
            *out.entry(*s).or_default() += 1;
        }
        out
    }

    /// Samples per class within `split`.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for i in self.indices(split) {
            counts[self.y[i]] += 1;
        }
        counts
    }

    /// Recomputes normalization statistics from the training split.
    pub fn fit_normalization(&mut self) -> Result<()> {
        let train = self.indices(Split::Train);
        self.normalization = if train.is_empty() {
            log::warn!("no training samples; inputs will not be normalized");
            None
        } else {
            Some(Normalization::fit(&self.x, &train)?)
        };
        Ok(())
    }

    /// Whole `X` with normalization applied (raw if none is stored).
    pub fn normalized_x(&self) -> Result<Tensor<f32>> {
        match &self.normalization {
            Some(n) => n.apply(&self.x),
            None => Ok(self.x.clone()),
        }
    }

    /// Normalized inputs and labels for one split.
    pub fn split_data(&self, split: Split) -> Result<SplitData> {
        let indices = self.indices(split);
        if indices.is_empty() {
            return Err(Error::Dataset(format!("split {split} is empty")));
        }
        let per = self.n_channels() * self.seq_len();
        let mut data = Vec::with_capacity(indices.len() * per);
        for &i in &indices {
            data.extend_from_slice(&self.x.data()[i * per..(i + 1) * per]);
        }
        let raw = Tensor::new(vec![indices.len(), self.n_channels(), self.seq_len()], data)?;
        let x = match &self.normalization {
            Some(n) => n.apply(&raw)?,
            None => raw,
        };
        Ok(SplitData {
            y: indices.iter().map(|&i| self.y[i]).collect(),
            x,
            indices,
        })
    }

    /// Index of a channel by name.
    pub fn channel_index(&self, name: &str) -> Result<usize> {
        self.channel_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::UnknownChannel {
                name: name.to_string(),
                valid: self.channel_names.clone(),
            })
    }
}

/// Removes the named channels everywhere, preserving the order of the rest
/// and re-indexing ground-truth sets.
pub fn drop_channels<S: AsRef<str>>(d: &MvtsDataset, names: &[S]) -> Result<MvtsDataset> {
    let mut drop = BTreeSet::new();
    for n in names {
        drop.insert(d.channel_index(n.as_ref())?);
    }
    let keep: Vec<usize> = (0..d.n_channels()).filter(|c| !drop.contains(c)).collect();
    if keep.is_empty() {
        return Err(Error::Dataset("cannot drop every channel".into()));
    }
    let (n, c, t) = (d.n_samples(), d.n_channels(), d.seq_len());
    let mut data = Vec::with_capacity(n * keep.len() * t);
    for i in 0..n {
        for &ch in &keep {
            data.extend_from_slice(&d.x.data()[(i * c + ch) * t..(i * c + ch + 1) * t]);
        }
    }
    let new_index: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
    let ground_truth_channels = d
        .ground_truth_channels
        .iter()
        .map(|(&class, set)| {
            let remapped = set.iter().filter_map(|ch| new_index.get(ch).copied()).collect();
            (class, remapped)
        })
        .collect();
    Ok(MvtsDataset {
        x: Tensor::new(vec![n, keep.len(), t], data)?,
        y: d.y.clone(),
        sample_ids: d.sample_ids.clone(),
        split: d.split.clone(),
        channel_names: keep.iter().map(|&i| d.channel_names[i].clone()).collect(),
        class_names: d.class_names.clone(),
        ground_truth_channels,
        normalization: d.normalization.as_ref().map(|nm| nm.select(&keep)),
    })
}
