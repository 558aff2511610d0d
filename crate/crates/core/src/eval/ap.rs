use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ChannelAttribution;
use crate::error::{Error, Result};

/// Denominator of AP@k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ApNormalization {
    /// Divide by the number of ground-truth channels. AP@1 is then at most
    /// `1 / |GT|`.
    Paper,
    /// Divide by `min(k, |GT|)`, so perfect retrieval scores 1 at every k.
    #[default]
    Clipped,
}

/// Average precision of the first `k` entries of `ranked` against
/// `ground_truth`: the precision at every hit position, summed and divided
/// according to `normalization`. Rankings shorter than `k` are used whole.
pub fn ap_at_k(
    ranked: &[usize],
    ground_truth: &BTreeSet<usize>,
    k: usize,
    normalization: ApNormalization,
) -> Result<f64> {
    if ground_truth.is_empty() {
        return Err(Error::Metric("ground truth set is empty".into()));
    }
    if k == 0 {
        return Err(Error::Metric("k must be at least 1".into()));
    }
    let mut seen = BTreeSet::new();
    if let Some(d) = ranked.iter().find(|c| !seen.insert(**c)) {
        return Err(Error::Metric(format!("channel {d} ranked twice")));
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, ch) in ranked.iter().take(k).enumerate() {
        if ground_truth.contains(ch) {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    let denom = match normalization {
        ApNormalization::Paper => ground_truth.len(),
        ApNormalization::Clipped => k.min(ground_truth.len()),
    };
    Ok(sum / denom as f64)
}

/// Channel indices ordered by decreasing weight; ties keep the lower index
/// first.
pub fn rank_channels(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    order
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApAtK {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApReport {
    pub normalization: ApNormalization,
    /// Samples whose predicted class has ground-truth channels.
    pub n_samples: usize,
    /// Evaluated samples per predicted class.
    pub per_class_samples: BTreeMap<usize, usize>,
    pub per_k: Vec<ApAtK>,
}

impl ApReport {
    pub fn at(&self, k: usize) -> Option<&ApAtK> {
        self.per_k.iter().find(|a| a.k == k)
    }
}

/// Mean and population standard deviation of AP@k over every attribution
/// whose predicted class has ground truth (optionally only `class`). Each
/// sample's channels are ranked by its gate column for the predicted class.
/// With `ks` empty, k runs over `1..=max |GT|`.
pub fn map_at_k_report(
    attrs: &[ChannelAttribution],
    ground_truth: &BTreeMap<usize, BTreeSet<usize>>,
    ks: &[usize],
    normalization: ApNormalization,
    class: Option<usize>,
) -> Result<ApReport> {
    let ks: Vec<usize> = if ks.is_empty() {
        let max = ground_truth.values().map(BTreeSet::len).max().unwrap_or(0);
        (1..=max).collect()
    } else {
        ks.to_vec()
    };
    let mut values = vec![Vec::new(); ks.len()];
    let mut per_class_samples = BTreeMap::new();
    for a in attrs {
        if class.is_some_and(|c| c != a.predicted) {
            continue;
        }
        let Some(gt) = ground_truth.get(&a.predicted).filter(|g| !g.is_empty()) else {
            continue;
        };
        let ranked = rank_channels(&a.class_column(a.predicted));
        for (slot, &k) in values.iter_mut().zip(&ks) {
            slot.push(ap_at_k(&ranked, gt, k, normalization)?);
        }
        *per_class_samples.entry(a.predicted).or_insert(0) += 1;
    }
    let n = values.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(Error::Metric(
            "no samples predicted as a class with ground-truth channels".into(),
        ));
    }
    let per_k = ks
        .iter()
        .zip(&values)
        .map(|(&k, v)| {
            let mean = v.iter().sum::<f64>() / n as f64;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
            ApAtK {
                k,
                mean,
                std: var.sqrt(),
            }
        })
        .collect();
    Ok(ApReport {
        normalization,
        n_samples: n,
        per_class_samples,
        per_k,
    })
}
