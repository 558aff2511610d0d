//! Classification metrics, channel-localization metrics, and gate
//! aggregation.

mod ap;
mod roc;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ap::{ap_at_k, map_at_k_report, rank_channels, ApAtK, ApNormalization, ApReport};
pub use roc::{confusion_at, optimal_threshold, roc_auc, ConfusionMatrix, RocCurve, RocPoint};

use crate::data::{MvtsDataset, Split};
use crate::error::{Error, Result};
use crate::model::{IetNet, Prediction};

/// JSON schema of [`EvalReport`], also shipped as `schema/eval_report.schema.json`.
pub const EVAL_REPORT_SCHEMA: &str = include_str!("../../schema/eval_report.schema.json");

/// One instance's channel gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelAttribution {
    pub sample_id: String,
    pub label: usize,
    pub predicted: usize,
    pub n_classes: usize,
    /// `(C, K)` row-major: `gate[c * K + k]`.
    pub gate: Vec<f64>,
}

impl ChannelAttribution {
    pub fn n_channels(&self) -> usize {
        self.gate.len() / self.n_classes
    }

    /// Distribution over channels for class `k`.
    pub fn class_column(&self, k: usize) -> Vec<f64> {
        self.gate.iter().skip(k).step_by(self.n_classes).copied().collect()
    }
}

/// Mean gate column of the samples predicted as `class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapRow {
    pub class: usize,
    pub n_samples: usize,
    pub weights: Vec<f64>,
}

/// For each predicted class, the mean over its samples of `G[:, class]`.
/// Classes nobody was predicted as are omitted with a warning.
pub fn aggregate_gate(attrs: &[ChannelAttribution], n_classes: usize) -> Vec<HeatmapRow> {
    let mut rows = Vec::new();
    for class in 0..n_classes {
        let group: Vec<&ChannelAttribution> = attrs.iter().filter(|a| a.predicted == class).collect();
        let Some(first) = group.first() else {
            log::warn!("no samples predicted as class {class}; heatmap row omitted");
            continue;
        };
        let mut weights = vec![0.0; first.n_channels()];
        for a in &group {
            for (w, v) in weights.iter_mut().zip(a.class_column(class)) {
                *w += v;
            }
        }
        weights.iter_mut().for_each(|w| *w /= group.len() as f64);
        rows.push(HeatmapRow {
            class,
            n_samples: group.len(),
            weights,
        });
    }
    rows
}

/// How the binary operating point is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum ThresholdMode {
    /// Youden-optimal threshold on the validation split.
    #[default]
    Auto,
    Fixed(f64),
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(ThresholdMode::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(ThresholdMode::Fixed)
            .ok_or_else(|| Error::Config(format!("threshold must be `auto` or a number, got {s:?}")))
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThresholdMode::Auto => f.write_str("auto"),
            ThresholdMode::Fixed(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub split: Split,
    pub threshold: ThresholdMode,
    /// Empty means `1..=max |GT|`.
    pub ks: Vec<usize>,
    pub ap_normalization: ApNormalization,
    /// Samples per inference pass.
    pub chunk: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            split: Split::Test,
            threshold: ThresholdMode::Auto,
            ks: Vec::new(),
            ap_normalization: ApNormalization::Clipped,
            chunk: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub mode: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub split: Split,
    pub n_samples: usize,
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    /// Binary tasks only.
    pub threshold: Option<ThresholdReport>,
    pub auc: Option<f64>,
    pub val_auc: Option<f64>,
    pub accuracy: f64,
    pub confusion_matrix: ConfusionMatrix,
    pub ap: Option<ApReport>,
    /// Same sample set under the other normalization, for comparison.
    pub ap_alternate: Option<ApReport>,
    pub heatmap: Vec<HeatmapRow>,
    pub warnings: Vec<String>,
}

/// Everything `evaluate` computes; the report plus the raw material for CSVs.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub report: EvalReport,
    pub roc: Option<RocCurve>,
    pub attributions: Vec<ChannelAttribution>,
}

fn positive_scores(p: &Prediction<f32>) -> Vec<f64> {
    p.probs.data().chunks_exact(2).map(|r| r[1] as f64).collect()
}

/// Per-instance attributions with explicit predicted classes.
pub fn attributions(
    d: &MvtsDataset,
    indices: &[usize],
    pred: &Prediction<f32>,
    predicted: &[usize],
) -> Vec<ChannelAttribution> {
    let (c, k) = (pred.gate.shape()[1], pred.gate.shape()[2]);
    indices
        .iter()
        .enumerate()
        .map(|(row, &i)| ChannelAttribution {
            sample_id: d.sample_ids[i].clone(),
            label: d.y[i],
            predicted: predicted[row],
            n_classes: k,
            gate: pred.gate.data()[row * c * k..(row + 1) * c * k]
                .iter()
                .map(|&v| v as f64)
                .collect(),
        })
        .collect()
}

/// Runs `model` over one split and computes every report section.
pub fn evaluate(model: &IetNet<f32>, d: &MvtsDataset, opts: &EvalOptions) -> Result<Evaluation> {
    let split = d.split_data(opts.split)?;
    let pred = model.predict(&split.x, opts.chunk)?;
    let k = d.n_classes();
    let mut warnings = Vec::new();

    let (threshold, auc, val_auc, roc, predicted) = if k == 2 {
        let scores = positive_scores(&pred);
        let roc = roc_auc(&scores, &split.y).ok();
        if roc.is_none() {
            warnings.push(format!("split {} has a single class; AUC omitted", opts.split));
        }
        let (value, mode, val_auc) = match opts.threshold {
            ThresholdMode::Fixed(v) => (v, "fixed", None),
            ThresholdMode::Auto => {
                let val = d.split_data(Split::Val)?;
                let val_pred = model.predict(&val.x, opts.chunk)?;
                let val_roc = roc_auc(&positive_scores(&val_pred), &val.y)?;
                (optimal_threshold(&val_roc)?, "auto", Some(val_roc.auc))
            }
        };
        let predicted: Vec<usize> = scores.iter().map(|&s| usize::from(s >= value)).collect();
        let t = ThresholdReport {
            mode: mode.into(),
            value,
        };
        (Some(t), roc.as_ref().map(|r| r.auc), val_auc, roc, predicted)
    } else {
        (None, None, None, None, pred.predicted_classes())
    };

    let confusion_matrix = ConfusionMatrix::from_predictions(&split.y, &predicted, k)?;
    let attrs = attributions(d, &split.indices, &pred, &predicted);
    let alternate = match opts.ap_normalization {
        ApNormalization::Clipped => ApNormalization::Paper,
        ApNormalization::Paper => ApNormalization::Clipped,
    };
    let (ap, ap_alternate) = if d.ground_truth_channels.is_empty() {
        warnings.push("dataset has no ground-truth channels; AP section disabled".into());
        (None, None)
    } else {
        match map_at_k_report(&attrs, &d.ground_truth_channels, &opts.ks, opts.ap_normalization, None) {
            Ok(r) => (
                Some(r),
                map_at_k_report(&attrs, &d.ground_truth_channels, &opts.ks, alternate, None).ok(),
            ),
            Err(e) => {
                warnings.push(format!("AP section disabled: {e}"));
                (None, None)
            }
        }
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    let report = EvalReport {
        split: opts.split,
        n_samples: split.len(),
        channel_names: d.channel_names.clone(),
        class_names: d.class_names.clone(),
        threshold,
        auc,
        val_auc,
        accuracy: confusion_matrix.accuracy(),
        confusion_matrix,
        ap,
        ap_alternate,
        heatmap: aggregate_gate(&attrs, k),
        warnings,
    };
    Ok(Evaluation {
        report,
        roc,
        attributions: attrs,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

/// `threshold,tpr,fpr` rows; the leading `+inf` threshold is written as `inf`.
pub fn write_roc_csv(roc: &RocCurve, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "threshold,tpr,fpr").map_err(io)?;
    for p in &roc.points {
        writeln!(w, "{},{},{}", p.threshold, p.tpr, p.fpr).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// `class,channel,weight,n_samples` rows.
pub fn write_heatmap_csv(rows: &[HeatmapRow], channels: &[String], classes: &[String], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    writeln!(w, "class,channel,weight,n_samples").map_err(io)?;
    for r in rows {
        for (ch, v) in channels.iter().zip(&r.weights) {
            writeln!(w, "{},{},{},{}", classes[r.class], ch, v, r.n_samples).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// One row per channel: name, gate per class, predicted class.
pub fn write_instance_csv(a: &ChannelAttribution, channels: &[String], classes: &[String], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let io = |e| Error::io(path, e);
    write!(w, "channel").map_err(io)?;
    for c in classes {
        write!(w, ",gate_{c}").map_err(io)?;
    }
    writeln!(w, ",predicted,label").map_err(io)?;
    for (ch, name) in channels.iter().enumerate() {
        write!(w, "{name}").map_err(io)?;
        for k in 0..a.n_classes {
            write!(w, ",{}", a.gate[ch * a.n_classes + k]).map_err(io)?;
        }
        writeln!(w, ",{},{}", classes[a.predicted], classes[a.label]).map_err(io)?;
    }
    w.flush().map_err(io)
}
