use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Predict positive iff `score >= threshold`. The first point uses `+inf`
    /// (serialized as `null`).
    #[serde(with = "infinite_as_null")]
    pub threshold: f64,
    pub tpr: f64,
    pub fpr: f64,
}

impl RocPoint {
    /// Youden's J statistic.
    pub fn youden_j(&self) -> f64 {
        self.tpr - self.fpr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Ordered by decreasing threshold, from `(0, 0)` to `(1, 1)`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

fn check_binary(scores: &[f64], labels: &[usize]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::Metric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(l) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::Metric(format!("label {l} is not binary")));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::Metric(format!("non-finite score {s}")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    Ok((pos, labels.len() - pos))
}

/// ROC curve over the unique scores with trapezoidal AUC. Equal scores form a
/// single threshold step, so ties contribute a diagonal segment.
pub fn roc_auc(scores: &[f64], labels: &[usize]) -> Result<RocCurve> {
    let (pos, neg) = check_binary(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(Error::Metric("AUC needs at least one sample of each class".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        tpr: 0.0,
        fpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    // trapezoids in count units (twice the area times pos * neg), so the
    // area is exact and rounded once
    let mut area2: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += ((fp - fp0) * (tp + tp0)) as u64;
        points.push(RocPoint {
            threshold: s,
            tpr: tp as f64 / pos as f64,
            fpr: fp as f64 / neg as f64,
        });
    }
    let auc = area2 as f64 / (2 * pos * neg) as f64;
    Ok(RocCurve { points, auc })
}

const J_TIE_EPS: f64 = 1e-12;

/// Threshold maximizing Youden's J over the finite curve points; ties go to
/// the higher threshold.
pub fn optimal_threshold(roc: &RocCurve) -> Result<f64> {
    let mut best: Option<&RocPoint> = None;
    // points are in decreasing-threshold order, so requiring a strict gain
    // keeps the higher threshold on ties; the slack absorbs rounding in
    // rates like 2/3 vs 1 - 1/3
    for p in roc.points.iter().filter(|p| p.threshold.is_finite()) {
        if best.is_none_or(|b| p.youden_j() > b.youden_j() + J_TIE_EPS) {
            best = Some(p);
        }
    }
    best.map(|p| p.threshold)
        .ok_or_else(|| Error::Metric("ROC curve has no finite thresholds".into()))
}

/// `K x K` counts, rows = ground truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn from_predictions(labels: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if labels.len() != predicted.len() {
            return Err(Error::Metric("labels and predictions differ in length".into()));
        }
        let mut counts = vec![vec![0; n_classes]; n_classes];
        for (&l, &p) in labels.iter().zip(predicted) {
            if l >= n_classes || p >= n_classes {
                return Err(Error::LabelOutOfRange {
                    label: l.max(p),
                    classes: n_classes,
                });
            }
            counts[l][p] += 1;
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total().max(1) as f64
    }

    /// `(TPR, FPR)` treating class 1 as positive.
    pub fn rates(&self) -> (f64, f64) {
        let c = &self.counts;
        let tpr = c[1][1] as f64 / (c[1][0] + c[1][1]).max(1) as f64;
        let fpr = c[0][1] as f64 / (c[0][0] + c[0][1]).max(1) as f64;
        (tpr, fpr)
    }
}

/// Binary confusion matrix predicting class 1 iff `score >= threshold`.
pub fn confusion_at(scores: &[f64], labels: &[usize], threshold: f64) -> Result<ConfusionMatrix> {
    check_binary(scores, labels)?;
    let predicted: Vec<usize> = scores.iter().map(|&s| usize::from(s >= threshold)).collect();
    ConfusionMatrix::from_predictions(labels, &predicted, 2)
}
