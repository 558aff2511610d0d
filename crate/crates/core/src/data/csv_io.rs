//! CSV ingestion with a JSON sidecar.
//!
//! The CSV has a header naming channels; each following row is one time step.
//! Samples are stacked as consecutive row blocks in the order the sidecar
//! lists them:
//!
//! ```json
//! {
//!   "channel_names": ["bx", "by"],
//!   "class_names": ["quiet", "event"],
//!   "samples": [{"id": "s0", "label": "event", "split": "train", "rows": 1440}],
//!   "ground_truth_channels": {"event": ["bx"]}
//! }
//! ```
//!
//! CSV columns may appear in any order and extra columns are ignored; the
//! dataset uses the sidecar's channel order.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{MvtsDataset, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSample {
    pub id: String,
    pub label: String,
    pub split: Split,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvMeta {
    pub channel_names: Vec<String>,
    pub class_names: Vec<String>,
    pub samples: Vec<CsvSample>,
    #[serde(default)]
    pub ground_truth_channels: BTreeMap<String, Vec<String>>,
}

fn read_meta(path: &Path) -> Result<CsvMeta> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::format(path, format!("bad sidecar: {e}")))
}

/// Reads a CSV plus sidecar into a dataset and fits normalization on the
/// training split.
pub fn import_csv(csv_path: &Path, meta_path: &Path) -> Result<MvtsDataset> {
    let meta = read_meta(meta_path)?;
    let c = meta.channel_names.len();
    if c == 0 || meta.class_names.is_empty() || meta.samples.is_empty() {
        return Err(Error::format(
            meta_path,
            "sidecar needs channels, classes and samples",
        ));
    }
    let t = meta.samples[0].rows;
    let class_index: HashMap<&str, usize> = meta
        .class_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut y = Vec::with_capacity(meta.samples.len());
    for (i, s) in meta.samples.iter().enumerate() {
        if s.rows != t || t == 0 {
            return Err(Error::Sample {
                index: i,
                reason: format!("sample {:?} has {} rows, expected {t}", s.id, s.rows),
            });
        }
        y.push(*class_index.get(s.label.as_str()).ok_or_else(|| Error::Sample {
            index: i,
            reason: format!("unknown label {:?}; classes are {:?}", s.label, meta.class_names),
        })?);
    }

    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(csv_path)
        .map_err(|e| Error::format(csv_path, e.to_string()))?;
    let header = rdr
        .headers()
        .map_err(|e| Error::format(csv_path, e.to_string()))?
        .clone();
    let mut columns = Vec::with_capacity(c);
    for name in &meta.channel_names {
        let col = header.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Csv {
            row: 0,
            column: name.clone(),
            reason: "channel missing from header".into(),
        })?;
        columns.push(col);
    }

    let n = meta.samples.len();
    let mut x = vec![0f32; n * c * t];
    let mut rows = 0usize;
    for (r, record) in rdr.records().enumerate() {
        // header is row 0 in error messages
        let row = r + 1;
        let record = record.map_err(|e| Error::Csv {
            row,
            column: String::new(),
            reason: e.to_string(),
        })?;
        if rows >= n * t {
            return Err(Error::Csv {
                row,
                column: String::new(),
                reason: format!("more rows than the {} declared by the sidecar", n * t),
            });
        }
        let (i, step) = (rows / t, rows % t);
        for (ch, &col) in columns.iter().enumerate() {
            let field = record.get(col).ok_or_else(|| Error::Csv {
                row,
                column: meta.channel_names[ch].clone(),
                reason: "missing field".into(),
            })?;
            let v: f32 = field.trim().parse().map_err(|_| Error::Csv {
                row,
                column: meta.channel_names[ch].clone(),
                reason: format!("cannot parse {field:?} as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Csv {
                    row,
                    column: meta.channel_names[ch].clone(),
                    reason: "non-finite value".into(),
                });
            }
            x[(i * c + ch) * t + step] = v;
        }
        rows += 1;
    }
    if rows != n * t {
        return Err(Error::Sample {
            index: rows / t,
            reason: format!("CSV ends after {rows} data rows; sidecar declares {}", n * t),
        });
    }

    let channel_index: HashMap<&str, usize> = meta
        .channel_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut ground_truth_channels = BTreeMap::new();
    for (class, chans) in &meta.ground_truth_channels {
        let k = *class_index
            .get(class.as_str())
            .ok_or_else(|| Error::format(meta_path, format!("ground truth for unknown class {class:?}")))?;
        let mut set = BTreeSet::new();
        for ch in chans {
            set.insert(*channel_index.get(ch.as_str()).ok_or_else(|| Error::UnknownChannel {
                name: ch.clone(),
                valid: meta.channel_names.clone(),
            })?);
        }
        ground_truth_channels.insert(k, set);
    }

    let mut d = MvtsDataset {
        x: Tensor::new(vec![n, c, t], x)?,
        y,
        sample_ids: meta.samples.iter().map(|s| s.id.clone()).collect(),
        split: meta.samples.iter().map(|s| s.split).collect(),
        channel_names: meta.channel_names,
        class_names: meta.class_names,
        ground_truth_channels,
        normalization: None,
    };
    d.fit_normalization()?;
    Ok(d)
}

/// Writes the raw (unnormalized) values in the layout [`import_csv`] reads.
pub fn export_csv(d: &MvtsDataset, csv_path: &Path, meta_path: &Path) -> Result<()> {
    d.validate()?;
    let (n, c, t) = (d.n_samples(), d.n_channels(), d.seq_len());
    let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let csv_err = |e: csv::Error| Error::format(csv_path, e.to_string());
    w.write_record(&d.channel_names).map_err(csv_err)?;
    let mut fields = vec![String::new(); c];
    for i in 0..n {
        for step in 0..t {
            for (ch, f) in fields.iter_mut().enumerate() {
                // `{}` on f32 prints the shortest string that parses back exactly
                *f = format!("{}", d.x.data()[(i * c + ch) * t + step]);
            }
            w.write_record(&fields).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::io(csv_path, e))?;

    let meta = CsvMeta {
        channel_names: d.channel_names.clone(),
        class_names: d.class_names.clone(),
        samples: (0..n)
            .map(|i| CsvSample {
                id: d.sample_ids[i].clone(),
                label: d.class_names[d.y[i]].clone(),
                split: d.split[i],
                rows: t,
            })
            .collect(),
        ground_truth_channels: d
            .ground_truth_channels
            .iter()
            .map(|(&k, set)| {
                (
                    d.class_names[k].clone(),
                    set.iter().map(|&ch| d.channel_names[ch].clone()).collect(),
                )
            })
            .collect(),
    };
    let file = File::create(meta_path).map_err(|e| Error::io(meta_path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &meta)?;
    Ok(())
}
