use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use ietnet::data::{build_nbody_dataset, drop_channels, import_csv, load_dataset, save_dataset, MvtsDataset, Split};
use ietnet::eval::{
    confusion_at, evaluate, rank_channels, write_heatmap_csv, write_instance_csv, write_roc_csv, EvalOptions,
    EvalReport, Evaluation,
};
use ietnet::model::{IetNet, REFERENCE_WEIGHT_COUNT};
use ietnet::train::{fit, load_checkpoint, save_checkpoint, Checkpoint, DatasetInfo};

use crate::config::RunConfig;
use crate::UsageError;

pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const LOG_FILE: &str = "train_log.jsonl";
pub const CONFIG_FILE: &str = "config.json";

fn create_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

fn load_data(dir: &Path) -> anyhow::Result<MvtsDataset> {
    load_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn print_summary(d: &MvtsDataset) {
    println!(
        "dataset: {} samples x {} channels x {} steps",
        d.n_samples(),
        d.n_channels(),
        d.seq_len()
    );
    for split in Split::ALL {
        let counts = d.class_counts(split);
        let parts: Vec<String> = d
            .class_names
            .iter()
            .zip(&counts)
            .map(|(n, c)| format!("{n}={c}"))
            .collect();
        println!("  {split}: {} ({})", counts.iter().sum::<usize>(), parts.join(", "));
    }
    for (class, chans) in &d.ground_truth_channels {
        let names: Vec<&str> = chans.iter().map(|&c| d.channel_names[c].as_str()).collect();
        println!("  ground truth for {}: {}", d.class_names[*class], names.join(","));
    }
}

pub fn gen_nbody(cfg: &RunConfig, out: &Path) -> anyhow::Result<()> {
    cfg.nbody.validate().map_err(|e| UsageError(e.to_string()))?;
    let d = build_nbody_dataset(&cfg.nbody)?;
    save_dataset(&d, out)?;
    cfg.write_json(&out.join(CONFIG_FILE))?;
    print_summary(&d);
    println!("wrote {}", out.display());
    Ok(())
}

pub fn import(csv: &Path, meta: &Path, out: &Path) -> anyhow::Result<()> {
    let d = import_csv(csv, meta)?;
    save_dataset(&d, out)?;
    print_summary(&d);
    println!("wrote {}", out.display());
    Ok(())
}

/// Trains on `d` and writes checkpoint, JSON-lines log, and resolved config
/// into `out`.
pub fn train_on(cfg: &RunConfig, d: &MvtsDataset, out: &Path) -> anyhow::Result<Checkpoint> {
    let model_cfg = cfg.model.resolve(d);
    model_cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    cfg.train.validate().map_err(|e| UsageError(e.to_string()))?;
    create_dir(out)?;
    cfg.write_json(&out.join(CONFIG_FILE))?;

    let model = IetNet::<f32>::new(model_cfg.clone(), cfg.model.seed)?;
    println!(
        "parameters: {} (reference implementation reports {REFERENCE_WEIGHT_COUNT})",
        model.num_parameters()
    );
    println!(
        "receptive field: {} steps for sequences of {}",
        model_cfg.receptive_field(),
        model_cfg.seq_len
    );
    let train = d.split_data(Split::Train)?;
    let val = d.split_data(Split::Val)?;

    let log_path = out.join(LOG_FILE);
    let mut log_file = BufWriter::new(File::create(&log_path).with_context(|| format!("creating {}", log_path.display()))?);
    let mut write_err = None;
    let outcome = fit(model, &train, &val, &cfg.train, |rec| {
        let line = serde_json::to_string(rec).expect("log record serializes");
        if let Err(e) = writeln!(log_file, "{line}").and_then(|_| log_file.flush()) {
            write_err.get_or_insert(e);
        }
        println!(
            "epoch {:>3}  step {:>5}  lr {:.2e}  train_loss {:.4}  val_loss {:.4}  val_auc {}  val_acc {:.3}{}",
            rec.epoch,
            rec.step,
            rec.lr,
            rec.train_loss,
            rec.val_loss,
            rec.val_auc.map_or("-".into(), |a| format!("{a:.4}")),
            rec.val_accuracy,
            if rec.best { "  *" } else { "" }
        );
    });
    if let Some(e) = write_err {
        return Err(e).with_context(|| format!("writing {}", log_path.display()));
    }
    let info = DatasetInfo {
        channel_names: d.channel_names.clone(),
        class_names: d.class_names.clone(),
        normalization: d.normalization.clone(),
    };
    let outcome = match outcome {
        Ok(o) => o,
        Err(ietnet::Error::Diverged { epoch, step, last_good }) => {
            if let Some(mut ck) = last_good {
                ck.meta.dataset = Some(info);
                let path = out.join("last_good.ckpt");
                save_checkpoint(&ck, &path)?;
                eprintln!("saved last good checkpoint (epoch {}) to {}", ck.meta.epoch, path.display());
            }
            bail!("training diverged at epoch {epoch}, step {step}: loss or gradient became non-finite");
        }
        Err(e) => return Err(e.into()),
    };
    let mut checkpoint = outcome.best;
    checkpoint.meta.dataset = Some(info);
    save_checkpoint(&checkpoint, &out.join(CHECKPOINT_FILE))?;
    println!(
        "best epoch {} (val_loss {:.4}, val_acc {:.3}){}; wrote {}",
        checkpoint.meta.epoch,
        checkpoint.meta.val_loss,
        checkpoint.meta.val_accuracy,
        if outcome.early_stopped { ", early stopped" } else { "" },
        out.display()
    );
    Ok(checkpoint)
}

fn load_model(path: &Path, d: &MvtsDataset) -> anyhow::Result<IetNet<f32>> {
    let ck = load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))?;
    if let Some(info) = &ck.meta.dataset {
        if info.channel_names != d.channel_names {
            bail!(
                "checkpoint expects channels {:?}, dataset has {:?}",
                info.channel_names,
                d.channel_names
            );
        }
        if info.normalization != d.normalization {
            log::warn!("dataset normalization differs from the one seen in training");
        }
    }
    Ok(ck.model()?)
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    path.with_file_name(format!("{stem}{suffix}"))
}

fn print_report(r: &EvalReport) {
    println!("split {} ({} samples)", r.split, r.n_samples);
    if let Some(t) = &r.threshold {
        println!("threshold ({}): {:.6}", t.mode, t.value);
    }
    if let Some(a) = r.auc {
        println!("AUC: {a:.4}");
    }
    println!("accuracy: {:.4}", r.accuracy);
    println!("confusion matrix (rows = truth, cols = predicted):");
    for (name, row) in r.class_names.iter().zip(&r.confusion_matrix.counts) {
        println!("  {name:>24}: {row:?}");
    }
    if let Some(ap) = &r.ap {
        println!("AP@k ({:?}, {} samples):", ap.normalization, ap.n_samples);
        for a in &ap.per_k {
            println!("  k={}: {:.4} ± {:.4}", a.k, a.mean, a.std);
        }
    }
    for h in &r.heatmap {
        let top: Vec<&str> = rank_channels(&h.weights)
            .into_iter()
            .take(4)
            .map(|c| r.channel_names[c].as_str())
            .collect();
        println!("  predicted {}: top channels {}", r.class_names[h.class], top.join(","));
    }
}

/// Evaluates and writes the JSON report plus ROC and heatmap CSVs next to it.
pub fn eval_to(model: &IetNet<f32>, d: &MvtsDataset, opts: &EvalOptions, report: &Path) -> anyhow::Result<Evaluation> {
    if let Some(dir) = report.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let ev = evaluate(model, d, opts)?;
    write_json(&ev.report, report)?;
    if let Some(roc) = &ev.roc {
        write_roc_csv(roc, &sibling(report, ".roc.csv"))?;
    }
    write_heatmap_csv(
        &ev.report.heatmap,
        &d.channel_names,
        &d.class_names,
        &sibling(report, ".heatmap.csv"),
    )?;
    Ok(ev)
}

pub fn eval(cfg: &RunConfig, model: &Path, data: &Path, report: &Path) -> anyhow::Result<()> {
    let d = load_data(data)?;
    let net = load_model(model, &d)?;
    let ev = eval_to(&net, &d, &cfg.eval, report)?;
    cfg.write_json(&sibling(report, ".config.json"))?;
    print_report(&ev.report);
    println!("wrote {}", report.display());
    Ok(())
}

/// Writes per-instance gate CSVs and per-class aggregate heatmaps.
pub fn explain_to(ev: &Evaluation, d: &MvtsDataset, out: &Path, instance: Option<&str>) -> anyhow::Result<()> {
    let inst_dir = out.join("instances");
    create_dir(&inst_dir)?;
    let chosen: Vec<_> = match instance {
        Some(id) => {
            let found: Vec<_> = ev.attributions.iter().filter(|a| a.sample_id == id).collect();
            if found.is_empty() {
                return Err(UsageError(format!("unknown instance id {id:?} in split {}", ev.report.split)).into());
            }
            found
        }
        None => ev.attributions.iter().collect(),
    };
    for a in chosen {
        write_instance_csv(a, &d.channel_names, &d.class_names, &inst_dir.join(format!("{}.csv", a.sample_id)))?;
    }
    for row in &ev.report.heatmap {
        let name = &d.class_names[row.class];
        write_heatmap_csv(
            std::slice::from_ref(row),
            &d.channel_names,
            &d.class_names,
            &out.join(format!("heatmap_{name}.csv")),
        )?;
    }
    write_heatmap_csv(&ev.report.heatmap, &d.channel_names, &d.class_names, &out.join("heatmap.csv"))?;
    Ok(())
}

pub fn explain(cfg: &RunConfig, model: &Path, data: &Path, out: &Path, instance: Option<&str>) -> anyhow::Result<()> {
    let d = load_data(data)?;
    let net = load_model(model, &d)?;
    create_dir(out)?;
    cfg.write_json(&out.join(CONFIG_FILE))?;
    let ev = evaluate(&net, &d, &cfg.eval)?;
    explain_to(&ev, &d, out, instance)?;
    for h in &ev.report.heatmap {
        println!("predicted {} ({} samples):", d.class_names[h.class], h.n_samples);
        for (name, w) in d.channel_names.iter().zip(&h.weights) {
            println!("  {name:>8} {w:.4}");
        }
    }
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunSummary {
    channel_names: Vec<String>,
    accuracy: f64,
    auc: Option<f64>,
    /// Channel names by decreasing aggregated gate weight, per predicted class.
    rankings: Vec<(String, Vec<String>)>,
    ap: Option<ietnet::eval::ApReport>,
}

impl RunSummary {
    fn of(r: &EvalReport) -> Self {
        RunSummary {
            channel_names: r.channel_names.clone(),
            accuracy: r.accuracy,
            auc: r.auc,
            rankings: r
                .heatmap
                .iter()
                .map(|h| {
                    (
                        r.class_names[h.class].clone(),
                        rank_channels(&h.weights)
                            .into_iter()
                            .map(|c| r.channel_names[c].clone())
                            .collect(),
                    )
                })
                .collect(),
            ap: r.ap.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct AblationReport {
    dropped: Vec<String>,
    remaining_channels: Vec<String>,
    /// Ground-truth channel names per class after re-indexing.
    ground_truth_after: Vec<(String, Vec<String>)>,
    /// Classes whose ground-truth channels were all removed.
    ground_truth_fully_dropped: Vec<String>,
    baseline: Option<RunSummary>,
    ablated: RunSummary,
}

/// One full pipeline (train, evaluate, explain) into `out`.
fn pipeline(cfg: &RunConfig, d: &MvtsDataset, out: &Path) -> anyhow::Result<EvalReport> {
    let net = train_on(cfg, d, out)?.model()?;
    let ev = eval_to(&net, d, &cfg.eval, &out.join("eval.json"))?;
    explain_to(&ev, d, &out.join("explain"), None)?;
    Ok(ev.report)
}

pub fn ablate(cfg: &RunConfig, data: &Path, drop: &[String], out: &Path, skip_baseline: bool) -> anyhow::Result<()> {
    let d = load_data(data)?;
    let ablated = drop_channels(&d, drop).map_err(|e| UsageError(e.to_string()))?;
    create_dir(out)?;
    cfg.write_json(&out.join(CONFIG_FILE))?;

    let baseline = if skip_baseline || drop.is_empty() {
        None
    } else {
        println!("== baseline (all channels)");
        Some(pipeline(cfg, &d, &out.join("baseline"))?)
    };
    println!("== ablated (dropped: {})", if drop.is_empty() { "none".into() } else { drop.join(",") });
    let after = pipeline(cfg, &ablated, &out.join("ablated"))?;

    let mut fully_dropped = Vec::new();
    let mut gt_after = Vec::new();
    for (class, before) in &d.ground_truth_channels {
        let now: BTreeSet<usize> = ablated.ground_truth_channels.get(class).cloned().unwrap_or_default();
        if !before.is_empty() && now.is_empty() {
            fully_dropped.push(d.class_names[*class].clone());
            log::warn!("every ground-truth channel of class {} was dropped", d.class_names[*class]);
        }
        gt_after.push((
            d.class_names[*class].clone(),
            now.iter().map(|&c| ablated.channel_names[c].clone()).collect(),
        ));
    }
    let report = AblationReport {
        dropped: drop.to_vec(),
        remaining_channels: ablated.channel_names.clone(),
        ground_truth_after: gt_after,
        ground_truth_fully_dropped: fully_dropped,
        baseline: baseline.as_ref().map(RunSummary::of),
        ablated: RunSummary::of(&after),
    };
    write_json(&report, &out.join("ablation.json"))?;
    if let Some(b) = &baseline {
        println!("baseline accuracy {:.4}", b.accuracy);
    }
    println!("ablated accuracy {:.4}", after.accuracy);
    println!("wrote {}", out.join("ablation.json").display());
    Ok(())
}

/// Confusion counts at evenly spaced (or listed) thresholds.
pub fn sweep(
    cfg: &RunConfig,
    model: &Path,
    data: &Path,
    out: &Path,
    points: usize,
    thresholds: Option<Vec<f64>>,
) -> anyhow::Result<()> {
    let d = load_data(data)?;
    if d.n_classes() != 2 {
        return Err(UsageError("threshold sweeps need a binary task".into()).into());
    }
    let net = load_model(model, &d)?;
    let split = d.split_data(cfg.eval.split)?;
    let pred = net.predict(&split.x, cfg.eval.chunk)?;
    let scores: Vec<f64> = pred.probs.data().chunks_exact(2).map(|r| r[1] as f64).collect();
    let thresholds = thresholds.unwrap_or_else(|| {
        let n = points.max(2);
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    });
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut w = BufWriter::new(File::create(out).with_context(|| format!("creating {}", out.display()))?);
    writeln!(w, "threshold,tn,fp,fn,tp,tpr,fpr,accuracy")?;
    for t in thresholds {
        let cm = confusion_at(&scores, &split.y, t)?;
        let c = &cm.counts;
        let (tpr, fpr) = cm.rates();
        writeln!(
            w,
            "{t},{},{},{},{},{tpr},{fpr},{}",
            c[0][0],
            c[0][1],
            c[1][0],
            c[1][1],
            cm.accuracy()
        )?;
    }
    w.flush()?;
    cfg.write_json(&sibling(out, ".config.json"))?;
    println!("wrote {}", out.display());
    Ok(())
}
