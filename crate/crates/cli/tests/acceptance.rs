//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria 6, 7 and 10 train on the N-body benchmark through the binary.
//! `IETNET_ACCEPTANCE_PROFILE=full` uses the reference configuration
//! (T=2000, dilations to 512, bar 0.95); the default `reduced` profile uses
//! T=500, dilations to 128 and the 0.90 bar. `IETNET_ACCEPTANCE_PROFILE=skip`
//! reports those three as SKIP.
//!
//! Those three measure how well the model learns, so a miss prints FAIL with
//! the measured values without aborting; every other criterion is a hard
//! check and fails the target.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ietnet::data::{simulate_nbody, NBodyConfig, SimParams, FOUR_BODY_MASSES};
use ietnet::eval::{ap_at_k, roc_auc, ApNormalization};
use ietnet::layers::{causal_dilated_conv1d, CausalConv1d, Dense, Mode, MultiHeadAttention, ParamStore, ResidualBlock};
use ietnet::model::{IetNet, IetNetConfig};
use ietnet::tensor::{finite_diff_check, relative_error, Graph, NodeId, Tensor};
use ietnet::train::{load_checkpoint, save_checkpoint};

type Outcome = Result<String, String>;

struct Line {
    id: u32,
    title: &'static str,
    soft: bool,
    outcome: Option<Outcome>,
}

fn random(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- 1

const FD_STEP: f64 = 1e-6;

fn param_fd<F>(store: &ParamStore<f64>, f: F) -> f64
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>) -> NodeId,
{
    let mut g = Graph::new();
    let loss = f(&mut g, store);
    let grads = g.backward(loss).unwrap();
    let eval = |s: &ParamStore<f64>| {
        let mut g = Graph::new();
        let l = f(&mut g, s);
        g.value(l).item().unwrap()
    };
    let mut probe = store.clone();
    let mut worst = 0f64;
    for id in store.ids() {
        let zeros = Tensor::zeros(store.get(id).shape()).unwrap();
        let analytic = grads.param(id).unwrap_or(&zeros).clone();
        for i in 0..store.get(id).numel() {
            let orig = store.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = orig + FD_STEP;
            let plus = eval(&probe);
            probe.get_mut(id).data_mut()[i] = orig - FD_STEP;
            let minus = eval(&probe);
            probe.get_mut(id).data_mut()[i] = orig;
            worst = worst.max(relative_error(analytic.data()[i], (plus - minus) / (2.0 * FD_STEP)));
        }
    }
    worst
}

/// Max relative error over input and parameter gradients of `f`, with
/// biases moved off zero so no ReLU sits exactly on its kink.
fn layer_fd<F>(store: &ParamStore<f64>, x: &Tensor<f64>, f: F) -> f64
where
    F: Fn(&mut Graph<f64>, &ParamStore<f64>, NodeId) -> NodeId,
{
    let mut store = store.clone();
    let biases: Vec<_> = store.ids().filter(|&id| store.name(id).ends_with("bias")).collect();
    for (i, id) in biases.into_iter().enumerate() {
        let shape = store.get(id).shape().to_vec();
        *store.get_mut(id) = random(&shape, 500 + i as u64).map(|v| 0.3 * v);
    }
    let input = finite_diff_check(|g, xn| Ok(f(g, &store, xn)), x, FD_STEP).unwrap();
    let params = param_fd(&store, |g, s| {
        let xn = g.constant(x.clone());
        f(g, s, xn)
    });
    input.max(params)
}

fn weighted_sum(g: &mut Graph<f64>, y: NodeId, seed: u64) -> NodeId {
    let w = g.constant(random(g.shape(y), seed));
    let p = g.mul(y, w).unwrap();
    g.sum(p).unwrap()
}

fn tiny_config() -> IetNetConfig {
    IetNetConfig {
        n_channels: 3,
        n_classes: 2,
        seq_len: 16,
        tcn_filters: 4,
        kernel_size: 2,
        dilations: vec![1, 2],
        d_model: 4,
        attention_heads: 1,
        attention_relu: true,
        dropout_rate: 0.5,
    }
}

fn gradient_checks() -> Outcome {
    let started = Instant::now();
    let mut errs: Vec<(&str, f64)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    let mut store = ParamStore::new();
    let conv = CausalConv1d::new(&mut store, "c", 2, 3, 3, 2, &mut rng).unwrap();
    errs.push((
        "conv",
        layer_fd(&store, &random(&[2, 2, 12], 2), |g, s, x| {
            let y = conv.forward(g, s, x).unwrap();
            weighted_sum(g, y, 3)
        }),
    ));

    let mut store = ParamStore::new();
    let dense = Dense::new(&mut store, "d", 4, 2, &mut rng).unwrap();
    errs.push((
        "dense",
        layer_fd(&store, &random(&[2, 3, 4], 4), |g, s, x| {
            let y = dense.forward(g, s, x).unwrap();
            weighted_sum(g, y, 5)
        }),
    ));

    let mut store = ParamStore::new();
    let block = ResidualBlock::new(&mut store, "b", 1, 4, 2, 2, 0.5, &mut rng).unwrap();
    errs.push((
        "residual",
        layer_fd(&store, &random(&[2, 1, 10], 6), |g, s, x| {
            let mut mask = ChaCha8Rng::seed_from_u64(7);
            let y = block.forward(g, s, x, &mut Mode::Training(&mut mask)).unwrap();
            weighted_sum(g, y, 8)
        }),
    ));

    let mut store = ParamStore::new();
    let att = MultiHeadAttention::new(&mut store, "a", 4, 2, true, 0.0, &mut rng).unwrap();
    *store.get_mut(att.ln_gain) = random(&[4], 9);
    errs.push((
        "attention",
        layer_fd(&store, &random(&[2, 3, 4], 10), |g, s, m| {
            let out = att.forward(g, s, m, &mut Mode::Inference).unwrap();
            let a = weighted_sum(g, out.output, 11);
            let b = weighted_sum(g, out.weights, 12);
            g.add(a, b).unwrap()
        }),
    ));

    let net = IetNet::<f64>::new(tiny_config(), 13).unwrap();
    let x = random(&[2, 3, 16], 14);
    let config = net.config.clone();
    errs.push((
        "model",
        layer_fd(&net.store, &x, |g, s, xn| {
            let net = IetNet::from_store(config.clone(), s.clone()).unwrap();
            let out = net.forward(g, xn, &mut Mode::Inference).unwrap();
            let ce = g.cross_entropy(out.probs, &[0, 1]).unwrap();
            let gate = weighted_sum(g, out.gate, 15);
            g.add(ce, gate).unwrap()
        }),
    ));

    let secs = started.elapsed().as_secs_f64();
    let worst = errs.iter().map(|e| e.1).fold(0.0, f64::max);
    let detail = errs.iter().map(|(n, e)| format!("{n} {e:.1e}")).join(", ");
    check(worst <= 1e-4 && secs < 60.0, format!("max rel err {worst:.1e} ≤ 1e-4 ({detail}); {secs:.1}s < 60s"))
}

// ---------------------------------------------------------------- 2

fn naive_conv(x: &Tensor<f64>, k: &Tensor<f64>, b: &Tensor<f64>, d: usize) -> Tensor<f64> {
    let (n, c, t) = (x.shape()[0], x.shape()[1], x.shape()[2]);
    let (f, kk) = (k.shape()[0], k.shape()[2]);
    let mut out = vec![0.0; n * f * t];
    for bi in 0..n {
        for fi in 0..f {
            for ti in 0..t {
                let mut acc = b.data()[fi];
                for ci in 0..c {
                    for j in 0..kk {
                        let back = (kk - 1 - j) * d;
                        if ti >= back {
                            acc += k.get(&[fi, ci, j]).unwrap() * x.get(&[bi, ci, ti - back]).unwrap();
                        }
                    }
                }
                out[(bi * f + fi) * t + ti] = acc;
            }
        }
    }
    Tensor::new(vec![n, f, t], out).unwrap()
}

fn conv_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst = 0f64;
    for case in 0..100u64 {
        let k = rng.random_range(1..=3);
        let d = [1, 2, 4, 8][rng.random_range(0..4)];
        let t = rng.random_range(1..=64);
        let (n, c, f) = (rng.random_range(1..=3), rng.random_range(1..=4), rng.random_range(1..=4));
        let x = random(&[n, c, t], 1000 + 3 * case);
        let kern = random(&[f, c, k], 1001 + 3 * case);
        let bias = random(&[f], 1002 + 3 * case);
        let fast = causal_dilated_conv1d(&x, &kern, &bias, d).unwrap();
        worst = worst.max(fast.max_abs_diff(&naive_conv(&x, &kern, &bias, d)).unwrap());
    }
    check(worst <= 1e-6, format!("100 configs, max abs diff {worst:.1e} ≤ 1e-6"))
}

// ---------------------------------------------------------------- 3

fn causality() -> Outcome {
    let config = IetNetConfig::default();
    let rf = config.receptive_field();
    let t = config.seq_len;
    let net = IetNet::<f64>::new(config, 30).unwrap();
    let run = |series: &[f64]| {
        let mut g = Graph::new();
        let mut h = g.constant(Tensor::new(vec![1, 1, t], series.to_vec()).unwrap());
        for b in &net.blocks {
            h = b.forward(&mut g, &net.store, h, &mut Mode::Inference).unwrap();
        }
        g.value(h).clone()
    };
    let base = random(&[t], 31).into_data();
    let y0 = run(&base);
    let filters = y0.shape()[1];
    let mut leaks = 0;
    let mut reach = 0.0f64;
    for at in [0, 1, 250, 1000, 1998, 1999] {
        let mut x = base.clone();
        x[at] += 1.0;
        let y = run(&x);
        for f in 0..filters {
            for s in 0..at {
                if y.get(&[0, f, s]) != y0.get(&[0, f, s]) {
                    leaks += 1;
                }
            }
            if at == 0 {
                reach = reach.max((y.get(&[0, f, t - 1]).unwrap() - y0.get(&[0, f, t - 1]).unwrap()).abs());
            }
        }
    }
    check(
        leaks == 0 && reach > 0.0 && rf >= t,
        format!("receptive field {rf}; {leaks} earlier outputs changed; t=0 moves t={} by {reach:.2e}", t - 1),
    )
}

// ---------------------------------------------------------------- 4

fn gate_validity() -> Outcome {
    let config = IetNetConfig {
        seq_len: 32,
        dilations: vec![1, 2, 4],
        ..IetNetConfig::default()
    };
    let (c, t, k) = (config.n_channels, config.seq_len, config.n_classes);
    let net = IetNet::<f64>::new(config, 40).unwrap();
    let n = 1000;
    let x = random(&[n, c, t], 41);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let perms: Vec<Vec<usize>> = (0..n)
        .map(|_| {
            let mut p: Vec<usize> = (0..c).collect();
            p.shuffle(&mut rng);
            p
        })
        .collect();
    let mut xp = vec![0.0; n * c * t];
    for i in 0..n {
        for j in 0..c {
            xp[(i * c + j) * t..][..t].copy_from_slice(&x.data()[(i * c + perms[i][j]) * t..][..t]);
        }
    }
    let xp = Tensor::new(vec![n, c, t], xp).unwrap();
    let gate = net.predict(&x, 100).unwrap().gate;
    let gate_p = net.predict(&xp, 100).unwrap().gate;
    let (mut sum_err, mut perm_err) = (0f64, 0f64);
    for i in 0..n {
        for class in 0..k {
            let total: f64 = (0..c).map(|j| gate.get(&[i, j, class]).unwrap()).sum();
            sum_err = sum_err.max((total - 1.0).abs());
            for j in 0..c {
                let d = gate_p.get(&[i, j, class]).unwrap() - gate.get(&[i, perms[i][j], class]).unwrap();
                perm_err = perm_err.max(d.abs());
            }
        }
    }
    check(
        sum_err <= 1e-6 && perm_err <= 1e-9,
        format!("1000 inputs: column sum error {sum_err:.1e} ≤ 1e-6, permutation error {perm_err:.1e}"),
    )
}

// ---------------------------------------------------------------- 5

fn momentum() -> Outcome {
    let mut worst = 0f64;
    for seed in 0..20 {
        let run = simulate_nbody(&NBodyConfig {
            masses: FOUR_BODY_MASSES.to_vec(),
            params: SimParams::default(),
            seed,
        })
        .map_err(|e| e.to_string())?;
        worst = worst.max(run.momentum_drift());
    }
    check(worst <= 1e-6, format!("20 four-body runs x 2000 steps, max relative drift {worst:.1e} ≤ 1e-6"))
}

// ---------------------------------------------------------------- 8

fn brute_ap(ranked: &[usize], gt: &BTreeSet<usize>, k: usize, norm: ApNormalization) -> f64 {
    let mut sum = 0.0;
    for i in 1..=k.min(ranked.len()) {
        if gt.contains(&ranked[i - 1]) {
            let top: BTreeSet<usize> = ranked[..i].iter().copied().collect();
            sum += top.intersection(gt).count() as f64 / i as f64;
        }
    }
    let denom = match norm {
        ApNormalization::Paper => gt.len(),
        ApNormalization::Clipped => k.min(gt.len()),
    };
    sum / denom as f64
}

fn ap_oracle() -> Outcome {
    let (mut cases, mut mismatches) = (0usize, 0usize);
    for c in 1..=6usize {
        for mask in 1..1u32 << c {
            let gt: BTreeSet<usize> = (0..c).filter(|i| mask >> i & 1 == 1).collect();
            for ranked in (0..c).permutations(c) {
                for k in 1..=c {
                    for norm in [ApNormalization::Paper, ApNormalization::Clipped] {
                        cases += 1;
                        if ap_at_k(&ranked, &gt, k, norm).unwrap() != brute_ap(&ranked, &gt, k, norm) {
                            mismatches += 1;
                        }
                    }
                }
            }
        }
    }
    check(mismatches == 0, format!("{cases} (ranking, subset, k, mode) cases, {mismatches} mismatches"))
}

// ---------------------------------------------------------------- 9

fn auc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut mismatches = [0usize; 2];
    for (slot, ties) in [false, true].into_iter().enumerate() {
        let mut done = 0;
        while done < 200 {
            let n = rng.random_range(2..=20);
            let scores: Vec<f64> = if ties {
                (0..n).map(|_| rng.random_range(0..5) as f64).collect()
            } else {
                let mut s: Vec<f64> = (0..n).map(|i| i as f64 + rng.random_range(0.0..0.5)).collect();
                s.shuffle(&mut rng);
                s
            };
            let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            if !(labels.contains(&0) && labels.contains(&1)) {
                continue;
            }
            done += 1;
            let (mut twice, mut pairs) = (0usize, 0usize);
            for i in 0..n {
                for j in 0..n {
                    if labels[i] == 1 && labels[j] == 0 {
                        pairs += 1;
                        twice += 2 * usize::from(scores[i] > scores[j]) + usize::from(scores[i] == scores[j]);
                    }
                }
            }
            let mw = twice as f64 / (2 * pairs) as f64;
            if roc_auc(&scores, &labels).unwrap().auc != mw {
                mismatches[slot] += 1;
            }
        }
    }
    check(
        mismatches == [0, 0],
        format!(
            "200 distinct-score sets: {} mismatches; 200 tied-score sets: {} mismatches (exact equality)",
            mismatches[0], mismatches[1]
        ),
    )
}

// ---------------------------------------------------------------- CLI helpers

fn ietnet(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ietnet"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    } else {
        Err(format!(
            "`ietnet {}` exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ))
    }
}

fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

fn read_json(path: &Path) -> Result<serde_json::Value, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

const TINY_DATA: &[&str] = &["--seed", "2", "--train", "8", "--val", "8", "--test", "8", "--steps", "32"];
const TINY_TRAIN: &[&str] = &[
    "--filters",
    "4",
    "--dilations",
    "1,2,4",
    "--epochs",
    "3",
    "--batch-size",
    "4",
    "--warmup-steps",
    "2",
];

fn tiny_run(root: &Path, name: &str) -> Result<PathBuf, String> {
    let data = root.join("tiny-data");
    if !data.join("X.bin").exists() {
        ietnet(&[&["gen-nbody", "--out", p(&data)], TINY_DATA].concat())?;
    }
    let out = root.join(name);
    ietnet(&[&["train", "--data", p(&data), "--out", p(&out)], TINY_TRAIN].concat())?;
    Ok(out)
}

// ---------------------------------------------------------------- 11

fn checkpoint_round_trip(root: &Path) -> Outcome {
    let run = tiny_run(root, "ckpt")?;
    let original = load_checkpoint(&run.join("model.ckpt")).map_err(|e| e.to_string())?;
    let copy = root.join("copy.ckpt");
    save_checkpoint(&original, &copy).map_err(|e| e.to_string())?;
    let reloaded = load_checkpoint(&copy).map_err(|e| e.to_string())?;
    let data = ietnet::data::load_dataset(&root.join("tiny-data")).map_err(|e| e.to_string())?;
    let batch = data.split_data(ietnet::data::Split::Test).map_err(|e| e.to_string())?;
    let logits = |c: &ietnet::train::Checkpoint| -> Result<Vec<u32>, String> {
        let m = c.model().map_err(|e| e.to_string())?;
        let pred = m.predict(&batch.x, 3).map_err(|e| e.to_string())?;
        Ok(pred.logits.data().iter().map(|v| v.to_bits()).collect())
    };
    let (a, b) = (logits(&original)?, logits(&reloaded)?);
    let same_file = std::fs::read(run.join("model.ckpt")).ok() == std::fs::read(&copy).ok();
    check(
        a == b && same_file,
        format!("{} logits bit-identical: {}; re-saved file identical: {same_file}", a.len(), a == b),
    )
}

// ---------------------------------------------------------------- 12

fn determinism(root: &Path) -> Outcome {
    let a = tiny_run(root, "det-a")?;
    let b = tiny_run(root, "det-b")?;
    let la = std::fs::read_to_string(a.join("train_log.jsonl")).map_err(|e| e.to_string())?;
    let lb = std::fs::read_to_string(b.join("train_log.jsonl")).map_err(|e| e.to_string())?;
    check(
        la == lb && !la.is_empty(),
        format!("{} log lines, identical: {}", la.lines().count(), la == lb),
    )
}

// ---------------------------------------------------------------- 6, 7, 10

struct Profile {
    name: &'static str,
    steps: usize,
    dilations: &'static str,
    bar: f64,
}

const REDUCED: Profile = Profile {
    name: "reduced",
    steps: 500,
    dilations: "1,2,4,8,16,32,64,128",
    bar: 0.90,
};

const FULL: Profile = Profile {
    name: "full",
    steps: 2000,
    dilations: "1,2,4,8,16,32,64,128,256,512",
    bar: 0.95,
};

const SEEDS: [&str; 3] = ["0", "1", "2"];

struct SeedResult {
    accuracy: f64,
    ap1: Option<f64>,
    ap4: Option<f64>,
    gt_mass: f64,
    other_mass: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn benchmark_data(root: &Path, prof: &Profile) -> Result<PathBuf, String> {
    let data = root.join(format!("nbody-{}", prof.name));
    ietnet(&["gen-nbody", "--out", p(&data), "--steps", &prof.steps.to_string()])?;
    Ok(data)
}

fn train_and_eval(root: &Path, data: &Path, prof: &Profile, seed: &str) -> Result<SeedResult, String> {
    let out = root.join(format!("train-{}-{seed}", prof.name));
    ietnet(&[
        "train",
        "--data",
        p(data),
        "--out",
        p(&out),
        "--dilations",
        prof.dilations,
        "--seed",
        seed,
        "--model-seed",
        seed,
    ])?;
    let report = out.join("eval.json");
    ietnet(&[
        "eval",
        "--model",
        p(&out.join("model.ckpt")),
        "--data",
        p(data),
        "--report",
        p(&report),
        "--ks",
        "1,4",
    ])?;
    let r = read_json(&report)?;
    let ap = |k: usize| {
        r["ap"]["per_k"]
            .as_array()
            .and_then(|v| v.iter().find(|e| e["k"] == k))
            .and_then(|e| e["mean"].as_f64())
    };
    let class1 = r["heatmap"]
        .as_array()
        .and_then(|rows| rows.iter().find(|h| h["class"] == 1))
        .and_then(|h| h["weights"].as_array())
        .map(|w| w.iter().filter_map(|v| v.as_f64()).collect::<Vec<f64>>())
        .unwrap_or_default();
    let mass = |range: std::ops::Range<usize>| class1.get(range).map_or(0.0, |w| w.iter().sum());
    Ok(SeedResult {
        accuracy: r["accuracy"].as_f64().ok_or("report has no accuracy")?,
        ap1: ap(1),
        ap4: ap(4),
        gt_mass: mass(0..4),
        other_mass: mass(4..8),
    })
}

fn classification(results: &[SeedResult], prof: &Profile) -> Outcome {
    let accs: Vec<f64> = results.iter().map(|r| r.accuracy).collect();
    let med = median(accs.clone());
    check(
        med >= prof.bar,
        format!(
            "{} profile, median test accuracy {med:.3} (seeds: {}) ≥ {:.2}",
            prof.name,
            accs.iter().map(|a| format!("{a:.3}")).join(", "),
            prof.bar
        ),
    )
}

fn localization(results: &[SeedResult]) -> Outcome {
    // a seed without class-1 predictions has no AP; count it as zero
    let ap1 = median(results.iter().map(|r| r.ap1.unwrap_or(0.0)).collect());
    let ap4 = median(results.iter().map(|r| r.ap4.unwrap_or(0.0)).collect());
    let gt = median(results.iter().map(|r| r.gt_mass).collect());
    let other = median(results.iter().map(|r| r.other_mass).collect());
    check(
        ap1 >= 0.9 && ap4 >= 0.7 && gt > other,
        format!(
            "median clipped AP@1 {ap1:.3} ≥ 0.9, AP@4 {ap4:.3} ≥ 0.7; class-1 heatmap mass {{0..3}} {gt:.3} > {{4..7}} {other:.3}"
        ),
    )
}

fn ablation(root: &Path, data: &Path, prof: &Profile) -> Outcome {
    let out = root.join(format!("ablate-{}", prof.name));
    ietnet(&[
        "ablate",
        "--data",
        p(data),
        "--drop",
        "x1",
        "--skip-baseline",
        "--out",
        p(&out),
        "--dilations",
        prof.dilations,
    ])?;
    let r = read_json(&out.join("ablation.json"))?;
    let acc = r["ablated"]["accuracy"].as_f64().ok_or("no ablated accuracy")?;
    check(
        acc >= prof.bar,
        format!("channel x1 dropped, {} profile, seed 0: test accuracy {acc:.3} ≥ {:.2}", prof.name, prof.bar),
    )
}

// ---------------------------------------------------------------- main

fn main() {
    let profile = std::env::var("IETNET_ACCEPTANCE_PROFILE").unwrap_or_else(|_| "reduced".into());
    let prof = match profile.as_str() {
        "full" => Some(&FULL),
        "reduced" => Some(&REDUCED),
        "skip" => None,
        other => panic!("IETNET_ACCEPTANCE_PROFILE must be full, reduced or skip, got {other:?}"),
    };
    let tmp = tempfile::tempdir().expect("temp dir");
    let root = tmp.path();

    let mut lines = vec![
        Line { id: 1, title: "gradient correctness", soft: false, outcome: Some(gradient_checks()) },
        Line { id: 2, title: "convolution oracle", soft: false, outcome: Some(conv_oracle()) },
        Line { id: 3, title: "causality", soft: false, outcome: Some(causality()) },
        Line { id: 4, title: "gate validity", soft: false, outcome: Some(gate_validity()) },
        Line { id: 5, title: "simulator conservation", soft: false, outcome: Some(momentum()) },
    ];
    let (c6, c7, c10) = match prof {
        Some(prof) => {
            let trained = benchmark_data(root, prof).and_then(|data| {
                let results = SEEDS
                    .iter()
                    .map(|seed| train_and_eval(root, &data, prof, seed))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((data, results))
            });
            match trained {
                Ok((data, results)) => (
                    Some(classification(&results, prof)),
                    Some(localization(&results)),
                    Some(ablation(root, &data, prof)),
                ),
                Err(e) => (Some(Err(e.clone())), Some(Err(e.clone())), Some(Err(e))),
            }
        }
        None => (None, None, None),
    };
    lines.push(Line { id: 6, title: "N-body classification", soft: true, outcome: c6 });
    lines.push(Line { id: 7, title: "channel localization", soft: true, outcome: c7 });
    lines.push(Line { id: 8, title: "AP@k oracle", soft: false, outcome: Some(ap_oracle()) });
    lines.push(Line { id: 9, title: "AUC oracle", soft: false, outcome: Some(auc_oracle()) });
    lines.push(Line { id: 10, title: "ablation persistence", soft: true, outcome: c10 });
    lines.push(Line { id: 11, title: "checkpoint round-trip", soft: false, outcome: Some(checkpoint_round_trip(root)) });
    lines.push(Line { id: 12, title: "determinism", soft: false, outcome: Some(determinism(root)) });

    println!();
    let mut hard_failures = 0;
    for l in &lines {
        let (tag, detail) = match &l.outcome {
            Some(Ok(d)) => ("PASS", d.as_str()),
            Some(Err(d)) => ("FAIL", d.as_str()),
            None => ("SKIP", "IETNET_ACCEPTANCE_PROFILE=skip"),
        };
        if !l.soft && matches!(l.outcome, Some(Err(_))) {
            hard_failures += 1;
        }
        println!("{tag} criterion {:>2} ({}): {detail}", l.id, l.title);
    }
    let passed = lines.iter().filter(|l| matches!(l.outcome, Some(Ok(_)))).count();
    println!("acceptance: {passed}/{} passed", lines.len());
    if hard_failures > 0 {
        eprintln!("{hard_failures} hard criteria failed");
        std::process::exit(1);
    }
}
