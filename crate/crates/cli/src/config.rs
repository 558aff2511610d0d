use std::path::Path;

use anyhow::{bail, Context};
use clap::Args;
use serde::{Deserialize, Serialize};

use ietnet::data::{MvtsDataset, NBodyDatasetConfig};
use ietnet::eval::{ApNormalization, EvalOptions, ThresholdMode};
use ietnet::model::IetNetConfig;
use ietnet::train::TrainConfig;

/// Architecture settings that do not depend on the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub tcn_filters: usize,
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub attention_heads: usize,
    pub attention_relu: bool,
    pub dropout_rate: f64,
    /// Weight initialization seed.
    pub seed: u64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = IetNetConfig::default();
        ModelSection {
            tcn_filters: d.tcn_filters,
            kernel_size: d.kernel_size,
            dilations: d.dilations,
            attention_heads: d.attention_heads,
            attention_relu: d.attention_relu,
            dropout_rate: d.dropout_rate,
            seed: 0,
        }
    }
}

impl ModelSection {
    /// Full architecture for a dataset's shape.
    pub fn resolve(&self, d: &MvtsDataset) -> IetNetConfig {
        IetNetConfig {
            n_channels: d.n_channels(),
            n_classes: d.n_classes(),
            seq_len: d.seq_len(),
            tcn_filters: self.tcn_filters,
            kernel_size: self.kernel_size,
            dilations: self.dilations.clone(),
            d_model: self.tcn_filters,
            attention_heads: self.attention_heads,
            attention_relu: self.attention_relu,
            dropout_rate: self.dropout_rate,
        }
    }
}

/// Every tunable of the pipeline. Loaded from a TOML or JSON file, then
/// overridden by flags; the resolved value is echoed next to every output.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nbody: NBodyDatasetConfig,
    pub model: ModelSection,
    pub train: TrainConfig,
    pub eval: EvalOptions,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            Some("toml") => toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
            _ => bail!("config file must end in .toml or .json: {}", path.display()),
        };
        Ok(cfg)
    }

    pub fn write_json(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct NBodyFlags {
    /// Base seed; sample i uses a seed derived from (seed, i)
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "train")]
    pub n_train: Option<usize>,
    #[arg(long = "val")]
    pub n_val: Option<usize>,
    #[arg(long = "test")]
    pub n_test: Option<usize>,
    /// Time steps per trajectory (= sequence length)
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Plummer softening length
    #[arg(long)]
    pub softening: Option<f64>,
    /// Gravitational constant
    #[arg(long)]
    pub g: Option<f64>,
    /// Initial coordinates and velocities are uniform in [-r, r]
    #[arg(long)]
    pub init_range: Option<f64>,
    /// Initial conditions drawn per run before giving up
    #[arg(long)]
    pub max_attempts: Option<usize>,
    /// Largest accepted relative energy drift
    #[arg(long)]
    pub energy_tolerance: Option<f64>,
}

impl NBodyFlags {
    pub fn apply(self, c: &mut NBodyDatasetConfig) {
        set(&mut c.seed, self.seed);
        set(&mut c.n_train, self.n_train);
        set(&mut c.n_val, self.n_val);
        set(&mut c.n_test, self.n_test);
        set(&mut c.sim.steps, self.steps);
        set(&mut c.sim.dt, self.dt);
        set(&mut c.sim.softening, self.softening);
        set(&mut c.sim.g, self.g);
        set(&mut c.sim.init_range, self.init_range);
        set(&mut c.sim.max_attempts, self.max_attempts);
        set(&mut c.sim.energy_tolerance, self.energy_tolerance);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelFlags {
    /// Filters per TCN convolution (also the attention width)
    #[arg(long)]
    pub filters: Option<usize>,
    #[arg(long)]
    pub kernel_size: Option<usize>,
    /// Comma-separated, strictly increasing powers of two
    #[arg(long, value_delimiter = ',')]
    pub dilations: Option<Vec<usize>>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    /// ReLU on the attention query/key/value projections
    #[arg(long)]
    pub attention_relu: Option<bool>,
    /// Weight initialization seed
    #[arg(long)]
    pub model_seed: Option<u64>,
}

impl ModelFlags {
    pub fn apply(self, c: &mut ModelSection) {
        set(&mut c.tcn_filters, self.filters);
        set(&mut c.kernel_size, self.kernel_size);
        set(&mut c.dilations, self.dilations);
        set(&mut c.attention_heads, self.heads);
        set(&mut c.dropout_rate, self.dropout);
        set(&mut c.attention_relu, self.attention_relu);
        set(&mut c.seed, self.model_seed);
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Samples per forward pass within a batch (memory bound only)
    #[arg(long)]
    pub micro_batch: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    /// Shuffling and dropout seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub lr_min: Option<f64>,
    #[arg(long)]
    pub lr_max: Option<f64>,
    #[arg(long)]
    pub warmup_steps: Option<u64>,
    /// Restart the learning-rate ramp every N steps
    #[arg(long)]
    pub cycle_steps: Option<u64>,
}

impl TrainFlags {
    pub fn apply(self, c: &mut TrainConfig) {
        set(&mut c.batch_size, self.batch_size);
        set(&mut c.micro_batch, self.micro_batch);
        set(&mut c.max_epochs, self.epochs);
        set(&mut c.patience, self.patience);
        set(&mut c.seed, self.seed);
        set(&mut c.lr.lr_min, self.lr_min);
        set(&mut c.lr.lr_max, self.lr_max);
        set(&mut c.lr.warmup_steps, self.warmup_steps);
        if self.cycle_steps.is_some() {
            c.lr.cycle_steps = self.cycle_steps;
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct EvalFlags {
    /// `auto` (validation-optimal) or a fixed class-1 probability
    #[arg(long)]
    pub threshold: Option<ThresholdMode>,
    /// Comma-separated k values for AP@k (default 1..=|ground truth|)
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// AP@k denominator: `clipped` (min(k, |GT|)) or `paper` (|GT|)
    #[arg(long, value_parser = parse_normalization)]
    pub ap_normalization: Option<ApNormalization>,
}

impl EvalFlags {
    pub fn apply(self, c: &mut EvalOptions) {
        set(&mut c.threshold, self.threshold);
        set(&mut c.ks, self.ks);
        set(&mut c.ap_normalization, self.ap_normalization);
    }
}

fn parse_normalization(s: &str) -> Result<ApNormalization, String> {
    match s {
        "clipped" => Ok(ApNormalization::Clipped),
        "paper" => Ok(ApNormalization::Paper),
        _ => Err(format!("expected `clipped` or `paper`, got {s:?}")),
    }
}
