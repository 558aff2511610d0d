//! Planar softened gravity and the two-class N-body benchmark.
//!
//! Class 0 emits the positions of all four bodies of one 4-body run as
//! `(x1, x2, y1, y2, x3, x4, y3, y4)`. Class 1 replaces the first four
//! channels with a 2-body run, keeping bodies 3 and 4 from an independent
//! 4-body run, so only channels 0..4 distinguish the classes.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{MvtsDataset, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const TWO_BODY_MASSES: [f64; 2] = [1.0, 1.0 / std::f64::consts::PI];
pub const FOUR_BODY_MASSES: [f64; 4] = [
    1.0,
    1.0 / std::f64::consts::PI,
    std::f64::consts::FRAC_1_SQRT_2,
    1.0 / std::f64::consts::E,
];
pub const NBODY_CHANNELS: [&str; 8] = ["x1", "x2", "y1", "y2", "x3", "x4", "y3", "y4"];

/// Integration settings shared by every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub g: f64,
    /// Recorded steps; the trajectory has this many rows.
    pub steps: usize,
    pub dt: f64,
    /// Plummer softening length.
    pub softening: f64,
    /// Initial positions and velocities are uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    /// Initial conditions drawn before giving up.
    pub max_attempts: usize,
    /// Largest accepted `max_t |E(t) - E(0)| / (|K(0)| + |U(0)|)`.
    pub energy_tolerance: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            g: 1.0,
            steps: 2000,
            dt: 1e-3,
            softening: 1e-2,
            init_range: 1.0,
            max_attempts: 100,
            energy_tolerance: 1e-2,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("g", self.g),
            ("dt", self.dt),
            ("softening", self.softening),
            ("init_range", self.init_range),
            ("energy_tolerance", self.energy_tolerance),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.steps == 0 || self.max_attempts == 0 {
            return Err(Error::Config("steps and max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NBodyConfig {
    pub masses: Vec<f64>,
    #[serde(flatten)]
    pub params: SimParams,
    pub seed: u64,
}

/// One integrated run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// `(steps, n_bodies, 2)`, state after each step.
    pub positions: Tensor<f64>,
    pub velocities: Tensor<f64>,
    pub initial_positions: Vec<[f64; 2]>,
    pub initial_velocities: Vec<[f64; 2]>,
    /// Total linear momentum after each step.
    pub momentum: Vec<[f64; 2]>,
    /// Total energy after each step.
    pub energy: Vec<f64>,
    /// `(p0, E0)` before the first step.
    pub initial_momentum: [f64; 2],
    pub initial_energy: f64,
    /// `sum_i m_i |v_i(0)|`, the scale for momentum drift.
    pub momentum_scale: f64,
    /// `|K(0)| + |U(0)|`, the scale for energy drift.
    pub energy_scale: f64,
    /// Initial conditions drawn, the accepted one included.
    pub attempts: usize,
}

impl TrajectoryRecord {
    pub fn n_bodies(&self) -> usize {
        self.initial_positions.len()
    }

    pub fn momentum_drift(&self) -> f64 {
        let p0 = self.initial_momentum;
        let worst = self
            .momentum
            .iter()
            .map(|p| ((p[0] - p0[0]).powi(2) + (p[1] - p0[1]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        worst / self.momentum_scale.max(f64::MIN_POSITIVE)
    }

    pub fn energy_drift(&self) -> f64 {
        let e0 = self.initial_energy;
        let worst = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        worst / self.energy_scale.max(f64::MIN_POSITIVE)
    }

    /// Position coordinate `axis` (0 = x, 1 = y) of `body` over time.
    pub fn coordinate(&self, body: usize, axis: usize) -> Vec<f64> {
        let n = self.n_bodies();
        self.positions
            .data()
            .chunks_exact(2 * n)
            .map(|row| row[2 * body + axis])
            .collect()
    }
}

struct State {
    r: Vec<[f64; 2]>,
    v: Vec<[f64; 2]>,
}

/// Pairwise softened accelerations, each pair force computed once and
/// applied with opposite signs.
fn accelerations(r: &[[f64; 2]], m: &[f64], g: f64, eps2: f64, out: &mut [[f64; 2]]) {
    out.iter_mut().for_each(|a| *a = [0.0, 0.0]);
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            let d = [r[j][0] - r[i][0], r[j][1] - r[i][1]];
            let s2 = d[0] * d[0] + d[1] * d[1] + eps2;
            let inv3 = g / (s2 * s2.sqrt());
            let f = [d[0] * inv3, d[1] * inv3];
            out[i][0] += m[j] * f[0];
            out[i][1] += m[j] * f[1];
            out[j][0] -= m[i] * f[0];
            out[j][1] -= m[i] * f[1];
        }
    }
}

fn energy(s: &State, m: &[f64], g: f64, eps2: f64) -> (f64, f64) {
    let kinetic = s
        .v
        .iter()
        .zip(m)
        .map(|(v, &mi)| 0.5 * mi * (v[0] * v[0] + v[1] * v[1]))
        .sum();
    let mut potential = 0.0;
    for i in 0..s.r.len() {
        for j in i + 1..s.r.len() {
            let d = [s.r[j][0] - s.r[i][0], s.r[j][1] - s.r[i][1]];
            potential -= g * m[i] * m[j] / (d[0] * d[0] + d[1] * d[1] + eps2).sqrt();
        }
    }
    (kinetic, potential)
}

fn momentum(v: &[[f64; 2]], m: &[f64]) -> [f64; 2] {
    v.iter()
        .zip(m)
        .fold([0.0, 0.0], |p, (v, &mi)| [p[0] + mi * v[0], p[1] + mi * v[1]])
}

/// Kick-drift-kick leapfrog from the given initial conditions.
fn integrate(masses: &[f64], p: &SimParams, r0: Vec<[f64; 2]>, v0: Vec<[f64; 2]>, attempts: usize) -> TrajectoryRecord {
    let n = masses.len();
    let eps2 = p.softening * p.softening;
    let mut s = State {
        r: r0.clone(),
        v: v0.clone(),
    };
    let (k0, u0) = energy(&s, masses, p.g, eps2);
    let mut a = vec![[0.0; 2]; n];
    accelerations(&s.r, masses, p.g, eps2, &mut a);
    let mut pos = Vec::with_capacity(p.steps * n * 2);
    let mut vel = Vec::with_capacity(p.steps * n * 2);
    let mut mom = Vec::with_capacity(p.steps);
    let mut en = Vec::with_capacity(p.steps);
    let h = 0.5 * p.dt;
    for _ in 0..p.steps {
        for i in 0..n {
            s.v[i][0] += h * a[i][0];
            s.v[i][1] += h * a[i][1];
            s.r[i][0] += p.dt * s.v[i][0];
            s.r[i][1] += p.dt * s.v[i][1];
        }
        accelerations(&s.r, masses, p.g, eps2, &mut a);
        for i in 0..n {
            s.v[i][0] += h * a[i][0];
            s.v[i][1] += h * a[i][1];
        }
        for i in 0..n {
            pos.extend_from_slice(&s.r[i]);
            vel.extend_from_slice(&s.v[i]);
        }
        mom.push(momentum(&s.v, masses));
        let (k, u) = energy(&s, masses, p.g, eps2);
        en.push(k + u);
    }
    TrajectoryRecord {
        positions: Tensor::from_parts(vec![p.steps, n, 2], pos),
        velocities: Tensor::from_parts(vec![p.steps, n, 2], vel),
        initial_momentum: momentum(&v0, masses),
        momentum_scale: v0
            .iter()
            .zip(masses)
            .map(|(v, &m)| m * (v[0] * v[0] + v[1] * v[1]).sqrt())
            .sum(),
        initial_positions: r0,
        initial_velocities: v0,
        momentum: mom,
        energy: en,
        initial_energy: k0 + u0,
        energy_scale: k0.abs() + u0.abs(),
        attempts,
    }
}

/// Integrates from explicit initial conditions (no resampling).
pub fn simulate_from(
    masses: &[f64],
    params: &SimParams,
    positions: Vec<[f64; 2]>,
    velocities: Vec<[f64; 2]>,
) -> Result<TrajectoryRecord> {
    params.validate()?;
    check_masses(masses)?;
    if positions.len() != masses.len() || velocities.len() != masses.len() {
        return Err(Error::Config("one position and velocity per mass required".into()));
    }
    Ok(integrate(masses, params, positions, velocities, 1))
}

fn check_masses(masses: &[f64]) -> Result<()> {
    if masses.is_empty() || masses.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
        return Err(Error::Config(format!("masses must be positive: {masses:?}")));
    }
    Ok(())
}

fn accept(t: &TrajectoryRecord, p: &SimParams) -> std::result::Result<(), String> {
    if !t.positions.is_finite() || !t.velocities.is_finite() {
        return Err("non-finite state".into());
    }
    let e = t.energy_drift();
    if !(e <= p.energy_tolerance) {
        return Err(format!("relative energy drift {e:.3e} exceeds {:.0e}", p.energy_tolerance));
    }
    Ok(())
}

fn simulate_with<R: Rng>(masses: &[f64], p: &SimParams, rng: &mut R) -> Result<TrajectoryRecord> {
    let mut last = String::new();
    for attempt in 1..=p.max_attempts {
        let mut draw = || -> Vec<[f64; 2]> {
            (0..masses.len())
                .map(|_| {
                    [
                        rng.random_range(-p.init_range..=p.init_range),
                        rng.random_range(-p.init_range..=p.init_range),
                    ]
                })
                .collect()
        };
        let r0 = draw();
        let v0 = draw();
        let t = integrate(masses, p, r0, v0, attempt);
        match accept(&t, p) {
            Ok(()) => return Ok(t),
            Err(reason) => {
                log::debug!("rejecting initial conditions (attempt {attempt}): {reason}");
                last = reason;
            }
        }
    }
    Err(Error::Simulation {
        attempts: p.max_attempts,
        reason: last,
    })
}

/// Simulates with uniformly drawn initial conditions, redrawing (up to
/// `max_attempts` times) when the state is non-finite or energy drifts
/// beyond tolerance.
pub fn simulate_nbody(cfg: &NBodyConfig) -> Result<TrajectoryRecord> {
    cfg.params.validate()?;
    check_masses(&cfg.masses)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    simulate_with(&cfg.masses, &cfg.params, &mut rng)
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-sample seed, independent of generation order.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    mix(mix(base) ^ index)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NBodyDatasetConfig {
    pub n_train: usize,
    pub n_val: usize,
    pub n_test: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub sim: SimParams,
}

impl Default for NBodyDatasetConfig {
    fn default() -> Self {
        NBodyDatasetConfig {
            n_train: 183,
            n_val: 183,
            n_test: 244,
            seed: 0,
            sim: SimParams::default(),
        }
    }
}

impl NBodyDatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_train == 0 || self.n_val == 0 || self.n_test == 0 {
            return Err(Error::Config("every split needs at least one sample".into()));
        }
        self.sim.validate()
    }
}

fn channels_of(a: &TrajectoryRecord, b: &TrajectoryRecord) -> [Vec<f64>; 8] {
    [
        a.coordinate(0, 0),
        a.coordinate(1, 0),
        a.coordinate(0, 1),
        a.coordinate(1, 1),
        b.coordinate(2, 0),
        b.coordinate(3, 0),
        b.coordinate(2, 1),
        b.coordinate(3, 1),
    ]
}

fn nbody_sample(class: usize, seed: u64, p: &SimParams) -> Result<Vec<f32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let four = simulate_with(&FOUR_BODY_MASSES, p, &mut rng)?;
    let chans = if class == 0 {
        channels_of(&four, &four)
    } else {
        let two = simulate_with(&TWO_BODY_MASSES, p, &mut rng)?;
        channels_of(&two, &four)
    };
    Ok(chans.iter().flatten().map(|&v| v as f32).collect())
}

/// The two-class benchmark. Splits are laid out train, val, test; within
/// each split classes alternate starting with class 0.
pub fn build_nbody_dataset(cfg: &NBodyDatasetConfig) -> Result<MvtsDataset> {
    cfg.validate()?;
    let mut plan = Vec::new();
    for (split, count) in [(Split::Train, cfg.n_train), (Split::Val, cfg.n_val), (Split::Test, cfg.n_test)] {
        plan.extend((0..count).map(|j| (split, j % 2)));
    }
    let samples: Vec<Vec<f32>> = plan
        .par_iter()
        .enumerate()
        .map(|(i, &(_, class))| {
            nbody_sample(class, derive_seed(cfg.seed, i as u64), &cfg.sim).map_err(|e| Error::Sample {
                index: i,
                reason: e.to_string(),
            })
        })
        .collect::<Result<_>>()?;
    let n = plan.len();
    let x = Tensor::new(vec![n, 8, cfg.sim.steps], samples.concat())?;
    let mut d = MvtsDataset {
        x,
        y: plan.iter().map(|&(_, c)| c).collect(),
        sample_ids: (0..n).map(|i| format!("nbody-{i:04}")).collect(),
        split: plan.iter().map(|&(s, _)| s).collect(),
        channel_names: NBODY_CHANNELS.iter().map(|s| s.to_string()).collect(),
        class_names: vec!["four_body".into(), "two_body_plus_four_body".into()],
        ground_truth_channels: BTreeMap::from([(1, BTreeSet::from([0, 1, 2, 3]))]),
        normalization: None,
    };
    d.fit_normalization()?;
    Ok(d)
}
