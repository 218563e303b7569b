//! Monte Carlo experiment controller.
//!
//! Frames are the unit of parallelism. Each frame is a pure function of
//! `(master_seed, frame_index)`, and per-frame integer tallies are collected
//! in frame order before summing, so results do not depend on the number of
//! worker threads.
//!
//! Because satellite `j` always draws its erasures from its own stream, one
//! simulation with `k_max` satellites yields the records for every `k ≤ k_max`
//! at once, and those records match what separate runs would produce.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::de::{density_evolution, plr_bound, DeOptions};
use crate::error::{invalid, Error, Result};
use crate::frame::{generate_unchecked, mix_seed, ScenarioConfig};
use crate::metrics::{bootstrap_plr_ci, energy_efficiency, plr_from_counts, throughput};
use crate::sic::SatelliteView;

/// Target number of pooled users per simulated point when the frame count
/// is not given explicitly.
pub const DEFAULT_POOLED_USERS: u64 = 1_000_000;

const BOOTSTRAP_SALT: u64 = 0xB007_57A9_C0FF_EE00;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Analyze,
}

/// One output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub mode: Mode,
    pub load: f64,
    pub k: usize,
    pub epsilon: f64,
    pub n_slots: usize,
    pub dist: String,
    pub frames: u64,
    pub users_total: u64,
    pub users_decoded: u64,
    pub plr: f64,
    pub plr_ci_low: f64,
    pub plr_ci_high: f64,
    pub plr_bound: f64,
    pub p_eps: f64,
    pub throughput: f64,
    pub eta: f64,
    /// Frame-level bootstrap 95% interval; simulated points only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plr_bootstrap_ci: Option<(f64, f64)>,
}

impl MetricsRecord {
    /// Sort key: load, then `k`, then mode (simulate before analyze).
    pub fn order_key(&self) -> (f64, usize, Mode) {
        (self.load, self.k, self.mode)
    }

    /// Binomial standard error of the pooled PLR, `√(plr (1-plr) / users)`.
    pub fn plr_std_error(&self) -> f64 {
        if self.users_total == 0 {
            return 0.0;
        }
        (self.plr * (1.0 - self.plr) / self.users_total as f64).sqrt()
    }
}

/// Knobs shared by every point of a run.
#[derive(Debug, Clone)]
pub struct SimOptions {
    pub de: DeOptions,
    pub slot_duration: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub bootstrap_resamples: usize,
    /// Label written to the `dist` column; defaults to the polynomial text.
    pub dist_label: Option<String>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            de: DeOptions::default(),
            slot_duration: 1.0,
            workers: None,
            bootstrap_resamples: 200,
            dist_label: None,
        }
    }
}

/// A load sweep.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// Everything but the load and satellite count, which the sweep sets.
    pub base: ScenarioConfig,
    pub loads: Vec<f64>,
    pub modes: Vec<Mode>,
    pub k_values: Vec<usize>,
    /// Frames per simulated point; `None` picks enough for
    /// [`DEFAULT_POOLED_USERS`] / k_min users at the smallest load.
    pub n_frames: Option<usize>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.loads.is_empty() {
            return Err(invalid("loads", "must not be empty"));
        }
        if self.loads.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(invalid("loads", "all loads must be > 0"));
        }
        if self.loads.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("loads", "must be strictly increasing"));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(invalid("k", "receiver counts must be >= 1"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "must not be empty"));
        }
        if self.n_frames == Some(0) {
            return Err(invalid("n_frames", "must be positive"));
        }
        let mut probe = self.base.clone();
        probe.load = self.loads[0];
        probe.n_satellites = self.k_max();
        probe.validate()?;
        if self.modes.contains(&Mode::Simulate) && probe.n_users() == 0 {
            return Err(invalid(
                "loads",
                format!(
                    "load {} gives no users in a {}-slot frame",
                    self.loads[0], self.base.n_slots
                ),
            ));
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.k_values.iter().copied().max().unwrap_or(1)
    }

    /// Frames used for every simulated point of this sweep.
    pub fn frames_per_point(&self) -> usize {
        if let Some(n) = self.n_frames {
            return n;
        }
        let k_min = self.k_values.iter().copied().min().unwrap_or(1) as u64;
        let m = ((self.loads[0] * self.base.n_slots as f64).round() as u64).max(1);
        DEFAULT_POOLED_USERS.div_ceil(k_min * m) as usize
    }

    fn sorted_modes(&self) -> Vec<Mode> {
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        modes
    }

    fn sorted_ks(&self) -> Vec<usize> {
        let mut ks = self.k_values.clone();
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

/// Per-frame counts: users in the frame and the union of decoded users over
/// the first `k` satellites, for `k = 1..=k_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameTally {
    pub users: u32,
    pub decoded_by_k: Vec<u32>,
}

/// Generates and decodes one frame at every satellite.
pub fn tally_frame(config: &ScenarioConfig, frame_index: u64) -> FrameTally {
    let frame = generate_unchecked(config, frame_index);
    let m = frame.n_users();
    let mut union = vec![false; m];
    let mut count = 0u32;
    let mut decoded_by_k = Vec::with_capacity(frame.n_satellites());
    let order: Vec<usize> = (0..frame.n_slots).collect();
    for j in 0..frame.n_satellites() {
        let mut view = SatelliteView::new(&frame, j);
        view.run(&order, config.max_sic_iters);
        for u in view.decoded().iter() {
            if !union[u] {
                union[u] = true;
                count += 1;
            }
        }
        decoded_by_k.push(count);
    }
    FrameTally {
        users: m as u32,
        decoded_by_k,
    }
}

fn with_workers<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(0) => Err(invalid("threads", "must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::ThreadPool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Runs `config.n_frames` frames and returns their tallies in frame order.
pub fn simulate_frames(config: &ScenarioConfig, workers: Option<usize>) -> Result<Vec<FrameTally>> {
    config.validate()?;
    with_workers(workers, || {
        (0..config.n_frames as u64)
            .into_par_iter()
            .map(|f| tally_frame(config, f))
            .collect()
    })
}

fn dist_label(config: &ScenarioConfig, opts: &SimOptions) -> String {
    opts.dist_label
        .clone()
        .unwrap_or_else(|| config.dist.to_string())
}

/// DE-backed record: the `k`-receiver bound stands in for the PLR.
pub fn analyze_point(
    config: &ScenarioConfig,
    k: usize,
    opts: &SimOptions,
) -> Result<MetricsRecord> {
    let de = density_evolution(config.load, config.epsilon, &config.dist, &opts.de)?;
    let bound = plr_bound(de.p_eps, config.epsilon, k as u32);
    Ok(MetricsRecord {
        mode: Mode::Analyze,
        load: config.load,
        k,
        epsilon: config.epsilon,
        n_slots: config.n_slots,
        dist: dist_label(config, opts),
        frames: 0,
        users_total: 0,
        users_decoded: 0,
        plr: bound,
        plr_ci_low: bound,
        plr_ci_high: bound,
        plr_bound: bound,
        p_eps: de.p_eps,
        throughput: throughput(config.load, bound),
        eta: energy_efficiency(
            config.load,
            bound,
            config.dist.avg_degree(),
            config.power.peak_power,
            opts.slot_duration,
        ),
        plr_bootstrap_ci: None,
    })
}

/// Builds the simulated record for the first `k` satellites of `tallies`.
pub fn simulated_record(
    config: &ScenarioConfig,
    tallies: &[FrameTally],
    k: usize,
    opts: &SimOptions,
) -> Result<MetricsRecord> {
    if tallies.is_empty() {
        return Err(Error::EmptyInput("no frames simulated"));
    }
    let per_frame: Vec<(u64, u64)> = tallies
        .iter()
        .map(|t| (t.users as u64, t.decoded_by_k[k - 1] as u64))
        .collect();
    let users_total: u64 = per_frame.iter().map(|f| f.0).sum();
    let users_decoded: u64 = per_frame.iter().map(|f| f.1).sum();
    let est = plr_from_counts(users_total - users_decoded, users_total)?;
    let boot = bootstrap_plr_ci(
        &per_frame,
        opts.bootstrap_resamples,
        mix_seed(config.master_seed ^ BOOTSTRAP_SALT, k as u64),
    );
    let de = density_evolution(config.load, config.epsilon, &config.dist, &opts.de)?;
    Ok(MetricsRecord {
        mode: Mode::Simulate,
        load: config.load,
        k,
        epsilon: config.epsilon,
        n_slots: config.n_slots,
        dist: dist_label(config, opts),
        frames: tallies.len() as u64,
        users_total,
        users_decoded,
        plr: est.plr,
        plr_ci_low: est.ci_low,
        plr_ci_high: est.ci_high,
        plr_bound: plr_bound(de.p_eps, config.epsilon, k as u32),
        p_eps: de.p_eps,
        throughput: throughput(config.load, est.plr),
        eta: energy_efficiency(
            config.load,
            est.plr,
            config.dist.avg_degree(),
            config.power.peak_power,
            opts.slot_duration,
        ),
        plr_bootstrap_ci: Some(boot),
    })
}

/// Simulates `config` and reports its PLR at `k = config.n_satellites`.
pub fn run_point(config: &ScenarioConfig, opts: &SimOptions) -> Result<MetricsRecord> {
    let tallies = simulate_frames(config, opts.workers)?;
    simulated_record(config, &tallies, config.n_satellites, opts)
}

/// Simulates once with `max(k_values)` satellites and reports every `k`.
pub fn run_point_multi(
    config: &ScenarioConfig,
    k_values: &[usize],
    opts: &SimOptions,
) -> Result<Vec<MetricsRecord>> {
    let mut cfg = config.clone();
    cfg.n_satellites = k_values.iter().copied().max().unwrap_or(1);
    let tallies = simulate_frames(&cfg, opts.workers)?;
    k_values
        .iter()
        .map(|&k| simulated_record(&cfg, &tallies, k, opts))
        .collect()
}

/// Runs every `(load, k, mode)` combination, in CSV row order.
pub fn run_sweep(spec: &SweepSpec, opts: &SimOptions) -> Result<Vec<MetricsRecord>> {
    spec.validate()?;
    let modes = spec.sorted_modes();
    let ks = spec.sorted_ks();
    let frames = spec.frames_per_point();
    let mut records = Vec::new();
    for &load in &spec.loads {
        let mut cfg = spec.base.clone();
        cfg.load = load;
        cfg.n_frames = frames;
        cfg.n_satellites = spec.k_max();

        let simulated = if modes.contains(&Mode::Simulate) {
            log::info!("simulating G = {load} over {frames} frames");
            run_point_multi(&cfg, &ks, opts)?
        } else {
            Vec::new()
        };
        for (i, &k) in ks.iter().enumerate() {
            for mode in &modes {
                match mode {
                    Mode::Simulate => records.push(simulated[i].clone()),
                    Mode::Analyze => records.push(analyze_point(&cfg, k, opts)?),
                }
            }
        }
    }
    records.sort_by(|a, b| {
        let (ga, ka, ma) = a.order_key();
        let (gb, kb, mb) = b.order_key();
        ga.total_cmp(&gb).then(ka.cmp(&kb)).then(ma.cmp(&mb))
    });
    Ok(records)
}
