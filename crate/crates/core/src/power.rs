//! Two-level power-domain NOMA design.
//!
//! Every replica is sent at either the weak level `p1 = αP` or the strong
//! level `p2 = (1-α)P`. The levels are chosen so that, with noise power
//! normalized to 1, both of the following reach the target SINR `γ` exactly:
//!
//! * a weak replica alone in a slot: `p1 / 1`,
//! * a strong replica colliding with one weak replica: `p2 / (p1 + 1)`.
//!
//! This gives `weak = γ`, `strong = γ(γ+1)` and, from `weak + strong = P`,
//! `γ = √(P+1) - 1` and `α = (√(P+1) - 1) / P`.
//!
//! The noise normalization is implied rather than stated by the model; it is
//! the only choice under which the level equations and `α` agree.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

const CAPTURE_SLACK: f64 = 1e-12;

/// Transmit power label of one replica.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PowerLevel {
    Weak,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NomaPowerConfig {
    pub peak_power: f64,
    pub alpha: f64,
    pub weak: f64,
    pub strong: f64,
    pub target_sinr: f64,
}

/// SINRs of the two canonical decoding cases under unit noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaptureCheck {
    pub sinr_weak_alone: f64,
    pub sinr_strong_vs_weak: f64,
    pub feasible: bool,
}

fn check_peak(peak_power: f64) -> Result<()> {
    if peak_power.is_finite() && peak_power > 0.0 {
        Ok(())
    } else {
        Err(invalid(
            "peak_power",
            format!("must be > 0, got {peak_power}"),
        ))
    }
}

/// `(√(P+1) - 1) / P`, evaluated as `1 / (√(P+1) + 1)` to avoid cancellation
/// at small `P`.
pub fn derive_alpha(peak_power: f64) -> Result<f64> {
    check_peak(peak_power)?;
    Ok(1.0 / ((peak_power + 1.0).sqrt() + 1.0))
}

pub fn build_power_config(peak_power: f64) -> Result<NomaPowerConfig> {
    let alpha = derive_alpha(peak_power)?;
    let weak = alpha * peak_power;
    Ok(NomaPowerConfig {
        peak_power,
        alpha,
        weak,
        strong: (1.0 - alpha) * peak_power,
        target_sinr: weak,
    })
}

pub fn verify_capture(config: &NomaPowerConfig) -> CaptureCheck {
    let sinr_weak_alone = config.weak / 1.0;
    let sinr_strong_vs_weak = config.strong / (config.weak + 1.0);
    let gamma = config.target_sinr;
    CaptureCheck {
        sinr_weak_alone,
        sinr_strong_vs_weak,
        feasible: sinr_weak_alone >= gamma - CAPTURE_SLACK
            && sinr_strong_vs_weak >= gamma - CAPTURE_SLACK,
    }
}

impl NomaPowerConfig {
    pub fn new(peak_power: f64) -> Result<Self> {
        build_power_config(peak_power)
    }

    pub fn level(&self, level: PowerLevel) -> f64 {
        match level {
            PowerLevel::Weak => self.weak,
            PowerLevel::Strong => self.strong,
        }
    }

    /// SINR of `target` in a slot whose received replicas are `slot`
    /// (`target` must be one of them), unit noise.
    pub fn sinr(&self, target: PowerLevel, slot: &[PowerLevel]) -> f64 {
        let total: f64 = slot.iter().map(|&l| self.level(l)).sum();
        let signal = self.level(target);
        signal / (total - signal + 1.0)
    }
}

impl Default for NomaPowerConfig {
    fn default() -> Self {
        build_power_config(1.0).expect("unit peak power is valid")
    }
}
