//! System-level outcomes across receivers: union of decoded sets, packet
//! loss rate, throughput and energy efficiency.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sic::DecodedSet;

/// Two-sided 95% standard normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Per-frame system outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutcome {
    pub per_satellite: Vec<DecodedSet>,
    pub union_count: usize,
    pub n_users: usize,
}

/// Unions the decoded sets of all satellites.
///
/// Panics if `sets` is empty or the sets disagree on the user universe.
pub fn aggregate(sets: Vec<DecodedSet>) -> DecodeOutcome {
    assert!(!sets.is_empty(), "at least one satellite is required");
    let n_users = sets[0].universe();
    assert!(sets.iter().all(|s| s.universe() == n_users));
    let union_count = (0..n_users)
        .filter(|&u| sets.iter().any(|s| s.mask()[u]))
        .count();
    DecodeOutcome {
        per_satellite: sets,
        union_count,
        n_users,
    }
}

/// Pooled PLR with a 95% Wilson interval.
///
/// The interval treats users as independent trials, which they are not
/// within a frame, so it is nominal; see [`bootstrap_plr_ci`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlrEstimate {
    pub plr: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl PlrEstimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

/// Wilson score interval for `failures` out of `trials`.
pub fn wilson_interval(failures: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = failures as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// PLR from pooled `(lost, total)` user counts.
pub fn plr_from_counts(lost: u64, total: u64) -> Result<PlrEstimate> {
    if total == 0 {
        return Err(Error::EmptyInput("no users to estimate PLR from"));
    }
    let (ci_low, ci_high) = wilson_interval(lost, total, Z95);
    Ok(PlrEstimate {
        plr: lost as f64 / total as f64,
        ci_low,
        ci_high,
    })
}

/// `Σ(m - d) / Σ m` over the given frames.
pub fn plr_estimate(outcomes: &[DecodeOutcome]) -> Result<PlrEstimate> {
    if outcomes.is_empty() {
        return Err(Error::EmptyInput("no frame outcomes"));
    }
    let total: u64 = outcomes.iter().map(|o| o.n_users as u64).sum();
    let decoded: u64 = outcomes.iter().map(|o| o.union_count as u64).sum();
    plr_from_counts(total - decoded, total)
}

/// Percentile bootstrap over frames for the pooled PLR.
///
/// `frames` holds `(n_users, decoded)` per frame. Deterministic for a given
/// `seed`.
pub fn bootstrap_plr_ci(frames: &[(u64, u64)], resamples: usize, seed: u64) -> (f64, f64) {
    if frames.is_empty() || resamples == 0 {
        return (0.0, 1.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let (mut total, mut decoded) = (0u64, 0u64);
            for _ in 0..frames.len() {
                let (m, d) = frames[rng.random_range(0..frames.len())];
                total += m;
                decoded += d;
            }
            if total == 0 {
                0.0
            } else {
                (total - decoded) as f64 / total as f64
            }
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        let idx = ((resamples - 1) as f64 * q).round() as usize;
        stats[idx]
    };
    (pick(0.025), pick(0.975))
}

/// Standard error of the pooled PLR treating frames, not users, as the
/// independent units (ratio estimator). Users sharing a frame are correlated,
/// so this is wider than the binomial error whenever frames are busy.
///
/// `frames` holds `(n_users, decoded)` per frame.
pub fn frame_std_error(frames: &[(u64, u64)]) -> f64 {
    let f = frames.len();
    let total: u64 = frames.iter().map(|x| x.0).sum();
    if f < 2 || total == 0 {
        return 0.0;
    }
    let lost: u64 = frames.iter().map(|x| x.0 - x.1).sum();
    let plr = lost as f64 / total as f64;
    let mean_users = total as f64 / f as f64;
    let ss: f64 = frames
        .iter()
        .map(|&(m, d)| {
            let r = (m - d) as f64 - plr * m as f64;
            r * r
        })
        .sum();
    (ss / (f as f64 * (f - 1) as f64)).sqrt() / mean_users
}

/// Decoded users per slot, `G (1 - PLR)`.
pub fn throughput(load: f64, plr: f64) -> f64 {
    load * (1.0 - plr)
}

/// Average energy per user per frame, `ℓ̄ P T / 2`.
pub fn avg_energy(avg_degree: f64, peak_power: f64, slot_duration: f64) -> f64 {
    avg_degree * peak_power * slot_duration / 2.0
}

/// `η = 2 G (1 - PLR) / (ℓ̄ P T)`.
pub fn energy_efficiency(
    load: f64,
    plr: f64,
    avg_degree: f64,
    peak_power: f64,
    slot_duration: f64,
) -> f64 {
    2.0 * load * (1.0 - plr) / (avg_degree * peak_power * slot_duration)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn outcome(m: usize, d: usize) -> DecodeOutcome {
        aggregate(vec![DecodedSet::from_ids(m, 0..d)])
    }

    #[test]
    fn union_counts() {
        let a = DecodedSet::from_ids(5, [1, 2]);
        let b = DecodedSet::from_ids(5, [2, 3]);
        assert_eq!(aggregate(vec![a.clone(), b]).union_count, 3);
        assert_eq!(aggregate(vec![a.clone()]).union_count, 2);
        let e = DecodedSet::empty(5);
        assert_eq!(aggregate(vec![e.clone(), e]).union_count, 0);
    }

    #[test]
    fn pooled_plr() {
        assert_eq!(plr_estimate(&[outcome(10, 10)]).unwrap().plr, 0.0);
        let est = plr_estimate(&[outcome(100, 90), outcome(100, 95)]).unwrap();
        assert!((est.plr - 0.075).abs() < 1e-15);
        assert!(est.ci_low <= est.plr && est.plr <= est.ci_high);
        assert!(plr_estimate(&[]).is_err());
    }

    #[test]
    fn wilson_reference_value() {
        // 15/200, reference from statsmodels proportion_confint(method="wilson")
        let (lo, hi) = wilson_interval(15, 200, Z95);
        assert!((lo - 0.045_974_917).abs() < 1e-8, "{lo}");
        assert!((hi - 0.120_043_610).abs() < 1e-8, "{hi}");
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput(1.0, 0.0), 1.0);
        assert!((throughput(1.2, 0.25) - 0.9).abs() < 1e-15);
        assert_eq!(throughput(0.8, 1.0), 0.0);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(avg_energy(2.0, 1.0, 1.0), 1.0);
        assert!((avg_energy(3.9095, 1.0, 1.0) - 1.95475).abs() < 1e-12);
        assert_eq!(avg_energy(2.0, 2.0, 0.5), 1.0);
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(energy_efficiency(1.0, 0.0, 2.0, 1.0, 1.0), 1.0);
        assert_eq!(energy_efficiency(0.7, 1.0, 3.0, 2.0, 0.5), 0.0);
        let eta = energy_efficiency(0.8, 0.01, 3.9095, 1.0, 1.0);
        assert!((eta - 0.405167).abs() < 1e-6, "{eta}");
    }

    #[test]
    fn bootstrap_is_deterministic_and_brackets() {
        let frames: Vec<(u64, u64)> = (0..200).map(|i| (100, 90 + (i % 7) as u64)).collect();
        let a = bootstrap_plr_ci(&frames, 200, 3);
        assert_eq!(a, bootstrap_plr_ci(&frames, 200, 3));
        let pooled = {
            let t: u64 = frames.iter().map(|f| f.0).sum();
            let d: u64 = frames.iter().map(|f| f.1).sum();
            (t - d) as f64 / t as f64
        };
        assert!(a.0 <= pooled && pooled <= a.1);
    }

    #[test]
    fn frame_error_of_identical_frames_is_zero() {
        assert_eq!(frame_std_error(&[(10, 9); 50]), 0.0);
        assert_eq!(frame_std_error(&[(10, 9)]), 0.0);
    }

    #[test]
    fn frame_error_matches_hand_computation() {
        // plr = 3/20; residuals 2 - 1.5 and 1 - 1.5; mean users 10
        let se = frame_std_error(&[(10, 8), (10, 9)]);
        assert!((se - (0.5f64 / 2.0).sqrt() / 10.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn adding_a_satellite_never_shrinks_union(
            sets in prop::collection::vec(prop::collection::btree_set(0usize..30, 0..30), 1..5),
            extra in prop::collection::btree_set(0usize..30, 0..30),
        ) {
            let base: Vec<DecodedSet> = sets.iter().map(|s| DecodedSet::from_ids(30, s.iter().copied())).collect();
            let d = aggregate(base.clone()).union_count;
            let max_single = base.iter().map(|s| s.len()).max().unwrap();
            prop_assert!(d >= max_single && d <= 30);
            let mut more = base;
            more.push(DecodedSet::from_ids(30, extra));
            prop_assert!(aggregate(more).union_count >= d);
        }

        #[test]
        fn wilson_contains_point(lost in 0u64..1000, extra in 1u64..1000) {
            let total = lost + extra;
            let est = plr_from_counts(lost, total).unwrap();
            prop_assert!((0.0..=1.0).contains(&est.plr));
            prop_assert!(est.ci_low <= est.plr + 1e-15 && est.plr <= est.ci_high + 1e-15);
        }

        #[test]
        fn efficiency_scales_inverse_with_energy(
            g in 0.01f64..3.0, plr in 0.0f64..1.0, lbar in 1.0f64..8.0,
            p in 0.1f64..10.0, t in 0.1f64..10.0,
        ) {
            let unit = energy_efficiency(g, plr, lbar, 1.0, 1.0);
            let scaled = energy_efficiency(g, plr, lbar, p, t);
            prop_assert!((scaled * p * t - unit).abs() <= 1e-12 * unit.max(1.0));
        }
    }
}
