//! MAC-frame realizations: user population, replica placement, power labels
//! and per-satellite on-off fading erasures.
//!
//! Randomness is a pure function of `(master_seed, frame_index)`. The frame
//! seed is `mix_seed(master_seed, frame_index)` (a SplitMix64-based mixer) and
//! feeds a ChaCha8 generator. Stream 0 of that generator draws degrees, slots
//! and power labels; stream `j + 1` draws the erasures seen by satellite `j`.
//! Because each satellite has its own stream, the first `k` satellites of a
//! frame are the same no matter how many satellites are configured.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dist::DegreeDistribution;
use crate::error::{invalid, Error, Result};
use crate::power::{NomaPowerConfig, PowerLevel};

pub const DEFAULT_MAX_SIC_ITERS: usize = 100;

/// SplitMix64 output function.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Combines a master seed and an index into an independent 64-bit seed.
pub fn mix_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(index))
}

/// One simulated operating point.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub n_slots: usize,
    pub load: f64,
    pub epsilon: f64,
    pub n_satellites: usize,
    pub dist: DegreeDistribution,
    pub power: NomaPowerConfig,
    pub max_sic_iters: usize,
    pub n_frames: usize,
    pub master_seed: u64,
}

impl ScenarioConfig {
    /// Config with defaults for everything but the essentials: unit peak
    /// power, 100 SIC passes, 1000 frames, seed 0.
    pub fn new(
        dist: DegreeDistribution,
        n_slots: usize,
        load: f64,
        epsilon: f64,
        n_satellites: usize,
    ) -> Self {
        Self {
            n_slots,
            load,
            epsilon,
            n_satellites,
            dist,
            power: NomaPowerConfig::default(),
            max_sic_iters: DEFAULT_MAX_SIC_ITERS,
            n_frames: 1000,
            master_seed: 0,
        }
    }

    pub fn with_frames(mut self, n_frames: usize) -> Self {
        self.n_frames = n_frames;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    /// Number of users per frame, `round(G·n)`.
    pub fn n_users(&self) -> usize {
        (self.load * self.n_slots as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_slots == 0 {
            return Err(invalid("n_slots", "must be positive"));
        }
        if !(self.load.is_finite() && self.load > 0.0) {
            return Err(invalid("load", format!("must be > 0, got {}", self.load)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(invalid(
                "epsilon",
                format!("epsilon out of [0,1]: {}", self.epsilon),
            ));
        }
        if self.n_satellites == 0 {
            return Err(invalid("n_satellites", "must be at least 1"));
        }
        if self.max_sic_iters == 0 {
            return Err(invalid("max_sic_iters", "must be positive"));
        }
        if self.n_frames == 0 {
            return Err(invalid("n_frames", "must be positive"));
        }
        let max_degree = self.dist.max_degree();
        if max_degree as usize > self.n_slots {
            return Err(Error::DegreeExceedsFrame {
                max_degree,
                n_slots: self.n_slots,
            });
        }
        Ok(())
    }
}

/// Replicas of one user: slot indices and the power label of each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserTx {
    pub slots: Vec<u32>,
    pub powers: Vec<PowerLevel>,
}

impl UserTx {
    pub fn degree(&self) -> usize {
        self.slots.len()
    }

    pub fn replicas(&self) -> impl Iterator<Item = (u32, PowerLevel)> + '_ {
        self.slots.iter().copied().zip(self.powers.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRealization {
    pub n_slots: usize,
    pub users: Vec<UserTx>,
    /// `erasure_masks[j][u]` is true when user `u` is erased at satellite `j`.
    pub erasure_masks: Vec<Vec<bool>>,
}

impl FrameRealization {
    /// Builds a frame from explicit placements. Intended for hand-crafted
    /// test frames; panics if a user's slot and power lists disagree.
    pub fn from_parts(n_slots: usize, users: Vec<UserTx>, erasure_masks: Vec<Vec<bool>>) -> Self {
        for u in &users {
            assert_eq!(u.slots.len(), u.powers.len());
            assert!(u.slots.iter().all(|&s| (s as usize) < n_slots));
        }
        for mask in &erasure_masks {
            assert_eq!(mask.len(), users.len());
        }
        Self {
            n_slots,
            users,
            erasure_masks,
        }
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_satellites(&self) -> usize {
        self.erasure_masks.len()
    }

    pub fn is_erased(&self, satellite: usize, user: usize) -> bool {
        self.erasure_masks[satellite][user]
    }
}

/// Generates frame `frame_index` of `config`.
pub fn generate_frame(config: &ScenarioConfig, frame_index: u64) -> Result<FrameRealization> {
    config.validate()?;
    Ok(generate_unchecked(config, frame_index))
}

pub(crate) fn generate_unchecked(config: &ScenarioConfig, frame_index: u64) -> FrameRealization {
    let n = config.n_slots;
    let m = config.n_users();
    let seed = mix_seed(config.master_seed, frame_index);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let users = (0..m)
        .map(|_| {
            let degree = config.dist.sample(&mut rng) as usize;
            let slots: Vec<u32> = index::sample(&mut rng, n, degree)
                .into_iter()
                .map(|s| s as u32)
                .collect();
            let powers = (0..degree)
                .map(|_| {
                    if rng.random::<bool>() {
                        PowerLevel::Strong
                    } else {
                        PowerLevel::Weak
                    }
                })
                .collect();
            UserTx { slots, powers }
        })
        .collect();

    let erasure_masks = (0..config.n_satellites)
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(j as u64 + 1);
            (0..m).map(|_| rng.random_bool(config.epsilon)).collect()
        })
        .collect();

    FrameRealization {
        n_slots: n,
        users,
        erasure_masks,
    }
}
