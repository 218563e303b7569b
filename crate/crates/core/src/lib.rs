//! Multi-receiver NOMA-IRSA random access: Monte Carlo simulation of finite
//! MAC frames and density-evolution analysis of asymptotically long ones.
//!
//! Users pick a replica count from a [`DegreeDistribution`], place replicas in
//! distinct slots, send each at a weak or strong power level, and reach each
//! satellite through an on-off fading channel. Every satellite runs SIC with
//! two-level capture; the system decodes the union of what the satellites
//! decode.

pub mod config;
pub mod de;
pub mod dist;
pub mod error;
pub mod frame;
pub mod harness;
pub mod metrics;
pub mod output;
pub mod power;
pub mod sic;

pub use config::{load_config, parse_config, LoadedConfig};
pub use de::{density_evolution, plr_bound, DeOptions, DeResult, Perspective};
pub use dist::{parse_distribution, sample_degree, DegreeDistribution};
pub use error::{Error, Result};
pub use frame::{generate_frame, FrameRealization, ScenarioConfig, UserTx};
pub use harness::{run_point, run_sweep, MetricsRecord, Mode, SimOptions, SweepSpec};
pub use metrics::{
    aggregate, energy_efficiency, frame_std_error, plr_estimate, throughput, DecodeOutcome,
};
pub use output::{emit_csv, read_csv, RunManifest};
pub use power::{build_power_config, derive_alpha, verify_capture, NomaPowerConfig, PowerLevel};
pub use sic::{sic_decode, slot_resolvable, DecodedSet};
