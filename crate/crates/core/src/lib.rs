//! Spatial media-based modulation (SMBM) link-level simulation.
//!
//! A source word selects a data symbol, a transmit antenna and an RF-mirror
//! state. The receiver sounds every (antenna, state, receiver) coefficient
//! with a unit-energy pilot, estimates the channel by LS or LMMSE, and detects
//! all three indices jointly by minimum Euclidean distance. Alongside the
//! simulator the crate evaluates the closed-form union bound on the average
//! bit error probability under perfect and estimated CSI.

pub mod abep;
pub mod bits;
pub mod channel;
pub mod cli;
pub mod constellation;
pub mod detection;
pub mod engine;
pub mod error;
pub mod estimation;
pub mod mapping;
pub mod quadrature;

pub use abep::{
    abep_union_bound, abep_value, e_bits, gamma_bar, pep_mra, pep_numeric_oracle, pep_sra, q_function, BoundParams,
    BoundResult, PairTerm, PepParams,
};
pub use bits::BitWord;
pub use channel::{draw_channel, noise_variance_for_snr, transmit, ChannelRealization, NoiseSpec};
pub use constellation::{build_constellation, Constellation, ModulationKind, ModulationSpec};
pub use detection::{count_bit_errors, detect_fast, detect_reference, Decision, FastDetector};
pub use engine::{
    abep_records, block_rng, run_abep_curve, run_block, run_mse_sweep, run_sweep, BlockTally, SweepConfig,
    SweepRecord,
};
pub use error::{Result, SmbmError};
pub use estimation::{
    analytic_mse, empirical_mse, estimate_lmmse, estimate_ls, sound_channel, ChannelEstimate, EstimatorKind,
    PilotObservation, PilotSpec,
};
pub use mapping::{map_source, spectral_efficiency, split_bits, unmap_decision, SmbmSymbol, SystemConfig, TransmitVector};
