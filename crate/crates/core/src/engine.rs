//! Seeded SNR sweeps: channel estimation MSE, simulated BER and the union
//! bound per SNR point.
//!
//! Every block draws from its own ChaCha stream keyed by
//! `(master_seed, snr_index, block_id)`, so a block's outcome does not depend
//! on which worker ran it. Blocks are evaluated in parallel batches and then
//! folded strictly in `block_id` order; the stopping rule is applied during
//! that fold, so the records match a sequential run exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abep::{abep_value, BoundParams};
use crate::bits::BitWord;
use crate::channel::{draw_channel, noise_variance_for_snr, transmit, NoiseSpec};
use crate::constellation::Constellation;
use crate::detection::{label_errors, FastDetector};
use crate::error::{Result, SmbmError};
use crate::estimation::{
    analytic_mse, empirical_mse, estimate_lmmse, estimate_ls, sound_channel, ChannelEstimate, EstimatorKind,
    PilotSpec,
};
use crate::mapping::{map_source, SystemConfig};

pub const DEFAULT_BLOCK_LENGTH: usize = 100;
pub const DEFAULT_MIN_BIT_ERRORS: u64 = 200;
pub const DEFAULT_MAX_BLOCKS: u64 = 1_000_000;

/// Channel power; coefficients are normalised to unit variance.
pub const CHANNEL_POWER: f64 = 1.0;

/// Warning attached to records that stopped on `max_blocks`.
pub const WARN_MAX_BLOCKS: &str = "max_blocks_reached";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub system: SystemConfig,
    pub snr_grid_db: Vec<f64>,
    pub csi_mode: EstimatorKind,
    pub block_length: usize,
    pub min_bit_errors: u64,
    pub max_blocks: u64,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
}

impl SweepConfig {
    pub fn new(system: SystemConfig, snr_grid_db: Vec<f64>, csi_mode: EstimatorKind) -> Self {
        Self {
            system,
            snr_grid_db,
            csi_mode,
            block_length: DEFAULT_BLOCK_LENGTH,
            min_bit_errors: DEFAULT_MIN_BIT_ERRORS,
            max_blocks: DEFAULT_MAX_BLOCKS,
            master_seed: 0,
            workers: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        let bad = |field, reason: &str| {
            Err(SmbmError::InvalidConfig {
                field,
                reason: reason.to_string(),
            })
        };
        if self.block_length == 0 {
            return bad("block_length", "block length must be at least 1");
        }
        if self.min_bit_errors == 0 {
            return bad("min_errors", "minimum bit errors must be at least 1");
        }
        if self.max_blocks == 0 {
            return bad("max_blocks", "maximum block count must be at least 1");
        }
        if self.snr_grid_db.is_empty() {
            return bad("snr", "SNR grid is empty");
        }
        if self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return bad("snr", "SNR values must be finite");
        }
        if self.snr_grid_db.windows(2).any(|w| w[1] <= w[0]) {
            return bad("snr", "SNR grid must be strictly increasing");
        }
        Ok(())
    }

    fn bound_params(&self, snr_db: f64) -> BoundParams {
        let noise = noise_variance_for_snr(snr_db, &self.system);
        BoundParams {
            noise_variance: noise,
            error_variance: analytic_mse(self.csi_mode, PilotSpec::default(), noise, CHANNEL_POWER),
            channel_power: CHANNEL_POWER,
        }
    }
}

/// One row of sweep output. Fields that a mode does not produce are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub snr_db: f64,
    pub mse_empirical: Option<f64>,
    pub mse_analytic: Option<f64>,
    pub ber: Option<f64>,
    pub bit_errors: Option<u64>,
    pub bits_simulated: Option<u64>,
    pub abep_bound: Option<f64>,
    pub blocks: u64,
    /// Standard error of `ber` from the spread of per-block error counts.
    /// Errors cluster within a block, so this is the honest error bar.
    pub ber_block_std_error: Option<f64>,
    pub warning: Option<String>,
}

impl SweepRecord {
    fn empty(snr_db: f64) -> Self {
        Self {
            snr_db,
            mse_empirical: None,
            mse_analytic: None,
            ber: None,
            bit_errors: None,
            bits_simulated: None,
            abep_bound: None,
            blocks: 0,
            ber_block_std_error: None,
            warning: None,
        }
    }

    /// Standard error of `ber` treating errors as a Poisson count.
    pub fn ber_standard_error(&self) -> Option<f64> {
        let (e, n) = (self.bit_errors?, self.bits_simulated?);
        (n > 0).then(|| (e as f64).sqrt() / n as f64)
    }
}

/// Per-block tallies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockTally {
    pub bit_errors: u64,
    pub bits: u64,
    pub mse: f64,
}

/// Random stream of one block.
pub fn block_rng(master_seed: u64, snr_index: usize, block_id: u64) -> ChaCha8Rng {
    debug_assert!(block_id < 1 << 40 && (snr_index as u64) < 1 << 24);
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((snr_index as u64) << 40) | block_id);
    rng
}

/// Sweep state shared by all blocks of one run.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    sweep: &'a SweepConfig,
    constellation: Constellation,
    pilot: PilotSpec,
}

impl<'a> Simulator<'a> {
    pub fn new(sweep: &'a SweepConfig) -> Result<Self> {
        sweep.validate()?;
        Ok(Self {
            sweep,
            constellation: Constellation::new(sweep.system.modulation)?,
            pilot: PilotSpec::default(),
        })
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    fn estimate<R: Rng>(&self, h: &crate::channel::ChannelRealization, noise: f64, rng: &mut R) -> (ChannelEstimate, f64) {
        let r = match self.sweep.csi_mode {
            EstimatorKind::Perfect => return (ChannelEstimate::perfect(h), 0.0),
            _ => sound_channel(h, self.pilot, noise, rng),
        };
        let est = match self.sweep.csi_mode {
            EstimatorKind::Ls => estimate_ls(&r, self.pilot),
            _ => estimate_lmmse(&r, self.pilot, CHANNEL_POWER),
        };
        let mse = empirical_mse(est.coefficients(), h.coefficients()).expect("same layout");
        (est, mse)
    }

    /// Channel draw, optional sounding and estimation; returns the MSE sample.
    pub fn estimation_block(&self, snr_index: usize, block_id: u64) -> f64 {
        let cfg = &self.sweep.system;
        let noise = noise_variance_for_snr(self.sweep.snr_grid_db[snr_index], cfg);
        let mut rng = block_rng(self.sweep.master_seed, snr_index, block_id);
        let h = draw_channel(cfg, CHANNEL_POWER, &mut rng);
        self.estimate(&h, noise, &mut rng).1
    }

    /// Full block: channel, pilots, then `block_length` data symbols.
    pub fn run_block(&self, snr_index: usize, block_id: u64) -> BlockTally {
        let cfg = &self.sweep.system;
        let c = &self.constellation;
        let noise = noise_variance_for_snr(self.sweep.snr_grid_db[snr_index], cfg);
        let noise_spec = NoiseSpec::new(noise).expect("finite SNR gives positive noise");
        let mut rng = block_rng(self.sweep.master_seed, snr_index, block_id);
        let h = draw_channel(cfg, CHANNEL_POWER, &mut rng);
        let (est, mse) = self.estimate(&h, noise, &mut rng);
        let detector = FastDetector::new(&est, c, cfg);

        let eta = cfg.eta();
        let mask = (1u32 << eta) - 1;
        let mut bit_errors = 0u64;
        for _ in 0..self.sweep.block_length {
            let word = rng.random::<u32>() & mask;
            let (sym, x) = map_source(BitWord::new(word, eta), cfg, c).expect("word fits eta");
            let y = transmit(&h, &sym, x.value, noise_spec, &mut rng);
            let decision = detector.detect(&y);
            bit_errors += label_errors(word, &decision, cfg, c) as u64;
        }
        BlockTally {
            bit_errors,
            bits: self.sweep.block_length as u64 * eta as u64,
            mse,
        }
    }

    fn simulate_point(&self, snr_index: usize) -> SweepRecord {
        let sweep = self.sweep;
        let snr_db = sweep.snr_grid_db[snr_index];
        let mut rec = SweepRecord::empty(snr_db);
        let mut errors = 0u64;
        let mut bits = 0u64;
        let mut mse_sum = 0.0;
        let mut sq_errors = 0.0;
        let mut next = 0u64;
        let mut batch = rayon::current_num_threads().max(1) as u64;
        'outer: while next < sweep.max_blocks {
            let end = (next + batch).min(sweep.max_blocks);
            let tallies: Vec<BlockTally> = (next..end)
                .into_par_iter()
                .map(|b| self.run_block(snr_index, b))
                .collect();
            for t in tallies {
                errors += t.bit_errors;
                bits += t.bits;
                sq_errors += (t.bit_errors as f64).powi(2);
                mse_sum += t.mse;
                next += 1;
                if errors >= sweep.min_bit_errors {
                    break 'outer;
                }
            }
            batch = (batch * 2).min(4096);
        }
        rec.blocks = next;
        rec.bit_errors = Some(errors);
        rec.bits_simulated = Some(bits);
        rec.ber = Some(errors as f64 / bits as f64);
        if next > 1 {
            let n = next as f64;
            let mean = errors as f64 / n;
            let var = (sq_errors - n * mean * mean).max(0.0) / (n - 1.0);
            rec.ber_block_std_error = Some((var * n).sqrt() / bits as f64);
        }
        if sweep.csi_mode != EstimatorKind::Perfect {
            let noise = noise_variance_for_snr(snr_db, &sweep.system);
            rec.mse_empirical = Some(mse_sum / next as f64);
            rec.mse_analytic = Some(analytic_mse(sweep.csi_mode, self.pilot, noise, CHANNEL_POWER));
        }
        rec.abep_bound = Some(abep_value(&sweep.system, &self.constellation, &sweep.bound_params(snr_db)));
        if errors < sweep.min_bit_errors {
            rec.warning = Some(WARN_MAX_BLOCKS.to_string());
        }
        rec
    }
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SmbmError::InvalidConfig {
            field: "workers",
            reason: e.to_string(),
        })?;
    Ok(pool.install(f))
}

/// Deterministic tallies of one block, see [`Simulator::run_block`].
pub fn run_block(sweep: &SweepConfig, snr_index: usize, block_id: u64) -> Result<BlockTally> {
    if snr_index >= sweep.snr_grid_db.len() {
        return Err(SmbmError::IndexOutOfRange {
            what: "snr",
            index: snr_index,
            limit: sweep.snr_grid_db.len(),
        });
    }
    Ok(Simulator::new(sweep)?.run_block(snr_index, block_id))
}

/// BER simulation with MSE (estimated CSI only) and the union bound.
pub fn run_sweep(sweep: &SweepConfig) -> Result<Vec<SweepRecord>> {
    let sim = Simulator::new(sweep)?;
    with_workers(sweep.workers, || {
        (0..sweep.snr_grid_db.len())
            .map(|i| sim.simulate_point(i))
            .collect()
    })
}

/// Estimation-only sweep over `draws` channel realizations per SNR point.
pub fn run_mse_sweep(sweep: &SweepConfig, draws: u64) -> Result<Vec<SweepRecord>> {
    let sim = Simulator::new(sweep)?;
    if sweep.csi_mode == EstimatorKind::Perfect {
        return Err(SmbmError::InvalidConfig {
            field: "csi",
            reason: "MSE sweeps need an estimator (ls or lmmse)".into(),
        });
    }
    if draws == 0 {
        return Err(SmbmError::InvalidConfig {
            field: "draws",
            reason: "at least one channel draw is required".into(),
        });
    }
    with_workers(sweep.workers, || {
        sweep
            .snr_grid_db
            .iter()
            .enumerate()
            .map(|(i, &snr_db)| {
                let samples: Vec<f64> = (0..draws)
                    .into_par_iter()
                    .map(|b| sim.estimation_block(i, b))
                    .collect();
                let noise = noise_variance_for_snr(snr_db, &sweep.system);
                let mut rec = SweepRecord::empty(snr_db);
                rec.blocks = draws;
                rec.mse_empirical = Some(samples.iter().sum::<f64>() / draws as f64);
                rec.mse_analytic = Some(analytic_mse(sweep.csi_mode, sim.pilot, noise, CHANNEL_POWER));
                rec
            })
            .collect()
    })
}

/// Union bound at every grid point, with `sigma_e^2` from the CSI mode.
pub fn run_abep_curve(sweep: &SweepConfig) -> Result<Vec<(f64, f64)>> {
    sweep.validate()?;
    let c = Constellation::new(sweep.system.modulation)?;
    Ok(sweep
        .snr_grid_db
        .iter()
        .map(|&snr| (snr, abep_value(&sweep.system, &c, &sweep.bound_params(snr))))
        .collect())
}

/// Bound-only records, for the `abep` CLI mode.
pub fn abep_records(sweep: &SweepConfig) -> Result<Vec<SweepRecord>> {
    Ok(run_abep_curve(sweep)?
        .into_iter()
        .map(|(snr, abep)| {
            let mut rec = SweepRecord::empty(snr);
            rec.abep_bound = Some(abep);
            rec
        })
        .collect())
}
