//! Block-fading Rayleigh channel and the received-signal model.
//!
//! Coefficients are stored flat with the receive antenna outermost, then
//! mirror state, then transmit antenna: `h[(i-1) L + (k-1) Nt + (j-1)]`
//! with `L = Nt 2^Nrf`. Row `i` of that layout is row `i` of
//! `G = [G^1 ... G^K]`, so the flat vector is `G` in row-major order and
//! the column `h_j^k` is the strided column `m - 1` of `G`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Result, SmbmError};
use crate::mapping::{SmbmSymbol, SystemConfig};

/// Circularly-symmetric complex Gaussian sample with total variance `variance`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let sd = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_tx: usize,
    n_rx: usize,
    n_states: usize,
    coefficients: Vec<Complex64>,
    channel_power: f64,
}

impl ChannelRealization {
    pub fn from_coefficients(cfg: &SystemConfig, coefficients: Vec<Complex64>, channel_power: f64) -> Result<Self> {
        if coefficients.len() != cfg.n_coefficients() {
            return Err(SmbmError::LengthMismatch {
                left: coefficients.len(),
                right: cfg.n_coefficients(),
            });
        }
        Ok(Self {
            n_tx: cfg.n_tx,
            n_rx: cfg.n_rx,
            n_states: cfg.n_states(),
            coefficients,
            channel_power,
        })
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn channel_power(&self) -> f64 {
        self.channel_power
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_coords(&self) -> usize {
        self.n_tx * self.n_states
    }

    /// Flat index of `h_{i,j}^k` (all 1-based).
    pub fn flat_index(&self, i: usize, j: usize, k: usize) -> usize {
        (i - 1) * self.n_coords() + (k - 1) * self.n_tx + (j - 1)
    }

    pub fn coefficient(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.coefficients[self.flat_index(i, j, k)]
    }

    /// `h_j^k = [h_{1,j}^k, ..., h_{Nr,j}^k]`.
    pub fn column(&self, j: usize, k: usize) -> Result<Vec<Complex64>> {
        if j == 0 || j > self.n_tx {
            return Err(SmbmError::IndexOutOfRange {
                what: "antenna",
                index: j,
                limit: self.n_tx,
            });
        }
        if k == 0 || k > self.n_states {
            return Err(SmbmError::IndexOutOfRange {
                what: "state",
                index: k,
                limit: self.n_states,
            });
        }
        Ok(self.column_at((k - 1) * self.n_tx + (j - 1)).collect())
    }

    /// Column of `G` at 0-based coordinate `coord0 = m - 1`.
    pub(crate) fn column_at(&self, coord0: usize) -> impl Iterator<Item = Complex64> + '_ {
        self.coefficients[coord0..].iter().step_by(self.n_coords()).copied()
    }

    pub(crate) fn map_coefficients(&mut self, mut f: impl FnMut(Complex64) -> Complex64, channel_power: f64) {
        for c in &mut self.coefficients {
            *c = f(*c);
        }
        self.channel_power = channel_power;
    }

    /// `G` as `Nr` rows of length `Nt 2^Nrf`.
    pub fn g_matrix(&self) -> Vec<Vec<Complex64>> {
        self.coefficients
            .chunks(self.n_coords())
            .map(<[Complex64]>::to_vec)
            .collect()
    }

    /// Sub-channel matrix `G^k` (1-based), `Nr` rows of length `Nt`.
    pub fn sub_matrix(&self, k: usize) -> Vec<Vec<Complex64>> {
        self.coefficients
            .chunks(self.n_coords())
            .map(|row| row[(k - 1) * self.n_tx..k * self.n_tx].to_vec())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance >= 0.0 && variance.is_finite()) {
            return Err(SmbmError::InvalidConfig {
                field: "noise_variance",
                reason: format!("noise variance must be non-negative (got {variance})"),
            });
        }
        Ok(Self { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Draws every coefficient i.i.d. `CN(0, channel_power)`, in storage order.
pub fn draw_channel<R: Rng + ?Sized>(cfg: &SystemConfig, channel_power: f64, rng: &mut R) -> ChannelRealization {
    let coefficients = (0..cfg.n_coefficients())
        .map(|_| complex_gaussian(rng, channel_power))
        .collect();
    ChannelRealization {
        n_tx: cfg.n_tx,
        n_rx: cfg.n_rx,
        n_states: cfg.n_states(),
        coefficients,
        channel_power,
    }
}

/// `y = d h_j^k + w`, one noise sample per receive antenna in order.
pub fn transmit<R: Rng + ?Sized>(
    h: &ChannelRealization,
    sym: &SmbmSymbol,
    d: Complex64,
    noise: NoiseSpec,
    rng: &mut R,
) -> Vec<Complex64> {
    h.column_at(sym.coordinate - 1)
        .map(|hc| d * hc + complex_gaussian(rng, noise.variance))
        .collect()
}

/// Noise variance for a per-bit SNR: `Es / (eta 10^(snr/10))`.
pub fn noise_variance_for_snr(snr_db: f64, cfg: &SystemConfig) -> f64 {
    let eb = cfg.modulation.symbol_energy / cfg.eta() as f64;
    eb / 10f64.powf(snr_db / 10.0)
}
