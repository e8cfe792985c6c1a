//! Reference-signal sounding with LS and LMMSE channel estimation.
//!
//! Every (antenna, mirror state) pair is sounded once with the pilot `p`
//! while all `Nr` receivers listen, so the pilot matrix is `P = p I` and the
//! matrix estimators reduce to per-coefficient scalar operations:
//!
//! * LS: `h_i = r_i / p`, error variance `sigma_n^2 / |p|^2`
//! * LMMSE with `R_h = sigma_h^2 I`: `h_i = conj(p) r_i / (|p|^2 + sigma_n^2 / sigma_h^2)`,
//!   error variance `sigma_h^2 sigma_n^2 / (sigma_h^2 |p|^2 + sigma_n^2)`

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, ChannelRealization};
use crate::error::{Result, SmbmError};
use crate::mapping::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PilotSpec {
    value: Complex64,
}

impl PilotSpec {
    pub fn new(value: Complex64) -> Result<Self> {
        let energy = value.norm_sqr();
        if (energy - 1.0).abs() > 1e-12 {
            return Err(SmbmError::InvalidPilot(energy));
        }
        Ok(Self { value })
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn energy(&self) -> f64 {
        self.value.norm_sqr()
    }
}

impl Default for PilotSpec {
    fn default() -> Self {
        Self {
            value: Complex64::new(1.0, 0.0),
        }
    }
}

/// Channel knowledge available to the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorKind {
    Perfect,
    Ls,
    Lmmse,
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Perfect => "perfect",
            Self::Ls => "ls",
            Self::Lmmse => "lmmse",
        })
    }
}

impl FromStr for EstimatorKind {
    type Err = SmbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perfect" | "p-csi" | "pcsi" => Ok(Self::Perfect),
            "ls" => Ok(Self::Ls),
            "lmmse" | "mmse" => Ok(Self::Lmmse),
            _ => Err(SmbmError::InvalidConfig {
                field: "csi",
                reason: format!("unknown CSI mode `{s}` (expected perfect, ls or lmmse)"),
            }),
        }
    }
}

/// Received pilot vector `r = P h + n`, in channel storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotObservation {
    layout: ChannelRealization,
    noise_variance: f64,
}

impl PilotObservation {
    pub fn values(&self) -> &[Complex64] {
        self.layout.coefficients()
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    /// Builds an observation from explicit values, e.g. for testing.
    pub fn from_values(cfg: &SystemConfig, values: Vec<Complex64>, noise_variance: f64) -> Result<Self> {
        Ok(Self {
            layout: ChannelRealization::from_coefficients(cfg, values, 1.0)?,
            noise_variance,
        })
    }

    fn map(&self, f: impl FnMut(Complex64) -> Complex64, channel_power: f64) -> ChannelRealization {
        let mut out = self.layout.clone();
        out.map_coefficients(f, channel_power);
        out
    }
}

/// Estimated channel together with the analytic variance of its error.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    channel: ChannelRealization,
    estimator: EstimatorKind,
    error_variance: f64,
}

impl ChannelEstimate {
    /// Genie estimate: `h_hat = h`, zero error variance.
    pub fn perfect(h: &ChannelRealization) -> Self {
        Self {
            channel: h.clone(),
            estimator: EstimatorKind::Perfect,
            error_variance: 0.0,
        }
    }

    /// Wraps arbitrary estimated coefficients.
    pub fn from_channel(channel: ChannelRealization, estimator: EstimatorKind, error_variance: f64) -> Self {
        Self {
            channel,
            estimator,
            error_variance,
        }
    }

    pub fn channel(&self) -> &ChannelRealization {
        &self.channel
    }

    pub fn coefficients(&self) -> &[Complex64] {
        self.channel.coefficients()
    }

    pub fn estimator(&self) -> EstimatorKind {
        self.estimator
    }

    pub fn error_variance(&self) -> f64 {
        self.error_variance
    }
}

/// Sounds every coefficient once with `pilot`; noise is drawn in storage order.
pub fn sound_channel<R: Rng + ?Sized>(
    h: &ChannelRealization,
    pilot: PilotSpec,
    noise_variance: f64,
    rng: &mut R,
) -> PilotObservation {
    let p = pilot.value;
    let mut layout = h.clone();
    layout.map_coefficients(|hi| p * hi + complex_gaussian(rng, noise_variance), 1.0);
    PilotObservation {
        layout,
        noise_variance,
    }
}

/// Channel uses spent on sounding per block: one per (antenna, state) pair.
pub fn pilot_overhead(cfg: &SystemConfig) -> usize {
    cfg.n_coords()
}

pub fn estimate_ls(r: &PilotObservation, pilot: PilotSpec) -> ChannelEstimate {
    let p = pilot.value;
    ChannelEstimate {
        channel: r.map(|ri| ri / p, 1.0),
        estimator: EstimatorKind::Ls,
        error_variance: analytic_mse(EstimatorKind::Ls, pilot, r.noise_variance, 1.0),
    }
}

pub fn estimate_lmmse(r: &PilotObservation, pilot: PilotSpec, channel_power: f64) -> ChannelEstimate {
    let p = pilot.value;
    let gain = p.conj() / (p.norm_sqr() + r.noise_variance / channel_power);
    ChannelEstimate {
        channel: r.map(|ri| gain * ri, channel_power),
        estimator: EstimatorKind::Lmmse,
        error_variance: analytic_mse(EstimatorKind::Lmmse, pilot, r.noise_variance, channel_power),
    }
}

/// Per-coefficient squared error averaged over one realization.
pub fn empirical_mse(estimate: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(SmbmError::LengthMismatch {
            left: estimate.len(),
            right: truth.len(),
        });
    }
    let total: f64 = estimate
        .iter()
        .zip(truth)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    Ok(total / truth.len() as f64)
}

pub fn analytic_mse(estimator: EstimatorKind, pilot: PilotSpec, noise_variance: f64, channel_power: f64) -> f64 {
    let pe = pilot.energy();
    match estimator {
        EstimatorKind::Perfect => 0.0,
        EstimatorKind::Ls => noise_variance / pe,
        EstimatorKind::Lmmse => channel_power * noise_variance / (channel_power * pe + noise_variance),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use crate::constellation::ModulationSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg() -> SystemConfig {
        SystemConfig::new(2, 2, 1, ModulationSpec::psk(4).unwrap()).unwrap()
    }

    #[test]
    fn pilot_must_be_unit_energy() {
        assert!(PilotSpec::new(Complex64::new(2.0, 0.0)).is_err());
        assert!(PilotSpec::new(Complex64::from_polar(1.0, 0.3)).is_ok());
    }

    #[test]
    fn noiseless_ls_recovers_channel() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = draw_channel(&cfg(), 1.0, &mut rng);
        let r = sound_channel(&h, PilotSpec::default(), 0.0, &mut rng);
        assert_eq!(r.values(), h.coefficients());
        let est = estimate_ls(&r, PilotSpec::default());
        assert_eq!(est.coefficients(), h.coefficients());
        assert_eq!(est.estimator(), EstimatorKind::Ls);
    }

    #[test]
    fn unit_modulus_pilot_derotates() {
        let theta = 0.7;
        let pilot = PilotSpec::new(Complex64::from_polar(1.0, theta)).unwrap();
        let vals: Vec<Complex64> = (0..8).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let r = PilotObservation::from_values(&cfg(), vals.clone(), 0.1).unwrap();
        let est = estimate_ls(&r, pilot);
        for (e, v) in est.coefficients().iter().zip(&vals) {
            assert!((e - v * Complex64::from_polar(1.0, -theta)).norm() < 1e-14);
        }
        assert!((est.error_variance() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn lmmse_halves_at_unit_snr() {
        let vals: Vec<Complex64> = (0..8).map(|i| Complex64::new(1.0, i as f64)).collect();
        let r = PilotObservation::from_values(&cfg(), vals.clone(), 1.0).unwrap();
        let est = estimate_lmmse(&r, PilotSpec::default(), 1.0);
        for (e, v) in est.coefficients().iter().zip(&vals) {
            assert!((e - v / 2.0).norm() < 1e-15);
        }
        assert_eq!(est.error_variance(), 0.5);
    }

    #[test]
    fn lmmse_tends_to_ls() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let h = draw_channel(&cfg(), 1.0, &mut rng);
        let r = sound_channel(&h, PilotSpec::default(), 1e-12, &mut rng);
        let ls = estimate_ls(&r, PilotSpec::default());
        let mm = estimate_lmmse(&r, PilotSpec::default(), 1.0);
        for (a, b) in ls.coefficients().iter().zip(mm.coefficients()) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn empirical_mse_basics() {
        let h = vec![Complex64::new(0.5, -0.2); 8];
        assert_eq!(empirical_mse(&h, &h).unwrap(), 0.0);
        let shifted: Vec<Complex64> = h.iter().map(|x| x + 1.0).collect();
        assert!((empirical_mse(&shifted, &h).unwrap() - 1.0).abs() < 1e-15);
        assert!(empirical_mse(&h[..3], &h).is_err());
    }

    #[test]
    fn analytic_values() {
        let p = PilotSpec::default();
        assert_eq!(analytic_mse(EstimatorKind::Ls, p, 0.1, 1.0), 0.1);
        assert_eq!(analytic_mse(EstimatorKind::Lmmse, p, 1.0, 1.0), 0.5);
        assert_eq!(analytic_mse(EstimatorKind::Perfect, p, 1.0, 1.0), 0.0);
        assert_eq!(ChannelEstimate::perfect(&draw_channel(&cfg(), 1.0, &mut ChaCha8Rng::seed_from_u64(0))).error_variance(), 0.0);
    }

    #[test]
    fn parse_kind() {
        assert_eq!("LMMSE".parse::<EstimatorKind>().unwrap(), EstimatorKind::Lmmse);
        assert!("mle".parse::<EstimatorKind>().is_err());
    }
}
