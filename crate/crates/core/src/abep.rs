//! Pairwise error probabilities and the union bound on the average bit
//! error probability, for single and multiple receive antennas.
//!
//! For a hypothesis pair the effective SNR is exponentially distributed with
//! mean
//!
//! ```text
//! gamma_bar = Es sigma_h^2 (1 + sigma_e^2) / (2 (sigma_n^2 + sigma_e^2 |s|^2)) * D
//! D = |s - s~|^2          (same antenna/state)
//!     |s~|^2 + |s|^2      (different antenna/state)
//! ```
//!
//! which gives `PEP_1 = (1 - sqrt(x / (1 + x))) / 2` with `x = gamma_bar / 2`.
//! With `Nr` receivers the SNR is a sum of `Nr` such terms and
//! `PEP = PEP_1^Nr * sum_i C(Nr - 1 + i, i) (1 - PEP_1)^i`.

use std::f64::consts::SQRT_2;

use num_complex::Complex64;

use crate::constellation::Constellation;
use crate::error::{Result, SmbmError};
use crate::mapping::{hypothesis_label, unmap_decision, SmbmSymbol, SystemConfig};
use crate::quadrature::integrate;

/// Gaussian tail probability, `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PepParams {
    pub symbol_energy: f64,
    pub channel_power: f64,
    pub noise_variance: f64,
    pub estimation_error_variance: f64,
    pub s_true: Complex64,
    pub s_alt: Complex64,
    pub same_channel_index: bool,
}

pub fn gamma_bar(p: &PepParams) -> f64 {
    let e = p.estimation_error_variance;
    let scale = p.symbol_energy * p.channel_power * (1.0 + e) / (2.0 * (p.noise_variance + e * p.s_true.norm_sqr()));
    let distance = if p.same_channel_index {
        (p.s_true - p.s_alt).norm_sqr()
    } else {
        p.s_alt.norm_sqr() + p.s_true.norm_sqr()
    };
    scale * distance
}

/// Closed-form single-antenna PEP averaged over the exponential SNR density.
pub fn pep_sra(gamma_bar: f64) -> Result<f64> {
    if gamma_bar < 0.0 || gamma_bar.is_nan() {
        return Err(SmbmError::Negative(gamma_bar));
    }
    let x = 0.5 * gamma_bar;
    let mu = (x / (1.0 + x)).sqrt();
    if mu.is_nan() {
        // x = inf
        return Ok(0.0);
    }
    // 1 - mu written as (1 - mu^2) / (1 + mu) to keep precision for large x
    Ok(0.5 * (1.0 / (1.0 + x)) / (1.0 + mu))
}

/// Quadrature of `int_0^inf Q(sqrt(rho)) exp(-rho / gamma_bar) / gamma_bar d rho`.
///
/// Integrates over `t = sqrt(rho)`, which removes the square-root kink at the
/// origin. The range stops where either `exp(-t^2 / gamma_bar)` or `Q(t)`
/// has fallen below `1e-35`.
pub fn pep_numeric_oracle(gamma_bar: f64) -> Result<f64> {
    if gamma_bar.is_nan() || gamma_bar <= 0.0 {
        return Err(SmbmError::Negative(gamma_bar));
    }
    let upper = (9.0 * gamma_bar.sqrt()).min(13.0);
    integrate(
        |t: f64| 2.0 * t / gamma_bar * (-t * t / gamma_bar).exp() * q_function(t),
        0.0,
        upper,
        1e-12,
    )
}

pub fn pep_mra(pep_1: f64, n_rx: usize) -> f64 {
    let comp = 1.0 - pep_1;
    let nr = n_rx as f64;
    let mut sum = 0.0;
    let mut binom = 1.0; // C(Nr - 1 + i, i)
    let mut power = 1.0;
    for i in 0..n_rx {
        if i > 0 {
            binom *= (nr - 1.0 + i as f64) / i as f64;
            power *= comp;
        }
        sum += binom * power;
    }
    pep_1.powi(n_rx as i32) * sum
}

/// Hamming distance between the source words of two hypotheses.
pub fn e_bits(a: &SmbmSymbol, b: &SmbmSymbol, cfg: &SystemConfig, c: &Constellation) -> u32 {
    unmap_decision(a, cfg, c).hamming(unmap_decision(b, cfg, c))
}

/// Operating point for the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub noise_variance: f64,
    pub error_variance: f64,
    pub channel_power: f64,
}

impl BoundParams {
    pub fn new(noise_variance: f64, error_variance: f64) -> Self {
        Self {
            noise_variance,
            error_variance,
            channel_power: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairTerm {
    pub from: SmbmSymbol,
    pub to: SmbmSymbol,
    pub pep: f64,
    pub bit_errors: u32,
}

impl PairTerm {
    pub fn contribution(&self) -> f64 {
        self.pep * self.bit_errors as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub abep: f64,
    pub terms: Vec<PairTerm>,
}

fn pair_pep(cfg: &SystemConfig, c: &Constellation, bp: &BoundParams, l: usize, lt: usize, same: bool) -> f64 {
    let params = PepParams {
        symbol_energy: cfg.modulation.symbol_energy,
        channel_power: bp.channel_power,
        noise_variance: bp.noise_variance,
        estimation_error_variance: bp.error_variance,
        s_true: c.point(l),
        s_alt: c.point(lt),
        same_channel_index: same,
    };
    // gamma_bar >= 0 for nonnegative variances
    let p1 = pep_sra(gamma_bar(&params)).unwrap_or(0.5);
    pep_mra(p1, cfg.n_rx)
}

/// Union bound with every ordered pair listed for inspection.
pub fn abep_union_bound(cfg: &SystemConfig, c: &Constellation, bp: &BoundParams) -> BoundResult {
    let n_coords = cfg.n_coords();
    let m = c.order();
    let mut terms = Vec::with_capacity(cfg.n_hypotheses() * cfg.n_hypotheses());
    let mut total = 0.0;
    for from_coord in 0..n_coords {
        for l in 0..m {
            let from = SmbmSymbol::from_coordinate(from_coord, l, cfg.n_tx);
            for to_coord in 0..n_coords {
                for lt in 0..m {
                    let to = SmbmSymbol::from_coordinate(to_coord, lt, cfg.n_tx);
                    let bit_errors = e_bits(&from, &to, cfg, c);
                    let pep = if bit_errors == 0 {
                        0.0
                    } else {
                        pair_pep(cfg, c, bp, l, lt, from_coord == to_coord)
                    };
                    let term = PairTerm {
                        from,
                        to,
                        pep,
                        bit_errors,
                    };
                    total += term.contribution();
                    terms.push(term);
                }
            }
        }
    }
    BoundResult {
        abep: total / normaliser(cfg),
        terms,
    }
}

/// Value of the union bound only; PEPs are tabulated per symbol pair since
/// they depend on the hypotheses only through `(l, l~, same index)`.
pub fn abep_value(cfg: &SystemConfig, c: &Constellation, bp: &BoundParams) -> f64 {
    let m = c.order();
    let n_coords = cfg.n_coords();
    let mut same = vec![0.0; m * m];
    let mut cross = vec![0.0; m * m];
    for l in 0..m {
        for lt in 0..m {
            same[l * m + lt] = pair_pep(cfg, c, bp, l, lt, true);
            cross[l * m + lt] = pair_pep(cfg, c, bp, l, lt, false);
        }
    }
    let labels: Vec<u32> = (0..n_coords)
        .flat_map(|coord| (0..m).map(move |l| (coord, l)))
        .map(|(coord, l)| hypothesis_label(coord, l, cfg, c))
        .collect();
    let mut total = 0.0;
    for from_coord in 0..n_coords {
        for l in 0..m {
            let a = labels[from_coord * m + l];
            for to_coord in 0..n_coords {
                let table = if from_coord == to_coord { &same } else { &cross };
                let row = &table[l * m..(l + 1) * m];
                let mut partial = 0.0;
                for (lt, pep) in row.iter().enumerate() {
                    let e = (a ^ labels[to_coord * m + lt]).count_ones();
                    partial += pep * e as f64;
                }
                total += partial;
            }
        }
    }
    total / normaliser(cfg)
}

fn normaliser(cfg: &SystemConfig) -> f64 {
    let eta = cfg.eta();
    eta as f64 * (1u64 << eta) as f64
}
