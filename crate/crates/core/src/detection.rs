//! Joint maximum-likelihood detection of (symbol, antenna, mirror state).
//!
//! Both detectors minimise `||y - d h_j^k||^2` over all `M Nt 2^Nrf`
//! hypotheses and break ties towards the smallest `(k, j, l)`. The fast
//! detector reaches the same decision with the same metric bits: it seeds the
//! search with the per-column best symbol and then prunes partial distances.

use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::estimation::ChannelEstimate;
use crate::mapping::{hypothesis_label, unmap_decision, SmbmSymbol, SystemConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub symbol_index: usize,
    pub antenna_index: usize,
    pub state_index: usize,
    pub metric: f64,
}

impl Decision {
    pub fn symbol(&self, cfg: &SystemConfig) -> SmbmSymbol {
        SmbmSymbol::from_parts(self.symbol_index, self.antenna_index, self.state_index, cfg.n_tx)
    }

    fn from_hypothesis(coord0: usize, symbol_index: usize, metric: f64, n_tx: usize) -> Self {
        let s = SmbmSymbol::from_coordinate(coord0, symbol_index, n_tx);
        Self {
            symbol_index,
            antenna_index: s.antenna_index,
            state_index: s.state_index,
            metric,
        }
    }
}

#[inline]
fn accumulate(y: &[Complex64], column: impl Iterator<Item = Complex64>, d: Complex64) -> f64 {
    let mut acc = 0.0;
    for (yi, hi) in y.iter().zip(column) {
        acc += (yi - d * hi).norm_sqr();
    }
    acc
}

/// Exhaustive search in `(k, j, l)` order, keeping the first minimum.
pub fn detect_reference(y: &[Complex64], est: &ChannelEstimate, c: &Constellation, cfg: &SystemConfig) -> Decision {
    debug_assert_eq!(y.len(), cfg.n_rx);
    let h = est.channel();
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for coord0 in 0..cfg.n_coords() {
        for (l, &d) in c.points().iter().enumerate() {
            let metric = accumulate(y, h.column_at(coord0), d);
            if metric < best.0 {
                best = (metric, coord0, l);
            }
        }
    }
    Decision::from_hypothesis(best.1, best.2, best.0, cfg.n_tx)
}

/// Detector with the estimated columns laid out contiguously, reusable for
/// every data symbol of a block.
#[derive(Debug, Clone)]
pub struct FastDetector<'a> {
    constellation: &'a Constellation,
    n_rx: usize,
    n_tx: usize,
    columns: Vec<Complex64>,
    column_energy: Vec<f64>,
    point_energy: Vec<f64>,
}

impl<'a> FastDetector<'a> {
    pub fn new(est: &ChannelEstimate, c: &'a Constellation, cfg: &SystemConfig) -> Self {
        let h = est.channel();
        let n_coords = cfg.n_coords();
        let mut columns = Vec::with_capacity(n_coords * cfg.n_rx);
        for coord0 in 0..n_coords {
            columns.extend(h.column_at(coord0));
        }
        let column_energy = columns
            .chunks(cfg.n_rx)
            .map(|col| col.iter().map(|x| x.norm_sqr()).sum())
            .collect();
        Self {
            constellation: c,
            n_rx: cfg.n_rx,
            n_tx: cfg.n_tx,
            columns,
            column_energy,
            point_energy: c.points().iter().map(|p| p.norm_sqr()).collect(),
        }
    }

    fn column(&self, coord0: usize) -> &[Complex64] {
        &self.columns[coord0 * self.n_rx..(coord0 + 1) * self.n_rx]
    }

    pub fn detect(&self, y: &[Complex64]) -> Decision {
        debug_assert_eq!(y.len(), self.n_rx);
        let points = self.constellation.points();
        let n_coords = self.column_energy.len();

        // Seed: for each column the symbol maximising Re(conj(d) h^H y) - |d|^2 ||h||^2 / 2.
        let mut best = (f64::INFINITY, usize::MAX, usize::MAX);
        for coord0 in 0..n_coords {
            let col = self.column(coord0);
            let z: Complex64 = col.iter().zip(y).map(|(h, yi)| h.conj() * yi).sum();
            let energy = self.column_energy[coord0];
            let mut pick = 0;
            let mut pick_score = f64::INFINITY;
            for (l, d) in points.iter().enumerate() {
                let score = self.point_energy[l] * energy - 2.0 * (d.conj() * z).re;
                if score < pick_score {
                    pick_score = score;
                    pick = l;
                }
            }
            let metric = accumulate(y, col.iter().copied(), points[pick]);
            if better(metric, (coord0, pick), best) {
                best = (metric, coord0, pick);
            }
        }

        // Exact pass with partial-distance pruning. Partial sums never
        // decrease, so a pruned hypothesis cannot beat the incumbent.
        for coord0 in 0..n_coords {
            let col = self.column(coord0);
            'symbols: for (l, &d) in points.iter().enumerate() {
                if coord0 == best.1 && l == best.2 {
                    continue;
                }
                let mut acc = 0.0;
                for (yi, hi) in y.iter().zip(col) {
                    acc += (yi - d * hi).norm_sqr();
                    if acc > best.0 {
                        continue 'symbols;
                    }
                }
                if better(acc, (coord0, l), best) {
                    best = (acc, coord0, l);
                }
            }
        }
        Decision::from_hypothesis(best.1, best.2, best.0, self.n_tx)
    }
}

#[inline]
fn better(metric: f64, key: (usize, usize), best: (f64, usize, usize)) -> bool {
    match metric.partial_cmp(&best.0) {
        Some(Ordering::Less) => true,
        Some(Ordering::Equal) => key < (best.1, best.2),
        _ => false,
    }
}

pub fn detect_fast(y: &[Complex64], est: &ChannelEstimate, c: &Constellation, cfg: &SystemConfig) -> Decision {
    FastDetector::new(est, c, cfg).detect(y)
}

/// Hamming distance between the source words of `truth` and `decision`.
pub fn count_bit_errors(truth: &SmbmSymbol, decision: &Decision, cfg: &SystemConfig, c: &Constellation) -> u32 {
    unmap_decision(truth, cfg, c).hamming(unmap_decision(&decision.symbol(cfg), cfg, c))
}

/// Same as [`count_bit_errors`] on raw labels, for the simulation loop.
pub(crate) fn label_errors(truth_label: u32, decision: &Decision, cfg: &SystemConfig, c: &Constellation) -> u32 {
    let coord0 = (decision.state_index - 1) * cfg.n_tx + decision.antenna_index - 1;
    (truth_label ^ hypothesis_label(coord0, decision.symbol_index, cfg, c)).count_ones()
}
