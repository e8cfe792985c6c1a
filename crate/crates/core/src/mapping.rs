//! Source-bit splitting and the sparse SMBM transmit vector.
//!
//! An `eta`-bit source word is laid out as `symbol | antenna | mirror`. The
//! antenna and mirror fields use natural binary: antenna `j = 1 + value`,
//! state `k = 1 + value`. The active coordinate is `m = (k - 1) * Nt + j`.
//! Indices `j`, `k` and `m` are 1-based throughout the public API.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::BitWord;
use crate::constellation::{Constellation, ModulationSpec};
use crate::error::{Result, SmbmError};

/// Largest supported `eta`; the union bound enumerates `2^(2 eta)` pairs.
pub const MAX_ETA: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_rf: u32,
    pub modulation: ModulationSpec,
}

impl SystemConfig {
    pub fn new(n_tx: usize, n_rx: usize, n_rf: u32, modulation: ModulationSpec) -> Result<Self> {
        let cfg = Self {
            n_tx,
            n_rx,
            n_rf,
            modulation,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.modulation.validate()?;
        if self.n_tx == 0 || !self.n_tx.is_power_of_two() {
            return Err(SmbmError::InvalidConfig {
                field: "nt",
                reason: format!("Nt must be a power of two (got {})", self.n_tx),
            });
        }
        if self.n_rx == 0 {
            return Err(SmbmError::InvalidConfig {
                field: "nr",
                reason: "Nr must be at least 1".into(),
            });
        }
        let eta = self.modulation.bits_per_symbol() as u64
            + self.n_tx.trailing_zeros() as u64
            + self.n_rf as u64;
        if eta > MAX_ETA as u64 {
            return Err(SmbmError::InvalidConfig {
                field: "nrf",
                reason: format!("spectral efficiency {eta} bpcu exceeds the supported {MAX_ETA}"),
            });
        }
        Ok(())
    }

    pub fn eta(&self) -> u32 {
        spectral_efficiency(self)
    }

    pub fn antenna_bits(&self) -> u32 {
        self.n_tx.trailing_zeros()
    }

    /// `2^Nrf` mirror states.
    pub fn n_states(&self) -> usize {
        1usize << self.n_rf
    }

    /// Length of the transmit vector, `Nt * 2^Nrf`.
    pub fn n_coords(&self) -> usize {
        self.n_tx * self.n_states()
    }

    /// Number of channel coefficients, `Nt * 2^Nrf * Nr`.
    pub fn n_coefficients(&self) -> usize {
        self.n_coords() * self.n_rx
    }

    /// Number of joint hypotheses `M * Nt * 2^Nrf = 2^eta`.
    pub fn n_hypotheses(&self) -> usize {
        self.modulation.order * self.n_coords()
    }
}

/// `eta = log2 M + log2 Nt + Nrf` bits per channel use.
pub fn spectral_efficiency(cfg: &SystemConfig) -> u32 {
    cfg.modulation.bits_per_symbol() + cfg.antenna_bits() + cfg.n_rf
}

/// One transmit hypothesis: data symbol `l`, antenna `j`, mirror state `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmbmSymbol {
    pub symbol_index: usize,
    pub antenna_index: usize,
    pub state_index: usize,
    pub coordinate: usize,
}

impl SmbmSymbol {
    pub fn new(symbol_index: usize, antenna_index: usize, state_index: usize, cfg: &SystemConfig) -> Result<Self> {
        let check = |what, index: usize, lo: usize, hi: usize| {
            if index < lo || index > hi {
                Err(SmbmError::IndexOutOfRange {
                    what,
                    index,
                    limit: hi,
                })
            } else {
                Ok(())
            }
        };
        check("symbol", symbol_index, 0, cfg.modulation.order - 1)?;
        check("antenna", antenna_index, 1, cfg.n_tx)?;
        check("state", state_index, 1, cfg.n_states())?;
        Ok(Self::from_parts(symbol_index, antenna_index, state_index, cfg.n_tx))
    }

    pub(crate) fn from_parts(symbol_index: usize, antenna_index: usize, state_index: usize, n_tx: usize) -> Self {
        Self {
            symbol_index,
            antenna_index,
            state_index,
            coordinate: (state_index - 1) * n_tx + antenna_index,
        }
    }

    /// Hypothesis from a 0-based coordinate `m - 1` and symbol index.
    pub(crate) fn from_coordinate(coord0: usize, symbol_index: usize, n_tx: usize) -> Self {
        Self::from_parts(symbol_index, coord0 % n_tx + 1, coord0 / n_tx + 1, n_tx)
    }
}

/// The sparse vector `x`: one nonzero value `d` at 1-based coordinate `m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitVector {
    pub length: usize,
    pub coordinate: usize,
    pub value: Complex64,
}

impl TransmitVector {
    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); self.length];
        x[self.coordinate - 1] = self.value;
        x
    }
}

/// Fields of a source word: `(symbol_bits, antenna_bits, mirror_bits)`.
pub fn split_bits(q: BitWord, cfg: &SystemConfig) -> Result<(BitWord, BitWord, BitWord)> {
    let eta = cfg.eta();
    if q.width() != eta {
        return Err(SmbmError::WrongWordWidth {
            expected: eta,
            got: q.width(),
        });
    }
    let sym = cfg.modulation.bits_per_symbol();
    let ant = cfg.antenna_bits();
    Ok((q.slice(0, sym), q.slice(sym, ant), q.slice(sym + ant, cfg.n_rf)))
}

pub fn map_source(q: BitWord, cfg: &SystemConfig, c: &Constellation) -> Result<(SmbmSymbol, TransmitVector)> {
    check_constellation(cfg, c)?;
    let (sym_bits, ant_bits, mirror_bits) = split_bits(q, cfg)?;
    let symbol_index = c.index_of(sym_bits.value());
    let sym = SmbmSymbol::from_parts(
        symbol_index,
        ant_bits.value() as usize + 1,
        mirror_bits.value() as usize + 1,
        cfg.n_tx,
    );
    let x = TransmitVector {
        length: cfg.n_coords(),
        coordinate: sym.coordinate,
        value: c.point(symbol_index),
    };
    Ok((sym, x))
}

/// The source word that `map_source` would have turned into `sym`.
pub fn unmap_decision(sym: &SmbmSymbol, cfg: &SystemConfig, c: &Constellation) -> BitWord {
    BitWord::new(c.label(sym.symbol_index), cfg.modulation.bits_per_symbol())
        .concat(BitWord::new((sym.antenna_index - 1) as u32, cfg.antenna_bits()))
        .concat(BitWord::new((sym.state_index - 1) as u32, cfg.n_rf))
}

/// Label of the hypothesis at 0-based coordinate `coord0` with symbol `l`,
/// as a raw `eta`-bit integer. Same value as [`unmap_decision`].
pub(crate) fn hypothesis_label(coord0: usize, symbol_index: usize, cfg: &SystemConfig, c: &Constellation) -> u32 {
    let j0 = (coord0 % cfg.n_tx) as u32;
    let k0 = (coord0 / cfg.n_tx) as u32;
    (((c.label(symbol_index) << cfg.antenna_bits()) | j0) << cfg.n_rf) | k0
}

pub(crate) fn check_constellation(cfg: &SystemConfig, c: &Constellation) -> Result<()> {
    if c.order() != cfg.modulation.order {
        return Err(SmbmError::InvalidConfig {
            field: "mod",
            reason: format!(
                "constellation has {} points but the system uses M = {}",
                c.order(),
                cfg.modulation.order
            ),
        });
    }
    Ok(())
}
