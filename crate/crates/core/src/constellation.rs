//! Gray-labelled M-PSK and square M-QAM constellations.
//!
//! PSK points sit at `sqrt(Es) * exp(i 2 pi n / M)`, except QPSK which is
//! rotated by `pi/4` so that it coincides with 4-QAM. Point `n` on the circle
//! carries the binary-reflected Gray label `n ^ (n >> 1)`. Square QAM uses an
//! independent Gray code on each axis.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bits::{gray, BitWord};
use crate::error::{Result, SmbmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModulationKind {
    Psk,
    Qam,
}

/// Modulation family, order and symbol energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationSpec {
    pub kind: ModulationKind,
    pub order: usize,
    pub symbol_energy: f64,
}

impl ModulationSpec {
    pub fn new(kind: ModulationKind, order: usize, symbol_energy: f64) -> Result<Self> {
        let spec = Self {
            kind,
            order,
            symbol_energy,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn psk(order: usize) -> Result<Self> {
        Self::new(ModulationKind::Psk, order, 1.0)
    }

    pub fn qam(order: usize) -> Result<Self> {
        Self::new(ModulationKind::Qam, order, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || !self.order.is_power_of_two() {
            return Err(SmbmError::OrderNotPowerOfTwo(self.order));
        }
        if self.kind == ModulationKind::Qam && !self.bits_per_symbol().is_multiple_of(2) {
            return Err(SmbmError::NonSquareQam(self.order));
        }
        if !(self.symbol_energy.is_finite() && self.symbol_energy > 0.0) {
            return Err(SmbmError::InvalidSymbolEnergy(self.symbol_energy));
        }
        Ok(())
    }

    /// `log2 M`.
    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }
}

impl fmt::Display for ModulationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.order) {
            (ModulationKind::Psk, 2) => write!(f, "bpsk"),
            (ModulationKind::Psk, 4) => write!(f, "qpsk"),
            (ModulationKind::Psk, m) => write!(f, "{m}psk"),
            (ModulationKind::Qam, m) => write!(f, "{m}qam"),
        }
    }
}

/// Parses names such as `bpsk`, `qpsk`, `8psk`, `16-psk`, `16qam`, `64-QAM`.
/// The symbol energy is set to 1.
impl FromStr for ModulationSpec {
    type Err = SmbmError;

    fn from_str(s: &str) -> Result<Self> {
        let name: String = s
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        let bad = || SmbmError::InvalidConfig {
            field: "mod",
            reason: format!("unknown modulation `{s}`"),
        };
        match name.as_str() {
            "bpsk" => return Self::psk(2),
            "qpsk" => return Self::psk(4),
            _ => {}
        }
        let (digits, kind) = if let Some(d) = name.strip_suffix("psk") {
            (d, ModulationKind::Psk)
        } else if let Some(d) = name.strip_suffix("qam") {
            (d, ModulationKind::Qam)
        } else {
            return Err(bad());
        };
        let order: usize = digits.parse().map_err(|_| bad())?;
        Self::new(kind, order, 1.0)
    }
}

/// Normalised constellation with its bit labels.
///
/// `labels[i]` is the label of `points[i]`; `index_of_label` is the inverse
/// permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    spec: ModulationSpec,
    points: Vec<Complex64>,
    labels: Vec<u32>,
    index_of_label: Vec<usize>,
}

impl Constellation {
    pub fn new(spec: ModulationSpec) -> Result<Self> {
        build_constellation(spec)
    }

    pub fn spec(&self) -> ModulationSpec {
        self.spec
    }

    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.spec.bits_per_symbol()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    /// Label of point `index` as a raw integer (no range check).
    pub fn label(&self, index: usize) -> u32 {
        self.labels[index]
    }

    /// Index of the point carrying `label` (no range check).
    pub fn index_of(&self, label: u32) -> usize {
        self.index_of_label[label as usize]
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.points.len() as f64
    }

    pub fn map_bits_to_symbol(&self, bits: BitWord) -> Result<Complex64> {
        let width = self.bits_per_symbol();
        if bits.width() != width {
            return Err(SmbmError::WrongWordWidth {
                expected: width,
                got: bits.width(),
            });
        }
        Ok(self.points[self.index_of(bits.value())])
    }

    pub fn symbol_to_bits(&self, point_index: usize) -> Result<BitWord> {
        if point_index >= self.order() {
            return Err(SmbmError::IndexOutOfRange {
                what: "constellation point",
                index: point_index,
                limit: self.order(),
            });
        }
        Ok(BitWord::new(self.labels[point_index], self.bits_per_symbol()))
    }
}

pub fn build_constellation(spec: ModulationSpec) -> Result<Constellation> {
    spec.validate()?;
    let m = spec.order;
    let (points, labels) = match spec.kind {
        ModulationKind::Psk => psk(m, spec.symbol_energy),
        ModulationKind::Qam => qam(m, spec.symbol_energy),
    };
    let mut index_of_label = vec![usize::MAX; m];
    for (i, &label) in labels.iter().enumerate() {
        index_of_label[label as usize] = i;
    }
    debug_assert!(index_of_label.iter().all(|&i| i < m));
    Ok(Constellation {
        spec,
        points,
        labels,
        index_of_label,
    })
}

fn psk(m: usize, es: f64) -> (Vec<Complex64>, Vec<u32>) {
    let offset = if m == 4 { PI / 4.0 } else { 0.0 };
    let amplitude = es.sqrt();
    let points = (0..m)
        .map(|n| {
            let theta = 2.0 * PI * n as f64 / m as f64 + offset;
            // exact axes for BPSK and the unrotated cases
            Complex64::from_polar(amplitude, theta)
        })
        .map(snap_axis(amplitude))
        .collect();
    let labels = (0..m as u32).map(gray).collect();
    (points, labels)
}

fn qam(m: usize, es: f64) -> (Vec<Complex64>, Vec<u32>) {
    let side = 1usize << (m.trailing_zeros() / 2);
    let half_bits = side.trailing_zeros();
    let level = |i: usize| (2 * i) as f64 - (side - 1) as f64;
    let mut raw = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for i in 0..side {
        for q in 0..side {
            raw.push(Complex64::new(level(i), level(q)));
            labels.push((gray(i as u32) << half_bits) | gray(q as u32));
        }
    }
    let mean_energy = raw.iter().map(|p| p.norm_sqr()).sum::<f64>() / m as f64;
    let scale = (es / mean_energy).sqrt();
    (raw.into_iter().map(|p| p * scale).collect(), labels)
}

/// Removes the ~1e-16 residue that `sin(pi)` and friends leave on the axes.
fn snap_axis(amplitude: f64) -> impl Fn(Complex64) -> Complex64 {
    move |p| {
        let eps = 1e-15 * amplitude;
        Complex64::new(
            if p.re.abs() < eps { 0.0 } else { p.re },
            if p.im.abs() < eps { 0.0 } else { p.im },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bpsk() -> Constellation {
        Constellation::new(ModulationSpec::psk(2).unwrap()).unwrap()
    }

    #[test]
    fn bpsk_lies_on_real_axis() {
        let c = bpsk();
        assert_eq!(c.points(), &[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(
            c.map_bits_to_symbol(BitWord::new(0, 1)).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        assert_eq!(
            c.map_bits_to_symbol(BitWord::new(1, 1)).unwrap(),
            Complex64::new(-1.0, 0.0)
        );
        assert_eq!(c.symbol_to_bits(0).unwrap(), BitWord::new(0, 1));
    }

    #[test]
    fn sixteen_qam_grid_scaled_by_inverse_sqrt_ten() {
        // oracle: unscaled grid energy is 160 / 16 = 10
        let raw: Vec<(f64, f64)> = [-3.0, -1.0, 1.0, 3.0]
            .iter()
            .flat_map(|&a| [-3.0, -1.0, 1.0, 3.0].into_iter().map(move |b| (a, b)))
            .collect();
        let total: f64 = raw.iter().map(|(a, b)| a * a + b * b).sum();
        assert_eq!(total, 160.0);
        let scale = 1.0 / (total / 16.0f64).sqrt();
        assert!((scale - 1.0 / 10f64.sqrt()).abs() < 1e-15);

        let c = Constellation::new(ModulationSpec::qam(16).unwrap()).unwrap();
        for (a, b) in raw {
            let want = Complex64::new(a * scale, b * scale);
            assert!(c.points().iter().any(|p| (p - want).norm() < 1e-14));
        }
    }

    #[test]
    fn qpsk_is_rotated_and_matches_4qam() {
        let q = Constellation::new(ModulationSpec::psk(4).unwrap()).unwrap();
        let r = 1.0 / 2f64.sqrt();
        for p in q.points() {
            assert!((p.re.abs() - r).abs() < 1e-15 && (p.im.abs() - r).abs() < 1e-15);
        }
        let a = Constellation::new(ModulationSpec::qam(4).unwrap()).unwrap();
        for p in a.points() {
            assert!(q.points().iter().any(|x| (x - p).norm() < 1e-15));
        }
    }

    #[test]
    fn rejects_bad_orders() {
        assert_eq!(
            ModulationSpec::psk(6).unwrap_err(),
            SmbmError::OrderNotPowerOfTwo(6)
        );
        assert_eq!(ModulationSpec::psk(1).unwrap_err(), SmbmError::OrderNotPowerOfTwo(1));
        assert_eq!(ModulationSpec::qam(8).unwrap_err(), SmbmError::NonSquareQam(8));
        assert_eq!(ModulationSpec::qam(32).unwrap_err(), SmbmError::NonSquareQam(32));
        assert!(ModulationSpec::new(ModulationKind::Psk, 4, 0.0).is_err());
    }

    #[test]
    fn wrong_width_and_index_errors() {
        let c = bpsk();
        assert!(matches!(
            c.map_bits_to_symbol(BitWord::new(0, 2)),
            Err(SmbmError::WrongWordWidth { expected: 1, got: 2 })
        ));
        assert!(matches!(
            c.symbol_to_bits(2),
            Err(SmbmError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn round_trips_and_labels_are_permutations() {
        for spec in [
            ModulationSpec::psk(4).unwrap(),
            ModulationSpec::psk(8).unwrap(),
            ModulationSpec::qam(16).unwrap(),
            ModulationSpec::qam(64).unwrap(),
        ] {
            let c = Constellation::new(spec).unwrap();
            let mut seen = vec![false; c.order()];
            for i in 0..c.order() {
                let b = c.symbol_to_bits(i).unwrap();
                assert!(!seen[b.value() as usize]);
                seen[b.value() as usize] = true;
                assert_eq!(c.map_bits_to_symbol(b).unwrap(), c.point(i));
            }
        }
    }

    #[test]
    fn psk_neighbours_differ_in_one_bit() {
        for m in [2usize, 4, 8, 16, 32] {
            let c = Constellation::new(ModulationSpec::psk(m).unwrap()).unwrap();
            // sort by angle so the check does not rely on construction order
            let mut idx: Vec<usize> = (0..m).collect();
            idx.sort_by(|&a, &b| {
                let ta = c.point(a).arg().rem_euclid(2.0 * PI);
                let tb = c.point(b).arg().rem_euclid(2.0 * PI);
                ta.partial_cmp(&tb).unwrap()
            });
            for w in 0..m {
                let a = c.label(idx[w]);
                let b = c.label(idx[(w + 1) % m]);
                assert_eq!((a ^ b).count_ones(), 1, "M={m}");
            }
        }
    }

    #[test]
    fn qam_grid_neighbours_differ_in_one_bit() {
        for m in [4usize, 16, 64] {
            let c = Constellation::new(ModulationSpec::qam(m).unwrap()).unwrap();
            let d_min = (c.point(0) - c.point(1)).norm();
            for a in 0..m {
                for b in 0..m {
                    let d = (c.point(a) - c.point(b)).norm();
                    if a != b && (d - d_min).abs() < 1e-12 {
                        assert_eq!((c.label(a) ^ c.label(b)).count_ones(), 1);
                    }
                }
            }
        }
    }

    #[test]
    fn parses_names() {
        assert_eq!("qpsk".parse::<ModulationSpec>().unwrap(), ModulationSpec::psk(4).unwrap());
        assert_eq!("8-PSK".parse::<ModulationSpec>().unwrap(), ModulationSpec::psk(8).unwrap());
        assert_eq!("16qam".parse::<ModulationSpec>().unwrap(), ModulationSpec::qam(16).unwrap());
        assert!("12psk".parse::<ModulationSpec>().is_err());
        assert!("fsk".parse::<ModulationSpec>().is_err());
        assert_eq!(ModulationSpec::psk(16).unwrap().to_string(), "16psk");
    }
}
