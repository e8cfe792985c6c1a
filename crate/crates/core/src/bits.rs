//! Fixed-width bit words, most significant bit first.

use std::fmt;

use crate::error::{Result, SmbmError};

/// A word of `width` bits stored in the low bits of a `u32`.
///
/// The textual form `011101` is read left to right, so the leftmost character
/// is the most significant bit of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BitWord {
    value: u32,
    width: u32,
}

impl BitWord {
    pub const MAX_WIDTH: u32 = 31;

    /// Panics if `width` exceeds [`Self::MAX_WIDTH`] or `value` does not fit.
    pub fn new(value: u32, width: u32) -> Self {
        assert!(width <= Self::MAX_WIDTH, "bit word too wide: {width}");
        assert!(value >> width == 0, "value {value} does not fit in {width} bits");
        Self { value, width }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        if bits.len() > Self::MAX_WIDTH as usize {
            return Err(SmbmError::WrongWordWidth {
                expected: Self::MAX_WIDTH,
                got: bits.len() as u32,
            });
        }
        let mut value = 0u32;
        for &b in bits {
            if b > 1 {
                return Err(SmbmError::InvalidConfig {
                    field: "bits",
                    reason: format!("bit value {b} is not 0 or 1"),
                });
            }
            value = (value << 1) | b as u32;
        }
        Ok(Self {
            value,
            width: bits.len() as u32,
        })
    }

    pub fn value(self) -> u32 {
        self.value
    }

    pub fn width(self) -> u32 {
        self.width
    }

    pub fn to_bits(self) -> Vec<u8> {
        (0..self.width)
            .rev()
            .map(|i| ((self.value >> i) & 1) as u8)
            .collect()
    }

    /// Appends `tail` after the least significant bit of `self`.
    pub fn concat(self, tail: BitWord) -> BitWord {
        BitWord::new((self.value << tail.width) | tail.value, self.width + tail.width)
    }

    /// Bits `[start, start + len)` counted from the most significant end.
    pub fn slice(self, start: u32, len: u32) -> BitWord {
        debug_assert!(start + len <= self.width);
        let shift = self.width - start - len;
        let mask = if len == 0 { 0 } else { u32::MAX >> (32 - len) };
        BitWord::new((self.value >> shift) & mask, len)
    }

    pub fn hamming(self, other: BitWord) -> u32 {
        debug_assert_eq!(self.width, other.width);
        (self.value ^ other.value).count_ones()
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.to_bits() {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Binary-reflected Gray code.
pub fn gray(n: u32) -> u32 {
    n ^ (n >> 1)
}
