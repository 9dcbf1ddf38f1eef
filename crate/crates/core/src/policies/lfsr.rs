//! 16-bit Fibonacci LFSR used as the PN source for channel dithering.
//!
//! Taps are given as 1-based stage numbers counted from the input end, the
//! usual notation in PN-generator tables. The default polynomial
//! x^16 + x^15 + x^13 + x^4 + 1 is maximal length: every nonzero state is
//! visited once per 65535 steps.

use super::PolicyError;

pub const DEFAULT_TAPS: [u8; 4] = [16, 15, 13, 4];
pub const MAX_PERIOD: u32 = (1 << 16) - 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lfsr {
    state: u16,
    /// Bit `s` set when `state >> s` feeds the XOR.
    feedback: u16,
}

impl Lfsr {
    pub fn new(seed: u16) -> Result<Self, PolicyError> {
        Self::with_taps(seed, &DEFAULT_TAPS)
    }

    pub fn with_taps(seed: u16, taps: &[u8]) -> Result<Self, PolicyError> {
        if seed == 0 {
            return Err(PolicyError::ZeroState);
        }
        let mut feedback = 0u16;
        for &t in taps {
            if !(1..=16).contains(&t) {
                return Err(PolicyError::InvalidTaps(taps.to_vec()));
            }
            feedback |= 1 << (16 - t);
        }
        if !taps.contains(&16) {
            return Err(PolicyError::InvalidTaps(taps.to_vec()));
        }
        Ok(Lfsr { state: seed, feedback })
    }

    pub fn state(&self) -> u16 {
        self.state
    }

    /// Tap positions in descending order.
    pub fn taps(&self) -> Vec<u8> {
        (0..16)
            .filter(|s| self.feedback >> s & 1 == 1)
            .map(|s| 16 - s as u8)
            .collect()
    }

    /// Shifts once; returns the bit shifted out (the pre-shift low bit).
    pub fn next_bit(&mut self) -> Result<bool, PolicyError> {
        if self.state == 0 {
            return Err(PolicyError::ZeroState);
        }
        let out = self.state & 1 == 1;
        let fb = (self.state & self.feedback).count_ones() as u16 & 1;
        self.state = (self.state >> 1) | (fb << 15);
        Ok(out)
    }
}

/// Functional form: `(bit, next state)`.
pub fn lfsr_next(state: Lfsr) -> Result<(bool, Lfsr), PolicyError> {
    let mut s = state;
    let bit = s.next_bit()?;
    Ok((bit, s))
}
