use serde::{Deserialize, Serialize};

/// Fixed-length bit vector, one bit per channel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct Bits {
    word: u64,
    len: u8,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= super::MAX_CHANNELS, "at most 64 channels per direction");
        Bits {
            word: 0,
            len: len as u8,
        }
    }

    pub fn from_slice(bits: &[bool]) -> Self {
        let mut b = Bits::zeros(bits.len());
        for (i, &v) in bits.iter().enumerate() {
            b.set(i, v);
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len(), "bit index {i} out of range");
        self.word >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len(), "bit index {i} out of range");
        if v {
            self.word |= 1 << i;
        } else {
            self.word &= !(1 << i);
        }
    }

    pub fn toggle(&mut self, i: usize) {
        assert!(i < self.len(), "bit index {i} out of range");
        self.word ^= 1 << i;
    }

    /// XOR of all bits.
    pub fn parity(&self) -> bool {
        self.word.count_ones() & 1 == 1
    }
}

/// Which parity function an endpoint evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Xor,
    Xnor,
}

/// Token-presence bit at one link endpoint: XOR over the endpoint's own
/// flip-flops and the wires it receives, inverted on the XNOR side.
pub fn evaluate_parity(own_ffs: Bits, received: Bits, convention: Convention) -> bool {
    let p = own_ffs.parity() ^ received.parity();
    match convention {
        Convention::Xor => p,
        Convention::Xnor => !p,
    }
}
