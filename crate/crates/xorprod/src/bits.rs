//! Packed bit strings of arbitrary length.
//!
//! Bit `i` of a string lives in word `i / 64` at position `i % 64`.
//! The hex serialization used by truth-table files packs bit `i` into
//! byte `i / 8` at position `i % 8` (least-significant bit first), with
//! any padding bits in the final byte forced to zero.

use crate::{Error, Result};

/// A packed bit string with an explicit length.
///
/// Used for truth-table storage, algorithm inputs/outputs, and random
/// tapes. Lengths are unbounded; short strings with Hamming-weight
/// semantics use [`crate::boolfn::Mask`] instead.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    /// All-zero string of `len` bits.
    pub fn zeros(len: usize) -> Self {
        Bits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    /// Builds a string by evaluating `f` at every index.
    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut b = Bits::zeros(len);
        for i in 0..len {
            if f(i) {
                b.set(i, true);
            }
        }
        b
    }

    /// Lowest `len` bits of `value`, index 0 at the least-significant bit.
    ///
    /// Panics if `value` has bits at or above `len`.
    pub fn from_word(value: u128, len: usize) -> Self {
        assert!(
            len >= 128 || value >> len == 0,
            "value {value:#x} does not fit in {len} bits"
        );
        let mut b = Bits::zeros(len);
        for (w, chunk) in b.words.iter_mut().enumerate() {
            let shift = w * 64;
            if shift < 128 {
                *chunk = (value >> shift) as u64;
            }
        }
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    /// Parity of the whole string; 0 for the empty string.
    pub fn parity(&self) -> bool {
        self.words.iter().fold(0u64, |acc, w| acc ^ w).count_ones() % 2 == 1
    }

    /// Reinterprets the string as an integer; requires `len <= 128`.
    pub fn as_u128(&self) -> u128 {
        assert!(self.len <= 128, "{}-bit string does not fit in u128", self.len);
        let mut v = 0u128;
        for (w, chunk) in self.words.iter().enumerate() {
            v |= (*chunk as u128) << (w * 64);
        }
        v
    }

    /// Number of positions at which `self` and `other` agree.
    ///
    /// Errors if the lengths differ.
    pub fn match_count(&self, other: &Bits) -> Result<u64> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        let mut agree = 0u64;
        for (i, (a, b)) in self.words.iter().zip(&other.words).enumerate() {
            let mut same = !(a ^ b);
            let lo = i * 64;
            if self.len - lo < 64 {
                same &= (1u64 << (self.len - lo)) - 1;
            }
            agree += same.count_ones() as u64;
        }
        Ok(agree)
    }

    /// Lowercase hex, bit `i` in byte `i / 8` at in-byte position `i % 8`.
    pub fn to_hex(&self) -> String {
        let nbytes = self.len.div_ceil(8);
        let mut s = String::with_capacity(nbytes * 2);
        for byte in 0..nbytes {
            let word = self.words[byte / 8];
            let b = (word >> (byte % 8 * 8)) as u8;
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    /// Parses the hex form produced by [`Bits::to_hex`].
    ///
    /// The string must encode exactly `ceil(len / 8)` bytes and any
    /// padding bits past `len` must be zero.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let nbytes = len.div_ceil(8);
        if hex.len() != nbytes * 2 {
            return Err(Error::Format(format!(
                "expected {} hex chars for {len} bits, got {}",
                nbytes * 2,
                hex.len()
            )));
        }
        let mut bits = Bits::zeros(len);
        for i in 0..nbytes {
            let byte = u8::from_str_radix(&hex[i * 2..i * 2 + 2], 16)
                .map_err(|e| Error::Format(format!("bad hex byte at {}: {e}", i * 2)))?;
            bits.words[i / 8] |= (byte as u64) << (i % 8 * 8);
        }
        // Reject nonzero padding so the encoding is bijective.
        for i in len..nbytes * 8 {
            if bits.words[i / 64] >> (i % 64) & 1 == 1 {
                return Err(Error::Format(format!("nonzero padding bit {i}")));
            }
        }
        Ok(bits)
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

impl std::fmt::Debug for Bits {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Bits[{}]<", self.len)?;
        for i in 0..self.len.min(80) {
            write!(f, "{}", self.get(i) as u8)?;
        }
        if self.len > 80 {
            write!(f, "...")?;
        }
        write!(f, ">")
    }
}

/// Sequential reader over a finite tape.
///
/// Randomized rules consume tape bits in a fixed order through this
/// cursor, so enumerating all `2^tape_len` tapes is well-defined.
pub struct TapeReader<'a> {
    bits: &'a Bits,
    pos: usize,
}

impl<'a> TapeReader<'a> {
    pub fn new(bits: &'a Bits) -> Self {
        TapeReader { bits, pos: 0 }
    }

    /// Bits consumed so far.
    pub fn consumed(&self) -> usize {
        self.pos
    }

    pub fn take_bit(&mut self) -> bool {
        assert!(self.pos < self.bits.len(), "tape exhausted at {}", self.pos);
        let b = self.bits.get(self.pos);
        self.pos += 1;
        b
    }

    /// Next `width` bits as an integer, earliest bit least significant.
    pub fn take_bits(&mut self, width: usize) -> u64 {
        assert!(width <= 64);
        let mut v = 0u64;
        for i in 0..width {
            v |= (self.take_bit() as u64) << i;
        }
        v
    }

    /// Uniform-ish draw from `0..m` using `ceil(log2(m))` tape bits.
    ///
    /// Reduction is by modulus, so values are exactly uniform only when
    /// `m` is a power of two; the fixed bit consumption keeps tape
    /// enumeration finite, which exact checkers rely on.
    pub fn take_below(&mut self, m: u64) -> u64 {
        assert!(m > 0);
        if m == 1 {
            return 0;
        }
        let width = 64 - (m - 1).leading_zeros() as usize;
        self.take_bits(width) % m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut b = Bits::zeros(130);
        b.set(0, true);
        b.set(64, true);
        b.set(129, true);
        assert!(b.get(0) && b.get(64) && b.get(129));
        assert!(!b.get(1) && !b.get(63) && !b.get(128));
        assert_eq!(b.count_ones(), 3);
        assert!(b.parity());
        b.set(129, false);
        assert_eq!(b.count_ones(), 2);
        assert!(!b.parity());
    }

    #[test]
    fn word_roundtrip() {
        let b = Bits::from_word(0b1011, 4);
        assert_eq!(b.as_u128(), 0b1011);
        assert!(b.get(0) && b.get(1) && !b.get(2) && b.get(3));
        let wide = Bits::from_word(u128::MAX, 128);
        assert_eq!(wide.count_ones(), 128);
        assert_eq!(wide.as_u128(), u128::MAX);
    }

    #[test]
    #[should_panic]
    fn from_word_rejects_overflow() {
        let _ = Bits::from_word(0b100, 2);
    }

    #[test]
    fn empty_string_parity_is_zero() {
        let b = Bits::zeros(0);
        assert!(!b.parity());
        assert_eq!(b.count_ones(), 0);
    }

    #[test]
    fn hex_layout_is_lsb_first_per_byte() {
        // bit 0 set -> first byte 0x01; bit 9 set -> second byte 0x02.
        let mut b = Bits::zeros(10);
        b.set(0, true);
        b.set(9, true);
        assert_eq!(b.to_hex(), "0102");
        let back = Bits::from_hex("0102", 10).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn hex_rejects_bad_padding_and_length() {
        // 10-bit string: padding bits 10..16 must be zero. 0x04 in the
        // second byte sets bit 10.
        assert!(Bits::from_hex("0104", 10).is_err());
        assert!(Bits::from_hex("01", 10).is_err());
        assert!(Bits::from_hex("zz", 8).is_err());
    }

    #[test]
    fn match_count_masks_tail() {
        let a = Bits::from_word(0b101, 3);
        let b = Bits::from_word(0b001, 3);
        assert_eq!(a.match_count(&b).unwrap(), 2);
        assert!(a.match_count(&Bits::zeros(4)).is_err());
    }

    #[test]
    fn tape_reader_fixed_consumption() {
        let tape = Bits::from_word(0b110101, 6);
        let mut r = TapeReader::new(&tape);
        assert!(r.take_bit());
        assert_eq!(r.take_bits(3), 0b010); // bits 1..4 = 0,1,0 -> value 2
        assert_eq!(r.consumed(), 4);
        // take_below(3) consumes exactly 2 bits regardless of value.
        assert_eq!(r.take_below(3), 0b11 % 3);
        assert_eq!(r.consumed(), 6);
    }

    #[test]
    fn take_below_one_consumes_nothing() {
        let tape = Bits::zeros(0);
        let mut r = TapeReader::new(&tape);
        assert_eq!(r.take_below(1), 0);
        assert_eq!(r.consumed(), 0);
    }
}
