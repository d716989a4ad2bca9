//! Boolean functions as truth tables, tuples over their domain, and
//! the exact combinatorics the reductions are checked against.
//!
//! Conventions, fixed crate-wide:
//!
//! * bit 0 of an input string is the least significant bit of its
//!   table index;
//! * a `k`-tuple packs into an `n*k`-bit integer with element 0 in the
//!   lowest `n` bits;
//! * masks select tuple coordinates by bit index, and restriction
//!   keeps selected coordinates in ascending position order.

use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bits::Bits;
use crate::frac::{self, frac, frac_u, Frac};
use crate::{EnumCap, Error, Result};

/// Largest supported truth-table arity (`2^20`-entry tables).
pub const MAX_ARITY: usize = 20;

/// A total boolean function on `{0,1}^n`, stored as a `2^n`-bit table.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TruthTable {
    n: usize,
    table: Bits,
}

impl TruthTable {
    /// Wraps a `2^n`-bit table; `1 <= n <= MAX_ARITY`.
    pub fn new(n: usize, table: Bits) -> Result<Self> {
        if n == 0 || n > MAX_ARITY {
            return Err(Error::Degenerate(format!(
                "arity {n} outside 1..={MAX_ARITY}"
            )));
        }
        if table.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: table.len(),
            });
        }
        Ok(TruthTable { n, table })
    }

    pub fn from_fn(n: usize, f: impl FnMut(u64) -> bool) -> Result<Self> {
        if n == 0 || n > MAX_ARITY {
            return Err(Error::Degenerate(format!(
                "arity {n} outside 1..={MAX_ARITY}"
            )));
        }
        let mut f = f;
        Ok(TruthTable {
            n,
            table: Bits::from_fn(1 << n, |i| f(i as u64)),
        })
    }

    pub fn constant(n: usize, value: bool) -> Result<Self> {
        Self::from_fn(n, |_| value)
    }

    /// Parity of the input bits; balanced for every `n`.
    pub fn parity(n: usize) -> Result<Self> {
        Self::from_fn(n, |x| x.count_ones() % 2 == 1)
    }

    /// Uniformly random table.
    pub fn random(n: usize, rng: &mut ChaCha12Rng) -> Result<Self> {
        Self::from_fn(n, |_| rng.gen::<bool>())
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    /// Domain size `2^n`.
    pub fn domain_size(&self) -> u64 {
        1 << self.n
    }

    pub fn table(&self) -> &Bits {
        &self.table
    }

    /// `f(x)` for an `n`-bit input given as its table index.
    ///
    /// Errors if `x` has bits beyond position `n`.
    pub fn eval(&self, x: u64) -> Result<bool> {
        if x >> self.n != 0 {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: 64 - x.leading_zeros() as usize,
            });
        }
        Ok(self.table.get(x as usize))
    }

    /// Direct product `f^k`: the `k` values of `f` over the tuple, bit
    /// `i` of the output from element `i`. `k = 0` gives the empty
    /// string.
    pub fn direct_product(&self, xs: &KTuple) -> Result<Mask> {
        self.check_tuple(xs)?;
        let mut out = Mask::zeros(xs.k());
        for (i, &x) in xs.elements().iter().enumerate() {
            out.set(i, self.table.get(x as usize));
        }
        Ok(out)
    }

    /// XOR form `f^{⊕k}`: parity of `f` over the tuple; 0 when `k = 0`.
    pub fn xor_product(&self, xs: &KTuple) -> Result<bool> {
        self.check_tuple(xs)?;
        let mut acc = false;
        for &x in xs.elements() {
            acc ^= self.table.get(x as usize);
        }
        Ok(acc)
    }

    /// Fraction of inputs where the two tables agree, exact.
    pub fn agreement(&self, other: &TruthTable) -> Result<Frac> {
        if self.n != other.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let same = self.table.match_count(&other.table)?;
        Ok(frac_u(same as u128, self.domain_size() as u128))
    }

    /// `1 - agreement`, the normalized Hamming distance.
    pub fn distance(&self, other: &TruthTable) -> Result<Frac> {
        Ok(frac::one() - self.agreement(other)?)
    }

    pub fn complement(&self) -> TruthTable {
        TruthTable {
            n: self.n,
            table: Bits::from_fn(self.table.len(), |i| !self.table.get(i)),
        }
    }
}

impl std::fmt::Debug for TruthTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TruthTable(n={}, {:?})", self.n, self.table)
    }
}

impl TruthTable {
    fn check_tuple(&self, xs: &KTuple) -> Result<()> {
        if xs.element_bits() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: xs.element_bits(),
            });
        }
        Ok(())
    }
}

// Truth tables serialize as {"n": .., "bits": "<hex>"} where the hex
// packs bit i of the table into byte i/8, least-significant bit first.
impl Serialize for TruthTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("TruthTable", 2)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("bits", &self.table.to_hex())?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for TruthTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            n: usize,
            bits: String,
        }
        let raw = Raw::deserialize(d)?;
        if raw.n == 0 || raw.n > MAX_ARITY {
            return Err(D::Error::custom(format!(
                "arity {} outside 1..={MAX_ARITY}",
                raw.n
            )));
        }
        let table =
            Bits::from_hex(&raw.bits, 1 << raw.n).map_err(|e| D::Error::custom(e.to_string()))?;
        TruthTable::new(raw.n, table).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// An ordered `k`-tuple of `n`-bit strings. `k = 0` is allowed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KTuple {
    n: usize,
    elements: Vec<u64>,
}

impl KTuple {
    /// Validates every element against the shared bit width `n`.
    pub fn new(n: usize, elements: Vec<u64>) -> Result<Self> {
        if n == 0 || n > MAX_ARITY {
            return Err(Error::Degenerate(format!(
                "element width {n} outside 1..={MAX_ARITY}"
            )));
        }
        for &e in &elements {
            if e >> n != 0 {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: 64 - e.leading_zeros() as usize,
                });
            }
        }
        Ok(KTuple { n, elements })
    }

    /// Unpacks an `n*k`-bit integer, element 0 in the lowest `n` bits.
    pub fn unpack(packed: u128, n: usize, k: usize) -> Result<Self> {
        if n == 0 || n > MAX_ARITY {
            return Err(Error::Degenerate(format!(
                "element width {n} outside 1..={MAX_ARITY}"
            )));
        }
        if n * k > 128 {
            return Err(Error::Degenerate(format!(
                "packed form needs {} bits, max 128",
                n * k
            )));
        }
        if k < 128 && packed >> (n * k) != 0 {
            return Err(Error::ArityMismatch {
                expected: n * k,
                got: 128 - packed.leading_zeros() as usize,
            });
        }
        let mask = (1u128 << n) - 1;
        let elements = (0..k).map(|i| ((packed >> (n * i)) & mask) as u64).collect();
        Ok(KTuple { n, elements })
    }

    /// Packed `n*k`-bit form; requires `n*k <= 128`.
    pub fn pack(&self) -> u128 {
        let nk = self.n * self.elements.len();
        assert!(nk <= 128, "packed form needs {nk} bits, max 128");
        let mut v = 0u128;
        for (i, &e) in self.elements.iter().enumerate() {
            v |= (e as u128) << (self.n * i);
        }
        v
    }

    /// Uniformly random tuple.
    pub fn random(n: usize, k: usize, rng: &mut ChaCha12Rng) -> Result<Self> {
        let elements = (0..k).map(|_| rng.gen_range(0..1u64 << n)).collect();
        KTuple::new(n, elements)
    }

    pub fn k(&self) -> usize {
        self.elements.len()
    }

    pub fn element_bits(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[u64] {
        &self.elements
    }

    pub fn get(&self, i: usize) -> u64 {
        self.elements[i]
    }

    /// Keeps the coordinates selected by `r`, ascending by position.
    ///
    /// Errors if the mask length differs from `k`.
    pub fn restrict(&self, r: &Mask) -> Result<KTuple> {
        if r.len() != self.k() {
            return Err(Error::LengthMismatch {
                expected: self.k(),
                got: r.len(),
            });
        }
        let elements = r.iter_set().map(|i| self.elements[i]).collect();
        Ok(KTuple {
            n: self.n,
            elements,
        })
    }

    /// Concatenation `self ++ other` (shared element width).
    pub fn concat(&self, other: &KTuple) -> Result<KTuple> {
        if self.n != other.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut elements = self.elements.clone();
        elements.extend_from_slice(&other.elements);
        Ok(KTuple {
            n: self.n,
            elements,
        })
    }
}

impl std::fmt::Debug for KTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "KTuple(n={})", self.n)?;
        f.debug_list().entries(self.elements.iter()).finish()
    }
}

/// A bit string of length at most 64 with Hamming-weight semantics:
/// coordinate masks, direct-product outputs, decoder candidates.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mask {
    len: usize,
    bits: u64,
}

impl Mask {
    pub fn zeros(len: usize) -> Self {
        assert!(len <= 64, "mask length {len} exceeds 64");
        Mask { len, bits: 0 }
    }

    /// Low `len` bits of `bits`; panics on stray high bits.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        assert!(len <= 64, "mask length {len} exceeds 64");
        assert!(
            len == 64 || bits >> len == 0,
            "value {bits:#x} does not fit in {len} bits"
        );
        Mask { len, bits }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.bits >> i & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len);
        if v {
            self.bits |= 1 << i;
        } else {
            self.bits &= !(1 << i);
        }
    }

    /// Hamming weight `H(r)`.
    pub fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn parity(&self) -> bool {
        self.weight() % 2 == 1
    }

    /// Set positions in ascending order.
    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    /// All `2^len` masks of this length in numeric order.
    pub fn all(len: usize) -> impl Iterator<Item = Mask> {
        assert!(len < 64, "mask enumeration limited to length 63");
        (0..1u64 << len).map(move |bits| Mask { len, bits })
    }

    /// All masks of this length with exactly `w` set bits, in numeric
    /// order (Gosper's hack).
    pub fn all_of_weight(len: usize, w: u32) -> impl Iterator<Item = Mask> {
        assert!(len < 64, "mask enumeration limited to length 63");
        let mut next = if w == 0 { Some(0u64) } else { Some((1 << w) - 1) };
        std::iter::from_fn(move || {
            let bits = next?;
            if bits >> len != 0 {
                next = None;
                return None;
            }
            next = if bits == 0 {
                None
            } else {
                let c = bits & bits.wrapping_neg();
                let r = bits + c;
                Some(r | (((bits ^ r) >> 2) / c))
            };
            Some(Mask { len, bits })
        })
    }

    pub fn xor(&self, other: &Mask) -> Result<Mask> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(Mask {
            len: self.len,
            bits: self.bits ^ other.bits,
        })
    }

    /// Single set bit at `i`.
    pub fn unit(len: usize, i: usize) -> Mask {
        assert!(i < len && len <= 64);
        Mask { len, bits: 1 << i }
    }

    pub fn to_bits_string(&self) -> Bits {
        Bits::from_word(self.bits as u128, self.len)
    }
}

impl std::fmt::Debug for Mask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Mask[{}]<", self.len)?;
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        write!(f, ">")
    }
}

/// `⟨v, r⟩ = ⊕_i v_i r_i`, the inner product over GF(2).
///
/// Errors if the lengths differ.
pub fn inner_product(v: &Mask, r: &Mask) -> Result<bool> {
    if v.len() != r.len() {
        return Err(Error::LengthMismatch {
            expected: v.len(),
            got: r.len(),
        });
    }
    Ok((v.bits() & r.bits()).count_ones() % 2 == 1)
}

/// Probability that `k` independent uniform draws from a population
/// with ones-fraction `ω` have even ones-count: `1/2 + (1-2ω)^k / 2`.
///
/// Equivalently, the chance that the XOR of the selected bits is 0.
/// Callers must pass `0 <= ω <= 1`.
pub fn xor_zero_advantage(omega: &Frac, k: u32) -> Frac {
    assert!(
        !omega.is_negative() && *omega <= frac::one(),
        "ones-fraction must lie in [0,1]"
    );
    let bias = frac::one() - frac(2, 1) * omega;
    frac::half() + frac::pow(&bias, k) * frac::half()
}

/// Exact probability, over index tuples `(i_1..i_k)` drawn uniformly
/// with replacement from `m`'s positions, that the XOR of the selected
/// bits is 0.
///
/// Small spaces are walked literally; larger ones use an exact
/// parity-count recurrence over the draws (still a closed computation
/// of the same sum, never an estimate). `m` must be nonempty.
pub fn empirical_xor_zero_rate(m: &Bits, k: u32) -> Result<Frac> {
    if m.is_empty() {
        return Err(Error::Degenerate("empty population string".into()));
    }
    let len = m.len() as u128;
    let literal_budget: u128 = 1 << 20;
    let mut space = 1u128;
    let mut literal = true;
    for _ in 0..k {
        space = space.saturating_mul(len);
        if space > literal_budget {
            literal = false;
            break;
        }
    }
    if literal {
        // Odometer over [len]^k, counting even-parity selections.
        let mut idx = vec![0usize; k as usize];
        let mut even = 0u128;
        loop {
            let parity = idx.iter().filter(|&&i| m.get(i)).count() % 2;
            if parity == 0 {
                even += 1;
            }
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    return Ok(frac_u(even, space));
                }
                idx[pos] += 1;
                if idx[pos] < m.len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
        }
    }
    // p_even after j+1 draws = p_even_j * (1-ω) + (1 - p_even_j) * ω
    // counted exactly with integer numerators over len^j.
    let ones = BigInt::from(m.count_ones());
    let zeros = BigInt::from(m.len() as u64) - &ones;
    let mut even_count = BigInt::one();
    let mut denom = BigInt::one();
    for _ in 0..k {
        let odd_count = &denom - &even_count;
        even_count = &even_count * &zeros + &odd_count * &ones;
        denom *= BigInt::from(m.len() as u64);
    }
    Ok(Frac::new(even_count, denom))
}

/// `C(2k, k) / 4^k`: the probability that a uniform `2k`-bit mask has
/// weight exactly `k`. Requires `k >= 1`.
pub fn central_binomial_prob(k: u32) -> Frac {
    assert!(k >= 1, "defined for k >= 1");
    let num = frac::binomial(2 * k as u64, k as u64);
    let den = BigInt::from(4u32).pow(k);
    Frac::new(num, den)
}

/// Exact agreement count between a boolean predicate over packed
/// tuples and `f^{⊕k}`, as a fraction of all `2^{nk}` tuples.
///
/// Shared helper for adversary re-measurement and family audits; the
/// cap guards the `2^{nk}` walk.
pub fn xor_agreement_over_tuples(
    f: &TruthTable,
    k: usize,
    cap: EnumCap,
    predicate: impl Fn(&KTuple) -> bool,
) -> Result<Frac> {
    let n = f.arity();
    let total: u128 = 1 << (n * k);
    cap.check(total)?;
    let mut agree = 0u128;
    for packed in 0..total {
        let xs = KTuple::unpack(packed, n, k)?;
        if predicate(&xs) == f.xor_product(&xs)? {
            agree += 1;
        }
    }
    Ok(frac_u(agree, total))
}

/// Returns `floor(sqrt(x))` checks `cbp(k)^2 * 4k >= 1` exactly:
/// whether `C(2k,k)/4^k >= 1 / (2 sqrt(k))`.
pub fn central_binomial_at_least_half_inv_sqrt(k: u32) -> bool {
    let p = central_binomial_prob(k);
    let squared = &p * &p * frac(4, 1) * frac(k as i64, 1);
    squared >= frac::one()
}
