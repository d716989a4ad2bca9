//! From an XOR-form adversary to a direct-product computer.
//!
//! Given an oracle `M` that beats a coin at predicting `f^{⊕k}`, the
//! combiner algorithms here turn it into a predictor for arbitrary
//! parities of a tuple's `f`-values, which Hadamard list decoding then
//! converts into a direct-product computer:
//!
//! * [`algo_a`] answers even-size parities `f^{⊕2i}` by splitting its
//!   input in two, padding both halves with the *same* fillers, and
//!   XORing two `M` calls so the filler contributions cancel.
//! * [`algo_b_k`] answers `⟨f^k(x̄), r⟩` for arbitrary `r`: even-weight
//!   masks route through [`algo_a`], odd ones get a fair coin.
//! * [`algo_b_2k`] works over `2k`-tuples and answers weight-`k` masks
//!   with a single direct `M` call, recovering the stronger advantage
//!   that drives the second reduction variant.
//!
//! The advantage bookkeeping (`γ`/`β` profiles and the exact lemma
//! checkers) is done by direct enumeration of the combinatorial spaces
//! with exact rational weights. The tape-driven algorithms use
//! fixed-width draws whose modular bias makes their partition law only
//! approximately uniform; the checkers therefore never enumerate
//! tapes, and the measured (Monte-Carlo) and exact (ideal) views are
//! kept distinct in reports.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::bits::{Bits, TapeReader};
use crate::boolfn::{central_binomial_prob, KTuple, Mask, TruthTable};
use crate::frac::{self, binomial, frac, frac_u, serde_frac, Frac};
use crate::gldecode::{gl_decode_list, gl_decode_single, GLParams};
use crate::oracles::RandomizedAlgorithm;
use crate::seeding::{tape_for, Domain};
use crate::{EnumCap, Error, Result};

/// Where [`algo_a`]'s filler strings come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FillerMode {
    /// Fillers are fresh uniform `n`-bit strings from the tape.
    FreshRandom,
    /// Fillers are unused coordinates of a host tuple; requires the
    /// host to have at least `k - i` coordinates outside the input.
    WithinTuple,
}

/// Concrete filler source for a single [`algo_a`] call.
#[derive(Debug, Clone)]
pub enum FillerInput {
    Fresh,
    /// `used` marks the host coordinates that form the input; fillers
    /// are drawn from the rest. The input must equal `host|_used`.
    WithinTuple { host: KTuple, used: Mask },
}

/// Tape bits a Fisher–Yates shuffle of `m` elements consumes.
pub fn fisher_yates_tape_bits(m: usize) -> usize {
    (2..=m).map(|j| 64 - (j - 1).leading_zeros() as usize).sum()
}

/// Shuffle `0..count` with fixed bit consumption (see
/// [`TapeReader::take_below`] for the draw semantics).
fn tape_shuffle(tape: &mut TapeReader<'_>, count: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..count).collect();
    for j in (1..count).rev() {
        let idx = tape.take_below(j as u64 + 1) as usize;
        perm.swap(j, idx);
    }
    perm
}

fn mask_from_positions(len: usize, positions: impl IntoIterator<Item = usize>) -> Mask {
    let mut m = Mask::zeros(len);
    for p in positions {
        m.set(p, true);
    }
    m
}

fn run_m(m: &RandomizedAlgorithm, tuple: &KTuple, tape: &mut TapeReader<'_>) -> Result<bool> {
    let m_tape = Bits::from_fn(m.tape_len(), |_| tape.take_bit());
    let input = Bits::from_word(tuple.pack(), m.input_len());
    Ok(m.run(&input, &m_tape)?.get(0))
}

fn oracle_k(m: &RandomizedAlgorithm, n: usize) -> Result<usize> {
    if m.output_len() != 1 {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: m.output_len(),
        });
    }
    if n == 0 || m.input_len() == 0 || m.input_len() % n != 0 {
        return Err(Error::ArityMismatch {
            expected: n.max(1),
            got: m.input_len(),
        });
    }
    Ok(m.input_len() / n)
}

/// Tape bits one [`algo_a`] call consumes for a `2i`-tuple input.
///
/// Consumption order: partition shuffle, fillers (fresh draws or the
/// host-complement shuffle), then the two `M`-call tapes.
pub fn algo_a_tape_len(n: usize, k: usize, i: usize, mode: FillerMode, m_tape: usize) -> usize {
    let fillers = match mode {
        FillerMode::FreshRandom => (k - i) * n,
        FillerMode::WithinTuple => fisher_yates_tape_bits(2 * k - 2 * i),
    };
    fisher_yates_tape_bits(2 * i) + fillers + 2 * m_tape
}

/// Evaluates the even-parity combiner: partitions the `2i`-tuple input
/// into two `i`-tuples with tape randomness, extends both with the
/// same `k - i` fillers, and returns the XOR of the two `M` calls.
///
/// In fresh mode each `M` call sees fillers first, then a partition
/// half in input order. In within-tuple mode each call sees the host
/// restricted to fillers-plus-half in host-coordinate order, so every
/// `k`-subset of the host is always presented the same way — the exact
/// checkers count correctness per subset, and this keeps the
/// operational calls aligned with that bookkeeping.
pub fn algo_a(
    m: &RandomizedAlgorithm,
    input: &KTuple,
    filler: &FillerInput,
    tape: &mut TapeReader<'_>,
) -> Result<bool> {
    let n = input.element_bits();
    let k = oracle_k(m, n)?;
    if input.k() % 2 != 0 {
        return Err(Error::Degenerate(format!(
            "combiner input must have even size, got {}",
            input.k()
        )));
    }
    let i = input.k() / 2;
    if i > k {
        return Err(Error::Degenerate(format!(
            "input size {} exceeds 2k = {}",
            input.k(),
            2 * k
        )));
    }

    let perm = tape_shuffle(tape, 2 * i);
    let y_mask = mask_from_positions(2 * i, perm[..i].iter().copied());
    let z_mask = mask_from_positions(2 * i, perm[i..].iter().copied());

    match filler {
        FillerInput::Fresh => {
            let fillers = KTuple::new(
                n,
                (0..k - i).map(|_| tape.take_bits(n)).collect(),
            )?;
            let first = fillers.concat(&input.restrict(&y_mask)?)?;
            let second = fillers.concat(&input.restrict(&z_mask)?)?;
            let a = run_m(m, &first, tape)?;
            let b = run_m(m, &second, tape)?;
            Ok(a ^ b)
        }
        FillerInput::WithinTuple { host, used } => {
            if host.element_bits() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: host.element_bits(),
                });
            }
            if used.len() != host.k() || used.weight() as usize != 2 * i {
                return Err(Error::Inconsistent(
                    "host usage mask does not match the input size".into(),
                ));
            }
            if host.restrict(used)? != *input {
                return Err(Error::Inconsistent(
                    "input is not the host restricted to the usage mask".into(),
                ));
            }
            let unused: Vec<usize> =
                (0..host.k()).filter(|&p| !used.get(p)).collect();
            if unused.len() < k - i {
                return Err(Error::Infeasible(format!(
                    "host has {} unused coordinates, need {}",
                    unused.len(),
                    k - i
                )));
            }
            let perm = tape_shuffle(tape, unused.len());
            let p_mask = mask_from_positions(
                host.k(),
                perm[..k - i].iter().map(|&j| unused[j]),
            );
            // Positions of the two halves inside the host.
            let used_positions: Vec<usize> = used.iter_set().collect();
            let lift = |half: &Mask| {
                mask_from_positions(
                    host.k(),
                    half.iter_set().map(|p| used_positions[p]),
                )
            };
            let first = host.restrict(&p_mask.xor(&lift(&y_mask))?)?;
            let second = host.restrict(&p_mask.xor(&lift(&z_mask))?)?;
            let a = run_m(m, &first, tape)?;
            let b = run_m(m, &second, tape)?;
            Ok(a ^ b)
        }
    }
}

/// Fixed tape width for [`algo_b_k`] (maximum over its branches).
pub fn algo_b_k_tape_len(n: usize, k: usize, m_tape: usize) -> usize {
    (0..=k / 2)
        .map(|i| algo_a_tape_len(n, k, i, FillerMode::FreshRandom, m_tape))
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Parity predictor over `k`-tuples: for mask `r`, predicts
/// `⟨f^k(x̄), r⟩`. Odd-weight masks get a fair coin (the tape's first
/// bit); even-weight masks route through [`algo_a`] on `x̄|_r` with
/// fresh fillers. Within-tuple fillers cannot fit inside a `k`-host
/// and are rejected.
pub fn algo_b_k(
    m: &RandomizedAlgorithm,
    xs: &KTuple,
    r: &Mask,
    mode: FillerMode,
    tape: &mut TapeReader<'_>,
) -> Result<bool> {
    let k = oracle_k(m, xs.element_bits())?;
    if xs.k() != k || r.len() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: if xs.k() != k { xs.k() } else { r.len() },
        });
    }
    if mode == FillerMode::WithinTuple {
        return Err(Error::Infeasible(
            "a k-tuple host cannot supply k-i fillers beyond its own halves".into(),
        ));
    }
    if r.weight() % 2 == 1 {
        return Ok(tape.take_bit());
    }
    algo_a(m, &xs.restrict(r)?, &FillerInput::Fresh, tape)
}

/// Fixed tape width for [`algo_b_2k`] (maximum over its branches).
pub fn algo_b_2k_tape_len(n: usize, k: usize, mode: FillerMode, m_tape: usize) -> usize {
    (0..=k)
        .map(|i| algo_a_tape_len(n, k, i, mode, m_tape))
        .max()
        .unwrap_or(0)
        .max(m_tape)
        .max(1)
}

/// Parity predictor over `2k`-tuples: for mask `r`, predicts
/// `⟨f^{2k}(x̄), r⟩`. Weight-`k` masks are answered by a single direct
/// `M` call on `x̄|_r`; of the rest, odd weights get a coin and even
/// weights go through [`algo_a`]. The weight-`k` test runs first, so
/// for odd `k` those masks reach `M` rather than the coin.
pub fn algo_b_2k(
    m: &RandomizedAlgorithm,
    xs: &KTuple,
    r: &Mask,
    mode: FillerMode,
    tape: &mut TapeReader<'_>,
) -> Result<bool> {
    let k = oracle_k(m, xs.element_bits())?;
    if xs.k() != 2 * k || r.len() != 2 * k {
        return Err(Error::LengthMismatch {
            expected: 2 * k,
            got: if xs.k() != 2 * k { xs.k() } else { r.len() },
        });
    }
    let h = r.weight() as usize;
    if h == k {
        return run_m(m, &xs.restrict(r)?, tape);
    }
    if h % 2 == 1 {
        return Ok(tape.take_bit());
    }
    let filler = match mode {
        FillerMode::FreshRandom => FillerInput::Fresh,
        FillerMode::WithinTuple => FillerInput::WithinTuple {
            host: xs.clone(),
            used: *r,
        },
    };
    algo_a(m, &xs.restrict(r)?, &filler, tape)
}

/// Wraps [`algo_b_k`] with `x̄` baked in as a mask-input oracle for
/// list decoding. Shares `m`'s query counter.
pub fn b_k_oracle(
    m: &RandomizedAlgorithm,
    xs: &KTuple,
    mode: FillerMode,
) -> Result<RandomizedAlgorithm> {
    let n = xs.element_bits();
    let k = oracle_k(m, n)?;
    if mode == FillerMode::WithinTuple {
        return Err(Error::Infeasible(
            "a k-tuple host cannot supply k-i fillers beyond its own halves".into(),
        ));
    }
    if xs.k() != k {
        return Err(Error::LengthMismatch {
            expected: k,
            got: xs.k(),
        });
    }
    let tape_len = algo_b_k_tape_len(n, k, m.tape_len());
    let m = m.clone();
    let xs = xs.clone();
    Ok(RandomizedAlgorithm::new(k, 1, tape_len, move |input, tape| {
        let r = Mask::from_bits(input.as_u128() as u64, k);
        let mut reader = TapeReader::new(tape);
        let bit = algo_b_k(&m, &xs, &r, mode, &mut reader).expect("validated shapes");
        Bits::from_word(bit as u128, 1)
    }))
}

/// Wraps [`algo_b_2k`] with `x̄` baked in as a mask-input oracle.
pub fn b_2k_oracle(
    m: &RandomizedAlgorithm,
    xs: &KTuple,
    mode: FillerMode,
) -> Result<RandomizedAlgorithm> {
    let n = xs.element_bits();
    let k = oracle_k(m, n)?;
    if xs.k() != 2 * k {
        return Err(Error::LengthMismatch {
            expected: 2 * k,
            got: xs.k(),
        });
    }
    let tape_len = algo_b_2k_tape_len(n, k, mode, m.tape_len());
    let m = m.clone();
    let xs = xs.clone();
    Ok(RandomizedAlgorithm::new(
        2 * k,
        1,
        tape_len,
        move |input, tape| {
            let r = Mask::from_bits(input.as_u128() as u64, 2 * k);
            let mut reader = TapeReader::new(tape);
            let bit = algo_b_2k(&m, &xs, &r, mode, &mut reader).expect("validated shapes");
            Bits::from_word(bit as u128, 1)
        },
    ))
}

/// Per-tuple advantage over the mask distribution, with its exact
/// mean. Values index by packed tuple.
#[derive(Debug, Clone)]
pub struct AdvantageProfile {
    values: Vec<Frac>,
    mean: Frac,
}

impl AdvantageProfile {
    fn new(values: Vec<Frac>) -> Result<Self> {
        let half = frac::half();
        for v in &values {
            if v.abs() > half {
                return Err(Error::Inconsistent(format!(
                    "advantage {} outside [-1/2, 1/2]",
                    frac::render(v)
                )));
            }
        }
        let mean = values.iter().sum::<Frac>() / frac_u(values.len() as u128, 1);
        Ok(AdvantageProfile { values, mean })
    }

    pub fn mean(&self) -> &Frac {
        &self.mean
    }

    pub fn values(&self) -> &[Frac] {
        &self.values
    }

    pub fn value(&self, packed: u128) -> &Frac {
        &self.values[packed as usize]
    }

    pub fn min(&self) -> &Frac {
        self.values.iter().min().expect("profile is never empty")
    }

    pub fn max(&self) -> &Frac {
        self.values.iter().max().expect("profile is never empty")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `c[packed tuple] = Pr over M's tape that M(tuple) = f^{⊕k}(tuple)`,
/// for every `k`-tuple. The checkers and profiles below are all folds
/// over this table.
pub fn correctness_table(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    k: usize,
    cap: EnumCap,
) -> Result<Vec<Frac>> {
    let n = f.arity();
    if oracle_k(m, n)? != k {
        return Err(Error::ArityMismatch {
            expected: n * k,
            got: m.input_len(),
        });
    }
    let bits = n * k + m.tape_len();
    cap.check(if bits >= 128 { u128::MAX } else { 1u128 << bits })?;
    let tapes = 1u64 << m.tape_len();
    (0..1u64 << (n * k))
        .map(|packed| {
            let xs = KTuple::unpack(packed as u128, n, k)?;
            let want = f.xor_product(&xs)?;
            let input = Bits::from_word(packed as u128, n * k);
            let mut hits = 0u64;
            for tp in 0..tapes {
                let tape = Bits::from_word(tp as u128, m.tape_len());
                hits += (m.run(&input, &tape)?.get(0) == want) as u64;
            }
            Ok(frac_u(hits as u128, tapes as u128))
        })
        .collect()
}

/// Exact advantage of `M` at predicting `f^{⊕k}` over uniform tuples
/// and tapes.
pub fn measured_xor_advantage(c: &[Frac]) -> Frac {
    c.iter().sum::<Frac>() / frac_u(c.len() as u128, 1) - frac::half()
}

/// Per-`2k`-tuple advantage of `M` at predicting the weight-`k` mask
/// parities: `γ_x̄ = Pr_r[M(x̄|_r) = ⟨f^{2k}(x̄), r⟩] − 1/2` over
/// uniform weight-`k` masks. Its mean over uniform hosts equals `M`'s
/// plain advantage exactly, because a uniform host restricted to a
/// uniform weight-`k` mask is a uniform `k`-tuple.
pub fn gamma_profile(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    k: usize,
    cap: EnumCap,
) -> Result<AdvantageProfile> {
    let n = f.arity();
    let c = correctness_table(m, f, k, cap)?;
    let hosts = 1u128 << (2 * n * k);
    let mask_count = binomial(2 * k as u64, k as u64);
    cap.check(hosts.saturating_mul(mask_count.to_u128().unwrap_or(u128::MAX)))?;
    let masks: Vec<Mask> = Mask::all_of_weight(2 * k, k as u32).collect();
    let values = (0..hosts)
        .map(|packed| {
            let xs = KTuple::unpack(packed, n, 2 * k)?;
            let mut acc = frac::zero();
            for r in &masks {
                acc += &c[xs.restrict(r)?.pack() as usize];
            }
            Ok(acc / Frac::from(mask_count.clone()) - frac::half())
        })
        .collect::<Result<Vec<_>>>()?;
    AdvantageProfile::new(values)
}

/// Probability that one [`algo_a`] call on `host|_used` is correct,
/// under ideal uniform partitions and fillers, from the correctness
/// table. The two `M` calls are independent given the partition and
/// fillers, so the correct-event probability is
/// `c₁·c₂ + (1−c₁)·(1−c₂)` pointwise.
fn a_success(
    c: &[Frac],
    n: usize,
    k: usize,
    host: &KTuple,
    used: &Mask,
    mode: FillerMode,
) -> Result<Frac> {
    let i = used.weight() as usize / 2;
    let input = host.restrict(used)?;
    let mut acc = frac::zero();
    let mut states = 0u64;
    for y in Mask::all_of_weight(2 * i, i as u32) {
        let z = Mask::from_bits(((1u64 << (2 * i)) - 1) ^ y.bits(), 2 * i);
        match mode {
            FillerMode::FreshRandom => {
                let ybar = input.restrict(&y)?;
                let zbar = input.restrict(&z)?;
                let shift = n * (k - i);
                let y_high = (ybar.pack() as u128) << shift;
                let z_high = (zbar.pack() as u128) << shift;
                for t in 0..1u128 << shift {
                    let c1 = &c[(t | y_high) as usize];
                    let c2 = &c[(t | z_high) as usize];
                    acc += c1 * c2 + (frac::one() - c1) * (frac::one() - c2);
                    states += 1;
                }
            }
            FillerMode::WithinTuple => {
                let used_positions: Vec<usize> = used.iter_set().collect();
                let unused: Vec<usize> =
                    (0..host.k()).filter(|&p| !used.get(p)).collect();
                let lift = |half: &Mask| {
                    mask_from_positions(host.k(), half.iter_set().map(|p| used_positions[p]))
                };
                let y_host = lift(&y);
                let z_host = lift(&z);
                for p in Mask::all_of_weight(unused.len(), (k - i) as u32) {
                    let p_host =
                        mask_from_positions(host.k(), p.iter_set().map(|j| unused[j]));
                    let c1 = &c[host.restrict(&p_host.xor(&y_host)?)?.pack() as usize];
                    let c2 = &c[host.restrict(&p_host.xor(&z_host)?)?.pack() as usize];
                    acc += c1 * c2 + (frac::one() - c1) * (frac::one() - c2);
                    states += 1;
                }
            }
        }
    }
    Ok(acc / frac_u(states as u128, 1))
}

/// Per-`k`-tuple advantage of the [`algo_b_k`] predictor over uniform
/// masks, under ideal partition and filler randomness.
pub fn beta_profile_b_k(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    k: usize,
    mode: FillerMode,
    cap: EnumCap,
) -> Result<AdvantageProfile> {
    if mode == FillerMode::WithinTuple {
        return Err(Error::Infeasible(
            "a k-tuple host cannot supply k-i fillers beyond its own halves".into(),
        ));
    }
    let n = f.arity();
    let c = correctness_table(m, f, k, cap)?;
    let values = (0..1u128 << (n * k))
        .map(|packed| {
            let xs = KTuple::unpack(packed, n, k)?;
            let mut acc = frac::zero();
            for r in Mask::all(k) {
                if r.weight() % 2 == 1 {
                    acc += frac::half();
                } else {
                    acc += a_success(&c, n, k, &xs, &r, mode)?;
                }
            }
            Ok(acc / frac_u(1 << k, 1) - frac::half())
        })
        .collect::<Result<Vec<_>>>()?;
    AdvantageProfile::new(values)
}

/// Per-`2k`-tuple advantage of the [`algo_b_2k`] predictor over
/// uniform masks, under ideal randomness. Weight-`k` masks take the
/// direct `M` probability; other odd weights contribute exactly 1/2.
pub fn beta_profile_b_2k(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    k: usize,
    mode: FillerMode,
    cap: EnumCap,
) -> Result<AdvantageProfile> {
    let n = f.arity();
    let c = correctness_table(m, f, k, cap)?;
    let hosts = 1u128 << (2 * n * k);
    cap.check(hosts.saturating_mul(1 << (2 * k)))?;
    let values = (0..hosts)
        .map(|packed| {
            let xs = KTuple::unpack(packed, n, 2 * k)?;
            let mut acc = frac::zero();
            for r in Mask::all(2 * k) {
                let h = r.weight() as usize;
                if h == k {
                    acc += &c[xs.restrict(&r)?.pack() as usize];
                } else if h % 2 == 1 {
                    acc += frac::half();
                } else {
                    acc += a_success(&c, n, k, &xs, &r, mode)?;
                }
            }
            Ok(acc / frac_u(1 << (2 * k), 1) - frac::half())
        })
        .collect::<Result<Vec<_>>>()?;
    AdvantageProfile::new(values)
}

/// One even level of the per-host combiner check.
#[derive(Debug, Clone, Serialize)]
pub struct CombinerLevel {
    /// Half the input size: the combiner answers `2i`-parities.
    pub i: usize,
    /// Success probability when the two `k`-subsets are drawn
    /// independently above a shared filler set — the form the counting
    /// argument bounds, guaranteed to clear `1/2 + 2γ²`.
    #[serde(with = "serde_frac")]
    pub independent_form: Frac,
    /// Success probability of the operational disjoint partition
    /// (halves never overlap). Reported, not asserted: adversarial
    /// wrongness patterns split complementary subsets and push this
    /// below the bound even when `γ = 0`.
    #[serde(with = "serde_frac")]
    pub partition_form: Frac,
    pub independent_form_pass: bool,
    pub partition_form_pass: bool,
}

/// Per-host combiner guarantee report: for each level `i`, the
/// independent-draw success is at least `1/2 + 2γ_x̄²`.
#[derive(Debug, Clone, Serialize)]
pub struct PerHostCombinerReport {
    #[serde(with = "serde_frac")]
    pub gamma: Frac,
    /// `1/2 + 2γ²`.
    #[serde(with = "serde_frac")]
    pub bound: Frac,
    pub levels: Vec<CombinerLevel>,
    pub independent_form_all_pass: bool,
    /// Levels where the disjoint-partition variant dips below the
    /// bound.
    pub partition_violations: usize,
}

/// Exact per-host check of the combiner's advantage amplification.
///
/// For the given `2k`-tuple, computes `γ_x̄` over weight-`k` masks and
/// then, for each `i`, two success probabilities for predicting
/// agreement between two `M` calls on `k`-subsets sharing `k−i` filler
/// coordinates: once with the subsets drawn independently (asserted
/// against `1/2 + 2γ_x̄²` — Jensen over the shared filler set makes
/// this unconditional), and once with the operational disjoint
/// partition (reported; see [`CombinerLevel::partition_form`]).
pub fn lemma2_exact_check(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    xs: &KTuple,
    cap: EnumCap,
) -> Result<PerHostCombinerReport> {
    let n = f.arity();
    let k = oracle_k(m, n)?;
    if xs.k() != 2 * k || xs.element_bits() != n {
        return Err(Error::LengthMismatch {
            expected: 2 * k,
            got: xs.k(),
        });
    }
    let c = correctness_table(m, f, k, cap)?;
    // Correctness per k-subset of the host, indexed by mask bits.
    let mut subset_c = vec![frac::zero(); 1 << (2 * k)];
    let mut gamma = frac::zero();
    for s in Mask::all_of_weight(2 * k, k as u32) {
        let v = c[xs.restrict(&s)?.pack() as usize].clone();
        gamma += &v;
        subset_c[s.bits() as usize] = v;
    }
    gamma = gamma / Frac::from(binomial(2 * k as u64, k as u64)) - frac::half();
    let bound = frac::half() + frac(2, 1) * &gamma * &gamma;

    let mut levels = Vec::with_capacity(k + 1);
    for i in 0..=k {
        // Independent draws: average over shared sets P of size k-i of
        // a_P² + (1-a_P)², a_P the mean correctness over supersets.
        let mut independent = frac::zero();
        let mut p_count = 0u64;
        // Disjoint partition: uniform ordered pairs (S1, S2) of
        // weight-k subsets intersecting exactly in P.
        let mut partition = frac::zero();
        let mut pair_count = 0u64;
        for p in Mask::all_of_weight(2 * k, (k - i) as u32) {
            let free: Vec<usize> = (0..2 * k).filter(|&j| !p.get(j)).collect();
            let supersets: Vec<&Frac> = Mask::all_of_weight(free.len(), i as u32)
                .map(|q| {
                    let s = p.bits() | q.iter_set().fold(0u64, |acc, j| acc | 1 << free[j]);
                    &subset_c[s as usize]
                })
                .collect();
            let a: Frac =
                supersets.iter().copied().sum::<Frac>() / frac_u(supersets.len() as u128, 1);
            independent += &a * &a + (frac::one() - &a) * (frac::one() - &a);
            p_count += 1;

            for q1 in Mask::all_of_weight(free.len(), i as u32) {
                let s1 = p.bits() | q1.iter_set().fold(0u64, |acc, j| acc | 1 << free[j]);
                let rest: Vec<usize> = (0..free.len()).filter(|&j| !q1.get(j)).collect();
                for q2 in Mask::all_of_weight(rest.len(), i as u32) {
                    let s2 = p.bits()
                        | q2.iter_set().fold(0u64, |acc, j| acc | 1 << free[rest[j]]);
                    let c1 = &subset_c[s1 as usize];
                    let c2 = &subset_c[s2 as usize];
                    partition += c1 * c2 + (frac::one() - c1) * (frac::one() - c2);
                    pair_count += 1;
                }
            }
        }
        let independent_form = independent / frac_u(p_count as u128, 1);
        let partition_form = partition / frac_u(pair_count as u128, 1);
        levels.push(CombinerLevel {
            i,
            independent_form_pass: independent_form >= bound,
            partition_form_pass: partition_form >= bound,
            independent_form,
            partition_form,
        });
    }
    Ok(PerHostCombinerReport {
        independent_form_all_pass: levels.iter().all(|l| l.independent_form_pass),
        partition_violations: levels.iter().filter(|l| !l.partition_form_pass).count(),
        gamma,
        bound,
        levels,
    })
}

/// Mean combiner success at level `i` over uniform `2i`-tuples: with a
/// shared filler tuple `t`, the two halves are independent uniform, so
/// the exact value is `E_t[a_t² + (1−a_t)²]` for `a_t` the mean
/// correctness over completions of `t`.
fn mean_a_success(c: &[Frac], n: usize, k: usize, i: usize) -> Frac {
    let filler_bits = n * (k - i);
    let mut acc = frac::zero();
    for t in 0..1u128 << filler_bits {
        let mut a = frac::zero();
        for y in 0..1u128 << (n * i) {
            a += &c[(t | (y << filler_bits)) as usize];
        }
        a = a / frac_u(1 << (n * i), 1);
        acc += &a * &a + (frac::one() - &a) * (frac::one() - &a);
    }
    acc / frac_u(1 << filler_bits, 1)
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanCombinerLevel {
    pub i: usize,
    /// Mean success over uniform `2i`-tuples.
    #[serde(with = "serde_frac")]
    pub success: Frac,
    /// `1/2 + 2ε²`.
    #[serde(with = "serde_frac")]
    pub bound: Frac,
    pub pass: bool,
}

/// Report for the averaged combiner and predictor guarantees.
#[derive(Debug, Clone, Serialize)]
pub struct MeanAdvantageReport {
    /// `M`'s measured advantage, recomputed from scratch.
    #[serde(with = "serde_frac")]
    pub epsilon: Frac,
    pub levels: Vec<MeanCombinerLevel>,
    /// Mean advantage of the mask predictor over uniform tuples.
    #[serde(with = "serde_frac")]
    pub beta_mean: Frac,
    /// `ε²`.
    #[serde(with = "serde_frac")]
    pub beta_bound: Frac,
    pub beta_pass: bool,
    /// The per-tuple profile mean agrees with the per-branch
    /// aggregation — a pure bookkeeping identity.
    pub decomposition_consistent: bool,
    pub all_pass: bool,
}

/// Exact averaged guarantees for the `k`-mask predictor: each even
/// level clears `1/2 + 2ε²` in the mean, and the predictor's mean
/// advantage clears `ε²` (measured `ε`, as rationals).
pub fn lemma3_lemma4_exact_check(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    k: usize,
    cap: EnumCap,
) -> Result<MeanAdvantageReport> {
    let n = f.arity();
    if oracle_k(m, n)? != k {
        return Err(Error::ArityMismatch {
            expected: n * k,
            got: m.input_len(),
        });
    }
    let c = correctness_table(m, f, k, cap)?;
    let epsilon = measured_xor_advantage(&c);
    let level_bound = frac::half() + frac(2, 1) * &epsilon * &epsilon;

    let successes: Vec<Frac> = (0..=k / 2).map(|i| mean_a_success(&c, n, k, i)).collect();
    let levels: Vec<MeanCombinerLevel> = successes
        .iter()
        .enumerate()
        .map(|(i, s)| MeanCombinerLevel {
            i,
            success: s.clone(),
            bound: level_bound.clone(),
            pass: *s >= level_bound,
        })
        .collect();

    // Branch aggregation: odd masks contribute advantage 0, the even
    // weight-2i masks contribute their mean success.
    let mut branch_mean = frac::zero();
    for (i, s) in successes.iter().enumerate() {
        branch_mean +=
            Frac::from(binomial(k as u64, 2 * i as u64)) * (s - frac::half());
    }
    branch_mean = branch_mean / frac_u(1 << k, 1);

    let profile = beta_profile_b_k(m, f, k, FillerMode::FreshRandom, cap)?;
    let beta_bound = &epsilon * &epsilon;
    let beta_pass = branch_mean >= beta_bound;
    let all_pass = beta_pass && levels.iter().all(|l| l.pass);
    Ok(MeanAdvantageReport {
        epsilon,
        levels,
        decomposition_consistent: *profile.mean() == branch_mean,
        beta_mean: branch_mean,
        beta_bound,
        beta_pass,
        all_pass,
    })
}

/// Report for the `2k`-mask predictor's branch decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct WideMaskReport {
    pub k: usize,
    /// The decomposition is asserted only for even `k`; for odd `k`
    /// the weight-`k` masks sit inside the odd-weight region and the
    /// accounting is reported as computed.
    pub asserted: bool,
    #[serde(with = "serde_frac")]
    pub epsilon: Frac,
    /// Mean advantage of the weight-`k` direct branch; equals `ε`
    /// exactly by the uniform-restriction argument.
    #[serde(with = "serde_frac")]
    pub direct_branch_advantage: Frac,
    /// Probability that a uniform `2k`-mask has weight exactly `k`.
    #[serde(with = "serde_frac")]
    pub weight_k_probability: Frac,
    /// Probability of an even weight other than `k`.
    #[serde(with = "serde_frac")]
    pub even_other_probability: Frac,
    #[serde(with = "serde_frac")]
    pub beta_mean: Frac,
    /// `Pr[H=k]·ε + Pr[H even, H≠k]·2ε²`.
    #[serde(with = "serde_frac")]
    pub bound: Frac,
    pub pass: bool,
}

/// Exact branch decomposition of the `2k`-mask predictor's mean
/// advantage: the weight-`k` branch contributes its mask probability
/// times `ε` exactly, and every other even level is bounded by the
/// averaged combiner guarantee.
pub fn lemma5_exact_check(
    m: &RandomizedAlgorithm,
    f: &TruthTable,
    k: usize,
    cap: EnumCap,
) -> Result<WideMaskReport> {
    let n = f.arity();
    if oracle_k(m, n)? != k {
        return Err(Error::ArityMismatch {
            expected: n * k,
            got: m.input_len(),
        });
    }
    let c = correctness_table(m, f, k, cap)?;
    let epsilon = measured_xor_advantage(&c);

    // Direct-branch advantage over uniform (host, weight-k mask),
    // computed by independent enumeration rather than the uniformity
    // argument, as a cross-check.
    let hosts = 1u128 << (2 * n * k);
    cap.check(hosts)?;
    let mut direct = frac::zero();
    let masks: Vec<Mask> = Mask::all_of_weight(2 * k, k as u32).collect();
    for packed in 0..hosts {
        let xs = KTuple::unpack(packed, n, 2 * k)?;
        for r in &masks {
            direct += &c[xs.restrict(r)?.pack() as usize];
        }
    }
    direct = direct / frac_u(hosts, 1) / frac_u(masks.len() as u128, 1) - frac::half();

    let weight_k_probability = central_binomial_prob(k as u32);
    let four_k = frac_u(1 << (2 * k), 1);
    let mut even_other = frac::zero();
    let mut beta_mean = &weight_k_probability * &direct;
    for i in 0..=k {
        if 2 * i == k {
            continue;
        }
        let p_level = Frac::from(binomial(2 * k as u64, 2 * i as u64)) / &four_k;
        beta_mean += &p_level * (mean_a_success(&c, n, k, i) - frac::half());
        even_other += p_level;
    }

    let bound = &weight_k_probability * &epsilon
        + &even_other * frac(2, 1) * &epsilon * &epsilon;
    Ok(WideMaskReport {
        k,
        asserted: k % 2 == 0,
        pass: beta_mean >= bound,
        direct_branch_advantage: direct,
        weight_k_probability,
        even_other_probability: even_other,
        beta_mean,
        bound,
        epsilon,
    })
}

/// How the pipeline turns a candidate list into its answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GlOutputMode {
    /// Uniform pick from the list — the contract's single-output form.
    Single,
    /// Top-scoring candidate — a labeled heuristic for calibrated
    /// high-signal runs. At odd `k` the pick is refined by
    /// repeated-element oracle probes, the only view that separates a
    /// candidate from its complement: every even-size parity of `f`
    /// values scores the two identically.
    BestByScore,
}

/// Tuning for the reduction pipelines.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReduceParams {
    /// Reference-mask count for the decoder; `None` derives it from
    /// the advantage.
    pub guess_bits: Option<usize>,
    pub votes_per_bit: u64,
    pub score_samples: Option<u64>,
    pub output_mode: GlOutputMode,
    pub filler_mode: FillerMode,
}

impl Default for ReduceParams {
    fn default() -> Self {
        ReduceParams {
            guess_bits: None,
            votes_per_bit: 1,
            score_samples: None,
            output_mode: GlOutputMode::Single,
            filler_mode: FillerMode::FreshRandom,
        }
    }
}

/// A built reduction: the output algorithm plus its bookkeeping.
pub struct ReductionPipeline {
    /// The direct-product computer. Its 64-bit tape seeds the decoder.
    pub algorithm: RandomizedAlgorithm,
    /// Advantage handed to the decoder (floored at [`GAMMA_FLOOR`]).
    pub gamma: Frac,
    pub guess_bits: usize,
    /// Populated when the advantage sits at or below the `2^{-k}`
    /// threshold where the guarantee degenerates.
    pub warning: Option<String>,
    /// Decoder invocations so far (one per algorithm call).
    pub decoder_invocations: Arc<AtomicU64>,
    /// Predictor calls made by the decoder so far.
    pub predictor_queries: Arc<AtomicU64>,
}

/// Smallest advantage fed to the decoder: zero-advantage oracles stay
/// runnable (their candidate filter sits just above one half) instead
/// of erroring out.
pub fn gamma_floor() -> Frac {
    frac(1, 65536)
}

/// Decoder advantage for the `k`-mask route: `ε²`.
pub fn thm1_gl_gamma(epsilon: &Frac) -> Frac {
    epsilon * epsilon
}

/// Decoder advantage for the `2k`-mask route:
/// `ε · Pr[H = k] + ε²`.
pub fn thm3_gl_gamma(epsilon: &Frac, k: usize) -> Frac {
    epsilon * central_binomial_prob(k as u32) + epsilon * epsilon
}

fn build_pipeline(
    m: &RandomizedAlgorithm,
    n: usize,
    k: usize,
    epsilon: &Frac,
    params: &ReduceParams,
    wide: bool,
) -> Result<ReductionPipeline> {
    let mk = oracle_k(m, n)?;
    if mk != k {
        return Err(Error::ArityMismatch {
            expected: n * k,
            got: m.input_len(),
        });
    }
    if epsilon.is_negative() || *epsilon > frac::half() {
        return Err(Error::Infeasible(format!(
            "advantage {} outside [0, 1/2]",
            frac::render(epsilon)
        )));
    }
    if let Some(g) = params.guess_bits {
        if !(1..=crate::gldecode::MAX_GUESS_BITS).contains(&g) {
            return Err(Error::Infeasible(format!(
                "guess_bits {g} outside 1..={}",
                crate::gldecode::MAX_GUESS_BITS
            )));
        }
    }
    let mask_bits = if wide { 2 * k } else { k };
    let raw_gamma = if wide {
        thm3_gl_gamma(epsilon, k)
    } else {
        thm1_gl_gamma(epsilon)
    };
    let gamma = raw_gamma.max(gamma_floor());
    let threshold = frac_u(1, 1 << k);
    let warning = (*epsilon <= threshold).then(|| {
        format!(
            "advantage {} at or below the 2^-k threshold {}; no amplification guarantee",
            frac::render(epsilon),
            frac::render(&threshold)
        )
    });
    let guess_bits = params
        .guess_bits
        .unwrap_or_else(|| GLParams::default_for(mask_bits, &gamma, 0).guess_bits);

    let decoder_invocations = Arc::new(AtomicU64::new(0));
    let predictor_queries = Arc::new(AtomicU64::new(0));
    let m = m.clone();
    let gamma_cl = gamma.clone();
    let params_cl = params.clone();
    let invocations = Arc::clone(&decoder_invocations);
    let queries = Arc::clone(&predictor_queries);
    let tuple_len = if wide { 2 * k } else { k };
    let algorithm = RandomizedAlgorithm::new(
        n * tuple_len,
        mask_bits,
        64,
        move |input, tape| {
            let xs = KTuple::unpack(input.as_u128(), n, tuple_len).expect("validated input");
            let predictor = if wide {
                b_2k_oracle(&m, &xs, params_cl.filler_mode)
            } else {
                b_k_oracle(&m, &xs, params_cl.filler_mode)
            }
            .expect("validated shapes");
            let seed = TapeReader::new(tape).take_bits(64);
            let glp = GLParams {
                guess_bits,
                votes_per_bit: params_cl.votes_per_bit,
                seed,
                score_samples: params_cl.score_samples,
            };
            let value = match params_cl.output_mode {
                GlOutputMode::Single => gl_decode_single(&predictor, mask_bits, &gamma_cl, &glp)
                    .expect("validated decoder parameters"),
                GlOutputMode::BestByScore => {
                    let list = gl_decode_list(&predictor, mask_bits, &gamma_cl, &glp)
                        .expect("validated decoder parameters");
                    if k % 2 == 1 && !list.is_empty() {
                        // Odd k: a repeated-element call M(x_j,…,x_j)
                        // collapses to a single coordinate of f — an odd
                        // parity that no even-weight mask carries — so
                        // these probes split candidate pairs whose mask
                        // scores tie exactly.
                        let probes: Vec<bool> = (0..tuple_len)
                            .map(|j| {
                                let diag = KTuple::new(n, vec![xs.get(j); k])
                                    .expect("validated element width");
                                let probe_tape =
                                    tape_for(seed, Domain::GlPick, 1 + j as u64, m.tape_len());
                                m.run(&Bits::from_word(diag.pack(), n * k), &probe_tape)
                                    .expect("validated shapes")
                                    .get(0)
                            })
                            .collect();
                        let mut best = list.candidates[0].value;
                        let mut best_matches = 0usize;
                        for (rank, cand) in list.candidates.iter().enumerate() {
                            let matches = (0..tuple_len)
                                .filter(|&j| (cand.value >> j) & 1 == probes[j] as u64)
                                .count();
                            if rank == 0 || matches > best_matches {
                                best = cand.value;
                                best_matches = matches;
                            }
                        }
                        best
                    } else {
                        list.best().map_or(0, |c| c.value)
                    }
                }
            };
            invocations.fetch_add(1, Ordering::Relaxed);
            queries.fetch_add(predictor.queries(), Ordering::Relaxed);
            Bits::from_word(value as u128, mask_bits)
        },
    );
    Ok(ReductionPipeline {
        algorithm,
        gamma,
        guess_bits,
        warning,
        decoder_invocations,
        predictor_queries,
    })
}

/// Builds the direct-product computer for `f^k` from an XOR-form
/// oracle with advantage `ε`: each call list-decodes the `k`-mask
/// predictor with decoder advantage `ε²`. The pipeline warns (does not
/// fail) when `ε ≤ 2^{-k}`. Within-tuple fillers cannot apply on the
/// `k`-mask route.
pub fn reduce_thm1(
    m: &RandomizedAlgorithm,
    n: usize,
    k: usize,
    epsilon: &Frac,
    params: &ReduceParams,
) -> Result<ReductionPipeline> {
    if params.filler_mode == FillerMode::WithinTuple {
        return Err(Error::Infeasible(
            "a k-tuple host cannot supply k-i fillers beyond its own halves".into(),
        ));
    }
    build_pipeline(m, n, k, epsilon, params, false)
}

/// Builds the direct-product computer for `f^{2k}` (truncate for
/// `f^k`): each call list-decodes the `2k`-mask predictor with decoder
/// advantage `ε·Pr[H=k] + ε²`, riding the stronger weight-`k` direct
/// branch.
pub fn reduce_thm3(
    m: &RandomizedAlgorithm,
    n: usize,
    k: usize,
    epsilon: &Frac,
    params: &ReduceParams,
) -> Result<ReductionPipeline> {
    build_pipeline(m, n, k, epsilon, params, true)
}
