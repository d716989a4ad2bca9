//! Local list decoding of the Hadamard code.
//!
//! Given an oracle `B` over `n`-bit masks that agrees with `r ↦ ⟨x,r⟩`
//! on a `1/2 + γ` fraction of its input-tape space, `gl_decode_list`
//! recovers a short list of candidates that contains `x` with good
//! probability, using the classic reference-mask subset trick: guess
//! the inner products of `x` with `l` random masks, then read each bit
//! of `x` off as a majority of pairwise-independent votes.
//!
//! Candidates are scored by measured agreement with `B` and kept only
//! above the standard testing threshold `1/2 + γ/2`, so the list stays
//! short enough for the uniform single-output form to hit any fixed
//! candidate with probability bounded below. `hadamard_brute_decode`
//! is the independent reference: it scores every string in the domain
//! exactly via an integer Walsh–Hadamard transform.

use num_traits::Signed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::boolfn::TruthTable;
use crate::frac::{self, frac, frac_u, serde_frac_opt, Frac};
use crate::oracles::RandomizedAlgorithm;
use crate::seeding::{rng_for, tape_for, word_below, Domain};
use crate::{Error, Result};

/// Hard ceiling on `guess_bits`: the candidate loop enumerates `2^l`
/// sign patterns.
pub const MAX_GUESS_BITS: usize = 16;

/// Default number of sampled masks when exact scoring is out of reach.
pub const DEFAULT_SCORE_SAMPLES: u64 = 512;

/// Exact scoring is used when `n + tape_len` is at most this.
const EXACT_SCORE_BITS: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GLParams {
    /// Number of reference masks `l`; `2^l` sign guesses are tried.
    pub guess_bits: usize,
    /// Oracle tape redraws per `(subset, bit)` query. Each redraw
    /// contributes one vote to the majority; for tapeless oracles
    /// values above 1 are redundant but harmless.
    pub votes_per_bit: u64,
    pub seed: u64,
    /// Sampled masks for scoring when exact scoring is infeasible;
    /// `None` means the default.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub score_samples: Option<u64>,
}

impl GLParams {
    pub fn new(guess_bits: usize, seed: u64) -> Self {
        GLParams {
            guess_bits,
            votes_per_bit: 1,
            seed,
            score_samples: None,
        }
    }

    /// Default mask budget for advantage `γ`: the smallest `l` with
    /// `2^l ≥ n/γ²`, clamped to `1..=12`.
    pub fn default_for(n: usize, gamma: &Frac, seed: u64) -> Self {
        let gamma_sq = gamma * gamma;
        let mut l = 1;
        while l < 12 {
            // 2^l * γ² ≥ n ?
            if frac_u(1 << l, 1) * &gamma_sq >= frac_u(n as u128, 1) {
                break;
            }
            l += 1;
        }
        GLParams::new(l, seed)
    }
}

/// How candidate scores were measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScoreMethod {
    /// Full enumeration of the oracle's mask-tape space.
    Exact,
    /// Agreement over sampled masks (count given).
    Sampled { samples: u64 },
}

/// One decoded candidate with its measured agreement against `B`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    /// The `n`-bit string, packed little-endian.
    pub value: u64,
    /// Float summary of the agreement score.
    pub score: f64,
    /// Exact agreement, present when scoring enumerated.
    #[serde(with = "serde_frac_opt", default)]
    pub exact: Option<Frac>,
}

/// Scored candidates, best first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateList {
    pub n: usize,
    pub guess_bits: usize,
    /// Candidates kept: score at least `1/2 + γ/2`, sorted by score
    /// descending, ties toward smaller values.
    pub candidates: Vec<Candidate>,
    /// The filter threshold that was applied.
    pub threshold: f64,
    pub score_method: ScoreMethod,
}

impl CandidateList {
    pub fn contains(&self, value: u64) -> bool {
        self.candidates.iter().any(|c| c.value == value)
    }

    /// Highest-scoring candidate, if any.
    pub fn best(&self) -> Option<&Candidate> {
        self.candidates.first()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// In-place integer Walsh–Hadamard transform:
/// `v[x] ← Σ_r v₀[r] · (−1)^{⟨x,r⟩}`. Length must be a power of two.
fn wht_i64(v: &mut [i64]) {
    debug_assert!(v.len().is_power_of_two());
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

fn check_oracle_shape(b: &RandomizedAlgorithm, n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Degenerate("mask length 0".into()));
    }
    if n > 63 {
        return Err(Error::Degenerate(format!("mask length {n} exceeds 63")));
    }
    if b.input_len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: b.input_len(),
        });
    }
    if b.output_len() != 1 {
        return Err(Error::LengthMismatch {
            expected: 1,
            got: b.output_len(),
        });
    }
    Ok(())
}

fn parity64(v: u64) -> bool {
    v.count_ones() & 1 == 1
}

/// Lists candidates for the string behind `B`.
///
/// Draws `l` reference masks from the seed; for each of the `2^l`
/// guesses of `x`'s inner products with them, reads bit `i` of a
/// candidate as the majority over nonempty subsets `S` of
/// `B(r_S ⊕ e_i) ⊕ ⟨guess, S⟩` where `r_S` XORs the subset. Majority
/// ties break toward 0. Oracle calls do not depend on the guess, so
/// each `(S, i)` query runs once per tape redraw and its vote is
/// reused across all `2^l` guesses. Deterministic given `params`.
pub fn gl_decode_list(
    b: &RandomizedAlgorithm,
    n: usize,
    gamma: &Frac,
    params: &GLParams,
) -> Result<CandidateList> {
    check_oracle_shape(b, n)?;
    if !gamma.is_positive() {
        return Err(Error::Infeasible(format!(
            "advantage {} must be positive",
            frac::render(gamma)
        )));
    }
    let l = params.guess_bits;
    if l == 0 || l > MAX_GUESS_BITS {
        return Err(Error::Degenerate(format!(
            "guess_bits {l} outside 1..={MAX_GUESS_BITS}"
        )));
    }
    if params.votes_per_bit == 0 {
        return Err(Error::Degenerate("votes_per_bit must be at least 1".into()));
    }

    let mut mask_rng = rng_for(params.seed, Domain::GlMasks, 0);
    let refs: Vec<u64> = (0..l)
        .map(|_| word_below(&mut mask_rng, 1u64 << n))
        .collect();

    // votes[s-1][i]: 1-votes for bit i of the guess-0 candidate from
    // subset s, out of votes_per_bit oracle calls.
    let subsets = (1u64 << l) - 1;
    let votes_per_bit = params.votes_per_bit;
    let votes: Vec<Vec<u64>> = (1..=subsets)
        .into_par_iter()
        .map(|s| {
            let r_s = refs
                .iter()
                .enumerate()
                .filter(|(j, _)| s >> j & 1 == 1)
                .fold(0u64, |acc, (_, r)| acc ^ r);
            (0..n)
                .map(|i| {
                    let input = Bits::from_word((r_s ^ (1 << i)) as u128, n);
                    let mut ones = 0u64;
                    for v in 0..votes_per_bit {
                        let idx = ((s - 1) * n as u64 + i as u64) * votes_per_bit + v + 1;
                        let tape = tape_for(params.seed, Domain::GlMasks, idx, b.tape_len());
                        ones += b.run(&input, &tape).expect("shape checked").get(0) as u64;
                    }
                    ones
                })
                .collect()
        })
        .collect();

    let total_votes = subsets * votes_per_bit;
    let mut values: Vec<u64> = (0..1u64 << l)
        .into_par_iter()
        .map(|guess| {
            let mut x = 0u64;
            for i in 0..n {
                let mut ones = 0u64;
                for s in 1..=subsets {
                    let cnt = votes[(s - 1) as usize][i];
                    ones += if parity64(s & guess) {
                        votes_per_bit - cnt
                    } else {
                        cnt
                    };
                }
                if 2 * ones > total_votes {
                    x |= 1 << i;
                }
            }
            x
        })
        .collect();
    values.sort_unstable();
    values.dedup();

    let threshold = frac::half() + gamma / frac(2, 1);
    let (mut candidates, score_method) = score_candidates(b, n, &values, params);
    candidates.retain(|c| match &c.exact {
        Some(exact) => *exact >= threshold,
        None => c.score >= frac::to_f64(&threshold),
    });
    sort_candidates(&mut candidates);

    Ok(CandidateList {
        n,
        guess_bits: l,
        candidates,
        threshold: frac::to_f64(&threshold),
        score_method,
    })
}

fn sort_candidates(candidates: &mut [Candidate]) {
    candidates.sort_by(|a, b| match (&a.exact, &b.exact) {
        (Some(x), Some(y)) => y.cmp(x).then(a.value.cmp(&b.value)),
        _ => b
            .score
            .total_cmp(&a.score)
            .then(a.value.cmp(&b.value)),
    });
}

/// Scores each value's agreement with `B`: exactly over the full
/// mask-tape space when that space is small, else over sampled masks.
/// The oracle is evaluated once per mask-tape point and the results
/// are shared across all candidates.
fn score_candidates(
    b: &RandomizedAlgorithm,
    n: usize,
    values: &[u64],
    params: &GLParams,
) -> (Vec<Candidate>, ScoreMethod) {
    if n + b.tape_len() <= EXACT_SCORE_BITS {
        let tapes = 1u64 << b.tape_len();
        // s[r] = (zero outputs) − (one outputs) at mask r; the WHT
        // then yields every candidate's signed agreement at once.
        let mut s: Vec<i64> = (0..1u64 << n)
            .into_par_iter()
            .map(|r| {
                let input = Bits::from_word(r as u128, n);
                let mut zeros = 0i64;
                for tp in 0..tapes {
                    let tape = Bits::from_word(tp as u128, b.tape_len());
                    zeros += !b.run(&input, &tape).expect("shape checked").get(0) as i64;
                }
                2 * zeros - tapes as i64
            })
            .collect();
        wht_i64(&mut s);
        let denom = (1u128 << n) * tapes as u128;
        let candidates = values
            .iter()
            .map(|&v| {
                let matches = ((denom as i128 + s[v as usize] as i128) / 2) as u128;
                let exact = frac_u(matches, denom);
                Candidate {
                    value: v,
                    score: frac::to_f64(&exact),
                    exact: Some(exact),
                }
            })
            .collect();
        (candidates, ScoreMethod::Exact)
    } else {
        let samples = params.score_samples.unwrap_or(DEFAULT_SCORE_SAMPLES).max(1);
        let record: Vec<(u64, bool)> = (0..samples)
            .into_par_iter()
            .map(|j| {
                let mut rng = rng_for(params.seed, Domain::GlScore, j);
                let r = word_below(&mut rng, 1u64 << n);
                let tape = Bits::from_fn(b.tape_len(), |_| rng.gen());
                let out = b
                    .run(&Bits::from_word(r as u128, n), &tape)
                    .expect("shape checked")
                    .get(0);
                (r, out)
            })
            .collect();
        let candidates = values
            .iter()
            .map(|&v| {
                let hits = record
                    .iter()
                    .filter(|&&(r, out)| parity64(v & r) == out)
                    .count();
                Candidate {
                    value: v,
                    score: hits as f64 / samples as f64,
                    exact: None,
                }
            })
            .collect();
        (candidates, ScoreMethod::Sampled { samples })
    }
}

/// Single-string form of the decoder: a uniformly random element of
/// `gl_decode_list`'s output, or `0` when the list is empty. This is
/// the probability-Ω(γ²) contract shape; use [`gl_decode_best`] when a
/// heuristic point estimate is wanted instead.
pub fn gl_decode_single(
    b: &RandomizedAlgorithm,
    n: usize,
    gamma: &Frac,
    params: &GLParams,
) -> Result<u64> {
    let list = gl_decode_list(b, n, gamma, params)?;
    if list.is_empty() {
        return Ok(0);
    }
    let mut rng = rng_for(params.seed, Domain::GlPick, 0);
    let i = rng.gen_range(0..list.len());
    Ok(list.candidates[i].value)
}

/// Best-by-score heuristic: the top candidate, or `0` on an empty
/// list. Not the contract form — reports must label runs that use it.
pub fn gl_decode_best(
    b: &RandomizedAlgorithm,
    n: usize,
    gamma: &Frac,
    params: &GLParams,
) -> Result<u64> {
    let list = gl_decode_list(b, n, gamma, params)?;
    Ok(list.best().map_or(0, |c| c.value))
}

/// Reference decoder: scores every string in `{0,1}^n` against the
/// full table of a deterministic oracle, exactly, and returns all
/// candidates with agreement at least `1/2 + γ` sorted descending.
///
/// `γ` may be negative (e.g. `-1/2` lists the entire domain with its
/// scores). Arity is limited to 16 to keep the `2^n` transform cheap.
pub fn hadamard_brute_decode(b_table: &TruthTable, gamma: &Frac) -> Result<CandidateList> {
    let n = b_table.arity();
    if n > 16 {
        return Err(Error::Degenerate(format!(
            "brute decode over {n}-bit masks (max 16)"
        )));
    }
    let size = 1u64 << n;
    let mut s: Vec<i64> = (0..size)
        .map(|r| 1 - 2 * b_table.table().get(r as usize) as i64)
        .collect();
    wht_i64(&mut s);
    let threshold = frac::half() + gamma;
    let mut candidates: Vec<Candidate> = (0..size)
        .filter_map(|v| {
            let matches = ((size as i64 + s[v as usize]) / 2) as u128;
            let exact = frac_u(matches, size as u128);
            if exact >= threshold {
                Some(Candidate {
                    value: v,
                    score: frac::to_f64(&exact),
                    exact: Some(exact),
                })
            } else {
                None
            }
        })
        .collect();
    sort_candidates(&mut candidates);
    Ok(CandidateList {
        n,
        guess_bits: n,
        candidates,
        threshold: frac::to_f64(&threshold),
        score_method: ScoreMethod::Exact,
    })
}

/// Deterministic oracle computing `r ↦ ⟨x,r⟩`, optionally with a set
/// of masks on which it answers wrong. The wrongness bitmap indexes
/// masks as integers.
pub fn linear_oracle(x: u64, n: usize, flipped: Option<Bits>) -> RandomizedAlgorithm {
    assert!(n <= 63 && x >> n == 0);
    if let Some(ref f) = flipped {
        assert_eq!(f.len(), 1 << n);
    }
    RandomizedAlgorithm::deterministic(n, 1, move |input| {
        let r = input.as_u128() as u64;
        let mut bit = parity64(x & r);
        if let Some(ref f) = flipped {
            bit ^= f.get(r as usize);
        }
        Bits::from_word(bit as u128, 1)
    })
}

/// Full table of [`linear_oracle`] for the brute decoder.
pub fn linear_oracle_table(x: u64, n: usize, flipped: Option<&Bits>) -> Result<TruthTable> {
    TruthTable::from_fn(n, |r| {
        parity64(x & r) ^ flipped.map_or(false, |f| f.get(r as usize))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    /// Flip exactly `wrong` mask outputs of `⟨x,·⟩`, seeded.
    fn noisy_flips(n: usize, wrong: usize, seed: u64) -> Bits {
        let mut flips = Bits::zeros(1 << n);
        let mut rng = seeding::rng_for(seed, Domain::Function, 7);
        let mut placed = 0;
        while placed < wrong {
            let i = rng.gen_range(0..1usize << n);
            if !flips.get(i) {
                flips.set(i, true);
                placed += 1;
            }
        }
        flips
    }

    #[test]
    fn noiseless_oracle_is_recovered_exactly() {
        let x = 0b101101u64;
        let b = linear_oracle(x, 6, None);
        let gamma = frac(1, 2);
        let params = GLParams::default_for(6, &gamma, 17);
        assert_eq!(params.guess_bits, 5); // smallest l with 2^l >= 6/(1/4)
        let list = gl_decode_list(&b, 6, &gamma, &params).unwrap();
        // Every wrong candidate has exact agreement 1/2 with a linear
        // oracle, below threshold 3/4; only x survives.
        assert_eq!(list.len(), 1);
        assert_eq!(list.best().unwrap().value, x);
        assert_eq!(list.best().unwrap().exact, Some(frac(1, 1)));
        assert_eq!(gl_decode_single(&b, 6, &gamma, &params).unwrap(), x);
        assert_eq!(gl_decode_best(&b, 6, &gamma, &params).unwrap(), x);
    }

    #[test]
    fn zero_oracle_lists_zero() {
        let b = linear_oracle(0, 5, None);
        let gamma = frac(1, 2);
        let list = gl_decode_list(&b, 5, &gamma, &GLParams::new(4, 3)).unwrap();
        assert!(list.contains(0));
        assert_eq!(list.best().unwrap().value, 0);
    }

    #[test]
    fn coin_oracle_yields_empty_list_without_crashing() {
        let b = RandomizedAlgorithm::coin(6);
        let gamma = frac(1, 8);
        let params = GLParams::new(5, 11);
        let list = gl_decode_list(&b, 6, &gamma, &params).unwrap();
        // Exact scoring: every candidate agrees with the coin on
        // exactly half the mask-tape space.
        assert!(list.is_empty());
        assert_eq!(gl_decode_single(&b, 6, &gamma, &params).unwrap(), 0);
    }

    #[test]
    fn shape_and_parameter_validation() {
        let b = linear_oracle(1, 4, None);
        let g = frac(1, 4);
        assert!(gl_decode_list(&b, 5, &g, &GLParams::new(3, 0)).is_err());
        assert!(gl_decode_list(&b, 4, &frac(0, 1), &GLParams::new(3, 0)).is_err());
        assert!(gl_decode_list(&b, 4, &g, &GLParams::new(0, 0)).is_err());
        let mut p = GLParams::new(3, 0);
        p.votes_per_bit = 0;
        assert!(gl_decode_list(&b, 4, &g, &p).is_err());
    }

    #[test]
    fn agreement_three_quarters_keeps_x_with_exact_score() {
        let n = 6;
        let x = 0b011010u64;
        // Flip exactly 16 of 64 outputs: agreement exactly 3/4.
        let flips = noisy_flips(n, 16, 5);
        let b = linear_oracle(x, n, Some(flips));
        let gamma = frac(1, 4);
        let params = GLParams::default_for(n, &gamma, 2); // l = 7
        assert_eq!(params.guess_bits, 7);
        let list = gl_decode_list(&b, n, &gamma, &params).unwrap();
        assert!(list.contains(x), "x must survive at this seed");
        let cand = list.candidates.iter().find(|c| c.value == x).unwrap();
        assert_eq!(cand.exact, Some(frac(3, 4)));
        for c in &list.candidates {
            assert!(c.exact.clone().unwrap() >= frac(5, 8)); // 1/2 + γ/2
        }
    }

    #[test]
    fn brute_decode_pins_linear_and_complement() {
        let x = 0b1011u64;
        let table = linear_oracle_table(x, 4, None).unwrap();
        let list = hadamard_brute_decode(&table, &frac(1, 4)).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.best().unwrap().value, x);
        assert_eq!(list.best().unwrap().exact, Some(frac(1, 1)));

        let comp = table.complement();
        let all = hadamard_brute_decode(&comp, &frac(-1, 2)).unwrap();
        assert_eq!(all.len(), 16);
        let cx = all.candidates.iter().find(|c| c.value == x).unwrap();
        assert_eq!(cx.exact, Some(frac(0, 1)));
        // Everyone else sits at exactly 1/2.
        for c in &all.candidates {
            if c.value != x {
                assert_eq!(c.exact, Some(frac(1, 2)));
            }
        }
    }

    #[test]
    fn brute_decode_matches_direct_recomputation() {
        for seed in 0..10 {
            let mut rng = seeding::rng_for(seed, Domain::Function, 1);
            let table = TruthTable::random(4, &mut rng).unwrap();
            let list = hadamard_brute_decode(&table, &frac(0, 1)).unwrap();
            // Recompute every agreement by direct counting.
            for v in 0..16u64 {
                let matches = (0..16u64)
                    .filter(|&r| parity64(v & r) == table.eval(r).unwrap())
                    .count();
                let expect = frac_u(matches as u128, 16);
                let in_list = list.candidates.iter().find(|c| c.value == v);
                if expect >= frac(1, 2) {
                    assert_eq!(in_list.unwrap().exact, Some(expect));
                } else {
                    assert!(in_list.is_none());
                }
            }
            // Sorted descending.
            for w in list.candidates.windows(2) {
                assert!(w[0].exact >= w[1].exact);
            }
        }
    }

    #[test]
    fn johnson_style_list_bound_at_quarter_advantage() {
        // Exact agreement 3/4 = 1/2 + 1/4: list length ≤ 1/(2γ)² + 1 = 5.
        for n in [6usize, 8, 10] {
            for seed in 0..20 {
                let flips = noisy_flips(n, (1 << n) / 4, seed);
                let table = linear_oracle_table(3, n, Some(&flips)).unwrap();
                let list = hadamard_brute_decode(&table, &frac(1, 4)).unwrap();
                assert!(list.len() <= 5, "n={n} seed={seed} len={}", list.len());
            }
        }
    }

    #[test]
    fn decode_is_thread_count_independent() {
        let x = 0b10110u64;
        let flips = noisy_flips(5, 6, 9);
        let b = linear_oracle(x, 5, Some(flips));
        let gamma = frac(1, 4);
        let params = GLParams::new(6, 21);
        let baseline = serde_json::to_string(&gl_decode_list(&b, 5, &gamma, &params).unwrap())
            .unwrap();
        for threads in [1usize, 2, 8] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let got = pool.install(|| {
                serde_json::to_string(&gl_decode_list(&b, 5, &gamma, &params).unwrap()).unwrap()
            });
            assert_eq!(got, baseline, "threads={threads}");
        }
    }

    #[test]
    fn default_params_cap_at_twelve_masks() {
        let p = GLParams::default_for(8, &frac(1, 100), 0);
        assert_eq!(p.guess_bits, 12);
        let p = GLParams::default_for(4, &frac(1, 2), 0);
        assert_eq!(p.guess_bits, 4);
    }

    #[test]
    fn sampled_scoring_path_is_deterministic() {
        // Tape of 64 bits forces the sampled path.
        let x = 0b1101u64;
        let b = RandomizedAlgorithm::new(4, 1, 64, move |input, _| {
            let r = input.as_u128() as u64;
            Bits::from_word(parity64(x & r) as u128, 1)
        });
        let gamma = frac(1, 4);
        let params = GLParams::new(4, 33);
        let a = gl_decode_list(&b, 4, &gamma, &params).unwrap();
        let b2 = gl_decode_list(&b, 4, &gamma, &params).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b2).unwrap()
        );
        assert!(matches!(a.score_method, ScoreMethod::Sampled { samples: 512 }));
        assert!(a.contains(x));
    }
}
