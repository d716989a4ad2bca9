//! Randomized algorithms as pure `(input, tape) -> output` rules, with
//! exact and Monte-Carlo success measurement and adversary planting.
//!
//! An algorithm's randomness is a finite tape declared up front, so
//! success over uniform inputs and tapes is a finite product space:
//! small spaces are enumerated exactly, larger ones sampled with tapes
//! derived per trial from `(seed, trial)`. Planted adversaries are
//! deterministic tables whose advantage is known exactly by
//! construction and can be re-measured by enumeration.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_traits::Signed;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bits;
use crate::boolfn::{KTuple, Mask, TruthTable};
use crate::frac::{self, frac, frac_u, serde_frac, serde_frac_opt, Frac};
use crate::seeding::{rng_for, tape_for, Domain};
use crate::{EnumCap, Error, Result};

type Rule = Arc<dyn Fn(&Bits, &Bits) -> Bits + Send + Sync>;

/// A randomized algorithm: a pure rule from an `input_len`-bit input
/// and a `tape_len`-bit random tape to an `output_len`-bit output.
///
/// The rule must be deterministic; all randomness comes in through the
/// tape. A shared counter tallies rule evaluations, and composed
/// pipelines keep handles to their inner algorithms' counters so query
/// costs add up across layers.
#[derive(Clone)]
pub struct RandomizedAlgorithm {
    input_len: usize,
    output_len: usize,
    tape_len: usize,
    rule: Rule,
    queries: Arc<AtomicU64>,
}

impl RandomizedAlgorithm {
    pub fn new(
        input_len: usize,
        output_len: usize,
        tape_len: usize,
        rule: impl Fn(&Bits, &Bits) -> Bits + Send + Sync + 'static,
    ) -> Self {
        RandomizedAlgorithm {
            input_len,
            output_len,
            tape_len,
            rule: Arc::new(rule),
            queries: Arc::new(AtomicU64::new(0)),
        }
    }

    /// Tape-free algorithm.
    pub fn deterministic(
        input_len: usize,
        output_len: usize,
        rule: impl Fn(&Bits) -> Bits + Send + Sync + 'static,
    ) -> Self {
        Self::new(input_len, output_len, 0, move |input, _| rule(input))
    }

    /// One-bit algorithm that outputs its single tape bit: a fair coin.
    pub fn coin(input_len: usize) -> Self {
        Self::new(input_len, 1, 1, |_, tape| {
            Bits::from_word(tape.get(0) as u128, 1)
        })
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn tape_len(&self) -> usize {
        self.tape_len
    }

    /// Evaluates the rule, checking both lengths and counting the call.
    pub fn run(&self, input: &Bits, tape: &Bits) -> Result<Bits> {
        if input.len() != self.input_len {
            return Err(Error::LengthMismatch {
                expected: self.input_len,
                got: input.len(),
            });
        }
        if tape.len() != self.tape_len {
            return Err(Error::LengthMismatch {
                expected: self.tape_len,
                got: tape.len(),
            });
        }
        self.queries.fetch_add(1, Ordering::Relaxed);
        let out = (self.rule)(input, tape);
        debug_assert_eq!(out.len(), self.output_len, "rule produced wrong width");
        Ok(out)
    }

    /// Rule evaluations so far.
    pub fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_queries(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Shared handle to the query tally; clones of the algorithm and
    /// pipeline wrappers all feed the same counter.
    pub fn query_counter(&self) -> Arc<AtomicU64> {
        Arc::clone(&self.queries)
    }
}

impl std::fmt::Debug for RandomizedAlgorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "RandomizedAlgorithm(in={}, out={}, tape={}, queries={})",
            self.input_len,
            self.output_len,
            self.tape_len,
            self.queries()
        )
    }
}

/// How a success probability was measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    Exact,
    MonteCarlo,
}

/// A success probability with its provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuccessEstimate {
    /// Float summary of the probability.
    pub point: f64,
    pub method: EstimateMethod,
    /// States enumerated or trials sampled.
    pub trials: u64,
    /// 95% normal-approximation radius; zero for exact results.
    pub ci95: f64,
    /// The exact rational, present iff `method == Exact`.
    #[serde(with = "serde_frac_opt", default)]
    pub exact: Option<Frac>,
}

impl SuccessEstimate {
    pub fn exact_value(&self) -> Option<&Frac> {
        self.exact.as_ref()
    }
}

/// Exact success probability of `alg` against `target` over uniform
/// inputs and tapes, by full enumeration of the product space.
pub fn exact_success(
    alg: &RandomizedAlgorithm,
    target: &(dyn Fn(&Bits) -> Bits + Sync),
    cap: EnumCap,
) -> Result<SuccessEstimate> {
    let bits = alg.input_len() + alg.tape_len();
    let needed = if bits >= 128 {
        u128::MAX
    } else {
        1u128 << bits
    };
    cap.check(needed)?;
    let inputs = 1u64 << alg.input_len();
    let tapes = 1u64 << alg.tape_len();
    let hits: u64 = (0..inputs)
        .into_par_iter()
        .map(|inp| {
            let input = Bits::from_word(inp as u128, alg.input_len());
            let want = target(&input);
            let mut local = 0u64;
            for tp in 0..tapes {
                let tape = Bits::from_word(tp as u128, alg.tape_len());
                if alg.run(&input, &tape).expect("validated lengths") == want {
                    local += 1;
                }
            }
            local
        })
        .sum();
    let total = needed as u64;
    let point = frac_u(hits as u128, total as u128);
    Ok(SuccessEstimate {
        point: frac::to_f64(&point),
        method: EstimateMethod::Exact,
        trials: total,
        ci95: 0.0,
        exact: Some(point),
    })
}

/// Monte-Carlo success estimate over uniform inputs and tapes.
///
/// Trial `j` draws its input from stream `2j` and its tape from stream
/// `2j + 1` of `seed`, so the estimate is reproducible bit-for-bit
/// regardless of worker count or evaluation order.
pub fn mc_success(
    alg: &RandomizedAlgorithm,
    target: &(dyn Fn(&Bits) -> Bits + Sync),
    trials: u64,
    seed: u64,
) -> Result<SuccessEstimate> {
    if trials == 0 {
        return Err(Error::Degenerate("zero Monte-Carlo trials".into()));
    }
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|j| {
            let input = tape_for(seed, Domain::McTrial, 2 * j, alg.input_len());
            let tape = tape_for(seed, Domain::McTrial, 2 * j + 1, alg.tape_len());
            let want = target(&input);
            (alg.run(&input, &tape).expect("validated lengths") == want) as u64
        })
        .sum();
    let p = hits as f64 / trials as f64;
    Ok(SuccessEstimate {
        point: p,
        method: EstimateMethod::MonteCarlo,
        trials,
        ci95: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
        exact: None,
    })
}

/// Which planted-adversary construction to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryKind {
    /// Start from the true combined function and corrupt a seeded
    /// random subset of tuples, hitting the advantage target exactly
    /// after rounding to a multiple of `1 / 2^{nk}`.
    RandomSubset,
    /// Answer with a decoy function's combined form everywhere; the
    /// advantage is whatever the decoy's distance induces.
    PlantedFunction,
}

/// How a wrong direct-product answer differs from the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WrongMode {
    /// Flip the first output bit: unambiguously wrong, minimally so.
    #[default]
    FlipFirst,
    /// XOR a seeded nonzero pattern per tuple.
    RandomString,
}

fn wrong_mode_is_default(m: &WrongMode) -> bool {
    *m == WrongMode::default()
}

/// Serialized description of a planted adversary. Together with the
/// target function this regenerates the adversary exactly, so planted
/// oracles cross process boundaries as a few bytes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdversaryDescriptor {
    pub kind: AdversaryKind,
    pub seed: u64,
    #[serde(with = "serde_frac")]
    pub epsilon_target: Frac,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub decoy: Option<TruthTable>,
    #[serde(
        skip_serializing_if = "wrong_mode_is_default",
        default,
        rename = "wrong"
    )]
    pub wrong_mode: WrongMode,
}

impl AdversaryDescriptor {
    pub fn random_subset(seed: u64, epsilon_target: Frac) -> Self {
        AdversaryDescriptor {
            kind: AdversaryKind::RandomSubset,
            seed,
            epsilon_target,
            decoy: None,
            wrong_mode: WrongMode::default(),
        }
    }

    pub fn planted_function(seed: u64, decoy: TruthTable) -> Self {
        AdversaryDescriptor {
            kind: AdversaryKind::PlantedFunction,
            seed,
            epsilon_target: frac::zero(),
            decoy: Some(decoy),
            wrong_mode: WrongMode::default(),
        }
    }
}

/// A deterministic planted oracle with exactly known advantage.
pub struct PlantedAdversary {
    /// The oracle; `tape_len = 0`.
    pub algorithm: RandomizedAlgorithm,
    /// Exact advantage: for XOR adversaries the agreement minus 1/2,
    /// for direct-product adversaries the agreement itself.
    pub epsilon_achieved: Frac,
    /// Tuples answered correctly, out of `2^{nk}`.
    pub correct_count: u128,
}

/// Seeded bitmap with exactly `wrong` of `domain` bits set.
///
/// Samples whichever of the set and its complement is smaller, by
/// rejection into a bitmap; insertion order cannot matter.
fn seeded_wrong_bitmap(domain: u128, wrong: u128, seed: u64) -> Bits {
    assert!(domain <= u64::MAX as u128 && wrong <= domain);
    let invert = wrong > domain / 2;
    let pick = if invert { domain - wrong } else { wrong };
    let mut bitmap = Bits::zeros(domain as usize);
    let mut rng = rng_for(seed, Domain::AdversarySubset, 0);
    let mut placed = 0u128;
    while placed < pick {
        let i = rng.gen_range(0..domain as u64) as usize;
        if !bitmap.get(i) {
            bitmap.set(i, true);
            placed += 1;
        }
    }
    if invert {
        bitmap = Bits::from_fn(domain as usize, |i| !bitmap.get(i));
    }
    bitmap
}

fn packed_domain(n: usize, k: usize, cap: EnumCap) -> Result<u128> {
    let nk = n * k;
    if nk > 64 {
        return Err(Error::Degenerate(format!(
            "tuple space of {nk} bits cannot be indexed"
        )));
    }
    let domain = 1u128 << nk;
    cap.check(domain)?;
    Ok(domain)
}

/// Plants a deterministic oracle `M` for the XOR form `f^{⊕k}`.
///
/// `random-subset`: `M` agrees with `f^{⊕k}` on exactly
/// `round((1/2 + ε_target) * 2^{nk})` tuples, a seeded random subset;
/// requires `0 <= ε_target <= 1/2`. `planted-function`: `M = g^{⊕k}`
/// for the descriptor's decoy `g`; the advantage is
/// `(1 - 2 d(f,g))^k / 2` and the target is ignored.
pub fn plant_xor_adversary(
    f: &TruthTable,
    k: usize,
    desc: &AdversaryDescriptor,
    cap: EnumCap,
) -> Result<PlantedAdversary> {
    if k == 0 {
        return Err(Error::Degenerate("k must be at least 1".into()));
    }
    let n = f.arity();
    let domain = packed_domain(n, k, cap)?;
    match desc.kind {
        AdversaryKind::RandomSubset => {
            let eps = &desc.epsilon_target;
            if eps.is_negative() || *eps > frac::half() {
                return Err(Error::Infeasible(format!(
                    "XOR advantage target {} outside [0, 1/2]",
                    frac::render(eps)
                )));
            }
            let correct: u128 = frac::round_scaled(&(frac::half() + eps), domain)
                .try_into()
                .expect("count within domain");
            let wrong = domain - correct;
            let bitmap = seeded_wrong_bitmap(domain, wrong, desc.seed);
            let f = f.clone();
            let alg = RandomizedAlgorithm::deterministic(n * k, 1, move |input| {
                let packed = input.as_u128();
                let xs = KTuple::unpack(packed, n, k).expect("input length checked");
                let truth = f.xor_product(&xs).expect("arity fixed");
                let bit = truth ^ bitmap.get(packed as usize);
                Bits::from_word(bit as u128, 1)
            });
            Ok(PlantedAdversary {
                algorithm: alg,
                epsilon_achieved: frac_u(correct, domain) - frac::half(),
                correct_count: correct,
            })
        }
        AdversaryKind::PlantedFunction => {
            let g = desc.decoy.clone().ok_or_else(|| {
                Error::Inconsistent("planted-function adversary needs a decoy".into())
            })?;
            if g.arity() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: g.arity(),
                });
            }
            let d = f.distance(&g)?;
            let bias = frac::one() - frac(2, 1) * &d;
            let eps = frac::pow(&bias, k as u32) * frac::half();
            // Agreement count of g^{⊕k} with f^{⊕k} = (1/2 + eps) * 2^{nk}.
            let correct_frac = (frac::half() + &eps) * frac_u(domain, 1);
            let correct: u128 = correct_frac
                .to_integer()
                .try_into()
                .expect("count within domain");
            let alg = RandomizedAlgorithm::deterministic(n * k, 1, move |input| {
                let xs = KTuple::unpack(input.as_u128(), n, k).expect("input length checked");
                let bit = g.xor_product(&xs).expect("arity fixed");
                Bits::from_word(bit as u128, 1)
            });
            Ok(PlantedAdversary {
                algorithm: alg,
                epsilon_achieved: eps,
                correct_count: correct,
            })
        }
    }
}

/// Plants a deterministic oracle `C'` for the direct product `f^k`.
///
/// `random-subset`: exactly `round(ε_target * 2^{nk})` seeded tuples
/// answered correctly, the rest corrupted per the descriptor's wrong
/// mode (default: first output bit flipped); requires
/// `0 < ε_target <= 1`. `planted-function`: `C' = g^k`, agreement
/// `agreement(f,g)^k`.
pub fn plant_dp_adversary(
    f: &TruthTable,
    k: usize,
    desc: &AdversaryDescriptor,
    cap: EnumCap,
) -> Result<PlantedAdversary> {
    if k == 0 {
        return Err(Error::Degenerate("k must be at least 1".into()));
    }
    let n = f.arity();
    let domain = packed_domain(n, k, cap)?;
    match desc.kind {
        AdversaryKind::RandomSubset => {
            let eps = &desc.epsilon_target;
            if !eps.is_positive() || *eps > frac::one() {
                return Err(Error::Infeasible(format!(
                    "direct-product agreement target {} outside (0, 1]",
                    frac::render(eps)
                )));
            }
            let correct: u128 = frac::round_scaled(eps, domain)
                .try_into()
                .expect("count within domain");
            let wrong = domain - correct;
            let bitmap = seeded_wrong_bitmap(domain, wrong, desc.seed);
            let f = f.clone();
            let wrong_mode = desc.wrong_mode;
            let seed = desc.seed;
            let alg = RandomizedAlgorithm::deterministic(n * k, k, move |input| {
                let packed = input.as_u128();
                let xs = KTuple::unpack(packed, n, k).expect("input length checked");
                let mut out = f.direct_product(&xs).expect("arity fixed");
                if bitmap.get(packed as usize) {
                    match wrong_mode {
                        WrongMode::FlipFirst => out.set(0, !out.get(0)),
                        WrongMode::RandomString => {
                            let mut rng =
                                rng_for(seed, Domain::AdversaryWrong, packed as u64);
                            let pattern = rng.gen_range(1..1u64 << k);
                            out = Mask::from_bits(out.bits() ^ pattern, k);
                        }
                    }
                }
                out.to_bits_string()
            });
            Ok(PlantedAdversary {
                algorithm: alg,
                epsilon_achieved: frac_u(correct, domain),
                correct_count: correct,
            })
        }
        AdversaryKind::PlantedFunction => {
            let g = desc.decoy.clone().ok_or_else(|| {
                Error::Inconsistent("planted-function adversary needs a decoy".into())
            })?;
            if g.arity() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: g.arity(),
                });
            }
            let agreement = f.agreement(&g)?;
            let eps = frac::pow(&agreement, k as u32);
            let correct_frac = &eps * frac_u(domain, 1);
            let correct: u128 = correct_frac
                .to_integer()
                .try_into()
                .expect("count within domain");
            let alg = RandomizedAlgorithm::deterministic(n * k, k, move |input| {
                let xs = KTuple::unpack(input.as_u128(), n, k).expect("input length checked");
                g.direct_product(&xs).expect("arity fixed").to_bits_string()
            });
            Ok(PlantedAdversary {
                algorithm: alg,
                epsilon_achieved: eps,
                correct_count: correct,
            })
        }
    }
}

/// Target closure for the XOR form of `f` over `k`-tuples.
pub fn xor_target(f: &TruthTable, k: usize) -> impl Fn(&Bits) -> Bits + Sync {
    let f = f.clone();
    let n = f.arity();
    move |input: &Bits| {
        let xs = KTuple::unpack(input.as_u128(), n, k).expect("target input");
        Bits::from_word(f.xor_product(&xs).expect("arity fixed") as u128, 1)
    }
}

/// Target closure for the direct product of `f` over `k`-tuples.
pub fn dp_target(f: &TruthTable, k: usize) -> impl Fn(&Bits) -> Bits + Sync {
    let f = f.clone();
    let n = f.arity();
    move |input: &Bits| {
        let xs = KTuple::unpack(input.as_u128(), n, k).expect("target input");
        f.direct_product(&xs).expect("arity fixed").to_bits_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;

    fn fixed_f(n: usize) -> TruthTable {
        let mut rng = seeding::rng_for(99, Domain::Function, 0);
        TruthTable::random(n, &mut rng).unwrap()
    }

    #[test]
    fn coin_has_exact_half_success() {
        let coin = RandomizedAlgorithm::coin(2);
        let target = |_: &Bits| Bits::from_word(0, 1);
        let est = exact_success(&coin, &target, EnumCap::default()).unwrap();
        assert_eq!(est.exact, Some(frac(1, 2)));
        assert_eq!(est.ci95, 0.0);
        assert_eq!(est.trials, 8); // 4 inputs x 2 tapes
    }

    #[test]
    fn exact_success_respects_cap() {
        let coin = RandomizedAlgorithm::coin(10);
        let target = |_: &Bits| Bits::from_word(0, 1);
        let err = exact_success(&coin, &target, EnumCap(1 << 10)).unwrap_err();
        assert!(matches!(err, Error::CapExceeded { .. }));
    }

    #[test]
    fn query_counter_tallies_runs() {
        let alg = RandomizedAlgorithm::deterministic(2, 1, |_| Bits::from_word(1, 1));
        let tape = Bits::zeros(0);
        for v in 0..4u128 {
            alg.run(&Bits::from_word(v, 2), &tape).unwrap();
        }
        assert_eq!(alg.queries(), 4);
        let clone = alg.clone();
        clone.run(&Bits::from_word(0, 2), &tape).unwrap();
        assert_eq!(alg.queries(), 5, "clones share the tally");
        alg.reset_queries();
        assert_eq!(alg.queries(), 0);
    }

    #[test]
    fn run_validates_lengths() {
        let alg = RandomizedAlgorithm::coin(3);
        assert!(alg.run(&Bits::zeros(2), &Bits::zeros(1)).is_err());
        assert!(alg.run(&Bits::zeros(3), &Bits::zeros(0)).is_err());
        assert!(alg.run(&Bits::zeros(3), &Bits::zeros(1)).is_ok());
    }

    #[test]
    fn perfect_xor_plant_has_advantage_half() {
        let f = fixed_f(2);
        let desc = AdversaryDescriptor::random_subset(5, frac(1, 2));
        let adv = plant_xor_adversary(&f, 2, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 2));
        let est = exact_success(&adv.algorithm, &xor_target(&f, 2), EnumCap::default()).unwrap();
        assert_eq!(est.exact, Some(frac(1, 1)));
        let mc = mc_success(&adv.algorithm, &xor_target(&f, 2), 200, 3).unwrap();
        assert_eq!(mc.point, 1.0);
        assert_eq!(mc.ci95, 0.0);
    }

    #[test]
    fn xor_plant_rounding_and_remeasure() {
        let f = fixed_f(2);
        // Target 1/4 at nk=4: correct = round(0.75 * 16) = 12, exact.
        let desc = AdversaryDescriptor::random_subset(7, frac(1, 4));
        let adv = plant_xor_adversary(&f, 2, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 4));
        assert_eq!(adv.correct_count, 12);
        let est = exact_success(&adv.algorithm, &xor_target(&f, 2), EnumCap::default()).unwrap();
        assert_eq!(est.exact, Some(frac(3, 4)));

        // Target 1/3 at nk=2: correct = round(4 * 5/6) = 3, achieved 1/4.
        let f1 = fixed_f(1);
        let desc = AdversaryDescriptor::random_subset(7, frac(1, 3));
        let adv = plant_xor_adversary(&f1, 2, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 4));

        // Target 0 at nk=1: correct on exactly 1 of 2 inputs.
        let desc = AdversaryDescriptor::random_subset(7, frac(0, 1));
        let adv = plant_xor_adversary(&f1, 1, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(0, 1));
        assert_eq!(adv.correct_count, 1);

        let desc = AdversaryDescriptor::random_subset(7, frac(2, 3));
        assert!(plant_xor_adversary(&f1, 1, &desc, EnumCap::default()).is_err());
    }

    #[test]
    fn planted_function_xor_advantage_from_distance() {
        let f = TruthTable::constant(2, false).unwrap();
        // Flip one of four entries: distance 1/4, advantage (1/2)^2/2 = 1/8.
        let g = TruthTable::from_fn(2, |x| x == 3).unwrap();
        let desc = AdversaryDescriptor::planted_function(0, g);
        let adv = plant_xor_adversary(&f, 2, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 8));
        let est = exact_success(&adv.algorithm, &xor_target(&f, 2), EnumCap::default()).unwrap();
        assert_eq!(est.exact, Some(frac(5, 8)));
    }

    #[test]
    fn dp_plant_agreement_and_wrongness() {
        let f = fixed_f(2);
        let desc = AdversaryDescriptor::random_subset(11, frac(1, 4));
        let adv = plant_dp_adversary(&f, 2, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 4));
        let est = exact_success(&adv.algorithm, &dp_target(&f, 2), EnumCap::default()).unwrap();
        assert_eq!(est.exact, Some(frac(1, 4)));

        // Wrong answers differ from f^k in exactly the first bit.
        let tape = Bits::zeros(0);
        let mut wrong_seen = 0;
        for packed in 0..16u128 {
            let input = Bits::from_word(packed, 4);
            let got = adv.algorithm.run(&input, &tape).unwrap();
            let want = dp_target(&f, 2)(&input);
            if got != want {
                wrong_seen += 1;
                let mut flipped = got.clone();
                flipped.set(0, !flipped.get(0));
                assert_eq!(flipped, want, "only bit 0 differs");
            }
        }
        assert_eq!(wrong_seen, 12);
    }

    #[test]
    fn dp_plant_random_string_mode_is_wrong_everywhere_it_claims() {
        let f = fixed_f(2);
        let mut desc = AdversaryDescriptor::random_subset(13, frac(1, 8));
        desc.wrong_mode = WrongMode::RandomString;
        let adv = plant_dp_adversary(&f, 3, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 8));
        let est = exact_success(&adv.algorithm, &dp_target(&f, 3), EnumCap::default()).unwrap();
        assert_eq!(est.exact, Some(frac(1, 8)));
    }

    #[test]
    fn dp_decoy_equal_to_f_gives_agreement_one() {
        let f = fixed_f(2);
        let desc = AdversaryDescriptor::planted_function(0, f.clone());
        let adv = plant_dp_adversary(&f, 3, &desc, EnumCap::default()).unwrap();
        assert_eq!(adv.epsilon_achieved, frac(1, 1));
        let desc = AdversaryDescriptor::random_subset(0, frac(0, 1));
        assert!(plant_dp_adversary(&f, 3, &desc, EnumCap::default()).is_err());
    }

    #[test]
    fn mc_success_is_seed_deterministic() {
        let f = fixed_f(2);
        let desc = AdversaryDescriptor::random_subset(1, frac(1, 8));
        let adv = plant_xor_adversary(&f, 2, &desc, EnumCap::default()).unwrap();
        let t = xor_target(&f, 2);
        let a = mc_success(&adv.algorithm, &t, 5000, 42).unwrap();
        let b = mc_success(&adv.algorithm, &t, 5000, 42).unwrap();
        assert_eq!(a.point, b.point);
        let c = mc_success(&adv.algorithm, &t, 5000, 43).unwrap();
        assert_ne!(a.point, c.point, "different seeds should differ here");
        // The estimate brackets the exact advantage.
        assert!((a.point - 0.625).abs() < a.ci95 + 0.03);
        let expect_ci = 1.96 * (a.point * (1.0 - a.point) / 5000.0).sqrt();
        assert_eq!(a.ci95, expect_ci);
    }

    #[test]
    fn descriptor_json_shape() {
        let desc = AdversaryDescriptor::random_subset(9, frac(1, 4));
        let json = serde_json::to_string(&desc).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"random-subset","seed":9,"epsilon_target":"1/4"}"#
        );
        let back: AdversaryDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back.epsilon_target, frac(1, 4));
        assert_eq!(back.wrong_mode, WrongMode::FlipFirst);

        let with_decoy =
            AdversaryDescriptor::planted_function(3, TruthTable::parity(2).unwrap());
        let json = serde_json::to_string(&with_decoy).unwrap();
        let back: AdversaryDescriptor = serde_json::from_str(&json).unwrap();
        assert_eq!(back.decoy.unwrap(), TruthTable::parity(2).unwrap());
    }
}
