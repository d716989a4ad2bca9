//! Counting limits on simultaneous approximation.
//!
//! An oracle over tuples — one bit (an XOR-form predictor) or `k` bits
//! (a direct-product answer) — can only sit close to a bounded number
//! of combined functions at once. This module makes those limits
//! executable at desk scale:
//!
//! * [`lemma7_check`] pins the product identity
//!   `Pr[f^k = g^k] = (1-d)^k` by exhaustive count;
//! * [`bonferroni_union_bound`] is the degree-2 inclusion–exclusion
//!   lower bound that closes the packing arguments, and
//!   [`packing_contradiction_check`] compares it against the domain;
//! * [`thm6_family_audit`] and [`thm8_family_audit`] verify a family's
//!   hypotheses exactly and check the size bound each implies;
//! * [`construct_thm9_family`] builds the witness the other way: a
//!   piecewise oracle that agrees with `t` pairwise-far functions at
//!   once, showing the list-size bounds are not slack;
//! * [`search_thm11_counterexamples`] hammers the `t ≤ 1/(ε²-(1-2δ)^k)`
//!   bound with seeded random families and must come up empty.
//!
//! All probabilities are exact rationals; agreement conditions that
//! involve square roots are compared by squares. One honesty note that
//! recurs below: at even `k` a function and its complement have
//! *identical* XOR forms, so a family containing near-complement pairs
//! can defeat bounds whose proofs cap pairwise correlation by a
//! distance floor alone. Auditors therefore report the literal
//! distance-floor hypothesis but only assert bounds under the folded
//! band `|1-2d| ≤ 1-2δ`, which is what the correlation argument
//! actually uses (the two coincide for odd `k`).

use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::boolfn::{KTuple, Mask, TruthTable};
use crate::frac::{self, frac, frac_u, serde_frac, serde_frac_opt, Frac};
use crate::seeding::{rng_for, Domain};
use crate::{EnumCap, Error, Result};

/// A list of same-arity truth tables with their exact pairwise
/// agreement matrix.
#[derive(Debug, Clone)]
pub struct FunctionFamily {
    n: usize,
    members: Vec<TruthTable>,
    agreement: Vec<Vec<Frac>>,
}

impl FunctionFamily {
    /// Builds the family and its agreement matrix. All members must
    /// share one arity; the matrix is symmetric with unit diagonal by
    /// construction.
    pub fn new(members: Vec<TruthTable>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Degenerate("family needs at least one member".into()))?;
        let n = first.arity();
        for m in &members {
            if m.arity() != n {
                return Err(Error::ArityMismatch {
                    expected: n,
                    got: m.arity(),
                });
            }
        }
        let t = members.len();
        let mut agreement = vec![vec![frac::one(); t]; t];
        for i in 0..t {
            for j in (i + 1)..t {
                let a = members[i].agreement(&members[j])?;
                agreement[i][j] = a.clone();
                agreement[j][i] = a;
            }
        }
        Ok(FunctionFamily {
            n,
            members,
            agreement,
        })
    }

    pub fn arity(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[TruthTable] {
        &self.members
    }

    pub fn member(&self, i: usize) -> &TruthTable {
        &self.members[i]
    }

    pub fn agreement(&self, i: usize, j: usize) -> &Frac {
        &self.agreement[i][j]
    }

    pub fn agreement_matrix(&self) -> &[Vec<Frac>] {
        &self.agreement
    }

    /// Exact Hamming distance `1 - agreement`.
    pub fn distance(&self, i: usize, j: usize) -> Frac {
        frac::one() - &self.agreement[i][j]
    }

    /// Smallest pairwise distance, `None` for a single member.
    pub fn min_distance(&self) -> Option<Frac> {
        self.pair_min(|d| d)
    }

    /// Smallest pairwise *folded* distance `min(d, 1-d)`. This is the
    /// quantity that bounds XOR-form correlation at every `k`: a pair
    /// at distance `1` is complement-identical in any even XOR power.
    pub fn min_folded_distance(&self) -> Option<Frac> {
        self.pair_min(|d| {
            let alt = frac::one() - &d;
            d.min(alt)
        })
    }

    fn pair_min(&self, fold: impl Fn(Frac) -> Frac) -> Option<Frac> {
        let t = self.members.len();
        let mut best: Option<Frac> = None;
        for i in 0..t {
            for j in (i + 1)..t {
                let d = fold(self.distance(i, j));
                best = Some(match best {
                    Some(b) => b.min(d),
                    None => d,
                });
            }
        }
        best
    }

    /// Recomputes every matrix entry from the tables and checks it
    /// against the stored value.
    pub fn verify_agreement_matrix(&self) -> Result<()> {
        let t = self.members.len();
        for i in 0..t {
            if self.agreement[i][i] != frac::one() {
                return Err(Error::Inconsistent(format!("diagonal entry {i} not 1")));
            }
            for j in (i + 1)..t {
                let a = self.members[i].agreement(&self.members[j])?;
                if a != self.agreement[i][j] || a != self.agreement[j][i] {
                    return Err(Error::Inconsistent(format!(
                        "agreement entry ({i},{j}) does not recompute"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Exact XOR-form agreement `Pr[f_i^{⊕k} = f_j^{⊕k}]` from the
    /// matrix: the per-coordinate differences are independent, so the
    /// parity of `k` of them is `1/2 + (1-2d)^k/2`.
    pub fn xor_form_agreement(&self, i: usize, j: usize, k: usize) -> Frac {
        let corr = frac::one() - frac(2, 1) * self.distance(i, j);
        frac::half() + frac::pow(&corr, k as u32) / frac(2, 1)
    }
}

fn tuple_domain(n: usize, k: usize, cap: EnumCap) -> Result<u64> {
    if n == 0 || k == 0 {
        return Err(Error::Degenerate("n and k must be at least 1".into()));
    }
    let nk = n * k;
    if nk > 63 {
        return Err(Error::Degenerate(format!(
            "tuple space of {nk} bits cannot be enumerated"
        )));
    }
    cap.check(1u128 << nk)?;
    Ok(1u64 << nk)
}

/// A tuple-domain partition into `t` packed-index ranges with one
/// source member per part: the shape of the constructed oracle that
/// tracks `t` functions at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PiecewiseB {
    /// `t + 1` cut points: part `p` is `boundaries[p] .. boundaries[p+1]`.
    boundaries: Vec<u64>,
    /// Member index answering on each part.
    assignment: Vec<usize>,
}

impl PiecewiseB {
    /// Validates cut points (strictly increasing from 0) and the
    /// near-equal invariant: part sizes differ by at most one.
    pub fn new(boundaries: Vec<u64>, assignment: Vec<usize>) -> Result<Self> {
        let t = assignment.len();
        if t == 0 {
            return Err(Error::Degenerate("partition needs at least one part".into()));
        }
        if boundaries.len() != t + 1 {
            return Err(Error::Format(format!(
                "expected {} cut points for {t} parts, got {}",
                t + 1,
                boundaries.len()
            )));
        }
        if boundaries[0] != 0 {
            return Err(Error::Format("first cut point must be 0".into()));
        }
        if boundaries.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("cut points must strictly increase".into()));
        }
        let sizes: Vec<u64> = boundaries.windows(2).map(|w| w[1] - w[0]).collect();
        let min = *sizes.iter().min().expect("at least one part");
        let max = *sizes.iter().max().expect("at least one part");
        if max - min > 1 {
            return Err(Error::Format(format!(
                "part sizes range from {min} to {max}; near-equal split requires a spread of at most 1"
            )));
        }
        Ok(PiecewiseB {
            boundaries,
            assignment,
        })
    }

    /// The canonical near-equal split of `0..domain` into `t` parts,
    /// part `p` answered by member `p`.
    pub fn near_equal(domain: u64, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::Degenerate("partition needs at least one part".into()));
        }
        if (t as u64) > domain {
            return Err(Error::Infeasible(format!(
                "cannot split {domain} indices into {t} nonempty parts"
            )));
        }
        let boundaries: Vec<u64> = (0..=t)
            .map(|p| ((p as u128 * domain as u128) / t as u128) as u64)
            .collect();
        PiecewiseB::new(boundaries, (0..t).collect())
    }

    pub fn t(&self) -> usize {
        self.assignment.len()
    }

    pub fn domain_size(&self) -> u64 {
        *self.boundaries.last().expect("validated nonempty")
    }

    pub fn boundaries(&self) -> &[u64] {
        &self.boundaries
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn part_sizes(&self) -> Vec<u64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Part containing a packed tuple index.
    pub fn part_of(&self, packed: u64) -> Result<usize> {
        if packed >= self.domain_size() {
            return Err(Error::LengthMismatch {
                expected: self.domain_size() as usize,
                got: packed as usize,
            });
        }
        // partition_point: first cut strictly above `packed`, minus one.
        Ok(self.boundaries.partition_point(|&c| c <= packed) - 1)
    }

    fn bind_check(&self, family: &FunctionFamily, k: usize) -> Result<u64> {
        let nk = family.arity() * k;
        if nk > 63 || (1u64 << nk) != self.domain_size() {
            return Err(Error::Inconsistent(format!(
                "partition covers {} indices but the tuple space has 2^{nk}",
                self.domain_size()
            )));
        }
        if let Some(&bad) = self.assignment.iter().find(|&&i| i >= family.len()) {
            return Err(Error::Inconsistent(format!(
                "part assigned to member {bad} of a {}-member family",
                family.len()
            )));
        }
        Ok(self.domain_size())
    }

    /// The oracle's direct-product answer: the assigned member's `f^k`.
    pub fn evaluate(&self, family: &FunctionFamily, k: usize, xs: &KTuple) -> Result<Mask> {
        self.bind_check(family, k)?;
        let packed = xs.pack() as u64;
        let member = self.assignment[self.part_of(packed)?];
        family.member(member).direct_product(xs)
    }

    /// The oracle's XOR-form answer: the assigned member's `f^{⊕k}`.
    pub fn evaluate_xor(&self, family: &FunctionFamily, k: usize, xs: &KTuple) -> Result<bool> {
        self.bind_check(family, k)?;
        let packed = xs.pack() as u64;
        let member = self.assignment[self.part_of(packed)?];
        family.member(member).xor_product(xs)
    }
}

#[derive(Serialize, Deserialize)]
struct PiecewiseBWire {
    t: usize,
    boundaries: Vec<u64>,
    assignment: Vec<usize>,
}

impl Serialize for PiecewiseB {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PiecewiseBWire {
            t: self.t(),
            boundaries: self.boundaries.clone(),
            assignment: self.assignment.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseB {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = PiecewiseBWire::deserialize(d)?;
        if wire.t != wire.assignment.len() {
            return Err(serde::de::Error::custom(format!(
                "t = {} but {} parts are assigned",
                wire.t,
                wire.assignment.len()
            )));
        }
        PiecewiseB::new(wire.boundaries, wire.assignment).map_err(serde::de::Error::custom)
    }
}

/// Exhaustive check of the product-agreement identity.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma7Report {
    /// Exact distance `d(f, g)`.
    #[serde(with = "serde_frac")]
    pub distance: Frac,
    /// `Pr[f^k = g^k]` by exhaustive tuple count.
    #[serde(with = "serde_frac")]
    pub dp_agreement: Frac,
    /// `(1-d)^k`, the per-coordinate product form.
    #[serde(with = "serde_frac")]
    pub product_form: Frac,
    /// Count equals product form (coordinates are independent).
    pub identity_holds: bool,
    /// `(1-δ)^k` for the supplied floor.
    #[serde(with = "serde_frac")]
    pub delta_cap: Frac,
    /// `dp_agreement ≤ (1-δ)^k`.
    pub within_cap: bool,
}

/// Computes `Pr[f^k = g^k]` exactly and checks it equals `(1-d)^k`
/// (and hence is at most `(1-δ)^k`): a `k`-tuple evaluates equal
/// exactly when no element lands where the two functions differ.
///
/// Requires `distance(f, g) ≥ δ`.
pub fn lemma7_check(
    f: &TruthTable,
    g: &TruthTable,
    k: usize,
    delta: &Frac,
    cap: EnumCap,
) -> Result<Lemma7Report> {
    if f.arity() != g.arity() {
        return Err(Error::ArityMismatch {
            expected: f.arity(),
            got: g.arity(),
        });
    }
    let n = f.arity();
    let d = f.distance(g)?;
    if d < *delta {
        return Err(Error::Infeasible(format!(
            "distance {} is below the floor {}",
            frac::render(&d),
            frac::render(delta)
        )));
    }
    let domain = tuple_domain(n, k, cap)?;
    let mut hits = 0u64;
    for packed in 0..domain {
        let xs = KTuple::unpack(packed as u128, n, k)?;
        if f.direct_product(&xs)? == g.direct_product(&xs)? {
            hits += 1;
        }
    }
    let dp_agreement = frac_u(hits as u128, domain as u128);
    let product_form = frac::pow(&(frac::one() - &d), k as u32);
    let delta_cap = frac::pow(&(frac::one() - delta), k as u32);
    Ok(Lemma7Report {
        identity_holds: dp_agreement == product_form,
        within_cap: dp_agreement <= delta_cap,
        distance: d,
        dp_agreement,
        product_form,
        delta_cap,
    })
}

fn check_square_symmetric(sizes: &[Frac], pairwise: &[Vec<Frac>]) -> Result<()> {
    let t = sizes.len();
    if pairwise.len() != t || pairwise.iter().any(|row| row.len() != t) {
        return Err(Error::Inconsistent(format!(
            "pairwise matrix must be {t}×{t}"
        )));
    }
    if sizes.iter().any(|s| s.is_negative()) {
        return Err(Error::Inconsistent("negative set size".into()));
    }
    for i in 0..t {
        for j in (i + 1)..t {
            if pairwise[i][j] != pairwise[j][i] {
                return Err(Error::Inconsistent(format!(
                    "pairwise entry ({i},{j}) is not symmetric"
                )));
            }
            if pairwise[i][j].is_negative() {
                return Err(Error::Inconsistent(format!(
                    "pairwise entry ({i},{j}) is negative"
                )));
            }
        }
    }
    Ok(())
}

/// Degree-2 inclusion–exclusion: `Σ|A_i| - Σ_{i<j}|A_i ∩ A_j|`, a
/// lower bound on `|A_1 ∪ … ∪ A_t|`. Sizes and intersections share
/// whatever unit the caller uses (counts or fractions of a domain).
///
/// Errors on inconsistent inputs: an intersection exceeding either of
/// its sets, asymmetry, or negative entries.
pub fn bonferroni_union_bound(sizes: &[Frac], pairwise: &[Vec<Frac>]) -> Result<Frac> {
    check_square_symmetric(sizes, pairwise)?;
    let t = sizes.len();
    for i in 0..t {
        for j in (i + 1)..t {
            if pairwise[i][j] > sizes[i].clone().min(sizes[j].clone()) {
                return Err(Error::Inconsistent(format!(
                    "intersection ({i},{j}) exceeds the smaller set"
                )));
            }
        }
    }
    let mut bound = frac::zero();
    for s in sizes {
        bound += s;
    }
    for i in 0..t {
        for j in (i + 1)..t {
            bound -= &pairwise[i][j];
        }
    }
    Ok(bound)
}

/// Whether a degree-2 lower bound on the union overflows the domain.
#[derive(Debug, Clone, Serialize)]
pub struct PackingReport {
    /// `Σ sizes - Σ caps`: a union lower bound valid whenever the caps
    /// really do bound the pairwise intersections.
    #[serde(with = "serde_frac")]
    pub union_lower_bound: Frac,
    #[serde(with = "serde_frac")]
    pub domain_size: Frac,
    /// Lower bound exceeds the domain: the hypothesized family cannot
    /// exist.
    pub contradiction: bool,
}

/// The closing step of the packing arguments: if every set is large,
/// pairwise intersections are capped, and the degree-2 bound already
/// exceeds the domain, the family is impossible.
///
/// Unlike [`bonferroni_union_bound`], the caps here are hypothesized
/// upper bounds rather than measured intersections, so they are not
/// required to sit below the set sizes.
pub fn packing_contradiction_check(
    sizes: &[Frac],
    pairwise_caps: &[Vec<Frac>],
    domain_size: &Frac,
) -> Result<PackingReport> {
    check_square_symmetric(sizes, pairwise_caps)?;
    if !domain_size.is_positive() {
        return Err(Error::Inconsistent("domain size must be positive".into()));
    }
    let t = sizes.len();
    let mut bound = frac::zero();
    for s in sizes {
        bound += s;
    }
    for i in 0..t {
        for j in (i + 1)..t {
            bound -= &pairwise_caps[i][j];
        }
    }
    Ok(PackingReport {
        contradiction: bound > *domain_size,
        union_lower_bound: bound,
        domain_size: domain_size.clone(),
    })
}

/// Audit of a family against a one-bit (XOR-form) oracle.
#[derive(Debug, Clone, Serialize)]
pub struct Thm6Report {
    pub t: usize,
    #[serde(with = "serde_frac")]
    pub epsilon: Frac,
    /// Largest pairwise `Pr[f_i^k = f_j^k]`; 0 for a single member.
    #[serde(with = "serde_frac")]
    pub max_dp_agreement: Frac,
    /// Condition (1): every pairwise DP-agreement is at most `√ε`
    /// (compared by squares).
    pub condition1_holds: bool,
    /// Smallest `Pr[B = f_i^{⊕k}]` over members.
    #[serde(with = "serde_frac")]
    pub min_xor_agreement: Frac,
    /// Condition (2): every member's oracle agreement is at least
    /// `1/2 + ε/2`.
    pub condition2_holds: bool,
    /// `2/ε²`.
    #[serde(with = "serde_frac")]
    pub size_bound: Frac,
    /// `t ≤ 2/ε²`, asserted when both conditions hold.
    pub size_bound_holds: Option<bool>,
    /// Echo of the supplied distance floor, if any.
    #[serde(with = "serde_frac_opt")]
    pub delta: Option<Frac>,
    /// Every pairwise distance strictly exceeds `δ` (the literal
    /// distance-floor hypothesis).
    pub distance_floor_holds: Option<bool>,
    /// Every pairwise `|1-2d| ≤ 1-2δ`: the two-sided band the
    /// correlation argument needs. Automatic for odd `k`; at even `k`
    /// a near-complement pair breaks it while passing the floor.
    pub correlation_band_holds: Option<bool>,
    /// `1/(ε² - (1-2δ)^k)` when the denominator is positive.
    #[serde(with = "serde_frac_opt")]
    pub distance_bound: Option<Frac>,
    /// `t ≤ distance_bound`, asserted only when condition (2), the
    /// floor, *and* the band hold with a positive denominator.
    pub distance_bound_holds: Option<bool>,
    /// Set when the floor and condition (2) hold with a positive
    /// denominator and `t` still exceeds the bound — possible only
    /// when the band fails, i.e. the literal floor form overreaches.
    pub literal_distance_bound_violated: Option<bool>,
}

/// Verifies both family conditions against a one-bit oracle, exactly,
/// and evaluates the size bounds they imply: `t ≤ 2/ε²` from the
/// DP-agreement form, and `t ≤ 1/(ε² - (1-2δ)^k)` when a pairwise
/// distance floor `δ` is supplied.
pub fn thm6_family_audit(
    family: &FunctionFamily,
    b: &dyn Fn(&KTuple) -> Result<bool>,
    k: usize,
    epsilon: &Frac,
    delta: Option<&Frac>,
    cap: EnumCap,
) -> Result<Thm6Report> {
    if !epsilon.is_positive() || *epsilon > frac::one() {
        return Err(Error::Degenerate(format!(
            "epsilon {} outside (0, 1]",
            frac::render(epsilon)
        )));
    }
    let n = family.arity();
    let t = family.len();
    let domain = tuple_domain(n, k, cap)?;

    // Condition (1): pairwise DP-agreement (1-d)^k ≤ √ε, by squares.
    let mut max_dp_agreement = frac::zero();
    for i in 0..t {
        for j in (i + 1)..t {
            let a = frac::pow(&family.agreement(i, j).clone(), k as u32);
            max_dp_agreement = max_dp_agreement.max(a);
        }
    }
    let condition1_holds = &max_dp_agreement * &max_dp_agreement <= *epsilon;

    // Condition (2): exhaustive oracle agreement per member.
    let mut hits = vec![0u64; t];
    for packed in 0..domain {
        let xs = KTuple::unpack(packed as u128, n, k)?;
        let answer = b(&xs)?;
        for (i, h) in hits.iter_mut().enumerate() {
            if family.member(i).xor_product(&xs)? == answer {
                *h += 1;
            }
        }
    }
    let min_xor_agreement = hits
        .iter()
        .map(|&h| frac_u(h as u128, domain as u128))
        .min()
        .expect("family is nonempty");
    let needed = frac::half() + epsilon / frac(2, 1);
    let condition2_holds = min_xor_agreement >= needed;

    let size_bound = frac(2, 1) / (epsilon * epsilon);
    let size_bound_holds =
        (condition1_holds && condition2_holds).then(|| frac_u(t as u128, 1) <= size_bound);

    let mut report = Thm6Report {
        t,
        epsilon: epsilon.clone(),
        max_dp_agreement,
        condition1_holds,
        min_xor_agreement,
        condition2_holds,
        size_bound,
        size_bound_holds,
        delta: delta.cloned(),
        distance_floor_holds: None,
        correlation_band_holds: None,
        distance_bound: None,
        distance_bound_holds: None,
        literal_distance_bound_violated: None,
    };

    if let Some(delta) = delta {
        let mut floor = true;
        let mut band = true;
        let band_cap = frac::one() - frac(2, 1) * delta;
        for i in 0..t {
            for j in (i + 1)..t {
                let d = family.distance(i, j);
                if d <= *delta {
                    floor = false;
                }
                if (frac::one() - frac(2, 1) * &d).abs() > band_cap {
                    band = false;
                }
            }
        }
        report.distance_floor_holds = Some(floor);
        report.correlation_band_holds = Some(band);
        let denom = epsilon * epsilon - frac::pow(&band_cap, k as u32);
        if denom.is_positive() {
            let bound = frac::one() / denom;
            let fits = frac_u(t as u128, 1) <= bound;
            report.distance_bound = Some(bound);
            if floor && condition2_holds {
                report.literal_distance_bound_violated = Some(!fits);
                if band {
                    report.distance_bound_holds = Some(fits);
                }
            }
        }
    }
    Ok(report)
}

/// Audit of a family against a `k`-bit (direct-product) oracle.
#[derive(Debug, Clone, Serialize)]
pub struct Thm8Report {
    pub t: usize,
    #[serde(with = "serde_frac")]
    pub epsilon: Frac,
    /// Per-member `|A_i| / 2^{nk}` where `A_i = {x̄ : B(x̄) = f_i^k(x̄)}`.
    #[serde(with = "crate::frac::serde_frac_vec")]
    pub coverage: Vec<Frac>,
    /// Every member covers at least an `ε` fraction.
    pub coverage_holds: bool,
    /// Largest pairwise `Pr[f_i^{⊕k} = f_j^{⊕k}]`; 0 for `t = 1`.
    #[serde(with = "serde_frac")]
    pub max_xor_agreement: Frac,
    /// Condition (1): every pairwise XOR-form agreement is strictly
    /// below `1/2 + ε⁶/2`.
    pub condition1_holds: bool,
    /// Fraction of new tuples each successive `A_j` contributes.
    #[serde(with = "crate::frac::serde_frac_vec")]
    pub greedy_new_fractions: Vec<Frac>,
    /// Replay of the union argument: every step adds at least `ε/2`.
    pub greedy_holds: bool,
    /// `|A_1 ∪ … ∪ A_t| / 2^{nk}`.
    #[serde(with = "serde_frac")]
    pub union_fraction: Frac,
    /// `2/ε`.
    #[serde(with = "serde_frac")]
    pub size_bound: Frac,
    /// `2/ε - t`; nonnegative iff the size bound holds.
    #[serde(with = "serde_frac")]
    pub size_bound_margin: Frac,
    pub size_bound_holds: bool,
    /// Everything above at once.
    pub all_pass: bool,
}

/// Verifies the direct-product family conditions exactly and replays
/// the union growth argument: when every `A_i` holds an `ε` fraction
/// and successive sets keep contributing `ε/2` new tuples, more than
/// `2/ε` members would overflow the domain.
pub fn thm8_family_audit(
    family: &FunctionFamily,
    b: &dyn Fn(&KTuple) -> Result<Mask>,
    k: usize,
    epsilon: &Frac,
    cap: EnumCap,
) -> Result<Thm8Report> {
    if !epsilon.is_positive() || *epsilon > frac::one() {
        return Err(Error::Degenerate(format!(
            "epsilon {} outside (0, 1]",
            frac::render(epsilon)
        )));
    }
    let n = family.arity();
    let t = family.len();
    let domain = tuple_domain(n, k, cap)?;

    // A_i membership per packed tuple, exactly.
    let mut member_sets: Vec<Vec<bool>> = vec![vec![false; domain as usize]; t];
    for packed in 0..domain {
        let xs = KTuple::unpack(packed as u128, n, k)?;
        let answer = b(&xs)?;
        if answer.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                got: answer.len(),
            });
        }
        for (i, set) in member_sets.iter_mut().enumerate() {
            if family.member(i).direct_product(&xs)? == answer {
                set[packed as usize] = true;
            }
        }
    }
    let coverage: Vec<Frac> = member_sets
        .iter()
        .map(|set| frac_u(set.iter().filter(|&&x| x).count() as u128, domain as u128))
        .collect();
    let coverage_holds = coverage.iter().all(|c| c >= epsilon);

    let mut max_xor_agreement = frac::zero();
    for i in 0..t {
        for j in (i + 1)..t {
            max_xor_agreement = max_xor_agreement.max(family.xor_form_agreement(i, j, k));
        }
    }
    let xor_cap = frac::half() + frac::pow(epsilon, 6) / frac(2, 1);
    let condition1_holds = t == 1 || max_xor_agreement < xor_cap;

    // Greedy replay in family order.
    let greedy_floor = epsilon / frac(2, 1);
    let mut covered = vec![false; domain as usize];
    let mut union_count = 0u64;
    let mut greedy_new_fractions = Vec::with_capacity(t);
    for set in &member_sets {
        let mut fresh = 0u64;
        for (i, &hit) in set.iter().enumerate() {
            if hit && !covered[i] {
                covered[i] = true;
                fresh += 1;
            }
        }
        union_count += fresh;
        greedy_new_fractions.push(frac_u(fresh as u128, domain as u128));
    }
    let greedy_holds = greedy_new_fractions.iter().all(|f| *f >= greedy_floor);
    let union_fraction = frac_u(union_count as u128, domain as u128);

    let size_bound = frac(2, 1) / epsilon;
    let size_bound_margin = &size_bound - frac_u(t as u128, 1);
    let size_bound_holds = !size_bound_margin.is_negative();
    let all_pass = coverage_holds && condition1_holds && greedy_holds && size_bound_holds;
    Ok(Thm8Report {
        t,
        epsilon: epsilon.clone(),
        coverage,
        coverage_holds,
        max_xor_agreement,
        condition1_holds,
        greedy_new_fractions,
        greedy_holds,
        union_fraction,
        size_bound,
        size_bound_margin,
        size_bound_holds,
        all_pass,
    })
}

/// Rejection-samples seeded random truth tables until `l` members with
/// pairwise distance at least `δ/2` (and no duplicates) are collected.
///
/// Errors with the achieved count when the attempt budget runs out —
/// the caller learns how far the search got.
pub fn pairwise_far_family(n: usize, delta: &Frac, l: usize, seed: u64) -> Result<FunctionFamily> {
    if l == 0 {
        return Err(Error::Degenerate("family needs at least one member".into()));
    }
    if delta.is_negative() || *delta > frac::one() {
        return Err(Error::Degenerate(format!(
            "delta {} outside [0, 1]",
            frac::render(delta)
        )));
    }
    let threshold = delta / frac(2, 1);
    let mut rng = rng_for(seed, Domain::Family, 0);
    let mut members: Vec<TruthTable> = Vec::with_capacity(l);
    let budget = 4096 * l as u64;
    for _ in 0..budget {
        let candidate = TruthTable::random(n, &mut rng)?;
        let mut ok = true;
        for m in &members {
            let d = candidate.distance(m)?;
            if d < threshold || d == frac::zero() {
                ok = false;
                break;
            }
        }
        if ok {
            members.push(candidate);
            if members.len() == l {
                return FunctionFamily::new(members);
            }
        }
    }
    Err(Error::BudgetExhausted {
        achieved: members.len(),
    })
}

/// What the piecewise construction verified about itself.
#[derive(Debug, Clone, Serialize)]
pub struct Thm9Report {
    pub t: usize,
    /// `1/t`: the agreement floor the construction is built to give.
    #[serde(with = "serde_frac")]
    pub epsilon: Frac,
    pub part_sizes: Vec<u64>,
    /// `floor(2^{nk}/t) / 2^{nk}`: the guaranteed floor when `t` does
    /// not divide the domain (members may also agree outside their own
    /// part, so measured agreement can only be larger).
    #[serde(with = "serde_frac")]
    pub guaranteed_floor: Frac,
    /// Exact `Pr[B = f_i^k]` per member.
    #[serde(with = "crate::frac::serde_frac_vec")]
    pub member_agreement: Vec<Frac>,
    /// Property (a): every member meets the guaranteed floor.
    pub property_a_holds: bool,
    /// Every member also meets the literal `1/t` (can fail only by a
    /// rounding sliver when `t` does not divide the domain).
    pub property_a_literal_holds: bool,
    /// Largest pairwise XOR-form agreement, by the cancellation
    /// formula.
    #[serde(with = "serde_frac")]
    pub max_xor_agreement: Frac,
    /// `1/2 + (1-δ)^k/2`.
    #[serde(with = "serde_frac")]
    pub property_b_cap: Frac,
    /// Property (b): every pairwise XOR-form agreement is within the
    /// cap.
    pub property_b_holds: bool,
    /// The formula agreed with exhaustive tuple counts for every pair.
    pub dual_route_consistent: bool,
    /// `ε > 2^{-k/12}`, compared as `ε¹² · 2^k > 1`. Reported, not
    /// asserted: desk-scale instances sit far below the asymptotic
    /// regime.
    pub stated_threshold_met: bool,
    /// Pairwise XOR-form agreement strictly below `1/2 + ε¹²/2`.
    /// Reported, not asserted, for the same reason.
    pub stated_agreement_cap_met: bool,
}

/// A pairwise-far family together with the piecewise oracle that
/// tracks all of it, plus the verification report.
#[derive(Debug, Clone)]
pub struct Thm9Construction {
    pub family: FunctionFamily,
    pub b: PiecewiseB,
    pub report: Thm9Report,
}

/// Builds `t` pairwise-far functions and the near-equal piecewise
/// oracle answering part `i` with `f_i^k`, then verifies exactly:
/// (a) every member's full-domain agreement with the oracle meets the
/// guaranteed floor, and (b) every pairwise XOR-form agreement stays
/// within `1/2 + (1-δ)^k/2`, with the cancellation formula
/// cross-checked against exhaustive counts.
pub fn construct_thm9_family(
    n: usize,
    k: usize,
    delta: &Frac,
    t: usize,
    seed: u64,
    cap: EnumCap,
) -> Result<Thm9Construction> {
    let family = pairwise_far_family(n, delta, t, seed)?;
    let domain = tuple_domain(n, k, cap)?;
    let b = PiecewiseB::near_equal(domain, t)?;

    let mut agreement_hits = vec![0u64; t];
    let mut xor_counts = vec![vec![0u64; t]; t];
    for packed in 0..domain {
        let xs = KTuple::unpack(packed as u128, n, k)?;
        let answer = b.evaluate(&family, k, &xs)?;
        let xor_values: Vec<bool> = family
            .members()
            .iter()
            .map(|f| f.xor_product(&xs))
            .collect::<Result<_>>()?;
        for i in 0..t {
            if family.member(i).direct_product(&xs)? == answer {
                agreement_hits[i] += 1;
            }
            for j in (i + 1)..t {
                if xor_values[i] == xor_values[j] {
                    xor_counts[i][j] += 1;
                }
            }
        }
    }
    let member_agreement: Vec<Frac> = agreement_hits
        .iter()
        .map(|&h| frac_u(h as u128, domain as u128))
        .collect();
    let epsilon = frac_u(1, t as u128);
    let guaranteed_floor = frac_u((domain as u128) / (t as u128), domain as u128);
    let property_a_holds = member_agreement.iter().all(|a| *a >= guaranteed_floor);
    let property_a_literal_holds = member_agreement.iter().all(|a| *a >= epsilon);

    let property_b_cap =
        frac::half() + frac::pow(&(frac::one() - delta), k as u32) / frac(2, 1);
    let stated_cap = frac::half() + frac::pow(&epsilon, 12) / frac(2, 1);
    let mut max_xor_agreement = frac::zero();
    let mut dual_route_consistent = true;
    for i in 0..t {
        for j in (i + 1)..t {
            let formula = family.xor_form_agreement(i, j, k);
            let counted = frac_u(xor_counts[i][j] as u128, domain as u128);
            if formula != counted {
                dual_route_consistent = false;
            }
            max_xor_agreement = max_xor_agreement.max(formula);
        }
    }
    let property_b_holds = t == 1 || max_xor_agreement <= property_b_cap;
    let stated_agreement_cap_met = t == 1 || max_xor_agreement < stated_cap;
    // ε > 2^{-k/12}  ⇔  ε¹² · 2^k > 1 (both sides positive).
    let stated_threshold_met = frac::pow(&epsilon, 12) * frac_u(1 << k.min(63), 1) > frac::one();

    let report = Thm9Report {
        t,
        epsilon,
        part_sizes: b.part_sizes(),
        guaranteed_floor,
        member_agreement,
        property_a_holds,
        property_a_literal_holds,
        max_xor_agreement,
        property_b_cap,
        property_b_holds,
        dual_route_consistent,
        stated_threshold_met,
        stated_agreement_cap_met,
    };
    Ok(Thm9Construction { family, b, report })
}

/// One family the randomized search flagged.
#[derive(Debug, Clone, Serialize)]
pub struct Thm11Violation {
    pub trial: u64,
    pub t: usize,
    #[serde(with = "serde_frac")]
    pub epsilon: Frac,
    #[serde(with = "serde_frac")]
    pub delta_folded: Frac,
    #[serde(with = "serde_frac")]
    pub bound: Frac,
}

/// Outcome of the seeded random hunt for a bound violation.
#[derive(Debug, Clone, Serialize)]
pub struct Thm11SearchReport {
    pub trials: u64,
    /// Trials whose extremal parameters made the bound binding.
    pub checked: u64,
    /// Trials where the denominator `ε² - (1-2δ)^k` was not positive.
    pub vacuous: u64,
    /// Trials where the oracle had no advantage on some member.
    pub no_advantage: u64,
    pub violations: Vec<Thm11Violation>,
}

/// Seeded random search for a violation of `t ≤ 1/(ε² - (1-2δ)^k)`.
///
/// Each trial draws a family of random tables plus a random one-bit
/// oracle over tuples, then extracts the *extremal* parameters the
/// hypotheses allow: `ε` from the worst member agreement and `δ` from
/// the smallest folded pairwise distance — the folding is what keeps
/// the check sound at even `k`, where a complement-identical pair has
/// correlation 1 regardless of how far apart the tables sit. Any
/// violation is returned; the suite treats one as a hard failure.
pub fn search_thm11_counterexamples(
    n: usize,
    k: usize,
    trials: u64,
    t_max: usize,
    seed: u64,
    cap: EnumCap,
) -> Result<Thm11SearchReport> {
    if t_max < 2 {
        return Err(Error::Degenerate("need t_max ≥ 2 to form pairs".into()));
    }
    let domain = tuple_domain(n, k, cap)?;
    let mut report = Thm11SearchReport {
        trials,
        checked: 0,
        vacuous: 0,
        no_advantage: 0,
        violations: Vec::new(),
    };
    for trial in 0..trials {
        let mut rng = rng_for(seed, Domain::Search, trial);
        let t = 2 + (crate::seeding::word_below(&mut rng, (t_max - 1) as u64) as usize);
        let members: Vec<TruthTable> = (0..t)
            .map(|_| TruthTable::random(n, &mut rng))
            .collect::<Result<_>>()?;
        let b = TruthTable::random(n * k, &mut rng)?;
        let family = FunctionFamily::new(members)?;

        let mut min_hits = domain;
        for i in 0..t {
            let mut hits = 0u64;
            for packed in 0..domain {
                let xs = KTuple::unpack(packed as u128, n, k)?;
                if b.eval(packed)? == family.member(i).xor_product(&xs)? {
                    hits += 1;
                }
            }
            min_hits = min_hits.min(hits);
        }
        let min_agreement = frac_u(min_hits as u128, domain as u128);
        let epsilon = frac(2, 1) * (min_agreement - frac::half());
        if !epsilon.is_positive() {
            report.no_advantage += 1;
            continue;
        }
        let delta_folded = family
            .min_folded_distance()
            .expect("t ≥ 2 has at least one pair");
        let corr_cap = frac::one() - frac(2, 1) * &delta_folded;
        let denom = &epsilon * &epsilon - frac::pow(&corr_cap, k as u32);
        if !denom.is_positive() {
            report.vacuous += 1;
            continue;
        }
        report.checked += 1;
        let bound = frac::one() / denom;
        if frac_u(t as u128, 1) > bound {
            report.violations.push(Thm11Violation {
                trial,
                t,
                epsilon,
                delta_folded,
                bound,
            });
        }
    }
    Ok(report)
}
