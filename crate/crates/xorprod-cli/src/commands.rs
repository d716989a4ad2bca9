//! Subcommand implementations.
//!
//! Each handler resolves its instance deterministically from the
//! master seed (function from stream 0, decoys from odd streams,
//! adversaries from the seed itself), runs the library operation, and
//! folds the outcome into the report envelope. All exact values cross
//! the boundary as `"p/q"` strings.

use std::fs;
use std::path::{Path, PathBuf};

use num_traits::{Signed, ToPrimitive};
use serde::Deserialize;
use serde_json::{json, Value};

use xorprod::bits::Bits;
use xorprod::boolfn::{
    empirical_xor_zero_rate, xor_zero_advantage, KTuple, TruthTable,
};
use xorprod::bounds::{
    construct_thm9_family, lemma7_check, search_thm11_counterexamples, thm6_family_audit,
    thm8_family_audit, FunctionFamily, PiecewiseB,
};
use xorprod::dp2xor::{
    beta_profile_b_2k, beta_profile_b_k, gamma_profile, lemma2_exact_check,
    lemma3_lemma4_exact_check, lemma5_exact_check, reduce_thm1, reduce_thm3, FillerMode,
    ReduceParams,
};
use xorprod::frac::{self, frac, frac_u, Frac};
use xorprod::gldecode::{gl_decode_list, linear_oracle, GLParams};
use xorprod::oracles::{
    dp_target, exact_success, mc_success, plant_dp_adversary, plant_xor_adversary,
    xor_target, AdversaryDescriptor, PlantedAdversary,
};
use xorprod::seeding::{rng_for, word_below, Domain};
use xorprod::xor2dp::{
    list_reduce_thm2, nonuniformity_demo, reduce_thm2, DecoderParams,
};
use xorprod::EnumCap;

use crate::report::{float, Check, Outcome};
use crate::{CliError, Ctx, Model, OutputMode, Result};

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid {what} {}: {e}", path.display())))
}

/// The instance function: from `--function` when given, otherwise
/// drawn from the master seed's function stream.
fn load_function(ctx: &Ctx, n: usize, path: Option<&PathBuf>) -> Result<TruthTable> {
    match path {
        Some(p) => {
            let f: TruthTable = read_json(p, "truth-table file")?;
            if f.arity() != n {
                return Err(CliError::usage(format!(
                    "--function has arity {}, but --n is {n}",
                    f.arity()
                )));
            }
            Ok(f)
        }
        None => ctx.lib(TruthTable::random(n, &mut rng_for(ctx.seed, Domain::Function, 0))),
    }
}

fn descriptor(ctx: &Ctx, model: Model, n: usize, epsilon: &Frac) -> Result<AdversaryDescriptor> {
    Ok(match model {
        Model::RandomSubset => AdversaryDescriptor::random_subset(ctx.seed, epsilon.clone()),
        Model::PlantedFunction => {
            let decoy =
                ctx.lib(TruthTable::random(n, &mut rng_for(ctx.seed, Domain::Function, 1)))?;
            AdversaryDescriptor::planted_function(ctx.seed, decoy)
        }
    })
}

fn plant_xor(
    ctx: &Ctx,
    f: &TruthTable,
    k: usize,
    model: Model,
    epsilon: &Frac,
) -> Result<PlantedAdversary> {
    let desc = descriptor(ctx, model, f.arity(), epsilon)?;
    ctx.lib(plant_xor_adversary(f, k, &desc, ctx.cap))
}

fn ratio(f: &Frac) -> String {
    frac::render(f)
}

// ---------------------------------------------------------------- gen-function

pub fn gen_function(ctx: &Ctx, n: usize) -> Result<Outcome> {
    let f = load_function(ctx, n, None)?;
    let mut text = serde_json::to_string_pretty(&f).expect("table serializes");
    text.push('\n');
    Ok(Outcome::raw(text))
}

// ---------------------------------------------------------------- plant

pub enum PlantTarget {
    Xor,
    Dp,
}

pub fn plant(
    ctx: &Ctx,
    n: usize,
    k: usize,
    epsilon: &Frac,
    model: Model,
    target: PlantTarget,
    function: Option<&PathBuf>,
) -> Result<Outcome> {
    let f = load_function(ctx, n, function)?;
    let desc = descriptor(ctx, model, n, epsilon)?;
    let (planted, label) = match target {
        PlantTarget::Xor => (ctx.lib(plant_xor_adversary(&f, k, &desc, ctx.cap))?, "xor"),
        PlantTarget::Dp => (ctx.lib(plant_dp_adversary(&f, k, &desc, ctx.cap))?, "dp"),
    };
    let domain = 1u64 << (n * k);
    // The adversary is tapeless, so its full answer table regenerates
    // from one pass; emitting it makes the plant a portable artifact.
    let empty = Bits::zeros(0);
    let answers: Value = match target {
        PlantTarget::Xor => {
            let table = ctx.lib(TruthTable::from_fn(n * k, |x| {
                planted
                    .algorithm
                    .run(&Bits::from_word(x as u128, n * k), &empty)
                    .expect("validated shapes")
                    .get(0)
            }))?;
            json!(table)
        }
        PlantTarget::Dp => {
            let rows: Vec<u64> = (0..domain)
                .map(|x| {
                    planted
                        .algorithm
                        .run(&Bits::from_word(x as u128, n * k), &empty)
                        .expect("validated shapes")
                        .as_u128() as u64
                })
                .collect();
            json!(rows)
        }
    };
    let config = json!({
        "op": "plant", "target": label, "n": n, "k": k,
        "epsilon_target": ratio(epsilon), "model": model.name(), "seed": ctx.seed,
    });
    let results = json!({
        "descriptor": desc,
        "epsilon_achieved": ratio(&planted.epsilon_achieved),
        "correct_count": planted.correct_count,
        "domain_size": domain,
        "function": f,
        "answers": answers,
    });
    Ok(Outcome::report(config, results, Vec::new()))
}

// ---------------------------------------------------------------- reduce dp2xor

pub enum DpVariant {
    Thm1,
    Thm3,
}

impl DpVariant {
    fn name(&self) -> &'static str {
        match self {
            DpVariant::Thm1 => "thm1",
            DpVariant::Thm3 => "thm3",
        }
    }
}

pub struct DpReduceSpec {
    pub variant: DpVariant,
    pub n: usize,
    pub k: usize,
    pub epsilon: Frac,
    pub model: Model,
    pub mode: OutputMode,
    pub trials: u64,
    pub guess_bits: Option<usize>,
    pub votes_per_bit: u64,
    pub success_floor: Option<f64>,
    pub function: Option<PathBuf>,
}

pub fn reduce_dp2xor(ctx: &Ctx, spec: &DpReduceSpec) -> Result<Outcome> {
    let f = load_function(ctx, spec.n, spec.function.as_ref())?;
    let planted = plant_xor(ctx, &f, spec.k, spec.model, &spec.epsilon)?;
    let eps = planted.epsilon_achieved.clone();
    let params = ReduceParams {
        guess_bits: spec.guess_bits,
        votes_per_bit: spec.votes_per_bit,
        score_samples: None,
        output_mode: spec.mode.into(),
        filler_mode: FillerMode::FreshRandom,
    };
    let pipeline = match spec.variant {
        DpVariant::Thm1 => ctx.lib(reduce_thm1(&planted.algorithm, spec.n, spec.k, &eps, &params))?,
        DpVariant::Thm3 => ctx.lib(reduce_thm3(&planted.algorithm, spec.n, spec.k, &eps, &params))?,
    };
    let out_k = match spec.variant {
        DpVariant::Thm1 => spec.k,
        DpVariant::Thm3 => 2 * spec.k,
    };
    let target = dp_target(&f, out_k);
    let success = ctx.lib(mc_success(&pipeline.algorithm, &target, spec.trials, ctx.seed))?;

    let mut checks = Vec::new();
    if let Some(floor) = spec.success_floor {
        checks.push(Check::asserted(
            "measured pipeline success meets the configured floor",
            format!(">= {}", float(floor)),
            float(success.point),
            success.point >= floor,
        ));
    }
    let config = json!({
        "op": "reduce", "direction": "dp2xor", "variant": spec.variant.name(),
        "n": spec.n, "k": spec.k, "epsilon_target": ratio(&spec.epsilon),
        "epsilon_achieved": ratio(&eps), "model": spec.model.name(),
        "mode": spec.mode.name(), "seed": ctx.seed, "trials": spec.trials,
    });
    let results = json!({
        "epsilon_achieved": ratio(&eps),
        "decoder_advantage": ratio(&pipeline.gamma),
        "guess_bits": pipeline.guess_bits,
        "warning": pipeline.warning,
        "output_bits": out_k,
        "success": success,
        "queries": {
            "decoder_invocations": pipeline.decoder_invocations.load(std::sync::atomic::Ordering::Relaxed),
            "predictor_queries": pipeline.predictor_queries.load(std::sync::atomic::Ordering::Relaxed),
        },
    });
    Ok(Outcome::report(config, results, checks))
}

// ---------------------------------------------------------------- reduce xor2dp

pub struct XorReduceSpec {
    pub n: usize,
    pub k: usize,
    pub epsilon: Frac,
    pub model: Model,
    pub list_size: usize,
    pub c_const: f64,
    pub delta_target: Frac,
    pub votes: Option<u64>,
    pub function: Option<PathBuf>,
}

pub fn reduce_xor2dp(ctx: &Ctx, spec: &XorReduceSpec) -> Result<Outcome> {
    let f = load_function(ctx, spec.n, spec.function.as_ref())?;
    let desc = descriptor(ctx, spec.model, spec.n, &spec.epsilon)?;
    let planted = ctx.lib(plant_dp_adversary(&f, spec.k, &desc, ctx.cap))?;
    let eps = planted.epsilon_achieved.clone();
    let params = DecoderParams {
        votes: spec.votes,
        consistency_size: None,
        delta_target: spec.delta_target.clone(),
        c_const: spec.c_const,
    };

    let mut checks = Vec::new();
    let results = if spec.list_size <= 1 {
        let red = ctx.lib(reduce_thm2(
            &planted.algorithm,
            &f,
            spec.k,
            &eps,
            &params,
            ctx.seed,
        ))?;
        let measured = ctx.lib(exact_success(
            &red.algorithm,
            &xor_target(&f, spec.k),
            ctx.cap,
        ))?;
        let expected = frac::half() + &red.report.advantage;
        let pass = measured.exact_value() == Some(&expected);
        checks.push(Check::asserted(
            "composed agreement equals the error-cancellation value",
            ratio(&expected),
            measured
                .exact_value()
                .map(ratio)
                .unwrap_or_else(|| float(measured.point)),
            pass,
        ));
        checks.push(Check::reported(
            "decoded function reached the distance target",
            format!("delta' <= {}", ratio(&spec.delta_target)),
            ratio(&red.report.delta_prime),
            red.report.delta_target_met,
        ));
        json!({
            "epsilon_achieved": ratio(&eps),
            "reduction": red.report,
            "composed_success": measured,
        })
    } else {
        let (members, list_report) = ctx.lib(list_reduce_thm2(
            &planted.algorithm,
            &f,
            spec.k,
            &eps,
            &params,
            spec.list_size,
            ctx.seed,
        ))?;
        let target = xor_target(&f, spec.k);
        let mut mismatches = 0usize;
        for member in &members {
            let measured = ctx.lib(exact_success(&member.algorithm, &target, ctx.cap))?;
            if measured.exact_value() != Some(&(frac::half() + &member.report.advantage)) {
                mismatches += 1;
            }
        }
        checks.push(Check::asserted(
            "every member's composed agreement equals its error-cancellation value",
            "0 mismatches".to_string(),
            format!("{mismatches} mismatches"),
            mismatches == 0,
        ));
        checks.push(Check::asserted(
            "some list member reached the distance target",
            format!("any delta' <= {}", ratio(&spec.delta_target)),
            format!("{}", list_report.any_delta_target_met),
            list_report.any_delta_target_met,
        ));
        json!({
            "epsilon_achieved": ratio(&eps),
            "list": list_report,
        })
    };
    let config = json!({
        "op": "reduce", "direction": "xor2dp", "variant": "thm2",
        "n": spec.n, "k": spec.k, "epsilon_target": ratio(&spec.epsilon),
        "epsilon_achieved": ratio(&eps), "model": spec.model.name(),
        "list_size": spec.list_size, "c_const": spec.c_const,
        "delta_target": ratio(&spec.delta_target), "seed": ctx.seed,
    });
    Ok(Outcome::report(config, results, checks))
}

// ---------------------------------------------------------------- gl-decode

pub fn gl_decode(
    ctx: &Ctx,
    n: usize,
    gamma: &Frac,
    guess_bits: Option<usize>,
) -> Result<Outcome> {
    if n == 0 || n > 16 {
        return Err(CliError::usage("--n must be in 1..=16"));
    }
    if !gamma.is_positive() || *gamma > frac::half() {
        return Err(CliError::usage(
            "--gamma must be a rational in (0, 1/2]",
        ));
    }
    let size = 1u64 << n;
    let x = word_below(&mut rng_for(ctx.seed, Domain::Function, 0), size);
    // Flip the rounded count of parity outputs so the oracle's
    // agreement is exactly 1/2 + gamma_achieved.
    let wrong = frac::round_scaled(&(frac::half() - gamma), size as u128)
        .to_u64()
        .expect("flip count fits");
    let mut flips = Bits::zeros(size as usize);
    let mut rng = rng_for(ctx.seed, Domain::AdversaryWrong, 0);
    let mut placed = 0;
    while placed < wrong {
        let i = word_below(&mut rng, size) as usize;
        if !flips.get(i) {
            flips.set(i, true);
            placed += 1;
        }
    }
    let gamma_achieved = frac::half() - frac_u(wrong as u128, size as u128);
    if !gamma_achieved.is_positive() {
        return Err(CliError::usage(format!(
            "--gamma {} rounds to zero advantage over {size} masks",
            ratio(gamma)
        )));
    }
    let oracle = linear_oracle(x, n, Some(flips));
    let params = match guess_bits {
        Some(l) => GLParams::new(l, ctx.seed),
        None => GLParams::default_for(n, &gamma_achieved, ctx.seed),
    };
    let list = ctx.lib(gl_decode_list(&oracle, n, &gamma_achieved, &params))?;
    let found = list.contains(x);
    let checks = vec![Check::reported(
        "planted string appears in the decoded list",
        format!("list contains {x}"),
        format!("{found}"),
        found,
    )];
    let config = json!({
        "op": "gl-decode", "n": n, "gamma_target": ratio(gamma),
        "gamma_achieved": ratio(&gamma_achieved),
        "guess_bits": params.guess_bits, "seed": ctx.seed,
    });
    let results = json!({
        "planted": x,
        "agreement_achieved": ratio(&(frac::half() + &gamma_achieved)),
        "oracle_queries": oracle.queries(),
        "list": list,
    });
    Ok(Outcome::report(config, results, checks))
}

// ---------------------------------------------------------------- verify

pub fn verify_lemma_basic(
    ctx: &Ctx,
    max_len: usize,
    max_k: u32,
    samples: usize,
) -> Result<Outcome> {
    if max_len == 0 || max_k == 0 {
        return Err(CliError::usage("--max-len and --max-k must be positive"));
    }
    let mut strings: Vec<Bits> = vec![
        Bits::zeros(1),
        Bits::from_fn(1, |_| true),
        Bits::zeros(max_len),
        Bits::from_fn(max_len, |_| true),
        Bits::from_fn(max_len, |i| i % 2 == 0),
    ];
    let mut rng = rng_for(ctx.seed, Domain::SampleTuple, 0);
    for _ in 0..samples {
        let len = 1 + word_below(&mut rng, max_len as u64) as usize;
        let mut s = Bits::zeros(len);
        for i in 0..len {
            if word_below(&mut rng, 2) == 1 {
                s.set(i, true);
            }
        }
        strings.push(s);
    }
    let mut comparisons = 0u64;
    let mut mismatches = 0u64;
    for s in &strings {
        let omega = frac_u(s.count_ones() as u128, s.len() as u128);
        for k in 1..=max_k {
            let closed = xor_zero_advantage(&omega, k);
            let walked = ctx.lib(empirical_xor_zero_rate(s, k))?;
            comparisons += 1;
            if closed != walked {
                mismatches += 1;
            }
        }
    }
    let checks = vec![Check::asserted(
        "lemma-basic: sampled-XOR zero rate equals the closed form",
        "0 mismatches".to_string(),
        format!("{mismatches} mismatches"),
        mismatches == 0,
    )];
    let config = json!({
        "op": "verify", "variant": "lemma-basic", "max_len": max_len,
        "max_k": max_k, "samples": samples, "seed": ctx.seed,
    });
    let results = json!({
        "strings_checked": strings.len(),
        "comparisons": comparisons,
        "mismatches": mismatches,
    });
    Ok(Outcome::report(config, results, checks))
}

pub struct LemmaInstanceSpec {
    pub n: usize,
    pub k: usize,
    pub epsilon: Frac,
    pub model: Model,
    pub function: Option<PathBuf>,
}

pub fn verify_lemma1(ctx: &Ctx, spec: &LemmaInstanceSpec, instances: u64) -> Result<Outcome> {
    if instances == 0 {
        return Err(CliError::usage("--instances must be positive"));
    }
    let mut rows = Vec::new();
    let mut mismatches = 0u64;
    for i in 0..instances {
        let f = ctx.lib(TruthTable::random(
            spec.n,
            &mut rng_for(ctx.seed, Domain::Function, 2 * i),
        ))?;
        let desc = match spec.model {
            Model::RandomSubset => AdversaryDescriptor::random_subset(
                ctx.seed.wrapping_add(i),
                spec.epsilon.clone(),
            ),
            Model::PlantedFunction => {
                let decoy = ctx.lib(TruthTable::random(
                    spec.n,
                    &mut rng_for(ctx.seed, Domain::Function, 2 * i + 1),
                ))?;
                AdversaryDescriptor::planted_function(ctx.seed.wrapping_add(i), decoy)
            }
        };
        let planted = ctx.lib(plant_xor_adversary(&f, spec.k, &desc, ctx.cap))?;
        let profile = ctx.lib(gamma_profile(&planted.algorithm, &f, spec.k, ctx.cap))?;
        let equal = *profile.mean() == planted.epsilon_achieved;
        if !equal {
            mismatches += 1;
        }
        rows.push(json!({
            "instance": i,
            "epsilon_achieved": ratio(&planted.epsilon_achieved),
            "gamma_mean": ratio(profile.mean()),
            "equal": equal,
        }));
    }
    let checks = vec![Check::asserted(
        "lemma1: restriction-advantage mean equals the oracle advantage on every instance",
        "0 mismatches".to_string(),
        format!("{mismatches} of {instances}"),
        mismatches == 0,
    )];
    let config = json!({
        "op": "verify", "variant": "lemma1", "n": spec.n, "k": spec.k,
        "epsilon_target": ratio(&spec.epsilon), "model": spec.model.name(),
        "instances": instances, "seed": ctx.seed,
    });
    Ok(Outcome::report(config, json!({ "instances": rows }), checks))
}

/// How many evaluation points `verify lemma2` audits.
#[derive(Debug, Clone, Copy)]
pub enum HostPlan {
    /// Exhaustive when the host space is tiny, else 50 samples.
    Auto,
    All,
    Sample(u64),
}

pub fn verify_lemma2(ctx: &Ctx, spec: &LemmaInstanceSpec, plan: HostPlan) -> Result<Outcome> {
    let f = load_function(ctx, spec.n, spec.function.as_ref())?;
    let planted = plant_xor(ctx, &f, spec.k, spec.model, &spec.epsilon)?;
    let host_bits = 2 * spec.n * spec.k;
    let space: Option<u128> = (host_bits < 128).then(|| 1u128 << host_bits);
    let exhaustive = match plan {
        HostPlan::All => true,
        HostPlan::Sample(_) => false,
        HostPlan::Auto => space.is_some_and(|s| s <= 4096),
    };
    let mut audited = 0u64;
    let mut independent_failures = 0u64;
    let mut partition_dip_hosts = 0u64;
    let mut partition_dip_levels = 0u64;
    let mut run_host = |xs: KTuple| -> Result<()> {
        let rep = ctx.lib(lemma2_exact_check(&planted.algorithm, &f, &xs, ctx.cap))?;
        audited += 1;
        if !rep.independent_form_all_pass {
            independent_failures += 1;
        }
        if rep.partition_violations > 0 {
            partition_dip_hosts += 1;
            partition_dip_levels += rep.partition_violations as u64;
        }
        Ok(())
    };
    if exhaustive {
        let s = space.ok_or_else(|| {
            CliError::usage(format!("host space of {host_bits} bits cannot be enumerated"))
        })?;
        ctx.lib(ctx.cap.check(s))?;
        for packed in 0..s {
            run_host(KTuple::unpack(packed, spec.n, 2 * spec.k).expect("in range"))?;
        }
    } else {
        let count = match plan {
            HostPlan::Sample(c) => c,
            _ => 50,
        };
        for j in 0..count {
            let mut rng = rng_for(ctx.seed, Domain::SampleTuple, j);
            let xs = ctx.lib(KTuple::random(spec.n, 2 * spec.k, &mut rng))?;
            run_host(xs)?;
        }
    }
    let checks = vec![
        Check::asserted(
            "lemma2: per-host independent combiner stays at or above 1/2 + 2*gamma^2",
            "0 hosts below the floor".to_string(),
            format!("{independent_failures} of {audited}"),
            independent_failures == 0,
        ),
        Check::reported(
            "lemma2: disjoint-partition accounting stays above the same floor",
            "0 hosts dip".to_string(),
            format!("{partition_dip_hosts} hosts, {partition_dip_levels} levels"),
            partition_dip_hosts == 0,
        ),
    ];
    let config = json!({
        "op": "verify", "variant": "lemma2", "n": spec.n, "k": spec.k,
        "epsilon_target": ratio(&spec.epsilon),
        "epsilon_achieved": ratio(&planted.epsilon_achieved),
        "model": spec.model.name(), "seed": ctx.seed,
        "hosts": if exhaustive { json!("all") } else { json!(audited) },
    });
    let results = json!({
        "hosts_audited": audited,
        "independent_failures": independent_failures,
        "partition_dip_hosts": partition_dip_hosts,
        "partition_dip_levels": partition_dip_levels,
    });
    Ok(Outcome::report(config, results, checks))
}

pub fn verify_lemma3(ctx: &Ctx, spec: &LemmaInstanceSpec) -> Result<Outcome> {
    let f = load_function(ctx, spec.n, spec.function.as_ref())?;
    let planted = plant_xor(ctx, &f, spec.k, spec.model, &spec.epsilon)?;
    let rep = ctx.lib(lemma3_lemma4_exact_check(
        &planted.algorithm,
        &f,
        spec.k,
        ctx.cap,
    ))?;
    let mut checks = Vec::new();
    for level in &rep.levels {
        checks.push(Check::asserted(
            format!("lemma3: even restriction size {} clears 1/2 + 2*epsilon^2", 2 * level.i),
            format!(">= {}", ratio(&level.bound)),
            ratio(&level.success),
            level.pass,
        ));
    }
    checks.push(Check::asserted(
        "lemma4: mean predictor advantage clears epsilon^2",
        format!(">= {}", ratio(&rep.beta_bound)),
        ratio(&rep.beta_mean),
        rep.beta_pass,
    ));
    checks.push(Check::asserted(
        "lemma4: branch decomposition reconstructs the mean exactly",
        "decomposition sums to the mean".to_string(),
        format!("{}", rep.decomposition_consistent),
        rep.decomposition_consistent,
    ));
    let config = json!({
        "op": "verify", "variant": "lemma3", "n": spec.n, "k": spec.k,
        "epsilon_target": ratio(&spec.epsilon),
        "epsilon_achieved": ratio(&rep.epsilon),
        "model": spec.model.name(), "seed": ctx.seed,
    });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

pub fn verify_lemma5(ctx: &Ctx, spec: &LemmaInstanceSpec) -> Result<Outcome> {
    let f = load_function(ctx, spec.n, spec.function.as_ref())?;
    let planted = plant_xor(ctx, &f, spec.k, spec.model, &spec.epsilon)?;
    let rep = ctx.lib(lemma5_exact_check(&planted.algorithm, &f, spec.k, ctx.cap))?;
    let floor_check = if rep.asserted {
        Check::asserted(
            "lemma5: wide-mask mean advantage clears the branch floor",
            format!(">= {}", ratio(&rep.bound)),
            ratio(&rep.beta_mean),
            rep.pass,
        )
    } else {
        Check::reported(
            "lemma5: wide-mask mean advantage vs the branch floor (odd k, reported)",
            format!(">= {}", ratio(&rep.bound)),
            ratio(&rep.beta_mean),
            rep.pass,
        )
    };
    let checks = vec![
        Check::asserted(
            "lemma5: weight-k branch advantage equals the oracle advantage",
            ratio(&rep.epsilon),
            ratio(&rep.direct_branch_advantage),
            rep.direct_branch_advantage == rep.epsilon,
        ),
        floor_check,
    ];
    let config = json!({
        "op": "verify", "variant": "lemma5", "n": spec.n, "k": spec.k,
        "epsilon_target": ratio(&spec.epsilon),
        "epsilon_achieved": ratio(&rep.epsilon),
        "model": spec.model.name(), "seed": ctx.seed,
    });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

pub fn verify_lemma7(
    ctx: &Ctx,
    n: usize,
    k: usize,
    delta: &Frac,
    f_path: Option<&PathBuf>,
    g_path: Option<&PathBuf>,
) -> Result<Outcome> {
    let f = load_function(ctx, n, f_path)?;
    let g = match g_path {
        Some(p) => {
            let g: TruthTable = read_json(p, "truth-table file")?;
            if g.arity() != n {
                return Err(CliError::usage(format!(
                    "--g has arity {}, but --n is {n}",
                    g.arity()
                )));
            }
            g
        }
        None => ctx.lib(TruthTable::random(
            n,
            &mut rng_for(ctx.seed, Domain::Function, 1),
        ))?,
    };
    let rep = ctx.lib(lemma7_check(&f, &g, k, delta, ctx.cap))?;
    let checks = vec![
        Check::asserted(
            "lemma7: tuple-level agreement equals (1 - d)^k",
            ratio(&rep.product_form),
            ratio(&rep.dp_agreement),
            rep.identity_holds,
        ),
        Check::asserted(
            "lemma7: tuple-level agreement is capped by (1 - delta)^k",
            format!("<= {}", ratio(&rep.delta_cap)),
            ratio(&rep.dp_agreement),
            rep.within_cap,
        ),
    ];
    let config = json!({
        "op": "verify", "variant": "lemma7", "n": n, "k": k,
        "delta": ratio(delta), "seed": ctx.seed,
    });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

// ---------------------------------------------------------------- demo

pub fn demo_nonuniformity(ctx: &Ctx, k: usize) -> Result<Outcome> {
    let rep = ctx.lib(nonuniformity_demo(k, &DecoderParams::default()))?;
    let checks = vec![
        Check::asserted(
            "oracle halves are exactly balanced",
            "true".to_string(),
            format!("{}", rep.halves_equal),
            rep.halves_equal,
        ),
        Check::asserted(
            "advice-matched composed advantage",
            "1/2".to_string(),
            ratio(&rep.advantage_matched),
            rep.advantage_matched == frac::half(),
        ),
        Check::reported(
            "advice-mismatched composed advantage",
            "-1/2".to_string(),
            ratio(&rep.advantage_mismatched),
            rep.advantage_mismatched == -frac::half(),
        ),
        Check::asserted(
            "advice-averaged advantage collapses to a coin flip",
            "0/1 and 0/1".to_string(),
            format!(
                "{} and {}",
                ratio(&rep.averaged_vs_zero),
                ratio(&rep.averaged_vs_one)
            ),
            rep.averaged_vs_zero == frac::zero() && rep.averaged_vs_one == frac::zero(),
        ),
    ];
    let config = json!({ "op": "demo-nonuniformity", "n": 1, "k": k, "seed": ctx.seed });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

// ---------------------------------------------------------------- bounds

fn load_family(path: &Path) -> Result<FunctionFamily> {
    let members: Vec<TruthTable> = read_json(path, "family file")?;
    FunctionFamily::new(members)
        .map_err(|e| CliError::usage(format!("invalid family {}: {e}", path.display())))
}

pub fn bounds_audit_thm6(
    ctx: &Ctx,
    family_path: &Path,
    b_path: &Path,
    k: usize,
    epsilon: &Frac,
    delta: Option<&Frac>,
) -> Result<Outcome> {
    let family = load_family(family_path)?;
    let b: TruthTable = read_json(b_path, "truth-table file")?;
    if b.arity() != family.arity() * k {
        return Err(CliError::usage(format!(
            "--b has arity {}, expected n*k = {}",
            b.arity(),
            family.arity() * k
        )));
    }
    let oracle = |xs: &KTuple| b.eval(xs.pack() as u64);
    let rep = ctx.lib(thm6_family_audit(&family, &oracle, k, epsilon, delta, ctx.cap))?;
    let mut checks = vec![
        Check::asserted(
            "audit-thm6: pairwise direct-product agreement within sqrt(epsilon)",
            format!("max^2 <= {}", ratio(epsilon)),
            ratio(&rep.max_dp_agreement),
            rep.condition1_holds,
        ),
        Check::asserted(
            "audit-thm6: every member agrees with the oracle at 1/2 + epsilon/2",
            format!(">= {}", ratio(&(frac::half() + epsilon / frac(2, 1)))),
            ratio(&rep.min_xor_agreement),
            rep.condition2_holds,
        ),
    ];
    if let Some(holds) = rep.size_bound_holds {
        checks.push(Check::asserted(
            "audit-thm6: family size within 2/epsilon^2",
            format!("t <= {}", ratio(&rep.size_bound)),
            format!("t = {}", rep.t),
            holds,
        ));
    }
    if let Some(floor) = rep.distance_floor_holds {
        checks.push(Check::reported(
            "audit-thm6: pairwise distances strictly above delta",
            "all pairs".to_string(),
            format!("{floor}"),
            floor,
        ));
    }
    if let Some(band) = rep.correlation_band_holds {
        checks.push(Check::reported(
            "audit-thm6: pairwise correlations within the two-sided band",
            "|1-2d| <= 1-2*delta for all pairs".to_string(),
            format!("{band}"),
            band,
        ));
    }
    if let Some(holds) = rep.distance_bound_holds {
        checks.push(Check::asserted(
            "audit-thm6: family size within the banded correlation bound",
            format!(
                "t <= {}",
                rep.distance_bound.as_ref().map(ratio).unwrap_or_default()
            ),
            format!("t = {}", rep.t),
            holds,
        ));
    }
    if rep.literal_distance_bound_violated == Some(true) {
        checks.push(Check::reported(
            "audit-thm6: distance-floor-only size bound fails on this family",
            "(two-sided band required)".to_string(),
            format!(
                "t = {} > {}",
                rep.t,
                rep.distance_bound.as_ref().map(ratio).unwrap_or_default()
            ),
            false,
        ));
    }
    let config = json!({
        "op": "bounds", "variant": "audit-thm6",
        "family": family_path.display().to_string(), "b": b_path.display().to_string(),
        "t": family.len(), "n": family.arity(), "k": k,
        "epsilon": ratio(epsilon),
        "delta": delta.map(ratio),
    });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

pub fn bounds_audit_thm8(
    ctx: &Ctx,
    family_path: &Path,
    b_path: &Path,
    k: usize,
    epsilon: &Frac,
) -> Result<Outcome> {
    let family = load_family(family_path)?;
    let b: PiecewiseB = read_json(b_path, "piecewise-oracle file")?;
    let fam = family.clone();
    let oracle = move |xs: &KTuple| b.evaluate(&fam, k, xs);
    let rep = ctx.lib(thm8_family_audit(&family, &oracle, k, epsilon, ctx.cap))?;
    let checks = vec![
        Check::asserted(
            "audit-thm8: every member covers an epsilon fraction",
            format!(">= {}", ratio(epsilon)),
            rep.coverage.iter().min().map(ratio).unwrap_or_default(),
            rep.coverage_holds,
        ),
        Check::asserted(
            "audit-thm8: pairwise XOR-form agreement strictly below 1/2 + epsilon^6/2",
            format!("< {}", ratio(&(frac::half() + frac::pow(epsilon, 6) / frac(2, 1)))),
            ratio(&rep.max_xor_agreement),
            rep.condition1_holds,
        ),
        Check::asserted(
            "audit-thm8: greedy union replay adds epsilon/2 per member",
            format!(">= {}", ratio(&(epsilon / frac(2, 1)))),
            rep.greedy_new_fractions
                .iter()
                .min()
                .map(ratio)
                .unwrap_or_default(),
            rep.greedy_holds,
        ),
        Check::asserted(
            "audit-thm8: family size within 2/epsilon",
            format!("t <= {}", ratio(&rep.size_bound)),
            format!("t = {}", rep.t),
            rep.size_bound_holds,
        ),
    ];
    let config = json!({
        "op": "bounds", "variant": "audit-thm8",
        "family": family_path.display().to_string(), "b": b_path.display().to_string(),
        "t": family.len(), "n": family.arity(), "k": k, "epsilon": ratio(epsilon),
    });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

pub fn bounds_construct_thm9(
    ctx: &Ctx,
    n: usize,
    k: usize,
    delta: &Frac,
    t: usize,
    family_out: Option<&PathBuf>,
    b_out: Option<&PathBuf>,
) -> Result<Outcome> {
    let c = ctx.lib(construct_thm9_family(n, k, delta, t, ctx.seed, ctx.cap))?;
    if let Some(path) = family_out {
        let mut text =
            serde_json::to_string_pretty(c.family.members()).expect("family serializes");
        text.push('\n');
        fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    if let Some(path) = b_out {
        let mut text = serde_json::to_string_pretty(&c.b).expect("partition serializes");
        text.push('\n');
        fs::write(path, text)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }
    let rep = &c.report;
    let checks = vec![
        Check::asserted(
            "construct-thm9: every member meets the guaranteed agreement floor",
            format!(">= {}", ratio(&rep.guaranteed_floor)),
            rep.member_agreement.iter().min().map(ratio).unwrap_or_default(),
            rep.property_a_holds,
        ),
        Check::reported(
            "construct-thm9: every member meets the literal 1/t floor",
            format!(">= {}", ratio(&rep.epsilon)),
            rep.member_agreement.iter().min().map(ratio).unwrap_or_default(),
            rep.property_a_literal_holds,
        ),
        Check::asserted(
            "construct-thm9: pairwise XOR-form agreement within 1/2 + (1-delta)^k/2",
            format!("<= {}", ratio(&rep.property_b_cap)),
            ratio(&rep.max_xor_agreement),
            rep.property_b_holds,
        ),
        Check::asserted(
            "construct-thm9: cancellation formula matches exhaustive counts",
            "all pairs".to_string(),
            format!("{}", rep.dual_route_consistent),
            rep.dual_route_consistent,
        ),
        Check::reported(
            "construct-thm9: stated asymptotic advantage threshold",
            "epsilon^12 * 2^k > 1".to_string(),
            format!("{}", rep.stated_threshold_met),
            rep.stated_threshold_met,
        ),
        Check::reported(
            "construct-thm9: stated asymptotic agreement cap",
            "< 1/2 + epsilon^12/2".to_string(),
            format!("{}", rep.stated_agreement_cap_met),
            rep.stated_agreement_cap_met,
        ),
    ];
    let config = json!({
        "op": "bounds", "variant": "construct-thm9",
        "n": n, "k": k, "delta": ratio(delta), "t": t, "seed": ctx.seed,
    });
    let results = json!({
        "family": c.family.members(),
        "b": c.b,
        "report": rep,
    });
    Ok(Outcome::report(config, results, checks))
}

pub fn bounds_search(
    ctx: &Ctx,
    n: usize,
    k: usize,
    trials: u64,
    t_max: usize,
) -> Result<Outcome> {
    let rep = ctx.lib(search_thm11_counterexamples(
        n, k, trials, t_max, ctx.seed, ctx.cap,
    ))?;
    let checks = vec![Check::asserted(
        "search-counterexample: no family beats the folded-band size bound",
        "0 violations".to_string(),
        format!("{} violations", rep.violations.len()),
        rep.violations.is_empty(),
    )];
    let config = json!({
        "op": "bounds", "variant": "search-counterexample",
        "n": n, "k": k, "trials": trials, "t_max": t_max, "seed": ctx.seed,
    });
    Ok(Outcome::report(config, json!({ "report": rep }), checks))
}

// ---------------------------------------------------------------- run / sweep

/// One experiment cell, as read from a JSON config file. Field names
/// mirror the CLI flags; `run` takes each field as a scalar.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub variant: String,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub epsilon: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default)]
    pub list_size: Option<usize>,
    #[serde(default)]
    pub c_const: Option<f64>,
    #[serde(default)]
    pub instances: Option<u64>,
    #[serde(default)]
    pub hosts: Option<u64>,
    #[serde(default)]
    pub delta: Option<String>,
    #[serde(default)]
    pub max_len: Option<usize>,
    #[serde(default)]
    pub max_k: Option<u32>,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub success_floor: Option<f64>,
}

fn field<T>(v: Option<T>, name: &str, variant: &str) -> Result<T> {
    v.ok_or_else(|| CliError::usage(format!("config field `{name}` is required for variant {variant}")))
}

fn parse_model(s: Option<&str>) -> Result<Model> {
    match s.unwrap_or("random-subset") {
        "random-subset" => Ok(Model::RandomSubset),
        "planted-function" => Ok(Model::PlantedFunction),
        other => Err(CliError::usage(format!(
            "config field `model` must be random-subset or planted-function, got {other}"
        ))),
    }
}

fn parse_mode(s: Option<&str>) -> Result<OutputMode> {
    match s.unwrap_or("single") {
        "single" => Ok(OutputMode::Single),
        "best-by-score" => Ok(OutputMode::BestByScore),
        other => Err(CliError::usage(format!(
            "config field `mode` must be single or best-by-score, got {other}"
        ))),
    }
}

pub fn parse_epsilon(s: &str, name: &str) -> Result<Frac> {
    frac::parse(s).map_err(|_| {
        CliError::usage(format!(
            "field `{name}` must be an exact rational like 1/4, got {s}"
        ))
    })
}

/// Dispatches one config cell to its handler.
pub fn run_config(ctx: &Ctx, cfg: &RunConfig) -> Result<Outcome> {
    let v = cfg.variant.as_str();
    let ctx = Ctx {
        seed: cfg.seed.unwrap_or(ctx.seed),
        cap: cfg.cap.map(EnumCap).unwrap_or(ctx.cap),
    };
    let epsilon = || -> Result<Frac> {
        parse_epsilon(&field(cfg.epsilon.clone(), "epsilon", v)?, "epsilon")
    };
    let lemma_spec = |model_default_ok: bool| -> Result<LemmaInstanceSpec> {
        let _ = model_default_ok;
        Ok(LemmaInstanceSpec {
            n: field(cfg.n, "n", v)?,
            k: field(cfg.k, "k", v)?,
            epsilon: epsilon()?,
            model: parse_model(cfg.model.as_deref())?,
            function: None,
        })
    };
    match v {
        "thm1" | "thm3" => {
            let spec = DpReduceSpec {
                variant: if v == "thm1" { DpVariant::Thm1 } else { DpVariant::Thm3 },
                n: field(cfg.n, "n", v)?,
                k: field(cfg.k, "k", v)?,
                epsilon: epsilon()?,
                model: parse_model(cfg.model.as_deref())?,
                mode: parse_mode(cfg.mode.as_deref())?,
                trials: cfg.trials.unwrap_or(200),
                guess_bits: None,
                votes_per_bit: 1,
                success_floor: cfg.success_floor,
                function: None,
            };
            reduce_dp2xor(&ctx, &spec)
        }
        "thm2" => {
            let spec = XorReduceSpec {
                n: field(cfg.n, "n", v)?,
                k: field(cfg.k, "k", v)?,
                epsilon: epsilon()?,
                model: parse_model(cfg.model.as_deref())?,
                list_size: cfg.list_size.unwrap_or(1),
                c_const: cfg.c_const.unwrap_or(1.0),
                delta_target: match cfg.delta.as_deref() {
                    Some(s) => parse_epsilon(s, "delta")?,
                    None => frac(1, 4),
                },
                votes: None,
                function: None,
            };
            reduce_xor2dp(&ctx, &spec)
        }
        "lemma-basic" => verify_lemma_basic(
            &ctx,
            cfg.max_len.unwrap_or(256),
            cfg.max_k.unwrap_or(4),
            cfg.samples.unwrap_or(40),
        ),
        "lemma1" => verify_lemma1(&ctx, &lemma_spec(true)?, cfg.instances.unwrap_or(20)),
        "lemma2" => {
            let plan = cfg.hosts.map(HostPlan::Sample).unwrap_or(HostPlan::Auto);
            verify_lemma2(&ctx, &lemma_spec(true)?, plan)
        }
        "lemma3" => verify_lemma3(&ctx, &lemma_spec(true)?),
        "lemma5" => verify_lemma5(&ctx, &lemma_spec(true)?),
        "lemma7" => {
            let delta = match cfg.delta.as_deref() {
                Some(s) => parse_epsilon(s, "delta")?,
                None => frac::zero(),
            };
            verify_lemma7(&ctx, field(cfg.n, "n", v)?, field(cfg.k, "k", v)?, &delta, None, None)
        }
        "demo-nonuniformity" => demo_nonuniformity(&ctx, cfg.k.unwrap_or(3)),
        other => Err(CliError::usage(format!(
            "config field `variant` names no operation: {other}"
        ))),
    }
}

/// A grid of experiment cells: the scalar fields of [`RunConfig`] with
/// `n`, `k`, and `epsilon` replaced by lists. Rows are emitted in
/// listed order, `n` outermost, `epsilon` innermost.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub variant: String,
    pub n: Vec<usize>,
    pub k: Vec<usize>,
    pub epsilon: Vec<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub trials: Option<u64>,
    #[serde(default)]
    pub cap: Option<u64>,
    #[serde(default)]
    pub list_size: Option<usize>,
    #[serde(default)]
    pub c_const: Option<f64>,
}

struct SweepRow {
    n: usize,
    k: usize,
    epsilon_achieved: String,
    variant: String,
    success: Option<f64>,
    ci95: Option<f64>,
    gamma_mean: Option<String>,
    beta_mean: Option<String>,
    pass_count: usize,
}

impl SweepRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}\n",
            self.n,
            self.k,
            self.epsilon_achieved,
            self.variant,
            self.success.map(float).unwrap_or_default(),
            self.ci95.map(float).unwrap_or_default(),
            self.gamma_mean.clone().unwrap_or_default(),
            self.beta_mean.clone().unwrap_or_default(),
            self.pass_count
        )
    }

    fn json(&self) -> Value {
        json!({
            "n": self.n,
            "k": self.k,
            "epsilon_achieved": self.epsilon_achieved,
            "variant": self.variant,
            "success": self.success,
            "ci95": self.ci95,
            "gamma_mean": self.gamma_mean,
            "beta_mean": self.beta_mean,
            "pass_count": self.pass_count,
        })
    }
}

pub const SWEEP_HEADER: &str = "n,k,epsilon_achieved,variant,success,ci95,gamma_mean,beta_mean,pass_count\n";

fn sweep_cell(
    ctx: &Ctx,
    variant: &str,
    n: usize,
    k: usize,
    epsilon: &Frac,
    model: Model,
    mode: OutputMode,
    trials: u64,
    list_size: usize,
    c_const: f64,
) -> Result<SweepRow> {
    let f = load_function(ctx, n, None)?;
    let mut row = SweepRow {
        n,
        k,
        epsilon_achieved: String::new(),
        variant: variant.to_string(),
        success: None,
        ci95: None,
        gamma_mean: None,
        beta_mean: None,
        pass_count: 0,
    };
    match variant {
        "thm1" | "thm3" => {
            let planted = plant_xor(ctx, &f, k, model, epsilon)?;
            let eps = planted.epsilon_achieved.clone();
            row.epsilon_achieved = ratio(&eps);
            let profile = ctx.lib(gamma_profile(&planted.algorithm, &f, k, ctx.cap))?;
            row.gamma_mean = Some(ratio(profile.mean()));
            if *profile.mean() == eps {
                row.pass_count += 1;
            }
            let beta = if variant == "thm1" {
                ctx.lib(beta_profile_b_k(
                    &planted.algorithm,
                    &f,
                    k,
                    FillerMode::FreshRandom,
                    ctx.cap,
                ))?
            } else {
                ctx.lib(beta_profile_b_2k(
                    &planted.algorithm,
                    &f,
                    k,
                    FillerMode::FreshRandom,
                    ctx.cap,
                ))?
            };
            row.beta_mean = Some(ratio(beta.mean()));
            if *beta.mean() >= &eps * &eps {
                row.pass_count += 1;
            }
            let params = ReduceParams {
                output_mode: mode.into(),
                ..ReduceParams::default()
            };
            let (pipe, out_k) = if variant == "thm1" {
                (ctx.lib(reduce_thm1(&planted.algorithm, n, k, &eps, &params))?, k)
            } else {
                (ctx.lib(reduce_thm3(&planted.algorithm, n, k, &eps, &params))?, 2 * k)
            };
            let est = ctx.lib(mc_success(
                &pipe.algorithm,
                &dp_target(&f, out_k),
                trials,
                ctx.seed,
            ))?;
            row.success = Some(est.point);
            row.ci95 = Some(est.ci95);
        }
        "thm2" => {
            let desc = descriptor(ctx, model, n, epsilon)?;
            let planted = ctx.lib(plant_dp_adversary(&f, k, &desc, ctx.cap))?;
            let eps = planted.epsilon_achieved.clone();
            row.epsilon_achieved = ratio(&eps);
            let params = DecoderParams {
                c_const,
                ..DecoderParams::default()
            };
            let target = xor_target(&f, k);
            if list_size <= 1 {
                let red = ctx.lib(reduce_thm2(
                    &planted.algorithm,
                    &f,
                    k,
                    &eps,
                    &params,
                    ctx.seed,
                ))?;
                let est = ctx.lib(exact_success(&red.algorithm, &target, ctx.cap))?;
                if est.exact_value() == Some(&(frac::half() + &red.report.advantage)) {
                    row.pass_count += 1;
                }
                if red.report.delta_target_met {
                    row.pass_count += 1;
                }
                row.success = Some(est.point);
                row.ci95 = Some(est.ci95);
            } else {
                let (members, lr) = ctx.lib(list_reduce_thm2(
                    &planted.algorithm,
                    &f,
                    k,
                    &eps,
                    &params,
                    list_size,
                    ctx.seed,
                ))?;
                let mut best = 0.0f64;
                let mut identities = 0usize;
                for member in &members {
                    let est = ctx.lib(exact_success(&member.algorithm, &target, ctx.cap))?;
                    if est.exact_value() == Some(&(frac::half() + &member.report.advantage)) {
                        identities += 1;
                    }
                    best = best.max(est.point);
                }
                if identities == members.len() {
                    row.pass_count += 1;
                }
                if lr.any_delta_target_met {
                    row.pass_count += 1;
                }
                row.success = Some(best);
                row.ci95 = Some(0.0);
            }
        }
        "lemma1" => {
            let planted = plant_xor(ctx, &f, k, model, epsilon)?;
            row.epsilon_achieved = ratio(&planted.epsilon_achieved);
            let profile = ctx.lib(gamma_profile(&planted.algorithm, &f, k, ctx.cap))?;
            row.gamma_mean = Some(ratio(profile.mean()));
            if *profile.mean() == planted.epsilon_achieved {
                row.pass_count += 1;
            }
        }
        "lemma3" => {
            let planted = plant_xor(ctx, &f, k, model, epsilon)?;
            let rep = ctx.lib(lemma3_lemma4_exact_check(&planted.algorithm, &f, k, ctx.cap))?;
            row.epsilon_achieved = ratio(&rep.epsilon);
            row.beta_mean = Some(ratio(&rep.beta_mean));
            row.pass_count = rep.levels.iter().filter(|l| l.pass).count()
                + rep.beta_pass as usize
                + rep.decomposition_consistent as usize;
        }
        "lemma5" => {
            let planted = plant_xor(ctx, &f, k, model, epsilon)?;
            let rep = ctx.lib(lemma5_exact_check(&planted.algorithm, &f, k, ctx.cap))?;
            row.epsilon_achieved = ratio(&rep.epsilon);
            row.beta_mean = Some(ratio(&rep.beta_mean));
            row.pass_count = (rep.direct_branch_advantage == rep.epsilon) as usize
                + (rep.pass && rep.asserted) as usize;
        }
        other => {
            return Err(CliError::usage(format!(
                "sweep supports thm1, thm3, thm2, lemma1, lemma3, lemma5; got {other}"
            )))
        }
    }
    Ok(row)
}

pub fn sweep(ctx: &Ctx, cfg: &SweepConfig, as_json: bool) -> Result<Outcome> {
    let ctx = Ctx {
        seed: cfg.seed.unwrap_or(ctx.seed),
        cap: cfg.cap.map(EnumCap).unwrap_or(ctx.cap),
    };
    let model = parse_model(cfg.model.as_deref())?;
    let mode = parse_mode(cfg.mode.as_deref())?;
    let trials = cfg.trials.unwrap_or(200);
    let list_size = cfg.list_size.unwrap_or(1);
    let c_const = cfg.c_const.unwrap_or(1.0);
    let mut rows = Vec::new();
    for &n in &cfg.n {
        for &k in &cfg.k {
            for eps_text in &cfg.epsilon {
                let epsilon = parse_epsilon(eps_text, "epsilon")?;
                rows.push(sweep_cell(
                    &ctx,
                    &cfg.variant,
                    n,
                    k,
                    &epsilon,
                    model,
                    mode,
                    trials,
                    list_size,
                    c_const,
                )?);
            }
        }
    }
    if as_json {
        let config = json!({
            "op": "sweep", "variant": cfg.variant, "n": cfg.n, "k": cfg.k,
            "epsilon": cfg.epsilon, "model": model.name(), "mode": mode.name(),
            "trials": trials, "seed": ctx.seed,
        });
        let results = json!({ "rows": rows.iter().map(SweepRow::json).collect::<Vec<_>>() });
        Ok(Outcome::report(config, results, Vec::new()))
    } else {
        let mut text = String::from(SWEEP_HEADER);
        for row in &rows {
            text.push_str(&row.csv());
        }
        Ok(Outcome::raw(text))
    }
}
