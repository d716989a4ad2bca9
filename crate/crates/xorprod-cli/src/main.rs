//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 when an asserted check fails, 2 on
//! usage or input errors. Reports go to stdout (or `--out`) as a JSON
//! envelope; `--format csv` flattens the check table instead. With a
//! fixed `--seed` the config and results sections are byte-identical
//! across runs and thread counts; wall time lives only under `meta`.

mod commands;
mod report;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use xorprod::dp2xor::GlOutputMode;
use xorprod::frac::{self, Frac};
use xorprod::EnumCap;

use commands::{
    DpReduceSpec, DpVariant, HostPlan, LemmaInstanceSpec, PlantTarget, RunConfig, SweepConfig,
    XorReduceSpec,
};
use report::Outcome;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, malformed files, impossible parameters: exit 2.
    Usage(String),
    /// The library refused the operation: also exit 2.
    Lib(xorprod::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Seed and enumeration budget shared by every handler.
#[derive(Debug, Clone, Copy)]
pub struct Ctx {
    pub seed: u64,
    pub cap: EnumCap,
}

impl Ctx {
    pub fn lib<T>(&self, r: xorprod::Result<T>) -> Result<T> {
        r.map_err(CliError::Lib)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    RandomSubset,
    PlantedFunction,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::RandomSubset => "random-subset",
            Model::PlantedFunction => "planted-function",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputMode {
    Single,
    BestByScore,
}

impl OutputMode {
    pub fn name(self) -> &'static str {
        match self {
            OutputMode::Single => "single",
            OutputMode::BestByScore => "best-by-score",
        }
    }
}

impl From<OutputMode> for GlOutputMode {
    fn from(m: OutputMode) -> Self {
        match m {
            OutputMode::Single => GlOutputMode::Single,
            OutputMode::BestByScore => GlOutputMode::BestByScore,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Exact rationals only: probabilities cross the CLI as `p/q` or a
/// bare integer, never as decimals.
fn rational(s: &str) -> std::result::Result<Frac, String> {
    frac::parse(s).map_err(|_| format!("expected an exact rational like 1/4, got `{s}`"))
}

fn host_plan(s: &str) -> std::result::Result<HostPlan, String> {
    if s == "all" {
        return Ok(HostPlan::All);
    }
    s.parse::<u64>()
        .map(HostPlan::Sample)
        .map_err(|_| format!("expected `all` or a sample count, got `{s}`"))
}

#[derive(Parser)]
#[command(
    name = "xorprod",
    version,
    about = "Exact experiments on k-wise XOR and direct-product hardness amplification"
)]
struct Cli {
    /// Master seed; every pseudorandom choice derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Enumeration budget for exact computations (states walked).
    #[arg(long, global = true)]
    cap: Option<u64>,

    /// Write the output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format; json unless a subcommand is CSV-native (sweep).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Worker threads for the parallel enumerators.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

/// Shared instance flags for the planted-adversary verifiers.
#[derive(Args)]
struct InstanceArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Adversary advantage target, an exact rational.
    #[arg(long, value_parser = rational)]
    epsilon: Frac,
    #[arg(long, value_enum, default_value = "random-subset")]
    model: Model,
    /// Truth-table file to use instead of a seeded random function.
    #[arg(long)]
    function: Option<PathBuf>,
}

impl InstanceArgs {
    fn spec(&self) -> LemmaInstanceSpec {
        LemmaInstanceSpec {
            n: self.n,
            k: self.k,
            epsilon: self.epsilon.clone(),
            model: self.model,
            function: self.function.clone(),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Emit a seeded random truth table in the shared file format.
    GenFunction {
        #[arg(long)]
        n: usize,
    },
    /// Build a planted adversary and dump its full answer table.
    Plant {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Which combined function the adversary attacks.
        #[arg(long, value_enum, default_value = "xor")]
        target: Target,
    },
    /// Turn an adversary for one combined form into one for the other.
    Reduce {
        #[command(subcommand)]
        direction: ReduceCommand,
    },
    /// List-decode a noisy parity oracle from its agreement advantage.
    GlDecode {
        #[arg(long)]
        n: usize,
        /// Oracle advantage over 1/2, an exact rational in (0, 1/2].
        #[arg(long, value_parser = rational)]
        gamma: Frac,
        /// Reference-mask count l; 2^l sign guesses are tried.
        #[arg(long)]
        guess_bits: Option<usize>,
    },
    /// Check one exact statement on a planted instance.
    Verify {
        #[command(subcommand)]
        which: VerifyCommand,
    },
    /// Family-size bounds: audits, construction, counterexample search.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
    /// Advice-bit separation: matched advice wins, averaging collapses.
    DemoNonuniformity {
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Run a parameter grid from a JSON config; one CSV row per cell.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run one experiment cell from a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Xor,
    Dp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DpVariantArg {
    /// Same-width pipeline: k-wise XOR advantage to a k-tuple predictor.
    Thm1,
    /// Wide pipeline: k-wise XOR advantage to a 2k-tuple predictor.
    Thm3,
}

#[derive(Subcommand)]
enum ReduceCommand {
    /// XOR-form adversary in, direct-product predictor out.
    Dp2xor {
        #[arg(long, value_enum)]
        variant: DpVariantArg,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Candidate selection: first list entry or highest-scoring.
        #[arg(long, value_enum, default_value = "single")]
        mode: OutputMode,
        /// Monte Carlo trials for the success estimate.
        #[arg(long, default_value_t = 200)]
        trials: u64,
        #[arg(long)]
        guess_bits: Option<usize>,
        #[arg(long, default_value_t = 1)]
        votes_per_bit: u64,
        /// Assert the measured success meets this floor.
        #[arg(long)]
        success_floor: Option<f64>,
    },
    /// Direct-product adversary in, XOR-form predictor out.
    Xor2dp {
        #[command(flatten)]
        instance: InstanceArgs,
        /// Advice candidates; above 1 runs the list reduction.
        #[arg(long, default_value_t = 1)]
        list_size: usize,
        /// Scale factor on the derived voting budget.
        #[arg(long, default_value_t = 1.0)]
        c_const: f64,
        /// Disagreement level the decoded function should reach.
        #[arg(long, value_parser = rational, default_value = "1/4")]
        delta_target: Frac,
        /// Fixed voting rounds per query; overrides the derived count.
        #[arg(long)]
        votes: Option<u64>,
    },
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// Closed-form XOR-zero rate vs a literal draw count on strings.
    LemmaBasic {
        #[arg(long, default_value_t = 256)]
        max_len: usize,
        #[arg(long, default_value_t = 4)]
        max_k: u32,
        /// Seeded random strings checked on top of the edge cases.
        #[arg(long, default_value_t = 40)]
        samples: usize,
    },
    /// Restriction-advantage mean equals the oracle advantage.
    Lemma1 {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long, default_value_t = 20)]
        instances: u64,
    },
    /// Per-host pairing advantage clears 1/2 + 2*gamma^2.
    Lemma2 {
        #[command(flatten)]
        instance: InstanceArgs,
        /// `all`, or a sample count; default picks by host-space size.
        #[arg(long, value_parser = host_plan)]
        hosts: Option<HostPlan>,
    },
    /// Even-size restriction advantages and their mean floor.
    Lemma3 {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Wide-mask branch decomposition and the weight-k identity.
    Lemma5 {
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Tuple-agreement product identity for a pair of functions.
    Lemma7 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Distance floor the pair must sit above.
        #[arg(long, value_parser = rational, default_value = "0")]
        delta: Frac,
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum BoundsCommand {
    /// Distinctness conditions and size caps for a correlated family.
    AuditThm6 {
        /// JSON array of truth-table objects.
        #[arg(long)]
        family: PathBuf,
        /// Truth-table file of arity n*k: the distinguisher.
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = rational)]
        epsilon: Frac,
        /// Pairwise distance floor; enables the banded size bound.
        #[arg(long, value_parser = rational)]
        delta: Option<Frac>,
    },
    /// Coverage and greedy-packing audit for a piecewise oracle.
    AuditThm8 {
        /// JSON array of truth-table objects.
        #[arg(long)]
        family: PathBuf,
        /// Piecewise-oracle file: {"t", "boundaries", "assignment"}.
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = rational)]
        epsilon: Frac,
    },
    /// Build a t-member family tracked by one oracle, then self-check.
    ConstructThm9 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        /// Pairwise distance floor for the family.
        #[arg(long, value_parser = rational)]
        delta: Frac,
        #[arg(long)]
        t: usize,
        /// Also write the family as a JSON array of truth tables.
        #[arg(long)]
        family_out: Option<PathBuf>,
        /// Also write the piecewise oracle for a later audit.
        #[arg(long)]
        b_out: Option<PathBuf>,
    },
    /// Random families vs the folded-band size bound.
    SearchCounterexample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Largest family size tried per trial.
        #[arg(long, default_value_t = 6)]
        t_max: usize,
    },
}

fn dispatch(ctx: &Ctx, command: &Command, format: Option<Format>) -> Result<Outcome> {
    match command {
        Command::GenFunction { n } => commands::gen_function(ctx, *n),
        Command::Plant { instance, target } => commands::plant(
            ctx,
            instance.n,
            instance.k,
            &instance.epsilon,
            instance.model,
            match target {
                Target::Xor => PlantTarget::Xor,
                Target::Dp => PlantTarget::Dp,
            },
            instance.function.as_ref(),
        ),
        Command::Reduce { direction } => match direction {
            ReduceCommand::Dp2xor {
                variant,
                instance,
                mode,
                trials,
                guess_bits,
                votes_per_bit,
                success_floor,
            } => commands::reduce_dp2xor(
                ctx,
                &DpReduceSpec {
                    variant: match variant {
                        DpVariantArg::Thm1 => DpVariant::Thm1,
                        DpVariantArg::Thm3 => DpVariant::Thm3,
                    },
                    n: instance.n,
                    k: instance.k,
                    epsilon: instance.epsilon.clone(),
                    model: instance.model,
                    mode: *mode,
                    trials: *trials,
                    guess_bits: *guess_bits,
                    votes_per_bit: *votes_per_bit,
                    success_floor: *success_floor,
                    function: instance.function.clone(),
                },
            ),
            ReduceCommand::Xor2dp {
                instance,
                list_size,
                c_const,
                delta_target,
                votes,
            } => commands::reduce_xor2dp(
                ctx,
                &XorReduceSpec {
                    n: instance.n,
                    k: instance.k,
                    epsilon: instance.epsilon.clone(),
                    model: instance.model,
                    list_size: *list_size,
                    c_const: *c_const,
                    delta_target: delta_target.clone(),
                    votes: *votes,
                    function: instance.function.clone(),
                },
            ),
        },
        Command::GlDecode {
            n,
            gamma,
            guess_bits,
        } => commands::gl_decode(ctx, *n, gamma, *guess_bits),
        Command::Verify { which } => match which {
            VerifyCommand::LemmaBasic {
                max_len,
                max_k,
                samples,
            } => commands::verify_lemma_basic(ctx, *max_len, *max_k, *samples),
            VerifyCommand::Lemma1 {
                instance,
                instances,
            } => commands::verify_lemma1(ctx, &instance.spec(), *instances),
            VerifyCommand::Lemma2 { instance, hosts } => {
                commands::verify_lemma2(ctx, &instance.spec(), hosts.unwrap_or(HostPlan::Auto))
            }
            VerifyCommand::Lemma3 { instance } => commands::verify_lemma3(ctx, &instance.spec()),
            VerifyCommand::Lemma5 { instance } => commands::verify_lemma5(ctx, &instance.spec()),
            VerifyCommand::Lemma7 { n, k, delta, f, g } => {
                commands::verify_lemma7(ctx, *n, *k, delta, f.as_ref(), g.as_ref())
            }
        },
        Command::Bounds { which } => match which {
            BoundsCommand::AuditThm6 {
                family,
                b,
                k,
                epsilon,
                delta,
            } => commands::bounds_audit_thm6(ctx, family, b, *k, epsilon, delta.as_ref()),
            BoundsCommand::AuditThm8 {
                family,
                b,
                k,
                epsilon,
            } => commands::bounds_audit_thm8(ctx, family, b, *k, epsilon),
            BoundsCommand::ConstructThm9 {
                n,
                k,
                delta,
                t,
                family_out,
                b_out,
            } => commands::bounds_construct_thm9(
                ctx,
                *n,
                *k,
                delta,
                *t,
                family_out.as_ref(),
                b_out.as_ref(),
            ),
            BoundsCommand::SearchCounterexample {
                n,
                k,
                trials,
                t_max,
            } => commands::bounds_search(ctx, *n, *k, *trials, *t_max),
        },
        Command::DemoNonuniformity { k } => commands::demo_nonuniformity(ctx, *k),
        Command::Sweep { config } => {
            let cfg: SweepConfig = read_config(config)?;
            commands::sweep(ctx, &cfg, matches!(format, Some(Format::Json)))
        }
        Command::Run { config } => {
            let cfg: RunConfig = read_config(config)?;
            commands::run_config(ctx, &cfg)
        }
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid config {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = Ctx {
        seed: cli.seed,
        cap: cli.cap.map(EnumCap).unwrap_or_default(),
    };
    let threads = cli.threads.max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot build a {threads}-thread pool: {e}");
            return ExitCode::from(2);
        }
    };
    let started = std::time::Instant::now();
    let outcome = pool.install(|| dispatch(&ctx, &cli.command, cli.format));
    let wall_ms = started.elapsed().as_millis();
    match outcome {
        Ok(out) => {
            let csv = matches!(cli.format, Some(Format::Csv));
            let text = report::render(&out.payload, csv, wall_ms);
            if let Some(path) = &cli.out {
                if let Err(e) = std::fs::write(path, &text) {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            } else {
                print!("{text}");
            }
            if out.failed > 0 {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
