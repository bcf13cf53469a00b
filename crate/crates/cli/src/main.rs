//! `mbuniq`: discrete Markov-boundary discovery, uniqueness testing,
//! influence measures, benchmark generators, perturbation sweeps, and a
//! Monte Carlo comparison harness.
//!
//! Exit codes: 0 on success (including "multiple" verdicts and undefined
//! measures — those are answers, not failures), 2 on usage errors, 1 on
//! runtime errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};

use mbuniq_core::citest::{CiDecider, TestKind};
use mbuniq_core::data::Dataset;
use mbuniq_core::datagen::{build_exact, sample_setting, SettingId};
use mbuniq_core::dist::{total_variation, Assignment, DiscreteDistribution};
use mbuniq_core::mb::{
    essential_set_uniqueness, essentiality_probe_uniqueness, leave_one_out_uniqueness,
    BoundaryFinder, MbResult, MultiplicityEvidence, TraceAction, UniquenessVerdict,
};
use mbuniq_core::measures::{causal_strength, cmi_exact, mi_exact, pmi, MeasureValue};
use mbuniq_core::oracle::{enumerate_markov_boundaries, essential_variables, exact_uniqueness};
use mbuniq_core::perturb::{
    degenerate_conditioning_events, epsilon_noise, singularity_family, NoiseSpec,
};
use mbuniq_core::sim::{
    run_monte_carlo, save_rates_csv, save_report, AlgorithmId, ExperimentConfig,
    DEFAULT_KIAMB_K, DEFAULT_SAMPLE_SIZES,
};
use mbuniq_core::{Error, Result, VarSet, DEFAULT_CI_TOL};

#[derive(Parser)]
#[command(
    name = "mbuniq",
    version,
    about = "Markov-boundary discovery and uniqueness testing for discrete distributions",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute MI, CMI, CS, or PMI on a distribution or dataset.
    Measure(MeasureArgs),
    /// Discover one Markov boundary of a target.
    Discover(DiscoverArgs),
    /// Decide whether the target's Markov boundary is unique.
    Uniqueness(UniquenessArgs),
    /// Enumerate all Markov boundaries of a small distribution exactly.
    Oracle(OracleArgs),
    /// Emit a benchmark law, a sampled dataset, or its ground truth.
    Generate(GenerateArgs),
    /// Run the Monte Carlo comparison of uniqueness procedures.
    Simulate(SimulateArgs),
    /// Perturb a distribution and trace how the measures respond.
    Perturb(PerturbArgs),
}

/// Where the joint law or data comes from. Exactly one of the two.
#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["dist", "data"])))]
struct SourceArgs {
    /// Distribution JSON file (exact mode).
    #[arg(long, value_name = "FILE")]
    dist: Option<PathBuf>,
    /// Dataset CSV file (data mode).
    #[arg(long, value_name = "FILE")]
    data: Option<PathBuf>,
    /// Variable schema JSON for --data; cardinalities are inferred from
    /// the data when omitted.
    #[arg(long, value_name = "FILE", requires = "data")]
    schema: Option<PathBuf>,
}

impl SourceArgs {
    fn law(&self) -> Result<DiscreteDistribution> {
        match (&self.dist, &self.data) {
            (Some(path), _) => DiscreteDistribution::load(path),
            (None, Some(path)) => self.dataset_from(path)?.empirical_distribution(),
            (None, None) => unreachable!("clap enforces the source group"),
        }
    }

    fn dataset_from(&self, path: &Path) -> Result<Dataset> {
        let schema = match &self.schema {
            Some(p) => Some(Dataset::read_schema(p)?),
            None => None,
        };
        Dataset::read_csv(path, schema)
    }

    fn dataset(&self) -> Result<Option<Dataset>> {
        match &self.data {
            Some(path) => Ok(Some(self.dataset_from(path)?)),
            None => Ok(None),
        }
    }
}

/// Independence-test configuration for data mode.
#[derive(Args)]
struct TestArgs {
    /// Significance level for data-mode independence tests.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Independence test used in data mode.
    #[arg(long, value_enum, default_value_t = EngineArg::G2)]
    engine: EngineArg,
    /// Rounds for the permutation test (at least 99).
    #[arg(long, default_value_t = 199)]
    perm_rounds: usize,
    /// Skip a G² test (treat it as "independent") unless the sample holds
    /// at least this many rows per nominal contingency cell; 0 disables
    /// the guard.
    #[arg(long, default_value_t = mbuniq_core::citest::DEFAULT_MIN_ROWS_PER_CELL)]
    min_rows_per_cell: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum EngineArg {
    G2,
    Permutation,
}

impl TestArgs {
    fn kind(&self) -> TestKind {
        match self.engine {
            EngineArg::G2 => TestKind::G2 {
                min_rows_per_cell: if self.min_rows_per_cell > 0.0 {
                    Some(self.min_rows_per_cell)
                } else {
                    None
                },
            },
            EngineArg::Permutation => TestKind::Permutation { rounds: self.perm_rounds },
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Mi,
    Cmi,
    Cs,
    Pmi,
}

#[derive(Args)]
struct MeasureArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Which measure to compute.
    #[arg(long, value_enum)]
    measure: MeasureArg,
    /// Left block (comma-separated; CS and PMI take a single variable).
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<String>,
    /// Right block (comma-separated; CS and PMI take a single variable).
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<String>,
    /// Conditioning block (comma-separated).
    #[arg(long, value_delimiter = ',')]
    cond: Vec<String>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FinderArg {
    /// Backward elimination from the full scope.
    Backward,
    /// Randomized grow-shrink with a retention fraction.
    Kiamb,
}

#[derive(Args)]
struct DiscoverArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Target variable.
    #[arg(long)]
    target: String,
    /// Candidate scope (comma-separated; defaults to every other variable).
    #[arg(long, value_delimiter = ',')]
    scope: Vec<String>,
    /// Discovery algorithm.
    #[arg(long, value_enum, default_value_t = FinderArg::Backward)]
    finder: FinderArg,
    /// Retention fraction for the randomized finder (in [0, 1]).
    #[arg(long, default_value_t = DEFAULT_KIAMB_K)]
    k: f64,
    #[command(flatten)]
    test: TestArgs,
    /// Master seed (MBUNIQ_SEED overrides it).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the per-step audit trace.
    #[arg(long)]
    trace: bool,
    /// Print the full result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct UniquenessArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Target variable.
    #[arg(long)]
    target: String,
    /// Candidate scope (comma-separated; defaults to every other variable).
    #[arg(long, value_delimiter = ',')]
    scope: Vec<String>,
    /// Uniqueness procedure.
    #[arg(long, value_parser = parse_algorithm)]
    algorithm: AlgorithmId,
    /// Retention fraction for the randomized finder (alg2-ki only).
    #[arg(long, default_value_t = DEFAULT_KIAMB_K)]
    k: f64,
    #[command(flatten)]
    test: TestArgs,
    /// Master seed (MBUNIQ_SEED overrides it).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Print the full verdict as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Distribution JSON file.
    #[arg(long, value_name = "FILE")]
    dist: PathBuf,
    /// Target variable.
    #[arg(long)]
    target: String,
    /// Candidate scope (comma-separated; defaults to every other variable).
    #[arg(long, value_delimiter = ',')]
    scope: Vec<String>,
    /// Tolerance for exact conditional-independence checks.
    #[arg(long, default_value_t = DEFAULT_CI_TOL)]
    tol: f64,
    /// Print the full answer as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
#[command(group(ArgGroup::new("emit").required(true).multiple(true).args(["out", "law", "truth"])))]
struct GenerateArgs {
    /// Benchmark setting: s1, s2, s3, s4, fig1, or triangle.
    #[arg(long, value_parser = parse_setting)]
    setting: SettingId,
    /// Number of rows to sample for --out.
    #[arg(long)]
    n: Option<usize>,
    /// Master seed for sampling (MBUNIQ_SEED overrides it).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a sampled dataset CSV here (requires --n).
    #[arg(long, value_name = "FILE", requires = "n")]
    out: Option<PathBuf>,
    /// Write the variable schema JSON for --out here.
    #[arg(long, value_name = "FILE", requires = "out")]
    schema_out: Option<PathBuf>,
    /// Write the exact law as distribution JSON here.
    #[arg(long, value_name = "FILE")]
    law: Option<PathBuf>,
    /// Print the setting's ground truth as JSON.
    #[arg(long)]
    truth: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Settings to sweep (comma-separated; default s1,s2,s3,s4).
    #[arg(long, value_delimiter = ',', value_parser = parse_setting)]
    settings: Option<Vec<SettingId>>,
    /// Sample sizes to sweep (comma-separated; default 200,500,1000,2000,5000).
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    /// Repetitions per grid cell.
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Procedures to compare (comma-separated; default all four).
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm)]
    algorithms: Option<Vec<AlgorithmId>>,
    /// Retention fraction for the randomized finder (alg2-ki).
    #[arg(long, default_value_t = DEFAULT_KIAMB_K)]
    k: f64,
    #[command(flatten)]
    test: TestArgs,
    /// Master seed (MBUNIQ_SEED overrides it).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full JSON report here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the plot-ready rate table (setting,n,algorithm,rate) here.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Cap on worker threads (default: one per available core).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct PerturbArgs {
    #[command(subcommand)]
    mode: PerturbMode,
}

#[derive(Subcommand)]
enum PerturbMode {
    /// Mix a variable with uniform noise and trace the measures over ε.
    Noise(NoiseArgs),
    /// Fill degenerate events at strength η and trace CS/PMI toward the
    /// singular limit.
    Singular(SingularArgs),
}

#[derive(Args)]
struct NoiseArgs {
    /// Distribution JSON file.
    #[arg(long, value_name = "FILE")]
    dist: PathBuf,
    /// Variable to pass through the noise channel (defaults to --x).
    #[arg(long)]
    var: Option<String>,
    /// Noise levels to sweep (comma-separated, each in (0, 1]).
    #[arg(long, value_delimiter = ',', required = true)]
    epsilons: Vec<f64>,
    /// Source variable of the measured pair.
    #[arg(long)]
    x: String,
    /// Target variable of the measured pair.
    #[arg(long)]
    y: String,
    /// Conditioning block (comma-separated).
    #[arg(long, value_delimiter = ',')]
    cond: Vec<String>,
    /// Write the sweep as CSV here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the perturbed law for the single given ε here.
    #[arg(long, value_name = "FILE")]
    save: Option<PathBuf>,
}

#[derive(Args)]
struct SingularArgs {
    /// Distribution JSON file.
    #[arg(long, value_name = "FILE")]
    dist: PathBuf,
    /// Source variable of the measured pair.
    #[arg(long)]
    x: String,
    /// Target variable of the measured pair.
    #[arg(long)]
    y: String,
    /// Conditioning block (comma-separated).
    #[arg(long, value_delimiter = ',')]
    cond: Vec<String>,
    /// Strengths to sweep (comma-separated, each in (0, 1)).
    #[arg(long, value_delimiter = ',', required = true)]
    etas: Vec<f64>,
    /// Weights over the target's states for the filled events
    /// (comma-separated, summing to 1).
    #[arg(long, value_delimiter = ',', required = true)]
    alpha_weights: Vec<f64>,
    /// Write the sweep as CSV here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the perturbed law for the single given η here.
    #[arg(long, value_name = "FILE")]
    save: Option<PathBuf>,
}

fn parse_algorithm(s: &str) -> std::result::Result<AlgorithmId, String> {
    AlgorithmId::parse(s).map_err(|e| e.to_string())
}

fn parse_setting(s: &str) -> std::result::Result<SettingId, String> {
    SettingId::parse(s).map_err(|e| e.to_string())
}

/// MBUNIQ_SEED overrides whatever the flag says.
fn master_seed(flag: u64) -> Result<u64> {
    match std::env::var("MBUNIQ_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map_err(|_| {
            Error::InvalidConfig(format!(
                "MBUNIQ_SEED must be an unsigned integer, got `{raw}`"
            ))
        }),
        Err(_) => Ok(flag),
    }
}

fn fmt_vars(vars: &[String]) -> String {
    if vars.is_empty() {
        "(empty)".to_string()
    } else {
        vars.join(" ")
    }
}

fn fmt_set(set: &VarSet) -> String {
    fmt_vars(&set.iter().cloned().collect::<Vec<_>>())
}

fn fmt_event(event: &Assignment) -> String {
    event
        .iter()
        .map(|(var, state)| format!("{var}={state}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn default_scope(ids: &[String], target: &str) -> Vec<String> {
    ids.iter().filter(|v| v.as_str() != target).cloned().collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Measure(args) => run_measure(args),
        Command::Discover(args) => run_discover(args),
        Command::Uniqueness(args) => run_uniqueness(args),
        Command::Oracle(args) => run_oracle(args),
        Command::Generate(args) => run_generate(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Perturb(args) => match args.mode {
            PerturbMode::Noise(a) => run_perturb_noise(a),
            PerturbMode::Singular(a) => run_perturb_singular(a),
        },
    }
}

fn single<'a>(block: &'a [String], flag: &str) -> Result<&'a str> {
    match block {
        [only] => Ok(only.as_str()),
        _ => Err(Error::InvalidConfig(format!(
            "--{flag} must name exactly one variable for this measure"
        ))),
    }
}

fn run_measure(args: MeasureArgs) -> Result<()> {
    let law = args.source.law()?;
    let cond_part = if args.cond.is_empty() {
        String::new()
    } else {
        format!(" | {}", args.cond.join(","))
    };
    match args.measure {
        MeasureArg::Mi => {
            if !args.cond.is_empty() {
                return Err(Error::InvalidConfig(
                    "mi takes no conditioning block; use cmi".into(),
                ));
            }
            let v = mi_exact(&law, &args.x, &args.y)?;
            println!("mi({} ; {}) = {:.9}", args.x.join(","), args.y.join(","), v);
        }
        MeasureArg::Cmi => {
            let v = cmi_exact(&law, &args.x, &args.y, &args.cond)?;
            println!(
                "cmi({} ; {}{}) = {:.9}",
                args.x.join(","),
                args.y.join(","),
                cond_part,
                v
            );
        }
        MeasureArg::Cs => {
            let x = single(&args.x, "x")?;
            let y = single(&args.y, "y")?;
            let label = format!("cs({x} -> {y}{cond_part})");
            print_measure_value(&label, &causal_strength(&law, x, y, &args.cond)?);
        }
        MeasureArg::Pmi => {
            let x = single(&args.x, "x")?;
            let y = single(&args.y, "y")?;
            let label = format!("pmi({x} ; {y}{cond_part})");
            print_measure_value(&label, &pmi(&law, x, y, &args.cond)?);
        }
    }
    Ok(())
}

fn print_measure_value(label: &str, value: &MeasureValue) {
    match value {
        MeasureValue::Finite(v) => println!("{label} = {v:.9}"),
        MeasureValue::Undefined { conditioning_event } => {
            println!("{label} is undefined");
            println!("witness event: {}", fmt_event(conditioning_event));
        }
    }
}

/// Builds the decider for a source: exact on a law, statistical on data.
/// The dataset must outlive the decider, so the caller keeps both.
enum Decision {
    Exact(DiscreteDistribution),
    Data(Dataset),
}

impl Decision {
    fn from_source(source: &SourceArgs) -> Result<Decision> {
        Ok(match source.dataset()? {
            Some(ds) => Decision::Data(ds),
            None => Decision::Exact(source.law()?),
        })
    }

    fn decider(&self, test: &TestArgs, seed: u64) -> CiDecider<'_> {
        match self {
            Decision::Exact(law) => CiDecider::exact(law),
            Decision::Data(ds) => CiDecider::Test {
                data: ds,
                kind: test.kind(),
                alpha: test.alpha,
                seed,
            },
        }
    }

    fn variable_ids(&self) -> Vec<String> {
        match self {
            Decision::Exact(law) => law.variable_ids(),
            Decision::Data(ds) => ds.variable_ids(),
        }
    }
}

fn run_discover(args: DiscoverArgs) -> Result<()> {
    let seed = master_seed(args.seed)?;
    let source = Decision::from_source(&args.source)?;
    let ci = source.decider(&args.test, seed);
    let scope = if args.scope.is_empty() {
        default_scope(&source.variable_ids(), &args.target)
    } else {
        args.scope.clone()
    };
    let finder = match args.finder {
        FinderArg::Backward => BoundaryFinder::BackwardElimination,
        FinderArg::Kiamb => BoundaryFinder::Kiamb { k: args.k },
    };
    let result: MbResult = finder.run(&ci, &scope, &args.target, seed)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&result)?);
        return Ok(());
    }
    println!("boundary: {}", fmt_set(&result.boundary));
    if args.trace {
        println!("trace:");
        for step in &result.trace {
            let action = match step.action {
                TraceAction::Added => "added",
                TraceAction::Removed => "removed",
                TraceAction::Kept => "kept",
            };
            match step.delta {
                Some(delta) => println!("  {action} {} (delta {delta:.9})", step.variable),
                None => println!("  {action} {}", step.variable),
            }
        }
    }
    Ok(())
}

fn run_uniqueness(args: UniquenessArgs) -> Result<()> {
    let seed = master_seed(args.seed)?;
    let source = Decision::from_source(&args.source)?;
    let ci = source.decider(&args.test, seed);
    let scope = if args.scope.is_empty() {
        default_scope(&source.variable_ids(), &args.target)
    } else {
        args.scope.clone()
    };
    let verdict: UniquenessVerdict = match args.algorithm {
        AlgorithmId::Alg2Af => leave_one_out_uniqueness(
            &ci,
            &scope,
            &args.target,
            &BoundaryFinder::BackwardElimination,
            seed,
        )?,
        AlgorithmId::Alg2Ki => leave_one_out_uniqueness(
            &ci,
            &scope,
            &args.target,
            &BoundaryFinder::Kiamb { k: args.k },
            seed,
        )?,
        AlgorithmId::Alg3 => essentiality_probe_uniqueness(
            &ci,
            &scope,
            &args.target,
            &BoundaryFinder::BackwardElimination,
            seed,
        )?,
        AlgorithmId::Alg4 => essential_set_uniqueness(&ci, &scope, &args.target)?,
    };
    if args.json {
        println!("{}", serde_json::to_string_pretty(&verdict)?);
        return Ok(());
    }
    println!("verdict: {}", if verdict.unique { "unique" } else { "multiple" });
    println!("m0: {}", fmt_set(&verdict.m0));
    if let Some(evidence) = &verdict.evidence {
        match evidence {
            MultiplicityEvidence::AlternativeBoundary { variable, alternative } => {
                println!(
                    "evidence: leaving {variable} out yields the alternative boundary {}",
                    fmt_set(alternative)
                );
            }
            MultiplicityEvidence::InessentialMember { variable } => {
                println!(
                    "evidence: {variable} is inessential — the rest of the scope \
                     already screens the target"
                );
            }
            MultiplicityEvidence::EssentialSetNotBlanket { essential } => {
                println!(
                    "evidence: the essential set {{{}}} does not screen the rest \
                     of the scope off the target",
                    fmt_set(essential)
                );
            }
        }
    }
    Ok(())
}

fn run_oracle(args: OracleArgs) -> Result<()> {
    let law = DiscreteDistribution::load(&args.dist)?;
    let scope = if args.scope.is_empty() {
        default_scope(&law.variable_ids(), &args.target)
    } else {
        args.scope.clone()
    };
    let boundaries = enumerate_markov_boundaries(&law, &args.target, &scope, args.tol)?;
    let essential = essential_variables(&law, &args.target, &scope, args.tol)?;
    let verdict = exact_uniqueness(&law, &args.target, &scope, args.tol)?;
    if args.json {
        let value = serde_json::json!({
            "target": boundaries.target,
            "scope": boundaries.scope,
            "boundaries": boundaries.boundaries,
            "essential": essential,
            "unique": verdict.is_unique(),
        });
        println!("{}", serde_json::to_string_pretty(&value)?);
        return Ok(());
    }
    println!("boundaries ({}):", boundaries.boundaries.len());
    for b in &boundaries.boundaries {
        println!("  {}", fmt_set(b));
    }
    println!("essential: {}", fmt_set(&essential));
    println!(
        "verdict: {}",
        if verdict.is_unique() { "unique" } else { "multiple" }
    );
    Ok(())
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    let seed = master_seed(args.seed)?;
    let (law, truth) = build_exact(args.setting);
    if let Some(path) = &args.law {
        law.save(path)?;
        eprintln!("wrote exact law to {}", path.display());
    }
    if let Some(path) = &args.out {
        let n = args.n.expect("clap: --out requires --n");
        let ds = sample_setting(args.setting, n, seed)?;
        ds.write_csv(path)?;
        eprintln!("wrote {} rows to {}", n, path.display());
        if let Some(schema_path) = &args.schema_out {
            ds.write_schema(schema_path)?;
            eprintln!("wrote schema to {}", schema_path.display());
        }
    }
    if args.truth {
        println!("{}", serde_json::to_string_pretty(&truth)?);
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let cfg = ExperimentConfig {
        settings: args.settings.unwrap_or_else(|| SettingId::BENCHMARKS.to_vec()),
        sample_sizes: args.ns.unwrap_or_else(|| DEFAULT_SAMPLE_SIZES.to_vec()),
        reps: args.reps,
        algorithms: args.algorithms.unwrap_or_else(|| AlgorithmId::ALL.to_vec()),
        alpha: args.test.alpha,
        kiamb_k: args.k,
        test: args.test.kind(),
        seed: master_seed(args.seed)?,
    };
    let started = Instant::now();
    let report = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot build thread pool: {e}")))?
            .install(|| run_monte_carlo(&cfg)),
        None => run_monte_carlo(&cfg),
    }?;
    eprintln!(
        "{} trials finished in {:.1?}",
        report.rows.iter().map(|r| r.reps).sum::<usize>(),
        started.elapsed()
    );
    println!("{:<10} {:>6} {:<8} {:>8}", "setting", "n", "algorithm", "rate");
    for row in &report.rows {
        println!(
            "{:<10} {:>6} {:<8} {:>8.4}",
            row.setting, row.n, row.algorithm, row.rate
        );
    }
    if let Some(path) = &args.out {
        save_report(&report, path)?;
        eprintln!("wrote report to {}", path.display());
    }
    if let Some(path) = &args.csv {
        save_rates_csv(&report, path)?;
        eprintln!("wrote rate table to {}", path.display());
    }
    Ok(())
}

fn measure_columns(
    law: &DiscreteDistribution,
    x: &str,
    y: &str,
    cond: &[String],
) -> Result<(f64, String, String)> {
    let cmi = cmi_exact(law, &[x], &[y], cond)?;
    let cs = match causal_strength(law, x, y, cond)? {
        MeasureValue::Finite(v) => format!("{v:.9}"),
        MeasureValue::Undefined { .. } => "undefined".to_string(),
    };
    let pm = match pmi(law, x, y, cond)? {
        MeasureValue::Finite(v) => format!("{v:.9}"),
        MeasureValue::Undefined { .. } => "undefined".to_string(),
    };
    Ok((cmi, cs, pm))
}

fn write_sweep_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut text = header.join(",") + "\n";
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn run_perturb_noise(args: NoiseArgs) -> Result<()> {
    let law = DiscreteDistribution::load(&args.dist)?;
    let var = args.var.as_deref().unwrap_or(&args.x);
    if args.save.is_some() && args.epsilons.len() != 1 {
        return Err(Error::InvalidConfig(
            "--save needs exactly one value in --epsilons".into(),
        ));
    }
    let card = {
        let pos = law.position(var)?;
        law.variables()[pos].card
    };
    println!(
        "{:>10} {:>14} {:>14} {:>14} {:>14}",
        "epsilon", "tv", "cmi", "cs", "pmi"
    );
    let mut rows = Vec::new();
    for &epsilon in &args.epsilons {
        let spec = NoiseSpec::uniform(epsilon, card);
        let noised = epsilon_noise(&law, var, &spec)?;
        let tv = total_variation(&noised, &law)?;
        let (cmi, cs, pm) = measure_columns(&noised, &args.x, &args.y, &args.cond)?;
        println!("{epsilon:>10} {tv:>14.9} {cmi:>14.9} {cs:>14} {pm:>14}");
        rows.push(vec![
            epsilon.to_string(),
            format!("{tv:.12}"),
            format!("{cmi:.12}"),
            cs,
            pm,
        ]);
        if let Some(path) = &args.save {
            noised.save(path)?;
            eprintln!("wrote perturbed law to {}", path.display());
        }
    }
    if let Some(path) = &args.out {
        write_sweep_csv(path, &["epsilon", "tv", "cmi", "cs", "pmi"], &rows)?;
        eprintln!("wrote sweep to {}", path.display());
    }
    Ok(())
}

/// Fills every degenerate conditioning event of (x, cond) in turn, all at
/// the same strength and target weights, until CS and PMI are defined.
fn fill_all_degenerate(
    law: &DiscreteDistribution,
    x: &str,
    cond: &[String],
    eta: f64,
    alpha: &[f64],
) -> Result<DiscreteDistribution> {
    let mut current = law.clone();
    loop {
        let events = degenerate_conditioning_events(&current, x, cond)?;
        match events.first() {
            None => return Ok(current),
            Some((x_state, event)) => {
                current = singularity_family(&current, x, *x_state, event, eta, alpha)?;
            }
        }
    }
}

fn run_perturb_singular(args: SingularArgs) -> Result<()> {
    let law = DiscreteDistribution::load(&args.dist)?;
    if args.save.is_some() && args.etas.len() != 1 {
        return Err(Error::InvalidConfig(
            "--save needs exactly one value in --etas".into(),
        ));
    }
    println!(
        "{:>12} {:>14} {:>14} {:>14} {:>14}",
        "eta", "tv", "cmi", "cs", "pmi"
    );
    let mut rows = Vec::new();
    for &eta in &args.etas {
        let filled = fill_all_degenerate(&law, &args.x, &args.cond, eta, &args.alpha_weights)?;
        let tv = total_variation(&filled, &law)?;
        let (cmi, cs, pm) = measure_columns(&filled, &args.x, &args.y, &args.cond)?;
        println!("{eta:>12} {tv:>14.9} {cmi:>14.9} {cs:>14} {pm:>14}");
        rows.push(vec![
            eta.to_string(),
            format!("{tv:.12}"),
            format!("{cmi:.12}"),
            cs,
            pm,
        ]);
        if let Some(path) = &args.save {
            filled.save(path)?;
            eprintln!("wrote perturbed law to {}", path.display());
        }
    }
    if let Some(path) = &args.out {
        write_sweep_csv(path, &["eta", "tv", "cmi", "cs", "pmi"], &rows)?;
        eprintln!("wrote sweep to {}", path.display());
    }
    Ok(())
}
