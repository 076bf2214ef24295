//! The `evonet` command-line tool.
//!
//! Configuration comes from an optional JSON file, the `EVONET_SEED`
//! environment variable and flags, in increasing precedence. Every input is
//! validated and every result computed before the first file is written, so
//! a failed run leaves no partial output. Diagnostics go to standard error.

pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::analysis::{
    compare, fit_tail, read_histogram_csv, tv_distance, write_comparison_csv, write_pmf_csv, write_snapshot_csv,
    ComparisonReport, KMinChoice, RunManifest, TailFitOptions, TailModel,
};
use crate::kernels::{InitialDegreeLaw, KernelParams, ModelPreset};
use crate::sim::{
    pool_at, run_chain_ensemble, simulate, snapshot_times, ChainConfig, MultiEdgePolicy, ReplicaRun, SimConfig,
    StepCounters,
};
use crate::solver::{solve_distribution, DegreeDistribution};
use crate::Error;

/// Default largest degree of tabulated distributions.
pub const DEFAULT_MAX_DEGREE: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "evonet", version, about = "Degree distributions of evolving networks: exact solutions and simulations")]
pub struct Cli {
    /// Log verbosity on standard error; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the stationary degree distribution.
    Solve(SolveArgs),
    /// Simulate a generative network model.
    Simulate(SimulateArgs),
    /// Simulate independent degree chains.
    Chains(ChainsArgs),
    /// Simulate and compare with the exact distribution.
    Compare(CompareArgs),
    /// Fit the tail exponent of a degree histogram.
    Exponent(ExponentArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetName {
    BaDel,
    GroupDel,
    AddRewire,
}

impl PresetName {
    fn variant(self) -> &'static str {
        match self {
            PresetName::BaDel => "ba-del",
            PresetName::GroupDel => "group-del",
            PresetName::AddRewire => "add-rewire",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    Resample,
    Allow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Engine {
    /// Graph-level simulation of the preset.
    #[default]
    Network,
    /// Structure-free degree chains.
    Chains,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TailModelArg {
    PowerLaw,
    Shifted,
}

#[derive(Debug, Args)]
struct ModelFlags {
    /// JSON configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Generative model preset.
    #[arg(long, value_enum)]
    preset: Option<PresetName>,
    /// Edges per step.
    #[arg(long)]
    m: Option<u32>,
    /// Seed nodes; defaults to m + 1 for deletion models and m otherwise.
    #[arg(long)]
    m0: Option<u32>,
    /// Seed degree sum of the deletion models; defaults to m0 * m.
    #[arg(long = "n0")]
    n0: Option<u64>,
    /// Edge-addition probability of the rewiring model.
    #[arg(long)]
    p: Option<f64>,
    /// Rewiring probability of the rewiring model.
    #[arg(long)]
    q: Option<f64>,
    /// Gain slope A.
    #[arg(long = "a")]
    gain_slope: Option<f64>,
    /// Gain intercept B.
    #[arg(long = "b")]
    gain_intercept: Option<f64>,
    /// Loss slope Abar.
    #[arg(long = "abar")]
    loss_slope: Option<f64>,
    /// Loss intercept Bbar.
    #[arg(long = "bbar")]
    loss_intercept: Option<f64>,
    /// Newborn degree law: a degree, or `k:p` pairs separated by commas.
    #[arg(long)]
    law: Option<String>,
}

#[derive(Debug, Args)]
struct RunFlags {
    /// Number of steps.
    #[arg(long)]
    horizon: Option<u64>,
    /// Independent replicas; default 1.
    #[arg(long)]
    replicas: Option<u32>,
    /// RNG seed; overrides EVONET_SEED and the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra snapshot times, comma separated; the horizon is always included.
    #[arg(long, value_delimiter = ',')]
    snapshots: Option<Vec<u64>>,
}

#[derive(Debug, Args)]
struct OutputFlags {
    /// Directory receiving the data files and a run manifest.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TailFlags {
    /// First degree of the fitted tail; default the seam.
    #[arg(long, conflicts_with = "auto_k_min")]
    k_min: Option<usize>,
    /// Choose k_min by minimal KS distance.
    #[arg(long)]
    auto_k_min: bool,
    /// Tail model.
    #[arg(long, value_enum)]
    tail_model: Option<TailModelArg>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelFlags,
    /// Largest degree in the distribution table.
    #[arg(long)]
    max_degree: Option<usize>,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    run: RunFlags,
    /// Handling of a drawn target that is already adjacent or already chosen.
    #[arg(long, value_enum)]
    multi_edge_policy: Option<PolicyArg>,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Debug, Args)]
struct ChainsArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    run: RunFlags,
    /// Degree at which chains leave into the overflow bucket.
    #[arg(long)]
    degree_cap: Option<usize>,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    run: RunFlags,
    /// Simulation engine; default network.
    #[arg(long, value_enum)]
    engine: Option<Engine>,
    /// Handling of a drawn target that is already adjacent or already chosen.
    #[arg(long, value_enum)]
    multi_edge_policy: Option<PolicyArg>,
    /// Degree at which chains leave into the overflow bucket.
    #[arg(long)]
    degree_cap: Option<usize>,
    /// Largest degree compared individually.
    #[arg(long)]
    max_degree: Option<usize>,
    #[command(flatten)]
    tail: TailFlags,
    #[command(flatten)]
    output: OutputFlags,
}

#[derive(Debug, Args)]
struct ExponentArgs {
    /// Histogram CSV with columns `k,count`, optionally `t` and `replica`; `-` reads standard input.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    tail: TailFlags,
    #[command(flatten)]
    output: OutputFlags,
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { crate::error::EXIT_CONFIG } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_env("EVONET_LOG").try_init();
    let stdout = std::io::stdout();
    match execute(cli, &mut stdout.lock()) {
        Ok(()) => 0,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs a parsed command, writing primary data to `out`.
pub fn execute<W: Write>(cli: Cli, out: &mut W) -> Result<(), Error> {
    match cli.command {
        Command::Solve(args) => solve_command(args, out),
        Command::Simulate(args) => simulate_command(args, out),
        Command::Chains(args) => chains_command(args, out),
        Command::Compare(args) => compare_command(args, out),
        Command::Exponent(args) => exponent_command(args, out),
    }
}

fn apply_model_flags(map: &mut Map<String, Value>, flags: &ModelFlags) -> Result<(), Error> {
    let preset_given =
        flags.preset.is_some() || flags.m.is_some() || flags.m0.is_some() || flags.n0.is_some() || flags.p.is_some() || flags.q.is_some();
    if preset_given {
        let preset = config::object(map, "preset")?;
        config::set(preset, "variant", flags.preset.map(PresetName::variant));
        config::set(preset, "m", flags.m);
        config::set(preset, "m0", flags.m0);
        config::set(preset, "N0", flags.n0);
        config::set(preset, "p", flags.p);
        config::set(preset, "q", flags.q);
        config::complete_preset(preset);
    }
    let kernel_flags = [
        ("A", flags.gain_slope),
        ("B", flags.gain_intercept),
        ("Abar", flags.loss_slope),
        ("Bbar", flags.loss_intercept),
    ];
    if kernel_flags.iter().any(|(_, v)| v.is_some()) {
        let params = config::object(map, "params")?;
        for (key, value) in kernel_flags {
            config::set(params, key, value);
        }
    }
    if let Some(text) = &flags.law {
        map.insert("law".into(), parse_law(text)?);
    }
    Ok(())
}

/// `"3"` or `"0:0.35,2:0.65"` as `{"d": {..}}`.
fn parse_law(text: &str) -> Result<Value, Error> {
    let bad = || Error::Config(format!("cannot parse newborn law {text:?}"));
    let mut d = Map::new();
    for part in text.split(',') {
        let (k, p) = match part.split_once(':') {
            Some((k, p)) => (k.trim(), p.trim().parse::<f64>().map_err(|_| bad())?),
            None => (part.trim(), 1.0),
        };
        let k: usize = k.parse().map_err(|_| bad())?;
        d.insert(k.to_string(), p.into());
    }
    Ok(serde_json::json!({ "d": d }))
}

fn apply_run_flags(map: &mut Map<String, Value>, flags: &RunFlags) {
    config::set(map, "horizon", flags.horizon);
    config::set(map, "replicas", flags.replicas);
    config::set(map, "snapshots", flags.snapshots.clone());
    config::set_default(map, "replicas", 1.into());
}

fn policy_value(policy: Option<PolicyArg>) -> Option<MultiEdgePolicy> {
    policy.map(|p| match p {
        PolicyArg::Resample => MultiEdgePolicy::Resample,
        PolicyArg::Allow => MultiEdgePolicy::Allow,
    })
}

fn tail_options(flags: &TailFlags) -> TailFitOptions {
    TailFitOptions {
        k_min: match (flags.auto_k_min, flags.k_min) {
            (true, _) => KMinChoice::Automated,
            (false, Some(k)) => KMinChoice::Fixed(k),
            (false, None) => KMinChoice::Seam,
        },
        model: match flags.tail_model {
            Some(TailModelArg::Shifted) => TailModel::ShiftedPowerLaw,
            _ => TailModel::PowerLaw,
        },
    }
}

/// Kernels from `"preset"` or `"params"` plus `"law"`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolveConfig {
    #[serde(default)]
    preset: Option<ModelPreset>,
    #[serde(default)]
    params: Option<KernelParams>,
    #[serde(default)]
    law: Option<InitialDegreeLaw>,
    #[serde(default)]
    max_degree: Option<usize>,
}

fn kernels_of(
    preset: Option<ModelPreset>,
    params: Option<KernelParams>,
    law: Option<InitialDegreeLaw>,
) -> Result<(KernelParams, InitialDegreeLaw), Error> {
    match (preset, params, law) {
        (Some(p), None, None) => Ok(p.kernels()),
        (None, Some(params), Some(law)) => Ok((params, law)),
        (None, Some(_), None) | (None, None, Some(_)) => Err(Error::Config("kernel params and a newborn law are both required".into())),
        (None, None, None) => Err(Error::Config("no model given: use a preset or params and law".into())),
        _ => Err(Error::Config("give either a preset or params and law, not both".into())),
    }
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, Error> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<(), crate::analysis::AnalysisError>) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

/// Writes `files` into `dir` through temporary names, then the manifest.
fn write_outputs(dir: &Path, files: Vec<(&str, Vec<u8>)>, mut manifest: RunManifest, counters: Option<StepCounters>) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let put = |name: &str, bytes: &[u8]| -> Result<PathBuf, Error> {
        let path = dir.join(name);
        let tmp = dir.join(format!(".{name}.partial"));
        std::fs::write(&tmp, bytes)?;
        std::fs::rename(&tmp, &path)?;
        Ok(path)
    };
    for (name, bytes) in &files {
        written.push(put(name, bytes)?);
    }
    manifest.finish(written, counters);
    put("manifest.json", &pretty_json(&manifest)?)?;
    Ok(())
}

fn solve_command<W: Write>(args: SolveArgs, out: &mut W) -> Result<(), Error> {
    let mut map = config::load(args.model.config.as_deref())?;
    apply_model_flags(&mut map, &args.model)?;
    config::set(&mut map, "max_degree", args.max_degree);
    let manifest = RunManifest::start("solve", Value::Object(map.clone()));
    let cfg: SolveConfig = config::parse(map)?;
    let (params, law) = kernels_of(cfg.preset, cfg.params, cfg.law)?;
    let dist = solve_distribution(&params, &law)?;
    let max_degree = cfg.max_degree.unwrap_or(DEFAULT_MAX_DEGREE).max(dist.seam());
    let pmf = dist.pmf(max_degree)?;
    let json = pretty_json(&dist)?;
    if let Some(dir) = &args.output.out_dir {
        let csv = csv_bytes(|b| write_pmf_csv(b, &pmf))?;
        write_outputs(dir, vec![("distribution.csv", csv), ("solution.json", json.clone())], manifest, None)?;
    }
    out.write_all(&json)?;
    Ok(())
}

fn merged_counters(runs: &[ReplicaRun]) -> StepCounters {
    let mut total = StepCounters::default();
    for r in runs {
        total.merge(&r.counters);
    }
    total
}

fn report_counters(counters: &StepCounters) {
    if counters.draws_abandoned > 0 {
        log::warn!("{} draws abandoned after exhausting the redraw budget", counters.draws_abandoned);
    }
    if counters.rates_clamped > 0 {
        log::warn!("{} chain moves used clamped rates", counters.rates_clamped);
    }
    log::info!("counters: {counters:?}");
}

fn simulate_config(map: &mut Map<String, Value>, flags: &RunFlags) -> Result<(u64, Option<crate::analysis::SeedSource>), Error> {
    apply_run_flags(map, flags);
    config::resolve_seed(map, flags.seed)
}

fn with_seed(manifest: RunManifest, seed: (u64, Option<crate::analysis::SeedSource>)) -> RunManifest {
    match seed.1 {
        Some(source) => manifest.with_seed(seed.0, source),
        None => {
            let mut m = manifest;
            m.seed = Some(seed.0);
            m.rng_algorithm = Some(crate::sim::RNG_ALGORITHM.to_string());
            m
        }
    }
}

fn emit_runs<W: Write>(command: &str, map: Map<String, Value>, seed: (u64, Option<crate::analysis::SeedSource>), runs: &[ReplicaRun], output: &OutputFlags, out: &mut W) -> Result<(), Error> {
    let counters = merged_counters(runs);
    report_counters(&counters);
    let csv = csv_bytes(|b| write_snapshot_csv(b, runs))?;
    match &output.out_dir {
        Some(dir) => {
            let manifest = with_seed(RunManifest::start(command, Value::Object(map)), seed);
            write_outputs(dir, vec![("snapshots.csv", csv)], manifest, Some(counters))
        }
        None => Ok(out.write_all(&csv)?),
    }
}

fn simulate_command<W: Write>(args: SimulateArgs, out: &mut W) -> Result<(), Error> {
    let mut map = config::load(args.model.config.as_deref())?;
    apply_model_flags(&mut map, &args.model)?;
    config::set(&mut map, "multi_edge_policy", policy_value(args.multi_edge_policy));
    let seed = simulate_config(&mut map, &args.run)?;
    let cfg: SimConfig = config::parse(map.clone())?;
    cfg.validate()?;
    let runs = simulate(&cfg)?;
    emit_runs("simulate", map, seed, &runs, &args.output, out)
}

fn chains_command<W: Write>(args: ChainsArgs, out: &mut W) -> Result<(), Error> {
    let mut map = config::load(args.model.config.as_deref())?;
    apply_model_flags(&mut map, &args.model)?;
    config::expand_preset(&mut map)?;
    config::set(&mut map, "degree_cap", args.degree_cap);
    let seed = simulate_config(&mut map, &args.run)?;
    let cfg: ChainConfig = config::parse(map.clone())?;
    cfg.validate()?;
    let runs = run_chain_ensemble(&cfg)?;
    emit_runs("chains", map, seed, &runs, &args.output, out)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompareConfig {
    #[serde(default)]
    engine: Engine,
    #[serde(default)]
    preset: Option<ModelPreset>,
    #[serde(default)]
    params: Option<KernelParams>,
    #[serde(default)]
    law: Option<InitialDegreeLaw>,
    horizon: u64,
    replicas: u32,
    seed: u64,
    #[serde(default)]
    snapshots: Vec<u64>,
    #[serde(default)]
    multi_edge_policy: Option<MultiEdgePolicy>,
    #[serde(default)]
    degree_cap: Option<usize>,
    #[serde(default)]
    max_degree: Option<usize>,
    #[serde(default)]
    tail_fit: TailFitOptions,
}

/// Distances of the pooled histogram at one snapshot time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDistance {
    pub t: u64,
    pub tv_distance: f64,
}

/// JSON document written by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOutput {
    pub engine: String,
    pub horizon: u64,
    pub replicas: u32,
    #[serde(flatten)]
    pub report: ComparisonReport,
    pub snapshot_distances: Vec<SnapshotDistance>,
    pub counters: StepCounters,
}

fn compare_command<W: Write>(args: CompareArgs, out: &mut W) -> Result<(), Error> {
    let mut map = config::load(args.model.config.as_deref())?;
    apply_model_flags(&mut map, &args.model)?;
    config::set(&mut map, "engine", args.engine);
    config::set(&mut map, "multi_edge_policy", policy_value(args.multi_edge_policy));
    config::set(&mut map, "degree_cap", args.degree_cap);
    config::set(&mut map, "max_degree", args.max_degree);
    let flags = &args.tail;
    if flags.auto_k_min || flags.k_min.is_some() || flags.tail_model.is_some() {
        let mut options: TailFitOptions = match map.get("tail_fit") {
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| Error::Config(e.to_string()))?,
            None => TailFitOptions::default(),
        };
        let from_flags = tail_options(flags);
        if flags.auto_k_min || flags.k_min.is_some() {
            options.k_min = from_flags.k_min;
        }
        if flags.tail_model.is_some() {
            options.model = from_flags.model;
        }
        config::set(&mut map, "tail_fit", Some(options));
    }
    let seed = simulate_config(&mut map, &args.run)?;
    let cfg: CompareConfig = config::parse(map.clone())?;
    let (params, law) = kernels_of(cfg.preset, cfg.params, cfg.law.clone())?;
    let runs = match cfg.engine {
        Engine::Network => {
            let preset = cfg.preset.ok_or_else(|| Error::Config("the network engine needs a preset".into()))?;
            if cfg.degree_cap.is_some() {
                return Err(Error::Config("degree_cap applies to the chains engine only".into()));
            }
            let mut sim = SimConfig::new(preset, cfg.horizon, cfg.replicas, cfg.seed).with_snapshots(cfg.snapshots.clone());
            sim.multi_edge_policy = cfg.multi_edge_policy.unwrap_or_default();
            sim.validate()?;
            let dist = solve_distribution(&params, &law)?;
            (dist, simulate(&sim)?)
        }
        Engine::Chains => {
            if cfg.multi_edge_policy.is_some() {
                return Err(Error::Config("multi_edge_policy applies to the network engine only".into()));
            }
            let mut chains = ChainConfig::new(params, law.clone(), cfg.horizon, cfg.replicas, cfg.seed).with_snapshots(cfg.snapshots.clone());
            if let Some(cap) = cfg.degree_cap {
                chains.degree_cap = cap;
            }
            chains.validate()?;
            let dist = solve_distribution(&params, &law)?;
            (dist, run_chain_ensemble(&chains)?)
        }
    };
    let (dist, runs) = runs;
    let output = comparison_output(&dist, &runs, &cfg)?;
    let json = pretty_json(&output)?;
    if let Some(dir) = &args.output.out_dir {
        let table = csv_bytes(|b| write_comparison_csv(b, &output.report.per_k))?;
        let snapshots = csv_bytes(|b| write_snapshot_csv(b, &runs))?;
        let manifest = with_seed(RunManifest::start("compare", Value::Object(map)), seed);
        write_outputs(
            dir,
            vec![("report.json", json.clone()), ("comparison.csv", table), ("snapshots.csv", snapshots)],
            manifest,
            Some(output.counters),
        )?;
    }
    out.write_all(&json)?;
    Ok(())
}

fn comparison_output(dist: &DegreeDistribution, runs: &[ReplicaRun], cfg: &CompareConfig) -> Result<CompareOutput, Error> {
    let max_degree = cfg.max_degree.unwrap_or(DEFAULT_MAX_DEGREE).max(dist.seam());
    let analytic = dist.pmf(max_degree)?;
    let mut snapshot_distances = Vec::new();
    for t in snapshot_times(runs) {
        let pooled = pool_at(runs, t).expect("every replica holds each snapshot");
        let mut empirical = pooled.fractions();
        empirical.resize(analytic.len(), 0.0);
        snapshot_distances.push(SnapshotDistance { t, tv_distance: tv_distance(&analytic, &empirical) });
    }
    let pooled = pool_at(runs, cfg.horizon).expect("the horizon is always a snapshot");
    let report = compare(dist, &pooled, max_degree, cfg.tail_fit)?;
    let counters = merged_counters(runs);
    report_counters(&counters);
    Ok(CompareOutput {
        engine: match cfg.engine {
            Engine::Network => "network".into(),
            Engine::Chains => "chains".into(),
        },
        horizon: cfg.horizon,
        replicas: cfg.replicas,
        report,
        snapshot_distances,
        counters,
    })
}

fn exponent_command<W: Write>(args: ExponentArgs, out: &mut W) -> Result<(), Error> {
    let hist = if args.input.as_os_str() == "-" {
        read_histogram_csv(std::io::stdin().lock())?
    } else {
        let file = std::fs::File::open(&args.input)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.input.display())))?;
        read_histogram_csv(std::io::BufReader::new(file))?
    };
    let options = tail_options(&args.tail);
    let fit = fit_tail(&hist, 1, options)?;
    let json = pretty_json(&fit)?;
    if let Some(dir) = &args.output.out_dir {
        let echo = serde_json::json!({ "input": args.input, "tail_fit": options });
        write_outputs(dir, vec![("tail_fit.json", json.clone())], RunManifest::start("exponent", echo), None)?;
    }
    out.write_all(&json)?;
    Ok(())
}
