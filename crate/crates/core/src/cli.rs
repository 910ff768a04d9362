//! Command-line front end. This is the only module that touches the file
//! system outside of [`crate::io`].
//!
//! Exit codes: 0 on success, 1 on invalid input or unreadable files, 2 on
//! numerical failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::distributions::StreamRng;
use crate::error::{Error, Result};
use crate::gibbs::run_chain;
use crate::harness::{replicate_data, run_scenario, score_fit, ExperimentSettings, ModelVariant, VariantFit};
use crate::io::{
    read_chain, read_dataset, read_truth, write_chain, write_curve_csv, write_dataset, write_json, write_selection_csv,
    write_truth, EdgeFormat, RunConfig, TRUTH_FILE,
};
use crate::model::{AttributeConditioning, Chain, Dataset, Hyperparameters, SamplerConfig};
use crate::simulate::{builtin_scenarios, scenario, ScenarioConfig};
use crate::summarize::{coefficient_summary, spatial_correlation_curve, CurvePooling};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "SPATIAL_JOINT_THREADS";
/// Latent rank of fits unless configured otherwise.
pub const DEFAULT_FIT_RANK: usize = 4;
pub const DEFAULT_REPLICATES: usize = 5;
pub const DEFAULT_CURVE_BINS: usize = 15;
pub const DEFAULT_LEVEL: f64 = 0.95;
/// Stream of the predictive draws behind the spatial curve.
const CURVE_STREAM: u64 = 1 << 32;

#[derive(Debug, Parser)]
#[command(name = "spatial-joint", version, about = "Joint spatial network and attribute regression")]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for replicated experiments.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the built-in simulation scenarios.
    Scenarios {
        #[arg(long)]
        json: bool,
        /// Accepted for uniformity; listing is not random.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate one dataset and its ground truth.
    Simulate(SimulateArgs),
    /// Fit one model variant to a dataset.
    Fit(FitArgs),
    /// Summarize a stored chain.
    Summarize(SummarizeArgs),
    /// Run replicated fits of every variant on one scenario.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    /// `long` (one upper-triangle edge file) or `matrices` (one file per subject).
    #[arg(long, default_value = "long", value_parser = parse_edge_format)]
    edge_format: EdgeFormat,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_parser = parse_variant)]
    variant: Option<ModelVariant>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    /// `whitened` or `verbatim` attribute rows in the node update.
    #[arg(long, value_parser = parse_conditioning)]
    conditioning: Option<AttributeConditioning>,
}

#[derive(Debug, Args)]
struct SummarizeArgs {
    #[arg(long)]
    chain: PathBuf,
    /// Directory holding `truth.json`.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Dataset directory; defaults to the one recorded with the chain.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory; defaults to the chain directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
    /// `per-subject` or `pooled`.
    #[arg(long, value_parser = parse_pooling)]
    pooling: Option<CurvePooling>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: usize,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated variant names; all variants by default.
    #[arg(long, value_delimiter = ',', value_parser = parse_variant)]
    variants: Option<Vec<ModelVariant>>,
    #[arg(long)]
    subjects: Option<usize>,
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    level: Option<f64>,
}

fn parse_variant(s: &str) -> std::result::Result<ModelVariant, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_kebab<T: serde::de::DeserializeOwned>(s: &str, expected: &str) -> std::result::Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("'{s}' is not one of {expected}"))
}

fn parse_edge_format(s: &str) -> std::result::Result<EdgeFormat, String> {
    parse_kebab(s, "long, matrices")
}

fn parse_conditioning(s: &str) -> std::result::Result<AttributeConditioning, String> {
    parse_kebab(s, "whitened, verbatim")
}

fn parse_pooling(s: &str) -> std::result::Result<CurvePooling, String> {
    parse_kebab(s, "per-subject, pooled")
}

/// Wall-clock record kept apart from the deterministic artifacts.
#[derive(Debug, Serialize)]
struct Timing {
    command: &'static str,
    seconds: f64,
    threads: usize,
}

struct Context {
    config: RunConfig,
    threads: usize,
}

impl Context {
    fn seed(&self, flag: Option<u64>, fallback: u64) -> u64 {
        flag.or(self.config.seed).unwrap_or(fallback)
    }

    fn level(&self, flag: Option<f64>) -> Result<f64> {
        let level = flag.or(self.config.level).unwrap_or(DEFAULT_LEVEL);
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::invalid(format!("level {level} outside (0, 1)")));
        }
        Ok(level)
    }

    /// Fit hyperparameters: rank-4 defaults, then the config file, then flags.
    fn hyper(
        &self,
        seed: u64,
        rank: Option<usize>,
        iterations: Option<usize>,
        burnin: Option<usize>,
    ) -> Result<Hyperparameters> {
        let mut base = Hyperparameters::with_rank(DEFAULT_FIT_RANK);
        base.seed = seed;
        let mut overrides = self.config.hyper.clone();
        overrides.rank = rank.or(overrides.rank);
        overrides.iterations = iterations.or(overrides.iterations);
        overrides.burnin = burnin.or(overrides.burnin);
        overrides.apply(&base)
    }

    fn write_timing(&self, dir: &Path, command: &'static str, start: Instant) -> Result<()> {
        write_json(
            &dir.join("timing.json"),
            &Timing { command, seconds: start.elapsed().as_secs_f64(), threads: self.threads },
        )
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(t) = flag.or(config) {
        return Ok(t);
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) => s.trim().parse().map_err(|_| Error::invalid(format!("{THREADS_ENV}='{s}' is not a thread count"))),
        Err(_) => Ok(0),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::read(path)?,
        None => RunConfig::default(),
    };
    let threads = thread_count(cli.threads, config.threads)?;
    let ctx = Context { config, threads };
    match cli.command {
        Command::Scenarios { json, seed: _ } => scenarios(json),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Fit(a) => fit(&ctx, a),
        Command::Summarize(a) => summarize(&ctx, a),
        Command::Compare(a) => compare(&ctx, a),
    }
}

fn scenarios(json: bool) -> Result<()> {
    let all = builtin_scenarios();
    if json {
        let text = serde_json::to_string_pretty(&all).map_err(|e| Error::invalid(e.to_string()))?;
        println!("{text}");
        return Ok(());
    }
    println!(
        "{:>8} {:>10} {:>6} {:>6} {:>4} {:>4} {:>7} {:>7}",
        "scenario", "1-Delta*", "zeta*", "n", "V", "R*", "tau_y2*", "tau_z2*"
    );
    for s in &all {
        println!(
            "{:>8} {:>10} {:>6} {:>6} {:>4} {:>4} {:>7} {:>7}",
            s.id, s.sparsity, s.zeta_star, s.subjects, s.nodes, s.rank_star, s.tau_y2_star, s.tau_z2_star
        );
    }
    Ok(())
}

fn scenario_with(ctx: &Context, id: usize, subjects: Option<usize>, nodes: Option<usize>) -> Result<ScenarioConfig> {
    let mut cfg = scenario(id)?;
    if let Some(n) = subjects.or(ctx.config.subjects) {
        cfg.subjects = n;
    }
    if let Some(v) = nodes.or(ctx.config.nodes) {
        cfg.nodes = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate(ctx: &Context, a: SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = scenario_with(ctx, a.scenario, a.subjects, a.nodes)?;
    cfg.seed = ctx.seed(a.seed, cfg.seed);
    // Replicate 0 of `compare` with the same seed.
    let (truth, data) = replicate_data(&cfg, cfg.seed, 0)?;
    write_dataset(&a.out, &data, a.edge_format)?;
    write_truth(&a.out.join(TRUTH_FILE), &truth, Some(data.fingerprint()))?;
    ctx.write_timing(&a.out, "simulate", start)?;
    eprintln!(
        "simulated scenario {} (n = {}, V = {}, seed {}) into {}",
        cfg.id,
        data.subjects(),
        data.nodes(),
        cfg.seed,
        a.out.display()
    );
    Ok(())
}

/// Chain directories written by `fit` for a variant with `count` configurations.
pub fn fit_dirs(out: &Path, configs: &[SamplerConfig]) -> Vec<PathBuf> {
    if configs.len() == 1 {
        return vec![out.to_path_buf()];
    }
    configs.iter().map(|c| out.join(if c.network { "network" } else { "attributes" })).collect()
}

fn fit(ctx: &Context, a: FitArgs) -> Result<()> {
    let start = Instant::now();
    let data = read_dataset(&a.data)?;
    let seed = ctx.seed(a.seed, 0);
    let hyper = ctx.hyper(seed, a.rank, a.iterations, a.burnin)?;
    let variant = a.variant.or(ctx.config.variant).unwrap_or(ModelVariant::SpatialJoint);
    let conditioning = a.conditioning.or(ctx.config.conditioning);
    let configs: Vec<SamplerConfig> = variant
        .configs()
        .into_iter()
        .map(|c| SamplerConfig { conditioning: conditioning.unwrap_or(c.conditioning), ..c })
        .collect();
    let dirs = fit_dirs(&a.out, &configs);
    for (j, (config, dir)) in configs.iter().zip(&dirs).enumerate() {
        let mut rng = StreamRng::new(seed, j as u64);
        let chain = run_chain(&data, &hyper, *config, &mut rng)?;
        write_chain(dir, &chain, Some(&a.data))?;
        eprintln!("{variant}: {} draws written to {}", chain.len(), dir.display());
    }
    ctx.write_timing(&a.out, "fit", start)
}

fn variant_of(config: &SamplerConfig) -> ModelVariant {
    match (config.network, config.attributes, config.spatial) {
        (true, true, true) => ModelVariant::SpatialJoint,
        (true, true, false) => ModelVariant::NonSpatialJoint,
        (true, false, _) => ModelVariant::IndependentNetwork,
        _ => ModelVariant::IndependentAttribute,
    }
}

fn check_fingerprint(chain: &Chain, found: &str, source: &Path) -> Result<()> {
    if chain.dataset_fingerprint != found {
        return Err(Error::invalid(format!(
            "chain was fitted to a different dataset than {} (fingerprint mismatch)",
            source.display()
        )));
    }
    Ok(())
}

fn summarize(ctx: &Context, a: SummarizeArgs) -> Result<()> {
    let start = Instant::now();
    let file = read_chain(&a.chain)?;
    let chain = file.chain;
    let out = a.out.clone().unwrap_or_else(|| a.chain.clone());
    let level = ctx.level(a.level)?;
    let data_dir = a.data.clone().or(file.dataset);
    let data: Option<Dataset> = match &data_dir {
        Some(dir) => {
            let d = read_dataset(dir)?;
            check_fingerprint(&chain, &d.fingerprint(), dir)?;
            Some(d)
        }
        None => None,
    };
    let truth = match &a.truth {
        Some(dir) => {
            let path = dir.join(TRUTH_FILE);
            let (t, fp) = read_truth(&path)?;
            if let Some(fp) = fp {
                check_fingerprint(&chain, &fp, &path)?;
            }
            Some(t)
        }
        None => None,
    };

    let summary = coefficient_summary(&chain, level)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_selection_csv(&out.join("selection.csv"), &summary, truth.as_ref().map(|t| t.eta_star.as_slice()))?;
    if chain.config.attributes {
        match &data {
            Some(d) => {
                let bins = a.bins.or(ctx.config.curve_bins).unwrap_or(DEFAULT_CURVE_BINS);
                let pooling = a.pooling.or(ctx.config.curve_pooling).unwrap_or_default();
                let seed = ctx.seed(a.seed, chain.hyper.seed);
                let mut rng = StreamRng::new(seed, CURVE_STREAM);
                let zeta_star = truth.as_ref().map(|t| t.config.zeta_star);
                let curve = spatial_correlation_curve(&chain, d, bins, pooling, zeta_star, &mut rng)?;
                write_curve_csv(&out.join("curve.csv"), &curve)?;
            }
            None => eprintln!("no dataset available; skipping the spatial correlation curve"),
        }
    }
    if let Some(t) = &truth {
        let fit = VariantFit {
            variant: variant_of(&chain.config),
            network: chain.config.network.then(|| chain.clone()),
            attributes: chain.config.attributes.then(|| chain.clone()),
            runtime: 0.0,
        };
        write_json(&out.join("scores.json"), &score_fit(&fit, t, level)?)?;
    }
    ctx.write_timing(&out, "summarize", start)?;
    eprintln!(
        "{} of {} nodes selected; summaries written to {}",
        summary.selection.selected.len(),
        summary.inclusion_prob.len(),
        out.display()
    );
    Ok(())
}

fn compare(ctx: &Context, a: CompareArgs) -> Result<()> {
    let start = Instant::now();
    let mut cfg = scenario_with(ctx, a.scenario, a.subjects, a.nodes)?;
    cfg.seed = ctx.seed(a.seed, cfg.seed);
    let hyper = ctx.hyper(cfg.seed, a.rank, a.iterations, a.burnin)?;
    let settings = ExperimentSettings {
        variants: a.variants.or_else(|| ctx.config.variants.clone()).unwrap_or_else(|| ModelVariant::ALL.to_vec()),
        replicates: a.replicates.or(ctx.config.replicates).unwrap_or(DEFAULT_REPLICATES),
        hyper,
        level: ctx.level(a.level)?,
        threads: ctx.threads,
    };
    let report = run_scenario(&cfg, &settings)?;
    write_json(&a.out.join("report.json"), &report)?;
    ctx.write_timing(&a.out, "compare", start)?;
    for f in &report.failures {
        eprintln!("replicate {} failed: {}", f.replicate, f.message);
    }
    eprintln!(
        "scenario {}: {} of {} replicates succeeded; report written to {}",
        cfg.id,
        report.rows.len(),
        settings.replicates,
        a.out.join("report.json").display()
    );
    if report.rows.is_empty() {
        return Err(Error::numerical("every replicate failed"));
    }
    Ok(())
}
