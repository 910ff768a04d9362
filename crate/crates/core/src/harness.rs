//! Replicated simulation experiments and comparison metrics.
//!
//! Replicate `r` draws its truth and data from stream `16 r` and fit `j` of
//! variant `k` from stream `16 r + 1 + 2k + j`, so results do not depend on
//! the number of worker threads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::StreamRng;
use crate::error::{Error, Result};
use crate::gibbs::run_chain;
use crate::model::{vectorize_upper, Chain, Dataset, Hyperparameters, SamplerConfig};
use crate::simulate::{generate_dataset, generate_truth, GroundTruth, ScenarioConfig};
use crate::summarize::{coefficient_summary, inclusion_probabilities, Interval, PosteriorSummary, SELECTION_THRESHOLD};

/// Model fitted to a simulated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelVariant {
    SpatialJoint,
    /// Joint model with `Σ = I`.
    NonSpatialJoint,
    /// Network-only fit for `β` and selection, paired with a separate
    /// attribute-only fit (`Σ = I`) for `α`.
    IndependentNetwork,
    /// Attribute-only fit with `Σ = I`.
    IndependentAttribute,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::SpatialJoint,
        ModelVariant::NonSpatialJoint,
        ModelVariant::IndependentNetwork,
        ModelVariant::IndependentAttribute,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::SpatialJoint => "spatial-joint",
            ModelVariant::NonSpatialJoint => "non-spatial-joint",
            ModelVariant::IndependentNetwork => "independent-network",
            ModelVariant::IndependentAttribute => "independent-attribute",
        }
    }

    fn index(self) -> u64 {
        Self::ALL.iter().position(|&v| v == self).expect("listed") as u64
    }

    /// Sampler configurations fitted for this variant: the first supplies
    /// `β` and node selection when it has a network block, the last
    /// supplies `α` when it has an attribute block.
    pub fn configs(self) -> Vec<SamplerConfig> {
        match self {
            ModelVariant::SpatialJoint => vec![SamplerConfig::spatial_joint()],
            ModelVariant::NonSpatialJoint => vec![SamplerConfig::non_spatial_joint()],
            ModelVariant::IndependentNetwork => {
                vec![SamplerConfig::network_only(), SamplerConfig::attribute_only()]
            }
            ModelVariant::IndependentAttribute => vec![SamplerConfig::attribute_only()],
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| {
            Error::invalid(format!("unknown variant '{s}'; expected one of {}", Self::ALL.map(|v| v.name()).join(", ")))
        })
    }
}

/// `‖estimate − truth‖² / ‖truth‖²`.
pub fn scaled_mse(estimate: &[f64], truth: &[f64]) -> Result<f64> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid("estimate and truth differ in length"));
    }
    let denom: f64 = truth.iter().map(|t| t * t).sum();
    if denom == 0.0 {
        return Err(Error::invalid("scaled MSE is undefined for a zero truth"));
    }
    let num: f64 = estimate.iter().zip(truth).map(|(e, t)| (e - t).powi(2)).sum();
    Ok(num / denom)
}

/// Scaled MSE of a coefficient matrix over its upper triangle.
pub fn beta_scaled_mse(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    scaled_mse(vectorize_upper(estimate).as_slice(), vectorize_upper(truth).as_slice())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalMetrics {
    pub coverage: f64,
    pub mean_length: f64,
}

/// Share of truth values inside their intervals and mean interval width.
pub fn interval_metrics(intervals: &[Interval], truth: &[f64]) -> Result<IntervalMetrics> {
    if intervals.len() != truth.len() || truth.is_empty() {
        return Err(Error::invalid("interval and truth counts differ or are empty"));
    }
    let hits = intervals.iter().zip(truth).filter(|(i, &t)| i.contains(t)).count();
    Ok(IntervalMetrics {
        coverage: hits as f64 / truth.len() as f64,
        mean_length: intervals.iter().map(Interval::width).sum::<f64>() / truth.len() as f64,
    })
}

/// Inclusion probabilities against the true indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTable {
    pub inclusion_prob: Vec<f64>,
    pub truth: Vec<bool>,
    /// Share of truly active nodes with probability above the threshold.
    pub true_positive_rate: f64,
    /// Share of truly inactive nodes with probability above the threshold;
    /// zero when every node is active.
    pub false_positive_rate: f64,
}

impl SelectionTable {
    pub fn new(inclusion_prob: Vec<f64>, truth: Vec<bool>) -> Self {
        let rate = |want: bool| {
            let group: Vec<f64> =
                inclusion_prob.iter().zip(&truth).filter(|(_, &t)| t == want).map(|(&p, _)| p).collect();
            if group.is_empty() {
                0.0
            } else {
                group.iter().filter(|&&p| p > SELECTION_THRESHOLD).count() as f64 / group.len() as f64
            }
        };
        SelectionTable { true_positive_rate: rate(true), false_positive_rate: rate(false), inclusion_prob, truth }
    }
}

/// Metrics of one variant on one replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantScore {
    pub variant: ModelVariant,
    pub mse_beta: Option<f64>,
    pub mse_alpha: Option<f64>,
    pub beta_intervals: Option<IntervalMetrics>,
    pub alpha_intervals: Option<IntervalMetrics>,
    pub selection: Option<SelectionTable>,
    #[serde(skip)]
    pub runtime: f64,
}

impl VariantScore {
    fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut m = Vec::new();
        let mut push = |name, x: Option<f64>| {
            if let Some(x) = x {
                m.push((name, x));
            }
        };
        push("mse_beta", self.mse_beta);
        push("mse_alpha", self.mse_alpha);
        push("beta_coverage", self.beta_intervals.map(|i| i.coverage));
        push("beta_length", self.beta_intervals.map(|i| i.mean_length));
        push("alpha_coverage", self.alpha_intervals.map(|i| i.coverage));
        push("alpha_length", self.alpha_intervals.map(|i| i.mean_length));
        push("true_positive_rate", self.selection.as_ref().map(|s| s.true_positive_rate));
        push("false_positive_rate", self.selection.as_ref().map(|s| s.false_positive_rate));
        m
    }
}

/// Summaries and scores of one variant fitted to one dataset.
pub struct VariantFit {
    pub variant: ModelVariant,
    /// Chain supplying `β` and node selection.
    pub network: Option<Chain>,
    /// Chain supplying `α`.
    pub attributes: Option<Chain>,
    pub runtime: f64,
}

/// Fits `variant`; fit `j` uses stream `stream_base + j`.
pub fn fit_variant(
    data: &Dataset,
    hyper: &Hyperparameters,
    variant: ModelVariant,
    seed: u64,
    stream_base: u64,
) -> Result<VariantFit> {
    let start = Instant::now();
    let mut network = None;
    let mut attributes = None;
    for (j, config) in variant.configs().into_iter().enumerate() {
        let mut rng = StreamRng::new(seed, stream_base + j as u64);
        let chain = run_chain(data, hyper, config, &mut rng)?;
        if config.network && network.is_none() {
            network = Some(chain.clone());
        }
        if config.attributes {
            attributes = Some(chain);
        }
    }
    Ok(VariantFit { variant, network, attributes, runtime: start.elapsed().as_secs_f64() })
}

/// Scores a fit against the truth at the given credible level.
pub fn score_fit(fit: &VariantFit, truth: &GroundTruth, level: f64) -> Result<VariantScore> {
    let mut score = VariantScore {
        variant: fit.variant,
        mse_beta: None,
        mse_alpha: None,
        beta_intervals: None,
        alpha_intervals: None,
        selection: None,
        runtime: fit.runtime,
    };
    let summarize = |c: &Chain| -> Result<PosteriorSummary> { coefficient_summary(c, level) };
    if let Some(chain) = &fit.network {
        let s = summarize(chain)?;
        let beta_truth = vectorize_upper(&truth.beta_star);
        let est: Vec<f64> = s.beta.entries.iter().map(|i| i.mean).collect();
        score.mse_beta = Some(scaled_mse(&est, beta_truth.as_slice())?);
        score.beta_intervals = Some(interval_metrics(&s.beta.entries, beta_truth.as_slice())?);
        score.selection = Some(SelectionTable::new(inclusion_probabilities(chain), truth.eta_star.clone()));
    }
    if let Some(chain) = &fit.attributes {
        let s = summarize(chain)?;
        let alpha_truth: DVector<f64> = truth.alpha_star();
        let est: Vec<f64> = s.alpha.iter().map(|i| i.mean).collect();
        score.mse_alpha = Some(scaled_mse(&est, alpha_truth.as_slice())?);
        score.alpha_intervals = Some(interval_metrics(&s.alpha, alpha_truth.as_slice())?);
        if score.selection.is_none() {
            score.selection = Some(SelectionTable::new(inclusion_probabilities(chain), truth.eta_star.clone()));
        }
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRow {
    pub replicate: usize,
    pub scores: Vec<VariantScore>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Standard error of the mean; zero for a single replicate.
    pub std_error: f64,
    pub count: usize,
}

impl Aggregate {
    pub fn of(values: &[f64]) -> Self {
        let m = values.len();
        let mean = values.iter().sum::<f64>() / m as f64;
        let std_error = if m > 1 {
            let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            (var / m as f64).sqrt()
        } else {
            0.0
        };
        Aggregate { mean, std_error, count: m }
    }
}

/// All replicates of one scenario and their per-variant aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub scenario: ScenarioConfig,
    pub seed: u64,
    pub level: f64,
    pub variants: Vec<ModelVariant>,
    pub rows: Vec<ReplicateRow>,
    pub failures: Vec<ReplicateFailure>,
    /// `variant → metric → aggregate` over successful replicates.
    pub aggregates: BTreeMap<ModelVariant, BTreeMap<String, Aggregate>>,
}

impl ReplicateReport {
    pub fn aggregate(&self, variant: ModelVariant, metric: &str) -> Option<Aggregate> {
        self.aggregates.get(&variant)?.get(metric).copied()
    }
}

/// Settings of a replicated experiment.
#[derive(Debug, Clone)]
pub struct ExperimentSettings {
    pub variants: Vec<ModelVariant>,
    pub replicates: usize,
    pub hyper: Hyperparameters,
    pub level: f64,
    /// Worker threads; 0 uses the rayon default.
    pub threads: usize,
}

/// Streams reserved per replicate.
pub const STREAMS_PER_REPLICATE: u64 = 16;

/// Truth and dataset of replicate `r`.
pub fn replicate_data(cfg: &ScenarioConfig, seed: u64, r: usize) -> Result<(GroundTruth, Dataset)> {
    let mut rng = StreamRng::new(seed, r as u64 * STREAMS_PER_REPLICATE);
    let truth = generate_truth(cfg, &mut rng)?;
    let data = generate_dataset(cfg, &truth, &mut rng)?;
    Ok((truth, data))
}

fn run_replicate(cfg: &ScenarioConfig, settings: &ExperimentSettings, seed: u64, r: usize) -> Result<ReplicateRow> {
    let (truth, data) = replicate_data(cfg, seed, r)?;
    let base = r as u64 * STREAMS_PER_REPLICATE;
    let scores = settings
        .variants
        .iter()
        .map(|&v| {
            let fit = fit_variant(&data, &settings.hyper, v, seed, base + 1 + 2 * v.index())?;
            score_fit(&fit, &truth, settings.level)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReplicateRow { replicate: r, scores })
}

/// Runs every replicate of `cfg` under `settings.hyper.seed`, isolating
/// failures per replicate.
pub fn run_scenario(cfg: &ScenarioConfig, settings: &ExperimentSettings) -> Result<ReplicateReport> {
    cfg.validate()?;
    settings.hyper.validate()?;
    if settings.replicates == 0 || settings.variants.is_empty() {
        return Err(Error::invalid("need at least one replicate and one variant"));
    }
    let seed = settings.hyper.seed;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let results: Vec<Result<ReplicateRow>> = pool
        .install(|| (0..settings.replicates).into_par_iter().map(|r| run_replicate(cfg, settings, seed, r)).collect());
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => failures.push(ReplicateFailure { replicate: r, message: e.to_string() }),
        }
    }
    let mut aggregates = BTreeMap::new();
    for &variant in &settings.variants {
        let mut per_metric: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for score in rows.iter().flat_map(|row| &row.scores).filter(|s| s.variant == variant) {
            for (name, x) in score.metrics() {
                per_metric.entry(name.to_string()).or_default().push(x);
            }
        }
        aggregates.insert(variant, per_metric.into_iter().map(|(k, v)| (k, Aggregate::of(&v))).collect());
    }
    Ok(ReplicateReport {
        scenario: cfg.clone(),
        seed,
        level: settings.level,
        variants: settings.variants.clone(),
        rows,
        failures,
        aggregates,
    })
}
