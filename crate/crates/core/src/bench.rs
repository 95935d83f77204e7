//! Multi-seed campaign runner and its metrics.
//!
//! A campaign runs the optimizer over independent trials (one derived stream
//! per trial index, so results never depend on scheduling), records a
//! per-iteration trace for each, and aggregates every metric across trials at
//! the 10/50/90% nearest-rank quantiles. Regret is measured against the known
//! optimum `f* = 1`, which the certificate construction guarantees; the
//! runner re-checks that guarantee before spending any evaluations.

use crate::error::{Error, Result};
use crate::ga::{run_ga, GaConfig, Population};
use crate::instance::{EhrlichInstance, InstanceParams};
use crate::io::to_canonical_json;
use crate::markov::TransitionMatrix;
use crate::rng::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// One per-iteration record of a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub evals: u64,
    pub best_value: f64,
    pub simple_regret: f64,
    pub cumulative_regret: f64,
    pub feasible_fraction: f64,
}

/// Per-iteration records for one seed.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrialTrace {
    pub rows: Vec<TraceRow>,
}

impl TrialTrace {
    pub fn final_simple_regret(&self) -> f64 {
        self.rows.last().map_or(f64::INFINITY, |r| r.simple_regret)
    }

    pub fn final_cumulative_regret(&self) -> f64 {
        self.rows
            .last()
            .map_or(f64::INFINITY, |r| r.cumulative_regret)
    }
}

/// Simple regret against the constructed optimum `f* = 1`. A best value of
/// negative infinity (no feasible point seen, impossible after a feasible
/// initial solution but defended) maps to positive infinity.
pub fn simple_regret(best_value: f64) -> f64 {
    1.0 - best_value
}

/// Prefix sums of per-iteration simple regrets.
pub fn cumulative_regret(simple: &[f64]) -> Vec<f64> {
    simple
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// Fraction of the population that is feasible under `a`.
pub fn feasible_fraction(population: &Population, a: &TransitionMatrix) -> Result<f64> {
    if population.is_empty() {
        return Err(Error::InvalidParam("population must be non-empty".into()));
    }
    let v = a.v();
    let mut feasible = 0usize;
    for row in population.rows() {
        if let Some(&bad) = row.iter().find(|&&s| s as usize >= v) {
            return Err(Error::InvalidParam(format!(
                "state {bad} out of range for v={v}"
            )));
        }
        feasible += usize::from(a.feasible_states(row));
    }
    Ok(feasible as f64 / population.len() as f64)
}

/// Nearest-rank quantile: the value of rank `ceil(p * n)` (1-based) in
/// ascending order. No interpolation, so results are reproducible across
/// implementations and well defined with infinite values. Reorders `values`.
pub fn nearest_rank_quantile(values: &mut [f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level must lie in [0, 1]");
    let n = values.len();
    let rank = ((p * n as f64).ceil() as usize).clamp(1, n);
    let (_, kth, _) = values.select_nth_unstable_by(rank - 1, |a, b| a.total_cmp(b));
    *kth
}

/// 10/50/90% quantile series over trials, one entry per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSeries {
    pub q10: Vec<f64>,
    pub q50: Vec<f64>,
    pub q90: Vec<f64>,
}

/// Quantile series for every traced metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregates {
    pub best_value: QuantileSeries,
    pub simple_regret: QuantileSeries,
    pub cumulative_regret: QuantileSeries,
    pub feasible_fraction: QuantileSeries,
}

impl MetricAggregates {
    pub fn metric(&self, name: &str) -> Option<&QuantileSeries> {
        match name {
            "best_value" => Some(&self.best_value),
            "simple_regret" => Some(&self.simple_regret),
            "cumulative_regret" => Some(&self.cumulative_regret),
            "feasible_fraction" => Some(&self.feasible_fraction),
            _ => None,
        }
    }

    pub const NAMES: [&'static str; 4] = [
        "best_value",
        "simple_regret",
        "cumulative_regret",
        "feasible_fraction",
    ];
}

/// The exact configuration a campaign ran with; re-running from this echo
/// reproduces the outputs byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub instance: InstanceParams,
    pub ga: GaConfig,
    pub trials: usize,
    pub campaign_seed: u64,
}

/// The aggregate side of a campaign: everything except the raw traces.
/// Serialized as the campaign JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub config: CampaignConfig,
    pub instance_hash: String,
    pub iterations: Vec<usize>,
    pub evals: Vec<u64>,
    pub metrics: MetricAggregates,
}

/// Full campaign output: the summary plus every per-trial trace.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub summary: CampaignSummary,
    pub traces: Vec<TrialTrace>,
}

/// Runs `trials` independent optimizations of `inst` and aggregates them.
/// Trial `t` draws all of its randomness from the stream
/// `(campaign_seed, "trial/<t>")`; trials may execute concurrently and the
/// result is independent of thread count and trial order.
pub fn run_campaign(
    inst: &EhrlichInstance,
    ga: &GaConfig,
    trials: usize,
    campaign_seed: u64,
) -> Result<CampaignResult> {
    if trials < 1 {
        return Err(Error::InvalidParam("trials must be >= 1".into()));
    }
    ga.validate()?;
    // f* = 1 is the regret reference; refuse to run if the certificate does
    // not witness it.
    let cert_value = inst.raw_objective(inst.certificate().states());
    if cert_value != 1.0 {
        return Err(Error::InvalidParam(format!(
            "instance certificate scores {cert_value}, expected exactly 1"
        )));
    }

    let traces: Vec<TrialTrace> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = RngStream::derive(campaign_seed, &format!("trial/{t}"));
            run_ga(inst, ga, &mut rng).map(|(_, trace)| trace)
        })
        .collect::<Result<_>>()?;

    let (iterations, evals, metrics) = aggregate_traces(&traces)?;
    Ok(CampaignResult {
        summary: CampaignSummary {
            config: CampaignConfig {
                instance: inst.params().clone(),
                ga: ga.clone(),
                trials,
                campaign_seed,
            },
            instance_hash: inst.descriptor_hash()?,
            iterations,
            evals,
            metrics,
        },
        traces,
    })
}

/// Aggregates traces per iteration per metric at the 10/50/90% nearest-rank
/// quantiles. Insensitive to trace order.
pub fn aggregate_traces(
    traces: &[TrialTrace],
) -> Result<(Vec<usize>, Vec<u64>, MetricAggregates)> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidParam("no traces to aggregate".into()))?;
    let len = first.rows.len();
    if len == 0 || traces.iter().any(|t| t.rows.len() != len) {
        return Err(Error::InvalidParam(
            "traces must be non-empty and of equal length".into(),
        ));
    }
    let iterations: Vec<usize> = first.rows.iter().map(|r| r.iteration).collect();
    let evals: Vec<u64> = first.rows.iter().map(|r| r.evals).collect();

    let series = |extract: fn(&TraceRow) -> f64| -> QuantileSeries {
        let mut q10 = Vec::with_capacity(len);
        let mut q50 = Vec::with_capacity(len);
        let mut q90 = Vec::with_capacity(len);
        let mut buf = vec![0.0; traces.len()];
        for i in 0..len {
            for (slot, trace) in buf.iter_mut().zip(traces) {
                *slot = extract(&trace.rows[i]);
            }
            q10.push(nearest_rank_quantile(&mut buf, 0.1));
            q50.push(nearest_rank_quantile(&mut buf, 0.5));
            q90.push(nearest_rank_quantile(&mut buf, 0.9));
        }
        QuantileSeries { q10, q50, q90 }
    };

    Ok((
        iterations,
        evals,
        MetricAggregates {
            best_value: series(|r| r.best_value),
            simple_regret: series(|r| r.simple_regret),
            cumulative_regret: series(|r| r.cumulative_regret),
            feasible_fraction: series(|r| r.feasible_fraction),
        },
    ))
}

/// CSV header of the per-trial trace file.
pub const TRACE_CSV_HEADER: &str =
    "trial,iteration,evals,best_value,simple_regret,cumulative_regret,feasible_frac";

/// Writes every trial trace as CSV.
pub fn write_trace_csv<W: Write>(result: &CampaignResult, mut writer: W) -> Result<()> {
    writeln!(writer, "{TRACE_CSV_HEADER}")?;
    for (trial, trace) in result.traces.iter().enumerate() {
        for row in &trace.rows {
            writeln!(
                writer,
                "{trial},{},{},{},{},{},{}",
                row.iteration,
                row.evals,
                row.best_value,
                row.simple_regret,
                row.cumulative_regret,
                row.feasible_fraction
            )?;
        }
    }
    Ok(())
}

/// The campaign JSON file bytes (config echo, instance hash, quantile
/// arrays). Deterministic for a given summary.
pub fn campaign_json_bytes(summary: &CampaignSummary) -> Result<Vec<u8>> {
    to_canonical_json(summary)
}
