//! Procedurally generated Ehrlich test functions for discrete sequence
//! optimization, plus a genetic-algorithm baseline and a multi-seed benchmark
//! harness.
//!
//! An Ehrlich function scores a sequence of discrete states by how well it
//! simultaneously satisfies a set of spaced motifs, quantized to `q` levels
//! per motif, and returns negative infinity for any sequence that is
//! infeasible under a random ergodic Markov process. Instances are generated
//! with a verified optimal solution (value exactly 1), adjustable difficulty
//! knobs (`v`, `L`, `c`, `k`, `q`), and portable self-contained JSON files.
//!
//! ```
//! use ehrlich::{EhrlichInstance, GaConfig, InstanceParams, run_campaign};
//!
//! let inst = EhrlichInstance::generate(InstanceParams::new(8, 32, 2, 2, 2)).unwrap();
//! let ga = GaConfig {
//!     num_particles: 128,
//!     survival_quantile: 0.05,
//!     mutation_prob: 1.0 / 32.0,
//!     recombine_prob: 1.0 / 32.0,
//!     iterations: 20,
//! };
//! let result = run_campaign(&inst, &ga, 4, 0).unwrap();
//! assert!(result.summary.metrics.simple_regret.q50.last().unwrap() <= &1.0);
//! ```

pub mod bench;
mod error;
pub mod ga;
pub mod instance;
pub mod io;
pub mod markov;
pub mod motif;
mod rng;
mod seq;

pub use bench::{
    aggregate_traces, campaign_json_bytes, cumulative_regret, feasible_fraction,
    nearest_rank_quantile, run_campaign, simple_regret, write_trace_csv, CampaignConfig,
    CampaignResult, CampaignSummary, MetricAggregates, QuantileSeries, TraceRow, TrialTrace,
};
pub use error::{Error, Result};
pub use ga::{ga_step, mutate, mutate_in_place, recombine, run_ga, GaConfig, GaState, Population};
pub use instance::{motif_satisfaction, EhrlichInstance, EvalCounter, InstanceParams};
pub use io::to_canonical_json;
pub use markov::{
    default_bandwidth, infeasible_prob_lower_bound, is_ergodic_pattern, BandMask,
    TransitionMatrix, DEFAULT_TEMPERATURE,
};
pub use motif::{construct_certificate, sample_motif_elements, sample_offsets, MotifSet, SpacedMotif};
pub use rng::{derive_stream, RngStream};
pub use seq::{Sequence, StateId};
