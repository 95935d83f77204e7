//! The Ehrlich objective: quantized spaced-motif satisfaction gated by
//! feasibility under the transition matrix.
//!
//! For a feasible sequence the value is the product over motifs of the
//! quantized satisfaction score; infeasible sequences score negative
//! infinity. Every finite value lies on the lattice of products of multiples
//! of `1/q`, and the embedded certificate always scores exactly 1.

use crate::error::{Error, Result};
use crate::markov::{TransitionMatrix, DEFAULT_TEMPERATURE};
use crate::motif::{MotifSet, SpacedMotif};
use crate::rng::RngStream;
use crate::seq::{Sequence, StateId};
use serde::{Deserialize, Serialize};
use std::cell::RefCell;
use std::sync::atomic::{AtomicU64, Ordering};

/// Parameters defining one procedurally generated instance.
///
/// Serialized field names follow the instance file schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceParams {
    /// Vocabulary size `v`.
    #[serde(rename = "v")]
    pub vocab_size: usize,
    /// Sequence length `L`.
    #[serde(rename = "L")]
    pub seq_len: usize,
    /// Number of motifs `c`.
    #[serde(rename = "c")]
    pub num_motifs: usize,
    /// Motif length `k`.
    #[serde(rename = "k")]
    pub motif_len: usize,
    /// Quantization `q`: the number of attainable nonzero score levels per
    /// motif. Must divide `k`.
    #[serde(rename = "q")]
    pub quantization: usize,
    /// Band mask bandwidth.
    pub bandwidth: usize,
    /// Softmax temperature for matrix sampling.
    pub temperature: f64,
    /// Root seed for generation.
    pub seed: u64,
    /// Flip the sign of finite values (minimizer convention); infeasible
    /// sequences then score positive infinity.
    #[serde(default)]
    pub negate: bool,
}

impl InstanceParams {
    /// Parameters with the stock bandwidth `(v * 2) // 5`, temperature 0.5,
    /// seed 0, and no negation.
    pub fn new(
        vocab_size: usize,
        seq_len: usize,
        num_motifs: usize,
        motif_len: usize,
        quantization: usize,
    ) -> Self {
        Self {
            vocab_size,
            seq_len,
            num_motifs,
            motif_len,
            quantization,
            bandwidth: crate::markov::default_bandwidth(vocab_size),
            temperature: DEFAULT_TEMPERATURE,
            seed: 0,
            negate: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let Self {
            vocab_size: v,
            seq_len: len,
            num_motifs: c,
            motif_len: k,
            quantization: q,
            bandwidth,
            temperature,
            ..
        } = *self;
        if v < 2 {
            return Err(Error::InvalidParam(format!("v must be >= 2, got {v}")));
        }
        if v > StateId::MAX as usize + 1 {
            return Err(Error::InvalidParam(format!(
                "v must be <= {}, got {v}",
                StateId::MAX as usize + 1
            )));
        }
        if len < 2 {
            return Err(Error::InvalidParam(format!("L must be >= 2, got {len}")));
        }
        if c < 1 || k < 1 {
            return Err(Error::InvalidParam(format!(
                "need c >= 1 and k >= 1, got c={c}, k={k}"
            )));
        }
        if c * k > len {
            return Err(Error::InvalidParam(format!(
                "need c*k <= L, got c={c}, k={k}, L={len}"
            )));
        }
        if q < 1 || q > k || k % q != 0 {
            return Err(Error::InvalidParam(format!(
                "q must divide k with 1 <= q <= k, got q={q}, k={k}"
            )));
        }
        if bandwidth >= v {
            return Err(Error::InvalidParam(format!(
                "bandwidth must be in [0, v), got {bandwidth} for v={v}"
            )));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidParam(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        Ok(())
    }
}

/// Linearizable count of objective evaluations. Batch evaluations increment
/// once by the batch size.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn total(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }

    fn add(&self, n: u64) {
        self.0.fetch_add(n, Ordering::Relaxed);
    }
}

impl Clone for EvalCounter {
    fn clone(&self) -> Self {
        Self(AtomicU64::new(self.total()))
    }
}

/// A complete test function: transition matrix, motif set, quantization, and
/// the verified optimal certificate. Immutable and shareable across threads;
/// only the evaluation counter mutates (atomically).
#[derive(Debug, Clone)]
pub struct EhrlichInstance {
    params: InstanceParams,
    matrix: TransitionMatrix,
    motif_set: MotifSet,
    counter: EvalCounter,
}

impl EhrlichInstance {
    /// Procedurally generates an instance from its parameters. The matrix and
    /// motif draws use independent streams derived from `params.seed`, and
    /// the certificate is verified to score exactly 1 before returning.
    pub fn generate(params: InstanceParams) -> Result<Self> {
        params.validate()?;
        let mut matrix_rng = RngStream::derive(params.seed, "matrix");
        let matrix = TransitionMatrix::sample(
            params.vocab_size,
            params.bandwidth,
            params.temperature,
            &mut matrix_rng,
        )?;
        let mut motif_rng = RngStream::derive(params.seed, "motifs");
        let motif_set = MotifSet::sample(
            &matrix,
            params.seq_len,
            params.num_motifs,
            params.motif_len,
            &mut motif_rng,
        )?;
        Self::from_parts(params, matrix, motif_set)
    }

    /// Assembles an instance from explicit parts, enforcing the cross-module
    /// invariants (used by generation and by instance file loading).
    pub fn from_parts(
        params: InstanceParams,
        matrix: TransitionMatrix,
        motif_set: MotifSet,
    ) -> Result<Self> {
        params.validate()?;
        if matrix.v() != params.vocab_size {
            return Err(Error::InvalidParam(format!(
                "matrix has {} states, params say {}",
                matrix.v(),
                params.vocab_size
            )));
        }
        if motif_set.motifs().len() != params.num_motifs {
            return Err(Error::InvalidParam(format!(
                "{} motifs, params say {}",
                motif_set.motifs().len(),
                params.num_motifs
            )));
        }
        for motif in motif_set.motifs() {
            if motif.len() != params.motif_len {
                return Err(Error::InvalidParam(format!(
                    "motif length {} does not match k={}",
                    motif.len(),
                    params.motif_len
                )));
            }
            if motif.span() > params.seq_len - 1 {
                return Err(Error::InvalidParam(format!(
                    "motif span {} exceeds L-1={}",
                    motif.span(),
                    params.seq_len - 1
                )));
            }
        }
        if motif_set.certificate().len() != params.seq_len {
            return Err(Error::InvalidParam(format!(
                "certificate length {} does not match L={}",
                motif_set.certificate().len(),
                params.seq_len
            )));
        }
        let instance = Self {
            params,
            matrix,
            motif_set,
            counter: EvalCounter::default(),
        };
        let cert_value = instance.raw_objective(instance.certificate().states());
        if cert_value != 1.0 {
            return Err(Error::Generation(format!(
                "certificate scores {cert_value}, expected exactly 1"
            )));
        }
        Ok(instance)
    }

    pub fn params(&self) -> &InstanceParams {
        &self.params
    }

    pub fn matrix(&self) -> &TransitionMatrix {
        &self.matrix
    }

    pub fn motif_set(&self) -> &MotifSet {
        &self.motif_set
    }

    pub fn certificate(&self) -> &Sequence {
        self.motif_set.certificate()
    }

    pub fn counter(&self) -> &EvalCounter {
        &self.counter
    }

    /// Sequence length `L`.
    pub fn seq_len(&self) -> usize {
        self.params.seq_len
    }

    /// Vocabulary size `v`.
    pub fn vocab_size(&self) -> usize {
        self.params.vocab_size
    }

    /// Evaluates one sequence. Infeasible sequences score negative infinity
    /// (positive infinity when `negate` is set).
    pub fn evaluate(&self, x: &Sequence) -> Result<f64> {
        self.validate_sequence(x.states())?;
        Ok(self.evaluate_states(x.states()))
    }

    /// Evaluates a batch elementwise with a single counter increment.
    pub fn evaluate_batch(&self, xs: &[Sequence]) -> Result<Vec<f64>> {
        for x in xs {
            self.validate_sequence(x.states())?;
        }
        self.counter.add(xs.len() as u64);
        Ok(xs
            .iter()
            .map(|x| self.signed(self.raw_objective(x.states())))
            .collect())
    }

    /// One draw from the underlying process: the fixed initial-solution
    /// policy. Always feasible.
    pub fn initial_solution(&self, rng: &mut RngStream) -> Sequence {
        self.matrix.sample_sequence(self.params.seq_len, rng)
    }

    fn validate_sequence(&self, states: &[StateId]) -> Result<()> {
        if states.len() != self.params.seq_len {
            return Err(Error::InvalidParam(format!(
                "sequence length {} does not match L={}",
                states.len(),
                self.params.seq_len
            )));
        }
        if let Some(&bad) = states.iter().find(|&&s| s as usize >= self.params.vocab_size) {
            return Err(Error::InvalidParam(format!(
                "state {bad} out of range for v={}",
                self.params.vocab_size
            )));
        }
        Ok(())
    }

    /// Counted evaluation without argument validation; callers guarantee
    /// length `L` and states in `[0, v)`.
    pub(crate) fn evaluate_states(&self, states: &[StateId]) -> f64 {
        self.counter.add(1);
        self.signed(self.raw_objective(states))
    }

    /// The maximization-form value, ignoring `negate`. Used by the optimizer
    /// and the harness.
    pub(crate) fn raw_objective(&self, states: &[StateId]) -> f64 {
        if !self.matrix.feasible_states(states) {
            return f64::NEG_INFINITY;
        }
        let k = self.params.motif_len;
        let q = self.params.quantization;
        EVAL_SCRATCH.with(|scratch| {
            let mut counts = scratch.borrow_mut();
            counts.resize(states.len(), 0);
            let mut product = 1.0;
            for motif in self.motif_set.motifs() {
                let best = best_match_count(states, motif, &mut counts);
                product *= quantize(best, k, q);
                if product == 0.0 {
                    break;
                }
            }
            product
        })
    }

    fn signed(&self, value: f64) -> f64 {
        if self.params.negate {
            -value
        } else {
            value
        }
    }
}

thread_local! {
    static EVAL_SCRATCH: RefCell<Vec<u16>> = const { RefCell::new(Vec::new()) };
}

/// Quantized satisfaction of one motif: the best per-anchor match count
/// floored to `count // (k/q)` levels and scaled to `[0, 1]`. Exact integer
/// arithmetic keeps results on the lattice `{0, 1/q, ..., 1}`.
pub fn motif_satisfaction(x: &Sequence, motif: &SpacedMotif, q: usize) -> Result<f64> {
    let k = motif.len();
    if q < 1 || q > k || k % q != 0 {
        return Err(Error::InvalidParam(format!(
            "q must divide k with 1 <= q <= k, got q={q}, k={k}"
        )));
    }
    let mut counts = vec![0u16; x.len()];
    let best = best_match_count(x.states(), motif, &mut counts);
    Ok(quantize(best, k, q))
}

/// Best over anchors `l in [0, L)` of the number of motif positions matched;
/// indices `l + s_j >= L` never match. `counts` is caller-provided scratch of
/// length `L`.
fn best_match_count(states: &[StateId], motif: &SpacedMotif, counts: &mut [u16]) -> usize {
    counts.fill(0);
    for (&offset, &element) in motif.offsets().iter().zip(motif.elements()) {
        if offset >= states.len() {
            continue;
        }
        let shifted = &states[offset..];
        for (count, &state) in counts.iter_mut().zip(shifted) {
            *count += u16::from(state == element);
        }
    }
    counts.iter().copied().max().unwrap_or(0) as usize
}

fn quantize(count: usize, k: usize, q: usize) -> f64 {
    let step = k / q;
    (count / step) as f64 / q as f64
}
