//! Random ergodic transition matrices with infeasible transitions.
//!
//! A discrete Markov process over `v` states defines the feasible set: a
//! sequence is feasible iff every adjacent state transition has positive
//! probability. Matrices are drawn by softmaxing a Gaussian logit matrix,
//! zeroing entries outside a row-shuffled circulant band (diagonal forced on),
//! and renormalizing rows. Ergodicity is verified on the boolean zero pattern,
//! never on floating-point matrix powers, so large `v` cannot underflow.

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::seq::{Sequence, StateId};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

/// Bandwidth used by default when generating instances: `(v * 2) // 5`.
pub fn default_bandwidth(v: usize) -> usize {
    v * 2 / 5
}

/// Softmax temperature used by default when generating instances.
pub const DEFAULT_TEMPERATURE: f64 = 0.5;

/// Attempts at drawing an ergodic matrix (or a fitting offset vector) before
/// giving up with a generation error.
pub const MAX_GENERATION_ATTEMPTS: usize = 32;

/// Boolean sparsity pattern for a transition matrix: a circulant band of the
/// given bandwidth, rows permuted, diagonal forced on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BandMask {
    v: usize,
    bandwidth: usize,
    permutation: Vec<usize>,
    bits: Vec<bool>,
}

impl BandMask {
    /// Unpermuted circulant band: entry `(i, j)` is set iff the circular
    /// distance `min((j - i) mod v, (i - j) mod v)` is at most `bandwidth`.
    pub fn circulant(v: usize, bandwidth: usize) -> Result<Self> {
        Self::permuted(v, bandwidth, (0..v).collect())
    }

    /// Circulant band with row `i` taken from band row `permutation[i]`, then
    /// the diagonal forced on.
    pub fn permuted(v: usize, bandwidth: usize, permutation: Vec<usize>) -> Result<Self> {
        if v < 2 {
            return Err(Error::InvalidParam(format!("v must be >= 2, got {v}")));
        }
        if bandwidth >= v {
            return Err(Error::InvalidParam(format!(
                "bandwidth must be in [0, v), got {bandwidth} for v={v}"
            )));
        }
        let mut seen = vec![false; v];
        if permutation.len() != v || !permutation.iter().all(|&p| p < v && !std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParam(format!(
                "row permutation must be a permutation of 0..{v}"
            )));
        }
        let mut bits = vec![false; v * v];
        for i in 0..v {
            let src = permutation[i];
            for j in 0..v {
                bits[i * v + j] = in_band(v, bandwidth, src, j);
            }
            bits[i * v + i] = true;
        }
        Ok(Self {
            v,
            bandwidth,
            permutation,
            bits,
        })
    }

    /// Band mask with a uniformly random row permutation.
    pub fn sample(v: usize, bandwidth: usize, rng: &mut RngStream) -> Result<Self> {
        if v < 2 {
            return Err(Error::InvalidParam(format!("v must be >= 2, got {v}")));
        }
        let mut permutation: Vec<usize> = (0..v).collect();
        permutation.shuffle(rng);
        Self::permuted(v, bandwidth, permutation)
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.v + j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.v..(i + 1) * self.v]
    }

    /// Number of unset (infeasible) entries.
    pub fn zero_count(&self) -> usize {
        self.bits.iter().filter(|&&b| !b).count()
    }
}

fn in_band(v: usize, bandwidth: usize, i: usize, j: usize) -> bool {
    let d = (j + v - i) % v;
    d.min(v - d) <= bandwidth
}

/// Row-stochastic matrix over `v` states with the zero pattern of a
/// [`BandMask`]. Immutable once built; safe to share across evaluators.
///
/// Construction enforces: rows sum to 1 within 1e-9, probabilities are zero
/// exactly where the mask is unset (no epsilon), the diagonal is positive, and
/// the zero pattern passes the ergodicity check.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    mask: BandMask,
    temperature: f64,
    probs: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds a matrix from raw Gaussian logits: row-wise softmax of
    /// `z / temperature`, elementwise mask, row renormalization.
    ///
    /// `z` is row-major with `v * v` entries. Fails with a generation error if
    /// the masked pattern is not ergodic.
    pub fn from_logits(mask: BandMask, z: &[f64], temperature: f64) -> Result<Self> {
        let v = mask.v();
        if z.len() != v * v {
            return Err(Error::InvalidParam(format!(
                "logit matrix must have {} entries, got {}",
                v * v,
                z.len()
            )));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidParam(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        let mut probs = vec![0.0; v * v];
        for i in 0..v {
            let row = &z[i * v..(i + 1) * v];
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for j in 0..v {
                if mask.entry(i, j) {
                    let e = ((row[j] - max) / temperature).exp();
                    probs[i * v + j] = e;
                    sum += e;
                }
            }
            for j in 0..v {
                probs[i * v + j] /= sum;
            }
        }
        Self::from_probs(mask, temperature, probs)
    }

    /// Reassembles a matrix from explicit probabilities (instance files),
    /// validating every construction invariant.
    pub fn from_probs(mask: BandMask, temperature: f64, probs: Vec<f64>) -> Result<Self> {
        let v = mask.v();
        if probs.len() != v * v {
            return Err(Error::InvalidParam(format!(
                "probability matrix must have {} entries, got {}",
                v * v,
                probs.len()
            )));
        }
        if !(temperature > 0.0) {
            return Err(Error::InvalidParam(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        for i in 0..v {
            let mut sum = 0.0;
            for j in 0..v {
                let p = probs[i * v + j];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidParam(format!(
                        "probability ({i}, {j}) = {p} outside [0, 1]"
                    )));
                }
                if (p == 0.0) != !mask.entry(i, j) {
                    return Err(Error::InvalidParam(format!(
                        "zero pattern disagrees with mask at ({i}, {j})"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParam(format!(
                    "row {i} sums to {sum}, expected 1 within 1e-9"
                )));
            }
        }
        let out = Self {
            mask,
            temperature,
            probs,
        };
        if !out.is_ergodic() {
            return Err(Error::Generation(
                "masked transition pattern is not ergodic".into(),
            ));
        }
        Ok(out)
    }

    /// Draws a random ergodic transition matrix: IID standard-normal logits
    /// through [`Self::from_logits`], retrying with a fresh permutation and
    /// fresh logits if the ergodicity check fails.
    pub fn sample(
        v: usize,
        bandwidth: usize,
        temperature: f64,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidParam(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            let mask = BandMask::sample(v, bandwidth, rng)?;
            let z: Vec<f64> = (0..v * v).map(|_| rng.sample(StandardNormal)).collect();
            match Self::from_logits(mask, &z, temperature) {
                Ok(matrix) => return Ok(matrix),
                Err(Error::Generation(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::Generation(format!(
            "no ergodic transition matrix after {MAX_GENERATION_ATTEMPTS} attempts \
             (v={v}, bandwidth={bandwidth})"
        )))
    }

    pub fn v(&self) -> usize {
        self.mask.v()
    }

    pub fn mask(&self) -> &BandMask {
        &self.mask
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.v() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let v = self.v();
        &self.probs[i * v..(i + 1) * v]
    }

    /// Row-major probabilities, `v * v` entries.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Whether the single transition `from -> to` is feasible.
    pub fn allows(&self, from: StateId, to: StateId) -> bool {
        self.prob(from as usize, to as usize) > 0.0
    }

    /// Perron-Frobenius check on the zero pattern; true for every matrix this
    /// module constructs.
    pub fn is_ergodic(&self) -> bool {
        let v = self.v();
        is_ergodic_pattern(v, |i, j| self.probs[i * v + j] > 0.0)
    }

    /// Draws a sequence from the process: first state uniform over `[0, v)`,
    /// each following state from the row of its predecessor. The result is
    /// feasible by construction.
    pub fn sample_sequence(&self, length: usize, rng: &mut RngStream) -> Sequence {
        assert!(length >= 1, "sequence length must be >= 1");
        let v = self.v();
        let mut states = Vec::with_capacity(length);
        let mut current = rng.random_range(0..v);
        states.push(current as StateId);
        for _ in 1..length {
            current = self.sample_next(current, rng);
            states.push(current as StateId);
        }
        Sequence::new(states)
    }

    fn sample_next(&self, from: usize, rng: &mut RngStream) -> usize {
        let row = self.row(from);
        let u: f64 = rng.random();
        let mut cum = 0.0;
        let mut last_positive = from;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                cum += p;
                last_positive = j;
                if u < cum {
                    return j;
                }
            }
        }
        // Rounding left u just above the accumulated sum; the last feasible
        // state absorbs the remainder.
        last_positive
    }

    /// Whether every adjacent transition of `x` is feasible. Sequences of
    /// length 0 or 1 are feasible.
    pub fn is_feasible(&self, x: &Sequence) -> Result<bool> {
        let v = self.v() as u32;
        if let Some(&bad) = x.states().iter().find(|&&s| (s as u32) >= v) {
            return Err(Error::InvalidParam(format!(
                "state {bad} out of range for v={v}"
            )));
        }
        Ok(self.feasible_states(x.states()))
    }

    pub(crate) fn feasible_states(&self, states: &[StateId]) -> bool {
        let v = self.v();
        states.windows(2).all(|w| {
            debug_assert!((w[0] as usize) < v && (w[1] as usize) < v);
            self.probs[w[0] as usize * v + w[1] as usize] > 0.0
        })
    }
}

/// Perron-Frobenius primitivity check on an arbitrary boolean transition
/// pattern: true iff the boolean `m`-th power of the pattern is all-ones,
/// with `m = (v - 1)^2 + 1` (Wielandt exponent). Equivalent to
/// `(A^m)[i][j] > 0` for all `i, j` but immune to floating-point underflow.
pub fn is_ergodic_pattern(v: usize, has_edge: impl Fn(usize, usize) -> bool) -> bool {
    assert!(v >= 1);
    let words = v.div_ceil(64);
    let mut base = vec![0u64; v * words];
    for i in 0..v {
        for j in 0..v {
            if has_edge(i, j) {
                base[i * words + j / 64] |= 1u64 << (j % 64);
            }
        }
    }
    let m = (v - 1) * (v - 1) + 1;
    let power = bool_mat_pow(&base, m, v, words);
    all_ones(&power, v, words)
}

fn bool_mat_mul(a: &[u64], b: &[u64], v: usize, words: usize) -> Vec<u64> {
    let mut out = vec![0u64; v * words];
    for i in 0..v {
        let arow = &a[i * words..(i + 1) * words];
        let orow = i * words;
        for j in 0..v {
            if arow[j / 64] >> (j % 64) & 1 == 1 {
                let brow = &b[j * words..(j + 1) * words];
                for w in 0..words {
                    out[orow + w] |= brow[w];
                }
            }
        }
    }
    out
}

fn bool_mat_pow(base: &[u64], mut exp: usize, v: usize, words: usize) -> Vec<u64> {
    // Boolean identity.
    let mut result = vec![0u64; v * words];
    for i in 0..v {
        result[i * words + i / 64] |= 1u64 << (i % 64);
    }
    let mut sq = base.to_vec();
    while exp > 0 {
        if exp & 1 == 1 {
            result = bool_mat_mul(&result, &sq, v, words);
        }
        exp >>= 1;
        if exp > 0 {
            sq = bool_mat_mul(&sq, &sq, v, words);
        }
    }
    result
}

fn all_ones(mat: &[u64], v: usize, words: usize) -> bool {
    for i in 0..v {
        for w in 0..words {
            let bits_here = if w == words - 1 && v % 64 != 0 {
                (1u64 << (v % 64)) - 1
            } else {
                u64::MAX
            };
            if mat[i * words + w] & bits_here != bits_here {
                return false;
            }
        }
    }
    true
}

/// Lower bound on the probability that a uniform random length-`len` sequence
/// is infeasible, valid whenever the matrix has at least one zero entry:
/// `1 - (1 - 1/v^2)^(len // 2)`.
pub fn infeasible_prob_lower_bound(v: usize, len: usize) -> f64 {
    assert!(v >= 2 && len >= 2);
    let q = 1.0 - 1.0 / (v as f64 * v as f64);
    1.0 - q.powi((len / 2) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn mask_rows(mask: &BandMask) -> Vec<Vec<u8>> {
        (0..mask.v())
            .map(|i| mask.row(i).iter().map(|&b| b as u8).collect())
            .collect()
    }

    #[test]
    fn circulant_band_v4_bw1() {
        let mask = BandMask::circulant(4, 1).unwrap();
        assert_eq!(
            mask_rows(&mask),
            vec![
                vec![1, 1, 0, 1],
                vec![1, 1, 1, 0],
                vec![0, 1, 1, 1],
                vec![1, 0, 1, 1],
            ]
        );
    }

    #[test]
    fn worked_example_permutation_and_diag_forcing() {
        // Row order [3, 1, 0, 2] of the bandwidth-1 circulant; forcing the
        // diagonal flips entry (2, 2).
        let mask = BandMask::permuted(4, 1, vec![3, 1, 0, 2]).unwrap();
        assert_eq!(
            mask_rows(&mask),
            vec![
                vec![1, 0, 1, 1],
                vec![1, 1, 1, 0],
                vec![1, 1, 1, 1],
                vec![0, 1, 1, 1],
            ]
        );
    }

    #[test]
    fn wide_band_is_all_true() {
        let mask = BandMask::circulant(4, 3).unwrap();
        assert_eq!(mask.zero_count(), 0);
    }

    #[test]
    fn bandwidth_out_of_range_rejected() {
        assert!(matches!(
            BandMask::circulant(4, 4),
            Err(Error::InvalidParam(_))
        ));
        assert!(matches!(
            BandMask::sample(1, 0, &mut derive_stream(0, "m")),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn row_counts_uniform_up_to_diag_forcing() {
        let mut rng = derive_stream(11, "mask");
        let mask = BandMask::sample(9, 2, &mut rng).unwrap();
        let base = 2 * 2 + 1;
        for i in 0..9 {
            let count = mask.row(i).iter().filter(|&&b| b).count();
            assert!(count == base || count == base + 1, "row {i}: {count}");
        }
    }

    #[test]
    fn sampled_rows_sum_to_one_and_match_mask() {
        let mut rng = derive_stream(5, "matrix");
        for &v in &[4usize, 8, 32] {
            let bw = default_bandwidth(v);
            let a = TransitionMatrix::sample(v, bw, 0.5, &mut rng).unwrap();
            for i in 0..v {
                let sum: f64 = a.row(i).iter().sum();
                assert!((sum - 1.0).abs() < 1e-9, "v={v} row {i} sums to {sum}");
                for j in 0..v {
                    assert_eq!(a.prob(i, j) == 0.0, !a.mask().entry(i, j));
                }
                assert!(a.prob(i, i) > 0.0);
            }
            if bw < v - 1 {
                assert!(a.mask().zero_count() > 0);
            }
        }
    }

    #[test]
    fn identity_pattern_not_ergodic() {
        assert!(!is_ergodic_pattern(4, |i, j| i == j));
    }

    #[test]
    fn cycle_pattern_not_ergodic() {
        // Pure 4-cycle: period 4, so the 10-step pattern keeps zeros.
        assert!(!is_ergodic_pattern(4, |i, j| j == (i + 1) % 4));
    }

    #[test]
    fn cycle_with_self_loop_is_ergodic() {
        assert!(is_ergodic_pattern(5, |i, j| j == (i + 1) % 5 || i == j));
    }

    #[test]
    fn large_pattern_no_underflow() {
        // Float powers of this matrix would underflow long before m = 3970;
        // the pattern check must not.
        let v = 64;
        assert!(is_ergodic_pattern(v, |i, j| j == (i + 1) % v || i == j));
    }

    #[test]
    fn sampled_sequences_are_feasible() {
        let mut rng = derive_stream(1, "matrix");
        let a = TransitionMatrix::sample(8, 3, 0.5, &mut rng).unwrap();
        let mut srng = derive_stream(1, "seq");
        for _ in 0..100 {
            let x = a.sample_sequence(17, &mut srng);
            assert!(a.is_feasible(&x).unwrap());
        }
        let single = a.sample_sequence(1, &mut srng);
        assert_eq!(single.len(), 1);
        assert!(a.is_feasible(&single).unwrap());
    }

    #[test]
    fn self_transitions_always_feasible() {
        let mut rng = derive_stream(2, "matrix");
        let a = TransitionMatrix::sample(6, 2, 0.5, &mut rng).unwrap();
        let x = Sequence::new(vec![2; 40]);
        assert!(a.is_feasible(&x).unwrap());
    }

    #[test]
    fn out_of_range_state_is_param_error() {
        let mut rng = derive_stream(2, "matrix");
        let a = TransitionMatrix::sample(4, 1, 0.5, &mut rng).unwrap();
        let x = Sequence::new(vec![0, 4]);
        assert!(matches!(a.is_feasible(&x), Err(Error::InvalidParam(_))));
    }

    #[test]
    fn feasibility_matches_naive_scan_exhaustively() {
        let mut rng = derive_stream(3, "matrix");
        let v = 4usize;
        let a = TransitionMatrix::sample(v, 1, 0.5, &mut rng).unwrap();
        for code in 0..v * v * v {
            let x = Sequence::new(vec![
                (code % v) as StateId,
                (code / v % v) as StateId,
                (code / (v * v)) as StateId,
            ]);
            let naive = (0..2).all(|i| a.prob(x[i] as usize, x[i + 1] as usize) > 0.0);
            assert_eq!(a.is_feasible(&x).unwrap(), naive);
        }
    }

    #[test]
    fn transition_frequencies_match_rows() {
        // Empirical next-state distribution of length-2 draws against the
        // matrix rows, 1e5 draws.
        let mut rng = derive_stream(4, "matrix");
        let v = 4usize;
        let a = TransitionMatrix::sample(v, 1, 1.0, &mut rng).unwrap();
        let mut srng = derive_stream(4, "seq");
        let mut counts = vec![vec![0u32; v]; v];
        let mut starts = vec![0u32; v];
        for _ in 0..100_000 {
            let x = a.sample_sequence(2, &mut srng);
            counts[x[0] as usize][x[1] as usize] += 1;
            starts[x[0] as usize] += 1;
        }
        for i in 0..v {
            assert!(starts[i] > 0);
            for j in 0..v {
                let freq = counts[i][j] as f64 / starts[i] as f64;
                assert!(
                    (freq - a.prob(i, j)).abs() < 0.01,
                    "({i},{j}): {freq} vs {}",
                    a.prob(i, j)
                );
            }
        }
    }

    #[test]
    fn permuted_bands_stay_irreducible() {
        // 100 random permutations of a diagonal-forced circulant band.
        let mut rng = derive_stream(9, "perm");
        for _ in 0..100 {
            let mask = BandMask::sample(7, 2, &mut rng).unwrap();
            assert!(is_ergodic_pattern(7, |i, j| mask.entry(i, j)));
        }
    }

    #[test]
    fn infeasible_bound_values() {
        assert!((infeasible_prob_lower_bound(4, 2) - 0.0625).abs() < 1e-15);
        let expected = 1.0 - (1.0 - 1.0 / 1024.0f64).powi(128);
        assert!((infeasible_prob_lower_bound(32, 256) - expected).abs() < 1e-15);
        for &v in &[2usize, 8, 32] {
            assert!(1.0 - infeasible_prob_lower_bound(v, 2_000_000) < 1e-9);
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let a = TransitionMatrix::sample(8, 3, 0.5, &mut derive_stream(7, "matrix")).unwrap();
        let b = TransitionMatrix::sample(8, 3, 0.5, &mut derive_stream(7, "matrix")).unwrap();
        assert_eq!(a, b);
    }
}
