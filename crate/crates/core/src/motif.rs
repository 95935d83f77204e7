//! Jointly satisfiable spaced motifs and the constructive optimum.
//!
//! Motif elements come from chunking a single draw of the underlying Markov
//! process, so adjacent elements (within and across motifs) are always
//! feasible transitions. Offsets spread the slack `L - c*k` positions across
//! the gaps inside each motif. Placing the motifs end-to-end and filling every
//! gap by repeating the previous element (self-transitions are always
//! feasible) yields a feasible sequence that satisfies all motifs at once:
//! the certificate that the global optimum value 1 is attainable.

use crate::error::{Error, Result};
use crate::markov::{TransitionMatrix, MAX_GENERATION_ATTEMPTS};
use crate::rng::RngStream;
use crate::seq::{Sequence, StateId};
use rand::Rng;
use rand_distr::Exp1;

/// One complementarity target: `k` required states at strictly increasing
/// offsets from an anchor position. `offsets[0]` is always 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpacedMotif {
    elements: Vec<StateId>,
    offsets: Vec<usize>,
}

impl SpacedMotif {
    pub fn new(elements: Vec<StateId>, offsets: Vec<usize>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidParam("motif must have k >= 1 elements".into()));
        }
        if elements.len() != offsets.len() {
            return Err(Error::InvalidParam(format!(
                "motif has {} elements but {} offsets",
                elements.len(),
                offsets.len()
            )));
        }
        if offsets[0] != 0 {
            return Err(Error::InvalidParam(format!(
                "first offset must be 0, got {}",
                offsets[0]
            )));
        }
        if !offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParam(format!(
                "offsets must be strictly increasing, got {offsets:?}"
            )));
        }
        Ok(Self { elements, offsets })
    }

    /// Motif length `k`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn elements(&self) -> &[StateId] {
        &self.elements
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Distance from the anchor to the last required position.
    pub fn span(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    /// Whether every required position relative to `anchor` matches in `x`.
    pub fn fully_matched_at(&self, x: &[StateId], anchor: usize) -> bool {
        self.offsets
            .iter()
            .zip(&self.elements)
            .all(|(&s, &m)| anchor + s < x.len() && x[anchor + s] == m)
    }
}

/// A collection of `c` jointly satisfiable motifs plus the constructed
/// certificate sequence that fully satisfies all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifSet {
    motifs: Vec<SpacedMotif>,
    certificate: Sequence,
}

impl MotifSet {
    /// Draws `c` motifs of length `k` against `a` and constructs the
    /// certificate for sequence length `len`.
    pub fn sample(
        a: &TransitionMatrix,
        len: usize,
        c: usize,
        k: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if c < 1 || k < 1 {
            return Err(Error::InvalidParam(format!(
                "need c >= 1 and k >= 1, got c={c}, k={k}"
            )));
        }
        if c * k > len {
            return Err(Error::InvalidParam(format!(
                "motifs need c*k <= L, got c={c}, k={k}, L={len}"
            )));
        }
        let chunks = sample_motif_elements(a, c, k, rng);
        // The end-to-end fit is guaranteed (the floor-sum of simplex weights
        // never exceeds the slack), but assert it and resample offsets if the
        // guarantee is ever violated.
        let mut last_err = None;
        for _ in 0..MAX_GENERATION_ATTEMPTS {
            let motifs: Result<Vec<SpacedMotif>> = chunks
                .iter()
                .map(|elements| {
                    let offsets = sample_offsets(k, len, c, rng)?;
                    SpacedMotif::new(elements.clone(), offsets)
                })
                .collect();
            let motifs = motifs?;
            match construct_certificate(&motifs, a, len) {
                Ok(certificate) => {
                    return Ok(Self {
                        motifs,
                        certificate,
                    })
                }
                Err(e @ Error::Generation(_)) => last_err = Some(e),
                Err(e) => return Err(e),
            }
        }
        Err(last_err.unwrap_or_else(|| {
            Error::Generation("motif placement failed with no recorded cause".into())
        }))
    }

    /// Reassembles a motif set from explicit parts (instance files),
    /// revalidating joint satisfiability of the certificate.
    pub fn from_parts(
        motifs: Vec<SpacedMotif>,
        certificate: Sequence,
        a: &TransitionMatrix,
    ) -> Result<Self> {
        if motifs.is_empty() {
            return Err(Error::InvalidParam("motif set must be non-empty".into()));
        }
        if !a.is_feasible(&certificate)? {
            return Err(Error::InvalidParam(
                "certificate is not feasible under the transition matrix".into(),
            ));
        }
        for (i, motif) in motifs.iter().enumerate() {
            let matched =
                (0..certificate.len()).any(|anchor| motif.fully_matched_at(&certificate, anchor));
            if !matched {
                return Err(Error::InvalidParam(format!(
                    "certificate does not satisfy motif {i}"
                )));
            }
        }
        Ok(Self {
            motifs,
            certificate,
        })
    }

    pub fn motifs(&self) -> &[SpacedMotif] {
        &self.motifs
    }

    pub fn certificate(&self) -> &Sequence {
        &self.certificate
    }
}

/// Draws one process sequence of length `c * k` and chunks it into `c`
/// element vectors of length `k`. Adjacent elements, within and across
/// chunks, are feasible transitions by construction.
pub fn sample_motif_elements(
    a: &TransitionMatrix,
    c: usize,
    k: usize,
    rng: &mut RngStream,
) -> Vec<Vec<StateId>> {
    assert!(c >= 1 && k >= 1);
    let draw = a.sample_sequence(c * k, rng);
    draw.states().chunks_exact(k).map(<[StateId]>::to_vec).collect()
}

/// Draws one offset vector: `s[0] = 0`, then cumulative gaps
/// `1 + floor(w_j * ((L - c*k) // c))` for `j = 2..k`, where `w` is uniform
/// on the `(k-1)`-simplex (`k` parts summing to 1; the first is unused slack
/// headroom). Gaps are in `[1, 1 + slack]`, offsets strictly increasing, and
/// because the used weights sum to at most 1 the total span never exceeds
/// `k - 1 + slack`.
pub fn sample_offsets(k: usize, len: usize, c: usize, rng: &mut RngStream) -> Result<Vec<usize>> {
    assert!(k >= 1 && c >= 1);
    if c * k > len {
        return Err(Error::InvalidParam(format!(
            "offsets need c*k <= L, got c={c}, k={k}, L={len}"
        )));
    }
    if k == 1 {
        return Ok(vec![0]);
    }
    let slack = (len - c * k) / c;
    for _ in 0..MAX_GENERATION_ATTEMPTS {
        let weights = simplex_draw(k, rng);
        let mut offsets = Vec::with_capacity(k);
        offsets.push(0usize);
        for &w in &weights[1..] {
            let gap = 1 + (w * slack as f64).floor() as usize;
            offsets.push(offsets.last().unwrap() + gap);
        }
        if *offsets.last().unwrap() <= k - 1 + slack {
            return Ok(offsets);
        }
    }
    Err(Error::Generation(format!(
        "offset span exceeded {} after {MAX_GENERATION_ATTEMPTS} attempts",
        k - 1 + slack
    )))
}

/// Uniform draw from the `(dim-1)`-simplex via normalized IID exponentials.
fn simplex_draw(dim: usize, rng: &mut RngStream) -> Vec<f64> {
    let mut draws: Vec<f64> = (0..dim).map(|_| rng.sample(Exp1)).collect();
    let total: f64 = draws.iter().sum();
    for d in &mut draws {
        *d /= total;
    }
    draws
}

/// Places the motifs end-to-end starting at position 0, fills positions
/// between motif elements by repeating the previous element, and fills the
/// tail by repeating the final element. The result is feasible and satisfies
/// every motif at its placement anchor; both are verified before returning.
pub fn construct_certificate(
    motifs: &[SpacedMotif],
    a: &TransitionMatrix,
    len: usize,
) -> Result<Sequence> {
    if motifs.is_empty() {
        return Err(Error::InvalidParam("motif set must be non-empty".into()));
    }
    let occupied: usize = motifs.iter().map(|m| m.span() + 1).sum();
    if occupied > len {
        return Err(Error::Generation(format!(
            "motifs span {occupied} positions end-to-end, exceeding L={len}"
        )));
    }

    let mut states = Vec::with_capacity(len);
    for motif in motifs {
        for (j, (&offset, &element)) in motif.offsets().iter().zip(motif.elements()).enumerate() {
            if j > 0 {
                let previous = motif.elements()[j - 1];
                let gap = offset - motif.offsets()[j - 1] - 1;
                states.extend(std::iter::repeat_n(previous, gap));
            }
            states.push(element);
        }
    }
    let last = *states.last().unwrap();
    states.resize(len, last);
    let certificate = Sequence::new(states);

    // Construction invariants; a failure here means the motif set was not
    // produced by the samplers above.
    if !a.is_feasible(&certificate)? {
        return Err(Error::Generation(
            "constructed certificate is infeasible".into(),
        ));
    }
    let mut anchor = 0;
    for (i, motif) in motifs.iter().enumerate() {
        if !motif.fully_matched_at(&certificate, anchor) {
            return Err(Error::Generation(format!(
                "constructed certificate does not satisfy motif {i}"
            )));
        }
        anchor += motif.span() + 1;
    }
    Ok(certificate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;

    fn test_matrix(v: usize, seed: u64) -> TransitionMatrix {
        TransitionMatrix::sample(v, v * 2 / 5, 0.5, &mut derive_stream(seed, "matrix")).unwrap()
    }

    #[test]
    fn chunking_splits_one_draw() {
        let a = test_matrix(8, 0);
        let mut rng = derive_stream(1, "motifs");
        let chunks = sample_motif_elements(&a, 3, 4, &mut rng);
        assert_eq!(chunks.len(), 3);
        assert!(chunks.iter().all(|c| c.len() == 4));
        let concat: Vec<StateId> = chunks.concat();
        assert!(a.is_feasible(&Sequence::new(concat)).unwrap());
    }

    #[test]
    fn degenerate_chunking_single_state() {
        let a = test_matrix(4, 2);
        let mut rng = derive_stream(2, "motifs");
        let chunks = sample_motif_elements(&a, 1, 1, &mut rng);
        assert_eq!(chunks.len(), 1);
        assert_eq!(chunks[0].len(), 1);
    }

    #[test]
    fn paper_chunking_example() {
        // Draw [0, 3, 1, 2] with c = 2, k = 2 chunks to [0, 3] and [1, 2].
        let draw: Vec<StateId> = vec![0, 3, 1, 2];
        let chunks: Vec<Vec<StateId>> = draw.chunks_exact(2).map(<[StateId]>::to_vec).collect();
        assert_eq!(chunks, vec![vec![0, 3], vec![1, 2]]);
    }

    #[test]
    fn offsets_k1_is_zero() {
        let mut rng = derive_stream(3, "offsets");
        assert_eq!(sample_offsets(1, 10, 2, &mut rng).unwrap(), vec![0]);
    }

    #[test]
    fn offsets_zero_slack_forces_unit_gaps() {
        let mut rng = derive_stream(4, "offsets");
        for _ in 0..50 {
            let s = sample_offsets(4, 12, 3, &mut rng).unwrap();
            assert_eq!(s, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn offsets_gap_range_matches_slack() {
        // L=8, c=2, k=2: slack is 2, so the single gap lies in {1, 2, 3}.
        let mut rng = derive_stream(5, "offsets");
        let mut seen = [false; 4];
        for _ in 0..500 {
            let s = sample_offsets(2, 8, 2, &mut rng).unwrap();
            assert_eq!(s[0], 0);
            assert!((1..=3).contains(&s[1]), "gap {} out of range", s[1]);
            seen[s[1]] = true;
        }
        // Gap 3 needs the whole weight on one coordinate, so it only shows
        // up as the supremum; 1 and 2 must both occur.
        assert!(seen[1] && seen[2]);
    }

    #[test]
    fn offset_gaps_bounded_over_many_draws() {
        let mut rng = derive_stream(6, "offsets");
        let (k, len, c) = (5usize, 40usize, 3usize);
        let slack = (len - c * k) / c;
        for _ in 0..10_000 {
            let s = sample_offsets(k, len, c, &mut rng).unwrap();
            for w in s.windows(2) {
                let gap = w[1] - w[0];
                assert!((1..=1 + slack).contains(&gap));
            }
            assert!(s[k - 1] <= k - 1 + slack);
        }
    }

    #[test]
    fn expected_span_matches_independent_simplex_oracle() {
        // The implementation draws simplex weights via normalized
        // exponentials; the oracle uses sorted-uniform spacings instead.
        let (k, len, c) = (4usize, 30usize, 2usize);
        let slack = (len - c * k) / c;
        let n = 10_000usize;

        let mut rng = derive_stream(7, "offsets");
        let mut spans = Vec::with_capacity(n);
        for _ in 0..n {
            let s = sample_offsets(k, len, c, &mut rng).unwrap();
            spans.push(s[k - 1] as f64);
        }
        let mean_span: f64 = spans.iter().sum::<f64>() / n as f64;
        let var_span: f64 =
            spans.iter().map(|s| (s - mean_span).powi(2)).sum::<f64>() / (n as f64 - 1.0);

        let mut orng = derive_stream(8, "oracle");
        let mut oracle_spans = Vec::with_capacity(n);
        for _ in 0..n {
            use rand::Rng;
            // k parts from sorted-uniform spacings; the gaps use k - 1 of
            // them, mirroring the unused headroom part in the sampler.
            let mut cuts: Vec<f64> = (0..k - 1).map(|_| orng.random::<f64>()).collect();
            cuts.push(0.0);
            cuts.push(1.0);
            cuts.sort_by(f64::total_cmp);
            let span: usize = cuts
                .windows(2)
                .skip(1)
                .map(|w| 1 + ((w[1] - w[0]) * slack as f64).floor() as usize)
                .sum();
            oracle_spans.push(span as f64);
        }
        let oracle_mean: f64 = oracle_spans.iter().sum::<f64>() / n as f64;
        let oracle_var: f64 = oracle_spans
            .iter()
            .map(|s| (s - oracle_mean).powi(2))
            .sum::<f64>()
            / (n as f64 - 1.0);

        let se = ((var_span + oracle_var) / n as f64).sqrt();
        assert!(
            (mean_span - oracle_mean).abs() < 3.0 * se,
            "mean span {mean_span} vs oracle {oracle_mean} (se {se})"
        );
    }

    #[test]
    fn paper_certificate_example() {
        // L=8, motifs ([0,3] at [0,3]) and ([1,2] at [0,2]) placed end-to-end.
        let a = paper_matrix();
        let motifs = vec![
            SpacedMotif::new(vec![0, 3], vec![0, 3]).unwrap(),
            SpacedMotif::new(vec![1, 2], vec![0, 2]).unwrap(),
        ];
        let cert = construct_certificate(&motifs, &a, 8).unwrap();
        assert_eq!(cert.states(), &[0, 0, 0, 3, 1, 1, 2, 2]);
    }

    // The Appendix-style worked matrix: bandwidth-1 band with row order
    // [3, 1, 0, 2] and the printed logits at temperature 1.
    fn paper_matrix() -> TransitionMatrix {
        let mask = crate::markov::BandMask::permuted(4, 1, vec![3, 1, 0, 2]).unwrap();
        let z = [
            1.41, 1.67, -1.52, 0.63, //
            -0.35, 0.45, 0.86, -0.49, //
            1.42, -1.31, -0.31, 1.43, //
            -0.02, 1.55, -0.26, 1.13,
        ];
        TransitionMatrix::from_logits(mask, &z, 1.0).unwrap()
    }

    #[test]
    fn repeat_fill_certificate() {
        let a = test_matrix(8, 9);
        let motifs = vec![SpacedMotif::new(vec![5], vec![0]).unwrap()];
        let cert = construct_certificate(&motifs, &a, 4).unwrap();
        assert_eq!(cert.states(), &[5, 5, 5, 5]);
    }

    #[test]
    fn sampled_sets_are_jointly_satisfied() {
        for seed in 0..20 {
            let a = test_matrix(8, seed);
            let mut rng = derive_stream(seed, "motifs");
            let set = MotifSet::sample(&a, 32, 3, 4, &mut rng).unwrap();
            assert!(a.is_feasible(set.certificate()).unwrap());
            for motif in set.motifs() {
                assert!((0..32).any(|l| motif.fully_matched_at(set.certificate(), l)));
            }
        }
    }

    #[test]
    fn invalid_offsets_rejected() {
        assert!(SpacedMotif::new(vec![1, 2], vec![1, 2]).is_err());
        assert!(SpacedMotif::new(vec![1, 2], vec![0, 0]).is_err());
        assert!(SpacedMotif::new(vec![1, 2, 3], vec![0, 2]).is_err());
        assert!(SpacedMotif::new(vec![], vec![]).is_err());
    }
}
