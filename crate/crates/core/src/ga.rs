//! Genetic-algorithm baseline over dense integer populations.
//!
//! One iteration evaluates the population, keeps the global best outside the
//! population (elitism), retains every member at or above the `(1 - alpha)`
//! nearest-rank value quantile, refills the rest by uniform recombination of
//! the survivors, and finishes with one mutation pass over the whole
//! population. Populations are stored as a dense `n x L` matrix of states and
//! mutation/recombination act as bulk masked writes.

use crate::bench::{nearest_rank_quantile, simple_regret, TraceRow, TrialTrace};
use crate::error::{Error, Result};
use crate::instance::EhrlichInstance;
use crate::rng::RngStream;
use crate::seq::{Sequence, StateId};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// GA hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaConfig {
    /// Population size `n`.
    pub num_particles: usize,
    /// Fraction `alpha` of the population retained each iteration; must lie
    /// in `(2/n, 1)`.
    pub survival_quantile: f64,
    /// Per-position substitution probability `p_m`.
    pub mutation_prob: f64,
    /// Per-position crossover probability `p_r`.
    pub recombine_prob: f64,
    /// Number of iterations `T`.
    pub iterations: usize,
}

impl GaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_particles < 2 {
            return Err(Error::InvalidParam(format!(
                "num_particles must be >= 2, got {}",
                self.num_particles
            )));
        }
        let lo = 2.0 / self.num_particles as f64;
        if !(self.survival_quantile > lo && self.survival_quantile < 1.0) {
            return Err(Error::InvalidParam(format!(
                "survival_quantile must lie in ({lo}, 1), got {}",
                self.survival_quantile
            )));
        }
        for (name, p) in [
            ("mutation_prob", self.mutation_prob),
            ("recombine_prob", self.recombine_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidParam(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.iterations < 1 {
            return Err(Error::InvalidParam("iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Dense population: rows of equal length stored contiguously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Population {
    seq_len: usize,
    states: Vec<StateId>,
}

impl Population {
    pub fn empty(seq_len: usize) -> Self {
        assert!(seq_len >= 1);
        Self {
            seq_len,
            states: Vec::new(),
        }
    }

    pub fn with_row_capacity(seq_len: usize, rows: usize) -> Self {
        assert!(seq_len >= 1);
        Self {
            seq_len,
            states: Vec::with_capacity(seq_len * rows),
        }
    }

    pub fn from_sequence(x: &Sequence) -> Self {
        Self {
            seq_len: x.len(),
            states: x.states().to_vec(),
        }
    }

    pub fn from_sequences(xs: &[Sequence]) -> Result<Self> {
        let seq_len = match xs.first() {
            Some(x) => x.len(),
            None => return Err(Error::InvalidParam("population must be non-empty".into())),
        };
        let mut pop = Self::with_row_capacity(seq_len, xs.len());
        for x in xs {
            if x.len() != seq_len {
                return Err(Error::InvalidParam(
                    "population rows must have equal length".into(),
                ));
            }
            pop.push_row(x.states());
        }
        Ok(pop)
    }

    /// Number of rows.
    pub fn len(&self) -> usize {
        self.states.len() / self.seq_len
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn row(&self, i: usize) -> &[StateId] {
        &self.states[i * self.seq_len..(i + 1) * self.seq_len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[StateId]> {
        self.states.chunks_exact(self.seq_len)
    }

    pub fn rows_mut(&mut self) -> impl Iterator<Item = &mut [StateId]> {
        self.states.chunks_exact_mut(self.seq_len)
    }

    pub fn push_row(&mut self, row: &[StateId]) {
        assert_eq!(row.len(), self.seq_len);
        self.states.extend_from_slice(row);
    }

    fn last_row_mut(&mut self) -> &mut [StateId] {
        let start = self.states.len() - self.seq_len;
        &mut self.states[start..]
    }

    pub fn sequence(&self, i: usize) -> Sequence {
        Sequence::new(self.row(i).to_vec())
    }

    pub fn to_sequences(&self) -> Vec<Sequence> {
        self.rows().map(|r| Sequence::new(r.to_vec())).collect()
    }
}

/// Substitutes each position independently with probability `p_m` by a
/// uniform draw over all `v` states (which may equal the original, so the
/// effective per-position mutation rate is `p_m * (1 - 1/v)`).
fn mutate_row(
    row: &mut [StateId],
    edit_count: &Binomial,
    v: usize,
    rng: &mut RngStream,
) {
    // Drawing the number of edits first and then a uniform set of distinct
    // positions is distributed identically to a per-position Bernoulli mask.
    let edits = edit_count.sample(rng) as usize;
    if edits == 0 {
        return;
    }
    for pos in index::sample(rng, row.len(), edits).iter() {
        row[pos] = rng.random_range(0..v) as StateId;
    }
}

/// Produces `fanout` mutants of every input row; output has
/// `xs.len() * fanout` rows in input order.
pub fn mutate(
    xs: &Population,
    p_m: f64,
    fanout: usize,
    v: usize,
    rng: &mut RngStream,
) -> Population {
    assert!((0.0..=1.0).contains(&p_m), "p_m must lie in [0, 1]");
    assert!(fanout >= 1 && v >= 1);
    let edit_count = Binomial::new(xs.seq_len() as u64, p_m).expect("checked p_m");
    let mut out = Population::with_row_capacity(xs.seq_len(), xs.len() * fanout);
    for row in xs.rows() {
        for _ in 0..fanout {
            out.push_row(row);
            mutate_row(out.last_row_mut(), &edit_count, v, rng);
        }
    }
    out
}

/// One mutation pass over every row in place.
pub fn mutate_in_place(xs: &mut Population, p_m: f64, v: usize, rng: &mut RngStream) {
    assert!((0.0..=1.0).contains(&p_m), "p_m must lie in [0, 1]");
    assert!(v >= 1);
    let edit_count = Binomial::new(xs.seq_len() as u64, p_m).expect("checked p_m");
    for row in xs.rows_mut() {
        mutate_row(row, &edit_count, v, rng);
    }
}

/// Draws `count` children: two parent lists sampled with replacement, each
/// child taking parent 1's state where an independent Bernoulli(`p_r`) mask
/// fires and parent 2's otherwise.
pub fn recombine(
    xs: &Population,
    p_r: f64,
    count: usize,
    rng: &mut RngStream,
) -> Result<Population> {
    if xs.is_empty() {
        return Err(Error::InvalidParam(
            "recombine needs a non-empty parent set".into(),
        ));
    }
    assert!((0.0..=1.0).contains(&p_r), "p_r must lie in [0, 1]");
    let len = xs.seq_len();
    let first_parents: Vec<usize> = (0..count).map(|_| rng.random_range(0..xs.len())).collect();
    let second_parents: Vec<usize> = (0..count).map(|_| rng.random_range(0..xs.len())).collect();
    let take_count = Binomial::new(len as u64, p_r).expect("checked p_r");
    let mut out = Population::with_row_capacity(len, count);
    for (&p1, &p2) in first_parents.iter().zip(&second_parents) {
        out.push_row(xs.row(p2));
        let takes = take_count.sample(rng) as usize;
        if takes == 0 {
            continue;
        }
        let child = out.last_row_mut();
        let donor = xs.row(p1);
        for pos in index::sample(rng, len, takes).iter() {
            child[pos] = donor[pos];
        }
    }
    Ok(out)
}

/// Optimizer state across iterations. The best-so-far lives outside the
/// population and never decreases.
#[derive(Debug, Clone)]
pub struct GaState {
    pub population: Population,
    pub best: Sequence,
    pub best_value: f64,
    pub iteration: usize,
}

/// Per-iteration observations reported by [`ga_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepMetrics {
    /// Fraction of the evaluated population that was feasible.
    pub feasible_fraction: f64,
}

/// One GA iteration: evaluate, update the elitist best, keep the top
/// `alpha` quantile (nearest-rank, ties admitted), refill by recombination of
/// the survivors, then run one mutation pass over the entire population.
pub fn ga_step(
    state: &mut GaState,
    inst: &EhrlichInstance,
    cfg: &GaConfig,
    rng: &mut RngStream,
) -> StepMetrics {
    let n = state.population.len();
    debug_assert_eq!(n, cfg.num_particles);
    let values: Vec<f64> = state
        .population
        .rows()
        .map(|row| inst.evaluate_states(row))
        .collect();

    let mut best_idx = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best_idx] {
            best_idx = i;
        }
    }
    if values[best_idx] > state.best_value {
        state.best_value = values[best_idx];
        state.best = state.population.sequence(best_idx);
    }

    let feasible = values.iter().filter(|&&v| v > f64::NEG_INFINITY).count();
    let feasible_fraction = feasible as f64 / n as f64;

    let mut scratch = values.clone();
    let threshold = nearest_rank_quantile(&mut scratch, 1.0 - cfg.survival_quantile);

    // When every member scores negative infinity the threshold is negative
    // infinity too: the whole population survives and only mutation acts.
    let mut survivors = Population::with_row_capacity(state.population.seq_len(), n);
    for (i, &v) in values.iter().enumerate() {
        if v >= threshold {
            survivors.push_row(state.population.row(i));
        }
    }
    debug_assert!(!survivors.is_empty());

    let refill = n - survivors.len();
    let mut next = survivors;
    if refill > 0 {
        let children =
            recombine(&next, cfg.recombine_prob, refill, rng).expect("survivors are non-empty");
        for row in children.rows() {
            next.push_row(row);
        }
    }
    mutate_in_place(&mut next, cfg.mutation_prob, inst.vocab_size(), rng);

    state.population = next;
    state.iteration += 1;
    StepMetrics { feasible_fraction }
}

/// Runs the full optimization: the initial solution is one draw from the
/// process, the first population its `n`-fold mutation fan-out, followed by
/// `T` iterations of [`ga_step`]. Returns the final state and the
/// per-iteration trace.
///
/// The trace counts `n` evaluations per iteration (the population evaluated
/// at the top of each loop); the instance counter additionally records the
/// single evaluation that scores the initial solution.
pub fn run_ga(
    inst: &EhrlichInstance,
    cfg: &GaConfig,
    rng: &mut RngStream,
) -> Result<(GaState, TrialTrace)> {
    cfg.validate()?;
    if inst.params().negate {
        return Err(Error::InvalidParam(
            "the optimizer maximizes; generate the instance with negate=false".into(),
        ));
    }

    let mut init_rng = rng.child("init");
    let seed_solution = inst.initial_solution(&mut init_rng);
    let seed_value = inst.evaluate_states(seed_solution.states());
    debug_assert!(seed_value > f64::NEG_INFINITY);

    let mut fanout_rng = rng.child("init-fanout");
    let population = mutate(
        &Population::from_sequence(&seed_solution),
        cfg.mutation_prob,
        cfg.num_particles,
        inst.vocab_size(),
        &mut fanout_rng,
    );

    let mut state = GaState {
        population,
        best: seed_solution,
        best_value: seed_value,
        iteration: 0,
    };

    let mut rows = Vec::with_capacity(cfg.iterations);
    let mut cumulative = 0.0;
    for t in 1..=cfg.iterations {
        let mut iter_rng = rng.child(&format!("iter/{t}"));
        let metrics = ga_step(&mut state, inst, cfg, &mut iter_rng);
        let regret = simple_regret(state.best_value);
        cumulative += regret;
        rows.push(TraceRow {
            iteration: t,
            evals: (cfg.num_particles * t) as u64,
            best_value: state.best_value,
            simple_regret: regret,
            cumulative_regret: cumulative,
            feasible_fraction: metrics.feasible_fraction,
        });
    }
    Ok((state, TrialTrace { rows }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::InstanceParams;
    use crate::rng::derive_stream;

    fn test_config(n: usize, iters: usize) -> GaConfig {
        GaConfig {
            num_particles: n,
            survival_quantile: 0.25,
            mutation_prob: 0.05,
            recombine_prob: 0.05,
            iterations: iters,
        }
    }

    fn test_instance(seed: u64) -> EhrlichInstance {
        EhrlichInstance::generate(InstanceParams::new(8, 16, 2, 2, 2).with_seed(seed)).unwrap()
    }

    fn random_population(rows: usize, len: usize, v: usize, seed: u64) -> Population {
        let mut rng = derive_stream(seed, "pop");
        let mut pop = Population::with_row_capacity(len, rows);
        for _ in 0..rows {
            let row: Vec<StateId> = (0..len).map(|_| rng.random_range(0..v) as StateId).collect();
            pop.push_row(&row);
        }
        pop
    }

    #[test]
    fn mutate_zero_prob_copies() {
        let pop = random_population(5, 12, 4, 0);
        let out = mutate(&pop, 0.0, 3, 4, &mut derive_stream(1, "m"));
        assert_eq!(out.len(), 15);
        for (i, row) in out.rows().enumerate() {
            assert_eq!(row, pop.row(i / 3));
        }
    }

    #[test]
    fn mutate_single_state_vocab_copies() {
        let pop = Population::from_sequence(&Sequence::new(vec![0; 9]));
        let out = mutate(&pop, 1.0, 4, 1, &mut derive_stream(2, "m"));
        for row in out.rows() {
            assert_eq!(row, &[0; 9]);
        }
    }

    #[test]
    fn mutate_hamming_distance_matches_expectation() {
        let (len, v, p_m) = (64usize, 8usize, 0.1f64);
        let base = Sequence::new(vec![3; len]);
        let pop = Population::from_sequence(&base);
        let trials = 10_000usize;
        let out = mutate(&pop, p_m, trials, v, &mut derive_stream(3, "m"));
        let distances: Vec<f64> = out
            .rows()
            .map(|row| row.iter().filter(|&&s| s != 3).count() as f64)
            .collect();
        let mean = distances.iter().sum::<f64>() / trials as f64;
        let expected = len as f64 * p_m * (1.0 - 1.0 / v as f64);
        let var = distances
            .iter()
            .map(|d| (d - mean).powi(2))
            .sum::<f64>()
            / (trials as f64 - 1.0);
        let se = (var / trials as f64).sqrt();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs expected {expected} (se {se})"
        );
    }

    #[test]
    fn recombine_extreme_probs_take_one_parent() {
        let pop = random_population(6, 10, 5, 4);
        // p_r = 0: children are exact copies of some parent (parent 2).
        let zero = recombine(&pop, 0.0, 40, &mut derive_stream(5, "r")).unwrap();
        for child in zero.rows() {
            assert!((0..pop.len()).any(|i| pop.row(i) == child));
        }
        // p_r = 1: ditto, parent 1.
        let one = recombine(&pop, 1.0, 40, &mut derive_stream(6, "r")).unwrap();
        for child in one.rows() {
            assert!((0..pop.len()).any(|i| pop.row(i) == child));
        }
    }

    #[test]
    fn recombine_identical_parents_is_identity() {
        let row: Vec<StateId> = vec![1, 2, 3, 4, 5];
        let mut pop = Population::empty(5);
        pop.push_row(&row);
        pop.push_row(&row);
        let out = recombine(&pop, 0.5, 20, &mut derive_stream(7, "r")).unwrap();
        for child in out.rows() {
            assert_eq!(child, &row[..]);
        }
    }

    #[test]
    fn recombine_empty_parents_rejected() {
        let pop = Population::empty(4);
        assert!(matches!(
            recombine(&pop, 0.5, 3, &mut derive_stream(8, "r")),
            Err(Error::InvalidParam(_))
        ));
    }

    #[test]
    fn recombine_mixes_both_parents() {
        let mut pop = Population::empty(32);
        pop.push_row(&[0; 32]);
        pop.push_row(&[1; 32]);
        let out = recombine(&pop, 0.5, 200, &mut derive_stream(9, "r")).unwrap();
        let mixed = out.rows().any(|child| {
            child.iter().any(|&s| s == 0) && child.iter().any(|&s| s == 1)
        });
        assert!(mixed);
    }

    #[test]
    fn step_with_equal_values_keeps_whole_population() {
        // All-equal values: the quantile equals that value and every member
        // survives, so before mutation the population is unchanged.
        let inst = test_instance(0);
        let cfg = test_config(16, 1);
        // All-identical feasible rows score identically.
        let x = inst.initial_solution(&mut derive_stream(10, "x"));
        let pop = mutate(
            &Population::from_sequence(&x),
            0.0,
            16,
            inst.vocab_size(),
            &mut derive_stream(11, "f"),
        );
        let mut state = GaState {
            population: pop.clone(),
            best: x.clone(),
            best_value: f64::NEG_INFINITY,
            iteration: 0,
        };
        let mut cfg_no_mut = cfg.clone();
        cfg_no_mut.mutation_prob = 0.0;
        ga_step(&mut state, &inst, &cfg_no_mut, &mut derive_stream(12, "s"));
        assert_eq!(state.population, pop);
        assert_eq!(state.iteration, 1);
    }

    #[test]
    fn quantile_threshold_matches_rank_oracle() {
        let values = [0.1, 0.9, 0.3, 0.7, 0.5, 0.2, 0.8, 0.4, 0.6, 1.0];
        // Nearest rank: rank = ceil(p * n) on the ascending sort.
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        for (p, expected_rank) in [(0.85, 9), (0.5, 5), (0.91, 10), (0.05, 1)] {
            let mut buf = values.to_vec();
            let got = nearest_rank_quantile(&mut buf, p);
            assert_eq!(got, sorted[expected_rank - 1], "p={p}");
        }
    }

    #[test]
    fn small_alpha_keeps_few_survivors() {
        // Distinct values: survivor count equals n - rank + 1 with
        // rank = ceil((1 - alpha) * n).
        let n = 100usize;
        let values: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let alpha = 0.03;
        let mut buf = values.clone();
        let threshold = nearest_rank_quantile(&mut buf, 1.0 - alpha);
        let survivors = values.iter().filter(|&&v| v >= threshold).count();
        let rank = ((1.0 - alpha) * n as f64).ceil() as usize;
        assert_eq!(survivors, n - rank + 1);
        assert!(survivors >= 1 && survivors <= n / 2);
    }

    #[test]
    fn best_value_never_decreases() {
        let inst = test_instance(1);
        let cfg = test_config(32, 30);
        let mut rng = derive_stream(13, "trial");
        let (_, trace) = run_ga(&inst, &cfg, &mut rng).unwrap();
        for w in trace.rows.windows(2) {
            assert!(w[1].best_value >= w[0].best_value);
        }
    }

    #[test]
    fn population_closure_after_each_step() {
        let inst = test_instance(2);
        let cfg = test_config(24, 10);
        let rng = derive_stream(14, "trial");
        let mut init = rng.child("init");
        let x = inst.initial_solution(&mut init);
        let mut state = GaState {
            population: mutate(
                &Population::from_sequence(&x),
                cfg.mutation_prob,
                cfg.num_particles,
                inst.vocab_size(),
                &mut rng.child("f"),
            ),
            best: x,
            best_value: f64::NEG_INFINITY,
            iteration: 0,
        };
        for t in 0..cfg.iterations {
            ga_step(&mut state, &inst, &cfg, &mut rng.child(&format!("i{t}")));
            assert_eq!(state.population.len(), cfg.num_particles);
            assert_eq!(state.population.seq_len(), inst.seq_len());
            for row in state.population.rows() {
                assert!(row.iter().all(|&s| (s as usize) < inst.vocab_size()));
            }
        }
    }

    #[test]
    fn trivial_instance_reaches_zero_regret() {
        // c=1, k=1, q=1: any sequence containing the single motif state is
        // optimal; a modest population finds it almost immediately.
        let inst =
            EhrlichInstance::generate(InstanceParams::new(4, 8, 1, 1, 1).with_seed(3)).unwrap();
        let cfg = GaConfig {
            num_particles: 256,
            survival_quantile: 0.05,
            mutation_prob: 1.0 / 8.0,
            recombine_prob: 1.0 / 8.0,
            iterations: 10,
        };
        let (state, trace) = run_ga(&inst, &cfg, &mut derive_stream(15, "trial")).unwrap();
        assert_eq!(state.best_value, 1.0);
        assert_eq!(trace.rows.last().unwrap().simple_regret, 0.0);
    }

    #[test]
    fn trace_counts_n_evaluations_per_iteration() {
        let inst = test_instance(4);
        let cfg = test_config(16, 1);
        inst.counter().reset();
        let (_, trace) = run_ga(&inst, &cfg, &mut derive_stream(16, "trial")).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.rows[0].evals, 16);
        // The counter additionally sees the initial-solution evaluation.
        assert_eq!(inst.counter().total(), 17);
    }

    #[test]
    fn runs_are_deterministic_per_stream() {
        let inst = test_instance(5);
        let cfg = test_config(32, 12);
        let (_, a) = run_ga(&inst, &cfg, &mut derive_stream(17, "trial")).unwrap();
        let (_, b) = run_ga(&inst, &cfg, &mut derive_stream(17, "trial")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn million_particle_population_accepted() {
        // Desk-scale runs default to n=1024, but the harness must take
        // paper-scale populations.
        let inst =
            EhrlichInstance::generate(InstanceParams::new(8, 64, 2, 2, 2).with_seed(1)).unwrap();
        let cfg = GaConfig {
            num_particles: 1_000_000,
            survival_quantile: 1e-4,
            mutation_prob: 1.0 / 64.0,
            recombine_prob: 1.0 / 64.0,
            iterations: 1,
        };
        let (state, trace) = run_ga(&inst, &cfg, &mut derive_stream(20, "big")).unwrap();
        assert_eq!(state.population.len(), 1_000_000);
        assert_eq!(trace.rows[0].evals, 1_000_000);
    }

    #[test]
    fn config_validation() {
        assert!(test_config(16, 5).validate().is_ok());
        let mut bad = test_config(1, 5);
        assert!(bad.validate().is_err());
        bad = test_config(16, 5);
        bad.survival_quantile = 0.125; // exactly 2/n
        assert!(bad.validate().is_err());
        bad.survival_quantile = 1.0;
        assert!(bad.validate().is_err());
        bad = test_config(16, 0);
        assert!(bad.validate().is_err());
        bad = test_config(16, 5);
        bad.mutation_prob = 1.5;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn negated_instances_rejected() {
        let mut params = InstanceParams::new(8, 16, 2, 2, 2).with_seed(6);
        params.negate = true;
        let inst = EhrlichInstance::generate(params).unwrap();
        assert!(matches!(
            run_ga(&inst, &test_config(16, 2), &mut derive_stream(18, "t")),
            Err(Error::InvalidParam(_))
        ));
    }
}
