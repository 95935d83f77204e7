//! Uniform random search over GA hyperparameters on log-scaled ranges,
//! scored by median final cumulative regret.

use crate::{GaArgs, InstanceArgs};
use anyhow::{bail, Context, Result};
use clap::Args;
use ehrlich::{run_campaign, CampaignConfig, GaConfig, RngStream};
use rand::Rng;
use std::io::Write;
use std::path::PathBuf;

#[derive(Args)]
pub struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,

    /// Base GA settings: population size and iterations are held fixed, and
    /// with --include-incumbent the base (alpha, p_m, p_r) becomes candidate
    /// 0.
    #[command(flatten)]
    ga: GaArgs,

    /// Number of hyperparameter configurations to evaluate (incumbent
    /// included).
    #[arg(long, default_value_t = 16)]
    budget: usize,

    /// Log-uniform range for alpha, as "lo,hi". Defaults to (2.5/n, 0.5).
    #[arg(long, value_name = "LO,HI")]
    alpha_range: Option<String>,

    /// Log-uniform range for p_m, as "lo,hi". Defaults to (0.25/L, 16/L).
    #[arg(long, value_name = "LO,HI")]
    pm_range: Option<String>,

    /// Log-uniform range for p_r, as "lo,hi". Defaults to (0.25/L, 16/L).
    #[arg(long, value_name = "LO,HI")]
    pr_range: Option<String>,

    /// Score the base configuration as candidate 0 before any random draws.
    #[arg(long)]
    include_incumbent: bool,

    /// Trials per candidate (campaigns are smaller than `run` by default).
    #[arg(long, default_value_t = 16)]
    trials: usize,

    /// Seed for candidate sampling.
    #[arg(long, default_value_t = 0)]
    sweep_seed: u64,

    /// Seed for the per-candidate campaign trial streams.
    #[arg(long, default_value_t = 0)]
    campaign_seed: u64,

    /// Worker threads for trial execution.
    #[arg(long)]
    jobs: Option<usize>,

    #[arg(long, env = "EHRLICH_OUT_DIR", default_value = "ehrlich-out")]
    out_dir: PathBuf,
}

fn parse_range(spec: &Option<String>, default: (f64, f64), name: &str) -> Result<(f64, f64)> {
    let (lo, hi) = match spec {
        None => return Ok(default),
        Some(s) => {
            let (lo, hi) = s
                .split_once(',')
                .with_context(|| format!("{name} must look like LO,HI"))?;
            (
                lo.trim().parse::<f64>().context("range bounds must be numbers")?,
                hi.trim().parse::<f64>().context("range bounds must be numbers")?,
            )
        }
    };
    if !(lo > 0.0 && hi >= lo) {
        bail!("{name} must satisfy 0 < LO <= HI, got ({lo}, {hi})");
    }
    Ok((lo, hi))
}

fn log_uniform(rng: &mut RngStream, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

pub fn cmd_sweep(args: SweepArgs) -> Result<()> {
    if args.budget < 1 {
        bail!("budget must be >= 1");
    }
    let inst = args.instance.load_or_generate(None)?;
    let seq_len = inst.params().seq_len;
    let base = args.ga.resolve(seq_len, None);
    base.validate().map_err(anyhow::Error::from)?;

    let n = base.num_particles as f64;
    let alpha_range = parse_range(&args.alpha_range, (2.5 / n, 0.5), "alpha-range")?;
    let rate_default = (0.25 / seq_len as f64, (16.0 / seq_len as f64).min(1.0));
    let pm_range = parse_range(&args.pm_range, rate_default, "pm-range")?;
    let pr_range = parse_range(&args.pr_range, rate_default, "pr-range")?;

    let mut rng = RngStream::derive(args.sweep_seed, "sweep");
    let mut candidates: Vec<GaConfig> = Vec::with_capacity(args.budget);
    if args.include_incumbent {
        candidates.push(base.clone());
    }
    let mut attempts = 0;
    while candidates.len() < args.budget {
        let candidate = GaConfig {
            num_particles: base.num_particles,
            survival_quantile: log_uniform(&mut rng, alpha_range),
            mutation_prob: log_uniform(&mut rng, pm_range).min(1.0),
            recombine_prob: log_uniform(&mut rng, pr_range).min(1.0),
            iterations: base.iterations,
        };
        attempts += 1;
        if candidate.validate().is_ok() {
            candidates.push(candidate);
        } else if attempts > 1000 * args.budget {
            bail!("could not draw valid configurations; check the sweep ranges against n");
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;

    let mut scored: Vec<(usize, GaConfig, f64)> = Vec::with_capacity(candidates.len());
    for (idx, candidate) in candidates.iter().enumerate() {
        let result = pool
            .install(|| run_campaign(&inst, candidate, args.trials, args.campaign_seed))
            .with_context(|| format!("candidate {idx}"))?;
        let score = *result
            .summary
            .metrics
            .cumulative_regret
            .q50
            .last()
            .expect("non-empty campaign");
        println!(
            "candidate {idx}: alpha={:.6} p_m={:.6} p_r={:.6} -> median final cumulative regret {score}",
            candidate.survival_quantile, candidate.mutation_prob, candidate.recombine_prob
        );
        scored.push((idx, candidate.clone(), score));
    }
    scored.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)));

    std::fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("sweep.csv");
    let mut csv = std::io::BufWriter::new(std::fs::File::create(&csv_path)?);
    writeln!(
        csv,
        "rank,candidate,alpha,mutation_prob,recombine_prob,median_final_cumulative_regret"
    )?;
    for (rank, (idx, cfg, score)) in scored.iter().enumerate() {
        writeln!(
            csv,
            "{rank},{idx},{},{},{},{score}",
            cfg.survival_quantile, cfg.mutation_prob, cfg.recombine_prob
        )?;
    }
    csv.flush()?;

    let (_, best_cfg, best_score) = &scored[0];
    let best_path = args.out_dir.join("best_config.json");
    let best = CampaignConfig {
        instance: inst.params().clone(),
        ga: best_cfg.clone(),
        trials: args.trials,
        campaign_seed: args.campaign_seed,
    };
    std::fs::write(&best_path, ehrlich::to_canonical_json(&best)?)?;

    println!("wrote {}", csv_path.display());
    println!(
        "best: alpha={:.6} p_m={:.6} p_r={:.6} (median final cumulative regret {best_score}) -> {}",
        best.ga.survival_quantile,
        best.ga.mutation_prob,
        best.ga.recombine_prob,
        best_path.display()
    );
    Ok(())
}
