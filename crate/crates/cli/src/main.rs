//! Benchmark front door: generate instances, run campaigns, sweep GA
//! hyperparameters, and render quantile-band plots.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error. All file output
//! stays inside the requested output paths.

mod plot;
mod sweep;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ehrlich::{
    infeasible_prob_lower_bound, run_campaign, CampaignConfig, CampaignSummary, EhrlichInstance,
    GaConfig, InstanceParams,
};
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(
    name = "ehrlich-bench",
    about = "Procedural Ehrlich test functions and a GA benchmark harness",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance file and report its headline properties.
    Generate(GenerateArgs),
    /// Run a multi-seed GA campaign; writes a trace CSV and an aggregate JSON.
    Run(RunArgs),
    /// Random-search GA hyperparameters, minimizing median final cumulative
    /// regret.
    Sweep(sweep::SweepArgs),
    /// Render metric-vs-evaluations SVG plots from campaign JSON files.
    Plot(PlotArgs),
}

/// Instance parameters; unset values fall back to the stock configuration
/// v=32, L=256, c=4, k=4, q=k, bandwidth=(v*2)//5, temperature=0.5, seed=0.
#[derive(Args, Clone, Debug)]
pub(crate) struct InstanceArgs {
    /// Load the instance from a file instead of generating it.
    #[arg(long, value_name = "FILE", conflicts_with_all = [
        "states", "length", "motifs", "motif_length", "quantization",
        "bandwidth", "temperature", "seed",
    ])]
    instance: Option<PathBuf>,

    /// Vocabulary size v.
    #[arg(long)]
    states: Option<usize>,

    /// Sequence length L.
    #[arg(long)]
    length: Option<usize>,

    /// Number of motifs c.
    #[arg(long)]
    motifs: Option<usize>,

    /// Motif length k.
    #[arg(long)]
    motif_length: Option<usize>,

    /// Quantization q (number of nonzero score levels per motif; divides k).
    #[arg(long)]
    quantization: Option<usize>,

    /// Band mask bandwidth; defaults to (v*2)//5.
    #[arg(long)]
    bandwidth: Option<usize>,

    /// Transition matrix softmax temperature.
    #[arg(long)]
    temperature: Option<f64>,

    /// Instance generation seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl InstanceArgs {
    pub(crate) fn resolve(&self, base: Option<&InstanceParams>) -> InstanceParams {
        let v = self
            .states
            .or(base.map(|b| b.vocab_size))
            .unwrap_or(32);
        let seq_len = self.length.or(base.map(|b| b.seq_len)).unwrap_or(256);
        let num_motifs = self.motifs.or(base.map(|b| b.num_motifs)).unwrap_or(4);
        let motif_len = self
            .motif_length
            .or(base.map(|b| b.motif_len))
            .unwrap_or(4);
        let quantization = self
            .quantization
            .or(base.map(|b| b.quantization))
            .unwrap_or(motif_len);
        InstanceParams {
            vocab_size: v,
            seq_len,
            num_motifs,
            motif_len,
            quantization,
            bandwidth: self
                .bandwidth
                .or(base.map(|b| b.bandwidth))
                .unwrap_or(ehrlich::default_bandwidth(v)),
            temperature: self
                .temperature
                .or(base.map(|b| b.temperature))
                .unwrap_or(ehrlich::DEFAULT_TEMPERATURE),
            seed: self.seed.or(base.map(|b| b.seed)).unwrap_or(0),
            negate: false,
        }
    }

    pub(crate) fn load_or_generate(&self, base: Option<&InstanceParams>) -> Result<EhrlichInstance> {
        match &self.instance {
            Some(path) => EhrlichInstance::load_from_path(path)
                .with_context(|| format!("loading instance {}", path.display())),
            None => {
                let params = self.resolve(base);
                EhrlichInstance::generate(params).context("generating instance")
            }
        }
    }
}

/// GA hyperparameters; unset values fall back to n=1024, alpha=0.01,
/// p_m = p_r = 1/L, T=100.
#[derive(Args, Clone, Debug)]
pub(crate) struct GaArgs {
    /// Population size n (accepts up to 1e6 and beyond, memory permitting).
    #[arg(long)]
    particles: Option<usize>,

    /// Survival quantile alpha in (2/n, 1); defaults to max(0.01, 4/n).
    #[arg(long)]
    alpha: Option<f64>,

    /// Per-position mutation probability p_m; defaults to 1/L.
    #[arg(long)]
    mutation_prob: Option<f64>,

    /// Per-position recombination probability p_r; defaults to 1/L.
    #[arg(long)]
    recombine_prob: Option<f64>,

    /// GA iterations T.
    #[arg(long)]
    iterations: Option<usize>,
}

impl GaArgs {
    pub(crate) fn resolve(&self, seq_len: usize, base: Option<&GaConfig>) -> GaConfig {
        let default_rate = 1.0 / seq_len as f64;
        let num_particles = self
            .particles
            .or(base.map(|b| b.num_particles))
            .unwrap_or(1024);
        GaConfig {
            num_particles,
            survival_quantile: self
                .alpha
                .or(base.map(|b| b.survival_quantile))
                .unwrap_or_else(|| (4.0 / num_particles as f64).max(0.01)),
            mutation_prob: self
                .mutation_prob
                .or(base.map(|b| b.mutation_prob))
                .unwrap_or(default_rate),
            recombine_prob: self
                .recombine_prob
                .or(base.map(|b| b.recombine_prob))
                .unwrap_or(default_rate),
            iterations: self
                .iterations
                .or(base.map(|b| b.iterations))
                .unwrap_or(100),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    instance: InstanceArgs,

    /// Destination file; defaults to <out-dir>/instance_seed<seed>.json.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,

    #[arg(long, env = "EHRLICH_OUT_DIR", default_value = "ehrlich-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,

    #[command(flatten)]
    ga: GaArgs,

    /// Independent trials per campaign.
    #[arg(long)]
    trials: Option<usize>,

    /// Seed for the campaign's trial streams (separate from the instance
    /// seed).
    #[arg(long)]
    campaign_seed: Option<u64>,

    /// Load instance and GA settings from a run-config JSON (a `config`
    /// object as echoed in campaign JSON output, or such a campaign file
    /// itself). Explicit flags override file values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Repeat the campaign varying one instance parameter: e.g. q=1,2,4,8
    /// or L=32,64,128.
    #[arg(long, value_name = "PARAM=V1,V2,...")]
    param_grid: Option<String>,

    /// Output file stem; defaults to campaign_v<v>_L<L>_c<c>_k<k>_q<q>.
    #[arg(long)]
    name: Option<String>,

    /// Worker threads for trial execution (results are identical at any
    /// level).
    #[arg(long)]
    jobs: Option<usize>,

    #[arg(long, env = "EHRLICH_OUT_DIR", default_value = "ehrlich-out")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Campaign JSON files; each becomes one overlaid series per metric.
    #[arg(required = true, value_name = "CAMPAIGN_JSON")]
    campaigns: Vec<PathBuf>,

    #[arg(long, env = "EHRLICH_OUT_DIR", default_value = "ehrlich-out")]
    out_dir: PathBuf,
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => sweep::cmd_sweep(args),
        Command::Plot(args) => cmd_plot(args),
    };
    match outcome {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let params = args.instance.resolve(None);
    params
        .validate()
        .map_err(anyhow::Error::from)
        .context("invalid instance parameters")?;
    let inst = EhrlichInstance::generate(params.clone()).context("generating instance")?;

    let path = match args.out {
        Some(path) => path,
        None => {
            std::fs::create_dir_all(&args.out_dir)?;
            args.out_dir
                .join(format!("instance_seed{}.json", params.seed))
        }
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    inst.save_to_path(&path)
        .with_context(|| format!("writing {}", path.display()))?;

    let cert = inst.certificate().clone();
    let cert_value = inst.evaluate(&cert).map_err(anyhow::Error::from)?;
    println!("wrote {}", path.display());
    println!(
        "certificate check: f(x*) = {cert_value} ({})",
        if cert_value == 1.0 { "ok" } else { "FAILED" }
    );
    println!(
        "uniform-random infeasibility lower bound: {:.6}",
        infeasible_prob_lower_bound(params.vocab_size, params.seq_len)
    );
    println!("instance hash: {}", inst.descriptor_hash()?);
    Ok(())
}

/// Reads a run config from either a bare config JSON or a campaign JSON
/// carrying a `config` field.
fn load_run_config(path: &Path) -> Result<CampaignConfig> {
    let bytes =
        std::fs::read(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Ok(summary) = serde_json::from_slice::<CampaignSummary>(&bytes) {
        return Ok(summary.config);
    }
    serde_json::from_slice::<CampaignConfig>(&bytes)
        .with_context(|| format!("parsing config {}", path.display()))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let base = match &args.config {
        Some(path) => Some(load_run_config(path)?),
        None => None,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.unwrap_or(0))
        .build()
        .context("building worker pool")?;

    let grid = match &args.param_grid {
        Some(spec) => parse_param_grid(spec)?,
        None => vec![],
    };

    std::fs::create_dir_all(&args.out_dir)?;
    let runs: Vec<Option<(String, usize)>> = if grid.is_empty() {
        vec![None]
    } else {
        grid.iter()
            .flat_map(|(p, vs)| vs.iter().map(move |&v| Some((p.clone(), v))))
            .collect()
    };

    for variation in runs {
        let mut params = args.instance.resolve(base.as_ref().map(|b| &b.instance));
        if let Some((param, value)) = &variation {
            apply_grid_param(&mut params, &args.instance, param, *value)?;
        }
        let inst = match (&args.instance.instance, &variation) {
            (Some(path), None) => EhrlichInstance::load_from_path(path)
                .with_context(|| format!("loading instance {}", path.display()))?,
            (Some(_), Some(_)) => {
                bail!("--param-grid regenerates instances and cannot be combined with --instance")
            }
            (None, _) => EhrlichInstance::generate(params.clone())?,
        };

        let ga = args
            .ga
            .resolve(inst.params().seq_len, base.as_ref().map(|b| &b.ga));
        let trials = args
            .trials
            .or(base.as_ref().map(|b| b.trials))
            .unwrap_or(32);
        let campaign_seed = args
            .campaign_seed
            .or(base.as_ref().map(|b| b.campaign_seed))
            .unwrap_or(0);

        let result = pool
            .install(|| run_campaign(&inst, &ga, trials, campaign_seed))
            .context("running campaign")?;

        let p = inst.params();
        let mut stem = args.name.clone().unwrap_or_else(|| {
            format!(
                "campaign_v{}_L{}_c{}_k{}_q{}",
                p.vocab_size, p.seq_len, p.num_motifs, p.motif_len, p.quantization
            )
        });
        if let Some((param, value)) = &variation {
            stem.push_str(&format!("_{param}{value}"));
        }

        let csv_path = args.out_dir.join(format!("{stem}.csv"));
        let json_path = args.out_dir.join(format!("{stem}.json"));
        let csv_file = std::fs::File::create(&csv_path)?;
        ehrlich::write_trace_csv(&result, std::io::BufWriter::new(csv_file))?;
        std::fs::write(&json_path, ehrlich::campaign_json_bytes(&result.summary)?)?;

        let final_q50 = result
            .summary
            .metrics
            .simple_regret
            .q50
            .last()
            .copied()
            .unwrap_or(f64::NAN);
        println!(
            "wrote {} and {} (median final simple regret {final_q50})",
            csv_path.display(),
            json_path.display()
        );
    }
    Ok(())
}

fn parse_param_grid(spec: &str) -> Result<Vec<(String, Vec<usize>)>> {
    let (param, values) = spec
        .split_once('=')
        .context("param grid must look like q=1,2,4")?;
    let param = param.trim().to_string();
    if !["v", "L", "c", "k", "q"].contains(&param.as_str()) {
        bail!("unknown grid parameter {param:?}; choose one of v, L, c, k, q");
    }
    let values: Vec<usize> = values
        .split(',')
        .map(|s| s.trim().parse::<usize>().context("grid values must be integers"))
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("param grid needs at least one value");
    }
    Ok(vec![(param, values)])
}

fn apply_grid_param(
    params: &mut InstanceParams,
    explicit: &InstanceArgs,
    param: &str,
    value: usize,
) -> Result<()> {
    match param {
        "v" => {
            params.vocab_size = value;
            if explicit.bandwidth.is_none() {
                params.bandwidth = ehrlich::default_bandwidth(value);
            }
        }
        "L" => params.seq_len = value,
        "c" => params.num_motifs = value,
        "k" => {
            params.motif_len = value;
            if explicit.quantization.is_none() {
                params.quantization = value;
            }
        }
        "q" => params.quantization = value,
        other => bail!("unknown grid parameter {other:?}"),
    }
    Ok(())
}

fn cmd_plot(args: PlotArgs) -> Result<()> {
    let mut campaigns = Vec::new();
    for path in &args.campaigns {
        let bytes =
            std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        let summary: CampaignSummary = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing campaign {}", path.display()))?;
        if summary.evals.is_empty() {
            bail!("campaign {} has no iterations to plot", path.display());
        }
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "campaign".into());
        campaigns.push((label, summary));
    }
    std::fs::create_dir_all(&args.out_dir)?;
    for metric in ehrlich::MetricAggregates::NAMES {
        let svg = plot::render_metric_svg(metric, &campaigns);
        let path = args.out_dir.join(format!("{metric}.svg"));
        std::fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
