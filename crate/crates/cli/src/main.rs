//! Command-line front end: dataset generation, training, inference,
//! decoding and comparison reports, with experiment presets covering each
//! desk-scale pipeline end to end.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime/numerical error.

mod pipeline;
mod presets;
mod svg;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ndarray::Array2;
use pipeline::{
    build_dataset, build_model, generate_observations, grid_for, kernel_for,
    read_gp_observations, read_spatial_observations,
};
use presets::{ConfigOverrides, DataSource, ResolvedConfig};
use priorcvae_core::cov::{build_covariance, empirical_covariance, frobenius_distance};
use priorcvae_core::cvae::{train, write_loss_history_csv, CvaeModel, TrainConfig, TrainingMetadata};
use priorcvae_core::dynamics::read_observation_csv;
use priorcvae_core::mcmc::{
    hmc_sample, read_run_metadata, summarize, write_chain_csvs, write_run_metadata,
    write_summary_csv, BinomSpatialCvaeModel, BinomSpatialGpModel, BinomialObservations,
    ConditionMap, DecoderGpModel, GaussianObservations, GpRegressionModel, PosteriorModel,
    RunMetadata, ScalarParam, SirCvaeModel,
};
use priorcvae_core::spatial::SpatialScenario;
use priorcvae_core::{Grid, HyperPrior, KernelSpec, PriorDataset};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Marker for argument-level problems that should exit with code 1.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

#[derive(Parser)]
#[command(name = "priorcvae", version, about = "Prior-encoding conditional VAEs with HMC inference")]
struct Cli {
    /// Root seed for all randomness in the invocation.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file or directory (meaning depends on the subcommand).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file of configuration overrides; CLI flags win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Use the published experiment sizes instead of desk-scale defaults.
    #[arg(long, global = true, default_value_t = false)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a training dataset (or an observation file) for a preset.
    Generate(GenerateArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Run HMC inference and write chains, summary and metadata.
    Infer(InferArgs),
    /// Draw from a trained decoder at fixed conditions.
    Decode(DecodeArgs),
    /// Side-by-side report over completed runs.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment preset name.
    #[arg(long)]
    preset: String,
    /// Number of rows to draw.
    #[arg(long, default_value_t = 20_000)]
    count: usize,
    /// Emit the preset's inference observations instead of training draws.
    #[arg(long, default_value_t = false)]
    observations: bool,
    /// Observation count for the GP presets.
    #[arg(long)]
    obs_count: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// Training dataset CSV.
    #[arg(long)]
    dataset: PathBuf,
    /// Preset providing the architecture defaults.
    #[arg(long)]
    preset: String,
    /// Drop the condition columns and train the unconditioned baseline.
    #[arg(long, default_value_t = false)]
    priorvae: bool,
    /// Where to write the loss history CSV (default: next to the model).
    #[arg(long)]
    loss_csv: Option<PathBuf>,
    /// Fraction of rows held out for evaluation.
    #[arg(long, default_value_t = 0.1)]
    heldout_fraction: f64,
    #[command(flatten)]
    overrides: FlagOverrides,
}

#[derive(Args, Default)]
struct FlagOverrides {
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    sigma2_vae: Option<f64>,
    #[arg(long)]
    sigma2_int: Option<f64>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    leapfrog: Option<usize>,
    #[arg(long)]
    target_accept: Option<f64>,
}

impl FlagOverrides {
    fn to_config_overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            sigma2_vae: self.sigma2_vae,
            sigma2_int: self.sigma2_int,
            latent_dim: self.latent_dim,
            hidden: self.hidden.clone(),
            warmup: self.warmup,
            samples: self.samples,
            chains: self.chains,
            leapfrog: self.leapfrog,
            target_accept: self.target_accept,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct InferArgs {
    /// Model kind: gp-exact, priorvae, priorcvae, priorcvae-binary,
    /// sircvae, binomspatial, binomspatial-gp.
    #[arg(long)]
    kind: String,
    /// Observation file (format depends on the kind).
    #[arg(long)]
    data: PathBuf,
    /// Trained model file (decoder-backed kinds).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Scenario file (binomspatial-gp).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Preset providing grid/kernel/prior context.
    #[arg(long)]
    preset: String,
    #[command(flatten)]
    overrides: FlagOverrides,
}

#[derive(Args)]
struct DecodeArgs {
    /// Trained model file.
    #[arg(long)]
    model: PathBuf,
    /// Condition vector per draw set, comma-separated (repeatable).
    #[arg(long = "condition")]
    conditions: Vec<String>,
    /// Draws per condition.
    #[arg(long, default_value_t = 1000)]
    count: usize,
    /// Also render an SVG overlay of the first draws.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Run directories produced by `infer` (repeatable).
    #[arg(long = "runs", required = true)]
    runs: Vec<PathBuf>,
    /// Kernel family for the Frobenius block (rbf, matern12, matern52).
    #[arg(long)]
    kernel: Option<String>,
    /// Grid length for the analytic covariance.
    #[arg(long, default_value_t = 80)]
    grid_n: usize,
    /// Decoded-draw CSVs labelled `priorvae=PATH` or `priorcvae=PATH`
    /// (repeatable).
    #[arg(long = "decoded")]
    decoded: Vec<String>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {e}");
                std::process::exit(1);
            }
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}

fn resolved_config(
    preset: &str,
    cli_seed: u64,
    paper: bool,
    config_file: Option<&Path>,
) -> Result<ResolvedConfig> {
    let mut config = presets::resolve(preset, paper, cli_seed).map_err(|e| usage(e.to_string()))?;
    if let Some(path) = config_file {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let overrides: ConfigOverrides = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        overrides.apply(&mut config);
    }
    Ok(config)
}

fn echo_config(config: &ResolvedConfig, out: &Path) -> Result<()> {
    let path = if out.is_dir() {
        out.join("config.json")
    } else {
        let stem = out
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".into());
        out.with_file_name(format!("{stem}.config.json"))
    };
    std::fs::write(&path, serde_json::to_string_pretty(config).expect("serializable"))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn require_out(cli_out: &Option<PathBuf>) -> Result<PathBuf> {
    cli_out.clone().ok_or_else(|| usage("--out is required"))
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Generate(args) => cmd_generate(&cli, args),
        Command::Train(args) => cmd_train(&cli, args),
        Command::Infer(args) => cmd_infer(&cli, args),
        Command::Decode(args) => cmd_decode(&cli, args),
        Command::Compare(args) => cmd_compare(&cli, args),
    }
}

fn cmd_generate(cli: &Cli, args: &GenerateArgs) -> Result<()> {
    let out = require_out(&cli.out)?;
    let config = resolved_config(&args.preset, cli.seed, cli.paper_scale, cli.config.as_deref())?;
    if args.observations {
        let obs_count = args.obs_count.unwrap_or(match config.data {
            DataSource::Gp1d {
                lengthscale_prior: HyperPrior::BernoulliMixture { .. },
                ..
            } => 15,
            _ => 12,
        });
        let artifacts = generate_observations(&config, obs_count, &out)?;
        let truth_path = out.with_extension("truth.json");
        std::fs::write(
            &truth_path,
            serde_json::to_string_pretty(&artifacts.truth).expect("serializable"),
        )
        .with_context(|| format!("writing {}", truth_path.display()))?;
        echo_config(&config, &out)?;
        println!(
            "wrote {} ({}), truth at {}, seed {}",
            out.display(),
            artifacts.description,
            truth_path.display(),
            config.seed
        );
        return Ok(());
    }
    if args.count == 0 {
        return Err(usage("--count must be >= 1"));
    }
    let ds = build_dataset(&config, args.count, config.seed)?;
    ds.write_csv(&out)?;
    echo_config(&config, &out)?;
    println!(
        "wrote {}: {} rows x ({} condition + {} draw) columns, seed {}",
        out.display(),
        ds.rows(),
        ds.k(),
        ds.n(),
        config.seed
    );
    Ok(())
}

fn cmd_train(cli: &Cli, args: &TrainArgs) -> Result<()> {
    let out = require_out(&cli.out)?;
    let mut config =
        resolved_config(&args.preset, cli.seed, cli.paper_scale, cli.config.as_deref())?;
    args.overrides.to_config_overrides().apply(&mut config);

    let mut ds = PriorDataset::read_csv(&args.dataset)?;
    if args.priorvae {
        ds = ds.strip_conditions();
    }
    if !(args.heldout_fraction > 0.0 && args.heldout_fraction < 1.0) {
        return Err(usage("--heldout-fraction must lie in (0,1)"));
    }
    let held_rows = ((ds.rows() as f64 * args.heldout_fraction) as usize).max(1);
    if held_rows >= ds.rows() {
        return Err(usage("dataset too small for the requested heldout fraction"));
    }
    let (train_ds, held) = ds.split_at(ds.rows() - held_rows)?;

    let mut model = build_model(&config.arch, train_ds.n(), train_ds.k(), config.seed ^ 0x11)?;
    let tc = TrainConfig {
        epochs: config.train.epochs,
        batch_size: config.train.batch_size,
        learning_rate: config.train.learning_rate,
        seed: config.seed ^ 0x22,
        sigma2_int: config.arch.sigma2_int,
    };
    let history = train(&mut model, &tc, &train_ds, &held)?;

    let loss_path = args
        .loss_csv
        .clone()
        .unwrap_or_else(|| out.with_extension("loss.csv"));
    write_loss_history_csv(&history, &loss_path)?;
    model.training_metadata = Some(TrainingMetadata {
        seed: tc.seed,
        epochs: tc.epochs,
        loss_history_path: Some(loss_path.display().to_string()),
    });
    model.save(&out)?;
    echo_config(&config, &out)?;
    println!(
        "trained {} epochs on {} rows (heldout {}): loss {} -> {}; model at {}, losses at {}",
        tc.epochs,
        train_ds.rows(),
        held.rows(),
        history.initial_heldout(),
        history.final_heldout(),
        out.display(),
        loss_path.display()
    );
    Ok(())
}

fn gp_scalars(config: &ResolvedConfig) -> (ScalarParam, ScalarParam, ScalarParam) {
    let ell = match config.data {
        DataSource::Gp1d {
            lengthscale_prior: HyperPrior::Uniform { a, b },
            ..
        } => ScalarParam::interval("lengthscale", HyperPrior::Uniform { a, b }, a, b),
        _ => ScalarParam::interval(
            "lengthscale",
            HyperPrior::Uniform { a: 0.01, b: 0.99 },
            0.01,
            0.99,
        ),
    };
    (
        ell,
        ScalarParam::positive("amplitude", HyperPrior::HalfNormal { scale: 1.0 }),
        ScalarParam::positive("noise", HyperPrior::HalfNormal { scale: 0.1 }),
    )
}

fn load_model(path: &Path) -> Result<CvaeModel> {
    if !path.exists() {
        bail!("model file {} does not exist", path.display());
    }
    Ok(CvaeModel::load(path)?)
}

fn cmd_infer(cli: &Cli, args: &InferArgs) -> Result<()> {
    let out = require_out(&cli.out)?;
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    let mut config =
        resolved_config(&args.preset, cli.seed, cli.paper_scale, cli.config.as_deref())?;
    args.overrides.to_config_overrides().apply(&mut config);
    if !args.data.exists() {
        bail!("data file {} does not exist", args.data.display());
    }

    let model: Box<dyn PosteriorModel> = match args.kind.as_str() {
        "gp-exact" => {
            let obs = read_gp_observations(&args.data)?;
            let grid = grid_for(&config)?;
            let family = match config.data {
                DataSource::Gp1d { family, .. } => family,
                _ => return Err(usage("gp-exact needs a GP preset")),
            };
            let (ell, amp, noise) = gp_scalars(&config);
            Box::new(GpRegressionModel::new(
                grid,
                kernel_for(family, 0.5)?,
                GaussianObservations::new(obs.indices, obs.values)?,
                ell,
                amp,
                noise,
            )?)
        }
        "priorvae" | "priorcvae" => {
            let model_path = args.model.as_ref().ok_or_else(|| usage("--model is required"))?;
            let cvae = load_model(model_path)?;
            let obs = read_gp_observations(&args.data)?;
            let (ell, amp, noise) = gp_scalars(&config);
            let condition = if args.kind == "priorvae" {
                ConditionMap::None
            } else {
                ConditionMap::Scalar(ell)
            };
            Box::new(DecoderGpModel::new(
                cvae,
                GaussianObservations::new(obs.indices, obs.values)?,
                condition,
                amp,
                noise,
            )?)
        }
        "priorcvae-binary" => {
            let model_path = args.model.as_ref().ok_or_else(|| usage("--model is required"))?;
            let cvae = load_model(model_path)?;
            let obs = read_gp_observations(&args.data)?;
            let mixture = match config.data {
                DataSource::Gp1d {
                    lengthscale_prior: m @ HyperPrior::BernoulliMixture { .. },
                    ..
                } => m,
                _ => return Err(usage("priorcvae-binary needs a binary-condition preset")),
            };
            let (_, amp, noise) = gp_scalars(&config);
            Box::new(DecoderGpModel::with_relaxed_binary(
                cvae,
                GaussianObservations::new(obs.indices, obs.values)?,
                &mixture,
                amp,
                noise,
            )?)
        }
        "sircvae" => {
            let model_path = args.model.as_ref().ok_or_else(|| usage("--model is required"))?;
            let cvae = load_model(model_path)?;
            let observed = read_observation_csv(&args.data)?;
            let n_pop = match config.data {
                DataSource::Sir { template, .. } => template.n_pop,
                _ => return Err(usage("sircvae needs the sir preset")),
            };
            Box::new(SirCvaeModel::new(
                cvae,
                observed,
                n_pop,
                ScalarParam::positive("beta", HyperPrior::TruncNormalPos { loc: 2.0, scale: 1.0 }),
                ScalarParam::positive("gamma", HyperPrior::TruncNormalPos { loc: 0.4, scale: 0.5 }),
                ScalarParam::positive("phi_inv", HyperPrior::Exponential { rate: 5.0 }),
            )?)
        }
        "binomspatial" => {
            let model_path = args.model.as_ref().ok_or_else(|| usage("--model is required"))?;
            let cvae = load_model(model_path)?;
            let (trials, successes) = read_spatial_observations(&args.data)?;
            Box::new(BinomSpatialCvaeModel::new(
                cvae,
                BinomialObservations::new(trials, successes)?,
                ScalarParam::positive("lengthscale", HyperPrior::Gamma { shape: 2.0, rate: 4.0 }),
                ScalarParam::positive("amplitude", HyperPrior::Gamma { shape: 1.5, rate: 1.5 }),
                1.0,
            )?)
        }
        "binomspatial-gp" => {
            let scen_path = args
                .scenario
                .as_ref()
                .ok_or_else(|| usage("--scenario is required for binomspatial-gp"))?;
            let scenario = SpatialScenario::load(scen_path)?;
            let (trials, successes) = read_spatial_observations(&args.data)?;
            Box::new(BinomSpatialGpModel::new(
                scenario.grid()?,
                KernelSpec::rbf(0.25, 1.0)?,
                BinomialObservations::new(trials, successes)?,
                ScalarParam::positive("lengthscale", HyperPrior::Gamma { shape: 2.0, rate: 4.0 }),
                ScalarParam::positive("amplitude", HyperPrior::Gamma { shape: 1.5, rate: 1.5 }),
                1.0,
            )?)
        }
        other => {
            return Err(usage(format!(
                "unknown kind {other:?}; expected one of gp-exact, priorvae, priorcvae, \
                 priorcvae-binary, sircvae, binomspatial, binomspatial-gp"
            )))
        }
    };

    let run = hmc_sample(model.as_ref(), &config.hmc)?;
    let summaries = summarize(&run)?;
    write_chain_csvs(&run, &out)?;
    write_summary_csv(&summaries, &out.join("summary.csv"))?;
    let meta = RunMetadata::from_run(&run, &summaries);
    write_run_metadata(&meta, &out.join("run.json"))?;
    echo_config(&config, &out)?;
    if run.divergence_warning {
        eprintln!(
            "warning: {} divergent transitions post warmup (> 20% of draws)",
            run.total_divergences()
        );
    }
    println!(
        "run complete: {} chains x {} draws in {:.2}s, artifacts in {}",
        config.hmc.chains,
        config.hmc.samples,
        run.wall_secs,
        out.display()
    );
    for s in summaries.iter().filter(|s| !s.name.starts_with("z_")) {
        println!(
            "  {}: mean {:.4} sd {:.4} 90% [{:.4}, {:.4}] ess {:.0} rhat {:.3}",
            s.name, s.mean, s.sd, s.q05, s.q95, s.ess, s.rhat
        );
    }
    Ok(())
}

fn cmd_decode(cli: &Cli, args: &DecodeArgs) -> Result<()> {
    let out = require_out(&cli.out)?;
    let model = load_model(&args.model)?;
    if args.conditions.is_empty() && model.condition_dim() > 0 {
        return Err(usage("--condition is required for a conditional model"));
    }
    let parsed: Vec<Vec<f64>> = if model.condition_dim() == 0 {
        vec![vec![]]
    } else {
        args.conditions
            .iter()
            .map(|c| {
                c.split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<f64>, _>>()
                    .map_err(|_| usage(format!("bad condition value {c:?}")))
            })
            .collect::<Result<_>>()?
    };
    for cond in &parsed {
        if cond.len() != model.condition_dim() {
            return Err(usage(format!(
                "condition {:?} has arity {}, model expects {}",
                cond,
                cond.len(),
                model.condition_dim()
            )));
        }
    }
    for (i, cond) in parsed.iter().enumerate() {
        let draws = if args.count == 0 {
            Array2::zeros((0, model.n()))
        } else {
            model.decoded_draws(cond, args.count, cli.seed)?
        };
        let conditions = Array2::from_shape_fn((draws.nrows(), cond.len()), |(_, j)| cond[j]);
        let ds = PriorDataset::new(conditions, draws.clone())?;
        let path = if parsed.len() == 1 {
            out.clone()
        } else {
            let stem = out
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_default();
            let ext = out
                .extension()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "csv".into());
            out.with_file_name(format!("{stem}-{i}.{ext}"))
        };
        ds.write_csv(&path)?;
        println!(
            "wrote {} draws at condition {:?} to {}",
            ds.rows(),
            cond,
            path.display()
        );
        if let Some(svg_path) = &args.svg {
            let svg_path = if parsed.len() == 1 {
                svg_path.clone()
            } else {
                let stem = svg_path
                    .file_stem()
                    .map(|s| s.to_string_lossy().to_string())
                    .unwrap_or_default();
                svg_path.with_file_name(format!("{stem}-{i}.svg"))
            };
            let title = format!("decoded draws at condition {cond:?}");
            std::fs::write(&svg_path, svg::line_plot(&draws, &title, 30))
                .with_context(|| format!("writing {}", svg_path.display()))?;
        }
    }
    Ok(())
}

fn cmd_compare(cli: &Cli, args: &CompareArgs) -> Result<()> {
    let out = require_out(&cli.out)?;
    let mut report = String::from("model,time_s,ess,ess_per_s\n");
    let mut param_tables: Vec<(String, Vec<priorcvae_core::mcmc::ParamSummary>)> = Vec::new();
    for dir in &args.runs {
        let name = dir
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| dir.display().to_string());
        let meta = read_run_metadata(&dir.join("run.json"))?;
        let summaries = priorcvae_core::mcmc::read_summary_csv(&dir.join("summary.csv"))?;
        let _ = writeln!(
            report,
            "{name},{},{},{}",
            meta.wall_secs,
            meta.total_ess,
            meta.total_ess / meta.wall_secs
        );
        param_tables.push((name, summaries));
    }

    // per-parameter means side by side; runs missing a parameter get NA
    let mut all_params: Vec<String> = Vec::new();
    for (_, summaries) in &param_tables {
        for s in summaries {
            if !all_params.contains(&s.name) {
                all_params.push(s.name.clone());
            }
        }
    }
    report.push('\n');
    report.push_str("param");
    for (name, _) in &param_tables {
        let _ = write!(report, ",{name}_mean");
    }
    report.push('\n');
    for p in &all_params {
        let _ = write!(report, "{p}");
        for (_, summaries) in &param_tables {
            match summaries.iter().find(|s| &s.name == p) {
                Some(s) => {
                    let _ = write!(report, ",{}", s.mean);
                }
                None => report.push_str(",NA"),
            }
        }
        report.push('\n');
    }

    if let Some(kernel_name) = &args.kernel {
        if args.decoded.is_empty() {
            return Err(usage("--kernel given but no --decoded files"));
        }
        let grid = Grid::equispaced_1d(args.grid_n, 0.0, 1.0)?;
        let mut vae_cov: Option<Array2<f64>> = None;
        let mut cvae_files: Vec<(f64, Array2<f64>)> = Vec::new();
        for spec in &args.decoded {
            let (label, path) = spec
                .split_once('=')
                .ok_or_else(|| usage(format!("--decoded expects label=path, got {spec:?}")))?;
            let ds = PriorDataset::read_csv(Path::new(path))?;
            let cov = empirical_covariance(ds.draws())?;
            match label {
                "priorvae" => vae_cov = Some(cov),
                "priorcvae" => {
                    if ds.k() != 1 || ds.rows() == 0 {
                        return Err(usage(format!(
                            "{path}: expected one condition column with rows"
                        )));
                    }
                    cvae_files.push((ds.conditions()[[0, 0]], cov));
                }
                other => return Err(usage(format!("unknown decoded label {other:?}"))),
            }
        }
        cvae_files.sort_by(|a, b| a.0.total_cmp(&b.0));
        report.push('\n');
        report.push_str("lengthscale,F_priorvae,F_priorcvae\n");
        for (ell, cvae_cov) in &cvae_files {
            let family = match kernel_name.as_str() {
                "rbf" => KernelSpec::rbf(*ell, 1.0)?,
                "matern12" => KernelSpec::matern12(*ell, 1.0)?,
                "matern52" => KernelSpec::matern52(*ell, 1.0)?,
                other => return Err(usage(format!("unknown kernel {other:?}"))),
            };
            let analytic = build_covariance(&family, &grid, 0.0)?.entries;
            let f_cvae = frobenius_distance(cvae_cov, &analytic)?;
            let f_vae = match &vae_cov {
                Some(cov) => format!("{}", frobenius_distance(cov, &analytic)?),
                None => "NA".into(),
            };
            let _ = writeln!(report, "{ell},{f_vae},{f_cvae}");
        }
    }

    std::fs::write(&out, &report).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "wrote comparison over {} runs to {}",
        args.runs.len(),
        out.display()
    );
    Ok(())
}
