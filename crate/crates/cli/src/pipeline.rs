//! Shared glue between presets and the core library: dataset builders,
//! architecture construction, observation-file formats.

use crate::presets::{ArchConfig, DataSource, ResolvedConfig};
use anyhow::{anyhow, bail, Context, Result};
use priorcvae_core::cov::build_covariance;
use priorcvae_core::cvae::CvaeModel;
use priorcvae_core::dynamics::{euler_maruyama_dw_mixture, sample_sir_dataset};
use priorcvae_core::gp::{draw_with_factor, sample_gp_dataset};
use priorcvae_core::neural::{Activation, MlpParams};
use priorcvae_core::rng::stream_rng;
use priorcvae_core::spatial::{generate_scenario, SpatialScenario};
use priorcvae_core::{Grid, HyperPrior, KernelFamily, KernelSpec, PriorDataset};
use rand_distr::{Distribution, StandardNormal};
use std::fmt::Write as _;
use std::path::Path;

pub fn kernel_for(family: KernelFamily, lengthscale: f64) -> Result<KernelSpec> {
    let spec = match family {
        KernelFamily::Rbf => KernelSpec::rbf(lengthscale, 1.0),
        KernelFamily::Matern12 => KernelSpec::matern12(lengthscale, 1.0),
        KernelFamily::Matern52 => KernelSpec::matern52(lengthscale, 1.0),
        KernelFamily::LinTimesRbf { c_lin } => KernelSpec::lin_times_rbf(lengthscale, c_lin),
    };
    Ok(spec?)
}

/// Grid the preset's draws live on.
pub fn grid_for(config: &ResolvedConfig) -> Result<Grid> {
    match &config.data {
        DataSource::Gp1d { n, .. } => Ok(Grid::equispaced_1d(*n, 0.0, 1.0)?),
        DataSource::Sir { template, .. } => {
            Ok(Grid::equispaced_1d(template.days + 1, 0.0, template.days as f64)?)
        }
        DataSource::DoubleWell { settings } => {
            let p = &settings[0];
            Ok(Grid::equispaced_1d(p.encoded_len(), 0.0, p.t_end)?)
        }
        DataSource::Spatial { units, trials_per_unit } => {
            let scenario = SpatialScenario::synthetic(*units, *trials_per_unit, config.seed)?;
            Ok(scenario.grid()?)
        }
    }
}

/// Generates the preset's training dataset.
pub fn build_dataset(config: &ResolvedConfig, count: usize, seed: u64) -> Result<PriorDataset> {
    let ds = match &config.data {
        DataSource::Gp1d { family, lengthscale_prior, .. } => {
            let base = kernel_for(*family, 0.5)?;
            let grid = grid_for(config)?;
            sample_gp_dataset(&base, lengthscale_prior, &grid, count, seed)?
        }
        DataSource::Sir { template, beta_prior, gamma_prior } => {
            sample_sir_dataset(beta_prior, gamma_prior, template, count, seed)?
        }
        DataSource::DoubleWell { settings } => euler_maruyama_dw_mixture(settings, count, seed)?,
        DataSource::Spatial { units, trials_per_unit } => {
            let scenario = SpatialScenario::synthetic(*units, *trials_per_unit, config.seed)?;
            let base = KernelSpec::rbf(0.25, 1.0)?;
            sample_gp_dataset(
                &base,
                &HyperPrior::Uniform { a: 0.01, b: 0.99 },
                &scenario.grid()?,
                count,
                seed,
            )?
        }
    };
    Ok(ds)
}

/// Builds an untrained model matching the architecture and a dataset shape.
pub fn build_model(arch: &ArchConfig, n: usize, k: usize, seed: u64) -> Result<CvaeModel> {
    let d = arch.latent_dim;
    let mut enc_sizes = vec![n + k];
    enc_sizes.extend(&arch.hidden);
    enc_sizes.push(2 * d);
    let mut enc_acts = vec![arch.hidden_activation; arch.hidden.len()];
    enc_acts.push(Activation::Identity);

    let mut dec_sizes = vec![d + k];
    dec_sizes.extend(arch.hidden.iter().rev());
    dec_sizes.push(n);
    let mut dec_acts = vec![arch.hidden_activation; arch.hidden.len()];
    dec_acts.push(if arch.sigmoid_output {
        Activation::Sigmoid
    } else {
        Activation::Identity
    });

    let encoder = MlpParams::init(&enc_sizes, &enc_acts, seed)?;
    let decoder = MlpParams::init(&dec_sizes, &dec_acts, seed ^ 0x9E37_79B9)?;
    Ok(CvaeModel::new(encoder, decoder, d, k, arch.sigma2_vae)?)
}

/// Observations for the 1-D GP inference demos: grid indices and values.
pub struct GpObservations {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

pub fn write_gp_observations(obs: &GpObservations, path: &Path) -> Result<()> {
    let mut out = String::from("index,value\n");
    for (i, v) in obs.indices.iter().zip(&obs.values) {
        let _ = writeln!(out, "{i},{v}");
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_gp_observations(path: &Path) -> Result<GpObservations> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "index,value" => {}
        _ => bail!("{}: expected header index,value", path.display()),
    }
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut f = line.split(',');
        let idx: usize = f
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| anyhow!("{}: line {}: bad index", path.display(), lineno + 1))?;
        let val: f64 = f
            .next()
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| anyhow!("{}: line {}: bad value", path.display(), lineno + 1))?;
        indices.push(idx);
        values.push(val);
    }
    Ok(GpObservations { indices, values })
}

/// Binomial observations for the spatial demo.
pub fn write_spatial_observations(trials: &[u64], successes: &[u64], path: &Path) -> Result<()> {
    let mut out = String::from("unit,trials,successes\n");
    for (i, (n, y)) in trials.iter().zip(successes).enumerate() {
        let _ = writeln!(out, "{i},{n},{y}");
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_spatial_observations(path: &Path) -> Result<(Vec<u64>, Vec<u64>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "unit,trials,successes" => {}
        _ => bail!("{}: expected header unit,trials,successes", path.display()),
    }
    let mut trials = Vec::new();
    let mut successes = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            bail!("{}: line {}: expected 3 fields", path.display(), lineno + 1);
        }
        trials.push(fields[1].trim().parse().map_err(|_| {
            anyhow!("{}: line {}: bad trials", path.display(), lineno + 1)
        })?);
        successes.push(fields[2].trim().parse().map_err(|_| {
            anyhow!("{}: line {}: bad successes", path.display(), lineno + 1)
        })?);
    }
    Ok((trials, successes))
}

/// Synthetic observation scenario for a preset: the file(s) the `infer`
/// command consumes.
pub struct ObservationArtifacts {
    pub description: String,
    pub truth: serde_json::Value,
}

/// Generates the inference observations for a preset into `out` (and a
/// scenario file next to it for the spatial demo). Returns provenance.
pub fn generate_observations(
    config: &ResolvedConfig,
    obs_count: usize,
    out: &Path,
) -> Result<ObservationArtifacts> {
    match &config.data {
        DataSource::Gp1d { n, family, lengthscale_prior } => {
            // ground truth at a representative in-range lengthscale
            let ell_true = match lengthscale_prior {
                HyperPrior::BernoulliMixture { l2, .. } => *l2,
                _ => 0.2,
            };
            let spec = kernel_for(*family, ell_true)?;
            let grid = Grid::equispaced_1d(*n, 0.0, 1.0)?;
            let l = build_covariance(&spec, &grid, 1e-6)?.cholesky_lower()?;
            let mut rng = stream_rng(config.seed, 9_001);
            let f_true = draw_with_factor(&l, &mut rng);
            let s_z: f64 = StandardNormal.sample(&mut rng);
            let noise_sd = 0.1 * s_z.abs();
            if obs_count < 2 || obs_count > *n {
                bail!("observation count {obs_count} outside 2..={n}");
            }
            let indices: Vec<usize> = (0..obs_count)
                .map(|i| 4 + i * (n - 8) / (obs_count - 1))
                .collect();
            let values: Vec<f64> = indices
                .iter()
                .map(|&i| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    f_true[i] + noise_sd * e
                })
                .collect();
            write_gp_observations(&GpObservations { indices, values }, out)?;
            Ok(ObservationArtifacts {
                description: format!("{obs_count} noisy GP observations"),
                truth: serde_json::json!({
                    "lengthscale_true": ell_true,
                    "noise_sd_true": noise_sd,
                    "condition_truth": match lengthscale_prior {
                        HyperPrior::BernoulliMixture { .. } => Some(1.0),
                        _ => None,
                    },
                }),
            })
        }
        DataSource::Sir { .. } => {
            priorcvae_core::dynamics::write_boarding_school_csv(out)?;
            Ok(ObservationArtifacts {
                description: "boarding-school outbreak series".into(),
                truth: serde_json::json!({"source": "1978 boarding school influenza outbreak"}),
            })
        }
        DataSource::DoubleWell { .. } => {
            bail!("the double-well preset is a prior-encoding demo; it has no observation model")
        }
        DataSource::Spatial { units, trials_per_unit } => {
            let scenario = SpatialScenario::synthetic(*units, *trials_per_unit, config.seed)?;
            let y = generate_scenario(&scenario)?;
            write_spatial_observations(&scenario.trials, &y, out)?;
            let scen_path = out.with_extension("scenario.json");
            scenario.save(&scen_path)?;
            Ok(ObservationArtifacts {
                description: format!(
                    "{units} binomial units (scenario at {})",
                    scen_path.display()
                ),
                truth: serde_json::json!({
                    "b0": scenario.true_b0,
                    "lengthscale": scenario.true_ell,
                    "sigma": scenario.true_sigma,
                    "scenario_path": scen_path.display().to_string(),
                }),
            })
        }
    }
}
