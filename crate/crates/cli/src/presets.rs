//! Experiment presets: one fully runnable configuration per experiment,
//! desk-scale by default, published-scale behind `--paper-scale`.

use anyhow::{bail, Result};
use priorcvae_core::dynamics::{DoubleWellParams, SirParams, BOARDING_SCHOOL_I0, BOARDING_SCHOOL_N};
use priorcvae_core::mcmc::HmcConfig;
use priorcvae_core::neural::Activation;
use priorcvae_core::{HyperPrior, KernelFamily};
use serde::{Deserialize, Serialize};

pub const PRESET_NAMES: [&str; 8] = [
    "gp1d-matern52",
    "gp1d-rbf",
    "gp1d-binary",
    "nonstationary",
    "lgcp-integral",
    "doublewell",
    "sir",
    "spatial",
];

/// What kind of training data the preset generates.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum DataSource {
    /// GP draws over a 1-D grid with the lengthscale as condition.
    Gp1d {
        n: usize,
        family: KernelFamily,
        lengthscale_prior: HyperPrior,
    },
    /// SIR infected-fraction curves conditioned on `(β, γ)`.
    Sir {
        template: SirParams,
        beta_prior: HyperPrior,
        gamma_prior: HyperPrior,
    },
    /// Double-well trajectories at a mixture of `(θ₁, θ₂)` settings.
    DoubleWell { settings: Vec<DoubleWellParams> },
    /// Unit-variance RBF draws over 2-D unit centroids.
    Spatial { units: usize, trials_per_unit: u64 },
}

/// Network and objective settings.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ArchConfig {
    pub hidden: Vec<usize>,
    pub latent_dim: usize,
    pub hidden_activation: Activation,
    pub sigmoid_output: bool,
    pub sigma2_vae: f64,
    /// Integral-augmentation weight (`lgcp-integral` only).
    pub sigma2_int: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TrainScale {
    pub rows: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

/// A fully resolved experiment configuration. Serialised verbatim into every
/// run's output directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedConfig {
    pub preset: String,
    pub paper_scale: bool,
    pub seed: u64,
    pub data: DataSource,
    pub arch: ArchConfig,
    pub train: TrainScale,
    pub hmc: HmcConfig,
}

fn desk_hmc(seed: u64) -> HmcConfig {
    HmcConfig {
        warmup: 500,
        samples: 2000,
        chains: 2,
        leapfrog: 32,
        target_accept: 0.8,
        seed,
    }
}

fn paper_hmc(seed: u64) -> HmcConfig {
    HmcConfig {
        warmup: 5000,
        samples: 50_000,
        chains: 3,
        leapfrog: 32,
        target_accept: 0.8,
        seed,
    }
}

/// Builds the configuration for a named preset.
pub fn resolve(name: &str, paper_scale: bool, seed: u64) -> Result<ResolvedConfig> {
    let hmc = if paper_scale { paper_hmc(seed) } else { desk_hmc(seed) };
    let (data, arch, train) = match name {
        "gp1d-matern52" | "gp1d-rbf" => {
            let family = if name == "gp1d-rbf" {
                KernelFamily::Rbf
            } else {
                KernelFamily::Matern52
            };
            (
                DataSource::Gp1d {
                    n: 80,
                    family,
                    lengthscale_prior: HyperPrior::Uniform { a: 0.01, b: 0.99 },
                },
                ArchConfig {
                    hidden: vec![60],
                    latent_dim: 40,
                    hidden_activation: Activation::LeakyRelu(0.01),
                    sigmoid_output: false,
                    sigma2_vae: 1.0,
                    sigma2_int: None,
                },
                if paper_scale {
                    TrainScale { rows: 100_000, epochs: 500, batch_size: 2000, learning_rate: 1e-3 }
                } else {
                    TrainScale { rows: 20_000, epochs: 200, batch_size: 500, learning_rate: 1e-3 }
                },
            )
        }
        "gp1d-binary" => (
            DataSource::Gp1d {
                n: 100,
                family: KernelFamily::Rbf,
                lengthscale_prior: HyperPrior::BernoulliMixture { l1: 0.1, l2: 0.4, p: 0.5 },
            },
            ArchConfig {
                hidden: vec![70],
                latent_dim: 50,
                hidden_activation: Activation::LeakyRelu(0.01),
                sigmoid_output: false,
                sigma2_vae: 0.9,
                sigma2_int: None,
            },
            if paper_scale {
                TrainScale { rows: 100_000, epochs: 250, batch_size: 1000, learning_rate: 1e-3 }
            } else {
                TrainScale { rows: 20_000, epochs: 250, batch_size: 500, learning_rate: 1e-3 }
            },
        ),
        "nonstationary" => (
            DataSource::Gp1d {
                n: 80,
                family: KernelFamily::LinTimesRbf { c_lin: 0.4 },
                lengthscale_prior: HyperPrior::Uniform { a: 0.01, b: 0.4 },
            },
            ArchConfig {
                hidden: vec![60],
                latent_dim: 40,
                hidden_activation: Activation::LeakyRelu(0.01),
                sigmoid_output: false,
                sigma2_vae: 0.01,
                sigma2_int: None,
            },
            if paper_scale {
                TrainScale { rows: 100_000, epochs: 5000, batch_size: 2000, learning_rate: 1e-3 }
            } else {
                TrainScale { rows: 20_000, epochs: 200, batch_size: 500, learning_rate: 1e-3 }
            },
        ),
        "lgcp-integral" => (
            DataSource::Gp1d {
                n: 80,
                family: KernelFamily::Rbf,
                lengthscale_prior: HyperPrior::Uniform { a: 0.1, b: 0.5 },
            },
            ArchConfig {
                hidden: vec![60],
                latent_dim: 40,
                hidden_activation: Activation::LeakyRelu(0.01),
                sigmoid_output: false,
                sigma2_vae: 1.0,
                sigma2_int: Some(0.1),
            },
            if paper_scale {
                TrainScale { rows: 100_000, epochs: 500, batch_size: 2000, learning_rate: 1e-3 }
            } else {
                TrainScale { rows: 20_000, epochs: 200, batch_size: 500, learning_rate: 1e-3 }
            },
        ),
        "doublewell" => {
            let settings = vec![
                DoubleWellParams { theta1: 2.0, theta2: 3.0, ..DoubleWellParams::default() },
                DoubleWellParams { theta1: 4.0, theta2: 1.0, ..DoubleWellParams::default() },
            ];
            (
                DataSource::DoubleWell { settings },
                if paper_scale {
                    ArchConfig {
                        hidden: vec![1000, 500, 100],
                        latent_dim: 50,
                        hidden_activation: Activation::Sigmoid,
                        sigmoid_output: false,
                        sigma2_vae: 1.0,
                        sigma2_int: None,
                    }
                } else {
                    ArchConfig {
                        hidden: vec![200, 100],
                        latent_dim: 30,
                        hidden_activation: Activation::Sigmoid,
                        sigmoid_output: false,
                        sigma2_vae: 1.0,
                        sigma2_int: None,
                    }
                },
                if paper_scale {
                    TrainScale { rows: 100_000, epochs: 100, batch_size: 2000, learning_rate: 1e-3 }
                } else {
                    TrainScale { rows: 8_000, epochs: 120, batch_size: 500, learning_rate: 1e-3 }
                },
            )
        }
        "sir" => (
            DataSource::Sir {
                template: SirParams {
                    beta: 0.0,
                    gamma: 0.0,
                    n_pop: BOARDING_SCHOOL_N,
                    i0: BOARDING_SCHOOL_I0,
                    days: 13,
                },
                beta_prior: HyperPrior::Uniform { a: 0.0, b: 4.0 },
                gamma_prior: HyperPrior::Uniform { a: 0.0, b: 1.5 },
            },
            ArchConfig {
                hidden: vec![10],
                latent_dim: 6,
                hidden_activation: Activation::LeakyRelu(0.01),
                sigmoid_output: true,
                sigma2_vae: 1.0,
                sigma2_int: None,
            },
            if paper_scale {
                TrainScale { rows: 100_000, epochs: 200, batch_size: 2000, learning_rate: 1e-3 }
            } else {
                TrainScale { rows: 20_000, epochs: 300, batch_size: 500, learning_rate: 1e-3 }
            },
        ),
        "spatial" => (
            DataSource::Spatial { units: 63, trials_per_unit: 500 },
            ArchConfig {
                hidden: vec![60],
                latent_dim: 30,
                hidden_activation: Activation::LeakyRelu(0.01),
                sigmoid_output: false,
                sigma2_vae: 1.0,
                sigma2_int: None,
            },
            if paper_scale {
                TrainScale { rows: 100_000, epochs: 10_000, batch_size: 2000, learning_rate: 1e-3 }
            } else {
                TrainScale { rows: 20_000, epochs: 150, batch_size: 500, learning_rate: 1e-3 }
            },
        ),
        other => bail!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ),
    };
    Ok(ResolvedConfig {
        preset: name.to_string(),
        paper_scale,
        seed,
        data,
        arch,
        train,
        hmc,
    })
}

/// Partial overrides loaded from a `--config` file; any present field
/// replaces the preset's value before CLI flags apply on top.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConfigOverrides {
    pub preset: Option<String>,
    pub seed: Option<u64>,
    pub paper_scale: Option<bool>,
    pub rows: Option<usize>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub sigma2_vae: Option<f64>,
    pub sigma2_int: Option<f64>,
    pub latent_dim: Option<usize>,
    pub hidden: Option<Vec<usize>>,
    pub warmup: Option<usize>,
    pub samples: Option<usize>,
    pub chains: Option<usize>,
    pub leapfrog: Option<usize>,
    pub target_accept: Option<f64>,
}

impl ConfigOverrides {
    pub fn apply(&self, config: &mut ResolvedConfig) {
        if let Some(v) = self.seed {
            config.seed = v;
            config.hmc.seed = v;
        }
        if let Some(v) = self.rows {
            config.train.rows = v;
        }
        if let Some(v) = self.epochs {
            config.train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            config.train.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            config.train.learning_rate = v;
        }
        if let Some(v) = self.sigma2_vae {
            config.arch.sigma2_vae = v;
        }
        if let Some(v) = self.sigma2_int {
            config.arch.sigma2_int = Some(v);
        }
        if let Some(v) = self.latent_dim {
            config.arch.latent_dim = v;
        }
        if let Some(v) = &self.hidden {
            config.arch.hidden = v.clone();
        }
        if let Some(v) = self.warmup {
            config.hmc.warmup = v;
        }
        if let Some(v) = self.samples {
            config.hmc.samples = v;
        }
        if let Some(v) = self.chains {
            config.hmc.chains = v;
        }
        if let Some(v) = self.leapfrog {
            config.hmc.leapfrog = v;
        }
        if let Some(v) = self.target_accept {
            config.hmc.target_accept = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves_at_both_scales() {
        for name in PRESET_NAMES {
            for paper in [false, true] {
                let c = resolve(name, paper, 7).unwrap();
                assert_eq!(c.preset, name);
                assert!(c.train.rows > 0 && c.train.epochs > 0);
            }
        }
        assert!(resolve("nope", false, 0).is_err());
    }

    #[test]
    fn paper_scale_restores_published_numbers() {
        let c = resolve("gp1d-matern52", true, 0).unwrap();
        assert_eq!(c.train.rows, 100_000);
        assert_eq!(c.train.epochs, 500);
        assert_eq!(c.train.batch_size, 2000);
        assert_eq!(c.hmc.warmup, 5000);
        assert_eq!(c.hmc.samples, 50_000);
        assert_eq!(c.hmc.chains, 3);
        let b = resolve("gp1d-binary", true, 0).unwrap();
        assert_eq!(b.arch.sigma2_vae, 0.9);
        assert_eq!(b.arch.hidden, vec![70]);
        assert_eq!(b.arch.latent_dim, 50);
        let d = resolve("doublewell", true, 0).unwrap();
        assert_eq!(d.arch.hidden, vec![1000, 500, 100]);
        assert_eq!(d.arch.latent_dim, 50);
        let s = resolve("sir", false, 0).unwrap();
        assert_eq!(s.arch.hidden, vec![10]);
        assert_eq!(s.arch.latent_dim, 6);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut c = resolve("gp1d-rbf", false, 1).unwrap();
        let o = ConfigOverrides {
            epochs: Some(7),
            sigma2_vae: Some(0.5),
            chains: Some(4),
            ..Default::default()
        };
        o.apply(&mut c);
        assert_eq!(c.train.epochs, 7);
        assert_eq!(c.arch.sigma2_vae, 0.5);
        assert_eq!(c.hmc.chains, 4);
    }
}
