//! Hamiltonian Monte Carlo with dual-averaging step-size adaptation.
//!
//! Plain HMC with a fixed leapfrog count and identity mass matrix. Chains
//! run independently (optionally in parallel) with per-chain derived seeds;
//! the step size adapts toward a target acceptance during warmup and is
//! frozen afterwards.

use super::diagnostics::{ess, r_hat};
use crate::error::CoreError;
use crate::rng::stream_rng;
use crate::Result;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A differentiable unnormalised posterior on the unconstrained scale.
pub trait PosteriorModel: Sync {
    fn param_names(&self) -> Vec<String>;
    fn dim(&self) -> usize;
    /// Log density and its gradient at the unconstrained position.
    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)>;
    /// Maps an unconstrained position to the reported (constrained) scale.
    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64>;
    /// Starting point for a chain.
    fn initial(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        Array1::from_shape_fn(self.dim(), |_| {
            let z: f64 = StandardNormal.sample(rng);
            0.1 * z
        })
    }
}

/// Sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HmcConfig {
    pub warmup: usize,
    pub samples: usize,
    pub chains: usize,
    /// Leapfrog steps per proposal.
    pub leapfrog: usize,
    pub target_accept: f64,
    pub seed: u64,
}

impl Default for HmcConfig {
    fn default() -> Self {
        HmcConfig {
            warmup: 500,
            samples: 2000,
            chains: 2,
            leapfrog: 32,
            target_accept: 0.8,
            seed: 0,
        }
    }
}

impl HmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.warmup == 0 || self.samples == 0 || self.chains == 0 || self.leapfrog == 0 {
            return Err(CoreError::InvalidParameter(
                "warmup, samples, chains and leapfrog must all be >= 1".into(),
            ));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(CoreError::InvalidParameter(format!(
                "target acceptance must lie in (0,1), got {}",
                self.target_accept
            )));
        }
        Ok(())
    }
}

/// Post-warmup draws of one chain, on the constrained scale.
#[derive(Debug, Clone)]
pub struct ChainDraws {
    pub draws: Array2<f64>,
    /// Mean Metropolis acceptance probability post warmup.
    pub accept_rate: f64,
    pub divergences: usize,
    /// Frozen step size used after warmup.
    pub step_size: f64,
}

/// A completed sampling run.
#[derive(Debug, Clone)]
pub struct HmcRun {
    pub param_names: Vec<String>,
    pub chains: Vec<ChainDraws>,
    pub wall_secs: f64,
    pub divergence_warning: bool,
    pub config: HmcConfig,
}

impl HmcRun {
    /// Per-chain series of one parameter.
    pub fn param_chains(&self, idx: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.column(idx).to_vec())
            .collect()
    }

    /// All post-warmup draws of one parameter pooled across chains.
    pub fn pooled(&self, idx: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.chains {
            out.extend(c.draws.column(idx).iter().copied());
        }
        out
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn total_divergences(&self) -> usize {
        self.chains.iter().map(|c| c.divergences).sum()
    }
}

struct LeapfrogOutcome {
    q: Array1<f64>,
    logp: f64,
    grad: Array1<f64>,
    delta_h: f64,
    divergent: bool,
}

fn leapfrog(
    model: &dyn PosteriorModel,
    q0: &Array1<f64>,
    logp0: f64,
    grad0: &Array1<f64>,
    p0: &Array1<f64>,
    eps: f64,
    steps: usize,
) -> LeapfrogOutcome {
    let mut q = q0.clone();
    let mut grad = grad0.clone();
    let mut logp = logp0;
    let mut p = p0 + &(eps / 2.0 * &grad);
    for step in 1..=steps {
        q.scaled_add(eps, &p);
        match model.log_posterior(&q) {
            Ok((lp, g)) if lp.is_finite() && g.iter().all(|v| v.is_finite()) => {
                logp = lp;
                grad = g;
            }
            _ => {
                return LeapfrogOutcome {
                    q,
                    logp: f64::NEG_INFINITY,
                    grad,
                    delta_h: f64::NEG_INFINITY,
                    divergent: true,
                }
            }
        }
        if step < steps {
            p.scaled_add(eps, &grad);
        }
    }
    p.scaled_add(eps / 2.0, &grad);
    let h0 = logp0 - 0.5 * p0.dot(p0);
    let h1 = logp - 0.5 * p.dot(&p);
    let delta_h = h1 - h0;
    let divergent = !delta_h.is_finite() || delta_h < -1000.0;
    LeapfrogOutcome {
        q,
        logp,
        grad,
        delta_h,
        divergent,
    }
}

/// Doubles/halves the step until one leapfrog step's acceptance crosses 1/2.
fn reasonable_step(
    model: &dyn PosteriorModel,
    q: &Array1<f64>,
    logp: f64,
    grad: &Array1<f64>,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let mut eps = 0.1;
    let p = Array1::from_shape_fn(q.len(), |_| StandardNormal.sample(rng));
    let alpha = |eps: f64| -> f64 {
        let out = leapfrog(model, q, logp, grad, &p, eps, 1);
        if out.divergent {
            f64::NEG_INFINITY
        } else {
            out.delta_h
        }
    };
    let mut a = alpha(eps);
    let dir: f64 = if a > (0.5_f64).ln() { 1.0 } else { -1.0 };
    for _ in 0..30 {
        eps *= 2.0_f64.powf(dir);
        a = alpha(eps);
        let crossed = if dir > 0.0 {
            a <= (0.5_f64).ln()
        } else {
            a > (0.5_f64).ln()
        };
        if crossed || !eps.is_finite() || eps < 1e-10 || eps > 1e6 {
            break;
        }
    }
    eps.clamp(1e-10, 1e6)
}

fn run_chain(
    model: &dyn PosteriorModel,
    config: &HmcConfig,
    chain_idx: usize,
) -> Result<ChainDraws> {
    let mut rng = stream_rng(config.seed, chain_idx as u64);
    let dim = model.dim();
    let mut q = model.initial(&mut rng);
    let (mut logp, mut grad) = model.log_posterior(&q)?;
    if !logp.is_finite() {
        let names = model.param_names();
        return Err(CoreError::NonFiniteDensity {
            params: names.into_iter().zip(q.iter().copied()).collect(),
        });
    }

    // dual averaging state
    let mut eps = reasonable_step(model, &q, logp, &grad, &mut rng);
    let mu = (10.0 * eps).ln();
    let (gamma, t0, kappa) = (0.05, 10.0, 0.75);
    let mut h_bar = 0.0;
    let mut log_eps_bar = 0.0;

    let mut draws = Array2::zeros((config.samples, dim));
    let mut accept_sum = 0.0;
    let mut divergences = 0usize;

    for iter in 0..(config.warmup + config.samples) {
        let p0 = Array1::from_shape_fn(dim, |_| StandardNormal.sample(&mut rng));
        // jitter the trajectory length and step so fixed-length orbits cannot
        // resonate with the target's curvature
        let u_steps: f64 = rng.random();
        let steps = (((config.leapfrog as f64) * (0.5 + 0.5 * u_steps)).ceil() as usize).max(1);
        let u_eps: f64 = rng.random();
        let eps_t = eps * (0.8 + 0.4 * u_eps);
        let out = leapfrog(model, &q, logp, &grad, &p0, eps_t, steps);
        let alpha = if out.divergent {
            0.0
        } else {
            out.delta_h.exp().min(1.0)
        };
        let u: f64 = rng.random();
        if !out.divergent && u < alpha {
            q = out.q;
            logp = out.logp;
            grad = out.grad;
        }
        if iter < config.warmup {
            let m = (iter + 1) as f64;
            h_bar = (1.0 - 1.0 / (m + t0)) * h_bar + (config.target_accept - alpha) / (m + t0);
            let log_eps = mu - m.sqrt() / gamma * h_bar;
            let eta = m.powf(-kappa);
            log_eps_bar = eta * log_eps + (1.0 - eta) * log_eps_bar;
            eps = log_eps.exp();
            if iter + 1 == config.warmup {
                eps = log_eps_bar.exp();
            }
        } else {
            let s = iter - config.warmup;
            draws.row_mut(s).assign(&model.to_constrained(&q));
            accept_sum += alpha;
            if out.divergent {
                divergences += 1;
            }
        }
    }

    Ok(ChainDraws {
        draws,
        accept_rate: accept_sum / config.samples as f64,
        divergences,
        step_size: eps,
    })
}

/// Runs `config.chains` independent chains and collects post-warmup draws.
/// Deterministic given the seed; a post-warmup divergence rate above 20%
/// completes the run but raises the divergence warning.
pub fn hmc_sample(model: &dyn PosteriorModel, config: &HmcConfig) -> Result<HmcRun> {
    config.validate()?;
    let start = std::time::Instant::now();
    let chains: Vec<Result<ChainDraws>> = (0..config.chains)
        .into_par_iter()
        .map(|c| run_chain(model, config, c))
        .collect();
    let chains: Result<Vec<ChainDraws>> = chains.into_iter().collect();
    let chains = chains?;
    let wall_secs = start.elapsed().as_secs_f64();
    let total_draws = config.chains * config.samples;
    let total_div: usize = chains.iter().map(|c| c.divergences).sum();
    Ok(HmcRun {
        param_names: model.param_names(),
        chains,
        wall_secs,
        divergence_warning: total_div as f64 > 0.2 * total_draws as f64,
        config: *config,
    })
}

/// Per-parameter posterior summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q05: f64,
    pub q95: f64,
    pub ess: f64,
    pub rhat: f64,
    pub ess_per_s: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = q * (sorted.len() - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    let frac = idx - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi.min(sorted.len() - 1)] * frac
}

/// Means, sds, 90% central intervals (5th/95th percentiles), ESS, split
/// R-hat and ESS per second for every parameter of a run.
pub fn summarize(run: &HmcRun) -> Result<Vec<ParamSummary>> {
    let mut out = Vec::with_capacity(run.param_names.len());
    for (idx, name) in run.param_names.iter().enumerate() {
        let chains = run.param_chains(idx);
        let mut pooled = run.pooled(idx);
        let n = pooled.len() as f64;
        let mean = pooled.iter().sum::<f64>() / n;
        let sd = (pooled.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        pooled.sort_unstable_by(|a, b| a.total_cmp(b));
        let e = ess(&chains)?;
        let rhat = r_hat(&chains)?;
        out.push(ParamSummary {
            name: name.clone(),
            mean,
            sd,
            q05: quantile(&pooled, 0.05),
            q95: quantile(&pooled, 0.95),
            ess: e.value,
            rhat,
            ess_per_s: if run.wall_secs > 0.0 {
                e.value / run.wall_secs
            } else {
                f64::NAN
            },
        });
    }
    Ok(out)
}

/// Kolmogorov–Smirnov statistic of samples against a reference CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut worst = 0.0_f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        worst = worst.max((f - lo).abs()).max((f - hi).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub struct StandardNormalTarget {
        pub dim: usize,
    }

    impl PosteriorModel for StandardNormalTarget {
        fn param_names(&self) -> Vec<String> {
            (0..self.dim).map(|i| format!("x_{i}")).collect()
        }
        fn dim(&self) -> usize {
            self.dim
        }
        fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
            Ok((-0.5 * u.dot(u), -u.clone()))
        }
        fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
            u.clone()
        }
    }

    #[test]
    fn leapfrog_conserves_energy_at_small_steps() {
        let target = StandardNormalTarget { dim: 1 };
        let mut rng = stream_rng(7, 0);
        for _ in 0..10 {
            let q = Array1::from_vec(vec![StandardNormal.sample(&mut rng)]);
            let p = Array1::from_vec(vec![StandardNormal.sample(&mut rng)]);
            let (logp, grad) = target.log_posterior(&q).unwrap();
            let out = leapfrog(&target, &q, logp, &grad, &p, 1e-3, 100);
            assert!(
                out.delta_h.abs() < 1e-3,
                "energy drift {} over trajectory",
                out.delta_h
            );
        }
    }

    #[test]
    fn standard_normal_moments_recovered() {
        let target = StandardNormalTarget { dim: 1 };
        let config = HmcConfig {
            warmup: 500,
            samples: 5000,
            chains: 2,
            leapfrog: 16,
            target_accept: 0.8,
            seed: 11,
        };
        let run = hmc_sample(&target, &config).unwrap();
        let summary = summarize(&run).unwrap();
        let s = &summary[0];
        let mc_err = 3.0 * s.sd / s.ess.sqrt();
        assert!(
            s.mean.abs() < mc_err,
            "mean {} outside 3 MC errors {mc_err}",
            s.mean
        );
        let var = s.sd * s.sd;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
        assert!(s.rhat < 1.02, "rhat {}", s.rhat);
        // 90% interval close to ±1.645
        assert!((s.q05 + 1.645).abs() < 0.08, "q05 {}", s.q05);
        assert!((s.q95 - 1.645).abs() < 0.08, "q95 {}", s.q95);
    }

    #[test]
    fn same_seed_reproduces_chains() {
        let target = StandardNormalTarget { dim: 2 };
        let config = HmcConfig {
            warmup: 50,
            samples: 100,
            chains: 2,
            leapfrog: 8,
            target_accept: 0.8,
            seed: 3,
        };
        let a = hmc_sample(&target, &config).unwrap();
        let b = hmc_sample(&target, &config).unwrap();
        for (ca, cb) in a.chains.iter().zip(&b.chains) {
            assert_eq!(ca.draws, cb.draws);
        }
    }

    #[test]
    fn summarize_constant_parameter() {
        let run = HmcRun {
            param_names: vec!["c".into()],
            chains: vec![ChainDraws {
                draws: Array2::from_elem((100, 1), 3.0),
                accept_rate: 1.0,
                divergences: 0,
                step_size: 0.1,
            }],
            wall_secs: 2.0,
            divergence_warning: false,
            config: HmcConfig::default(),
        };
        let s = summarize(&run).unwrap();
        assert_eq!(s[0].mean, 3.0);
        assert_eq!(s[0].q05, 3.0);
        assert_eq!(s[0].q95, 3.0);
        assert_eq!(s[0].ess, 0.0); // degenerate chain
        assert_eq!(s[0].rhat, 1.0);
    }

    #[test]
    fn ess_per_second_is_ess_over_wall() {
        let target = StandardNormalTarget { dim: 1 };
        let config = HmcConfig {
            warmup: 100,
            samples: 500,
            chains: 1,
            leapfrog: 8,
            target_accept: 0.8,
            seed: 5,
        };
        let run = hmc_sample(&target, &config).unwrap();
        let s = summarize(&run).unwrap();
        assert_relative_eq!(s[0].ess_per_s, s[0].ess / run.wall_secs, max_relative = 1e-12);
    }

    #[test]
    fn ks_statistic_of_uniform_grid_is_small() {
        let samples: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let ks = ks_statistic(&samples, |x| x.clamp(0.0, 1.0));
        assert!(ks < 0.002, "ks {ks}");
    }
}
