//! Hyperpriors over kernel and model hyperparameters.
//!
//! These drive two things: condition draws during dataset generation, and the
//! prior terms of the log posteriors at inference time.

use crate::error::CoreError;
use crate::rng::stream_rng;
use crate::Result;
use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

/// Supported hyperprior families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HyperPrior {
    /// Uniform on `(a, b)`.
    Uniform { a: f64, b: f64 },
    /// Gamma with shape/rate convention.
    Gamma { shape: f64, rate: f64 },
    /// Two-point mixture: value `l2` with probability `p`, else `l1`.
    BernoulliMixture { l1: f64, l2: f64, p: f64 },
    /// Half-normal `|N(0, scale²)|`.
    HalfNormal { scale: f64 },
    /// Normal `N(loc, scale²)` truncated to the positive half-line.
    TruncNormalPos { loc: f64, scale: f64 },
    /// Exponential with the given rate.
    Exponential { rate: f64 },
}

impl HyperPrior {
    /// Checks the parameter constraints of the family.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CoreError::InvalidParameter(msg));
        match *self {
            HyperPrior::Uniform { a, b } => {
                if !(a < b) {
                    return bad(format!("Uniform requires a < b, got a={a}, b={b}"));
                }
            }
            HyperPrior::Gamma { shape, rate } => {
                if !(shape > 0.0 && rate > 0.0) {
                    return bad(format!("Gamma requires positive shape/rate, got {shape}, {rate}"));
                }
            }
            HyperPrior::BernoulliMixture { p, .. } => {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("mixture weight must be in [0,1], got {p}"));
                }
            }
            HyperPrior::HalfNormal { scale } => {
                if !(scale > 0.0) {
                    return bad(format!("HalfNormal requires positive scale, got {scale}"));
                }
            }
            HyperPrior::TruncNormalPos { scale, .. } => {
                if !(scale > 0.0) {
                    return bad(format!("TruncNormalPos requires positive scale, got {scale}"));
                }
            }
            HyperPrior::Exponential { rate } => {
                if !(rate > 0.0) {
                    return bad(format!("Exponential requires positive rate, got {rate}"));
                }
            }
        }
        Ok(())
    }

    /// One draw using the supplied generator.
    pub fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            HyperPrior::Uniform { a, b } => a + (b - a) * rng.random::<f64>(),
            HyperPrior::Gamma { shape, rate } => {
                let g = Gamma::new(shape, 1.0 / rate).expect("validated");
                g.sample(rng)
            }
            HyperPrior::BernoulliMixture { l1, l2, p } => {
                if rng.random::<f64>() < p {
                    l2
                } else {
                    l1
                }
            }
            HyperPrior::HalfNormal { scale } => {
                let z: f64 = StandardNormal.sample(rng);
                scale * z.abs()
            }
            HyperPrior::TruncNormalPos { loc, scale } => {
                let d = Normal::new(loc, scale).expect("validated");
                loop {
                    let x = d.sample(rng);
                    if x > 0.0 {
                        return x;
                    }
                }
            }
            HyperPrior::Exponential { rate } => Exp::new(rate).expect("validated").sample(rng),
        }
    }

    /// Log density at `x`, up to parameter-independent constants for the
    /// truncated families. The discrete mixture has no density.
    pub fn log_density(&self, x: f64) -> Result<f64> {
        self.validate()?;
        let v = match *self {
            HyperPrior::Uniform { a, b } => {
                if x > a && x < b {
                    -(b - a).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            HyperPrior::Gamma { shape, rate } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (shape - 1.0) * x.ln() - rate * x + shape * rate.ln()
                        - statrs::function::gamma::ln_gamma(shape)
                }
            }
            HyperPrior::BernoulliMixture { .. } => {
                return Err(CoreError::InvalidParameter(
                    "Bernoulli mixture is discrete; relax it before density evaluation".into(),
                ))
            }
            HyperPrior::HalfNormal { scale } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    -0.5 * (x / scale).powi(2) - scale.ln()
                }
            }
            HyperPrior::TruncNormalPos { loc, scale } => {
                if x <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    // truncation constant dropped: it does not depend on x
                    -0.5 * ((x - loc) / scale).powi(2) - scale.ln()
                }
            }
            HyperPrior::Exponential { rate } => {
                if x < 0.0 {
                    f64::NEG_INFINITY
                } else {
                    rate.ln() - rate * x
                }
            }
        };
        Ok(v)
    }

    /// Derivative of [`HyperPrior::log_density`] with respect to `x`, on the
    /// interior of the support.
    pub fn dlog_density(&self, x: f64) -> Result<f64> {
        self.validate()?;
        let v = match *self {
            HyperPrior::Uniform { .. } => 0.0,
            HyperPrior::Gamma { shape, rate } => (shape - 1.0) / x - rate,
            HyperPrior::BernoulliMixture { .. } => {
                return Err(CoreError::InvalidParameter(
                    "Bernoulli mixture is discrete; relax it before density evaluation".into(),
                ))
            }
            HyperPrior::HalfNormal { scale } => -x / (scale * scale),
            HyperPrior::TruncNormalPos { loc, scale } => -(x - loc) / (scale * scale),
            HyperPrior::Exponential { rate } => -rate,
        };
        Ok(v)
    }
}

/// `count` i.i.d. draws, reproducible by seed; draw `i` comes from stream `i`
/// so sharded generation yields identical output.
pub fn sample_hyperprior(prior: &HyperPrior, count: usize, seed: u64) -> Result<Vec<f64>> {
    prior.validate()?;
    Ok((0..count)
        .map(|i| prior.sample_one(&mut stream_rng(seed, i as u64)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn uniform_mean_matches_clt_bound() {
        let prior = HyperPrior::Uniform { a: 0.01, b: 0.99 };
        let draws = sample_hyperprior(&prior, 100_000, 42).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(
            (mean - 0.5).abs() < 0.003,
            "sample mean {mean} outside 3·SE band"
        );
    }

    #[test]
    fn degenerate_mixture_returns_second_component() {
        let prior = HyperPrior::BernoulliMixture {
            l1: 0.1,
            l2: 0.4,
            p: 1.0,
        };
        let draws = sample_hyperprior(&prior, 100, 0).unwrap();
        assert!(draws.iter().all(|&v| v == 0.4));
    }

    #[test]
    fn uniform_support_containment() {
        let eps = 1e-9;
        let prior = HyperPrior::Uniform { a: 3.0, b: 3.0 + eps };
        let draws = sample_hyperprior(&prior, 1000, 9).unwrap();
        assert!(draws.iter().all(|&v| (3.0..=3.0 + eps).contains(&v)));
    }

    #[test]
    fn determinism_by_seed() {
        let prior = HyperPrior::Gamma { shape: 2.0, rate: 4.0 };
        let a = sample_hyperprior(&prior, 50, 7).unwrap();
        let b = sample_hyperprior(&prior, 50, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(HyperPrior::Uniform { a: 1.0, b: 1.0 }.validate().is_err());
        assert!(HyperPrior::Gamma { shape: -1.0, rate: 1.0 }.validate().is_err());
        assert!(HyperPrior::BernoulliMixture { l1: 0.1, l2: 0.4, p: 1.5 }
            .validate()
            .is_err());
        assert!(HyperPrior::HalfNormal { scale: 0.0 }.validate().is_err());
    }

    #[test]
    fn gamma_density_normalised_against_quadrature() {
        // trapezoid over a fine grid as an independent check of the log pdf
        let prior = HyperPrior::Gamma { shape: 2.0, rate: 4.0 };
        let n = 200_000;
        let hi = 10.0;
        let h = hi / n as f64;
        let mut total = 0.0;
        for i in 1..n {
            let x = i as f64 * h;
            total += prior.log_density(x).unwrap().exp() * h;
        }
        assert_relative_eq!(total, 1.0, max_relative = 1e-4);
    }

    #[test]
    fn dlog_density_matches_finite_differences() {
        let priors = [
            HyperPrior::Gamma { shape: 2.0, rate: 4.0 },
            HyperPrior::HalfNormal { scale: 0.1 },
            HyperPrior::TruncNormalPos { loc: 2.0, scale: 1.0 },
            HyperPrior::Exponential { rate: 5.0 },
            HyperPrior::Uniform { a: 0.0, b: 1.0 },
        ];
        let h = 1e-6;
        for p in &priors {
            let x = 0.35;
            let fd = (p.log_density(x + h).unwrap() - p.log_density(x - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(p.dlog_density(x).unwrap(), fd, max_relative = 1e-5, epsilon = 1e-8);
        }
    }

    #[test]
    fn truncated_normal_draws_are_positive() {
        let prior = HyperPrior::TruncNormalPos { loc: 0.4, scale: 0.5 };
        let draws = sample_hyperprior(&prior, 5000, 3).unwrap();
        assert!(draws.iter().all(|&v| v > 0.0));
    }
}
