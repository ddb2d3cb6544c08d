//! The log-posterior model zoo.
//!
//! Every model exposes the same contract: named parameters on an
//! unconstrained scale, an exact log density + gradient (Jacobian terms
//! included), and the map back to the constrained reporting scale.
//!
//! The decoder-backed models sample a low-dimensional latent `z` plus the
//! hyperparameters fed to the decoder as conditions; the exact-GP models
//! sample the whitened field `z_n` and re-factorise the covariance at every
//! gradient evaluation, which is exactly the cost the decoder route avoids.

use super::hmc::PosteriorModel;
use super::transforms::Transform;
use crate::cov::{
    build_covariance, build_covariance_dlengthscale, cholesky_dlower, cholesky_lower,
    DEFAULT_JITTER,
};
use crate::cvae::CvaeModel;
use crate::error::CoreError;
use crate::grid::Grid;
use crate::hyperprior::HyperPrior;
use crate::kernel::KernelSpec;
use crate::Result;
use ndarray::Array1;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::{digamma, ln_gamma};

/// A scalar hyperparameter: prior on the constrained scale plus the
/// unconstraining transform.
#[derive(Debug, Clone)]
pub struct ScalarParam {
    pub name: String,
    pub prior: HyperPrior,
    pub transform: Transform,
}

impl ScalarParam {
    pub fn new(name: impl Into<String>, prior: HyperPrior, transform: Transform) -> Self {
        ScalarParam {
            name: name.into(),
            prior,
            transform,
        }
    }

    /// Positive parameter sampled on the log scale.
    pub fn positive(name: impl Into<String>, prior: HyperPrior) -> Self {
        Self::new(name, prior, Transform::Log)
    }

    /// Interval parameter sampled through a scaled logit.
    pub fn interval(name: impl Into<String>, prior: HyperPrior, a: f64, b: f64) -> Self {
        Self::new(name, prior, Transform::Logit { a, b })
    }

    fn constrain(&self, u: f64) -> f64 {
        self.transform.constrain(u)
    }

    /// Log prior density in the unconstrained variable (Jacobian included)
    /// and its derivative.
    fn log_prior_grad(&self, u: f64) -> Result<(f64, f64)> {
        let x = self.transform.constrain(u);
        let lp = self.prior.log_density(x)? + self.transform.log_jacobian(u);
        let g = self.prior.dlog_density(x)? * self.transform.dconstrain(u)
            + self.transform.dlog_jacobian(u);
        Ok((lp, g))
    }

    /// Draw on the unconstrained scale for chain initialisation.
    fn initial(&self, rng: &mut ChaCha8Rng) -> f64 {
        let x = self.prior.sample_one(rng);
        self.transform.unconstrain(x).clamp(-8.0, 8.0)
    }
}

fn non_finite(names: &[String], u: &Array1<f64>) -> CoreError {
    CoreError::NonFiniteDensity {
        params: names.iter().cloned().zip(u.iter().copied()).collect(),
    }
}

fn z_names(d: usize) -> Vec<String> {
    (0..d).map(|i| format!("z_{i}")).collect()
}

// ---------------------------------------------------------------------------
// calibration targets
// ---------------------------------------------------------------------------

/// Standard normal in `dim` dimensions.
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

/// Normal likelihood with known noise and a normal prior on the mean; the
/// posterior is available in closed form, which makes this the calibration
/// oracle for the sampler.
pub struct ConjugateNormalModel {
    pub y: Vec<f64>,
    pub noise_sd: f64,
    pub prior_mean: f64,
    pub prior_sd: f64,
}

impl ConjugateNormalModel {
    /// Analytic posterior mean and standard deviation.
    pub fn posterior_mean_sd(&self) -> (f64, f64) {
        let n = self.y.len() as f64;
        let prec = 1.0 / (self.prior_sd * self.prior_sd) + n / (self.noise_sd * self.noise_sd);
        let var = 1.0 / prec;
        let mean = var
            * (self.prior_mean / (self.prior_sd * self.prior_sd)
                + self.y.iter().sum::<f64>() / (self.noise_sd * self.noise_sd));
        (mean, var.sqrt())
    }
}

impl PosteriorModel for ConjugateNormalModel {
    fn param_names(&self) -> Vec<String> {
        vec!["mu".into()]
    }
    fn dim(&self) -> usize {
        1
    }
    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let mu = u[0];
        let s2 = self.noise_sd * self.noise_sd;
        let t2 = self.prior_sd * self.prior_sd;
        let mut lp = -0.5 * (mu - self.prior_mean).powi(2) / t2;
        let mut g = -(mu - self.prior_mean) / t2;
        for &yi in &self.y {
            lp -= 0.5 * (yi - mu).powi(2) / s2;
            g += (yi - mu) / s2;
        }
        Ok((lp, Array1::from_vec(vec![g])))
    }
    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
        u.clone()
    }
}

// ---------------------------------------------------------------------------
// Gaussian observations at grid indices
// ---------------------------------------------------------------------------

/// `y_i ~ N(f[idx_i], s²)` bookkeeping shared by the GP-regression models.
#[derive(Debug, Clone)]
pub struct GaussianObservations {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl GaussianObservations {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if indices.len() != values.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} indices vs {} values",
                indices.len(),
                values.len()
            )));
        }
        Ok(GaussianObservations { indices, values })
    }

    fn check_bounds(&self, n: usize) -> Result<()> {
        if let Some(&bad) = self.indices.iter().find(|&&i| i >= n) {
            return Err(CoreError::InvalidParameter(format!(
                "observation index {bad} outside grid of length {n}"
            )));
        }
        Ok(())
    }

    /// Log likelihood, cotangent with respect to the field, and the noise
    /// derivative `∂llh/∂s`.
    fn loglik(&self, field: &Array1<f64>, s: f64) -> (f64, Array1<f64>, f64) {
        let mut lp = 0.0;
        let mut g_field = Array1::zeros(field.len());
        let mut ds = 0.0;
        let s2 = s * s;
        for (&idx, &y) in self.indices.iter().zip(&self.values) {
            let r = y - field[idx];
            lp += -0.5 * (2.0 * std::f64::consts::PI).ln() - s.ln() - 0.5 * r * r / s2;
            g_field[idx] += r / s2;
            ds += r * r / (s2 * s) - 1.0 / s;
        }
        (lp, g_field, ds)
    }
}

// ---------------------------------------------------------------------------
// exact GP regression (whitened parametrisation)
// ---------------------------------------------------------------------------

/// Exact-GP regression with lengthscale, amplitude and noise inference. The
/// field is parameterised as `f = σ·L_ℓ·z` with `z ~ N(0, I_n)`; every
/// gradient evaluation re-assembles the covariance, factorises it and pushes
/// the lengthscale sensitivity through the factor.
pub struct GpRegressionModel {
    grid: Grid,
    base_kernel: KernelSpec,
    obs: GaussianObservations,
    pub ell: ScalarParam,
    pub amplitude: ScalarParam,
    pub noise: ScalarParam,
    jitter: f64,
    names: Vec<String>,
}

impl GpRegressionModel {
    pub fn new(
        grid: Grid,
        base_kernel: KernelSpec,
        obs: GaussianObservations,
        ell: ScalarParam,
        amplitude: ScalarParam,
        noise: ScalarParam,
    ) -> Result<Self> {
        obs.check_bounds(grid.len())?;
        let mut names = z_names(grid.len());
        names.push(ell.name.clone());
        names.push(amplitude.name.clone());
        names.push(noise.name.clone());
        Ok(GpRegressionModel {
            grid,
            base_kernel,
            obs,
            ell,
            amplitude,
            noise,
            jitter: DEFAULT_JITTER,
            names,
        })
    }

    fn n(&self) -> usize {
        self.grid.len()
    }
}

impl PosteriorModel for GpRegressionModel {
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn dim(&self) -> usize {
        self.n() + 3
    }

    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let n = self.n();
        let z = u.slice(ndarray::s![..n]).to_owned();
        let (u_ell, u_amp, u_noise) = (u[n], u[n + 1], u[n + 2]);
        let ell = self.ell.constrain(u_ell);
        let amp = self.amplitude.constrain(u_amp);
        let s = self.noise.constrain(u_noise);
        if !ell.is_finite() || !amp.is_finite() || !s.is_finite() || s <= 0.0 || ell <= 0.0 {
            return Err(non_finite(&self.names, u));
        }

        let spec = self.base_kernel.with_lengthscale(ell)?;
        let cov = build_covariance(&spec, &self.grid, self.jitter)?;
        let l = cholesky_lower(&cov.entries)?;
        let f_std = l.dot(&z);
        let field = f_std.mapv(|v| amp * v);

        let (llh, g_field, ds_llh) = self.obs.loglik(&field, s);

        let (lp_ell, g_ell_prior) = self.ell.log_prior_grad(u_ell)?;
        let (lp_amp, g_amp_prior) = self.amplitude.log_prior_grad(u_amp)?;
        let (lp_noise, g_noise_prior) = self.noise.log_prior_grad(u_noise)?;

        let logp = -0.5 * z.dot(&z) + llh + lp_ell + lp_amp + lp_noise;
        if !logp.is_finite() {
            return Err(non_finite(&self.names, u));
        }

        let mut grad = Array1::zeros(self.dim());
        // z block: prior plus the chain through f = σ L z
        let lt_g = l.t().dot(&g_field);
        for i in 0..n {
            grad[i] = -z[i] + amp * lt_g[i];
        }
        // lengthscale: through dL/dℓ
        let dk = build_covariance_dlengthscale(&spec, &self.grid)?;
        let dl = cholesky_dlower(&l, &dk);
        let df_dell = dl.dot(&z).mapv(|v| amp * v);
        let dllh_dell = g_field.dot(&df_dell);
        grad[n] = dllh_dell * self.ell.transform.dconstrain(u_ell) + g_ell_prior;
        // amplitude: ∂llh/∂σ = g_f · f_std
        let dllh_damp = g_field.dot(&f_std);
        grad[n + 1] = dllh_damp * self.amplitude.transform.dconstrain(u_amp) + g_amp_prior;
        // noise
        grad[n + 2] = ds_llh * self.noise.transform.dconstrain(u_noise) + g_noise_prior;

        Ok((logp, grad))
    }

    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
        let n = self.n();
        let mut out = u.clone();
        out[n] = self.ell.constrain(u[n]);
        out[n + 1] = self.amplitude.constrain(u[n + 1]);
        out[n + 2] = self.noise.constrain(u[n + 2]);
        out
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let n = self.n();
        let mut u = Array1::zeros(self.dim());
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            u[i] = 0.1 * z;
        }
        u[n] = self.ell.initial(rng);
        u[n + 1] = self.amplitude.initial(rng);
        u[n + 2] = self.noise.initial(rng);
        u
    }
}

// ---------------------------------------------------------------------------
// decoder-backed GP regression (PriorVAE / PriorCVAE)
// ---------------------------------------------------------------------------

/// How the decoder's condition is produced during inference.
#[derive(Debug, Clone)]
pub enum ConditionMap {
    /// Unconditioned decoder (`k = 0` baseline).
    None,
    /// One scalar condition with its own prior (continuous hyperparameter).
    Scalar(ScalarParam),
    /// Relaxed binary condition: `c ~ Beta(α, β)` concentrated at {0, 1},
    /// sampled on the logit scale; the decoder sees `(1−c)·l1 + c·l2`.
    BetaBinary { l1: f64, l2: f64, alpha: f64, beta: f64 },
}

impl ConditionMap {
    fn dim(&self) -> usize {
        match self {
            ConditionMap::None => 0,
            _ => 1,
        }
    }

    fn name(&self) -> Option<String> {
        match self {
            ConditionMap::None => None,
            ConditionMap::Scalar(p) => Some(p.name.clone()),
            ConditionMap::BetaBinary { .. } => Some("c".into()),
        }
    }
}

/// Default Beta relaxation concentration.
pub const BETA_RELAXATION_EPS: f64 = 1e-4;

/// Drop-in GP regression: the trained decoder replaces the exact prior, so
/// the sampler moves `(z_d, condition, amplitude, noise)` and never touches
/// a covariance factorisation.
pub struct DecoderGpModel {
    model: CvaeModel,
    obs: GaussianObservations,
    pub condition: ConditionMap,
    pub amplitude: ScalarParam,
    pub noise: ScalarParam,
    names: Vec<String>,
}

impl DecoderGpModel {
    pub fn new(
        model: CvaeModel,
        obs: GaussianObservations,
        condition: ConditionMap,
        amplitude: ScalarParam,
        noise: ScalarParam,
    ) -> Result<Self> {
        if model.condition_dim() != condition.dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "decoder expects k={} conditions, map supplies {}",
                model.condition_dim(),
                condition.dim()
            )));
        }
        obs.check_bounds(model.n())?;
        let mut names = z_names(model.latent_dim());
        if let Some(c) = condition.name() {
            names.push(c);
        }
        names.push(amplitude.name.clone());
        names.push(noise.name.clone());
        Ok(DecoderGpModel {
            model,
            obs,
            condition,
            amplitude,
            noise,
            names,
        })
    }

    /// Replaces a two-point (Bernoulli-mixture) hyperprior with the Beta
    /// relaxation so a gradient sampler can infer the class: `c ∼ Beta(ε, ε)`
    /// on (0,1), decoder condition `(1−c)·ℓ₁ + c·ℓ₂`.
    pub fn with_relaxed_binary(
        model: CvaeModel,
        obs: GaussianObservations,
        mixture: &HyperPrior,
        amplitude: ScalarParam,
        noise: ScalarParam,
    ) -> Result<Self> {
        let HyperPrior::BernoulliMixture { l1, l2, .. } = *mixture else {
            return Err(CoreError::InvalidParameter(
                "binary relaxation needs a Bernoulli-mixture hyperprior".into(),
            ));
        };
        Self::new(
            model,
            obs,
            ConditionMap::BetaBinary {
                l1,
                l2,
                alpha: BETA_RELAXATION_EPS,
                beta: BETA_RELAXATION_EPS,
            },
            amplitude,
            noise,
        )
    }

    pub fn cvae(&self) -> &CvaeModel {
        &self.model
    }

    fn d(&self) -> usize {
        self.model.latent_dim()
    }

    /// Decoder condition value, the prior/Jacobian term and its gradient,
    /// and `d(condition)/du`.
    fn condition_terms(&self, u_c: f64) -> Result<(Vec<f64>, f64, f64, f64)> {
        match &self.condition {
            ConditionMap::None => Ok((vec![], 0.0, 0.0, 0.0)),
            ConditionMap::Scalar(p) => {
                let x = p.constrain(u_c);
                let (lp, g) = p.log_prior_grad(u_c)?;
                Ok((vec![x], lp, g, p.transform.dconstrain(u_c)))
            }
            ConditionMap::BetaBinary { l1, l2, alpha, beta } => {
                let c = 1.0 / (1.0 + (-u_c).exp());
                // Beta(α, β) density plus the logit Jacobian collapses to
                // α·ln c + β·ln(1−c) up to a constant
                let lp = alpha * c.ln() + beta * (1.0 - c).ln();
                let g = alpha * (1.0 - c) - beta * c;
                let dcond_du = (l2 - l1) * c * (1.0 - c);
                Ok((vec![(1.0 - c) * l1 + c * l2], lp, g, dcond_du))
            }
        }
    }
}

impl PosteriorModel for DecoderGpModel {
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn dim(&self) -> usize {
        self.d() + self.condition.dim() + 2
    }

    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let d = self.d();
        let kc = self.condition.dim();
        let z = u.slice(ndarray::s![..d]).to_owned();
        let u_c = if kc == 1 { u[d] } else { 0.0 };
        let u_amp = u[d + kc];
        let u_noise = u[d + kc + 1];
        let amp = self.amplitude.constrain(u_amp);
        let s = self.noise.constrain(u_noise);

        let (cond, lp_c, g_c_prior, dcond_du) = self.condition_terms(u_c)?;
        let input = {
            let mut v = Array1::zeros(d + kc);
            v.slice_mut(ndarray::s![..d]).assign(&z);
            for (j, &cv) in cond.iter().enumerate() {
                v[d + j] = cv;
            }
            v
        };
        let f_std = self.model.decoder().forward(&input)?;
        let field = f_std.mapv(|v| amp * v);

        let (llh, g_field, ds_llh) = self.obs.loglik(&field, s);
        let (lp_amp, g_amp_prior) = self.amplitude.log_prior_grad(u_amp)?;
        let (lp_noise, g_noise_prior) = self.noise.log_prior_grad(u_noise)?;

        let logp = -0.5 * z.dot(&z) + llh + lp_c + lp_amp + lp_noise;
        if !logp.is_finite() {
            return Err(non_finite(&self.names, u));
        }

        // chain through the decoder inputs in one reverse pass
        let cot = g_field.mapv(|v| amp * v);
        let din = self.model.decoder().input_gradient(&input, &cot)?;

        let mut grad = Array1::zeros(self.dim());
        for i in 0..d {
            grad[i] = -z[i] + din[i];
        }
        if kc == 1 {
            grad[d] = din[d] * dcond_du + g_c_prior;
        }
        let dllh_damp = g_field.dot(&f_std);
        grad[d + kc] = dllh_damp * self.amplitude.transform.dconstrain(u_amp) + g_amp_prior;
        grad[d + kc + 1] = ds_llh * self.noise.transform.dconstrain(u_noise) + g_noise_prior;
        Ok((logp, grad))
    }

    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
        let d = self.d();
        let kc = self.condition.dim();
        let mut out = u.clone();
        if kc == 1 {
            out[d] = match &self.condition {
                ConditionMap::Scalar(p) => p.constrain(u[d]),
                ConditionMap::BetaBinary { .. } => 1.0 / (1.0 + (-u[d]).exp()),
                ConditionMap::None => unreachable!(),
            };
        }
        out[d + kc] = self.amplitude.constrain(u[d + kc]);
        out[d + kc + 1] = self.noise.constrain(u[d + kc + 1]);
        out
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let d = self.d();
        let kc = self.condition.dim();
        let mut u = Array1::zeros(self.dim());
        for i in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            u[i] = 0.1 * z;
        }
        if kc == 1 {
            u[d] = match &self.condition {
                ConditionMap::Scalar(p) => p.initial(rng),
                // start near the middle so neither class is favoured
                ConditionMap::BetaBinary { .. } => {
                    let z: f64 = StandardNormal.sample(rng);
                    0.5 * z
                }
                ConditionMap::None => unreachable!(),
            };
        }
        u[d + kc] = self.amplitude.initial(rng);
        u[d + kc + 1] = self.noise.initial(rng);
        u
    }
}

// ---------------------------------------------------------------------------
// negative-binomial SIR inference
// ---------------------------------------------------------------------------

/// `ln NegBin(y; μ, φ)` in the mean–overdispersion convention
/// (variance `μ + μ²/φ`).
pub fn negbin_logpmf(y: f64, mu: f64, phi: f64) -> f64 {
    ln_gamma(y + phi) - ln_gamma(phi) - ln_gamma(y + 1.0) + phi * (phi.ln() - (phi + mu).ln())
        + y * (mu.ln() - (phi + mu).ln())
}

fn negbin_dmu(y: f64, mu: f64, phi: f64) -> f64 {
    y / mu - (y + phi) / (phi + mu)
}

fn negbin_dphi(y: f64, mu: f64, phi: f64) -> f64 {
    digamma(y + phi) - digamma(phi) + phi.ln() - (phi + mu).ln() + 1.0
        - (y + phi) / (phi + mu)
}

/// SIR inference through the trained decoder: the sampler moves
/// `(z, β, γ, φ⁻¹)`, the decoder turns `(z, β, γ)` into an infected-fraction
/// curve, and daily counts follow a negative binomial around `N·I(t)/N`.
pub struct SirCvaeModel {
    model: CvaeModel,
    observed: Vec<(u32, u32)>,
    n_pop: f64,
    pub beta: ScalarParam,
    pub gamma: ScalarParam,
    pub phi_inv: ScalarParam,
    names: Vec<String>,
}

impl SirCvaeModel {
    pub fn new(
        model: CvaeModel,
        observed: Vec<(u32, u32)>,
        n_pop: f64,
        beta: ScalarParam,
        gamma: ScalarParam,
        phi_inv: ScalarParam,
    ) -> Result<Self> {
        if model.condition_dim() != 2 {
            return Err(CoreError::ShapeMismatch(format!(
                "SIR decoder needs condition_dim = 2, got {}",
                model.condition_dim()
            )));
        }
        if let Some(&(day, _)) = observed.iter().find(|(d, _)| *d as usize >= model.n()) {
            return Err(CoreError::InvalidParameter(format!(
                "observed day {day} outside decoder horizon {}",
                model.n()
            )));
        }
        let mut names = z_names(model.latent_dim());
        names.push(beta.name.clone());
        names.push(gamma.name.clone());
        names.push(phi_inv.name.clone());
        Ok(SirCvaeModel {
            model,
            observed,
            n_pop,
            beta,
            gamma,
            phi_inv,
            names,
        })
    }

    fn d(&self) -> usize {
        self.model.latent_dim()
    }

    /// Expected daily counts `N·decode(z, (β, γ))` for one posterior draw on
    /// the constrained scale.
    pub fn expected_counts(&self, constrained: &Array1<f64>) -> Result<Array1<f64>> {
        let d = self.d();
        let z = constrained.slice(ndarray::s![..d]).to_owned();
        let beta = constrained[d];
        let gamma = constrained[d + 1];
        let curve = self.model.decode(&z, &[beta, gamma])?;
        Ok(curve.mapv(|v| self.n_pop * v))
    }

    pub fn observed(&self) -> &[(u32, u32)] {
        &self.observed
    }

    pub fn n_pop(&self) -> f64 {
        self.n_pop
    }
}

impl PosteriorModel for SirCvaeModel {
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn dim(&self) -> usize {
        self.d() + 3
    }

    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let d = self.d();
        let z = u.slice(ndarray::s![..d]).to_owned();
        let (u_b, u_g, u_p) = (u[d], u[d + 1], u[d + 2]);
        let beta = self.beta.constrain(u_b);
        let gamma = self.gamma.constrain(u_g);
        let phi_inv = self.phi_inv.constrain(u_p);
        let phi = 1.0 / phi_inv;

        let input = {
            let mut v = Array1::zeros(d + 2);
            v.slice_mut(ndarray::s![..d]).assign(&z);
            v[d] = beta;
            v[d + 1] = gamma;
            v
        };
        let curve = self.model.decoder().forward(&input)?;

        let mut llh = 0.0;
        let mut g_curve = Array1::zeros(curve.len());
        let mut dphi_total = 0.0;
        for &(day, count) in &self.observed {
            let mu = self.n_pop * curve[day as usize];
            let y = count as f64;
            llh += negbin_logpmf(y, mu, phi);
            g_curve[day as usize] += self.n_pop * negbin_dmu(y, mu, phi);
            dphi_total += negbin_dphi(y, mu, phi);
        }

        let (lp_b, g_b_prior) = self.beta.log_prior_grad(u_b)?;
        let (lp_g, g_g_prior) = self.gamma.log_prior_grad(u_g)?;
        let (lp_p, g_p_prior) = self.phi_inv.log_prior_grad(u_p)?;
        let logp = -0.5 * z.dot(&z) + llh + lp_b + lp_g + lp_p;
        if !logp.is_finite() {
            return Err(non_finite(&self.names, u));
        }

        let din = self.model.decoder().input_gradient(&input, &g_curve)?;
        let mut grad = Array1::zeros(self.dim());
        for i in 0..d {
            grad[i] = -z[i] + din[i];
        }
        grad[d] = din[d] * self.beta.transform.dconstrain(u_b) + g_b_prior;
        grad[d + 1] = din[d + 1] * self.gamma.transform.dconstrain(u_g) + g_g_prior;
        // φ = 1/φ⁻¹ ⇒ dφ/du = −φ·(dφ⁻¹/du)/φ⁻¹
        let dphiinv_du = self.phi_inv.transform.dconstrain(u_p);
        grad[d + 2] = dphi_total * (-phi / phi_inv) * dphiinv_du + g_p_prior;
        Ok((logp, grad))
    }

    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
        let d = self.d();
        let mut out = u.clone();
        out[d] = self.beta.constrain(u[d]);
        out[d + 1] = self.gamma.constrain(u[d + 1]);
        out[d + 2] = self.phi_inv.constrain(u[d + 2]);
        out
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let d = self.d();
        let mut u = Array1::zeros(self.dim());
        for i in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            u[i] = 0.1 * z;
        }
        u[d] = self.beta.initial(rng);
        u[d + 1] = self.gamma.initial(rng);
        u[d + 2] = self.phi_inv.initial(rng);
        u
    }
}

// ---------------------------------------------------------------------------
// binomial spatial models
// ---------------------------------------------------------------------------

/// Binomial observations with a logit link over a latent field.
#[derive(Debug, Clone)]
pub struct BinomialObservations {
    pub trials: Vec<u64>,
    pub successes: Vec<u64>,
}

impl BinomialObservations {
    pub fn new(trials: Vec<u64>, successes: Vec<u64>) -> Result<Self> {
        if trials.len() != successes.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} trial counts vs {} success counts",
                trials.len(),
                successes.len()
            )));
        }
        if let Some(i) = trials.iter().zip(&successes).position(|(&n, &y)| y > n || n == 0) {
            return Err(CoreError::InvalidParameter(format!(
                "unit {i}: successes exceed trials or zero trials"
            )));
        }
        Ok(BinomialObservations { trials, successes })
    }

    /// Log likelihood over linear predictors and its gradient `y − n·θ`.
    fn loglik(&self, eta: &Array1<f64>) -> (f64, Array1<f64>) {
        let mut lp = 0.0;
        let mut g = Array1::zeros(eta.len());
        for i in 0..eta.len() {
            let theta = 1.0 / (1.0 + (-eta[i]).exp());
            let y = self.successes[i] as f64;
            let n = self.trials[i] as f64;
            // log θ and log(1−θ) via softplus for stability
            let log_theta = -softplus(-eta[i]);
            let log_1mtheta = -softplus(eta[i]);
            lp += y * log_theta + (n - y) * log_1mtheta;
            g[i] = y - n * theta;
        }
        (lp, g)
    }
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        (1.0 + x.exp()).ln()
    }
}

/// Decoder-backed spatial prevalence model: `logit θ_i = b0 + σ·D(z, ℓ)_i`,
/// `y_i ~ Binomial(n_i, θ_i)`.
pub struct BinomSpatialCvaeModel {
    model: CvaeModel,
    obs: BinomialObservations,
    pub ell: ScalarParam,
    pub amplitude: ScalarParam,
    pub b0_sd: f64,
    names: Vec<String>,
}

impl BinomSpatialCvaeModel {
    pub fn new(
        model: CvaeModel,
        obs: BinomialObservations,
        ell: ScalarParam,
        amplitude: ScalarParam,
        b0_sd: f64,
    ) -> Result<Self> {
        if model.condition_dim() != 1 {
            return Err(CoreError::ShapeMismatch(
                "spatial decoder expects exactly the lengthscale condition".into(),
            ));
        }
        if obs.trials.len() != model.n() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} units vs decoder output {}",
                obs.trials.len(),
                model.n()
            )));
        }
        let mut names = z_names(model.latent_dim());
        names.push(ell.name.clone());
        names.push(amplitude.name.clone());
        names.push("b0".into());
        Ok(BinomSpatialCvaeModel {
            model,
            obs,
            ell,
            amplitude,
            b0_sd,
            names,
        })
    }

    fn d(&self) -> usize {
        self.model.latent_dim()
    }

    /// Posterior prevalence per unit for one constrained draw.
    pub fn prevalence(&self, constrained: &Array1<f64>) -> Result<Array1<f64>> {
        let d = self.d();
        let z = constrained.slice(ndarray::s![..d]).to_owned();
        let ell = constrained[d];
        let amp = constrained[d + 1];
        let b0 = constrained[d + 2];
        let f = self.model.decode(&z, &[ell])?;
        Ok(f.mapv(|v| 1.0 / (1.0 + (-(b0 + amp * v)).exp())))
    }
}

impl PosteriorModel for BinomSpatialCvaeModel {
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn dim(&self) -> usize {
        self.d() + 3
    }

    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let d = self.d();
        let z = u.slice(ndarray::s![..d]).to_owned();
        let (u_ell, u_amp, b0) = (u[d], u[d + 1], u[d + 2]);
        let ell = self.ell.constrain(u_ell);
        let amp = self.amplitude.constrain(u_amp);

        let input = {
            let mut v = Array1::zeros(d + 1);
            v.slice_mut(ndarray::s![..d]).assign(&z);
            v[d] = ell;
            v
        };
        let f_std = self.model.decoder().forward(&input)?;
        let eta = f_std.mapv(|v| b0 + amp * v);
        let (llh, g_eta) = self.obs.loglik(&eta);

        let (lp_ell, g_ell_prior) = self.ell.log_prior_grad(u_ell)?;
        let (lp_amp, g_amp_prior) = self.amplitude.log_prior_grad(u_amp)?;
        let lp_b0 = -0.5 * (b0 / self.b0_sd).powi(2);
        let logp = -0.5 * z.dot(&z) + llh + lp_ell + lp_amp + lp_b0;
        if !logp.is_finite() {
            return Err(non_finite(&self.names, u));
        }

        let cot = g_eta.mapv(|v| amp * v);
        let din = self.model.decoder().input_gradient(&input, &cot)?;
        let mut grad = Array1::zeros(self.dim());
        for i in 0..d {
            grad[i] = -z[i] + din[i];
        }
        grad[d] = din[d] * self.ell.transform.dconstrain(u_ell) + g_ell_prior;
        grad[d + 1] =
            g_eta.dot(&f_std) * self.amplitude.transform.dconstrain(u_amp) + g_amp_prior;
        grad[d + 2] = g_eta.sum() - b0 / (self.b0_sd * self.b0_sd);
        Ok((logp, grad))
    }

    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
        let d = self.d();
        let mut out = u.clone();
        out[d] = self.ell.constrain(u[d]);
        out[d + 1] = self.amplitude.constrain(u[d + 1]);
        out
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let d = self.d();
        let mut u = Array1::zeros(self.dim());
        for i in 0..d {
            let z: f64 = StandardNormal.sample(rng);
            u[i] = 0.1 * z;
        }
        u[d] = self.ell.initial(rng);
        u[d + 1] = self.amplitude.initial(rng);
        let z: f64 = StandardNormal.sample(rng);
        u[d + 2] = 0.3 * z;
        u
    }
}

/// Exact-GP counterpart of the spatial model (whitened field over the
/// centroids, covariance re-factorised per evaluation).
pub struct BinomSpatialGpModel {
    grid: Grid,
    base_kernel: KernelSpec,
    obs: BinomialObservations,
    pub ell: ScalarParam,
    pub amplitude: ScalarParam,
    pub b0_sd: f64,
    jitter: f64,
    names: Vec<String>,
}

impl BinomSpatialGpModel {
    pub fn new(
        grid: Grid,
        base_kernel: KernelSpec,
        obs: BinomialObservations,
        ell: ScalarParam,
        amplitude: ScalarParam,
        b0_sd: f64,
    ) -> Result<Self> {
        if obs.trials.len() != grid.len() {
            return Err(CoreError::ShapeMismatch(format!(
                "{} units vs {} centroids",
                obs.trials.len(),
                grid.len()
            )));
        }
        let mut names = z_names(grid.len());
        names.push(ell.name.clone());
        names.push(amplitude.name.clone());
        names.push("b0".into());
        Ok(BinomSpatialGpModel {
            grid,
            base_kernel,
            obs,
            ell,
            amplitude,
            b0_sd,
            jitter: DEFAULT_JITTER,
            names,
        })
    }

    fn n(&self) -> usize {
        self.grid.len()
    }

    /// Posterior prevalence per unit for one constrained draw.
    pub fn prevalence(&self, constrained: &Array1<f64>) -> Result<Array1<f64>> {
        let n = self.n();
        let z = constrained.slice(ndarray::s![..n]).to_owned();
        let ell = constrained[n];
        let amp = constrained[n + 1];
        let b0 = constrained[n + 2];
        let spec = self.base_kernel.with_lengthscale(ell)?;
        let l = build_covariance(&spec, &self.grid, self.jitter)?.cholesky_lower()?;
        let f = l.dot(&z);
        Ok(f.mapv(|v| 1.0 / (1.0 + (-(b0 + amp * v)).exp())))
    }
}

impl PosteriorModel for BinomSpatialGpModel {
    fn param_names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn dim(&self) -> usize {
        self.n() + 3
    }

    fn log_posterior(&self, u: &Array1<f64>) -> Result<(f64, Array1<f64>)> {
        let n = self.n();
        let z = u.slice(ndarray::s![..n]).to_owned();
        let (u_ell, u_amp, b0) = (u[n], u[n + 1], u[n + 2]);
        let ell = self.ell.constrain(u_ell);
        let amp = self.amplitude.constrain(u_amp);

        let spec = self.base_kernel.with_lengthscale(ell)?;
        let cov = build_covariance(&spec, &self.grid, self.jitter)?;
        let l = cholesky_lower(&cov.entries)?;
        let f_std = l.dot(&z);
        let eta = f_std.mapv(|v| b0 + amp * v);
        let (llh, g_eta) = self.obs.loglik(&eta);

        let (lp_ell, g_ell_prior) = self.ell.log_prior_grad(u_ell)?;
        let (lp_amp, g_amp_prior) = self.amplitude.log_prior_grad(u_amp)?;
        let lp_b0 = -0.5 * (b0 / self.b0_sd).powi(2);
        let logp = -0.5 * z.dot(&z) + llh + lp_ell + lp_amp + lp_b0;
        if !logp.is_finite() {
            return Err(non_finite(&self.names, u));
        }

        let mut grad = Array1::zeros(self.dim());
        let lt_g = l.t().dot(&g_eta);
        for i in 0..n {
            grad[i] = -z[i] + amp * lt_g[i];
        }
        let dk = build_covariance_dlengthscale(&spec, &self.grid)?;
        let dl = cholesky_dlower(&l, &dk);
        let df = dl.dot(&z);
        grad[n] = amp * g_eta.dot(&df) * self.ell.transform.dconstrain(u_ell) + g_ell_prior;
        grad[n + 1] =
            g_eta.dot(&f_std) * self.amplitude.transform.dconstrain(u_amp) + g_amp_prior;
        grad[n + 2] = g_eta.sum() - b0 / (self.b0_sd * self.b0_sd);
        Ok((logp, grad))
    }

    fn to_constrained(&self, u: &Array1<f64>) -> Array1<f64> {
        let n = self.n();
        let mut out = u.clone();
        out[n] = self.ell.constrain(u[n]);
        out[n + 1] = self.amplitude.constrain(u[n + 1]);
        out
    }

    fn initial(&self, rng: &mut ChaCha8Rng) -> Array1<f64> {
        let n = self.n();
        let mut u = Array1::zeros(self.dim());
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            u[i] = 0.1 * z;
        }
        u[n] = self.ell.initial(rng);
        u[n + 1] = self.amplitude.initial(rng);
        let z: f64 = StandardNormal.sample(rng);
        u[n + 2] = 0.3 * z;
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Activation, MlpParams};
    use crate::rng::stream_rng;
    use approx::assert_relative_eq;

    fn tiny_cvae(n: usize, d: usize, k: usize, seed: u64) -> CvaeModel {
        let encoder = MlpParams::init(
            &[n + k, 8, 2 * d],
            &[Activation::Sigmoid, Activation::Identity],
            seed,
        )
        .unwrap();
        let decoder = MlpParams::init(
            &[d + k, 8, n],
            &[Activation::Sigmoid, Activation::Identity],
            seed + 1,
        )
        .unwrap();
        CvaeModel::new(encoder, decoder, d, k, 1.0).unwrap()
    }

    fn fd_gradient(
        model: &dyn PosteriorModel,
        u: &Array1<f64>,
        h: f64,
    ) -> Array1<f64> {
        let mut g = Array1::zeros(u.len());
        for j in 0..u.len() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let (lp, _) = model.log_posterior(&up).unwrap();
            let (lm, _) = model.log_posterior(&um).unwrap();
            g[j] = (lp - lm) / (2.0 * h);
        }
        g
    }

    fn assert_grad_matches(model: &dyn PosteriorModel, u: &Array1<f64>) {
        let (_, analytic) = model.log_posterior(u).unwrap();
        let fd = fd_gradient(model, u, 1e-5);
        for j in 0..u.len() {
            assert_relative_eq!(analytic[j], fd[j], max_relative = 1e-5, epsilon = 1e-7);
        }
    }

    fn default_scalars() -> (ScalarParam, ScalarParam, ScalarParam) {
        (
            ScalarParam::interval("lengthscale", HyperPrior::Uniform { a: 0.01, b: 0.99 }, 0.01, 0.99),
            ScalarParam::positive("amplitude", HyperPrior::HalfNormal { scale: 1.0 }),
            ScalarParam::positive("noise", HyperPrior::HalfNormal { scale: 0.1 }),
        )
    }

    #[test]
    fn conjugate_model_gradient_vanishes_at_posterior_mean() {
        let m = ConjugateNormalModel {
            y: vec![1.2, 0.7, 1.0],
            noise_sd: 0.5,
            prior_mean: 0.0,
            prior_sd: 2.0,
        };
        let (mean, _) = m.posterior_mean_sd();
        let (_, g) = m.log_posterior(&Array1::from_vec(vec![mean])).unwrap();
        assert!(g[0].abs() < 1e-12, "gradient {g} at posterior mean");
    }

    #[test]
    fn gp_regression_z_gradient_vanishes_at_conjugate_mode() {
        // one grid point: f = σ·L·z with scalar L, conjugate in z
        let grid = Grid::new(vec![vec![0.5]]).unwrap();
        let (ell, amp, noise) = default_scalars();
        let model = GpRegressionModel::new(
            grid,
            KernelSpec::rbf(0.2, 1.0).unwrap(),
            GaussianObservations::new(vec![0], vec![0.8]).unwrap(),
            ell,
            amp,
            noise,
        )
        .unwrap();
        let (u_ell, u_amp, u_noise) = (0.1, -0.3, -2.0);
        let sigma = model.amplitude.constrain(u_amp);
        let s = model.noise.constrain(u_noise);
        let l = (1.0 + DEFAULT_JITTER).sqrt(); // unit-variance kernel at distance 0
        let y = 0.8;
        let z_hat = sigma * l * y / (s * s + sigma * sigma * l * l);
        let u = Array1::from_vec(vec![z_hat, u_ell, u_amp, u_noise]);
        let (_, g) = model.log_posterior(&u).unwrap();
        assert!(g[0].abs() < 1e-10, "z gradient {} at conjugate mode", g[0]);
    }

    #[test]
    fn gp_regression_gradients_match_finite_differences() {
        let grid = Grid::equispaced_1d(7, 0.0, 1.0).unwrap();
        let (ell, amp, noise) = default_scalars();
        let model = GpRegressionModel::new(
            grid,
            KernelSpec::rbf(0.2, 1.0).unwrap(),
            GaussianObservations::new(vec![1, 4, 6], vec![0.3, -0.2, 0.9]).unwrap(),
            ell,
            amp,
            noise,
        )
        .unwrap();
        let mut rng = stream_rng(42, 0);
        for _ in 0..5 {
            let u = model.initial(&mut rng);
            assert_grad_matches(&model, &u);
        }
    }

    #[test]
    fn decoder_model_prior_only_reduces_to_standard_normal() {
        // zero-weight decoder, no observations: density is the z prior plus
        // the hyperpriors, so the z gradient is exactly −z
        let mut cvae = tiny_cvae(5, 3, 1, 9);
        for l in cvae.decoder_mut().layers_mut() {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
        let (ell, amp, noise) = default_scalars();
        let model = DecoderGpModel::new(
            cvae,
            GaussianObservations::new(vec![], vec![]).unwrap(),
            ConditionMap::Scalar(ell),
            amp,
            noise,
        )
        .unwrap();
        let u = Array1::from_vec(vec![0.4, -1.1, 0.2, 0.0, -0.5, -1.5]);
        let (_, g) = model.log_posterior(&u).unwrap();
        for i in 0..3 {
            assert_relative_eq!(g[i], -u[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn decoder_model_gradients_match_finite_differences() {
        let cvae = tiny_cvae(6, 3, 1, 21);
        let (ell, amp, noise) = default_scalars();
        let model = DecoderGpModel::new(
            cvae,
            GaussianObservations::new(vec![0, 2, 5], vec![0.4, -0.1, 0.2]).unwrap(),
            ConditionMap::Scalar(ell),
            amp,
            noise,
        )
        .unwrap();
        let mut rng = stream_rng(77, 0);
        for _ in 0..5 {
            let u = model.initial(&mut rng);
            assert_grad_matches(&model, &u);
        }
    }

    #[test]
    fn unconditioned_decoder_model_matches_finite_differences() {
        let cvae = tiny_cvae(6, 3, 0, 33);
        let (_, amp, noise) = default_scalars();
        let model = DecoderGpModel::new(
            cvae,
            GaussianObservations::new(vec![1, 3], vec![0.2, 0.0]).unwrap(),
            ConditionMap::None,
            amp,
            noise,
        )
        .unwrap();
        let mut rng = stream_rng(78, 0);
        let u = model.initial(&mut rng);
        assert_grad_matches(&model, &u);
    }

    #[test]
    fn relaxed_binary_gradients_match_finite_differences() {
        let cvae = tiny_cvae(6, 3, 1, 55);
        let (_, amp, noise) = default_scalars();
        let mixture = HyperPrior::BernoulliMixture { l1: 0.1, l2: 0.4, p: 0.5 };
        let model = DecoderGpModel::with_relaxed_binary(
            cvae,
            GaussianObservations::new(vec![0, 4], vec![0.3, -0.3]).unwrap(),
            &mixture,
            amp,
            noise,
        )
        .unwrap();
        let mut rng = stream_rng(79, 0);
        for _ in 0..5 {
            let u = model.initial(&mut rng);
            assert_grad_matches(&model, &u);
        }
        // endpoints: c = 0 maps to l1, c = 1 to l2
        match &model.condition {
            ConditionMap::BetaBinary { l1, l2, .. } => {
                assert_eq!(*l1, 0.1);
                assert_eq!(*l2, 0.4);
            }
            _ => panic!("expected relaxed binary condition"),
        }
        let cond_at = |c: f64| (1.0 - c) * 0.1 + c * 0.4;
        assert_eq!(cond_at(0.0), 0.1);
        assert_eq!(cond_at(1.0), 0.4);
    }

    #[test]
    fn relaxation_rejects_non_mixture_priors() {
        let cvae = tiny_cvae(6, 3, 1, 56);
        let (_, amp, noise) = default_scalars();
        let res = DecoderGpModel::with_relaxed_binary(
            cvae,
            GaussianObservations::new(vec![], vec![]).unwrap(),
            &HyperPrior::Uniform { a: 0.0, b: 1.0 },
            amp,
            noise,
        );
        assert!(res.is_err());
    }

    #[test]
    fn beta_relaxation_prior_mass_concentrates_at_endpoints() {
        // 1 − P(c ∈ (0.01, 0.99)) under Beta(1e-4, 1e-4), via the regularised
        // incomplete beta as an independent oracle
        let a = BETA_RELAXATION_EPS;
        let interior = statrs::function::beta::beta_reg(a, a, 0.99)
            - statrs::function::beta::beta_reg(a, a, 0.01);
        assert!(
            interior < 0.01,
            "interior mass {interior} not concentrated at the endpoints"
        );
    }

    #[test]
    fn negbin_approaches_poisson_as_phi_inv_vanishes() {
        let (y, mu) = (5.0_f64, 4.0_f64);
        let poisson = y * mu.ln() - mu - ln_gamma(y + 1.0);
        let negbin = negbin_logpmf(y, mu, 1.0 / 1e-6);
        assert!(
            (negbin - poisson).abs() < 1e-3,
            "negbin {negbin} vs poisson {poisson}"
        );
    }

    #[test]
    fn negbin_derivatives_match_finite_differences() {
        let h = 1e-6;
        for (y, mu, phi) in [(5.0, 4.0, 2.0), (120.0, 90.0, 7.0), (0.0, 1.5, 3.0)] {
            let dmu_fd = (negbin_logpmf(y, mu + h, phi) - negbin_logpmf(y, mu - h, phi)) / (2.0 * h);
            assert_relative_eq!(negbin_dmu(y, mu, phi), dmu_fd, max_relative = 1e-5, epsilon = 1e-8);
            let dphi_fd =
                (negbin_logpmf(y, mu, phi + h) - negbin_logpmf(y, mu, phi - h)) / (2.0 * h);
            assert_relative_eq!(negbin_dphi(y, mu, phi), dphi_fd, max_relative = 1e-5, epsilon = 1e-8);
        }
    }

    #[test]
    fn sir_model_gradients_match_finite_differences() {
        let mut cvae = tiny_cvae(10, 4, 2, 91);
        // sigmoid output so the curve is a valid fraction
        let sizes = cvae.decoder().layer_sizes();
        let acts = vec![Activation::Sigmoid, Activation::Sigmoid];
        *cvae.decoder_mut() = MlpParams::init(&sizes, &acts, 92).unwrap();
        let model = SirCvaeModel::new(
            cvae,
            vec![(0, 3), (3, 70), (7, 210), (9, 120)],
            763.0,
            ScalarParam::positive("beta", HyperPrior::TruncNormalPos { loc: 2.0, scale: 1.0 }),
            ScalarParam::positive("gamma", HyperPrior::TruncNormalPos { loc: 0.4, scale: 0.5 }),
            ScalarParam::positive("phi_inv", HyperPrior::Exponential { rate: 5.0 }),
        )
        .unwrap();
        let mut rng = stream_rng(93, 0);
        for _ in 0..5 {
            let u = model.initial(&mut rng);
            assert_grad_matches(&model, &u);
        }
    }

    #[test]
    fn spatial_models_match_finite_differences() {
        let cvae = tiny_cvae(5, 3, 1, 101);
        let obs = BinomialObservations::new(vec![50, 80, 40, 60, 70], vec![5, 30, 10, 20, 33]).unwrap();
        let cvae_model = BinomSpatialCvaeModel::new(
            cvae,
            obs.clone(),
            ScalarParam::positive("lengthscale", HyperPrior::Gamma { shape: 2.0, rate: 4.0 }),
            ScalarParam::positive("amplitude", HyperPrior::Gamma { shape: 1.5, rate: 1.5 }),
            1.0,
        )
        .unwrap();
        let mut rng = stream_rng(103, 0);
        for _ in 0..4 {
            let u = cvae_model.initial(&mut rng);
            assert_grad_matches(&cvae_model, &u);
        }

        let centroids = Grid::new(vec![
            vec![0.1, 0.2],
            vec![0.8, 0.3],
            vec![0.5, 0.9],
            vec![0.2, 0.7],
            vec![0.9, 0.8],
        ])
        .unwrap();
        let gp_model = BinomSpatialGpModel::new(
            centroids,
            KernelSpec::rbf(0.3, 1.0).unwrap(),
            obs,
            ScalarParam::positive("lengthscale", HyperPrior::Gamma { shape: 2.0, rate: 4.0 }),
            ScalarParam::positive("amplitude", HyperPrior::Gamma { shape: 1.5, rate: 1.5 }),
            1.0,
        )
        .unwrap();
        for _ in 0..4 {
            let u = gp_model.initial(&mut rng);
            assert_grad_matches(&gp_model, &u);
        }
    }

    #[test]
    fn decoder_field_is_a_single_amplitude_product() {
        // scaling σ by k and the decoder bias field by 1/k must leave the
        // likelihood untouched: only the σ prior terms may differ
        let make = |bias_scale: f64, seed: u64| {
            let mut cvae = tiny_cvae(4, 2, 0, seed);
            for l in cvae.decoder_mut().layers_mut() {
                l.weight.fill(0.0);
                l.bias.fill(0.0);
            }
            let field = [0.7, -0.4, 0.9, 0.1];
            let out_bias: Vec<f64> = field.iter().map(|v| v * bias_scale).collect();
            cvae.decoder_mut().layers_mut()[1]
                .bias
                .assign(&Array1::from_vec(out_bias));
            let (_, amp, noise) = default_scalars();
            DecoderGpModel::new(
                cvae,
                GaussianObservations::new(vec![0, 2], vec![0.5, 0.6]).unwrap(),
                ConditionMap::None,
                amp,
                noise,
            )
            .unwrap()
        };
        let base = make(1.0, 7);
        let halved = make(0.5, 7);
        let k: f64 = 2.0;
        let u_amp = 0.2_f64;
        let u = Array1::from_vec(vec![0.3, -0.8, u_amp, -1.3]);
        let mut u_scaled = u.clone();
        u_scaled[2] = u_amp + k.ln(); // σ → k·σ on the log scale
        let (lp_base, _) = base.log_posterior(&u).unwrap();
        let (lp_scaled, _) = halved.log_posterior(&u_scaled).unwrap();
        // remove the σ prior and Jacobian difference; the likelihood parts
        // must cancel exactly
        let (prior_base, _) = base.amplitude.log_prior_grad(u_amp).unwrap();
        let (prior_scaled, _) = halved.amplitude.log_prior_grad(u_amp + k.ln()).unwrap();
        let diff = (lp_scaled - prior_scaled) - (lp_base - prior_base);
        assert!(diff.abs() < 1e-12, "likelihood changed by {diff}");
    }

    #[test]
    fn drop_in_decode_is_bitwise_identical_to_cvae_decode() {
        let cvae = tiny_cvae(6, 3, 1, 111);
        let (ell, amp, noise) = default_scalars();
        let model = DecoderGpModel::new(
            cvae.clone(),
            GaussianObservations::new(vec![0], vec![0.1]).unwrap(),
            ConditionMap::Scalar(ell),
            amp,
            noise,
        )
        .unwrap();
        let z = Array1::from_vec(vec![0.3, -0.2, 0.8]);
        let c = 0.37;
        let direct = cvae.decode(&z, &[c]).unwrap();
        let mut input = Array1::zeros(4);
        input.slice_mut(ndarray::s![..3]).assign(&z);
        input[3] = c;
        let inside = model.cvae().decoder().forward(&input).unwrap();
        assert_eq!(direct, inside);
    }
}
