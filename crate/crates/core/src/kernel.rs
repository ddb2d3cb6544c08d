//! Covariance functions.
//!
//! The closed family used by the experiments: RBF, Matérn-1/2, Matérn-5/2 and
//! the non-stationary product of a linear kernel with an RBF. Stationary
//! kernels factor as `σ² · R_ℓ(x, y)` with `R_ℓ(x, x) = 1`, which is what lets
//! the amplitude be pulled out of the encoded draws and re-estimated at
//! inference time.

use crate::error::CoreError;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Kernel family. The linear×RBF product carries its own center; it has no
/// separate amplitude (the linear factor sets the scale).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    Rbf,
    Matern12,
    Matern52,
    LinTimesRbf { c_lin: f64 },
}

/// A fully specified covariance function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub lengthscale: f64,
    pub variance: f64,
}

impl KernelSpec {
    fn validated(family: KernelFamily, lengthscale: f64, variance: f64) -> Result<Self> {
        if !(lengthscale > 0.0) || !lengthscale.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "lengthscale must be positive and finite, got {lengthscale}"
            )));
        }
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "variance must be positive and finite, got {variance}"
            )));
        }
        Ok(KernelSpec {
            family,
            lengthscale,
            variance,
        })
    }

    pub fn rbf(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::validated(KernelFamily::Rbf, lengthscale, variance)
    }

    pub fn matern12(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::validated(KernelFamily::Matern12, lengthscale, variance)
    }

    pub fn matern52(lengthscale: f64, variance: f64) -> Result<Self> {
        Self::validated(KernelFamily::Matern52, lengthscale, variance)
    }

    /// Linear×RBF product `(x−c)ᵀ(y−c) · exp(−‖x−y‖²/2ℓ²)`; unit variance by
    /// construction.
    pub fn lin_times_rbf(lengthscale: f64, c_lin: f64) -> Result<Self> {
        Self::validated(KernelFamily::LinTimesRbf { c_lin }, lengthscale, 1.0)
    }

    /// Same family and center, different lengthscale.
    pub fn with_lengthscale(&self, lengthscale: f64) -> Result<Self> {
        Self::validated(self.family, lengthscale, self.variance)
    }
}

/// Evaluates `κ(x, y)`. Symmetric in `(x, y)` for every family.
pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "kernel inputs have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let ell = spec.lengthscale;
    let value = match spec.family {
        KernelFamily::Rbf => spec.variance * (-r2 / (2.0 * ell * ell)).exp(),
        KernelFamily::Matern12 => {
            let r = r2.sqrt();
            spec.variance * (-r / ell).exp()
        }
        KernelFamily::Matern52 => {
            let r = r2.sqrt();
            let s = 5.0_f64.sqrt() * r / ell;
            spec.variance * (1.0 + s + 5.0 * r2 / (3.0 * ell * ell)) * (-s).exp()
        }
        KernelFamily::LinTimesRbf { c_lin } => {
            let lin: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - c_lin) * (b - c_lin))
                .sum();
            spec.variance * lin * (-r2 / (2.0 * ell * ell)).exp()
        }
    };
    Ok(value)
}

/// Derivative of `κ(x, y)` with respect to the lengthscale, at fixed inputs.
/// Needed by the exact-GP posterior gradient.
pub fn kernel_eval_dlengthscale(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "kernel inputs have dimensions {} and {}",
            x.len(),
            y.len()
        )));
    }
    let r2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    let ell = spec.lengthscale;
    let value = match spec.family {
        KernelFamily::Rbf => {
            // d/dℓ [σ² exp(−r²/2ℓ²)] = σ² exp(·) · r²/ℓ³
            spec.variance * (-r2 / (2.0 * ell * ell)).exp() * r2 / (ell * ell * ell)
        }
        KernelFamily::Matern12 => {
            let r = r2.sqrt();
            spec.variance * (-r / ell).exp() * r / (ell * ell)
        }
        KernelFamily::Matern52 => {
            // κ = σ²(1 + s + s²/3)e^{−s}, s = √5 r/ℓ; dκ/ds = −σ² s(1+s)/3 e^{−s},
            // ds/dℓ = −s/ℓ.
            let r = r2.sqrt();
            let s = 5.0_f64.sqrt() * r / ell;
            spec.variance * s * s * (1.0 + s) / 3.0 * (-s).exp() / ell
        }
        KernelFamily::LinTimesRbf { c_lin } => {
            let lin: f64 = x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - c_lin) * (b - c_lin))
                .sum();
            spec.variance * lin * (-r2 / (2.0 * ell * ell)).exp() * r2 / (ell * ell * ell)
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rbf_at_zero_distance_is_variance() {
        let k = KernelSpec::rbf(0.2, 1.0).unwrap();
        assert_eq!(kernel_eval(&k, &[0.3], &[0.3]).unwrap(), 1.0);
        let k2 = KernelSpec::rbf(0.2, 2.5).unwrap();
        assert_eq!(kernel_eval(&k2, &[0.3], &[0.3]).unwrap(), 2.5);
    }

    #[test]
    fn matern52_at_zero_distance_is_variance() {
        for ell in [0.05, 0.5, 3.0] {
            let k = KernelSpec::matern52(ell, 1.7).unwrap();
            assert_eq!(kernel_eval(&k, &[0.1], &[0.1]).unwrap(), 1.7);
        }
    }

    #[test]
    fn lin_times_rbf_vanishes_at_center() {
        let k = KernelSpec::lin_times_rbf(0.3, 0.4).unwrap();
        assert_eq!(kernel_eval(&k, &[0.4], &[0.9]).unwrap(), 0.0);
        assert_eq!(kernel_eval(&k, &[0.1], &[0.4]).unwrap(), 0.0);
    }

    #[test]
    fn rbf_closed_form_at_distance_two() {
        // exp(−r²/2ℓ²) with r=2, ℓ=1: exp(−2), computed independently.
        let k = KernelSpec::rbf(1.0, 1.0).unwrap();
        let got = kernel_eval(&k, &[0.0], &[2.0]).unwrap();
        assert_relative_eq!(got, (-2.0_f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(got, 0.1353352832366127, max_relative = 1e-12);
    }

    #[test]
    fn symmetry_in_arguments() {
        let specs = [
            KernelSpec::rbf(0.2, 1.3).unwrap(),
            KernelSpec::matern12(0.7, 0.9).unwrap(),
            KernelSpec::matern52(0.4, 2.0).unwrap(),
            KernelSpec::lin_times_rbf(0.25, 0.4).unwrap(),
        ];
        for k in &specs {
            let a = kernel_eval(k, &[0.11], &[0.83]).unwrap();
            let b = kernel_eval(k, &[0.83], &[0.11]).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = KernelSpec::rbf(1.0, 1.0).unwrap();
        assert!(kernel_eval(&k, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn rejects_nonpositive_hyperparameters() {
        assert!(KernelSpec::rbf(0.0, 1.0).is_err());
        assert!(KernelSpec::rbf(0.2, -1.0).is_err());
        assert!(KernelSpec::matern12(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn lengthscale_derivative_matches_central_differences() {
        let h = 1e-6;
        for (kp, km, k) in [
            (
                KernelSpec::rbf(0.3 + h, 1.4).unwrap(),
                KernelSpec::rbf(0.3 - h, 1.4).unwrap(),
                KernelSpec::rbf(0.3, 1.4).unwrap(),
            ),
            (
                KernelSpec::matern12(0.5 + h, 1.0).unwrap(),
                KernelSpec::matern12(0.5 - h, 1.0).unwrap(),
                KernelSpec::matern12(0.5, 1.0).unwrap(),
            ),
            (
                KernelSpec::matern52(0.2 + h, 2.0).unwrap(),
                KernelSpec::matern52(0.2 - h, 2.0).unwrap(),
                KernelSpec::matern52(0.2, 2.0).unwrap(),
            ),
            (
                KernelSpec::lin_times_rbf(0.25 + h, 0.4).unwrap(),
                KernelSpec::lin_times_rbf(0.25 - h, 0.4).unwrap(),
                KernelSpec::lin_times_rbf(0.25, 0.4).unwrap(),
            ),
        ] {
            let x = [0.15];
            let y = [0.62];
            let fd = (kernel_eval(&kp, &x, &y).unwrap() - kernel_eval(&km, &x, &y).unwrap())
                / (2.0 * h);
            let analytic = kernel_eval_dlengthscale(&k, &x, &y).unwrap();
            assert_relative_eq!(analytic, fd, max_relative = 1e-6, epsilon = 1e-10);
        }
    }
}
