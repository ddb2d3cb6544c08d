//! Unconstrained reparameterisations for HMC.
//!
//! Positive parameters are sampled on the log scale and interval-constrained
//! ones through a scaled logit; the log-Jacobian of each map is added to the
//! target density so the sampler sees an unconstrained problem.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transform {
    /// `x = u`.
    Identity,
    /// `x = exp(u)`, support `(0, ∞)`.
    Log,
    /// `x = a + (b−a)·logistic(u)`, support `(a, b)`.
    Logit { a: f64, b: f64 },
}

#[inline]
fn logistic(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

impl Transform {
    /// Constrained value at `u`.
    pub fn constrain(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => u,
            Transform::Log => u.exp(),
            Transform::Logit { a, b } => a + (b - a) * logistic(u),
        }
    }

    /// Inverse map (used to seed initial positions from constrained guesses).
    pub fn unconstrain(&self, x: f64) -> f64 {
        match *self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
            Transform::Logit { a, b } => {
                let s = (x - a) / (b - a);
                (s / (1.0 - s)).ln()
            }
        }
    }

    /// `dx/du`.
    pub fn dconstrain(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => 1.0,
            Transform::Log => u.exp(),
            Transform::Logit { a, b } => {
                let s = logistic(u);
                (b - a) * s * (1.0 - s)
            }
        }
    }

    /// `log |dx/du|`.
    pub fn log_jacobian(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => 0.0,
            Transform::Log => u,
            Transform::Logit { a, b } => {
                let s = logistic(u);
                (b - a).ln() + s.ln() + (1.0 - s).ln()
            }
        }
    }

    /// `d log|dx/du| / du`.
    pub fn dlog_jacobian(&self, u: f64) -> f64 {
        match *self {
            Transform::Identity => 0.0,
            Transform::Log => 1.0,
            Transform::Logit { .. } => 1.0 - 2.0 * logistic(u),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn round_trips() {
        for t in [
            Transform::Identity,
            Transform::Log,
            Transform::Logit { a: 0.01, b: 0.99 },
        ] {
            for &u in &[-2.0, -0.3, 0.0, 1.7] {
                let x = t.constrain(u);
                assert_relative_eq!(t.unconstrain(x), u, max_relative = 1e-10, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let h = 1e-6;
        for t in [
            Transform::Identity,
            Transform::Log,
            Transform::Logit { a: 0.0, b: 1.0 },
            Transform::Logit { a: 0.01, b: 0.99 },
        ] {
            for &u in &[-1.3, 0.2, 0.9] {
                let fd = (t.constrain(u + h) - t.constrain(u - h)) / (2.0 * h);
                assert_relative_eq!(t.dconstrain(u), fd, max_relative = 1e-6, epsilon = 1e-12);
                assert_relative_eq!(
                    t.log_jacobian(u),
                    t.dconstrain(u).abs().ln(),
                    max_relative = 1e-12
                );
                let fd_lj = (t.log_jacobian(u + h) - t.log_jacobian(u - h)) / (2.0 * h);
                assert_relative_eq!(t.dlog_jacobian(u), fd_lj, max_relative = 1e-6, epsilon = 1e-9);
            }
        }
    }
}
