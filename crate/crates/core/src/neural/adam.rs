//! Adam optimiser with bias correction.

use super::mlp::{MlpGrads, MlpParams};
use ndarray::{Array1, Array2};

/// First/second-moment accumulators shaped like the parameters, plus the
/// step counter and hyperparameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<(Array2<f64>, Array1<f64>)>,
    v: Vec<(Array2<f64>, Array1<f64>)>,
    pub t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &MlpParams, lr: f64) -> Self {
        let zeros = || {
            params
                .layers()
                .iter()
                .map(|l| (Array2::zeros(l.weight.dim()), Array1::zeros(l.bias.len())))
                .collect::<Vec<_>>()
        };
        AdamState {
            m: zeros(),
            v: zeros(),
            t: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// One update: `m,v` exponential moving averages of `g` and `g²`,
    /// bias-corrected, then `p -= lr·m̂/(√v̂ + ε)`.
    pub fn step(&mut self, params: &mut MlpParams, grads: &MlpGrads) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (k, layer) in params.layers_mut().iter_mut().enumerate() {
            let (gw, gb) = &grads.layers[k];
            let (mw, mb) = &mut self.m[k];
            let (vw, vb) = &mut self.v[k];
            ndarray::Zip::from(&mut layer.weight)
                .and(mw)
                .and(vw)
                .and(gw)
                .for_each(|p, m, v, &g| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                });
            ndarray::Zip::from(&mut layer.bias)
                .and(mb)
                .and(vb)
                .and(gb)
                .for_each(|p, m, v, &g| {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    *p -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + self.eps);
                });
        }
    }
}
