//! MLP forward and reverse passes.

use crate::error::CoreError;
use crate::rng::stream_rng;
use crate::Result;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Per-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Activation {
    LeakyRelu(f64),
    Sigmoid,
    Identity,
}

impl Activation {
    /// Evaluates the nonlinearity at `x`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Activation::LeakyRelu(slope) => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the post-activation value. Works for the
    /// whole family: leaky-ReLU preserves sign, sigmoid's derivative is
    /// `y(1-y)`.
    #[inline]
    fn deriv_from_output(&self, y: f64) -> f64 {
        match *self {
            Activation::LeakyRelu(slope) => {
                if y >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Identity => 1.0,
        }
    }
}

/// Affine map plus activation. Weight is `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

/// Ordered layer stack.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

/// Gradients shaped like the parameters.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl MlpGrads {
    pub fn zeros_like(params: &MlpParams) -> Self {
        MlpGrads {
            layers: params
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weight.dim()), Array1::zeros(l.bias.len())))
                .collect(),
        }
    }

    pub fn scale(&mut self, c: f64) {
        for (w, b) in &mut self.layers {
            w.mapv_inplace(|v| v * c);
            b.mapv_inplace(|v| v * c);
        }
    }

    /// Largest absolute entry, for debugging and convergence checks.
    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|(w, b)| w.iter().chain(b.iter()))
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Post-activation values retained for the reverse pass.
pub struct MlpTrace {
    /// `outputs[0]` is the input batch; `outputs[k]` the output of layer k−1.
    outputs: Vec<Array2<f64>>,
}

impl MlpParams {
    /// Validates shape chaining and entry finiteness.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(CoreError::InvalidParameter("mlp needs >= 1 layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weight.nrows() {
                return Err(CoreError::ShapeMismatch(format!(
                    "layer {k}: bias length {} vs weight rows {}",
                    l.bias.len(),
                    l.weight.nrows()
                )));
            }
            if k > 0 && layers[k - 1].weight.nrows() != l.weight.ncols() {
                return Err(CoreError::ShapeMismatch(format!(
                    "layer {k} input width {} does not chain with previous output {}",
                    l.weight.ncols(),
                    layers[k - 1].weight.nrows()
                )));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(CoreError::InvalidParameter(format!(
                    "layer {k} contains non-finite entries"
                )));
            }
        }
        Ok(MlpParams { layers })
    }

    /// He-style fan-in scaled uniform weights (`U(±√(6/fan_in))`, variance
    /// `2/fan_in`), zero biases; reproducible by seed.
    pub fn init(layer_sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(CoreError::InvalidParameter(
                "need at least input and output sizes".into(),
            ));
        }
        if activations.len() != layer_sizes.len() - 1 {
            return Err(CoreError::ShapeMismatch(format!(
                "{} activations for {} layers",
                activations.len(),
                layer_sizes.len() - 1
            )));
        }
        let mut layers = Vec::with_capacity(activations.len());
        for (k, act) in activations.iter().enumerate() {
            let fan_in = layer_sizes[k];
            let fan_out = layer_sizes[k + 1];
            let bound = (6.0 / fan_in as f64).sqrt();
            let mut rng = stream_rng(seed, k as u64);
            let weight = Array2::from_shape_fn((fan_out, fan_in), |_| {
                (rng.random::<f64>() * 2.0 - 1.0) * bound
            });
            layers.push(Layer {
                weight,
                bias: Array1::zeros(fan_out),
                activation: *act,
            });
        }
        MlpParams::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().weight.nrows()
    }

    /// `[input, hidden.., output]` widths.
    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.input_dim()];
        sizes.extend(self.layers.iter().map(|l| l.weight.nrows()));
        sizes
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    /// Forward pass of a single vector.
    pub fn forward(&self, input: &Array1<f64>) -> Result<Array1<f64>> {
        if input.len() != self.input_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "input length {} vs expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        let mut a = input.clone();
        for l in &self.layers {
            let mut u = l.weight.dot(&a) + &l.bias;
            u.mapv_inplace(|x| l.activation.eval(x));
            a = u;
        }
        Ok(a)
    }

    /// Forward pass over a batch (rows = samples).
    pub fn forward_batch(&self, input: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_trace(input)?.0)
    }

    /// Forward pass retaining per-layer outputs for [`MlpParams::backward_batch`].
    pub fn forward_trace(&self, input: &Array2<f64>) -> Result<(Array2<f64>, MlpTrace)> {
        if input.ncols() != self.input_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "input width {} vs expected {}",
                input.ncols(),
                self.input_dim()
            )));
        }
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(input.clone());
        for l in &self.layers {
            let prev = outputs.last().unwrap();
            let mut u = prev.dot(&l.weight.t());
            u += &l.bias;
            u.mapv_inplace(|x| l.activation.eval(x));
            outputs.push(u);
        }
        Ok((outputs.last().unwrap().clone(), MlpTrace { outputs }))
    }

    /// Reverse pass over a batch: gradients of `Σ_rows ⟨cotangent_row, output_row⟩`
    /// with respect to every parameter and to the input batch.
    pub fn backward_batch(
        &self,
        trace: &MlpTrace,
        cotangent: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        let last = trace.outputs.last().unwrap();
        if cotangent.dim() != last.dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "cotangent shape {:?} vs output {:?}",
                cotangent.dim(),
                last.dim()
            )));
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = cotangent.clone();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let post = &trace.outputs[k + 1];
            // d pre-activation = g ⊙ act'(post)
            ndarray::Zip::from(&mut g).and(post).for_each(|gv, &yv| {
                *gv *= l.activation.deriv_from_output(yv);
            });
            let a_prev = &trace.outputs[k];
            let dw = g.t().dot(a_prev);
            let db = g.sum_axis(Axis(0));
            grads.push((dw, db));
            g = g.dot(&l.weight);
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, g))
    }

    /// Single-vector reverse pass: exact gradients of `⟨cotangent, output⟩`
    /// with respect to all parameters and the input.
    pub fn backward(
        &self,
        input: &Array1<f64>,
        cotangent: &Array1<f64>,
    ) -> Result<(MlpGrads, Array1<f64>)> {
        if cotangent.len() != self.output_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "cotangent length {} vs output {}",
                cotangent.len(),
                self.output_dim()
            )));
        }
        let x = input.clone().insert_axis(Axis(0));
        let (_, trace) = self.forward_trace(&x)?;
        let cot = cotangent.clone().insert_axis(Axis(0));
        let (grads, gx) = self.backward_batch(&trace, &cot)?;
        Ok((grads, gx.index_axis(Axis(0), 0).to_owned()))
    }

    /// Gradient of `⟨cotangent, output⟩` with respect to the input only;
    /// avoids the parameter-gradient work when only the chain through the
    /// inputs is needed (the sampler's hot path).
    pub fn input_gradient(
        &self,
        input: &Array1<f64>,
        cotangent: &Array1<f64>,
    ) -> Result<Array1<f64>> {
        if input.len() != self.input_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "input length {} vs expected {}",
                input.len(),
                self.input_dim()
            )));
        }
        if cotangent.len() != self.output_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "cotangent length {} vs output {}",
                cotangent.len(),
                self.output_dim()
            )));
        }
        let mut posts = Vec::with_capacity(self.layers.len());
        let mut a = input.clone();
        for l in &self.layers {
            let mut u = l.weight.dot(&a) + &l.bias;
            u.mapv_inplace(|x| l.activation.eval(x));
            posts.push(u.clone());
            a = u;
        }
        let mut g = cotangent.clone();
        for (k, l) in self.layers.iter().enumerate().rev() {
            ndarray::Zip::from(&mut g).and(&posts[k]).for_each(|gv, &yv| {
                *gv *= l.activation.deriv_from_output(yv);
            });
            g = l.weight.t().dot(&g);
        }
        Ok(g)
    }

    /// In-place SGD-style update `p += c · g`, used by the optimiser.
    pub fn add_scaled(&mut self, grads: &MlpGrads, c: f64) {
        for (l, (dw, db)) in self.layers.iter_mut().zip(&grads.layers) {
            l.weight.scaled_add(c, dw);
            l.bias.scaled_add(c, db);
        }
    }
}
