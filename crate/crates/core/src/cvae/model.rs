//! The conditional VAE model object and its persistence.

use crate::error::CoreError;
use crate::neural::{MlpParams, MlpTrace};
use crate::rng::stream_rng;
use crate::Result;
use ndarray::{concatenate, Array1, Array2, Axis};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Model file format version.
pub const FORMAT_VERSION: u32 = 1;

/// Provenance recorded next to a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub seed: u64,
    pub epochs: usize,
    pub loss_history_path: Option<String>,
}

/// Encoder/decoder pair with condition concatenation.
///
/// The encoder maps `concat(y, c)` (length `n + k`) to `2d` outputs read as
/// `(μ_z, log σ²_z)`; the decoder maps `concat(z, c)` (length `d + k`) back
/// to length `n`. `k = 0` gives the unconditioned baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct CvaeModel {
    pub(crate) encoder: MlpParams,
    pub(crate) decoder: MlpParams,
    latent_dim: usize,
    condition_dim: usize,
    sigma2_vae: f64,
    pub training_metadata: Option<TrainingMetadata>,
}

impl CvaeModel {
    pub fn new(
        encoder: MlpParams,
        decoder: MlpParams,
        latent_dim: usize,
        condition_dim: usize,
        sigma2_vae: f64,
    ) -> Result<Self> {
        if encoder.output_dim() != 2 * latent_dim {
            return Err(CoreError::ShapeMismatch(format!(
                "encoder output {} must equal 2·latent_dim = {}",
                encoder.output_dim(),
                2 * latent_dim
            )));
        }
        if decoder.input_dim() != latent_dim + condition_dim {
            return Err(CoreError::ShapeMismatch(format!(
                "decoder input {} must equal latent_dim + condition_dim = {}",
                decoder.input_dim(),
                latent_dim + condition_dim
            )));
        }
        if encoder.input_dim() != decoder.output_dim() + condition_dim {
            return Err(CoreError::ShapeMismatch(format!(
                "encoder input {} must equal n + condition_dim = {}",
                encoder.input_dim(),
                decoder.output_dim() + condition_dim
            )));
        }
        if !(sigma2_vae > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "sigma2_vae must be positive, got {sigma2_vae}"
            )));
        }
        Ok(CvaeModel {
            encoder,
            decoder,
            latent_dim,
            condition_dim,
            sigma2_vae,
            training_metadata: None,
        })
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn condition_dim(&self) -> usize {
        self.condition_dim
    }

    /// Output (grid) length n.
    pub fn n(&self) -> usize {
        self.decoder.output_dim()
    }

    pub fn sigma2_vae(&self) -> f64 {
        self.sigma2_vae
    }

    pub fn encoder(&self) -> &MlpParams {
        &self.encoder
    }

    pub fn decoder(&self) -> &MlpParams {
        &self.decoder
    }

    /// Mutable network access, e.g. for calibration checks that perturb
    /// single parameters. Shapes must be preserved.
    pub fn encoder_mut(&mut self) -> &mut MlpParams {
        &mut self.encoder
    }

    pub fn decoder_mut(&mut self) -> &mut MlpParams {
        &mut self.decoder
    }

    fn check_condition(&self, c: &[f64]) -> Result<()> {
        if c.len() != self.condition_dim {
            return Err(CoreError::ShapeMismatch(format!(
                "condition has length {}, model expects {}",
                c.len(),
                self.condition_dim
            )));
        }
        Ok(())
    }

    /// Encodes one draw to its posterior location/scale `(μ_z, log σ²_z)`.
    pub fn encode(&self, y: &Array1<f64>, c: &[f64]) -> Result<(Array1<f64>, Array1<f64>)> {
        self.check_condition(c)?;
        if y.len() != self.n() {
            return Err(CoreError::ShapeMismatch(format!(
                "draw has length {}, model expects {}",
                y.len(),
                self.n()
            )));
        }
        let mut input = Array1::zeros(y.len() + c.len());
        input.slice_mut(ndarray::s![..y.len()]).assign(y);
        for (j, &v) in c.iter().enumerate() {
            input[y.len() + j] = v;
        }
        let out = self.encoder.forward(&input)?;
        let mu = out.slice(ndarray::s![..self.latent_dim]).to_owned();
        let logvar = out.slice(ndarray::s![self.latent_dim..]).to_owned();
        Ok((mu, logvar))
    }

    /// Decodes a latent vector at the given condition.
    pub fn decode(&self, z: &Array1<f64>, c: &[f64]) -> Result<Array1<f64>> {
        self.check_condition(c)?;
        if z.len() != self.latent_dim {
            return Err(CoreError::ShapeMismatch(format!(
                "latent has length {}, model expects {}",
                z.len(),
                self.latent_dim
            )));
        }
        let mut input = Array1::zeros(z.len() + c.len());
        input.slice_mut(ndarray::s![..z.len()]).assign(z);
        for (j, &v) in c.iter().enumerate() {
            input[z.len() + j] = v;
        }
        self.decoder.forward(&input)
    }

    /// `count` decoder draws `D(z, c)`, `z ~ N(0, I_d)`, one per row,
    /// reproducible by seed.
    pub fn decoded_draws(&self, c: &[f64], count: usize, seed: u64) -> Result<Array2<f64>> {
        self.check_condition(c)?;
        let mut out = Array2::zeros((count, self.n()));
        for i in 0..count {
            let mut rng = stream_rng(seed, i as u64);
            let z = Array1::from_shape_fn(self.latent_dim, |_| StandardNormal.sample(&mut rng));
            out.row_mut(i).assign(&self.decode(&z, c)?);
        }
        Ok(out)
    }

    /// Batch encoder forward keeping the trace for backprop; returns
    /// `(μ batch, log σ² batch, trace)`.
    pub(crate) fn encode_batch_trace(
        &self,
        y: &Array2<f64>,
        c: &Array2<f64>,
    ) -> Result<(Array2<f64>, Array2<f64>, MlpTrace)> {
        let input = concatenate(Axis(1), &[y.view(), c.view()])
            .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?;
        let (out, trace) = self.encoder.forward_trace(&input)?;
        let mu = out.slice(ndarray::s![.., ..self.latent_dim]).to_owned();
        let logvar = out.slice(ndarray::s![.., self.latent_dim..]).to_owned();
        Ok((mu, logvar, trace))
    }

    pub(crate) fn decode_batch_trace(
        &self,
        z: &Array2<f64>,
        c: &Array2<f64>,
    ) -> Result<(Array2<f64>, MlpTrace)> {
        let input = concatenate(Axis(1), &[z.view(), c.view()])
            .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?;
        self.decoder.forward_trace(&input)
    }

    /// Writes the full model document (both networks, dims, σ²_vae,
    /// training metadata) as JSON.
    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = CvaeDoc {
            format_version: FORMAT_VERSION,
            latent_dim: self.latent_dim,
            condition_dim: self.condition_dim,
            sigma2_vae: self.sigma2_vae,
            encoder: crate::neural::doc_from_params(&self.encoder),
            decoder: crate::neural::doc_from_params(&self.decoder),
            training_metadata: self.training_metadata.clone(),
        };
        let text = serde_json::to_string_pretty(&doc).expect("serializable");
        std::fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
    }

    /// Reads a model document back, validating version and shapes.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CoreError::io(path.display().to_string(), e))?;
        let doc: CvaeDoc = serde_json::from_str(&text).map_err(|e| {
            CoreError::parse(
                path.display().to_string(),
                format!("line {}, column {}", e.line(), e.column()),
                e.to_string(),
            )
        })?;
        if doc.format_version != FORMAT_VERSION {
            return Err(CoreError::parse(
                path.display().to_string(),
                "format_version",
                format!("unsupported version {}", doc.format_version),
            ));
        }
        let mut model = CvaeModel::new(
            doc.encoder.into_params()?,
            doc.decoder.into_params()?,
            doc.latent_dim,
            doc.condition_dim,
            doc.sigma2_vae,
        )?;
        model.training_metadata = doc.training_metadata;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct CvaeDoc {
    format_version: u32,
    latent_dim: usize,
    condition_dim: usize,
    sigma2_vae: f64,
    encoder: crate::neural::MlpDoc,
    decoder: crate::neural::MlpDoc,
    training_metadata: Option<TrainingMetadata>,
}

/// Location-scale transform `z = μ + exp(logvar/2) ⊙ ε`.
pub fn reparameterize(
    mu: &Array1<f64>,
    logvar: &Array1<f64>,
    eps: &Array1<f64>,
) -> Result<Array1<f64>> {
    if mu.len() != logvar.len() || mu.len() != eps.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "reparameterize lengths {}, {}, {}",
            mu.len(),
            logvar.len(),
            eps.len()
        )));
    }
    Ok(mu + &(logvar.mapv(|lv| (0.5 * lv).exp()) * eps))
}

/// `KL(N(μ, diag(exp(logvar))) ‖ N(0, I)) = ½ Σ (μ² + e^lv − 1 − lv)`.
pub fn kl_to_standard_normal(mu: &Array1<f64>, logvar: &Array1<f64>) -> Result<f64> {
    if mu.len() != logvar.len() {
        return Err(CoreError::ShapeMismatch(format!(
            "kl lengths {} and {}",
            mu.len(),
            logvar.len()
        )));
    }
    Ok(mu
        .iter()
        .zip(logvar)
        .map(|(&m, &lv)| 0.5 * (m * m + lv.exp() - 1.0 - lv))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{Activation, MlpParams};
    use approx::assert_relative_eq;
    use ndarray::array;
    use proptest::prelude::*;

    fn zero_model(n: usize, d: usize, k: usize) -> CvaeModel {
        let encoder = MlpParams::init(&[n + k, 2 * d], &[Activation::Identity], 0).unwrap();
        let decoder = MlpParams::init(&[d + k, n], &[Activation::Identity], 0).unwrap();
        let mut encoder = encoder;
        let mut decoder = decoder;
        for l in encoder.layers_mut() {
            l.weight.fill(0.0);
        }
        for l in decoder.layers_mut() {
            l.weight.fill(0.0);
        }
        CvaeModel::new(encoder, decoder, d, k, 1.0).unwrap()
    }

    #[test]
    fn zero_weight_encoder_returns_biases() {
        let mut m = zero_model(4, 2, 1);
        m.encoder.layers_mut()[0].bias = array![0.1, 0.2, -0.3, -0.4];
        let (mu, lv) = m.encode(&Array1::zeros(4), &[0.5]).unwrap();
        assert_eq!(mu, array![0.1, 0.2]);
        assert_eq!(lv, array![-0.3, -0.4]);
    }

    #[test]
    fn zero_weight_decoder_returns_bias() {
        let mut m = zero_model(3, 2, 0);
        m.decoder.layers_mut()[0].bias = array![1.0, 2.0, 3.0];
        let y = m.decode(&Array1::zeros(2), &[]).unwrap();
        assert_eq!(y, array![1.0, 2.0, 3.0]);
    }

    #[test]
    fn unconditioned_model_rejects_nonempty_condition() {
        let m = zero_model(3, 2, 0);
        assert!(m.encode(&Array1::zeros(3), &[0.1]).is_err());
        assert!(m.decode(&Array1::zeros(2), &[0.1]).is_err());
        assert!(m.decode(&Array1::zeros(2), &[]).is_ok());
    }

    #[test]
    fn reparameterize_known_cases() {
        let mu = array![1.0, -2.0];
        let lv = array![0.0, 0.0];
        assert_eq!(
            reparameterize(&mu, &lv, &Array1::zeros(2)).unwrap(),
            mu.clone()
        );
        assert_eq!(
            reparameterize(&mu, &lv, &array![1.0, 1.0]).unwrap(),
            array![2.0, -1.0]
        );
    }

    #[test]
    fn reparameterize_monte_carlo_variance() {
        let mu = array![0.5];
        let lv = array![0.7];
        let mut rng = crate::rng::stream_rng(31, 0);
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let n = 100_000;
        for _ in 0..n {
            let e: f64 = rand_distr::StandardNormal.sample(&mut rng);
            let z = reparameterize(&mu, &lv, &array![e]).unwrap()[0];
            sum += z;
            sumsq += z * z;
        }
        let mean = sum / n as f64;
        let var = sumsq / n as f64 - mean * mean;
        assert_relative_eq!(var, lv[0].exp(), max_relative = 0.05);
    }

    #[test]
    fn kl_known_values() {
        assert_eq!(
            kl_to_standard_normal(&Array1::zeros(3), &Array1::zeros(3)).unwrap(),
            0.0
        );
        assert_eq!(
            kl_to_standard_normal(&array![1.0], &array![0.0]).unwrap(),
            0.5
        );
        // μ=0, σ² = e: ½(e − 2), plugged into the closed form by hand
        let got = kl_to_standard_normal(&array![0.0], &array![1.0]).unwrap();
        assert_relative_eq!(got, 0.3591409142295225, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn kl_is_nonnegative(
            mu in proptest::collection::vec(-20.0_f64..20.0, 1..6),
            lv in proptest::collection::vec(-10.0_f64..10.0, 1..6),
        ) {
            let d = mu.len().min(lv.len());
            let mu = Array1::from_vec(mu[..d].to_vec());
            let lv = Array1::from_vec(lv[..d].to_vec());
            let kl = kl_to_standard_normal(&mu, &lv).unwrap();
            prop_assert!(kl >= 0.0);
            let zero = mu.iter().all(|&v| v == 0.0) && lv.iter().all(|&v| v == 0.0);
            if !zero {
                prop_assert!(kl > 0.0);
            }
        }
    }

    #[test]
    fn save_load_round_trip_bit_exact() {
        let enc = MlpParams::init(
            &[5, 6, 4],
            &[Activation::LeakyRelu(0.01), Activation::Identity],
            3,
        )
        .unwrap();
        let dec = MlpParams::init(
            &[3, 6, 4],
            &[Activation::LeakyRelu(0.01), Activation::Identity],
            4,
        )
        .unwrap();
        let mut m = CvaeModel::new(enc, dec, 2, 1, 0.9).unwrap();
        m.training_metadata = Some(TrainingMetadata {
            seed: 7,
            epochs: 12,
            loss_history_path: Some("loss.csv".into()),
        });
        let dir = std::env::temp_dir().join("priorcvae_cvae_io");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("model.json");
        m.save(&path).unwrap();
        let back = CvaeModel::load(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn decoded_draws_are_seed_deterministic() {
        let m = zero_model(3, 2, 1);
        let a = m.decoded_draws(&[0.3], 5, 1).unwrap();
        let b = m.decoded_draws(&[0.3], 5, 1).unwrap();
        assert_eq!(a, b);
    }
}
