//! MLP parameter persistence.
//!
//! One network serialises as a JSON document with explicit layer sizes and
//! activations next to the weight arrays; floats print in shortest
//! round-trip form, so `load(save(p)) == p` bit-exactly.

use super::mlp::{Activation, Layer, MlpParams};
use crate::error::CoreError;
use crate::Result;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Serialize, Deserialize)]
struct LayerDoc {
    weight: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct MlpDoc {
    layer_sizes: Vec<usize>,
    layers: Vec<LayerDoc>,
}

impl MlpDoc {
    pub(crate) fn from_params(params: &MlpParams) -> Self {
        MlpDoc {
            layer_sizes: params.layer_sizes(),
            layers: params
                .layers()
                .iter()
                .map(|l| LayerDoc {
                    weight: l.weight.rows().into_iter().map(|r| r.to_vec()).collect(),
                    bias: l.bias.to_vec(),
                    activation: l.activation,
                })
                .collect(),
        }
    }

    pub(crate) fn into_params(self) -> Result<MlpParams> {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (k, doc) in self.layers.into_iter().enumerate() {
            let rows = doc.weight.len();
            let cols = doc.weight.first().map(|r| r.len()).unwrap_or(0);
            if doc.weight.iter().any(|r| r.len() != cols) {
                return Err(CoreError::ShapeMismatch(format!(
                    "layer {k} weight rows are ragged"
                )));
            }
            let flat: Vec<f64> = doc.weight.into_iter().flatten().collect();
            let weight = Array2::from_shape_vec((rows, cols), flat)
                .map_err(|e| CoreError::ShapeMismatch(e.to_string()))?;
            layers.push(Layer {
                weight,
                bias: Array1::from_vec(doc.bias),
                activation: doc.activation,
            });
        }
        let params = MlpParams::new(layers)?;
        if params.layer_sizes() != self.layer_sizes {
            return Err(CoreError::ShapeMismatch(format!(
                "declared layer_sizes {:?} do not match weights {:?}",
                self.layer_sizes,
                params.layer_sizes()
            )));
        }
        Ok(params)
    }
}

/// Writes the network to `path` as JSON.
pub fn save_params(params: &MlpParams, path: &Path) -> Result<()> {
    let doc = MlpDoc::from_params(params);
    let text = serde_json::to_string_pretty(&doc).expect("serializable");
    std::fs::write(path, text).map_err(|e| CoreError::io(path.display().to_string(), e))
}

/// Reads a network back; malformed documents report line/column.
pub fn load_params(path: &Path) -> Result<MlpParams> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CoreError::io(path.display().to_string(), e))?;
    let doc: MlpDoc = serde_json::from_str(&text).map_err(|e| {
        CoreError::parse(
            path.display().to_string(),
            format!("line {}, column {}", e.line(), e.column()),
            e.to_string(),
        )
    })?;
    doc.into_params()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("priorcvae_neural_io");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = MlpParams::init(
            &[7, 5, 3],
            &[Activation::LeakyRelu(0.01), Activation::Sigmoid],
            77,
        )
        .unwrap();
        let mut rng = stream_rng(1, 0);
        for l in p.layers_mut() {
            l.bias.mapv_inplace(|_| StandardNormal.sample(&mut rng));
        }
        let path = tmp("roundtrip.json");
        save_params(&p, &path).unwrap();
        let q = load_params(&path).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn empty_file_is_a_parse_error() {
        let path = tmp("empty.json");
        std::fs::write(&path, "").unwrap();
        match load_params(&path) {
            Err(CoreError::Parse { position, .. }) => {
                assert!(position.contains("line"), "position missing: {position}")
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let p = MlpParams::init(&[4, 2], &[Activation::Identity], 5).unwrap();
        let path = tmp("full.json");
        save_params(&p, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut = tmp("truncated.json");
        std::fs::write(&cut, &text[..text.len() / 2]).unwrap();
        assert!(matches!(load_params(&cut), Err(CoreError::Parse { .. })));
    }
}
