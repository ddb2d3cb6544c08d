//! Minibatch training loop.

use super::loss::{loss_value, lgcp_loss, priorcvae_loss, LossKind};
use super::model::{CvaeModel, TrainingMetadata};
use crate::dataset::PriorDataset;
use crate::error::CoreError;
use crate::neural::AdamState;
use crate::rng::stream_rng;
use crate::Result;
use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// Training-run settings. The dataset itself is passed to [`train`]; callers
/// that resolve datasets from files or generators do so before entering the
/// loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Integral-augmentation weight; `None` trains the standard objective.
    pub sigma2_int: Option<f64>,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(CoreError::InvalidParameter(
                "epochs and batch_size must be positive".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Some(s) = self.sigma2_int {
            if !(s > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "sigma2_int must be positive, got {s}"
                )));
            }
        }
        Ok(())
    }

    fn loss_kind(&self) -> LossKind {
        match self.sigma2_int {
            Some(sigma2_int) => LossKind::IntegralAugmented { sigma2_int },
            None => LossKind::Standard,
        }
    }
}

/// Per-epoch train and held-out losses. Entry 0 is evaluated before any
/// update.
#[derive(Debug, Clone, PartialEq)]
pub struct LossHistory {
    pub entries: Vec<(usize, f64, f64)>,
}

impl LossHistory {
    pub fn initial_heldout(&self) -> f64 {
        self.entries.first().map(|e| e.2).unwrap_or(f64::NAN)
    }

    pub fn final_heldout(&self) -> f64 {
        self.entries.last().map(|e| e.2).unwrap_or(f64::NAN)
    }
}

/// Cap on rows used for the per-epoch loss evaluations; keeps the bookkeeping
/// cost below the update cost on large datasets.
const EVAL_ROW_CAP: usize = 4096;

fn eval_rows(ds: &PriorDataset) -> (Array2<f64>, Array2<f64>) {
    let take = ds.rows().min(EVAL_ROW_CAP);
    (
        ds.draws().slice(ndarray::s![..take, ..]).to_owned(),
        ds.conditions().slice(ndarray::s![..take, ..]).to_owned(),
    )
}

fn eval_loss(
    model: &CvaeModel,
    y: &Array2<f64>,
    c: &Array2<f64>,
    kind: LossKind,
    seed: u64,
    tag: u64,
) -> Result<f64> {
    let mut rng = stream_rng(seed, tag);
    let eps = Array2::from_shape_fn((y.nrows(), model.latent_dim()), |_| {
        StandardNormal.sample(&mut rng)
    });
    Ok(loss_value(model, y, c, &eps, kind)?.total)
}

/// Runs minibatch Adam over `config.epochs` epochs, recording train and
/// held-out losses per epoch. Deterministic given the seed. Dataset/model
/// shape mismatches fail before any parameter is touched.
pub fn train(
    model: &mut CvaeModel,
    config: &TrainConfig,
    dataset: &PriorDataset,
    heldout: &PriorDataset,
) -> Result<LossHistory> {
    config.validate()?;
    for (name, ds) in [("train", dataset), ("heldout", heldout)] {
        if ds.n() != model.n() || ds.k() != model.condition_dim() {
            return Err(CoreError::ShapeMismatch(format!(
                "{name} dataset has n={}, k={} but the model expects n={}, k={}",
                ds.n(),
                ds.k(),
                model.n(),
                model.condition_dim()
            )));
        }
    }
    let kind = config.loss_kind();
    let mut enc_opt = AdamState::new(&model.encoder, config.learning_rate);
    let mut dec_opt = AdamState::new(&model.decoder, config.learning_rate);

    let (train_eval_y, train_eval_c) = eval_rows(dataset);
    let (held_y, held_c) = eval_rows(heldout);

    let mut history = Vec::with_capacity(config.epochs + 1);
    history.push((
        0,
        eval_loss(model, &train_eval_y, &train_eval_c, kind, config.seed, 900_000)?,
        eval_loss(model, &held_y, &held_c, kind, config.seed, 500_000)?,
    ));

    let rows = dataset.rows();
    let mut order: Vec<usize> = (0..rows).collect();
    for epoch in 1..=config.epochs {
        let mut rng = stream_rng(config.seed, 1_000 + epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let y = dataset.draws().select(Axis(0), chunk);
            let c = dataset.conditions().select(Axis(0), chunk);
            let eps = Array2::from_shape_fn((chunk.len(), model.latent_dim()), |_| {
                StandardNormal.sample(&mut rng)
            });
            let (value, grads) = match kind {
                LossKind::Standard => priorcvae_loss(model, &y, &c, &eps)?,
                LossKind::IntegralAugmented { sigma2_int } => {
                    lgcp_loss(model, &y, &c, &eps, model.sigma2_vae(), sigma2_int)?
                }
            };
            enc_opt.step(&mut model.encoder, &grads.encoder);
            dec_opt.step(&mut model.decoder, &grads.decoder);
            epoch_loss += value.total;
            batches += 1;
        }
        let heldout_loss = eval_loss(model, &held_y, &held_c, kind, config.seed, 500_000 + epoch as u64)?;
        history.push((epoch, epoch_loss / batches as f64, heldout_loss));
    }

    model.training_metadata = Some(TrainingMetadata {
        seed: config.seed,
        epochs: config.epochs,
        loss_history_path: None,
    });
    Ok(LossHistory { entries: history })
}

/// Writes `epoch,train_loss,heldout_loss` rows.
pub fn write_loss_history_csv(history: &LossHistory, path: &Path) -> Result<()> {
    let mut out = String::from("epoch,train_loss,heldout_loss\n");
    for (epoch, train, heldout) in &history.entries {
        let _ = writeln!(out, "{epoch},{train},{heldout}");
    }
    std::fs::write(path, out).map_err(|e| CoreError::io(path.display().to_string(), e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::sample_gp_dataset;
    use crate::grid::Grid;
    use crate::hyperprior::HyperPrior;
    use crate::kernel::KernelSpec;
    use crate::neural::{Activation, MlpParams};
    use ndarray::Array1;

    fn small_gp_data(seed: u64) -> (PriorDataset, PriorDataset) {
        let grid = Grid::equispaced_1d(8, 0.0, 1.0).unwrap();
        let base = KernelSpec::rbf(0.2, 1.0).unwrap();
        let prior = HyperPrior::Uniform { a: 0.05, b: 0.95 };
        let ds = sample_gp_dataset(&base, &prior, &grid, 600, seed).unwrap();
        ds.split_at(500).unwrap()
    }

    fn small_model(seed: u64) -> CvaeModel {
        let n = 8;
        let d = 4;
        let k = 1;
        let h = 16;
        let encoder = MlpParams::init(
            &[n + k, h, 2 * d],
            &[Activation::LeakyRelu(0.01), Activation::Identity],
            seed,
        )
        .unwrap();
        let decoder = MlpParams::init(
            &[d + k, h, n],
            &[Activation::LeakyRelu(0.01), Activation::Identity],
            seed + 1,
        )
        .unwrap();
        CvaeModel::new(encoder, decoder, d, k, 1.0).unwrap()
    }

    #[test]
    fn heldout_loss_decreases_and_training_is_deterministic() {
        let (train_ds, held) = small_gp_data(2);
        let config = TrainConfig {
            epochs: 40,
            batch_size: 100,
            learning_rate: 1e-3,
            seed: 3,
            sigma2_int: None,
        };
        let mut m1 = small_model(9);
        let h1 = train(&mut m1, &config, &train_ds, &held).unwrap();
        assert!(
            h1.final_heldout() < h1.initial_heldout(),
            "heldout went {} -> {}",
            h1.initial_heldout(),
            h1.final_heldout()
        );
        let mut m2 = small_model(9);
        let h2 = train(&mut m2, &config, &train_ds, &held).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1, h2);
    }

    #[test]
    fn trained_model_distinguishes_conditions() {
        let (train_ds, held) = small_gp_data(4);
        let config = TrainConfig {
            epochs: 60,
            batch_size: 100,
            learning_rate: 2e-3,
            seed: 5,
            sigma2_int: None,
        };
        let mut m = small_model(11);
        train(&mut m, &config, &train_ds, &held).unwrap();
        let z = Array1::zeros(m.latent_dim());
        let low = m.decode(&z, &[0.1]).unwrap();
        let high = m.decode(&z, &[0.9]).unwrap();
        let gap = (&low - &high).mapv(f64::abs).sum();
        assert!(gap > 1e-4, "decoder ignores its condition, gap {gap}");
        let y = train_ds.draw_row(0);
        let (mu_a, _) = m.encode(&y, &[0.1]).unwrap();
        let (mu_b, _) = m.encode(&y, &[0.9]).unwrap();
        assert!((&mu_a - &mu_b).mapv(f64::abs).sum() > 1e-6);
    }

    #[test]
    fn shape_mismatch_fails_before_training() {
        let (train_ds, held) = small_gp_data(6);
        let mut m = small_model(1);
        let bad = train_ds.strip_conditions();
        let config = TrainConfig {
            epochs: 1,
            batch_size: 10,
            learning_rate: 1e-3,
            seed: 0,
            sigma2_int: None,
        };
        let before = m.clone();
        assert!(train(&mut m, &config, &bad, &held).is_err());
        assert_eq!(m, before);
    }

    #[test]
    fn loss_history_csv_format() {
        let history = LossHistory {
            entries: vec![(0, 1.5, 1.6), (1, 1.2, 1.3)],
        };
        let dir = std::env::temp_dir().join("priorcvae_train_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("loss.csv");
        write_loss_history_csv(&history, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "epoch,train_loss,heldout_loss\n0,1.5,1.6\n1,1.2,1.3\n");
    }
}
