//! Conditional VAE assembly: encoder/decoder wiring with condition
//! concatenation, the reconstruction+KL objective and its integral-augmented
//! variant, and the minibatch training loop.
//!
//! A model with `condition_dim = 0` is the unconditioned baseline: same
//! architecture, no way to tell hyperparameter values apart.

mod loss;
mod model;
mod train;

pub use loss::{log_sum_exp, lgcp_loss, priorcvae_loss, quadrature_log_integral, LossKind, LossValue};
pub use model::{
    kl_to_standard_normal, reparameterize, CvaeModel, TrainingMetadata, FORMAT_VERSION,
};
pub use train::{train, write_loss_history_csv, LossHistory, TrainConfig};
