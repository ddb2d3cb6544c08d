//! Minimal feed-forward network stack: MLP forward pass, exact reverse-mode
//! gradients with respect to parameters *and* inputs, Adam, initialisation
//! and serialization.
//!
//! Input gradients are first-class here because the sampler differentiates
//! the trained decoder with respect to its latent/condition inputs on every
//! leapfrog step.

mod adam;
mod io;
mod mlp;

pub use adam::AdamState;
pub use io::{load_params, save_params};
pub use mlp::{Activation, Layer, MlpGrads, MlpParams, MlpTrace};

pub(crate) use io::MlpDoc;

pub(crate) fn doc_from_params(params: &MlpParams) -> MlpDoc {
    MlpDoc::from_params(params)
}
