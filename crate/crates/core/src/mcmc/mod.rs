//! Gradient-based MCMC: the HMC sampler, the log-posterior model zoo and
//! convergence diagnostics.

mod diagnostics;
mod hmc;
mod io;
mod model;
mod transforms;

pub use diagnostics::{ess, r_hat, Ess};
pub use hmc::{
    hmc_sample, ks_statistic, summarize, ChainDraws, HmcConfig, HmcRun, ParamSummary,
    PosteriorModel,
};
pub use io::{
    read_run_metadata, read_summary_csv, write_chain_csvs, write_run_metadata, write_summary_csv,
    RunMetadata,
};
pub use model::{
    negbin_logpmf, BinomSpatialCvaeModel, BinomSpatialGpModel, BinomialObservations, ConditionMap,
    ConjugateNormalModel, DecoderGpModel, GaussianObservations, GpRegressionModel, ScalarParam,
    SirCvaeModel, StandardNormalTarget, BETA_RELAXATION_EPS,
};
pub use transforms::Transform;
