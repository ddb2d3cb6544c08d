//! Cholesky-based GP sampling over fixed grids.
//!
//! A draw is `f = L·z` with `z ~ N(0, I_n)` and `L` the lower Cholesky factor
//! of the covariance, so the cost sits in one factorisation per distinct
//! hyperparameter value.

use crate::cov::{build_covariance, DEFAULT_JITTER};
use crate::dataset::PriorDataset;
use crate::grid::Grid;
use crate::hyperprior::HyperPrior;
use crate::kernel::KernelSpec;
use crate::rng::stream_rng;
use crate::Result;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

/// One whitened draw through a precomputed factor: `f = L·z`.
pub fn draw_with_factor<R: Rng + ?Sized>(l: &Array2<f64>, rng: &mut R) -> Array1<f64> {
    let n = l.nrows();
    let z = Array1::from_shape_fn(n, |_| StandardNormal.sample(rng));
    l.dot(&z)
}

/// `count` GP draws at fixed hyperparameters. Unconditioned dataset (k = 0);
/// row `i` is reproducible from `(seed, i)` alone, so sharding cannot change
/// the output.
pub fn sample_gp(spec: &KernelSpec, grid: &Grid, count: usize, seed: u64) -> Result<PriorDataset> {
    if count == 0 {
        return Err(crate::error::CoreError::InvalidParameter(
            "draw count must be >= 1".into(),
        ));
    }
    let l = build_covariance(spec, grid, DEFAULT_JITTER)?.cholesky_lower()?;
    let n = grid.len();
    let rows: Vec<Array1<f64>> = (0..count)
        .into_par_iter()
        .map(|i| draw_with_factor(&l, &mut stream_rng(seed, i as u64)))
        .collect();
    let mut draws = Array2::zeros((count, n));
    for (i, row) in rows.into_iter().enumerate() {
        draws.row_mut(i).assign(&row);
    }
    Ok(PriorDataset::unconditioned(draws))
}

/// `count` GP draws with the lengthscale re-drawn per row from `prior`; the
/// drawn value becomes the row's condition. Each row pays its own
/// factorisation since its covariance differs.
pub fn sample_gp_dataset(
    base: &KernelSpec,
    lengthscale_prior: &HyperPrior,
    grid: &Grid,
    count: usize,
    seed: u64,
) -> Result<PriorDataset> {
    if count == 0 {
        return Err(crate::error::CoreError::InvalidParameter(
            "draw count must be >= 1".into(),
        ));
    }
    lengthscale_prior.validate()?;
    let n = grid.len();
    let rows: Vec<Result<(f64, Array1<f64>)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let ell = lengthscale_prior.sample_one(&mut rng);
            let spec = base.with_lengthscale(ell)?;
            let l = build_covariance(&spec, grid, DEFAULT_JITTER)?.cholesky_lower()?;
            Ok((ell, draw_with_factor(&l, &mut rng)))
        })
        .collect();
    let mut conditions = Array2::zeros((count, 1));
    let mut draws = Array2::zeros((count, n));
    for (i, row) in rows.into_iter().enumerate() {
        let (ell, f) = row?;
        conditions[[i, 0]] = ell;
        draws.row_mut(i).assign(&f);
    }
    PriorDataset::new(conditions, draws)
}
