//! Scratch probe: criterion-1 style conditioning-fidelity ordering.

use ndarray::Array2;
use priorcvae_core::cov::{build_covariance, empirical_covariance, frobenius_distance};
use priorcvae_core::cvae::{train, CvaeModel, TrainConfig};
use priorcvae_core::gp::sample_gp_dataset;
use priorcvae_core::grid::Grid;
use priorcvae_core::hyperprior::HyperPrior;
use priorcvae_core::kernel::KernelSpec;
use priorcvae_core::neural::{Activation, MlpParams};

fn main() {
    let t0 = std::time::Instant::now();
    let n = 80;
    let grid = Grid::equispaced_1d(n, 0.0, 1.0).unwrap();
    let base = KernelSpec::matern52(0.5, 1.0).unwrap();
    let prior = HyperPrior::Uniform { a: 0.01, b: 0.99 };
    let rows = 20_000;
    let dseed: u64 = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(11);
    let ds = sample_gp_dataset(&base, &prior, &grid, rows, dseed).unwrap();
    let (train_ds, held) = ds.split_at(rows - 2000).unwrap();
    eprintln!("[{:?}] dataset ready", t0.elapsed());

    let (h, d) = (60, 40);
    let epochs: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(200);
    let sigma2: f64 = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(1.0);

    // conditional model
    let mut cvae = CvaeModel::new(
        MlpParams::init(&[n + 1, h, 2 * d], &[Activation::LeakyRelu(0.01), Activation::Identity], dseed * 7 + 1).unwrap(),
        MlpParams::init(&[d + 1, h, n], &[Activation::LeakyRelu(0.01), Activation::Identity], dseed * 7 + 2).unwrap(),
        d, 1, sigma2,
    ).unwrap();
    let batch: usize = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(2000);
    let tc = TrainConfig { epochs, batch_size: batch, learning_rate: 1e-3, seed: 3, sigma2_int: None };
    let hist = train(&mut cvae, &tc, &train_ds, &held).unwrap();
    eprintln!("[{:?}] cvae trained: heldout {} -> {}", t0.elapsed(), hist.initial_heldout(), hist.final_heldout());

    // unconditioned baseline
    let u_train = train_ds.strip_conditions();
    let u_held = held.strip_conditions();
    let mut vae = CvaeModel::new(
        MlpParams::init(&[n, h, 2 * d], &[Activation::LeakyRelu(0.01), Activation::Identity], dseed * 7 + 1).unwrap(),
        MlpParams::init(&[d, h, n], &[Activation::LeakyRelu(0.01), Activation::Identity], dseed * 7 + 2).unwrap(),
        d, 0, sigma2,
    ).unwrap();
    let hist = train(&mut vae, &tc, &u_train, &u_held).unwrap();
    eprintln!("[{:?}] vae trained: heldout {} -> {}", t0.elapsed(), hist.initial_heldout(), hist.final_heldout());

    let count = 10_000;
    let vae_draws = vae.decoded_draws(&[], count, 77).unwrap();
    let vae_cov = empirical_covariance(&vae_draws).unwrap();
    for ell in [0.05, 0.1, 0.3, 0.9] {
        let spec = base.with_lengthscale(ell).unwrap();
        let analytic = build_covariance(&spec, &grid, 0.0).unwrap().entries;
        let cvae_draws: Array2<f64> = cvae.decoded_draws(&[ell], count, 77).unwrap();
        let c_cov = empirical_covariance(&cvae_draws).unwrap();
        let f_cvae = frobenius_distance(&c_cov, &analytic).unwrap();
        let f_vae = frobenius_distance(&vae_cov, &analytic).unwrap();
        let var_c = (0..80).map(|i| c_cov[[i, i]]).sum::<f64>() / 80.0;
        println!("ell={ell}: F_cvae={f_cvae:.2} F_vae={f_vae:.2} mean_var_cvae={var_c:.3} ordering_ok={}", f_cvae < f_vae);
    }
    eprintln!("[{:?}] done", t0.elapsed());
}
