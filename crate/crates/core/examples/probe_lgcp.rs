//! Scratch probe: jointly trained log-integral reconstruction quality.

use ndarray::Array1;
use priorcvae_core::cvae::{quadrature_log_integral, train, CvaeModel, TrainConfig};
use priorcvae_core::gp::sample_gp_dataset;
use priorcvae_core::grid::Grid;
use priorcvae_core::hyperprior::HyperPrior;
use priorcvae_core::kernel::KernelSpec;
use priorcvae_core::neural::{Activation, MlpParams};

fn main() {
    let t0 = std::time::Instant::now();
    let rows: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(20_000);
    let epochs: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(200);
    let sigma2_int: f64 = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(0.1);
    let lo: f64 = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(0.1);
    let hi: f64 = std::env::args().nth(5).and_then(|v| v.parse().ok()).unwrap_or(0.5);

    let n = 80;
    let grid = Grid::equispaced_1d(n, 0.0, 1.0).unwrap();
    let base = KernelSpec::rbf(0.2, 1.0).unwrap();
    let prior = HyperPrior::Uniform { a: lo, b: hi };
    let ds = sample_gp_dataset(&base, &prior, &grid, rows, 660).unwrap();
    let (train_ds, held) = ds.split_at(rows - 2000).unwrap();

    let (h, d) = (60, 40);
    let mut cvae = CvaeModel::new(
        MlpParams::init(&[n + 1, h, 2 * d], &[Activation::LeakyRelu(0.01), Activation::Identity], 661).unwrap(),
        MlpParams::init(&[d + 1, h, n], &[Activation::LeakyRelu(0.01), Activation::Identity], 662).unwrap(),
        d, 1, 1.0,
    ).unwrap();
    let tc = TrainConfig { epochs, batch_size: 500, learning_rate: 1e-3, seed: 663, sigma2_int: Some(sigma2_int) };
    let hist = train(&mut cvae, &tc, &train_ds, &held).unwrap();
    eprintln!("[{:?}] trained: heldout {} -> {}", t0.elapsed(), hist.initial_heldout(), hist.final_heldout());

    // held-out reconstruction: encode at the posterior mean, decode, compare
    // the quadrature log-integrals
    let mut total = 0.0;
    let m = held.rows();
    for i in 0..m {
        let f = held.draw_row(i);
        let c = held.condition_row(i);
        let (mu, _) = cvae.encode(&f, c.as_slice().unwrap()).unwrap();
        let fhat: Array1<f64> = cvae.decode(&mu, c.as_slice().unwrap()).unwrap();
        let li = quadrature_log_integral(f.view()).unwrap();
        let lihat = quadrature_log_integral(fhat.view()).unwrap();
        total += (li - lihat).abs();
    }
    println!("held-out mean |logI - logIhat| = {:.4} over {m} rows", total / m as f64);
    eprintln!("[{:?}] done", t0.elapsed());
}
