//! Scratch probe: Beta-relaxed binary-condition recovery.

use priorcvae_core::cov::build_covariance;
use priorcvae_core::cvae::{train, CvaeModel, TrainConfig};
use priorcvae_core::gp::{draw_with_factor, sample_gp_dataset};
use priorcvae_core::grid::Grid;
use priorcvae_core::hyperprior::HyperPrior;
use priorcvae_core::kernel::KernelSpec;
use priorcvae_core::mcmc::{
    hmc_sample, summarize, DecoderGpModel, GaussianObservations, HmcConfig, ScalarParam,
};
use priorcvae_core::neural::{Activation, MlpParams};
use priorcvae_core::rng::stream_rng;
use rand_distr::{Distribution, StandardNormal};

fn main() {
    let t0 = std::time::Instant::now();
    let rows: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(20_000);
    let epochs: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(250);
    let sigma2: f64 = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(0.9);

    let n = 100;
    let grid = Grid::equispaced_1d(n, 0.0, 1.0).unwrap();
    let mixture = HyperPrior::BernoulliMixture { l1: 0.1, l2: 0.4, p: 0.5 };
    let base = KernelSpec::rbf(0.2, 1.0).unwrap();
    let ds = sample_gp_dataset(&base, &mixture, &grid, rows, 770).unwrap();
    let (train_ds, held) = ds.split_at(rows - 2000).unwrap();

    let (h, d) = (70, 50);
    let mut cvae = CvaeModel::new(
        MlpParams::init(&[n + 1, h, 2 * d], &[Activation::LeakyRelu(0.01), Activation::Identity], 771).unwrap(),
        MlpParams::init(&[d + 1, h, n], &[Activation::LeakyRelu(0.01), Activation::Identity], 772).unwrap(),
        d, 1, sigma2,
    ).unwrap();
    let tc = TrainConfig { epochs, batch_size: 500, learning_rate: 1e-3, seed: 773, sigma2_int: None };
    let hist = train(&mut cvae, &tc, &train_ds, &held).unwrap();
    eprintln!("[{:?}] trained: heldout {} -> {}", t0.elapsed(), hist.initial_heldout(), hist.final_heldout());

    // ground truth generated at c = 1 (lengthscale l2 = 0.4), seven noisy obs
    let truth = KernelSpec::rbf(0.4, 1.0).unwrap();
    let l = build_covariance(&truth, &grid, 1e-6).unwrap().cholesky_lower().unwrap();
    let dseed: u64 = std::env::args().nth(5).and_then(|v| v.parse().ok()).unwrap_or(775);
    let mut rng = stream_rng(dseed, 0);
    let f_true = draw_with_factor(&l, &mut rng);
    let n_obs: usize = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(7);
    let idx: Vec<usize> = (0..n_obs).map(|i| 4 + i * (n - 8) / (n_obs - 1)).collect();
    let y: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let e: f64 = StandardNormal.sample(&mut rng);
            f_true[i] + 0.1 * e
        })
        .collect();

    let model = DecoderGpModel::with_relaxed_binary(
        cvae,
        GaussianObservations::new(idx, y).unwrap(),
        &mixture,
        ScalarParam::positive("amplitude", HyperPrior::HalfNormal { scale: 1.0 }),
        ScalarParam::positive("noise", HyperPrior::HalfNormal { scale: 0.1 }),
    )
    .unwrap();
    let cfg = HmcConfig { warmup: 500, samples: 2000, chains: 2, leapfrog: 32, target_accept: 0.8, seed: 776 };
    let run = hmc_sample(&model, &cfg).unwrap();
    let summary = summarize(&run).unwrap();
    for s in &summary {
        if !s.name.starts_with("z_") {
            eprintln!("  {}: mean {:.3} ci [{:.3},{:.3}] rhat {:.3}", s.name, s.mean, s.q05, s.q95, s.rhat);
        }
    }
    let ci = run.param_index("c").unwrap();
    let pooled = run.pooled(ci);
    let above = pooled.iter().filter(|&&v| v > 0.5).count() as f64 / pooled.len() as f64;
    println!("fraction of c draws above 0.5: {above:.3}");
    eprintln!("[{:?}] done", t0.elapsed());
}
