//! Scratch probe: lengthscale recovery + efficiency ordering (criteria 2/3).

use ndarray::Array1;
use priorcvae_core::cov::build_covariance;
use priorcvae_core::cvae::{train, CvaeModel, TrainConfig};
use priorcvae_core::gp::{draw_with_factor, sample_gp_dataset};
use priorcvae_core::grid::Grid;
use priorcvae_core::hyperprior::HyperPrior;
use priorcvae_core::kernel::KernelSpec;
use priorcvae_core::mcmc::{
    hmc_sample, summarize, ConditionMap, DecoderGpModel, GaussianObservations, GpRegressionModel,
    HmcConfig, ScalarParam,
};
use priorcvae_core::neural::{Activation, MlpParams};
use priorcvae_core::rng::stream_rng;
use rand_distr::{Distribution, StandardNormal};

fn scalars() -> (ScalarParam, ScalarParam, ScalarParam) {
    (
        ScalarParam::interval("lengthscale", HyperPrior::Uniform { a: 0.01, b: 0.99 }, 0.01, 0.99),
        ScalarParam::positive("amplitude", HyperPrior::HalfNormal { scale: 1.0 }),
        ScalarParam::positive("noise", HyperPrior::HalfNormal { scale: 0.1 }),
    )
}

fn main() {
    let t0 = std::time::Instant::now();
    let n = 80;
    let grid = Grid::equispaced_1d(n, 0.0, 1.0).unwrap();
    let base = KernelSpec::rbf(0.5, 1.0).unwrap();
    let prior = HyperPrior::Uniform { a: 0.01, b: 0.99 };
    let rows = 20_000;
    let ds = sample_gp_dataset(&base, &prior, &grid, rows, 101).unwrap();
    let (train_ds, held) = ds.split_at(rows - 2000).unwrap();
    let (h, d) = (60, 40);
    let mut cvae = CvaeModel::new(
        MlpParams::init(&[n + 1, h, 2 * d], &[Activation::LeakyRelu(0.01), Activation::Identity], 700).unwrap(),
        MlpParams::init(&[d + 1, h, n], &[Activation::LeakyRelu(0.01), Activation::Identity], 701).unwrap(),
        d, 1, 1.0,
    ).unwrap();
    let epochs: usize = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(200);
    let tc = TrainConfig { epochs, batch_size: 500, learning_rate: 1e-3, seed: 702, sigma2_int: None };
    train(&mut cvae, &tc, &train_ds, &held).unwrap();
    eprintln!("[{:?}] decoder trained", t0.elapsed());

    let ell_true = 0.2;
    let truth_spec = KernelSpec::rbf(ell_true, 1.0).unwrap();
    let l_true = build_covariance(&truth_spec, &grid, 1e-6).unwrap().cholesky_lower().unwrap();
    let n_obs: usize = std::env::args().nth(5).and_then(|v| v.parse().ok()).unwrap_or(10);

    let reps: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(3);
    let gp_samples: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(700);
    let gp_warmup: usize = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(300);

    let mut covered = 0;
    let mut close = 0;
    for rep in 0..reps {
        let mut rng = stream_rng(9000 + rep as u64, 0);
        let f_true = draw_with_factor(&l_true, &mut rng);
        let s_z: f64 = StandardNormal.sample(&mut rng);
        let s_true = 0.1 * s_z.abs();
        let idx: Vec<usize> = (0..n_obs).map(|i| 4 + i * (n - 8) / (n_obs - 1)).collect();
        let y: Vec<f64> = idx
            .iter()
            .map(|&i| {
                let e: f64 = StandardNormal.sample(&mut rng);
                f_true[i] + s_true * e
            })
            .collect();
        let obs = GaussianObservations::new(idx.clone(), y.clone()).unwrap();

        let (ell, amp, noise) = scalars();
        let cvae_model = DecoderGpModel::new(cvae.clone(), obs.clone(), ConditionMap::Scalar(ell), amp, noise).unwrap();
        let cfg = HmcConfig { warmup: 500, samples: 2000, chains: 2, leapfrog: 32, target_accept: 0.8, seed: 40 + rep as u64 };
        let run_cvae = hmc_sample(&cvae_model, &cfg).unwrap();
        let sum_cvae = summarize(&run_cvae).unwrap();
        let li = run_cvae.param_index("lengthscale").unwrap();
        let sc = &sum_cvae[li];
        let in_ci = sc.q05 <= ell_true && ell_true <= sc.q95;

        let (ell, amp, noise) = scalars();
        let gp_model = GpRegressionModel::new(grid.clone(), KernelSpec::rbf(0.5, 1.0).unwrap(), obs, ell, amp, noise).unwrap();
        let gp_cfg = HmcConfig { warmup: gp_warmup, samples: gp_samples, chains: 1, leapfrog: 32, target_accept: 0.8, seed: 80 + rep as u64 };
        let tg = std::time::Instant::now();
        let run_gp = hmc_sample(&gp_model, &gp_cfg).unwrap();
        let gp_wall = tg.elapsed().as_secs_f64();
        let sum_gp = summarize(&run_gp).unwrap();
        let gi = run_gp.param_index("lengthscale").unwrap();
        let sg = &sum_gp[gi];

        let diff = (sc.mean - sg.mean).abs();
        covered += in_ci as usize;
        close += (diff < 0.15) as usize;
        println!(
            "rep {rep}: s_true={s_true:.2} cvae ell mean={:.3} ci=[{:.3},{:.3}] rhat={:.3} | gp mean={:.3} rhat={:.3} wall={gp_wall:.1}s | diff={diff:.3} covered={in_ci}",
            sc.mean, sc.q05, sc.q95, sc.rhat, sg.mean, sg.rhat
        );
        println!(
            "   ess/s: cvae ell={:.1} (wall {:.2}s) gp ell={:.3} (wall {:.2}s) ratio={:.0}",
            sc.ess_per_s, run_cvae.wall_secs, sg.ess_per_s, run_gp.wall_secs,
            sc.ess_per_s / sg.ess_per_s
        );
    }
    println!("covered {covered}/{reps}, close {close}/{reps}");
    eprintln!("[{:?}] done", t0.elapsed());
}
