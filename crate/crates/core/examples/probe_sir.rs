//! Scratch probe: SIR encode + NegBin inference on the boarding-school data.

use priorcvae_core::cvae::{train, CvaeModel, TrainConfig};
use priorcvae_core::dynamics::{
    sample_sir_dataset, sir_solve, SirParams, BOARDING_SCHOOL_I0, BOARDING_SCHOOL_N,
    BOARDING_SCHOOL_SERIES,
};
use priorcvae_core::hyperprior::HyperPrior;
use priorcvae_core::mcmc::{hmc_sample, summarize, HmcConfig, ScalarParam, SirCvaeModel};
use priorcvae_core::neural::{Activation, MlpParams};
use priorcvae_core::rng::stream_rng;
use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

fn main() {
    let t0 = std::time::Instant::now();
    let template = SirParams {
        beta: 0.0,
        gamma: 0.0,
        n_pop: BOARDING_SCHOOL_N,
        i0: BOARDING_SCHOOL_I0,
        days: 13,
    };
    let rows: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(20_000);
    let epochs: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(300);
    let hidden: usize = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(10);
    let sigma2: f64 = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(1.0);
    let beta_prior = HyperPrior::Uniform { a: 0.0, b: 4.0 };
    let gamma_prior = HyperPrior::Uniform { a: 0.0, b: 1.5 };
    let ds = sample_sir_dataset(&beta_prior, &gamma_prior, &template, rows, 900).unwrap();
    let (train_ds, held) = ds.split_at(rows - rows / 10).unwrap();
    eprintln!("[{:?}] dataset ready", t0.elapsed());

    let n = 14;
    let d = 6;
    let mut cvae = CvaeModel::new(
        MlpParams::init(&[n + 2, hidden, 2 * d], &[Activation::LeakyRelu(0.01), Activation::Identity], 901).unwrap(),
        MlpParams::init(&[d + 2, hidden, n], &[Activation::LeakyRelu(0.01), Activation::Sigmoid], 902).unwrap(),
        d, 2, sigma2,
    ).unwrap();
    let tc = TrainConfig { epochs, batch_size: 500, learning_rate: 1e-3, seed: 903, sigma2_int: None };
    let hist = train(&mut cvae, &tc, &train_ds, &held).unwrap();
    eprintln!("[{:?}] trained: heldout {} -> {}", t0.elapsed(), hist.initial_heldout(), hist.final_heldout());

    // sanity: decoder curve at known-good params vs the ODE solution
    let ode = sir_solve(&SirParams { beta: 1.7, gamma: 0.5, ..template }).unwrap();
    let dec = cvae.decode(&ndarray::Array1::zeros(d), &[1.7, 0.5]).unwrap();
    let max_gap = ode
        .iter()
        .zip(dec.iter())
        .map(|(a, b)| (a - b).abs() * BOARDING_SCHOOL_N)
        .fold(0.0_f64, f64::max);
    eprintln!("decoder vs ODE at (1.7,0.5): max gap {max_gap:.1} infected");

    let model = SirCvaeModel::new(
        cvae,
        BOARDING_SCHOOL_SERIES.to_vec(),
        BOARDING_SCHOOL_N,
        ScalarParam::positive("beta", HyperPrior::TruncNormalPos { loc: 2.0, scale: 1.0 }),
        ScalarParam::positive("gamma", HyperPrior::TruncNormalPos { loc: 0.4, scale: 0.5 }),
        ScalarParam::positive("phi_inv", HyperPrior::Exponential { rate: 5.0 }),
    )
    .unwrap();
    let cfg = HmcConfig { warmup: 500, samples: 2000, chains: 2, leapfrog: 32, target_accept: 0.8, seed: 905 };
    let run = hmc_sample(&model, &cfg).unwrap();
    let summary = summarize(&run).unwrap();
    for s in &summary {
        if !s.name.starts_with("z_") {
            eprintln!("  {}: mean {:.3} ci [{:.3},{:.3}] rhat {:.3} ess {:.0}", s.name, s.mean, s.q05, s.q95, s.rhat, s.ess);
        }
    }

    // posterior predictive envelope: 2.5%..97.5% per day over NegBin draws
    let mut rng = stream_rng(906, 0);
    let mut per_day: Vec<Vec<f64>> = vec![Vec::new(); 14];
    for chain in &run.chains {
        for r in (0..chain.draws.nrows()).step_by(4) {
            let draw = chain.draws.row(r).to_owned();
            let mu = model.expected_counts(&draw).unwrap();
            let phi_inv = draw[draw.len() - 1];
            let phi = 1.0 / phi_inv;
            for day in 0..14 {
                let shape = phi;
                let scale = mu[day] / phi;
                let lambda = Gamma::new(shape, scale).unwrap().sample(&mut rng);
                let y = if lambda > 0.0 {
                    Poisson::new(lambda).map(|p| p.sample(&mut rng)).unwrap_or(0.0)
                } else {
                    0.0
                };
                per_day[day].push(y);
            }
        }
    }
    let mut covered = 0;
    for (day, obs) in BOARDING_SCHOOL_SERIES {
        let v = &mut per_day[day as usize];
        v.sort_unstable_by(|a, b| a.total_cmp(b));
        let lo = v[(0.025 * v.len() as f64) as usize];
        let hi = v[((0.975 * v.len() as f64) as usize).min(v.len() - 1)];
        let ok = (lo..=hi).contains(&(obs as f64));
        covered += ok as usize;
        println!("day {day}: obs {obs} envelope [{lo:.0},{hi:.0}] covered={ok}");
    }
    println!("covered {covered}/14");
    let _ = rng.random::<f64>();
    eprintln!("[{:?}] done", t0.elapsed());
}
