//! Scratch probe: double-well trajectory encoding and decoded bimodality.

use priorcvae_core::cvae::{train, CvaeModel, TrainConfig};
use priorcvae_core::dynamics::{euler_maruyama_dw_mixture, DoubleWellParams};
use priorcvae_core::neural::{Activation, MlpParams};

fn mass_split(values: &[f64], theta2: f64) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let well = theta2.sqrt();
    let neg = values.iter().filter(|&&v| v < -0.3 * well).count() as f64 / n;
    let pos = values.iter().filter(|&&v| v > 0.3 * well).count() as f64 / n;
    let mean_neg = {
        let vals: Vec<f64> = values.iter().copied().filter(|&v| v < -0.3 * well).collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    };
    let mean_pos = {
        let vals: Vec<f64> = values.iter().copied().filter(|&v| v > 0.3 * well).collect();
        vals.iter().sum::<f64>() / vals.len().max(1) as f64
    };
    (neg, pos, mean_neg, mean_pos)
}

fn main() {
    let t0 = std::time::Instant::now();
    let rows: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(8000);
    let epochs: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(120);
    let h1: usize = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(200);
    let h2: usize = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(100);
    let d: usize = std::env::args().nth(5).and_then(|v| v.parse().ok()).unwrap_or(30);
    let sigma2: f64 = std::env::args().nth(6).and_then(|v| v.parse().ok()).unwrap_or(1.0);

    let settings = [
        DoubleWellParams { theta1: 2.0, theta2: 3.0, ..DoubleWellParams::default() },
        DoubleWellParams { theta1: 4.0, theta2: 1.0, ..DoubleWellParams::default() },
    ];
    let ds = euler_maruyama_dw_mixture(&settings, rows, 880).unwrap();
    let (train_ds, held) = ds.split_at(rows - rows / 10).unwrap();
    eprintln!("[{:?}] dataset ready ({} cols)", t0.elapsed(), ds.n());

    let n = ds.n();
    let k = 2;
    let mut cvae = CvaeModel::new(
        MlpParams::init(
            &[n + k, h1, h2, 2 * d],
            &[Activation::Sigmoid, Activation::Sigmoid, Activation::Identity],
            881,
        )
        .unwrap(),
        MlpParams::init(
            &[d + k, h2, h1, n],
            &[Activation::Sigmoid, Activation::Sigmoid, Activation::Identity],
            882,
        )
        .unwrap(),
        d,
        k,
        sigma2,
    )
    .unwrap();
    let tc = TrainConfig { epochs, batch_size: 500, learning_rate: 1e-3, seed: 883, sigma2_int: None };
    let hist = train(&mut cvae, &tc, &train_ds, &held).unwrap();
    eprintln!(
        "[{:?}] trained: heldout {} -> {}",
        t0.elapsed(),
        hist.initial_heldout(),
        hist.final_heldout()
    );

    for (t1, t2) in [(2.0, 3.0), (4.0, 1.0)] {
        let draws = cvae.decoded_draws(&[t1, t2], 2000, 884).unwrap();
        let start = draws.ncols() / 4;
        let values: Vec<f64> = (0..draws.nrows())
            .flat_map(|i| draws.row(i).iter().skip(start).copied().collect::<Vec<_>>())
            .collect();
        let (neg, pos, mneg, mpos) = mass_split(&values, t2);
        println!(
            "decoded ({t1},{t2}): neg mass {neg:.2} (mean {mneg:.2}), pos mass {pos:.2} (mean {mpos:.2}) wells at ±{:.2}",
            t2.sqrt()
        );
    }
    eprintln!("[{:?}] done", t0.elapsed());
}
