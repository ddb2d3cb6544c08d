//! Scratch probe: spatial pipeline prevalence agreement.

use priorcvae_core::mcmc::HmcConfig;
use priorcvae_core::spatial::{run_spatial_pipeline, SpatialPipelineConfig, SpatialScenario};

fn main() {
    let t0 = std::time::Instant::now();
    let units: usize = std::env::args().nth(1).and_then(|v| v.parse().ok()).unwrap_or(25);
    let epochs: usize = std::env::args().nth(2).and_then(|v| v.parse().ok()).unwrap_or(150);
    let trials: u64 = std::env::args().nth(3).and_then(|v| v.parse().ok()).unwrap_or(500);
    let sseed: u64 = std::env::args().nth(5).and_then(|v| v.parse().ok()).unwrap_or(42);
    let mut scenario = SpatialScenario::synthetic(units, trials, sseed).unwrap();
    scenario.true_sigma = std::env::args().nth(4).and_then(|v| v.parse().ok()).unwrap_or(0.6);
    let config = SpatialPipelineConfig {
        train_rows: 20_000,
        epochs,
        batch_size: 500,
        learning_rate: 1e-3,
        hidden: 60,
        latent_dim: 30,
        sigma2_vae: 1.0,
        hmc: HmcConfig { warmup: 500, samples: 2000, chains: 2, leapfrog: 32, target_accept: 0.8, seed: 5 },
        seed: 6,
    };
    let report = run_spatial_pipeline(&scenario, &config).unwrap();
    println!("pearson r = {:.4}", report.pearson_r);
    println!(
        "gp wall {:.1}s ess/s {:.2} | cvae wall {:.1}s ess/s {:.1} | ratio {:.1}",
        report.gp_wall_secs, report.gp_ess_per_s, report.cvae_wall_secs, report.cvae_ess_per_s,
        report.cvae_ess_per_s / report.gp_ess_per_s
    );
    for (i, (g, c)) in report.gp_prevalence.iter().zip(&report.cvae_prevalence).enumerate() {
        println!("unit {i}: gp {g:.3} cvae {c:.3} obs_frac {:.3}", report.observations[i] as f64 / trials as f64);
    }
    for sm in report.gp_summary.iter().chain(report.cvae_summary.iter()) {
        if !sm.name.starts_with("z_") {
            eprintln!("  {}: mean {:.3} rhat {:.3} ess {:.0}", sm.name, sm.mean, sm.rhat, sm.ess);
        }
    }
    eprintln!("[{:?}] done", t0.elapsed());
}
