//! Convergence diagnostics: autocorrelation ESS and split R-hat.

use crate::error::CoreError;
use crate::Result;

/// Effective sample size with a degeneracy marker for constant chains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ess {
    pub value: f64,
    pub degenerate: bool,
}

fn chain_mean(c: &[f64]) -> f64 {
    c.iter().sum::<f64>() / c.len() as f64
}

/// Geyer initial-positive-sequence ESS for one chain.
fn ess_single(chain: &[f64]) -> Ess {
    let n = chain.len();
    let mean = chain_mean(chain);
    let centered: Vec<f64> = chain.iter().map(|v| v - mean).collect();
    let gamma0: f64 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if gamma0 <= 0.0 || !gamma0.is_finite() {
        return Ess {
            value: 0.0,
            degenerate: true,
        };
    }
    let autocov = |lag: usize| -> f64 {
        let mut s = 0.0;
        for t in 0..(n - lag) {
            s += centered[t] * centered[t + lag];
        }
        s / n as f64
    };
    // pairwise sums of autocorrelations until the first negative pair
    let mut tau_sum = 0.0;
    let mut lag = 1;
    while lag + 1 < n {
        let pair = (autocov(lag) + autocov(lag + 1)) / gamma0;
        if pair < 0.0 {
            break;
        }
        tau_sum += pair;
        lag += 2;
    }
    let ess = n as f64 / (1.0 + 2.0 * tau_sum);
    Ess {
        value: ess.min(n as f64 * 1.5),
        degenerate: false,
    }
}

/// ESS of a parameter observed over one or more chains: per-chain Geyer
/// estimates, summed. Chains shorter than 10 draws are rejected; a constant
/// chain reports 0 with the degeneracy flag set.
pub fn ess(chains: &[Vec<f64>]) -> Result<Ess> {
    if chains.is_empty() {
        return Err(CoreError::InsufficientData("ess needs >= 1 chain".into()));
    }
    if chains.iter().any(|c| c.len() < 10) {
        return Err(CoreError::InsufficientData(
            "ess needs chains of length >= 10".into(),
        ));
    }
    let mut total = 0.0;
    let mut any_degenerate = false;
    for c in chains {
        let e = ess_single(c);
        any_degenerate |= e.degenerate;
        total += e.value;
    }
    Ok(Ess {
        value: if any_degenerate { 0.0 } else { total },
        degenerate: any_degenerate,
    })
}

/// Split R-hat: every chain contributes its two halves, then the usual
/// between/within ratio `sqrt((N−1)/N + B/(N·W))`.
pub fn r_hat(chains: &[Vec<f64>]) -> Result<f64> {
    let mut split: Vec<&[f64]> = Vec::with_capacity(chains.len() * 2);
    for c in chains {
        if c.len() < 4 {
            return Err(CoreError::InsufficientData(
                "r-hat needs chains of length >= 4".into(),
            ));
        }
        let mid = c.len() / 2;
        // drop the middle element of odd chains so halves match
        split.push(&c[..mid]);
        split.push(&c[c.len() - mid..]);
    }
    let m = split.len() as f64;
    let n = split.iter().map(|c| c.len()).min().unwrap() as f64;
    let means: Vec<f64> = split.iter().map(|c| chain_mean(c)).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = n / (m - 1.0) * means.iter().map(|&mu| (mu - grand).powi(2)).sum::<f64>();
    let w = split
        .iter()
        .zip(&means)
        .map(|(c, &mu)| c.iter().map(|&x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0))
        .sum::<f64>()
        / m;
    if w <= 0.0 {
        // all halves constant: identical chains give a clean 1, else diverged
        return Ok(if b <= 0.0 { 1.0 } else { f64::INFINITY });
    }
    Ok(((n - 1.0) / n + b / (n * w)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn iid_chain(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 0);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    fn ar1_chain(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let mut rng = stream_rng(seed, 1);
        let mut x = 0.0;
        let innov = (1.0 - rho * rho).sqrt();
        (0..n)
            .map(|_| {
                let e: f64 = StandardNormal.sample(&mut rng);
                x = rho * x + innov * e;
                x
            })
            .collect()
    }

    #[test]
    fn iid_ess_is_close_to_n() {
        let e = ess(&[iid_chain(10_000, 3)]).unwrap();
        let ratio = e.value / 10_000.0;
        assert!(
            (0.8..1.2).contains(&ratio),
            "iid ESS/N = {ratio}, ess = {}",
            e.value
        );
    }

    #[test]
    fn ar1_ess_matches_analytic_third() {
        let n = 100_000;
        let e = ess(&[ar1_chain(n, 0.5, 4)]).unwrap();
        let expected = n as f64 / 3.0;
        assert!(
            (e.value - expected).abs() / expected < 0.1,
            "AR(1) ESS {} vs N/3 = {expected}",
            e.value
        );
    }

    #[test]
    fn constant_chain_reports_degenerate_zero() {
        let e = ess(&[vec![3.0; 100]]).unwrap();
        assert_eq!(e.value, 0.0);
        assert!(e.degenerate);
    }

    #[test]
    fn short_chains_are_errors() {
        assert!(ess(&[vec![1.0; 5]]).is_err());
        assert!(ess(&[]).is_err());
        assert!(r_hat(&[vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn rhat_near_one_for_identical_streams() {
        let chains: Vec<Vec<f64>> = (0..3).map(|s| iid_chain(5000, 10 + s)).collect();
        let r = r_hat(&chains).unwrap();
        assert!(r < 1.01, "R-hat {r}");
    }

    #[test]
    fn rhat_detects_separated_chains() {
        let a = iid_chain(1000, 20);
        let b: Vec<f64> = iid_chain(1000, 21).iter().map(|v| v + 10.0).collect();
        let r = r_hat(&[a, b]).unwrap();
        assert!(r > 1.5, "R-hat {r}");
    }

    #[test]
    fn rhat_on_split_halves_of_one_stationary_chain() {
        let c = iid_chain(20_000, 30);
        let r = r_hat(&[c]).unwrap();
        assert!((r - 1.0).abs() < 0.02, "R-hat {r}");
    }
}
