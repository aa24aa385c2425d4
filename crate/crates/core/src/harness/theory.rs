//! Closed-form references for the single-chain degradation studies.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::env::EnvConfig;

/// Expected per-step loss of greedy selection with one noisy pass, when the
/// runner-up may be out of distribution and in-distribution scores are exact.
///
/// The runner-up gap is the minimum of `M - 1` uniform gaps; an uncertain
/// runner-up overtakes the best candidate when its noise exceeds the gap.
pub fn greedy_step_loss(cfg: &EnvConfig) -> f64 {
    if cfg.m < 2 || cfg.epsilon == 0.0 {
        return 0.0;
    }
    let (a, b) = (cfg.delta_min, cfg.delta_max);
    let others = (cfg.m - 1) as i32;
    let overtake = |g: f64| -> f64 {
        if cfg.sigma_ood == 0.0 {
            f64::from(u8::from(g < 0.0))
        } else {
            let n = Normal::new(0.0, cfg.sigma_ood).expect("positive sigma");
            1.0 - n.cdf(g)
        }
    };
    if b == a {
        return cfg.epsilon * a * overtake(a);
    }
    // Density of the minimum of `others` uniforms on [a, b].
    let density = |g: f64| f64::from(others) * ((b - g) / (b - a)).powi(others - 1) / (b - a);
    let f = |g: f64| g * overtake(g) * density(g);
    cfg.epsilon * simpson(f, a, b, 4096)
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// `2 eps sum_{t=2..T} sqrt(2 ln t / K_t)` with `K_t = k0 * t`.
pub fn ucb_degradation_bound(epsilon: f64, horizon: usize, k0: usize) -> f64 {
    2.0 * epsilon
        * (2..=horizon)
            .map(|t| (2.0 * (t as f64).ln() / (k0 * t) as f64).sqrt())
            .sum::<f64>()
}

/// Coefficient of determination of the least-squares line through `(x, y)`.
pub fn linear_r2(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 || syy == 0.0 {
        return if syy == 0.0 { 1.0 } else { 0.0 };
    }
    sxy * sxy / (sxx * syy)
}

/// `D(2T) / D(T)` for every grid point whose double is also on the grid.
pub fn doubling_ratios(t: &[usize], d: &[f64]) -> Vec<(usize, f64)> {
    t.iter()
        .zip(d)
        .filter_map(|(&ti, &di)| {
            let j = t.iter().position(|&u| u == 2 * ti)?;
            Some((ti, d[j] / di))
        })
        .collect()
}

/// Per-horizon comparison of both selection scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryPoint {
    pub horizon: usize,
    pub greedy: f64,
    pub greedy_se: f64,
    pub greedy_predicted: f64,
    pub ucb: f64,
    pub ucb_se: f64,
    pub ucb_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheorySummary {
    pub points: Vec<TheoryPoint>,
    pub greedy_r2: f64,
    pub greedy_ratios: Vec<(usize, f64)>,
    pub ucb_ratios: Vec<(usize, f64)>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let v = simpson(|x| x * x * x - x, 0.0, 2.0, 8);
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn step_loss_limits() {
        let cfg = EnvConfig::theory_default();
        assert_eq!(greedy_step_loss(&EnvConfig { epsilon: 0.0, ..cfg.clone() }), 0.0);
        // Huge noise: the runner-up wins half the time, loss eps * E[min gap] / 2.
        let loud = EnvConfig { sigma_ood: 1e9, ..cfg.clone() };
        let expected = 0.2 * (0.02 + 0.08 / 4.0) / 2.0;
        assert!((greedy_step_loss(&loud) - expected).abs() < 1e-9);
        let loss = greedy_step_loss(&cfg);
        assert!(loss > 0.0 && loss < expected);
    }

    #[test]
    fn bound_and_fit_helpers() {
        assert_eq!(ucb_degradation_bound(0.2, 1, 4), 0.0);
        let b2 = 0.4 * (2.0 * 2f64.ln() / 8.0).sqrt();
        assert!((ucb_degradation_bound(0.2, 2, 4) - b2).abs() < 1e-15);
        assert!((linear_r2(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        assert_eq!(doubling_ratios(&[5, 10, 20], &[1.0, 2.0, 3.0]), vec![(5, 2.0), (10, 1.5)]);
    }
}
