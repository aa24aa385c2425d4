#![allow(dead_code)]

use statrs::distribution::{ContinuousCDF, Normal};
use uats::rng::SplitMix64;

/// Kolmogorov-Smirnov distance between a sample and a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical(n: usize) -> f64 {
    1.628 / (n as f64).sqrt()
}

pub fn std_normal_cdf(x: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Three binomial standard errors around `p` for `n` trials.
pub fn binomial_band(p: f64, n: usize) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Hamilton apportionment by repeated selection of the largest remaining
/// fractional quota (ties: larger value, then smaller index).
pub fn hamilton_oracle(values: &[f64], budget: usize, temperature: f64) -> Vec<usize> {
    let logits: Vec<f64> = values.iter().map(|v| v / temperature).collect();
    let top = logits.iter().cloned().fold(f64::MIN, f64::max);
    let norm: f64 = logits.iter().map(|l| (l - top).exp()).sum();
    let quotas: Vec<f64> = logits.iter().map(|l| budget as f64 * (l - top).exp() / norm).collect();
    let mut seats: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut taken = vec![false; values.len()];
    let mut left = budget as i64 - seats.iter().sum::<usize>() as i64;
    while left > 0 {
        let mut pick: Option<usize> = None;
        for i in 0..values.len() {
            if taken[i] {
                continue;
            }
            let better = match pick {
                None => true,
                Some(j) => {
                    let (ri, rj) = (quotas[i] - quotas[i].floor(), quotas[j] - quotas[j].floor());
                    ri > rj || (ri == rj && values[i] > values[j])
                }
            };
            if better {
                pick = Some(i);
            }
        }
        let i = pick.expect("more leftover units than candidates");
        taken[i] = true;
        seats[i] += 1;
        left -= 1;
    }
    seats
}

/// A random allocation problem: values, budget and temperature.
pub fn allocation_case(rng: &mut SplitMix64) -> (Vec<f64>, usize, f64) {
    let n = 1 + rng.index(12);
    let coarse = rng.bernoulli(0.3);
    let values = (0..n)
        .map(|_| {
            if coarse {
                (rng.index(5) as f64) / 10.0
            } else {
                rng.uniform()
            }
        })
        .collect();
    let budget = match rng.index(3) {
        0 => rng.index(20),
        1 => rng.index(500),
        _ => rng.index(10_001),
    };
    let temperature = rng.uniform_in(0.05, 2.0);
    (values, budget, temperature)
}
