//! Candidate partitioning and selection rules.

use std::sync::Once;

use crate::env::Node;
use crate::error::{argument, Result};
use crate::scorer::ScoreStats;

use super::params::FinalRule;

/// Splits candidates by sample variance: `variance <= tau` is trusted.
/// Returns index lists in input order.
pub fn partition_by_uncertainty(stats: &[ScoreStats], tau: f64) -> (Vec<usize>, Vec<usize>) {
    (0..stats.len()).partition(|&i| stats[i].variance <= tau)
}

/// Highest mean among the trusted candidates.
pub fn best_mean(stats: &[ScoreStats], indices: &[usize]) -> Option<f64> {
    indices.iter().map(|&i| stats[i].mean).reduce(f64::max)
}

/// Keeps uncertain candidates whose optimistic value reaches
/// `best_id_mean - delta`. Without a trusted anchor every candidate is kept.
pub fn filter_ood_by_margin(stats: &[ScoreStats], ood: &[usize], best_id_mean: Option<f64>, delta: f64) -> Vec<usize> {
    match best_id_mean {
        None => ood.to_vec(),
        Some(best) => ood.iter().copied().filter(|&i| stats[i].ucb >= best - delta).collect(),
    }
}

fn argmax_by(stats: &[ScoreStats], key: impl Fn(&ScoreStats) -> f64) -> Result<usize> {
    if stats.is_empty() {
        return Err(argument("selection over an empty candidate set"));
    }
    let mut best = 0;
    for i in 1..stats.len() {
        if key(&stats[i]) > key(&stats[best]) {
            best = i;
        }
    }
    Ok(best)
}

/// Argmax of the posterior mean, lowest index on ties.
pub fn select_point_estimate(stats: &[ScoreStats]) -> Result<usize> {
    argmax_by(stats, |s| s.mean)
}

/// Argmax of the optimistic value, lowest index on ties.
pub fn select_ucb(stats: &[ScoreStats]) -> Result<usize> {
    argmax_by(stats, |s| s.ucb)
}

static VOTE_NOTICE: Once = Once::new();

/// Picks the answer trace among finished leaves.
pub fn finalize(leaves: &[(Node, ScoreStats)], rule: FinalRule) -> Result<usize> {
    if leaves.is_empty() {
        return Err(argument("finalize requires at least one leaf"));
    }
    if rule == FinalRule::WeightedVote {
        VOTE_NOTICE.call_once(|| {
            eprintln!("note: weighted-vote needs answer classes; using max-mean");
        });
    }
    let mut best = 0;
    for (i, (_, s)) in leaves.iter().enumerate().skip(1) {
        if s.mean > leaves[best].1.mean {
            best = i;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{init_episode, EnvConfig};
    use crate::scorer::ucb_bonus;

    fn st(mean: f64, variance: f64, count: usize, step: usize, alpha: f64) -> ScoreStats {
        ScoreStats {
            node_id: 0,
            mean,
            variance,
            count,
            step,
            ucb: mean + ucb_bonus(alpha, step, count),
            alpha,
            single_sample: count == 1,
        }
    }

    fn means(ms: &[f64]) -> Vec<ScoreStats> {
        ms.iter().map(|&m| st(m, 0.0, 1, 1, 1.0)).collect()
    }

    #[test]
    fn partition_uses_inclusive_variance_threshold() {
        let stats = vec![st(0.7, 0.001, 7, 2, 0.3), st(0.8, 0.032, 7, 2, 0.3), st(0.6, 0.003, 7, 2, 0.3)];
        let (id, ood) = partition_by_uncertainty(&stats, 0.003);
        assert_eq!(id, vec![0, 2]);
        assert_eq!(ood, vec![1]);

        let (_, ood) = partition_by_uncertainty(&means(&[0.1, 0.2]), 0.003);
        assert!(ood.is_empty());
    }

    #[test]
    fn margin_filter() {
        let mut a = st(0.5, 0.03, 7, 2, 0.3);
        a.ucb = 0.80;
        let mut b = a;
        b.ucb = 0.70;
        let stats = vec![a, b];
        assert_eq!(filter_ood_by_margin(&stats, &[0, 1], Some(0.82), 0.04), vec![0]);
        assert_eq!(filter_ood_by_margin(&stats, &[0, 1], None, 0.04), vec![0, 1]);
    }

    #[test]
    fn point_estimate_argmax_and_ties() {
        assert_eq!(select_point_estimate(&means(&[0.5, 0.9, 0.7])).unwrap(), 1);
        assert_eq!(select_point_estimate(&means(&[0.9, 0.9])).unwrap(), 0);
        assert!(select_point_estimate(&[]).is_err());
    }

    #[test]
    fn ucb_prefers_fewer_samples_at_equal_means() {
        let stats = vec![st(0.5, 0.0, 1, 10, 1.0), st(0.5, 0.0, 100, 10, 1.0)];
        assert_eq!(select_ucb(&stats).unwrap(), 0);
    }

    #[test]
    fn ucb_at_step_one_is_point_estimate() {
        let stats = vec![st(0.3, 0.0, 1, 1, 1.0), st(0.6, 0.0, 50, 1, 1.0), st(0.5, 0.0, 2, 1, 1.0)];
        assert_eq!(select_ucb(&stats).unwrap(), select_point_estimate(&stats).unwrap());
    }

    #[test]
    fn ucb_overtakes_higher_mean() {
        // 0.80 + sqrt(2 ln 8 / 50) = 1.0884; 0.78 + sqrt(2 ln 8 / 2) = 2.2220.
        let stats = vec![st(0.80, 0.0, 50, 8, 1.0), st(0.78, 0.0, 2, 8, 1.0)];
        assert!((stats[0].ucb - 1.088_405_377_320_18).abs() < 1e-12);
        assert!((stats[1].ucb - 2.222_026_886_600_88).abs() < 1e-12);
        assert_eq!(select_ucb(&stats).unwrap(), 1);
    }

    #[test]
    fn finalize_rules() {
        let (_, root) = init_episode(&EnvConfig::theory_default(), 0).unwrap();
        let one = vec![(root, st(0.2, 0.0, 1, 1, 1.0))];
        assert_eq!(finalize(&one, FinalRule::MaxMean).unwrap(), 0);
        let two = vec![(root, st(0.3, 0.0, 1, 1, 1.0)), (root, st(0.8, 0.0, 1, 1, 1.0))];
        assert_eq!(finalize(&two, FinalRule::MaxMean).unwrap(), 1);
        assert_eq!(finalize(&two, FinalRule::WeightedVote).unwrap(), 1);
        assert!(finalize(&[], FinalRule::MaxMean).is_err());
    }
}
