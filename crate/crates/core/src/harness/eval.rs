use std::collections::BTreeMap;

use super::run::{EpisodeRecord, TrialLog};
use crate::error::{Error, Result};

/// Episodes per trial that enter the final score.
pub const FINAL_WINDOW: usize = 100;

/// Mean over trials of the mean raw return of each trial's last
/// `min(100, episodes)` episodes.
pub fn evaluate_final(logs: &[TrialLog]) -> Result<f64> {
    let per_trial: Vec<Vec<f64>> = logs
        .iter()
        .map(|l| l.episodes.iter().map(|e| e.raw_return).collect())
        .collect();
    score(&per_trial)
}

/// Same score computed from flat episode records, grouped by trial id.
pub fn evaluate_records(records: &[EpisodeRecord]) -> Result<f64> {
    let mut by_trial: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in records {
        by_trial.entry(r.trial).or_default().push(r.raw_return);
    }
    score(&by_trial.into_values().collect::<Vec<_>>())
}

/// Score from per-trial raw returns in episode order.
pub fn score(per_trial: &[Vec<f64>]) -> Result<f64> {
    if per_trial.is_empty() {
        return Err(Error::InvalidArgument("no trials to evaluate".into()));
    }
    let mut total = 0.0;
    for (k, returns) in per_trial.iter().enumerate() {
        if returns.is_empty() {
            return Err(Error::InvalidArgument(format!("trial {k} has no episodes")));
        }
        let tail = &returns[returns.len().saturating_sub(FINAL_WINDOW)..];
        total += tail.iter().sum::<f64>() / tail.len() as f64;
    }
    Ok(total / per_trial.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_single_trial() {
        assert_eq!(score(&[vec![2.5; 40]]).unwrap(), 2.5);
    }

    #[test]
    fn trial_means_averaged() {
        let trials: Vec<Vec<f64>> = (1..=5).map(|r| vec![r as f64; 10]).collect();
        assert_eq!(score(&trials).unwrap(), 3.0);
    }

    #[test]
    fn only_last_hundred_count() {
        let mut r = vec![0.0; 150];
        r.extend(vec![7.0; 100]);
        assert_eq!(score(&[r]).unwrap(), 7.0);
    }

    #[test]
    fn empty_rejected() {
        assert!(score(&[]).is_err());
        assert!(score(&[vec![1.0], vec![]]).is_err());
    }
}
