//! Monte Carlo experiments over independent, individually seeded trials.
//!
//! Trial `k` of an experiment uses the stream seeded by
//! `derive_seed(master_seed, first_trial + k)`, so results do not depend on
//! how rayon schedules the trials. Aggregation happens after collection, in
//! trial order.

mod connectivity;
mod growth;
mod range;
pub mod stats;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::{DistributionError, SizeDistribution};
use crate::model::{
    sample_realization, touches_window_edge, ModelError, ModelParams, Realization, SeedInfo, Window,
};
use crate::paths::PathError;
use crate::scales::ScalesError;

pub use connectivity::{estimate_p_n, PnRow, PnTable};
pub use growth::{
    instability_score, phase_sweep, region_iv_growth_demo, tightness_probe, tilde_w_samples, DemoRow, DemoTable,
    QuantileRow, RegionIvDemo, SweepRow, TightnessTable,
};
pub use range::{range_profile, RangeStatRow, RangeTable};

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("size: {0}")]
    Size(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Distribution(#[from] DistributionError),
    #[error(transparent)]
    Scales(#[from] ScalesError),
}

pub type Result<T> = std::result::Result<T, EstimatorError>;

/// What to do with trials whose influence reaches the window edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPolicy {
    #[default]
    Exclude,
    /// Keep them: dropping jobs only lowers workloads, so the estimate is a
    /// lower bound for the untruncated system.
    Keep,
}

impl BoundaryPolicy {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryPolicy::Exclude => "exclude",
            BoundaryPolicy::Keep => "keep",
        }
    }
}

/// Model, job-size law, window and trial plan shared by the experiments.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialConfig {
    pub dimension: usize,
    pub lambda: f64,
    pub distribution: SizeDistribution,
    pub window: Window,
    pub trials: usize,
    pub master_seed: u64,
    pub boundary: BoundaryPolicy,
}

impl TrialConfig {
    fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(EstimatorError::Config("trials must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-trial outputs that survived the boundary policy, in trial order.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialBatch<T> {
    pub kept: Vec<T>,
    /// Trials whose influence reached the window edge.
    pub tainted: usize,
    /// Tainted trials dropped under [`BoundaryPolicy::Exclude`].
    pub discarded: usize,
}

impl<T> TrialBatch<T> {
    pub fn discard_fraction(&self) -> f64 {
        let total = self.kept.len() + self.discarded;
        if total == 0 {
            0.0
        } else {
            self.discarded as f64 / total as f64
        }
    }
}

/// Sample `cfg.trials` realizations on `[0, horizon]` and apply `f` to each.
pub fn run_trials<T, F>(cfg: &TrialConfig, horizon: f64, first_trial: u64, f: F) -> Result<TrialBatch<T>>
where
    T: Send,
    F: Fn(&Realization) -> Result<T> + Sync,
{
    cfg.validate()?;
    let params = ModelParams {
        dimension: cfg.dimension,
        lambda: cfg.lambda,
        // Sampling needs a positive horizon; nothing arrives before time 0 anyway.
        horizon: horizon.max(f64::MIN_POSITIVE),
    };
    let outcomes: Vec<Result<(bool, Option<T>)>> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|k| {
            let seed = SeedInfo {
                master_seed: cfg.master_seed,
                trial: first_trial + k,
            };
            let r = sample_realization(&params, &cfg.distribution, &cfg.window, seed)?;
            let tainted = touches_window_edge(&r);
            if tainted && cfg.boundary == BoundaryPolicy::Exclude {
                return Ok((true, None));
            }
            Ok((tainted, Some(f(&r)?)))
        })
        .collect();
    let mut batch = TrialBatch {
        kept: Vec::with_capacity(outcomes.len()),
        tainted: 0,
        discarded: 0,
    };
    for o in outcomes {
        let (tainted, value) = o?;
        batch.tainted += tainted as usize;
        match value {
            Some(v) => batch.kept.push(v),
            None => batch.discarded += 1,
        }
    }
    Ok(batch)
}

/// `count` times `start · ratio^k`.
pub fn geometric_grid(start: f64, ratio: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| start * ratio.powi(k as i32)).collect()
}

pub const DEFAULT_GRID_RATIO: f64 = 1.5;

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(EstimatorError::Config("t_grid must not be empty".into()));
    }
    if t_grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(EstimatorError::Config("t_grid values must be finite and >= 0".into()));
    }
    if t_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(EstimatorError::Config("t_grid must be sorted".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(trials: usize) -> TrialConfig {
        TrialConfig {
            dimension: 1,
            lambda: 0.5,
            distribution: SizeDistribution::fixed(1.0, 1.0).unwrap(),
            window: Window::fixed(20),
            trials,
            master_seed: 3,
            boundary: BoundaryPolicy::Exclude,
        }
    }

    #[test]
    fn zero_trials_is_a_config_error() {
        let r = run_trials(&cfg(0), 1.0, 0, |r| Ok(r.len()));
        assert!(matches!(r, Err(EstimatorError::Config(_))));
    }

    #[test]
    fn trial_outputs_come_back_in_order() {
        let a = run_trials(&cfg(16), 3.0, 0, |r| Ok(r.seed_info.trial)).unwrap();
        assert_eq!(a.kept, (0..16).collect::<Vec<u64>>());
    }

    #[test]
    fn grid_checks() {
        assert_eq!(geometric_grid(2.0, 1.5, 3), vec![2.0, 3.0, 4.5]);
        assert!(check_grid(&[2.0, 1.0]).is_err());
        assert!(check_grid(&[]).is_err());
        assert!(check_grid(&[0.0, 1.0]).is_ok());
    }
}
