use crate::paths::range_extremes;

use super::stats::{mean, quantile};
use super::{check_grid, run_trials, EstimatorError, Result, TrialConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct RangeStatRow {
    pub t: f64,
    pub mean_width: f64,
    pub median_width: f64,
    pub q90_width: f64,
    pub mean_width_over_t: f64,
    /// Mean of `2 Σ R` over the jobs that met the reachable set.
    pub mean_bound: f64,
    /// Trials with `D(t) > 2 Σ R`.
    pub violations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeTable {
    pub rows: Vec<RangeStatRow>,
    pub trials: usize,
    pub tainted: usize,
    pub discarded: usize,
    pub violation_fraction: f64,
}

/// Width `D(t)` of the origin's domain of influence in one dimension.
pub fn range_profile(cfg: &TrialConfig, t_grid: &[f64]) -> Result<RangeTable> {
    check_grid(t_grid)?;
    if cfg.dimension != 1 {
        return Err(EstimatorError::Config(format!(
            "range profile needs dimension 1, got {}",
            cfg.dimension
        )));
    }
    if cfg.distribution.radius_classes().is_none() {
        return Err(EstimatorError::Config(format!(
            "range profile needs discrete radius classes; '{}' has none",
            cfg.distribution.name()
        )));
    }
    let horizon = *t_grid.last().expect("checked non-empty");
    let batch = run_trials(cfg, horizon, 0, |r| Ok(range_extremes(r, t_grid)?))?;
    let mut rows = Vec::with_capacity(t_grid.len());
    let mut violating_trials = vec![false; batch.kept.len()];
    for (k, &t) in t_grid.iter().enumerate() {
        let widths: Vec<f64> = batch.kept.iter().map(|v| v[k].width as f64).collect();
        let bounds: Vec<f64> = batch.kept.iter().map(|v| 2.0 * v[k].radius_sum).collect();
        let mut violations = 0;
        for (j, (w, b)) in widths.iter().zip(&bounds).enumerate() {
            if w > b {
                violations += 1;
                violating_trials[j] = true;
            }
        }
        rows.push(RangeStatRow {
            t,
            mean_width: mean(&widths),
            median_width: quantile(&widths, 0.5),
            q90_width: quantile(&widths, 0.9),
            mean_width_over_t: if t > 0.0 { mean(&widths) / t } else { f64::NAN },
            mean_bound: mean(&bounds),
            violations,
        });
    }
    let trials = batch.kept.len();
    Ok(RangeTable {
        rows,
        trials,
        tainted: batch.tainted,
        discarded: batch.discarded,
        violation_fraction: violating_trials.iter().filter(|v| **v).count() as f64 / trials.max(1) as f64,
    })
}
