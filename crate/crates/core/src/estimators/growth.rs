use crate::distributions::{classify_region, IndependentPareto, Region, RegionIvCoupled, SizeDistribution};
use crate::model::{derive_seed, trial_rng, Window};
use crate::paths::tilde_w_grid;

use super::stats::{binomial_stderr, bootstrap_quantile_ci, ls_slope, quantile_sorted};
use super::{check_grid, run_trials, BoundaryPolicy, EstimatorError, Result, TrialBatch, TrialConfig};

const QUANTILES: [f64; 3] = [0.5, 0.9, 0.99];
const BOOTSTRAP_RESAMPLES: usize = 200;

/// `W̃(t, 0)` on the grid, one vector per kept trial.
pub fn tilde_w_samples(cfg: &TrialConfig, t_grid: &[f64]) -> Result<TrialBatch<Vec<f64>>> {
    check_grid(t_grid)?;
    let horizon = *t_grid.last().expect("checked non-empty");
    run_trials(cfg, horizon, 0, |r| Ok(tilde_w_grid(r, t_grid)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantileRow {
    pub t: f64,
    /// 50/90/99% quantiles of `W̃(t, 0)` over trials.
    pub quantiles: [f64; 3],
    /// 95% percentile-bootstrap intervals of the quantiles.
    pub ci: [(f64, f64); 3],
    pub mean: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightnessTable {
    pub rows: Vec<QuantileRow>,
    pub trials: usize,
    pub tainted: usize,
    pub discarded: usize,
    /// [`instability_score`] of the medians.
    pub score: f64,
}

pub fn tightness_probe(cfg: &TrialConfig, t_grid: &[f64]) -> Result<TightnessTable> {
    let batch = tilde_w_samples(cfg, t_grid)?;
    let mut rows = Vec::with_capacity(t_grid.len());
    for (k, &t) in t_grid.iter().enumerate() {
        let mut col: Vec<f64> = batch.kept.iter().map(|v| v[k]).collect();
        col.sort_by(f64::total_cmp);
        let mut rng = trial_rng(derive_seed(cfg.master_seed, u64::MAX), k as u64);
        let quantiles = QUANTILES.map(|q| quantile_sorted(&col, q));
        let ci = QUANTILES.map(|q| bootstrap_quantile_ci(&col, q, BOOTSTRAP_RESAMPLES, 0.025, &mut rng));
        let mean = if col.is_empty() { f64::NAN } else { col.iter().sum::<f64>() / col.len() as f64 };
        rows.push(QuantileRow { t, quantiles, ci, mean });
    }
    let medians: Vec<f64> = rows.iter().map(|r| r.quantiles[0]).collect();
    Ok(TightnessTable {
        score: instability_score(t_grid, &medians),
        rows,
        trials: batch.kept.len(),
        tainted: batch.tainted,
        discarded: batch.discarded,
    })
}

/// Least-squares slope of `ln(1 + median W̃)` against `ln t` over the positive
/// grid points. Plateaus score near 0, linear growth near 1.
pub fn instability_score(t_grid: &[f64], medians: &[f64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = t_grid
        .iter()
        .zip(medians)
        .filter(|(t, m)| **t > 0.0 && m.is_finite())
        .map(|(t, m)| (t.ln(), m.ln_1p()))
        .unzip();
    if x.len() < 2 {
        return f64::NAN;
    }
    ls_slope(&x, &y)
}

/// Growth probe for the coupled construction: only class-`i` jobs are
/// simulated, which lowers every workload, so the frequencies are lower bounds
/// for the full law.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionIvDemo {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub i: usize,
    pub lambda: f64,
    /// Threshold parameter: success means `W̃(nτ_i, 0) >= (l/2 - 1) n τ_i`.
    pub l: f64,
    pub n_grid: Vec<usize>,
    pub half_width: i64,
    pub trials: usize,
    pub master_seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoRow {
    pub n: usize,
    pub t: f64,
    pub threshold: f64,
    pub hits: u64,
    pub trials: u64,
    pub freq: f64,
    pub stderr: f64,
    pub tainted: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DemoTable {
    pub radius: f64,
    pub duration: f64,
    /// Arrival rate of class-`i` jobs per site.
    pub class_rate: f64,
    /// Mean count of class-`i` jobs centered in `[-R_i/4, R_i/4]^d` during a
    /// window of length `τ_i/4`.
    pub block_rate: f64,
    pub rows: Vec<DemoRow>,
    /// Per-trial indicators for each row, in trial order.
    pub indicators: Vec<Vec<bool>>,
}

pub fn region_iv_growth_demo(demo: &RegionIvDemo) -> Result<DemoTable> {
    let region = classify_region(demo.alpha, demo.beta, demo.d);
    if region != Region::IV {
        return Err(EstimatorError::Config(format!(
            "(alpha, beta) = ({}, {}) lies in region {region}, not IV",
            demo.alpha, demo.beta
        )));
    }
    if demo.n_grid.is_empty() || demo.n_grid.contains(&0) {
        return Err(EstimatorError::Config("n_grid must be non-empty with n >= 1".into()));
    }
    let law = RegionIvCoupled::new(demo.alpha, demo.beta, demo.d, demo.i.max(1))?;
    let (radius, duration) = law.sizes(demo.i);
    if (demo.half_width as f64) < radius {
        return Err(EstimatorError::Size(format!(
            "window half-width {} is smaller than R_{} = {radius}",
            demo.half_width, demo.i
        )));
    }
    let (class_prob, block) = if demo.i == 0 {
        (1.0, (-(demo.d as f64 + 1.0)).exp2())
    } else {
        (law.class_prob(demo.i), law.box_rate(demo.i))
    };
    let cfg = TrialConfig {
        dimension: demo.d,
        lambda: demo.lambda * class_prob,
        distribution: SizeDistribution::fixed(radius, duration)?,
        window: Window::fixed(demo.half_width),
        trials: demo.trials,
        master_seed: demo.master_seed,
        boundary: BoundaryPolicy::Keep,
    };
    let mut rows = Vec::with_capacity(demo.n_grid.len());
    let mut indicators = Vec::with_capacity(demo.n_grid.len());
    for (k, &n) in demo.n_grid.iter().enumerate() {
        let t = n as f64 * duration;
        let threshold = (demo.l / 2.0 - 1.0) * t;
        // Disjoint trial ranges keep the rows independent.
        let batch = run_trials(&cfg, t, (k * demo.trials) as u64, |r| Ok(tilde_w_grid(r, &[t])[0] >= threshold))?;
        let hits = batch.kept.iter().filter(|b| **b).count() as u64;
        let trials = batch.kept.len() as u64;
        rows.push(DemoRow {
            n,
            t,
            threshold,
            hits,
            trials,
            freq: hits as f64 / trials as f64,
            stderr: binomial_stderr(hits, trials),
            tainted: batch.tainted,
        });
        indicators.push(batch.kept);
    }
    Ok(DemoTable {
        radius,
        duration,
        class_rate: cfg.lambda,
        block_rate: demo.lambda * block,
        rows,
        indicators,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub beta: f64,
    pub region: Region,
    pub score: f64,
    /// Median of `W̃(t, 0)` at the last grid point.
    pub final_median: f64,
    pub trials: usize,
    pub tainted: usize,
    pub discarded: usize,
}

/// Instability score over a grid of independent Pareto laws, each run with the
/// same seeds.
pub fn phase_sweep(points: &[(f64, f64)], base: &TrialConfig, t_grid: &[f64]) -> Result<Vec<SweepRow>> {
    check_grid(t_grid)?;
    points
        .iter()
        .map(|&(alpha, beta)| {
            let cfg = TrialConfig {
                distribution: SizeDistribution::IndependentPareto(IndependentPareto::new(alpha, beta, base.dimension)?),
                ..base.clone()
            };
            let batch = tilde_w_samples(&cfg, t_grid)?;
            let medians: Vec<f64> = (0..t_grid.len())
                .map(|k| {
                    let mut col: Vec<f64> = batch.kept.iter().map(|v| v[k]).collect();
                    col.sort_by(f64::total_cmp);
                    quantile_sorted(&col, 0.5)
                })
                .collect();
            Ok(SweepRow {
                alpha,
                beta,
                region: classify_region(alpha, beta, base.dimension),
                score: instability_score(t_grid, &medians),
                final_median: *medians.last().expect("checked non-empty"),
                trials: batch.kept.len(),
                tainted: batch.tainted,
                discarded: batch.discarded,
            })
        })
        .collect()
}
