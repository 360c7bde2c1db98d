use crate::distributions::critical_exponents;
use crate::model::Site;
use crate::paths::{n_connected, ConnectivityQuery};

use super::stats::binomial_stderr;
use super::{run_trials, EstimatorError, Result, TrialConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct PnRow {
    pub x: Site,
    pub hits: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PnTable {
    pub t: f64,
    pub n: usize,
    pub rows: Vec<PnRow>,
    pub tainted: usize,
    pub discarded: usize,
    pub warnings: Vec<String>,
}

/// Frequency with which `(x, t)` is n-connected to the space-time origin, one
/// realization per trial shared by all `x`.
pub fn estimate_p_n(cfg: &TrialConfig, xs: &[Site], t: f64, n: usize) -> Result<PnTable> {
    let classes = cfg.distribution.size_classes().ok_or_else(|| {
        EstimatorError::Config(format!(
            "n-connectivity needs discrete size classes; '{}' has none",
            cfg.distribution.name()
        ))
    })?;
    let s_n = classes
        .scale(n)
        .ok_or_else(|| EstimatorError::Config(format!("no spatial scale with index {n}")))?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(EstimatorError::Config(format!("t = {t} (must be finite and >= 0)")));
    }
    if let Some(x) = xs.iter().find(|x| x.dim() != cfg.dimension) {
        return Err(EstimatorError::Config(format!("site {x} has the wrong dimension")));
    }
    let mut warnings = Vec::new();
    let alpha = critical_exponents(&cfg.distribution).0;
    if t > s_n.powf(alpha) {
        warnings.push(format!("t = {t} exceeds S_n^alpha = {}", s_n.powf(alpha)));
    }
    let batch = run_trials(cfg, t, 0, |r| {
        xs.iter()
            .map(|x| {
                let q = ConnectivityQuery {
                    target: x.clone(),
                    time: t,
                    n,
                };
                Ok(n_connected(r, &q, &classes)?)
            })
            .collect::<Result<Vec<bool>>>()
    })?;
    let trials = batch.kept.len() as u64;
    let rows = xs
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let hits = batch.kept.iter().filter(|v| v[k]).count() as u64;
            PnRow {
                x: x.clone(),
                hits,
                trials,
                p_hat: if trials == 0 { f64::NAN } else { hits as f64 / trials as f64 },
                stderr: binomial_stderr(hits, trials),
            }
        })
        .collect();
    Ok(PnTable {
        t,
        n,
        rows,
        tainted: batch.tainted,
        discarded: batch.discarded,
        warnings,
    })
}
