//! Cross-checks of the fast programs against exhaustive path search on small
//! random instances.

use hailsim_core::distributions::{DiscreteScales, IndependentPareto, RegionIvCoupled};
use hailsim_core::model::trial_rng;
use hailsim_core::paths::{
    brute_force_max_counts, brute_force_max_score, brute_force_n_connected, brute_force_tilde_w, max_counts,
    n_connected, tilde_w_grid, ConnectivityQuery,
};
use hailsim_core::scales::ScaleSequences;
use hailsim_core::{path_score, probe, sample_realization, ModelParams, Realization, SeedInfo, Site, SizeDistribution, Window};
use rand::Rng;
use rayon::prelude::*;

use crate::config::OracleSpec;

pub const TOLERANCE: f64 = 1e-9;

fn toy_discrete(d: usize) -> SizeDistribution {
    let sc = ScaleSequences::explicit(0.5, 3.0 * d as f64, d, &[1.0, 3.0], &[1.0, 4.0], None).expect("valid toy scales");
    SizeDistribution::DiscreteScales(DiscreteScales::new(sc, 1.0, 1.0, 8).expect("valid toy law"))
}

fn random_distribution<R: Rng>(d: usize, rng: &mut R) -> SizeDistribution {
    match rng.random_range(0..4) {
        0 => SizeDistribution::fixed(rng.random_range(0.0..3.0), rng.random_range(0.2..3.0)).expect("positive sizes"),
        1 => SizeDistribution::IndependentPareto(
            IndependentPareto::with_minima(rng.random_range(0.3..2.0), rng.random_range(0.3..2.0), 0.5, 0.5, d)
                .expect("positive exponents"),
        ),
        2 => toy_discrete(d),
        _ => SizeDistribution::RegionIvCoupled(RegionIvCoupled::new(0.5, 1.2, d, 2).expect("region IV point")),
    }
}

/// Small random instance with at most `max_jobs` jobs: dimension 1 or 2, a
/// random size law, rate in `[0.05, 2]` and a window of a few sites.
pub fn random_instance<R: Rng>(rng: &mut R, max_jobs: usize) -> Realization {
    let d = rng.random_range(1..=2);
    let dist = if rng.random_range(0..3) == 0 {
        toy_discrete(d)
    } else {
        random_distribution(d, rng)
    };
    let lambda = rng.random_range(0.05..=2.0);
    let half = if d == 1 { rng.random_range(2..=6) } else { rng.random_range(1..=3) };
    let window = Window::fixed(half);
    let target = rng.random_range(2.0..=max_jobs.max(2) as f64);
    let params = ModelParams {
        dimension: d,
        lambda,
        horizon: target / (lambda * window.volume(d) as f64),
    };
    loop {
        let seed = SeedInfo {
            master_seed: rng.random(),
            trial: 0,
        };
        let r = sample_realization(&params, &dist, &window, seed).expect("valid instance parameters");
        if r.len() <= max_jobs {
            return r;
        }
    }
}

fn random_site<R: Rng>(r: &Realization, rng: &mut R) -> Site {
    let h = r.window().half_width;
    Site::new((0..r.dimension()).map(|_| rng.random_range(-h..=h)))
}

fn random_time<R: Rng>(r: &Realization, rng: &mut R) -> f64 {
    if !r.is_empty() && rng.random_range(0..3) == 0 {
        r.jobs()[rng.random_range(0..r.len())].arrival_time
    } else {
        rng.random_range(0.0..=r.horizon())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub instance: usize,
    pub check: &'static str,
    pub detail: String,
    /// The offending instance in replay text form.
    pub realization: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleReport {
    pub instances: usize,
    pub workload_checks: usize,
    pub tilde_checks: usize,
    pub class_checks: usize,
    pub max_abs_error: f64,
    pub mismatches: Vec<Mismatch>,
}

#[derive(Default)]
struct InstanceOutcome {
    workload: usize,
    tilde: usize,
    class: usize,
    max_err: f64,
    mismatches: Vec<Mismatch>,
}

fn check_instance(k: usize, spec: &OracleSpec, master_seed: u64) -> InstanceOutcome {
    let mut rng = trial_rng(master_seed, k as u64);
    let r = random_instance(&mut rng, spec.max_jobs);
    let mut out = InstanceOutcome::default();
    let fail = |out: &mut InstanceOutcome, check: &'static str, detail: String| {
        out.mismatches.push(Mismatch {
            instance: k,
            check,
            detail,
            realization: r.to_text(),
        });
    };
    let probes: Vec<(f64, Site)> = (0..spec.probes)
        .map(|_| (random_time(&r, &mut rng), random_site(&r, &mut rng)))
        .collect();
    let fast = match probe(&r, &probes) {
        Ok(v) => v,
        Err(e) => {
            fail(&mut out, "workload", e.to_string());
            return out;
        }
    };
    for ((t, x), w) in probes.iter().zip(&fast) {
        out.workload += 1;
        match brute_force_max_score(&r, x, *t, spec.max_jobs) {
            Ok((score, cert)) => {
                let err = (score - w).abs();
                out.max_err = out.max_err.max(err);
                if err > TOLERANCE {
                    fail(&mut out, "workload", format!("W({t}, {x}) = {w}, exhaustive {score}"));
                }
                match path_score(&r, &cert) {
                    Ok(s) if (s - score).abs() <= TOLERANCE => {}
                    Ok(s) => fail(&mut out, "witness", format!("witness scores {s}, reported {score}")),
                    Err(e) => fail(&mut out, "witness", e.to_string()),
                }
            }
            Err(e) => fail(&mut out, "workload", e.to_string()),
        }
    }

    let mut grid: Vec<f64> = probes.iter().map(|p| p.0).collect();
    grid.sort_by(f64::total_cmp);
    for (t, w) in grid.iter().zip(tilde_w_grid(&r, &grid)) {
        out.tilde += 1;
        match brute_force_tilde_w(&r, *t, spec.max_jobs) {
            Ok((score, _)) => {
                let err = (score - w).abs();
                out.max_err = out.max_err.max(err);
                if err > TOLERANCE {
                    fail(&mut out, "tilde-w", format!("W~({t}) = {w}, exhaustive {score}"));
                }
            }
            Err(e) => fail(&mut out, "tilde-w", e.to_string()),
        }
    }

    // Count and connectivity programs need every job to fall in a size class.
    if let Some(classes) = toy_discrete(r.dimension()).size_classes() {
        let is_toy = r
            .jobs()
            .iter()
            .all(|j| classes.spatial_index(j.radius).is_some() && classes.temporal_index(j.duration).is_some());
        if is_toy {
            let t = grid.last().copied().unwrap_or(0.0);
            for n in 1..=classes.spatial.len() {
                out.class += 1;
                match (max_counts(&r, t, n, &classes), brute_force_max_counts(&r, t, n, &classes, spec.max_jobs)) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (a, b) => fail(&mut out, "counts", format!("n = {n}, t = {t}: {a:?} vs {b:?}")),
                }
                let q = ConnectivityQuery {
                    target: random_site(&r, &mut rng),
                    time: t,
                    n,
                };
                match (n_connected(&r, &q, &classes), brute_force_n_connected(&r, &q, &classes, spec.max_jobs)) {
                    (Ok(a), Ok(b)) if a == b => {}
                    (a, b) => fail(&mut out, "connectivity", format!("{q:?}: {a:?} vs {b:?}")),
                }
            }
        }
    }
    out
}

/// Run `spec.instances` independent instances, each seeded from
/// `(master_seed, instance)`.
pub fn run_oracle_suite(spec: &OracleSpec, master_seed: u64) -> OracleReport {
    let outcomes: Vec<InstanceOutcome> = (0..spec.instances)
        .into_par_iter()
        .map(|k| check_instance(k, spec, master_seed))
        .collect();
    let mut report = OracleReport {
        instances: spec.instances,
        workload_checks: 0,
        tilde_checks: 0,
        class_checks: 0,
        max_abs_error: 0.0,
        mismatches: Vec::new(),
    };
    for o in outcomes {
        report.workload_checks += o.workload;
        report.tilde_checks += o.tilde;
        report.class_checks += o.class;
        report.max_abs_error = report.max_abs_error.max(o.max_err);
        report.mismatches.extend(o.mismatches);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_is_clean_and_deterministic() {
        let spec = OracleSpec {
            instances: 12,
            max_jobs: 6,
            probes: 4,
        };
        let a = run_oracle_suite(&spec, 3);
        assert!(a.mismatches.is_empty(), "{:?}", a.mismatches);
        assert_eq!(a.workload_checks, 48);
        assert_eq!(a, run_oracle_suite(&spec, 3));
    }
}
