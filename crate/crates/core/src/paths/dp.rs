//! Forward programs over paths started at the space-time origin.
//!
//! Each program keeps one value per site (unreached = `-inf`). A job whose
//! ball holds a reached site sets the whole ball to the ball maximum plus the
//! job's weight: any site in the ball can be the end of the best path through
//! the job. Values live on the window grown by one site plus the start and
//! target boxes; clamping a path onto that box keeps every ball, start and
//! target membership, so nothing outside it can do better.

use crate::arena::Arena;
use crate::distributions::SizeClasses;
use crate::model::{BoxRegion, Job, Realization, Site};
use crate::scalar::Scalar;
use crate::scales::ScaleSequences;

use super::{class_of, ConnectivityQuery, CountVector, PathError, Result};

fn arena_for<S: Scalar>(realization: &Realization<S>, extra: &[&BoxRegion]) -> Arena<S> {
    let mut region = realization.window().region(realization.dimension());
    for b in extra {
        region = region.hull(b);
    }
    Arena::new(region.dilate(1), S::neg_infinity())
}

/// Best-weight program: returns the running maximum after each job.
struct Program<S: Scalar> {
    arena: Arena<S>,
    best: S,
}

impl<S: Scalar> Program<S> {
    fn from_origin(realization: &Realization<S>, start: &BoxRegion, extra: &[&BoxRegion]) -> Self {
        let mut all = vec![start];
        all.extend_from_slice(extra);
        let mut arena = arena_for(realization, &all);
        arena.assign(start, S::zero());
        Program {
            arena,
            best: S::zero(),
        }
    }

    /// Returns true if the job touched a reached site.
    fn step(&mut self, job: &Job<S>, weight: S) -> bool {
        let fp = job.footprint();
        let m = self.arena.max_in(&fp);
        if m == S::neg_infinity() {
            return false;
        }
        let v = m + weight;
        self.arena.assign(&fp, v);
        self.best = self.best.max(v);
        true
    }
}

/// `W̃(t, 0)`: best score over paths from the space-time origin ending at any
/// site and any time `u <= t`.
pub fn tilde_w<S: Scalar>(realization: &Realization<S>, t: S) -> S {
    tilde_w_grid(realization, &[t])[0]
}

/// `W̃` on a sorted grid in one pass.
pub fn tilde_w_grid<S: Scalar>(realization: &Realization<S>, times: &[S]) -> Vec<S> {
    let origin = BoxRegion::point(&Site::origin(realization.dimension()));
    let mut prog = Program::from_origin(realization, &origin, &[]);
    let jobs = realization.jobs();
    let mut next = 0;
    let mut score = S::zero();
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        while next < jobs.len() && jobs[next].arrival_time <= t {
            let job = &jobs[next];
            // Best path ending right after this job: highest workload now, minus now.
            if prog.step(job, job.duration) {
                score = score.max(prog.best - job.arrival_time);
            }
            next += 1;
        }
        out.push(score);
    }
    out
}

/// Extremes of the sites reachable from the origin, with the radius sum of
/// the jobs that met the reachable set (one dimension only).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RangeRow<S: Scalar = f64> {
    pub time: S,
    pub left: i64,
    pub right: i64,
    pub width: i64,
    pub radius_sum: S,
}

pub fn range_extremes<S: Scalar>(realization: &Realization<S>, t_grid: &[S]) -> Result<Vec<RangeRow<S>>> {
    if realization.dimension() != 1 {
        return Err(PathError::Dimension(realization.dimension()));
    }
    let jobs = realization.jobs();
    let (mut left, mut right) = (0i64, 0i64);
    let mut radius_sum = S::zero();
    let mut next = 0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        while next < jobs.len() && jobs[next].arrival_time <= t {
            let job = &jobs[next];
            let c = job.center.coords()[0];
            let r = job.reach();
            let (lo, hi) = (c.saturating_sub(r), c.saturating_add(r));
            if lo <= right && hi >= left {
                left = left.min(lo);
                right = right.max(hi);
                radius_sum = radius_sum + job.radius;
            }
            next += 1;
        }
        out.push(RangeRow {
            time: t,
            left,
            right,
            width: right - left,
            radius_sum,
        });
    }
    Ok(out)
}

fn within_scale<S: Scalar>(job: &Job<S>, t: S, s_n: f64) -> bool {
    job.arrival_time <= t && job.radius <= S::of(s_n)
}

/// n-connectivity of the origin at time 0 and `(target, time)`.
pub fn n_connected<S: Scalar>(
    realization: &Realization<S>,
    query: &ConnectivityQuery,
    classes: &SizeClasses,
) -> Result<bool> {
    let (s_n, start, target) = query.boxes(classes)?;
    let mut prog = Program::from_origin(realization, &start, &[&target]);
    let t = S::of(query.time);
    for job in realization.jobs() {
        if within_scale(job, t, s_n) {
            prog.step(job, S::zero());
        }
    }
    Ok(prog.arena.max_in(&target) > S::neg_infinity())
}

/// Per-class maxima of intersected job counts over paths from the space-time
/// origin to time `t` that use only jobs of radius at most `S_n`. Each class is
/// its own scalar program.
pub fn max_counts<S: Scalar>(
    realization: &Realization<S>,
    t: S,
    n: usize,
    classes: &SizeClasses,
) -> Result<CountVector> {
    let s_n = classes
        .scale(n)
        .ok_or_else(|| PathError::Classes(format!("no spatial scale with index {n}")))?;
    let jobs: Vec<(&Job<S>, usize, usize)> = realization
        .jobs()
        .iter()
        .filter(|j| within_scale(j, t, s_n))
        .map(|j| {
            match (class_of(&classes.temporal, j.duration), class_of(&classes.spatial, j.radius)) {
                (Some(tj), Some(si)) => Ok((j, tj, si)),
                _ => Err(PathError::Classes(format!(
                    "job sizes ({}, {}) match no class",
                    j.radius, j.duration
                ))),
            }
        })
        .collect::<Result<_>>()?;
    let origin = BoxRegion::point(&Site::origin(realization.dimension()));
    let run = |hit: &dyn Fn(usize, usize) -> bool| -> u64 {
        let mut prog = Program::from_origin(realization, &origin, &[]);
        for &(j, tj, si) in &jobs {
            prog.step(j, if hit(tj, si) { S::one() } else { S::zero() });
        }
        prog.best.as_f64().round() as u64
    };
    Ok(CountVector {
        temporal: (0..classes.temporal.len()).map(|c| run(&|tj, _| tj == c)).collect(),
        spatial: (0..classes.spatial.len()).map(|c| run(&|_, si| si == c)).collect(),
    })
}

/// Indicators of the growth events at time `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventIndicators {
    /// Index `j - 1`: the maximal count of temporal class `j` stays within
    /// `c' T_j^{-(1+δ)} t`.
    pub temporal_ok: Vec<bool>,
    /// Index `i - 1`: no job of spatial class `>= i + 2` meets any path.
    pub no_large_spatial: Vec<bool>,
    pub counts: CountVector,
}

/// Threshold the maximal counts (all size classes admitted).
pub fn detect_events<S: Scalar>(
    realization: &Realization<S>,
    t: S,
    scales: &ScaleSequences,
    classes: &SizeClasses,
    c_prime: f64,
) -> Result<EventIndicators> {
    let n = classes.spatial.len();
    let counts = max_counts(realization, t, n, classes)?;
    let log2_t = t.as_f64().log2();
    let temporal_ok = counts
        .temporal
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            if x == 0 {
                return true;
            }
            let log2_tj = scales.log2_t(k + 1).unwrap_or_else(|| classes.temporal[k].log2());
            (x as f64).log2() <= c_prime.log2() - (1.0 + scales.delta) * log2_tj + log2_t
        })
        .collect();
    let no_large_spatial = (1..=counts.spatial.len())
        .map(|i| counts.spatial.iter().skip(i + 1).all(|&m| m == 0))
        .collect();
    Ok(EventIndicators {
        temporal_ok,
        no_large_spatial,
        counts,
    })
}
