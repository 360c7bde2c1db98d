//! FCFS workload evolution on the lattice.
//!
//! The field stores, per site, the time until which the server stays busy;
//! the workload is `max(busy_until - now, 0)`. Linear decay is then a clock
//! advance, and a job sets its whole ball to `max(now, max busy_until) + τ`.
//!
//! Only sites within one step of the window are stored. This is exact for
//! every stored site: clamping a path coordinatewise onto a box that contains
//! all job centers never leaves a ball it was in, so maxima over a ball are
//! attained inside the box.

use thiserror::Error;

use crate::arena::Arena;
use crate::model::{BoxRegion, Job, Realization, Site, Window};
use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("argument error: {0}")]
    Argument(String),
    #[error("job at time {arrival} applied to a field at time {now}; decay first")]
    Sequencing { now: String, arrival: String },
    #[error("job center {0} lies outside the window")]
    OutsideWindow(String),
}

pub type Result<T> = std::result::Result<T, DynamicsError>;

/// Workload field at a single instant.
#[derive(Clone, Debug)]
pub struct WorkloadField<S: Scalar = f64> {
    dim: usize,
    window: Window,
    now: S,
    busy_until: Arena<S>,
    touched: BoxRegion,
    boundary_contact: bool,
}

/// Positive workloads at one time, lexicographic by site.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot<S: Scalar = f64> {
    pub time: S,
    pub values: Vec<(Site, S)>,
}

impl<S: Scalar> Snapshot<S> {
    pub fn get(&self, site: &Site) -> S {
        self.values
            .binary_search_by(|(s, _)| s.cmp(site))
            .map_or(S::zero(), |i| self.values[i].1)
    }
}

impl<S: Scalar> WorkloadField<S> {
    /// Empty field at time 0.
    pub fn new(dim: usize, window: Window) -> Self {
        let region = window.region(dim).dilate(1);
        WorkloadField {
            dim,
            window,
            now: S::zero(),
            busy_until: Arena::new(region, S::neg_infinity()),
            touched: BoxRegion::new(Site::new(vec![1; dim]), Site::new(vec![0; dim])),
            boundary_contact: false,
        }
    }

    /// Field at time `now` with the given positive workloads.
    pub fn from_values(dim: usize, window: Window, now: S, values: &[(Site, S)]) -> Result<Self> {
        let mut f = Self::new(dim, window);
        f.now = now;
        for (site, w) in values {
            if !f.busy_until.region().contains(site) {
                return Err(DynamicsError::Argument(format!("site {site:?} outside the field")));
            }
            if !(*w >= S::zero()) {
                return Err(DynamicsError::Argument(format!("negative workload {w}")));
            }
            let p = BoxRegion::point(site);
            f.busy_until.assign(&p, now + *w);
            f.touched = f.touched.hull(&p);
        }
        Ok(f)
    }

    pub fn now(&self) -> S {
        self.now
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn boundary_contact(&self) -> bool {
        self.boundary_contact
    }

    /// Bounding box of every site that ever carried work.
    pub fn touched(&self) -> &BoxRegion {
        &self.touched
    }

    /// Sites the field can report on.
    pub fn region(&self) -> &BoxRegion {
        self.busy_until.region()
    }

    /// `W(now, site)`; `None` outside the stored region.
    pub fn value(&mut self, site: &Site) -> Option<S> {
        if !self.busy_until.region().contains(site) {
            return None;
        }
        Some((self.busy_until.get(site) - self.now).max(S::zero()))
    }

    pub fn snapshot(&mut self) -> Snapshot<S> {
        let now = self.now;
        let values = self
            .busy_until
            .entries_in(&self.touched)
            .into_iter()
            .filter(|(_, e)| *e > now)
            .map(|(s, e)| (s, e - now))
            .collect();
        Snapshot { time: now, values }
    }

    /// Advance time by `dt`; workloads drop by `dt` and clamp at zero.
    pub fn decay(&mut self, dt: S) -> Result<()> {
        if !(dt >= S::zero()) {
            return Err(DynamicsError::Argument(format!("decay by {dt}")));
        }
        self.now = self.now + dt;
        Ok(())
    }

    /// Apply a job arriving now.
    pub fn apply_job(&mut self, job: &Job<S>) -> Result<()> {
        if job.arrival_time != self.now {
            return Err(DynamicsError::Sequencing {
                now: self.now.to_string(),
                arrival: job.arrival_time.to_string(),
            });
        }
        if job.center.dim() != self.dim {
            return Err(DynamicsError::Argument(format!(
                "job center has dimension {}, field has {}",
                job.center.dim(),
                self.dim
            )));
        }
        let window = self.window.region(self.dim);
        if !window.contains(&job.center) {
            return Err(DynamicsError::OutsideWindow(format!("{:?}", job.center)));
        }
        let fp = job.footprint();
        if fp.touches_edge_of(self.window.half_width) {
            self.boundary_contact = true;
        }
        let m = self.busy_until.max_in(&fp).max(self.now);
        self.busy_until.assign(&fp, m + job.duration);
        self.touched = self.touched.hull(&fp.intersection(self.busy_until.region()));
        Ok(())
    }

    /// Decay up to the job's arrival, then apply it.
    pub fn advance_and_apply(&mut self, job: &Job<S>) -> Result<()> {
        self.advance_to(job.arrival_time)?;
        self.apply_job(job)
    }

    pub fn advance_to(&mut self, t: S) -> Result<()> {
        if t < self.now {
            return Err(DynamicsError::Argument(format!(
                "cannot move from time {} back to {t}",
                self.now
            )));
        }
        // Set rather than add so the clock lands exactly on `t`.
        self.now = t;
        Ok(())
    }
}

/// Snapshot limit convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Limit {
    /// `W(t) = W(t+)`: jobs arriving exactly at `t` are included.
    #[default]
    Right,
    /// `W(t-)`, for debugging.
    Left,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S: Scalar = f64> {
    pub snapshots: Vec<Snapshot<S>>,
    pub boundary_contact: bool,
}

fn check_sorted<S: Scalar>(times: &[S], horizon: S) -> Result<()> {
    if times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(DynamicsError::Argument("query times must be sorted".into()));
    }
    if times.iter().any(|t| !(*t >= S::zero() && *t <= horizon)) {
        return Err(DynamicsError::Argument("query times must lie in [0, horizon]".into()));
    }
    Ok(())
}

/// Replay the realization, taking snapshots at the sorted query times.
pub fn evolve<S: Scalar>(
    realization: &Realization<S>,
    query_times: &[S],
    limit: Limit,
) -> Result<Trajectory<S>> {
    check_sorted(query_times, realization.horizon())?;
    let mut field = WorkloadField::new(realization.dimension(), realization.window());
    let jobs = realization.jobs();
    let mut next = 0;
    let mut snapshots = Vec::with_capacity(query_times.len());
    for &t in query_times {
        while next < jobs.len()
            && match limit {
                Limit::Right => jobs[next].arrival_time <= t,
                Limit::Left => jobs[next].arrival_time < t,
            }
        {
            field.advance_and_apply(&jobs[next])?;
            next += 1;
        }
        field.advance_to(t)?;
        snapshots.push(field.snapshot());
    }
    Ok(Trajectory {
        snapshots,
        boundary_contact: field.boundary_contact(),
    })
}

/// Right-continuous `W(t, x)` at arbitrary probes, returned in input order.
pub fn probe<S: Scalar>(realization: &Realization<S>, probes: &[(S, Site)]) -> Result<Vec<S>> {
    let mut order: Vec<usize> = (0..probes.len()).collect();
    order.sort_by(|&a, &b| probes[a].0.partial_cmp(&probes[b].0).expect("finite times"));
    let times: Vec<S> = order.iter().map(|&i| probes[i].0).collect();
    check_sorted(&times, realization.horizon())?;
    let mut field = WorkloadField::new(realization.dimension(), realization.window());
    let jobs = realization.jobs();
    let mut next = 0;
    let mut out = vec![S::zero(); probes.len()];
    for &i in &order {
        let (t, ref site) = probes[i];
        while next < jobs.len() && jobs[next].arrival_time <= t {
            field.advance_and_apply(&jobs[next])?;
            next += 1;
        }
        field.advance_to(t)?;
        out[i] = field
            .value(site)
            .ok_or_else(|| DynamicsError::Argument(format!("site {site:?} outside the field")))?;
    }
    Ok(out)
}
