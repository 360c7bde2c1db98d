//! Jobs, realizations and exact marked-Poisson sampling of finite job streams.

mod lattice;
mod sampling;
mod text;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub use lattice::{ball, reach_of, Ball, BoxRegion, BoxSites, Site};
pub use sampling::{
    derive_seed, influence_subset, sample_realization, touches_window_edge, trial_rng, SEED_RULE_ID,
};

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("site has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("job at {time} lies beyond the horizon {horizon}")]
    BeyondHorizon { time: String, horizon: String },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// One job: arrival time, center, l∞ radius and temporal size.
#[derive(Clone, Debug, PartialEq)]
pub struct Job<S: Scalar = f64> {
    pub arrival_time: S,
    pub center: Site,
    pub radius: S,
    pub duration: S,
}

impl<S: Scalar> Job<S> {
    pub fn new(arrival_time: S, center: Site, radius: S, duration: S) -> Result<Self> {
        if !(arrival_time >= S::zero()) || !arrival_time.is_finite() {
            return Err(ModelError::InvalidParameter(format!("arrival_time = {arrival_time}")));
        }
        if !(radius >= S::zero()) {
            return Err(ModelError::InvalidParameter(format!("radius = {radius}")));
        }
        if !(duration > S::zero()) || !duration.is_finite() {
            return Err(ModelError::InvalidParameter(format!("duration = {duration}")));
        }
        Ok(Job {
            arrival_time,
            center,
            radius,
            duration,
        })
    }

    pub fn ball(&self) -> Ball<S> {
        Ball {
            center: self.center.clone(),
            radius: self.radius,
        }
    }

    pub fn reach(&self) -> i64 {
        reach_of(self.radius)
    }

    pub fn footprint(&self) -> BoxRegion {
        BoxRegion::around(&self.center, self.reach())
    }

    pub fn covers(&self, site: &Site) -> bool {
        self.ball().contains(site)
    }

    /// Deterministic total order: time, then center, radius, duration.
    pub fn replay_cmp(&self, other: &Self) -> Ordering {
        self.arrival_time
            .partial_cmp(&other.arrival_time)
            .unwrap_or(Ordering::Equal)
            .then_with(|| self.center.cmp(&other.center))
            .then_with(|| self.radius.partial_cmp(&other.radius).unwrap_or(Ordering::Equal))
            .then_with(|| self.duration.partial_cmp(&other.duration).unwrap_or(Ordering::Equal))
    }

    pub fn cast<T: Scalar>(&self) -> Job<T> {
        Job {
            arrival_time: T::of(self.arrival_time.as_f64()),
            center: self.center.clone(),
            radius: T::of(self.radius.as_f64()),
            duration: T::of(self.duration.as_f64()),
        }
    }
}

/// True iff both `a` and `b` lie in the job's ball. With `a == b` this is the
/// test for a path sitting under the job.
pub fn intersects<S: Scalar>(job: &Job<S>, a: &Site, b: &Site) -> bool {
    let ball = job.ball();
    ball.contains(a) && ball.contains(b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowMode {
    /// Centers sampled uniformly on `[-half_width, half_width]^d`.
    Fixed,
    /// Only jobs that can meet the origin's domain of influence are generated.
    AdaptiveInfluence,
}

impl WindowMode {
    pub fn name(self) -> &'static str {
        match self {
            WindowMode::Fixed => "fixed",
            WindowMode::AdaptiveInfluence => "adaptive-influence",
        }
    }
}

/// Spatial truncation of the infinite lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub half_width: i64,
    pub mode: WindowMode,
}

impl Window {
    pub fn fixed(half_width: i64) -> Self {
        Window {
            half_width,
            mode: WindowMode::Fixed,
        }
    }

    pub fn adaptive(half_width: i64) -> Self {
        Window {
            half_width,
            mode: WindowMode::AdaptiveInfluence,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width < 1 {
            return Err(ModelError::InvalidParameter(format!(
                "window.half_width = {} (must be >= 1)",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn region(&self, dim: usize) -> BoxRegion {
        BoxRegion::centered(dim, self.half_width)
    }

    /// Number of sites in the window.
    pub fn volume(&self, dim: usize) -> u128 {
        self.region(dim).volume()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub dimension: usize,
    pub lambda: f64,
    pub horizon: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.dimension < 1 {
            return Err(ModelError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(ModelError::InvalidParameter(format!("lambda = {} (must be >= 0)", self.lambda)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(ModelError::InvalidParameter(format!(
                "horizon = {} (must be > 0)",
                self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SeedInfo {
    pub master_seed: u64,
    pub trial: u64,
}

/// How the job stream was truncated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SamplingNote {
    pub mode: WindowMode,
    pub half_width: i64,
    /// Adaptive sampling wanted candidates beyond the window cap.
    pub boundary_contact: bool,
    /// Candidates discarded by the adaptive thinning step.
    pub rejected: u64,
}

impl SamplingNote {
    pub fn for_window(window: &Window) -> Self {
        SamplingNote {
            mode: window.mode,
            half_width: window.half_width,
            boundary_contact: false,
            rejected: 0,
        }
    }
}

/// A finite, replayable, time-sorted job stream.
#[derive(Clone, Debug, PartialEq)]
pub struct Realization<S: Scalar = f64> {
    dimension: usize,
    horizon: S,
    jobs: Vec<Job<S>>,
    pub seed_info: SeedInfo,
    pub note: SamplingNote,
}

impl<S: Scalar> Realization<S> {
    /// Validates dimensions and horizon and sorts the jobs into replay order.
    pub fn new(
        dimension: usize,
        horizon: S,
        mut jobs: Vec<Job<S>>,
        seed_info: SeedInfo,
        note: SamplingNote,
    ) -> Result<Self> {
        if dimension < 1 {
            return Err(ModelError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(horizon > S::zero()) {
            return Err(ModelError::InvalidParameter(format!("horizon = {horizon}")));
        }
        for job in &jobs {
            if job.center.dim() != dimension {
                return Err(ModelError::DimensionMismatch {
                    expected: dimension,
                    got: job.center.dim(),
                });
            }
            if job.arrival_time > horizon {
                return Err(ModelError::BeyondHorizon {
                    time: job.arrival_time.to_string(),
                    horizon: horizon.to_string(),
                });
            }
        }
        jobs.sort_by(|a, b| a.replay_cmp(b));
        Ok(Realization {
            dimension,
            horizon,
            jobs,
            seed_info,
            note,
        })
    }

    /// Hand-built realization on a fixed window wide enough for every job.
    pub fn from_jobs(dimension: usize, horizon: S, jobs: Vec<Job<S>>) -> Result<Self> {
        let half = jobs
            .iter()
            .map(|j| j.center.norm() as i64)
            .max()
            .unwrap_or(0)
            .max(1);
        Self::new(
            dimension,
            horizon,
            jobs,
            SeedInfo::default(),
            SamplingNote::for_window(&Window::fixed(half)),
        )
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn horizon(&self) -> S {
        self.horizon
    }

    pub fn jobs(&self) -> &[Job<S>] {
        &self.jobs
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn window(&self) -> Window {
        Window {
            half_width: self.note.half_width,
            mode: self.note.mode,
        }
    }

    /// Largest integer reach among the jobs.
    pub fn max_reach(&self) -> i64 {
        self.jobs.iter().map(|j| j.reach()).max().unwrap_or(0)
    }

    /// Same stream with every job mapped through `f` (re-sorted).
    pub fn map_jobs(&self, f: impl FnMut(&Job<S>) -> Job<S>) -> Result<Self> {
        Self::new(
            self.dimension,
            self.horizon,
            self.jobs.iter().map(f).collect(),
            self.seed_info,
            self.note.clone(),
        )
    }

    /// Keeps the jobs accepted by `keep`, preserving metadata.
    pub fn filter_jobs(&self, mut keep: impl FnMut(&Job<S>) -> bool) -> Self {
        Realization {
            dimension: self.dimension,
            horizon: self.horizon,
            jobs: self.jobs.iter().filter(|j| keep(j)).cloned().collect(),
            seed_info: self.seed_info,
            note: self.note.clone(),
        }
    }

    pub fn cast<T: Scalar>(&self) -> Realization<T> {
        Realization {
            dimension: self.dimension,
            horizon: T::of(self.horizon.as_f64()),
            jobs: self.jobs.iter().map(Job::cast).collect(),
            seed_info: self.seed_info,
            note: self.note.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        text::write_realization(self)
    }

    pub fn from_text(src: &str) -> Result<Self> {
        text::read_realization(src)
    }
}
