//! Exact simulation of the Poisson hail growth model on Z^d: sampling of job
//! streams, FCFS workload dynamics, admissible-path programs, scale sequences
//! and Monte Carlo estimators.
//!
//! Simulation types are generic over the scalar used for times, radii and
//! workloads (`f32` or `f64`, default `f64`); the `*64`/`*32` aliases below
//! name the concrete instantiations.

mod arena;
pub mod distributions;
pub mod dynamics;
pub mod estimators;
pub mod model;
pub mod paths;
pub mod scalar;
pub mod scales;

pub use distributions::{classify_region, critical_exponents, Region, SizeClasses, SizeDistribution};
pub use dynamics::{evolve, probe, Limit, Snapshot, Trajectory, WorkloadField};
pub use estimators::{BoundaryPolicy, EstimatorError, TrialConfig};
pub use model::{
    ball, intersects, sample_realization, BoxRegion, Job, ModelError, ModelParams, Realization, SeedInfo, Site,
    Window, WindowMode,
};
pub use paths::{path_score, PathCertificate};
pub use scalar::Scalar;
pub use scales::{build_scales, check_conditions, locate_time, ScaleParams, ScaleSequences};

pub type Job64 = Job<f64>;
pub type Job32 = Job<f32>;
pub type Realization64 = Realization<f64>;
pub type Realization32 = Realization<f32>;
pub type WorkloadField64 = WorkloadField<f64>;
pub type WorkloadField32 = WorkloadField<f32>;
pub type PathCertificate64 = PathCertificate<f64>;
pub type PathCertificate32 = PathCertificate<f32>;
