//! Seed derivation and exact sampling of finite job streams.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};

use super::{
    BoxRegion, Job, ModelError, ModelParams, Realization, Result, SamplingNote, SeedInfo, Site, Window,
    WindowMode,
};
use crate::arena::Arena;
use crate::distributions::SizeDistribution;
use crate::scalar::Scalar;

/// Identifies the per-trial seed derivation; recorded in run manifests.
pub const SEED_RULE_ID: &str = "splitmix64-pair/chacha8-v1";

/// Mean job count above which fixed-window sampling refuses to run.
const MAX_MEAN_COUNT: f64 = 5.0e7;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Stable per-trial seed from `(master_seed, trial)`.
pub fn derive_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ trial.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

pub fn trial_rng(master_seed: u64, trial: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master_seed, trial))
}

fn dist_dimension(dist: &SizeDistribution) -> Option<usize> {
    match dist {
        SizeDistribution::IndependentPareto(p) => Some(p.d),
        SizeDistribution::DiscreteScales(s) => Some(s.scales.d),
        SizeDistribution::RegionIvCoupled(c) => Some(c.d),
        SizeDistribution::Fixed { .. } => None,
    }
}

fn uniform_site<R: Rng>(region: &BoxRegion, rng: &mut R) -> Site {
    Site::new((0..region.dim()).map(|i| rng.random_range(region.lo.coords()[i]..=region.hi.coords()[i])))
}

/// Sample a realization. Pure function of its arguments.
pub fn sample_realization(
    params: &ModelParams,
    dist: &SizeDistribution,
    window: &Window,
    seed: SeedInfo,
) -> Result<Realization> {
    params.validate()?;
    window.validate()?;
    if let Some(d) = dist_dimension(dist) {
        if d != params.dimension {
            return Err(ModelError::Configuration(format!(
                "distribution is for dimension {d}, model has dimension {}",
                params.dimension
            )));
        }
    }
    let mut rng = trial_rng(seed.master_seed, seed.trial);
    match window.mode {
        WindowMode::Fixed => sample_fixed(params, dist, window, seed, &mut rng),
        WindowMode::AdaptiveInfluence => sample_adaptive(params, dist, window, seed, &mut rng),
    }
}

fn sample_fixed(
    params: &ModelParams,
    dist: &SizeDistribution,
    window: &Window,
    seed: SeedInfo,
    rng: &mut ChaCha8Rng,
) -> Result<Realization> {
    let region = window.region(params.dimension);
    let mean = params.lambda * region.volume() as f64 * params.horizon;
    if !(mean <= MAX_MEAN_COUNT) {
        return Err(ModelError::Configuration(format!(
            "mean job count {mean} exceeds {MAX_MEAN_COUNT}; shrink the window, rate or horizon"
        )));
    }
    let count = if mean > 0.0 {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as usize
    } else {
        0
    };
    let mut jobs = Vec::with_capacity(count);
    for _ in 0..count {
        let t = rng.random_range(0.0..=params.horizon);
        let center = uniform_site(&region, rng);
        let (r, tau) = dist.sample_size(rng);
        jobs.push(Job::new(t, center, r, tau)?);
    }
    Realization::new(
        params.dimension,
        params.horizon,
        jobs,
        seed,
        SamplingNote::for_window(window),
    )
}

/// Sites reachable from the origin, stored on the window (clamping onto the
/// window keeps every intersection with balls centered inside it), plus the
/// hull of the full footprints.
struct Reach {
    marks: Arena<f64>,
    hull: BoxRegion,
}

impl Reach {
    fn origin(dim: usize, window: &Window) -> Self {
        let b = BoxRegion::point(&Site::origin(dim));
        let mut marks = Arena::new(window.region(dim).hull(&b), f64::NEG_INFINITY);
        marks.assign(&b, 0.0);
        Reach { marks, hull: b }
    }

    fn meets<S: Scalar>(&mut self, job: &Job<S>) -> bool {
        let fp = job.footprint();
        fp.intersects(&self.hull) && self.marks.max_in(&fp) > f64::NEG_INFINITY
    }

    fn absorb<S: Scalar>(&mut self, job: &Job<S>) {
        let fp = job.footprint();
        self.marks.assign(&fp, 0.0);
        self.hull = self.hull.hull(&fp);
    }
}

/// Jobs whose ball meets the evolving domain of influence of the origin.
pub fn influence_subset<S: Scalar>(realization: &Realization<S>) -> Realization<S> {
    let mut reach = Reach::origin(realization.dimension(), &realization.window());
    realization.filter_jobs(|job| {
        if reach.meets(job) {
            reach.absorb(job);
            true
        } else {
            false
        }
    })
}

/// True when the origin's domain of influence (clipped to the window) reaches
/// the window edge, or adaptive sampling was cut by the window cap. Jobs
/// outside the window could then have changed the result.
pub fn touches_window_edge<S: Scalar>(realization: &Realization<S>) -> bool {
    let window = realization.window();
    if realization.note.boundary_contact {
        return true;
    }
    let cap = window.region(realization.dimension());
    let mut hull = BoxRegion::point(&Site::origin(realization.dimension()));
    for job in influence_subset(realization).jobs() {
        hull = hull.hull(&job.footprint().intersection(&cap));
    }
    hull.touches_edge_of(window.half_width)
}

fn sample_adaptive(
    params: &ModelParams,
    dist: &SizeDistribution,
    window: &Window,
    seed: SeedInfo,
    rng: &mut ChaCha8Rng,
) -> Result<Realization> {
    let classes = dist.radius_classes().ok_or_else(|| {
        ModelError::Configuration(format!(
            "adaptive-influence sampling needs discrete radius classes; '{}' has none",
            dist.name()
        ))
    })?;
    let dim = params.dimension;
    let cap = window.region(dim);
    let mut note = SamplingNote::for_window(window);
    let mut reach = Reach::origin(dim, window);
    let mut jobs = Vec::new();
    let mut now = 0.0f64;

    loop {
        // Candidate centers per class: the reach hull dilated by the class reach.
        let mut regions = Vec::with_capacity(classes.len());
        let mut rates = Vec::with_capacity(classes.len());
        for atom in &classes {
            let wanted = reach.hull.dilate(super::reach_of(atom.value));
            if !cap.contains_box(&wanted) {
                note.boundary_contact = true;
            }
            let region = wanted.intersection(&cap);
            rates.push(params.lambda * atom.prob * region.volume() as f64);
            regions.push(region);
        }
        let total: f64 = rates.iter().sum();
        if !(total > 0.0) {
            break;
        }
        // Rates only change on acceptance, so the clock restarts memorylessly.
        now += Exp::new(total).expect("positive rate").sample(rng);
        if now > params.horizon {
            break;
        }
        let mut pick = rng.random_range(0.0..total);
        let mut k = rates.len() - 1;
        for (i, r) in rates.iter().enumerate() {
            if pick < *r {
                k = i;
                break;
            }
            pick -= r;
        }
        let center = uniform_site(&regions[k], rng);
        let radius = classes[k].value;
        let duration = dist.sample_duration_given_class(k, rng);
        let job = Job::new(now, center, radius, duration)?;
        if reach.meets(&job) {
            reach.absorb(&job);
            jobs.push(job);
        } else {
            note.rejected += 1;
        }
    }
    Realization::new(dim, params.horizon, jobs, seed, note)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(lambda: f64) -> ModelParams {
        ModelParams {
            dimension: 1,
            lambda,
            horizon: 1.0,
        }
    }

    #[test]
    fn same_seed_same_realization() {
        let dist = SizeDistribution::fixed(1.0, 1.0).unwrap();
        let seed = SeedInfo {
            master_seed: 11,
            trial: 4,
        };
        let a = sample_realization(&params(2.0), &dist, &Window::fixed(5), seed).unwrap();
        let b = sample_realization(&params(2.0), &dist, &Window::fixed(5), seed).unwrap();
        assert_eq!(a.to_text(), b.to_text());
        let other = SeedInfo { trial: 5, ..seed };
        let c = sample_realization(&params(2.0), &dist, &Window::fixed(5), other).unwrap();
        assert_ne!(a.to_text(), c.to_text());
    }

    #[test]
    fn negative_rate_is_rejected() {
        let dist = SizeDistribution::fixed(1.0, 1.0).unwrap();
        let r = sample_realization(&params(-1.0), &dist, &Window::fixed(1), SeedInfo::default());
        assert!(matches!(r, Err(ModelError::InvalidParameter(_))));
        let empty = sample_realization(&params(0.0), &dist, &Window::adaptive(3), SeedInfo::default());
        assert!(empty.unwrap().is_empty());
    }

    #[test]
    fn adaptive_needs_radius_classes() {
        let dist = SizeDistribution::IndependentPareto(
            crate::distributions::IndependentPareto::new(1.0, 1.0, 1).unwrap(),
        );
        let r = sample_realization(&params(1.0), &dist, &Window::adaptive(5), SeedInfo::default());
        assert!(matches!(r, Err(ModelError::Configuration(_))));
    }

    #[test]
    fn adaptive_jobs_all_meet_the_reach() {
        let dist = SizeDistribution::fixed(2.0, 1.0).unwrap();
        let p = ModelParams {
            dimension: 2,
            lambda: 0.3,
            horizon: 20.0,
        };
        for trial in 0..20 {
            let r = sample_realization(&p, &dist, &Window::adaptive(30), SeedInfo { master_seed: 1, trial }).unwrap();
            assert_eq!(influence_subset(&r).len(), r.len());
        }
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(0, 0), derive_seed(0, 1));
        assert_ne!(derive_seed(0, 1), derive_seed(1, 0));
        assert_eq!(derive_seed(42, 7), derive_seed(42, 7));
    }
}
