#![allow(dead_code)]

use hailsim_core::distributions::{DiscreteScales, IndependentPareto, RegionIvCoupled};
use hailsim_core::scales::ScaleSequences;
use hailsim_core::{sample_realization, ModelParams, Realization, SeedInfo, Site, SizeDistribution, Window};
use rand::Rng;

pub fn toy_scales(d: usize) -> ScaleSequences {
    ScaleSequences::explicit(0.5, 3.0 * d as f64, d, &[1.0, 3.0], &[1.0, 4.0], None).unwrap()
}

pub fn toy_discrete(d: usize) -> SizeDistribution {
    SizeDistribution::DiscreteScales(DiscreteScales::new(toy_scales(d), 1.0, 1.0, 8).unwrap())
}

pub fn random_distribution<R: Rng>(d: usize, rng: &mut R) -> SizeDistribution {
    match rng.random_range(0..4) {
        0 => SizeDistribution::fixed(rng.random_range(0.0..3.0), rng.random_range(0.2..3.0)).unwrap(),
        1 => SizeDistribution::IndependentPareto(
            IndependentPareto::with_minima(rng.random_range(0.3..2.0), rng.random_range(0.3..2.0), 0.5, 0.5, d)
                .unwrap(),
        ),
        2 => toy_discrete(d),
        _ => SizeDistribution::RegionIvCoupled(RegionIvCoupled::new(0.5, 1.2, d, 2).unwrap()),
    }
}

/// A sampled instance with at most `max_jobs` jobs: random dimension, rate up
/// to 2 and a small window.
pub fn random_instance<R: Rng>(rng: &mut R, max_jobs: usize) -> Realization {
    let d = rng.random_range(1..=2);
    let dist = random_distribution(d, rng);
    random_instance_with(rng, d, &dist, max_jobs)
}

pub fn random_instance_with<R: Rng>(rng: &mut R, d: usize, dist: &SizeDistribution, max_jobs: usize) -> Realization {
    let lambda = rng.random_range(0.05..=2.0);
    let half = if d == 1 { rng.random_range(2..=6) } else { rng.random_range(1..=3) };
    let window = Window::fixed(half);
    let target = rng.random_range(2.0..=max_jobs as f64);
    let horizon = target / (lambda * window.volume(d) as f64);
    let params = ModelParams {
        dimension: d,
        lambda,
        horizon,
    };
    loop {
        let seed = SeedInfo {
            master_seed: rng.random(),
            trial: 0,
        };
        let r = sample_realization(&params, dist, &window, seed).unwrap();
        if r.len() <= max_jobs {
            return r;
        }
    }
}

pub fn random_site<R: Rng>(r: &Realization, rng: &mut R) -> Site {
    let h = r.window().half_width;
    Site::new((0..r.dimension()).map(|_| rng.random_range(-h..=h)))
}

/// Probe times: uniform, with every third one pinned to an arrival time.
pub fn random_time<R: Rng>(r: &Realization, rng: &mut R) -> f64 {
    if !r.is_empty() && rng.random_range(0..3) == 0 {
        r.jobs()[rng.random_range(0..r.len())].arrival_time
    } else {
        rng.random_range(0.0..=r.horizon())
    }
}
