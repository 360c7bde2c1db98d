mod common;

use hailsim_core::distributions::{DiscreteScales, IndependentPareto, RegionIvCoupled};
use hailsim_core::estimators::stats::mann_whitney_greater;
use hailsim_core::model::influence_subset;
use hailsim_core::scales::ScaleSequences;
use hailsim_core::{critical_exponents, sample_realization, ModelParams, SeedInfo, SizeDistribution, Window};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(observed: &[f64], expected: &[f64]) -> f64 {
    let stat: f64 = observed.iter().zip(expected).map(|(o, e)| (o - e) * (o - e) / e).sum();
    ChiSquared::new((observed.len() - 1) as f64).unwrap().sf(stat)
}

/// Poisson probabilities by the recursion `p_{k+1} = p_k · m / (k + 1)`.
fn poisson_pmf(mean: f64, upto: usize) -> Vec<f64> {
    let mut p = vec![(-mean).exp()];
    for k in 0..upto {
        p.push(p[k] * mean / (k + 1) as f64);
    }
    p
}

#[test]
fn fixed_window_counts_are_poisson_and_centers_uniform() {
    let params = ModelParams {
        dimension: 1,
        lambda: 0.5,
        horizon: 2.0,
    };
    let window = Window::fixed(4);
    let dist = SizeDistribution::fixed(1.0, 1.0).unwrap();
    let trials = 4000;
    let mut counts = [0.0; 13];
    let mut sites = vec![0.0; 9];
    for trial in 0..trials {
        let r = sample_realization(&params, &dist, &window, SeedInfo { master_seed: 61, trial }).unwrap();
        counts[r.len().min(12)] += 1.0;
        for j in r.jobs() {
            sites[(j.center.coords()[0] + 4) as usize] += 1.0;
            assert!(j.arrival_time >= 0.0 && j.arrival_time <= 2.0);
        }
    }
    // Mean count 0.5 · 9 · 2 = 9; bins 0..=4 and >= 12 are pooled.
    let pmf = poisson_pmf(9.0, 12);
    let mut obs = vec![counts[..=4].iter().sum::<f64>()];
    let mut exp = vec![pmf[..=4].iter().sum::<f64>() * trials as f64];
    for k in 5..12 {
        obs.push(counts[k]);
        exp.push(pmf[k] * trials as f64);
    }
    obs.push(counts[12]);
    exp.push((1.0 - pmf[..12].iter().sum::<f64>()) * trials as f64);
    assert!(chi_square_p(&obs, &exp) > 1e-3);
    let total: f64 = sites.iter().sum();
    assert!(chi_square_p(&sites, &[total / 9.0; 9]) > 1e-3);
}

#[test]
fn adaptive_sampling_matches_the_fixed_window_influence_set() {
    let scales = ScaleSequences::explicit(0.5, 3.0, 1, &[2.0, 6.0], &[1.0, 4.0], None).unwrap();
    let dist = SizeDistribution::DiscreteScales(DiscreteScales::new(scales, 1.0, 1.0, 8).unwrap());
    let params = ModelParams {
        dimension: 1,
        lambda: 0.3,
        horizon: 6.0,
    };
    let (mut fixed, mut adaptive) = (Vec::new(), Vec::new());
    for trial in 0..600 {
        let f = sample_realization(&params, &dist, &Window::fixed(60), SeedInfo { master_seed: 67, trial }).unwrap();
        fixed.push(influence_subset(&f).len() as f64);
        let a = sample_realization(&params, &dist, &Window::adaptive(60), SeedInfo { master_seed: 71, trial }).unwrap();
        adaptive.push(a.len() as f64);
    }
    assert!(mann_whitney_greater(&fixed, &adaptive) > 1e-3);
    assert!(mann_whitney_greater(&adaptive, &fixed) > 1e-3);
}

#[test]
fn pareto_tails_match_their_exponents() {
    let p = IndependentPareto::new(0.5, 1.5, 1).unwrap();
    let dist = SizeDistribution::IndependentPareto(p.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(73);
    let n = 40000;
    let draws: Vec<(f64, f64)> = (0..n).map(|_| dist.sample_size(&mut rng)).collect();
    for (r, s) in [(2.0, 2.0), (5.0, 3.0)] {
        let pr = draws.iter().filter(|d| d.0 > r).count() as f64 / n as f64;
        let ps = draws.iter().filter(|d| d.1 > s).count() as f64 / n as f64;
        let er = f64::powf(r, -1.5);
        let es = f64::powf(s, -2.5);
        assert!((pr - er).abs() < 4.0 * (er * (1.0 - er) / n as f64).sqrt(), "{pr} vs {er}");
        assert!((ps - es).abs() < 4.0 * (es * (1.0 - es) / n as f64).sqrt(), "{ps} vs {es}");
        assert_eq!(p.radius_tail(r), er);
    }
    assert_eq!(critical_exponents(&dist), (0.5, 1.5));
}

#[test]
fn discrete_scale_weights_follow_the_power_law() {
    let scales = ScaleSequences::explicit(0.5, 3.0, 1, &[8.0, 64.0], &[4.0, 32.0], None).unwrap();
    let ds = DiscreteScales::new(scales, 1.0, 1.0, 8).unwrap();
    // Explicit scales have no tail: weights 8^{-1.5}, 64^{-1.5}.
    let w = [8f64.powf(-1.5), 64f64.powf(-1.5)];
    let z = w[0] + w[1];
    for (a, wi) in ds.spatial.iter().zip(w) {
        assert!((a.prob - wi / z).abs() < 1e-14);
    }
    let v = [4f64.powf(-4.0), 32f64.powf(-4.0)];
    let z = v[0] + v[1];
    assert!((ds.temporal[1].prob - v[1] / z).abs() < 1e-14);
    // Realized constant: max over atoms of P · value^{exponent} = 1/z for the spatial atoms.
    assert!((ds.c1_realized - 1.0 / (w[0] + w[1])).abs() < 1e-9 * ds.c1_realized);
}

#[test]
fn coupled_atoms_follow_the_closed_form() {
    let law = RegionIvCoupled::new(0.5, 1.2, 1, 6).unwrap();
    let gamma: f64 = 1.5 * 2.2;
    let c = 1.0 / (1..200).map(|i| (-gamma * i as f64).exp2()).sum::<f64>();
    assert!((law.c - c).abs() < 1e-12 * c);
    for (i, a) in law.atoms.iter().enumerate().take(5) {
        let i = (i + 1) as f64;
        assert!((a.prob - c * (-gamma * i).exp2()).abs() < 1e-15);
        assert_eq!(a.radius, (2.2 * i).exp2());
        assert_eq!(a.duration, (1.5 * i).exp2());
    }
    let total: f64 = law.atoms.iter().map(|a| a.prob).sum();
    assert!((total - 1.0).abs() < 1e-12);
    // Partial sums of P_i · R_i^{1 + a} settle iff a < alpha.
    let partial = |a: f64, m: usize| -> f64 {
        (1..=m).map(|i| law.class_prob(i) * law.sizes(i).0.powf(1.0 + a)).sum()
    };
    assert!(partial(0.2, 150) / partial(0.2, 100) < 1.0 + 1e-9);
    assert!(partial(0.6, 150) / partial(0.6, 100) > 2.0);
}
