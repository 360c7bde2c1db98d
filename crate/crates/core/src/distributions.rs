//! Job-size laws for the pair (radius, duration).

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scales::ScaleSequences;

#[derive(Debug, Error, PartialEq)]
pub enum DistributionError {
    #[error("invalid distribution parameter: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, DistributionError>;

/// Default truncation index for discrete supports.
pub const DEFAULT_TRUNCATION: usize = 8;

/// A probability atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub value: f64,
    pub prob: f64,
}

/// Draw an index from atom probabilities (inverse transform).
fn draw_index<R: Rng + ?Sized>(atoms: &[Atom], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, a) in atoms.iter().enumerate() {
        acc += a.prob;
        if u < acc {
            return i;
        }
    }
    atoms.len() - 1
}

/// log2(Σ 2^{x_i}).
fn log2_sum(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

/// Independent power tails `P(R > r) = (r/r_min)^{-(d+α)}`, `P(τ > s) = (s/τ_min)^{-(1+β)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependentPareto {
    pub alpha: f64,
    pub beta: f64,
    pub r_min: f64,
    pub tau_min: f64,
    pub d: usize,
}

impl IndependentPareto {
    pub fn new(alpha: f64, beta: f64, d: usize) -> Result<Self> {
        Self::with_minima(alpha, beta, 1.0, 1.0, d)
    }

    pub fn with_minima(alpha: f64, beta: f64, r_min: f64, tau_min: f64, d: usize) -> Result<Self> {
        let bad = |m: String| Err(DistributionError::Invalid(m));
        if d < 1 {
            return bad("d >= 1".into());
        }
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return bad(format!("alpha = {alpha} (must be >= 0)"));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return bad(format!("beta = {beta} (must be >= 0)"));
        }
        if !(r_min > 0.0) || !r_min.is_finite() {
            return bad(format!("r_min = {r_min} (must be > 0)"));
        }
        if !(tau_min > 0.0) || !tau_min.is_finite() {
            return bad(format!("tau_min = {tau_min} (must be > 0)"));
        }
        Ok(IndependentPareto {
            alpha,
            beta,
            r_min,
            tau_min,
            d,
        })
    }

    fn radius_law(&self) -> Pareto<f64> {
        Pareto::new(self.r_min, self.d as f64 + self.alpha).expect("validated")
    }

    fn duration_law(&self) -> Pareto<f64> {
        Pareto::new(self.tau_min, 1.0 + self.beta).expect("validated")
    }

    /// `P(R > r)`.
    pub fn radius_tail(&self, r: f64) -> f64 {
        if r <= self.r_min {
            1.0
        } else {
            (r / self.r_min).powf(-(self.d as f64 + self.alpha))
        }
    }

    pub fn duration_tail(&self, s: f64) -> f64 {
        if s <= self.tau_min {
            1.0
        } else {
            (s / self.tau_min).powf(-(1.0 + self.beta))
        }
    }
}

/// Discrete supports on the scale sequences:
/// `P(R = S_i) ∝ min(c1 S_i^{-(d+α)}, 1)`, `P(τ = T_j) ∝ min(c2 T_j^{-(1+β)}, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScales {
    pub scales: ScaleSequences,
    pub c1: f64,
    pub c2: f64,
    pub spatial: Vec<Atom>,
    pub temporal: Vec<Atom>,
    /// Realized constants after normalization.
    pub c1_realized: f64,
    pub c2_realized: f64,
    /// Mass beyond the truncation folded into the last atom.
    pub spatial_fold: f64,
    pub temporal_fold: f64,
}

/// Normalized atoms from log2 values and tail exponent, with tail folding.
fn scale_atoms(
    log2_values: &[f64],
    tail_log2_values: &[f64],
    c: f64,
    exponent: f64,
) -> Result<(Vec<Atom>, f64, f64)> {
    let weight = |lv: f64| (c.log2() - exponent * lv).min(0.0);
    let kept: Vec<f64> = log2_values.iter().map(|&lv| weight(lv)).collect();
    let tail: Vec<f64> = tail_log2_values.iter().map(|&lv| weight(lv)).collect();
    let log2_tail = log2_sum(&tail);
    let mut all = kept.clone();
    all.extend_from_slice(&tail);
    let log2_z = log2_sum(&all);
    let fold = (log2_tail - log2_z).exp2();
    let mut atoms = Vec::with_capacity(kept.len());
    for (i, (&lv, &lw)) in log2_values.iter().zip(&kept).enumerate() {
        let value = lv.exp2();
        if !value.is_finite() {
            return Err(DistributionError::Invalid(format!(
                "scale 2^{lv} at index {} does not fit in a double",
                i + 1
            )));
        }
        let mut prob = (lw - log2_z).exp2();
        if i + 1 == kept.len() {
            prob += fold;
        }
        atoms.push(Atom { value, prob });
    }
    let total: f64 = atoms.iter().map(|a| a.prob).sum();
    for a in &mut atoms {
        a.prob /= total;
    }
    // Smallest c' with P(X = v_i) <= c' v_i^{-exponent} for every atom.
    let log2_c = atoms
        .iter()
        .zip(log2_values)
        .map(|(a, &lv)| a.prob.log2() + exponent * lv)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((atoms, log2_c.exp2(), fold))
}

impl DiscreteScales {
    /// Atoms at `S_1..S_m`, `T_1..T_m` with `m = min(truncation, i_max)`; mass of
    /// available closed-form scales beyond `m` folds into the last atom.
    pub fn new(scales: ScaleSequences, c1: f64, c2: f64, truncation: usize) -> Result<Self> {
        if !(c1 > 0.0) || !(c2 > 0.0) {
            return Err(DistributionError::Invalid(format!("c1 = {c1}, c2 = {c2} (must be > 0)")));
        }
        if truncation < 1 {
            return Err(DistributionError::Invalid("truncation >= 1".into()));
        }
        let m = truncation.min(scales.i_max);
        let collect = |f: &dyn Fn(usize) -> Option<f64>, range: std::ops::Range<usize>| -> Vec<f64> {
            range.map_while(f).collect()
        };
        let ls = collect(&|i| scales.log2_s(i), 1..m + 1);
        let lt = collect(&|i| scales.log2_t(i), 1..m + 1);
        let ls_tail = collect(&|i| scales.log2_s(i), m + 1..usize::MAX);
        let lt_tail = collect(&|i| scales.log2_t(i), m + 1..usize::MAX);
        let d = scales.d as f64;
        let (spatial, c1r, sf) = scale_atoms(&ls, &ls_tail, c1, d + scales.alpha)?;
        let (temporal, c2r, tf) = scale_atoms(&lt, &lt_tail, c2, 1.0 + scales.beta)?;
        Ok(DiscreteScales {
            scales,
            c1,
            c2,
            spatial,
            temporal,
            c1_realized: c1r,
            c2_realized: c2r,
            spatial_fold: sf,
            temporal_fold: tf,
        })
    }
}

/// Coupled atoms `(R_i, τ_i) = (2^{(1+β)i}, 2^{(d+α)i})` with
/// `P = c 2^{-(d+α)(1+β)i}`, `i >= 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionIvCoupled {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    /// Normalizer of the untruncated series.
    pub c: f64,
    pub atoms: Vec<CoupledAtom>,
    pub fold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledAtom {
    pub radius: f64,
    pub duration: f64,
    pub prob: f64,
}

impl RegionIvCoupled {
    pub fn new(alpha: f64, beta: f64, d: usize, truncation: usize) -> Result<Self> {
        if d < 1 || truncation < 1 {
            return Err(DistributionError::Invalid("d >= 1 and truncation >= 1".into()));
        }
        if !(alpha >= 0.0) || !(beta >= 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(DistributionError::Invalid(format!(
                "alpha = {alpha}, beta = {beta} (must be >= 0)"
            )));
        }
        let gamma = (d as f64 + alpha) * (1.0 + beta);
        let c = gamma.exp2() - 1.0;
        // Σ_{i > m} c 2^{-γ i} = 2^{-γ m}.
        let fold = (-gamma * truncation as f64).exp2();
        let mut atoms: Vec<CoupledAtom> = (1..=truncation)
            .map(|i| {
                let i = i as f64;
                CoupledAtom {
                    radius: ((1.0 + beta) * i).exp2(),
                    duration: ((d as f64 + alpha) * i).exp2(),
                    prob: c * (-gamma * i).exp2(),
                }
            })
            .collect();
        if atoms.iter().any(|a| !a.radius.is_finite() || !a.duration.is_finite()) {
            return Err(DistributionError::Invalid("atom sizes overflow; lower the truncation".into()));
        }
        atoms.last_mut().expect("truncation >= 1").prob += fold;
        Ok(RegionIvCoupled {
            alpha,
            beta,
            d,
            c,
            atoms,
            fold,
        })
    }

    /// `(R_i, τ_i)` for any `i >= 0`.
    pub fn sizes(&self, i: usize) -> (f64, f64) {
        let i = i as f64;
        (((1.0 + self.beta) * i).exp2(), ((self.d as f64 + self.alpha) * i).exp2())
    }

    /// `P((R,τ) = (R_i,τ_i))` of the untruncated law, `i >= 1`.
    pub fn class_prob(&self, i: usize) -> f64 {
        self.c * (-(self.d as f64 + self.alpha) * (1.0 + self.beta) * i as f64).exp2()
    }

    /// Mean number of class-`i` jobs centered in `[-R_i/4, R_i/4]^d` during a
    /// time window of length `τ_i/4`: `c 2^{-(d+1)} 2^{i(d-αβ)}`.
    pub fn box_rate(&self, i: usize) -> f64 {
        let d = self.d as f64;
        self.c * (-(d + 1.0)).exp2() * (i as f64 * (d - self.alpha * self.beta)).exp2()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SizeDistribution {
    IndependentPareto(IndependentPareto),
    DiscreteScales(DiscreteScales),
    RegionIvCoupled(RegionIvCoupled),
    Fixed { radius: f64, duration: f64 },
}

impl SizeDistribution {
    pub fn fixed(radius: f64, duration: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() || !(duration > 0.0) || !duration.is_finite() {
            return Err(DistributionError::Invalid(format!(
                "fixed sizes radius = {radius}, duration = {duration}"
            )));
        }
        Ok(SizeDistribution::Fixed { radius, duration })
    }

    pub fn name(&self) -> &'static str {
        match self {
            SizeDistribution::IndependentPareto(_) => "independent-pareto",
            SizeDistribution::DiscreteScales(_) => "discrete-scales",
            SizeDistribution::RegionIvCoupled(_) => "region-iv-coupled",
            SizeDistribution::Fixed { .. } => "fixed",
        }
    }

    /// Draw `(radius, duration)`.
    pub fn sample_size<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match self {
            SizeDistribution::IndependentPareto(p) => {
                let r = p.radius_law().sample(rng);
                let t = p.duration_law().sample(rng);
                (r, t)
            }
            SizeDistribution::DiscreteScales(s) => {
                let r = s.spatial[draw_index(&s.spatial, rng)].value;
                let t = s.temporal[draw_index(&s.temporal, rng)].value;
                (r, t)
            }
            SizeDistribution::RegionIvCoupled(c) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for a in &c.atoms {
                    acc += a.prob;
                    if u < acc {
                        return (a.radius, a.duration);
                    }
                }
                let last = c.atoms.last().expect("non-empty");
                (last.radius, last.duration)
            }
            SizeDistribution::Fixed { radius, duration } => (*radius, *duration),
        }
    }

    /// Discrete radius classes `(radius, probability)`, if the law has them.
    pub fn radius_classes(&self) -> Option<Vec<Atom>> {
        match self {
            SizeDistribution::IndependentPareto(_) => None,
            SizeDistribution::DiscreteScales(s) => Some(s.spatial.clone()),
            SizeDistribution::RegionIvCoupled(c) => Some(
                c.atoms
                    .iter()
                    .map(|a| Atom {
                        value: a.radius,
                        prob: a.prob,
                    })
                    .collect(),
            ),
            SizeDistribution::Fixed { radius, .. } => Some(vec![Atom {
                value: *radius,
                prob: 1.0,
            }]),
        }
    }

    /// Discrete duration classes, if the law has them.
    pub fn duration_classes(&self) -> Option<Vec<Atom>> {
        match self {
            SizeDistribution::IndependentPareto(_) => None,
            SizeDistribution::DiscreteScales(s) => Some(s.temporal.clone()),
            SizeDistribution::RegionIvCoupled(c) => Some(
                c.atoms
                    .iter()
                    .map(|a| Atom {
                        value: a.duration,
                        prob: a.prob,
                    })
                    .collect(),
            ),
            SizeDistribution::Fixed { duration, .. } => Some(vec![Atom {
                value: *duration,
                prob: 1.0,
            }]),
        }
    }

    /// Duration given that the radius class `k` was drawn.
    pub fn sample_duration_given_class<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        match self {
            SizeDistribution::RegionIvCoupled(c) => c.atoms[k].duration,
            SizeDistribution::DiscreteScales(s) => s.temporal[draw_index(&s.temporal, rng)].value,
            SizeDistribution::Fixed { duration, .. } => *duration,
            SizeDistribution::IndependentPareto(p) => p.duration_law().sample(rng),
        }
    }

    /// Spatial/temporal scale lists used to classify jobs, when discrete.
    pub fn size_classes(&self) -> Option<SizeClasses> {
        Some(SizeClasses {
            spatial: self.radius_classes()?.iter().map(|a| a.value).collect(),
            temporal: self.duration_classes()?.iter().map(|a| a.value).collect(),
        })
    }
}

/// `(α, β)` with `E[R^{d+a}] < ∞` iff `a < α` and `E[τ^{1+b}] < ∞` iff `b < β`.
/// Bounded laws return `(+∞, +∞)`.
pub fn critical_exponents(dist: &SizeDistribution) -> (f64, f64) {
    match dist {
        SizeDistribution::IndependentPareto(p) => (p.alpha, p.beta),
        SizeDistribution::DiscreteScales(s) => (s.scales.alpha, s.scales.beta),
        SizeDistribution::RegionIvCoupled(c) => (c.alpha, c.beta),
        SizeDistribution::Fixed { .. } => (f64::INFINITY, f64::INFINITY),
    }
}

/// Sorted spatial and temporal class values of a discrete law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeClasses {
    pub spatial: Vec<f64>,
    pub temporal: Vec<f64>,
}

impl SizeClasses {
    pub fn from_scales(sc: &ScaleSequences) -> Option<Self> {
        Some(SizeClasses {
            spatial: sc.spatial_values()?,
            temporal: sc.temporal_values()?,
        })
    }

    /// 1-based spatial class of a radius.
    pub fn spatial_index(&self, radius: f64) -> Option<usize> {
        self.spatial.iter().position(|&s| s == radius).map(|k| k + 1)
    }

    pub fn temporal_index(&self, duration: f64) -> Option<usize> {
        self.temporal.iter().position(|&t| t == duration).map(|k| k + 1)
    }

    /// `S_n`.
    pub fn scale(&self, n: usize) -> Option<f64> {
        n.checked_sub(1).and_then(|k| self.spatial.get(k).copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    I,
    II,
    III,
    IV,
    V,
    Boundary,
    /// Negative exponents, not part of the phase diagram.
    Outside,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::I => "I",
            Region::II => "II",
            Region::III => "III",
            Region::IV => "IV",
            Region::V => "V",
            Region::Boundary => "boundary",
            Region::Outside => "outside",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Phase-diagram region of `(α, β)` in dimension `d`.
pub fn classify_region(alpha: f64, beta: f64, d: usize) -> Region {
    const TOL: f64 = 1e-12;
    let d = d as f64;
    if alpha.is_nan() || beta.is_nan() || alpha < 0.0 || beta < 0.0 {
        return Region::Outside;
    }
    let on = |a: f64, b: f64| (a - b).abs() <= TOL * (1.0 + b.abs());
    if on(alpha, 1.0) || on(beta, d) || on(alpha * beta, d) {
        return Region::Boundary;
    }
    match (alpha > 1.0, beta > d) {
        (true, true) => Region::I,
        (false, false) => Region::II,
        (true, false) => Region::III,
        (false, true) if alpha * beta < d => Region::IV,
        (false, true) if alpha > 0.0 => Region::V,
        (false, true) => Region::IV,
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn fixed_always_returns_its_sizes() {
        let d = SizeDistribution::fixed(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            assert_eq!(d.sample_size(&mut rng), (1.0, 1.0));
        }
        assert_eq!(critical_exponents(&d), (f64::INFINITY, f64::INFINITY));
    }

    #[test]
    fn regions_of_reference_points() {
        assert_eq!(classify_region(2.0, 2.0, 1), Region::I);
        assert_eq!(classify_region(2.0, 4.0, 2), Region::I);
        assert_eq!(classify_region(0.5, 3.0, 1), Region::V);
        assert_eq!(classify_region(0.5, 1.2, 1), Region::IV);
        assert_eq!(classify_region(0.5, 0.5, 1), Region::II);
        assert_eq!(classify_region(2.0, 0.3, 1), Region::III);
        assert_eq!(classify_region(2.0, 0.5, 1), Region::Boundary);
        assert_eq!(classify_region(1.0, 3.0, 1), Region::Boundary);
        assert_eq!(classify_region(0.5, 2.0, 1), Region::Boundary);
        assert_eq!(classify_region(0.5, 1.0, 1), Region::Boundary);
        assert_eq!(classify_region(-0.1, 1.0, 1), Region::Outside);
    }

    #[test]
    fn coupled_atoms_normalize() {
        let c = RegionIvCoupled::new(0.5, 1.2, 1, 8).unwrap();
        let total: f64 = c.atoms.iter().map(|a| a.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(c.atoms[0].radius, 2.2f64.exp2());
        assert_eq!(c.atoms[0].duration, 1.5f64.exp2());
    }

    #[test]
    fn pareto_rejects_bad_parameters() {
        assert!(IndependentPareto::new(-1.0, 1.0, 1).is_err());
        assert!(IndependentPareto::with_minima(1.0, 1.0, 0.0, 1.0, 1).is_err());
        assert!(SizeDistribution::fixed(1.0, 0.0).is_err());
    }
}
