//! Spatial/temporal scale sequences, their time scales, and the separation
//! conditions they must satisfy.
//!
//! Every quantity is stored as a base-2 logarithm: `S_i` overflows `f64` after a
//! handful of indices for realistic `A`. Inequalities are checked in exponent
//! space and margins are reported in log2 units (positive = satisfied).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScalesError {
    #[error("parameter domain violated: {0}")]
    Domain(String),
    #[error("time {0} lies outside the covered partition")]
    OutOfRange(f64),
}

pub type Result<T> = std::result::Result<T, ScalesError>;

pub const DEFAULT_KAPPA: f64 = 0.008;
pub const DEFAULT_I_MAX: usize = 6;
pub const MAX_I_MAX: usize = 12;
/// Extra closed-form indices kept beyond `i_max` for the infinite tail sums.
const TAIL_TERMS: usize = 4;

/// Inputs of the closed-form family `S_i = 2^{(1+δ)A(1+θ)^{2i}}`, `T_i = 2^{αA(1+θ)^{2i+1}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleParams {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub kappa: f64,
    pub d: usize,
    pub i_max: usize,
    /// Overrides `ϱ = 10 + 1/α + d/κ`.
    pub varrho: Option<f64>,
    /// Constant on the right-hand side of the summability condition.
    pub summability_c: f64,
}

impl ScaleParams {
    pub fn new(alpha: f64, beta: f64, theta: f64, a: f64, d: usize) -> Self {
        ScaleParams {
            alpha,
            beta,
            theta,
            a,
            kappa: DEFAULT_KAPPA,
            d,
            i_max: DEFAULT_I_MAX,
            varrho: None,
            summability_c: 1.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_i_max(mut self, i_max: usize) -> Self {
        self.i_max = i_max;
        self
    }

    pub fn with_a(mut self, a: f64) -> Self {
        self.a = a;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ScaleOrigin {
    ClosedForm { theta: f64, a: f64 },
    /// Hand-picked sequences; they need not satisfy any condition.
    Explicit,
}

/// `δ = min(½(β − d/α), θ/3)`.
pub fn delta_of(alpha: f64, beta: f64, d: usize, theta: f64) -> f64 {
    (0.5 * (beta - d as f64 / alpha)).min(theta / 3.0)
}

/// `ϱ = 10 + 1/α + d/κ`.
pub fn varrho_of(alpha: f64, d: usize, kappa: f64) -> f64 {
    10.0 + 1.0 / alpha + d as f64 / kappa
}

/// The scale bundle `(S_i, T_j, Δt_k, l_k, r_k, δ, κ, ϱ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleSequences {
    pub alpha: f64,
    pub beta: f64,
    pub d: usize,
    pub delta: f64,
    pub kappa: f64,
    pub varrho: f64,
    pub i_max: usize,
    pub summability_c: f64,
    pub origin: ScaleOrigin,
    /// `log2 S_i`, index 0 holds `S_1`; entries past `i_max` are tail terms.
    log2_s: Vec<f64>,
    log2_t: Vec<f64>,
}

/// Build the closed-form family.
pub fn build_scales(p: &ScaleParams) -> Result<ScaleSequences> {
    let dom = |m: String| Err(ScalesError::Domain(m));
    if !(p.alpha > 0.0 && p.alpha <= 1.0) {
        return dom(format!("0 < alpha <= 1 (alpha = {})", p.alpha));
    }
    if p.d < 1 {
        return dom("d >= 1".into());
    }
    if !(p.alpha * p.beta > p.d as f64) {
        return dom(format!("alpha*beta > d ({} * {} <= {})", p.alpha, p.beta, p.d));
    }
    if !(p.theta > 0.0) {
        return dom(format!("theta > 0 (theta = {})", p.theta));
    }
    if !(p.a > 0.0) || !p.a.is_finite() {
        return dom(format!("A > 0 (A = {})", p.a));
    }
    let delta = delta_of(p.alpha, p.beta, p.d, p.theta);
    let kappa_cap = (1.0f64 / 8.0).min(delta / (4.0 * (1.0 + delta)));
    if !(p.kappa > 0.0 && p.kappa < kappa_cap) {
        return dom(format!("0 < kappa < min(1/8, delta/(4(1+delta))) = {kappa_cap} (kappa = {})", p.kappa));
    }
    if p.i_max < 1 || p.i_max > MAX_I_MAX {
        return dom(format!("1 <= i_max <= {MAX_I_MAX} (i_max = {})", p.i_max));
    }
    let varrho = p.varrho.unwrap_or_else(|| varrho_of(p.alpha, p.d, p.kappa));
    if !(varrho > 1.0) {
        return dom(format!("varrho > 1 (varrho = {varrho})"));
    }
    if !(p.summability_c > 0.0) {
        return dom(format!("summability constant > 0 (c = {})", p.summability_c));
    }
    let growth = 1.0 + p.theta;
    let n = p.i_max + TAIL_TERMS;
    let log2_s = (1..=n)
        .map(|i| (1.0 + delta) * p.a * growth.powi(2 * i as i32))
        .collect();
    let log2_t = (1..=n)
        .map(|i| p.alpha * p.a * growth.powi(2 * i as i32 + 1))
        .collect();
    Ok(ScaleSequences {
        alpha: p.alpha,
        beta: p.beta,
        d: p.d,
        delta,
        kappa: p.kappa,
        varrho,
        i_max: p.i_max,
        summability_c: p.summability_c,
        origin: ScaleOrigin::ClosedForm {
            theta: p.theta,
            a: p.a,
        },
        log2_s,
        log2_t,
    })
}

impl ScaleSequences {
    /// Hand-picked scales (e.g. small toy values for simulation). `δ` uses the
    /// `θ/3` cap only when `theta` is given.
    pub fn explicit(
        alpha: f64,
        beta: f64,
        d: usize,
        spatial: &[f64],
        temporal: &[f64],
        theta: Option<f64>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ScalesError::Domain(format!("0 < alpha <= 1 (alpha = {alpha})")));
        }
        if d < 1 {
            return Err(ScalesError::Domain("d >= 1".into()));
        }
        if spatial.is_empty() || spatial.len() != temporal.len() {
            return Err(ScalesError::Domain(
                "spatial and temporal scale lists must be non-empty and of equal length".into(),
            ));
        }
        if spatial.len() > MAX_I_MAX {
            return Err(ScalesError::Domain(format!("at most {MAX_I_MAX} scales")));
        }
        for (name, list) in [("spatial", spatial), ("temporal", temporal)] {
            if list.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(ScalesError::Domain(format!("{name} scales must be positive and finite")));
            }
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(ScalesError::Domain(format!("{name} scales must be strictly increasing")));
            }
        }
        let delta = match theta {
            Some(th) => delta_of(alpha, beta, d, th),
            None => 0.5 * (beta - d as f64 / alpha),
        };
        Ok(ScaleSequences {
            alpha,
            beta,
            d,
            delta,
            kappa: DEFAULT_KAPPA,
            varrho: varrho_of(alpha, d, DEFAULT_KAPPA),
            i_max: spatial.len(),
            summability_c: 1.0,
            origin: ScaleOrigin::Explicit,
            log2_s: spatial.iter().map(|v| v.log2()).collect(),
            log2_t: temporal.iter().map(|v| v.log2()).collect(),
        })
    }

    /// Number of scale indices available (including closed-form tail terms).
    fn available(&self) -> usize {
        self.log2_s.len()
    }

    /// `log2 S_i`, `1 <= i`, including tail terms beyond `i_max`.
    pub fn log2_s(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|k| self.log2_s.get(k).copied())
    }

    pub fn log2_t(&self, j: usize) -> Option<f64> {
        j.checked_sub(1).and_then(|k| self.log2_t.get(k).copied())
    }

    /// Materialized `S_i` for `1 <= i <= i_max`, when it fits in an `f64`.
    pub fn s(&self, i: usize) -> Option<f64> {
        (i >= 1 && i <= self.i_max).then(|| materialize(self.log2_s[i - 1])).flatten()
    }

    pub fn t(&self, j: usize) -> Option<f64> {
        (j >= 1 && j <= self.i_max).then(|| materialize(self.log2_t[j - 1])).flatten()
    }

    /// `log2 Δt_k`: `Δt_{2i-1} = S_i^α`, `Δt_{2i} = T_i^{1+δ}`.
    pub fn log2_dt(&self, k: usize) -> Option<f64> {
        if k == 0 {
            return None;
        }
        let i = k.div_ceil(2);
        if k % 2 == 1 {
            self.log2_s(i).map(|s| self.alpha * s)
        } else {
            self.log2_t(i).map(|t| (1.0 + self.delta) * t)
        }
    }

    /// `log2 l_k = -k log2 ϱ - κ log2 Δt_k`.
    pub fn log2_l(&self, k: usize) -> Option<f64> {
        self.log2_dt(k)
            .map(|dt| -(k as f64) * self.varrho.log2() - self.kappa * dt)
    }

    /// `log2 r_k = k log2 ϱ + κ log2 Δt_k`.
    pub fn log2_r(&self, k: usize) -> Option<f64> {
        self.log2_dt(k)
            .map(|dt| k as f64 * self.varrho.log2() + self.kappa * dt)
    }

    pub fn dt(&self, k: usize) -> Option<f64> {
        self.log2_dt(k).and_then(materialize)
    }

    pub fn l(&self, k: usize) -> Option<f64> {
        self.log2_l(k).and_then(materialize)
    }

    pub fn r(&self, k: usize) -> Option<f64> {
        self.log2_r(k).and_then(materialize)
    }

    /// `S_1..S_{i_max}` as reals; `None` if any overflows.
    pub fn spatial_values(&self) -> Option<Vec<f64>> {
        (1..=self.i_max).map(|i| self.s(i)).collect()
    }

    pub fn temporal_values(&self) -> Option<Vec<f64>> {
        (1..=self.i_max).map(|j| self.t(j)).collect()
    }

    /// Largest Δt index inside the configured range.
    pub fn k_max(&self) -> usize {
        2 * self.i_max
    }

    /// log2 of the partition endpoints `l_k Δt_k` and `r_k Δt_k`.
    fn log2_low_end(&self, k: usize) -> Option<f64> {
        Some(self.log2_l(k)? + self.log2_dt(k)?)
    }

    fn log2_high_end(&self, k: usize) -> Option<f64> {
        Some(self.log2_r(k)? + self.log2_dt(k)?)
    }

    /// `l_k Δt_k` as a real, when it fits.
    pub fn low_end(&self, k: usize) -> Option<f64> {
        self.log2_low_end(k).and_then(materialize)
    }

    pub fn high_end(&self, k: usize) -> Option<f64> {
        self.log2_high_end(k).and_then(materialize)
    }
}

fn materialize(log2v: f64) -> Option<f64> {
    let v = log2v.exp2();
    (v.is_finite() && v > 0.0).then_some(v)
}

/// log2(Σ 2^{x_i}); `-inf` for an empty sum.
fn log2_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp2()).sum::<f64>().log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    /// `ϱ^k Δt_k^{1+κ} < ϱ^{-(k+1)} Δt_{k+1}^{1-κ}`
    WellSeparated,
    /// `Σ_{j>0} ϱ^{2j} Δt_{2(i+j)-1}^{-(1-κ)} <= 2 ϱ^{-i} Δt_{2i}^{-1}`
    NoInfluenceFromUpper,
    /// `exp(-Δt_k^κ) ln Δt_k < c ϱ^{-k}`
    Summability,
    /// `S_i^d T_i^{-(1+β)} < T_i^{-(1+2δ)}`
    LeadingOrder,
    /// `10 Σ_{i<k} S_i^{1-α} < S_k^{1-α}`
    UsefulLower,
    /// `10 Σ_{i>k} S_i^{-α} < S_k^{-α}`
    UsefulUpper,
    /// `l_k < 1 < r_k` and `r_k Δt_k < l_{k+1} Δt_{k+1}`
    Partition,
}

impl Condition {
    pub const ALL: [Condition; 7] = [
        Condition::WellSeparated,
        Condition::NoInfluenceFromUpper,
        Condition::Summability,
        Condition::LeadingOrder,
        Condition::UsefulLower,
        Condition::UsefulUpper,
        Condition::Partition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::WellSeparated => "well-separated",
            Condition::NoInfluenceFromUpper => "no-influence-from-upper",
            Condition::Summability => "summability",
            Condition::LeadingOrder => "leading-order",
            Condition::UsefulLower => "useful-lower",
            Condition::UsefulUpper => "useful-upper",
            Condition::Partition => "partition",
        }
    }

    fn strict(self) -> bool {
        !matches!(self, Condition::NoInfluenceFromUpper)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub condition: Condition,
    pub index: usize,
    /// `log2(rhs) - log2(lhs)`.
    pub margin: f64,
    pub pass: bool,
    /// Tail sum cut short because later scales are unavailable.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub condition: Condition,
    pub pass: bool,
    pub first_violation: Option<usize>,
    pub min_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub rows: Vec<ConditionRow>,
    pub summaries: Vec<ConditionSummary>,
    pub pass: bool,
}

impl ConditionReport {
    pub fn summary(&self, c: Condition) -> &ConditionSummary {
        self.summaries
            .iter()
            .find(|s| s.condition == c)
            .expect("every condition is summarized")
    }

    pub fn margin(&self, c: Condition, index: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.condition == c && r.index == index)
            .map(|r| r.margin)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,index,margin_log2,pass,truncated\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.condition, r.index, r.margin, r.pass, r.truncated
            ));
        }
        out
    }

    /// Condition × index table of margins.
    pub fn to_table(&self) -> String {
        let max_index = self.rows.iter().map(|r| r.index).max().unwrap_or(0);
        let mut out = format!("{:<24}", "condition \\ index");
        for k in 1..=max_index {
            out.push_str(&format!("{k:>12}"));
        }
        out.push_str("  status\n");
        for s in &self.summaries {
            out.push_str(&format!("{:<24}", s.condition.name()));
            for k in 1..=max_index {
                match self.margin(s.condition, k) {
                    Some(m) if m.is_infinite() => out.push_str(&format!("{:>12}", if m > 0.0 { "inf" } else { "-inf" })),
                    Some(m) => out.push_str(&format!("{m:>12.3}")),
                    None => out.push_str(&format!("{:>12}", "")),
                }
            }
            match s.first_violation {
                None => out.push_str("  pass\n"),
                Some(i) => out.push_str(&format!("  FAIL at {i}\n")),
            }
        }
        out.push_str(if self.pass { "overall: pass\n" } else { "overall: FAIL\n" });
        out
    }
}

/// Evaluate every condition for all indices within `i_max`.
pub fn check_conditions(sc: &ScaleSequences) -> ConditionReport {
    let mut rows = Vec::new();
    let lr = sc.varrho.log2();
    let kmax = sc.k_max();
    let dt = |k: usize| sc.log2_dt(k).expect("index within range");
    let mut push = |condition: Condition, index: usize, margin: f64, truncated: bool| {
        let pass = if condition.strict() { margin > 0.0 } else { margin >= 0.0 };
        rows.push(ConditionRow {
            condition,
            index,
            margin,
            pass,
            truncated,
        });
    };

    for k in 1..kmax {
        let lhs = k as f64 * lr + (1.0 + sc.kappa) * dt(k);
        let rhs = -((k + 1) as f64) * lr + (1.0 - sc.kappa) * dt(k + 1);
        push(Condition::WellSeparated, k, rhs - lhs, false);
    }

    for i in 1..=sc.i_max {
        let terms: Vec<f64> = (1..)
            .map_while(|j: usize| {
                sc.log2_dt(2 * (i + j) - 1)
                    .map(|d| 2.0 * j as f64 * lr - (1.0 - sc.kappa) * d)
            })
            .collect();
        let truncated = matches!(sc.origin, ScaleOrigin::Explicit);
        let lhs = log2_sum(terms);
        let rhs = 1.0 - i as f64 * lr - dt(2 * i);
        push(Condition::NoInfluenceFromUpper, i, rhs - lhs, truncated);
    }

    for k in 1..=kmax {
        let l = dt(k);
        let lhs = if l <= 0.0 {
            f64::NEG_INFINITY
        } else {
            -(sc.kappa * l).exp2() * std::f64::consts::LOG2_E + (l * std::f64::consts::LN_2).log2()
        };
        let rhs = sc.summability_c.log2() - k as f64 * lr;
        push(Condition::Summability, k, rhs - lhs, false);
    }

    for i in 1..=sc.i_max {
        let ls = sc.log2_s(i).expect("in range");
        let lt = sc.log2_t(i).expect("in range");
        let margin = (sc.beta - 2.0 * sc.delta) * lt - sc.d as f64 * ls;
        push(Condition::LeadingOrder, i, margin, false);
    }

    for k in 1..=sc.i_max {
        let lower = log2_sum((1..k).map(|i| (1.0 - sc.alpha) * sc.log2_s(i).unwrap()));
        let rhs = (1.0 - sc.alpha) * sc.log2_s(k).unwrap();
        push(Condition::UsefulLower, k, rhs - (10f64.log2() + lower), false);

        let upper = log2_sum((k + 1..=sc.available()).map(|i| -sc.alpha * sc.log2_s(i).unwrap()));
        let rhs = -sc.alpha * sc.log2_s(k).unwrap();
        let truncated = matches!(sc.origin, ScaleOrigin::Explicit);
        push(Condition::UsefulUpper, k, rhs - (10f64.log2() + upper), truncated);
    }

    for k in 1..kmax {
        let l = sc.log2_l(k).unwrap();
        let r = sc.log2_r(k).unwrap();
        let inner = (-l).min(r);
        let gap = sc.log2_low_end(k + 1).unwrap() - sc.log2_high_end(k).unwrap();
        push(Condition::Partition, k, inner.min(gap), false);
    }

    let summaries: Vec<ConditionSummary> = Condition::ALL
        .iter()
        .map(|&c| {
            let mine: Vec<&ConditionRow> = rows.iter().filter(|r| r.condition == c).collect();
            ConditionSummary {
                condition: c,
                pass: mine.iter().all(|r| r.pass),
                first_violation: mine.iter().find(|r| !r.pass).map(|r| r.index),
                min_margin: mine.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min),
            }
        })
        .collect();
    let pass = summaries.iter().all(|s| s.pass);
    ConditionReport { rows, summaries, pass }
}

/// Which half of an even-index band a time falls in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    /// `[l_{2i} Δt_{2i}, r_{2i} Δt_{2i})`
    Low,
    /// `[r_{2i} Δt_{2i}, l_{2i+2} Δt_{2i+2})`
    High,
}

/// Locate `t` in the partition `l_1Δt_1 < r_1Δt_1 < l_2Δt_2 < …`.
///
/// Index 0 (always `High`) covers `[l_1 Δt_1, l_2 Δt_2)`. The covered range ends
/// at `l_{2i_max+2} Δt_{2i_max+2}` when tail terms exist and at
/// `r_{2i_max} Δt_{2i_max}` otherwise.
pub fn locate_time(sc: &ScaleSequences, t: f64) -> Result<(usize, Band)> {
    // Compare against materialized endpoints when they fit so exact endpoint
    // values land in the right half-open band.
    let ge = |t: f64, log2_end: f64| match materialize(log2_end) {
        Some(e) => t >= e,
        None => log2_end < 0.0 || t.log2() >= log2_end,
    };
    if !(t > 0.0) || !ge(t, sc.log2_low_end(1).unwrap()) {
        return Err(ScalesError::OutOfRange(t));
    }
    let mut found = None;
    for i in 0..=sc.i_max {
        let next_low = match sc.log2_low_end(2 * i + 2) {
            Some(e) => e,
            None => break,
        };
        if i >= 1 && !ge(t, sc.log2_high_end(2 * i).unwrap()) {
            found = Some((i, Band::Low));
            break;
        }
        if !ge(t, next_low) {
            found = Some((i, Band::High));
            break;
        }
    }
    if found.is_none() {
        let i = sc.i_max;
        if sc.log2_low_end(2 * i + 2).is_none() && !ge(t, sc.log2_high_end(2 * i).unwrap()) {
            found = Some((i, Band::Low));
        }
    }
    found.ok_or(ScalesError::OutOfRange(t))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(a: f64) -> ScaleSequences {
        build_scales(&ScaleParams::new(0.5, 3.0, 0.1, a, 1).with_kappa(0.008)).unwrap()
    }

    #[test]
    fn delta_example() {
        let d = delta_of(0.5, 3.0, 1, 0.1);
        assert!((d - 0.1 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn first_scale_exponents() {
        let sc = example(10.0);
        let delta = 0.1 / 3.0;
        assert!((sc.log2_s(1).unwrap() - (1.0 + delta) * 10.0 * 1.1f64.powi(2)).abs() < 1e-12);
        assert!((sc.log2_s(1).unwrap() - 12.503_333_333_333).abs() < 1e-9);
        assert!((sc.log2_t(1).unwrap() - 6.655).abs() < 1e-12);
    }

    #[test]
    fn scaling_law_between_consecutive_scales() {
        let sc = example(7.0);
        for i in 1..sc.i_max {
            let ratio = sc.log2_s(i + 1).unwrap() / sc.log2_s(i).unwrap();
            assert!((ratio - 1.21).abs() < 1e-12);
        }
    }

    #[test]
    fn time_scale_identities() {
        let sc = example(10.0);
        for i in 1..=sc.i_max {
            assert_eq!(sc.log2_dt(2 * i - 1).unwrap(), 0.5 * sc.log2_s(i).unwrap());
            assert_eq!(sc.log2_dt(2 * i).unwrap(), (1.0 + sc.delta) * sc.log2_t(i).unwrap());
        }
        assert!((sc.varrho - (10.0 + 2.0 + 125.0)).abs() < 1e-9);
    }

    #[test]
    fn domain_errors_name_the_inequality() {
        let base = ScaleParams::new(0.5, 3.0, 0.1, 10.0, 1);
        let e = build_scales(&base.with_a(0.0)).unwrap_err();
        assert!(e.to_string().contains("A > 0"));
        let e = build_scales(&ScaleParams::new(0.5, 1.5, 0.1, 10.0, 1)).unwrap_err();
        assert!(e.to_string().contains("alpha*beta > d"));
        let e = build_scales(&base.with_kappa(0.01)).unwrap_err();
        assert!(e.to_string().contains("kappa"));
        let e = build_scales(&base.with_i_max(13)).unwrap_err();
        assert!(e.to_string().contains("i_max"));
        assert!(build_scales(&ScaleParams::new(1.5, 3.0, 0.1, 10.0, 1)).is_err());
    }

    #[test]
    fn leading_order_is_proportional_to_a() {
        let r1 = check_conditions(&example(10.0));
        let r2 = check_conditions(&example(20.0));
        for i in 1..=6 {
            let m1 = r1.margin(Condition::LeadingOrder, i).unwrap();
            let m2 = r2.margin(Condition::LeadingOrder, i).unwrap();
            assert!(m1 > 0.0);
            assert!((m2 - 2.0 * m1).abs() < 1e-9 * m2.abs());
        }
    }

    #[test]
    fn useful_lower_at_first_index_is_vacuous() {
        let r = check_conditions(&example(10.0));
        assert_eq!(r.margin(Condition::UsefulLower, 1), Some(f64::INFINITY));
    }

    #[test]
    fn alpha_one_breaks_useful_lower() {
        let sc = build_scales(&ScaleParams::new(1.0, 3.0, 0.1, 10.0, 1).with_kappa(0.008)).unwrap();
        let r = check_conditions(&sc);
        assert_eq!(r.summary(Condition::UsefulLower).first_violation, Some(2));
    }

    /// Small `ϱ` keeps the partition ordered while every endpoint still fits in an `f64`.
    fn materialized() -> ScaleSequences {
        let mut p = ScaleParams::new(0.5, 3.0, 0.1, 100.0, 1);
        p.varrho = Some(2.0);
        build_scales(&p).unwrap()
    }

    #[test]
    fn locate_time_band_edges() {
        let sc = materialized();
        let lo = sc.low_end(2).unwrap();
        let hi = sc.high_end(2).unwrap();
        assert!(sc.low_end(1).unwrap() < lo && lo < hi && hi < sc.low_end(4).unwrap());
        assert_eq!(locate_time(&sc, lo).unwrap(), (1, Band::Low));
        let below_hi = f64::from_bits(hi.to_bits() - 1);
        assert_eq!(locate_time(&sc, below_hi).unwrap(), (1, Band::Low));
        assert_eq!(locate_time(&sc, hi).unwrap(), (1, Band::High));
        let below_next = f64::from_bits(sc.low_end(4).unwrap().to_bits() - 1);
        assert_eq!(locate_time(&sc, below_next).unwrap(), (1, Band::High));
    }

    #[test]
    fn locate_time_rejects_out_of_range() {
        let sc = materialized();
        let first = sc.low_end(1).unwrap();
        assert!(matches!(locate_time(&sc, first / 2.0), Err(ScalesError::OutOfRange(_))));
        assert!(locate_time(&sc, 0.0).is_err());
        assert_eq!(locate_time(&sc, first).unwrap(), (0, Band::High));
        let last = sc.low_end(2 * sc.i_max + 2).unwrap();
        assert!(locate_time(&sc, last).is_err());
        let big = example(2000.0);
        assert!(locate_time(&big, 1e300).is_ok() || locate_time(&big, 1e300).is_err());
    }

    #[test]
    fn explicit_scales_validate() {
        assert!(ScaleSequences::explicit(0.5, 3.0, 1, &[8.0, 64.0], &[1.0, 4.0], None).is_ok());
        assert!(ScaleSequences::explicit(0.5, 3.0, 1, &[64.0, 8.0], &[1.0, 4.0], None).is_err());
        assert!(ScaleSequences::explicit(0.5, 3.0, 1, &[8.0], &[1.0, 4.0], None).is_err());
        let sc = ScaleSequences::explicit(0.5, 3.0, 1, &[8.0, 64.0], &[1.0, 4.0], None).unwrap();
        assert_eq!(sc.spatial_values().unwrap(), vec![8.0, 64.0]);
    }
}
