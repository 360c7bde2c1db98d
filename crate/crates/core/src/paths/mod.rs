//! Admissible paths: certificates and scores, an exhaustive oracle, and the
//! forward programs for origin-started quantities.

mod brute;
mod dp;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributions::SizeClasses;
use crate::model::{BoxRegion, Realization, Site};
use crate::scalar::Scalar;

pub use brute::{
    brute_force_max_counts, brute_force_max_score, brute_force_n_connected, brute_force_tilde_w,
    DEFAULT_MAX_JOBS,
};
pub use dp::{
    detect_events, max_counts, n_connected, range_extremes, tilde_w, tilde_w_grid, EventIndicators,
    RangeRow,
};

#[derive(Debug, Error, PartialEq)]
pub enum PathError {
    #[error("invalid certificate at switch {switch}: {reason}")]
    InvalidSwitch { switch: usize, reason: String },
    #[error("invalid certificate: {0}")]
    Invalid(String),
    #[error("instance has {jobs} jobs; the exhaustive search is capped at {max}")]
    TooLarge { jobs: usize, max: usize },
    #[error("operation needs dimension 1, realization has dimension {0}")]
    Dimension(usize),
    #[error("size classes: {0}")]
    Classes(String),
}

pub type Result<T> = std::result::Result<T, PathError>;

/// A jump of the path at a job's arrival.
#[derive(Clone, Debug, PartialEq)]
pub struct Switch<S: Scalar = f64> {
    /// Index into the realization's job list.
    pub job: usize,
    pub time: S,
    /// Site occupied from `time` on.
    pub site: Site,
}

/// Piecewise-constant, right-continuous path on `[start_time, end_time]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCertificate<S: Scalar = f64> {
    pub start_time: S,
    pub end_time: S,
    pub start_site: Site,
    pub switches: Vec<Switch<S>>,
}

impl<S: Scalar> PathCertificate<S> {
    /// Path that never moves.
    pub fn constant(site: Site, start_time: S, end_time: S) -> Self {
        PathCertificate {
            start_time,
            end_time,
            start_site: site,
            switches: Vec::new(),
        }
    }

    pub fn end_site(&self) -> &Site {
        self.switches.last().map_or(&self.start_site, |s| &s.site)
    }

    /// Sites visited, starting with the start site.
    pub fn sites(&self) -> Vec<Site> {
        std::iter::once(self.start_site.clone())
            .chain(self.switches.iter().map(|s| s.site.clone()))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "path {} {}", self.start_time, self.end_time);
        let _ = writeln!(out, "start {}", self.start_site);
        for s in &self.switches {
            let _ = writeln!(out, "switch {} {} {}", s.job, s.time, s.site);
        }
        out
    }

    pub fn from_text(src: &str) -> Result<Self> {
        let bad = |m: &str| PathError::Invalid(m.to_string());
        let mut lines = src.lines().map(str::trim).filter(|l| !l.is_empty());
        let num = |t: &str| t.parse::<S>().map_err(|_| bad("bad number"));
        let head: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if head.len() != 3 || head[0] != "path" {
            return Err(bad("expected 'path u t'"));
        }
        let start: Vec<&str> = lines.next().ok_or_else(|| bad("missing start"))?.split_whitespace().collect();
        if start.first() != Some(&"start") {
            return Err(bad("expected 'start'"));
        }
        let coords = |toks: &[&str]| -> Result<Site> {
            toks.iter()
                .map(|c| c.parse::<i64>().map_err(|_| bad("bad coordinate")))
                .collect::<Result<Vec<_>>>()
                .map(Site::new)
        };
        let mut cert = PathCertificate {
            start_time: num(head[1])?,
            end_time: num(head[2])?,
            start_site: coords(&start[1..])?,
            switches: Vec::new(),
        };
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 3 || toks[0] != "switch" {
                return Err(bad("expected 'switch job time coords'"));
            }
            cert.switches.push(Switch {
                job: toks[1].parse().map_err(|_| bad("bad job index"))?,
                time: num(toks[2])?,
                site: coords(&toks[3..])?,
            });
        }
        Ok(cert)
    }
}

/// Jobs the path intersects, in replay order. Validates every switch.
pub fn intersected_jobs<S: Scalar>(realization: &Realization<S>, cert: &PathCertificate<S>) -> Result<Vec<usize>> {
    let (u, t) = (cert.start_time, cert.end_time);
    if !(u <= t) || u < S::zero() {
        return Err(PathError::Invalid(format!("start time {u} after end time {t}")));
    }
    let dim = realization.dimension();
    if cert.sites().iter().any(|s| s.dim() != dim) {
        return Err(PathError::Invalid(format!("sites must have dimension {dim}")));
    }
    let jobs = realization.jobs();
    for (i, sw) in cert.switches.iter().enumerate() {
        let job = jobs.get(sw.job).ok_or_else(|| PathError::InvalidSwitch {
            switch: i,
            reason: format!("job index {} out of range", sw.job),
        })?;
        if job.arrival_time != sw.time || sw.time < u || sw.time > t {
            return Err(PathError::InvalidSwitch {
                switch: i,
                reason: format!("time {} does not match job {} in [{u}, {t}]", sw.time, sw.job),
            });
        }
        if i > 0 && cert.switches[i - 1].job >= sw.job {
            return Err(PathError::InvalidSwitch {
                switch: i,
                reason: "switches must follow replay order".into(),
            });
        }
    }
    let mut out = Vec::new();
    let mut here = cert.start_site.clone();
    let mut next = cert.switches.iter().enumerate().peekable();
    for (k, job) in jobs.iter().enumerate() {
        if job.arrival_time < u || job.arrival_time > t {
            continue;
        }
        let ball = job.ball();
        let after = match next.peek() {
            Some((i, sw)) if sw.job == k => {
                if !(ball.contains(&here) && ball.contains(&sw.site)) {
                    return Err(PathError::InvalidSwitch {
                        switch: *i,
                        reason: format!("job {k} does not cover both {here:?} and {:?}", sw.site),
                    });
                }
                let s = sw.site.clone();
                next.next();
                s
            }
            _ => here.clone(),
        };
        if ball.contains(&here) && ball.contains(&after) {
            out.push(k);
        }
        here = after;
    }
    Ok(out)
}

/// Score: total duration of intersected jobs minus the path's length in time.
pub fn path_score<S: Scalar>(realization: &Realization<S>, cert: &PathCertificate<S>) -> Result<S> {
    let jobs = realization.jobs();
    let total = intersected_jobs(realization, cert)?
        .into_iter()
        .fold(S::zero(), |acc, k| acc + jobs[k].duration);
    Ok(total - (cert.end_time - cert.start_time))
}

/// Per-class maxima of intersected job counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountVector {
    /// Index `j - 1` holds the count for temporal class `j`.
    pub temporal: Vec<u64>,
    /// Index `i - 1` holds the count for spatial class `i`.
    pub spatial: Vec<u64>,
}

/// Is `(target, time)` n-connected to the origin at time 0?
#[derive(Clone, Debug, PartialEq)]
pub struct ConnectivityQuery {
    pub target: Site,
    pub time: f64,
    pub n: usize,
}

impl ConnectivityQuery {
    /// `S_n / 2`.
    pub fn slack(&self, classes: &SizeClasses) -> Result<f64> {
        classes
            .scale(self.n)
            .map(|s| s / 2.0)
            .ok_or_else(|| PathError::Classes(format!("no spatial scale with index {}", self.n)))
    }

    fn boxes(&self, classes: &SizeClasses) -> Result<(f64, BoxRegion, BoxRegion)> {
        let s_n = classes.scale(self.n).ok_or_else(|| {
            PathError::Classes(format!("no spatial scale with index {}", self.n))
        })?;
        let reach = crate::model::reach_of(s_n / 2.0);
        let dim = self.target.dim();
        Ok((
            s_n,
            BoxRegion::around(&Site::origin(dim), reach),
            BoxRegion::around(&self.target, reach),
        ))
    }
}

/// Class index of `value` among `classes`, compared at scalar precision.
fn class_of<S: Scalar>(classes: &[f64], value: S) -> Option<usize> {
    classes.iter().position(|&c| S::of(c) == value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Job;

    #[test]
    fn constant_path_without_jobs_scores_zero() {
        let r: Realization = Realization::from_jobs(1, 1.0, vec![]).unwrap();
        let c = PathCertificate::constant(Site::d1(0), 0.5, 0.5);
        assert_eq!(path_score(&r, &c).unwrap(), 0.0);
    }

    #[test]
    fn constant_path_under_one_job() {
        let r = Realization::from_jobs(1, 5.0, vec![Job::new(1.0, Site::d1(0), 0.0, 3.0).unwrap()]).unwrap();
        let c = PathCertificate::constant(Site::d1(0), 0.5, 1.5);
        assert_eq!(path_score(&r, &c).unwrap(), 2.0);
    }

    #[test]
    fn unjustified_switch_is_named() {
        let r = Realization::from_jobs(1, 5.0, vec![Job::new(1.0, Site::d1(0), 1.0, 3.0).unwrap()]).unwrap();
        let mut c = PathCertificate::constant(Site::d1(0), 0.0, 2.0);
        c.switches.push(Switch {
            job: 0,
            time: 1.0,
            site: Site::d1(2),
        });
        match path_score(&r, &c) {
            Err(PathError::InvalidSwitch { switch: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        c.switches[0].site = Site::d1(1);
        assert_eq!(path_score(&r, &c).unwrap(), 1.0);
    }

    #[test]
    fn certificate_text_round_trip() {
        let c = PathCertificate {
            start_time: 0.25,
            end_time: 3.0,
            start_site: Site::from([1, -2]),
            switches: vec![Switch {
                job: 3,
                time: 1.0 / 3.0,
                site: Site::from([0, 0]),
            }],
        };
        assert_eq!(PathCertificate::from_text(&c.to_text()).unwrap(), c);
    }
}
