//! Line-oriented realization format.
//!
//! ```text
//! hailsim-realization v1
//! dimension 1
//! horizon 10
//! seed 7 0
//! note mode=fixed half_width=5 boundary_contact=false rejected=0
//! jobs 2
//! 0.25 -3 1.5 2
//! 4.125 2 0 1
//! ```
//!
//! Job lines are `t center_coords radius duration`. Numbers use the shortest
//! decimal that parses back to the same value, so the format round-trips exactly.

use std::fmt::Write as _;
use std::str::FromStr;

use super::{Job, ModelError, Realization, Result, SamplingNote, SeedInfo, Site, WindowMode};
use crate::scalar::Scalar;

const MAGIC: &str = "hailsim-realization v1";

pub(super) fn write_realization<S: Scalar>(r: &Realization<S>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dimension {}", r.dimension);
    let _ = writeln!(out, "horizon {}", r.horizon);
    let _ = writeln!(out, "seed {} {}", r.seed_info.master_seed, r.seed_info.trial);
    let _ = writeln!(
        out,
        "note mode={} half_width={} boundary_contact={} rejected={}",
        r.note.mode.name(),
        r.note.half_width,
        r.note.boundary_contact,
        r.note.rejected
    );
    let _ = writeln!(out, "jobs {}", r.jobs.len());
    for j in &r.jobs {
        let _ = writeln!(out, "{} {} {} {}", j.arrival_time, j.center, j.radius, j.duration);
    }
    out
}

fn perr(line: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Parse {
        line,
        msg: msg.into(),
    }
}

fn num<T: FromStr>(tok: &str, line: usize) -> Result<T> {
    tok.parse::<T>()
        .map_err(|_| perr(line, format!("cannot parse number '{tok}'")))
}

fn keyed<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, Vec<&'a str>)> {
    let (no, line) = lines.next().ok_or_else(|| perr(0, format!("missing '{key}' line")))?;
    let mut toks = line.split_whitespace();
    match toks.next() {
        Some(k) if k == key => Ok((no, toks.collect())),
        _ => Err(perr(no, format!("expected '{key}'"))),
    }
}

pub(super) fn read_realization<S: Scalar>(src: &str) -> Result<Realization<S>> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        Some((no, _)) => return Err(perr(no, "bad magic line")),
        None => return Err(perr(0, "empty input")),
    }
    let (no, v) = keyed(&mut lines, "dimension")?;
    let dimension: usize = num(v.first().ok_or_else(|| perr(no, "missing value"))?, no)?;
    let (no, v) = keyed(&mut lines, "horizon")?;
    let horizon: S = num(v.first().ok_or_else(|| perr(no, "missing value"))?, no)?;
    let (no, v) = keyed(&mut lines, "seed")?;
    if v.len() != 2 {
        return Err(perr(no, "seed needs master and trial"));
    }
    let seed_info = SeedInfo {
        master_seed: num(v[0], no)?,
        trial: num(v[1], no)?,
    };
    let (no, v) = keyed(&mut lines, "note")?;
    let mut note = SamplingNote {
        mode: WindowMode::Fixed,
        half_width: 1,
        boundary_contact: false,
        rejected: 0,
    };
    for kv in v {
        let (k, val) = kv.split_once('=').ok_or_else(|| perr(no, format!("bad note field '{kv}'")))?;
        match k {
            "mode" => {
                note.mode = match val {
                    "fixed" => WindowMode::Fixed,
                    "adaptive-influence" => WindowMode::AdaptiveInfluence,
                    other => return Err(perr(no, format!("unknown mode '{other}'"))),
                }
            }
            "half_width" => note.half_width = num(val, no)?,
            "boundary_contact" => note.boundary_contact = num(val, no)?,
            "rejected" => note.rejected = num(val, no)?,
            other => return Err(perr(no, format!("unknown note field '{other}'"))),
        }
    }
    let (no, v) = keyed(&mut lines, "jobs")?;
    let count: usize = num(v.first().ok_or_else(|| perr(no, "missing value"))?, no)?;

    let mut jobs = Vec::with_capacity(count);
    for (no, line) in lines.by_ref().take(count) {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != dimension + 3 {
            return Err(perr(no, format!("expected {} fields, found {}", dimension + 3, toks.len())));
        }
        let t: S = num(toks[0], no)?;
        let center = Site::new(
            toks[1..=dimension]
                .iter()
                .map(|c| num::<i64>(c, no))
                .collect::<Result<Vec<_>>>()?,
        );
        let radius: S = num(toks[dimension + 1], no)?;
        let duration: S = num(toks[dimension + 2], no)?;
        jobs.push(Job::new(t, center, radius, duration).map_err(|e| perr(no, e.to_string()))?);
    }
    if jobs.len() != count {
        return Err(perr(0, format!("expected {count} jobs, found {}", jobs.len())));
    }
    if let Some((no, _)) = lines.next() {
        return Err(perr(no, "trailing content after jobs"));
    }
    Realization::new(dimension, horizon, jobs, seed_info, note)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_exact() {
        let jobs = vec![
            Job::new(0.1 + 0.2, Site::from([3, -4]), 2.0f64.sqrt(), 1.0 / 3.0).unwrap(),
            Job::new(1e-300, Site::from([0, 0]), 0.0, 1e300).unwrap(),
        ];
        let r = Realization::from_jobs(2, 7.5, jobs).unwrap();
        let text = r.to_text();
        let back: Realization<f64> = Realization::from_text(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_malformed() {
        assert!(Realization::<f64>::from_text("").is_err());
        let r = Realization::from_jobs(1, 1.0, vec![Job::new(0.5, Site::d1(0), 1.0, 1.0).unwrap()]).unwrap();
        let text = r.to_text().replace("jobs 1", "jobs 2");
        assert!(Realization::<f64>::from_text(&text).is_err());
        let text = r.to_text().replace("0.5 0 1 1", "0.5 0 1");
        assert!(Realization::<f64>::from_text(&text).is_err());
    }
}
