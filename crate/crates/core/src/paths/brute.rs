//! Exhaustive search over admissible paths on tiny instances.
//!
//! Positions are reduced to finitely many candidates: two sites that lie in
//! exactly the same job balls (and the same start/target boxes) are
//! interchangeable, since moving a path between them changes neither which
//! jumps are justified nor which jobs it intersects. Balls are boxes, so the
//! classes are products of the elementary intervals cut by the box edges;
//! one representative per distinct membership signature suffices. The search
//! then tries every jump target class at every job, memoized on
//! `(job, current class)`.

use crate::distributions::SizeClasses;
use crate::model::{BoxRegion, Job, Realization, Site};
use crate::scalar::Scalar;

use super::{class_of, ConnectivityQuery, CountVector, PathCertificate, PathError, Result, Switch};

pub const DEFAULT_MAX_JOBS: usize = 12;

enum Start<'a> {
    Anywhere,
    Region(&'a BoxRegion),
}

/// Candidate positions: the smallest site of every membership class.
fn representatives(dim: usize, boxes: &[BoxRegion]) -> Vec<(Site, u64)> {
    let mut axes: Vec<Vec<i64>> = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut cuts: Vec<i64> = boxes
            .iter()
            .filter(|b| !b.is_empty())
            .flat_map(|b| [b.lo.coords()[i], b.hi.coords()[i] + 1])
            .collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut reps = Vec::with_capacity(cuts.len() + 1);
        match cuts.first() {
            Some(&c) => reps.push(c - 1),
            None => reps.push(0),
        }
        reps.extend_from_slice(&cuts);
        axes.push(reps);
    }
    let mut out: Vec<(Site, u64)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut idx = vec![0usize; dim];
    loop {
        let site = Site::new((0..dim).map(|i| axes[i][idx[i]]));
        let mask = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.contains(&site))
            .fold(0u64, |m, (k, _)| m | (1 << k));
        if seen.insert(mask) {
            out.push((site, mask));
        }
        let mut axis = dim;
        loop {
            if axis == 0 {
                out.sort();
                return out;
            }
            axis -= 1;
            if idx[axis] + 1 < axes[axis].len() {
                idx[axis] += 1;
                break;
            }
            idx[axis] = 0;
        }
    }
}

struct Found<S: Scalar> {
    weight: S,
    start: Site,
    /// `(position in the job list, new site)`.
    moves: Vec<(usize, Site)>,
}

/// Best total weight over paths through `jobs` in order, or `None` if no path
/// satisfies the start/target constraints.
fn search<S: Scalar>(
    dim: usize,
    jobs: &[&Job<S>],
    weights: &[S],
    start: Start<'_>,
    target: Option<&BoxRegion>,
) -> Option<Found<S>> {
    let m = jobs.len();
    let mut boxes: Vec<BoxRegion> = jobs.iter().map(|j| j.footprint()).collect();
    let target_bit = boxes.len();
    boxes.push(target.cloned().unwrap_or_else(|| BoxRegion::centered(dim, -1)));
    let start_bit = boxes.len();
    boxes.push(match start {
        Start::Anywhere => BoxRegion::centered(dim, -1),
        Start::Region(b) => b.clone(),
    });
    let reps = representatives(dim, &boxes);
    let n = reps.len();
    let neg = S::neg_infinity();

    // value[k][r]: best weight collected from job k on, sitting at rep r.
    let mut value = vec![vec![neg; n]; m + 1];
    let mut choice = vec![vec![usize::MAX; n]; m];
    for (r, (_, mask)) in reps.iter().enumerate() {
        if target.is_none() || mask & (1 << target_bit) != 0 {
            value[m][r] = S::zero();
        }
    }
    for k in (0..m).rev() {
        let inside: Vec<usize> = (0..n).filter(|&r| reps[r].1 & (1 << k) != 0).collect();
        let mut best = neg;
        let mut best_r = usize::MAX;
        for &r in &inside {
            if value[k + 1][r] > best {
                best = value[k + 1][r];
                best_r = r;
            }
        }
        for r in 0..n {
            if reps[r].1 & (1 << k) != 0 {
                if best == neg {
                    continue;
                }
                // Prefer staying put among equal options.
                let to = if value[k + 1][r] == best { r } else { best_r };
                value[k][r] = best + weights[k];
                choice[k][r] = to;
            } else {
                value[k][r] = value[k + 1][r];
                choice[k][r] = r;
            }
        }
    }

    let mut best: Option<(S, usize)> = None;
    for r in 0..n {
        let allowed = match start {
            Start::Anywhere => true,
            Start::Region(_) => reps[r].1 & (1 << start_bit) != 0,
        };
        if allowed && value[0][r] > neg && best.is_none_or(|(v, _)| value[0][r] > v) {
            best = Some((value[0][r], r));
        }
    }
    let (weight, r0) = best?;
    let mut moves = Vec::new();
    let mut r = r0;
    for (k, row) in choice.iter().enumerate() {
        let to = row[r];
        if to != r {
            moves.push((k, reps[to].0.clone()));
        }
        r = to;
    }
    Some(Found {
        weight,
        start: reps[r0].0.clone(),
        moves,
    })
}

fn check_size<S: Scalar>(realization: &Realization<S>, max_jobs: usize) -> Result<()> {
    // Membership signatures are u64 masks with two extra bits.
    let cap = max_jobs.min(62);
    if realization.len() > cap {
        return Err(PathError::TooLarge {
            jobs: realization.len(),
            max: cap,
        });
    }
    Ok(())
}

fn certificate<S: Scalar>(
    found: Found<S>,
    picked: &[usize],
    realization: &Realization<S>,
    start_time: S,
    end_time: S,
) -> PathCertificate<S> {
    let jobs = realization.jobs();
    PathCertificate {
        start_time,
        end_time,
        start_site: found.start,
        switches: found
            .moves
            .into_iter()
            .map(|(k, site)| Switch {
                job: picked[k],
                time: jobs[picked[k]].arrival_time,
                site,
            })
            .collect(),
    }
}

/// Maximum score over all admissible paths ending at `(end_time, end_site)`,
/// with a witness path. Start times range over `{0} ∪ arrivals ∪ {end_time}`:
/// between arrivals the score is linear in the start time.
pub fn brute_force_max_score<S: Scalar>(
    realization: &Realization<S>,
    end_site: &Site,
    end_time: S,
    max_jobs: usize,
) -> Result<(S, PathCertificate<S>)> {
    check_size(realization, max_jobs)?;
    let jobs = realization.jobs();
    let mut starts: Vec<S> = std::iter::once(S::zero())
        .chain(jobs.iter().map(|j| j.arrival_time).filter(|a| *a <= end_time))
        .chain(std::iter::once(end_time))
        .collect();
    starts.dedup();
    let target = BoxRegion::point(end_site);
    let mut best = (S::zero(), PathCertificate::constant(end_site.clone(), end_time, end_time));
    for &u in &starts {
        let picked: Vec<usize> = (0..jobs.len())
            .filter(|&k| jobs[k].arrival_time >= u && jobs[k].arrival_time <= end_time)
            .collect();
        let sel: Vec<&Job<S>> = picked.iter().map(|&k| &jobs[k]).collect();
        let weights: Vec<S> = sel.iter().map(|j| j.duration).collect();
        if let Some(found) = search(realization.dimension(), &sel, &weights, Start::Anywhere, Some(&target)) {
            let score = found.weight - (end_time - u);
            if score > best.0 {
                best = (score, certificate(found, &picked, realization, u, end_time));
            }
        }
    }
    Ok(best)
}

/// Maximum score over paths started at the space-time origin and ending at
/// any site at any time `u <= t`.
pub fn brute_force_tilde_w<S: Scalar>(
    realization: &Realization<S>,
    t: S,
    max_jobs: usize,
) -> Result<(S, PathCertificate<S>)> {
    check_size(realization, max_jobs)?;
    let jobs = realization.jobs();
    let origin = Site::origin(realization.dimension());
    let start = BoxRegion::point(&origin);
    let mut best = (S::zero(), PathCertificate::constant(origin, S::zero(), S::zero()));
    let ends: Vec<S> = jobs.iter().map(|j| j.arrival_time).filter(|a| *a <= t).collect();
    for &u in &ends {
        let picked: Vec<usize> = (0..jobs.len()).filter(|&k| jobs[k].arrival_time <= u).collect();
        let sel: Vec<&Job<S>> = picked.iter().map(|&k| &jobs[k]).collect();
        let weights: Vec<S> = sel.iter().map(|j| j.duration).collect();
        if let Some(found) = search(realization.dimension(), &sel, &weights, Start::Region(&start), None) {
            let score = found.weight - u;
            if score > best.0 {
                best = (score, certificate(found, &picked, realization, S::zero(), u));
            }
        }
    }
    Ok(best)
}

fn filtered<S: Scalar>(realization: &Realization<S>, t: S, radius_cap: f64) -> Vec<usize> {
    let cap = S::of(radius_cap);
    realization
        .jobs()
        .iter()
        .enumerate()
        .filter(|(_, j)| j.arrival_time <= t && j.radius <= cap)
        .map(|(k, _)| k)
        .collect()
}

/// Per-class maximal counts over paths from the space-time origin to time `t`
/// using only jobs of radius at most `S_n`.
pub fn brute_force_max_counts<S: Scalar>(
    realization: &Realization<S>,
    t: S,
    n: usize,
    classes: &SizeClasses,
    max_jobs: usize,
) -> Result<CountVector> {
    check_size(realization, max_jobs)?;
    let s_n = classes
        .scale(n)
        .ok_or_else(|| PathError::Classes(format!("no spatial scale with index {n}")))?;
    let jobs = realization.jobs();
    let picked = filtered(realization, t, s_n);
    let sel: Vec<&Job<S>> = picked.iter().map(|&k| &jobs[k]).collect();
    let origin = BoxRegion::point(&Site::origin(realization.dimension()));
    let count = |hit: &dyn Fn(&Job<S>) -> bool| -> u64 {
        let weights: Vec<S> = sel.iter().map(|j| if hit(j) { S::one() } else { S::zero() }).collect();
        search(realization.dimension(), &sel, &weights, Start::Region(&origin), None)
            .map_or(0, |f| f.weight.as_f64().round() as u64)
    };
    for j in &sel {
        if class_of(&classes.temporal, j.duration).is_none() || class_of(&classes.spatial, j.radius).is_none() {
            return Err(PathError::Classes(format!(
                "job sizes ({}, {}) match no class",
                j.radius, j.duration
            )));
        }
    }
    let temporal = (0..classes.temporal.len())
        .map(|c| count(&|j: &Job<S>| class_of(&classes.temporal, j.duration) == Some(c)))
        .collect();
    let spatial = (0..classes.spatial.len())
        .map(|c| count(&|j: &Job<S>| class_of(&classes.spatial, j.radius) == Some(c)))
        .collect();
    Ok(CountVector { temporal, spatial })
}

/// Exhaustive n-connectivity of the origin at time 0 and the query target.
pub fn brute_force_n_connected<S: Scalar>(
    realization: &Realization<S>,
    query: &ConnectivityQuery,
    classes: &SizeClasses,
    max_jobs: usize,
) -> Result<bool> {
    check_size(realization, max_jobs)?;
    let (s_n, start, target) = query.boxes(classes)?;
    let jobs = realization.jobs();
    let picked = filtered(realization, S::of(query.time), s_n);
    let sel: Vec<&Job<S>> = picked.iter().map(|&k| &jobs[k]).collect();
    let weights = vec![S::zero(); sel.len()];
    Ok(search(realization.dimension(), &sel, &weights, Start::Region(&start), Some(&target)).is_some())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_realization_scores_zero() {
        let r: Realization = Realization::from_jobs(1, 3.0, vec![]).unwrap();
        let (v, cert) = brute_force_max_score(&r, &Site::d1(0), 2.0, DEFAULT_MAX_JOBS).unwrap();
        assert_eq!(v, 0.0);
        assert!(cert.switches.is_empty());
    }

    #[test]
    fn single_job_at_end_time() {
        let r = Realization::from_jobs(1, 3.0, vec![Job::new(2.0, Site::d1(0), 1.0, 3.0).unwrap()]).unwrap();
        let (v, cert) = brute_force_max_score(&r, &Site::d1(0), 2.0, DEFAULT_MAX_JOBS).unwrap();
        assert_eq!(v, 3.0);
        assert_eq!(super::super::path_score(&r, &cert).unwrap(), 3.0);
    }

    #[test]
    fn size_cap_is_enforced() {
        let jobs = (0..13).map(|k| Job::new(k as f64 * 0.1, Site::d1(0), 0.0, 1.0).unwrap()).collect();
        let r = Realization::from_jobs(1, 3.0, jobs).unwrap();
        assert!(matches!(
            brute_force_max_score(&r, &Site::d1(0), 2.0, DEFAULT_MAX_JOBS),
            Err(PathError::TooLarge { .. })
        ));
    }

    #[test]
    fn representatives_cover_every_signature() {
        let boxes = vec![
            BoxRegion::around(&Site::from([0, 0]), 2),
            BoxRegion::around(&Site::from([3, 1]), 1),
            BoxRegion::point(&Site::from([-2, 2])),
        ];
        let reps = representatives(2, &boxes);
        let masks: std::collections::HashSet<u64> = reps.iter().map(|r| r.1).collect();
        for s in BoxRegion::centered(2, 8).sites() {
            let mask = boxes
                .iter()
                .enumerate()
                .filter(|(_, b)| b.contains(&s))
                .fold(0u64, |m, (k, _)| m | (1 << k));
            assert!(masks.contains(&mask), "{s:?}");
        }
    }
}
