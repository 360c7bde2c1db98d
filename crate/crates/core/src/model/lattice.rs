//! Lattice geometry on Z^d with the l∞ norm.

use std::fmt;

use smallvec::SmallVec;

use crate::scalar::Scalar;

/// A lattice point of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Site(SmallVec<[i64; 4]>);

impl Site {
    pub fn new(coords: impl IntoIterator<Item = i64>) -> Self {
        Site(coords.into_iter().collect())
    }

    pub fn origin(dim: usize) -> Self {
        Site(SmallVec::from_elem(0, dim))
    }

    /// One-dimensional site.
    pub fn d1(x: i64) -> Self {
        Site(SmallVec::from_slice(&[x]))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// |self - other|_∞.
    pub fn linf_dist(&self, other: &Site) -> u64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }

    pub fn norm(&self) -> u64 {
        self.0.iter().map(|a| a.unsigned_abs()).max().unwrap_or(0)
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl From<i64> for Site {
    fn from(x: i64) -> Self {
        Site::d1(x)
    }
}

impl<const N: usize> From<[i64; N]> for Site {
    fn from(c: [i64; N]) -> Self {
        Site::new(c)
    }
}

/// Axis-aligned box `[lo_i, hi_i]` (inclusive) in Z^d. Empty when any `lo_i > hi_i`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoxRegion {
    pub lo: Site,
    pub hi: Site,
}

impl BoxRegion {
    pub fn new(lo: Site, hi: Site) -> Self {
        debug_assert_eq!(lo.dim(), hi.dim());
        BoxRegion { lo, hi }
    }

    /// `[-half, half]^d`.
    pub fn centered(dim: usize, half: i64) -> Self {
        BoxRegion {
            lo: Site(SmallVec::from_elem(-half, dim)),
            hi: Site(SmallVec::from_elem(half, dim)),
        }
    }

    /// `{y : |y - center|_∞ <= reach}`.
    pub fn around(center: &Site, reach: i64) -> Self {
        BoxRegion {
            lo: Site(center.0.iter().map(|c| c.saturating_sub(reach)).collect()),
            hi: Site(center.0.iter().map(|c| c.saturating_add(reach)).collect()),
        }
    }

    pub fn point(site: &Site) -> Self {
        BoxRegion {
            lo: site.clone(),
            hi: site.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.0.iter().zip(self.hi.0.iter()).any(|(l, h)| l > h)
    }

    pub fn contains(&self, site: &Site) -> bool {
        site.0
            .iter()
            .zip(self.lo.0.iter().zip(self.hi.0.iter()))
            .all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        other.is_empty()
            || (0..self.dim()).all(|i| self.lo.0[i] <= other.lo.0[i] && other.hi.0[i] <= self.hi.0[i])
    }

    pub fn intersects(&self, other: &BoxRegion) -> bool {
        !self.intersection(other).is_empty()
    }

    pub fn intersection(&self, other: &BoxRegion) -> BoxRegion {
        BoxRegion {
            lo: Site(self.lo.0.iter().zip(other.lo.0.iter()).map(|(a, b)| *a.max(b)).collect()),
            hi: Site(self.hi.0.iter().zip(other.hi.0.iter()).map(|(a, b)| *a.min(b)).collect()),
        }
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BoxRegion) -> BoxRegion {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        BoxRegion {
            lo: Site(self.lo.0.iter().zip(other.lo.0.iter()).map(|(a, b)| *a.min(b)).collect()),
            hi: Site(self.hi.0.iter().zip(other.hi.0.iter()).map(|(a, b)| *a.max(b)).collect()),
        }
    }

    pub fn dilate(&self, by: i64) -> BoxRegion {
        BoxRegion {
            lo: Site(self.lo.0.iter().map(|a| a.saturating_sub(by)).collect()),
            hi: Site(self.hi.0.iter().map(|a| a.saturating_add(by)).collect()),
        }
    }

    /// Side length along axis `i`.
    pub fn extent(&self, i: usize) -> u64 {
        if self.lo.0[i] > self.hi.0[i] {
            0
        } else {
            self.hi.0[i].abs_diff(self.lo.0[i]) + 1
        }
    }

    /// Number of lattice sites (saturating).
    pub fn volume(&self) -> u128 {
        (0..self.dim()).fold(1u128, |acc, i| acc.saturating_mul(self.extent(i) as u128))
    }

    /// True when the box reaches or crosses the boundary of `[-half, half]^d`.
    pub fn touches_edge_of(&self, half: i64) -> bool {
        !self.is_empty()
            && self
                .lo
                .0
                .iter()
                .zip(self.hi.0.iter())
                .any(|(l, h)| *l <= -half || *h >= half)
    }

    /// Sites in lexicographic order.
    pub fn sites(&self) -> BoxSites {
        BoxSites {
            next: if self.is_empty() { None } else { Some(self.lo.clone()) },
            region: self.clone(),
        }
    }
}

pub struct BoxSites {
    region: BoxRegion,
    next: Option<Site>,
}

impl Iterator for BoxSites {
    type Item = Site;

    fn next(&mut self) -> Option<Site> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let d = succ.dim();
        let mut axis = d;
        while axis > 0 {
            axis -= 1;
            if succ.0[axis] < self.region.hi.0[axis] {
                succ.0[axis] += 1;
                self.next = Some(succ);
                return Some(current);
            }
            succ.0[axis] = self.region.lo.0[axis];
        }
        Some(current)
    }
}

/// Closed l∞ ball `{y : |y - center|_∞ <= radius}` with a real radius.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball<S> {
    pub center: Site,
    pub radius: S,
}

/// Integer reach of a real radius: `|y - x| <= r` iff `|y - x| <= floor(r)` on integers.
pub fn reach_of<S: Scalar>(radius: S) -> i64 {
    // Radii beyond 2^60 are clamped so box arithmetic cannot overflow.
    const CAP: i64 = 1 << 60;
    radius.floor().to_i64().map_or(CAP, |r| r.min(CAP))
}

impl<S: Scalar> Ball<S> {
    pub fn reach(&self) -> i64 {
        reach_of(self.radius)
    }

    pub fn contains(&self, site: &Site) -> bool {
        S::from_u64(site.linf_dist(&self.center)).is_some_and(|d| d <= self.radius)
    }

    pub fn bounding_box(&self) -> BoxRegion {
        BoxRegion::around(&self.center, self.reach())
    }

    pub fn sites(&self) -> BoxSites {
        self.bounding_box().sites()
    }
}

/// `{y : |y - center|_∞ <= radius}`.
pub fn ball<S: Scalar>(center: Site, radius: S) -> Ball<S> {
    debug_assert!(radius >= S::zero());
    Ball { center, radius }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_ball_is_single_site() {
        let b = ball(Site::d1(0), 0.0f64);
        assert_eq!(b.sites().collect::<Vec<_>>(), vec![Site::d1(0)]);
    }

    #[test]
    fn unit_ball_in_2d_has_nine_sites() {
        let b = ball(Site::origin(2), 1.0f64);
        let sites: Vec<_> = b.sites().collect();
        assert_eq!(sites.len(), 9);
        assert!(sites.iter().all(|s| b.contains(s)));
    }

    #[test]
    fn real_radius_floors_to_integer_reach() {
        let b = ball(Site::d1(3), 2.5f64);
        let sites: Vec<i64> = b.sites().map(|s| s.coords()[0]).collect();
        assert_eq!(sites, vec![1, 2, 3, 4, 5]);
        assert!(!b.contains(&Site::d1(6)));
        assert!(!b.contains(&Site::d1(0)));
    }

    #[test]
    fn membership_matches_reach_box() {
        for r in [0.0, 0.3, 1.0, 1.999, 2.0, 3.7] {
            let b = ball(Site::from([1, -2]), r);
            let bb = b.bounding_box();
            for s in BoxRegion::centered(2, 8).sites() {
                assert_eq!(b.contains(&s), bb.contains(&s), "r={r} s={s:?}");
            }
        }
    }

    #[test]
    fn box_iteration_is_lexicographic_and_complete() {
        let bx = BoxRegion::new(Site::from([0, -1]), Site::from([1, 1]));
        let v: Vec<_> = bx.sites().collect();
        assert_eq!(v.len(), 6);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(bx.volume(), 6);
    }

    #[test]
    fn empty_box_behaviour() {
        let a = BoxRegion::centered(1, 1);
        let b = BoxRegion::new(Site::d1(5), Site::d1(6));
        assert!(a.intersection(&b).is_empty());
        assert!(!a.intersects(&b));
        assert_eq!(a.intersection(&b).sites().count(), 0);
        assert_eq!(a.hull(&b), BoxRegion::new(Site::d1(-1), Site::d1(6)));
    }
}
