//! Per-site value store over a bounded box with range-max and range-assign.
//!
//! One dimension uses a lazy segment tree; higher dimensions use a dense grid.

use crate::model::{BoxRegion, Site};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
struct SegTree<S> {
    n: usize,
    max: Vec<S>,
    lazy: Vec<Option<S>>,
}

impl<S: Scalar> SegTree<S> {
    fn new(n: usize, fill: S) -> Self {
        let size = 4 * n.max(1);
        SegTree {
            n,
            max: vec![fill; size],
            lazy: vec![None; size],
        }
    }

    fn push(&mut self, node: usize) {
        if let Some(v) = self.lazy[node].take() {
            for c in [2 * node, 2 * node + 1] {
                self.max[c] = v;
                self.lazy[c] = Some(v);
            }
        }
    }

    fn assign(&mut self, node: usize, lo: usize, hi: usize, a: usize, b: usize, v: S) {
        if b < lo || hi < a {
            return;
        }
        if a <= lo && hi <= b {
            self.max[node] = v;
            self.lazy[node] = Some(v);
            return;
        }
        self.push(node);
        let mid = (lo + hi) / 2;
        self.assign(2 * node, lo, mid, a, b, v);
        self.assign(2 * node + 1, mid + 1, hi, a, b, v);
        self.max[node] = self.max[2 * node].max(self.max[2 * node + 1]);
    }

    fn query(&mut self, node: usize, lo: usize, hi: usize, a: usize, b: usize) -> S {
        if b < lo || hi < a {
            return S::neg_infinity();
        }
        if a <= lo && hi <= b {
            return self.max[node];
        }
        self.push(node);
        let mid = (lo + hi) / 2;
        self.query(2 * node, lo, mid, a, b)
            .max(self.query(2 * node + 1, mid + 1, hi, a, b))
    }

    fn leaves(&mut self, node: usize, lo: usize, hi: usize, out: &mut Vec<S>) {
        if lo == hi {
            out.push(self.max[node]);
            return;
        }
        self.push(node);
        let mid = (lo + hi) / 2;
        self.leaves(2 * node, lo, mid, out);
        self.leaves(2 * node + 1, mid + 1, hi, out);
    }
}

#[derive(Clone, Debug)]
enum Store<S> {
    Line(SegTree<S>),
    Grid(Vec<S>),
}

#[derive(Clone, Debug)]
pub(crate) struct Arena<S> {
    region: BoxRegion,
    strides: Vec<usize>,
    store: Store<S>,
}

/// Sites beyond this count are refused to protect memory.
pub(crate) const MAX_SITES: u128 = 1 << 26;

impl<S: Scalar> Arena<S> {
    pub(crate) fn new(region: BoxRegion, fill: S) -> Self {
        assert!(!region.is_empty(), "arena region must be non-empty");
        assert!(
            region.volume() <= MAX_SITES,
            "arena of {} sites exceeds the limit of {MAX_SITES}",
            region.volume()
        );
        let dim = region.dim();
        let extents: Vec<usize> = (0..dim).map(|i| region.extent(i) as usize).collect();
        let mut strides = vec![1usize; dim];
        for i in (0..dim.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * extents[i + 1];
        }
        let store = if dim == 1 {
            Store::Line(SegTree::new(extents[0], fill))
        } else {
            Store::Grid(vec![fill; extents.iter().product()])
        };
        Arena {
            region,
            strides,
            store,
        }
    }

    pub(crate) fn region(&self) -> &BoxRegion {
        &self.region
    }

    fn offsets(&self, b: &BoxRegion) -> Option<(Vec<usize>, Vec<usize>)> {
        let clip = b.intersection(&self.region);
        if clip.is_empty() {
            return None;
        }
        let lo = (0..clip.dim())
            .map(|i| (clip.lo.coords()[i] - self.region.lo.coords()[i]) as usize)
            .collect();
        let hi = (0..clip.dim())
            .map(|i| (clip.hi.coords()[i] - self.region.lo.coords()[i]) as usize)
            .collect();
        Some((lo, hi))
    }

    /// Visit flat indices of a clipped box in lexicographic order.
    fn for_each_index(strides: &[usize], lo: &[usize], hi: &[usize], mut f: impl FnMut(usize)) {
        let dim = lo.len();
        let mut cur = lo.to_vec();
        loop {
            let base: usize = (0..dim - 1).map(|i| cur[i] * strides[i]).sum();
            for x in lo[dim - 1]..=hi[dim - 1] {
                f(base + x);
            }
            let mut axis = dim - 1;
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                if cur[axis] < hi[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = lo[axis];
            }
        }
    }

    /// Maximum over the part of `b` inside the arena; `-inf` if disjoint.
    pub(crate) fn max_in(&mut self, b: &BoxRegion) -> S {
        let Some((lo, hi)) = self.offsets(b) else {
            return S::neg_infinity();
        };
        match &mut self.store {
            Store::Line(t) => {
                let n = t.n;
                t.query(1, 0, n - 1, lo[0], hi[0])
            }
            Store::Grid(g) => {
                let mut m = S::neg_infinity();
                Self::for_each_index(&self.strides, &lo, &hi, |i| m = m.max(g[i]));
                m
            }
        }
    }

    /// Set every site of `b` inside the arena to `v`.
    pub(crate) fn assign(&mut self, b: &BoxRegion, v: S) {
        let Some((lo, hi)) = self.offsets(b) else {
            return;
        };
        match &mut self.store {
            Store::Line(t) => {
                let n = t.n;
                t.assign(1, 0, n - 1, lo[0], hi[0], v);
            }
            Store::Grid(g) => Self::for_each_index(&self.strides, &lo, &hi, |i| g[i] = v),
        }
    }

    pub(crate) fn get(&mut self, site: &Site) -> S {
        self.max_in(&BoxRegion::point(site))
    }

    /// All values in lexicographic site order.
    pub(crate) fn values(&mut self) -> Vec<S> {
        match &mut self.store {
            Store::Line(t) => {
                let n = t.n;
                let mut out = Vec::with_capacity(n);
                t.leaves(1, 0, n - 1, &mut out);
                out
            }
            Store::Grid(g) => g.clone(),
        }
    }

    /// Sites of `b` (clipped) paired with values, lexicographic.
    pub(crate) fn entries_in(&mut self, b: &BoxRegion) -> Vec<(Site, S)> {
        let clip = b.intersection(&self.region);
        if clip.is_empty() {
            return Vec::new();
        }
        let all = self.values();
        clip.sites()
            .map(|s| {
                let idx: usize = (0..s.dim())
                    .map(|i| (s.coords()[i] - self.region.lo.coords()[i]) as usize * self.strides[i])
                    .sum();
                (s, all[idx])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use proptest::prelude::*;

    use super::*;

    fn naive_check(dim: usize, ops: &[(Vec<i64>, Vec<i64>, f64)]) {
        let region = BoxRegion::centered(dim, 6);
        let mut arena = Arena::new(region.clone(), f64::NEG_INFINITY);
        let mut naive: HashMap<Site, f64> = region.sites().map(|s| (s, f64::NEG_INFINITY)).collect();
        for (a, b, v) in ops {
            let bx = BoxRegion::new(
                Site::new(a.iter().zip(b).map(|(x, y)| *x.min(y))),
                Site::new(a.iter().zip(b).map(|(x, y)| *x.max(y))),
            );
            let expect = bx
                .sites()
                .filter_map(|s| naive.get(&s).copied())
                .fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(arena.max_in(&bx), expect);
            arena.assign(&bx, *v);
            for s in bx.sites() {
                if let Some(x) = naive.get_mut(&s) {
                    *x = *v;
                }
            }
        }
        let entries = arena.entries_in(&region);
        for (s, v) in entries {
            assert_eq!(naive[&s], v);
        }
    }

    proptest! {
        #[test]
        fn line_matches_naive(ops in prop::collection::vec(
            (prop::collection::vec(-9i64..9, 1), prop::collection::vec(-9i64..9, 1), 0.0f64..10.0), 1..30)) {
            naive_check(1, &ops);
        }

        #[test]
        fn grid_matches_naive(ops in prop::collection::vec(
            (prop::collection::vec(-9i64..9, 2), prop::collection::vec(-9i64..9, 2), 0.0f64..10.0), 1..30)) {
            naive_check(2, &ops);
        }
    }
}
