//! Exhaustive contour enumeration. A contour is the boundary of a finite,
//! l1-connected, hole-free site set, so contours are enumerated through
//! their enclosed sets with Redelmeier's growth scheme.

use rayon::prelude::*;

use super::{fill_holes, outer_contour, Contour};
use crate::error::{Error, Result};
use crate::lattice::{DualBond, LatticeBox, Site};

/// Longest contour that [`count_contours_through`] will enumerate.
pub const MAX_COUNT_LENGTH: usize = 14;

struct Grid {
    origin: Site,
    radius: i32,
    width: usize,
}

impl Grid {
    fn new(origin: Site, radius: usize) -> Self {
        let radius = radius as i32 + 1;
        Grid { origin, radius, width: (2 * radius + 1) as usize }
    }

    fn index(&self, s: Site) -> Option<usize> {
        let dx = s.x1 - self.origin.x1 + self.radius;
        let dy = s.x2 - self.origin.x2 + self.radius;
        let w = self.width as i32;
        (dx >= 0 && dy >= 0 && dx < w && dy < w).then(|| dy as usize * self.width + dx as usize)
    }
}

struct Growth<'a, A, V> {
    grid: Grid,
    allowed: A,
    visit: &'a mut V,
    max_size: usize,
    seen: Vec<bool>,
    member: Vec<bool>,
    current: Vec<Site>,
}

impl<A, V> Growth<'_, A, V>
where
    A: Fn(Site) -> bool,
    V: FnMut(&[Site], usize),
{
    fn grow(&mut self, mut untried: Vec<Site>, perimeter: usize) {
        while let Some(c) = untried.pop() {
            let ci = self.grid.index(c).expect("inside grid");
            let touching = c
                .neighbors()
                .iter()
                .filter(|&&n| self.grid.index(n).is_some_and(|k| self.member[k]))
                .count();
            let p = perimeter + 4 - 2 * touching;
            self.member[ci] = true;
            self.current.push(c);
            (self.visit)(&self.current, p);
            if self.current.len() < self.max_size {
                let mut fresh = Vec::new();
                for n in c.neighbors() {
                    if let Some(k) = self.grid.index(n) {
                        if !self.seen[k] && (self.allowed)(n) {
                            self.seen[k] = true;
                            fresh.push((n, k));
                        }
                    }
                }
                let mut next = untried.clone();
                next.extend(fresh.iter().map(|&(n, _)| n));
                self.grow(next, p);
                for (_, k) in fresh {
                    self.seen[k] = false;
                }
            }
            self.current.pop();
            self.member[ci] = false;
        }
    }
}

/// Calls `visit(set, perimeter)` once for every l1-connected set of at most
/// `max_size` sites that contains `root`, avoids `excluded` and only uses
/// sites accepted by `allowed`. `perimeter` counts every bond leaving the set.
pub fn connected_sets_containing<A, V>(root: Site, excluded: &[Site], max_size: usize, allowed: A, mut visit: V)
where
    A: Fn(Site) -> bool,
    V: FnMut(&[Site], usize),
{
    if max_size == 0 || !allowed(root) || excluded.contains(&root) {
        return;
    }
    let grid = Grid::new(root, max_size);
    let cells = grid.width * grid.width;
    let mut seen = vec![false; cells];
    for &e in excluded {
        if let Some(k) = grid.index(e) {
            seen[k] = true;
        }
    }
    seen[grid.index(root).expect("root in grid")] = true;
    let mut g = Growth {
        grid,
        allowed: |s: Site| allowed(s),
        visit: &mut visit,
        max_size,
        seen,
        member: vec![false; cells],
        current: Vec::new(),
    };
    g.grow(vec![root], 0);
}

fn is_hole_free(set: &[Site]) -> bool {
    // four or fewer sites cannot surround anything
    set.len() < 7 || fill_holes(set).len() == set.len()
}

/// Sets on one side of `b` with the given perimeter.
fn count_one_side(inside: Site, outside: Site, m: usize) -> u64 {
    let max_size = m * m / 16;
    let mut count = 0u64;
    connected_sets_containing(inside, &[outside], max_size, |_| true, |set, p| {
        if p == m && is_hole_free(set) {
            count += 1;
        }
    });
    count
}

/// Number of contours of length `m` that contain the dual bond `bond`.
pub fn count_contours_through(bond: DualBond, m: usize) -> Result<u64> {
    if m > MAX_COUNT_LENGTH {
        return Err(Error::SizeGuard { what: format!("contour enumeration at length {m}"), limit: MAX_COUNT_LENGTH });
    }
    if m < 4 || m % 2 == 1 {
        return Ok(0);
    }
    let (a, c) = bond.bond().endpoints();
    let sides: Vec<u64> = [(a, c), (c, a)].into_par_iter().map(|(x, y)| count_one_side(x, y, m)).collect();
    Ok(sides.iter().sum())
}

/// Every contour in `Λ(l)` whose enclosed set contains `site`.
pub fn contours_enclosing(lattice: &LatticeBox, site: Site) -> Vec<Contour> {
    let mut out = Vec::new();
    connected_sets_containing(site, &[], lattice.num_sites(), |s| lattice.contains(s), |set, _| {
        if is_hole_free(set) {
            out.push(outer_contour(set).expect("connected set"));
        }
    });
    out.sort_by(|a, b| a.bonds().cmp(b.bonds()));
    out
}

/// `Σ exp(−2β|γ|/9)` over contours in `Λ(l)` enclosing the origin, with the
/// number of contours of each length.
pub fn peierls_sum(lattice: &LatticeBox, beta: f64) -> (f64, Vec<u64>) {
    let mut by_length = vec![0u64; 4 * lattice.num_sites() + 1];
    connected_sets_containing(Site::ORIGIN, &[], lattice.num_sites(), |s| lattice.contains(s), |set, p| {
        if is_hole_free(set) {
            by_length[p] += 1;
        }
    });
    let sum = by_length
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(m, &n)| n as f64 * (-2.0 * beta * m as f64 / 9.0).exp())
        .sum();
    (sum, by_length)
}
