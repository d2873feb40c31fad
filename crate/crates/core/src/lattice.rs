//! Sites, bonds, dual bonds and the boundary structure of the box
//! `Λ(l) = (-l/2, l/2]² ∩ ℤ²`.
//!
//! Box sites are stored row-major (`x2` outer, `x1` inner) so that a
//! configuration can be packed into bits in that order. The exterior
//! boundary is kept as a cycle of `4l` sites starting just below the
//! lexicographically smallest box site and running counterclockwise; every
//! interval of the boundary is a contiguous arc of that cycle.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of ℤ².
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Site {
    pub x1: i32,
    pub x2: i32,
}

impl Site {
    pub const ORIGIN: Site = Site { x1: 0, x2: 0 };

    pub const fn new(x1: i32, x2: i32) -> Self {
        Site { x1, x2 }
    }

    pub fn l1_dist(self, other: Site) -> u32 {
        self.x1.abs_diff(other.x1) + self.x2.abs_diff(other.x2)
    }

    pub fn linf_dist(self, other: Site) -> u32 {
        self.x1.abs_diff(other.x1).max(self.x2.abs_diff(other.x2))
    }

    /// The four l1-neighbours, in the order right, up, left, down.
    pub fn neighbors(self) -> [Site; 4] {
        [
            Site::new(self.x1 + 1, self.x2),
            Site::new(self.x1, self.x2 + 1),
            Site::new(self.x1 - 1, self.x2),
            Site::new(self.x1, self.x2 - 1),
        ]
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x1, self.x2)
    }
}

/// An unordered nearest-neighbour pair, stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bond {
    a: Site,
    b: Site,
}

impl Bond {
    pub fn new(p: Site, q: Site) -> Result<Self> {
        if p.l1_dist(q) != 1 {
            return Err(Error::InvalidArgument(format!(
                "{p} and {q} are not nearest neighbours"
            )));
        }
        Ok(Self::new_unchecked(p, q))
    }

    pub(crate) fn new_unchecked(p: Site, q: Site) -> Self {
        debug_assert_eq!(p.l1_dist(q), 1);
        if p < q {
            Bond { a: p, b: q }
        } else {
            Bond { a: q, b: p }
        }
    }

    pub fn endpoints(&self) -> (Site, Site) {
        (self.a, self.b)
    }

    /// A regular bond is horizontal when its endpoints share `x2`.
    pub fn is_horizontal(&self) -> bool {
        self.a.x2 == self.b.x2
    }

    pub fn dual(self) -> DualBond {
        DualBond(self)
    }

    pub fn other(&self, s: Site) -> Option<Site> {
        if s == self.a {
            Some(self.b)
        } else if s == self.b {
            Some(self.a)
        } else {
            None
        }
    }
}

/// A site of the dual lattice; `(i, j)` stands for the point `(i + ½, j + ½)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DualSite {
    pub i: i32,
    pub j: i32,
}

/// The perpendicular bisector of a regular bond, represented by that bond.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DualBond(Bond);

impl DualBond {
    pub fn bond(self) -> Bond {
        self.0
    }

    /// Dual bonds crossing vertical regular bonds are horizontal segments.
    pub fn is_horizontal(self) -> bool {
        !self.0.is_horizontal()
    }

    pub fn endpoints(self) -> (DualSite, DualSite) {
        let (a, _) = self.0.endpoints();
        if self.0.is_horizontal() {
            // (x, y)-(x+1, y) is bisected by the segment x + ½, y ± ½.
            (DualSite { i: a.x1, j: a.x2 - 1 }, DualSite { i: a.x1, j: a.x2 })
        } else {
            // (x, y)-(x, y+1) is bisected by the segment x ± ½, y + ½.
            (DualSite { i: a.x1 - 1, j: a.x2 }, DualSite { i: a.x1, j: a.x2 })
        }
    }

    /// Inverse of [`DualBond::endpoints`].
    pub fn from_endpoints(p: DualSite, q: DualSite) -> Result<Self> {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        if p.i == q.i && q.j == p.j + 1 {
            let x = Site::new(p.i, p.j + 1);
            Ok(DualBond(Bond::new_unchecked(x, Site::new(x.x1 + 1, x.x2))))
        } else if p.j == q.j && q.i == p.i + 1 {
            let x = Site::new(p.i + 1, p.j);
            Ok(DualBond(Bond::new_unchecked(x, Site::new(x.x1, x.x2 + 1))))
        } else {
            Err(Error::InvalidArgument(format!(
                "dual sites {p:?} and {q:?} are not adjacent"
            )))
        }
    }
}

/// The four sides of `Q(Λ(l))`: `F^{+1}`, `F^{-1}`, `F^{+2}`, `F^{-2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Right,
    Left,
    Top,
    Bottom,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Right, Side::Left, Side::Top, Side::Bottom];

    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Right | Side::Left)
    }
}

/// A contiguous arc of the exterior boundary cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoundaryInterval {
    pub start: usize,
    pub len: usize,
    pub cycle_len: usize,
}

impl BoundaryInterval {
    pub fn new(start: usize, len: usize, cycle_len: usize) -> Result<Self> {
        if cycle_len == 0 || len == 0 || len > cycle_len || start >= cycle_len {
            return Err(Error::InvalidArgument(format!(
                "interval start {start} len {len} does not fit a cycle of length {cycle_len}"
            )));
        }
        Ok(BoundaryInterval { start, len, cycle_len })
    }

    /// Cycle indices covered, in cycle order.
    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).map(move |k| (self.start + k) % self.cycle_len)
    }

    pub fn contains(&self, idx: usize) -> bool {
        let offset = (idx + self.cycle_len - self.start) % self.cycle_len;
        offset < self.len
    }

    pub fn sites(&self, lattice: &LatticeBox) -> Vec<Site> {
        self.indices().map(|k| lattice.exterior()[k]).collect()
    }

    /// Smallest arc containing every index of `set`, if the set is itself an arc.
    pub fn from_indices(set: &[usize], cycle_len: usize) -> Option<Self> {
        if set.is_empty() {
            return None;
        }
        let mut member = vec![false; cycle_len];
        for &k in set {
            member[k % cycle_len] = true;
        }
        let count = member.iter().filter(|&&m| m).count();
        if count == cycle_len {
            return Some(BoundaryInterval { start: 0, len: cycle_len, cycle_len });
        }
        // an arc has exactly one member whose predecessor is not a member
        let starts: Vec<usize> = (0..cycle_len)
            .filter(|&k| member[k] && !member[(k + cycle_len - 1) % cycle_len])
            .collect();
        if starts.len() != 1 {
            return None;
        }
        Some(BoundaryInterval { start: starts[0], len: count, cycle_len })
    }
}

/// The box `Λ(l)` with precomputed bonds and boundaries.
#[derive(Debug, Clone)]
pub struct LatticeBox {
    l: usize,
    lo: i32,
    hi: i32,
    sites: Vec<Site>,
    interior_bonds: Vec<Bond>,
    /// `boundary_bonds[k]` joins `exterior[k]` to its unique box neighbour.
    boundary_bonds: Vec<Bond>,
    inner_boundary: Vec<Site>,
    exterior: Vec<Site>,
    /// For each site index: in-box neighbour indices.
    box_neighbors: Vec<Vec<usize>>,
    /// For each site index: cycle indices of exterior neighbours.
    exterior_neighbors: Vec<Vec<usize>>,
}

pub fn build_box(l: i64) -> Result<LatticeBox> {
    LatticeBox::new(l)
}

impl LatticeBox {
    pub fn new(l: i64) -> Result<Self> {
        if l <= 0 {
            return Err(Error::InvalidArgument(format!("side length must be positive, got {l}")));
        }
        if l > 1 << 12 {
            return Err(Error::SizeGuard { what: format!("side length {l}"), limit: 1 << 12 });
        }
        let lu = l as usize;
        let li = l as i32;
        let lo = -((li - 1) / 2);
        let hi = li / 2;
        debug_assert_eq!(hi - lo + 1, li);

        let mut sites = Vec::with_capacity(lu * lu);
        for x2 in lo..=hi {
            for x1 in lo..=hi {
                sites.push(Site::new(x1, x2));
            }
        }

        let mut exterior = Vec::with_capacity(4 * lu);
        exterior.extend((lo..=hi).map(|x1| Site::new(x1, lo - 1)));
        exterior.extend((lo..=hi).map(|x2| Site::new(hi + 1, x2)));
        exterior.extend((lo..=hi).rev().map(|x1| Site::new(x1, hi + 1)));
        exterior.extend((lo..=hi).rev().map(|x2| Site::new(lo - 1, x2)));

        let mut lattice = LatticeBox {
            l: lu,
            lo,
            hi,
            sites,
            interior_bonds: Vec::new(),
            boundary_bonds: Vec::new(),
            inner_boundary: Vec::new(),
            exterior,
            box_neighbors: Vec::new(),
            exterior_neighbors: Vec::new(),
        };

        let mut interior = Vec::new();
        let mut box_nbrs = vec![Vec::new(); lu * lu];
        let mut ext_nbrs = vec![Vec::new(); lu * lu];
        for (idx, &s) in lattice.sites.iter().enumerate() {
            for n in s.neighbors() {
                if let Some(j) = lattice.index_of(n) {
                    box_nbrs[idx].push(j);
                    if s < n {
                        interior.push(Bond::new_unchecked(s, n));
                    }
                } else {
                    let k = lattice.cycle_index_of(n).expect("neighbour outside box is exterior");
                    ext_nbrs[idx].push(k);
                }
            }
        }
        interior.sort();
        let boundary_bonds = lattice
            .exterior
            .iter()
            .map(|&y| {
                let x = y
                    .neighbors()
                    .into_iter()
                    .find(|&n| lattice.contains(n))
                    .expect("exterior site touches the box");
                Bond::new_unchecked(x, y)
            })
            .collect();
        let inner_boundary =
            lattice.sites.iter().copied().filter(|&s| s.x1 == lo || s.x1 == hi || s.x2 == lo || s.x2 == hi).collect();

        lattice.interior_bonds = interior;
        lattice.boundary_bonds = boundary_bonds;
        lattice.inner_boundary = inner_boundary;
        lattice.box_neighbors = box_nbrs;
        lattice.exterior_neighbors = ext_nbrs;
        Ok(lattice)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Smallest coordinate of a box site.
    pub fn lo(&self) -> i32 {
        self.lo
    }

    /// Largest coordinate of a box site.
    pub fn hi(&self) -> i32 {
        self.hi
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, idx: usize) -> Site {
        self.sites[idx]
    }

    pub fn contains(&self, s: Site) -> bool {
        (self.lo..=self.hi).contains(&s.x1) && (self.lo..=self.hi).contains(&s.x2)
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        if !self.contains(s) {
            return None;
        }
        Some(((s.x2 - self.lo) as usize) * self.l + (s.x1 - self.lo) as usize)
    }

    /// Position of an exterior boundary site in the boundary cycle.
    pub fn cycle_index_of(&self, s: Site) -> Option<usize> {
        let (lo, hi, l) = (self.lo, self.hi, self.l);
        let in_range = |v: i32| (lo..=hi).contains(&v);
        if s.x2 == lo - 1 && in_range(s.x1) {
            Some((s.x1 - lo) as usize)
        } else if s.x1 == hi + 1 && in_range(s.x2) {
            Some(l + (s.x2 - lo) as usize)
        } else if s.x2 == hi + 1 && in_range(s.x1) {
            Some(2 * l + (hi - s.x1) as usize)
        } else if s.x1 == lo - 1 && in_range(s.x2) {
            Some(3 * l + (hi - s.x2) as usize)
        } else {
            None
        }
    }

    pub fn interior_bonds(&self) -> &[Bond] {
        &self.interior_bonds
    }

    /// Boundary bonds in cycle order: entry `k` ends at `exterior()[k]`.
    pub fn boundary_bonds(&self) -> &[Bond] {
        &self.boundary_bonds
    }

    /// `∂_in Λ(l)`.
    pub fn inner_boundary(&self) -> &[Site] {
        &self.inner_boundary
    }

    /// `∂_ex Λ(l)` in cycle order.
    pub fn exterior(&self) -> &[Site] {
        &self.exterior
    }

    pub fn exterior_boundary_cycle(&self) -> Vec<Site> {
        self.exterior.clone()
    }

    pub fn box_neighbors(&self, idx: usize) -> &[usize] {
        &self.box_neighbors[idx]
    }

    pub fn exterior_neighbors(&self, idx: usize) -> &[usize] {
        &self.exterior_neighbors[idx]
    }

    /// Side of `Q(Λ(l))` crossed by the boundary bond ending at cycle index `k`.
    pub fn side_of_cycle_index(&self, k: usize) -> Side {
        match k / self.l {
            0 => Side::Bottom,
            1 => Side::Right,
            2 => Side::Top,
            _ => Side::Left,
        }
    }

    /// If `b` is a boundary bond, its position in the cycle.
    pub fn boundary_bond_index(&self, b: &Bond) -> Option<usize> {
        let (p, q) = b.endpoints();
        match (self.contains(p), self.contains(q)) {
            (true, false) => self.cycle_index_of(q),
            (false, true) => self.cycle_index_of(p),
            _ => None,
        }
    }

    /// Whether `b` belongs to `B̄_Λ` (at least one endpoint in the box).
    pub fn touches(&self, b: &Bond) -> bool {
        let (p, q) = b.endpoints();
        self.contains(p) || self.contains(q)
    }

    /// All `4l` cyclic windows of `k` consecutive exterior sites.
    pub fn intervals_of_length(&self, k: usize) -> Result<Vec<BoundaryInterval>> {
        let n = self.exterior.len();
        if k == 0 || k > n {
            return Err(Error::InvalidArgument(format!(
                "interval length {k} outside [1, {n}]"
            )));
        }
        (0..n).map(|start| BoundaryInterval::new(start, k, n)).collect()
    }
}

/// Whether `set` is connected under `‖·‖_∞ = 1` steps.
pub fn is_linf_connected(set: &[Site]) -> bool {
    is_connected_by(set, |a, b| a.linf_dist(b) == 1)
}

/// Whether `set` is connected under `‖·‖₁ = 1` steps.
pub fn is_l1_connected(set: &[Site]) -> bool {
    is_connected_by(set, |a, b| a.l1_dist(b) == 1)
}

fn is_connected_by(set: &[Site], adjacent: impl Fn(Site, Site) -> bool) -> bool {
    if set.is_empty() {
        return true;
    }
    let mut seen = vec![false; set.len()];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..set.len() {
            if !seen[j] && adjacent(set[i], set[j]) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
