//! Contours on the dual lattice: clusters, outer boundaries, crossing
//! classification, flip maps and the energy bookkeeping built on them.
//!
//! A contour is stored as the sorted list of regular bonds whose duals make
//! up `∂Q(Θ)`, together with the enclosed site set `Θ` (holes filled).

mod decompose;
mod enumerate;
mod lemmas;
mod trap;

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use decompose::{decompose_noncrossing, NonCrossingDecomposition};
pub use enumerate::{
    connected_sets_containing, contours_enclosing, count_contours_through, peierls_sum, MAX_COUNT_LENGTH,
};
pub use lemmas::{
    check_lemma31, check_lemma32, deco0_identity, InequalityCheck, Lemma31Case, Lemma32Part, LemmaReport,
};
pub use trap::{trap_members, trap_membership, TrapEvent, MAX_TRAP_DELTA};

use crate::error::{Error, Result};
use crate::hamiltonian::{Configuration, Model, Sign};
use crate::lattice::{Bond, DualBond, DualSite, LatticeBox, Side, Site};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Contour {
    bonds: Vec<Bond>,
    theta: Vec<Site>,
    sign: Option<Sign>,
}

impl Contour {
    /// Number of dual bonds `|γ|`.
    pub fn len(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bonds.is_empty()
    }

    /// Regular bonds whose duals form the contour, sorted.
    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn dual_bonds(&self) -> impl Iterator<Item = DualBond> + '_ {
        self.bonds.iter().map(|b| b.dual())
    }

    /// `Θ(γ)`, sorted.
    pub fn theta(&self) -> &[Site] {
        &self.theta
    }

    pub fn sign(&self) -> Option<Sign> {
        self.sign
    }

    pub fn with_sign(mut self, sign: Sign) -> Self {
        self.sign = Some(sign);
        self
    }

    pub fn contains_bond(&self, b: &Bond) -> bool {
        self.bonds.binary_search(b).is_ok()
    }

    pub fn encloses(&self, s: Site) -> bool {
        self.theta.binary_search(&s).is_ok()
    }

    /// Whether every dual bond lies in `B̄*_Λ`.
    pub fn is_in_box(&self, lattice: &LatticeBox) -> bool {
        self.bonds.iter().all(|b| lattice.touches(b))
    }

    /// Cycle indices of the boundary bonds of `γ ∩ ∂Q(Λ(l))`; these are also
    /// the cycle positions of `V_ex(γ)`.
    pub fn boundary_indices(&self, lattice: &LatticeBox) -> Vec<usize> {
        let mut v: Vec<usize> = self.bonds.iter().filter_map(|b| lattice.boundary_bond_index(b)).collect();
        v.sort_unstable();
        v
    }

    /// `|γ ∩ ∂Q(Λ(l))|`.
    pub fn boundary_count(&self, lattice: &LatticeBox) -> usize {
        self.bonds.iter().filter(|b| lattice.boundary_bond_index(b).is_some()).count()
    }

    /// `|γ \ ∂Q(Λ(l))|`.
    pub fn interior_count(&self, lattice: &LatticeBox) -> usize {
        self.len() - self.boundary_count(lattice)
    }

    pub fn touches_boundary(&self, lattice: &LatticeBox) -> bool {
        self.bonds.iter().any(|b| lattice.boundary_bond_index(b).is_some())
    }

    pub fn sides_touched(&self, lattice: &LatticeBox) -> BTreeSet<Side> {
        self.boundary_indices(lattice).into_iter().map(|k| lattice.side_of_cycle_index(k)).collect()
    }

    /// Number of horizontal dual bonds (duals of vertical regular bonds).
    pub fn horizontal_count(&self) -> usize {
        self.bonds.iter().filter(|b| !b.is_horizontal()).count()
    }

    pub fn vertical_count(&self) -> usize {
        self.bonds.iter().filter(|b| b.is_horizontal()).count()
    }

    /// `V(γ)`: endpoints of the regular bonds, sorted.
    pub fn vertex_set(&self) -> Vec<Site> {
        let set: BTreeSet<Site> = self
            .bonds
            .iter()
            .flat_map(|b| {
                let (p, q) = b.endpoints();
                [p, q]
            })
            .collect();
        set.into_iter().collect()
    }

    /// Rebuilds a contour from its dual bonds, recovering `Θ` by ray parity
    /// and checking that the bonds are exactly `∂Q(Θ)` with `Θ`, `Θᶜ`
    /// l1-connected.
    pub fn from_dual_bonds(duals: &[DualBond]) -> Result<Contour> {
        let mut bonds: Vec<Bond> = duals.iter().map(|d| d.bond()).collect();
        bonds.sort();
        bonds.dedup();
        if bonds.len() != duals.len() || bonds.is_empty() {
            return Err(Error::InvalidArgument("contour needs distinct dual bonds".into()));
        }
        // a cell is inside when the ray to the right crosses an odd number of
        // vertical dual bonds, i.e. horizontal regular bonds further right
        let mut theta = Vec::new();
        let crossers: Vec<Site> = bonds.iter().filter(|b| b.is_horizontal()).map(|b| b.endpoints().0).collect();
        let (x1min, x1max) = bonds.iter().fold((i32::MAX, i32::MIN), |(a, z), b| {
            let (p, q) = b.endpoints();
            (a.min(p.x1.min(q.x1)), z.max(p.x1.max(q.x1)))
        });
        let (x2min, x2max) = bonds.iter().fold((i32::MAX, i32::MIN), |(a, z), b| {
            let (p, q) = b.endpoints();
            (a.min(p.x2.min(q.x2)), z.max(p.x2.max(q.x2)))
        });
        for x2 in x2min..=x2max {
            for x1 in x1min..=x1max {
                let hits = crossers.iter().filter(|c| c.x2 == x2 && c.x1 >= x1).count();
                if hits % 2 == 1 {
                    theta.push(Site::new(x1, x2));
                }
            }
        }
        let c = outer_contour(&theta)?;
        if c.theta != {
            let mut t = theta.clone();
            t.sort();
            t
        } || c.bonds != bonds
        {
            return Err(Error::InvalidArgument("dual bonds do not bound a simply connected set".into()));
        }
        Ok(c)
    }

    /// One dual bond per line as `u1 v1 u2 v2`, the half-integer coordinates
    /// of its endpoints, in canonical order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let sign = self.sign.map(|e| e.to_string()).unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "# contour len={} sign={}", self.len(), sign);
        for d in self.dual_bonds() {
            let (p, q) = d.endpoints();
            let h = |v: i32| v as f64 + 0.5;
            let _ = writeln!(s, "{} {} {} {}", h(p.i), h(p.j), h(q.i), h(q.j));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Contour> {
        let mut duals = Vec::new();
        let mut sign = None;
        for (n, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if let Some(header) = t.strip_prefix('#') {
                if let Some(part) = header.split_whitespace().find_map(|w| w.strip_prefix("sign=")) {
                    sign = match part {
                        "+" => Some(Sign::Plus),
                        "-" => Some(Sign::Minus),
                        _ => None,
                    };
                }
                continue;
            }
            let err = |m: &str| Error::Parse { line: n + 1, message: m.to_string() };
            let nums: Vec<f64> = t
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| err("expected four numbers")))
                .collect::<Result<_>>()?;
            if nums.len() != 4 {
                return Err(err("expected four numbers"));
            }
            let to_dual = |v: f64| -> Result<i32> {
                let i = v - 0.5;
                if i.fract() != 0.0 {
                    return Err(err("dual coordinates are half-integers"));
                }
                Ok(i as i32)
            };
            let p = DualSite { i: to_dual(nums[0])?, j: to_dual(nums[1])? };
            let q = DualSite { i: to_dual(nums[2])?, j: to_dual(nums[3])? };
            duals.push(DualBond::from_endpoints(p, q).map_err(|e| err(&e.to_string()))?);
        }
        let c = Contour::from_dual_bonds(&duals)?;
        Ok(match sign {
            Some(s) => c.with_sign(s),
            None => c,
        })
    }
}

/// Fills the holes of a finite set: every site not reachable from infinity
/// through the complement.
pub fn fill_holes(theta: &[Site]) -> Vec<Site> {
    if theta.is_empty() {
        return Vec::new();
    }
    let set: HashSet<Site> = theta.iter().copied().collect();
    let x1lo = theta.iter().map(|s| s.x1).min().unwrap() - 1;
    let x1hi = theta.iter().map(|s| s.x1).max().unwrap() + 1;
    let x2lo = theta.iter().map(|s| s.x2).min().unwrap() - 1;
    let x2hi = theta.iter().map(|s| s.x2).max().unwrap() + 1;
    let w = (x1hi - x1lo + 1) as usize;
    let h = (x2hi - x2lo + 1) as usize;
    let idx = |s: Site| (s.x2 - x2lo) as usize * w + (s.x1 - x1lo) as usize;
    let mut outside = vec![false; w * h];
    let start = Site::new(x1lo, x2lo);
    outside[idx(start)] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for n in s.neighbors() {
            if n.x1 < x1lo || n.x1 > x1hi || n.x2 < x2lo || n.x2 > x2hi {
                continue;
            }
            let k = idx(n);
            if !outside[k] && !set.contains(&n) {
                outside[k] = true;
                queue.push_back(n);
            }
        }
    }
    let mut filled = Vec::new();
    for x2 in x2lo..=x2hi {
        for x1 in x1lo..=x1hi {
            let s = Site::new(x1, x2);
            if !outside[idx(s)] {
                filled.push(s);
            }
        }
    }
    filled.sort();
    filled
}

/// Sorted bonds of `∂Q(Θ)`.
pub fn boundary_bonds_of(theta: &[Site]) -> Vec<Bond> {
    let set: HashSet<Site> = theta.iter().copied().collect();
    let mut bonds: Vec<Bond> = theta
        .iter()
        .flat_map(|&s| s.neighbors().into_iter().filter(|n| !set.contains(n)).map(move |n| Bond::new_unchecked(s, n)))
        .collect();
    bonds.sort();
    bonds
}

/// The outer boundary of `Q(Θ)` for an l1-connected `Θ`.
pub fn outer_contour(theta: &[Site]) -> Result<Contour> {
    if theta.is_empty() {
        return Err(Error::InvalidArgument("empty site set has no contour".into()));
    }
    if !crate::lattice::is_l1_connected(theta) {
        return Err(Error::InvalidArgument("site set is not l1-connected".into()));
    }
    let filled = fill_holes(theta);
    let bonds = boundary_bonds_of(&filled);
    Ok(Contour { bonds, theta: filled, sign: None })
}

/// l1-connected components of `{x : σ_x = ε}`, each sorted, ordered by their
/// first site in canonical order.
pub fn clusters(sigma: &Configuration, epsilon: Sign, lattice: &LatticeBox) -> Vec<Vec<Site>> {
    let n = lattice.num_sites();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] || sigma.sign(start) != epsilon {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![lattice.site(start)];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for &j in lattice.box_neighbors(i) {
                if !seen[j] && sigma.sign(j) == epsilon {
                    seen[j] = true;
                    comp.push(lattice.site(j));
                    stack.push(j);
                }
            }
        }
        comp.sort();
        out.push(comp);
    }
    out
}

/// One `(ε)`-contour per `(ε)`-cluster. The boundary field plays no role.
pub fn epsilon_contours_at(sigma: &Configuration, epsilon: Sign, lattice: &LatticeBox) -> Vec<Contour> {
    clusters(sigma, epsilon, lattice)
        .into_iter()
        .map(|c| outer_contour(&c).expect("clusters are connected").with_sign(epsilon))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Crossing {
    Horizontal,
    Vertical,
    Both,
    None,
}

pub fn is_crossing(gamma: &Contour, lattice: &LatticeBox) -> Crossing {
    let sides = gamma.sides_touched(lattice);
    let h = sides.contains(&Side::Right) && sides.contains(&Side::Left);
    let v = sides.contains(&Side::Top) && sides.contains(&Side::Bottom);
    match (h, v) {
        (true, true) => Crossing::Both,
        (true, false) => Crossing::Horizontal,
        (false, true) => Crossing::Vertical,
        (false, false) => Crossing::None,
    }
}

/// `T_{γ_1} ∘ … ∘ T_{γ_p} σ`.
pub fn flip_map(gammas: &[Contour], sigma: &Configuration, lattice: &LatticeBox) -> Result<Configuration> {
    let mut out = *sigma;
    for g in gammas.iter().rev() {
        for &s in g.theta() {
            let i = lattice.index_of(s).ok_or(Error::SiteOutside((s.x1, s.x2)))?;
            out.flip_in_place(i);
        }
    }
    Ok(out)
}

/// `Δ_{γ_1…γ_p} H(σ) = H(σ) − H(T_{γ_1} ∘ … ∘ T_{γ_p} σ)`.
pub fn delta_h(gammas: &[Contour], sigma: &Configuration, model: &Model) -> Result<f64> {
    let flipped = flip_map(gammas, sigma, model.lattice())?;
    Ok(model.energy(sigma) - model.energy(&flipped))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{make_boundary, BoundaryKind};

    fn lat(l: i64) -> LatticeBox {
        LatticeBox::new(l).unwrap()
    }

    fn config(lattice: &LatticeBox, plus: &[Site]) -> Configuration {
        let mut c = Configuration::uniform(lattice.num_sites(), Sign::Minus);
        for s in plus {
            c.flip_in_place(lattice.index_of(*s).unwrap());
        }
        c
    }

    #[test]
    fn cluster_examples() {
        let b = lat(3);
        let all = Configuration::uniform(9, Sign::Plus);
        let cl = clusters(&all, Sign::Plus, &b);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].len(), 9);
        assert!(clusters(&all, Sign::Minus, &b).is_empty());

        let b2 = lat(2);
        let checker = config(&b2, &[Site::new(0, 0), Site::new(1, 1)]);
        let cl = clusters(&checker, Sign::Plus, &b2);
        assert_eq!(cl, vec![vec![Site::new(0, 0)], vec![Site::new(1, 1)]]);
    }

    #[test]
    fn outer_contour_examples() {
        assert_eq!(outer_contour(&[Site::ORIGIN]).unwrap().len(), 4);
        assert_eq!(outer_contour(lat(2).sites()).unwrap().len(), 8);
        let tromino = [Site::new(0, 0), Site::new(1, 0), Site::new(0, 1)];
        assert_eq!(outer_contour(&tromino).unwrap().len(), 8);
        assert!(outer_contour(&[Site::new(0, 0), Site::new(1, 1)]).is_err());
        assert!(outer_contour(&[]).is_err());
    }

    #[test]
    fn ring_fills_its_hole() {
        let mut ring = Vec::new();
        for x1 in -1..=1 {
            for x2 in -1..=1 {
                if (x1, x2) != (0, 0) {
                    ring.push(Site::new(x1, x2));
                }
            }
        }
        let c = outer_contour(&ring).unwrap();
        assert_eq!(c.len(), 12);
        assert!(c.encloses(Site::ORIGIN));
        assert_eq!(c.theta().len(), 9);
    }

    #[test]
    fn contours_of_uniform_and_single_site() {
        let b = lat(4);
        let all = Configuration::uniform(16, Sign::Plus);
        let g = epsilon_contours_at(&all, Sign::Plus, &b);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].bonds(), {
            let mut v = b.boundary_bonds().to_vec();
            v.sort();
            v
        });
        let one = config(&b, &[Site::ORIGIN]);
        let g = epsilon_contours_at(&one, Sign::Plus, &b);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].len(), 4);
        let neg = epsilon_contours_at(&one.global_flip(), Sign::Minus, &b);
        assert_eq!(neg[0].bonds(), g[0].bonds());
    }

    #[test]
    fn crossing_classification() {
        let b = lat(4);
        let full = outer_contour(b.sites()).unwrap();
        assert_eq!(is_crossing(&full, &b), Crossing::Both);
        assert_eq!(is_crossing(&outer_contour(&[Site::ORIGIN]).unwrap(), &b), Crossing::None);
        let bottom: Vec<Site> = b.sites().iter().copied().filter(|s| s.x2 == b.lo()).collect();
        assert_eq!(is_crossing(&outer_contour(&bottom).unwrap(), &b), Crossing::Horizontal);
    }

    #[test]
    fn flip_map_examples() {
        let b = lat(3);
        let all = Configuration::uniform(9, Sign::Plus);
        let full = outer_contour(b.sites()).unwrap();
        assert_eq!(flip_map(&[full.clone()], &all, &b).unwrap(), all.global_flip());
        let twice = flip_map(&[full.clone(), full], &all, &b).unwrap();
        assert_eq!(twice, all);
        let unit = outer_contour(&[Site::ORIGIN]).unwrap();
        let f = flip_map(&[unit], &all, &b).unwrap();
        assert_eq!((0..9).filter(|&i| f.is_plus(i) != all.is_plus(i)).count(), 1);
    }

    #[test]
    fn interior_contour_costs_twice_its_length() {
        let b = lat(4);
        let m = Model::new(b.clone(), make_boundary(&BoundaryKind::Alternating, &b).unwrap()).unwrap();
        let sigma = config(&b, &[Site::new(0, 0), Site::new(1, 0), Site::new(0, 1)]);
        let g = epsilon_contours_at(&sigma, Sign::Plus, &b);
        assert_eq!(g.len(), 1);
        assert_eq!(delta_h(&g, &sigma, &m).unwrap(), 2.0 * g[0].len() as f64);
    }

    #[test]
    fn full_box_contour_delta() {
        let b = lat(3);
        let m = Model::new(b.clone(), make_boundary(&BoundaryKind::Plus, &b).unwrap()).unwrap();
        let sigma = Configuration::uniform(9, Sign::Plus);
        let g = epsilon_contours_at(&sigma, Sign::Plus, &b);
        let d = delta_h(&g, &sigma, &m).unwrap();
        // oracle: two full energy evaluations
        assert_eq!(d, m.energy(&sigma) - m.energy(&sigma.global_flip()));
        assert_eq!(d, -2.0 * 12.0);
        let (lhs, rhs) = deco0_identity(&g[0], &sigma, &m).unwrap();
        assert_eq!(d / 2.0, lhs);
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn text_round_trip() {
        let shape = [Site::new(0, 0), Site::new(1, 0), Site::new(1, 1), Site::new(2, 1)];
        let c = outer_contour(&shape).unwrap().with_sign(Sign::Minus);
        let back = Contour::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert!(Contour::from_text("0.5 0.5 1.5\n").is_err());
        // two disjoint squares do not form a contour
        let mut d: Vec<DualBond> = outer_contour(&[Site::new(0, 0)]).unwrap().dual_bonds().collect();
        d.extend(outer_contour(&[Site::new(5, 5)]).unwrap().dual_bonds());
        assert!(Contour::from_dual_bonds(&d).is_err());
    }

    #[test]
    fn omega_does_not_change_contours() {
        let b = lat(3);
        for bits in 0..512u64 {
            let s = Configuration::from_bits(bits, 9);
            let a = epsilon_contours_at(&s, Sign::Plus, &b);
            let _m1 = Model::new(b.clone(), make_boundary(&BoundaryKind::Plus, &b).unwrap()).unwrap();
            let again = epsilon_contours_at(&s, Sign::Plus, &b);
            assert_eq!(a, again);
        }
    }
}
