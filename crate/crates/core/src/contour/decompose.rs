use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{is_crossing, Contour, Crossing};
use crate::error::{Error, Result};
use crate::lattice::{Bond, BoundaryInterval, DualSite, LatticeBox, Side, Site};

/// The split of a non-crossing contour into its separating interior arc
/// `underline γ`, the covered boundary bonds `γ̄` and the interval `I(γ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonCrossingDecomposition {
    pub underline_gamma: Vec<Bond>,
    pub overline_gamma: Vec<Bond>,
    /// `None` for contours that avoid the boundary.
    pub interval: Option<BoundaryInterval>,
    /// `Θ̃`, the side of `underline γ` containing `Θ(γ)`.
    pub theta_tilde: Vec<Site>,
}

impl NonCrossingDecomposition {
    pub fn interval_len(&self) -> usize {
        self.interval.map_or(0, |i| i.len)
    }

    /// `|γ \ (∂Q(Λ(l)) ∪ underline γ)|`.
    pub fn remainder_count(&self, gamma: &Contour, lattice: &LatticeBox) -> usize {
        gamma.interior_count(lattice) - self.underline_gamma.len()
    }

    /// `|γ̄ \ γ|`.
    pub fn overline_excess(&self, gamma: &Contour) -> usize {
        self.overline_gamma.iter().filter(|b| !gamma.contains_bond(b)).count()
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra] = rb;
        }
    }
}

/// Connected components of a set of dual bonds (sharing a dual endpoint).
fn dual_components(bonds: &[Bond]) -> Vec<Vec<Bond>> {
    let mut uf = UnionFind((0..bonds.len()).collect());
    let mut owner: HashMap<DualSite, usize> = HashMap::new();
    for (k, b) in bonds.iter().enumerate() {
        let (p, q) = b.dual().endpoints();
        for v in [p, q] {
            match owner.get(&v) {
                Some(&o) => uf.union(o, k),
                None => {
                    owner.insert(v, k);
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<Bond>> = HashMap::new();
    for (k, b) in bonds.iter().enumerate() {
        let r = uf.find(k);
        groups.entry(r).or_default().push(*b);
    }
    let mut out: Vec<Vec<Bond>> = groups.into_values().collect();
    for g in &mut out {
        g.sort();
    }
    out.sort();
    out
}

fn side_sites(lattice: &LatticeBox, side: Side) -> Vec<usize> {
    (0..lattice.num_sites())
        .filter(|&i| {
            let s = lattice.site(i);
            match side {
                Side::Right => s.x1 == lattice.hi(),
                Side::Left => s.x1 == lattice.lo(),
                Side::Top => s.x2 == lattice.hi(),
                Side::Bottom => s.x2 == lattice.lo(),
            }
        })
        .collect()
}

/// Box sites reachable from `theta` without crossing any bond in `cut`.
fn flood_avoiding(lattice: &LatticeBox, theta: &[Site], cut: &[Bond]) -> Vec<bool> {
    let n = lattice.num_sites();
    let mut inside = vec![false; n];
    let mut stack: Vec<usize> = theta.iter().filter_map(|&s| lattice.index_of(s)).collect();
    for &i in &stack {
        inside[i] = true;
    }
    while let Some(i) = stack.pop() {
        let si = lattice.site(i);
        for &j in lattice.box_neighbors(i) {
            if inside[j] {
                continue;
            }
            let b = Bond::new_unchecked(si, lattice.site(j));
            if cut.binary_search(&b).is_ok() {
                continue;
            }
            inside[j] = true;
            stack.push(j);
        }
    }
    inside
}

fn complement_connected(lattice: &LatticeBox, inside: &[bool]) -> bool {
    let rest: Vec<Site> = (0..inside.len()).filter(|&i| !inside[i]).map(|i| lattice.site(i)).collect();
    !rest.is_empty() && crate::lattice::is_l1_connected(&rest)
}

pub fn decompose_noncrossing(gamma: &Contour, lattice: &LatticeBox) -> Result<NonCrossingDecomposition> {
    if !gamma.is_in_box(lattice) {
        return Err(Error::InvalidArgument("contour leaves the box".into()));
    }
    if is_crossing(gamma, lattice) != Crossing::None {
        return Err(Error::InvalidArgument("contour is crossing".into()));
    }
    let interior: Vec<Bond> =
        gamma.bonds().iter().copied().filter(|b| lattice.boundary_bond_index(b).is_none()).collect();
    if !gamma.touches_boundary(lattice) {
        return Ok(NonCrossingDecomposition {
            underline_gamma: interior,
            overline_gamma: Vec::new(),
            interval: None,
            theta_tilde: gamma.theta().to_vec(),
        });
    }
    let sides = gamma.sides_touched(lattice);
    let i = [Side::Right, Side::Left].into_iter().find(|s| !sides.contains(s)).expect("non-crossing");
    let j = [Side::Top, Side::Bottom].into_iter().find(|s| !sides.contains(s)).expect("non-crossing");
    let mut required = side_sites(lattice, i);
    required.extend(side_sites(lattice, j));

    let mut found = Vec::new();
    for lambda in dual_components(&interior) {
        let inside = flood_avoiding(lattice, gamma.theta(), &lambda);
        if required.iter().any(|&k| inside[k]) || !complement_connected(lattice, &inside) {
            continue;
        }
        found.push((lambda, inside));
    }
    if found.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected one separating component, found {}",
            found.len()
        )));
    }
    let (underline_gamma, inside) = found.pop().expect("one candidate");
    let mut overline_gamma = Vec::new();
    let mut indices = Vec::new();
    for (k, b) in lattice.boundary_bonds().iter().enumerate() {
        let (p, q) = b.endpoints();
        let x = if lattice.contains(p) { p } else { q };
        if inside[lattice.index_of(x).expect("inner endpoint")] {
            overline_gamma.push(*b);
            indices.push(k);
        }
    }
    overline_gamma.sort();
    let interval = BoundaryInterval::from_indices(&indices, 4 * lattice.l());
    if interval.is_none() {
        return Err(Error::InvalidArgument("covered boundary is not an interval".into()));
    }
    let theta_tilde = (0..inside.len()).filter(|&k| inside[k]).map(|k| lattice.site(k)).collect();
    Ok(NonCrossingDecomposition { underline_gamma, overline_gamma, interval, theta_tilde })
}

#[cfg(test)]
mod tests {
    use super::super::{epsilon_contours_at, outer_contour};
    use super::*;
    use crate::hamiltonian::{Configuration, Sign};

    #[test]
    fn corner_square() {
        let b = LatticeBox::new(3).unwrap();
        let g = outer_contour(&[Site::new(-1, -1)]).unwrap();
        let d = decompose_noncrossing(&g, &b).unwrap();
        assert_eq!(d.underline_gamma.len(), 2);
        assert_eq!(d.overline_gamma.len(), 2);
        assert_eq!(d.interval_len(), 2);
        assert!(d.overline_gamma.iter().all(|x| g.contains_bond(x)));
    }

    #[test]
    fn interior_is_degenerate() {
        let b = LatticeBox::new(3).unwrap();
        let g = outer_contour(&[Site::ORIGIN]).unwrap();
        let d = decompose_noncrossing(&g, &b).unwrap();
        assert_eq!(d.underline_gamma.len(), 4);
        assert!(d.overline_gamma.is_empty());
        assert!(d.interval.is_none());
    }

    #[test]
    fn crossing_rejected() {
        let b = LatticeBox::new(3).unwrap();
        let g = outer_contour(b.sites()).unwrap();
        assert!(decompose_noncrossing(&g, &b).is_err());
    }

    #[test]
    fn left_half_column() {
        let b = LatticeBox::new(4).unwrap();
        let col: Vec<Site> = b.sites().iter().copied().filter(|s| s.x1 == b.lo() && s.x2 <= 0).collect();
        let g = outer_contour(&col).unwrap();
        let d = decompose_noncrossing(&g, &b).unwrap();
        assert_eq!(d.interval_len(), d.overline_gamma.len());
        assert!(d.overline_gamma.len() <= d.underline_gamma.len());
    }

    #[test]
    fn pocket_outside_theta_is_covered() {
        // a U-shape on the right side whose mouth is closed by the boundary
        let b = LatticeBox::new(5).unwrap();
        let shape = [Site::new(1, -1), Site::new(2, -1), Site::new(1, 0), Site::new(1, 1), Site::new(2, 1)];
        let g = outer_contour(&shape).unwrap();
        let d = decompose_noncrossing(&g, &b).unwrap();
        // the pocket (2, 0) is in Θ̃ and its boundary bond is in γ̄ but not γ
        assert!(d.theta_tilde.contains(&Site::new(2, 0)));
        assert_eq!(d.overline_gamma.len(), 3);
        assert_eq!(d.overline_excess(&g), 1);
        assert!(d.overline_excess(&g) <= d.remainder_count(&g, &b));
    }

    #[test]
    fn geometric_inequalities_exhaustive_l3() {
        let b = LatticeBox::new(3).unwrap();
        for bits in 0..512u64 {
            let s = Configuration::from_bits(bits, 9);
            for eps in [Sign::Plus, Sign::Minus] {
                for g in epsilon_contours_at(&s, eps, &b) {
                    if is_crossing(&g, &b) != Crossing::None {
                        continue;
                    }
                    let d = decompose_noncrossing(&g, &b).unwrap();
                    assert_eq!(d.interval_len(), d.overline_gamma.len());
                    assert!(d.overline_gamma.len() <= d.underline_gamma.len());
                    assert!(d.overline_excess(&g) <= d.remainder_count(&g, &b));
                    let on_box: Vec<Bond> =
                        g.bonds().iter().copied().filter(|x| b.boundary_bond_index(x).is_some()).collect();
                    assert!(on_box.iter().all(|x| d.overline_gamma.contains(x)));
                }
            }
        }
    }
}
