use serde::{Deserialize, Serialize};

use super::{epsilon_contours_at, Contour};
use crate::boundary::{reduce_delta_chain, w1_ratio, BoundaryCondition};
use crate::error::{Error, Result};
use crate::gibbs::GibbsTable;
use crate::hamiltonian::{Configuration, Sign};
use crate::lattice::LatticeBox;

/// Mixing constants closer to 1 than this are clamped when deriving a trap
/// from an arbitrary boundary, so that pure boundaries still get an event.
pub const MAX_TRAP_DELTA: f64 = 0.99;

/// The event that a boundary-touching `(ε)`-contour of length at least
/// `2δ₁l` is present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapEvent {
    pub l: usize,
    pub epsilon: Sign,
    pub delta_w2: f64,
    pub delta_1: f64,
}

impl TrapEvent {
    /// `δ₁` is the midpoint of `(δ_w2, 1)`.
    pub fn new(l: usize, epsilon: Sign, delta_w2: f64) -> Result<Self> {
        if !(delta_w2 > 0.0 && delta_w2 < 1.0) {
            return Err(Error::InvalidArgument(format!("delta_w2 = {delta_w2} outside (0, 1)")));
        }
        Ok(TrapEvent { l, epsilon, delta_w2, delta_1: (delta_w2 + 1.0) / 2.0 })
    }

    pub fn with_delta_1(l: usize, epsilon: Sign, delta_w2: f64, delta_1: f64) -> Result<Self> {
        if !(delta_w2 < delta_1 && delta_1 < 1.0) {
            return Err(Error::InvalidArgument(format!("need delta_w2 < delta_1 < 1, got {delta_w2}, {delta_1}")));
        }
        Ok(TrapEvent { l, epsilon, delta_w2, delta_1 })
    }

    /// Sign from the centre magnetisation of `table`; `δ_w2` from the
    /// reduction chain applied to the boundary's worst length-`l` window.
    pub fn from_gibbs(table: &GibbsTable) -> Result<Self> {
        TrapEvent::from_boundary(table.model().omega(), table.center_sign())
    }

    /// As [`TrapEvent::from_gibbs`] with the sign supplied by the caller,
    /// for boxes too large to enumerate.
    pub fn from_boundary(omega: &BoundaryCondition, epsilon: Sign) -> Result<Self> {
        let delta = w1_ratio(omega).min(MAX_TRAP_DELTA);
        let chain = reduce_delta_chain(delta)?;
        TrapEvent::new(omega.l(), epsilon, chain.delta_w2)
    }

    /// `2δ₁l`.
    pub fn length_threshold(&self) -> f64 {
        2.0 * self.delta_1 * self.l as f64
    }

    pub fn contains(&self, sigma: &Configuration, lattice: &LatticeBox) -> bool {
        trap_membership(sigma, self, lattice)
    }
}

/// `(σ ∈ Γ_l, C_l(σ))`.
pub fn trap_members(sigma: &Configuration, trap: &TrapEvent, lattice: &LatticeBox) -> (bool, Vec<Contour>) {
    let c: Vec<Contour> = epsilon_contours_at(sigma, trap.epsilon, lattice)
        .into_iter()
        .filter(|g| g.touches_boundary(lattice) && g.len() as f64 >= trap.length_threshold())
        .collect();
    (!c.is_empty(), c)
}

/// Membership only; skips clusters that miss the inner boundary before
/// building their contours.
pub fn trap_membership(sigma: &Configuration, trap: &TrapEvent, lattice: &LatticeBox) -> bool {
    let threshold = trap.length_threshold();
    super::clusters(sigma, trap.epsilon, lattice).into_iter().any(|c| {
        // holes never reach the inner boundary, so contact is decided by the cluster itself
        let touches = c.iter().any(|s| s.x1 == lattice.lo() || s.x1 == lattice.hi() || s.x2 == lattice.lo() || s.x2 == lattice.hi());
        touches && super::outer_contour(&c).map(|g| g.len() as f64 >= threshold).unwrap_or(false)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;

    #[test]
    fn uniform_configurations() {
        let b = LatticeBox::new(4).unwrap();
        let t = TrapEvent::with_delta_1(4, Sign::Plus, 0.8, 0.9).unwrap();
        let plus = Configuration::uniform(16, Sign::Plus);
        let (inside, c) = trap_members(&plus, &t, &b);
        assert!(inside);
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].len(), 16);
        assert!(!trap_members(&plus.global_flip(), &t, &b).0);
    }

    #[test]
    fn corner_site_is_too_short() {
        let b = LatticeBox::new(4).unwrap();
        let t = TrapEvent::with_delta_1(4, Sign::Plus, 0.8, 0.9).unwrap();
        let mut s = Configuration::uniform(16, Sign::Minus);
        s.flip_in_place(b.index_of(Site::new(b.lo(), b.lo())).unwrap());
        assert!(!trap_members(&s, &t, &b).0);
    }

    #[test]
    fn fast_membership_agrees() {
        let b = LatticeBox::new(3).unwrap();
        for eps in [Sign::Plus, Sign::Minus] {
            let t = TrapEvent::new(3, eps, 0.6).unwrap();
            for bits in 0..512u64 {
                let s = Configuration::from_bits(bits, 9);
                assert_eq!(trap_members(&s, &t, &b).0, trap_membership(&s, &t, &b));
            }
        }
    }

    #[test]
    fn rejects_bad_constants() {
        assert!(TrapEvent::with_delta_1(3, Sign::Plus, 0.9, 0.8).is_err());
        assert!(TrapEvent::new(3, Sign::Plus, 1.0).is_err());
    }
}
