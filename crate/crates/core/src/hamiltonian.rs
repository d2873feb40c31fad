//! Spin configurations, the boundary Hamiltonian and single-spin flip rates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::lattice::{LatticeBox, Site};

/// Largest box a [`Configuration`] can hold (`16 × 16`).
pub const MAX_SITES: usize = 256;

/// A spin value, also used as the sign `ε` of clusters and contours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// `±1` spins on the sites of a box, one bit per site in canonical order
/// (bit set means `+1`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Configuration {
    words: [u64; MAX_SITES / 64],
    n: u16,
}

impl Configuration {
    pub fn uniform(n: usize, sign: Sign) -> Self {
        assert!(n <= MAX_SITES, "configuration of {n} sites exceeds {MAX_SITES}");
        let mut c = Configuration { words: [0; MAX_SITES / 64], n: n as u16 };
        if sign == Sign::Plus {
            for i in 0..n {
                c.words[i / 64] |= 1 << (i % 64);
            }
        }
        c
    }

    /// State index `bits` of an enumeration over `2^n` configurations.
    pub fn from_bits(bits: u64, n: usize) -> Self {
        assert!(n <= 64);
        let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut words = [0; MAX_SITES / 64];
        words[0] = bits & mask;
        Configuration { words, n: n as u16 }
    }

    pub fn bits(&self) -> u64 {
        debug_assert!(self.n <= 64);
        self.words[0]
    }

    pub fn from_spins(spins: &[Sign]) -> Self {
        let mut c = Self::uniform(spins.len(), Sign::Minus);
        for (i, s) in spins.iter().enumerate() {
            if *s == Sign::Plus {
                c.words[i / 64] |= 1 << (i % 64);
            }
        }
        c
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_plus(&self, i: usize) -> bool {
        debug_assert!(i < self.len());
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn sign(&self, i: usize) -> Sign {
        if self.is_plus(i) {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn spin(&self, i: usize) -> f64 {
        self.sign(i).value()
    }

    pub fn flip_in_place(&mut self, i: usize) {
        debug_assert!(i < self.len());
        self.words[i / 64] ^= 1 << (i % 64);
    }

    /// `σ^x`.
    pub fn flipped(&self, i: usize) -> Self {
        let mut c = *self;
        c.flip_in_place(i);
        c
    }

    pub fn global_flip(&self) -> Self {
        let mut c = *self;
        for i in 0..self.len() {
            c.flip_in_place(i);
        }
        c
    }

    pub fn magnetization(&self) -> f64 {
        let plus: u32 = self.words.iter().map(|w| w.count_ones()).sum();
        2.0 * plus as f64 - self.len() as f64
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = (0..self.len()).map(|i| if self.is_plus(i) { '+' } else { '-' }).collect();
        write!(f, "Configuration({s})")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct InverseTemperature(f64);

impl InverseTemperature {
    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_finite() && beta >= 0.0 {
            Ok(InverseTemperature(beta))
        } else {
            Err(Error::InvalidArgument(format!("inverse temperature {beta} must be finite and >= 0")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `H(σ) = −Σ_{interior bonds} σ_x σ_y − Σ_{boundary bonds} σ_x ω_y`, each
/// unordered bond counted once.
pub fn energy(sigma: &Configuration, omega: &BoundaryCondition, lattice: &LatticeBox) -> f64 {
    let spin = |s: Site| sigma.spin(lattice.index_of(s).expect("bond endpoint in box"));
    let mut h = 0.0;
    for b in lattice.interior_bonds() {
        let (p, q) = b.endpoints();
        h -= spin(p) * spin(q);
    }
    for (k, b) in lattice.boundary_bonds().iter().enumerate() {
        let (p, q) = b.endpoints();
        let inner = if lattice.contains(p) { p } else { q };
        h -= spin(inner) * omega.value(k);
    }
    h
}

/// `H(σ^x) − H(σ)` from the four neighbours of `x`.
pub fn energy_delta_flip(
    sigma: &Configuration,
    x: Site,
    omega: &BoundaryCondition,
    lattice: &LatticeBox,
) -> Result<f64> {
    let i = lattice.index_of(x).ok_or(Error::SiteOutside((x.x1, x.x2)))?;
    Ok(local_delta(sigma, i, omega, lattice))
}

fn local_delta(sigma: &Configuration, i: usize, omega: &BoundaryCondition, lattice: &LatticeBox) -> f64 {
    let inside: f64 = lattice.box_neighbors(i).iter().map(|&j| sigma.spin(j)).sum();
    let outside: f64 = lattice.exterior_neighbors(i).iter().map(|&k| omega.value(k)).sum();
    2.0 * sigma.spin(i) * (inside + outside)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RateKind {
    Exponential,
    Metropolis,
    HeatBath,
}

impl RateKind {
    pub const ALL: [RateKind; 3] = [RateKind::Exponential, RateKind::Metropolis, RateKind::HeatBath];
}

impl fmt::Display for RateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateKind::Exponential => "exponential",
            RateKind::Metropolis => "metropolis",
            RateKind::HeatBath => "heat-bath",
        })
    }
}

impl FromStr for RateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exponential" | "exp" => Ok(RateKind::Exponential),
            "metropolis" => Ok(RateKind::Metropolis),
            "heat-bath" | "heat_bath" | "heatbath" => Ok(RateKind::HeatBath),
            other => Err(Error::InvalidArgument(format!("unknown rate family {other:?}"))),
        }
    }
}

/// A flip-rate family at a fixed inverse temperature. Every family is a
/// function of `ΔH = H(σ^x) − H(σ)` alone and satisfies
/// `q(ΔH) = q(−ΔH) e^{−βΔH}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFamily {
    pub kind: RateKind,
    pub beta: InverseTemperature,
}

/// `|ΔH| ≤ 2 · 4` since each site has four neighbours with values in `[-1, 1]`.
pub const MAX_ABS_DELTA: f64 = 8.0;

impl RateFamily {
    pub fn new(kind: RateKind, beta: f64) -> Result<Self> {
        Ok(RateFamily { kind, beta: InverseTemperature::new(beta)? })
    }

    pub fn rate_for_delta(&self, dh: f64) -> f64 {
        let b = self.beta.value();
        match self.kind {
            RateKind::Exponential => (-0.5 * b * dh).exp(),
            RateKind::Metropolis => (-b * dh).exp().min(1.0),
            RateKind::HeatBath => 1.0 / (1.0 + (b * dh).exp()),
        }
    }

    /// `sqrt(q(ΔH) q(−ΔH))`, the off-diagonal entry of the symmetrised generator.
    pub fn symmetric_rate(&self, dh: f64) -> f64 {
        let b = self.beta.value();
        match self.kind {
            RateKind::Exponential => 1.0,
            RateKind::Metropolis => (-0.5 * b * dh.abs()).exp(),
            RateKind::HeatBath => 0.5 / (0.5 * b * dh).cosh(),
        }
    }

    /// Certified `(q̲(β), q̄(β))` over `|ΔH| ≤ 8`.
    pub fn bounds(&self) -> (f64, f64) {
        let b = self.beta.value();
        let m = MAX_ABS_DELTA;
        match self.kind {
            RateKind::Exponential => ((-0.5 * b * m).exp(), (0.5 * b * m).exp()),
            RateKind::Metropolis => ((-b * m).exp(), 1.0),
            RateKind::HeatBath => (1.0 / (1.0 + (b * m).exp()), 1.0 / (1.0 + (-b * m).exp())),
        }
    }

    pub fn flip_rate(
        &self,
        sigma: &Configuration,
        x: Site,
        omega: &BoundaryCondition,
        lattice: &LatticeBox,
    ) -> Result<f64> {
        Ok(self.rate_for_delta(energy_delta_flip(sigma, x, omega, lattice)?))
    }
}

/// A box together with a boundary condition, with the per-site boundary
/// field `h_x = Σ_{y ∉ Λ, |x−y|=1} ω_y` cached.
#[derive(Debug, Clone)]
pub struct Model {
    lattice: LatticeBox,
    omega: BoundaryCondition,
    field: Vec<f64>,
    // bit masks for state indices of boxes with at most 64 sites
    right_mask: u64,
    up_mask: u64,
    interior_bonds: f64,
}

impl Model {
    pub fn new(lattice: LatticeBox, omega: BoundaryCondition) -> Result<Self> {
        if omega.l() != lattice.l() {
            return Err(Error::InvalidArgument(format!(
                "boundary for l={} used with box l={}",
                omega.l(),
                lattice.l()
            )));
        }
        let field = (0..lattice.num_sites())
            .map(|i| lattice.exterior_neighbors(i).iter().map(|&k| omega.value(k)).sum())
            .collect();
        let l = lattice.l();
        let (mut right_mask, mut up_mask) = (0u64, 0u64);
        if lattice.num_sites() <= 64 {
            for i in 0..lattice.num_sites() {
                if i % l + 1 < l {
                    right_mask |= 1 << i;
                }
                if i + l < lattice.num_sites() {
                    up_mask |= 1 << i;
                }
            }
        }
        let interior_bonds = lattice.interior_bonds().len() as f64;
        Ok(Model { lattice, omega, field, right_mask, up_mask, interior_bonds })
    }

    /// Energy of the configuration with state index `bits` (boxes of at most 64 sites).
    pub fn energy_of_bits(&self, bits: u64) -> f64 {
        let l = self.lattice.l();
        debug_assert!(self.num_sites() <= 64);
        let disagree = ((bits ^ (bits >> 1)) & self.right_mask).count_ones()
            + ((bits ^ (bits >> l)) & self.up_mask).count_ones();
        let mut h = -(self.interior_bonds - 2.0 * disagree as f64);
        for (i, f) in self.field.iter().enumerate() {
            if *f != 0.0 {
                h -= if bits >> i & 1 == 1 { *f } else { -*f };
            }
        }
        h
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn omega(&self) -> &BoundaryCondition {
        &self.omega
    }

    pub fn num_sites(&self) -> usize {
        self.lattice.num_sites()
    }

    pub fn boundary_field(&self, i: usize) -> f64 {
        self.field[i]
    }

    /// Local field `Σ σ_y + h_x` at site index `i`.
    pub fn local_field(&self, sigma: &Configuration, i: usize) -> f64 {
        let inside: f64 = self.lattice.box_neighbors(i).iter().map(|&j| sigma.spin(j)).sum();
        inside + self.field[i]
    }

    pub fn delta_flip(&self, sigma: &Configuration, i: usize) -> f64 {
        2.0 * sigma.spin(i) * self.local_field(sigma, i)
    }

    pub fn energy(&self, sigma: &Configuration) -> f64 {
        energy(sigma, &self.omega, &self.lattice)
    }

    /// Same model under `ω ↦ −ω`.
    pub fn negated(&self) -> Model {
        Model::new(self.lattice.clone(), self.omega.negated()).expect("same box")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{make_boundary, BoundaryKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(l: i64, kind: BoundaryKind) -> (LatticeBox, BoundaryCondition) {
        let b = LatticeBox::new(l).unwrap();
        let w = make_boundary(&kind, &b).unwrap();
        (b, w)
    }

    #[test]
    fn energy_examples() {
        for (kind, expect) in [(BoundaryKind::Plus, -12.0), (BoundaryKind::Free, -4.0), (BoundaryKind::Minus, 4.0)] {
            let (b, w) = setup(2, kind);
            let s = Configuration::uniform(4, Sign::Plus);
            assert_eq!(energy(&s, &w, &b), expect);
        }
    }

    #[test]
    fn delta_examples() {
        let (b, w) = setup(2, BoundaryKind::Plus);
        let s = Configuration::uniform(4, Sign::Plus);
        assert_eq!(energy_delta_flip(&s, Site::new(0, 0), &w, &b).unwrap(), 8.0);
        let (b, w) = setup(2, BoundaryKind::Free);
        assert_eq!(energy_delta_flip(&s, Site::new(0, 0), &w, &b).unwrap(), 4.0);
        assert!(energy_delta_flip(&s, Site::new(5, 0), &w, &b).is_err());
    }

    #[test]
    fn delta_matches_full_energy_exhaustively_on_two_box() {
        for kind in [BoundaryKind::Plus, BoundaryKind::Free, BoundaryKind::Alternating, BoundaryKind::Slab { delta: 0.5 }] {
            let (b, w) = setup(2, kind);
            for bits in 0..16 {
                let s = Configuration::from_bits(bits, 4);
                for (i, &x) in b.sites().iter().enumerate() {
                    let oracle = energy(&s.flipped(i), &w, &b) - energy(&s, &w, &b);
                    assert_eq!(energy_delta_flip(&s, x, &w, &b).unwrap(), oracle);
                }
            }
        }
    }

    #[test]
    fn delta_matches_full_energy_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let l = rng.random_range(1..=6);
            let b = LatticeBox::new(l).unwrap();
            let vals = (0..4 * l).map(|_| rng.random_range(-4..=4) as f64 / 4.0).collect();
            let w = BoundaryCondition::new(&b, vals).unwrap();
            let n = b.num_sites();
            let spins: Vec<Sign> = (0..n).map(|_| if rng.random() { Sign::Plus } else { Sign::Minus }).collect();
            let s = Configuration::from_spins(&spins);
            let i = rng.random_range(0..n);
            let oracle = energy(&s.flipped(i), &w, &b) - energy(&s, &w, &b);
            assert_eq!(energy_delta_flip(&s, b.site(i), &w, &b).unwrap(), oracle);
        }
    }

    #[test]
    fn rates_at_infinite_temperature() {
        for (kind, expect) in [(RateKind::Exponential, 1.0), (RateKind::Metropolis, 1.0), (RateKind::HeatBath, 0.5)] {
            let f = RateFamily::new(kind, 0.0).unwrap();
            for dh in [-8.0, -2.0, 0.0, 3.5, 8.0] {
                assert_eq!(f.rate_for_delta(dh), expect);
            }
        }
    }

    #[test]
    fn exponential_example_and_bounds() {
        let f = RateFamily::new(RateKind::Exponential, 1.0).unwrap();
        assert!((f.rate_for_delta(8.0) - 0.018316).abs() < 1e-6);
        let (lo, hi) = f.bounds();
        assert_eq!(lo, (-4.0f64).exp());
        assert_eq!(hi, 4.0f64.exp());
    }

    #[test]
    fn symmetric_rate_matches_definition() {
        for kind in RateKind::ALL {
            let f = RateFamily::new(kind, 1.3).unwrap();
            for k in -16..=16 {
                let dh = k as f64 / 2.0;
                let direct = (f.rate_for_delta(dh) * f.rate_for_delta(-dh)).sqrt();
                assert!((f.symmetric_rate(dh) - direct).abs() <= 1e-14 * direct.max(1.0));
            }
        }
    }

    #[test]
    fn rejects_negative_beta() {
        assert!(InverseTemperature::new(-1.0).is_err());
        assert!(InverseTemperature::new(f64::NAN).is_err());
    }

    #[test]
    fn configuration_basics() {
        let c = Configuration::uniform(100, Sign::Plus);
        assert_eq!(c.magnetization(), 100.0);
        let d = c.flipped(77);
        assert!(!d.is_plus(77));
        assert_eq!(d.flipped(77), c);
        assert_eq!(c.global_flip(), Configuration::uniform(100, Sign::Minus));
        assert_eq!("heat-bath".parse::<RateKind>().unwrap(), RateKind::HeatBath);
        assert!("glauber".parse::<RateKind>().is_err());
    }
}
