//! Boundary fields on `∂_ex Λ(l)`, interval mixing checks and the chain of
//! mixing constants used to pass from windows of length exactly `l` to all
//! sufficiently long windows.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BoundaryInterval, LatticeBox, Site};

/// Slack used when comparing a window ratio against a mixing constant.
pub const WINDOW_TOL: f64 = 1e-12;

/// Values in `[-1, 1]` on the exterior boundary, stored in cycle order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    l: usize,
    values: Vec<f64>,
}

impl BoundaryCondition {
    pub fn new(lattice: &LatticeBox, values: Vec<f64>) -> Result<Self> {
        let n = lattice.exterior().len();
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "boundary needs {n} values, got {}",
                values.len()
            )));
        }
        if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!(
                "boundary value {v} at cycle position {k} is outside [-1, 1]"
            )));
        }
        Ok(BoundaryCondition { l: lattice.l(), values })
    }

    pub fn constant(lattice: &LatticeBox, v: f64) -> Result<Self> {
        Self::new(lattice, vec![v; lattice.exterior().len()])
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, cycle_index: usize) -> f64 {
        self.values[cycle_index]
    }

    pub fn at_site(&self, lattice: &LatticeBox, y: Site) -> Option<f64> {
        lattice.cycle_index_of(y).map(|k| self.values[k])
    }

    pub fn negated(&self) -> Self {
        BoundaryCondition { l: self.l, values: self.values.iter().map(|v| -v).collect() }
    }

    pub fn window_sum(&self, w: &BoundaryInterval) -> f64 {
        w.indices().map(|k| self.values[k]).sum()
    }

    /// One value per line, in cycle order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.values {
            s.push_str(&format!("{v}\n"));
        }
        s
    }

    pub fn from_text(lattice: &LatticeBox, text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: f64 = t.parse().map_err(|_| Error::Parse {
                line: i + 1,
                message: format!("not a number: {t:?}"),
            })?;
            values.push(v);
        }
        Self::new(lattice, values)
    }
}

/// Named boundary families.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryKind {
    Plus,
    Minus,
    Free,
    /// `+1` on the alternating positions of the cycle (even indices), `-1` elsewhere.
    Alternating,
    /// `+1` on a centred stretch of the right column of relative length `delta`, `0` elsewhere.
    Slab { delta: f64 },
    /// Independent `±1` values with mean `mean`.
    Iid { mean: f64, seed: u64 },
    Custom(Vec<f64>),
}

pub fn make_boundary(kind: &BoundaryKind, lattice: &LatticeBox) -> Result<BoundaryCondition> {
    let n = lattice.exterior().len();
    match kind {
        BoundaryKind::Plus => BoundaryCondition::constant(lattice, 1.0),
        BoundaryKind::Minus => BoundaryCondition::constant(lattice, -1.0),
        BoundaryKind::Free => BoundaryCondition::constant(lattice, 0.0),
        BoundaryKind::Alternating => {
            BoundaryCondition::new(lattice, (0..n).map(|k| if k % 2 == 0 { 1.0 } else { -1.0 }).collect())
        }
        BoundaryKind::Slab { delta } => {
            if !(*delta > 0.0 && *delta <= 1.0) {
                return Err(Error::InvalidArgument(format!("slab delta {delta} outside (0, 1]")));
            }
            let l = lattice.l() as f64;
            let column = lattice.l() as i32 / 2 + 1;
            let half = delta * l / 2.0;
            let values = lattice
                .exterior()
                .iter()
                .map(|y| {
                    let x2 = y.x2 as f64;
                    if y.x1 == column && -half < x2 && x2 <= half {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            BoundaryCondition::new(lattice, values)
        }
        BoundaryKind::Iid { mean, seed } => {
            if !(-1.0..=1.0).contains(mean) {
                return Err(Error::InvalidArgument(format!("iid mean {mean} outside [-1, 1]")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let p_plus = (1.0 + mean) / 2.0;
            let values = (0..n).map(|_| if rng.random::<f64>() < p_plus { 1.0 } else { -1.0 }).collect();
            BoundaryCondition::new(lattice, values)
        }
        BoundaryKind::Custom(values) => BoundaryCondition::new(lattice, values.clone()),
    }
}

/// Textual boundary descriptor as accepted on the command line and in plans:
/// `plus`, `minus`, `free`, `alternating`, `slab:<delta>`, `iid:<mean>:<seed>`,
/// `file:<path>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryDescriptor {
    Plus,
    Minus,
    Free,
    Alternating,
    Slab(f64),
    Iid(f64, u64),
    File(PathBuf),
}

impl BoundaryDescriptor {
    pub fn resolve(&self, lattice: &LatticeBox) -> Result<BoundaryCondition> {
        let kind = match self {
            BoundaryDescriptor::Plus => BoundaryKind::Plus,
            BoundaryDescriptor::Minus => BoundaryKind::Minus,
            BoundaryDescriptor::Free => BoundaryKind::Free,
            BoundaryDescriptor::Alternating => BoundaryKind::Alternating,
            BoundaryDescriptor::Slab(d) => BoundaryKind::Slab { delta: *d },
            BoundaryDescriptor::Iid(m, s) => BoundaryKind::Iid { mean: *m, seed: *s },
            BoundaryDescriptor::File(p) => {
                let text = std::fs::read_to_string(p)?;
                return BoundaryCondition::from_text(lattice, &text);
            }
        };
        make_boundary(&kind, lattice)
    }
}

impl fmt::Display for BoundaryDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryDescriptor::Plus => write!(f, "plus"),
            BoundaryDescriptor::Minus => write!(f, "minus"),
            BoundaryDescriptor::Free => write!(f, "free"),
            BoundaryDescriptor::Alternating => write!(f, "alternating"),
            BoundaryDescriptor::Slab(d) => write!(f, "slab:{d}"),
            BoundaryDescriptor::Iid(m, s) => write!(f, "iid:{m}:{s}"),
            BoundaryDescriptor::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for BoundaryDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidArgument(format!("unrecognised boundary descriptor {s:?}"));
        let num = |t: &str| t.parse::<f64>().map_err(|_| bad());
        match s {
            "plus" => return Ok(BoundaryDescriptor::Plus),
            "minus" => return Ok(BoundaryDescriptor::Minus),
            "free" => return Ok(BoundaryDescriptor::Free),
            "alternating" | "alt" => return Ok(BoundaryDescriptor::Alternating),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("slab:") {
            return Ok(BoundaryDescriptor::Slab(num(rest)?));
        }
        if let Some(rest) = s.strip_prefix("iid:") {
            let (m, seed) = rest.split_once(':').ok_or_else(bad)?;
            return Ok(BoundaryDescriptor::Iid(num(m)?, seed.parse().map_err(|_| bad())?));
        }
        if let Some(rest) = s.strip_prefix("file:") {
            return Ok(BoundaryDescriptor::File(PathBuf::from(rest)));
        }
        Err(bad())
    }
}

/// Outcome of checking `|Σ_{y∈I} ω_y| ≤ δ|I|` over a family of windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingReport {
    pub delta_requested: f64,
    pub min_interval_length: usize,
    pub worst_interval: BoundaryInterval,
    pub worst_ratio: f64,
    pub passes: bool,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("mixing constant {delta} outside (0, 1)")))
    }
}

/// Worst `|Σω|/|I|` over all cyclic windows with `min_len ≤ |I| ≤ max_len`.
pub fn worst_window(omega: &BoundaryCondition, min_len: usize, max_len: usize) -> (BoundaryInterval, f64) {
    let v = omega.values();
    let n = v.len();
    let min_len = min_len.max(1);
    let max_len = max_len.min(n);
    let mut worst = (BoundaryInterval { start: 0, len: min_len, cycle_len: n }, f64::NEG_INFINITY);
    for start in 0..n {
        let mut sum = 0.0;
        for len in 1..=max_len {
            sum += v[(start + len - 1) % n];
            if len >= min_len {
                let ratio = sum.abs() / len as f64;
                if ratio > worst.1 {
                    worst = (BoundaryInterval { start, len, cycle_len: n }, ratio);
                }
            }
        }
    }
    worst
}

/// Windows of length at least `min_len`.
pub fn validate_windows(omega: &BoundaryCondition, delta: f64, min_len: usize) -> MixingReport {
    let n = omega.values().len();
    let min_len = min_len.clamp(1, n);
    let (worst_interval, worst_ratio) = worst_window(omega, min_len, n);
    MixingReport {
        delta_requested: delta,
        min_interval_length: min_len,
        worst_interval,
        worst_ratio,
        passes: worst_ratio <= delta + WINDOW_TOL,
    }
}

/// Windows of length exactly `l`.
pub fn validate_w1(omega: &BoundaryCondition, delta: f64) -> Result<MixingReport> {
    check_delta(delta)?;
    let l = omega.l();
    let (worst_interval, worst_ratio) = worst_window(omega, l, l);
    Ok(MixingReport {
        delta_requested: delta,
        min_interval_length: l,
        worst_interval,
        worst_ratio,
        passes: worst_ratio <= delta + WINDOW_TOL,
    })
}

/// Windows of length at least `l`.
pub fn validate_w1a(omega: &BoundaryCondition, delta: f64) -> Result<MixingReport> {
    check_delta(delta)?;
    Ok(validate_windows(omega, delta, omega.l()))
}

/// Windows of length at least `delta_w2 · l`.
pub fn validate_w2(omega: &BoundaryCondition, delta_w2: f64) -> Result<MixingReport> {
    check_delta(delta_w2)?;
    let min_len = (delta_w2 * omega.l() as f64 - WINDOW_TOL).ceil().max(1.0) as usize;
    Ok(validate_windows(omega, delta_w2, min_len))
}

/// Worst ratio over windows of length exactly `l`; the smallest constant for
/// which the boundary passes [`validate_w1`].
pub fn w1_ratio(omega: &BoundaryCondition) -> f64 {
    worst_window(omega, omega.l(), omega.l()).1
}

/// Constants obtained from a length-`l` mixing constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaChain {
    pub delta: f64,
    pub delta_w1a: f64,
    /// Positive root of `t² + t = 1 + delta_w1a`.
    pub critical_root: f64,
    pub delta_w2: f64,
}

/// `δ_a + (1 + δ_a)(1 − t)/t < t < 1`.
pub fn tldel_holds(delta_w1a: f64, t: f64) -> bool {
    t < 1.0 && delta_w1a + (1.0 + delta_w1a) * (1.0 - t) / t < t
}

/// `δ ↦ ((1+δ)/2, t)` with `t` half way between the critical root and 1.
pub fn reduce_delta_chain(delta: f64) -> Result<DeltaChain> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidArgument(format!("mixing constant {delta} outside [0, 1)")));
    }
    let delta_w1a = (1.0 + delta) / 2.0;
    let critical_root = (-1.0 + (5.0 + 4.0 * delta_w1a).sqrt()) / 2.0;
    let delta_w2 = (critical_root + 1.0) / 2.0;
    debug_assert!(tldel_holds(delta_w1a, delta_w2));
    Ok(DeltaChain { delta, delta_w1a, critical_root, delta_w2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(l: i64) -> LatticeBox {
        LatticeBox::new(l).unwrap()
    }

    #[test]
    fn constant_plus_fails_w1() {
        let b = lat(4);
        let w = make_boundary(&BoundaryKind::Plus, &b).unwrap();
        let r = validate_w1(&w, 0.9).unwrap();
        assert!(!r.passes);
        assert_eq!(r.worst_ratio, 1.0);
        assert_eq!(r.worst_interval.len, 4);
    }

    #[test]
    fn alternating_passes_w1() {
        let b = lat(4);
        let w = make_boundary(&BoundaryKind::Alternating, &b).unwrap();
        let r = validate_w1(&w, 0.25).unwrap();
        assert!(r.passes);
        assert_eq!(r.worst_ratio, 0.0);
    }

    #[test]
    fn free_passes_everything() {
        for l in 1..=6 {
            let b = lat(l);
            let w = make_boundary(&BoundaryKind::Free, &b).unwrap();
            assert_eq!(validate_w1(&w, 0.01).unwrap().worst_ratio, 0.0);
            assert!(validate_w2(&w, 0.3).unwrap().passes);
        }
    }

    #[test]
    fn w2_examples() {
        let b = lat(4);
        let plus = make_boundary(&BoundaryKind::Plus, &b).unwrap();
        for d in [0.1, 0.5, 0.99] {
            assert!(!validate_w2(&plus, d).unwrap().passes);
        }
        let alt = make_boundary(&BoundaryKind::Alternating, &b).unwrap();
        let r = validate_w2(&alt, 0.5).unwrap();
        assert_eq!(r.min_interval_length, 2);
        // exhaustive oracle over windows of length 2..=16
        let v = alt.values();
        for start in 0..16 {
            for len in 2..=16 {
                let s: f64 = (0..len).map(|k| v[(start + k) % 16]).sum();
                assert!(s.abs() <= 1.0);
                assert!(s.abs() <= 0.5 * len as f64);
            }
        }
        assert!(r.passes);
    }

    #[test]
    fn rejects_bad_delta() {
        let b = lat(3);
        let w = make_boundary(&BoundaryKind::Free, &b).unwrap();
        assert!(validate_w1(&w, 0.0).is_err());
        assert!(validate_w1(&w, 1.0).is_err());
        assert!(validate_w2(&w, 1.5).is_err());
        assert!(reduce_delta_chain(1.0).is_err());
        assert!(reduce_delta_chain(-0.1).is_err());
    }

    #[test]
    fn delta_chain_examples() {
        // quadratic oracle: t² + t = 1 + δ_a
        let c = reduce_delta_chain(0.0).unwrap();
        assert_eq!(c.delta_w1a, 0.5);
        assert!((c.critical_root - (-1.0 + 7f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((c.critical_root - 0.8229).abs() < 1e-4);
        assert!((c.delta_w2 - 0.9115).abs() < 1e-4);
        let c = reduce_delta_chain(0.5).unwrap();
        assert_eq!(c.delta_w1a, 0.75);
        assert!((c.critical_root - (-1.0 + 8f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((c.critical_root - 0.9142).abs() < 1e-4);
        assert!((c.delta_w2 - 0.9571).abs() < 1e-4);
        for k in 0..100 {
            let d = k as f64 / 100.0;
            let c = reduce_delta_chain(d).unwrap();
            assert!(tldel_holds(c.delta_w1a, c.delta_w2), "delta {d}");
            assert!(!tldel_holds(c.delta_w1a, c.critical_root - 1e-9));
        }
    }

    #[test]
    fn slab_full_right_column() {
        let b = lat(4);
        let w = make_boundary(&BoundaryKind::Slab { delta: 1.0 }, &b).unwrap();
        let plus: Vec<Site> =
            b.exterior().iter().zip(w.values()).filter(|(_, &v)| v == 1.0).map(|(s, _)| *s).collect();
        assert_eq!(plus.len(), 4);
        assert!(plus.iter().all(|s| s.x1 == 3));
        assert!(w.values().iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(make_boundary(&BoundaryKind::Slab { delta: 0.0 }, &b).is_err());
        assert!(make_boundary(&BoundaryKind::Slab { delta: 1.2 }, &b).is_err());
    }

    #[test]
    fn slab_half() {
        let b = lat(4);
        let w = make_boundary(&BoundaryKind::Slab { delta: 0.5 }, &b).unwrap();
        let plus: Vec<Site> =
            b.exterior().iter().zip(w.values()).filter(|(_, &v)| v == 1.0).map(|(s, _)| *s).collect();
        assert_eq!(plus, vec![Site::new(3, 0), Site::new(3, 1)]);
    }

    #[test]
    fn iid_is_deterministic() {
        let b = lat(5);
        let k = BoundaryKind::Iid { mean: 0.0, seed: 42 };
        let a = make_boundary(&k, &b).unwrap();
        let c = make_boundary(&k, &b).unwrap();
        assert_eq!(a, c);
        assert!(a.values().iter().all(|&v| v == 1.0 || v == -1.0));
        let other = make_boundary(&BoundaryKind::Iid { mean: 0.0, seed: 43 }, &b).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn custom_rejects_out_of_range() {
        let b = lat(1);
        assert!(make_boundary(&BoundaryKind::Custom(vec![0.0, 0.5, 1.5, 0.0]), &b).is_err());
        assert!(make_boundary(&BoundaryKind::Custom(vec![0.0, 0.5]), &b).is_err());
        assert!(make_boundary(&BoundaryKind::Custom(vec![0.0, 0.5, -1.0, 1.0]), &b).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let b = lat(3);
        let w = make_boundary(&BoundaryKind::Iid { mean: 0.2, seed: 7 }, &b).unwrap();
        assert_eq!(BoundaryCondition::from_text(&b, &w.to_text()).unwrap(), w);
        assert!(BoundaryCondition::from_text(&b, "0\nx\n").is_err());
    }

    #[test]
    fn descriptors_parse_and_print() {
        for s in ["plus", "minus", "free", "alternating", "slab:0.25", "iid:0.5:9", "file:/tmp/w.txt"] {
            let d: BoundaryDescriptor = s.parse().unwrap();
            assert_eq!(d.to_string(), s);
        }
        assert!("slab".parse::<BoundaryDescriptor>().is_err());
        assert!("iid:0.1".parse::<BoundaryDescriptor>().is_err());
        assert!("banana".parse::<BoundaryDescriptor>().is_err());
    }

    #[test]
    fn file_descriptor_reads_values() {
        let b = lat(1);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("w.txt");
        std::fs::write(&p, "1\n-1\n0.5\n0\n").unwrap();
        let w = BoundaryDescriptor::File(p).resolve(&b).unwrap();
        assert_eq!(w.values(), &[1.0, -1.0, 0.5, 0.0]);
    }
}
