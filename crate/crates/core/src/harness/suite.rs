//! Randomised checks of the contour energy identity and inequalities on
//! configurations with random dyadic boundary fields, so every energy is
//! exact in floating point.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryCondition;
use crate::contour::{
    check_lemma31, check_lemma32, deco0_identity, epsilon_contours_at, is_crossing, Contour, Crossing,
    Lemma31Case, Lemma32Part, LemmaReport,
};
use crate::error::{Error, Result};
use crate::hamiltonian::{Configuration, Model, Sign};
use crate::lattice::{LatticeBox, Site};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteOptions {
    pub l_values: Vec<usize>,
    /// Instances wanted for each check.
    pub samples: usize,
    pub seed: u64,
    /// Random configurations drawn per wanted instance before giving up.
    pub attempts_per_sample: usize,
}

impl Default for LemmaSuiteOptions {
    fn default() -> Self {
        LemmaSuiteOptions { l_values: vec![2, 3, 4, 5, 6], samples: 1000, seed: 1, attempts_per_sample: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaTally {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    /// Smallest `lhs − rhs` seen over all inequalities of the check.
    pub worst_margin: f64,
    pub first_violation: Option<String>,
}

impl LemmaTally {
    fn new(name: &str) -> Self {
        LemmaTally {
            name: name.to_string(),
            instances: 0,
            violations: 0,
            worst_margin: f64::INFINITY,
            first_violation: None,
        }
    }

    fn record(&mut self, margin: f64, ok: bool, describe: impl FnOnce() -> String) {
        self.instances += 1;
        self.worst_margin = self.worst_margin.min(margin);
        if !ok {
            self.violations += 1;
            if self.first_violation.is_none() {
                self.first_violation = Some(describe());
            }
        }
    }

    fn record_report(&mut self, report: &LemmaReport, describe: impl FnOnce() -> String) {
        let margin = report.checks.iter().map(|c| c.lhs - c.rhs).fold(f64::INFINITY, f64::min);
        self.record(margin, report.passes(), describe);
    }

    pub fn full(&self, wanted: usize) -> bool {
        self.instances >= wanted
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub options: LemmaSuiteOptions,
    pub attempts: usize,
    /// Energy identity for single contours (exact equality).
    pub identity: LemmaTally,
    /// Non-crossing contour inequalities.
    pub noncrossing: LemmaTally,
    /// Contours meeting exactly one side.
    pub one_side: LemmaTally,
    /// Short contours around the origin.
    pub short_central: LemmaTally,
}

impl LemmaSuiteReport {
    pub fn tallies(&self) -> [&LemmaTally; 4] {
        [&self.identity, &self.noncrossing, &self.one_side, &self.short_central]
    }

    /// Every check reached its quota with no violation.
    pub fn passes(&self) -> bool {
        self.tallies().iter().all(|t| t.violations == 0 && t.full(self.options.samples))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

/// Uniform on `{−1, −7/8, …, 1}`, or a pure `±1` field with probability 1/4.
fn random_boundary(lattice: &LatticeBox, rng: &mut ChaCha8Rng) -> Result<BoundaryCondition> {
    let n = lattice.exterior().len();
    let values = if rng.random_bool(0.25) {
        let v = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        vec![v; n]
    } else {
        (0..n).map(|_| rng.random_range(-8i32..=8) as f64 / 8.0).collect()
    };
    BoundaryCondition::new(lattice, values)
}

fn random_configuration(n: usize, rng: &mut ChaCha8Rng) -> Configuration {
    let p = rng.random_range(0.15..0.85);
    let spins: Vec<Sign> = (0..n).map(|_| if rng.random_bool(p) { Sign::Plus } else { Sign::Minus }).collect();
    Configuration::from_spins(&spins)
}

fn describe(l: usize, sigma: &Configuration, omega: &BoundaryCondition, gamma: &Contour) -> String {
    format!("l={l} sigma={sigma:?} omega={:?} contour={}", omega.values(), gamma.to_text().replace('\n', " | "))
}

pub fn verify_lemmas(opts: &LemmaSuiteOptions) -> Result<LemmaSuiteReport> {
    if opts.l_values.is_empty() || opts.l_values.iter().any(|&l| l == 0 || l > 16) {
        return Err(Error::InvalidArgument("box sides must lie in 1..=16".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut identity = LemmaTally::new("energy identity");
    let mut noncrossing = LemmaTally::new("non-crossing energy bounds");
    let mut one_side = LemmaTally::new("one-side energy bound");
    let mut short_central = LemmaTally::new("short central contour bound");
    let wanted = opts.samples;
    let max_attempts = wanted.max(1) * opts.attempts_per_sample.max(1);
    let mut attempts = 0;
    let done = |t: &[&LemmaTally; 4]| t.iter().all(|t| t.full(wanted));
    while attempts < max_attempts && !done(&[&identity, &noncrossing, &one_side, &short_central]) {
        attempts += 1;
        let l = *opts.l_values.choose(&mut rng).expect("nonempty");
        let lattice = LatticeBox::new(l as i64)?;
        let omega = random_boundary(&lattice, &mut rng)?;
        let model = Model::new(lattice.clone(), omega.clone())?;
        let sigma = random_configuration(lattice.num_sites(), &mut rng);
        let eps = if rng.random_bool(0.5) { Sign::Plus } else { Sign::Minus };
        let contours = epsilon_contours_at(&sigma, eps, &lattice);
        if contours.is_empty() {
            continue;
        }

        if !identity.full(wanted) {
            let g = contours.choose(&mut rng).expect("nonempty");
            let (lhs, rhs) = deco0_identity(g, &sigma, &model)?;
            identity.record(-(lhs - rhs).abs(), lhs == rhs, || describe(l, &sigma, &omega, g));
        }
        if !noncrossing.full(wanted) {
            let pool: Vec<&Contour> =
                contours.iter().filter(|g| is_crossing(g, &lattice) == Crossing::None).collect();
            if let Some(g) = pool.choose(&mut rng) {
                let rep = check_lemma31(Lemma31Case::A, std::slice::from_ref(*g), &sigma, &model)?;
                noncrossing.record_report(&rep, || describe(l, &sigma, &omega, g));
            }
        }
        if !one_side.full(wanted) {
            let pool: Vec<&Contour> = contours.iter().filter(|g| g.sides_touched(&lattice).len() == 1).collect();
            if let Some(g) = pool.choose(&mut rng) {
                let rep = check_lemma32(Lemma32Part::A, g, &sigma, &model)?;
                one_side.record_report(&rep, || describe(l, &sigma, &omega, g));
            }
        }
        if !short_central.full(wanted) {
            let g = contours.iter().find(|g| g.encloses(Site::ORIGIN) && g.len() < 2 * l);
            if let Some(g) = g {
                let rep = check_lemma32(Lemma32Part::B, g, &sigma, &model)?;
                short_central.record_report(&rep, || describe(l, &sigma, &omega, g));
            }
        }
    }
    Ok(LemmaSuiteReport { options: opts.clone(), attempts, identity, noncrossing, one_side, short_central })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_is_clean_and_reproducible() {
        let opts = LemmaSuiteOptions { samples: 60, seed: 3, ..Default::default() };
        let a = verify_lemmas(&opts).unwrap();
        assert!(a.passes(), "{}", a.to_json());
        assert_eq!(a, verify_lemmas(&opts).unwrap());
        assert_eq!(a.identity.worst_margin, 0.0);
    }

    #[test]
    fn quotas_can_fall_short() {
        // a 2x2 box has no contour around the origin shorter than 4
        let opts = LemmaSuiteOptions { l_values: vec![2], samples: 5, seed: 1, attempts_per_sample: 4 };
        let r = verify_lemmas(&opts).unwrap();
        assert_eq!(r.short_central.instances, 0);
        assert!(!r.passes());
    }
}
