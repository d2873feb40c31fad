//! Numerical checkers for the contour energy estimates. Each checker
//! verifies its hypotheses first (failures are reported as
//! [`Error::Hypothesis`]) and then evaluates both sides of every inequality.

use serde::{Deserialize, Serialize};

use super::{decompose_noncrossing, delta_h, epsilon_contours_at, is_crossing, Contour, Crossing};
use crate::boundary::validate_w2;
use crate::error::{Error, Result};
use crate::hamiltonian::{Configuration, Model, Sign};
use crate::lattice::{BoundaryInterval, Side, Site};

/// Slack for sums of boundary values that are not exactly representable.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    /// `lhs ≥ rhs`.
    fn at_least(name: &str, lhs: f64, rhs: f64) -> Self {
        InequalityCheck { name: name.to_string(), lhs, rhs, holds: lhs >= rhs - CHECK_TOL }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub checks: Vec<InequalityCheck>,
}

impl LemmaReport {
    pub fn passes(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Lemma31Case {
    /// Single non-crossing contour.
    A,
    /// Several contours with `½Δ ≥ c₁l − c₂` assumed.
    B { c1: f64, c2: f64 },
    /// Non-crossing contours whose intervals fit inside `interval`.
    C { interval: BoundaryInterval, c: f64, delta_w2: f64, delta_1: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Lemma32Part {
    /// Contour meeting exactly one side.
    A,
    /// Contour around the origin shorter than `2l`.
    B,
}

fn hypothesis(msg: impl Into<String>) -> Error {
    Error::Hypothesis(msg.into())
}

fn sign_of(gamma: &Contour) -> Result<Sign> {
    gamma.sign().ok_or_else(|| hypothesis("contour carries no sign"))
}

/// Checks that every contour is an `(ε)`-contour at `σ` for one common `ε`
/// and that no contour is repeated.
fn common_sign(gammas: &[Contour], sigma: &Configuration, model: &Model) -> Result<Sign> {
    let first = gammas.first().ok_or_else(|| hypothesis("no contours given"))?;
    let eps = sign_of(first)?;
    let present = epsilon_contours_at(sigma, eps, model.lattice());
    for (k, g) in gammas.iter().enumerate() {
        if sign_of(g)? != eps {
            return Err(hypothesis("contours carry different signs"));
        }
        if !present.iter().any(|p| p.bonds() == g.bonds()) {
            return Err(hypothesis(format!("contour {k} is not an ({eps})-contour of the configuration")));
        }
        if gammas[..k].iter().any(|h| h.bonds() == g.bonds()) {
            return Err(hypothesis(format!("contour {k} is repeated")));
        }
    }
    Ok(eps)
}

fn boundary_sum(model: &Model, indices: impl Iterator<Item = usize>) -> f64 {
    indices.map(|k| model.omega().value(k)).sum()
}

/// Both sides of `½Δ_γH = |γ \ ∂Q(Λ(l))| − ε Σ_{V_ex(γ)} ω`.
pub fn deco0_identity(gamma: &Contour, sigma: &Configuration, model: &Model) -> Result<(f64, f64)> {
    let eps = common_sign(std::slice::from_ref(gamma), sigma, model)?;
    let lattice = model.lattice();
    let lhs = delta_h(std::slice::from_ref(gamma), sigma, model)? / 2.0;
    let rhs = gamma.interior_count(lattice) as f64
        - eps.value() * boundary_sum(model, gamma.boundary_indices(lattice).into_iter());
    Ok((lhs, rhs))
}

pub fn check_lemma31(
    case: Lemma31Case,
    gammas: &[Contour],
    sigma: &Configuration,
    model: &Model,
) -> Result<LemmaReport> {
    let lattice = model.lattice();
    let l = lattice.l() as f64;
    let eps = common_sign(gammas, sigma, model)?;
    let half_delta = delta_h(gammas, sigma, model)? / 2.0;
    let total_len: usize = gammas.iter().map(Contour::len).sum();
    let mut checks = Vec::new();
    match case {
        Lemma31Case::A => {
            if gammas.len() != 1 {
                return Err(hypothesis("case A takes one contour"));
            }
            let g = &gammas[0];
            if is_crossing(g, lattice) != Crossing::None {
                return Err(hypothesis("contour is crossing"));
            }
            let d = decompose_noncrossing(g, lattice)?;
            let len = g.len() as f64;
            let rem = d.remainder_count(g, lattice) as f64;
            let vex = boundary_sum(model, g.boundary_indices(lattice).into_iter());
            let on_interval = d.interval.map_or(0.0, |i| boundary_sum(model, i.indices()));
            let underline = d.underline_gamma.len() as f64 - eps.value() * on_interval;
            checks.push(InequalityCheck::at_least(
                "interior length",
                g.interior_count(lattice) as f64,
                len / 2.0 + rem / 2.0,
            ));
            checks.push(InequalityCheck::at_least(
                "energy vs length",
                half_delta,
                len / 2.0 + rem / 2.0 - eps.value() * vex,
            ));
            checks.push(InequalityCheck::at_least("energy vs separating arc", half_delta, underline));
            checks.push(InequalityCheck::at_least("separating arc nonnegative", underline, 0.0));
        }
        Lemma31Case::B { c1, c2 } => {
            if c1 < 0.0 || c2 < 0.0 {
                return Err(hypothesis("constants must be nonnegative"));
            }
            if half_delta < c1 * l - c2 - CHECK_TOL {
                return Err(hypothesis(format!("energy {half_delta} below c1 l - c2 = {}", c1 * l - c2)));
            }
            checks.push(InequalityCheck::at_least(
                "energy vs total length",
                half_delta,
                c1 / (c1 + 8.0) * total_len as f64 - c2,
            ));
        }
        Lemma31Case::C { interval, c, delta_w2, delta_1 } => {
            if !(delta_w2 < delta_1 && delta_1 < 1.0) || c < 0.0 {
                return Err(hypothesis("need delta_w2 < delta_1 < 1 and c >= 0"));
            }
            if interval.cycle_len != 4 * lattice.l() {
                return Err(hypothesis("interval belongs to another box"));
            }
            if !validate_w2(model.omega(), delta_w2)?.passes {
                return Err(hypothesis(format!("boundary violates the mixing condition at {delta_w2}")));
            }
            let mut underline_total = 0usize;
            for g in gammas {
                if is_crossing(g, lattice) != Crossing::None {
                    return Err(hypothesis("contour is crossing"));
                }
                let d = decompose_noncrossing(g, lattice)?;
                if let Some(i) = d.interval {
                    if !i.indices().all(|k| interval.contains(k)) {
                        return Err(hypothesis("contour interval is not inside the given interval"));
                    }
                }
                underline_total += d.underline_gamma.len();
            }
            let len = interval.len as f64;
            if len < delta_w2 * l - CHECK_TOL || len > underline_total as f64 + c + CHECK_TOL {
                return Err(hypothesis(format!(
                    "interval length {len} outside [{}, {}]",
                    delta_w2 * l,
                    underline_total as f64 + c
                )));
            }
            let c1 = ((1.0 - delta_1) * delta_w2).min((delta_1 - delta_w2) * delta_w2);
            let eps_nc = c1 / (c1 + 8.0);
            checks.push(InequalityCheck::at_least(
                "energy vs max(l, total length)",
                half_delta,
                eps_nc * l.max(total_len as f64) - c,
            ));
        }
    }
    Ok(LemmaReport { lemma: format!("{case:?}"), checks })
}

pub fn check_lemma32(part: Lemma32Part, gamma: &Contour, sigma: &Configuration, model: &Model) -> Result<LemmaReport> {
    let lattice = model.lattice();
    common_sign(std::slice::from_ref(gamma), sigma, model)?;
    let delta = delta_h(std::slice::from_ref(gamma), sigma, model)?;
    let mut checks = Vec::new();
    match part {
        Lemma32Part::A => {
            let sides = gamma.sides_touched(lattice);
            if sides.len() != 1 {
                return Err(hypothesis(format!("contour meets {} sides", sides.len())));
            }
            let side = *sides.iter().next().expect("one side");
            let (name, count) = match side {
                Side::Right | Side::Left => ("energy vs horizontal bonds", gamma.horizontal_count()),
                Side::Top | Side::Bottom => ("energy vs vertical bonds", gamma.vertical_count()),
            };
            checks.push(InequalityCheck::at_least(name, delta, count as f64));
        }
        Lemma32Part::B => {
            if !gamma.encloses(Site::ORIGIN) {
                return Err(hypothesis("contour does not enclose the origin"));
            }
            if gamma.len() >= 2 * lattice.l() {
                return Err(hypothesis("contour is not shorter than 2l"));
            }
            checks.push(InequalityCheck::at_least("energy vs length/9", delta, 2.0 * gamma.len() as f64 / 9.0));
        }
    }
    Ok(LemmaReport { lemma: format!("{part:?}"), checks })
}
