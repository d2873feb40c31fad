//! Exact finite-volume Gibbs measures by enumeration of all `2^{l²}`
//! configurations, in the log domain.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::{Configuration, InverseTemperature, Model, Sign};
use crate::lattice::Site;

/// Largest number of sites that may be enumerated.
pub const ENUMERATION_MAX_SITES: usize = 25;
/// Boxes up to this many sites keep every log weight in memory.
pub const MATERIALIZE_MAX_SITES: usize = 20;

const CHUNK: usize = 1 << 12;

#[derive(Debug, Clone)]
pub struct GibbsTable {
    model: Model,
    beta: InverseTemperature,
    log_z: f64,
    log_weights: Option<Vec<f64>>,
}

pub fn build_gibbs(model: &Model, beta: f64) -> Result<GibbsTable> {
    GibbsTable::new(model, beta)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    // streaming: keep (max, Σ exp(v - max))
    let (m, s) = values.fold((f64::NEG_INFINITY, 0.0), |(m, s), v| {
        if v > m {
            (v, s * (m - v).exp() + 1.0)
        } else {
            (m, s + (v - m).exp())
        }
    });
    m + s.ln()
}

/// `Σ_{s < dim} term(s)` with a summation order fixed by `dim` alone, so the
/// result does not depend on the thread count.
fn ordered_sum<F: Fn(u64) -> f64 + Sync>(dim: usize, term: F) -> f64 {
    let chunks = dim.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let start = (c * CHUNK) as u64;
            let end = ((c + 1) * CHUNK).min(dim) as u64;
            (start..end).map(&term).sum()
        })
        .collect();
    partial.iter().sum()
}

impl GibbsTable {
    pub fn new(model: &Model, beta: f64) -> Result<Self> {
        let n = model.num_sites();
        if n > ENUMERATION_MAX_SITES {
            return Err(Error::SizeGuard {
                what: format!("Gibbs enumeration over {n} sites"),
                limit: ENUMERATION_MAX_SITES,
            });
        }
        let beta = InverseTemperature::new(beta)?;
        let b = beta.value();
        let dim = 1usize << n;
        let (log_z, log_weights) = if n <= MATERIALIZE_MAX_SITES {
            let lw: Vec<f64> = (0..dim as u64).into_par_iter().map(|s| -b * model.energy_of_bits(s)).collect();
            (log_sum_exp(lw.iter().copied()), Some(lw))
        } else {
            let partial: Vec<f64> = (0..dim / CHUNK)
                .into_par_iter()
                .map(|c| {
                    let start = (c * CHUNK) as u64;
                    log_sum_exp((start..start + CHUNK as u64).map(|s| -b * model.energy_of_bits(s)))
                })
                .collect();
            (log_sum_exp(partial.into_iter()), None)
        };
        Ok(GibbsTable { model: model.clone(), beta, log_z, log_weights })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn beta(&self) -> f64 {
        self.beta.value()
    }

    pub fn num_sites(&self) -> usize {
        self.model.num_sites()
    }

    pub fn dim(&self) -> usize {
        1 << self.num_sites()
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn log_weight(&self, state: u64) -> f64 {
        match &self.log_weights {
            Some(lw) => lw[state as usize],
            None => -self.beta.value() * self.model.energy_of_bits(state),
        }
    }

    pub fn log_probability(&self, state: u64) -> f64 {
        self.log_weight(state) - self.log_z
    }

    pub fn probability(&self, state: u64) -> f64 {
        self.log_probability(state).exp()
    }

    /// Every probability, in state order.
    pub fn probabilities(&self) -> Vec<f64> {
        (0..self.dim() as u64).into_par_iter().map(|s| self.probability(s)).collect()
    }

    pub fn event_probability<P>(&self, predicate: P) -> f64
    where
        P: Fn(&Configuration) -> bool + Sync,
    {
        let n = self.num_sites();
        ordered_sum(self.dim(), |s| {
            if predicate(&Configuration::from_bits(s, n)) {
                self.probability(s)
            } else {
                0.0
            }
        })
    }

    pub fn expectation<F>(&self, f: F) -> f64
    where
        F: Fn(&Configuration) -> f64 + Sync,
    {
        let n = self.num_sites();
        ordered_sum(self.dim(), |s| self.probability(s) * f(&Configuration::from_bits(s, n)))
    }

    /// `E_μ[σ_0]`, summed over pairs `(σ, −σ)` with `σ_0 = +1` so that an
    /// exactly symmetric measure yields exactly zero.
    pub fn center_magnetization(&self) -> f64 {
        let n = self.num_sites();
        let origin = self.model.lattice().index_of(Site::ORIGIN).expect("origin in box");
        let all = ((1u128 << n) - 1) as u64;
        ordered_sum(self.dim(), |s| {
            if s >> origin & 1 == 1 {
                self.probability(s) - self.probability(s ^ all)
            } else {
                0.0
            }
        })
    }

    /// `+` when `E_μ[σ_0] ≥ 0`.
    pub fn center_sign(&self) -> Sign {
        if self.center_magnetization() >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

pub fn event_probability<P>(table: &GibbsTable, predicate: P) -> f64
where
    P: Fn(&Configuration) -> bool + Sync,
{
    table.event_probability(predicate)
}

pub fn center_sign(table: &GibbsTable) -> Sign {
    table.center_sign()
}
