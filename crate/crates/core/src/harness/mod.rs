//! Sweeps over experiment plans: exact gaps with their lower and upper
//! bounds on small boxes, simulated relaxation times on larger ones, and
//! flat CSV / JSON output.

mod plan;
mod suite;
mod transition;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryDescriptor;
use crate::contour::{trap_membership, TrapEvent};
use crate::error::{Error, Result};
use crate::gibbs::{GibbsTable, ENUMERATION_MAX_SITES};
use crate::hamiltonian::{Configuration, Model, RateFamily, RateKind, Sign};
use crate::lattice::{LatticeBox, Site};
use crate::simulate::{estimate_relaxation, simulate_replica, Observable};
use crate::spectral::{exact_gap, indicator_upper_bound, schonmann_lower_bound, GeneratorOperator};

pub use plan::{ExperimentPlan, GridPoint, MethodPolicy, ObservableKind, DEFAULT_EXACT_MAX_SITES};
pub use suite::{verify_lemmas, LemmaSuiteOptions, LemmaSuiteReport, LemmaTally};
pub use transition::{log_gap_slope, transition_study, TransitionPoint, TransitionReport, TransitionRow};

/// Version of the record columns, written into every CSV and JSON output.
pub const RECORD_SCHEMA: &str = "ising-gap-records/1";

/// Slack allowed in the bound comparisons, relative to the gap.
const SANDWICH_RTOL: f64 = 1e-9;

/// One grid point's outcome. Fields that do not apply are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub l: usize,
    pub beta: f64,
    pub boundary: String,
    pub rates: String,
    pub seed: u64,
    pub method: Option<String>,
    /// The exact gap, or `1/tau` for simulated points.
    pub gap: Option<f64>,
    pub residual: Option<f64>,
    pub tau_stderr: Option<f64>,
    pub schonmann_lower: Option<f64>,
    pub indicator_upper: Option<f64>,
    pub mu_trap: Option<f64>,
    pub epsilon: Option<Sign>,
    pub wall_time_s: Option<f64>,
    pub error: Option<String>,
}

impl Record {
    fn blank(p: &GridPoint, seed: u64) -> Self {
        Record {
            l: p.l,
            beta: p.beta,
            boundary: p.boundary.to_string(),
            rates: p.rates.to_string(),
            seed,
            method: None,
            gap: None,
            residual: None,
            tau_stderr: None,
            schonmann_lower: None,
            indicator_upper: None,
            mu_trap: None,
            epsilon: None,
            wall_time_s: None,
            error: None,
        }
    }

    /// `schonmann ≤ gap ≤ indicator`, when all three are present.
    pub fn sandwich(&self) -> Option<bool> {
        let (lo, g, hi) = (self.schonmann_lower?, self.gap?, self.indicator_upper?);
        let slack = SANDWICH_RTOL * g.abs();
        Some(lo <= g + slack && g <= hi + slack)
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub schema: String,
    pub records: Vec<Record>,
}

const COLUMNS: [&str; 16] = [
    "l",
    "beta",
    "boundary",
    "rates",
    "seed",
    "method",
    "gap",
    "residual",
    "tau_stderr",
    "schonmann_lower",
    "indicator_upper",
    "mu_trap",
    "epsilon",
    "sandwich",
    "wall_time_s",
    "error",
];

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl ResultTable {
    pub fn new(records: Vec<Record>) -> Self {
        ResultTable { schema: RECORD_SCHEMA.to_string(), records }
    }

    pub fn has_failures(&self) -> bool {
        self.records.iter().any(Record::failed)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# schema: {}", self.schema)?;
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(COLUMNS).map_err(io)?;
        for r in &self.records {
            w.write_record([
                r.l.to_string(),
                r.beta.to_string(),
                r.boundary.clone(),
                r.rates.clone(),
                r.seed.to_string(),
                opt(&r.method),
                opt(&r.gap),
                opt(&r.residual),
                opt(&r.tau_stderr),
                opt(&r.schonmann_lower),
                opt(&r.indicator_upper),
                opt(&r.mu_trap),
                opt(&r.epsilon),
                opt(&r.sandwich()),
                opt(&r.wall_time_s),
                opt(&r.error),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 output")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data")
    }
}

fn exact_point(p: &GridPoint, record: &mut Record) -> Result<()> {
    let lattice = LatticeBox::new(p.l as i64)?;
    let omega = p.boundary.resolve(&lattice)?;
    let model = Model::new(lattice, omega)?;
    let rates = RateFamily::new(p.rates, p.beta)?;
    record.schonmann_lower = Some(schonmann_lower_bound(p.l, p.beta, rates.bounds().0));
    let gen = GeneratorOperator::new(&model, rates)?;
    let res = exact_gap(&gen)?;
    record.method = Some(res.method.to_string());
    record.gap = Some(res.gap);
    record.residual = Some(res.residual);

    let trap = TrapEvent::from_gibbs(gen.gibbs())?;
    record.epsilon = Some(trap.epsilon);
    let n = gen.num_sites();
    let lattice = model.lattice();
    let members: Vec<bool> = (0..gen.dim() as u64)
        .into_par_iter()
        .map(|s| trap_membership(&Configuration::from_bits(s, n), &trap, lattice))
        .collect();
    let mu: f64 = (0..gen.dim()).filter(|&s| members[s]).map(|s| gen.mu(s)).sum();
    record.mu_trap = Some(mu);
    record.indicator_upper = match indicator_upper_bound(&gen, &members) {
        Ok(v) => Some(v),
        // Γ_l or its complement carries no mass
        Err(Error::InvalidArgument(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(())
}

fn simulation_point(p: &GridPoint, plan: &ExperimentPlan, record: &mut Record) -> Result<()> {
    let lattice = LatticeBox::new(p.l as i64)?;
    let omega = p.boundary.resolve(&lattice)?;
    let model = Model::new(lattice, omega)?;
    let rates = RateFamily::new(p.rates, p.beta)?;
    record.method = Some("simulation".into());
    record.schonmann_lower = Some(schonmann_lower_bound(p.l, p.beta, rates.bounds().0));
    let n = model.num_sites();
    // half the replicas start from each pure phase
    let starts: Vec<Configuration> = (0..plan.replicas)
        .map(|k| Configuration::uniform(n, if k % 2 == 0 { Sign::Plus } else { Sign::Minus }))
        .collect();
    let trajs = starts
        .par_iter()
        .enumerate()
        .map(|(k, s0)| simulate_replica(&model, rates, *s0, plan.t_max, plan.seed, k as u64))
        .collect::<Result<Vec<_>>>()?;
    let epsilon = if n <= ENUMERATION_MAX_SITES {
        GibbsTable::new(&model, p.beta)?.center_sign()
    } else {
        // sign of the time-averaged centre spin
        let c = model.lattice().index_of(Site::ORIGIN).expect("origin in box");
        let mut acc = 0.0;
        for t in &trajs {
            t.for_each_segment(plan.burn_in, |a, b, s| acc += (b - a) * s.spin(c));
        }
        if acc >= 0.0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    };
    record.epsilon = Some(epsilon);
    let observable = match plan.observable {
        ObservableKind::Trap => Observable::TrapIndicator(TrapEvent::from_boundary(model.omega(), epsilon)?),
        ObservableKind::Magnetization => Observable::Magnetization,
        ObservableKind::CenterSpin => Observable::CenterSpin,
    };
    let est = estimate_relaxation(&trajs, &model, &observable, plan.burn_in)?;
    record.gap = Some(1.0 / est.tau);
    record.tau_stderr = Some(est.stderr);
    Ok(())
}

pub fn run_point(p: &GridPoint, plan: &ExperimentPlan) -> Record {
    let start = Instant::now();
    let mut record = Record::blank(p, plan.seed);
    let exact = match plan.method {
        MethodPolicy::Exact => true,
        MethodPolicy::Simulation => false,
        MethodPolicy::Auto => p.l * p.l <= plan.exact_max_sites,
    };
    let outcome = if exact { exact_point(p, &mut record) } else { simulation_point(p, plan, &mut record) };
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    if plan.timing {
        record.wall_time_s = Some(start.elapsed().as_secs_f64());
    }
    record
}

/// One record per grid point, in grid order. Points run on up to
/// `plan.workers` threads; a failing point is recorded and the rest continue.
pub fn run_plan(plan: &ExperimentPlan) -> Result<ResultTable> {
    plan.validate()?;
    let grid = plan.grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let records = pool.install(|| grid.par_iter().map(|p| run_point(p, plan)).collect());
    Ok(ResultTable::new(records))
}

/// Shorthand for a single exact point.
pub fn exact_record(l: usize, beta: f64, boundary: BoundaryDescriptor, rates: RateKind) -> Record {
    let plan = ExperimentPlan { method: MethodPolicy::Exact, ..ExperimentPlan::default() };
    run_point(&GridPoint { l, beta, boundary, rates }, &plan)
}
