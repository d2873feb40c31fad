//! Experiment plans and their line-oriented `key = value` text form.
//!
//! Grid keys (`l`, `beta`, `boundary`, `rates`) may repeat and may hold
//! comma-separated lists; every other key appears at most once. Blank lines
//! and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryDescriptor;
use crate::error::{Error, Result};
use crate::hamiltonian::RateKind;

/// Exact diagonalisation is used up to this many sites under [`MethodPolicy::Auto`].
pub const DEFAULT_EXACT_MAX_SITES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodPolicy {
    /// Exact below the site threshold, simulation above.
    Auto,
    Exact,
    Simulation,
}

impl FromStr for MethodPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(MethodPolicy::Auto),
            "exact" => Ok(MethodPolicy::Exact),
            "simulation" | "simulate" => Ok(MethodPolicy::Simulation),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

impl std::fmt::Display for MethodPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MethodPolicy::Auto => "auto",
            MethodPolicy::Exact => "exact",
            MethodPolicy::Simulation => "simulation",
        })
    }
}

/// Observable whose autocorrelation gives the simulated relaxation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservableKind {
    Trap,
    Magnetization,
    CenterSpin,
}

impl FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trap" | "trap_indicator" => Ok(ObservableKind::Trap),
            "magnetization" => Ok(ObservableKind::Magnetization),
            "center_spin" | "center" => Ok(ObservableKind::CenterSpin),
            _ => Err(Error::InvalidArgument(format!("unknown observable {s:?}"))),
        }
    }
}

impl std::fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObservableKind::Trap => "trap",
            ObservableKind::Magnetization => "magnetization",
            ObservableKind::CenterSpin => "center_spin",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub l_values: Vec<usize>,
    pub betas: Vec<f64>,
    pub boundaries: Vec<BoundaryDescriptor>,
    pub rates: Vec<RateKind>,
    pub method: MethodPolicy,
    pub exact_max_sites: usize,
    pub seed: u64,
    pub replicas: usize,
    pub t_max: f64,
    pub burn_in: f64,
    pub observable: ObservableKind,
    pub workers: usize,
    /// Record wall-clock time per point; off by default so that output is
    /// byte-for-byte reproducible.
    pub timing: bool,
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            l_values: Vec::new(),
            betas: Vec::new(),
            boundaries: Vec::new(),
            rates: Vec::new(),
            method: MethodPolicy::Auto,
            exact_max_sites: DEFAULT_EXACT_MAX_SITES,
            seed: 1,
            replicas: 4,
            t_max: 1e5,
            burn_in: 1e3,
            observable: ObservableKind::Trap,
            workers: 1,
            timing: false,
            csv: None,
            json: None,
        }
    }
}

/// One point of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub l: usize,
    pub beta: f64,
    pub boundary: BoundaryDescriptor,
    pub rates: RateKind,
}

impl ExperimentPlan {
    /// Rate families default to exponential when the plan names none.
    pub fn rate_kinds(&self) -> Vec<RateKind> {
        if self.rates.is_empty() {
            vec![RateKind::Exponential]
        } else {
            self.rates.clone()
        }
    }

    /// Grid in plan order: `l` outermost, then `beta`, `boundary`, `rates`.
    pub fn grid(&self) -> Vec<GridPoint> {
        let mut out = Vec::new();
        for &l in &self.l_values {
            for &beta in &self.betas {
                for b in &self.boundaries {
                    for r in self.rate_kinds() {
                        out.push(GridPoint { l, beta, boundary: b.clone(), rates: r });
                    }
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if let Some(l) = self.l_values.iter().find(|&&l| l == 0 || l > 16) {
            return bad(format!("box side {l} outside 1..=16"));
        }
        if let Some(b) = self.betas.iter().find(|b| !(b.is_finite() && **b >= 0.0)) {
            return bad(format!("inverse temperature {b} must be finite and nonnegative"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad(format!("t_max {} must be positive", self.t_max));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.t_max) {
            return bad(format!("burn_in {} must lie in [0, t_max)", self.burn_in));
        }
        if self.replicas == 0 || self.workers == 0 {
            return bad("replicas and workers must be positive".into());
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut plan = ExperimentPlan::default();
        let mut seen: Vec<&str> = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| Error::Parse { line: k + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let items = || value.split(',').map(str::trim).filter(|s| !s.is_empty());
            let grid_key = matches!(key, "l" | "beta" | "boundary" | "rates");
            if !grid_key {
                if seen.contains(&key) {
                    return Err(err(format!("key {key:?} given twice")));
                }
                seen.push(key);
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number {s:?}")));
            let int = |s: &str| s.parse::<u64>().map_err(|_| err(format!("bad integer {s:?}")));
            match key {
                "l" => {
                    for s in items() {
                        plan.l_values.push(int(s)? as usize);
                    }
                }
                "beta" => {
                    for s in items() {
                        plan.betas.push(num(s)?);
                    }
                }
                "boundary" => {
                    for s in items() {
                        plan.boundaries.push(s.parse().map_err(|e: Error| err(e.to_string()))?);
                    }
                }
                "rates" => {
                    for s in items() {
                        plan.rates.push(s.parse().map_err(|e: Error| err(e.to_string()))?);
                    }
                }
                "method" => plan.method = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "exact_max_sites" => plan.exact_max_sites = int(value)? as usize,
                "seed" => plan.seed = int(value)?,
                "replicas" => plan.replicas = int(value)? as usize,
                "t_max" => plan.t_max = num(value)?,
                "burn_in" => plan.burn_in = num(value)?,
                "observable" => plan.observable = value.parse().map_err(|e: Error| err(e.to_string()))?,
                "workers" => plan.workers = int(value)? as usize,
                "timing" => {
                    plan.timing = value.parse().map_err(|_| err(format!("expected true or false, got {value:?}")))?
                }
                "csv" => plan.csv = Some(PathBuf::from(value)),
                "json" => plan.json = Some(PathBuf::from(value)),
                _ => return Err(err(format!("unknown key {key:?}"))),
            }
        }
        plan.validate()?;
        Ok(plan)
    }

    /// Text form; [`ExperimentPlan::parse`] inverts it exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for l in &self.l_values {
            writeln!(s, "l = {l}").unwrap();
        }
        for b in &self.betas {
            writeln!(s, "beta = {b}").unwrap();
        }
        for b in &self.boundaries {
            writeln!(s, "boundary = {b}").unwrap();
        }
        for r in &self.rates {
            writeln!(s, "rates = {r}").unwrap();
        }
        writeln!(s, "method = {}", self.method).unwrap();
        writeln!(s, "exact_max_sites = {}", self.exact_max_sites).unwrap();
        writeln!(s, "seed = {}", self.seed).unwrap();
        writeln!(s, "replicas = {}", self.replicas).unwrap();
        writeln!(s, "t_max = {}", self.t_max).unwrap();
        writeln!(s, "burn_in = {}", self.burn_in).unwrap();
        writeln!(s, "observable = {}", self.observable).unwrap();
        writeln!(s, "workers = {}", self.workers).unwrap();
        writeln!(s, "timing = {}", self.timing).unwrap();
        if let Some(p) = &self.csv {
            writeln!(s, "csv = {}", p.display()).unwrap();
        }
        if let Some(p) = &self.json {
            writeln!(s, "json = {}", p.display()).unwrap();
        }
        s
    }
}
