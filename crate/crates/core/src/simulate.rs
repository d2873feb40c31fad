//! Event-driven continuous-time Glauber simulation and autocorrelation
//! estimates of the relaxation time.
//!
//! Each site carries an exponential clock with its current flip rate; the
//! next event is drawn from the race over all clocks and only the flipped
//! site and its neighbours are re-rated afterwards.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::contour::{trap_membership, TrapEvent};
use crate::error::{Error, Result};
use crate::gibbs::MATERIALIZE_MAX_SITES;
use crate::hamiltonian::{Configuration, Model, RateFamily};
use crate::lattice::Site;

/// Trajectories longer than this are refused rather than exhausting memory.
pub const MAX_EVENTS: usize = 50_000_000;

// the running total rate is re-summed this often to stop rounding drift
const RESUM_EVERY: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlipEvent {
    pub time: f64,
    pub site: u32,
}

/// A simulated path on `[0, t_max]`: the starting configuration and every
/// flip, in strictly increasing time order.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub events: Vec<FlipEvent>,
    pub t_max: f64,
    pub seed: u64,
    pub replica: u64,
}

/// Generator for replica `replica` under `seed`. Every replica owns a
/// separate ChaCha stream, so results do not depend on scheduling.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

pub fn simulate(model: &Model, rates: RateFamily, sigma0: Configuration, t_max: f64, seed: u64) -> Result<Trajectory> {
    simulate_replica(model, rates, sigma0, t_max, seed, 0)
}

pub fn simulate_replica(
    model: &Model,
    rates: RateFamily,
    sigma0: Configuration,
    t_max: f64,
    seed: u64,
    replica: u64,
) -> Result<Trajectory> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_max = {t_max} must be positive and finite")));
    }
    let n = model.num_sites();
    if sigma0.len() != n {
        return Err(Error::InvalidArgument(format!("configuration has {} sites, box has {n}", sigma0.len())));
    }
    let lattice = model.lattice();
    let mut rng = replica_rng(seed, replica);
    let mut sigma = sigma0;
    let mut rate: Vec<f64> = (0..n).map(|i| rates.rate_for_delta(model.delta_flip(&sigma, i))).collect();
    let mut total: f64 = rate.iter().sum();
    let mut events = Vec::new();
    let mut t = 0.0;
    loop {
        // Exp(total) waiting time; 1 - u lies in (0, 1]
        let u: f64 = rng.random();
        t += -(1.0 - u).ln() / total;
        if t > t_max {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut site = n - 1;
        for (i, r) in rate.iter().enumerate() {
            if target < *r {
                site = i;
                break;
            }
            target -= r;
        }
        sigma.flip_in_place(site);
        if events.len() == MAX_EVENTS {
            return Err(Error::SizeGuard { what: "events in one trajectory".into(), limit: MAX_EVENTS });
        }
        events.push(FlipEvent { time: t, site: site as u32 });
        for &j in std::iter::once(&site).chain(lattice.box_neighbors(site)) {
            let r = rates.rate_for_delta(model.delta_flip(&sigma, j));
            total += r - rate[j];
            rate[j] = r;
        }
        if events.len() % RESUM_EVERY == 0 {
            total = rate.iter().sum();
        }
    }
    Ok(Trajectory { initial: sigma0, events, t_max, seed, replica })
}

/// Replicas `0..replicas`, run in parallel.
pub fn simulate_replicas(
    model: &Model,
    rates: RateFamily,
    sigma0: Configuration,
    t_max: f64,
    seed: u64,
    replicas: usize,
) -> Result<Vec<Trajectory>> {
    (0..replicas as u64)
        .into_par_iter()
        .map(|r| simulate_replica(model, rates, sigma0, t_max, seed, r))
        .collect()
}

impl Trajectory {
    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    /// `σ(t)`, replaying the log from the start.
    pub fn state_at(&self, t: f64) -> Configuration {
        let mut s = self.initial;
        for e in self.events.iter().take_while(|e| e.time <= t) {
            s.flip_in_place(e.site as usize);
        }
        s
    }

    pub fn final_state(&self) -> Configuration {
        self.state_at(self.t_max)
    }

    /// Number of flips of every site.
    pub fn flip_counts(&self) -> Vec<u64> {
        let mut c = vec![0; self.initial.len()];
        for e in &self.events {
            c[e.site as usize] += 1;
        }
        c
    }

    /// Calls `f(t0, t1, σ)` for each maximal interval on which the
    /// configuration is constant, clipped to `[from, t_max]`.
    pub fn for_each_segment<F: FnMut(f64, f64, &Configuration)>(&self, from: f64, mut f: F) {
        let mut s = self.initial;
        let mut t = 0.0_f64;
        for e in &self.events {
            if e.time > from {
                f(t.max(from), e.time, &s);
            }
            s.flip_in_place(e.site as usize);
            t = e.time;
        }
        if self.t_max > from {
            f(t.max(from), self.t_max, &s);
        }
    }

    /// Fraction of time after `burn_in` spent in each state (boxes of at most
    /// 20 sites).
    pub fn occupation(&self, burn_in: f64) -> Result<Vec<f64>> {
        let n = self.initial.len();
        if n > MATERIALIZE_MAX_SITES {
            return Err(Error::SizeGuard { what: "occupation table over sites".into(), limit: MATERIALIZE_MAX_SITES });
        }
        if !(burn_in < self.t_max) {
            return Err(Error::InsufficientData(format!("burn-in {burn_in} leaves nothing of t_max {}", self.t_max)));
        }
        let mut occ = vec![0.0; 1 << n];
        self.for_each_segment(burn_in, |a, b, s| occ[s.bits() as usize] += b - a);
        let span = self.t_max - burn_in.max(0.0);
        occ.iter_mut().for_each(|x| *x /= span);
        Ok(occ)
    }

    /// Observable values on the grid `burn_in, burn_in + dt, …` up to `t_max`.
    pub fn sample(&self, model: &Model, observable: &Observable, burn_in: f64, dt: f64) -> Vec<f64> {
        let mut out = Vec::new();
        let mut s = self.initial;
        let mut next = 0;
        let start = burn_in.max(0.0);
        let mut k = 0usize;
        loop {
            let t = start + k as f64 * dt;
            if t > self.t_max {
                break;
            }
            while next < self.events.len() && self.events[next].time <= t {
                s.flip_in_place(self.events[next].site as usize);
                next += 1;
            }
            out.push(observable.evaluate(model, &s));
            k += 1;
        }
        out
    }
}

/// Thinned samples of several observables for every trajectory, as CSV with
/// `replica` and `time` columns.
pub fn write_samples_csv<W: Write>(
    trajectories: &[Trajectory],
    model: &Model,
    observables: &[Observable],
    burn_in: f64,
    dt: f64,
    mut out: W,
) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("sample spacing {dt} must be positive")));
    }
    write!(out, "replica,time")?;
    for o in observables {
        write!(out, ",{o}")?;
    }
    writeln!(out)?;
    for t in trajectories {
        let cols: Vec<Vec<f64>> = observables.iter().map(|o| t.sample(model, o, burn_in, dt)).collect();
        let rows = cols.first().map_or(0, |c| c.len());
        for k in 0..rows {
            write!(out, "{},{}", t.replica, burn_in.max(0.0) + k as f64 * dt)?;
            for c in &cols {
                write!(out, ",{}", c[k])?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Functions of the configuration whose autocorrelation is tracked.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    CenterSpin,
    Spin(usize),
    Magnetization,
    TrapIndicator(TrapEvent),
}

impl Observable {
    pub fn evaluate(&self, model: &Model, sigma: &Configuration) -> f64 {
        match self {
            Observable::CenterSpin => {
                let i = model.lattice().index_of(Site::ORIGIN).expect("origin is in every box");
                sigma.spin(i)
            }
            Observable::Spin(i) => sigma.spin(*i),
            Observable::Magnetization => sigma.magnetization(),
            Observable::TrapIndicator(trap) => {
                if trap_membership(sigma, trap, model.lattice()) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::CenterSpin => write!(f, "center_spin"),
            Observable::Spin(i) => write!(f, "spin_{i}"),
            Observable::Magnetization => write!(f, "magnetization"),
            Observable::TrapIndicator(_) => write!(f, "trap_indicator"),
        }
    }
}

/// Knobs of [`estimate_relaxation_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxationOptions {
    /// Sample spacing; `None` puts about `target_samples` points on each trajectory.
    pub dt: Option<f64>,
    pub target_samples: usize,
    /// The fit uses the lags from the first one with correlation at most
    /// `window_high` up to the last one before it falls under `window_low`.
    pub window_high: f64,
    pub window_low: f64,
    pub min_r_squared: f64,
    /// Post-burn-in time, summed over trajectories, required per unit of `tau`.
    pub min_span_in_tau: f64,
    pub bootstrap: usize,
    pub bootstrap_seed: u64,
}

impl Default for RelaxationOptions {
    fn default() -> Self {
        RelaxationOptions {
            dt: None,
            target_samples: 20_000,
            window_high: 0.8,
            window_low: 0.05,
            min_r_squared: 0.9,
            min_span_in_tau: 50.0,
            bootstrap: 200,
            bootstrap_seed: 0xb007,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationEstimate {
    pub tau: f64,
    pub stderr: f64,
    pub observable: String,
    pub r_squared: f64,
    /// Lag window actually fitted, in time units.
    pub fit_window: (f64, f64),
    pub dt: f64,
    pub samples: usize,
}

pub fn estimate_relaxation(
    trajectories: &[Trajectory],
    model: &Model,
    observable: &Observable,
    burn_in: f64,
) -> Result<RelaxationEstimate> {
    estimate_relaxation_with(trajectories, model, observable, burn_in, &RelaxationOptions::default())
}

/// Raw lagged sums of one series, enough to rebuild its contribution to the
/// pooled autocorrelation for any pooled mean.
struct Series {
    len: usize,
    prefix: Vec<f64>,
    lagged: Vec<f64>,
}

impl Series {
    fn new(x: &[f64], max_lag: usize) -> Self {
        let mut prefix = Vec::with_capacity(x.len() + 1);
        prefix.push(0.0);
        for v in x {
            prefix.push(prefix.last().unwrap() + v);
        }
        let lagged = (0..=max_lag.min(x.len().saturating_sub(1)))
            .map(|k| x[..x.len() - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum())
            .collect();
        Series { len: x.len(), prefix, lagged }
    }

    fn sum(&self) -> f64 {
        self.prefix[self.len]
    }

    /// `(Σ (x_i − m)(x_{i+k} − m), number of pairs)`.
    fn centred(&self, k: usize, m: f64) -> (f64, usize) {
        if k >= self.lagged.len() {
            return (0.0, 0);
        }
        let pairs = self.len - k;
        let head = self.prefix[pairs];
        let tail = self.prefix[self.len] - self.prefix[k];
        (self.lagged[k] - m * (head + tail) + pairs as f64 * m * m, pairs)
    }
}

/// Normalised autocorrelation of the pooled series at lags `0..=max_lag`.
fn autocorrelation(series: &[&Series], max_lag: usize) -> Option<Vec<f64>> {
    let count: usize = series.iter().map(|s| s.len).sum();
    if count == 0 {
        return None;
    }
    let m = series.iter().map(|s| s.sum()).sum::<f64>() / count as f64;
    let mut c = Vec::with_capacity(max_lag + 1);
    for k in 0..=max_lag {
        let (num, pairs) = series.iter().fold((0.0, 0), |(a, p), s| {
            let (x, q) = s.centred(k, m);
            (a + x, p + q)
        });
        if pairs == 0 {
            break;
        }
        c.push(num / pairs as f64);
    }
    let var = c[0];
    if !(var > 1e-14) {
        return None;
    }
    Some(c.iter().map(|x| x / var).collect())
}

/// Twice the first lag at which the pooled autocorrelation drops under
/// `low`, scanning lag by lag so that slowly sampled series stay cheap.
fn lag_budget(xs: &[Vec<f64>], low: f64) -> usize {
    let count: usize = xs.iter().map(|x| x.len()).sum();
    let m = xs.iter().flatten().sum::<f64>() / count as f64;
    let var = xs.iter().flatten().map(|v| (v - m).powi(2)).sum::<f64>() / count as f64;
    let longest = xs.iter().map(|x| x.len()).max().unwrap_or(0);
    if !(var > 1e-14) {
        return longest;
    }
    for k in 1..longest {
        let (num, pairs) = xs.iter().filter(|x| x.len() > k).fold((0.0, 0), |(a, p), x| {
            let c: f64 = x[..x.len() - k].iter().zip(&x[k..]).map(|(u, v)| (u - m) * (v - m)).sum();
            (a + c, p + x.len() - k)
        });
        if num / pairs as f64 / var < low {
            return 2 * k + 10;
        }
    }
    longest
}

struct Fit {
    slope: f64,
    r_squared: f64,
    first: usize,
    last: usize,
}

fn fit_window(rho: &[f64], high: f64, low: f64) -> Option<Fit> {
    let first = rho.iter().position(|&r| r <= high)?;
    let mut last = first;
    while last + 1 < rho.len() && rho[last + 1] >= low && rho[last + 1] > 0.0 {
        last += 1;
    }
    if rho[first] <= 0.0 || last < first + 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = (first..=last).map(|k| (k as f64, rho[k].ln())).collect();
    let (slope, _, r_squared) = linear_fit(&pts)?;
    Some(Fit { slope, r_squared, first, last })
}

/// Ordinary least squares `y ≈ a x + b`; returns `(a, b, R²)`.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<(f64, f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let a = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Some((a, my - a * mx, r2))
}

pub fn estimate_relaxation_with(
    trajectories: &[Trajectory],
    model: &Model,
    observable: &Observable,
    burn_in: f64,
    opts: &RelaxationOptions,
) -> Result<RelaxationEstimate> {
    let span: f64 = trajectories.iter().map(|t| (t.t_max - burn_in.max(0.0)).max(0.0)).sum();
    let longest = trajectories.iter().map(|t| t.t_max - burn_in.max(0.0)).fold(0.0, f64::max);
    if !(longest > 0.0) {
        return Err(Error::InsufficientData("no trajectory extends past the burn-in".into()));
    }
    let dt = match opts.dt {
        Some(dt) if dt > 0.0 => dt,
        Some(dt) => return Err(Error::InvalidArgument(format!("sample spacing {dt} must be positive"))),
        None => longest / opts.target_samples.max(10) as f64,
    };
    let xs: Vec<Vec<f64>> = trajectories.par_iter().map(|t| t.sample(model, observable, burn_in, dt)).collect();
    let samples: usize = xs.iter().map(|x| x.len()).sum();
    if samples < 100 {
        return Err(Error::InsufficientData(format!("{samples} samples after burn-in")));
    }
    let longest_series = xs.iter().map(|x| x.len()).max().unwrap_or(0);
    let max_lag = lag_budget(&xs, opts.window_low).min(longest_series / 4);

    let full: Vec<Series> = xs.par_iter().map(|x| Series::new(x, max_lag)).collect();
    let refs: Vec<&Series> = full.iter().collect();
    let rho = autocorrelation(&refs, max_lag)
        .ok_or_else(|| Error::InsufficientData(format!("{observable} is constant along the trajectories")))?;
    let fit = fit_window(&rho, opts.window_high, opts.window_low)
        .ok_or_else(|| Error::InsufficientData("fewer than three lags inside the fit window".into()))?;
    if !(fit.slope < 0.0) {
        return Err(Error::NonExponentialFit { r_squared: fit.r_squared });
    }
    if fit.r_squared < opts.min_r_squared {
        return Err(Error::NonExponentialFit { r_squared: fit.r_squared });
    }
    let tau = -dt / fit.slope;
    if span < opts.min_span_in_tau * tau {
        return Err(Error::InsufficientData(format!(
            "post-burn-in time {span:.3e} is below {} tau = {:.3e}",
            opts.min_span_in_tau,
            opts.min_span_in_tau * tau
        )));
    }

    // resample whole trajectories; a single trajectory is cut into blocks
    let blocks: Vec<Series> = if xs.len() >= 2 {
        full
    } else {
        let x = &xs[0];
        let size = x.len().div_ceil(8);
        x.chunks(size).map(|c| Series::new(c, max_lag.min(c.len() / 2))).collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.bootstrap_seed);
    let mut taus = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let pick: Vec<&Series> = (0..blocks.len()).map(|_| &blocks[rng.random_range(0..blocks.len())]).collect();
        if let Some(r) = autocorrelation(&pick, max_lag) {
            if let Some(f) = fit_window(&r, opts.window_high, opts.window_low) {
                if f.slope < 0.0 {
                    taus.push(-dt / f.slope);
                }
            }
        }
    }
    let stderr = if taus.len() >= 2 {
        let m = taus.iter().sum::<f64>() / taus.len() as f64;
        (taus.iter().map(|t| (t - m).powi(2)).sum::<f64>() / (taus.len() - 1) as f64).sqrt()
    } else {
        f64::INFINITY
    };
    if !stderr.is_finite() {
        return Err(Error::InsufficientData("bootstrap resamples could not be fitted".into()));
    }
    Ok(RelaxationEstimate {
        tau,
        stderr,
        observable: observable.to_string(),
        r_squared: fit.r_squared,
        fit_window: (fit.first as f64 * dt, fit.last as f64 * dt),
        dt,
        samples,
    })
}
