//! The generator of the spin-flip dynamics on `{−1, +1}^{Λ(l)}`, its
//! spectral gap and the variational bounds around it.
//!
//! Vectors indexed by state are used in two coordinate systems: functions
//! `f` (on which `A` acts) and the symmetrised coordinates `v = D^{1/2} f`
//! with `D = diag(μ)`, on which `S = D^{1/2}(−A)D^{−1/2}` is symmetric.

mod lobpcg;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{GibbsTable, MATERIALIZE_MAX_SITES};
use crate::hamiltonian::{Model, RateFamily};

pub use lobpcg::{LobpcgOptions, LobpcgOutcome};

/// Largest number of sites for which a generator is built.
pub const GENERATOR_MAX_SITES: usize = MATERIALIZE_MAX_SITES;
/// Default largest dimension solved with a dense eigendecomposition.
pub const DENSE_MAX_DIM: usize = 1 << 14;
/// Hard ceiling for dense storage.
pub const DENSE_HARD_MAX_DIM: usize = 1 << 16;
/// Accepted gaps have an eigen-residual at most this large.
pub const ACCEPT_RESIDUAL: f64 = 1e-8;
/// `μ(Γ)μ(Γᶜ)` below this is treated as a trivial event.
pub const MIN_EVENT_MASS: f64 = 1e-300;

const STATE_CHUNK: usize = 1 << 10;

/// The generator `A` of the dynamics together with its Gibbs weights.
#[derive(Debug, Clone)]
pub struct GeneratorOperator {
    model: Model,
    rates: RateFamily,
    gibbs: GibbsTable,
    n: usize,
    neighbor_masks: Vec<u64>,
    // indexed by site, spin bit and number of + neighbours
    flip_table: Vec<[[f64; 5]; 2]>,
    sym_table: Vec<[[f64; 5]; 2]>,
    log_mu: Vec<f64>,
}

pub fn build_generator(model: &Model, rates: RateFamily) -> Result<GeneratorOperator> {
    GeneratorOperator::new(model, rates)
}

impl GeneratorOperator {
    pub fn new(model: &Model, rates: RateFamily) -> Result<Self> {
        let n = model.num_sites();
        if n > GENERATOR_MAX_SITES {
            return Err(Error::SizeGuard { what: format!("generator over {n} sites"), limit: GENERATOR_MAX_SITES });
        }
        let lattice = model.lattice();
        let mut neighbor_masks = Vec::with_capacity(n);
        let mut flip_table = Vec::with_capacity(n);
        let mut sym_table = Vec::with_capacity(n);
        for x in 0..n {
            let nb = lattice.box_neighbors(x);
            neighbor_masks.push(nb.iter().fold(0u64, |m, &j| m | 1 << j));
            let mut q = [[0.0; 5]; 2];
            let mut s = [[0.0; 5]; 2];
            for (bit, spin) in [(0usize, -1.0), (1, 1.0)] {
                for k in 0..=nb.len() {
                    let local = 2.0 * k as f64 - nb.len() as f64 + model.boundary_field(x);
                    let dh = 2.0 * spin * local;
                    q[bit][k] = rates.rate_for_delta(dh);
                    s[bit][k] = rates.symmetric_rate(dh);
                }
            }
            flip_table.push(q);
            sym_table.push(s);
        }
        let gibbs = GibbsTable::new(model, rates.beta.value())?;
        let log_mu = (0..1u64 << n).map(|s| gibbs.log_probability(s)).collect();
        Ok(GeneratorOperator { model: model.clone(), rates, gibbs, n, neighbor_masks, flip_table, sym_table, log_mu })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn rates(&self) -> RateFamily {
        self.rates
    }

    pub fn gibbs(&self) -> &GibbsTable {
        &self.gibbs
    }

    pub fn num_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn log_mu(&self, state: usize) -> f64 {
        self.log_mu[state]
    }

    pub fn mu(&self, state: usize) -> f64 {
        self.log_mu[state].exp()
    }

    #[inline]
    fn plus_neighbors(&self, state: usize, x: usize) -> usize {
        (state as u64 & self.neighbor_masks[x]).count_ones() as usize
    }

    /// `q(x, σ)` for the state index `state`.
    #[inline]
    pub fn flip_rate(&self, state: usize, x: usize) -> f64 {
        self.flip_table[x][state >> x & 1][self.plus_neighbors(state, x)]
    }

    /// `sqrt(q(x, σ) q(x, σ^x))`.
    #[inline]
    pub fn symmetric_rate(&self, state: usize, x: usize) -> f64 {
        self.sym_table[x][state >> x & 1][self.plus_neighbors(state, x)]
    }

    /// `Σ_x q(x, σ)`, the diagonal of `−A` and of `S`.
    pub fn total_rate(&self, state: usize) -> f64 {
        (0..self.n).map(|x| self.flip_rate(state, x)).sum()
    }

    /// `(Af)(σ) = Σ_x q(x, σ)(f(σ^x) − f(σ))`.
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        assert_eq!(f.len(), self.dim());
        let mut out = vec![0.0; f.len()];
        out.par_chunks_mut(STATE_CHUNK).enumerate().for_each(|(c, chunk)| {
            for (o, slot) in chunk.iter_mut().enumerate() {
                let s = c * STATE_CHUNK + o;
                *slot = (0..self.n).map(|x| self.flip_rate(s, x) * (f[s ^ 1 << x] - f[s])).sum();
            }
        });
        out
    }

    /// `S` applied to several vectors at once.
    pub fn apply_symmetric_block(&self, vs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let k = vs.len();
        // row-major scratch so that one pass over the states serves every vector
        let mut out = vec![0.0; dim * k];
        out.par_chunks_mut(STATE_CHUNK * k.max(1)).enumerate().for_each(|(c, chunk)| {
            let first = c * STATE_CHUNK;
            for (o, row) in chunk.chunks_mut(k.max(1)).enumerate() {
                let s = first + o;
                let mut d = 0.0;
                for x in 0..self.n {
                    let bit = s >> x & 1;
                    let m = self.plus_neighbors(s, x);
                    d += self.flip_table[x][bit][m];
                    let w = self.sym_table[x][bit][m];
                    let t = s ^ 1 << x;
                    for (r, v) in row.iter_mut().zip(vs) {
                        *r -= w * v[t];
                    }
                }
                for (r, v) in row.iter_mut().zip(vs) {
                    *r += d * v[s];
                }
            }
        });
        (0..k).map(|j| (0..dim).map(|s| out[s * k + j]).collect()).collect()
    }

    pub fn apply_symmetric(&self, v: &[f64]) -> Vec<f64> {
        self.apply_symmetric_block(std::slice::from_ref(&v.to_vec())).pop().expect("one vector")
    }

    fn check_dense(&self, limit: usize) -> Result<()> {
        let limit = limit.min(DENSE_HARD_MAX_DIM);
        if self.dim() > limit {
            return Err(Error::SizeGuard { what: format!("dense matrix of dimension {}", self.dim()), limit });
        }
        Ok(())
    }

    /// Dense `A` (rows sum to zero).
    pub fn dense_generator(&self) -> Result<DMatrix<f64>> {
        self.check_dense(DENSE_MAX_DIM)?;
        let dim = self.dim();
        let mut a = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            for x in 0..self.n {
                let q = self.flip_rate(s, x);
                a[(s, s ^ 1 << x)] += q;
                a[(s, s)] -= q;
            }
        }
        Ok(a)
    }

    /// Dense `S`.
    pub fn dense_symmetric(&self, limit: usize) -> Result<DMatrix<f64>> {
        self.check_dense(limit)?;
        let dim = self.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for s in 0..dim {
            m[(s, s)] = self.total_rate(s);
            for x in 0..self.n {
                m[(s, s ^ 1 << x)] = -self.symmetric_rate(s, x);
            }
        }
        Ok(m)
    }

    /// `v = D^{1/2} f`.
    pub fn to_symmetric_coords(&self, f: &[f64]) -> Vec<f64> {
        f.iter().zip(&self.log_mu).map(|(v, lm)| v * (0.5 * lm).exp()).collect()
    }

    /// `f = D^{−1/2} v`.
    pub fn to_function_coords(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.log_mu).map(|(x, lm)| x * (-0.5 * lm).exp()).collect()
    }

    /// Unit vector `√μ` spanning the kernel of `S`.
    pub fn kernel_vector(&self) -> Vec<f64> {
        let v: Vec<f64> = self.log_mu.iter().map(|lm| (0.5 * lm).exp()).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / norm).collect()
    }

    /// `½ Σ_σ Σ_x μ(σ) q(x, σ) (f(σ^x) − f(σ))²`, as a sum of nonnegative terms.
    pub fn dirichlet_form(&self, f: &[f64]) -> f64 {
        assert_eq!(f.len(), self.dim());
        let partial: Vec<f64> = (0..self.dim())
            .into_par_iter()
            .with_min_len(STATE_CHUNK)
            .map(|s| {
                let mut acc = 0.0;
                for x in 0..self.n {
                    let t = s ^ 1 << x;
                    if t > s {
                        let d = f[t] - f[s];
                        acc += (self.log_mu[s].exp() * self.flip_rate(s, x)) * d * d;
                    }
                }
                acc
            })
            .collect();
        partial.iter().sum()
    }

    /// `μ(|f − μf|²)`.
    pub fn variance(&self, f: &[f64]) -> f64 {
        let mean: f64 = f.iter().zip(&self.log_mu).map(|(v, lm)| v * lm.exp()).sum();
        f.iter().zip(&self.log_mu).map(|(v, lm)| lm.exp() * (v - mean) * (v - mean)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    DenseEig,
    IterativeEig,
}

impl std::fmt::Display for GapMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GapMethod::DenseEig => "dense_eig",
            GapMethod::IterativeEig => "iterative_eig",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    /// Dense up to the configured dimension, iterative above.
    Auto,
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapOptions {
    pub method: MethodChoice,
    pub dense_max_dim: usize,
    pub lobpcg: LobpcgOptions,
    pub keep_witness: bool,
}

impl Default for GapOptions {
    fn default() -> Self {
        GapOptions { method: MethodChoice::Auto, dense_max_dim: DENSE_MAX_DIM, lobpcg: LobpcgOptions::default(), keep_witness: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapResult {
    pub gap: f64,
    pub method: GapMethod,
    /// `‖Sv − λv‖` for the unit gap vector `v`.
    pub residual: f64,
    pub iterations: usize,
    /// The gap eigenfunction in function coordinates, normalised to unit variance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<f64>>,
}

/// One line of gap output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub l: usize,
    pub beta: f64,
    pub boundary_descriptor: String,
    pub rates: String,
    pub gap: f64,
    pub method: GapMethod,
    pub residual: f64,
}

impl GapResult {
    pub fn record(&self, gen: &GeneratorOperator, boundary_descriptor: &str) -> GapRecord {
        GapRecord {
            l: gen.model().lattice().l(),
            beta: gen.rates().beta.value(),
            boundary_descriptor: boundary_descriptor.to_string(),
            rates: gen.rates().kind.to_string(),
            gap: self.gap,
            method: self.method,
            residual: self.residual,
        }
    }
}

impl GapRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plain record")
    }
}

pub fn exact_gap(gen: &GeneratorOperator) -> Result<GapResult> {
    exact_gap_with(gen, &GapOptions::default())
}

pub fn exact_gap_with(gen: &GeneratorOperator, opts: &GapOptions) -> Result<GapResult> {
    let dense = match opts.method {
        MethodChoice::Dense => true,
        MethodChoice::Iterative => false,
        MethodChoice::Auto => gen.dim() <= opts.dense_max_dim.min(DENSE_HARD_MAX_DIM),
    };
    let limit = if opts.method == MethodChoice::Dense { opts.dense_max_dim.max(DENSE_MAX_DIM) } else { opts.dense_max_dim };
    let (v, residual, iterations, method) = if gen.dim() == 2 || dense {
        let (v, r) = dense_gap_vector(gen, limit)?;
        (v, r, 0, GapMethod::DenseEig)
    } else {
        let out = lobpcg::lobpcg(gen, &opts.lobpcg)?;
        (out.vector, out.residual, out.iterations, GapMethod::IterativeEig)
    };
    if !(residual <= ACCEPT_RESIDUAL) {
        return Err(Error::NotConverged { iterations, residual });
    }
    let f = gen.to_function_coords(&v);
    let var = gen.variance(&f);
    let gap = gen.dirichlet_form(&f) / var;
    let witness = opts.keep_witness.then(|| {
        let s = var.sqrt();
        f.iter().map(|x| x / s).collect()
    });
    Ok(GapResult { gap, method, residual, iterations, witness })
}

/// Removes the `√μ` component and normalises.
fn deflate(v: &mut [f64], kernel: &[f64]) {
    let c: f64 = v.iter().zip(kernel).map(|(a, b)| a * b).sum();
    for (a, b) in v.iter_mut().zip(kernel) {
        *a -= c * b;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for a in v.iter_mut() {
        *a /= norm;
    }
}

fn residual_norm(gen: &GeneratorOperator, v: &[f64]) -> f64 {
    let sv = gen.apply_symmetric(v);
    let lambda: f64 = sv.iter().zip(v).map(|(a, b)| a * b).sum();
    sv.iter().zip(v).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt()
}

fn dense_gap_vector(gen: &GeneratorOperator, limit: usize) -> Result<(Vec<f64>, f64)> {
    let s = gen.dense_symmetric(limit)?;
    let eig = SymmetricEigen::new(s);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let kernel = gen.kernel_vector();
    let v0: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let overlap: f64 = v0.iter().zip(&kernel).map(|(a, b)| a * b).sum::<f64>().abs();
    // the chain is irreducible, so the bottom eigenvector must be √μ
    if (1.0 - overlap).abs() > 1e-6 {
        return Err(Error::NotConverged { iterations: 0, residual: 1.0 - overlap });
    }
    let mut v: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();
    deflate(&mut v, &kernel);
    let r = residual_norm(gen, &v);
    Ok((v, r))
}

/// `−μ(fAf)/μ(|f − μf|²)`, computed from the Dirichlet form.
pub fn rayleigh_quotient(gen: &GeneratorOperator, f: &[f64]) -> Result<f64> {
    if f.len() != gen.dim() {
        return Err(Error::InvalidArgument(format!("function has {} values, expected {}", f.len(), gen.dim())));
    }
    let var = gen.variance(f);
    let scale = f.iter().map(|x| x * x).fold(0.0, f64::max);
    if !(var > 1e-300 && var > 1e-24 * scale) {
        return Err(Error::InvalidArgument("function is constant under the Gibbs measure".into()));
    }
    Ok(gen.dirichlet_form(f) / var)
}

fn log_sum_exp(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `q̄/(μ(Γ)μ(Γᶜ)) · Σ_x Σ_{σ∈Γ, σ^x∉Γ} μ(σ)` for `Γ` given by membership.
pub fn indicator_upper_bound(gen: &GeneratorOperator, members: &[bool]) -> Result<f64> {
    if members.len() != gen.dim() {
        return Err(Error::InvalidArgument("membership vector has the wrong length".into()));
    }
    let log_in = log_sum_exp((0..gen.dim()).filter(|&s| members[s]).map(|s| gen.log_mu(s)));
    let log_out = log_sum_exp((0..gen.dim()).filter(|&s| !members[s]).map(|s| gen.log_mu(s)));
    if !(log_in + log_out >= MIN_EVENT_MASS.ln()) {
        return Err(Error::InvalidArgument("event is trivial under the Gibbs measure".into()));
    }
    let n = gen.num_sites();
    let log_exit = log_sum_exp((0..gen.dim()).filter(|&s| members[s]).flat_map(|s| {
        (0..n).filter(move |&x| !members[s ^ 1 << x]).map(move |_| gen.log_mu(s))
    }));
    let (_, q_upper) = gen.rates().bounds();
    Ok(q_upper * (log_exit - log_in - log_out).exp())
}

/// [`indicator_upper_bound`] for an event given as a predicate on states.
pub fn indicator_upper_bound_by<P>(gen: &GeneratorOperator, predicate: P) -> Result<f64>
where
    P: Fn(usize) -> bool + Sync,
{
    let members: Vec<bool> = (0..gen.dim()).into_par_iter().map(|s| predicate(s)).collect();
    indicator_upper_bound(gen, &members)
}

/// `q̲ l^{−2} exp(−4β(1 + l))`.
pub fn schonmann_lower_bound(l: usize, beta: f64, q_lower: f64) -> f64 {
    let l = l as f64;
    q_lower / (l * l) * (-4.0 * beta * (1.0 + l)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{make_boundary, BoundaryCondition, BoundaryKind};
    use crate::hamiltonian::RateKind;
    use crate::lattice::{LatticeBox, Site};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gen(l: i64, kind: BoundaryKind, rate: RateKind, beta: f64) -> GeneratorOperator {
        let b = LatticeBox::new(l).unwrap();
        let w = make_boundary(&kind, &b).unwrap();
        GeneratorOperator::new(&Model::new(b, w).unwrap(), RateFamily::new(rate, beta).unwrap()).unwrap()
    }

    #[test]
    fn two_state_chain() {
        let g = gen(1, BoundaryKind::Free, RateKind::Exponential, 1.3);
        let a = g.dense_generator().unwrap();
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 0)], 1.0);
        let r = exact_gap(&g).unwrap();
        assert_eq!(r.gap, 2.0);
    }

    #[test]
    fn rows_sum_to_zero_and_reversible() {
        let g = gen(3, BoundaryKind::Alternating, RateKind::Metropolis, 1.2);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = rng.random_range(0..g.dim());
            let x = rng.random_range(0..9);
            let t = s ^ 1 << x;
            let lhs = g.mu(s) * g.flip_rate(s, x);
            let rhs = g.mu(t) * g.flip_rate(t, x);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
        }
        let f: Vec<f64> = vec![1.0; g.dim()];
        assert!(g.apply_generator(&f).iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn infinite_temperature_gap_is_two() {
        for l in 1..=3 {
            for kind in [BoundaryKind::Plus, BoundaryKind::Free, BoundaryKind::Slab { delta: 0.5 }] {
                let r = exact_gap(&gen(l, kind, RateKind::Exponential, 0.0)).unwrap();
                assert!((r.gap - 2.0).abs() < 1e-9, "l={l}: {}", r.gap);
            }
        }
    }

    #[test]
    fn gap_is_invariant_under_boundary_negation() {
        for l in 1..=3 {
            let b = LatticeBox::new(l).unwrap();
            let vals = (0..4 * l).map(|k| ((k * 5 % 7) as f64 - 3.0) / 3.0).collect();
            let w = BoundaryCondition::new(&b, vals).unwrap();
            let m = Model::new(b, w).unwrap();
            for kind in RateKind::ALL {
                let rf = RateFamily::new(kind, 0.9).unwrap();
                let g1 = exact_gap(&GeneratorOperator::new(&m, rf).unwrap()).unwrap().gap;
                let g2 = exact_gap(&GeneratorOperator::new(&m.negated(), rf).unwrap()).unwrap().gap;
                assert!((g1 - g2).abs() <= 1e-9 * g1, "{g1} vs {g2}");
            }
        }
    }

    #[test]
    fn symmetrisation_matches_unsymmetric_spectrum() {
        let g = gen(2, BoundaryKind::Slab { delta: 0.5 }, RateKind::HeatBath, 1.0);
        let a = g.dense_generator().unwrap();
        let mut from_a: Vec<f64> = (-a).complex_eigenvalues().iter().map(|z| {
            assert!(z.im.abs() < 1e-8);
            z.re
        }).collect();
        from_a.sort_by(f64::total_cmp);
        let mut from_s: Vec<f64> = SymmetricEigen::new(g.dense_symmetric(DENSE_MAX_DIM).unwrap()).eigenvalues.iter().copied().collect();
        from_s.sort_by(f64::total_cmp);
        for (x, y) in from_a.iter().zip(&from_s) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn semigroup_contracts_at_the_gap_rate() {
        let g = gen(2, BoundaryKind::Alternating, RateKind::Exponential, 1.0);
        let gap = exact_gap(&g).unwrap().gap;
        let a = g.dense_generator().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mu: Vec<f64> = (0..16).map(|s| g.mu(s)).collect();
        let norm = |f: &[f64]| -> f64 {
            let m: f64 = f.iter().zip(&mu).map(|(a, b)| a * b).sum();
            f.iter().zip(&mu).map(|(a, b)| b * (a - m).powi(2)).sum::<f64>().sqrt()
        };
        for t in [0.1, 1.0, 10.0] {
            let p = (&a * t).exp();
            for _ in 0..10 {
                let f: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
                let pf: Vec<f64> = (0..16).map(|i| (0..16).map(|j| p[(i, j)] * f[j]).sum()).collect();
                assert!(norm(&pf) <= norm(&f) * (-gap * t).exp() * (1.0 + 1e-9) + 1e-14);
            }
        }
    }

    #[test]
    fn kernel_is_constant_and_simple() {
        let g = gen(2, BoundaryKind::Plus, RateKind::Exponential, 1.0);
        let eig = SymmetricEigen::new(g.dense_symmetric(DENSE_MAX_DIM).unwrap());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!(ev[0].abs() < 1e-8);
        assert!(ev[1] > 1e-3);
        let f = g.to_function_coords(&g.kernel_vector());
        assert!(f.iter().all(|x| (x - f[0]).abs() < 1e-8 * f[0].abs()));
    }

    #[test]
    fn rayleigh_quotients_dominate_gap() {
        let g = gen(2, BoundaryKind::Free, RateKind::Exponential, 1.0);
        let r = exact_gap_with(&g, &GapOptions { keep_witness: true, ..Default::default() }).unwrap();
        let w = r.witness.clone().unwrap();
        assert!((rayleigh_quotient(&g, &w).unwrap() - r.gap).abs() < 1e-8);
        let o = g.model().lattice().index_of(Site::ORIGIN).unwrap();
        let ind: Vec<f64> = (0..16).map(|s| (s >> o & 1) as f64).collect();
        assert!(rayleigh_quotient(&g, &ind).unwrap() >= r.gap);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let f: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert!(rayleigh_quotient(&g, &f).unwrap() >= r.gap - 1e-10);
        }
        assert!(rayleigh_quotient(&g, &vec![3.0; 16]).is_err());
    }

    #[test]
    fn the_quotient_matches_the_generator_form() {
        // −μ(f·Af) evaluated directly against the Dirichlet form
        let g = gen(3, BoundaryKind::Slab { delta: 1.0 }, RateKind::HeatBath, 0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f: Vec<f64> = (0..g.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let af = g.apply_generator(&f);
        let direct: f64 = -(0..g.dim()).map(|s| g.mu(s) * f[s] * af[s]).sum::<f64>();
        assert!((direct - g.dirichlet_form(&f)).abs() < 1e-12 * direct.abs());
    }

    #[test]
    fn indicator_bound_examples() {
        let g = gen(2, BoundaryKind::Free, RateKind::Exponential, 1.0);
        let gap = exact_gap(&g).unwrap().gap;
        let o = g.model().lattice().index_of(Site::ORIGIN).unwrap();
        let b = indicator_upper_bound_by(&g, |s| s >> o & 1 == 1).unwrap();
        let bc = indicator_upper_bound_by(&g, |s| s >> o & 1 == 0).unwrap();
        assert!(b >= gap);
        // with ω ≡ 0 the global flip maps the event onto its complement
        assert!((b - bc).abs() < 1e-12 * b);
        assert!(indicator_upper_bound_by(&g, |_| true).is_err());
    }

    #[test]
    fn schonmann_examples() {
        let q = RateFamily::new(RateKind::Exponential, 1.0).unwrap().bounds().0;
        assert!((q - (-4.0f64).exp()).abs() < 1e-15);
        let v = schonmann_lower_bound(2, 1.0, q);
        assert!((v - (-16.0f64).exp() / 4.0).abs() < 1e-20);
        assert_eq!(schonmann_lower_bound(3, 0.0, 1.0), 1.0 / 9.0);
    }

    #[test]
    fn dense_and_iterative_agree() {
        for (kind, rate, beta) in [
            (BoundaryKind::Alternating, RateKind::Exponential, 1.0),
            (BoundaryKind::Plus, RateKind::Metropolis, 1.5),
            (BoundaryKind::Slab { delta: 0.5 }, RateKind::HeatBath, 0.5),
        ] {
            let g = gen(3, kind, rate, beta);
            let d = exact_gap_with(&g, &GapOptions { method: MethodChoice::Dense, ..Default::default() }).unwrap();
            let i = exact_gap_with(&g, &GapOptions { method: MethodChoice::Iterative, ..Default::default() }).unwrap();
            assert_eq!(i.method, GapMethod::IterativeEig);
            assert!((d.gap - i.gap).abs() <= 1e-7 * d.gap, "{} vs {}", d.gap, i.gap);
        }
    }

    #[test]
    fn record_json() {
        let g = gen(2, BoundaryKind::Plus, RateKind::Exponential, 1.0);
        let r = exact_gap(&g).unwrap();
        let j = r.record(&g, "plus").to_json();
        let v: serde_json::Value = serde_json::from_str(&j).unwrap();
        assert_eq!(v["l"], 2);
        assert_eq!(v["method"], "dense_eig");
        assert_eq!(v["rates"], "exponential");
    }
}
