//! Block LOBPCG for the bottom of the spectrum of `S` on the complement of
//! its kernel `√μ`, preconditioned by the inverse diagonal.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GeneratorOperator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobpcgOptions {
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LobpcgOptions {
    fn default() -> Self {
        LobpcgOptions { block: 3, tol: 1e-10, max_iter: 20_000, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct LobpcgOutcome {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

/// Orthonormalises `cols` in place against `fixed` (already orthonormal) and
/// each other, with two Gram-Schmidt passes; drops nearly dependent columns.
fn orthonormalize(fixed: &[&[f64]], cols: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(cols.len());
    for mut c in cols {
        let start = dot(&c, &c).sqrt();
        if !(start > 0.0) || !start.is_finite() {
            continue;
        }
        for _ in 0..2 {
            for f in fixed {
                let p = dot(&c, f);
                axpy(&mut c, -p, f);
            }
            for o in &out {
                let p = dot(&c, o);
                axpy(&mut c, -p, o);
            }
        }
        let norm = dot(&c, &c).sqrt();
        if norm > 1e-10 * start {
            for v in c.iter_mut() {
                *v /= norm;
            }
            out.push(c);
        }
    }
    out
}

fn combine(basis: &[Vec<f64>], coeffs: &DMatrix<f64>, rows: std::ops::Range<usize>, col: usize) -> Vec<f64> {
    let mut v = vec![0.0; basis[0].len()];
    for r in rows {
        let c = coeffs[(r, col)];
        if c != 0.0 {
            axpy(&mut v, c, &basis[r]);
        }
    }
    v
}

/// Rayleigh-Ritz on the orthonormal `basis`; eigenpairs in ascending order.
fn ritz(basis: &[Vec<f64>], images: &[Vec<f64>]) -> (Vec<f64>, DMatrix<f64>) {
    let m = basis.len();
    let mut g = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = 0.5 * (dot(&basis[i], &images[j]) + dot(&basis[j], &images[i]));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let eig = SymmetricEigen::new(g);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Smallest eigenpair of `S` orthogonal to `√μ`.
pub fn lobpcg(gen: &GeneratorOperator, opts: &LobpcgOptions) -> Result<LobpcgOutcome> {
    let dim = gen.dim();
    let k = opts.block.clamp(1, dim.saturating_sub(1).max(1));
    if dim < 2 * k + 2 {
        return Err(Error::InvalidArgument(format!("dimension {dim} too small for block size {k}")));
    }
    let kernel = gen.kernel_vector();
    let precond: Vec<f64> = (0..dim).map(|s| 1.0 / gen.total_rate(s)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<Vec<f64>> = (0..k).map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut x = orthonormalize(&[&kernel], start);
    let mut ax = gen.apply_symmetric_block(&x);
    let (mut values, c) = ritz(&x, &ax);
    let m = x.len();
    x = (0..m).map(|j| combine(&x, &c, 0..m, j)).collect();
    ax = (0..m).map(|j| combine(&ax, &c, 0..m, j)).collect();
    let mut p: Vec<Vec<f64>> = Vec::new();
    let mut residual = f64::INFINITY;

    for it in 0..opts.max_iter {
        let r: Vec<Vec<f64>> = (0..x.len())
            .map(|j| ax[j].iter().zip(&x[j]).map(|(a, b)| a - values[j] * b).collect())
            .collect();
        residual = dot(&r[0], &r[0]).sqrt();
        if residual <= opts.tol {
            return Ok(LobpcgOutcome { value: values[0], vector: x.swap_remove(0), residual, iterations: it });
        }
        let w: Vec<Vec<f64>> =
            r.into_iter().map(|rj| rj.iter().zip(&precond).map(|(a, b)| a * b).collect()).collect();
        let nx = x.len();
        let mut fixed: Vec<&[f64]> = vec![&kernel];
        fixed.extend(x.iter().map(|v| v.as_slice()));
        let w = orthonormalize(&fixed, w);
        let nw = w.len();
        fixed.extend(w.iter().map(|v| v.as_slice()));
        let pp = orthonormalize(&fixed, std::mem::take(&mut p));
        let mut basis = std::mem::take(&mut x);
        basis.extend(w);
        basis.extend(pp);
        let images = gen.apply_symmetric_block(&basis);
        let (vals, c) = ritz(&basis, &images);
        let total = basis.len();
        x = (0..nx).map(|j| combine(&basis, &c, 0..total, j)).collect();
        ax = (0..nx).map(|j| combine(&images, &c, 0..total, j)).collect();
        p = (0..nx).map(|j| combine(&basis, &c, nx..total, j)).collect();
        values = vals[..nx].to_vec();
        if nw == 0 {
            // the preconditioned residual added nothing new
            return Err(Error::NotConverged { iterations: it, residual });
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iter, residual })
}
