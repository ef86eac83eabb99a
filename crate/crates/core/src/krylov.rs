//! Krylov–Schur iteration for the largest-magnitude eigenpairs of a complex
//! linear operator. Used with a shift-inverted Liouvillian, where the
//! largest-magnitude eigenvalues map to the eigenvalues nearest the shift.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// A square linear map `y = A x`.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64], y: &mut [C64]) -> Result<()>;
}

#[derive(Debug, Clone)]
pub struct KrylovOptions {
    /// Number of eigenpairs wanted.
    pub nev: usize,
    /// Subspace size; defaults to `max(2·nev + 1, nev + 20)`.
    pub ncv: Option<usize>,
    /// Convergence threshold on `‖A x - θ x‖ / |θ|`.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl KrylovOptions {
    pub fn new(nev: usize) -> Self {
        Self { nev, ncv: None, tol: 1e-12, max_restarts: 400, seed: 0x5eed }
    }
}

#[derive(Debug, Clone)]
pub struct KrylovResult {
    /// Ritz values sorted by decreasing magnitude.
    pub values: Vec<C64>,
    /// Unit-norm Ritz vectors.
    pub vectors: Vec<Vec<C64>>,
    /// Estimated residual norms `‖A x - θ x‖`.
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub matvecs: usize,
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Deterministic pseudo-random unit vector (xorshift), seeded per call.
fn start_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let mut v: Vec<C64> = (0..n).map(|_| C64::new(next(), next())).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|z| *z /= s);
    v
}

/// Orthogonalizes `w` against `basis` (classical Gram–Schmidt, two passes).
fn orthogonalize(basis: &[Vec<C64>], w: &mut [C64]) -> Vec<C64> {
    let mut h = vec![C64::new(0.0, 0.0); basis.len()];
    for _ in 0..2 {
        let coeffs: Vec<C64> = basis.iter().map(|v| dot(v, w)).collect();
        for (v, c) in basis.iter().zip(&coeffs) {
            for (wi, vi) in w.iter_mut().zip(v) {
                *wi -= c * vi;
            }
        }
        for (hi, c) in h.iter_mut().zip(coeffs) {
            *hi += c;
        }
    }
    h
}

/// Swaps the adjacent diagonal entries `k`, `k+1` of the upper-triangular `t`,
/// updating the Schur vectors `q` so that `q t qᴴ` is unchanged.
fn swap_schur(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>, k: usize) {
    let n = t.nrows();
    let (t11, t12, t22) = (t[(k, k)], t[(k, k + 1)], t[(k + 1, k + 1)]);
    // eigenvector of the 2×2 block for t22
    let x0 = t12;
    let x1 = t22 - t11;
    let r = (x0.norm_sqr() + x1.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    let (a, b) = (x0 / r, x1 / r);
    // G = [[a, -b̄], [b, ā]]
    for c in 0..n {
        let (u, v) = (t[(k, c)], t[(k + 1, c)]);
        t[(k, c)] = a.conj() * u + b.conj() * v;
        t[(k + 1, c)] = -b * u + a * v;
    }
    for rr in 0..n {
        let (u, v) = (t[(rr, k)], t[(rr, k + 1)]);
        t[(rr, k)] = u * a + v * b;
        t[(rr, k + 1)] = -u * b.conj() + v * a.conj();
    }
    for rr in 0..q.nrows() {
        let (u, v) = (q[(rr, k)], q[(rr, k + 1)]);
        q[(rr, k)] = u * a + v * b;
        q[(rr, k + 1)] = -u * b.conj() + v * a.conj();
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
    t[(k, k)] = t22;
    t[(k + 1, k + 1)] = t11;
}

/// Reorders a complex Schur form so that diagonal magnitudes decrease.
fn sort_schur(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>) {
    let n = t.nrows();
    for i in 0..n {
        let mut best = i;
        for k in i + 1..n {
            if t[(k, k)].norm() > t[(best, best)].norm() {
                best = k;
            }
        }
        for k in (i..best).rev() {
            swap_schur(t, q, k);
        }
    }
}

/// Complex Schur decomposition `b = q t qᴴ` with `t` upper triangular.
fn schur(b: DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let n = b.nrows();
    let s = nalgebra::linalg::Schur::try_new(b, 1e-15, 100 * n.max(10))
        .ok_or_else(|| Error::NoConvergence("Schur decomposition of the projected matrix failed".into()))?;
    let (q, mut t) = s.unpack();
    for c in 0..n {
        for r in c + 1..n {
            t[(r, c)] = C64::new(0.0, 0.0);
        }
    }
    Ok((q, t))
}

/// Unit eigenvector of the upper-triangular `t` for its `i`-th diagonal entry.
fn triangular_eigenvector(t: &DMatrix<C64>, i: usize) -> DVector<C64> {
    let n = t.nrows();
    let lambda = t[(i, i)];
    let mut y = DVector::<C64>::zeros(n);
    y[i] = C64::new(1.0, 0.0);
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    for l in (0..i).rev() {
        let mut s = C64::new(0.0, 0.0);
        for c in l + 1..=i {
            s += t[(l, c)] * y[c];
        }
        let mut den = t[(l, l)] - lambda;
        if den.norm() < 1e-14 * scale {
            den = C64::new(1e-14 * scale, 0.0);
        }
        y[l] = -s / den;
    }
    let nrm = y.norm();
    y / C64::new(nrm, 0.0)
}

/// Computes the `nev` largest-magnitude eigenpairs of `op`.
pub fn largest_magnitude(op: &dyn LinearOperator, opts: &KrylovOptions) -> Result<KrylovResult> {
    let n = op.dim();
    if opts.nev == 0 || opts.nev > n {
        return Err(Error::InvalidParams(format!("nev = {} must lie in 1..={n}", opts.nev)));
    }
    let nev = opts.nev;
    let ncv = opts.ncv.unwrap_or((2 * nev + 1).max(nev + 20)).clamp(nev + 1, n.max(nev + 1)).min(n);
    let exhaustive = ncv >= n;

    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(ncv + 1);
    basis.push(start_vector(n, opts.seed));
    let mut b = DMatrix::<C64>::zeros(ncv, ncv);
    let mut kept = 0usize;
    let mut matvecs = 0usize;
    let mut fresh_seed = opts.seed;
    let mut w = vec![C64::new(0.0, 0.0); n];

    for restart in 0..=opts.max_restarts {
        let mut beta_last = 0.0;
        for i in kept..ncv {
            op.apply(&basis[i], &mut w)?;
            matvecs += 1;
            let h = orthogonalize(&basis[..=i], &mut w);
            let hnorm = h.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for (r, hr) in h.into_iter().enumerate() {
                b[(r, i)] = hr;
            }
            let mut beta = norm(&w);
            if beta <= 1e-13 * hnorm.max(f64::MIN_POSITIVE) || exhaustive && i + 1 == n {
                // invariant subspace: continue with a fresh direction and zero coupling
                beta = 0.0;
                fresh_seed = fresh_seed.wrapping_add(0x1234_5678);
                w = start_vector(n, fresh_seed);
                orthogonalize(&basis[..=i], &mut w);
                let s = norm(&w);
                if s > 0.0 {
                    w.iter_mut().for_each(|z| *z /= s);
                }
            } else {
                w.iter_mut().for_each(|z| *z /= beta);
            }
            if i + 1 < ncv {
                b[(i + 1, i)] = C64::new(beta, 0.0);
            } else {
                beta_last = beta;
            }
            basis.truncate(i + 1);
            basis.push(w.clone());
        }

        let (mut q, mut t) = schur(b.clone())?;
        sort_schur(&mut t, &mut q);
        let coupling: Vec<C64> = (0..ncv).map(|c| q[(ncv - 1, c)] * beta_last).collect();

        let mut residuals = Vec::with_capacity(nev);
        let mut ys = Vec::with_capacity(nev);
        let mut converged = true;
        for i in 0..nev {
            let y = triangular_eigenvector(&t, i);
            let res = coupling.iter().zip(y.iter()).map(|(c, yi)| c * yi).sum::<C64>().norm();
            if res > opts.tol * t[(i, i)].norm() {
                converged = false;
            }
            residuals.push(res);
            ys.push(y);
        }

        if converged || restart == opts.max_restarts {
            if !converged {
                let worst = residuals
                    .iter()
                    .zip(0..nev)
                    .map(|(r, i)| r / t[(i, i)].norm())
                    .fold(0.0, f64::max);
                return Err(Error::NoConvergence(format!(
                    "{restart} restarts, {matvecs} operator applications, worst relative residual {worst:e} (tol {:e})",
                    opts.tol
                )));
            }
            let values = (0..nev).map(|i| t[(i, i)]).collect();
            let vectors = ys
                .iter()
                .map(|y| {
                    let qy = &q * y;
                    let mut x = vec![C64::new(0.0, 0.0); n];
                    for (c, coef) in qy.iter().enumerate() {
                        for (xi, vi) in x.iter_mut().zip(&basis[c]) {
                            *xi += coef * vi;
                        }
                    }
                    let s = norm(&x);
                    x.iter_mut().for_each(|z| *z /= s);
                    x
                })
                .collect();
            return Ok(KrylovResult { values, vectors, residuals, restarts: restart, matvecs });
        }

        // thick restart on the leading Schur vectors
        kept = (nev + (ncv - nev) / 2).min(ncv - 1);
        let residual_dir = basis.pop().unwrap();
        let mut new_basis = Vec::with_capacity(ncv + 1);
        for l in 0..kept {
            let mut x = vec![C64::new(0.0, 0.0); n];
            for (c, v) in basis.iter().enumerate() {
                let coef = q[(c, l)];
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += coef * vi;
                }
            }
            new_basis.push(x);
        }
        new_basis.push(residual_dir);
        basis = new_basis;
        b.fill(C64::new(0.0, 0.0));
        for c in 0..kept {
            for r in 0..=c {
                b[(r, c)] = t[(r, c)];
            }
            b[(kept, c)] = coupling[c];
        }
    }
    unreachable!("the restart loop returns on its last iteration")
}
