//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;

pub type M = DMatrix<C64>;

/// Collective lowering operator in the basis `|j, j⟩ … |j, -j⟩`, built from
/// `S-|j,m⟩ = sqrt((j+m)(j-m+1)) |j,m-1⟩`.
pub fn lowering(n: usize) -> M {
    let j = n as f64 / 2.0;
    let d = n + 1;
    let mut s = M::zeros(d, d);
    for i in 0..n {
        let m = j - i as f64;
        s[(i + 1, i)] = C64::new(((j + m) * (j - m + 1.0)).sqrt(), 0.0);
    }
    s
}

/// Right-hand side of the vacuum master equation
/// `ρ' = -iΩ[S+ + S-, ρ] + 2Γ (S-ρS+ - ½{S+S-, ρ})`.
pub fn vacuum_rhs(n: usize, omega: f64, gamma: f64, rho: &M) -> M {
    let sm = lowering(n);
    let sp = sm.adjoint();
    let h = (&sp + &sm) * C64::new(omega, 0.0);
    let i = C64::new(0.0, 1.0);
    let comm = &h * rho - rho * &h;
    let spsm = &sp * &sm;
    let diss = &sm * rho * &sp - (&spsm * rho + rho * &spsm) * C64::new(0.5, 0.0);
    comm * (-i) + diss * C64::new(2.0 * gamma, 0.0)
}

/// Single atom, no drive: the Bloch equations in a squeezed bath decouple into
/// `⟨σz⟩` relaxing at `2Γ(2n̄+1)` and the two quadratures at `Γ(2n̄+1) ∓ 2Γ|m|`.
/// Eigenvalues sorted ascending by real part magnitude.
pub fn single_atom_eigenvalues(gamma: f64, n_bar: f64, m_abs: f64) -> [f64; 4] {
    let t = gamma * (2.0 * n_bar + 1.0);
    let mut v = [0.0, -(t - 2.0 * gamma * m_abs), -(t + 2.0 * gamma * m_abs), -2.0 * t];
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Hermitian matrix with independent Gaussian-like entries.
pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> M {
    let a = M::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Random density matrix `A Aᴴ / Tr`.
pub fn random_density<R: Rng>(d: usize, rng: &mut R) -> M {
    let a = M::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let p = &a * a.adjoint();
    let tr = p.trace();
    p / tr
}

pub fn frobenius(m: &M) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
