//! Collective spin operators in the symmetric Dicke sector and density matrices.
//!
//! States are indexed by `i = 0..=N`, with `m = j - i` and `j = N/2`, so the
//! basis runs from `|j, +j⟩` down to `|j, -j⟩`. In this ordering `S+` lives
//! on the first superdiagonal.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Default cap on the number of atoms (d = N + 1, D = d²).
pub const DEFAULT_MAX_ATOMS: usize = 512;

/// Tolerances used when validating a [`DensityMatrix`].
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = 1e-8;

/// `⟨j, m+1| S+ |j, m⟩`.
pub fn raising_element(j: f64, m: f64) -> f64 {
    (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt()
}

/// Ladder coefficients in index form: `ladder[i] = (S+)[i-1, i]`, with
/// `ladder[0] = 0` since `S+ |j, j⟩ = 0`.
pub fn ladder_coefficients(n_atoms: usize) -> Vec<f64> {
    let j = n_atoms as f64 / 2.0;
    (0..=n_atoms)
        .map(|i| if i == 0 { 0.0 } else { raising_element(j, j - i as f64) })
        .collect()
}

/// Collective operators `S±`, `Sx`, `Sy`, `Sz` for `N` two-level atoms.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub n_atoms: usize,
    pub dim: usize,
    pub s_plus: CMatrix,
    pub s_minus: CMatrix,
    pub s_x: CMatrix,
    pub s_y: CMatrix,
    pub s_z: CMatrix,
}

impl SpinOperators {
    pub fn new(n_atoms: usize) -> Result<Self> {
        Self::with_cap(n_atoms, DEFAULT_MAX_ATOMS)
    }

    pub fn with_cap(n_atoms: usize, max_atoms: usize) -> Result<Self> {
        check_size(n_atoms, max_atoms)?;
        let dim = n_atoms + 1;
        let j = n_atoms as f64 / 2.0;
        let ladder = ladder_coefficients(n_atoms);

        let mut s_plus = CMatrix::zeros(dim, dim);
        for i in 1..dim {
            s_plus[(i - 1, i)] = C64::new(ladder[i], 0.0);
        }
        let s_minus = s_plus.adjoint();
        let s_x = (&s_plus + &s_minus).scale(0.5);
        let s_y = (&s_plus - &s_minus) * C64::new(0.0, -0.5);
        let s_z = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            dim,
            (0..dim).map(|i| C64::new(j - i as f64, 0.0)),
        ));

        Ok(Self { n_atoms, dim, s_plus, s_minus, s_x, s_y, s_z })
    }

    /// Total spin `j = N/2`.
    pub fn j(&self) -> f64 {
        self.n_atoms as f64 / 2.0
    }

    /// `m` values in basis order (`+j` first).
    pub fn m_values(&self) -> Vec<f64> {
        m_values(self.n_atoms)
    }
}

pub fn m_values(n_atoms: usize) -> Vec<f64> {
    let j = n_atoms as f64 / 2.0;
    (0..=n_atoms).map(|i| j - i as f64).collect()
}

pub(crate) fn check_size(n_atoms: usize, max_atoms: usize) -> Result<()> {
    if n_atoms == 0 {
        return Err(Error::InvalidParams("n_atoms must be at least 1".into()));
    }
    if n_atoms > max_atoms {
        return Err(Error::Size(format!(
            "n_atoms = {n_atoms} exceeds the configured cap of {max_atoms}"
        )));
    }
    Ok(())
}

pub fn build_spin_operators(n_atoms: usize) -> Result<SpinOperators> {
    SpinOperators::new(n_atoms)
}

/// Largest elementwise deviation `max |A - A†|`.
pub fn hermiticity_deviation(a: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut dev = 0.0f64;
    for c in 0..n {
        for r in 0..=c {
            dev = dev.max((a[(r, c)] - a[(c, r)].conj()).norm());
        }
    }
    dev
}

/// `Tr[op · rho]`.
pub fn expectation(op: &CMatrix, rho: &DensityMatrix) -> Result<C64> {
    let d = rho.dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
    }
    Ok(trace_of_product(op, rho.matrix()))
}

/// `Tr[a · b]` without forming the product.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `Tr[op² ρ] - Tr[op ρ]²` for a Hermitian `op`.
pub fn variance(op: &CMatrix, rho: &DensityMatrix) -> Result<f64> {
    let d = rho.dim();
    if op.nrows() != d || op.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: op.nrows() });
    }
    let dev = hermiticity_deviation(op);
    let scale = op.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if dev > 1e-12 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let mean = trace_of_product(op, rho.matrix()).re;
    let op2 = op * op;
    let second = trace_of_product(&op2, rho.matrix()).re;
    Ok(second - mean * mean)
}

/// A validated density matrix in the Dicke basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity with the default tolerances.
    pub fn new(data: CMatrix) -> Result<Self> {
        Self::with_positivity_tolerance(data, POSITIVITY_TOL)
    }

    pub fn with_positivity_tolerance(data: CMatrix, positivity_tol: f64) -> Result<Self> {
        if data.nrows() != data.ncols() || data.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "density matrix must be square and nonempty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let dev = hermiticity_deviation(&data);
        if dev > HERMITICITY_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let tr = data.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let rho = Self { data };
        let min_eig = rho.min_eigenvalue();
        if min_eig < -positivity_tol {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(rho)
    }

    /// Wraps a matrix without validation.
    pub fn from_unchecked(data: CMatrix) -> Self {
        Self { data }
    }

    /// Pure Dicke state `|m_i⟩⟨m_i|` selected by basis index (0 is `m = +j`).
    pub fn dicke(n_atoms: usize, index: usize) -> Result<Self> {
        check_size(n_atoms, usize::MAX)?;
        let d = n_atoms + 1;
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, found: index });
        }
        let mut data = CMatrix::zeros(d, d);
        data[(index, index)] = C64::new(1.0, 0.0);
        Ok(Self { data })
    }

    /// All atoms in the ground state, `|j, -j⟩`.
    pub fn all_down(n_atoms: usize) -> Result<Self> {
        Self::dicke(n_atoms, n_atoms)
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut data = CMatrix::zeros(dim, dim);
        for i in 0..dim {
            data[(i, i)] = C64::new(1.0 / dim as f64, 0.0);
        }
        Self { data }
    }

    /// Spin coherent state pointing along `(θ, φ)` on the Bloch sphere.
    pub fn coherent(n_atoms: usize, theta: f64, phi: f64) -> Result<Self> {
        check_size(n_atoms, usize::MAX)?;
        let d = n_atoms + 1;
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        // amplitude of |m = j - i⟩ is sqrt(C(N, i)) cos^(N-i) sin^i e^{i i φ}
        let mut ln_binom = 0.0f64;
        let mut amps = Vec::with_capacity(d);
        for i in 0..d {
            if i > 0 {
                ln_binom += ((n_atoms - i + 1) as f64).ln() - (i as f64).ln();
            }
            let mag = (0.5 * ln_binom).exp()
                * c.abs().powi((n_atoms - i) as i32)
                * s.abs().powi(i as i32);
            let sign = c.signum().powi((n_atoms - i) as i32) * s.signum().powi(i as i32);
            amps.push(C64::from_polar(mag * sign, i as f64 * phi));
        }
        let data = CMatrix::from_fn(d, d, |a, b| amps[a] * amps[b].conj());
        Ok(Self { data })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        hermiticity_deviation(&self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.data + self.data.adjoint()).scale(0.5);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `½‖ρ - σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let diff = &self.data - &other.data;
        let herm = (&diff + diff.adjoint()).scale(0.5);
        Ok(0.5 * herm.symmetric_eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
    }

    /// Column-stacked vectorization.
    pub fn to_vec(&self) -> Vec<C64> {
        self.data.as_slice().to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn max_abs(m: &CMatrix) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn spin_half_matrices() {
        let ops = build_spin_operators(1).unwrap();
        assert_eq!(ops.dim, 2);
        assert_eq!(ops.s_plus, CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]));
        assert_eq!(ops.s_z, CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.0), c(0.0), c(-0.5)]));
    }

    #[test]
    fn spin_one_matrix_elements() {
        let ops = build_spin_operators(2).unwrap();
        let diag: Vec<f64> = (0..3).map(|i| ops.s_z[(i, i)].re).collect();
        assert_eq!(diag, vec![1.0, 0.0, -1.0]);
        // ⟨m=1|S+|m=0⟩
        assert_abs_diff_eq!(ops.s_plus[(0, 1)].re, 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn casimir_at_hundred_atoms() {
        let ops = build_spin_operators(100).unwrap();
        let cas = &ops.s_x * &ops.s_x + &ops.s_y * &ops.s_y + &ops.s_z * &ops.s_z;
        let target = CMatrix::identity(101, 101).scale(2550.0);
        assert!(max_abs(&(cas - target)) < 1e-9);
    }

    #[test]
    fn algebra_identities_up_to_64() {
        for n in 1..=64 {
            let ops = build_spin_operators(n).unwrap();
            let j = ops.j();
            let scale = j * (j + 1.0);
            assert_eq!(ops.s_minus, ops.s_plus.adjoint());
            let comm = &ops.s_plus * &ops.s_minus - &ops.s_minus * &ops.s_plus;
            assert!(max_abs(&(comm - ops.s_z.scale(2.0))) <= 1e-10 * scale, "commutator at N={n}");
            let cas = &ops.s_x * &ops.s_x + &ops.s_y * &ops.s_y + &ops.s_z * &ops.s_z;
            let id = CMatrix::identity(ops.dim, ops.dim).scale(scale);
            assert!(max_abs(&(cas - id)) <= 1e-10 * scale, "Casimir at N={n}");
            for r in 0..ops.dim {
                for col in 0..ops.dim {
                    if col != r + 1 {
                        assert_eq!(ops.s_plus[(r, col)], c(0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = build_spin_operators(37).unwrap();
        let b = build_spin_operators(37).unwrap();
        for (x, y) in a.s_y.iter().zip(b.s_y.iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn size_errors() {
        assert!(matches!(build_spin_operators(0), Err(Error::InvalidParams(_))));
        assert!(matches!(build_spin_operators(513), Err(Error::Size(_))));
        assert!(SpinOperators::with_cap(20, 10).is_err());
    }

    #[test]
    fn expectation_examples() {
        let ops = build_spin_operators(100).unwrap();
        let down = DensityMatrix::all_down(100).unwrap();
        let id = CMatrix::identity(101, 101);
        assert_abs_diff_eq!(expectation(&id, &down).unwrap().re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(expectation(&ops.s_z, &down).unwrap().re, -50.0, epsilon = 1e-12);
        let ops4 = build_spin_operators(4).unwrap();
        let mixed = DensityMatrix::maximally_mixed(5);
        assert_abs_diff_eq!(expectation(&ops4.s_x, &mixed).unwrap().norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            expectation(&ops4.s_x, &down),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn variance_examples() {
        let ops = build_spin_operators(2).unwrap();
        let down = DensityMatrix::all_down(2).unwrap();
        assert_abs_diff_eq!(variance(&ops.s_z, &down).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(variance(&ops.s_x, &down).unwrap(), 0.5, epsilon = 1e-14);
        let mixed = DensityMatrix::maximally_mixed(3);
        assert_abs_diff_eq!(variance(&ops.s_y, &mixed).unwrap(), 2.0 / 3.0, epsilon = 1e-14);
        assert!(matches!(variance(&ops.s_plus, &mixed), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix::new(CMatrix::identity(3, 3)).is_err());
        let mut m = DensityMatrix::maximally_mixed(2).into_matrix();
        m[(0, 1)] = C64::new(0.0, 0.1);
        assert!(DensityMatrix::new(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.0, -0.1);
        assert!(DensityMatrix::new(m).is_ok());
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(DensityMatrix::new(neg).is_err());
    }

    #[test]
    fn coherent_state_along_minus_z_is_all_down() {
        let cs = DensityMatrix::coherent(6, std::f64::consts::PI, 0.3).unwrap();
        let down = DensityMatrix::all_down(6).unwrap();
        assert!(cs.trace_distance(&down).unwrap() < 1e-12);
        let cx = DensityMatrix::coherent(10, std::f64::consts::FRAC_PI_2, 0.0).unwrap();
        let ops = build_spin_operators(10).unwrap();
        assert_abs_diff_eq!(expectation(&ops.s_x, &cx).unwrap().re, 5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cx.trace().re, 1.0, epsilon = 1e-12);
    }
}
