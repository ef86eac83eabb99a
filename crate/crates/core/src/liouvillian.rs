//! Master equation for driven collective spins in a broadband squeezed vacuum.
//!
//! ```text
//! dρ/dt = i[|Ω| e^{iψ} S+ + |Ω| e^{-iψ} S-, ρ]
//!       - Γ(1+n̄)(S+S-ρ - 2S-ρS+ + ρS+S-)
//!       - Γ n̄  (S-S+ρ - 2S+ρS- + ρS-S+)
//!       - Γ|m| e^{-iφ}(S+S+ρ - 2S+ρS+ + ρS+S+)
//!       - Γ|m| e^{+iφ}(S-S-ρ - 2S-ρS- + ρS-S-)
//! ```
//!
//! The generator is available both as an assembled sparse matrix acting on the
//! column-stacked `vec(ρ)` (with `vec(AXB) = (Bᵀ⊗A) vec(X)`) and as a
//! matrix-free stencil.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::CscMatrix;
use crate::spin::{check_size, ladder_coefficients, CMatrix, DensityMatrix, SpinOperators, C64, DEFAULT_MAX_ATOMS};

/// Physical parameters of one simulation instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub n_atoms: usize,
    /// Drive amplitude |Ω|.
    pub rabi: f64,
    /// Drive phase ψ.
    pub drive_phase: f64,
    /// Single-atom decay rate Γ.
    pub gamma: f64,
    /// Squeezed photon number n̄.
    pub n_bar: f64,
    /// Two-photon correlation amplitude |m|.
    pub m_abs: f64,
    /// Squeezing phase φ.
    pub squeeze_phase: f64,
}

pub const DEFAULT_DRIVE_PHASE: f64 = std::f64::consts::FRAC_PI_2;

/// `|m| = sqrt(n̄(n̄+1))`.
pub fn perfect_squeezing(n_bar: f64) -> f64 {
    (n_bar * (n_bar + 1.0)).sqrt()
}

impl ModelParams {
    /// Perfectly squeezed reservoir with ψ = π/2 and φ = 0.
    pub fn new(n_atoms: usize, rabi: f64, gamma: f64, n_bar: f64) -> Self {
        Self {
            n_atoms,
            rabi,
            drive_phase: DEFAULT_DRIVE_PHASE,
            gamma,
            n_bar,
            m_abs: perfect_squeezing(n_bar),
            squeeze_phase: 0.0,
        }
    }

    /// Reduced units with `NΓ/2 = 1`, so that `|Ω|` equals the drive ratio
    /// `2|Ω|/NΓ` and `Γ = 2/N`.
    pub fn reduced(n_atoms: usize, drive_ratio: f64, n_bar: f64) -> Self {
        Self::new(n_atoms, drive_ratio, 2.0 / n_atoms as f64, n_bar)
    }

    pub fn with_m_abs(mut self, m_abs: f64) -> Self {
        self.m_abs = m_abs;
        self
    }

    pub fn with_drive_phase(mut self, psi: f64) -> Self {
        self.drive_phase = psi;
        self
    }

    pub fn with_squeeze_phase(mut self, phi: f64) -> Self {
        self.squeeze_phase = phi;
        self
    }

    /// Collective rate `NΓ/2` used as the frequency unit for reported spectra.
    pub fn rate_unit(&self) -> f64 {
        self.n_atoms as f64 * self.gamma / 2.0
    }

    /// `2|Ω| / NΓ`.
    pub fn drive_ratio(&self) -> f64 {
        self.rabi / self.rate_unit()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_cap(DEFAULT_MAX_ATOMS)
    }

    pub fn validate_with_cap(&self, max_atoms: usize) -> Result<()> {
        check_size(self.n_atoms, max_atoms)?;
        let finite = [self.rabi, self.drive_phase, self.gamma, self.n_bar, self.m_abs, self.squeeze_phase]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.gamma <= 0.0 {
            return Err(Error::InvalidParams(format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.rabi < 0.0 || self.n_bar < 0.0 || self.m_abs < 0.0 {
            return Err(Error::InvalidParams("rabi, n_bar and m_abs must be nonnegative".into()));
        }
        if self.m_abs * self.m_abs > self.n_bar * (self.n_bar + 1.0) + 1e-12 {
            return Err(Error::InvalidParams(format!(
                "|m|^2 = {} exceeds n̄(n̄+1) = {}",
                self.m_abs * self.m_abs,
                self.n_bar * (self.n_bar + 1.0)
            )));
        }
        Ok(())
    }
}

/// Coefficients multiplying each group of terms in the generator.
#[derive(Debug, Clone, Copy)]
struct Couplings {
    /// `i|Ω|e^{iψ}`, multiplies `S+ρ`; `ρS+` gets the negative.
    drive_plus: C64,
    /// `i|Ω|e^{-iψ}`, multiplies `S-ρ`.
    drive_minus: C64,
    emission: f64,
    absorption: f64,
    /// Multiplies the `S+S+` group.
    anomalous_plus: C64,
    /// Multiplies the `S-S-` group.
    anomalous_minus: C64,
}

impl Couplings {
    fn new(p: &ModelParams) -> Self {
        let i = C64::new(0.0, 1.0);
        Self {
            drive_plus: i * C64::from_polar(p.rabi, p.drive_phase),
            drive_minus: i * C64::from_polar(p.rabi, -p.drive_phase),
            emission: -p.gamma * (1.0 + p.n_bar),
            absorption: -p.gamma * p.n_bar,
            anomalous_plus: C64::from_polar(-p.gamma * p.m_abs, -p.squeeze_phase),
            anomalous_minus: C64::from_polar(-p.gamma * p.m_abs, p.squeeze_phase),
        }
    }
}

/// Tag for the vectorization convention of a [`Superoperator`].
pub const VECTORIZATION: &str = "column-stacking: vec(AXB) = (B^T kron A) vec(X)";

/// Sparse Liouvillian acting on column-stacked density matrices.
#[derive(Debug, Clone)]
pub struct Superoperator {
    params: Option<ModelParams>,
    d: usize,
    unit: f64,
    matrix: CscMatrix,
}

impl Superoperator {
    /// Wraps an arbitrary `d² × d²` generator. `unit` is the frequency unit
    /// used to report eigenvalues.
    pub fn from_matrix(matrix: CscMatrix, unit: f64) -> Result<Self> {
        let dim = matrix.nrows();
        let d = (dim as f64).sqrt().round() as usize;
        if matrix.ncols() != dim || d * d != dim || d == 0 {
            return Err(Error::Size(format!(
                "superoperator must be d²×d², got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !(unit > 0.0) {
            return Err(Error::InvalidParams("frequency unit must be positive".into()));
        }
        Ok(Self { params: None, d, unit, matrix })
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    /// `D = d²`.
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    /// Hilbert-space dimension `d`.
    pub fn hilbert_dim(&self) -> usize {
        self.d
    }

    /// Frequency unit (`NΓ/2` for model-built operators).
    pub fn unit(&self) -> f64 {
        self.unit
    }

    pub fn matrix(&self) -> &CscMatrix {
        &self.matrix
    }

    pub fn vectorization(&self) -> &'static str {
        VECTORIZATION
    }

    /// `unvec(L · vec(ρ))`.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        if rho.nrows() != self.d || rho.ncols() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, found: rho.nrows() });
        }
        let out = self.matrix.mul_vec(rho.as_slice());
        Ok(CMatrix::from_vec(self.d, self.d, out))
    }

    /// `vec(I)ᴴ · L`, which vanishes for trace-preserving generators.
    pub fn trace_row(&self) -> Vec<C64> {
        let mut id = vec![C64::new(0.0, 0.0); self.dim()];
        for i in 0..self.d {
            id[i + self.d * i] = C64::new(1.0, 0.0);
        }
        self.matrix.left_mul_adjoint(&id)
    }
}

/// Nonzeros of a dense operator as `(row, col, value)`.
fn nonzeros(m: &CMatrix) -> Vec<(usize, usize, C64)> {
    let mut out = Vec::new();
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v != C64::new(0.0, 0.0) {
                out.push((r, c, v));
            }
        }
    }
    out
}

/// Accumulates `coeff · A X B` into the triplet list of the superoperator.
fn push_sandwich(
    triplets: &mut Vec<(usize, usize, C64)>,
    d: usize,
    coeff: C64,
    left: &[(usize, usize, C64)],
    right: &[(usize, usize, C64)],
) {
    // (A X B)_{ab} = Σ A_{a a'} X_{a' b'} B_{b' b}
    for &(a, a1, va) in left {
        for &(b1, b, vb) in right {
            triplets.push((a + d * b, a1 + d * b1, coeff * va * vb));
        }
    }
}

pub fn build_liouvillian(params: &ModelParams) -> Result<Superoperator> {
    build_liouvillian_with_cap(params, DEFAULT_MAX_ATOMS)
}

pub fn build_liouvillian_with_cap(params: &ModelParams, max_atoms: usize) -> Result<Superoperator> {
    params.validate_with_cap(max_atoms)?;
    let ops = SpinOperators::with_cap(params.n_atoms, max_atoms)?;
    let d = ops.dim;
    let k = Couplings::new(params);

    let id = nonzeros(&CMatrix::identity(d, d));
    let sp = nonzeros(&ops.s_plus);
    let sm = nonzeros(&ops.s_minus);
    let spsm = nonzeros(&(&ops.s_plus * &ops.s_minus));
    let smsp = nonzeros(&(&ops.s_minus * &ops.s_plus));
    let spsp = nonzeros(&(&ops.s_plus * &ops.s_plus));
    let smsm = nonzeros(&(&ops.s_minus * &ops.s_minus));

    let two = C64::new(2.0, 0.0);
    let mut t = Vec::with_capacity(24 * d * d);
    // coherent drive
    push_sandwich(&mut t, d, k.drive_plus, &sp, &id);
    push_sandwich(&mut t, d, k.drive_minus, &sm, &id);
    push_sandwich(&mut t, d, -k.drive_plus, &id, &sp);
    push_sandwich(&mut t, d, -k.drive_minus, &id, &sm);
    // the four dissipative groups share the pattern c(XXρ - 2XρY + ρXX)
    let groups: [(C64, &[_], &[_], &[_], &[_]); 4] = [
        (C64::new(k.emission, 0.0), &spsm, &sm, &sp, &spsm),
        (C64::new(k.absorption, 0.0), &smsp, &sp, &sm, &smsp),
        (k.anomalous_plus, &spsp, &sp, &sp, &spsp),
        (k.anomalous_minus, &smsm, &sm, &sm, &smsm),
    ];
    for (c, pair, left, right, pair_right) in groups {
        if c == C64::new(0.0, 0.0) {
            continue;
        }
        push_sandwich(&mut t, d, c, pair, &id);
        push_sandwich(&mut t, d, -two * c, left, right);
        push_sandwich(&mut t, d, c, &id, pair_right);
    }

    let matrix = CscMatrix::from_triplets(d * d, d * d, t);
    Ok(Superoperator { params: Some(*params), d, unit: params.rate_unit(), matrix })
}

/// Matrix-free evaluation of the generator on column-major `d×d` data.
#[derive(Debug, Clone)]
pub struct RhsKernel {
    d: usize,
    /// `s[i] = (S+)[i-1, i]`, padded with two trailing zeros.
    s: Vec<f64>,
    /// `(S+S-)[i, i]`.
    pm: Vec<f64>,
    /// `(S-S+)[i, i]`.
    mp: Vec<f64>,
    k: Couplings,
}

impl RhsKernel {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let d = params.n_atoms + 1;
        let mut s = ladder_coefficients(params.n_atoms);
        s.extend([0.0, 0.0]);
        let pm = (0..d).map(|i| s[i + 1] * s[i + 1]).collect();
        let mp = (0..d).map(|i| s[i] * s[i]).collect();
        Ok(Self { d, s, pm, mp, k: Couplings::new(params) })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `out = L(rho)`, both column-major `d×d` slices.
    pub fn apply_into(&self, rho: &[C64], out: &mut [C64]) {
        let d = self.d;
        assert_eq!(rho.len(), d * d);
        assert_eq!(out.len(), d * d);
        let s = &self.s;
        let k = &self.k;
        let at = |a: usize, b: usize| rho[a + d * b];
        let zero = C64::new(0.0, 0.0);
        for b in 0..d {
            for a in 0..d {
                let mut acc = zero;
                let x = at(a, b);

                // drive: i[H', ρ]
                if a + 1 < d {
                    acc += k.drive_plus * (s[a + 1] * at(a + 1, b));
                }
                if a >= 1 {
                    acc += k.drive_minus * (s[a] * at(a - 1, b));
                }
                if b >= 1 {
                    acc -= k.drive_plus * (s[b] * at(a, b - 1));
                }
                if b + 1 < d {
                    acc -= k.drive_minus * (s[b + 1] * at(a, b + 1));
                }

                // emission and absorption
                let mut diss = x * (k.emission * (self.pm[a] + self.pm[b]) + k.absorption * (self.mp[a] + self.mp[b]));
                if a >= 1 && b >= 1 {
                    diss -= at(a - 1, b - 1) * (2.0 * k.emission * s[a] * s[b]);
                }
                if a + 1 < d && b + 1 < d {
                    diss -= at(a + 1, b + 1) * (2.0 * k.absorption * s[a + 1] * s[b + 1]);
                }
                acc += diss;

                // S+S+ group: S+S+ρ - 2 S+ρS+ + ρS+S+
                let mut pp = zero;
                if a + 2 < d {
                    pp += at(a + 2, b) * (s[a + 1] * s[a + 2]);
                }
                if a + 1 < d && b >= 1 {
                    pp -= at(a + 1, b - 1) * (2.0 * s[a + 1] * s[b]);
                }
                if b >= 2 {
                    pp += at(a, b - 2) * (s[b - 1] * s[b]);
                }
                acc += k.anomalous_plus * pp;

                // S-S- group: S-S-ρ - 2 S-ρS- + ρS-S-
                let mut mm = zero;
                if a >= 2 {
                    mm += at(a - 2, b) * (s[a] * s[a - 1]);
                }
                if a >= 1 && b + 1 < d {
                    mm -= at(a - 1, b + 1) * (2.0 * s[a] * s[b + 1]);
                }
                if b + 2 < d {
                    mm += at(a, b + 2) * (s[b + 1] * s[b + 2]);
                }
                acc += k.anomalous_minus * mm;

                out[a + d * b] = acc;
            }
        }
    }
}

/// `dρ/dt` evaluated directly from operator products.
pub fn apply_rhs(params: &ModelParams, rho: &DensityMatrix) -> Result<CMatrix> {
    apply_rhs_matrix(params, rho.matrix())
}

/// Same as [`apply_rhs`] for an arbitrary (not necessarily physical) matrix.
pub fn apply_rhs_matrix(params: &ModelParams, rho: &CMatrix) -> Result<CMatrix> {
    let d = params.n_atoms + 1;
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.nrows() });
    }
    let kernel = RhsKernel::new(params)?;
    let mut out = CMatrix::zeros(d, d);
    kernel.apply_into(rho.as_slice(), out.as_mut_slice());
    Ok(out)
}
