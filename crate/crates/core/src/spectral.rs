//! Liouvillian eigenvalues, steady states and dissipative gaps.
//!
//! All reported eigenvalues are in units of the collective rate `NΓ/2`.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{largest_magnitude, KrylovOptions, LinearOperator};
use crate::liouvillian::Superoperator;
use crate::sparse::{BandLu, CscMatrix};
use crate::spin::{CMatrix, DensityMatrix};

pub const UNITS_TAG: &str = "N*Gamma/2";

/// Eigenvalues with `|λ|` below this (reduced units) are treated as zero.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-8;

/// Entries whose `|Re λ|` differ by less than this are ordered by `Im λ`.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    Dense,
    ShiftInvert,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectralConfig {
    /// Largest `D` handled by the dense eigensolver.
    pub dense_cap: usize,
    /// `|Im λ|` at or below this counts as real (reduced units).
    pub im_zero_tolerance: f64,
    /// Required `‖L v - λ v‖ / ‖v‖` for shift-invert eigenpairs (reduced units).
    pub residual_tol: f64,
    /// Krylov convergence threshold on the shift-inverted operator.
    pub krylov_tol: f64,
    pub max_restarts: usize,
    /// Krylov subspace size (default chosen from `k`).
    pub krylov_dim: Option<usize>,
    /// Offset applied to a shift that lands on an eigenvalue (reduced units).
    pub shift_perturbation: f64,
    /// Steady-state residual bound relative to `‖L‖∞`.
    pub steady_residual_tol: f64,
    /// Pivots below this multiple of `max |L_ij|` count as singular.
    pub singular_pivot_tol: f64,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            dense_cap: 4096,
            im_zero_tolerance: 1e-7,
            residual_tol: 1e-8,
            krylov_tol: 1e-12,
            max_restarts: 400,
            krylov_dim: None,
            shift_perturbation: 1e-3,
            steady_residual_tol: 1e-9,
            singular_pivot_tol: 1e-11,
        }
    }
}

/// Dissipative gaps. Fields are `None` when the retained spectrum holds no
/// eigenvalue of the required class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    /// `|Re λ|` of the slowest nonzero eigenvalue with nonzero imaginary part.
    pub delta_1: Option<f64>,
    /// `|Re λ|` of the slowest nonzero purely real eigenvalue.
    pub delta_2: Option<f64>,
    /// Smallest nonzero `|Im λ|`.
    pub delta_omega: Option<f64>,
    pub im_zero_tolerance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Sorted by ascending `|Re λ|`, ties broken by ascending `Im λ`.
    pub eigenvalues: Vec<C64>,
    pub units_tag: String,
    pub n_requested: usize,
    pub method: SpectrumMethod,
    /// Shift used by the iterative path (reduced units).
    pub shift: C64,
    pub gaps: GapSummary,
    /// `‖L v - λ v‖ / ‖v‖` per eigenvalue (shift-invert only).
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub residuals: Vec<f64>,
    /// Right eigenvectors aligned with `eigenvalues` (shift-invert only).
    #[serde(skip)]
    pub eigenvectors: Option<Vec<Vec<C64>>>,
}

/// Orders eigenvalues by `|Re λ|`, grouping near-equal real parts so that
/// conjugate pairs stay adjacent with the negative imaginary part first.
pub fn sort_spectrum(values: &mut [C64]) {
    sort_spectrum_with(values, |_| ());
}

fn sort_spectrum_with<F: FnMut(&[usize])>(values: &mut [C64], mut perm_out: F) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[a]
            .re
            .abs()
            .total_cmp(&values[b].re.abs())
            .then(values[a].im.total_cmp(&values[b].im))
    });
    let mut start = 0;
    while start < idx.len() {
        let head = values[idx[start]].re.abs();
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]].re.abs() - head <= TIE_TOL {
            end += 1;
        }
        idx[start..end].sort_by(|&a, &b| values[a].im.total_cmp(&values[b].im));
        start = end;
    }
    let sorted: Vec<C64> = idx.iter().map(|&i| values[i]).collect();
    values.copy_from_slice(&sorted);
    perm_out(&idx);
}

/// Applies the gap definitions to a list of eigenvalues (reduced units).
pub fn classify_eigenvalues(eigenvalues: &[C64], im_zero_tolerance: f64) -> GapSummary {
    let mut sorted = eigenvalues.to_vec();
    sort_spectrum(&mut sorted);
    let nonzero = sorted.iter().filter(|z| z.norm() > ZERO_EIGENVALUE_TOL);
    let mut delta_1 = None;
    let mut delta_2 = None;
    let mut delta_omega: Option<f64> = None;
    for z in nonzero {
        if z.im.abs() > im_zero_tolerance {
            delta_1.get_or_insert(z.re.abs());
            delta_omega = Some(delta_omega.map_or(z.im.abs(), |w| w.min(z.im.abs())));
        } else {
            delta_2.get_or_insert(z.re.abs());
        }
    }
    GapSummary { delta_1, delta_2, delta_omega, im_zero_tolerance }
}

pub fn classify_gaps(spectrum: &SpectrumResult, im_zero_tolerance: f64) -> GapSummary {
    classify_eigenvalues(&spectrum.eigenvalues, im_zero_tolerance)
}

pub fn full_spectrum(l: &Superoperator) -> Result<SpectrumResult> {
    full_spectrum_with(l, &SpectralConfig::default())
}

/// All `D` eigenvalues from a dense nonsymmetric eigendecomposition.
pub fn full_spectrum_with(l: &Superoperator, cfg: &SpectralConfig) -> Result<SpectrumResult> {
    let dim = l.dim();
    if dim > cfg.dense_cap {
        return Err(Error::DenseCapExceeded { dim, cap: cfg.dense_cap });
    }
    let scale = 1.0 / l.unit();
    let mut dense = faer::Mat::<faer::c64>::zeros(dim, dim);
    for (r, c, v) in l.matrix().iter() {
        dense[(r, c)] = faer::c64::new(v.re * scale, v.im * scale);
    }
    let ev = dense
        .eigenvalues()
        .map_err(|e| Error::NoConvergence(format!("dense eigendecomposition failed: {e:?}")))?;
    let mut eigenvalues: Vec<C64> = ev.iter().map(|z| C64::new(z.re, z.im)).collect();
    sort_spectrum(&mut eigenvalues);
    let gaps = classify_eigenvalues(&eigenvalues, cfg.im_zero_tolerance);
    Ok(SpectrumResult {
        eigenvalues,
        units_tag: UNITS_TAG.into(),
        n_requested: dim,
        method: SpectrumMethod::Dense,
        shift: C64::new(0.0, 0.0),
        gaps,
        residuals: Vec::new(),
        eigenvectors: None,
    })
}

struct ShiftInverted {
    a: CscMatrix,
    lu: BandLu,
}

impl LinearOperator for ShiftInverted {
    fn dim(&self) -> usize {
        self.lu.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        y.copy_from_slice(x);
        self.lu.solve_in_place(y)?;
        // one step of iterative refinement removes most of the pivot growth error
        let mut r = self.a.mul_vec(y);
        for (ri, xi) in r.iter_mut().zip(x) {
            *ri = xi - *ri;
        }
        self.lu.solve_in_place(&mut r)?;
        for (yi, ri) in y.iter_mut().zip(&r) {
            *yi += ri;
        }
        Ok(())
    }
}

/// Factors `L - σI`, moving σ off an eigenvalue if the factorization is singular.
fn factor_shifted(
    l: &Superoperator,
    shift: C64,
    cfg: &SpectralConfig,
) -> Result<(CscMatrix, BandLu, C64)> {
    let unit = l.unit();
    let scale = l.matrix().max_abs().max(unit);
    let mut sigma = shift;
    for attempt in 0..3 {
        let shifted = l.matrix().add_diagonal(-sigma * unit);
        let lu = BandLu::factor(&shifted)?;
        if lu.min_pivot() > cfg.singular_pivot_tol * scale {
            return Ok((shifted, lu, sigma));
        }
        sigma += C64::new(cfg.shift_perturbation * (attempt + 1) as f64, 0.0);
    }
    Err(Error::Factorization(format!(
        "L - σI stays singular after perturbing the shift {shift} three times"
    )))
}

fn residual_norm(l: &Superoperator, lambda_reduced: C64, v: &[C64]) -> f64 {
    let unit = l.unit();
    let lv = l.matrix().mul_vec(v);
    let r: f64 = lv
        .iter()
        .zip(v)
        .map(|(a, b)| (a / unit - lambda_reduced * b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    let nv: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    r / nv
}

pub fn low_lying_spectrum(l: &Superoperator, k: usize, shift: C64) -> Result<SpectrumResult> {
    low_lying_spectrum_with(l, k, shift, &SpectralConfig::default())
}

/// The `k` eigenvalues nearest `shift` (reduced units) by shift-invert
/// Krylov–Schur iteration on a banded LU of `L - σI`.
pub fn low_lying_spectrum_with(
    l: &Superoperator,
    k: usize,
    shift: C64,
    cfg: &SpectralConfig,
) -> Result<SpectrumResult> {
    let dim = l.dim();
    if k == 0 || k >= dim {
        return Err(Error::InvalidParams(format!("k = {k} must lie in 1..{dim}")));
    }
    let (a, lu, sigma) = factor_shifted(l, shift, cfg)?;
    let op = ShiftInverted { a, lu };
    let unit = l.unit();
    // a couple of extra pairs so the boundary can respect conjugation
    let nev = (k + 2).min(dim - 1);

    let mut krylov_tol = cfg.krylov_tol;
    let mut last_err = None;
    for _ in 0..3 {
        let opts = KrylovOptions {
            nev,
            ncv: cfg.krylov_dim,
            tol: krylov_tol,
            max_restarts: cfg.max_restarts,
            seed: 0x5eed,
        };
        let res = largest_magnitude(&op, &opts)?;
        let mut pairs: Vec<(C64, Vec<C64>, f64)> = res
            .values
            .iter()
            .zip(res.vectors)
            .map(|(theta, v)| {
                let lambda = sigma + theta.inv() / unit;
                let r = residual_norm(l, lambda, &v);
                (lambda, v, r)
            })
            .collect();
        let worst = pairs.iter().map(|p| p.2).fold(0.0, f64::max);
        if worst > cfg.residual_tol {
            last_err = Some(worst);
            krylov_tol *= 1e-2;
            continue;
        }

        pairs.sort_by(|a, b| (a.0 - shift).norm().total_cmp(&(b.0 - shift).norm()));
        let mut keep = k.min(pairs.len());
        if shift.im == 0.0 && keep < pairs.len() {
            // do not split a conjugate pair at the boundary
            let last = pairs[keep - 1].0;
            if last.im.abs() > cfg.im_zero_tolerance {
                let partner_inside = pairs[..keep - 1]
                    .iter()
                    .any(|p| (p.0 - last.conj()).norm() <= 1e-8 * last.norm().max(1.0));
                if !partner_inside {
                    let next = pairs[keep].0;
                    if (next - last.conj()).norm() <= 1e-6 * last.norm().max(1.0) {
                        keep += 1;
                    } else {
                        keep -= 1;
                    }
                }
            }
        }
        pairs.truncate(keep);

        let mut eigenvalues: Vec<C64> = pairs.iter().map(|p| p.0).collect();
        let mut order = Vec::new();
        sort_spectrum_with(&mut eigenvalues, |idx| order = idx.to_vec());
        let residuals = order.iter().map(|&i| pairs[i].2).collect();
        let vectors = order.iter().map(|&i| pairs[i].1.clone()).collect();
        let gaps = classify_eigenvalues(&eigenvalues, cfg.im_zero_tolerance);
        return Ok(SpectrumResult {
            eigenvalues,
            units_tag: UNITS_TAG.into(),
            n_requested: k,
            method: SpectrumMethod::ShiftInvert,
            shift: sigma,
            gaps,
            residuals,
            eigenvectors: Some(vectors),
        });
    }
    Err(Error::NoConvergence(format!(
        "shift-invert eigenpairs miss the residual bound {:e} (worst {:e})",
        cfg.residual_tol,
        last_err.unwrap_or(f64::NAN)
    )))
}

/// Oscillation frequency of the mean-field limit cycle, `2√(r² − 1)` in
/// `NΓ/2` units, for drive ratios `r > 1`.
pub fn mean_field_frequency(drive_ratio: f64) -> Option<f64> {
    (drive_ratio > 1.0).then(|| 2.0 * (drive_ratio * drive_ratio - 1.0).sqrt())
}

/// Shift-invert windows used by [`gap_spectrum`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GapSearch {
    /// Eigenvalues requested per window.
    pub k: usize,
    /// Windows are opened at `i·h·ω` for `h = 1..=harmonics` besides the origin.
    pub harmonics: usize,
    /// Fundamental frequency `ω` (`NΓ/2` units); mean-field estimate if absent.
    pub frequency: Option<f64>,
}

impl Default for GapSearch {
    fn default() -> Self {
        Self { k: 12, harmonics: 1, frequency: None }
    }
}

/// Low-lying eigenvalues for gap extraction.
///
/// Slow oscillating modes sit near `±iω, ±2iω, …` rather than near the
/// origin, so a window around 0 alone can miss them entirely. In the
/// oscillating phase further windows are opened at the harmonics of `ω` and
/// their eigenvalues are closed under conjugation.
pub fn gap_spectrum(l: &Superoperator, search: &GapSearch, cfg: &SpectralConfig) -> Result<SpectrumResult> {
    let mut base = low_lying_spectrum_with(l, search.k, C64::new(0.0, 0.0), cfg)?;
    let omega = search.frequency.or_else(|| {
        let p = l.params()?;
        mean_field_frequency(p.drive_ratio())
    });
    let omega = match omega {
        Some(w) if w > 0.0 && search.harmonics > 0 => w,
        _ => return Ok(base),
    };

    let mut values = std::mem::take(&mut base.eigenvalues);
    let mut residuals = std::mem::take(&mut base.residuals);
    let same = |a: C64, b: C64| (a - b).norm() <= 1e-8 * a.norm().max(1.0);
    for h in 1..=search.harmonics {
        let window = low_lying_spectrum_with(l, search.k, C64::new(0.0, h as f64 * omega), cfg)?;
        for (z, r) in window.eigenvalues.iter().zip(&window.residuals) {
            // L commutes with the adjoint map, so each partner λ* has the same residual
            let candidates = if z.im.abs() > cfg.im_zero_tolerance { vec![*z, z.conj()] } else { vec![*z] };
            for c in candidates {
                if !values.iter().any(|&w| same(w, c)) {
                    values.push(c);
                    residuals.push(*r);
                }
            }
        }
    }
    let mut order = Vec::new();
    sort_spectrum_with(&mut values, |idx| order = idx.to_vec());
    let residuals = order.iter().map(|&i| residuals[i]).collect();
    let gaps = classify_eigenvalues(&values, cfg.im_zero_tolerance);
    Ok(SpectrumResult {
        eigenvalues: values,
        units_tag: UNITS_TAG.into(),
        n_requested: search.k,
        method: SpectrumMethod::ShiftInvert,
        shift: base.shift,
        gaps,
        residuals,
        eigenvectors: None,
    })
}

pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    steady_state_with(l, &SpectralConfig::default())
}

/// Null vector of `L` from its banded LU, with the unknown at the singular
/// pivot pinned to one; rescaled to unit trace and Hermitized.
pub fn steady_state_with(l: &Superoperator, cfg: &SpectralConfig) -> Result<DensityMatrix> {
    let d = l.hilbert_dim();
    let lu = BandLu::factor(l.matrix())?;
    let scale = l.matrix().max_abs();
    let singular = lu.small_pivots(cfg.singular_pivot_tol * scale);
    let pin = match singular.as_slice() {
        [] => {
            // rank deficiency hidden by rounding: take the smallest pivot
            let piv = lu.pivots();
            (0..piv.len()).min_by(|&a, &b| piv[a].norm().total_cmp(&piv[b].norm())).unwrap()
        }
        [j] => *j,
        many => return Err(Error::DegenerateSteadyState(many.len())),
    };
    let x = lu.null_vector_pinned(pin);
    let mut rho = CMatrix::from_vec(d, d, x);
    let tr = rho.trace();
    if tr.norm() < 1e-300 || !tr.norm().is_finite() {
        return Err(Error::Numerical("null vector has vanishing trace".into()));
    }
    rho /= tr;
    let rho = (&rho + rho.adjoint()).scale(0.5);

    let residual = l
        .matrix()
        .mul_vec(rho.as_slice())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    let bound = cfg.steady_residual_tol * l.matrix().norm_inf();
    if residual > bound {
        return Err(Error::Numerical(format!(
            "steady-state residual {residual:e} exceeds {bound:e}"
        )));
    }
    DensityMatrix::new(rho)
}
