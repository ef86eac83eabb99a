//! C ABI over the `sqbtc` simulator.
//!
//! Objects are opaque heap handles released with the matching `*_free`
//! function. Every fallible call returns an [`SqbtcStatus`]; on failure the
//! message is available from [`sqbtc_last_error`] on the same thread.
//! Frequencies and rates are reported in units of `NΓ/2`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sqbtc::dynamics::{evolve, fourier_spectrum, TimeTrace, Window};
use sqbtc::liouvillian::{build_liouvillian, ModelParams};
use sqbtc::observables::{occupation_distribution, spin_wigner, transverse_variances, WignerMap};
use sqbtc::spectral::{full_spectrum, gap_spectrum, steady_state, GapSearch, SpectralConfig, SpectrumResult};
use sqbtc::spin::{expectation, DensityMatrix, SpinOperators};
use sqbtc::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SqbtcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    ResourceCap = 4,
    BufferTooSmall = 5,
    Io = 6,
    Panic = 7,
}

/// Dissipative gaps; absent values are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SqbtcGaps {
    pub delta_1: f64,
    pub delta_2: f64,
    pub delta_omega: f64,
}

/// Collective-spin observables of a state.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SqbtcObservables {
    pub sz_over_n: f64,
    pub sx_over_n: f64,
    pub sy_over_n: f64,
    pub var_sx: f64,
    pub var_sy: f64,
    pub participation_ratio: f64,
}

pub struct SqbtcModel {
    params: ModelParams,
}

pub struct SqbtcSpectrum {
    result: SpectrumResult,
}

pub struct SqbtcState {
    rho: DensityMatrix,
}

pub struct SqbtcTrace {
    trace: TimeTrace,
}

pub struct SqbtcWigner {
    map: WignerMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SqbtcStatus {
    if e.is_resource_cap() {
        SqbtcStatus::ResourceCap
    } else if matches!(e, Error::Io(_)) {
        SqbtcStatus::Io
    } else if matches!(
        e,
        Error::InvalidParams(_) | Error::Config(_) | Error::DimensionMismatch { .. } | Error::InvalidState(_)
    ) {
        SqbtcStatus::InvalidArgument
    } else {
        SqbtcStatus::Numerical
    }
}

/// Runs `f`, recording errors and panics as the thread's last error.
fn guard<F>(f: F) -> SqbtcStatus
where
    F: FnOnce() -> Result<(), (SqbtcStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SqbtcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SqbtcStatus::Panic
        }
    }
}

fn lift<T>(r: sqbtc::Result<T>) -> Result<T, (SqbtcStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (SqbtcStatus, String) {
    (SqbtcStatus::NullPointer, format!("{name} is null"))
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (SqbtcStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), (SqbtcStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize) -> Result<(), (SqbtcStatus, String)> {
    if dst.is_null() {
        return Err(null("buffer"));
    }
    if len < src.len() {
        return Err((SqbtcStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

fn nan_if_none(x: Option<f64>) -> f64 {
    x.unwrap_or(f64::NAN)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sqbtc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn sqbtc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Model with explicit rates. `m_abs < 0` selects perfect squeezing.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn sqbtc_model_new(
    n_atoms: usize,
    rabi: f64,
    drive_phase: f64,
    gamma: f64,
    n_bar: f64,
    m_abs: f64,
    squeeze_phase: f64,
    out: *mut *mut SqbtcModel,
) -> SqbtcStatus {
    guard(|| {
        let mut params = ModelParams::new(n_atoms, rabi, gamma, n_bar)
            .with_drive_phase(drive_phase)
            .with_squeeze_phase(squeeze_phase);
        if m_abs >= 0.0 {
            params = params.with_m_abs(m_abs);
        }
        lift(params.validate())?;
        put(out, SqbtcModel { params })
    })
}

/// Model in reduced units (`NΓ/2 = 1`, ψ = π/2, φ = 0, perfect squeezing).
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_model_new_reduced(
    n_atoms: usize,
    drive_ratio: f64,
    n_bar: f64,
    out: *mut *mut SqbtcModel,
) -> SqbtcStatus {
    guard(|| {
        let params = ModelParams::reduced(n_atoms, drive_ratio, n_bar);
        lift(params.validate())?;
        put(out, SqbtcModel { params })
    })
}

/// # Safety
/// `model` must be null or a handle from `sqbtc_model_new*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_model_free(model: *mut SqbtcModel) {
    free(model)
}

/// Full Liouvillian spectrum (dense; small systems only).
///
/// # Safety
/// `model` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_spectrum_dense(model: *const SqbtcModel, out: *mut *mut SqbtcSpectrum) -> SqbtcStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let l = lift(build_liouvillian(&m.params))?;
        let result = lift(full_spectrum(&l))?;
        put(out, SqbtcSpectrum { result })
    })
}

/// Slowest `k` eigenvalues near the origin plus the first `harmonics`
/// oscillation bands, from shift-invert iteration.
///
/// # Safety
/// `model` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_spectrum_low_lying(
    model: *const SqbtcModel,
    k: usize,
    harmonics: usize,
    out: *mut *mut SqbtcSpectrum,
) -> SqbtcStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let l = lift(build_liouvillian(&m.params))?;
        let search = GapSearch { k, harmonics, frequency: None };
        let result = lift(gap_spectrum(&l, &search, &SpectralConfig::default()))?;
        put(out, SqbtcSpectrum { result })
    })
}

/// # Safety
/// `spectrum` must be a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_spectrum_len(spectrum: *const SqbtcSpectrum) -> usize {
    spectrum.as_ref().map_or(0, |s| s.result.eigenvalues.len())
}

/// Eigenvalue `index` in spectrum order (ascending `|Re λ|`).
///
/// # Safety
/// `spectrum` must be a live spectrum handle; `re` and `im` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_spectrum_get(
    spectrum: *const SqbtcSpectrum,
    index: usize,
    re: *mut f64,
    im: *mut f64,
) -> SqbtcStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        if re.is_null() || im.is_null() {
            return Err(null("re/im"));
        }
        let z = s.result.eigenvalues.get(index).ok_or_else(|| {
            (SqbtcStatus::InvalidArgument, format!("index {index} out of range {}", s.result.eigenvalues.len()))
        })?;
        *re = z.re;
        *im = z.im;
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be a live spectrum handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_spectrum_gaps(spectrum: *const SqbtcSpectrum, out: *mut SqbtcGaps) -> SqbtcStatus {
    guard(|| {
        let s = deref(spectrum, "spectrum")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let g = s.result.gaps;
        *out = SqbtcGaps {
            delta_1: nan_if_none(g.delta_1),
            delta_2: nan_if_none(g.delta_2),
            delta_omega: nan_if_none(g.delta_omega),
        };
        Ok(())
    })
}

/// # Safety
/// `spectrum` must be null or a live spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_spectrum_free(spectrum: *mut SqbtcSpectrum) {
    free(spectrum)
}

/// Unique steady state of the model.
///
/// # Safety
/// `model` must be a live model handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_steady_state(model: *const SqbtcModel, out: *mut *mut SqbtcState) -> SqbtcStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let l = lift(build_liouvillian(&m.params))?;
        let rho = lift(steady_state(&l))?;
        put(out, SqbtcState { rho })
    })
}

/// All atoms in the ground state.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_state_all_down(n_atoms: usize, out: *mut *mut SqbtcState) -> SqbtcStatus {
    guard(|| {
        let rho = lift(DensityMatrix::all_down(n_atoms))?;
        put(out, SqbtcState { rho })
    })
}

/// Spin coherent state along `(θ, φ)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_state_coherent(
    n_atoms: usize,
    theta: f64,
    phi: f64,
    out: *mut *mut SqbtcState,
) -> SqbtcStatus {
    guard(|| {
        let rho = lift(DensityMatrix::coherent(n_atoms, theta, phi))?;
        put(out, SqbtcState { rho })
    })
}

/// Hilbert-space dimension `N + 1`, or 0 for a null handle.
///
/// # Safety
/// `state` must be null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_state_dim(state: *const SqbtcState) -> usize {
    state.as_ref().map_or(0, |s| s.rho.dim())
}

/// # Safety
/// `state` must be a live state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_state_observables(state: *const SqbtcState, out: *mut SqbtcObservables) -> SqbtcStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let n = s.rho.dim() - 1;
        let ops = lift(SpinOperators::new(n))?;
        let nf = n as f64;
        let (vx, vy) = lift(transverse_variances(&s.rho, &ops))?;
        *out = SqbtcObservables {
            sz_over_n: lift(expectation(&ops.s_z, &s.rho))?.re / nf,
            sx_over_n: lift(expectation(&ops.s_x, &s.rho))?.re / nf,
            sy_over_n: lift(expectation(&ops.s_y, &s.rho))?.re / nf,
            var_sx: vx,
            var_sy: vy,
            participation_ratio: occupation_distribution(&s.rho).participation_ratio(),
        };
        Ok(())
    })
}

/// Dicke-level populations `p_m` from `m = +j` down to `-j` into `buf`.
///
/// # Safety
/// `state` must be a live state handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_state_occupations(state: *const SqbtcState, buf: *mut f64, len: usize) -> SqbtcStatus {
    guard(|| {
        let s = deref(state, "state")?;
        copy_out(&occupation_distribution(&s.rho).probabilities, buf, len)
    })
}

/// # Safety
/// `state` must be null or a live state handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_state_free(state: *mut SqbtcState) {
    free(state)
}

/// Integrates from `initial` to `t_final` (in `(NΓ/2)t`), sampling every `sample_dt`.
///
/// # Safety
/// `model` and `initial` must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_evolve(
    model: *const SqbtcModel,
    initial: *const SqbtcState,
    t_final: f64,
    sample_dt: f64,
    rtol: f64,
    atol: f64,
    out: *mut *mut SqbtcTrace,
) -> SqbtcStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let s = deref(initial, "initial")?;
        let trace = lift(evolve(&m.params, &s.rho, t_final, sample_dt, rtol, atol))?;
        put(out, SqbtcTrace { trace })
    })
}

/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_trace_len(trace: *const SqbtcTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.len())
}

/// Copies the sample times and `⟨Sz⟩/N`, `⟨Sx⟩/N`, `⟨Sy⟩/N`; any output
/// pointer may be null to skip that column.
///
/// # Safety
/// `trace` must be a live trace handle; non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_trace_copy(
    trace: *const SqbtcTrace,
    times: *mut f64,
    sz_over_n: *mut f64,
    sx_over_n: *mut f64,
    sy_over_n: *mut f64,
    len: usize,
) -> SqbtcStatus {
    guard(|| {
        let t = &deref(trace, "trace")?.trace;
        for (src, dst) in [(&t.times, times), (&t.sz_over_n, sz_over_n), (&t.sx_over_n, sx_over_n), (&t.sy_over_n, sy_over_n)] {
            if !dst.is_null() {
                copy_out(src, dst, len)?;
            }
        }
        Ok(())
    })
}

/// Strongest Fourier peak of `⟨Sz⟩/N` after `transient_cut` (Hann window).
///
/// # Safety
/// `trace` must be a live trace handle and `frequency` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_trace_dominant_frequency(
    trace: *const SqbtcTrace,
    transient_cut: f64,
    frequency: *mut f64,
) -> SqbtcStatus {
    guard(|| {
        let t = deref(trace, "trace")?;
        let out = frequency.as_mut().ok_or_else(|| null("frequency"))?;
        let peaks = lift(fourier_spectrum(&t.trace, transient_cut, Window::Hann))?;
        let (f, _) = peaks
            .dominant()
            .ok_or_else(|| (SqbtcStatus::Numerical, "no spectral peak found".to_string()))?;
        *out = f;
        Ok(())
    })
}

/// # Safety
/// `trace` must be null or a live trace handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_trace_free(trace: *mut SqbtcTrace) {
    free(trace)
}

/// Spin Wigner function on `n_theta × n_phi` points.
///
/// # Safety
/// `state` must be a live state handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_wigner(
    state: *const SqbtcState,
    n_theta: usize,
    n_phi: usize,
    out: *mut *mut SqbtcWigner,
) -> SqbtcStatus {
    guard(|| {
        let s = deref(state, "state")?;
        let map = lift(spin_wigner(&s.rho, n_theta, n_phi))?;
        put(out, SqbtcWigner { map })
    })
}

/// Grid values row-major over θ (`n_theta * n_phi` doubles).
///
/// # Safety
/// `wigner` must be a live handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_wigner_values(wigner: *const SqbtcWigner, buf: *mut f64, len: usize) -> SqbtcStatus {
    guard(|| copy_out(&deref(wigner, "wigner")?.map.values, buf, len))
}

/// Integral of the map over the sphere (1 for a normalized state).
///
/// # Safety
/// `wigner` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_wigner_integral(wigner: *const SqbtcWigner) -> f64 {
    wigner.as_ref().map_or(f64::NAN, |w| w.map.integral())
}

/// # Safety
/// `wigner` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sqbtc_wigner_free(wigner: *mut SqbtcWigner) {
    free(wigner)
}
