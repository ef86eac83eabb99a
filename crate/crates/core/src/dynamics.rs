//! Time evolution of the master equation and Fourier analysis of the traces.
//!
//! Times are measured in `2/(NΓ)`, i.e. the integration variable is
//! `τ = (NΓ/2) t`, and frequencies are angular in `NΓ/2` units.

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{ModelParams, RhsKernel};
use crate::spin::{ladder_coefficients, CMatrix, DensityMatrix};

/// Positivity slack allowed for integrated states.
pub const EVOLVED_POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveOptions {
    pub t_final: f64,
    pub sample_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    /// Accepted steps between projections onto Hermitian matrices.
    pub rehermitize_every: usize,
    pub max_steps: usize,
    pub record_variances: bool,
    /// Times at which full states are stored.
    pub checkpoints: Vec<f64>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            t_final: 150.0,
            sample_dt: 0.01,
            rtol: 1e-8,
            atol: 1e-10,
            rehermitize_every: 100,
            max_steps: 20_000_000,
            record_variances: false,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    /// Largest `|Tr ρ - 1|` seen at a sample point.
    pub max_trace_error: f64,
    /// Largest `max |ρ - ρᴴ|` found just before a re-Hermitization.
    pub max_hermiticity_drift: f64,
}

#[derive(Debug, Clone)]
pub struct TimeTrace {
    pub n_atoms: usize,
    pub times: Vec<f64>,
    pub sz_over_n: Vec<f64>,
    pub sx_over_n: Vec<f64>,
    pub sy_over_n: Vec<f64>,
    /// `(ΔSx², ΔSy²)` per sample when requested.
    pub variances: Option<Vec<(f64, f64)>>,
    pub checkpoints: Vec<(f64, DensityMatrix)>,
    pub final_state: DensityMatrix,
    pub stats: IntegrationStats,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Collective-spin moments evaluated from the band of `ρ` around the diagonal.
#[derive(Debug, Clone)]
pub(crate) struct MomentKernel {
    d: usize,
    n: f64,
    m: Vec<f64>,
    /// `s[i] = (S+)[i-1, i]` padded with two trailing zeros.
    s: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Moments {
    pub sz: f64,
    pub sx: f64,
    pub sy: f64,
    pub var_x: f64,
    pub var_y: f64,
}

impl MomentKernel {
    pub(crate) fn new(n_atoms: usize) -> Self {
        let d = n_atoms + 1;
        let j = n_atoms as f64 / 2.0;
        let mut s = ladder_coefficients(n_atoms);
        s.extend([0.0, 0.0]);
        Self { d, n: n_atoms as f64, m: (0..d).map(|i| j - i as f64).collect(), s }
    }

    /// Moments of a column-major `d×d` state, not normalized by `N`.
    pub(crate) fn moments(&self, rho: &[C64]) -> Moments {
        let d = self.d;
        let s = &self.s;
        let mut sz = 0.0;
        let mut plus = C64::new(0.0, 0.0);
        let mut plus2 = C64::new(0.0, 0.0);
        let mut pm = 0.0;
        let mut mp = 0.0;
        for a in 0..d {
            let p = rho[a + d * a].re;
            sz += self.m[a] * p;
            pm += s[a + 1] * s[a + 1] * p;
            mp += s[a] * s[a] * p;
            if a + 1 < d {
                plus += rho[a + 1 + d * a] * s[a + 1];
            }
            if a + 2 < d {
                plus2 += rho[a + 2 + d * a] * (s[a + 1] * s[a + 2]);
            }
        }
        let sx = plus.re;
        let sy = plus.im;
        // Sx² = (S+² + S-² + S+S- + S-S+)/4, Sy² = (S+S- + S-S+ - S+² - S-²)/4
        let sx2 = (2.0 * plus2.re + pm + mp) / 4.0;
        let sy2 = (pm + mp - 2.0 * plus2.re) / 4.0;
        Moments { sz, sx, sy, var_x: sx2 - sx * sx, var_y: sy2 - sy * sy }
    }

    pub(crate) fn n(&self) -> f64 {
        self.n
    }
}

// Dormand–Prince 5(4) tableau; the generator is autonomous so the nodes c_i are not needed
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Adaptive Dormand–Prince integrator for `y' = f(y)` on complex vectors.
struct Dopri5<F: Fn(&[C64], &mut [C64])> {
    f: F,
    rtol: f64,
    atol: f64,
    k: [Vec<C64>; 7],
    y_stage: Vec<C64>,
    y_new: Vec<C64>,
    /// Dense-output coefficients of the last accepted step.
    cont: [Vec<C64>; 5],
    evals: usize,
}

impl<F: Fn(&[C64], &mut [C64])> Dopri5<F> {
    fn new(f: F, n: usize, rtol: f64, atol: f64) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            f,
            rtol,
            atol,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_new: z(),
            cont: [z(), z(), z(), z(), z()],
            evals: 0,
        }
    }

    fn eval(&mut self, stage: usize, from_stage: bool, y: &[C64]) {
        let src = if from_stage { &self.y_stage } else { y };
        (self.f)(src, &mut self.k[stage]);
        self.evals += 1;
    }

    fn weighted_rms(&self, a: &[C64], b: &[C64], reference: &[C64]) -> f64 {
        let sum: f64 = a
            .iter()
            .zip(reference)
            .zip(b)
            .map(|((x, r), y)| {
                let sc = self.atol + self.rtol * r.norm().max(y.norm());
                (x.norm() / sc).powi(2)
            })
            .sum();
        (sum / a.len() as f64).sqrt()
    }

    /// Initial step size from the local scale of the solution.
    fn initial_step(&mut self, y: &[C64], h_max: f64) -> f64 {
        self.eval(0, false, y);
        let zero = vec![C64::new(0.0, 0.0); y.len()];
        let d0 = self.weighted_rms(y, &zero, y);
        let d1 = self.weighted_rms(&self.k[0], &zero, y);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(h_max);
        for (s, (yi, ki)) in self.y_stage.iter_mut().zip(y.iter().zip(&self.k[0])) {
            *s = yi + ki * h0;
        }
        self.eval(1, true, y);
        let diff: Vec<C64> = self.k[1].iter().zip(&self.k[0]).map(|(a, b)| a - b).collect();
        let d2 = self.weighted_rms(&diff, &zero, y) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(h_max)
    }

    /// Attempts one step from `y` (with `k[0] = f(y)`); returns the error norm.
    fn attempt(&mut self, y: &[C64], h: f64) -> f64 {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $($c:expr => $kk:expr),+) => {{
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    $( acc += self.k[$kk][i] * $c; )+
                    self.y_stage[i] = y[i] + acc * h;
                }
                self.eval($dst, true, y);
            }};
        }
        stage!(1, A21 => 0);
        stage!(2, A31 => 0, A32 => 1);
        stage!(3, A41 => 0, A42 => 1, A43 => 2);
        stage!(4, A51 => 0, A52 => 1, A53 => 2, A54 => 3);
        stage!(5, A61 => 0, A62 => 1, A63 => 2, A64 => 3, A65 => 4);
        for i in 0..n {
            let acc = self.k[0][i] * A71
                + self.k[2][i] * A73
                + self.k[3][i] * A74
                + self.k[4][i] * A75
                + self.k[5][i] * A76;
            self.y_new[i] = y[i] + acc * h;
        }
        (self.f)(&self.y_new, &mut self.k[6]);
        self.evals += 1;

        let mut sum = 0.0;
        for i in 0..n {
            let e = (self.k[0][i] * E1
                + self.k[2][i] * E3
                + self.k[3][i] * E4
                + self.k[4][i] * E5
                + self.k[5][i] * E6
                + self.k[6][i] * E7)
                * h;
            let sc = self.atol + self.rtol * y[i].norm().max(self.y_new[i].norm());
            sum += (e.norm() / sc).powi(2);
        }
        (sum / n as f64).sqrt()
    }

    /// Stores the interpolant of the step just attempted from `y`.
    fn prepare_dense(&mut self, y: &[C64], h: f64) {
        for i in 0..y.len() {
            let dy = self.y_new[i] - y[i];
            let bspl = self.k[0][i] * h - dy;
            self.cont[0][i] = y[i];
            self.cont[1][i] = dy;
            self.cont[2][i] = bspl;
            self.cont[3][i] = dy - self.k[6][i] * h - bspl;
            self.cont[4][i] = (self.k[0][i] * D1
                + self.k[2][i] * D3
                + self.k[3][i] * D4
                + self.k[4][i] * D5
                + self.k[5][i] * D6
                + self.k[6][i] * D7)
                * h;
        }
    }

    fn dense(&self, theta: f64, out: &mut [C64]) {
        let theta1 = 1.0 - theta;
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.cont[0][i]
                + (self.cont[1][i]
                    + (self.cont[2][i] + (self.cont[3][i] + self.cont[4][i] * theta1) * theta) * theta1)
                    * theta;
        }
    }
}

fn hermitize_in_place(y: &mut [C64], d: usize) -> f64 {
    let mut drift = 0.0f64;
    for b in 0..d {
        for a in b..d {
            let x = y[a + d * b];
            let z = y[b + d * a];
            drift = drift.max((x - z.conj()).norm());
            let avg = (x + z.conj()) * 0.5;
            y[a + d * b] = avg;
            y[b + d * a] = avg.conj();
        }
    }
    drift
}

pub fn evolve(
    params: &ModelParams,
    rho0: &DensityMatrix,
    t_final: f64,
    sample_dt: f64,
    rtol: f64,
    atol: f64,
) -> Result<TimeTrace> {
    let opts = EvolveOptions { t_final, sample_dt, rtol, atol, ..Default::default() };
    evolve_with(params, rho0, &opts)
}

/// Integrates `dρ/dτ = (2/NΓ) 𝓛ρ` from `τ = 0` and samples the collective
/// spin on the grid `τ_k = k·sample_dt`.
pub fn evolve_with(params: &ModelParams, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<TimeTrace> {
    params.validate()?;
    let d = params.n_atoms + 1;
    if rho0.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho0.dim() });
    }
    DensityMatrix::new(rho0.matrix().clone())?;
    if !(opts.t_final > 0.0 && opts.t_final.is_finite()) {
        return Err(Error::InvalidParams(format!("t_final = {} must be positive", opts.t_final)));
    }
    if !(opts.sample_dt > 0.0 && opts.sample_dt <= opts.t_final) {
        return Err(Error::InvalidParams(format!(
            "sample_dt = {} must lie in (0, t_final]",
            opts.sample_dt
        )));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(Error::InvalidParams("tolerances must be positive".into()));
    }

    // L is linear in (Ω, Γ): dividing both by NΓ/2 gives the reduced generator
    let unit = params.rate_unit();
    let mut scaled = params.clone();
    scaled.rabi /= unit;
    scaled.gamma /= unit;
    let kernel = RhsKernel::new(&scaled)?;
    let moments = MomentKernel::new(params.n_atoms);
    let n = moments.n();

    let n_samples = (opts.t_final / opts.sample_dt + 1e-9).floor() as usize + 1;
    let mut trace = TimeTrace {
        n_atoms: params.n_atoms,
        times: Vec::with_capacity(n_samples),
        sz_over_n: Vec::with_capacity(n_samples),
        sx_over_n: Vec::with_capacity(n_samples),
        sy_over_n: Vec::with_capacity(n_samples),
        variances: opts.record_variances.then(|| Vec::with_capacity(n_samples)),
        checkpoints: Vec::new(),
        final_state: rho0.clone(),
        stats: IntegrationStats::default(),
    };
    let record = |trace: &mut TimeTrace, t: f64, y: &[C64]| {
        let m = moments.moments(y);
        trace.times.push(t);
        trace.sz_over_n.push(m.sz / n);
        trace.sx_over_n.push(m.sx / n);
        trace.sy_over_n.push(m.sy / n);
        if let Some(v) = trace.variances.as_mut() {
            v.push((m.var_x, m.var_y));
        }
        let tr: C64 = (0..d).map(|a| y[a + d * a]).sum();
        trace.stats.max_trace_error = trace.stats.max_trace_error.max((tr - 1.0).norm());
    };
    let mut checkpoints: Vec<f64> = opts.checkpoints.iter().copied().filter(|t| *t >= 0.0 && *t <= opts.t_final).collect();
    checkpoints.sort_by(f64::total_cmp);
    let mut next_checkpoint = 0;
    let to_state = |y: &[C64]| -> Result<DensityMatrix> {
        DensityMatrix::with_positivity_tolerance(CMatrix::from_column_slice(d, d, y), EVOLVED_POSITIVITY_TOL)
    };

    let mut y = rho0.to_vec();
    let mut rk = Dopri5::new(|x: &[C64], out: &mut [C64]| kernel.apply_into(x, out), d * d, opts.rtol, opts.atol);
    let h_max = opts.t_final;
    let mut h = rk.initial_step(&y, h_max);
    rk.eval(0, false, &y);

    record(&mut trace, 0.0, &y);
    let mut next_sample = 1usize;
    while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] <= 0.0 {
        trace.checkpoints.push((0.0, to_state(&y)?));
        next_checkpoint += 1;
    }

    let mut t = 0.0f64;
    let mut buf = vec![C64::new(0.0, 0.0); d * d];
    let mut since_projection = 0usize;
    let mut last_rejected = false;
    while t < opts.t_final {
        if trace.stats.accepted_steps + trace.stats.rejected_steps >= opts.max_steps {
            return Err(Error::Numerical(format!("step budget of {} exhausted at t = {t}", opts.max_steps)));
        }
        if h < 1e-13 * t.abs().max(1.0) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let h_step = h.min(opts.t_final - t);
        let err = rk.attempt(&y, h_step);
        if !err.is_finite() || err > 1.0 {
            trace.stats.rejected_steps += 1;
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).max(0.2) } else { 0.1 };
            h = h_step * fac;
            last_rejected = true;
            continue;
        }
        trace.stats.accepted_steps += 1;
        let t_new = if h_step == opts.t_final - t { opts.t_final } else { t + h_step };

        let needs_dense = (next_sample < n_samples && (next_sample as f64) * opts.sample_dt <= t_new + 1e-12)
            || (next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] <= t_new);
        if needs_dense {
            rk.prepare_dense(&y, h_step);
            while next_sample < n_samples {
                let ts = next_sample as f64 * opts.sample_dt;
                if ts > t_new + 1e-12 {
                    break;
                }
                let theta = ((ts - t) / h_step).clamp(0.0, 1.0);
                rk.dense(theta, &mut buf);
                record(&mut trace, ts, &buf);
                next_sample += 1;
            }
            while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] <= t_new {
                let tc = checkpoints[next_checkpoint];
                rk.dense(((tc - t) / h_step).clamp(0.0, 1.0), &mut buf);
                trace.checkpoints.push((tc, to_state(&buf)?));
                next_checkpoint += 1;
            }
        }

        std::mem::swap(&mut y, &mut rk.y_new);
        t = t_new;
        since_projection += 1;
        if since_projection >= opts.rehermitize_every {
            let drift = hermitize_in_place(&mut y, d);
            trace.stats.max_hermiticity_drift = trace.stats.max_hermiticity_drift.max(drift);
            since_projection = 0;
            rk.eval(0, false, &y);
        } else {
            rk.k.swap(0, 6);
        }

        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
        h = if last_rejected { h_step * fac.min(1.0) } else { h_step * fac };
        last_rejected = false;
    }
    trace.stats.rhs_evaluations = rk.evals;

    if trace.stats.max_trace_error > 1e-7 {
        return Err(Error::Numerical(format!(
            "trace drifted by {:e} during integration",
            trace.stats.max_trace_error
        )));
    }
    let drift = hermitize_in_place(&mut y, d);
    trace.stats.max_hermiticity_drift = trace.stats.max_hermiticity_drift.max(drift);
    if trace.stats.max_hermiticity_drift > 1e-8 {
        return Err(Error::Numerical(format!(
            "hermiticity drifted by {:e} between projections",
            trace.stats.max_hermiticity_drift
        )));
    }
    trace.final_state = to_state(&y)?;
    Ok(trace)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rectangular,
    Hann,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FourierOptions {
    pub transient_cut: f64,
    pub window: Window,
    /// Transform length as a multiple of the retained sample count.
    pub zero_pad: usize,
    pub min_samples: usize,
}

impl Default for FourierOptions {
    fn default() -> Self {
        Self { transient_cut: 30.0, window: Window::Hann, zero_pad: 4, min_samples: 256 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FourierPeaks {
    /// Angular frequencies of the transform bins, `NΓ/2` units.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    /// Interpolated local maxima `(frequency, amplitude)`, strongest first.
    pub peak_list: Vec<(f64, f64)>,
    /// `2π / (n·dt)` for the `n` retained samples.
    pub resolution: f64,
    pub nyquist: f64,
    pub options: FourierOptions,
}

impl FourierPeaks {
    pub fn dominant(&self) -> Option<(f64, f64)> {
        self.peak_list.first().copied()
    }
}

pub fn fourier_spectrum(trace: &TimeTrace, transient_cut: f64, window: Window) -> Result<FourierPeaks> {
    let opts = FourierOptions { transient_cut, window, ..Default::default() };
    fourier_series(&trace.times, &trace.sz_over_n, &opts)
}

/// Single-sided amplitude spectrum of a uniformly sampled real signal with its
/// mean removed.
pub fn fourier_series(times: &[f64], values: &[f64], opts: &FourierOptions) -> Result<FourierPeaks> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    let start = times.iter().position(|&t| t >= opts.transient_cut - 1e-12).unwrap_or(times.len());
    let t = &times[start..];
    let x = &values[start..];
    if t.len() < opts.min_samples.max(2) {
        return Err(Error::TooShort(format!(
            "{} samples after the transient cut, need {}",
            t.len(),
            opts.min_samples
        )));
    }
    let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    if !(dt > 0.0) || t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-6 * dt) {
        return Err(Error::NonUniformSampling);
    }

    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let w: Vec<f64> = match opts.window {
        Window::Rectangular => vec![1.0; n],
        Window::Hann => (0..n)
            .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())
            .collect(),
    };
    let w_sum: f64 = w.iter().sum();
    let len = n * opts.zero_pad.max(1);
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); len];
    for i in 0..n {
        buf[i] = C64::new((x[i] - mean) * w[i], 0.0);
    }
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let bins = len / 2 + 1;
    let dw = 2.0 * std::f64::consts::PI / (len as f64 * dt);
    let frequencies: Vec<f64> = (0..bins).map(|k| k as f64 * dw).collect();
    let amplitudes: Vec<f64> = buf[..bins].iter().map(|z| 2.0 * z.norm() / w_sum).collect();

    let mut peak_list = Vec::new();
    for k in 1..bins.saturating_sub(1) {
        let (a, b, c) = (amplitudes[k - 1], amplitudes[k], amplitudes[k + 1]);
        if b > a && b >= c {
            let denom = a - 2.0 * b + c;
            let delta = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
            let height = b - 0.25 * (a - c) * delta;
            peak_list.push(((k as f64 + delta) * dw, height));
        }
    }
    peak_list.sort_by(|p, q| q.1.total_cmp(&p.1));
    Ok(FourierPeaks {
        frequencies,
        amplitudes,
        peak_list,
        resolution: 2.0 * std::f64::consts::PI / (n as f64 * dt),
        nyquist: std::f64::consts::PI / dt,
        options: opts.clone(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvelopeFit {
    /// Exponential decay rate of the oscillation amplitude.
    pub rate: f64,
    pub decay_time: f64,
    /// Number of half-cycle amplitudes entering the fit.
    pub points: usize,
    pub r_squared: f64,
}

/// Fits `A e^{-rate·t}` to half-cycle amplitudes of an oscillating signal.
///
/// Each amplitude is half the jump between consecutive extrema, which cancels a
/// slowly drifting mean to first order. Amplitudes below `floor` are dropped.
pub fn envelope_decay(times: &[f64], values: &[f64], t_start: f64, floor: f64) -> Result<EnvelopeFit> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
    }
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    for i in 1..times.len().saturating_sub(1) {
        if times[i] < t_start {
            continue;
        }
        let (a, b, c) = (values[i - 1], values[i], values[i + 1]);
        let is_max = b > a && b >= c;
        let is_min = b < a && b <= c;
        if !(is_max || is_min) {
            continue;
        }
        let denom = a - 2.0 * b + c;
        let delta = if denom != 0.0 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
        let dt = times[i + 1] - times[i];
        extrema.push((times[i] + delta * dt, b - 0.25 * (a - c) * delta));
    }
    let pts: Vec<(f64, f64)> = extrema
        .windows(2)
        .map(|w| (0.5 * (w[0].0 + w[1].0), 0.5 * (w[1].1 - w[0].1).abs()))
        .take_while(|&(_, amp)| amp > floor)
        .map(|(t, amp)| (t, amp.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooShort(format!("only {} usable half-cycles after t = {t_start}", pts.len())));
    }
    let (slope, r_squared) = linear_fit(&pts);
    let rate = -slope;
    Ok(EnvelopeFit { rate, decay_time: 1.0 / rate, points: pts.len(), r_squared })
}

/// Least-squares slope and coefficient of determination.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    (slope, r2)
}
