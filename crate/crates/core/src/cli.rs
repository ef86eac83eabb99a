//! Command-line front end: JSON configuration, task dispatch and artifact files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::dynamics::{evolve_with, fourier_series, EvolveOptions, FourierOptions, TimeTrace};
use crate::error::{Error, Result};
use crate::liouvillian::{build_liouvillian_with_cap, perfect_squeezing, ModelParams, DEFAULT_DRIVE_PHASE};
use crate::observables::{occupation_distribution, spin_wigner, transverse_variances, NEGATIVITY_THRESHOLD};
use crate::spectral::{
    full_spectrum_with, gap_spectrum, low_lying_spectrum_with, steady_state_with, GapSearch, SpectralConfig,
    SpectrumMethod, SpectrumResult, UNITS_TAG,
};
use crate::spin::{expectation, DensityMatrix, SpinOperators, DEFAULT_MAX_ATOMS};
use crate::sweeps::{finite_size_scan, run_sweep, SweepAxis, SweepOutput, SweepPlan, SweepTable};

pub const OUTPUT_ROOT_ENV: &str = "SQBTC_OUTPUT_ROOT";
pub const DEFAULT_OUTPUT_ROOT: &str = "sqbtc-output";

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Spectrum,
    Steady,
    Evolve,
    Fourier,
    Wigner,
    SweepDrive,
    SweepSqueeze,
    ScanSize,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Spectrum => "spectrum",
            Task::Steady => "steady",
            Task::Evolve => "evolve",
            Task::Fourier => "fourier",
            Task::Wigner => "wigner",
            Task::SweepDrive => "sweep-drive",
            Task::SweepSqueeze => "sweep-squeeze",
            Task::ScanSize => "scan-size",
        }
    }
}

/// Model parameters as written in a config file. The drive is given either as
/// `drive_ratio` (with `NΓ/2 = 1`) or as `rabi` and `gamma`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub n_atoms: usize,
    pub drive_ratio: Option<f64>,
    pub rabi: Option<f64>,
    pub gamma: Option<f64>,
    pub n_bar: f64,
    /// Perfect squeezing `sqrt(n̄(n̄+1))` when absent.
    pub m_abs: Option<f64>,
    pub drive_phase: f64,
    pub squeeze_phase: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_atoms: 1,
            drive_ratio: None,
            rabi: None,
            gamma: None,
            n_bar: 0.0,
            m_abs: None,
            drive_phase: DEFAULT_DRIVE_PHASE,
            squeeze_phase: 0.0,
        }
    }
}

impl ModelConfig {
    pub fn to_params(&self) -> Result<ModelParams> {
        let n = self.n_atoms;
        if n == 0 {
            return Err(Error::Config("model.n_atoms must be at least 1".into()));
        }
        let (rabi, gamma) = match self.drive_ratio {
            Some(_) if self.rabi.is_some() || self.gamma.is_some() => {
                return Err(Error::Config("give either model.drive_ratio or model.rabi/model.gamma, not both".into()))
            }
            Some(r) => (r, 2.0 / n as f64),
            None => (self.rabi.unwrap_or(0.0), self.gamma.unwrap_or(2.0 / n as f64)),
        };
        Ok(ModelParams {
            n_atoms: n,
            rabi,
            drive_phase: self.drive_phase,
            gamma,
            n_bar: self.n_bar,
            m_abs: self.m_abs.unwrap_or_else(|| perfect_squeezing(self.n_bar)),
            squeeze_phase: self.squeeze_phase,
        })
    }
}

/// A density matrix named in a config file.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum StateSpec {
    Steady,
    AllDown,
    MaximallyMixed,
    Coherent { theta: f64, phi: f64 },
    Dicke { m: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumTask {
    /// Dense when the Liouvillian fits under the dense cap, shift-invert otherwise.
    pub method: Option<SpectrumMethod>,
    pub k: usize,
    /// `[re, im]` in `NΓ/2` units; windows at the origin and the harmonics when absent.
    pub shift: Option<[f64; 2]>,
    pub harmonics: usize,
    pub frequency: Option<f64>,
}

impl Default for SpectrumTask {
    fn default() -> Self {
        let g = GapSearch::default();
        Self { method: None, k: g.k, shift: None, harmonics: g.harmonics, frequency: g.frequency }
    }
}

impl SpectrumTask {
    fn gap_search(&self) -> GapSearch {
        GapSearch { k: self.k, harmonics: self.harmonics, frequency: self.frequency }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolveTask {
    pub initial: StateSpec,
    pub t_final: f64,
    pub sample_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub rehermitize_every: usize,
    pub max_steps: usize,
    pub record_variances: bool,
}

impl Default for EvolveTask {
    fn default() -> Self {
        let o = EvolveOptions::default();
        Self {
            initial: StateSpec::AllDown,
            t_final: o.t_final,
            sample_dt: o.sample_dt,
            rtol: o.rtol,
            atol: o.atol,
            rehermitize_every: o.rehermitize_every,
            max_steps: o.max_steps,
            record_variances: o.record_variances,
        }
    }
}

impl EvolveTask {
    fn options(&self) -> EvolveOptions {
        EvolveOptions {
            t_final: self.t_final,
            sample_dt: self.sample_dt,
            rtol: self.rtol,
            atol: self.atol,
            rehermitize_every: self.rehermitize_every,
            max_steps: self.max_steps,
            record_variances: self.record_variances,
            checkpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WignerTask {
    pub state: StateSpec,
    pub n_theta: usize,
    pub n_phi: usize,
    pub negativity_threshold: f64,
}

impl Default for WignerTask {
    fn default() -> Self {
        Self { state: StateSpec::Steady, n_theta: 181, n_phi: 360, negativity_threshold: NEGATIVITY_THRESHOLD }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepTask {
    /// Task-specific defaults when empty.
    pub points: Vec<f64>,
    pub outputs: Vec<SweepOutput>,
    pub workers: Option<usize>,
    pub k: Option<usize>,
    pub harmonics: Option<usize>,
    pub frequency: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub task: Option<Task>,
    pub model: ModelConfig,
    pub spectrum: SpectrumTask,
    pub evolve: EvolveTask,
    pub fourier: FourierOptions,
    pub wigner: WignerTask,
    pub sweep: SweepTask,
    pub tolerances: SpectralConfig,
    pub output: Option<PathBuf>,
    pub max_atoms: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            task: None,
            model: ModelConfig::default(),
            spectrum: SpectrumTask::default(),
            evolve: EvolveTask::default(),
            fourier: FourierOptions::default(),
            wigner: WignerTask::default(),
            sweep: SweepTask::default(),
            tolerances: SpectralConfig::default(),
            output: None,
            max_atoms: DEFAULT_MAX_ATOMS,
        }
    }
}

/// Sets `a.b.c = value` in a JSON tree, creating objects on the way. The value
/// is read as JSON and falls back to a plain string.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key `{key}`")));
    }
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            if node.is_null() {
                *node = Value::Object(Default::default());
            } else {
                return Err(Error::Config(format!("override `{key}` descends into a non-object")));
            }
        }
        let map = node.as_object_mut().unwrap();
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

/// Reads the optional config file, applies overrides and validates strictly.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    serde_json::from_value(root).map_err(|e| Error::Config(e.to_string()))
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

/// Files of one run, written and hashed together.
#[derive(Debug, Default)]
struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value).map_err(|e| Error::Numerical(e.to_string()))?;
        text.push(b'\n');
        self.add(name, text);
        Ok(())
    }

    fn write(&self, dir: &Path) -> Result<Vec<ArtifactRecord>> {
        self.files
            .iter()
            .map(|(name, bytes)| {
                std::fs::write(dir.join(name), bytes)?;
                Ok(ArtifactRecord { file: name.clone(), bytes: bytes.len(), sha256: format!("{:x}", Sha256::digest(bytes)) })
            })
            .collect()
    }
}

fn num(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

fn csv_bytes<I>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

fn build_state(spec: &StateSpec, params: &ModelParams, cfg: &RunConfig) -> Result<DensityMatrix> {
    let n = params.n_atoms;
    match spec {
        StateSpec::Steady => {
            let l = build_liouvillian_with_cap(params, cfg.max_atoms)?;
            steady_state_with(&l, &cfg.tolerances)
        }
        StateSpec::AllDown => DensityMatrix::all_down(n),
        StateSpec::MaximallyMixed => Ok(DensityMatrix::maximally_mixed(n + 1)),
        StateSpec::Coherent { theta, phi } => DensityMatrix::coherent(n, *theta, *phi),
        StateSpec::Dicke { m } => {
            let idx = n as f64 / 2.0 - m;
            if idx < 0.0 || idx > n as f64 || idx.fract() != 0.0 {
                return Err(Error::Config(format!("Dicke level m = {m} does not exist for N = {n}")));
            }
            DensityMatrix::dicke(n, idx as usize)
        }
    }
}

fn spectrum_artifacts(out: &mut Artifacts, s: &SpectrumResult, params: &ModelParams, cfg: &RunConfig) -> Result<()> {
    out.add(
        "spectrum.csv",
        csv_bytes(
            &["re", "im", "units"],
            s.eigenvalues.iter().map(|z| vec![num(z.re), num(z.im), UNITS_TAG.to_string()]),
        )?,
    );
    let max_residual = s.residuals.iter().copied().fold(None, |a: Option<f64>, r| Some(a.map_or(r, |a| a.max(r))));
    out.add_json(
        "gaps.json",
        &json!({
            "delta_1": s.gaps.delta_1,
            "delta_2": s.gaps.delta_2,
            "delta_omega": s.gaps.delta_omega,
            "im_zero_tolerance": s.gaps.im_zero_tolerance,
            "units": UNITS_TAG,
            "method": s.method,
            "shift": [s.shift.re, s.shift.im],
            "n_eigenvalues": s.eigenvalues.len(),
            "max_residual": max_residual,
            "tolerances": cfg.tolerances,
            "params": params,
        }),
    )
}

fn run_spectrum(cfg: &RunConfig, params: &ModelParams, out: &mut Artifacts) -> Result<()> {
    let l = build_liouvillian_with_cap(params, cfg.max_atoms)?;
    let task = &cfg.spectrum;
    let method = task.method.unwrap_or(if l.dim() <= cfg.tolerances.dense_cap {
        SpectrumMethod::Dense
    } else {
        SpectrumMethod::ShiftInvert
    });
    let s = match (method, task.shift) {
        (SpectrumMethod::Dense, _) => full_spectrum_with(&l, &cfg.tolerances)?,
        (SpectrumMethod::ShiftInvert, Some([re, im])) => {
            low_lying_spectrum_with(&l, task.k, C64::new(re, im), &cfg.tolerances)?
        }
        (SpectrumMethod::ShiftInvert, None) => gap_spectrum(&l, &task.gap_search(), &cfg.tolerances)?,
    };
    spectrum_artifacts(out, &s, params, cfg)
}

fn run_steady(cfg: &RunConfig, params: &ModelParams, out: &mut Artifacts) -> Result<()> {
    let rho = build_state(&StateSpec::Steady, params, cfg)?;
    let ops = SpinOperators::with_cap(params.n_atoms, cfg.max_atoms)?;
    let n = params.n_atoms as f64;
    let (vx, vy) = transverse_variances(&rho, &ops)?;
    let pm = occupation_distribution(&rho);
    out.add_json(
        "steady_obs.json",
        &json!({
            "Sz_over_N": expectation(&ops.s_z, &rho)?.re / n,
            "Sx_over_N": expectation(&ops.s_x, &rho)?.re / n,
            "Sy_over_N": expectation(&ops.s_y, &rho)?.re / n,
            "var_Sx": vx,
            "var_Sy": vy,
            "mean_m": pm.mean_m(),
            "participation_ratio": pm.participation_ratio(),
            "min_eigenvalue": rho.min_eigenvalue(),
            "params": params,
            "units": UNITS_TAG,
        }),
    )?;
    out.add(
        "pm.csv",
        csv_bytes(&["m", "p"], pm.m_values.iter().zip(&pm.probabilities).map(|(m, p)| vec![num(*m), num(*p)]))?,
    );
    Ok(())
}

fn trace_artifacts(out: &mut Artifacts, trace: &TimeTrace) -> Result<()> {
    let mut header = vec!["t", "Sz_over_N", "Sx_over_N", "Sy_over_N"];
    if trace.variances.is_some() {
        header.extend(["var_Sx", "var_Sy"]);
    }
    let rows = (0..trace.len()).map(|i| {
        let mut r = vec![num(trace.times[i]), num(trace.sz_over_n[i]), num(trace.sx_over_n[i]), num(trace.sy_over_n[i])];
        if let Some(v) = &trace.variances {
            r.extend([num(v[i].0), num(v[i].1)]);
        }
        r
    });
    out.add("trace.csv", csv_bytes(&header, rows)?);
    out.add_json("trace_stats.json", &trace.stats)
}

fn run_evolve(cfg: &RunConfig, params: &ModelParams, out: &mut Artifacts) -> Result<TimeTrace> {
    params.validate_with_cap(cfg.max_atoms)?;
    let rho0 = build_state(&cfg.evolve.initial, params, cfg)?;
    let trace = evolve_with(params, &rho0, &cfg.evolve.options())?;
    trace_artifacts(out, &trace)?;
    Ok(trace)
}

fn run_fourier(cfg: &RunConfig, params: &ModelParams, out: &mut Artifacts) -> Result<()> {
    let trace = run_evolve(cfg, params, out)?;
    let peaks = fourier_series(&trace.times, &trace.sz_over_n, &cfg.fourier)?;
    out.add(
        "fourier.csv",
        csv_bytes(
            &["freq", "amplitude"],
            peaks.frequencies.iter().zip(&peaks.amplitudes).map(|(f, a)| vec![num(*f), num(*a)]),
        )?,
    );
    out.add_json(
        "fourier_peaks.json",
        &json!({
            "dominant": peaks.dominant(),
            "peaks": peaks.peak_list.iter().take(20).collect::<Vec<_>>(),
            "resolution": peaks.resolution,
            "nyquist": peaks.nyquist,
            "options": peaks.options,
            "units": UNITS_TAG,
        }),
    )
}

fn run_wigner(cfg: &RunConfig, params: &ModelParams, out: &mut Artifacts) -> Result<()> {
    let rho = build_state(&cfg.wigner.state, params, cfg)?;
    let w = spin_wigner(&rho, cfg.wigner.n_theta, cfg.wigner.n_phi)?;
    for msg in &w.warnings {
        eprintln!("warning: {msg}");
    }
    let mut csv = Vec::new();
    w.write_csv(&mut csv)?;
    out.add("wigner.csv", csv);
    let mut bin = Vec::new();
    w.write_bin(&mut bin)?;
    out.add("wigner.bin", bin);
    let regions = w.negative_regions(cfg.wigner.negativity_threshold);
    let (it, il) = w.argmax();
    out.add_json(
        "wigner_summary.json",
        &json!({
            "integral": w.integral(),
            "min": w.min(),
            "max": w.at(it, il),
            "argmax": [w.theta_grid[it], w.phi_grid[il]],
            "negativity_threshold": cfg.wigner.negativity_threshold,
            "negative_regions": regions,
            "max_imag_residue": w.max_imag_residue,
            "warnings": w.warnings,
            "params": params,
        }),
    )
}

fn sweep_plan(cfg: &RunConfig, task: Task, workers: Option<usize>) -> Result<SweepPlan> {
    let fixed = cfg.model.to_params()?;
    let s = &cfg.sweep;
    let (axis, default_points, default_outputs): (_, Vec<f64>, _) = match task {
        Task::SweepDrive => (
            SweepAxis::Drive,
            (1..=20).map(|i| i as f64 / 10.0).collect(),
            vec![SweepOutput::Steady, SweepOutput::Variances],
        ),
        Task::SweepSqueeze => (SweepAxis::NBar, vec![0.0, 0.1, 0.2, 0.4, 0.8], vec![SweepOutput::Gaps]),
        _ => (SweepAxis::Size, vec![10.0, 20.0, 40.0, 80.0], vec![SweepOutput::Gaps, SweepOutput::Spectrum]),
    };
    let mut plan = SweepPlan::new(
        axis,
        if s.points.is_empty() { default_points } else { s.points.clone() },
        fixed,
        if s.outputs.is_empty() { default_outputs } else { s.outputs.clone() },
    );
    plan.workers = workers.or(s.workers).unwrap_or(1);
    plan.spectral = cfg.tolerances.clone();
    if axis == SweepAxis::Size {
        plan.gap_search.harmonics = 3;
    }
    if let Some(k) = s.k {
        plan.gap_search.k = k;
    }
    if let Some(h) = s.harmonics {
        plan.gap_search.harmonics = h;
    }
    plan.gap_search.frequency = s.frequency;
    plan.validate().map_err(|e| match e {
        Error::InvalidParams(m) => Error::Config(m),
        other => other,
    })?;
    let largest = match axis {
        SweepAxis::Size => *plan.points.last().unwrap() as usize,
        _ => plan.fixed.n_atoms,
    };
    if largest > cfg.max_atoms {
        return Err(Error::Size(format!("N = {largest} exceeds the cap of {}", cfg.max_atoms)));
    }
    Ok(plan)
}

fn table_artifacts(out: &mut Artifacts, table: &SweepTable) -> Result<()> {
    let mut csv = Vec::new();
    table.write_csv(&mut csv)?;
    out.add("sweep.csv", csv);
    let mut meta = table.meta_json()?.into_bytes();
    meta.push(b'\n');
    out.add("sweep.meta.json", meta);
    if table.rows.iter().any(|r| r.spectrum.is_some()) {
        let mut spectra = Vec::new();
        table.write_spectra_csv(&mut spectra)?;
        out.add("sweep_spectra.csv", spectra);
    }
    for r in &table.rows {
        if let Some(e) = &r.error {
            eprintln!("warning: point {} failed: {e}", r.value);
        }
    }
    Ok(())
}

fn run_sweep_task(cfg: &RunConfig, task: Task, workers: Option<usize>, out: &mut Artifacts) -> Result<()> {
    let plan = sweep_plan(cfg, task, workers)?;
    if task == Task::ScanSize {
        let scan = finite_size_scan(&plan)?;
        table_artifacts(out, &scan.table)?;
        let mut branches = Vec::new();
        scan.write_branches_csv(&mut branches)?;
        out.add("branches.csv", branches);
        out.add_json("scan_fits.json", &json!({ "records": scan.records, "branches": scan.branches, "units": UNITS_TAG }))
    } else {
        let table = run_sweep(&plan)?;
        table_artifacts(out, &table)
    }
}

/// Runs one task and returns the artifacts it produced.
fn execute(cfg: &RunConfig, task: Task, workers: Option<usize>, out: &mut Artifacts) -> Result<()> {
    let sweep = matches!(task, Task::SweepDrive | Task::SweepSqueeze | Task::ScanSize);
    if sweep {
        return run_sweep_task(cfg, task, workers, out);
    }
    let params = cfg.model.to_params()?;
    params.validate_with_cap(cfg.max_atoms)?;
    match task {
        Task::Spectrum => run_spectrum(cfg, &params, out),
        Task::Steady => run_steady(cfg, &params, out),
        Task::Evolve => run_evolve(cfg, &params, out).map(|_| ()),
        Task::Fourier => run_fourier(cfg, &params, out),
        Task::Wigner => run_wigner(cfg, &params, out),
        _ => unreachable!(),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_resource_cap() {
        EXIT_RESOURCE
    } else if matches!(e, Error::Config(_) | Error::InvalidParams(_)) {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a config entry, e.g. `--set model.n_atoms=10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Output directory (defaults to $SQBTC_OUTPUT_ROOT/<task>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Liouvillian eigenvalues and dissipative gaps.
    Spectrum(CommonArgs),
    /// Steady state observables and level occupations.
    Steady(CommonArgs),
    /// Time trace of the collective spin.
    Evolve(CommonArgs),
    /// Time trace and its Fourier spectrum.
    Fourier(CommonArgs),
    /// Spin Wigner function on a (θ, φ) grid.
    Wigner(CommonArgs),
    /// Scan of the drive ratio.
    SweepDrive(CommonArgs),
    /// Scan of the squeezed photon number.
    SweepSqueeze(CommonArgs),
    /// Finite-size scan with 1/N extrapolation of eigenvalue branches.
    ScanSize(CommonArgs),
}

impl Command {
    fn split(self) -> (Task, CommonArgs) {
        match self {
            Command::Spectrum(a) => (Task::Spectrum, a),
            Command::Steady(a) => (Task::Steady, a),
            Command::Evolve(a) => (Task::Evolve, a),
            Command::Fourier(a) => (Task::Fourier, a),
            Command::Wigner(a) => (Task::Wigner, a),
            Command::SweepDrive(a) => (Task::SweepDrive, a),
            Command::SweepSqueeze(a) => (Task::SweepSqueeze, a),
            Command::ScanSize(a) => (Task::ScanSize, a),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "sqbtc", version, about = "Driven collective spins in a squeezed-vacuum reservoir")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

fn output_dir(args: &CommonArgs, cfg: &RunConfig, task: Task) -> PathBuf {
    args.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| {
        let root = std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from).unwrap_or_else(|| DEFAULT_OUTPUT_ROOT.into());
        root.join(task.name())
    })
}

fn finish(dir: &Path, task: Task, cfg: &RunConfig, out: &Artifacts, status: &str) -> Result<()> {
    let records = out.write(dir)?;
    let manifest = json!({
        "tool": "sqbtc",
        "version": env!("CARGO_PKG_VERSION"),
        "task": task,
        "status": status,
        "config": cfg,
        "artifacts": records,
    });
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push(b'\n');
    std::fs::write(dir.join("manifest.json"), text)?;
    Ok(())
}

/// Parses arguments, runs the task and returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (task, args) = cli.command.split();
    let cfg = match load_config(args.config.as_deref(), &args.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(t) = cfg.task {
        if t != task {
            eprintln!("error: config is for task `{}` but `{}` was requested", t.name(), task.name());
            return EXIT_CONFIG;
        }
    }
    if args.workers == Some(0) {
        eprintln!("error: --workers must be at least 1");
        return EXIT_CONFIG;
    }
    let dir = output_dir(&args, &cfg, task);
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return EXIT_CONFIG;
    }

    let mut out = Artifacts::default();
    let (code, status) = match execute(&cfg, task, args.workers, &mut out) {
        Ok(()) => (EXIT_OK, "ok"),
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("error: {e}");
            out = Artifacts::default();
            let diag = json!({ "error": e.to_string(), "debug": format!("{e:?}"), "exit_code": code, "task": task });
            if out.add_json("diagnostic.json", &diag).is_err() {
                return code;
            }
            (code, "error")
        }
    };
    if let Err(e) = finish(&dir, task, &cfg, &out, status) {
        eprintln!("error: cannot write outputs to {}: {e}", dir.display());
        return if code == EXIT_OK { EXIT_CONFIG } else { code };
    }
    code
}
