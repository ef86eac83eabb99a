//! Parameter scans over drive strength, squeezing and system size.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liouvillian::{build_liouvillian, perfect_squeezing, ModelParams};
use crate::observables::transverse_variances;
use crate::spectral::{gap_spectrum, steady_state_with, GapSearch, GapSummary, SpectralConfig, ZERO_EIGENVALUE_TOL};
use crate::spin::{expectation, SpinOperators};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    /// Drive ratio `2|Ω|/NΓ` at fixed `N` and `Γ`.
    Drive,
    /// Photon number `n̄` with perfect squeezing at every point.
    NBar,
    /// Atom number `N` with `NΓ/2` and the drive ratio held fixed.
    Size,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOutput {
    Steady,
    Variances,
    Gaps,
    Spectrum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepPlan {
    pub axis: SweepAxis,
    pub points: Vec<f64>,
    pub fixed: ModelParams,
    pub outputs: Vec<SweepOutput>,
    pub workers: usize,
    #[serde(default)]
    pub gap_search: GapSearch,
    #[serde(default)]
    pub spectral: SpectralConfig,
}

impl SweepPlan {
    pub fn new(axis: SweepAxis, points: Vec<f64>, fixed: ModelParams, outputs: Vec<SweepOutput>) -> Self {
        Self {
            axis,
            points,
            fixed,
            outputs,
            workers: 1,
            gap_search: GapSearch::default(),
            spectral: SpectralConfig::default(),
        }
    }

    /// The default finite-size ladder `N ∈ {10, 20, 40, 80}` at fixed drive ratio.
    pub fn size_ladder(drive_ratio: f64, n_bar: f64) -> Self {
        let mut plan = Self::new(
            SweepAxis::Size,
            vec![10.0, 20.0, 40.0, 80.0],
            ModelParams::reduced(10, drive_ratio, n_bar),
            vec![SweepOutput::Gaps, SweepOutput::Spectrum],
        );
        plan.gap_search.harmonics = 3;
        plan
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidParams("sweep has no points".into()));
        }
        if self.points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidParams("sweep points must be finite".into()));
        }
        if self.points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParams("sweep points must be strictly increasing".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidParams("workers must be at least 1".into()));
        }
        match self.axis {
            SweepAxis::Drive | SweepAxis::NBar if self.points[0] < 0.0 => {
                Err(Error::InvalidParams("drive and n̄ points must be nonnegative".into()))
            }
            SweepAxis::Size if self.points.iter().any(|p| *p < 1.0 || p.fract() != 0.0) => {
                Err(Error::InvalidParams("size points must be positive integers".into()))
            }
            _ => self.fixed.validate(),
        }
    }

    fn has(&self, o: SweepOutput) -> bool {
        self.outputs.contains(&o)
    }

    /// Model at one sweep coordinate.
    pub fn params_at(&self, value: f64) -> ModelParams {
        let mut p = self.fixed;
        match self.axis {
            SweepAxis::Drive => p.rabi = value * p.rate_unit(),
            SweepAxis::NBar => {
                p.n_bar = value;
                p.m_abs = perfect_squeezing(value);
            }
            SweepAxis::Size => {
                let unit = p.rate_unit();
                let ratio = p.drive_ratio();
                p.n_atoms = value as usize;
                p.gamma = 2.0 * unit / p.n_atoms as f64;
                p.rabi = ratio * unit;
            }
        }
        p
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SteadyRecord {
    pub sz_over_n: f64,
    pub sx_over_n: f64,
    pub sy_over_n: f64,
    /// `(ΔSx², ΔSy²)`.
    pub variances: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub params: ModelParams,
    pub steady: Option<SteadyRecord>,
    pub gaps: Option<GapSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<C64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepMeta {
    pub plan: SweepPlan,
    pub units: String,
    pub code_version: String,
    pub created_unix: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub meta: SweepMeta,
}

fn point(plan: &SweepPlan, value: f64) -> SweepRow {
    let params = plan.params_at(value);
    let mut row = SweepRow { value, params, steady: None, gaps: None, spectrum: None, error: None };
    let result = (|| -> Result<()> {
        let l = build_liouvillian(&params)?;
        if plan.has(SweepOutput::Steady) || plan.has(SweepOutput::Variances) {
            let rho = steady_state_with(&l, &plan.spectral)?;
            let ops = SpinOperators::new(params.n_atoms)?;
            let n = params.n_atoms as f64;
            let variances = if plan.has(SweepOutput::Variances) {
                Some(transverse_variances(&rho, &ops)?)
            } else {
                None
            };
            row.steady = Some(SteadyRecord {
                sz_over_n: expectation(&ops.s_z, &rho)?.re / n,
                sx_over_n: expectation(&ops.s_x, &rho)?.re / n,
                sy_over_n: expectation(&ops.s_y, &rho)?.re / n,
                variances,
            });
        }
        if plan.has(SweepOutput::Gaps) || plan.has(SweepOutput::Spectrum) {
            let s = gap_spectrum(&l, &plan.gap_search, &plan.spectral)?;
            row.gaps = Some(s.gaps);
            if plan.has(SweepOutput::Spectrum) {
                row.spectrum = Some(s.eigenvalues);
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        row.error = Some(e.to_string());
    }
    row
}

/// Runs every point of the plan; failed points keep an error marker.
pub fn run_sweep(plan: &SweepPlan) -> Result<SweepTable> {
    plan.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(plan.workers)
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    let rows = pool.install(|| plan.points.par_iter().map(|&v| point(plan, v)).collect());
    let created_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    Ok(SweepTable {
        axis: plan.axis,
        rows,
        meta: SweepMeta {
            plan: plan.clone(),
            units: crate::spectral::UNITS_TAG.into(),
            code_version: env!("CARGO_PKG_VERSION").into(),
            created_unix,
        },
    })
}

fn require_axis(plan: &SweepPlan, axis: SweepAxis) -> Result<()> {
    if plan.axis != axis {
        return Err(Error::InvalidParams(format!("plan axis is {:?}, expected {axis:?}", plan.axis)));
    }
    Ok(())
}

pub fn sweep_drive(plan: &SweepPlan) -> Result<SweepTable> {
    require_axis(plan, SweepAxis::Drive)?;
    run_sweep(plan)
}

pub fn sweep_squeeze(plan: &SweepPlan) -> Result<SweepTable> {
    require_axis(plan, SweepAxis::NBar)?;
    run_sweep(plan)
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{:.16e}", v + 0.0)).unwrap_or_default()
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record([
            "value", "n_atoms", "drive_ratio", "n_bar", "m_abs", "Sz_over_N", "Sx_over_N", "Sy_over_N", "var_Sx",
            "var_Sy", "delta_1", "delta_2", "delta_omega", "error",
        ])
        .map_err(io)?;
        for r in &self.rows {
            let s = r.steady;
            let g = r.gaps;
            w.write_record([
                fmt(Some(r.value)),
                r.params.n_atoms.to_string(),
                fmt(Some(r.params.drive_ratio())),
                fmt(Some(r.params.n_bar)),
                fmt(Some(r.params.m_abs)),
                fmt(s.map(|s| s.sz_over_n)),
                fmt(s.map(|s| s.sx_over_n)),
                fmt(s.map(|s| s.sy_over_n)),
                fmt(s.and_then(|s| s.variances).map(|v| v.0)),
                fmt(s.and_then(|s| s.variances).map(|v| v.1)),
                fmt(g.and_then(|g| g.delta_1)),
                fmt(g.and_then(|g| g.delta_2)),
                fmt(g.and_then(|g| g.delta_omega)),
                r.error.clone().unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Long-format eigenvalue listing `(value, index, re, im)`.
    pub fn write_spectra_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(["value", "index", "re", "im"]).map_err(io)?;
        for r in &self.rows {
            for (i, z) in r.spectrum.iter().flatten().enumerate() {
                w.write_record([fmt(Some(r.value)), i.to_string(), fmt(Some(z.re)), fmt(Some(z.im))]).map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn meta_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Numerical(e.to_string()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SizeRecord {
    pub n_atoms: usize,
    /// The six smallest nonzero `|Re λ|`.
    pub smallest_re: Vec<f64>,
    /// `|Im λ|` of the first twelve nonzero eigenvalues in spectrum order.
    pub first_im: Vec<f64>,
    pub delta_omega: Option<f64>,
}

/// Position of a mode in the spectrum: harmonic band `Im λ ≈ band·δω` and
/// rank by `|Re λ|` within that band (upper half plane).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BranchLabel {
    pub band: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
}

/// Least-squares line through `(x, y)`.
pub fn fit_line(pts: &[(f64, f64)]) -> Option<LineFit> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Some(LineFit { intercept, slope, residual })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchFit {
    pub label: BranchLabel,
    pub complex: bool,
    /// `(N, λ)` with `Im λ ≥ 0`.
    pub points: Vec<(usize, C64)>,
    /// Sizes at which the branch could not be found.
    pub missing: Vec<usize>,
    pub ambiguous: bool,
    /// `|Re λ|` against `1/N`.
    pub re_fit: Option<LineFit>,
    /// `Im λ` against `1/N`.
    pub im_fit: Option<LineFit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiniteSizeScan {
    pub table: SweepTable,
    pub records: Vec<SizeRecord>,
    pub branches: Vec<BranchFit>,
}

struct Labelled {
    label: BranchLabel,
    value: C64,
    ambiguous: bool,
}

/// Labels the upper-half-plane nonzero eigenvalues by harmonic band and rank.
fn label_spectrum(eigs: &[C64], delta_omega: Option<f64>, im_tol: f64) -> Vec<Labelled> {
    let mut bands: std::collections::BTreeMap<usize, Vec<(C64, bool)>> = Default::default();
    for &z in eigs {
        if z.norm() <= ZERO_EIGENVALUE_TOL || z.im < -im_tol {
            continue;
        }
        let (band, ambiguous) = match delta_omega {
            Some(w) if z.im > im_tol => {
                let x = z.im / w;
                let b = x.round().max(1.0);
                (b as usize, (x - b).abs() > 0.25)
            }
            _ => (0, false),
        };
        bands.entry(band).or_default().push((z, ambiguous));
    }
    let mut out = Vec::new();
    for (band, mut members) in bands {
        members.sort_by(|a, b| a.0.re.abs().total_cmp(&b.0.re.abs()));
        for (rank, (z, amb)) in members.iter().enumerate() {
            let tie = members
                .iter()
                .enumerate()
                .any(|(r, (w, _))| r != rank && (w.re.abs() - z.re.abs()).abs() <= 1e-9 * z.norm().max(1.0));
            out.push(Labelled { label: BranchLabel { band, rank }, value: *z, ambiguous: *amb || tie });
        }
    }
    out
}

/// Tracks the branches found among the six slowest modes at the largest `N`
/// down the size ladder and fits `|Re λ|` and `Im λ` linearly in `1/N`.
pub fn finite_size_scan(plan: &SweepPlan) -> Result<FiniteSizeScan> {
    require_axis(plan, SweepAxis::Size)?;
    let mut plan = plan.clone();
    for o in [SweepOutput::Gaps, SweepOutput::Spectrum] {
        if !plan.outputs.contains(&o) {
            plan.outputs.push(o);
        }
    }
    let table = run_sweep(&plan)?;
    let im_tol = plan.spectral.im_zero_tolerance;

    // one band spacing for the whole ladder: small systems can carry stray
    // low-frequency modes that would distort a per-size spacing
    let reference = plan.gap_search.frequency.or_else(|| {
        table.rows.iter().rev().find_map(|r| r.gaps.and_then(|g| g.delta_omega))
    });
    let mut records = Vec::new();
    let mut labelled = Vec::new();
    for row in &table.rows {
        let Some(eigs) = &row.spectrum else {
            labelled.push(None);
            continue;
        };
        let nonzero: Vec<C64> = eigs.iter().copied().filter(|z| z.norm() > ZERO_EIGENVALUE_TOL).collect();
        let dw = row.gaps.and_then(|g| g.delta_omega);
        records.push(SizeRecord {
            n_atoms: row.params.n_atoms,
            smallest_re: nonzero.iter().take(6).map(|z| z.re.abs()).collect(),
            first_im: nonzero.iter().take(12).map(|z| z.im.abs()).collect(),
            delta_omega: dw,
        });
        labelled.push(Some(label_spectrum(eigs, reference, im_tol)));
    }

    let mut branches = Vec::new();
    let last = table.rows.iter().zip(&labelled).rev().find(|(_, l)| l.is_some());
    if let Some((last_row, Some(last_labels))) = last {
        let eigs = last_row.spectrum.as_ref().unwrap();
        let mut wanted: Vec<BranchLabel> = Vec::new();
        for z in eigs.iter().filter(|z| z.norm() > ZERO_EIGENVALUE_TOL).take(6) {
            let up = if z.im < -im_tol { z.conj() } else { *z };
            if let Some(l) = last_labels.iter().find(|l| (l.value - up).norm() <= 1e-12 * up.norm().max(1.0)) {
                if !wanted.contains(&l.label) {
                    wanted.push(l.label);
                }
            }
        }
        for label in wanted {
            let mut points = Vec::new();
            let mut missing = Vec::new();
            let mut ambiguous = false;
            for (row, labels) in table.rows.iter().zip(&labelled) {
                match labels.as_ref().and_then(|ls| ls.iter().find(|l| l.label == label)) {
                    Some(l) => {
                        points.push((row.params.n_atoms, l.value));
                        ambiguous |= l.ambiguous;
                    }
                    None => missing.push(row.params.n_atoms),
                }
            }
            let inv = |n: usize| 1.0 / n as f64;
            let re_pts: Vec<(f64, f64)> = points.iter().map(|(n, z)| (inv(*n), z.re.abs())).collect();
            let im_pts: Vec<(f64, f64)> = points.iter().map(|(n, z)| (inv(*n), z.im)).collect();
            branches.push(BranchFit {
                label,
                complex: label.band > 0,
                points,
                missing,
                ambiguous,
                re_fit: fit_line(&re_pts),
                im_fit: fit_line(&im_pts),
            });
        }
    }
    Ok(FiniteSizeScan { table, records, branches })
}

impl FiniteSizeScan {
    /// Long-format branch listing `(band, rank, N, re, im)`.
    pub fn write_branches_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let io = |e: csv::Error| Error::Io(e.into());
        w.write_record(["band", "rank", "n_atoms", "re", "im", "ambiguous"]).map_err(io)?;
        for b in &self.branches {
            for (n, z) in &b.points {
                w.write_record([
                    b.label.band.to_string(),
                    b.label.rank.to_string(),
                    n.to_string(),
                    fmt(Some(z.re)),
                    fmt(Some(z.im)),
                    b.ambiguous.to_string(),
                ])
                .map_err(io)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
