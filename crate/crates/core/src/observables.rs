//! Steady-state diagnostics: Dicke occupations, transverse variances and the
//! spin Wigner function on the Bloch sphere.

use std::io::Write;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clebsch::ClebschGordan;
use crate::error::{Error, Result};
use crate::spin::{m_values, variance, CMatrix, DensityMatrix, SpinOperators};

/// Cells with `W` below this count as negative.
pub const NEGATIVITY_THRESHOLD: f64 = -1e-4;

/// Largest imaginary residue tolerated in a Wigner map of a Hermitian state.
pub const WIGNER_IMAG_TOL: f64 = 1e-9;

const MIN_GRID: usize = 16;

fn n_atoms_of(rho: &DensityMatrix) -> usize {
    rho.dim() - 1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupationDistribution {
    /// `+j` down to `-j`.
    pub m_values: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl OccupationDistribution {
    pub fn mean_m(&self) -> f64 {
        self.m_values.iter().zip(&self.probabilities).map(|(m, p)| m * p).sum()
    }

    /// `1 / Σ p_m²`: the effective number of occupied levels.
    pub fn participation_ratio(&self) -> f64 {
        1.0 / self.probabilities.iter().map(|p| p * p).sum::<f64>()
    }

    /// Indices of strict local maxima whose height exceeds `min_height`.
    /// The end points count when they exceed their single neighbour.
    pub fn local_maxima(&self, min_height: f64) -> Vec<usize> {
        let p = &self.probabilities;
        let n = p.len();
        (0..n)
            .filter(|&i| {
                let left = i == 0 || p[i] > p[i - 1];
                let right = i + 1 == n || p[i] > p[i + 1];
                left && right && p[i] > min_height && n > 1
            })
            .collect()
    }

    /// Topographic prominence of each local maximum: its height above the
    /// higher of the two minima separating it from taller peaks (or the ends).
    pub fn peak_prominences(&self) -> Vec<(usize, f64)> {
        let p = &self.probabilities;
        self.local_maxima(f64::NEG_INFINITY)
            .into_iter()
            .map(|i| {
                let base = |range: &mut dyn Iterator<Item = usize>| {
                    let mut lo = p[i];
                    for k in range {
                        if p[k] > p[i] {
                            break;
                        }
                        lo = lo.min(p[k]);
                    }
                    lo
                };
                let left = base(&mut (0..i).rev());
                let right = base(&mut (i + 1..p.len()));
                (i, p[i] - left.max(right))
            })
            .collect()
    }

    /// Local maxima whose prominence is at least `fraction` of the largest
    /// probability. Small parity fringes are ignored this way.
    pub fn prominent_maxima(&self, fraction: f64) -> Vec<usize> {
        let top = self.probabilities.iter().copied().fold(0.0, f64::max);
        self.peak_prominences().into_iter().filter(|(_, h)| *h >= fraction * top).map(|(i, _)| i).collect()
    }
}

pub fn occupation_distribution(rho: &DensityMatrix) -> OccupationDistribution {
    let d = rho.dim();
    OccupationDistribution {
        m_values: m_values(d - 1),
        probabilities: (0..d).map(|i| rho.matrix()[(i, i)].re).collect(),
    }
}

pub fn transverse_variances(rho: &DensityMatrix, ops: &SpinOperators) -> Result<(f64, f64)> {
    Ok((variance(&ops.s_x, rho)?, variance(&ops.s_y, rho)?))
}

/// Irreducible tensor operators `T_kq` on the spin-`j` space, `k ≤ 2j`.
///
/// `T_kq = Σ (-1)^{j-m'} ⟨j m; j -m' | k q⟩ |m⟩⟨m'|` is nonzero only on the
/// `q`-th subdiagonal (`m = m' + q`) and real; `T_{k,-q} = (-1)^q T_kqᵀ`.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    n_atoms: usize,
    /// `bands[k][q][i]` = `T_kq[i, i + q]` in matrix indices, `q ≥ 0`.
    bands: Vec<Vec<Vec<f64>>>,
}

impl TensorBasis {
    pub fn new(n_atoms: usize) -> Self {
        let two_j = n_atoms as i64;
        let d = n_atoms + 1;
        let cg = ClebschGordan::new(2 * n_atoms as u32);
        let bands = (0..=n_atoms)
            .into_par_iter()
            .map(|k| {
                (0..=k)
                    .map(|q| {
                        // row i has m = j - i, column i + q has m' = m - q
                        (0..d - q)
                            .map(|i| {
                                let two_m = two_j - 2 * i as i64;
                                let two_mp = two_m - 2 * q as i64;
                                let phase = if ((two_j - two_mp) / 2) % 2 == 0 { 1.0 } else { -1.0 };
                                phase * cg.coefficient(two_j, two_m, two_j, -two_mp, 2 * k as i64, 2 * q as i64)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self { n_atoms, bands }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn max_rank(&self) -> usize {
        self.n_atoms
    }

    /// Dense `T_kq` for `|q| ≤ k ≤ 2j`.
    pub fn operator(&self, k: usize, q: i64) -> CMatrix {
        let d = self.n_atoms + 1;
        let qa = q.unsigned_abs() as usize;
        assert!(k <= self.n_atoms && qa <= k, "T_{k},{q} outside the basis");
        let band = &self.bands[k][qa];
        let mut t = CMatrix::zeros(d, d);
        for (i, &v) in band.iter().enumerate() {
            if q >= 0 {
                t[(i, i + qa)] = C64::new(v, 0.0);
            } else {
                let sign = if qa % 2 == 0 { 1.0 } else { -1.0 };
                t[(i + qa, i)] = C64::new(sign * v, 0.0);
            }
        }
        t
    }
}

/// State multipoles `ρ_kq = Tr[ρ T_kq†]`, indexed `[k][q + k]`.
#[derive(Debug, Clone)]
pub struct MultipoleTable {
    pub n_atoms: usize,
    values: Vec<Vec<C64>>,
}

impl MultipoleTable {
    pub fn get(&self, k: usize, q: i64) -> C64 {
        self.values[k][(q + k as i64) as usize]
    }

    pub fn max_rank(&self) -> usize {
        self.values.len() - 1
    }
}

pub fn multipole_components(rho: &DensityMatrix) -> MultipoleTable {
    multipole_components_with(rho, &TensorBasis::new(n_atoms_of(rho)))
}

pub fn multipole_components_with(rho: &DensityMatrix, basis: &TensorBasis) -> MultipoleTable {
    let r = rho.matrix();
    assert_eq!(basis.n_atoms + 1, rho.dim(), "tensor basis built for a different N");
    let values = basis
        .bands
        .iter()
        .enumerate()
        .map(|(k, per_q)| {
            let mut row = vec![C64::new(0.0, 0.0); 2 * k + 1];
            for (q, band) in per_q.iter().enumerate() {
                // Tr[ρ T†] = Σ ρ_ab T_ab for real T; T_{k,-q} = (-1)^q T_kqᵀ
                let mut plus = C64::new(0.0, 0.0);
                let mut minus = C64::new(0.0, 0.0);
                for (i, &t) in band.iter().enumerate() {
                    plus += r[(i, i + q)] * t;
                    minus += r[(i + q, i)] * t;
                }
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                row[k + q] = plus;
                row[k - q] = minus * sign;
            }
            row
        })
        .collect();
    MultipoleTable { n_atoms: basis.n_atoms, values }
}

/// Fully normalized associated Legendre values `P̄_kq(cos θ)` for `0 ≤ q ≤ k ≤ k_max`
/// with the Condon–Shortley phase, so that `Y_kq = P̄_kq e^{iqφ}`.
pub fn normalized_legendre(k_max: usize, theta: f64) -> Vec<Vec<f64>> {
    let (x, s) = (theta.cos(), theta.sin());
    let mut p: Vec<Vec<f64>> = (0..=k_max).map(|k| vec![0.0; k + 1]).collect();
    p[0][0] = 0.5 / std::f64::consts::PI.sqrt();
    for q in 1..=k_max {
        let qf = q as f64;
        p[q][q] = -((2.0 * qf + 1.0) / (2.0 * qf)).sqrt() * s * p[q - 1][q - 1];
    }
    for q in 0..k_max {
        let qf = q as f64;
        p[q + 1][q] = (2.0 * qf + 3.0).sqrt() * x * p[q][q];
        for k in q + 2..=k_max {
            let kf = k as f64;
            let a = ((4.0 * kf * kf - 1.0) / (kf * kf - qf * qf)).sqrt();
            let b = (((kf - 1.0).powi(2) - qf * qf) / (4.0 * (kf - 1.0).powi(2) - 1.0)).sqrt();
            p[k][q] = a * (x * p[k - 1][q] - b * p[k - 2][q]);
        }
    }
    p
}

/// Clenshaw–Curtis weights for `∫_{-1}^{1} f(x) dx` on `x_i = cos(iπ/n)`, `i = 0..=n`.
fn clenshaw_curtis_weights(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..=n)
        .map(|i| {
            let theta = i as f64 * std::f64::consts::PI / nf;
            let c = if i == 0 || i == n { 1.0 } else { 2.0 };
            let mut s = 0.0;
            for k in 1..=n / 2 {
                let b = if 2 * k == n { 1.0 } else { 2.0 };
                s += b / (4.0 * (k * k) as f64 - 1.0) * (2.0 * k as f64 * theta).cos();
            }
            c / nf * (1.0 - s)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NegativeRegion {
    pub cells: usize,
    pub min_value: f64,
    pub theta_min: f64,
    pub theta_max: f64,
    /// Angular extent of the region along φ.
    pub phi_span: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerMap {
    pub theta_grid: Vec<f64>,
    pub phi_grid: Vec<f64>,
    /// Row-major over θ: `values[i * n_phi + l] = W(θ_i, φ_l)`.
    pub values: Vec<f64>,
    pub max_imag_residue: f64,
    pub warnings: Vec<String>,
}

impl WignerMap {
    pub fn n_theta(&self) -> usize {
        self.theta_grid.len()
    }

    pub fn n_phi(&self) -> usize {
        self.phi_grid.len()
    }

    pub fn at(&self, i: usize, l: usize) -> f64 {
        self.values[i * self.n_phi() + l]
    }

    /// `∫ W sin θ dθ dφ`, exact for band-limited maps on this grid.
    pub fn integral(&self) -> f64 {
        let n_phi = self.n_phi();
        let w = clenshaw_curtis_weights(self.n_theta() - 1);
        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        (0..self.n_theta())
            .map(|i| w[i] * self.values[i * n_phi..(i + 1) * n_phi].iter().sum::<f64>() * dphi)
            .sum()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn argmax(&self) -> (usize, usize) {
        let idx = (0..self.values.len()).max_by(|&a, &b| self.values[a].total_cmp(&self.values[b])).unwrap();
        (idx / self.n_phi(), idx % self.n_phi())
    }

    /// Connected regions with `W < threshold` (φ periodic, pole rows joined).
    pub fn negative_regions(&self, threshold: f64) -> Vec<NegativeRegion> {
        let (nt, np) = (self.n_theta(), self.n_phi());
        let mut label = vec![usize::MAX; nt * np];
        let mut regions = Vec::new();
        for start in 0..nt * np {
            if label[start] != usize::MAX || self.values[start] >= threshold {
                continue;
            }
            let id = regions.len();
            let mut stack = vec![start];
            label[start] = id;
            let (mut cells, mut min_value) = (0, f64::INFINITY);
            let (mut tmin, mut tmax) = (usize::MAX, 0);
            let mut cols = vec![false; np];
            while let Some(c) = stack.pop() {
                let (i, l) = (c / np, c % np);
                cells += 1;
                min_value = min_value.min(self.values[c]);
                tmin = tmin.min(i);
                tmax = tmax.max(i);
                cols[l] = true;
                let mut nbrs = vec![i * np + (l + 1) % np, i * np + (l + np - 1) % np];
                if i > 0 {
                    nbrs.push((i - 1) * np + l);
                }
                if i + 1 < nt {
                    nbrs.push((i + 1) * np + l);
                }
                if i == 0 || i + 1 == nt {
                    nbrs.extend((0..np).map(|m| i * np + m));
                }
                for nb in nbrs {
                    if label[nb] == usize::MAX && self.values[nb] < threshold {
                        label[nb] = id;
                        stack.push(nb);
                    }
                }
            }
            let dphi = 2.0 * std::f64::consts::PI / np as f64;
            regions.push(NegativeRegion {
                cells,
                min_value,
                theta_min: self.theta_grid[tmin],
                theta_max: self.theta_grid[tmax],
                phi_span: cols.iter().filter(|&&c| c).count() as f64 * dphi,
            });
        }
        regions
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "theta,phi,W")?;
        for (i, t) in self.theta_grid.iter().enumerate() {
            for (l, p) in self.phi_grid.iter().enumerate() {
                writeln!(out, "{t:.16e},{p:.16e},{:.16e}", self.at(i, l))?;
            }
        }
        Ok(())
    }

    /// Little-endian binary grid: magic `SQWG`, `u32` version, `u64` n_theta,
    /// `u64` n_phi, `f64` θ_first, θ_last, φ_first, Δφ, then the values row-major.
    pub fn write_bin<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(b"SQWG")?;
        out.write_all(&1u32.to_le_bytes())?;
        out.write_all(&(self.n_theta() as u64).to_le_bytes())?;
        out.write_all(&(self.n_phi() as u64).to_le_bytes())?;
        let dphi = 2.0 * std::f64::consts::PI / self.n_phi() as f64;
        for v in [self.theta_grid[0], *self.theta_grid.last().unwrap(), self.phi_grid[0], dphi] {
            out.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn spin_wigner(rho: &DensityMatrix, n_theta: usize, n_phi: usize) -> Result<WignerMap> {
    spin_wigner_with(rho, &TensorBasis::new(n_atoms_of(rho)), n_theta, n_phi)
}

/// `W(θ, φ) = √((2j+1)/4π) Σ_kq ρ_kq Y_kq(θ, φ)` on `θ_i = iπ/(n_θ-1)`,
/// `φ_l = 2πl/n_φ`, normalized to unit integral over the sphere.
pub fn spin_wigner_with(rho: &DensityMatrix, basis: &TensorBasis, n_theta: usize, n_phi: usize) -> Result<WignerMap> {
    if n_theta < MIN_GRID || n_phi < MIN_GRID {
        return Err(Error::InvalidParams(format!(
            "Wigner grid {n_theta}x{n_phi} is below the minimum {MIN_GRID}x{MIN_GRID}"
        )));
    }
    let n = n_atoms_of(rho);
    let mut warnings = Vec::new();
    if n_theta < 2 * n + 1 || n_phi < 2 * n + 1 {
        warnings.push(format!(
            "grid {n_theta}x{n_phi} under-resolves rank-{n} harmonics; use at least {0}x{0}",
            2 * n + 1
        ));
    }
    let table = multipole_components_with(rho, basis);
    let k_max = table.max_rank();
    let norm = ((n as f64 + 1.0) / (4.0 * std::f64::consts::PI)).sqrt();
    let theta_grid: Vec<f64> = (0..n_theta).map(|i| i as f64 * std::f64::consts::PI / (n_theta - 1) as f64).collect();
    let phi_grid: Vec<f64> = (0..n_phi).map(|l| 2.0 * std::f64::consts::PI * l as f64 / n_phi as f64).collect();
    let phases: Vec<Vec<C64>> = phi_grid
        .iter()
        .map(|&phi| (0..=k_max).map(|q| C64::from_polar(1.0, q as f64 * phi)).collect())
        .collect();

    let rows: Vec<(Vec<f64>, f64)> = theta_grid
        .par_iter()
        .map(|&theta| {
            let p = normalized_legendre(k_max, theta);
            // F_q(θ) = Σ_k ρ_kq P̄_kq(θ), with P̄_{k,-q} = (-1)^q P̄_kq
            let mut f_pos = vec![C64::new(0.0, 0.0); k_max + 1];
            let mut f_neg = vec![C64::new(0.0, 0.0); k_max + 1];
            for k in 0..=k_max {
                for q in 0..=k {
                    f_pos[q] += table.get(k, q as i64) * p[k][q];
                    if q > 0 {
                        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                        f_neg[q] += table.get(k, -(q as i64)) * (sign * p[k][q]);
                    }
                }
            }
            let mut residue = 0.0f64;
            let row = phases
                .iter()
                .map(|ph| {
                    let mut w = f_pos[0];
                    for q in 1..=k_max {
                        w += f_pos[q] * ph[q] + f_neg[q] * ph[q].conj();
                    }
                    residue = residue.max((w.im * norm).abs());
                    w.re * norm
                })
                .collect();
            (row, residue)
        })
        .collect();
    let max_imag_residue = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    if max_imag_residue > WIGNER_IMAG_TOL {
        return Err(Error::Numerical(format!(
            "Wigner function has imaginary residue {max_imag_residue:e}; state is not Hermitian"
        )));
    }
    let values = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(WignerMap { theta_grid, phi_grid, values, max_imag_residue, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{build_spin_operators, expectation};

    #[test]
    fn occupations_of_simple_states() {
        let down = occupation_distribution(&DensityMatrix::all_down(5).unwrap());
        assert_eq!(down.probabilities[5], 1.0);
        assert_eq!(down.mean_m(), -2.5);
        let mixed = occupation_distribution(&DensityMatrix::maximally_mixed(5));
        assert!(mixed.probabilities.iter().all(|p| (p - 0.2).abs() < 1e-15));
        assert!((mixed.participation_ratio() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn local_maxima_detection() {
        let dist = OccupationDistribution {
            m_values: vec![2.0, 1.0, 0.0, -1.0, -2.0],
            probabilities: vec![0.3, 0.1, 0.05, 0.15, 0.4],
        };
        assert_eq!(dist.local_maxima(1e-6), vec![0, 4]);
    }

    #[test]
    fn tensor_operators_are_orthonormal() {
        let n = 6;
        let basis = TensorBasis::new(n);
        let ops: Vec<CMatrix> = (0..=n).flat_map(|k| (-(k as i64)..=k as i64).map(move |q| (k, q))).map(|(k, q)| basis.operator(k, q)).collect();
        for (a, ta) in ops.iter().enumerate() {
            for (b, tb) in ops.iter().enumerate() {
                let g = (ta.adjoint() * tb).trace();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((g - C64::new(expect, 0.0)).norm() < 1e-12, "{a} {b} {g}");
            }
        }
    }

    #[test]
    fn negative_q_operators_follow_clebsch_gordan() {
        let n = 4;
        let j = n as f64 / 2.0;
        let basis = TensorBasis::new(n);
        for k in 0..=n {
            for q in -(k as i64)..=k as i64 {
                let t = basis.operator(k, q);
                for a in 0..=n {
                    for b in 0..=n {
                        let (m, mp) = (j - a as f64, j - b as f64);
                        let phase = if ((j - mp).round() as i64) % 2 == 0 { 1.0 } else { -1.0 };
                        let direct = phase * crate::clebsch::clebsch_gordan(j, m, j, -mp, k as f64, q as f64);
                        assert!((t[(a, b)].re - direct).abs() < 1e-14, "k={k} q={q} a={a} b={b}");
                    }
                }
            }
        }
    }

    #[test]
    fn rank_one_tensor_is_sz() {
        // j = 1: T_10 = Sz / √2
        let basis = TensorBasis::new(2);
        let ops = build_spin_operators(2).unwrap();
        let t10 = basis.operator(1, 0);
        assert!((t10 - ops.s_z.scale(std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-14);
        let up = DensityMatrix::dicke(2, 0).unwrap();
        let table = multipole_components(&up);
        assert!((table.get(1, 0) - C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn multipole_symmetries() {
        let n = 5;
        let rho = DensityMatrix::coherent(n, 0.7, 1.3).unwrap();
        let t = multipole_components(&rho);
        assert!((t.get(0, 0) - C64::new(1.0 / (n as f64 + 1.0).sqrt(), 0.0)).norm() < 1e-14);
        for k in 0..=n {
            for q in 0..=k as i64 {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                assert!((t.get(k, -q) - t.get(k, q).conj() * sign).norm() < 1e-14);
            }
        }
        let mixed = multipole_components(&DensityMatrix::maximally_mixed(n + 1));
        for k in 1..=n {
            for q in -(k as i64)..=k as i64 {
                assert!(mixed.get(k, q).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn legendre_matches_closed_forms() {
        let theta: f64 = 0.83;
        let (x, s) = (theta.cos(), theta.sin());
        let p = normalized_legendre(3, theta);
        let pi = std::f64::consts::PI;
        assert!((p[1][0] - (3.0 / (4.0 * pi)).sqrt() * x).abs() < 1e-15);
        assert!((p[1][1] + (3.0 / (8.0 * pi)).sqrt() * s).abs() < 1e-15);
        assert!((p[2][0] - (5.0 / (16.0 * pi)).sqrt() * (3.0 * x * x - 1.0)).abs() < 1e-15);
        assert!((p[2][2] - (15.0 / (32.0 * pi)).sqrt() * s * s).abs() < 1e-15);
        assert!((p[3][1] + (21.0 / (64.0 * pi)).sqrt() * s * (5.0 * x * x - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn wigner_of_maximally_mixed_is_flat() {
        let w = spin_wigner(&DensityMatrix::maximally_mixed(9), 33, 64).unwrap();
        let flat = 1.0 / (4.0 * std::f64::consts::PI);
        assert!(w.values.iter().all(|v| (v - flat).abs() < 1e-13));
        assert!((w.integral() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wigner_peaks_at_coherent_direction() {
        let n = 20;
        let w = spin_wigner(&DensityMatrix::all_down(n).unwrap(), 61, 48).unwrap();
        let (i, _) = w.argmax();
        assert_eq!(i, 60);
        assert!((w.integral() - 1.0).abs() < 1e-10);
        assert!(w.warnings.is_empty());
    }

    #[test]
    fn wigner_rotates_with_state() {
        let n = 10;
        let n_phi = 72;
        let rho = DensityMatrix::coherent(n, 1.0, 0.3).unwrap();
        // rotate by 5 grid steps about z
        let alpha = 5.0 * 2.0 * std::f64::consts::PI / n_phi as f64;
        let ops = build_spin_operators(n).unwrap();
        let u = CMatrix::from_diagonal(&ops.s_z.diagonal().map(|m| C64::from_polar(1.0, -alpha * m.re)));
        let rotated = DensityMatrix::new(&u * rho.matrix() * u.adjoint()).unwrap();
        let w0 = spin_wigner(&rho, 31, n_phi).unwrap();
        let w1 = spin_wigner(&rotated, 31, n_phi).unwrap();
        for i in 0..31 {
            for l in 0..n_phi {
                assert!((w1.at(i, (l + 5) % n_phi) - w0.at(i, l)).abs() < 1e-12);
            }
        }
        let sz = expectation(&ops.s_z, &rotated).unwrap().re;
        assert!((sz - expectation(&ops.s_z, &rho).unwrap().re).abs() < 1e-12);
    }

    #[test]
    fn coarse_grid_warns_and_tiny_grid_fails() {
        let rho = DensityMatrix::all_down(20).unwrap();
        assert!(!spin_wigner(&rho, 17, 17).unwrap().warnings.is_empty());
        assert!(spin_wigner(&rho, 8, 64).is_err());
    }

    #[test]
    fn negativity_regions_wrap_in_phi() {
        let mut w = spin_wigner(&DensityMatrix::maximally_mixed(3), 16, 16).unwrap();
        for i in [5, 6] {
            for l in [0, 15] {
                w.values[i * 16 + l] = -1.0;
            }
        }
        w.values[10 * 16 + 8] = -0.5;
        let regions = w.negative_regions(NEGATIVITY_THRESHOLD);
        assert_eq!(regions.len(), 2);
        assert_eq!(regions[0].cells, 4);
        assert_eq!(regions[1].min_value, -0.5);
    }

    #[test]
    fn binary_layout() {
        let w = spin_wigner(&DensityMatrix::maximally_mixed(3), 16, 20).unwrap();
        let mut buf = Vec::new();
        w.write_bin(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"SQWG");
        assert_eq!(buf.len(), 4 + 4 + 16 + 32 + 8 * 16 * 20);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 16);
    }
}
