//! Time-frequency checks: short-time Fourier transform, Wigner distribution
//! and Gabor matrix of `Ŝ` with the Gaussian window `φ`.
//!
//! Conventions:
//!
//! ```text
//! V_g f(x, ξ) = ∫ f(t) conj(g(t − x)) e^{−2πit·ξ} dt
//! W f(x, ξ)   = ∫ f(x + τ/2) conj(f(x − τ/2)) e^{−2πiτ·ξ} dτ
//! π(x, ξ) f(t) = e^{2πit·ξ} f(t − x)
//! ```

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::oracle::{self, ChirpZ, Grid, OracleError, Result, SampledField, Transforms};
use crate::symplectic::{symplectic_inverse, word_product, GeneratorWord, Tolerances};

/// `(x, ξ) ∈ ℝ²ᵈ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpacePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhaseSpacePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Self {
        Self { x, xi }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.x.iter().chain(&self.xi).copied().collect()
    }

    pub fn from_slice(z: &[f64]) -> Self {
        let d = z.len() / 2;
        Self::new(z[..d].to_vec(), z[d..].to_vec())
    }
}

/// `π(z)φ` sampled on `grid`.
pub fn time_frequency_gaussian(grid: &Grid, z: &PhaseSpacePoint) -> Result<SampledField> {
    let phi = oracle::sample_gaussian(grid, &z.x)?;
    let mut out = phi;
    for (i, v) in out.values.iter_mut().enumerate() {
        let t = grid.point(i);
        let phase: f64 = t.iter().zip(&z.xi).map(|(a, b)| a * b).sum();
        *v *= Complex64::from_polar(1.0, 2.0 * PI * phase);
    }
    Ok(out)
}

/// `V_g f(z)` by direct quadrature; `g(· − x)` is obtained by a Fourier
/// shift.
pub fn stft(f: &SampledField, g: &SampledField, z: &PhaseSpacePoint) -> Result<Complex64> {
    if f.grid != g.grid {
        return Err(OracleError::GridMismatch);
    }
    let plan = Transforms::new(&f.grid);
    stft_with(&plan, f, g, z)
}

fn stft_with(
    plan: &Transforms,
    f: &SampledField,
    g: &SampledField,
    z: &PhaseSpacePoint,
) -> Result<Complex64> {
    let grid = plan.grid();
    let shifted = plan.translate(g, &z.x)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, (a, b)) in f.values.iter().zip(&shifted.values).enumerate() {
        let t = grid.point(i);
        let phase: f64 = t.iter().zip(&z.xi).map(|(p, q)| p * q).sum();
        acc += a * b.conj() * Complex64::from_polar(1.0, -2.0 * PI * phase);
    }
    Ok(acc * grid.cell())
}

/// Wigner distribution of a one-dimensional field on the `n × n` grid with
/// axis 0 = `x` and axis 1 = `ξ`, both sampled at the points of `f.grid`.
///
/// At `x = t_k` the lag integral is discretized with `τ = 2mh`:
/// `W f(t_k, ξ) = 2h Σ_m f_{k+m} conj(f_{k−m}) e^{−4πimhξ}`, evaluated on
/// the ξ-grid by a chirp-z transform.
pub fn wigner(f: &SampledField) -> Result<SampledField> {
    let g = f.grid;
    if g.dim != 1 {
        return Err(OracleError::DimensionTooLarge(g.dim));
    }
    let n = g.n;
    let h = g.spacing();
    let half = (n / 2) as i64;
    // lag index m = p − n/2, lag τ = 2mh
    let czt = ChirpZ::new(n, -(n as f64) * h, 2.0 * h, g.origin(), h);
    let rows: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for (p, slot) in line.iter_mut().enumerate() {
                let m = p as i64 - half;
                let (plus, minus) = (k as i64 + m, k as i64 - m);
                if (0..n as i64).contains(&plus) && (0..n as i64).contains(&minus) {
                    *slot = f.values[plus as usize] * f.values[minus as usize].conj();
                }
            }
            czt.process(&mut line);
            line.iter().map(|v| v * (2.0 * h)).collect()
        })
        .collect();
    let grid = Grid::new(2, n, g.extent)?;
    Ok(SampledField {
        grid,
        values: rows.concat(),
    })
}

/// `W f(x, ξ)` at an arbitrary point of a one-dimensional field.
fn wigner_at(plan: &Transforms, f: &SampledField, x: f64, xi: f64) -> Result<Complex64> {
    let g = plan.grid();
    let n = g.n;
    let h = g.spacing();
    // Shift by the sub-grid part of x only, so nothing wraps around the
    // periodic window; the integer part is an index offset.
    let k0 = ((x - g.origin()) / h).round() as i64;
    let frac = x - (g.origin() + k0 as f64 * h);
    let fine = plan.translate(f, &[-frac])?;
    let at = |i: i64| (0..n as i64).contains(&i).then(|| fine.values[i as usize]);
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..n as i64 {
        let (Some(a), Some(b)) = (at(k0 + m), at(k0 - m)) else {
            if m > 0 && at(k0 + m).is_none() && at(k0 - m).is_none() {
                break;
            }
            continue;
        };
        let phase = -4.0 * PI * m as f64 * h * xi;
        acc += if m == 0 {
            a * b.conj()
        } else {
            // the ±m terms together
            a * b.conj() * Complex64::from_polar(1.0, phase)
                + b * a.conj() * Complex64::from_polar(1.0, -phase)
        };
    }
    Ok(acc * (2.0 * h))
}

/// Outcome of a time-frequency identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfReport {
    pub identity: String,
    pub residual: f64,
    pub points: usize,
    pub grid: Grid,
}

/// `W(Ŝf) = W f ∘ S⁻¹` for `d = 1`.
///
/// `W(Ŝf)` is computed on the full grid; the right-hand side is evaluated
/// pointwise at every `stride`-th grid point where either side exceeds
/// `10⁻⁶` of the peak. The residual is the largest absolute deviation.
pub fn check_wigner_covariance(
    w: &GeneratorWord,
    f: &SampledField,
    stride: usize,
) -> Result<TfReport> {
    let grid = f.grid;
    if grid.dim != 1 {
        return Err(OracleError::DimensionTooLarge(grid.dim));
    }
    let tol = Tolerances::default();
    let s_inv = symplectic_inverse(&word_product(w, &tol)?);
    let plan = Transforms::new(&grid);
    let image = plan.apply_word(w, f)?;
    let lhs = wigner(&image)?;
    let peak = lhs.max_abs();
    let n = grid.n;
    let stride = stride.max(1);
    let candidates: Vec<(usize, usize)> = (0..n)
        .step_by(stride)
        .flat_map(|i| (0..n).step_by(stride).map(move |j| (i, j)))
        .collect();
    let deviations: Vec<Option<f64>> = candidates
        .par_iter()
        .map(|&(i, j)| -> Result<Option<f64>> {
            let (x, xi) = (grid.coord(i), grid.coord(j));
            let back = s_inv.apply(&[x, xi]);
            let left = lhs.values[i * n + j];
            // Points mapped outside the grid carry no resolvable mass.
            if !grid.contains_with_margin(&back[..1], 0.0) {
                return Ok((left.norm() > 1e-6 * peak).then_some(left.norm()));
            }
            let right = wigner_at(&plan, f, back[0], back[1])?;
            if left.norm().max(right.norm()) <= 1e-6 * peak {
                return Ok(None);
            }
            Ok(Some((left - right).norm()))
        })
        .collect::<Result<_>>()?;
    let used: Vec<f64> = deviations.into_iter().flatten().collect();
    Ok(TfReport {
        identity: "wigner-covariance".into(),
        residual: used.iter().copied().fold(0.0, f64::max),
        points: used.len(),
        grid,
    })
}

/// `⟨Ŝπ(z)φ, π(v)φ⟩` for every `z` (rows) and `v` (columns).
pub fn gabor_matrix_batch(
    w: &GeneratorWord,
    grid: &Grid,
    zs: &[PhaseSpacePoint],
    vs: &[PhaseSpacePoint],
) -> Result<DMatrix<Complex64>> {
    let plan = Transforms::new(grid);
    let targets: Vec<SampledField> = vs
        .iter()
        .map(|v| time_frequency_gaussian(grid, v))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<Complex64>> = zs
        .par_iter()
        .map(|z| -> Result<Vec<Complex64>> {
            let image = plan.apply_word(w, &time_frequency_gaussian(grid, z)?)?;
            targets.iter().map(|t| image.inner(t)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(DMatrix::from_fn(zs.len(), vs.len(), |i, j| rows[i][j]))
}

/// Single Gabor matrix entry `h(z, v) = ⟨Ŝπ(z)φ, π(v)φ⟩`.
pub fn gabor_matrix(
    w: &GeneratorWord,
    grid: &Grid,
    z: &PhaseSpacePoint,
    v: &PhaseSpacePoint,
) -> Result<Complex64> {
    Ok(gabor_matrix_batch(w, grid, std::slice::from_ref(z), std::slice::from_ref(v))?[(0, 0)])
}

/// `|h(z, Sz + u)|` over many `z` for a fixed offset `u`; returns the
/// magnitudes and their relative spread `(max − min) / max`.
pub fn gabor_offset_spread(
    w: &GeneratorWord,
    grid: &Grid,
    zs: &[PhaseSpacePoint],
    u: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let s = word_product(w, &Tolerances::default())?;
    let mags: Vec<f64> = zs
        .par_iter()
        .map(|z| -> Result<f64> {
            let sz = s.apply(&z.to_vec());
            let v: Vec<f64> = sz.iter().zip(u).map(|(a, b)| a + b).collect();
            Ok(gabor_matrix(w, grid, z, &PhaseSpacePoint::from_slice(&v))?.norm())
        })
        .collect::<Result<_>>()?;
    let max = mags.iter().copied().fold(0.0, f64::max);
    let min = mags.iter().copied().fold(f64::INFINITY, f64::min);
    let spread = if max > 0.0 { (max - min) / max } else { 0.0 };
    Ok((mags, spread))
}

/// Fitted profile `|h(z, v)| ≈ e^{a − π uᵀRu}`, `u = v − Sz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaborProfile {
    pub log_amplitude: f64,
    /// Row-major `2d × 2d`.
    pub form: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Largest relative deviation of the fitted profile from `|h|`.
    pub fit_residual: f64,
    /// Largest deviation of `|h(z, v)|` from `|V_φ(Ŝφ)(v − Sz)|`, relative to
    /// the peak.
    pub window_residual: f64,
    pub points: usize,
}

/// Check that `|h(z, v)|` is a positive-definite Gaussian in `v − Sz` and
/// equals `|V_φ(Ŝφ)(v − Sz)|`, for `d = 1`.
pub fn check_gabor_kernel_identity(
    w: &GeneratorWord,
    grid: &Grid,
    pairs: &[(PhaseSpacePoint, PhaseSpacePoint)],
) -> Result<(TfReport, GaborProfile)> {
    if grid.dim != 1 {
        return Err(OracleError::DimensionTooLarge(grid.dim));
    }
    let s = word_product(w, &Tolerances::default())?;
    let plan = Transforms::new(grid);
    let phi = oracle::sample_gaussian(grid, &[0.0])?;
    let psi_source = plan.apply_word(w, &phi)?;
    let samples: Vec<(Vec<f64>, f64, f64)> = pairs
        .par_iter()
        .map(|(z, v)| -> Result<(Vec<f64>, f64, f64)> {
            let h = gabor_matrix(w, grid, z, v)?.norm();
            let sz = s.apply(&z.to_vec());
            let u: Vec<f64> = v.to_vec().iter().zip(&sz).map(|(a, b)| a - b).collect();
            let psi = stft_with(&plan, &psi_source, &phi, &PhaseSpacePoint::from_slice(&u))?.norm();
            Ok((u, h, psi))
        })
        .collect::<Result<_>>()?;
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.1));
    let kept: Vec<&(Vec<f64>, f64, f64)> = samples.iter().filter(|s| s.1 > 1e-6 * peak).collect();
    if kept.len() < oracle::MIN_FIT_SAMPLES {
        return Err(OracleError::InsufficientSamples {
            retained: kept.len(),
            required: oracle::MIN_FIT_SAMPLES,
        });
    }
    // log|h| = a − π(r₀₀u₀² + 2r₀₁u₀u₁ + r₁₁u₁²)
    let design = DMatrix::from_fn(kept.len(), 4, |i, j| {
        let u = &kept[i].0;
        match j {
            0 => 1.0,
            1 => -PI * u[0] * u[0],
            2 => -2.0 * PI * u[0] * u[1],
            _ => -PI * u[1] * u[1],
        }
    });
    let rhs = DVector::from_iterator(kept.len(), kept.iter().map(|s| s.1.ln()));
    let normal = design.transpose() * &design;
    let coef = normal
        .lu()
        .solve(&(design.transpose() * &rhs))
        .ok_or(OracleError::InsufficientSamples {
            retained: kept.len(),
            required: oracle::MIN_FIT_SAMPLES,
        })?;
    let r = DMatrix::from_row_slice(2, 2, &[coef[1], coef[2], coef[2], coef[3]]);
    let min_eigenvalue = linalg::sym_eigen_ascending(&r).0[0];
    let fit = &design * &coef;
    let fit_residual = kept
        .iter()
        .enumerate()
        .map(|(i, s)| (fit[i].exp() - s.1).abs() / s.1)
        .fold(0.0, f64::max);
    let window_residual = samples
        .iter()
        .map(|s| (s.1 - s.2).abs() / peak)
        .fold(0.0, f64::max);
    let profile = GaborProfile {
        log_amplitude: coef[0],
        form: r.transpose().as_slice().to_vec(),
        min_eigenvalue,
        fit_residual,
        window_residual,
        points: kept.len(),
    };
    let report = TfReport {
        identity: "gabor-kernel".into(),
        residual: fit_residual.max(window_residual),
        points: kept.len(),
        grid: *grid,
    };
    Ok((report, profile))
}
