//! Grid-based numerical oracle.
//!
//! Metaplectic operators are applied to sampled functions factor by factor:
//! the Fourier transform by a chirp-z transform that maps the grid onto
//! itself, chirps pointwise, dilations by trigonometric interpolation. The
//! smoothed kernel is then sampled through `k̃(x,y) = ⟨Ŝ(τ_yφ), τ_xφ⟩`.
//!
//! Phases are never compared; the oracle is used at the level of magnitudes.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::SmoothedKernelForm;
use crate::symplectic::{Generator, GeneratorWord, SymplecticError, Tolerances};

/// Functions are treated as supported where `|f| > SUPPORT_REL · max|f|`.
const SUPPORT_REL: f64 = 1e-12;
/// Spectral content below this fraction of the peak is ignored when
/// estimating bandwidth.
const BAND_REL: f64 = 1e-10;
/// Relative magnitude tolerated in the outer band of the grid, in space and
/// in frequency.
const EDGE_REL: f64 = 1e-8;
/// Outer band width as a fraction of the axis.
const EDGE_FRACTION: usize = 32;
/// Minimal distance of a Gaussian center from the grid boundary.
pub const CENTER_MARGIN: f64 = 3.0;
/// Tail mass above which a quadrature warning is issued.
const TAIL_WARN: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("oracle supports d <= 2, got d = {0}")]
    DimensionTooLarge(usize),
    #[error("dimension mismatch: grid has d = {grid}, input has d = {input}")]
    DimensionMismatch { grid: usize, input: usize },
    #[error("center {center:?} is closer than {margin} to the grid boundary")]
    CenterOutOfRange { center: Vec<f64>, margin: f64 },
    #[error(
        "aliasing risk at factor {step}: frequency {required:.3} exceeds Nyquist {nyquist:.3}"
    )]
    AliasRisk {
        step: usize,
        required: f64,
        nyquist: f64,
    },
    #[error("field leaves the grid at factor {step} (edge magnitude {edge:.3e} relative)")]
    ExtentOverflow { step: usize, edge: f64 },
    #[error("only {retained} usable samples; at least {required} needed")]
    InsufficientSamples { retained: usize, required: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
}

pub type Result<T, E = OracleError> = std::result::Result<T, E>;

/// Uniform grid on `[−L/2, L/2)^d` with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub n: usize,
    pub extent: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, extent: f64) -> Result<Self> {
        if dim == 0 {
            return Err(OracleError::InvalidGrid("dimension must be positive".into()));
        }
        if dim > 2 {
            return Err(OracleError::DimensionTooLarge(dim));
        }
        if n < 64 || !n.is_power_of_two() {
            return Err(OracleError::InvalidGrid(format!(
                "points per axis must be a power of two >= 64, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 2.0 * CENTER_MARGIN) {
            return Err(OracleError::InvalidGrid(format!(
                "extent must be finite and larger than {}, got {extent}",
                2.0 * CENTER_MARGIN
            )));
        }
        Ok(Self { dim, n, extent })
    }

    /// `n = 1024, L = 16` for `d = 1`; `n = 256, L = 12` for `d = 2`.
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            1 => Self::new(1, 1024, 16.0),
            2 => Self::new(2, 256, 12.0),
            d => Err(OracleError::DimensionTooLarge(d)),
        }
    }

    pub fn spacing(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn origin(&self) -> f64 {
        -0.5 * self.extent
    }

    pub fn coord(&self, k: usize) -> f64 {
        self.origin() + k as f64 * self.spacing()
    }

    pub fn nyquist(&self) -> f64 {
        0.5 / self.spacing()
    }

    /// Total number of samples, `n^d`.
    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^d`.
    pub fn cell(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates of sample `index`. For `d = 2` the index is `i₀·n + i₁`.
    pub fn point(&self, index: usize) -> Vec<f64> {
        match self.dim {
            1 => vec![self.coord(index)],
            _ => vec![self.coord(index / self.n), self.coord(index % self.n)],
        }
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim {
            return Err(OracleError::DimensionMismatch {
                grid: self.dim,
                input: d,
            });
        }
        Ok(())
    }

    /// Whether `center` keeps the margin from every face of the grid.
    pub fn contains_with_margin(&self, center: &[f64], margin: f64) -> bool {
        let half = 0.5 * self.extent;
        center.iter().all(|c| c.abs() <= half - margin)
    }
}

/// Complex samples of a function on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    pub grid: Grid,
    pub values: Vec<Complex64>,
}

impl SampledField {
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self { grid, values }
    }

    /// Discrete `L²` norm `(h^d Σ|f|²)^{1/2}`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.cell() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `⟨f, g⟩ = h^d Σ f·conj(g)`.
    pub fn inner(&self, other: &SampledField) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(OracleError::GridMismatch);
        }
        let s: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .sum();
        Ok(s * self.grid.cell())
    }

    /// Largest magnitude in the outer band of the grid, relative to the peak.
    pub fn edge_mass(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let n = self.grid.n;
        let band = (n / EDGE_FRACTION).max(1);
        let outer = |k: usize| k < band || k >= n - band;
        let edge = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| match self.grid.dim {
                1 => outer(*i),
                _ => outer(i / n) || outer(i % n),
            })
            .fold(0.0f64, |m, (_, v)| m.max(v.norm()));
        edge / max
    }
}

/// `e^{−π|t − center|²}` on the grid.
pub fn sample_gaussian(grid: &Grid, center: &[f64]) -> Result<SampledField> {
    grid.check_dim(center.len())?;
    if !grid.contains_with_margin(center, CENTER_MARGIN) {
        return Err(OracleError::CenterOutOfRange {
            center: center.to_vec(),
            margin: CENTER_MARGIN,
        });
    }
    Ok(SampledField::from_fn(*grid, |t| {
        let r2: f64 = t.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum();
        Complex64::new((-PI * r2).exp(), 0.0)
    }))
}

/// Bluestein evaluation of `X_j = Σ_k x_k e^{−2πi (s₀ + k·ds)(o₀ + j·do)}` for
/// `j, k = 0, …, n − 1`.
#[derive(Clone)]
pub struct ChirpZ {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel_hat: Vec<Complex64>,
}

impl ChirpZ {
    pub fn new(n: usize, s0: f64, ds: f64, o0: f64, dout: f64) -> Self {
        let m = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        let ifft = planner.plan_fft_inverse(m);
        let alpha = ds * dout;
        let cis = |theta: f64| Complex64::from_polar(1.0, theta);
        // jk = (j² + k² − (j − k)²)/2 turns the sum into a convolution.
        let pre = (0..n)
            .map(|k| {
                let k = k as f64;
                cis(-2.0 * PI * ds * o0 * k - PI * alpha * k * k)
            })
            .collect();
        let scale = 1.0 / m as f64;
        let post = (0..n)
            .map(|j| {
                let j = j as f64;
                cis(-2.0 * PI * (s0 * o0 + s0 * dout * j) - PI * alpha * j * j) * scale
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); m];
        for k in 0..n {
            let w = cis(PI * alpha * (k * k) as f64);
            kernel[k] = w;
            if k > 0 {
                kernel[m - k] = w;
            }
        }
        fft.process(&mut kernel);
        Self {
            n,
            fft,
            ifft,
            pre,
            post,
            kernel_hat: kernel,
        }
    }

    /// Transform `line` in place.
    pub fn process(&self, line: &mut [Complex64]) {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.kernel_hat.len()];
        for k in 0..self.n {
            buf[k] = line[k] * self.pre[k];
        }
        self.fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.ifft.process(&mut buf);
        for j in 0..self.n {
            line[j] = buf[j] * self.post[j];
        }
    }
}

/// Precomputed transforms for one grid.
///
/// The Fourier transform evaluates `h Σ_k f_k e^{−2πi ξ_j t_k}` with
/// `ξ_j = t_j`, i.e. the continuous transform sampled back on the same grid.
#[derive(Clone)]
pub struct Transforms {
    grid: Grid,
    fft_n: Arc<dyn Fft<f64>>,
    ifft_n: Arc<dyn Fft<f64>>,
    czt: ChirpZ,
}

impl std::fmt::Debug for Transforms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Transforms").field("grid", &self.grid).finish()
    }
}

impl Transforms {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n;
        let mut planner = FftPlanner::<f64>::new();
        let h = grid.spacing();
        let a = grid.origin();
        Self {
            grid: *grid,
            fft_n: planner.plan_fft_forward(n),
            ifft_n: planner.plan_fft_inverse(n),
            czt: ChirpZ::new(n, a, h, a, h),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn fourier_line(&self, line: &mut [Complex64]) {
        self.czt.process(line);
        let h = self.grid.spacing();
        line.iter_mut().for_each(|v| *v *= h);
    }

    /// `f(t − shift)` by a phase ramp on the discrete Fourier coefficients.
    /// The grid is treated as periodic, so `f` must be negligible wherever
    /// the shift wraps it around.
    pub fn translate(&self, f: &SampledField, shift: &[f64]) -> Result<SampledField> {
        self.grid.check_dim(shift.len())?;
        let g = self.grid;
        let n = g.n;
        let mut out = f.clone();
        for (axis, &sh) in shift.iter().enumerate() {
            if sh == 0.0 {
                continue;
            }
            let ramp: Vec<Complex64> = (0..n)
                .map(|k| {
                    let m = if k >= n / 2 { k as f64 - n as f64 } else { k as f64 };
                    let phase = -2.0 * PI * m * sh / g.extent;
                    // The Nyquist mode is real; keep it real under the shift.
                    if k == n / 2 {
                        Complex64::new(phase.cos(), 0.0)
                    } else {
                        Complex64::from_polar(1.0, phase)
                    }
                })
                .collect();
            let inv = 1.0 / n as f64;
            for_each_line(&mut out.values, &g, axis, |line| {
                self.fft_n.process(line);
                for (v, r) in line.iter_mut().zip(&ramp) {
                    *v *= r * inv;
                }
                self.ifft_n.process(line);
            });
        }
        Ok(out)
    }

    /// Continuous Fourier transform, sampled on the same grid.
    pub fn fourier(&self, f: &SampledField) -> SampledField {
        let mut out = f.clone();
        for axis in 0..self.grid.dim {
            for_each_line(&mut out.values, &self.grid, axis, |line| self.fourier_line(line));
        }
        out
    }

    /// Trigonometric-interpolation coefficients of a line, in FFT order,
    /// divided by `n`.
    fn interp_coeffs(&self, line: &[Complex64]) -> Vec<Complex64> {
        let mut c = line.to_vec();
        self.fft_n.process(&mut c);
        let inv = 1.0 / self.grid.n as f64;
        c.iter_mut().for_each(|v| *v *= inv);
        c
    }

    /// Evaluate the trigonometric interpolant of `line` at arbitrary points;
    /// points outside `[−L/2, L/2)` give zero.
    fn resample_line(&self, line: &[Complex64], points: &[f64]) -> Vec<Complex64> {
        let g = &self.grid;
        let n = g.n;
        let h = g.spacing();
        let a = g.origin();
        let coeffs = self.interp_coeffs(line);
        let half = n / 2;
        points
            .iter()
            .map(|&s| {
                let u = (s - a) / h;
                if u < -1e-9 || u >= n as f64 - 1e-9 {
                    return Complex64::new(0.0, 0.0);
                }
                let nearest = u.round();
                if (u - nearest).abs() < 1e-9 {
                    return line[(nearest as usize).min(n - 1)];
                }
                // Σ_{m=−n/2+1}^{n/2−1} c_m ω^m + c_{n/2}·cos(π n u / n)
                let theta = 2.0 * PI * u / n as f64;
                let omega = Complex64::from_polar(1.0, theta);
                let mut p = Complex64::from_polar(1.0, -theta * (half as f64 - 1.0));
                let mut acc = Complex64::new(0.0, 0.0);
                for m in -(half as i64 - 1)..=(half as i64 - 1) {
                    let idx = if m < 0 { (m + n as i64) as usize } else { m as usize };
                    acc += coeffs[idx] * p;
                    p *= omega;
                }
                acc + coeffs[half] * (theta * half as f64).cos()
            })
            .collect()
    }

    /// Largest frequency per axis carrying spectral weight above `BAND_REL`
    /// of the peak, together with the spectral edge magnitude.
    fn bandwidth(&self, f: &SampledField) -> (Vec<f64>, f64) {
        let g = &self.grid;
        let n = g.n;
        let mut spectrum = f.values.clone();
        for axis in 0..g.dim {
            for_each_line(&mut spectrum, g, axis, |line| self.fft_n.process(line));
        }
        let max = spectrum.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
        let freq = |k: usize| {
            let k = k as i64;
            let m = if k >= n as i64 / 2 { k - n as i64 } else { k };
            m as f64 / g.extent
        };
        let band = (n / EDGE_FRACTION).max(1);
        let near_nyquist = |k: usize| {
            let m = if k >= n / 2 { n - k } else { k };
            m + band > n / 2
        };
        let mut bw = vec![0.0; g.dim];
        let mut edge: f64 = 0.0;
        if max == 0.0 {
            return (bw, 0.0);
        }
        for (i, v) in spectrum.iter().enumerate() {
            let mag = v.norm() / max;
            let ks: Vec<usize> = match g.dim {
                1 => vec![i],
                _ => vec![i / n, i % n],
            };
            if mag > BAND_REL {
                for (axis, &k) in ks.iter().enumerate() {
                    bw[axis] = f64::max(bw[axis], freq(k).abs());
                }
            }
            if ks.iter().any(|&k| near_nyquist(k)) {
                edge = edge.max(mag);
            }
        }
        (bw, edge)
    }

    /// `f ↦ e^{iπPt·t} f`, refusing when the chirp's local frequency plus the
    /// bandwidth of `f` exceeds Nyquist on the support of `f`.
    pub fn chirp(&self, p: &DMatrix<f64>, f: &SampledField, step: usize) -> Result<SampledField> {
        let g = &self.grid;
        let (bw, _) = self.bandwidth(f);
        let max = f.max_abs();
        let mut local = vec![0.0f64; g.dim];
        for (i, v) in f.values.iter().enumerate() {
            if v.norm() > SUPPORT_REL * max {
                let t = DVector::from_vec(g.point(i));
                let pt = p * t;
                for axis in 0..g.dim {
                    local[axis] = local[axis].max(pt[axis].abs());
                }
            }
        }
        let required = (0..g.dim).map(|k| local[k] + bw[k]).fold(0.0, f64::max);
        if required > g.nyquist() {
            return Err(OracleError::AliasRisk {
                step,
                required,
                nyquist: g.nyquist(),
            });
        }
        let mut out = f.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            let t = DVector::from_vec(g.point(i));
            let q = (p * &t).dot(&t);
            *v *= Complex64::from_polar(1.0, PI * q);
        }
        Ok(out)
    }

    /// `f ↦ |det E|^{1/2} f(E·)`.
    ///
    /// In two dimensions `E` is split as `E = L·Δ·U` (after a column swap when
    /// that improves the pivot) so that every step resamples along one axis.
    pub fn dilation(&self, e: &DMatrix<f64>, f: &SampledField) -> SampledField {
        let g = self.grid;
        let det = e.determinant().abs();
        let mut out = match g.dim {
            1 => {
                let pts: Vec<f64> = (0..g.n).map(|k| e[(0, 0)] * g.coord(k)).collect();
                SampledField {
                    grid: g,
                    values: self.resample_line(&f.values, &pts),
                }
            }
            _ => self.dilation_2d(e, f),
        };
        let s = det.sqrt();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    fn dilation_2d(&self, e: &DMatrix<f64>, f: &SampledField) -> SampledField {
        let g = self.grid;
        let n = g.n;
        let swap = e[(0, 0)].abs() < e[(0, 1)].abs();
        let e = if swap {
            DMatrix::from_row_slice(2, 2, &[e[(0, 1)], e[(0, 0)], e[(1, 1)], e[(1, 0)]])
        } else {
            e.clone()
        };
        let p = e[(0, 0)];
        let l = e[(1, 0)] / p;
        let q = e[(0, 1)] / p;
        let u = e[(1, 1)] - e[(1, 0)] * e[(0, 1)] / p;
        let coords: Vec<f64> = (0..n).map(|k| g.coord(k)).collect();
        let mut v = f.values.clone();

        // f(t₀, l·t₀ + t₁)
        if l != 0.0 {
            for i0 in 0..n {
                let row = &mut v[i0 * n..(i0 + 1) * n];
                let pts: Vec<f64> = coords.iter().map(|t1| t1 + l * coords[i0]).collect();
                let new = self.resample_line(row, &pts);
                row.copy_from_slice(&new);
            }
        }
        // f(p·t₀, u·t₁)
        let scaled = |s: f64| -> Vec<f64> { coords.iter().map(|t| s * t).collect() };
        if p != 1.0 {
            let pts = scaled(p);
            for_each_line(&mut v, &g, 0, |line| {
                let new = self.resample_line(line, &pts);
                line.copy_from_slice(&new);
            });
        }
        if u != 1.0 {
            let pts = scaled(u);
            for_each_line(&mut v, &g, 1, |line| {
                let new = self.resample_line(line, &pts);
                line.copy_from_slice(&new);
            });
        }
        // f(t₀ + q·t₁, t₁)
        if q != 0.0 {
            for i1 in 0..n {
                let line: Vec<Complex64> = (0..n).map(|i0| v[i0 * n + i1]).collect();
                let pts: Vec<f64> = coords.iter().map(|t0| t0 + q * coords[i1]).collect();
                let new = self.resample_line(&line, &pts);
                for i0 in 0..n {
                    v[i0 * n + i1] = new[i0];
                }
            }
        }
        if swap {
            let mut t = v.clone();
            for i0 in 0..n {
                for i1 in 0..n {
                    t[i0 * n + i1] = v[i1 * n + i0];
                }
            }
            v = t;
        }
        SampledField { grid: g, values: v }
    }

    /// Apply one factor. `step` labels errors.
    pub fn apply_generator(
        &self,
        gen: &Generator,
        f: &SampledField,
        step: usize,
    ) -> Result<SampledField> {
        if f.grid != self.grid {
            return Err(OracleError::GridMismatch);
        }
        self.grid.check_dim(gen.dim())?;
        gen.check(&Tolerances::default())?;
        let out = match gen {
            Generator::Fourier { .. } => self.fourier(f),
            Generator::Chirp(p) => self.chirp(p, f, step)?,
            Generator::Dilation(e) => self.dilation(e, f),
        };
        let edge = out.edge_mass();
        if edge > EDGE_REL {
            return Err(OracleError::ExtentOverflow { step, edge });
        }
        let (bw, spectral_edge) = self.bandwidth(&out);
        if spectral_edge > EDGE_REL {
            return Err(OracleError::AliasRisk {
                step,
                required: bw.iter().copied().fold(0.0, f64::max),
                nyquist: self.grid.nyquist(),
            });
        }
        Ok(out)
    }

    /// Apply `Ŝ = F̂₁·…·F̂_m`; the rightmost factor acts first.
    pub fn apply_word(&self, w: &GeneratorWord, f: &SampledField) -> Result<SampledField> {
        self.grid.check_dim(w.dim())?;
        let mut out = f.clone();
        for (step, gen) in w.factors().iter().enumerate().rev() {
            out = self.apply_generator(gen, &out, step)?;
        }
        Ok(out)
    }
}

/// Run `op` on every line of `values` parallel to `axis`.
pub(crate) fn for_each_line(
    values: &mut [Complex64],
    grid: &Grid,
    axis: usize,
    mut op: impl FnMut(&mut [Complex64]),
) {
    let n = grid.n;
    match (grid.dim, axis) {
        (1, _) => op(values),
        (_, 1) => values.chunks_mut(n).for_each(op),
        _ => {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            for i1 in 0..n {
                for i0 in 0..n {
                    line[i0] = values[i0 * n + i1];
                }
                op(&mut line);
                for i0 in 0..n {
                    values[i0 * n + i1] = line[i0];
                }
            }
        }
    }
}

/// Apply a single factor on `f.grid`.
pub fn apply_generator(gen: &Generator, f: &SampledField) -> Result<SampledField> {
    Transforms::new(&f.grid).apply_generator(gen, f, 0)
}

/// Apply a word on `f.grid`.
pub fn apply_word(w: &GeneratorWord, f: &SampledField) -> Result<SampledField> {
    Transforms::new(&f.grid).apply_word(w, f)
}

/// A sample whose integrand was not negligible near the grid boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureWarning {
    pub y: Vec<f64>,
    pub tail: f64,
}

/// `k̃(x_i, y_j)` for all pairs; rows follow `xs`, columns follow `ys`.
#[derive(Debug, Clone)]
pub struct KernelSamples {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub values: DMatrix<Complex64>,
    pub warnings: Vec<QuadratureWarning>,
}

impl KernelSamples {
    /// `(x, y, k̃(x, y))` triples in row-major order.
    pub fn triples(&self) -> impl Iterator<Item = (&[f64], &[f64], Complex64)> + '_ {
        self.xs.iter().enumerate().flat_map(move |(i, x)| {
            self.ys
                .iter()
                .enumerate()
                .map(move |(j, y)| (x.as_slice(), y.as_slice(), self.values[(i, j)]))
        })
    }
}

/// Sample the smoothed kernel of `Ŝ` as `h^d Σ_t (Ŝτ_yφ)(t)·φ(t − x)`.
///
/// Columns (one word application each) are evaluated in parallel.
pub fn sample_smoothed_kernel(
    w: &GeneratorWord,
    grid: &Grid,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
) -> Result<KernelSamples> {
    grid.check_dim(w.dim())?;
    for p in xs.iter().chain(ys) {
        grid.check_dim(p.len())?;
        if !grid.contains_with_margin(p, CENTER_MARGIN) {
            return Err(OracleError::CenterOutOfRange {
                center: p.clone(),
                margin: CENTER_MARGIN,
            });
        }
    }
    let plan = Transforms::new(grid);
    let columns: Vec<(Vec<Complex64>, Option<QuadratureWarning>)> = ys
        .par_iter()
        .map(|y| -> Result<_> {
            let phi_y = sample_gaussian(grid, y)?;
            let image = plan.apply_word(w, &phi_y)?;
            let tail = image.edge_mass();
            let warning = (tail > TAIL_WARN).then(|| QuadratureWarning { y: y.clone(), tail });
            let col = xs
                .iter()
                .map(|x| {
                    let phi_x = sample_gaussian(grid, x)?;
                    image.inner(&phi_x)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((col, warning))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut values = DMatrix::zeros(xs.len(), ys.len());
    let mut warnings = Vec::new();
    for (j, (col, warning)) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            values[(i, j)] = v;
        }
        warnings.extend(warning);
    }
    Ok(KernelSamples {
        xs: xs.to_vec(),
        ys: ys.to_vec(),
        values,
        warnings,
    })
}

/// Least-squares comparison of sampled magnitudes with `c·e^{−πQ_S}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub c_fit: f64,
    /// Largest `|model − |sample|| / |sample|` over retained samples.
    pub max_rel_err: f64,
    pub retained: usize,
    pub total: usize,
}

/// Minimum number of retained samples for a fit.
pub const MIN_FIT_SAMPLES: usize = 10;

/// Fit `log|k̃| = log c − π Q_S(z)·z` over samples with
/// `|k̃| > 10⁻⁶ · max|k̃|`.
pub fn fit_against_analytic(samples: &KernelSamples, form: &SmoothedKernelForm) -> Result<FitReport> {
    let max = samples.values.iter().fold(0.0, |m: f64, v| m.max(v.norm()));
    let kept: Vec<(f64, f64)> = samples
        .triples()
        .filter(|(_, _, v)| v.norm() > 1e-6 * max)
        .map(|(x, y, v)| {
            let z: Vec<f64> = x.iter().chain(y).copied().collect();
            (v.norm(), form.quadratic(&z))
        })
        .collect();
    if kept.len() < MIN_FIT_SAMPLES {
        return Err(OracleError::InsufficientSamples {
            retained: kept.len(),
            required: MIN_FIT_SAMPLES,
        });
    }
    let log_c = kept.iter().map(|(m, q)| m.ln() + PI * q).sum::<f64>() / kept.len() as f64;
    let c_fit = log_c.exp();
    let max_rel_err = kept
        .iter()
        .map(|(m, q)| (c_fit * (-PI * q).exp() - m).abs() / m)
        .fold(0.0, f64::max);
    Ok(FitReport {
        c_fit,
        max_rel_err,
        retained: kept.len(),
        total: samples.values.len(),
    })
}

/// Regular lattice of sample points `{−r, …, r}^d` with `count` points per
/// axis.
pub fn lattice_points(dim: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    let step = if count > 1 {
        2.0 * radius / (count - 1) as f64
    } else {
        0.0
    };
    let axis: Vec<f64> = (0..count).map(|k| -radius + k as f64 * step).collect();
    match dim {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis
            .iter()
            .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
            .collect(),
    }
}
