//! Gaussian integrals with complex symmetric quadratic forms.

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("real part of the form is not positive-definite (smallest eigenvalue {min_eig:.3e})")]
    NotIntegrable { min_eig: f64 },
    #[error("quadratic form is not symmetric (residual {residual:.3e})")]
    NotSymmetric { residual: f64 },
    #[error("real part M1 is singular")]
    SingularM1,
    #[error("M1 + M2 M1^-1 M2 is singular")]
    SingularSchur,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

type Result<T> = std::result::Result<T, GaussianError>;

const SYMMETRY_TOL: f64 = 1e-10;

/// `t ↦ c·e^{−π Q t·t}` with `Q` complex symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexQuadraticForm {
    pub q: DMatrix<Complex64>,
    pub amplitude: Complex64,
}

/// `t ↦ c·e^{−π Q t·t}` with `Q` real symmetric positive-semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct RealQuadraticFormPSD {
    pub q: DMatrix<f64>,
    pub amplitude: f64,
}

impl ComplexQuadraticForm {
    pub fn new(q: DMatrix<Complex64>, amplitude: Complex64) -> Result<Self> {
        let residual = (&q - q.transpose()).norm();
        if residual > SYMMETRY_TOL * q.norm().max(1.0) {
            return Err(GaussianError::NotSymmetric { residual });
        }
        Ok(Self { q, amplitude })
    }

    /// Assemble `Q = Q_re + i·Q_im`.
    pub fn from_parts(re: &DMatrix<f64>, im: &DMatrix<f64>, amplitude: Complex64) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(GaussianError::DimensionMismatch {
                expected: re.nrows(),
                found: im.nrows(),
            });
        }
        let q = DMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            Complex64::new(re[(i, j)], im[(i, j)])
        });
        Self::new(q, amplitude)
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    pub fn real_part(&self) -> DMatrix<f64> {
        self.q.map(|z| z.re)
    }

    pub fn imag_part(&self) -> DMatrix<f64> {
        self.q.map(|z| z.im)
    }

    /// `c·e^{−π Q t·t}`.
    pub fn eval(&self, t: &[f64]) -> Complex64 {
        let t = DVector::from_iterator(t.len(), t.iter().map(|&x| Complex64::new(x, 0.0)));
        let quad = (t.transpose() * &self.q * &t)[(0, 0)];
        self.amplitude * (-std::f64::consts::PI * quad).exp()
    }
}

impl RealQuadraticFormPSD {
    pub fn new(q: DMatrix<f64>, amplitude: f64) -> Self {
        Self { q, amplitude }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `Q t·t`.
    pub fn quadratic(&self, t: &[f64]) -> f64 {
        let t = DVector::from_column_slice(t);
        (t.transpose() * &self.q * &t)[(0, 0)]
    }

    /// `c·e^{−π Q t·t}`.
    pub fn eval(&self, t: &[f64]) -> f64 {
        self.amplitude * (-std::f64::consts::PI * self.quadratic(t)).exp()
    }

    /// Smallest eigenvalue of `Q`.
    pub fn min_eigenvalue(&self) -> f64 {
        let (vals, _) = linalg::sym_eigen_ascending(&self.q);
        vals.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Value of a Gaussian Fourier integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianIntegral {
    pub value: Complex64,
    /// `|value|`, independent of the square-root branch.
    pub magnitude: f64,
    /// The phase of `det(Q)^{-1/2}` is defined only up to sign.
    pub phase_modulo_sign: bool,
}

fn min_eig_real_part(q: &DMatrix<Complex64>) -> f64 {
    let re = q.map(|z| z.re);
    linalg::sym_eigen_ascending(&re)
        .0
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// `∫ c·e^{−πQt·t} e^{−2πiξ·t} dt = c·det(Q)^{−1/2} e^{−πQ⁻¹ξ·ξ}`.
///
/// `det(Q)^{−1/2}` is the product of the principal square roots of the
/// eigenvalues of `Q`. All eigenvalues lie in the open right half-plane when
/// `Re Q ≻ 0`, so this agrees with the branch that is positive on real
/// positive-definite forms.
pub fn gaussian_fourier(form: &ComplexQuadraticForm, xi: &[Complex64]) -> Result<GaussianIntegral> {
    let n = form.dim();
    if xi.len() != n {
        return Err(GaussianError::DimensionMismatch {
            expected: n,
            found: xi.len(),
        });
    }
    let min_eig = min_eig_real_part(&form.q);
    if !(min_eig > 0.0) {
        return Err(GaussianError::NotIntegrable { min_eig });
    }
    let q_inv = form
        .q
        .clone()
        .try_inverse()
        .ok_or(GaussianError::NotIntegrable { min_eig })?;
    let xi = DVector::from_column_slice(xi);
    let quad = (xi.transpose() * &q_inv * &xi)[(0, 0)];
    let root_det: Complex64 = if n == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        let (_, t) = Schur::new(form.q.clone()).unpack();
        (0..n).map(|i| t[(i, i)].sqrt()).product()
    };
    let value = form.amplitude / root_det * (-std::f64::consts::PI * quad).exp();
    Ok(GaussianIntegral {
        value,
        magnitude: value.norm(),
        phase_modulo_sign: true,
    })
}

/// Real and imaginary parts of `(M₁ + iM₂)⁻¹`:
///
/// ```text
/// (M₁+iM₂)⁻¹ = (M₁+M₂M₁⁻¹M₂)⁻¹ − i·M₁⁻¹M₂(M₁+M₂M₁⁻¹M₂)⁻¹
/// ```
pub fn complex_inverse_split(
    m1: &DMatrix<f64>,
    m2: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if m1.shape() != m2.shape() || !m1.is_square() {
        return Err(GaussianError::DimensionMismatch {
            expected: m1.nrows(),
            found: m2.nrows(),
        });
    }
    let m1_inv = linalg::inverse(m1).ok_or(GaussianError::SingularM1)?;
    let schur = m1 + m2 * &m1_inv * m2;
    let schur_inv = linalg::inverse(&schur).ok_or(GaussianError::SingularSchur)?;
    let im = -(&m1_inv * m2 * &schur_inv);
    Ok((schur_inv, im))
}

/// Closed-form convolution of two positive-definite Gaussians.
///
/// `Q = (Q₁⁻¹ + Q₂⁻¹)⁻¹`, `c = c₁c₂·det(Q₁ + Q₂)^{−1/2}`.
pub fn convolve_gaussians(
    g1: &RealQuadraticFormPSD,
    g2: &RealQuadraticFormPSD,
) -> Result<RealQuadraticFormPSD> {
    if g1.dim() != g2.dim() {
        return Err(GaussianError::DimensionMismatch {
            expected: g1.dim(),
            found: g2.dim(),
        });
    }
    for g in [g1, g2] {
        let min_eig = g.min_eigenvalue();
        if !(min_eig > 0.0) {
            return Err(GaussianError::NotIntegrable { min_eig });
        }
    }
    let inv1 = linalg::inverse(&g1.q).ok_or(GaussianError::NotIntegrable { min_eig: 0.0 })?;
    let inv2 = linalg::inverse(&g2.q).ok_or(GaussianError::NotIntegrable { min_eig: 0.0 })?;
    let q = linalg::inverse(&(inv1 + inv2)).ok_or(GaussianError::NotIntegrable { min_eig: 0.0 })?;
    let det = (&g1.q + &g2.q).determinant();
    Ok(RealQuadraticFormPSD {
        q: linalg::symmetrize(&q),
        amplitude: g1.amplitude * g2.amplitude / det.sqrt(),
    })
}
