//! Validated symplectic matrices and the generators `J`, `V_P`, `𝒟_E`.
//!
//! A `2d × 2d` real matrix `S = [[A, B], [C, D]]` is symplectic when
//! `SᵀJS = J`, equivalently when the blocks satisfy
//!
//! ```text
//! AᵀC = CᵀA,   BᵀD = DᵀB,   AᵀD − CᵀB = I,
//! DCᵀ = CDᵀ,   BAᵀ = ABᵀ,   DAᵀ − CBᵀ = I.
//! ```
//!
//! Validation checks all of these and keeps the worst residual.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::linalg;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SymplecticError {
    #[error("matrix is {rows}x{cols}; expected a square matrix with even side")]
    OddDimension { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not symplectic (relative residual {residual:.3e})")]
    NotSymplectic { residual: f64 },
    #[error("chirp matrix P is not symmetric (residual {residual:.3e})")]
    NonSymmetricP { residual: f64 },
    #[error("dilation matrix E is singular or too ill-conditioned (condition {condition:.3e})")]
    SingularE { condition: f64 },
    #[error("dimension mismatch: expected d = {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("ambiguous numerical rank of block {block} (singular-value gap {gap:.3e})")]
    RankAmbiguous { block: &'static str, gap: f64 },
    #[error("operation not applicable: {0}")]
    NotApplicable(&'static str),
    #[error("generator word is empty and carries no dimension")]
    EmptyWordWithoutDimension,
}

pub type Result<T, E = SymplecticError> = std::result::Result<T, E>;

/// Numerical thresholds used across the analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Accepted relative residual `‖SᵀJS − J‖ / max(1, ‖S‖²)`.
    pub symplectic: f64,
    /// Singular values of `B` (`C`) below `rank · ‖[A B]‖₂` (`rank · ‖[C D]‖₂`)
    /// count as zero.
    pub rank: f64,
    /// A singular value within this factor of the rank cutoff makes the
    /// rank decision ambiguous.
    pub rank_gap_ratio: f64,
    /// Eigenvalues of `Q_S` below `null * ‖Q_S‖` span the null space.
    pub null: f64,
    /// Negative eigenvalues of `Q_S` down to `−psd * ‖Q_S‖` are accepted.
    pub psd: f64,
    /// Relative tolerance for `Dᵀx = x` in the quasi-diagonality test.
    pub identity: f64,
    /// Upper bound on condition numbers of intermediate inverses.
    pub condition_cap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symplectic: 1e-9,
            rank: 1e-10,
            rank_gap_ratio: 100.0,
            null: 1e-7,
            psd: 1e-8,
            identity: 1e-9,
            condition_cap: 1e12,
        }
    }
}

/// Validated `2d × 2d` symplectic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    d: usize,
    m: DMatrix<f64>,
    residual: f64,
}

/// The standard symplectic form `J = [[0, I], [−I, 0]]`.
pub fn standard_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// Worst relative residual of the symplectic relations for `m`.
pub fn symplectic_residual(m: &DMatrix<f64>) -> f64 {
    let d = m.nrows() / 2;
    let a = m.view((0, 0), (d, d));
    let b = m.view((0, d), (d, d));
    let c = m.view((d, 0), (d, d));
    let dd = m.view((d, d), (d, d));
    let id = DMatrix::<f64>::identity(d, d);
    let j = standard_j(d);
    let checks = [
        (m.transpose() * &j * m - &j).norm(),
        (a.transpose() * c - c.transpose() * a).norm(),
        (b.transpose() * dd - dd.transpose() * b).norm(),
        (a.transpose() * dd - c.transpose() * b - &id).norm(),
        (dd * c.transpose() - c * dd.transpose()).norm(),
        (b * a.transpose() - a * b.transpose()).norm(),
        (dd * a.transpose() - c * b.transpose() - &id).norm(),
        (m.determinant() - 1.0).abs(),
    ];
    let scale = m.norm_squared().max(1.0);
    checks.iter().copied().fold(0.0, f64::max) / scale
}

/// Check that `m` is symplectic within `tol` and wrap it.
pub fn validate_symplectic(m: DMatrix<f64>, tol: f64) -> Result<SymplecticMatrix> {
    if !m.is_square() || !m.nrows().is_multiple_of(2) || m.nrows() == 0 {
        return Err(SymplecticError::OddDimension {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(SymplecticError::NonFinite);
    }
    let residual = symplectic_residual(&m);
    if !(residual <= tol) {
        return Err(SymplecticError::NotSymplectic { residual });
    }
    Ok(SymplecticMatrix {
        d: m.nrows() / 2,
        m,
        residual,
    })
}

impl SymplecticMatrix {
    /// Build from blocks and validate.
    pub fn from_blocks(
        a: &DMatrix<f64>,
        b: &DMatrix<f64>,
        c: &DMatrix<f64>,
        d: &DMatrix<f64>,
        tol: f64,
    ) -> Result<Self> {
        let n = a.nrows();
        for blk in [a, b, c, d] {
            if blk.nrows() != n || blk.ncols() != n {
                return Err(SymplecticError::DimensionMismatch {
                    expected: n,
                    found: blk.nrows().max(blk.ncols()),
                });
            }
        }
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(c);
        m.view_mut((n, n), (n, n)).copy_from(d);
        validate_symplectic(m, tol)
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            m: DMatrix::identity(2 * d, 2 * d),
            residual: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    /// Worst relative residual recorded at validation.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn a(&self) -> DMatrix<f64> {
        self.block(0, 0)
    }

    pub fn b(&self) -> DMatrix<f64> {
        self.block(0, 1)
    }

    pub fn c(&self) -> DMatrix<f64> {
        self.block(1, 0)
    }

    pub fn d(&self) -> DMatrix<f64> {
        self.block(1, 1)
    }

    fn block(&self, i: usize, j: usize) -> DMatrix<f64> {
        self.m
            .view((i * self.d, j * self.d), (self.d, self.d))
            .into_owned()
    }

    /// Spectral norm of the full matrix, the reference scale for block ranks.
    pub fn scale(&self) -> f64 {
        linalg::spectral_norm(&self.m)
    }

    /// Product `self · other`, revalidated.
    pub fn compose(&self, other: &SymplecticMatrix, tol: f64) -> Result<Self> {
        if self.d != other.d {
            return Err(SymplecticError::DimensionMismatch {
                expected: self.d,
                found: other.d,
            });
        }
        validate_symplectic(&self.m * &other.m, tol)
    }

    /// `S z` for `z ∈ ℝ²ᵈ`.
    pub fn apply(&self, z: &[f64]) -> Vec<f64> {
        let v = nalgebra::DVector::from_column_slice(z);
        (&self.m * v).as_slice().to_vec()
    }
}

/// `S⁻¹ = [[Dᵀ, −Bᵀ], [−Cᵀ, Aᵀ]]`.
pub fn symplectic_inverse(s: &SymplecticMatrix) -> SymplecticMatrix {
    let d = s.d;
    let mut m = DMatrix::zeros(2 * d, 2 * d);
    m.view_mut((0, 0), (d, d)).copy_from(&s.d().transpose());
    m.view_mut((0, d), (d, d)).copy_from(&(-s.b().transpose()));
    m.view_mut((d, 0), (d, d)).copy_from(&(-s.c().transpose()));
    m.view_mut((d, d), (d, d)).copy_from(&s.a().transpose());
    SymplecticMatrix {
        d,
        residual: s.residual,
        m,
    }
}

/// One factor of a generator word.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    /// `J`, projection of the Fourier transform.
    Fourier { dim: usize },
    /// `V_P = [[I, 0], [P, I]]`, projection of multiplication by `e^{iπPt·t}`.
    Chirp(DMatrix<f64>),
    /// `𝒟_E = [[E⁻¹, 0], [0, Eᵀ]]`, projection of `f ↦ |det E|^{1/2} f(E·)`.
    Dilation(DMatrix<f64>),
}

impl Generator {
    pub fn dim(&self) -> usize {
        match self {
            Generator::Fourier { dim } => *dim,
            Generator::Chirp(p) => p.nrows(),
            Generator::Dilation(e) => e.nrows(),
        }
    }

    /// Check the factor's own preconditions.
    pub fn check(&self, tol: &Tolerances) -> Result<()> {
        match self {
            Generator::Fourier { dim } => {
                if *dim == 0 {
                    return Err(SymplecticError::OddDimension { rows: 0, cols: 0 });
                }
            }
            Generator::Chirp(p) => {
                if !p.is_square() || p.nrows() == 0 {
                    return Err(SymplecticError::DimensionMismatch {
                        expected: p.nrows(),
                        found: p.ncols(),
                    });
                }
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(SymplecticError::NonFinite);
                }
                let residual = linalg::asymmetry(p);
                if residual > tol.symplectic * p.norm().max(1.0) {
                    return Err(SymplecticError::NonSymmetricP { residual });
                }
            }
            Generator::Dilation(e) => {
                if !e.is_square() || e.nrows() == 0 {
                    return Err(SymplecticError::DimensionMismatch {
                        expected: e.nrows(),
                        found: e.ncols(),
                    });
                }
                if e.iter().any(|x| !x.is_finite()) {
                    return Err(SymplecticError::NonFinite);
                }
                let condition = linalg::condition_number(e);
                if !(condition <= tol.condition_cap) {
                    return Err(SymplecticError::SingularE { condition });
                }
            }
        }
        Ok(())
    }
}

/// Matrix of a single generator.
pub fn make_generator(g: &Generator, tol: &Tolerances) -> Result<SymplecticMatrix> {
    g.check(tol)?;
    let d = g.dim();
    let m = match g {
        Generator::Fourier { .. } => standard_j(d),
        Generator::Chirp(p) => {
            let mut m = DMatrix::identity(2 * d, 2 * d);
            m.view_mut((d, 0), (d, d)).copy_from(&linalg::symmetrize(p));
            m
        }
        Generator::Dilation(e) => {
            let inv = linalg::inverse(e).ok_or(SymplecticError::SingularE {
                condition: f64::INFINITY,
            })?;
            let mut m = DMatrix::zeros(2 * d, 2 * d);
            m.view_mut((0, 0), (d, d)).copy_from(&inv);
            m.view_mut((d, d), (d, d)).copy_from(&e.transpose());
            m
        }
    };
    validate_symplectic(m, tol.symplectic.max(1e-12))
}

/// Ordered product of generators; `S = F₁·F₂·…·F_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorWord {
    dim: usize,
    factors: Vec<Generator>,
}

impl GeneratorWord {
    /// Build a word, checking that all factors share the dimension `dim`.
    pub fn new(dim: usize, factors: Vec<Generator>) -> Result<Self> {
        if dim == 0 {
            return Err(SymplecticError::EmptyWordWithoutDimension);
        }
        for f in &factors {
            if f.dim() != dim {
                return Err(SymplecticError::DimensionMismatch {
                    expected: dim,
                    found: f.dim(),
                });
            }
        }
        Ok(Self { dim, factors })
    }

    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            factors: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Generator] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Concatenation `self · other`.
    pub fn concat(&self, other: &GeneratorWord) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::new(self.dim, factors)
    }
}

/// Left-to-right product of the word's factors.
pub fn word_product(w: &GeneratorWord, tol: &Tolerances) -> Result<SymplecticMatrix> {
    let d = w.dim;
    let mut m = DMatrix::identity(2 * d, 2 * d);
    for f in &w.factors {
        m *= make_generator(f, tol)?.m;
    }
    validate_symplectic(m, tol.symplectic)
}

/// Factorization `S = J 𝒟_{C⁻¹} V_{−CᵀA} J V_{−C⁻¹D} J`, valid when `C` is
/// invertible.
pub fn word_for_invertible_c(s: &SymplecticMatrix, tol: &Tolerances) -> Result<GeneratorWord> {
    let d = s.dim();
    let c = s.c();
    let condition = linalg::condition_number(&c);
    if !(condition <= tol.condition_cap) {
        return Err(SymplecticError::NotApplicable("block C is not invertible"));
    }
    let c_inv = linalg::inverse(&c).ok_or(SymplecticError::NotApplicable(
        "block C is not invertible",
    ))?;
    let ct_a = linalg::symmetrize(&(c.transpose() * s.a()));
    let cinv_d = linalg::symmetrize(&(&c_inv * s.d()));
    GeneratorWord::new(
        d,
        vec![
            Generator::Fourier { dim: d },
            Generator::Dilation(c_inv),
            Generator::Chirp(-ct_a),
            Generator::Fourier { dim: d },
            Generator::Chirp(-cinv_d),
            Generator::Fourier { dim: d },
        ],
    )
}
