//! Kernels of metaplectic operators and the magnitude of their
//! Gaussian-smoothed versions.
//!
//! For `S = [[A, B], [C, D]]` the smoothed kernel `k̃ = k ∗ φ`, with
//! `φ(x, y) = e^{−π(|x|² + |y|²)}`, satisfies `|k̃(x, y)| = c·e^{−π Q_S(x,y)·(x,y)}`
//! for a positive-semidefinite `Q_S` whose null space is
//! `Γ_S = {(x, Dᵀx) : x ∈ R(C)^⊥}`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::subspace::{self, BlockSubspaces};
use crate::symplectic::{SymplecticError, SymplecticMatrix, Tolerances};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error("block B is singular or too ill-conditioned (condition {condition:.3e})")]
    SingularB { condition: f64 },
    #[error("block B is not zero (rank {rank})")]
    BNotZero { rank: usize },
    #[error("block B has rank {rank}; the general case needs 0 < rank < {dim}")]
    RankOutOfRange { rank: usize, dim: usize },
    #[error("{stage} is too ill-conditioned (condition {condition:.3e})")]
    ConditioningFailure { stage: &'static str, condition: f64 },
    #[error("expected dimension {expected}, found {found}")]
    WrongDimension { expected: usize, found: usize },
    #[error("smoothed form is not positive-semidefinite (relative min eigenvalue {min_eig:.3e})")]
    NotPsd { min_eig: f64 },
}

pub type Result<T, E = KernelError> = std::result::Result<T, E>;

/// Which block case produced a form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelCase {
    /// `B` invertible.
    FreeB,
    /// `B = 0`.
    BZero,
    /// `0 < rank B < d`.
    General,
}

/// Closed-form kernel data, up to a unimodular phase.
#[derive(Debug, Clone)]
pub enum KernelForm {
    /// `k(x,y) = |det B|^{−1/2} e^{iπ(DB⁻¹x·x − 2B⁻¹x·y + B⁻¹Ay·y)}`.
    FreeB {
        b_inv: DMatrix<f64>,
        d_b_inv: DMatrix<f64>,
        b_inv_a: DMatrix<f64>,
        amplitude: f64,
    },
    /// `k(x,y) = |det D|^{1/2} e^{iπCDᵀx·x} δ(y − Dᵀx)`.
    BZero {
        d_t: DMatrix<f64>,
        c_d_t: DMatrix<f64>,
        amplitude: f64,
    },
    /// Oscillatory integral kernel; the matrices are known, the amplitude
    /// is not.
    General {
        b_pinv: DMatrix<f64>,
        b_pinv_a: DMatrix<f64>,
        d_b_pinv: DMatrix<f64>,
        d_c_t: DMatrix<f64>,
        c_t: DMatrix<f64>,
        subspaces: Box<BlockSubspaces>,
    },
}

impl KernelForm {
    pub fn case(&self) -> KernelCase {
        match self {
            KernelForm::FreeB { .. } => KernelCase::FreeB,
            KernelForm::BZero { .. } => KernelCase::BZero,
            KernelForm::General { .. } => KernelCase::General,
        }
    }

    /// Largest asymmetry among the matrices that must be symmetric.
    pub fn symmetry_residual(&self) -> f64 {
        match self {
            KernelForm::FreeB {
                d_b_inv, b_inv_a, ..
            } => linalg::asymmetry(d_b_inv).max(linalg::asymmetry(b_inv_a)),
            KernelForm::BZero { c_d_t, .. } => linalg::asymmetry(c_d_t),
            KernelForm::General {
                b_pinv_a,
                d_b_pinv,
                subspaces,
                ..
            } => {
                let w = &subspaces.ker_b_perp.columns;
                let v1 = &subspaces.range_b.columns;
                let lemma = w.transpose() * b_pinv_a * w;
                let cor = v1.transpose() * d_b_pinv * v1;
                linalg::asymmetry(&lemma).max(linalg::asymmetry(&cor))
            }
        }
    }

    /// Pointwise value of a free kernel. `None` for the other cases, whose
    /// kernels are not functions.
    pub fn eval_free(&self, x: &[f64], y: &[f64]) -> Option<Complex64> {
        let KernelForm::FreeB {
            b_inv,
            d_b_inv,
            b_inv_a,
            amplitude,
        } = self
        else {
            return None;
        };
        let x = DVector::from_column_slice(x);
        let y = DVector::from_column_slice(y);
        let phase = d_b_inv.dot(&(&x * x.transpose())) - 2.0 * (b_inv * &x).dot(&y)
            + (b_inv_a * &y).dot(&y);
        Some(Complex64::from_polar(*amplitude, std::f64::consts::PI * phase))
    }
}

/// Closed-form kernel of `Ŝ`.
pub fn kernel_form(s: &SymplecticMatrix, tol: &Tolerances) -> Result<KernelForm> {
    let sub = subspace::subspace_bases(s, tol)?;
    let d = s.dim();
    let (a, b, c, dd) = (s.a(), s.b(), s.c(), s.d());
    if sub.rank_b == d {
        let b_inv = checked_inverse(&b, tol, |condition| KernelError::SingularB { condition })?;
        let amplitude = b.determinant().abs().powf(-0.5);
        return Ok(KernelForm::FreeB {
            d_b_inv: &dd * &b_inv,
            b_inv_a: &b_inv * &a,
            b_inv,
            amplitude,
        });
    }
    if sub.rank_b == 0 {
        let amplitude = dd.determinant().abs().sqrt();
        return Ok(KernelForm::BZero {
            d_t: dd.transpose(),
            c_d_t: &c * dd.transpose(),
            amplitude,
        });
    }
    let b_pinv = subspace::b_pinv(s, tol);
    Ok(KernelForm::General {
        b_pinv_a: &b_pinv * &a,
        d_b_pinv: &dd * &b_pinv,
        d_c_t: &dd * c.transpose(),
        c_t: c.transpose(),
        b_pinv,
        subspaces: Box::new(sub),
    })
}

/// Amplitude `c` of `|k̃| = c·e^{−πQ_S}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Amplitude {
    Known(f64),
    /// Serialized as the string `"fit-required"`.
    FitRequired(FitRequired),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitRequired {
    #[serde(rename = "fit-required")]
    Marker,
}

impl Amplitude {
    pub const FIT_REQUIRED: Amplitude = Amplitude::FitRequired(FitRequired::Marker);

    pub fn known(&self) -> Option<f64> {
        match self {
            Amplitude::Known(c) => Some(*c),
            Amplitude::FitRequired(_) => None,
        }
    }
}

/// `|k̃(x,y)| = c·e^{−π Q_S(x,y)·(x,y)}`.
#[derive(Debug, Clone)]
pub struct SmoothedKernelForm {
    pub case: KernelCase,
    /// `2d × 2d` real symmetric positive-semidefinite matrix.
    pub qs: DMatrix<f64>,
    pub amplitude: Amplitude,
    /// Orthonormal basis of `null(Q_S)`.
    pub null_basis: DMatrix<f64>,
    /// Eigenvalues of `Q_S`, ascending.
    pub eigenvalues: DVector<f64>,
}

impl SmoothedKernelForm {
    fn from_matrix(
        case: KernelCase,
        qs: DMatrix<f64>,
        amplitude: Amplitude,
        tol: &Tolerances,
    ) -> Result<Self> {
        let qs = linalg::symmetrize(&qs);
        let (vals, vecs) = linalg::sym_eigen_ascending(&qs);
        let norm = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if norm > 0.0 && min < -tol.psd * norm {
            return Err(KernelError::NotPsd { min_eig: min / norm });
        }
        let k = vals.iter().filter(|&&v| v < tol.null * norm).count();
        let mut null_basis = linalg::columns(&vecs, 0, k);
        linalg::fix_column_signs(&mut null_basis);
        Ok(Self {
            case,
            qs,
            amplitude,
            null_basis,
            eigenvalues: vals,
        })
    }

    pub fn dim(&self) -> usize {
        self.qs.nrows() / 2
    }

    /// `‖Q_S‖₂`.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Q_S z·z` for `z = (x, y)`.
    pub fn quadratic(&self, z: &[f64]) -> f64 {
        let z = DVector::from_column_slice(z);
        (&self.qs * &z).dot(&z)
    }

    /// `|k̃(x,y)|` when the amplitude is known.
    pub fn magnitude(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        let c = self.amplitude.known()?;
        let z: Vec<f64> = x.iter().chain(y).copied().collect();
        Some(c * (-std::f64::consts::PI * self.quadratic(&z)).exp())
    }
}

fn checked_inverse(
    m: &DMatrix<f64>,
    tol: &Tolerances,
    err: impl Fn(f64) -> KernelError,
) -> Result<DMatrix<f64>> {
    let condition = linalg::condition_number(m);
    if !(condition <= tol.condition_cap) {
        return Err(err(condition));
    }
    linalg::inverse(m).ok_or_else(|| err(f64::INFINITY))
}

fn conditioning(stage: &'static str) -> impl Fn(f64) -> KernelError {
    move |condition| KernelError::ConditioningFailure { stage, condition }
}

/// Smoothed form for invertible `B`.
///
/// With `S̃ = [[Dᵀ, −I], [−I, A]]`, `Δ_B = diag(B⁻ᵀ, B⁻¹)` and `N = Δ_B S̃`
/// (symmetric), `Q_S = S̃ᵀΔ_Bᵀ(I + N²)⁻¹Δ_B S̃` and
/// `c = |det B|^{−1/2}|det(I − iN)|^{−1/2}`.
pub fn smoothed_form_freeb(s: &SymplecticMatrix, tol: &Tolerances) -> Result<SmoothedKernelForm> {
    let d = s.dim();
    let b = s.b();
    let b_inv = checked_inverse(&b, tol, |condition| KernelError::SingularB { condition })?;
    let id = DMatrix::<f64>::identity(d, d);
    let s_tilde = blocks2(&s.d().transpose(), &(-&id), &(-&id), &s.a());
    let delta = linalg::block_diag(&[&b_inv.transpose(), &b_inv]);
    let n = linalg::symmetrize(&(&delta * &s_tilde));
    // Q_S = N(I + N²)⁻¹N = f(N) with f(λ) = λ²/(1 + λ²), evaluated on the
    // spectrum: forming (I + N²)⁻¹ first loses a factor ‖N‖² in accuracy.
    let (lambda, u) = linalg::sym_eigen_ascending(&n);
    let f = DVector::from_iterator(2 * d, lambda.iter().map(|l| l * l / (1.0 + l * l)));
    let qs = &u * DMatrix::from_diagonal(&f) * u.transpose();
    // N is real symmetric, so |det(I − iN)| = det(I + N²)^{1/2}.
    let log_det: f64 = lambda.iter().map(|l| (l * l).ln_1p()).sum();
    let amplitude = b.determinant().abs().powf(-0.5) * (-0.25 * log_det).exp();
    SmoothedKernelForm::from_matrix(KernelCase::FreeB, qs, Amplitude::Known(amplitude), tol)
}

/// Smoothed form for `B = 0`.
///
/// `Q = (I + DDᵀ + CDᵀ(I + DDᵀ)⁻¹DCᵀ)⁻¹`,
/// `Q_S = [[I − Q, −QD], [−DᵀQ, I − DᵀQD]]`,
/// `c = |det D|^{1/2}|det(I + DDᵀ − iCDᵀ)|^{−1/2}`.
pub fn smoothed_form_bzero(s: &SymplecticMatrix, tol: &Tolerances) -> Result<SmoothedKernelForm> {
    let d = s.dim();
    let rank = subspace::subspace_bases(s, tol)?.rank_b;
    if rank != 0 {
        return Err(KernelError::BNotZero { rank });
    }
    let (c, dd) = (s.c(), s.d());
    let id = DMatrix::<f64>::identity(d, d);
    let g = &id + &dd * dd.transpose();
    let g_inv = checked_inverse(&g, tol, conditioning("I + DDᵀ"))?;
    let cdt = linalg::symmetrize(&(&c * dd.transpose()));
    let inner = &g + &cdt * &g_inv * &cdt;
    let q = linalg::symmetrize(&checked_inverse(&inner, tol, conditioning("Q⁻¹"))?);
    let qs = blocks2(
        &(&id - &q),
        &(-(&q * &dd)),
        &(-(dd.transpose() * &q)),
        &(&id - dd.transpose() * &q * &dd),
    );
    let complex = DMatrix::from_fn(d, d, |i, j| Complex64::new(g[(i, j)], -cdt[(i, j)]));
    let amplitude = dd.determinant().abs().sqrt() * complex.determinant().norm().powf(-0.5);
    SmoothedKernelForm::from_matrix(KernelCase::BZero, qs, Amplitude::Known(amplitude), tol)
}

/// Orthonormal parametrizations used by the general case: `v1` spans `R(B)`,
/// `v2` spans `R(B)^⊥`, `w` spans `ker(B)^⊥`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralBases {
    pub v1: DMatrix<f64>,
    pub v2: DMatrix<f64>,
    pub w: DMatrix<f64>,
}

/// Smoothed form for `0 < rank B < d`.
///
/// `S` is first rotated to `S′ = diag(P,P)·S·diag(Q,Q)` by
/// [`subspace::normalize_orientation`]; the form of `S′` is computed with the
/// SVD bases of its blocks and conjugated back,
/// `Q_S = diag(P, Qᵀ)ᵀ Q_{S′} diag(P, Qᵀ)`.
pub fn smoothed_form_general(s: &SymplecticMatrix, tol: &Tolerances) -> Result<SmoothedKernelForm> {
    let d = s.dim();
    let norm = subspace::normalize_orientation(s, tol).map_err(|e| match e {
        SymplecticError::NotApplicable(_) => {
            let rank = subspace::subspace_bases(s, tol).map(|b| b.rank_b).unwrap_or(0);
            KernelError::RankOutOfRange { rank, dim: d }
        }
        other => other.into(),
    })?;
    let sub = subspace::subspace_bases(&norm.s_prime, tol)?;
    let bases = GeneralBases {
        v1: sub.range_b.columns,
        v2: sub.range_b_perp.columns,
        w: sub.ker_b_perp.columns,
    };
    let q_prime = general_quadratic_form(&norm.s_prime, &bases, tol)?;
    let t = linalg::block_diag(&[&norm.p, &norm.q.transpose()]);
    let qs = t.transpose() * q_prime * t;
    SmoothedKernelForm::from_matrix(KernelCase::General, qs, Amplitude::FIT_REQUIRED, tol)
}

/// General-case smoothed form of `s` computed directly with caller-supplied
/// bases, without the orthogonal normalization. The result does not depend on
/// which orthonormal bases are supplied.
pub fn smoothed_form_general_with_bases(
    s: &SymplecticMatrix,
    bases: &GeneralBases,
    tol: &Tolerances,
) -> Result<SmoothedKernelForm> {
    let qs = general_quadratic_form(s, bases, tol)?;
    SmoothedKernelForm::from_matrix(KernelCase::General, qs, Amplitude::FIT_REQUIRED, tol)
}

/// Gaussian reduction of `k̃(x,y) = ∫ (Ŝτ_yφ)(u) φ(u − x) du` for rank-deficient
/// `B`.
///
/// Writing `u = V₁r + V₂s` and `t = Wτ`, the integrand is
/// `exp(−π(G − iL)w·w + 2πb·w)` in `w = (r, τ, s)` with
///
/// ```text
/// G = [[I, 0, 0], [0, I, WᵀDᵀV₂], [0, V₂ᵀDW, I + V₂ᵀDDᵀV₂]]
/// L = [[V₁ᵀDB⁺V₁, −V₁ᵀB⁺ᵀW, 0], [−WᵀB⁺V₁, WᵀB⁺AW, WᵀCᵀV₂], [0, V₂ᵀCW, V₂ᵀDCᵀV₂]]
/// b = (V₁ᵀx, Wᵀy, V₂ᵀx + V₂ᵀDy)
/// ```
///
/// so `Q_S = I − βᵀ(G + LG⁻¹L)⁻¹β` where `β` is the linear map `(x,y) ↦ b`.
/// The block `WᵀDᵀV₂` vanishes when `Dᵀ(R(B)^⊥) = ker B`.
fn general_quadratic_form(
    s: &SymplecticMatrix,
    bases: &GeneralBases,
    tol: &Tolerances,
) -> Result<DMatrix<f64>> {
    let d = s.dim();
    let GeneralBases { v1, v2, w } = bases;
    let r = v1.ncols();
    if r == 0 || r == d || w.ncols() != r || v2.ncols() != d - r {
        return Err(KernelError::RankOutOfRange { rank: r, dim: d });
    }
    for m in [v1, v2, w] {
        if m.nrows() != d {
            return Err(KernelError::WrongDimension {
                expected: d,
                found: m.nrows(),
            });
        }
    }
    let (a, c, dd) = (s.a(), s.c(), s.d());
    let bp = subspace::b_pinv(s, tol);
    let k = d - r;
    let n = 2 * r + k;

    let dt_v2 = dd.transpose() * v2;
    let mut g = DMatrix::<f64>::identity(n, n);
    let cross = w.transpose() * &dt_v2;
    g.view_mut((r, 2 * r), (r, k)).copy_from(&cross);
    g.view_mut((2 * r, r), (k, r)).copy_from(&cross.transpose());
    g.view_mut((2 * r, 2 * r), (k, k))
        .copy_from(&(DMatrix::identity(k, k) + dt_v2.transpose() * &dt_v2));

    let mut l = DMatrix::<f64>::zeros(n, n);
    let rt = -(v1.transpose() * bp.transpose() * w);
    let ts = w.transpose() * c.transpose() * v2;
    l.view_mut((0, 0), (r, r))
        .copy_from(&(v1.transpose() * &dd * &bp * v1));
    l.view_mut((0, r), (r, r)).copy_from(&rt);
    l.view_mut((r, 0), (r, r)).copy_from(&rt.transpose());
    l.view_mut((r, r), (r, r))
        .copy_from(&(w.transpose() * &bp * &a * w));
    l.view_mut((r, 2 * r), (r, k)).copy_from(&ts);
    l.view_mut((2 * r, r), (k, r)).copy_from(&ts.transpose());
    l.view_mut((2 * r, 2 * r), (k, k))
        .copy_from(&(v2.transpose() * &dd * c.transpose() * v2));
    let l = linalg::symmetrize(&l);

    let g_inv = checked_inverse(&g, tol, conditioning("G"))?;
    let schur = &g + &l * &g_inv * &l;
    let m = linalg::symmetrize(&checked_inverse(&schur, tol, conditioning("G + LG⁻¹L"))?);

    let mut beta = DMatrix::<f64>::zeros(n, 2 * d);
    beta.view_mut((0, 0), (r, d)).copy_from(&v1.transpose());
    beta.view_mut((r, d), (r, d)).copy_from(&w.transpose());
    beta.view_mut((2 * r, 0), (k, d)).copy_from(&v2.transpose());
    beta.view_mut((2 * r, d), (k, d))
        .copy_from(&(v2.transpose() * &dd));
    Ok(DMatrix::identity(2 * d, 2 * d) - beta.transpose() * m * beta)
}

/// Smoothed form, dispatched on the rank of `B`.
pub fn smoothed_form(s: &SymplecticMatrix, tol: &Tolerances) -> Result<SmoothedKernelForm> {
    let rank = subspace::subspace_bases(s, tol)?.rank_b;
    if rank == s.dim() {
        smoothed_form_freeb(s, tol)
    } else if rank == 0 {
        smoothed_form_bzero(s, tol)
    } else {
        smoothed_form_general(s, tol)
    }
}

fn blocks2(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(a);
    m.view_mut((0, n), (n, n)).copy_from(b);
    m.view_mut((n, 0), (n, n)).copy_from(c);
    m.view_mut((n, n), (n, n)).copy_from(d);
    m
}

/// `Γ_S = {(x, Dᵀx) : x ∈ R(C)^⊥}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationManifold {
    /// Orthonormal basis of `R(C)^⊥`, `d × r`.
    pub range_c_perp: DMatrix<f64>,
    /// `Dᵀ` applied to each basis column.
    pub image: DMatrix<f64>,
    pub rank_c: usize,
}

impl LocalizationManifold {
    pub fn dim(&self) -> usize {
        self.range_c_perp.ncols()
    }

    /// Generators `(x, Dᵀx)` as the columns of a `2d × r` matrix.
    pub fn generators(&self) -> DMatrix<f64> {
        let d = self.range_c_perp.nrows();
        let r = self.dim();
        let mut g = DMatrix::zeros(2 * d, r);
        g.view_mut((0, 0), (d, r)).copy_from(&self.range_c_perp);
        g.view_mut((d, 0), (d, r)).copy_from(&self.image);
        g
    }

    /// Orthonormal basis of `Γ_S` in `ℝ²ᵈ`.
    pub fn orthonormal_basis(&self) -> DMatrix<f64> {
        // The first block of the generators is orthonormal, so they are
        // linearly independent and the span has full dimension r.
        let g = self.generators();
        if g.ncols() == 0 {
            return g;
        }
        let mut q = g.clone().qr().q();
        q = linalg::columns(&q, 0, g.ncols());
        linalg::fix_column_signs(&mut q);
        q
    }
}

/// Localization manifold of `S`. Reads only the blocks `C` and `D`.
pub fn localization_manifold(s: &SymplecticMatrix, tol: &Tolerances) -> Result<LocalizationManifold> {
    let (rank_c, basis) = subspace::range_c_perp(s, tol)?;
    let image = s.d().transpose() * &basis.columns;
    Ok(LocalizationManifold {
        range_c_perp: basis.columns,
        image,
        rank_c,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictReason {
    /// `C` invertible, so `Γ_S = {0}`.
    CInvertible,
    /// `Dᵀ` restricted to `R(C)^⊥` is the identity.
    DRestrictedIdentity,
    /// `d = 1`: quasi-diagonal exactly when `C ≠ 0` or `D = 1`.
    D1Rule,
    /// Some generator of `Γ_S` leaves the diagonal.
    GammaInDelta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub quasi_diagonal: bool,
    pub reason: VerdictReason,
    /// Largest `ε` with `Q_S(x,y) ≥ ε|x − y|²`, when quasi-diagonal.
    pub epsilon: Option<f64>,
    /// `(x, Dᵀx)` with `Dᵀx ≠ x`, when not quasi-diagonal.
    pub witness: Option<(Vec<f64>, Vec<f64>)>,
    pub gamma_dim: usize,
}

/// Quasi-diagonality of the kernel of `Ŝ`.
///
/// The kernel is quasi-diagonal exactly when `Γ_S` lies in the diagonal
/// `{x = y}`, i.e. when `Dᵀx = x` on `R(C)^⊥`.
pub fn verdict(s: &SymplecticMatrix, tol: &Tolerances) -> Result<Verdict> {
    let manifold = localization_manifold(s, tol)?;
    let d = s.dim();
    let scale = linalg::spectral_norm(&s.d()).max(1.0);
    let mut witness = None;
    for j in 0..manifold.dim() {
        let x = manifold.range_c_perp.column(j);
        let dx = manifold.image.column(j);
        if (dx - x).norm() > tol.identity * scale {
            witness = Some((x.iter().copied().collect(), dx.iter().copied().collect()));
            break;
        }
    }
    let quasi_diagonal = witness.is_none();
    let reason = if manifold.rank_c == d {
        VerdictReason::CInvertible
    } else if d == 1 {
        VerdictReason::D1Rule
    } else if quasi_diagonal {
        VerdictReason::DRestrictedIdentity
    } else {
        VerdictReason::GammaInDelta
    };
    let epsilon = if quasi_diagonal {
        Some(decay_constant(&smoothed_form(s, tol)?, &manifold.orthonormal_basis()))
    } else {
        None
    };
    Ok(Verdict {
        quasi_diagonal,
        reason,
        epsilon,
        witness,
        gamma_dim: manifold.dim(),
    })
}

/// Largest `ε` with `Q_S(z) ≥ ε|x − y|²` for all `z = (x, y)`, given an
/// orthonormal basis of `Γ_S ⊂ Δ`.
///
/// With `Z` spanning `Γ_S^⊥` this is the smallest generalized eigenvalue of
/// `ZᵀQ_S Z v = λ ZᵀΔ₂Z v`, `Δ₂ = [[I, −I], [−I, I]]`. Eigenvalues of
/// `ZᵀQ_S Z` at rounding level give `ε ≈ 0` rather than being dropped, so a
/// badly conditioned `S` shows up as a tiny `ε`.
pub fn decay_constant(form: &SmoothedKernelForm, gamma: &DMatrix<f64>) -> f64 {
    let d = form.dim();
    let z = linalg::orthogonal_complement(gamma);
    let id = DMatrix::<f64>::identity(d, d);
    let delta = blocks2(&id, &(-&id), &(-&id), &id);
    let (vals, v) = linalg::sym_eigen_ascending(&(z.transpose() * &form.qs * &z));
    let zv = &z * v;
    let scale = DMatrix::from_diagonal(&vals.map(|x| 1.0 / x.max(f64::MIN_POSITIVE).sqrt()));
    let pencil = &scale * zv.transpose() * delta * &zv * &scale;
    let (ev, _) = linalg::sym_eigen_ascending(&pencil);
    let top = ev.iter().copied().fold(0.0, f64::max);
    if top > 0.0 {
        1.0 / top
    } else {
        f64::INFINITY
    }
}

/// Geometric situation of a `d = 2` matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum D2Scenario {
    CInvertible,
    CZero { d_is_identity: bool },
    /// `rank C = 1` and `ker C ∩ ker Cᵀ = {0}`.
    Rank1Transversal,
    /// `rank C = 1` and `ker C = ker Cᵀ`.
    Rank1Dilation { restricted_identity: bool },
}

impl D2Scenario {
    pub fn quasi_diagonal(&self) -> bool {
        match *self {
            D2Scenario::CInvertible => true,
            D2Scenario::CZero { d_is_identity } => d_is_identity,
            D2Scenario::Rank1Transversal => false,
            D2Scenario::Rank1Dilation {
                restricted_identity,
            } => restricted_identity,
        }
    }
}

/// Case analysis for `d = 2` by the rank of `C` and the position of its
/// kernels.
pub fn classify_d2(s: &SymplecticMatrix, tol: &Tolerances) -> Result<D2Scenario> {
    if s.dim() != 2 {
        return Err(KernelError::WrongDimension {
            expected: 2,
            found: s.dim(),
        });
    }
    let manifold = localization_manifold(s, tol)?;
    let scale = linalg::spectral_norm(&s.d()).max(1.0);
    let is_identity_on = |basis: &DMatrix<f64>, image: &DMatrix<f64>| {
        (image - basis).norm() <= tol.identity * scale
    };
    Ok(match manifold.rank_c {
        2 => D2Scenario::CInvertible,
        0 => D2Scenario::CZero {
            d_is_identity: (s.d() - DMatrix::identity(2, 2)).norm() <= tol.identity * scale,
        },
        _ => {
            // R(C)^⊥ = ker Cᵀ; compare it with ker C.
            let sub = subspace::subspace_bases(s, tol);
            let ker_c = match sub {
                Ok(sub) => sub.ker_c.columns,
                Err(_) => {
                    let svd = linalg::SortedSvd::of_square(&s.c());
                    linalg::columns(&svd.v, 1, 1)
                }
            };
            let overlap = (ker_c.transpose() * &manifold.range_c_perp)[(0, 0)].abs();
            if 1.0 - overlap <= tol.identity.sqrt() {
                D2Scenario::Rank1Dilation {
                    restricted_identity: is_identity_on(&manifold.range_c_perp, &manifold.image),
                }
            } else {
                D2Scenario::Rank1Transversal
            }
        }
    })
}
