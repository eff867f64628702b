//! Pseudo-inverses, block subspaces and the orthogonal normalization of `S`.

use nalgebra::DMatrix;

use crate::linalg::{self, SortedSvd};
use crate::symplectic::{validate_symplectic, Result, SymplecticError, SymplecticMatrix, Tolerances};

/// Moore–Penrose inverse of an `m × n` matrix via the SVD.
///
/// Singular values below `rank_tol · σ_max` are treated as zero.
pub fn pseudo_inverse(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let (rows, cols) = m.shape();
    if m.is_empty() {
        return DMatrix::zeros(cols, rows);
    }
    let (u, sigma, v) = linalg::thin_svd(m);
    let cutoff = rank_tol * sigma[0];
    let mut out = DMatrix::zeros(cols, rows);
    for (k, &s) in sigma.iter().enumerate() {
        if s > 0.0 && s >= cutoff {
            out += v.column(k) * u.column(k).transpose() / s;
        }
    }
    out
}

/// Which subspace a basis spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubspaceRole {
    RangeB,
    KerB,
    KerBPerp,
    RangeBPerp,
    RangeCPerp,
    KerC,
}

/// Orthonormal basis of a subspace of ℝᵈ, stored as the columns of a `d × r`
/// matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    pub role: SubspaceRole,
    pub columns: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn ambient_dim(&self) -> usize {
        self.columns.nrows()
    }

    pub fn rank(&self) -> usize {
        self.columns.ncols()
    }

    /// `‖VᵀV − I‖`.
    pub fn orthonormality_residual(&self) -> f64 {
        let r = self.rank();
        (self.columns.transpose() * &self.columns - DMatrix::identity(r, r)).norm()
    }
}

/// The six block subspaces of a symplectic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSubspaces {
    pub rank_b: usize,
    pub rank_c: usize,
    pub range_b: SubspaceBasis,
    pub ker_b: SubspaceBasis,
    pub ker_b_perp: SubspaceBasis,
    pub range_b_perp: SubspaceBasis,
    pub range_c_perp: SubspaceBasis,
    pub ker_c: SubspaceBasis,
}

fn split_block(
    block: &DMatrix<f64>,
    name: &'static str,
    scale: f64,
    tol: &Tolerances,
) -> Result<(usize, SortedSvd)> {
    let svd = SortedSvd::of_square(block);
    let decision = linalg::decide_rank(&svd.sigma, scale, tol.rank, tol.rank_gap_ratio);
    if decision.ambiguous {
        return Err(SymplecticError::RankAmbiguous {
            block: name,
            gap: decision.gap,
        });
    }
    Ok((decision.rank, svd))
}

/// Reference scale for rank decisions on `B`: `‖[A B]‖₂`.
pub fn b_scale(s: &SymplecticMatrix) -> f64 {
    let d = s.dim();
    linalg::spectral_norm(&s.matrix().rows(0, d).into_owned())
}

/// Reference scale for rank decisions on `C`: `‖[C D]‖₂`. Depends on the
/// bottom block row only.
pub fn c_scale(s: &SymplecticMatrix) -> f64 {
    let d = s.dim();
    linalg::spectral_norm(&s.matrix().rows(d, d).into_owned())
}

/// Orthonormal bases of `R(B)`, `ker B`, `ker(B)^⊥`, `R(B)^⊥`, `R(C)^⊥` and
/// `ker C` from the singular vectors of `B` and `C`.
pub fn subspace_bases(s: &SymplecticMatrix, tol: &Tolerances) -> Result<BlockSubspaces> {
    let d = s.dim();
    let (rank_b, svd_b) = split_block(&s.b(), "B", b_scale(s), tol)?;
    let (rank_c, svd_c) = split_block(&s.c(), "C", c_scale(s), tol)?;
    let basis = |role, m: &DMatrix<f64>, start, count| {
        let mut columns = linalg::columns(m, start, count);
        linalg::fix_column_signs(&mut columns);
        SubspaceBasis { role, columns }
    };
    Ok(BlockSubspaces {
        rank_b,
        rank_c,
        range_b: basis(SubspaceRole::RangeB, &svd_b.u, 0, rank_b),
        range_b_perp: basis(SubspaceRole::RangeBPerp, &svd_b.u, rank_b, d - rank_b),
        ker_b_perp: basis(SubspaceRole::KerBPerp, &svd_b.v, 0, rank_b),
        ker_b: basis(SubspaceRole::KerB, &svd_b.v, rank_b, d - rank_b),
        range_c_perp: basis(SubspaceRole::RangeCPerp, &svd_c.u, rank_c, d - rank_c),
        ker_c: basis(SubspaceRole::KerC, &svd_c.v, rank_c, d - rank_c),
    })
}

/// Rank of `C` and an orthonormal basis of `R(C)^⊥ = ker(Cᵀ)`. Reads only the
/// bottom block row of `s`.
pub fn range_c_perp(s: &SymplecticMatrix, tol: &Tolerances) -> Result<(usize, SubspaceBasis)> {
    let d = s.dim();
    let (rank_c, svd_c) = split_block(&s.c(), "C", c_scale(s), tol)?;
    let mut columns = linalg::columns(&svd_c.u, rank_c, d - rank_c);
    linalg::fix_column_signs(&mut columns);
    Ok((
        rank_c,
        SubspaceBasis {
            role: SubspaceRole::RangeCPerp,
            columns,
        },
    ))
}

/// Orthonormal basis of the column span of `m` (relative rank cutoff `tol`).
pub fn column_span(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let (u, sigma, _) = linalg::thin_svd(m);
    let keep = sigma.iter().filter(|&&s| s > 0.0 && s >= tol * sigma[0]).count();
    let mut out = linalg::columns(&u, 0, keep);
    linalg::fix_column_signs(&mut out);
    out
}

/// Distance between `Dᵀ(R(B)^⊥)` and `ker B`; zero exactly when the two
/// subspaces coincide.
pub fn alignment_residual(s: &SymplecticMatrix, tol: &Tolerances) -> Result<f64> {
    let sub = subspace_bases(s, tol)?;
    let image = column_span(&(s.d().transpose() * &sub.range_b_perp.columns), tol.rank);
    Ok(linalg::subspace_distance(&image, &sub.ker_b.columns))
}

/// Result of [`normalize_orientation`]: `S = 𝒟_P S′ 𝒟_Q`, i.e. the blocks of
/// `S′` are `PAQ`, `PBQ`, `PCQ`, `PDQ`.
#[derive(Debug, Clone)]
pub struct Normalization {
    pub p: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub s_prime: SymplecticMatrix,
    /// Rank of `B` (and of `B′`).
    pub rank_b: usize,
    /// Distance between `D′ᵀ(R(B′)^⊥)` and `ker B′`.
    pub alignment_residual: f64,
}

/// Rotate `S` so that `ker B′` and `R(B′)^⊥` are spanned by the first `d − r`
/// canonical vectors.
///
/// The first `d − r` columns of `Q` are the basis of `ker B`; the first
/// `d − r` rows of `P` are the basis of `R(B)^⊥`. Both are completed by the
/// SVD basis of the orthogonal complement.
///
/// Orthogonal `P`, `Q` move `Dᵀ(R(B)^⊥)` and `ker B` rigidly, so
/// `alignment_residual` of `S′` equals that of `S`; it vanishes only for
/// matrices that were already aligned.
pub fn normalize_orientation(s: &SymplecticMatrix, tol: &Tolerances) -> Result<Normalization> {
    let d = s.dim();
    let sub = subspace_bases(s, tol)?;
    let r = sub.rank_b;
    if r == 0 {
        return Err(SymplecticError::NotApplicable("block B is zero"));
    }
    if r == d {
        return Err(SymplecticError::NotApplicable("block B is invertible"));
    }
    let ker = &sub.ker_b.columns;
    let rperp = &sub.range_b_perp.columns;
    let mut q = DMatrix::zeros(d, d);
    q.view_mut((0, 0), (d, d - r)).copy_from(ker);
    q.view_mut((0, d - r), (d, r))
        .copy_from(&linalg::orthogonal_complement(ker));
    let mut pt = DMatrix::zeros(d, d);
    pt.view_mut((0, 0), (d, d - r)).copy_from(rperp);
    pt.view_mut((0, d - r), (d, r))
        .copy_from(&linalg::orthogonal_complement(rperp));
    let p = pt.transpose();

    let left = linalg::block_diag(&[&p, &p]);
    let right = linalg::block_diag(&[&q, &q]);
    let s_prime = validate_symplectic(left * s.matrix() * right, tol.symplectic)?;

    let lead: DMatrix<f64> = DMatrix::identity(d, d).columns(0, d - r).into_owned();
    let image = column_span(&(s_prime.d().transpose() * &lead), tol.rank);
    let alignment_residual = linalg::subspace_distance(&image, &lead);
    Ok(Normalization {
        p,
        q,
        s_prime,
        rank_b: r,
        alignment_residual,
    })
}

/// Symmetry residuals of `WᵀB⁺AW` (W spans `ker(B)^⊥`) and `V₁ᵀDB⁺V₁`
/// (V₁ spans `R(B)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryReport {
    pub rank_b: usize,
    pub lemma_residual: f64,
    pub corollary_residual: f64,
    /// Frobenius norms of the two matrices, for relative comparisons.
    pub lemma_norm: f64,
    pub corollary_norm: f64,
}

pub fn check_symmetry_lemma(s: &SymplecticMatrix, tol: &Tolerances) -> Result<SymmetryReport> {
    let sub = subspace_bases(s, tol)?;
    let b_pinv = b_pinv(s, tol);
    let w = &sub.ker_b_perp.columns;
    let v1 = &sub.range_b.columns;
    let lemma = w.transpose() * &b_pinv * s.a() * w;
    let cor = v1.transpose() * s.d() * &b_pinv * v1;
    Ok(SymmetryReport {
        rank_b: sub.rank_b,
        lemma_residual: linalg::asymmetry(&lemma),
        corollary_residual: linalg::asymmetry(&cor),
        lemma_norm: lemma.norm(),
        corollary_norm: cor.norm(),
    })
}

/// Pseudo-inverse of the block `B` of `s` using the same cutoff as
/// [`subspace_bases`].
pub fn b_pinv(s: &SymplecticMatrix, tol: &Tolerances) -> DMatrix<f64> {
    let b = s.b();
    let own = linalg::spectral_norm(&b);
    if own == 0.0 {
        return DMatrix::zeros(b.ncols(), b.nrows());
    }
    pseudo_inverse(&b, tol.rank * b_scale(s) / own)
}
