//! Small dense linear-algebra helpers shared by the analysis modules.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. Bases are returned as
//! matrices whose columns are orthonormal, ordered by descending singular
//! value, with the sign fixed so that the first non-negligible entry of each
//! column is positive.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Entries below this magnitude are skipped when fixing column signs.
const SIGN_EPS: f64 = 1e-9;

/// Thin SVD `m = U·diag(σ)·Vᵀ` with `σ` descending.
///
/// Backed by faer: nalgebra's bidiagonal SVD loses orthogonality on some
/// rank-deficient inputs (e.g. orthogonal projectors).
pub fn thin_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return (DMatrix::zeros(r, 0), Vec::new(), DMatrix::zeros(c, 0));
    }
    let fm = faer::Mat::<f64>::from_fn(r, c, |i, j| m[(i, j)]);
    let svd = fm.thin_svd().expect("SVD of a finite matrix");
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    let (fu, fv) = (svd.U(), svd.V());
    let u = DMatrix::from_fn(r, k, |i, j| fu[(i, order[j])]);
    let v = DMatrix::from_fn(c, k, |i, j| fv[(i, order[j])]);
    (u, order.iter().map(|&j| s[j]).collect(), v)
}

/// Singular value decomposition with descending singular values and
/// deterministic column signs.
#[derive(Debug, Clone)]
pub struct SortedSvd {
    pub u: DMatrix<f64>,
    pub sigma: DVector<f64>,
    pub v: DMatrix<f64>,
}

impl SortedSvd {
    /// Full SVD of a square matrix.
    pub fn of_square(m: &DMatrix<f64>) -> Self {
        debug_assert!(m.is_square());
        let n = m.nrows();
        if n == 0 {
            return Self {
                u: DMatrix::zeros(0, 0),
                sigma: DVector::zeros(0),
                v: DMatrix::zeros(0, 0),
            };
        }
        let (u, sigma, v) = thin_svd(m);
        let order: Vec<usize> = (0..n).collect();
        let mut out = Self {
            u: DMatrix::zeros(n, n),
            sigma: DVector::zeros(n),
            v: DMatrix::zeros(n, n),
        };
        for (dst, &src) in order.iter().enumerate() {
            out.sigma[dst] = sigma[src];
            out.u.set_column(dst, &u.column(src));
            out.v.set_column(dst, &v.column(src));
        }
        // Flip u and v columns together so that U·Σ·Vᵀ is unchanged. The sign
        // is fixed on v, whose columns span the kernel and co-kernel bases.
        for j in 0..n {
            let lead = out.v.column(j).iter().copied().find(|x| x.abs() > SIGN_EPS);
            if matches!(lead, Some(x) if x < 0.0) {
                out.u.column_mut(j).neg_mut();
                out.v.column_mut(j).neg_mut();
            }
        }
        out
    }

    pub fn max_singular(&self) -> f64 {
        self.sigma.iter().copied().fold(0.0, f64::max)
    }
}

/// Flip each column so that its first entry with magnitude above `SIGN_EPS`
/// is positive.
pub fn fix_column_signs(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let lead = m.column(j).iter().copied().find(|x| x.abs() > SIGN_EPS);
        if matches!(lead, Some(x) if x < 0.0) {
            m.column_mut(j).neg_mut();
        }
    }
}

/// Outcome of a numerical rank decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankDecision {
    pub rank: usize,
    /// Ratio between the smallest kept and the largest dropped singular value
    /// (`f64::INFINITY` when one side is empty).
    pub gap: f64,
    /// True when a singular value sits within `gap_ratio` of the cutoff.
    pub ambiguous: bool,
}

/// Count singular values at or above `tol * scale`.
///
/// The decision is flagged ambiguous when a singular value lies in the band
/// `[tol * scale / gap_ratio, tol * scale * gap_ratio]`.
pub fn decide_rank(sigma: &DVector<f64>, scale: f64, tol: f64, gap_ratio: f64) -> RankDecision {
    let cutoff = tol * scale;
    if scale <= 0.0 || !scale.is_finite() {
        return RankDecision {
            rank: 0,
            gap: f64::INFINITY,
            ambiguous: false,
        };
    }
    let rank = sigma.iter().filter(|&&s| s >= cutoff).count();
    let kept_min = sigma
        .iter()
        .copied()
        .filter(|&s| s >= cutoff)
        .fold(f64::INFINITY, f64::min);
    let dropped_max = sigma
        .iter()
        .copied()
        .filter(|&s| s < cutoff)
        .fold(0.0, f64::max);
    let gap = if rank == 0 || rank == sigma.len() || dropped_max == 0.0 {
        f64::INFINITY
    } else {
        kept_min / dropped_max
    };
    let lo = cutoff / gap_ratio;
    let hi = cutoff * gap_ratio;
    let ambiguous = sigma.iter().any(|&s| s >= lo && s <= hi && s > 0.0);
    RankDecision {
        rank,
        gap,
        ambiguous,
    }
}

/// Columns `range` of `m` as a new matrix.
pub fn columns(m: &DMatrix<f64>, start: usize, count: usize) -> DMatrix<f64> {
    m.columns(start, count).into_owned()
}

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    thin_svd(m).1.first().copied().unwrap_or(0.0)
}

/// 2-norm condition number; `f64::INFINITY` for singular input.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let s = thin_svd(m).1;
    let max = s.iter().copied().fold(0.0, f64::max);
    let min = s.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `‖M − Mᵀ‖_F`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues ascending.
pub fn sym_eigen_ascending(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vals = DVector::zeros(n);
    let mut vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    fix_column_signs(&mut vecs);
    (vals, vecs)
}

/// Invert a matrix, returning `None` when it is singular.
pub fn inverse(m: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if m.is_empty() {
        return Some(DMatrix::zeros(0, 0));
    }
    m.clone().try_inverse()
}

/// Block-diagonal matrix from square blocks.
pub fn block_diag(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n: usize = blocks.iter().map(|b| b.nrows()).sum();
    let m: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, m);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), (b.nrows(), b.ncols())).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Orthonormal basis of the orthogonal complement of `span(cols)` in ℝⁿ.
///
/// `cols` must have orthonormal columns. The complement basis is taken from
/// the SVD of the projector `I − cols·colsᵀ`, in descending singular order.
pub fn orthogonal_complement(cols: &DMatrix<f64>) -> DMatrix<f64> {
    let n = cols.nrows();
    let k = cols.ncols();
    let proj = DMatrix::identity(n, n) - cols * cols.transpose();
    let svd = SortedSvd::of_square(&proj);
    columns(&svd.u, 0, n - k)
}

/// Residual of `basis` spanning the same subspace as `other`: the larger of
/// the two projection defects, or infinity on a dimension mismatch. See
/// [`containment_residual`] for a finite variant.
pub fn subspace_distance(basis: &DMatrix<f64>, other: &DMatrix<f64>) -> f64 {
    if basis.ncols() != other.ncols() {
        return f64::INFINITY;
    }
    if basis.ncols() == 0 {
        return 0.0;
    }
    let proj_other = other * other.transpose();
    let proj_basis = basis * basis.transpose();
    let a = (basis - &proj_other * basis).norm();
    let b = (other - &proj_basis * other).norm();
    a.max(b)
}

/// `max(‖(I − P_b)a‖, ‖(I − P_a)b‖)` for orthonormal `a`, `b` of any
/// dimensions; zero exactly when the spans coincide.
pub fn containment_residual(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let out = |u: &DMatrix<f64>, v: &DMatrix<f64>| {
        if u.ncols() == 0 {
            0.0
        } else if v.ncols() == 0 {
            u.norm()
        } else {
            (u - v * (v.transpose() * u)).norm()
        }
    };
    out(a, b).max(out(b, a))
}
