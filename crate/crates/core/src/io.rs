//! JSON and CSV exchange formats.
//!
//! * matrix: `{"d": 1, "rows": [[0, 1], [-1, 0]]}`
//! * word: `[{"type": "J"}, {"type": "VP", "P": [[1]]}, {"type": "DE", "E": [[2]]}]`,
//!   or `{"d": 2, "factors": [...]}`. A `J` entry may carry `"d"`. A word
//!   that fixes no dimension (e.g. `[]`) is read with the caller's default.
//! * analysis report: [`AnalysisReport`].
//! * kernel samples: CSV `x,y,re,im,abs` (vectors joined with `;`).

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernel::{
    self, Amplitude, D2Scenario, KernelCase, KernelError, SmoothedKernelForm, Verdict,
    VerdictReason,
};
use crate::linalg;
use crate::oracle::KernelSamples;
use crate::subspace;
use crate::symplectic::{
    validate_symplectic, Generator, GeneratorWord, SymplecticError, SymplecticMatrix, Tolerances,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = IoError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub d: usize,
    pub rows: Vec<Vec<f64>>,
}

fn dense(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(IoError::Invalid(format!("{what} has no rows")));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(IoError::Invalid(format!("{what} has rows of different length")));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(IoError::Invalid(format!("{what} has non-finite entries")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

impl MatrixFile {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            d: m.nrows() / 2,
            rows: rows_of(m),
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        let m = dense(&self.rows, "matrix")?;
        if m.nrows() != 2 * self.d || m.ncols() != 2 * self.d {
            return Err(IoError::Invalid(format!(
                "matrix is {}x{}, expected {}x{} for d = {}",
                m.nrows(),
                m.ncols(),
                2 * self.d,
                2 * self.d,
                self.d
            )));
        }
        Ok(m)
    }
}

pub fn parse_matrix(json: &str) -> Result<DMatrix<f64>> {
    serde_json::from_str::<MatrixFile>(json)?.to_matrix()
}

/// Parse and validate a symplectic matrix.
pub fn parse_symplectic(json: &str, tol: &Tolerances) -> Result<SymplecticMatrix> {
    Ok(validate_symplectic(parse_matrix(json)?, tol.symplectic)?)
}

pub fn matrix_to_json(m: &DMatrix<f64>) -> String {
    serde_json::to_string_pretty(&MatrixFile::from_matrix(m)).expect("plain data serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum FactorFile {
    J {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        d: Option<usize>,
    },
    VP {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
    },
    DE {
        #[serde(rename = "E")]
        e: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WordFile {
    Bare(Vec<FactorFile>),
    WithDim { d: usize, factors: Vec<FactorFile> },
}

impl WordFile {
    pub fn from_word(w: &GeneratorWord) -> Self {
        let d = w.dim();
        let factors = w
            .factors()
            .iter()
            .map(|g| match g {
                Generator::Fourier { dim } => FactorFile::J { d: Some(*dim) },
                Generator::Chirp(p) => FactorFile::VP { p: rows_of(p) },
                Generator::Dilation(e) => FactorFile::DE { e: rows_of(e) },
            })
            .collect();
        WordFile::WithDim { d, factors }
    }

    /// Build the word; `default_dim` is used when nothing in the file fixes
    /// the dimension.
    pub fn to_word(&self, default_dim: usize, tol: &Tolerances) -> Result<GeneratorWord> {
        let (declared, factors) = match self {
            WordFile::Bare(f) => (None, f),
            WordFile::WithDim { d, factors } => (Some(*d), factors),
        };
        let inferred = factors.iter().find_map(|f| match f {
            FactorFile::J { d } => *d,
            FactorFile::VP { p } => Some(p.len()),
            FactorFile::DE { e } => Some(e.len()),
        });
        let d = declared.or(inferred).unwrap_or(default_dim);
        let mut gens = Vec::with_capacity(factors.len());
        for f in factors {
            let g = match f {
                FactorFile::J { d: jd } => Generator::Fourier {
                    dim: jd.unwrap_or(d),
                },
                FactorFile::VP { p } => Generator::Chirp(dense(p, "P")?),
                FactorFile::DE { e } => Generator::Dilation(dense(e, "E")?),
            };
            g.check(tol)?;
            gens.push(g);
        }
        Ok(GeneratorWord::new(d, gens)?)
    }
}

pub fn parse_word(json: &str, default_dim: usize, tol: &Tolerances) -> Result<GeneratorWord> {
    serde_json::from_str::<WordFile>(json)?.to_word(default_dim, tol)
}

pub fn word_to_json(w: &GeneratorWord) -> String {
    serde_json::to_string_pretty(&WordFile::from_word(w)).expect("plain data serializes")
}

/// Residuals attached to an analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Relative symplectic residual of the input.
    pub symplectic: f64,
    /// Smallest eigenvalue of `Q_S` divided by `‖Q_S‖`.
    pub psd_min_eigenvalue: f64,
    /// Containment residual between `null(Q_S)` and `Γ_S`.
    pub null_space_vs_gamma: f64,
    /// Numerical dimension of `null(Q_S)`; compare with `gamma_basis`.
    pub null_dim: usize,
    /// Asymmetry of `WᵀB⁺AW`.
    pub symmetry_lemma: f64,
    /// Asymmetry of `V₁ᵀDB⁺V₁`.
    pub symmetry_corollary: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub x: Vec<f64>,
    pub dtx: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerdictLabel {
    QuasiDiagonal,
    NotQuasiDiagonal,
}

/// Serialized result of [`analyze`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub d: usize,
    pub case: KernelCase,
    pub verdict: VerdictLabel,
    pub reason: VerdictReason,
    /// Orthonormal basis of `Γ_S ⊂ ℝ²ᵈ`, one vector per entry.
    pub gamma_basis: Vec<Vec<f64>>,
    /// `Γ_S` is a proper subspace of the diagonal.
    pub gamma_strictly_inside_delta: bool,
    /// `Q_S`, row-major.
    #[serde(rename = "QS")]
    pub qs: Vec<f64>,
    pub amplitude: Amplitude,
    pub epsilon: Option<f64>,
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2_scenario: Option<D2Scenario>,
    pub residuals: Residuals,
}

/// Everything computed for one matrix.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub form: SmoothedKernelForm,
    pub verdict: Verdict,
    pub manifold: kernel::LocalizationManifold,
    pub d2_scenario: Option<D2Scenario>,
    pub residuals: Residuals,
}

pub fn analyze(s: &SymplecticMatrix, tol: &Tolerances) -> Result<Analysis, KernelError> {
    let form = kernel::smoothed_form(s, tol)?;
    let verdict = kernel::verdict(s, tol)?;
    let manifold = kernel::localization_manifold(s, tol)?;
    let d2_scenario = if s.dim() == 2 {
        Some(kernel::classify_d2(s, tol)?)
    } else {
        None
    };
    let sym = subspace::check_symmetry_lemma(s, tol)?;
    let norm = form.norm();
    let residuals = Residuals {
        symplectic: s.residual(),
        psd_min_eigenvalue: if norm > 0.0 {
            form.min_eigenvalue() / norm
        } else {
            0.0
        },
        null_space_vs_gamma: linalg::containment_residual(
            &form.null_basis,
            &manifold.orthonormal_basis(),
        ),
        null_dim: form.null_basis.ncols(),
        symmetry_lemma: sym.lemma_residual,
        symmetry_corollary: sym.corollary_residual,
    };
    Ok(Analysis {
        form,
        verdict,
        manifold,
        d2_scenario,
        residuals,
    })
}

impl Analysis {
    pub fn report(&self) -> AnalysisReport {
        let d = self.form.dim();
        let gamma = self.manifold.orthonormal_basis();
        let finite = |x: f64| x.is_finite().then_some(x);
        AnalysisReport {
            d,
            case: self.form.case,
            verdict: if self.verdict.quasi_diagonal {
                VerdictLabel::QuasiDiagonal
            } else {
                VerdictLabel::NotQuasiDiagonal
            },
            reason: self.verdict.reason,
            gamma_basis: (0..gamma.ncols())
                .map(|j| gamma.column(j).iter().copied().collect())
                .collect(),
            gamma_strictly_inside_delta: self.verdict.quasi_diagonal
                && self.verdict.gamma_dim > 0
                && self.verdict.gamma_dim < d,
            qs: self.form.qs.transpose().as_slice().to_vec(),
            amplitude: self.form.amplitude,
            epsilon: self.verdict.epsilon.and_then(finite),
            witness: self.verdict.witness.clone().map(|(x, dtx)| Witness { x, dtx }),
            d2_scenario: self.d2_scenario,
            residuals: self.residuals.clone(),
        }
    }
}

/// Write `x,y,re,im,abs` rows.
pub fn write_samples_csv(samples: &KernelSamples, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "x,y,re,im,abs")?;
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(";")
    };
    for (x, y, v) in samples.triples() {
        writeln!(out, "{},{},{},{},{}", join(x), join(y), v.re, v.im, v.norm())?;
    }
    Ok(())
}
