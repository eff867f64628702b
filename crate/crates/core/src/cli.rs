//! Command-line front end.
//!
//! Exit codes: 0 ok, 2 invalid input, 3 rank ambiguity, 4 verification
//! failure, 5 numerical preconditions (aliasing, extent, grid).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::io::{self, AnalysisReport, IoError, VerdictLabel};
use crate::kernel::{self, Amplitude, KernelCase, KernelError};
use crate::oracle::{self, FitReport, Grid, OracleError, QuadratureWarning};
use crate::symplectic::{
    word_product, Generator, GeneratorWord, SymplecticError, Tolerances,
};
use crate::tf::{self, GaborProfile, PhaseSpacePoint, TfReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID_INPUT: i32 = 2;
pub const EXIT_RANK_AMBIGUOUS: i32 = 3;
pub const EXIT_VERIFY_FAILED: i32 = 4;
pub const EXIT_NUMERICAL: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "metaplectic", version, about = "Kernel localization of metaplectic operators")]
pub struct Cli {
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a symplectic matrix (JSON `{"d", "rows"}`).
    Analyze {
        /// Matrix JSON file.
        matrix: PathBuf,
    },
    /// Sample the smoothed kernel of a generator word and fit it against the
    /// analytic form.
    Verify {
        /// Word JSON file.
        word: PathBuf,
    },
    /// Write the named example matrices, words and expected verdicts.
    Corpus {
        /// Output directory (or pass --out).
        dir: Option<PathBuf>,
    },
    /// Wigner covariance and Gabor matrix checks for a d = 1 word.
    Tfcheck {
        /// Word JSON file.
        word: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Relative rank cutoff for the blocks of S.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub rank_tol: f64,
    /// Relative tolerance for negative eigenvalues of Q_S.
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub psd_tol: f64,
    /// Condition-number cap for inverted blocks.
    #[arg(long, global = true, default_value_t = 1e12)]
    pub condition_cap: f64,
    /// Grid points per axis (power of two, >= 64).
    #[arg(long, global = true)]
    pub grid_n: Option<usize>,
    /// Grid extent L; the grid covers [-L/2, L/2)^d.
    #[arg(long, global = true)]
    pub extent: Option<f64>,
    /// Output file (reports) or directory (corpus); stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Bound on the relative fit error accepted by `verify`.
    #[arg(long, global = true, default_value_t = 0.02)]
    pub max_err: f64,
    /// Dimension assumed for words that fix none (e.g. `[]`).
    #[arg(long, global = true, default_value_t = 1)]
    pub word_dim: usize,
    /// Print progress to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

/// Validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tol: Tolerances,
    pub grid_n: Option<usize>,
    pub extent: Option<f64>,
    pub out: Option<PathBuf>,
    pub max_err: f64,
    pub word_dim: usize,
    pub verbosity: u8,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn symplectic_code(e: &SymplecticError) -> i32 {
    match e {
        SymplecticError::RankAmbiguous { .. } => EXIT_RANK_AMBIGUOUS,
        _ => EXIT_INVALID_INPUT,
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match &e {
            IoError::Symplectic(s) => symplectic_code(s),
            _ => EXIT_INVALID_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<KernelError> for Failure {
    fn from(e: KernelError) -> Self {
        let code = match &e {
            KernelError::Symplectic(s) => symplectic_code(s),
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match &e {
            OracleError::Symplectic(s) => symplectic_code(s),
            _ => EXIT_NUMERICAL,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SymplecticError> for Failure {
    fn from(e: SymplecticError) -> Self {
        Failure::new(symplectic_code(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(EXIT_INVALID_INPUT, e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

impl ConfigArgs {
    pub fn validate(&self) -> CliResult<RunConfig> {
        for (name, v) in [
            ("--rank-tol", self.rank_tol),
            ("--psd-tol", self.psd_tol),
            ("--condition-cap", self.condition_cap),
            ("--max-err", self.max_err),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Failure::new(EXIT_INVALID_INPUT, format!("{name} must be positive")));
            }
        }
        // grid problems are numerical preconditions
        if let Some(n) = self.grid_n {
            if !n.is_power_of_two() {
                return Err(Failure::new(EXIT_NUMERICAL, "--grid-n must be a power of two"));
            }
        }
        if let Some(l) = self.extent {
            if !(l.is_finite() && l > 0.0) {
                return Err(Failure::new(EXIT_NUMERICAL, "--extent must be positive"));
            }
        }
        if self.word_dim == 0 {
            return Err(Failure::new(EXIT_INVALID_INPUT, "--word-dim must be positive"));
        }
        let tol = Tolerances {
            rank: self.rank_tol,
            psd: self.psd_tol,
            condition_cap: self.condition_cap,
            ..Tolerances::default()
        };
        Ok(RunConfig {
            tol,
            grid_n: self.grid_n,
            extent: self.extent,
            out: self.out.clone(),
            max_err: self.max_err,
            word_dim: self.word_dim,
            verbosity: self.verbose,
        })
    }
}

impl RunConfig {
    /// Default grid for `d`, with `--grid-n` / `--extent` overrides.
    pub fn grid(&self, dim: usize) -> CliResult<Grid> {
        let base = Grid::default_for(dim)?;
        Ok(Grid::new(
            dim,
            self.grid_n.unwrap_or(base.n),
            self.extent.unwrap_or(base.extent),
        )?)
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbosity > 0 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn emit(cfg: &RunConfig, json: &str, stdout: &mut dyn Write) -> CliResult<()> {
    match &cfg.out {
        Some(p) => fs::write(p, format!("{json}\n"))?,
        None => writeln!(stdout, "{json}")?,
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
            let _ = if code == EXIT_OK {
                write!(stdout, "{e}")
            } else {
                write!(stderr, "{e}")
            };
            return code;
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let cfg = cli.config.validate()?;
    match &cli.command {
        Command::Analyze { matrix } => {
            let report = cmd_analyze(matrix, &cfg)?;
            emit(&cfg, &to_json(&report), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Verify { word } => {
            let report = cmd_verify(word, &cfg)?;
            emit(&cfg, &to_json(&report), stdout)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
        Command::Corpus { dir } => {
            let dir = dir
                .clone()
                .or_else(|| cfg.out.clone())
                .ok_or_else(|| Failure::new(EXIT_INVALID_INPUT, "corpus needs an output directory"))?;
            let names = cmd_corpus(&dir)?;
            for n in names {
                writeln!(stdout, "{}", dir.join(n).display())?;
            }
            Ok(EXIT_OK)
        }
        Command::Tfcheck { word } => {
            let report = cmd_tfcheck(word, &cfg)?;
            emit(&cfg, &to_json(&report), stdout)?;
            Ok(if report.pass { EXIT_OK } else { EXIT_VERIFY_FAILED })
        }
    }
}

pub fn cmd_analyze(path: &Path, cfg: &RunConfig) -> CliResult<AnalysisReport> {
    let text = fs::read_to_string(path)?;
    let s = io::parse_symplectic(&text, &cfg.tol)?;
    cfg.log(format!("analyzing d = {} matrix from {}", s.dim(), path.display()));
    Ok(io::analyze(&s, &cfg.tol)?.report())
}

fn read_word(path: &Path, cfg: &RunConfig) -> CliResult<GeneratorWord> {
    let text = fs::read_to_string(path)?;
    Ok(io::parse_word(&text, cfg.word_dim, &cfg.tol)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub d: usize,
    pub factors: usize,
    pub case: KernelCase,
    pub grid: Grid,
    pub fit: FitReport,
    pub amplitude: Amplitude,
    /// `|c_fit − c| / c` when the analytic amplitude is known.
    pub amplitude_rel_err: Option<f64>,
    pub max_err: f64,
    pub warnings: Vec<QuadratureWarning>,
    pub pass: bool,
}

/// Sample points for `verify`: a lattice of radius 2 (9 points per axis in
/// d = 1, 5 in d = 2).
pub fn verify_points(dim: usize) -> Vec<Vec<f64>> {
    oracle::lattice_points(dim, 2.0, if dim == 1 { 9 } else { 5 })
}

pub fn verify_word(w: &GeneratorWord, cfg: &RunConfig) -> CliResult<VerifyReport> {
    let d = w.dim();
    let grid = cfg.grid(d)?;
    let s = word_product(w, &cfg.tol)?;
    let form = kernel::smoothed_form(&s, &cfg.tol)?;
    let pts = verify_points(d);
    cfg.log(format!("sampling {}x{} kernel entries on n = {}", pts.len(), pts.len(), grid.n));
    let samples = oracle::sample_smoothed_kernel(w, &grid, &pts, &pts)?;
    let fit = oracle::fit_against_analytic(&samples, &form)?;
    let amplitude_rel_err = form.amplitude.known().map(|c| (fit.c_fit - c).abs() / c);
    let pass = fit.max_rel_err < cfg.max_err && amplitude_rel_err.is_none_or(|e| e < cfg.max_err);
    Ok(VerifyReport {
        d,
        factors: w.len(),
        case: form.case,
        grid,
        fit,
        amplitude: form.amplitude,
        amplitude_rel_err,
        max_err: cfg.max_err,
        warnings: samples.warnings,
        pass,
    })
}

pub fn cmd_verify(path: &Path, cfg: &RunConfig) -> CliResult<VerifyReport> {
    verify_word(&read_word(path, cfg)?, cfg)
}

pub const COVARIANCE_BOUND: f64 = 1e-3;
pub const GABOR_BOUND: f64 = 0.05;
pub const SPREAD_BOUND: f64 = 0.02;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfcheckReport {
    pub covariance: TfReport,
    pub gabor: TfReport,
    pub gabor_profile: GaborProfile,
    /// Relative spread of `|h(z, Sz + u)|` over 50 points `z`.
    pub offset_spread: f64,
    pub pass: bool,
}

/// `n` points of a golden-ratio sequence in `[−r, r]²`; deterministic.
pub fn phase_space_points(n: usize, r: f64, seed: f64) -> Vec<PhaseSpacePoint> {
    const G1: f64 = 0.754_877_666_246_692_7;
    const G2: f64 = 0.569_840_290_998_053_3;
    (0..n)
        .map(|k| {
            let a = (seed + G1 * (k + 1) as f64).fract();
            let b = (seed + G2 * (k + 1) as f64).fract();
            PhaseSpacePoint::new(vec![r * (2.0 * a - 1.0)], vec![r * (2.0 * b - 1.0)])
        })
        .collect()
}

/// Pairs `(z, Sz + u)` with `z` and `u` on low-discrepancy sets.
pub fn gabor_pairs(w: &GeneratorWord, tol: &Tolerances) -> CliResult<Vec<(PhaseSpacePoint, PhaseSpacePoint)>> {
    let s = word_product(w, tol)?;
    let zs = phase_space_points(120, 1.5, 0.1);
    let us = phase_space_points(120, 1.2, 0.37);
    Ok(zs
        .into_iter()
        .zip(us)
        .map(|(z, u)| {
            let v: Vec<f64> = s.apply(&z.to_vec()).iter().zip(u.to_vec()).map(|(a, b)| a + b).collect();
            (z, PhaseSpacePoint::from_slice(&v))
        })
        .collect())
}

pub fn tfcheck_word(w: &GeneratorWord, cfg: &RunConfig) -> CliResult<TfcheckReport> {
    if w.dim() != 1 {
        return Err(OracleError::DimensionTooLarge(w.dim()).into());
    }
    let grid = cfg.grid(1)?;
    let phi = oracle::sample_gaussian(&grid, &[0.0])?;
    let stride = (grid.n / 64).max(1);
    let covariance = tf::check_wigner_covariance(w, &phi, stride)?;
    cfg.log(format!("covariance residual {:.3e}", covariance.residual));
    let pairs = gabor_pairs(w, &cfg.tol)?;
    let (gabor, gabor_profile) = tf::check_gabor_kernel_identity(w, &grid, &pairs)?;
    let zs = phase_space_points(50, 1.5, 0.73);
    let (_, offset_spread) = tf::gabor_offset_spread(w, &grid, &zs, &[0.3, -0.2])?;
    let pass = covariance.residual < COVARIANCE_BOUND
        && gabor.residual < GABOR_BOUND
        && gabor_profile.min_eigenvalue > 0.0
        && offset_spread < SPREAD_BOUND;
    Ok(TfcheckReport {
        covariance,
        gabor,
        gabor_profile,
        offset_spread,
        pass,
    })
}

pub fn cmd_tfcheck(path: &Path, cfg: &RunConfig) -> CliResult<TfcheckReport> {
    tfcheck_word(&read_word(path, cfg)?, cfg)
}

/// Expected outcome stored next to each corpus entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub name: String,
    pub description: String,
    pub d: usize,
    pub verdict: VerdictLabel,
    pub gamma_strictly_inside_delta: bool,
}

pub struct CorpusEntry {
    pub expected: Expected,
    pub word: GeneratorWord,
}

fn mat(d: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, v)
}

/// The named examples.
pub fn corpus_entries() -> CliResult<Vec<CorpusEntry>> {
    let j = |d| Generator::Fourier { dim: d };
    let entry = |name: &str, description: &str, word: GeneratorWord, quasi: bool, strict: bool| CorpusEntry {
        expected: Expected {
            name: name.into(),
            description: description.into(),
            d: word.dim(),
            verdict: if quasi {
                VerdictLabel::QuasiDiagonal
            } else {
                VerdictLabel::NotQuasiDiagonal
            },
            gamma_strictly_inside_delta: strict,
        },
        word,
    };
    // Π₂ = V_{−P}·U_P·V_{−P} with P = diag(0, 1) and U_P = J³V_{−P}J,
    // the d = 1 factorization of J acting on the second variable.
    let p = mat(2, &[0.0, 0.0, 0.0, 1.0]);
    let v = || Generator::Chirp(-&p);
    let pi2_word = GeneratorWord::new(2, vec![v(), j(2), j(2), j(2), v(), j(2), v()])?;

    let b = mat(2, &[0.25, 0.125, 0.125, 0.25]);
    let c = mat(2, &[0.0, 0.0, 0.0, 0.5]);
    Ok(vec![
        entry(
            "s1-d2",
            "dilation with D = 2: kernel concentrated on y = 2x",
            GeneratorWord::new(1, vec![Generator::Dilation(mat(1, &[2.0]))])?,
            false,
            false,
        ),
        entry(
            "s1-d1",
            "dilation with D = 1 (identity)",
            GeneratorWord::new(1, vec![Generator::Dilation(mat(1, &[1.0]))])?,
            true,
            false,
        ),
        entry(
            "s2-b1",
            "convolution with a chirp, B = 1",
            GeneratorWord::new(
                1,
                vec![j(1), j(1), j(1), Generator::Chirp(mat(1, &[-1.0])), j(1)],
            )?,
            true,
            false,
        ),
        entry("s3-fourier", "Fourier transform", GeneratorWord::new(1, vec![j(1)])?, true, false),
        entry(
            "pi2",
            "partial Fourier transform in the second variable",
            pi2_word,
            true,
            true,
        ),
        entry(
            "d-identity-chirp-rank1",
            "D = I, C = diag(1, 0): localized on {(x, x) : x in ker C}",
            GeneratorWord::new(2, vec![Generator::Chirp(mat(2, &[1.0, 0.0, 0.0, 0.0]))])?,
            true,
            true,
        ),
        entry(
            "d-identity-c-invertible",
            "D = I, C = diag(1, -2)",
            GeneratorWord::new(2, vec![Generator::Chirp(mat(2, &[1.0, 0.0, 0.0, -2.0]))])?,
            true,
            false,
        ),
        entry(
            "d-identity-bc",
            "S = [[I + BC, B], [C, I]] with rank C = 1",
            GeneratorWord::new(
                2,
                vec![j(2), j(2), j(2), Generator::Chirp(-b), j(2), Generator::Chirp(c)],
            )?,
            true,
            true,
        ),
        entry(
            "d-identity-d2",
            "identity in d = 2: C = 0, D = I",
            GeneratorWord::empty(2),
            true,
            false,
        ),
    ])
}

/// Write `<name>.matrix.json`, `<name>.word.json` and
/// `<name>.expected.json` for every corpus entry; returns the file names.
pub fn cmd_corpus(dir: &Path) -> CliResult<Vec<String>> {
    fs::create_dir_all(dir)?;
    let tol = Tolerances::default();
    let mut names = Vec::new();
    for e in corpus_entries()? {
        let s = word_product(&e.word, &tol)?;
        let n = &e.expected.name;
        let files = [
            (format!("{n}.matrix.json"), io::matrix_to_json(s.matrix())),
            (format!("{n}.word.json"), io::word_to_json(&e.word)),
            (format!("{n}.expected.json"), to_json(&e.expected)),
        ];
        for (file, body) in files {
            fs::write(dir.join(&file), format!("{body}\n"))?;
            names.push(file);
        }
    }
    Ok(names)
}
