//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Reference values come from routes that do not share code with the
//! analysis: direct quadrature, the Gaussian-orbit formula in `common`, the
//! grid oracle, and eigen-decompositions of the raw blocks.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use metaplectic::gaussian::{complex_inverse_split, gaussian_fourier, ComplexQuadraticForm};
use metaplectic::kernel::{
    self, classify_d2, localization_manifold, smoothed_form, smoothed_form_general_with_bases,
    verdict, D2Scenario, GeneralBases, VerdictReason,
};
use metaplectic::linalg;
use metaplectic::oracle::{self, Grid};
use metaplectic::subspace;
use metaplectic::symplectic::{
    validate_symplectic, Generator, GeneratorWord, SymplecticMatrix, Tolerances,
};
use metaplectic::tf::{self, PhaseSpacePoint};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

// Pinned tolerances.
const SWEEP_MIN: usize = 1000;
const ANALYTIC_TOL: f64 = 1e-9;
const ORACLE_FIT_TOL: f64 = 0.02;
const PSD_TOL: f64 = 1e-8;
const CONTAINMENT_TOL: f64 = 1e-6;
const PI2_TOL: f64 = 1e-9;
const COR_TOL: f64 = 1e-8;
const INVARIANCE_TOL: f64 = 1e-9;
const SPREAD_TOL: f64 = 0.02;
const GABOR_FIT_TOL: f64 = 0.05;
const QUAD_TOL: f64 = 1e-7;
const SPLIT_TOL: f64 = 1e-10;

type Outcome = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Outcome);

fn tol() -> Tolerances {
    Tolerances::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn mat(n: usize, v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(n, n, v)
}

fn sym(n: usize, v: &[f64]) -> SymplecticMatrix {
    validate_symplectic(mat(2 * n, v), 1e-9).unwrap()
}

/// Null space of a symmetric PSD matrix from its eigen-decomposition.
fn psd_null(m: &DMatrix<f64>, rel: f64) -> DMatrix<f64> {
    let (vals, vecs) = linalg::sym_eigen_ascending(m);
    let top = vals.iter().copied().fold(0.0, f64::max);
    let k = vals.iter().filter(|&&v| v <= rel * top.max(1e-300)).count();
    linalg::columns(&vecs, 0, k)
}

fn orthonormalize(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return m.clone();
    }
    m.clone().qr().q().columns(0, m.ncols()).into_owned()
}

/// `{(x, Dᵀx) : x ∈ R(C)^⊥}` with `R(C)^⊥ = null(CCᵀ)`.
fn gamma_from_blocks(s: &SymplecticMatrix) -> DMatrix<f64> {
    let c = s.c();
    let x = psd_null(&(&c * c.transpose()), 1e-12);
    let mut g = DMatrix::zeros(2 * s.dim(), x.ncols());
    g.view_mut((0, 0), x.shape()).copy_from(&x);
    g.view_mut((s.dim(), 0), x.shape()).copy_from(&(s.d().transpose() * &x));
    orthonormalize(&g)
}

/// Largest of `‖(I − P_b)a‖` and `‖(I − P_a)b‖` for orthonormal `a`, `b`.
fn containment(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let out = |u: &DMatrix<f64>, v: &DMatrix<f64>| (u - v * (v.transpose() * u)).norm();
    out(a, b).max(out(b, a))
}

// 1 ─────────────────────────────────────────────────────────────────────

fn c1_d1_characterization() -> Outcome {
    let mut mats = Vec::new();
    let vals = [-3.0, -1.5, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 1.5, 3.0];
    // C ≠ 0: [[a, b], [c, (1 + bc)/a]]
    for &a in &vals {
        for &b in &[-2.0, -1.0, -0.3, 0.0, 0.4, 0.7, 1.0, 2.5, 4.0] {
            for &c in &vals {
                mats.push([a, b, c, (1.0 + b * c) / a]);
            }
        }
    }
    // A = 0: [[0, b], [−1/b, d]]
    for &b in &vals {
        for &d in &[-2.0, 0.0, 1.0, 0.5, 4.0] {
            mats.push([0.0, b, -1.0 / b, d]);
        }
    }
    // C = 0 boundary: [[1/d, b], [0, d]], d = 1 included
    for &d in &[-4.0, -2.0, -1.0, -0.25, 0.2, 0.5, 0.999, 1.0, 1.001, 2.0, 8.0] {
        for k in 0..20 {
            mats.push([1.0 / d, -2.0 + 0.2 * k as f64, 0.0, d]);
        }
    }
    // tiny but nonzero C
    for &c in &[1e-6, -1e-4, 1e-3] {
        for &d in &[0.5, 1.0, 3.0] {
            mats.push([1.0 / d, 0.0, c, d]);
        }
    }
    let mut mismatches = Vec::new();
    for m in &mats {
        let s = sym(1, m);
        let expected = m[2] != 0.0 || m[3] == 1.0;
        let v = verdict(&s, &tol()).map_err(|e| format!("{m:?}: {e}"))?;
        if v.quasi_diagonal != expected {
            mismatches.push(*m);
        }
    }
    ensure(mats.len() >= SWEEP_MIN, || format!("only {} matrices", mats.len()))?;
    ensure(mismatches.is_empty(), || format!("{} mismatches, first {:?}", mismatches.len(), mismatches[0]))?;
    Ok(format!("{} matrices, 0 mismatches", mats.len()))
}

// 2 ─────────────────────────────────────────────────────────────────────

fn oracle_fit(w: &GeneratorWord, form: &kernel::SmoothedKernelForm) -> Result<(f64, f64), String> {
    let grid = Grid::new(1, 1024, 16.0).map_err(|e| e.to_string())?;
    let pts = oracle::lattice_points(1, 2.5, 11);
    let samples = oracle::sample_smoothed_kernel(w, &grid, &pts, &pts).map_err(|e| e.to_string())?;
    let fit = oracle::fit_against_analytic(&samples, form).map_err(|e| e.to_string())?;
    Ok((fit.c_fit, fit.max_rel_err))
}

fn c2_fourier_instance() -> Outcome {
    let s = sym(1, &[0.0, 1.0, -1.0, 0.0]);
    let form = smoothed_form(&s, &tol()).map_err(|e| e.to_string())?;
    let want = DMatrix::identity(2, 2) * 0.5;
    let q_err = (&form.qs - &want).amax();
    let c = form.amplitude.known().ok_or("amplitude not known")?;
    let c_err = (c - 0.5f64.sqrt()).abs();
    ensure(q_err < ANALYTIC_TOL && c_err < ANALYTIC_TOL, || format!("Q err {q_err:e}, c err {c_err:e}"))?;
    let w = GeneratorWord::new(1, vec![Generator::Fourier { dim: 1 }]).unwrap();
    let (c_fit, fit_err) = oracle_fit(&w, &form)?;
    let c_rel = (c_fit - c).abs() / c;
    ensure(fit_err < ORACLE_FIT_TOL && c_rel < ORACLE_FIT_TOL, || {
        format!("fit err {fit_err:e}, amplitude err {c_rel:e}")
    })?;
    Ok(format!("Q err {q_err:.1e}, c err {c_err:.1e}, oracle fit {fit_err:.1e}"))
}

// 3 ─────────────────────────────────────────────────────────────────────

/// `|k̃|` at a few points from a 1- or 2-d quadrature, compared with
/// `c·e^{−πQz·z}` where `c = |k̃(0,0)|`.
fn confirm_by_quadrature(
    q: &DMatrix<f64>,
    dims: usize,
    integrand: &dyn Fn(f64, f64, &[f64]) -> Complex64,
) -> f64 {
    let at = |x: f64, y: f64| adaptive_quadrature(dims, 7.0, 1e-12, &|t| integrand(x, y, t)).norm();
    let c = at(0.0, 0.0);
    let mut worst = 0.0f64;
    for &(x, y) in &[(0.3, 0.1), (-0.4, 0.5), (0.7, 1.1), (1.0, -0.2), (0.0, 0.9)] {
        let z = DVector::from_vec(vec![x, y]);
        let model = c * (-PI * (z.transpose() * q * &z)[(0, 0)]).exp();
        worst = worst.max((at(x, y) - model).abs() / model);
    }
    worst
}

fn c3_dilation_and_convolution() -> Outcome {
    // S₁, D = 2: k̃(x,y) = √2 ∫ e^{−π((x−s)² + (y−2s)²)} ds
    let q1 = mat(2, &[4.0, -2.0, -2.0, 1.0]) / 5.0;
    let quad1 = confirm_by_quadrature(&q1, 1, &|x, y, t| {
        let s = t[0];
        Complex64::new(2f64.sqrt() * (-PI * ((x - s).powi(2) + (y - 2.0 * s).powi(2))).exp(), 0.0)
    });
    // S₂, B = 1: k(s,t) = e^{iπ(s−t)²} up to a constant phase
    let q2 = mat(2, &[1.0, -1.0, -1.0, 1.0]) * 0.4;
    let quad2 = confirm_by_quadrature(&q2, 2, &|x, y, t| {
        let (s, u) = (t[0], t[1]);
        Complex64::from_polar(
            (-PI * ((x - s).powi(2) + (y - u).powi(2))).exp(),
            PI * (s - u).powi(2),
        )
    });
    ensure(quad1 < 1e-9 && quad2 < 1e-9, || format!("closed forms disagree with quadrature: {quad1:e}, {quad2:e}"))?;

    let s1 = sym(1, &[0.5, 0.0, 0.0, 2.0]);
    let s2 = sym(1, &[1.0, 1.0, 0.0, 1.0]);
    let f1 = smoothed_form(&s1, &tol()).map_err(|e| e.to_string())?;
    let f2 = smoothed_form(&s2, &tol()).map_err(|e| e.to_string())?;
    let e1 = (&f1.qs - &q1).amax();
    let e2 = (&f2.qs - &q2).amax();
    ensure(e1 < ANALYTIC_TOL && e2 < ANALYTIC_TOL, || format!("S1 err {e1:e}, S2 err {e2:e}"))?;

    let w1 = GeneratorWord::new(1, vec![Generator::Dilation(mat(1, &[2.0]))]).unwrap();
    let j = Generator::Fourier { dim: 1 };
    let w2 = GeneratorWord::new(
        1,
        vec![j.clone(), j.clone(), j.clone(), Generator::Chirp(mat(1, &[-1.0])), j],
    )
    .unwrap();
    ensure(rel_diff(product(&w2).matrix(), s2.matrix()) < 1e-14, || "S2 word mismatch".into())?;
    let (_, fit1) = oracle_fit(&w1, &f1)?;
    let (_, fit2) = oracle_fit(&w2, &f2)?;
    ensure(fit1 < ORACLE_FIT_TOL && fit2 < ORACLE_FIT_TOL, || format!("oracle fit {fit1:e}, {fit2:e}"))?;
    Ok(format!(
        "quadrature {quad1:.1e}/{quad2:.1e}, Q err {e1:.1e}/{e2:.1e}, oracle fit {fit1:.1e}/{fit2:.1e}"
    ))
}

// 4 ─────────────────────────────────────────────────────────────────────

fn c4_null_space() -> Outcome {
    let t = tol();
    let mut r = rng(4_001);
    let mut worst_psd = 0.0f64;
    let mut worst_cont = 0.0f64;
    let (mut count, mut nontrivial) = (0, 0);
    for d in 1..=3 {
        for i in 0..200 {
            let k = i % (d + 1);
            // half generic (Γ_S usually trivial), half with rank C < d
            let w = if (i / (d + 1)) % 2 == 0 {
                word_with_rank_b(&mut r, d, k)
            } else {
                let rank_c = r.random_range(0..d);
                word_with_ranks(&mut r, d, k, rank_c)
            };
            let s = product(&w);
            let rank_b = subspace::subspace_bases(&s, &t).map_err(|e| e.to_string())?.rank_b;
            ensure(rank_b == k, || format!("d={d}: rank B {rank_b}, wanted {k}"))?;
            let form = smoothed_form(&s, &t).map_err(|e| format!("d={d} k={k}: {e}"))?;
            let psd = -form.min_eigenvalue() / form.norm();
            worst_psd = worst_psd.max(psd);
            ensure(psd <= PSD_TOL, || format!("d={d} k={k}: min eig {psd:e}"))?;
            let gamma = gamma_from_blocks(&s);
            ensure(gamma.ncols() == form.null_basis.ncols(), || {
                format!("d={d} k={k}: dim Γ {} vs dim null {}", gamma.ncols(), form.null_basis.ncols())
            })?;
            let cont = containment(&gamma, &form.null_basis);
            worst_cont = worst_cont.max(cont);
            ensure(cont < CONTAINMENT_TOL, || format!("d={d} k={k}: containment {cont:e}"))?;
            count += 1;
            nontrivial += usize::from(gamma.ncols() > 0);
        }
    }
    Ok(format!("{count} matrices ({nontrivial} with dim Γ > 0), worst -min eig {worst_psd:.1e}, worst containment {worst_cont:.1e}"))
}

// 5 ─────────────────────────────────────────────────────────────────────

fn c5_interchange() -> Outcome {
    let s = sym(
        2,
        &[1., 0., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., -1., 0., 0.],
    );
    let t = tol();
    let v = verdict(&s, &t).map_err(|e| e.to_string())?;
    let m = localization_manifold(&s, &t).map_err(|e| e.to_string())?;
    let gamma = m.orthonormal_basis();
    let want = DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 1.0, 0.0]) / 2f64.sqrt();
    let dist = linalg::subspace_distance(&gamma, &want);
    let form = smoothed_form(&s, &t).map_err(|e| e.to_string())?;
    let null_dist = linalg::subspace_distance(&form.null_basis, &want);
    let scenario = classify_d2(&s, &t).map_err(|e| e.to_string())?;
    ensure(v.quasi_diagonal && v.reason == VerdictReason::DRestrictedIdentity, || format!("{v:?}"))?;
    ensure(gamma.ncols() == 1 && dist < PI2_TOL && null_dist < PI2_TOL, || {
        format!("Γ distance {dist:e}, null distance {null_dist:e}")
    })?;
    ensure(
        scenario == D2Scenario::Rank1Dilation { restricted_identity: true } && scenario.quasi_diagonal(),
        || format!("{scenario:?}"),
    )?;
    Ok(format!("Γ = span(1,0,1,0), distance {dist:.1e}, scenario {scenario:?}"))
}

// 6 ─────────────────────────────────────────────────────────────────────

fn c6_d_identity() -> Outcome {
    let t = tol();
    let mut r = rng(6_001);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = 1 + i % 3;
        let rank_c = r.random_range(0..=d);
        let rank_b = r.random_range(0..=d);
        let s = product(&word_with_d_identity(&mut r, d, rank_b, rank_c));
        let c = s.c();
        let ker = psd_null(&(c.transpose() * &c), 1e-12);
        let mut want = DMatrix::zeros(2 * d, ker.ncols());
        want.view_mut((0, 0), ker.shape()).copy_from(&ker);
        want.view_mut((d, 0), ker.shape()).copy_from(&ker);
        let want = orthonormalize(&want);
        let m = localization_manifold(&s, &t).map_err(|e| e.to_string())?;
        let got = m.orthonormal_basis();
        ensure(got.ncols() == d - rank_c && want.ncols() == got.ncols(), || {
            format!("d={d} rank C={rank_c}: dim {} vs {}", got.ncols(), want.ncols())
        })?;
        let e = containment(&got, &want);
        worst = worst.max(e);
        ensure(e < COR_TOL, || format!("d={d} rank C={rank_c}: residual {e:e}"))?;
        ensure(verdict(&s, &t).map_err(|e| e.to_string())?.quasi_diagonal, || "verdict".into())?;
    }
    Ok(format!("50 words, worst residual {worst:.1e}"))
}

// 7 ─────────────────────────────────────────────────────────────────────

fn c7_parametrization() -> Outcome {
    let t = tol();
    let mut r = rng(7_001);
    let mut worst = 0.0f64;
    for i in 0..10 {
        let d = if i < 5 { 2 } else { 3 };
        let k = 1 + i % (d - 1);
        let s = product(&word_with_rank_b(&mut r, d, k));
        let reference = smoothed_form(&s, &t).map_err(|e| e.to_string())?;
        let b = subspace::subspace_bases(&s, &t).map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let bases = GeneralBases {
                v1: &b.range_b.columns * random_orthogonal(&mut r, k),
                v2: &b.range_b_perp.columns * random_orthogonal(&mut r, d - k),
                w: &b.ker_b_perp.columns * random_orthogonal(&mut r, k),
            };
            let f = smoothed_form_general_with_bases(&s, &bases, &t).map_err(|e| e.to_string())?;
            let e = rel_diff(&f.qs, &reference.qs);
            worst = worst.max(e);
            ensure(e < INVARIANCE_TOL, || format!("d={d} rank B={k}: {e:e}"))?;
        }
    }
    Ok(format!("10 matrices x 20 bases, worst {worst:.1e}"))
}

// 8 ─────────────────────────────────────────────────────────────────────

fn random_point(r: &mut impl Rng, radius: f64) -> PhaseSpacePoint {
    PhaseSpacePoint::new(vec![uniform(r, -radius, radius)], vec![uniform(r, -radius, radius)])
}

fn c8_gabor() -> Outcome {
    let grid = Grid::new(1, 1024, 16.0).unwrap();
    let mut r = rng(8_001);
    let j = Generator::Fourier { dim: 1 };
    let mut words = vec![GeneratorWord::new(1, vec![j.clone()]).unwrap()];
    for p in [-2.0, -0.75, 1.0, 2.0] {
        words.push(GeneratorWord::new(1, vec![Generator::Chirp(mat(1, &[p])), j.clone()]).unwrap());
    }
    let (mut worst_spread, mut worst_fit) = (0.0f64, 0.0f64);
    for w in &words {
        let s = product(w);
        let zs: Vec<PhaseSpacePoint> = (0..50).map(|_| random_point(&mut r, 1.5)).collect();
        let u = [uniform(&mut r, -0.8, 0.8), uniform(&mut r, -0.8, 0.8)];
        let (_, spread) = tf::gabor_offset_spread(w, &grid, &zs, &u).map_err(|e| e.to_string())?;
        let pairs: Vec<(PhaseSpacePoint, PhaseSpacePoint)> = (0..120)
            .map(|_| {
                let z = random_point(&mut r, 1.5);
                let off = [uniform(&mut r, -1.2, 1.2), uniform(&mut r, -1.2, 1.2)];
                let sz = s.apply(&z.to_vec());
                let v = PhaseSpacePoint::from_slice(&[sz[0] + off[0], sz[1] + off[1]]);
                (z, v)
            })
            .collect();
        let (_, profile) = tf::check_gabor_kernel_identity(w, &grid, &pairs).map_err(|e| e.to_string())?;
        worst_spread = worst_spread.max(spread);
        worst_fit = worst_fit.max(profile.fit_residual);
        ensure(spread < SPREAD_TOL, || format!("spread {spread:e}"))?;
        ensure(profile.fit_residual < GABOR_FIT_TOL && profile.min_eigenvalue > 0.0, || {
            format!("fit {:e}, min eig {:e}", profile.fit_residual, profile.min_eigenvalue)
        })?;
    }
    Ok(format!("{} words, worst spread {worst_spread:.1e}, worst fit {worst_fit:.1e}", words.len()))
}

// 9 ─────────────────────────────────────────────────────────────────────

fn c9_gaussian_calculus() -> Outcome {
    let mut r = rng(9_001);
    let (mut worst_q, mut worst_split) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let n = 1 + i % 3;
        let g = DMatrix::from_fn(n, n, |_, _| uniform(&mut r, -0.5, 0.5));
        let re = &g * g.transpose() + DMatrix::identity(n, n) * 0.6;
        let im = random_symmetric(&mut r, n, 0.8);
        let amp = Complex64::new(uniform(&mut r, 0.5, 2.0), uniform(&mut r, -1.0, 1.0));
        let form = ComplexQuadraticForm::from_parts(&re, &im, amp).map_err(|e| e.to_string())?;
        let xi: Vec<Complex64> = (0..n).map(|_| Complex64::new(uniform(&mut r, -0.7, 0.7), 0.0)).collect();
        let got = gaussian_fourier(&form, &xi).map_err(|e| e.to_string())?.value;
        let lmin = linalg::sym_eigen_ascending(&re).0[0];
        let l = (40.0 / (PI * lmin)).sqrt();
        let want = adaptive_quadrature(n, l, 1e-11, &|t| {
            let phase: f64 = t.iter().zip(&xi).map(|(a, b)| a * b.re).sum();
            form.eval(t) * Complex64::from_polar(1.0, -2.0 * PI * phase)
        });
        let e = (got - want).norm() / want.norm();
        worst_q = worst_q.max(e);
        ensure(e < QUAD_TOL, || format!("n={n}: quadrature rel err {e:e}"))?;

        let (a, b) = complex_inverse_split(&re, &im).map_err(|e| e.to_string())?;
        let cx = |p: &DMatrix<f64>, q: &DMatrix<f64>| {
            DMatrix::from_fn(n, n, |i, j| Complex64::new(p[(i, j)], q[(i, j)]))
        };
        let res = (cx(&re, &im) * cx(&a, &b) - DMatrix::<Complex64>::identity(n, n)).norm();
        worst_split = worst_split.max(res);
        ensure(res < SPLIT_TOL, || format!("split residual {res:e}"))?;
    }
    Ok(format!("50 forms, worst quadrature {worst_q:.1e}, worst split {worst_split:.1e}"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("C1 d=1 characterization sweep", Duration::from_secs(5), c1_d1_characterization),
        ("C2 Fourier instance S3 = J", Duration::from_secs(30), c2_fourier_instance),
        ("C3 instances S1 (D=2) and S2 (B=1)", Duration::from_secs(60), c3_dilation_and_convolution),
        ("C4 null(Q_S) = Gamma_S, d = 1..3", Duration::from_secs(120), c4_null_space),
        ("C5 interchange Pi2", Duration::from_secs(60), c5_interchange),
        ("C6 D = I localization", Duration::from_secs(60), c6_d_identity),
        ("C7 parametrization invariance", Duration::from_secs(60), c7_parametrization),
        ("C8 Gabor matrix identity", Duration::from_secs(120), c8_gabor),
        ("C9 Gaussian calculus", Duration::from_secs(120), c9_gaussian_calculus),
    ];
    let mut failed = 0;
    for (name, budget, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; over time budget {budget:?}"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} ({:.2}s)", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} ({:.2}s)", elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
