//! Shared test oracles and random generators.
//!
//! The smoothed-kernel oracle here follows the Gaussian orbit: `Ŝφ` is a
//! Gaussian `e^{−πMt·t}` with `M = −i(C + iD)(A + iB)⁻¹`, and
//! `Ŝτ_yφ = π(Ay, Cy)Ŝφ` up to a phase, so `⟨Ŝτ_yφ, τ_xφ⟩` is a single
//! Gaussian integral. It never touches the block-case analysis.

#![allow(dead_code)]

use std::f64::consts::PI;

use metaplectic::linalg;
use metaplectic::symplectic::{word_product, Generator, GeneratorWord, SymplecticMatrix, Tolerances};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(Q_S, c)` from the Gaussian orbit of `φ`.
pub fn orbit_form(s: &SymplecticMatrix) -> (DMatrix<f64>, f64) {
    let d = s.dim();
    let (a, b, c, dd) = (s.a(), s.b(), s.c(), s.d());
    let cx = |re: &DMatrix<f64>, im: &DMatrix<f64>| {
        DMatrix::from_fn(d, d, |i, j| Complex64::new(re[(i, j)], im[(i, j)]))
    };
    let num = cx(&c, &dd);
    let den = cx(&a, &b).try_inverse().expect("A + iB is always invertible");
    let m = (num * den) * Complex64::new(0.0, -1.0);
    let m = (&m + m.transpose()) * Complex64::new(0.5, 0.0);
    let id = DMatrix::<Complex64>::identity(d, d);
    let k = (&m + &id).try_inverse().unwrap();
    let k1 = k.map(|z| z.re);
    let k2 = k.map(|z| z.im);
    let idr = DMatrix::<f64>::identity(d, d);
    let r = blocks(&(&idr - &k1), &(-&k2), &(-&k2), &k1);
    let t = blocks(&idr, &(-&a), &DMatrix::zeros(d, d), &(-&c));
    let q = t.transpose() * r * t;
    let re_m = m.map(|z| z.re);
    let amp = re_m.determinant().powf(0.25) / (&m + &id).determinant().norm().sqrt();
    (linalg::symmetrize(&q), amp)
}

pub fn blocks(
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

pub fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn random_symmetric(rng: &mut impl Rng, d: usize, amp: f64) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| uniform(rng, -amp, amp));
    linalg::symmetrize(&m)
}

/// Square matrix with entries in `[−amp, amp]` and condition number at most
/// `cap`.
pub fn random_invertible(rng: &mut impl Rng, d: usize, amp: f64, cap: f64) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(d, d, |_, _| uniform(rng, -amp, amp));
        if linalg::condition_number(&m) <= cap {
            return m;
        }
    }
}

pub fn random_orthogonal(rng: &mut impl Rng, k: usize) -> DMatrix<f64> {
    if k == 0 {
        return DMatrix::zeros(0, 0);
    }
    let m = DMatrix::from_fn(k, k, |_, _| uniform(rng, -1.0, 1.0));
    m.qr().q()
}

/// Symmetric matrix of exact rank `k` with eigenvalues of magnitude in
/// `[0.5, 2]`.
pub fn symmetric_of_rank(rng: &mut impl Rng, d: usize, k: usize) -> DMatrix<f64> {
    let q = random_orthogonal(rng, d);
    let mut m = DMatrix::zeros(d, d);
    for i in 0..k {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let lam = sign * uniform(rng, 0.5, 2.0);
        let v = q.column(i);
        m += v * v.transpose() * lam;
    }
    linalg::symmetrize(&m)
}

pub fn random_generator(rng: &mut impl Rng, d: usize) -> Generator {
    match rng.random_range(0..3) {
        0 => Generator::Fourier { dim: d },
        1 => Generator::Chirp(random_symmetric(rng, d, 2.0)),
        _ => Generator::Dilation(random_invertible(rng, d, 2.0, 50.0)),
    }
}

pub fn random_word(rng: &mut impl Rng, d: usize, len: usize) -> GeneratorWord {
    let factors = (0..len).map(|_| random_generator(rng, d)).collect();
    GeneratorWord::new(d, factors).unwrap()
}

/// Word whose product has `rank B = k`:
/// `[V_{P₁}, 𝒟_{E₁}, J, V_{P_k}, J, 𝒟_{E₂}, V_{P₂}]`, using `J V_P J = [[−I, P], [0, −I]]`.
/// For `k = 0` only chirps and dilations are used.
pub fn word_with_rank_b(rng: &mut impl Rng, d: usize, k: usize) -> GeneratorWord {
    let mut f = vec![
        Generator::Chirp(random_symmetric(rng, d, 1.5)),
        Generator::Dilation(random_invertible(rng, d, 1.5, 20.0)),
    ];
    if k > 0 {
        f.push(Generator::Fourier { dim: d });
        f.push(Generator::Chirp(symmetric_of_rank(rng, d, k)));
        f.push(Generator::Fourier { dim: d });
    }
    f.push(Generator::Dilation(random_invertible(rng, d, 1.5, 20.0)));
    f.push(Generator::Chirp(random_symmetric(rng, d, 1.5)));
    GeneratorWord::new(d, f).unwrap()
}

/// Word with product `[[I + BC, B], [C, I]]`, `B` and `C` symmetric of the
/// given ranks: `J·J·J·V_{−B}·J·V_C` (since `J³V_{−B}J = [[I, B], [0, I]]`).
pub fn word_with_d_identity(rng: &mut impl Rng, d: usize, rank_b: usize, rank_c: usize) -> GeneratorWord {
    let b = symmetric_of_rank(rng, d, rank_b);
    let c = symmetric_of_rank(rng, d, rank_c);
    let j = Generator::Fourier { dim: d };
    GeneratorWord::new(
        d,
        vec![
            j.clone(),
            j.clone(),
            j.clone(),
            Generator::Chirp(-b),
            j,
            Generator::Chirp(c),
        ],
    )
    .unwrap()
}

/// `𝒟_{E₁}·[[I + BC, B], [C, I]]·𝒟_{E₂}`: `rank B` and `rank C` are
/// prescribed while `D = E₁ᵀE₂ᵀ`-type blocks are generic, so `Γ_S` is
/// nontrivial whenever `rank C < d`.
pub fn word_with_ranks(rng: &mut impl Rng, d: usize, rank_b: usize, rank_c: usize) -> GeneratorWord {
    let left = GeneratorWord::new(d, vec![Generator::Dilation(random_invertible(rng, d, 1.5, 20.0))]).unwrap();
    let right = GeneratorWord::new(d, vec![Generator::Dilation(random_invertible(rng, d, 1.5, 20.0))]).unwrap();
    left.concat(&word_with_d_identity(rng, d, rank_b, rank_c))
        .unwrap()
        .concat(&right)
        .unwrap()
}

pub fn product(w: &GeneratorWord) -> SymplecticMatrix {
    word_product(w, &Tolerances::default()).unwrap()
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1e-300)
}

/// Trapezoid rule on `[−l, l]^n` with `m` intervals per axis.
pub fn trapezoid(n: usize, l: f64, m: usize, f: &dyn Fn(&[f64]) -> Complex64) -> Complex64 {
    let h = 2.0 * l / m as f64;
    let mut idx = vec![0usize; n];
    let mut t = vec![0.0; n];
    let mut acc = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        for k in 0..n {
            t[k] = -l + idx[k] as f64 * h;
            if idx[k] == 0 || idx[k] == m {
                w *= 0.5;
            }
        }
        acc += f(&t) * w;
        let mut k = 0;
        loop {
            if k == n {
                return acc * h.powi(n as i32);
            }
            idx[k] += 1;
            if idx[k] <= m {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Adaptive quadrature of a smooth rapidly decaying integrand: the step is
/// halved until two successive trapezoid sums agree to `rel`.
pub fn adaptive_quadrature(
    n: usize,
    l: f64,
    rel: f64,
    f: &dyn Fn(&[f64]) -> Complex64,
) -> Complex64 {
    let mut m = (8.0 * l).ceil() as usize;
    let mut prev = trapezoid(n, l, m, f);
    loop {
        m *= 2;
        let next = trapezoid(n, l, m, f);
        if (next - prev).norm() <= rel * next.norm() || m > 4096 {
            return next;
        }
        prev = next;
    }
}

/// `(x, y) ↦ e^{−π Q z·z}` integrated against the Gaussian factor.
pub fn gaussian_pi(q: f64) -> f64 {
    (-PI * q).exp()
}
