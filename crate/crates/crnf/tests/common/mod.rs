#![allow(dead_code)]

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crnf::frames::{AdaptedFrame, ExtendedFrame};
use crnf::series::{monomials_of_weight, Mono, Series, Vars};
use crnf::structure::AlmostCR;
use crnf::transform::Transform;
use crnf::{ExactSeries, Rational};

pub const BIG: i32 = i32::MAX / 4;

pub fn q(p: i64, d: i64) -> Rational {
    Rational::new(p, d)
}

pub fn c(re: i64, im: i64) -> Complex<Rational> {
    Complex::new(q(re, 1), q(im, 1))
}

pub fn cq(re: (i64, i64), im: (i64, i64)) -> Complex<Rational> {
    Complex::new(q(re.0, re.1), q(im.0, im.1))
}

/// Polynomial taken as exact to every weight.
pub fn p(vars: Vars, text: &str) -> ExactSeries {
    Series::parse(vars, BIG, text).unwrap()
}

pub fn vars(n: usize, d: usize) -> Vars {
    Vars::new(n, d).unwrap()
}

pub fn quadric_phi(eps: &[i64]) -> ExactSeries {
    let v = vars(eps.len(), 1);
    let t: Vec<String> = eps.iter().enumerate().map(|(j, e)| format!("{e}*z{k}*zb{k}", k = j + 1)).collect();
    p(v, &t.join(" + "))
}

pub fn quadric(eps: &[i64], w: u32) -> AlmostCR<Rational> {
    AlmostCR::from_graph(&[quadric_phi(eps)], w).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A coefficient from a small set of Gaussian rationals.
pub fn small_coeff(r: &mut ChaCha8Rng) -> Complex<Rational> {
    const SET: [(i64, i64, i64); 10] =
        [(1, 0, 1), (-1, 0, 1), (2, 0, 1), (1, 0, 2), (-1, 0, 2), (0, 1, 1), (0, -1, 1), (1, 1, 1), (1, -2, 1), (-3, 0, 2)];
    let (a, b, d) = SET[r.gen_range(0..SET.len())];
    Complex::new(q(a, d), q(b, d))
}

pub fn small_real(r: &mut ChaCha8Rng) -> Rational {
    const SET: [(i64, i64); 7] = [(1, 1), (-1, 1), (2, 1), (1, 2), (-1, 2), (-3, 2), (1, 3)];
    let (a, d) = SET[r.gen_range(0..SET.len())];
    q(a, d)
}

/// `count` random terms with weights in `lo..=hi`, monomials passing `keep`.
pub fn random_series(
    r: &mut ChaCha8Rng,
    v: Vars,
    lo: u32,
    hi: u32,
    count: usize,
    keep: impl Fn(&Mono) -> bool,
) -> ExactSeries {
    let pool: Vec<Mono> = (lo..=hi).flat_map(|w| monomials_of_weight(v, w)).filter(|m| keep(m)).collect();
    let mut terms = Vec::new();
    for _ in 0..count {
        if let Some(m) = pool.choose(r) {
            terms.push((*m, small_coeff(r)));
        }
    }
    Series::from_terms(v, BIG, terms)
}

pub fn random_real_series(
    r: &mut ChaCha8Rng,
    v: Vars,
    lo: u32,
    hi: u32,
    count: usize,
    keep: impl Fn(&Mono) -> bool,
) -> ExactSeries {
    let s = random_series(r, v, lo, hi, count, keep);
    s.add(&s.conjugate())
}

/// A legal transform with a few terms of weight up to `w`.
pub fn random_transform(r: &mut ChaCha8Rng, v: Vars, w: u32, terms: usize) -> Transform<Rational> {
    let f = (0..v.n).map(|_| random_series(r, v, 2, w - 1, terms, |m| m.degree(v) >= 2)).collect();
    let g = (0..v.d).map(|_| random_real_series(r, v, 2, w, terms, |m| m.degree(v) >= 2)).collect();
    Transform::from_polynomials(w, f, g).unwrap()
}

/// Σ ε_j |z_j|² plus random real terms of weight ≥ 3.
pub fn random_graph(r: &mut ChaCha8Rng, eps: &[i64], w: u32, terms: usize) -> ExactSeries {
    let v = vars(eps.len(), 1);
    quadric_phi(eps).add(&random_real_series(r, v, 3, w, terms, |_| true))
}

/// L^w_k = iε_k z̄_k + (antisymmetric weight-1 z part from `nij`) + random
/// higher terms; L^z̄ random of weight ≥ 1. Levi form diag(ε).
pub fn random_almost_cr(r: &mut ChaCha8Rng, eps: &[i64], nij: &[(usize, usize, Complex<Rational>)], w: u32, terms: usize) -> AlmostCR<Rational> {
    let n = eps.len();
    let v = vars(n, 1);
    let lzbar: Vec<ExactSeries> = (0..n * n).map(|_| random_series(r, v, 1, w - 2, terms, |_| true)).collect();
    let mut lw: Vec<ExactSeries> = (0..n)
        .map(|k| p(v, &format!("{}*i*zb{}", eps[k], k + 1)).add(&random_series(r, v, 2, w - 1, terms, |_| true)))
        .collect();
    // ∂_{z_j} L^w_k = a, ∂_{z_k} L^w_j = −a.
    for (j, k, a) in nij {
        lw[*k] = lw[*k].add(&Series::var(v, BIG, crnf::series::Var::Z(*j)).scale(a));
        lw[*j] = lw[*j].sub(&Series::var(v, BIG, crnf::series::Var::Z(*k)).scale(a));
    }
    AlmostCR::from_polynomials(v, w, lzbar, lw).unwrap()
}

pub fn frame(v: Vec<Vec<Complex<Rational>>>, vtrans: Vec<Rational>, jet2: Vec<Rational>) -> ExtendedFrame<Rational> {
    ExtendedFrame { frame: AdaptedFrame { v, vtrans }, jet2 }
}
