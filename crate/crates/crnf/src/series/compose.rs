//! Substitution, Taylor shifts and map reversion.

use rustc_hash::FxHashMap;

use super::{acc_mul, Accum, Mono, Series, Vars};
use crate::error::{CrError, Result};
use crate::scalar::{is_czero, Scalar};

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    if a >= 0 {
        (a + b - 1) / b
    } else {
        -((-a) / b)
    }
}

/// Smallest ratio ord(k_v) / weight(v) over all substitutes, as (p, q).
fn min_ratio<R: Scalar>(subst: &[Series<R>]) -> (i64, i64) {
    let vars = subst[0].vars();
    let mut best = (i64::MAX, 1i64);
    for (i, k) in subst.iter().enumerate() {
        let p = k.ord() as i64;
        let q = vars.var(i).weight() as i64;
        if p * best.1 < best.0 * q {
            best = (p, q);
        }
    }
    best
}

fn check_subst<R: Scalar>(s: &Series<R>, subst: &[Series<R>]) -> Result<()> {
    let vars = s.vars();
    if subst.len() != vars.count() {
        return Err(CrError::Shape(format!(
            "substitution has {} entries, expected {}",
            subst.len(),
            vars.count()
        )));
    }
    for (i, k) in subst.iter().enumerate() {
        if k.vars() != vars {
            return Err(CrError::Shape("substitution over a different variable set".into()));
        }
        if !is_czero(&k.constant_term()) {
            return Err(CrError::Composition(format!(
                "substitute for {:?} has a nonzero constant term",
                vars.var(i)
            )));
        }
    }
    Ok(())
}

/// The bound up to which `s ∘ subst` is determined by the known data.
fn compose_bound<R: Scalar>(s: &Series<R>, subst: &[Series<R>]) -> i32 {
    let vars = s.vars();
    let (p, q) = min_ratio(subst);
    let mut bound = ceil_div((s.bound() as i64 + 1) * p, q) - 1;
    for (i, k) in subst.iter().enumerate() {
        let v = vars.var(i);
        let ord_v = s
            .terms()
            .iter()
            .filter(|(m, _)| m.exp(vars, v) > 0)
            .map(|(m, _)| m.weight() as i64)
            .min();
        if let Some(ov) = ord_v {
            let rest = ceil_div((ov - v.weight() as i64) * p, q);
            bound = bound.min(rest + k.bound() as i64);
        }
    }
    bound.clamp(i32::MIN as i64, i32::MAX as i64) as i32
}

/// Evaluates `s` at `subst` (one series per variable, indexed as in
/// [`Vars::var`]). Monomial images are memoized, each built from a smaller one
/// times a single substitute.
pub fn compose<R: Scalar>(s: &Series<R>, subst: &[Series<R>]) -> Result<Series<R>> {
    check_subst(s, subst)?;
    let vars = s.vars();
    let bound = compose_bound(s, subst);
    let mut cache: FxHashMap<Mono, Series<R>> = FxHashMap::default();
    cache.insert(Mono::ONE, Series::one(vars, bound));
    let mut acc: Accum<R> = FxHashMap::default();
    for (m, c) in s.terms() {
        let img = image(vars, *m, subst, bound, &mut cache);
        for (mm, cc) in img.terms() {
            acc_mul(&mut acc, *mm, cc, c);
        }
    }
    Ok(Series::from_accum(vars, bound, acc))
}

fn image<R: Scalar>(
    vars: Vars,
    m: Mono,
    subst: &[Series<R>],
    bound: i32,
    cache: &mut FxHashMap<Mono, Series<R>>,
) -> Series<R> {
    if let Some(s) = cache.get(&m) {
        return s.clone();
    }
    let (v, _) = m.factors(vars).last().expect("non-constant monomial");
    let (rest, _) = m.div_var(vars, v).unwrap();
    let prev = image(vars, rest, subst, bound, cache);
    let k = &subst[vars.index(v)];
    let mut acc: Accum<R> = FxHashMap::default();
    super::mul_into(&mut acc, &prev, k, bound);
    let out = Series::from_accum(vars, bound, acc);
    cache.insert(m, out.clone());
    out
}

/// Composition with z̄-substitutes taken as conjugates of the z-substitutes.
/// The u-substitutes must be real.
pub fn compose_real<R: Scalar>(s: &Series<R>, zsub: &[Series<R>], usub: &[Series<R>]) -> Result<Series<R>> {
    let vars = s.vars();
    if zsub.len() != vars.n || usub.len() != vars.d {
        return Err(CrError::Shape("substitution lengths do not match (n, d)".into()));
    }
    for (k, u) in usub.iter().enumerate() {
        u.require_real(&format!("u-substitute {k}"))?;
    }
    let mut all: Vec<Series<R>> = zsub.to_vec();
    all.extend(zsub.iter().map(|z| z.conjugate()));
    all.extend(usub.iter().cloned());
    compose(s, &all)
}

/// F(x + ε) = Σ_μ ∂^μF(x) ε(x)^μ / μ!.
///
/// Each ε_v must have no constant term and lowest weight at least the weight
/// of v, so every term of the sum raises or keeps the weight; the sum is
/// finite because derivatives lower the bound. Cheaper than [`compose`] when
/// ε is sparse.
pub fn taylor_shift<R: Scalar>(f: &Series<R>, eps: &[Series<R>]) -> Series<R> {
    TaylorShift::new(eps, f.bound()).apply(f)
}

/// Repeated Taylor shifts by one fixed ε, sharing the powers ε_v^k.
/// Series passed to [`TaylorShift::apply`] must have bound ≤ `cap`.
pub struct TaylorShift<'a, R: Scalar> {
    eps: &'a [Series<R>],
    cap: i32,
    powers: Vec<Vec<Series<R>>>,
}

impl<'a, R: Scalar> TaylorShift<'a, R> {
    pub fn new(eps: &'a [Series<R>], cap: i32) -> Self {
        let vars = eps.first().map(|e| e.vars());
        let powers = match vars {
            Some(v) => eps.iter().map(|_| vec![Series::one(v, cap)]).collect(),
            None => Vec::new(),
        };
        TaylorShift { eps, cap, powers }
    }

    pub fn apply(&mut self, f: &Series<R>) -> Series<R> {
        debug_assert_eq!(self.eps.len(), f.vars().count());
        debug_assert!(f.bound() <= self.cap);
        shift_rec(f, self.eps, 0, &mut self.powers)
    }
}

fn shift_rec<R: Scalar>(g: &Series<R>, eps: &[Series<R>], i: usize, powers: &mut [Vec<Series<R>>]) -> Series<R> {
    if i == eps.len() {
        return g.clone();
    }
    let vars = g.vars();
    let v = vars.var(i);
    let e = &eps[i];
    let mut out = shift_rec(g, eps, i + 1, powers);
    if e.is_zero() {
        // Only the unknown tail of ε can contribute, starting at weight
        // bound(ε) + 1 + ord(∂_v g).
        let d = g.deriv(v);
        if d.bound() >= 0 {
            out = out.truncate(e.bound() + d.ord());
        }
        return out;
    }
    let mut d = g.clone();
    let mut k = 0u32;
    let oe = e.ord();
    loop {
        k += 1;
        d = d.deriv(v);
        // With ord(ε_v) ≥ weight(v) the lowest possible weight of the k-th
        // term never decreases, so the first irrelevant term ends the sum.
        if d.bound() < 0 || d.is_zero() || d.ord() + k as i32 * oe > out.bound() {
            break;
        }
        // Terms of the k-th summand above out.bound() are discarded anyway.
        let room = out.bound() - k as i32 * oe;
        let inner = shift_rec(&d.div_factorial(k).truncate(room), eps, i + 1, powers);
        while powers[i].len() <= k as usize {
            let cap = powers[i][0].bound();
            let next = powers[i].last().unwrap().mul_upto(e, cap);
            powers[i].push(next);
        }
        out = out.add(&inner.mul_upto(&powers[i][k as usize], out.bound()));
    }
    out
}

/// Inverse of h = id + δ, where δ has no terms of ordinary degree < 2 except
/// weight-preserving quadratic terms in the u-components. Returns the
/// substitution list of h⁻¹.
pub fn reverse_map<R: Scalar>(h: &[Series<R>]) -> Result<Vec<Series<R>>> {
    if h.is_empty() {
        return Err(CrError::Shape("empty map".into()));
    }
    let vars = h[0].vars();
    if h.len() != vars.count() {
        return Err(CrError::Shape(format!("map has {} components, expected {}", h.len(), vars.count())));
    }
    let mut delta = Vec::with_capacity(h.len());
    for (i, hi) in h.iter().enumerate() {
        let v = vars.var(i);
        let x = Series::var(vars, hi.bound(), v);
        let d = hi.sub(&x);
        // Linear part must vanish: no weight-1 terms and no bare u-terms.
        for (m, _) in d.terms() {
            if m.degree(vars) <= 1 {
                return Err(CrError::Reversion(format!(
                    "component {:?} has nonidentity linear part ({})",
                    v,
                    m.display(vars)
                )));
            }
        }
        delta.push(d);
    }
    // Fixed point k = x − δ(k), i.e. δ evaluated at x + (k − x).
    let mut k: Vec<Series<R>> = (0..vars.count())
        .map(|i| Series::var(vars, h[i].bound(), vars.var(i)))
        .collect();
    let max_iter = 4 * (h.iter().map(|s| s.bound()).max().unwrap_or(0).max(0) as usize) + 8;
    for _ in 0..max_iter {
        let shift: Vec<Series<R>> = (0..vars.count())
            .map(|i| k[i].sub(&Series::var(vars, k[i].bound(), vars.var(i))))
            .collect();
        let next: Vec<Series<R>> = (0..vars.count())
            .map(|i| {
                let x = Series::var(vars, h[i].bound(), vars.var(i));
                x.sub(&taylor_shift(&delta[i], &shift)).truncate(h[i].bound())
            })
            .collect();
        if next.iter().zip(&k).all(|(a, b)| a.terms() == b.terms()) {
            return Ok(next);
        }
        k = next;
    }
    Err(CrError::Reversion("fixed-point iteration did not converge".into()))
}
