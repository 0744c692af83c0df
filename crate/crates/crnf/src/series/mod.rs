//! Truncated formal power series in (z, z̄, u) with complex coefficients.

mod compose;
mod matrix;
mod mono;
mod parse;
mod trace;

pub use compose::{compose, compose_real, reverse_map, taylor_shift, TaylorShift};
pub use matrix::SeriesMatrix;
pub use mono::{monomials_of_weight, Mono, Var, Vars, MAX_VARS};
pub use trace::{trace_decompose, trace_decompose_with, trace_op, trace_op_pow, TraceForm};
pub(crate) use trace::{bidegree_monomials, compositions};

use std::collections::hash_map::Entry;

use num_complex::Complex;


use rustc_hash::FxHashMap;

use crate::error::{CrError, Result};
use crate::scalar::{cfrac, czero, factorial, is_czero, Scalar};

pub(crate) type Accum<R> = FxHashMap<Mono, Complex<R>>;

/// A formal power series truncated at a weight bound.
///
/// Terms are kept sorted in the canonical monomial order, nonzero, and of
/// weight at most `bound`. Every stored coefficient is exact: operations
/// lower the bound rather than keep coefficients polluted by dropped terms.
/// A negative bound means nothing is known (the series is then empty).
#[derive(Clone, PartialEq)]
pub struct Series<R: Scalar> {
    vars: Vars,
    bound: i32,
    terms: Vec<(Mono, Complex<R>)>,
}

impl<R: Scalar> std::fmt::Debug for Series<R> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Series[W={}]({})", self.bound, self.display())
    }
}

pub(crate) fn acc_add<R: Scalar>(acc: &mut Accum<R>, m: Mono, c: Complex<R>) {
    match acc.entry(m) {
        Entry::Occupied(mut e) => {
            let v = e.get_mut();
            v.re = v.re.clone() + c.re;
            v.im = v.im.clone() + c.im;
        }
        Entry::Vacant(e) => {
            e.insert(c);
        }
    }
}

pub(crate) fn acc_mul<R: Scalar>(acc: &mut Accum<R>, m: Mono, a: &Complex<R>, b: &Complex<R>) {
    match acc.entry(m) {
        Entry::Occupied(mut e) => R::cmul_acc(e.get_mut(), a, b),
        Entry::Vacant(e) => {
            e.insert(R::cmul(a, b));
        }
    }
}

/// Lowest weight for which `a * b` may differ from the exact product.
fn mul_bound<R: Scalar>(a: &Series<R>, b: &Series<R>) -> i32 {
    let exact = (a.bound + b.ord()).min(b.bound + a.ord());
    exact.min(a.bound.max(b.bound))
}

impl<R: Scalar> Series<R> {
    pub fn zero(vars: Vars, bound: i32) -> Self {
        Series { vars, bound, terms: Vec::new() }
    }

    pub fn constant(vars: Vars, bound: i32, c: Complex<R>) -> Self {
        Self::monomial(vars, bound, Mono::ONE, c)
    }

    pub fn one(vars: Vars, bound: i32) -> Self {
        Self::constant(vars, bound, Complex::new(R::one(), R::zero()))
    }

    pub fn monomial(vars: Vars, bound: i32, m: Mono, c: Complex<R>) -> Self {
        let mut s = Self::zero(vars, bound);
        if !is_czero(&c) && m.weight() as i32 <= bound {
            s.terms.push((m, c));
        }
        s
    }

    pub fn var(vars: Vars, bound: i32, v: Var) -> Self {
        Self::monomial(vars, bound, Mono::var(vars, v), Complex::new(R::one(), R::zero()))
    }

    /// Builds a canonical series from arbitrary (possibly repeated, possibly zero) terms.
    pub fn from_terms<I: IntoIterator<Item = (Mono, Complex<R>)>>(vars: Vars, bound: i32, it: I) -> Self {
        let mut acc: Accum<R> = FxHashMap::default();
        for (m, c) in it {
            if m.weight() as i32 <= bound {
                acc_add(&mut acc, m, c);
            }
        }
        Self::from_accum(vars, bound, acc)
    }

    pub(crate) fn from_accum(vars: Vars, bound: i32, acc: Accum<R>) -> Self {
        let mut terms: Vec<_> = acc
            .into_iter()
            .filter(|(m, c)| !is_czero(c) && m.weight() as i32 <= bound)
            .collect();
        terms.sort_by(|x, y| x.0.cmp(&y.0));
        Series { vars, bound, terms }
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn bound(&self) -> i32 {
        self.bound
    }

    pub fn terms(&self) -> &[(Mono, Complex<R>)] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<(Mono, Complex<R>)> {
        self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Lowest weight of a stored term, or `bound + 1` for the zero series.
    pub fn ord(&self) -> i32 {
        self.terms.first().map(|(m, _)| m.weight() as i32).unwrap_or(self.bound + 1)
    }

    pub fn coeff(&self, m: &Mono) -> Complex<R> {
        match self.terms.binary_search_by(|(k, _)| k.cmp(m)) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => czero(),
        }
    }

    pub fn coeff_ref(&self, m: &Mono) -> Option<&Complex<R>> {
        self.terms.binary_search_by(|(k, _)| k.cmp(m)).ok().map(|i| &self.terms[i].1)
    }

    /// The derivative value h_{z^a z̄^b u^c}(0) = coeff · a! b! c!.
    pub fn derivative_value(&self, m: &Mono) -> Complex<R> {
        let f = m.factorial_weight(self.vars);
        let f = R::from_i64(f as i64);
        let c = self.coeff(m);
        Complex::new(c.re * f.clone(), c.im * f)
    }

    /// Sets the coefficient of `m` from a derivative value.
    pub fn with_derivative_value(&self, m: Mono, value: Complex<R>) -> Self {
        let f = R::from_i64(m.factorial_weight(self.vars) as i64);
        let c = Complex::new(value.re / f.clone(), value.im / f);
        self.with_coeff(m, c)
    }

    pub fn with_coeff(&self, m: Mono, c: Complex<R>) -> Self {
        let mut terms: Vec<_> = self.terms.iter().filter(|(k, _)| *k != m).cloned().collect();
        if !is_czero(&c) && m.weight() as i32 <= self.bound {
            terms.push((m, c));
            terms.sort_by(|x, y| x.0.cmp(&y.0));
        }
        Series { vars: self.vars, bound: self.bound, terms }
    }

    /// Lowers the bound to `w` (no-op if already lower).
    pub fn truncate(&self, w: i32) -> Self {
        let bound = self.bound.min(w);
        let terms = self.terms.iter().take_while(|(m, _)| m.weight() as i32 <= bound).cloned().collect();
        Series { vars: self.vars, bound, terms }
    }

    /// Declares the stored terms exact up to `w`. Use only for series known
    /// to be polynomials (for example literal inputs); lowers like `truncate`
    /// when `w` is below the current bound.
    pub fn assume_exact_to(&self, w: i32) -> Self {
        if w <= self.bound {
            return self.truncate(w);
        }
        Series { vars: self.vars, bound: w, terms: self.terms.clone() }
    }

    fn check_shape(&self, other: &Self) -> Result<()> {
        if self.vars != other.vars {
            return Err(CrError::Shape(format!(
                "variable sets differ: (n={}, d={}) vs (n={}, d={})",
                self.vars.n, self.vars.d, other.vars.n, other.vars.d
            )));
        }
        Ok(())
    }

    /// Checked addition; errors on a variable-set mismatch.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.add(other))
    }

    /// Checked multiplication; errors on a variable-set mismatch.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_shape(other)?;
        Ok(self.mul(other))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lin_comb(other, false)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lin_comb(other, true)
    }

    fn lin_comb(&self, other: &Self, negate: bool) -> Self {
        debug_assert_eq!(self.vars, other.vars);
        let bound = self.bound.min(other.bound);
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut i = 0;
        let mut j = 0;
        let a = &self.terms;
        let b = &other.terms;
        loop {
            let next = match (a.get(i), b.get(j)) {
                (None, None) => break,
                (Some(x), None) => {
                    i += 1;
                    (x.0, x.1.clone())
                }
                (None, Some(y)) => {
                    j += 1;
                    (y.0, if negate { -y.1.clone() } else { y.1.clone() })
                }
                (Some(x), Some(y)) => {
                    if x.0 < y.0 {
                        i += 1;
                        (x.0, x.1.clone())
                    } else if y.0 < x.0 {
                        j += 1;
                        (y.0, if negate { -y.1.clone() } else { y.1.clone() })
                    } else {
                        i += 1;
                        j += 1;
                        let c = if negate { x.1.clone() - y.1.clone() } else { x.1.clone() + y.1.clone() };
                        (x.0, c)
                    }
                }
            };
            if next.0.weight() as i32 > bound {
                break;
            }
            if !is_czero(&next.1) {
                out.push(next);
            }
        }
        Series { vars: self.vars, bound, terms: out }
    }

    pub fn neg(&self) -> Self {
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect(),
        }
    }

    pub fn scale(&self, c: &Complex<R>) -> Self {
        if is_czero(c) {
            return Self::zero(self.vars, self.bound);
        }
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self
                .terms
                .iter()
                .map(|(m, x)| (*m, R::cmul(x, c)))
                .filter(|(_, x)| !is_czero(x))
                .collect(),
        }
    }

    pub fn scale_real(&self, r: &R) -> Self {
        self.scale(&Complex::new(r.clone(), R::zero()))
    }

    /// Multiplies by i.
    pub fn mul_i(&self) -> Self {
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self.terms.iter().map(|(m, c)| (*m, Complex::new(-c.im.clone(), c.re.clone()))).collect(),
        }
    }

    /// Cauchy product. The result bound is the largest weight up to which the
    /// product is determined by the known coefficients, capped at the larger
    /// input bound; with equal bounds W it is exactly W.
    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.vars, other.vars);
        let bound = mul_bound(self, other);
        let mut acc: Accum<R> = FxHashMap::default();
        mul_into(&mut acc, self, other, bound);
        Self::from_accum(self.vars, bound, acc)
    }

    /// Cauchy product keeping every coefficient the inputs determine, even
    /// above both input bounds (no cap, unlike [`Series::mul`]).
    pub fn mul_full(&self, other: &Self) -> Self {
        debug_assert_eq!(self.vars, other.vars);
        let bound = (self.bound + other.ord()).min(other.bound + self.ord());
        let mut acc: Accum<R> = FxHashMap::default();
        mul_into(&mut acc, self, other, bound);
        Self::from_accum(self.vars, bound, acc)
    }

    /// [`Series::mul_full`] truncated at `cap` without forming the products above it.
    pub fn mul_upto(&self, other: &Self, cap: i32) -> Self {
        debug_assert_eq!(self.vars, other.vars);
        let bound = (self.bound + other.ord()).min(other.bound + self.ord()).min(cap);
        let mut acc: Accum<R> = FxHashMap::default();
        mul_into(&mut acc, self, other, bound);
        Self::from_accum(self.vars, bound, acc)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.vars, self.bound.max(0));
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    /// Reciprocal of a series with invertible constant term.
    pub fn recip(&self) -> Result<Self> {
        let c0 = self.coeff(&Mono::ONE);
        if is_czero(&c0) {
            return Err(CrError::Singular("series with zero constant term has no reciprocal".into()));
        }
        let inv0 = Complex::new(R::one(), R::zero()) / c0;
        let bound = self.bound;
        let mut r = Self::constant(self.vars, bound, inv0);
        let two = Self::constant(self.vars, bound, Complex::new(R::from_i64(2), R::zero()));
        // Newton iteration r <- r (2 - s r); each step doubles the number of correct weights.
        loop {
            let sr = self.mul(&r).truncate(bound);
            let next = r.mul(&two.sub(&sr)).truncate(bound);
            let done = next.terms == r.terms;
            r = next;
            if done {
                break;
            }
        }
        Ok(Series { vars: self.vars, bound, terms: r.terms })
    }

    /// Formal partial derivative; the bound drops by the variable's weight.
    pub fn differentiate(&self, v: Var) -> Result<Self> {
        self.vars.check(v)?;
        Ok(self.deriv(v))
    }

    pub(crate) fn deriv(&self, v: Var) -> Self {
        let bound = self.bound - v.weight() as i32;
        let mut terms = Vec::new();
        for (m, c) in &self.terms {
            if let Some((q, x)) = m.div_var(self.vars, v) {
                if q.weight() as i32 <= bound {
                    let f = R::from_i64(x as i64);
                    terms.push((q, Complex::new(c.re.clone() * f.clone(), c.im.clone() * f)));
                }
            }
        }
        terms.sort_by(|x, y| x.0.cmp(&y.0));
        Series { vars: self.vars, bound, terms }
    }

    /// Swaps z and z̄ and conjugates coefficients.
    pub fn conjugate(&self) -> Self {
        let mut terms: Vec<_> = self.terms.iter().map(|(m, c)| (m.conj(self.vars), c.conj())).collect();
        terms.sort_by(|x, y| x.0.cmp(&y.0));
        Series { vars: self.vars, bound: self.bound, terms }
    }

    pub fn is_real(&self) -> bool {
        self.conjugate().terms == self.terms
    }

    /// (s + s̄)/2.
    pub fn real_part(&self) -> Self {
        self.add(&self.conjugate()).scale(&cfrac(1, 2))
    }

    /// (s − s̄)/(2i).
    pub fn imag_part(&self) -> Self {
        self.sub(&self.conjugate()).scale(&Complex::new(R::zero(), R::from_frac(-1, 2)))
    }

    pub fn filter<F: Fn(&Mono) -> bool>(&self, keep: F) -> Self {
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self.terms.iter().filter(|(m, _)| keep(m)).cloned().collect(),
        }
    }

    /// Monomials with |a| = k and |b| = l.
    pub fn bigrade_component(&self, k: u32, l: u32) -> Self {
        let vars = self.vars;
        self.filter(|m| m.zdeg() == k && m.zbdeg(vars) == l)
    }

    pub fn weight_component(&self, w: u32) -> Self {
        self.filter(|m| m.weight() == w)
    }

    /// Euler field Σ z_j ∂/∂z_j: multiplies each term by |a|.
    pub fn euler(&self) -> Self {
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.zdeg() > 0)
                .map(|(m, c)| {
                    let f = R::from_i64(m.zdeg() as i64);
                    (*m, Complex::new(c.re.clone() * f.clone(), c.im.clone() * f))
                })
                .collect(),
        }
    }

    /// Inverse of the Euler field on terms with |a| ≥ 1; terms with |a| = 0 are dropped.
    pub fn euler_inv(&self) -> Self {
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.zdeg() > 0)
                .map(|(m, c)| {
                    let f = R::from_i64(m.zdeg() as i64);
                    (*m, Complex::new(c.re.clone() / f.clone(), c.im.clone() / f))
                })
                .collect(),
        }
    }

    /// Equality of coefficients of weight ≤ w (ignores the bounds themselves).
    pub fn eq_upto(&self, other: &Self, w: i32) -> bool {
        let a = self.terms.iter().take_while(|(m, _)| m.weight() as i32 <= w);
        let b = other.terms.iter().take_while(|(m, _)| m.weight() as i32 <= w);
        a.eq(b)
    }

    pub fn map_coeffs<F: Fn(&Mono, &Complex<R>) -> Complex<R>>(&self, f: F) -> Self {
        Series {
            vars: self.vars,
            bound: self.bound,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (*m, f(m, c)))
                .filter(|(_, c)| !is_czero(c))
                .collect(),
        }
    }

    pub fn display(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(m, c)| format!("{}*{}", crate::scalar::fmt_complex(c), m.display(self.vars)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// Integer-scaled copy, handy in tests and examples.
    pub fn times_int(&self, k: i64) -> Self {
        self.scale_real(&R::from_i64(k))
    }

    /// Applies `1/k!` to a series; used by Taylor expansions.
    pub(crate) fn div_factorial(&self, k: u32) -> Self {
        if k <= 1 {
            return self.clone();
        }
        let f: R = factorial(k);
        self.scale_real(&(R::one() / f))
    }
}

/// Accumulates `a * b` restricted to weight ≤ bound into `acc`.
pub(crate) fn mul_into<R: Scalar>(acc: &mut Accum<R>, a: &Series<R>, b: &Series<R>, bound: i32) {
    if a.terms.is_empty() || b.terms.is_empty() {
        return;
    }
    let bmin = b.terms[0].0.weight() as i32;
    for (m1, c1) in &a.terms {
        let w1 = m1.weight() as i32;
        if w1 + bmin > bound {
            break;
        }
        for (m2, c2) in &b.terms {
            if w1 + m2.weight() as i32 > bound {
                break;
            }
            acc_mul(acc, m1.mul(*m2), c1, c2);
        }
    }
}

/// Σ a_k b_k with a common accumulator; the bound is the minimum product bound.
pub fn dot<R: Scalar>(vars: Vars, pairs: &[(&Series<R>, &Series<R>)], cap: i32) -> Series<R> {
    let mut bound = cap;
    for (a, b) in pairs {
        bound = bound.min(mul_bound(a, b));
    }
    let mut acc: Accum<R> = FxHashMap::default();
    for (a, b) in pairs {
        mul_into(&mut acc, a, b, bound);
    }
    Series::from_accum(vars, bound, acc)
}

impl<R: Scalar> Series<R> {
    /// Zero test usable on coefficient values regardless of bound.
    pub fn is_identically_zero_upto(&self, w: i32) -> bool {
        self.terms.iter().all(|(m, _)| m.weight() as i32 > w)
    }

    /// Largest weight present, if any.
    pub fn max_weight(&self) -> Option<u32> {
        self.terms.last().map(|(m, _)| m.weight())
    }

    /// Constant term.
    pub fn constant_term(&self) -> Complex<R> {
        self.coeff(&Mono::ONE)
    }

    /// Whether no term involves z̄.
    pub fn is_free_of_zbar(&self) -> bool {
        let vars = self.vars;
        self.terms.iter().all(|(m, _)| m.zbdeg(vars) == 0)
    }
}

impl<R: Scalar> Series<R> {
    /// Real-valued check used for g and φ components.
    pub fn require_real(&self, what: &str) -> Result<()> {
        if self.is_real() {
            Ok(())
        } else {
            Err(CrError::NotReal(format!("{what} is not real")))
        }
    }

    /// Errors unless every stored term has weight ≥ `w` and ordinary degree ≥ 2.
    pub fn require_no_low_terms(&self, what: &str) -> Result<()> {
        let vars = self.vars;
        if let Some((m, _)) = self.terms.iter().find(|(m, _)| m.degree(vars) < 2) {
            return Err(CrError::Precondition(format!(
                "{what} has a constant or linear term {}",
                m.display(vars)
            )));
        }
        Ok(())
    }
}
