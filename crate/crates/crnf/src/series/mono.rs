//! Packed monomials z^a z̄^b u^c.
//!
//! Exponents live one byte per variable inside a `u128`, most significant
//! byte first in the order z_1..z_n, z̄_1..z̄_n, u_1..u_d, so that multiplying
//! monomials is a single integer addition and comparing the packed word is
//! lexicographic comparison of (a, b, c).

use std::fmt;

use crate::error::{CrError, Result};

/// Maximum number of variables (2n + d) that fit in the packed word.
pub const MAX_VARS: usize = 16;
/// Maximum exponent per variable.
pub const MAX_EXP: u32 = 255;

/// Dimensions (n, d) of the variable set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Vars {
    pub n: usize,
    pub d: usize,
}

impl Vars {
    pub fn new(n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 || 2 * n + d > MAX_VARS {
            return Err(CrError::Shape(format!(
                "unsupported dimensions n={n}, d={d} (need n,d >= 1 and 2n+d <= {MAX_VARS})"
            )));
        }
        Ok(Vars { n, d })
    }

    pub fn count(&self) -> usize {
        2 * self.n + self.d
    }

    pub fn var(&self, idx: usize) -> Var {
        if idx < self.n {
            Var::Z(idx)
        } else if idx < 2 * self.n {
            Var::Zb(idx - self.n)
        } else {
            Var::U(idx - 2 * self.n)
        }
    }

    pub fn index(&self, v: Var) -> usize {
        match v {
            Var::Z(j) => j,
            Var::Zb(j) => self.n + j,
            Var::U(k) => 2 * self.n + k,
        }
    }

    pub fn check(&self, v: Var) -> Result<()> {
        let ok = match v {
            Var::Z(j) | Var::Zb(j) => j < self.n,
            Var::U(k) => k < self.d,
        };
        if ok {
            Ok(())
        } else {
            Err(CrError::UnknownVariable(format!("{v:?} for n={}, d={}", self.n, self.d)))
        }
    }

    pub fn all(&self) -> impl Iterator<Item = Var> + '_ {
        (0..self.count()).map(move |i| self.var(i))
    }
}

/// A single variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    Z(usize),
    Zb(usize),
    U(usize),
}

impl Var {
    pub fn weight(self) -> u32 {
        match self {
            Var::Z(_) | Var::Zb(_) => 1,
            Var::U(_) => 2,
        }
    }

    /// The variable exchanged under conjugation.
    pub fn conj(self) -> Var {
        match self {
            Var::Z(j) => Var::Zb(j),
            Var::Zb(j) => Var::Z(j),
            u => u,
        }
    }
}

/// A monomial. Ordering is by weight, then |a|, then lexicographic on (a, b, c).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Mono {
    w: u16,
    za: u16,
    e: u128,
}

#[inline]
fn shift(idx: usize) -> u32 {
    8 * (15 - idx as u32)
}

impl Mono {
    pub const ONE: Mono = Mono { w: 0, za: 0, e: 0 };

    pub fn new(vars: Vars, a: &[u32], b: &[u32], c: &[u32]) -> Result<Mono> {
        if a.len() != vars.n || b.len() != vars.n || c.len() != vars.d {
            return Err(CrError::Shape(format!(
                "exponent vector lengths ({}, {}, {}) do not match n={}, d={}",
                a.len(),
                b.len(),
                c.len(),
                vars.n,
                vars.d
            )));
        }
        let mut m = Mono::ONE;
        for (j, &x) in a.iter().enumerate() {
            m = m.with_exp(vars, Var::Z(j), x)?;
        }
        for (j, &x) in b.iter().enumerate() {
            m = m.with_exp(vars, Var::Zb(j), x)?;
        }
        for (k, &x) in c.iter().enumerate() {
            m = m.with_exp(vars, Var::U(k), x)?;
        }
        Ok(m)
    }

    pub fn var(vars: Vars, v: Var) -> Mono {
        Mono::ONE.with_exp(vars, v, 1).expect("exponent 1 fits")
    }

    fn with_exp(self, vars: Vars, v: Var, x: u32) -> Result<Mono> {
        if x > MAX_EXP {
            return Err(CrError::Shape(format!("exponent {x} exceeds {MAX_EXP}")));
        }
        let idx = vars.index(v);
        let old = self.exp_idx(idx);
        let mut m = self;
        m.e = (m.e & !(0xffu128 << shift(idx))) | ((x as u128) << shift(idx));
        let dw = v.weight() as i64 * (x as i64 - old as i64);
        m.w = (m.w as i64 + dw) as u16;
        if let Var::Z(_) = v {
            m.za = (m.za as i64 + x as i64 - old as i64) as u16;
        }
        Ok(m)
    }

    #[inline]
    pub fn weight(&self) -> u32 {
        self.w as u32
    }

    /// |a|, the total z-degree.
    #[inline]
    pub fn zdeg(&self) -> u32 {
        self.za as u32
    }

    #[inline]
    fn exp_idx(&self, idx: usize) -> u32 {
        ((self.e >> shift(idx)) & 0xff) as u32
    }

    #[inline]
    pub fn exp(&self, vars: Vars, v: Var) -> u32 {
        self.exp_idx(vars.index(v))
    }

    pub fn a(&self, vars: Vars) -> Vec<u32> {
        (0..vars.n).map(|j| self.exp(vars, Var::Z(j))).collect()
    }

    pub fn b(&self, vars: Vars) -> Vec<u32> {
        (0..vars.n).map(|j| self.exp(vars, Var::Zb(j))).collect()
    }

    pub fn c(&self, vars: Vars) -> Vec<u32> {
        (0..vars.d).map(|k| self.exp(vars, Var::U(k))).collect()
    }

    /// |b|, the total z̄-degree.
    pub fn zbdeg(&self, vars: Vars) -> u32 {
        (0..vars.n).map(|j| self.exp(vars, Var::Zb(j))).sum()
    }

    /// |c|, the total u-degree.
    pub fn udeg(&self, vars: Vars) -> u32 {
        (self.w as u32 - self.za as u32 - self.zbdeg(vars)) / 2
    }

    /// Ordinary polynomial degree |a| + |b| + |c|.
    pub fn degree(&self, vars: Vars) -> u32 {
        self.w as u32 - self.udeg(vars)
    }

    /// Product of monomials. Panics on exponent overflow, which the weight
    /// bounds used throughout the crate rule out.
    #[inline]
    pub fn mul(self, other: Mono) -> Mono {
        debug_assert!(self.bytes_fit(other), "monomial exponent overflow");
        Mono { w: self.w + other.w, za: self.za + other.za, e: self.e + other.e }
    }

    fn bytes_fit(self, other: Mono) -> bool {
        (0..16).all(|i| self.exp_idx(i) + other.exp_idx(i) <= MAX_EXP)
    }

    /// Divides by the variable once; `None` if its exponent is zero.
    #[inline]
    pub fn div_var(self, vars: Vars, v: Var) -> Option<(Mono, u32)> {
        let idx = vars.index(v);
        let x = self.exp_idx(idx);
        if x == 0 {
            return None;
        }
        let mut m = self;
        m.e -= 1u128 << shift(idx);
        m.w -= v.weight() as u16;
        if let Var::Z(_) = v {
            m.za -= 1;
        }
        Some((m, x))
    }

    /// Whether `other` divides `self`.
    pub fn divisible_by(&self, vars: Vars, other: &Mono) -> bool {
        (0..vars.count()).all(|i| self.exp_idx(i) >= other.exp_idx(i))
    }

    /// Quotient, assuming divisibility.
    pub fn div(self, other: Mono) -> Mono {
        Mono { w: self.w - other.w, za: self.za - other.za, e: self.e - other.e }
    }

    /// Swaps the z and z̄ exponent blocks.
    pub fn conj(self, vars: Vars) -> Mono {
        let mut m = Mono::ONE;
        for j in 0..vars.n {
            let a = self.exp(vars, Var::Z(j));
            let b = self.exp(vars, Var::Zb(j));
            m = m.with_exp(vars, Var::Z(j), b).unwrap();
            m = m.with_exp(vars, Var::Zb(j), a).unwrap();
        }
        for k in 0..vars.d {
            m = m.with_exp(vars, Var::U(k), self.exp(vars, Var::U(k))).unwrap();
        }
        m
    }

    /// a! b! c!, the factor converting a Taylor coefficient into a derivative value.
    pub fn factorial_weight(&self, vars: Vars) -> u128 {
        let mut acc: u128 = 1;
        for i in 0..vars.count() {
            for k in 2..=self.exp_idx(i) as u128 {
                acc *= k;
            }
        }
        acc
    }

    /// Iterates `(variable, exponent)` for nonzero exponents.
    pub fn factors(&self, vars: Vars) -> impl Iterator<Item = (Var, u32)> + '_ {
        (0..vars.count()).filter_map(move |i| {
            let x = self.exp_idx(i);
            (x > 0).then(|| (vars.var(i), x))
        })
    }

    pub fn display(&self, vars: Vars) -> String {
        let mut parts = Vec::new();
        for (v, x) in self.factors(vars) {
            let name = match v {
                Var::Z(j) => format!("z{}", j + 1),
                Var::Zb(j) => format!("zb{}", j + 1),
                Var::U(k) => format!("u{}", k + 1),
            };
            if x == 1 {
                parts.push(name);
            } else {
                parts.push(format!("{name}^{x}"));
            }
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("*")
        }
    }
}

impl fmt::Debug for Mono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mono(w={}, |a|={}, e={:032x})", self.w, self.za, self.e)
    }
}

/// All monomials of exact weight `w`, in canonical order.
pub fn monomials_of_weight(vars: Vars, w: u32) -> Vec<Mono> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; vars.count()];
    fn rec(vars: Vars, i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Mono>) {
        if i == vars.count() {
            if left == 0 {
                let a = &cur[..vars.n];
                let b = &cur[vars.n..2 * vars.n];
                let c = &cur[2 * vars.n..];
                out.push(Mono::new(vars, a, b, c).expect("small exponents"));
            }
            return;
        }
        let wt = vars.var(i).weight();
        for x in 0..=left / wt {
            cur[i] = x;
            rec(vars, i + 1, left - x * wt, cur, out);
        }
        cur[i] = 0;
    }
    rec(vars, 0, w, &mut cur, &mut out);
    out.sort();
    out
}
