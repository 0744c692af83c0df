//! The first variation of (L̃^z̄, T) under an order-ρ transform, at the
//! weights where it is linear: for δf of weight m − 1 and δg of weight m,
//! only the weight-1 part ℓ of L^w enters.

use num_complex::Complex;

use super::Mode;
use crate::scalar::Scalar;
use crate::series::{Mono, Series, Var, Vars};
use crate::structure::AlmostCR;

/// One real unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Slot {
    /// Real coefficient of a self-conjugate monomial in g_l.
    GSelf { l: usize, mono: Mono },
    /// Re or Im of the coefficient of `mono` in g_l (its conjugate follows).
    GPair { l: usize, mono: Mono, im: bool },
    /// Re or Im of the coefficient of `mono` in f_i.
    F { i: usize, mono: Mono, im: bool },
}

impl Slot {
    /// (δf, δg) for a unit value of this unknown.
    pub fn unit<R: Scalar>(&self, vars: Vars) -> (Vec<Series<R>>, Vec<Series<R>>) {
        let big = i32::MAX / 4;
        let mut f: Vec<Series<R>> = (0..vars.n).map(|_| Series::zero(vars, big)).collect();
        let mut g: Vec<Series<R>> = (0..vars.d).map(|_| Series::zero(vars, big)).collect();
        let one = Complex::new(R::one(), R::zero());
        let i = Complex::new(R::zero(), R::one());
        match *self {
            Slot::GSelf { l, mono } => g[l] = Series::monomial(vars, big, mono, one),
            Slot::GPair { l, mono, im } => {
                let c = if im { i } else { one };
                let t = Series::monomial(vars, big, mono, c.clone());
                g[l] = t.add(&Series::monomial(vars, big, mono.conj(vars), c.conj()));
            }
            Slot::F { i: k, mono, im } => f[k] = Series::monomial(vars, big, mono, if im { i } else { one }),
        }
        (f, g)
    }
}

pub(crate) struct Linearization<R: Scalar> {
    vars: Vars,
    mode: Mode,
    /// ℓ_{lk}: weight-1 part of L^w_{lk}.
    ell: Vec<Vec<Series<R>>>,
    /// Σ_k z_k ℓ_{lk}.
    ell_t: Vec<Series<R>>,
    /// a_{li} = Σ_k z_k ∂_{z_i}ℓ_{lk}, b_{li} = Σ_k z_k ∂_{z̄_i}ℓ_{lk}.
    a: Vec<Vec<Series<R>>>,
    b: Vec<Vec<Series<R>>>,
}

impl<R: Scalar> Linearization<R> {
    pub fn new(s: &AlmostCR<R>, mode: Mode) -> Self {
        let vars = s.vars();
        let (n, d) = (vars.n, vars.d);
        let big = i32::MAX / 4;
        let z = |k: usize| Series::var(vars, big, Var::Z(k));
        let ell: Vec<Vec<Series<R>>> = (0..d)
            .map(|l| (0..n).map(|k| s.lw().get(l, k).weight_component(1).assume_exact_to(big)).collect())
            .collect();
        let ell_t = ell
            .iter()
            .map(|row| row.iter().enumerate().fold(Series::zero(vars, big), |acc, (k, e)| acc.add(&e.mul(&z(k)))))
            .collect();
        let contract = |v: fn(usize) -> Var| -> Vec<Vec<Series<R>>> {
            ell.iter()
                .map(|row| {
                    (0..n)
                        .map(|i| {
                            row.iter()
                                .enumerate()
                                .fold(Series::zero(vars, big), |acc, (k, e)| acc.add(&e.deriv(v(i)).mul(&z(k))))
                        })
                        .collect()
                })
                .collect()
        };
        let a = contract(Var::Z);
        let b = contract(Var::Zb);
        Linearization { vars, mode, ell, ell_t, a, b }
    }

    /// E(h) + Σ_p ∂_{u_p}h · ℓ̃_p.
    fn along(&self, h: &Series<R>) -> Series<R> {
        let mut out = h.euler();
        for (p, lt) in self.ell_t.iter().enumerate() {
            let du = h.deriv(Var::U(p));
            if !du.is_zero() {
                out = out.add(&du.mul(lt));
            }
        }
        out
    }

    /// (δL̃^z̄, δT) for (δf, δg).
    pub fn apply(&self, df: &[Series<R>], dg: &[Series<R>]) -> (Vec<Series<R>>, Vec<Series<R>>) {
        let vars = self.vars;
        let dfb: Vec<Series<R>> = df.iter().map(|s| s.conjugate()).collect();
        let zb: Vec<Series<R>> = dfb.iter().map(|s| self.along(s)).collect();
        let mut lw: Vec<Series<R>> = Vec::with_capacity(vars.d);
        for l in 0..vars.d {
            let mut acc = self.along(&dg[l]);
            for i in 0..vars.n {
                if df[i].is_zero() {
                    continue;
                }
                let ai = self.along(&df[i]);
                acc = acc.sub(&self.ell[l][i].mul(&ai));
                acc = acc.sub(&self.a[l][i].mul(&df[i]));
                acc = acc.sub(&self.b[l][i].mul(&dfb[i]));
            }
            lw.push(acc);
        }
        let t = if self.mode.uses_phi() {
            // E(δφ) = −iδL̃ − Σ_p ∂_{u_p}δφ · ℓ̃_p.
            let base: Vec<Series<R>> = lw.iter().map(|s| s.mul_i().neg()).collect();
            base.iter()
                .map(|b| {
                    let mut phi = b.euler_inv();
                    loop {
                        let mut rhs = b.clone();
                        for (p, lt) in self.ell_t.iter().enumerate() {
                            let du = phi.deriv(Var::U(p));
                            if !du.is_zero() {
                                rhs = rhs.sub(&du.mul(lt));
                            }
                        }
                        let next = rhs.euler_inv();
                        if next == phi {
                            break phi;
                        }
                        phi = next;
                    }
                })
                .collect()
        } else {
            lw.iter().map(|s| s.mul_i().neg()).collect()
        };
        (zb, t)
    }
}
