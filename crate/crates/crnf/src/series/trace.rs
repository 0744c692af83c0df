//! The trace operator of a nondegenerate hermitian form and the unique
//! decomposition p = q·form^l + h with tr^l h = 0.

use std::collections::BTreeMap;

use num_complex::Complex;

use super::{Mono, Series, Var, Vars};
use crate::error::{CrError, Result};
use crate::linalg::{invert_dense, SparseSystem};
use crate::scalar::{is_czero, Scalar};

/// A nondegenerate hermitian form Σ c_jk z̄_j z_k and its trace operator
/// tr = Σ d^{jk} ∂²/∂z̄_j∂z_k, normalized so that tr(form) = n.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceForm<R: Scalar> {
    c: Vec<Vec<Complex<R>>>,
    d: Vec<Vec<Complex<R>>>,
}

impl<R: Scalar> TraceForm<R> {
    /// From the coefficient matrix, `c[j][k]` multiplying z̄_j z_k.
    pub fn from_matrix(c: &[Vec<Complex<R>>]) -> Result<Self> {
        let n = c.len();
        if n == 0 || c.iter().any(|r| r.len() != n) {
            return Err(CrError::Shape("trace form matrix must be square and nonempty".into()));
        }
        let inv = invert_dense(c).ok_or_else(|| CrError::Singular("hermitian form is degenerate".into()))?;
        let d = (0..n).map(|j| (0..n).map(|k| inv[k][j].clone()).collect()).collect();
        Ok(TraceForm { c: c.to_vec(), d })
    }

    /// Reads the matrix from the bidegree-(1,1), u-free part of a series.
    pub fn from_form(q_form: &Series<R>) -> Result<Self> {
        let vars = q_form.vars();
        let n = vars.n;
        let c: Vec<Vec<Complex<R>>> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let m = Mono::var(vars, Var::Zb(j)).mul(Mono::var(vars, Var::Z(k)));
                        q_form.coeff(&m)
                    })
                    .collect()
            })
            .collect();
        Self::from_matrix(&c)
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn matrix(&self) -> &[Vec<Complex<R>>] {
        &self.c
    }

    /// The form as a series.
    pub fn form(&self, vars: Vars, bound: i32) -> Series<R> {
        let mut terms = Vec::new();
        for j in 0..self.n() {
            for k in 0..self.n() {
                let m = Mono::var(vars, Var::Zb(j)).mul(Mono::var(vars, Var::Z(k)));
                terms.push((m, self.c[j][k].clone()));
            }
        }
        Series::from_terms(vars, bound, terms)
    }

    /// One application of tr; the bound drops by 2.
    pub fn apply(&self, s: &Series<R>) -> Series<R> {
        let vars = s.vars();
        let mut out = Series::zero(vars, s.bound() - 2);
        for k in 0..self.n() {
            let dz = s.deriv(Var::Z(k));
            if dz.is_zero() {
                continue;
            }
            for j in 0..self.n() {
                if is_czero(&self.d[j][k]) {
                    continue;
                }
                out = out.add(&dz.deriv(Var::Zb(j)).scale(&self.d[j][k]));
            }
        }
        out
    }

    pub fn apply_pow(&self, s: &Series<R>, l: u32) -> Series<R> {
        let mut out = s.clone();
        for _ in 0..l {
            out = self.apply(&out);
        }
        out
    }
}

/// tr with the form given by its coefficient matrix.
pub fn trace_op<R: Scalar>(s: &Series<R>, levi: &[Vec<Complex<R>>]) -> Result<Series<R>> {
    if levi.len() != s.vars().n {
        return Err(CrError::Shape(format!("form is {}x{}, expected n = {}", levi.len(), levi.len(), s.vars().n)));
    }
    Ok(TraceForm::from_matrix(levi)?.apply(s))
}

pub fn trace_op_pow<R: Scalar>(s: &Series<R>, form: &TraceForm<R>, l: u32) -> Series<R> {
    form.apply_pow(s, l)
}

/// Exponent vectors of length `n` with entries summing to `k`.
pub(crate) fn compositions(n: usize, k: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; n];
    fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for x in (0..=left).rev() {
            cur[i] = x;
            rec(i + 1, left - x, cur, out);
        }
    }
    if n == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(0, k, &mut cur, &mut out);
    out
}

/// Monomials of bidegree (a, b) with the given u-exponents.
pub(crate) fn bidegree_monomials(vars: Vars, a: u32, b: u32, c: &[u32]) -> Vec<Mono> {
    let mut out = Vec::new();
    for za in compositions(vars.n, a) {
        for zb in compositions(vars.n, b) {
            out.push(Mono::new(vars, &za, &zb, c).expect("small exponents"));
        }
    }
    out.sort();
    out
}

/// Splits p = q·form^l + h with tr^l h = 0, one block per (bidegree,
/// u-monomial). `q` has bound `p.bound() − 2l`, `h` keeps p's bound.
pub fn trace_decompose<R: Scalar>(p: &Series<R>, l: u32, q_form: &Series<R>) -> Result<(Series<R>, Series<R>)> {
    let tf = TraceForm::from_form(q_form)?;
    trace_decompose_with(p, l, &tf)
}

pub fn trace_decompose_with<R: Scalar>(p: &Series<R>, l: u32, tf: &TraceForm<R>) -> Result<(Series<R>, Series<R>)> {
    let vars = p.vars();
    if l == 0 {
        return Err(CrError::Precondition("trace_decompose needs l >= 1".into()));
    }
    let big = i32::MAX / 4;
    let form_l = tf.form(vars, big).pow(l);
    let mut blocks: BTreeMap<(u32, u32, Vec<u32>), Vec<(Mono, Complex<R>)>> = BTreeMap::new();
    for (m, c) in p.terms() {
        blocks.entry((m.zdeg(), m.zbdeg(vars), m.c(vars))).or_default().push((*m, c.clone()));
    }
    let mut q_terms = Vec::new();
    let mut h_terms = Vec::new();
    for ((a, b, c), terms) in blocks {
        if a < l || b < l {
            h_terms.extend(terms);
            continue;
        }
        let hs = bidegree_monomials(vars, a, b, &c);
        let qs = bidegree_monomials(vars, a - l, b - l, &c);
        let nq = qs.len();
        let nh = hs.len();
        let h_index = |m: &Mono| hs.binary_search(m).expect("monomial in block");
        let mut sys: SparseSystem<Complex<R>> = SparseSystem::new(nq + nh);
        // Rows 0..nh: coefficient match on each monomial of the block.
        let mut rows: Vec<Vec<(usize, Complex<R>)>> = vec![Vec::new(); nh];
        for (qi, qm) in qs.iter().enumerate() {
            for (fm, fc) in form_l.terms() {
                rows[h_index(&qm.mul(*fm))].push((qi, fc.clone()));
            }
        }
        let pmap: BTreeMap<Mono, Complex<R>> = terms.into_iter().collect();
        for (hi, mut row) in rows.into_iter().enumerate() {
            row.push((nq + hi, Complex::new(R::one(), R::zero())));
            let rhs = pmap.get(&hs[hi]).cloned().unwrap_or_else(|| Complex::new(R::zero(), R::zero()));
            sys.push_row(row, rhs);
        }
        // Rows for tr^l h = 0, one per monomial of bidegree (a−l, b−l).
        let mut trows: Vec<Vec<(usize, Complex<R>)>> = vec![Vec::new(); nq];
        for (hi, hm) in hs.iter().enumerate() {
            let img = tf.apply_pow(&Series::monomial(vars, big, *hm, Complex::new(R::one(), R::zero())), l);
            for (m, c) in img.terms() {
                let qi = qs.binary_search(m).expect("trace lands in lower block");
                trows[qi].push((nq + hi, c.clone()));
            }
        }
        for row in trows {
            sys.push_row(row, Complex::new(R::zero(), R::zero()));
        }
        let x = sys
            .solve(None)
            .map_err(|_| CrError::Singular("trace decomposition system is singular".into()))?;
        for (qi, qm) in qs.iter().enumerate() {
            q_terms.push((*qm, x[qi].clone()));
        }
        for (hi, hm) in hs.iter().enumerate() {
            h_terms.push((*hm, x[nq + hi].clone()));
        }
    }
    let q = Series::from_terms(vars, p.bound() - 2 * l as i32, q_terms);
    let h = Series::from_terms(vars, p.bound(), h_terms);
    Ok((q, h))
}
