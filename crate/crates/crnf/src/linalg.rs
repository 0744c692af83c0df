//! Exact linear algebra over a field: dense and sparse elimination, kernels,
//! and congruence diagonalization of hermitian matrices.

use std::ops::Neg;

use num_complex::Complex;
use num_traits::{Num, One, Zero};

use crate::scalar::Scalar;

/// Anything we can run Gaussian elimination over.
pub trait Field: Num + Clone + PartialEq + Neg<Output = Self> {}

impl<T: Num + Clone + PartialEq + Neg<Output = T>> Field for T {}

/// Outcome of a failed solve.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveFailure<F> {
    pub rank: usize,
    /// One kernel vector, built from the first free column.
    pub kernel: Option<Vec<F>>,
    pub nullity: usize,
    pub inconsistent: bool,
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref<F: Field>(m: &mut [Vec<F>]) -> Vec<usize> {
    let rows = m.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = m[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(p, r);
        let inv = F::one() / m[r][c].clone();
        for x in m[r].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let v = m[r][j].clone();
                    if !v.is_zero() {
                        m[i][j] = m[i][j].clone() - f.clone() * v;
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Kernel basis of a dense matrix, one vector per free column in increasing order.
pub fn kernel<F: Field>(m: &[Vec<F>], cols: usize) -> Vec<Vec<F>> {
    let mut a: Vec<Vec<F>> = m.to_vec();
    let pivots = rref(&mut a);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![F::zero(); cols];
            v[f] = F::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[r][f].clone();
            }
            v
        })
        .collect()
}

/// Solves a square or overdetermined dense system exactly.
pub fn solve_dense<F: Field>(a: &[Vec<F>], b: &[F]) -> std::result::Result<Vec<F>, SolveFailure<F>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut aug: Vec<Vec<F>> = a
        .iter()
        .zip(b)
        .map(|(row, x)| {
            let mut r = row.clone();
            r.push(x.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return Err(SolveFailure { rank: pivots.len() - 1, kernel: None, nullity: 0, inconsistent: true });
    }
    if pivots.len() < cols {
        let k = kernel(a, cols);
        return Err(SolveFailure {
            rank: pivots.len(),
            nullity: cols - pivots.len(),
            kernel: k.into_iter().next(),
            inconsistent: false,
        });
    }
    let mut x = vec![F::zero(); cols];
    for (r, &c) in pivots.iter().enumerate() {
        x[c] = aug[r][cols].clone();
    }
    Ok(x)
}

/// Dense inverse; `None` if singular.
pub fn invert_dense<F: Field>(m: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let n = m.len();
    let mut aug: Vec<Vec<F>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { F::one() } else { F::zero() }));
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.len() < n || pivots[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_mul<F: Field>(a: &[Vec<F>], b: &[Vec<F>]) -> Vec<Vec<F>> {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).fold(F::zero(), |acc, l| acc + a[i][l].clone() * b[l][j].clone()))
                .collect()
        })
        .collect()
}

/// Conjugate transpose.
pub fn adjoint<R: Scalar>(a: &[Vec<Complex<R>>]) -> Vec<Vec<Complex<R>>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    (0..cols).map(|j| (0..rows).map(|i| a[i][j].conj()).collect()).collect()
}

/// A sparse linear system with rows stored as sorted (column, value) lists.
#[derive(Clone, Debug)]
pub struct SparseSystem<F> {
    ncols: usize,
    rows: Vec<Vec<(usize, F)>>,
    rhs: Vec<F>,
}

impl<F: Field> SparseSystem<F> {
    pub fn new(ncols: usize) -> Self {
        SparseSystem { ncols, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    /// Adds a row; duplicate columns are summed and zeros dropped.
    pub fn push_row(&mut self, mut entries: Vec<(usize, F)>, rhs: F) {
        entries.sort_by_key(|e| e.0);
        let mut row: Vec<(usize, F)> = Vec::with_capacity(entries.len());
        for (c, v) in entries {
            debug_assert!(c < self.ncols);
            match row.last_mut() {
                Some(last) if last.0 == c => last.1 = last.1.clone() + v,
                _ => row.push((c, v)),
            }
        }
        row.retain(|e| !e.1.is_zero());
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    /// Gaussian elimination visiting columns in `order` (default: natural),
    /// pivoting on the shortest available row. The solution of a nonsingular
    /// system does not depend on the order.
    pub fn solve(&self, order: Option<&[usize]>) -> std::result::Result<Vec<F>, SolveFailure<F>> {
        let natural: Vec<usize>;
        let order = match order {
            Some(o) => o,
            None => {
                natural = (0..self.ncols).collect();
                &natural
            }
        };
        let mut rows = self.rows.clone();
        let mut rhs = self.rhs.clone();
        let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); self.ncols];
        for (r, row) in rows.iter().enumerate() {
            for (c, _) in row {
                col_rows[*c].push(r);
            }
        }
        let mut pivoted = vec![false; rows.len()];
        let mut pivots: Vec<(usize, usize)> = Vec::new();
        let mut free: Vec<usize> = Vec::new();
        for &c in order {
            let mut best: Option<usize> = None;
            for &r in &col_rows[c] {
                if pivoted[r] || !row_has(&rows[r], c) {
                    continue;
                }
                if best.map_or(true, |b| rows[r].len() < rows[b].len() || (rows[r].len() == rows[b].len() && r < b)) {
                    best = Some(r);
                }
            }
            let Some(pr) = best else {
                free.push(c);
                continue;
            };
            pivoted[pr] = true;
            let pv = row_get(&rows[pr], c).unwrap();
            let inv = F::one() / pv;
            for e in rows[pr].iter_mut() {
                e.1 = e.1.clone() * inv.clone();
            }
            rhs[pr] = rhs[pr].clone() * inv;
            let prow = rows[pr].clone();
            let prhs = rhs[pr].clone();
            let targets: Vec<usize> = col_rows[c].clone();
            let mut seen = Vec::new();
            for r in targets {
                if pivoted[r] || seen.contains(&r) {
                    continue;
                }
                seen.push(r);
                let Some(f) = row_get(&rows[r], c) else { continue };
                let (new_row, new_cols) = axpy_row(&rows[r], &prow, &f);
                rows[r] = new_row;
                rhs[r] = rhs[r].clone() - f * prhs.clone();
                for nc in new_cols {
                    col_rows[nc].push(r);
                }
            }
            pivots.push((pr, c));
        }
        let rank = pivots.len();
        let inconsistent = rows
            .iter()
            .zip(&rhs)
            .zip(&pivoted)
            .any(|((row, b), &p)| !p && row.is_empty() && !b.is_zero());
        if inconsistent || !free.is_empty() {
            let kernel = free.first().map(|&f0| {
                let mut x = vec![F::zero(); self.ncols];
                x[f0] = F::one();
                back_substitute(&rows, &pivots, &mut x, None);
                x
            });
            return Err(SolveFailure { rank, kernel, nullity: free.len(), inconsistent });
        }
        // Remaining unpivoted rows must have reduced to 0 = 0.
        for ((row, b), &p) in rows.iter().zip(&rhs).zip(&pivoted) {
            if !p && (!row.is_empty() || !b.is_zero()) {
                return Err(SolveFailure { rank, kernel: None, nullity: 0, inconsistent: true });
            }
        }
        let mut x = vec![F::zero(); self.ncols];
        back_substitute(&rows, &pivots, &mut x, Some(&rhs));
        Ok(x)
    }
}

fn row_has<F>(row: &[(usize, F)], c: usize) -> bool {
    row.binary_search_by_key(&c, |e| e.0).is_ok()
}

fn row_get<F: Clone>(row: &[(usize, F)], c: usize) -> Option<F> {
    row.binary_search_by_key(&c, |e| e.0).ok().map(|i| row[i].1.clone())
}

/// row − f·prow, returning the new row and the columns that were filled in.
fn axpy_row<F: Field>(row: &[(usize, F)], prow: &[(usize, F)], f: &F) -> (Vec<(usize, F)>, Vec<usize>) {
    let mut out = Vec::with_capacity(row.len() + prow.len());
    let mut fill = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < row.len() || j < prow.len() {
        if j == prow.len() || (i < row.len() && row[i].0 < prow[j].0) {
            out.push(row[i].clone());
            i += 1;
        } else if i == row.len() || prow[j].0 < row[i].0 {
            let v = -(f.clone() * prow[j].1.clone());
            if !v.is_zero() {
                fill.push(prow[j].0);
                out.push((prow[j].0, v));
            }
            j += 1;
        } else {
            let v = row[i].1.clone() - f.clone() * prow[j].1.clone();
            if !v.is_zero() {
                out.push((row[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    (out, fill)
}

fn back_substitute<F: Field>(rows: &[Vec<(usize, F)>], pivots: &[(usize, usize)], x: &mut [F], rhs: Option<&[F]>) {
    for &(r, c) in pivots.iter().rev() {
        let mut v = match rhs {
            Some(b) => b[r].clone(),
            None => F::zero(),
        };
        for (cc, a) in &rows[r] {
            if *cc != c {
                v = v - a.clone() * x[*cc].clone();
            }
        }
        x[c] = v;
    }
}

/// Result of congruence diagonalization P* M P = D of a hermitian matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Congruence<R: Scalar> {
    pub diagonal: Vec<R>,
    pub p: Vec<Vec<Complex<R>>>,
    pub rank: usize,
    /// Number of negative diagonal entries.
    pub negatives: usize,
}

/// Exact congruence diagonalization. Pivots on the first nonzero diagonal
/// entry, else on the first nonzero off-diagonal pair (i, j), which is first
/// folded into the diagonal by e_i ↦ e_i + t e_j with t ∈ {1, i}.
pub fn hermitian_congruence<R: Scalar>(m: &[Vec<Complex<R>>]) -> Congruence<R> {
    let n = m.len();
    let mut a: Vec<Vec<Complex<R>>> = m.to_vec();
    let mut p: Vec<Vec<Complex<R>>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex::one() } else { Complex::zero() }).collect())
        .collect();
    let swap = |a: &mut Vec<Vec<Complex<R>>>, p: &mut Vec<Vec<Complex<R>>>, i: usize, k: usize| {
        if i == k {
            return;
        }
        a.swap(i, k);
        for row in a.iter_mut() {
            row.swap(i, k);
        }
        for row in p.iter_mut() {
            row.swap(i, k);
        }
    };
    // col_j += t col_k and row_j += conj(t) row_k.
    let add = |a: &mut Vec<Vec<Complex<R>>>, p: &mut Vec<Vec<Complex<R>>>, j: usize, k: usize, t: Complex<R>| {
        for row in a.iter_mut() {
            let v = row[k].clone();
            row[j] = row[j].clone() + v * t.clone();
        }
        let rk = a[k].clone();
        for (x, y) in a[j].iter_mut().zip(rk) {
            *x = x.clone() + y * t.conj();
        }
        for row in p.iter_mut() {
            let v = row[k].clone();
            row[j] = row[j].clone() + v * t.clone();
        }
    };
    let mut k = 0;
    while k < n {
        let diag = (k..n).find(|&i| !a[i][i].is_zero());
        let pivot = match diag {
            Some(i) => Some(i),
            None => {
                let mut found = None;
                'outer: for i in k..n {
                    for j in (i + 1)..n {
                        if !a[i][j].is_zero() {
                            found = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                found.map(|(i, j)| {
                    let t = if !a[i][j].re.is_zero() { Complex::one() } else { Complex::i() };
                    add(&mut a, &mut p, i, j, t);
                    i
                })
            }
        };
        let Some(i) = pivot else { break };
        swap(&mut a, &mut p, i, k);
        let piv = a[k][k].clone();
        for j in (k + 1)..n {
            if a[k][j].is_zero() {
                continue;
            }
            let f = -(a[k][j].clone() / piv.clone());
            add(&mut a, &mut p, j, k, f);
        }
        k += 1;
    }
    let diagonal: Vec<R> = (0..n).map(|i| a[i][i].re.clone()).collect();
    let rank = diagonal.iter().filter(|x| !x.is_zero()).count();
    let negatives = diagonal.iter().filter(|x| x.sign() == std::cmp::Ordering::Less).count();
    Congruence { diagonal, p, rank, negatives }
}
