//! Matrices with series entries.

use num_complex::Complex;


use super::{dot, Series, Var, Vars};
use crate::error::{CrError, Result};
use crate::scalar::{is_czero, Scalar};

/// Row-major matrix of series over a common variable set.
#[derive(Clone, PartialEq, Debug)]
pub struct SeriesMatrix<R: Scalar> {
    rows: usize,
    cols: usize,
    entries: Vec<Series<R>>,
}

impl<R: Scalar> SeriesMatrix<R> {
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Series<R>>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(CrError::Shape(format!(
                "{} entries do not form a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        let vars = entries[0].vars();
        if entries.iter().any(|e| e.vars() != vars) {
            return Err(CrError::Shape("matrix entries over different variable sets".into()));
        }
        Ok(SeriesMatrix { rows, cols, entries })
    }

    pub fn from_fn<F: FnMut(usize, usize) -> Series<R>>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        SeriesMatrix { rows, cols, entries }
    }

    pub fn zeros(vars: Vars, rows: usize, cols: usize, bound: i32) -> Self {
        Self::from_fn(rows, cols, |_, _| Series::zero(vars, bound))
    }

    pub fn identity(vars: Vars, n: usize, bound: i32) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Series::one(vars, bound) } else { Series::zero(vars, bound) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn vars(&self) -> Vars {
        self.entries[0].vars()
    }

    pub fn get(&self, i: usize, j: usize) -> &Series<R> {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, s: Series<R>) {
        self.entries[i * self.cols + j] = s;
    }

    pub fn entries(&self) -> &[Series<R>] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> Vec<Series<R>> {
        (0..self.cols).map(|j| self.get(i, j).clone()).collect()
    }

    /// Smallest entry bound.
    pub fn bound(&self) -> i32 {
        self.entries.iter().map(|e| e.bound()).min().unwrap()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn map<F: FnMut(&Series<R>) -> Series<R>>(&self, f: F) -> Self {
        SeriesMatrix { rows: self.rows, cols: self.cols, entries: self.entries.iter().map(f).collect() }
    }

    pub fn truncate(&self, w: i32) -> Self {
        self.map(|e| e.truncate(w))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(CrError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.add(b)).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_shape(other)?;
        Ok(SeriesMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a.sub(b)).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(CrError::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let vars = self.vars();
        let mut entries = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let pairs: Vec<_> = (0..self.cols).map(|k| (self.get(i, k), other.get(k, j))).collect();
                entries.push(dot(vars, &pairs, i32::MAX));
            }
        }
        Ok(SeriesMatrix { rows: self.rows, cols: other.cols, entries })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn conjugate(&self) -> Self {
        self.map(|e| e.conjugate())
    }

    pub fn scale(&self, c: &Complex<R>) -> Self {
        self.map(|e| e.scale(c))
    }

    pub fn differentiate(&self, v: Var) -> Self {
        self.map(|e| e.deriv(v))
    }

    /// Inverse by Gauss-Jordan elimination with series pivots. The constant
    /// term matrix must be invertible.
    pub fn inverse(&self) -> Result<Self> {
        if self.rows != self.cols {
            return Err(CrError::Shape(format!("cannot invert a {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        let vars = self.vars();
        let bound = self.bound();
        let mut a = self.truncate(bound);
        let mut inv = Self::identity(vars, n, bound);
        for col in 0..n {
            let piv = (col..n)
                .find(|&r| !is_czero(&a.get(r, col).constant_term()))
                .ok_or_else(|| CrError::Singular("constant-term matrix is singular".into()))?;
            if piv != col {
                for j in 0..n {
                    a.entries.swap(piv * n + j, col * n + j);
                    inv.entries.swap(piv * n + j, col * n + j);
                }
            }
            let p = a.get(col, col).recip()?;
            for j in 0..n {
                let x = a.get(col, j).mul(&p).truncate(bound);
                a.set(col, j, x);
                let y = inv.get(col, j).mul(&p).truncate(bound);
                inv.set(col, j, y);
            }
            for r in 0..n {
                if r == col || a.get(r, col).is_zero() {
                    continue;
                }
                let factor = a.get(r, col).clone();
                for j in 0..n {
                    let x = a.get(r, j).sub(&factor.mul(a.get(col, j))).truncate(bound);
                    a.set(r, j, x);
                    let y = inv.get(r, j).sub(&factor.mul(inv.get(col, j))).truncate(bound);
                    inv.set(r, j, y);
                }
            }
        }
        Ok(inv)
    }

    /// Σ_j row_j z_j for a single-row matrix.
    pub fn euler_eval(&self) -> Result<Series<R>> {
        if self.rows != 1 {
            return Err(CrError::Shape(format!("euler_eval needs one row, got {}", self.rows)));
        }
        Ok(self.euler_rows().remove(0))
    }

    /// Row-wise Σ_j M_ij z_j.
    pub fn euler_rows(&self) -> Vec<Series<R>> {
        let vars = self.vars();
        if self.cols != vars.n {
            panic!("euler evaluation needs n = {} columns, got {}", vars.n, self.cols);
        }
        (0..self.rows)
            .map(|i| {
                let zs: Vec<Series<R>> =
                    (0..self.cols).map(|j| Series::var(vars, i32::MAX / 4, Var::Z(j))).collect();
                let pairs: Vec<_> = (0..self.cols).map(|j| (self.get(i, j), &zs[j])).collect();
                dot(vars, &pairs, self.row_bound(i) + 1)
            })
            .collect()
    }

    fn row_bound(&self, i: usize) -> i32 {
        (0..self.cols).map(|j| self.get(i, j).bound()).min().unwrap()
    }

    /// Constant-term matrix.
    pub fn constant_part(&self) -> Vec<Vec<Complex<R>>> {
        (0..self.rows).map(|i| (0..self.cols).map(|j| self.get(i, j).constant_term()).collect()).collect()
    }

    /// Complex-constant matrix lifted to series.
    pub fn from_constants(vars: Vars, bound: i32, m: &[Vec<Complex<R>>]) -> Self {
        let rows = m.len();
        let cols = m[0].len();
        Self::from_fn(rows, cols, |i, j| Series::constant(vars, bound, m[i][j].clone()))
    }

    pub fn is_identity_const(&self) -> bool {
        (0..self.rows).all(|i| {
            (0..self.cols).all(|j| {
                let c = self.get(i, j).constant_term();
                if i == j {
                    c.re.is_one() && c.im.is_zero()
                } else {
                    is_czero(&c)
                }
            })
        })
    }
}
