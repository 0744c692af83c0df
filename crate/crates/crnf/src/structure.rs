//! Almost CR structures in graph form: H^{1,0} is spanned by the vectors
//! (ξ, L^z̄ ξ, L^w ξ) over ξ ∈ ℂⁿ, in the coordinates (z, z̄, u).

use num_complex::Complex;

use crate::error::{CrError, Result};
use crate::linalg::{hermitian_congruence, invert_dense, kernel, Congruence};
use crate::scalar::{ci, is_czero, Scalar};
use crate::series::{compose, Mono, Series, SeriesMatrix, Var, Vars};

/// The structure map L = (L^z̄, L^w) of an almost CR structure of type (n, d).
///
/// `weight` is the order of the data: the Euler restriction L̃^w is known up
/// to weight W, so L^w entries are stored to weight W − 1 and L^z̄ entries
/// to W − 2 (L̃^z̄ to W − 1).
#[derive(Clone, PartialEq, Debug)]
pub struct AlmostCR<R: Scalar> {
    vars: Vars,
    weight: u32,
    lzbar: SeriesMatrix<R>,
    lw: SeriesMatrix<R>,
}

/// Hermitian Levi matrix at 0 and its signature (number of negative entries
/// after congruence diagonalization).
#[derive(Clone, PartialEq, Debug)]
pub struct LeviData<R: Scalar> {
    pub matrix: Vec<Vec<Complex<R>>>,
    pub signature: usize,
    pub rank: usize,
    pub congruence: Congruence<R>,
}

impl<R: Scalar> LeviData<R> {
    pub fn is_nondegenerate(&self) -> bool {
        self.rank == self.matrix.len()
    }
}

/// 𝓝 at 0: `nzbar[i][j][k]` = N^z̄_i(e_j, e_k), `nw[l][j][k]` = N^w_l(e_j, e_k).
#[derive(Clone, PartialEq, Debug)]
pub struct NijenhuisData<R: Scalar> {
    pub nzbar: Vec<Vec<Vec<Complex<R>>>>,
    pub nw: Vec<Vec<Vec<Complex<R>>>>,
}

impl<R: Scalar> NijenhuisData<R> {
    pub fn is_zero(&self) -> bool {
        self.nzbar.iter().chain(&self.nw).flatten().flatten().all(is_czero)
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct StrongReport<R: Scalar> {
    pub levi_nondegenerate: bool,
    pub strong: bool,
    /// A nonzero ξ in the kernel of ξ ↦ 6i𝓛(ξ̄,·) + 𝓝^w(ξ,·), when there is one.
    pub kernel_witness: Option<Vec<Complex<R>>>,
}

/// Integrability residual for the pair (e_j, e_k): n + d series, z̄ rows first.
#[derive(Clone, PartialEq, Debug)]
pub struct PairResidual<R: Scalar> {
    pub j: usize,
    pub k: usize,
    pub components: Vec<Series<R>>,
}

fn lin<R: Scalar>(s: &Series<R>, vars: Vars, v: Var) -> Complex<R> {
    s.coeff(&Mono::var(vars, v))
}

impl<R: Scalar> AlmostCR<R> {
    /// Assembles a structure, truncating entries to the bounds implied by
    /// `weight`. Fails if an entry is known to less than that or has a
    /// constant term.
    pub fn new(weight: u32, lzbar: SeriesMatrix<R>, lw: SeriesMatrix<R>) -> Result<Self> {
        let vars = lw.vars();
        let (n, d) = (vars.n, vars.d);
        if lzbar.rows() != n || lzbar.cols() != n || lw.rows() != d || lw.cols() != n {
            return Err(CrError::Shape(format!(
                "expected L^z̄ {n}x{n} and L^w {d}x{n}, got {}x{} and {}x{}",
                lzbar.rows(),
                lzbar.cols(),
                lw.rows(),
                lw.cols()
            )));
        }
        if lzbar.vars() != vars {
            return Err(CrError::Shape("L^z̄ and L^w over different variable sets".into()));
        }
        if weight < 2 {
            return Err(CrError::Shape("structure weight must be at least 2".into()));
        }
        let w = weight as i32;
        if lw.bound() < w - 1 || lzbar.bound() < w - 2 {
            return Err(CrError::Shape(format!(
                "entries known only to weights {} / {}, need {} / {}",
                lzbar.bound(),
                lw.bound(),
                w - 2,
                w - 1
            )));
        }
        for e in lzbar.entries().iter().chain(lw.entries()) {
            if !is_czero(&e.constant_term()) {
                return Err(CrError::Precondition("L(0) must vanish".into()));
            }
        }
        Ok(AlmostCR { vars, weight, lzbar: lzbar.truncate(w - 2), lw: lw.truncate(w - 1) })
    }

    /// From polynomial entries, taken as exact.
    pub fn from_polynomials(vars: Vars, weight: u32, lzbar: Vec<Series<R>>, lw: Vec<Series<R>>) -> Result<Self> {
        let w = weight as i32;
        let lzb: Vec<_> = lzbar.iter().map(|s| s.assume_exact_to(w - 2)).collect();
        let lww: Vec<_> = lw.iter().map(|s| s.assume_exact_to(w - 1)).collect();
        if lzb.iter().chain(&lww).any(|s| s.vars() != vars) {
            return Err(CrError::Shape("entries over a different variable set".into()));
        }
        let lzbar = SeriesMatrix::from_entries(vars.n, vars.n, lzb)?;
        let lw = SeriesMatrix::from_entries(vars.d, vars.n, lww)?;
        Self::new(weight, lzbar, lw)
    }

    /// The flat structure L = 0.
    pub fn flat(vars: Vars, weight: u32) -> Self {
        let w = weight as i32;
        AlmostCR {
            vars,
            weight,
            lzbar: SeriesMatrix::zeros(vars, vars.n, vars.n, w - 2),
            lw: SeriesMatrix::zeros(vars, vars.d, vars.n, w - 1),
        }
    }

    /// The structure induced on the graph Im w = φ(z, z̄, Re w):
    /// L = (0, i(id − iφ_u)⁻¹φ_z). φ is taken as exact to `weight`.
    pub fn from_graph(phi: &[Series<R>], weight: u32) -> Result<Self> {
        if phi.is_empty() {
            return Err(CrError::Shape("graph needs at least one component".into()));
        }
        let vars = phi[0].vars();
        if phi.len() != vars.d {
            return Err(CrError::Shape(format!("{} graph components for d = {}", phi.len(), vars.d)));
        }
        let w = weight as i32;
        let phi: Vec<Series<R>> = phi.iter().map(|p| p.assume_exact_to(w)).collect();
        for (k, p) in phi.iter().enumerate() {
            if p.vars() != vars {
                return Err(CrError::Shape("graph components over different variable sets".into()));
            }
            p.require_real(&format!("phi[{k}]"))?;
            p.require_no_low_terms(&format!("phi[{k}]"))?;
        }
        let (n, d) = (vars.n, vars.d);
        let phi_z = SeriesMatrix::from_fn(d, n, |l, k| phi[l].deriv(Var::Z(k)));
        let m = SeriesMatrix::from_fn(d, d, |l, k| {
            let du = phi[l].deriv(Var::U(k)).mul_i().neg();
            if l == k {
                du.add(&Series::one(vars, du.bound()))
            } else {
                du
            }
        });
        let lw = m.inverse()?.mul(&phi_z)?.scale(&ci());
        Self::new(weight, SeriesMatrix::zeros(vars, n, n, w - 2), lw)
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn n(&self) -> usize {
        self.vars.n
    }

    pub fn d(&self) -> usize {
        self.vars.d
    }

    pub fn weight(&self) -> u32 {
        self.weight
    }

    pub fn lzbar(&self) -> &SeriesMatrix<R> {
        &self.lzbar
    }

    pub fn lw(&self) -> &SeriesMatrix<R> {
        &self.lw
    }

    /// Same data, declared at a lower weight.
    pub fn truncate(&self, weight: u32) -> Self {
        let weight = weight.min(self.weight);
        let w = weight as i32;
        AlmostCR { vars: self.vars, weight, lzbar: self.lzbar.truncate(w - 2), lw: self.lw.truncate(w - 1) }
    }

    /// Column k of L as n + d series (z̄ rows first).
    pub fn column(&self, k: usize) -> Vec<Series<R>> {
        let mut out: Vec<Series<R>> = (0..self.n()).map(|i| self.lzbar.get(i, k).clone()).collect();
        out.extend((0..self.d()).map(|l| self.lw.get(l, k).clone()));
        out
    }

    /// L̃ = L e(z): (L̃^z̄, L̃^w).
    pub fn euler_restrict(&self) -> (Vec<Series<R>>, Vec<Series<R>>) {
        (self.lzbar.euler_rows(), self.lw.euler_rows())
    }

    /// X_j(F) for X_j = ∂_{z_j} + Σ_i L^z̄_ij ∂_{z̄_i} + Σ_l L^w_lj ∂_{u_l}.
    fn apply_field(&self, j: usize, f: &Series<R>) -> Series<R> {
        let mut out = f.deriv(Var::Z(j));
        for i in 0..self.n() {
            out = out.add(&self.lzbar.get(i, j).mul(&f.deriv(Var::Zb(i))));
        }
        for l in 0..self.d() {
            out = out.add(&self.lw.get(l, j).mul(&f.deriv(Var::U(l))));
        }
        out
    }

    /// [X_j, X_k] for all j < k, i.e. X_j(L_{·k}) − X_k(L_{·j}).
    pub fn integrability_residual(&self) -> Vec<PairResidual<R>> {
        let n = self.n();
        let cols: Vec<Vec<Series<R>>> = (0..n).map(|k| self.column(k)).collect();
        let mut out = Vec::new();
        for j in 0..n {
            for k in (j + 1)..n {
                let components = (0..n + self.d())
                    .map(|r| self.apply_field(j, &cols[k][r]).sub(&self.apply_field(k, &cols[j][r])))
                    .collect();
                out.push(PairResidual { j, k, components });
            }
        }
        out
    }

    pub fn is_integrable(&self) -> bool {
        self.integrability_residual().iter().all(|p| p.components.iter().all(|c| c.is_zero()))
    }

    /// Coefficient of variable v in L^w_{lk}.
    fn lw_lin(&self, l: usize, k: usize, v: Var) -> Complex<R> {
        lin(self.lw.get(l, k), self.vars, v)
    }

    fn lzb_lin(&self, i: usize, k: usize, v: Var) -> Complex<R> {
        lin(self.lzbar.get(i, k), self.vars, v)
    }

    /// Lists violated first-order normalization conditions.
    pub fn first_order_violations(&self) -> Vec<String> {
        let (n, d) = (self.n(), self.d());
        let mut bad = Vec::new();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if !is_czero(&self.lzb_lin(i, k, Var::Zb(j))) {
                        bad.push(format!("L^z̄_z̄ nonzero at ({i},{j},{k})"));
                    }
                    if j <= k && !is_czero(&(self.lzb_lin(i, k, Var::Z(j)) + self.lzb_lin(i, j, Var::Z(k)))) {
                        bad.push(format!("L^z̄_z not antisymmetric at ({i},{j},{k})"));
                    }
                }
            }
        }
        for l in 0..d {
            for j in 0..n {
                for k in 0..n {
                    if j <= k && !is_czero(&(self.lw_lin(l, k, Var::Z(j)) + self.lw_lin(l, j, Var::Z(k)))) {
                        bad.push(format!("L^w_z not antisymmetric at ({l},{j},{k})"));
                    }
                    if j <= k && !is_czero(&(self.lw_lin(l, k, Var::Zb(j)) + self.lw_lin(l, j, Var::Zb(k)).conj())) {
                        bad.push(format!("L^w_z̄ not antihermitian at ({l},{j},{k})"));
                    }
                }
            }
        }
        bad
    }

    fn require(&self, what: &str, pred: impl Fn(&str) -> bool) -> Result<()> {
        let bad: Vec<String> = self.first_order_violations().into_iter().filter(|s| pred(s)).collect();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(CrError::Precondition(format!(
                "{what} needs first-order normalization (run normalize_first_order): {}",
                bad.join("; ")
            )))
        }
    }

    /// 𝓝₀ = 2L_z, read off the z-linear coefficients.
    pub fn nijenhuis_at_0(&self) -> Result<NijenhuisData<R>> {
        self.require("nijenhuis_at_0", |s| s.contains("_z not"))?;
        let (n, d) = (self.n(), self.d());
        let two = Complex::new(R::from_i64(2), R::zero());
        let nzbar = (0..n)
            .map(|i| (0..n).map(|j| (0..n).map(|k| self.lzb_lin(i, k, Var::Z(j)) * two.clone()).collect()).collect())
            .collect();
        let nw = (0..d)
            .map(|l| (0..n).map(|j| (0..n).map(|k| self.lw_lin(l, k, Var::Z(j)) * two.clone()).collect()).collect())
            .collect();
        Ok(NijenhuisData { nzbar, nw })
    }

    /// The hermitian matrix M_jk = (1/i)·(coefficient of z̄_j in L^w_k).
    pub fn levi_matrix(&self) -> Result<Vec<Vec<Complex<R>>>> {
        if self.d() != 1 {
            return Err(CrError::Unsupported(format!("Levi data needs d = 1, got d = {}", self.d())));
        }
        let n = self.n();
        let mi = -ci::<R>();
        Ok((0..n).map(|j| (0..n).map(|k| self.lw_lin(0, k, Var::Zb(j)) * mi.clone()).collect()).collect())
    }

    pub fn levi_at_0(&self) -> Result<LeviData<R>> {
        let matrix = self.levi_matrix()?;
        self.require("levi_at_0", |s| s.contains("antihermitian"))?;
        let congruence = hermitian_congruence(&matrix);
        Ok(LeviData { signature: congruence.negatives, rank: congruence.rank, matrix, congruence })
    }

    /// Strong nondegeneracy: Levi nondegenerate and ξ ↦ 6i𝓛(ξ̄,·) + 𝓝^w(ξ,·)
    /// injective. Solved as a real system in (Re ξ_1, Im ξ_1, …).
    pub fn is_strongly_nondegenerate(&self) -> Result<StrongReport<R>> {
        if self.d() != 1 {
            return Err(CrError::Unsupported(format!("strong nondegeneracy needs d = 1, got d = {}", self.d())));
        }
        self.require("is_strongly_nondegenerate", |_| true)?;
        let levi = self.levi_at_0()?;
        let nij = self.nijenhuis_at_0()?;
        let witness = strong_kernel(&levi.matrix, &nij.nw[0]);
        let levi_nondegenerate = levi.is_nondegenerate();
        Ok(StrongReport {
            levi_nondegenerate,
            strong: levi_nondegenerate && witness.is_none(),
            kernel_witness: witness,
        })
    }

    /// Real-linear coordinate change z = A z′ + v u′, u = λ u′ (d = 1).
    pub fn linear_frame_change(&self, a: &[Vec<Complex<R>>], lambda: &R, v: &[Complex<R>]) -> Result<Self> {
        let (n, d) = (self.n(), self.d());
        if d != 1 {
            return Err(CrError::Unsupported("linear_frame_change needs d = 1".into()));
        }
        if a.len() != n || a.iter().any(|r| r.len() != n) || v.len() != n {
            return Err(CrError::Shape("frame change dimensions do not match n".into()));
        }
        if lambda.is_zero() {
            return Err(CrError::Singular("λ must be nonzero".into()));
        }
        let ainv = invert_dense(a).ok_or_else(|| CrError::Singular("frame matrix A is singular".into()))?;
        let vars = self.vars;
        let w = self.weight as i32;
        let big = i32::MAX / 4;
        let inv_l = Complex::new(R::one() / lambda.clone(), R::zero());
        let lw_l = self.lw.scale(&inv_l);
        let cst = |m: &[Vec<Complex<R>>]| SeriesMatrix::from_constants(vars, big, m);
        let col = |x: &[Complex<R>]| {
            let m: Vec<Vec<Complex<R>>> = x.iter().map(|c| vec![c.clone()]).collect();
            SeriesMatrix::from_constants(vars, big, &m)
        };
        let ainv_s = cst(&ainv);
        // dz′ = A⁻¹(dz − v du/λ) on H^{1,0}.
        let ae = ainv_s.sub(&ainv_s.mul(&col(v))?.mul(&lw_l)?)?;
        let ae_inv = ae.inverse()?;
        let new_lw = lw_l.mul(&ae_inv)?;
        let abar_inv = cst(&ainv.iter().map(|r| r.iter().map(|c| c.conj()).collect()).collect::<Vec<_>>());
        let vbar: Vec<Complex<R>> = v.iter().map(|c| c.conj()).collect();
        let new_lzb = abar_inv.mul(&self.lzbar.sub(&col(&vbar).mul(&lw_l)?)?)?.mul(&ae_inv)?;
        // Express in the new coordinates.
        let mut subst = Vec::with_capacity(vars.count());
        for i in 0..n {
            let mut s = Series::var(vars, big, Var::U(0)).scale(&v[i]);
            for j in 0..n {
                s = s.add(&Series::var(vars, big, Var::Z(j)).scale(&a[i][j]));
            }
            subst.push(s);
        }
        for i in 0..n {
            subst.push(subst[i].conjugate());
        }
        subst.push(Series::var(vars, big, Var::U(0)).scale_real(lambda));
        let sub = |m: &SeriesMatrix<R>, b: i32| -> Result<SeriesMatrix<R>> {
            let e: Result<Vec<_>> = m.entries().iter().map(|x| compose(x, &subst).map(|y| y.truncate(b))).collect();
            SeriesMatrix::from_entries(m.rows(), m.cols(), e?)
        };
        Self::new(self.weight, sub(&new_lzb, w - 2)?, sub(&new_lw, w - 1)?)
    }

    /// Rebuilds an integrable structure from its Euler restriction using
    /// (E + 1)L_k = ∂_{z_k}L̃ − Σ_j z_j P_jk, where P collects the
    /// L-dependent terms of the bracket [X_j, X_k].
    pub fn from_euler_integrable(lt_zbar: &[Series<R>], lt_w: &[Series<R>], weight: u32) -> Result<Self> {
        let vars = lt_w
            .first()
            .map(|s| s.vars())
            .ok_or_else(|| CrError::Shape("empty Euler restriction".into()))?;
        let (n, d) = (vars.n, vars.d);
        if lt_zbar.len() != n || lt_w.len() != d {
            return Err(CrError::Shape("Euler restriction has the wrong number of rows".into()));
        }
        let w = weight as i32;
        let lt: Vec<Series<R>> =
            lt_zbar.iter().map(|s| s.truncate(w - 1)).chain(lt_w.iter().map(|s| s.truncate(w))).collect();
        let mut cur = Self::flat(vars, weight);
        for _ in 0..(2 * weight + 4) {
            let cols: Vec<Vec<Series<R>>> = (0..n).map(|k| cur.column(k)).collect();
            let mut lzb = Vec::with_capacity(n * n);
            let mut lww = Vec::with_capacity(d * n);
            let mut rows: Vec<Vec<Series<R>>> = vec![Vec::new(); n + d];
            for (r, row) in rows.iter_mut().enumerate() {
                for k in 0..n {
                    let mut rhs = lt[r].deriv(Var::Z(k));
                    for j in 0..n {
                        if j == k {
                            continue;
                        }
                        let p = cur.field_tail(j, &cols[k][r]).sub(&cur.field_tail(k, &cols[j][r]));
                        rhs = rhs.sub(&p.mul(&Series::var(vars, i32::MAX / 4, Var::Z(j))));
                    }
                    let lk = rhs.map_coeffs(|m, c| {
                        let f = R::from_i64(m.zdeg() as i64 + 1);
                        Complex::new(c.re.clone() / f.clone(), c.im.clone() / f)
                    });
                    row.push(lk);
                }
            }
            for (r, row) in rows.into_iter().enumerate() {
                if r < n {
                    lzb.extend(row.into_iter().map(|s| s.truncate(w - 2)));
                } else {
                    lww.extend(row.into_iter().map(|s| s.truncate(w - 1)));
                }
            }
            let next = AlmostCR {
                vars,
                weight,
                lzbar: SeriesMatrix::from_entries(n, n, lzb)?,
                lw: SeriesMatrix::from_entries(d, n, lww)?,
            };
            let lzb_ok = next.lzbar.bound() >= w - 2 && next.lw.bound() >= w - 1;
            if !lzb_ok {
                return Err(CrError::Internal("Euler reconstruction lost precision".into()));
            }
            if next == cur {
                return Ok(next);
            }
            cur = next;
        }
        Err(CrError::Internal("Euler reconstruction did not converge".into()))
    }

    /// X_j(F) − ∂_{z_j}F.
    fn field_tail(&self, j: usize, f: &Series<R>) -> Series<R> {
        let mut out = Series::zero(self.vars, i32::MAX / 4);
        for i in 0..self.n() {
            out = out.add(&self.lzbar.get(i, j).mul(&f.deriv(Var::Zb(i))));
        }
        for l in 0..self.d() {
            out = out.add(&self.lw.get(l, j).mul(&f.deriv(Var::U(l))));
        }
        out
    }
}

/// Kernel of ξ ↦ (6i Σ_j M_jk ξ̄_j + Σ_j N_jk ξ_j)_k as a real-linear map;
/// returns the vector from the first free real coordinate, if any.
pub fn strong_kernel<R: Scalar>(levi: &[Vec<Complex<R>>], nw: &[Vec<Complex<R>>]) -> Option<Vec<Complex<R>>> {
    let n = levi.len();
    let six_i = Complex::new(R::zero(), R::from_i64(6));
    // Unknowns (x_1, y_1, …, x_n, y_n) with ξ_j = x_j + i y_j.
    let mut rows: Vec<Vec<R>> = Vec::new();
    for k in 0..n {
        let mut re = vec![R::zero(); 2 * n];
        let mut im = vec![R::zero(); 2 * n];
        for j in 0..n {
            let a = six_i.clone() * levi[j][k].clone(); // multiplies ξ̄_j = x − iy
            let b = nw[j][k].clone(); // multiplies ξ_j = x + iy
            let cx = a.clone() + b.clone();
            let cy = (b - a) * Complex::new(R::zero(), R::one());
            re[2 * j] = cx.re.clone();
            im[2 * j] = cx.im;
            re[2 * j + 1] = cy.re.clone();
            im[2 * j + 1] = cy.im;
        }
        rows.push(re);
        rows.push(im);
    }
    let ker = kernel(&rows, 2 * n);
    ker.into_iter().next().map(|v| (0..n).map(|j| Complex::new(v[2 * j].clone(), v[2 * j + 1].clone())).collect())
}
