//! Formal coordinate changes z′ = z + f, u′ = u + g and the pushforward of
//! structures through them.

use crate::error::{CrError, Result};
use crate::scalar::{cfrac, Scalar};
use crate::series::{compose, Mono, TaylorShift, Series, SeriesMatrix, Var, Vars};
use crate::structure::AlmostCR;

/// h = id + (f, g); f complex (n components), g real (d components).
#[derive(Clone, PartialEq, Debug)]
pub struct Transform<R: Scalar> {
    vars: Vars,
    f: Vec<Series<R>>,
    g: Vec<Series<R>>,
}

impl<R: Scalar> Transform<R> {
    /// Checks shapes, reality of g, and the absence of constant and linear terms.
    pub fn new(f: Vec<Series<R>>, g: Vec<Series<R>>) -> Result<Self> {
        let vars = f
            .first()
            .or(g.first())
            .map(|s| s.vars())
            .ok_or_else(|| CrError::Shape("empty transform".into()))?;
        if f.len() != vars.n || g.len() != vars.d {
            return Err(CrError::Shape(format!(
                "transform has {} f and {} g components, expected {} and {}",
                f.len(),
                g.len(),
                vars.n,
                vars.d
            )));
        }
        for (k, s) in f.iter().chain(&g).enumerate() {
            if s.vars() != vars {
                return Err(CrError::Shape("transform components over different variable sets".into()));
            }
            s.require_no_low_terms(&format!("transform component {k}"))?;
        }
        for (k, s) in g.iter().enumerate() {
            s.require_real(&format!("g[{k}]"))?;
        }
        Ok(Transform { vars, f, g })
    }

    /// Polynomial components taken as exact (f to weight W − 1, g to W).
    pub fn from_polynomials(weight: u32, f: Vec<Series<R>>, g: Vec<Series<R>>) -> Result<Self> {
        let w = weight as i32;
        Self::new(
            f.iter().map(|s| s.assume_exact_to(w - 1)).collect(),
            g.iter().map(|s| s.assume_exact_to(w)).collect(),
        )
    }

    pub fn identity(vars: Vars, weight: u32) -> Self {
        let w = weight as i32;
        Transform {
            vars,
            f: (0..vars.n).map(|_| Series::zero(vars, w - 1)).collect(),
            g: (0..vars.d).map(|_| Series::zero(vars, w)).collect(),
        }
    }

    pub fn vars(&self) -> Vars {
        self.vars
    }

    pub fn f(&self) -> &[Series<R>] {
        &self.f
    }

    pub fn g(&self) -> &[Series<R>] {
        &self.g
    }

    pub fn is_identity(&self) -> bool {
        self.f.iter().chain(&self.g).all(|s| s.is_zero())
    }

    /// Lowest bound over f + 1 and g, i.e. the weight the transform is good for.
    pub fn weight(&self) -> i32 {
        let fw = self.f.iter().map(|s| s.bound() + 1).min().unwrap_or(i32::MAX);
        let gw = self.g.iter().map(|s| s.bound()).min().unwrap_or(i32::MAX);
        fw.min(gw)
    }

    pub fn truncate(&self, weight: u32) -> Self {
        let w = weight as i32;
        Transform {
            vars: self.vars,
            f: self.f.iter().map(|s| s.truncate(w - 1)).collect(),
            g: self.g.iter().map(|s| s.truncate(w)).collect(),
        }
    }

    /// (f, f̄, g) indexed like the variables.
    pub fn delta(&self) -> Vec<Series<R>> {
        let mut out = self.f.clone();
        out.extend(self.f.iter().map(|s| s.conjugate()));
        out.extend(self.g.iter().cloned());
        out
    }

    /// The map h itself as one series per variable.
    pub fn as_map(&self) -> Vec<Series<R>> {
        self.delta()
            .into_iter()
            .enumerate()
            .map(|(i, d)| d.add(&Series::var(self.vars, d.bound(), self.vars.var(i))))
            .collect()
    }

    /// Components of weight exactly `w` (f) and `w + 1` (g): the part of
    /// order w − 1 in the grading used by the normalization.
    pub fn order_part(&self, rho: u32) -> Transform<R> {
        Transform {
            vars: self.vars,
            f: self.f.iter().map(|s| s.weight_component(rho + 1)).collect(),
            g: self.g.iter().map(|s| s.weight_component(rho + 2)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Transform {
            vars: self.vars,
            f: self.f.iter().zip(&other.f).map(|(a, b)| a.add(b)).collect(),
            g: self.g.iter().zip(&other.g).map(|(a, b)| a.add(b)).collect(),
        }
    }

    /// Same components with bounds raised or lowered (components are kept).
    pub(crate) fn with_bounds(&self, weight: u32) -> Self {
        let w = weight as i32;
        Transform {
            vars: self.vars,
            f: self.f.iter().map(|s| s.assume_exact_to(w - 1)).collect(),
            g: self.g.iter().map(|s| s.assume_exact_to(w)).collect(),
        }
    }
}

/// (id + t2) ∘ (id + t1).
pub fn compose_transforms<R: Scalar>(t1: &Transform<R>, t2: &Transform<R>) -> Result<Transform<R>> {
    if t1.vars != t2.vars {
        return Err(CrError::Shape("transforms over different variable sets".into()));
    }
    let eps = t1.delta();
    let cap = t2.f.iter().chain(&t2.g).map(|s| s.bound()).max().unwrap_or(0);
    let mut sh = TaylorShift::new(&eps, cap);
    let f = t1.f.iter().zip(&t2.f).map(|(a, b)| a.add(&sh.apply(b))).collect();
    let g = t1.g.iter().zip(&t2.g).map(|(a, b)| a.add(&sh.apply(b)).real_part()).collect();
    Ok(Transform { vars: t1.vars, f, g })
}

pub fn euler_restrict<R: Scalar>(s: &AlmostCR<R>) -> (Vec<Series<R>>, Vec<Series<R>>) {
    s.euler_restrict()
}

/// Whether the Euler restrictions agree up to the lower of the two weights.
pub fn euler_coincide<R: Scalar>(s1: &AlmostCR<R>, s2: &AlmostCR<R>) -> bool {
    if s1.vars() != s2.vars() {
        return false;
    }
    let w = s1.weight().min(s2.weight()) as i32;
    let (a1, b1) = s1.euler_restrict();
    let (a2, b2) = s2.euler_restrict();
    a1.iter().zip(&a2).all(|(x, y)| x.eq_upto(y, w - 1)) && b1.iter().zip(&b2).all(|(x, y)| x.eq_upto(y, w))
}

/// The structure L′ in the new coordinates of h = id + (f, g).
///
/// The weight-2 part g₂(z, z̄) of g is split off first, h = R ∘ S with
/// S = (z, u + g₂), whose inverse is explicit; R then moves every variable
/// by terms of strictly higher weight and is handled by a fixed point.
pub fn pushforward<R: Scalar>(s: &AlmostCR<R>, t: &Transform<R>) -> Result<AlmostCR<R>> {
    let vars = s.vars();
    if t.vars != vars {
        return Err(CrError::Shape("structure and transform over different variable sets".into()));
    }
    let w = s.weight();
    if t.weight() < w as i32 {
        return Err(CrError::Shape(format!("transform known to weight {}, structure needs {w}", t.weight())));
    }
    let t = t.truncate(w);
    let g2: Vec<Series<R>> = t.g.iter().map(|g| g.weight_component(2)).collect();
    if g2.iter().all(|x| x.is_zero()) {
        return push_general(s, &t);
    }
    let s1 = push_quadratic(s, &g2)?;
    let sinv = quadratic_inverse(vars, &g2);
    let f = t.f.iter().map(|x| compose(x, &sinv).map(|y| y.truncate(w as i32 - 1))).collect::<Result<Vec<_>>>()?;
    let g = t
        .g
        .iter()
        .zip(&g2)
        .map(|(x, q)| compose(x, &sinv).map(|y| y.sub(q).truncate(w as i32)))
        .collect::<Result<Vec<_>>>()?;
    push_general(&s1, &Transform { vars, f, g })
}

/// Substitution list of S⁻¹ = (z, z̄, u − g₂).
fn quadratic_inverse<R: Scalar>(vars: Vars, g2: &[Series<R>]) -> Vec<Series<R>> {
    let big = i32::MAX / 4;
    (0..vars.count())
        .map(|i| {
            let v = vars.var(i);
            let x = Series::var(vars, big, v);
            match v {
                Var::U(k) => x.sub(&g2[k].assume_exact_to(big)),
                _ => x,
            }
        })
        .collect()
}

fn push_quadratic<R: Scalar>(s: &AlmostCR<R>, g2: &[Series<R>]) -> Result<AlmostCR<R>> {
    let vars = s.vars();
    let (n, d) = (vars.n, vars.d);
    let w = s.weight() as i32;
    let lzb = s.lzbar();
    let lw = s.lw();
    let mw = SeriesMatrix::from_fn(d, n, |l, k| {
        let mut e = g2[l].deriv(Var::Z(k)).add(lw.get(l, k));
        for j in 0..n {
            e = e.add(&g2[l].deriv(Var::Zb(j)).mul(lzb.get(j, k)));
        }
        e
    });
    let sinv = quadratic_inverse(vars, g2);
    let sub = |m: &SeriesMatrix<R>, b: i32| -> Result<SeriesMatrix<R>> {
        let e: Result<Vec<_>> = m.entries().iter().map(|x| compose(x, &sinv).map(|y| y.truncate(b))).collect();
        SeriesMatrix::from_entries(m.rows(), m.cols(), e?)
    };
    AlmostCR::new(s.weight(), sub(lzb, w - 2)?, sub(&mw, w - 1)?)
}

/// Pushforward for transforms whose components all have weight above their
/// variable's weight.
fn push_general<R: Scalar>(s: &AlmostCR<R>, t: &Transform<R>) -> Result<AlmostCR<R>> {
    let vars = s.vars();
    let (n, d) = (vars.n, vars.d);
    let w = s.weight() as i32;
    if t.is_identity() {
        return Ok(s.clone());
    }
    let lzb = s.lzbar();
    let lw = s.lw();
    // D(F) = F_z + F_z̄ L^z̄ + F_u L^w, column k.
    let d_op = |fun: &Series<R>, k: usize| -> Series<R> {
        let mut e = fun.deriv(Var::Z(k));
        for j in 0..n {
            let dz = fun.deriv(Var::Zb(j));
            if !dz.is_zero() {
                e = e.add(&dz.mul(lzb.get(j, k)));
            }
        }
        for l in 0..d {
            let du = fun.deriv(Var::U(l));
            if !du.is_zero() {
                e = e.add(&du.mul(lw.get(l, k)));
            }
        }
        e
    };
    let fbar: Vec<Series<R>> = t.f.iter().map(|x| x.conjugate()).collect();
    let a = SeriesMatrix::from_fn(n, n, |i, k| {
        let e = d_op(&t.f[i], k);
        if i == k {
            e.add(&Series::one(vars, e.bound()))
        } else {
            e
        }
    });
    let bw = SeriesMatrix::from_fn(d, n, |l, k| d_op(&t.g[l], k).add(lw.get(l, k)));
    let bzb = SeriesMatrix::from_fn(n, n, |i, k| d_op(&fbar[i], k).add(lzb.get(i, k)));
    let ainv = a.inverse()?;
    let mw = bw.mul(&ainv)?.truncate(w - 1);
    let mzb = bzb.mul(&ainv)?.truncate(w - 2);
    if mw.bound() < w - 1 || mzb.bound() < w - 2 {
        return Err(CrError::Internal(format!(
            "pushforward lost precision: bounds {} / {}",
            mzb.bound(),
            mw.bound()
        )));
    }
    // L′(x + δ(x)) = M(x), solved as L′ = M − (S − I)L′ with S the (linear)
    // shift by δ, summed as a series of differences Δ_{k+1} = −(S − I)Δ_k
    // whose orders increase.
    let delta = t.delta();
    let target: Vec<Series<R>> = mzb.entries().iter().chain(mw.entries()).cloned().collect();
    let mut total = target.clone();
    let mut diff = target.clone();
    let max_iter = 2 * w as usize + 4;
    let mut shifter = TaylorShift::new(&delta, w);
    for _ in 0..max_iter {
        diff = diff
            .iter()
            .zip(&target)
            .map(|(c, m)| {
                if c.is_zero() {
                    return c.clone();
                }
                c.sub(&shifter.apply(c)).truncate(m.bound())
            })
            .collect();
        for ((x, dx), m) in total.iter_mut().zip(&diff).zip(&target) {
            *x = x.add(dx);
            if x.bound() < m.bound() {
                return Err(CrError::Internal("pushforward fixed point lost precision".into()));
            }
        }
        if diff.iter().all(|x| x.is_zero()) {
            let (zb, ww) = total.split_at(n * n);
            return AlmostCR::new(
                s.weight(),
                SeriesMatrix::from_entries(n, n, zb.to_vec())?,
                SeriesMatrix::from_entries(d, n, ww.to_vec())?,
            );
        }
    }
    Err(CrError::Internal("pushforward fixed point did not converge".into()))
}

/// The quadratic transform achieving the first-order normalization:
/// L^z̄_z̄ = 0, L^w_z̄ antihermitian, L^z̄_z and L^w_z antisymmetric.
pub fn first_order_transform<R: Scalar>(s: &AlmostCR<R>) -> Transform<R> {
    let vars = s.vars();
    let (n, d) = (vars.n, vars.d);
    let w = s.weight();
    let big = i32::MAX / 4;
    let lin = |e: &Series<R>, v: Var| e.coeff(&Mono::var(vars, v));
    let zz = |j: usize, k: usize| Mono::var(vars, Var::Z(j)).mul(Mono::var(vars, Var::Z(k)));
    let zbz = |j: usize, k: usize| Mono::var(vars, Var::Zb(j)).mul(Mono::var(vars, Var::Z(k)));
    let half = cfrac::<R>(1, 2);
    let mut f = Vec::with_capacity(n);
    for i in 0..n {
        let mut terms = Vec::new();
        for j in 0..n {
            for k in 0..n {
                // Kills the z̄_j coefficient of L^z̄_{ik}.
                let b = lin(s.lzbar().get(i, k), Var::Zb(j));
                terms.push((zbz(k, j), -b.conj()));
            }
        }
        // Symmetric part of L^z̄_z through the pure z̄² part of f.
        let mut p = Vec::new();
        for j in 0..n {
            for k in 0..n {
                let c = lin(s.lzbar().get(i, k), Var::Z(j));
                p.push((zz(j, k), -(c * half.clone())));
            }
        }
        let p = Series::from_terms(vars, big, p).conjugate();
        f.push(Series::from_terms(vars, big, terms).add(&p));
    }
    let mut g = Vec::with_capacity(d);
    for l in 0..d {
        let mut gz = Vec::new();
        let mut herm = Vec::new();
        for j in 0..n {
            for k in 0..n {
                gz.push((zz(j, k), -(lin(s.lw().get(l, k), Var::Z(j)) * half.clone())));
                herm.push((zbz(j, k), lin(s.lw().get(l, k), Var::Zb(j))));
            }
        }
        let gz = Series::from_terms(vars, big, gz);
        let herm = Series::from_terms(vars, big, herm).real_part();
        g.push(gz.add(&gz.conjugate()).sub(&herm));
    }
    Transform { vars, f, g }.with_bounds(w)
}

pub fn normalize_first_order<R: Scalar>(s: &AlmostCR<R>) -> Result<(Transform<R>, AlmostCR<R>)> {
    let t = first_order_transform(s);
    let out = pushforward(s, &t)?;
    Ok((t, out))
}
