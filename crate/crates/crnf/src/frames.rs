//! Adapted frames, 2-jets of transversal curves modulo H₀, and the
//! frame-pinned normalization.
//!
//! Real tangent vectors at 0 are stored as (Re z₁, …, Re zₙ, Im z₁, …,
//! Im zₙ, u₁, …, u_d); H₀ is the span of the first 2n coordinates.

use num_complex::Complex;

use crate::error::{CrError, Result};
use crate::linalg::{hermitian_congruence, invert_dense};
use crate::normalize::{levi_hermitian, normalize, FreeParameters, Mode, NormalFormResult, Options};
use crate::scalar::Scalar;
use crate::structure::{AlmostCR, LeviData};
use crate::transform::Transform;

/// Basis v₁, …, vₙ of H₀ (complex n-vectors) and a transversal real vector.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedFrame<R: Scalar> {
    pub v: Vec<Vec<Complex<R>>>,
    pub vtrans: Vec<R>,
}

/// An adapted frame with the second derivative of a curve γ, γ′(0) = vtrans.
/// Equality compares jet2 modulo H₀.
#[derive(Clone, Debug)]
pub struct ExtendedFrame<R: Scalar> {
    pub frame: AdaptedFrame<R>,
    pub jet2: Vec<R>,
}

impl<R: Scalar> PartialEq for ExtendedFrame<R> {
    fn eq(&self, other: &Self) -> bool {
        self.frame == other.frame && h_equivalent(&self.jet2, &other.jet2, self.frame.v.len())
    }
}

/// The linear map (z, u) ↦ (A z + b u, λ u) for d = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearMap<R: Scalar> {
    pub a: Vec<Vec<Complex<R>>>,
    pub b: Vec<Complex<R>>,
    pub lambda: R,
}

/// What a frame can be transported along.
#[derive(Clone, Debug)]
pub enum FrameMotion<'a, R: Scalar> {
    Transform(&'a Transform<R>),
    Linear(&'a LinearMap<R>),
}

fn split<R: Scalar>(x: &[R], n: usize) -> (Vec<Complex<R>>, Vec<R>) {
    let z = (0..n).map(|j| Complex::new(x[j].clone(), x[n + j].clone())).collect();
    (z, x[2 * n..].to_vec())
}

fn join<R: Scalar>(z: &[Complex<R>], u: &[R]) -> Vec<R> {
    let mut out: Vec<R> = z.iter().map(|c| c.re.clone()).collect();
    out.extend(z.iter().map(|c| c.im.clone()));
    out.extend(u.iter().cloned());
    out
}

impl<R: Scalar> AdaptedFrame<R> {
    /// e₁, …, eₙ and ∂/∂u₁.
    pub fn standard(n: usize, d: usize) -> Self {
        let v = (0..n)
            .map(|j| (0..n).map(|i| if i == j { Complex::new(R::one(), R::zero()) } else { Complex::new(R::zero(), R::zero()) }).collect())
            .collect();
        let mut vtrans = vec![R::zero(); 2 * n + d];
        vtrans[2 * n] = R::one();
        AdaptedFrame { v, vtrans }
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn is_standard(&self) -> bool {
        let n = self.n();
        *self == Self::standard(n, self.vtrans.len() - 2 * n)
    }

    fn validate(&self) -> Result<()> {
        let n = self.n();
        if self.v.iter().any(|x| x.len() != n) || self.vtrans.len() != 2 * n + 1 {
            return Err(CrError::Shape(format!("frame needs {n} vectors in ℂ^{n} and a vector in ℝ^{}", 2 * n + 1)));
        }
        Ok(())
    }
}

impl<R: Scalar> ExtendedFrame<R> {
    pub fn standard(n: usize, d: usize) -> Self {
        ExtendedFrame { frame: AdaptedFrame::standard(n, d), jet2: vec![R::zero(); 2 * n + d] }
    }
}

/// v_j* M v_k = ε_j δ_jk λ with λ the u-component of vtrans (nonzero), and
/// ε_j = −1 exactly for j ≤ the signature.
pub fn check_adapted<R: Scalar>(fr: &AdaptedFrame<R>, levi: &LeviData<R>) -> bool {
    let n = fr.n();
    if fr.validate().is_err() || levi.matrix.len() != n {
        return false;
    }
    let lambda = fr.vtrans[2 * n].clone();
    if lambda.is_zero() {
        return false;
    }
    let m = &levi.matrix;
    for j in 0..n {
        for k in 0..n {
            let mut acc = Complex::new(R::zero(), R::zero());
            for p in 0..n {
                for q in 0..n {
                    acc = acc + fr.v[j][p].conj() * m[p][q].clone() * fr.v[k][q].clone();
                }
            }
            let want = if j != k {
                R::zero()
            } else if j < levi.signature {
                -lambda.clone()
            } else {
                lambda.clone()
            };
            if acc != Complex::new(want, R::zero()) {
                return false;
            }
        }
    }
    true
}

/// Whether j1 − j2 lies in H₀ (all u-components agree).
pub fn h_equivalent<R: Scalar>(j1: &[R], j2: &[R], n: usize) -> bool {
    j1.len() == j2.len() && j1[2 * n..] == j2[2 * n..]
}

/// Pushes the frame by the differential at 0 and jet2 by the second-order
/// chain rule.
pub fn transport_frame<R: Scalar>(ef: &ExtendedFrame<R>, motion: FrameMotion<'_, R>) -> Result<ExtendedFrame<R>> {
    let n = ef.frame.n();
    match motion {
        FrameMotion::Transform(t) => {
            let vars = t.vars();
            if vars.n != n || ef.jet2.len() != 2 * n + vars.d || ef.frame.vtrans.len() != 2 * n + vars.d {
                return Err(CrError::Shape("frame and transform dimensions differ".into()));
            }
            // dt(0) = id; (t∘γ)″(0) = γ″(0) + 2 Q(γ′(0)) with Q the quadratic part.
            let (z, u) = split(&ef.frame.vtrans, n);
            let mut point: Vec<Complex<R>> = z.clone();
            point.extend(z.iter().map(|c| c.conj()));
            point.extend(u.iter().map(|x| Complex::new(x.clone(), R::zero())));
            let eval_q = |s: &crate::series::Series<R>| -> Complex<R> {
                let mut acc = Complex::new(R::zero(), R::zero());
                for (m, c) in s.terms() {
                    if m.degree(vars) != 2 {
                        continue;
                    }
                    let mut term = c.clone();
                    for (v, e) in m.factors(vars) {
                        for _ in 0..e {
                            term = term * point[vars.index(v)].clone();
                        }
                    }
                    acc = acc + term;
                }
                acc
            };
            let two = R::from_i64(2);
            let (jz, ju) = split(&ef.jet2, n);
            let jz: Vec<Complex<R>> =
                jz.iter().zip(t.f()).map(|(j, f)| j.clone() + eval_q(f) * Complex::new(two.clone(), R::zero())).collect();
            let ju: Vec<R> = ju.iter().zip(t.g()).map(|(j, g)| j.clone() + eval_q(g).re * two.clone()).collect();
            Ok(ExtendedFrame { frame: ef.frame.clone(), jet2: join(&jz, &ju) })
        }
        FrameMotion::Linear(lm) => {
            ef.frame.validate()?;
            if lm.a.len() != n || lm.b.len() != n || ef.jet2.len() != 2 * n + 1 {
                return Err(CrError::Shape("linear map dimensions differ from the frame".into()));
            }
            let apply_c = |z: &[Complex<R>], u: &R| -> Vec<Complex<R>> {
                (0..n)
                    .map(|i| {
                        let mut acc = lm.b[i].clone() * Complex::new(u.clone(), R::zero());
                        for k in 0..n {
                            acc = acc + lm.a[i][k].clone() * z[k].clone();
                        }
                        acc
                    })
                    .collect()
            };
            let zero = R::zero();
            let v = ef.frame.v.iter().map(|x| apply_c(x, &zero)).collect();
            let map_real = |x: &[R]| -> Vec<R> {
                let (z, u) = split(x, n);
                join(&apply_c(&z, &u[0]), &[u[0].clone() * lm.lambda.clone()])
            };
            Ok(ExtendedFrame {
                frame: AdaptedFrame { v, vtrans: map_real(&ef.frame.vtrans) },
                jet2: map_real(&ef.jet2),
            })
        }
    }
}

/// r = g_{u²}(0) taking the standard frame's jet class to that of (0, t):
/// the u-component of jet2 changes by r under such a transform.
pub fn r_from_frame<R: Scalar>(ef: &ExtendedFrame<R>) -> Result<R> {
    if !ef.frame.is_standard() {
        return Err(CrError::Precondition("r_from_frame needs the standard adapted frame".into()));
    }
    let n = ef.frame.n();
    if ef.jet2.len() != 2 * n + 1 {
        return Err(CrError::Shape("jet2 has the wrong length".into()));
    }
    Ok(-ef.jet2[2 * n].clone())
}

/// The linear map sending the standard frame to `fr`.
pub fn frame_map<R: Scalar>(fr: &AdaptedFrame<R>) -> Result<LinearMap<R>> {
    fr.validate()?;
    let n = fr.n();
    let a = (0..n).map(|i| (0..n).map(|j| fr.v[j][i].clone()).collect()).collect();
    let (b, u) = split(&fr.vtrans, n);
    Ok(LinearMap { a, b, lambda: u[0].clone() })
}

/// (A z + b u, λ u)⁻¹ = (A⁻¹ z − A⁻¹ b u / λ, u / λ).
pub fn invert_linear<R: Scalar>(lm: &LinearMap<R>) -> Result<LinearMap<R>> {
    if lm.lambda.is_zero() {
        return Err(CrError::Singular("λ = 0".into()));
    }
    let ainv = invert_dense(&lm.a).ok_or_else(|| CrError::Singular("A is singular".into()))?;
    let il = R::one() / lm.lambda.clone();
    let b = (0..lm.b.len())
        .map(|i| {
            let mut acc = Complex::new(R::zero(), R::zero());
            for k in 0..lm.b.len() {
                acc = acc + ainv[i][k].clone() * lm.b[k].clone();
            }
            -(acc * Complex::new(il.clone(), R::zero()))
        })
        .collect();
    Ok(LinearMap { a: ainv, b, lambda: il })
}

/// The structure in the coordinates where `fr` becomes the standard frame.
pub fn realize_frame<R: Scalar>(s: &AlmostCR<R>, fr: &AdaptedFrame<R>) -> Result<AlmostCR<R>> {
    let lm = frame_map(fr)?;
    s.linear_frame_change(&lm.a, &lm.lambda, &lm.b)
}

/// Levi data of s from the hermitian part of L^w_z̄ at 0.
pub fn levi_data<R: Scalar>(s: &AlmostCR<R>) -> Result<LeviData<R>> {
    let matrix = levi_hermitian(s)?;
    let congruence = hermitian_congruence(&matrix);
    Ok(LeviData { signature: congruence.negatives, rank: congruence.rank, matrix, congruence })
}

pub fn normalize_with_frame<R: Scalar>(
    s: &AlmostCR<R>,
    ef: &ExtendedFrame<R>,
    mode: Mode,
) -> Result<NormalFormResult<R>> {
    normalize_with_frame_opts(s, ef, mode, &Options::default())
}

/// Realizes ef as the standard frame, reads r off the transported jet and
/// runs the full pipeline of `mode`.
pub fn normalize_with_frame_opts<R: Scalar>(
    s: &AlmostCR<R>,
    ef: &ExtendedFrame<R>,
    mode: Mode,
    opts: &Options,
) -> Result<NormalFormResult<R>> {
    if !mode.is_full() {
        return Err(CrError::Precondition("frames pin the intrinsic and extrinsic normal forms only".into()));
    }
    if s.d() != 1 {
        return Err(CrError::Unsupported("frames need d = 1".into()));
    }
    let levi = levi_data(s)?;
    if !levi.is_nondegenerate() {
        return Err(CrError::LeviDegenerate);
    }
    if !check_adapted(&ef.frame, &levi) {
        return Err(CrError::Precondition("frame is not adapted to the Levi form".into()));
    }
    let lm = frame_map(&ef.frame)?;
    let s1 = s.linear_frame_change(&lm.a, &lm.lambda, &lm.b)?;
    let inv = invert_linear(&lm)?;
    let ef1 = transport_frame(ef, FrameMotion::Linear(&inv))?;
    let r = r_from_frame(&ef1)?;
    normalize(&s1, mode, &FreeParameters::with_r(s.vars(), r), opts)
}
