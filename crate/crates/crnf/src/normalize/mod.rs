//! Weight-by-weight normalization: partial and full (intrinsic) normal forms
//! of the structure map, and the quasi CR embedding with its Chern–Moser
//! type (extrinsic) normalization.
//!
//! After a quadratic step putting L^w_z̄ into antihermitian form, each
//! weight m = 3, …, W determines the weight-m part of g and the
//! weight-(m − 1) part of f by one exact square linear system whose rows are
//! the conditions of [`conditions::CondKind`] at weight m.

mod conditions;
mod linear;

use std::fmt;

use num_complex::Complex;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use conditions::CondKind;
use conditions::CondMap;
use linear::{Linearization, Slot};

use crate::error::{CrError, Result};
use crate::linalg::SparseSystem;
use crate::scalar::{creal, Scalar};
use crate::series::{compose, monomials_of_weight, Mono, Series, TraceForm, Var, Vars};
use crate::structure::{strong_kernel, AlmostCR};
use crate::transform::{compose_transforms, first_order_transform, pushforward, Transform};

/// Which normalization to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Partial,
    Intrinsic,
    Quasi,
    Extrinsic,
}

impl Mode {
    /// Full modes carry the trace conditions and need d = 1.
    pub fn is_full(self) -> bool {
        matches!(self, Mode::Intrinsic | Mode::Extrinsic)
    }

    /// Conditions are imposed on φ rather than on L̃^w / i.
    pub fn uses_phi(self) -> bool {
        matches!(self, Mode::Quasi | Mode::Extrinsic)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Partial => "partial",
            Mode::Intrinsic => "intrinsic",
            Mode::Quasi => "embed",
            Mode::Extrinsic => "extrinsic",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        match s {
            "partial" => Some(Mode::Partial),
            "intrinsic" => Some(Mode::Intrinsic),
            "embed" | "quasi" => Some(Mode::Quasi),
            "extrinsic" => Some(Mode::Extrinsic),
            _ => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Free data of the normalizations: f(z,0,u) = f0, g(0,0,u) = g0 for the
/// partial modes, g_{u²}(0) = r (coefficient r/2) for the full modes.
#[derive(Clone, Debug, PartialEq)]
pub struct FreeParameters<R: Scalar> {
    pub f0: Vec<Series<R>>,
    pub g0: Vec<Series<R>>,
    pub r: R,
}

impl<R: Scalar> FreeParameters<R> {
    pub fn zero(vars: Vars) -> Self {
        FreeParameters {
            f0: (0..vars.n).map(|_| Series::zero(vars, i32::MAX / 4)).collect(),
            g0: (0..vars.d).map(|_| Series::zero(vars, i32::MAX / 4)).collect(),
            r: R::zero(),
        }
    }

    pub fn with_r(vars: Vars, r: R) -> Self {
        FreeParameters { r, ..Self::zero(vars) }
    }

    pub fn validate(&self, vars: Vars) -> Result<()> {
        if self.f0.len() != vars.n || self.g0.len() != vars.d {
            return Err(CrError::Shape("f0 needs n and g0 needs d components".into()));
        }
        for (k, s) in self.f0.iter().chain(&self.g0).enumerate() {
            if s.vars() != vars {
                return Err(CrError::Shape("free parameters over a different variable set".into()));
            }
            s.require_no_low_terms(&format!("free parameter {k}"))?;
        }
        if self.f0.iter().any(|s| !s.is_free_of_zbar()) {
            return Err(CrError::Precondition("f0 must not depend on z̄".into()));
        }
        for s in &self.g0 {
            if s.terms().iter().any(|(m, _)| m.zdeg() + m.zbdeg(vars) > 0) {
                return Err(CrError::Precondition("g0 must depend on u only".into()));
            }
            s.require_real("g0")?;
        }
        Ok(())
    }

    /// The pure parts f(z,0,u), g(0,0,u) and g_{u²}(0) of a transform
    /// obtained by a normalization (the S0 shift u ↦ u − q(z) undone).
    pub fn from_transform(t: &Transform<R>) -> Self {
        let vars = t.vars();
        let f0 = t.f().iter().map(|s| s.filter(|m| m.zbdeg(vars) == 0)).collect();
        let g0: Vec<Series<R>> = t.g().iter().map(|s| s.filter(|m| m.zdeg() + m.zbdeg(vars) == 0)).collect();
        let r = if vars.d == 1 {
            let u2 = Mono::var(vars, Var::U(0)).mul(Mono::var(vars, Var::U(0)));
            t.g()[0].coeff(&u2).re * R::from_i64(2)
        } else {
            R::zero()
        };
        FreeParameters { f0, g0, r }
    }
}

/// One line of a residual report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidualEntry {
    pub condition: String,
    pub weight: u32,
    pub zero: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NormalFormResult<R: Scalar> {
    pub mode: Mode,
    pub transform: Transform<R>,
    pub structure_out: AlmostCR<R>,
    pub phi: Option<Vec<Series<R>>>,
    pub residual_report: Vec<ResidualEntry>,
    pub valid_weight: u32,
    /// Number of weight steps at which the superposition probe ran.
    pub affine_checks: usize,
}

impl<R: Scalar> NormalFormResult<R> {
    pub fn all_zero(&self) -> bool {
        self.residual_report.iter().all(|e| e.zero)
    }
}

/// Knobs that must not change the result.
#[derive(Clone, Debug)]
pub struct Options {
    /// Eliminate unknowns in a shuffled order.
    pub column_order_seed: Option<u64>,
    /// Run the superposition probe at every weight.
    pub affine_check: bool,
    pub probe_seed: u64,
}

impl Default for Options {
    fn default() -> Self {
        Options { column_order_seed: None, affine_check: true, probe_seed: 0x5eed }
    }
}

pub fn partial_normal_form<R: Scalar>(s: &AlmostCR<R>, params: &FreeParameters<R>) -> Result<NormalFormResult<R>> {
    normalize(s, Mode::Partial, params, &Options::default())
}

pub fn intrinsic_normal_form<R: Scalar>(s: &AlmostCR<R>, r: R) -> Result<NormalFormResult<R>> {
    normalize(s, Mode::Intrinsic, &FreeParameters::with_r(s.vars(), r), &Options::default())
}

pub fn quasi_embed<R: Scalar>(s: &AlmostCR<R>, params: &FreeParameters<R>) -> Result<NormalFormResult<R>> {
    normalize(s, Mode::Quasi, params, &Options::default())
}

pub fn extrinsic_normal_form<R: Scalar>(s: &AlmostCR<R>, r: R) -> Result<NormalFormResult<R>> {
    normalize(s, Mode::Extrinsic, &FreeParameters::with_r(s.vars(), r), &Options::default())
}

/// φ with E(φ) = −iL̃^w − φ_u·L̃^w and no terms free of z (the harmonic-free
/// graph function whose Euler restriction is `lt_w`).
pub fn phi_from_euler<R: Scalar>(lt_w: &[Series<R>]) -> Result<Vec<Series<R>>> {
    let Some(first) = lt_w.first() else {
        return Err(CrError::Shape("empty Euler restriction".into()));
    };
    let vars = first.vars();
    if lt_w.len() != vars.d {
        return Err(CrError::Shape("Euler restriction needs d rows".into()));
    }
    let bound = lt_w.iter().map(|s| s.bound()).min().unwrap();
    let base: Vec<Series<R>> = lt_w.iter().map(|s| s.mul_i().neg()).collect();
    let mut phi: Vec<Series<R>> = base.iter().map(|s| s.euler_inv()).collect();
    for _ in 0..(2 * bound.max(0) + 4) {
        let next: Vec<Series<R>> = base
            .iter()
            .zip(&phi)
            .map(|(b, p)| {
                let mut rhs = b.clone();
                for (k, lt) in lt_w.iter().enumerate() {
                    rhs = rhs.sub(&p.deriv(Var::U(k)).mul_full(lt).truncate(bound));
                }
                rhs.euler_inv()
            })
            .collect();
        if next == phi {
            return Ok(phi);
        }
        phi = next;
    }
    Err(CrError::Internal("φ recursion did not stabilize".into()))
}

/// The hermitian part of the Levi matrix of s (M_jk at z̄_j z_k), valid
/// before first-order normalization.
pub(crate) fn levi_hermitian<R: Scalar>(s: &AlmostCR<R>) -> Result<Vec<Vec<Complex<R>>>> {
    let m = s.levi_matrix()?;
    let n = m.len();
    let half = creal::<R>(R::one() / R::from_i64(2));
    Ok((0..n).map(|j| (0..n).map(|k| (m[j][k].clone() + m[k][j].conj()) * half.clone()).collect()).collect())
}

/// The target series: L̃^w / i, or φ.
fn target_series<R: Scalar>(s: &AlmostCR<R>, mode: Mode) -> Result<Vec<Series<R>>> {
    let (_, lt_w) = s.euler_restrict();
    if mode.uses_phi() {
        phi_from_euler(&lt_w)
    } else {
        Ok(lt_w.iter().map(|x| x.mul_i().neg()).collect())
    }
}

/// Evaluates every condition of `mode` on a structure (and φ, computed from
/// it when not given), weight by weight up to `weight`.
pub fn check_conditions<R: Scalar>(
    s: &AlmostCR<R>,
    phi: Option<&[Series<R>]>,
    mode: Mode,
    weight: u32,
) -> Result<Vec<ResidualEntry>> {
    let vars = s.vars();
    if mode.is_full() && vars.d != 1 {
        return Err(CrError::Unsupported(format!("{mode} conditions need d = 1")));
    }
    let trace = if mode.is_full() { Some(TraceForm::from_matrix(&levi_hermitian(s)?)?) } else { None };
    let (lt_zb, _) = s.euler_restrict();
    let t = match (mode.uses_phi(), phi) {
        (true, Some(p)) => p.to_vec(),
        _ => target_series(s, mode)?,
    };
    let weight = weight.min(s.weight());
    let mut report = Vec::new();
    for m in 2..=weight {
        let cm: CondMap<R> = CondMap::build(vars, m, mode, trace.as_ref());
        let zb: Vec<Series<R>> = lt_zb.iter().map(|x| x.weight_component(m - 1)).collect();
        let tm: Vec<Series<R>> = t.iter().map(|x| x.weight_component(m)).collect();
        let vals = cm.eval(&zb, &tm);
        for kind in CondKind::all() {
            let mut any = false;
            let mut zero = true;
            for (k, v) in cm.rows.iter().zip(&vals) {
                if *k == kind {
                    any = true;
                    zero &= v.is_zero();
                }
            }
            if any {
                report.push(ResidualEntry { condition: kind.label().to_string(), weight: m, zero });
            }
        }
        if mode.uses_phi() {
            let zero = tm.iter().all(|x| x.terms().iter().all(|(mo, _)| mo.zdeg() > 0 && mo.zbdeg(vars) > 0));
            report.push(ResidualEntry { condition: "phi_harmonic_free".into(), weight: m, zero });
        }
    }
    if mode.uses_phi() {
        let graph = AlmostCR::from_graph(&t, weight)?;
        let ok = crate::transform::euler_coincide(&s.truncate(weight), &graph);
        report.push(ResidualEntry { condition: "euler_coincidence".into(), weight, zero: ok });
    }
    Ok(report)
}

/// Re-evaluates the conditions of `mode` on a result's stored output.
pub fn verify_conditions<R: Scalar>(result: &NormalFormResult<R>, mode: Mode) -> Result<Vec<ResidualEntry>> {
    check_conditions(&result.structure_out, result.phi.as_deref(), mode, result.valid_weight)
}

/// Full-mode error for a singular weight system.
fn strong_failure<R: Scalar>(cur: &AlmostCR<R>, levi: &[Vec<Complex<R>>], weight: u32, nullity: usize) -> CrError {
    let vars = cur.vars();
    let nw: Vec<Vec<Complex<R>>> = (0..vars.n)
        .map(|j| {
            (0..vars.n)
                .map(|k| cur.lw().get(0, k).coeff(&Mono::var(vars, Var::Z(j))) * creal(R::from_i64(2)))
                .collect()
        })
        .collect();
    let witness = strong_kernel(levi, &nw)
        .map(|v| v.iter().map(|c| (c.re.to_frac_string(), c.im.to_frac_string())).collect())
        .unwrap_or_default();
    CrError::NotStronglyNondegenerate { weight, kernel_dim: nullity.max(1), witness }
}

/// Runs one normalization.
pub fn normalize<R: Scalar>(
    s: &AlmostCR<R>,
    mode: Mode,
    params: &FreeParameters<R>,
    opts: &Options,
) -> Result<NormalFormResult<R>> {
    let vars = s.vars();
    let w = s.weight();
    params.validate(vars)?;
    if mode.is_full() && vars.d != 1 {
        return Err(CrError::Unsupported(format!("{mode} normal form needs d = 1, got d = {}", vars.d)));
    }
    let big = i32::MAX / 4;
    let levi = if vars.d == 1 { Some(levi_hermitian(s)?) } else { None };
    let trace = if mode.is_full() {
        let l = levi.as_ref().unwrap();
        match TraceForm::from_matrix(l) {
            Ok(t) => Some(t),
            Err(CrError::Singular(_)) => return Err(CrError::LeviDegenerate),
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    // Quadratic step: only the g part of the first-order normalization.
    let fo = first_order_transform(s);
    let s0 = Transform::new((0..vars.n).map(|_| Series::zero(vars, big)).collect(), fo.g().to_vec())?.with_bounds(w);
    let mut cur = pushforward(s, &s0)?;
    let mut rest = Transform::identity(vars, w);

    // f0(z, u − q(z)) with q = g₂(z, 0).
    let f0_shifted: Vec<Series<R>> = if mode.is_full() {
        Vec::new()
    } else {
        let mut subst: Vec<Series<R>> = (0..vars.count()).map(|i| Series::var(vars, big, vars.var(i))).collect();
        for l in 0..vars.d {
            let q = s0.g()[l].filter(|m| m.zbdeg(vars) == 0).assume_exact_to(big);
            subst[2 * vars.n + l] = subst[2 * vars.n + l].sub(&q);
        }
        params
            .f0
            .iter()
            .map(|f| compose(&f.assume_exact_to(w as i32), &subst).map(|x| x.filter(|m| m.weight() < w)))
            .collect::<Result<_>>()?
    };

    let mut checks = 0;
    for m in 3..=w {
        let rho = m - 2;
        let cm: CondMap<R> = CondMap::build(vars, m, mode, trace.as_ref());
        let lin = Linearization::new(&cur, mode);
        let prior = rest.order_part(rho);

        // Unknowns and prescribed coefficients.
        let mut slots: Vec<Slot> = Vec::new();
        let mut pre_f: Vec<Vec<(Mono, Complex<R>)>> = vec![Vec::new(); vars.n];
        let mut pre_g: Vec<Vec<(Mono, Complex<R>)>> = vec![Vec::new(); vars.d];
        for mono in monomials_of_weight(vars, m) {
            let pure_u = mono.zdeg() + mono.zbdeg(vars) == 0;
            for l in 0..vars.d {
                if pure_u && !mode.is_full() {
                    let v = params.g0[l].coeff(&mono) - prior.g()[l].coeff(&mono);
                    pre_g[l].push((mono, v));
                    continue;
                }
                if pure_u && m == 4 {
                    let half = creal(params.r.clone() / R::from_i64(2));
                    pre_g[l].push((mono, half - prior.g()[l].coeff(&mono)));
                    continue;
                }
                let cj = mono.conj(vars);
                if cj == mono {
                    slots.push(Slot::GSelf { l, mono });
                } else if mono < cj {
                    slots.push(Slot::GPair { l, mono, im: false });
                    slots.push(Slot::GPair { l, mono, im: true });
                }
            }
        }
        for mono in monomials_of_weight(vars, m - 1) {
            if mono.degree(vars) == 1 {
                continue;
            }
            let pure = mono.zbdeg(vars) == 0;
            for i in 0..vars.n {
                if pure && !mode.is_full() {
                    let v = f0_shifted[i].coeff(&mono) - prior.f()[i].coeff(&mono);
                    pre_f[i].push((mono, v));
                    continue;
                }
                slots.push(Slot::F { i, mono, im: false });
                slots.push(Slot::F { i, mono, im: true });
            }
        }
        if slots.len() != cm.len() {
            return Err(CrError::Internal(format!(
                "weight {m}: {} conditions for {} unknowns",
                cm.len(),
                slots.len()
            )));
        }
        let pre = Transform::new(
            pre_f.into_iter().map(|t| Series::from_terms(vars, big, t)).collect(),
            pre_g.into_iter().map(|t| Series::from_terms(vars, big, t).real_part()).collect(),
        )?;

        // r0 = residual of cur plus the prescribed part's linear effect.
        let (lt_zb, _) = cur.euler_restrict();
        let t_cur = target_series(&cur, mode)?;
        let zb0: Vec<Series<R>> = lt_zb.iter().map(|x| x.weight_component(m - 1)).collect();
        let t0: Vec<Series<R>> = t_cur.iter().map(|x| x.weight_component(m)).collect();
        let mut r0 = cm.eval(&zb0, &t0);
        let (pzb, pt) = lin.apply(pre.f(), pre.g());
        for (r, v) in cm.apply(&pzb, &pt) {
            r0[r] = r0[r].clone() + v;
        }

        let mut sys: SparseSystem<R> = SparseSystem::new(slots.len());
        let mut rows: Vec<Vec<(usize, R)>> = vec![Vec::new(); cm.len()];
        let mut columns: Vec<Vec<(usize, R)>> = Vec::with_capacity(slots.len());
        for (j, slot) in slots.iter().enumerate() {
            let (df, dg) = slot.unit::<R>(vars);
            let (zb, t) = lin.apply(&df, &dg);
            let col = cm.apply(&zb, &t);
            for (r, v) in &col {
                rows[*r].push((j, v.clone()));
            }
            columns.push(col);
        }
        for (row, b) in rows.into_iter().zip(&r0) {
            sys.push_row(row, -b.clone());
        }

        let order: Option<Vec<usize>> = opts.column_order_seed.map(|seed| {
            let mut o: Vec<usize> = (0..slots.len()).collect();
            o.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ m as u64));
            o
        });
        let x = match sys.solve(order.as_deref()) {
            Ok(x) => x,
            Err(fail) if mode.is_full() => {
                return Err(strong_failure(&cur, levi.as_ref().unwrap(), m, fail.nullity));
            }
            Err(fail) => {
                return Err(CrError::Internal(format!(
                    "weight {m}: system singular (rank {}, nullity {})",
                    fail.rank, fail.nullity
                )))
            }
        };

        let build = |coef: &dyn Fn(usize) -> R| -> Result<Transform<R>> {
            let mut f: Vec<Series<R>> = pre.f().to_vec();
            let mut g: Vec<Series<R>> = pre.g().to_vec();
            for (j, slot) in slots.iter().enumerate() {
                let c = coef(j);
                if c.is_zero() {
                    continue;
                }
                let (df, dg) = slot.unit::<R>(vars);
                let cc = creal(c);
                for (a, b) in f.iter_mut().zip(&df) {
                    if !b.is_zero() {
                        *a = a.add(&b.scale(&cc));
                    }
                }
                for (a, b) in g.iter_mut().zip(&dg) {
                    if !b.is_zero() {
                        *a = a.add(&b.scale(&cc));
                    }
                }
            }
            Transform::new(f, g)
        };
        let tau = build(&|j| x[j].clone())?.with_bounds(w);

        if opts.affine_check {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.probe_seed ^ ((m as u64) << 32));
            let px: Vec<R> = (0..slots.len()).map(|_| R::from_i64(rng.gen_range(-2..=2))).collect();
            let py: Vec<R> = (0..slots.len()).map(|_| R::from_i64(rng.gen_range(-2..=2))).collect();
            let small = cur.truncate(m);
            let probe = |t: &Transform<R>| -> Result<Vec<R>> {
                let out = pushforward(&small, &t.with_bounds(m))?;
                let (zb, _) = out.euler_restrict();
                let tt = target_series(&out, mode)?;
                let zb: Vec<Series<R>> = zb.iter().map(|x| x.weight_component(m - 1)).collect();
                let tt: Vec<Series<R>> = tt.iter().map(|x| x.weight_component(m)).collect();
                Ok(cm.eval(&zb, &tt))
            };
            let r_0 = probe(&build(&|_| R::zero())?)?;
            let r_x = probe(&build(&|j| px[j].clone())?)?;
            let r_y = probe(&build(&|j| py[j].clone())?)?;
            let r_xy = probe(&build(&|j| px[j].clone() + py[j].clone())?)?;
            let mut jx = vec![R::zero(); cm.len()];
            for (j, col) in columns.iter().enumerate() {
                if px[j].is_zero() {
                    continue;
                }
                for (r, v) in col {
                    jx[*r] = jx[*r].clone() + v.clone() * px[j].clone();
                }
            }
            for k in 0..cm.len() {
                let sup = r_xy[k].clone() - r_x[k].clone() - r_y[k].clone() + r_0[k].clone();
                let lin_ok = r_x[k].clone() - r_0[k].clone() == jx[k];
                let base_ok = r_0[k] == r0[k];
                if !sup.is_zero() || !lin_ok || !base_ok {
                    return Err(CrError::Internal(format!(
                        "weight {m}: residual map is not the assembled affine map (row {k}, {:?})",
                        cm.rows[k]
                    )));
                }
            }
            checks += 1;
        }

        cur = pushforward(&cur, &tau)?;
        rest = compose_transforms(&rest, &tau)?;

        let (lt_zb, _) = cur.euler_restrict();
        let t_new = target_series(&cur, mode)?;
        let zb1: Vec<Series<R>> = lt_zb.iter().map(|x| x.weight_component(m - 1)).collect();
        let t1: Vec<Series<R>> = t_new.iter().map(|x| x.weight_component(m)).collect();
        if cm.eval(&zb1, &t1).iter().any(|v| !v.is_zero()) {
            return Err(CrError::Internal(format!("weight {m}: conditions not met after the step")));
        }
    }

    let transform = compose_transforms(&s0, &rest)?;
    let phi = if mode.uses_phi() { Some(target_series(&cur, mode)?) } else { None };
    let mut result = NormalFormResult {
        mode,
        transform,
        structure_out: cur,
        phi,
        residual_report: Vec::new(),
        valid_weight: w,
        affine_checks: checks,
    };
    result.residual_report = verify_conditions(&result, mode)?;
    Ok(result)
}
