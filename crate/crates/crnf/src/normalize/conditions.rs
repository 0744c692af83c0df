//! Normalization conditions at a single weight, encoded as real-linear
//! functionals on the coefficients of L̃^z̄ (weight m − 1) and of the target
//! series T (weight m): T = L̃^w / i for the intrinsic side, T = φ for the
//! embedded side.

use num_complex::Complex;
use rustc_hash::FxHashMap;

use super::Mode;
use crate::scalar::{is_czero, Scalar};
use crate::series::{bidegree_monomials, compositions, monomials_of_weight, Mono, Series, TraceForm, Vars};

/// Condition families, used as row labels in residual reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CondKind {
    /// L̃^z̄ ≡ 0.
    Zbar,
    /// T is real (Re L̃^w ≡ 0, or Im φ ≡ 0).
    Reality,
    /// T_{z z̄ u^{c+1}} = 0.
    Mixed11,
    /// T_{z^{p} z̄ u^c} = 0, p ≥ 2.
    Pure1,
    /// tr T_{z²z̄²u^c} = 0.
    Trace22,
    /// tr² T_{z³z̄²u^c} = 0.
    Trace32,
    /// tr³ T_{z³z̄³u^c} = 0.
    Trace33,
}

impl CondKind {
    pub fn label(self) -> &'static str {
        match self {
            CondKind::Zbar => "euler_zbar_vanishes",
            CondKind::Reality => "reality",
            CondKind::Mixed11 => "bidegree_11_u",
            CondKind::Pure1 => "bidegree_p1",
            CondKind::Trace22 => "trace_22",
            CondKind::Trace32 => "trace2_32",
            CondKind::Trace33 => "trace3_33",
        }
    }

    pub fn all() -> [CondKind; 7] {
        [
            CondKind::Zbar,
            CondKind::Reality,
            CondKind::Mixed11,
            CondKind::Pure1,
            CondKind::Trace22,
            CondKind::Trace32,
            CondKind::Trace33,
        ]
    }
}

/// Row r receives `a·Re c + b·Im c` from a coefficient c.
type Hook<R> = (usize, R, R);

/// All conditions of one weight as a sparse real-linear map.
pub(crate) struct CondMap<R: Scalar> {
    pub rows: Vec<CondKind>,
    zb: FxHashMap<(usize, Mono), Vec<Hook<R>>>,
    t: FxHashMap<(usize, Mono), Vec<Hook<R>>>,
}

/// The canonical representative of {μ, μ̄}.
fn is_rep(vars: Vars, m: &Mono) -> bool {
    *m <= m.conj(vars)
}

impl<R: Scalar> CondMap<R> {
    pub fn build(vars: Vars, m: u32, mode: Mode, trace: Option<&TraceForm<R>>) -> Self {
        let mut cm = CondMap { rows: Vec::new(), zb: FxHashMap::default(), t: FxHashMap::default() };
        let one = R::one;
        let zero = R::zero;
        // L̃^z̄ at weight m − 1 (|a| ≥ 1; other coefficients vanish identically).
        if m >= 2 {
            for mono in monomials_of_weight(vars, m - 1) {
                if mono.zdeg() == 0 {
                    continue;
                }
                for i in 0..vars.n {
                    let re = cm.row(CondKind::Zbar);
                    let im = cm.row(CondKind::Zbar);
                    cm.zb.entry((i, mono)).or_default().extend([(re, one(), zero()), (im, zero(), one())]);
                }
            }
        }
        let monos: Vec<Mono> = monomials_of_weight(vars, m).into_iter().filter(|x| x.zdeg() + x.zbdeg(vars) > 0).collect();
        let full = mode.is_full();
        for l in 0..vars.d {
            // Reality: Im T_μ for μ = μ̄, T_μ − conj T_μ̄ otherwise.
            for mono in &monos {
                let cj = mono.conj(vars);
                if cj == *mono {
                    let r = cm.row(CondKind::Reality);
                    cm.hook_t(l, *mono, (r, zero(), one()));
                } else if is_rep(vars, mono) {
                    let re = cm.row(CondKind::Reality);
                    let im = cm.row(CondKind::Reality);
                    cm.hook_t(l, *mono, (re.clone(), one(), zero()));
                    cm.hook_t(l, *mono, (im, zero(), one()));
                    cm.hook_t(l, cj, (re, -one(), zero()));
                    cm.hook_t(l, cj, (im, zero(), one()));
                }
            }
            if !full {
                continue;
            }
            for mono in &monos {
                let (a, b, c) = (mono.zdeg(), mono.zbdeg(vars), mono.udeg(vars));
                let kind = if a == 1 && b == 1 && c >= 1 {
                    CondKind::Mixed11
                } else if a >= 2 && b == 1 {
                    CondKind::Pure1
                } else {
                    continue;
                };
                let cj = mono.conj(vars);
                if kind == CondKind::Mixed11 && cj == *mono {
                    let r = cm.row(kind);
                    cm.hook_t(l, *mono, (r, one(), zero()));
                } else if kind == CondKind::Pure1 || is_rep(vars, mono) {
                    let re = cm.row(kind);
                    let im = cm.row(kind);
                    cm.hook_t(l, *mono, (re, one(), zero()));
                    cm.hook_t(l, *mono, (im, zero(), one()));
                }
            }
            let tf = trace.expect("full modes need a trace form");
            for (kind, a, b, p) in [(CondKind::Trace22, 2, 2, 1), (CondKind::Trace32, 3, 2, 2), (CondKind::Trace33, 3, 3, 3)] {
                if m < a + b || (m - a - b) % 2 != 0 {
                    continue;
                }
                let cdeg = (m - a - b) / 2;
                for cvec in compositions(vars.d, cdeg) {
                    let targets = bidegree_monomials(vars, a - p, b - p, &cvec);
                    let mut row_of: FxHashMap<Mono, (Option<usize>, Option<usize>)> = FxHashMap::default();
                    for k in &targets {
                        let cj = k.conj(vars);
                        let rows = if cj == *k {
                            (Some(cm.row(kind)), None)
                        } else if is_rep(vars, k) || !targets.contains(&cj) {
                            (Some(cm.row(kind)), Some(cm.row(kind)))
                        } else {
                            (None, None)
                        };
                        row_of.insert(*k, rows);
                    }
                    for src in bidegree_monomials(vars, a, b, &cvec) {
                        let img = tf.apply_pow(
                            &Series::monomial(vars, i32::MAX / 4, src, Complex::new(R::one(), R::zero())),
                            p,
                        );
                        for (k, dcoef) in img.terms() {
                            let (re, im) = row_of[k];
                            if let Some(r) = re {
                                cm.hook_t(l, src, (r, dcoef.re.clone(), -dcoef.im.clone()));
                            }
                            if let Some(r) = im {
                                cm.hook_t(l, src, (r, dcoef.im.clone(), dcoef.re.clone()));
                            }
                        }
                    }
                }
            }
        }
        cm
    }

    fn row(&mut self, kind: CondKind) -> usize {
        self.rows.push(kind);
        self.rows.len() - 1
    }

    fn hook_t(&mut self, l: usize, m: Mono, h: Hook<R>) {
        self.t.entry((l, m)).or_default().push(h);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Sparse evaluation: (row, value) pairs, rows possibly repeated.
    pub fn apply(&self, zb: &[Series<R>], t: &[Series<R>]) -> Vec<(usize, R)> {
        let mut out = Vec::new();
        let mut feed = |hooks: Option<&Vec<Hook<R>>>, c: &Complex<R>| {
            if let Some(hs) = hooks {
                for (r, a, b) in hs {
                    let v = a.clone() * c.re.clone() + b.clone() * c.im.clone();
                    if !v.is_zero() {
                        out.push((*r, v));
                    }
                }
            }
        };
        for (i, s) in zb.iter().enumerate() {
            for (m, c) in s.terms() {
                if !is_czero(c) {
                    feed(self.zb.get(&(i, *m)), c);
                }
            }
        }
        for (l, s) in t.iter().enumerate() {
            for (m, c) in s.terms() {
                feed(self.t.get(&(l, *m)), c);
            }
        }
        out
    }

    /// Dense evaluation.
    pub fn eval(&self, zb: &[Series<R>], t: &[Series<R>]) -> Vec<R> {
        let mut v = vec![R::zero(); self.len()];
        for (r, x) in self.apply(zb, t) {
            v[r] = v[r].clone() + x;
        }
        v
    }
}
