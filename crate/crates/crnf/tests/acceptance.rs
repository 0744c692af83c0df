//! Acceptance criteria, one line of output each. Runs as a plain binary so
//! the lines are printed whether or not they pass.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use num_complex::Complex;
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;
use crnf::error::CrError;
use crnf::frames::{normalize_with_frame, normalize_with_frame_opts, transport_frame, ExtendedFrame, FrameMotion};
use crnf::io::{result_to_doc, to_json};
use crnf::normalize::{self, check_conditions, FreeParameters, Mode, NormalFormResult, Options};
use crnf::series::{compose, monomials_of_weight, reverse_map, trace_decompose, trace_op, Mono, Series, SeriesMatrix, Var, Vars};
use crnf::structure::AlmostCR;
use crnf::transform::{euler_coincide, normalize_first_order, pushforward};
use crnf::{ExactSeries, Rational};

static RUNS: AtomicUsize = AtomicUsize::new(0);
static STEPS: AtomicUsize = AtomicUsize::new(0);
static MISSED: AtomicUsize = AtomicUsize::new(0);

/// Records the superposition checks of one pipeline run (criterion 9).
fn track(res: NormalFormResult<Rational>) -> NormalFormResult<Rational> {
    let steps = res.structure_out.weight() as usize - 2;
    RUNS.fetch_add(1, Ordering::Relaxed);
    STEPS.fetch_add(steps, Ordering::Relaxed);
    MISSED.fetch_add(steps.saturating_sub(res.affine_checks), Ordering::Relaxed);
    res
}

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T>(r: crnf::Result<T>, what: &str) -> std::result::Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

// ---------------------------------------------------------------- 1

fn criterion_1() -> Check {
    let t0 = Instant::now();
    let mut runs = 0;
    for eps in [vec![1], vec![-1], vec![1, 1], vec![-1, 1]] {
        let s = quadric(&eps, 10);
        let ef = ExtendedFrame::standard(eps.len(), 1);
        for mode in [Mode::Intrinsic, Mode::Extrinsic] {
            let res = track(ok(normalize_with_frame(&s, &ef, mode), "pipeline")?);
            runs += 1;
            ensure(res.transform.is_identity(), || format!("{eps:?} {mode}: transform not identity"))?;
            let (_, lt) = res.structure_out.euler_restrict();
            let (_, lt0) = s.euler_restrict();
            let higher = lt[0].sub(&lt0[0]);
            ensure(higher.is_zero(), || format!("{eps:?} {mode}: L̃^w has extra terms"))?;
            ensure(lt0[0].terms().iter().all(|(m, _)| m.weight() == 2), || "quadric L̃^w not of weight 2".into())?;
            ensure(res.structure_out == s, || format!("{eps:?} {mode}: L′ differs from the quadric"))?;
            if let Some(phi) = &res.phi {
                ensure(phi[0] == quadric_phi(&eps).truncate(10), || format!("{eps:?}: φ is not Σε|z|²"))?;
            }
            ensure(res.all_zero(), || "nonzero residual".into())?;
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.1}s"))?;
    Ok(format!("{runs} runs (n = 1, 2; W = 10) identity and exact quadric in {secs:.1}s"))
}

// ---------------------------------------------------------------- 2

struct Case {
    name: &'static str,
    s: AlmostCR<Rational>,
    ef: ExtendedFrame<Rational>,
}

fn invariance_cases() -> Vec<Case> {
    let w = 8;
    let v = vars(2, 1);
    let mut r = rng(2);
    let rot = |k: i64| vec![vec![cq((3 * k, 5), (0, 1)), cq((4 * k, 5), (0, 1))], vec![cq((-4 * k, 5), (0, 1)), cq((3 * k, 5), (0, 1))]];
    let boost = vec![vec![cq((5, 4), (0, 1)), cq((3, 4), (0, 1))], vec![cq((3, 4), (0, 1)), cq((5, 4), (0, 1))]];
    let phase = vec![vec![c(0, 0), c(0, 1)], vec![c(1, 0), c(0, 0)]];
    let std = ExtendedFrame::<Rational>::standard(2, 1);
    vec![
        Case {
            name: "integrable, definite",
            s: AlmostCR::from_graph(&[random_graph(&mut r, &[1, 1], w, 5)], w).unwrap(),
            ef: frame(phase.clone(), vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1), q(1, 1)], vec![q(1, 1), q(0, 1), q(2, 1), q(0, 1), q(1, 2)]),
        },
        Case {
            name: "integrable, indefinite",
            s: AlmostCR::from_graph(&[random_graph(&mut r, &[-1, 1], w, 5)], w).unwrap(),
            ef: frame(boost, vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1), q(1, 1)], vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1), q(-1, 1)]),
        },
        Case {
            name: "non-integrable, definite",
            s: AlmostCR::from_polynomials(
                v,
                w,
                vec![p(v, "z1*u1 + zb2^2"), p(v, "i*z2*zb1"), p(v, "z2^2*zb1"), p(v, "u1*zb2 - z1*zb1")],
                vec![p(v, "i*zb1 + z2 + u1*zb1 + 2*z1^2*zb2"), p(v, "i*zb2 - z1 + i*z1*zb1*zb2")],
            )
            .unwrap(),
            ef: frame(rot(2), vec![q(1, 1), q(0, 1), q(-1, 2), q(2, 1), q(4, 1)], vec![q(1, 1), q(0, 1), q(1, 3), q(0, 1), q(3, 1)]),
        },
        Case {
            name: "non-integrable, random",
            s: random_almost_cr(&mut r, &[1, 1], &[(0, 1, c(2, 1))], w, 3),
            ef: std.clone(),
        },
        Case {
            name: "non-integrable, indefinite",
            s: random_almost_cr(&mut r, &[-1, 1], &[(0, 1, c(1, 0))], w, 3),
            ef: frame(phase_swap_indefinite(), vec![q(0, 1), q(1, 1), q(0, 1), q(0, 1), q(1, 1)], vec![q(0, 1), q(0, 1), q(0, 1), q(0, 1), q(2, 1)]),
        },
    ]
}

/// Columns (i, 0) and (0, −1): adapted to diag(−1, 1) with λ = 1.
fn phase_swap_indefinite() -> Vec<Vec<Complex<Rational>>> {
    vec![vec![c(0, 1), c(0, 0)], vec![c(0, 0), c(-1, 0)]]
}

fn criterion_2() -> Check {
    let mut lines = Vec::new();
    let mut total = 0;
    for (k, case) in invariance_cases().into_iter().enumerate() {
        let t0 = Instant::now();
        ensure(case.s.is_integrable() == case.name.starts_with("integrable"), || format!("{}: integrability mislabelled", case.name))?;
        let base: Vec<_> = [Mode::Intrinsic, Mode::Extrinsic]
            .iter()
            .map(|&m| ok(normalize_with_frame(&case.s, &case.ef, m), case.name).map(track))
            .collect::<std::result::Result<_, _>>()?;
        let mut r = rng(100 + k as u64);
        for j in 0..20 {
            let t = random_transform(&mut r, case.s.vars(), case.s.weight(), 3);
            let s2 = ok(pushforward(&case.s, &t), "pushforward")?;
            let ef2 = ok(transport_frame(&case.ef, FrameMotion::Transform(&t)), "transport")?;
            for (b, &m) in base.iter().zip(&[Mode::Intrinsic, Mode::Extrinsic]) {
                let res = track(ok(normalize_with_frame(&s2, &ef2, m), case.name)?);
                ensure(res.structure_out == b.structure_out && res.phi == b.phi, || {
                    format!("{}: transform {j} changes the {m} normal form", case.name)
                })?;
                total += 1;
            }
        }
        let secs = t0.elapsed().as_secs_f64();
        ensure(secs < 120.0, || format!("{}: {secs:.0}s", case.name))?;
        lines.push(format!("{} {secs:.0}s", case.name));
    }
    Ok(format!("{total} comparisons over 5 structures x 20 transforms (n = 2, W = 8) all equal [{}]", lines.join("; ")))
}

// ---------------------------------------------------------------- 3

fn shuffled(s: &AlmostCR<Rational>, seed: u64) -> AlmostCR<Rational> {
    let mut r = rng(seed);
    let mut shuffle = |e: &ExactSeries| {
        let mut t = e.terms().to_vec();
        t.shuffle(&mut r);
        Series::from_terms(e.vars(), e.bound(), t)
    };
    let lzb = SeriesMatrix::from_entries(s.n(), s.n(), s.lzbar().entries().iter().map(&mut shuffle).collect()).unwrap();
    let lw = SeriesMatrix::from_entries(s.d(), s.n(), s.lw().entries().iter().map(&mut shuffle).collect()).unwrap();
    AlmostCR::new(s.weight(), lzb, lw).unwrap()
}

fn criterion_3() -> Check {
    let mut r = rng(3);
    let inputs = vec![
        random_almost_cr(&mut r, &[1, 1], &[(0, 1, c(1, -1))], 7, 3),
        AlmostCR::from_graph(&[random_graph(&mut r, &[-1, 1], 7, 4)], 7).unwrap(),
        AlmostCR::from_graph(&[random_graph(&mut r, &[1], 9, 6)], 9).unwrap(),
    ];
    let mut compared = 0;
    for (k, s) in inputs.iter().enumerate() {
        for mode in [Mode::Partial, Mode::Quasi, Mode::Intrinsic, Mode::Extrinsic] {
            let params = FreeParameters::with_r(s.vars(), q(1, 3));
            let base = track(ok(normalize::normalize(s, mode, &params, &Options::default()), "pipeline")?);
            let text = to_json(&result_to_doc(&base), false);
            for seed in 1..=3u64 {
                let opts = Options { column_order_seed: Some(seed * 7919), affine_check: true, probe_seed: seed };
                let s2 = shuffled(s, seed);
                let again = track(ok(normalize::normalize(&s2, mode, &params, &opts), "pipeline")?);
                ensure(to_json(&result_to_doc(&again), false) == text, || format!("input {k}, {mode}, seed {seed}: output bytes differ"))?;
                compared += 1;
            }
        }
    }
    // The frame-pinned driver as well.
    let case = &invariance_cases()[2];
    let a = to_json(&result_to_doc(&track(ok(normalize_with_frame(&case.s, &case.ef, Mode::Extrinsic), "framed")?)), false);
    let opts = Options { column_order_seed: Some(99), ..Options::default() };
    let b = track(ok(normalize_with_frame_opts(&shuffled(&case.s, 5), &case.ef, Mode::Extrinsic, &opts), "framed")?);
    ensure(a == to_json(&result_to_doc(&b), false), || "framed run differs".into())?;
    compared += 1;
    Ok(format!("{compared} reruns with permuted unknowns and shuffled terms byte-identical"))
}

// ---------------------------------------------------------------- 4

/// Chern–Moser conditions on φ, checked directly on its coefficients.
fn cm_violations(phi: &ExactSeries, levi: &[Vec<Complex<Rational>>]) -> Vec<String> {
    let v = phi.vars();
    let mut bad = Vec::new();
    if !phi.is_real() {
        bad.push("not real".into());
    }
    for (m, _) in phi.terms() {
        let (a, b, u) = (m.zdeg(), m.zbdeg(v), m.udeg(v));
        if a == 0 || b == 0 {
            bad.push(format!("pure term {}", m.display(v)));
        }
        if a == 1 && b == 1 && u > 0 {
            bad.push(format!("(1,1) term {}", m.display(v)));
        }
        if (a == 1 && b >= 2) || (b == 1 && a >= 2) {
            bad.push(format!("(k,1) term {}", m.display(v)));
        }
    }
    let tr = |s: &ExactSeries, l: u32| (0..l).fold(s.clone(), |acc, _| trace_op(&acc, levi).unwrap());
    for (k, l, pow) in [(2, 2, 1), (3, 2, 2), (2, 3, 2), (3, 3, 3)] {
        if !tr(&phi.bigrade_component(k, l), pow).is_zero() {
            bad.push(format!("tr^{pow} of ({k},{l}) part"));
        }
    }
    bad
}

fn criterion_4() -> Check {
    let mut r = rng(4);
    let mut graphs = Vec::new();
    for (eps, w) in [(vec![1], 9), (vec![1], 8), (vec![-1], 8), (vec![1, 1], 7), (vec![-1, 1], 7), (vec![1, 1], 6)] {
        graphs.push((eps.clone(), AlmostCR::from_graph(&[random_graph(&mut r, &eps, w, 6)], w).unwrap()));
    }
    for (eps, s) in &graphs {
        let levi: Vec<Vec<Complex<Rational>>> =
            (0..eps.len()).map(|j| (0..eps.len()).map(|k| if j == k { c(eps[j], 0) } else { c(0, 0) }).collect()).collect();
        let ext = track(ok(normalize::extrinsic_normal_form(s, Rational::zero()), "extrinsic")?);
        let phi = ext.phi.as_ref().unwrap();
        let bad = cm_violations(&phi[0], &levi);
        ensure(bad.is_empty(), || format!("{eps:?}: φ violates {}", bad.join(", ")))?;
        let quasi = track(ok(normalize::quasi_embed(s, &FreeParameters::zero(s.vars())), "quasi")?);
        let pushed = ok(pushforward(s, &quasi.transform), "pushforward")?;
        let graph = ok(AlmostCR::from_graph(quasi.phi.as_ref().unwrap(), s.weight()), "graph")?;
        ensure(pushed == graph, || format!("{eps:?}: integrable input not embedded exactly"))?;
    }
    let v = vars(2, 1);
    let nonint = vec![
        AlmostCR::from_polynomials(v, 6, vec![p(v, "0"); 4], vec![p(v, "i*zb1 + z2"), p(v, "i*zb2 - z1")]).unwrap(),
        random_almost_cr(&mut r, &[1, 1], &[(0, 1, c(1, 1))], 6, 3),
        random_almost_cr(&mut r, &[-1, 1], &[], 6, 3),
        random_almost_cr(&mut r, &[1, 1], &[(0, 1, c(0, 2))], 7, 2),
    ];
    for (k, s) in nonint.iter().enumerate() {
        ensure(!s.is_integrable(), || format!("non-integrable input {k} is integrable"))?;
        let quasi = track(ok(normalize::quasi_embed(s, &FreeParameters::zero(s.vars())), "quasi")?);
        let pushed = ok(pushforward(s, &quasi.transform), "pushforward")?;
        let graph = ok(AlmostCR::from_graph(quasi.phi.as_ref().unwrap(), s.weight()), "graph")?;
        ensure(euler_coincide(&pushed, &graph), || format!("non-integrable {k}: Euler coincidence fails"))?;
        ensure(pushed != graph, || format!("non-integrable {k}: embedding is exact"))?;
    }
    Ok(format!(
        "{} integrable graphs: φ in Chern–Moser form and exact embedding; {} non-integrable: Euler coincidence only",
        graphs.len(),
        nonint.len()
    ))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Check {
    let v = vars(1, 1);
    let w = 12;
    let phi = p(v, "z1*zb1 + u1*z1^4*zb1^4");
    let s = ok(AlmostCR::from_graph(&[phi.clone()], w), "graph")?;
    let (_, lt) = s.euler_restrict();
    // i(zz̄ + 4u z⁴z̄⁴) Σ_k (i z⁴z̄⁴)^k, from the closed form.
    let num = p(v, "i*z1*zb1 + 4*i*u1*z1^4*zb1^4");
    let x = p(v, "i*z1^4*zb1^4");
    let mut oracle = Series::zero(v, w as i32);
    let mut xk = Series::one(v, w as i32);
    for _ in 0..4 {
        oracle = oracle.add(&num.mul(&xk).truncate(w as i32));
        xk = xk.mul(&x).truncate(w as i32);
    }
    ensure(lt[0] == oracle, || format!("L̃^w = {}, expected {}", lt[0].display(), oracle.display()))?;
    let coeff = |t: &str| lt[0].coeff(&p(v, t).terms()[0].0);
    ensure(coeff("z1*zb1") == c(0, 1) && coeff("u1*z1^4*zb1^4") == c(0, 4) && coeff("z1^5*zb1^5") == c(-1, 0), || {
        "leading coefficients are not i, 4i, −1".into()
    })?;
    let ext = ok(check_conditions(&s, Some(&[phi.clone()]), Mode::Extrinsic, w), "conditions")?;
    ensure(ext.iter().all(|e| e.zero), || format!("extrinsic conditions fail: {:?}", ext.iter().filter(|e| !e.zero).collect::<Vec<_>>()))?;
    let int = ok(check_conditions(&s, None, Mode::Intrinsic, w), "conditions")?;
    let failing: Vec<_> = int.iter().filter(|e| !e.zero).map(|e| (e.condition.as_str(), e.weight)).collect();
    ensure(failing == vec![("reality", 10)], || format!("intrinsic failures {failing:?}, expected reality at 10"))?;
    let res = track(ok(normalize::extrinsic_normal_form(&s, Rational::zero()), "extrinsic")?);
    ensure(res.transform.is_identity() && res.phi.as_ref() == Some(&vec![phi.truncate(w as i32)]), || {
        "extrinsic pipeline moved the input".into()
    })?;
    let intr = track(ok(normalize::intrinsic_normal_form(&s, Rational::zero()), "intrinsic")?);
    ensure(!intr.transform.is_identity() && intr.structure_out != s, || "intrinsic normal form equals the input".into())?;
    Ok("L̃^w matches the expansion to weight 12; extrinsic conditions hold; intrinsic reality fails exactly at weight 10".into())
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Check {
    let v = vars(2, 1);
    let crafted = |w| AlmostCR::<Rational>::from_polynomials(v, w, vec![p(v, "0"); 4], vec![p(v, "i*zb1 - 3*i*z2"), p(v, "-i*zb2 + 3*i*z1")]).unwrap();
    let s = crafted(6);
    let nw = ok(s.nijenhuis_at_0(), "nijenhuis")?.nw[0].clone();
    ensure(nw[0][1] == c(0, 6) && nw[1][0] == c(0, -6), || format!("N^w = {nw:?}"))?;
    let rep = ok(s.is_strongly_nondegenerate(), "strong")?;
    ensure(rep.levi_nondegenerate && !rep.strong, || "crafted structure passes the gate".into())?;
    let wit = rep.kernel_witness.ok_or("no witness")?;
    ensure(!wit[0].is_zero() && wit[0] == wit[1] && wit[0].im.is_zero(), || format!("witness {wit:?} not ∝ (1,1)"))?;
    track(ok(normalize::intrinsic_normal_form(&crafted(4), Rational::zero()), "weight 4 run")?);
    let mut first = None;
    for w in [5, 6, 7] {
        match normalize::intrinsic_normal_form(&crafted(w), Rational::zero()) {
            Err(CrError::NotStronglyNondegenerate { weight, witness, .. }) => {
                ensure(weight == 5, || format!("W = {w}: raised at weight {weight}"))?;
                ensure(witness.len() == 2 && witness[0] == witness[1], || format!("pipeline witness {witness:?}"))?;
                first = Some(weight);
            }
            other => return Err(format!("W = {w}: expected not_strongly_nondegenerate, got {:?}", other.map(|_| ()))),
        }
    }
    let mut r = rng(6);
    let mut passed = 0;
    for k in 0..10 {
        let eps = if k % 2 == 0 { vec![1, 1] } else { vec![1] };
        let nij = if eps.len() == 2 { vec![(0, 1, small_coeff(&mut r) * c(r.gen_range(1..5), 0))] } else { vec![] };
        let s = random_almost_cr(&mut r, &eps, &nij, 6, 3);
        let rep = ok(ok(normalize_first_order(&s), "first order")?.1.is_strongly_nondegenerate(), "strong")?;
        ensure(rep.strong, || format!("definite input {k} fails the gate"))?;
        track(ok(normalize::intrinsic_normal_form(&s, Rational::zero()), "definite input")?);
        passed += 1;
    }
    Ok(format!(
        "crafted structure rejected with witness ∝ (1,1) at weight {}; {passed} definite inputs pass",
        first.unwrap()
    ))
}

// ---------------------------------------------------------------- 7

/// h·(z₂, −z₁) added to the L^w row: invisible to the Euler field.
fn euler_invisible(s: &AlmostCR<Rational>, h: &ExactSeries) -> AlmostCR<Rational> {
    let v = s.vars();
    let lw0 = s.lw().get(0, 0).add(&h.mul(&p(v, "z2")));
    let lw1 = s.lw().get(0, 1).sub(&h.mul(&p(v, "z1")));
    let w = s.weight() as i32;
    AlmostCR::new(s.weight(), s.lzbar().clone(), SeriesMatrix::from_entries(1, 2, vec![lw0.truncate(w - 1), lw1.truncate(w - 1)]).unwrap())
        .unwrap()
}

fn criterion_7() -> Check {
    let mut r = rng(7);
    let w = 8;
    let v = vars(2, 1);
    let mut terms = 0;
    for k in 0..10 {
        let eps = if k % 3 == 0 { [-1, 1] } else { [1, 1] };
        let g = ok(AlmostCR::from_graph(&[random_graph(&mut r, &eps, w, 8)], w), "graph")?;
        let s1 = ok(pushforward(&g, &random_transform(&mut r, v, w, 4)), "pushforward")?;
        terms += s1.lzbar().entries().iter().chain(s1.lw().entries()).map(|e| e.len()).sum::<usize>();
        let (lzb, lw) = s1.euler_restrict();
        let s2 = ok(AlmostCR::from_euler_integrable(&lzb, &lw, w), "reconstruction")?;
        ensure(s1.is_integrable() && s2.is_integrable(), || format!("pair {k}: not integrable"))?;
        ensure(euler_coincide(&s1, &s2), || format!("pair {k}: L̃ differ"))?;
        ensure(s1 == s2, || format!("pair {k}: L differ though both integrable with equal L̃"))?;
        let h = random_series(&mut r, v, 0, w - 3, 2, |_| true).add(&Series::one(v, BIG).scale(&small_coeff(&mut r)));
        let s3 = euler_invisible(&s1, &h);
        ensure(euler_coincide(&s1, &s3), || format!("pair {k}: perturbation visible to e(z)"))?;
        ensure(!s3.is_integrable(), || format!("pair {k}: perturbed structure integrable"))?;
        ensure(s3 != s1, || format!("pair {k}: non-integrable partner coincides"))?;
    }
    Ok(format!("10 integrable pairs with equal L̃ ({terms} coefficients in all) coincide to weight 7; non-integrable partners differ"))
}

// ---------------------------------------------------------------- 8

fn rand_series(r: &mut rand_chacha::ChaCha8Rng, v: Vars, lo: u32, w: u32, terms: usize) -> ExactSeries {
    random_series(r, v, lo, w, terms, |_| true).truncate(w as i32)
}

fn criterion_8() -> Check {
    let t0 = Instant::now();
    let mut r = rng(8);
    let v = vars(2, 1);
    let w = 6u32;
    let wi = w as i32;
    let per = 100;
    for _ in 0..per {
        let (a, b, cc) = (rand_series(&mut r, v, 0, w, 5), rand_series(&mut r, v, 0, w, 5), rand_series(&mut r, v, 0, w, 5));
        ensure(a.add(&b).add(&cc) == a.add(&b.add(&cc)), || "addition not associative".into())?;
        ensure(a.mul(&b).mul(&cc) == a.mul(&b.mul(&cc)), || "multiplication not associative".into())?;
        ensure(a.mul(&b.add(&cc)) == a.mul(&b).add(&a.mul(&cc)), || "not distributive".into())?;
        ensure(a.mul(&b) == b.mul(&a) && a.add(&b) == b.add(&a), || "not commutative".into())?;
        ensure(a.mul(&Series::one(v, wi)) == a && a.sub(&a).is_zero(), || "identities fail".into())?;
    }
    let rand_subst = |r: &mut rand_chacha::ChaCha8Rng| -> Vec<ExactSeries> {
        let f: Vec<ExactSeries> = (0..2).map(|_| random_series(r, v, 2, w, 3, |m| m.degree(v) >= 2).truncate(wi)).collect();
        let g = random_real_series(r, v, 2, w, 2, |m| m.degree(v) >= 2).truncate(wi);
        let mut h: Vec<ExactSeries> = f.iter().enumerate().map(|(j, s)| s.add(&Series::var(v, wi, Var::Z(j)))).collect();
        h.extend(f.iter().enumerate().map(|(j, s)| s.conjugate().add(&Series::var(v, wi, Var::Zb(j)))));
        h.push(g.add(&Series::var(v, wi, Var::U(0))));
        h
    };
    for _ in 0..per {
        let s = rand_series(&mut r, v, 0, w, 5);
        let (h1, h2) = (rand_subst(&mut r), rand_subst(&mut r));
        let h12: Vec<ExactSeries> = h1.iter().map(|x| compose(x, &h2).unwrap()).collect();
        let lhs = ok(compose(&ok(compose(&s, &h1), "compose")?, &h2), "compose")?;
        ensure(lhs == ok(compose(&s, &h12), "compose")?, || "composition not associative".into())?;
    }
    for _ in 0..per {
        let h = rand_subst(&mut r);
        let inv = ok(reverse_map(&h), "reverse")?;
        for i in 0..h.len() {
            let id = Series::var(v, wi, v.var(i));
            ensure(ok(compose(&h[i], &inv), "compose")? == id, || "h ∘ h⁻¹ ≠ id".into())?;
            ensure(ok(compose(&inv[i], &h), "compose")? == id, || "h⁻¹ ∘ h ≠ id".into())?;
        }
    }
    for _ in 0..per {
        let m = SeriesMatrix::from_fn(2, 2, |i, j| {
            let c0 = if i == j { c(r.gen_range(1..4), r.gen_range(-1..2)) } else { small_coeff(&mut r) };
            rand_series(&mut r, v, 1, w, 3).add(&Series::constant(v, wi, c0))
        });
        let inv = ok(m.inverse(), "inverse")?;
        let id = SeriesMatrix::identity(v, 2, wi);
        ensure(ok(m.mul(&inv), "mul")? == id && ok(inv.mul(&m), "mul")? == id, || "M M⁻¹ ≠ id".into())?;
    }
    let forms = [p(v, "z1*zb1 + z2*zb2"), p(v, "-z1*zb1 + z2*zb2"), p(v, "2*z1*zb1 + i*z1*zb2 - i*z2*zb1 + z2*zb2")];
    for k in 0..per {
        let l = 1 + (k % 3) as u32;
        let form = &forms[k % 3];
        let (a, b) = (l + r.gen_range(0..2u32), l + r.gen_range(0..2u32));
        let u = r.gen_range(0..2u32);
        let pool: Vec<Mono> = monomials_of_weight(v, a + b + 2 * u).into_iter().filter(|m| m.zdeg() == a && m.zbdeg(v) == b).collect();
        let pp = Series::from_terms(v, BIG, (0..4).map(|_| (*pool.choose(&mut r).unwrap(), small_coeff(&mut r))));
        let (qq, h) = ok(trace_decompose(&pp, l, form), "decompose")?;
        ensure(qq.mul_full(&form.pow(l)).add(&h) == pp, || "q·form^l + h ≠ p".into())?;
        let levi = ok(crnf::series::TraceForm::from_form(form), "form")?;
        ensure(crnf::series::trace_op_pow(&h, &levi, l).is_zero(), || "tr^l h ≠ 0".into())?;
    }
    for _ in 0..per {
        let (a, b) = (rand_series(&mut r, v, 0, w, 5), rand_series(&mut r, v, 0, w, 5));
        ensure(a.conjugate().conjugate() == a, || "conjugation not involutive".into())?;
        ensure(a.mul(&b).conjugate() == a.conjugate().mul(&b.conjugate()), || "conjugation not multiplicative".into())?;
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("6 suites x {per} random instances exact in {secs:.1}s"))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Check {
    let (runs, steps, missed) = (RUNS.load(Ordering::Relaxed), STEPS.load(Ordering::Relaxed), MISSED.load(Ordering::Relaxed));
    ensure(runs > 0, || "no runs recorded".into())?;
    ensure(missed == 0, || format!("{missed} of {steps} weight steps without a superposition check"))?;
    Ok(format!("superposition verified at all {steps} weight steps of {runs} pipeline runs"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 9] = [
        ("hyperquadric fixed point", criterion_1),
        ("normal-form invariance", criterion_2),
        ("uniqueness / determinism", criterion_3),
        ("Chern–Moser specialization", criterion_4),
        ("forms-different regression", criterion_5),
        ("strong-nondegeneracy gate", criterion_6),
        ("integrable Euler rigidity", criterion_7),
        ("series-algebra suite", criterion_8),
        ("affine-solve superposition", criterion_9),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let t0 = Instant::now();
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = t0.elapsed().as_secs_f64();
        match out {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg} ({secs:.1}s)", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg} ({secs:.1}s)", k + 1)
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
