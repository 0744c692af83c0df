//! JSON documents for structures, transforms, frames, free parameters and
//! normalization results.
//!
//! Rationals travel as fraction strings (`"p/q"` or `"p"`); nothing on the
//! wire is a float. A series literal is a list of term records
//! `{a, b, c, re, im?}`; on input the polynomial notation of
//! [`Series::parse`] is accepted as an alternative. Output is deterministic:
//! terms follow the fixed monomial order and exact scalars print as `p/q`
//! in lowest terms.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{CrError, Result};
use crate::frames::{AdaptedFrame, ExtendedFrame};
use crate::normalize::{FreeParameters, Mode, NormalFormResult, ResidualEntry};
use crate::scalar::{is_czero, Scalar};
use crate::series::{Mono, Series, SeriesMatrix, Vars};
use crate::structure::AlmostCR;
use crate::transform::Transform;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub c: Vec<u32>,
    pub re: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesDoc {
    Terms(Vec<TermDoc>),
    Text(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexDoc {
    Parts { re: String, #[serde(default)] im: Option<String> },
    Real(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureKind {
    Graph,
    Lmap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDoc {
    pub n: usize,
    pub d: usize,
    #[serde(rename = "W")]
    pub w: u32,
    pub kind: StructureKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<SeriesDoc>>,
    #[serde(rename = "Lzbar", default, skip_serializing_if = "Option::is_none")]
    pub lzbar: Option<Vec<Vec<SeriesDoc>>>,
    #[serde(rename = "Lw", default, skip_serializing_if = "Option::is_none")]
    pub lw: Option<Vec<Vec<SeriesDoc>>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformDoc {
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<u32>,
    pub f: Vec<SeriesDoc>,
    pub g: Vec<SeriesDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameDoc {
    pub v: Vec<Vec<ComplexDoc>>,
    pub vtrans: Vec<String>,
    pub jet2: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f0: Option<Vec<SeriesDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g0: Option<Vec<SeriesDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualDoc {
    pub condition: String,
    pub weight: u32,
    pub zero: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultDoc {
    pub mode: String,
    pub n: usize,
    pub d: usize,
    #[serde(rename = "W")]
    pub w: u32,
    pub valid_weight: u32,
    pub transform: TransformDoc,
    pub structure_out: StructureDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<Vec<SeriesDoc>>,
    pub residuals: Vec<ResidualDoc>,
}

fn perr(path: &str, msg: impl std::fmt::Display) -> CrError {
    CrError::Parse(format!("{path}: {msg}"))
}

fn scalar_from<R: Scalar>(s: &str, path: &str) -> Result<R> {
    R::parse_frac(s).ok_or_else(|| perr(path, format!("not a rational: {s:?}")))
}

pub fn complex_to_doc<R: Scalar>(c: &Complex<R>) -> ComplexDoc {
    ComplexDoc::Parts { re: c.re.to_frac_string(), im: Some(c.im.to_frac_string()) }
}

pub fn complex_from_doc<R: Scalar>(c: &ComplexDoc, path: &str) -> Result<Complex<R>> {
    match c {
        ComplexDoc::Real(re) => Ok(Complex::new(scalar_from(re, path)?, R::zero())),
        ComplexDoc::Parts { re, im } => Ok(Complex::new(
            scalar_from(re, &format!("{path}.re"))?,
            match im {
                Some(im) => scalar_from(im, &format!("{path}.im"))?,
                None => R::zero(),
            },
        )),
    }
}

pub fn series_to_doc<R: Scalar>(s: &Series<R>) -> SeriesDoc {
    let vars = s.vars();
    SeriesDoc::Terms(
        s.terms()
            .iter()
            .map(|(m, c)| TermDoc {
                a: m.a(vars),
                b: m.b(vars),
                c: m.c(vars),
                re: c.re.to_frac_string(),
                im: if c.im.is_zero() { None } else { Some(c.im.to_frac_string()) },
            })
            .collect(),
    )
}

/// Reads a series literal, taken as exact to `bound`.
pub fn series_from_doc<R: Scalar>(doc: &SeriesDoc, vars: Vars, bound: i32, path: &str) -> Result<Series<R>> {
    match doc {
        SeriesDoc::Text(t) => Series::parse(vars, bound, t).map_err(|e| perr(path, e)),
        SeriesDoc::Terms(terms) => {
            let mut out = Vec::with_capacity(terms.len());
            let mut seen = std::collections::BTreeSet::new();
            for (k, t) in terms.iter().enumerate() {
                let p = format!("{path}[{k}]");
                if t.a.len() != vars.n || t.b.len() != vars.n || t.c.len() != vars.d {
                    return Err(perr(
                        &p,
                        format!("exponent vectors need lengths {}, {}, {}", vars.n, vars.n, vars.d),
                    ));
                }
                let m = Mono::new(vars, &t.a, &t.b, &t.c).map_err(|e| perr(&p, e))?;
                if !seen.insert(m) {
                    return Err(perr(&p, "monomial listed twice"));
                }
                let re = scalar_from(&t.re, &format!("{p}.re"))?;
                let im = match &t.im {
                    Some(s) => scalar_from(s, &format!("{p}.im"))?,
                    None => R::zero(),
                };
                out.push((m, Complex::new(re, im)));
            }
            Ok(Series::from_terms(vars, bound, out))
        }
    }
}

fn series_list<R: Scalar>(docs: &[SeriesDoc], len: usize, vars: Vars, bound: i32, path: &str) -> Result<Vec<Series<R>>> {
    if docs.len() != len {
        return Err(perr(path, format!("expected {len} entries, found {}", docs.len())));
    }
    docs.iter()
        .enumerate()
        .map(|(k, d)| series_from_doc(d, vars, bound, &format!("{path}[{k}]")))
        .collect()
}

fn matrix_to_doc<R: Scalar>(m: &SeriesMatrix<R>) -> Vec<Vec<SeriesDoc>> {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| series_to_doc(m.get(i, j))).collect()).collect()
}

fn matrix_from_doc<R: Scalar>(
    doc: &[Vec<SeriesDoc>],
    rows: usize,
    cols: usize,
    vars: Vars,
    bound: i32,
    path: &str,
) -> Result<Vec<Series<R>>> {
    if doc.len() != rows {
        return Err(perr(path, format!("expected {rows} rows, found {}", doc.len())));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for (i, row) in doc.iter().enumerate() {
        out.extend(series_list(row, cols, vars, bound, &format!("{path}[{i}]"))?);
    }
    Ok(out)
}

pub fn structure_to_doc<R: Scalar>(s: &AlmostCR<R>) -> StructureDoc {
    StructureDoc {
        n: s.n(),
        d: s.d(),
        w: s.weight(),
        kind: StructureKind::Lmap,
        phi: None,
        lzbar: Some(matrix_to_doc(s.lzbar())),
        lw: Some(matrix_to_doc(s.lw())),
    }
}

/// A graph document written as such (φ rather than L).
pub fn graph_to_doc<R: Scalar>(phi: &[Series<R>], weight: u32) -> StructureDoc {
    let vars = phi[0].vars();
    StructureDoc {
        n: vars.n,
        d: vars.d,
        w: weight,
        kind: StructureKind::Graph,
        phi: Some(phi.iter().map(series_to_doc).collect()),
        lzbar: None,
        lw: None,
    }
}

pub fn structure_from_doc<R: Scalar>(doc: &StructureDoc) -> Result<AlmostCR<R>> {
    let vars = Vars::new(doc.n, doc.d).map_err(|e| perr("n/d", e))?;
    let w = doc.w as i32;
    match doc.kind {
        StructureKind::Graph => {
            if doc.lzbar.is_some() || doc.lw.is_some() {
                return Err(perr("kind", "a graph document carries phi only"));
            }
            let phi = doc.phi.as_ref().ok_or_else(|| perr("phi", "missing for kind \"graph\""))?;
            let phi = series_list(phi, doc.d, vars, w, "phi")?;
            AlmostCR::from_graph(&phi, doc.w)
        }
        StructureKind::Lmap => {
            if doc.phi.is_some() {
                return Err(perr("kind", "an lmap document carries Lzbar/Lw only"));
            }
            let lzbar = match &doc.lzbar {
                Some(m) => matrix_from_doc(m, doc.n, doc.n, vars, w - 2, "Lzbar")?,
                None => (0..doc.n * doc.n).map(|_| Series::zero(vars, w - 2)).collect(),
            };
            let lw = doc.lw.as_ref().ok_or_else(|| perr("Lw", "missing for kind \"lmap\""))?;
            let lw = matrix_from_doc(lw, doc.d, doc.n, vars, w - 1, "Lw")?;
            AlmostCR::from_polynomials(vars, doc.w, lzbar, lw)
        }
    }
}

pub fn transform_to_doc<R: Scalar>(t: &Transform<R>) -> TransformDoc {
    TransformDoc {
        w: Some(t.weight().max(0) as u32),
        f: t.f().iter().map(series_to_doc).collect(),
        g: t.g().iter().map(series_to_doc).collect(),
    }
}

/// `weight` is used when the document does not state its own.
pub fn transform_from_doc<R: Scalar>(doc: &TransformDoc, vars: Vars, weight: u32) -> Result<Transform<R>> {
    let w = doc.w.unwrap_or(weight);
    let f = series_list(&doc.f, vars.n, vars, w as i32 - 1, "f")?;
    let g = series_list(&doc.g, vars.d, vars, w as i32, "g")?;
    Transform::from_polynomials(w, f, g)
}

pub fn frame_to_doc<R: Scalar>(ef: &ExtendedFrame<R>) -> FrameDoc {
    FrameDoc {
        v: ef.frame.v.iter().map(|v| v.iter().map(complex_to_doc).collect()).collect(),
        vtrans: ef.frame.vtrans.iter().map(|x| x.to_frac_string()).collect(),
        jet2: ef.jet2.iter().map(|x| x.to_frac_string()).collect(),
    }
}

pub fn frame_from_doc<R: Scalar>(doc: &FrameDoc, n: usize, d: usize) -> Result<ExtendedFrame<R>> {
    if doc.v.len() != n || doc.v.iter().any(|v| v.len() != n) {
        return Err(perr("v", format!("expected {n} vectors with {n} complex entries")));
    }
    let real = 2 * n + d;
    if doc.vtrans.len() != real {
        return Err(perr("vtrans", format!("expected {real} entries")));
    }
    if doc.jet2.len() != real {
        return Err(perr("jet2", format!("expected {real} entries")));
    }
    let v = doc
        .v
        .iter()
        .enumerate()
        .map(|(j, v)| v.iter().enumerate().map(|(i, c)| complex_from_doc(c, &format!("v[{j}][{i}]"))).collect())
        .collect::<Result<Vec<Vec<Complex<R>>>>>()?;
    let reals = |xs: &[String], name: &str| -> Result<Vec<R>> {
        xs.iter().enumerate().map(|(k, s)| scalar_from(s, &format!("{name}[{k}]"))).collect()
    };
    Ok(ExtendedFrame { frame: AdaptedFrame { v, vtrans: reals(&doc.vtrans, "vtrans")? }, jet2: reals(&doc.jet2, "jet2")? })
}

pub fn params_to_doc<R: Scalar>(p: &FreeParameters<R>) -> ParamsDoc {
    ParamsDoc {
        f0: Some(p.f0.iter().map(series_to_doc).collect()),
        g0: Some(p.g0.iter().map(series_to_doc).collect()),
        r: Some(p.r.to_frac_string()),
    }
}

pub fn params_from_doc<R: Scalar>(doc: &ParamsDoc, vars: Vars) -> Result<FreeParameters<R>> {
    let mut p = FreeParameters::zero(vars);
    let big = i32::MAX / 4;
    if let Some(f0) = &doc.f0 {
        p.f0 = series_list(f0, vars.n, vars, big, "f0")?;
    }
    if let Some(g0) = &doc.g0 {
        p.g0 = series_list(g0, vars.d, vars, big, "g0")?;
    }
    if let Some(r) = &doc.r {
        p.r = scalar_from(r, "r")?;
    }
    p.validate(vars)?;
    Ok(p)
}

pub fn result_to_doc<R: Scalar>(res: &NormalFormResult<R>) -> ResultDoc {
    let s = &res.structure_out;
    ResultDoc {
        mode: res.mode.name().to_string(),
        n: s.n(),
        d: s.d(),
        w: s.weight(),
        valid_weight: res.valid_weight,
        transform: transform_to_doc(&res.transform),
        structure_out: structure_to_doc(s),
        phi: res.phi.as_ref().map(|p| p.iter().map(series_to_doc).collect()),
        residuals: res
            .residual_report
            .iter()
            .map(|e| ResidualDoc { condition: e.condition.clone(), weight: e.weight, zero: e.zero })
            .collect(),
    }
}

/// Rebuilds a result. The affine-check counter is not part of the document.
pub fn result_from_doc<R: Scalar>(doc: &ResultDoc) -> Result<NormalFormResult<R>> {
    let mode = Mode::parse(&doc.mode).ok_or_else(|| perr("mode", format!("unknown mode {:?}", doc.mode)))?;
    let structure_out: AlmostCR<R> = structure_from_doc(&doc.structure_out)?;
    if (structure_out.n(), structure_out.d(), structure_out.weight()) != (doc.n, doc.d, doc.w) {
        return Err(perr("structure_out", "(n, d, W) disagrees with the header"));
    }
    let vars = structure_out.vars();
    let transform = transform_from_doc(&doc.transform, vars, doc.w)?;
    let phi = match &doc.phi {
        Some(p) => Some(series_list(p, doc.d, vars, doc.w as i32, "phi")?),
        None => None,
    };
    Ok(NormalFormResult {
        mode,
        transform,
        structure_out,
        phi,
        residual_report: doc
            .residuals
            .iter()
            .map(|r| ResidualEntry { condition: r.condition.clone(), weight: r.weight, zero: r.zero })
            .collect(),
        valid_weight: doc.valid_weight,
        affine_checks: 0,
    })
}

/// One coefficient that differs between two results.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffEntry {
    pub field: String,
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub c: Vec<u32>,
    pub left: ComplexDoc,
    pub right: ComplexDoc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffReport {
    pub n: usize,
    pub d: usize,
    pub weight: u32,
    pub identical: bool,
    pub differences: Vec<DiffEntry>,
}

fn diff_series<R: Scalar>(field: &str, x: &Series<R>, y: &Series<R>, w: i32, out: &mut Vec<DiffEntry>) {
    let vars = x.vars();
    let d = x.truncate(w).sub(&y.truncate(w));
    for (m, c) in d.terms() {
        if is_czero(c) {
            continue;
        }
        out.push(DiffEntry {
            field: field.to_string(),
            a: m.a(vars),
            b: m.b(vars),
            c: m.c(vars),
            left: complex_to_doc(&x.coeff(m)),
            right: complex_to_doc(&y.coeff(m)),
        });
    }
}

/// Coefficient-wise comparison of the normal forms (L′ and φ) of two
/// results up to the smaller valid weight. Transforms are not compared.
pub fn compare_results<R: Scalar>(x: &NormalFormResult<R>, y: &NormalFormResult<R>) -> Result<DiffReport> {
    let (sx, sy) = (&x.structure_out, &y.structure_out);
    if (sx.n(), sx.d()) != (sy.n(), sy.d()) {
        return Err(CrError::Shape(format!(
            "cannot compare type ({}, {}) with type ({}, {})",
            sx.n(),
            sx.d(),
            sy.n(),
            sy.d()
        )));
    }
    let w = x.valid_weight.min(y.valid_weight);
    let wi = w as i32;
    let mut out = Vec::new();
    for (name, mx, my, bound) in [("Lzbar", sx.lzbar(), sy.lzbar(), wi - 2), ("Lw", sx.lw(), sy.lw(), wi - 1)] {
        for i in 0..mx.rows() {
            for j in 0..mx.cols() {
                diff_series(&format!("{name}[{i}][{j}]"), mx.get(i, j), my.get(i, j), bound, &mut out);
            }
        }
    }
    match (&x.phi, &y.phi) {
        (Some(px), Some(py)) => {
            for (l, (a, b)) in px.iter().zip(py).enumerate() {
                diff_series(&format!("phi[{l}]"), a, b, wi, &mut out);
            }
        }
        (None, None) => {}
        _ => return Err(CrError::Shape("only one of the results carries phi".into())),
    }
    Ok(DiffReport { n: sx.n(), d: sx.d(), weight: w, identical: out.is_empty(), differences: out })
}

/// Canonical JSON text.
pub fn to_json<T: Serialize>(doc: &T, pretty: bool) -> String {
    let s = if pretty { serde_json::to_string_pretty(doc) } else { serde_json::to_string(doc) };
    s.expect("documents always serialize")
}

/// Parses JSON, reporting line and column on failure.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T> {
    serde_json::from_str(text)
        .map_err(|e| CrError::Parse(format!("{what}: {e} (line {}, column {})", e.line(), e.column())))
}
