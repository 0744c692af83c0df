//! A small polynomial notation, e.g. `"i*z1*zb1 + 1/2*u1^2 - 3*z2^2*zb1"`.
//!
//! Terms are separated by `+`/`-`; each term is a `*`-product of rationals
//! (`p` or `p/q`), the imaginary unit `i`, and variables `z<j>`, `zb<j>`,
//! `u<k>` (1-based) with an optional `^<int>` exponent.

use num_complex::Complex;

use super::{Mono, Series, Var, Vars};
use crate::error::{CrError, Result};
use crate::scalar::Scalar;

fn parse_var(vars: Vars, name: &str) -> Option<Var> {
    let (kind, idx) = if let Some(r) = name.strip_prefix("zb") {
        (1, r)
    } else if let Some(r) = name.strip_prefix('z') {
        (0, r)
    } else if let Some(r) = name.strip_prefix('u') {
        (2, r)
    } else {
        return None;
    };
    let j: usize = idx.parse().ok()?;
    if j == 0 {
        return None;
    }
    let v = match kind {
        0 => Var::Z(j - 1),
        1 => Var::Zb(j - 1),
        _ => Var::U(j - 1),
    };
    vars.check(v).ok().map(|_| v)
}

impl<R: Scalar> Series<R> {
    /// Parses the notation described in the module docs; the result is taken
    /// as exact up to `bound` (terms above it are dropped).
    pub fn parse(vars: Vars, bound: i32, text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        let cleaned: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() || cleaned == "0" {
            return Ok(Series::zero(vars, bound));
        }
        // Split on + and - that are not the leading sign.
        let mut pieces: Vec<(bool, String)> = Vec::new();
        let mut cur = String::new();
        let mut neg = false;
        for ch in cleaned.chars() {
            if (ch == '+' || ch == '-') && !cur.is_empty() && !cur.ends_with('^') {
                pieces.push((neg, std::mem::take(&mut cur)));
                neg = ch == '-';
            } else if (ch == '+' || ch == '-') && cur.is_empty() {
                if ch == '-' {
                    neg = !neg;
                }
            } else {
                cur.push(ch);
            }
        }
        pieces.push((neg, cur));
        for (neg, piece) in pieces {
            if piece.is_empty() {
                return Err(CrError::Parse(format!("empty term in {text:?}")));
            }
            let mut coeff = Complex::new(R::one(), R::zero());
            let mut exps = vec![0u32; vars.count()];
            for item in piece.split('*') {
                let (base, power) = match item.split_once('^') {
                    Some((b, p)) => {
                        let p: u32 = p.parse().map_err(|_| CrError::Parse(format!("bad exponent in {item:?}")))?;
                        (b, p)
                    }
                    None => (item, 1),
                };
                if base == "i" {
                    for _ in 0..power {
                        coeff = coeff * Complex::new(R::zero(), R::one());
                    }
                } else if let Some(v) = parse_var(vars, base) {
                    exps[vars.index(v)] += power;
                } else if let Some(x) = R::parse_frac(base) {
                    for _ in 0..power {
                        coeff = coeff * Complex::new(x.clone(), R::zero());
                    }
                } else {
                    return Err(CrError::Parse(format!("unrecognized factor {base:?}")));
                }
            }
            if neg {
                coeff = -coeff;
            }
            let n = vars.n;
            let m = Mono::new(vars, &exps[..n], &exps[n..2 * n], &exps[2 * n..])?;
            terms.push((m, coeff));
        }
        Ok(Series::from_terms(vars, bound, terms))
    }
}
