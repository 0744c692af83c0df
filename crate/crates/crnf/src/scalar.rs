//! Real scalar fields underlying the complex coefficients.
//!
//! Everything in the crate is generic over [`Scalar`]. The exact
//! instantiations are [`crate::Rational`] and [`num_rational::BigRational`]; `f64` and `f32` are
//! provided for quick experiments, where equality tests are of course only
//! as good as floating point allows.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::Neg;

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// A real field usable as the coefficient base.
pub trait Scalar:
    Num + Clone + Debug + PartialEq + PartialOrd + Neg<Output = Self> + Send + Sync + 'static
{
    /// Whether equality and zero tests are exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn from_frac(p: i64, q: i64) -> Self {
        Self::from_i64(p) / Self::from_i64(q)
    }

    /// Parses `"p/q"`, `"p"` or (for floats) a decimal literal.
    fn parse_frac(s: &str) -> Option<Self>;

    /// Canonical wire form. Exact scalars print `p/q` with `q > 0` in lowest terms.
    fn to_frac_string(&self) -> String;

    fn to_f64(&self) -> f64;

    /// `acc += a * b` on complex values. Overridden where references avoid clones.
    fn cmul_acc(acc: &mut Complex<Self>, a: &Complex<Self>, b: &Complex<Self>) {
        *acc = acc.clone() + a.clone() * b.clone();
    }

    fn cmul(a: &Complex<Self>, b: &Complex<Self>) -> Complex<Self> {
        a.clone() * b.clone()
    }

    fn sign(&self) -> Ordering {
        self.partial_cmp(&Self::zero()).unwrap_or(Ordering::Equal)
    }
}

fn split_frac(s: &str) -> Option<(&str, &str)> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => Some((p.trim(), q.trim())),
        None => Some((s, "1")),
    }
}

fn exact_cmul_acc<T>(acc: &mut Complex<T>, a: &Complex<T>, b: &Complex<T>)
where
T: Zero + for<'a> std::ops::AddAssign<&'a T> + std::ops::AddAssign<T> + std::ops::SubAssign<T>,
for<'a> &'a T: std::ops::Mul<&'a T, Output = T>,
{
    if a.im.is_zero() {
        if !b.re.is_zero() {
            acc.re += &a.re * &b.re;
        }
        if !b.im.is_zero() {
            acc.im += &a.re * &b.im;
        }
        return;
    }
    if a.re.is_zero() {
        if !b.im.is_zero() {
            acc.re -= &a.im * &b.im;
        }
        if !b.re.is_zero() {
            acc.im += &a.im * &b.re;
        }
        return;
    }
    if !b.re.is_zero() {
        acc.re += &a.re * &b.re;
        acc.im += &a.im * &b.re;
    }
    if !b.im.is_zero() {
        acc.re -= &a.im * &b.im;
        acc.im += &a.re * &b.im;
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_frac(p: i64, q: i64) -> Self {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn parse_frac(s: &str) -> Option<Self> {
        let (p, q) = split_frac(s)?;
        let p: BigInt = p.parse().ok()?;
        let q: BigInt = q.parse().ok()?;
        if q.is_zero() {
            return None;
        }
        Some(BigRational::new(p, q))
    }

    fn to_frac_string(&self) -> String {
        // BigRational is kept reduced with a positive denominator.
        format!("{}/{}", self.numer(), self.denom())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn cmul_acc(acc: &mut Complex<Self>, a: &Complex<Self>, b: &Complex<Self>) {
        exact_cmul_acc(acc, a, b)
    }

    fn cmul(a: &Complex<Self>, b: &Complex<Self>) -> Complex<Self> {
        let mut acc = Complex::new(Self::zero(), Self::zero());
        Self::cmul_acc(&mut acc, a, b);
        acc
    }

    fn sign(&self) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_negative() {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }
}

impl Scalar for crate::Rational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        crate::Rational::from_integer(v)
    }

    fn from_frac(p: i64, q: i64) -> Self {
        crate::Rational::new(p, q)
    }

    fn parse_frac(s: &str) -> Option<Self> {
        s.parse().ok()
    }

    fn to_frac_string(&self) -> String {
        format!("{}/{}", self.numer(), self.denom())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn cmul_acc(acc: &mut Complex<Self>, a: &Complex<Self>, b: &Complex<Self>) {
        exact_cmul_acc(acc, a, b)
    }

    fn cmul(a: &Complex<Self>, b: &Complex<Self>) -> Complex<Self> {
        let mut acc = Complex::new(Self::zero(), Self::zero());
        exact_cmul_acc(&mut acc, a, b);
        acc
    }

    fn sign(&self) -> Ordering {
        self.cmp(&Self::zero())
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn parse_frac(s: &str) -> Option<Self> {
                let (p, q) = split_frac(s)?;
                let p: $t = p.parse().ok()?;
                let q: $t = q.parse().ok()?;
                if q == 0.0 {
                    return None;
                }
                Some(p / q)
            }

            fn to_frac_string(&self) -> String {
                format!("{}", self)
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Complex number helpers that only need [`Scalar`].
pub fn czero<R: Scalar>() -> Complex<R> {
    Complex::new(R::zero(), R::zero())
}

pub fn cone<R: Scalar>() -> Complex<R> {
    Complex::new(R::one(), R::zero())
}

pub fn ci<R: Scalar>() -> Complex<R> {
    Complex::new(R::zero(), R::one())
}

pub fn creal<R: Scalar>(v: R) -> Complex<R> {
    Complex::new(v, R::zero())
}

pub fn cint<R: Scalar>(v: i64) -> Complex<R> {
    Complex::new(R::from_i64(v), R::zero())
}

pub fn cfrac<R: Scalar>(p: i64, q: i64) -> Complex<R> {
    Complex::new(R::from_frac(p, q), R::zero())
}

/// `n!` as a scalar.
pub fn factorial<R: Scalar>(n: u32) -> R {
    let mut acc = R::one();
    for k in 2..=n {
        acc = acc * R::from_i64(k as i64);
    }
    acc
}

pub(crate) fn is_czero<R: Scalar>(c: &Complex<R>) -> bool {
    c.re.is_zero() && c.im.is_zero()
}

/// Formats a complex coefficient as `re+im i` with fraction strings, for diagnostics.
pub fn fmt_complex<R: Scalar>(c: &Complex<R>) -> String {
    if c.im.is_zero() {
        c.re.to_frac_string()
    } else if c.re.is_zero() {
        format!("{}i", c.im.to_frac_string())
    } else {
        format!("({} + {}i)", c.re.to_frac_string(), c.im.to_frac_string())
    }
}
