//! Exact rationals with an inline machine-word representation.
//!
//! Values whose reduced numerator and denominator fit in an `i64` (numerator
//! never `i64::MIN`) are stored inline; everything else is a boxed
//! [`BigRational`]. The representation is canonical, so equality is
//! structural. Arithmetic on two inline values runs in `i128` and only
//! falls back to big integers when the reduced result does not fit.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Rem, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Signed, ToPrimitive, Zero};

#[derive(Clone, PartialEq, Eq, Hash)]
enum Repr {
    Small(i64, i64),
    Big(Box<BigRational>),
}

/// An exact rational number. See the module docs for the representation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    if a == 0 {
        return b;
    }
    if b == 0 {
        return a;
    }
    if (a | b) >> 64 == 0 {
        return (a as u64).gcd(&(b as u64)) as u128;
    }
    let shift = (a | b).trailing_zeros();
    a >>= a.trailing_zeros();
    loop {
        b >>= b.trailing_zeros();
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        b -= a;
        if b == 0 {
            return a << shift;
        }
    }
}

fn fits(n: i128) -> bool {
    n > i64::MIN as i128 && n <= i64::MAX as i128
}

impl Rational {
    /// p/q; panics if q = 0.
    pub fn new(p: i64, q: i64) -> Self {
        assert!(q != 0, "zero denominator");
        Self::from_i128(p as i128, q as i128)
    }

    pub fn from_integer(p: i64) -> Self {
        Self::from_i128(p as i128, 1)
    }

    /// Reduces n/d (d ≠ 0).
    fn from_i128(mut n: i128, mut d: i128) -> Self {
        if d < 0 {
            n = -n;
            d = -d;
        }
        let g = gcd_u128(n.unsigned_abs(), d as u128) as i128;
        if g > 1 {
            n /= g;
            d /= g;
        }
        if fits(n) && fits(d) {
            Rational(Repr::Small(n as i64, d as i64))
        } else {
            Rational(Repr::Big(Box::new(BigRational::new_raw(BigInt::from(n), BigInt::from(d)))))
        }
    }

    /// Already reduced n/d with d > 0.
    fn from_reduced_i128(n: i128, d: i128) -> Self {
        if fits(n) && fits(d) {
            Rational(Repr::Small(n as i64, d as i64))
        } else {
            Rational(Repr::Big(Box::new(BigRational::new_raw(BigInt::from(n), BigInt::from(d)))))
        }
    }

    pub fn from_big(b: BigRational) -> Self {
        if let (Some(n), Some(d)) = (b.numer().to_i64(), b.denom().to_i64()) {
            if n != i64::MIN {
                return Rational(Repr::Small(n, d));
            }
        }
        Rational(Repr::Big(Box::new(b)))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    fn big_op(&self, other: &Self, f: impl FnOnce(BigRational, BigRational) -> BigRational) -> Self {
        Self::from_big(f(self.to_big(), other.to_big()))
    }

    fn add_ref(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                if b == d {
                    Self::from_i128(a + c, b)
                } else {
                    Self::from_i128(a * d + c * b, b * d)
                }
            }
            _ => self.big_op(other, |x, y| x + y),
        }
    }

    fn mul_ref(&self, other: &Self) -> Self {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                if *a == 0 || *c == 0 {
                    return Self::zero();
                }
                let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
                let g1 = gcd_u128(a.unsigned_abs(), d as u128) as i128;
                let g2 = gcd_u128(c.unsigned_abs(), b as u128) as i128;
                Self::from_reduced_i128((a / g1) * (c / g2), (b / g2) * (d / g1))
            }
            _ => self.big_op(other, |x, y| x * y),
        }
    }

    fn recip_ref(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => {
                assert!(*n != 0, "division by zero");
                if *n < 0 {
                    Rational(Repr::Small(-*d, -*n))
                } else {
                    Rational(Repr::Small(*d, *n))
                }
            }
            Repr::Big(b) => Self::from_big(b.recip()),
        }
    }

    fn neg_ref(&self) -> Self {
        match &self.0 {
            Repr::Small(n, d) => Rational(Repr::Small(-*n, *d)),
            Repr::Big(b) => Self::from_big(-(**b).clone()),
        }
    }
}

impl Zero for Rational {
    fn zero() -> Self {
        Rational(Repr::Small(0, 1))
    }

    fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }
}

impl One for Rational {
    fn one() -> Self {
        Rational(Repr::Small(1, 1))
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $atr:ident, $am:ident, $body:expr) => {
        impl $tr<&Rational> for &Rational {
            type Output = Rational;
            fn $m(self, o: &Rational) -> Rational {
                let f: fn(&Rational, &Rational) -> Rational = $body;
                f(self, o)
            }
        }
        impl $tr<Rational> for Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                (&self).$m(&o)
            }
        }
        impl $tr<&Rational> for Rational {
            type Output = Rational;
            fn $m(self, o: &Rational) -> Rational {
                (&self).$m(o)
            }
        }
        impl $tr<Rational> for &Rational {
            type Output = Rational;
            fn $m(self, o: Rational) -> Rational {
                self.$m(&o)
            }
        }
        impl $atr<Rational> for Rational {
            fn $am(&mut self, o: Rational) {
                *self = (&*self).$m(&o);
            }
        }
        impl $atr<&Rational> for Rational {
            fn $am(&mut self, o: &Rational) {
                *self = (&*self).$m(o);
            }
        }
    };
}

binop!(Add, add, AddAssign, add_assign, |a, b| a.add_ref(b));
binop!(Sub, sub, SubAssign, sub_assign, |a, b| a.add_ref(&b.neg_ref()));
binop!(Mul, mul, MulAssign, mul_assign, |a, b| a.mul_ref(b));
binop!(Div, div, DivAssign, div_assign, |a, b| a.mul_ref(&b.recip_ref()));

impl Rem for Rational {
    type Output = Rational;
    fn rem(self, o: Rational) -> Rational {
        self.big_op(&o, |x, y| x % y)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.neg_ref()
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        self.neg_ref()
    }
}

impl Num for Rational {
    type FromStrRadixErr = String;

    fn from_str_radix(s: &str, radix: u32) -> Result<Self, String> {
        BigRational::from_str_radix(s, radix).map(Self::from_big).map_err(|e| e.to_string())
    }
}

impl Signed for Rational {
    fn abs(&self) -> Self {
        if self.is_negative() {
            self.neg_ref()
        } else {
            self.clone()
        }
    }

    fn abs_sub(&self, other: &Self) -> Self {
        if self <= other {
            Self::zero()
        } else {
            self - other
        }
    }

    fn signum(&self) -> Self {
        match self.cmp(&Self::zero()) {
            Ordering::Less => -Self::one(),
            Ordering::Equal => Self::zero(),
            Ordering::Greater => Self::one(),
        }
    }

    fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n > 0,
            Repr::Big(b) => b.is_positive(),
        }
    }

    fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small(n, _) => *n < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128)),
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ToPrimitive for Rational {
    fn to_i64(&self) -> Option<i64> {
        self.to_big().to_integer().to_i64()
    }

    fn to_u64(&self) -> Option<u64> {
        self.to_big().to_integer().to_u64()
    }

    fn to_f64(&self) -> Option<f64> {
        match &self.0 {
            Repr::Small(n, d) => Some(*n as f64 / *d as f64),
            Repr::Big(b) => b.to_f64(),
        }
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Self::from_integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Self::from_big(v)
    }
}

impl FromStr for Rational {
    type Err = String;

    /// `"p"` or `"p/q"` with decimal integers.
    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: BigInt = p.parse().map_err(|_| format!("bad numerator in {s:?}"))?;
        let q: BigInt = q.parse().map_err(|_| format!("bad denominator in {s:?}"))?;
        if q.is_zero() {
            return Err(format!("zero denominator in {s:?}"));
        }
        Ok(Self::from_big(BigRational::new(p, q)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{n}"),
            Repr::Small(n, d) => write!(f, "{n}/{d}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
