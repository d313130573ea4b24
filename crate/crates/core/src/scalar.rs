//! Scalar abstractions shared by the exact and floating-point code paths.

use std::fmt;
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{
    Float, FloatConst, FromPrimitive, Num, NumAssign, One, Signed, ToPrimitive, Zero,
};

/// Coefficient field for polynomials: exact rationals or IEEE floats.
pub trait Scalar:
    Num + NumAssign + Signed + Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync + 'static
{
    /// True when arithmetic is exact.
    const EXACT: bool;

    fn from_int(v: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    fn to_f64(&self) -> f64;

    /// Inverse of `n!` for small `n`.
    fn inv_factorial(n: u32) -> Self {
        let mut acc = BigInt::one();
        for i in 2..=n {
            acc *= BigInt::from(i);
        }
        Self::from_rational(&BigRational::new(BigInt::one(), acc))
    }

    /// True when the value is zero, or below `tol` for floating types.
    fn is_negligible(&self, tol: f64) -> bool {
        if Self::EXACT {
            self.is_zero()
        } else {
            self.to_f64().abs() <= tol
        }
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or_else(|| {
            // Very large numerators/denominators: scale down before dividing.
            let n = self.numer().to_f64().unwrap_or(f64::NAN);
            let d = self.denom().to_f64().unwrap_or(f64::NAN);
            n / d
        })
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_int(v: i64) -> Self {
                v as $t
            }

            fn from_rational(r: &BigRational) -> Self {
                <BigRational as Scalar>::to_f64(r) as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Floating-point scalar used by grid and diagnostic code.
pub trait Real:
    Scalar
    + Float
    + FloatConst
    + FromPrimitive
    + Sum
    + Copy
    + Default
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite conversion")
    }

    /// Widen to `f64`.
    fn re(self) -> f64 {
        Scalar::to_f64(&self)
    }
}

impl Real for f64 {}
impl Real for f32 {}

/// Best rational approximation of a float with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64) -> BigRational {
    if x == 0.0 || !x.is_finite() {
        return BigRational::zero();
    }
    let r: Option<Ratio<i64>> = Ratio::approximate_float(x);
    match r {
        Some(r) if *r.denom() <= max_den => {
            BigRational::new((*r.numer()).into(), (*r.denom()).into())
        }
        _ => continuants(x, max_den),
    }
}

fn continuants(x: f64, max_den: i64) -> BigRational {
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e18 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        let frac = v - a;
        if frac.abs() < 1e-15 {
            break;
        }
        v = 1.0 / frac;
    }
    if k1 == 0 {
        return BigRational::zero();
    }
    BigRational::new(BigInt::from(h1), BigInt::from(k1))
}

/// Parse `a`, `a/b` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    // Decimal literal: exact conversion of the written digits.
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    let digits = format!("{ip}{fp}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - fp.len() as i32;
    let ten = BigInt::from(10);
    let mut r = BigRational::from_integer(n);
    if scale >= 0 {
        r *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        r /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if neg { -r } else { r })
}

/// Text form `num/den` (denominator omitted when one).
pub fn rational_text(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("3/2"), Some(q(3, 2)));
        assert_eq!(parse_rational("-7"), Some(q(-7, 1)));
        assert_eq!(parse_rational("0.25"), Some(q(1, 4)));
        assert_eq!(parse_rational("-1.5e-1"), Some(q(-3, 20)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("abc"), None);
    }

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(0.5, 1000), q(1, 2));
        assert_eq!(rationalize(-1.0 / 3.0, 1000), q(-1, 3));
        assert_eq!(rationalize(0.0, 1000), q(0, 1));
        let r = rationalize(std::f64::consts::PI, 1000);
        assert!(*r.denom() <= BigInt::from(1000));
        assert!((Scalar::to_f64(&r) - std::f64::consts::PI).abs() < 1e-5);
    }

    #[test]
    fn inverse_factorials() {
        assert_eq!(<BigRational as Scalar>::inv_factorial(5), q(1, 120));
        assert!((<f64 as Scalar>::inv_factorial(3) - 1.0 / 6.0).abs() < 1e-15);
    }
}
