use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Monomial, Poly};
use crate::scalar::Scalar;

/// Inner product on the unit sphere, as an exact fraction of the sphere
/// area together with its floating value.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereInner<T> {
    /// `(1/|S^{n-1}|) * integral of p q`.
    pub fraction: T,
    /// `integral of p q` over the unit sphere.
    pub value: f64,
}

/// Surface area of the unit sphere in `R^n`.
pub fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI / (n as f64 - 2.0) * sphere_area(n - 2),
    }
}

/// Volume of the unit ball in `R^n`.
pub fn ball_volume(n: usize) -> f64 {
    sphere_area(n) / n as f64
}

fn cache() -> &'static Mutex<HashMap<Vec<u32>, BigRational>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u32>, BigRational>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Normalized moment `(1/|S|) * integral of x^alpha` over the unit sphere.
///
/// Equals `prod (alpha_i - 1)!! / prod_{j<m} (n + 2j)` with `m = |alpha|/2`,
/// and zero when any exponent is odd.
pub fn moment_fraction(m: &Monomial) -> BigRational {
    let exps = m.exps();
    if exps.iter().any(|e| e % 2 == 1) {
        return BigRational::zero();
    }
    if let Some(v) = cache().lock().expect("moment cache").get(exps) {
        return v.clone();
    }
    let n = exps.len() as u64;
    let half: u64 = exps.iter().map(|&e| e as u64).sum::<u64>() / 2;
    let mut num = BigInt::one();
    for &e in exps {
        let mut k = e as i64 - 1;
        while k > 1 {
            num *= BigInt::from(k);
            k -= 2;
        }
    }
    let mut den = BigInt::one();
    for j in 0..half {
        den *= BigInt::from(n + 2 * j);
    }
    let v = BigRational::new(num, den);
    cache()
        .lock()
        .expect("moment cache")
        .insert(exps.to_vec(), v.clone());
    v
}

/// Normalized integral `(1/|S|) * integral of p` over the unit sphere.
pub fn sphere_mean<T: Scalar>(p: &Poly<T>) -> T {
    let mut acc = T::zero();
    for (m, c) in p.terms() {
        let w = moment_fraction(&m);
        if !w.is_zero() {
            acc += c * T::from_rational(&w);
        }
    }
    acc
}

/// `L^2(S^{n-1})` inner product of two polynomials.
pub fn sphere_inner<T: Scalar>(p: &Poly<T>, q: &Poly<T>) -> SphereInner<T> {
    let fraction = sphere_mean(&(p * q));
    let value = fraction.to_f64() * sphere_area(p.dim());
    SphereInner { fraction, value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn areas() {
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((ball_volume(3) - 4.0 / 3.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn low_order_moments() {
        assert_eq!(moment_fraction(&Monomial::new(vec![2, 0])), q(1, 2));
        assert_eq!(moment_fraction(&Monomial::new(vec![4, 0])), q(3, 8));
        assert_eq!(moment_fraction(&Monomial::new(vec![2, 2])), q(1, 8));
        assert_eq!(moment_fraction(&Monomial::new(vec![2, 0, 0])), q(1, 3));
        assert_eq!(moment_fraction(&Monomial::new(vec![1, 1])), q(0, 1));
    }

    #[test]
    fn x2_norm_is_half_area() {
        let p = Poly::from_ints(2, &[(1, &[0, 1])]).unwrap();
        let ip = sphere_inner(&p, &p);
        assert_eq!(ip.fraction, q(1, 2));
        assert!((ip.value - PI).abs() < 1e-14);
    }
}
