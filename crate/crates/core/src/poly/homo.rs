use std::collections::BTreeMap;
use std::fmt;

use num_rational::BigRational;

use super::{Monomial, PolyError};
use crate::scalar::Scalar;

/// Homogeneous polynomial of fixed degree in `dim` variables.
#[derive(Clone, PartialEq, Debug)]
pub struct HomoPoly<T> {
    dim: usize,
    degree: u32,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> HomoPoly<T> {
    pub fn zero(dim: usize, degree: u32) -> Self {
        HomoPoly {
            dim,
            degree,
            terms: BTreeMap::new(),
        }
    }

    /// Single term `c * x^exps`.
    pub fn monomial(coeff: T, exps: &[u32]) -> Self {
        let m = Monomial::new(exps.to_vec());
        let mut p = HomoPoly::zero(exps.len(), m.degree());
        p.add_term(m, coeff);
        p
    }

    /// The linear form `sum l_i x_i`.
    pub fn linear(l: &[T]) -> Self {
        let mut p = HomoPoly::zero(l.len(), 1);
        for (i, c) in l.iter().enumerate() {
            p.add_term(Monomial::var(l.len(), i), c.clone());
        }
        p
    }

    pub fn from_terms<I>(dim: usize, degree: u32, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (T, Vec<u32>)>,
    {
        let mut p = HomoPoly::zero(dim, degree);
        for (c, e) in terms {
            if e.len() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            let m = Monomial::new(e);
            if m.degree() != degree {
                return Err(PolyError::DegreeMismatch {
                    expected: degree,
                    found: m.degree(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: &[u32]) -> T {
        self.terms
            .get(&Monomial::new(exps.to_vec()))
            .cloned()
            .unwrap_or_else(T::zero)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: T) {
        debug_assert_eq!(m.dim(), self.dim);
        debug_assert_eq!(m.degree(), self.degree);
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&m);
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn check_same_shape(&self, other: &Self) {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        assert_eq!(self.degree, other.degree, "degree mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_same_shape(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| -c.clone())
    }

    pub fn scale(&self, s: &T) -> Self {
        if s.is_zero() {
            return HomoPoly::zero(self.dim, self.degree);
        }
        self.map_coeffs(|c| c.clone() * s.clone())
    }

    fn map_coeffs(&self, f: impl Fn(&T) -> T) -> Self {
        let mut out = HomoPoly::zero(self.dim, self.degree);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = HomoPoly::zero(self.dim, self.degree + other.degree);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        out
    }

    /// Multiply by `x_i^e`.
    pub fn mul_var_pow(&self, i: usize, e: u32) -> Self {
        let mut out = HomoPoly::zero(self.dim, self.degree + e);
        for (m, c) in &self.terms {
            out.add_term(m.with(i, m.get(i) + e), c.clone());
        }
        out
    }

    /// Partial derivative in `x_i` (0-based).
    pub fn partial(&self, i: usize) -> Self {
        let mut out = HomoPoly::zero(self.dim, self.degree.saturating_sub(1));
        if self.degree == 0 {
            return out;
        }
        for (m, c) in &self.terms {
            let e = m.get(i);
            if e > 0 {
                out.add_term(m.with(i, e - 1), c.clone() * T::from_int(e as i64));
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        let mut out = HomoPoly::zero(self.dim, self.degree.saturating_sub(2));
        if self.degree < 2 {
            return out;
        }
        for (m, c) in &self.terms {
            for i in 0..self.dim {
                let e = m.get(i);
                if e >= 2 {
                    let k = T::from_int((e * (e - 1)) as i64);
                    out.add_term(m.with(i, e - 2), c.clone() * k);
                }
            }
        }
        out
    }

    pub fn is_harmonic(&self) -> bool {
        self.laplacian().is_zero()
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.exps().iter().enumerate() {
                for _ in 0..e {
                    t *= x[i].clone();
                }
            }
            acc += t;
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| c.to_f64() * m.eval_f64(x))
            .sum()
    }

    /// Reflection `x_axis -> -x_axis`.
    pub fn reflect(&self, axis: usize) -> Self {
        let mut out = HomoPoly::zero(self.dim, self.degree);
        for (m, c) in &self.terms {
            let v = if m.get(axis) % 2 == 1 {
                -c.clone()
            } else {
                c.clone()
            };
            out.add_term(m.clone(), v);
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> HomoPoly<U> {
        let mut out = HomoPoly::zero(self.dim, self.degree);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_f64(&self) -> HomoPoly<f64> {
        self.map(|c| c.to_f64())
    }

    /// Largest absolute coefficient.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    /// Exact division by the linear form `sum l_i x_i`.
    ///
    /// Uses synthetic division in the last variable with a nonzero
    /// coefficient; fails if the remainder does not vanish.
    pub fn divide_by_linear(&self, l: &[T]) -> Result<Self, PolyError> {
        if l.len() != self.dim {
            return Err(PolyError::DimensionMismatch {
                expected: self.dim,
                found: l.len(),
            });
        }
        let pivot = match l.iter().rposition(|c| !c.is_zero()) {
            Some(p) => p,
            None => return Err(PolyError::NotDivisible),
        };
        if self.is_zero() {
            return Ok(HomoPoly::zero(self.dim, self.degree.saturating_sub(1)));
        }
        if self.degree == 0 {
            return Err(PolyError::NotDivisible);
        }
        let scale = self.max_abs_coeff();
        let mut rem = self.clone();
        let mut quot = HomoPoly::zero(self.dim, self.degree - 1);
        loop {
            let lead = rem
                .terms
                .iter()
                .filter(|(m, c)| m.get(pivot) > 0 && !c.is_negligible(1e-13 * scale))
                .max_by_key(|(m, _)| (m.get(pivot), (*m).clone()))
                .map(|(m, c)| (m.clone(), c.clone()));
            let Some((m, c)) = lead else { break };
            let t_mon = m.with(pivot, m.get(pivot) - 1);
            let t_coeff = c / l[pivot].clone();
            for (i, li) in l.iter().enumerate() {
                if li.is_zero() {
                    continue;
                }
                let mm = t_mon.with(i, t_mon.get(i) + 1);
                rem.add_term(mm, -(t_coeff.clone() * li.clone()));
            }
            if !T::EXACT {
                rem.terms.remove(&m);
            }
            quot.add_term(t_mon, t_coeff);
        }
        if rem
            .terms
            .values()
            .all(|c| c.is_negligible(1e-10 * scale.max(1.0)))
        {
            Ok(quot)
        } else {
            Err(PolyError::NotDivisible)
        }
    }
}

impl HomoPoly<BigRational> {
    pub fn from_ints(dim: usize, degree: u32, terms: &[(i64, &[u32])]) -> Result<Self, PolyError> {
        HomoPoly::from_terms(
            dim,
            degree,
            terms
                .iter()
                .map(|(c, e)| (BigRational::from_integer((*c).into()), e.to_vec())),
        )
    }
}

impl<T: Scalar> fmt::Display for HomoPoly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}
