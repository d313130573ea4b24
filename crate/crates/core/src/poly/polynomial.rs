use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;

use super::{HomoPoly, Monomial, PolyError};
use crate::scalar::Scalar;

/// Polynomial stored as a sum of homogeneous parts keyed by degree.
#[derive(Clone, PartialEq, Debug)]
pub struct Poly<T> {
    dim: usize,
    parts: BTreeMap<u32, HomoPoly<T>>,
}

impl<T: Scalar> Poly<T> {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            parts: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: T) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(Monomial::one(dim), c);
        p
    }

    pub fn var(dim: usize, i: usize) -> Self {
        let mut p = Poly::zero(dim);
        p.add_term(Monomial::var(dim, i), T::one());
        p
    }

    pub fn from_homo(h: HomoPoly<T>) -> Self {
        let mut p = Poly::zero(h.dim());
        p.add_homo(&h);
        p
    }

    pub fn from_terms<I>(dim: usize, terms: I) -> Result<Self, PolyError>
    where
        I: IntoIterator<Item = (T, Vec<u32>)>,
    {
        let mut p = Poly::zero(dim);
        for (c, e) in terms {
            if e.len() != dim {
                return Err(PolyError::DimensionMismatch {
                    expected: dim,
                    found: e.len(),
                });
            }
            p.add_term(Monomial::new(e), c);
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.parts.is_empty()
    }

    /// Highest degree with a nonzero part.
    pub fn degree(&self) -> Option<u32> {
        self.parts.keys().next_back().copied()
    }

    /// Lowest degree with a nonzero part.
    pub fn min_degree(&self) -> Option<u32> {
        self.parts.keys().next().copied()
    }

    pub fn parts(&self) -> impl Iterator<Item = &HomoPoly<T>> {
        self.parts.values()
    }

    /// Homogeneous part of degree `j`.
    pub fn part(&self, j: u32) -> HomoPoly<T> {
        self.parts
            .get(&j)
            .cloned()
            .unwrap_or_else(|| HomoPoly::zero(self.dim, j))
    }

    /// All terms, descending graded-lex order.
    pub fn terms(&self) -> Vec<(Monomial, T)> {
        let mut out = Vec::new();
        for h in self.parts.values().rev() {
            for (m, c) in h.terms().rev() {
                out.push((m.clone(), c.clone()));
            }
        }
        out
    }

    pub fn coeff(&self, exps: &[u32]) -> T {
        let d: u32 = exps.iter().sum();
        self.parts
            .get(&d)
            .map(|h| h.coeff(exps))
            .unwrap_or_else(T::zero)
    }

    pub(crate) fn add_term(&mut self, m: Monomial, c: T) {
        assert_eq!(m.dim(), self.dim, "dimension mismatch");
        let d = m.degree();
        let h = self
            .parts
            .entry(d)
            .or_insert_with(|| HomoPoly::zero(self.dim, d));
        h.add_term(m, c);
        if h.is_zero() {
            self.parts.remove(&d);
        }
    }

    pub fn add_homo(&mut self, h: &HomoPoly<T>) {
        assert_eq!(h.dim(), self.dim, "dimension mismatch");
        for (m, c) in h.terms() {
            self.add_term(m.clone(), c.clone());
        }
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut out = Poly::zero(self.dim);
        for h in self.parts.values() {
            out.add_homo(&h.scale(s));
        }
        out
    }

    /// Product truncated to degrees `<= max_deg`.
    pub fn mul_trunc(&self, other: &Self, max_deg: u32) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut out = Poly::zero(self.dim);
        for (da, a) in &self.parts {
            for (db, b) in &other.parts {
                if da + db <= max_deg {
                    out.add_homo(&a.mul(b));
                }
            }
        }
        out
    }

    /// Degree-`j` part of the product, without forming the rest.
    pub fn mul_part(&self, other: &Self, j: u32) -> HomoPoly<T> {
        let mut out = HomoPoly::zero(self.dim, j);
        for (da, a) in &self.parts {
            if *da > j {
                continue;
            }
            if let Some(b) = other.parts.get(&(j - da)) {
                out = out.add(&a.mul(b));
            }
        }
        out
    }

    /// Projection onto degree `j`.
    pub fn project(&self, j: u32) -> Self {
        Poly::from_homo(self.part(j))
    }

    /// Projection onto degrees `<= j`.
    pub fn project_le(&self, j: u32) -> Self {
        Poly {
            dim: self.dim,
            parts: self
                .parts
                .range(..=j)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Projection onto degrees `>= j`.
    pub fn project_ge(&self, j: u32) -> Self {
        Poly {
            dim: self.dim,
            parts: self
                .parts
                .range(j..)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    pub fn laplacian(&self) -> Self {
        let mut out = Poly::zero(self.dim);
        for h in self.parts.values() {
            out.add_homo(&h.laplacian());
        }
        out
    }

    pub fn partial(&self, i: usize) -> Self {
        let mut out = Poly::zero(self.dim);
        for h in self.parts.values() {
            out.add_homo(&h.partial(i));
        }
        out
    }

    pub fn eval(&self, x: &[T]) -> T {
        let mut acc = T::zero();
        for h in self.parts.values() {
            acc += h.eval(x);
        }
        acc
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.parts.values().map(|h| h.eval_f64(x)).sum()
    }

    pub fn gradient_f64(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|i| self.partial(i).eval_f64(x)).collect()
    }

    pub fn reflect(&self, axis: usize) -> Self {
        let mut out = Poly::zero(self.dim);
        for h in self.parts.values() {
            out.add_homo(&h.reflect(axis));
        }
        out
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Poly<U> {
        let mut out = Poly::zero(self.dim);
        for h in self.parts.values() {
            out.add_homo(&h.map(&f));
        }
        out
    }

    pub fn to_f64(&self) -> Poly<f64> {
        self.map(|c| c.to_f64())
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.parts
            .values()
            .map(|h| h.max_abs_coeff())
            .fold(0.0, f64::max)
    }

    /// Taylor shift: the polynomial `h -> p(x0 + h)`.
    pub fn translate(&self, x0: &[T]) -> Self {
        assert_eq!(x0.len(), self.dim, "dimension mismatch");
        let shifted: Vec<Poly<T>> = (0..self.dim)
            .map(|i| &Poly::constant(self.dim, x0[i].clone()) + &Poly::var(self.dim, i))
            .collect();
        self.compose(&shifted)
    }

    /// Linear change of variables `y -> p(M y)`, i.e. `x_i = sum_j M[i][j] y_j`.
    pub fn substitute_linear(&self, m: &[Vec<T>]) -> Self {
        let lin: Vec<Poly<T>> = m
            .iter()
            .map(|row| Poly::from_homo(HomoPoly::linear(row)))
            .collect();
        self.compose(&lin)
    }

    /// Substitute `x_i -> g_i` for all variables.
    pub fn compose(&self, g: &[Poly<T>]) -> Self {
        assert_eq!(g.len(), self.dim, "dimension mismatch");
        let out_dim = g.first().map(|p| p.dim).unwrap_or(self.dim);
        let max_e = self
            .parts
            .values()
            .flat_map(|h| {
                h.terms()
                    .map(|(m, _)| m.exps().iter().copied().max().unwrap_or(0))
            })
            .max()
            .unwrap_or(0);
        let powers: Vec<Vec<Poly<T>>> = g
            .iter()
            .map(|gi| {
                let mut v = vec![Poly::constant(out_dim, T::one())];
                for e in 1..=max_e as usize {
                    let next = &v[e - 1] * gi;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = Poly::zero(out_dim);
        for h in self.parts.values() {
            for (m, c) in h.terms() {
                let mut t = Poly::constant(out_dim, c.clone());
                for (i, &e) in m.exps().iter().enumerate() {
                    if e > 0 {
                        t = &t * &powers[i][e as usize];
                    }
                }
                out = &out + &t;
            }
        }
        out
    }
}

impl Poly<BigRational> {
    /// Convenience constructor from integer coefficients.
    pub fn from_ints(dim: usize, terms: &[(i64, &[u32])]) -> Result<Self, PolyError> {
        Poly::from_terms(
            dim,
            terms
                .iter()
                .map(|(c, e)| (BigRational::from_integer((*c).into()), e.to_vec())),
        )
    }

    /// Convenience constructor from `(num, den, exps)` triples.
    pub fn from_fracs(dim: usize, terms: &[(i64, i64, &[u32])]) -> Result<Self, PolyError> {
        Poly::from_terms(
            dim,
            terms
                .iter()
                .map(|(n, d, e)| (BigRational::new((*n).into(), (*d).into()), e.to_vec())),
        )
    }
}

impl<T: Scalar> Add for &Poly<T> {
    type Output = Poly<T>;
    fn add(self, rhs: &Poly<T>) -> Poly<T> {
        let mut out = self.clone();
        for h in rhs.parts.values() {
            out.add_homo(h);
        }
        out
    }
}

impl<T: Scalar> Sub for &Poly<T> {
    type Output = Poly<T>;
    fn sub(self, rhs: &Poly<T>) -> Poly<T> {
        self + &(-rhs)
    }
}

impl<T: Scalar> Neg for &Poly<T> {
    type Output = Poly<T>;
    fn neg(self) -> Poly<T> {
        self.scale(&-T::one())
    }
}

impl<T: Scalar> Mul for &Poly<T> {
    type Output = Poly<T>;
    fn mul(self, rhs: &Poly<T>) -> Poly<T> {
        self.mul_trunc(rhs, u32::MAX)
    }
}

impl<T: Scalar> fmt::Display for Poly<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c})*{m}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn projections() {
        let p =
            Poly::from_ints(2, &[(1, &[0, 0]), (2, &[1, 0]), (3, &[1, 1]), (4, &[0, 3])]).unwrap();
        assert_eq!(p.project(2), Poly::from_ints(2, &[(3, &[1, 1])]).unwrap());
        assert_eq!(
            p.project_le(1),
            Poly::from_ints(2, &[(1, &[0, 0]), (2, &[1, 0])]).unwrap()
        );
        assert_eq!(p.degree(), Some(3));
        assert_eq!(p.min_degree(), Some(0));
    }

    #[test]
    fn translate_matches_evaluation() {
        let p = Poly::from_ints(2, &[(1, &[0, 3]), (-3, &[2, 1]), (5, &[1, 0])]).unwrap();
        let x0 = [q(1, 3), q(-2, 5)];
        let t = p.translate(&x0);
        let h = [q(3, 7), q(1, 2)];
        let direct = p.eval(&[x0[0].clone() + h[0].clone(), x0[1].clone() + h[1].clone()]);
        assert_eq!(t.eval(&h), direct);
    }

    #[test]
    fn linear_substitution() {
        let p = Poly::from_ints(2, &[(1, &[1, 1])]).unwrap();
        let m = vec![vec![q(1, 1), q(1, 1)], vec![q(1, 1), q(-1, 1)]];
        let s = p.substitute_linear(&m);
        assert_eq!(
            s,
            Poly::from_ints(2, &[(1, &[2, 0]), (-1, &[0, 2])]).unwrap()
        );
    }

    #[test]
    fn mul_part_agrees_with_full_product() {
        let a = Poly::from_ints(2, &[(1, &[0, 1]), (2, &[2, 0]), (-1, &[1, 2])]).unwrap();
        let b = Poly::from_ints(2, &[(3, &[1, 0]), (1, &[0, 2])]).unwrap();
        let full = &a * &b;
        for j in 0..6 {
            assert_eq!(Poly::from_homo(a.mul_part(&b, j)), full.project(j));
        }
    }
}
