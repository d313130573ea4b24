use super::{monomial::count_of_degree, HomoPoly, Monomial};
use crate::scalar::Scalar;

/// Parity under the reflection `x_axis -> -x_axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

/// Harmonic extension of a polynomial `g` that does not depend on `x_axis`.
///
/// The odd extension vanishes on `{x_axis = 0}` with normal derivative `g`,
/// the even one equals `g` there with vanishing normal derivative.
pub fn harmonic_extension<T: Scalar>(g: &HomoPoly<T>, axis: usize, parity: Parity) -> HomoPoly<T> {
    debug_assert!(g.terms().all(|(m, _)| m.get(axis) == 0));
    let start = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let mut out = HomoPoly::zero(g.dim(), g.degree() + start);
    let mut lap = g.clone();
    let mut i = 0u32;
    while !lap.is_zero() {
        let p = start + 2 * i;
        let mut term = lap.mul_var_pow(axis, p).scale(&T::inv_factorial(p));
        if i % 2 == 1 {
            term = term.neg();
        }
        out = out.add(&term);
        lap = lap.laplacian();
        i += 1;
    }
    out
}

/// Basis of homogeneous harmonic polynomials of the given degree and parity
/// with respect to `x_axis`.
pub fn harmonic_basis<T: Scalar>(
    dim: usize,
    degree: u32,
    axis: usize,
    parity: Parity,
) -> Vec<HomoPoly<T>> {
    let tangential_degree = match parity {
        Parity::Even => degree,
        Parity::Odd => {
            if degree == 0 {
                return Vec::new();
            }
            degree - 1
        }
    };
    tangential_monomials(dim, tangential_degree, axis)
        .into_iter()
        .map(|m| {
            let mut g = HomoPoly::zero(dim, tangential_degree);
            g.add_term(m, T::one());
            harmonic_extension(&g, axis, parity)
        })
        .collect()
}

/// Monomials of degree `d` in all variables except `x_axis`.
fn tangential_monomials(dim: usize, d: u32, axis: usize) -> Vec<Monomial> {
    if dim == 1 {
        return if d == 0 {
            vec![Monomial::one(1)]
        } else {
            Vec::new()
        };
    }
    Monomial::all_of_degree(dim - 1, d)
        .into_iter()
        .map(|m| {
            let mut e = m.exps().to_vec();
            e.insert(axis, 0);
            Monomial::new(e)
        })
        .collect()
}

/// Dimension of the space of degree-`d` harmonic polynomials in `R^n`.
pub fn harmonic_dimension(n: usize, d: u32) -> usize {
    let lower = if d >= 2 { count_of_degree(n, d - 2) } else { 0 };
    count_of_degree(n, d) - lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    #[test]
    fn odd_basis_vanishes_and_is_harmonic() {
        for dim in 2..=4 {
            for deg in 1..=6 {
                let odd: Vec<HomoPoly<BigRational>> =
                    harmonic_basis(dim, deg, dim - 1, Parity::Odd);
                let even: Vec<HomoPoly<BigRational>> =
                    harmonic_basis(dim, deg, dim - 1, Parity::Even);
                assert_eq!(odd.len() + even.len(), harmonic_dimension(dim, deg));
                for h in odd.iter().chain(&even) {
                    assert!(h.is_harmonic(), "{h}");
                    assert_eq!(h.degree(), deg);
                }
                for h in &odd {
                    assert_eq!(h.reflect(dim - 1), h.neg());
                }
                for h in &even {
                    assert_eq!(&h.reflect(dim - 1), h);
                }
            }
        }
    }

    #[test]
    fn planar_cubic_matches_imaginary_part() {
        let b: Vec<HomoPoly<BigRational>> = harmonic_basis(2, 3, 1, Parity::Odd);
        assert_eq!(b.len(), 1);
        // x1^2 x2 - x2^3 / 3 = -(1/3) Im (x1 + i x2)^3 scaled.
        let expect = HomoPoly::from_terms(
            2,
            3,
            vec![
                (BigRational::from_integer(1.into()), vec![2, 1]),
                (BigRational::new((-1).into(), 3.into()), vec![0, 3]),
            ],
        )
        .unwrap();
        assert_eq!(b[0], expect);
    }
}
