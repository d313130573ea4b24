use crate::scalar::Scalar;

/// Solve the square system `a x = b` by Gaussian elimination with
/// largest-magnitude pivoting. Returns `None` for singular systems.
pub fn solve_square<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Option<Vec<T>> {
    let n = b.len();
    assert!(
        a.len() == n && a.iter().all(|r| r.len() == n),
        "square system expected"
    );
    let scale = a
        .iter()
        .flat_map(|r| r.iter().map(|c| c.to_f64().abs()))
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..n {
        let piv = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| {
                a[r][col]
                    .to_f64()
                    .abs()
                    .partial_cmp(&a[s][col].to_f64().abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })?;
        if a[piv][col].is_negligible(1e-13 * scale) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        let p = a[col][col].clone();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone() / p.clone();
            for c in col..n {
                let v = a[col][c].clone() * f.clone();
                a[r][c] -= v;
            }
            let v = b[col].clone() * f;
            b[r] -= v;
        }
    }
    let mut x = vec![T::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for c in r + 1..n {
            s -= a[r][c].clone() * x[c].clone();
        }
        x[r] = s / a[r][r].clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn exact_solve() {
        let a = vec![vec![q(2), q(1)], vec![q(1), q(3)]];
        let x = solve_square(a, vec![q(3), q(5)]).unwrap();
        assert_eq!(
            x,
            vec![
                BigRational::new(4.into(), 5.into()),
                BigRational::new(7.into(), 5.into())
            ]
        );
    }

    #[test]
    fn singular_detected() {
        let a = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert!(solve_square(a, vec![q(1), q(1)]).is_none());
        let af = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_square(af, vec![1.0, 1.0]).is_none());
    }
}
