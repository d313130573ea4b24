use std::cmp::Ordering;
use std::fmt;

/// Exponent vector of a monomial `x_1^{a_1} ... x_n^{a_n}`.
///
/// Ordered graded-lexicographically: total degree first, then the exponent
/// of `x_1`, then `x_2`, and so on.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    /// The monomial `x_i` (0-based index).
    pub fn var(dim: usize, i: usize) -> Self {
        let mut e = vec![0; dim];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn with(&self, i: usize, e: u32) -> Monomial {
        let mut v = self.0.clone();
        v[i] = e;
        Monomial(v)
    }

    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    /// All monomials of the given degree in `dim` variables, descending order.
    pub fn all_of_degree(dim: usize, degree: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; dim];
        fill(&mut out, &mut cur, 0, degree);
        out
    }

    pub fn eval_f64(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&e, &xi)| xi.powi(e as i32))
            .product()
    }
}

fn fill(out: &mut Vec<Monomial>, cur: &mut Vec<u32>, i: usize, left: u32) {
    let n = cur.len();
    if n == 0 {
        if left == 0 {
            out.push(Monomial(vec![]));
        }
        return;
    }
    if i == n - 1 {
        cur[i] = left;
        out.push(Monomial(cur.clone()));
        return;
    }
    for e in (0..=left).rev() {
        cur[i] = e;
        fill(out, cur, i + 1, left - e);
    }
    cur[i] = 0;
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Number of monomials of degree `d` in `n` variables.
pub fn count_of_degree(n: usize, d: u32) -> usize {
    if n == 0 {
        return usize::from(d == 0);
    }
    let mut num: u128 = 1;
    let mut den: u128 = 1;
    for i in 1..n as u128 {
        num *= d as u128 + i;
        den *= i;
    }
    (num / den) as usize
}
