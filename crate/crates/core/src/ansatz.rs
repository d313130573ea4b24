//! Exact construction of the polynomial Ansatz `P_k = pi_{<=k+1}(f0/2 A^2)`.
//!
//! `A = x_nu + sum_j p_j / x_nu + x_nu * sum_m R_m`, where the `p_j` are odd
//! harmonic polynomials and the corrections `R_m` are chosen degree by degree
//! so that `Delta P_k` matches the Taylor polynomial of the right-hand side
//! up to order `k - 1`.

use std::fmt;
use std::str::FromStr;

use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::poly::{harmonic_basis, solve_square, HomoPoly, Monomial, Parity, Poly, PolyError};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnsatzError {
    #[error("order must be at least 2, got {0}")]
    InvalidOrder(u32),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("expected {expected} polynomials p_3..p_k, found {found}")]
    WrongCount { expected: usize, found: usize },
    #[error("p_{index} has degree {found}, expected {index}")]
    DegreeMismatch { index: u32, found: u32 },
    #[error("p_{0} is not harmonic")]
    NotHarmonic(u32),
    #[error("p_{0} is not odd in x_nu")]
    NotOdd(u32),
    #[error("right-hand side must be positive at the base point, got {0}")]
    NonPositiveRhs(f64),
    #[error("the map q -> Delta(x_nu^2 q / 2) is singular in degree {0}")]
    SingularDelta(u32),
    #[error("axis {0} out of range")]
    BadAxis(usize),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("stored corrections disagree with the recomputed ones")]
    Inconsistent,
}

/// Signed coordinate axis `+-e_i` (0-based index).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Axis {
    pub index: usize,
    pub negative: bool,
}

impl Axis {
    pub fn positive(index: usize) -> Self {
        Axis {
            index,
            negative: false,
        }
    }

    /// `+e_n` for dimension `n`.
    pub fn last(dim: usize) -> Self {
        Axis::positive(dim - 1)
    }

    pub fn flipped(self) -> Self {
        Axis {
            index: self.index,
            negative: !self.negative,
        }
    }

    pub fn sign<T: Scalar>(&self) -> T {
        if self.negative {
            -T::one()
        } else {
            T::one()
        }
    }

    /// Coefficient vector of the linear form `x . nu`.
    pub fn linear_form<T: Scalar>(&self, dim: usize) -> Vec<T> {
        let mut v = vec![T::zero(); dim];
        v[self.index] = self.sign();
        v
    }

    pub fn unit_vector(&self, dim: usize) -> Vec<f64> {
        self.linear_form::<f64>(dim)
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}",
            if self.negative { "-" } else { "+" },
            self.index + 1
        )
    }
}

impl FromStr for Axis {
    type Err = String;
    /// Parses `2`, `+2`, `-2`, `e2` or `-e2` (1-based).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (negative, rest) = match s.strip_prefix('-') {
            Some(r) => (true, r),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        let rest = rest.strip_prefix('e').unwrap_or(rest);
        let i: usize = rest.parse().map_err(|_| format!("bad axis `{s}`"))?;
        if i == 0 {
            return Err("axes are 1-based".into());
        }
        Ok(Axis {
            index: i - 1,
            negative,
        })
    }
}

impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Right-hand side data at the base point.
#[derive(Clone, Debug, PartialEq)]
pub enum Rhs<T> {
    /// `f = 1`.
    Unit,
    /// Taylor polynomial `F(h)` of `f(x0 + h)`, in the local coordinate `h`.
    Taylor(Poly<T>),
}

impl<T: Scalar> Rhs<T> {
    pub fn value_at_base(&self, dim: usize) -> T {
        match self {
            Rhs::Unit => T::one(),
            Rhs::Taylor(f) => f.coeff(&vec![0; dim]),
        }
    }

    /// Degree-`j` part of the Taylor data.
    pub fn part(&self, dim: usize, j: u32) -> HomoPoly<T> {
        match self {
            Rhs::Unit if j == 0 => HomoPoly::monomial(T::one(), &vec![0; dim]),
            Rhs::Unit => HomoPoly::zero(dim, j),
            Rhs::Taylor(f) => f.part(j),
        }
    }

    /// Taylor polynomial truncated at degree `j`.
    pub fn truncated(&self, dim: usize, j: u32) -> Poly<T> {
        match self {
            Rhs::Unit => Poly::constant(dim, T::one()),
            Rhs::Taylor(f) => f.project_le(j),
        }
    }
}

/// Validated Ansatz data.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzInput<T> {
    dim: usize,
    order: u32,
    nu: Axis,
    p: Vec<HomoPoly<T>>,
    rhs: Rhs<T>,
}

impl<T: Scalar> AnsatzInput<T> {
    /// `p` holds `p_3, ..., p_k` in order; `k = order`.
    pub fn new(
        dim: usize,
        order: u32,
        nu: Axis,
        p: Vec<HomoPoly<T>>,
        rhs: Rhs<T>,
    ) -> Result<Self, AnsatzError> {
        if order < 2 {
            return Err(AnsatzError::InvalidOrder(order));
        }
        if nu.index >= dim {
            return Err(AnsatzError::BadAxis(nu.index));
        }
        let expected = (order - 2) as usize;
        if p.len() != expected {
            return Err(AnsatzError::WrongCount {
                expected,
                found: p.len(),
            });
        }
        for (i, pj) in p.iter().enumerate() {
            let j = i as u32 + 3;
            if pj.dim() != dim {
                return Err(AnsatzError::DimensionMismatch {
                    expected: dim,
                    found: pj.dim(),
                });
            }
            if pj.degree() != j {
                return Err(AnsatzError::DegreeMismatch {
                    index: j,
                    found: pj.degree(),
                });
            }
            if !pj.is_harmonic() {
                return Err(AnsatzError::NotHarmonic(j));
            }
            if pj.reflect(nu.index) != pj.neg() {
                return Err(AnsatzError::NotOdd(j));
            }
        }
        if let Rhs::Taylor(f) = &rhs {
            if f.dim() != dim {
                return Err(AnsatzError::DimensionMismatch {
                    expected: dim,
                    found: f.dim(),
                });
            }
        }
        let f0 = rhs.value_at_base(dim);
        if f0 <= T::zero() {
            return Err(AnsatzError::NonPositiveRhs(f0.to_f64()));
        }
        Ok(AnsatzInput {
            dim,
            order,
            nu,
            p,
            rhs,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn order(&self) -> u32 {
        self.order
    }
    pub fn nu(&self) -> Axis {
        self.nu
    }
    pub fn p_list(&self) -> &[HomoPoly<T>] {
        &self.p
    }
    pub fn rhs(&self) -> &Rhs<T> {
        &self.rhs
    }

    /// `p_j` for `3 <= j <= k`.
    pub fn p(&self, j: u32) -> &HomoPoly<T> {
        &self.p[(j - 3) as usize]
    }

    /// The same data with one more polynomial `p_{k+1}` appended.
    pub fn extend(&self, next: HomoPoly<T>) -> Result<Self, AnsatzError> {
        let mut p = self.p.clone();
        p.push(next);
        AnsatzInput::new(self.dim, self.order + 1, self.nu, p, self.rhs.clone())
    }

    /// The same data truncated to order `k - 1`.
    pub fn truncate(&self) -> Result<Self, AnsatzError> {
        if self.order <= 2 {
            return Err(AnsatzError::InvalidOrder(self.order - 1));
        }
        let p = self.p[..self.p.len() - 1].to_vec();
        AnsatzInput::new(self.dim, self.order - 1, self.nu, p, self.rhs.clone())
    }

    /// Data with `nu` replaced by `-nu` and every `p_j` negated, which
    /// describes the same blow-up.
    pub fn flipped(&self) -> Self {
        AnsatzInput {
            dim: self.dim,
            order: self.order,
            nu: self.nu.flipped(),
            p: self.p.iter().map(|q| q.neg()).collect(),
            rhs: self.rhs.clone(),
        }
    }
}

/// The map `q -> Delta(x_nu^2 q / 2)` on homogeneous polynomials.
pub fn delta_map<T: Scalar>(q: &HomoPoly<T>, nu: Axis) -> HomoPoly<T> {
    q.mul_var_pow(nu.index, 2)
        .scale(&(T::one() / T::from_int(2)))
        .laplacian()
}

/// Inverse of [`delta_map`] in a fixed degree.
pub fn delta_inverse<T: Scalar>(r: &HomoPoly<T>, nu: Axis) -> Result<HomoPoly<T>, AnsatzError> {
    let dim = r.dim();
    let deg = r.degree();
    if r.is_zero() {
        return Ok(HomoPoly::zero(dim, deg));
    }
    let basis = Monomial::all_of_degree(dim, deg);
    let n = basis.len();
    let images: Vec<HomoPoly<T>> = basis
        .iter()
        .map(|m| delta_map(&HomoPoly::monomial(T::one(), m.exps()), nu))
        .collect();
    let mut a = vec![vec![T::zero(); n]; n];
    for (row, m) in basis.iter().enumerate() {
        for (col, img) in images.iter().enumerate() {
            a[row][col] = img.coeff(m.exps());
        }
    }
    let b: Vec<T> = basis.iter().map(|m| r.coeff(m.exps())).collect();
    let x = solve_square(a, b).ok_or(AnsatzError::SingularDelta(deg))?;
    let mut out = HomoPoly::zero(dim, deg);
    for (m, c) in basis.into_iter().zip(x) {
        out.add_term(m, c);
    }
    Ok(out)
}

/// The constructed Ansatz.
#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzFamily<T> {
    input: AnsatzInput<T>,
    r: Vec<HomoPoly<T>>,
    a: Poly<T>,
    half_a2: Poly<T>,
    p: Poly<T>,
}

impl<T: Scalar> AnsatzFamily<T> {
    /// Build `R_1, ..., R_{k-1}`, `A` and `P_k`.
    ///
    /// At step `m` the degree-`m` part of `Delta(f0/2 A^2)` is recomputed
    /// from the current `A` (with `p_{m+1}/x_nu` already included) and the
    /// defect is removed by `x_nu R_m`.
    pub fn build(input: AnsatzInput<T>) -> Result<Self, AnsatzError> {
        let dim = input.dim;
        let k = input.order;
        let nu = input.nu;
        let lin = nu.linear_form::<T>(dim);
        let xnu = Poly::from_homo(HomoPoly::linear(&lin));
        let f0 = input.rhs.value_at_base(dim);
        let half_f0 = f0.clone() / T::from_int(2);
        let mut a = xnu.clone();
        let mut r_list = Vec::with_capacity(k as usize - 1);
        for m in 1..k {
            if m + 1 >= 3 {
                let q = input.p(m + 1).divide_by_linear(&lin)?;
                a.add_homo(&q);
            }
            let sq = a.mul_part(&a, m + 2).scale(&half_f0);
            let defect = input.rhs.part(dim, m).sub(&sq.laplacian());
            let rm = delta_inverse(&defect, nu)?.scale(&(T::one() / (T::from_int(2) * f0.clone())));
            let lift = rm.mul(&HomoPoly::linear(&lin));
            a.add_homo(&lift);
            r_list.push(rm);
        }
        let half_a2 = (&a * &a).scale(&half_f0);
        let p = half_a2.project_le(k + 1);
        Ok(AnsatzFamily {
            input,
            r: r_list,
            a,
            half_a2,
            p,
        })
    }

    pub fn input(&self) -> &AnsatzInput<T> {
        &self.input
    }
    pub fn order(&self) -> u32 {
        self.input.order
    }
    pub fn dim(&self) -> usize {
        self.input.dim
    }
    pub fn nu(&self) -> Axis {
        self.input.nu
    }
    /// `R_1, ..., R_{k-1}`; `R_m` has degree `m`.
    pub fn r_list(&self) -> &[HomoPoly<T>] {
        &self.r
    }
    pub fn a(&self) -> &Poly<T> {
        &self.a
    }
    /// `f0/2 A^2`, untruncated.
    pub fn half_a2(&self) -> &Poly<T> {
        &self.half_a2
    }
    /// `P_k`.
    pub fn p(&self) -> &Poly<T> {
        &self.p
    }
    pub fn f0(&self) -> T {
        self.input.rhs.value_at_base(self.input.dim)
    }

    /// `pi_{<=k-1}(Delta P_k)` minus the Taylor target; zero when exact.
    pub fn exactness_residual(&self) -> Poly<T> {
        let k = self.input.order;
        let lap = self.p.laplacian().project_le(k - 1);
        &lap - &self.input.rhs.truncated(self.input.dim, k - 1)
    }

    /// `pi_{<=k}(P_k - P_{k-1} - f0 p_k)` for the given lower-order family.
    pub fn increment_residual(&self, lower: &AnsatzFamily<T>) -> Poly<T> {
        let k = self.input.order;
        let pk = Poly::from_homo(self.input.p(k).scale(&self.f0()));
        let diff = &(&self.p - &lower.p) - &pk;
        diff.project_le(k)
    }

    /// Smallest `C` with `P_k(x) >= -C |x|^{k+2}` over a sample of `B_radius`.
    pub fn near_positivity_constant(&self, radius: f64, per_axis: usize) -> f64 {
        let pf = self.p.to_f64();
        let k = self.input.order as i32;
        let mut worst: f64 = 0.0;
        for_ball_samples(self.input.dim, radius, per_axis, |x| {
            let r = norm(x);
            if r > 0.0 {
                let v = pf.eval_f64(x);
                if v < 0.0 {
                    worst = worst.max(-v / r.powi(k + 2));
                }
            }
        });
        worst
    }

    /// Range of `|d_nu A|` over a sample of `B_radius`; the comparability
    /// `|A|/2 <= |d_nu(A^2/2)| <= 2|A|` holds when it lies in `[1/2, 2]`.
    pub fn gradient_comparability(&self, radius: f64, per_axis: usize) -> GradientComparability {
        let da = self.a.partial(self.input.nu.index).to_f64();
        let s = if self.input.nu.negative { -1.0 } else { 1.0 };
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for_ball_samples(self.input.dim, radius, per_axis, |x| {
            let v = (s * da.eval_f64(x)).abs();
            lo = lo.min(v);
            hi = hi.max(v);
        });
        GradientComparability {
            radius,
            min_ratio: lo,
            max_ratio: hi,
            holds: lo >= 0.5 && hi <= 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientComparability {
    pub radius: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub holds: bool,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn for_ball_samples(dim: usize, radius: f64, per_axis: usize, mut f: impl FnMut(&[f64])) {
    let per_axis = per_axis.max(2);
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        for d in 0..dim {
            x[d] = -radius + 2.0 * radius * idx[d] as f64 / (per_axis - 1) as f64;
        }
        if norm(&x) <= radius {
            f(&x);
        }
        let mut d = 0;
        loop {
            if d == dim {
                return;
            }
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

/// Random admissible `(p_3, ..., p_k)`: combinations of the odd harmonic
/// basis with small rational coefficients.
pub fn random_admissible<R: Rng>(
    rng: &mut R,
    dim: usize,
    order: u32,
    nu: Axis,
    bound: i64,
) -> Vec<HomoPoly<BigRational>> {
    (3..=order)
        .map(|j| {
            let basis: Vec<HomoPoly<BigRational>> = harmonic_basis(dim, j, nu.index, Parity::Odd);
            let mut p = HomoPoly::zero(dim, j);
            for b in basis {
                let num = rng.gen_range(-bound..=bound);
                let den = rng.gen_range(1..=bound.max(1));
                if num != 0 {
                    p = p.add(&b.scale(&BigRational::new(num.into(), den.into())));
                }
            }
            p
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRepr {
    schema_version: u32,
    dim: usize,
    order: u32,
    nu: Axis,
    p_list: Vec<Poly<BigRational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rhs_taylor: Option<Poly<BigRational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r_list: Option<Vec<Poly<BigRational>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<Poly<BigRational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Poly<BigRational>>,
}

impl AnsatzFamily<BigRational> {
    pub fn to_json(&self) -> String {
        let repr = FamilyRepr {
            schema_version: 1,
            dim: self.dim(),
            order: self.order(),
            nu: self.nu(),
            p_list: self
                .input
                .p
                .iter()
                .map(|h| Poly::from_homo(h.clone()))
                .collect(),
            rhs_taylor: match &self.input.rhs {
                Rhs::Unit => None,
                Rhs::Taylor(f) => Some(f.clone()),
            },
            r_list: Some(self.r.iter().map(|h| Poly::from_homo(h.clone())).collect()),
            a: Some(self.a.clone()),
            p: Some(self.p.clone()),
        };
        serde_json::to_string_pretty(&repr).expect("serializable")
    }

    /// Load a family; the corrections are recomputed and checked against any
    /// stored values.
    pub fn from_json(s: &str) -> Result<Self, AnsatzError> {
        let repr: FamilyRepr = serde_json::from_str(s)
            .map_err(|e| AnsatzError::Poly(PolyError::Parse(e.to_string())))?;
        let mut p_list = Vec::new();
        for (i, p) in repr.p_list.iter().enumerate() {
            let j = i as u32 + 3;
            if p.is_zero() {
                p_list.push(HomoPoly::zero(repr.dim, j));
                continue;
            }
            if p.min_degree() != p.degree() {
                return Err(AnsatzError::DegreeMismatch {
                    index: j,
                    found: p.degree().unwrap_or(0),
                });
            }
            p_list.push(p.part(p.degree().unwrap_or(0)));
        }
        let rhs = match repr.rhs_taylor {
            None => Rhs::Unit,
            Some(f) => Rhs::Taylor(f),
        };
        let input = AnsatzInput::new(repr.dim, repr.order, repr.nu, p_list, rhs)?;
        let fam = AnsatzFamily::build(input)?;
        if let Some(stored) = repr.r_list {
            let ours: Vec<Poly<BigRational>> =
                fam.r.iter().map(|h| Poly::from_homo(h.clone())).collect();
            if stored != ours {
                return Err(AnsatzError::Inconsistent);
            }
        }
        if let Some(stored) = repr.p {
            if stored != fam.p {
                return Err(AnsatzError::Inconsistent);
            }
        }
        Ok(fam)
    }
}

/// Parse right-hand side Taylor data from the polynomial text format.
pub fn parse_rhs_text(s: &str) -> Result<Rhs<BigRational>, AnsatzError> {
    let p: Poly<BigRational> = crate::poly::from_text(s)?;
    Ok(Rhs::Taylor(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn p3() -> HomoPoly<BigRational> {
        HomoPoly::from_ints(2, 3, &[(1, &[0, 3]), (-3, &[2, 1])]).unwrap()
    }

    #[test]
    fn delta_inverse_of_x1_squared() {
        let x1sq = HomoPoly::from_ints(2, 2, &[(1, &[2, 0])]).unwrap();
        let inv = delta_inverse(&x1sq, Axis::last(2)).unwrap();
        let expect =
            HomoPoly::from_terms(2, 2, vec![(q(1, 1), vec![2, 0]), (q(-1, 6), vec![0, 2])])
                .unwrap();
        assert_eq!(inv, expect);
        assert_eq!(delta_map(&inv, Axis::last(2)), x1sq);
    }

    #[test]
    fn order_two_is_half_square() {
        let inp = AnsatzInput::new(3, 2, Axis::last(3), vec![], Rhs::Unit).unwrap();
        let fam = AnsatzFamily::build(inp).unwrap();
        assert_eq!(
            fam.p(),
            &Poly::from_fracs(3, &[(1, 2, &[0, 0, 2])]).unwrap()
        );
        assert!(fam.r_list()[0].is_zero());
    }

    #[test]
    fn planar_cubic_corrections() {
        let inp = AnsatzInput::new(2, 3, Axis::last(2), vec![p3()], Rhs::Unit).unwrap();
        let fam = AnsatzFamily::build(inp).unwrap();
        assert!(fam.r_list()[0].is_zero());
        let r2 = HomoPoly::from_ints(2, 2, &[(-24, &[2, 0]), (4, &[0, 2])]).unwrap();
        assert_eq!(fam.r_list()[1], r2);
        assert!(fam.exactness_residual().is_zero());
    }

    #[test]
    fn rejects_bad_inputs() {
        let even = HomoPoly::from_ints(2, 3, &[(1, &[3, 0]), (-3, &[1, 2])]).unwrap();
        assert_eq!(
            AnsatzInput::new(2, 3, Axis::last(2), vec![even], Rhs::Unit),
            Err(AnsatzError::NotOdd(3))
        );
        let nonharm = HomoPoly::from_ints(2, 3, &[(1, &[0, 3])]).unwrap();
        assert_eq!(
            AnsatzInput::new(2, 3, Axis::last(2), vec![nonharm], Rhs::Unit),
            Err(AnsatzError::NotHarmonic(3))
        );
        assert_eq!(
            AnsatzInput::<BigRational>::new(2, 1, Axis::last(2), vec![], Rhs::Unit),
            Err(AnsatzError::InvalidOrder(1))
        );
        let neg = Rhs::Taylor(Poly::constant(2, q(-1, 1)));
        assert!(matches!(
            AnsatzInput::new(2, 2, Axis::last(2), vec![], neg),
            Err(AnsatzError::NonPositiveRhs(_))
        ));
    }

    #[test]
    fn linear_rhs_correction() {
        let f = Poly::from_ints(2, &[(1, &[0, 0]), (1, &[1, 0])]).unwrap();
        let inp = AnsatzInput::new(2, 2, Axis::last(2), vec![], Rhs::Taylor(f)).unwrap();
        let fam = AnsatzFamily::build(inp).unwrap();
        assert_eq!(
            fam.r_list()[0],
            HomoPoly::from_terms(2, 1, vec![(q(1, 2), vec![1, 0])]).unwrap()
        );
        assert!(fam.exactness_residual().is_zero());
    }

    #[test]
    fn json_round_trip() {
        let inp = AnsatzInput::new(2, 3, Axis::last(2), vec![p3()], Rhs::Unit).unwrap();
        let fam = AnsatzFamily::build(inp).unwrap();
        let back = AnsatzFamily::from_json(&fam.to_json()).unwrap();
        assert_eq!(back, fam);
        let tampered = fam.to_json().replace("\"-24\"", "\"-48\"");
        assert_eq!(
            AnsatzFamily::from_json(&tampered),
            Err(AnsatzError::Inconsistent)
        );
    }

    #[test]
    fn axis_parse() {
        assert_eq!("2".parse::<Axis>().unwrap(), Axis::positive(1));
        assert_eq!(
            "-e3".parse::<Axis>().unwrap(),
            Axis {
                index: 2,
                negative: true
            }
        );
        assert!("0".parse::<Axis>().is_err());
        assert_eq!(Axis::positive(1).flipped().to_string(), "-2");
    }
}
