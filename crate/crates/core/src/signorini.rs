//! Homogeneous solutions of the thin obstacle problem on the hyperplane
//! `L = {x_axis = 0}`: harmonic off `L`, nonnegative on `L`,
//! `Delta q <= 0` and `q Delta q = 0`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::poly::{harmonic_basis, harmonic_extension, HomoPoly, Parity, Poly};
use crate::scalar::{rational_text, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SignoriniError {
    #[error("structure mismatch: {0}")]
    StructureMismatch(String),
    #[error("admissibility of non-integer homogeneity is unknown in dimension {0}")]
    UnknownAdmissibility(usize),
    #[error("operation requires a polynomial representation")]
    NotPolynomial,
}

/// Concrete form of a candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    /// A polynomial on all of `R^n`.
    Polynomial { poly: Poly<BigRational> },
    /// `q(x) = Q(x', |x_axis|)` for a polynomial `Q`.
    HalfSpace { upper: Poly<BigRational> },
    /// Planar `A r^lambda cos(lambda theta + phase)` with `theta in [0, pi]`
    /// measured from `+x_1` in the upper half-plane, reflected evenly.
    Polar { amplitude: f64, phase: f64 },
}

/// Parity with respect to the reflection across `L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReflectionParity {
    Even,
    Odd,
    Mixed,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignoriniCandidate {
    pub dim: usize,
    /// Index of the coordinate normal to `L`.
    pub axis: usize,
    #[serde(with = "rational_str")]
    pub lambda: BigRational,
    pub repr: Representation,
}

mod rational_str {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&crate::scalar::rational_text(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let s = String::deserialize(d)?;
        crate::scalar::parse_rational(&s).ok_or_else(|| serde::de::Error::custom("bad rational"))
    }
}

impl SignoriniCandidate {
    /// Polynomial candidate; `lambda` is taken from the top degree.
    pub fn polynomial(poly: Poly<BigRational>, axis: usize) -> Self {
        let lambda = BigRational::from_integer(poly.degree().unwrap_or(0).into());
        SignoriniCandidate {
            dim: poly.dim(),
            axis,
            lambda,
            repr: Representation::Polynomial { poly },
        }
    }

    /// Even candidate `Q(x', |x_axis|)`.
    pub fn half_space(upper: Poly<BigRational>, axis: usize) -> Self {
        let lambda = BigRational::from_integer(upper.degree().unwrap_or(0).into());
        SignoriniCandidate {
            dim: upper.dim(),
            axis,
            lambda,
            repr: Representation::HalfSpace { upper },
        }
    }

    /// Planar analytic candidate with `L = {x_2 = 0}`.
    pub fn polar(lambda: BigRational, amplitude: f64, phase: f64) -> Self {
        SignoriniCandidate {
            dim: 2,
            axis: 1,
            lambda,
            repr: Representation::Polar { amplitude, phase },
        }
    }

    pub fn lambda_f64(&self) -> f64 {
        Scalar::to_f64(&self.lambda)
    }

    pub fn label(&self) -> String {
        match &self.repr {
            Representation::Polynomial { poly } => format!("polynomial {poly}"),
            Representation::HalfSpace { upper } => {
                format!("Q(x', |x_{}|) with Q = {upper}", self.axis + 1)
            }
            Representation::Polar { amplitude, phase } => format!(
                "{amplitude} r^{} cos({} theta + {phase})",
                rational_text(&self.lambda),
                rational_text(&self.lambda)
            ),
        }
    }

    pub fn parity(&self) -> ReflectionParity {
        match &self.repr {
            Representation::Polynomial { poly } => {
                if poly.is_zero() {
                    return ReflectionParity::Zero;
                }
                let r = poly.reflect(self.axis);
                if &r == poly {
                    ReflectionParity::Even
                } else if r == -poly {
                    ReflectionParity::Odd
                } else {
                    ReflectionParity::Mixed
                }
            }
            Representation::HalfSpace { upper } if upper.is_zero() => ReflectionParity::Zero,
            _ => ReflectionParity::Even,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Representation::Polynomial { poly } => poly.eval_f64(x),
            Representation::HalfSpace { upper } => {
                let mut y = x.to_vec();
                y[self.axis] = y[self.axis].abs();
                upper.eval_f64(&y)
            }
            Representation::Polar { amplitude, phase } => {
                let lam = self.lambda_f64();
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    return 0.0;
                }
                let th = x[1].abs().atan2(x[0]);
                amplitude * r.powf(lam) * (lam * th + phase).cos()
            }
        }
    }

    /// One-sided gradient; on `L` the limit from `x_axis > 0` is returned.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.repr {
            Representation::Polynomial { poly } => poly.gradient_f64(x),
            Representation::HalfSpace { upper } => {
                let mut y = x.to_vec();
                let s = if x[self.axis] < 0.0 { -1.0 } else { 1.0 };
                y[self.axis] = y[self.axis].abs();
                let mut g = upper.gradient_f64(&y);
                g[self.axis] *= s;
                g
            }
            Representation::Polar { amplitude, phase } => {
                let lam = self.lambda_f64();
                let r = x[0].hypot(x[1]);
                if r == 0.0 {
                    return vec![0.0, 0.0];
                }
                let s = if x[1] < 0.0 { -1.0 } else { 1.0 };
                let th = x[1].abs().atan2(x[0]);
                let a = lam * th + phase;
                let dr = amplitude * lam * r.powf(lam - 1.0) * a.cos();
                let dth = -amplitude * lam * r.powf(lam - 1.0) * a.sin();
                let gx = dr * th.cos() - dth * th.sin();
                let gy = dr * th.sin() + dth * th.cos();
                vec![gx, s * gy]
            }
        }
    }

    /// Jump of the normal derivative across `L` at a point of `L`, i.e. the
    /// density of the singular part of `Delta q` there.
    pub fn normal_jump(&self, x: &[f64]) -> f64 {
        match &self.repr {
            Representation::Polynomial { .. } => 0.0,
            _ => {
                let mut y = x.to_vec();
                y[self.axis] = 0.0;
                2.0 * self.gradient(&y)[self.axis]
            }
        }
    }
}

/// Split a polynomial into even and odd parts under `x_axis -> -x_axis`.
pub fn even_odd_split<T: Scalar>(q: &Poly<T>, axis: usize) -> (Poly<T>, Poly<T>) {
    let r = q.reflect(axis);
    let half = T::one() / T::from_int(2);
    ((q + &r).scale(&half), (q - &r).scale(&half))
}

/// Candidate-level split; analytic and half-space forms are even.
pub fn split_candidate(q: &SignoriniCandidate) -> (SignoriniCandidate, SignoriniCandidate) {
    match &q.repr {
        Representation::Polynomial { poly } => {
            let (e, o) = even_odd_split(poly, q.axis);
            let mk = |p| SignoriniCandidate {
                dim: q.dim,
                axis: q.axis,
                lambda: q.lambda.clone(),
                repr: Representation::Polynomial { poly: p },
            };
            (mk(e), mk(o))
        }
        _ => {
            let zero = SignoriniCandidate {
                dim: q.dim,
                axis: q.axis,
                lambda: q.lambda.clone(),
                repr: Representation::Polynomial {
                    poly: Poly::zero(q.dim),
                },
            };
            (q.clone(), zero)
        }
    }
}

/// How a property was established.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckMethod {
    Exact,
    Sampled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignoriniReport {
    pub harmonic_off_l: bool,
    pub nonneg_on_l: bool,
    pub sign_across_l: bool,
    pub complementarity: bool,
    pub harmonic_residual: f64,
    pub min_on_l: f64,
    pub max_jump: f64,
    pub harmonic_method: CheckMethod,
    pub sign_method: CheckMethod,
}

impl SignoriniReport {
    pub fn passes(&self) -> bool {
        self.harmonic_off_l && self.nonneg_on_l && self.sign_across_l && self.complementarity
    }
}

/// Sample of `L` intersected with the unit sphere.
///
/// In the plane this is `[-1, 1]` at spacing `1e-3`; in higher dimension,
/// 1000 quasi-random points of the unit sphere of `L`.
fn l_samples(dim: usize, axis: usize) -> (Vec<Vec<f64>>, CheckMethod) {
    if dim == 1 {
        return (vec![vec![0.0]], CheckMethod::Exact);
    }
    if dim == 2 {
        let other = 1 - axis;
        let pts = (0..=2000)
            .map(|i| {
                let mut x = vec![0.0; 2];
                x[other] = -1.0 + i as f64 * 1e-3;
                x
            })
            .collect();
        return (pts, CheckMethod::Sampled);
    }
    let m = dim - 1;
    let pts = (1..=1000)
        .map(|i| {
            let mut y: Vec<f64> = (0..m)
                .map(|d| gaussian_like(halton(i, PRIMES[d])))
                .collect();
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            y.iter_mut().for_each(|v| *v /= nrm);
            y.insert(axis, 0.0);
            y
        })
        .collect();
    (pts, CheckMethod::Sampled)
}

const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn halton(mut i: u64, b: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= b as f64;
        r += f * (i % b) as f64;
        i /= b;
    }
    r
}

fn gaussian_like(u: f64) -> f64 {
    // Logit map: symmetric, heavy enough tails to cover the sphere.
    let u = u.clamp(1e-9, 1.0 - 1e-9);
    (u / (1.0 - u)).ln()
}

/// Check the thin obstacle conditions for a candidate.
pub fn verify_signorini(q: &SignoriniCandidate, tol: f64) -> SignoriniReport {
    let (samples, sampled) = l_samples(q.dim, q.axis);
    let (harmonic_off_l, harmonic_residual, harmonic_method) = match &q.repr {
        Representation::Polynomial { poly } => {
            let h = poly.laplacian().is_zero();
            (
                h,
                if h {
                    0.0
                } else {
                    poly.laplacian().max_abs_coeff()
                },
                CheckMethod::Exact,
            )
        }
        Representation::HalfSpace { upper } => {
            let h = upper.laplacian().is_zero();
            (
                h,
                if h {
                    0.0
                } else {
                    upper.laplacian().max_abs_coeff()
                },
                CheckMethod::Exact,
            )
        }
        Representation::Polar { .. } => {
            let res = polar_laplacian_residual(q);
            (res <= tol, res, CheckMethod::Sampled)
        }
    };
    let mut min_on_l = f64::INFINITY;
    let mut max_jump = f64::NEG_INFINITY;
    let mut compl: f64 = 0.0;
    for x in &samples {
        let v = q.eval(x);
        let j = q.normal_jump(x);
        min_on_l = min_on_l.min(v);
        max_jump = max_jump.max(j);
        compl = compl.max((v * j).abs());
    }
    let exact_poly = matches!(q.repr, Representation::Polynomial { .. });
    SignoriniReport {
        harmonic_off_l,
        nonneg_on_l: min_on_l >= -tol,
        sign_across_l: max_jump <= tol,
        complementarity: compl <= tol,
        harmonic_residual,
        min_on_l,
        max_jump,
        harmonic_method,
        sign_method: if exact_poly && q.dim == 1 {
            CheckMethod::Exact
        } else {
            sampled
        },
    }
}

/// Max fourth-order finite-difference Laplacian over sample points of the
/// unit circle away from `L`.
fn polar_laplacian_residual(q: &SignoriniCandidate) -> f64 {
    let d = 1e-3;
    let mut worst: f64 = 0.0;
    let n = 2000;
    for i in 0..n {
        let th = PI * (i as f64 + 0.5) / n as f64;
        for s in [1.0, -1.0] {
            let x = [th.cos(), s * th.sin()];
            if x[1].abs() < 6.0 * d {
                continue;
            }
            let mut lap = 0.0;
            for a in 0..2 {
                let f = |k: f64| {
                    let mut y = x;
                    y[a] += k * d;
                    q.eval(&y)
                };
                lap += (-f(2.0) + 16.0 * f(1.0) - 30.0 * f(0.0) + 16.0 * f(-1.0) - f(-2.0))
                    / (12.0 * d * d);
            }
            worst = worst.max(lap.abs());
        }
    }
    worst
}

fn binomial(n: u32, k: u32) -> BigInt {
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// `Re (x_1 + i x_2)^m` and `Im (x_1 + i x_2)^m` as exact polynomials.
pub fn complex_power(m: u32) -> (Poly<BigRational>, Poly<BigRational>) {
    let mut re = Poly::zero(2);
    let mut im = Poly::zero(2);
    for k in 0..=m {
        let c = BigRational::from_integer(binomial(m, k));
        let term = Poly::from_homo(HomoPoly::monomial(c, &[m - k, k]));
        match k % 4 {
            0 => re = &re + &term,
            1 => im = &im + &term,
            2 => re = &re - &term,
            _ => im = &im - &term,
        }
    }
    (re, im)
}

/// Admissible planar homogeneities: nonnegative integers and `2m + 3/2`.
pub fn is_admissible_2d(lambda: &BigRational) -> bool {
    if lambda.is_negative() {
        return false;
    }
    if lambda.is_integer() {
        return true;
    }
    let shifted = lambda - BigRational::new(3.into(), 2.into());
    !shifted.is_negative() && shifted.is_integer() && shifted.to_integer().is_even()
}

/// Generators of the planar solution cones for `L = {x_2 = 0}`.
pub fn catalog_2d(lambda: &BigRational) -> Vec<SignoriniCandidate> {
    if !is_admissible_2d(lambda) {
        return Vec::new();
    }
    if lambda.is_integer() {
        let m = lambda.to_integer().to_u32().expect("moderate homogeneity");
        if m == 0 {
            return vec![SignoriniCandidate::polynomial(
                Poly::constant(2, BigRational::one()),
                1,
            )];
        }
        let (re, im) = complex_power(m);
        let mut out = vec![SignoriniCandidate::polynomial(im.clone(), 1)];
        if m % 2 == 0 {
            out.push(SignoriniCandidate::polynomial(re, 1));
        } else {
            let mut c = SignoriniCandidate::half_space(-&im, 1);
            c.lambda = lambda.clone();
            out.push(c);
        }
        return out;
    }
    vec![SignoriniCandidate::polar(lambda.clone(), 1.0, 0.0)]
}

/// Catalog in dimension `n` for integer homogeneity: the odd space (all of
/// it is admissible) plus the even harmonic basis elements that pass the
/// sampled sign check on `L`.
pub fn catalog(
    dim: usize,
    lambda: &BigRational,
) -> Result<Vec<SignoriniCandidate>, SignoriniError> {
    if dim == 2 {
        return Ok(catalog_2d(lambda));
    }
    if !lambda.is_integer() {
        return Err(SignoriniError::UnknownAdmissibility(dim));
    }
    if lambda.is_negative() {
        return Ok(Vec::new());
    }
    let m = lambda.to_integer().to_u32().expect("moderate homogeneity");
    let axis = dim - 1;
    let mut out = Vec::new();
    for h in harmonic_basis::<BigRational>(dim, m, axis, Parity::Odd) {
        out.push(SignoriniCandidate::polynomial(Poly::from_homo(h), axis));
    }
    for h in harmonic_basis::<BigRational>(dim, m, axis, Parity::Even) {
        let c = SignoriniCandidate::polynomial(Poly::from_homo(h), axis);
        if verify_signorini(&c, 1e-12).passes() {
            out.push(c);
        }
    }
    Ok(out)
}

/// Singular set `{x in L : q = |grad q| = 0}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularSet {
    /// True when `q` and its gradient vanish identically on `L`.
    pub whole_line: bool,
    /// Exact real roots on `L` (planar case), as coordinates along `L`.
    pub exact_roots: Option<Vec<f64>>,
    /// Sampled points of `L` below the resolution-scaled thresholds.
    pub grid_points: Vec<Vec<f64>>,
}

/// Sampling of `L` within the box `[-half_width, half_width]^n` at spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineSampling {
    pub half_width: f64,
    pub spacing: f64,
}

pub fn singular_set(
    q: &SignoriniCandidate,
    grid: LineSampling,
) -> Result<SingularSet, SignoriniError> {
    let Representation::Polynomial { poly } = &q.repr else {
        return Err(SignoriniError::NotPolynomial);
    };
    let h = grid.spacing;
    let scale = poly.max_abs_coeff().max(1.0);
    let grads: Vec<Poly<f64>> = (0..q.dim).map(|i| poly.partial(i).to_f64()).collect();
    let pf = poly.to_f64();
    let mut grid_points = Vec::new();
    let n_side = (2.0 * grid.half_width / h).round() as i64;
    let others: Vec<usize> = (0..q.dim).filter(|&i| i != q.axis).collect();
    let mut idx = vec![0i64; others.len()];
    loop {
        let mut x = vec![0.0; q.dim];
        for (k, &d) in others.iter().enumerate() {
            x[d] = -grid.half_width + idx[k] as f64 * h;
        }
        let v = pf.eval_f64(&x).abs();
        let g = grads
            .iter()
            .map(|p| p.eval_f64(&x).powi(2))
            .sum::<f64>()
            .sqrt();
        if v <= scale * h * h && g <= scale * h {
            grid_points.push(x);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                break;
            }
            idx[k] += 1;
            if idx[k] <= n_side {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == idx.len() {
            break;
        }
    }
    let on_l = |p: &Poly<BigRational>| -> Vec<BigRational> {
        // Univariate restriction to L (planar only), coefficients by power.
        let deg = p.degree().unwrap_or(0) as usize;
        let mut c = vec![BigRational::zero(); deg + 1];
        for (m, v) in p.terms() {
            if m.get(q.axis) == 0 {
                c[m.get(1 - q.axis) as usize] += v;
            }
        }
        c
    };
    let (whole_line, exact_roots) = if q.dim == 2 {
        let a = on_l(poly);
        let b = on_l(&poly.partial(1 - q.axis));
        let c = on_l(&poly.partial(q.axis));
        let g = upoly_gcd(&upoly_gcd(&a, &b), &c);
        if g.iter().all(|v| v.is_zero()) {
            (true, None)
        } else {
            (false, Some(real_roots(&g)))
        }
    } else {
        let all_zero = poly.terms().iter().all(|(m, _)| m.get(q.axis) >= 2);
        (all_zero, None)
    };
    Ok(SingularSet {
        whole_line,
        exact_roots,
        grid_points,
    })
}

fn trim(p: &mut Vec<BigRational>) {
    while p.len() > 1 && p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn is_zero_poly(p: &[BigRational]) -> bool {
    p.iter().all(|c| c.is_zero())
}

/// Monic gcd of univariate polynomials (coefficients by increasing power).
fn upoly_gcd(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    trim(&mut a);
    trim(&mut b);
    while !is_zero_poly(&b) {
        let r = upoly_rem(&a, &b);
        a = b;
        b = r;
    }
    if is_zero_poly(&a) {
        return a;
    }
    let lead = a.last().cloned().expect("nonempty");
    a.iter().map(|c| c / &lead).collect()
}

fn upoly_rem(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    let lead = b[db].clone();
    while r.len() > db && !is_zero_poly(&r) {
        let dr = r.len() - 1;
        let f = r[dr].clone() / lead.clone();
        for i in 0..=db {
            let v = f.clone() * b[i].clone();
            r[dr - db + i] -= v;
        }
        r.pop();
        trim(&mut r);
        if r.len() <= db {
            break;
        }
    }
    trim(&mut r);
    r
}

/// Real roots of a univariate polynomial; zero roots are split off exactly,
/// the rest come from companion-matrix eigenvalues.
fn real_roots(p: &[BigRational]) -> Vec<f64> {
    let mut p = p.to_vec();
    trim(&mut p);
    let mut roots = Vec::new();
    let zeros = p.iter().take_while(|c| c.is_zero()).count();
    if zeros > 0 {
        roots.push(0.0);
        p.drain(..zeros);
    }
    let deg = p.len().saturating_sub(1);
    if deg >= 1 {
        let lead = Scalar::to_f64(&p[deg]);
        let mut m = DMatrix::<f64>::zeros(deg, deg);
        for i in 1..deg {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..deg {
            m[(i, deg - 1)] = -Scalar::to_f64(&p[i]) / lead;
        }
        for z in m.complex_eigenvalues().iter() {
            if z.im.abs() <= 1e-9 * (1.0 + z.re.abs()) {
                roots.push(z.re);
            }
        }
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}

/// Result of the odd-homogeneity structure check.
#[derive(Clone, Debug, PartialEq)]
pub struct OddStructure {
    pub q0: Poly<BigRational>,
    /// `q_1` with `-x_n (q_0 + x_n^2 q_1)` harmonic.
    pub q1: Poly<BigRational>,
    /// Whether the input equals its harmonic completion.
    pub input_harmonic: bool,
    pub q0_check: CheckMethod,
}

/// For an even candidate `q = Q(x', |x_n|)` of odd homogeneity, extract
/// `q_0 = -Q/x_n` on `{x_n = 0}`, check `q_0 >= 0` and compute the
/// harmonic completion `q_1`.
pub fn odd_structure_check(q: &SignoriniCandidate) -> Result<OddStructure, SignoriniError> {
    let upper = match &q.repr {
        Representation::HalfSpace { upper } => upper.clone(),
        Representation::Polynomial { poly } => {
            let (e, o) = even_odd_split(poly, q.axis);
            if !o.is_zero() {
                return Err(SignoriniError::StructureMismatch(
                    "candidate is not even".into(),
                ));
            }
            e
        }
        Representation::Polar { .. } => return Err(SignoriniError::NotPolynomial),
    };
    let axis = q.axis;
    let dim = q.dim;
    let lin: Vec<BigRational> = (0..dim)
        .map(|i| {
            if i == axis {
                BigRational::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let mut s = Poly::zero(dim);
    for part in upper.parts() {
        let d = part
            .divide_by_linear(&lin)
            .map_err(|_| SignoriniError::StructureMismatch("Q does not vanish on L".into()))?;
        s.add_homo(&d.neg());
    }
    if s.reflect(axis) != s {
        return Err(SignoriniError::StructureMismatch(
            "Q/x_n is not even in x_n".into(),
        ));
    }
    let mut q0 = Poly::zero(dim);
    for (m, c) in s.terms() {
        if m.get(axis) == 0 {
            q0 = &q0 + &Poly::from_homo(HomoPoly::monomial(c, m.exps()));
        }
    }
    let (ok, method) = nonneg_on_l(&q0, axis);
    if !ok {
        return Err(SignoriniError::StructureMismatch(
            "q_0 takes negative values".into(),
        ));
    }
    let mut completion = Poly::zero(dim);
    for part in q0.parts() {
        completion.add_homo(&harmonic_extension(&part.neg(), axis, Parity::Odd));
    }
    let input_harmonic = completion == upper;
    // q_1 = (-completion / x_n - q_0) / x_n^2
    let mut q1 = Poly::zero(dim);
    for part in completion.parts() {
        let d = part
            .divide_by_linear(&lin)
            .expect("odd extension vanishes on L")
            .neg();
        for (m, c) in d.terms() {
            if m.get(axis) >= 2 {
                let e = m.with(axis, m.get(axis) - 2);
                q1 = &q1 + &Poly::from_homo(HomoPoly::monomial(c.clone(), e.exps()));
            }
        }
    }
    Ok(OddStructure {
        q0,
        q1,
        input_harmonic,
        q0_check: method,
    })
}

fn nonneg_on_l(p: &Poly<BigRational>, axis: usize) -> (bool, CheckMethod) {
    if p.is_zero() {
        return (true, CheckMethod::Exact);
    }
    let dim = p.dim();
    if dim == 2 {
        // Homogeneous restriction c t^d: exact sign from the two rays.
        let homogeneous = p.min_degree() == p.degree();
        if homogeneous {
            let other = 1 - axis;
            let mut x = vec![BigRational::zero(); 2];
            x[other] = BigRational::one();
            let a = p.eval(&x);
            x[other] = -BigRational::one();
            let b = p.eval(&x);
            return (!a.is_negative() && !b.is_negative(), CheckMethod::Exact);
        }
    }
    let (samples, method) = l_samples(dim, axis);
    let pf = p.to_f64();
    let ok = samples.iter().all(|x| pf.eval_f64(x) >= -1e-12);
    (ok, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn split_examples() {
        let p = Poly::from_ints(2, &[(1, &[1, 1]), (1, &[2, 0])]).unwrap();
        let (e, o) = even_odd_split(&p, 1);
        assert_eq!(e, Poly::from_ints(2, &[(1, &[2, 0])]).unwrap());
        assert_eq!(o, Poly::from_ints(2, &[(1, &[1, 1])]).unwrap());
        let x2 = Poly::from_ints(2, &[(1, &[0, 1])]).unwrap();
        let (e, o) = even_odd_split(&x2, 1);
        assert!(e.is_zero());
        assert_eq!(o, x2);
    }

    #[test]
    fn verify_examples() {
        let cubic = Poly::from_ints(2, &[(1, &[0, 3]), (-3, &[2, 1])]).unwrap();
        assert!(verify_signorini(&SignoriniCandidate::polynomial(cubic, 1), 1e-8).passes());
        let sq = Poly::from_ints(2, &[(1, &[2, 0]), (-1, &[0, 2])]).unwrap();
        assert!(verify_signorini(&SignoriniCandidate::polynomial(sq, 1), 1e-8).passes());
        let three_halves = SignoriniCandidate::polar(q(3, 2), 1.0, 0.0);
        assert!(verify_signorini(&three_halves, 1e-8).passes());
        // r^{1/2} cos(theta/2) violates the sign condition.
        let half = SignoriniCandidate::polar(q(1, 2), 1.0, 0.0);
        let r = verify_signorini(&half, 1e-8);
        assert!(r.harmonic_off_l && !r.sign_across_l);
        let x1 = Poly::from_ints(2, &[(1, &[1, 0])]).unwrap();
        assert!(!verify_signorini(&SignoriniCandidate::polynomial(x1, 1), 1e-8).nonneg_on_l);
    }

    #[test]
    fn catalog_contents() {
        let two = catalog_2d(&q(2, 1));
        assert!(two
            .iter()
            .any(|c| matches!(&c.repr, Representation::Polynomial { poly }
            if *poly == Poly::from_ints(2, &[(1, &[2, 0]), (-1, &[0, 2])]).unwrap())));
        assert!(two
            .iter()
            .any(|c| matches!(&c.repr, Representation::Polynomial { poly }
            if *poly == Poly::from_ints(2, &[(2, &[1, 1])]).unwrap())));
        assert!(catalog_2d(&q(5, 4)).is_empty());
        assert!(catalog_2d(&q(1, 2)).is_empty());
        assert_eq!(catalog_2d(&q(7, 2)).len(), 1);
        assert!(matches!(
            catalog(3, &q(3, 2)),
            Err(SignoriniError::UnknownAdmissibility(3))
        ));
    }

    #[test]
    fn higher_dimensional_catalog_passes() {
        for c in catalog(3, &q(2, 1)).unwrap() {
            assert!(verify_signorini(&c, 1e-8).passes());
        }
        assert!(!catalog(3, &q(2, 1)).unwrap().is_empty());
    }

    #[test]
    fn singular_sets() {
        let grid = LineSampling {
            half_width: 1.0,
            spacing: 0.01,
        };
        let x1sq = SignoriniCandidate::polynomial(Poly::from_ints(2, &[(1, &[2, 0])]).unwrap(), 1);
        let s = singular_set(&x1sq, grid).unwrap();
        assert_eq!(s.exact_roots, Some(vec![0.0]));
        assert!(!s.whole_line);
        let cubic = SignoriniCandidate::polynomial(
            Poly::from_ints(2, &[(1, &[0, 3]), (-3, &[2, 1])]).unwrap(),
            1,
        );
        assert_eq!(
            singular_set(&cubic, grid).unwrap().exact_roots,
            Some(vec![0.0])
        );
        let zero = SignoriniCandidate::polynomial(Poly::zero(2), 1);
        let s = singular_set(&zero, grid).unwrap();
        assert!(s.whole_line);
        assert_eq!(s.grid_points.len(), 201);
        // (x1 - x2)(x1 + ...) restricted: q = x1^2 - 1/4 x2^2 ... roots only at 0
        let shifted = SignoriniCandidate::polynomial(
            Poly::from_fracs(2, &[(1, 1, &[2, 0]), (-1, 4, &[0, 0])]).unwrap(),
            1,
        );
        assert_eq!(
            singular_set(&shifted, grid).unwrap().exact_roots,
            Some(vec![])
        );
    }

    #[test]
    fn odd_structure() {
        let c = SignoriniCandidate::half_space(Poly::from_ints(2, &[(-1, &[2, 1])]).unwrap(), 1);
        let s = odd_structure_check(&c).unwrap();
        assert_eq!(s.q0, Poly::from_ints(2, &[(1, &[2, 0])]).unwrap());
        assert_eq!(s.q1, Poly::constant(2, q(-1, 3)));
        assert!(!s.input_harmonic);
        let bad = SignoriniCandidate::half_space(Poly::from_ints(2, &[(1, &[2, 1])]).unwrap(), 1);
        assert!(matches!(
            odd_structure_check(&bad),
            Err(SignoriniError::StructureMismatch(_))
        ));
        let cube = SignoriniCandidate::half_space(Poly::from_ints(2, &[(-1, &[0, 3])]).unwrap(), 1);
        let s = odd_structure_check(&cube).unwrap();
        assert!(s.q0.is_zero() && s.q1.is_zero());
        let cat = catalog_2d(&q(3, 1));
        let even = cat
            .iter()
            .find(|c| matches!(c.repr, Representation::HalfSpace { .. }))
            .unwrap();
        let s = odd_structure_check(even).unwrap();
        assert!(s.input_harmonic);
        assert_eq!(s.q0, Poly::from_ints(2, &[(3, &[2, 0])]).unwrap());
    }
}
