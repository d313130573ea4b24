//! Height `H`, Dirichlet energy `D`, truncated frequency, Weiss and Monneau
//! quantities, with drift fits for their almost-monotonicity.
//!
//! `H(r, w) = r^{1-n} int_{dB_r} w^2` and `D(r, w) = r^{2-n} int_{B_r} |grad w|^2`
//! are computed by polar (n = 2) or spherical (n = 3) quadrature on a field
//! that can be evaluated off the nodes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::GridField;
use crate::poly::Poly;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("radius {r} outside the admissible range [{min}, {max}]")]
    RadiusOutOfRange { r: f64, min: f64, max: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// A real function on a region of `R^n` with value and gradient.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    /// Value and gradient at `x`.
    fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 3]);
    fn value(&self, x: &[f64]) -> f64 {
        self.eval_grad(x).0
    }
    /// Largest radius `r` for which `B_r(x0)` lies in the domain.
    fn reach(&self, x0: &[f64]) -> f64;
    /// Grid spacing, when the field is sampled.
    fn spacing(&self) -> Option<f64> {
        None
    }
}

/// Lagrange cubic weights and their derivatives for nodes `-1, 0, 1, 2`.
fn cubic_weights(t: f64) -> ([f64; 4], [f64; 4]) {
    let (a, b, c, d) = (t + 1.0, t, t - 1.0, t - 2.0);
    let w = [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ];
    let dw = [
        -(c * d + b * d + b * c) / 6.0,
        (c * d + a * d + a * c) / 2.0,
        -(b * d + a * d + a * b) / 2.0,
        (b * c + a * c + a * b) / 6.0,
    ];
    (w, dw)
}

impl Field for GridField<f64> {
    fn dim(&self) -> usize {
        GridField::dim(self)
    }

    /// Tensor-product cubic interpolation; exact for polynomials of degree
    /// at most three in each variable.
    fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 3]) {
        let dim = GridField::dim(self);
        let h = GridField::spacing(self);
        let shape = self.shape();
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        let mut dw = [[0.0; 4]; 3];
        for d in 0..dim {
            let s = (x[d] - self.origin()[d]) / h;
            let last = shape[d] as i64 - 1;
            let i = (s.floor() as i64).clamp(1, last - 2);
            let (a, b) = cubic_weights(s - i as f64);
            w[d] = a;
            dw[d] = b.map(|v| v / h);
            base[d] = (i - 1) as usize;
        }
        let vals = self.values();
        let sy = shape[0];
        let mut v = 0.0;
        let mut g = [0.0; 3];
        if dim == 2 {
            for b in 0..4 {
                let row = (base[1] + b) * sy + base[0];
                let (mut rv, mut rd) = (0.0, 0.0);
                for a in 0..4 {
                    let u = vals[row + a];
                    rv += w[0][a] * u;
                    rd += dw[0][a] * u;
                }
                v += w[1][b] * rv;
                g[0] += w[1][b] * rd;
                g[1] += dw[1][b] * rv;
            }
        } else {
            let sz = shape[0] * shape[1];
            for c in 0..4 {
                let (mut pv, mut px, mut py) = (0.0, 0.0, 0.0);
                for b in 0..4 {
                    let row = (base[2] + c) * sz + (base[1] + b) * sy + base[0];
                    let (mut rv, mut rd) = (0.0, 0.0);
                    for a in 0..4 {
                        let u = vals[row + a];
                        rv += w[0][a] * u;
                        rd += dw[0][a] * u;
                    }
                    pv += w[1][b] * rv;
                    px += w[1][b] * rd;
                    py += dw[1][b] * rv;
                }
                v += w[2][c] * pv;
                g[0] += w[2][c] * px;
                g[1] += w[2][c] * py;
                g[2] += dw[2][c] * pv;
            }
        }
        (v, g)
    }

    fn reach(&self, x0: &[f64]) -> f64 {
        self.distance_to_boundary(x0)
    }

    fn spacing(&self) -> Option<f64> {
        Some(GridField::spacing(self))
    }
}

/// Polynomial evaluated at `x - center`.
#[derive(Clone, Debug)]
pub struct PolyField {
    pub poly: Poly<f64>,
    pub center: Vec<f64>,
}

impl PolyField {
    pub fn new(poly: Poly<f64>, center: Vec<f64>) -> Self {
        PolyField { poly, center }
    }
}

impl Field for PolyField {
    fn dim(&self) -> usize {
        self.poly.dim()
    }
    fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 3]) {
        let n = self.poly.dim();
        let mut y = [0.0; 3];
        for d in 0..n {
            y[d] = x[d] - self.center[d];
        }
        let g = self.poly.gradient_f64(&y[..n]);
        let mut out = [0.0; 3];
        out[..n].copy_from_slice(&g);
        (self.poly.eval_f64(&y[..n]), out)
    }
    fn reach(&self, _x0: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Synthetic field given by a closure returning value and gradient.
pub struct FnField<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> (f64, [f64; 3]) + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 3]) {
        (self.f)(x)
    }
    fn reach(&self, _x0: &[f64]) -> f64 {
        f64::INFINITY
    }
}

/// Pointwise difference `a - b`.
pub struct Difference<'a> {
    pub a: &'a dyn Field,
    pub b: &'a dyn Field,
}

impl Field for Difference<'_> {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn eval_grad(&self, x: &[f64]) -> (f64, [f64; 3]) {
        let (va, ga) = self.a.eval_grad(x);
        let (vb, gb) = self.b.eval_grad(x);
        (va - vb, [ga[0] - gb[0], ga[1] - gb[1], ga[2] - gb[2]])
    }
    fn reach(&self, x0: &[f64]) -> f64 {
        self.a.reach(x0).min(self.b.reach(x0))
    }
    fn spacing(&self) -> Option<f64> {
        match (self.a.spacing(), self.b.spacing()) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=m {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// Directions and weights integrating over the unit sphere `S^{n-1}`.
pub fn sphere_rule(dim: usize, resolution: usize) -> Vec<([f64; 3], f64)> {
    use std::f64::consts::PI;
    if dim == 2 {
        let m = resolution.max(8);
        (0..m)
            .map(|j| {
                let th = 2.0 * PI * (j as f64 + 0.5) / m as f64;
                ([th.cos(), th.sin(), 0.0], 2.0 * PI / m as f64)
            })
            .collect()
    } else {
        let mt = resolution.max(8);
        let mp = 2 * mt;
        let mut out = Vec::with_capacity(mt * mp);
        for (z, wz) in gauss_legendre(mt) {
            let s = (1.0 - z * z).sqrt();
            for j in 0..mp {
                let ph = 2.0 * PI * (j as f64 + 0.5) / mp as f64;
                out.push(([s * ph.cos(), s * ph.sin(), z], wz * 2.0 * PI / mp as f64));
            }
        }
        out
    }
}

/// Quadrature resolution for a ball of radius `r`.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Resolution {
    angular: usize,
    radial: usize,
}

fn resolution(dim: usize, r: f64, h: Option<f64>) -> Resolution {
    let cells = h.map_or(16.0, |h| r / h);
    if dim == 2 {
        Resolution {
            angular: ((8.0 * std::f64::consts::PI * cells).ceil() as usize).clamp(64, 8192),
            radial: (cells.ceil() as usize).clamp(8, 256),
        }
    } else {
        Resolution {
            angular: ((2.0 * cells).ceil() as usize).clamp(16, 96),
            radial: (cells.ceil() as usize).clamp(8, 64),
        }
    }
}

fn check_radius(v: &dyn Field, x0: &[f64], r: f64) -> Result<(), DiagnosticsError> {
    if x0.len() != v.dim() {
        return Err(DiagnosticsError::DimensionMismatch {
            expected: v.dim(),
            found: x0.len(),
        });
    }
    let min = v.spacing().map_or(0.0, |h| 4.0 * h);
    let max = v.reach(x0);
    if !(r > 0.0 && r >= min * (1.0 - 1e-12) && r <= max) {
        return Err(DiagnosticsError::RadiusOutOfRange { r, min, max });
    }
    Ok(())
}

fn at(x0: &[f64], r: f64, dir: &[f64; 3]) -> [f64; 3] {
    let mut x = [0.0; 3];
    for d in 0..x0.len() {
        x[d] = x0[d] + r * dir[d];
    }
    x
}

/// `int_{S^{n-1}} g(x0 + r w)^2 dw`.
fn shell_square(v: &dyn Field, x0: &[f64], r: f64, rule: &[([f64; 3], f64)]) -> f64 {
    let n = x0.len();
    let terms: Vec<f64> = rule
        .par_iter()
        .map(|(dir, w)| w * v.value(&at(x0, r, dir)[..n]).powi(2))
        .collect();
    terms.iter().sum()
}

fn shell_grad_square(v: &dyn Field, x0: &[f64], r: f64, rule: &[([f64; 3], f64)]) -> f64 {
    let n = x0.len();
    let terms: Vec<f64> = rule
        .par_iter()
        .map(|(dir, w)| {
            let (_, g) = v.eval_grad(&at(x0, r, dir)[..n]);
            w * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
        })
        .collect();
    // Sequential sum keeps results independent of the thread count.
    terms.iter().sum()
}

/// `H(r, v)` around `x0`.
pub fn compute_h(v: &dyn Field, x0: &[f64], r: f64) -> Result<f64, DiagnosticsError> {
    check_radius(v, x0, r)?;
    let res = resolution(v.dim(), r, v.spacing());
    Ok(shell_square(v, x0, r, &sphere_rule(v.dim(), res.angular)))
}

/// `D(r, v)` around `x0`.
pub fn compute_d(v: &dyn Field, x0: &[f64], r: f64) -> Result<f64, DiagnosticsError> {
    check_radius(v, x0, r)?;
    let n = v.dim();
    let res = resolution(n, r, v.spacing());
    let rule = sphere_rule(n, res.angular);
    let mut acc = 0.0;
    for (s, w) in gauss_legendre(res.radial) {
        let rho = 0.5 * r * (s + 1.0);
        acc += 0.5 * r * w * rho.powi(n as i32 - 1) * shell_grad_square(v, x0, rho, &rule);
    }
    Ok(acc * r.powi(2 - n as i32))
}

/// `(H, D)` at one radius.
pub fn compute_hd(v: &dyn Field, x0: &[f64], r: f64) -> Result<(f64, f64), DiagnosticsError> {
    Ok((compute_h(v, x0, r)?, compute_d(v, x0, r)?))
}

/// `int_{B_b \ B_a} v^2` around `x0`.
pub fn annulus_l2_squared(
    v: &dyn Field,
    x0: &[f64],
    a: f64,
    b: f64,
) -> Result<f64, DiagnosticsError> {
    check_radius(v, x0, b)?;
    let n = v.dim();
    let res = resolution(n, b, v.spacing());
    let rule = sphere_rule(n, res.angular);
    let mut acc = 0.0;
    for (s, w) in gauss_legendre(res.radial) {
        let rho = a + 0.5 * (b - a) * (s + 1.0);
        acc += 0.5 * (b - a) * w * rho.powi(n as i32 - 1) * shell_square(v, x0, rho, &rule);
    }
    Ok(acc)
}

/// Truncated frequency `(D + g r^{2g}) / (H + r^{2g})`, written so that
/// `H = D = 0` returns `g` exactly.
pub fn phi_gamma_from(h: f64, d: f64, r: f64, gamma: f64) -> f64 {
    gamma + (d - gamma * h) / (h + r.powf(2.0 * gamma))
}

pub fn phi_gamma(v: &dyn Field, x0: &[f64], r: f64, gamma: f64) -> Result<f64, DiagnosticsError> {
    if !(gamma > 0.0) {
        return Err(DiagnosticsError::InvalidParameter(
            "gamma must be positive".into(),
        ));
    }
    let (h, d) = compute_hd(v, x0, r)?;
    Ok(phi_gamma_from(h, d, r, gamma))
}

/// Weiss energy `r^{-2l} (D - l H)`.
pub fn weiss_from(h: f64, d: f64, r: f64, lambda: f64) -> f64 {
    r.powf(-2.0 * lambda) * (d - lambda * h)
}

pub fn weiss(v: &dyn Field, x0: &[f64], r: f64, lambda: f64) -> Result<f64, DiagnosticsError> {
    let (h, d) = compute_hd(v, x0, r)?;
    Ok(weiss_from(h, d, r, lambda))
}

/// Monneau quantity `r^{-2k} H`.
pub fn monneau_from(h: f64, r: f64, k: u32) -> f64 {
    h * r.powi(-2 * k as i32)
}

/// `r^{-2k} H(r, w)` at each radius.
pub fn monneau(
    w: &dyn Field,
    x0: &[f64],
    radii: &[f64],
    k: u32,
) -> Result<Vec<f64>, DiagnosticsError> {
    radii
        .iter()
        .map(|&r| Ok(monneau_from(compute_h(w, x0, r)?, r, k)))
        .collect()
}

/// Radii `r_max, r_max 2^{-1/4}, ...` down to `4h`, with `r_max` a third of
/// the distance from `x0` to the boundary.
pub fn geometric_radii(h: f64, reach: f64) -> Vec<f64> {
    let lo = 4.0 * h;
    let mut r = reach / 3.0;
    let q = 2f64.powf(-0.25);
    let mut out = Vec::new();
    while r >= lo * (1.0 - 1e-12) {
        out.push(r);
        r *= q;
    }
    out
}

/// Whether a drift audit is run on the frequency or on the Monneau quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuditMode {
    Phi,
    Monneau,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairViolation {
    pub r_small: f64,
    pub r_large: f64,
    /// `q(r_small) - q(r_large)` before correction.
    pub drop: f64,
}

/// Smallest `C >= 0` making `q(r) + C r^eps` nondecreasing in `r` over
/// consecutive sampled radii.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftFit {
    pub mode: AuditMode,
    pub epsilon: f64,
    pub c_fit: f64,
    /// Largest remaining decrease after correction.
    pub residual: f64,
    pub violations: Vec<PairViolation>,
    /// `(eps, C)` for the sensitivity sweep.
    pub sensitivity: Vec<(f64, f64)>,
}

impl DriftFit {
    /// Constant in the derivative form `q' >= -C' r^{eps - 1}`.
    pub fn derivative_constant(&self) -> f64 {
        self.epsilon * self.c_fit
    }
}

fn drift_constant(pts: &[(f64, f64)], eps: f64) -> f64 {
    pts.windows(2)
        .map(|w| {
            let (ra, qa) = w[0];
            let (rb, qb) = w[1];
            let gap = rb.powf(eps) - ra.powf(eps);
            if qa > qb && gap > 0.0 {
                (qa - qb) / gap
            } else if qa > qb {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .fold(0.0, f64::max)
}

/// Fit the drift constant for values `q` sampled at `radii` (any order).
pub fn audit_monotonicity(
    radii: &[f64],
    q: &[f64],
    mode: AuditMode,
    epsilon: f64,
) -> Result<DriftFit, DiagnosticsError> {
    if radii.len() != q.len() {
        return Err(DiagnosticsError::InvalidParameter(
            "radii and values differ in length".into(),
        ));
    }
    if !(epsilon > 0.0) {
        return Err(DiagnosticsError::InvalidParameter(
            "epsilon must be positive".into(),
        ));
    }
    let mut pts: Vec<(f64, f64)> = radii.iter().copied().zip(q.iter().copied()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let c_fit = drift_constant(&pts, epsilon);
    let violations = pts
        .windows(2)
        .filter(|w| w[0].1 > w[1].1)
        .map(|w| PairViolation {
            r_small: w[0].0,
            r_large: w[1].0,
            drop: w[0].1 - w[1].1,
        })
        .collect();
    let residual = if c_fit.is_finite() {
        pts.windows(2)
            .map(|w| {
                let a = w[0].1 + c_fit * w[0].0.powf(epsilon);
                let b = w[1].1 + c_fit * w[1].0.powf(epsilon);
                (a - b).max(0.0)
            })
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let sensitivity = [0.25, 0.5, 1.0]
        .iter()
        .map(|&e| (e, drift_constant(&pts, e)))
        .collect();
    Ok(DriftFit {
        mode,
        epsilon,
        c_fit,
        residual,
        violations,
        sensitivity,
    })
}

/// Profile settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileParams {
    pub gamma: f64,
    /// Homogeneity used in the Weiss energy.
    pub lambda: f64,
    /// Order used in the Monneau quantity.
    pub k: u32,
    pub epsilon: f64,
}

/// Per-radius quantities around one center, radii decreasing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyProfile {
    pub center: Vec<f64>,
    pub params: ProfileParams,
    pub radii: Vec<f64>,
    pub h: Vec<f64>,
    pub d: Vec<f64>,
    pub phi: Vec<f64>,
    pub weiss: Vec<f64>,
    pub monneau: Vec<f64>,
    pub phi_drift: DriftFit,
    pub monneau_drift: DriftFit,
}

pub fn frequency_profile(
    v: &dyn Field,
    x0: &[f64],
    radii: &[f64],
    params: &ProfileParams,
) -> Result<FrequencyProfile, DiagnosticsError> {
    if !(params.gamma > 0.0) {
        return Err(DiagnosticsError::InvalidParameter(
            "gamma must be positive".into(),
        ));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let hd: Vec<(f64, f64)> = radii
        .iter()
        .map(|&r| compute_hd(v, x0, r))
        .collect::<Result<_, _>>()?;
    let h: Vec<f64> = hd.iter().map(|p| p.0).collect();
    let d: Vec<f64> = hd.iter().map(|p| p.1).collect();
    let phi: Vec<f64> = radii
        .iter()
        .zip(&hd)
        .map(|(&r, &(hh, dd))| phi_gamma_from(hh, dd, r, params.gamma))
        .collect();
    let weiss: Vec<f64> = radii
        .iter()
        .zip(&hd)
        .map(|(&r, &(hh, dd))| weiss_from(hh, dd, r, params.lambda))
        .collect();
    let monneau: Vec<f64> = radii
        .iter()
        .zip(&h)
        .map(|(&r, &hh)| monneau_from(hh, r, params.k))
        .collect();
    let phi_drift = audit_monotonicity(&radii, &phi, AuditMode::Phi, params.epsilon)?;
    let monneau_drift = audit_monotonicity(&radii, &monneau, AuditMode::Monneau, params.epsilon)?;
    Ok(FrequencyProfile {
        center: x0.to_vec(),
        params: params.clone(),
        radii,
        h,
        d,
        phi,
        weiss,
        monneau,
        phi_drift,
        monneau_drift,
    })
}

impl FrequencyProfile {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,H,D,phi_gamma,W_lambda,M_k\n");
        for i in 0..self.radii.len() {
            s.push_str(&format!(
                "{:e},{:e},{:e},{:e},{:e},{:e}\n",
                self.radii[i], self.h[i], self.d[i], self.phi[i], self.weiss[i], self.monneau[i]
            ));
        }
        s
    }
}

/// Half-slope of `log H` against `log r` by least squares.
pub fn growth_exponent(radii: &[f64], h: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(h)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&r, &v)| (r.ln(), v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| 0.5 * sxy / sxx)
}

/// Audit settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzParams {
    pub k: u32,
    pub beta: f64,
    pub theta: f64,
    /// Ratios above this count as unbounded.
    pub cap: f64,
    /// Normal direction (0-based axis).
    pub normal_axis: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub r: f64,
    /// `max_j |d_j v_r|` over tangential `j` on `B_1`.
    pub tangential: f64,
    /// `|d_n v_r|` on `B_1`.
    pub normal: f64,
    /// `||v_{theta r}||_{L^2(B_2 \ B_{1/2})} + r^{k+2}`.
    pub base: f64,
    pub c_tangential: f64,
    pub c_normal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzAudit {
    pub params: LipschitzParams,
    pub rows: Vec<LipschitzRow>,
    pub c_tangential: f64,
    pub c_normal: f64,
    /// Radii where no constant below the cap works.
    pub flagged: Vec<f64>,
}

impl LipschitzAudit {
    pub fn passes(&self) -> bool {
        self.flagged.is_empty()
    }
}

/// Gradient bounds for a sampled `v = u - P_k` against the annular `L^2`
/// norm at scale `theta r`. Derivatives are central differences at nodes.
pub fn lipschitz_audit(
    v: &GridField<f64>,
    x0: &[f64],
    radii: &[f64],
    params: &LipschitzParams,
) -> Result<LipschitzAudit, DiagnosticsError> {
    let n = v.dim();
    if params.normal_axis >= n {
        return Err(DiagnosticsError::InvalidParameter(
            "normal axis out of range".into(),
        ));
    }
    if !(params.beta >= 0.0 && params.beta < 1.0) || !(params.theta > 0.0) || !(params.cap > 0.0) {
        return Err(DiagnosticsError::InvalidParameter(
            "need 0 <= beta < 1, theta > 0, cap > 0".into(),
        ));
    }
    let h = v.spacing();
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let reach = v.distance_to_boundary(x0);
        if r > reach - h || 2.0 * params.theta * r > reach {
            return Err(DiagnosticsError::RadiusOutOfRange {
                r,
                min: 4.0 * h,
                max: (reach - h).min(reach / (2.0 * params.theta)),
            });
        }
        let grads = max_partials(v, x0, r);
        let tangential = r
            * (0..n)
                .filter(|&j| j != params.normal_axis)
                .map(|j| grads[j])
                .fold(0.0, f64::max);
        let normal = r * grads[params.normal_axis];
        let tr = params.theta * r;
        let l2 = (annulus_l2_squared(v, x0, 0.5 * tr, 2.0 * tr)? * tr.powi(-(n as i32))).sqrt();
        let base = l2 + r.powi(params.k as i32 + 2);
        let c_tangential = tangential / base;
        let c_normal = normal / base.powf(1.0 - params.beta);
        rows.push(LipschitzRow {
            r,
            tangential,
            normal,
            base,
            c_tangential,
            c_normal,
        });
    }
    let c_tangential = rows.iter().map(|r| r.c_tangential).fold(0.0, f64::max);
    let c_normal = rows.iter().map(|r| r.c_normal).fold(0.0, f64::max);
    let flagged = rows
        .iter()
        .filter(|row| !(row.c_tangential <= params.cap && row.c_normal <= params.cap))
        .map(|row| row.r)
        .collect();
    Ok(LipschitzAudit {
        params: params.clone(),
        rows,
        c_tangential,
        c_normal,
        flagged,
    })
}

/// `max |d_j v|` over nodes in `B_r(x0)`, per axis.
fn max_partials(v: &GridField<f64>, x0: &[f64], r: f64) -> [f64; 3] {
    let n = v.dim();
    let h = v.spacing();
    let vals = v.values();
    let mut lo = [0usize; 3];
    let mut hi = [0usize; 3];
    for d in 0..n {
        let s = (x0[d] - v.origin()[d]) / h;
        lo[d] = ((s - r / h).ceil().max(1.0)) as usize;
        hi[d] = ((s + r / h).floor() as usize).min(v.shape()[d] - 2);
    }
    let mut out = [0.0f64; 3];
    let k_range = if n == 3 { lo[2]..=hi[2] } else { 0..=0 };
    for k in k_range {
        for j in lo[1]..=hi[1] {
            for i in lo[0]..=hi[0] {
                let idx = [i, j, k];
                let p = v.flat(&idx[..n]);
                let x = v.coord(p);
                let r2: f64 = (0..n).map(|d| (x[d] - x0[d]).powi(2)).sum();
                if r2 > r * r {
                    continue;
                }
                for d in 0..n {
                    let s = v.stride(d);
                    let g = (vals[p + s] - vals[p - s]) / (2.0 * h);
                    out[d] = out[d].max(g.abs());
                }
            }
        }
    }
    out
}

/// Sample `u - P(x - x0)` on the grid of `u`.
pub fn sample_difference(u: &GridField<f64>, p: &Poly<f64>, x0: &[f64]) -> GridField<f64> {
    let mut out = u.clone();
    let n = u.dim();
    let coords: Vec<Vec<f64>> = (0..u.len()).map(|q| u.coord(q)).collect();
    out.values_mut()
        .par_iter_mut()
        .zip(coords.par_iter())
        .for_each(|(v, x)| {
            let y: Vec<f64> = (0..n).map(|d| x[d] - x0[d]).collect();
            *v -= p.eval_f64(&y);
        });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoxSpec;

    fn poly(dim: usize, terms: &[(i64, i64, &[u32])]) -> Poly<f64> {
        Poly::<num_rational::BigRational>::from_fracs(dim, terms)
            .unwrap()
            .to_f64()
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(5);
        let s: f64 = rule.iter().map(|(x, w)| w * x.powi(8)).sum();
        assert!((s - 2.0 / 9.0).abs() < 1e-14);
        let one = gauss_legendre(1);
        assert!((one[0].1 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cubic_interpolation_is_exact_on_cubics() {
        let spec = BoxSpec::centered(2, 1.0, 16);
        let g = GridField::from_fn(&spec, |x| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1]);
        let (v, gr) = g.eval_grad(&[0.123, -0.456]);
        let (x, y) = (0.123f64, -0.456f64);
        assert!((v - (x.powi(3) - 2.0 * x * y * y + y)).abs() < 1e-13);
        assert!((gr[0] - (3.0 * x * x - 2.0 * y * y)).abs() < 1e-12);
        assert!((gr[1] - (-4.0 * x * y + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn linear_function_height_and_energy() {
        // v = x2: H = pi r^2, D = pi r^2.
        let v = PolyField::new(poly(2, &[(1, 1, &[0, 1])]), vec![0.0, 0.0]);
        let r = 0.3;
        let (h, d) = compute_hd(&v, &[0.0, 0.0], r).unwrap();
        let pi = std::f64::consts::PI;
        assert!((h - pi * r * r).abs() < 1e-13);
        assert!((d - pi * r * r).abs() < 1e-13);
        let w = weiss(&v, &[0.0, 0.0], r, 2.0).unwrap();
        assert!((w + pi * r.powi(-2)).abs() < 1e-9);
    }

    #[test]
    fn three_dimensional_frequency() {
        let v = PolyField::new(
            poly(3, &[(1, 1, &[1, 1, 0]), (1, 1, &[0, 1, 1])]),
            vec![0.0; 3],
        );
        let (h, d) = compute_hd(&v, &[0.0; 3], 0.5).unwrap();
        assert!((d / h - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_field_frequency_is_gamma() {
        let v = FnField {
            dim: 2,
            f: |_: &[f64]| (0.0, [0.0; 3]),
        };
        for &r in &[0.01, 0.1, 0.7] {
            assert_eq!(phi_gamma(&v, &[0.0, 0.0], r, 3.5).unwrap(), 3.5);
        }
    }

    #[test]
    fn radius_checks() {
        let spec = BoxSpec::centered(2, 1.0, 64);
        let g: GridField<f64> = GridField::on_box(&spec);
        assert!(compute_h(&g, &[0.0, 0.0], 0.5).is_ok());
        assert!(matches!(
            compute_h(&g, &[0.0, 0.0], 1.5),
            Err(DiagnosticsError::RadiusOutOfRange { .. })
        ));
        assert!(matches!(
            compute_h(&g, &[0.0, 0.0], 0.01),
            Err(DiagnosticsError::RadiusOutOfRange { .. })
        ));
    }

    #[test]
    fn drift_fit_two_points() {
        let fit = audit_monotonicity(&[0.5, 1.0], &[1.0, 0.5], AuditMode::Phi, 0.5).unwrap();
        let expected = 0.5 / (1.0 - 0.5f64.sqrt());
        assert!((fit.c_fit - expected).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
        assert_eq!(fit.violations.len(), 1);
        let ok = audit_monotonicity(&[0.1, 0.2, 0.4], &[1.0, 2.0, 2.0], AuditMode::Monneau, 0.5)
            .unwrap();
        assert_eq!(ok.c_fit, 0.0);
        assert!(ok.violations.is_empty());
    }

    #[test]
    fn geometric_radii_range() {
        let r = geometric_radii(0.01, 0.9);
        assert!((r[0] - 0.3).abs() < 1e-15);
        assert!(*r.last().unwrap() >= 0.04 * (1.0 - 1e-12));
        assert!(r
            .windows(2)
            .all(|w| (w[1] / w[0] - 2f64.powf(-0.25)).abs() < 1e-12));
    }

    #[test]
    fn lipschitz_of_zero() {
        let spec = BoxSpec::centered(2, 1.0, 64);
        let g: GridField<f64> = GridField::on_box(&spec);
        let params = LipschitzParams {
            k: 3,
            beta: 0.05,
            theta: 0.5,
            cap: 1e6,
            normal_axis: 1,
        };
        let a = lipschitz_audit(&g, &[0.0, 0.0], &[0.2, 0.4], &params).unwrap();
        assert!(a.passes());
        assert_eq!(a.c_tangential, 0.0);
        assert!((a.rows[0].base - 0.2f64.powi(5)).abs() < 1e-18);
    }
}
