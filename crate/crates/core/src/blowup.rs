//! Blow-up analysis at singular points: quadratic fit, recovery of the next
//! expansion polynomial, frequency estimates, classification and Whitney
//! compatibility of polynomial fields.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzError, AnsatzFamily, AnsatzInput, Axis, Rhs};
use crate::diagnostics::{
    compute_hd, growth_exponent, phi_gamma_from, sphere_rule, DiagnosticsError, Field,
};
use crate::poly::{harmonic_basis, sphere_inner, HomoPoly, Monomial, Parity, Poly};
use crate::scalar::{rationalize, Scalar};

#[derive(Debug, thiserror::Error)]
pub enum BlowupError {
    #[error("point is not singular: {0}")]
    NotSingular(String),
    #[error("no convergence: even-part norms {even_norms:?} do not decay")]
    NoConvergence { even_norms: Vec<f64> },
    #[error("ambiguous frequency band [{lo}, {hi}] for k = {k}")]
    Ambiguous { k: u32, lo: f64, hi: f64 },
    #[error("no radius carries signal above the noise floor")]
    InsufficientSignal,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
}

/// Orthonormal frame `x = x0 + R y`; the last column of `R` is the normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub origin: Vec<f64>,
    /// Columns of the rotation, stored row-major as `rotation[i][j] = R_ij`.
    pub rotation: Vec<Vec<f64>>,
}

impl Frame {
    pub fn identity(origin: &[f64]) -> Self {
        let n = origin.len();
        let rotation = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Frame {
            origin: origin.to_vec(),
            rotation,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.rotation.iter().enumerate().all(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, &v)| v == if i == j { 1.0 } else { 0.0 })
        })
    }

    pub fn to_world(&self, y: &[f64]) -> [f64; 3] {
        let mut x = [0.0; 3];
        for i in 0..y.len() {
            x[i] = self.origin[i]
                + (0..y.len())
                    .map(|j| self.rotation[i][j] * y[j])
                    .sum::<f64>();
        }
        x
    }
}

/// A field read in frame coordinates `y`.
pub struct FramedField<'a> {
    pub inner: &'a dyn Field,
    pub frame: &'a Frame,
}

impl Field for FramedField<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_grad(&self, y: &[f64]) -> (f64, [f64; 3]) {
        let n = y.len();
        let (v, g) = self.inner.eval_grad(&self.frame.to_world(y)[..n]);
        let mut out = [0.0; 3];
        for j in 0..n {
            out[j] = (0..n).map(|i| self.frame.rotation[i][j] * g[i]).sum();
        }
        (v, out)
    }
    fn reach(&self, y0: &[f64]) -> f64 {
        self.inner.reach(&self.frame.to_world(y0)[..y0.len()])
    }
    fn spacing(&self) -> Option<f64> {
        self.inner.spacing()
    }
}

/// Quadratic blow-up fitted at one center.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct P2Fit {
    pub center: Vec<f64>,
    pub f0: f64,
    /// Hessian `A` of `p2 = y.A.y / 2`, world coordinates.
    pub hessian: Vec<Vec<f64>>,
    /// Eigenvalues ascending.
    pub eigenvalues: Vec<f64>,
    pub stratum_dim: usize,
    /// `(r, relative misfit)` per radius, radii decreasing.
    pub residuals: Vec<(f64, f64)>,
    /// Frame whose last axis is the top eigenvector (identity when that is
    /// a coordinate axis).
    pub frame: Frame,
    /// Normal axis in the frame.
    pub nu: Axis,
}

impl P2Fit {
    pub fn p2(&self) -> HomoPoly<f64> {
        let n = self.hessian.len();
        let mut terms = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut e = vec![0u32; n];
                e[i] += 1;
                e[j] += 1;
                let c = if i == j {
                    0.5 * self.hessian[i][i]
                } else {
                    self.hessian[i][j]
                };
                terms.push((c, e));
            }
        }
        HomoPoly::from_terms(n, 2, terms).expect("quadratic terms")
    }
}

/// Relative eigenvalue threshold below which a direction counts as kernel.
pub const KERNEL_THRESHOLD: f64 = 0.05;

/// Least-squares fit of `p2 = y.A.y / 2` with `tr A = f0` to
/// `r^{-2} u(x0 + r y)`, at each radius.
pub fn fit_p2(u: &dyn Field, x0: &[f64], f0: f64, radii: &[f64]) -> Result<P2Fit, BlowupError> {
    let n = u.dim();
    if x0.len() != n {
        return Err(BlowupError::Invalid("center dimension".into()));
    }
    if radii.is_empty() || !(f0 > 0.0) {
        return Err(BlowupError::Invalid("need radii and f0 > 0".into()));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    // Traceless symmetric basis.
    let mut basis: Vec<DMatrix<f64>> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut e = DMatrix::zeros(n, n);
            e[(i, j)] = 1.0;
            e[(j, i)] = 1.0;
            basis.push(e);
        }
    }
    for i in 0..n - 1 {
        let mut e = DMatrix::zeros(n, n);
        e[(i, i)] = 1.0;
        e[(n - 1, n - 1)] = -1.0;
        basis.push(e);
    }
    let rule = sphere_rule(n, if n == 2 { 64 } else { 12 });
    let mut samples: Vec<[f64; 3]> = Vec::new();
    for &scale in &[1.0, 0.5] {
        for (dir, _) in &rule {
            samples.push([dir[0] * scale, dir[1] * scale, dir[2] * scale]);
        }
    }
    let quad = |m: &DMatrix<f64>, y: &[f64; 3]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += y[i] * m[(i, j)] * y[j];
            }
        }
        0.5 * s
    };
    let iso = DMatrix::<f64>::identity(n, n) * (f0 / n as f64);
    let mut residuals = Vec::with_capacity(radii.len());
    let mut last = iso.clone();
    for &r in &radii {
        if r > u.reach(x0) {
            return Err(DiagnosticsError::RadiusOutOfRange {
                r,
                min: 0.0,
                max: u.reach(x0),
            }
            .into());
        }
        let data: Vec<f64> = samples
            .iter()
            .map(|y| {
                let mut x = [0.0; 3];
                for d in 0..n {
                    x[d] = x0[d] + r * y[d];
                }
                u.value(&x[..n]) / (r * r)
            })
            .collect();
        let a = DMatrix::from_fn(samples.len(), basis.len(), |i, j| {
            quad(&basis[j], &samples[i])
        });
        let b = DVector::from_fn(samples.len(), |i, _| data[i] - quad(&iso, &samples[i]));
        let theta = a
            .clone()
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|e| BlowupError::Invalid(e.to_string()))?;
        let mut hess = iso.clone();
        for (k, e) in basis.iter().enumerate() {
            hess += e * theta[k];
        }
        let misfit = (&a * &theta - &b).norm();
        let scale = DVector::from_vec(data.clone())
            .norm()
            .max(f64::MIN_POSITIVE);
        residuals.push((r, misfit / scale));
        last = hess;
    }
    let eig = SymmetricEigen::new(last.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues[0] < -KERNEL_THRESHOLD * f0 {
        return Err(BlowupError::NotSingular(format!(
            "fitted quadratic is not convex (eigenvalue {:e})",
            eigenvalues[0]
        )));
    }
    let (r_small, res_small) = *residuals.last().expect("radii");
    let res_large = residuals[0].1;
    if res_small > 1e-3 && res_small >= res_large && residuals.len() > 1 {
        return Err(BlowupError::NotSingular(format!(
            "misfit {res_small:e} at r = {r_small} does not decay"
        )));
    }
    let stratum_dim = eigenvalues
        .iter()
        .filter(|&&l| l < KERNEL_THRESHOLD * f0)
        .count();
    let top = eig.eigenvectors.column(order[n - 1]).into_owned();
    let snapped = (0..n).find(|&j| top[j].abs() >= 1.0 - 1e-6);
    let (frame, nu) = match snapped {
        Some(j) => (Frame::identity(x0), Axis::positive(j)),
        None => {
            let mut cols: Vec<DVector<f64>> = order
                .iter()
                .map(|&i| eig.eigenvectors.column(i).into_owned())
                .collect();
            let m = DMatrix::from_columns(&cols);
            if m.determinant() < 0.0 {
                cols[0] = -cols[0].clone();
            }
            let rotation = (0..n)
                .map(|i| (0..n).map(|j| cols[j][i]).collect())
                .collect();
            (
                Frame {
                    origin: x0.to_vec(),
                    rotation,
                },
                Axis::last(n),
            )
        }
    };
    let hessian = (0..n)
        .map(|i| (0..n).map(|j| last[(i, j)]).collect())
        .collect();
    Ok(P2Fit {
        center: x0.to_vec(),
        f0,
        hessian,
        eigenvalues,
        stratum_dim,
        residuals,
        frame,
        nu,
    })
}

/// Harmonic basis orthogonalized in `L^2` of the unit sphere with exact
/// arithmetic, paired with the squared norms.
pub fn orthogonal_harmonic_basis(
    dim: usize,
    degree: u32,
    axis: usize,
    parity: Parity,
) -> Vec<(HomoPoly<BigRational>, f64)> {
    let raw: Vec<HomoPoly<BigRational>> = harmonic_basis(dim, degree, axis, parity);
    let mut out: Vec<(Poly<BigRational>, BigRational)> = Vec::new();
    for b in raw {
        let mut v = Poly::from_homo(b);
        for (q, qq) in &out {
            let c = sphere_inner(&v, q).fraction / qq.clone();
            v = &v - &q.scale(&c);
        }
        let nn = sphere_inner(&v, &v).fraction;
        if !num_traits::Zero::is_zero(&nn) {
            out.push((v, nn));
        }
    }
    out.into_iter()
        .map(|(p, _)| {
            let value = sphere_inner(&p, &p).value;
            (p.part(degree), value)
        })
        .collect()
}

/// Projection of a sampled homogeneous-order quotient onto odd and even
/// harmonics at one radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusProjection {
    pub r: f64,
    /// Coefficients on the odd orthogonal basis.
    pub odd: Vec<f64>,
    /// `L^2(S)` norm of the even harmonic component.
    pub even_norm: f64,
    /// `L^2(S)` norm of what the odd projection leaves.
    pub residual_norm: f64,
}

/// Next expansion polynomial recovered from `r^{-(k+1)} (u - P_k)(x0 + r .)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovery {
    pub order: u32,
    /// Recovered `p_{k+1}` in frame coordinates.
    pub poly: HomoPoly<f64>,
    pub per_radius: Vec<RadiusProjection>,
    /// True when both the residual and the even part decay as `r` decreases.
    pub consistent: bool,
}

/// Settings for `recover_next`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoverParams {
    /// Even-part norms below this are treated as vanishing.
    pub even_tolerance: f64,
    /// Extrapolate the two smallest radii in `r^2`.
    pub extrapolate: bool,
}

impl Default for RecoverParams {
    fn default() -> Self {
        RecoverParams {
            even_tolerance: 1e-3,
            extrapolate: true,
        }
    }
}

/// `v = u - P_k` in frame coordinates around the frame origin.
pub struct Remainder<'a> {
    pub u: FramedField<'a>,
    pub p: Poly<f64>,
}

impl<'a> Remainder<'a> {
    pub fn new(u: &'a dyn Field, frame: &'a Frame, family: &AnsatzFamily<BigRational>) -> Self {
        Remainder {
            u: FramedField { inner: u, frame },
            p: family.p().to_f64(),
        }
    }
}

impl Field for Remainder<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }
    fn eval_grad(&self, y: &[f64]) -> (f64, [f64; 3]) {
        let (v, g) = self.u.eval_grad(y);
        let pg = self.p.gradient_f64(y);
        let mut out = g;
        for d in 0..y.len() {
            out[d] -= pg[d];
        }
        (v - self.p.eval_f64(y), out)
    }
    fn reach(&self, y0: &[f64]) -> f64 {
        self.u.reach(y0)
    }
    fn spacing(&self) -> Option<f64> {
        self.u.spacing()
    }
}

pub fn recover_next(
    u: &dyn Field,
    family: &AnsatzFamily<BigRational>,
    frame: &Frame,
    radii: &[f64],
    params: &RecoverParams,
) -> Result<Recovery, BlowupError> {
    let n = family.dim();
    let k = family.order();
    let deg = k + 1;
    let axis = family.nu().index;
    if radii.is_empty() {
        return Err(BlowupError::Invalid("no radii".into()));
    }
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let v = Remainder::new(u, frame, family);
    let zero = vec![0.0; n];
    let odd = orthogonal_harmonic_basis(n, deg, axis, Parity::Odd);
    let even = orthogonal_harmonic_basis(n, deg, axis, Parity::Even);
    let odd_f: Vec<(HomoPoly<f64>, f64)> = odd.iter().map(|(b, nn)| (b.to_f64(), *nn)).collect();
    let even_f: Vec<(HomoPoly<f64>, f64)> = even.iter().map(|(b, nn)| (b.to_f64(), *nn)).collect();
    let rule = sphere_rule(n, if n == 2 { 256 } else { 32 });
    let mut per_radius = Vec::with_capacity(radii.len());
    for &r in &radii {
        if r > v.reach(&zero) {
            return Err(DiagnosticsError::RadiusOutOfRange {
                r,
                min: 0.0,
                max: v.reach(&zero),
            }
            .into());
        }
        let scale = r.powi(-(deg as i32));
        let samples: Vec<(&[f64; 3], f64, f64)> = rule
            .iter()
            .map(|(dir, w)| (dir, *w, scale * v.value(&dir.map(|c| c * r)[..n])))
            .collect();
        let total: f64 = samples.iter().map(|(_, w, s)| w * s * s).sum();
        let project = |basis: &[(HomoPoly<f64>, f64)]| -> Vec<f64> {
            basis
                .iter()
                .map(|(b, nn)| {
                    samples
                        .iter()
                        .map(|(dir, w, s)| w * s * b.eval_f64(&dir[..n]))
                        .sum::<f64>()
                        / nn
                })
                .collect()
        };
        let c_odd = project(&odd_f);
        let c_even = project(&even_f);
        let odd_energy: f64 = c_odd
            .iter()
            .zip(&odd_f)
            .map(|(c, (_, nn))| c * c * nn)
            .sum();
        let even_energy: f64 = c_even
            .iter()
            .zip(&even_f)
            .map(|(c, (_, nn))| c * c * nn)
            .sum();
        per_radius.push(RadiusProjection {
            r,
            odd: c_odd,
            even_norm: even_energy.sqrt(),
            residual_norm: (total - odd_energy).max(0.0).sqrt(),
        });
    }
    let m = per_radius.len();
    let coeffs: Vec<f64> = if params.extrapolate && m >= 2 {
        let (a, b) = (&per_radius[m - 1], &per_radius[m - 2]);
        let (ra2, rb2) = (a.r * a.r, b.r * b.r);
        a.odd
            .iter()
            .zip(&b.odd)
            .map(|(ca, cb)| (ca * rb2 - cb * ra2) / (rb2 - ra2))
            .collect()
    } else {
        per_radius[m - 1].odd.clone()
    };
    let f0 = Scalar::to_f64(&family.f0());
    let mut poly = HomoPoly::zero(n, deg);
    for (c, (b, _)) in coeffs.iter().zip(&odd_f) {
        poly = poly.add(&b.scale(&(c / f0)));
    }
    let decays = |f: &dyn Fn(&RadiusProjection) -> f64, tol: f64| {
        let first = f(&per_radius[0]);
        let last = f(&per_radius[m - 1]);
        last <= tol || (m > 1 && last < first)
    };
    let even_ok = decays(&|p: &RadiusProjection| p.even_norm, params.even_tolerance);
    let resid_ok = decays(
        &|p: &RadiusProjection| p.residual_norm,
        params.even_tolerance,
    );
    if !even_ok {
        return Err(BlowupError::NoConvergence {
            even_norms: per_radius.iter().map(|p| p.even_norm).collect(),
        });
    }
    Ok(Recovery {
        order: deg,
        poly,
        per_radius,
        consistent: even_ok && resid_ok,
    })
}

/// Frequency estimate with the two estimators and their band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaEstimate {
    pub k: u32,
    pub gamma: f64,
    /// Truncated frequency at the smallest reliable radius.
    pub phi: f64,
    /// Half-slope of `log H` over the smallest reliable radii.
    pub slope: Option<f64>,
    pub lo: f64,
    pub hi: f64,
    /// `(r, phi_gamma(r))` at the radii used.
    pub per_radius: Vec<(f64, f64)>,
}

impl LambdaEstimate {
    pub fn value(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

/// Estimate `lambda_k` from `v = u - P_k`, radii with `sqrt(H / |S|)`
/// below `noise_floor` being discarded.
pub fn estimate_lambda(
    v: &dyn Field,
    y0: &[f64],
    k: u32,
    radii: &[f64],
    noise_floor: f64,
) -> Result<LambdaEstimate, BlowupError> {
    let gamma = k as f64 + 1.5;
    let mut radii = radii.to_vec();
    radii.sort_by(|a, b| b.total_cmp(a));
    let area = crate::poly::sphere_area(v.dim());
    let mut used = Vec::new();
    for &r in &radii {
        let (h, d) = compute_hd(v, y0, r)?;
        if (h / area).sqrt() >= noise_floor {
            used.push((r, h, d));
        }
    }
    if used.is_empty() {
        return Err(BlowupError::InsufficientSignal);
    }
    let &(r_min, h_min, d_min) = used.last().expect("nonempty");
    let phi = phi_gamma_from(h_min, d_min, r_min, gamma);
    let tail = &used[used.len().saturating_sub(4)..];
    let slope = growth_exponent(
        &tail.iter().map(|t| t.0).collect::<Vec<_>>(),
        &tail.iter().map(|t| t.1).collect::<Vec<_>>(),
    );
    let (mut lo, mut hi) = (phi, phi);
    if let Some(s) = slope {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let clamp = |x: f64| x.clamp(k as f64, k as f64 + 2.0);
    let per_radius = used
        .iter()
        .map(|&(r, h, d)| (r, phi_gamma_from(h, d, r, gamma)))
        .collect();
    Ok(LambdaEstimate {
        k,
        gamma,
        phi,
        slope,
        lo: clamp(lo),
        hi: clamp(hi),
        per_radius,
    })
}

/// Position of `lambda_k` relative to `k` and `k + 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrichotomyClass {
    FrequencyK,
    NonInteger,
    KPlusOneEven,
    Ascends,
}

impl std::fmt::Display for TrichotomyClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TrichotomyClass::FrequencyK => "FrequencyK",
            TrichotomyClass::NonInteger => "NonInteger",
            TrichotomyClass::KPlusOneEven => "KPlusOneEven",
            TrichotomyClass::Ascends => "Ascends",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: TrichotomyClass,
    /// `lambda_k = k` with `k` even cannot occur in the continuum.
    pub anomalous: bool,
}

/// Half-width of the classification bands.
pub const BAND_DELTA: f64 = 0.1;

pub fn classify(
    est: &LambdaEstimate,
    even_significant: bool,
) -> Result<Classification, BlowupError> {
    let k = est.k as f64;
    let d = BAND_DELTA;
    let class = if est.hi < k + d {
        TrichotomyClass::FrequencyK
    } else if est.lo > k + d && est.hi < k + 1.0 - d {
        TrichotomyClass::NonInteger
    } else if est.lo >= k + 1.0 - d {
        if even_significant && est.lo <= k + 1.0 + d {
            TrichotomyClass::KPlusOneEven
        } else {
            TrichotomyClass::Ascends
        }
    } else {
        return Err(BlowupError::Ambiguous {
            k: est.k,
            lo: est.lo,
            hi: est.hi,
        });
    };
    let anomalous = class == TrichotomyClass::FrequencyK && est.k % 2 == 0;
    Ok(Classification { class, anomalous })
}

/// Normalized blow-ups `v(r y) / H(r, v)^{1/2}` sampled on a fixed mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSequence {
    pub radii: Vec<f64>,
    /// Reference directions (unit sphere) and their quadrature weights.
    pub mesh: Vec<([f64; 3], f64)>,
    pub samples: Vec<Vec<f64>>,
    /// `L^2(S)` norm of each normalized sample.
    pub norms: Vec<f64>,
}

pub fn blowup_sequence(
    v: &dyn Field,
    y0: &[f64],
    radii: &[f64],
) -> Result<BlowupSequence, BlowupError> {
    let n = v.dim();
    let mesh = sphere_rule(n, if n == 2 { 128 } else { 16 });
    let mut samples = Vec::with_capacity(radii.len());
    let mut norms = Vec::with_capacity(radii.len());
    for &r in radii {
        let (h, _) = compute_hd(v, y0, r)?;
        if !(h > 0.0) {
            return Err(BlowupError::InsufficientSignal);
        }
        let s: Vec<f64> = mesh
            .iter()
            .map(|(dir, _)| {
                let mut x = [0.0; 3];
                for d in 0..n {
                    x[d] = y0[d] + r * dir[d];
                }
                v.value(&x[..n]) / h.sqrt()
            })
            .collect();
        let nn: f64 = s.iter().zip(&mesh).map(|(a, (_, w))| w * a * a).sum();
        norms.push(nn.sqrt());
        samples.push(s);
    }
    Ok(BlowupSequence {
        radii: radii.to_vec(),
        mesh,
        samples,
        norms,
    })
}

/// Settings for the full per-point pipeline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineParams {
    pub max_k: u32,
    /// Radii for fitting and recovery, in units of the field spacing.
    pub fit_radii: Vec<f64>,
    /// Radii for frequency estimates, absolute.
    pub freq_radii: Vec<f64>,
    pub noise_floor: f64,
    pub recover: RecoverParams,
}

/// Everything learned at one singular point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub center: Vec<f64>,
    pub p2: HomoPoly<f64>,
    pub stratum_dim: usize,
    pub p2_fit: P2Fit,
    /// Recovered `p_3, p_4, ...` in frame coordinates.
    pub recovered: Vec<Recovery>,
    /// Frequency estimate at the final order.
    pub lambda: LambdaEstimate,
    pub class: TrichotomyClass,
    pub anomalous: bool,
    pub final_order: u32,
    pub synthetic: bool,
}

/// Fit, ascend the expansion chain while the frequency allows, and classify.
pub fn analyze_point(
    u: &dyn Field,
    x0: &[f64],
    rhs: &Rhs<BigRational>,
    params: &PipelineParams,
) -> Result<StratumReport, BlowupError> {
    let n = u.dim();
    let h = u.spacing().unwrap_or(1.0);
    let fit_radii: Vec<f64> = params.fit_radii.iter().map(|c| c * h).collect();
    let f0 = Scalar::to_f64(&rhs.value_at_base(n));
    let fit = fit_p2(u, x0, f0, &fit_radii)?;
    if fit.stratum_dim + 1 != n {
        return Err(BlowupError::Invalid(format!(
            "expansion chain needs the top stratum (kernel dimension {}), found {}",
            n - 1,
            fit.stratum_dim
        )));
    }
    let mut family = AnsatzFamily::build(AnsatzInput::new(n, 2, fit.nu, Vec::new(), rhs.clone())?)?;
    let mut recovered = Vec::new();
    let zero = vec![0.0; n];
    loop {
        let k = family.order();
        let v = Remainder::new(u, &fit.frame, &family);
        let lambda = estimate_lambda(&v, &zero, k, &params.freq_radii, params.noise_floor)?;
        let recovery = recover_next(u, &family, &fit.frame, &fit_radii, &params.recover);
        let even_significant = match &recovery {
            Err(BlowupError::NoConvergence { .. }) => true,
            Ok(r) => r
                .per_radius
                .last()
                .is_some_and(|p| p.even_norm > params.recover.even_tolerance),
            Err(_) => false,
        };
        let cls = classify(&lambda, even_significant)?;
        if cls.class != TrichotomyClass::Ascends || k >= params.max_k {
            return Ok(StratumReport {
                center: x0.to_vec(),
                p2: fit.p2(),
                stratum_dim: fit.stratum_dim,
                p2_fit: fit.clone(),
                recovered,
                lambda,
                class: cls.class,
                anomalous: cls.anomalous,
                final_order: k,
                synthetic: false,
            });
        }
        let rec = recovery?;
        let exact = rationalize_harmonic(&rec, &family)?;
        family = AnsatzFamily::build(family.input().extend(exact)?)?;
        recovered.push(rec);
    }
}

/// Rebuild a recovered polynomial from rationalized basis coefficients so
/// that it is exactly harmonic and odd.
fn rationalize_harmonic(
    rec: &Recovery,
    family: &AnsatzFamily<BigRational>,
) -> Result<HomoPoly<BigRational>, BlowupError> {
    let n = family.dim();
    let basis = orthogonal_harmonic_basis(n, rec.order, family.nu().index, Parity::Odd);
    let mut out = HomoPoly::zero(n, rec.order);
    for (b, nn) in &basis {
        let bf = Poly::from_homo(b.to_f64());
        let c = sphere_inner(&Poly::from_homo(rec.poly.clone()), &bf).value / nn;
        out = out.add(&b.scale(&rationalize(c, 1 << 20)));
    }
    Ok(out)
}

/// One point of a Whitney check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyPoint {
    pub x: Vec<f64>,
    /// Polynomial field `P_x` in the local variable `y = z - x`.
    pub field: Poly<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyBin {
    /// Lower edge of the dyadic distance bin.
    pub distance: f64,
    /// Largest ratio per order `|alpha| = 0..=k`.
    pub max_ratio: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyReport {
    pub k: u32,
    /// Largest ratio per order over all pairs.
    pub c_fit: Vec<f64>,
    pub bins: Vec<WhitneyBin>,
    /// Largest ratio between consecutive bins per order.
    pub variation: Vec<f64>,
    pub pass: bool,
}

/// Differences below this are treated as zero in the ratios.
pub const WHITNEY_NOISE: f64 = 1e-9;

fn derivative(p: &Poly<f64>, alpha: &[u32]) -> Poly<f64> {
    let mut q = p.clone();
    for (i, &a) in alpha.iter().enumerate() {
        for _ in 0..a {
            q = q.partial(i);
        }
    }
    q
}

/// Ratios `|d^a P_x(0) - d^a P_y(x - y)| / |x - y|^{k - |a| + 1}`.
pub fn whitney_check(points: &[WhitneyPoint], k: u32) -> Result<WhitneyReport, BlowupError> {
    if points.len() < 2 {
        return Err(BlowupError::Invalid("need at least two points".into()));
    }
    let n = points[0].x.len();
    let alphas: Vec<Vec<u32>> = (0..=k)
        .flat_map(|d| {
            Monomial::all_of_degree(n, d)
                .into_iter()
                .map(|m| m.exps().to_vec())
        })
        .collect();
    let derivs: Vec<Vec<Poly<f64>>> = points
        .iter()
        .map(|p| alphas.iter().map(|a| derivative(&p.field, a)).collect())
        .collect();
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i == j {
                continue;
            }
            let diff: Vec<f64> = (0..n).map(|d| points[i].x[d] - points[j].x[d]).collect();
            let dist = diff.iter().map(|c| c * c).sum::<f64>().sqrt();
            if dist == 0.0 {
                return Err(BlowupError::Invalid("repeated point".into()));
            }
            let mut per_order = vec![0.0f64; k as usize + 1];
            for (ai, a) in alphas.iter().enumerate() {
                let order: u32 = a.iter().sum();
                let lhs = derivs[i][ai].eval_f64(&vec![0.0; n]);
                let rhs = derivs[j][ai].eval_f64(&diff);
                let num = (lhs - rhs).abs();
                let num = if num <= WHITNEY_NOISE { 0.0 } else { num };
                let ratio = num / dist.powi((k - order + 1) as i32);
                per_order[order as usize] = per_order[order as usize].max(ratio);
            }
            pairs.push((dist, per_order));
        }
    }
    let dmin = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut bins: Vec<WhitneyBin> = Vec::new();
    let mut keyed: Vec<(i64, &Vec<f64>)> = pairs
        .iter()
        .map(|(d, r)| (((d / dmin).log2() + 1e-9).floor() as i64, r))
        .collect();
    keyed.sort_by_key(|p| p.0);
    for (key, ratios) in keyed {
        let distance = dmin * 2f64.powi(key as i32);
        match bins.last_mut() {
            Some(b) if (b.distance - distance).abs() <= 1e-12 * distance => {
                for (m, r) in b.max_ratio.iter_mut().zip(ratios) {
                    *m = m.max(*r);
                }
            }
            _ => bins.push(WhitneyBin {
                distance,
                max_ratio: ratios.clone(),
            }),
        }
    }
    let c_fit: Vec<f64> = (0..=k as usize)
        .map(|o| bins.iter().map(|b| b.max_ratio[o]).fold(0.0, f64::max))
        .collect();
    let variation: Vec<f64> = (0..=k as usize)
        .map(|o| {
            bins.windows(2)
                .map(|w| {
                    let (a, b) = (w[0].max_ratio[o], w[1].max_ratio[o]);
                    match (a > 0.0, b > 0.0) {
                        (true, true) => (a / b).max(b / a),
                        (false, false) => 1.0,
                        _ => f64::INFINITY,
                    }
                })
                .fold(1.0, f64::max)
        })
        .collect();
    let pass = c_fit.iter().all(|c| c.is_finite()) && variation.iter().all(|v| *v < 2.0);
    Ok(WhitneyReport {
        k,
        c_fit,
        bins,
        variation,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::PolyField;

    fn rat_poly(dim: usize, terms: &[(i64, &[u32])]) -> Poly<BigRational> {
        Poly::from_ints(dim, terms).unwrap()
    }

    #[test]
    fn orthogonal_basis_is_orthogonal() {
        let b = orthogonal_harmonic_basis(3, 3, 2, Parity::Odd);
        assert_eq!(b.len(), 3);
        for i in 0..b.len() {
            for j in 0..i {
                let ip = sphere_inner(
                    &Poly::from_homo(b[i].0.clone()),
                    &Poly::from_homo(b[j].0.clone()),
                );
                assert!(num_traits::Zero::is_zero(&ip.fraction));
            }
        }
    }

    #[test]
    fn fit_exact_half_square() {
        let u = PolyField::new(
            rat_poly(2, &[(1, &[0, 2])])
                .scale(&BigRational::new(1.into(), 2.into()))
                .to_f64(),
            vec![0.0, 0.0],
        );
        let fit = fit_p2(&u, &[0.0, 0.0], 1.0, &[0.2, 0.1]).unwrap();
        assert_eq!(fit.stratum_dim, 1);
        assert_eq!(fit.nu, Axis::positive(1));
        assert!(fit.frame.is_identity());
        assert!((fit.hessian[1][1] - 1.0).abs() < 1e-12);
        assert!(fit.hessian[0][0].abs() < 1e-12);
    }

    #[test]
    fn fit_radial() {
        let u = PolyField::new(
            rat_poly(2, &[(1, &[2, 0]), (1, &[0, 2])])
                .to_f64()
                .scale(&0.5),
            vec![0.0, 0.0],
        );
        let fit = fit_p2(&u, &[0.0, 0.0], 2.0, &[0.2]).unwrap();
        assert_eq!(fit.stratum_dim, 0);
    }

    #[test]
    fn fit_rotated_normal() {
        // p2 = (x1 + x2)^2 / 4, normal along (1, 1)/sqrt 2.
        let u = PolyField::new(
            rat_poly(2, &[(1, &[2, 0]), (2, &[1, 1]), (1, &[0, 2])])
                .to_f64()
                .scale(&0.25),
            vec![0.0, 0.0],
        );
        let fit = fit_p2(&u, &[0.0, 0.0], 1.0, &[0.3]).unwrap();
        assert_eq!(fit.stratum_dim, 1);
        assert!(!fit.frame.is_identity());
        let n = [fit.frame.rotation[0][1], fit.frame.rotation[1][1]];
        assert!(
            (n[0].abs() - 0.5f64.sqrt()).abs() < 1e-10
                && (n[1].abs() - 0.5f64.sqrt()).abs() < 1e-10
        );
    }

    #[test]
    fn concave_fit_rejected() {
        let u = PolyField::new(
            rat_poly(2, &[(-1, &[2, 0]), (2, &[0, 2])]).to_f64(),
            vec![0.0, 0.0],
        );
        assert!(matches!(
            fit_p2(&u, &[0.0, 0.0], 2.0, &[0.2]),
            Err(BlowupError::NotSingular(_))
        ));
    }

    #[test]
    fn classification_bands() {
        let est = |k: u32, lo: f64, hi: f64| LambdaEstimate {
            k,
            gamma: k as f64 + 1.5,
            phi: lo,
            slope: Some(hi),
            lo,
            hi,
            per_radius: vec![],
        };
        assert_eq!(
            classify(&est(3, 3.0, 3.05), false).unwrap().class,
            TrichotomyClass::FrequencyK
        );
        assert!(!classify(&est(3, 3.0, 3.05), false).unwrap().anomalous);
        assert!(classify(&est(2, 2.0, 2.05), false).unwrap().anomalous);
        assert_eq!(
            classify(&est(3, 3.45, 3.55), false).unwrap().class,
            TrichotomyClass::NonInteger
        );
        assert_eq!(
            classify(&est(3, 3.95, 4.05), true).unwrap().class,
            TrichotomyClass::KPlusOneEven
        );
        assert_eq!(
            classify(&est(3, 3.95, 4.05), false).unwrap().class,
            TrichotomyClass::Ascends
        );
        assert_eq!(
            classify(&est(3, 4.5, 5.0), false).unwrap().class,
            TrichotomyClass::Ascends
        );
        assert!(matches!(
            classify(&est(3, 3.0, 3.5), false),
            Err(BlowupError::Ambiguous { .. })
        ));
    }

    #[test]
    fn whitney_global_polynomial() {
        let p = rat_poly(2, &[(1, &[3, 0]), (2, &[1, 2]), (1, &[0, 1])]).to_f64();
        let points: Vec<WhitneyPoint> = (0..5)
            .map(|i| {
                let x = vec![0.1 * i as f64, 0.05];
                WhitneyPoint {
                    field: p.translate(&x),
                    x,
                }
            })
            .collect();
        let rep = whitney_check(&points, 3).unwrap();
        assert!(rep.c_fit.iter().all(|c| *c == 0.0));
        assert!(rep.pass);
    }

    #[test]
    fn whitney_detects_jump() {
        let p = rat_poly(2, &[(1, &[0, 2])]).to_f64();
        let bump = rat_poly(2, &[(1, &[3, 0])]).to_f64();
        let mut points: Vec<WhitneyPoint> = (0..4)
            .map(|i| WhitneyPoint {
                x: vec![0.1 * (i + 1) as f64, 0.0],
                field: p.clone(),
            })
            .collect();
        points.push(WhitneyPoint {
            x: vec![0.0, 0.0],
            field: &p + &bump,
        });
        let near = whitney_check(&points, 3).unwrap();
        assert!(near.c_fit[0] > 0.0);
        assert!(!near.pass);
    }
}
