//! Monotone families `t -> u^t`: singular times, space-time cleaning and
//! uniform monotonicity.

use serde::{Deserialize, Serialize};

use crate::grid::{BoxSpec, GridField};
use crate::obstacle::{
    contact_mask, detect_singular, solve, solve_family, DetectorParams, MonotoneFamily,
    ObstacleError, ObstacleProblem, SolverParams,
};

#[derive(Debug, thiserror::Error)]
pub enum HeleShawError {
    #[error("graph property violated: node {node} ({coords:?}) is singular at t = {t1} and t = {t2} with u unchanged nearby")]
    GraphViolation {
        node: usize,
        coords: Vec<f64>,
        t1: f64,
        t2: f64,
    },
    #[error("compact set meets the contact set at t = {t}")]
    CompactTouchesContact { t: f64 },
    #[error("free boundary reaches the outer box at t = {t}")]
    FreeBoundaryNotInterior { t: f64 },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error(transparent)]
    Obstacle(#[from] ObstacleError),
}

/// Boundary-data families, all with `f = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Geometry {
    /// Box `[-w, w]^2` with `g_t = ((|x2| - a0 - b x1^2 + t)_+)^2 / 2`: the
    /// contact set is a neck that pinches at `t = a0`.
    Pinch { a0: f64, b: f64, half_width: f64 },
    /// Box `[-w, w]^2` with `u = t` on the disk of radius `disk_radius` and
    /// `u = 0` on the outer faces.
    Annulus { disk_radius: f64, half_width: f64 },
    /// `t`-independent data `g = x2^2 / 2`.
    Frozen { half_width: f64 },
}

impl Geometry {
    pub fn half_width(&self) -> f64 {
        match self {
            Geometry::Pinch { half_width, .. }
            | Geometry::Annulus { half_width, .. }
            | Geometry::Frozen { half_width } => *half_width,
        }
    }

    pub fn validate(&self) -> Result<(), HeleShawError> {
        let ok = match self {
            Geometry::Pinch { a0, b, half_width } => *a0 > 0.0 && *b >= 0.0 && *half_width > 0.0,
            Geometry::Annulus {
                disk_radius,
                half_width,
            } => *disk_radius > 0.0 && *half_width > 2.0 * disk_radius,
            Geometry::Frozen { half_width } => *half_width > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(HeleShawError::Invalid(format!(
                "bad geometry parameters {self:?}"
            )))
        }
    }

    /// Obstacle problem at parameter `t`.
    pub fn problem(
        &self,
        intervals: usize,
        t: f64,
        params: &SolverParams,
    ) -> Result<ObstacleProblem<f64>, HeleShawError> {
        let spec = BoxSpec::centered(2, self.half_width(), intervals);
        let problem = match *self {
            Geometry::Pinch { a0, b, .. } => ObstacleProblem::from_fns(
                &spec,
                |_| 1.0,
                move |x| 0.5 * (x[1].abs() - a0 - b * x[0] * x[0] + t).max(0.0).powi(2),
                params.clone(),
            )?,
            Geometry::Annulus { disk_radius, .. } => {
                let base = ObstacleProblem::from_fns(&spec, |_| 1.0, |_| 0.0, params.clone())?;
                let mut data = base.data().clone();
                let mut fixed = vec![false; data.len()];
                for p in 0..data.len() {
                    let x = data.coord(p);
                    if x[0].hypot(x[1]) <= disk_radius {
                        fixed[p] = true;
                        data.values_mut()[p] = t;
                    }
                }
                ObstacleProblem::new(base.rhs().clone(), data, params.clone())?.with_fixed(fixed)?
            }
            Geometry::Frozen { .. } => {
                ObstacleProblem::from_fns(&spec, |_| 1.0, |x| 0.5 * x[1] * x[1], params.clone())?
            }
        };
        Ok(problem)
    }
}

/// Uniform time samples `start, ..., end`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSampling {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl TimeSampling {
    pub fn times(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.start];
        }
        (0..self.count)
            .map(|i| self.start + (self.end - self.start) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Solve the family and check that the free boundary never reaches the
/// outer faces for the annulus geometry.
pub fn solve_geometry(
    geometry: &Geometry,
    intervals: usize,
    times: &[f64],
    params: &SolverParams,
) -> Result<MonotoneFamily<f64>, HeleShawError> {
    geometry.validate()?;
    let family = solve_family(
        times,
        |t| {
            geometry.problem(intervals, t, params).map_err(|e| match e {
                HeleShawError::Obstacle(o) => o,
                other => ObstacleError::InvalidProblem(other.to_string()),
            })
        },
        1e-9,
    )?;
    if let Geometry::Annulus { .. } = geometry {
        for (u, &t) in family.fields.iter().zip(&family.times) {
            if touches_outer_boundary(u) {
                return Err(HeleShawError::FreeBoundaryNotInterior { t });
            }
        }
    }
    Ok(family)
}

/// True when a positive node sits next to the outer faces.
fn touches_outer_boundary(u: &GridField<f64>) -> bool {
    let n = u.shape()[0];
    (0..u.len()).any(|p| {
        let m = u.multi(p);
        let near = m[0] <= 1 || m[1] <= 1 || m[0] + 2 >= n || m[1] + 2 >= n;
        near && !u.is_boundary(p) && u.values()[p] > 0.0
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeRecord {
    pub t: f64,
    pub node: usize,
    pub x: Vec<f64>,
    pub densities: Vec<f64>,
}

/// Singular points of every member, with the graph-property audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeSingularSet {
    pub records: Vec<SpaceTimeRecord>,
}

impl SpaceTimeSingularSet {
    /// Distinct times carrying singular points.
    pub fn times(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.records.iter().map(|r| r.t).collect();
        t.dedup();
        t
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn count_at(&self, t: f64) -> usize {
        self.records.iter().filter(|r| r.t == t).count()
    }
}

/// `u` unchanged up to `tol` on the nodes within `cells` of `p`.
fn stationary(a: &GridField<f64>, b: &GridField<f64>, p: usize, cells: usize, tol: f64) -> bool {
    let m = a.multi(p);
    let n = a.shape()[0];
    let lo = |i: usize| i.saturating_sub(cells);
    let hi = |i: usize| (i + cells).min(n - 1);
    for j in lo(m[1])..=hi(m[1]) {
        for i in lo(m[0])..=hi(m[0]) {
            let q = a.flat(&[i, j]);
            if (a.values()[q] - b.values()[q]).abs() > tol {
                return false;
            }
        }
    }
    true
}

pub fn detect_singular_times(
    family: &MonotoneFamily<f64>,
    detector: &DetectorParams,
) -> Result<SpaceTimeSingularSet, HeleShawError> {
    let mut records = Vec::new();
    let mut seen: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
    for (i, (u, &t)) in family.fields.iter().zip(&family.times).enumerate() {
        for s in detect_singular(u, detector) {
            if let Some(&prev) = seen.get(&s.node) {
                let t1 = family.times[prev];
                if t1 != t && stationary(&family.fields[prev], u, s.node, 2, 1e-12) {
                    return Err(HeleShawError::GraphViolation {
                        node: s.node,
                        coords: s.coords,
                        t1,
                        t2: t,
                    });
                }
            }
            seen.insert(s.node, i);
            records.push(SpaceTimeRecord {
                t,
                node: s.node,
                x: s.coords,
                densities: s.densities,
            });
        }
    }
    Ok(SpaceTimeSingularSet { records })
}

/// `{u^{t'} = 0} within {u^t = 0}` for every consecutive pair.
pub fn contact_sets_shrink(family: &MonotoneFamily<f64>, kappa: f64) -> bool {
    let masks: Vec<Vec<bool>> = family
        .fields
        .iter()
        .map(|u| contact_mask(u, kappa))
        .collect();
    masks.windows(2).all(|w| {
        w[1].iter()
            .zip(&w[0])
            .all(|(&later, &earlier)| !later || earlier)
    })
}

/// Settings for the cleaning audit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleaningParams {
    pub k: u32,
    /// Neighbourhood radius around `x0`.
    pub radius: f64,
    /// Nodes with `u` at or below this count as contact.
    pub contact_tol: f64,
    /// Optional bound on `C0`; later contact nodes beyond it are violations.
    pub c0_cap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningViolation {
    pub t: f64,
    pub x: Vec<f64>,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub k: u32,
    /// Smallest `C0` with no later contact node satisfying `t - t0 > C0 |x - x0|^k`.
    pub c0: f64,
    /// Slope of `log(t - t0)` against `log rho(t)`.
    pub exponent: Option<f64>,
    /// `(t - t0, rho(t))` used for the fit.
    pub radii: Vec<(f64, f64)>,
    pub violations: Vec<CleaningViolation>,
}

/// Space-time cleaning around `(x0, t0)`.
pub fn cleaning_audit(
    family: &MonotoneFamily<f64>,
    x0: &[f64],
    t0: f64,
    params: &CleaningParams,
) -> Result<CleaningReport, HeleShawError> {
    if !(params.radius > 0.0) || params.k == 0 {
        return Err(HeleShawError::Invalid(
            "cleaning radius and k must be positive".into(),
        ));
    }
    let mut c0: f64 = 0.0;
    let mut radii = Vec::new();
    let mut violations = Vec::new();
    for (u, &t) in family.fields.iter().zip(&family.times) {
        if t <= t0 {
            continue;
        }
        let dt = t - t0;
        let mut rho = f64::INFINITY;
        for (p, &v) in u.values().iter().enumerate() {
            if v > params.contact_tol {
                continue;
            }
            let x = u.coord(p);
            let d = x
                .iter()
                .zip(x0)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt();
            if d > params.radius {
                continue;
            }
            rho = rho.min(d);
            let ratio = if d > 0.0 {
                dt / d.powi(params.k as i32)
            } else {
                f64::INFINITY
            };
            c0 = c0.max(ratio);
            if params.c0_cap.is_some_and(|cap| ratio > cap) {
                violations.push(CleaningViolation { t, x, ratio });
            }
        }
        if rho.is_finite() && rho > 0.0 {
            radii.push((dt, rho));
        }
    }
    let exponent = loglog_slope(&radii);
    Ok(CleaningReport {
        x0: x0.to_vec(),
        t0,
        k: params.k,
        c0,
        exponent,
        radii,
        violations,
    })
}

/// Least-squares slope of `log a` against `log b`.
fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Pinch location: the record nearest the centroid of the earliest
/// singular cluster, with the sampled times bracketing its release.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PinchPoint {
    pub x: Vec<f64>,
    /// Last sampled time with the node in contact.
    pub t_contact: f64,
    /// First sampled time with the node free.
    pub t_free: f64,
}

pub fn locate_pinch(
    family: &MonotoneFamily<f64>,
    set: &SpaceTimeSingularSet,
    contact_tol: f64,
) -> Option<PinchPoint> {
    let t_first = set.records.first()?.t;
    let first: Vec<&SpaceTimeRecord> = set.records.iter().filter(|r| r.t == t_first).collect();
    let dim = first[0].x.len();
    let centroid: Vec<f64> = (0..dim)
        .map(|d| first.iter().map(|r| r.x[d]).sum::<f64>() / first.len() as f64)
        .collect();
    let dist = |r: &SpaceTimeRecord| {
        r.x.iter()
            .zip(&centroid)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
    };
    let rec = first.iter().min_by(|a, b| dist(a).total_cmp(&dist(b)))?;
    let start = family.times.iter().position(|&t| t == rec.t)?;
    let j =
        (start..family.times.len()).find(|&j| family.fields[j].values()[rec.node] > contact_tol)?;
    (j > 0).then(|| PinchPoint {
        x: rec.x.clone(),
        t_contact: family.times[j - 1],
        t_free: family.times[j],
    })
}

/// Smallest `t` (to `steps` bisections) at which the node nearest `x0` has
/// left the contact set, given contact at `t_lo` and none at `t_hi`.
pub fn refine_cleaning_time(
    geometry: &Geometry,
    intervals: usize,
    params: &SolverParams,
    x0: &[f64],
    mut t_lo: f64,
    mut t_hi: f64,
    contact_tol: f64,
    steps: usize,
) -> Result<f64, HeleShawError> {
    let in_contact = |t: f64| -> Result<bool, HeleShawError> {
        let u = solve(&geometry.problem(intervals, t, params)?)?.u;
        let p = u
            .nearest(x0)
            .ok_or_else(|| HeleShawError::Invalid("x0 outside the grid".into()))?;
        Ok(u.values()[p] <= contact_tol)
    };
    for _ in 0..steps {
        let mid = 0.5 * (t_lo + t_hi);
        if in_contact(mid)? {
            t_lo = mid;
        } else {
            t_hi = mid;
        }
    }
    Ok(t_hi)
}

/// First sampled time after `t0` from which `B_radius(x0)` holds no contact
/// node, if any.
pub fn cleaning_time(
    family: &MonotoneFamily<f64>,
    x0: &[f64],
    t0: f64,
    radius: f64,
    contact_tol: f64,
) -> Option<f64> {
    family
        .fields
        .iter()
        .zip(&family.times)
        .filter(|(_, &t)| t > t0)
        .find(|(u, _)| {
            !u.values().iter().enumerate().any(|(p, &v)| {
                v <= contact_tol && {
                    let x = u.coord(p);
                    x.iter().zip(x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>() <= radius * radius
                }
            })
        })
        .map(|(_, &t)| t)
}

/// `min (u^{t_{i+1}} - u^{t_i}) / (t_{i+1} - t_i)` over `K`; `K` must avoid
/// the contact set at every sampled time.
pub fn uniform_monotonicity_constant(
    family: &MonotoneFamily<f64>,
    k_mask: &[bool],
) -> Result<f64, HeleShawError> {
    for (u, &t) in family.fields.iter().zip(&family.times) {
        if k_mask.len() != u.len() {
            return Err(HeleShawError::Invalid(
                "mask length differs from the grid".into(),
            ));
        }
        if u.values().iter().zip(k_mask).any(|(&v, &m)| m && v <= 0.0) {
            return Err(HeleShawError::CompactTouchesContact { t });
        }
    }
    Ok(family.uniform_monotonicity(k_mask))
}

/// Nodes with `a <= |x - c| <= b`.
pub fn annulus_mask(u: &GridField<f64>, c: &[f64], a: f64, b: f64) -> Vec<bool> {
    (0..u.len())
        .map(|p| {
            let x = u.coord(p);
            let d = x
                .iter()
                .zip(c)
                .map(|(p, q)| (p - q).powi(2))
                .sum::<f64>()
                .sqrt();
            d >= a && d <= b
        })
        .collect()
}
