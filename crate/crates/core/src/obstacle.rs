//! Discrete obstacle problem `u >= 0`, `f - Delta_h u >= 0`,
//! `u (f - Delta_h u) = 0` with Dirichlet data, solved by projected SOR in
//! red-black order.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzFamily;
use crate::grid::{BoxSpec, GridError, GridField};
use crate::poly::Poly;
use crate::scalar::Real;

#[derive(Debug, thiserror::Error)]
pub enum ObstacleError {
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("right-hand side is not positive on the box (min {min_rhs:e}); shrink the box")]
    BoxTooLarge { min_rhs: f64 },
    #[error("monotonicity violated at node {node} ({coords:?}) between t = {t_lo} and t = {t_hi} by {amount:e}")]
    MonotonicityViolation {
        node: usize,
        coords: Vec<f64>,
        t_lo: f64,
        t_hi: f64,
        amount: f64,
    },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Projected SOR parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverParams {
    /// Relaxation factor; `None` selects `2 / (1 + sin(pi / N))`.
    pub omega: Option<f64>,
    /// Bound on `max |min(u, f - Delta_h u)|` over free interior nodes.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sweeps between residual evaluations.
    pub check_every: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            omega: None,
            tolerance: 1e-10,
            max_iterations: 200_000,
            check_every: 20,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), ObstacleError> {
        if let Some(w) = self.omega {
            if !(w > 0.0 && w < 2.0) {
                return Err(ObstacleError::InvalidProblem(format!(
                    "omega must lie in (0, 2), got {w}"
                )));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(ObstacleError::InvalidProblem(
                "tolerance must be positive".into(),
            ));
        }
        if self.max_iterations == 0 || self.check_every == 0 {
            return Err(ObstacleError::InvalidProblem(
                "iteration counts must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn omega_for(&self, intervals: usize) -> f64 {
        self.omega
            .unwrap_or_else(|| 2.0 / (1.0 + (std::f64::consts::PI / intervals as f64).sin()))
    }
}

/// Obstacle problem on a grid.
#[derive(Clone, Debug)]
pub struct ObstacleProblem<T> {
    rhs: GridField<T>,
    /// Dirichlet values on the boundary and on fixed nodes; interior values
    /// serve as the initial guess.
    data: GridField<T>,
    fixed: Option<Vec<bool>>,
    pub params: SolverParams,
}

impl<T: Real> ObstacleProblem<T> {
    pub fn new(
        rhs: GridField<T>,
        data: GridField<T>,
        params: SolverParams,
    ) -> Result<Self, ObstacleError> {
        if !rhs.same_shape(&data) {
            return Err(ObstacleError::InvalidProblem(
                "rhs and boundary grids differ".into(),
            ));
        }
        params.validate()?;
        let min_f = rhs.min_value().re();
        if !(min_f > 0.0) {
            return Err(ObstacleError::InvalidProblem(format!(
                "rhs must be positive, min is {min_f:e}"
            )));
        }
        let bad = (0..data.len()).find(|&p| data.is_boundary(p) && data.values()[p] < T::zero());
        if let Some(p) = bad {
            return Err(ObstacleError::InvalidProblem(format!(
                "negative boundary datum at {:?}",
                data.coord(p)
            )));
        }
        Ok(ObstacleProblem {
            rhs,
            data,
            fixed: None,
            params,
        })
    }

    /// Problem from closures for `f` and the Dirichlet data `g`.
    pub fn from_fns(
        spec: &BoxSpec,
        f: impl Fn(&[f64]) -> f64 + Sync,
        g: impl Fn(&[f64]) -> f64 + Sync,
        params: SolverParams,
    ) -> Result<Self, ObstacleError> {
        spec.validate()?;
        let rhs = GridField::from_fn(spec, |x| T::of(f(x)));
        let mut data: GridField<T> = GridField::on_box(spec);
        let shape = data.shape().to_vec();
        let dim = data.dim();
        let origin = data.origin().to_vec();
        let h = data.spacing();
        data.values_mut()
            .par_iter_mut()
            .enumerate()
            .for_each(|(p, v)| {
                let mut x = [0.0; 3];
                let mut rem = p;
                let mut on_boundary = false;
                for d in 0..dim {
                    let i = rem % shape[d];
                    rem /= shape[d];
                    on_boundary |= i == 0 || i + 1 == shape[d];
                    x[d] = origin[d] + i as f64 * h;
                }
                if on_boundary {
                    *v = T::of(g(&x[..dim]));
                }
            });
        ObstacleProblem::new(rhs, data, params)
    }

    /// Hold the listed interior nodes at their data values.
    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Result<Self, ObstacleError> {
        if fixed.len() != self.data.len() {
            return Err(ObstacleError::InvalidProblem(
                "fixed mask has the wrong length".into(),
            ));
        }
        if fixed
            .iter()
            .zip(self.data.values())
            .any(|(&m, v)| m && *v < T::zero())
        {
            return Err(ObstacleError::InvalidProblem(
                "negative datum on a fixed node".into(),
            ));
        }
        self.fixed = Some(fixed);
        Ok(self)
    }

    /// Replace the interior initial guess (boundary and fixed nodes keep their data).
    pub fn with_initial_guess(mut self, guess: &GridField<T>) -> Result<Self, ObstacleError> {
        if !guess.same_shape(&self.data) {
            return Err(ObstacleError::InvalidProblem(
                "initial guess grid differs".into(),
            ));
        }
        for p in 0..self.data.len() {
            let keep = self.data.is_boundary(p) || self.fixed.as_ref().is_some_and(|m| m[p]);
            if !keep {
                self.data.values_mut()[p] = guess.values()[p].max(T::zero());
            }
        }
        Ok(self)
    }

    pub fn rhs(&self) -> &GridField<T> {
        &self.rhs
    }
    pub fn data(&self) -> &GridField<T> {
        &self.data
    }
    pub fn fixed(&self) -> Option<&[bool]> {
        self.fixed.as_deref()
    }

    fn is_free(&self, p: usize) -> bool {
        !self.data.is_boundary(p) && !self.fixed.as_ref().is_some_and(|m| m[p])
    }
}

/// Solver output.
#[derive(Clone, Debug)]
pub struct Solution<T> {
    pub u: GridField<T>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Copy)]
struct SharedMut<T>(*mut T);
// SAFETY: used only inside one colour of a red-black sweep, where every task
// writes nodes of that colour in its own row and reads nodes of the other
// colour, which no task writes during the half-sweep.
unsafe impl<T: Send> Send for SharedMut<T> {}
unsafe impl<T: Send> Sync for SharedMut<T> {}

struct Layout {
    dim: usize,
    nx: usize,
    ny: usize,
    nz: usize,
    sy: usize,
    sz: usize,
}

impl Layout {
    fn of<T: Real>(g: &GridField<T>) -> Self {
        let s = g.shape();
        let nz = if g.dim() == 3 { s[2] } else { 1 };
        Layout {
            dim: g.dim(),
            nx: s[0],
            ny: s[1],
            nz,
            sy: s[0],
            sz: s[0] * s[1],
        }
    }

    /// Rows are indexed by `(j, k)`; returns them when interior.
    fn interior_row(&self, row: usize) -> Option<(usize, usize)> {
        let j = row % self.ny;
        let k = row / self.ny;
        let inner_j = j >= 1 && j + 1 < self.ny;
        let inner_k = self.dim == 2 || (k >= 1 && k + 1 < self.nz);
        (inner_j && inner_k).then_some((j, k))
    }

    fn rows(&self) -> usize {
        self.ny * self.nz
    }

    /// # Safety
    /// `p` must be an interior node of a buffer of the grid's length.
    unsafe fn nbr_sum_raw<T: Real>(&self, u: *const T, p: usize) -> T {
        let at = |q: usize| unsafe { *u.add(q) };
        let mut s = at(p - 1) + at(p + 1) + at(p - self.sy) + at(p + self.sy);
        if self.dim == 3 {
            s += at(p - self.sz) + at(p + self.sz);
        }
        s
    }

    fn nbr_sum<T: Real>(&self, u: &[T], p: usize) -> T {
        let mut s = u[p - 1] + u[p + 1] + u[p - self.sy] + u[p + self.sy];
        if self.dim == 3 {
            s += u[p - self.sz] + u[p + self.sz];
        }
        s
    }
}

/// Complementarity residual `max |min(u, f - Delta_h u)|` over free nodes.
pub fn complementarity_residual<T: Real>(problem: &ObstacleProblem<T>, u: &GridField<T>) -> f64 {
    let lay = Layout::of(u);
    let inv_h2 = T::of(1.0 / (u.spacing() * u.spacing()));
    let two_n = T::of(2.0 * lay.dim as f64);
    let uv = u.values();
    let fv = problem.rhs.values();
    (0..lay.rows())
        .into_par_iter()
        .map(|row| {
            let Some((j, k)) = lay.interior_row(row) else {
                return 0.0;
            };
            let base = j * lay.sy + k * lay.sz;
            let mut worst: f64 = 0.0;
            for i in 1..lay.nx - 1 {
                let p = base + i;
                if !problem.is_free(p) {
                    continue;
                }
                let lap = (lay.nbr_sum(uv, p) - two_n * uv[p]) * inv_h2;
                let r = uv[p].min(fv[p] - lap);
                worst = worst.max(r.re().abs());
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

/// Solve by projected SOR with red-black ordering.
pub fn solve<T: Real>(problem: &ObstacleProblem<T>) -> Result<Solution<T>, ObstacleError> {
    let mut u = problem.data.clone();
    for p in 0..u.len() {
        if problem.is_free(p) {
            let v = u.values()[p];
            u.values_mut()[p] = v.max(T::zero());
        }
    }
    let lay = Layout::of(&u);
    let intervals = lay.nx - 1;
    let mut omega = T::of(problem.params.omega_for(intervals));
    let h2 = T::of(u.spacing() * u.spacing());
    let inv_2n = T::of(1.0 / (2.0 * lay.dim as f64));
    let hf: Vec<T> = problem.rhs.values().iter().map(|f| *f * h2).collect();
    let free: Vec<bool> = (0..u.len()).map(|p| problem.is_free(p)).collect();
    let params = &problem.params;
    let mut iterations = 0;
    let mut residual = complementarity_residual(problem, &u);
    let mut best = residual;
    let mut stalled = 0;
    while residual > params.tolerance {
        if iterations >= params.max_iterations {
            return Err(ObstacleError::NonConvergence {
                iterations,
                residual,
            });
        }
        for _ in 0..params.check_every {
            for colour in 0..2 {
                let ptr = SharedMut(u.values_mut().as_mut_ptr());
                (0..lay.rows()).into_par_iter().for_each(|row| {
                    let ptr = ptr;
                    let Some((j, k)) = lay.interior_row(row) else {
                        return;
                    };
                    let start = if (1 + j + k) % 2 == colour { 1 } else { 2 };
                    let base = j * lay.sy + k * lay.sz;
                    let mut i = start;
                    while i + 1 < lay.nx {
                        let p = base + i;
                        if free[p] {
                            // SAFETY: see `SharedMut`; indices stay inside the grid
                            // because `p` is an interior node.
                            unsafe {
                                let gs = (lay.nbr_sum_raw(ptr.0, p) - hf[p]) * inv_2n;
                                let old = *ptr.0.add(p);
                                let new = old + omega * (gs - old);
                                *ptr.0.add(p) = new.max(T::zero());
                            }
                        }
                        i += 2;
                    }
                });
            }
            iterations += 1;
        }
        residual = complementarity_residual(problem, &u);
        // Over-relaxation amplifies rounding near convergence; once the
        // residual stops improving, finish with Gauss-Seidel sweeps.
        if residual < 0.5 * best {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= 5 && residual < 1e3 * params.tolerance {
                omega = T::one();
            }
        }
    }
    Ok(Solution {
        u,
        iterations,
        residual,
    })
}

/// Manufactured problem together with its exact solution.
#[derive(Clone, Debug)]
pub struct Manufactured {
    pub problem: ObstacleProblem<f64>,
    pub exact: GridField<f64>,
}

/// How a manufactured right-hand side is put on the grid.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsSampling {
    /// `f* = Delta u*` sampled at the nodes.
    #[default]
    Analytic,
    /// `Delta_h u*` at the nodes, so that the restriction of `u*` solves the
    /// discrete problem exactly.
    Discrete,
}

/// Five-point (seven-point in 3D) Laplacian of a polynomial, in closed form:
/// `sum_d sum_{j>=1} 2 h^{2j-2} / (2j)! d_d^{2j} p`.
pub fn discrete_laplacian(p: &Poly<f64>, h: f64) -> Poly<f64> {
    let mut out = Poly::zero(p.dim());
    for d in 0..p.dim() {
        let mut q = p.partial(d).partial(d);
        let mut coef = 1.0;
        let mut j = 1u32;
        while !q.is_zero() {
            out = &out + &q.scale(&coef);
            q = q.partial(d).partial(d);
            coef *= h * h / (((2 * j + 1) * (2 * j + 2)) as f64);
            j += 1;
        }
    }
    out
}

/// Problem with continuum solution `u* = f0/2 A^2` around the box center.
pub fn manufacture_from_ansatz(
    family: &AnsatzFamily<BigRational>,
    spec: &BoxSpec,
    params: SolverParams,
    sampling: RhsSampling,
) -> Result<Manufactured, ObstacleError> {
    spec.validate()?;
    if family.dim() != spec.dim {
        return Err(ObstacleError::InvalidProblem(
            "family and box dimensions differ".into(),
        ));
    }
    let u_star = family.half_a2().to_f64();
    let f_star = match sampling {
        RhsSampling::Analytic => family.half_a2().laplacian().to_f64(),
        RhsSampling::Discrete => discrete_laplacian(&u_star, spec.spacing()),
    };
    let c = spec.center.clone();
    let local = move |x: &[f64]| -> [f64; 3] {
        let mut y = [0.0; 3];
        for d in 0..x.len() {
            y[d] = x[d] - c[d];
        }
        y
    };
    let dim = spec.dim;
    let exact = GridField::from_fn(spec, |x| u_star.eval_f64(&local(x)[..dim]));
    let rhs = GridField::from_fn(spec, |x| f_star.eval_f64(&local(x)[..dim]));
    let min_rhs = rhs.min_value();
    if !(min_rhs > 0.0) {
        return Err(ObstacleError::BoxTooLarge { min_rhs });
    }
    let mut data = exact.clone();
    for p in 0..data.len() {
        if !data.is_boundary(p) {
            data.values_mut()[p] = 0.0;
        }
    }
    let problem = ObstacleProblem::new(rhs, data, params)?;
    Ok(Manufactured { problem, exact })
}

/// Solutions of a family of problems indexed by increasing `t`.
#[derive(Clone, Debug)]
pub struct MonotoneFamily<T> {
    pub times: Vec<f64>,
    pub fields: Vec<GridField<T>>,
    pub iterations: Vec<usize>,
}

/// Solve `make(t)` for increasing `t`, warm-starting each solve from the
/// previous solution, and verify nodewise monotonicity up to `mono_tol`.
pub fn solve_family<T: Real>(
    times: &[f64],
    make: impl Fn(f64) -> Result<ObstacleProblem<T>, ObstacleError>,
    mono_tol: f64,
) -> Result<MonotoneFamily<T>, ObstacleError> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(ObstacleError::InvalidProblem(
            "family parameters must be nondecreasing".into(),
        ));
    }
    let mut fields: Vec<GridField<T>> = Vec::with_capacity(times.len());
    let mut iterations = Vec::with_capacity(times.len());
    for &t in times {
        let mut problem = make(t)?;
        if let Some(prev) = fields.last() {
            problem = problem.with_initial_guess(prev)?;
        }
        let sol = solve(&problem)?;
        iterations.push(sol.iterations);
        fields.push(sol.u);
    }
    let fam = MonotoneFamily {
        times: times.to_vec(),
        fields,
        iterations,
    };
    fam.check_monotone(mono_tol)?;
    Ok(fam)
}

impl<T: Real> MonotoneFamily<T> {
    pub fn check_monotone(&self, tol: f64) -> Result<(), ObstacleError> {
        for i in 1..self.fields.len() {
            let (a, b) = (&self.fields[i - 1], &self.fields[i]);
            let (node, amount) = a
                .values()
                .iter()
                .zip(b.values())
                .enumerate()
                .map(|(p, (x, y))| (p, (*x - *y).re()))
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, v| if v.1 > acc.1 { v } else { acc },
                );
            if amount > tol {
                return Err(ObstacleError::MonotonicityViolation {
                    node,
                    coords: a.coord(node),
                    t_lo: self.times[i - 1],
                    t_hi: self.times[i],
                    amount,
                });
            }
        }
        Ok(())
    }

    /// `min (u^{t_{i+1}} - u^{t_i}) / (t_{i+1} - t_i)` over the mask.
    pub fn uniform_monotonicity(&self, mask: &[bool]) -> f64 {
        let mut c = f64::INFINITY;
        for i in 1..self.fields.len() {
            let dt = self.times[i] - self.times[i - 1];
            if dt <= 0.0 {
                c = c.min(0.0);
                continue;
            }
            for (p, &m) in mask.iter().enumerate() {
                if m {
                    let d = (self.fields[i].values()[p] - self.fields[i - 1].values()[p]).re();
                    c = c.min(d / dt);
                }
            }
        }
        c
    }
}

/// Contact indicator `{u < kappa h^2}`.
pub fn contact_mask<T: Real>(u: &GridField<T>, kappa: f64) -> Vec<bool> {
    let thr = T::of(kappa * u.spacing() * u.spacing());
    u.values().par_iter().map(|v| *v < thr).collect()
}

/// CSV with one row per node: multi-index, coordinates, indicator.
pub fn contact_csv<T: Real>(u: &GridField<T>, kappa: f64) -> String {
    let mask = contact_mask(u, kappa);
    let dim = u.dim();
    let mut s = String::new();
    let idx_names = ["i", "j", "k"];
    let x_names = ["x1", "x2", "x3"];
    let header: Vec<&str> = idx_names[..dim]
        .iter()
        .chain(&x_names[..dim])
        .copied()
        .collect();
    s.push_str(&header.join(","));
    s.push_str(",contact\n");
    for (p, &c) in mask.iter().enumerate() {
        let m = u.multi(p);
        let x = u.coord(p);
        for d in 0..dim {
            s.push_str(&format!("{},", m[d]));
        }
        for d in 0..dim {
            s.push_str(&format!("{},", x[d]));
        }
        s.push_str(if c { "1\n" } else { "0\n" });
    }
    s
}

/// Singular-point detector settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorParams {
    pub kappa: f64,
    pub tau: f64,
    /// Radii in units of the grid spacing.
    pub radii_cells: Vec<f64>,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            kappa: 10.0,
            tau: 0.25,
            radii_cells: vec![32.0, 64.0],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularNode {
    pub node: usize,
    pub coords: Vec<f64>,
    pub densities: Vec<f64>,
}

/// Counts of contact nodes in balls, via row prefix sums.
struct BallCounter {
    dim: usize,
    nx: usize,
    ny: usize,
    nz: usize,
    prefix: Vec<u32>,
}

impl BallCounter {
    fn new<T: Real>(u: &GridField<T>, mask: &[bool]) -> Self {
        let s = u.shape();
        let nz = if u.dim() == 3 { s[2] } else { 1 };
        let (nx, ny) = (s[0], s[1]);
        let mut prefix = vec![0u32; (nx + 1) * ny * nz];
        for row in 0..ny * nz {
            let mut acc = 0;
            for i in 0..nx {
                acc += u32::from(mask[row * nx + i]);
                prefix[row * (nx + 1) + i + 1] = acc;
            }
        }
        BallCounter {
            dim: u.dim(),
            nx,
            ny,
            nz,
            prefix,
        }
    }

    /// (contact count, node count) in the closed ball of radius `r` cells.
    fn count(&self, c: [usize; 3], r: f64) -> (u64, u64) {
        let ri = r.floor() as i64;
        let mut hit = 0u64;
        let mut tot = 0u64;
        let (kz0, kz1) = if self.dim == 3 { (-ri, ri) } else { (0, 0) };
        for dz in kz0..=kz1 {
            let k = c[2] as i64 + dz;
            if k < 0 || k >= self.nz as i64 {
                continue;
            }
            for dy in -ri..=ri {
                let j = c[1] as i64 + dy;
                if j < 0 || j >= self.ny as i64 {
                    continue;
                }
                let rem = r * r - (dy * dy + dz * dz) as f64;
                if rem < 0.0 {
                    continue;
                }
                let w = rem.sqrt().floor() as i64;
                let lo = (c[0] as i64 - w).max(0) as usize;
                let hi = ((c[0] as i64 + w).min(self.nx as i64 - 1)) as usize;
                let row = (k as usize * self.ny + j as usize) * (self.nx + 1);
                hit += u64::from(self.prefix[row + hi + 1] - self.prefix[row + lo]);
                tot += (hi + 1 - lo) as u64;
            }
        }
        (hit, tot)
    }
}

/// Contact nodes that are local minima of `u` and whose contact density
/// stays below `tau` at every configured radius. Nodes whose largest ball
/// leaves the grid are skipped.
pub fn detect_singular<T: Real>(u: &GridField<T>, params: &DetectorParams) -> Vec<SingularNode> {
    let mask = contact_mask(u, params.kappa);
    let counter = BallCounter::new(u, &mask);
    let r_max = params.radii_cells.iter().copied().fold(0.0, f64::max);
    let lay = Layout::of(u);
    let vals = u.values();
    let shape = u.shape().to_vec();
    let dim = u.dim();
    // Roundoff below this is a tie in the local minimum test.
    let tie = T::of(1e-9 * params.kappa * u.spacing() * u.spacing());
    let mut out: Vec<SingularNode> = (0..u.len())
        .into_par_iter()
        .filter_map(|p| {
            if !mask[p] {
                return None;
            }
            let m = u.multi(p);
            let margin = r_max.ceil() as usize;
            if (0..dim).any(|d| m[d] < margin || m[d] + margin >= shape[d]) {
                return None;
            }
            let v = vals[p];
            let mut nbrs = vec![p - 1, p + 1, p - lay.sy, p + lay.sy];
            if dim == 3 {
                nbrs.extend([p - lay.sz, p + lay.sz]);
            }
            if nbrs.iter().any(|&q| vals[q] + tie < v) {
                return None;
            }
            let mut dens = Vec::with_capacity(params.radii_cells.len());
            for &r in &params.radii_cells {
                let (hit, tot) = counter.count(m, r);
                let d = hit as f64 / tot as f64;
                if d >= params.tau {
                    return None;
                }
                dens.push(d);
            }
            Some(SingularNode {
                node: p,
                coords: u.coord(p),
                densities: dens,
            })
        })
        .collect();
    out.sort_by_key(|s| s.node);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_data_gives_zero() {
        let spec = BoxSpec::centered(2, 1.0, 16);
        let prob: ObstacleProblem<f64> =
            ObstacleProblem::from_fns(&spec, |_| 1.0, |_| 0.0, SolverParams::default()).unwrap();
        let sol = solve(&prob).unwrap();
        assert!(sol.u.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn half_square_is_reproduced() {
        let spec = BoxSpec::centered(2, 1.0, 32);
        let prob: ObstacleProblem<f64> = ObstacleProblem::from_fns(
            &spec,
            |_| 1.0,
            |x| 0.5 * x[1] * x[1],
            SolverParams::default(),
        )
        .unwrap();
        let sol = solve(&prob).unwrap();
        assert!(sol.residual <= 1e-10);
        let exact = GridField::from_fn(&spec, |x| 0.5 * x[1] * x[1]);
        assert!(sol.u.max_abs_diff(&exact) < 1e-9);
        assert!(sol.u.min_value() >= 0.0);
    }

    #[test]
    fn three_dimensional_solve() {
        let spec = BoxSpec::centered(3, 1.0, 12);
        let prob: ObstacleProblem<f64> = ObstacleProblem::from_fns(
            &spec,
            |_| 1.0,
            |x| 0.5 * (x[0] * x[0] + x[2] * x[2]) / 2.0 + 0.1,
            SolverParams::default(),
        )
        .unwrap();
        let sol = solve(&prob).unwrap();
        assert!(complementarity_residual(&prob, &sol.u) <= 1e-10);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let spec = BoxSpec::centered(2, 1.0, 40);
        let prob: ObstacleProblem<f64> = ObstacleProblem::from_fns(
            &spec,
            |x| 1.0 + 0.3 * x[0],
            |x| 0.5 * (x[1] - 0.2 * x[0] * x[0]).powi(2),
            SolverParams::default(),
        )
        .unwrap();
        let a = solve(&prob).unwrap().u;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| solve(&prob).unwrap().u);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_invalid_problems() {
        let spec = BoxSpec::centered(2, 1.0, 8);
        assert!(
            ObstacleProblem::<f64>::from_fns(&spec, |_| 0.0, |_| 0.0, SolverParams::default())
                .is_err()
        );
        assert!(ObstacleProblem::<f64>::from_fns(
            &spec,
            |_| 1.0,
            |_| -1.0,
            SolverParams::default()
        )
        .is_err());
        let bad = SolverParams {
            omega: Some(2.5),
            ..SolverParams::default()
        };
        assert!(ObstacleProblem::<f64>::from_fns(&spec, |_| 1.0, |_| 0.0, bad).is_err());
    }

    #[test]
    fn nonconvergence_reported() {
        let spec = BoxSpec::centered(2, 1.0, 32);
        let params = SolverParams {
            max_iterations: 5,
            check_every: 5,
            ..SolverParams::default()
        };
        let prob: ObstacleProblem<f64> =
            ObstacleProblem::from_fns(&spec, |_| 1.0, |_| 1.0, params).unwrap();
        assert!(matches!(
            solve(&prob),
            Err(ObstacleError::NonConvergence { .. })
        ));
    }

    #[test]
    fn discrete_laplacian_matches_stencil() {
        let p = Poly::<BigRational>::from_ints(2, &[(1, &[4, 2]), (-3, &[0, 6]), (2, &[1, 1])])
            .unwrap()
            .to_f64();
        let h = 0.1;
        let lh = discrete_laplacian(&p, h);
        let x = [0.3, -0.7];
        let e = |a: f64, b: f64| p.eval_f64(&[a, b]);
        let stencil =
            (e(x[0] + h, x[1]) + e(x[0] - h, x[1]) + e(x[0], x[1] + h) + e(x[0], x[1] - h)
                - 4.0 * e(x[0], x[1]))
                / (h * h);
        assert!((lh.eval_f64(&x) - stencil).abs() < 1e-10);
    }

    #[test]
    fn ball_counts() {
        let spec = BoxSpec::centered(2, 1.0, 20);
        let u: GridField<f64> = GridField::on_box(&spec);
        let mask = vec![true; u.len()];
        let c = BallCounter::new(&u, &mask);
        let (hit, tot) = c.count([10, 10, 0], 2.0);
        assert_eq!(hit, tot);
        assert_eq!(tot, 13);
    }
}
