//! Versioned campaign configuration.

use std::path::{Path, PathBuf};

use num_rational::BigRational;
use obstacle_lab::ansatz::{AnsatzFamily, AnsatzInput, Axis, Rhs};
use obstacle_lab::grid::BoxSpec;
use obstacle_lab::heleshaw::{CleaningParams, Geometry, TimeSampling};
use obstacle_lab::obstacle::{DetectorParams, RhsSampling, SolverParams};
use obstacle_lab::poly::{HomoPoly, Poly};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub schema_version: u32,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub modules: Modules,
    /// Output directory, relative to the working directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

/// Problem definition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    /// Manufactured problem with exact solution `f0/2 A_k^2`.
    Ansatz {
        dim: usize,
        order: u32,
        nu: Axis,
        /// `p_3, ..., p_k`, each homogeneous of its degree.
        #[serde(default)]
        p: Vec<Poly<BigRational>>,
        /// Family file written by `lab ansatz`, relative to the config file;
        /// replaces `dim`, `order`, `nu` and `p` when present.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_file: Option<String>,
        /// Taylor polynomial of the right-hand side; `f = 1` when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rhs: Option<Poly<BigRational>>,
        #[serde(default)]
        rhs_sampling: RhsSampling,
    },
    /// Polynomial right-hand side and boundary data.
    Polynomial {
        dim: usize,
        rhs: Poly<BigRational>,
        boundary: Poly<BigRational>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub intervals: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

/// Module toggles; an absent entry disables the module.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modules {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveModule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq: Option<FreqModule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupModule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signorini: Option<SignoriniModule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heleshaw: Option<HeleShawModule>,
}

impl Modules {
    pub fn is_empty(&self) -> bool {
        self.solve.is_none()
            && self.freq.is_none()
            && self.blowup.is_none()
            && self.signorini.is_none()
            && self.heleshaw.is_none()
    }

    /// Keep only the named module, plus the solve it depends on.
    pub fn restrict(&self, only: ModuleKind) -> Modules {
        let needs_solve = matches!(
            only,
            ModuleKind::Solve | ModuleKind::Freq | ModuleKind::Blowup
        );
        Modules {
            solve: if needs_solve {
                Some(self.solve.clone().unwrap_or_default())
            } else {
                None
            },
            freq: if only == ModuleKind::Freq {
                self.freq.clone()
            } else {
                None
            },
            blowup: if only == ModuleKind::Blowup {
                self.blowup.clone()
            } else {
                None
            },
            signorini: if only == ModuleKind::Signorini {
                self.signorini.clone()
            } else {
                None
            },
            heleshaw: if only == ModuleKind::HeleShaw {
                self.heleshaw.clone()
            } else {
                None
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModuleKind {
    Solve,
    Freq,
    Blowup,
    Signorini,
    HeleShaw,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveModule {
    /// Also write `contact.csv`.
    #[serde(default)]
    pub contact_csv: bool,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
}

fn default_kappa() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreqModule {
    /// Center; the box center when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub gamma: f64,
    pub lambda: f64,
    pub k: u32,
    pub epsilon: f64,
    /// Smallest radius in grid cells.
    pub r_min_cells: f64,
    pub r_max: f64,
    /// Subtract the problem's Ansatz before computing the profile.
    #[serde(default)]
    pub subtract_ansatz: bool,
    /// Bound on violations left after the drift correction.
    pub violation_tol: f64,
    /// Upper bound on the fitted drift constant; unbounded when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupModule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
    pub max_k: u32,
    /// Fit radii in grid cells.
    pub fit_radii_cells: Vec<f64>,
    /// Largest radius for frequency estimates.
    pub freq_r_max: f64,
    pub noise_floor: f64,
    pub even_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignoriniModule {
    pub dim: usize,
    /// Homogeneities as rationals, e.g. `"7/2"`.
    pub lambdas: Vec<String>,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeleShawModule {
    pub geometry: Geometry,
    pub intervals: usize,
    pub times: TimeSampling,
    #[serde(default)]
    pub detector: DetectorParams,
    pub cleaning: CleaningParams,
    /// Bisection steps refining the pinch time.
    pub refine_steps: usize,
    /// Optional annulus `[a, b]` around the origin for the uniform
    /// monotonicity constant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonicity_annulus: Option<[f64; 2]>,
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::ConfigInvalid {
        field: field.to_string(),
        message: msg.to_string(),
    }
}

impl CampaignConfig {
    pub fn from_json(s: &str) -> Result<Self, CliError> {
        let cfg: CampaignConfig = serde_json::from_str(s).map_err(|e| invalid("<root>", e))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((cfg, base))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(
            serde_json::to_string(self)
                .expect("serializable")
                .as_bytes(),
        ))
    }

    /// Check every parameter range before any solve.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, found {}", self.schema_version),
            ));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(invalid("name", "must be a nonempty file-name-safe string"));
        }
        self.solver.validate().map_err(|e| invalid("solver", e))?;
        if let Some(g) = &self.grid {
            if !(g.half_width > 0.0) || !g.half_width.is_finite() {
                return Err(invalid(
                    "grid.half_width",
                    format!("must be positive, so that h > 0 (got {})", g.half_width),
                ));
            }
            if g.intervals < 2 {
                return Err(invalid("grid.intervals", "must be at least 2"));
            }
            if let Some(c) = &g.center {
                if Some(c.len()) != self.problem_dim() {
                    return Err(invalid(
                        "grid.center",
                        "length must equal the problem dimension",
                    ));
                }
            }
        }
        match &self.problem {
            Some(ProblemSpec::Ansatz {
                dim,
                order,
                p,
                p_file,
                ..
            }) => {
                if p_file.is_none() {
                    if !(2..=3).contains(dim) {
                        return Err(invalid("problem.dim", "must be 2 or 3"));
                    }
                    if *order < 2 || p.len() + 2 != *order as usize {
                        return Err(invalid(
                            "problem.p",
                            format!(
                                "order {order} needs {} polynomials",
                                order.saturating_sub(2)
                            ),
                        ));
                    }
                }
            }
            Some(ProblemSpec::Polynomial { dim, rhs, boundary }) => {
                if !(2..=3).contains(dim) || rhs.dim() != *dim || boundary.dim() != *dim {
                    return Err(invalid(
                        "problem",
                        "dimensions of rhs and boundary must equal dim (2 or 3)",
                    ));
                }
            }
            None => {}
        }
        let m = &self.modules;
        let needs_grid = m.solve.is_some() || m.freq.is_some() || m.blowup.is_some();
        if needs_grid && (self.problem.is_none() || self.grid.is_none()) {
            return Err(invalid(
                "modules",
                "solve, freq and blowup need both `problem` and `grid`",
            ));
        }
        if let Some(f) = &m.freq {
            if !(f.gamma > 0.0)
                || !(f.epsilon > 0.0)
                || !(f.r_min_cells > 0.0)
                || !(f.r_max > 0.0)
                || !(f.violation_tol >= 0.0)
            {
                return Err(invalid(
                    "modules.freq",
                    "gamma, epsilon, r_min_cells and r_max must be positive",
                ));
            }
            if f.c_max.is_some_and(|c| !(c >= 0.0)) {
                return Err(invalid("modules.freq.c_max", "must be nonnegative"));
            }
            if f.subtract_ansatz && !matches!(self.problem, Some(ProblemSpec::Ansatz { .. })) {
                return Err(invalid(
                    "modules.freq.subtract_ansatz",
                    "needs an ansatz problem",
                ));
            }
        }
        if let Some(b) = &m.blowup {
            if b.max_k < 2
                || b.fit_radii_cells.len() < 2
                || b.fit_radii_cells.iter().any(|r| !(*r > 0.0))
            {
                return Err(invalid(
                    "modules.blowup",
                    "max_k >= 2 and at least two positive fit radii are required",
                ));
            }
            if !(b.freq_r_max > 0.0) || !(b.noise_floor >= 0.0) || !(b.even_tolerance > 0.0) {
                return Err(invalid(
                    "modules.blowup",
                    "freq_r_max and even_tolerance must be positive",
                ));
            }
        }
        if let Some(s) = &m.signorini {
            if !(2..=3).contains(&s.dim) || !(s.tolerance > 0.0) {
                return Err(invalid(
                    "modules.signorini",
                    "dim must be 2 or 3 and tolerance positive",
                ));
            }
            for l in &s.lambdas {
                parse_lambda(l).map_err(|e| invalid("modules.signorini.lambdas", e))?;
            }
        }
        if let Some(h) = &m.heleshaw {
            h.geometry
                .validate()
                .map_err(|e| invalid("modules.heleshaw.geometry", e))?;
            if h.intervals < 8 || h.times.count == 0 || !(h.times.end >= h.times.start) {
                return Err(invalid(
                    "modules.heleshaw",
                    "need intervals >= 8 and a nondecreasing nonempty time range",
                ));
            }
            if h.cleaning.k == 0 || !(h.cleaning.radius > 0.0) {
                return Err(invalid(
                    "modules.heleshaw.cleaning",
                    "k and radius must be positive",
                ));
            }
            if h.detector.radii_cells.is_empty()
                || !(h.detector.tau > 0.0)
                || !(h.detector.kappa > 0.0)
            {
                return Err(invalid(
                    "modules.heleshaw.detector",
                    "radii, tau and kappa must be positive",
                ));
            }
        }
        Ok(())
    }

    fn problem_dim(&self) -> Option<usize> {
        match &self.problem {
            Some(ProblemSpec::Ansatz { dim, .. }) | Some(ProblemSpec::Polynomial { dim, .. }) => {
                Some(*dim)
            }
            None => None,
        }
    }

    /// Grid box for the problem.
    pub fn box_spec(&self, dim: usize) -> Option<BoxSpec> {
        self.grid.as_ref().map(|g| {
            let mut spec = BoxSpec::centered(dim, g.half_width, g.intervals);
            if let Some(c) = &g.center {
                spec.center = c.clone();
            }
            spec
        })
    }
}

pub fn parse_lambda(s: &str) -> Result<BigRational, String> {
    obstacle_lab::scalar::parse_rational(s).ok_or_else(|| format!("bad rational `{s}`"))
}

/// Build the exact family of an ansatz problem, reading `p_file` relative to
/// `base`.
pub fn build_family(
    spec: &ProblemSpec,
    base: &Path,
) -> Result<AnsatzFamily<BigRational>, CliError> {
    let ProblemSpec::Ansatz {
        dim,
        order,
        nu,
        p,
        p_file,
        rhs,
        ..
    } = spec
    else {
        return Err(invalid("problem", "not an ansatz problem"));
    };
    if let Some(file) = p_file {
        let path = base.join(file);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return AnsatzFamily::from_json(&text).map_err(|e| invalid("problem.p_file", e));
    }
    let mut list = Vec::with_capacity(p.len());
    for (i, q) in p.iter().enumerate() {
        let deg = i as u32 + 3;
        if q.dim() != *dim {
            return Err(invalid(
                "problem.p",
                format!("p_{deg} has dimension {}", q.dim()),
            ));
        }
        if q.is_zero() {
            list.push(HomoPoly::zero(*dim, deg));
        } else if q.min_degree() == Some(deg) && q.degree() == Some(deg) {
            list.push(q.part(deg));
        } else {
            return Err(invalid(
                "problem.p",
                format!("p_{deg} is not homogeneous of degree {deg}"),
            ));
        }
    }
    let rhs = match rhs {
        None => Rhs::Unit,
        Some(f) => Rhs::Taylor(f.clone()),
    };
    let input =
        AnsatzInput::new(*dim, *order, *nu, list, rhs).map_err(|e| invalid("problem", e))?;
    AnsatzFamily::build(input).map_err(|e| invalid("problem", e))
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
