//! Campaign execution and artifact manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_rational::BigRational;
use obstacle_lab::ansatz::{AnsatzFamily, Rhs};
use obstacle_lab::blowup::{analyze_point, PipelineParams, RecoverParams};
use obstacle_lab::diagnostics::{frequency_profile, Difference, Field, PolyField, ProfileParams};
use obstacle_lab::grid::GridField;
use obstacle_lab::heleshaw::{
    annulus_mask, cleaning_audit, contact_sets_shrink, detect_singular_times, locate_pinch,
    refine_cleaning_time, solve_geometry, uniform_monotonicity_constant, HeleShawError,
};
use obstacle_lab::obstacle::{contact_csv, manufacture_from_ansatz, solve, ObstacleProblem};
use obstacle_lab::poly::Poly;
use obstacle_lab::signorini::{catalog, verify_signorini};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{
    build_family, hex, parse_lambda, CampaignConfig, ModuleKind, ProblemSpec, SCHEMA_VERSION,
};
use crate::CliError;

/// How a reported number was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Measured,
    Fitted,
    Exact,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::Measured => "measured",
            Provenance::Fitted => "fitted",
            Provenance::Exact => "exact",
        })
    }
}

/// A number with its provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tagged {
    pub value: f64,
    pub provenance: Provenance,
}

impl std::fmt::Display for Tagged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.6e} [{}]", self.value, self.provenance)
    }
}

fn measured(value: f64) -> Tagged {
    Tagged {
        value,
        provenance: Provenance::Measured,
    }
}

fn fitted(value: f64) -> Tagged {
    Tagged {
        value,
        provenance: Provenance::Fitted,
    }
}

fn exact(value: f64) -> Tagged {
    Tagged {
        value,
        provenance: Provenance::Exact,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub violating_radii: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub intervals: usize,
    pub h: Tagged,
    pub iterations: Tagged,
    pub residual: Tagged,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_error: Option<Tagged>,
    pub min_rhs: Tagged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreqSummary {
    pub center: Vec<f64>,
    pub gamma: Tagged,
    pub epsilon: Tagged,
    pub radii: usize,
    pub c_fit: Tagged,
    pub residual: Tagged,
    pub sensitivity: Vec<(f64, Tagged)>,
    pub monneau_c_fit: Tagged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoveredTerm {
    pub order: u32,
    pub poly: String,
    pub coefficients: Vec<(String, Tagged)>,
    pub consistent: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlowupSummary {
    pub center: Vec<f64>,
    pub class: String,
    pub anomalous: bool,
    pub final_order: u32,
    pub stratum_dim: usize,
    pub p2: String,
    pub lambda_lo: Tagged,
    pub lambda_hi: Tagged,
    pub recovered: Vec<RecoveredTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignoriniEntry {
    pub lambda: String,
    pub label: String,
    pub pass: bool,
    pub harmonic_residual: Tagged,
    pub min_on_l: Tagged,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeleShawSummary {
    pub samples: usize,
    pub singular_times: Vec<Tagged>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinch_x: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinch_t: Option<Tagged>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<Tagged>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponent: Option<Tagged>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotonicity_constant: Option<Tagged>,
}

/// Machine-readable run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub freq: Option<FreqSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupSummary>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub signorini: Vec<SignoriniEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heleshaw: Option<HeleShawSummary>,
    pub audits: Vec<Audit>,
}

impl RunReport {
    pub fn all_pass(&self) -> bool {
        self.audits.iter().all(|a| a.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub name: String,
    pub config_hash: String,
    pub files: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable") + "\n"
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub report: Option<RunReport>,
}

impl RunOutcome {
    pub fn all_pass(&self) -> bool {
        self.report.as_ref().map_or(true, RunReport::all_pass)
    }
}

/// Files produced by a run, written together at the end.
#[derive(Default)]
struct Artifacts {
    files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.insert(name.to_string(), bytes);
    }
}

fn module_err(module: &'static str, e: impl std::fmt::Display) -> CliError {
    CliError::Module {
        module,
        message: e.to_string(),
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    (serde_json::to_string_pretty(v).expect("serializable") + "\n").into_bytes()
}

/// Radii from `r_max` down to `r_min`, ratio `2^{-1/4}`.
pub fn radii_between(r_min: f64, r_max: f64) -> Vec<f64> {
    let q = 0.5f64.powf(0.25);
    let mut out = Vec::new();
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        out.push(r);
        r *= q;
    }
    out
}

struct Solved {
    u: GridField<f64>,
    family: Option<AnsatzFamily<BigRational>>,
    center: Vec<f64>,
    rhs: Rhs<BigRational>,
}

fn rational(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_default()
}

fn run_solve(
    cfg: &CampaignConfig,
    base: &Path,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<Solved, CliError> {
    let problem = cfg.problem.as_ref().expect("validated");
    let module = cfg.modules.solve.clone().unwrap_or_default();
    let (dim, family) = match problem {
        ProblemSpec::Ansatz { .. } => {
            let fam = build_family(problem, base)?;
            (fam.dim(), Some(fam))
        }
        ProblemSpec::Polynomial { dim, .. } => (*dim, None),
    };
    let spec = cfg.box_spec(dim).expect("validated");
    let center = spec.center.clone();
    let (prob, exact_u, rhs): (
        ObstacleProblem<f64>,
        Option<GridField<f64>>,
        Rhs<BigRational>,
    ) = match problem {
        ProblemSpec::Ansatz { rhs_sampling, .. } => {
            let fam = family.as_ref().expect("ansatz");
            let m = manufacture_from_ansatz(fam, &spec, cfg.solver.clone(), *rhs_sampling)
                .map_err(|e| module_err("obstacle", e))?;
            art.add("family.json", (fam.to_json() + "\n").into_bytes());
            (m.problem, Some(m.exact), fam.input().rhs().clone())
        }
        ProblemSpec::Polynomial { rhs, boundary, .. } => {
            let f = rhs.to_f64();
            let g = boundary.to_f64();
            let p = ObstacleProblem::from_fns(
                &spec,
                |x| f.eval_f64(x),
                |x| g.eval_f64(x),
                cfg.solver.clone(),
            )
            .map_err(|e| module_err("obstacle", e))?;
            let c: Vec<BigRational> = center.iter().map(|&x| rational(x)).collect();
            (p, None, Rhs::Taylor(rhs.translate(&c)))
        }
    };
    let sol = solve(&prob).map_err(|e| module_err("obstacle", e))?;
    let mut buf = Vec::new();
    sol.u
        .write_to(&mut buf)
        .map_err(|e| module_err("grid", e))?;
    art.add("u.grid", buf);
    if module.contact_csv {
        art.add(
            "contact.csv",
            contact_csv(&sol.u, module.kappa).into_bytes(),
        );
    }
    let max_error = exact_u.as_ref().map(|e| measured(sol.u.max_abs_diff(e)));
    rep.solve = Some(SolveSummary {
        intervals: spec.intervals,
        h: exact(spec.spacing()),
        iterations: measured(sol.iterations as f64),
        residual: measured(sol.residual),
        max_error,
        min_rhs: measured(prob.rhs().min_value()),
    });
    rep.audits.push(Audit {
        name: "solve.complementarity".into(),
        pass: sol.residual <= cfg.solver.tolerance,
        detail: format!(
            "residual {:.3e} against tolerance {:.3e}",
            sol.residual, cfg.solver.tolerance
        ),
        violating_radii: Vec::new(),
    });
    Ok(Solved {
        u: sol.u,
        family,
        center,
        rhs,
    })
}

fn run_freq(
    cfg: &CampaignConfig,
    s: &Solved,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<(), CliError> {
    let m = cfg.modules.freq.as_ref().expect("enabled");
    let x0 = m.center.clone().unwrap_or_else(|| s.center.clone());
    let h = s.u.spacing();
    let radii = radii_between(m.r_min_cells * h, m.r_max);
    let params = ProfileParams {
        gamma: m.gamma,
        lambda: m.lambda,
        k: m.k,
        epsilon: m.epsilon,
    };
    let ansatz = match (&s.family, m.subtract_ansatz) {
        (Some(f), true) => Some(PolyField::new(f.p().to_f64(), s.center.clone())),
        _ => None,
    };
    let zero = PolyField::new(Poly::zero(s.u.dim()), s.center.clone());
    let v = Difference {
        a: &s.u,
        b: ansatz.as_ref().unwrap_or(&zero),
    };
    let prof =
        frequency_profile(&v, &x0, &radii, &params).map_err(|e| module_err("diagnostics", e))?;
    art.add("profile.csv", prof.to_csv().into_bytes());
    let drift = &prof.phi_drift;
    rep.freq = Some(FreqSummary {
        center: x0,
        gamma: exact(m.gamma),
        epsilon: exact(m.epsilon),
        radii: radii.len(),
        c_fit: fitted(drift.c_fit),
        residual: measured(drift.residual),
        sensitivity: drift
            .sensitivity
            .iter()
            .map(|&(e, c)| (e, fitted(c)))
            .collect(),
        monneau_c_fit: fitted(prof.monneau_drift.c_fit),
    });
    let c_ok = m.c_max.map_or(true, |c| drift.c_fit <= c);
    let pass = drift.c_fit.is_finite() && c_ok && drift.residual <= m.violation_tol;
    rep.audits.push(Audit {
        name: "freq.phi_drift".into(),
        pass,
        detail: format!(
            "C_fit {:.4e} at eps {}, {} raw violations, residual {:.3e} against {:.1e}{}",
            drift.c_fit,
            drift.epsilon,
            drift.violations.len(),
            drift.residual,
            m.violation_tol,
            m.c_max
                .map(|c| format!(", C bound {c:.1e}"))
                .unwrap_or_default()
        ),
        violating_radii: if pass {
            Vec::new()
        } else {
            drift.violations.iter().map(|v| v.r_small).collect()
        },
    });
    Ok(())
}

fn run_blowup(cfg: &CampaignConfig, s: &Solved, rep: &mut RunReport) {
    let m = cfg.modules.blowup.as_ref().expect("enabled");
    let x0 = m.center.clone().unwrap_or_else(|| s.center.clone());
    let h = s.u.spacing();
    let params = PipelineParams {
        max_k: m.max_k,
        fit_radii: m.fit_radii_cells.clone(),
        freq_radii: radii_between(4.0 * h, m.freq_r_max),
        noise_floor: m.noise_floor,
        recover: RecoverParams {
            even_tolerance: m.even_tolerance,
            extrapolate: true,
        },
    };
    let u: &dyn Field = &s.u;
    match analyze_point(u, &x0, &s.rhs, &params) {
        Ok(r) => {
            let recovered = r
                .recovered
                .iter()
                .map(|rec| RecoveredTerm {
                    order: rec.order,
                    poly: rec.poly.to_string(),
                    coefficients: rec
                        .poly
                        .terms()
                        .map(|(mono, c)| (mono.to_string(), fitted(*c)))
                        .collect(),
                    consistent: rec.consistent,
                })
                .collect();
            rep.audits.push(Audit {
                name: "blowup.classification".into(),
                pass: true,
                detail: format!("class {} at order {}", r.class, r.final_order),
                violating_radii: Vec::new(),
            });
            rep.blowup = Some(BlowupSummary {
                center: x0,
                class: r.class.to_string(),
                anomalous: r.anomalous,
                final_order: r.final_order,
                stratum_dim: r.stratum_dim,
                p2: r.p2.to_string(),
                lambda_lo: fitted(r.lambda.lo),
                lambda_hi: fitted(r.lambda.hi),
                recovered,
            });
        }
        Err(e) => rep.audits.push(Audit {
            name: "blowup.classification".into(),
            pass: false,
            detail: format!("blowup: {e}"),
            violating_radii: Vec::new(),
        }),
    }
}

fn run_signorini(
    cfg: &CampaignConfig,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<(), CliError> {
    let m = cfg.modules.signorini.as_ref().expect("enabled");
    let mut listing = Vec::new();
    for l in &m.lambdas {
        let lambda = parse_lambda(l).expect("validated");
        let cands = catalog(m.dim, &lambda).map_err(|e| module_err("signorini", e))?;
        let mut all = true;
        for q in &cands {
            let r = verify_signorini(q, m.tolerance);
            all &= r.passes();
            rep.signorini.push(SignoriniEntry {
                lambda: l.clone(),
                label: q.label(),
                pass: r.passes(),
                harmonic_residual: measured(r.harmonic_residual),
                min_on_l: measured(r.min_on_l),
            });
        }
        listing.push(serde_json::json!({ "lambda": l, "candidates": cands }));
        rep.audits.push(Audit {
            name: format!("signorini.lambda={l}"),
            pass: all,
            detail: if cands.is_empty() {
                "empty catalog".into()
            } else {
                format!("{} candidates verified", cands.len())
            },
            violating_radii: Vec::new(),
        });
    }
    art.add("signorini.json", json(&listing));
    Ok(())
}

fn run_heleshaw(
    cfg: &CampaignConfig,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<(), CliError> {
    let m = cfg.modules.heleshaw.as_ref().expect("enabled");
    let times = m.times.times();
    let fam = solve_geometry(&m.geometry, m.intervals, &times, &cfg.solver)
        .map_err(|e| module_err("heleshaw", e))?;
    let h = fam.fields[0].spacing();
    let mut summary = HeleShawSummary {
        samples: times.len(),
        singular_times: Vec::new(),
        pinch_x: None,
        pinch_t: None,
        c0: None,
        exponent: None,
        monotonicity_constant: None,
    };
    let set = match detect_singular_times(&fam, &m.detector) {
        Ok(set) => {
            rep.audits.push(Audit {
                name: "heleshaw.graph".into(),
                pass: true,
                detail: format!("{} singular records", set.records.len()),
                violating_radii: Vec::new(),
            });
            Some(set)
        }
        Err(e @ HeleShawError::GraphViolation { .. }) => {
            rep.audits.push(Audit {
                name: "heleshaw.graph".into(),
                pass: false,
                detail: e.to_string(),
                violating_radii: Vec::new(),
            });
            None
        }
        Err(e) => return Err(module_err("heleshaw", e)),
    };
    let shrink = contact_sets_shrink(&fam, m.detector.kappa);
    rep.audits.push(Audit {
        name: "heleshaw.contact_shrinks".into(),
        pass: shrink,
        detail: "contact sets nested along the family".into(),
        violating_radii: Vec::new(),
    });
    let mut csv = String::from("t,singular_count,contact_area,iterations\n");
    for (i, (u, &t)) in fam.fields.iter().zip(&fam.times).enumerate() {
        let area = u
            .values()
            .iter()
            .filter(|&&v| v <= m.cleaning.contact_tol)
            .count() as f64
            * h.powi(u.dim() as i32);
        let count = set.as_ref().map_or(0, |s| s.count_at(t));
        csv.push_str(&format!("{t:e},{count},{area:e},{}\n", fam.iterations[i]));
    }
    art.add("heleshaw.csv", csv.into_bytes());
    if let Some(set) = &set {
        summary.singular_times = set.times().into_iter().map(measured).collect();
        art.add("singular.json", json(&set.records));
        if let Some(p) = locate_pinch(&fam, set, m.cleaning.contact_tol) {
            let t0 = refine_cleaning_time(
                &m.geometry,
                m.intervals,
                &cfg.solver,
                &p.x,
                p.t_contact,
                p.t_free,
                m.cleaning.contact_tol,
                m.refine_steps,
            )
            .map_err(|e| module_err("heleshaw", e))?;
            let audit = cleaning_audit(&fam, &p.x, t0, &m.cleaning)
                .map_err(|e| module_err("heleshaw", e))?;
            let pass =
                audit.c0.is_finite() && audit.exponent.is_some() && audit.violations.is_empty();
            rep.audits.push(Audit {
                name: "heleshaw.cleaning".into(),
                pass,
                detail: format!(
                    "C0 {:.4e}, exponent {}, {} violations",
                    audit.c0,
                    audit
                        .exponent
                        .map_or("none".to_string(), |e| format!("{e:.4}")),
                    audit.violations.len()
                ),
                violating_radii: audit
                    .violations
                    .iter()
                    .map(|v| {
                        v.x.iter()
                            .zip(&p.x)
                            .map(|(a, b)| (a - b).powi(2))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect(),
            });
            summary.pinch_x = Some(p.x.clone());
            summary.pinch_t = Some(fitted(t0));
            summary.c0 = Some(fitted(audit.c0));
            summary.exponent = audit.exponent.map(fitted);
            art.add("cleaning.json", json(&audit));
        }
    }
    if let Some([a, b]) = m.monotonicity_annulus {
        let mask = annulus_mask(&fam.fields[0], &vec![0.0; fam.fields[0].dim()], a, b);
        match uniform_monotonicity_constant(&fam, &mask) {
            Ok(c) => {
                summary.monotonicity_constant = Some(measured(c));
                rep.audits.push(Audit {
                    name: "heleshaw.uniform_monotonicity".into(),
                    pass: c > 0.0,
                    detail: format!("c_K {c:.4e}"),
                    violating_radii: Vec::new(),
                });
            }
            Err(e) => rep.audits.push(Audit {
                name: "heleshaw.uniform_monotonicity".into(),
                pass: false,
                detail: e.to_string(),
                violating_radii: Vec::new(),
            }),
        }
    }
    rep.heleshaw = Some(summary);
    Ok(())
}

/// Execute a campaign, writing artifacts and `manifest.json` into `out`.
pub fn run(cfg: &CampaignConfig, base: &Path, out: &Path) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut art = Artifacts::default();
    art.add("config.json", (cfg.to_json() + "\n").into_bytes());
    let mut report = None;
    if !cfg.modules.is_empty() {
        let mut rep = RunReport {
            schema_version: SCHEMA_VERSION,
            name: cfg.name.clone(),
            config_hash: hash.clone(),
            solve: None,
            freq: None,
            blowup: None,
            signorini: Vec::new(),
            heleshaw: None,
            audits: Vec::new(),
        };
        let m = &cfg.modules;
        if m.solve.is_some() || m.freq.is_some() || m.blowup.is_some() {
            let solved = run_solve(cfg, base, &mut art, &mut rep)?;
            if m.freq.is_some() {
                run_freq(cfg, &solved, &mut art, &mut rep)?;
            }
            if m.blowup.is_some() {
                run_blowup(cfg, &solved, &mut rep);
            }
        }
        if m.signorini.is_some() {
            run_signorini(cfg, &mut art, &mut rep)?;
        }
        if m.heleshaw.is_some() {
            run_heleshaw(cfg, &mut art, &mut rep)?;
        }
        art.add(REPORT_FILE, json(&rep));
        report = Some(rep);
    }
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut files = Vec::new();
    for (name, bytes) in &art.files {
        let path = out.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        files.push(ManifestEntry {
            path: name.clone(),
            sha256: hex(&Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
    }
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        name: cfg.name.clone(),
        config_hash: hash,
        files,
    };
    let mpath = out.join(MANIFEST_FILE);
    std::fs::write(&mpath, manifest.to_json())
        .map_err(|e| CliError::Io(format!("{}: {e}", mpath.display())))?;
    Ok(RunOutcome {
        dir: out.to_path_buf(),
        manifest,
        report,
    })
}

/// Run only one module of a campaign (with the solve it needs).
pub fn run_module(
    cfg: &CampaignConfig,
    base: &Path,
    out: &Path,
    only: ModuleKind,
) -> Result<RunOutcome, CliError> {
    let mut c = cfg.clone();
    c.modules = cfg.modules.restrict(only);
    run(&c, base, out)
}

/// Default output directory for a config.
pub fn default_out(cfg: &CampaignConfig) -> PathBuf {
    cfg.output_dir
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out").join(&cfg.name))
}
