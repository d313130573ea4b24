//! Human-readable summary of a run.

use std::fmt::Write as _;
use std::path::Path;

use crate::run::{Manifest, RunReport, REPORT_FILE};
use crate::CliError;

pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| CliError::ManifestMissing(path.display().to_string()))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Summary of the run described by the manifest at `path`.
pub fn report(path: &Path) -> Result<String, CliError> {
    let manifest = load_manifest(path)?;
    if !manifest.files.iter().any(|f| f.path == REPORT_FILE) {
        return Ok("no runs\n".into());
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let rpath = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&rpath)
        .map_err(|e| CliError::Io(format!("{}: {e}", rpath.display())))?;
    let rep: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Io(format!("{}: {e}", rpath.display())))?;
    Ok(summarize(&rep))
}

pub fn summarize(rep: &RunReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "run: {}", rep.name);
    let _ = writeln!(s, "config hash: {}", rep.config_hash);
    if let Some(v) = &rep.solve {
        let _ = writeln!(s, "solve: {} intervals, h {}", v.intervals, v.h);
        let _ = writeln!(s, "  iterations {}", v.iterations);
        let _ = writeln!(s, "  residual {}", v.residual);
        if let Some(e) = &v.max_error {
            let _ = writeln!(s, "  max error {e}");
        }
    }
    if let Some(f) = &rep.freq {
        let _ = writeln!(
            s,
            "freq: center {:?}, gamma {}, {} radii",
            f.center, f.gamma, f.radii
        );
        let _ = writeln!(s, "  C_fit {} at eps {}", f.c_fit, f.epsilon);
        for (e, c) in &f.sensitivity {
            let _ = writeln!(s, "  sensitivity eps {e}: C {c}");
        }
        let _ = writeln!(s, "  residual after correction {}", f.residual);
        let _ = writeln!(s, "  Monneau C_fit {}", f.monneau_c_fit);
    }
    if let Some(b) = &rep.blowup {
        let _ = writeln!(s, "blowup: center {:?}", b.center);
        let _ = writeln!(
            s,
            "  class: {}{}",
            b.class,
            if b.anomalous { " (anomalous)" } else { "" }
        );
        let _ = writeln!(
            s,
            "  final order {} [exact], stratum dim {} [measured]",
            b.final_order, b.stratum_dim
        );
        let _ = writeln!(s, "  p2 = {} [fitted]", b.p2);
        let _ = writeln!(s, "  lambda in [{}, {}]", b.lambda_lo, b.lambda_hi);
        for r in &b.recovered {
            let _ = writeln!(s, "  p{} = {} [fitted]", r.order, r.poly);
        }
    }
    for e in &rep.signorini {
        let _ = writeln!(
            s,
            "signorini: lambda {} {}: {} (harmonic residual {})",
            e.lambda,
            e.label,
            if e.pass { "pass" } else { "fail" },
            e.harmonic_residual
        );
    }
    if let Some(hs) = &rep.heleshaw {
        let _ = writeln!(
            s,
            "heleshaw: {} samples, {} singular times",
            hs.samples,
            hs.singular_times.len()
        );
        if let (Some(x), Some(t)) = (&hs.pinch_x, &hs.pinch_t) {
            let _ = writeln!(s, "  pinch at {x:?}, t0 {t}");
        }
        if let Some(c) = &hs.c0 {
            let _ = writeln!(s, "  C0 {c}");
        }
        if let Some(e) = &hs.exponent {
            let _ = writeln!(s, "  cleaning exponent {e}");
        }
        if let Some(c) = &hs.monotonicity_constant {
            let _ = writeln!(s, "  uniform monotonicity constant {c}");
        }
    }
    let _ = writeln!(s, "audits:");
    for a in &rep.audits {
        let _ = writeln!(
            s,
            "  {} {}: {}",
            if a.pass { "PASS" } else { "FAIL" },
            a.name,
            a.detail
        );
        if !a.violating_radii.is_empty() {
            let radii: Vec<String> = a
                .violating_radii
                .iter()
                .map(|r| format!("{r:.6e}"))
                .collect();
            let _ = writeln!(s, "    violating radii: {}", radii.join(", "));
        }
    }
    let _ = writeln!(
        s,
        "overall: {}",
        if rep.all_pass() { "PASS" } else { "FAIL" }
    );
    s
}
