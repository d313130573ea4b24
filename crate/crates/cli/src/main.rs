use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use obstacle_lab::ansatz::{AnsatzFamily, AnsatzInput, Axis, Rhs};
use obstacle_lab::poly::{from_text, HomoPoly, Poly};
use obstacle_lab::signorini::{catalog, verify_signorini};
use obstacle_lab::Rational;
use obstacle_lab_cli::config::{parse_lambda, ModuleKind};
use obstacle_lab_cli::run::default_out;
use obstacle_lab_cli::{report, run, run_module, CampaignConfig, CliError, RunOutcome};

#[derive(Parser)]
#[command(
    name = "lab",
    version,
    about = "Obstacle-problem Ansatz, solver and blow-up diagnostics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an exact Ansatz family and print it as JSON.
    Ansatz {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        order: u32,
        /// Normal axis, 1-based with optional sign, e.g. `2` or `-2`.
        #[arg(long, default_value = "last", allow_hyphen_values = true)]
        nu: String,
        /// Text file with `p_3, ..., p_k` separated by `---` lines.
        #[arg(long)]
        p_file: Option<PathBuf>,
        /// Text file with the Taylor polynomial of the right-hand side.
        #[arg(long)]
        rhs_file: Option<PathBuf>,
        /// Write the family here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the configured obstacle problem.
    Solve(RunArgs),
    /// Solve and compute the frequency profile.
    Freq(RunArgs),
    /// Solve and run the blow-up pipeline.
    Blowup(RunArgs),
    /// List and verify Signorini catalog elements.
    Signorini {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Homogeneity, e.g. `7/2`.
        #[arg(long)]
        lambda: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Run the configured monotone family.
    Heleshaw(RunArgs),
    /// Run every enabled module and write a manifest.
    Run(RunArgs),
    /// Summarize a run from its manifest.
    Report { manifest: PathBuf },
}

#[derive(clap::Args)]
struct RunArgs {
    config: PathBuf,
    /// Output directory; overrides the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn config_err(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::ConfigInvalid {
        field: field.into(),
        message: e.to_string(),
    }
}

fn ansatz_cmd(
    dim: usize,
    order: u32,
    nu: &str,
    p_file: Option<&Path>,
    rhs_file: Option<&Path>,
    out: Option<&Path>,
) -> Result<bool, CliError> {
    let nu = if nu == "last" {
        Axis::last(dim)
    } else {
        nu.parse().map_err(|e| config_err("nu", e))?
    };
    let mut p = Vec::new();
    if let Some(f) = p_file {
        let text = read(f)?;
        for (i, chunk) in text.split("\n---").enumerate() {
            let deg = i as u32 + 3;
            let q: Poly<Rational> =
                from_text(&format!("# dim {dim}\n{chunk}")).map_err(|e| config_err("p-file", e))?;
            if q.is_zero() {
                p.push(HomoPoly::zero(dim, deg));
            } else if q.degree() == Some(deg) && q.min_degree() == Some(deg) {
                p.push(q.part(deg));
            } else {
                return Err(config_err(
                    "p-file",
                    format!("entry {} is not homogeneous of degree {deg}", i + 1),
                ));
            }
        }
    }
    let rhs = match rhs_file {
        Some(f) => Rhs::Taylor(from_text(&read(f)?).map_err(|e| config_err("rhs-file", e))?),
        None => Rhs::Unit,
    };
    let input = AnsatzInput::new(dim, order, nu, p, rhs).map_err(|e| config_err("ansatz", e))?;
    let fam = AnsatzFamily::build(input).map_err(|e| config_err("ansatz", e))?;
    let js = fam.to_json() + "\n";
    match out {
        Some(o) => {
            std::fs::write(o, &js).map_err(|e| CliError::Io(format!("{}: {e}", o.display())))?
        }
        None => print!("{js}"),
    }
    let ok = fam.exactness_residual().is_zero();
    eprintln!(
        "exactness residual: {}",
        if ok { "0 [exact]" } else { "nonzero" }
    );
    Ok(ok)
}

fn signorini_cmd(dim: usize, lambda: &str, tol: f64) -> Result<bool, CliError> {
    let l = parse_lambda(lambda).map_err(|e| config_err("lambda", e))?;
    let cands = catalog(dim, &l).map_err(|e| CliError::Module {
        module: "signorini",
        message: e.to_string(),
    })?;
    if cands.is_empty() {
        println!("lambda {lambda}: empty catalog");
    }
    let mut ok = true;
    for q in &cands {
        let r = verify_signorini(q, tol);
        ok &= r.passes();
        println!(
            "lambda {lambda}: {} {} (harmonic residual {:.3e} [measured], min on L {:.3e} [measured])",
            q.label(),
            if r.passes() { "PASS" } else { "FAIL" },
            r.harmonic_residual,
            r.min_on_l
        );
    }
    Ok(ok)
}

fn campaign(args: &RunArgs, only: Option<ModuleKind>) -> Result<bool, CliError> {
    let (cfg, base) = CampaignConfig::load(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| default_out(&cfg));
    let outcome: RunOutcome = match only {
        Some(m) => run_module(&cfg, &base, &out, m)?,
        None => run(&cfg, &base, &out)?,
    };
    if let Some(rep) = &outcome.report {
        print!("{}", report::summarize(rep));
    } else {
        println!("no runs");
    }
    println!(
        "manifest: {}",
        outcome
            .dir
            .join(obstacle_lab_cli::run::MANIFEST_FILE)
            .display()
    );
    Ok(outcome.all_pass())
}

fn dispatch(cmd: &Command) -> Result<bool, CliError> {
    match cmd {
        Command::Ansatz {
            dim,
            order,
            nu,
            p_file,
            rhs_file,
            out,
        } => ansatz_cmd(
            *dim,
            *order,
            nu,
            p_file.as_deref(),
            rhs_file.as_deref(),
            out.as_deref(),
        ),
        Command::Solve(a) => campaign(a, Some(ModuleKind::Solve)),
        Command::Freq(a) => campaign(a, Some(ModuleKind::Freq)),
        Command::Blowup(a) => campaign(a, Some(ModuleKind::Blowup)),
        Command::Signorini { dim, lambda, tol } => signorini_cmd(*dim, lambda, *tol),
        Command::Heleshaw(a) => campaign(a, Some(ModuleKind::HeleShaw)),
        Command::Run(a) => campaign(a, None),
        Command::Report { manifest } => {
            let text = report::report(manifest)?;
            print!("{text}");
            Ok(!text.lines().any(|l| l.trim_start().starts_with("FAIL")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("LAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match dispatch(&cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
