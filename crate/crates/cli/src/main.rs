use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use toricspec_core::curvature::{ricci_lower_bound_scan, CurvatureError, ModelSpec, ScanRegion, ScanTarget};
use toricspec_core::harness::{emit_reports, run_sweep_with_workers, ConvergenceReport, HarnessError, SweepConfig};
use toricspec_core::limit::{predicted_limit, LimitError};
use toricspec_core::operator::{dbar_spectrum, solver_mesh, EigenError, OperatorError};
use toricspec_core::polytope::DelzantPolytope;
use toricspec_core::potential::PotentialSpec;

#[derive(Parser)]
#[command(name = "toricspec", version, about = "Spectra of ∂̄-Laplacians on toric manifolds in the large complex structure limit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a polytope (and optionally a potential) and print its canonical form.
    Check {
        #[command(flatten)]
        input: SpecArgs,
    },
    /// List the Bohr–Sommerfeld points of level k.
    Bs {
        #[arg(long)]
        polytope: PathBuf,
        #[arg(long)]
        k: i64,
    },
    /// Infimum of the Ricci lower-bound ratio over a region, per s.
    RicciScan(RicciArgs),
    /// ∂̄-eigenvalues of one Fourier mode.
    Spectrum {
        #[command(flatten)]
        input: SpecArgs,
        #[arg(long)]
        s: f64,
        #[arg(long)]
        k: i64,
        /// Comma separated integers.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mode: Vec<i64>,
        #[arg(long)]
        h: f64,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Predicted limit spectra at every b ∈ B_k.
    Limit {
        #[command(flatten)]
        input: SpecArgs,
        #[arg(long)]
        k: i64,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Sweep s and write the convergence report.
    Sweep(SweepArgs),
    /// Summarize an existing report directory and regenerate its files.
    Report {
        #[arg(long)]
        dir: PathBuf,
        /// Write the regenerated files here instead of `dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long)]
    polytope: PathBuf,
    /// ψ = ½‖x‖² and φ = 0 when absent.
    #[arg(long)]
    potential: Option<PathBuf>,
}

#[derive(Args)]
struct RicciArgs {
    #[arg(long, conflicts_with = "model_a")]
    polytope: Option<PathBuf>,
    #[arg(long, requires = "polytope")]
    potential: Option<PathBuf>,
    /// Row-major entries of A for the model potential.
    #[arg(long, value_delimiter = ',')]
    model_a: Option<Vec<f64>>,
    #[arg(long, default_value_t = 2)]
    model_n: usize,
    #[arg(long, default_value_t = 2)]
    model_m: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,0.1,0.01")]
    s_list: Vec<f64>,
    /// Grid points per axis.
    #[arg(long, default_value_t = 24)]
    resolution: usize,
    #[arg(long, default_value_t = 1e-2)]
    z_min: f64,
    #[arg(long, default_value_t = 5.0)]
    z_max: f64,
    #[arg(long, default_value_t = 1e6)]
    cap: f64,
    #[arg(long)]
    codim_two: bool,
    #[arg(long, default_value_t = 0.05)]
    exclusion: f64,
    #[arg(long, default_value_t = 1e-3)]
    margin: f64,
    /// Per-point CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config; its entries override the flags below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long)]
    polytope: Option<PathBuf>,
    #[arg(long)]
    potential: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    k_list: Option<Vec<i64>>,
    #[arg(long, value_delimiter = ',')]
    s_list: Option<Vec<f64>>,
    /// Fixed mesh size; h = √s/40 with the default floor otherwise.
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    eigencount: Option<usize>,
    #[arg(long)]
    mode_margin: Option<i64>,
}

/// Error kinds mapped onto exit codes.
enum Failure {
    Verdict,
    Input(anyhow::Error),
    Solver(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        if is_solver_error(&e) {
            Failure::Solver(e)
        } else {
            Failure::Input(e)
        }
    }
}

fn is_solver_error(e: &anyhow::Error) -> bool {
    let op = |o: &OperatorError| {
        matches!(
            o,
            OperatorError::Eigen(_)
                | OperatorError::NegativeEigenvalue(_)
                | OperatorError::NotPositiveDefiniteMass
                | OperatorError::CoefficientOverflow { .. }
        )
    };
    let lim = |l: &LimitError| matches!(l, LimitError::Eigen(_) | LimitError::TruncationTooSmall(_));
    e.chain().any(|c| {
        c.downcast_ref::<EigenError>().is_some()
            || c.downcast_ref::<OperatorError>().is_some_and(op)
            || c.downcast_ref::<LimitError>().is_some_and(lim)
            || c.downcast_ref::<HarnessError>().is_some_and(|h| match h {
                HarnessError::Operator(o) => op(o),
                HarnessError::Limit(l) => lim(l),
                _ => false,
            })
            || matches!(c.downcast_ref::<CurvatureError>(), Some(CurvatureError::SingularG))
    })
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_polytope(path: &Path) -> Result<DelzantPolytope> {
    Ok(DelzantPolytope::from_json(&read(path)?).with_context(|| format!("polytope {}", path.display()))?)
}

fn load_spec(a: &SpecArgs) -> Result<PotentialSpec> {
    let p = load_polytope(&a.polytope)?;
    Ok(match &a.potential {
        Some(f) => PotentialSpec::from_json(p, &read(f)?).with_context(|| format!("potential {}", f.display()))?,
        None => PotentialSpec::standard(p),
    })
}

fn print_json(v: &impl serde::Serialize) {
    use std::io::Write;
    // a closed pipe (e.g. `| head`) is not an error
    let _ = writeln!(std::io::stdout().lock(), "{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn check(input: &SpecArgs) -> Result<(), Failure> {
    let spec = load_spec(input)?;
    if input.potential.is_some() {
        spec.check_admissible().context("potential is not admissible")?;
    }
    let p = &spec.polytope;
    let canonical: Value = serde_json::from_str(&p.to_canonical_json()).map_err(anyhow::Error::from)?;
    print_json(&json!({
        "polytope": canonical,
        "vertices": p.vertices().iter().map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        "admissible": true,
    }));
    Ok(())
}

fn ricci_scan(a: &RicciArgs) -> Result<(), Failure> {
    let report = match (&a.model_a, &a.polytope) {
        (Some(entries), None) => {
            let n = a.model_n;
            if entries.len() != n * n {
                return Err(anyhow!("--model-a needs {} entries", n * n).into());
            }
            let model = ModelSpec::new(n, a.model_m, nalgebra::DMatrix::from_row_slice(n, n, entries)).map_err(anyhow::Error::from)?;
            let region = ScanRegion::ModelBox {
                z_ranges: vec![(a.z_min, a.z_max); a.model_m],
                points_per_axis: a.resolution,
                cap: a.cap,
                allow_codim_two: a.codim_two,
            };
            ricci_lower_bound_scan(ScanTarget::Model(&model), &a.s_list, &region).map_err(anyhow::Error::from)?
        }
        (None, Some(polytope)) => {
            let spec = load_spec(&SpecArgs {
                polytope: polytope.clone(),
                potential: a.potential.clone(),
            })?;
            let region = ScanRegion::Polytope {
                resolution: a.resolution,
                exclusion: a.exclusion,
                margin: a.margin,
            };
            ricci_lower_bound_scan(ScanTarget::Spec(&spec), &a.s_list, &region).map_err(anyhow::Error::from)?
        }
        _ => return Err(anyhow!("give either --polytope or --model-a").into()),
    };
    if let Some(out) = &a.out {
        std::fs::write(out, report.to_csv()).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{}", report.summary_json());
    Ok(())
}

/// Flags as a JSON object, overlaid by the config file when one is given.
fn sweep_config(a: &SweepArgs) -> Result<SweepConfig> {
    let mut obj = Map::new();
    let mut put = |key: &str, v: Value| {
        obj.insert(key.to_string(), v);
    };
    if let Some(p) = &a.polytope {
        put("polytope", json!(p));
    }
    if let Some(p) = &a.potential {
        put("potential", json!(p));
    }
    if let Some(k) = &a.k_list {
        put("k_list", json!(k));
    }
    if let Some(s) = &a.s_list {
        put("s_list", json!(s));
    }
    if let Some(h) = a.h {
        put("mesh", json!({"kind": "fixed", "h": h}));
    }
    if let Some(c) = a.eigencount {
        put("eigencount", json!(c));
    }
    if let Some(m) = a.mode_margin {
        put("mode_margin", json!(m));
    }
    if let Some(o) = &a.out {
        put("output", json!(o));
    }
    if let Some(path) = &a.config {
        let file: Value = serde_json::from_str(&read(path)?).with_context(|| format!("config {}", path.display()))?;
        let Value::Object(file) = file else {
            bail!("config {} is not a JSON object", path.display());
        };
        let base = path.parent().unwrap_or(Path::new("."));
        for (key, mut v) in file {
            if matches!(key.as_str(), "polytope" | "potential" | "output") {
                if let Some(p) = v.as_str().map(PathBuf::from).filter(|p| p.is_relative()) {
                    v = json!(base.join(p));
                }
            }
            obj.insert(key, v);
        }
    }
    let cfg: SweepConfig = serde_json::from_value(Value::Object(obj)).context("sweep configuration")?;
    cfg.validate()?;
    Ok(cfg)
}

fn summarize(report: &ConvergenceReport) {
    for p in &report.points {
        if let Some(last) = p.rows.last() {
            let gaps: Vec<String> = last.relative_gaps.iter().map(|g| format!("{:.2}%", 100.0 * g)).collect();
            println!(
                "k={} b=({}) s={} gaps [{}] nonincreasing={} limit_match={}",
                p.k,
                p.b.join(", "),
                last.s,
                gaps.join(", "),
                p.gaps_nonincreasing,
                p.limit_match
            );
        }
    }
    for r in &report.kernel {
        println!("k={} s={} zero modes {} lattice points {}", r.k, r.s, r.zero_modes, r.lattice_points);
    }
    for f in &report.failures {
        println!("failed: k={} s={} m={:?}: {}", f.k, f.s, f.mode, f.error);
    }
    let v = &report.verdicts;
    println!(
        "verdicts: kernel={} zero_persistence={} gaps={} limit={} localization={} complete={} pass={}",
        v.kernel_counts, v.bs_zero_persistence, v.gaps_nonincreasing, v.limit_match, v.localization_bounded, v.complete, v.pass
    );
}

fn verdict(report: &ConvergenceReport) -> Result<(), Failure> {
    if !report.failures.is_empty() {
        Err(Failure::Solver(anyhow!("{} solves failed", report.failures.len())))
    } else if report.verdicts.pass {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let cfg = sweep_config(a)?;
    let report = run_sweep_with_workers(&cfg, a.workers).map_err(anyhow::Error::from)?;
    let out = cfg.output.clone().unwrap_or_else(|| PathBuf::from("results"));
    emit_reports(&report, &out).map_err(anyhow::Error::from)?;
    summarize(&report);
    verdict(&report)
}

fn report(dir: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let path = dir.join("report.json");
    let report: ConvergenceReport = serde_json::from_str(&read(&path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    if let Some(out) = out {
        emit_reports(&report, out).map_err(anyhow::Error::from)?;
    }
    summarize(&report);
    verdict(&report)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Check { input } => check(&input),
        Command::Bs { polytope, k } => {
            let p = load_polytope(&polytope)?;
            let pts = p.bs_points(k).map_err(anyhow::Error::from)?;
            let rows: Vec<Value> = pts
                .iter()
                .map(|b| {
                    json!({
                        "point": b.point.iter().map(|x| x.to_string()).collect::<Vec<_>>(),
                        "mode": b.mode(),
                        "level": b.level,
                        "strict_level": b.strict_level,
                        "face_codim": b.face_codim,
                    })
                })
                .collect();
            print_json(&rows);
            Ok(())
        }
        Command::RicciScan(a) => ricci_scan(&a),
        Command::Spectrum {
            input,
            s,
            k,
            mode,
            h,
            count,
        } => {
            let spec = load_spec(&input)?;
            let mesh = solver_mesh(&spec.polytope, h).map_err(anyhow::Error::from)?;
            let d = dbar_spectrum(&spec, s, k, &mode, &mesh, count).map_err(anyhow::Error::from)?;
            println!("{}", d.to_json());
            Ok(())
        }
        Command::Limit { input, k, count } => {
            let spec = load_spec(&input)?;
            print_json(&predicted_limit(&spec, k, count).map_err(anyhow::Error::from)?);
            Ok(())
        }
        Command::Sweep(a) => sweep(&a),
        Command::Report { dir, out } => report(&dir, out.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verdict) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(e)) => {
            eprintln!("solver failure: {e:#}");
            ExitCode::from(3)
        }
    }
}
