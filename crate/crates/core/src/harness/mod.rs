//! s-sweeps of the reduced operators, comparison with the cone limits,
//! localization and fiber checks, report files.

mod checks;
mod emit;

pub use checks::{fiber_diameter_check, localization_check, richardson, FiberRow, FiberTable, LocalizationSummary};
pub use emit::{emit_reports, svg_plot};

use crate::limit::{predicted_limit, LimitError};
use crate::operator::{mode_set, solve_eigs, solver_mesh, to_dbar, DbarSpectrum, Mesh, OperatorContext, OperatorError};
use crate::polytope::{BsPoint, DelzantPolytope, PolytopeError};
use crate::potential::{PotentialError, PotentialSpec};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Lowest ∂̄-eigenvalue below which a mode counts as a zero mode.
pub const KERNEL_TOL: f64 = 1e-3;
/// BS modes must keep their lowest ∂̄-eigenvalue below this at every s.
pub const ZERO_PERSISTENCE_TOL: f64 = 5e-4;
/// Relative slack allowed when gaps should not grow as s decreases.
pub const GAP_NOISE: f64 = 0.10;
/// Gaps below this are treated as converged when comparing successive s.
pub const GAP_FLOOR: f64 = 1e-4;
/// Relative tolerance of the limit match at the smallest s.
pub const LIMIT_MATCH_TOL: f64 = 0.05;
/// Number of levels used in the limit match.
pub const LIMIT_MATCH_LEVELS: usize = 3;
/// Relative slack for the minimal localization radius.
pub const LOCALIZATION_NOISE: f64 = 0.20;
/// Mass fraction defining the localization radius.
pub const LOCALIZATION_MASS: f64 = 0.99;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("i/o failure")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
}

/// Mesh size for each s.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshTargets {
    Fixed { h: f64 },
    /// One h per entry of the s-list.
    PerS { h: Vec<f64> },
    /// h = max(factor·√s, floor); the floor defaults to 1/800 for n = 1 and 1/80 for n = 2.
    SqrtS {
        factor: f64,
        #[serde(default)]
        floor: Option<f64>,
    },
}

impl Default for MeshTargets {
    fn default() -> Self {
        MeshTargets::SqrtS {
            factor: 1.0 / 40.0,
            floor: None,
        }
    }
}

fn default_eigencount() -> usize {
    3
}

fn default_margin() -> i64 {
    1
}

fn default_c_grid() -> Vec<f64> {
    (1..=40).map(|i| 0.25 * i as f64).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub polytope: PathBuf,
    /// Potential file; ψ = ½‖x‖², φ = 0 when absent.
    #[serde(default)]
    pub potential: Option<PathBuf>,
    pub k_list: Vec<i64>,
    /// Strictly descending.
    pub s_list: Vec<f64>,
    #[serde(default)]
    pub mesh: MeshTargets,
    #[serde(default = "default_eigencount")]
    pub eigencount: usize,
    #[serde(default = "default_margin")]
    pub mode_margin: i64,
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Radii c (in units of √s) at which localization fractions are reported.
    #[serde(default = "default_c_grid")]
    pub c_grid: Vec<f64>,
}

impl SweepConfig {
    pub fn new(polytope: impl Into<PathBuf>, k_list: Vec<i64>, s_list: Vec<f64>) -> Self {
        SweepConfig {
            polytope: polytope.into(),
            potential: None,
            k_list,
            s_list,
            mesh: MeshTargets::default(),
            eigencount: default_eigencount(),
            mode_margin: default_margin(),
            output: None,
            c_grid: default_c_grid(),
        }
    }

    /// Reads a JSON config; relative paths are taken from the config's directory.
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let mut cfg: SweepConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &PathBuf| if p.is_relative() { base.join(p) } else { p.clone() };
        cfg.polytope = fix(&cfg.polytope);
        cfg.potential = cfg.potential.as_ref().map(fix);
        cfg.output = cfg.output.as_ref().map(fix);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.into()));
        if self.s_list.is_empty() || self.s_list.iter().any(|&s| !(s > 0.0)) {
            return bad("s-list must be nonempty and positive");
        }
        if self.s_list.windows(2).any(|w| w[1] >= w[0]) {
            return bad("s-list must be strictly descending");
        }
        if self.k_list.is_empty() || self.k_list.iter().any(|&k| k < 1) {
            return bad("k-list must be nonempty with k ≥ 1");
        }
        if self.eigencount == 0 {
            return bad("eigencount must be at least 1");
        }
        if self.mode_margin < 0 {
            return bad("mode margin must be nonnegative");
        }
        match &self.mesh {
            MeshTargets::Fixed { h } if !(*h > 0.0) => return bad("h must be positive"),
            MeshTargets::PerS { h } if h.len() != self.s_list.len() || h.iter().any(|&x| !(x > 0.0)) => {
                return bad("per-s mesh sizes must be positive, one per s")
            }
            MeshTargets::SqrtS { factor, floor } if !(*factor > 0.0) || floor.is_some_and(|f| !(f > 0.0)) => {
                return bad("√s mesh factor and floor must be positive")
            }
            _ => {}
        }
        Ok(())
    }

    pub fn h_list(&self, dim: usize) -> Vec<f64> {
        match &self.mesh {
            MeshTargets::Fixed { h } => vec![*h; self.s_list.len()],
            MeshTargets::PerS { h } => h.clone(),
            MeshTargets::SqrtS { factor, floor } => {
                let fl = floor.unwrap_or(if dim == 1 { 1.0 / 800.0 } else { 1.0 / 80.0 });
                self.s_list.iter().map(|s| (factor * s.sqrt()).max(fl)).collect()
            }
        }
    }

    pub fn load_spec(&self) -> Result<PotentialSpec, HarnessError> {
        let read = |f: &Path| std::fs::read_to_string(f).map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", f.display())));
        let p = DelzantPolytope::from_json(&read(&self.polytope)?)?;
        Ok(match &self.potential {
            Some(f) => PotentialSpec::from_json(p, &read(f)?)?,
            None => PotentialSpec::standard(p),
        })
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ReportHeader {
    pub dim: usize,
    pub k_list: Vec<i64>,
    pub s_list: Vec<f64>,
    pub h_list: Vec<f64>,
    pub eigencount: usize,
    pub mode_margin: i64,
    pub thresholds: Thresholds,
}

/// Verdict thresholds; engineering choices recorded with every report.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Thresholds {
    pub kernel: f64,
    pub zero_persistence: f64,
    pub gap_noise: f64,
    pub gap_floor: f64,
    pub limit_match: f64,
    pub limit_match_levels: usize,
    pub localization_noise: f64,
    pub localization_mass: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            kernel: KERNEL_TOL,
            zero_persistence: ZERO_PERSISTENCE_TOL,
            gap_noise: GAP_NOISE,
            gap_floor: GAP_FLOOR,
            limit_match: LIMIT_MATCH_TOL,
            limit_match_levels: LIMIT_MATCH_LEVELS,
            localization_noise: LOCALIZATION_NOISE,
            localization_mass: LOCALIZATION_MASS,
        }
    }
}

/// Spectrum of one mode at one s.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ModeSpectrum {
    pub s: f64,
    pub k: i64,
    pub mode: Vec<i64>,
    pub bs: bool,
    pub dbar_eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub dofs: usize,
    pub h: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct GapRow {
    pub s: f64,
    pub computed: Vec<f64>,
    pub predicted: Vec<f64>,
    pub gaps: Vec<f64>,
    /// |λ − μ|/μ, or |λ| where μ = 0.
    pub relative_gaps: Vec<f64>,
}

/// Convergence table of the mode m = k·b.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PointTable {
    pub k: i64,
    pub b: Vec<String>,
    pub mode: Vec<i64>,
    pub face_codim: usize,
    pub exact_limit: bool,
    pub predicted: Vec<f64>,
    pub rows: Vec<GapRow>,
    /// Discretization error estimate per level at the smallest s, from a
    /// solve on the mesh of size 2h.
    pub discretization_error: Vec<f64>,
    /// Richardson limits in s from the last three rows.
    pub extrapolated: Option<Vec<f64>>,
    /// Gaps at the last two s within GAP_NOISE of nonincreasing.
    pub gaps_nonincreasing: bool,
    /// The same over every consecutive pair of the s-list.
    pub gaps_monotone_all: bool,
    pub limit_match: bool,
}

/// Localization of one eigenfunction of a BS mode.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct LocalizationRow {
    pub s: f64,
    pub k: i64,
    pub mode: Vec<i64>,
    pub level: usize,
    /// Smallest c with mass ≥ LOCALIZATION_MASS inside ∪_b B(b, c√s).
    pub c_min: f64,
    /// Mass fractions at the c-grid.
    pub fractions: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct KernelRow {
    pub k: i64,
    pub s: f64,
    pub zero_modes: usize,
    pub lattice_points: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SolveFailure {
    pub s: f64,
    pub k: i64,
    pub mode: Vec<i64>,
    pub error: String,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct Verdicts {
    pub kernel_counts: bool,
    pub bs_zero_persistence: bool,
    pub gaps_nonincreasing: bool,
    pub limit_match: bool,
    pub localization_bounded: bool,
    pub complete: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
pub struct ConvergenceReport {
    pub header: ReportHeader,
    pub points: Vec<PointTable>,
    pub spectra: Vec<ModeSpectrum>,
    pub localization: Vec<LocalizationRow>,
    pub localization_summary: Vec<LocalizationSummary>,
    pub c_grid: Vec<f64>,
    pub kernel: Vec<KernelRow>,
    /// Non-BS modes (k, m) whose lowest eigenvalue does not grow as s decreases.
    pub non_bs_flags: Vec<(i64, Vec<i64>)>,
    pub failures: Vec<SolveFailure>,
    pub verdicts: Verdicts,
}

impl ConvergenceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }

    pub fn spectrum(&self, s: f64, k: i64, mode: &[i64]) -> Option<&ModeSpectrum> {
        self.spectra.iter().find(|r| r.s == s && r.k == k && r.mode == mode)
    }
}

/// Loads the polytope and potential named by the config and runs the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<ConvergenceReport, HarnessError> {
    cfg.validate()?;
    let spec = cfg.load_spec()?;
    run_sweep_spec(&spec, cfg)
}

/// [`run_sweep`] on a pool of `workers` threads.
pub fn run_sweep_with_workers(cfg: &SweepConfig, workers: usize) -> Result<ConvergenceReport, HarnessError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(e.to_string()))?;
    pool.install(|| run_sweep(cfg))
}

struct Job {
    si: usize,
    k: i64,
    mode: Vec<i64>,
    bs: bool,
}

struct JobResult {
    spectrum: Result<ModeSpectrum, String>,
    localization: Vec<LocalizationRow>,
}

fn solve_job(
    ctx: &OperatorContext,
    job: &Job,
    count: usize,
    centers: &[Vec<f64>],
    c_grid: &[f64],
) -> Result<(DbarSpectrum, Vec<LocalizationRow>), OperatorError> {
    let op = ctx.assemble(job.k, &job.mode)?;
    let count = count.min(op.dofs());
    let d = to_dbar(&op, solve_eigs(&op, count)?)?;
    let mut loc = Vec::new();
    if job.bs {
        let rs = ctx.s.sqrt();
        for (j, v) in d.vectors.iter().enumerate() {
            let prof = checks::radial_profile(ctx, v, centers);
            loc.push(LocalizationRow {
                s: ctx.s,
                k: job.k,
                mode: job.mode.clone(),
                level: j,
                c_min: checks::radius_for_mass(&prof, LOCALIZATION_MASS) / rs,
                fractions: c_grid.iter().map(|c| checks::mass_within(&prof, c * rs)).collect(),
            });
        }
    }
    Ok((d, loc))
}

/// Solves every mode of `mode_set(P, k, margin)` at every s and compares the
/// BS modes with the predicted cone spectra.
pub fn run_sweep_spec(spec: &PotentialSpec, cfg: &SweepConfig) -> Result<ConvergenceReport, HarnessError> {
    cfg.validate()?;
    let dim = spec.dim();
    let h_list = cfg.h_list(dim);
    let meshes: Vec<Mesh> = h_list.iter().map(|&h| solver_mesh(&spec.polytope, h)).collect::<Result<_, _>>()?;
    let contexts: Vec<OperatorContext> = meshes
        .par_iter()
        .zip(cfg.s_list.par_iter())
        .map(|(m, &s)| OperatorContext::new(spec, s, m))
        .collect::<Result<_, _>>()?;

    let mut bs_by_k: Vec<(i64, Vec<BsPoint>)> = Vec::new();
    let mut jobs = Vec::new();
    for &k in &cfg.k_list {
        let bs = spec.polytope.bs_points(k)?;
        let bs_modes: Vec<Vec<i64>> = bs.iter().map(|b| b.mode()).collect();
        for m in mode_set(&spec.polytope, k, cfg.mode_margin) {
            let is_bs = bs_modes.contains(&m);
            for si in 0..cfg.s_list.len() {
                jobs.push(Job {
                    si,
                    k,
                    mode: m.clone(),
                    bs: is_bs,
                });
            }
        }
        bs_by_k.push((k, bs));
    }
    let centers_by_k: Vec<(i64, Vec<Vec<f64>>)> =
        bs_by_k.iter().map(|(k, bs)| (*k, bs.iter().map(|b| b.point_f64()).collect())).collect();
    let centers_of = |k: i64| &centers_by_k.iter().find(|(kk, _)| *kk == k).expect("k present").1;

    let results: Vec<JobResult> = jobs
        .par_iter()
        .map(|job| {
            let ctx = &contexts[job.si];
            match solve_job(ctx, job, cfg.eigencount, centers_of(job.k), &cfg.c_grid) {
                Ok((d, localization)) => JobResult {
                    spectrum: Ok(ModeSpectrum {
                        s: d.s,
                        k: d.k,
                        mode: d.mode,
                        bs: job.bs,
                        dbar_eigenvalues: d.dbar_eigenvalues,
                        residuals: d.residuals,
                        dofs: d.dofs,
                        h: d.h,
                    }),
                    localization,
                },
                Err(e) => JobResult {
                    spectrum: Err(e.to_string()),
                    localization: Vec::new(),
                },
            }
        })
        .collect();

    let mut report = ConvergenceReport {
        header: ReportHeader {
            dim,
            k_list: cfg.k_list.clone(),
            s_list: cfg.s_list.clone(),
            h_list: h_list.clone(),
            eigencount: cfg.eigencount,
            mode_margin: cfg.mode_margin,
            thresholds: Thresholds::default(),
        },
        c_grid: cfg.c_grid.clone(),
        ..Default::default()
    };
    for (job, r) in jobs.iter().zip(results) {
        match r.spectrum {
            Ok(sp) => report.spectra.push(sp),
            Err(error) => report.failures.push(SolveFailure {
                s: cfg.s_list[job.si],
                k: job.k,
                mode: job.mode.clone(),
                error,
            }),
        }
        report.localization.extend(r.localization);
    }

    // kernel counts
    for (k, _) in &bs_by_k {
        for &s in &cfg.s_list {
            let zero_modes = report
                .spectra
                .iter()
                .filter(|r| r.k == *k && r.s == s && r.dbar_eigenvalues.first().is_some_and(|&l| l < KERNEL_TOL))
                .count();
            report.kernel.push(KernelRow {
                k: *k,
                s,
                zero_modes,
                lattice_points: spec.polytope.lattice_count(*k),
            });
        }
    }

    // divergence of the non-BS modes
    for &k in &cfg.k_list {
        for m in mode_set(&spec.polytope, k, cfg.mode_margin) {
            let lows: Vec<f64> = cfg
                .s_list
                .iter()
                .filter_map(|&s| report.spectrum(s, k, &m).filter(|r| !r.bs).and_then(|r| r.dbar_eigenvalues.first().copied()))
                .collect();
            if lows.len() == cfg.s_list.len() && lows.len() > 1 && lows.windows(2).any(|w| w[1] <= w[0]) {
                report.non_bs_flags.push((k, m));
            }
        }
    }

    // per-point convergence tables
    let smallest = cfg.s_list.len() - 1;
    for (k, bs) in &bs_by_k {
        let predictions = predicted_limit(spec, *k, cfg.eigencount)?;
        // coarse solves at the smallest s for the discretization estimate
        let coarse_mesh = solver_mesh(&spec.polytope, 2.0 * h_list[smallest])?;
        let coarse = OperatorContext::new(spec, cfg.s_list[smallest], &coarse_mesh)?;
        for (b, pred) in bs.iter().zip(&predictions) {
            let mode = b.mode();
            let predicted: Vec<f64> = pred.spectrum.expanded().into_iter().take(cfg.eigencount).collect();
            let rows: Vec<GapRow> = cfg
                .s_list
                .iter()
                .filter_map(|&s| report.spectrum(s, *k, &mode))
                .map(|r| gap_row(r.s, &r.dbar_eigenvalues, &predicted))
                .collect();
            let fine = report.spectrum(cfg.s_list[smallest], *k, &mode).map(|r| r.dbar_eigenvalues.clone());
            let discretization_error = match (fine, coarse.assemble(*k, &mode)) {
                (Some(f), Ok(op)) => match solve_eigs(&op, f.len().min(op.dofs())).and_then(|sp| to_dbar(&op, sp)) {
                    Ok(c) => f.iter().zip(&c.dbar_eigenvalues).map(|(a, b)| (a - b).abs() / 3.0).collect(),
                    Err(_) => Vec::new(),
                },
                _ => Vec::new(),
            };
            let extrapolated = if rows.len() >= 3 {
                let t = &rows[rows.len() - 3..];
                let levels = t.iter().map(|r| r.computed.len()).min().unwrap_or(0);
                (0..levels)
                    .map(|j| richardson([t[0].s, t[1].s, t[2].s], [t[0].computed[j], t[1].computed[j], t[2].computed[j]]))
                    .collect::<Option<Vec<f64>>>()
            } else {
                None
            };
            let gaps_nonincreasing = gaps_nonincreasing(&rows[rows.len().saturating_sub(2)..]);
            let gaps_monotone_all = self::gaps_nonincreasing(&rows);
            let limit_match = rows.len() == cfg.s_list.len()
                && limit_match(rows.last().expect("nonempty"), &discretization_error);
            report.points.push(PointTable {
                k: *k,
                b: b.point.iter().map(|x| x.to_string()).collect(),
                mode,
                face_codim: b.face_codim,
                exact_limit: pred.spectrum.exact,
                predicted,
                rows,
                discretization_error,
                extrapolated,
                gaps_nonincreasing,
                gaps_monotone_all,
                limit_match,
            });
        }
    }

    report.localization_summary = localization_check(&report.localization, &cfg.c_grid);
    let bs_zero = report
        .spectra
        .iter()
        .filter(|r| r.bs)
        .all(|r| r.dbar_eigenvalues.first().is_some_and(|&l| l < ZERO_PERSISTENCE_TOL));
    let v = &mut report.verdicts;
    v.kernel_counts = report.kernel.iter().all(|r| r.zero_modes == r.lattice_points);
    v.bs_zero_persistence = bs_zero;
    v.gaps_nonincreasing = report.points.iter().all(|p| p.gaps_nonincreasing);
    v.limit_match = report.points.iter().all(|p| p.limit_match);
    v.localization_bounded = checks::localization_bounded(&report.localization_summary);
    v.complete = report.failures.is_empty();
    v.pass = v.kernel_counts && v.bs_zero_persistence && v.gaps_nonincreasing && v.limit_match && v.localization_bounded && v.complete;
    Ok(report)
}

fn gap_row(s: f64, computed: &[f64], predicted: &[f64]) -> GapRow {
    let n = computed.len().min(predicted.len());
    let gaps: Vec<f64> = (0..n).map(|j| (computed[j] - predicted[j]).abs()).collect();
    let relative_gaps = (0..n)
        .map(|j| if predicted[j] > 0.0 { gaps[j] / predicted[j] } else { gaps[j] })
        .collect();
    GapRow {
        s,
        computed: computed.to_vec(),
        predicted: predicted[..n].to_vec(),
        gaps,
        relative_gaps,
    }
}

/// Each relative gap may exceed its value at the previous (larger) s by at
/// most GAP_NOISE, unless both sit below GAP_FLOOR.
pub fn gaps_nonincreasing(rows: &[GapRow]) -> bool {
    rows.windows(2).all(|w| {
        w[0].relative_gaps
            .iter()
            .zip(&w[1].relative_gaps)
            .all(|(&a, &b)| b <= (1.0 + GAP_NOISE) * a || b.max(a) < GAP_FLOOR)
    })
}

/// Levels j < LIMIT_MATCH_LEVELS within max(5%·μ_j, 2·error_j), zero levels
/// within ZERO_PERSISTENCE_TOL.
pub fn limit_match(row: &GapRow, disc_error: &[f64]) -> bool {
    let n = row.gaps.len().min(LIMIT_MATCH_LEVELS);
    n > 0
        && (0..n).all(|j| {
            let mu = row.predicted[j];
            let err = disc_error.get(j).copied().unwrap_or(0.0);
            let tol = if mu > 0.0 { (LIMIT_MATCH_TOL * mu).max(2.0 * err) } else { ZERO_PERSISTENCE_TOL };
            row.gaps[j] <= tol
        })
}
