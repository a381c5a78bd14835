//! `solve`, `oracle` and `compare`.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use eigenacs_core::oracles::{oracle_spectrum, OracleSpectrum};
use eigenacs_core::solver::{run_acs_reduced, ReducedSystem};
use eigenacs_core::{
    assemble, gd_baseline, run_population, sample_collocation, EigenpairEstimate, FeatureBasis, GdConfig,
    LossSystem, ProblemName, SpectrumReport, Status,
};
use serde::Serialize;

use crate::config::{RunConfig, RunMode};
use crate::report::{write_field, write_json, write_loss_history};

/// Nearest oracle value to a computed `μ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleMatch {
    pub mu: f64,
    pub oracle_mu: f64,
    pub oracle_label: String,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleDiagnostics {
    pub row_space_rank: usize,
    pub eigen_boundary_rows: usize,
    pub design_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleReport {
    pub kind: &'static str,
    pub problem: String,
    pub estimate: EigenpairEstimate,
    pub oracle: Option<OracleMatch>,
    pub diagnostics: SingleDiagnostics,
    pub provenance: RunConfig,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PopulationReport {
    pub kind: &'static str,
    pub problem: String,
    pub spectrum: SpectrumReport,
    pub oracle: Vec<OracleMatch>,
    pub provenance: RunConfig,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum SolveReport {
    Single(Box<SingleReport>),
    Population(Box<PopulationReport>),
}

fn nearest(oracle: &OracleSpectrum, mu: f64) -> Option<OracleMatch> {
    oracle
        .values
        .iter()
        .min_by(|a, b| (a.mu - mu).abs().total_cmp(&(b.mu - mu).abs()))
        .map(|v| OracleMatch {
            mu,
            oracle_mu: v.mu,
            oracle_label: v.label.clone(),
            relative_error: (mu - v.mu).abs() / v.mu.abs(),
        })
}

fn catalog_oracle(name: Option<ProblemName>, count: usize) -> Option<OracleSpectrum> {
    let spectrum = oracle_spectrum(name?, count, None);
    if let Err(e) = &spectrum {
        log::warn!("oracle unavailable: {e}");
    }
    spectrum.ok()
}

/// The single-strand loss system described by `cfg`.
pub fn build_system(cfg: &RunConfig) -> Result<(FeatureBasis, LossSystem)> {
    let spec = &cfg.problem;
    let basis = FeatureBasis::new(cfg.basis.width, spec.dim(), cfg.basis.bandwidth, cfg.basis.seed)?;
    let colloc = sample_collocation(
        spec,
        cfg.collocation.n_interior,
        &cfg.collocation.reference,
        cfg.collocation.u_ref,
        cfg.collocation.seed,
    )?;
    let sys = assemble(spec, &basis, &colloc, cfg.weights, &[])?;
    Ok((basis, sys))
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn solve(cfg: &RunConfig) -> Result<SolveReport> {
    let out = &cfg.output.dir;
    prepare_dir(out)?;
    let report = match cfg.mode {
        RunMode::Single => SolveReport::Single(Box::new(solve_single(cfg)?)),
        RunMode::Population => SolveReport::Population(Box::new(solve_population(cfg)?)),
    };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}

fn solve_single(cfg: &RunConfig) -> Result<SingleReport> {
    let start = Instant::now();
    let (basis, sys) = build_system(cfg)?;
    let reduced = ReducedSystem::new(&sys)?;
    let estimate = run_acs_reduced(&sys, &reduced, cfg.mu0, &cfg.acs)?;
    let out = &cfg.output.dir;
    write_loss_history(&out.join("loss_history.csv"), &estimate.loss_history)?;
    if cfg.output.emit_fields {
        write_field(&out.join("mode_1.csv"), &cfg.problem.domain, &basis, &estimate.weights, cfg.output.grid)?;
    }
    let oracle = catalog_oracle(cfg.problem_name(), 8).and_then(|o| nearest(&o, estimate.mu));
    Ok(SingleReport {
        kind: "single",
        problem: cfg.problem.name.clone(),
        oracle,
        diagnostics: SingleDiagnostics {
            row_space_rank: reduced.rank(),
            eigen_boundary_rows: sys.active_eigen_boundary_rows(),
            design_rows: sys.nrows(),
        },
        estimate,
        provenance: cfg.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

fn solve_population(cfg: &RunConfig) -> Result<PopulationReport> {
    let spectrum = run_population(
        &cfg.problem,
        &cfg.basis_config(),
        &cfg.collocation_config(),
        cfg.weights,
        &cfg.acs,
        &cfg.population,
    )?;
    let out = &cfg.output.dir;
    for (k, mode) in spectrum.modes.iter().enumerate() {
        write_loss_history(&out.join(format!("loss_history_{}.csv", k + 1)), &mode.estimate.loss_history)?;
        if cfg.output.emit_fields {
            write_field(
                &out.join(format!("mode_{}.csv", k + 1)),
                &cfg.problem.domain,
                &mode.basis,
                &mode.estimate.weights,
                cfg.output.grid,
            )?;
        }
    }
    let first = spectrum.modes.first().map(|m| m.estimate.loss_history.as_slice()).unwrap_or(&[]);
    write_loss_history(&out.join("loss_history.csv"), first)?;
    let oracle = catalog_oracle(cfg.problem_name(), cfg.population.target_modes + 4)
        .map(|o| spectrum.mus().into_iter().filter_map(|mu| nearest(&o, mu)).collect())
        .unwrap_or_default();
    Ok(PopulationReport {
        kind: "population",
        problem: cfg.problem.name.clone(),
        spectrum,
        oracle,
        provenance: cfg.clone(),
    })
}

/// Emits the reference spectrum of a catalog problem.
pub fn oracle(problem: &str, count: usize, grid_h: Option<f64>, out: Option<&Path>) -> Result<OracleSpectrum> {
    let name: ProblemName = problem.parse()?;
    let spectrum = oracle_spectrum(name, count, grid_h)?;
    if let Some(dir) = out {
        prepare_dir(dir)?;
        write_json(&dir.join("oracle.json"), &spectrum)?;
    }
    Ok(spectrum)
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodSummary {
    pub wall_time_s: f64,
    pub final_loss: f64,
    pub mu: f64,
    pub lambda_phys: Option<f64>,
    pub iterations: usize,
    pub status: Status,
    pub eigenvalue_relative_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub problem: String,
    pub acs: MethodSummary,
    pub gd: MethodSummary,
    /// Whether gradient descent reached the final ACS loss within its budget.
    pub gd_reached_acs_loss: bool,
    /// GD wall time (to the ACS loss, or the whole budget) over ACS wall time.
    /// Derived from wall times, so it varies between runs.
    pub speedup_ratio: f64,
    pub oracle_mu: Option<f64>,
    pub provenance: RunConfig,
}

fn summarize(est: &EigenpairEstimate, oracle_mu: Option<f64>, wall: f64) -> MethodSummary {
    MethodSummary {
        wall_time_s: wall,
        final_loss: est.final_loss(),
        mu: est.mu,
        lambda_phys: est.lambda_phys,
        iterations: est.iterations,
        status: est.status,
        eigenvalue_relative_error: oracle_mu.map(|o| (est.mu - o).abs() / o.abs()),
    }
}

/// Times ACS and the gradient-descent baseline on one loss system.
pub fn compare(cfg: &RunConfig) -> Result<CompareReport> {
    prepare_dir(&cfg.output.dir)?;
    let (_, sys) = build_system(cfg)?;

    let t = Instant::now();
    let reduced = ReducedSystem::new(&sys)?;
    let acs = run_acs_reduced(&sys, &reduced, cfg.mu0, &cfg.acs)?;
    let acs_time = t.elapsed().as_secs_f64();

    let gd_cfg = GdConfig {
        target_loss: Some(acs.final_loss()),
        ..cfg.gd
    };
    let t = Instant::now();
    let gd = gd_baseline(&sys, cfg.mu0, &vec![0.0; sys.ncols()], &gd_cfg)?;
    let gd_time = t.elapsed().as_secs_f64();

    let oracle_mu = catalog_oracle(cfg.problem_name(), 8)
        .and_then(|o| nearest(&o, acs.mu))
        .map(|m| m.oracle_mu);
    let report = CompareReport {
        problem: cfg.problem.name.clone(),
        acs: summarize(&acs, oracle_mu, acs_time),
        gd: summarize(&gd, oracle_mu, gd_time),
        gd_reached_acs_loss: gd.status == Status::Converged,
        speedup_ratio: gd_time / acs_time,
        oracle_mu,
        provenance: cfg.clone(),
    };
    write_json(&cfg.output.dir.join("compare.json"), &report)?;
    Ok(report)
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads.or_else(threads_from_env) {
        builder = builder.num_threads(n);
    }
    Ok(builder.build().context("building worker pool")?.install(f))
}

fn threads_from_env() -> Option<usize> {
    std::env::var("EIGENACS_THREADS").ok()?.parse().ok()
}

/// Applies a command-line `--out` override.
pub fn with_output(mut cfg: RunConfig, out: Option<PathBuf>) -> RunConfig {
    if let Some(dir) = out {
        cfg.output.dir = dir;
    }
    cfg
}

