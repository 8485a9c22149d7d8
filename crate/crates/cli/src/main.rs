//! `mlsw` — layered shallow water engine runner.
//!
//! Exit codes: 0 success, 1 verification failure (a report was produced but
//! a pass criterion was not met), 2 configuration or validation error,
//! 3 cavitation guard trip, 4 numeric failure (blow-up or non-convergent
//! quadrature).

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use config::RunConfig;
use mlsw_core::harness::{self, ConvergeConfig, DispersionConfig};
use mlsw_core::solver::{self, SolverParams};
use mlsw_core::{identities, profile, DensityGrid, Error as CoreError, SpatialGrid};

const EXIT_CHECK_FAILED: i32 = 1;
const EXIT_CONFIG: i32 = 2;
const EXIT_GUARD: i32 = 3;
const EXIT_NUMERIC: i32 = 4;

#[derive(Parser)]
#[command(
    name = "mlsw",
    about = "N-layer shallow water engine with eddy diffusivity: simulation and verification studies",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// TOML run configuration; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed recorded in reports and used for any randomized inputs.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for independent study runs.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run the exact operator-identity suite over a range of layer counts.
    Identities {
        #[arg(long, default_value_t = 257)]
        max_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Deliberately corrupt one comparison (failure-path check).
        #[arg(long, hide = true)]
        corrupt: bool,
    },
    /// Evolve the layered system and stream diagnostics.
    Simulate(CommonArgs),
    /// Layer-truncation consistency rate study.
    Consistency(CommonArgs),
    /// Solution self-convergence study against a nested fine reference.
    Converge(CommonArgs),
    /// Single-layer linear dispersion check.
    Dispersion(CommonArgs),
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    fn from_core(err: CoreError) -> Self {
        let code = match &err {
            CoreError::Cavitation { .. } => EXIT_GUARD,
            CoreError::BlowUp { .. } | CoreError::Quadrature { .. } => EXIT_NUMERIC,
            CoreError::InvalidGrid(_)
            | CoreError::InvalidParameter(_)
            | CoreError::DegenerateFit(_) => EXIT_CONFIG,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Identities {
            max_n,
            seed,
            out,
            corrupt,
        } => cmd_identities(max_n, seed, &out, corrupt),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Consistency(args) => cmd_consistency(&args),
        Command::Converge(args) => cmd_converge(&args),
        Command::Dispersion(args) => cmd_dispersion(&args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            std::process::exit(failure.code);
        }
    }
}

#[derive(Serialize)]
struct IdentitiesDocument {
    command: &'static str,
    #[serde(flatten)]
    suite: identities::IdentitySuite,
    wall_time_s: f64,
}

fn cmd_identities(max_n: usize, seed: u64, out: &Path, corrupt: bool) -> Result<i32, Failure> {
    if max_n < 2 {
        return Err(Failure::config("--max-n must be at least 2"));
    }
    let start = Instant::now();
    let suite = identities::run(max_n, seed, corrupt);
    let pass = suite.pass;
    report::ensure_dir(out).map_err(Failure::config)?;
    let doc = IdentitiesDocument {
        command: "identities",
        suite,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    report::write_json(&out.join("identities.json"), &doc).map_err(Failure::config)?;
    println!(
        "identities: {} (report in {})",
        if pass { "pass" } else { "FAIL" },
        out.display()
    );
    Ok(if pass { 0 } else { EXIT_CHECK_FAILED })
}

fn build_grids(cfg: &RunConfig) -> Result<(SpatialGrid, DensityGrid), Failure> {
    let sgrid = SpatialGrid::new(cfg.grid.length, cfg.grid.points).map_err(Failure::from_core)?;
    let dgrid = DensityGrid::new(cfg.layers.n, cfg.layers.rho_surf, cfg.layers.rho_bott)
        .map_err(Failure::from_core)?;
    Ok((sgrid, dgrid))
}

#[derive(Serialize)]
struct SimulateSummary {
    command: &'static str,
    seed: u64,
    grid: config::GridSection,
    layers: config::LayersSection,
    kappa: f64,
    h_star: f64,
    cfl: f64,
    s: u32,
    dealias: bool,
    t_end_requested: f64,
    guard: &'static str,
    failure_time: Option<f64>,
    steps: Option<usize>,
    t_final: Option<f64>,
    final_energy: Option<f64>,
    final_mass_total: Option<f64>,
    final_min_depth: Option<f64>,
    final_max_depth: Option<f64>,
    final_solution_norm: Option<f64>,
    wall_time_s: f64,
}

fn cmd_simulate(args: &CommonArgs) -> Result<i32, Failure> {
    let start = Instant::now();
    let cfg = RunConfig::load(args.config.as_deref()).map_err(Failure::config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(1);
    let (sgrid, dgrid) = build_grids(&cfg)?;
    let prof = cfg.profile.build(sgrid.length()).map_err(Failure::config)?;

    let params = SolverParams {
        kappa: cfg.solver.kappa,
        h_star: cfg.solver.h_star,
        cfl: cfg.solver.cfl,
        t_end: cfg.solver.t_end,
        dealias: cfg.solver.dealias,
        s: cfg.solver.s,
        output_interval: cfg.solver.output_interval,
        fixed_dt: cfg.solver.fixed_dt,
        hbar: profile::sample_background(&prof.hbar, &dgrid),
        ubar: profile::sample_background(&prof.ubar, &dgrid),
        sgrid: sgrid.clone(),
        dgrid: dgrid.clone(),
    };
    params.validate().map_err(Failure::from_core)?;
    if prof.min_total_depth(&sgrid, 256) < cfg.solver.h_star {
        return Err(Failure::config(format!(
            "profile violates the cavitation floor {} somewhere on the domain",
            cfg.solver.h_star
        )));
    }

    let h0 = profile::sample_field(&prof.h, &sgrid, &dgrid);
    let u0 = profile::sample_field(&prof.u, &sgrid, &dgrid);

    report::ensure_dir(&args.out).map_err(Failure::config)?;
    let mut summary = SimulateSummary {
        command: "simulate",
        seed,
        grid: cfg.grid.clone(),
        layers: cfg.layers.clone(),
        kappa: cfg.solver.kappa,
        h_star: cfg.solver.h_star,
        cfl: cfg.solver.cfl,
        s: cfg.solver.s,
        dealias: cfg.solver.dealias,
        t_end_requested: cfg.solver.t_end,
        guard: "ok",
        failure_time: None,
        steps: None,
        t_final: None,
        final_energy: None,
        final_mass_total: None,
        final_min_depth: None,
        final_max_depth: None,
        final_solution_norm: None,
        wall_time_s: 0.0,
    };

    match solver::simulate(&params, h0, u0) {
        Ok(output) => {
            report::write_csv(&args.out.join("diagnostics.csv"), &output.series)
                .map_err(Failure::config)?;
            let last = output.series.last().expect("at least the initial row");
            summary.steps = Some(output.state.steps);
            summary.t_final = Some(output.state.t);
            summary.final_energy = Some(last.energy);
            summary.final_mass_total = Some(last.mass_total);
            summary.final_min_depth = Some(last.min_depth);
            summary.final_max_depth = Some(last.max_depth);
            summary.final_solution_norm = Some(last.solution_norm);
            summary.wall_time_s = start.elapsed().as_secs_f64();
            report::write_json(&args.out.join("summary.json"), &summary)
                .map_err(Failure::config)?;
            println!(
                "simulate: reached t = {} in {} steps (reports in {})",
                output.state.t,
                output.state.steps,
                args.out.display()
            );
            Ok(0)
        }
        Err(err) => {
            let (guard, code) = match &err {
                CoreError::Cavitation { .. } => ("cavitation", EXIT_GUARD),
                CoreError::BlowUp { .. } => ("blow_up", EXIT_NUMERIC),
                _ => return Err(Failure::from_core(err)),
            };
            summary.guard = guard;
            summary.failure_time = match &err {
                CoreError::Cavitation { t, .. } => Some(*t),
                CoreError::BlowUp { t, .. } => Some(*t),
                _ => None,
            };
            summary.wall_time_s = start.elapsed().as_secs_f64();
            report::write_json(&args.out.join("summary.json"), &summary)
                .map_err(Failure::config)?;
            eprintln!("error: {err}");
            Ok(code)
        }
    }
}

#[derive(Serialize)]
struct ErrorRow {
    n: usize,
    error: f64,
}

#[derive(Serialize)]
struct ConsistencyDocument {
    command: &'static str,
    seed: u64,
    grid: config::GridSection,
    layers_rho_surf: f64,
    layers_rho_bott: f64,
    profile_preset: String,
    s: u32,
    n_list: Vec<usize>,
    errors: Vec<f64>,
    slope: Option<f64>,
    intercept: Option<f64>,
    residual: Option<f64>,
    slope_window: [f64; 2],
    status: &'static str,
    levels: Vec<harness::LevelRates>,
    wall_time_s: f64,
}

fn cmd_consistency(args: &CommonArgs) -> Result<i32, Failure> {
    let start = Instant::now();
    let cfg = RunConfig::load(args.config.as_deref()).map_err(Failure::config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(1);
    let sgrid = SpatialGrid::new(cfg.grid.length, cfg.grid.points).map_err(Failure::from_core)?;
    let prof = cfg.profile.build(sgrid.length()).map_err(Failure::config)?;

    let study = harness::consistency_study(
        &prof.h,
        &sgrid,
        cfg.layers.rho_surf,
        cfg.layers.rho_bott,
        &cfg.consistency.n_list,
        cfg.consistency.s,
    )
    .map_err(Failure::from_core)?;

    let window = cfg.consistency.slope_window;
    let status = match (&study.degenerate, &study.fit) {
        (Some(_), _) => "degenerate",
        (None, Some(fit)) if fit.slope >= window[0] && fit.slope <= window[1] => "pass",
        _ => "fail",
    };
    report::ensure_dir(&args.out).map_err(Failure::config)?;
    let rows: Vec<ErrorRow> = study
        .n_list
        .iter()
        .zip(&study.errors)
        .map(|(&n, &error)| ErrorRow { n, error })
        .collect();
    report::write_csv(&args.out.join("errors.csv"), &rows).map_err(Failure::config)?;
    let doc = ConsistencyDocument {
        command: "consistency",
        seed,
        grid: cfg.grid.clone(),
        layers_rho_surf: cfg.layers.rho_surf,
        layers_rho_bott: cfg.layers.rho_bott,
        profile_preset: cfg.profile.preset.clone(),
        s: study.s,
        n_list: study.n_list.clone(),
        errors: study.errors.clone(),
        slope: study.fit.as_ref().map(|f| f.slope),
        intercept: study.fit.as_ref().map(|f| f.intercept),
        residual: study.fit.as_ref().map(|f| f.residual),
        slope_window: window,
        status,
        levels: study.levels.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    report::write_json(&args.out.join("study.json"), &doc).map_err(Failure::config)?;
    println!(
        "consistency: {status}, slope {:?} (reports in {})",
        doc.slope,
        args.out.display()
    );
    Ok(if status == "fail" {
        EXIT_CHECK_FAILED
    } else {
        0
    })
}

#[derive(Serialize)]
struct ConvergeDocument {
    command: &'static str,
    seed: u64,
    grid: config::GridSection,
    layers_rho_surf: f64,
    layers_rho_bott: f64,
    profile_preset: String,
    s: u32,
    kappa: f64,
    t_end: f64,
    metric: harness::DifferenceMetric,
    projection: harness::Projection,
    n_list: Vec<usize>,
    n_ref: usize,
    ratio: usize,
    dt: f64,
    steps: usize,
    errors: Vec<f64>,
    slope: Option<f64>,
    intercept: Option<f64>,
    residual: Option<f64>,
    slope_window: [f64; 2],
    status: &'static str,
    wall_time_s: f64,
}

fn cmd_converge(args: &CommonArgs) -> Result<i32, Failure> {
    let start = Instant::now();
    let cfg = RunConfig::load(args.config.as_deref()).map_err(Failure::config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(1);
    if args.threads == 0 {
        return Err(Failure::config("--threads must be at least 1"));
    }
    let sgrid = SpatialGrid::new(cfg.grid.length, cfg.grid.points).map_err(Failure::from_core)?;
    let prof = cfg.profile.build(sgrid.length()).map_err(Failure::config)?;
    if prof.min_total_depth(&sgrid, 256) < cfg.solver.h_star {
        return Err(Failure::config(format!(
            "profile violates the cavitation floor {} somewhere on the domain",
            cfg.solver.h_star
        )));
    }

    let study_cfg = ConvergeConfig {
        n_list: cfg.converge.n_list.clone(),
        n_ref: cfg.converge.n_ref,
        ratio: cfg.converge.ratio,
        s: cfg.converge.s,
        kappa: cfg.solver.kappa,
        h_star: cfg.solver.h_star,
        cfl: cfg.solver.cfl,
        t_end: cfg.converge.t_end,
        dealias: cfg.solver.dealias,
        metric: cfg.converge.metric,
        projection: cfg.converge.projection,
        threads: args.threads,
    };
    let study = harness::convergence_study(
        &study_cfg,
        &prof,
        &sgrid,
        cfg.layers.rho_surf,
        cfg.layers.rho_bott,
    )
    .map_err(Failure::from_core)?;

    let window = cfg.converge.slope_window;
    let status = match (&study.degenerate, &study.fit) {
        (Some(_), _) => "degenerate",
        (None, Some(fit)) if fit.slope >= window[0] && fit.slope <= window[1] => "pass",
        _ => "fail",
    };
    report::ensure_dir(&args.out).map_err(Failure::config)?;
    let rows: Vec<ErrorRow> = study
        .n_list
        .iter()
        .zip(&study.errors)
        .map(|(&n, &error)| ErrorRow { n, error })
        .collect();
    report::write_csv(&args.out.join("errors.csv"), &rows).map_err(Failure::config)?;
    let doc = ConvergeDocument {
        command: "converge",
        seed,
        grid: cfg.grid.clone(),
        layers_rho_surf: cfg.layers.rho_surf,
        layers_rho_bott: cfg.layers.rho_bott,
        profile_preset: cfg.profile.preset.clone(),
        s: study_cfg.s,
        kappa: study_cfg.kappa,
        t_end: study_cfg.t_end,
        metric: study_cfg.metric,
        projection: study_cfg.projection,
        n_list: study.n_list.clone(),
        n_ref: study.n_ref,
        ratio: study_cfg.ratio,
        dt: study.dt,
        steps: study.steps,
        errors: study.errors.clone(),
        slope: study.fit.as_ref().map(|f| f.slope),
        intercept: study.fit.as_ref().map(|f| f.intercept),
        residual: study.fit.as_ref().map(|f| f.residual),
        slope_window: window,
        status,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    report::write_json(&args.out.join("study.json"), &doc).map_err(Failure::config)?;
    println!(
        "converge: {status}, slope {:?} (reports in {})",
        doc.slope,
        args.out.display()
    );
    Ok(if status == "fail" {
        EXIT_CHECK_FAILED
    } else {
        0
    })
}

#[derive(Serialize)]
struct DispersionDocument {
    command: &'static str,
    seed: u64,
    kappa: f64,
    hbar: f64,
    amplitude: f64,
    t_end: f64,
    tolerance: f64,
    modes: Vec<harness::ModeReport>,
    status: &'static str,
    wall_time_s: f64,
}

fn cmd_dispersion(args: &CommonArgs) -> Result<i32, Failure> {
    let start = Instant::now();
    let cfg = RunConfig::load(args.config.as_deref()).map_err(Failure::config)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(1);
    let study_cfg = DispersionConfig {
        modes: cfg.dispersion.modes.clone(),
        kappa: cfg.dispersion.kappa,
        hbar: cfg.dispersion.hbar,
        amplitude: cfg.dispersion.amplitude,
        t_end: cfg.dispersion.t_end,
        length: cfg.grid.length,
        points: cfg.grid.points,
        cfl: cfg.dispersion.cfl,
    };
    let study = harness::dispersion_study(&study_cfg).map_err(Failure::from_core)?;
    let tol = cfg.dispersion.tolerance;
    let pass = study.modes.iter().all(|m| {
        if m.oscillatory {
            m.frequency_rel_err <= tol && m.decay_rel_err <= tol
        } else {
            m.decay_rel_err <= tol
        }
    });
    let status = if pass { "pass" } else { "fail" };
    report::ensure_dir(&args.out).map_err(Failure::config)?;
    let doc = DispersionDocument {
        command: "dispersion",
        seed,
        kappa: study_cfg.kappa,
        hbar: study_cfg.hbar,
        amplitude: study_cfg.amplitude,
        t_end: study_cfg.t_end,
        tolerance: tol,
        modes: study.modes.clone(),
        status,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    report::write_json(&args.out.join("dispersion.json"), &doc).map_err(Failure::config)?;
    println!("dispersion: {status} (reports in {})", args.out.display());
    Ok(if pass { 0 } else { EXIT_CHECK_FAILED })
}
