//! The five subcommands. Heavy solves run on a worker pool; all files are
//! written afterwards from the collected results, in a fixed order, so
//! outputs are deterministic regardless of scheduling.

use crate::config::ScenarioConfig;
use crate::CliError;
use mfg_core::coupling::{free_energy, heat_flow_uniqueness_check, FourierKernel};
use mfg_core::diagnostics::{diagnose, shift_bound_lattice, ShiftBoundRow};
use mfg_core::evolve::solve_mfg;
use mfg_core::io::{
    export_trajectory, import_density_csv, write_diagnostics_csv, write_history_csv,
    write_shift_bound_csv,
};
use mfg_core::measures::{fourier_moment, Density};
use mfg_core::oracle::run_suite;
use mfg_core::stationary::{
    distinct_solutions, fixed_point_distance, seed_library, solve_stationary_mfg,
    StationarityResidual, StationarySolution,
};
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Runs `work` on a dedicated pool of `jobs` threads, or on the global
/// default pool when no count is given.
fn with_pool<T: Send>(jobs: Option<usize>, work: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(work()),
        Some(0) => Err(CliError::Config("--jobs must be at least 1".to_string())),
        Some(threads) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

fn first_mode(dim: usize) -> Vec<i64> {
    let mut k = vec![0i64; dim];
    k[0] = 1;
    k
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Core(mfg_core::Error::from(e)))?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

// ── stationary ──────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct SeedOutcome {
    seed: String,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    outer_iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    q1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    free_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    w1_to_uniform: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<StationarityResidual>,
    #[serde(skip_serializing_if = "Option::is_none")]
    history_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct DistinctOutcome {
    seed: String,
    q1: f64,
    free_energy: f64,
    w1_to_uniform: f64,
}

#[derive(Serialize)]
struct StationarySummary {
    schema: u32,
    kappa_critical: f64,
    dedup_tol: f64,
    seeds: Vec<SeedOutcome>,
    distinct: Vec<DistinctOutcome>,
}

pub fn cmd_stationary(
    cfg: &ScenarioConfig,
    out: &Path,
    jobs: Option<usize>,
) -> Result<u8, CliError> {
    let grid = cfg.torus_grid()?;
    let params = cfg.model_params()?;
    let kernel = cfg.fourier_kernel()?;
    let seeds = seed_library(&grid)?;
    let sconf = cfg.stationary_config();
    let solves: Vec<(String, Result<StationarySolution, mfg_core::Error>)> =
        with_pool(jobs, || {
            seeds
                .par_iter()
                .map(|(name, m0)| {
                    (
                        name.clone(),
                        solve_stationary_mfg(&kernel, &params, m0, &sconf),
                    )
                })
                .collect()
        })?;

    fs::create_dir_all(out)?;
    let uniform = Density::uniform(&grid);
    let e1 = first_mode(grid.dim());
    let mut outcomes = Vec::new();
    let mut converged: Vec<(String, StationarySolution)> = Vec::new();
    for (name, result) in solves {
        match result {
            Ok(solution) => {
                let file = format!("history_{name}.csv");
                write_history_csv(out.join(&file), &solution.history)?;
                outcomes.push(SeedOutcome {
                    seed: name.clone(),
                    converged: true,
                    outer_iterations: Some(solution.outer_iterations),
                    q1: Some(fourier_moment(&solution.m, &e1)?.q()),
                    free_energy: Some(free_energy(&kernel, &params, &solution.m)?),
                    w1_to_uniform: Some(fixed_point_distance(&solution.m, &uniform)?),
                    residual: Some(solution.residual),
                    history_file: Some(file),
                    error: None,
                });
                converged.push((name, solution));
            }
            Err(e) => outcomes.push(SeedOutcome {
                seed: name,
                converged: false,
                outer_iterations: None,
                q1: None,
                free_energy: None,
                w1_to_uniform: None,
                residual: None,
                history_file: None,
                error: Some(e.to_string()),
            }),
        }
    }

    let solutions: Vec<StationarySolution> =
        converged.iter().map(|(_, s)| s.clone()).collect();
    let representatives = distinct_solutions(&solutions, cfg.dedup_tolerance(&grid))?;
    let mut distinct = Vec::new();
    for &i in &representatives {
        distinct.push(DistinctOutcome {
            seed: converged[i].0.clone(),
            q1: fourier_moment(&solutions[i].m, &e1)?.q(),
            free_energy: free_energy(&kernel, &params, &solutions[i].m)?,
            w1_to_uniform: fixed_point_distance(&solutions[i].m, &uniform)?,
        });
    }

    let summary = StationarySummary {
        schema: 1,
        kappa_critical: params.kuramoto_critical_coupling(),
        dedup_tol: cfg.dedup_tolerance(&grid),
        seeds: outcomes,
        distinct,
    };
    write_json(&out.join("summary.json"), &summary)?;

    for outcome in &summary.seeds {
        if outcome.converged {
            println!(
                "seed {}: converged in {} iterations, q_1 = {}, W1 to uniform = {}",
                outcome.seed,
                outcome.outer_iterations.unwrap_or(0),
                outcome.q1.unwrap_or(f64::NAN),
                outcome.w1_to_uniform.unwrap_or(f64::NAN)
            );
        } else {
            println!(
                "seed {}: did not converge ({})",
                outcome.seed,
                outcome.error.as_deref().unwrap_or("unknown")
            );
        }
    }
    println!(
        "{} distinct solution(s) among {} converged",
        summary.distinct.len(),
        summary.seeds.iter().filter(|s| s.converged).count()
    );
    let all_converged = summary.seeds.iter().all(|s| s.converged);
    Ok(if all_converged { 0 } else { 1 })
}

// ── evolve ──────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct EvolveSummary {
    schema: u32,
    picard_iterations: usize,
    max_clipped_mass: f64,
    q1_final: f64,
    w1_final_to_uniform: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    max_relative_residual: Option<f64>,
    lyapunov_nonincreasing: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    shift_bound_ok: Option<bool>,
}

pub fn cmd_evolve(cfg: &ScenarioConfig, out: &Path) -> Result<u8, CliError> {
    let grid = cfg.torus_grid()?;
    let params = cfg.model_params()?;
    let kernel = cfg.fourier_kernel()?;
    let mesh = cfg.time_mesh()?;
    let m0 = cfg.initial_density(&grid)?;
    let solution = solve_mfg(
        &kernel,
        &params,
        &mesh,
        &m0,
        cfg.solver.terminal_mode,
        &cfg.evolve_config(),
    )?;

    let report = diagnose(&kernel, &params, &solution, cfg.output.diagnostics_stride)?;
    let lyapunov_ok = report.lyapunov_is_nonincreasing(1e-8);
    let shift_rows: Option<Vec<ShiftBoundRow>> = if grid.dim() == 1 {
        Some(shift_bound_lattice(
            &params,
            &solution,
            cfg.output.shift_lattice,
            1e-6,
        )?)
    } else {
        None
    };
    let shifts_ok = shift_rows
        .as_ref()
        .map(|rows| rows.iter().all(|row| row.pass));

    fs::create_dir_all(out)?;
    if cfg.output.emit_trajectory {
        export_trajectory(out.join("trajectory"), &solution, cfg.output.snapshot_stride)?;
    }
    if cfg.output.emit_diagnostics {
        write_diagnostics_csv(out.join("diagnostics.csv"), &report)?;
    }
    if let (true, Some(rows)) = (cfg.output.emit_shift_bound, &shift_rows) {
        write_shift_bound_csv(out.join("shift_bound.csv"), rows)?;
    }

    let last = &solution.m_flow[mesh.steps()];
    let summary = EvolveSummary {
        schema: 1,
        picard_iterations: solution.picard_iterations,
        max_clipped_mass: solution.max_clipped_mass,
        q1_final: fourier_moment(last, &first_mode(grid.dim()))?.q(),
        w1_final_to_uniform: fixed_point_distance(last, &Density::uniform(&grid))?,
        max_relative_residual: report.max_relative_residual_in(0.0, mesh.t_final()),
        lyapunov_nonincreasing: lyapunov_ok,
        shift_bound_ok: shifts_ok,
    };
    write_json(&out.join("summary.json"), &summary)?;

    println!(
        "converged in {} fixed-point rounds; max clipped mass {}",
        summary.picard_iterations, summary.max_clipped_mass
    );
    println!(
        "final slice: q_1 = {}, W1 to uniform = {}",
        summary.q1_final, summary.w1_final_to_uniform
    );
    if let Some(residual) = summary.max_relative_residual {
        println!("max relative energy-identity residual: {residual}");
    }
    println!(
        "Lyapunov nonincreasing: {lyapunov_ok}{}",
        match shifts_ok {
            Some(ok) => format!("; shift bound: {ok}"),
            None => String::new(),
        }
    );
    Ok(if lyapunov_ok && shifts_ok.unwrap_or(true) {
        0
    } else {
        1
    })
}

// ── criteria ────────────────────────────────────────────────────────────────

#[derive(Serialize)]
struct DensityCheck {
    path: String,
    lhs: f64,
    rhs: f64,
    satisfied: bool,
}

#[derive(Serialize)]
struct CriteriaSummary {
    schema: u32,
    monotone: bool,
    lambda: f64,
    half_critical: f64,
    certified: bool,
    densities: Vec<DensityCheck>,
}

pub fn cmd_criteria(
    cfg: &ScenarioConfig,
    out: &Path,
    densities: &[PathBuf],
) -> Result<u8, CliError> {
    let params = cfg.model_params()?;
    let kernel = cfg.fourier_kernel()?;
    let monotone = kernel.is_lasry_lions_monotone();
    let lambda = kernel.monotonicity_defect();
    let half_critical = params.nu() * (params.rho() + params.nu());
    let certified = monotone || lambda < half_critical;

    if monotone {
        println!("kernel monotone (all cosine coefficients nonnegative) => at most one stationary equilibrium");
    } else {
        println!("kernel not monotone; Lambda = {lambda} (sum of negative coefficient parts)");
    }
    if lambda < half_critical {
        println!("Lambda = {lambda} < {half_critical} = kappa_c/2 => uniqueness certified");
    } else {
        println!("Lambda = {lambda} >= {half_critical} = kappa_c/2 => no uniqueness certificate");
    }

    let mut checks = Vec::new();
    for path in densities {
        let m = import_density_csv(path)
            .map_err(|e| CliError::Config(format!("density {}: {e}", path.display())))?;
        if m.grid().dim() != kernel.dim() {
            return Err(CliError::Config(format!(
                "density {} has dimension {}, the kernel has {}",
                path.display(),
                m.grid().dim(),
                kernel.dim()
            )));
        }
        let check = heat_flow_uniqueness_check(&kernel, &params, &m)?;
        println!(
            "heat-flow bound at {}: lhs = {}, rhs = {}, satisfied = {}",
            path.display(),
            check.lhs,
            check.rhs,
            check.satisfied
        );
        checks.push(DensityCheck {
            path: path.display().to_string(),
            lhs: check.lhs,
            rhs: check.rhs,
            satisfied: check.satisfied,
        });
    }

    fs::create_dir_all(out)?;
    write_json(
        &out.join("criteria.json"),
        &CriteriaSummary {
            schema: 1,
            monotone,
            lambda,
            half_critical,
            certified,
            densities: checks,
        },
    )?;
    Ok(0)
}

// ── sweep ───────────────────────────────────────────────────────────────────

pub fn cmd_sweep(
    cfg: &ScenarioConfig,
    out: &Path,
    kappas: &[f64],
    jobs: Option<usize>,
) -> Result<u8, CliError> {
    if kappas.is_empty() {
        return Err(CliError::Config(
            "no sweep points; usage: mfg sweep --kappa 2.0,3.0,4.5 [--config FILE]".to_string(),
        ));
    }
    for &kappa in kappas {
        if !(kappa > 0.0) || !kappa.is_finite() {
            return Err(CliError::Config(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
    }
    if cfg.grid.d != 1 {
        return Err(CliError::Config(
            "sweep varies the kuramoto coupling, which lives on the circle (d = 1)".to_string(),
        ));
    }
    let grid = cfg.torus_grid()?;
    let params = cfg.model_params()?;
    let seeds = seed_library(&grid)?;
    let sconf = cfg.stationary_config();
    let tasks: Vec<(usize, usize)> = (0..kappas.len())
        .flat_map(|i| (0..seeds.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<((usize, usize), Result<StationarySolution, mfg_core::Error>)> =
        with_pool(jobs, || {
            tasks
                .par_iter()
                .map(|&(i, j)| {
                    let kernel = FourierKernel::kuramoto(kappas[i]);
                    (
                        (i, j),
                        solve_stationary_mfg(&kernel, &params, &seeds[j].1, &sconf),
                    )
                })
                .collect()
        })?;

    let e1 = [1i64];
    let mut csv = String::from("kappa,max_q1\n");
    let mut every_point_found = true;
    for (i, &kappa) in kappas.iter().enumerate() {
        let mut max_q1 = f64::NAN;
        let mut found = 0usize;
        for ((a, _), result) in &results {
            if *a != i {
                continue;
            }
            if let Ok(solution) = result {
                max_q1 = max_q1.max(fourier_moment(&solution.m, &e1)?.q());
                found += 1;
            }
        }
        if found == 0 {
            every_point_found = false;
            eprintln!("kappa = {kappa}: no converged solutions");
        } else if found < seeds.len() {
            eprintln!(
                "kappa = {kappa}: {} of {} seeds did not converge",
                seeds.len() - found,
                seeds.len()
            );
        }
        println!("kappa = {kappa}: max q_1 = {max_q1}");
        csv.push_str(&format!("{kappa},{max_q1}\n"));
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("sweep.csv"), csv)?;
    Ok(if every_point_found { 0 } else { 1 })
}

// ── verify ──────────────────────────────────────────────────────────────────

pub fn cmd_verify(out: &Path, seed: u64) -> Result<u8, CliError> {
    let report = run_suite(seed)?;
    let text = report.summary_text();
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("verify.xml"), report.junit_xml())?;
    fs::write(out.join("verify.txt"), &text)?;
    Ok(if report.all_passed() { 0 } else { 1 })
}
