//! Energy diagnostics along a solved flow.
//!
//! The quantities tracked are the free energy
//!
//! ```text
//! Φ[μ] = ρν Ent(μ) + (ν²/2) I(μ) + ℱ[μ],
//! ```
//!
//! the adjusted cost q = u + ν log μ with its weighted Dirichlet energy
//! 𝒬 = ∫|∇q|² dμ, and the Lyapunov functional ℒ = Φ - ½𝒬, which decays
//! along solutions at the exact rate
//!
//! ```text
//! dℒ/dt = -ρ𝒬.
//! ```
//!
//! [`diagnose`] samples all of these on a stride through the time mesh and
//! reports the identity's finite-difference residual at interior samples.
//! The density equation is the continuity equation with velocity -∇q, which
//! also gives the path regularity bound W1(μ_s, μ_t) ≤ √(t-s)·(∫ₛᵗ 𝒬)^½
//! checked by [`shift_regularity_check`].

use crate::coupling::{potential_energy, FourierKernel, ModelParams};
use crate::error::{Error, Result};
use crate::evolve::MfgSolution;
use crate::grid::ScalarField;
use crate::measures::{entropy, fisher_information, log_density, wasserstein1_circle, Density};
use serde::Serialize;

/// Floor for the relative-residual denominator ρ𝒬, which vanishes as the
/// flow settles; below it the absolute residual is the meaningful number.
pub const RESIDUAL_DENOMINATOR_FLOOR: f64 = 1e-6;

/// Energies at one sampled time, with the Lyapunov identity residual at
/// interior samples (`None` on the first and last row of a report).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub entropy: f64,
    pub fisher: f64,
    pub potential: f64,
    pub free_energy: f64,
    pub q_energy: f64,
    pub lyapunov: f64,
    /// |dℒ/dt + ρ𝒬| with a centered difference over neighboring samples.
    pub residual_abs: Option<f64>,
    /// Absolute residual over max(ρ𝒬, floor).
    pub residual_rel: Option<f64>,
}

/// Sampled energy history of a solved flow.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsReport {
    pub rows: Vec<DiagnosticsRow>,
}

impl DiagnosticsReport {
    /// Largest relative residual among rows with t in [t_min, t_max];
    /// `None` when no interior sample falls in the band.
    #[must_use]
    pub fn max_relative_residual_in(&self, t_min: f64, t_max: f64) -> Option<f64> {
        self.rows
            .iter()
            .filter(|r| r.t >= t_min && r.t <= t_max)
            .filter_map(|r| r.residual_rel)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    /// Whether the Lyapunov values never increase by more than `slack`
    /// between consecutive samples.
    #[must_use]
    pub fn lyapunov_is_nonincreasing(&self, slack: f64) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].lyapunov <= w[0].lyapunov + slack)
    }
}

/// The adjusted cost q = u + ν log m. Additive shifts of u shift q by the
/// same constant, so every gradient-based quantity built from it is
/// gauge-invariant.
pub fn adjusted_cost(u: &ScalarField, m: &Density, params: &ModelParams) -> Result<ScalarField> {
    let log_m = log_density(m)?;
    Ok(u.zip_with(&log_m, |uv, lv| uv + params.nu() * lv))
}

/// Weighted Dirichlet energy 𝒬 = ∫|∇q|² dμ of the adjusted cost. Zero
/// exactly at stationary equilibria, where q is constant.
pub fn q_energy(u: &ScalarField, m: &Density, params: &ModelParams) -> Result<f64> {
    let q = adjusted_cost(u, m, params)?;
    let grad_sq = q.gradient().magnitude_squared();
    Ok(grad_sq
        .values()
        .iter()
        .zip(m.values())
        .map(|(&g, &mv)| g * mv)
        .sum::<f64>()
        * m.grid().cell_volume())
}

fn energies_at(
    kernel: &FourierKernel,
    params: &ModelParams,
    u: &ScalarField,
    m: &Density,
) -> Result<(f64, f64, f64, f64, f64)> {
    let ent = entropy(m)?;
    let fisher = fisher_information(m)?;
    let potential = potential_energy(kernel, m)?;
    let phi =
        params.rho() * params.nu() * ent + 0.5 * params.nu() * params.nu() * fisher + potential;
    let q_en = q_energy(u, m, params)?;
    Ok((ent, fisher, potential, phi, q_en))
}

/// Samples the energy diagnostics every `stride` mesh steps (the final time
/// is always included) and fills in the Lyapunov identity residuals by
/// centered differences over neighboring samples.
pub fn diagnose(
    kernel: &FourierKernel,
    params: &ModelParams,
    solution: &MfgSolution,
    stride: usize,
) -> Result<DiagnosticsReport> {
    if stride == 0 {
        return Err(Error::InvalidParameter(
            "diagnostics stride must be at least 1".to_string(),
        ));
    }
    let last = solution.mesh.steps();
    let mut indices: Vec<usize> = (0..=last).step_by(stride).collect();
    if *indices.last().expect("nonempty") != last {
        indices.push(last);
    }
    let mut rows = Vec::with_capacity(indices.len());
    for &i in &indices {
        let (ent, fisher, potential, phi, q_en) =
            energies_at(kernel, params, &solution.u_flow[i], &solution.m_flow[i])?;
        rows.push(DiagnosticsRow {
            t: solution.mesh.time(i),
            entropy: ent,
            fisher,
            potential,
            free_energy: phi,
            q_energy: q_en,
            lyapunov: phi - 0.5 * q_en,
            residual_abs: None,
            residual_rel: None,
        });
    }
    for p in 1..rows.len().saturating_sub(1) {
        let dt_span = rows[p + 1].t - rows[p - 1].t;
        let slope = (rows[p + 1].lyapunov - rows[p - 1].lyapunov) / dt_span;
        let dissipation = params.rho() * rows[p].q_energy;
        let abs = (slope + dissipation).abs();
        rows[p].residual_abs = Some(abs);
        rows[p].residual_rel = Some(abs / dissipation.max(RESIDUAL_DENOMINATOR_FLOOR));
    }
    Ok(DiagnosticsReport { rows })
}

/// Path-regularity check between mesh indices `from` and `to`: the
/// continuity-equation velocity -∇q gives
///
/// ```text
/// W1(μ_s, μ_t) ≤ √(t-s) · (∫ₛᵗ 𝒬 dτ)^{1/2},
/// ```
///
/// returned as (lhs, rhs) with the time integral by the trapezoid rule on
/// the full mesh. Circle only (the lhs is the exact circular W1).
pub fn shift_regularity_check(
    params: &ModelParams,
    solution: &MfgSolution,
    from: usize,
    to: usize,
) -> Result<(f64, f64)> {
    assert!(from < to && to <= solution.mesh.steps(), "bad index pair");
    let lhs = wasserstein1_circle(&solution.m_flow[from], &solution.m_flow[to])?;
    let dt = solution.mesh.dt();
    let mut integral = 0.0;
    let mut previous: Option<f64> = None;
    for i in from..=to {
        let q_en = q_energy(&solution.u_flow[i], &solution.m_flow[i], params)?;
        if let Some(prev) = previous {
            integral += 0.5 * (prev + q_en) * dt;
        }
        previous = Some(q_en);
    }
    let elapsed = solution.mesh.time(to) - solution.mesh.time(from);
    Ok((lhs, (elapsed * integral).sqrt()))
}

/// One tested pair of times in a path-regularity table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ShiftBoundRow {
    /// Earlier time.
    pub s: f64,
    /// Later time.
    pub t: f64,
    /// Transport distance W1(μ_s, μ_t).
    pub lhs: f64,
    /// Budget √(t-s)·(∫ₛᵗ 𝒬)^{1/2}.
    pub rhs: f64,
    /// lhs ≤ rhs + slack.
    pub pass: bool,
}

/// Evaluates the path-regularity bound on every ordered pair of a lattice
/// of `points` mesh indices spread evenly over the whole horizon. The
/// energy integral is accumulated once over the full mesh (trapezoid rule)
/// and read off by prefix differences, so the cost stays linear in the mesh
/// plus one transport distance per pair. Circle only.
pub fn shift_bound_lattice(
    params: &ModelParams,
    solution: &MfgSolution,
    points: usize,
    slack: f64,
) -> Result<Vec<ShiftBoundRow>> {
    if points < 2 {
        return Err(Error::InvalidParameter(
            "shift-bound lattice needs at least 2 points".to_string(),
        ));
    }
    let steps = solution.mesh.steps();
    let dt = solution.mesh.dt();
    let mut prefix = Vec::with_capacity(steps + 1);
    prefix.push(0.0f64);
    let mut previous = q_energy(&solution.u_flow[0], &solution.m_flow[0], params)?;
    for i in 1..=steps {
        let current = q_energy(&solution.u_flow[i], &solution.m_flow[i], params)?;
        prefix.push(prefix[i - 1] + 0.5 * (previous + current) * dt);
        previous = current;
    }
    let mut lattice: Vec<usize> = (0..points)
        .map(|j| (j * steps) / (points - 1))
        .collect();
    lattice.dedup();
    let mut rows = Vec::new();
    for (a_pos, &a) in lattice.iter().enumerate() {
        for &b in &lattice[a_pos + 1..] {
            let lhs = wasserstein1_circle(&solution.m_flow[a], &solution.m_flow[b])?;
            let elapsed = solution.mesh.time(b) - solution.mesh.time(a);
            let rhs = (elapsed * (prefix[b] - prefix[a])).sqrt();
            rows.push(ShiftBoundRow {
                s: solution.mesh.time(a),
                t: solution.mesh.time(b),
                lhs,
                rhs,
                pass: lhs <= rhs + slack,
            });
        }
    }
    Ok(rows)
}

/// A-priori lower bound on the Lyapunov functional along the flow:
///
/// ```text
/// ℒ ≥ inf ℱ - c - ρν(2π)^d,
/// ```
///
/// with inf ℱ ≥ c₀ - Σ(c_k)₋ from the kernel's coefficients, the entropy
/// bounded below by -(2π)^d, and c = max over the sampled flow of
/// ½‖∇u‖²∞ + ν‖Δu‖∞ controlling ½𝒬 - (ν²/2) I.
pub fn lyapunov_lower_bound(
    kernel: &FourierKernel,
    params: &ModelParams,
    solution: &MfgSolution,
    stride: usize,
) -> f64 {
    let stride = stride.max(1);
    let mut c = 0.0f64;
    for u in solution.u_flow.iter().step_by(stride) {
        let grad_sup = u
            .gradient()
            .magnitude_squared()
            .values()
            .iter()
            .fold(0.0f64, |a, &v| a.max(v));
        let lap_sup = u.laplacian().sup_norm();
        c = c.max(0.5 * grad_sup + params.nu() * lap_sup);
    }
    let inf_potential = kernel.c0() - kernel.monotonicity_defect();
    let volume = solution.m_flow[0].grid().volume();
    inf_potential - c - params.rho() * params.nu() * volume
}

/// A compact lattice view of the density flow for plotting and reports:
/// strided times with their distance to uniform, plus a strided nodal
/// sample of the density itself.
#[derive(Clone, Debug, Serialize)]
pub struct FlatteningReport {
    pub times: Vec<f64>,
    /// W1 distance to the uniform density (circle only; total variation on
    /// the 2-torus).
    pub distance_to_uniform: Vec<f64>,
    /// sup |m - (2π)^{-d}| per sampled time.
    pub sup_deviation: Vec<f64>,
    /// Node stride of the lattice sample below.
    pub node_stride: usize,
    /// Density values at strided nodes, one inner vector per sampled time.
    pub lattice: Vec<Vec<f64>>,
}

/// Builds a [`FlatteningReport`] with at most `max_times` sampled times and
/// `max_nodes` sampled nodes per time.
pub fn flattening_report(
    solution: &MfgSolution,
    max_times: usize,
    max_nodes: usize,
) -> Result<FlatteningReport> {
    let steps = solution.mesh.steps();
    let time_stride = (steps / max_times.max(1)).max(1);
    let nodes = solution.m_flow[0].grid().node_count();
    let node_stride = (nodes / max_nodes.max(1)).max(1);
    let uniform = Density::uniform(solution.m_flow[0].grid());
    let level = 1.0 / solution.m_flow[0].grid().volume();
    let mut indices: Vec<usize> = (0..=steps).step_by(time_stride).collect();
    if *indices.last().expect("nonempty") != steps {
        indices.push(steps);
    }
    let mut report = FlatteningReport {
        times: Vec::with_capacity(indices.len()),
        distance_to_uniform: Vec::with_capacity(indices.len()),
        sup_deviation: Vec::with_capacity(indices.len()),
        node_stride,
        lattice: Vec::with_capacity(indices.len()),
    };
    for &i in &indices {
        let m = &solution.m_flow[i];
        report.times.push(solution.mesh.time(i));
        report
            .distance_to_uniform
            .push(crate::stationary::fixed_point_distance(m, &uniform)?);
        report.sup_deviation.push(
            m.values()
                .iter()
                .fold(0.0f64, |a, &v| a.max((v - level).abs())),
        );
        report
            .lattice
            .push(m.values().iter().step_by(node_stride).copied().collect());
    }
    Ok(report)
}
