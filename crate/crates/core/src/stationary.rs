//! Stationary equilibria of the discounted game on the torus.
//!
//! A stationary equilibrium is a pair (u, m) solving
//!
//! ```text
//! ρu - νΔu + ½|∇u|²          = f(x, m)
//! -νΔm - ∇·(m ∇u)            = 0,        m ≥ 0, ∫m = 1,
//! ```
//!
//! and for this potential structure the density equation is solved exactly
//! by the Gibbs measure m = e^{-u/ν}/Z. The solver therefore iterates the
//! best-response map μ ↦ gibbs(solve_hjb(f(·, μ))) with adaptive damping,
//! and measures convergence by the distance between a density and its own
//! best response. The inner Hamilton-Jacobi-Bellman equation is solved by a
//! spectrally preconditioned fixed-point iteration with Anderson
//! acceleration.

use crate::coupling::{interaction_cost, FourierKernel, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use crate::measures::{
    log_density, total_variation, translation_invariant_distance, wasserstein1_circle, Density,
};
use serde::Serialize;
use std::collections::VecDeque;

/// Tolerances and iteration budgets for the stationary solver.
#[derive(Clone, Copy, Debug)]
pub struct StationaryConfig {
    /// Convergence threshold on the best-response gap (W1 on the circle,
    /// total variation on the 2-torus).
    pub tol_fixed_point: f64,
    /// Sup-norm threshold on the Hamilton-Jacobi-Bellman residual.
    pub tol_pde: f64,
    /// Outer best-response iteration budget.
    pub max_outer: usize,
    /// Inner HJB iteration budget.
    pub max_inner: usize,
    /// Initial damping of the outer iteration; adapts downward when the
    /// best-response gap stops shrinking.
    pub damping: f64,
}

impl Default for StationaryConfig {
    fn default() -> Self {
        Self {
            tol_fixed_point: 1e-10,
            tol_pde: 1e-9,
            max_outer: 5000,
            max_inner: 500,
            damping: 0.5,
        }
    }
}

/// One outer iteration of the best-response map, for convergence histories.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OuterRecord {
    pub iter: usize,
    /// Distance from the current density to its best response.
    pub gap: f64,
    /// Damping factor used for the step taken from this iterate.
    pub damping: f64,
    /// Stationarity residuals of the pair (best-response u, current m).
    /// The cost-to-go residual stays at the inner solver tolerance; the
    /// density-equation residual and the derivative oscillation shrink as
    /// the iteration converges.
    pub residual: StationarityResidual,
}

/// Pointwise residuals of the stationary system at a candidate pair (u, m).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StationarityResidual {
    /// sup |ρu - νΔu + ½|∇u|² - f(·, m)|.
    pub hjb: f64,
    /// sup |νΔm + ∇·(m∇u)|.
    pub fokker_planck: f64,
    /// Oscillation of the free energy's linear derivative
    /// ρν log m - ν²Δ log m - (ν²/2)|∇log m|² + f(·, m), which is constant
    /// exactly at stationary equilibria. When m is the Gibbs measure of u
    /// this field equals the negated HJB residual up to an additive
    /// constant, so the oscillation is bounded by twice the HJB residual.
    pub derivative_oscillation: f64,
}

/// A solved stationary equilibrium with its convergence history.
#[derive(Clone, Debug)]
pub struct StationarySolution {
    pub u: ScalarField,
    pub m: Density,
    pub residual: StationarityResidual,
    pub outer_iterations: usize,
    pub history: Vec<OuterRecord>,
}

// ── Inner HJB solver ────────────────────────────────────────────────────────

/// Window-5 Anderson acceleration for fixed-point iterations, with a damped
/// Picard fallback while history accumulates or when the little least
/// squares problem degenerates.
struct Anderson {
    depth: usize,
    iterates: VecDeque<Vec<f64>>,
    residuals: VecDeque<Vec<f64>>,
}

const ANDERSON_DEPTH: usize = 5;

impl Anderson {
    fn new() -> Self {
        Self {
            depth: ANDERSON_DEPTH,
            iterates: VecDeque::new(),
            residuals: VecDeque::new(),
        }
    }

    fn reset(&mut self) {
        self.iterates.clear();
        self.residuals.clear();
    }

    /// Record (u, r) with r = g(u) - u and propose the next iterate.
    fn propose(&mut self, u: &[f64], r: &[f64], fallback_damping: f64) -> Vec<f64> {
        self.iterates.push_back(u.to_vec());
        self.residuals.push_back(r.to_vec());
        if self.iterates.len() > self.depth + 1 {
            self.iterates.pop_front();
            self.residuals.pop_front();
        }
        let picard = || -> Vec<f64> {
            u.iter()
                .zip(r)
                .map(|(&a, &b)| a + fallback_damping * b)
                .collect()
        };
        let hist = self.iterates.len();
        if hist < 2 {
            return picard();
        }
        let cols = hist - 1;
        let diff = |j: usize| -> Vec<f64> {
            self.residuals[j + 1]
                .iter()
                .zip(&self.residuals[j])
                .map(|(&a, &b)| a - b)
                .collect()
        };
        let dr: Vec<Vec<f64>> = (0..cols).map(diff).collect();
        let rk = self.residuals.back().expect("nonempty history");
        let mut normal = [[0.0f64; ANDERSON_DEPTH]; ANDERSON_DEPTH];
        let mut rhs = [0.0f64; ANDERSON_DEPTH];
        for i in 0..cols {
            for j in i..cols {
                let dot: f64 = dr[i].iter().zip(&dr[j]).map(|(a, b)| a * b).sum();
                normal[i][j] = dot;
                normal[j][i] = dot;
            }
            rhs[i] = dr[i].iter().zip(rk.iter()).map(|(a, b)| a * b).sum();
        }
        // A tiny ridge keeps nearly collinear residual differences solvable.
        let ridge = (1e-12 * (0..cols).map(|i| normal[i][i]).fold(0.0, f64::max)).max(1e-300);
        for i in 0..cols {
            normal[i][i] += ridge;
        }
        let gamma = match solve_small(&mut normal, &mut rhs, cols) {
            Some(g) => g,
            None => return picard(),
        };
        // u_next = g_k - Σ γ_j Δg_j with g = u + r.
        let mut next: Vec<f64> = u.iter().zip(rk.iter()).map(|(&a, &b)| a + b).collect();
        for (j, &gj) in gamma.iter().enumerate().take(cols) {
            for (idx, n) in next.iter_mut().enumerate() {
                let dg = (self.iterates[j + 1][idx] + self.residuals[j + 1][idx])
                    - (self.iterates[j][idx] + self.residuals[j][idx]);
                *n -= gj * dg;
            }
        }
        if next.iter().all(|v| v.is_finite()) {
            next
        } else {
            self.reset();
            picard()
        }
    }
}

/// Gaussian elimination with partial pivoting for the tiny Anderson system.
fn solve_small(
    a: &mut [[f64; ANDERSON_DEPTH]; ANDERSON_DEPTH],
    b: &mut [f64; ANDERSON_DEPTH],
    n: usize,
) -> Option<[f64; ANDERSON_DEPTH]> {
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot_row][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; ANDERSON_DEPTH];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    if x[..n].iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Applies the resolvent (ρ - νΔ)^{-1} spectrally.
fn resolvent(field: &ScalarField, params: &ModelParams) -> ScalarField {
    field.resolvent(params.rho(), params.nu())
}

/// Solves the stationary Hamilton-Jacobi-Bellman equation
/// ρu - νΔu + ½|∇u|² = f by the preconditioned fixed point
/// u ← (ρ - νΔ)^{-1}(f - ½|∇u|²), Anderson accelerated, until the sup-norm
/// PDE residual drops below `tol`.
pub fn solve_stationary_hjb(
    params: &ModelParams,
    f: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<ScalarField> {
    let mut u = resolvent(f, params);
    let mut anderson = Anderson::new();
    let mut damping = 1.0f64;
    let mut best = f64::INFINITY;
    let mut stall = 0usize;
    let mut last_residual = f64::NAN;
    for _ in 0..max_iter {
        let grad_sq = u.gradient().magnitude_squared();
        let target = f.zip_with(&grad_sq, |fv, g| fv - 0.5 * g);
        let g = resolvent(&target, params);
        let r: Vec<f64> = g
            .values()
            .iter()
            .zip(u.values())
            .map(|(&a, &b)| a - b)
            .collect();
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::DidNotConverge {
                what: "stationary cost-to-go equation",
                iterations: max_iter,
                residual: f64::NAN,
            });
        }
        // The PDE residual is exactly (ρ - νΔ) applied to -r.
        let residual = ScalarField::from_values_unchecked(u.grid().clone(), r.clone())
            .helmholtz(params.rho(), params.nu())
            .sup_norm();
        last_residual = residual;
        if residual <= tol {
            return Ok(u);
        }
        if residual < best {
            best = residual;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 5 {
                anderson.reset();
                damping = (0.5 * damping).max(1.0 / 64.0);
                stall = 0;
            }
        }
        u = ScalarField::from_values_unchecked(
            u.grid().clone(),
            anderson.propose(u.values(), &r, damping),
        );
    }
    Err(Error::DidNotConverge {
        what: "stationary cost-to-go equation",
        iterations: max_iter,
        residual: last_residual,
    })
}

/// The Gibbs probability density e^{-u/ν}/Z of a cost-to-go field, the
/// exact solution of the stationary density equation for drift -∇u. The
/// result is invariant under additive shifts of u.
pub fn gibbs_density(u: &ScalarField, params: &ModelParams) -> Density {
    let floor = u.values().iter().copied().fold(f64::INFINITY, f64::min);
    let nu = params.nu();
    let field = u.map(|v| (-(v - floor) / nu).exp());
    Density::from_unnormalized(field).expect("exponential of a finite field is positive")
}

// ── Outer best-response iteration ───────────────────────────────────────────

/// Distance used to measure outer convergence: W1 on the circle, total
/// variation on the 2-torus.
pub fn fixed_point_distance(a: &Density, b: &Density) -> Result<f64> {
    if a.grid().dim() == 1 {
        wasserstein1_circle(a, b)
    } else {
        Ok(total_variation(a, b))
    }
}

/// One application of the best-response map: the Gibbs density of the
/// cost-to-go generated by the coupling cost at `m`.
fn best_response(
    kernel: &FourierKernel,
    params: &ModelParams,
    m: &Density,
    config: &StationaryConfig,
) -> Result<(ScalarField, Density)> {
    let f = interaction_cost(kernel, m)?;
    let u = solve_stationary_hjb(params, &f, config.tol_pde, config.max_inner)?;
    let response = gibbs_density(&u, params);
    Ok((u, response))
}

/// Finds a stationary equilibrium by damped best-response iteration from
/// the density `seed`, then polishes with undamped steps so the returned
/// pair is Gibbs-consistent to round-off.
pub fn solve_stationary_mfg(
    kernel: &FourierKernel,
    params: &ModelParams,
    seed: &Density,
    config: &StationaryConfig,
) -> Result<StationarySolution> {
    let mut mu = seed.clone();
    let mut damping = config.damping;
    let mut history = Vec::new();
    let mut previous_gap = f64::INFINITY;
    let mut growth_streak = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    for iter in 0..config.max_outer {
        iterations = iter + 1;
        let (u, response) = best_response(kernel, params, &mu, config)?;
        let gap = fixed_point_distance(&response, &mu)?;
        history.push(OuterRecord {
            iter,
            gap,
            damping,
            residual: stationarity_residual(kernel, params, &u, &mu)?,
        });
        if gap <= config.tol_fixed_point {
            converged = true;
            break;
        }
        if gap > previous_gap {
            growth_streak += 1;
            if growth_streak >= 3 {
                damping = (0.5 * damping).max(1.0 / 64.0);
                growth_streak = 0;
            }
        } else {
            growth_streak = 0;
        }
        previous_gap = gap;
        let blended = mu
            .field()
            .zip_with(response.field(), |a, b| (1.0 - damping) * a + damping * b);
        mu = Density::new(blended)?;
    }
    if !converged {
        return Err(Error::DidNotConverge {
            what: "stationary equilibrium fixed point",
            iterations,
            residual: history.last().map_or(f64::NAN, |r| r.gap),
        });
    }
    // Undamped polish: a handful of exact best-response steps shrink the
    // remaining gap geometrically whenever the equilibrium is stable, and
    // the final pair is (u, gibbs(u)) by construction.
    let mut u;
    let mut gap = f64::INFINITY;
    loop {
        let (next_u, response) = best_response(kernel, params, &mu, config)?;
        let next_gap = fixed_point_distance(&response, &mu)?;
        history.push(OuterRecord {
            iter: iterations,
            gap: next_gap,
            damping: 1.0,
            residual: stationarity_residual(kernel, params, &next_u, &mu)?,
        });
        u = next_u;
        mu = response;
        iterations += 1;
        if next_gap <= config.tol_fixed_point || next_gap >= gap || iterations >= config.max_outer {
            break;
        }
        gap = next_gap;
    }
    let residual = stationarity_residual(kernel, params, &u, &mu)?;
    Ok(StationarySolution {
        u,
        m: mu,
        residual,
        outer_iterations: iterations,
        history,
    })
}

/// Evaluates the pointwise residuals of the stationary system at (u, m),
/// including the oscillation of the free energy's linear derivative.
pub fn stationarity_residual(
    kernel: &FourierKernel,
    params: &ModelParams,
    u: &ScalarField,
    m: &Density,
) -> Result<StationarityResidual> {
    let (rho, nu) = (params.rho(), params.nu());
    let f = interaction_cost(kernel, m)?;
    let grad_u = u.gradient();
    let grad_sq = grad_u.magnitude_squared();
    let laplacian_u = u.laplacian();
    let hjb = u
        .values()
        .iter()
        .zip(laplacian_u.values())
        .zip(grad_sq.values())
        .zip(f.values())
        .map(|(((&uv, &lap), &gsq), &fv)| (rho * uv - nu * lap + 0.5 * gsq - fv).abs())
        .fold(0.0f64, f64::max);
    // Density-equation residual νΔm + ∇·(m∇u), all derivatives spectral.
    let mut flux_components = Vec::with_capacity(grad_u.components().len());
    for component in grad_u.components() {
        flux_components.push(component.zip_with(m.field(), |g, mv| g * mv));
    }
    let flux_divergence = crate::grid::VectorField::new(flux_components)?.divergence();
    let laplacian_m = m.field().laplacian();
    let fokker_planck = laplacian_m
        .values()
        .iter()
        .zip(flux_divergence.values())
        .map(|(&lm, &fd)| (nu * lm + fd).abs())
        .fold(0.0f64, f64::max);
    // Linear derivative of the free energy, constant exactly at equilibria:
    // ρν log m - ν²Δ log m - (ν²/2)|∇ log m|² + f.
    let log_m = log_density(m)?;
    let grad_log_sq = log_m.gradient().magnitude_squared();
    let laplacian_log = log_m.laplacian();
    let mut derivative = Vec::with_capacity(log_m.values().len());
    for (((&lv, &ll), &gl), &fv) in log_m
        .values()
        .iter()
        .zip(laplacian_log.values())
        .zip(grad_log_sq.values())
        .zip(f.values())
    {
        derivative.push(rho * nu * lv - nu * nu * ll - 0.5 * nu * nu * gl + fv);
    }
    let derivative_oscillation = ScalarField::new(log_m.grid().clone(), derivative)?.oscillation();
    Ok(StationarityResidual {
        hjb,
        fokker_planck,
        derivative_oscillation,
    })
}

// ── Multi-start driver ──────────────────────────────────────────────────────

/// The standard multi-start seeds: uniform, a single-mode cosine bump, two
/// von Mises bumps of different concentration, and a bimodal mixture.
pub fn seed_library(grid: &TorusGrid) -> Result<Vec<(String, Density)>> {
    let mut e1 = vec![0i64; grid.dim()];
    e1[0] = 1;
    Ok(vec![
        ("uniform".to_string(), Density::uniform(grid)),
        (
            "cosine".to_string(),
            crate::measures::cosine_perturbed_uniform(grid, 0.2, &e1)?,
        ),
        (
            "vonmises-1".to_string(),
            crate::measures::von_mises(grid, 1.0, &[])?,
        ),
        (
            "vonmises-4".to_string(),
            crate::measures::von_mises(grid, 4.0, &[])?,
        ),
        (
            "two-bump".to_string(),
            crate::measures::two_bump(grid, 2.0)?,
        ),
    ])
}

/// Greedily groups solutions that coincide modulo translation, returning
/// the indices of one representative per class.
///
/// The underlying scan is over whole-node shifts, which resolves
/// node-aligned translates exactly; for families with a continuous
/// translation symmetry the alignment error is up to half a grid cell, so
/// `tol` should be at least the grid spacing in that situation.
pub fn distinct_solutions(solutions: &[StationarySolution], tol: f64) -> Result<Vec<usize>> {
    let mut representatives: Vec<usize> = Vec::new();
    'outer: for (i, sol) in solutions.iter().enumerate() {
        for &rep in &representatives {
            if translation_invariant_distance(&sol.m, &solutions[rep].m)? <= tol {
                continue 'outer;
            }
        }
        representatives.push(i);
    }
    Ok(representatives)
}
