//! The time-dependent game on a finite horizon.
//!
//! Discretizes the coupled system
//!
//! ```text
//! -∂_t u + ρu - νΔu + ½|∇u|² = f(x, μ_t)      (backward, with terminal u_T)
//!  ∂_t μ - νΔμ - ∇·(μ ∇u)    = 0               (forward, with initial μ₀)
//! ```
//!
//! by first-order IMEX marching in time and spectral operators in space:
//! the stiff linear part is implicit (a diagonal solve in frequency space),
//! the Hamiltonian and drift terms explicit. The coupling is resolved by a
//! damped fixed-point iteration on the density flow, with the cost flow
//! recomputed backward from the current density flow each round. Mass is
//! conserved exactly by construction (the drift term has zero mean), and
//! negative undershoots are clipped and accounted for.

use crate::coupling::{interaction_cost, FourierKernel, ModelParams};
use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid, VectorField};
use crate::measures::Density;
use crate::stationary::{fixed_point_distance, solve_stationary_hjb};
use serde::{Deserialize, Serialize};

/// Uniform time mesh on [0, T] with `steps` intervals, so `steps + 1` grid
/// points t_i = i·dt.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeMesh {
    t_final: f64,
    steps: usize,
}

impl TimeMesh {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::NonPositive {
                name: "t_final",
                value: t_final,
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter(
                "time mesh needs at least one step".to_string(),
            ));
        }
        Ok(Self { t_final, steps })
    }

    #[must_use]
    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    #[must_use]
    pub fn steps(&self) -> usize {
        self.steps
    }

    #[must_use]
    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    #[must_use]
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }
}

/// Largest stable time step for the IMEX scheme: a quarter advective CFL
/// against the a-priori drift bound ‖∇u‖∞ ≤ ‖∇f‖∞/ρ ≤ 2Σ|c_k||k|/ρ, capped
/// by half the discount time scale.
#[must_use]
pub fn time_step_cap(kernel: &FourierKernel, params: &ModelParams, grid: &TorusGrid) -> f64 {
    let drift_bound: f64 = kernel
        .modes()
        .iter()
        .map(|m| {
            let norm = (m.k.iter().map(|&ki| (ki * ki) as f64).sum::<f64>()).sqrt();
            2.0 * m.c.abs() * norm
        })
        .sum::<f64>()
        / params.rho();
    let advective = 0.25 * grid.h() / (1.0 + drift_bound);
    advective.min(0.5 / params.rho())
}

/// What pins down the cost at the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TerminalCondition {
    /// u(T, ·) = 0.
    Zero,
    /// u(T, ·) solves the stationary cost equation against the terminal
    /// density, the natural choice when the flow is expected to settle.
    Stationary,
}

/// Tolerances and budgets for the coupled solve.
#[derive(Clone, Copy, Debug)]
pub struct EvolveConfig {
    /// Convergence threshold for the density-flow fixed point, measured as
    /// the sup over time of the per-slice distance (W1 on the circle).
    pub tol: f64,
    /// Fixed-point iteration budget.
    pub max_picard: usize,
    /// Damping of the density-flow update.
    pub damping: f64,
    /// Tolerance of the terminal stationary cost solve.
    pub tol_pde: f64,
    /// Iteration budget of the terminal stationary cost solve.
    pub max_inner: usize,
    /// Heat mollification applied once to the initial density, making rough
    /// inputs spectrally benign. Set to 0 to disable.
    pub initial_smoothing: f64,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_picard: 200,
            damping: 0.5,
            tol_pde: 1e-9,
            max_inner: 500,
            initial_smoothing: 1e-4,
        }
    }
}

/// One round of the density-flow fixed point.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct PicardRecord {
    pub iter: usize,
    /// sup over time slices of the distance between the current flow and
    /// its best response.
    pub gap: f64,
}

/// A solved finite-horizon game: cost and density at every mesh time.
#[derive(Clone, Debug)]
pub struct MfgSolution {
    pub mesh: TimeMesh,
    pub u_flow: Vec<ScalarField>,
    pub m_flow: Vec<Density>,
    pub picard_iterations: usize,
    pub history: Vec<PicardRecord>,
    /// Largest mass clipped away at any single forward step.
    pub max_clipped_mass: f64,
}

/// Sup-norm ceiling beyond which the backward march is declared divergent.
const BLOW_UP_CEILING: f64 = 1e6;

/// Largest tolerated clipped mass per forward step.
const CLIPPING_CEILING: f64 = 1e-6;

/// Marches the cost equation backward from `u_terminal` against a frozen
/// density flow (`m_flow[i]` at time t_i, one per mesh point). Each step
/// solves the linear implicit part exactly in frequency space:
///
/// ```text
/// û_i = [û_{i+1} + dt (f̂_i - (½|∇u_{i+1}|²)^)] / (1 + dt(ρ + ν|k|²)).
/// ```
pub fn solve_hjb_backward(
    kernel: &FourierKernel,
    params: &ModelParams,
    mesh: &TimeMesh,
    m_flow: &[Density],
    u_terminal: &ScalarField,
) -> Result<Vec<ScalarField>> {
    if m_flow.len() != mesh.steps() + 1 {
        return Err(Error::LengthMismatch {
            got: m_flow.len(),
            expected: mesh.steps() + 1,
        });
    }
    let dt = mesh.dt();
    let (rho, nu) = (params.rho(), params.nu());
    let mut flow = vec![u_terminal.clone(); mesh.steps() + 1];
    for i in (0..mesh.steps()).rev() {
        let ahead = &flow[i + 1];
        let f = interaction_cost(kernel, &m_flow[i])?;
        let grad_sq = ahead.gradient().magnitude_squared();
        let explicit = ahead.zip_with(&f, |uv, fv| uv + dt * fv).zip_with(
            &grad_sq,
            |acc, g| acc - dt * 0.5 * g,
        );
        // (1 + dt·ρ + dt·ν|k|²) x = explicit, i.e. a resolvent in disguise.
        let updated = explicit.resolvent(1.0 + dt * rho, dt * nu);
        let sup = updated.sup_norm();
        if !sup.is_finite() || sup > BLOW_UP_CEILING {
            return Err(Error::BlowUp { step: i, sup });
        }
        flow[i] = updated;
    }
    Ok(flow)
}

/// Result of one forward density march.
#[derive(Clone, Debug)]
pub struct ForwardMarch {
    pub densities: Vec<Density>,
    /// Largest mass clipped at a single step.
    pub max_clipped_mass: f64,
    /// Largest deviation of the raw (pre-repair) mass from 1 at any step;
    /// zero-mean drift makes this round-off sized.
    pub max_mass_drift: f64,
}

/// Marches the density equation forward from `m0` against a frozen cost
/// flow, implicit diffusion and explicit drift:
///
/// ```text
/// m̂_{i+1} = [m̂_i + dt (∇·(m_i ∇u_i))^] / (1 + dt·ν|k|²).
/// ```
pub fn solve_fp_forward(
    params: &ModelParams,
    mesh: &TimeMesh,
    u_flow: &[ScalarField],
    m0: &Density,
) -> Result<ForwardMarch> {
    if u_flow.len() != mesh.steps() + 1 {
        return Err(Error::LengthMismatch {
            got: u_flow.len(),
            expected: mesh.steps() + 1,
        });
    }
    let dt = mesh.dt();
    let nu = params.nu();
    let grid = m0.grid().clone();
    let cell = grid.cell_volume();
    let mut densities = Vec::with_capacity(mesh.steps() + 1);
    densities.push(m0.clone());
    let mut max_clipped = 0.0f64;
    let mut max_drift = 0.0f64;
    for i in 0..mesh.steps() {
        let current = &densities[i];
        let grad_u = u_flow[i].gradient();
        let mut flux = Vec::with_capacity(grid.dim());
        for component in grad_u.components() {
            flux.push(component.zip_with(current.field(), |g, mv| g * mv));
        }
        let drift = VectorField::new(flux)?.divergence();
        let explicit = current.field().zip_with(&drift, |mv, dv| mv + dt * dv);
        let raw = explicit.resolvent(1.0, dt * nu);
        let mass: f64 = raw.values().iter().sum::<f64>() * cell;
        if !mass.is_finite() {
            return Err(Error::BlowUp {
                step: i,
                sup: f64::NAN,
            });
        }
        max_drift = max_drift.max((mass - 1.0).abs());
        let clipped: f64 = raw
            .values()
            .iter()
            .map(|&v| (-v).max(0.0))
            .sum::<f64>()
            * cell;
        if clipped > CLIPPING_CEILING {
            return Err(Error::ExcessiveClipping { step: i, clipped });
        }
        max_clipped = max_clipped.max(clipped);
        densities.push(Density::from_solver_output(raw)?);
    }
    Ok(ForwardMarch {
        densities,
        max_clipped_mass: max_clipped,
        max_mass_drift: max_drift,
    })
}

/// Solves the coupled system by damped fixed-point iteration on the density
/// flow. Each round recomputes the terminal cost (per `terminal`), marches
/// the cost backward against the current flow, the density forward against
/// that cost, and blends. Converged when the undamped response flow is
/// within `config.tol` of the current flow, uniformly in time.
pub fn solve_mfg(
    kernel: &FourierKernel,
    params: &ModelParams,
    mesh: &TimeMesh,
    m0: &Density,
    terminal: TerminalCondition,
    config: &EvolveConfig,
) -> Result<MfgSolution> {
    let grid = m0.grid().clone();
    let dt = mesh.dt();
    let cap = time_step_cap(kernel, params, &grid);
    if dt > cap {
        return Err(Error::TimeStepTooLarge { dt, cap });
    }
    let start = if config.initial_smoothing > 0.0 {
        m0.heat_evolve(config.initial_smoothing)?
    } else {
        m0.clone()
    };
    let slices = mesh.steps() + 1;
    let mut m_flow: Vec<Density> = vec![start.clone(); slices];
    let mut history = Vec::new();
    let mut delta = config.damping;
    let mut previous_gap = f64::INFINITY;
    let mut shrink_streak = 0usize;
    let mut growth_streak = 0usize;
    for iter in 0..config.max_picard {
        let u_terminal = match terminal {
            TerminalCondition::Zero => ScalarField::constant(grid.clone(), 0.0)?,
            TerminalCondition::Stationary => {
                let f_terminal = interaction_cost(kernel, &m_flow[slices - 1])?;
                solve_stationary_hjb(params, &f_terminal, config.tol_pde, config.max_inner)?
            }
        };
        let u_flow = solve_hjb_backward(kernel, params, mesh, &m_flow, &u_terminal)?;
        let march = solve_fp_forward(params, mesh, &u_flow, &start)?;
        let mut gap = 0.0f64;
        for (new, old) in march.densities.iter().zip(&m_flow) {
            gap = gap.max(fixed_point_distance(new, old)?);
        }
        history.push(PicardRecord { iter, gap });
        if gap <= config.tol {
            return Ok(MfgSolution {
                mesh: *mesh,
                u_flow,
                m_flow: march.densities,
                picard_iterations: iter + 1,
                history,
                max_clipped_mass: march.max_clipped_mass,
            });
        }
        // Adapt the damping to the observed contraction: sustained progress
        // ramps toward the undamped map, sustained growth backs off.
        if gap < previous_gap {
            shrink_streak += 1;
            growth_streak = 0;
            if shrink_streak >= 3 {
                delta = (1.5 * delta).min(1.0);
                shrink_streak = 0;
            }
        } else {
            growth_streak += 1;
            shrink_streak = 0;
            if growth_streak >= 2 {
                delta = (0.5 * delta).max(1.0 / 64.0);
                growth_streak = 0;
            }
        }
        previous_gap = gap;
        for (slot, response) in m_flow.iter_mut().zip(march.densities) {
            let blended = slot
                .field()
                .zip_with(response.field(), |a, b| (1.0 - delta) * a + delta * b);
            *slot = Density::new(blended)?;
        }
    }
    Err(Error::DidNotConverge {
        what: "density-flow fixed point",
        iterations: config.max_picard,
        residual: history.last().map_or(f64::NAN, |r| r.gap),
    })
}
