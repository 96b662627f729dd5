//! Numerical core for discounted potential mean-field games on the torus.
//!
//! The crate solves the coupled backward Hamilton–Jacobi–Bellman /
//! forward Fokker–Planck system
//!
//! ```text
//!   -∂_t u + ρ u - ν Δu + ½|∇u|² = f(x, μ_t)
//!    ∂_t μ - ν Δμ - ∇·(μ ∇u)    = 0
//! ```
//!
//! on [0, 2π)^d (d = 1 or 2) with Fourier-kernel couplings
//! f(x, μ) = 2(ψ ∗ μ)(x), together with its stationary counterpart, and
//! instruments every trajectory with the free-energy/Lyapunov diagnostics
//! that certify long-time convergence and uniqueness of equilibria:
//!
//! * [`grid`]       — torus grids and the pseudospectral calculus;
//! * [`measures`]   — probability densities, entropy, Fisher information,
//!   Fourier moments, circular Wasserstein-1, bounded-Lipschitz distance;
//! * [`coupling`]   — interaction kernels, free energy and its linear
//!   derivative, monotonicity and heat-flow uniqueness criteria;
//! * [`stationary`] — multi-start damped-Picard solver for stationary
//!   equilibria (Gibbs density ↔ stationary HJB);
//! * [`evolve`]     — IMEX time-stepper for the coupled system;
//! * [`diagnostics`] — Lyapunov functional, relative-entropy production,
//!   shift bounds, flattening reports;
//! * [`oracle`]     — self-contained checks of the analytic inequalities the
//!   other modules rely on, runnable as a verification suite;
//! * [`io`]         — binary field snapshots, CSV/JSON import and export.

pub mod coupling;
pub mod diagnostics;
pub mod error;
pub mod evolve;
pub mod grid;
pub mod io;
pub mod measures;
pub mod oracle;
pub mod stationary;

pub use error::{Error, Result};
pub use grid::{FftWorkspace, ScalarField, TorusGrid, VectorField};
