//! Probability densities on the torus and the functionals the solvers and
//! diagnostics are built from: entropy, Fisher information, Fourier moments,
//! the exact circular Wasserstein-1 distance, and a bounded-Lipschitz
//! distance computed by linear programming.
//!
//! A [`Density`] is a nonnegative nodal field with unit mass (h^d·Σ m_j = 1,
//! re-scaled to machine-exact 1 on construction). Logarithmic functionals
//! need strict positivity; densities coming out of solvers are clamped at a
//! positivity floor and renormalized, while user-supplied densities that sit
//! at the floor on more than 1% of nodes are rejected rather than repaired.

use crate::error::{Error, Result};
use crate::grid::{ScalarField, TorusGrid};
use minilp::{ComparisonOp, OptimizationDirection, Problem};

/// Nodal values at or below this are treated as "zero" for logarithmic
/// functionals; solver output is clamped here.
pub const POSITIVITY_FLOOR: f64 = 1e-12;

/// Acceptance tolerance on |mass - 1| for user-supplied densities.
pub const MASS_TOLERANCE: f64 = 1e-10;

/// Largest fraction of floor-level nodes tolerated when evaluating
/// logarithmic functionals of user-supplied data.
pub const MAX_FLOOR_FRACTION: f64 = 0.01;

/// Node-count cap for the bounded-Lipschitz linear program.
pub const LP_NODE_CAP: usize = 4096;

// ── Density ─────────────────────────────────────────────────────────────────

/// A probability density on a torus grid: nonnegative nodal values with
/// h^d · Σ m_j = 1 exactly (constructors re-scale after validating).
#[derive(Clone, Debug, PartialEq)]
pub struct Density {
    field: ScalarField,
    strictly_positive: bool,
}

impl Density {
    /// Validates user-supplied nodal values: every node nonnegative and the
    /// quadrature mass within [`MASS_TOLERANCE`] of 1. The accepted values
    /// are re-scaled to unit mass so downstream identities hold exactly.
    pub fn new(field: ScalarField) -> Result<Self> {
        if let Some((index, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| **v < 0.0)
        {
            return Err(Error::NegativeDensity { index, value });
        }
        let mass = field.integrate();
        if (mass - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::NotNormalized {
                mass,
                tol: MASS_TOLERANCE,
            });
        }
        Ok(Self::renormalized(field))
    }

    /// Accepts a nonnegative field of arbitrary positive mass and scales it
    /// to a probability density. Intended for analytic shapes (`exp(β cos)`
    /// and friends) where the normalizer is easier computed than written.
    pub fn from_unnormalized(field: ScalarField) -> Result<Self> {
        if let Some((index, &value)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, v)| **v < 0.0)
        {
            return Err(Error::NegativeDensity { index, value });
        }
        let mass = field.integrate();
        if !(mass > 0.0) {
            return Err(Error::NotNormalized {
                mass,
                tol: MASS_TOLERANCE,
            });
        }
        Ok(Self::renormalized(field))
    }

    /// Repairs solver output: clamps every node to at least
    /// [`POSITIVITY_FLOOR`], then renormalizes. Use only for fields produced
    /// by our own schemes, whose undershoots are round-off sized; user input
    /// goes through [`Density::new`]. A density that needed clamping is not
    /// strictly positive even though renormalization nudges the floor nodes.
    pub fn from_solver_output(field: ScalarField) -> Result<Self> {
        let touched_floor = field.values().iter().any(|&v| v <= POSITIVITY_FLOOR);
        let clamped = field.map(|v| v.max(POSITIVITY_FLOOR));
        let mass = clamped.integrate();
        if !mass.is_finite() || mass <= 0.0 {
            return Err(Error::NotNormalized {
                mass,
                tol: MASS_TOLERANCE,
            });
        }
        let mut density = Self::renormalized(clamped);
        density.strictly_positive &= !touched_floor;
        Ok(density)
    }

    fn renormalized(field: ScalarField) -> Self {
        let mass = field.integrate();
        let scaled = field.map(|v| v / mass);
        let strictly_positive = scaled.values().iter().all(|&v| v > POSITIVITY_FLOOR);
        Self {
            field: scaled,
            strictly_positive,
        }
    }

    /// The uniform density (2π)^{-d}.
    #[must_use]
    pub fn uniform(grid: &TorusGrid) -> Self {
        let c = 1.0 / grid.volume();
        Self {
            field: ScalarField::constant(grid.clone(), c).expect("constant is finite"),
            strictly_positive: true,
        }
    }

    #[must_use]
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    #[must_use]
    pub fn grid(&self) -> &TorusGrid {
        self.field.grid()
    }

    #[must_use]
    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    /// Quadrature mass; 1 up to round-off by construction.
    #[must_use]
    pub fn mass(&self) -> f64 {
        self.field.integrate()
    }

    /// True when every node exceeds the positivity floor, so logarithmic
    /// functionals evaluate without clamping.
    #[must_use]
    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    /// Exact heat-semigroup evolution of the density by time `t ≥ 0`.
    /// Spectral truncation can undershoot zero by round-off, so the result
    /// goes through the solver-output repair path.
    pub fn heat_evolve(&self, t: f64) -> Result<Self> {
        Self::from_solver_output(self.field.heat_evolve(t)?)
    }

    /// Density translated by `shift` whole nodes along each axis
    /// (periodically). Exact: values are permuted, not interpolated.
    #[must_use]
    pub fn circular_shift(&self, shift: &[usize]) -> Self {
        let grid = self.grid().clone();
        let n = grid.n();
        let vals = self.values();
        let mut out = vec![0.0; vals.len()];
        match grid.dim() {
            1 => {
                let s = shift[0] % n;
                for j in 0..n {
                    out[(j + s) % n] = vals[j];
                }
            }
            _ => {
                let s0 = shift[0] % n;
                let s1 = shift.get(1).copied().unwrap_or(0) % n;
                for j0 in 0..n {
                    for j1 in 0..n {
                        out[((j0 + s0) % n) * n + ((j1 + s1) % n)] = vals[j0 * n + j1];
                    }
                }
            }
        }
        Self {
            field: ScalarField::from_values_unchecked(grid, out),
            strictly_positive: self.strictly_positive,
        }
    }

    /// Values clamped at the floor for logarithmic evaluation, after the
    /// degeneracy gate: more than [`MAX_FLOOR_FRACTION`] of nodes at or
    /// below the floor means the functional is meaningless and is refused.
    fn log_safe_values(&self) -> Result<Vec<f64>> {
        let vals = self.values();
        if self.strictly_positive {
            return Ok(vals.to_vec());
        }
        let at_floor = vals.iter().filter(|&&v| v <= POSITIVITY_FLOOR).count();
        let fraction = at_floor as f64 / vals.len() as f64;
        if fraction > MAX_FLOOR_FRACTION {
            return Err(Error::DegenerateDensity {
                fraction: fraction * 100.0,
            });
        }
        let clamped: Vec<f64> = vals.iter().map(|&v| v.max(POSITIVITY_FLOOR)).collect();
        let mass: f64 = clamped.iter().sum::<f64>() * self.grid().cell_volume();
        Ok(clamped.into_iter().map(|v| v / mass).collect())
    }
}

// ── Canonical density families ──────────────────────────────────────────────

/// The single-mode perturbation of the uniform density,
/// m(x) = (2π)^{-d} (1 + 2ε cos(k·x)), admissible for ε ∈ (0, 1/4).
///
/// Its Fourier moment at k is exactly ε and its Fisher information has the
/// closed form |k|²(1 - √(1-4ε²)), which makes the family the standard
/// sharpness probe for mode-wise Fisher bounds.
pub fn cosine_perturbed_uniform(grid: &TorusGrid, eps: f64, k: &[i64]) -> Result<Density> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::PerturbationOutOfRange { eps });
    }
    check_mode(grid, k)?;
    let kk: Vec<i64> = k.to_vec();
    let norm = 1.0 / grid.volume();
    let field = ScalarField::from_fn(grid.clone(), |x| {
        let phase: f64 = x
            .iter()
            .zip(&kk)
            .map(|(&xi, &ki)| ki as f64 * xi)
            .sum();
        norm * (1.0 + 2.0 * eps * phase.cos())
    })?;
    Density::new(field)
}

/// Von Mises-type bump exp(β Σ_i cos(x_i - c_i))/Z with concentration
/// β ≥ 0 centered at `center` (defaults to the origin when empty).
pub fn von_mises(grid: &TorusGrid, beta: f64, center: &[f64]) -> Result<Density> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "von Mises concentration must be finite and nonnegative, got {beta}"
        )));
    }
    let c: Vec<f64> = (0..grid.dim())
        .map(|i| center.get(i).copied().unwrap_or(0.0))
        .collect();
    let field = ScalarField::from_fn(grid.clone(), |x| {
        let s: f64 = x.iter().zip(&c).map(|(&xi, &ci)| (xi - ci).cos()).sum();
        (beta * s).exp()
    })?;
    Density::from_unnormalized(field)
}

/// Equal mixture of two antipodal von Mises bumps (centers 0 and π along
/// every axis), a deliberately bimodal solver seed.
pub fn two_bump(grid: &TorusGrid, beta: f64) -> Result<Density> {
    let pi_center = vec![std::f64::consts::PI; grid.dim()];
    let a = von_mises(grid, beta, &[])?;
    let b = von_mises(grid, beta, &pi_center)?;
    let mixed = a.field().zip_with(b.field(), |x, y| 0.5 * (x + y));
    Density::new(mixed)
}

// ── Scalar functionals ──────────────────────────────────────────────────────

/// Entropy Ent(m) = ∫ m log m dx.
///
/// Bounded below by -(2π)^d (from x log x ≥ x - 1) and minimized by the
/// uniform density at -d·log 2π.
pub fn entropy(m: &Density) -> Result<f64> {
    let vals = m.log_safe_values()?;
    let cell = m.grid().cell_volume();
    Ok(cell * vals.iter().map(|&v| v * v.ln()).sum::<f64>())
}

/// Fisher information I(m) = ∫ |∇m|²/m dx with a spectral gradient.
pub fn fisher_information(m: &Density) -> Result<f64> {
    let vals = m.log_safe_values()?;
    let grad = m.field().gradient();
    let cell = m.grid().cell_volume();
    let mut total = 0.0;
    for comp in grad.components() {
        for (&g, &v) in comp.values().iter().zip(&vals) {
            total += g * g / v;
        }
    }
    Ok(cell * total)
}

/// Fourier moment of a density at mode k: a = ∫cos(k·x) dm, b = ∫sin(k·x) dm
/// and the rotation-invariant amplitude q = a² + b² ∈ [0, 1].
#[derive(Clone, Debug, PartialEq)]
pub struct FourierMoment {
    pub k: Vec<i64>,
    pub a: f64,
    pub b: f64,
}

impl FourierMoment {
    /// Squared amplitude q_k = a_k² + b_k², invariant under rotations of the
    /// torus and bounded by 1 for probability densities.
    #[must_use]
    pub fn q(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

/// Quadrature Fourier moment of `m` at mode `k` (all |k_i| strictly below
/// the grid Nyquist frequency).
pub fn fourier_moment(m: &Density, k: &[i64]) -> Result<FourierMoment> {
    let grid = m.grid();
    check_mode(grid, k)?;
    let cell = grid.cell_volume();
    let mut x = [0.0f64; 2];
    let (mut a, mut b) = (0.0, 0.0);
    for (flat, &v) in m.values().iter().enumerate() {
        grid.coords(flat, &mut x);
        let phase: f64 = k
            .iter()
            .zip(x.iter())
            .map(|(&ki, &xi)| ki as f64 * xi)
            .sum();
        a += phase.cos() * v;
        b += phase.sin() * v;
    }
    Ok(FourierMoment {
        k: k.to_vec(),
        a: a * cell,
        b: b * cell,
    })
}

fn check_mode(grid: &TorusGrid, k: &[i64]) -> Result<()> {
    if k.len() != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "mode {:?} has {} components, grid dimension is {}",
            k,
            k.len(),
            grid.dim()
        )));
    }
    let nyquist = (grid.n() / 2) as i64;
    if k.iter().any(|&ki| ki.abs() >= nyquist) {
        return Err(Error::ModeAboveNyquist {
            k: k.to_vec(),
            n: grid.n(),
        });
    }
    Ok(())
}

// ── Wasserstein-1 on the circle ─────────────────────────────────────────────

/// Exact Wasserstein-1 distance between two densities on the circle (d = 1),
/// viewing each as the atomic measure of its nodal masses.
///
/// Uses the classical representation W1 = min_c ∫|F₁ - F₂ - c|: the
/// cumulative difference is accumulated nodewise (each node carries mass
/// m_j·h on a cell of width h) and the optimal c is the weighted median of
/// the cumulative values — here a plain median, all cells having equal
/// width.
pub fn wasserstein1_circle(m1: &Density, m2: &Density) -> Result<f64> {
    let grid = m1.grid();
    assert_eq!(grid, m2.grid(), "densities live on different grids");
    if grid.dim() != 1 {
        return Err(Error::MetricUnsupported {
            metric: "wasserstein1_circle",
            supported: 1,
            got: grid.dim(),
        });
    }
    let h = grid.h();
    let n = grid.n();
    let mut cum = Vec::with_capacity(n);
    let mut acc = 0.0;
    for (&a, &b) in m1.values().iter().zip(m2.values()) {
        acc += (a - b) * h;
        cum.push(acc);
    }
    let mut sorted = cum.clone();
    sorted.sort_unstable_by(|a, b| a.total_cmp(b));
    let c = 0.5 * (sorted[(n - 1) / 2] + sorted[n / 2]);
    Ok(h * cum.iter().map(|&d| (d - c).abs()).sum::<f64>())
}

/// Smallest W1 distance between `m1` and any whole-node circular shift of
/// `m2` — the metric used to identify stationary solutions that differ only
/// by the torus's translation symmetry. d = 1 only.
pub fn wasserstein1_circle_mod_shift(m1: &Density, m2: &Density) -> Result<f64> {
    let n = m1.grid().n();
    let mut best = f64::INFINITY;
    for s in 0..n {
        let shifted = m2.circular_shift(&[s]);
        best = best.min(wasserstein1_circle(m1, &shifted)?);
    }
    Ok(best)
}

/// Total-variation distance ∫|m1 - m2| dx between two densities on the
/// same grid. Works in every dimension and dominates the
/// bounded-Lipschitz distance.
#[must_use]
pub fn total_variation(m1: &Density, m2: &Density) -> f64 {
    assert_eq!(m1.grid(), m2.grid(), "densities live on different grids");
    m1.values()
        .iter()
        .zip(m2.values())
        .map(|(&a, &b)| (a - b).abs())
        .sum::<f64>()
        * m1.grid().cell_volume()
}

/// Distance between densities modulo whole-node translations: W1 on the
/// circle, total variation on the 2-torus (where the shift scan is over
/// n² offsets). Used to decide whether two solver outputs are the same
/// solution up to the torus's translation symmetry.
pub fn translation_invariant_distance(m1: &Density, m2: &Density) -> Result<f64> {
    let grid = m1.grid();
    if grid.dim() == 1 {
        return wasserstein1_circle_mod_shift(m1, m2);
    }
    let n = grid.n();
    let mut best = f64::INFINITY;
    for s0 in 0..n {
        for s1 in 0..n {
            let shifted = m2.circular_shift(&[s0, s1]);
            best = best.min(total_variation(m1, &shifted));
        }
    }
    Ok(best)
}

/// Natural logarithm of the density as a field, evaluated on the
/// floor-clamped values; fails on densities degenerate beyond repair.
/// The building block for the adjusted cost q = u + ν log m and the free
/// energy's linear derivative.
pub fn log_density(m: &Density) -> Result<ScalarField> {
    let vals = m.log_safe_values()?;
    ScalarField::new(m.grid().clone(), vals.into_iter().map(f64::ln).collect())
}

// ── Bounded-Lipschitz distance ──────────────────────────────────────────────

/// Bounded-Lipschitz (flat-metric) distance
/// d_BL(μ, ν) = sup { ∫f d(μ-ν) : ‖f‖_∞ + Lip(f) ≤ 1 }
/// restricted to grid functions, solved as a linear program.
///
/// Variables are the nodal test-function values f_j and a split level
/// s ∈ [0, 1] with |f_j| ≤ s and |f_j - f_{j'}| ≤ (1-s)·h for grid-adjacent
/// nodes (piecewise-linear interpolation realizes the Lipschitz bound along
/// grid geodesics). Always ≤ the Wasserstein-1 distance. Works in d = 1 and
/// d = 2 but is capped at [`LP_NODE_CAP`] nodes.
pub fn bounded_lipschitz_distance(m1: &Density, m2: &Density) -> Result<f64> {
    let grid = m1.grid();
    assert_eq!(grid, m2.grid(), "densities live on different grids");
    let nodes = grid.node_count();
    if nodes > LP_NODE_CAP {
        return Err(Error::LpTooLarge {
            nodes,
            max: LP_NODE_CAP,
        });
    }
    let h = grid.h();
    let cell = grid.cell_volume();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let f: Vec<_> = m1
        .values()
        .iter()
        .zip(m2.values())
        .map(|(&a, &b)| problem.add_var((a - b) * cell, (-1.0, 1.0)))
        .collect();
    let s = problem.add_var(0.0, (0.0, 1.0));
    for &fj in &f {
        // |f_j| ≤ s
        problem.add_constraint(&[(fj, 1.0), (s, -1.0)], ComparisonOp::Le, 0.0);
        problem.add_constraint(&[(fj, 1.0), (s, 1.0)], ComparisonOp::Ge, 0.0);
    }
    let mut lip = |i: usize, j: usize| {
        // |f_i - f_j| ≤ (1 - s)·h for neighbors at geodesic distance h
        problem.add_constraint(&[(f[i], 1.0), (f[j], -1.0), (s, h)], ComparisonOp::Le, h);
        problem.add_constraint(&[(f[j], 1.0), (f[i], -1.0), (s, h)], ComparisonOp::Le, h);
    };
    let n = grid.n();
    match grid.dim() {
        1 => {
            for j in 0..n {
                lip(j, (j + 1) % n);
            }
        }
        _ => {
            for j0 in 0..n {
                for j1 in 0..n {
                    let here = j0 * n + j1;
                    lip(here, j0 * n + (j1 + 1) % n);
                    lip(here, ((j0 + 1) % n) * n + j1);
                }
            }
        }
    }
    let solution = problem
        .solve()
        .map_err(|e| Error::LpFailed(e.to_string()))?;
    // Round-off in the simplex can leave a -1e-15 objective on equal inputs.
    Ok(solution.objective().max(0.0))
}

// ── Tests ───────────────────────────────────────────────────────────────────

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    /// (1 - δ)·(1 + cos x)/(2π) + δ·uniform — the regularized single-bump
    /// density used by several reference values.
    fn regularized_bump(grid: &TorusGrid, delta: f64) -> Density {
        let f = ScalarField::from_fn(grid.clone(), |x| {
            (1.0 - delta) * (1.0 + x[0].cos()) / (2.0 * PI) + delta / (2.0 * PI)
        })
        .unwrap();
        Density::new(f).unwrap()
    }

    #[test]
    fn density_validation_rejects_bad_input() {
        let g = grid1(32);
        let negative = ScalarField::from_fn(g.clone(), |x| x[0].cos() / (2.0 * PI)).unwrap();
        assert!(matches!(
            Density::new(negative),
            Err(Error::NegativeDensity { .. })
        ));
        let wrong_mass = ScalarField::constant(g.clone(), 1.0).unwrap();
        assert!(matches!(
            Density::new(wrong_mass),
            Err(Error::NotNormalized { .. })
        ));
        let ok = ScalarField::constant(g, 1.0 / (2.0 * PI)).unwrap();
        let d = Density::new(ok).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-15);
        assert!(d.is_strictly_positive());
    }

    #[test]
    fn solver_output_is_clamped_and_renormalized() {
        let g = grid1(32);
        let with_undershoot = ScalarField::from_fn(g, |x| {
            (1.0 + x[0].cos()) / (2.0 * PI) - 1e-9
        })
        .unwrap();
        let d = Density::from_solver_output(with_undershoot).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-14);
        assert!(d.values().iter().all(|&v| v >= POSITIVITY_FLOOR));
        assert!(!d.is_strictly_positive(), "clamped nodes sit at the floor");
    }

    #[test]
    fn entropy_of_uniform_is_the_minimum() {
        for (dim, n) in [(1usize, 64usize), (2, 16)] {
            let g = TorusGrid::new(dim, n).unwrap();
            let u = Density::uniform(&g);
            let expected = -(dim as f64) * (2.0 * PI).ln();
            let ent = entropy(&u).unwrap();
            assert!(
                (ent - expected).abs() < 1e-12,
                "uniform entropy {ent} vs {expected}"
            );
            // Paper-level lower bound, much looser than the uniform value.
            assert!(ent >= -g.volume());
        }
    }

    #[test]
    fn entropy_of_cosine_bump_matches_quadrature_oracle() {
        // Oracle: fine-grid quadrature of the closed-form integrand,
        // independent of Density/ScalarField plumbing.
        let delta = 1e-6;
        let oracle = {
            let nf = 1 << 17;
            let hf = 2.0 * PI / nf as f64;
            (0..nf)
                .map(|j| {
                    let x = j as f64 * hf;
                    let m = (1.0 - delta) * (1.0 + x.cos()) / (2.0 * PI) + delta / (2.0 * PI);
                    m * m.ln()
                })
                .sum::<f64>()
                * hf
        };
        // The δ → 0 limit in closed form: 1 - log 2 - log 2π.
        let closed_form = 1.0 - 2.0f64.ln() - (2.0 * PI).ln();
        assert!(
            (oracle - closed_form).abs() < 1e-5,
            "oracle {oracle} vs closed form {closed_form}"
        );
        let ent = entropy(&regularized_bump(&grid1(1024), delta)).unwrap();
        assert!(
            (ent - oracle).abs() < 1e-4,
            "entropy {ent} vs oracle {oracle}"
        );
    }

    #[test]
    fn fisher_information_of_uniform_vanishes() {
        let u = Density::uniform(&grid1(64));
        assert!(fisher_information(&u).unwrap().abs() < 1e-24);
    }

    #[test]
    fn fisher_information_matches_closed_form_for_cosine_family() {
        // I(m_ε) = |k|²(1 - √(1-4ε²)) for m_ε = (1 + 2ε cos(kx))/(2π).
        let g = grid1(128);
        for (eps, k) in [(0.1, 1i64), (0.1, 2), (0.2, 1), (0.05, 3)] {
            let m = cosine_perturbed_uniform(&g, eps, &[k]).unwrap();
            let exact = (k * k) as f64 * (1.0 - (1.0 - 4.0 * eps * eps).sqrt());
            let got = fisher_information(&m).unwrap();
            assert!(
                (got - exact).abs() < 1e-9,
                "eps {eps} k {k}: fisher {got} vs {exact}"
            );
        }
    }

    #[test]
    fn fisher_information_of_touching_bump_approaches_one() {
        // I((1+cos x)/2π) = 1 exactly; the δ-regularized density evaluated
        // on a grid loses h/π of quadrature mass at the near-zero node, so a
        // fine grid is needed for the 1e-3 target.
        let g = grid1(8192);
        let fisher = fisher_information(&regularized_bump(&g, 1e-8)).unwrap();
        assert!((fisher - 1.0).abs() < 1e-3, "fisher {fisher}");
    }

    #[test]
    fn fourier_moments_of_cosine_family_are_exact() {
        let g = grid1(128);
        let m = cosine_perturbed_uniform(&g, 0.1, &[3]).unwrap();
        let at_k = fourier_moment(&m, &[3]).unwrap();
        assert!((at_k.a - 0.1).abs() < 1e-15);
        assert!(at_k.b.abs() < 1e-15);
        assert!((at_k.q() - 0.01).abs() < 1e-15);
        let off_k = fourier_moment(&m, &[2]).unwrap();
        assert!(off_k.q() < 1e-28);
        // A shifted bump moves amplitude between a and b but keeps q.
        let shifted = m.circular_shift(&[17]);
        let sm = fourier_moment(&shifted, &[3]).unwrap();
        assert!((sm.q() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn fourier_moment_amplitude_is_bounded_by_one() {
        let g = grid1(64);
        for beta in [0.5, 2.0, 8.0] {
            let m = von_mises(&g, beta, &[1.0]).unwrap();
            for k in 1..=5i64 {
                let q = fourier_moment(&m, &[k]).unwrap().q();
                assert!((0.0..=1.0 + 1e-12).contains(&q), "q {q}");
            }
        }
    }

    #[test]
    fn fourier_moment_respects_nyquist_guard() {
        let g = grid1(16);
        assert!(fourier_moment(&Density::uniform(&g), &[7]).is_ok());
        assert!(matches!(
            fourier_moment(&Density::uniform(&g), &[8]),
            Err(Error::ModeAboveNyquist { .. })
        ));
    }

    #[test]
    fn cosine_family_rejects_out_of_range_perturbations() {
        let g = grid1(32);
        for eps in [0.0, -0.1, 0.25, 0.3] {
            assert!(matches!(
                cosine_perturbed_uniform(&g, eps, &[1]),
                Err(Error::PerturbationOutOfRange { .. })
            ));
        }
        assert!(cosine_perturbed_uniform(&g, 0.2499, &[1]).is_ok());
    }

    #[test]
    fn degenerate_density_is_rejected_by_log_functionals() {
        // Box density: zero on half the circle — a valid measure, but
        // entropy/Fisher on it would be dominated by the clamping choice.
        let g = grid1(64);
        let norm = 1.0 / PI;
        let field = ScalarField::from_fn(g, |x| if x[0] < PI { norm } else { 0.0 }).unwrap();
        let d = Density::new(field).unwrap();
        assert!(!d.is_strictly_positive());
        assert!(matches!(entropy(&d), Err(Error::DegenerateDensity { .. })));
        assert!(matches!(
            fisher_information(&d),
            Err(Error::DegenerateDensity { .. })
        ));
    }

    // ── W1 ──────────────────────────────────────────────────────────────

    /// Brute-force reference: scan the offset c over every cumulative value
    /// (the minimizer of Σ|D_j - c| is attained at a data point).
    fn w1_c_scan(m1: &Density, m2: &Density) -> f64 {
        let h = m1.grid().h();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for (&a, &b) in m1.values().iter().zip(m2.values()) {
            acc += (a - b) * h;
            cum.push(acc);
        }
        cum.iter()
            .map(|&c| h * cum.iter().map(|&d| (d - c).abs()).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn w1_vanishes_on_identical_densities() {
        let g = grid1(64);
        let m = von_mises(&g, 2.0, &[0.7]).unwrap();
        assert!(wasserstein1_circle(&m, &m).unwrap() <= 1e-12);
    }

    #[test]
    fn w1_of_node_shift_is_bounded_by_shift_length() {
        let g = grid1(128);
        let m = von_mises(&g, 3.0, &[]).unwrap();
        let h = g.h();
        for s in [1usize, 5, 20] {
            let shifted = m.circular_shift(&[s]);
            let d = wasserstein1_circle(&m, &shifted).unwrap();
            assert!(
                d <= s as f64 * h + 1e-12,
                "shift {s}: W1 {d} vs bound {}",
                s as f64 * h
            );
        }
    }

    #[test]
    fn w1_median_offset_matches_brute_force_scan() {
        let g = grid1(256);
        let m1 = regularized_bump(&g, 0.0);
        let m2 = Density::uniform(&g);
        let fast = wasserstein1_circle(&m1, &m2).unwrap();
        let slow = w1_c_scan(&m1, &m2);
        assert!((fast - slow).abs() <= 1e-12, "median {fast} scan {slow}");
        // Asymmetric pair too, where the median is not at zero.
        let m3 = von_mises(&g, 2.0, &[1.3]).unwrap();
        let fast = wasserstein1_circle(&m1, &m3).unwrap();
        let slow = w1_c_scan(&m1, &m3);
        assert!((fast - slow).abs() <= 1e-12);
    }

    #[test]
    fn w1_of_cosine_bump_to_uniform_converges_to_two_over_pi() {
        // Continuum value 2/π (F₁-F₂ = sin x/2π, optimal c = 0, ∫|sin| = 4).
        // The atomic-measure discretization carries an O(h²) = (2/π)h²/12
        // gap, so the tight tolerance belongs to the fine grid.
        let exact = 2.0 / PI;
        let at = |n: usize| {
            let g = grid1(n);
            wasserstein1_circle(&regularized_bump(&g, 0.0), &Density::uniform(&g)).unwrap()
        };
        let coarse = (at(256) - exact).abs();
        let fine = (at(2048) - exact).abs();
        assert!(coarse <= 5e-5, "N=256 gap {coarse}");
        assert!(fine <= 1e-6, "N=2048 gap {fine}");
        // Second-order convergence: refining 8× shrinks the gap ~64×.
        assert!(
            coarse / fine > 40.0,
            "expected O(h²) convergence, got {coarse} -> {fine}"
        );
    }

    #[test]
    fn w1_rejects_two_dimensional_grids() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = Density::uniform(&g);
        assert!(matches!(
            wasserstein1_circle(&u, &u),
            Err(Error::MetricUnsupported { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_w1_is_a_metric(
            c1 in proptest::collection::vec(-0.2f64..0.2, 3),
            c2 in proptest::collection::vec(-0.2f64..0.2, 3),
            c3 in proptest::collection::vec(-0.2f64..0.2, 3),
        ) {
            let g = TorusGrid::new(1, 64).unwrap();
            let mk = |c: &[f64]| {
                let field = ScalarField::from_fn(g.clone(), |x| {
                    let mut v = 1.0;
                    for (i, ci) in c.iter().enumerate() {
                        v += ci * ((i as f64 + 1.0) * x[0]).cos()
                            + 0.5 * ci * ((i as f64 + 1.0) * x[0]).sin();
                    }
                    v / (2.0 * PI)
                })
                .unwrap();
                Density::new(field).unwrap()
            };
            let (a, b, c) = (mk(&c1), mk(&c2), mk(&c3));
            let dab = wasserstein1_circle(&a, &b).unwrap();
            let dba = wasserstein1_circle(&b, &a).unwrap();
            let dac = wasserstein1_circle(&a, &c).unwrap();
            let dcb = wasserstein1_circle(&c, &b).unwrap();
            prop_assert!(dab >= 0.0);
            prop_assert!((dab - dba).abs() <= 1e-14);
            prop_assert!(dab <= dac + dcb + 1e-10, "triangle: {} > {} + {}", dab, dac, dcb);
        }
    }

    // ── Bounded-Lipschitz ───────────────────────────────────────────────

    #[test]
    fn bounded_lipschitz_vanishes_on_identical_densities() {
        let g = grid1(64);
        let m = von_mises(&g, 1.5, &[2.0]).unwrap();
        let d = bounded_lipschitz_distance(&m, &m).unwrap();
        assert!(d.abs() <= 1e-12, "d_BL {d}");
    }

    #[test]
    fn bounded_lipschitz_is_symmetric_and_below_w1() {
        let g = grid1(64);
        let pairs = [
            (regularized_bump(&g, 0.0), Density::uniform(&g)),
            (
                von_mises(&g, 2.0, &[0.0]).unwrap(),
                von_mises(&g, 2.0, &[PI]).unwrap(),
            ),
            (
                cosine_perturbed_uniform(&g, 0.2, &[1]).unwrap(),
                cosine_perturbed_uniform(&g, 0.1, &[2]).unwrap(),
            ),
        ];
        for (a, b) in &pairs {
            let dab = bounded_lipschitz_distance(a, b).unwrap();
            let dba = bounded_lipschitz_distance(b, a).unwrap();
            let w1 = wasserstein1_circle(a, b).unwrap();
            assert!(dab > 0.0);
            assert!((dab - dba).abs() <= 1e-9, "symmetry gap {}", (dab - dba).abs());
            assert!(dab <= w1 + 1e-9, "d_BL {dab} above W1 {w1}");
        }
    }

    #[test]
    fn bounded_lipschitz_works_in_two_dimensions() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = Density::uniform(&g);
        let m = von_mises(&g, 1.0, &[]).unwrap();
        let d = bounded_lipschitz_distance(&m, &u).unwrap();
        assert!(d > 0.0);
        // Total-variation upper bound with ‖f‖_∞ ≤ 1.
        let tv: f64 = m
            .values()
            .iter()
            .zip(u.values())
            .map(|(&a, &b)| (a - b).abs())
            .sum::<f64>()
            * g.cell_volume();
        assert!(d <= tv + 1e-9, "d_BL {d} above TV bound {tv}");
    }

    #[test]
    fn bounded_lipschitz_enforces_node_cap() {
        let g = TorusGrid::new(2, 128).unwrap();
        let u = Density::uniform(&g);
        assert!(matches!(
            bounded_lipschitz_distance(&u, &u),
            Err(Error::LpTooLarge { .. })
        ));
    }

    #[test]
    fn translation_invariant_distance_ignores_shifts() {
        let g = grid1(64);
        let m = von_mises(&g, 2.0, &[0.0]).unwrap();
        let shifted = m.circular_shift(&[13]);
        assert!(wasserstein1_circle(&m, &shifted).unwrap() > 1e-2);
        assert!(translation_invariant_distance(&m, &shifted).unwrap() <= 1e-12);
        let g2 = TorusGrid::new(2, 16).unwrap();
        let m2 = von_mises(&g2, 1.0, &[0.0, 0.0]).unwrap();
        let shifted2 = m2.circular_shift(&[3, 7]);
        assert!(total_variation(&m2, &shifted2) > 1e-2);
        assert!(translation_invariant_distance(&m2, &shifted2).unwrap() <= 1e-12);
        // Genuinely different densities stay apart under the shift scan.
        let other = von_mises(&g, 0.5, &[0.0]).unwrap();
        assert!(translation_invariant_distance(&m, &other).unwrap() > 1e-3);
    }

    #[test]
    fn log_density_inverts_the_exponential() {
        let g = grid1(64);
        let m = von_mises(&g, 1.5, &[0.7]).unwrap();
        let log_m = log_density(&m).unwrap();
        for (&l, &v) in log_m.values().iter().zip(m.values()) {
            assert!((l.exp() - v).abs() < 1e-15);
        }
    }

    #[test]
    fn heat_evolution_of_density_decays_moments_exactly() {
        let g = grid1(128);
        let m = cosine_perturbed_uniform(&g, 0.2, &[2]).unwrap();
        let t = 0.15;
        let evolved = m.heat_evolve(t).unwrap();
        let q0 = fourier_moment(&m, &[2]).unwrap().q();
        let q1 = fourier_moment(&evolved, &[2]).unwrap().q();
        // q_k(η_t) = e^{-2|k|²t} q_k(η_0) under ∂_t η = Δη.
        let expected = (-2.0 * 4.0 * t).exp() * q0;
        assert!((q1 - expected).abs() <= 1e-14, "q {q1} vs {expected}");
        assert!((evolved.mass() - 1.0).abs() <= 1e-14);
    }
}
