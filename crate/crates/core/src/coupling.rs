//! Interaction kernels and the energies they induce.
//!
//! The coupling cost is a convolution against an even, band-limited kernel
//! on the torus,
//!
//! ```text
//! ψ(x) = c₀ + Σ_k c_k cos(k·x),      f(x, μ) = 2 (ψ ∗ μ)(x),
//! ```
//!
//! where the sum runs over canonical modes (one representative per ±k pair).
//! Because ψ is even, f is the linear functional derivative of the quadratic
//! interaction energy
//!
//! ```text
//! ℱ[μ] = ∬ ψ(x - y) dμ(x) dμ(y) = c₀ + Σ_k c_k q_k(μ),
//! ```
//!
//! with q_k the squared Fourier-moment amplitude of μ at mode k. Everything
//! downstream (cost assembly, energies, monotonicity, the heat-flow
//! uniqueness test) reduces to sparse sums over the kernel's modes.

use crate::error::{Error, Result};
use crate::grid::ScalarField;
use crate::measures::{entropy, fisher_information, fourier_moment, Density};
use serde::{Deserialize, Serialize};

/// Discount rate ρ and noise level ν of the control problem, both strictly
/// positive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct ModelParams {
    rho: f64,
    nu: f64,
}

#[derive(Deserialize)]
struct RawParams {
    rho: f64,
    nu: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = Error;
    fn try_from(raw: RawParams) -> Result<Self> {
        ModelParams::new(raw.rho, raw.nu)
    }
}

impl ModelParams {
    pub fn new(rho: f64, nu: f64) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::NonPositive {
                name: "rho",
                value: rho,
            });
        }
        if !(nu.is_finite() && nu > 0.0) {
            return Err(Error::NonPositive {
                name: "nu",
                value: nu,
            });
        }
        Ok(Self { rho, nu })
    }

    #[must_use]
    pub fn rho(&self) -> f64 {
        self.rho
    }

    #[must_use]
    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Synchronization threshold 2ν(ρ+ν) of the Kuramoto kernel: below it
    /// the uniform state is the unique equilibrium, above it bump
    /// equilibria appear. Sharp because the Fisher-moment bound it rests on
    /// is saturated by small cosine perturbations.
    #[must_use]
    pub fn kuramoto_critical_coupling(&self) -> f64 {
        2.0 * self.nu * (self.rho + self.nu)
    }
}

/// One canonical kernel mode: a frequency vector and its coefficient. The
/// implicit mirror mode -k carries the same coefficient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMode {
    pub k: Vec<i64>,
    pub c: f64,
}

impl KernelMode {
    fn norm_squared(&self) -> f64 {
        self.k.iter().map(|&ki| (ki * ki) as f64).sum()
    }
}

/// Even band-limited interaction kernel ψ(x) = c₀ + Σ c_k cos(k·x) over
/// canonical modes: k ≥ 1 on the circle, and on the 2-torus k₁ > 0 or
/// (k₁ = 0, k₂ > 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel")]
pub struct FourierKernel {
    dim: usize,
    c0: f64,
    modes: Vec<KernelMode>,
}

#[derive(Deserialize)]
struct RawKernel {
    dim: usize,
    c0: f64,
    modes: Vec<KernelMode>,
}

impl TryFrom<RawKernel> for FourierKernel {
    type Error = Error;
    fn try_from(raw: RawKernel) -> Result<Self> {
        FourierKernel::new(raw.dim, raw.c0, raw.modes)
    }
}

fn is_canonical(k: &[i64]) -> bool {
    match *k {
        [k1] => k1 >= 1,
        [k1, k2] => k1 > 0 || (k1 == 0 && k2 > 0),
        _ => false,
    }
}

impl FourierKernel {
    /// Validates that every mode is canonical for `dim`, listed once, with
    /// finite coefficients.
    pub fn new(dim: usize, c0: f64, modes: Vec<KernelMode>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !c0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "kernel constant must be finite, got {c0}"
            )));
        }
        for (i, mode) in modes.iter().enumerate() {
            if mode.k.len() != dim {
                return Err(Error::InvalidParameter(format!(
                    "kernel mode {:?} has {} components, kernel dimension is {dim}",
                    mode.k,
                    mode.k.len()
                )));
            }
            if !is_canonical(&mode.k) {
                return Err(Error::InvalidParameter(format!(
                    "kernel mode {:?} is not canonical; list one representative \
                     per ±k pair (k ≥ 1 on the circle, lexicographically positive \
                     on the 2-torus)",
                    mode.k
                )));
            }
            if !mode.c.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "coefficient of kernel mode {:?} must be finite, got {}",
                    mode.k, mode.c
                )));
            }
            if modes[..i].iter().any(|m| m.k == mode.k) {
                return Err(Error::DuplicateKernelMode { k: mode.k.clone() });
            }
        }
        Ok(Self { dim, c0, modes })
    }

    /// The zero kernel: no interaction, every energy it induces vanishes.
    #[must_use]
    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            c0: 0.0,
            modes: Vec::new(),
        }
    }

    /// The Kuramoto kernel ψ(x) = (κ/2)(1 - cos x) on the circle, the
    /// standard model of noisy phase synchronization.
    #[must_use]
    pub fn kuramoto(kappa: f64) -> Self {
        assert!(kappa.is_finite(), "coupling strength must be finite");
        Self {
            dim: 1,
            c0: 0.5 * kappa,
            modes: vec![KernelMode {
                k: vec![1],
                c: -0.5 * kappa,
            }],
        }
    }

    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[must_use]
    pub fn c0(&self) -> f64 {
        self.c0
    }

    #[must_use]
    pub fn modes(&self) -> &[KernelMode] {
        &self.modes
    }

    /// Pointwise kernel value ψ(x).
    #[must_use]
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(x.len(), self.dim, "point dimension mismatch");
        let mut v = self.c0;
        for mode in &self.modes {
            let phase: f64 = mode
                .k
                .iter()
                .zip(x)
                .map(|(&ki, &xi)| ki as f64 * xi)
                .sum();
            v += mode.c * phase.cos();
        }
        v
    }

    /// True when the induced coupling is Lasry-Lions monotone,
    /// ∬ f d(μ-ν) d(μ-ν) ≥ 0, which holds exactly when every mode
    /// coefficient is nonnegative (the constant c₀ never matters: it pairs
    /// with a zero-mass difference).
    #[must_use]
    pub fn is_lasry_lions_monotone(&self) -> bool {
        self.modes.iter().all(|m| m.c >= 0.0)
    }

    /// Upper bound Λ = Σ (c_k)₋ on how far the coupling is from monotone:
    /// the sum of negative parts of the mode coefficients. Zero exactly for
    /// monotone kernels; κ/2 for the Kuramoto kernel.
    #[must_use]
    pub fn monotonicity_defect(&self) -> f64 {
        self.modes.iter().map(|m| (-m.c).max(0.0)).sum()
    }
}

/// The coupling cost f(·, μ) = 2(ψ ∗ μ) as a nodal field, assembled from
/// the kernel's Fourier moments of μ:
/// f(x) = 2c₀ + Σ_k 2c_k (a_k cos(k·x) + b_k sin(k·x)).
pub fn interaction_cost(kernel: &FourierKernel, m: &Density) -> Result<ScalarField> {
    let grid = m.grid();
    if kernel.dim != grid.dim() {
        return Err(Error::InvalidParameter(format!(
            "kernel dimension {} does not match grid dimension {}",
            kernel.dim,
            grid.dim()
        )));
    }
    let mut values = vec![2.0 * kernel.c0; grid.node_count()];
    let mut x = [0.0f64; 2];
    for mode in &kernel.modes {
        let moment = fourier_moment(m, &mode.k)?;
        let (ca, cb) = (2.0 * mode.c * moment.a, 2.0 * mode.c * moment.b);
        for (flat, v) in values.iter_mut().enumerate() {
            grid.coords(flat, &mut x);
            let phase: f64 = mode
                .k
                .iter()
                .zip(x.iter())
                .map(|(&ki, &xi)| ki as f64 * xi)
                .sum();
            *v += ca * phase.cos() + cb * phase.sin();
        }
    }
    ScalarField::new(grid.clone(), values)
}

/// Interaction energy ℱ[μ] = ∬ ψ(x-y) dμ dμ = c₀ + Σ_k c_k q_k(μ).
pub fn potential_energy(kernel: &FourierKernel, m: &Density) -> Result<f64> {
    let mut total = kernel.c0;
    for mode in &kernel.modes {
        total += mode.c * fourier_moment(m, &mode.k)?.q();
    }
    Ok(total)
}

/// Free energy Φ[μ] = ρν Ent(μ) + (ν²/2) I(μ) + ℱ[μ], the Lyapunov
/// functional of the potential game. Fails on densities too degenerate for
/// the logarithmic terms.
pub fn free_energy(kernel: &FourierKernel, params: &ModelParams, m: &Density) -> Result<f64> {
    let ent = entropy(m)?;
    let fisher = fisher_information(m)?;
    let potential = potential_energy(kernel, m)?;
    Ok(params.rho() * params.nu() * ent + 0.5 * params.nu() * params.nu() * fisher + potential)
}

/// Outcome of the heat-flow uniqueness test at one density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeatFlowCheck {
    /// Growth rate of the interaction energy along heat flow,
    /// dℱ/dt = -Σ 2 c_k |k|² q_k.
    pub lhs: f64,
    /// Dissipation budget ν(ρ+ν) I(μ) from the entropy and Fisher terms.
    pub rhs: f64,
    /// Whether lhs ≤ rhs (within round-off slack), i.e. whether the free
    /// energy decays through this density along heat flow.
    pub satisfied: bool,
}

/// Evaluates the heat-flow uniqueness criterion at `m`: the free energy
/// decays along ∂_t μ = Δμ as long as
///
/// ```text
/// -Σ_k 2 c_k |k|² q_k(μ)   ≤   ν(ρ+ν) I(μ),
/// ```
///
/// using dEnt/dt = -I, dI/dt ≤ -2I and dℱ/dt = Σ c_k dq_k/dt with
/// dq_k/dt = -2|k|² q_k. When the inequality holds at every density the
/// stationary equilibrium is unique; for the Kuramoto kernel it degrades
/// exactly at κ = 2ν(ρ+ν).
pub fn heat_flow_uniqueness_check(
    kernel: &FourierKernel,
    params: &ModelParams,
    m: &Density,
) -> Result<HeatFlowCheck> {
    let mut lhs = 0.0;
    for mode in &kernel.modes {
        lhs -= 2.0 * mode.c * mode.norm_squared() * fourier_moment(m, &mode.k)?.q();
    }
    let rhs = params.nu() * (params.rho() + params.nu()) * fisher_information(m)?;
    let satisfied = lhs <= rhs + 1e-9 * (1.0 + rhs.abs());
    Ok(HeatFlowCheck {
        lhs,
        rhs,
        satisfied,
    })
}

/// Closed-form versus finite-difference derivative of the interaction
/// energy along heat flow, reported side by side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyDerivativeCheck {
    /// Mode-sum value -Σ_k 2 c_k |k|² q_k(η_t).
    pub analytic: f64,
    /// Second-order finite difference of t ↦ ℱ[η_t] with step 1e-5.
    pub numeric: f64,
}

impl EnergyDerivativeCheck {
    /// Whether the two derivatives agree within `tol·(1+|analytic|)`.
    #[must_use]
    pub fn agrees_within(&self, tol: f64) -> bool {
        (self.analytic - self.numeric).abs() <= tol * (1.0 + self.analytic.abs())
    }
}

/// Step of the finite-difference probe in [`heat_flow_derivative_check`].
const ENERGY_DERIVATIVE_STEP: f64 = 1e-5;

/// Cross-checks the derivative of the interaction energy along the heat
/// semigroup η_t = e^{tΔ}m. Each squared moment decays as
/// q_k(η_t) = e^{-2|k|²t} q_k(m), so
///
/// ```text
/// dℱ(η_t)/dt = -Σ_k 2 c_k |k|² q_k(η_t),
/// ```
///
/// which is compared against a finite difference of `potential_energy`
/// composed with `heat_evolve`: the centered three-point stencil away from
/// t = 0 and the one-sided second-order stencil below one step (negative
/// heat times are ill-posed). Both stencils are O(step²)-accurate.
pub fn heat_flow_derivative_check(
    kernel: &FourierKernel,
    m: &Density,
    t: f64,
) -> Result<EnergyDerivativeCheck> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::NegativeTime { t });
    }
    let evolved = m.heat_evolve(t)?;
    let mut analytic = 0.0;
    for mode in &kernel.modes {
        analytic -= 2.0 * mode.c * mode.norm_squared() * fourier_moment(&evolved, &mode.k)?.q();
    }
    let d = ENERGY_DERIVATIVE_STEP;
    let energy_at = |s: f64| -> Result<f64> { potential_energy(kernel, &m.heat_evolve(s)?) };
    let numeric = if t >= d {
        (energy_at(t + d)? - energy_at(t - d)?) / (2.0 * d)
    } else {
        (-3.0 * energy_at(t)? + 4.0 * energy_at(t + d)? - energy_at(t + 2.0 * d)?) / (2.0 * d)
    };
    Ok(EnergyDerivativeCheck { analytic, numeric })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::measures::{cosine_perturbed_uniform, von_mises};
    use std::f64::consts::PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    /// O(N²) reference: evaluate the convolution and double integral
    /// directly from the kernel's pointwise values. Exact for band-limited
    /// kernels below Nyquist, since trigonometric quadrature is exact.
    fn brute_force_cost(kernel: &FourierKernel, m: &Density) -> Vec<f64> {
        let grid = m.grid();
        let cell = grid.cell_volume();
        let nodes = grid.node_count();
        let mut xi = [0.0f64; 2];
        let mut xj = [0.0f64; 2];
        let mut out = vec![0.0; nodes];
        for (i, o) in out.iter_mut().enumerate() {
            grid.coords(i, &mut xi);
            let mut acc = 0.0;
            for (j, &mj) in m.values().iter().enumerate() {
                grid.coords(j, &mut xj);
                let diff: Vec<f64> = xi.iter().zip(xj.iter()).map(|(a, b)| a - b).collect();
                acc += kernel.evaluate(&diff[..grid.dim()]) * mj;
            }
            *o = 2.0 * acc * cell;
        }
        out
    }

    fn brute_force_energy(kernel: &FourierKernel, m: &Density) -> f64 {
        let cost = brute_force_cost(kernel, m);
        let cell = m.grid().cell_volume();
        0.5 * cost
            .iter()
            .zip(m.values())
            .map(|(&f, &mv)| f * mv)
            .sum::<f64>()
            * cell
    }

    #[test]
    fn params_reject_nonpositive_rates() {
        assert!(ModelParams::new(0.0, 1.0).is_err());
        assert!(ModelParams::new(1.0, -0.5).is_err());
        assert!(ModelParams::new(f64::NAN, 1.0).is_err());
        let p = ModelParams::new(1.0, 1.0).unwrap();
        assert_eq!(p.kuramoto_critical_coupling(), 4.0);
        let p = ModelParams::new(0.5, 2.0).unwrap();
        assert_eq!(p.kuramoto_critical_coupling(), 10.0);
    }

    #[test]
    fn kernel_validation_enforces_canonical_modes() {
        let mode = |k: Vec<i64>, c: f64| KernelMode { k, c };
        assert!(FourierKernel::new(1, 0.0, vec![mode(vec![1], 1.0)]).is_ok());
        assert!(FourierKernel::new(1, 0.0, vec![mode(vec![0], 1.0)]).is_err());
        assert!(FourierKernel::new(1, 0.0, vec![mode(vec![-1], 1.0)]).is_err());
        assert!(matches!(
            FourierKernel::new(1, 0.0, vec![mode(vec![1], 1.0), mode(vec![1], 2.0)]),
            Err(Error::DuplicateKernelMode { .. })
        ));
        // 2-torus half space: k₁ > 0, or k₁ = 0 with k₂ > 0.
        assert!(FourierKernel::new(2, 0.0, vec![mode(vec![0, 1], 1.0)]).is_ok());
        assert!(FourierKernel::new(2, 0.0, vec![mode(vec![1, -3], 1.0)]).is_ok());
        assert!(FourierKernel::new(2, 0.0, vec![mode(vec![0, -1], 1.0)]).is_err());
        assert!(FourierKernel::new(2, 0.0, vec![mode(vec![-1, 2], 1.0)]).is_err());
        assert!(FourierKernel::new(2, 0.0, vec![mode(vec![1], 1.0)]).is_err());
        assert!(FourierKernel::new(3, 0.0, vec![]).is_err());
    }

    #[test]
    fn kernel_serde_round_trips_and_validates() {
        let kernel = FourierKernel::kuramoto(2.0);
        let json = serde_json::to_string(&kernel).unwrap();
        let back: FourierKernel = serde_json::from_str(&json).unwrap();
        assert_eq!(kernel, back);
        let bad = r#"{"dim":1,"c0":0.0,"modes":[{"k":[-2],"c":1.0}]}"#;
        assert!(serde_json::from_str::<FourierKernel>(bad).is_err());
        let dup = r#"{"dim":1,"c0":0.0,"modes":[{"k":[1],"c":1.0},{"k":[1],"c":1.0}]}"#;
        assert!(serde_json::from_str::<FourierKernel>(dup).is_err());
    }

    #[test]
    fn kuramoto_kernel_has_expected_shape() {
        let k = FourierKernel::kuramoto(2.0);
        // ψ(x) = (κ/2)(1 - cos x): zero at the origin, κ at the antipode.
        assert!(k.evaluate(&[0.0]).abs() < 1e-15);
        assert!((k.evaluate(&[PI]) - 2.0).abs() < 1e-15);
        assert!(!k.is_lasry_lions_monotone());
        assert!((k.monotonicity_defect() - 1.0).abs() < 1e-15);
        let repulsive = FourierKernel::new(
            1,
            0.3,
            vec![KernelMode {
                k: vec![2],
                c: 0.7,
            }],
        )
        .unwrap();
        assert!(repulsive.is_lasry_lions_monotone());
        assert_eq!(repulsive.monotonicity_defect(), 0.0);
    }

    #[test]
    fn interaction_cost_matches_brute_force_convolution() {
        let g = grid1(64);
        let m = von_mises(&g, 1.5, &[0.9]).unwrap();
        let kernel = FourierKernel::new(
            1,
            0.4,
            vec![
                KernelMode {
                    k: vec![1],
                    c: -0.8,
                },
                KernelMode {
                    k: vec![3],
                    c: 0.25,
                },
            ],
        )
        .unwrap();
        let fast = interaction_cost(&kernel, &m).unwrap();
        let slow = brute_force_cost(&kernel, &m);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "cost mismatch {a} vs {b}");
        }
    }

    #[test]
    fn interaction_cost_matches_brute_force_in_two_dimensions() {
        let g = TorusGrid::new(2, 16).unwrap();
        let m = von_mises(&g, 1.0, &[0.5, 2.0]).unwrap();
        let kernel = FourierKernel::new(
            2,
            0.2,
            vec![
                KernelMode {
                    k: vec![1, 0],
                    c: -0.5,
                },
                KernelMode {
                    k: vec![0, 1],
                    c: -0.5,
                },
                KernelMode {
                    k: vec![1, -1],
                    c: 0.3,
                },
            ],
        )
        .unwrap();
        let fast = interaction_cost(&kernel, &m).unwrap();
        let slow = brute_force_cost(&kernel, &m);
        for (a, b) in fast.values().iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "cost mismatch {a} vs {b}");
        }
    }

    #[test]
    fn potential_energy_matches_brute_force_double_integral() {
        let g = grid1(64);
        let m = von_mises(&g, 2.0, &[0.3]).unwrap();
        for kernel in [
            FourierKernel::kuramoto(2.0),
            FourierKernel::new(
                1,
                -0.1,
                vec![
                    KernelMode {
                        k: vec![2],
                        c: 0.6,
                    },
                    KernelMode {
                        k: vec![5],
                        c: -0.15,
                    },
                ],
            )
            .unwrap(),
        ] {
            let fast = potential_energy(&kernel, &m).unwrap();
            let slow = brute_force_energy(&kernel, &m);
            assert!((fast - slow).abs() < 1e-12, "energy {fast} vs {slow}");
        }
    }

    #[test]
    fn interaction_cost_of_uniform_is_constant() {
        let g = grid1(32);
        let kernel = FourierKernel::kuramoto(3.0);
        let f = interaction_cost(&kernel, &Density::uniform(&g)).unwrap();
        for &v in f.values() {
            assert!((v - 3.0).abs() < 1e-13, "expected 2c₀ = κ, got {v}");
        }
        assert!(potential_energy(&kernel, &Density::uniform(&g)).unwrap() - 1.5 < 1e-14);
    }

    #[test]
    fn cost_is_linear_derivative_of_potential_energy() {
        // ℱ is quadratic, so the secant (ℱ[μ+εw] - ℱ[μ])/ε differs from
        // ∫ f(·,μ) dw by exactly ε·ℱ_bilinear[w,w].
        let g = grid1(128);
        let mu = von_mises(&g, 1.0, &[0.0]).unwrap();
        let sigma = von_mises(&g, 2.0, &[PI]).unwrap();
        let kernel = FourierKernel::kuramoto(2.0);
        let eps = 1e-5;
        let blended = mu
            .field()
            .zip_with(sigma.field(), |a, b| (1.0 - eps) * a + eps * b);
        let perturbed = Density::new(blended).unwrap();
        let secant = (potential_energy(&kernel, &perturbed).unwrap()
            - potential_energy(&kernel, &mu).unwrap())
            / eps;
        let f = interaction_cost(&kernel, &mu).unwrap();
        let pairing = f
            .values()
            .iter()
            .zip(mu.values().iter().zip(sigma.values()))
            .map(|(&fv, (&mv, &sv))| fv * (sv - mv))
            .sum::<f64>()
            * g.cell_volume();
        let err = (secant - pairing).abs();
        assert!(
            err < 1e-3 * (1.0 + pairing.abs()),
            "derivative mismatch {err}"
        );
    }

    #[test]
    fn free_energy_of_uniform_is_the_analytic_value() {
        // Φ[uniform] = ρν(-log 2π) + 0 + c₀ for any kernel on the circle.
        let g = grid1(64);
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let kernel = FourierKernel::kuramoto(2.0);
        let phi = free_energy(&kernel, &params, &Density::uniform(&g)).unwrap();
        let expected = -(2.0 * PI).ln() + 1.0;
        assert!((phi - expected).abs() < 1e-12, "Φ {phi} vs {expected}");
    }

    #[test]
    fn heat_flow_check_reduces_to_coupling_threshold_for_kuramoto() {
        let g = grid1(128);
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let m = cosine_perturbed_uniform(&g, 0.1, &[1]).unwrap();
        // lhs = κ q₁ with q₁ = ε²; rhs = ν(ρ+ν) I with the closed-form I.
        let fisher = 1.0 - (1.0 - 0.04f64).sqrt();
        let below = heat_flow_uniqueness_check(&FourierKernel::kuramoto(2.0), &params, &m).unwrap();
        assert!((below.lhs - 0.02).abs() < 1e-12);
        assert!((below.rhs - 2.0 * fisher).abs() < 1e-9);
        assert!(below.satisfied);
        let above = heat_flow_uniqueness_check(&FourierKernel::kuramoto(6.0), &params, &m).unwrap();
        assert!((above.lhs - 0.06).abs() < 1e-12);
        assert!(!above.satisfied);
    }

    #[test]
    fn heat_flow_check_ratio_sharpens_as_perturbation_shrinks() {
        // lhs/rhs → κ/κ_c as ε → 0: the Fisher-moment bound saturates, so
        // the κ_c threshold cannot be improved.
        let g = grid1(256);
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let kernel = FourierKernel::kuramoto(2.0);
        let ratio_at = |eps: f64| {
            let m = cosine_perturbed_uniform(&g, eps, &[1]).unwrap();
            let check = heat_flow_uniqueness_check(&kernel, &params, &m).unwrap();
            check.lhs / check.rhs
        };
        let coarse = ratio_at(0.2);
        let fine = ratio_at(0.01);
        let limit = 2.0 / params.kuramoto_critical_coupling();
        assert!(coarse < fine, "ratio should grow toward the limit");
        assert!(fine < limit + 1e-9);
        assert!((fine - limit).abs() < 1e-3, "ratio {fine} vs limit {limit}");
    }

    #[test]
    fn heat_flow_lhs_matches_finite_difference_energy_derivative() {
        let g = grid1(256);
        let kernel = FourierKernel::new(
            1,
            0.1,
            vec![
                KernelMode {
                    k: vec![1],
                    c: -0.6,
                },
                KernelMode {
                    k: vec![2],
                    c: 0.35,
                },
            ],
        )
        .unwrap();
        let params = ModelParams::new(1.0, 1.0).unwrap();
        let m = von_mises(&g, 1.5, &[1.1]).unwrap().heat_evolve(0.05).unwrap();
        let check = heat_flow_uniqueness_check(&kernel, &params, &m).unwrap();
        let delta = 1e-5;
        let fd = (potential_energy(&kernel, &m.heat_evolve(delta).unwrap()).unwrap()
            - potential_energy(&kernel, &m.heat_evolve(0.0).unwrap()).unwrap())
            / delta;
        // One-sided difference of a smooth decay: O(δ) truncation, far
        // inside the tolerance at δ = 1e-5.
        assert!(
            (fd - check.lhs).abs() < 1e-4 * (1.0 + check.lhs.abs()),
            "dℱ/dt {fd} vs analytic {}",
            check.lhs
        );
    }

    #[test]
    fn energy_derivative_check_agrees_at_zero_and_positive_times() {
        let g = grid1(128);
        // Uniform density: every moment vanishes, both sides are zero.
        let check =
            heat_flow_derivative_check(&FourierKernel::kuramoto(2.0), &Density::uniform(&g), 0.3)
                .unwrap();
        assert!(check.analytic.abs() < 1e-30);
        assert!(check.numeric.abs() < 1e-10);
        // Single-mode density at t = 0: dℱ/dt = -2c₁q₁ = κε²·2 for the
        // Kuramoto kernel (c₁ = -κ/2, q₁ = ε²).
        let m = cosine_perturbed_uniform(&g, 0.2, &[1]).unwrap();
        let check = heat_flow_derivative_check(&FourierKernel::kuramoto(2.0), &m, 0.0).unwrap();
        assert!((check.analytic - 0.08).abs() < 1e-12);
        assert!(check.agrees_within(1e-7), "numeric {}", check.numeric);
        // Moments decay as e^{-2|k|²t}, so for a single mode-1 kernel the
        // analytic derivative at t is the one at 0 scaled by e^{-2t}.
        let at_half = heat_flow_derivative_check(&FourierKernel::kuramoto(2.0), &m, 0.5).unwrap();
        assert!((at_half.analytic - 0.08 * (-1.0f64).exp()).abs() < 1e-12);
        assert!(at_half.agrees_within(1e-7));
        // Multi-mode kernel against a generic smooth density.
        let kernel = FourierKernel::new(
            1,
            -0.2,
            vec![
                KernelMode { k: vec![1], c: 0.7 },
                KernelMode {
                    k: vec![3],
                    c: -0.4,
                },
            ],
        )
        .unwrap();
        let m = von_mises(&g, 1.2, &[2.1]).unwrap();
        for t in [0.0, 0.2, 1.0] {
            let check = heat_flow_derivative_check(&kernel, &m, t).unwrap();
            assert!(
                check.agrees_within(1e-7),
                "t {t}: analytic {} numeric {}",
                check.analytic,
                check.numeric
            );
        }
        assert!(heat_flow_derivative_check(&kernel, &m, -0.1).is_err());
    }

    #[test]
    fn zero_kernel_induces_no_energy() {
        let g = grid1(64);
        let kernel = FourierKernel::zero(1);
        let m = von_mises(&g, 2.0, &[0.4]).unwrap();
        assert_eq!(potential_energy(&kernel, &m).unwrap(), 0.0);
        let f = interaction_cost(&kernel, &m).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
        assert!(kernel.is_lasry_lions_monotone());
    }
}
