//! Scenario configuration: one TOML (or JSON) document pins down a run.
//!
//! Every field has an embedded default; the defaults together describe the
//! flagship scenario (Kuramoto coupling κ = 2 at ρ = ν = 1 on the circle,
//! von Mises start, horizon 20 at dt = 1e-3), so a bare command with no
//! config file reproduces it. `--print-config` dumps the effective merged
//! configuration back as TOML.

use crate::CliError;
use mfg_core::coupling::{FourierKernel, KernelMode, ModelParams};
use mfg_core::evolve::{EvolveConfig, TerminalCondition, TimeMesh};
use mfg_core::io::import_density_csv;
use mfg_core::measures::{cosine_perturbed_uniform, von_mises, Density};
use mfg_core::stationary::StationaryConfig;
use mfg_core::TorusGrid;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

fn config_err(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

/// Interaction kernel: either a named preset or explicit cosine modes.
///
/// ```toml
/// [kernel]
/// preset = "kuramoto"
/// kappa = 2.0
/// ```
///
/// or
///
/// ```toml
/// [kernel]
/// c0 = 0.5
/// modes = [{ k = [1], c = -0.5 }]
/// ```
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelSpec {
    Preset(PresetKernel),
    Inline(InlineKernel),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetKernel {
    pub preset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineKernel {
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub modes: Vec<KernelMode>,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Preset(PresetKernel {
            preset: "kuramoto".to_string(),
            kappa: Some(2.0),
        })
    }
}

impl KernelSpec {
    pub fn build(&self, dim: usize) -> Result<FourierKernel, CliError> {
        match self {
            KernelSpec::Preset(p) => match p.preset.as_str() {
                "kuramoto" => {
                    let kappa = p
                        .kappa
                        .ok_or_else(|| config_err("the kuramoto preset needs kappa"))?;
                    if !(kappa > 0.0) {
                        return Err(config_err(format!("kappa must be positive, got {kappa}")));
                    }
                    if dim != 1 {
                        return Err(config_err("the kuramoto preset lives on the circle (d = 1)"));
                    }
                    Ok(FourierKernel::kuramoto(kappa))
                }
                "zero" => Ok(FourierKernel::zero(dim)),
                other => Err(config_err(format!("unknown kernel preset {other:?}"))),
            },
            KernelSpec::Inline(k) => FourierKernel::new(dim, k.c0, k.modes.clone())
                .map_err(|e| config_err(format!("bad inline kernel: {e}"))),
        }
    }
}

/// Discount rate ρ and noise level ν.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsSpec {
    pub rho: f64,
    pub nu: f64,
}

impl Default for ParamsSpec {
    fn default() -> Self {
        Self { rho: 1.0, nu: 1.0 }
    }
}

/// Torus dimension and nodes per axis.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub d: usize,
    #[serde(alias = "N")]
    pub n: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { d: 1, n: 128 }
    }
}

/// Initial density of the population.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialSpec {
    Uniform,
    /// Cosine perturbation of uniform, (1 + 2ε cos(k·x)) / volume.
    MEps {
        eps: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<Vec<i64>>,
    },
    VonMises {
        beta: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        center: Vec<f64>,
    },
    /// A density table previously exported as CSV.
    File { path: PathBuf },
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec::VonMises {
            beta: 2.0,
            center: Vec::new(),
        }
    }
}

impl InitialSpec {
    pub fn build(&self, grid: &TorusGrid) -> Result<Density, CliError> {
        match self {
            InitialSpec::Uniform => Ok(Density::uniform(grid)),
            InitialSpec::MEps { eps, k } => {
                let mode = k.clone().unwrap_or_else(|| {
                    let mut e1 = vec![0i64; grid.dim()];
                    e1[0] = 1;
                    e1
                });
                cosine_perturbed_uniform(grid, *eps, &mode)
                    .map_err(|e| config_err(format!("bad initial density: {e}")))
            }
            InitialSpec::VonMises { beta, center } => von_mises(grid, *beta, center)
                .map_err(|e| config_err(format!("bad initial density: {e}"))),
            InitialSpec::File { path } => {
                let m = import_density_csv(path).map_err(|e| {
                    config_err(format!("density file {}: {e}", path.display()))
                })?;
                if m.grid() != grid {
                    return Err(config_err(format!(
                        "density file {} is a {:?} table but the scenario grid is {:?}",
                        path.display(),
                        m.grid(),
                        grid
                    )));
                }
                Ok(m)
            }
        }
    }
}

/// Time horizon and step count.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeshSpec {
    #[serde(alias = "T")]
    pub t_final: f64,
    #[serde(alias = "M")]
    pub steps: usize,
}

impl Default for MeshSpec {
    fn default() -> Self {
        Self {
            t_final: 20.0,
            steps: 20000,
        }
    }
}

/// Solver knobs for both the stationary and the time-dependent runs.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    /// Damping of the fixed-point updates.
    pub damping: f64,
    /// Convergence threshold on the time-dependent density-flow map.
    pub tol: f64,
    /// Convergence threshold on the stationary best-response map.
    pub tol_fixed_point: f64,
    /// Sup-norm threshold of the inner cost-equation solves.
    pub tol_pde: f64,
    /// Iteration budget of the time-dependent fixed point.
    pub max_picard: usize,
    /// Iteration budget of the stationary fixed point.
    pub max_outer: usize,
    /// Iteration budget of the inner cost-equation solves.
    pub max_inner: usize,
    /// One-off heat mollification of the initial density (0 disables).
    pub initial_smoothing: f64,
    /// What pins the cost at the horizon: "zero" or "stationary".
    pub terminal_mode: TerminalCondition,
    /// Translation-invariant distance under which two stationary solutions
    /// count as one; default is the grid spacing, the resolution limit for
    /// solution families that are translates of each other.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dedup_tol: Option<f64>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let evolve = EvolveConfig::default();
        let stationary = StationaryConfig::default();
        Self {
            damping: evolve.damping,
            tol: evolve.tol,
            tol_fixed_point: stationary.tol_fixed_point,
            tol_pde: evolve.tol_pde,
            max_picard: evolve.max_picard,
            max_outer: stationary.max_outer,
            max_inner: stationary.max_inner,
            initial_smoothing: evolve.initial_smoothing,
            terminal_mode: TerminalCondition::Stationary,
            dedup_tol: None,
        }
    }
}

/// Where and what to write.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    /// Output directory; the --out flag overrides it.
    pub dir: PathBuf,
    /// Mesh steps between trajectory field snapshots.
    pub snapshot_stride: usize,
    /// Mesh steps between diagnostics samples.
    pub diagnostics_stride: usize,
    /// Lattice size for the pairwise path-regularity table.
    pub shift_lattice: usize,
    pub emit_trajectory: bool,
    pub emit_diagnostics: bool,
    pub emit_shift_bound: bool,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            snapshot_stride: 100,
            diagnostics_stride: 4,
            shift_lattice: 40,
            emit_trajectory: true,
            emit_diagnostics: true,
            emit_shift_bound: true,
        }
    }
}

/// The whole scenario.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub kernel: KernelSpec,
    pub params: ParamsSpec,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub mesh: MeshSpec,
    pub solver: SolverSpec,
    pub output: OutputSpec,
}

impl ScenarioConfig {
    /// Loads a scenario, merging file values over the embedded defaults.
    /// `.json` files parse as JSON, everything else as TOML. No path means
    /// pure defaults.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read config {}: {e}", path.display())))?;
        let is_json = path
            .extension()
            .is_some_and(|ext| ext.eq_ignore_ascii_case("json"));
        if is_json {
            serde_json::from_str(&text)
                .map_err(|e| config_err(format!("config {}: {e}", path.display())))
        } else {
            toml::from_str(&text)
                .map_err(|e| config_err(format!("config {}: {e}", path.display())))
        }
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string_pretty(self)
            .map_err(|e| config_err(format!("cannot serialize config: {e}")))
    }

    pub fn torus_grid(&self) -> Result<TorusGrid, CliError> {
        TorusGrid::new(self.grid.d, self.grid.n)
            .map_err(|e| config_err(format!("bad grid: {e}")))
    }

    pub fn model_params(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.params.rho, self.params.nu)
            .map_err(|e| config_err(format!("bad params: {e}")))
    }

    pub fn fourier_kernel(&self) -> Result<FourierKernel, CliError> {
        self.kernel.build(self.grid.d)
    }

    pub fn time_mesh(&self) -> Result<TimeMesh, CliError> {
        TimeMesh::new(self.mesh.t_final, self.mesh.steps)
            .map_err(|e| config_err(format!("bad mesh: {e}")))
    }

    pub fn initial_density(&self, grid: &TorusGrid) -> Result<Density, CliError> {
        self.initial.build(grid)
    }

    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig {
            tol: self.solver.tol,
            max_picard: self.solver.max_picard,
            damping: self.solver.damping,
            tol_pde: self.solver.tol_pde,
            max_inner: self.solver.max_inner,
            initial_smoothing: self.solver.initial_smoothing,
        }
    }

    pub fn stationary_config(&self) -> StationaryConfig {
        StationaryConfig {
            tol_fixed_point: self.solver.tol_fixed_point,
            tol_pde: self.solver.tol_pde,
            max_outer: self.solver.max_outer,
            max_inner: self.solver.max_inner,
            damping: self.solver.damping,
        }
    }

    pub fn dedup_tolerance(&self, grid: &TorusGrid) -> f64 {
        self.solver.dedup_tol.unwrap_or_else(|| grid.h())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ScenarioConfig::default();
        let text = cfg.to_toml().unwrap();
        let back: ScenarioConfig = toml::from_str(&text).unwrap();
        assert_eq!(back.to_toml().unwrap(), text);
        assert!(matches!(back.kernel, KernelSpec::Preset(_)));
        assert_eq!(back.grid.n, 128);
        assert_eq!(back.mesh.steps, 20000);
        assert_eq!(back.solver.terminal_mode, TerminalCondition::Stationary);
    }

    #[test]
    fn partial_config_merges_over_defaults() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
            [grid]
            N = 64

            [mesh]
            T = 0.5
            M = 100
            "#,
        )
        .unwrap();
        assert_eq!(cfg.grid.n, 64);
        assert_eq!(cfg.grid.d, 1);
        assert_eq!(cfg.mesh.t_final, 0.5);
        assert_eq!(cfg.mesh.steps, 100);
        assert!(matches!(cfg.kernel, KernelSpec::Preset(_)));
    }

    #[test]
    fn inline_kernel_and_initial_variants_parse() {
        let cfg: ScenarioConfig = toml::from_str(
            r#"
            [kernel]
            c0 = 0.5
            modes = [{ k = [1], c = -0.5 }, { k = [3], c = 0.25 }]

            [initial]
            kind = "m_eps"
            eps = 0.2
            "#,
        )
        .unwrap();
        let kernel = cfg.fourier_kernel().unwrap();
        assert_eq!(kernel.modes().len(), 2);
        assert!(matches!(cfg.initial, InitialSpec::MEps { .. }));
        let grid = TorusGrid::new(1, 32).unwrap();
        let m = cfg.initial_density(&grid).unwrap();
        assert!((m.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_fields_and_bad_presets_are_rejected() {
        assert!(toml::from_str::<ScenarioConfig>("[params]\nrho = 1.0\nspeed = 3\n").is_err());
        let cfg: ScenarioConfig =
            toml::from_str("[kernel]\npreset = \"fourier\"\n").unwrap();
        assert!(matches!(cfg.fourier_kernel(), Err(CliError::Config(_))));
        let cfg: ScenarioConfig = toml::from_str("[kernel]\npreset = \"kuramoto\"\n").unwrap();
        assert!(matches!(cfg.fourier_kernel(), Err(CliError::Config(_))));
        let cfg: ScenarioConfig =
            toml::from_str("[kernel]\npreset = \"kuramoto\"\nkappa = -1.0\n").unwrap();
        assert!(matches!(cfg.fourier_kernel(), Err(CliError::Config(_))));
    }

    #[test]
    fn json_config_parses_too() {
        let cfg: ScenarioConfig = serde_json::from_str(
            r#"{"kernel": {"preset": "kuramoto", "kappa": 6.0}, "grid": {"n": 64}}"#,
        )
        .unwrap();
        let kernel = cfg.fourier_kernel().unwrap();
        assert_eq!(kernel.c0(), 3.0);
        assert_eq!(cfg.grid.n, 64);
    }
}
