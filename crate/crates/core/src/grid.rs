//! Uniform periodic grids on the torus [0, 2π)^d and the Fourier
//! pseudospectral calculus living on them.
//!
//! Nodes are x_j = j·h with h = 2π/N along each axis, values are stored in a
//! flat row-major array (axis 0 slowest). All differential operators act
//! through the discrete Fourier transform with signed frequencies
//! k ∈ {-N/2, …, N/2-1}:
//!
//! * `gradient`   multiplies mode k by i·k per axis, with the Nyquist mode
//!   (k = -N/2) zeroed — the usual convention that keeps odd derivatives of
//!   real data real and antisymmetric;
//! * `laplacian`  multiplies by -|k|² (Nyquist kept: even derivative);
//! * `heat_evolve` applies the exact semigroup multiplier e^{-|k|²·t};
//! * `integrate`  is the trapezoidal = rectangle rule h^d·Σ f_j, which is
//!   spectrally accurate for smooth periodic integrands.
//!
//! Hermitian symmetry of the coefficient array is re-enforced after every
//! multiplier application, so round-off can never leak a spurious imaginary
//! part back into nodal values.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 8;

/// Side length of the torus along every axis.
pub const PERIOD: f64 = 2.0 * std::f64::consts::PI;

// ── Grid ────────────────────────────────────────────────────────────────────

/// A uniform N^d grid on the torus [0, 2π)^d, d ∈ {1, 2}, N even.
///
/// Cloning is cheap: the FFT plans are shared behind `Arc`s.
#[derive(Clone)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
    h: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TorusGrid {{ dim: {}, n: {} }}", self.dim, self.n)
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n
    }
}
impl Eq for TorusGrid {}

impl TorusGrid {
    /// Builds a grid with `n` nodes per axis in dimension `dim`.
    ///
    /// `dim` must be 1 or 2 and `n` even with `n >= 8`; odd node counts make
    /// the Nyquist conventions ambiguous and are rejected outright.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < MIN_NODES || n % 2 != 0 {
            return Err(Error::InvalidGridSize(n));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            dim,
            n,
            h: PERIOD / n as f64,
            fft: planner.plan_fft(n, FftDirection::Forward),
            ifft: planner.plan_fft(n, FftDirection::Inverse),
        })
    }

    /// Spatial dimension d.
    #[must_use]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per axis.
    #[must_use]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing h = 2π/N.
    #[must_use]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Total number of nodes N^d.
    #[must_use]
    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Quadrature weight h^d of a single node.
    #[must_use]
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Volume (2π)^d of the whole torus.
    #[must_use]
    pub fn volume(&self) -> f64 {
        PERIOD.powi(self.dim as i32)
    }

    /// Coordinates of the node with flat index `flat`, written into `out`.
    /// Only the first `dim` entries are meaningful.
    #[inline]
    pub fn coords(&self, flat: usize, out: &mut [f64; 2]) {
        debug_assert!(flat < self.node_count());
        match self.dim {
            1 => out[0] = flat as f64 * self.h,
            _ => {
                out[0] = (flat / self.n) as f64 * self.h;
                out[1] = (flat % self.n) as f64 * self.h;
            }
        }
    }

    /// Signed frequency of axis index `j`: j for j < N/2, j - N otherwise,
    /// so the Nyquist index N/2 carries k = -N/2.
    #[inline]
    #[must_use]
    pub fn signed_freq(&self, j: usize) -> i64 {
        if j < self.n / 2 {
            j as i64
        } else {
            j as i64 - self.n as i64
        }
    }

    /// Largest mode magnitude strictly below the Nyquist frequency.
    #[must_use]
    pub fn max_resolved_mode(&self) -> i64 {
        (self.n / 2) as i64 - 1
    }

    /// Fresh scratch buffers sized for this grid, for use by the `_into`
    /// spectral routines on hot paths.
    #[must_use]
    pub fn workspace(&self) -> FftWorkspace {
        let len = self.node_count();
        let scratch = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        FftWorkspace {
            tmp: vec![Complex64::default(); if self.dim == 2 { len } else { 0 }],
            scratch: vec![Complex64::default(); scratch],
        }
    }

    // ── Raw transforms ─────────────────────────────────────────────────────

    /// In-place forward DFT of `buf` (unnormalized, row-major).
    pub(crate) fn fft_inplace(&self, buf: &mut [Complex64], ws: &mut FftWorkspace) {
        self.transform(buf, ws, true);
    }

    /// In-place inverse DFT of `buf`, including the 1/N^d normalization.
    pub(crate) fn ifft_inplace(&self, buf: &mut [Complex64], ws: &mut FftWorkspace) {
        self.transform(buf, ws, false);
        let scale = 1.0 / self.node_count() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, buf: &mut [Complex64], ws: &mut FftWorkspace, forward: bool) {
        assert_eq!(buf.len(), self.node_count(), "buffer does not match grid");
        let plan = if forward { &self.fft } else { &self.ifft };
        match self.dim {
            1 => plan.process_with_scratch(buf, &mut ws.scratch),
            _ => {
                let n = self.n;
                for row in buf.chunks_exact_mut(n) {
                    plan.process_with_scratch(row, &mut ws.scratch);
                }
                transpose_square(buf, &mut ws.tmp, n);
                for row in ws.tmp.chunks_exact_mut(n) {
                    plan.process_with_scratch(row, &mut ws.scratch);
                }
                transpose_square(&ws.tmp, buf, n);
            }
        }
    }

    /// Forward transform of nodal values into a fresh coefficient buffer
    /// (unnormalized: divide by N^d to get Fourier-series coefficients).
    pub(crate) fn forward_coeffs(&self, values: &[f64], ws: &mut FftWorkspace) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft_inplace(&mut buf, ws);
        buf
    }

    /// Inverse transform back to real nodal values. Consumes the coefficient
    /// buffer; imaginary residue (round-off only, after Hermitian
    /// symmetrization) is discarded.
    pub(crate) fn inverse_values(&self, mut freq: Vec<Complex64>, ws: &mut FftWorkspace) -> Vec<f64> {
        self.ifft_inplace(&mut freq, ws);
        freq.into_iter().map(|c| c.re).collect()
    }

    /// Multiplies coefficient `freq[idx]` by `g(k)` for every flat index with
    /// signed frequency vector k, then restores Hermitian symmetry exactly.
    pub(crate) fn apply_multiplier(
        &self,
        freq: &mut [Complex64],
        mut g: impl FnMut(&[i64; 2]) -> Complex64,
    ) {
        let n = self.n;
        let mut k = [0i64; 2];
        match self.dim {
            1 => {
                for (j, c) in freq.iter_mut().enumerate() {
                    k[0] = self.signed_freq(j);
                    *c *= g(&k);
                }
            }
            _ => {
                for j0 in 0..n {
                    k[0] = self.signed_freq(j0);
                    for j1 in 0..n {
                        k[1] = self.signed_freq(j1);
                        freq[j0 * n + j1] *= g(&k);
                    }
                }
            }
        }
        self.enforce_hermitian(freq);
    }

    /// Projects a coefficient array onto the Hermitian-symmetric subspace
    /// c_{-k} = conj(c_k), the spectral image of real nodal data.
    pub(crate) fn enforce_hermitian(&self, freq: &mut [Complex64]) {
        let n = self.n;
        let conj_axis = |j: usize| if j == 0 { 0 } else { n - j };
        match self.dim {
            1 => {
                for j in 0..n {
                    let jc = conj_axis(j);
                    if j < jc {
                        let avg = 0.5 * (freq[j] + freq[jc].conj());
                        freq[j] = avg;
                        freq[jc] = avg.conj();
                    } else if j == jc {
                        freq[j].im = 0.0;
                    }
                }
            }
            _ => {
                for j0 in 0..n {
                    let j0c = conj_axis(j0);
                    for j1 in 0..n {
                        let j1c = conj_axis(j1);
                        let idx = j0 * n + j1;
                        let idxc = j0c * n + j1c;
                        if idx < idxc {
                            let avg = 0.5 * (freq[idx] + freq[idxc].conj());
                            freq[idx] = avg;
                            freq[idxc] = avg.conj();
                        } else if idx == idxc {
                            freq[idx].im = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// Reusable FFT scratch space; create once per thread with
/// [`TorusGrid::workspace`] when calling spectral routines in a loop.
pub struct FftWorkspace {
    tmp: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

fn transpose_square(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in 0..n {
            dst[j * n + i] = src[i * n + j];
        }
    }
}

// ── Scalar fields ───────────────────────────────────────────────────────────

/// Real nodal values on a [`TorusGrid`], guaranteed finite by construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wraps a value vector, rejecting wrong lengths and non-finite entries.
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                got: values.len(),
                expected: grid.node_count(),
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { grid, values })
    }

    /// Samples `f` at every node. Fails if `f` produces a non-finite value.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.node_count()];
        let mut x = [0.0f64; 2];
        let dim = grid.dim();
        for (flat, v) in values.iter_mut().enumerate() {
            grid.coords(flat, &mut x);
            *v = f(&x[..dim]);
        }
        Self::new(grid, values)
    }

    /// The constant field `c`.
    pub fn constant(grid: TorusGrid, c: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![c; grid.node_count()])
    }

    /// Internal constructor for values produced by our own arithmetic.
    /// Finiteness is the caller's responsibility; solvers run explicit
    /// blow-up guards instead of per-op scans.
    pub(crate) fn from_values_unchecked(grid: TorusGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.node_count());
        Self { grid, values }
    }

    #[must_use]
    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    #[must_use]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Consumes the field, returning the raw value vector.
    #[must_use]
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// h^d · Σ_j f_j — the torus integral of the trigonometric interpolant.
    #[must_use]
    pub fn integrate(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    /// Mean value over the torus.
    #[must_use]
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Supremum norm over the nodes.
    #[must_use]
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// max_j f_j - min_j f_j, the nodal oscillation.
    #[must_use]
    pub fn oscillation(&self) -> f64 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in &self.values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        hi - lo
    }

    /// Pointwise map; the caller guarantees `f` keeps values finite.
    #[must_use]
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_values_unchecked(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise combination of two fields on the same grid.
    #[must_use]
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Self::from_values_unchecked(self.grid.clone(), values)
    }

    // ── Spectral operators ─────────────────────────────────────────────────

    /// Spectral gradient ∇f, one component per axis (Nyquist derivative
    /// zeroed so real data stays real).
    #[must_use]
    pub fn gradient(&self) -> VectorField {
        let mut ws = self.grid.workspace();
        let base = self.grid.forward_coeffs(&self.values, &mut ws);
        let nyq = (self.grid.n() / 2) as i64;
        let components = (0..self.grid.dim())
            .map(|axis| {
                let mut freq = base.clone();
                self.grid.apply_multiplier(&mut freq, |k| {
                    if k[axis] == -nyq {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, k[axis] as f64)
                    }
                });
                ScalarField::from_values_unchecked(
                    self.grid.clone(),
                    self.grid.inverse_values(freq, &mut ws),
                )
            })
            .collect();
        VectorField { components }
    }

    /// Spectral Laplacian Δf (multiplier -|k|², Nyquist kept).
    #[must_use]
    pub fn laplacian(&self) -> Self {
        let mut ws = self.grid.workspace();
        let mut freq = self.grid.forward_coeffs(&self.values, &mut ws);
        self.grid.apply_multiplier(&mut freq, |k| {
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            Complex64::new(-k2, 0.0)
        });
        Self::from_values_unchecked(self.grid.clone(), self.grid.inverse_values(freq, &mut ws))
    }

    /// The elliptic operator (ρ - νΔ)f, multiplier ρ + ν|k|².
    ///
    /// Exact inverse of [`ScalarField::resolvent`] with the same
    /// coefficients.
    #[must_use]
    pub fn helmholtz(&self, rho: f64, nu: f64) -> Self {
        let mut ws = self.grid.workspace();
        let mut freq = self.grid.forward_coeffs(&self.values, &mut ws);
        self.grid.apply_multiplier(&mut freq, |k| {
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            Complex64::new(rho + nu * k2, 0.0)
        });
        Self::from_values_unchecked(self.grid.clone(), self.grid.inverse_values(freq, &mut ws))
    }

    /// The resolvent (ρ - νΔ)^{-1}f, multiplier 1/(ρ + ν|k|²), defined for
    /// ρ > 0.
    #[must_use]
    pub fn resolvent(&self, rho: f64, nu: f64) -> Self {
        assert!(rho > 0.0, "resolvent needs a positive zeroth-order term");
        let mut ws = self.grid.workspace();
        let mut freq = self.grid.forward_coeffs(&self.values, &mut ws);
        self.grid.apply_multiplier(&mut freq, |k| {
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            Complex64::new(1.0 / (rho + nu * k2), 0.0)
        });
        Self::from_values_unchecked(self.grid.clone(), self.grid.inverse_values(freq, &mut ws))
    }

    /// Exact heat semigroup e^{tΔ}f via the multiplier e^{-|k|²t}.
    ///
    /// Rejects negative or non-finite `t`; `t = 0` returns the field
    /// unchanged up to round-off.
    pub fn heat_evolve(&self, t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::NegativeTime { t });
        }
        let mut ws = self.grid.workspace();
        let mut freq = self.grid.forward_coeffs(&self.values, &mut ws);
        self.grid.apply_multiplier(&mut freq, |k| {
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            Complex64::new((-k2 * t).exp(), 0.0)
        });
        Ok(Self::from_values_unchecked(
            self.grid.clone(),
            self.grid.inverse_values(freq, &mut ws),
        ))
    }
}

// ── Vector fields ───────────────────────────────────────────────────────────

/// A d-component vector field; component i is the i-th axis direction.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    components: Vec<ScalarField>,
}

impl VectorField {
    /// Bundles per-axis components (must all share one grid and match its
    /// dimension).
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        match components.first() {
            None => Err(Error::UnsupportedDimension(0)),
            Some(first) => {
                let grid = first.grid().clone();
                if components.len() != grid.dim() {
                    return Err(Error::UnsupportedDimension(components.len()));
                }
                assert!(
                    components.iter().all(|c| *c.grid() == grid),
                    "vector components live on different grids"
                );
                Ok(Self { components })
            }
        }
    }

    #[must_use]
    pub fn grid(&self) -> &TorusGrid {
        self.components[0].grid()
    }

    #[must_use]
    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    #[must_use]
    pub fn component(&self, axis: usize) -> &ScalarField {
        &self.components[axis]
    }

    /// Nodal squared magnitude |v|² = Σ_axis v_axis².
    #[must_use]
    pub fn magnitude_squared(&self) -> ScalarField {
        let grid = self.grid().clone();
        let mut values = vec![0.0; grid.node_count()];
        for comp in &self.components {
            for (acc, &v) in values.iter_mut().zip(comp.values()) {
                *acc += v * v;
            }
        }
        ScalarField::from_values_unchecked(grid, values)
    }

    /// Spectral divergence ∇·v = Σ_axis ∂_axis v_axis.
    #[must_use]
    pub fn divergence(&self) -> ScalarField {
        let grid = self.grid().clone();
        let mut ws = grid.workspace();
        let nyq = (grid.n() / 2) as i64;
        let mut total = vec![Complex64::default(); grid.node_count()];
        for (axis, comp) in self.components.iter().enumerate() {
            let mut freq = grid.forward_coeffs(comp.values(), &mut ws);
            grid.apply_multiplier(&mut freq, |k| {
                if k[axis] == -nyq {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k[axis] as f64)
                }
            });
            for (acc, v) in total.iter_mut().zip(freq) {
                *acc += v;
            }
        }
        ScalarField::from_values_unchecked(grid.clone(), grid.inverse_values(total, &mut ws))
    }
}

// ── Tests ───────────────────────────────────────────────────────────────────
