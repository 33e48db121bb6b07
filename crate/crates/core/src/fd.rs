//! Finite-difference engine.
//!
//! The operator `-(1/mu^2) d^2/dx^2 + v(x)` with Dirichlet walls is
//! discretized on `n` interior nodes as the symmetric tridiagonal matrix
//!
//! ```text
//! d_i = 2c + v_i,   e = -c,   c = 1/(mu^2 h^2)
//! ```
//!
//! Eigenvalues come from Sturm-count bisection, eigenvectors from inverse
//! iteration.
//!
//! The Sturm recurrence is evaluated in the reduced variable
//! `g_i = q_i/c - 1`, which obeys `g_i = g_{i-1}/(1 + g_{i-1}) + (v_i - eps)/c`.
//! It is the same pivot sequence as `q_i = (d_i - eps) - e^2/q_{i-1}`, but the
//! large kinetic diagonal never enters a subtraction, so rounding errors scale
//! with the potential rather than with `c`. On fine grids `c` exceeds `10^7`
//! and the plain recurrence would lose eight digits.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bisect;
use crate::error::{Error, Result};
use crate::potential::PiecewisePotential;
use crate::spectrum::{normalize_and_fix_sign, Engine, Spectrum, Wavefunction};

/// Default absolute bisection tolerance in `eps`.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
/// Lower bound of the default grid-resolution rule.
pub const MIN_DEFAULT_NODES: usize = 2000;
/// Nodes placed across the narrowest segment by the default rule.
pub const NODES_PER_FINEST_SEGMENT: usize = 30;
/// Iteration cap for inverse iteration.
pub const MAX_INVERSE_ITERATIONS: usize = 50;
const EXTRA_INVERSE_ITERATIONS: usize = 2;

// Zero pivots are replaced by -PIVOT_FLOOR (in units of |e|).
const PIVOT_FLOOR: f64 = 1e-300;

/// The dimensionless measure `mu = sqrt(2 m lambda^2 V0) / hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    mu: f64,
}

impl ModelParams {
    pub fn new(mu: f64) -> Result<Self> {
        if mu.is_finite() && mu > 0.0 {
            Ok(Self { mu })
        } else {
            Err(Error::InvalidParams(format!(
                "mu must be positive and finite, got {mu}"
            )))
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `1/(mu^2 h^2)`, the magnitude of the off-diagonal coupling.
    pub fn kinetic_scale(&self, spacing: f64) -> f64 {
        1.0 / (self.mu * self.mu * spacing * spacing)
    }
}

/// Uniform grid of `n` interior nodes `x_i = i/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            Err(Error::InvalidGrid)
        } else {
            Ok(Self { n })
        }
    }

    /// Default resolution for a potential at a given `mu`:
    /// `max(2000, 30 * m * ceil(mu/100))` where `1/m` is the narrowest
    /// segment width, then enlarged until `n + 1` is a multiple of the
    /// breakpoint lattice (if any) so every breakpoint falls on a node.
    pub fn resolved(potential: &PiecewisePotential, params: &ModelParams) -> Self {
        let lattice = potential.lattice_denominator(1 << 40);
        let per_unit = match lattice {
            Some(m) => m as f64,
            None => libm::ceil(1.0 / potential.finest_width()),
        };
        let mu_factor = libm::ceil(params.mu() / 100.0).max(1.0);
        let wanted = (NODES_PER_FINEST_SEGMENT as f64 * per_unit * mu_factor)
            .max(MIN_DEFAULT_NODES as f64) as usize;
        let n = match lattice {
            Some(m) => {
                let m = m as usize;
                (wanted + 1).div_ceil(m) * m - 1
            }
            None => wanted,
        };
        Self { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (self.n + 1) as f64
    }

    /// Node `x_i` for `i` in `1..=n`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / (self.n + 1) as f64
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i + 1))
    }

    /// Grid with the spacing halved, `n -> 2n + 1`.
    pub fn refined(&self) -> Self {
        Self { n: 2 * self.n + 1 }
    }
}

/// How the potential is turned into the diagonal of the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// `v(x_i)` with the half-open segment convention.
    Point,
    /// Mean of `v` over the dual cell `[x_i - h/2, x_i + h/2]`. Identical to
    /// `Point` away from breakpoints; at a breakpoint node it averages the two
    /// sides, which keeps the eigenvalue error second order in `h`.
    #[default]
    CellAverage,
}

/// Symmetric tridiagonal discretization of the rescaled Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalHamiltonian {
    grid: Grid,
    params: ModelParams,
    kinetic: f64,
    potential: Vec<f64>,
}

/// Assembles `H` with the default [`Sampling::CellAverage`] rule.
pub fn assemble_hamiltonian(
    potential: &PiecewisePotential,
    params: &ModelParams,
    grid: &Grid,
) -> TridiagonalHamiltonian {
    TridiagonalHamiltonian::assemble(potential, params, grid, Sampling::default())
}

impl TridiagonalHamiltonian {
    pub fn assemble(
        potential: &PiecewisePotential,
        params: &ModelParams,
        grid: &Grid,
        sampling: Sampling,
    ) -> Self {
        let h = grid.spacing();
        let samples = match sampling {
            Sampling::Point => grid
                .nodes()
                .map(|x| potential.sample(x).expect("grid nodes lie inside [0, 1]"))
                .collect(),
            Sampling::CellAverage => grid
                .nodes()
                .map(|x| potential.cell_average(x - 0.5 * h, x + 0.5 * h))
                .collect(),
        };
        Self::from_samples(params, grid, samples)
    }

    /// Builds `H` directly from potential values on the nodes.
    pub fn from_samples(params: &ModelParams, grid: &Grid, samples: Vec<f64>) -> Self {
        assert_eq!(samples.len(), grid.n(), "one potential sample per node");
        Self {
            grid: *grid,
            params: *params,
            kinetic: params.kinetic_scale(grid.spacing()),
            potential: samples,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    /// `c = 1/(mu^2 h^2)`.
    pub fn kinetic_scale(&self) -> f64 {
        self.kinetic
    }

    /// Potential values `v_i` on the diagonal.
    pub fn potential_samples(&self) -> &[f64] {
        &self.potential
    }

    pub fn diagonal(&self) -> Vec<f64> {
        self.potential
            .iter()
            .map(|v| 2.0 * self.kinetic + v)
            .collect()
    }

    pub fn off_diagonal(&self) -> f64 {
        -self.kinetic
    }

    /// Gershgorin enclosure `[min v_i, max v_i + 4c]`.
    pub fn gershgorin(&self) -> (f64, f64) {
        let lo = self.potential.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .potential
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi + 4.0 * self.kinetic)
    }

    /// Infinity norm of `H`.
    pub fn norm(&self) -> f64 {
        let vmax = self
            .potential
            .iter()
            .fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
        4.0 * self.kinetic + vmax
    }

    /// Number of eigenvalues strictly below `eps` (negative pivots of the
    /// shifted `LDL^T` factorization).
    pub fn sturm_count(&self, eps: f64) -> usize {
        let inv_c = 1.0 / self.kinetic;
        let mut count = 0;
        // g_0 = +inf, so g_0 / (1 + g_0) = 1.
        let mut ratio = 1.0;
        for &v in &self.potential {
            let g = ratio + (v - eps) * inv_c;
            let mut pivot = 1.0 + g;
            if libm::fabs(pivot) < PIVOT_FLOOR {
                pivot = -PIVOT_FLOOR;
            }
            if pivot < 0.0 {
                count += 1;
            }
            ratio = g / pivot;
        }
        count
    }

    /// All eigenvalues in `(lo, hi]`, each bisected to a bracket of width `tol`.
    pub fn eigenvalues_in_range(&self, lo: f64, hi: f64, tol: f64) -> Result<Spectrum> {
        check_window(lo, hi, tol)?;
        let (g_lo, g_hi) = self.gershgorin();
        let a = next_up(lo).max(g_lo);
        let b = next_up(hi).min(next_up(g_hi));
        let count = |x: f64| self.sturm_count(x);
        let eigenvalues = bisect::isolate(&count, a, b, tol, |a, b, below| {
            bisect::refine_by_count(&count, a, b, below, tol)
        });
        Ok(Spectrum {
            eigenvalues,
            window: (lo, hi),
            tolerance: tol,
            engine: Engine::FiniteDifference,
        })
    }

    /// Eigenvalue with zero-based index `k` in ascending order.
    pub fn eigenvalue(&self, k: usize, tol: f64) -> Result<f64> {
        if k >= self.dim() {
            return Err(Error::Domain(format!(
                "index {k} out of range for {} eigenvalues",
                self.dim()
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let (g_lo, g_hi) = self.gershgorin();
        let count = |x: f64| self.sturm_count(x);
        Ok(bisect::by_index(&count, g_lo, next_up(g_hi), k, tol))
    }

    /// The `k` lowest eigenvalues.
    pub fn lowest(&self, k: usize, tol: f64) -> Result<Vec<f64>> {
        let k = k.min(self.dim());
        if k == 0 {
            return Ok(Vec::new());
        }
        let top = self.eigenvalue(k - 1, tol)?;
        let (g_lo, _) = self.gershgorin();
        // Slack above `top` keeps both members of an unresolved pair whose
        // bisection midpoints straddle it.
        let mut values = self
            .eigenvalues_in_range(g_lo - 1.0, top + 4.0 * tol, tol)?
            .eigenvalues;
        values.truncate(k);
        Ok(values)
    }

    /// `H x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let c = self.kinetic;
        let n = x.len();
        (0..n)
            .map(|i| {
                let left = if i > 0 { x[i - 1] } else { 0.0 };
                let right = if i + 1 < n { x[i + 1] } else { 0.0 };
                c * (2.0 * x[i] - left - right) + self.potential[i] * x[i]
            })
            .collect()
    }

    /// `||H x - eps x||_2 / ||x||_2`.
    pub fn residual(&self, x: &[f64], eps: f64) -> f64 {
        let c = self.kinetic;
        let n = x.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            let left = if i > 0 { x[i - 1] } else { 0.0 };
            let right = if i + 1 < n { x[i + 1] } else { 0.0 };
            let r = c * ((x[i] - left) + (x[i] - right)) + (self.potential[i] - eps) * x[i];
            num += r * r;
            den += x[i] * x[i];
        }
        libm::sqrt(num / den)
    }

    /// Residual target used by inverse iteration: `max(1e-10, 10 tol)`,
    /// raised to the rounding floor `64 u ||H||` of the residual itself on
    /// very fine grids.
    pub fn residual_target(&self, tol: f64) -> f64 {
        (1e-10f64)
            .max(10.0 * tol)
            .max(64.0 * f64::EPSILON * self.norm())
    }

    /// Eigenvector for an eigenvalue estimate `eps` (within `tol`).
    pub fn eigenvector(&self, eps: f64, tol: f64) -> Result<Wavefunction> {
        let mut states = self.eigenvectors(&[eps], tol)?;
        Ok(states.pop().expect("one state per energy"))
    }

    /// Eigenvectors for ascending eigenvalue estimates. Vectors whose
    /// eigenvalues lie within `1e-3 ||H||` of each other are kept orthogonal
    /// by Gram-Schmidt inside the iteration.
    pub fn eigenvectors(&self, energies: &[f64], tol: f64) -> Result<Vec<Wavefunction>> {
        if !(tol > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {tol}"
            )));
        }
        let h = self.grid.spacing();
        let cluster_gap = 1e-3 * self.norm();
        let target = self.residual_target(tol);
        // Unit 2-norm vectors, for orthogonalization.
        let mut unit: Vec<Vec<f64>> = Vec::with_capacity(energies.len());
        let mut states = Vec::with_capacity(energies.len());
        for (k, &eps) in energies.iter().enumerate() {
            let neighbours: Vec<&[f64]> = energies[..k]
                .iter()
                .zip(&unit)
                .filter(|(e, _)| libm::fabs(eps - **e) <= cluster_gap)
                .map(|(_, v)| v.as_slice())
                .collect();
            let x = self.inverse_iteration(eps, tol, target, k as u64, &neighbours)?;
            let mut values: Vec<f64> = x.iter().map(|v| v / libm::sqrt(h)).collect();
            normalize_and_fix_sign(&mut values, h);
            unit.push(x);
            states.push(Wavefunction {
                energy: eps,
                spacing: h,
                values,
            });
        }
        Ok(states)
    }

    fn inverse_iteration(
        &self,
        eps: f64,
        tol: f64,
        target: f64,
        seed: u64,
        against: &[&[f64]],
    ) -> Result<Vec<f64>> {
        let mut shift = eps;
        let mut factors = ShiftedLu::factor(self, shift);
        while factors.is_singular() {
            shift += 10.0 * tol;
            factors = ShiftedLu::factor(self, shift);
        }
        let mut x = start_vector(self.dim(), seed);
        let mut residual = f64::INFINITY;
        let mut converged_at = None;
        for it in 0..MAX_INVERSE_ITERATIONS {
            orthogonalize(&mut x, against);
            if normalize(&mut x) == 0.0 {
                x = start_vector(self.dim(), seed.wrapping_add(0x9e37_79b9));
                continue;
            }
            factors.solve(&mut x);
            orthogonalize(&mut x, against);
            if normalize(&mut x) == 0.0 {
                continue;
            }
            residual = self.residual(&x, eps);
            // Like LAPACK's stein, take extra steps once the residual test
            // passes; each one sharpens the direction at no risk.
            match converged_at {
                Some(first) if it >= first + EXTRA_INVERSE_ITERATIONS => return Ok(x),
                Some(_) => {}
                None if residual <= target => converged_at = Some(it),
                None => {}
            }
        }
        if converged_at.is_some() {
            return Ok(x);
        }
        Err(Error::NoConvergence {
            iterations: MAX_INVERSE_ITERATIONS,
            residual,
        })
    }
}

// LU with partial pivoting of (H - shift)/c = K + diag((v - shift)/c).
struct ShiftedLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    upper2: Vec<f64>,
    swapped: Vec<bool>,
}

impl ShiftedLu {
    fn factor(h: &TridiagonalHamiltonian, shift: f64) -> Self {
        let n = h.dim();
        let inv_c = 1.0 / h.kinetic;
        let mut diag: Vec<f64> = h
            .potential
            .iter()
            .map(|v| 2.0 + (v - shift) * inv_c)
            .collect();
        let mut lower = vec![-1.0; n.saturating_sub(1)];
        let mut upper = vec![-1.0; n.saturating_sub(1)];
        let mut upper2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if libm::fabs(diag[i]) >= libm::fabs(lower[i]) {
                if diag[i] != 0.0 {
                    let factor = lower[i] / diag[i];
                    lower[i] = factor;
                    diag[i + 1] -= factor * upper[i];
                }
            } else {
                let factor = diag[i] / lower[i];
                diag[i] = lower[i];
                lower[i] = factor;
                let temp = upper[i];
                upper[i] = diag[i + 1];
                diag[i + 1] = temp - factor * diag[i + 1];
                if i + 2 < n {
                    upper2[i] = upper[i + 1];
                    upper[i + 1] *= -factor;
                }
                swapped[i] = true;
            }
        }
        Self {
            lower,
            diag,
            upper,
            upper2,
            swapped,
        }
    }

    fn is_singular(&self) -> bool {
        self.diag.contains(&0.0)
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.lower[i] * b[i];
        }
        b[n - 1] /= self.diag[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.upper[n - 2] * b[n - 1]) / self.diag[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.upper[i] * b[i + 1] - self.upper2[i] * b[i + 2]) / self.diag[i];
        }
        // Near-singular shifts amplify enormously; keep the iterate finite.
        let peak = b.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
        if !peak.is_finite() {
            b.iter_mut().for_each(|v| {
                *v = if v.is_nan() { 0.0 } else { v.signum() };
            });
        } else if peak > 1e150 {
            b.iter_mut().for_each(|v| *v /= peak);
        }
    }
}

fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = 0x2545_f491_4f6c_dd1d_u64 ^ seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        })
        .collect()
}

fn orthogonalize(x: &mut [f64], against: &[&[f64]]) {
    for _ in 0..2 {
        for q in against {
            let dot: f64 = x.iter().zip(q.iter()).map(|(a, b)| a * b).sum();
            x.iter_mut().zip(q.iter()).for_each(|(a, b)| *a -= dot * b);
        }
    }
}

fn normalize(x: &mut [f64]) -> f64 {
    let norm = libm::sqrt(x.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 && norm.is_finite() {
        x.iter_mut().for_each(|v| *v /= norm);
        norm
    } else {
        0.0
    }
}

pub(crate) fn check_window(lo: f64, hi: f64, tol: f64) -> Result<()> {
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty energy window ({lo}, {hi}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(())
}

pub(crate) fn next_up(x: f64) -> f64 {
    x.next_up()
}

/// Free-function form of [`TridiagonalHamiltonian::sturm_count`].
pub fn sturm_count(h: &TridiagonalHamiltonian, eps: f64) -> usize {
    h.sturm_count(eps)
}

/// Free-function form of [`TridiagonalHamiltonian::eigenvalues_in_range`].
pub fn eigenvalues_in_range(
    h: &TridiagonalHamiltonian,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Spectrum> {
    h.eigenvalues_in_range(lo, hi, tol)
}

/// Free-function form of [`TridiagonalHamiltonian::eigenvector`].
pub fn eigenvector(h: &TridiagonalHamiltonian, eps: f64, tol: f64) -> Result<Wavefunction> {
    h.eigenvector(eps, tol)
}
