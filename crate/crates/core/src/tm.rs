//! Transfer-matrix (exact shooting) engine.
//!
//! Inside a segment with constant `v` the equation `psi'' = -q psi`,
//! `q = mu^2 (eps - v)`, has closed-form solutions, so `(psi, psi')` can be
//! carried from `x = 0` to `x = 1` with no discretization error. The value
//! `psi(1)` vanishes exactly at the Dirichlet eigenvalues and the number of
//! interior zeros of `psi` counts the eigenvalues below `eps`.
//!
//! Barriers are crossed in steps of at most one e-fold. A single closed-form
//! step across a wide barrier rounds away the decaying solution, which shifts
//! tunnelling-split levels far beyond working precision.

use alloc::vec::Vec;

use crate::bisect;
use crate::error::{Error, Result};
use crate::fd::{check_window, next_up, ModelParams};
use crate::potential::PiecewisePotential;
use crate::spectrum::{normalize_and_fix_sign, Engine, Spectrum, Wavefunction};

/// Below this value of `sqrt|q| * width` the segment map uses its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;
/// Largest energy defect of the joined shots accepted by [`tm_eigenfunction`].
pub const STALE_MISMATCH: f64 = 1e-6;

// Longest barrier step, in e-folds.
const MAX_STEP_EXPONENT: f64 = 1.0;
// A shot is trusted until it falls this many e-folds below its running
// maximum; beyond that the growth seeded by the rounded eigenvalue dominates.
const TRUST_EFOLDS: f64 = 16.0;

/// Shooting pair carried across the segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingState {
    pub psi: f64,
    pub dpsi: f64,
    /// Interior sign changes of `psi` so far.
    pub node_count: usize,
    /// Natural log of the factor removed by rescaling.
    pub log_scale: f64,
}

impl ShootingState {
    /// Dirichlet start `(psi, psi') = (0, 1)`.
    pub fn at_wall() -> Self {
        Self {
            psi: 0.0,
            dpsi: 1.0,
            node_count: 0,
            log_scale: 0.0,
        }
    }

    fn rescale(&mut self) {
        let m = libm::fabs(self.psi).max(libm::fabs(self.dpsi));
        if m > 0.0 && m.is_finite() {
            self.psi /= m;
            self.dpsi /= m;
            self.log_scale += libm::log(m);
        }
    }
}

/// Boundary value and node count of a shot at one energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shot {
    /// `psi(1)` of the rescaled solution started with `(0, 1)`.
    pub mismatch: f64,
    pub nodes: usize,
}

// Closed-form map over `width`: (cos-like, width * sinc-like).
fn segment_map(q: f64, width: f64) -> (f64, f64) {
    let t = libm::sqrt(libm::fabs(q)) * width;
    let (cos_like, sinc_like) = if t < SERIES_THRESHOLD {
        let qw2 = q * width * width;
        (1.0 - 0.5 * qw2, 1.0 - qw2 / 6.0)
    } else if q > 0.0 {
        (libm::cos(t), libm::sin(t) / t)
    } else {
        (libm::cosh(t), libm::sinh(t) / t)
    };
    (cos_like, width * sinc_like)
}

// Carries (psi, psi') across `width`; returns the pair and the log of the
// factor divided out between barrier steps.
fn advance(psi: f64, dpsi: f64, q: f64, width: f64) -> (f64, f64, f64) {
    let t = libm::sqrt(libm::fabs(q)) * width;
    let steps = if q < 0.0 && t > MAX_STEP_EXPONENT {
        libm::ceil(t / MAX_STEP_EXPONENT) as usize
    } else {
        1
    };
    let (c, ws) = segment_map(q, width / steps as f64);
    let (mut psi, mut dpsi, mut growth) = (psi, dpsi, 0.0);
    for i in 0..steps {
        (psi, dpsi) = (psi * c + dpsi * ws, -q * ws * psi + dpsi * c);
        if i + 1 < steps {
            let m = libm::fabs(psi).max(libm::fabs(dpsi));
            psi /= m;
            dpsi /= m;
            growth += libm::log(m);
        }
    }
    (psi, dpsi, growth)
}

// Zeros of psi in (0, width] for one segment.
fn zeros_in_segment(psi: f64, dpsi: f64, q: f64, width: f64, psi_end: f64) -> usize {
    let crossed = psi != 0.0 && (psi_end == 0.0 || (psi > 0.0) != (psi_end > 0.0));
    if q <= 0.0 {
        // Non-oscillatory: at most one zero.
        return usize::from(crossed);
    }
    let k = libm::sqrt(q);
    let pi = core::f64::consts::PI;
    let start = libm::atan2(psi, dpsi / k);
    let end = start + k * width;
    let mut count = (libm::floor(end / pi) - libm::floor(start / pi)) as i64;
    if psi != 0.0 && psi_end != 0.0 && (count % 2 == 1) != crossed {
        // Rounding put the phase on the wrong side of a zero at the segment end.
        let frac = end / pi - libm::floor(end / pi);
        count += if frac < 0.5 { -1 } else { 1 };
    }
    count.max(0) as usize
}

// One segment as seen from the wall a shot starts at.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: f64,
    width: f64,
    value: f64,
}

fn from_left(potential: &PiecewisePotential) -> impl Iterator<Item = Piece> + '_ {
    potential.segments().map(|s| Piece {
        start: s.start,
        width: s.width(),
        value: s.value,
    })
}

// Segments in the mirrored coordinate `1 - x`.
fn from_right(potential: &PiecewisePotential) -> impl Iterator<Item = Piece> + '_ {
    potential.segments().rev().map(|s| Piece {
        start: 1.0 - s.end,
        width: s.width(),
        value: s.value,
    })
}

fn step(state: ShootingState, q: f64, width: f64) -> ShootingState {
    let (psi, dpsi, growth) = advance(state.psi, state.dpsi, q, width);
    ShootingState {
        psi,
        dpsi,
        node_count: state.node_count + zeros_in_segment(state.psi, state.dpsi, q, width, psi),
        log_scale: state.log_scale + growth,
    }
}

/// Shoots from `x = 0`; `rescale` normalizes the pair after every segment.
pub fn shoot(
    potential: &PiecewisePotential,
    params: &ModelParams,
    eps: f64,
    rescale: bool,
) -> ShootingState {
    let mu2 = params.mu() * params.mu();
    let mut state = ShootingState::at_wall();
    for piece in from_left(potential) {
        state = step(state, mu2 * (eps - piece.value), piece.width);
        if rescale {
            state.rescale();
        }
    }
    if state.psi == 0.0 {
        // A zero exactly at the right wall is not interior.
        state.node_count = state.node_count.saturating_sub(1);
    }
    state
}

/// Boundary mismatch `psi(1)` and interior node count at `eps`.
pub fn tm_mismatch(potential: &PiecewisePotential, params: &ModelParams, eps: f64) -> Shot {
    let state = shoot(potential, params, eps, true);
    Shot {
        mismatch: state.psi,
        nodes: state.node_count,
    }
}

/// Number of Dirichlet eigenvalues strictly below `eps`.
pub fn node_count(potential: &PiecewisePotential, params: &ModelParams, eps: f64) -> usize {
    shoot(potential, params, eps, true).node_count
}

/// All eigenvalues in `(lo, hi]`: node-count bisection isolates each one,
/// sign bisection on the mismatch refines it to a bracket of width `tol`.
pub fn tm_eigenvalues(
    potential: &PiecewisePotential,
    params: &ModelParams,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Spectrum> {
    check_window(lo, hi, tol)?;
    let a = next_up(lo).max(potential.min_value());
    let b = next_up(hi);
    let count = |x: f64| node_count(potential, params, x);
    let eigenvalues = bisect::isolate(&count, a, b, tol, |a, b, _| {
        refine_by_sign(potential, params, a, b, tol)
    });
    Ok(Spectrum {
        eigenvalues,
        window: (lo, hi),
        tolerance: tol,
        engine: Engine::TransferMatrix,
    })
}

fn refine_by_sign(
    potential: &PiecewisePotential,
    params: &ModelParams,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> f64 {
    let left = tm_mismatch(potential, params, a).mismatch;
    if left == 0.0 {
        return a;
    }
    loop {
        let mid = a + 0.5 * (b - a);
        if b - a <= tol || !(a < mid && mid < b) {
            return mid;
        }
        let m = tm_mismatch(potential, params, mid).mismatch;
        if m == 0.0 {
            return mid;
        }
        if (m > 0.0) == (left > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
}

// Shot sampled at i/(count+1), i = 1..=count, in its own coordinate.
struct Profile {
    psi: Vec<f64>,
    dpsi: Vec<f64>,
    log_scale: Vec<f64>,
}

impl Profile {
    fn log_amplitude(&self, i: usize, mu: f64) -> f64 {
        let a = libm::hypot(self.psi[i], self.dpsi[i] / mu);
        if a > 0.0 {
            libm::log(a) + self.log_scale[i]
        } else {
            f64::NEG_INFINITY
        }
    }

    fn reverse(&mut self) {
        self.psi.reverse();
        self.dpsi.reverse();
        self.log_scale.reverse();
        self.dpsi.iter_mut().for_each(|d| *d = -*d);
    }
}

fn sample_profile(
    pieces: impl Iterator<Item = Piece>,
    mu2: f64,
    eps: f64,
    count: usize,
) -> Profile {
    let denom = (count + 1) as f64;
    let mut profile = Profile {
        psi: Vec::with_capacity(count),
        dpsi: Vec::with_capacity(count),
        log_scale: Vec::with_capacity(count),
    };
    let mut state = ShootingState::at_wall();
    let mut next = 1;
    for piece in pieces {
        let q = mu2 * (eps - piece.value);
        while next <= count {
            let x = next as f64 / denom;
            if x > piece.start + piece.width {
                break;
            }
            let (psi, dpsi, growth) = advance(state.psi, state.dpsi, q, x - piece.start);
            profile.psi.push(psi);
            profile.dpsi.push(dpsi);
            profile.log_scale.push(state.log_scale + growth);
            next += 1;
        }
        state = step(state, q, piece.width);
        state.rescale();
    }
    // Samples that rounding pushed past the last breakpoint sit on the wall.
    while profile.psi.len() < count {
        profile.psi.push(state.psi);
        profile.dpsi.push(state.dpsi);
        profile.log_scale.push(state.log_scale);
    }
    profile
}

// How many samples, taken in `order`, precede the first one that falls
// TRUST_EFOLDS below the running maximum of the profile.
fn trusted_run(profile: &Profile, mu: f64, order: impl Iterator<Item = usize>) -> usize {
    let mut peak = f64::NEG_INFINITY;
    let mut run = 0;
    for i in order {
        let a = profile.log_amplitude(i, mu);
        peak = peak.max(a);
        if a < peak - TRUST_EFOLDS {
            break;
        }
        run += 1;
    }
    run
}

/// Eigenfunction at a converged eigenvalue, sampled on `sample_count` interior
/// points `x_i = i/(sample_count+1)` and normalized by the Riemann sum.
///
/// Shots from both walls are joined where the product of their amplitudes
/// peaks inside the region both are trusted; the first-order energy defect
/// of the joined function, from the Wronskian at the join, must not exceed
/// [`STALE_MISMATCH`]. Where the trusted regions do not meet, the levels are
/// degenerate to working precision and the state is the left shot alone.
pub fn tm_eigenfunction(
    potential: &PiecewisePotential,
    params: &ModelParams,
    eps: f64,
    sample_count: usize,
) -> Result<Wavefunction> {
    if sample_count == 0 {
        return Err(Error::InvalidGrid);
    }
    let mu = params.mu();
    let mu2 = mu * mu;
    let m = sample_count;
    let left = sample_profile(from_left(potential), mu2, eps, m);
    let mut right = sample_profile(from_right(potential), mu2, eps, m);
    right.reverse();

    let left_end = trusted_run(&left, mu, 0..m);
    let right_start = m - trusted_run(&right, mu, (0..m).rev());

    // (mantissa, log scale) per sample, plus the defect check inputs.
    let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(m);
    let mut join = None;
    if right_start < left_end {
        let j = (right_start..left_end)
            .max_by(|&i, &k| {
                let si = left.log_amplitude(i, mu) + right.log_amplitude(i, mu);
                let sk = left.log_amplitude(k, mu) + right.log_amplitude(k, mu);
                si.total_cmp(&sk)
            })
            .expect("non-empty overlap");
        let (lp, ld) = (left.psi[j], left.dpsi[j] / mu);
        let (rp, rd) = (right.psi[j], right.dpsi[j] / mu);
        let fit = (lp * rp + ld * rd) / (rp * rp + rd * rd);
        let shift = left.log_scale[j] - right.log_scale[j];
        for i in 0..m {
            if i <= j {
                pieces.push((left.psi[i], left.log_scale[i]));
            } else {
                pieces.push((fit * right.psi[i], right.log_scale[i] + shift));
            }
        }
        join = Some((fit * (lp * rd - ld * rp), left.log_scale[j]));
    } else {
        for i in 0..m {
            if i < left_end {
                pieces.push((left.psi[i], left.log_scale[i]));
            } else {
                pieces.push((0.0, 0.0));
            }
        }
    }

    let reference = pieces
        .iter()
        .filter(|(v, _)| *v != 0.0)
        .map(|(v, l)| libm::log(libm::fabs(*v)) + l)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut values: Vec<f64> = pieces
        .iter()
        .map(|&(v, l)| {
            if v == 0.0 {
                0.0
            } else {
                v * libm::exp(l - reference)
            }
        })
        .collect();
    let spacing = 1.0 / (m + 1) as f64;

    if let Some((wronskian, log_scale)) = join {
        // psi_L psi_R' - psi_L' psi_R over mu^2, for the normalized state.
        let norm_squared = spacing * values.iter().map(|v| v * v).sum::<f64>();
        let scale = libm::exp(2.0 * (log_scale - reference)) / norm_squared;
        let defect = libm::fabs(wronskian) * scale / mu;
        if !(defect <= STALE_MISMATCH) {
            return Err(Error::StaleEigenvalue {
                energy: eps,
                mismatch: defect,
            });
        }
    }
    normalize_and_fix_sign(&mut values, spacing);
    Ok(Wavefunction {
        energy: eps,
        spacing,
        values,
    })
}

/// Eigenvalue counter backed by the transfer-matrix node count.
#[derive(Debug, Clone, Copy)]
pub struct TransferMatrix<'a> {
    pub potential: &'a PiecewisePotential,
    pub params: ModelParams,
}

impl<'a> TransferMatrix<'a> {
    pub fn new(potential: &'a PiecewisePotential, params: ModelParams) -> Self {
        Self { potential, params }
    }

    pub fn node_count(&self, eps: f64) -> usize {
        node_count(self.potential, &self.params, eps)
    }

    pub fn eigenvalues(&self, lo: f64, hi: f64, tol: f64) -> Result<Spectrum> {
        tm_eigenvalues(self.potential, &self.params, lo, hi, tol)
    }
}
