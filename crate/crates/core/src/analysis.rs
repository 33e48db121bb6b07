//! Spectral observables: integrated density of states, eigenvalue clusters,
//! localization measures and `mu` sweeps.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::fd::{assemble_hamiltonian, Grid, ModelParams, TridiagonalHamiltonian};
use crate::potential::PiecewisePotential;
use crate::spectrum::{Spectrum, Wavefunction};
use crate::tm::TransferMatrix;

/// Anything that can count eigenvalues strictly below an energy.
pub trait EigenvalueCounter {
    fn count_below(&self, eps: f64) -> usize;
}

impl EigenvalueCounter for TridiagonalHamiltonian {
    fn count_below(&self, eps: f64) -> usize {
        self.sturm_count(eps)
    }
}

impl EigenvalueCounter for TransferMatrix<'_> {
    fn count_below(&self, eps: f64) -> usize {
        self.node_count(eps)
    }
}

impl<F: Fn(f64) -> usize> EigenvalueCounter for F {
    fn count_below(&self, eps: f64) -> usize {
        self(eps)
    }
}

/// Integrated density of states `N(eps)` on a uniform energy mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct StaircaseData {
    pub energies: Vec<f64>,
    /// Number of eigenvalues `<= energies[i]`.
    pub counts: Vec<usize>,
}

impl StaircaseData {
    /// `counts.last() - counts.first()`.
    pub fn total_rise(&self) -> usize {
        match (self.counts.first(), self.counts.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0,
        }
    }
}

/// Evaluates the counting function at `resolution + 1` equally spaced
/// energies covering `[lo, hi]`.
pub fn staircase<C: EigenvalueCounter + ?Sized>(
    counter: &C,
    lo: f64,
    hi: f64,
    resolution: usize,
) -> Result<StaircaseData> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "invalid staircase range [{lo}, {hi}]"
        )));
    }
    if resolution == 0 {
        return Err(Error::Domain(
            "staircase resolution must be positive".into(),
        ));
    }
    let step = (hi - lo) / resolution as f64;
    let energies: Vec<f64> = (0..=resolution)
        .map(|i| {
            if i == resolution {
                hi
            } else {
                lo + i as f64 * step
            }
        })
        .collect();
    let counts: Vec<usize> = energies
        .iter()
        .map(|&e| counter.count_below(e.next_up()))
        .collect();
    Ok(StaircaseData { energies, counts })
}

/// Partition of a spectrum into runs of closely spaced eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub clusters: Vec<Range<usize>>,
    pub gap_threshold: f64,
}

impl ClusterReport {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Clusters with at least two members.
    pub fn multi_member(&self) -> impl Iterator<Item = &Range<usize>> {
        self.clusters.iter().filter(|r| r.len() >= 2)
    }

    /// Cluster index of every eigenvalue.
    pub fn labels(&self) -> Vec<usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(id, r)| core::iter::repeat_n(id, r.len()))
            .collect()
    }
}

/// Greedy single pass: a new cluster starts whenever the gap to the previous
/// eigenvalue exceeds `gap_threshold`.
pub fn detect_clusters(eigenvalues: &[f64], gap_threshold: f64) -> Result<ClusterReport> {
    if !(gap_threshold > 0.0) {
        return Err(Error::Domain(format!(
            "gap threshold must be positive, got {gap_threshold}"
        )));
    }
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..eigenvalues.len() {
        if eigenvalues[i] - eigenvalues[i - 1] > gap_threshold {
            clusters.push(start..i);
            start = i;
        }
    }
    if !eigenvalues.is_empty() {
        clusters.push(start..eigenvalues.len());
    }
    Ok(ClusterReport {
        clusters,
        gap_threshold,
    })
}

/// Geometric mean of the largest and smallest consecutive gaps, with the
/// smallest raised to `floor`. Degenerate levels have zero gaps, which would
/// otherwise put every level in its own cluster. `None` for fewer than two
/// eigenvalues.
pub fn geometric_gap_threshold(eigenvalues: &[f64], floor: f64) -> Option<f64> {
    let gaps = eigenvalues.windows(2).map(|w| w[1] - w[0]);
    let (smallest, largest) = gaps.fold((f64::INFINITY, 0.0f64), |(s, l), g| (s.min(g), l.max(g)));
    (eigenvalues.len() >= 2).then(|| libm::sqrt(largest * smallest.max(floor)))
}

/// Largest gap inside any cluster and smallest gap between clusters.
pub fn cluster_gap_statistics(eigenvalues: &[f64], report: &ClusterReport) -> (f64, f64) {
    let mut intra = 0.0f64;
    let mut inter = f64::INFINITY;
    for r in &report.clusters {
        for i in r.start + 1..r.end {
            intra = intra.max(eigenvalues[i] - eigenvalues[i - 1]);
        }
        if r.start > 0 {
            inter = inter.min(eigenvalues[r.start] - eigenvalues[r.start - 1]);
        }
    }
    (intra, inter)
}

const NORMALIZATION_SLACK: f64 = 1e-8;

/// `1 / (h sum psi_i^4)`: the fraction of the well the state occupies.
pub fn participation_ratio(psi: &Wavefunction) -> Result<f64> {
    let norm = psi.norm_squared();
    if !((norm - 1.0).abs() <= NORMALIZATION_SLACK) {
        return Err(Error::Domain(format!(
            "participation ratio needs a normalized state, got norm {norm}"
        )));
    }
    let quartic: f64 = psi.values.iter().map(|v| (v * v) * (v * v)).sum();
    Ok(1.0 / (psi.spacing * quartic))
}

/// Probability carried by the nodes of each potential segment.
///
/// Nodes sitting exactly on a breakpoint are split evenly between the two
/// neighbouring segments.
pub fn segment_masses(psi: &Wavefunction, potential: &PiecewisePotential) -> Vec<f64> {
    let mut masses = alloc::vec![0.0; potential.segment_count()];
    let breaks = potential.breakpoints();
    for (x, v) in psi.positions().zip(&psi.values) {
        let weight = psi.spacing * v * v;
        let j = potential.segment_index(x).expect("nodes lie inside [0, 1]");
        if j > 0 && breaks[j] == x {
            masses[j - 1] += 0.5 * weight;
            masses[j] += 0.5 * weight;
        } else {
            masses[j] += weight;
        }
    }
    masses
}

/// Fraction of the probability inside segments at the potential minimum.
pub fn well_mass_fraction(psi: &Wavefunction, potential: &PiecewisePotential) -> f64 {
    let floor = potential.min_value();
    segment_masses(psi, potential)
        .iter()
        .zip(potential.values())
        .filter(|(_, v)| **v == floor)
        .map(|(m, _)| m)
        .sum()
}

/// Largest probability found in a single segment, with its index.
pub fn dominant_segment(psi: &Wavefunction, potential: &PiecewisePotential) -> (usize, f64) {
    segment_masses(psi, potential).into_iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |best, (j, m)| if m > best.1 { (j, m) } else { best },
    )
}

/// Solver settings shared by the records of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    pub window: (f64, f64),
    pub tolerance: f64,
    /// Fixed grid; `None` applies [`Grid::resolved`] per `mu`.
    pub grid: Option<Grid>,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            window: (-1.0, 0.0),
            tolerance: crate::fd::DEFAULT_TOLERANCE,
            grid: None,
        }
    }
}

/// Spectrum summary for one value of `mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub mu: f64,
    pub grid_nodes: usize,
    /// Number of eigenvalues below `eps = 0`.
    pub count_below_zero: usize,
    pub eigenvalues: Vec<f64>,
    /// One participation ratio per eigenvalue in the window.
    pub participation_ratios: Vec<f64>,
}

impl SweepRecord {
    pub fn min_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }

    pub fn max_eigenvalue(&self) -> Option<f64> {
        self.eigenvalues.last().copied()
    }

    /// Mean participation ratio of the lowest `k` states in the window.
    pub fn mean_participation(&self, k: usize) -> Option<f64> {
        let k = k.min(self.participation_ratios.len());
        (k > 0).then(|| self.participation_ratios[..k].iter().sum::<f64>() / k as f64)
    }
}

/// Solves one `mu` of a sweep with the finite-difference engine.
pub fn sweep_record(
    potential: &PiecewisePotential,
    mu: f64,
    settings: &SweepSettings,
) -> Result<SweepRecord> {
    let params = ModelParams::new(mu)?;
    let grid = settings
        .grid
        .unwrap_or_else(|| Grid::resolved(potential, &params));
    let h = assemble_hamiltonian(potential, &params, &grid);
    let (lo, hi) = settings.window;
    let spectrum: Spectrum = h.eigenvalues_in_range(lo, hi, settings.tolerance)?;
    let states = h.eigenvectors(&spectrum.eigenvalues, settings.tolerance)?;
    let participation_ratios = states
        .iter()
        .map(participation_ratio)
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepRecord {
        mu,
        grid_nodes: grid.n(),
        count_below_zero: h.sturm_count(0.0),
        eigenvalues: spectrum.eigenvalues,
        participation_ratios,
    })
}

/// One record per `mu`, in input order.
pub fn mu_sweep(
    potential: &PiecewisePotential,
    mus: &[f64],
    settings: &SweepSettings,
) -> Result<Vec<SweepRecord>> {
    if mus.is_empty() {
        return Err(Error::Domain("mu sweep needs at least one value".into()));
    }
    if let Some(bad) = mus.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
        return Err(Error::Domain(format!(
            "mu values must be positive, got {bad}"
        )));
    }
    mus.iter()
        .map(|&mu| sweep_record(potential, mu, settings))
        .collect()
}
