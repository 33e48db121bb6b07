use alloc::vec::Vec;

/// Which solver produced a [`Spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    FiniteDifference,
    TransferMatrix,
}

impl Engine {
    pub fn tag(self) -> &'static str {
        match self {
            Engine::FiniteDifference => "fd",
            Engine::TransferMatrix => "tm",
        }
    }
}

/// Dimensionless eigenvalues found in the window `(lo, hi]`, ascending.
///
/// Values are strictly increasing except where two eigenvalues are closer
/// than the representable resolution at the requested tolerance; those are
/// reported with their multiplicity so that counts are conserved.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub window: (f64, f64),
    pub tolerance: f64,
    pub engine: Engine,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, f64> {
        self.eigenvalues.iter()
    }

    /// Consecutive differences `eps_{k+1} - eps_k`.
    pub fn gaps(&self) -> Vec<f64> {
        self.eigenvalues.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Eigenfunction sampled on the interior nodes `x_i = i h`, `i = 1..=n`,
/// with `h = 1/(n+1)` and `h * sum(psi_i^2) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    pub energy: f64,
    pub spacing: f64,
    pub values: Vec<f64>,
}

impl Wavefunction {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.spacing
    }

    pub fn positions(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.position(i))
    }

    /// Riemann sum `h * sum(psi_i^2)`.
    pub fn norm_squared(&self) -> f64 {
        self.spacing * self.values.iter().map(|v| v * v).sum::<f64>()
    }

    /// `|psi_i|^2` on the nodes.
    pub fn probability_density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    /// Discrete overlap `h * sum(a_i b_i)` with another state on the same grid.
    pub fn overlap(&self, other: &Wavefunction) -> f64 {
        self.spacing
            * self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .sum::<f64>()
    }
}

/// Free-function form of [`Wavefunction::probability_density`].
pub fn probability_density(psi: &Wavefunction) -> Vec<f64> {
    psi.probability_density()
}

/// Scales to unit Riemann norm and flips the sign so that the first
/// component above the noise floor is positive.
pub(crate) fn normalize_and_fix_sign(values: &mut [f64], spacing: f64) {
    let norm = libm::sqrt(spacing * values.iter().map(|v| v * v).sum::<f64>());
    if norm > 0.0 {
        values.iter_mut().for_each(|v| *v /= norm);
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let floor = SIGN_NOISE_FLOOR * peak;
    if let Some(first) = values.iter().find(|v| libm::fabs(**v) > floor) {
        if *first < 0.0 {
            values.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Components below this fraction of the peak are treated as zero when
/// fixing the sign convention; deep tunnelling tails are rounding noise.
pub const SIGN_NOISE_FLOOR: f64 = 1e-8;
