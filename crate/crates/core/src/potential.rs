//! Cantor-like piecewise-constant potentials `v(x)` on `[0, 1]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Highest construction order accepted by [`build_cantor_potential`].
///
/// Order `N` produces `2^(N+1) - 1` segments.
pub const MAX_ORDER: u32 = 20;

/// Parameters of the middle-removal construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CantorSpec {
    pub order: u32,
    /// Value on the retained intervals.
    pub well_value: f64,
    /// Value on the removed intervals.
    pub barrier_value: f64,
    /// Fraction of each retained interval removed per generation.
    pub removal_fraction: f64,
}

impl Default for CantorSpec {
    fn default() -> Self {
        Self {
            order: 4,
            well_value: -1.0,
            barrier_value: 1.0,
            removal_fraction: 1.0 / 3.0,
        }
    }
}

impl CantorSpec {
    pub fn with_order(order: u32) -> Self {
        Self {
            order,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: f64| (-1.0..=1.0).contains(&v);
        if !in_range(self.well_value) || !in_range(self.barrier_value) {
            return Err(Error::InvalidPotential(format!(
                "well value {} and barrier value {} must lie in [-1, 1]",
                self.well_value, self.barrier_value
            )));
        }
        if self.well_value >= self.barrier_value {
            return Err(Error::InvalidPotential(format!(
                "well value {} must be below barrier value {}",
                self.well_value, self.barrier_value
            )));
        }
        if !(self.removal_fraction > 0.0 && self.removal_fraction < 1.0) {
            return Err(Error::InvalidPotential(format!(
                "removal fraction {} must lie in (0, 1)",
                self.removal_fraction
            )));
        }
        if self.order > MAX_ORDER {
            return Err(Error::InvalidPotential(format!(
                "order {} exceeds the supported maximum {MAX_ORDER}",
                self.order
            )));
        }
        Ok(())
    }
}

/// One constant piece `[start, end)` of a potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub value: f64,
}

impl Segment {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Dimensionless potential made of constant segments that tile `[0, 1]`.
///
/// Immutable once built; all accessors are read-only.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePotential {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewisePotential {
    /// Validates and wraps a segment table.
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::InvalidPotential(format!(
                "{} breakpoints cannot bound {} segments",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || breakpoints[breakpoints.len() - 1] != 1.0 {
            return Err(Error::InvalidPotential(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if let Some(j) = breakpoints.windows(2).position(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPotential(format!(
                "breakpoints {} and {} are not strictly increasing",
                breakpoints[j],
                breakpoints[j + 1]
            )));
        }
        if let Some(v) = values.iter().find(|v| !(-1.0..=1.0).contains(*v)) {
            return Err(Error::InvalidPotential(format!(
                "value {v} lies outside [-1, 1]"
            )));
        }
        Ok(Self {
            breakpoints,
            values,
        })
    }

    /// Single segment with a constant value.
    pub fn uniform(value: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![value])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn segment_count(&self) -> usize {
        self.values.len()
    }

    pub fn segment(&self, j: usize) -> Segment {
        Segment {
            start: self.breakpoints[j],
            end: self.breakpoints[j + 1],
            value: self.values[j],
        }
    }

    pub fn segments(&self) -> impl DoubleEndedIterator<Item = Segment> + ExactSizeIterator + '_ {
        (0..self.values.len()).map(move |j| self.segment(j))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Width of the narrowest segment.
    pub fn finest_width(&self) -> f64 {
        self.segments()
            .map(|s| s.width())
            .fold(f64::INFINITY, f64::min)
    }

    /// Smallest `m <= max_denominator` such that every breakpoint is a
    /// multiple of `1/m` (checked to 1e-12), if there is one.
    pub fn lattice_denominator(&self, max_denominator: u64) -> Option<u64> {
        let guess = libm::round(1.0 / self.finest_width());
        if !(guess >= 1.0) || guess > max_denominator as f64 {
            return None;
        }
        let m = guess as u64;
        let on_lattice = self.breakpoints.iter().all(|&b| {
            let scaled = b * m as f64;
            libm::fabs(scaled - libm::round(scaled)) <= 1e-12 * m as f64
        });
        on_lattice.then_some(m)
    }

    /// Index of the segment owning `x`: half-open `[b_j, b_{j+1})`, with
    /// `x = 1` owned by the last segment.
    pub fn segment_index(&self, x: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("x = {x} lies outside [0, 1]")));
        }
        let upper = self.breakpoints.partition_point(|&b| b <= x);
        Ok((upper - 1).min(self.values.len() - 1))
    }

    pub fn sample(&self, x: f64) -> Result<f64> {
        self.segment_index(x).map(|j| self.values[j])
    }

    /// Mean of `v` over `[a, b]`, clipped to the unit interval.
    pub fn cell_average(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(1.0);
        if !(a < b) {
            return self.sample(a.clamp(0.0, 1.0)).unwrap_or(self.values[0]);
        }
        let first = self.breakpoints.partition_point(|&x| x <= a) - 1;
        let mut integral = 0.0;
        for j in first..self.values.len() {
            let lo = self.breakpoints[j].max(a);
            let hi = self.breakpoints[j + 1].min(b);
            if lo >= b {
                break;
            }
            if hi > lo {
                integral += (hi - lo) * self.values[j];
            }
        }
        integral / (b - a)
    }

    /// The same potential seen from the right wall, `x -> 1 - x`.
    pub fn mirrored(&self) -> Self {
        let breakpoints = self.breakpoints.iter().rev().map(|&b| 1.0 - b).collect();
        let values = self.values.iter().rev().copied().collect();
        Self {
            breakpoints,
            values,
        }
    }
}

/// Builds the order-`N` middle-removal potential: wells on the retained
/// intervals, barriers on the removed ones.
pub fn build_cantor_potential(spec: &CantorSpec) -> Result<PiecewisePotential> {
    spec.validate()?;
    let wells = if spec.removal_fraction == 1.0 / 3.0 {
        ternary_wells(spec.order)
    } else {
        fractional_wells(spec.order, spec.removal_fraction)
    };
    let mut breakpoints = Vec::with_capacity(2 * wells.len());
    let mut values = Vec::with_capacity(2 * wells.len() - 1);
    for (i, &(start, end)) in wells.iter().enumerate() {
        if i > 0 {
            values.push(spec.barrier_value);
        }
        breakpoints.push(start);
        breakpoints.push(end);
        values.push(spec.well_value);
    }
    PiecewisePotential::new(breakpoints, values)
}

/// Point evaluation of `v(x)`.
pub fn sample_potential(p: &PiecewisePotential, x: f64) -> Result<f64> {
    p.sample(x)
}

// Exact integer positions in units of 3^-order, divided once at the end.
fn ternary_wells(order: u32) -> Vec<(f64, f64)> {
    let scale = 3u64.pow(order);
    let mut wells: Vec<(u64, u64)> = vec![(0, scale)];
    for _ in 0..order {
        wells = wells
            .iter()
            .flat_map(|&(start, len)| {
                let third = len / 3;
                [(start, third), (start + 2 * third, third)]
            })
            .collect();
    }
    let denom = scale as f64;
    wells
        .into_iter()
        .map(|(start, len)| (start as f64 / denom, (start + len) as f64 / denom))
        .collect()
}

fn fractional_wells(order: u32, removal_fraction: f64) -> Vec<(f64, f64)> {
    let keep = 0.5 * (1.0 - removal_fraction);
    let mut wells = vec![(0.0, 1.0)];
    for _ in 0..order {
        wells = wells
            .iter()
            .flat_map(|&(a, b): &(f64, f64)| {
                let flank = keep * (b - a);
                [(a, a + flank), (b - flank, b)]
            })
            .collect();
    }
    wells
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_zero_is_a_single_well() {
        let p = build_cantor_potential(&CantorSpec::with_order(0)).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 1.0]);
        assert_eq!(p.values(), &[-1.0]);
    }

    #[test]
    fn order_one_removes_the_middle_third() {
        let p = build_cantor_potential(&CantorSpec::with_order(1)).unwrap();
        assert_eq!(p.breakpoints(), &[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        assert_eq!(p.values(), &[-1.0, 1.0, -1.0]);
    }

    #[test]
    fn order_two_has_seven_segments() {
        let p = build_cantor_potential(&CantorSpec::with_order(2)).unwrap();
        assert_eq!(p.segment_count(), 7);
        let wells: Vec<(f64, f64)> = p
            .segments()
            .filter(|s| s.value == -1.0)
            .map(|s| (s.start, s.end))
            .collect();
        assert_eq!(
            wells,
            [
                (0.0, 1.0 / 9.0),
                (2.0 / 9.0, 3.0 / 9.0),
                (6.0 / 9.0, 7.0 / 9.0),
                (8.0 / 9.0, 1.0)
            ]
        );
        assert!(p
            .segments()
            .filter(|s| s.value != -1.0)
            .all(|s| s.value == 1.0));
    }

    #[test]
    fn well_count_width_and_measure() {
        for order in 0..=10u32 {
            let p = build_cantor_potential(&CantorSpec::with_order(order)).unwrap();
            assert_eq!(p.segment_count(), (1usize << (order + 1)) - 1);
            let wells: Vec<Segment> = p.segments().filter(|s| s.value == -1.0).collect();
            assert_eq!(wells.len(), 1usize << order);
            let width = libm::pow(3.0, -(order as f64));
            for w in &wells {
                assert!((w.width() - width).abs() <= 1e-15, "order {order}");
            }
            let measure: f64 = wells.iter().map(Segment::width).sum();
            let expected = libm::pow(2.0 / 3.0, order as f64);
            assert!((measure - expected).abs() <= 1e-15 * (1u64 << order) as f64);
            if order >= 1 {
                assert_eq!(p.min_value(), -1.0);
                assert_eq!(p.max_value(), 1.0);
            }
        }
    }

    #[test]
    fn sampling_ties_go_right() {
        let p = build_cantor_potential(&CantorSpec::with_order(1)).unwrap();
        assert_eq!(p.sample(0.5).unwrap(), 1.0);
        assert_eq!(p.sample(1.0 / 3.0).unwrap(), 1.0);
        assert_eq!(p.sample(1.0).unwrap(), -1.0);
        assert_eq!(p.sample(0.0).unwrap(), -1.0);
        assert!(matches!(p.sample(1.5), Err(Error::Domain(_))));
        assert!(matches!(p.sample(-1e-9), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            CantorSpec {
                well_value: 1.0,
                barrier_value: -1.0,
                ..CantorSpec::default()
            },
            CantorSpec {
                barrier_value: 1.5,
                ..CantorSpec::default()
            },
            CantorSpec {
                removal_fraction: 1.0,
                ..CantorSpec::default()
            },
            CantorSpec {
                order: MAX_ORDER + 1,
                ..CantorSpec::default()
            },
        ];
        for spec in bad {
            assert!(build_cantor_potential(&spec).is_err(), "{spec:?}");
        }
    }

    #[test]
    fn general_removal_fraction() {
        let spec = CantorSpec {
            order: 2,
            removal_fraction: 0.5,
            ..CantorSpec::default()
        };
        let p = build_cantor_potential(&spec).unwrap();
        assert_eq!(
            p.breakpoints(),
            &[0.0, 0.0625, 0.1875, 0.25, 0.75, 0.8125, 0.9375, 1.0]
        );
    }

    #[test]
    fn raw_tables_are_validated() {
        assert!(PiecewisePotential::new(vec![0.0, 0.6, 0.5, 1.0], vec![0.0; 3]).is_err());
        assert!(PiecewisePotential::new(vec![0.0, 1.0], vec![1.2]).is_err());
        assert!(PiecewisePotential::new(vec![0.1, 1.0], vec![0.0]).is_err());
        assert!(PiecewisePotential::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn cell_average_and_lattice() {
        let p = build_cantor_potential(&CantorSpec::with_order(1)).unwrap();
        assert_eq!(p.cell_average(0.1, 0.2), -1.0);
        assert!((p.cell_average(0.0, 0.5) - (-1.0 / 3.0)).abs() < 1e-15);
        assert!((p.cell_average(0.0, 1.0) - (-1.0 / 3.0)).abs() < 1e-15);
        assert_eq!(p.lattice_denominator(1000), Some(3));
        let q = build_cantor_potential(&CantorSpec::with_order(4)).unwrap();
        assert_eq!(q.lattice_denominator(1000), Some(81));
        let r = PiecewisePotential::new(vec![0.0, 0.123456789, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(r.lattice_denominator(1000), None);
    }

    #[test]
    fn mirror_is_an_involution() {
        let p = PiecewisePotential::new(vec![0.0, 0.25, 1.0], vec![-1.0, 0.5]).unwrap();
        let m = p.mirrored();
        assert_eq!(m.breakpoints(), &[0.0, 0.75, 1.0]);
        assert_eq!(m.values(), &[0.5, -1.0]);
        assert_eq!(m.mirrored(), p);
    }
}
