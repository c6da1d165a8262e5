//! Nonparametric tail dependence, correlation, bin counts, log-density
//! grids and event composites.

use serde::{Deserialize, Serialize};

use crate::copula::{Corner, TailMatrix, UnitPair};
use crate::error::{Error, Result};
use crate::marginal::{
    check_aligned, empirical_pit, remap_axis, DailySeries, PseudoObservations, QuantileTable,
    RemappedAxis, TimeLabel,
};
use crate::rotation::RotatedMixture;

pub const DEFAULT_THRESHOLD: f64 = 0.95;

// Guards ⌊um⌋ against products like 0.29 * 100 = 28.999999999999996.
const FLOOR_SLACK: f64 = 1e-9;

/// Empirical tail estimate with its integer ingredients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailEstimate {
    pub estimate: f64,
    pub joint_count: usize,
    /// `m (1 - u)`.
    pub denominator: f64,
}

/// Index `k = ⌊um⌋` of the threshold order statistic, counted from the
/// bottom.
pub fn threshold_rank(m: usize, u: f64) -> usize {
    (u * m as f64 + FLOOR_SLACK).floor() as usize
}

/// Thresholds such that a value exceeds in the upper tail when it is
/// strictly above `upper` and in the lower tail when strictly below `lower`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Thresholds {
    upper: f64,
    lower: f64,
}

fn thresholds(values: &[f64], k: usize) -> Thresholds {
    let m = values.len();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    // k-th smallest, and its mirror for the lower tail
    Thresholds {
        upper: sorted[k - 1],
        lower: sorted[m - k],
    }
}

fn exceeds(x: f64, t: &Thresholds, upper: bool) -> bool {
    if upper {
        x > t.upper
    } else {
        x < t.lower
    }
}

fn check_threshold(m: usize, u: f64) -> Result<usize> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::OutsideUnitInterval { value: u });
    }
    let k = threshold_rank(m, u);
    if k == 0 || k >= m || (m as f64) * (1.0 - u) < 1.0 - FLOOR_SLACK {
        return Err(Error::NoExceedances { u, m });
    }
    Ok(k)
}

/// Days whose pair lands in `corner` beyond the threshold in both
/// coordinates.
pub fn tail_event_indices(
    first: &[f64],
    second: &[f64],
    u: f64,
    corner: Corner,
) -> Result<Vec<usize>> {
    if first.len() != second.len() {
        return Err(Error::Alignment(format!(
            "lengths differ: {} vs {}",
            first.len(),
            second.len()
        )));
    }
    let m = first.len();
    let k = check_threshold(m, u)?;
    let (tx, ty) = (thresholds(first, k), thresholds(second, k));
    let (ux, uy) = (corner.first_upper(), corner.second_upper());
    let marginal_x = first.iter().filter(|&&x| exceeds(x, &tx, ux)).count();
    let marginal_y = second.iter().filter(|&&y| exceeds(y, &ty, uy)).count();
    if marginal_x == 0 || marginal_y == 0 {
        return Err(Error::NoExceedances { u, m });
    }
    Ok((0..m)
        .filter(|&i| exceeds(first[i], &tx, ux) && exceeds(second[i], &ty, uy))
        .collect())
}

/// Empirical tail dependence for one corner. The estimate is clamped to 1,
/// which it can exceed by rounding of `m (1 - u)` when `um` is not an integer.
pub fn empirical_tail(pairs: &PseudoObservations, u: f64, corner: Corner) -> Result<TailEstimate> {
    let joint = tail_event_indices(&pairs.first(), &pairs.second(), u, corner)?;
    let m = pairs.len() as f64;
    let denominator = m - u * m;
    Ok(TailEstimate {
        estimate: (joint.len() as f64 / denominator).min(1.0),
        joint_count: joint.len(),
        denominator,
    })
}

/// Estimates for all four corners.
pub fn empirical_tail_matrix(pairs: &PseudoObservations, u: f64) -> Result<TailMatrix> {
    let mut out = TailMatrix::zero();
    for corner in Corner::ALL {
        *out.get_mut(corner) = empirical_tail(pairs, u, corner)?.estimate;
    }
    Ok(out)
}

fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: a.len(),
        });
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::UndefinedCorrelation("a series has zero variance"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of the raw series, or of their ranks when `rank` is
/// set.
pub fn correlation(a: &DailySeries, b: &DailySeries, rank: bool) -> Result<f64> {
    check_aligned(a, b)?;
    if rank {
        pearson(&empirical_pit(a.values())?, &empirical_pit(b.values())?)
    } else {
        pearson(a.values(), b.values())
    }
}

/// Counts of points in square bins; `counts[row][col]` with rows indexed by
/// the second coordinate and columns by the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinCounts {
    pub width: f64,
    pub counts: Vec<Vec<u64>>,
}

impl BinCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Lower edges of the bins along either axis.
    pub fn edges(&self) -> Vec<f64> {
        (0..self.counts.len())
            .map(|i| i as f64 * self.width)
            .collect()
    }
}

pub fn bins_per_axis(width: f64) -> Result<usize> {
    if !(width > 0.0 && width <= 1.0) {
        return Err(Error::BinWidth(width));
    }
    let n = (1.0 / width).round();
    if (n * width - 1.0).abs() > 1e-9 {
        return Err(Error::BinWidth(width));
    }
    Ok(n as usize)
}

fn bin_index(x: f64, n: usize) -> usize {
    ((x * n as f64).floor() as usize).min(n - 1)
}

pub fn bin_counts(pairs: &PseudoObservations, width: f64) -> Result<BinCounts> {
    let n = bins_per_axis(width)?;
    let mut counts = vec![vec![0u64; n]; n];
    for p in pairs.pairs() {
        counts[bin_index(p.u2(), n)][bin_index(p.u1(), n)] += 1;
    }
    Ok(BinCounts { width, counts })
}

/// Log density on a regular grid of cell midpoints, row-major with rows
/// indexed by the second coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub log_density: Vec<f64>,
}

impl DensityGrid {
    pub fn resolution(&self) -> usize {
        self.u1.len()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.log_density[row * self.u1.len() + col]
    }

    /// `Σ exp(log c) · cell area`.
    pub fn total_mass(&self) -> f64 {
        let n = self.resolution() as f64;
        self.log_density.iter().map(|v| v.exp()).sum::<f64>() / (n * n)
    }

    /// Relabels the axes in physical units. When both tables carry
    /// densities the joint log density `ln c + ln f_X + ln f_Y` is returned
    /// alongside.
    pub fn remapped(&self, x: &QuantileTable, y: &QuantileTable) -> Result<RemappedGrid> {
        let xa = remap_axis(&self.u1, x)?;
        let ya = remap_axis(&self.u2, y)?;
        let joint = match (&xa.ln_density, &ya.ln_density) {
            (Some(fx), Some(fy)) => Some(
                self.log_density
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let (r, col) = (i / self.u1.len(), i % self.u1.len());
                        c + fx[col] + fy[r]
                    })
                    .collect(),
            ),
            _ => None,
        };
        Ok(RemappedGrid {
            x: xa,
            y: ya,
            joint_log_density: joint,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemappedGrid {
    pub x: RemappedAxis,
    pub y: RemappedAxis,
    pub joint_log_density: Option<Vec<f64>>,
}

pub fn grid_midpoints(resolution: usize) -> Vec<f64> {
    let n = resolution as f64;
    (0..resolution).map(|i| (i as f64 + 0.5) / n).collect()
}

pub fn density_grid(mix: &RotatedMixture, resolution: usize) -> Result<DensityGrid> {
    if resolution < 2 {
        return Err(Error::Config(format!(
            "grid resolution must be at least 2, got {resolution}"
        )));
    }
    let axis = grid_midpoints(resolution);
    let mut log_density = Vec::with_capacity(resolution * resolution);
    for &v in &axis {
        for &u in &axis {
            log_density.push(mix.log_density(UnitPair::new(u, v)?)?);
        }
    }
    Ok(DensityGrid {
        u1: axis.clone(),
        u2: axis,
        log_density,
    })
}

/// Daily snapshots of an auxiliary field on a fixed `nx × ny` grid,
/// row-major with rows along y.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSeries {
    pub nx: usize,
    pub ny: usize,
    pub frames: Vec<Vec<f64>>,
}

impl FieldSeries {
    pub fn new(nx: usize, ny: usize, frames: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(i) = frames.iter().position(|f| f.len() != nx * ny) {
            return Err(Error::Alignment(format!(
                "frame {i} has {} values, expected {}",
                frames[i].len(),
                nx * ny
            )));
        }
        Ok(FieldSeries { nx, ny, frames })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeResult {
    pub event_indices: Vec<usize>,
    pub event_times: Vec<TimeLabel>,
    pub n_events: usize,
    pub nx: usize,
    pub ny: usize,
    pub mean_field: Option<Vec<f64>>,
}

/// Averages `field` over the days counted in the numerator of the
/// empirical tail estimate for `corner`.
pub fn composite(
    a: &DailySeries,
    b: &DailySeries,
    u: f64,
    corner: Corner,
    field: &FieldSeries,
) -> Result<CompositeResult> {
    check_aligned(a, b)?;
    if field.frames.len() != a.len() {
        return Err(Error::Alignment(format!(
            "field has {} days, series have {}",
            field.frames.len(),
            a.len()
        )));
    }
    let events = tail_event_indices(a.values(), b.values(), u, corner)?;
    if events.is_empty() {
        return Err(Error::EmptyComposite);
    }
    let mut mean = vec![0.0; field.nx * field.ny];
    for &i in &events {
        for (m, v) in mean.iter_mut().zip(&field.frames[i]) {
            *m += v;
        }
    }
    let n = events.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(CompositeResult {
        event_times: events.iter().map(|&i| a.times()[i]).collect(),
        n_events: events.len(),
        event_indices: events,
        nx: field.nx,
        ny: field.ny,
        mean_field: Some(mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::Family;

    fn ranks(x: &[f64], y: &[f64]) -> PseudoObservations {
        let n = x.len() as f64 + 1.0;
        PseudoObservations::new(
            x.iter()
                .zip(y)
                .map(|(a, b)| UnitPair::new(a / n, b / n).unwrap())
                .collect(),
        )
    }

    #[test]
    fn comonotone_and_antimonotone_examples() {
        let i: Vec<f64> = (1..=10).map(f64::from).collect();
        let rev: Vec<f64> = i.iter().map(|v| 11.0 - v).collect();
        let co = ranks(&i, &i);
        assert_eq!(empirical_tail(&co, 0.8, Corner::UU).unwrap().estimate, 1.0);
        assert_eq!(empirical_tail(&co, 0.8, Corner::UU).unwrap().joint_count, 2);
        let anti = ranks(&i, &rev);
        assert_eq!(
            empirical_tail(&anti, 0.8, Corner::UU).unwrap().estimate,
            0.0
        );
        assert_eq!(
            empirical_tail(&anti, 0.8, Corner::LU).unwrap().estimate,
            1.0
        );
        assert_eq!(
            empirical_tail(&anti, 0.8, Corner::UL).unwrap().estimate,
            1.0
        );
    }

    #[test]
    fn threshold_without_exceedances_errors() {
        let i: Vec<f64> = (1..=10).map(f64::from).collect();
        let co = ranks(&i, &i);
        assert!(matches!(
            empirical_tail(&co, 0.95, Corner::UU),
            Err(Error::NoExceedances { .. })
        ));
    }

    #[test]
    fn correlation_examples() {
        let a = DailySeries::unlabelled(vec![1.0, 2.0, 3.0]).unwrap();
        let b = DailySeries::unlabelled(vec![1.0, 2.0, 4.0]).unwrap();
        let neg = a.map_values(|v| -v).unwrap();
        assert!((correlation(&a, &a, false).unwrap() - 1.0).abs() < 1e-15);
        assert!((correlation(&a, &neg, false).unwrap() + 1.0).abs() < 1e-15);
        assert!((correlation(&a, &b, false).unwrap() - 0.981980506061966).abs() < 1e-12);
        assert!((correlation(&a, &b, true).unwrap() - 1.0).abs() < 1e-15);
        let flat = DailySeries::unlabelled(vec![2.0; 3]).unwrap();
        assert!(matches!(
            correlation(&a, &flat, false),
            Err(Error::UndefinedCorrelation(_))
        ));
    }

    #[test]
    fn bin_count_examples() {
        let empty = PseudoObservations::new(vec![]);
        assert_eq!(bin_counts(&empty, 0.05).unwrap().total(), 0);
        let one = PseudoObservations::new(vec![UnitPair::new(0.01, 0.99).unwrap()]);
        let b = bin_counts(&one, 0.05).unwrap();
        assert_eq!(b.counts.len(), 20);
        assert_eq!(b.counts[19][0], 1);
        assert_eq!(b.total(), 1);
        assert!(matches!(bin_counts(&one, 0.07), Err(Error::BinWidth(_))));
    }

    #[test]
    fn density_grid_examples() {
        let ind = RotatedMixture::independence(Family::Gumbel).unwrap();
        let g = density_grid(&ind, 8).unwrap();
        assert!(g.log_density.iter().all(|v| v.abs() < 1e-12));
        let uu = RotatedMixture::new(Family::Gumbel, [0.85, 0.05, 0.05, 0.05], [3.0; 4]).unwrap();
        let g = density_grid(&uu, 20).unwrap();
        let (mut best, mut arg) = (f64::NEG_INFINITY, (0, 0));
        for r in 0..20 {
            for c in 0..20 {
                if g.at(r, c) > best {
                    best = g.at(r, c);
                    arg = (r, c);
                }
            }
        }
        assert!(arg.0 >= 10 && arg.1 >= 10, "{arg:?}");
    }

    #[test]
    fn composite_examples() {
        let i: Vec<f64> = (1..=10).map(f64::from).collect();
        let a = DailySeries::unlabelled(i.clone()).unwrap();
        let rev = DailySeries::unlabelled(i.iter().map(|v| 11.0 - v).collect()).unwrap();
        let frames: Vec<Vec<f64>> = i.iter().map(|v| vec![*v, 1.0]).collect();
        let field = FieldSeries::new(2, 1, frames).unwrap();
        let c = composite(&a, &a, 0.8, Corner::UU, &field).unwrap();
        assert_eq!(c.event_indices, vec![8, 9]);
        assert_eq!(c.mean_field.unwrap(), vec![9.5, 1.0]);
        let c = composite(&a, &rev, 0.8, Corner::LU, &field).unwrap();
        assert_eq!(c.event_indices, vec![0, 1]);
        assert!(matches!(
            composite(&a, &rev, 0.8, Corner::UU, &field),
            Err(Error::EmptyComposite)
        ));
    }
}
