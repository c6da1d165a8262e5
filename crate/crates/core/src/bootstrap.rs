//! Year-block bootstrap stratified by decade, with percentile intervals for
//! the fitted tail-dependence matrix.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{Corner, TailMatrix};
use crate::error::{Error, Result};
use crate::fit::{fit, FitConfig};
use crate::io::fmt_f64;
use crate::marginal::{check_aligned, pair_series, DailySeries, TimeLabel};
use crate::rng::{derive_seed, seeded_rng};
use crate::spatial::GridBoxSet;

/// Share of failed replicates above which an interval is flagged.
pub const MAX_FAILED_SHARE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub n_replicates: usize,
    /// Inclusive year ranges.
    pub strata: Vec<(i32, i32)>,
    pub level: f64,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        BootstrapSpec {
            n_replicates: 200,
            strata: vec![(1979, 1989), (1990, 1999), (2000, 2009), (2010, 2022)],
            level: 0.95,
            seed: 0,
        }
    }
}

impl BootstrapSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::Config(format!(
                "level {} is not in (0, 1)",
                self.level
            )));
        }
        if self.strata.is_empty() {
            return Err(Error::Config("no strata".into()));
        }
        let mut sorted = self.strata.clone();
        sorted.sort();
        for &(a, b) in &sorted {
            if a > b {
                return Err(Error::Config(format!("stratum {a}-{b} is empty")));
            }
        }
        if let Some(w) = sorted.windows(2).find(|w| w[1].0 <= w[0].1) {
            return Err(Error::Config(format!(
                "strata {}-{} and {}-{} overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
        Ok(())
    }

    fn stratum_of(&self, year: i32) -> Result<usize> {
        self.strata
            .iter()
            .position(|&(a, b)| (a..=b).contains(&year))
            .ok_or_else(|| Error::Config(format!("year {year} lies outside every stratum")))
    }
}

/// Years drawn with replacement within each stratum, keeping every
/// stratum's count. `years` lists the distinct years present.
pub fn resample_years(years: &[i32], spec: &BootstrapSpec, replicate: usize) -> Result<Vec<i32>> {
    spec.validate()?;
    let mut by_stratum: BTreeMap<usize, Vec<i32>> = BTreeMap::new();
    for &y in years {
        by_stratum.entry(spec.stratum_of(y)?).or_default().push(y);
    }
    let mut rng = seeded_rng(derive_seed(spec.seed, "bootstrap", replicate as u64));
    let mut out = Vec::with_capacity(years.len());
    for members in by_stratum.values() {
        for _ in 0..members.len() {
            out.push(members[rng.random_range(0..members.len())]);
        }
    }
    Ok(out)
}

/// Linear interpolation between order statistics of sorted data.
pub fn percentile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct TailInterval {
    pub lower: TailMatrix,
    pub upper: TailMatrix,
    pub n_replicates: usize,
    pub n_failed: usize,
    pub unreliable: bool,
    /// Successful replicate estimates in replicate order.
    pub estimates: Vec<TailMatrix>,
}

impl TailInterval {
    pub fn contains(&self, corner: Corner, value: f64) -> bool {
        self.lower.get(corner) <= value && value <= self.upper.get(corner)
    }
}

// Day indices grouped by season year, in time order.
fn year_blocks(times: &[TimeLabel]) -> BTreeMap<i32, Vec<usize>> {
    let mut blocks: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, t) in times.iter().enumerate() {
        blocks.entry(t.year).or_default().push(i);
    }
    blocks
}

/// Series rebuilt from the given years, each contributing its whole
/// season in the order drawn. Repeated years get fresh labels.
pub fn assemble_years(series: &DailySeries, years: &[i32]) -> Result<DailySeries> {
    let blocks = year_blocks(series.times());
    let mut values = Vec::new();
    let mut times = Vec::new();
    for (slot, y) in years.iter().enumerate() {
        let block = blocks
            .get(y)
            .ok_or_else(|| Error::Config(format!("year {y} is not in the series")))?;
        for &i in block {
            values.push(series.values()[i]);
            times.push(TimeLabel::new(slot as i32, series.times()[i].day));
        }
    }
    DailySeries::new(values, times)
}

fn replicate_estimate(
    a: &DailySeries,
    b: &DailySeries,
    years: &[i32],
    spec: &BootstrapSpec,
    fitcfg: &FitConfig,
    replicate: usize,
) -> Result<TailMatrix> {
    let drawn = resample_years(years, spec, replicate)?;
    let ra = assemble_years(a, &drawn)?;
    let rb = assemble_years(b, &drawn)?;
    let obs = pair_series(&ra, &rb)?;
    Ok(fit(&obs, fitcfg)?.mixture.tail_matrix())
}

/// Percentile interval of the fitted tail matrix for the pair `(a, b)`,
/// with `a` as the first coordinate.
pub fn bootstrap_tail_ci(
    a: &DailySeries,
    b: &DailySeries,
    spec: &BootstrapSpec,
    fitcfg: &FitConfig,
) -> Result<TailInterval> {
    spec.validate()?;
    check_aligned(a, b)?;
    let years: Vec<i32> = year_blocks(a.times()).keys().copied().collect();
    for &y in &years {
        spec.stratum_of(y)?;
    }
    let results: Vec<Result<TailMatrix>> = (0..spec.n_replicates)
        .into_par_iter()
        .map(|r| replicate_estimate(a, b, &years, spec, fitcfg, r))
        .collect();
    let mut estimates = Vec::with_capacity(results.len());
    let mut n_failed = 0;
    for r in results {
        match r {
            Ok(m) => estimates.push(m),
            Err(Error::Config(msg)) => return Err(Error::Config(msg)),
            Err(_) => n_failed += 1,
        }
    }
    if estimates.is_empty() {
        return Err(Error::Empty("successful bootstrap replicates"));
    }
    let alpha = 1.0 - spec.level;
    let mut lower = TailMatrix::zero();
    let mut upper = TailMatrix::zero();
    for corner in Corner::ALL {
        let mut v: Vec<f64> = estimates.iter().map(|m| m.get(corner)).collect();
        v.sort_by(f64::total_cmp);
        *lower.get_mut(corner) = percentile_type7(&v, alpha / 2.0);
        *upper.get_mut(corner) = percentile_type7(&v, 1.0 - alpha / 2.0);
    }
    Ok(TailInterval {
        lower,
        upper,
        n_replicates: spec.n_replicates,
        n_failed,
        unreliable: n_failed as f64 > MAX_FAILED_SHARE * spec.n_replicates as f64,
        estimates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxInterval {
    pub interval: Option<TailInterval>,
    pub error: Option<String>,
}

/// Bootstrap intervals between the base box and every retained box.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMap {
    pub base_box: usize,
    pub entries: Vec<BoxInterval>,
}

pub fn lower_bound_map(
    set: &GridBoxSet,
    base: usize,
    spec: &BootstrapSpec,
    fitcfg: &FitConfig,
) -> Result<IntervalMap> {
    let base_series = &set
        .boxes
        .get(base)
        .ok_or_else(|| Error::Config(format!("base box index {base} out of range")))?
        .series;
    let entries = set
        .boxes
        .iter()
        .map(
            |b| match bootstrap_tail_ci(&b.series, base_series, spec, fitcfg) {
                Ok(iv) => Ok(BoxInterval {
                    interval: Some(iv),
                    error: None,
                }),
                Err(Error::Config(msg)) => Err(Error::Config(msg)),
                Err(e) => Ok(BoxInterval {
                    interval: None,
                    error: Some(e.to_string()),
                }),
            },
        )
        .collect::<Result<Vec<_>>>()?;
    Ok(IntervalMap {
        base_box: base,
        entries,
    })
}

impl IntervalMap {
    /// One row per box and corner: box, corner, lower, upper,
    /// n_failed_replicates, unreliable.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "box,corner,lower,upper,n_failed_replicates,unreliable")?;
        for (k, e) in self.entries.iter().enumerate() {
            for corner in [Corner::LU, Corner::UU, Corner::LL, Corner::UL] {
                match &e.interval {
                    Some(iv) => writeln!(
                        w,
                        "{k},{corner},{},{},{},{}",
                        fmt_f64(iv.lower.get(corner)),
                        fmt_f64(iv.upper.get(corner)),
                        iv.n_failed,
                        iv.unreliable
                    )?,
                    None => writeln!(w, "{k},{corner},,,,true")?,
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn winters() -> Vec<i32> {
        (1979..=2022).collect()
    }

    #[test]
    fn stratum_counts_preserved() {
        let spec = BootstrapSpec::default();
        for r in 0..20 {
            let drawn = resample_years(&winters(), &spec, r).unwrap();
            let counts: Vec<usize> = spec
                .strata
                .iter()
                .map(|&(a, b)| drawn.iter().filter(|y| (a..=b).contains(*y)).count())
                .collect();
            assert_eq!(counts, vec![11, 10, 10, 13]);
        }
    }

    #[test]
    fn determinism_per_replicate() {
        let spec = BootstrapSpec::default();
        let a = resample_years(&winters(), &spec, 3).unwrap();
        assert_eq!(a, resample_years(&winters(), &spec, 3).unwrap());
        assert_ne!(a, resample_years(&winters(), &spec, 4).unwrap());
    }

    #[test]
    fn single_year_stratum() {
        let spec = BootstrapSpec {
            strata: vec![(2000, 2000), (2001, 2010)],
            ..Default::default()
        };
        let drawn = resample_years(&[2000, 2001, 2002], &spec, 0).unwrap();
        assert_eq!(drawn.iter().filter(|&&y| y == 2000).count(), 1);
    }

    #[test]
    fn year_outside_strata() {
        let spec = BootstrapSpec::default();
        assert!(matches!(
            resample_years(&[1950], &spec, 0),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn spec_validation() {
        let mut s = BootstrapSpec::default();
        s.strata.push((1985, 1986));
        assert!(s.validate().is_err());
        let s = BootstrapSpec {
            level: 1.0,
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn type7_percentiles() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_type7(&v, 0.0), 1.0);
        assert_eq!(percentile_type7(&v, 1.0), 5.0);
        assert_eq!(percentile_type7(&v, 0.5), 3.0);
        assert!((percentile_type7(&v, 0.025) - 1.1).abs() < 1e-12);
        assert_eq!(percentile_type7(&[7.0; 3], 0.975), 7.0);
    }
}
