//! Probability integral transform to pseudo-observations, and quantile
//! tables for relabelling copula axes in physical units.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::copula::UnitPair;
use crate::error::{Error, Result};

/// Position of a daily value: the winter season it belongs to (labelled by
/// the year of its December) and the day offset within that season.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TimeLabel {
    pub year: i32,
    pub day: u32,
}

impl TimeLabel {
    pub fn new(year: i32, day: u32) -> Self {
        TimeLabel { year, day }
    }
}

/// A finite daily series with strictly increasing time labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries {
    values: Vec<f64>,
    times: Vec<TimeLabel>,
}

impl DailySeries {
    pub fn new(values: Vec<f64>, times: Vec<TimeLabel>) -> Result<Self> {
        if values.len() != times.len() {
            return Err(Error::Alignment(format!(
                "{} values but {} time labels",
                values.len(),
                times.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        if let Some(i) = times.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::Alignment(format!(
                "time labels not strictly increasing at index {}: {:?} then {:?}",
                i + 1,
                times[i],
                times[i + 1]
            )));
        }
        Ok(DailySeries { values, times })
    }

    /// Series labelled as one season with consecutive days.
    pub fn unlabelled(values: Vec<f64>) -> Result<Self> {
        let times = (0..values.len() as u32)
            .map(|d| TimeLabel::new(0, d))
            .collect();
        DailySeries::new(values, times)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn times(&self) -> &[TimeLabel] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Applies `f` to every value, keeping the labels.
    pub fn map_values<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        DailySeries::new(
            self.values.iter().map(|&v| f(v)).collect(),
            self.times.clone(),
        )
    }

    pub fn pit(&self) -> Result<Vec<f64>> {
        empirical_pit(&self.values)
    }
}

/// Ranks divided by `m + 1`, with tied values sharing their average rank.
pub fn empirical_pit(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Empty("series"));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let m = values.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let denom = (m + 1) as f64;
    let mut out = vec![0.0; m];
    let mut start = 0;
    while start < m {
        let mut end = start + 1;
        while end < m && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // ranks start+1 ..= end share their mean
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            out[i] = rank / denom;
        }
        start = end;
    }
    Ok(out)
}

/// Paired points on the open unit square, aligned in time.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoObservations {
    pairs: Vec<UnitPair>,
    clamp_count: usize,
}

impl PseudoObservations {
    pub fn new(pairs: Vec<UnitPair>) -> Self {
        PseudoObservations {
            pairs,
            clamp_count: 0,
        }
    }

    /// Accepts user-supplied coordinates in `[0, 1]`, clamping boundary
    /// values inward and counting how many points moved.
    pub fn from_coordinates(u1: &[f64], u2: &[f64]) -> Result<Self> {
        if u1.len() != u2.len() {
            return Err(Error::Alignment(format!(
                "coordinate lengths differ: {} vs {}",
                u1.len(),
                u2.len()
            )));
        }
        let mut clamp_count = 0;
        let mut pairs = Vec::with_capacity(u1.len());
        for (index, (&a, &b)) in u1.iter().zip(u2).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::NonFinite { index });
            }
            let (p, moved) = UnitPair::clamped(a, b)?;
            clamp_count += usize::from(moved);
            pairs.push(p);
        }
        Ok(PseudoObservations { pairs, clamp_count })
    }

    pub fn pairs(&self) -> &[UnitPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    /// Exchanges the roles of the two coordinates.
    pub fn swapped(&self) -> Self {
        PseudoObservations {
            pairs: self.pairs.iter().map(UnitPair::swapped).collect(),
            clamp_count: self.clamp_count,
        }
    }

    pub fn first(&self) -> Vec<f64> {
        self.pairs.iter().map(UnitPair::u1).collect()
    }

    pub fn second(&self) -> Vec<f64> {
        self.pairs.iter().map(UnitPair::u2).collect()
    }
}

/// Checks that two series share their time labels, naming the first few
/// mismatches.
pub fn check_aligned(a: &DailySeries, b: &DailySeries) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Alignment(format!(
            "series lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let offenders: Vec<String> = a
        .times()
        .iter()
        .zip(b.times())
        .enumerate()
        .filter(|(_, (x, y))| x != y)
        .take(5)
        .map(|(i, (x, y))| format!("#{i}: {x:?} vs {y:?}"))
        .collect();
    if offenders.is_empty() {
        Ok(())
    } else {
        Err(Error::Alignment(format!(
            "time labels differ at {}",
            offenders.join(", ")
        )))
    }
}

/// Rank-transforms both series and pairs them element by element.
pub fn pair_series(a: &DailySeries, b: &DailySeries) -> Result<PseudoObservations> {
    check_aligned(a, b)?;
    let ua = a.pit()?;
    let ub = b.pit()?;
    let pairs = ua
        .into_iter()
        .zip(ub)
        .map(|(x, y)| UnitPair::new(x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(PseudoObservations::new(pairs))
}

/// Tabulated marginal quantile function, optionally with the marginal
/// density at each quantile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable {
    probabilities: Vec<f64>,
    quantiles: Vec<f64>,
    densities: Option<Vec<f64>>,
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[0] < w[1])
}

impl QuantileTable {
    pub fn new(
        probabilities: Vec<f64>,
        quantiles: Vec<f64>,
        densities: Option<Vec<f64>>,
    ) -> Result<Self> {
        if probabilities.len() < 2 {
            return Err(Error::QuantileTable("need at least two rows".into()));
        }
        if quantiles.len() != probabilities.len()
            || densities
                .as_ref()
                .is_some_and(|d| d.len() != probabilities.len())
        {
            return Err(Error::QuantileTable(
                "columns have different lengths".into(),
            ));
        }
        if probabilities.iter().any(|&p| !(p > 0.0 && p < 1.0)) {
            return Err(Error::QuantileTable(
                "probabilities must lie in (0, 1)".into(),
            ));
        }
        if !strictly_increasing(&probabilities) || !strictly_increasing(&quantiles) {
            return Err(Error::QuantileTable(
                "probability and quantile columns must be strictly increasing".into(),
            ));
        }
        if let Some(d) = &densities {
            if d.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
                return Err(Error::QuantileTable("densities must be positive".into()));
            }
        }
        Ok(QuantileTable {
            probabilities,
            quantiles,
            densities,
        })
    }

    /// Parses `probability,quantile[,density]` rows. A header row is allowed.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut cols: [Vec<f64>; 3] = Default::default();
        let mut width = None;
        for (line, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(str::parse::<f64>).collect();
            let row = match parsed {
                Ok(row) => row,
                Err(_) if line == 0 => continue,
                Err(e) => return Err(Error::Parse(format!("row {}: {e}", line + 1))),
            };
            if !(2..=3).contains(&row.len()) || width.is_some_and(|w| w != row.len()) {
                return Err(Error::Parse(format!(
                    "row {}: expected a consistent 2 or 3 columns",
                    line + 1
                )));
            }
            width = Some(row.len());
            for (c, v) in row.into_iter().enumerate() {
                cols[c].push(v);
            }
        }
        let [p, q, d] = cols;
        QuantileTable::new(p, q, if d.is_empty() { None } else { Some(d) })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.quantiles
    }

    pub fn densities(&self) -> Option<&[f64]> {
        self.densities.as_deref()
    }

    fn locate(&self, p: f64) -> Result<(usize, f64)> {
        let probs = &self.probabilities;
        let (lo, hi) = (probs[0], probs[probs.len() - 1]);
        if !(p >= lo && p <= hi) {
            return Err(Error::Extrapolation { value: p, lo, hi });
        }
        let j = probs.partition_point(|&x| x <= p).clamp(1, probs.len() - 1);
        let t = (p - probs[j - 1]) / (probs[j] - probs[j - 1]);
        Ok((j, t))
    }

    /// Linear interpolation of the quantile function.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        let (j, t) = self.locate(p)?;
        Ok(self.quantiles[j - 1] + t * (self.quantiles[j] - self.quantiles[j - 1]))
    }

    /// Log of the interpolated marginal density at probability `p`.
    pub fn ln_density(&self, p: f64) -> Result<Option<f64>> {
        let Some(d) = &self.densities else {
            return Ok(None);
        };
        let (j, t) = self.locate(p)?;
        Ok(Some((d[j - 1] + t * (d[j] - d[j - 1])).ln()))
    }
}

/// An axis relabelled in physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct RemappedAxis {
    pub values: Vec<f64>,
    /// `ln f` at each grid point, when the table carries densities.
    pub ln_density: Option<Vec<f64>>,
}

pub fn remap_axis(grid: &[f64], table: &QuantileTable) -> Result<RemappedAxis> {
    let values = grid
        .iter()
        .map(|&p| table.quantile(p))
        .collect::<Result<Vec<_>>>()?;
    let ln_density = if table.densities.is_some() {
        Some(
            grid.iter()
                .map(|&p| table.ln_density(p).map(|d| d.expect("table has densities")))
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(RemappedAxis { values, ln_density })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pit_examples() {
        assert_eq!(
            empirical_pit(&[3.0, 1.0, 2.0]).unwrap(),
            vec![0.75, 0.25, 0.5]
        );
        assert_eq!(empirical_pit(&[42.0]).unwrap(), vec![0.5]);
        assert_eq!(
            empirical_pit(&[1.0, 1.0, 2.0]).unwrap(),
            vec![0.375, 0.375, 0.75]
        );
    }

    #[test]
    fn pit_rejects_non_finite_with_index() {
        assert_eq!(
            empirical_pit(&[1.0, f64::NAN, 2.0]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
        assert!(empirical_pit(&[]).is_err());
    }

    #[test]
    fn pair_series_examples() {
        let a = DailySeries::unlabelled(vec![3.0, 1.0, 2.0]).unwrap();
        let b = DailySeries::unlabelled(vec![1.0, 2.0, 3.0]).unwrap();
        let obs = pair_series(&a, &b).unwrap();
        let got: Vec<(f64, f64)> = obs.pairs().iter().map(|p| (p.u1(), p.u2())).collect();
        assert_eq!(got, vec![(0.75, 0.25), (0.25, 0.5), (0.5, 0.75)]);

        let diag = pair_series(&a, &a).unwrap();
        assert!(diag.pairs().iter().all(|p| p.u1() == p.u2()));

        let short = DailySeries::unlabelled(vec![1.0, 2.0]).unwrap();
        assert!(matches!(pair_series(&a, &short), Err(Error::Alignment(_))));
    }

    #[test]
    fn misaligned_labels_are_listed() {
        let a = DailySeries::new(
            vec![1.0, 2.0],
            vec![TimeLabel::new(1979, 0), TimeLabel::new(1979, 1)],
        )
        .unwrap();
        let b = DailySeries::new(
            vec![1.0, 2.0],
            vec![TimeLabel::new(1979, 0), TimeLabel::new(1979, 2)],
        )
        .unwrap();
        let err = pair_series(&a, &b).unwrap_err().to_string();
        assert!(err.contains("#1"), "{err}");
    }

    #[test]
    fn series_validation() {
        assert!(DailySeries::new(
            vec![1.0, 2.0],
            vec![TimeLabel::new(0, 1), TimeLabel::new(0, 1)]
        )
        .is_err());
        assert_eq!(
            DailySeries::unlabelled(vec![1.0, f64::INFINITY]).unwrap_err(),
            Error::NonFinite { index: 1 }
        );
    }

    #[test]
    fn remap_examples() {
        let id = QuantileTable::new(vec![0.1, 0.5, 0.9], vec![0.1, 0.5, 0.9], None).unwrap();
        let out = remap_axis(&[0.1, 0.3, 0.77], &id).unwrap();
        for (a, b) in out.values.iter().zip([0.1, 0.3, 0.77]) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = QuantileTable::new(vec![0.25, 0.75], vec![-10.0, 10.0], None).unwrap();
        assert_eq!(t.quantile(0.5).unwrap(), 0.0);
        assert!(matches!(t.quantile(0.8), Err(Error::Extrapolation { .. })));
    }

    #[test]
    fn quantile_table_csv() {
        let text = "probability,quantile,density\n0.1,-5,0.02\n0.5,0,0.1\n0.9,5,0.02\n";
        let t = QuantileTable::from_csv(text.as_bytes()).unwrap();
        assert_eq!(t.quantiles(), &[-5.0, 0.0, 5.0]);
        let axis = remap_axis(&[0.3], &t).unwrap();
        assert!((axis.values[0] + 2.5).abs() < 1e-12);
        assert!((axis.ln_density.unwrap()[0] - 0.06f64.ln()).abs() < 1e-12);
        assert!(QuantileTable::from_csv("0.1,1\n0.2,0.5\n".as_bytes()).is_err());
        assert!(QuantileTable::from_csv("0.1,1,2\n0.2,3\n".as_bytes()).is_err());
    }
}
