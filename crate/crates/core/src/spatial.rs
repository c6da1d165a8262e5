//! Coarse gridboxes over gridded daily data and pairwise dependence maps.

use std::io::{BufRead, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{Corner, TailMatrix};
use crate::empirical::{correlation, empirical_tail_matrix};
use crate::error::{Error, Result};
use crate::fit::{fit, FitConfig};
use crate::io::fmt_f64;
use crate::marginal::{pair_series, DailySeries, TimeLabel};

pub const BOX_LON_SPAN: f64 = 6.0;
pub const BOX_LAT_SPAN: f64 = 4.0;
pub const DEFAULT_OFFSET: f64 = 0.1;
pub const DEFAULT_LAND_THRESHOLD: f64 = 0.85;
const EDGE_TOL: f64 = 1e-9;
const BINARY_MAGIC: &[u8; 8] = b"TCGRID1\0";

/// Regular longitude/latitude grid. `lon0`, `lat0` are the centers of the
/// first cell; values are stored time-major, then by latitude row, with
/// longitude varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub n_lon: usize,
    pub n_lat: usize,
    pub n_time: usize,
    pub lon0: f64,
    pub lat0: f64,
    pub dlon: f64,
    pub dlat: f64,
}

impl GridMeta {
    pub fn cells(&self) -> usize {
        self.n_lon * self.n_lat
    }

    pub fn lon(&self, i: usize) -> f64 {
        self.lon0 + i as f64 * self.dlon
    }

    pub fn lat(&self, j: usize) -> f64 {
        self.lat0 + j as f64 * self.dlat
    }

    fn same_grid(&self, o: &GridMeta) -> bool {
        self.n_lon == o.n_lon
            && self.n_lat == o.n_lat
            && (self.lon0 - o.lon0).abs() < EDGE_TOL
            && (self.lat0 - o.lat0).abs() < EDGE_TOL
            && (self.dlon - o.dlon).abs() < EDGE_TOL
            && (self.dlat - o.dlat).abs() < EDGE_TOL
    }

    fn validate(&self) -> Result<()> {
        if self.n_lon == 0 || self.n_lat == 0 {
            return Err(Error::Parse("grid has no cells".into()));
        }
        if !(self.dlon > 0.0 && self.dlat.abs() > 0.0) {
            return Err(Error::Parse("grid spacing must be nonzero".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GriddedData {
    pub meta: GridMeta,
    pub values: Vec<f64>,
    pub times: Vec<TimeLabel>,
}

impl GriddedData {
    pub fn new(meta: GridMeta, values: Vec<f64>, times: Option<Vec<TimeLabel>>) -> Result<Self> {
        meta.validate()?;
        let expected = meta.cells() * meta.n_time;
        if values.len() != expected {
            return Err(Error::Parse(format!(
                "expected {expected} values for the declared grid, found {}",
                values.len()
            )));
        }
        let times = match times {
            Some(t) if t.len() != meta.n_time => {
                return Err(Error::Alignment(format!(
                    "{} time labels for {} time steps",
                    t.len(),
                    meta.n_time
                )))
            }
            Some(t) => t,
            None => (0..meta.n_time as u32)
                .map(|d| TimeLabel::new(0, d))
                .collect(),
        };
        Ok(GriddedData {
            meta,
            values,
            times,
        })
    }

    pub fn value(&self, t: usize, i_lon: usize, j_lat: usize) -> f64 {
        self.values[t * self.meta.cells() + j_lat * self.meta.n_lon + i_lon]
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let c = self.meta.cells();
        &self.values[t * c..(t + 1) * c]
    }

    /// Text form: a header line naming the seven grid fields, one line with
    /// their values, then one line of values per time step.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (meta, values) = read_grid_text(reader)?;
        GriddedData::new(meta, values, None)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        write_grid_header(&mut w, &self.meta)?;
        for t in 0..self.meta.n_time {
            write_row(&mut w, self.frame(t))?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut reader: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        reader.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Parse("not a binary grid file".into()));
        }
        let mut word = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let n_lon = next_u64(&mut reader)? as usize;
        let n_lat = next_u64(&mut reader)? as usize;
        let n_time = next_u64(&mut reader)? as usize;
        let mut floats = [0.0; 4];
        for f in floats.iter_mut() {
            *f = f64::from_bits(next_u64(&mut reader)?);
        }
        let meta = GridMeta {
            n_lon,
            n_lat,
            n_time,
            lon0: floats[0],
            lat0: floats[1],
            dlon: floats[2],
            dlat: floats[3],
        };
        meta.validate()?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != meta.cells() * n_time * 8 {
            return Err(Error::Parse(format!(
                "binary grid holds {} bytes of values, expected {}",
                bytes.len(),
                meta.cells() * n_time * 8
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        GriddedData::new(meta, values, None)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let m = &self.meta;
        w.write_all(BINARY_MAGIC)?;
        for v in [m.n_lon as u64, m.n_lat as u64, m.n_time as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [m.lon0, m.lat0, m.dlon, m.dlat] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads either format, detected from the leading bytes.
    pub fn read_any(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(BINARY_MAGIC) {
            GriddedData::read_binary(bytes)
        } else {
            GriddedData::read_csv(bytes)
        }
    }

    pub fn with_times(mut self, times: Vec<TimeLabel>) -> Result<Self> {
        if times.len() != self.meta.n_time {
            return Err(Error::Alignment(format!(
                "{} time labels for {} time steps",
                times.len(),
                self.meta.n_time
            )));
        }
        self.times = times;
        Ok(self)
    }
}

/// Time labels as `year,day` rows, with an optional header.
pub fn read_times_csv<R: Read>(reader: R) -> Result<Vec<TimeLabel>> {
    let mut out = Vec::new();
    for (n, line) in std::io::BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [y, d] => y.parse::<i32>().ok().zip(d.parse::<u32>().ok()),
            _ => None,
        };
        match parsed {
            Some((year, day)) => out.push(TimeLabel::new(year, day)),
            None if n == 0 => continue,
            None => return Err(Error::Parse(format!("times line {}: {line:?}", n + 1))),
        }
    }
    Ok(out)
}

pub fn write_times_csv<W: Write>(mut w: W, times: &[TimeLabel]) -> Result<()> {
    writeln!(w, "year,day")?;
    for t in times {
        writeln!(w, "{},{}", t.year, t.day)?;
    }
    Ok(())
}

const HEADER_FIELDS: [&str; 7] = ["n_lon", "n_lat", "n_time", "lon0", "lat0", "dlon", "dlat"];

fn write_grid_header<W: Write>(w: &mut W, m: &GridMeta) -> Result<()> {
    writeln!(w, "{}", HEADER_FIELDS.join(","))?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        m.n_lon,
        m.n_lat,
        m.n_time,
        fmt_f64(m.lon0),
        fmt_f64(m.lat0),
        fmt_f64(m.dlon),
        fmt_f64(m.dlat)
    )?;
    Ok(())
}

fn write_row<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let row: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    writeln!(w, "{}", row.join(","))?;
    Ok(())
}

fn read_grid_text<R: Read>(reader: R) -> Result<(GridMeta, Vec<f64>)> {
    let mut lines = std::io::BufReader::new(reader).lines().enumerate();
    let mut next_line = || -> Result<Option<(usize, String)>> {
        for (n, line) in lines.by_ref() {
            let line = line?;
            if !line.trim().is_empty() {
                return Ok(Some((n + 1, line)));
            }
        }
        Ok(None)
    };
    let (_, header) = next_line()?.ok_or_else(|| Error::Parse("empty grid file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    if names != HEADER_FIELDS {
        return Err(Error::Parse(format!(
            "line 1: expected header {}",
            HEADER_FIELDS.join(",")
        )));
    }
    let (n, meta_line) =
        next_line()?.ok_or_else(|| Error::Parse("missing grid metadata".into()))?;
    let f: Vec<&str> = meta_line.split(',').map(str::trim).collect();
    let bad = |what: &str| Error::Parse(format!("line {n}: bad {what}"));
    if f.len() != 7 {
        return Err(bad("metadata field count"));
    }
    let int = |i: usize| f[i].parse::<usize>().map_err(|_| bad(HEADER_FIELDS[i]));
    let real = |i: usize| f[i].parse::<f64>().map_err(|_| bad(HEADER_FIELDS[i]));
    let meta = GridMeta {
        n_lon: int(0)?,
        n_lat: int(1)?,
        n_time: int(2)?,
        lon0: real(3)?,
        lat0: real(4)?,
        dlon: real(5)?,
        dlat: real(6)?,
    };
    let mut values = Vec::with_capacity(meta.cells() * meta.n_time);
    while let Some((n, line)) = next_line()? {
        for field in line.split(',') {
            values.push(
                field
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {n}: {e}")))?,
            );
        }
    }
    Ok((meta, values))
}

/// Land flags on the data grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LandMask {
    pub meta: GridMeta,
    pub land: Vec<bool>,
}

impl LandMask {
    pub fn new(meta: GridMeta, land: Vec<bool>) -> Result<Self> {
        meta.validate()?;
        if land.len() != meta.cells() {
            return Err(Error::Parse(format!(
                "land mask has {} cells, grid has {}",
                land.len(),
                meta.cells()
            )));
        }
        Ok(LandMask { meta, land })
    }

    /// Same text layout as gridded data, with a single time step of 0/1.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let (mut meta, values) = read_grid_text(reader)?;
        if values.len() != meta.cells() {
            return Err(Error::Parse(format!(
                "land mask has {} values, grid has {} cells",
                values.len(),
                meta.cells()
            )));
        }
        if let Some(v) = values.iter().find(|v| **v != 0.0 && **v != 1.0) {
            return Err(Error::Parse(format!("land mask value {v} is not 0 or 1")));
        }
        meta.n_time = 1;
        LandMask::new(meta, values.iter().map(|v| *v == 1.0).collect())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut meta = self.meta;
        meta.n_time = 1;
        write_grid_header(&mut w, &meta)?;
        let row: Vec<&str> = self
            .land
            .iter()
            .map(|&l| if l { "1" } else { "0" })
            .collect();
        writeln!(w, "{}", row.join(","))?;
        Ok(())
    }
}

/// The coarse box lattice: box `(i, j)` spans
/// `[lon_min + 6i, lon_min + 6(i+1)] × [lat_min + 4j, lat_min + 4(j+1)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxLattice {
    pub lon_min: f64,
    pub lat_min: f64,
    pub n_lon: usize,
    pub n_lat: usize,
}

impl BoxLattice {
    /// Lattice whose edges sit `offset` degrees west of integer longitudes
    /// and north of integer latitudes, so that an anchor of (-165, 65) gives
    /// a corner at (-165.1, 65.1).
    pub fn anchored(
        lon_anchor: i32,
        lat_anchor: i32,
        offset: f64,
        n_lon: usize,
        n_lat: usize,
    ) -> Self {
        BoxLattice {
            lon_min: lon_anchor as f64 - offset,
            lat_min: lat_anchor as f64 + offset,
            n_lon,
            n_lat,
        }
    }

    pub fn bounds(&self, i: usize, j: usize) -> BoxBounds {
        let lon_min = self.lon_min + i as f64 * BOX_LON_SPAN;
        let lat_min = self.lat_min + j as f64 * BOX_LAT_SPAN;
        BoxBounds {
            lon_min,
            lon_max: lon_min + BOX_LON_SPAN,
            lat_min,
            lat_max: lat_min + BOX_LAT_SPAN,
        }
    }

    // Position of x on a lattice axis; errors when x sits on an edge.
    fn axis_index(x: f64, origin: f64, span: f64, n: usize, what: &str) -> Result<Option<usize>> {
        let t = (x - origin) / span;
        if (t - t.round()).abs() * span < EDGE_TOL {
            let k = t.round();
            if k >= 0.0 && k <= n as f64 {
                return Err(Error::Tiling(format!(
                    "cell center {what} = {x} lies on a box edge"
                )));
            }
        }
        if t < 0.0 || t >= n as f64 {
            return Ok(None);
        }
        Ok(Some(t.floor() as usize))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    pub lon_min: f64,
    pub lon_max: f64,
    pub lat_min: f64,
    pub lat_max: f64,
}

impl BoxBounds {
    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.lon_min + self.lon_max),
            0.5 * (self.lat_min + self.lat_max),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBox {
    pub i_lon: usize,
    pub j_lat: usize,
    pub bounds: BoxBounds,
    pub land_fraction: f64,
    pub n_cells: usize,
    pub series: DailySeries,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregationOptions {
    /// Boxes are kept when their land fraction is strictly above this.
    pub land_threshold: f64,
    /// Weight land cells by the cosine of their latitude.
    pub cos_lat_weights: bool,
}

impl Default for AggregationOptions {
    fn default() -> Self {
        AggregationOptions {
            land_threshold: DEFAULT_LAND_THRESHOLD,
            cos_lat_weights: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridBoxSet {
    pub lattice: BoxLattice,
    pub grid: GridMeta,
    pub boxes: Vec<GridBox>,
    /// Lattice boxes that failed the land rule, with their land fraction.
    pub discarded: Vec<(usize, usize, f64)>,
}

impl GridBoxSet {
    pub fn find(&self, i_lon: usize, j_lat: usize) -> Option<usize> {
        self.boxes
            .iter()
            .position(|b| b.i_lon == i_lon && b.j_lat == j_lat)
    }

    /// Index of the retained box containing the point.
    pub fn locate(&self, lon: f64, lat: f64) -> Option<usize> {
        self.boxes.iter().position(|b| {
            lon >= b.bounds.lon_min
                && lon < b.bounds.lon_max
                && lat >= b.bounds.lat_min
                && lat < b.bounds.lat_max
        })
    }

    /// Retained box whose center is closest to the point.
    pub fn nearest(&self, lon: f64, lat: f64) -> Option<usize> {
        self.boxes
            .iter()
            .enumerate()
            .min_by(|a, b| {
                let d = |g: &GridBox| {
                    let (x, y) = g.bounds.center();
                    (x - lon).powi(2) + (y - lat).powi(2)
                };
                d(a.1).total_cmp(&d(b.1))
            })
            .map(|(i, _)| i)
    }

    /// Resolves a lattice position to a retained box, naming the nearest
    /// retained box when it was discarded.
    pub fn resolve(&self, i_lon: usize, j_lat: usize) -> Result<usize> {
        if let Some(k) = self.find(i_lon, j_lat) {
            return Ok(k);
        }
        let (lon, lat) = self.lattice.bounds(i_lon, j_lat).center();
        let hint = match self.nearest(lon, lat) {
            Some(k) => format!(
                "; nearest retained box is ({}, {})",
                self.boxes[k].i_lon, self.boxes[k].j_lat
            ),
            None => String::new(),
        };
        Err(Error::Config(format!(
            "box ({i_lon}, {j_lat}) is not retained{hint}"
        )))
    }
}

/// Groups native cells into lattice boxes by their centers and averages the
/// land cells of every box that passes the land rule.
pub fn build_gridboxes(
    data: &GriddedData,
    mask: &LandMask,
    lattice: BoxLattice,
    opts: AggregationOptions,
) -> Result<GridBoxSet> {
    if !data.meta.same_grid(&mask.meta) {
        return Err(Error::Alignment(
            "land mask grid differs from the data grid".into(),
        ));
    }
    if let Some(index) = data.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    let g = &data.meta;
    let n_boxes = lattice.n_lon * lattice.n_lat;
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_boxes];
    let mut totals = vec![0usize; n_boxes];
    for j in 0..g.n_lat {
        let Some(bj) = BoxLattice::axis_index(
            g.lat(j),
            lattice.lat_min,
            BOX_LAT_SPAN,
            lattice.n_lat,
            "latitude",
        )?
        else {
            continue;
        };
        for i in 0..g.n_lon {
            let Some(bi) = BoxLattice::axis_index(
                g.lon(i),
                lattice.lon_min,
                BOX_LON_SPAN,
                lattice.n_lon,
                "longitude",
            )?
            else {
                continue;
            };
            let b = bj * lattice.n_lon + bi;
            let cell = j * g.n_lon + i;
            totals[b] += 1;
            if mask.land[cell] {
                members[b].push(cell);
            }
        }
    }
    let built: Vec<std::result::Result<GridBox, (usize, usize, f64)>> = (0..n_boxes)
        .into_par_iter()
        .map(|b| {
            let (bi, bj) = (b % lattice.n_lon, b / lattice.n_lon);
            let frac = if totals[b] == 0 {
                0.0
            } else {
                members[b].len() as f64 / totals[b] as f64
            };
            if !(frac > opts.land_threshold) || members[b].is_empty() {
                return Err((bi, bj, frac));
            }
            let weights: Vec<f64> = members[b]
                .iter()
                .map(|&c| {
                    if opts.cos_lat_weights {
                        g.lat(c / g.n_lon).to_radians().cos()
                    } else {
                        1.0
                    }
                })
                .collect();
            let wsum: f64 = weights.iter().sum();
            let values = (0..g.n_time)
                .map(|t| {
                    let frame = data.frame(t);
                    members[b]
                        .iter()
                        .zip(&weights)
                        .map(|(&c, w)| w * frame[c])
                        .sum::<f64>()
                        / wsum
                })
                .collect();
            Ok(GridBox {
                i_lon: bi,
                j_lat: bj,
                bounds: lattice.bounds(bi, bj),
                land_fraction: frac,
                n_cells: totals[b],
                series: DailySeries::new(values, data.times.clone())
                    .expect("finite values with validated labels"),
            })
        })
        .collect();
    let mut boxes = Vec::new();
    let mut discarded = Vec::new();
    for r in built {
        match r {
            Ok(b) => boxes.push(b),
            Err(d) => discarded.push(d),
        }
    }
    Ok(GridBoxSet {
        lattice,
        grid: *g,
        boxes,
        discarded,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairStatistics {
    pub correlation: f64,
    /// Fitted tail matrix, absent in empirical-only runs or when the fit
    /// failed.
    pub tail: Option<TailMatrix>,
    pub converged: bool,
    pub at_theta_cap: bool,
    pub fit_error: Option<String>,
    pub empirical_tail: Option<TailMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapOptions {
    pub threshold: f64,
    pub empirical_only: bool,
    pub rank_correlation: bool,
    /// Put the base box first instead of the target box.
    pub base_first: bool,
}

impl Default for MapOptions {
    fn default() -> Self {
        MapOptions {
            threshold: crate::empirical::DEFAULT_THRESHOLD,
            empirical_only: false,
            rank_correlation: false,
            base_first: false,
        }
    }
}

/// Statistics for the pair `(x, y)` with `x` as the first coordinate.
pub fn pair_statistics(
    x: &DailySeries,
    y: &DailySeries,
    fitcfg: &FitConfig,
    opts: &MapOptions,
) -> Result<PairStatistics> {
    let corr = correlation(x, y, opts.rank_correlation)?;
    let obs = pair_series(x, y)?;
    let empirical = empirical_tail_matrix(&obs, opts.threshold).ok();
    let mut out = PairStatistics {
        correlation: corr,
        tail: None,
        converged: false,
        at_theta_cap: false,
        fit_error: None,
        empirical_tail: empirical,
    };
    if !opts.empirical_only {
        match fit(&obs, fitcfg) {
            Ok(r) => {
                out.tail = Some(r.mixture.tail_matrix());
                out.converged = r.converged;
                out.at_theta_cap = r.hit_cap();
            }
            Err(e) => out.fit_error = Some(e.to_string()),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependenceMap {
    pub base_box: usize,
    pub entries: Vec<PairStatistics>,
}

/// Statistics between the base box and every retained box.
pub fn dependence_map(
    set: &GridBoxSet,
    base: usize,
    fitcfg: &FitConfig,
    opts: &MapOptions,
) -> Result<DependenceMap> {
    let base_series = &set
        .boxes
        .get(base)
        .ok_or_else(|| Error::Config(format!("base box index {base} out of range")))?
        .series;
    let entries = set
        .boxes
        .par_iter()
        .map(|b| {
            if opts.base_first {
                pair_statistics(base_series, &b.series, fitcfg, opts)
            } else {
                pair_statistics(&b.series, base_series, fitcfg, opts)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DependenceMap {
        base_box: base,
        entries,
    })
}

impl DependenceMap {
    pub fn write_csv<W: Write>(&self, set: &GridBoxSet, mut w: W) -> Result<()> {
        let corners = [Corner::LU, Corner::UU, Corner::LL, Corner::UL];
        let mut header = vec![
            "box".to_string(),
            "i_lon".into(),
            "j_lat".into(),
            "lon_min".into(),
            "lat_min".into(),
            "land_fraction".into(),
            "correlation".into(),
        ];
        header.extend(corners.iter().map(|c| format!("fit_{c}")));
        header.extend(corners.iter().map(|c| format!("emp_{c}")));
        header.extend(["converged".into(), "at_theta_cap".into(), "base".into()]);
        writeln!(w, "{}", header.join(","))?;
        for (k, (b, e)) in set.boxes.iter().zip(&self.entries).enumerate() {
            let mut row = vec![
                k.to_string(),
                b.i_lon.to_string(),
                b.j_lat.to_string(),
                fmt_f64(b.bounds.lon_min),
                fmt_f64(b.bounds.lat_min),
                fmt_f64(b.land_fraction),
                fmt_f64(e.correlation),
            ];
            for m in [&e.tail, &e.empirical_tail] {
                for c in corners {
                    row.push(m.map(|t| fmt_f64(t.get(c))).unwrap_or_default());
                }
            }
            row.push(e.converged.to_string());
            row.push(e.at_theta_cap.to_string());
            row.push((k == self.base_box).to_string());
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandPair {
    pub first: usize,
    pub second: usize,
    pub stats: PairStatistics,
}

/// Retained boxes whose latitude span contains `lat`, west to east.
pub fn band_boxes(set: &GridBoxSet, lat: f64) -> Vec<usize> {
    let mut out: Vec<usize> = (0..set.boxes.len())
        .filter(|&k| {
            let b = &set.boxes[k].bounds;
            lat >= b.lat_min && lat < b.lat_max
        })
        .collect();
    out.sort_by(|a, b| {
        set.boxes[*a]
            .bounds
            .lon_min
            .total_cmp(&set.boxes[*b].bounds.lon_min)
    });
    out
}

/// Statistics for every pairing of a box in `band1` (first coordinate) with
/// a box in `band2`, ordered by the first box then the second, west to east.
pub fn band_profile(
    set: &GridBoxSet,
    band1: f64,
    band2: f64,
    fitcfg: &FitConfig,
    opts: &MapOptions,
) -> Result<Vec<BandPair>> {
    let (b1, b2) = (band_boxes(set, band1), band_boxes(set, band2));
    if b1.is_empty() || b2.is_empty() {
        return Err(Error::Empty("latitude band"));
    }
    let pairs: Vec<(usize, usize)> = b1
        .iter()
        .flat_map(|&i| b2.iter().map(move |&j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            Ok(BandPair {
                first: i,
                second: j,
                stats: pair_statistics(&set.boxes[i].series, &set.boxes[j].series, fitcfg, opts)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(n_lon: usize, n_lat: usize, n_time: usize) -> GridMeta {
        GridMeta {
            n_lon,
            n_lat,
            n_time,
            lon0: 0.5,
            lat0: 0.5,
            dlon: 1.0,
            dlat: 1.0,
        }
    }

    #[test]
    fn land_average_and_threshold() {
        // 3x2-degree cells, so one box holds 2x2 of them
        let g = GridMeta {
            n_lon: 2,
            n_lat: 2,
            n_time: 1,
            lon0: 1.5,
            lat0: 1.0,
            dlon: 3.0,
            dlat: 2.0,
        };
        let data = GriddedData::new(g, vec![1.0, 3.0, 5.0, 7.0], None).unwrap();
        let mask = LandMask::new(g, vec![true, true, false, false]).unwrap();
        let lattice = BoxLattice {
            lon_min: 0.0,
            lat_min: 0.0,
            n_lon: 1,
            n_lat: 1,
        };
        let set = build_gridboxes(&data, &mask, lattice, AggregationOptions::default()).unwrap();
        assert!(set.boxes.is_empty());
        assert_eq!(set.discarded, vec![(0, 0, 0.5)]);
        let opts = AggregationOptions {
            land_threshold: 0.4,
            ..Default::default()
        };
        let set = build_gridboxes(&data, &mask, lattice, opts).unwrap();
        assert_eq!(set.boxes[0].series.values(), &[2.0]);
        assert_eq!(set.boxes[0].land_fraction, 0.5);
    }

    #[test]
    fn cell_on_box_edge_is_a_tiling_error() {
        let g = meta(12, 4, 1);
        let data = GriddedData::new(g, vec![0.0; 48], None).unwrap();
        let mask = LandMask::new(g, vec![true; 48]).unwrap();
        let lattice = BoxLattice {
            lon_min: 0.5,
            lat_min: 0.0,
            n_lon: 1,
            n_lat: 1,
        };
        assert!(matches!(
            build_gridboxes(&data, &mask, lattice, AggregationOptions::default()),
            Err(Error::Tiling(_))
        ));
    }

    #[test]
    fn anchored_lattice_corner() {
        let l = BoxLattice::anchored(-165, 65, DEFAULT_OFFSET, 3, 2);
        let b = l.bounds(0, 0);
        assert!((b.lon_min + 165.1).abs() < 1e-12 && (b.lat_min - 65.1).abs() < 1e-12);
        assert!((b.lon_max - b.lon_min - 6.0).abs() < 1e-12);
        assert!((b.lat_max - b.lat_min - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_text_and_binary_round_trip() {
        let g = meta(3, 2, 2);
        let values: Vec<f64> = (0..12).map(|v| v as f64 / 7.0).collect();
        let data = GriddedData::new(g, values, None).unwrap();
        let mut text = Vec::new();
        data.write_csv(&mut text).unwrap();
        assert_eq!(GriddedData::read_any(&text).unwrap(), data);
        let mut bin = Vec::new();
        data.write_binary(&mut bin).unwrap();
        assert_eq!(GriddedData::read_any(&bin).unwrap(), data);
        let mask =
            LandMask::new(meta(3, 2, 1), vec![true, false, true, true, false, true]).unwrap();
        let mut text = Vec::new();
        mask.write_csv(&mut text).unwrap();
        assert_eq!(LandMask::read_csv(text.as_slice()).unwrap(), mask);
    }
}
