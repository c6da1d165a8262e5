use std::path::PathBuf;

use anyhow::{bail, Context as _, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tailcop::bootstrap::lower_bound_map;
use tailcop::io::write_series_table;
use tailcop::spatial::{
    band_profile, build_gridboxes, dependence_map, read_times_csv, AggregationOptions, BoxLattice,
    MapOptions, DEFAULT_LAND_THRESHOLD, DEFAULT_OFFSET,
};
use tailcop::{Corner, GridBoxSet, GriddedData, LandMask};

use super::{num, open, required, write_row, BootstrapOptions, FitOptions};
use crate::output::Context;

/// Gridded input and the box lattice laid over it.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GridInputs {
    /// Gridded daily data (text or binary grid file).
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Land mask on the same grid (0/1 text grid).
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Time labels (`year,day` per time step); defaults to year 0, days 0..n.
    #[arg(long)]
    pub times: Option<PathBuf>,
    /// Integer longitude the lattice is anchored to.
    #[arg(long, allow_hyphen_values = true)]
    pub lon_anchor: Option<i32>,
    /// Integer latitude the lattice is anchored to.
    #[arg(long, allow_hyphen_values = true)]
    pub lat_anchor: Option<i32>,
    /// Shift of the lattice edges: west of the longitude anchor, north of the latitude anchor.
    #[arg(long)]
    pub offset: Option<f64>,
    /// Boxes along longitude.
    #[arg(long)]
    pub n_box_lon: Option<usize>,
    /// Boxes along latitude.
    #[arg(long)]
    pub n_box_lat: Option<usize>,
    /// Boxes are kept when their land fraction is strictly above this.
    #[arg(long)]
    pub land_threshold: Option<f64>,
    /// Weight land cells by the cosine of latitude.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub cos_lat_weights: Option<bool>,
}

impl GridInputs {
    pub fn build(&self) -> Result<GridBoxSet> {
        let data_path = required(&self.data, "data")?;
        let bytes = std::fs::read(&data_path)
            .with_context(|| format!("reading {}", data_path.display()))?;
        let mut data = GriddedData::read_any(&bytes)
            .with_context(|| format!("reading {}", data_path.display()))?;
        if let Some(t) = &self.times {
            let times =
                read_times_csv(open(t)?).with_context(|| format!("reading {}", t.display()))?;
            data = data.with_times(times)?;
        }
        let mask_path = required(&self.mask, "mask")?;
        let mask = LandMask::read_csv(open(&mask_path)?)
            .with_context(|| format!("reading {}", mask_path.display()))?;
        let lattice = BoxLattice::anchored(
            required(&self.lon_anchor, "lon-anchor")?,
            required(&self.lat_anchor, "lat-anchor")?,
            self.offset.unwrap_or(DEFAULT_OFFSET),
            required(&self.n_box_lon, "n-box-lon")?,
            required(&self.n_box_lat, "n-box-lat")?,
        );
        let opts = AggregationOptions {
            land_threshold: self.land_threshold.unwrap_or(DEFAULT_LAND_THRESHOLD),
            cos_lat_weights: self.cos_lat_weights.unwrap_or(false),
        };
        Ok(build_gridboxes(&data, &mask, lattice, opts)?)
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct AggregateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridInputs,
}

fn write_boxes(ctx: &Context, set: &GridBoxSet) -> Result<()> {
    ctx.write_with("boxes.csv", |w| {
        write_row(
            w,
            &["box,i_lon,j_lat,lon_min,lon_max,lat_min,lat_max,land_fraction,n_cells".into()],
        )?;
        for (k, b) in set.boxes.iter().enumerate() {
            let r = &b.bounds;
            write_row(
                w,
                &[
                    k.to_string(),
                    b.i_lon.to_string(),
                    b.j_lat.to_string(),
                    num(r.lon_min),
                    num(r.lon_max),
                    num(r.lat_min),
                    num(r.lat_max),
                    num(b.land_fraction),
                    b.n_cells.to_string(),
                ],
            )?;
        }
        Ok(())
    })?;
    Ok(())
}

pub fn aggregate(ctx: &Context, args: &AggregateArgs) -> Result<()> {
    let set = args.grid.build()?;
    if set.boxes.is_empty() {
        bail!("no box passes the land rule");
    }
    write_boxes(ctx, &set)?;
    let names: Vec<String> = (0..set.boxes.len()).map(|k| format!("box{k}")).collect();
    let series: Vec<_> = set.boxes.iter().map(|b| &b.series).collect();
    ctx.write_with("box_series.csv", |w| {
        Ok(write_series_table(w, &names, &series)?)
    })?;
    ctx.write_with("discarded.csv", |w| {
        write_row(w, &["i_lon,j_lat,land_fraction".into()])?;
        for (i, j, f) in &set.discarded {
            write_row(w, &[i.to_string(), j.to_string(), num(*f)])?;
        }
        Ok(())
    })?;
    println!(
        "{} boxes retained, {} discarded by the land rule",
        set.boxes.len(),
        set.discarded.len()
    );
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridInputs,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitOptions,
    #[command(flatten)]
    #[serde(flatten)]
    pub bootstrap: BootstrapOptions,
    /// Lattice column of the base box.
    #[arg(long)]
    pub base_i: Option<usize>,
    /// Lattice row of the base box.
    #[arg(long)]
    pub base_j: Option<usize>,
    /// Longitude inside the base box (alternative to --base-i/--base-j).
    #[arg(long, allow_hyphen_values = true)]
    pub base_lon: Option<f64>,
    /// Latitude inside the base box.
    #[arg(long, allow_hyphen_values = true)]
    pub base_lat: Option<f64>,
    /// Threshold u for the empirical estimates.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Skip the mixture fits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub empirical_only: Option<bool>,
    /// Rank correlation instead of Pearson.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rank_correlation: Option<bool>,
    /// Use the base box as the first coordinate.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub base_first: Option<bool>,
    /// Also write bootstrap interval bounds for every box.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub lower_bounds: Option<bool>,
}

fn map_options(
    threshold: Option<f64>,
    empirical_only: Option<bool>,
    rank: Option<bool>,
    base_first: Option<bool>,
) -> MapOptions {
    let d = MapOptions::default();
    MapOptions {
        threshold: threshold.unwrap_or(d.threshold),
        empirical_only: empirical_only.unwrap_or(false),
        rank_correlation: rank.unwrap_or(false),
        base_first: base_first.unwrap_or(false),
    }
}

fn base_box(set: &GridBoxSet, args: &MapArgs) -> Result<usize> {
    match (args.base_i, args.base_j, args.base_lon, args.base_lat) {
        (Some(i), Some(j), None, None) => Ok(set.resolve(i, j)?),
        (None, None, Some(lon), Some(lat)) => match set.locate(lon, lat) {
            Some(k) => Ok(k),
            None => {
                let hint = set
                    .nearest(lon, lat)
                    .map(|k| {
                        let b = &set.boxes[k];
                        format!("; nearest retained box is ({}, {})", b.i_lon, b.j_lat)
                    })
                    .unwrap_or_default();
                Err(tailcop::Error::Config(format!(
                    "no retained box contains ({lon}, {lat}){hint}"
                ))
                .into())
            }
        },
        _ => bail!("select the base box with --base-i and --base-j, or --base-lon and --base-lat"),
    }
}

pub fn map(ctx: &Context, args: &MapArgs) -> Result<()> {
    let set = args.grid.build()?;
    let base = base_box(&set, args)?;
    let cfg = args.fit.config(ctx.seed)?;
    let opts = map_options(
        args.threshold,
        args.empirical_only,
        args.rank_correlation,
        args.base_first,
    );
    let dep = dependence_map(&set, base, &cfg, &opts)?;
    ctx.write_with("dependence_map.csv", |w| Ok(dep.write_csv(&set, w)?))?;
    if args.lower_bounds.unwrap_or(false) {
        let spec = args.bootstrap.spec(ctx.seed)?;
        let iv = lower_bound_map(&set, base, &spec, &cfg)?;
        ctx.write_with("lower_bound.csv", |w| Ok(iv.write_csv(w)?))?;
    }
    let b = &set.boxes[base];
    println!(
        "map of {} boxes against base box {base} ({}, {})",
        set.boxes.len(),
        b.i_lon,
        b.j_lat
    );
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BandArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridInputs,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitOptions,
    /// Latitude inside the first band; its boxes are the first coordinate.
    #[arg(long, allow_hyphen_values = true)]
    pub band1: Option<f64>,
    /// Latitude inside the second band.
    #[arg(long, allow_hyphen_values = true)]
    pub band2: Option<f64>,
    /// Threshold u for the empirical estimates.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Skip the mixture fits.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub empirical_only: Option<bool>,
    /// Rank correlation instead of Pearson.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rank_correlation: Option<bool>,
}

pub fn band(ctx: &Context, args: &BandArgs) -> Result<()> {
    let set = args.grid.build()?;
    let cfg = args.fit.config(ctx.seed)?;
    let opts = map_options(
        args.threshold,
        args.empirical_only,
        args.rank_correlation,
        None,
    );
    let pairs = band_profile(
        &set,
        required(&args.band1, "band1")?,
        required(&args.band2, "band2")?,
        &cfg,
        &opts,
    )?;
    let corners = [Corner::LU, Corner::UU, Corner::LL, Corner::UL];
    ctx.write_with("band_profile.csv", |w| {
        let mut header = vec![
            "first".to_string(),
            "second".into(),
            "first_lon_min".into(),
            "second_lon_min".into(),
            "correlation".into(),
        ];
        header.extend(corners.iter().map(|c| format!("fit_{c}")));
        header.extend(corners.iter().map(|c| format!("emp_{c}")));
        header.push("converged".into());
        write_row(w, &header)?;
        for p in &pairs {
            let mut row = vec![
                p.first.to_string(),
                p.second.to_string(),
                num(set.boxes[p.first].bounds.lon_min),
                num(set.boxes[p.second].bounds.lon_min),
                num(p.stats.correlation),
            ];
            for m in [&p.stats.tail, &p.stats.empirical_tail] {
                for c in corners {
                    row.push(m.map(|t| num(t.get(c))).unwrap_or_default());
                }
            }
            row.push(p.stats.converged.to_string());
            write_row(w, &row)?;
        }
        Ok(())
    })?;
    println!("{} box pairs written", pairs.len());
    Ok(())
}
