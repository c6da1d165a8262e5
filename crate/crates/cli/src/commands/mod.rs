//! Subcommand arguments and implementations.

mod grid;
mod model;
mod tail;

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use tailcop::io::{fmt_f64, read_numeric_csv, read_series_table};
use tailcop::{BootstrapSpec, Corner, DailySeries, Family, FitConfig, TailMatrix, TimeLabel};

pub use grid::{aggregate, band, map, AggregateArgs, BandArgs, MapArgs};
pub use model::{density_grid, fit, simulate, DensityGridArgs, FitArgs, SimulateArgs};
pub use tail::{bootstrap, composite, empirical, BootstrapArgs, CompositeArgs, EmpiricalArgs};

pub(crate) fn required<T: Clone>(value: &Option<T>, flag: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| anyhow!("missing required option --{flag} (flag or config key `{flag}`)"))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

pub(crate) fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Options of the mixture fit shared by several commands.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FitOptions {
    /// Base family of the four components: gumbel, joe or clayton.
    #[arg(long)]
    pub family: Option<String>,
    /// Iteration limit per start.
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Gradient-norm tolerance on the mean negative log-likelihood.
    #[arg(long)]
    pub gradient_tolerance: Option<f64>,
    /// Extra random starts added to the default grid.
    #[arg(long)]
    pub random_starts: Option<usize>,
    /// Smallest sample the fit accepts.
    #[arg(long)]
    pub min_observations: Option<usize>,
}

impl FitOptions {
    pub fn config(&self, seed: u64) -> Result<FitConfig> {
        let family = match &self.family {
            Some(f) => f.parse::<Family>()?,
            None => Family::Gumbel,
        };
        let mut cfg = FitConfig::new(family);
        cfg.seed = seed;
        if let Some(n) = self.max_iterations {
            cfg.max_iterations = n;
        }
        if let Some(t) = self.gradient_tolerance {
            cfg.gradient_tolerance = t;
        }
        if let Some(n) = self.min_observations {
            cfg.min_observations = n;
        }
        if let Some(n) = self.random_starts {
            cfg = cfg.with_random_starts(n);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Where a pair of series comes from: a pair CSV, or two columns of a
/// gridbox series table written by `aggregate`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PairSource {
    /// Pair CSV with columns `x,y` or `year,day,x,y`; x is the first coordinate.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Gridbox series table (`year,day,box...`) as written by `aggregate`.
    #[arg(long)]
    pub box_series: Option<PathBuf>,
    /// Box index used as the first coordinate (with --box-series).
    #[arg(long)]
    pub first: Option<usize>,
    /// Box index used as the second coordinate (with --box-series).
    #[arg(long)]
    pub second: Option<usize>,
    /// Exchange the two coordinates.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub swap: Option<bool>,
}

impl PairSource {
    pub fn load(&self) -> Result<(DailySeries, DailySeries)> {
        let (a, b) = match (&self.input, &self.box_series) {
            (Some(p), None) => read_pair_csv(p)?,
            (None, Some(p)) => {
                let (first, second) = (
                    required(&self.first, "first")?,
                    required(&self.second, "second")?,
                );
                let (_, mut series) = read_series_table(open(p)?)
                    .with_context(|| format!("reading {}", p.display()))?;
                let n = series.len();
                for k in [first, second] {
                    if k >= n {
                        bail!("box index {k} out of range: {} has {n} boxes", p.display());
                    }
                }
                let b = series[second].clone();
                (series.swap_remove(first), b)
            }
            (Some(_), Some(_)) => bail!("give either --input or --box-series, not both"),
            (None, None) => {
                bail!("missing input: give --input or --box-series with --first and --second")
            }
        };
        Ok(if self.swap.unwrap_or(false) {
            (b, a)
        } else {
            (a, b)
        })
    }
}

fn read_pair_csv(path: &Path) -> Result<(DailySeries, DailySeries)> {
    let (_, rows) =
        read_numeric_csv(open(path)?).with_context(|| format!("reading {}", path.display()))?;
    let width = rows.first().map(Vec::len).unwrap_or(2);
    let column = |c: usize| rows.iter().map(|r| r[c]).collect::<Vec<f64>>();
    let context = || format!("reading {}", path.display());
    match width {
        2 => Ok((
            DailySeries::unlabelled(column(0)).with_context(context)?,
            DailySeries::unlabelled(column(1)).with_context(context)?,
        )),
        4 => {
            let mut times = Vec::with_capacity(rows.len());
            for (i, r) in rows.iter().enumerate() {
                if r[0].fract() != 0.0 || r[1].fract() != 0.0 || r[1] < 0.0 {
                    bail!("{}: row {} has a bad year/day label", path.display(), i + 1);
                }
                times.push(TimeLabel::new(r[0] as i32, r[1] as u32));
            }
            Ok((
                DailySeries::new(column(2), times.clone()).with_context(context)?,
                DailySeries::new(column(3), times).with_context(context)?,
            ))
        }
        w => bail!(
            "{}: expected 2 columns (x,y) or 4 (year,day,x,y), found {w}",
            path.display()
        ),
    }
}

/// Bootstrap settings shared by `bootstrap` and `map`.
#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BootstrapOptions {
    /// Number of bootstrap replicates.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Confidence level of the percentile interval.
    #[arg(long)]
    pub level: Option<f64>,
    /// Inclusive year strata, e.g. `1979-1989,1990-1999`.
    #[arg(long)]
    pub strata: Option<String>,
}

impl BootstrapOptions {
    pub fn spec(&self, seed: u64) -> Result<BootstrapSpec> {
        let mut spec = BootstrapSpec {
            seed,
            ..Default::default()
        };
        if let Some(n) = self.replicates {
            spec.n_replicates = n;
        }
        if let Some(l) = self.level {
            spec.level = l;
        }
        if let Some(s) = &self.strata {
            spec.strata = parse_strata(s)?;
        }
        spec.validate()?;
        Ok(spec)
    }
}

pub(crate) fn parse_strata(s: &str) -> Result<Vec<(i32, i32)>> {
    s.split(',')
        .map(|part| {
            let part = part.trim();
            let (a, b) = part.split_once('-').unwrap_or((part, part));
            let parse = |x: &str| {
                x.trim()
                    .parse::<i32>()
                    .map_err(|_| anyhow!("bad stratum `{part}` (expected YEAR-YEAR)"))
            };
            Ok((parse(a)?, parse(b)?))
        })
        .collect()
}

pub(crate) fn parse_corner(s: &str) -> Result<Corner> {
    Ok(s.parse::<Corner>()?)
}

/// JSON form of a tail matrix keyed by corner name.
pub(crate) fn tail_json(m: &TailMatrix) -> serde_json::Value {
    serde_json::json!({ "LU": m.lu, "UU": m.uu, "LL": m.ll, "UL": m.ul })
}

pub(crate) fn print_tail(label: &str, m: &TailMatrix) {
    println!("{label}");
    println!("  LU {:.4}  UU {:.4}", m.lu, m.uu);
    println!("  LL {:.4}  UL {:.4}", m.ll, m.ul);
}

pub(crate) fn write_row<W: Write>(w: &mut W, fields: &[String]) -> Result<()> {
    writeln!(w, "{}", fields.join(","))?;
    Ok(())
}

pub(crate) fn num(x: f64) -> String {
    fmt_f64(x)
}
