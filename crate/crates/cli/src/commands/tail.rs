use std::path::PathBuf;

use anyhow::{anyhow, Context as _, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tailcop::bootstrap::bootstrap_tail_ci;
use tailcop::empirical::{
    bin_counts, composite as composite_of, correlation, empirical_tail, FieldSeries,
};
use tailcop::io::write_matrix_csv;
use tailcop::marginal::pair_series;
use tailcop::{Corner, GriddedData};

use super::{
    num, parse_corner, print_tail, required, tail_json, write_row, BootstrapOptions, FitOptions,
    PairSource,
};
use crate::output::Context;

const CORNERS: [Corner; 4] = [Corner::LU, Corner::UU, Corner::LL, Corner::UL];

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EmpiricalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: PairSource,
    /// Comma-separated thresholds u (default 0.95).
    #[arg(long)]
    pub thresholds: Option<String>,
    /// Also write pseudo-observation counts in square bins of this width.
    #[arg(long)]
    pub bin_width: Option<f64>,
    /// Report the rank correlation instead of the Pearson correlation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub rank_correlation: Option<bool>,
}

fn parse_thresholds(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("bad threshold `{}`", t.trim()))
        })
        .collect()
}

pub fn empirical(ctx: &Context, args: &EmpiricalArgs) -> Result<()> {
    let (a, b) = args.source.load()?;
    let obs = pair_series(&a, &b)?;
    let thresholds = match &args.thresholds {
        Some(s) => parse_thresholds(s)?,
        None => vec![tailcop::empirical::DEFAULT_THRESHOLD],
    };
    let rank = args.rank_correlation.unwrap_or(false);
    let corr = correlation(&a, &b, rank)?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &u in &thresholds {
        let mut m = tailcop::TailMatrix::zero();
        for corner in CORNERS {
            let est = empirical_tail(&obs, u, corner)?;
            *m.get_mut(corner) = est.estimate;
            rows.push((u, corner, est));
        }
        print_tail(&format!("empirical tail dependence at u = {u}"), &m);
        summary.push(json!({ "threshold": u, "tail_matrix": tail_json(&m) }));
    }
    ctx.write_with("empirical.csv", |w| {
        write_row(
            w,
            &["threshold,corner,estimate,joint_count,denominator".into()],
        )?;
        for (u, corner, est) in &rows {
            write_row(
                w,
                &[
                    num(*u),
                    corner.to_string(),
                    num(est.estimate),
                    est.joint_count.to_string(),
                    num(est.denominator),
                ],
            )?;
        }
        Ok(())
    })?;
    ctx.write_json(
        "empirical.json",
        &json!({
            "n": obs.len(),
            "correlation": corr,
            "correlation_kind": if rank { "rank" } else { "pearson" },
            "thresholds": summary,
        }),
    )?;
    if let Some(width) = args.bin_width {
        let bins = bin_counts(&obs, width)?;
        let edges = bins.edges();
        let values: Vec<f64> = bins.counts.iter().flatten().map(|&c| c as f64).collect();
        ctx.write_with("bins.csv", |w| {
            Ok(write_matrix_csv(w, "u2\\u1", &edges, &edges, &values)?)
        })?;
    }
    println!("correlation {corr:.4}");
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CompositeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: PairSource,
    /// Auxiliary gridded field, one frame per day of the pair (text or binary grid).
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Threshold u.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Corner whose event days are composited: LL, LU, UL or UU.
    #[arg(long)]
    pub corner: Option<String>,
}

pub fn composite(ctx: &Context, args: &CompositeArgs) -> Result<()> {
    let corner = parse_corner(&required(&args.corner, "corner")?)?;
    let u = args
        .threshold
        .unwrap_or(tailcop::empirical::DEFAULT_THRESHOLD);
    let (a, b) = args.source.load()?;
    let field_path = required(&args.field, "field")?;
    let bytes =
        std::fs::read(&field_path).with_context(|| format!("reading {}", field_path.display()))?;
    let grid = GriddedData::read_any(&bytes)
        .with_context(|| format!("reading {}", field_path.display()))?;
    let frames = (0..grid.meta.n_time)
        .map(|t| grid.frame(t).to_vec())
        .collect();
    let field = FieldSeries::new(grid.meta.n_lon, grid.meta.n_lat, frames)?;
    let result = composite_of(&a, &b, u, corner, &field)?;
    let mean = result
        .mean_field
        .as_ref()
        .expect("composites with events carry a mean");
    let lons: Vec<f64> = (0..grid.meta.n_lon).map(|i| grid.meta.lon(i)).collect();
    let lats: Vec<f64> = (0..grid.meta.n_lat).map(|j| grid.meta.lat(j)).collect();
    ctx.write_with("composite.csv", |w| {
        Ok(write_matrix_csv(w, "lat\\lon", &lons, &lats, mean)?)
    })?;
    ctx.write_json(
        "composite.json",
        &json!({
            "corner": corner,
            "threshold": u,
            "n_events": result.n_events,
            "event_indices": result.event_indices,
            "event_times": result.event_times,
            "nx": result.nx,
            "ny": result.ny,
        }),
    )?;
    println!(
        "composited {} {corner} event days at u = {u}",
        result.n_events
    );
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BootstrapArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: PairSource,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitOptions,
    #[command(flatten)]
    #[serde(flatten)]
    pub bootstrap: BootstrapOptions,
    /// Start every replicate fit from the full-sample fit instead of the default grid.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub warm_start: Option<bool>,
}

pub fn bootstrap(ctx: &Context, args: &BootstrapArgs) -> Result<()> {
    let (a, b) = args.source.load()?;
    let spec = args.bootstrap.spec(ctx.seed)?;
    let mut cfg = args.fit.config(ctx.seed)?;
    if args.warm_start.unwrap_or(false) {
        let full = tailcop::fit::fit(&pair_series(&a, &b)?, &cfg)?;
        cfg = cfg.warm_started(&full.mixture);
    }
    let iv = bootstrap_tail_ci(&a, &b, &spec, &cfg)?;
    ctx.write_with("bootstrap.csv", |w| {
        write_row(
            w,
            &["corner,lower,upper,n_replicates,n_failed_replicates,unreliable".into()],
        )?;
        for corner in CORNERS {
            write_row(
                w,
                &[
                    corner.to_string(),
                    num(iv.lower.get(corner)),
                    num(iv.upper.get(corner)),
                    iv.n_replicates.to_string(),
                    iv.n_failed.to_string(),
                    iv.unreliable.to_string(),
                ],
            )?;
        }
        Ok(())
    })?;
    ctx.write_with("replicates.csv", |w| {
        write_row(w, &["LU,UU,LL,UL".into()])?;
        for m in &iv.estimates {
            write_row(w, &CORNERS.map(|c| num(m.get(c))))?;
        }
        Ok(())
    })?;
    print_tail(&format!("lower bounds ({} level)", spec.level), &iv.lower);
    print_tail("upper bounds", &iv.upper);
    if iv.unreliable {
        println!(
            "warning: {} of {} replicates failed",
            iv.n_failed, iv.n_replicates
        );
    }
    Ok(())
}
