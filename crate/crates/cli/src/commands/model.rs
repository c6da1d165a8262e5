use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tailcop::empirical::density_grid as grid_of;
use tailcop::io::write_matrix_csv;
use tailcop::marginal::pair_series;
use tailcop::{QuantileTable, RotatedMixture};

use super::{
    num, open, print_tail, read_to_string, required, tail_json, write_row, FitOptions, PairSource,
};
use crate::output::Context;

fn load_mixture(path: &Path) -> Result<RotatedMixture> {
    RotatedMixture::from_json_str(&read_to_string(path)?)
        .with_context(|| format!("reading mixture {}", path.display()))
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SimulateArgs {
    /// Mixture JSON document (as written by `fit`).
    #[arg(long)]
    pub mixture: Option<PathBuf>,
    /// Number of pairs to draw.
    #[arg(long)]
    pub n: Option<usize>,
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let mix = load_mixture(&required(&args.mixture, "mixture")?)?;
    let n = required(&args.n, "n")?;
    let sample = mix.sample(n, ctx.seed);
    let path = ctx.write_with("sample.csv", |w| {
        write_row(w, &["u1".into(), "u2".into()])?;
        for p in &sample {
            write_row(w, &[num(p.u1()), num(p.u2())])?;
        }
        Ok(())
    })?;
    println!("wrote {n} pairs to {}", path.display());
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub source: PairSource,
    #[command(flatten)]
    #[serde(flatten)]
    pub fit: FitOptions,
}

pub fn fit(ctx: &Context, args: &FitArgs) -> Result<()> {
    let (a, b) = args.source.load()?;
    let obs = pair_series(&a, &b)?;
    let cfg = args.fit.config(ctx.seed)?;
    let r = tailcop::fit::fit(&obs, &cfg)?;
    let tail = r.mixture.tail_matrix();
    ctx.write_with("mixture.json", |w| {
        use std::io::Write;
        writeln!(w, "{}", r.mixture.to_json_string())?;
        Ok(())
    })?;
    ctx.write_json(
        "fit_report.json",
        &json!({
            "n": obs.len(),
            "family": r.mixture.family(),
            "weights": r.mixture.weights(),
            "thetas": r.mixture.thetas(),
            "tail_matrix": tail_json(&tail),
            "log_likelihood": r.log_likelihood,
            "converged": r.converged,
            "gradient_norm": r.gradient_norm,
            "iterations": r.iterations,
            "n_evaluations": r.n_evaluations,
            "start_index": r.start_index,
            "clamp_count": r.clamp_count,
            "at_theta_cap": r.at_theta_cap,
            "negligible_components": r.mixture.negligible_components(),
        }),
    )?;
    print_tail(
        &format!("fitted tail dependence (n = {})", obs.len()),
        &tail,
    );
    if r.hit_cap() {
        println!("note: a component reached the theta cap");
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DensityGridArgs {
    /// Mixture JSON document.
    #[arg(long)]
    pub mixture: Option<PathBuf>,
    /// Grid points per axis.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Quantile table for the first variable (probability,quantile[,density]).
    #[arg(long)]
    pub x_quantiles: Option<PathBuf>,
    /// Quantile table for the second variable.
    #[arg(long)]
    pub y_quantiles: Option<PathBuf>,
}

pub fn density_grid(ctx: &Context, args: &DensityGridArgs) -> Result<()> {
    let mix = load_mixture(&required(&args.mixture, "mixture")?)?;
    let grid = grid_of(&mix, args.resolution.unwrap_or(100))?;
    ctx.write_with("density_grid.csv", |w| {
        Ok(write_matrix_csv(
            w,
            "u2\\u1",
            &grid.u1,
            &grid.u2,
            &grid.log_density,
        )?)
    })?;
    let tables = match (&args.x_quantiles, &args.y_quantiles) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        _ => bail!("give both --x-quantiles and --y-quantiles, or neither"),
    };
    if let Some((xp, yp)) = tables {
        let read = |p: &PathBuf| {
            QuantileTable::from_csv(open(p)?).with_context(|| format!("reading {}", p.display()))
        };
        let remapped = grid.remapped(&read(xp)?, &read(yp)?)?;
        ctx.write_with("remapped_axes.csv", |w| {
            write_row(w, &["u".into(), "x".into(), "y".into()])?;
            for (i, u) in grid.u1.iter().enumerate() {
                write_row(
                    w,
                    &[
                        num(*u),
                        num(remapped.x.values[i]),
                        num(remapped.y.values[i]),
                    ],
                )?;
            }
            Ok(())
        })?;
        if let Some(joint) = &remapped.joint_log_density {
            ctx.write_with("remapped_density.csv", |w| {
                Ok(write_matrix_csv(
                    w,
                    "y\\x",
                    &remapped.x.values,
                    &remapped.y.values,
                    joint,
                )?)
            })?;
        }
    }
    println!(
        "wrote {0}x{0} log density grid to {1}",
        grid.u1.len(),
        ctx.path("density_grid.csv").display()
    );
    Ok(())
}
