//! Output directory handling and the error artifact.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context as _, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const ERROR_FILE: &str = "error.json";

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn new(out: PathBuf, seed: u64) -> Result<Self> {
        std::fs::create_dir_all(&out)
            .with_context(|| format!("creating output directory {}", out.display()))?;
        Ok(Context { out, seed })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Creates `name` in the output directory and hands a buffered writer
    /// to `body`.
    pub fn write_with<F>(&self, name: &str, body: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.path(name);
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush()
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            writeln!(w)?;
            Ok(())
        })
    }

    /// Removes an error artifact left by an earlier failed run.
    pub fn clear_error_artifact(&self) {
        let _ = std::fs::remove_file(self.path(ERROR_FILE));
    }
}

fn describe(err: &tailcop::Error) -> (&'static str, Value) {
    use tailcop::Error as E;
    match err {
        E::ParameterDomain { family, detail } => (
            "parameter_domain",
            json!({ "family": family, "detail": detail }),
        ),
        E::Boundary { u1, u2 } => ("boundary", json!({ "u1": u1, "u2": u2 })),
        E::OutsideUnitInterval { value } => ("outside_unit_interval", json!({ "value": value })),
        E::InvalidWeights(_) => ("invalid_weights", Value::Null),
        E::NotSingleCorner(_) => ("not_single_corner", Value::Null),
        E::NonFinite { index } => ("non_finite", json!({ "index": index })),
        E::Empty(what) => ("empty", json!({ "what": what })),
        E::InsufficientData { required, actual } => (
            "insufficient_data",
            json!({ "required": required, "actual": actual }),
        ),
        E::Alignment(_) => ("alignment", Value::Null),
        E::NonConvergence {
            best_loglik,
            best_grad_norm,
            n_starts,
        } => (
            "non_convergence",
            json!({
                "best_log_likelihood": finite_or_null(*best_loglik),
                "best_gradient_norm": finite_or_null(*best_grad_norm),
                "n_starts": n_starts,
            }),
        ),
        E::Extrapolation { value, lo, hi } => (
            "extrapolation",
            json!({ "value": value, "lo": lo, "hi": hi }),
        ),
        E::QuantileTable(_) => ("quantile_table", Value::Null),
        E::NoExceedances { u, m } => ("no_exceedances", json!({ "u": u, "m": m })),
        E::UndefinedCorrelation(_) => ("undefined_correlation", Value::Null),
        E::BinWidth(w) => ("bin_width", json!({ "width": w })),
        E::EmptyComposite => ("empty_composite", Value::Null),
        E::Tiling(_) => ("tiling", Value::Null),
        E::Config(_) => ("config", Value::Null),
        E::Parse(_) => ("parse", Value::Null),
        E::Io(_) => ("io", Value::Null),
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

/// Writes `error.json` describing `err`. Failures to write are reported on
/// stderr only.
pub fn write_error_artifact(out: &Path, command: Option<&str>, err: &anyhow::Error) {
    let (kind, details) = match err.chain().find_map(|e| e.downcast_ref::<tailcop::Error>()) {
        Some(e) => describe(e),
        None => ("usage", Value::Null),
    };
    let doc = json!({
        "command": command,
        "kind": kind,
        "message": format!("{err:#}"),
        "details": details,
    });
    let path = out.join(ERROR_FILE);
    let written =
        std::fs::create_dir_all(out).and_then(|_| std::fs::write(&path, format!("{doc:#}\n")));
    if let Err(e) = written {
        eprintln!("could not write {}: {e}", path.display());
    }
}
