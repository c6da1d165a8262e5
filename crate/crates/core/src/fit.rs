//! Maximum-likelihood fitting of the four-corner mixture to
//! pseudo-observations.
//!
//! The free parameters are unconstrained: three additive log-ratios for the
//! weights (component 4 is the reference) and one logistic coordinate per
//! dependence parameter, `theta = lo + (THETA_CAP - lo) * sigmoid(s)`, where
//! `lo` is the independence value of the family.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{clayton_kernel, gumbel_kernel, joe_kernel, Family};
use crate::dual::Dual;
use crate::error::{Error, Result};
use crate::marginal::PseudoObservations;
use crate::optimize::{minimize, BfgsOptions};
use crate::rng::{derive_seed, seeded_rng};
use crate::rotation::{RotatedMixture, Rotation, CORNER_ORDER};
use rand::Rng;

/// Upper bound on every dependence parameter during optimization.
pub const THETA_CAP: f64 = 50.0;
pub const DEFAULT_MIN_OBSERVATIONS: usize = 50;
/// Parameters within this distance of the cap are reported as at the cap.
pub const CAP_FLAG_MARGIN: f64 = 0.1;
/// Number of unconstrained coordinates.
pub const N_PARAMS: usize = 7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartPoint {
    pub weights: [f64; 4],
    pub thetas: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub base_family: Family,
    pub max_iterations: usize,
    /// Tolerance on the gradient norm of the mean negative log-likelihood.
    pub gradient_tolerance: f64,
    pub multistart_grid: Vec<StartPoint>,
    pub seed: u64,
    pub min_observations: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig::new(Family::Gumbel)
    }
}

/// Clayton parameter with the same tail coefficient as Gumbel `theta`.
fn matched_theta(family: Family, gumbel_theta: f64) -> f64 {
    match family {
        Family::Clayton => {
            let lambda = 2.0 - 2f64.powf(1.0 / gumbel_theta);
            -1.0 / lambda.log2()
        }
        _ => gumbel_theta,
    }
}

impl FitConfig {
    pub fn new(base_family: Family) -> Self {
        FitConfig {
            base_family,
            max_iterations: 500,
            gradient_tolerance: 1e-8,
            multistart_grid: FitConfig::default_grid(base_family),
            seed: 0,
            min_observations: DEFAULT_MIN_OBSERVATIONS,
        }
    }

    /// Equal weights at theta 2, each corner at weight 0.7 with theta 1.5
    /// and 3, and a near-independence start.
    pub fn default_grid(family: Family) -> Vec<StartPoint> {
        let t = |g: f64| matched_theta(family, g);
        let mut grid = vec![StartPoint {
            weights: [0.25; 4],
            thetas: [t(2.0); 4],
        }];
        for k in 0..4 {
            for g in [1.5, 3.0] {
                let mut weights = [0.1; 4];
                weights[k] = 0.7;
                grid.push(StartPoint {
                    weights,
                    thetas: [t(g); 4],
                });
            }
        }
        grid.push(StartPoint {
            weights: [0.25; 4],
            thetas: [t(1.05); 4],
        });
        grid
    }

    /// Appends `count` random starts drawn from the configured seed.
    pub fn with_random_starts(mut self, count: usize) -> Self {
        for i in 0..count {
            let mut rng = seeded_rng(derive_seed(self.seed, "fit-start", i as u64));
            let raw: [f64; 4] = std::array::from_fn(|_| 0.05 - rng.random::<f64>().ln());
            let total: f64 = raw.iter().sum();
            let weights = raw.map(|r| r / total);
            let thetas: [f64; 4] = std::array::from_fn(|_| {
                matched_theta(self.base_family, rng.random_range(1.1..4.0))
            });
            self.multistart_grid.push(StartPoint { weights, thetas });
        }
        self
    }

    /// A single start at `mix`, pulled slightly into the interior.
    pub fn warm_started(mut self, mix: &RotatedMixture) -> Self {
        let (lo, hi) = theta_range(self.base_family);
        let floored = mix.weights().map(|w| w.max(1e-3));
        let total: f64 = floored.iter().sum();
        self.multistart_grid = vec![StartPoint {
            weights: floored.map(|w| w / total),
            thetas: mix
                .thetas()
                .map(|t| t.clamp(lo + 1e-2, hi - 2.0 * CAP_FLAG_MARGIN)),
        }];
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.base_family.native_corner().is_some() {
            return Err(Error::Config(format!(
                "{} cannot be a mixture component",
                self.base_family
            )));
        }
        if !(self.gradient_tolerance > 0.0) {
            return Err(Error::Config("gradient tolerance must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if self.multistart_grid.is_empty() {
            return Err(Error::Config(
                "at least one starting point is required".into(),
            ));
        }
        let param = Parameterization::new(self.base_family);
        for (i, s) in self.multistart_grid.iter().enumerate() {
            param
                .unconstrained(&s.weights, &s.thetas)
                .map_err(|e| Error::Config(format!("start {i}: {e}")))?;
        }
        Ok(())
    }
}

fn theta_range(family: Family) -> (f64, f64) {
    (family.theta_floor(), THETA_CAP)
}

fn sigmoid(s: f64) -> f64 {
    if s >= 0.0 {
        1.0 / (1.0 + (-s).exp())
    } else {
        let e = s.exp();
        e / (1.0 + e)
    }
}

/// Map between the unconstrained coordinates and mixture parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Parameterization {
    family: Family,
}

impl Parameterization {
    pub fn new(family: Family) -> Self {
        Parameterization { family }
    }

    /// Weights, log weights, thetas and `d theta / d s`.
    fn decode(&self, x: &[f64]) -> ([f64; 4], [f64; 4], [f64; 4], [f64; 4]) {
        let a = [x[0], x[1], x[2], 0.0];
        let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let ln_total = a.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        let ln_w = a.map(|v| v - ln_total);
        let w = ln_w.map(f64::exp);
        let (lo, hi) = theta_range(self.family);
        let sig: [f64; 4] = std::array::from_fn(|k| sigmoid(x[3 + k]));
        let theta = sig.map(|g| lo + (hi - lo) * g);
        let dtheta = sig.map(|g| (hi - lo) * g * (1.0 - g));
        (w, ln_w, theta, dtheta)
    }

    pub fn constrained(&self, x: &[f64]) -> ([f64; 4], [f64; 4]) {
        let (w, _, theta, _) = self.decode(x);
        (w, theta)
    }

    pub fn mixture(&self, x: &[f64]) -> Result<RotatedMixture> {
        let (w, theta) = self.constrained(x);
        RotatedMixture::new(self.family, w, theta)
    }

    /// Inverse map. Requires positive weights and every theta strictly
    /// inside `(lo, THETA_CAP)`.
    pub fn unconstrained(&self, weights: &[f64; 4], thetas: &[f64; 4]) -> Result<Vec<f64>> {
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidWeights(format!(
                "unconstrained coordinates need positive weights: {weights:?}"
            )));
        }
        let (lo, hi) = theta_range(self.family);
        let mut x = Vec::with_capacity(N_PARAMS);
        for w in &weights[..3] {
            x.push((w / weights[3]).ln());
        }
        for &t in thetas {
            if !(t > lo && t < hi) {
                return Err(Error::ParameterDomain {
                    family: self.family.name(),
                    detail: format!("theta = {t} is not strictly inside ({lo}, {hi})"),
                });
            }
            x.push(((t - lo) / (hi - t)).ln());
        }
        Ok(x)
    }

    pub fn of_mixture(&self, mix: &RotatedMixture) -> Result<Vec<f64>> {
        self.unconstrained(&mix.weights(), &mix.thetas())
    }
}

/// Log-likelihood of the mixture with per-observation features cached for
/// each component.
#[derive(Debug, Clone)]
pub struct Likelihood {
    family: Family,
    param: Parameterization,
    features: [Vec<[f64; 3]>; 4],
    n: usize,
}

impl Likelihood {
    pub fn new(family: Family, data: &PseudoObservations) -> Result<Self> {
        let native = family.native_corner().ok_or_else(|| {
            Error::NotSingleCorner(format!("{family} cannot be a mixture component"))
        })?;
        if data.is_empty() {
            return Err(Error::Empty("pseudo-observations"));
        }
        let features = std::array::from_fn(|k| {
            let rot = Rotation::between(native, CORNER_ORDER[k]);
            data.pairs()
                .iter()
                .map(|p| {
                    let (a, b) = rot.preimage(p.u1(), p.u2());
                    match family {
                        Family::Gumbel => {
                            let (x, y) = (-a.ln(), -b.ln());
                            [x.ln(), y.ln(), x + y]
                        }
                        Family::Joe => [(-a).ln_1p(), (-b).ln_1p(), 0.0],
                        _ => [a.ln(), b.ln(), 0.0],
                    }
                })
                .collect()
        });
        Ok(Likelihood {
            family,
            param: Parameterization::new(family),
            features,
            n: data.len(),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn parameterization(&self) -> Parameterization {
        self.param
    }

    fn kernel(&self, theta: Dual, f: &[f64; 3]) -> Dual {
        match self.family {
            Family::Gumbel => gumbel_kernel(theta, f[0], f[1], f[2]),
            Family::Joe => joe_kernel(theta, f[0], f[1]),
            _ => clayton_kernel(theta, f[0], f[1]),
        }
    }

    /// Summed negative log-likelihood and its gradient in the unconstrained
    /// coordinates.
    pub fn value_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (w, ln_w, theta, dtheta) = self.param.decode(x);
        let mut nll = 0.0;
        let mut resp_sum = [0.0; 4];
        let mut g_theta = [0.0; 4];
        for i in 0..self.n {
            let mut lt = [0.0; 4];
            let mut dl = [0.0; 4];
            for k in 0..4 {
                let d = self.kernel(Dual::variable(theta[k]), &self.features[k][i]);
                lt[k] = ln_w[k] + d.re;
                dl[k] = d.eps;
            }
            let m = lt.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e = lt.map(|v| (v - m).exp());
            let total: f64 = e.iter().sum();
            nll -= m + total.ln();
            for k in 0..4 {
                let r = e[k] / total;
                resp_sum[k] += r;
                g_theta[k] += r * dl[k];
            }
        }
        let n = self.n as f64;
        let mut grad = Vec::with_capacity(N_PARAMS);
        for j in 0..3 {
            grad.push(-(resp_sum[j] - n * w[j]));
        }
        for k in 0..4 {
            grad.push(-g_theta[k] * dtheta[k]);
        }
        (nll, grad)
    }
}

/// `-Σ ln c(u1_i, u2_i)` for the mixture.
pub fn neg_log_likelihood(mix: &RotatedMixture, data: &PseudoObservations) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("pseudo-observations"));
    }
    let mut total = 0.0;
    for p in data.pairs() {
        total -= mix.log_density(*p)?;
    }
    Ok(total)
}

/// Gradient of [`neg_log_likelihood`] in the unconstrained coordinates
/// (three weight log-ratios, then one logistic coordinate per theta).
pub fn gradient(mix: &RotatedMixture, data: &PseudoObservations) -> Result<Vec<f64>> {
    let lik = Likelihood::new(mix.family(), data)?;
    let x = lik.param.of_mixture(mix)?;
    Ok(lik.value_and_gradient(&x).1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub mixture: RotatedMixture,
    pub log_likelihood: f64,
    pub converged: bool,
    /// Objective evaluations summed over every start.
    pub n_evaluations: usize,
    pub clamp_count: usize,
    pub start_index: usize,
    pub iterations: usize,
    /// Gradient norm of the mean negative log-likelihood at the optimum.
    pub gradient_norm: f64,
    /// Components whose theta ended within `CAP_FLAG_MARGIN` of the cap.
    pub at_theta_cap: [bool; 4],
}

impl FitResult {
    pub fn hit_cap(&self) -> bool {
        self.at_theta_cap.iter().any(|&b| b)
    }
}

struct StartOutcome {
    x: Vec<f64>,
    mean_nll: f64,
    gradient_norm: f64,
    iterations: usize,
    evaluations: usize,
    converged: bool,
}

/// Fits the mixture from every start in the grid and keeps the converged
/// start with the largest log-likelihood.
pub fn fit(data: &PseudoObservations, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if data.len() < config.min_observations {
        return Err(Error::InsufficientData {
            required: config.min_observations,
            actual: data.len(),
        });
    }
    let lik = Likelihood::new(config.base_family, data)?;
    let n = lik.len() as f64;
    let opts = BfgsOptions {
        max_iterations: config.max_iterations,
        gradient_tolerance: config.gradient_tolerance,
    };
    let outcomes: Vec<StartOutcome> = config
        .multistart_grid
        .par_iter()
        .map(|start| {
            let x0 = lik
                .param
                .unconstrained(&start.weights, &start.thetas)
                .expect("validated start");
            let r = minimize(
                |x| {
                    let (v, g) = lik.value_and_gradient(x);
                    (v / n, g.into_iter().map(|gi| gi / n).collect())
                },
                &x0,
                &opts,
            );
            StartOutcome {
                x: r.x,
                mean_nll: r.value,
                gradient_norm: r.gradient_norm,
                iterations: r.iterations,
                evaluations: r.evaluations,
                converged: r.converged,
            }
        })
        .collect();

    let n_evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    let best_of = |converged_only: bool| {
        outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| (o.converged || !converged_only) && o.mean_nll.is_finite())
            .min_by(|a, b| a.1.mean_nll.total_cmp(&b.1.mean_nll))
    };
    let Some((start_index, best)) = best_of(true) else {
        let (best_loglik, best_grad_norm) = best_of(false)
            .map(|(_, o)| (-o.mean_nll * n, o.gradient_norm))
            .unwrap_or((f64::NEG_INFINITY, f64::INFINITY));
        return Err(Error::NonConvergence {
            best_loglik,
            best_grad_norm,
            n_starts: outcomes.len(),
        });
    };
    let mixture = lik.param.mixture(&best.x)?;
    let at_theta_cap = mixture.thetas().map(|t| t >= THETA_CAP - CAP_FLAG_MARGIN);
    Ok(FitResult {
        log_likelihood: -best.mean_nll * n,
        converged: true,
        n_evaluations,
        clamp_count: data.clamp_count(),
        start_index,
        iterations: best.iterations,
        gradient_norm: best.gradient_norm,
        at_theta_cap,
        mixture,
    })
}
