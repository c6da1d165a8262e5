//! Shared oracles for the integration tests. Nothing here calls into the
//! code path it is used to check.
#![allow(dead_code)]

pub mod synthetic;

pub use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tailcop::{CopulaSpec, Family};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Second mixed central difference of a CDF.
pub fn mixed_difference<F: Fn(f64, f64) -> f64>(cdf: F, u: f64, v: f64, h: f64) -> f64 {
    (cdf(u + h, v + h) - cdf(u + h, v - h) - cdf(u - h, v + h) + cdf(u - h, v - h)) / (4.0 * h * h)
}

/// Mixed difference with the leading O(h²) error removed by Richardson
/// extrapolation over steps h and 2h.
pub fn extrapolated_mixed_difference<F: Fn(f64, f64) -> f64>(
    cdf: F,
    u: f64,
    v: f64,
    h: f64,
) -> f64 {
    (4.0 * mixed_difference(&cdf, u, v, h) - mixed_difference(&cdf, u, v, 2.0 * h)) / 3.0
}

/// Midpoint-rule integral of `exp(log_density)` over an `n × n` grid.
pub fn midpoint_mass(log_density: &[f64], n: usize) -> f64 {
    let cell = 1.0 / (n * n) as f64;
    log_density.iter().map(|l| l.exp()).sum::<f64>() * cell
}

pub fn midpoints(n: usize) -> Vec<f64> {
    (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect()
}

/// A random parameter draw inside the ranges the tests exercise.
pub fn random_spec<R: Rng>(family: Family, rng: &mut R) -> CopulaSpec {
    match family {
        Family::Gumbel => CopulaSpec::gumbel(rng.random_range(1.0..4.0)).unwrap(),
        Family::Joe => CopulaSpec::joe(rng.random_range(1.0..4.0)).unwrap(),
        Family::Clayton => CopulaSpec::clayton(rng.random_range(0.1..4.0)).unwrap(),
        Family::Gaussian => CopulaSpec::gaussian(rng.random_range(-0.8..0.8)).unwrap(),
        Family::Student => {
            CopulaSpec::student(rng.random_range(1.0..10.0), rng.random_range(-0.8..0.8)).unwrap()
        }
    }
}

pub const FAMILIES: [Family; 5] = [
    Family::Gumbel,
    Family::Joe,
    Family::Clayton,
    Family::Gaussian,
    Family::Student,
];

/// Kolmogorov–Smirnov distance of a sample from U(0,1).
pub fn ks_uniform(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let lo = x - i as f64 / n;
            let hi = (i + 1) as f64 / n - x;
            lo.max(hi)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

/// Closed-form tail coefficient of a single-corner family, placed in its
/// native corner: (lambda, corner is UU).
pub fn family_tail(family: Family, theta: f64) -> f64 {
    match family {
        Family::Gumbel | Family::Joe => 2.0 - 2f64.powf(1.0 / theta),
        Family::Clayton => 2f64.powf(-1.0 / theta),
        _ => unreachable!(),
    }
}

// k-th smallest by counting, 1-based.
fn kth_smallest(v: &[f64], k: usize) -> f64 {
    for &c in v {
        let less = v.iter().filter(|&&o| o < c).count();
        let le = v.iter().filter(|&&o| o <= c).count();
        if less < k && k <= le {
            return c;
        }
    }
    unreachable!()
}

/// Joint exceedance count for the empirical tail estimator, by brute force.
/// `None` when either margin has no exceedances.
pub fn brute_force_tail(
    x: &[f64],
    y: &[f64],
    u: f64,
    x_upper: bool,
    y_upper: bool,
) -> Option<usize> {
    let m = x.len();
    let k = (u * m as f64 + 1e-9).floor() as usize;
    let side = |v: &[f64], upper: bool| {
        if upper {
            let t = kth_smallest(v, k);
            v.iter().map(|&a| a > t).collect::<Vec<bool>>()
        } else {
            let t = kth_smallest(v, m - k + 1);
            v.iter().map(|&a| a < t).collect::<Vec<bool>>()
        }
    };
    let (ex, ey) = (side(x, x_upper), side(y, y_upper));
    if !ex.contains(&true) || !ey.contains(&true) {
        return None;
    }
    let mut count = 0;
    for i in 0..m {
        for j in 0..m {
            if i == j && ex[i] && ey[j] {
                count += 1;
            }
        }
    }
    Some(count)
}
