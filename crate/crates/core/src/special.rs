//! Special functions used by the elliptical copulas and the Student tail
//! coefficient: regularized incomplete beta, Student-t and normal
//! distribution functions with their inverses, and Gauss-Legendre rules.

use std::f64::consts::{PI, SQRT_2};
use std::sync::OnceLock;

use statrs::function::erf::{erfc, erfc_inv};
pub use statrs::function::gamma::ln_gamma;

const CF_EPS: f64 = 1e-16;
const CF_TINY: f64 = 1e-300;
const CF_MAX_ITER: usize = 500;

/// Natural log of the beta function.
pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_inc_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_inc_reg_split(a, b, x, 1.0 - x)
}

/// `I_x(a, b)` with `1 - x` supplied separately, so callers that know the
/// complement more precisely than `1.0 - x` do not lose digits.
pub fn beta_inc_reg_split(a: f64, b: f64, x: f64, one_minus_x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if one_minus_x <= 0.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * one_minus_x.ln() - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_cf(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_cf(b, a, one_minus_x) / b
    }
}

// Continued fraction for the incomplete beta, modified Lentz evaluation.
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    h
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

pub fn normal_ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - 0.5 * (2.0 * PI).ln()
}

/// Standard normal quantile, polished with one Newton step.
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erfc_inv(2.0 * p);
    let pdf = normal_ln_pdf(x).exp();
    if pdf > 0.0 {
        x - (normal_cdf(x) - p) / pdf
    } else {
        x
    }
}

/// Student-t distribution function with `nu > 0` degrees of freedom.
pub fn student_cdf(x: f64, nu: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_infinite() {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let lower = student_lower_tail(x.abs(), nu);
    if x < 0.0 {
        lower
    } else {
        1.0 - lower
    }
}

// P(T <= -|x|) = I_{nu/(nu+x^2)}(nu/2, 1/2) / 2
fn student_lower_tail(ax: f64, nu: f64) -> f64 {
    let x2 = ax * ax;
    let z = nu / (nu + x2);
    let one_minus_z = x2 / (nu + x2);
    0.5 * beta_inc_reg_split(0.5 * nu, 0.5, z, one_minus_z)
}

pub fn student_ln_pdf(x: f64, nu: f64) -> f64 {
    ln_gamma(0.5 * (nu + 1.0))
        - ln_gamma(0.5 * nu)
        - 0.5 * (nu * PI).ln()
        - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p()
}

/// Student-t quantile. Closed forms for one and two degrees of freedom,
/// otherwise a bracketed Newton iteration on the log lower tail.
pub fn student_quantile(p: f64, nu: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    if nu == 1.0 {
        // tan(pi (p - 1/2)) written to keep precision in both tails
        return if p < 0.5 {
            -1.0 / (PI * p).tan()
        } else {
            1.0 / (PI * (1.0 - p)).tan()
        };
    }
    if nu == 2.0 {
        return (2.0 * p - 1.0) / (2.0 * p * (1.0 - p)).sqrt();
    }
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    sign * student_upper_quantile(q, nu)
}

// Returns a > 0 with P(T <= -a) = q for q < 0.5.
fn student_upper_quantile(q: f64, nu: f64) -> f64 {
    let ln_q = q.ln();
    let f = |a: f64| student_lower_tail(a, nu).ln() - ln_q;
    let mut lo = 0.0;
    let mut hi = (-normal_quantile(q)).max(1.0);
    while f(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return hi;
        }
    }
    let mut a = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fa = f(a);
        if fa > 0.0 {
            lo = a;
        } else {
            hi = a;
        }
        // d/da ln P(T <= -a) = -pdf(a) / P(T <= -a)
        let slope = -(student_ln_pdf(a, nu) - student_lower_tail(a, nu).ln()).exp();
        let mut next = a - fa / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let step = (next - a).abs();
        a = next;
        if step <= 1e-15 * a.max(1.0) || hi - lo <= 4.0 * f64::EPSILON * a.max(1.0) {
            break;
        }
    }
    a
}

/// Gauss-Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

// Legendre polynomial P_n(x) and its derivative.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

pub(crate) fn gauss_legendre_24() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(24))
}

/// Numerically stable `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incomplete_beta_matches_statrs() {
        for &(a, b, x) in &[
            (0.5, 0.5, 0.3),
            (2.0, 0.5, 0.9),
            (5.0, 3.0, 0.2),
            (0.7, 4.5, 0.999),
            (30.0, 0.5, 0.95),
        ] {
            let ours = beta_inc_reg(a, b, x);
            let theirs = statrs::function::beta::beta_reg(a, b, x);
            assert!(
                (ours - theirs).abs() < 1e-13,
                "{a} {b} {x}: {ours} vs {theirs}"
            );
        }
    }

    #[test]
    fn student_cdf_closed_forms() {
        for &x in &[-30.0f64, -3.0, -1.0, -0.2, 0.0, 0.5, 2.0, 12.0] {
            let cauchy = 0.5 + x.atan() / PI;
            assert!((student_cdf(x, 1.0) - cauchy).abs() < 1e-14);
            let t2 = 0.5 + x / (2.0 * (2.0 + x * x).sqrt());
            assert!((student_cdf(x, 2.0) - t2).abs() < 1e-14);
        }
    }

    #[test]
    fn student_quantile_inverts_cdf() {
        for &nu in &[0.7, 1.0, 2.0, 3.5, 10.0, 80.0] {
            for &p in &[1e-10, 1e-4, 0.03, 0.3, 0.5, 0.77, 0.999] {
                let x = student_quantile(p, nu);
                let back = student_cdf(x, nu);
                assert!(((back - p) / p.min(1.0 - p)).abs() < 1e-11, "nu={nu} p={p}");
            }
        }
    }

    #[test]
    fn normal_quantile_round_trip() {
        for &p in &[1e-12, 0.001, 0.2, 0.5, 0.9, 0.999999] {
            let x = normal_quantile(p);
            assert!(((normal_cdf(x) - p) / p.min(1.0 - p)).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(24);
        let val = rule.integrate(0.0, 2.0, |x| x.powi(40));
        let exact = 2f64.powi(41) / 41.0;
        assert!(((val - exact) / exact).abs() < 1e-13);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }
}
