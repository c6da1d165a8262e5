//! BFGS with a strong-Wolfe line search.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BfgsOptions {
    pub max_iterations: usize,
    /// Stop once the Euclidean norm of the gradient is at most this.
    pub gradient_tolerance: f64,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions {
            max_iterations: 500,
            gradient_tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub gradient: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const C1: f64 = 1e-4;
const C2: f64 = 0.9;
const MAX_LINE_SEARCH: usize = 40;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Point {
    alpha: f64,
    value: f64,
    slope: f64,
    x: Vec<f64>,
    gradient: Vec<f64>,
}

struct Problem<'a, F> {
    f: &'a mut F,
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Problem<'_, F> {
    fn eval_along(&mut self, x: &[f64], p: &[f64], alpha: f64) -> Point {
        let xt: Vec<f64> = x.iter().zip(p).map(|(a, b)| a + alpha * b).collect();
        let (value, gradient) = (self.f)(&xt);
        self.evaluations += 1;
        let finite = value.is_finite() && gradient.iter().all(|g| g.is_finite());
        Point {
            alpha,
            value: if finite { value } else { f64::INFINITY },
            slope: if finite { dot(&gradient, p) } else { f64::NAN },
            x: xt,
            gradient,
        }
    }
}

// Minimizer of the cubic through two points with known slopes, or None.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    if !(a.value.is_finite() && b.value.is_finite() && a.slope.is_finite() && b.slope.is_finite()) {
        return None;
    }
    let d1 = a.slope + b.slope - 3.0 * (a.value - b.value) / (a.alpha - b.alpha);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.alpha - a.alpha).signum() * disc.sqrt();
    let t = b.alpha - (b.alpha - a.alpha) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    prob: &mut Problem<'_, F>,
    x: &[f64],
    f0: f64,
    d0: f64,
    p: &[f64],
    alpha0: f64,
) -> Option<Point> {
    let start = Point {
        alpha: 0.0,
        value: f0,
        slope: d0,
        x: x.to_vec(),
        gradient: Vec::new(),
    };
    let mut prev = start;
    let mut alpha = alpha0;
    for i in 0..MAX_LINE_SEARCH {
        let cur = prob.eval_along(x, p, alpha);
        if cur.value > f0 + C1 * alpha * d0 || (i > 0 && cur.value >= prev.value) {
            return zoom(prob, x, f0, d0, p, prev, cur);
        }
        if cur.slope.abs() <= -C2 * d0 {
            return Some(cur);
        }
        if cur.slope >= 0.0 {
            return zoom(prob, x, f0, d0, p, cur, prev);
        }
        alpha *= 2.0;
        prev = cur;
    }
    (prev.alpha > 0.0).then_some(prev)
}

fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    prob: &mut Problem<'_, F>,
    x: &[f64],
    f0: f64,
    d0: f64,
    p: &[f64],
    mut lo: Point,
    mut hi: Point,
) -> Option<Point> {
    for _ in 0..MAX_LINE_SEARCH {
        let (a, b) = (lo.alpha.min(hi.alpha), lo.alpha.max(hi.alpha));
        let width = b - a;
        if width <= 1e-16 * b.max(1e-300) {
            break;
        }
        let t = match cubic_min(&lo, &hi) {
            Some(t) if t > a + 0.1 * width && t < b - 0.1 * width => t,
            _ => 0.5 * (a + b),
        };
        let cur = prob.eval_along(x, p, t);
        if cur.value > f0 + C1 * t * d0 || cur.value >= lo.value {
            hi = cur;
        } else {
            if cur.slope.abs() <= -C2 * d0 {
                return Some(cur);
            }
            if cur.slope * (hi.alpha - lo.alpha) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // settle for sufficient decrease without the curvature condition
    (lo.alpha > 0.0 && lo.value < f0).then_some(lo)
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: &[f64], opts: &BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut prob = Problem {
        f: &mut f,
        evaluations: 0,
    };
    let first = prob.eval_along(x0, &vec![0.0; n], 0.0);
    let mut x = first.x;
    let mut value = first.value;
    let mut g = first.gradient;
    let identity = |scale: f64| {
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            h[i * n + i] = scale;
        }
        h
    };
    let mut h = identity(1.0);
    let mut fresh = true;
    let mut iterations = 0;
    if !value.is_finite() {
        return BfgsResult {
            gradient_norm: f64::INFINITY,
            x,
            value,
            gradient: g,
            iterations,
            evaluations: prob.evaluations,
            converged: false,
        };
    }
    while iterations < opts.max_iterations && norm(&g) > opts.gradient_tolerance {
        iterations += 1;
        let mut p: Vec<f64> = (0..n).map(|i| -dot(&h[i * n..(i + 1) * n], &g)).collect();
        let mut d0 = dot(&g, &p);
        if d0 >= 0.0 || !d0.is_finite() {
            h = identity(1.0);
            fresh = true;
            p = g.iter().map(|v| -v).collect();
            d0 = dot(&g, &p);
        }
        let alpha0 = if fresh {
            (1.0 / norm(&p)).min(1.0)
        } else {
            1.0
        };
        let Some(step) = line_search(&mut prob, &x, value, d0, &p, alpha0) else {
            if fresh {
                break;
            }
            h = identity(1.0);
            fresh = true;
            continue;
        };
        let s: Vec<f64> = step.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = step.gradient.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if fresh && sy > 0.0 {
            h = identity(sy / dot(&y, &y));
        }
        if sy > 1e-12 * norm(&s) * norm(&y) {
            bfgs_update(&mut h, &s, &y, sy);
            fresh = false;
        }
        let improved = value - step.value;
        x = step.x;
        g = step.gradient;
        value = step.value;
        if improved == 0.0 && s.iter().all(|v| *v == 0.0) {
            break;
        }
    }
    let gradient_norm = norm(&g);
    BfgsResult {
        converged: gradient_norm <= opts.gradient_tolerance,
        gradient_norm,
        x,
        value,
        gradient: g,
        iterations,
        evaluations: prob.evaluations,
    }
}

// H <- (I - rho s y') H (I - rho y s') + rho s s'
fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| dot(&h[i * n..(i + 1) * n], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] +=
                -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        (v, g)
    }

    #[test]
    fn solves_rosenbrock() {
        let r = minimize(rosenbrock, &[-1.2, 1.0], &BfgsOptions::default());
        assert!(r.converged, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-7 && (r.x[1] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn solves_ill_conditioned_quadratic() {
        let scales = [1.0, 10.0, 1e3, 1e5];
        let f = |x: &[f64]| {
            let v = x
                .iter()
                .zip(&scales)
                .map(|(a, s)| 0.5 * s * (a - 1.0).powi(2))
                .sum();
            let g = x.iter().zip(&scales).map(|(a, s)| s * (a - 1.0)).collect();
            (v, g)
        };
        let r = minimize(f, &[0.0; 4], &BfgsOptions::default());
        assert!(r.converged);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn reports_failure_to_converge() {
        let opts = BfgsOptions {
            max_iterations: 2,
            gradient_tolerance: 1e-12,
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &opts);
        assert!(!r.converged);
        assert_eq!(r.iterations, 2);
    }
}
