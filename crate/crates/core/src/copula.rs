//! Base bivariate copula families: distribution functions, log densities,
//! tail-dependence coefficients and exact samplers.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dual::Scalar;
use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::special::{
    gauss_legendre_24, ln_gamma, normal_cdf, normal_quantile, student_cdf, student_ln_pdf,
    student_quantile,
};

/// Inputs closer than this to the unit-square boundary are clamped before
/// density evaluation.
pub const CLAMP_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gumbel,
    Joe,
    Clayton,
    Gaussian,
    Student,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gumbel => "gumbel",
            Family::Joe => "joe",
            Family::Clayton => "clayton",
            Family::Gaussian => "gaussian",
            Family::Student => "student",
        }
    }

    pub fn is_archimedean(self) -> bool {
        matches!(self, Family::Gumbel | Family::Joe | Family::Clayton)
    }

    /// Lower end of the parameter range used by the mixture fit. Gumbel and
    /// Joe reduce to independence there; Clayton only approaches it.
    pub fn theta_floor(self) -> f64 {
        match self {
            Family::Clayton => 0.0,
            _ => 1.0,
        }
    }

    /// Corner carrying the tail dependence of the unrotated family.
    pub fn native_corner(self) -> Option<Corner> {
        match self {
            Family::Gumbel | Family::Joe => Some(Corner::UU),
            Family::Clayton => Some(Corner::LL),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gumbel" => Ok(Family::Gumbel),
            "joe" => Ok(Family::Joe),
            "clayton" => Ok(Family::Clayton),
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "student" | "t" => Ok(Family::Student),
            other => Err(Error::Parse(format!("unknown copula family '{other}'"))),
        }
    }
}

/// One of the four corners of the unit square. The first letter refers to
/// the first coordinate: `LU` is "first low, second high".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Corner {
    LL,
    LU,
    UL,
    UU,
}

impl Corner {
    pub const ALL: [Corner; 4] = [Corner::LL, Corner::LU, Corner::UL, Corner::UU];

    /// Whether the first coordinate is in its upper tail.
    pub fn first_upper(self) -> bool {
        matches!(self, Corner::UL | Corner::UU)
    }

    /// Whether the second coordinate is in its upper tail.
    pub fn second_upper(self) -> bool {
        matches!(self, Corner::LU | Corner::UU)
    }

    pub fn from_tails(first_upper: bool, second_upper: bool) -> Corner {
        match (first_upper, second_upper) {
            (false, false) => Corner::LL,
            (false, true) => Corner::LU,
            (true, false) => Corner::UL,
            (true, true) => Corner::UU,
        }
    }

    /// The corner obtained when the two coordinates swap roles.
    pub fn transposed(self) -> Corner {
        Corner::from_tails(self.second_upper(), self.first_upper())
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Corner::LL => "LL",
            Corner::LU => "LU",
            Corner::UL => "UL",
            Corner::UU => "UU",
        }
    }
}

impl fmt::Display for Corner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Corner {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "LL" => Ok(Corner::LL),
            "LU" => Ok(Corner::LU),
            "UL" => Ok(Corner::UL),
            "UU" => Ok(Corner::UU),
            other => Err(Error::Parse(format!(
                "unknown corner '{other}' (expected LL, LU, UL or UU)"
            ))),
        }
    }
}

/// Four-corner tail-dependence coefficients, laid out as
///
/// ```text
/// | LU  UU |
/// | LL  UL |
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TailMatrix {
    pub lu: f64,
    pub uu: f64,
    pub ll: f64,
    pub ul: f64,
}

impl TailMatrix {
    pub fn zero() -> Self {
        TailMatrix::default()
    }

    pub fn single(corner: Corner, value: f64) -> Self {
        let mut m = TailMatrix::zero();
        *m.get_mut(corner) = value;
        m
    }

    pub fn get(&self, corner: Corner) -> f64 {
        match corner {
            Corner::LL => self.ll,
            Corner::LU => self.lu,
            Corner::UL => self.ul,
            Corner::UU => self.uu,
        }
    }

    pub fn get_mut(&mut self, corner: Corner) -> &mut f64 {
        match corner {
            Corner::LL => &mut self.ll,
            Corner::LU => &mut self.lu,
            Corner::UL => &mut self.ul,
            Corner::UU => &mut self.uu,
        }
    }

    pub fn entry_sum(&self) -> f64 {
        self.lu + self.uu + self.ll + self.ul
    }

    /// Matrix for the pair with coordinates exchanged (LU and UL swap).
    pub fn transposed(&self) -> Self {
        TailMatrix {
            lu: self.ul,
            ul: self.lu,
            ..*self
        }
    }

    pub fn scaled(&self, w: f64) -> Self {
        TailMatrix {
            lu: w * self.lu,
            uu: w * self.uu,
            ll: w * self.ll,
            ul: w * self.ul,
        }
    }

    pub fn add(&self, o: &TailMatrix) -> Self {
        TailMatrix {
            lu: self.lu + o.lu,
            uu: self.uu + o.uu,
            ll: self.ll + o.ll,
            ul: self.ul + o.ul,
        }
    }

    pub fn max_abs_diff(&self, o: &TailMatrix) -> f64 {
        Corner::ALL
            .iter()
            .map(|&c| (self.get(c) - o.get(c)).abs())
            .fold(0.0, f64::max)
    }
}

/// A point strictly inside the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitPair {
    u1: f64,
    u2: f64,
}

impl UnitPair {
    pub fn new(u1: f64, u2: f64) -> Result<Self> {
        if u1 > 0.0 && u1 < 1.0 && u2 > 0.0 && u2 < 1.0 {
            Ok(UnitPair { u1, u2 })
        } else {
            Err(Error::Boundary { u1, u2 })
        }
    }

    /// Clamps into `[CLAMP_EPS, 1 - CLAMP_EPS]`, reporting whether any
    /// coordinate moved. Values outside `[0, 1]` are rejected.
    pub fn clamped(u1: f64, u2: f64) -> Result<(Self, bool)> {
        for v in [u1, u2] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutsideUnitInterval { value: v });
            }
        }
        let c1 = u1.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        let c2 = u2.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        Ok((UnitPair { u1: c1, u2: c2 }, c1 != u1 || c2 != u2))
    }

    pub fn u1(&self) -> f64 {
        self.u1
    }

    pub fn u2(&self) -> f64 {
        self.u2
    }

    pub fn swapped(&self) -> Self {
        UnitPair {
            u1: self.u2,
            u2: self.u1,
        }
    }
}

/// A validated base copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CopulaSpec {
    family: Family,
    theta: f64,
    rho: f64,
    nu: f64,
}

fn domain(family: Family, detail: String) -> Error {
    Error::ParameterDomain {
        family: family.name(),
        detail,
    }
}

impl CopulaSpec {
    pub fn gumbel(theta: f64) -> Result<Self> {
        Self::archimedean(Family::Gumbel, theta)
    }

    pub fn joe(theta: f64) -> Result<Self> {
        Self::archimedean(Family::Joe, theta)
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::archimedean(Family::Clayton, theta)
    }

    pub fn archimedean(family: Family, theta: f64) -> Result<Self> {
        let ok = match family {
            Family::Gumbel | Family::Joe => theta.is_finite() && theta >= 1.0,
            Family::Clayton => theta.is_finite() && theta >= -1.0 && theta != 0.0,
            _ => return Err(domain(family, "not an Archimedean family".into())),
        };
        if !ok {
            return Err(domain(family, format!("theta = {theta}")));
        }
        Ok(CopulaSpec {
            family,
            theta,
            rho: 0.0,
            nu: f64::INFINITY,
        })
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(domain(Family::Gaussian, format!("rho = {rho}")));
        }
        Ok(CopulaSpec {
            family: Family::Gaussian,
            theta: f64::NAN,
            rho,
            nu: f64::INFINITY,
        })
    }

    pub fn student(nu: f64, rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(domain(Family::Student, format!("rho = {rho}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(domain(Family::Student, format!("nu = {nu}")));
        }
        Ok(CopulaSpec {
            family: Family::Student,
            theta: f64::NAN,
            rho,
            nu,
        })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Whether tail dependence is confined to a single corner, as needed for
    /// a mixture component.
    pub fn is_single_corner(&self) -> bool {
        match self.family {
            Family::Gumbel | Family::Joe => true,
            Family::Clayton => self.theta > 0.0,
            _ => false,
        }
    }

    /// `C(u1, u2)` for arguments in `[0, 1]`.
    pub fn cdf(&self, u1: f64, u2: f64) -> Result<f64> {
        for v in [u1, u2] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::OutsideUnitInterval { value: v });
            }
        }
        if u1 == 0.0 || u2 == 0.0 {
            return Ok(0.0);
        }
        if u1 == 1.0 {
            return Ok(u2);
        }
        if u2 == 1.0 {
            return Ok(u1);
        }
        let c = match self.family {
            Family::Gumbel => gumbel_cdf(self.theta, u1, u2),
            Family::Joe => joe_cdf(self.theta, u1, u2),
            Family::Clayton => clayton_cdf(self.theta, u1, u2),
            Family::Gaussian | Family::Student => self.elliptical_cdf(u1, u2),
        };
        // Fréchet–Hoeffding bounds absorb rounding at the extremes.
        Ok(frechet_clamp(c, u1, u2))
    }

    /// `ln c(u1, u2)` at an interior point.
    pub fn log_density(&self, p: UnitPair) -> Result<f64> {
        let (u, v) = (p.u1, p.u2);
        Ok(match self.family {
            Family::Gumbel => gumbel_log_density(self.theta, u, v),
            Family::Joe => joe_log_density(self.theta, u, v),
            Family::Clayton if self.theta > 0.0 => clayton_log_density(self.theta, u, v),
            Family::Clayton => {
                if self.theta <= -1.0 {
                    return Err(domain(
                        Family::Clayton,
                        "theta = -1 is the countermonotone copula, which has no density".into(),
                    ));
                }
                clayton_negative_log_density(self.theta, u, v)
            }
            Family::Gaussian => {
                let (x, y) = (normal_quantile(u), normal_quantile(v));
                gaussian_log_density(self.rho, x, y)
            }
            Family::Student => {
                let (x, y) = (student_quantile(u, self.nu), student_quantile(v, self.nu));
                student_log_density(self.nu, self.rho, x, y)
            }
        })
    }

    /// Log density on the tensor grid `xs × ys` (interior points), row-major
    /// with rows indexed by `ys`. Marginal scores are computed once per axis.
    pub fn log_density_grid(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
        for &v in xs.iter().chain(ys) {
            UnitPair::new(v, 0.5)?;
        }
        let mut out = Vec::with_capacity(xs.len() * ys.len());
        match self.family {
            Family::Gaussian | Family::Student => {
                let sx: Vec<f64> = xs.iter().map(|&p| self.score(p)).collect();
                let sy: Vec<f64> = ys.iter().map(|&p| self.score(p)).collect();
                for &y in &sy {
                    for &x in &sx {
                        out.push(if self.family == Family::Gaussian {
                            gaussian_log_density(self.rho, x, y)
                        } else {
                            student_log_density(self.nu, self.rho, x, y)
                        });
                    }
                }
            }
            _ => {
                for &v in ys {
                    for &u in xs {
                        out.push(self.log_density(UnitPair { u1: u, u2: v })?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Tail-dependence coefficients of the unrotated family.
    pub fn tail_matrix(&self) -> TailMatrix {
        match self.family {
            Family::Gumbel | Family::Joe => {
                TailMatrix::single(Corner::UU, 2.0 - 2f64.powf(1.0 / self.theta))
            }
            Family::Clayton if self.theta > 0.0 => {
                TailMatrix::single(Corner::LL, 2f64.powf(-1.0 / self.theta))
            }
            Family::Clayton => TailMatrix::zero(),
            // Zero for every |rho| < 1.
            Family::Gaussian => TailMatrix::zero(),
            Family::Student => {
                let same = student_tail_coefficient(self.nu, self.rho);
                let opposite = student_tail_coefficient(self.nu, -self.rho);
                TailMatrix {
                    uu: same,
                    ll: same,
                    ul: opposite,
                    lu: opposite,
                }
            }
        }
    }

    /// `n` independent draws, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<UnitPair> {
        let mut rng = seeded_rng(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<UnitPair> {
        (0..n).map(|_| self.draw(rng)).collect()
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> UnitPair {
        let (u, v) = match self.family {
            Family::Gumbel => draw_gumbel(self.theta, rng),
            Family::Joe => draw_joe(self.theta, rng),
            Family::Clayton if self.theta > 0.0 => draw_clayton(self.theta, rng),
            Family::Clayton => draw_clayton_conditional(self.theta, rng),
            Family::Gaussian => {
                let (z1, z2) = correlated_normals(self.rho, rng);
                (normal_cdf(z1), normal_cdf(z2))
            }
            Family::Student => {
                let (z1, z2) = correlated_normals(self.rho, rng);
                let chi2: f64 = ChiSquared::new(self.nu).expect("nu > 0").sample(rng);
                let scale = (chi2 / self.nu).sqrt();
                (
                    student_cdf(z1 / scale, self.nu),
                    student_cdf(z2 / scale, self.nu),
                )
            }
        };
        UnitPair {
            u1: open_unit(u),
            u2: open_unit(v),
        }
    }

    // Gaussian and Student CDFs by integrating the conditional distribution
    // h(v | s) = P(V <= v | U = s) over s. Panels are graded toward the
    // integration endpoint where the integrand has a power-law singularity,
    // and the node set scales with the limit so the quadrature error is a
    // smooth function of (u1, u2).
    fn elliptical_cdf(&self, u1: f64, u2: f64) -> f64 {
        const PANELS: [f64; 19] = [
            0.0, 1e-12, 1e-10, 1e-8, 1e-6, 1e-4, 1e-3, 1e-2, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6,
            0.7, 0.8, 0.9, 1.0,
        ];
        let rule = gauss_legendre_24();
        let y = self.score(u2);
        let h = |s: f64| self.conditional_cdf(self.score(s), y);
        if u1 <= 0.5 {
            PANELS
                .windows(2)
                .map(|w| rule.integrate(u1 * w[0], u1 * w[1], h))
                .sum()
        } else {
            let r = 1.0 - u1;
            let upper: f64 = PANELS
                .windows(2)
                .map(|w| {
                    // symmetric margins: the score of 1 - t is minus the score of t
                    rule.integrate(r * w[0], r * w[1], |t| {
                        self.conditional_cdf(-self.score(t), y)
                    })
                })
                .sum();
            u2 - upper
        }
    }

    fn score(&self, p: f64) -> f64 {
        match self.family {
            Family::Gaussian => normal_quantile(p),
            _ => student_quantile(p, self.nu),
        }
    }

    fn conditional_cdf(&self, x: f64, y: f64) -> f64 {
        let rho = self.rho;
        if x.is_infinite() {
            return match self.family {
                Family::Gaussian if rho == 0.0 => normal_cdf(y),
                Family::Gaussian => f64::from(u8::from(rho * x < 0.0)),
                _ => {
                    let limit = -rho * x.signum() * ((self.nu + 1.0) / (1.0 - rho * rho)).sqrt();
                    student_cdf(limit, self.nu + 1.0)
                }
            };
        }
        match self.family {
            Family::Gaussian => normal_cdf((y - rho * x) / (1.0 - rho * rho).sqrt()),
            _ => {
                let nu = self.nu;
                let scale = ((nu + x * x) * (1.0 - rho * rho) / (nu + 1.0)).sqrt();
                student_cdf((y - rho * x) / scale, nu + 1.0)
            }
        }
    }
}

/// Clamps a CDF value into the Fréchet–Hoeffding bounds at `(u, v)`.
pub(crate) fn frechet_clamp(c: f64, u: f64, v: f64) -> f64 {
    let hi = u.min(v);
    c.clamp((u + v - 1.0).max(0.0).min(hi), hi)
}

impl<'de> Deserialize<'de> for CopulaSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            family: Family,
            #[serde(default)]
            theta: Option<f64>,
            #[serde(default)]
            rho: Option<f64>,
            #[serde(default)]
            nu: Option<f64>,
        }
        let raw = Raw::deserialize(d)?;
        let missing = |name: &str| serde::de::Error::custom(format!("missing field `{name}`"));
        let spec = match raw.family {
            Family::Gaussian => CopulaSpec::gaussian(raw.rho.ok_or_else(|| missing("rho"))?),
            Family::Student => CopulaSpec::student(
                raw.nu.ok_or_else(|| missing("nu"))?,
                raw.rho.ok_or_else(|| missing("rho"))?,
            ),
            f => CopulaSpec::archimedean(f, raw.theta.ok_or_else(|| missing("theta"))?),
        };
        spec.map_err(serde::de::Error::custom)
    }
}

/// `f(nu, rho) = 2 T_{nu+1}(-sqrt((nu+1)(1-rho)/(1+rho)))`.
pub fn student_tail_coefficient(nu: f64, rho: f64) -> f64 {
    let arg = -((nu + 1.0) * (1.0 - rho) / (1.0 + rho)).sqrt();
    2.0 * student_cdf(arg, nu + 1.0)
}

fn open_unit(x: f64) -> f64 {
    x.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

// --- distribution functions ------------------------------------------------

fn gumbel_cdf(theta: f64, u: f64, v: f64) -> f64 {
    let lx = (-u.ln()).ln();
    let ly = (-v.ln()).ln();
    let ln_s = crate::special::log_add_exp(theta * lx, theta * ly);
    (-(ln_s / theta).exp()).exp()
}

fn joe_cdf(theta: f64, u: f64, v: f64) -> f64 {
    let la = theta * (-u).ln_1p();
    let lb = theta * (-v).ln_1p();
    // D = 1 - (1 - a)(1 - b)
    let prod = (-la.exp_m1()) * (-lb.exp_m1());
    let ln_d = (-prod).ln_1p();
    -(ln_d / theta).exp_m1()
}

fn clayton_cdf(theta: f64, u: f64, v: f64) -> f64 {
    if theta > 0.0 {
        let z1 = -theta * u.ln();
        let z2 = -theta * v.ln();
        let ln_t = crate::special::log_add_exp(z1, z2 + (-(-z2).exp_m1()).ln());
        (-ln_t / theta).exp()
    } else {
        let t = u.powf(-theta) + v.powf(-theta) - 1.0;
        if t <= 0.0 {
            0.0
        } else {
            t.powf(-1.0 / theta)
        }
    }
}

// --- log densities, generic in the parameter for exact derivatives -------

/// Gumbel log density with `t_i = (-ln u_i)^theta` kept in log space.
pub fn gumbel_log_density<S: Scalar>(theta: S, u: f64, v: f64) -> S {
    let x = -u.ln();
    let y = -v.ln();
    gumbel_kernel(theta, x.ln(), y.ln(), x + y)
}

// Gumbel log density from lx = ln(-ln u), ly = ln(-ln v) and -ln u - ln v.
pub(crate) fn gumbel_kernel<S: Scalar>(theta: S, lx: f64, ly: f64, x_plus_y: f64) -> S {
    let ln_s = (theta * lx).log_add_exp(theta * ly);
    let a = (ln_s / theta).exp();
    -a + x_plus_y
        + (theta - 1.0) * (lx + ly)
        + (theta.recip() - 2.0) * ln_s
        + (a + theta - 1.0).ln()
}

pub fn joe_log_density<S: Scalar>(theta: S, u: f64, v: f64) -> S {
    joe_kernel(theta, (-u).ln_1p(), (-v).ln_1p())
}

// Joe log density from ln(1 - u) and ln(1 - v).
pub(crate) fn joe_kernel<S: Scalar>(theta: S, lu: f64, lv: f64) -> S {
    let la = theta * lu;
    let lb = theta * lv;
    // ln(1 - a)
    let ln_comp_a = (-(la.exp_m1())).ln();
    let ln_d = la.log_add_exp(lb + ln_comp_a);
    (theta.recip() - 2.0) * ln_d + (theta - 1.0) * (lu + lv) + (ln_d.exp() + theta - 1.0).ln()
}

/// Clayton log density for `theta > 0`.
pub fn clayton_log_density<S: Scalar>(theta: S, u: f64, v: f64) -> S {
    clayton_kernel(theta, u.ln(), v.ln())
}

pub(crate) fn clayton_kernel<S: Scalar>(theta: S, lu: f64, lv: f64) -> S {
    let z1 = -theta * lu;
    let z2 = -theta * lv;
    let ln_t = z1.log_add_exp(z2 + (-((-z2).exp_m1())).ln());
    (theta + 1.0).ln() - (theta + 1.0) * (lu + lv) - (theta.recip() + 2.0) * ln_t
}

fn clayton_negative_log_density(theta: f64, u: f64, v: f64) -> f64 {
    let t = u.powf(-theta) + v.powf(-theta) - 1.0;
    if t <= 0.0 {
        return f64::NEG_INFINITY;
    }
    (1.0 + theta).ln() - (theta + 1.0) * (u.ln() + v.ln()) - (2.0 + 1.0 / theta) * t.ln()
}

/// Log density of an Archimedean single-corner family, generic in `theta`.
pub fn archimedean_log_density<S: Scalar>(family: Family, theta: S, u: f64, v: f64) -> S {
    match family {
        Family::Gumbel => gumbel_log_density(theta, u, v),
        Family::Joe => joe_log_density(theta, u, v),
        Family::Clayton => clayton_log_density(theta, u, v),
        _ => panic!("{family} is not a single-corner Archimedean family"),
    }
}

fn gaussian_log_density(rho: f64, x: f64, y: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    -0.5 * r2.ln() - (rho * rho * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * r2)
}

fn student_log_density(nu: f64, rho: f64, x: f64, y: f64) -> f64 {
    let r2 = 1.0 - rho * rho;
    let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * r2);
    let joint = ln_gamma(0.5 * (nu + 2.0))
        - ln_gamma(0.5 * nu)
        - (nu * std::f64::consts::PI).ln()
        - 0.5 * r2.ln()
        - 0.5 * (nu + 2.0) * q.ln_1p();
    joint - student_ln_pdf(x, nu) - student_ln_pdf(y, nu)
}

// --- samplers ---------------------------------------------------------------

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

// Positive stable frailty with Laplace transform exp(-t^alpha), Kanter's
// representation.
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let theta = std::f64::consts::PI * rng.random::<f64>();
    let w = exp1(rng);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = ((1.0 - alpha) * theta).sin() / w;
    a * b.powf((1.0 - alpha) / alpha)
}

fn draw_gumbel<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    if theta == 1.0 {
        return (rng.random(), rng.random());
    }
    let alpha = 1.0 / theta;
    let v = positive_stable(alpha, rng);
    let gen = |e: f64| (-(e / v).powf(alpha)).exp();
    let (e1, e2) = (exp1(rng), exp1(rng));
    (gen(e1), gen(e2))
}

fn draw_clayton<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    let v: f64 = Gamma::new(1.0 / theta, 1.0).expect("theta > 0").sample(rng);
    let gen = |e: f64| (-(e / v).ln_1p() / theta).exp();
    let (e1, e2) = (exp1(rng), exp1(rng));
    (gen(e1), gen(e2))
}

// Conditional inversion, valid for theta in (-1, 0).
fn draw_clayton_conditional<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    let u: f64 = rng.random();
    let w: f64 = rng.random();
    let t = (w.powf(-theta / (1.0 + theta)) - 1.0) * u.powf(-theta) + 1.0;
    (u, t.max(0.0).powf(-1.0 / theta))
}

/// Sibuya variate with `P(V = 1) = alpha`, generating function
/// `1 - (1 - z)^alpha`.
fn sibuya<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    if u <= alpha {
        return 1.0;
    }
    let x_max = 1.0 / f64::EPSILON;
    let g_inv = ((1.0 - u) * ln_gamma(1.0 - alpha).exp()).powf(-1.0 / alpha);
    let floor = g_inv.floor();
    if g_inv > x_max {
        return floor;
    }
    // 1 / (floor * B(floor, 1 - alpha))
    let ln_b = ln_gamma(floor) + ln_gamma(1.0 - alpha) - ln_gamma(floor + 1.0 - alpha);
    if (1.0 - u) < (-(floor.ln() + ln_b)).exp() {
        g_inv.ceil()
    } else {
        floor
    }
}

fn draw_joe<R: Rng + ?Sized>(theta: f64, rng: &mut R) -> (f64, f64) {
    if theta == 1.0 {
        return (rng.random(), rng.random());
    }
    let alpha = 1.0 / theta;
    let v = sibuya(alpha, rng);
    // psi(t) = 1 - (1 - e^{-t})^alpha
    let gen = |e: f64| -(alpha * (-(-e / v).exp_m1()).ln()).exp_m1();
    let (e1, e2) = (exp1(rng), exp1(rng));
    (gen(e1), gen(e2))
}

fn correlated_normals<R: Rng + ?Sized>(rho: f64, rng: &mut R) -> (f64, f64) {
    let z1: f64 = StandardNormal.sample(rng);
    let z3: f64 = StandardNormal.sample(rng);
    (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z3)
}
