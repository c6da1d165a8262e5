//! Quarter-turn rotations of a base copula and the four-corner mixture.
//!
//! A rotation by 90° counterclockwise maps `(U, V)` to `(1 - V, U)`, so the
//! four rotations form the cyclic group of order four. For the exchangeable
//! families used here a quarter turn coincides with a reflection of one
//! coordinate, which gives the familiar formulas
//!
//! ```text
//! R0   C(u, v)
//! R90  v - C(1 - u, v)
//! R180 u + v - 1 + C(1 - u, 1 - v)
//! R270 u - C(u, 1 - v)
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::copula::{frechet_clamp, CopulaSpec, Corner, Family, TailMatrix, UnitPair};
use crate::error::{Error, Result};
use crate::rng::{seeded_rng, SimRng};
use rand::Rng;

/// Tolerance on the weight sum of a mixture.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Corner targeted by mixture component `k`.
pub const CORNER_ORDER: [Corner; 4] = [Corner::UU, Corner::LU, Corner::LL, Corner::UL];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rotation {
    R0,
    R90,
    R180,
    R270,
}

impl Rotation {
    pub const ALL: [Rotation; 4] = [Rotation::R0, Rotation::R90, Rotation::R180, Rotation::R270];

    pub fn quarter_turns(self) -> u8 {
        match self {
            Rotation::R0 => 0,
            Rotation::R90 => 1,
            Rotation::R180 => 2,
            Rotation::R270 => 3,
        }
    }

    pub fn from_quarter_turns(k: u8) -> Rotation {
        Rotation::ALL[usize::from(k % 4)]
    }

    /// `self` applied after `first`.
    pub fn after(self, first: Rotation) -> Rotation {
        Rotation::from_quarter_turns(self.quarter_turns() + first.quarter_turns())
    }

    pub fn inverse(self) -> Rotation {
        Rotation::from_quarter_turns(4 - self.quarter_turns())
    }

    /// Where a corner of the base copula ends up.
    pub fn map_corner(self, corner: Corner) -> Corner {
        let (mut first, mut second) = (corner.first_upper(), corner.second_upper());
        for _ in 0..self.quarter_turns() {
            // (U, V) -> (1 - V, U)
            (first, second) = (!second, first);
        }
        Corner::from_tails(first, second)
    }

    /// The rotation carrying corner `from` to corner `to`.
    pub fn between(from: Corner, to: Corner) -> Rotation {
        Rotation::ALL
            .into_iter()
            .find(|r| r.map_corner(from) == to)
            .expect("quarter turns act transitively on corners")
    }

    /// Distribution function of the rotated pair, given the base CDF.
    pub fn apply_cdf<F: Fn(f64, f64) -> f64>(self, base: F, u: f64, v: f64) -> f64 {
        match self {
            Rotation::R0 => base(u, v),
            Rotation::R90 => v - base(v, 1.0 - u),
            Rotation::R180 => u + v - 1.0 + base(1.0 - u, 1.0 - v),
            Rotation::R270 => u - base(1.0 - v, u),
        }
    }

    /// Point of the base copula whose density equals the rotated density at
    /// `(u, v)`.
    pub fn preimage(self, u: f64, v: f64) -> (f64, f64) {
        match self {
            Rotation::R0 => (u, v),
            Rotation::R90 => (v, 1.0 - u),
            Rotation::R180 => (1.0 - u, 1.0 - v),
            Rotation::R270 => (1.0 - v, u),
        }
    }

    /// Image of a base-copula point under the rotation (inverse of
    /// [`Rotation::preimage`]).
    pub fn image(self, u: f64, v: f64) -> (f64, f64) {
        self.inverse().preimage(u, v)
    }
}

impl fmt::Display for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", u16::from(self.quarter_turns()) * 90)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotatedComponent {
    pub base: CopulaSpec,
    pub rotation: Rotation,
}

impl RotatedComponent {
    pub fn new(base: CopulaSpec, rotation: Rotation) -> Self {
        RotatedComponent { base, rotation }
    }

    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::OutsideUnitInterval {
                value: if (0.0..=1.0).contains(&u) { v } else { u },
            });
        }
        // the base is only ever evaluated on [0, 1]^2
        let base = |a: f64, b: f64| self.base.cdf(a, b).expect("argument in [0, 1]");
        let c = self.rotation.apply_cdf(base, u, v);
        Ok(frechet_clamp(c, u, v))
    }

    pub fn log_density(&self, p: UnitPair) -> Result<f64> {
        let (a, b) = self.rotation.preimage(p.u1(), p.u2());
        self.base.log_density(UnitPair::new(a, b)?)
    }

    /// Tail matrix of the rotated component. Only single-corner bases are
    /// accepted; a Student base has dependence in every corner.
    pub fn tail_matrix(&self) -> Result<TailMatrix> {
        if !self.base.is_single_corner() {
            return Err(Error::NotSingleCorner(format!(
                "{} with its tail dependence outside a single corner",
                self.base.family()
            )));
        }
        let base = self.base.tail_matrix();
        let mut out = TailMatrix::zero();
        for c in Corner::ALL {
            *out.get_mut(self.rotation.map_corner(c)) += base.get(c);
        }
        Ok(out)
    }

    /// The corner carrying this component's tail dependence.
    pub fn corner(&self) -> Option<Corner> {
        if !self.base.is_single_corner() {
            return None;
        }
        self.base
            .family()
            .native_corner()
            .map(|c| self.rotation.map_corner(c))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<UnitPair> {
        let mut rng = seeded_rng(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<UnitPair> {
        self.base
            .sample_with(rng, n)
            .into_iter()
            .map(|p| self.rotate_point(p))
            .collect()
    }

    fn rotate_point(&self, p: UnitPair) -> UnitPair {
        let (a, b) = self.rotation.image(p.u1(), p.u2());
        UnitPair::new(a, b).unwrap_or(p)
    }
}

/// Four rotated single-corner components, one per corner, with weights on
/// the simplex. Component `k` targets `CORNER_ORDER[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedMixture {
    family: Family,
    components: [RotatedComponent; 4],
    weights: [f64; 4],
}

fn check_weights(weights: &[f64; 4]) -> Result<()> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidWeights(format!(
            "weights must be finite and nonnegative: {weights:?}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {sum}")));
    }
    Ok(())
}

impl RotatedMixture {
    /// Builds the mixture from a single-corner base family.
    pub fn new(family: Family, weights: [f64; 4], thetas: [f64; 4]) -> Result<Self> {
        check_weights(&weights)?;
        let native = family.native_corner().ok_or_else(|| {
            Error::NotSingleCorner(format!("{family} cannot be a mixture component"))
        })?;
        let mut components = Vec::with_capacity(4);
        for (k, &theta) in thetas.iter().enumerate() {
            let base = CopulaSpec::archimedean(family, theta)?;
            if !base.is_single_corner() {
                return Err(Error::NotSingleCorner(format!(
                    "{family} with theta = {theta}"
                )));
            }
            components.push(RotatedComponent::new(
                base,
                Rotation::between(native, CORNER_ORDER[k]),
            ));
        }
        Ok(RotatedMixture {
            family,
            components: components.try_into().expect("four components"),
            weights,
        })
    }

    /// Equal weights, every component at independence (Gumbel/Joe, theta = 1).
    pub fn independence(family: Family) -> Result<Self> {
        RotatedMixture::new(family, [0.25; 4], [1.0; 4])
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn weights(&self) -> [f64; 4] {
        self.weights
    }

    pub fn thetas(&self) -> [f64; 4] {
        self.components.map(|c| c.base.theta())
    }

    pub fn components(&self) -> &[RotatedComponent; 4] {
        &self.components
    }

    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        let mut total = 0.0;
        for (w, c) in self.weights.iter().zip(&self.components) {
            total += w * c.cdf(u, v)?;
        }
        Ok(frechet_clamp(total, u, v))
    }

    /// `ln Σ w_k c_k(u, v)` by log-sum-exp over the nonzero weights.
    pub fn log_density(&self, p: UnitPair) -> Result<f64> {
        let mut terms = [f64::NEG_INFINITY; 4];
        for (k, (w, c)) in self.weights.iter().zip(&self.components).enumerate() {
            if *w > 0.0 {
                terms[k] = w.ln() + c.log_density(p)?;
            }
        }
        Ok(log_sum_exp(&terms))
    }

    pub fn tail_matrix(&self) -> TailMatrix {
        self.weights
            .iter()
            .zip(&self.components)
            .fold(TailMatrix::zero(), |acc, (w, c)| {
                acc.add(
                    &c.tail_matrix()
                        .expect("single-corner components")
                        .scaled(*w),
                )
            })
    }

    /// Draws by choosing a component with probability `w_k`, then sampling it.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<UnitPair> {
        let mut rng: SimRng = seeded_rng(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<UnitPair> {
        (0..n)
            .map(|_| {
                let k = pick(&self.weights, rng.random::<f64>());
                self.components[k].sample_with(rng, 1)[0]
            })
            .collect()
    }

    /// Weights below this are reported as effectively zero.
    pub const NEGLIGIBLE_WEIGHT: f64 = 1e-6;

    pub fn negligible_components(&self) -> Vec<usize> {
        (0..4)
            .filter(|&k| self.weights[k] < Self::NEGLIGIBLE_WEIGHT)
            .collect()
    }

    pub fn to_json(&self) -> MixtureJson {
        MixtureJson {
            family: self.family,
            weights: self.weights,
            thetas: self.thetas(),
            corner_order: CORNER_ORDER,
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("plain numeric document")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: MixtureJson = serde_json::from_str(s)?;
        doc.into_mixture()
    }
}

fn pick(weights: &[f64; 4], x: f64) -> usize {
    let mut acc = 0.0;
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if x < acc {
            return k;
        }
    }
    // rounding in the cumulative sum: fall back to the last positive weight
    (0..4).rev().find(|&k| weights[k] > 0.0).unwrap_or(3)
}

pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let m = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + terms.iter().map(|t| (t - m).exp()).sum::<f64>().ln()
}

/// On-disk form of a fitted mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureJson {
    pub family: Family,
    pub weights: [f64; 4],
    pub thetas: [f64; 4],
    pub corner_order: [Corner; 4],
}

impl MixtureJson {
    /// Reorders components into the canonical corner order and validates.
    pub fn into_mixture(self) -> Result<RotatedMixture> {
        let mut weights = [0.0; 4];
        let mut thetas = [0.0; 4];
        for (k, target) in CORNER_ORDER.iter().enumerate() {
            let idx = self
                .corner_order
                .iter()
                .position(|c| c == target)
                .ok_or_else(|| {
                    Error::Parse(format!(
                        "corner_order is missing {target}: {:?}",
                        self.corner_order
                    ))
                })?;
            weights[k] = self.weights[idx];
            thetas[k] = self.thetas[idx];
        }
        RotatedMixture::new(self.family, weights, thetas)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gumbel(theta: f64) -> CopulaSpec {
        CopulaSpec::gumbel(theta).unwrap()
    }

    #[test]
    fn group_table() {
        use Rotation::*;
        assert_eq!(R90.after(R90), R180);
        assert_eq!(R270.after(R90), R0);
        assert_eq!(R180.after(R180), R0);
        for r in Rotation::ALL {
            assert_eq!(r.after(r.inverse()), R0);
        }
    }

    #[test]
    fn corner_mapping_for_gumbel() {
        let expected = [Corner::UU, Corner::LU, Corner::LL, Corner::UL];
        for (r, want) in Rotation::ALL.iter().zip(expected) {
            assert_eq!(r.map_corner(Corner::UU), want);
        }
    }

    #[test]
    fn rotated_cdf_examples() {
        let ind = RotatedComponent::new(gumbel(1.0), Rotation::R180);
        assert!((ind.cdf(0.3, 0.4).unwrap() - 0.12).abs() < 1e-15);
        let r90 = RotatedComponent::new(gumbel(2.0), Rotation::R90);
        let expected = 0.5 - 2f64.powf(-std::f64::consts::SQRT_2);
        assert!((r90.cdf(0.5, 0.5).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.124786).abs() < 1e-6);
    }

    #[test]
    fn quarter_turn_matches_reflection_for_exchangeable_base() {
        let base = gumbel(2.4);
        let c = |a: f64, b: f64| base.cdf(a, b).unwrap();
        for &(u, v) in &[(0.2, 0.7), (0.9, 0.15), (0.5, 0.33)] {
            let r90 = RotatedComponent::new(base, Rotation::R90)
                .cdf(u, v)
                .unwrap();
            assert!((r90 - (v - c(1.0 - u, v))).abs() < 1e-15);
            let r270 = RotatedComponent::new(base, Rotation::R270)
                .cdf(u, v)
                .unwrap();
            assert!((r270 - (u - c(u, 1.0 - v))).abs() < 1e-15);
        }
    }

    #[test]
    fn rotated_density_reflection() {
        let comp = RotatedComponent::new(gumbel(2.0), Rotation::R180);
        let a = comp.log_density(UnitPair::new(0.3, 0.3).unwrap()).unwrap();
        let b = gumbel(2.0)
            .log_density(UnitPair::new(0.7, 0.7).unwrap())
            .unwrap();
        assert_eq!(a, b);
        let ind = RotatedComponent::new(gumbel(1.0), Rotation::R180);
        assert!(
            ind.log_density(UnitPair::new(0.2, 0.9).unwrap())
                .unwrap()
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn component_tail_matrices() {
        let lam = 2.0 - 2f64.sqrt();
        let m = RotatedComponent::new(gumbel(2.0), Rotation::R90)
            .tail_matrix()
            .unwrap();
        assert_eq!(m, TailMatrix::single(Corner::LU, lam));
        let m = RotatedComponent::new(gumbel(2.0), Rotation::R180)
            .tail_matrix()
            .unwrap();
        assert_eq!(m, TailMatrix::single(Corner::LL, lam));
        let m = RotatedComponent::new(gumbel(5.0), Rotation::R0)
            .tail_matrix()
            .unwrap();
        assert_eq!(m, gumbel(5.0).tail_matrix());
        let t = CopulaSpec::student(4.0, 0.3).unwrap();
        assert!(RotatedComponent::new(t, Rotation::R0)
            .tail_matrix()
            .is_err());
    }

    #[test]
    fn clayton_components_target_the_fixed_corners() {
        let mix = RotatedMixture::new(Family::Clayton, [0.25; 4], [2.0; 4]).unwrap();
        for (k, comp) in mix.components().iter().enumerate() {
            assert_eq!(comp.corner(), Some(CORNER_ORDER[k]));
        }
        assert!(RotatedMixture::new(Family::Clayton, [0.25; 4], [-0.5, 2.0, 2.0, 2.0]).is_err());
    }

    #[test]
    fn mixture_examples() {
        let single =
            RotatedMixture::new(Family::Gumbel, [1.0, 0.0, 0.0, 0.0], [3.0, 2.0, 2.0, 2.0])
                .unwrap();
        let comp = RotatedComponent::new(gumbel(3.0), Rotation::R0);
        assert_eq!(single.cdf(0.3, 0.8).unwrap(), comp.cdf(0.3, 0.8).unwrap());
        let tm = single.tail_matrix();
        assert!((tm.uu - (2.0 - 2f64.powf(1.0 / 3.0))).abs() < 1e-15);
        assert!((tm.uu - 0.74008).abs() < 1e-5);
        assert_eq!((tm.lu, tm.ll, tm.ul), (0.0, 0.0, 0.0));

        let ind = RotatedMixture::independence(Family::Gumbel).unwrap();
        assert!((ind.cdf(0.3, 0.4).unwrap() - 0.12).abs() < 1e-15);
        assert_eq!(ind.cdf(1.0, 1.0).unwrap(), 1.0);
        assert_eq!(ind.tail_matrix(), TailMatrix::zero());

        let eq = RotatedMixture::new(Family::Gumbel, [0.25; 4], [2.0; 4]).unwrap();
        let tm = eq.tail_matrix();
        for c in Corner::ALL {
            assert!((tm.get(c) - 0.25 * (2.0 - 2f64.sqrt())).abs() < 1e-15);
        }
    }

    #[test]
    fn weight_validation() {
        assert!(RotatedMixture::new(Family::Gumbel, [0.5, 0.5, 0.1, -0.1], [2.0; 4]).is_err());
        assert!(RotatedMixture::new(Family::Gumbel, [0.3; 4], [2.0; 4]).is_err());
        assert!(RotatedMixture::new(Family::Gaussian, [0.25; 4], [2.0; 4]).is_err());
    }

    #[test]
    fn single_component_log_density() {
        let mix =
            RotatedMixture::new(Family::Joe, [0.0, 1.0, 0.0, 0.0], [2.0, 2.5, 3.0, 1.5]).unwrap();
        let p = UnitPair::new(0.2, 0.85).unwrap();
        let direct = mix.components()[1].log_density(p).unwrap();
        assert!((mix.log_density(p).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn json_round_trip_and_reordering() {
        let mix = RotatedMixture::new(Family::Gumbel, [0.4, 0.1, 0.3, 0.2], [3.0, 1.5, 2.5, 2.0])
            .unwrap();
        let back = RotatedMixture::from_json_str(&mix.to_json_string()).unwrap();
        assert_eq!(back, mix);
        let shuffled = r#"{"family":"gumbel","weights":[0.2,0.4,0.1,0.3],
            "thetas":[2.0,3.0,1.5,2.5],"corner_order":["UL","UU","LU","LL"]}"#;
        assert_eq!(RotatedMixture::from_json_str(shuffled).unwrap(), mix);
        let err = RotatedMixture::from_json_str("{\"family\": \"gumbel\",\n \"weights\": [1,0]}")
            .unwrap_err();
        assert!(
            matches!(err, Error::Parse(ref m) if m.contains("line")),
            "{err}"
        );
    }
}
