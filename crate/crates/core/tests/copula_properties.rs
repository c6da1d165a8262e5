mod common;

use common::*;
use proptest::prelude::*;
use tailcop::rotation::Rotation;
use tailcop::{CopulaSpec, Corner, Family, RotatedComponent, RotatedMixture, CORNER_ORDER};

fn spec_strategy() -> impl Strategy<Value = CopulaSpec> {
    prop_oneof![
        (1.0..15.0f64).prop_map(|t| CopulaSpec::gumbel(t).unwrap()),
        (1.0..15.0f64).prop_map(|t| CopulaSpec::joe(t).unwrap()),
        (0.05..15.0f64).prop_map(|t| CopulaSpec::clayton(t).unwrap()),
        (-0.95..0.95f64).prop_map(|r| CopulaSpec::gaussian(r).unwrap()),
        (0.5..20.0f64, -0.95..0.95f64).prop_map(|(n, r)| CopulaSpec::student(n, r).unwrap()),
    ]
}

fn component_strategy() -> impl Strategy<Value = RotatedComponent> {
    (spec_strategy(), 0u8..4)
        .prop_map(|(s, k)| RotatedComponent::new(s, Rotation::from_quarter_turns(k)))
}

fn rectangle_volume<F: Fn(f64, f64) -> f64>(c: F, a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    c(b1, b2) - c(a1, b2) - c(b1, a2) + c(a1, a2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn boundary_conditions(spec in spec_strategy(), u in 0.0..=1.0f64) {
        let c = |a, b| spec.cdf(a, b).unwrap();
        prop_assert!((c(u, 1.0) - u).abs() <= 1e-12);
        prop_assert!((c(1.0, u) - u).abs() <= 1e-12);
        prop_assert!(c(u, 0.0).abs() <= 1e-12);
        prop_assert!(c(0.0, u).abs() <= 1e-12);
    }

    #[test]
    fn rectangles_have_nonnegative_mass(
        spec in spec_strategy(),
        x in prop::array::uniform4(0.0..=1.0f64),
    ) {
        let (a1, b1) = (x[0].min(x[1]), x[0].max(x[1]));
        let (a2, b2) = (x[2].min(x[3]), x[2].max(x[3]));
        let vol = rectangle_volume(|a, b| spec.cdf(a, b).unwrap(), a1, b1, a2, b2);
        prop_assert!(vol >= -1e-12, "{vol}");
    }

    #[test]
    fn rotated_components_are_copulas(
        comp in component_strategy(),
        x in prop::array::uniform4(0.0..=1.0f64),
    ) {
        let c = |a, b| comp.cdf(a, b).unwrap();
        let u = x[0];
        prop_assert!((c(u, 1.0) - u).abs() <= 1e-12);
        prop_assert!((c(1.0, u) - u).abs() <= 1e-12);
        prop_assert!(c(u, 0.0).abs() <= 1e-12);
        prop_assert!(c(0.0, u).abs() <= 1e-12);
        let (a1, b1) = (x[0].min(x[1]), x[0].max(x[1]));
        let (a2, b2) = (x[2].min(x[3]), x[2].max(x[3]));
        prop_assert!(rectangle_volume(c, a1, b1, a2, b2) >= -1e-12);
    }

    #[test]
    fn quarter_turns_compose(spec in spec_strategy(), u in 0.0..=1.0f64, v in 0.0..=1.0f64) {
        let base = |a: f64, b: f64| spec.cdf(a, b).unwrap();
        let twice = Rotation::R90.apply_cdf(|a, b| Rotation::R90.apply_cdf(base, a, b), u, v);
        prop_assert!((twice - Rotation::R180.apply_cdf(base, u, v)).abs() <= 1e-12);
        let back = Rotation::R270.apply_cdf(|a, b| Rotation::R90.apply_cdf(base, a, b), u, v);
        prop_assert!((back - base(u, v)).abs() <= 1e-12);
    }

    #[test]
    fn single_corner_components(theta in 1.01..20.0f64, k in 0usize..4) {
        let native = Family::Gumbel.native_corner().unwrap();
        let comp = RotatedComponent::new(
            CopulaSpec::gumbel(theta).unwrap(),
            Rotation::between(native, CORNER_ORDER[k]),
        );
        let m = comp.tail_matrix().unwrap();
        for corner in Corner::ALL {
            if corner == CORNER_ORDER[k] {
                prop_assert!(m.get(corner) > 0.0);
            } else {
                prop_assert_eq!(m.get(corner), 0.0);
            }
        }
    }

    #[test]
    fn tail_matrix_is_linear_in_weights(
        a in prop::array::uniform4(0.01..1.0f64),
        b in prop::array::uniform4(0.01..1.0f64),
        thetas in prop::array::uniform4(1.0..30.0f64),
    ) {
        let norm = |w: [f64; 4]| {
            let s: f64 = w.iter().sum();
            let mut w = w.map(|x| x / s);
            w[3] = 1.0 - w[0] - w[1] - w[2];
            w
        };
        let (wa, wb) = (norm(a), norm(b));
        let mid: [f64; 4] = std::array::from_fn(|i| 0.5 * (wa[i] + wb[i]));
        let t = |w| RotatedMixture::new(Family::Joe, w, thetas).unwrap().tail_matrix();
        let avg = t(wa).scaled(0.5).add(&t(wb).scaled(0.5));
        prop_assert!(avg.max_abs_diff(&t(mid)) <= 1e-12);
    }
}

#[test]
fn sampler_margins_are_uniform() {
    let mut r = rng(11);
    let n = 20_000;
    for family in FAMILIES {
        let spec = random_spec(family, &mut r);
        let sample = spec.sample(n, 17);
        let mut u1: Vec<f64> = sample.iter().map(|p| p.u1()).collect();
        let mut u2: Vec<f64> = sample.iter().map(|p| p.u2()).collect();
        let crit = ks_critical_1pct(n);
        assert!(ks_uniform(&mut u1) < crit, "{spec:?} first margin");
        assert!(ks_uniform(&mut u2) < crit, "{spec:?} second margin");
    }
}

#[test]
fn gumbel_sample_tail_frequency() {
    let theta = 2.0;
    let spec = CopulaSpec::gumbel(theta).unwrap();
    let u: f64 = 0.999;
    let sample = spec.sample(1_000_000, 5);
    let joint = sample.iter().filter(|p| p.u1() > u && p.u2() > u).count() as f64;
    let c = spec.cdf(u, u).unwrap();
    let expected = (1.0 - 2.0 * u + c) / (1.0 - u);
    let got = joint / (sample.len() as f64 * (1.0 - u));
    assert!((got - expected).abs() < 0.05, "{got} vs {expected}");
}

#[test]
fn mixture_cdf_is_weighted_sum() {
    let mix =
        RotatedMixture::new(Family::Clayton, [0.1, 0.2, 0.3, 0.4], [0.5, 1.0, 2.0, 4.0]).unwrap();
    for &(u, v) in &[(0.2, 0.7), (0.5, 0.5), (0.9, 0.05)] {
        let parts: f64 = mix
            .components()
            .iter()
            .zip(mix.weights())
            .map(|(c, w)| w * c.cdf(u, v).unwrap())
            .sum();
        assert!((mix.cdf(u, v).unwrap() - parts).abs() < 1e-15);
    }
}
