mod common;

use common::*;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use tailcop::marginal::empirical_pit;

proptest! {
    #[test]
    fn pit_is_a_permutation_of_plotting_positions(
        values in prop::collection::hash_set(-1_000_000i64..1_000_000, 1..200),
    ) {
        let v: Vec<f64> = values.into_iter().map(|x| x as f64 * 0.37).collect();
        let m = v.len();
        let mut pit = empirical_pit(&v).unwrap();
        pit.sort_by(f64::total_cmp);
        for (i, p) in pit.iter().enumerate() {
            prop_assert_eq!(*p, (i + 1) as f64 / (m + 1) as f64);
        }
    }

    #[test]
    fn pit_ignores_increasing_transforms(v in prop::collection::vec(-50.0..50.0f64, 1..200)) {
        let transformed: Vec<f64> = v.iter().map(|x| (x / 10.0).exp() + 3.0 * x).collect();
        prop_assert_eq!(empirical_pit(&v).unwrap(), empirical_pit(&transformed).unwrap());
    }
}

#[test]
fn pit_of_normal_draws_is_uniform() {
    let mut r = rng(21);
    let n = 10_000;
    let draws: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut r)).collect();
    let mut pit = empirical_pit(&draws).unwrap();
    assert!(ks_uniform(&mut pit) < ks_critical_1pct(n));
}
