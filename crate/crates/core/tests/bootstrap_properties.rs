mod common;

use common::synthetic;
use proptest::prelude::*;
use tailcop::bootstrap::{bootstrap_tail_ci, lower_bound_map, percentile_type7, resample_years};
use tailcop::spatial::{build_gridboxes, AggregationOptions};
use tailcop::{
    BootstrapSpec, CopulaSpec, Corner, DailySeries, Family, FitConfig, RotatedMixture, TimeLabel,
};

fn labelled(values: Vec<f64>, years: std::ops::Range<i32>, days: u32) -> DailySeries {
    let times = years
        .flat_map(|y| (0..days).map(move |d| TimeLabel::new(y, d)))
        .collect();
    DailySeries::new(values, times).unwrap()
}

proptest! {
    #[test]
    fn resampling_keeps_stratum_sizes(
        seed in any::<u64>(),
        replicate in 0usize..10_000,
        first in 1979i32..1990,
        last in 2000i32..=2022,
    ) {
        let spec = BootstrapSpec { seed, ..Default::default() };
        let years: Vec<i32> = (first..=last).collect();
        let drawn = resample_years(&years, &spec, replicate).unwrap();
        for &(a, b) in &spec.strata {
            let inside = |y: &&i32| (a..=b).contains(*y);
            prop_assert_eq!(years.iter().filter(inside).count(), drawn.iter().filter(inside).count());
            prop_assert!(drawn.iter().filter(inside).all(|y| years.contains(y)));
        }
    }

    #[test]
    fn type7_stays_within_the_data(
        mut v in prop::collection::vec(0.0..1.0f64, 1..100),
        p in 0.0..=1.0f64,
    ) {
        v.sort_by(f64::total_cmp);
        let q = percentile_type7(&v, p);
        prop_assert!(q >= v[0] && q <= v[v.len() - 1]);
    }
}

#[test]
fn strongly_dependent_pair_has_positive_lower_bound() {
    let points = CopulaSpec::gaussian(0.99).unwrap().sample(20 * 40, 1);
    let x = labelled(points.iter().map(|p| p.u1()).collect(), 1990..2010, 40);
    let y = labelled(points.iter().map(|p| p.u2()).collect(), 1990..2010, 40);
    let spec = BootstrapSpec {
        n_replicates: 40,
        seed: 2,
        ..Default::default()
    };
    let iv = bootstrap_tail_ci(&x, &y, &spec, &FitConfig::default()).unwrap();
    assert!(iv.lower.uu + iv.lower.ll > 0.5, "{iv:?}");
    for c in Corner::ALL {
        let lo = iv
            .estimates
            .iter()
            .map(|m| m.get(c))
            .fold(f64::INFINITY, f64::min);
        let hi = iv
            .estimates
            .iter()
            .map(|m| m.get(c))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(lo <= iv.lower.get(c) && iv.upper.get(c) <= hi);
    }
}

#[test]
fn single_year_strata_give_zero_width_intervals() {
    let points = RotatedMixture::new(Family::Gumbel, [0.4, 0.1, 0.3, 0.2], [3.0, 1.5, 2.5, 2.0])
        .unwrap()
        .sample(4 * 100, 3);
    let x = labelled(points.iter().map(|p| p.u1()).collect(), 2000..2004, 100);
    let y = labelled(points.iter().map(|p| p.u2()).collect(), 2000..2004, 100);
    let spec = BootstrapSpec {
        n_replicates: 5,
        strata: (2000..2004).map(|y| (y, y)).collect(),
        ..Default::default()
    };
    let iv = bootstrap_tail_ci(&x, &y, &spec, &FitConfig::default()).unwrap();
    assert_eq!(iv.lower, iv.upper);
    assert_eq!(iv.n_failed, 0);
}

#[test]
fn interval_maps_are_reproducible() {
    let n_years = 12;
    let days = 60;
    let a = CopulaSpec::gumbel(2.0).unwrap().sample(n_years * days, 4);
    let series: Vec<Vec<f64>> = vec![
        a.iter().map(|p| p.u1()).collect(),
        a.iter().map(|p| p.u2()).collect(),
    ];
    let (data, mask, lattice) = synthetic::domain(2, 1, &series);
    let times = (2000..2000 + n_years as i32)
        .flat_map(|y| (0..days as u32).map(move |d| TimeLabel::new(y, d)))
        .collect();
    let data = data.with_times(times).unwrap();
    let set = build_gridboxes(&data, &mask, lattice, AggregationOptions::default()).unwrap();
    let spec = BootstrapSpec {
        n_replicates: 8,
        seed: 5,
        ..Default::default()
    };
    let cfg = FitConfig::default();
    let first = lower_bound_map(&set, 0, &spec, &cfg).unwrap();
    let second = lower_bound_map(&set, 0, &spec, &cfg).unwrap();
    assert_eq!(first, second);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    first.write_csv(&mut x).unwrap();
    second.write_csv(&mut y).unwrap();
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    assert_eq!(text.lines().count(), 1 + 2 * 4);
    assert!(text.starts_with("box,corner,lower,upper,n_failed_replicates,unreliable"));
}
