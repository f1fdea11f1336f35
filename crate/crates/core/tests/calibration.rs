mod common;

use chrono::{Days, NaiveDate};
use common::oracles::{brute_duration, counting_q};
use flexbid::calibration::{activation_duration, calibrate_day, expected_activation, src_probabilities};
use flexbid::data::RunConfig;
use flexbid::market::{Direction, MeritCurve};
use flexbid::synthetic::{generate, FixtureKind, SyntheticSpec};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(-20i32..60, 1..12).prop_map(|s| s.into_iter().map(|v| v as f64 * 5.0).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn probabilities_match_counting(
        marginals in prop::collection::vec((-30i32..80).prop_map(|v| v as f64 * 2.5), 30),
        levels in grid_strategy(),
    ) {
        let q = src_probabilities(&marginals, &levels, 30).unwrap();
        prop_assert_eq!(&q, &counting_q(&marginals, &levels));
        prop_assert!((q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(q.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shift_leaves_probabilities_unchanged(
        marginals in prop::collection::vec(-100i32..300, 30),
        levels in grid_strategy(),
        shift in -500i32..500,
    ) {
        let m: Vec<f64> = marginals.iter().map(|&v| v as f64).collect();
        let ms: Vec<f64> = marginals.iter().map(|&v| (v + shift) as f64).collect();
        let ls: Vec<f64> = levels.iter().map(|&p| p + shift as f64).collect();
        prop_assert_eq!(src_probabilities(&m, &levels, 30).unwrap(), src_probabilities(&ms, &ls, 30).unwrap());
    }

    #[test]
    fn duration_matches_brute_force(
        segments in prop::collection::vec((1usize..40, 0u32..60), 1..20),
        step_idx in 0usize..4,
        price in 0i32..12,
    ) {
        let step = [1u32, 4, 60, 300][step_idx];
        let n = (4 * 3600 / step) as usize;
        let mut series = Vec::with_capacity(n);
        let mut i = 0;
        while series.len() < n {
            let (len, v) = segments[i % segments.len()];
            for _ in 0..len.min(n - series.len()) {
                series.push(v as f64 * 5.0);
            }
            i += 1;
        }
        let curve = MeritCurve::new((0..10).map(|k| (k as f64 * 10.0, k as f64 * 30.0 + 15.0)).collect()).unwrap();
        let p = price as f64 * 10.0 - 5.0;
        let got = activation_duration(&series, step, &curve, p).unwrap();
        prop_assert_eq!(got, brute_duration(&series, step, curve.volume_at(p)));
    }

    #[test]
    fn expected_activation_nonincreasing_under_fixed_curve(
        days in prop::collection::vec(prop::collection::vec(0u32..400, 48), 7),
    ) {
        let curve = MeritCurve::new((1..=20).map(|k| (k as f64 * 25.0, k as f64 * 20.0)).collect()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=20 {
            let price = k as f64 * 25.0;
            let daily: Vec<f64> = days
                .iter()
                .map(|d| {
                    let s: Vec<f64> = d.iter().map(|&v| v as f64).collect();
                    activation_duration(&s, 300, &curve, price).unwrap()
                })
                .collect();
            let a = expected_activation(&daily, 7).unwrap();
            prop_assert!(a <= prev && (0.0..=4.0).contains(&a));
            prev = a;
        }
    }
}

fn start() -> NaiveDate {
    "2021-01-01".parse().unwrap()
}

fn calibrated(kind: FixtureKind) -> flexbid::calibration::CalibratedDay<f64> {
    let ds = generate(&SyntheticSpec::new(start(), 31, 48).kind(kind).step_seconds(900)).unwrap();
    let cfg = RunConfig { horizon_hours: 48, ..RunConfig::default() };
    calibrate_day(&ds, start() + Days::new(30), &cfg).unwrap()
}

#[test]
fn day_31_satisfies_invariants() {
    let cal = calibrated(FixtureKind::Market);
    for (_, _, s) in cal.src.iter() {
        assert!((s.q.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
    }
    for (_, _, s) in cal.sre.iter() {
        assert!(s.alpha.iter().all(|a| (0.0..=4.0).contains(a)));
    }
    assert_eq!(cal.da_forecast.len(), 48);
}

#[test]
fn day_30_lacks_history() {
    let ds = generate(&SyntheticSpec::new(start(), 31, 48).step_seconds(900)).unwrap();
    let cfg = RunConfig { horizon_hours: 48, ..RunConfig::default() };
    assert!(calibrate_day::<f64>(&ds, start() + Days::new(29), &cfg).is_err());
}

#[test]
fn no_activation_gives_zero_alpha() {
    let cal = calibrated(FixtureKind::NoActivation);
    // Levels below the cheapest offer face zero merit volume and stay active.
    for (_, dir, s) in cal.sre.iter() {
        for (p, a) in s.levels.iter().zip(&s.alpha) {
            let cheapest = if dir == Direction::Pos { 20.0 } else { -150.0 };
            assert_eq!(*a, if *p < cheapest { 4.0 } else { 0.0 }, "{dir} {p}");
        }
    }
}

#[test]
fn saturated_activation_gives_full_alpha() {
    let cal = calibrated(FixtureKind::SaturatedActivation);
    assert!(cal.sre.iter().all(|(_, _, s)| s.alpha.iter().all(|&a| a == 4.0)));
}

#[test]
fn fixed_merit_curve_alpha_is_monotone() {
    let cal = calibrated(FixtureKind::PerfectForesight);
    for (_, dir, s) in cal.sre.iter() {
        if dir == Direction::Pos {
            assert!(s.alpha.windows(2).all(|w| w[1] <= w[0]), "{:?}", s.alpha);
        }
    }
}
