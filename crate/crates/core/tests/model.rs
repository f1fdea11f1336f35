mod common;

use common::fixtures::{check_daily_invariants, random_calibrated_day, random_params};
use flexbid::calibration::{CalibratedDay, SreActivationSet, SrcScenarioSet};
use flexbid::lp::Tolerances;
use flexbid::market::PerBlock;
use flexbid::model::{build_lp, optimize_day, ModelParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const HORIZON: usize = 48;

#[test]
fn random_days_satisfy_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..30 {
        let day = random_calibrated_day(&mut rng, HORIZON);
        let params = random_params(&mut rng, HORIZON);
        let opt = optimize_day(&day, &params, &Tolerances::default()).unwrap();
        check_daily_invariants(&opt, 1e-6).unwrap_or_else(|e| panic!("case {case}: {e}"));
        let cert = opt.solution.certificate(&opt.model.lp);
        assert!(cert.holds(&Tolerances::default()), "case {case}: {cert:?}");
    }
}

#[test]
fn split_dominance() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..5 {
        let day = random_calibrated_day(&mut rng, HORIZON);
        let params = random_params(&mut rng, HORIZON);
        let free = optimize_day(&day, &params, &Tolerances::default()).unwrap().solution.objective;
        for da in 0..=10 {
            let fixed = ModelParams { fixed_split: Some((da as f64, 10.0 - da as f64)), ..params.clone() };
            let obj = optimize_day(&day, &fixed, &Tolerances::default()).unwrap().solution.objective;
            assert!(free >= obj - 1e-6, "case {case} split {da}: free {free} < fixed {obj}");
        }
    }
}

#[test]
fn penalty_monotonicity() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for case in 0..5 {
        let day = random_calibrated_day(&mut rng, HORIZON);
        let params = random_params(&mut rng, HORIZON);
        let mut prev: Option<(f64, f64)> = None;
        for step in 0..=10 {
            let p = ModelParams { penalty: 2.5 * step as f64, ..params.clone() };
            let opt = optimize_day(&day, &p, &Tolerances::default()).unwrap();
            let dev = opt.trajectory.total_abs_deviation();
            let gross = opt.trajectory.objective.gross();
            if let Some((d0, g0)) = prev {
                assert!(dev <= d0 + 1e-6, "case {case} c={}: deviation {dev} > {d0}", p.penalty);
                assert!(gross <= g0 + 1e-6, "case {case} c={}: gross {gross} > {g0}", p.penalty);
            }
            prev = Some((dev, gross));
        }
    }
}

#[test]
fn zero_calibration_balancing_is_worthless() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..5 {
        let mut day = random_calibrated_day(&mut rng, HORIZON);
        for set in day.src.pos.iter_mut().chain(day.src.neg.iter_mut()) {
            set.q = vec![0.0; set.q.len()];
            set.q[0] = 1.0;
        }
        for set in day.sre.pos.iter_mut().chain(day.sre.neg.iter_mut()) {
            set.alpha.iter_mut().for_each(|a| *a = 0.0);
        }
        let params = random_params(&mut rng, HORIZON);
        let opt = optimize_day(&day, &params, &Tolerances::default()).unwrap();
        let o = opt.trajectory.objective;
        assert_eq!(o.src + o.sre, 0.0);
    }
}

fn uniform_grid_day(horizon: usize, levels: usize) -> CalibratedDay<f64> {
    let grid: Vec<f64> = (0..levels).map(|i| 10.0 * i as f64).collect();
    let mut q = vec![0.0; levels + 1];
    q[levels / 2] = 1.0;
    CalibratedDay {
        date: "2021-05-03".parse().unwrap(),
        src: PerBlock::from_fn(|_, _| SrcScenarioSet { levels: grid.clone(), q: q.clone() }),
        sre: PerBlock::from_fn(|_, _| SreActivationSet { levels: grid.clone(), alpha: vec![1.0; levels] }),
        da_forecast: (0..horizon).map(|t| (t % 24) as f64).collect(),
    }
}

#[test]
fn column_count_matches_hand_formula() {
    let horizon = 336;
    let n = 10;
    let params = ModelParams {
        total_mw: 10.0,
        tau_min: -500.0,
        tau_max: 500.0,
        tau_0: 0.0,
        hours_first_day: 24,
        horizon_hours: horizon,
        fixed_split: None,
        penalty: 0.0,
    };
    let model = build_lp(&uniform_grid_day(horizon, n), &params).unwrap();
    // Capacity bids, energy bids, hourly and block day-ahead volumes, the
    // split level pair, the two split scalars and twelve block reserves.
    let expected = 2 * 6 * n + 2 * 6 * n + 336 + 6 * 14 + 2 * 337 + 2 + 12;
    assert_eq!(expected, 1348);
    assert_eq!(model.directory.len(), expected);
    assert_eq!(model.lp.num_vars(), expected);
}

#[test]
fn full_horizon_solves() {
    let horizon = 336;
    let params = ModelParams {
        total_mw: 10.0,
        tau_min: -500.0,
        tau_max: 500.0,
        tau_0: 0.0,
        hours_first_day: 24,
        horizon_hours: horizon,
        fixed_split: None,
        penalty: 5.0,
    };
    let start = std::time::Instant::now();
    let opt = optimize_day(&uniform_grid_day(horizon, 10), &params, &Tolerances::default()).unwrap();
    eprintln!("full horizon: {} iterations in {:?}", opt.solution.iterations, start.elapsed());
    check_daily_invariants(&opt, 1e-6).unwrap();
}
