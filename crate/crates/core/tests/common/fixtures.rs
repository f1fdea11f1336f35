//! Random model inputs and independent checks of daily optima.

use chrono::NaiveDate;
use flexbid::calibration::{CalibratedDay, SreActivationSet, SrcScenarioSet};
use flexbid::market::{Direction, PerBlock, ProductBlock};
use flexbid::model::{DailyOptimum, ModelParams};
use rand::Rng;

fn random_q<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    // Integer counts over a 30-day window, like the calibrated values.
    let mut counts = vec![0usize; n + 1];
    for _ in 0..30 {
        counts[rng.gen_range(0..=n)] += 1;
    }
    counts.into_iter().map(|c| c as f64 / 30.0).collect()
}

fn random_alpha<R: Rng>(rng: &mut R, n: usize, dir: Direction) -> Vec<f64> {
    let mut a: Vec<f64> = (0..n).map(|_| rng.gen_range(0..=16) as f64 * 0.25).collect();
    // Higher asks are activated no more often.
    match dir {
        Direction::Pos => a.sort_by(|x, y| y.partial_cmp(x).unwrap()),
        Direction::Neg => a.sort_by(|x, y| x.partial_cmp(y).unwrap()),
    }
    a
}

pub fn random_calibrated_day<R: Rng>(rng: &mut R, horizon: usize) -> CalibratedDay<f64> {
    let src_levels: Vec<f64> = (0..5).map(|i| 25.0 * i as f64).collect();
    let sre_pos: Vec<f64> = (1..=6).map(|i| 40.0 * i as f64).collect();
    let sre_neg: Vec<f64> = (-2..=3).map(|i| 30.0 * i as f64).collect();
    let base = rng.gen_range(20.0..120.0);
    let swing = rng.gen_range(0.0..80.0);
    CalibratedDay {
        date: NaiveDate::from_ymd_opt(2021, 6, 1).unwrap(),
        src: PerBlock::from_fn(|_, _| SrcScenarioSet { levels: src_levels.clone(), q: random_q(rng, src_levels.len()) }),
        sre: PerBlock::from_fn(|_, d| {
            let levels = if d == Direction::Pos { sre_pos.clone() } else { sre_neg.clone() };
            let alpha = random_alpha(rng, levels.len(), d);
            SreActivationSet { levels, alpha }
        }),
        da_forecast: (0..horizon)
            .map(|t| base + swing * ((t as f64) * 0.26).sin() + rng.gen_range(-10.0..10.0))
            .collect(),
    }
}

pub fn random_params<R: Rng>(rng: &mut R, horizon: usize) -> ModelParams<f64> {
    let span = rng.gen_range(20.0..200.0);
    let tau_min = -span;
    let tau_max = span;
    ModelParams {
        total_mw: 10.0,
        tau_min,
        tau_max,
        tau_0: rng.gen_range(tau_min..=tau_max) * 0.8,
        hours_first_day: 24,
        horizon_hours: horizon,
        fixed_split: None,
        penalty: rng.gen_range(0..=10) as f64 * 2.5,
    }
}

/// Exposure of each first-day block: the larger of the capacity and energy
/// bid totals.
fn exposure(opt: &DailyOptimum<f64>, block: ProductBlock, dir: Direction) -> f64 {
    let x = &opt.solution.x;
    let sum = |ids: &Vec<flexbid::lp::VarId>| ids.iter().map(|v| x[v.0]).sum::<f64>();
    let d = &opt.model.directory;
    sum(d.src.get(block, dir)).max(sum(d.sre.get(block, dir)))
}

/// Checks terminal balance, worst-case capacity, expected-level bounds and,
/// for a positive penalty, each level deviation split into a single signed part.
pub fn check_daily_invariants(opt: &DailyOptimum<f64>, tol: f64) -> Result<(), String> {
    let p = &opt.model.params;
    let x = &opt.solution.x;
    let d = &opt.model.directory;
    let level = &opt.trajectory.level;
    if level.len() != p.horizon_hours + 1 {
        return Err(format!("trajectory length {}", level.len()));
    }
    if level[p.horizon_hours].abs() > tol {
        return Err(format!("terminal level {}", level[p.horizon_hours]));
    }
    let mut sold = 0.0;
    for t in 1..=p.horizon_hours {
        sold += x[d.da_hour[t - 1].0];
        let (mut down, mut up) = (0.0, 0.0);
        for h in 0..t.min(p.hours_first_day) {
            let block = ProductBlock::containing(h).unwrap();
            down += exposure(opt, block, Direction::Pos);
            up += exposure(opt, block, Direction::Neg);
        }
        let low = p.tau_0 - sold - down;
        let high = p.tau_0 - sold + up;
        if low < p.tau_min - tol || high > p.tau_max + tol {
            return Err(format!("hour {t}: worst case [{low}, {high}] outside [{}, {}]", p.tau_min, p.tau_max));
        }
        let expected = p.tau_0 + level[t];
        if expected < p.tau_min - tol || expected > p.tau_max + tol {
            return Err(format!("hour {t}: expected level {expected} outside bounds"));
        }
    }
    if p.penalty > 0.0 {
        for (t, (a, b)) in d.tau_plus.iter().zip(&d.tau_minus).enumerate() {
            let m = x[a.0].min(x[b.0]);
            if m > tol {
                return Err(format!("hour {t}: both level parts positive ({m})"));
            }
        }
    }
    Ok(())
}
