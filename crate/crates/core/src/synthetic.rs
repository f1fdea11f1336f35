//! Deterministic synthetic market data for tests, demos and golden runs.

use chrono::{Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{
    ActivationRecord, DaPriceRecord, DataError, MeritCurveRecord, PriceKind, SrcMarginalRecord, ValidatedDataset,
};
use crate::market::{Direction, ProductBlock, HOURS_PER_DAY, SECONDS_PER_HOUR};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixtureKind {
    /// Noisy prices, regime-switching volatility, random activation.
    Market,
    /// Every day identical in the balancing markets, day-ahead prices zero
    /// and forecasts exact.
    PerfectForesight,
    /// `Market` with no activation at all.
    NoActivation,
    /// `Market` with activation above the whole merit curve at every step.
    SaturatedActivation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub start: NaiveDate,
    pub days: usize,
    pub seed: u64,
    pub step_seconds: u32,
    pub horizon_hours: usize,
    pub kind: FixtureKind,
}

impl SyntheticSpec {
    pub fn new(start: NaiveDate, days: usize, horizon_hours: usize) -> Self {
        SyntheticSpec { start, days, seed: 2021, step_seconds: 300, horizon_hours, kind: FixtureKind::Market }
    }

    pub fn kind(mut self, kind: FixtureKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn step_seconds(mut self, step: u32) -> Self {
        self.step_seconds = step;
        self
    }

    pub fn end(&self) -> NaiveDate {
        self.start + Days::new(self.days as u64 - 1)
    }
}

fn cents(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// Hourly day-ahead prices for `days` days, with a volatility regime that
/// changes every ten days.
fn price_path(rng: &mut ChaCha8Rng, days: usize) -> Vec<f64> {
    let noise = Normal::new(0.0, 1.0).expect("unit normal");
    let mut out = Vec::with_capacity(days * HOURS_PER_DAY);
    let mut vol = 5.0;
    for d in 0..days {
        if d % 10 == 0 {
            vol = [3.0, 8.0, 20.0, 45.0][rng.gen_range(0..4)];
        }
        let level = 55.0 + 10.0 * ((d as f64) * 0.09).sin() + if d % 7 >= 5 { -12.0 } else { 0.0 };
        for h in 0..HOURS_PER_DAY {
            let shape = 22.0 * (std::f64::consts::TAU * (h as f64 - 8.0) / 24.0).sin();
            out.push(cents(level + shape * (0.5 + vol / 40.0) + vol * noise.sample(rng)));
        }
    }
    out
}

fn merit_curve(rng: &mut ChaCha8Rng, dir: Direction, fixed: bool) -> Vec<(f64, f64)> {
    let (start, step, tiers) = match dir {
        Direction::Pos => (20.0, 20.0, 30),
        Direction::Neg => (-150.0, 15.0, 21),
    };
    let mut volume = 0.0;
    (0..tiers)
        .map(|i| {
            volume += if fixed { 20.0 } else { rng.gen_range(5..=40) as f64 };
            (start + step * i as f64, volume)
        })
        .collect()
}

fn activation_day(rng: &mut ChaCha8Rng, steps: usize, step_s: u32, kind: FixtureKind) -> Vec<f64> {
    match kind {
        FixtureKind::NoActivation => return vec![0.0; steps],
        FixtureKind::SaturatedActivation => return vec![5000.0; steps],
        _ => {}
    }
    // Piecewise constant over quarter hours, mostly small, occasionally deep.
    let per_segment = ((900 / step_s.max(1)) as usize).max(1);
    let mut out = Vec::with_capacity(steps);
    while out.len() < steps {
        let v = match rng.gen_range(0..10) {
            0..=2 => 0.0,
            3..=7 => rng.gen_range(0.0..150.0),
            _ => rng.gen_range(150.0..700.0),
        };
        for _ in 0..per_segment.min(steps - out.len()) {
            out.push(cents(v));
        }
    }
    out
}

/// Generates a validated dataset with forecasts issued on every day.
pub fn generate(spec: &SyntheticSpec) -> Result<ValidatedDataset, DataError> {
    if spec.days == 0 || spec.step_seconds == 0 || SECONDS_PER_HOUR % spec.step_seconds != 0 {
        return Err(DataError::Config(format!("invalid synthetic spec {spec:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let perfect = spec.kind == FixtureKind::PerfectForesight;
    let extra_days = spec.horizon_hours.div_ceil(HOURS_PER_DAY);
    let truth = if perfect {
        vec![0.0; (spec.days + extra_days) * HOURS_PER_DAY]
    } else {
        price_path(&mut rng, spec.days + extra_days)
    };
    let forecast_noise = Normal::new(0.0, 6.0).expect("normal");

    let mut da = Vec::new();
    for d in 0..spec.days {
        let date = spec.start + Days::new(d as u64);
        for h in 0..HOURS_PER_DAY {
            da.push(DaPriceRecord {
                date,
                hour: h as u32,
                price: truth[d * HOURS_PER_DAY + h],
                kind: PriceKind::Realized,
                forecast_origin: None,
            });
        }
        for k in 0..spec.horizon_hours {
            let t = d * HOURS_PER_DAY + k;
            let price = if perfect { truth[t] } else { cents(truth[t] + forecast_noise.sample(&mut rng) * (1.0 + k as f64 / 96.0)) };
            da.push(DaPriceRecord {
                date: date + Days::new((k / HOURS_PER_DAY) as u64),
                hour: (k % HOURS_PER_DAY) as u32,
                price,
                kind: PriceKind::Forecast,
                forecast_origin: Some(date),
            });
        }
    }

    let mut src = Vec::new();
    let mut merit = Vec::new();
    let mut activation = Vec::new();
    let steps = HOURS_PER_DAY * (SECONDS_PER_HOUR / spec.step_seconds) as usize;
    let pf_activation: Vec<Vec<f64>> = Direction::BOTH
        .iter()
        .map(|_| activation_day(&mut rng, steps, spec.step_seconds, FixtureKind::Market))
        .collect();
    let pf_merit: Vec<Vec<(f64, f64)>> = Direction::BOTH.iter().map(|&d| merit_curve(&mut rng, d, true)).collect();
    for d in 0..spec.days {
        let date = spec.start + Days::new(d as u64);
        let vol_scale = 1.0 + (truth[d * HOURS_PER_DAY..(d + 1) * HOURS_PER_DAY].iter().map(|p| p.abs()).sum::<f64>() / 2400.0);
        for block in ProductBlock::all() {
            for dir in Direction::BOTH {
                let marginal = if perfect {
                    60.0
                } else {
                    cents(rng.gen_range(5.0..90.0) * vol_scale + if dir == Direction::Neg { -10.0 } else { 0.0 })
                };
                src.push(SrcMarginalRecord { date, block, direction: dir, marginal_price: marginal });
                let curve = if perfect { pf_merit[dir.index()].clone() } else { merit_curve(&mut rng, dir, false) };
                for (price, cumulative_volume) in curve {
                    merit.push(MeritCurveRecord { date, block, direction: dir, price, cumulative_volume });
                }
            }
        }
        for dir in Direction::BOTH {
            let series = if perfect {
                pf_activation[dir.index()].clone()
            } else {
                activation_day(&mut rng, steps, spec.step_seconds, spec.kind)
            };
            for (i, v) in series.into_iter().enumerate() {
                activation.push(ActivationRecord {
                    date,
                    second_of_day: i as u32 * spec.step_seconds,
                    direction: dir,
                    activated_mw: v,
                });
            }
        }
    }
    ValidatedDataset::from_records(da, src, spec.step_seconds, activation, merit, spec.horizon_hours)
}
