//! Rolling-horizon evaluation: each day calibrate, optimize over the
//! look-ahead, execute the first day against realized data and carry the
//! realized battery level forward.

mod output;
mod settle;

use std::fmt;

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};

pub use output::{
    read_report, render_ranking, ranking, write_report_dir, RankingRow, BATTERY_FILE, CUMULATIVE_FILE, REPORT_FILE,
    SPLIT_FILE,
};
pub use settle::{settle_da, settle_src, settle_sre, MarketAmounts, SreOutcome};

use crate::calibration::calibrate_day;
use crate::data::{RunConfig, ValidatedDataset};
use crate::lp::{Tolerances, VarId};
use crate::market::{Direction, MeritCurve, PerBlock, ProductBlock, BLOCKS_PER_DAY};
use crate::model::{optimize_day, BidPlan, DailyOptimum, ModelParams, ObjectiveBreakdown, VOLUME_EPSILON_MW};
use crate::strategy::{PenaltyPolicy, PenaltySelector, StrategySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Strategy,
    Calibration,
    Optimization,
    Settlement,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Strategy => "strategy",
            Stage::Calibration => "calibration",
            Stage::Optimization => "optimization",
            Stage::Settlement => "settlement",
        })
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{date}: {stage} failed: {message}")]
pub struct BacktestError {
    pub date: NaiveDate,
    pub stage: Stage,
    pub message: String,
}

impl BacktestError {
    pub fn new(date: NaiveDate, stage: Stage, message: impl fmt::Display) -> Self {
        BacktestError { date, stage, message: message.to_string() }
    }

    pub(crate) fn settlement(date: NaiveDate, message: impl fmt::Display) -> Self {
        Self::new(date, Stage::Settlement, message)
    }
}

/// Level of the battery at the start of `date`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub date: NaiveDate,
    pub level_mwh: f64,
}

/// Realized outcome of one executed day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SettlementResult {
    pub profit: MarketAmounts,
    /// First-day expectation of each market, from the bids actually placed.
    pub expected: MarketAmounts,
    /// `expected − profit` per market.
    pub error: MarketAmounts,
    pub battery_delta: f64,
}

impl SettlementResult {
    pub fn total(&self) -> f64 {
        self.profit.total()
    }
}

/// Everything recorded for one day of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: NaiveDate,
    pub penalty: f64,
    pub battery_start: f64,
    pub battery_end: f64,
    pub settlement: SettlementResult,
    /// Objective terms of the daily program over the whole look-ahead.
    pub lp_objective: ObjectiveBreakdown<f64>,
    pub lp_iterations: usize,
    pub plan: BidPlan<f64>,
}

/// Mean MW allotted per block: day-ahead peak and balancing reserve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSplit {
    pub block: ProductBlock,
    pub da_mw: f64,
    pub afrr_mw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BacktestReport {
    pub strategy: String,
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub days: Vec<DailyRecord>,
    pub totals: MarketAmounts,
    pub total_profit: f64,
    pub split_by_block: Vec<BlockSplit>,
}

impl BacktestReport {
    /// `(date, daily total, cumulative total)`.
    pub fn cumulative_profit(&self) -> Vec<(NaiveDate, f64, f64)> {
        let mut acc = 0.0;
        self.days
            .iter()
            .map(|d| {
                let t = d.settlement.total();
                acc += t;
                (d.date, t, acc)
            })
            .collect()
    }

    /// Level at the end of each day.
    pub fn battery_levels(&self) -> Vec<(NaiveDate, f64)> {
        self.days.iter().map(|d| (d.date, d.battery_end)).collect()
    }
}

fn expected_first_day(opt: &DailyOptimum<f64>) -> MarketAmounts {
    let cost = opt.model.lp.cost();
    let x = &opt.solution.x;
    let dir = &opt.model.directory;
    let value = |v: &VarId| {
        let xv = x[v.0];
        if xv.abs() < VOLUME_EPSILON_MW {
            0.0
        } else {
            cost[v.0] * xv
        }
    };
    let mut out = MarketAmounts::default();
    for d in Direction::BOTH {
        out.set_src(d, ProductBlock::all().flat_map(|k| dir.src.get(k, d).iter()).map(value).sum());
        out.set_sre(d, ProductBlock::all().flat_map(|k| dir.sre.get(k, d).iter()).map(value).sum());
    }
    let forecast = &opt.model.calibration.da_forecast;
    out.da = opt.plan.da.iter().zip(forecast).map(|(m, p)| m * p).sum();
    out
}

fn block_split(plan: &BidPlan<f64>) -> Vec<(f64, f64)> {
    ProductBlock::all()
        .map(|k| {
            let reserve = Direction::BOTH
                .into_iter()
                .map(|d| plan.src_total(k, d).max(plan.sre_total(k, d)))
                .fold(0.0, f64::max);
            (plan.da_block_peak(k), reserve)
        })
        .collect()
}

/// Settles a plan against the realized data of its date.
pub fn settle_day(ds: &ValidatedDataset, plan: &BidPlan<f64>) -> Result<(MarketAmounts, f64), BacktestError> {
    let date = plan.date;
    let marginals = PerBlock::try_from_fn(|k, d| ds.src_marginal(date, k, d))
        .map_err(|e| BacktestError::settlement(date, e))?;
    let merit: PerBlock<MeritCurve<f64>> = PerBlock::try_from_fn(|k, d| ds.merit(date, k, d).cloned())
        .map_err(|e| BacktestError::settlement(date, e))?;
    let pos = ds.activation_day(date, Direction::Pos).map_err(|e| BacktestError::settlement(date, e))?;
    let neg = ds.activation_day(date, Direction::Neg).map_err(|e| BacktestError::settlement(date, e))?;
    let prices = ds.da_realized(date).map_err(|e| BacktestError::settlement(date, e))?;

    let src = settle_src(plan, &marginals);
    let sre = settle_sre(plan, &[pos, neg], ds.activation_step_seconds(), &merit)?;
    let (da, da_delta) = settle_da(plan, prices)?;
    let profit = MarketAmounts { src_pos: src[0], src_neg: src[1], sre_pos: sre.revenue[0], sre_neg: sre.revenue[1], da };
    Ok((profit, sre.battery_delta + da_delta))
}

/// Runs `strategy` for every day in `from..=to`.
pub fn run_backtest(
    ds: &ValidatedDataset,
    strategy: &StrategySpec,
    cfg: &RunConfig,
    from: NaiveDate,
    to: NaiveDate,
) -> Result<BacktestReport, BacktestError> {
    strategy
        .validate(cfg.total_flexibility_mw)
        .map_err(|m| BacktestError::new(from, Stage::Strategy, m))?;
    let tol = Tolerances::<f64>::default();
    let mut selector = PenaltySelector::new(cfg.clustering.clone());
    let mut battery = BatteryState { date: from, level_mwh: cfg.tau_0_mwh };
    let mut days = Vec::new();
    let mut date = from;
    while date <= to {
        let penalty = match strategy.penalty {
            PenaltyPolicy::Fixed(c) => c,
            PenaltyPolicy::Free => selector
                .penalty_for(ds, date)
                .map_err(|e| BacktestError::new(date, Stage::Strategy, e))?,
        };
        let cal = calibrate_day::<f64>(ds, date, cfg).map_err(|e| BacktestError::new(date, Stage::Calibration, e))?;
        let params = ModelParams::from_config(cfg, strategy.split, penalty).with_tau_0(battery.level_mwh);
        let opt = optimize_day(&cal, &params, &tol).map_err(|e| BacktestError::new(date, Stage::Optimization, e))?;
        let (profit, delta) = settle_day(ds, &opt.plan)?;
        let expected = expected_first_day(&opt);
        let start = battery.level_mwh;
        battery = BatteryState { date: date + Days::new(1), level_mwh: start + delta };
        days.push(DailyRecord {
            date,
            penalty,
            battery_start: start,
            battery_end: battery.level_mwh,
            settlement: SettlementResult { profit, expected, error: expected - profit, battery_delta: delta },
            lp_objective: opt.trajectory.objective,
            lp_iterations: opt.solution.iterations,
            plan: opt.plan,
        });
        date = date + Days::new(1);
    }

    let totals = days.iter().fold(MarketAmounts::default(), |acc, d| acc + d.settlement.profit);
    let mut sums = vec![(0.0, 0.0); BLOCKS_PER_DAY];
    for d in &days {
        for (s, v) in sums.iter_mut().zip(block_split(&d.plan)) {
            s.0 += v.0;
            s.1 += v.1;
        }
    }
    let n = days.len().max(1) as f64;
    let split_by_block = ProductBlock::all()
        .zip(sums)
        .map(|(block, (da, afrr))| BlockSplit { block, da_mw: da / n, afrr_mw: afrr / n })
        .collect();
    Ok(BacktestReport {
        strategy: strategy.name(),
        from,
        to,
        total_profit: days.iter().map(|d| d.settlement.total()).sum(),
        totals,
        days,
        split_by_block,
    })
}
