//! Pay-as-bid settlement of one executed day.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use super::BacktestError;
use crate::calibration::activation_duration;
use crate::market::{Direction, MeritCurve, PerBlock};
use crate::model::BidPlan;

/// One amount per market.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MarketAmounts {
    pub src_pos: f64,
    pub src_neg: f64,
    pub sre_pos: f64,
    pub sre_neg: f64,
    pub da: f64,
}

impl MarketAmounts {
    pub const NAMES: [&'static str; 5] = ["src_pos", "src_neg", "sre_pos", "sre_neg", "da"];

    pub fn to_array(&self) -> [f64; 5] {
        [self.src_pos, self.src_neg, self.sre_pos, self.sre_neg, self.da]
    }

    pub fn total(&self) -> f64 {
        self.src_pos + self.src_neg + self.sre_pos + self.sre_neg + self.da
    }

    pub fn set_src(&mut self, dir: Direction, v: f64) {
        match dir {
            Direction::Pos => self.src_pos = v,
            Direction::Neg => self.src_neg = v,
        }
    }

    pub fn set_sre(&mut self, dir: Direction, v: f64) {
        match dir {
            Direction::Pos => self.sre_pos = v,
            Direction::Neg => self.sre_neg = v,
        }
    }
}

impl Add for MarketAmounts {
    type Output = MarketAmounts;
    fn add(self, o: Self) -> Self {
        MarketAmounts {
            src_pos: self.src_pos + o.src_pos,
            src_neg: self.src_neg + o.src_neg,
            sre_pos: self.sre_pos + o.sre_pos,
            sre_neg: self.sre_neg + o.sre_neg,
            da: self.da + o.da,
        }
    }
}

impl Sub for MarketAmounts {
    type Output = MarketAmounts;
    fn sub(self, o: Self) -> Self {
        MarketAmounts {
            src_pos: self.src_pos - o.src_pos,
            src_neg: self.src_neg - o.src_neg,
            sre_pos: self.sre_pos - o.sre_pos,
            sre_neg: self.sre_neg - o.sre_neg,
            da: self.da - o.da,
        }
    }
}

/// Capacity revenue per direction `[pos, neg]`: a bid is paid its own
/// price if that price does not exceed the realized marginal.
pub fn settle_src(plan: &BidPlan<f64>, marginals: &PerBlock<f64>) -> [f64; 2] {
    let mut out = [0.0; 2];
    for bid in &plan.src {
        if bid.price <= *marginals.get(bid.block, bid.direction) {
            out[bid.direction.index()] += bid.price * bid.volume_mw;
        }
    }
    out
}

/// Realized activation of the energy bids of one day.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SreOutcome {
    /// Revenue per direction `[pos, neg]`.
    pub revenue: [f64; 2],
    /// Level change in MWh.
    pub battery_delta: f64,
}

/// Energy revenue and level change. `activation[dir]` is the full-day
/// series at `step_seconds`; each bid is activated while the called volume
/// reaches the realized merit-order volume at its price.
pub fn settle_sre(
    plan: &BidPlan<f64>,
    activation: &[&[f64]; 2],
    step_seconds: u32,
    merit: &PerBlock<MeritCurve<f64>>,
) -> Result<SreOutcome, BacktestError> {
    let steps_per_block = (crate::market::HOURS_PER_BLOCK as u32 * crate::market::SECONDS_PER_HOUR / step_seconds) as usize;
    let mut out = SreOutcome::default();
    for bid in &plan.sre {
        let day = activation[bid.direction.index()];
        let start = bid.block.index() * steps_per_block;
        let series = day.get(start..start + steps_per_block).ok_or_else(|| {
            BacktestError::settlement(plan.date, format!("activation series too short for block {}", bid.block))
        })?;
        let hours = activation_duration(series, step_seconds, merit.get(bid.block, bid.direction), bid.price)
            .map_err(|e| BacktestError::settlement(plan.date, e.to_string()))?;
        let energy = bid.volume_mw * hours;
        out.revenue[bid.direction.index()] += bid.price * energy;
        out.battery_delta += bid.direction.level_sign() * energy;
    }
    Ok(out)
}

/// Day-ahead revenue and level change: `(Σ price·m, −Σ m)`.
pub fn settle_da(plan: &BidPlan<f64>, prices: &[f64]) -> Result<(f64, f64), BacktestError> {
    if prices.len() < plan.da.len() {
        return Err(BacktestError::settlement(
            plan.date,
            format!("{} realized day-ahead prices for {} planned hours", prices.len(), plan.da.len()),
        ));
    }
    let revenue = plan.da.iter().zip(prices).map(|(m, p)| m * p).sum();
    let delta = -plan.da.iter().sum::<f64>();
    Ok((revenue, delta))
}
