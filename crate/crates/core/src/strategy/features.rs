use chrono::{Days, NaiveDate};
use serde::Serialize;

use super::StrategyError;
use crate::data::ValidatedDataset;
use crate::market::{Direction, ProductBlock};

/// Price and volatility summary of the days before a decision day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MarketFeatures {
    pub da_mean: f64,
    /// Population standard deviation of hourly realized day-ahead prices.
    pub da_std: f64,
    /// Activation-weighted price of the merit tier reached by the mean
    /// positive activation of each block; zero without activation.
    pub sre_pos_price: f64,
    /// Mean capacity marginal over all blocks and directions.
    pub src_mean: f64,
}

pub const FEATURE_COUNT: usize = 4;

/// Index of `da_std` in [`MarketFeatures::to_array`].
pub const DA_STD_INDEX: usize = 1;

impl MarketFeatures {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [self.da_mean, self.da_std, self.sre_pos_price, self.src_mean]
    }
}

fn missing(date: NaiveDate, window: usize, available: usize, what: &str) -> StrategyError {
    StrategyError::InsufficientHistory { date, needed: window, available, what: what.to_string() }
}

/// Features over the `window` days strictly before `date`.
pub fn compute_features(ds: &ValidatedDataset, date: NaiveDate, window: usize) -> Result<MarketFeatures, StrategyError> {
    if window == 0 {
        return Err(missing(date, window, 0, "feature window"));
    }
    let mut prices = Vec::with_capacity(window * 24);
    let mut src_sum = 0.0;
    let mut src_n = 0usize;
    let (mut weighted, mut weight) = (0.0, 0.0);
    for (seen, back) in (1..=window as u64).rev().enumerate() {
        let day = date - Days::new(back);
        let da = ds.da_realized(day).map_err(|_| missing(date, window, seen, "realized day-ahead prices"))?;
        prices.extend_from_slice(da);
        for block in ProductBlock::all() {
            for dir in Direction::BOTH {
                src_sum += ds.src_marginal(day, block, dir).map_err(|_| missing(date, window, seen, "capacity marginals"))?;
                src_n += 1;
            }
            let series = ds
                .activation_block(day, block, Direction::Pos)
                .map_err(|_| missing(date, window, seen, "activation series"))?;
            let curve = ds.merit(day, block, Direction::Pos).map_err(|_| missing(date, window, seen, "merit curves"))?;
            let energy = series.iter().sum::<f64>() / series.len().max(1) as f64;
            if energy > 0.0 {
                let top = curve
                    .price_for_volume(energy)
                    .or_else(|| curve.points().last().map(|p| p.0))
                    .unwrap_or(0.0);
                weighted += energy * top;
                weight += energy;
            }
        }
    }
    let n = prices.len() as f64;
    let da_mean = prices.iter().sum::<f64>() / n;
    let da_std = (prices.iter().map(|p| (p - da_mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(MarketFeatures {
        da_mean,
        da_std,
        sre_pos_price: if weight > 0.0 { weighted / weight } else { 0.0 },
        src_mean: src_sum / src_n as f64,
    })
}
