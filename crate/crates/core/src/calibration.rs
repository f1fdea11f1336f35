//! Historical calibration of the balancing-market model inputs.
//!
//! Capacity bids: a trailing window of daily marginal prices gives an
//! empirical CDF, and differences of the CDF across the price grid give the
//! probability that exactly the cheapest `i` levels are awarded.
//!
//! Energy bids: a bid at price `p` is activated whenever the called volume
//! reaches the merit-order volume offered at or below `p`. The expected
//! activation duration per level averages that duration over a trailing week.

use chrono::{Days, NaiveDate};
use serde::Serialize;
use thiserror::Error;

use crate::data::{DataError, RunConfig, ValidatedDataset};
use crate::market::{
    Direction, MeritCurve, PerBlock, PriceLevelGrid, ProductBlock, HOURS_PER_BLOCK, SECONDS_PER_HOUR,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("need {needed} days of history, have {available}")]
    InsufficientHistory { needed: usize, available: usize },
    #[error("price grid is not strictly increasing: {0}")]
    Grid(String),
    #[error("activation series has {got} steps, block needs {expected}")]
    ShortSeries { expected: usize, got: usize },
    #[error("forecast for {date} has {got} hours, horizon needs {expected}")]
    ShortForecast { date: NaiveDate, expected: usize, got: usize },
    #[error(transparent)]
    Data(#[from] DataError),
}

/// Acceptance probabilities for one `(block, direction)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SrcScenarioSet<T> {
    pub levels: Vec<T>,
    /// `q[i]`: probability that exactly the first `i` levels are awarded, `i = 0..=N`.
    pub q: Vec<T>,
}

impl<T: Scalar> SrcScenarioSet<T> {
    /// Probability that a bid at level `j` (zero-based) is awarded.
    pub fn acceptance(&self, j: usize) -> T {
        self.q[j + 1..].iter().copied().sum()
    }
}

/// Expected activation durations for one `(block, direction)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SreActivationSet<T> {
    pub levels: Vec<T>,
    /// Hours within the 4-hour block, one per level.
    pub alpha: Vec<T>,
}

/// Every model input for one decision day.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibratedDay<T> {
    pub date: NaiveDate,
    pub src: PerBlock<SrcScenarioSet<T>>,
    pub sre: PerBlock<SreActivationSet<T>>,
    /// Day-ahead price forecast for hours `0..T*` from midnight of `date`.
    pub da_forecast: Vec<T>,
}

fn last_window<T>(values: &[T], window: usize) -> Result<&[T], CalibrationError> {
    if window == 0 || values.len() < window {
        return Err(CalibrationError::InsufficientHistory { needed: window, available: values.len() });
    }
    Ok(&values[values.len() - window..])
}

fn count_below<T: Scalar>(marginals: &[T], p: T) -> usize {
    marginals.iter().filter(|&&m| m < p).count()
}

/// Share of the last `window` marginals strictly below `threshold`.
/// The inequality is strict: a historical marginal equal to `p` counts as
/// the bid being accepted.
pub fn empirical_cdf<T: Scalar>(marginals: &[T], threshold: T, window: usize) -> Result<T, CalibrationError> {
    let w = last_window(marginals, window)?;
    Ok(T::of_usize(count_below(w, threshold)) / T::of_usize(window))
}

/// Entry `i` is the share of marginals in `[levels[i-1], levels[i])`, with the
/// first entry below `levels[0]` and the last at or above the top level.
///
/// Computed from integer counts so that every entry is an exact ratio.
pub fn src_probabilities<T: Scalar>(marginals: &[T], levels: &[T], window: usize) -> Result<Vec<T>, CalibrationError> {
    if levels.is_empty() || levels.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CalibrationError::Grid(format!("{levels:?}")));
    }
    let w = last_window(marginals, window)?;
    let counts: Vec<usize> = levels.iter().map(|&p| count_below(w, p)).collect();
    let denom = T::of_usize(window);
    let mut q = Vec::with_capacity(levels.len() + 1);
    q.push(T::of_usize(counts[0]) / denom);
    for i in 1..levels.len() {
        q.push(T::of_usize(counts[i] - counts[i - 1]) / denom);
    }
    q.push(T::of_usize(window - counts[levels.len() - 1]) / denom);
    Ok(q)
}

/// Hours during which `series ≥ threshold`, one step = `step_seconds`.
pub fn duration_above<T: Scalar>(series: &[T], step_seconds: u32, threshold: T) -> T {
    let active = series.iter().filter(|&&s| s >= threshold).count();
    T::of_usize(active * step_seconds as usize) / T::of_usize(SECONDS_PER_HOUR as usize)
}

/// Activation duration `L(p)` of a bid at `price` over one block.
///
/// `series` must cover the full block at `step_seconds` resolution.
pub fn activation_duration<T: Scalar>(
    series: &[T],
    step_seconds: u32,
    merit: &MeritCurve<T>,
    price: T,
) -> Result<T, CalibrationError> {
    let expected = HOURS_PER_BLOCK * (SECONDS_PER_HOUR / step_seconds.max(1)) as usize;
    if series.len() < expected {
        return Err(CalibrationError::ShortSeries { expected, got: series.len() });
    }
    Ok(duration_above(&series[..expected], step_seconds, merit.volume_at(price)))
}

/// Mean of the last `window` daily durations.
pub fn expected_activation<T: Scalar>(daily: &[T], window: usize) -> Result<T, CalibrationError> {
    let w = last_window(daily, window)?;
    Ok(w.iter().copied().sum::<T>() / T::of_usize(window))
}

fn grid_for<'a>(cfg: &'a RunConfig, sre: bool, dir: Direction) -> &'a PriceLevelGrid<f64> {
    match (sre, dir) {
        (false, Direction::Pos) => &cfg.grids.src_pos,
        (false, Direction::Neg) => &cfg.grids.src_neg,
        (true, Direction::Pos) => &cfg.grids.sre_pos,
        (true, Direction::Neg) => &cfg.grids.sre_neg,
    }
}

fn history_error(err: DataError, needed: usize) -> CalibrationError {
    match err {
        DataError::InsufficientHistory { available, .. } => CalibrationError::InsufficientHistory { needed, available },
        other => CalibrationError::Data(other),
    }
}

/// Calibrates the model inputs for decision day `date` from data strictly
/// before it, plus the day-ahead forecast issued on `date`.
pub fn calibrate_day<T: Scalar>(
    ds: &ValidatedDataset,
    date: NaiveDate,
    cfg: &RunConfig,
) -> Result<CalibratedDay<T>, CalibrationError> {
    let src = PerBlock::try_from_fn(|block, dir| {
        let marginals: Vec<T> = ds
            .src_window(date, block, dir, cfg.src_window_days)
            .map_err(|e| history_error(e, cfg.src_window_days))?
            .into_iter()
            .map(T::of)
            .collect();
        let levels: Vec<T> = grid_for(cfg, false, dir).levels().iter().map(|&p| T::of(p)).collect();
        let q = src_probabilities(&marginals, &levels, cfg.src_window_days)?;
        Ok::<_, CalibrationError>(SrcScenarioSet { levels, q })
    })?;

    let step = ds.activation_step_seconds();
    let sre = PerBlock::try_from_fn(|block, dir| sre_for_block::<T>(ds, date, block, dir, cfg, step))?;

    let forecast = ds.forecast(date)?;
    if forecast.len() < cfg.horizon_hours {
        return Err(CalibrationError::ShortForecast { date, expected: cfg.horizon_hours, got: forecast.len() });
    }
    let da_forecast = forecast[..cfg.horizon_hours].iter().map(|&p| T::of(p)).collect();
    Ok(CalibratedDay { date, src, sre, da_forecast })
}

fn sre_for_block<T: Scalar>(
    ds: &ValidatedDataset,
    date: NaiveDate,
    block: ProductBlock,
    dir: Direction,
    cfg: &RunConfig,
    step: u32,
) -> Result<SreActivationSet<T>, CalibrationError> {
    let levels: Vec<T> = grid_for(cfg, true, dir).levels().iter().map(|&p| T::of(p)).collect();
    let window = cfg.sre_window_days;
    // durations[level][day]
    let mut durations: Vec<Vec<T>> = vec![Vec::with_capacity(window); levels.len()];
    for back in (1..=window as u64).rev() {
        let day = date - Days::new(back);
        let (series, curve) = match (ds.activation_block(day, block, dir), ds.merit(day, block, dir)) {
            (Ok(s), Ok(c)) => (s, c),
            _ => {
                return Err(CalibrationError::InsufficientHistory {
                    needed: window,
                    available: window - back as usize,
                })
            }
        };
        let series: Vec<T> = series.iter().map(|&v| T::of(v)).collect();
        let curve = MeritCurve::new(curve.points().iter().map(|&(p, v)| (T::of(p), T::of(v))).collect())
            .expect("validated curve stays monotone");
        for (i, &p) in levels.iter().enumerate() {
            durations[i].push(activation_duration(&series, step, &curve, p)?);
        }
    }
    let alpha = durations
        .iter()
        .map(|d| expected_activation(d, window))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SreActivationSet { levels, alpha })
}
