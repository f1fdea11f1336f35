use std::collections::BTreeMap;

use chrono::{Days, NaiveDate};

use super::DataError;
use crate::market::HOURS_PER_DAY;

const HOURS_PER_WEEK: usize = 7 * HOURS_PER_DAY;

/// Seasonal persistence forecast: every target hour repeats the realized
/// price at the same hour-of-week in the last full week before `origin`.
pub fn naive_forecast(
    realized: &BTreeMap<NaiveDate, Vec<f64>>,
    origin: NaiveDate,
    horizon: usize,
) -> Result<Vec<f64>, DataError> {
    let mut week = Vec::with_capacity(HOURS_PER_WEEK);
    for back in (1..=7u64).rev() {
        let day = origin - Days::new(back);
        match realized.get(&day) {
            Some(prices) if prices.len() == HOURS_PER_DAY => week.extend_from_slice(prices),
            _ => {
                return Err(DataError::InsufficientHistory {
                    what: format!("naive day-ahead forecast (missing {day})"),
                    date: origin,
                    needed: 7,
                    available: (7 - back) as usize,
                })
            }
        }
    }
    Ok((0..horizon).map(|h| week[h % HOURS_PER_WEEK]).collect())
}
