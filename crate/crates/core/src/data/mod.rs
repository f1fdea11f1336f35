//! Market data ingest and validation.
//!
//! Four CSV files feed a run (see [`DatasetPaths`]). Loading validates every
//! record invariant up front; downstream code only ever sees a
//! [`ValidatedDataset`].

mod config;
mod csv_io;
mod forecast;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use chrono::{Days, NaiveDate};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::market::{Direction, MeritCurve, ProductBlock, HOURS_PER_DAY, SECONDS_PER_HOUR};

pub use config::{ClusterConfig, GridSet, RunConfig};
pub use csv_io::{load_dataset, write_dataset};
pub use forecast::naive_forecast;

pub const DA_PRICES_FILE: &str = "da_prices.csv";
pub const SRC_MARGINALS_FILE: &str = "src_marginals.csv";
pub const SRE_ACTIVATION_FILE: &str = "sre_activation.csv";
pub const SRE_MERIT_FILE: &str = "sre_merit.csv";

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{file}: schema error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Schema { file: String, line: Option<u64>, message: String },
    #[error("{file}: gap: {message}")]
    Gap { file: String, message: String },
    #[error("merit curve for {date} block {block} {direction} is not monotone: {message}")]
    Monotonicity { date: NaiveDate, block: ProductBlock, direction: Direction, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("insufficient history for {what} on {date}: need {needed} days, have {available}")]
    InsufficientHistory { what: String, date: NaiveDate, needed: usize, available: usize },
    #[error("missing {0}")]
    Missing(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        DataError::Io { path: path.to_path_buf(), source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceKind {
    Realized,
    Forecast,
}

/// Row of `da_prices.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaPriceRecord {
    pub date: NaiveDate,
    pub hour: u32,
    pub price: f64,
    pub kind: PriceKind,
    pub forecast_origin: Option<NaiveDate>,
}

/// Row of `src_marginals.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrcMarginalRecord {
    pub date: NaiveDate,
    pub block: ProductBlock,
    pub direction: Direction,
    pub marginal_price: f64,
}

/// Row of `sre_activation.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationRecord {
    pub date: NaiveDate,
    pub second_of_day: u32,
    pub direction: Direction,
    pub activated_mw: f64,
}

/// Row of `sre_merit.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritCurveRecord {
    pub date: NaiveDate,
    pub block: ProductBlock,
    pub direction: Direction,
    pub price: f64,
    pub cumulative_volume: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetPaths {
    pub da_prices: PathBuf,
    pub src_marginals: PathBuf,
    pub sre_activation: PathBuf,
    pub sre_merit: PathBuf,
}

impl DatasetPaths {
    /// The four canonical file names inside `dir`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        DatasetPaths {
            da_prices: dir.join(DA_PRICES_FILE),
            src_marginals: dir.join(SRC_MARGINALS_FILE),
            sre_activation: dir.join(SRE_ACTIVATION_FILE),
            sre_merit: dir.join(SRE_MERIT_FILE),
        }
    }
}

/// Days whose clock hours were normalized to 24 at ingest.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct LoadReport {
    /// Short days (one hour missing); the gap was filled from the previous hour.
    pub filled_hours: Vec<(String, NaiveDate)>,
    /// Long days (one hour repeated); the repeats were averaged.
    pub averaged_hours: Vec<(String, NaiveDate)>,
}

impl LoadReport {
    pub fn dst_days(&self) -> impl Iterator<Item = &(String, NaiveDate)> {
        self.filled_hours.iter().chain(&self.averaged_hours)
    }
}

/// Validated, indexed market history.
#[derive(Clone, Debug)]
pub struct ValidatedDataset {
    pub(crate) da_realized: BTreeMap<NaiveDate, Vec<f64>>,
    pub(crate) da_forecasts: BTreeMap<NaiveDate, Vec<f64>>,
    pub(crate) src_marginals: BTreeMap<(NaiveDate, ProductBlock, Direction), f64>,
    pub(crate) activation_step_s: u32,
    pub(crate) activation: BTreeMap<(NaiveDate, Direction), Vec<f64>>,
    pub(crate) merit: BTreeMap<(NaiveDate, ProductBlock, Direction), MeritCurve<f64>>,
    pub(crate) report: LoadReport,
}

/// Records-only equality; the load report is not part of the data.
impl PartialEq for ValidatedDataset {
    fn eq(&self, other: &Self) -> bool {
        self.da_realized == other.da_realized
            && self.da_forecasts == other.da_forecasts
            && self.src_marginals == other.src_marginals
            && self.activation_step_s == other.activation_step_s
            && self.activation == other.activation
            && self.merit == other.merit
    }
}

fn schema(file: &str, message: impl Into<String>) -> DataError {
    DataError::Schema { file: file.into(), line: None, message: message.into() }
}

fn gap(file: &str, message: impl Into<String>) -> DataError {
    DataError::Gap { file: file.into(), message: message.into() }
}

fn check_contiguous<'a>(file: &str, dates: impl Iterator<Item = &'a NaiveDate>) -> Result<(), DataError> {
    let mut prev: Option<NaiveDate> = None;
    for &d in dates {
        if let Some(p) = prev {
            if d > p && d != p + Days::new(1) {
                return Err(gap(file, format!("no data for {} (between {p} and {d})", p + Days::new(1))));
            }
        }
        prev = Some(d);
    }
    Ok(())
}

/// Collapses per-slot samples to exactly one value per slot. A single
/// missing or doubled group of `group` consecutive slots (one clock hour) is
/// treated as a DST transition: missing slots copy the previous hour,
/// doubled slots are averaged.
fn normalize_day(
    file: &str,
    date: NaiveDate,
    slots: Vec<Vec<f64>>,
    group: usize,
    report: &mut LoadReport,
) -> Result<Vec<f64>, DataError> {
    let n = slots.len();
    let missing: Vec<usize> = (0..n).filter(|&i| slots[i].is_empty()).collect();
    let doubled: Vec<usize> = (0..n).filter(|&i| slots[i].len() > 1).collect();
    let one_hour = |idx: &[usize]| {
        idx.len() == group && idx[0] % group == 0 && idx.windows(2).all(|w| w[1] == w[0] + 1)
    };
    match (missing.is_empty(), doubled.is_empty()) {
        (true, true) => Ok(slots.into_iter().map(|s| s[0]).collect()),
        (false, true) if one_hour(&missing) => {
            let start = missing[0];
            let mut out: Vec<Option<f64>> = slots.iter().map(|s| s.first().copied()).collect();
            for (k, &i) in missing.iter().enumerate() {
                let src = if start >= group { start - group + k } else { start + group + k };
                out[i] = out.get(src).copied().flatten();
            }
            report.filled_hours.push((file.to_string(), date));
            out.into_iter()
                .map(|v| v.ok_or_else(|| gap(file, format!("{date}: cannot fill missing hour"))))
                .collect()
        }
        (true, false) if one_hour(&doubled) && doubled.iter().all(|&i| slots[i].len() == 2) => {
            report.averaged_hours.push((file.to_string(), date));
            Ok(slots
                .into_iter()
                .map(|s| if s.len() == 2 { (s[0] + s[1]) / 2.0 } else { s[0] })
                .collect())
        }
        (false, _) => Err(gap(file, format!("{date}: {} slot(s) missing, first at index {}", missing.len(), missing[0]))),
        (true, false) => Err(schema(file, format!("{date}: duplicate timestamp at slot {}", doubled[0]))),
    }
}

impl ValidatedDataset {
    /// Validates raw records. `horizon_hours` is the required forecast length `T*`.
    pub fn from_records(
        da: Vec<DaPriceRecord>,
        src: Vec<SrcMarginalRecord>,
        activation_step_s: u32,
        activation: Vec<ActivationRecord>,
        merit: Vec<MeritCurveRecord>,
        horizon_hours: usize,
    ) -> Result<Self, DataError> {
        let mut report = LoadReport::default();

        // Day-ahead prices.
        let mut realized_slots: BTreeMap<NaiveDate, Vec<Vec<f64>>> = BTreeMap::new();
        let mut forecast_slots: BTreeMap<NaiveDate, Vec<Vec<f64>>> = BTreeMap::new();
        for r in &da {
            if r.hour as usize >= HOURS_PER_DAY {
                return Err(schema(DA_PRICES_FILE, format!("{}: hour {} outside 0..24", r.date, r.hour)));
            }
            if !r.price.is_finite() {
                return Err(schema(DA_PRICES_FILE, format!("{} hour {}: non-finite price", r.date, r.hour)));
            }
            match (r.kind, r.forecast_origin) {
                (PriceKind::Realized, None) => realized_slots
                    .entry(r.date)
                    .or_insert_with(|| vec![Vec::new(); HOURS_PER_DAY])[r.hour as usize]
                    .push(r.price),
                (PriceKind::Forecast, Some(origin)) => {
                    let days = (r.date - origin).num_days();
                    let offset = days * HOURS_PER_DAY as i64 + r.hour as i64;
                    if offset < 0 {
                        return Err(schema(DA_PRICES_FILE, format!("forecast from {origin} covers earlier date {}", r.date)));
                    }
                    let slots = forecast_slots.entry(origin).or_insert_with(|| vec![Vec::new(); horizon_hours]);
                    let Some(slot) = slots.get_mut(offset as usize) else {
                        return Err(schema(
                            DA_PRICES_FILE,
                            format!("forecast from {origin} extends beyond {horizon_hours} hours"),
                        ));
                    };
                    slot.push(r.price);
                }
                (PriceKind::Realized, Some(_)) => {
                    return Err(schema(DA_PRICES_FILE, format!("{}: realized row carries a forecast_origin", r.date)))
                }
                (PriceKind::Forecast, None) => {
                    return Err(schema(DA_PRICES_FILE, format!("{}: forecast row without forecast_origin", r.date)))
                }
            }
        }
        let mut da_realized = BTreeMap::new();
        for (date, slots) in realized_slots {
            da_realized.insert(date, normalize_day(DA_PRICES_FILE, date, slots, 1, &mut report)?);
        }
        check_contiguous(DA_PRICES_FILE, da_realized.keys())?;
        let mut da_forecasts = BTreeMap::new();
        for (origin, slots) in forecast_slots {
            if let Some(h) = slots.iter().position(|s| s.is_empty()) {
                let have = slots.iter().filter(|s| !s.is_empty()).count();
                return Err(gap(
                    DA_PRICES_FILE,
                    format!("forecast from {origin} covers {have} of {horizon_hours} hours (first missing hour {h})"),
                ));
            }
            if let Some(h) = slots.iter().position(|s| s.len() > 1) {
                return Err(schema(DA_PRICES_FILE, format!("forecast from {origin}: duplicate hour {h}")));
            }
            da_forecasts.insert(origin, slots.into_iter().map(|s| s[0]).collect::<Vec<_>>());
        }

        // Capacity-market marginals.
        let mut src_marginals = BTreeMap::new();
        for r in &src {
            if !r.marginal_price.is_finite() {
                return Err(schema(SRC_MARGINALS_FILE, format!("{} block {}: non-finite price", r.date, r.block)));
            }
            if src_marginals.insert((r.date, r.block, r.direction), r.marginal_price).is_some() {
                return Err(schema(
                    SRC_MARGINALS_FILE,
                    format!("duplicate record for {} block {} {}", r.date, r.block, r.direction),
                ));
            }
        }
        let src_dates: Vec<NaiveDate> = {
            let mut d: Vec<_> = src_marginals.keys().map(|k| k.0).collect();
            d.dedup();
            d
        };
        check_contiguous(SRC_MARGINALS_FILE, src_dates.iter())?;
        for &date in &src_dates {
            for b in ProductBlock::all() {
                for dir in Direction::BOTH {
                    if !src_marginals.contains_key(&(date, b, dir)) {
                        return Err(gap(SRC_MARGINALS_FILE, format!("{date}: no marginal for block {b} {dir}")));
                    }
                }
            }
        }

        // Activation series.
        if activation_step_s == 0 || SECONDS_PER_HOUR % activation_step_s != 0 {
            return Err(schema(SRE_ACTIVATION_FILE, format!("step {activation_step_s} s must divide one hour")));
        }
        let steps_per_day = (HOURS_PER_DAY as u32 * SECONDS_PER_HOUR / activation_step_s) as usize;
        let steps_per_hour = (SECONDS_PER_HOUR / activation_step_s) as usize;
        let mut act_slots: BTreeMap<(NaiveDate, Direction), Vec<Vec<f64>>> = BTreeMap::new();
        for r in &activation {
            if r.second_of_day % activation_step_s != 0 || r.second_of_day as usize / activation_step_s as usize >= steps_per_day {
                return Err(schema(
                    SRE_ACTIVATION_FILE,
                    format!("{}: second {} is not on the {activation_step_s} s grid of a day", r.date, r.second_of_day),
                ));
            }
            if !(r.activated_mw >= 0.0 && r.activated_mw.is_finite()) {
                return Err(schema(SRE_ACTIVATION_FILE, format!("{} second {}: activation must be finite and >= 0", r.date, r.second_of_day)));
            }
            act_slots
                .entry((r.date, r.direction))
                .or_insert_with(|| vec![Vec::new(); steps_per_day])[(r.second_of_day / activation_step_s) as usize]
                .push(r.activated_mw);
        }
        let mut act = BTreeMap::new();
        for ((date, dir), slots) in act_slots {
            act.insert((date, dir), normalize_day(SRE_ACTIVATION_FILE, date, slots, steps_per_hour, &mut report)?);
        }
        let act_dates: Vec<NaiveDate> = {
            let mut d: Vec<_> = act.keys().map(|k| k.0).collect();
            d.dedup();
            d
        };
        check_contiguous(SRE_ACTIVATION_FILE, act_dates.iter())?;
        for &date in &act_dates {
            for dir in Direction::BOTH {
                if !act.contains_key(&(date, dir)) {
                    return Err(gap(SRE_ACTIVATION_FILE, format!("{date}: no {dir} activation series")));
                }
            }
        }

        // Merit curves.
        let mut merit_points: BTreeMap<(NaiveDate, ProductBlock, Direction), Vec<(f64, f64)>> = BTreeMap::new();
        for r in &merit {
            if !(r.price.is_finite() && r.cumulative_volume.is_finite()) {
                return Err(schema(SRE_MERIT_FILE, format!("{} block {}: non-finite value", r.date, r.block)));
            }
            merit_points.entry((r.date, r.block, r.direction)).or_default().push((r.price, r.cumulative_volume));
        }
        let mut merit_curves = BTreeMap::new();
        for ((date, block, direction), pts) in merit_points {
            let curve = MeritCurve::new(pts)
                .map_err(|message| DataError::Monotonicity { date, block, direction, message })?;
            merit_curves.insert((date, block, direction), curve);
        }
        let merit_dates: Vec<NaiveDate> = {
            let mut d: Vec<_> = merit_curves.keys().map(|k| k.0).collect();
            d.dedup();
            d
        };
        check_contiguous(SRE_MERIT_FILE, merit_dates.iter())?;
        for &date in &merit_dates {
            for b in ProductBlock::all() {
                for dir in Direction::BOTH {
                    if !merit_curves.contains_key(&(date, b, dir)) {
                        return Err(gap(SRE_MERIT_FILE, format!("{date}: no merit curve for block {b} {dir}")));
                    }
                }
            }
        }

        Ok(ValidatedDataset {
            da_realized,
            da_forecasts,
            src_marginals,
            activation_step_s,
            activation: act,
            merit: merit_curves,
            report,
        })
    }

    pub fn report(&self) -> &LoadReport {
        &self.report
    }

    pub fn activation_step_seconds(&self) -> u32 {
        self.activation_step_s
    }

    pub fn steps_per_block(&self) -> usize {
        (crate::market::HOURS_PER_BLOCK as u32 * SECONDS_PER_HOUR / self.activation_step_s) as usize
    }

    pub fn da_realized_series(&self) -> &BTreeMap<NaiveDate, Vec<f64>> {
        &self.da_realized
    }

    pub fn forecast_origins(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.da_forecasts.keys().copied()
    }

    pub fn realized_dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.da_realized.keys().copied()
    }

    pub fn da_realized(&self, date: NaiveDate) -> Result<&[f64], DataError> {
        self.da_realized
            .get(&date)
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::Missing(format!("realized day-ahead prices for {date}")))
    }

    pub fn forecast(&self, origin: NaiveDate) -> Result<&[f64], DataError> {
        self.da_forecasts
            .get(&origin)
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::Missing(format!("day-ahead forecast with origin {origin}")))
    }

    pub fn src_marginal(&self, date: NaiveDate, block: ProductBlock, dir: Direction) -> Result<f64, DataError> {
        self.src_marginals
            .get(&(date, block, dir))
            .copied()
            .ok_or_else(|| DataError::Missing(format!("capacity marginal for {date} block {block} {dir}")))
    }

    /// Marginals of the `days` days immediately before `date`, oldest first.
    pub fn src_window(
        &self,
        date: NaiveDate,
        block: ProductBlock,
        dir: Direction,
        days: usize,
    ) -> Result<Vec<f64>, DataError> {
        let mut out = Vec::with_capacity(days);
        for back in (1..=days as u64).rev() {
            let d = date - Days::new(back);
            match self.src_marginals.get(&(d, block, dir)) {
                Some(&v) => out.push(v),
                None => {
                    return Err(DataError::InsufficientHistory {
                        what: format!("capacity marginals (block {block} {dir}, missing {d})"),
                        date,
                        needed: days,
                        available: out.len(),
                    })
                }
            }
        }
        Ok(out)
    }

    pub fn activation_day(&self, date: NaiveDate, dir: Direction) -> Result<&[f64], DataError> {
        self.activation
            .get(&(date, dir))
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::Missing(format!("{dir} activation series for {date}")))
    }

    pub fn activation_block(&self, date: NaiveDate, block: ProductBlock, dir: Direction) -> Result<&[f64], DataError> {
        let day = self.activation_day(date, dir)?;
        let n = self.steps_per_block();
        Ok(&day[block.index() * n..(block.index() + 1) * n])
    }

    pub fn merit(&self, date: NaiveDate, block: ProductBlock, dir: Direction) -> Result<&MeritCurve<f64>, DataError> {
        self.merit
            .get(&(date, block, dir))
            .ok_or_else(|| DataError::Missing(format!("merit curve for {date} block {block} {dir}")))
    }

    /// Replaces or adds day-ahead forecasts keyed by origin.
    pub fn set_forecast(&mut self, origin: NaiveDate, series: Vec<f64>) {
        self.da_forecasts.insert(origin, series);
    }

    /// Fills every missing forecast origin in `from..=to` with the seasonal
    /// naive forecast.
    pub fn fill_naive_forecasts(&mut self, from: NaiveDate, to: NaiveDate, horizon: usize) -> Result<(), DataError> {
        let mut d = from;
        while d <= to {
            if !self.da_forecasts.contains_key(&d) {
                let f = naive_forecast(&self.da_realized, d, horizon)?;
                self.da_forecasts.insert(d, f);
            }
            d = d + Days::new(1);
        }
        Ok(())
    }

    /// Copy containing only data observable by the end of `last`: realized
    /// records dated up to `last` and forecasts issued up to `last`.
    pub fn truncated_after(&self, last: NaiveDate) -> ValidatedDataset {
        ValidatedDataset {
            da_realized: self.da_realized.range(..=last).map(|(k, v)| (*k, v.clone())).collect(),
            da_forecasts: self.da_forecasts.range(..=last).map(|(k, v)| (*k, v.clone())).collect(),
            src_marginals: self.src_marginals.iter().filter(|(k, _)| k.0 <= last).map(|(k, v)| (*k, *v)).collect(),
            activation_step_s: self.activation_step_s,
            activation: self.activation.iter().filter(|(k, _)| k.0 <= last).map(|(k, v)| (*k, v.clone())).collect(),
            merit: self.merit.iter().filter(|(k, _)| k.0 <= last).map(|(k, v)| (*k, v.clone())).collect(),
            report: self.report.clone(),
        }
    }

    /// Flattens back to records, sorted.
    pub fn to_records(&self) -> (Vec<DaPriceRecord>, Vec<SrcMarginalRecord>, Vec<ActivationRecord>, Vec<MeritCurveRecord>) {
        let mut da = Vec::new();
        for (&date, prices) in &self.da_realized {
            for (h, &price) in prices.iter().enumerate() {
                da.push(DaPriceRecord { date, hour: h as u32, price, kind: PriceKind::Realized, forecast_origin: None });
            }
        }
        for (&origin, prices) in &self.da_forecasts {
            for (h, &price) in prices.iter().enumerate() {
                da.push(DaPriceRecord {
                    date: origin + Days::new((h / HOURS_PER_DAY) as u64),
                    hour: (h % HOURS_PER_DAY) as u32,
                    price,
                    kind: PriceKind::Forecast,
                    forecast_origin: Some(origin),
                });
            }
        }
        let src = self
            .src_marginals
            .iter()
            .map(|(&(date, block, direction), &marginal_price)| SrcMarginalRecord { date, block, direction, marginal_price })
            .collect();
        let mut act = Vec::new();
        for (&(date, direction), series) in &self.activation {
            for (i, &activated_mw) in series.iter().enumerate() {
                act.push(ActivationRecord { date, second_of_day: i as u32 * self.activation_step_s, direction, activated_mw });
            }
        }
        let mut merit = Vec::new();
        for (&(date, block, direction), curve) in &self.merit {
            for &(price, cumulative_volume) in curve.points() {
                merit.push(MeritCurveRecord { date, block, direction, price, cumulative_volume });
            }
        }
        (da, src, act, merit)
    }
}
