//! Run configuration, stored as TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::market::{PriceLevelGrid, HOURS_PER_BLOCK, HOURS_PER_DAY};
use crate::strategy::{PenaltyPolicy, SplitPolicy, StrategySpec};

/// Bid price levels per market and direction.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    pub src_pos: PriceLevelGrid<f64>,
    pub src_neg: PriceLevelGrid<f64>,
    pub sre_pos: PriceLevelGrid<f64>,
    pub sre_neg: PriceLevelGrid<f64>,
}

impl Default for GridSet {
    fn default() -> Self {
        let src = PriceLevelGrid::stepped(0.0, 250.0, 25.0).expect("static grid");
        GridSet {
            src_pos: src.clone(),
            src_neg: src,
            sre_pos: PriceLevelGrid::stepped(25.0, 500.0, 25.0).expect("static grid"),
            sre_neg: PriceLevelGrid::stepped(-100.0, 100.0, 25.0).expect("static grid"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub clusters: usize,
    /// Days of feature history each fit uses.
    pub training_days: usize,
    /// Trailing days each feature vector summarizes.
    pub feature_window_days: usize,
    pub seed: u64,
    /// Allowed penalty coefficients, ascending.
    pub ladder: Vec<f64>,
    /// Coefficient used by a single-cluster model; must be on the ladder.
    pub default_coefficient: f64,
    /// Ladder steps between coefficients of adjacent volatility ranks.
    pub spread_steps: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            clusters: 4,
            training_days: 90,
            feature_window_days: 30,
            seed: 42,
            ladder: (0..=10).map(|i| 2.5 * i as f64).collect(),
            default_coefficient: 15.0,
            spread_steps: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Total flexibility `m` in MW.
    pub total_flexibility_mw: f64,
    pub tau_min_mwh: f64,
    pub tau_max_mwh: f64,
    /// Initial level for a standalone run; the backtest overrides it daily.
    pub tau_0_mwh: f64,
    /// Hours of the executed first day (`T`).
    pub hours_first_day: usize,
    /// Look-ahead hours (`T*`).
    pub horizon_hours: usize,
    pub grids: GridSet,
    pub penalty: PenaltyPolicy,
    pub split: SplitPolicy,
    pub src_window_days: usize,
    pub sre_window_days: usize,
    pub clustering: ClusterConfig,
    pub strategies: Vec<StrategySpec>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            total_flexibility_mw: 10.0,
            tau_min_mwh: -500.0,
            tau_max_mwh: 500.0,
            tau_0_mwh: 0.0,
            hours_first_day: 24,
            horizon_hours: 336,
            grids: GridSet::default(),
            penalty: PenaltyPolicy::Free,
            split: SplitPolicy::Free,
            src_window_days: 30,
            sre_window_days: 7,
            clustering: ClusterConfig::default(),
            strategies: Vec::new(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PenaltyRepr {
    Word(String),
    Value(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SplitRepr {
    Word(String),
    Pair([f64; 2]),
}

#[derive(Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawGrids {
    src_pos: Option<Vec<f64>>,
    src_neg: Option<Vec<f64>>,
    sre_pos: Option<Vec<f64>>,
    sre_neg: Option<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    total_flexibility_mw: f64,
    tau_min_mwh: f64,
    tau_max_mwh: f64,
    tau_0_mwh: f64,
    hours_first_day: usize,
    horizon_hours: usize,
    penalty: PenaltyRepr,
    split: SplitRepr,
    #[serde(default = "thirty")]
    src_window_days: usize,
    #[serde(default = "seven")]
    sre_window_days: usize,
    #[serde(default)]
    strategies: Vec<String>,
    #[serde(default)]
    grids: RawGrids,
    #[serde(default)]
    clustering: ClusterConfig,
}

fn thirty() -> usize {
    30
}
fn seven() -> usize {
    7
}

fn config_err(msg: impl Into<String>) -> DataError {
    DataError::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, DataError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        let penalty = match raw.penalty {
            PenaltyRepr::Word(w) if w == "free" => PenaltyPolicy::Free,
            PenaltyRepr::Word(w) => return Err(config_err(format!("penalty must be \"free\" or a number, got {w:?}"))),
            PenaltyRepr::Value(v) => PenaltyPolicy::Fixed(v),
        };
        let split = match raw.split {
            SplitRepr::Word(w) if w == "free" => SplitPolicy::Free,
            SplitRepr::Word(w) => return Err(config_err(format!("split must be \"free\" or [da, afrr], got {w:?}"))),
            SplitRepr::Pair([da_mw, afrr_mw]) => SplitPolicy::Fixed { da_mw, afrr_mw },
        };
        let defaults = GridSet::default();
        let grid = |v: Option<Vec<f64>>, d: PriceLevelGrid<f64>, name: &str| match v {
            None => Ok(d),
            Some(v) => PriceLevelGrid::new(v).map_err(|e| config_err(format!("grids.{name}: {e}"))),
        };
        let grids = GridSet {
            src_pos: grid(raw.grids.src_pos, defaults.src_pos, "src_pos")?,
            src_neg: grid(raw.grids.src_neg, defaults.src_neg, "src_neg")?,
            sre_pos: grid(raw.grids.sre_pos, defaults.sre_pos, "sre_pos")?,
            sre_neg: grid(raw.grids.sre_neg, defaults.sre_neg, "sre_neg")?,
        };
        let strategies = raw
            .strategies
            .iter()
            .map(|s| s.parse::<StrategySpec>().map_err(|e| config_err(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = RunConfig {
            total_flexibility_mw: raw.total_flexibility_mw,
            tau_min_mwh: raw.tau_min_mwh,
            tau_max_mwh: raw.tau_max_mwh,
            tau_0_mwh: raw.tau_0_mwh,
            hours_first_day: raw.hours_first_day,
            horizon_hours: raw.horizon_hours,
            grids,
            penalty,
            split,
            src_window_days: raw.src_window_days,
            sre_window_days: raw.sre_window_days,
            clustering: raw.clustering,
            strategies,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let raw = RawConfig {
            total_flexibility_mw: self.total_flexibility_mw,
            tau_min_mwh: self.tau_min_mwh,
            tau_max_mwh: self.tau_max_mwh,
            tau_0_mwh: self.tau_0_mwh,
            hours_first_day: self.hours_first_day,
            horizon_hours: self.horizon_hours,
            penalty: match self.penalty {
                PenaltyPolicy::Free => PenaltyRepr::Word("free".into()),
                PenaltyPolicy::Fixed(v) => PenaltyRepr::Value(v),
            },
            split: match self.split {
                SplitPolicy::Free => SplitRepr::Word("free".into()),
                SplitPolicy::Fixed { da_mw, afrr_mw } => SplitRepr::Pair([da_mw, afrr_mw]),
            },
            src_window_days: self.src_window_days,
            sre_window_days: self.sre_window_days,
            strategies: self.strategies.iter().map(|s| s.name()).collect(),
            grids: RawGrids {
                src_pos: Some(self.grids.src_pos.levels().to_vec()),
                src_neg: Some(self.grids.src_neg.levels().to_vec()),
                sre_pos: Some(self.grids.sre_pos.levels().to_vec()),
                sre_neg: Some(self.grids.sre_neg.levels().to_vec()),
            },
            clustering: self.clustering.clone(),
        };
        toml::to_string(&raw).expect("config serializes")
    }

    /// The strategy described by the top-level `split`/`penalty` fields.
    pub fn strategy(&self) -> StrategySpec {
        StrategySpec::new(self.split, self.penalty)
    }

    pub fn validate(&self) -> Result<(), DataError> {
        let finite = [self.total_flexibility_mw, self.tau_min_mwh, self.tau_max_mwh, self.tau_0_mwh];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(config_err("flexibility and battery bounds must be finite"));
        }
        if self.total_flexibility_mw < 0.0 {
            return Err(config_err("total_flexibility_mw must be nonnegative"));
        }
        if !(self.tau_min_mwh <= self.tau_0_mwh && self.tau_0_mwh <= self.tau_max_mwh) {
            return Err(config_err(format!(
                "need tau_min <= tau_0 <= tau_max, got {} <= {} <= {}",
                self.tau_min_mwh, self.tau_0_mwh, self.tau_max_mwh
            )));
        }
        if self.hours_first_day != HOURS_PER_DAY {
            return Err(config_err("hours_first_day must be 24: the six block products cover one day"));
        }
        if self.horizon_hours < self.hours_first_day {
            return Err(config_err("horizon_hours must be at least hours_first_day"));
        }
        if self.horizon_hours % HOURS_PER_BLOCK != 0 {
            return Err(config_err("horizon_hours must be a multiple of 4"));
        }
        if self.src_window_days == 0 || self.sre_window_days == 0 {
            return Err(config_err("calibration windows must be at least one day"));
        }
        let c = &self.clustering;
        if c.clusters == 0 || c.training_days == 0 || c.feature_window_days == 0 {
            return Err(config_err("clustering sizes must be positive"));
        }
        if c.ladder.is_empty() || c.ladder.windows(2).any(|w| w[0] >= w[1]) || c.ladder[0] < 0.0 {
            return Err(config_err("clustering.ladder must be nonnegative and strictly increasing"));
        }
        if !c.ladder.contains(&c.default_coefficient) {
            return Err(config_err("clustering.default_coefficient must be on the ladder"));
        }
        self.strategy().validate(self.total_flexibility_mw).map_err(config_err)?;
        for s in &self.strategies {
            s.validate(self.total_flexibility_mw).map_err(config_err)?;
        }
        Ok(())
    }
}
