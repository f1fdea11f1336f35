mod cluster;
mod features;
mod spec;

use chrono::NaiveDate;
use thiserror::Error;

pub use cluster::{select_penalty, ClusterModel, PenaltySelector};
pub use features::{compute_features, MarketFeatures, DA_STD_INDEX, FEATURE_COUNT};
pub use spec::{PenaltyPolicy, SplitPolicy, StrategyParseError, StrategySpec};

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("{what} for {date}: need {needed} days, have {available}")]
    InsufficientHistory { date: NaiveDate, needed: usize, available: usize, what: String },
    #[error("penalty cluster model has not been fitted")]
    Unfitted,
    #[error("{0}")]
    Config(String),
}
