//! Strategy names of the form `((a,b)|c)`, `(free|c)`, `(free|free)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// How total flexibility is divided between day-ahead and balancing markets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPolicy {
    /// Decided by the daily LP.
    Free,
    /// `(m^DA, m^aFRR)` pinned in MW.
    Fixed { da_mw: f64, afrr_mw: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyPolicy {
    /// Chosen per day from the volatility clusters.
    Free,
    Fixed(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub split: SplitPolicy,
    pub penalty: PenaltyPolicy,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid strategy name {name:?}: {reason}")]
pub struct StrategyParseError {
    pub name: String,
    pub reason: String,
}

impl StrategySpec {
    pub fn new(split: SplitPolicy, penalty: PenaltyPolicy) -> Self {
        StrategySpec { split, penalty }
    }

    /// Canonical name, e.g. `((4,6)|0)`.
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Checks the spec against a total flexibility of `total_mw`.
    pub fn validate(&self, total_mw: f64) -> Result<(), String> {
        if let SplitPolicy::Fixed { da_mw, afrr_mw } = self.split {
            if !(da_mw >= 0.0 && afrr_mw >= 0.0) {
                return Err(format!("{self}: fixed split must be nonnegative"));
            }
            if da_mw + afrr_mw > total_mw + 1e-9 {
                return Err(format!("{self}: split {da_mw} + {afrr_mw} exceeds total flexibility {total_mw}"));
            }
        }
        if let PenaltyPolicy::Fixed(c) = self.penalty {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(format!("{self}: penalty coefficient must be finite and nonnegative"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        match self.split {
            SplitPolicy::Free => f.write_str("free")?,
            SplitPolicy::Fixed { da_mw, afrr_mw } => write!(f, "({da_mw},{afrr_mw})")?,
        }
        f.write_str("|")?;
        match self.penalty {
            PenaltyPolicy::Free => f.write_str("free")?,
            PenaltyPolicy::Fixed(c) => write!(f, "{c}")?,
        }
        f.write_str(")")
    }
}

impl FromStr for StrategySpec {
    type Err = StrategyParseError;

    fn from_str(name: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| StrategyParseError { name: name.to_string(), reason: reason.to_string() };
        let compact: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        let inner = compact
            .strip_prefix('(')
            .and_then(|s| s.strip_suffix(')'))
            .ok_or_else(|| err("expected surrounding parentheses"))?;
        let (split_s, penalty_s) = inner.rsplit_once('|').ok_or_else(|| err("expected '|'"))?;

        let number = |s: &str| -> Result<f64, StrategyParseError> {
            s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| err(&format!("{s:?} is not a number")))
        };
        let split = if split_s == "free" {
            SplitPolicy::Free
        } else {
            let pair = split_s
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| err("split must be 'free' or '(a,b)'"))?;
            let (a, b) = pair.split_once(',').ok_or_else(|| err("split pair needs a comma"))?;
            SplitPolicy::Fixed { da_mw: number(a)?, afrr_mw: number(b)? }
        };
        let penalty = match penalty_s {
            "free" => PenaltyPolicy::Free,
            // Table-style rows write "-" for penalty-free fixed splits.
            "-" => PenaltyPolicy::Fixed(0.0),
            s => PenaltyPolicy::Fixed(number(s)?),
        };
        Ok(StrategySpec { split, penalty })
    }
}
