pub mod backtest;
pub mod calibration;
pub mod data;
pub mod lp;
pub mod market;
pub mod model;
pub mod scalar;
pub mod strategy;
pub mod synthetic;

pub use scalar::Scalar;

pub type LinearProgram64 = lp::LinearProgram<f64>;
pub type LinearProgram32 = lp::LinearProgram<f32>;
pub type LpSolution64 = lp::LpSolution<f64>;
pub type LpSolution32 = lp::LpSolution<f32>;
pub type Tolerances64 = lp::Tolerances<f64>;
pub type CalibratedDay64 = calibration::CalibratedDay<f64>;
pub type CalibratedDay32 = calibration::CalibratedDay<f32>;
pub type ModelParams64 = model::ModelParams<f64>;
pub type CrossMarketLp64 = model::CrossMarketLp<f64>;
pub type BidPlan64 = model::BidPlan<f64>;
pub type DailyOptimum64 = model::DailyOptimum<f64>;
