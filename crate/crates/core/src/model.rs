//! Daily cross-market linear program and bid extraction.
//!
//! Sign convention: a positive-direction reserve activation or a day-ahead
//! sale discharges the battery (level decreases); a negative-direction
//! activation or a day-ahead purchase charges it.
//!
//! Columns, in directory order:
//! - `m_da`, `m_afrr`: the flexibility split;
//! - `reserve[k, dir]`: MW held for balancing in block `k`, capping both the
//!   capacity bids and the energy bids of that block;
//! - `src[k, dir, i]`, `sre[k, dir, i]`: bid volumes per price level;
//! - `da_hour[t]`, `t < T*`: signed hourly day-ahead volume, sale positive;
//! - `da_block[b]`, `b < T*/4`: day-ahead volume cap per 4-hour block;
//! - `tau_plus[t]`, `tau_minus[t]`, `t ≤ T*`: split expected deviation from
//!   the start level, measured at the start of hour `t`. Expected activation
//!   energy of a block is spread evenly over its four hours.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::calibration::CalibratedDay;
use crate::data::RunConfig;
use crate::lp::{self, LinearProgram, LpError, LpSolution, LpStatus, RowSense, Tolerances, VarId};
use crate::market::{Direction, PerBlock, ProductBlock, BLOCKS_PER_DAY, HOURS_PER_BLOCK, HOURS_PER_DAY};
use crate::scalar::Scalar;
use crate::strategy::SplitPolicy;

/// Volumes below this many MW are dropped from bid plans.
pub const VOLUME_EPSILON_MW: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("infeasible configuration: {0}")]
    Config(String),
    #[error("calibration does not match the configuration: {0}")]
    Shape(String),
    #[error("solver failed: {0}")]
    Solver(#[from] LpError),
    #[error("solution status is {0:?}, expected optimal")]
    NotOptimal(LpStatus),
}

/// Scalar inputs of one daily program.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelParams<T> {
    pub total_mw: T,
    pub tau_min: T,
    pub tau_max: T,
    /// Battery level at the start of the decision day.
    pub tau_0: T,
    pub hours_first_day: usize,
    pub horizon_hours: usize,
    /// `Some((m_da, m_afrr))` pins the split.
    pub fixed_split: Option<(T, T)>,
    pub penalty: T,
}

impl<T: Scalar> ModelParams<T> {
    pub fn from_config(cfg: &RunConfig, split: SplitPolicy, penalty: f64) -> Self {
        ModelParams {
            total_mw: T::of(cfg.total_flexibility_mw),
            tau_min: T::of(cfg.tau_min_mwh),
            tau_max: T::of(cfg.tau_max_mwh),
            tau_0: T::of(cfg.tau_0_mwh),
            hours_first_day: cfg.hours_first_day,
            horizon_hours: cfg.horizon_hours,
            fixed_split: match split {
                SplitPolicy::Free => None,
                SplitPolicy::Fixed { da_mw, afrr_mw } => Some((T::of(da_mw), T::of(afrr_mw))),
            },
            penalty: T::of(penalty),
        }
    }

    pub fn with_tau_0(mut self, tau_0: T) -> Self {
        self.tau_0 = tau_0;
        self
    }

    fn validate(&self) -> Result<(), ModelError> {
        let err = |m: String| Err(ModelError::Config(m));
        let slack = T::default_feas_tol() * (T::one() + self.tau_max.abs().max(self.tau_min.abs()));
        if !(self.total_mw >= T::zero()) {
            return err(format!("total flexibility {} < 0", self.total_mw));
        }
        if !(self.tau_min <= self.tau_max) {
            return err(format!("battery bounds [{}, {}] are empty", self.tau_min, self.tau_max));
        }
        if !(self.tau_0 >= self.tau_min - slack && self.tau_0 <= self.tau_max + slack) {
            return err(format!("start level {} outside [{}, {}]", self.tau_0, self.tau_min, self.tau_max));
        }
        if self.hours_first_day != HOURS_PER_DAY {
            return err(format!("first day must span {HOURS_PER_DAY} hours, got {}", self.hours_first_day));
        }
        if self.horizon_hours < self.hours_first_day || self.horizon_hours % HOURS_PER_BLOCK != 0 {
            return err(format!("horizon {} must be ≥ {} and a multiple of {HOURS_PER_BLOCK}", self.horizon_hours, self.hours_first_day));
        }
        if !(self.penalty >= T::zero()) {
            return err(format!("penalty coefficient {} < 0", self.penalty));
        }
        if let Some((a, b)) = self.fixed_split {
            if !(a >= T::zero() && b >= T::zero()) || a + b > self.total_mw + slack {
                return err(format!("split ({a}, {b}) not within total {}", self.total_mw));
            }
        }
        Ok(())
    }
}

/// Maps LP columns back to market decisions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariableDirectory {
    pub m_da: VarId,
    pub m_afrr: VarId,
    pub reserve: PerBlock<VarId>,
    pub src: PerBlock<Vec<VarId>>,
    pub sre: PerBlock<Vec<VarId>>,
    pub da_hour: Vec<VarId>,
    pub da_block: Vec<VarId>,
    pub tau_plus: Vec<VarId>,
    pub tau_minus: Vec<VarId>,
}

impl VariableDirectory {
    /// Number of columns the directory maps.
    pub fn len(&self) -> usize {
        let per_block = |p: &PerBlock<Vec<VarId>>| p.iter().map(|(_, _, v)| v.len()).sum::<usize>();
        2 + 2 * BLOCKS_PER_DAY
            + per_block(&self.src)
            + per_block(&self.sre)
            + self.da_hour.len()
            + self.da_block.len()
            + self.tau_plus.len()
            + self.tau_minus.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A daily program together with everything needed to read its solution.
#[derive(Clone, Debug)]
pub struct CrossMarketLp<T> {
    pub lp: LinearProgram<T>,
    pub directory: VariableDirectory,
    pub params: ModelParams<T>,
    pub calibration: CalibratedDay<T>,
}

/// Hours of `[0, until)` that fall inside `block`.
fn overlap_hours(block: ProductBlock, until: usize) -> usize {
    until.min(block.end_hour()).saturating_sub(block.start_hour())
}

/// Builds the daily program.
pub fn build_lp<T: Scalar>(cal: &CalibratedDay<T>, params: &ModelParams<T>) -> Result<CrossMarketLp<T>, ModelError> {
    params.validate()?;
    let horizon = params.horizon_hours;
    let first_day = params.hours_first_day;
    if cal.da_forecast.len() < horizon {
        return Err(ModelError::Shape(format!("forecast has {} hours, horizon is {horizon}", cal.da_forecast.len())));
    }
    for (block, dir, set) in cal.src.iter() {
        if set.q.len() != set.levels.len() + 1 {
            return Err(ModelError::Shape(format!("capacity block {block} {dir}: {} levels, {} probabilities", set.levels.len(), set.q.len())));
        }
    }
    for (block, dir, set) in cal.sre.iter() {
        if set.alpha.len() != set.levels.len() {
            return Err(ModelError::Shape(format!("energy block {block} {dir}: {} levels, {} durations", set.levels.len(), set.alpha.len())));
        }
    }

    let zero = T::zero();
    let inf = T::infinity();
    let scale = T::of_usize(first_day) / T::of_usize(horizon);
    let mut lp = LinearProgram::maximize();

    let (m_da, m_afrr) = match params.fixed_split {
        None => (
            lp.add_var("m_da", zero, params.total_mw, zero),
            lp.add_var("m_afrr", zero, params.total_mw, zero),
        ),
        Some((a, b)) => (lp.add_var("m_da", a, a, zero), lp.add_var("m_afrr", b, b, zero)),
    };
    let reserve = PerBlock::from_fn(|k, d| lp.add_var(format!("reserve_{k}_{d}"), zero, inf, zero));
    let src = PerBlock::from_fn(|k, d| {
        let set = cal.src.get(k, d);
        (0..set.levels.len())
            .map(|j| lp.add_var(format!("src_{k}_{d}_{j}"), zero, inf, set.levels[j] * set.acceptance(j)))
            .collect::<Vec<_>>()
    });
    let sre = PerBlock::from_fn(|k, d| {
        let set = cal.sre.get(k, d);
        (0..set.levels.len())
            .map(|j| lp.add_var(format!("sre_{k}_{d}_{j}"), zero, inf, set.levels[j] * set.alpha[j]))
            .collect::<Vec<_>>()
    });
    let da_hour: Vec<VarId> = (0..horizon)
        .map(|t| lp.add_var(format!("da_{t}"), -inf, inf, scale * cal.da_forecast[t]))
        .collect();
    let da_block: Vec<VarId> = (0..horizon / HOURS_PER_BLOCK)
        .map(|b| lp.add_var(format!("da_cap_{b}"), zero, inf, zero))
        .collect();
    let penalty_cost = -(scale * params.penalty);
    let pinned = |t: usize| t == 0 || t == horizon;
    let tau_var = |lp: &mut LinearProgram<T>, name: &str, t: usize| {
        let hi = if pinned(t) { zero } else { inf };
        lp.add_var(format!("{name}_{t}"), zero, hi, penalty_cost)
    };
    let mut tau_plus = Vec::with_capacity(horizon + 1);
    let mut tau_minus = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        tau_plus.push(tau_var(&mut lp, "tau_plus", t));
        tau_minus.push(tau_var(&mut lp, "tau_minus", t));
    }

    lp.add_row("split", &[(m_da, T::one()), (m_afrr, T::one())], RowSense::Le, params.total_mw);

    for (k, d, &r) in reserve.iter() {
        lp.add_row(format!("reserve_cap_{k}_{d}"), &[(r, T::one()), (m_afrr, -T::one())], RowSense::Le, zero);
        for (market, vars) in [("src", src.get(k, d)), ("sre", sre.get(k, d))] {
            let mut terms: Vec<(VarId, T)> = vars.iter().map(|&v| (v, T::one())).collect();
            terms.push((r, -T::one()));
            lp.add_row(format!("{market}_total_{k}_{d}"), &terms, RowSense::Le, zero);
        }
    }

    for (t, &v) in da_hour.iter().enumerate() {
        let cap = da_block[t / HOURS_PER_BLOCK];
        lp.add_row(format!("da_sell_cap_{t}"), &[(v, T::one()), (cap, -T::one())], RowSense::Le, zero);
        lp.add_row(format!("da_buy_cap_{t}"), &[(v, -T::one()), (cap, -T::one())], RowSense::Le, zero);
    }
    for (b, &cap) in da_block.iter().enumerate() {
        lp.add_row(format!("da_block_cap_{b}"), &[(cap, T::one()), (m_da, -T::one())], RowSense::Le, zero);
    }

    // Expected level at hour t: level at t-1, minus the day-ahead sale in
    // hour t-1, plus a quarter of the block's expected activation energy.
    let quarter = T::one() / T::of_usize(HOURS_PER_BLOCK);
    for t in 1..=horizon {
        let mut terms = vec![
            (tau_plus[t], T::one()),
            (tau_minus[t], -T::one()),
            (tau_plus[t - 1], -T::one()),
            (tau_minus[t - 1], T::one()),
            (da_hour[t - 1], T::one()),
        ];
        if t - 1 < first_day {
            let block = ProductBlock::containing(t - 1).expect("hour within first day");
            for d in Direction::BOTH {
                let set = cal.sre.get(block, d);
                let sign = T::of(d.level_sign());
                for (j, &v) in sre.get(block, d).iter().enumerate() {
                    terms.push((v, -sign * set.alpha[j] * quarter));
                }
            }
        }
        lp.add_row(format!("level_{t}"), &terms, RowSense::Eq, zero);
    }

    // Worst case: every reserved MW of the first day is activated for the
    // whole block in one direction.
    let room_down = (params.tau_0 - params.tau_min).max(zero);
    let room_up = (params.tau_max - params.tau_0).max(zero);
    for t in 1..=horizon {
        let until = t.min(first_day);
        let mut down: Vec<(VarId, T)> = da_hour[..t].iter().map(|&v| (v, T::one())).collect();
        let mut up: Vec<(VarId, T)> = da_hour[..t].iter().map(|&v| (v, -T::one())).collect();
        for block in ProductBlock::all() {
            let hours = overlap_hours(block, until);
            if hours > 0 {
                down.push((*reserve.get(block, Direction::Pos), T::of_usize(hours)));
                up.push((*reserve.get(block, Direction::Neg), T::of_usize(hours)));
            }
        }
        lp.add_row(format!("worst_low_{t}"), &down, RowSense::Le, room_down);
        lp.add_row(format!("worst_high_{t}"), &up, RowSense::Le, room_up);
    }

    let directory = VariableDirectory { m_da, m_afrr, reserve, src, sre, da_hour, da_block, tau_plus, tau_minus };
    debug_assert_eq!(directory.len(), lp.num_vars());
    Ok(CrossMarketLp { lp, directory, params: params.clone(), calibration: cal.clone() })
}

/// One balancing bid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bid<T> {
    pub block: ProductBlock,
    pub direction: Direction,
    pub price: T,
    pub volume_mw: T,
}

/// Bids submitted for the decision day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidPlan<T> {
    pub date: NaiveDate,
    /// Capacity bids, price in €/MW.
    pub src: Vec<Bid<T>>,
    /// Energy bids, price in €/MWh.
    pub sre: Vec<Bid<T>>,
    /// Signed day-ahead volume for each first-day hour, sale positive.
    pub da: Vec<T>,
    pub split_da_mw: T,
    pub split_afrr_mw: T,
    pub penalty: T,
}

impl<T: Scalar> BidPlan<T> {
    /// Empty plan: no bids, no day-ahead volume.
    pub fn empty(date: NaiveDate, hours: usize) -> Self {
        BidPlan {
            date,
            src: Vec::new(),
            sre: Vec::new(),
            da: vec![T::zero(); hours],
            split_da_mw: T::zero(),
            split_afrr_mw: T::zero(),
            penalty: T::zero(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty() && self.sre.is_empty() && self.da.iter().all(|&v| v == T::zero())
    }

    /// Capacity volume bid in one block and direction.
    pub fn src_total(&self, block: ProductBlock, dir: Direction) -> T {
        self.src.iter().filter(|b| b.block == block && b.direction == dir).map(|b| b.volume_mw).sum()
    }

    pub fn sre_total(&self, block: ProductBlock, dir: Direction) -> T {
        self.sre.iter().filter(|b| b.block == block && b.direction == dir).map(|b| b.volume_mw).sum()
    }

    /// Largest absolute hourly day-ahead volume within a block.
    pub fn da_block_peak(&self, block: ProductBlock) -> T {
        self.da[block.start_hour()..block.end_hour()].iter().fold(T::zero(), |m, &v| m.max(v.abs()))
    }
}

/// Expected objective terms of the daily program.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown<T> {
    pub src: T,
    pub sre: T,
    pub da: T,
    /// Penalty cost, reported as a nonnegative amount.
    pub penalty: T,
}

impl<T: Scalar> ObjectiveBreakdown<T> {
    /// Expected gross profit, before the penalty.
    pub fn gross(&self) -> T {
        self.src + self.sre + self.da
    }

    pub fn net(&self) -> T {
        self.gross() - self.penalty
    }
}

/// Expected battery deviation over the whole horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpectedTrajectory<T> {
    /// Level at the start of each hour `0..=T*`, relative to the start level.
    pub level: Vec<T>,
    pub objective: ObjectiveBreakdown<T>,
}

impl<T: Scalar> ExpectedTrajectory<T> {
    pub fn total_abs_deviation(&self) -> T {
        self.level.iter().map(|v| v.abs()).sum()
    }
}

/// Level deviation reached if all first-day reserve is activated in one
/// direction for every block, together with the day-ahead schedule.
/// Returns `(lowest, highest)` per hour boundary `t = 1..=T*`.
pub fn worst_case_bounds<T: Scalar>(model: &CrossMarketLp<T>, x: &[T]) -> Vec<(T, T)> {
    let dir = &model.directory;
    let first_day = model.params.hours_first_day;
    let mut cumulative = T::zero();
    (1..=model.params.horizon_hours)
        .map(|t| {
            cumulative += x[dir.da_hour[t - 1].0];
            let until = t.min(first_day);
            let (mut down, mut up) = (T::zero(), T::zero());
            for block in ProductBlock::all() {
                let h = T::of_usize(overlap_hours(block, until));
                down += h * x[dir.reserve.get(block, Direction::Pos).0];
                up += h * x[dir.reserve.get(block, Direction::Neg).0];
            }
            (-cumulative - down, -cumulative + up)
        })
        .collect()
}

fn breakdown<T: Scalar>(model: &CrossMarketLp<T>, x: &[T]) -> ObjectiveBreakdown<T> {
    let cost = model.lp.cost();
    let dir = &model.directory;
    let sum = |vars: &mut dyn Iterator<Item = &VarId>| vars.map(|v| cost[v.0] * x[v.0]).sum::<T>();
    let nested = |p: &PerBlock<Vec<VarId>>| p.iter().flat_map(|(_, _, v)| v.iter()).map(|v| cost[v.0] * x[v.0]).sum::<T>();
    ObjectiveBreakdown {
        src: nested(&dir.src),
        sre: nested(&dir.sre),
        da: sum(&mut dir.da_hour.iter()),
        penalty: -sum(&mut dir.tau_plus.iter().chain(dir.tau_minus.iter())),
    }
}

fn clamp<T: Scalar>(v: T) -> T {
    if v.abs() < T::of(VOLUME_EPSILON_MW) {
        T::zero()
    } else {
        v
    }
}

/// Reads the first-day bids and the expected trajectory from an optimal
/// solution.
pub fn extract_bid_plan<T: Scalar>(
    model: &CrossMarketLp<T>,
    solution: &LpSolution<T>,
) -> Result<(BidPlan<T>, ExpectedTrajectory<T>), ModelError> {
    if solution.status != LpStatus::Optimal {
        return Err(ModelError::NotOptimal(solution.status));
    }
    let x = &solution.x;
    let dir = &model.directory;
    let cal = &model.calibration;
    let collect = |vars: &PerBlock<Vec<VarId>>, levels: &dyn Fn(ProductBlock, Direction) -> Vec<T>| {
        let mut bids = Vec::new();
        for (block, direction, cols) in vars.iter() {
            let prices = levels(block, direction);
            for (j, v) in cols.iter().enumerate() {
                let volume_mw = clamp(x[v.0]).max(T::zero());
                if volume_mw > T::zero() {
                    bids.push(Bid { block, direction, price: prices[j], volume_mw });
                }
            }
        }
        bids
    };
    let src = collect(&dir.src, &|k, d| cal.src.get(k, d).levels.clone());
    let sre = collect(&dir.sre, &|k, d| cal.sre.get(k, d).levels.clone());
    let first_day = model.params.hours_first_day;
    let plan = BidPlan {
        date: cal.date,
        src,
        sre,
        da: dir.da_hour[..first_day].iter().map(|v| clamp(x[v.0])).collect(),
        split_da_mw: clamp(x[dir.m_da.0]),
        split_afrr_mw: clamp(x[dir.m_afrr.0]),
        penalty: model.params.penalty,
    };
    let level = dir
        .tau_plus
        .iter()
        .zip(&dir.tau_minus)
        .map(|(p, m)| x[p.0] - x[m.0])
        .collect();
    Ok((plan, ExpectedTrajectory { level, objective: breakdown(model, x) }))
}

/// Result of building, solving and reading one daily program.
#[derive(Clone, Debug)]
pub struct DailyOptimum<T> {
    pub model: CrossMarketLp<T>,
    pub solution: LpSolution<T>,
    pub plan: BidPlan<T>,
    pub trajectory: ExpectedTrajectory<T>,
}

/// Builds, solves and extracts in one call.
pub fn optimize_day<T: Scalar>(
    cal: &CalibratedDay<T>,
    params: &ModelParams<T>,
    tol: &Tolerances<T>,
) -> Result<DailyOptimum<T>, ModelError> {
    let model = build_lp(cal, params)?;
    let solution = lp::solve(&model.lp, tol)?;
    let (plan, trajectory) = extract_bid_plan(&model, &solution)?;
    Ok(DailyOptimum { model, solution, plan, trajectory })
}
