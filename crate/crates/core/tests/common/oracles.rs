//! Brute-force reference computations, written without the library's
//! calibration or settlement code.

use flexbid::data::{ActivationRecord, DaPriceRecord, MeritCurveRecord, PriceKind, SrcMarginalRecord, ValidatedDataset};
use flexbid::market::Direction;
use flexbid::model::BidPlan;

/// `q[i]` by direct counting: for each day find how many levels a bidder
/// at every level would have won (the count of levels `≤` the marginal),
/// then histogram those counts.
pub fn counting_q(marginals: &[f64], levels: &[f64]) -> Vec<f64> {
    let mut hist = vec![0u32; levels.len() + 1];
    for &m in marginals {
        let mut highest = 0;
        for (i, &p) in levels.iter().enumerate() {
            if p <= m {
                highest = i + 1;
            }
        }
        hist[highest] += 1;
    }
    hist.iter().map(|&c| c as f64 / marginals.len() as f64).collect()
}

/// Hours with `series ≥ threshold`, summing step lengths in whole seconds.
pub fn brute_duration(series: &[f64], step_seconds: u32, threshold: f64) -> f64 {
    let mut seconds: u64 = 0;
    for &s in series {
        if s >= threshold {
            seconds += step_seconds as u64;
        }
    }
    seconds as f64 / 3600.0
}

/// Realized market amounts of one plan: `[src_pos, src_neg, sre_pos,
/// sre_neg, da]` and the battery change, from the raw records.
pub struct HandSettlement {
    da: Vec<DaPriceRecord>,
    src: Vec<SrcMarginalRecord>,
    act: Vec<ActivationRecord>,
    merit: Vec<MeritCurveRecord>,
    step: u32,
}

impl HandSettlement {
    pub fn new(ds: &ValidatedDataset) -> Self {
        let (da, src, act, merit) = ds.to_records();
        HandSettlement { da, src, act, merit, step: ds.activation_step_seconds() }
    }

    pub fn settle(&self, plan: &BidPlan<f64>) -> ([f64; 5], f64) {
        let mut out = [0.0; 5];
        let mut delta = 0.0;
        for bid in &plan.src {
            let marginal = self
                .src
                .iter()
                .find(|r| r.date == plan.date && r.block == bid.block && r.direction == bid.direction)
                .expect("marginal")
                .marginal_price;
            if bid.price <= marginal {
                out[if bid.direction == Direction::Pos { 0 } else { 1 }] += bid.price * bid.volume_mw;
            }
        }
        for bid in &plan.sre {
            let offered = self
                .merit
                .iter()
                .filter(|r| r.date == plan.date && r.block == bid.block && r.direction == bid.direction && r.price <= bid.price)
                .map(|r| r.cumulative_volume)
                .fold(0.0, f64::max);
            let lo = bid.block.start_hour() as u32 * 3600;
            let hi = bid.block.end_hour() as u32 * 3600;
            let series: Vec<f64> = self
                .act
                .iter()
                .filter(|r| r.date == plan.date && r.direction == bid.direction && r.second_of_day >= lo && r.second_of_day < hi)
                .map(|r| r.activated_mw)
                .collect();
            let hours = brute_duration(&series, self.step, offered);
            let idx = if bid.direction == Direction::Pos { 2 } else { 3 };
            out[idx] += bid.price * bid.volume_mw * hours;
            delta += if bid.direction == Direction::Pos { -1.0 } else { 1.0 } * bid.volume_mw * hours;
        }
        for (h, &m) in plan.da.iter().enumerate() {
            let price = self
                .da
                .iter()
                .find(|r| r.kind == PriceKind::Realized && r.date == plan.date && r.hour as usize == h)
                .expect("realized price")
                .price;
            out[4] += m * price;
            delta -= m;
        }
        (out, delta)
    }
}
