//! Market vocabulary shared by every module: product blocks, reserve
//! directions and bid price grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

pub const BLOCKS_PER_DAY: usize = 6;
pub const HOURS_PER_BLOCK: usize = 4;
pub const HOURS_PER_DAY: usize = 24;
pub const SECONDS_PER_HOUR: u32 = 3600;

/// Reserve direction. `Pos` delivers energy (the virtual battery discharges),
/// `Neg` absorbs energy (the battery charges).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Pos,
    Neg,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::Pos, Direction::Neg];

    pub fn index(self) -> usize {
        match self {
            Direction::Pos => 0,
            Direction::Neg => 1,
        }
    }

    /// Change of the battery level per MWh of activated reserve.
    pub fn level_sign(self) -> f64 {
        match self {
            Direction::Pos => -1.0,
            Direction::Neg => 1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Pos => "pos",
            Direction::Neg => "neg",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "pos" => Ok(Direction::Pos),
            "neg" => Ok(Direction::Neg),
            other => Err(format!("unknown direction {other:?} (expected pos or neg)")),
        }
    }
}

/// One of the six 4-hour balancing products of a day, `k ∈ 1..=6`,
/// covering hours `[4(k−1), 4k)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ProductBlock(u8);

impl ProductBlock {
    pub fn new(k: u8) -> Option<Self> {
        (1..=BLOCKS_PER_DAY as u8).contains(&k).then_some(ProductBlock(k))
    }

    pub fn all() -> impl Iterator<Item = ProductBlock> {
        (1..=BLOCKS_PER_DAY as u8).map(ProductBlock)
    }

    /// Block containing hour-of-day `hour`.
    pub fn containing(hour: usize) -> Option<Self> {
        (hour < HOURS_PER_DAY).then(|| ProductBlock((hour / HOURS_PER_BLOCK) as u8 + 1))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Zero-based position.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn start_hour(self) -> usize {
        HOURS_PER_BLOCK * self.index()
    }

    pub fn end_hour(self) -> usize {
        self.start_hour() + HOURS_PER_BLOCK
    }

    pub fn contains_hour(self, hour: usize) -> bool {
        (self.start_hour()..self.end_hour()).contains(&hour)
    }
}

impl TryFrom<u8> for ProductBlock {
    type Error = String;
    fn try_from(k: u8) -> Result<Self, Self::Error> {
        ProductBlock::new(k).ok_or_else(|| format!("block {k} outside 1..=6"))
    }
}

impl From<ProductBlock> for u8 {
    fn from(b: ProductBlock) -> u8 {
        b.0
    }
}

impl fmt::Display for ProductBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Dense `(direction, block)` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerBlock<V> {
    pub pos: Vec<V>,
    pub neg: Vec<V>,
}

impl<V> PerBlock<V> {
    pub fn from_fn(mut f: impl FnMut(ProductBlock, Direction) -> V) -> Self {
        PerBlock {
            pos: ProductBlock::all().map(|b| f(b, Direction::Pos)).collect(),
            neg: ProductBlock::all().map(|b| f(b, Direction::Neg)).collect(),
        }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(ProductBlock, Direction) -> Result<V, E>) -> Result<Self, E> {
        Ok(PerBlock {
            pos: ProductBlock::all().map(|b| f(b, Direction::Pos)).collect::<Result<_, _>>()?,
            neg: ProductBlock::all().map(|b| f(b, Direction::Neg)).collect::<Result<_, _>>()?,
        })
    }

    pub fn get(&self, block: ProductBlock, dir: Direction) -> &V {
        match dir {
            Direction::Pos => &self.pos[block.index()],
            Direction::Neg => &self.neg[block.index()],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (ProductBlock, Direction, &V)> {
        Direction::BOTH.into_iter().flat_map(move |d| {
            ProductBlock::all().map(move |b| (b, d, self.get(b, d)))
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("price grid must be non-empty, finite and strictly increasing: {0}")]
pub struct GridError(pub String);

/// Ordered discrete bid price levels for one market and direction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PriceLevelGrid<T> {
    levels: Vec<T>,
}

impl<T: Scalar> PriceLevelGrid<T> {
    pub fn new(levels: Vec<T>) -> Result<Self, GridError> {
        if levels.is_empty() {
            return Err(GridError("empty grid".into()));
        }
        if levels.iter().any(|v| !v.is_finite()) {
            return Err(GridError(format!("{levels:?}")));
        }
        if levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GridError(format!("{levels:?}")));
        }
        Ok(PriceLevelGrid { levels })
    }

    /// `start, start + step, …` up to and including `end`.
    pub fn stepped(start: f64, end: f64, step: f64) -> Result<Self, GridError> {
        if !(step > 0.0) || end < start {
            return Err(GridError(format!("start {start}, end {end}, step {step}")));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        Self::new((0..=n).map(|i| T::of(start + step * i as f64)).collect())
    }

    pub fn levels(&self) -> &[T] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> PriceLevelGrid<U> {
        PriceLevelGrid { levels: self.levels.iter().map(|&v| f(v)).collect() }
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for PriceLevelGrid<T> {
    type Error = GridError;
    fn try_from(v: Vec<T>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl<T> From<PriceLevelGrid<T>> for Vec<T> {
    fn from(g: PriceLevelGrid<T>) -> Vec<T> {
        g.levels
    }
}

/// Cumulative offered volume `Ψ(p)` as a step function of the ask price.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeritCurve<T> {
    /// `(price, cumulative volume)` sorted by price.
    points: Vec<(T, T)>,
}

impl<T: Scalar> MeritCurve<T> {
    /// Points must be sorted by price with nondecreasing volume.
    pub fn new(mut points: Vec<(T, T)>) -> Result<Self, String> {
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()));
        if let Some(w) = points.windows(2).find(|w| w[1].1 < w[0].1) {
            return Err(format!(
                "cumulative volume decreases from {} to {} at price {}",
                w[0].1, w[1].1, w[1].0
            ));
        }
        Ok(MeritCurve { points })
    }

    pub fn points(&self) -> &[(T, T)] {
        &self.points
    }

    /// Volume offered at ask prices `≤ price`; zero below the cheapest offer.
    pub fn volume_at(&self, price: T) -> T {
        let idx = self.points.partition_point(|&(p, _)| p <= price);
        if idx == 0 {
            T::zero()
        } else {
            self.points[idx - 1].1
        }
    }

    /// Cheapest ask price whose cumulative volume reaches `volume`.
    pub fn price_for_volume(&self, volume: T) -> Option<T> {
        self.points.iter().find(|&&(_, v)| v >= volume).map(|&(p, _)| p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_partition_the_day() {
        let blocks: Vec<_> = ProductBlock::all().collect();
        assert_eq!(blocks.len(), 6);
        assert_eq!(blocks[0].start_hour(), 0);
        assert_eq!(blocks[5].end_hour(), 24);
        for w in blocks.windows(2) {
            assert_eq!(w[0].end_hour(), w[1].start_hour());
        }
        for h in 0..24 {
            assert!(ProductBlock::containing(h).unwrap().contains_hour(h));
        }
        assert!(ProductBlock::new(0).is_none());
        assert!(ProductBlock::new(7).is_none());
    }

    #[test]
    fn stepped_grid_includes_endpoint() {
        let g = PriceLevelGrid::<f64>::stepped(0.0, 250.0, 25.0).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g.levels()[10], 250.0);
        let neg = PriceLevelGrid::<f64>::stepped(-100.0, 100.0, 25.0).unwrap();
        assert_eq!(neg.len(), 9);
    }

    #[test]
    fn grid_rejects_ties() {
        assert!(PriceLevelGrid::new(vec![1.0, 1.0]).is_err());
        assert!(PriceLevelGrid::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn merit_curve_step_function() {
        let c = MeritCurve::new(vec![(50.0, 10.0), (10.0, 2.0), (30.0, 5.0)]).unwrap();
        assert_eq!(c.volume_at(5.0), 0.0);
        assert_eq!(c.volume_at(10.0), 2.0);
        assert_eq!(c.volume_at(29.9), 2.0);
        assert_eq!(c.volume_at(30.0), 5.0);
        assert_eq!(c.volume_at(1e9), 10.0);
        assert_eq!(c.price_for_volume(4.0), Some(30.0));
        assert!(MeritCurve::new(vec![(1.0, 5.0), (2.0, 4.0)]).is_err());
    }
}
