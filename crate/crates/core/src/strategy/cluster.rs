use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::features::{compute_features, MarketFeatures, DA_STD_INDEX, FEATURE_COUNT};
use super::StrategyError;
use crate::data::{ClusterConfig, ValidatedDataset};

type Point = [f64; FEATURE_COUNT];

const MAX_LLOYD_ITERATIONS: usize = 100;

fn dist2(a: &Point, b: &Point) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center, lowest index on ties.
fn nearest(p: &Point, centers: &[Point]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = dist2(p, c);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    best
}

fn kmeans_pp_init(points: &[Point], k: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    let mut centers = vec![points[rng.gen_range(0..points.len())]];
    while centers.len() < k {
        let d: Vec<f64> = points.iter().map(|p| centers.iter().map(|c| dist2(p, c)).fold(f64::INFINITY, f64::min)).collect();
        let total: f64 = d.iter().sum();
        if total <= 0.0 {
            break;
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = points.len() - 1;
        for (i, &di) in d.iter().enumerate() {
            acc += di;
            if acc >= target && di > 0.0 {
                pick = i;
                break;
            }
        }
        centers.push(points[pick]);
    }
    centers
}

fn lloyd(points: &[Point], mut centers: Vec<Point>) -> Vec<Point> {
    let mut assign: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let mut sums = vec![[0.0; FEATURE_COUNT]; centers.len()];
        let mut counts = vec![0usize; centers.len()];
        for (p, &a) in points.iter().zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for (i, c) in centers.iter_mut().enumerate() {
            if counts[i] > 0 {
                for (cv, s) in c.iter_mut().zip(&sums[i]) {
                    *cv = s / counts[i] as f64;
                }
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centers)).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    centers
}

/// k-means model over standardized features, with one penalty coefficient
/// per cluster.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterModel {
    mean: Point,
    scale: Point,
    centers: Vec<Point>,
    coefficients: Vec<f64>,
}

impl ClusterModel {
    /// Fits on `training`. Fewer distinct points than configured clusters
    /// reduce the cluster count.
    pub fn fit(training: &[MarketFeatures], cfg: &ClusterConfig) -> Result<Self, StrategyError> {
        if training.is_empty() {
            return Err(StrategyError::Config("no training days for clustering".into()));
        }
        let default_idx = cfg
            .ladder
            .iter()
            .position(|&c| c == cfg.default_coefficient)
            .ok_or_else(|| StrategyError::Config(format!("default coefficient {} not on ladder", cfg.default_coefficient)))?;
        let raw: Vec<Point> = training.iter().map(MarketFeatures::to_array).collect();
        let n = raw.len() as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        let mut scale = [1.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            mean[j] = raw.iter().map(|p| p[j]).sum::<f64>() / n;
            let sd = (raw.iter().map(|p| (p[j] - mean[j]).powi(2)).sum::<f64>() / n).sqrt();
            if sd > 0.0 {
                scale[j] = sd;
            }
        }
        let points: Vec<Point> = raw.iter().map(|p| standardize(p, &mean, &scale)).collect();
        let mut distinct = points.clone();
        distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
        distinct.dedup();
        let k = cfg.clusters.clamp(1, distinct.len());

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let centers = lloyd(&points, kmeans_pp_init(&points, k, &mut rng));

        let mut order: Vec<usize> = (0..centers.len()).collect();
        order.sort_by(|&a, &b| centers[a][DA_STD_INDEX].total_cmp(&centers[b][DA_STD_INDEX]).then(a.cmp(&b)));
        let k = centers.len();
        let mid = (k as f64 - 1.0) / 2.0;
        let mut coefficients = vec![0.0; k];
        for (rank, &c) in order.iter().enumerate() {
            let offset = ((rank as f64 - mid) * cfg.spread_steps as f64).round() as i64;
            let idx = (default_idx as i64 + offset).clamp(0, cfg.ladder.len() as i64 - 1) as usize;
            coefficients[c] = cfg.ladder[idx];
        }
        Ok(ClusterModel { mean, scale, centers, coefficients })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn cluster_of(&self, f: &MarketFeatures) -> usize {
        nearest(&standardize(&f.to_array(), &self.mean, &self.scale), &self.centers)
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// Cluster centers in original feature units.
    pub fn centers(&self) -> Vec<MarketFeatures> {
        self.centers
            .iter()
            .map(|c| {
                let v: Vec<f64> = (0..FEATURE_COUNT).map(|j| c[j] * self.scale[j] + self.mean[j]).collect();
                MarketFeatures { da_mean: v[0], da_std: v[1], sre_pos_price: v[2], src_mean: v[3] }
            })
            .collect()
    }
}

fn standardize(p: &Point, mean: &Point, scale: &Point) -> Point {
    let mut out = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        out[j] = (p[j] - mean[j]) / scale[j];
    }
    out
}

/// Penalty coefficient of the cluster nearest to `features`.
pub fn select_penalty(features: &MarketFeatures, model: Option<&ClusterModel>) -> Result<f64, StrategyError> {
    let model = model.ok_or(StrategyError::Unfitted)?;
    Ok(model.coefficients[model.cluster_of(features)])
}

/// Daily penalty choice for free-penalty strategies: refits whenever the
/// calendar month of the decision day changes.
#[derive(Clone, Debug)]
pub struct PenaltySelector {
    cfg: ClusterConfig,
    model: Option<ClusterModel>,
    fitted_month: Option<(i32, u32)>,
    cache: BTreeMap<NaiveDate, Option<MarketFeatures>>,
}

impl PenaltySelector {
    pub fn new(cfg: ClusterConfig) -> Self {
        PenaltySelector { cfg, model: None, fitted_month: None, cache: BTreeMap::new() }
    }

    pub fn model(&self) -> Option<&ClusterModel> {
        self.model.as_ref()
    }

    fn features(&mut self, ds: &ValidatedDataset, date: NaiveDate) -> Option<MarketFeatures> {
        let window = self.cfg.feature_window_days;
        *self.cache.entry(date).or_insert_with(|| compute_features(ds, date, window).ok())
    }

    /// Fits on the feature vectors of the training days before `date` that
    /// have full feature history.
    pub fn refit(&mut self, ds: &ValidatedDataset, date: NaiveDate) -> Result<(), StrategyError> {
        let training: Vec<MarketFeatures> = (1..=self.cfg.training_days as u64)
            .rev()
            .filter_map(|back| self.features(ds, date - Days::new(back)))
            .collect();
        if training.is_empty() {
            return Err(StrategyError::InsufficientHistory {
                date,
                needed: self.cfg.feature_window_days + 1,
                available: 0,
                what: "clustering training days".into(),
            });
        }
        self.model = Some(ClusterModel::fit(&training, &self.cfg)?);
        self.fitted_month = Some((date.year(), date.month()));
        Ok(())
    }

    pub fn penalty_for(&mut self, ds: &ValidatedDataset, date: NaiveDate) -> Result<f64, StrategyError> {
        if self.fitted_month != Some((date.year(), date.month())) {
            self.refit(ds, date)?;
        }
        let f = compute_features(ds, date, self.cfg.feature_window_days)?;
        select_penalty(&f, self.model.as_ref())
    }
}
