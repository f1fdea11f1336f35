use chrono::{Days, NaiveDate};
use flexbid::data::{load_dataset, write_dataset, DatasetPaths, RunConfig, ValidatedDataset};
use flexbid::synthetic::{generate, SyntheticSpec};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn start() -> NaiveDate {
    "2021-10-01".parse().unwrap()
}

fn config() -> RunConfig {
    RunConfig { horizon_hours: 48, ..RunConfig::default() }
}

#[test]
fn thirty_day_fixture_has_all_capacity_records() {
    let ds = generate(&SyntheticSpec::new(start(), 30, 48).step_seconds(900)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_dataset(dir.path(), &ds).unwrap();
    let loaded = load_dataset(&DatasetPaths::in_dir(dir.path()), &config()).unwrap();
    assert_eq!(loaded.to_records().1.len(), 30 * 6 * 2);
}

#[test]
fn missing_file_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(load_dataset(&DatasetPaths::in_dir(dir.path()), &config()).is_err());
}

fn shuffled(ds: &ValidatedDataset, seed: u64) -> ValidatedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut da, mut src, mut act, mut merit) = ds.to_records();
    da.shuffle(&mut rng);
    src.shuffle(&mut rng);
    act.shuffle(&mut rng);
    merit.shuffle(&mut rng);
    ValidatedDataset::from_records(da, src, ds.activation_step_seconds(), act, merit, 48).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn write_then_load_is_identity(seed in any::<u64>(), days in 8usize..14, step_idx in 0usize..3) {
        let step = [300u32, 900, 3600][step_idx];
        let ds = generate(&SyntheticSpec::new(start(), days, 48).seed(seed).step_seconds(step)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(dir.path(), &ds).unwrap();
        let loaded = load_dataset(&DatasetPaths::in_dir(dir.path()), &config()).unwrap();
        prop_assert_eq!(loaded.to_records(), ds.to_records());
        prop_assert!(loaded == ds);
    }

    #[test]
    fn row_order_does_not_matter(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
        let ds = generate(&SyntheticSpec::new(start(), 9, 48).seed(seed).step_seconds(900)).unwrap();
        prop_assert!(shuffled(&ds, shuffle_seed) == ds);
    }

    #[test]
    fn naive_forecasts_are_finite_and_full(seed in any::<u64>(), horizon in 1usize..400) {
        let ds = generate(&SyntheticSpec::new(start(), 10, 48).seed(seed).step_seconds(3600)).unwrap();
        let origin = start() + Days::new(8);
        let f = flexbid::data::naive_forecast(ds.da_realized_series(), origin, horizon).unwrap();
        prop_assert_eq!(f.len(), horizon);
        prop_assert!(f.iter().all(|v| v.is_finite()));
    }
}
