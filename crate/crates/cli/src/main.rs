use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{Days, NaiveDate};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use flexbid::backtest::{self, read_report, render_ranking, run_backtest, write_report_dir, REPORT_FILE};
use flexbid::calibration::calibrate_day;
use flexbid::data::{load_dataset, write_dataset, DatasetPaths, RunConfig, ValidatedDataset};
use flexbid::lp::{write_lp_format, Tolerances};
use flexbid::model::{build_lp, extract_bid_plan, ModelParams};
use flexbid::strategy::{PenaltyPolicy, PenaltySelector, SplitPolicy, StrategySpec};
use flexbid::synthetic::{generate, FixtureKind, SyntheticSpec};

#[derive(Parser)]
#[command(name = "flexbid", version, about = "Cross-market flexibility bidding: calibrate, optimize, backtest")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct DataArgs {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory with the four market CSV files; defaults to the config's directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Fill missing forecast origins with the seasonal naive forecast.
    #[arg(long)]
    naive_forecast: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Market,
    PerfectForesight,
    NoActivation,
    SaturatedActivation,
}

impl From<Kind> for FixtureKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Market => FixtureKind::Market,
            Kind::PerfectForesight => FixtureKind::PerfectForesight,
            Kind::NoActivation => FixtureKind::NoActivation,
            Kind::SaturatedActivation => FixtureKind::SaturatedActivation,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic synthetic dataset.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        start: NaiveDate,
        #[arg(long)]
        days: usize,
        #[arg(long, default_value_t = 336)]
        horizon: usize,
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        /// Activation series resolution in seconds.
        #[arg(long, default_value_t = 300)]
        step: u32,
        #[arg(long, value_enum, default_value_t = Kind::Market)]
        kind: Kind,
    },
    /// Emit the calibrated model inputs for each day as JSON.
    Calibrate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: Option<NaiveDate>,
        /// Output directory for `calibration_<date>.json`; stdout (one document per line) if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve one day and emit the bid plan and expected trajectory as JSON.
    Optimize {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        date: NaiveDate,
        /// Strategy name such as "(free|15)"; defaults to the config's split and penalty.
        #[arg(long)]
        strategy: Option<String>,
        /// Start level in MWh; defaults to the config value.
        #[arg(long)]
        tau0: Option<f64>,
        /// Also write the program in LP format.
        #[arg(long)]
        dump_lp: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the rolling-horizon backtest for each strategy.
    Backtest {
        #[command(flatten)]
        data: DataArgs,
        /// Strategy names; each value may hold several names separated by ';'.
        /// Defaults to the config's roster.
        #[arg(long, num_args = 1..)]
        strategies: Vec<String>,
        #[arg(long)]
        from: NaiveDate,
        #[arg(long)]
        to: NaiveDate,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank backtest results by total profit.
    Report {
        /// Backtest output directories or report files.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn load(args: &DataArgs, first: NaiveDate, last: NaiveDate) -> Result<(RunConfig, ValidatedDataset)> {
    let cfg = RunConfig::load(&args.config).with_context(|| format!("loading {}", args.config.display()))?;
    let dir = match &args.data {
        Some(d) => d.clone(),
        None => args.config.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let mut ds = load_dataset(&DatasetPaths::in_dir(&dir), &cfg).with_context(|| format!("loading data from {}", dir.display()))?;
    if args.naive_forecast {
        ds.fill_naive_forecasts(first, last, cfg.horizon_hours)?;
    }
    Ok((cfg, ds))
}

/// Directory name for a strategy's outputs.
fn strategy_slug(s: &StrategySpec) -> String {
    let split = match s.split {
        SplitPolicy::Free => "free".to_string(),
        SplitPolicy::Fixed { da_mw, afrr_mw } => format!("{da_mw}-{afrr_mw}"),
    };
    let penalty = match s.penalty {
        PenaltyPolicy::Free => "free".to_string(),
        PenaltyPolicy::Fixed(c) => c.to_string(),
    };
    format!("split_{split}__penalty_{penalty}")
}

fn parse_strategies(raw: &[String], cfg: &RunConfig) -> Result<Vec<StrategySpec>> {
    let mut out = Vec::new();
    for item in raw {
        for name in item.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            out.push(name.parse::<StrategySpec>()?);
        }
    }
    if out.is_empty() {
        out = cfg.strategies.clone();
    }
    if out.is_empty() {
        bail!("no strategies given and none configured");
    }
    Ok(out)
}

fn write_json(path: Option<&Path>, value: &serde_json::Value) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
            serde_json::to_writer_pretty(&mut w, value)?;
            writeln!(w)?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            let line = serde_json::to_string(value)?;
            // A closed reader (e.g. `| head`) is not an error.
            match writeln!(w, "{line}") {
                Err(e) if e.kind() == io::ErrorKind::BrokenPipe => std::process::exit(0),
                other => other?,
            }
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { out, start, days, horizon, seed, step, kind } => {
            let spec = SyntheticSpec { start, days, seed, step_seconds: step, horizon_hours: horizon, kind: kind.into() };
            let ds = generate(&spec)?;
            write_dataset(&out, &ds)?;
            eprintln!("wrote {days} days ({} to {}) to {}", start, spec.end(), out.display());
        }
        Command::Calibrate { data, from, to, out } => {
            let to = to.unwrap_or(from);
            let (cfg, ds) = load(&data, from, to)?;
            if let Some(dir) = &out {
                fs::create_dir_all(dir)?;
            }
            let mut date = from;
            while date <= to {
                let cal = calibrate_day::<f64>(&ds, date, &cfg).with_context(|| format!("calibrating {date}"))?;
                let value = serde_json::to_value(&cal)?;
                let path = out.as_ref().map(|d| d.join(format!("calibration_{date}.json")));
                write_json(path.as_deref(), &value)?;
                date = date + Days::new(1);
            }
        }
        Command::Optimize { data, date, strategy, tau0, dump_lp, out } => {
            let (cfg, ds) = load(&data, date, date)?;
            let strategy = match strategy {
                Some(s) => s.parse::<StrategySpec>()?,
                None => cfg.strategy(),
            };
            strategy.validate(cfg.total_flexibility_mw).map_err(anyhow::Error::msg)?;
            let penalty = match strategy.penalty {
                PenaltyPolicy::Fixed(c) => c,
                PenaltyPolicy::Free => PenaltySelector::new(cfg.clustering.clone()).penalty_for(&ds, date)?,
            };
            let cal = calibrate_day::<f64>(&ds, date, &cfg)?;
            let params = ModelParams::from_config(&cfg, strategy.split, penalty).with_tau_0(tau0.unwrap_or(cfg.tau_0_mwh));
            let model = build_lp(&cal, &params)?;
            if let Some(path) = &dump_lp {
                let w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
                write_lp_format(&model.lp, w)?;
            }
            let solution = flexbid::lp::solve(&model.lp, &Tolerances::default())?;
            let (plan, trajectory) = extract_bid_plan(&model, &solution)?;
            let value = json!({
                "strategy": strategy.name(),
                "penalty": penalty,
                "status": format!("{:?}", solution.status),
                "objective": solution.objective,
                "iterations": solution.iterations,
                "columns": model.lp.num_vars(),
                "rows": model.lp.num_rows(),
                "plan": plan,
                "trajectory": trajectory,
            });
            write_json(out.as_deref(), &value)?;
        }
        Command::Backtest { data, strategies, from, to, out } => {
            if to < from {
                bail!("--to {to} precedes --from {from}");
            }
            let (cfg, ds) = load(&data, from, to)?;
            let strategies = parse_strategies(&strategies, &cfg)?;
            fs::create_dir_all(&out)?;
            let mut reports = Vec::new();
            for s in &strategies {
                let t = std::time::Instant::now();
                let report = run_backtest(&ds, s, &cfg, from, to)?;
                let dir = out.join(strategy_slug(s));
                write_report_dir(&dir, &report)?;
                eprintln!("{:<14} total {:>14.2} EUR  ({:.1?}) -> {}", report.strategy, report.total_profit, t.elapsed(), dir.display());
                reports.push(report);
            }
            print!("{}", render_ranking(&backtest::ranking(&reports)));
        }
        Command::Report { inputs, json } => {
            let mut files = Vec::new();
            for input in &inputs {
                if input.is_file() {
                    files.push(input.clone());
                } else if input.join(REPORT_FILE).is_file() {
                    files.push(input.join(REPORT_FILE));
                } else {
                    let mut found: Vec<PathBuf> = fs::read_dir(input)
                        .with_context(|| format!("reading {}", input.display()))?
                        .filter_map(|e| e.ok().map(|e| e.path().join(REPORT_FILE)))
                        .filter(|p| p.is_file())
                        .collect();
                    found.sort();
                    files.extend(found);
                }
            }
            if files.is_empty() {
                bail!("no {REPORT_FILE} found");
            }
            let reports = files
                .iter()
                .map(|f| read_report(f).with_context(|| format!("reading {}", f.display())))
                .collect::<Result<Vec<_>>>()?;
            let rows = backtest::ranking(&reports);
            if json {
                println!("{}", serde_json::to_string_pretty(&rows)?);
            } else {
                print!("{}", render_ranking(&rows));
            }
        }
    }
    Ok(())
}
