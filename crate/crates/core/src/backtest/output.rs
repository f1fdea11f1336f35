use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::{BacktestReport, MarketAmounts};
use crate::strategy::{PenaltyPolicy, SplitPolicy, StrategySpec};

pub const REPORT_FILE: &str = "report.json";
pub const CUMULATIVE_FILE: &str = "cumulative_profit.csv";
pub const BATTERY_FILE: &str = "battery_level.csv";
pub const SPLIT_FILE: &str = "split_by_block.csv";

fn to_io(e: impl Into<Box<dyn std::error::Error + Send + Sync>>) -> io::Error {
    io::Error::other(e)
}

/// Writes the report and its three plot-ready series into `dir`.
pub fn write_report_dir(dir: &Path, report: &BacktestReport) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join(REPORT_FILE))?);
    serde_json::to_writer_pretty(&mut w, report).map_err(to_io)?;
    w.write_all(b"\n")?;
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(CUMULATIVE_FILE)).map_err(to_io)?;
    let mut header: Vec<&str> = vec!["date"];
    header.extend(MarketAmounts::NAMES);
    header.extend(["daily_total", "cumulative"]);
    w.write_record(&header).map_err(to_io)?;
    for (day, (date, total, cumulative)) in report.days.iter().zip(report.cumulative_profit()) {
        let mut row = vec![date.to_string()];
        row.extend(day.settlement.profit.to_array().iter().map(f64::to_string));
        row.push(total.to_string());
        row.push(cumulative.to_string());
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(BATTERY_FILE)).map_err(to_io)?;
    w.write_record(["date", "level_start_mwh", "level_end_mwh"]).map_err(to_io)?;
    for d in &report.days {
        w.write_record([d.date.to_string(), d.battery_start.to_string(), d.battery_end.to_string()])
            .map_err(to_io)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(SPLIT_FILE)).map_err(to_io)?;
    w.write_record(["block", "da_mw", "afrr_mw"]).map_err(to_io)?;
    for s in &report.split_by_block {
        w.write_record([s.block.to_string(), s.da_mw.to_string(), s.afrr_mw.to_string()]).map_err(to_io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> io::Result<BacktestReport> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(to_io)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingRow {
    pub rank: usize,
    pub strategy: String,
    pub split: String,
    pub penalty: String,
    pub total_profit: f64,
    pub totals: MarketAmounts,
}

/// Reports sorted by total profit, highest first; ties keep input order.
pub fn ranking(reports: &[BacktestReport]) -> Vec<RankingRow> {
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| reports[b].total_profit.total_cmp(&reports[a].total_profit).then(a.cmp(&b)));
    order
        .into_iter()
        .enumerate()
        .map(|(i, idx)| {
            let r = &reports[idx];
            let (split, penalty) = match r.strategy.parse::<StrategySpec>() {
                Ok(s) => (
                    match s.split {
                        SplitPolicy::Free => "free".to_string(),
                        SplitPolicy::Fixed { da_mw, afrr_mw } => format!("({da_mw},{afrr_mw})"),
                    },
                    match s.penalty {
                        PenaltyPolicy::Free => "free".to_string(),
                        PenaltyPolicy::Fixed(c) => format!("{c:.1}"),
                    },
                ),
                Err(_) => ("?".into(), "?".into()),
            };
            RankingRow { rank: i + 1, strategy: r.strategy.clone(), split, penalty, total_profit: r.total_profit, totals: r.totals }
        })
        .collect()
}

/// Plain-text ranking table.
pub fn render_ranking(rows: &[RankingRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4}  {:<10} {:>8} {:>16} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "rank", "split", "penalty", "total_eur", "src_pos", "src_neg", "sre_pos", "sre_neg", "da"
    );
    for r in rows {
        let t = &r.totals;
        let _ = writeln!(
            out,
            "{:>4}  {:<10} {:>8} {:>16.2} {:>12.2} {:>12.2} {:>12.2} {:>12.2} {:>12.2}",
            r.rank, r.split, r.penalty, r.total_profit, t.src_pos, t.src_neg, t.sre_pos, t.sre_neg, t.da
        );
    }
    out
}
