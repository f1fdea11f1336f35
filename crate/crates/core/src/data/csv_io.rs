use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{
    ActivationRecord, DataError, DaPriceRecord, DatasetPaths, MeritCurveRecord, RunConfig, SrcMarginalRecord,
    ValidatedDataset, DA_PRICES_FILE, SRC_MARGINALS_FILE, SRE_ACTIVATION_FILE, SRE_MERIT_FILE,
};

const DA_HEADER: [&str; 5] = ["date", "hour", "price", "kind", "forecast_origin"];
const SRC_HEADER: [&str; 4] = ["date", "block", "direction", "marginal_price"];
const ACT_HEADER: [&str; 4] = ["date", "second_of_day", "direction", "activated_mw"];
const MERIT_HEADER: [&str; 5] = ["date", "block", "direction", "price", "cumulative_volume"];

fn read_records<T: DeserializeOwned, R: Read>(file: &str, header: &[&str], reader: R) -> Result<Vec<T>, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Schema { file: file.into(), line: Some(1), message: e.to_string() })?
        .iter()
        .map(str::to_string)
        .collect();
    if found != header {
        return Err(DataError::Schema {
            file: file.into(),
            line: Some(1),
            message: format!("expected columns {}, found {}", header.join(","), found.join(",")),
        });
    }
    rdr.deserialize()
        .map(|r| {
            r.map_err(|e| DataError::Schema {
                file: file.into(),
                line: e.position().map(|p| p.line()),
                message: e.to_string(),
            })
        })
        .collect()
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path).map(BufReader::new).map_err(|e| DataError::io(path, e))
}

/// Parses the `# step=<seconds>` header line of the activation file.
fn read_step<R: BufRead>(reader: &mut R) -> Result<u32, DataError> {
    let mut first = String::new();
    reader.read_line(&mut first).map_err(|e| DataError::Schema {
        file: SRE_ACTIVATION_FILE.into(),
        line: Some(1),
        message: e.to_string(),
    })?;
    first
        .trim()
        .strip_prefix('#')
        .and_then(|s| s.trim().strip_prefix("step="))
        .and_then(|s| s.trim().parse::<u32>().ok())
        .ok_or_else(|| DataError::Schema {
            file: SRE_ACTIVATION_FILE.into(),
            line: Some(1),
            message: format!("expected '# step=<seconds>' header, found {:?}", first.trim()),
        })
}

/// Reads and validates the four market files.
pub fn load_dataset(paths: &DatasetPaths, config: &RunConfig) -> Result<ValidatedDataset, DataError> {
    let da: Vec<DaPriceRecord> = read_records(DA_PRICES_FILE, &DA_HEADER, open(&paths.da_prices)?)?;
    let src: Vec<SrcMarginalRecord> = read_records(SRC_MARGINALS_FILE, &SRC_HEADER, open(&paths.src_marginals)?)?;
    let mut act_reader = open(&paths.sre_activation)?;
    let step = read_step(&mut act_reader)?;
    let act: Vec<ActivationRecord> = read_records(SRE_ACTIVATION_FILE, &ACT_HEADER, act_reader)?;
    let merit: Vec<MeritCurveRecord> = read_records(SRE_MERIT_FILE, &MERIT_HEADER, open(&paths.sre_merit)?)?;
    ValidatedDataset::from_records(da, src, step, act, merit, config.horizon_hours)
}

fn write_records<T: Serialize, W: Write>(w: W, rows: &[T]) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes the dataset as the four canonical CSV files inside `dir`.
pub fn write_dataset(dir: &Path, ds: &ValidatedDataset) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|e| DataError::io(dir, e))?;
    let paths = DatasetPaths::in_dir(dir);
    let (da, src, act, merit) = ds.to_records();
    let create = |p: &Path| File::create(p).map(BufWriter::new).map_err(|e| DataError::io(p, e));
    let csv_err = |p: &Path, e: csv::Error| DataError::io(p, std::io::Error::other(e));

    write_records(create(&paths.da_prices)?, &da).map_err(|e| csv_err(&paths.da_prices, e))?;
    write_records(create(&paths.src_marginals)?, &src).map_err(|e| csv_err(&paths.src_marginals, e))?;
    let mut w = create(&paths.sre_activation)?;
    writeln!(w, "# step={}", ds.activation_step_s).map_err(|e| DataError::io(&paths.sre_activation, e))?;
    write_records(w, &act).map_err(|e| csv_err(&paths.sre_activation, e))?;
    write_records(create(&paths.sre_merit)?, &merit).map_err(|e| csv_err(&paths.sre_merit, e))?;
    Ok(())
}
