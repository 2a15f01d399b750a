//! File input/output: sweep CSVs with JSON metadata sidecars, fit datasets,
//! TES histograms and event lists.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use spdc_herald::{FitObservation, RunData, SweepResult, TesHistogram};

use crate::error::{CliError, CliResult};

/// Columns of the long-format sweep CSV, in order.
pub const SWEEP_COLUMNS: [&str; 7] = [
    "B",
    "mean_photons_idler",
    "mean_photons_signal",
    "n",
    "p_n",
    "F_single",
    "F_photon_number",
];

pub fn write_json_file<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("JSON encoding failed: {e}")))?;
    std::fs::write(path, text + "\n")
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

pub fn print_json<T: Serialize>(value: &T) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("JSON encoding failed: {e}")))?;
    println!("{text}");
    Ok(())
}

/// Long-format sweep rows: one line per `(gain, n)` pair.
pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> CliResult<()> {
    let mut out = String::new();
    out.push_str(&SWEEP_COLUMNS.join(","));
    out.push('\n');
    for (g, &b) in sweep.gains.iter().enumerate() {
        for (j, &n) in sweep.n_list.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                b,
                sweep.mean_idler_detected[g],
                sweep.mean_signal_detected[g],
                n,
                sweep.herald_prob[g][j],
                sweep.fidelity_single_mode[g][j],
                sweep.fidelity_photon_number[g][j],
            ));
        }
    }
    std::fs::write(path, out)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(())
}

/// Sidecar metadata path: `<stem>.meta.json` next to the CSV.
pub fn default_meta_path(csv_path: &Path) -> PathBuf {
    let mut p = csv_path.to_path_buf();
    p.set_extension("meta.json");
    p
}

fn open_csv_reader(path: &Path) -> CliResult<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn is_numeric_record(record: &csv::StringRecord) -> bool {
    record
        .iter()
        .all(|f| f.is_empty() || f.parse::<f64>().is_ok())
        && record.iter().any(|f| !f.is_empty())
}

fn parse_f64_at(field: &str, line: u64, column: &str) -> CliResult<f64> {
    field.parse::<f64>().map_err(|_| {
        CliError::Config(format!(
            "line {line}: column '{column}' has non-numeric value '{field}'"
        ))
    })
}

fn parse_opt_f64_at(field: &str, line: u64, column: &str) -> CliResult<Option<f64>> {
    if field.is_empty() {
        Ok(None)
    } else {
        parse_f64_at(field, line, column).map(Some)
    }
}

/// Fit dataset CSV with columns `run_id, n, herald_prob,
/// herald_prob_err_lo, herald_prob_err_hi, fidelity, fidelity_err_lo,
/// fidelity_err_hi, mean_photons`. Empty fields mark absent values; rows
/// sharing a `run_id` form one run and must agree on `mean_photons`.
pub fn read_fit_dataset(path: &Path) -> CliResult<Vec<RunData>> {
    let mut reader = open_csv_reader(path)?;
    let mut runs: Vec<RunData> = Vec::new();
    let mut first = true;
    for item in reader.records() {
        let record = item.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if first {
            first = false;
            if !is_numeric_record(&csv::StringRecord::from(
                record.iter().skip(1).collect::<Vec<_>>(),
            )) {
                continue; // header row
            }
        }
        if record.len() != 9 {
            return Err(CliError::Config(format!(
                "line {line}: expected 9 columns, found {}",
                record.len()
            )));
        }
        let run_id = record[0].to_string();
        let n = record[1].parse::<usize>().map_err(|_| {
            CliError::Config(format!("line {line}: column 'n' has invalid value '{}'", &record[1]))
        })?;
        let herald_prob = parse_f64_at(&record[2], line, "herald_prob")?;
        let p_lo = parse_opt_f64_at(&record[3], line, "herald_prob_err_lo")?;
        let p_hi = parse_opt_f64_at(&record[4], line, "herald_prob_err_hi")?;
        let fidelity = parse_opt_f64_at(&record[5], line, "fidelity")?;
        let f_lo = parse_opt_f64_at(&record[6], line, "fidelity_err_lo")?;
        let f_hi = parse_opt_f64_at(&record[7], line, "fidelity_err_hi")?;
        let mean_photons = parse_f64_at(&record[8], line, "mean_photons")?;

        let herald_prob_err = match (p_lo, p_hi) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(CliError::Config(format!(
                    "line {line}: herald_prob error bounds must both be present or both empty"
                )))
            }
        };
        let fidelity_err = match (f_lo, f_hi) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            (None, None) => None,
            _ => {
                return Err(CliError::Config(format!(
                    "line {line}: fidelity error bounds must both be present or both empty"
                )))
            }
        };
        if fidelity.is_none() && fidelity_err.is_some() {
            return Err(CliError::Config(format!(
                "line {line}: fidelity error bounds given without a fidelity value"
            )));
        }

        let obs = FitObservation {
            n,
            herald_prob,
            herald_prob_err,
            fidelity,
            fidelity_err,
        };
        match runs.iter_mut().find(|r| r.run_id == run_id) {
            Some(run) => {
                if (run.mean_photons - mean_photons).abs()
                    > 1e-9 * run.mean_photons.abs().max(1.0)
                {
                    return Err(CliError::Config(format!(
                        "line {line}: run '{run_id}' has inconsistent mean_photons \
                         ({} vs {mean_photons})",
                        run.mean_photons
                    )));
                }
                run.observations.push(obs);
            }
            None => runs.push(RunData {
                run_id,
                mean_photons,
                observations: vec![obs],
            }),
        }
    }
    if runs.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no data rows found",
            path.display()
        )));
    }
    Ok(runs)
}

/// Histogram CSV with columns `value, count`: bin centers (uniformly
/// spaced) and event counts.
pub fn read_histogram(path: &Path) -> CliResult<TesHistogram> {
    let mut reader = open_csv_reader(path)?;
    let mut centers: Vec<f64> = Vec::new();
    let mut counts: Vec<u64> = Vec::new();
    let mut first = true;
    for item in reader.records() {
        let record = item.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if first {
            first = false;
            if !is_numeric_record(&record) {
                continue;
            }
        }
        if record.len() != 2 {
            return Err(CliError::Config(format!(
                "line {line}: histogram rows need 'value,count', found {} column(s)",
                record.len()
            )));
        }
        centers.push(parse_f64_at(&record[0], line, "value")?);
        let count = parse_f64_at(&record[1], line, "count")?;
        if count < 0.0 || count.fract() != 0.0 {
            return Err(CliError::Config(format!(
                "line {line}: count must be a non-negative integer, got {count}"
            )));
        }
        counts.push(count as u64);
    }
    if centers.len() < 2 {
        return Err(CliError::Config(format!(
            "{}: a histogram needs at least two bins",
            path.display()
        )));
    }
    let width = centers[1] - centers[0];
    if width <= 0.0 {
        return Err(CliError::Config("histogram bin centers must increase".into()));
    }
    for (i, pair) in centers.windows(2).enumerate() {
        if ((pair[1] - pair[0]) - width).abs() > 1e-6 * width {
            return Err(CliError::Config(format!(
                "histogram bins are not uniformly spaced near row {}",
                i + 2
            )));
        }
    }
    let mut edges: Vec<f64> = centers.iter().map(|c| c - 0.5 * width).collect();
    edges.push(centers[centers.len() - 1] + 0.5 * width);
    TesHistogram::new(edges, counts).map_err(CliError::from)
}

/// Single-column CSV of raw values (pulse areas or a time series).
pub fn read_values(path: &Path) -> CliResult<Vec<f64>> {
    let mut reader = open_csv_reader(path)?;
    let mut values = Vec::new();
    let mut first = true;
    for item in reader.records() {
        let record = item.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if first {
            first = false;
            if !is_numeric_record(&record) {
                continue;
            }
        }
        values.push(parse_f64_at(&record[0], line, "value")?);
    }
    if values.is_empty() {
        return Err(CliError::Config(format!(
            "{}: no values found",
            path.display()
        )));
    }
    Ok(values)
}

/// Two-column CSV written to a file or stdout.
pub fn write_pairs_csv(
    path: Option<&Path>,
    header: (&str, &str),
    rows: impl Iterator<Item = (f64, f64)>,
) -> CliResult<()> {
    let mut text = format!("{},{}\n", header.0, header.1);
    for (a, b) in rows {
        text.push_str(&format!("{a},{b}\n"));
    }
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display())))?,
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}
