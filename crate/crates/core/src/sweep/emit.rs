use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PointOutcome, RunRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn state_name(state: &[usize]) -> String {
    let parts: Vec<String> = state.iter().map(usize::to_string).collect();
    format!("p_{}", parts.join("_"))
}

fn write_row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

/// One row per record, in record order.
///
/// Two-mode columns: `axis_value, p_<a>_<b>..., energy_total, energy_plus,
/// energy_minus, alpha_pow, alpha_exp, regime, p00, captured_mass`. With
/// other mode counts the energy and regime columns are per mode and the
/// ground probability is `p_ground`. Failed points keep their axis value,
/// report `failed` as the regime and leave other fields empty.
pub fn write_csv<W: Write>(records: &[RunRecord], track: &[Vec<usize>], modes: usize, w: &mut W) -> io::Result<()> {
    let two = modes == 2;
    let mut header = vec!["axis_value".to_string()];
    header.extend(track.iter().map(|s| state_name(s)));
    header.push("energy_total".into());
    if two {
        header.extend(["energy_plus", "energy_minus", "alpha_pow", "alpha_exp", "regime", "p00"].map(String::from));
    } else {
        header.extend((0..modes).map(|i| format!("energy_mode{i}")));
        header.extend((0..modes).map(|i| format!("regime_mode{i}")));
        header.push("p_ground".into());
    }
    header.push("captured_mass".into());
    write_row(w, &header)?;

    for rec in records {
        let mut row = vec![num(rec.axis_value)];
        match &rec.outcome {
            PointOutcome::Completed(out) => {
                row.extend(out.tracked.iter().map(|t| num(t.probability)));
                row.push(num(out.energy.total));
                row.extend(out.energy.per_mode.iter().map(|&e| num(e)));
                if two {
                    let c = out.classification;
                    row.push(opt(c.and_then(|c| c.power_law).map(|f| f.exponent)));
                    row.push(opt(c.and_then(|c| c.exponential).map(|f| f.exponent)));
                    row.push(c.map(|c| c.regime.as_str().to_string()).unwrap_or_default());
                } else {
                    row.extend(out.mode_regimes.iter().map(|c| c.regime.as_str().to_string()));
                }
                row.push(num(out.p_ground));
                row.push(num(out.captured_mass));
            }
            PointOutcome::Failed { .. } => {
                row.extend(track.iter().map(|_| String::new()));
                row.push(String::new());
                if two {
                    row.extend(["", "", "", ""].map(String::from));
                    row.push("failed".into());
                } else {
                    row.extend((0..modes).map(|_| String::new()));
                    row.extend((0..modes).map(|_| "failed".to_string()));
                }
                row.push(String::new());
                row.push(String::new());
            }
        }
        write_row(w, &row)?;
    }
    Ok(())
}

/// `axis_value, energy_total, energy_mode<i>..., zero_point`.
pub fn write_energy_csv<W: Write>(records: &[RunRecord], modes: usize, w: &mut W) -> io::Result<()> {
    let mut header = vec!["axis_value".to_string(), "energy_total".to_string()];
    header.extend((0..modes).map(|i| format!("energy_mode{i}")));
    header.push("zero_point".into());
    write_row(w, &header)?;
    for rec in records {
        let mut row = vec![num(rec.axis_value)];
        match rec.outputs() {
            Some(out) => {
                row.push(num(out.energy.total));
                row.extend(out.energy.per_mode.iter().map(|&e| num(e)));
                row.push(num(out.energy.zero_point));
            }
            None => row.extend((0..modes + 2).map(|_| String::new())),
        }
        write_row(w, &row)?;
    }
    Ok(())
}

pub fn write_json<W: Write>(records: &[RunRecord], w: &mut W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, records)?;
    writeln!(w)
}

pub fn read_json<R: Read>(r: R) -> Result<Vec<RunRecord>> {
    serde_json::from_reader(r).map_err(|e| Error::Config(format!("malformed record file: {e}")))
}

/// Writes records to `path` in the given format.
pub fn emit(records: &[RunRecord], track: &[Vec<usize>], modes: usize, format: Format, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    match format {
        Format::Csv => write_csv(records, track, modes, &mut w),
        Format::Json => write_json(records, &mut w),
    }
    .and_then(|_| w.flush())
    .map_err(io_err)
}
