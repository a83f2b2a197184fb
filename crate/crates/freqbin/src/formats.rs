//! CSV dataset formats.
//!
//! Numbers are written with Rust's shortest round-trip `Display`, which is
//! locale independent and parses back to the identical `f64`.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use freqbin_core::beating::BeatingDataset;
use freqbin_core::counting::{BranchCounts, PowerScanPoint};
use freqbin_core::estimation::{DensityMatrix, MIN_GUESS_POINTS};
use freqbin_core::statekit::{Branch, PerBranch};

use crate::error::{CliError, CliResult};

pub const BRANCH_HEADER: [&str; 3] = ["branch", "counts", "sigma"];
pub const BEATING_HEADER: [&str; 3] = ["delay_ps", "counts", "sigma"];
pub const POWER_SCAN_HEADER: [&str; 3] = ["power_mw", "singles_hz", "sigma_hz"];
pub const DENSITY_HEADER: [&str; 6] = ["part", "row", "ss", "si", "is", "ii"];
/// Basis labels of the density matrix rows and columns.
pub const DENSITY_BASIS: [&str; 4] = ["ss", "si", "is", "ii"];

/// Writes rows of already formatted fields.
pub fn write_rows(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

pub fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Data rows of a CSV with an exact header, each with its 1-based line.
struct Table<'a> {
    path: &'a Path,
    header: &'a [&'a str],
    rows: Vec<(usize, csv::StringRecord)>,
}

impl<'a> Table<'a> {
    fn parse(text: &str, path: &'a Path, header: &'a [&'a str]) -> CliResult<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let csv_err = |e: csv::Error| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            CliError::schema(path, row, "-", e.to_string())
        };
        let found = match records.next() {
            None => return Err(CliError::schema(path, 1, "-", "file is empty")),
            Some(r) => r.map_err(csv_err)?,
        };
        if found.iter().ne(header.iter().copied()) {
            return Err(CliError::schema(
                path,
                1,
                "header",
                format!(
                    "expected `{}`, found `{}`",
                    header.join(","),
                    found.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_err)?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() == 1 && rec[0].trim().is_empty() {
                continue;
            }
            if rec.len() != header.len() {
                let column = header.get(rec.len()).unwrap_or(&"-");
                return Err(CliError::schema(
                    path,
                    line,
                    *column,
                    format!("{} fields, expected {}", rec.len(), header.len()),
                ));
            }
            rows.push((line, rec));
        }
        Ok(Self { path, header, rows })
    }

    fn field<T: FromStr>(&self, line: usize, rec: &csv::StringRecord, col: usize) -> CliResult<T>
    where
        T::Err: std::fmt::Display,
    {
        rec[col].trim().parse().map_err(|e: T::Err| {
            CliError::schema(
                self.path,
                line,
                self.header[col],
                format!("`{}`: {e}", &rec[col]),
            )
        })
    }

    fn number(&self, line: usize, rec: &csv::StringRecord, col: usize) -> CliResult<f64> {
        let v: f64 = self.field(line, rec, col)?;
        if v.is_finite() && v >= 0.0 {
            Ok(v)
        } else {
            Err(CliError::schema(
                self.path,
                line,
                self.header[col],
                format!("`{}` is not a finite non-negative number", &rec[col]),
            ))
        }
    }

    fn min_rows(&self, n: usize) -> CliResult<()> {
        if self.rows.len() < n {
            let last = self.rows.last().map_or(1, |(l, _)| *l);
            return Err(CliError::schema(
                self.path,
                last + 1,
                self.header[0],
                format!("{} data rows, need at least {n}", self.rows.len()),
            ));
        }
        Ok(())
    }
}

pub fn branch_counts_to_csv(counts: &BranchCounts) -> String {
    write_rows(
        &BRANCH_HEADER,
        Branch::ALL.iter().map(|&b| {
            vec![
                b.label().to_owned(),
                counts.counts[b].to_string(),
                counts.sigmas[b].to_string(),
            ]
        }),
    )
}

/// Parses a branch-counts table; every branch must appear exactly once.
/// The file carries no integration time, so the caller supplies it.
pub fn branch_counts_from_csv(
    text: &str,
    path: &Path,
    integration_time_s: f64,
) -> CliResult<BranchCounts> {
    let table = Table::parse(text, path, &BRANCH_HEADER)?;
    let mut counts = PerBranch::<Option<u64>>::default();
    let mut sigmas = PerBranch::splat(0.0);
    for (line, rec) in &table.rows {
        let branch = Branch::from_label(rec[0].trim()).ok_or_else(|| {
            CliError::schema(
                path,
                *line,
                "branch",
                format!("`{}` is not one of aa, bb, ab, ba", &rec[0]),
            )
        })?;
        if counts[branch].is_some() {
            return Err(CliError::schema(
                path,
                *line,
                "branch",
                format!("duplicate branch {}", branch.label()),
            ));
        }
        counts[branch] = Some(table.field(*line, rec, 1)?);
        sigmas[branch] = table.number(*line, rec, 2)?;
    }
    let last = table.rows.last().map_or(1, |(l, _)| *l);
    for b in Branch::ALL {
        if counts[b].is_none() {
            return Err(CliError::schema(
                path,
                last + 1,
                "branch",
                format!("missing branch {}", b.label()),
            ));
        }
    }
    Ok(BranchCounts {
        counts: counts.map(|_, c| c.unwrap_or(0)),
        sigmas,
        integration_time_s,
    })
}

pub fn beating_to_csv(data: &BeatingDataset) -> String {
    write_rows(
        &BEATING_HEADER,
        (0..data.len()).map(|i| {
            vec![
                data.delays()[i].to_string(),
                data.counts()[i].to_string(),
                data.sigmas()[i].to_string(),
            ]
        }),
    )
}

/// Parses a beating table with at least [`MIN_GUESS_POINTS`] rows and
/// strictly increasing delays.
pub fn beating_from_csv(
    text: &str,
    path: &Path,
    integration_time_per_point: f64,
) -> CliResult<BeatingDataset> {
    let table = Table::parse(text, path, &BEATING_HEADER)?;
    table.min_rows(MIN_GUESS_POINTS)?;
    let mut delays = Vec::with_capacity(table.rows.len());
    let mut counts = Vec::with_capacity(table.rows.len());
    let mut sigmas = Vec::with_capacity(table.rows.len());
    for (line, rec) in &table.rows {
        let d: f64 = table.field(*line, rec, 0)?;
        if !d.is_finite() {
            return Err(CliError::schema(path, *line, "delay_ps", "not finite"));
        }
        if delays.last().is_some_and(|&prev| d <= prev) {
            return Err(CliError::schema(
                path,
                *line,
                "delay_ps",
                "delays must be strictly increasing",
            ));
        }
        delays.push(d);
        counts.push(table.number(*line, rec, 1)?);
        sigmas.push(table.number(*line, rec, 2)?);
    }
    Ok(BeatingDataset::new(
        delays,
        counts,
        sigmas,
        integration_time_per_point,
    )?)
}

pub fn power_scan_to_csv(points: &[PowerScanPoint]) -> String {
    write_rows(
        &POWER_SCAN_HEADER,
        points.iter().map(|p| {
            vec![
                p.power_mw.to_string(),
                p.rate_hz.to_string(),
                p.sigma_hz.to_string(),
            ]
        }),
    )
}

pub fn power_scan_from_csv(text: &str, path: &Path) -> CliResult<Vec<PowerScanPoint>> {
    let table = Table::parse(text, path, &POWER_SCAN_HEADER)?;
    table.min_rows(4)?;
    table
        .rows
        .iter()
        .map(|(line, rec)| {
            Ok(PowerScanPoint {
                power_mw: table.number(*line, rec, 0)?,
                rate_hz: table.number(*line, rec, 1)?,
                sigma_hz: table.number(*line, rec, 2)?,
            })
        })
        .collect()
}

/// Real part as rows `real,ss..ii`, then the imaginary part as `imag,...`.
pub fn density_to_csv(real: &[[f64; 4]; 4], imag: &[[f64; 4]; 4]) -> String {
    let block = |part: &'static str, m: &[[f64; 4]; 4]| {
        m.iter()
            .zip(DENSITY_BASIS)
            .map(move |(row, label)| {
                let mut r = vec![part.to_owned(), label.to_owned()];
                r.extend(row.iter().map(f64::to_string));
                r
            })
            .collect::<Vec<_>>()
    };
    write_rows(
        &DENSITY_HEADER,
        block("real", real).into_iter().chain(block("imag", imag)),
    )
}

pub fn density_matrix_to_csv(rho: &DensityMatrix) -> String {
    density_to_csv(&rho.real_part(), &rho.imag_part())
}

/// One 4×4 real block of a density matrix.
pub type Block = [[f64; 4]; 4];

/// Inverse of [`density_to_csv`].
pub fn density_from_csv(text: &str, path: &Path) -> CliResult<(Block, Block)> {
    let table = Table::parse(text, path, &DENSITY_HEADER)?;
    if table.rows.len() != 8 {
        return Err(CliError::schema(
            path,
            table.rows.last().map_or(1, |(l, _)| *l) + 1,
            "part",
            format!("{} data rows, expected 8", table.rows.len()),
        ));
    }
    let mut out = [[[0.0; 4]; 4]; 2];
    for (k, (line, rec)) in table.rows.iter().enumerate() {
        let (part, i) = (k / 4, k % 4);
        let expected_part = ["real", "imag"][part];
        if rec[0].trim() != expected_part {
            return Err(CliError::schema(
                path,
                *line,
                "part",
                format!("expected `{expected_part}`"),
            ));
        }
        if rec[1].trim() != DENSITY_BASIS[i] {
            return Err(CliError::schema(
                path,
                *line,
                "row",
                format!("expected `{}`", DENSITY_BASIS[i]),
            ));
        }
        for (j, cell) in out[part][i].iter_mut().enumerate() {
            *cell = table.field(*line, rec, 2 + j)?;
        }
    }
    Ok((out[0], out[1]))
}

pub fn read_branch_counts(path: &Path, integration_time_s: f64) -> CliResult<BranchCounts> {
    branch_counts_from_csv(&read_file(path)?, path, integration_time_s)
}

pub fn read_beating(path: &Path, integration_time_per_point: f64) -> CliResult<BeatingDataset> {
    beating_from_csv(&read_file(path)?, path, integration_time_per_point)
}

pub fn read_power_scan(path: &Path) -> CliResult<Vec<PowerScanPoint>> {
    power_scan_from_csv(&read_file(path)?, path)
}

/// Placeholder path used when parsing in-memory text.
pub fn memory_path(name: &str) -> PathBuf {
    PathBuf::from(format!("<{name}>"))
}
