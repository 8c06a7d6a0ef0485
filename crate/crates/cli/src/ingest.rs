//! CSV in and out. Empty cells and the literal `NA` are missing.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use delreg_core::Dataset;
use nalgebra::DMatrix;

use crate::CliError;

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

fn reader<R: Read>(source: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source)
}

fn parse_cell(cell: &str, line: u64, column: usize, name: &str) -> Result<f64, CliError> {
    cell.parse::<f64>().map_err(|_| CliError::Parse {
        line,
        column: column + 1,
        name: name.to_string(),
        cell: cell.to_string(),
    })
}

fn header_and_response<R: Read>(
    rdr: &mut csv::Reader<R>,
    response: &str,
) -> Result<(Vec<String>, usize), CliError> {
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let index = names
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| CliError::MissingResponseColumn(response.to_string()))?;
    Ok((names, index))
}

/// Reads a data table; `response` names the dependent column.
pub fn parse_csv<R: Read>(source: R, response: &str) -> Result<Dataset, CliError> {
    let mut rdr = reader(source);
    let (names, response_index) = header_and_response(&mut rdr, response)?;
    let d = names.len();
    let mut columns = vec![Vec::new(); d];
    let mut observed = vec![Vec::new(); d];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            if is_missing(cell) {
                columns[j].push(f64::NAN);
                observed[j].push(false);
            } else {
                columns[j].push(parse_cell(cell, line, j, &names[j])?);
                observed[j].push(true);
            }
        }
    }
    Ok(Dataset::from_columns(names, columns, observed, response_index)?)
}

pub fn ingest_csv(path: impl AsRef<Path>, response: &str) -> Result<Dataset, CliError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_csv(file, response)
}

/// Writes values with 15 significant digits and `NA` for missing cells, in
/// the dataset's own column order.
pub fn write_csv<W: Write>(dataset: &Dataset, sink: W) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_writer(sink);
    wtr.write_record(dataset.names())?;
    for i in 0..dataset.n_rows() {
        let row = (0..dataset.n_cols()).map(|j| {
            if dataset.is_observed(i, j) {
                format!("{:.14e}", dataset.value(i, j))
            } else {
                "NA".to_string()
            }
        });
        wtr.write_record(row)?;
    }
    wtr.flush().map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// A square covariance matrix with a header of column names. Returns the
/// names, the matrix and the response position.
pub fn read_covariance(
    path: impl AsRef<Path>,
    response: &str,
) -> Result<(Vec<String>, DMatrix<f64>, usize), CliError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = reader(file);
    let (names, response_index) = header_and_response(&mut rdr, response)?;
    let d = names.len();
    let mut values = Vec::with_capacity(d * d);
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        for (j, cell) in record.iter().enumerate() {
            values.push(parse_cell(cell, line, j, &names[j])?);
        }
        rows += 1;
    }
    if rows != d {
        return Err(CliError::Usage(format!(
            "covariance file has {rows} rows for {d} columns"
        )));
    }
    Ok((names, DMatrix::from_row_slice(d, d, &values), response_index))
}
