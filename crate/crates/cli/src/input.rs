//! Reading paired `x,y` tables and single-column value lists.

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{CliError, Result};

pub const MIN_ROWS: usize = 3;

/// Two numeric columns read from a delimited file.
#[derive(Clone, Debug, PartialEq)]
pub struct InputTable {
    pub source: String,
    /// Column names, when the first row was not numeric.
    pub header: Option<(String, String)>,
    pub delimiter: u8,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl InputTable {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_table(path: &Path, delimiter: u8) -> Result<InputTable> {
    parse_table(open(path)?, delimiter, &path.display().to_string())
}

/// Quotes preceded by whitespace are left in the field by the csv reader.
fn parse_cell(cell: &str) -> Option<f64> {
    let cell = cell.trim();
    let cell = cell
        .strip_prefix('"')
        .and_then(|c| c.strip_suffix('"'))
        .unwrap_or(cell);
    cell.trim().parse::<f64>().ok()
}

/// Parses a two-column table. A first row whose cells are not both numeric
/// is taken as a header.
pub fn parse_table<R: Read>(reader: R, delimiter: u8, source_name: &str) -> Result<InputTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let parse_error = |line: u64, column: usize, message: String| CliError::Parse {
        source_name: source_name.to_string(),
        line,
        column,
        message,
    };

    let mut table = InputTable {
        source: source_name.to_string(),
        header: None,
        delimiter,
        x: Vec::new(),
        y: Vec::new(),
    };
    for (index, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_error(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(index as u64 + 1, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != 2 {
            return Err(parse_error(
                line,
                record.len().min(3),
                format!("expected 2 columns, found {}", record.len()),
            ));
        }
        let (a, b) = (parse_cell(&record[0]), parse_cell(&record[1]));
        if index == 0 && (a.is_none() || b.is_none()) {
            table.header = Some((record[0].to_string(), record[1].to_string()));
            continue;
        }
        for (column, (value, raw)) in [(a, &record[0]), (b, &record[1])].into_iter().enumerate() {
            match value {
                Some(v) if v.is_finite() => {}
                Some(_) => {
                    return Err(parse_error(
                        line,
                        column + 1,
                        format!("value {raw:?} is not finite"),
                    ))
                }
                None => {
                    return Err(parse_error(
                        line,
                        column + 1,
                        format!("cannot parse {raw:?} as a number"),
                    ))
                }
            }
        }
        table.x.push(a.unwrap());
        table.y.push(b.unwrap());
    }
    if table.len() < MIN_ROWS {
        return Err(CliError::TooFewRows {
            source_name: source_name.to_string(),
            required: MIN_ROWS,
            found: table.len(),
        });
    }
    Ok(table)
}

/// Writes the table back out; values use the shortest representation that
/// parses back to the same `f64`.
pub fn write_table<W: Write>(table: &InputTable, writer: W) -> io::Result<()> {
    let mut wtr = csv::WriterBuilder::new()
        .delimiter(table.delimiter)
        .from_writer(writer);
    if let Some((a, b)) = &table.header {
        wtr.write_record([a, b])?;
    }
    for (x, y) in table.x.iter().zip(&table.y) {
        wtr.write_record([x.to_string(), y.to_string()])?;
    }
    wtr.flush()
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    parse_values(&text, &path.display().to_string())
}

/// One value per line; blank lines are skipped.
pub fn parse_values(text: &str, source_name: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let cell = line.trim();
        if cell.is_empty() {
            continue;
        }
        match parse_cell(cell) {
            Some(v) if v.is_finite() => values.push(v),
            _ => {
                return Err(CliError::Parse {
                    source_name: source_name.to_string(),
                    line: i as u64 + 1,
                    column: 1,
                    message: format!("cannot parse {cell:?} as a finite number"),
                })
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::TooFewRows {
            source_name: source_name.to_string(),
            required: 1,
            found: 0,
        });
    }
    Ok(values)
}
