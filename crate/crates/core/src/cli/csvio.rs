//! Dataset CSV: comma separated, optional header, one sample per row, optional
//! integer label column.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::types::Dataset;

use super::report::fmt_f64;

/// A column picked by header name or zero-based index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for ColumnRef {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("empty column reference"));
        }
        Ok(s.parse::<usize>()
            .map(ColumnRef::Index)
            .unwrap_or_else(|_| ColumnRef::Name(s.to_string())))
    }
}

impl std::fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ColumnRef::Index(i) => write!(f, "{i}"),
            ColumnRef::Name(n) => f.write_str(n),
        }
    }
}

impl ColumnRef {
    /// Resolves against `names` (a header), or checks the index is below `width`.
    pub fn resolve(&self, names: Option<&[String]>, width: usize) -> Result<usize> {
        match self {
            ColumnRef::Index(i) if *i < width => Ok(*i),
            ColumnRef::Index(i) => Err(Error::invalid(format!(
                "column {i} out of range for {width} columns"
            ))),
            ColumnRef::Name(name) => names
                .and_then(|ns| ns.iter().position(|n| n == name))
                .ok_or_else(|| Error::invalid(format!("no column named {name:?}"))),
        }
    }
}

fn parse_err(path: &Path, line: u64, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        column,
        message: message.into(),
    }
}

fn parse_label(cell: &str) -> Option<i64> {
    let cell = cell.trim();
    cell.parse::<i64>().ok().or_else(|| {
        let x: f64 = cell.parse().ok()?;
        (x.fract() == 0.0 && x.abs() < 9.0e15).then_some(x as i64)
    })
}

/// Reads a dataset. Error locations are 1-based line and column numbers.
pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<&ColumnRef>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => parse_err(path, 0, 0, format!("{other:?}")),
        })?;

    let header: Option<Vec<String>> = if has_header {
        let h = reader
            .headers()
            .map_err(|e| parse_err(path, 1, 0, e.to_string()))?;
        Some(h.iter().map(str::to_string).collect())
    } else {
        None
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut label_idx = None;
    if let (Some(col), Some(w)) = (label_column, width) {
        label_idx = Some(
            col.resolve(header.as_deref(), w)
                .map_err(|e| parse_err(path, 1, 0, e.to_string()))?,
        );
    }

    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(parse_err(
                path,
                line,
                record.len().min(w) + 1,
                format!("expected {w} fields, found {}", record.len()),
            ));
        }
        if label_idx.is_none() {
            if let Some(col) = label_column {
                label_idx = Some(
                    col.resolve(None, w)
                        .map_err(|e| parse_err(path, line, 0, e.to_string()))?,
                );
            }
        }
        for (j, cell) in record.iter().enumerate() {
            if Some(j) == label_idx {
                let l = parse_label(cell).ok_or_else(|| {
                    parse_err(
                        path,
                        line,
                        j + 1,
                        format!("label {cell:?} is not an integer"),
                    )
                })?;
                labels.push(l);
            } else {
                let x: f64 = cell.parse().map_err(|_| {
                    parse_err(path, line, j + 1, format!("{cell:?} is not a number"))
                })?;
                data.push(x);
            }
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(parse_err(
            path,
            if has_header { 2 } else { 1 },
            0,
            "no data rows",
        ));
    }
    let width = width.unwrap_or(0);
    let d = width - usize::from(label_idx.is_some());
    if d == 0 {
        return Err(parse_err(path, 1, 0, "no feature columns"));
    }
    let points = Matrix::from_vec(rows, d, data)?;
    let dataset = Dataset::new(points, label_idx.map(|_| labels))?;
    match header {
        Some(h) => {
            let names = h
                .into_iter()
                .enumerate()
                .filter(|(j, _)| Some(*j) != label_idx)
                .map(|(_, n)| n)
                .collect();
            dataset.with_feature_names(names)
        }
        None => Ok(dataset),
    }
}

/// Writes a header row, features with 17 significant digits and a trailing
/// `label` column when the dataset has labels.
pub fn save_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_csv(data, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn write_csv(data: &Dataset, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = match data.feature_names() {
        Some(names) => names.to_vec(),
        None => (0..data.dim()).map(|j| format!("x{j}")).collect(),
    };
    if data.labels().is_some() {
        header.push("label".into());
    }
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..data.len() {
        let mut row: Vec<String> = data.point(i).iter().map(|&x| fmt_f64(x)).collect();
        if let Some(l) = data.labels() {
            row.push(l[i].to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
