//! Matrix files: comma-separated text and MatrixMarket dense `array` format.
//!
//! Values are written with the shortest decimal representation that parses
//! back to the same `f64` (never more than 17 significant digits), so a
//! write/read cycle is bit-exact.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{GsError, Result};
use crate::matrix::DenseMatrix;

const MM_HEADER: &str = "%%MatrixMarket matrix array real general";

pub fn read_csv<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| GsError::Parse(format!("record {}: {s:?}: {e}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(GsError::Parse("no data rows".into()));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| match e {
        GsError::Dimension(msg) => GsError::Parse(msg),
        other => other,
    })
}

pub fn write_csv<W: Write>(mut writer: W, m: &Array2<f64>) -> Result<()> {
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(writer, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn read_matrix_market<R: Read>(reader: R) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| GsError::Parse("empty MatrixMarket file".into()))??;
    let lower = header.to_ascii_lowercase();
    if !lower.starts_with("%%matrixmarket") || !lower.contains("array") || !lower.contains("real") {
        return Err(GsError::Parse(format!(
            "unsupported MatrixMarket header {header:?}"
        )));
    }
    let mut body = lines.filter(|l| match l {
        Ok(s) => !s.trim().is_empty() && !s.trim_start().starts_with('%'),
        Err(_) => true,
    });
    let dims = body
        .next()
        .ok_or_else(|| GsError::Parse("missing size line".into()))??;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|e| GsError::Parse(format!("size line: {e}")))
        })
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(GsError::Parse("size line must hold two integers".into()));
    };
    let mut values = Vec::with_capacity(rows * cols);
    for line in body {
        let line = line?;
        let v: f64 = line
            .trim()
            .parse()
            .map_err(|e| GsError::Parse(format!("{line:?}: {e}")))?;
        values.push(v);
    }
    if values.len() != rows * cols {
        return Err(GsError::Parse(format!(
            "expected {} values, found {}",
            rows * cols,
            values.len()
        )));
    }
    // column-major on disk
    let data = Array2::from_shape_fn((rows, cols), |(i, j)| values[j * rows + i]);
    DenseMatrix::new(data)
}

pub fn write_matrix_market<W: Write>(mut writer: W, m: &Array2<f64>) -> Result<()> {
    writeln!(writer, "{MM_HEADER}")?;
    writeln!(writer, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(writer, "{}", m[[i, j]])?;
        }
    }
    Ok(())
}

fn is_matrix_market(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("mtx") | Some("mm")
    )
}

/// Reads a matrix, choosing the format from the extension (`.mtx`/`.mm` are
/// MatrixMarket, anything else is CSV).
pub fn read_matrix(path: &Path) -> Result<DenseMatrix> {
    let file = fs::File::open(path)?;
    if is_matrix_market(path) {
        read_matrix_market(file)
    } else {
        read_csv(file)
    }
}

pub fn write_matrix(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    if is_matrix_market(path) {
        write_matrix_market(&mut file, m)?;
    } else {
        write_csv(&mut file, m)?;
    }
    file.flush()?;
    Ok(())
}
