//! CSV helpers. Floats are written with 17 significant digits so every value
//! reads back bit-for-bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{CovselError, Result};
use crate::linalg::Mat;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a square matrix with the design points as header row.
pub fn write_matrix_csv<W: Write>(writer: W, header: &[f64], m: &Mat) -> Result<()> {
    if header.len() != m.ncols() {
        return Err(CovselError::ShapeMismatch(format!(
            "{} header entries for {} columns",
            header.len(),
            m.ncols()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(header.iter().map(|&t| fmt_f64(t)))?;
    for row in m.row_iter() {
        w.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix_csv_path(path: impl AsRef<Path>, header: &[f64], m: &Mat) -> Result<()> {
    write_matrix_csv(std::fs::File::create(path)?, header, m)
}

/// Reads a matrix written by [`write_matrix_csv`]; the header is skipped.
pub fn read_matrix_csv<R: Read>(reader: R) -> Result<Mat> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let cols = rdr.headers()?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        for s in record?.iter() {
            values.push(
                s.parse::<f64>()
                    .map_err(|_| CovselError::ShapeMismatch(format!("bad matrix entry {s:?}")))?,
            );
        }
        rows += 1;
    }
    Ok(Mat::from_row_slice(rows, cols, &values))
}

pub fn read_matrix_csv_path(path: impl AsRef<Path>) -> Result<Mat> {
    read_matrix_csv(std::fs::File::open(path)?)
}
