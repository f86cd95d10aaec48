//! Plain-text tensor files.
//!
//! ```text
//! 3                 <- order D
//! 2 3 4             <- extents
//! 1.0000000000000000e0
//! ...               <- one value per line, storage order
//! ```
//!
//! Matrices are the `D = 2` case. Values are written with 17 significant
//! digits so `f64` data round-trips exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::scalar::Scalar;
use crate::tensor::DenseTensor;

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn read_tensor<T: Scalar, R: Read>(reader: R) -> Result<DenseTensor<T>> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        loop {
            match lines.next() {
                Some((i, l)) => {
                    let l = l?;
                    if !l.trim().is_empty() {
                        return Ok((i + 1, l));
                    }
                }
                None => {
                    return Err(parse_err(
                        0,
                        format!("unexpected end of file, expected {what}"),
                    ))
                }
            }
        }
    };

    let (ln, header) = next("tensor order")?;
    let order: usize = header
        .trim()
        .parse()
        .map_err(|e| parse_err(ln, format!("bad order {header:?}: {e}")))?;
    let (ln, ext_line) = next("extents")?;
    let shape = ext_line
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| parse_err(ln, format!("bad extent {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if shape.len() != order || order == 0 || shape.contains(&0) {
        return Err(parse_err(
            ln,
            format!("expected {order} positive extents, got {shape:?}"),
        ));
    }
    let total: usize = shape.iter().product();
    let mut data = Vec::with_capacity(total);
    for k in 0..total {
        let (ln, l) = next(&format!("value {} of {total}", k + 1))?;
        let v: f64 = l
            .trim()
            .parse()
            .map_err(|e| parse_err(ln, format!("bad value {:?}: {e}", l.trim())))?;
        if !v.is_finite() {
            return Err(parse_err(ln, "non-finite value"));
        }
        data.push(T::from_f64_lossy(v));
    }
    if let Ok((ln, _)) = next("") {
        return Err(parse_err(ln, format!("trailing data after {total} values")));
    }
    DenseTensor::new(shape, data)
}

pub fn write_tensor<T: Scalar, W: Write>(t: &DenseTensor<T>, writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    writeln!(w, "{}", t.order())?;
    let ext: Vec<String> = t.shape().iter().map(usize::to_string).collect();
    writeln!(w, "{}", ext.join(" "))?;
    for v in t.data() {
        writeln!(w, "{:.16e}", v.to_f64_lossy())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<T: Scalar, R: Read>(reader: R) -> Result<DenseMatrix<T>> {
    let t = read_tensor(reader)?;
    if t.order() != 2 {
        return Err(parse_err(
            1,
            format!("expected a matrix (order 2), got order {}", t.order()),
        ));
    }
    t.into_matrix()
}

pub fn write_matrix<T: Scalar, W: Write>(m: &DenseMatrix<T>, writer: W) -> Result<()> {
    write_tensor(&DenseTensor::from_matrix(m.clone()), writer)
}

pub fn load_tensor<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseTensor<T>> {
    read_tensor(File::open(path)?)
}

pub fn save_tensor<T: Scalar>(t: &DenseTensor<T>, path: impl AsRef<Path>) -> Result<()> {
    write_tensor(t, File::create(path)?)
}

pub fn load_matrix<T: Scalar>(path: impl AsRef<Path>) -> Result<DenseMatrix<T>> {
    read_matrix(File::open(path)?)
}

pub fn save_matrix<T: Scalar>(m: &DenseMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(m, File::create(path)?)
}
