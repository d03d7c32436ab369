//! Plain-text numeric formats: `ROMMAT v1 <rows> <cols>` and
//! `ROMTEN v1 <d1> <d2> <d3>`, row-major, 17 significant digits.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::dense::{Matrix, Tensor3};

/// Scientific notation with 17 significant digits; round-trips any `f64`.
pub fn fmt_real<T: Real>(x: T) -> String {
    format!("{:.16e}", x.as_f64())
}

pub fn parse_real<T: Real>(tok: &str) -> Option<T> {
    let v: f64 = tok.parse().ok()?;
    T::from_f64(v)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn push_row<T: Real>(s: &mut String, row: &[T]) {
    for (k, &x) in row.iter().enumerate() {
        if k > 0 {
            s.push(' ');
        }
        s.push_str(&fmt_real(x));
    }
    s.push('\n');
}

pub fn matrix_to_string<T: Real>(m: &Matrix<T>) -> String {
    let mut s = format!("ROMMAT v1 {} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        push_row(&mut s, m.row(i));
    }
    s
}

pub fn tensor_to_string<T: Real>(t: &Tensor3<T>) -> String {
    let [d1, d2, d3] = t.dims();
    let mut s = format!("ROMTEN v1 {d1} {d2} {d3}\n");
    for i in 0..d1 {
        for j in 0..d2 {
            push_row(&mut s, t.fiber(i, j));
        }
    }
    s
}

fn parse_body<T: Real>(
    text: &str,
    magic: &str,
    ndims: usize,
    what: &'static str,
    path: &Path,
) -> Result<(Vec<usize>, Vec<T>)> {
    let bad = |d: String| Error::format(what, path, d);
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 2 + ndims || header[0] != magic || header[1] != "v1" {
        return Err(bad(format!("unexpected header {:?}", header.join(" "))));
    }
    let dims = header[2..]
        .iter()
        .map(|t| t.parse::<usize>().map_err(|_| bad(format!("bad dimension {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let expected: usize = dims.iter().product();
    let mut data = Vec::with_capacity(expected);
    for tok in lines.flat_map(str::split_whitespace) {
        data.push(parse_real(tok).ok_or_else(|| bad(format!("bad number {tok:?}")))?);
    }
    if data.len() != expected {
        return Err(bad(format!("expected {expected} entries, found {}", data.len())));
    }
    Ok((dims, data))
}

pub fn matrix_from_str<T: Real>(text: &str, path: &Path) -> Result<Matrix<T>> {
    let (d, data) = parse_body(text, "ROMMAT", 2, "ROMMAT file", path)?;
    Ok(Matrix::from_vec(d[0], d[1], data))
}

pub fn tensor_from_str<T: Real>(text: &str, path: &Path) -> Result<Tensor3<T>> {
    let (d, data) = parse_body(text, "ROMTEN", 3, "ROMTEN file", path)?;
    Ok(Tensor3::from_vec([d[0], d[1], d[2]], data))
}

pub fn read_matrix<T: Real>(path: &Path) -> Result<Matrix<T>> {
    matrix_from_str(&read_text(path)?, path)
}

pub fn read_tensor<T: Real>(path: &Path) -> Result<Tensor3<T>> {
    tensor_from_str(&read_text(path)?, path)
}
