//! `ROMFLD v1` text files: header `ROMFLD v1 <scalar|vector> <nx> <ny>`, then
//! one row-major line per cell.

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::textio::{fmt_real, parse_real, read_text, write_text};
use crate::scalar::Real;

use super::field::{Field, Value};

pub fn field_to_string<T: Real, V: Value<Scalar = T>>(nx: usize, ny: usize, field: &Field<V>) -> String {
    let mut s = format!("ROMFLD v1 {} {} {}\n", V::KIND, nx, ny);
    for v in &field.values {
        for k in 0..V::COMPONENTS {
            if k > 0 {
                s.push(' ');
            }
            s.push_str(&fmt_real(v.component(k)));
        }
        s.push('\n');
    }
    s
}

pub fn field_from_str<T: Real, V: Value<Scalar = T>>(
    text: &str,
    path: &Path,
) -> Result<(usize, usize, Field<V>)> {
    let bad = |detail: String| Error::format("ROMFLD file", path, detail);
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty file".into()))?
        .split_whitespace()
        .collect();
    if header.len() != 5 || header[0] != "ROMFLD" || header[1] != "v1" {
        return Err(bad(format!("unexpected header {:?}", header.join(" "))));
    }
    if header[2] != V::KIND {
        return Err(bad(format!("expected {} field, found {}", V::KIND, header[2])));
    }
    let nx: usize = header[3].parse().map_err(|_| bad("bad nx".into()))?;
    let ny: usize = header[4].parse().map_err(|_| bad("bad ny".into()))?;
    let mut values = Vec::with_capacity(nx * ny);
    let mut comps = Vec::with_capacity(V::COMPONENTS);
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        comps.clear();
        for tok in line.split_whitespace() {
            comps.push(parse_real::<T>(tok).ok_or_else(|| bad(format!("bad number {tok:?} on row {row}")))?);
        }
        if comps.len() != V::COMPONENTS {
            return Err(bad(format!("row {row} has {} entries", comps.len())));
        }
        values.push(V::from_components(&comps));
    }
    if values.len() != nx * ny {
        return Err(bad(format!("expected {} rows, found {}", nx * ny, values.len())));
    }
    Ok((nx, ny, Field::from_values(values)))
}

pub fn write_field<T: Real, V: Value<Scalar = T>>(
    path: &Path,
    nx: usize,
    ny: usize,
    field: &Field<V>,
) -> Result<()> {
    write_text(path, &field_to_string(nx, ny, field))
}

pub fn read_field<T: Real, V: Value<Scalar = T>>(path: &Path) -> Result<(usize, usize, Field<V>)> {
    field_from_str(&read_text(path)?, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh_fields::field::{ScalarField, VectorField};

    #[test]
    fn vector_round_trip_is_exact() {
        let f = VectorField::from_values(vec![[0.1, -1.0 / 3.0], [1e-300, 7.0], [f64::MIN_POSITIVE, 2.5e10]]);
        let s = field_to_string(3, 1, &f);
        assert!(s.starts_with("ROMFLD v1 vector 3 1\n"));
        let (nx, ny, g) = field_from_str::<f64, [f64; 2]>(&s, Path::new("mem")).unwrap();
        assert_eq!((nx, ny), (3, 1));
        assert_eq!(f, g);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let f = ScalarField::from_values(vec![1.0f64, 2.0]);
        let s = field_to_string(2, 1, &f);
        assert!(field_from_str::<f64, [f64; 2]>(&s, Path::new("mem")).is_err());
        assert!(field_from_str::<f64, f64>(&s.replace("2 1", "3 1"), Path::new("mem")).is_err());
    }

    #[test]
    fn f32_round_trip() {
        let f = ScalarField::from_values(vec![0.1f32, 3.0e-7]);
        let s = field_to_string(1, 2, &f);
        let (_, _, g) = field_from_str::<f32, f32>(&s, Path::new("mem")).unwrap();
        assert_eq!(f, g);
    }
}
