//! Flat binary and CSV serialization of fields, and JSON export of run metadata.
//!
//! Binary layout (little-endian): `d: u64, n_x: u64, n_t: u64, L: f64, T: f64`,
//! followed by the node values as `f64` in row-major order (time outermost;
//! vector fields append the components innermost).

use std::io::{Read, Write};

use super::{Grid, ScalarField, VectorField};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinaryHeader {
    pub d: u64,
    pub n_x: u64,
    pub n_t: u64,
    pub half_width: f64,
    pub horizon: f64,
}

impl BinaryHeader {
    pub const BYTES: usize = 40;

    fn of<T: Real>(g: &Grid<T>) -> Self {
        Self {
            d: g.d() as u64,
            n_x: g.n_x() as u64,
            n_t: g.n_t() as u64,
            half_width: g.half_width().as_f64(),
            horizon: g.horizon().as_f64(),
        }
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(&self.d.to_le_bytes())?;
        w.write_all(&self.n_x.to_le_bytes())?;
        w.write_all(&self.n_t.to_le_bytes())?;
        w.write_all(&self.half_width.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut buf)?;
            Ok(buf)
        };
        Ok(Self {
            d: u64::from_le_bytes(next(r)?),
            n_x: u64::from_le_bytes(next(r)?),
            n_t: u64::from_le_bytes(next(r)?),
            half_width: f64::from_le_bytes(next(r)?),
            horizon: f64::from_le_bytes(next(r)?),
        })
    }

    pub fn grid<T: Real>(&self) -> Result<Grid<T>> {
        Grid::new(
            self.d as usize,
            T::lit(self.half_width),
            self.n_x as usize,
            T::lit(self.horizon),
            self.n_t as usize,
        )
    }
}

fn write_values<T: Real, W: Write>(w: &mut W, values: &[T]) -> Result<()> {
    for v in values {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

fn read_values<T: Real, R: Read>(r: &mut R, n: usize) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        out.push(T::lit(f64::from_le_bytes(buf)));
    }
    Ok(out)
}

pub fn write_scalar_binary<T: Real, W: Write>(f: &ScalarField<T>, w: &mut W) -> Result<()> {
    BinaryHeader::of(f.grid()).write(w)?;
    write_values(w, f.values())
}

pub fn read_scalar_binary<T: Real, R: Read>(r: &mut R) -> Result<ScalarField<T>> {
    let g = BinaryHeader::read(r)?.grid::<T>()?;
    let v = read_values(r, g.len())?;
    ScalarField::from_values(g, v)
}

pub fn write_vector_binary<T: Real, W: Write>(f: &VectorField<T>, w: &mut W) -> Result<()> {
    BinaryHeader::of(f.grid()).write(w)?;
    write_values(w, f.values())
}

pub fn read_vector_binary<T: Real, R: Read>(r: &mut R) -> Result<VectorField<T>> {
    let g = BinaryHeader::read(r)?.grid::<T>()?;
    let v = read_values(r, g.len() * g.d())?;
    VectorField::from_values(g, v)
}

/// CSV with header `t,x1[,x2[,x3]],value`, one row per node.
///
/// Intended for small grids; larger grids are refused.
pub fn write_csv<T: Real, W: Write>(f: &ScalarField<T>, w: &mut W) -> Result<()> {
    const MAX_ROWS: usize = 2_000_000;
    let g = f.grid();
    if g.len() > MAX_ROWS {
        return Err(Error::Precondition(format!(
            "{} nodes is too many for CSV export (limit {MAX_ROWS})",
            g.len()
        )));
    }
    let mut header = String::from("t");
    for a in 0..g.d() {
        header.push_str(&format!(",x{}", a + 1));
    }
    writeln!(w, "{header},value")?;
    for i in 0..g.n_slices() {
        let t = g.time(i).as_f64();
        for s in 0..g.slice_len() {
            let x = g.position(s);
            let mut row = format!("{t}");
            for xa in &x[..g.d()] {
                row.push_str(&format!(",{}", xa.as_f64()));
            }
            writeln!(w, "{row},{}", f.at(i, s).as_f64())?;
        }
    }
    Ok(())
}

/// Pretty-printed JSON of any summary type (decomposition, bump, solve or
/// ensemble metadata), followed by a newline.
pub fn write_json<S: serde::Serialize, W: Write>(value: &S, w: &mut W) -> Result<()> {
    serde_json::to_writer_pretty(&mut *w, value)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_is_forty_bytes_little_endian() {
        let g = Grid::new(2, 1.5, 8, 2.0, 9).unwrap();
        let f = ScalarField::from_fn(g, |t, x| t + x[0]);
        let mut buf = Vec::new();
        write_scalar_binary(&f, &mut buf).unwrap();
        assert_eq!(buf.len(), BinaryHeader::BYTES + 8 * g.len());
        assert_eq!(&buf[0..8], &2u64.to_le_bytes());
        assert_eq!(&buf[8..16], &8u64.to_le_bytes());
        assert_eq!(&buf[16..24], &9u64.to_le_bytes());
        assert_eq!(&buf[24..32], &1.5f64.to_le_bytes());
        assert_eq!(&buf[32..40], &2.0f64.to_le_bytes());
        let back: ScalarField<f64> = read_scalar_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.values(), f.values());
    }

    #[test]
    fn vector_roundtrip() {
        let g = Grid::new(3, 1.0, 8, 1.0, 8).unwrap();
        let b = VectorField::from_fn(g, |t, x, o| {
            o[0] = t;
            o[1] = x[1];
            o[2] = -x[2];
        });
        let mut buf = Vec::new();
        write_vector_binary(&b, &mut buf).unwrap();
        let back: VectorField<f64> = read_vector_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = Grid::new(1, 1.0, 8, 1.0, 8).unwrap();
        let f = ScalarField::from_fn(g, |_, x| x[0]);
        let mut buf = Vec::new();
        write_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,x1,value"));
        assert_eq!(text.lines().count(), 1 + g.len());
        assert_eq!(lines.next(), Some("0,-1,-1"));
    }

    #[test]
    fn json_export_is_one_document() {
        let header = BinaryHeader {
            d: 2,
            n_x: 4,
            n_t: 3,
            half_width: 1.5,
            horizon: 0.5,
        };
        let value = serde_json::json!({"grid": [header.d, header.n_x], "width": header.half_width});
        let mut buf = Vec::new();
        write_json(&value, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.ends_with("}\n"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back, value);
    }
}
