//! Flat binary field snapshots.
//!
//! Layout: a 32-byte header (`KGF1`, dimension as `u32`, points per axis as
//! `u64`, side length as `f64`, number of stored fields as `u64`), then each
//! field as row-major little-endian `f64` values.

use std::io::{Read, Write};

use super::field::{Field, KgState};
use super::grid::TorusGrid;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"KGF1";
pub const HEADER_LEN: usize = 32;

fn write_header<W: Write>(w: &mut W, grid: &TorusGrid<impl Real>, count: u64) -> Result<()> {
    let mut h = [0u8; HEADER_LEN];
    h[..4].copy_from_slice(MAGIC);
    h[4..8].copy_from_slice(&(grid.dim() as u32).to_le_bytes());
    h[8..16].copy_from_slice(&(grid.n() as u64).to_le_bytes());
    h[16..24].copy_from_slice(&grid.side().as_f64().to_le_bytes());
    h[24..32].copy_from_slice(&count.to_le_bytes());
    w.write_all(&h)?;
    Ok(())
}

pub fn write_fields<T: Real, W: Write>(mut w: W, fields: &[&Field<T>]) -> Result<()> {
    let Some(first) = fields.first() else {
        return Err(Error::InvalidParameter("nothing to write".into()));
    };
    if fields.iter().any(|f| f.grid() != first.grid()) {
        return Err(Error::InvalidParameter("fields live on different grids".into()));
    }
    write_header(&mut w, first.grid(), fields.len() as u64)?;
    let mut buf = Vec::with_capacity(first.values().len() * 8);
    for f in fields {
        buf.clear();
        for &x in f.values() {
            buf.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn write_state<T: Real, W: Write>(w: W, s: &KgState<T>) -> Result<()> {
    write_fields(w, &[&s.u, &s.v])
}

pub fn read_fields<T: Real, R: Read>(mut r: R) -> Result<Vec<Field<T>>> {
    let mut h = [0u8; HEADER_LEN];
    r.read_exact(&mut h)?;
    if &h[..4] != MAGIC {
        return Err(Error::InvalidParameter("not a KGF1 snapshot".into()));
    }
    let word = |a: usize| u64::from_le_bytes(h[a..a + 8].try_into().expect("8 bytes"));
    let dim = u32::from_le_bytes(h[4..8].try_into().expect("4 bytes")) as usize;
    let n = word(8) as usize;
    let side = f64::from_bits(word(16));
    let count = word(24) as usize;
    let grid = TorusGrid::new(dim, n, T::lit(side))?;
    let mut out = Vec::with_capacity(count);
    let mut bytes = vec![0u8; grid.len() * 8];
    for _ in 0..count {
        r.read_exact(&mut bytes)?;
        let values =
            bytes.chunks_exact(8).map(|c| T::lit(f64::from_le_bytes(c.try_into().expect("8 bytes")))).collect();
        out.push(Field::from_values(&grid, values)?);
    }
    Ok(out)
}

pub fn read_state<T: Real, R: Read>(r: R) -> Result<KgState<T>> {
    let mut fs = read_fields(r)?;
    if fs.len() != 2 {
        return Err(Error::InvalidParameter(format!("expected 2 fields, found {}", fs.len())));
    }
    let v = fs.pop().expect("two fields");
    let u = fs.pop().expect("two fields");
    KgState::new(u, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let grid = TorusGrid::new(2, 8, 5.5f64).unwrap();
        let u = Field::from_fn(&grid, |x| x[0] - 2.0 * x[1]).unwrap();
        let v = Field::constant(&grid, 0.25);
        let mut buf = Vec::new();
        write_state(&mut buf, &KgState::new(u.clone(), v).unwrap()).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 2 * 64 * 8);
        assert_eq!(&buf[..4], b"KGF1");
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 5.5);
        let s: KgState<f64> = read_state(buf.as_slice()).unwrap();
        assert_eq!(s.u.values(), u.values());
        assert_eq!(s.grid().n(), 8);
        // row-major: the second value steps along the last axis
        assert_eq!(s.u.values()[1], u.values()[1]);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_fields::<f64, _>(&b"NOPE0000000000000000000000000000"[..]).is_err());
        assert!(read_fields::<f64, _>(&b"KGF1"[..]).is_err());
    }
}
