//! Binary field dumps.
//!
//! Layout (all little-endian):
//!
//! | bytes | content                                   |
//! |-------|-------------------------------------------|
//! | 8     | magic `b"SWBECFLD"`                       |
//! | 4     | dimension, `u32`                          |
//! | 4     | points per axis, `u32`                    |
//! | 8     | half width, `f64`                         |
//! | 16·N  | `(re, im)` pairs as `f64`, row-major      |

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex;

use super::{Dim, Grid, WaveField};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const FIELD_MAGIC: [u8; 8] = *b"SWBECFLD";

pub fn write_field<T: Real, W: Write>(field: &WaveField<T>, mut out: W) -> Result<()> {
    let g = field.grid();
    out.write_all(&FIELD_MAGIC)?;
    out.write_all(&(g.dim().as_usize() as u32).to_le_bytes())?;
    out.write_all(&(g.points_per_axis() as u32).to_le_bytes())?;
    out.write_all(&g.half_width().to_f64_lossy().to_le_bytes())?;
    let mut buf = Vec::with_capacity(16 * field.len());
    for a in field.amplitudes() {
        buf.extend_from_slice(&a.re.to_f64_lossy().to_le_bytes());
        buf.extend_from_slice(&a.im.to_f64_lossy().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_field<T: Real, R: Read>(mut input: R) -> Result<WaveField<T>> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if magic != FIELD_MAGIC {
        return Err(Error::Io("not a field dump (bad magic)".into()));
    }
    let mut u4 = [0u8; 4];
    let mut f8 = [0u8; 8];
    input.read_exact(&mut u4)?;
    let dim = Dim::from_usize(u32::from_le_bytes(u4) as usize)?;
    input.read_exact(&mut u4)?;
    let n = u32::from_le_bytes(u4) as usize;
    input.read_exact(&mut f8)?;
    let half_width = f64::from_le_bytes(f8);
    let grid = Arc::new(Grid::new(dim, n, T::lit(half_width))?);
    let mut amps = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        input.read_exact(&mut f8)?;
        let re = f64::from_le_bytes(f8);
        input.read_exact(&mut f8)?;
        let im = f64::from_le_bytes(f8);
        amps.push(Complex::new(T::lit(re), T::lit(im)));
    }
    WaveField::new(grid, amps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout_and_round_trip() {
        let grid = Arc::new(Grid::<f64>::new_2d(8, 2.5).unwrap());
        let f = WaveField::from_fn(grid, |x, y| Complex::new(x, -y));
        let mut bytes = Vec::new();
        write_field(&f, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 24 + 16 * 64);
        assert_eq!(&bytes[..8], b"SWBECFLD");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 8);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 2.5);
        // first amplitude is (x, -y) at (-2.5, -2.5)
        assert_eq!(f64::from_le_bytes(bytes[24..32].try_into().unwrap()), -2.5);
        assert_eq!(f64::from_le_bytes(bytes[32..40].try_into().unwrap()), 2.5);
        let back: WaveField<f64> = read_field(&bytes[..]).unwrap();
        assert_eq!(back.amplitudes(), f.amplitudes());
        assert_eq!(back.grid().as_ref(), f.grid().as_ref());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let bytes = [0u8; 64];
        assert!(read_field::<f64, _>(&bytes[..]).is_err());
    }
}
