//! Portable FloatMap.
//!
//! Layout written here: ASCII `Pf\n<width> <height>\n-1.0\n`, then
//! `height` scanlines of `width` little-endian IEEE-754 `f32` values,
//! bottom scanline first. Reading also accepts big-endian files (positive
//! scale) and three-channel `PF` files, which become three grids.
//! Values are held as `f64` in memory and rounded to `f32` on export.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, GridStack};

pub fn encode_pfm(g: &Grid) -> Vec<u8> {
    let (h, w) = g.dims();
    let mut out = format!("Pf\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(4 * h * w);
    for i in (0..h).rev() {
        for j in 0..w {
            out.extend_from_slice(&(g[(i, j)] as f32).to_le_bytes());
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8], origin: &str) -> Result<GridStack> {
    let err = |msg: &str| Error::parse(origin, msg.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(err("truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let channels = match token()?.as_str() {
        "Pf" => 1,
        "PF" => 3,
        other => return Err(err(&format!("bad magic {other:?}"))),
    };
    let w: usize = token()?.parse().map_err(|_| err("bad width"))?;
    let h: usize = token()?.parse().map_err(|_| err("bad height"))?;
    let scale: f64 = token()?.parse().map_err(|_| err("bad scale"))?;
    if w == 0 || h == 0 {
        return Err(err("zero dimension"));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(err("scale must be nonzero"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let need = 4 * w * h * channels;
    let data = bytes
        .get(pos..pos + need)
        .ok_or_else(|| err(&format!("raster needs {need} bytes")))?;
    let little = scale < 0.0;
    let mut grids = vec![Grid::zeros(h, w); channels];
    for (n, chunk) in data.chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        if !v.is_finite() {
            return Err(err("non-finite sample"));
        }
        let c = n % channels;
        let px = n / channels;
        let (row_from_bottom, j) = (px / w, px % w);
        grids[c][(h - 1 - row_from_bottom, j)] = v as f64;
    }
    GridStack::new(grids)
}

pub fn write_pfm(path: impl AsRef<Path>, g: &Grid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pfm(g)).map_err(|e| Error::io(path, e))
}

pub fn read_pfm(path: impl AsRef<Path>) -> Result<GridStack> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_and_row_order() {
        let g = Grid::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let bytes = encode_pfm(&g);
        let header = b"Pf\n2 3\n-1.0\n";
        assert_eq!(&bytes[..header.len()], header);
        let first = f32::from_le_bytes(bytes[header.len()..header.len() + 4].try_into().unwrap());
        assert_eq!(first, 5.0);
        assert_eq!(bytes.len(), header.len() + 24);
    }

    #[test]
    fn big_endian_and_color() {
        let mut bytes = b"PF\n1 2\n1.0\n".to_vec();
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_be_bytes());
        }
        let s = decode_pfm(&bytes, "t").unwrap();
        assert_eq!(s.len(), 3);
        // bottom row first: pixel (1, 0) holds (1, 2, 3)
        assert_eq!(s[0][(1, 0)], 1.0);
        assert_eq!(s[2][(0, 0)], 6.0);
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode_pfm(b"P5\n1 1\n255\n", "t").is_err());
        assert!(decode_pfm(b"Pf\n2 2\n-1.0\n\0\0\0\0", "t").is_err());
        let mut nan = b"Pf\n1 1\n-1.0\n".to_vec();
        nan.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(decode_pfm(&nan, "t").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_exact_at_f32(h in 1usize..6, w in 1usize..6, seed in any::<u64>()) {
            let mut rng = crate::synth::SplitMix64::new(seed);
            let g = Grid::from_fn(h, w, |_, _| rng.uniform(-1e6, 1e6));
            let back = decode_pfm(&encode_pfm(&g), "t").unwrap();
            prop_assert_eq!(back.len(), 1);
            let stored = g.map(|v| v as f32 as f64);
            prop_assert_eq!(&back[0], &stored);
            // a second pass is the identity
            prop_assert_eq!(encode_pfm(&back[0]), encode_pfm(&g));
        }
    }
}
