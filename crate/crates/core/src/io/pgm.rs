//! Portable GrayMap, binary (`P5`) and ASCII (`P2`). Samples are scaled by
//! `1 / maxval` on read; export writes 8-bit `P5` after clamping to `[0, 1]`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;

pub fn decode_pgm(bytes: &[u8], origin: &str) -> Result<Grid> {
    let err = |msg: &str| Error::parse(origin, msg.to_string());
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
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
    let magic = token()?;
    if magic != "P5" && magic != "P2" {
        return Err(err(&format!("bad magic {magic:?}")));
    }
    let w: usize = token()?.parse().map_err(|_| err("bad width"))?;
    let h: usize = token()?.parse().map_err(|_| err("bad height"))?;
    let maxval: u32 = token()?.parse().map_err(|_| err("bad maxval"))?;
    if w == 0 || h == 0 || maxval == 0 || maxval > 65535 {
        return Err(err("invalid dimensions or maxval"));
    }
    let scale = maxval as f64;
    let samples: Vec<f64> = if magic == "P5" {
        pos += 1;
        let width = if maxval < 256 { 1 } else { 2 };
        let data = bytes
            .get(pos..pos + w * h * width)
            .ok_or_else(|| err("truncated raster"))?;
        data.chunks_exact(width)
            .map(|c| {
                let v = if width == 1 { c[0] as u32 } else { u16::from_be_bytes([c[0], c[1]]) as u32 };
                v.min(maxval) as f64 / scale
            })
            .collect()
    } else {
        let mut out = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            let v: u32 = token()?.parse().map_err(|_| err("bad sample"))?;
            out.push(v.min(maxval) as f64 / scale);
        }
        out
    };
    Grid::from_vec(h, w, samples)
}

pub fn encode_pgm(g: &Grid) -> Vec<u8> {
    let (h, w) = g.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(
        g.as_slice()
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    out
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Grid> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pgm(&bytes, &path.display().to_string())
}

pub fn write_pgm(path: impl AsRef<Path>, g: &Grid) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_pgm(g)).map_err(|e| Error::io(path, e))
}
