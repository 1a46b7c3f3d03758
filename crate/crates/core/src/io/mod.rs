//! Image files, multichannel stack directories, and CSV output.

mod manifest;
mod pfm;
mod pgm;

use std::fs;
use std::path::Path;

pub use manifest::{read_stack_dir, write_stack_dir, StackManifest, STACK_FORMAT};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridStack};

/// Reads an image as channels in `[0, 1]` (8/16-bit inputs) or raw floats (PFM).
///
/// Directories are read as stack containers, `.pfm` as float maps, `.pgm`
/// as graymaps, and `.png` through the `image` crate (gray gives one
/// channel, color gives R, G, B; alpha is dropped).
pub fn read_image(path: impl AsRef<Path>) -> Result<GridStack> {
    let path = path.as_ref();
    if path.is_dir() {
        return read_stack_dir(path);
    }
    match extension(path).as_deref() {
        Some("pfm") => read_pfm(path),
        Some("pgm") => Ok(GridStack::new(vec![read_pgm(path)?])?),
        Some("png") => read_png(path),
        _ => Err(Error::arg(format!(
            "unsupported image type: {} (expected .pfm, .pgm, .png or a stack directory)",
            path.display()
        ))),
    }
}

/// Writes a single grid; `.pfm` stores floats, `.pgm` stores clamped 8-bit levels.
pub fn write_grid(path: impl AsRef<Path>, g: &Grid) -> Result<()> {
    let path = path.as_ref();
    match extension(path).as_deref() {
        Some("pfm") => write_pfm(path, g),
        Some("pgm") => write_pgm(path, g),
        _ => Err(Error::arg(format!(
            "unsupported output type: {} (expected .pfm or .pgm)",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
}

fn read_png(path: &Path) -> Result<GridStack> {
    let img = image::open(path).map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let channels = if img.color().has_color() {
        let rgb = img.to_rgb16();
        (0..3)
            .map(|c| Grid::from_fn(h, w, |i, j| rgb.get_pixel(j as u32, i as u32)[c] as f64 / 65535.0))
            .collect()
    } else {
        let luma = img.to_luma16();
        vec![Grid::from_fn(h, w, |i, j| luma.get_pixel(j as u32, i as u32)[0] as f64 / 65535.0)]
    };
    GridStack::new(channels)
}

/// Formats a value with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

pub const TRACE_HEADER: &str = "iteration,objective,primal_p,primal_q,dual";

/// One row of a convergence trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub primal_p: f64,
    pub primal_q: f64,
    pub dual: f64,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.iteration,
            sig12(r.objective),
            sig12(r.primal_p),
            sig12(r.primal_q),
            sig12(r.dual)
        ));
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_format() {
        let csv = trace_csv(&[TraceRow {
            iteration: 1,
            objective: 2.5,
            primal_p: 1e-3,
            primal_q: 0.0,
            dual: 123456.7890123456,
        }]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(TRACE_HEADER));
        assert_eq!(
            lines.next(),
            Some("1,2.50000000000e0,1.00000000000e-3,0.00000000000e0,1.23456789012e5")
        );
    }

    #[test]
    fn png_gray_and_color() {
        let dir = tempfile::tempdir().unwrap();
        let gray = dir.path().join("g.png");
        image::GrayImage::from_fn(3, 2, |x, y| image::Luma([(x * 100 + y * 10) as u8]))
            .save(&gray)
            .unwrap();
        let s = read_image(&gray).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.dims(), (2, 3));
        assert_eq!(s[0][(1, 2)], 210.0 / 255.0);

        let color = dir.path().join("c.png");
        image::RgbImage::from_fn(2, 2, |x, _| image::Rgb([255, (x * 51) as u8, 0]))
            .save(&color)
            .unwrap();
        let s = read_image(&color).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s[0][(0, 0)], 1.0);
        assert!((s[1][(1, 1)] - 0.2).abs() < 1e-7);
        assert_eq!(s[2].norm1(), 0.0);
    }

    #[test]
    fn unknown_extension() {
        assert!(matches!(read_image("x.bmp"), Err(Error::Argument(_))));
        assert!(write_grid("x.tif", &Grid::zeros(1, 1)).is_err());
    }
}
