//! `idnet-bundle/1` documents.
//!
//! A bundle is a JSON object:
//!
//! ```text
//! {
//!   "version": "idnet-bundle/1",
//!   "M": 2, "L": 1, "R": 1,
//!   "r_p": 7.0000000000000007e-2, "r_q": 7.0000000000000007e-2,
//!   "e2_mode": "corrected" | "paper",
//!   "layer_alphas": [[...M numbers...] x L],
//!   "layer_betas": [...L numbers...],
//!   "layer_kernels": [L x M x (2R+1) x (2R+1)]
//! }
//! ```
//!
//! Kernel taps are stored row-major, row offset `-R..=R` first, and are
//! applied as a correlation stencil. Floats are written with 17 significant
//! digits so every value round-trips exactly.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

use super::ParameterBundle;
use crate::admm::E2Mode;
use crate::error::{Error, Result};
use crate::ops::{Kernel, KernelBank};

pub const BUNDLE_VERSION: &str = "idnet-bundle/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDoc {
    version: String,
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "L")]
    l: usize,
    #[serde(rename = "R")]
    r: usize,
    r_p: f64,
    r_q: f64,
    e2_mode: E2Mode,
    layer_alphas: Vec<Vec<f64>>,
    layer_betas: Vec<f64>,
    layer_kernels: Vec<Vec<Vec<Vec<f64>>>>,
}

impl BundleDoc {
    fn from_bundle(b: &ParameterBundle) -> Self {
        let layer_kernels = b
            .layer_kernels
            .iter()
            .map(|bank| {
                bank.iter()
                    .map(|k| k.taps().chunks(k.side()).map(<[f64]>::to_vec).collect())
                    .collect()
            })
            .collect();
        BundleDoc {
            version: BUNDLE_VERSION.to_string(),
            m: b.width(),
            l: b.depth(),
            r: b.radius(),
            r_p: b.r_p,
            r_q: b.r_q,
            e2_mode: b.e2_mode,
            layer_alphas: b.layer_alphas.clone(),
            layer_betas: b.layer_betas.clone(),
            layer_kernels,
        }
    }

    fn into_bundle(self) -> Result<ParameterBundle> {
        if self.version != BUNDLE_VERSION {
            return Err(Error::validation(
                "version",
                format!("expected {BUNDLE_VERSION:?}, got {:?}", self.version),
            ));
        }
        let side = 2 * self.r + 1;
        if self.layer_kernels.len() != self.l {
            return Err(Error::validation(
                "layer_kernels",
                format!("expected {} layers, got {}", self.l, self.layer_kernels.len()),
            ));
        }
        let mut banks = Vec::with_capacity(self.l);
        for (l, layer) in self.layer_kernels.into_iter().enumerate() {
            if layer.len() != self.m {
                return Err(Error::validation(
                    format!("layer_kernels[{l}]"),
                    format!("expected {} kernels, got {}", self.m, layer.len()),
                ));
            }
            let mut kernels = Vec::with_capacity(self.m);
            for (m, rows) in layer.into_iter().enumerate() {
                let field = format!("layer_kernels[{l}][{m}]");
                if rows.len() != side || rows.iter().any(|r| r.len() != side) {
                    return Err(Error::validation(field, format!("expected {side}x{side} taps")));
                }
                let taps = rows.into_iter().flatten().collect();
                kernels.push(Kernel::new(self.r, taps).map_err(|e| Error::validation(field, e.to_string()))?);
            }
            banks.push(
                KernelBank::new(kernels)
                    .map_err(|e| Error::validation(format!("layer_kernels[{l}]"), e.to_string()))?,
            );
        }
        ParameterBundle::new(
            self.m,
            self.l,
            self.r,
            self.r_p,
            self.r_q,
            self.e2_mode,
            banks,
            self.layer_alphas,
            self.layer_betas,
        )
    }
}

/// Serializes `bundle` as an `idnet-bundle/1` document.
pub fn write_bundle<W: Write>(bundle: &ParameterBundle, sink: W) -> Result<()> {
    let doc = BundleDoc::from_bundle(bundle);
    let mut ser = serde_json::Serializer::with_formatter(sink, DocFormatter::default());
    doc.serialize(&mut ser)
        .map_err(|e| Error::io("<bundle>", io::Error::other(e)))?;
    ser.into_inner()
        .write_all(b"\n")
        .map_err(|e| Error::io("<bundle>", e))
}

pub fn read_bundle(text: &str) -> Result<ParameterBundle> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: BundleDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::parse(path, e.into_inner().to_string())
    })?;
    doc.into_bundle()
}

pub fn save_bundle(bundle: &ParameterBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_bundle(bundle, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ParameterBundle> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_bundle(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Frame {
    Object,
    Array { nested: bool },
}

/// Objects one key per line; arrays of numbers inline; arrays of arrays one
/// child per line.
#[derive(Default)]
struct DocFormatter {
    stack: Vec<Frame>,
    after_comma: bool,
}

impl DocFormatter {
    fn newline<W: ?Sized + Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(b"\n")?;
        for _ in 0..self.stack.len() {
            w.write_all(b"  ")?;
        }
        Ok(())
    }

    fn separator<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        if std::mem::take(&mut self.after_comma) {
            w.write_all(b" ")?;
        }
        Ok(())
    }
}

impl Formatter for DocFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        self.separator(w)?;
        write!(w, "{value:.16e}")
    }

    fn write_u64<W: ?Sized + Write>(&mut self, w: &mut W, value: u64) -> io::Result<()> {
        self.separator(w)?;
        write!(w, "{value}")
    }

    fn begin_string<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.separator(w)?;
        w.write_all(b"\"")
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.separator(w)?;
        self.stack.push(Frame::Object);
        w.write_all(b"{")
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
        }
        self.newline(w)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        w.write_all(b": ")
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.stack.pop();
        self.newline(w)?;
        w.write_all(b"}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        if let Some(Frame::Array { nested }) = self.stack.last_mut() {
            *nested = true;
            self.after_comma = false;
            self.newline(w)?;
        } else {
            self.separator(w)?;
        }
        self.stack.push(Frame::Array { nested: false });
        w.write_all(b"[")
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        if !first {
            w.write_all(b",")?;
            self.after_comma = true;
        }
        Ok(())
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.after_comma = false;
        if let Some(Frame::Array { nested: true }) = self.stack.pop() {
            self.newline(w)?;
        }
        w.write_all(b"]")
    }
}
