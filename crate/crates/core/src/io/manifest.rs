//! Stack directories: one PFM per channel plus `manifest.json`
//!
//! ```text
//! { "format": "idecomp-stack/1", "height": H, "width": W,
//!   "channels": [ { "name": "u0", "file": "u0.pfm" }, ... ] }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pfm::{read_pfm, write_pfm};
use crate::error::{Error, Result};
use crate::grid::GridStack;

pub const STACK_FORMAT: &str = "idecomp-stack/1";
const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackManifest {
    pub format: String,
    pub height: usize,
    pub width: usize,
    /// Free-text precision note; channels are computed in f64 and stored as f32.
    #[serde(default)]
    pub precision: String,
    pub channels: Vec<ChannelEntry>,
}

pub const PRECISION_NOTE: &str = "computed in 64-bit floating point; stored as 32-bit PFM";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    pub name: String,
    pub file: String,
}

pub fn write_stack_dir(dir: impl AsRef<Path>, names: &[String], stack: &GridStack) -> Result<()> {
    let dir = dir.as_ref();
    if names.len() != stack.len() {
        return Err(Error::arg(format!(
            "{} channel names for {} channels",
            names.len(),
            stack.len()
        )));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut channels = Vec::with_capacity(stack.len());
    for (name, g) in names.iter().zip(stack) {
        let file = format!("{name}.pfm");
        write_pfm(dir.join(&file), g)?;
        channels.push(ChannelEntry {
            name: name.clone(),
            file,
        });
    }
    let (height, width) = stack.dims();
    let manifest = StackManifest {
        format: STACK_FORMAT.to_string(),
        height,
        width,
        precision: PRECISION_NOTE.to_string(),
        channels,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let path = dir.join(MANIFEST);
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_stack_dir(dir: impl AsRef<Path>) -> Result<GridStack> {
    let dir = dir.as_ref();
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    let manifest: StackManifest = serde_path_to_error::deserialize(de)
        .map_err(|e| Error::parse(e.path().to_string(), e.into_inner().to_string()))?;
    if manifest.format != STACK_FORMAT {
        return Err(Error::validation(
            "format",
            format!("expected {STACK_FORMAT:?}, got {:?}", manifest.format),
        ));
    }
    let mut grids = Vec::with_capacity(manifest.channels.len());
    for (idx, entry) in manifest.channels.iter().enumerate() {
        let stack = read_pfm(dir.join(&entry.file))?;
        if stack.len() != 1 {
            return Err(Error::validation(
                format!("channels[{idx}]"),
                "each channel file must be a grayscale PFM",
            ));
        }
        let g = stack.into_channels().remove(0);
        if g.dims() != (manifest.height, manifest.width) {
            return Err(Error::validation(
                format!("channels[{idx}]"),
                format!(
                    "file is {:?}, manifest says {:?}",
                    g.dims(),
                    (manifest.height, manifest.width)
                ),
            ));
        }
        grids.push(g);
    }
    GridStack::new(grids).map_err(|_| Error::validation("channels", "manifest lists no channels"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let stack = GridStack::new(vec![Grid::filled(2, 3, 0.5), Grid::filled(2, 3, -1.25)]).unwrap();
        let names = vec!["u0".to_string(), "v0".to_string()];
        write_stack_dir(dir.path(), &names, &stack).unwrap();
        assert_eq!(read_stack_dir(dir.path()).unwrap(), stack);
        assert!(dir.path().join("v0.pfm").exists());
    }

    #[test]
    fn dimension_mismatch_detected() {
        let dir = tempfile::tempdir().unwrap();
        let stack = GridStack::new(vec![Grid::filled(2, 3, 0.5)]).unwrap();
        write_stack_dir(dir.path(), &["a".to_string()], &stack).unwrap();
        let path = dir.path().join(MANIFEST);
        let text = fs::read_to_string(&path).unwrap().replace("\"height\": 2", "\"height\": 4");
        fs::write(&path, text).unwrap();
        let err = read_stack_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("channels[0]"));
    }
}
