//! Directories of color/depth frame pairs as an ordered frame source.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::imaging::{netpbm, RgbdFrame};
use crate::rig::{CaptureDataset, MANIFEST_FILE};

/// An ordered list of (name, color path, depth path).
#[derive(Clone, Debug)]
pub struct FrameSource {
    entries: Vec<(String, PathBuf, PathBuf, Option<u64>)>,
}

impl FrameSource {
    /// Reads a capture directory (with a manifest) or a flat directory of
    /// `<name>.ppm` + `<name>.pgm` files, the latter in name order.
    pub fn open(dir: &Path) -> Result<Self> {
        if dir.join(MANIFEST_FILE).exists() {
            let ds = CaptureDataset::open(dir)?;
            let entries = ds
                .records
                .iter()
                .map(|r| {
                    (
                        format!("{:06}", r.entry.index),
                        ds.root.join(&r.frame),
                        ds.root.join(&r.depth),
                        Some(r.entry.index),
                    )
                })
                .collect();
            return Ok(Self { entries });
        }
        let mut entries = Vec::new();
        for e in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
            let p = e.map_err(|e| Error::io(dir, e))?.path();
            if p.extension().is_some_and(|x| x == "ppm") {
                let depth = p.with_extension("pgm");
                if !depth.exists() {
                    return Err(Error::Format(format!("{} has no depth companion", p.display())));
                }
                let name = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_owned();
                entries.push((name, p, depth, None));
            }
        }
        entries.sort();
        Ok(Self { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Every `stride`-th frame from `start`, at most `limit` of them.
    pub fn select(mut self, start: usize, stride: usize, limit: Option<usize>) -> Self {
        let stride = stride.max(1);
        self.entries = self
            .entries
            .into_iter()
            .skip(start)
            .step_by(stride)
            .take(limit.unwrap_or(usize::MAX))
            .collect();
        self
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.0.as_str())
    }

    /// Frames are read lazily, one at a time.
    pub fn frames(&self) -> impl Iterator<Item = Result<(String, RgbdFrame)>> + Send + '_ {
        self.entries.iter().map(|(name, color, depth, id)| {
            let frame = RgbdFrame::new(netpbm::read_ppm(color)?, netpbm::read_depth(depth)?, *id)?;
            Ok((name.clone(), frame))
        })
    }
}
