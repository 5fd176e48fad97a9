//! Exact nearest-neighbor retrieval over a pair set.
//!
//! Each record is summarized by a coarse label grid stored as one bit-plane
//! per label; similarity is the mean per-label IoU computed with popcounts.

use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use super::{Provenance, TranslateRequest, TranslateResponse, Translator};
use crate::dataset::pairing::PairsDataset;
use crate::error::{Error, Result};
use crate::extraction::{SegmentationMap, PATCH_COUNT};
use crate::imaging::{mask_apply, netpbm, Rgb8Image};

pub const DEFAULT_GRID: usize = 32;
const PLANES: usize = PATCH_COUNT + 1;
const MAGIC: &[u8; 4] = b"GFNN";
const VERSION: u32 = 1;

fn check_grid_size(g: usize) -> Result<()> {
    if g == 0 || !g.is_multiple_of(8) || g > 1024 {
        return Err(Error::InvalidParams(format!(
            "grid size {g} must be a positive multiple of 8 up to 1024"
        )));
    }
    Ok(())
}

/// Coarse label map as nine bit-planes; exactly one plane is set per cell.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LabelGrid {
    size: usize,
    /// `PLANES * words` words, plane-major, bit `i % 64` of word `i / 64`.
    bits: Vec<u64>,
}

impl LabelGrid {
    fn words(size: usize) -> usize {
        size * size / 64
    }

    /// Builds a grid from per-cell labels in raster order.
    pub fn from_cells(size: usize, cells: &[u8]) -> Result<Self> {
        check_grid_size(size)?;
        if cells.len() != size * size {
            return Err(Error::SizeMismatch(cells.len(), size * size));
        }
        let words = Self::words(size);
        let mut bits = vec![0u64; PLANES * words];
        for (i, &l) in cells.iter().enumerate() {
            if l as usize >= PLANES {
                return Err(Error::Format(format!("label {l} exceeds {PATCH_COUNT}")));
            }
            bits[l as usize * words + i / 64] |= 1 << (i % 64);
        }
        Ok(Self { size, bits })
    }

    /// Majority label per cell; the lowest label wins ties. Cell `c` spans
    /// source pixels `[c * n / size, (c + 1) * n / size)` along each axis.
    pub fn from_segmap(seg: &SegmentationMap, size: usize) -> Result<Self> {
        check_grid_size(size)?;
        let (w, h) = seg.dims();
        if w < size || h < size {
            return Err(Error::SizeMismatch(w.min(h), size));
        }
        let col_cell: Vec<usize> = (0..w).map(|x| x * size / w).collect();
        let mut counts = vec![[0u32; PLANES]; size * size];
        for (y, row) in seg.labels().chunks_exact(w).enumerate() {
            let base = (y * size / h) * size;
            for (x, &l) in row.iter().enumerate() {
                counts[base + col_cell[x]][l as usize] += 1;
            }
        }
        let cells: Vec<u8> = counts
            .iter()
            .map(|c| (0..PLANES).fold(0, |b, l| if c[l] > c[b] { l } else { b }) as u8)
            .collect();
        Self::from_cells(size, &cells)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn plane(&self, label: usize) -> &[u64] {
        let words = Self::words(self.size);
        &self.bits[label * words..(label + 1) * words]
    }

    /// Per-cell labels in raster order.
    pub fn cells(&self) -> Vec<u8> {
        (0..self.size * self.size)
            .map(|i| {
                (0..PLANES)
                    .find(|&l| self.plane(l)[i / 64] >> (i % 64) & 1 == 1)
                    .expect("planes partition the grid") as u8
            })
            .collect()
    }

    fn to_bytes(&self) -> Vec<u8> {
        self.bits.iter().flat_map(|w| w.to_le_bytes()).collect()
    }

    fn from_bytes(size: usize, bytes: &[u8]) -> Result<Self> {
        let bits: Vec<u64> = bytes
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let g = Self { size, bits };
        let words = Self::words(size);
        for wi in 0..words {
            let mut union = 0u64;
            for l in 0..PLANES {
                let w = g.bits[l * words + wi];
                if union & w != 0 {
                    return Err(Error::Format("index planes overlap".into()));
                }
                union |= w;
            }
            if union != u64::MAX {
                return Err(Error::Format("index planes do not cover the grid".into()));
            }
        }
        Ok(g)
    }
}

/// Mean over labels 1..=8 of the per-label IoU. A label absent from both
/// grids scores 1, from exactly one grid 0.
pub fn similarity(a: &LabelGrid, b: &LabelGrid) -> Result<f64> {
    if a.size != b.size {
        return Err(Error::SizeMismatch(a.size, b.size));
    }
    Ok(similarity_words(&a.bits, &b.bits, LabelGrid::words(a.size)))
}

#[inline]
fn similarity_words(a: &[u64], b: &[u64], words: usize) -> f64 {
    let mut total = 0.0;
    for l in 1..PLANES {
        let pa = &a[l * words..(l + 1) * words];
        let pb = &b[l * words..(l + 1) * words];
        let (mut inter, mut union) = (0u32, 0u32);
        for (x, y) in pa.iter().zip(pb) {
            inter += (x & y).count_ones();
            union += (x | y).count_ones();
        }
        total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    total / PATCH_COUNT as f64
}

/// Immutable set of label grids keyed by record id, sorted by id.
#[derive(Clone, Debug, PartialEq)]
pub struct NNIndex {
    grid_size: usize,
    ids: Vec<u64>,
    bits: Vec<u64>,
}

impl NNIndex {
    pub fn from_grids(grid_size: usize, mut entries: Vec<(u64, LabelGrid)>) -> Result<Self> {
        check_grid_size(grid_size)?;
        entries.sort_by_key(|(id, _)| *id);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidParams("duplicate record id in index".into()));
        }
        let mut ids = Vec::with_capacity(entries.len());
        let mut bits = Vec::with_capacity(entries.len() * PLANES * LabelGrid::words(grid_size));
        for (id, g) in entries {
            if g.size != grid_size {
                return Err(Error::SizeMismatch(g.size, grid_size));
            }
            ids.push(id);
            bits.extend_from_slice(&g.bits);
        }
        Ok(Self { grid_size, ids, bits })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    fn stride(&self) -> usize {
        PLANES * LabelGrid::words(self.grid_size)
    }

    pub fn grid(&self, pos: usize) -> LabelGrid {
        let s = self.stride();
        LabelGrid {
            size: self.grid_size,
            bits: self.bits[pos * s..(pos + 1) * s].to_vec(),
        }
    }

    /// Best match for `q`: highest similarity, lowest id on ties.
    pub fn search(&self, q: &LabelGrid) -> Result<Provenance> {
        if self.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if q.size != self.grid_size {
            return Err(Error::SizeMismatch(q.size, self.grid_size));
        }
        let words = LabelGrid::words(self.grid_size);
        let mut best = Provenance {
            record_id: self.ids[0],
            similarity: f64::NEG_INFINITY,
        };
        for (id, entry) in self.ids.iter().zip(self.bits.chunks_exact(self.stride())) {
            let s = similarity_words(entry, &q.bits, words);
            if s > best.similarity {
                best = Provenance {
                    record_id: *id,
                    similarity: s,
                };
            }
        }
        Ok(best)
    }

    /// Index over a pair set; record ids are manifest line numbers.
    pub fn build(pairs: &PairsDataset, grid_size: usize) -> Result<Self> {
        check_grid_size(grid_size)?;
        let entries: Vec<Result<(u64, LabelGrid)>> = pairs
            .records
            .par_iter()
            .enumerate()
            .map(|(i, rec)| {
                let seg = SegmentationMap::read_pgm(pairs.root.join(&rec.seg))?;
                Ok((i as u64, LabelGrid::from_segmap(&seg, grid_size)?))
            })
            .collect();
        Self::from_grids(grid_size, entries.into_iter().collect::<Result<_>>()?)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let s = self.stride();
        let mut out = Vec::with_capacity(20 + self.len() * (8 + s * 8));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.grid_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.len() as u64).to_le_bytes());
        for (pos, id) in self.ids.iter().enumerate() {
            out.extend_from_slice(&id.to_le_bytes());
            out.extend_from_slice(&self.grid(pos).to_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Format(format!("index file: {m}"));
        if bytes.len() < 20 || &bytes[..4] != MAGIC {
            return Err(bad("missing GFNN header"));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
        if u32_at(4) != VERSION {
            return Err(bad("unsupported version"));
        }
        let grid_size = u32_at(8) as usize;
        check_grid_size(grid_size)?;
        let count = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
        let plane_bytes = grid_size * grid_size / 8;
        let rec = 8 + PLANES * plane_bytes;
        if bytes.len() != 20 + count * rec {
            return Err(bad("length does not match record count"));
        }
        let mut entries = Vec::with_capacity(count);
        for chunk in bytes[20..].chunks_exact(rec) {
            let id = u64::from_le_bytes(chunk[..8].try_into().expect("8 bytes"));
            entries.push((id, LabelGrid::from_bytes(grid_size, &chunk[8..])?));
        }
        Self::from_grids(grid_size, entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(&self.to_bytes())
            .and_then(|()| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Source of the paired target image for a record id.
pub trait PayloadStore: Send + Sync {
    fn payload(&self, id: u64) -> Result<Rgb8Image>;
}

/// Targets of a pair set on disk, addressed by manifest line number.
#[derive(Clone, Debug)]
pub struct PairsPayloads {
    root: PathBuf,
    targets: Vec<String>,
}

impl PairsPayloads {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let ds = PairsDataset::open(root)?;
        Ok(Self {
            targets: ds.records.iter().map(|r| r.target.clone()).collect(),
            root: ds.root,
        })
    }
}

impl PayloadStore for PairsPayloads {
    fn payload(&self, id: u64) -> Result<Rgb8Image> {
        let rel = self.targets.get(id as usize).ok_or(Error::OutOfRange {
            index: id,
            total: self.targets.len() as u64,
        })?;
        netpbm::read_ppm(self.root.join(rel))
    }
}

/// Payloads held in memory.
#[derive(Clone, Debug, Default)]
pub struct MemoryPayloads(pub HashMap<u64, Rgb8Image>);

impl PayloadStore for MemoryPayloads {
    fn payload(&self, id: u64) -> Result<Rgb8Image> {
        self.0.get(&id).cloned().ok_or(Error::OutOfRange {
            index: id,
            total: self.0.len() as u64,
        })
    }
}

/// Produces payloads on demand and keeps every one it has produced.
pub struct CachedPayloads<F> {
    make: F,
    cache: Mutex<HashMap<u64, Rgb8Image>>,
}

impl<F: Fn(u64) -> Result<Rgb8Image> + Send + Sync> CachedPayloads<F> {
    pub fn new(make: F) -> Self {
        Self {
            make,
            cache: Mutex::new(HashMap::new()),
        }
    }
}

impl<F: Fn(u64) -> Result<Rgb8Image> + Send + Sync> PayloadStore for CachedPayloads<F> {
    fn payload(&self, id: u64) -> Result<Rgb8Image> {
        if let Some(img) = self.cache.lock().expect("cache lock").get(&id) {
            return Ok(img.clone());
        }
        let img = (self.make)(id)?;
        self.cache.lock().expect("cache lock").insert(id, img.clone());
        Ok(img)
    }
}

pub struct NnTranslator {
    index: NNIndex,
    payloads: Box<dyn PayloadStore>,
}

impl NnTranslator {
    pub fn new(index: NNIndex, payloads: Box<dyn PayloadStore>) -> Self {
        Self { index, payloads }
    }

    pub fn index(&self) -> &NNIndex {
        &self.index
    }
}

impl Translator for NnTranslator {
    fn translate(&self, req: &TranslateRequest) -> Result<TranslateResponse> {
        req.check_nonempty()?;
        if self.index.is_empty() {
            return Err(Error::EmptyIndex);
        }
        let q = LabelGrid::from_segmap(req.seg(), self.index.grid_size())?;
        let hit = self.index.search(&q)?;
        let payload = self.payloads.payload(hit.record_id)?;
        if payload.dims() != req.dims() {
            return Err(Error::DimensionMismatch {
                expected: req.dims(),
                actual: payload.dims(),
            });
        }
        TranslateResponse::checked(mask_apply(&payload, req.mask())?, req, Some(hit))
    }
}
