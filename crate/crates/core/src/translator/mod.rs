//! The mapping from a masked measurement segmentation to a masked target
//! garment image, behind one trait with three realizations.

pub mod external;
pub mod nn;
pub mod recolor;

use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::SegmentationMap;
use crate::imaging::{BitMask, Rgb, Rgb8Image};

pub use external::SpoolTranslator;
pub use nn::{similarity, LabelGrid, NNIndex, NnTranslator, PayloadStore};
pub use recolor::RecolorTranslator;

/// Cropped labels and the garment mask they cover; labels are nonzero
/// exactly on the mask.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslateRequest {
    seg: SegmentationMap,
    mask: BitMask,
}

impl TranslateRequest {
    /// Masks `seg` by `mask` and drops mask bits without a label.
    pub fn new(seg: &SegmentationMap, mask: &BitMask) -> Result<Self> {
        let seg = seg.masked(mask)?;
        let mask = seg.garment_mask();
        Ok(Self { seg, mask })
    }

    pub fn seg(&self) -> &SegmentationMap {
        &self.seg
    }

    pub fn mask(&self) -> &BitMask {
        &self.mask
    }

    pub fn dims(&self) -> (usize, usize) {
        self.seg.dims()
    }

    pub(crate) fn check_nonempty(&self) -> Result<()> {
        if self.mask.is_empty() {
            return Err(Error::EmptyRequest);
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub record_id: u64,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TranslateResponse {
    pub image: Rgb8Image,
    /// Set when the image was retrieved from the pair set.
    pub provenance: Option<Provenance>,
}

impl TranslateResponse {
    pub(crate) fn checked(image: Rgb8Image, req: &TranslateRequest, provenance: Option<Provenance>) -> Result<Self> {
        if image.dims() != req.dims() {
            return Err(Error::DimensionMismatch {
                expected: req.dims(),
                actual: image.dims(),
            });
        }
        Ok(Self { image, provenance })
    }
}

/// A deterministic function of the request's masked labels.
pub trait Translator: Send + Sync {
    fn translate(&self, req: &TranslateRequest) -> Result<TranslateResponse>;
}

/// Which translator a pipeline uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TranslatorConfig {
    /// Retrieval over a pair set; the index file defaults to
    /// `<pairs>/index.gfnn`.
    Nn {
        pairs: PathBuf,
        #[serde(default)]
        index: Option<PathBuf>,
    },
    Recolor {
        base: Rgb,
    },
    External {
        spool_dir: PathBuf,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    5000
}

pub const DEFAULT_INDEX_FILE: &str = "index.gfnn";

impl TranslatorConfig {
    /// Instantiates the translator, loading any index it needs.
    pub fn build(&self) -> Result<Box<dyn Translator>> {
        Ok(match self {
            TranslatorConfig::Nn { pairs, index } => {
                let index_path = index.clone().unwrap_or_else(|| pairs.join(DEFAULT_INDEX_FILE));
                let index = NNIndex::load(&index_path)?;
                let store = nn::PairsPayloads::open(pairs)?;
                Box::new(NnTranslator::new(index, Box::new(store)))
            }
            TranslatorConfig::Recolor { base } => Box::new(RecolorTranslator::new(*base)),
            TranslatorConfig::External { spool_dir, timeout_ms } => {
                Box::new(SpoolTranslator::new(spool_dir, Duration::from_millis(*timeout_ms))?)
            }
        })
    }
}
