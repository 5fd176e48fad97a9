//! Capture, pairing, extraction and recomposition stages for image-based
//! virtual try-on driven by a color-coded measurement garment.
//!
//! A capture plan enumerates mannequin configurations; the synthetic rig
//! renders each one wearing the measurement garment and the target
//! garment; the dataset stage crops both to aligned pairs; at run time a
//! live frame is segmented into patch labels, translated into the target
//! garment, and pasted back under the wearer's arms.

pub mod dataset;
pub mod error;
pub mod extraction;
pub mod imaging;
pub mod plan;
pub mod rig;
pub mod runtime;
pub mod translator;

pub use dataset::{CropParams, PairedRecord};
pub use error::{Error, Result};
pub use extraction::{ExtractionConfig, ReferencePalette, SegmentationMap, SkinModel};
pub use imaging::{BitMask, DepthImage, Hsv, Rgb, Rgb8Image, RgbdFrame};
pub use plan::{build_plan, BodyConfiguration, CapturePlan, CapturePlanParams};
pub use rig::{GarmentSpec, RigOptions, RigScene};
pub use runtime::{PipelineConfig, PipelineStats};
pub use translator::{TranslateRequest, TranslateResponse, Translator};
