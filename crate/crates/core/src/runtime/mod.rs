//! The live loop: extract, crop, translate, paste back.
//!
//! [`run_stream`] runs the three stages on separate threads joined by
//! bounded FIFO queues, so frames overlap across stages while outputs keep
//! input order. A frame that fails anywhere is emitted unchanged.

pub mod bench;
pub mod source;
pub mod stats;

use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::crop::{
    apply_crop_labels, apply_crop_mask, compute_crop, invert_crop_mask, CropParams, DEFAULT_OUT_SIZE,
};
use crate::error::{Error, Result};
use crate::extraction::{extract, ExtractionConfig};
use crate::imaging::{largest_component, resize_bilinear, BitMask, Rgb8Image, RgbdFrame};
use crate::translator::{Provenance, TranslateRequest, Translator, TranslatorConfig};

pub use source::FrameSource;
pub use stats::{LatencySummary, PipelineStats};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub extraction: ExtractionConfig,
    pub border_frac: f32,
    pub out_size: usize,
    pub translator: TranslatorConfig,
    /// Translated pixels at or below this channel maximum are not garment.
    pub mask_threshold: u8,
    pub queue_capacity: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            extraction: ExtractionConfig::default(),
            border_frac: 0.05,
            out_size: DEFAULT_OUT_SIZE,
            translator: TranslatorConfig::Recolor { base: [40, 90, 200] },
            mask_threshold: 10,
            queue_capacity: 4,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.extraction.validate()?;
        if !(0.0..=1.0).contains(&self.border_frac) {
            return Err(Error::InvalidParams("border_frac must lie in [0, 1]".into()));
        }
        if self.out_size == 0 || self.queue_capacity == 0 {
            return Err(Error::InvalidParams(
                "out_size and queue_capacity must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Pixels brighter than `threshold` in any channel, largest region only.
pub fn output_garment_mask(translated: &Rgb8Image, threshold: u8) -> BitMask {
    let bits = translated
        .as_raw()
        .chunks_exact(3)
        .map(|p| p[0].max(p[1]).max(p[2]) > threshold)
        .collect();
    largest_component(&BitMask::from_bits(translated.width(), translated.height(), bits).expect("sized from image"))
}

/// Pastes `translated` back through `crop`, replacing only pixels whose
/// inverted `out_mask` bit is set.
pub fn recompose(
    original: &Rgb8Image,
    translated: &Rgb8Image,
    crop: &CropParams,
    out_mask: &BitMask,
) -> Result<Rgb8Image> {
    if translated.dims() != out_mask.dims() {
        return Err(Error::DimensionMismatch {
            expected: translated.dims(),
            actual: out_mask.dims(),
        });
    }
    let (w, h) = original.dims();
    let mask = invert_crop_mask(out_mask, crop, w, h)?;
    let mut out = original.clone();
    if mask.is_empty() {
        return Ok(out);
    }
    let back = resize_bilinear(translated, crop.width, crop.height);
    let raw = out.as_raw_mut();
    for y in 0..crop.height {
        for x in 0..crop.width {
            let (fx, fy) = (crop.left + x, crop.top + y);
            if mask.get(fx, fy) {
                let i = (fy * w + fx) * 3;
                raw[i..i + 3].copy_from_slice(&back.get(x, y));
            }
        }
    }
    Ok(out)
}

/// What happened to one frame.
#[derive(Clone, Debug, PartialEq)]
pub enum FrameStatus {
    Translated(Option<Provenance>),
    /// No garment found; original emitted.
    Skipped(String),
    /// A stage failed; original emitted.
    Failed(String),
}

/// Output of the extraction stage.
struct Prepared {
    crop: CropParams,
    request: TranslateRequest,
}

fn prepare(frame: &RgbdFrame, cfg: &PipelineConfig) -> Result<Prepared> {
    let (seg, mask) = extract(frame, &cfg.extraction)?;
    let crop = compute_crop(&mask, cfg.border_frac, cfg.out_size)?;
    let request = TranslateRequest::new(&apply_crop_labels(&seg, &crop)?, &apply_crop_mask(&mask, &crop)?)?;
    Ok(Prepared { crop, request })
}

fn finish(original: &Rgb8Image, translated: &Rgb8Image, crop: &CropParams, threshold: u8) -> Result<Rgb8Image> {
    recompose(original, translated, crop, &output_garment_mask(translated, threshold))
}

/// Runs the whole chain on one frame.
pub fn process_frame(frame: &RgbdFrame, cfg: &PipelineConfig, translator: &dyn Translator) -> (Rgb8Image, FrameStatus) {
    let prepared = match prepare(frame, cfg) {
        Ok(p) => p,
        Err(Error::EmptyMask(why)) => return (frame.color.clone(), FrameStatus::Skipped(why.to_string())),
        Err(e) => return (frame.color.clone(), FrameStatus::Failed(e.to_string())),
    };
    let result = translator.translate(&prepared.request).and_then(|r| {
        Ok((
            finish(&frame.color, &r.image, &prepared.crop, cfg.mask_threshold)?,
            r.provenance,
        ))
    });
    match result {
        Ok((img, prov)) => (img, FrameStatus::Translated(prov)),
        Err(e) => (frame.color.clone(), FrameStatus::Failed(e.to_string())),
    }
}

/// A frame emitted by [`run_stream`].
pub struct StreamOutput {
    pub seq: usize,
    pub name: String,
    pub image: Rgb8Image,
    pub status: FrameStatus,
}

struct InFlight {
    seq: usize,
    name: String,
    start: Instant,
    color: Rgb8Image,
    stage: Result<Prepared, FrameStatus>,
}

struct Translated {
    seq: usize,
    name: String,
    start: Instant,
    color: Rgb8Image,
    stage: Result<(CropParams, Rgb8Image, Option<Provenance>), FrameStatus>,
}

/// Streams `frames` through the pipeline, calling `sink` once per frame in
/// input order. Source and sink errors abort the run; frame errors do not.
pub fn run_stream<I, S>(
    frames: I,
    cfg: &PipelineConfig,
    translator: &dyn Translator,
    mut sink: S,
) -> Result<PipelineStats>
where
    I: IntoIterator<Item = Result<(String, RgbdFrame)>>,
    I::IntoIter: Send,
    S: FnMut(StreamOutput) -> Result<()>,
{
    cfg.validate()?;
    let frames = frames.into_iter();
    let cap = cfg.queue_capacity;
    let (tx1, rx1) = sync_channel::<InFlight>(cap);
    let (tx2, rx2) = sync_channel::<Translated>(cap);
    let wall = Instant::now();

    thread::scope(|scope| {
        let extractor = scope.spawn(move || -> Result<Vec<Duration>> {
            let mut times = Vec::new();
            for (seq, item) in frames.enumerate() {
                let (name, frame) = item?;
                let start = Instant::now();
                let stage = match prepare(&frame, cfg) {
                    Ok(p) => {
                        times.push(start.elapsed());
                        Ok(p)
                    }
                    Err(Error::EmptyMask(why)) => Err(FrameStatus::Skipped(why.to_string())),
                    Err(e) => Err(FrameStatus::Failed(e.to_string())),
                };
                let msg = InFlight {
                    seq,
                    name,
                    start,
                    color: frame.color,
                    stage,
                };
                if tx1.send(msg).is_err() {
                    break;
                }
            }
            Ok(times)
        });

        let translating = scope.spawn(move || -> Vec<Duration> {
            let mut times = Vec::new();
            for f in rx1 {
                let stage = f.stage.and_then(|p| {
                    let t = Instant::now();
                    let r = translator.translate(&p.request);
                    times.push(t.elapsed());
                    r.map(|r| (p.crop, r.image, r.provenance))
                        .map_err(|e| FrameStatus::Failed(e.to_string()))
                });
                let msg = Translated {
                    seq: f.seq,
                    name: f.name,
                    start: f.start,
                    color: f.color,
                    stage,
                };
                if tx2.send(msg).is_err() {
                    break;
                }
            }
            times
        });

        let mut rec = stats::StatsRecorder::default();
        let mut sink_result = Ok(());
        for f in rx2 {
            let (image, status) = match f.stage {
                Ok((crop, translated, prov)) => {
                    let t = Instant::now();
                    let r = finish(&f.color, &translated, &crop, cfg.mask_threshold);
                    rec.recompose.push(t.elapsed());
                    match r {
                        Ok(img) => (img, FrameStatus::Translated(prov)),
                        Err(e) => (f.color, FrameStatus::Failed(e.to_string())),
                    }
                }
                Err(status) => (f.color, status),
            };
            match &status {
                FrameStatus::Skipped(_) => rec.skipped += 1,
                FrameStatus::Failed(msg) => {
                    log::warn!("frame {} ({}): {msg}", f.seq, f.name);
                    rec.error(format!("{}: {msg}", f.name));
                }
                FrameStatus::Translated(_) => {}
            }
            rec.frames += 1;
            let out = StreamOutput {
                seq: f.seq,
                name: f.name,
                image,
                status,
            };
            if let Err(e) = sink(out) {
                sink_result = Err(e);
                break;
            }
            rec.end_to_end.push(f.start.elapsed());
        }
        rec.translate = translating.join().expect("translate stage panicked");
        rec.extract = extractor.join().expect("extract stage panicked")?;
        sink_result?;
        Ok(rec.finish(wall.elapsed()))
    })
}
