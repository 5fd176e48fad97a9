use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::color::{hsv_to_rgb, hue_distance};
use crate::imaging::netpbm;
use crate::imaging::{BitMask, Hsv, Rgb};

/// Number of color patches on the measurement garment.
pub const PATCH_COUNT: usize = 8;

/// Per-pixel labels: 0 is background, 1..=8 are measurement patches.
#[derive(Clone, PartialEq, Eq)]
pub struct SegmentationMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl std::fmt::Debug for SegmentationMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SegmentationMap({}x{})", self.width, self.height)
    }
}

impl SegmentationMap {
    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn from_labels(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::Format(format!(
                "label map has {} entries, expected {}",
                labels.len(),
                width * height
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize > PATCH_COUNT) {
            return Err(Error::Format(format!("label {bad} exceeds {PATCH_COUNT}")));
        }
        Ok(Self { width, height, labels })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    /// Nonzero labels.
    pub fn garment_mask(&self) -> BitMask {
        BitMask::from_bits(self.width, self.height, self.labels.iter().map(|&l| l != 0).collect())
            .expect("same dimensions")
    }

    /// Clears labels outside `m`.
    pub fn masked(&self, m: &BitMask) -> Result<Self> {
        if m.dims() != self.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: m.dims(),
            });
        }
        let labels = self
            .labels
            .iter()
            .zip(m.as_slice())
            .map(|(&l, &on)| if on { l } else { 0 })
            .collect();
        Ok(Self {
            width: self.width,
            height: self.height,
            labels,
        })
    }

    pub fn to_one_hot(&self) -> OneHot {
        let mut planes: Vec<BitMask> = (0..=PATCH_COUNT)
            .map(|_| BitMask::new(self.width, self.height))
            .collect();
        for (i, &l) in self.labels.iter().enumerate() {
            planes[l as usize].set_index(i, true);
        }
        OneHot {
            width: self.width,
            height: self.height,
            planes,
        }
    }

    pub fn read_pgm(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let (w, h, labels) = netpbm::read_pgm8(path)?;
        Self::from_labels(w, h, labels)
    }

    pub fn write_pgm(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        netpbm::write_pgm8(path, self.width, self.height, &self.labels)
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        netpbm::encode_pgm8(self.width, self.height, &self.labels)
    }
}

/// Nine binary planes, one per label including background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneHot {
    pub width: usize,
    pub height: usize,
    pub planes: Vec<BitMask>,
}

impl OneHot {
    /// Index of the set plane at each pixel; the lowest plane wins if
    /// several are set, background if none is.
    pub fn argmax(&self) -> SegmentationMap {
        let labels = (0..self.width * self.height)
            .map(|i| self.planes.iter().position(|p| p.get_index(i)).unwrap_or(0) as u8)
            .collect();
        SegmentationMap {
            width: self.width,
            height: self.height,
            labels,
        }
    }

    /// Shrinks by an integer factor, keeping in each block the plane with
    /// the most set pixels (lowest label on ties).
    pub fn downscale_majority(&self, factor: usize) -> OneHot {
        let w = self.width.div_ceil(factor);
        let h = self.height.div_ceil(factor);
        let mut planes: Vec<BitMask> = (0..self.planes.len()).map(|_| BitMask::new(w, h)).collect();
        for by in 0..h {
            for bx in 0..w {
                let mut counts = [0usize; PATCH_COUNT + 1];
                for y in by * factor..((by + 1) * factor).min(self.height) {
                    for x in bx * factor..((bx + 1) * factor).min(self.width) {
                        for (c, p) in self.planes.iter().enumerate() {
                            if p.get(x, y) {
                                counts[c] += 1;
                            }
                        }
                    }
                }
                let best = (0..counts.len()).fold(0, |b, c| if counts[c] > counts[b] { c } else { b });
                planes[best].set(bx, by, true);
            }
        }
        OneHot {
            width: w,
            height: h,
            planes,
        }
    }

    /// Nearest-neighbor upsample to the given size by an integer factor.
    pub fn upsample(&self, factor: usize, width: usize, height: usize) -> OneHot {
        let planes = self
            .planes
            .iter()
            .map(|p| BitMask::from_fn(width, height, |x, y| p.get(x / factor, y / factor)))
            .collect();
        OneHot { width, height, planes }
    }
}

/// The eight canonical patch colors, in label order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferencePalette {
    pub colors: [Hsv; PATCH_COUNT],
}

impl Default for ReferencePalette {
    /// Hues every 45 degrees starting at red, s = v = 0.9.
    fn default() -> Self {
        let colors = std::array::from_fn(|i| Hsv::new(45.0 * i as f32, 0.9, 0.9));
        Self { colors }
    }
}

impl ReferencePalette {
    pub fn from_rgb(colors: &[Rgb; PATCH_COUNT]) -> Self {
        Self {
            colors: colors.map(crate::imaging::rgb_to_hsv),
        }
    }

    pub fn rgb(&self) -> [Rgb; PATCH_COUNT] {
        self.colors.map(hsv_to_rgb)
    }

    /// Minimum pairwise circular hue distance, in degrees.
    pub fn min_hue_separation(&self) -> f32 {
        let mut best = f32::INFINITY;
        for i in 0..PATCH_COUNT {
            for j in i + 1..PATCH_COUNT {
                best = best.min(hue_distance(self.colors[i].h, self.colors[j].h));
            }
        }
        best
    }

    pub fn validate(&self) -> Result<()> {
        for c in &self.colors {
            c.validate()?;
        }
        let sep = self.min_hue_separation();
        if sep < 30.0 {
            return Err(Error::InvalidParams(format!(
                "palette hues must be at least 30 degrees apart, closest pair is {sep:.1}"
            )));
        }
        Ok(())
    }
}
