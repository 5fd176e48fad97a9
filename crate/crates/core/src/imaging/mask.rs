//! Binary masks, depth thresholding and 4-connected component labeling.

use std::fmt;

use super::{DepthImage, Rect, Rgb8Image};
use crate::error::{Error, Result};

/// One bit per pixel, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BitMask {
    /// All-clear mask.
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![true; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::Format(format!(
                "mask has {} bits, expected {}",
                bits.len(),
                width * height
            )));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
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

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, on: bool) {
        self.bits[y * self.width + x] = on;
    }

    #[inline]
    pub fn get_index(&self, i: usize) -> bool {
        self.bits[i]
    }

    #[inline]
    pub fn set_index(&mut self, i: usize, on: bool) {
        self.bits[i] = on;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Row-major indices of set bits.
    pub fn iter_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i))
    }

    fn zip_with(&self, other: &BitMask, f: impl Fn(bool, bool) -> bool) -> Result<BitMask> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect();
        Ok(BitMask {
            width: self.width,
            height: self.height,
            bits,
        })
    }

    pub fn and(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn and_not(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn not(&self) -> BitMask {
        BitMask {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// Intersection over union; two empty masks score 1.
    pub fn iou(&self, other: &BitMask) -> Result<f64> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                actual: other.dims(),
            });
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += (a && b) as usize;
            union += (a || b) as usize;
        }
        Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
    }

    /// Encodes as 0/255 bytes.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect()
    }

    /// Any nonzero byte is set.
    pub fn from_bytes(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        Self::from_bits(width, height, bytes.iter().map(|&b| b != 0).collect())
    }
}

impl fmt::Debug for BitMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitMask({}x{}, {} set)", self.width, self.height, self.count())
    }
}

/// Sets pixels with `near <= depth < far`; zero depth never passes.
pub fn threshold_depth(depth: &DepthImage, near: u16, far: u16) -> Result<BitMask> {
    if near >= far {
        return Err(Error::InvalidRange(format!(
            "depth range near={near} must be below far={far}"
        )));
    }
    let bits = depth.as_raw().iter().map(|&d| d != 0 && d >= near && d < far).collect();
    BitMask::from_bits(depth.width(), depth.height(), bits)
}

/// Label map of 4-connected foreground regions.
///
/// Labels are dense from 1 and numbered in raster order of each region's
/// first pixel; 0 is background.
#[derive(Clone, Debug)]
pub struct Components {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u32>,
    /// `counts[k]` is the pixel count of label `k + 1`.
    pub counts: Vec<usize>,
}

impl Components {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn mask_of(&self, label: u32) -> BitMask {
        let bits = self.labels.iter().map(|&l| l == label).collect();
        BitMask {
            width: self.width,
            height: self.height,
            bits,
        }
    }

    /// Label with the most pixels; the lowest label wins ties.
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (k, &c) in self.counts.iter().enumerate() {
            if best.is_none_or(|(_, bc)| c > bc) {
                best = Some((k as u32 + 1, c));
            }
        }
        best.map(|(l, _)| l)
    }
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        let p = parent[x as usize];
        parent[x as usize] = parent[p as usize];
        x = p;
    }
    x
}

fn union(parent: &mut [u32], a: u32, b: u32) -> u32 {
    let ra = find(parent, a);
    let rb = find(parent, b);
    let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
    parent[hi as usize] = lo;
    lo
}

pub fn connected_components(mask: &BitMask) -> Components {
    let (w, h) = mask.dims();
    let mut labels = vec![0u32; w * h];
    // parent[0] is a dummy so provisional labels start at 1
    let mut parent: Vec<u32> = vec![0];

    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            let i = row + x;
            if !mask.bits[i] {
                continue;
            }
            let left = if x > 0 { labels[i - 1] } else { 0 };
            let up = if y > 0 { labels[i - w] } else { 0 };
            labels[i] = match (left, up) {
                (0, 0) => {
                    let l = parent.len() as u32;
                    parent.push(l);
                    l
                }
                (l, 0) | (0, l) => l,
                (a, b) if a == b => a,
                (a, b) => union(&mut parent, a, b),
            };
        }
    }

    let mut remap = vec![0u32; parent.len()];
    let mut counts = Vec::new();
    for l in labels.iter_mut() {
        if *l == 0 {
            continue;
        }
        let root = find(&mut parent, *l) as usize;
        if remap[root] == 0 {
            counts.push(0);
            remap[root] = counts.len() as u32;
        }
        *l = remap[root];
        counts[*l as usize - 1] += 1;
    }

    Components {
        width: w,
        height: h,
        labels,
        counts,
    }
}

/// Keeps only the largest 4-connected region (lowest label on ties).
pub fn largest_component(mask: &BitMask) -> BitMask {
    let cc = connected_components(mask);
    match cc.largest() {
        Some(l) => cc.mask_of(l),
        None => BitMask::new(mask.width, mask.height),
    }
}

/// Zeroes pixels whose bit is clear.
pub fn mask_apply(img: &Rgb8Image, m: &BitMask) -> Result<Rgb8Image> {
    if img.dims() != m.dims() {
        return Err(Error::DimensionMismatch {
            expected: img.dims(),
            actual: m.dims(),
        });
    }
    let mut out = img.clone();
    for (px, &on) in out.as_raw_mut().chunks_exact_mut(3).zip(&m.bits) {
        if !on {
            px.fill(0);
        }
    }
    Ok(out)
}

/// Tight bounding box of set bits.
pub fn mask_bbox(m: &BitMask) -> Option<Rect> {
    let (w, h) = m.dims();
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..h {
        let row = &m.bits[y * w..(y + 1) * w];
        let Some(first) = row.iter().position(|&b| b) else {
            continue;
        };
        let last = row.iter().rposition(|&b| b).unwrap_or(first);
        x0 = x0.min(first);
        x1 = x1.max(last);
        y0 = y0.min(y);
        y1 = y;
    }
    (x0 != usize::MAX).then(|| Rect {
        left: x0,
        top: y0,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
    })
}

/// Pixels within Chebyshev distance `radius` of a pixel whose label differs.
pub fn label_boundary_band(labels: &[u8], width: usize, height: usize, radius: usize) -> BitMask {
    let mut edge = BitMask::new(width, height);
    for y in 0..height {
        for x in 0..width {
            let l = labels[y * width + x];
            let differs = (x + 1 < width && labels[y * width + x + 1] != l)
                || (y + 1 < height && labels[(y + 1) * width + x] != l);
            if differs {
                edge.set(x, y, true);
                if x + 1 < width {
                    edge.set(x + 1, y, true);
                }
                if y + 1 < height {
                    edge.set(x, y + 1, true);
                }
            }
        }
    }
    dilate(&edge, radius.saturating_sub(1))
}

/// Square (Chebyshev) dilation.
pub fn dilate(m: &BitMask, radius: usize) -> BitMask {
    if radius == 0 {
        return m.clone();
    }
    let (w, h) = m.dims();
    let mut horiz = BitMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if m.get(x, y) {
                for xx in x.saturating_sub(radius)..(x + radius + 1).min(w) {
                    horiz.set(xx, y, true);
                }
            }
        }
    }
    let mut out = BitMask::new(w, h);
    for y in 0..h {
        for x in 0..w {
            if horiz.get(x, y) {
                for yy in y.saturating_sub(radius)..(y + radius + 1).min(h) {
                    out.set(x, yy, true);
                }
            }
        }
    }
    out
}
