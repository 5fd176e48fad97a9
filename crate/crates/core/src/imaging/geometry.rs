//! Resampling: bilinear and nearest-neighbor resize, inverse-mapped affine
//! warps about the image center.

use serde::{Deserialize, Serialize};

use super::{Rgb, Rgb8Image};

const WEIGHT_BITS: u32 = 11;
const WEIGHT_ONE: u32 = 1 << WEIGHT_BITS;

/// Per-axis tap table for half-pixel-centered bilinear sampling.
fn bilinear_taps(src: usize, dst: usize) -> Vec<(usize, usize, u32)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|d| {
            let s = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            let frac = ((s - i0 as f64) * WEIGHT_ONE as f64).round() as u32;
            (i0, i1, frac)
        })
        .collect()
}

/// Bilinear resize with half-pixel-centered coordinates and edge clamping.
/// Resizing to the same dimensions returns an identical image.
pub fn resize_bilinear(img: &Rgb8Image, w: usize, h: usize) -> Rgb8Image {
    assert!(w >= 1 && h >= 1, "resize target must be at least 1x1");
    if img.dims() == (w, h) {
        return img.clone();
    }
    let (sw, _) = img.dims();
    let src = img.as_raw();
    let xs = bilinear_taps(img.width(), w);
    let ys = bilinear_taps(img.height(), h);
    let mut out = vec![0u8; w * h * 3];
    let round = 1u32 << (2 * WEIGHT_BITS - 1);
    for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
        let r0 = &src[y0 * sw * 3..(y0 + 1) * sw * 3];
        let r1 = &src[y1 * sw * 3..(y1 + 1) * sw * 3];
        let gy = WEIGHT_ONE - fy;
        let orow = &mut out[oy * w * 3..(oy + 1) * w * 3];
        for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
            let gx = WEIGHT_ONE - fx;
            for c in 0..3 {
                let top = r0[x0 * 3 + c] as u32 * gx + r0[x1 * 3 + c] as u32 * fx;
                let bot = r1[x0 * 3 + c] as u32 * gx + r1[x1 * 3 + c] as u32 * fx;
                orow[ox * 3 + c] = ((top * gy + bot * fy + round) >> (2 * WEIGHT_BITS)) as u8;
            }
        }
    }
    Rgb8Image::from_raw(w, h, out).expect("dimensions checked")
}

/// Source index for nearest-neighbor sampling of destination index `d`,
/// computed exactly in integers.
#[inline]
fn nearest_src(d: usize, src: usize, dst: usize) -> usize {
    ((2 * d + 1) * src) / (2 * dst)
}

/// Nearest-neighbor resize of any single-plane raster.
pub fn resize_nearest<T: Copy>(src: &[T], sw: usize, sh: usize, w: usize, h: usize) -> Vec<T> {
    assert_eq!(src.len(), sw * sh);
    if (sw, sh) == (w, h) {
        return src.to_vec();
    }
    let xs: Vec<usize> = (0..w).map(|x| nearest_src(x, sw, w)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = &src[nearest_src(y, sh, h) * sw..][..sw];
        out.extend(xs.iter().map(|&x| row[x]));
    }
    out
}

/// Forward transform: shear, then rotate about the image center, then
/// translate. Angles in degrees, translation in pixels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineParams {
    pub dx: f32,
    pub dy: f32,
    pub rotation: f32,
    pub shear_x: f32,
    pub shear_y: f32,
}

impl AffineParams {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn rotation(deg: f32) -> Self {
        Self {
            rotation: deg,
            ..Self::default()
        }
    }

    /// Maps a destination pixel to its (continuous) source position.
    fn inverse(&self, w: usize, h: usize) -> impl Fn(usize, usize) -> (f64, f64) {
        let (sin, cos) = (self.rotation as f64).to_radians().sin_cos();
        let tx = (self.shear_x as f64).to_radians().tan();
        let ty = (self.shear_y as f64).to_radians().tan();
        // A = R * S with S = [[1, tx], [ty, 1]]
        let a = cos - sin * ty;
        let b = cos * tx - sin;
        let c = sin + cos * ty;
        let d = sin * tx + cos;
        let det = a * d - b * c;
        let (ia, ib, ic, id) = (d / det, -b / det, -c / det, a / det);
        let cx = w as f64 / 2.0;
        let cy = h as f64 / 2.0;
        let (dx, dy) = (self.dx as f64, self.dy as f64);
        move |x, y| {
            let u = x as f64 + 0.5 - cx - dx;
            let v = y as f64 + 0.5 - cy - dy;
            (ia * u + ib * v + cx - 0.5, ic * u + id * v + cy - 0.5)
        }
    }
}

/// Inverse-mapped bilinear warp; samples falling outside the source take
/// `fill`.
pub fn warp_affine(img: &Rgb8Image, p: &AffineParams, fill: Rgb) -> Rgb8Image {
    let (w, h) = img.dims();
    let map = p.inverse(w, h);
    let (wf, hf) = (w as f64, h as f64);
    Rgb8Image::from_fn(w, h, |x, y| {
        let (sx, sy) = map(x, y);
        if sx < -0.5 || sx > wf - 0.5 || sy < -0.5 || sy > hf - 0.5 {
            return fill;
        }
        let sx = sx.clamp(0.0, wf - 1.0);
        let sy = sy.clamp(0.0, hf - 1.0);
        let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
        let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
        let (p00, p10, p01, p11) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
        let mut out = [0u8; 3];
        for c in 0..3 {
            let top = p00[c] as f64 * (1.0 - fx) + p10[c] as f64 * fx;
            let bot = p01[c] as f64 * (1.0 - fx) + p11[c] as f64 * fx;
            out[c] = (top * (1.0 - fy) + bot * fy).round().clamp(0.0, 255.0) as u8;
        }
        out
    })
    .expect("dimensions come from a valid image")
}

/// Nearest-neighbor warp for label planes and masks.
pub fn warp_affine_nearest<T: Copy>(src: &[T], w: usize, h: usize, p: &AffineParams, fill: T) -> Vec<T> {
    assert_eq!(src.len(), w * h);
    let map = p.inverse(w, h);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = map(x, y);
            let (nx, ny) = ((sx + 0.5).floor(), (sy + 0.5).floor());
            if nx < 0.0 || ny < 0.0 || nx >= w as f64 || ny >= h as f64 {
                out.push(fill);
            } else {
                out.push(src[ny as usize * w + nx as usize]);
            }
        }
    }
    out
}
