//! Hexcone HSV conversion and HSV interval thresholds.

use serde::{Deserialize, Serialize};

use super::{BitMask, Rgb, Rgb8Image};
use crate::error::{Error, Result};

/// Hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
///
/// Achromatic colors (`s == 0`) store `h == 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hsv {
    pub h: f32,
    pub s: f32,
    pub v: f32,
}

impl Hsv {
    pub const fn new(h: f32, s: f32, v: f32) -> Self {
        Self { h, s, v }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..360.0).contains(&self.h) || !(0.0..=1.0).contains(&self.s) || !(0.0..=1.0).contains(&self.v) {
            return Err(Error::InvalidRange(format!("hsv out of range: {self:?}")));
        }
        Ok(())
    }
}

pub fn rgb_to_hsv(p: Rgb) -> Hsv {
    let [r, g, b] = p;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let v = max as f32 / 255.0;
    if max == min {
        return Hsv { h: 0.0, s: 0.0, v };
    }
    let delta = (max - min) as f32;
    let s = delta / max as f32;
    let (r, g, b) = (r as f32, g as f32, b as f32);
    let sector = if max as f32 == r {
        (g - b) / delta
    } else if max as f32 == g {
        (b - r) / delta + 2.0
    } else {
        (r - g) / delta + 4.0
    };
    let mut h = sector * 60.0;
    if h < 0.0 {
        h += 360.0;
    }
    if h >= 360.0 {
        h -= 360.0;
    }
    Hsv { h, s, v }
}

pub fn hsv_to_rgb(c: Hsv) -> Rgb {
    let chroma = c.v * c.s;
    let hp = (c.h.rem_euclid(360.0)) / 60.0;
    let x = chroma * (1.0 - ((hp % 2.0) - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (chroma, x, 0.0),
        1 => (x, chroma, 0.0),
        2 => (0.0, chroma, x),
        3 => (0.0, x, chroma),
        4 => (x, 0.0, chroma),
        _ => (chroma, 0.0, x),
    };
    let m = c.v - chroma;
    let q = |u: f32| ((u + m) * 255.0).round().clamp(0.0, 255.0) as u8;
    [q(r1), q(g1), q(b1)]
}

/// Circular hue distance in degrees.
pub fn hue_distance(a: f32, b: f32) -> f32 {
    let d = (a - b).abs() % 360.0;
    d.min(360.0 - d)
}

/// Axis-aligned HSV box. The hue interval wraps through 360 when
/// `hue[0] > hue[1]`; all bounds are inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsvRange {
    pub hue: [f32; 2],
    pub sat: [f32; 2],
    pub val: [f32; 2],
}

impl HsvRange {
    pub fn new(hue: [f32; 2], sat: [f32; 2], val: [f32; 2]) -> Self {
        Self { hue, sat, val }
    }

    /// Box of half-width `hue_tol` degrees around `center`'s hue.
    pub fn around(center: Hsv, hue_tol: f32, sat: [f32; 2], val: [f32; 2]) -> Self {
        let lo = (center.h - hue_tol).rem_euclid(360.0);
        let hi = (center.h + hue_tol).rem_euclid(360.0);
        Self {
            hue: [lo, hi],
            sat,
            val,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let hue_ok = self.hue.iter().all(|h| (0.0..=360.0).contains(h));
        let unit = |r: [f32; 2]| r.iter().all(|x| (0.0..=1.0).contains(x)) && r[0] <= r[1];
        if !hue_ok || !unit(self.sat) || !unit(self.val) {
            return Err(Error::InvalidRange(format!("bad hsv range {self:?}")));
        }
        Ok(())
    }

    #[inline]
    pub fn contains(&self, c: Hsv) -> bool {
        let [lo, hi] = self.hue;
        let hue_in = if lo <= hi {
            c.h >= lo && c.h <= hi
        } else {
            c.h >= lo || c.h <= hi
        };
        hue_in && c.s >= self.sat[0] && c.s <= self.sat[1] && c.v >= self.val[0] && c.v <= self.val[1]
    }
}

pub fn in_any(ranges: &[HsvRange], c: Hsv) -> bool {
    ranges.iter().any(|r| r.contains(c))
}

/// Sets every pixel whose HSV lies in at least one range.
pub fn threshold_hsv(img: &Rgb8Image, ranges: &[HsvRange]) -> BitMask {
    let mut out = BitMask::new(img.width(), img.height());
    for (i, p) in img.pixels().enumerate() {
        if in_any(ranges, rgb_to_hsv(p)) {
            out.set_index(i, true);
        }
    }
    out
}

/// [`threshold_hsv`] restricted to pixels already set in `within`.
pub(crate) fn threshold_hsv_within(img: &Rgb8Image, ranges: &[HsvRange], within: &BitMask) -> BitMask {
    let mut out = BitMask::new(img.width(), img.height());
    let raw = img.as_raw();
    for i in within.iter_set() {
        let p = [raw[3 * i], raw[3 * i + 1], raw[3 * i + 2]];
        if in_any(ranges, rgb_to_hsv(p)) {
            out.set_index(i, true);
        }
    }
    out
}
