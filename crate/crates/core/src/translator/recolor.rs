use super::{TranslateRequest, TranslateResponse, Translator};
use crate::error::Result;
use crate::extraction::PATCH_COUNT;
use crate::imaging::{hsv_to_rgb, rgb_to_hsv, Hsv, Rgb, Rgb8Image};

/// Paints the garment in one hue with a distinct value per patch, so the
/// patch structure stays visible.
#[derive(Clone, Debug)]
pub struct RecolorTranslator {
    shades: [Rgb; PATCH_COUNT + 1],
}

impl RecolorTranslator {
    pub fn new(base: Rgb) -> Self {
        let c = rgb_to_hsv(base);
        let mut shades = [[0u8; 3]; PATCH_COUNT + 1];
        for (l, s) in shades.iter_mut().enumerate().skip(1) {
            *s = hsv_to_rgb(Hsv::new(c.h, c.s, 0.35 + 0.08 * (l - 1) as f32));
        }
        Self { shades }
    }

    /// Color of patch `label` (background is black).
    pub fn shade(&self, label: u8) -> Rgb {
        self.shades[label as usize]
    }
}

impl Translator for RecolorTranslator {
    fn translate(&self, req: &TranslateRequest) -> Result<TranslateResponse> {
        let (w, h) = req.dims();
        let mut data = Vec::with_capacity(w * h * 3);
        for &l in req.seg().labels() {
            data.extend_from_slice(&self.shades[l as usize]);
        }
        TranslateResponse::checked(Rgb8Image::from_raw(w, h, data)?, req, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::SegmentationMap;
    use std::collections::HashSet;

    #[test]
    fn eight_distinct_bright_shades() {
        let t = RecolorTranslator::new([30, 80, 200]);
        let shades: HashSet<Rgb> = (1..=8).map(|l| t.shade(l)).collect();
        assert_eq!(shades.len(), 8);
        assert!(shades.iter().all(|s| *s.iter().max().unwrap() > 10));
    }

    #[test]
    fn paints_exactly_the_mask() {
        let labels: Vec<u8> = (0..100)
            .map(|i| if i % 3 == 0 { 0 } else { (i % 8 + 1) as u8 })
            .collect();
        let seg = SegmentationMap::from_labels(10, 10, labels).unwrap();
        let req = TranslateRequest::new(&seg, &seg.garment_mask()).unwrap();
        let t = RecolorTranslator::new([200, 40, 40]);
        let out = t.translate(&req).unwrap().image;
        for (i, p) in out.pixels().enumerate() {
            assert_eq!(p != [0, 0, 0], req.mask().get_index(i));
        }
        assert_eq!(out, t.translate(&req).unwrap().image);
    }
}
