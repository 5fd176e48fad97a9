mod common;

use common::*;
use mirrorfit::extraction::kmeans::{kmeans, Feature};
use mirrorfit::extraction::{
    body_mask_from_depth, cluster_segments, cluster_with_init, embed, extract, reject_achromatic, remove_skin,
    ClusterOptions, OneHot, SegmentationMap,
};
use mirrorfit::imaging::{hsv_to_rgb, DepthImage, Hsv};
use mirrorfit::rig::{ground_truth, render_frame};
use mirrorfit::{
    BitMask, Error, ExtractionConfig, GarmentSpec, ReferencePalette, Rgb8Image, RgbdFrame, RigOptions, RigScene,
    SkinModel,
};
use proptest::prelude::*;

fn blank(w: usize, h: usize) -> RgbdFrame {
    RgbdFrame::new(
        Rgb8Image::new(w, h).unwrap(),
        DepthImage::filled(w, h, 3000).unwrap(),
        None,
    )
    .unwrap()
}

#[test]
fn body_mask_matches_silhouette() {
    let plan = full_plan();
    for id in [3, 40_000, 80_808] {
        let (frame, gt) = measurement_at(&plan, id);
        let body = body_mask_from_depth(&frame, 1000, 2000).unwrap();
        assert!(body.iou(&gt.figure()).unwrap() >= 0.98, "config {id}");
    }
}

#[test]
fn backdrop_only_frames_are_empty() {
    let f = blank(64, 48);
    assert!(matches!(body_mask_from_depth(&f, 1000, 2000), Err(Error::EmptyMask(_))));
    assert!(matches!(
        extract(&f, &ExtractionConfig::default()),
        Err(Error::EmptyMask(_))
    ));
}

#[test]
fn two_figures_keep_the_larger() {
    let big = RigScene::new(front(10), [5, 5], GarmentSpec::measurement());
    let small = RigScene {
        options: RigOptions {
            width: 200,
            height: 200,
            ..RigOptions::default()
        },
        ..big.clone()
    };
    let (a, b) = (render_frame(&big), render_frame(&small));
    let (w, h) = (512 + 200, 512);
    let mut color = Rgb8Image::new(w, h).unwrap();
    let mut depth = DepthImage::filled(w, h, 3000).unwrap();
    for y in 0..512 {
        for x in 0..512 {
            color.put(x, y, a.color.get(x, y));
            depth.put(x, y, a.depth.get(x, y));
        }
    }
    for y in 0..200 {
        for x in 0..200 {
            color.put(512 + x, 300 + y, b.color.get(x, y));
            depth.put(512 + x, 300 + y, b.depth.get(x, y));
        }
    }
    let frame = RgbdFrame::new(color, depth, None).unwrap();
    let body = body_mask_from_depth(&frame, 1000, 2000).unwrap();
    let expect = ground_truth(&big).figure();
    assert_eq!(body.count(), expect.count());
    assert!(body.iter_set().all(|i| i % w < 512 && expect.get(i % w, i / w)));
}

#[test]
fn skin_removal_leaves_no_skin() {
    let plan = full_plan();
    for id in [11, 25_000, 61_111] {
        let (frame, gt) = measurement_at(&plan, id);
        let body = body_mask_from_depth(&frame, 1000, 2000).unwrap();
        let clothed = remove_skin(&frame, &body, &SkinModel::default()).unwrap();
        assert!(clothed.and(&gt.skin).unwrap().is_empty(), "config {id}");
    }
}

#[test]
fn empty_skin_model_keeps_the_body() {
    let (frame, _) = measurement_at(&full_plan(), 999);
    let body = body_mask_from_depth(&frame, 1000, 2000).unwrap();
    assert_eq!(remove_skin(&frame, &body, &SkinModel { ranges: vec![] }).unwrap(), body);
}

#[test]
fn all_skin_frame_is_empty() {
    let (w, h) = (32, 32);
    let frame = RgbdFrame::new(
        Rgb8Image::filled(w, h, RigOptions::default().skin).unwrap(),
        DepthImage::filled(w, h, 1500).unwrap(),
        None,
    )
    .unwrap();
    let body = BitMask::full(w, h);
    assert!(matches!(
        remove_skin(&frame, &body, &SkinModel::default()),
        Err(Error::EmptyMask(_))
    ));
}

#[test]
fn clean_frames_converge_in_one_update_with_exact_labels() {
    let plan = full_plan();
    for id in [5, 12_345, 54_321, 84_000] {
        let (frame, gt) = measurement_at(&plan, id);
        let c = cluster_segments(
            &frame,
            &gt.garment,
            &ReferencePalette::default(),
            ClusterOptions::default(),
        )
        .unwrap();
        assert_eq!(c.kmeans.iterations, 1, "config {id}");
        assert_eq!(label_accuracy(&gt.segmentation, &c.seg, 2), 1.0, "config {id}");
    }
}

#[test]
fn uniform_garment_takes_one_label() {
    let (w, h) = (24, 16);
    let palette = ReferencePalette::default();
    let near_third = Hsv::new(palette.colors[2].h + 5.0, 0.85, 0.8);
    let frame = RgbdFrame::new(
        Rgb8Image::filled(w, h, hsv_to_rgb(near_third)).unwrap(),
        DepthImage::filled(w, h, 1500).unwrap(),
        None,
    )
    .unwrap();
    let c = cluster_segments(&frame, &BitMask::full(w, h), &palette, ClusterOptions::default()).unwrap();
    assert!(c.seg.labels().iter().all(|&l| l == 3));
}

#[test]
fn cluster_order_does_not_change_labels() {
    let (frame, gt) = measurement_at(&full_plan(), 31_337);
    let jittered = value_jitter(&frame, 0.05, 9);
    let palette = ReferencePalette::default();
    let init: Vec<Feature> = palette.colors.iter().map(|&c| embed(c)).collect();
    let base = cluster_with_init(&jittered, &gt.garment, &palette, &init, ClusterOptions::default()).unwrap();
    for perm in [
        [7, 6, 5, 4, 3, 2, 1, 0],
        [2, 0, 1, 5, 3, 4, 7, 6],
        [1, 3, 5, 7, 0, 2, 4, 6],
    ] {
        let shuffled: Vec<Feature> = perm.iter().map(|&i| init[i]).collect();
        let got = cluster_with_init(&jittered, &gt.garment, &palette, &shuffled, ClusterOptions::default()).unwrap();
        assert_eq!(got.seg, base.seg, "permutation {perm:?}");
    }
}

#[test]
fn objective_is_non_increasing_on_rig_pixels() {
    let (frame, gt) = measurement_at(&full_plan(), 2_718);
    let jittered = value_jitter(&frame, 0.05, 1);
    let features: Vec<Feature> = gt
        .garment
        .iter_set()
        .map(|i| embed(mirrorfit::imaging::rgb_to_hsv(jittered.color.get(i % 512, i / 512))))
        .collect();
    // a deliberately poor start exercises several updates
    let init: Vec<Feature> = (0..8).map(|k| features[k * 97]).collect();
    let r = kmeans(&features, &init, 20);
    assert!(r.iterations > 1);
    for w in r.objective.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-6), "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn one_hot_majority_at_eighth_scale() {
    let plan = full_plan();
    for id in [0, 42_000, 84_374] {
        let (_, gt) = measurement_at(&plan, id);
        let oh: OneHot = gt.segmentation.to_one_hot();
        let back = oh.downscale_majority(8).upsample(8, 512, 512).argmax();
        let same = back
            .labels()
            .iter()
            .zip(gt.segmentation.labels())
            .filter(|(a, b)| a == b)
            .count();
        let acc = same as f64 / (512.0 * 512.0);
        assert!(acc >= 0.95, "config {id}: {acc:.4}");
    }
}

#[test]
fn extract_is_the_stepwise_composition() {
    let (frame, _) = measurement_at(&full_plan(), 8_080);
    let cfg = ExtractionConfig::default();
    let body = body_mask_from_depth(&frame, cfg.depth_near_mm, cfg.depth_far_mm).unwrap();
    let clothed = remove_skin(&frame, &body, &cfg.skin).unwrap();
    let garment = reject_achromatic(&frame, &clothed, cfg.min_garment_saturation, cfg.min_garment_value).unwrap();
    let c = cluster_segments(
        &frame,
        &garment,
        &cfg.palette,
        ClusterOptions {
            max_iters: cfg.max_iters,
        },
    )
    .unwrap();
    let (seg, mask) = extract(&frame, &cfg).unwrap();
    assert_eq!(mask, garment);
    assert_eq!(seg, c.seg);
    assert_eq!(seg.garment_mask(), mask);
}

#[test]
fn extraction_is_deterministic() {
    let (frame, _) = measurement_at(&full_plan(), 70_707);
    let cfg = ExtractionConfig::default();
    let a: (SegmentationMap, BitMask) = extract(&frame, &cfg).unwrap();
    assert_eq!(a, extract(&frame, &cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn extraction_accuracy_on_random_configurations(id in 0u64..84_375, seed in any::<u64>()) {
        let (frame, gt) = measurement_at(&full_plan(), id);
        let cfg = ExtractionConfig::default();
        let (seg, _) = extract(&frame, &cfg).unwrap();
        prop_assert!(label_accuracy(&gt.segmentation, &seg, 2) >= 0.99);
        let (seg, _) = extract(&value_jitter(&frame, 0.05, seed), &cfg).unwrap();
        prop_assert!(label_accuracy(&gt.segmentation, &seg, 2) >= 0.99);
    }
}
