mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use common::*;
use mirrorfit::dataset::crop::{apply_crop_labels, apply_crop_mask, compute_crop};
use mirrorfit::dataset::{pair_records, postprocess, PostprocessConfig};
use mirrorfit::imaging::{netpbm, DepthImage};
use mirrorfit::rig::{capture_dataset, CaptureDataset};
use mirrorfit::runtime::bench::{bench, query_ids, BenchConfig};
use mirrorfit::runtime::{output_garment_mask, process_frame, run_stream, FrameSource, FrameStatus};
use mirrorfit::translator::{NNIndex, RecolorTranslator, TranslatorConfig};
use mirrorfit::{
    build_plan, Error, GarmentSpec, PipelineConfig, Rgb8Image, RgbdFrame, RigOptions, SegmentationMap,
    TranslateRequest, TranslateResponse, Translator,
};

fn recolor() -> RecolorTranslator {
    RecolorTranslator::new([40, 90, 200])
}

#[test]
fn recolor_output_mask_is_the_request_mask() {
    let plan = full_plan();
    for id in [9, 48_000] {
        let (_, gt) = measurement_at(&plan, id);
        let crop = compute_crop(&gt.garment, 0.05, 512).unwrap();
        let req = TranslateRequest::new(
            &apply_crop_labels(&gt.segmentation, &crop).unwrap(),
            &apply_crop_mask(&gt.garment, &crop).unwrap(),
        )
        .unwrap();
        let out = recolor().translate(&req).unwrap();
        assert_eq!(output_garment_mask(&out.image, 10), *req.mask());
        assert!(output_garment_mask(&out.image, 255).is_empty());
    }
}

#[test]
fn recolor_changes_only_the_garment() {
    let plan = full_plan();
    for id in [123, 45_678, 84_000] {
        let (frame, gt) = measurement_at(&plan, id);
        let (out, status) = process_frame(&frame, &PipelineConfig::default(), &recolor());
        assert_eq!(status, FrameStatus::Translated(None));
        let (mut changed, mut garment_changed) = (0, 0);
        for i in 0..512 * 512 {
            let (x, y) = (i % 512, i / 512);
            if out.get(x, y) != frame.color.get(x, y) {
                changed += 1;
                assert!(
                    gt.garment.get(x, y),
                    "config {id}: pixel ({x}, {y}) outside the garment changed"
                );
                garment_changed += 1;
            }
        }
        assert!(changed > 0);
        let frac = garment_changed as f64 / gt.garment.count() as f64;
        assert!(frac >= 0.99, "config {id}: only {frac:.4} of the garment recolored");
    }
}

fn empty_frame() -> RgbdFrame {
    RgbdFrame::new(
        Rgb8Image::new(64, 64).unwrap(),
        DepthImage::filled(64, 64, 3000).unwrap(),
        None,
    )
    .unwrap()
}

#[test]
fn empty_scene_passes_through() {
    let f = empty_frame();
    let (out, status) = process_frame(&f, &PipelineConfig::default(), &recolor());
    assert_eq!(out, f.color);
    assert!(matches!(status, FrameStatus::Skipped(_)));
}

/// Fails every other call.
struct Flaky(AtomicUsize);

impl Translator for Flaky {
    fn translate(&self, req: &TranslateRequest) -> mirrorfit::Result<TranslateResponse> {
        if self.0.fetch_add(1, Ordering::SeqCst) % 2 == 1 {
            return Err(Error::Timeout(std::time::Duration::from_millis(1)));
        }
        recolor().translate(req)
    }
}

fn stream_frames(n: u64) -> Vec<(String, RgbdFrame)> {
    let plan = full_plan();
    (0..n)
        .map(|k| (format!("f{k:02}"), measurement_at(&plan, k * 997).0))
        .collect()
}

#[test]
fn stream_preserves_order_and_matches_single_frames() {
    let frames = stream_frames(9);
    let cfg = PipelineConfig {
        queue_capacity: 2,
        ..PipelineConfig::default()
    };
    let mut seen = Vec::new();
    let stats = run_stream(frames.iter().cloned().map(Ok), &cfg, &recolor(), |o| {
        seen.push((o.seq, o.name, o.image));
        Ok(())
    })
    .unwrap();
    assert_eq!(stats.frames, 9);
    assert_eq!(stats.skipped + stats.failed, 0);
    assert!(stats.stages_overlap);
    assert!((stats.fps - 9.0 / stats.wall_s).abs() < 1e-9);
    for (k, ((seq, name, img), (fname, frame))) in seen.iter().zip(&frames).enumerate() {
        assert_eq!(*seq, k);
        assert_eq!(name, fname);
        assert_eq!(*img, process_frame(frame, &cfg, &recolor()).0);
    }
}

#[test]
fn single_frame_stream_has_one_sample_per_stage() {
    let frames = stream_frames(1);
    let stats = run_stream(
        frames.into_iter().map(Ok),
        &PipelineConfig::default(),
        &recolor(),
        |_| Ok(()),
    )
    .unwrap();
    let s = &stats.stages;
    assert_eq!(
        (
            s.extract.samples,
            s.translate.samples,
            s.recompose.samples,
            s.end_to_end.samples
        ),
        (1, 1, 1, 1)
    );
}

#[test]
fn failures_are_contained() {
    let mut frames = stream_frames(6);
    frames.insert(2, ("empty".into(), empty_frame()));
    let flaky = Flaky(AtomicUsize::new(0));
    let mut out = Vec::new();
    let stats = run_stream(
        frames.iter().cloned().map(Ok),
        &PipelineConfig::default(),
        &flaky,
        |o| {
            out.push(o);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(stats.frames, 7);
    assert_eq!(stats.skipped, 1);
    assert_eq!(stats.failed, 3);
    assert_eq!(stats.errors.len(), 3);
    for (o, (_, f)) in out.iter().zip(&frames) {
        if !matches!(o.status, FrameStatus::Translated(_)) {
            assert_eq!(o.image, f.color);
        }
    }
}

#[test]
fn source_and_sink_errors_abort() {
    let frames = stream_frames(3);
    let mut items: Vec<mirrorfit::Result<(String, RgbdFrame)>> = frames.iter().cloned().map(Ok).collect();
    items.insert(1, Err(Error::Format("bad frame file".into())));
    let r = run_stream(items, &PipelineConfig::default(), &recolor(), |_| Ok(()));
    assert!(matches!(r, Err(Error::Format(_))));
    let r = run_stream(
        frames.into_iter().map(Ok),
        &PipelineConfig::default(),
        &recolor(),
        |o| {
            if o.seq == 1 {
                Err(Error::Format("disk full".into()))
            } else {
                Ok(())
            }
        },
    );
    assert!(matches!(r, Err(Error::Format(_))));
}

#[test]
fn nn_output_matches_the_paired_target() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let plan = build_plan(tiny_params()).unwrap();
    capture_dataset(
        &plan,
        &GarmentSpec::measurement(),
        &RigOptions::default(),
        &root.join("m"),
    )
    .unwrap();
    capture_dataset(&plan, &striped_target(), &RigOptions::default(), &root.join("t")).unwrap();
    let pp = PostprocessConfig::default();
    let meas = CaptureDataset::open(root.join("m")).unwrap();
    let tgt = CaptureDataset::open(root.join("t")).unwrap();
    let mm = postprocess(&meas, &pp, &root.join("mm")).unwrap();
    let tm = postprocess(&tgt, &pp, &root.join("tm")).unwrap();
    let pairs = pair_records(&mm, &tm, 0.05, 512, &root.join("pairs")).unwrap();
    NNIndex::build(&pairs, 32)
        .unwrap()
        .save(root.join("pairs/index.gfnn"))
        .unwrap();
    let cfg = PipelineConfig {
        translator: TranslatorConfig::Nn {
            pairs: pairs.root.clone(),
            index: None,
        },
        ..PipelineConfig::default()
    };
    let t = cfg.translator.build().unwrap();
    for (m, tr) in meas.records.iter().zip(&tgt.records) {
        let frame = meas.load_frame(m).unwrap();
        let target = tgt.load_frame(tr).unwrap();
        let gt = SegmentationMap::read_pgm(meas.root.join(&m.gt_seg))
            .unwrap()
            .garment_mask();
        let (out, status) = process_frame(&frame, &cfg, t.as_ref());
        assert!(matches!(status, FrameStatus::Translated(Some(p)) if p.record_id == m.entry.index));
        let (mut sum, mut n) = (0u64, 0u64);
        for i in 0..512 * 512 {
            let (x, y) = (i % 512, i / 512);
            if gt.get(x, y) {
                for c in 0..3 {
                    sum += out.get(x, y)[c].abs_diff(target.color.get(x, y)[c]) as u64;
                }
                n += 3;
            } else {
                assert_eq!(out.get(x, y), frame.color.get(x, y));
            }
        }
        let mae = sum as f64 / n as f64;
        assert!(mae <= 3.0, "config {}: mae {mae:.3}", m.entry.index);
    }
}

#[test]
fn frame_sources_read_both_layouts() {
    let dir = tempfile::tempdir().unwrap();
    let frames = stream_frames(3);
    for (name, f) in &frames {
        netpbm::write_ppm(dir.path().join(format!("{name}.ppm")), &f.color).unwrap();
        netpbm::write_depth(dir.path().join(format!("{name}.pgm")), &f.depth).unwrap();
    }
    let src = FrameSource::open(dir.path()).unwrap();
    assert_eq!(src.names().collect::<Vec<_>>(), ["f00", "f01", "f02"]);
    let read: Vec<_> = src.frames().map(|r| r.unwrap().1).collect();
    for (a, (_, b)) in read.iter().zip(&frames) {
        assert_eq!(a.color, b.color);
        assert_eq!(a.depth, b.depth);
    }

    let cap = tempfile::tempdir().unwrap();
    let plan = build_plan(tiny_params()).unwrap();
    capture_dataset(&plan, &GarmentSpec::measurement(), &RigOptions::default(), cap.path()).unwrap();
    let src = FrameSource::open(cap.path()).unwrap().select(1, 4, Some(2));
    assert_eq!(src.names().collect::<Vec<_>>(), ["000001", "000005"]);
    let f = src.frames().next().unwrap().unwrap().1;
    assert_eq!(f.config_id, Some(1));
}

#[test]
fn small_bench_reports_self_hits() {
    let cfg = BenchConfig {
        plan: tiny_params(),
        frames: 4,
        reps: 2,
        ..BenchConfig::default()
    };
    let r = bench(&cfg, &PipelineConfig::default()).unwrap();
    assert_eq!(r.index_entries, 12);
    assert_eq!(r.frames, 4);
    assert_eq!(r.fps_per_rep.len(), 2);
    assert!(r.fps_median > 0.0 && r.fps_min > 0.0 && r.warmup_fps > 0.0);
    assert_eq!(r.self_hits, 4);
    assert!(r.stats.stages_overlap);
    assert_eq!(query_ids(12, 4), [0, 3, 6, 9]);
    assert!(bench(&BenchConfig { reps: 0, ..cfg }, &PipelineConfig::default()).is_err());
}
