mod common;

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::Duration;

use common::*;
use mirrorfit::dataset::{pair_records, postprocess, PairsDataset, PostprocessConfig};
use mirrorfit::rig::{capture_dataset, CaptureDataset};
use mirrorfit::translator::external::{serve_pending, serve_until};
use mirrorfit::translator::nn::{MemoryPayloads, PairsPayloads, DEFAULT_GRID};
use mirrorfit::translator::{
    similarity, LabelGrid, NNIndex, NnTranslator, RecolorTranslator, SpoolTranslator, TranslatorConfig,
};
use mirrorfit::{
    build_plan, BitMask, Error, GarmentSpec, Rgb8Image, RigOptions, SegmentationMap, TranslateRequest,
    TranslateResponse, Translator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair_set(root: &std::path::Path) -> PairsDataset {
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
    let mm = postprocess(&CaptureDataset::open(root.join("m")).unwrap(), &pp, &root.join("mm")).unwrap();
    let tm = postprocess(&CaptureDataset::open(root.join("t")).unwrap(), &pp, &root.join("tm")).unwrap();
    pair_records(&mm, &tm, 0.05, 512, &root.join("pairs")).unwrap()
}

fn request(pairs: &PairsDataset, k: usize) -> TranslateRequest {
    let s = pairs.load(&pairs.records[k]).unwrap();
    TranslateRequest::new(&s.seg, &s.mask).unwrap()
}

#[test]
fn nn_retrieves_every_record_from_its_own_labels() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let index = NNIndex::build(&pairs, DEFAULT_GRID).unwrap();
    assert_eq!(index.len(), pairs.records.len());
    index.save(pairs.root.join("index.gfnn")).unwrap();
    let t = TranslatorConfig::Nn {
        pairs: pairs.root.clone(),
        index: None,
    }
    .build()
    .unwrap();
    for k in 0..pairs.records.len() {
        let req = request(&pairs, k);
        let resp = t.translate(&req).unwrap();
        let p = resp.provenance.unwrap();
        assert_eq!(p.record_id, k as u64);
        assert_eq!(p.similarity, 1.0);
        let stored = pairs.load(&pairs.records[k]).unwrap();
        assert_eq!(
            resp.image,
            mirrorfit::imaging::mask_apply(&stored.target, req.mask()).unwrap()
        );
    }
}

#[test]
fn index_rebuild_and_reload_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let a = NNIndex::build(&pairs, 32).unwrap();
    let b = NNIndex::build(&PairsDataset::open(&pairs.root).unwrap(), 32).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());
    let path = dir.path().join("i.gfnn");
    a.save(&path).unwrap();
    assert_eq!(NNIndex::load(&path).unwrap().to_bytes(), a.to_bytes());
    let mut bytes = a.to_bytes();
    bytes[0] = b'X';
    assert!(NNIndex::from_bytes(&bytes).is_err());
}

fn perturb(cells: &[u8], rng: &mut ChaCha8Rng, flips: usize) -> Vec<u8> {
    let mut c = cells.to_vec();
    for _ in 0..flips {
        let i = rng.random_range(0..c.len());
        c[i] = rng.random_range(0..=8);
    }
    c
}

/// Mean per-label IoU over labels 1..=8 from plain cell comparisons.
fn oracle_similarity(a: &[u8], b: &[u8]) -> f64 {
    (1..=8u8)
        .map(|l| {
            let inter = a.iter().zip(b).filter(|&(&x, &y)| x == l && y == l).count();
            let union = a.iter().zip(b).filter(|&(&x, &y)| x == l || y == l).count();
            if union == 0 {
                1.0
            } else {
                inter as f64 / union as f64
            }
        })
        .sum::<f64>()
        / 8.0
}

#[test]
fn search_equals_brute_force_on_perturbed_queries() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let index = NNIndex::build(&pairs, 32).unwrap();
    let cells: Vec<Vec<u8>> = (0..index.len()).map(|p| index.grid(p).cells()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let base = rng.random_range(0..cells.len());
        let flips = rng.random_range(0..300);
        let q = perturb(&cells[base], &mut rng, flips);
        let got = index.search(&LabelGrid::from_cells(32, &q).unwrap()).unwrap();
        let mut best = (0u64, -1.0);
        for (p, c) in cells.iter().enumerate() {
            let s = oracle_similarity(&q, c);
            if s > best.1 {
                best = (index.ids()[p], s);
            }
        }
        assert_eq!(got.record_id, best.0);
        assert!((got.similarity - best.1).abs() < 1e-12);
        let direct = similarity(
            &LabelGrid::from_cells(32, &q).unwrap(),
            &index.grid(got.record_id as usize),
        )
        .unwrap();
        assert_eq!(direct, got.similarity);
    }
}

#[test]
fn nn_with_memory_payloads_and_empty_requests() {
    let seg = SegmentationMap::from_labels(64, 64, (0..64 * 64).map(|i| ((i % 64) / 8) as u8 + 1).collect()).unwrap();
    let grid = LabelGrid::from_segmap(&seg, 8).unwrap();
    let index = NNIndex::from_grids(8, vec![(3, grid)]).unwrap();
    let payload = Rgb8Image::filled(64, 64, [200, 10, 10]).unwrap();
    let t = NnTranslator::new(index, Box::new(MemoryPayloads(HashMap::from([(3, payload)]))));
    let req = TranslateRequest::new(&seg, &BitMask::full(64, 64)).unwrap();
    assert_eq!(t.translate(&req).unwrap().provenance.unwrap().record_id, 3);
    let empty = TranslateRequest::new(&seg, &BitMask::new(64, 64)).unwrap();
    assert!(matches!(t.translate(&empty), Err(Error::EmptyRequest)));
    assert!(NNIndex::from_grids(8, vec![]).unwrap().is_empty());
}

#[test]
fn missing_payload_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let pairs = pair_set(dir.path());
    let store = PairsPayloads::open(&pairs.root).unwrap();
    use mirrorfit::translator::PayloadStore;
    assert!(matches!(store.payload(999), Err(Error::OutOfRange { .. })));
}

fn spool_request() -> TranslateRequest {
    let (_, gt) = measurement_at(&full_plan(), 777);
    let crop = mirrorfit::dataset::compute_crop(&gt.garment, 0.05, 128).unwrap();
    let seg = mirrorfit::dataset::crop::apply_crop_labels(&gt.segmentation, &crop).unwrap();
    TranslateRequest::new(&seg, &seg.garment_mask()).unwrap()
}

#[test]
fn spool_loopback_matches_direct_recolor() {
    let dir = tempfile::tempdir().unwrap();
    let recolor = RecolorTranslator::new([40, 90, 200]);
    let stop = AtomicBool::new(false);
    let req = spool_request();
    let direct = recolor.translate(&req).unwrap();
    let got: Vec<TranslateResponse> = thread::scope(|s| {
        s.spawn(|| serve_until(dir.path(), &recolor, &stop).unwrap());
        let client = SpoolTranslator::new(dir.path(), Duration::from_secs(10)).unwrap();
        let out = (0..3).map(|_| client.translate(&req).unwrap()).collect();
        stop.store(true, Ordering::Relaxed);
        out
    });
    for r in got {
        assert_eq!(r.image, direct.image);
        assert_eq!(r.provenance, None);
    }
    assert_eq!(
        std::fs::read_dir(dir.path()).unwrap().count(),
        0,
        "spool left files behind"
    );
}

/// Responds to everything with one fixed image.
struct Echo(Rgb8Image);

impl Translator for Echo {
    fn translate(&self, _: &TranslateRequest) -> mirrorfit::Result<TranslateResponse> {
        Ok(TranslateResponse {
            image: self.0.clone(),
            provenance: None,
        })
    }
}

#[test]
fn spool_checks_response_dimensions() {
    let req = spool_request();
    let (w, h) = req.dims();
    for (img, ok) in [
        (Rgb8Image::filled(w, h, [9, 9, 9]).unwrap(), true),
        (Rgb8Image::filled(w + 1, h, [9, 9, 9]).unwrap(), false),
    ] {
        let dir = tempfile::tempdir().unwrap();
        let stop = AtomicBool::new(false);
        let echo = Echo(img.clone());
        let r = thread::scope(|s| {
            s.spawn(|| serve_until(dir.path(), &echo, &stop).unwrap());
            let r = SpoolTranslator::new(dir.path(), Duration::from_secs(10))
                .unwrap()
                .translate(&req);
            stop.store(true, Ordering::Relaxed);
            r
        });
        match r {
            Ok(resp) => {
                assert!(ok);
                assert_eq!(resp.image, img);
            }
            Err(e) => {
                assert!(!ok);
                assert!(matches!(e, Error::MalformedResponse(_)), "{e}");
            }
        }
    }
}

#[test]
fn dead_spool_times_out_and_cleans_up() {
    let dir = tempfile::tempdir().unwrap();
    let client = SpoolTranslator::new(dir.path(), Duration::from_millis(60)).unwrap();
    let r = client.translate(&spool_request());
    assert!(matches!(r, Err(Error::Timeout(_))));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    assert_eq!(
        serve_pending(dir.path(), &RecolorTranslator::new([1, 2, 3])).unwrap(),
        0
    );
}
