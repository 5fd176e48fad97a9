use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mirrorfit::dataset::crop::{apply_crop_labels, compute_crop, DEFAULT_OUT_SIZE};
use mirrorfit::extraction::extract;
use mirrorfit::runtime::process_frame;
use mirrorfit::translator::nn::{CachedPayloads, LabelGrid, NNIndex, NnTranslator, DEFAULT_GRID};
use mirrorfit::{ExtractionConfig, PipelineConfig, Rgb8Image};
use mirrorfit_bench::measurement_frame;

fn query_grid(id: u64) -> LabelGrid {
    let (seg, mask) = extract(&measurement_frame(id), &ExtractionConfig::default()).unwrap();
    let crop = compute_crop(&mask, 0.05, DEFAULT_OUT_SIZE).unwrap();
    LabelGrid::from_segmap(&apply_crop_labels(&seg, &crop).unwrap(), DEFAULT_GRID).unwrap()
}

/// An index of `n` entries cycling through a few real grids.
fn index(n: u64) -> NNIndex {
    let seeds: Vec<LabelGrid> = [0, 5_000, 20_000, 60_000].map(query_grid).into();
    let entries = (0..n).map(|i| (i, seeds[i as usize % seeds.len()].clone())).collect();
    NNIndex::from_grids(DEFAULT_GRID, entries).unwrap()
}

fn bench_extract(c: &mut Criterion) {
    let frame = measurement_frame(12_345);
    let cfg = ExtractionConfig::default();
    c.bench_function("extract_512", |b| b.iter(|| extract(black_box(&frame), &cfg).unwrap()));
}

fn bench_search(c: &mut Criterion) {
    let idx = index(10_000);
    let q = query_grid(12_345);
    c.bench_function("nn_search_10k", |b| b.iter(|| idx.search(black_box(&q)).unwrap()));
}

fn bench_process_frame(c: &mut Criterion) {
    let idx = index(10_000);
    let payload = Rgb8Image::filled(DEFAULT_OUT_SIZE, DEFAULT_OUT_SIZE, [40, 90, 200]).unwrap();
    // Only retrieved records are materialized.
    let store = CachedPayloads::new(move |_| Ok(payload.clone()));
    let translator = NnTranslator::new(idx, Box::new(store));
    let frame = measurement_frame(12_345);
    let cfg = PipelineConfig::default();
    c.bench_function("process_frame_nn_10k", |b| {
        b.iter(|| process_frame(black_box(&frame), &cfg, &translator))
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = bench_extract, bench_search, bench_process_frame
}
criterion_main!(benches);
