//! `mirrorfit`: the capture-to-try-on workflow as subcommands.
//!
//! Exit codes: 0 success, 1 invalid input or configuration, 2 failure while
//! running. Diagnostics go to stderr; results go to stdout or files.

mod config;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mirrorfit::dataset::augment::{augment_dataset, AUGMENTED_FILE};
use mirrorfit::dataset::pairing::MaskSet;
use mirrorfit::dataset::{pair_records, postprocess, PairsDataset};
use mirrorfit::imaging::netpbm;
use mirrorfit::plan::PlanEntry;
use mirrorfit::rig::{capture_dataset, CaptureDataset, SUMMARY_FILE};
use mirrorfit::runtime::bench::{bench, bench_frames};
use mirrorfit::runtime::{run_stream, FrameSource, FrameStatus};
use mirrorfit::translator::{NNIndex, TranslatorConfig, DEFAULT_INDEX_FILE};
use mirrorfit::{build_plan, GarmentSpec, PipelineConfig};
use serde::Serialize;

use config::GlobalConfig;

/// A user error that is not a library validation error.
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

#[derive(Parser, Debug)]
#[command(name = "mirrorfit", version, about = "Measurement-garment virtual try-on workflow")]
struct Cli {
    /// JSON configuration; every section is optional.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// More log output on stderr; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the capture plan as JSON lines.
    Plan {
        /// Print only a summary object with the frame count.
        #[arg(long)]
        count: bool,
    },
    /// Render a capture of the configured plan.
    SynthCapture {
        /// `measurement`, `target`, or a garment spec JSON file.
        #[arg(long, default_value = "measurement")]
        garment: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Segment every frame of a capture.
    Postprocess {
        #[arg(long)]
        capture: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build aligned pairs from a measurement and a target capture or mask
    /// set.
    Pair {
        #[arg(long)]
        measurement: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write augmented copies of a pair set.
    Augment {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        copies: Option<u32>,
    },
    /// Build the retrieval index of a pair set.
    BuildIndex {
        #[arg(long)]
        pairs: PathBuf,
        /// Defaults to `<pairs>/index.gfnn`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Run the try-on pipeline over a directory of frames.
    Tryon {
        #[command(flatten)]
        input: InputArgs,
        /// Receives `<name>.ppm` per frame and `frames.jsonl`.
        #[arg(long)]
        out: PathBuf,
        /// Pipeline stats JSON; printed to stdout when absent.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
    /// Measure throughput, over rendered frames or an input directory.
    Bench {
        #[command(flatten)]
        input: InputArgs,
        /// Query frames; overrides `bench.frames` or caps the input.
        #[arg(long)]
        frames: Option<usize>,
        /// Timed passes after one warm-up pass.
        #[arg(long)]
        reps: Option<usize>,
        /// Report JSON; printed to stdout when absent.
        #[arg(long)]
        stats: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Capture directory or flat directory of `<name>.ppm` + `<name>.pgm`.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Pair set to retrieve from; selects the nearest-neighbor translator.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// Index file; its directory is the pair set unless `--pairs` is given.
    #[arg(long)]
    index: Option<PathBuf>,
    /// First frame to use, in source order.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Use every N-th frame from `--start`.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Stop after this many frames.
    #[arg(long)]
    limit: Option<usize>,
}

impl InputArgs {
    fn pipeline(&self, cfg: &GlobalConfig) -> anyhow::Result<PipelineConfig> {
        let mut pipe = cfg.pipeline.clone();
        let pairs = match (&self.pairs, &self.index) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(i)) => Some(i.parent().map(Path::to_path_buf).unwrap_or_default()),
            (None, None) => None,
        };
        if let Some(pairs) = pairs {
            pipe.translator = TranslatorConfig::Nn {
                pairs,
                index: self.index.clone(),
            };
        }
        Ok(pipe)
    }

    fn source(&self) -> anyhow::Result<Option<FrameSource>> {
        let Some(dir) = &self.input else {
            return Ok(None);
        };
        if !dir.is_dir() {
            return Err(Invalid(format!("input {} is not a directory", dir.display())).into());
        }
        let src = FrameSource::open(dir)?.select(self.start, self.stride, self.limit);
        if src.is_empty() {
            return Err(Invalid(format!("no frames selected from {}", dir.display())).into());
        }
        Ok(Some(src))
    }
}

fn print_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn write_json_file<T: Serialize>(path: &Path, v: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn emit<T: Serialize>(path: Option<&Path>, v: &T) -> anyhow::Result<()> {
    match path {
        Some(p) => write_json_file(p, v),
        None => print_json(v),
    }
}

fn garment_spec(name: &str, cfg: &GlobalConfig) -> anyhow::Result<GarmentSpec> {
    Ok(match name {
        "measurement" => cfg.garments.measurement.clone(),
        "target" => cfg.garments.target.clone(),
        path => GarmentSpec::load(path).map_err(|e| match e {
            mirrorfit::Error::Io { .. } | mirrorfit::Error::Json { .. } => {
                anyhow::Error::from(Invalid(format!("garment {path}: {e}")))
            }
            e => e.into(),
        })?,
    })
}

/// Opens a mask set, postprocessing a capture directory into
/// `<out>/<name>` first when needed.
fn mask_set(dir: &Path, cfg: &GlobalConfig, out: &Path, name: &str) -> anyhow::Result<MaskSet> {
    if dir.join(SUMMARY_FILE).exists() {
        let capture = CaptureDataset::open(dir)?;
        let masks = out.join(name);
        log::info!("segmenting {} into {}", dir.display(), masks.display());
        return Ok(postprocess(&capture, &cfg.postprocess, &masks)?);
    }
    MaskSet::open(dir).map_err(|e| match e {
        mirrorfit::Error::Io { .. } => Invalid(format!("{} is neither a capture nor a mask set", dir.display())).into(),
        e => e.into(),
    })
}

#[derive(Serialize)]
struct FrameLine<'a> {
    seq: usize,
    name: &'a str,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    record_id: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    similarity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'a str>,
}

fn frame_line<'a>(seq: usize, name: &'a str, status: &'a FrameStatus) -> FrameLine<'a> {
    let (status, prov, reason) = match status {
        FrameStatus::Translated(p) => ("translated", *p, None),
        FrameStatus::Skipped(r) => ("skipped", None, Some(r.as_str())),
        FrameStatus::Failed(r) => ("failed", None, Some(r.as_str())),
    };
    FrameLine {
        seq,
        name,
        status,
        record_id: prov.map(|p| p.record_id),
        similarity: prov.map(|p| p.similarity),
        reason,
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = GlobalConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Plan { count } => {
            let plan = build_plan(cfg.plan)?;
            if count {
                return print_json(&serde_json::json!({ "total_frames": plan.total_frames() }));
            }
            let mut out = BufWriter::new(io::stdout().lock());
            for (index, config) in plan.iter() {
                serde_json::to_writer(&mut out, &PlanEntry { index, config })?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
        Command::SynthCapture { garment, out } => {
            let spec = garment_spec(&garment, &cfg)?;
            let plan = build_plan(cfg.plan)?;
            log::info!("rendering {} frames into {}", plan.total_frames(), out.display());
            print_json(&capture_dataset(&plan, &spec, &cfg.rig, &out)?)?;
        }
        Command::Postprocess { capture, out } => {
            let capture = CaptureDataset::open(&capture)?;
            print_json(&postprocess(&capture, &cfg.postprocess, &out)?.summary)?;
        }
        Command::Pair {
            measurement,
            target,
            out,
        } => {
            let m = mask_set(&measurement, &cfg, &out, "masks_measurement")?;
            let t = mask_set(&target, &cfg, &out, "masks_target")?;
            let pp = &cfg.postprocess;
            let pairs = pair_records(&m, &t, pp.border_frac, pp.out_size, &out)?;
            print_json(&serde_json::json!({
                "pairs": pairs.records.len(),
                "skipped_measurement": m.summary.skipped,
                "skipped_target": t.summary.skipped,
            }))?;
        }
        Command::Augment {
            pairs,
            out,
            seed,
            copies,
        } => {
            let pairs = PairsDataset::open(&pairs)?;
            let mut aug = cfg.augment.clone();
            if let Some(c) = copies {
                aug.copies = c;
            }
            let records = augment_dataset(&pairs, &aug, seed.unwrap_or(cfg.seed), &out)?;
            print_json(&serde_json::json!({ "records": records.len(), "manifest": out.join(AUGMENTED_FILE) }))?;
        }
        Command::BuildIndex { pairs, out, grid } => {
            let ds = PairsDataset::open(&pairs)?;
            let index = NNIndex::build(&ds, grid.unwrap_or(cfg.index.grid_size))?;
            let path = out.unwrap_or_else(|| pairs.join(DEFAULT_INDEX_FILE));
            index.save(&path)?;
            print_json(&serde_json::json!({ "entries": index.len(), "grid_size": index.grid_size(), "path": path }))?;
        }
        Command::Tryon { input, out, stats } => {
            let pipe = input.pipeline(&cfg)?;
            pipe.validate()?;
            let src = input.source()?.ok_or_else(|| Invalid("tryon needs --input".into()))?;
            let translator = pipe.translator.build()?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            let lines_path = out.join("frames.jsonl");
            let mut lines = BufWriter::new(
                fs::File::create(&lines_path).with_context(|| format!("creating {}", lines_path.display()))?,
            );
            let report = run_stream(src.frames(), &pipe, translator.as_ref(), |o| {
                netpbm::write_ppm(out.join(format!("{}.ppm", o.name)), &o.image)?;
                let line = serde_json::to_string(&frame_line(o.seq, &o.name, &o.status)).expect("serializable");
                writeln!(lines, "{line}").map_err(|e| mirrorfit::Error::Io {
                    path: lines_path.clone(),
                    source: e,
                })
            })?;
            lines.flush()?;
            emit(stats.as_deref(), &report)?;
        }
        Command::Bench {
            input,
            frames,
            reps,
            stats,
        } => {
            let report = match input.source()? {
                None => {
                    let mut b = cfg.bench.clone();
                    b.frames = frames.unwrap_or(b.frames);
                    b.reps = reps.unwrap_or(b.reps);
                    bench(&b, &input.pipeline(&cfg)?)?
                }
                Some(src) => {
                    let src = match frames {
                        Some(n) => src.select(0, 1, Some(n)),
                        None => src,
                    };
                    let pipe = input.pipeline(&cfg)?;
                    pipe.validate()?;
                    let translator = pipe.translator.build()?;
                    let loaded = src.frames().collect::<mirrorfit::Result<Vec<_>>>()?;
                    bench_frames(&loaded, &pipe, translator.as_ref(), reps.unwrap_or(cfg.bench.reps))?
                }
            };
            emit(stats.as_deref(), &report)?;
        }
    }
    Ok(())
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let invalid = e.chain().any(|c| {
        c.downcast_ref::<Invalid>().is_some() || c.downcast_ref::<mirrorfit::Error>().is_some_and(|e| e.is_validation())
    });
    if invalid {
        1
    } else {
        2
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let kind = c.downcast_ref::<io::Error>().map(io::Error::kind).or_else(|| {
            c.downcast_ref::<serde_json::Error>()
                .and_then(serde_json::Error::io_error_kind)
        });
        kind == Some(io::ErrorKind::BrokenPipe)
    })
}

/// The error chain, skipping causes already spelled out by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut text = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !text.ends_with(&msg) {
            if !text.is_empty() {
                text.push_str(": ");
            }
            text.push_str(&msg);
        }
    }
    text
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        // A reader that stops early (`| head`) is not a failure.
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}
