use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Latency summary of one stage, in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub samples: usize,
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub mean_ms: f64,
}

impl LatencySummary {
    /// Nearest-rank quantiles.
    pub fn from_samples(samples: &[Duration]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        ms.sort_by(f64::total_cmp);
        let rank = |q: f64| ms[((q * ms.len() as f64).ceil() as usize).clamp(1, ms.len()) - 1];
        Self {
            samples: ms.len(),
            p50_ms: rank(0.5),
            p95_ms: rank(0.95),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageLatencies {
    pub extract: LatencySummary,
    pub translate: LatencySummary,
    pub recompose: LatencySummary,
    /// From reading a frame to emitting its output.
    pub end_to_end: LatencySummary,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineStats {
    pub frames: usize,
    /// Frames passed through because no garment was found.
    pub skipped: usize,
    /// Frames passed through because a stage failed.
    pub failed: usize,
    pub wall_s: f64,
    /// `frames / wall_s`.
    pub fps: f64,
    pub stages: StageLatencies,
    /// Stages of different frames run concurrently, so stage latencies do
    /// not add up to the per-frame wall time.
    pub stages_overlap: bool,
    /// First few failure messages.
    pub errors: Vec<String>,
}

#[derive(Default)]
pub(crate) struct StatsRecorder {
    pub extract: Vec<Duration>,
    pub translate: Vec<Duration>,
    pub recompose: Vec<Duration>,
    pub end_to_end: Vec<Duration>,
    pub frames: usize,
    pub skipped: usize,
    pub failed: usize,
    pub errors: Vec<String>,
}

const MAX_ERRORS: usize = 16;

impl StatsRecorder {
    pub fn error(&mut self, msg: String) {
        self.failed += 1;
        if self.errors.len() < MAX_ERRORS {
            self.errors.push(msg);
        }
    }

    pub fn finish(self, wall: Duration) -> PipelineStats {
        let wall_s = wall.as_secs_f64();
        PipelineStats {
            frames: self.frames,
            skipped: self.skipped,
            failed: self.failed,
            wall_s,
            fps: if wall_s > 0.0 { self.frames as f64 / wall_s } else { 0.0 },
            stages: StageLatencies {
                extract: LatencySummary::from_samples(&self.extract),
                translate: LatencySummary::from_samples(&self.translate),
                recompose: LatencySummary::from_samples(&self.recompose),
                end_to_end: LatencySummary::from_samples(&self.end_to_end),
            },
            stages_overlap: true,
            errors: self.errors,
        }
    }
}
