//! File-spool adapter for a translator running in another process.
//!
//! For request `<stem>` the client writes `<stem>.seg.pgm` and
//! `<stem>.mask.pgm`, then the empty marker `<stem>.req`. The responder
//! answers with `<stem>.resp.ppm`. Every file appears via rename, so a
//! reader never sees a partial write.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::thread;
use std::time::{Duration, Instant};

use super::{TranslateRequest, TranslateResponse, Translator};
use crate::error::{Error, Result};
use crate::extraction::SegmentationMap;
use crate::imaging::netpbm;

const POLL: Duration = Duration::from_millis(2);

fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dst = dir.join(name);
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))
}

pub struct SpoolTranslator {
    dir: PathBuf,
    timeout: Duration,
    next: AtomicU64,
}

impl SpoolTranslator {
    pub fn new(dir: impl Into<PathBuf>, timeout: Duration) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Self {
            dir,
            timeout,
            next: AtomicU64::new(0),
        })
    }

    fn cleanup(&self, stem: &str) {
        for ext in ["seg.pgm", "mask.pgm", "req", "resp.ppm"] {
            let _ = fs::remove_file(self.dir.join(format!("{stem}.{ext}")));
        }
    }
}

impl Translator for SpoolTranslator {
    fn translate(&self, req: &TranslateRequest) -> Result<TranslateResponse> {
        req.check_nonempty()?;
        let n = self.next.fetch_add(1, Ordering::Relaxed);
        let stem = format!("{}-{n:08}", std::process::id());
        let (w, h) = req.dims();
        write_atomic(&self.dir, &format!("{stem}.seg.pgm"), &req.seg().to_pgm_bytes())?;
        write_atomic(
            &self.dir,
            &format!("{stem}.mask.pgm"),
            &netpbm::encode_pgm8(w, h, &req.mask().to_bytes()),
        )?;
        write_atomic(&self.dir, &format!("{stem}.req"), b"")?;

        let resp = self.dir.join(format!("{stem}.resp.ppm"));
        let start = Instant::now();
        let bytes = loop {
            match fs::read(&resp) {
                Ok(b) => break b,
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    if start.elapsed() >= self.timeout {
                        self.cleanup(&stem);
                        return Err(Error::Timeout(self.timeout));
                    }
                    thread::sleep(POLL);
                }
                Err(e) => {
                    self.cleanup(&stem);
                    return Err(Error::io(&resp, e));
                }
            }
        };
        self.cleanup(&stem);
        let image = netpbm::decode_ppm(&bytes).map_err(|e| Error::MalformedResponse(e.to_string()))?;
        if image.dims() != (w, h) {
            return Err(Error::MalformedResponse(format!(
                "response is {}x{}, request was {w}x{h}",
                image.width(),
                image.height()
            )));
        }
        TranslateResponse::checked(image, req, None)
    }
}

/// Answers every pending request in `dir` with `inner`; returns how many
/// were served.
pub fn serve_pending(dir: &Path, inner: &dyn Translator) -> Result<usize> {
    let mut stems: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().to_str()?.strip_suffix(".req").map(str::to_owned))
        .collect();
    stems.sort();
    let mut served = 0;
    for stem in stems {
        let resp_name = format!("{stem}.resp.ppm");
        if dir.join(&resp_name).exists() {
            continue;
        }
        let read = SegmentationMap::read_pgm(dir.join(format!("{stem}.seg.pgm")))
            .and_then(|s| Ok((s, netpbm::read_mask(dir.join(format!("{stem}.mask.pgm")))?)));
        let (seg, mask) = match read {
            Ok(v) => v,
            // the client gave up and cleaned up meanwhile
            Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => continue,
            Err(e) => return Err(e),
        };
        let out = inner.translate(&TranslateRequest::new(&seg, &mask)?)?;
        write_atomic(dir, &resp_name, &netpbm::encode_ppm(&out.image))?;
        served += 1;
    }
    Ok(served)
}

/// Serves requests until `stop` is set.
pub fn serve_until(dir: &Path, inner: &dyn Translator, stop: &AtomicBool) -> Result<()> {
    while !stop.load(Ordering::Relaxed) {
        if serve_pending(dir, inner)? == 0 {
            thread::sleep(POLL);
        }
    }
    Ok(())
}
