//! Segmentation predictors plugged into the two-stage pipeline.
//!
//! External predictors speak a file protocol: the pipeline writes
//! `input.rvol` + `input.json` into a fresh exchange directory, runs the
//! command with that directory as its only argument, and reads back
//! `output.rvol` + `output.json` of the same shape with values in `[0, 1]`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::distance::{boundary_mask, Connectivity};
use crate::error::{Error, Result};
use crate::io::rvol::{read_rvol, write_volume};
use crate::pipeline::geometry::{crop, nearest_index, CropSpec};
use crate::volume::{Mask, Shape3, Volume};

pub const TIMEOUT_ENV: &str = "VOXELSEG_PREDICTOR_TIMEOUT_S";
pub const DEFAULT_TIMEOUT_S: u64 = 600;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stage {
    /// Localization on the resized full image.
    Coarse,
    /// Segmentation of the full-resolution crop.
    Fine,
}

impl Stage {
    pub fn label(self) -> &'static str {
        match self {
            Stage::Coarse => "stage 1",
            Stage::Fine => "stage 2",
        }
    }
}

/// What a predictor is asked to segment. `crop` is set for the fine stage.
#[derive(Clone, Copy, Debug)]
pub struct PredictRequest<'a> {
    pub stage: Stage,
    pub input: &'a Volume,
    pub original_shape: Shape3,
    pub crop: Option<&'a CropSpec>,
}

pub trait Predictor {
    fn name(&self) -> String;

    /// Probability volume of the same shape as `req.input`.
    fn predict(&self, req: &PredictRequest<'_>) -> Result<Volume>;
}

/// Timeout from `VOXELSEG_PREDICTOR_TIMEOUT_S`, default 600 s.
pub fn timeout_from_env() -> Duration {
    let secs = std::env::var(TIMEOUT_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|s| *s > 0.0 && s.is_finite());
    match secs {
        Some(s) => Duration::from_secs_f64(s),
        None => Duration::from_secs(DEFAULT_TIMEOUT_S),
    }
}

/// A command honoring the exchange-directory protocol.
#[derive(Clone, Debug)]
pub struct ExternalPredictor {
    pub program: PathBuf,
    /// Parent for exchange directories; the system temp dir when unset.
    pub exchange_root: Option<PathBuf>,
    pub timeout: Duration,
    /// Run twice and warn if the outputs differ.
    pub check_determinism: bool,
}

impl ExternalPredictor {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalPredictor {
            program: program.into(),
            exchange_root: None,
            timeout: timeout_from_env(),
            check_determinism: false,
        }
    }

    fn fail(&self, reason: impl Into<String>) -> Error {
        Error::Predictor {
            command: self.program.display().to_string(),
            reason: reason.into(),
        }
    }

    fn exchange_dir(&self) -> Result<tempfile::TempDir> {
        let mut b = tempfile::Builder::new();
        b.prefix("voxelseg-exchange-");
        match &self.exchange_root {
            Some(root) => b.tempdir_in(root).map_err(|e| Error::io(root, e)),
            None => b.tempdir().map_err(|e| Error::io(std::env::temp_dir(), e)),
        }
    }

    /// One protocol round trip; returns the volume and the raw output bytes.
    fn invoke(&self, input: &Volume) -> Result<(Volume, Vec<u8>)> {
        let dir = self.exchange_dir()?;
        write_volume(dir.path().join("input.rvol"), input)?;
        let log_path = dir.path().join("predictor.log");
        let log = fs::File::create(&log_path).map_err(|e| Error::io(&log_path, e))?;
        let log_err = log.try_clone().map_err(|e| Error::io(&log_path, e))?;

        let mut child = Command::new(&self.program)
            .arg(dir.path())
            .stdin(Stdio::null())
            .stdout(log)
            .stderr(log_err)
            .spawn()
            .map_err(|e| self.fail(format!("failed to start: {e}")))?;

        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(self.fail(format!(
                        "timed out after {:.1} s",
                        self.timeout.as_secs_f64()
                    )));
                }
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(e) => return Err(self.fail(format!("wait failed: {e}"))),
            }
        };
        if !status.success() {
            return Err(self.fail(format!("{status}{}", log_tail(&log_path))));
        }

        let out_path = dir.path().join("output.rvol");
        let output = read_rvol(&out_path)
            .map_err(|e| self.fail(format!("malformed output: {e}")))?
            .into_volume();
        let raw = fs::read(&out_path).map_err(|e| Error::io(&out_path, e))?;
        Ok((output, raw))
    }
}

fn log_tail(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap_or_default();
    let text = text.trim();
    if text.is_empty() {
        return String::new();
    }
    let start = text.len().saturating_sub(400);
    let start = (start..text.len())
        .find(|&i| text.is_char_boundary(i))
        .unwrap_or(text.len());
    format!("; output: {}", &text[start..])
}

impl Predictor for ExternalPredictor {
    fn name(&self) -> String {
        self.program.display().to_string()
    }

    fn predict(&self, req: &PredictRequest<'_>) -> Result<Volume> {
        let (out, raw) = self.invoke(req.input)?;
        if self.check_determinism {
            let (_, again) = self.invoke(req.input)?;
            if again != raw {
                warn!(
                    "predictor {} produced different output on identical input",
                    self.name()
                );
            }
        }
        Ok(out)
    }
}

/// Reference-mask predictor with seeded boundary noise, for tests and demos
/// that need a pipeline without a network.
#[derive(Clone, Debug)]
pub struct OraclePerturb {
    pub reference: Mask,
    pub seed: u64,
    /// Chance that each boundary voxel (either label) is flipped.
    pub flip_probability: f64,
    /// Probability assigned to foreground; background gets `1 - confidence`.
    pub confidence: f32,
}

impl OraclePerturb {
    pub fn new(reference: Mask, seed: u64) -> Self {
        OraclePerturb {
            reference,
            seed,
            flip_probability: 0.1,
            confidence: 0.9,
        }
    }

    fn view(&self, req: &PredictRequest<'_>) -> Result<Mask> {
        let r = &self.reference;
        if r.shape() != req.original_shape {
            return Err(Error::ShapeMismatch {
                left: r.shape(),
                right: req.original_shape,
            });
        }
        let target = req.input.shape();
        match req.stage {
            Stage::Coarse => {
                let (src, dst) = (r.shape(), target);
                Ok(Mask::from_fn(dst, |x, y, z| {
                    r.get(
                        nearest_index(x, src.nx(), dst.nx()),
                        nearest_index(y, src.ny(), dst.ny()),
                        nearest_index(z, src.nz(), dst.nz()),
                    )
                }))
            }
            Stage::Fine => {
                let spec = req.crop.ok_or_else(|| {
                    Error::InvalidArgument("fine-stage request without a crop window".into())
                })?;
                Mask::from_binary_volume(&crop(&r.to_volume(), spec)?)
            }
        }
    }

    pub fn perturb(&self, m: &Mask, stage: Stage) -> Mask {
        let salt = match stage {
            Stage::Coarse => 0x5eed_0001,
            Stage::Fine => 0x5eed_0002,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ salt);
        let edge = boundary_mask(m, Connectivity::TwentySix);
        let mut out = m.clone();
        let shape = m.shape();
        for i in 0..shape.len() {
            if edge.is_set(i) && rng.random_bool(self.flip_probability) {
                let (x, y, z) = shape.coords(i);
                out.set(x, y, z, !m.is_set(i));
            }
        }
        out
    }
}

impl Predictor for OraclePerturb {
    fn name(&self) -> String {
        format!("oracle-perturb(seed={})", self.seed)
    }

    fn predict(&self, req: &PredictRequest<'_>) -> Result<Volume> {
        let m = self.perturb(&self.view(req)?, req.stage);
        let (hi, lo) = (self.confidence, 1.0 - self.confidence);
        m.to_volume().map(|v| if v > 0.5 { hi } else { lo })
    }
}

/// Otsu threshold on the input intensities; bright voxels are foreground.
#[derive(Clone, Copy, Debug, Default)]
pub struct IntensityThreshold;

/// Otsu's between-class-variance threshold over a 256-bin histogram.
pub fn otsu_threshold(v: &Volume) -> Option<f32> {
    const BINS: usize = 256;
    let (lo, hi) = v.min_max();
    if hi <= lo {
        return None;
    }
    let width = (hi as f64 - lo as f64) / BINS as f64;
    let mut hist = [0u64; BINS];
    for &x in v.data() {
        let b = (((x as f64 - lo as f64) / width) as usize).min(BINS - 1);
        hist[b] += 1;
    }
    let total = v.data().len() as f64;
    let weighted: f64 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as f64 * c as f64)
        .sum();
    let (mut w0, mut sum0) = (0.0f64, 0.0f64);
    let (mut best, mut best_bin) = (-1.0f64, 0usize);
    for (i, &c) in hist.iter().enumerate().take(BINS - 1) {
        w0 += c as f64;
        sum0 += i as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (weighted - sum0) / w1);
        let between = w0 * w1 * (m0 - m1).powi(2);
        if between > best {
            best = between;
            best_bin = i;
        }
    }
    Some((lo as f64 + width * (best_bin + 1) as f64) as f32)
}

impl Predictor for IntensityThreshold {
    fn name(&self) -> String {
        "intensity-threshold".into()
    }

    fn predict(&self, req: &PredictRequest<'_>) -> Result<Volume> {
        let input = req.input;
        Ok(match otsu_threshold(input) {
            Some(t) => input.map(|x| if x >= t { 1.0 } else { 0.0 })?,
            None => Volume::zeros(input.shape()),
        })
    }
}
