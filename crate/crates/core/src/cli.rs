//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 data error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use serde::{Deserialize, Serialize};

use crate::components::{count_stats, label_components, largest_component};
use crate::distance::{boundary_mask, distance_to_opposite_label, Connectivity, DistanceMap};
use crate::ensemble::{ensemble_vote, EnsembleConfig};
use crate::error::{Error, Result};
use crate::filter::contour;
use crate::io::rvol::sidecar_path;
use crate::io::{load_mask, load_volume, write_mask, write_volume};
use crate::loss::{contour_loss, soft_dice_loss, ContourLossConfig, DEFAULT_DRAIN};
use crate::metrics::evaluate;
use crate::optimize::{
    fit_volume, make_phantom, InitKind, OptimizeConfig, PhantomKind, DEFAULT_INIT_LOGIT,
    DEFAULT_LEARNING_RATE, DEFAULT_NOISE_STD,
};
use crate::pipeline::{
    crop, normalize_intensity, paste_back, resize_trilinear, run_two_stage, CropSpec,
    ExternalPredictor, IntensityThreshold, Normalization, OraclePerturb, PipelineConfig,
    PredictRequest, Predictor, Stage,
};
use crate::volume::{threshold, Shape3};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "voxelseg", version, about = "Volumetric segmentation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Distance of every voxel to the nearest voxel of the opposite label.
    Edt {
        mask: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the boundary voxels as a mask.
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[arg(long, default_value_t = 26, value_parser = parse_connectivity)]
        connectivity: u32,
    },
    /// Summed absolute Sobel responses.
    Contour {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Evaluate a loss of a probability volume against a mask.
    Loss {
        #[arg(value_enum)]
        kind: LossKind,
        prediction: PathBuf,
        target: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DRAIN, allow_hyphen_values = true)]
        drain: f32,
        #[arg(long)]
        distance_cap: Option<f32>,
        #[arg(long, default_value_t = 1.0)]
        smooth: f64,
        /// Write the gradient with respect to the prediction.
        #[arg(long)]
        gradient: Option<PathBuf>,
    },
    /// Overlap and surface-distance metrics of a prediction against truth.
    Metrics {
        prediction: PathBuf,
        truth: PathBuf,
        /// Threshold applied when the prediction is not binary.
        #[arg(long)]
        threshold: Option<f32>,
        /// Structured JSON report.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Connected-component counts; optionally keep the largest component.
    Components {
        #[arg(required = true)]
        masks: Vec<PathBuf>,
        #[arg(long, default_value_t = 26, value_parser = parse_connectivity)]
        connectivity: u32,
        /// Largest component of the first mask.
        #[arg(long)]
        largest: Option<PathBuf>,
    },
    /// Extract a window; padding outside the image is zero.
    Crop {
        image: PathBuf,
        /// Window centre as x,y,z.
        #[arg(long, value_parser = parse_triple)]
        center: [i64; 3],
        #[arg(long, value_parser = parse_shape)]
        size: Shape3,
        #[arg(short, long)]
        output: PathBuf,
        /// JSON file recording the window, consumed by `paste`.
        #[arg(long)]
        spec: PathBuf,
    },
    /// Place a cropped volume back into an empty image.
    Paste {
        cropped: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Two-stage coarse-to-fine segmentation.
    Pipeline {
        image: PathBuf,
        /// `oracle-perturb:MASK[:SEED]`, `intensity-threshold`, or a command.
        #[arg(long)]
        stage1: String,
        #[arg(long)]
        stage2: String,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        probability: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Evaluate the result against this mask.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, value_parser = parse_shape, default_value = "128x128x128")]
        coarse_shape: Shape3,
        #[arg(long, value_parser = parse_shape, default_value = "224x144x96")]
        crop_shape: Shape3,
        #[arg(long, default_value_t = 0.5)]
        threshold: f32,
        /// Default seed for oracle predictors without one.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = NormArg::Zscore)]
        normalization: NormArg,
    },
    /// Sum probability volumes and threshold the sum.
    Ensemble {
        /// Text file with one input path per line.
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 5.5)]
        threshold: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fit a logit volume to a phantom by gradient descent.
    Demo {
        #[arg(long, default_value = "sphere", value_parser = parse_phantom)]
        kind: PhantomKind,
        #[arg(long, value_parser = parse_shape, default_value = "16")]
        shape: Shape3,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_LEARNING_RATE)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1.0)]
        w_contour: f64,
        #[arg(long, default_value_t = 0.0)]
        w_dice: f64,
        #[arg(long, default_value_t = DEFAULT_DRAIN, allow_hyphen_values = true)]
        drain: f32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = InitArg::Noise)]
        init: InitArg,
        #[arg(long, default_value_t = DEFAULT_INIT_LOGIT, allow_hyphen_values = true)]
        init_logit: f64,
        #[arg(long, default_value_t = DEFAULT_NOISE_STD)]
        noise_std: f64,
        /// step,loss CSV; stdout when omitted.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Final probability volume.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Trilinear resampling to a new grid.
    Resize {
        input: PathBuf,
        #[arg(long, value_parser = parse_shape)]
        shape: Shape3,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Intensity normalization.
    Normalize {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = NormArg::Zscore)]
        mode: NormArg,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Binarize a volume with an inclusive threshold.
    Threshold {
        input: PathBuf,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        threshold: f32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Write a synthetic phantom mask.
    Phantom {
        #[arg(long, default_value = "sphere", value_parser = parse_phantom)]
        kind: PhantomKind,
        #[arg(long, value_parser = parse_shape, default_value = "16")]
        shape: Shape3,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Serve one exchange-directory request with a built-in predictor.
    Predict {
        #[arg(long, value_enum)]
        builtin: Builtin,
        dir: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LossKind {
    Contour,
    Dice,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Zscore,
    Minmax,
}

impl From<NormArg> for Normalization {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Zscore => Normalization::ZScore,
            NormArg::Minmax => Normalization::MinMax,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InitArg {
    UniformLogit,
    Noise,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Builtin {
    IntensityThreshold,
}

fn parse_connectivity(s: &str) -> std::result::Result<u32, String> {
    match s {
        "6" => Ok(6),
        "26" => Ok(26),
        _ => Err(format!("connectivity must be 6 or 26, got {s}")),
    }
}

/// `N` for a cube or `AxBxC`.
fn parse_shape(s: &str) -> std::result::Result<Shape3, String> {
    let parts: Vec<usize> = s
        .split('x')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{s:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    let dims = match parts[..] {
        [n] => [n, n, n],
        [a, b, c] => [a, b, c],
        _ => return Err(format!("expected N or AxBxC, got {s:?}")),
    };
    Shape3::try_from(dims).map_err(|e| e.to_string())
}

fn parse_triple(s: &str) -> std::result::Result<[i64; 3], String> {
    let v: Vec<i64> = s
        .split(',')
        .map(|p| p.trim().parse::<i64>().map_err(|e| format!("{s:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    v.try_into()
        .map_err(|_| format!("expected x,y,z, got {s:?}"))
}

fn parse_phantom(s: &str) -> std::result::Result<PhantomKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Data(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Data(e)
    }
}

type CliResult = std::result::Result<(), Failure>;

/// Parses `args` (program name first) and runs the command, writing reports
/// to stdout and diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_USAGE
        }
        Err(Failure::Data(e)) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_DATA
        }
    }
}

fn emit(out: &mut dyn Write, text: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable report");
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Header {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

fn connectivity(n: u32) -> Connectivity {
    Connectivity::from_count(n).expect("validated by the parser")
}

/// Window plus the shape of the image it was cut from.
#[derive(Debug, Serialize, Deserialize)]
struct CropFile {
    image_shape: Shape3,
    #[serde(flatten)]
    spec: CropSpec,
}

#[derive(Serialize)]
struct PipelineReport {
    stage1: String,
    stage2: String,
    crop: CropSpec,
    foreground: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<crate::metrics::MetricsReport>,
}

fn predictor_from_spec(
    spec: &str,
    default_seed: u64,
) -> std::result::Result<Box<dyn Predictor>, Failure> {
    if spec == "intensity-threshold" {
        return Ok(Box::new(IntensityThreshold));
    }
    if let Some(rest) = spec.strip_prefix("oracle-perturb:") {
        let (path, seed) = match rest.rsplit_once(':') {
            Some((p, s)) if !p.is_empty() && s.parse::<u64>().is_ok() => {
                (p, s.parse::<u64>().expect("checked"))
            }
            _ => (rest, default_seed),
        };
        if path.is_empty() {
            return Err(Failure::Usage(
                "oracle-perturb needs a reference mask path".into(),
            ));
        }
        return Ok(Box::new(OraclePerturb::new(load_mask(path)?, seed)));
    }
    if spec.is_empty() {
        return Err(Failure::Usage("empty predictor spec".into()));
    }
    Ok(Box::new(ExternalPredictor::new(spec)))
}

fn execute(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::Edt {
            mask,
            output,
            boundary,
            connectivity: conn,
        } => {
            let m = load_mask(&mask)?;
            let d = distance_to_opposite_label(&m)?;
            write_volume(&output, &d.to_volume())?;
            if let Some(path) = boundary {
                let b = boundary_mask(&m, connectivity(conn));
                write_mask(&path, &b)?;
                emit(out, format_args!("boundary_voxels={}", b.count()))?;
            }
            let (_, max) = d.to_volume().min_max();
            emit(out, format_args!("max_distance={max}"))?;
        }
        Command::Contour { input, output } => {
            let v = load_volume(&input)?;
            let c = contour(&v);
            emit(out, format_args!("contour_sum={}", crate::volume::sum(&c)))?;
            write_volume(&output, &c)?;
        }
        Command::Loss {
            kind,
            prediction,
            target,
            drain,
            distance_cap,
            smooth,
            gradient,
        } => {
            let p = load_volume(&prediction)?;
            let m = load_mask(&target)?;
            let r = match kind {
                LossKind::Contour => {
                    let d: DistanceMap = distance_to_opposite_label(&m)?;
                    let cfg = ContourLossConfig {
                        drain,
                        distance_cap,
                    };
                    contour_loss(&p, &d, &cfg)?
                }
                LossKind::Dice => {
                    if smooth.is_nan() || smooth <= 0.0 {
                        return Err(Failure::Usage("--smooth must be positive".into()));
                    }
                    soft_dice_loss(&p, &m, smooth)?
                }
            };
            emit(out, format_args!("loss={}", r.value))?;
            if let Some(path) = gradient {
                write_volume(&path, &r.gradient)?;
            }
        }
        Command::Metrics {
            prediction,
            truth,
            threshold: t,
            report,
        } => {
            let pred = match t {
                Some(t) => threshold(&load_volume(&prediction)?, t)?,
                None => load_mask(&prediction)?,
            };
            let truth = load_mask(&truth)?;
            let r = evaluate(&pred, &truth)?;
            emit(out, &r)?;
            if let Some(path) = report {
                write_json(&path, &r)?;
            }
        }
        Command::Components {
            masks,
            connectivity: conn,
            largest,
        } => {
            let conn = connectivity(conn);
            let mut counts = Vec::with_capacity(masks.len());
            for path in &masks {
                let m = load_mask(path)?;
                let l = label_components(&m, conn);
                let sizes: Vec<String> = l.sizes.iter().map(|s| s.to_string()).collect();
                emit(
                    out,
                    format_args!(
                        "{}: count={} sizes={}",
                        path.display(),
                        l.count,
                        sizes.join(",")
                    ),
                )?;
                counts.push(l.count as usize);
            }
            let s = count_stats(&counts)?;
            emit(
                out,
                format_args!("mean={}\nstddev={}\nmax={}", s.mean, s.stddev, s.max),
            )?;
            if let Some(path) = largest {
                let m = load_mask(&masks[0])?;
                write_mask(&path, &largest_component(&m, conn)?)?;
            }
        }
        Command::Crop {
            image,
            center,
            size,
            output,
            spec,
        } => {
            if spec == sidecar_path(&output) {
                return Err(Failure::Usage(format!(
                    "--spec {} would overwrite the header of {}",
                    spec.display(),
                    output.display()
                )));
            }
            let v = load_volume(&image)?;
            let window = CropSpec::place(center, size, v.shape());
            write_volume(&output, &crop(&v, &window)?)?;
            write_json(
                &spec,
                &CropFile {
                    image_shape: v.shape(),
                    spec: window,
                },
            )?;
            emit(out, format_args!("origin={:?}", window.origin))?;
        }
        Command::Paste {
            cropped,
            spec,
            output,
        } => {
            let f: CropFile = read_json(&spec)?;
            let v = load_volume(&cropped)?;
            write_volume(&output, &paste_back(&v, &f.spec, f.image_shape)?)?;
        }
        Command::Pipeline {
            image,
            stage1,
            stage2,
            output,
            probability,
            report,
            truth,
            coarse_shape,
            crop_shape,
            threshold: t,
            seed,
            normalization,
        } => {
            let p1 = predictor_from_spec(&stage1, seed)?;
            let p2 = predictor_from_spec(&stage2, seed)?;
            let img = load_volume(&image)?;
            let cfg = PipelineConfig {
                coarse_shape,
                crop_shape,
                fine_threshold: t,
                normalization: normalization.into(),
                ..Default::default()
            };
            let res = run_two_stage(&img, p1.as_ref(), p2.as_ref(), &cfg)?;
            for timing in &res.diagnostics.timings {
                info!("{}: {:.3} s", timing.step, timing.seconds);
            }
            write_mask(&output, &res.mask)?;
            if let Some(path) = probability {
                write_volume(&path, &res.probability)?;
            }
            let metrics = match truth {
                Some(path) => Some(evaluate(&res.mask, &load_mask(&path)?)?),
                None => None,
            };
            emit(out, format_args!("crop_origin={:?}", res.crop.origin))?;
            emit(out, format_args!("foreground={}", res.mask.count()))?;
            if let Some(m) = &metrics {
                emit(out, m)?;
            }
            if let Some(path) = report {
                write_json(
                    &path,
                    &PipelineReport {
                        stage1: res.diagnostics.stage1.clone(),
                        stage2: res.diagnostics.stage2.clone(),
                        crop: res.crop,
                        foreground: res.mask.count(),
                        metrics,
                    },
                )?;
            }
        }
        Command::Ensemble {
            manifest,
            threshold: t,
            output,
        } => {
            let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
            let base = manifest.parent().unwrap_or(Path::new(""));
            let probs = text
                .lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(|l| load_volume(base.join(l)))
                .collect::<Result<Vec<_>>>()?;
            let cfg = EnsembleConfig {
                threshold: t,
                expected_count: Some(probs.len()),
            };
            let m = ensemble_vote(&probs, &cfg)?;
            emit(
                out,
                format_args!("inputs={}\nforeground={}", probs.len(), m.count()),
            )?;
            write_mask(&output, &m)?;
        }
        Command::Demo {
            kind,
            shape,
            steps,
            learning_rate,
            w_contour,
            w_dice,
            drain,
            seed,
            init,
            init_logit,
            noise_std,
            trace,
            output,
        } => {
            let target = make_phantom(kind, shape, seed)?;
            let cfg = OptimizeConfig {
                steps,
                learning_rate,
                w_contour,
                w_dice,
                drain,
                seed,
                init: match init {
                    InitArg::UniformLogit => InitKind::UniformLogit,
                    InitArg::Noise => InitKind::Noise,
                },
                init_logit,
                noise_std,
                ..Default::default()
            };
            let t = fit_volume(&target, &cfg)?;
            match trace {
                Some(path) => {
                    let f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
                    let mut w = std::io::BufWriter::new(f);
                    t.write_csv(&mut w)
                        .and_then(|_| w.flush())
                        .map_err(|e| Error::io(&path, e))?;
                    emit(out, format_args!("final_loss={}", t.final_loss()))?;
                    emit(out, &t.metrics)?;
                }
                None => t
                    .write_csv(&mut *out)
                    .map_err(|e| Error::io("<stdout>", e))?,
            }
            if let Some(path) = output {
                write_volume(&path, &t.probability)?;
            }
        }
        Command::Resize {
            input,
            shape,
            output,
        } => {
            let v = load_volume(&input)?;
            write_volume(&output, &resize_trilinear(&v, shape))?;
        }
        Command::Normalize {
            input,
            mode,
            output,
        } => {
            let v = load_volume(&input)?;
            write_volume(&output, &normalize_intensity(&v, mode.into())?)?;
        }
        Command::Threshold {
            input,
            threshold: t,
            output,
        } => {
            let m = threshold(&load_volume(&input)?, t)?;
            emit(out, format_args!("foreground={}", m.count()))?;
            write_mask(&output, &m)?;
        }
        Command::Phantom {
            kind,
            shape,
            seed,
            output,
        } => {
            let m = make_phantom(kind, shape, seed)?;
            emit(out, format_args!("foreground={}", m.count()))?;
            write_mask(&output, &m)?;
        }
        Command::Predict { builtin, dir } => {
            let input = load_volume(dir.join("input.rvol"))?;
            let prob = match builtin {
                Builtin::IntensityThreshold => IntensityThreshold.predict(&PredictRequest {
                    stage: Stage::Fine,
                    input: &input,
                    original_shape: input.shape(),
                    crop: None,
                })?,
            };
            write_volume(dir.join("output.rvol"), &prob)?;
        }
    }
    Ok(())
}
