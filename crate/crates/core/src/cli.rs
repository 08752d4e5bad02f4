//! Command-line front end. [`run`] parses arguments, does the work and
//! returns the process exit code: 0 on success, 1 for usage errors, 2 for
//! I/O errors and 3 for malformed or inconsistent data.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::calibrate::{calibrate, CalibrationError, CalibrationGrid, LabeledContour};
use crate::mask::ForegroundMask;
use crate::mog::MogConfig;
use crate::omega::OmegaConfig;
use crate::pipeline::{
    default_min_area, detect_in_mask, extract_contours, render_annotations, DetectionReport,
    PipelineError, PipelineOptions, SequenceProcessor, DEFAULT_BURN_IN,
};
use crate::pixbuf::{encode_pnm, load_sequence, read_frame, Frame, FrameSequence, SequenceError};
use crate::synth::{
    build_corpus, read_manifest, write_corpus, Label, OmegaShapeParams, Rng, Scene, SceneActor,
    SynthError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Io(_) => EXIT_IO,
            Self::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Io(m) | Self::Data(m) => m,
        }
    }
}

impl From<SequenceError> for CliError {
    fn from(e: SequenceError) -> Self {
        match e {
            SequenceError::Io { .. } => Self::Io(e.to_string()),
            SequenceError::Pattern { .. } => Self::Usage(e.to_string()),
            SequenceError::Decode { .. } | SequenceError::DimensionMismatch { .. } => {
                Self::Data(e.to_string())
            }
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Frame { index, source } => match CliError::from(source) {
                Self::Io(m) => Self::Io(format!("frame {index}: {m}")),
                Self::Usage(m) => Self::Usage(m),
                Self::Data(m) => Self::Data(format!("frame {index}: {m}")),
            },
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Io { .. } => Self::Io(e.to_string()),
            _ => Self::Data(e.to_string()),
        }
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        Self::Data(e.to_string())
    }
}

fn io_error(path: &Path, e: io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "omegacount", version, about = "Count people in image sequences with an adaptive background model and head-shoulder shape descriptors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Background subtraction: write one foreground mask per input frame.
    Bgsub(BgsubArgs),
    /// Full per-frame JSON Lines reports.
    Detect(DetectArgs),
    /// Per-frame human counts as JSON Lines.
    Count(DetectArgs),
    /// Fit descriptor thresholds and weights on a labeled corpus.
    Calibrate(CalibrateArgs),
    /// Generate a labeled mask corpus or a synthetic frame sequence.
    Synth(SynthArgs),
    /// Measure throughput on a generated scene.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct SequenceArgs {
    /// Directory holding the frame sequence.
    #[arg(long)]
    input: Option<PathBuf>,
    /// File-name pattern selecting frames inside --input.
    #[arg(long, default_value = "*.p[gp]m")]
    glob: String,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON file with an OmegaConfig, or an object {"omega": ..., "mog": ...}.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for background subtraction.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=256))]
    threads: u32,
    /// Leave out timing fields so outputs are reproducible byte for byte.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Debug, Args)]
struct BgsubArgs {
    #[command(flatten)]
    seq: SequenceArgs,
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory for masks.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[command(flatten)]
    seq: SequenceArgs,
    /// A single pre-segmented foreground mask instead of a sequence.
    #[arg(long, conflicts_with = "input")]
    mask: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
    /// Output directory for the report file and annotated frames.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write annotated P6 frames into --out.
    #[arg(long, requires = "out")]
    annotate: bool,
    /// Smallest component area considered; scales with resolution by default.
    #[arg(long)]
    min_area: Option<usize>,
    /// Leading frames used only to train the background model.
    #[arg(long, default_value_t = DEFAULT_BURN_IN)]
    burn_in: usize,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    /// Corpus manifest written by `synth`.
    #[arg(long)]
    manifest: PathBuf,
    /// JSON file with a CalibrationGrid replacing the default grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Base OmegaConfig supplying the fields that are not searched.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory that receives omega.json.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    min_area: Option<usize>,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Shapes per class.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write a walking-person frame sequence of this many frames instead of
    /// a corpus.
    #[arg(long)]
    scene_frames: Option<usize>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Frame size as WxH.
    #[arg(long, default_value = "160x120", value_parser = parse_resolution)]
    resolution: (usize, usize),
    /// Measured frames after warm-up.
    #[arg(long, default_value_t = 200, value_parser = clap::value_parser!(u64).range(200..))]
    frames: u64,
    #[arg(long, default_value_t = 50)]
    warmup: usize,
    /// Threads for the multi-threaded pass; defaults to the available cores.
    #[arg(long)]
    threads: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write bench.json into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_resolution(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got {s:?}"))?;
    let parse = |v: &str| {
        v.parse::<usize>()
            .ok()
            .filter(|&n| (16..=8192).contains(&n))
            .ok_or_else(|| format!("dimension {v:?} must be an integer in 16..=8192"))
    };
    Ok((parse(w)?, parse(h)?))
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct CombinedConfig {
    omega: OmegaConfig,
    mog: MogConfig,
}

/// Reads either a flat OmegaConfig or `{"omega": ..., "mog": ...}`.
fn load_configs(path: Option<&Path>) -> Result<(OmegaConfig, MogConfig), CliError> {
    let Some(path) = path else {
        return Ok((OmegaConfig::default(), MogConfig::default()));
    };
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let bad = |e: serde_json::Error| CliError::Data(format!("{}: {e}", path.display()));
    let value: serde_json::Value = serde_json::from_str(&text).map_err(bad)?;
    let combined = value
        .as_object()
        .is_some_and(|o| o.contains_key("omega") || o.contains_key("mog"));
    let (omega, mog) = if combined {
        let c: CombinedConfig = serde_json::from_value(value).map_err(bad)?;
        (c.omega, c.mog)
    } else {
        (serde_json::from_value(value).map_err(bad)?, MogConfig::default())
    };
    omega
        .validate()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    mog.validate()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok((omega, mog))
}

fn create_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| io_error(path, e))
}

fn open_sequence(args: &SequenceArgs) -> Result<FrameSequence, CliError> {
    let dir = args
        .input
        .as_deref()
        .ok_or_else(|| CliError::Usage("one of --input or --mask is required".into()))?;
    let seq = load_sequence(dir, &args.glob)?;
    if seq.is_empty() {
        return Err(CliError::Data(format!(
            "no frames matching {:?} in {}",
            args.glob,
            dir.display()
        )));
    }
    Ok(seq)
}

struct Output<'a> {
    out: &'a mut dyn Write,
}

impl Output<'_> {
    fn line(&mut self, s: &str) -> Result<(), CliError> {
        writeln!(self.out, "{s}").map_err(|e| CliError::Io(format!("standard output: {e}")))
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank.min(sorted.len() - 1)]
}

#[derive(Debug, Serialize)]
struct TimingSummary {
    frames: usize,
    mean_ms: f64,
    median_ms: f64,
    p95_ms: f64,
}

fn summarize(samples: &[f64]) -> TimingSummary {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    TimingSummary {
        frames: samples.len(),
        mean_ms: samples.iter().sum::<f64>() / samples.len().max(1) as f64,
        median_ms: percentile(&sorted, 0.5),
        p95_ms: percentile(&sorted, 0.95),
    }
}

fn cmd_bgsub(args: BgsubArgs, out: &mut Output) -> Result<(), CliError> {
    let (omega, mog) = load_configs(args.common.config.as_deref())?;
    let seq = open_sequence(&args.seq)?;
    create_out(&args.out)?;
    let options = PipelineOptions {
        min_area: None,
        burn_in: usize::MAX,
        threads: args.common.threads as usize,
    };
    let mut processor = SequenceProcessor::new(mog, omega, options);
    let mut times = Vec::with_capacity(seq.len());
    for (index, frame) in seq.frames().enumerate() {
        let frame = frame.map_err(|source| PipelineError::Frame { index, source })?;
        let result = processor.push(&frame)?;
        times.push(result.bgsub_ms);
        let path = args.out.join(format!("mask_{index:05}.pgm"));
        write_file(&path, &encode_pnm(&result.mask.to_frame()))?;
    }
    let summary = if args.common.no_timing {
        json!({ "frames": times.len() })
    } else {
        serde_json::to_value(summarize(&times)).expect("summary serializes")
    };
    out.line(&summary.to_string())
}

fn emit_report(
    report: &DetectionReport,
    count_only: bool,
    no_timing: bool,
    out: &mut Output,
    file: &mut Option<Vec<u8>>,
) -> Result<(), CliError> {
    let line = if count_only {
        #[derive(Serialize)]
        struct CountLine {
            frame: usize,
            count: usize,
        }
        let line = CountLine {
            frame: report.frame_index,
            count: report.human_count,
        };
        serde_json::to_string(&line).expect("count line serializes")
    } else if no_timing {
        report.clone().without_timing().to_json_line()
    } else {
        report.to_json_line()
    };
    if let Some(buf) = file {
        buf.extend_from_slice(line.as_bytes());
        buf.push(b'\n');
    }
    out.line(&line)
}

fn cmd_detect(args: DetectArgs, count_only: bool, out: &mut Output) -> Result<(), CliError> {
    let (omega, mog) = load_configs(args.common.config.as_deref())?;
    if let Some(dir) = &args.out {
        create_out(dir)?;
    }
    let mut file = args.out.as_ref().map(|_| Vec::new());
    let annotate_path = |index: usize| {
        args.out
            .as_ref()
            .expect("--annotate requires --out")
            .join(format!("annotated_{index:05}.ppm"))
    };
    if let Some(mask_path) = &args.mask {
        let frame = read_frame(mask_path)?;
        let mask = ForegroundMask::from_frame(&frame);
        let min_area = args
            .min_area
            .unwrap_or_else(|| default_min_area(frame.width(), frame.height()));
        let report = detect_in_mask(&mask, &omega, min_area);
        emit_report(&report, count_only, args.common.no_timing, out, &mut file)?;
        if args.annotate {
            write_file(&annotate_path(0), &encode_pnm(&render_annotations(&frame, &report)))?;
        }
    } else {
        let seq = open_sequence(&args.seq)?;
        let options = PipelineOptions {
            min_area: args.min_area,
            burn_in: args.burn_in,
            threads: args.common.threads as usize,
        };
        let mut processor = SequenceProcessor::new(mog, omega, options);
        for (index, frame) in seq.frames().enumerate() {
            let frame = frame.map_err(|source| PipelineError::Frame { index, source })?;
            let result = processor.push(&frame)?;
            if let Some(report) = result.report {
                emit_report(&report, count_only, args.common.no_timing, out, &mut file)?;
                if args.annotate {
                    let annotated = render_annotations(&frame, &report);
                    write_file(&annotate_path(index), &encode_pnm(&annotated))?;
                }
            }
        }
    }
    if let (Some(dir), Some(buf)) = (&args.out, file) {
        let name = if count_only { "counts.jsonl" } else { "reports.jsonl" };
        write_file(&dir.join(name), &buf)?;
    }
    Ok(())
}

fn cmd_calibrate(args: CalibrateArgs, out: &mut Output) -> Result<(), CliError> {
    let (base, _) = load_configs(args.config.as_deref())?;
    let grid = match &args.grid {
        None => CalibrationGrid::default(),
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        }
    };
    let manifest = read_manifest(&args.manifest)?;
    let root = args.manifest.parent().unwrap_or(Path::new("."));
    let mut corpus = Vec::with_capacity(manifest.len());
    for entry in &manifest {
        let frame = read_frame(&root.join(&entry.path))?;
        let mask = ForegroundMask::from_frame(&frame);
        let min_area = args
            .min_area
            .unwrap_or_else(|| default_min_area(frame.width(), frame.height()));
        let largest = extract_contours(&mask, min_area)
            .into_iter()
            .max_by_key(|(c, _)| (c.area, std::cmp::Reverse(c.label)));
        match largest {
            Some((_, path)) => corpus.push(LabeledContour {
                path,
                human: entry.label == Label::Human,
            }),
            None => eprintln!("warning: {} has no usable contour, skipped", entry.path),
        }
    }
    let calibration = calibrate(&corpus, &grid, &base)?;
    let json = serde_json::to_string_pretty(&calibration.config).expect("config serializes");
    eprintln!(
        "training balanced accuracy {:.4} ({} samples)",
        calibration.training.balanced_accuracy(),
        corpus.len()
    );
    if let Some(dir) = &args.out {
        create_out(dir)?;
        write_file(&dir.join("omega.json"), format!("{json}\n").as_bytes())?;
    }
    out.line(&json)
}

/// A person walking across a static background, plus a moving square.
pub fn demo_scene(width: usize, height: usize, seed: u64) -> Scene {
    let mut rng = Rng::new(seed);
    let square = (height / 6).max(4);
    let mut scene = Scene::new(width, height, seed).with_actor(SceneActor::Square {
        size: square,
        x0: (width - square) as i64,
        y0: (height / 2) as i64,
        vx: -2,
        vy: 0,
        start_frame: 0,
    });
    if height >= 90 && width >= 60 {
        let params = OmegaShapeParams::sample(&mut rng, width, height);
        scene = scene.with_actor(SceneActor::Omega {
            params,
            axis_x0: params.shoulder_span / 2.0 + 4.0,
            top: ((height as f64 - params.body_height) / 2.0).floor() as i64,
            vx: 2.0,
            start_frame: 0,
        });
    }
    scene
}

fn cmd_synth(args: SynthArgs, out: &mut Output) -> Result<(), CliError> {
    if let Some(frames) = args.scene_frames {
        create_out(&args.out)?;
        let mut scene = demo_scene(160, 120, args.seed);
        for actor in &mut scene.actors {
            if let SceneActor::Omega { start_frame, .. } = actor {
                *start_frame = DEFAULT_BURN_IN + 10;
            }
        }
        for index in 0..frames {
            let path = args.out.join(format!("frame_{index:05}.pgm"));
            write_file(&path, &encode_pnm(&scene.frame(index)))?;
        }
        return out.line(&json!({ "frames": frames, "width": 160, "height": 120 }).to_string());
    }
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let corpus = build_corpus(args.n, args.seed)?;
    let manifest = write_corpus(&args.out, &corpus)?;
    out.line(&json!({ "entries": corpus.len(), "manifest": manifest.display().to_string() }).to_string())
}

#[derive(Debug, Serialize)]
struct BenchPass {
    threads: usize,
    frames: usize,
    fps: f64,
    frame_median_ms: f64,
    frame_p95_ms: f64,
    bgsub_median_ms: f64,
    detect_median_ms: f64,
    detect_p95_ms: f64,
    max_contours: usize,
}

fn bench_pass(frames: &[Frame], warmup: usize, threads: usize) -> Result<BenchPass, CliError> {
    let options = PipelineOptions {
        min_area: None,
        burn_in: 0,
        threads,
    };
    let mut processor = SequenceProcessor::new(MogConfig::default(), OmegaConfig::default(), options);
    let (mut total, mut bgsub, mut detect) = (Vec::new(), Vec::new(), Vec::new());
    let mut max_contours = 0;
    let mut elapsed = 0.0;
    for (i, frame) in frames.iter().enumerate() {
        let started = Instant::now();
        let result = processor.push(frame)?;
        let wall = started.elapsed().as_secs_f64() * 1e3;
        if i < warmup {
            continue;
        }
        let report = result.report.expect("no burn-in while benchmarking");
        let timing = report.timing.expect("timings are recorded");
        elapsed += wall;
        total.push(wall);
        bgsub.push(result.bgsub_ms);
        detect.push(timing.detect);
        max_contours = max_contours.max(report.records.len());
    }
    let (t, b, d) = (summarize(&total), summarize(&bgsub), summarize(&detect));
    Ok(BenchPass {
        threads,
        frames: total.len(),
        fps: total.len() as f64 / (elapsed / 1e3),
        frame_median_ms: t.median_ms,
        frame_p95_ms: t.p95_ms,
        bgsub_median_ms: b.median_ms,
        detect_median_ms: d.median_ms,
        detect_p95_ms: d.p95_ms,
        max_contours,
    })
}

fn cmd_bench(args: BenchArgs, out: &mut Output) -> Result<(), CliError> {
    let (width, height) = args.resolution;
    let scene = demo_scene(width, height, args.seed);
    let n = args.warmup + args.frames as usize;
    let frames: Vec<Frame> = (0..n).map(|i| scene.frame(i)).collect();
    let threads = args.threads.map(|t| t as usize).unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let single = bench_pass(&frames, args.warmup, 1)?;
    let multi = bench_pass(&frames, args.warmup, threads.max(1))?;
    let report = json!({
        "resolution": format!("{width}x{height}"),
        "warmup": args.warmup,
        "single": single,
        "multi": multi,
    });
    if let Some(dir) = &args.out {
        create_out(dir)?;
        write_file(&dir.join("bench.json"), format!("{report}\n").as_bytes())?;
    }
    out.line(&report.to_string())
}

/// Runs the CLI on `args` (including the program name), writing data to
/// `stdout` and diagnostics to the standard error stream.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = e.print();
                    EXIT_USAGE
                }
            };
        }
    };
    let mut out = Output { out: stdout };
    let result = match cli.command {
        Command::Bgsub(a) => cmd_bgsub(a, &mut out),
        Command::Detect(a) => cmd_detect(a, false, &mut out),
        Command::Count(a) => cmd_detect(a, true, &mut out),
        Command::Calibrate(a) => cmd_calibrate(a, &mut out),
        Command::Synth(a) => cmd_synth(a, &mut out),
        Command::Bench(a) => cmd_bench(a, &mut out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("omegacount: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    run_with(args, &mut lock)
}
