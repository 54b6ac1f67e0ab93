use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use breathflow::evaluate::{run_suite, SuiteManifest};
use breathflow::flow::Tracker;
use breathflow::plot::signal_svg;
use breathflow::roi::{parse_keypoints, select_points, Bounds};
use breathflow::signal::{read_signal_csv, write_signal_csv};
use breathflow::synth::{write_scene, SceneOutputs, SceneRenderer, SceneSpec, Texture};
use breathflow::video_io::{open_video, VideoStream};
use breathflow::{run_pipeline, EstimateConfig, Error, FilterSpec, PointConfigKind, SignalMode, Stage};

#[derive(Parser)]
#[command(name = "breathflow", version, about = "Breathing-rate estimation from video")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic breathing scene with ground truth.
    Synth(SynthArgs),
    /// Track the selected points and write their trajectories as CSV.
    Track(TrackArgs),
    /// Estimate the breathing rate of one video.
    Estimate(EstimateArgs),
    /// Run a manifest of cases and report per-kind RMSE.
    Eval(EvalArgs),
    /// Render a signal dump as SVG.
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum TextureArg {
    Checker,
    Sinusoid,
    Noise,
    Flat,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Y4m,
    Pgm,
    Both,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 18.0)]
    bpm: f64,
    #[arg(long, default_value_t = 30.0)]
    duration: f64,
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long, default_value_t = 640)]
    width: usize,
    #[arg(long, default_value_t = 480)]
    height: usize,
    /// Peak chest displacement in pixels.
    #[arg(long, default_value_t = 2.0)]
    amp: f64,
    #[arg(long, value_enum, default_value_t = TextureArg::Checker)]
    texture: TextureArg,
    /// Texture period (checker, sinusoid) or cell size (noise) in pixels.
    #[arg(long, default_value_t = 16.0)]
    period: f64,
    #[arg(long, default_value_t = 0.8)]
    contrast: f64,
    /// Peak head jitter in pixels.
    #[arg(long, default_value_t = 0.0)]
    head_noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Y4m)]
    format: OutputFormat,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Y4M file or directory of PGM/PNG frames.
    #[arg(long)]
    video: PathBuf,
    /// Landmark JSON file.
    #[arg(long)]
    keypoints: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::ChestGrid)]
    kind: KindArg,
    /// Frame rate override; frame directories default to 30.
    #[arg(long)]
    fps: Option<f64>,
    /// Filename pattern for frame directories.
    #[arg(long, default_value = "*")]
    pattern: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    FacePoints,
    ChestPoints,
    ChestGrid,
}

impl From<KindArg> for PointConfigKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::FacePoints => PointConfigKind::FacePoints,
            KindArg::ChestPoints => PointConfigKind::ChestPoints,
            KindArg::ChestGrid => PointConfigKind::ChestGrid,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Displacement,
    Difference,
}

#[derive(Args)]
struct ConfigArgs {
    /// Full tracking window size in pixels (20 means a 21x21 window).
    #[arg(long, default_value_t = 20)]
    window: usize,
    #[arg(long, default_value_t = 3)]
    levels: usize,
    /// Rows of the triangular chest grid.
    #[arg(long, default_value_t = 5)]
    rows: usize,
    #[arg(long, default_value_t = 0.1)]
    low_cut: f64,
    #[arg(long, default_value_t = 0.5)]
    high_cut: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Displacement)]
    signal_mode: ModeArg,
}

impl ConfigArgs {
    fn to_config(&self) -> Result<EstimateConfig, Error> {
        if self.window < 2 {
            return Err(Error::InvalidConfig(format!("--window {} is below 2", self.window)));
        }
        let mut cfg = EstimateConfig::default();
        cfg.flow.window_half_width = self.window / 2;
        cfg.flow.pyramid_levels = self.levels;
        cfg.grid.rows = self.rows;
        cfg.filter = FilterSpec {
            low_cut: self.low_cut,
            high_cut: self.high_cut,
            ..FilterSpec::default()
        };
        cfg.signal_mode = match self.signal_mode {
            ModeArg::Displacement => SignalMode::Displacement,
            ModeArg::Difference => SignalMode::Difference,
        };
        cfg.flow.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrackArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Output CSV; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Write `sample_index,time_s,raw,filtered` with a peaks trailer.
    #[arg(long)]
    dump_signal: Option<PathBuf>,
    /// Write an SVG of the raw and filtered signal with peak markers.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[command(flatten)]
    config: ConfigArgs,
    /// JSON report path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cases run concurrently.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct PlotArgs {
    /// Signal CSV written by `estimate --dump-signal`.
    #[arg(long)]
    signal: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "breathing signal")]
    title: String,
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes to standard output, reporting a closed pipe as an error rather
/// than panicking.
fn emit(text: &str) -> Result<(), Error> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io("<stdout>", e))
}

fn cmd_synth(a: &SynthArgs) -> Result<(), Error> {
    if !(a.bpm.is_finite() && a.bpm > 0.0) {
        return Err(Error::InvalidConfig(format!("--bpm must be positive, got {}", a.bpm)));
    }
    let texture = match a.texture {
        TextureArg::Checker => Texture::Checker { period: a.period },
        TextureArg::Sinusoid => Texture::Sinusoid2d { period: a.period },
        TextureArg::Noise => Texture::Noise { scale: a.period },
        TextureArg::Flat => Texture::Flat,
    };
    let spec = SceneSpec {
        fps: a.fps,
        duration_s: a.duration,
        breathing_amp: a.amp,
        texture,
        contrast: a.contrast,
        head_noise_amp: a.head_noise,
        seed: a.seed,
        ..SceneSpec::new(a.width, a.height).with_bpm(a.bpm)
    };
    let renderer = SceneRenderer::new(spec)?;
    let outputs = SceneOutputs {
        pgm_frames: matches!(a.format, OutputFormat::Pgm | OutputFormat::Both),
        y4m: matches!(a.format, OutputFormat::Y4m | OutputFormat::Both),
    };
    let written = write_scene(&renderer, &a.out, outputs)?;
    let video = written
        .y4m
        .or(written.frames_dir)
        .expect("at least one video output");
    emit(&format!(
        "wrote {} frames at {} fps, truth {} bpm: {}\n",
        renderer.len(),
        renderer.spec().fps,
        renderer.truth().bpm,
        video.display()
    ))
}

fn open_input(input: &InputArgs) -> Result<(VideoStream, breathflow::KeypointSet), Error> {
    let keypoints = parse_keypoints(&input.keypoints).map_err(|e| e.at(Stage::Input))?;
    let stream = open_video(&input.video, &input.pattern, input.fps).map_err(|e| e.at(Stage::Input))?;
    Ok((stream, keypoints))
}

fn cmd_track(a: &TrackArgs) -> Result<(), Error> {
    let cfg = a.config.to_config()?;
    let (mut stream, keypoints) = open_input(&a.input)?;
    let fps = stream.fps;
    let (w, h) = stream.dims;
    let bounds = Bounds {
        width: w,
        height: h,
        margin: cfg.flow.window_half_width,
    };
    let selection =
        select_points(a.input.kind.into(), &keypoints, cfg.grid, Some(bounds)).map_err(|e| e.at(Stage::Select))?;
    let track_err = |e: Error| e.at(Stage::Track);
    let first = stream
        .next()
        .ok_or(Error::InsufficientInput { needed: 2, found: 0 }.at(Stage::Input))?
        .map_err(|e| e.at(Stage::Input))?;
    let mut tracker = Tracker::new(&first, &selection.points, &cfg.flow).map_err(track_err)?;
    for frame in stream {
        tracker.advance(&frame.map_err(|e| e.at(Stage::Input))?).map_err(track_err)?;
    }
    let tracks = tracker.finish(fps).map_err(track_err)?;
    match &a.out {
        Some(path) => {
            let mut out = create(path)?;
            tracks.write_csv(&mut out).and_then(|_| out.flush()).map_err(|e| Error::io(path, e))?;
        }
        None => tracks.write_csv(io::stdout().lock()).map_err(|e| Error::io("<stdout>", e))?,
    }
    Ok(())
}

fn cmd_estimate(a: &EstimateArgs) -> Result<(), Error> {
    let cfg = a.config.to_config()?;
    let (stream, keypoints) = open_input(&a.input)?;
    let fps = stream.fps;
    let est = run_pipeline(stream, fps, &keypoints, a.input.kind.into(), &cfg)?;
    if let Some(path) = &a.dump_signal {
        let mut out = create(path)?;
        write_signal_csv(&mut out, &est.filter_input, &est.filtered, &est.report.peak_indices)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    if let Some(path) = &a.plot {
        let title = format!("{}: {:.1} bpm", est.report.kind.name(), est.report.bpm);
        let svg = signal_svg(
            &title,
            fps,
            est.filter_input.samples(),
            est.filtered.samples(),
            &est.report.peak_indices,
        );
        write_file(path, &svg)?;
    }
    for flag in &est.report.flags {
        log::warn!("{}", serde_json::to_string(flag).unwrap_or_default().trim_matches('"'));
    }
    emit(&format!("{}\n", est.report.to_json()))
}

/// Returns whether any case failed.
fn cmd_eval(a: &EvalArgs) -> Result<bool, Error> {
    let cfg = a.config.to_config()?;
    let manifest = SuiteManifest::load(&a.manifest)?;
    let report = run_suite(&manifest, &cfg, a.jobs.max(1))?;
    if let Some(path) = &a.out {
        write_file(path, &report.to_json())?;
    }
    emit(&report.to_table())?;
    for f in &report.failures {
        eprintln!("case {} ({}) failed: {}", f.id, f.kind.name(), f.message);
    }
    Ok(report.has_failures())
}

fn cmd_plot(a: &PlotArgs) -> Result<(), Error> {
    let file = File::open(&a.signal).map_err(|e| Error::io(&a.signal, e))?;
    let dump = read_signal_csv(BufReader::new(file))?;
    let fs = match dump.time_s.as_slice() {
        [t0, t1, ..] if t1 > t0 => 1.0 / (t1 - t0),
        _ => return Err(Error::SignalTooShort { len: dump.time_s.len(), min: 1 }),
    };
    write_file(&a.out, &signal_svg(&a.title, fs, &dump.raw, &dump.filtered, &dump.peaks))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a).map(|_| false),
        Command::Track(a) => cmd_track(a).map(|_| false),
        Command::Estimate(a) => cmd_estimate(a).map(|_| false),
        Command::Eval(a) => cmd_eval(a),
        Command::Plot(a) => cmd_plot(a).map(|_| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
