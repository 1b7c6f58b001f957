//! Argument definitions and subcommand drivers.

use std::ffi::OsString;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{ArgAction, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use idcfuse::{
    average_cross_entropy, cross_entropy, fuse, measure_map, measure_sweep, normalize, psnr, rmse,
    ssim_with_mode, synthesize_pair, textured_reference, FusionConfig, FusionError, Kernel3x3,
    MeasureConfig, MeasureKind, MetricsReport, ModelKind, PcnnConfig, PixelGrid, SplitMode,
    SsimMode, SynthesisSpec, WeightConfig,
};
use log::{debug, info, warn};
use serde::Serialize;
use thiserror::Error;

use crate::config_file::{self, ConfigError};
use crate::image_io::{self, load_image, save_image, ImageIoError};
use crate::report::{self, ReportError, ReportFormat, ReportRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INCOMPLETE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Image(#[from] ImageIoError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Fusion(#[from] FusionError),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(ConfigError::Syntax { .. }) => EXIT_USAGE,
            CliError::Fusion(FusionError::IncompleteFiring { .. }) => EXIT_INCOMPLETE,
            _ => EXIT_DATA,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) | CliError::Config(ConfigError::Syntax { .. }) => "usage",
            CliError::Image(ImageIoError::Format { .. } | ImageIoError::Png { .. }) => "format",
            CliError::Image(_)
            | CliError::Io { .. }
            | CliError::Config(ConfigError::Read { .. }) => "io",
            CliError::Fusion(FusionError::IncompleteFiring { .. }) => "incomplete-firing",
            CliError::Fusion(_) | CliError::Report(_) => "data",
        }
    }

    /// `error[<kind>]: <message>` on a single line.
    pub fn one_line(&self) -> String {
        let msg = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.kind(), msg.trim())
    }
}

fn usage(e: FusionError) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "idcfuse",
    version,
    about = "Multi-focus image fusion with a dual-channel pulse-coupled neural network"
)]
pub struct Cli {
    /// key=value file of option defaults; command-line flags take precedence
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fuse two registered source images
    #[command(args_override_self = true)]
    Fuse(FuseArgs),
    /// Write a focus-measure map as an 8-bit image
    #[command(args_override_self = true)]
    Measure(MeasureCmdArgs),
    /// Score a fused image against a reference
    #[command(args_override_self = true)]
    Metrics(MetricsArgs),
    /// Build a synthetic multi-focus pair from a sharp reference
    #[command(args_override_self = true)]
    Synth(SynthArgs),
    /// Fuse with every focus measure under both models
    #[command(args_override_self = true)]
    Sweep(SweepArgs),
    /// Compare the additive and multiplicative models: counters and timing
    #[command(args_override_self = true)]
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct MeasureArgs {
    /// Focus measure: sml, var, sf or eol
    #[arg(long, default_value = "sml")]
    pub measure: MeasureKind,

    /// Window half-width N (window is (2N+1)x(2N+1))
    #[arg(long, default_value_t = 2)]
    pub window_n: usize,

    /// Threshold T below which modified-Laplacian terms are dropped
    #[arg(long, default_value_t = 0.0)]
    pub ml_threshold: f64,

    /// Modified-Laplacian step k
    #[arg(long, default_value_t = 1)]
    pub ml_step: usize,
}

impl MeasureArgs {
    fn config(&self) -> MeasureConfig {
        MeasureConfig {
            window_radius: self.window_n,
            threshold: self.ml_threshold,
            step: self.ml_step,
        }
    }
}

fn parse_kernel(s: &str) -> Result<Kernel3x3, String> {
    let values: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect::<Result<_, _>>()?;
    let weights: [f64; 9] = values
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 9 comma-separated weights, got {}", v.len()))?;
    Kernel3x3::new(weights).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct FusionArgs {
    #[command(flatten)]
    pub measure: MeasureArgs,

    /// Network model: idc (additive pool) or dc (multiplicative pool)
    #[arg(long, default_value = "idc")]
    pub model: ModelKind,

    /// Sigmoid steepness eta
    #[arg(long, default_value_t = 10.0)]
    pub eta: f64,

    /// Side r of the regional-sum window (even)
    #[arg(long, default_value_t = 4)]
    pub region_r: usize,

    /// Disable joint normalization of the two measure maps
    #[arg(long, action = ArgAction::SetTrue)]
    pub no_joint_scale: bool,

    /// Threshold decay time constant alpha_T
    #[arg(long, default_value_t = 0.2)]
    pub alpha_t: f64,

    /// Threshold reset value V_T (must exceed 8)
    #[arg(long, default_value_t = 20.0)]
    pub vt: f64,

    /// Level factor sigma of the multiplicative pool
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,

    /// Iteration cap before giving up on incomplete firing
    #[arg(long, default_value_t = 200)]
    pub max_iters: usize,

    /// Tolerance for treating stimuli or weights as equal
    #[arg(long, default_value_t = 1e-9)]
    pub eq_tol: f64,

    /// Linking kernel, 9 comma-separated weights in row-major order
    #[arg(long, default_value = "1,0.5,1,0.5,0,0.5,1,0.5,1", value_parser = parse_kernel)]
    pub kernel: Kernel3x3,
}

impl FusionArgs {
    pub fn config(&self) -> FusionConfig {
        FusionConfig {
            measure: self.measure.measure,
            measure_cfg: self.measure.config(),
            weight_cfg: WeightConfig {
                region_size: self.region_r,
                steepness: self.eta,
                joint_scale: !self.no_joint_scale,
            },
            pcnn_cfg: PcnnConfig {
                time_constant: self.alpha_t,
                threshold_reset: self.vt,
                max_iterations: self.max_iters,
                kernel: self.kernel,
                equality_tolerance: self.eq_tol,
                level_factor: self.sigma,
            },
            model: self.model,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Report format: text, csv or json
    #[arg(long, default_value = "text")]
    pub format: ReportFormat,

    /// Write the report to this file instead of stdout
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    /// First source image (PGM or PNG)
    pub a: PathBuf,
    /// Second source image (PGM or PNG)
    pub b: PathBuf,
    /// Output path for the fused PGM
    #[arg(short, long)]
    pub output: PathBuf,
    /// Sharp reference; when given, a metrics report is produced
    #[arg(long)]
    pub reference: Option<PathBuf>,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct MeasureCmdArgs {
    /// Input image
    pub image: PathBuf,
    /// Output PGM, rescaled so the map maximum maps to 255
    #[arg(short, long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub measure: MeasureArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SsimArg {
    Windowed,
    Global,
}

#[derive(Args, Debug)]
pub struct MetricsArgs {
    /// Fused image
    pub fused: PathBuf,
    /// Sharp reference
    pub reference: PathBuf,
    /// First source; with --source-b, CE is averaged over the sources
    #[arg(long, requires = "source_b")]
    pub source_a: Option<PathBuf>,
    /// Second source
    #[arg(long, requires = "source_a")]
    pub source_b: Option<PathBuf>,
    /// SSIM variant
    #[arg(long, value_enum, default_value_t = SsimArg::Windowed)]
    pub ssim_mode: SsimArg,
    /// Row label in the report
    #[arg(long, default_value = "fused")]
    pub label: String,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WIDTHxHEIGHT, got '{s}'"))?;
    let w: usize = w.parse().map_err(|e| format!("width: {e}"))?;
    let h: usize = h.parse().map_err(|e| format!("height: {e}"))?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok((w, h))
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Sharp reference; a textured image is generated when omitted
    pub reference: Option<PathBuf>,
    /// Output for source A (blurred on the first region)
    #[arg(long)]
    pub out_a: PathBuf,
    /// Output for source B (blurred on the complement)
    #[arg(long)]
    pub out_b: PathBuf,
    /// Also save the reference (useful with a generated texture)
    #[arg(long)]
    pub out_reference: Option<PathBuf>,
    /// Size of the generated texture
    #[arg(long, default_value = "256x256", value_parser = parse_size)]
    pub size: (usize, usize),
    /// Seed of the generated texture
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian blur sigma
    #[arg(long, default_value_t = 2.0)]
    pub blur_sigma: f64,
    /// Blur kernel radius [default: ceil(3 * blur-sigma)]
    #[arg(long)]
    pub blur_radius: Option<usize>,
    /// Region layout: vertical, horizontal or quadrants
    #[arg(long, default_value = "vertical")]
    pub split: SplitMode,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// First source image
    pub a: PathBuf,
    /// Second source image
    pub b: PathBuf,
    /// Sharp reference
    #[arg(long)]
    pub reference: PathBuf,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// First source image
    pub a: PathBuf,
    /// Second source image
    pub b: PathBuf,
    /// Sharp reference; adds quality metrics to each row
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Timed runs per model; the median is reported
    #[arg(long, default_value_t = 5)]
    pub repeat: usize,
    #[command(flatten)]
    pub fusion: FusionArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

/// Splices config-file entries into `argv` right after the subcommand name,
/// so that flags given on the command line, which come later, override them.
fn apply_config_file(mut argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let mut config_path: Option<PathBuf> = None;
    let mut sub_pos: Option<usize> = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy();
        if arg == "--" {
            break;
        }
        if arg == "--config" {
            config_path = argv.get(i + 1).map(PathBuf::from);
            i += 2;
            continue;
        }
        if let Some(p) = arg.strip_prefix("--config=") {
            config_path = Some(PathBuf::from(p));
        } else if sub_pos.is_none() && !arg.starts_with('-') {
            sub_pos = Some(i);
        }
        i += 1;
    }
    let (Some(path), Some(pos)) = (config_path, sub_pos) else {
        return Ok(argv);
    };
    let entries = config_file::load(&path)?;
    let root = Cli::command();
    let sub_name = argv[pos].to_string_lossy().into_owned();
    let Some(sub) = root.find_subcommand(&sub_name) else {
        return Ok(argv);
    };

    let mut extra = Vec::new();
    for entry in entries {
        let key = entry.key.as_str();
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key) && key != "config");
        match arg {
            Some(arg) if matches!(arg.get_action(), ArgAction::SetTrue) => {
                match entry.value.as_str() {
                    "true" | "yes" | "1" => extra.push(OsString::from(format!("--{key}"))),
                    "false" | "no" | "0" => {}
                    other => {
                        return Err(CliError::Usage(format!(
                            "config line {}: '{key}' expects true or false, got '{other}'",
                            entry.line
                        )))
                    }
                }
            }
            Some(_) => extra.push(OsString::from(format!("--{key}={}", entry.value))),
            None => {
                let known_elsewhere = root
                    .get_subcommands()
                    .flat_map(|s| s.get_arguments())
                    .any(|a| a.get_long() == Some(key) && key != "config");
                if known_elsewhere {
                    debug!("config key '{key}' does not apply to '{sub_name}'; ignored");
                } else {
                    return Err(CliError::Usage(format!(
                        "config line {}: unknown key '{key}'",
                        entry.line
                    )));
                }
            }
        }
    }
    argv.splice(pos + 1..pos + 1, extra);
    Ok(argv)
}

/// Parses `argv` (including the program name) and runs the selected
/// subcommand, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let result = apply_config_file(argv).and_then(|argv| {
        let matches = Cli::command().try_get_matches_from(argv);
        match matches {
            Ok(m) => {
                let cli = Cli::from_arg_matches(&m).map_err(|e| CliError::Usage(first_line(&e)))?;
                dispatch(cli.command).map(|()| EXIT_OK)
            }
            Err(e) => match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    Ok(EXIT_OK)
                }
                _ => Err(CliError::Usage(first_line(&e))),
            },
        }
    });
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("{}", err.one_line());
            err.exit_code()
        }
    }
}

fn first_line(e: &clap::Error) -> String {
    let text = e.to_string();
    let line = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or("invalid arguments");
    line.trim_start_matches("error: ").trim().to_string()
}

fn dispatch(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Fuse(a) => cmd_fuse(&a),
        Command::Measure(a) => cmd_measure(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn emit(text: &str, dest: Option<&Path>) -> CliResult<()> {
    match dest {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            }),
    }
}

fn emit_rows(rows: &[ReportRow], out: &OutputArgs) -> CliResult<()> {
    emit(&report::render(rows, out.format)?, out.report.as_deref())
}

fn load_pair(a: &Path, b: &Path) -> CliResult<(PixelGrid, PixelGrid)> {
    let a = load_image(a)?;
    let b = load_image(b)?;
    if a.dims() != b.dims() {
        let ((lw, lh), (rw, rh)) = (a.dims(), b.dims());
        return Err(FusionError::DimensionMismatch {
            left_width: lw,
            left_height: lh,
            right_width: rw,
            right_height: rh,
        }
        .into());
    }
    Ok((a, b))
}

fn cmd_fuse(args: &FuseArgs) -> CliResult<()> {
    let cfg = args.fusion.config();
    cfg.validate().map_err(usage)?;
    let (a, b) = load_pair(&args.a, &args.b)?;
    let reference = args.reference.as_deref().map(load_image).transpose()?;

    let outcome = fuse(&a, &b, &cfg)?;
    if outcome.clamped > 0 {
        warn!("{} negative outputs clamped to 0", outcome.clamped);
    }
    info!(
        "{}: {} iterations in {:.4}s",
        cfg.label(),
        outcome.counters.iterations,
        outcome.wall_time_seconds
    );
    save_image(&outcome.fused, &args.output)?;

    if let Some(r) = reference {
        let mut report = idcfuse::evaluate(&outcome.fused, &a, &b, &r)?;
        report.wall_time_seconds = outcome.wall_time_seconds;
        report.counters = Some(outcome.counters);
        emit_rows(&[ReportRow::from_metrics(cfg.label(), &report)], &args.out)?;
    }
    Ok(())
}

fn cmd_measure(args: &MeasureCmdArgs) -> CliResult<()> {
    let mcfg = args.measure.config();
    mcfg.validate().map_err(usage)?;
    let img = load_image(&args.image)?;
    let map = measure_map(args.measure.measure, &normalize(&img), &mcfg)?;
    let max = map.max();
    let data = map
        .data()
        .iter()
        .map(|&v| {
            if max > 0.0 {
                (255.0 * v / max + 0.5).floor().min(255.0) as u8
            } else {
                0
            }
        })
        .collect();
    let out = PixelGrid::new(map.width(), map.height(), data)?;
    let comment = format!(
        "idcfuse measure={} scale_max={max:e} pixel=round(255*value/scale_max)",
        args.measure.measure
    );
    image_io::write_bytes(
        &args.output,
        &image_io::encode_pgm_with_comment(&out, &comment),
    )?;
    Ok(())
}

fn cmd_metrics(args: &MetricsArgs) -> CliResult<()> {
    let fused = load_image(&args.fused)?;
    let reference = load_image(&args.reference)?;
    let ce = match (&args.source_a, &args.source_b) {
        (Some(a), Some(b)) => {
            let (a, b) = load_pair(a, b)?;
            average_cross_entropy(&a, &b, &fused)?
        }
        _ => cross_entropy(&reference, &fused)?,
    };
    let mode = match args.ssim_mode {
        SsimArg::Windowed => SsimMode::Windowed,
        SsimArg::Global => SsimMode::Global,
    };
    let err = rmse(&fused, &reference)?;
    let report = MetricsReport {
        ce,
        rmse: err,
        psnr: psnr(err),
        ssim: ssim_with_mode(&fused, &reference, mode)?,
        wall_time_seconds: 0.0,
        counters: None,
    };
    emit_rows(
        &[ReportRow::from_metrics(args.label.clone(), &report)],
        &args.out,
    )
}

fn cmd_synth(args: &SynthArgs) -> CliResult<()> {
    let spec = SynthesisSpec {
        split: args.split,
        blur_sigma: args.blur_sigma,
        blur_radius: args.blur_radius,
    };
    spec.validate().map_err(usage)?;
    let reference = match &args.reference {
        Some(path) => load_image(path)?,
        None => textured_reference(args.size.0, args.size.1, args.seed)?,
    };
    let (a, b) = synthesize_pair(&reference, &spec)?;
    save_image(&a, &args.out_a)?;
    save_image(&b, &args.out_b)?;
    if let Some(path) = &args.out_reference {
        save_image(&reference, path)?;
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> CliResult<()> {
    let cfg = args.fusion.config();
    cfg.validate().map_err(usage)?;
    let (a, b) = load_pair(&args.a, &args.b)?;
    let reference = load_image(&args.reference)?;
    let rows: Vec<ReportRow> = measure_sweep(&a, &b, &reference, &cfg)?
        .iter()
        .map(|r| ReportRow::from_metrics(r.label(), &r.report))
        .collect();
    emit_rows(&rows, &args.out)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// `a:b` reduced to lowest terms.
pub fn ratio(a: u64, b: u64) -> String {
    match gcd(a, b) {
        0 => "0:0".to_string(),
        g => format!("{}:{}", a / g, b / g),
    }
}

#[derive(Serialize)]
struct BenchSummary<'a> {
    rows: &'a [ReportRow],
    multiplication_ratio: String,
    addition_ratio: String,
    pixels: usize,
}

fn cmd_bench(args: &BenchArgs) -> CliResult<()> {
    if args.repeat == 0 {
        return Err(CliError::Usage("--repeat must be at least 1".into()));
    }
    let base = args.fusion.config();
    base.validate().map_err(usage)?;
    let (a, b) = load_pair(&args.a, &args.b)?;
    let reference = args.reference.as_deref().map(load_image).transpose()?;
    let pixels = a.width() * a.height();

    let mut rows = Vec::new();
    let mut totals = Vec::new();
    for model in [ModelKind::Idc, ModelKind::Dc] {
        let cfg = FusionConfig { model, ..base };
        let mut times = Vec::with_capacity(args.repeat);
        let mut last = None;
        for _ in 0..args.repeat {
            let start = Instant::now();
            let outcome = fuse(&a, &b, &cfg)?;
            times.push(start.elapsed().as_secs_f64());
            last = Some(outcome);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let outcome = last.expect("repeat >= 1");
        let counters = outcome.counters;
        let row = match &reference {
            Some(r) => {
                let mut report = idcfuse::evaluate(&outcome.fused, &a, &b, r)?;
                report.wall_time_seconds = median;
                report.counters = Some(counters);
                ReportRow::from_metrics(cfg.label(), &report)
            }
            None => ReportRow::timing_only(cfg.label(), median, Some(counters)),
        };
        totals.push(counters);
        rows.push(row);
    }

    let (idc, dc) = (totals[0], totals[1]);
    let mul = ratio(
        idc.fusion_pool_multiplications,
        dc.fusion_pool_multiplications,
    );
    let add = ratio(idc.fusion_pool_additions, dc.fusion_pool_additions);
    let per = |count: u64, iters: u64| count as f64 / (pixels as f64 * iters.max(1) as f64);
    let notes = format!(
        "fusion-pool multiplications idc:dc = {mul} (per pixel per iteration: {} vs {})\n\
         fusion-pool additions idc:dc = {add} (per pixel per iteration: {} vs {})\n\
         iterations: idc {} dc {}\n\
         note: additions are counted literally, including the constant term of each pool\n",
        per(idc.fusion_pool_multiplications, idc.iterations),
        per(dc.fusion_pool_multiplications, dc.iterations),
        per(idc.fusion_pool_additions, idc.iterations),
        per(dc.fusion_pool_additions, dc.iterations),
        idc.iterations,
        dc.iterations,
    );

    let text = match args.out.format {
        ReportFormat::Text => format!("{}\n{notes}", report::to_text(&rows)),
        ReportFormat::Csv => {
            eprint!("{notes}");
            report::to_csv(&rows)?
        }
        ReportFormat::Json => {
            let summary = BenchSummary {
                rows: &rows,
                multiplication_ratio: mul,
                addition_ratio: add,
                pixels,
            };
            let mut s = serde_json::to_string_pretty(&summary).map_err(ReportError::from)?;
            s.push('\n');
            s
        }
    };
    emit(&text, args.out.report.as_deref())
}
