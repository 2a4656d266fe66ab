//! Command-line front end: simulate, envelope, estimate, evaluate, render and bench.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nakamap::envelope::{self, Axis, RFFrame};
use nakamap::evaluation::{self, sig6};
use nakamap::grids::{self, Image2D, ImageKind};
use nakamap::mapping::{self, KernelSpec, Method, ParametricResult};
use nakamap::nakagami::NakagamiParams;
use nakamap::phantom::{self, Arrangement, Disk, Layout, PhantomSpec, Psf, ScattererParams};

pub mod bench;

#[derive(Debug, Parser)]
#[command(
    name = "nakamap",
    version,
    about = "Localized Nakagami parametric imaging"
)]
pub struct Cli {
    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, env = "NAKAMAP_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a phantom envelope with its ground truth.
    Simulate(SimulateArgs),
    /// Detect the envelope of an RF frame.
    Envelope(EnvelopeArgs),
    /// Estimate parametric maps from an envelope image.
    Estimate(EstimateArgs),
    /// Compare an estimated shape map against truth.
    Evaluate(EvaluateArgs),
    /// Render a map as an 8-bit PGM.
    Render(RenderArgs),
    /// Run every method on a fixed phantom suite and tabulate errors.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum LayoutArg {
    Homogeneous,
    Disk,
    Quadrants,
    Scatterers,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ArrangementArg {
    Random,
    Periodic,
}

impl From<ArrangementArg> for Arrangement {
    fn from(a: ArrangementArg) -> Self {
        match a {
            ArrangementArg::Random => Arrangement::Random,
            ArrangementArg::Periodic => Arrangement::Periodic,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub layout: LayoutArg,
    #[arg(long, default_value_t = 128)]
    pub width: usize,
    #[arg(long, default_value_t = 128)]
    pub height: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shape per region: one for homogeneous, background,inclusion for disk, four for quadrants.
    #[arg(long, value_delimiter = ',')]
    pub mu: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub omega: f64,
    /// Scatterers per voxel: background[,inclusion].
    #[arg(long, value_delimiter = ',')]
    pub density: Vec<f64>,
    /// Scatterer arrangement: background[,inclusion].
    #[arg(long, value_delimiter = ',', value_enum)]
    pub arrangement: Vec<ArrangementArg>,
    /// Inclusion radius in voxels; defaults to a quarter of the smaller side.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub out_truth_mu: Option<PathBuf>,
    #[arg(long)]
    pub out_truth_omega: Option<PathBuf>,
    #[arg(long)]
    pub out_labels: Option<PathBuf>,
    /// Pre-detection RF (scatterer layout only).
    #[arg(long)]
    pub out_rf: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AxisArg {
    Columns,
    Rows,
}

#[derive(Debug, Args)]
pub struct EnvelopeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "columns")]
    pub axis: AxisArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Fixed,
    Wmc,
    Mkl,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_mu: PathBuf,
    #[arg(long)]
    pub out_omega: Option<PathBuf>,
    #[arg(long)]
    pub out_scale: Option<PathBuf>,
    #[arg(long)]
    pub out_fit: Option<PathBuf>,
    /// Window size for the fixed method.
    #[arg(long, default_value_t = 11)]
    pub window: usize,
    /// Window sizes for compounding.
    #[arg(long, value_delimiter = ',', default_value = "7,9,11")]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = mapping::DEFAULT_MIN_SIZE)]
    pub kmin: usize,
    /// Largest kernel, or `auto` for the largest odd size up to min(W, H) / 8.
    #[arg(long, default_value = "auto")]
    pub kmax: String,
    #[arg(long, default_value_t = mapping::DEFAULT_STEP)]
    pub step: usize,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long)]
    pub truth: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, requires = "max", allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, requires = "min", allow_negative_numbers = true)]
    pub max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Side length of every phantom in the suite.
    #[arg(long, default_value_t = 96)]
    pub size: usize,
    #[arg(long)]
    pub out_csv: PathBuf,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

/// Failure tagged with the pipeline stage it came from.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub source: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = format!("{:#}", self.source).replace('\n', " ");
        write!(f, "nakamap: {}: {msg}", self.stage)
    }
}

impl std::error::Error for StageError {}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            source: e.into(),
        })
    }
}

pub fn run(cli: Cli) -> Result<(), StageError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .stage("threads")?;
    pool.install(|| match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Envelope(a) => envelope_cmd(a),
        Command::Estimate(a) => estimate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Render(a) => render(a),
        Command::Bench(a) => bench::run(a),
    })
}

fn read(path: &Path, stage: &'static str) -> Result<Image2D, StageError> {
    grids::read_image(path)
        .with_context(|| format!("reading {}", path.display()))
        .stage(stage)
}

fn write(img: &Image2D, path: &Path, stage: &'static str) -> Result<(), StageError> {
    grids::write_image(img, path)
        .with_context(|| format!("writing {}", path.display()))
        .stage(stage)
}

fn params(
    mu: &[f64],
    omega: f64,
    count: usize,
    layout: &str,
) -> anyhow::Result<Vec<NakagamiParams>> {
    if mu.len() != count {
        bail!(
            "{layout} layout needs {count} --mu value(s), got {}",
            mu.len()
        );
    }
    mu.iter()
        .map(|&m| NakagamiParams::new(m, omega).map_err(Into::into))
        .collect()
}

pub fn layout_from_args(a: &SimulateArgs) -> anyhow::Result<Layout> {
    let disk = Disk::centered(
        a.width,
        a.height,
        a.radius.unwrap_or(a.width.min(a.height) as f64 / 4.0),
    );
    Ok(match a.layout {
        LayoutArg::Homogeneous => Layout::Homogeneous(params(&a.mu, a.omega, 1, "homogeneous")?[0]),
        LayoutArg::Disk => {
            let p = params(&a.mu, a.omega, 2, "disk")?;
            Layout::TwoRegionDisk {
                background: p[0],
                inclusion: p[1],
                disk,
            }
        }
        LayoutArg::Quadrants => {
            let p = params(&a.mu, a.omega, 4, "quadrants")?;
            Layout::QuadrantGrid([p[0], p[1], p[2], p[3]])
        }
        LayoutArg::Scatterers => {
            if a.density.is_empty() || a.density.len() > 2 {
                bail!("scatterers layout needs one or two --density values");
            }
            let arrangement = |i: usize| -> Arrangement {
                a.arrangement
                    .get(i)
                    .or(a.arrangement.first())
                    .copied()
                    .map_or(Arrangement::Random, Into::into)
            };
            let region = |i: usize| ScattererParams {
                density: a.density[i],
                arrangement: arrangement(i),
            };
            Layout::ScattererField {
                background: region(0),
                inclusion: (a.density.len() == 2).then(|| (disk, region(1))),
                psf: Psf::default(),
            }
        }
    })
}

fn simulate(a: SimulateArgs) -> Result<(), StageError> {
    let layout = layout_from_args(&a).stage("simulate")?;
    let truth = phantom::generate(&PhantomSpec {
        width: a.width,
        height: a.height,
        seed: a.seed,
        layout,
    })
    .stage("simulate")?;
    write(&truth.envelope, &a.out, "simulate")?;
    let extras = [
        (&a.out_truth_mu, Some(&truth.truth_mu)),
        (&a.out_truth_omega, Some(&truth.truth_omega)),
        (&a.out_labels, Some(&truth.labels)),
        (&a.out_rf, truth.rf.as_ref()),
    ];
    for (path, img) in extras {
        if let Some(path) = path {
            let img = img
                .ok_or_else(|| anyhow!("this layout has no RF frame"))
                .stage("simulate")?;
            write(img, path, "simulate")?;
        }
    }
    Ok(())
}

fn envelope_cmd(a: EnvelopeArgs) -> Result<(), StageError> {
    let rf = read(&a.input, "envelope")?;
    let axis = match a.axis {
        AxisArg::Columns => Axis::Columns,
        AxisArg::Rows => Axis::Rows,
    };
    let env = RFFrame::new(rf, axis)
        .and_then(|f| envelope::analytic_envelope(&f))
        .stage("envelope")?;
    write(&env, &a.out, "envelope")
}

/// Runs one estimator; `kmax` of `None` means automatic.
pub fn run_method(
    img: &Image2D,
    method: Method,
    window: usize,
    windows: &[usize],
    kmin: usize,
    kmax: Option<usize>,
    step: usize,
) -> Result<ParametricResult, mapping::MappingError> {
    match method {
        Method::Fixed => mapping::estimate_fixed(img, window),
        Method::Wmc => mapping::estimate_wmc(img, windows),
        Method::Mkl => {
            let spec = KernelSpec::bounded(img.width(), img.height(), kmin, kmax, step)?;
            mapping::estimate_mkl(img, &spec)
        }
    }
}

fn estimate(a: EstimateArgs) -> Result<(), StageError> {
    let img = read(&a.input, "estimate")?;
    let kmax = match a.kmax.as_str() {
        "auto" => None,
        s => Some(
            s.parse::<usize>()
                .with_context(|| format!("--kmax expects an integer or auto, got {s}"))
                .stage("estimate")?,
        ),
    };
    let method = match a.method {
        MethodArg::Fixed => Method::Fixed,
        MethodArg::Wmc => Method::Wmc,
        MethodArg::Mkl => Method::Mkl,
    };
    let r =
        run_method(&img, method, a.window, &a.windows, a.kmin, kmax, a.step).stage("estimate")?;
    write(&r.mu_map, &a.out_mu, "estimate")?;
    for (path, map) in [
        (&a.out_omega, &r.omega_map),
        (&a.out_scale, &r.scale_map),
        (&a.out_fit, &r.fit_map),
    ] {
        if let Some(path) = path {
            write(map, path, "estimate")?;
        }
    }
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<(), StageError> {
    let est = read(&a.est, "evaluate")?;
    let truth = read(&a.truth, "evaluate")?;
    let labels = a
        .labels
        .as_deref()
        .map(|p| read(p, "evaluate"))
        .transpose()?;
    let report = evaluation::evaluate(&est, &truth, labels.as_ref()).stage("evaluate")?;
    std::fs::write(&a.report, report.to_json() + "\n")
        .with_context(|| format!("writing {}", a.report.display()))
        .stage("evaluate")
}

/// Display range: explicit, full range for discrete maps, otherwise the 1st/99th percentiles.
pub fn render_range(img: &Image2D, min: Option<f64>, max: Option<f64>) -> (f64, f64) {
    if let (Some(lo), Some(hi)) = (min, max) {
        return (lo, hi);
    }
    match img.kind() {
        ImageKind::ScaleMap | ImageKind::Label => (
            img.data().iter().cloned().fold(f64::INFINITY, f64::min),
            img.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ),
        _ => (
            grids::percentile(img.data(), 1.0),
            grids::percentile(img.data(), 99.0),
        ),
    }
}

fn render(a: RenderArgs) -> Result<(), StageError> {
    let img = read(&a.input, "render")?;
    let (lo, hi) = render_range(&img, a.min, a.max);
    let gray = grids::render_gray(&img, lo, hi).stage("render")?;
    std::fs::write(&a.out, gray.to_pgm())
        .with_context(|| format!("writing {}", a.out.display()))
        .stage("render")
}

/// Row of the benchmark table.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub phantom: String,
    pub method: String,
    pub sizes: Vec<usize>,
    #[serde(serialize_with = "ser_sig6")]
    pub mad: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub rmse: f64,
    pub defect_count: usize,
    #[serde(serialize_with = "ser_sig6")]
    pub runtime_ms: f64,
}

fn ser_sig6<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(sig6(*v))
}

/// Six significant digits in plain or exponent form, whichever `f64` display picks after rounding.
pub fn fmt_sig6(v: f64) -> String {
    format!("{}", sig6(v))
}

#[doc(hidden)]
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let out = f();
    (out, t.elapsed().as_secs_f64() * 1e3)
}
