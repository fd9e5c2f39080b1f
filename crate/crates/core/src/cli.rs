//! Command-line front end. Every subcommand is a thin composition of the
//! library operations; JSON results go to stdout, human-readable notes to
//! stderr.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric or domain error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::distance::signed_distance;
use crate::error::{Error, Result};
use crate::fields::threshold;
use crate::flow::{contour_flow_with, flow_metrics, ContourFlow};
use crate::io;
use crate::losses::{combined_loss, shape_loss_2d, shape_loss_3d_fields, BaseLoss, LossValue};
use crate::pipeline::{run_toy, ToyCase, ToyConfig};
use crate::refine::{refine, RefineConfig};
use crate::segmetrics::{boundary_distance, dice_score};
use crate::synth::{
    corrupt, kmeans_features, synthesize, CorruptionMode, CorruptionSpec, ShapeKind, SynthSpec,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "contour-flow",
    version,
    about = "Contour-flow shape constraints for segmentation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signed distance function of a mask.
    Sdt {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Contour flow field of a signed distance function.
    Flow {
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Zero the flow on the one-pixel grid border.
        #[arg(long)]
        border_zero: bool,
    },
    /// Primal-dual refinement of a segmentation feature.
    Refine(RefineArgs),
    /// Loss values of a segmentation function.
    Loss(LossArgs),
    /// Dice, BD and BDSD of a predicted mask.
    Metrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// ACS, EPE and ADE between two flow fields.
    FlowMetrics {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
    },
    /// Render a synthetic test image and its mask.
    Synth(SynthArgs),
    /// Corrupt an image with noise or patches.
    Corrupt(CorruptArgs),
    /// Two-cluster K-means segmentation feature.
    Features {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// End-to-end toy recovery experiment.
    Demo(DemoArgs),
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub feature: PathBuf,
    #[arg(long)]
    pub flow: PathBuf,
    #[arg(long, default_value_t = 10.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 100)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub mask_out: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BaseArg {
    Ce,
    Dice,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    #[arg(long)]
    pub u: PathBuf,
    #[arg(long, conflicts_with = "phi", required_unless_present = "phi")]
    pub flow: Option<PathBuf>,
    /// Signed distance field; required for volumes.
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = BaseArg::Ce)]
    pub base: BaseArg,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ShapeArg {
    Disk,
    LetterC,
    TwoBlobs,
    Square,
}

impl From<ShapeArg> for ShapeKind {
    fn from(s: ShapeArg) -> Self {
        match s {
            ShapeArg::Disk => ShapeKind::Disk,
            ShapeArg::LetterC => ShapeKind::LetterC,
            ShapeArg::TwoBlobs => ShapeKind::TwoBlobs,
            ShapeArg::Square => ShapeKind::Square,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value_t = ShapeArg::Disk)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Defaults to 30/128 of the size.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Ring width of the letter C; defaults to 14/128 of the size.
    #[arg(long)]
    pub thickness: Option<f64>,
    #[arg(long, requires = "center_col")]
    pub center_row: Option<f64>,
    #[arg(long, requires = "center_row")]
    pub center_col: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Gaussian,
    Saltpepper,
    Patches,
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 20.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.02)]
    pub ratio: f64,
    #[arg(long, default_value_t = 12)]
    pub patches: usize,
    #[arg(long, default_value_t = 16)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CaseArg {
    Noise,
    Patch,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, value_enum)]
    pub case: CaseArg,
    #[arg(long, default_value_t = 0.0)]
    pub flow_delta: f64,
    #[arg(long)]
    pub workdir: PathBuf,
    #[arg(long, value_enum, default_value_t = ShapeArg::Disk)]
    pub shape: ShapeArg,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Corruption seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub patches: Option<usize>,
    #[arg(long)]
    pub patch_size: Option<usize>,
    #[arg(long, default_value_t = 7)]
    pub flow_seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tau: f64,
    /// Defaults to 100 for the noise case and 1000 for the patch case.
    #[arg(long)]
    pub iters: Option<usize>,
}

impl DemoArgs {
    pub fn toy_config(&self) -> ToyConfig {
        let case = match self.case {
            CaseArg::Noise => ToyCase::Noise,
            CaseArg::Patch => ToyCase::Patch,
        };
        let mut cfg = ToyConfig::new(case);
        cfg.shape = self.shape.into();
        cfg.size = self.size;
        cfg.flow_delta = self.flow_delta;
        cfg.flow_seed = self.flow_seed;
        cfg.eps = self.eps;
        cfg.tau = self.tau;
        if let Some(s) = self.seed {
            cfg.corruption_seed = s;
        }
        if let Some(s) = self.sigma {
            cfg.sigma = s;
        }
        if let Some(n) = self.patches {
            cfg.patch_count = n;
        }
        if let Some(n) = self.patch_size {
            cfg.patch_size = n;
        }
        if let Some(t) = self.iters {
            cfg.iters = t;
        }
        cfg
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    let text = io::report_json(value)?;
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

fn note(err: &mut dyn Write, msg: std::fmt::Arguments<'_>) {
    let _ = writeln!(err, "{msg}");
}

fn read_flow(path: &Path) -> Result<ContourFlow> {
    Ok(ContourFlow::from_field(io::read_vector_field(path)?))
}

#[derive(Serialize)]
struct LossReport {
    #[serde(flatten)]
    loss: LossValue,
    loss_mean: f64,
    per_term_mean: std::collections::BTreeMap<String, f64>,
}

impl From<LossValue> for LossReport {
    fn from(loss: LossValue) -> Self {
        let n = loss.pixel_count.max(1) as f64;
        LossReport {
            loss_mean: loss.total / n,
            per_term_mean: loss
                .per_term
                .iter()
                .map(|(k, v)| (k.clone(), v / n))
                .collect(),
            loss,
        }
    }
}

#[derive(Serialize)]
struct SegMetricsJson {
    dice_percent: f64,
    bd: f64,
    bdsd: f64,
}

#[derive(Serialize)]
struct FlowMetricsJson {
    acs: f64,
    epe: f64,
    ade: f64,
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Sdt { input, out: dest } => {
            let g = io::read_mask(&input)?;
            let sd = signed_distance(&g)?;
            io::write_scalar_field(&dest, sd.phi())?;
            note(
                err,
                format_args!("wrote signed distance to {}", dest.display()),
            );
        }
        Command::Flow {
            phi,
            out: dest,
            border_zero,
        } => {
            let phi = io::read_scalar_field(&phi)?;
            let f = contour_flow_with(&phi, border_zero)?;
            io::write_vector_field(&dest, f.field())?;
            note(
                err,
                format_args!(
                    "flow defined on {} of {} pixels",
                    f.defined().count(),
                    f.shape().len()
                ),
            );
        }
        Command::Refine(a) => {
            let o = io::read_scalar_field(&a.feature)?;
            let f = read_flow(&a.flow)?;
            let cfg = RefineConfig {
                eps: a.eps,
                tau: a.tau,
                iters: a.iters,
                record_trace: a.trace.is_some(),
            };
            let result = refine(&o, &f, &cfg)?;
            io::write_scalar_field(&a.out, &result.u)?;
            if let Some(path) = &a.mask_out {
                io::write_mask(path, &threshold(&result.u, a.threshold))?;
            }
            if let (Some(path), Some(trace)) = (&a.trace, &result.trace) {
                io::write_report(trace, path)?;
            }
            note(err, format_args!("refined {} iterations", a.iters));
        }
        Command::Loss(a) => {
            let u = io::read_scalar_field(&a.u)?;
            let loss = if u.shape().ndim() == 3 {
                let phi_path = a.phi.as_ref().ok_or(Error::Dimensionality {
                    expected: 2,
                    actual: 3,
                })?;
                shape_loss_3d_fields(&u, &io::read_scalar_field(phi_path)?)?
            } else {
                let flow = match (&a.flow, &a.phi) {
                    (Some(p), _) => read_flow(p)?,
                    (None, Some(p)) => contour_flow_with(&io::read_scalar_field(p)?, true)?,
                    (None, None) => unreachable!("clap requires one of --flow/--phi"),
                };
                match &a.gt {
                    Some(gt) => {
                        let g = io::read_mask(gt)?;
                        let base = match a.base {
                            BaseArg::Ce => BaseLoss::Ce,
                            BaseArg::Dice => BaseLoss::Dice,
                        };
                        combined_loss(&u, &g, &flow, a.alpha, a.beta, base)?
                    }
                    None => shape_loss_2d(&u, &flow)?,
                }
            };
            note(err, format_args!("loss total {:.6}", loss.total));
            emit(out, &LossReport::from(loss))?;
        }
        Command::Metrics { pred, gt } => {
            let (p, g) = (io::read_mask(&pred)?, io::read_mask(&gt)?);
            let dice_percent = dice_score(&p, &g)?;
            let (bd, bdsd) = boundary_distance(&p, &g)?;
            note(
                err,
                format_args!("dice {dice_percent:.2}%  bd {bd:.4}  bdsd {bdsd:.4}"),
            );
            emit(
                out,
                &SegMetricsJson {
                    dice_percent,
                    bd,
                    bdsd,
                },
            )?;
        }
        Command::FlowMetrics { pred, gt } => {
            let m = flow_metrics(&read_flow(&pred)?, &read_flow(&gt)?)?;
            note(
                err,
                format_args!("acs {:.4}  epe {:.4}  ade {:.4}", m.acs, m.epe, m.ade),
            );
            emit(
                out,
                &FlowMetricsJson {
                    acs: m.acs,
                    epe: m.epe,
                    ade: m.ade,
                },
            )?;
        }
        Command::Synth(a) => {
            let mut spec = SynthSpec::new(a.shape.into(), a.size);
            if let Some(r) = a.radius {
                spec.radius = r;
            }
            if let Some(t) = a.thickness {
                spec.thickness = t;
            }
            if let (Some(r), Some(c)) = (a.center_row, a.center_col) {
                spec.center = Some((r, c));
            }
            let (image, gt) = synthesize(&spec)?;
            io::write_pgm(&a.out, &image)?;
            io::write_mask(&a.gt, &gt)?;
            note(err, format_args!("{} foreground pixels", gt.count()));
        }
        Command::Corrupt(a) => {
            let image = io::read_pgm(&a.input)?;
            let spec = CorruptionSpec {
                mode: match a.mode {
                    ModeArg::Gaussian => CorruptionMode::Gaussian,
                    ModeArg::Saltpepper => CorruptionMode::SaltPepper,
                    ModeArg::Patches => CorruptionMode::Patches,
                },
                sigma: a.sigma,
                sp_ratio: a.ratio,
                patch_count: a.patches,
                patch_size: a.patch_size,
                seed: a.seed,
            };
            io::write_pgm(&a.out, &corrupt(&image, &spec)?)?;
        }
        Command::Features {
            input,
            k,
            seed,
            out: dest,
        } => {
            let image = io::read_pgm(&input)?;
            let o = kmeans_features(std::slice::from_ref(&image), k, seed)?;
            io::write_scalar_field(&dest, &o)?;
        }
        Command::Demo(a) => {
            let cfg = a.toy_config();
            let dir = &a.workdir;
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            let run = run_toy(&cfg)?;
            io::write_pgm(dir.join("image.pgm"), &run.image)?;
            io::write_mask(dir.join("gt.pgm"), &run.gt)?;
            io::write_pgm(dir.join("corrupted.pgm"), &run.corrupted)?;
            io::write_scalar_field(dir.join("feature.cff"), &run.feature)?;
            io::write_scalar_field(dir.join("phi.cff"), run.sdf.phi())?;
            io::write_vector_field(dir.join("flow_gt.cff"), run.gt_flow.field())?;
            io::write_vector_field(dir.join("flow.cff"), run.flow.field())?;
            io::write_scalar_field(dir.join("u_unrefined.cff"), &run.unrefined)?;
            io::write_mask(dir.join("seg_unrefined.pgm"), &run.unrefined_mask)?;
            io::write_scalar_field(dir.join("u.cff"), &run.refined.u)?;
            io::write_mask(dir.join("seg.pgm"), &run.refined_mask)?;
            if let Some(trace) = &run.refined.trace {
                io::write_report(trace, dir.join("trace.json"))?;
            }
            io::write_report(&run.summary, dir.join("summary.json"))?;
            let s = &run.summary;
            note(
                err,
                format_args!(
                    "unrefined: dice {:.2}%  bd {:.3}  bdsd {:.3}\n  refined: dice {:.2}%  bd {:.3}  bdsd {:.3}",
                    s.unrefined.dice_percent,
                    s.unrefined.bd,
                    s.unrefined.bdsd,
                    s.refined.dice_percent,
                    s.refined.bd,
                    s.refined.bdsd
                ),
            );
            emit(out, s)?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = write!(err, "{e}");
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            note(err, format_args!("error: {e}"));
            if e.is_io() {
                EXIT_IO
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(
        args,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    )
}
