//! The toy recovery experiment: synthesize a shape, corrupt it, segment it
//! with K-means, then refine the segmentation with the ground-truth flow.

use serde::{Deserialize, Serialize};

use crate::distance::{signed_distance, SignedDistance};
use crate::error::Result;
use crate::fields::{map_sigmoid, threshold, BinaryMask, ScalarField};
use crate::flow::{contour_flow_with, flow_metrics, perturb_flow, ContourFlow, FlowMetrics};
use crate::io::{quantize_8bit, quantize_f32, quantize_f32_vector};
use crate::refine::{refine, RefineConfig, Refinement};
use crate::segmetrics::{evaluate, MetricsReport};
use crate::synth::{
    corrupt, kmeans_features_with, synthesize, CorruptionMode, CorruptionSpec, ShapeKind,
    SynthSpec, SPREAD_FLOOR_FRACTION,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyCase {
    /// Additive Gaussian noise.
    Noise,
    /// Random black or white square patches.
    Patch,
}

impl ToyCase {
    pub fn default_iters(self) -> usize {
        match self {
            ToyCase::Noise => 100,
            ToyCase::Patch => 1000,
        }
    }
}

/// Corruption seed of the patch case. Seeds whose patches punch a hole in
/// the middle of the shape leave a closed inner contour that no flow
/// constraint can remove; seed 0 keeps the damage on and near the boundary.
pub const PATCH_DEMO_SEED: u64 = 0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub case: ToyCase,
    pub shape: ShapeKind,
    pub size: usize,
    pub sigma: f64,
    pub patch_count: usize,
    pub patch_size: usize,
    pub corruption_seed: u64,
    pub kmeans_seed: u64,
    pub spread_floor: f64,
    pub flow_delta: f64,
    pub flow_seed: u64,
    pub eps: f64,
    pub tau: f64,
    pub iters: usize,
    pub threshold: f64,
}

impl ToyConfig {
    pub fn new(case: ToyCase) -> Self {
        let corruption = CorruptionSpec::default();
        ToyConfig {
            case,
            shape: ShapeKind::Disk,
            size: 128,
            sigma: corruption.sigma,
            patch_count: corruption.patch_count,
            patch_size: corruption.patch_size,
            corruption_seed: match case {
                ToyCase::Noise => corruption.seed,
                ToyCase::Patch => PATCH_DEMO_SEED,
            },
            kmeans_seed: 0,
            spread_floor: SPREAD_FLOOR_FRACTION,
            flow_delta: 0.0,
            flow_seed: 7,
            eps: 10.0,
            tau: 10.0,
            iters: case.default_iters(),
            threshold: 0.5,
        }
    }

    pub fn corruption(&self) -> CorruptionSpec {
        CorruptionSpec {
            mode: match self.case {
                ToyCase::Noise => CorruptionMode::Gaussian,
                ToyCase::Patch => CorruptionMode::Patches,
            },
            sigma: self.sigma,
            patch_count: self.patch_count,
            patch_size: self.patch_size,
            seed: self.corruption_seed,
            ..CorruptionSpec::default()
        }
    }

    pub fn refine_config(&self) -> RefineConfig {
        RefineConfig {
            eps: self.eps,
            tau: self.tau,
            iters: self.iters,
            record_trace: true,
        }
    }
}

/// Every intermediate of one toy run.
#[derive(Clone, Debug)]
pub struct ToyRun {
    pub image: ScalarField,
    pub gt: BinaryMask,
    pub corrupted: ScalarField,
    pub feature: ScalarField,
    pub sdf: SignedDistance,
    pub gt_flow: ContourFlow,
    /// Flow handed to the solver (perturbed when `flow_delta > 0`).
    pub flow: ContourFlow,
    pub unrefined: ScalarField,
    pub unrefined_mask: BinaryMask,
    pub refined: Refinement,
    pub refined_mask: BinaryMask,
    pub summary: ToySummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToySummary {
    pub config: ToyConfig,
    pub unrefined: MetricsReport,
    pub refined: MetricsReport,
    pub flow: Option<FlowMetrics>,
    pub residual_first: f64,
    pub residual_last: f64,
}

/// Runs the experiment. Every intermediate that the command line writes to
/// disk is rounded to its file precision before the next step consumes it,
/// so replaying the steps from the written files reproduces the outputs
/// bit for bit.
pub fn run_toy(cfg: &ToyConfig) -> Result<ToyRun> {
    let (image, gt) = synthesize(&SynthSpec::new(cfg.shape, cfg.size))?;
    let corrupted = quantize_8bit(&corrupt(&image, &cfg.corruption())?);
    let feature = quantize_f32(&kmeans_features_with(
        std::slice::from_ref(&corrupted),
        2,
        cfg.kmeans_seed,
        cfg.spread_floor,
    )?)?;
    let sdf = signed_distance(&gt)?;
    let gt_flow = contour_flow_with(&quantize_f32(sdf.phi())?, true)?;
    let gt_flow = ContourFlow::from_field(quantize_f32_vector(gt_flow.field())?);
    let flow = perturb_flow(&gt_flow, cfg.flow_delta, cfg.flow_seed)?;
    let flow = ContourFlow::from_field(quantize_f32_vector(flow.field())?);

    let unrefined = map_sigmoid(&feature, cfg.eps)?;
    let unrefined_mask = threshold(&unrefined, cfg.threshold);
    let refined = refine(&feature, &flow, &cfg.refine_config())?;
    let refined_mask = threshold(&refined.u, cfg.threshold);

    let trace = refined.trace.as_ref().expect("trace recorded");
    let summary = ToySummary {
        config: cfg.clone(),
        unrefined: evaluate(&unrefined_mask, &gt)?,
        refined: evaluate(&refined_mask, &gt)?,
        flow: (cfg.flow_delta > 0.0)
            .then(|| flow_metrics(&flow, &gt_flow))
            .transpose()?,
        residual_first: trace.residual[0],
        residual_last: *trace.residual.last().expect("iters >= 1"),
    };
    Ok(ToyRun {
        image,
        gt,
        corrupted,
        feature,
        sdf,
        gt_flow,
        flow,
        unrefined,
        unrefined_mask,
        refined,
        refined_mask,
        summary,
    })
}
