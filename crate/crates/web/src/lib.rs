//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each exported call runs one library operation and hands back RGBA pixel
//! buffers ready for `ImageData`, plus JSON for the numbers.

use contour_flow::distance::signed_distance;
use contour_flow::fields::{map_sigmoid, BinaryMask, ScalarField};
use contour_flow::flow::{contour_flow, ContourFlow};
use contour_flow::losses::shape_loss_2d;
use contour_flow::pipeline::{run_toy, ToyCase, ToyConfig};
use contour_flow::synth::{synthesize, ShapeKind, SynthSpec};
use contour_flow::{Error, Result};
use wasm_bindgen::prelude::*;

const MAX_SIZE: usize = 256;

fn parse_shape(name: &str) -> Result<ShapeKind> {
    match name {
        "disk" => Ok(ShapeKind::Disk),
        "letter-c" => Ok(ShapeKind::LetterC),
        "two-blobs" => Ok(ShapeKind::TwoBlobs),
        "square" => Ok(ShapeKind::Square),
        other => Err(Error::InvalidParameter {
            name: "shape",
            reason: format!("unknown shape {other:?}"),
        }),
    }
}

fn check_size(size: usize) -> Result<()> {
    if (8..=MAX_SIZE).contains(&size) {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name: "size",
            reason: format!("must lie in 8..={MAX_SIZE}"),
        })
    }
}

fn js_err(e: Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Grey ramp over `[lo, hi]`.
fn grey_rgba(field: &ScalarField, lo: f64, hi: f64) -> Vec<u8> {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    field
        .values()
        .iter()
        .flat_map(|&v| {
            let g = (255.0 * ((v - lo) / span).clamp(0.0, 1.0)).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

/// Grey probability map with the ground-truth boundary drawn in red.
fn overlay_rgba(u: &ScalarField, gt: &BinaryMask) -> Vec<u8> {
    let mut rgba = grey_rgba(u, 0.0, 1.0);
    let shape = gt.shape();
    let (h, w) = (shape.height(), shape.width());
    for r in 0..h {
        for c in 0..w {
            let inside = gt.at(r, c);
            let edge = inside
                && [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)]
                    .iter()
                    .any(|&(dr, dc)| {
                        let (rr, cc) = (r as i64 + dr, c as i64 + dc);
                        rr < 0
                            || cc < 0
                            || rr >= h as i64
                            || cc >= w as i64
                            || !gt.at(rr as usize, cc as usize)
                    });
            if edge {
                let i = 4 * shape.index(r, c, 0);
                rgba[i..i + 3].copy_from_slice(&[230, 40, 40]);
            }
        }
    }
    rgba
}

/// Diverging blue/white/orange map of a signed distance.
fn signed_rgba(phi: &ScalarField) -> Vec<u8> {
    let m = phi
        .values()
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()))
        .max(1.0);
    phi.values()
        .iter()
        .flat_map(|&v| {
            let t = (v / m).clamp(-1.0, 1.0);
            let fade = |x: f64| (255.0 * (1.0 - x.abs())).round() as u8;
            if t >= 0.0 {
                [255, fade(t * 0.6), fade(t), 255]
            } else {
                [fade(t), fade(t * 0.6), 255, 255]
            }
        })
        .collect()
}

/// Output of one toy recovery run.
#[wasm_bindgen]
pub struct DemoView {
    width: usize,
    height: usize,
    corrupted: Vec<u8>,
    unrefined: Vec<u8>,
    refined: Vec<u8>,
    summary: String,
}

#[wasm_bindgen]
impl DemoView {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }

    pub fn corrupted_rgba(&self) -> Vec<u8> {
        self.corrupted.clone()
    }

    pub fn unrefined_rgba(&self) -> Vec<u8> {
        self.unrefined.clone()
    }

    pub fn refined_rgba(&self) -> Vec<u8> {
        self.refined.clone()
    }

    pub fn summary_json(&self) -> String {
        self.summary.clone()
    }
}

pub fn demo_view(
    case: &str,
    shape: &str,
    size: usize,
    seed: Option<u64>,
    iters: Option<usize>,
    flow_delta: f64,
) -> Result<DemoView> {
    check_size(size)?;
    let mut cfg = ToyConfig::new(match case {
        "noise" => ToyCase::Noise,
        "patch" => ToyCase::Patch,
        other => {
            return Err(Error::InvalidParameter {
                name: "case",
                reason: format!("unknown case {other:?}"),
            })
        }
    });
    cfg.shape = parse_shape(shape)?;
    cfg.size = size;
    cfg.flow_delta = flow_delta;
    if let Some(s) = seed {
        cfg.corruption_seed = s;
    }
    if let Some(t) = iters {
        cfg.iters = t;
    }
    let run = run_toy(&cfg)?;
    Ok(DemoView {
        width: size,
        height: size,
        corrupted: grey_rgba(&run.corrupted, 0.0, 255.0),
        unrefined: overlay_rgba(&run.unrefined, &run.gt),
        refined: overlay_rgba(&run.refined.u, &run.gt),
        summary: serde_json::to_string(&run.summary).map_err(Error::from)?,
    })
}

/// Corrupts a synthetic shape, segments it with K-means and refines the
/// result with the shape's contour flow.
#[wasm_bindgen]
pub fn run_demo(
    case: &str,
    shape: &str,
    size: usize,
    seed: Option<u32>,
    iters: Option<u32>,
    flow_delta: f64,
) -> std::result::Result<DemoView, JsError> {
    demo_view(
        case,
        shape,
        size,
        seed.map(u64::from),
        iters.map(|t| t as usize),
        flow_delta,
    )
    .map_err(js_err)
}

/// Signed distance and contour flow of a synthetic shape.
#[wasm_bindgen]
pub struct FlowView {
    size: usize,
    sdf: Vec<u8>,
    flow: ContourFlow,
}

#[wasm_bindgen]
impl FlowView {
    #[wasm_bindgen(getter)]
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn sdf_rgba(&self) -> Vec<u8> {
        self.sdf.clone()
    }

    /// Flat `[row, col, fx, fy, ...]` samples on a `step`-pixel lattice,
    /// skipping pixels where the flow is undefined.
    pub fn arrows(&self, step: usize) -> Vec<f64> {
        let step = step.max(1);
        let shape = self.flow.shape();
        let mut out = Vec::new();
        for r in (step / 2..self.size).step_by(step) {
            for c in (step / 2..self.size).step_by(step) {
                let i = shape.index(r, c, 0);
                if self.flow.defined().get(i) {
                    let v = self.flow.field().at(i);
                    out.extend_from_slice(&[r as f64, c as f64, v[0], v[1]]);
                }
            }
        }
        out
    }
}

pub fn flow_view_of(shape: &str, size: usize) -> Result<FlowView> {
    check_size(size)?;
    let (_, gt) = synthesize(&SynthSpec::new(parse_shape(shape)?, size))?;
    let sd = signed_distance(&gt)?;
    Ok(FlowView {
        size,
        sdf: signed_rgba(sd.phi()),
        flow: contour_flow(sd.phi())?,
    })
}

#[wasm_bindgen]
pub fn flow_view(shape: &str, size: usize) -> std::result::Result<FlowView, JsError> {
    flow_view_of(shape, size).map_err(js_err)
}

/// Mean shape loss of a sigmoid segmentation built from the shape's own
/// signed distance shifted right by `shift` pixels, scored against the
/// unshifted contour flow. Zero shift gives a near-zero score.
pub fn shift_score_of(shape: &str, size: usize, shift: usize, eps: f64) -> Result<f64> {
    check_size(size)?;
    let kind = parse_shape(shape)?;
    let (_, gt) = synthesize(&SynthSpec::new(kind, size))?;
    let phi = signed_distance(&gt)?.into_phi();
    let flow = contour_flow(&phi)?;
    let mut spec = SynthSpec::new(kind, size);
    spec.center = Some(((size / 2) as f64, (size / 2 + shift) as f64));
    let (_, moved) = synthesize(&spec)?;
    let u = map_sigmoid(signed_distance(&moved)?.phi(), eps)?;
    let loss = shape_loss_2d(&u, &flow)?;
    Ok(loss.total / flow.defined().count().max(1) as f64)
}

#[wasm_bindgen]
pub fn shift_score(
    shape: &str,
    size: usize,
    shift: usize,
    eps: f64,
) -> std::result::Result<f64, JsError> {
    shift_score_of(shape, size, shift, eps).map_err(js_err)
}
