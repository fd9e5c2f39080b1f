//! Contour flow fields: the unit tangent field of the level sets of a
//! signed distance function, plus noise injection and flow comparison.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BinaryMask, GridShape, ScalarField, VectorField};
use crate::operators::div_backward;

/// Gradients shorter than this leave the flow undefined.
pub const MIN_GRADIENT_NORM: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct ContourFlow {
    field: VectorField,
    defined: BinaryMask,
}

impl ContourFlow {
    /// Pairs a field with its support. Vectors outside `defined` are zeroed.
    pub fn new(mut field: VectorField, defined: BinaryMask) -> Result<Self> {
        field.shape().ensure_same(defined.shape())?;
        let nc = field.channels();
        for (i, &d) in defined.values().iter().enumerate() {
            if !d {
                field.values_mut()[i * nc..(i + 1) * nc].fill(0.0);
            }
        }
        Ok(ContourFlow { field, defined })
    }

    /// Support is every point with a nonzero vector.
    pub fn from_field(field: VectorField) -> Self {
        let defined = BinaryMask::new(
            field.shape().clone(),
            field.iter().map(|v| v.iter().any(|&x| x != 0.0)).collect(),
        )
        .expect("same length");
        ContourFlow { field, defined }
    }

    pub fn zeros(shape: GridShape) -> Self {
        ContourFlow {
            field: VectorField::zeros(shape.clone()),
            defined: BinaryMask::empty(shape),
        }
    }

    pub fn field(&self) -> &VectorField {
        &self.field
    }

    pub fn defined(&self) -> &BinaryMask {
        &self.defined
    }

    pub fn shape(&self) -> &GridShape {
        self.field.shape()
    }

    pub fn into_field(self) -> VectorField {
        self.field
    }
}

/// Central differences inside the grid, one-sided at its border.
/// Channels are `(d/dx, d/dy)` with `x` along columns.
pub fn central_gradient(phi: &ScalarField) -> Result<VectorField> {
    let shape = phi.shape();
    shape.ensure_ndim(2)?;
    let (h, w) = (shape.height(), shape.width());
    let diff = |lo: f64, hi: f64, span: usize| (hi - lo) / span as f64;
    let mut out = Vec::with_capacity(shape.len() * 2);
    for r in 0..h {
        for c in 0..w {
            let (c0, c1) = (c.saturating_sub(1), (c + 1).min(w - 1));
            let (r0, r1) = (r.saturating_sub(1), (r + 1).min(h - 1));
            let gx = if c1 > c0 {
                diff(phi.at(r, c0), phi.at(r, c1), c1 - c0)
            } else {
                0.0
            };
            let gy = if r1 > r0 {
                diff(phi.at(r0, c), phi.at(r1, c), r1 - r0)
            } else {
                0.0
            };
            out.push(gx);
            out.push(gy);
        }
    }
    Ok(VectorField::from_raw(shape.clone(), out))
}

/// `F = R(pi/2) grad(phi) / |grad(phi)|`, zeroed on the one-pixel grid border.
pub fn contour_flow(phi: &ScalarField) -> Result<ContourFlow> {
    contour_flow_with(phi, true)
}

/// As [`contour_flow`], with the grid-border zeroing optional.
pub fn contour_flow_with(phi: &ScalarField, zero_border: bool) -> Result<ContourFlow> {
    let grad = central_gradient(phi)?;
    let shape = phi.shape().clone();
    let (h, w) = (shape.height(), shape.width());
    let mut values = vec![0.0; shape.len() * 2];
    let mut defined = vec![false; shape.len()];
    for (i, g) in grad.iter().enumerate() {
        let [r, c, _] = shape.coords(i);
        if zero_border && (r == 0 || c == 0 || r + 1 == h || c + 1 == w) {
            continue;
        }
        let norm = g[0].hypot(g[1]);
        if norm < MIN_GRADIENT_NORM {
            continue;
        }
        // R(pi/2) (x, y) = (-y, x)
        values[2 * i] = -g[1] / norm;
        values[2 * i + 1] = g[0] / norm;
        defined[i] = true;
    }
    Ok(ContourFlow {
        field: VectorField::from_raw(shape.clone(), values),
        defined: BinaryMask::new(shape, defined)?,
    })
}

/// Adds independent `N(0, delta^2)` noise to every component on the
/// support. The result is not renormalized.
pub fn perturb_flow(f: &ContourFlow, delta: f64, seed: u64) -> Result<ContourFlow> {
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(Error::param("delta", format!("must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(f.clone());
    }
    let normal = Normal::new(0.0, delta).map_err(|e| Error::param("delta", e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut field = f.field.clone();
    let nc = field.channels();
    for i in f.defined.ones() {
        for v in &mut field.values_mut()[i * nc..(i + 1) * nc] {
            *v += normal.sample(&mut rng);
        }
    }
    Ok(ContourFlow {
        field,
        defined: f.defined.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowMetrics {
    /// Average cosine similarity.
    pub acs: f64,
    /// End-point error.
    pub epe: f64,
    /// Average divergence error.
    pub ade: f64,
    pub pixel_count: usize,
}

/// ACS, EPE and ADE over the pixels where both flows are defined.
pub fn flow_metrics(pred: &ContourFlow, gt: &ContourFlow) -> Result<FlowMetrics> {
    pred.shape().ensure_same(gt.shape())?;
    let div_pred = div_backward(&pred.field);
    let div_gt = div_backward(&gt.field);
    let (mut cos_sum, mut epe_sum, mut ade_sum) = (0.0, 0.0, 0.0);
    let mut count = 0usize;
    for i in 0..pred.shape().len() {
        if !(pred.defined.get(i) && gt.defined.get(i)) {
            continue;
        }
        let (p, g) = (pred.field.at(i), gt.field.at(i));
        let dot: f64 = p.iter().zip(g).map(|(a, b)| a * b).sum();
        let np = p.iter().map(|a| a * a).sum::<f64>().sqrt();
        let ng = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        if np > 0.0 && ng > 0.0 {
            cos_sum += dot / (np * ng);
        }
        epe_sum += p
            .iter()
            .zip(g)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        ade_sum += (div_pred.values()[i] - div_gt.values()[i]).abs();
        count += 1;
    }
    if count == 0 {
        return Err(Error::NoCommonSupport);
    }
    let n = count as f64;
    Ok(FlowMetrics {
        acs: cos_sum / n,
        epe: epe_sum / n,
        ade: ade_sum / n,
        pixel_count: count,
    })
}

/// Euclidean norm of `pred - gt` over all components.
pub fn flow_l2_loss(pred: &VectorField, gt: &VectorField) -> Result<f64> {
    pred.shape().ensure_same(gt.shape())?;
    Ok(pred
        .values()
        .iter()
        .zip(gt.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}
