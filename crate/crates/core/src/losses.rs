//! Segmentation losses and their derivatives with respect to `u`.
//!
//! Every loss is a sum over pixels, not a mean.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distance::SignedDistance;
use crate::error::{Error, Result};
use crate::fields::{BinaryMask, ScalarField, VectorField};
use crate::flow::ContourFlow;
use crate::operators::{div_backward, grad_forward};

/// Probabilities are clamped into `[CE_CLAMP, 1 - CE_CLAMP]` before taking logs.
pub const CE_CLAMP: f64 = 1e-7;
/// Added to `|grad u|` in the shape-loss denominator.
pub const SHAPE_DENOM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossValue {
    #[serde(rename = "loss_total")]
    pub total: f64,
    pub per_term: BTreeMap<String, f64>,
    pub pixel_count: usize,
}

impl LossValue {
    fn single(name: &str, total: f64, pixel_count: usize) -> Self {
        LossValue {
            total,
            per_term: BTreeMap::from([(name.to_string(), total)]),
            pixel_count,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaseLoss {
    Ce,
    Dice,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossKind {
    Ce,
    Dice,
    Shape2d,
}

fn clamp_prob(u: f64) -> f64 {
    u.clamp(CE_CLAMP, 1.0 - CE_CLAMP)
}

/// `-sum(g ln u + (1 - g) ln(1 - u))`.
pub fn ce_loss(u: &ScalarField, g: &BinaryMask) -> Result<LossValue> {
    u.shape().ensure_same(g.shape())?;
    let total = -u
        .values()
        .iter()
        .zip(g.values())
        .map(|(&ui, &gi)| {
            let p = clamp_prob(ui);
            if gi {
                p.ln()
            } else {
                (1.0 - p).ln()
            }
        })
        .sum::<f64>();
    Ok(LossValue::single("ce", total, u.len()))
}

fn dice_sums(u: &ScalarField, g: &BinaryMask) -> (f64, f64) {
    let mut overlap = 0.0;
    let mut denom = 0.0;
    for (&ui, &gi) in u.values().iter().zip(g.values()) {
        if gi {
            overlap += ui;
            denom += 1.0;
        }
        denom += ui;
    }
    (overlap, denom)
}

/// `1 - 2 sum(u g) / (sum u + sum g)`, zero when both sums vanish.
pub fn dice_loss(u: &ScalarField, g: &BinaryMask) -> Result<LossValue> {
    u.shape().ensure_same(g.shape())?;
    let (overlap, denom) = dice_sums(u, g);
    let total = if denom == 0.0 {
        0.0
    } else {
        1.0 - 2.0 * overlap / denom
    };
    Ok(LossValue::single("dice", total, u.len()))
}

fn ensure_planar_pair(u: &ScalarField, f: &ContourFlow) -> Result<()> {
    u.shape().ensure_ndim(2)?;
    u.shape().ensure_same(f.shape())
}

/// `sum |<grad u, F>| / (|grad u| + eps)` over the flow's support.
pub fn shape_loss_2d(u: &ScalarField, f: &ContourFlow) -> Result<LossValue> {
    ensure_planar_pair(u, f)?;
    let grad = grad_forward(u);
    let mut total = 0.0;
    for i in f.defined().ones() {
        let (a, v) = (grad.at(i), f.field().at(i));
        let s = a[0] * v[0] + a[1] * v[1];
        total += s.abs() / (a[0].hypot(a[1]) + SHAPE_DENOM_EPS);
    }
    Ok(LossValue::single("shape", total, f.defined().count()))
}

fn cross_norm(a: &[f64], b: &[f64]) -> f64 {
    let cx = a[1] * b[2] - a[2] * b[1];
    let cy = a[2] * b[0] - a[0] * b[2];
    let cz = a[0] * b[1] - a[1] * b[0];
    (cx * cx + cy * cy + cz * cz).sqrt()
}

/// `sum |grad u x grad phi|` over every voxel.
pub fn shape_loss_3d(u: &ScalarField, phi: &SignedDistance) -> Result<LossValue> {
    shape_loss_3d_fields(u, phi.phi())
}

/// [`shape_loss_3d`] against an arbitrary reference field.
pub fn shape_loss_3d_fields(u: &ScalarField, phi: &ScalarField) -> Result<LossValue> {
    u.shape().ensure_ndim(3)?;
    u.shape().ensure_same(phi.shape())?;
    let (gu, gp) = (grad_forward(u), grad_forward(phi));
    let total = gu
        .iter()
        .zip(gp.iter())
        .map(|(a, b)| cross_norm(a, b))
        .sum();
    Ok(LossValue::single("shape3d", total, u.len()))
}

/// `alpha * base + beta * shape`.
pub fn combined_loss(
    u: &ScalarField,
    g: &BinaryMask,
    f: &ContourFlow,
    alpha: f64,
    beta: f64,
    base: BaseLoss,
) -> Result<LossValue> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param(
            "alpha",
            format!("must be positive, got {alpha}"),
        ));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::param(
            "beta",
            format!("must be positive, got {beta}"),
        ));
    }
    let base_value = match base {
        BaseLoss::Ce => ce_loss(u, g)?,
        BaseLoss::Dice => dice_loss(u, g)?,
    };
    let shape = shape_loss_2d(u, f)?;
    let mut per_term = base_value.per_term;
    per_term.extend(shape.per_term);
    Ok(LossValue {
        total: alpha * base_value.total + beta * shape.total,
        per_term,
        pixel_count: u.len(),
    })
}

/// Inputs a loss needs beyond `u`.
#[derive(Clone, Copy, Debug, Default)]
pub struct LossContext<'a> {
    pub gt: Option<&'a BinaryMask>,
    pub flow: Option<&'a ContourFlow>,
}

fn need<'a, T>(v: Option<&'a T>, name: &'static str) -> Result<&'a T> {
    v.ok_or_else(|| Error::param(name, "required by this loss"))
}

/// Per-pixel derivative of the chosen loss with respect to `u`.
///
/// CE uses the clamped probabilities (zero derivative where clamping is
/// active). The shape loss takes subgradient 0 where `<grad u, F> = 0`.
pub fn loss_gradient(kind: LossKind, u: &ScalarField, ctx: LossContext<'_>) -> Result<ScalarField> {
    match kind {
        LossKind::Ce => {
            let g = need(ctx.gt, "gt")?;
            u.shape().ensure_same(g.shape())?;
            let vals = u
                .values()
                .iter()
                .zip(g.values())
                .map(|(&ui, &gi)| {
                    if !(CE_CLAMP..=1.0 - CE_CLAMP).contains(&ui) {
                        0.0
                    } else if gi {
                        -1.0 / ui
                    } else {
                        1.0 / (1.0 - ui)
                    }
                })
                .collect();
            ScalarField::new(u.shape().clone(), vals)
        }
        LossKind::Dice => {
            let g = need(ctx.gt, "gt")?;
            u.shape().ensure_same(g.shape())?;
            let (overlap, denom) = dice_sums(u, g);
            if denom == 0.0 {
                return Ok(ScalarField::zeros(u.shape().clone()));
            }
            let vals = g
                .values()
                .iter()
                .map(|&gi| -2.0 * (f64::from(u8::from(gi)) * denom - overlap) / (denom * denom))
                .collect();
            ScalarField::new(u.shape().clone(), vals)
        }
        LossKind::Shape2d => {
            let f = need(ctx.flow, "flow")?;
            ensure_planar_pair(u, f)?;
            let grad = grad_forward(u);
            let mut dual = vec![0.0; u.len() * 2];
            for i in f.defined().ones() {
                let (a, v) = (grad.at(i), f.field().at(i));
                let s = a[0] * v[0] + a[1] * v[1];
                if s == 0.0 {
                    continue;
                }
                let n = a[0].hypot(a[1]);
                let den = n + SHAPE_DENOM_EPS;
                for c in 0..2 {
                    // d/da [ |s| / (|a| + eps) ]
                    dual[2 * i + c] = s.signum() * v[c] / den - s.abs() * a[c] / (n * den * den);
                }
            }
            // grad_forward^T = -div_backward
            let w = VectorField::new(u.shape().clone(), dual)?;
            div_backward(&w).map(|x| -x)
        }
    }
}
