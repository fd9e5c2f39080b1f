//! Dice overlap and boundary-distance statistics between two masks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::distance::{boundary_pixels, squared_distance_to};
use crate::error::{Error, Result};
use crate::fields::BinaryMask;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub dice_percent: f64,
    /// Mean distance from predicted boundary pixels to the reference boundary, in pixels.
    pub bd: f64,
    /// Population standard deviation of the same distances.
    pub bdsd: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub aux: BTreeMap<String, f64>,
}

/// `200 |A & B| / (|A| + |B|)`; 100 when both are empty.
pub fn dice_score(pred: &BinaryMask, gt: &BinaryMask) -> Result<f64> {
    pred.shape().ensure_same(gt.shape())?;
    let both = pred
        .values()
        .iter()
        .zip(gt.values())
        .filter(|(&a, &b)| a && b)
        .count();
    let total = pred.count() + gt.count();
    if total == 0 {
        return Ok(100.0);
    }
    Ok(200.0 * both as f64 / total as f64)
}

/// Distances from each boundary pixel of `pred` to the boundary of `gt`,
/// in ascending flat-index order.
pub fn boundary_distances(pred: &BinaryMask, gt: &BinaryMask) -> Result<Vec<f64>> {
    pred.shape().ensure_same(gt.shape())?;
    let pred_boundary = boundary_pixels(pred);
    if pred_boundary.count() == 0 {
        return Err(Error::EmptyBoundary { which: "predicted" });
    }
    let sq = squared_distance_to(&boundary_pixels(gt)).ok_or(Error::EmptyBoundary {
        which: "ground-truth",
    })?;
    Ok(pred_boundary
        .ones()
        .map(|i| (sq[i] as f64).sqrt())
        .collect())
}

/// `(BD, BDSD)`: mean and population standard deviation of
/// [`boundary_distances`]. One-directional, `pred` to `gt`.
pub fn boundary_distance(pred: &BinaryMask, gt: &BinaryMask) -> Result<(f64, f64)> {
    let d = boundary_distances(pred, gt)?;
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

pub fn evaluate(pred: &BinaryMask, gt: &BinaryMask) -> Result<MetricsReport> {
    let dice_percent = dice_score(pred, gt)?;
    let (bd, bdsd) = boundary_distance(pred, gt)?;
    let aux = BTreeMap::from([
        ("pred_pixels".to_string(), pred.count() as f64),
        ("gt_pixels".to_string(), gt.count() as f64),
        (
            "pred_boundary".to_string(),
            boundary_pixels(pred).count() as f64,
        ),
        (
            "gt_boundary".to_string(),
            boundary_pixels(gt).count() as f64,
        ),
    ]);
    Ok(MetricsReport {
        dice_percent,
        bd,
        bdsd,
        aux,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridShape;

    fn square(shape: &GridShape, r0: usize, c0: usize, side: usize) -> BinaryMask {
        BinaryMask::from_fn(shape.clone(), |r, c, _| {
            (r0..r0 + side).contains(&r) && (c0..c0 + side).contains(&c)
        })
    }

    #[test]
    fn dice_examples() {
        let shape = GridShape::plane(10, 10);
        let a = square(&shape, 2, 2, 4);
        assert_eq!(dice_score(&a, &a).unwrap(), 100.0);
        assert_eq!(dice_score(&a, &square(&shape, 6, 6, 3)).unwrap(), 0.0);
        assert_eq!(dice_score(&a, &square(&shape, 2, 3, 4)).unwrap(), 75.0);
        let e = BinaryMask::empty(shape);
        assert_eq!(dice_score(&e, &e).unwrap(), 100.0);
    }

    #[test]
    fn identical_masks_have_zero_boundary_distance() {
        let shape = GridShape::plane(12, 12);
        let a = square(&shape, 3, 4, 5);
        let r = evaluate(&a, &a).unwrap();
        assert_eq!((r.dice_percent, r.bd, r.bdsd), (100.0, 0.0, 0.0));
    }

    #[test]
    fn empty_boundaries_are_errors() {
        let shape = GridShape::plane(5, 5);
        let a = square(&shape, 1, 1, 2);
        let e = BinaryMask::empty(shape);
        assert!(matches!(
            boundary_distance(&e, &a),
            Err(Error::EmptyBoundary { which: "predicted" })
        ));
        assert!(matches!(
            boundary_distance(&a, &e),
            Err(Error::EmptyBoundary {
                which: "ground-truth"
            })
        ));
    }
}
