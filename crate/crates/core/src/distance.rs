//! Exact Euclidean signed distance to the boundary of a binary mask.
//!
//! Squared distances are computed with the separable lower-envelope
//! transform in integer arithmetic, one pass per axis. Envelope breakpoints
//! are compared as exact rationals so the result matches a brute-force
//! scan bit-for-bit before the square root.

use crate::error::{Error, Result};
use crate::fields::{BinaryMask, GridShape, ScalarField};

const UNREACHED: i64 = i64::MAX;

/// Foreground pixels with a background 4-neighbour (6 in 3D) or lying on the grid border.
pub fn boundary_pixels(g: &BinaryMask) -> BinaryMask {
    let shape = g.shape();
    let ndim = shape.ndim();
    BinaryMask::from_fn(shape.clone(), |r, c, s| {
        let i = shape.index(r, c, s);
        if !g.get(i) {
            return false;
        }
        let pos = [r, c, s];
        (0..ndim).any(|axis| {
            let n = shape.extent(axis);
            let stride = shape.stride(axis);
            pos[axis] == 0 || pos[axis] + 1 == n || !g.get(i - stride) || !g.get(i + stride)
        })
    })
}

/// One-dimensional squared distance transform of `f` in place.
///
/// `UNREACHED` entries are treated as +infinity; a line with no finite
/// entry is left untouched.
fn transform_line(f: &mut [i64], sites: &mut Vec<usize>, breaks: &mut Vec<(i128, i128)>) {
    sites.clear();
    breaks.clear();
    let lift = |f: &[i64], p: usize| f[p] as i128 + (p as i128) * (p as i128);

    for q in 0..f.len() {
        if f[q] == UNREACHED {
            continue;
        }
        loop {
            let Some(&p) = sites.last() else {
                sites.push(q);
                breaks.push((i128::MIN, 1));
                break;
            };
            // Abscissa where the parabolas rooted at p and q intersect.
            let num = lift(f, q) - lift(f, p);
            let den = 2 * (q as i128 - p as i128);
            let (bnum, bden) = *breaks.last().unwrap();
            if sites.len() > 1 && num * bden <= bnum * den {
                sites.pop();
                breaks.pop();
                continue;
            }
            sites.push(q);
            breaks.push((num, den));
            break;
        }
    }
    if sites.is_empty() {
        return;
    }

    let mut k = 0;
    let snapshot: Vec<i64> = sites.iter().map(|&p| f[p]).collect();
    for (x, out) in f.iter_mut().enumerate() {
        while k + 1 < sites.len() {
            let (bnum, bden) = breaks[k + 1];
            if bnum < (x as i128) * bden {
                k += 1;
            } else {
                break;
            }
        }
        let d = x as i64 - sites[k] as i64;
        *out = d * d + snapshot[k];
    }
}

/// Squared Euclidean distance (in pixels squared) from every grid point to
/// the nearest set pixel of `sources`. `None` when `sources` is empty.
pub fn squared_distance_to(sources: &BinaryMask) -> Option<Vec<i64>> {
    if sources.count() == 0 {
        return None;
    }
    let shape = sources.shape();
    let mut dist: Vec<i64> = sources
        .values()
        .iter()
        .map(|&b| if b { 0 } else { UNREACHED })
        .collect();

    let mut line = Vec::new();
    let mut sites = Vec::new();
    let mut breaks = Vec::new();
    for axis in 0..shape.ndim() {
        let n = shape.extent(axis);
        let stride = shape.stride(axis);
        for start in 0..shape.len() {
            if shape.coords(start)[axis] != 0 {
                continue;
            }
            line.clear();
            line.extend((0..n).map(|k| dist[start + k * stride]));
            transform_line(&mut line, &mut sites, &mut breaks);
            for (k, &v) in line.iter().enumerate() {
                dist[start + k * stride] = v;
            }
        }
    }
    Some(dist)
}

/// Unsigned Euclidean distance to the nearest set pixel of `sources`.
pub fn distance_to(sources: &BinaryMask) -> Result<ScalarField> {
    let sq = squared_distance_to(sources).ok_or(Error::EmptyBoundary { which: "source" })?;
    Ok(ScalarField::from_raw(
        sources.shape().clone(),
        sq.into_iter().map(|d| (d as f64).sqrt()).collect(),
    ))
}

/// Signed distance function of a mask: positive inside, zero on the
/// boundary pixels, negative outside.
#[derive(Clone, Debug, PartialEq)]
pub struct SignedDistance {
    phi: ScalarField,
    source: BinaryMask,
}

impl SignedDistance {
    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn source(&self) -> &BinaryMask {
        &self.source
    }

    pub fn shape(&self) -> &GridShape {
        self.phi.shape()
    }

    pub fn into_phi(self) -> ScalarField {
        self.phi
    }
}

pub fn signed_distance(g: &BinaryMask) -> Result<SignedDistance> {
    if g.count() == 0 {
        return Err(Error::EmptyForeground);
    }
    let boundary = boundary_pixels(g);
    let sq = squared_distance_to(&boundary).expect("nonempty foreground has a boundary");
    let values = sq
        .iter()
        .zip(g.values())
        .map(|(&d, &inside)| {
            let r = (d as f64).sqrt();
            if inside {
                r
            } else {
                -r
            }
        })
        .collect();
    Ok(SignedDistance {
        phi: ScalarField::from_raw(g.shape().clone(), values),
        source: g.clone(),
    })
}
