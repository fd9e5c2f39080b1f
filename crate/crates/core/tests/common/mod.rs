//! Brute-force reference implementations shared by the integration tests.
//! Everything here is written as directly as possible, with no reuse of the
//! library's algorithms.

#![allow(dead_code)]

use contour_flow::{BinaryMask, GridShape, ScalarField, VectorField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn coords(shape: &GridShape) -> Vec<[i64; 3]> {
    (0..shape.len())
        .map(|i| {
            let [r, c, s] = shape.coords(i);
            [r as i64, c as i64, s as i64]
        })
        .collect()
}

pub fn random_mask(rng: &mut ChaCha8Rng, shape: GridShape, density: f64) -> BinaryMask {
    let n = shape.len();
    let vals = (0..n).map(|_| rng.random_bool(density)).collect();
    BinaryMask::new(shape, vals).unwrap()
}

/// Random mask with at least one foreground pixel.
pub fn nonempty_mask(rng: &mut ChaCha8Rng, shape: GridShape, density: f64) -> BinaryMask {
    loop {
        let m = random_mask(rng, shape.clone(), density);
        if m.count() > 0 {
            return m;
        }
    }
}

pub fn random_field(rng: &mut ChaCha8Rng, shape: GridShape, lo: f64, hi: f64) -> ScalarField {
    let vals = (0..shape.len()).map(|_| rng.random_range(lo..hi)).collect();
    ScalarField::new(shape, vals).unwrap()
}

pub fn random_vector_field(rng: &mut ChaCha8Rng, shape: GridShape) -> VectorField {
    let n = shape.len() * shape.ndim();
    let vals = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    VectorField::new(shape, vals).unwrap()
}

fn inside(shape: &GridShape, p: [i64; 3]) -> bool {
    (0..shape.ndim()).all(|a| p[a] >= 0 && p[a] < shape.extent(a) as i64)
}

fn flat(shape: &GridShape, p: [i64; 3]) -> usize {
    shape.index(p[0] as usize, p[1] as usize, p[2] as usize)
}

/// Foreground pixels with a face neighbour outside the mask or off the grid.
pub fn boundary(mask: &BinaryMask) -> Vec<bool> {
    let shape = mask.shape();
    coords(shape)
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            mask.get(i)
                && (0..shape.ndim()).any(|a| {
                    [-1, 1].iter().any(|&d| {
                        let mut q = p;
                        q[a] += d;
                        !inside(shape, q) || !mask.get(flat(shape, q))
                    })
                })
        })
        .collect()
}

fn dist(p: [i64; 3], q: [i64; 3]) -> f64 {
    let d2: i64 = (0..3).map(|a| (p[a] - q[a]).pow(2)).sum();
    (d2 as f64).sqrt()
}

/// Distance from every pixel to the nearest `true` entry of `sources`.
pub fn distance_field(shape: &GridShape, sources: &[bool]) -> Vec<f64> {
    let pts = coords(shape);
    let src: Vec<[i64; 3]> = pts
        .iter()
        .zip(sources)
        .filter(|(_, &s)| s)
        .map(|(p, _)| *p)
        .collect();
    pts.iter()
        .map(|&p| {
            src.iter()
                .map(|&q| dist(p, q))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Signed distance to the mask boundary: positive inside, zero on the
/// boundary, negative outside.
pub fn signed_distance(mask: &BinaryMask) -> Vec<f64> {
    let d = distance_field(mask.shape(), &boundary(mask));
    d.into_iter()
        .enumerate()
        .map(|(i, v)| if mask.get(i) { v } else { -v })
        .collect()
}

/// Forward differences per axis, channels ordered (cols, rows, slices).
pub fn gradient(u: &ScalarField) -> Vec<Vec<f64>> {
    let shape = u.shape();
    let axes: Vec<usize> = [1, 0, 2].into_iter().take(shape.ndim()).collect();
    coords(shape)
        .into_iter()
        .map(|p| {
            axes.iter()
                .map(|&a| {
                    let mut q = p;
                    q[a] += 1;
                    if inside(shape, q) {
                        u.values()[flat(shape, q)] - u.values()[flat(shape, p)]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn dice_percent(pred: &BinaryMask, gt: &BinaryMask) -> f64 {
    let inter = (0..pred.len())
        .filter(|&i| pred.get(i) && gt.get(i))
        .count();
    let total = pred.count() + gt.count();
    if total == 0 {
        100.0
    } else {
        200.0 * inter as f64 / total as f64
    }
}

/// Mean and population standard deviation of the distances from the
/// predicted boundary to the ground-truth boundary.
pub fn boundary_distance(pred: &BinaryMask, gt: &BinaryMask) -> (f64, f64) {
    let shape = pred.shape();
    let pts = coords(shape);
    let gb: Vec<[i64; 3]> = pts
        .iter()
        .zip(boundary(gt))
        .filter(|(_, b)| *b)
        .map(|(p, _)| *p)
        .collect();
    let d: Vec<f64> = pts
        .iter()
        .zip(boundary(pred))
        .filter(|(_, b)| *b)
        .map(|(&p, _)| gb.iter().map(|&q| dist(p, q)).fold(f64::INFINITY, f64::min))
        .collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn disk_mask(size: usize, cy: f64, cx: f64, radius: f64) -> BinaryMask {
    BinaryMask::from_fn(GridShape::plane(size, size), |r, c, _| {
        (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2) <= radius * radius
    })
}

pub fn square_mask(size: usize, lo: usize, hi: usize) -> BinaryMask {
    BinaryMask::from_fn(GridShape::plane(size, size), |r, c, _| {
        (lo..hi).contains(&r) && (lo..hi).contains(&c)
    })
}
