//! Synthetic toy images, image corruption and two-cluster K-means features.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{BinaryMask, GridShape, ScalarField};

pub const FG_VALUE: f64 = 255.0;
pub const BG_VALUE: f64 = 0.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Disk,
    LetterC,
    TwoBlobs,
    Square,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: ShapeKind,
    pub height: usize,
    pub width: usize,
    /// `(row, col)`; defaults to the grid centre.
    pub center: Option<(f64, f64)>,
    /// Disk radius, outer radius of the C, half-side of the square, spread of the blobs.
    pub radius: f64,
    /// Ring width of the C.
    pub thickness: f64,
    pub fg_value: f64,
    pub bg_value: f64,
}

impl SynthSpec {
    pub fn new(kind: ShapeKind, size: usize) -> Self {
        let s = size as f64;
        SynthSpec {
            kind,
            height: size,
            width: size,
            center: None,
            radius: (s * 30.0 / 128.0).max(1.0),
            thickness: (s * 14.0 / 128.0).max(1.0),
            fg_value: FG_VALUE,
            bg_value: BG_VALUE,
        }
    }

    fn center(&self) -> (f64, f64) {
        self.center
            .unwrap_or(((self.height / 2) as f64, (self.width / 2) as f64))
    }

    fn contains(&self, r: f64, c: f64) -> bool {
        let (cy, cx) = self.center();
        let (dy, dx) = (r - cy, c - cx);
        let rad = self.radius;
        match self.kind {
            ShapeKind::Disk => dx * dx + dy * dy <= rad * rad,
            ShapeKind::Square => dx.abs() <= rad && dy.abs() <= rad,
            ShapeKind::LetterC => {
                let d2 = dx * dx + dy * dy;
                let inner = (rad - self.thickness).max(0.0);
                // opening of +-45 degrees facing +x
                let in_gap = dx > 0.0 && dy.abs() < dx;
                d2 <= rad * rad && d2 >= inner * inner && !in_gap
            }
            ShapeKind::TwoBlobs => {
                let br = rad * 0.5;
                let off = rad * 0.75;
                let a = (dx + off).powi(2) + dy * dy <= br * br;
                let b = (dx - off).powi(2) + dy * dy <= br * br;
                a || b
            }
        }
    }
}

/// Renders the shape: `fg_value` on the mask, `bg_value` elsewhere.
pub fn synthesize(spec: &SynthSpec) -> Result<(ScalarField, BinaryMask)> {
    let shape = GridShape::new(&[spec.height, spec.width])?;
    if !(spec.radius > 0.0 && spec.thickness > 0.0) {
        return Err(Error::DegenerateGeometry(
            "radius and thickness must be positive".into(),
        ));
    }
    let gt = BinaryMask::from_fn(shape.clone(), |r, c, _| spec.contains(r as f64, c as f64));
    let n = gt.count();
    if n == 0 || n == shape.len() {
        return Err(Error::DegenerateGeometry(format!(
            "{:?} covers {n} of {} pixels",
            spec.kind,
            shape.len()
        )));
    }
    let image = ScalarField::new(
        shape,
        gt.values()
            .iter()
            .map(|&b| if b { spec.fg_value } else { spec.bg_value })
            .collect(),
    )?;
    Ok((image, gt))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptionMode {
    Gaussian,
    SaltPepper,
    Patches,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorruptionSpec {
    pub mode: CorruptionMode,
    /// Gaussian standard deviation in intensity units.
    pub sigma: f64,
    /// Fraction of pixels hit by salt-and-pepper noise.
    pub sp_ratio: f64,
    pub patch_count: usize,
    pub patch_size: usize,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        CorruptionSpec {
            mode: CorruptionMode::Gaussian,
            sigma: 20.0,
            sp_ratio: 0.02,
            patch_count: 12,
            patch_size: 16,
            seed: 42,
        }
    }
}

fn extreme(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        FG_VALUE
    } else {
        BG_VALUE
    }
}

/// Corrupts an 8-bit-range image. All randomness derives from `spec.seed`.
pub fn corrupt(image: &ScalarField, spec: &CorruptionSpec) -> Result<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = image.values().to_vec();
    match spec.mode {
        CorruptionMode::Gaussian => {
            if !(spec.sigma >= 0.0 && spec.sigma.is_finite()) {
                return Err(Error::param(
                    "sigma",
                    format!("must be >= 0, got {}", spec.sigma),
                ));
            }
            if spec.sigma > 0.0 {
                let normal = Normal::new(0.0, spec.sigma)
                    .map_err(|e| Error::param("sigma", e.to_string()))?;
                for v in &mut out {
                    *v = (*v + normal.sample(&mut rng)).clamp(BG_VALUE, FG_VALUE);
                }
            }
        }
        CorruptionMode::SaltPepper => {
            if !(0.0..=1.0).contains(&spec.sp_ratio) {
                return Err(Error::param(
                    "sp_ratio",
                    format!("must lie in [0, 1], got {}", spec.sp_ratio),
                ));
            }
            let count = (spec.sp_ratio * out.len() as f64).floor() as usize;
            for i in sample(&mut rng, out.len(), count).into_vec() {
                out[i] = extreme(&mut rng);
            }
        }
        CorruptionMode::Patches => {
            image.shape().ensure_ndim(2)?;
            let (h, w) = (image.shape().height(), image.shape().width());
            let side = spec.patch_size;
            if side == 0 || side > h || side > w {
                return Err(Error::param(
                    "patch_size",
                    format!("must lie in 1..={}, got {side}", h.min(w)),
                ));
            }
            for _ in 0..spec.patch_count {
                let r0 = rng.random_range(0..=h - side);
                let c0 = rng.random_range(0..=w - side);
                let value = extreme(&mut rng);
                for r in r0..r0 + side {
                    out[r * w + c0..r * w + c0 + side].fill(value);
                }
            }
        }
    }
    ScalarField::new(image.shape().clone(), out)
}

/// Absolute floor on the pooled within-cluster standard deviation.
pub const MIN_CLUSTER_SPREAD: f64 = 1e-6;
/// Relative floor: the spread is never taken below this fraction of the
/// distance between the two centroids, which caps `|o|` at
/// `1 / (2 * SPREAD_FLOOR_FRACTION^2)` on pixels sitting at a centroid.
pub const SPREAD_FLOOR_FRACTION: f64 = 0.15;
const KMEANS_TOL: f64 = 1e-6;
const KMEANS_MAX_ROUNDS: usize = 100;

/// Result of the two-cluster split behind [`kmeans_features`].
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterFit {
    pub foreground: Vec<f64>,
    pub background: Vec<f64>,
    /// Pooled within-cluster standard deviation per channel, before flooring.
    pub spread: f64,
    pub rounds: usize,
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let idx = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Two-cluster Lloyd iterations on per-pixel intensity vectors.
pub fn kmeans_fit(channels: &[ScalarField], k: usize, seed: u64) -> Result<ClusterFit> {
    if k != 2 {
        return Err(Error::param(
            "k",
            format!("only k = 2 is supported, got {k}"),
        ));
    }
    let first = channels
        .first()
        .ok_or_else(|| Error::param("channels", "at least one channel is required"))?;
    for ch in channels {
        first.shape().ensure_same(ch.shape())?;
    }
    let nc = channels.len();
    let n = first.len();
    let points: Vec<f64> = (0..n)
        .flat_map(|i| channels.iter().map(move |ch| ch.values()[i]))
        .collect();
    let point = |i: usize| &points[i * nc..(i + 1) * nc];

    let mut centroids: [Vec<f64>; 2] = [Vec::with_capacity(nc), Vec::with_capacity(nc)];
    for ch in channels {
        let mut sorted = ch.values().to_vec();
        sorted.sort_by(f64::total_cmp);
        centroids[0].push(nearest_rank(&sorted, 0.25));
        centroids[1].push(nearest_rank(&sorted, 0.75));
    }
    if centroids[0] == centroids[1] {
        // Quartiles coincide on skewed images: seed the second centroid
        // k-means++ style from the points away from the first.
        let weights: Vec<f64> = (0..n).map(|i| sq_dist(point(i), &centroids[0])).collect();
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Err(Error::SingleCluster);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = rng.random_range(0.0..total);
        let mut chosen = n - 1;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 && pick < w {
                chosen = i;
                break;
            }
            pick -= w;
        }
        if weights[chosen] == 0.0 {
            chosen = weights.iter().rposition(|&w| w > 0.0).expect("total > 0");
        }
        centroids[1] = point(chosen).to_vec();
    }

    let mut labels = vec![0u8; n];
    let mut rounds = 0;
    loop {
        rounds += 1;
        for (i, label) in labels.iter_mut().enumerate() {
            let p = point(i);
            *label = u8::from(sq_dist(p, &centroids[1]) < sq_dist(p, &centroids[0]));
        }
        let mut sums = [vec![0.0; nc], vec![0.0; nc]];
        let mut counts = [0usize; 2];
        for (i, &l) in labels.iter().enumerate() {
            counts[l as usize] += 1;
            for (s, x) in sums[l as usize].iter_mut().zip(point(i)) {
                *s += x;
            }
        }
        if counts.contains(&0) {
            return Err(Error::SingleCluster);
        }
        let mut moved: f64 = 0.0;
        for j in 0..2 {
            let next: Vec<f64> = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            moved = moved.max(sq_dist(&next, &centroids[j]).sqrt());
            centroids[j] = next;
        }
        if moved < KMEANS_TOL || rounds >= KMEANS_MAX_ROUNDS {
            break;
        }
    }
    // final assignment against the converged centroids
    let mut sse = 0.0;
    for i in 0..n {
        let p = point(i);
        sse += sq_dist(p, &centroids[0]).min(sq_dist(p, &centroids[1]));
    }
    let spread = (sse / (n * nc) as f64).sqrt();

    let brightness = |c: &Vec<f64>| c.iter().sum::<f64>();
    let [a, b] = centroids;
    let (foreground, background) = if brightness(&b) >= brightness(&a) {
        (b, a)
    } else {
        (a, b)
    };
    if foreground == background {
        return Err(Error::SingleCluster);
    }
    Ok(ClusterFit {
        foreground,
        background,
        spread,
        rounds,
    })
}

/// Segmentation feature from a two-cluster split:
/// `o = (|x - c_bg|^2 - |x - c_fg|^2) / (2 s^2)` with `s` the pooled
/// within-cluster spread. `s` is floored at `floor_fraction` times the
/// centroid separation and at [`MIN_CLUSTER_SPREAD`]. Positive means
/// foreground-like.
pub fn kmeans_features_with(
    channels: &[ScalarField],
    k: usize,
    seed: u64,
    floor_fraction: f64,
) -> Result<ScalarField> {
    if !(floor_fraction >= 0.0 && floor_fraction.is_finite()) {
        return Err(Error::param(
            "floor_fraction",
            format!("must be >= 0, got {floor_fraction}"),
        ));
    }
    let fit = kmeans_fit(channels, k, seed)?;
    let separation = sq_dist(&fit.foreground, &fit.background).sqrt();
    let s = fit
        .spread
        .max(floor_fraction * separation)
        .max(MIN_CLUSTER_SPREAD);
    let shape = channels[0].shape().clone();
    let mut x = vec![0.0; channels.len()];
    let values = (0..shape.len())
        .map(|i| {
            for (xc, ch) in x.iter_mut().zip(channels) {
                *xc = ch.values()[i];
            }
            (sq_dist(&x, &fit.background) - sq_dist(&x, &fit.foreground)) / (2.0 * s * s)
        })
        .collect();
    ScalarField::new(shape, values)
}

pub fn kmeans_features(channels: &[ScalarField], k: usize, seed: u64) -> Result<ScalarField> {
    kmeans_features_with(channels, k, seed, SPREAD_FLOOR_FRACTION)
}
