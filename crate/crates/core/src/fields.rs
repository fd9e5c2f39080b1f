//! Grid containers shared by every other module.
//!
//! All grids are stored row-major with index `(row, col[, slice])`. Vector
//! fields interleave their channels per grid point, in the order
//! `(x, y[, z])` where `x` runs along columns (axis 1), `y` along rows
//! (axis 0) and `z` along slices (axis 2).

use crate::error::{Error, Result};

/// Grid axis that each vector channel differentiates along.
pub const AXIS_OF_CHANNEL: [usize; 3] = [1, 0, 2];

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: Vec<usize>,
}

impl GridShape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if !(dims.len() == 2 || dims.len() == 3) || dims.contains(&0) {
            return Err(Error::InvalidShape(dims.to_vec()));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape(dims.to_vec()))?;
        Ok(GridShape {
            dims: dims.to_vec(),
        })
    }

    /// A `height x width` plane. Panics on a zero extent.
    pub fn plane(height: usize, width: usize) -> Self {
        Self::new(&[height, width]).expect("plane extents must be positive")
    }

    /// A `height x width x depth` volume. Panics on a zero extent.
    pub fn volume(height: usize, width: usize, depth: usize) -> Self {
        Self::new(&[height, width, depth]).expect("volume extents must be positive")
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn height(&self) -> usize {
        self.dims[0]
    }

    pub fn width(&self) -> usize {
        self.dims[1]
    }

    pub fn depth(&self) -> usize {
        self.dims.get(2).copied().unwrap_or(1)
    }

    /// Extent along `axis`; axis 2 of a plane has extent 1.
    pub fn extent(&self, axis: usize) -> usize {
        self.dims.get(axis).copied().unwrap_or(1)
    }

    /// Flat-index stride of `axis`.
    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => self.width() * self.depth(),
            1 => self.depth(),
            _ => 1,
        }
    }

    pub fn index(&self, row: usize, col: usize, slice: usize) -> usize {
        debug_assert!(row < self.height() && col < self.width() && slice < self.depth());
        (row * self.width() + col) * self.depth() + slice
    }

    /// `(row, col, slice)` of a flat index; slice is 0 for planes.
    pub fn coords(&self, index: usize) -> [usize; 3] {
        let d = self.depth();
        let w = self.width();
        [index / (w * d), (index / d) % w, index % d]
    }

    pub(crate) fn ensure_same(&self, other: &GridShape) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch {
                left: self.dims.clone(),
                right: other.dims.clone(),
            });
        }
        Ok(())
    }

    pub(crate) fn ensure_ndim(&self, expected: usize) -> Result<()> {
        if self.ndim() != expected {
            return Err(Error::Dimensionality {
                expected,
                actual: self.ndim(),
            });
        }
        Ok(())
    }
}

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFiniteValue { index }),
        None => Ok(()),
    }
}

/// A real value per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    shape: GridShape,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                actual: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(ScalarField { shape, values })
    }

    /// Caller guarantees length and finiteness.
    pub(crate) fn from_raw(shape: GridShape, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), shape.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        ScalarField { shape, values }
    }

    pub fn filled(shape: GridShape, value: f64) -> Self {
        assert!(value.is_finite());
        let n = shape.len();
        ScalarField {
            shape,
            values: vec![value; n],
        }
    }

    pub fn zeros(shape: GridShape) -> Self {
        Self::filled(shape, 0.0)
    }

    /// Builds a field from `f(row, col, slice)`. Panics if `f` returns a non-finite value.
    pub fn from_fn(shape: GridShape, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let values: Vec<f64> = (0..shape.len())
            .map(|i| {
                let [r, c, s] = shape.coords(i);
                f(r, c, s)
            })
            .collect();
        Self::new(shape, values).expect("from_fn produced a non-finite value")
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[self.shape.index(row, col, 0)]
    }

    pub fn at3(&self, row: usize, col: usize, slice: usize) -> f64 {
        self.values[self.shape.index(row, col, slice)]
    }

    /// Sequential left-to-right sum.
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn dot(&self, other: &ScalarField) -> Result<f64> {
        self.shape.ensure_same(&other.shape)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<ScalarField> {
        ScalarField::new(
            self.shape.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// A `ndim`-vector per grid point, channel-interleaved.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    shape: GridShape,
    values: Vec<f64>,
}

impl VectorField {
    pub fn new(shape: GridShape, values: Vec<f64>) -> Result<Self> {
        let expected = shape.len() * shape.ndim();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: values.len(),
            });
        }
        check_finite(&values)?;
        Ok(VectorField { shape, values })
    }

    pub(crate) fn from_raw(shape: GridShape, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), shape.len() * shape.ndim());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        VectorField { shape, values }
    }

    pub fn zeros(shape: GridShape) -> Self {
        let n = shape.len() * shape.ndim();
        VectorField {
            shape,
            values: vec![0.0; n],
        }
    }

    /// Builds a field from `f(row, col, slice)` returning the channel values.
    pub fn from_fn(shape: GridShape, mut f: impl FnMut(usize, usize, usize) -> Vec<f64>) -> Self {
        let nc = shape.ndim();
        let mut values = Vec::with_capacity(shape.len() * nc);
        for i in 0..shape.len() {
            let [r, c, s] = shape.coords(i);
            let v = f(r, c, s);
            assert_eq!(v.len(), nc, "wrong channel count");
            values.extend(v);
        }
        Self::new(shape, values).expect("from_fn produced a non-finite value")
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn channels(&self) -> usize {
        self.shape.ndim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Channel values at flat grid index `i`.
    pub fn at(&self, i: usize) -> &[f64] {
        let nc = self.channels();
        &self.values[i * nc..(i + 1) * nc]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.channels())
    }

    pub fn dot(&self, other: &VectorField) -> Result<f64> {
        self.shape.ensure_same(&other.shape)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Pointwise inner product `<self(i), other(i)>`.
    pub fn pointwise_dot(&self, other: &VectorField) -> Result<ScalarField> {
        self.shape.ensure_same(&other.shape)?;
        let values = self
            .iter()
            .zip(other.iter())
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect();
        Ok(ScalarField::from_raw(self.shape.clone(), values))
    }

    /// Per-point Euclidean norm.
    pub fn norms(&self) -> ScalarField {
        let values = self
            .iter()
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .collect();
        ScalarField::from_raw(self.shape.clone(), values)
    }

    /// Scales the vector at each point by `scale(i)`.
    pub fn scaled_by(&self, scale: &ScalarField) -> Result<VectorField> {
        self.shape.ensure_same(scale.shape())?;
        let nc = self.channels();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| v * scale.values()[k / nc])
            .collect();
        VectorField::new(self.shape.clone(), values)
    }
}

/// A {0,1} value per grid point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryMask {
    shape: GridShape,
    values: Vec<bool>,
}

impl BinaryMask {
    pub fn new(shape: GridShape, values: Vec<bool>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::LengthMismatch {
                expected: shape.len(),
                actual: values.len(),
            });
        }
        Ok(BinaryMask { shape, values })
    }

    /// Accepts only exact 0/1 entries.
    pub fn from_u8(shape: GridShape, values: &[u8]) -> Result<Self> {
        if let Some(bad) = values.iter().position(|&v| v > 1) {
            return Err(Error::param(
                "mask",
                format!("value {} at index {bad} is not 0 or 1", values[bad]),
            ));
        }
        Self::new(shape, values.iter().map(|&v| v == 1).collect())
    }

    pub fn empty(shape: GridShape) -> Self {
        let n = shape.len();
        BinaryMask {
            shape,
            values: vec![false; n],
        }
    }

    pub fn full(shape: GridShape) -> Self {
        let n = shape.len();
        BinaryMask {
            shape,
            values: vec![true; n],
        }
    }

    pub fn from_fn(shape: GridShape, mut f: impl FnMut(usize, usize, usize) -> bool) -> Self {
        let values = (0..shape.len())
            .map(|i| {
                let [r, c, s] = shape.coords(i);
                f(r, c, s)
            })
            .collect();
        BinaryMask { shape, values }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn get(&self, i: usize) -> bool {
        self.values[i]
    }

    pub fn at(&self, row: usize, col: usize) -> bool {
        self.values[self.shape.index(row, col, 0)]
    }

    pub fn count(&self) -> usize {
        self.values.iter().filter(|&&v| v).count()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn to_field(&self) -> ScalarField {
        let values = self
            .values
            .iter()
            .map(|&b| f64::from(u8::from(b)))
            .collect();
        ScalarField::from_raw(self.shape.clone(), values)
    }

    /// Flat indices of set pixels, ascending.
    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

/// `mask(i) = 1` iff `u(i) >= t`.
pub fn threshold(u: &ScalarField, t: f64) -> BinaryMask {
    BinaryMask {
        shape: u.shape.clone(),
        values: u.values.iter().map(|&v| v >= t).collect(),
    }
}

const SIGMOID_ARG_LIMIT: f64 = 700.0;
const SIGMOID_CEIL: f64 = 1.0 - f64::EPSILON / 2.0;
const BELOW_HALF: f64 = 0.5 - f64::EPSILON / 4.0;

/// Sigmoid of `numerator / eps`, kept strictly inside (0, 1).
///
/// The sign of the result relative to 1/2 follows the sign of `numerator`
/// even when the quotient underflows, so `soft_threshold(o, eps) >= 0.5`
/// holds exactly when `o >= 0`.
pub(crate) fn soft_threshold(numerator: f64, eps: f64) -> f64 {
    let x = (numerator / eps).clamp(-SIGMOID_ARG_LIMIT, SIGMOID_ARG_LIMIT);
    if numerator >= 0.0 {
        (1.0 / (1.0 + (-x).exp())).min(SIGMOID_CEIL)
    } else {
        let e = x.exp();
        (e / (1.0 + e)).min(BELOW_HALF)
    }
}

/// Closed-form minimizer of `<-o, u> + eps * H(u)`: `u = 1 / (1 + exp(-o / eps))`.
pub fn map_sigmoid(o: &ScalarField, eps: f64) -> Result<ScalarField> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::param("eps", format!("must be positive, got {eps}")));
    }
    let values = o.values.iter().map(|&v| soft_threshold(v, eps)).collect();
    Ok(ScalarField::from_raw(o.shape.clone(), values))
}
