//! First-order finite differences on the pixel grid.
//!
//! `div_backward` is the exact negative adjoint of `grad_forward`:
//! `<div v, u> = -<v, grad u>` for every pair on the same grid.

use crate::error::Result;
use crate::fields::{ScalarField, VectorField, AXIS_OF_CHANNEL};

/// Forward differences per axis, zero at the last index of each axis.
pub fn grad_forward(u: &ScalarField) -> VectorField {
    let shape = u.shape();
    let nc = shape.ndim();
    let vals = u.values();
    let mut out = vec![0.0; shape.len() * nc];
    for i in 0..shape.len() {
        let pos = shape.coords(i);
        for (c, &axis) in AXIS_OF_CHANNEL[..nc].iter().enumerate() {
            if pos[axis] + 1 < shape.extent(axis) {
                out[i * nc + c] = vals[i + shape.stride(axis)] - vals[i];
            }
        }
    }
    VectorField::from_raw(shape.clone(), out)
}

/// Backward differences with the boundary closure that makes this the
/// negative adjoint of [`grad_forward`].
pub fn div_backward(v: &VectorField) -> ScalarField {
    let shape = v.shape();
    let nc = shape.ndim();
    let vals = v.values();
    let mut out = vec![0.0; shape.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let pos = shape.coords(i);
        let mut acc = 0.0;
        for (c, &axis) in AXIS_OF_CHANNEL[..nc].iter().enumerate() {
            let n = shape.extent(axis);
            if pos[axis] + 1 < n {
                acc += vals[i * nc + c];
            }
            if pos[axis] > 0 {
                acc -= vals[(i - shape.stride(axis)) * nc + c];
            }
        }
        *o = acc;
    }
    ScalarField::from_raw(shape.clone(), out)
}

/// `<grad u, f>` at every grid point.
pub fn directional_derivative(u: &ScalarField, f: &VectorField) -> Result<ScalarField> {
    grad_forward(u).pointwise_dot(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GridShape;

    #[test]
    fn constant_has_zero_gradient() {
        let u = ScalarField::filled(GridShape::plane(4, 5), 3.5);
        assert!(grad_forward(&u).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn column_ramp() {
        let shape = GridShape::plane(3, 4);
        let u = ScalarField::from_fn(shape.clone(), |_, c, _| c as f64);
        let g = grad_forward(&u);
        for i in 0..shape.len() {
            let [_, c, _] = shape.coords(i);
            let expected_x = if c < 3 { 1.0 } else { 0.0 };
            assert_eq!(g.at(i), &[expected_x, 0.0]);
        }
    }

    #[test]
    fn constant_vector_divergence() {
        let shape = GridShape::plane(3, 3);
        let v = VectorField::from_fn(shape.clone(), |_, _, _| vec![1.0, 0.0]);
        let d = div_backward(&v);
        // interior column gets 1 - 1, first column +1, last column -1
        for r in 0..3 {
            assert_eq!(d.at(r, 0), 1.0);
            assert_eq!(d.at(r, 1), 0.0);
            assert_eq!(d.at(r, 2), -1.0);
        }
    }
}
