//! Primal-dual refinement of a segmentation feature under the contour-flow
//! constraint `<grad u, F> = 0`.
//!
//! The saddle problem
//!
//! ```text
//! min_u max_q  <-o, u> + eps H(u) + <div(q F), u>
//! ```
//!
//! is solved by alternating the closed-form sigmoid `u`-step with a
//! gradient-ascent step on the scalar multiplier field `q`:
//!
//! ```text
//! u[t+1] = sigmoid((o - div(q[t] F)) / eps)
//! q[t+1] = q[t] - tau <grad u[t+1], F>
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{soft_threshold, ScalarField};
use crate::flow::ContourFlow;
use crate::losses::CE_CLAMP;

pub use crate::operators::{div_backward, grad_forward};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// Entropy weight.
    pub eps: f64,
    /// Dual ascent step.
    pub tau: f64,
    pub iters: usize,
    pub record_trace: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            eps: 10.0,
            tau: 10.0,
            iters: 100,
            record_trace: false,
        }
    }
}

impl RefineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::param(
                "eps",
                format!("must be positive, got {}", self.eps),
            ));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::param(
                "tau",
                format!("must be positive, got {}", self.tau),
            ));
        }
        if self.iters == 0 {
            return Err(Error::param("iters", "must be at least 1"));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics; entry `k` describes `u[k+1]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RefineTrace {
    /// Mean `|<grad u, F>|` over the flow's support.
    pub residual: Vec<f64>,
    /// `<-o, u>`.
    pub data_energy: Vec<f64>,
    /// `eps * H(u)` with `H(u) = sum u ln u + (1 - u) ln(1 - u)`.
    pub entropy_energy: Vec<f64>,
    /// `|q[t+1] - q[t]|_2`.
    pub dual_step: Vec<f64>,
}

impl RefineTrace {
    pub fn len(&self) -> usize {
        self.residual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residual.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Refinement {
    pub u: ScalarField,
    /// Final multiplier field.
    pub q: ScalarField,
    pub trace: Option<RefineTrace>,
}

fn entropy(u: &[f64]) -> f64 {
    u.iter()
        .map(|&x| {
            let p = x.clamp(CE_CLAMP, 1.0 - CE_CLAMP);
            p * p.ln() + (1.0 - p) * (1.0 - p).ln()
        })
        .sum()
}

/// Runs the alternating scheme for `cfg.iters` iterations from `q = 0`.
pub fn refine(o: &ScalarField, f: &ContourFlow, cfg: &RefineConfig) -> Result<Refinement> {
    cfg.validate()?;
    o.shape().ensure_ndim(2)?;
    o.shape().ensure_same(f.shape())?;

    let shape = o.shape().clone();
    let n = shape.len();
    let field = f.field().values();
    let support: Vec<usize> = f.defined().ones().collect();
    let mut q = vec![0.0; n];
    let mut qf = vec![0.0; 2 * n];
    let mut u = vec![0.0; n];
    let mut trace = cfg.record_trace.then(RefineTrace::default);

    for t in 0..cfg.iters {
        for (i, &qi) in q.iter().enumerate() {
            qf[2 * i] = qi * field[2 * i];
            qf[2 * i + 1] = qi * field[2 * i + 1];
        }
        let div = div_backward(&crate::fields::VectorField::from_raw(
            shape.clone(),
            qf.clone(),
        ));
        for ((ui, &oi), &di) in u.iter_mut().zip(o.values()).zip(div.values()) {
            *ui = soft_threshold(oi - di, cfg.eps);
        }

        let u_field = ScalarField::from_raw(shape.clone(), u.clone());
        let grad = grad_forward(&u_field);
        let mut residual_sum = 0.0;
        let mut step_sq = 0.0;
        for &i in &support {
            let a = grad.at(i);
            let r = a[0] * field[2 * i] + a[1] * field[2 * i + 1];
            let step = cfg.tau * r;
            q[i] -= step;
            residual_sum += r.abs();
            step_sq += step * step;
            if !q[i].is_finite() {
                return Err(Error::NonFiniteIteration { iteration: t + 1 });
            }
        }

        if let Some(tr) = trace.as_mut() {
            let mean = if support.is_empty() {
                0.0
            } else {
                residual_sum / support.len() as f64
            };
            tr.residual.push(mean);
            tr.data_energy
                .push(-o.values().iter().zip(&u).map(|(a, b)| a * b).sum::<f64>());
            tr.entropy_energy.push(cfg.eps * entropy(&u));
            tr.dual_step.push(step_sq.sqrt());
        }
    }

    Ok(Refinement {
        u: ScalarField::from_raw(shape.clone(), u),
        q: ScalarField::from_raw(shape, q),
        trace,
    })
}
