//! Adam with bias correction.

use serde::{Deserialize, Serialize};

use super::cnn::{ArchMeta, Params};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub t: u64,
}

impl AdamState {
    pub fn new(arch: &ArchMeta) -> Self {
        Self { m: Params::zeros(arch), v: Params::zeros(arch), t: 0 }
    }
}

/// One update of a flat parameter slice; `t` is the already incremented step.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(theta: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], t: u64, cfg: &AdamConfig) {
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..theta.len() {
        let g = grad[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Applies one step to every tensor. Non-finite gradients leave the
/// parameters and optimiser state untouched.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if !grads.all_finite() {
        return Err(Error::NonFiniteUpdate);
    }
    let mut next = params.clone();
    let mut m = state.m.clone();
    let mut v = state.v.clone();
    let t = state.t + 1;
    for (((theta, g), mm), vv) in
        next.tensors_mut().into_iter().zip(grads.tensors()).zip(m.tensors_mut()).zip(v.tensors_mut())
    {
        adam_update(theta, g, mm, vv, t, cfg);
    }
    if !next.all_finite() {
        return Err(Error::NonFiniteUpdate);
    }
    *params = next;
    state.m = m;
    state.v = v;
    state.t = t;
    Ok(())
}
