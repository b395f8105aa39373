use serde::{Deserialize, Serialize};

use super::model::Params;
use crate::error::{dims, invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 0.005, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    /// Number of steps taken so far.
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &Params) -> Self {
        Self { m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }
}

/// One bias-corrected ADAM update.
pub fn adam_step(params: &mut Params, grads: &Params, state: &mut AdamState, cfg: &AdamConfig) -> Result<()> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) || !params.same_shape(&state.v) {
        return Err(dims("parameter, gradient and moment shapes differ"));
    }
    if !(cfg.lr >= 0.0) || !(0.0..1.0).contains(&cfg.beta1) || !(0.0..1.0).contains(&cfg.beta2) || !(cfg.eps > 0.0) {
        return Err(invalid(format!("bad ADAM hyperparameters {cfg:?}")));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let g_all = grads.tensors();
    let m_all = state.m.tensors_mut();
    let v_all = state.v.tensors_mut();
    for (((p, g), m), v) in params.tensors_mut().into_iter().zip(g_all).zip(m_all).zip(v_all) {
        for i in 0..p.len() {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / c1;
            let v_hat = v[i] / c2;
            p[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}
