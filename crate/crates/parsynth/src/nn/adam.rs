//! Adaptive-moment optimizer and global-norm gradient clipping.

use super::tensor::{Gradients, ParameterStore};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// One bias-corrected Adam update over every registered tensor.
pub fn adam_step(store: &mut ParameterStore, grads: &Gradients, cfg: &AdamConfig) {
    store.step += 1;
    let t = store.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for id in store.param_ids() {
        let g = grads.slot(id);
        let (tensor, m, v) = store.moments_mut(id);
        for i in 0..tensor.data().len() {
            let grad = g.data()[i];
            let mi = cfg.beta1 * m.data()[i] + (1.0 - cfg.beta1) * grad;
            let vi = cfg.beta2 * v.data()[i] + (1.0 - cfg.beta2) * grad * grad;
            m.data_mut()[i] = mi;
            v.data_mut()[i] = vi;
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            tensor.data_mut()[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Scale all gradients down to `max_norm` when the global L2 norm exceeds
/// it. Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    assert!(max_norm > 0.0);
    let norm = grads.global_norm();
    assert!(norm.is_finite(), "gradient norm is not finite");
    if norm > max_norm {
        let scale = max_norm / norm;
        for t in grads.iter_mut() {
            for x in t.data_mut() {
                *x *= scale;
            }
        }
    }
    norm
}
