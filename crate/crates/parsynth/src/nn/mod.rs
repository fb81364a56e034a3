//! Minimal differentiable-computation substrate: dense f64 tensors, a
//! recorded-tape reverse-mode autodiff, a gated recurrent cell, the
//! adaptive-moment optimizer, and checkpoint IO.
//!
//! Everything is double precision and deterministic given the seed; the
//! model here is tiny (hidden size 50) and trace sampling, not arithmetic,
//! dominates training cost.

mod adam;
mod checkpoint;
mod lstm;
mod tape;
mod tensor;

pub use adam::{adam_step, clip_global_norm, AdamConfig};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointError, CheckpointHeader};
pub use lstm::LstmCell;
pub use tape::{masked_softmax, softmax, NodeId, Tape};
pub use tensor::{Gradients, ParamId, ParameterStore, Tensor};

use rand::Rng;

/// Max relative error between analytic gradients and central finite
/// differences over `samples` randomly chosen coordinates of every tensor.
///
/// `loss` must recompute the full forward pass from the store it is given.
pub fn max_relative_grad_error(
    store: &mut ParameterStore,
    grads: &Gradients,
    mut loss: impl FnMut(&ParameterStore) -> f64,
    samples_per_tensor: usize,
    h: f64,
    rng: &mut impl Rng,
) -> f64 {
    let mut worst: f64 = 0.0;
    for id in store.param_ids() {
        let len = store.tensor(id).data().len();
        for _ in 0..samples_per_tensor.min(len) {
            let i = rng.gen_range(0..len);
            let orig = store.tensor(id).data()[i];
            store.tensor_mut(id).data_mut()[i] = orig + h;
            let up = loss(store);
            store.tensor_mut(id).data_mut()[i] = orig - h;
            let down = loss(store);
            store.tensor_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let analytic = grads.slot(id).data()[i];
            let scale = numeric.abs().max(analytic.abs());
            if scale > 1e-7 {
                worst = worst.max((numeric - analytic).abs() / scale);
            } else {
                worst = worst.max((numeric - analytic).abs());
            }
        }
    }
    worst
}
