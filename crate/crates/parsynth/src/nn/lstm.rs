//! Single-layer gated recurrent cell.
//!
//! Gate layout inside the fused 4D pre-activation, top to bottom: input,
//! forget, cell candidate, output. This ordering is part of the checkpoint
//! contract.

use rand::Rng;

use super::tape::{NodeId, Tape};
use super::tensor::{ParamId, ParameterStore, Tensor};

#[derive(Clone, Copy, Debug)]
pub struct LstmCell {
    /// Input weights, 4D x D.
    pub wx: ParamId,
    /// Recurrent weights, 4D x D.
    pub wh: ParamId,
    /// Gate biases, 4D.
    pub b: ParamId,
    pub hidden: usize,
}

impl LstmCell {
    pub fn register(
        store: &mut ParameterStore,
        prefix: &str,
        hidden: usize,
        init_half_range: f64,
        rng: &mut impl Rng,
    ) -> LstmCell {
        let wx = store.register(
            &format!("{prefix}.wx"),
            Tensor::uniform(4 * hidden, hidden, init_half_range, rng),
        );
        let wh = store.register(
            &format!("{prefix}.wh"),
            Tensor::uniform(4 * hidden, hidden, init_half_range, rng),
        );
        let b = store.register(
            &format!("{prefix}.b"),
            Tensor::uniform(4 * hidden, 1, init_half_range, rng),
        );
        LstmCell {
            wx,
            wh,
            b,
            hidden,
        }
    }

    /// Run left to right from zero hidden and cell state; returns the final
    /// hidden state. `inputs` must be non-empty.
    pub fn encode(&self, tape: &mut Tape, store: &ParameterStore, inputs: &[NodeId]) -> NodeId {
        assert!(!inputs.is_empty(), "recurrent encoder needs a non-empty sequence");
        let d = self.hidden;
        let mut h = tape.zeros(d);
        let mut c = tape.zeros(d);
        for &x in inputs {
            let zx = tape.matvec(store, self.wx, x);
            let zh = tape.matvec(store, self.wh, h);
            let z = tape.add(zx, zh);
            let z = tape.add_bias(store, self.b, z);
            let i_gate = tape.slice(z, 0, d);
            let f_gate = tape.slice(z, d, d);
            let g_gate = tape.slice(z, 2 * d, d);
            let o_gate = tape.slice(z, 3 * d, d);
            let i_gate = tape.sigmoid(i_gate);
            let f_gate = tape.sigmoid(f_gate);
            let g_gate = tape.tanh(g_gate);
            let o_gate = tape.sigmoid(o_gate);
            let keep = tape.hadamard(f_gate, c);
            let write = tape.hadamard(i_gate, g_gate);
            c = tape.add(keep, write);
            let c_act = tape.tanh(c);
            h = tape.hadamard(o_gate, c_act);
        }
        h
    }
}
