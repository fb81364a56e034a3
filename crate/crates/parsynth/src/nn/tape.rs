//! Reverse-mode autodiff over a recorded tape of vector operations.
//!
//! One tape records one forward pass; `backward` walks the nodes in exact
//! reverse recording order and accumulates parameter gradients. Nodes hold
//! their forward values, so backward never recomputes activations.

use super::tensor::{Gradients, ParamId, ParameterStore};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct NodeId(usize);

enum Op {
    /// Constant vector; no gradient flows into it.
    Constant,
    /// A row of a parameter matrix (embedding lookup or per-row logits).
    EmbedRow { table: ParamId, row: usize },
    /// W . x for a parameter matrix W.
    MatVec { w: ParamId, x: NodeId },
    Add { a: NodeId, b: NodeId },
    AddBias { bias: ParamId, x: NodeId },
    Sigmoid { x: NodeId },
    Tanh { x: NodeId },
    Hadamard { a: NodeId, b: NodeId },
    Slice { x: NodeId, start: usize },
    /// Scalar log softmax(x restricted to mask)[pick]; stores the masked
    /// softmax for the backward pass.
    MaskedLogPick {
        x: NodeId,
        probs: Vec<f64>,
        pick: usize,
    },
    /// Scalar log of the exploration distribution (softmax(x) + sigma over
    /// the mask, renormalized) at `pick`; stores the full softmax.
    ExploreLogPick {
        x: NodeId,
        softmax: Vec<f64>,
        mask: Vec<bool>,
        sigma: f64,
        pick: usize,
    },
}

struct Node {
    op: Op,
    value: Vec<f64>,
}

pub struct Tape {
    nodes: Vec<Node>,
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax over the unmasked entries only; masked entries get probability 0.
pub fn masked_softmax(logits: &[f64], mask: &[bool]) -> Vec<f64> {
    debug_assert_eq!(logits.len(), mask.len());
    let max = logits
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out = vec![0.0; logits.len()];
    let mut sum = 0.0;
    for i in 0..logits.len() {
        if mask[i] {
            out[i] = (logits[i] - max).exp();
            sum += out[i];
        }
    }
    for p in &mut out {
        *p /= sum;
    }
    out
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id.0].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id.0].value.len(), 1);
        self.nodes[id.0].value[0]
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> NodeId {
        debug_assert!(value.iter().all(|x| x.is_finite()), "non-finite tape value");
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(Op::Constant, value)
    }

    pub fn zeros(&mut self, len: usize) -> NodeId {
        self.constant(vec![0.0; len])
    }

    pub fn embed_row(&mut self, store: &ParameterStore, table: ParamId, row: usize) -> NodeId {
        let value = store.tensor(table).row(row).to_vec();
        self.push(Op::EmbedRow { table, row }, value)
    }

    pub fn matvec(&mut self, store: &ParameterStore, w: ParamId, x: NodeId) -> NodeId {
        let t = store.tensor(w);
        let xv = &self.nodes[x.0].value;
        debug_assert_eq!(t.cols(), xv.len());
        let mut out = vec![0.0; t.rows()];
        for (r, slot) in out.iter_mut().enumerate() {
            let row = t.row(r);
            *slot = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        self.push(Op::MatVec { w, x }, out)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x + y)
            .collect();
        self.push(Op::Add { a, b }, value)
    }

    pub fn add_bias(&mut self, store: &ParameterStore, bias: ParamId, x: NodeId) -> NodeId {
        let b = store.tensor(bias);
        debug_assert_eq!(b.cols(), 1);
        let value: Vec<f64> = self.nodes[x.0]
            .value
            .iter()
            .zip(b.data())
            .map(|(x, y)| x + y)
            .collect();
        self.push(Op::AddBias { bias, x }, value)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[x.0]
            .value
            .iter()
            .map(|&v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        self.push(Op::Sigmoid { x }, value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[x.0].value.iter().map(|&v| v.tanh()).collect();
        self.push(Op::Tanh { x }, value)
    }

    pub fn hadamard(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value: Vec<f64> = self.nodes[a.0]
            .value
            .iter()
            .zip(&self.nodes[b.0].value)
            .map(|(x, y)| x * y)
            .collect();
        self.push(Op::Hadamard { a, b }, value)
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let value = self.nodes[x.0].value[start..start + len].to_vec();
        self.push(Op::Slice { x, start }, value)
    }

    /// log p(pick) under softmax restricted to the masked-in entries.
    pub fn masked_log_pick(&mut self, x: NodeId, mask: &[bool], pick: usize) -> NodeId {
        debug_assert!(mask[pick], "picked entry must be unmasked");
        let probs = masked_softmax(&self.nodes[x.0].value, mask);
        let value = vec![probs[pick].max(f64::MIN_POSITIVE).ln()];
        self.push(
            Op::MaskedLogPick {
                x,
                probs,
                pick,
            },
            value,
        )
    }

    /// log p(pick) under the exploration distribution
    /// (softmax(x)_i + sigma for unmasked i, renormalized).
    pub fn explore_log_pick(
        &mut self,
        x: NodeId,
        mask: &[bool],
        sigma: f64,
        pick: usize,
    ) -> NodeId {
        debug_assert!(mask[pick]);
        let s = softmax(&self.nodes[x.0].value);
        let z: f64 = s
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&p, _)| p + sigma)
            .sum();
        let value = vec![((s[pick] + sigma) / z).ln()];
        self.push(
            Op::ExploreLogPick {
                x,
                softmax: s,
                mask: mask.to_vec(),
                sigma,
                pick,
            },
            value,
        )
    }

    /// Reverse pass. `terms` are (scalar node, weight) pairs; the implied
    /// objective is the weighted sum of those scalars.
    pub fn backward(&self, store: &ParameterStore, terms: &[(NodeId, f64)]) -> Gradients {
        let mut grads = Gradients::zeros_like(store);
        let mut adjoints: Vec<Vec<f64>> = self
            .nodes
            .iter()
            .map(|n| vec![0.0; n.value.len()])
            .collect();
        for &(node, weight) in terms {
            debug_assert_eq!(self.nodes[node.0].value.len(), 1);
            adjoints[node.0][0] += weight;
        }
        for i in (0..self.nodes.len()).rev() {
            if adjoints[i].iter().all(|&a| a == 0.0) {
                continue;
            }
            let adj = std::mem::take(&mut adjoints[i]);
            match &self.nodes[i].op {
                Op::Constant => {}
                Op::EmbedRow { table, row } => {
                    let t = grads.slot_mut(*table);
                    let cols = t.cols();
                    let dst = &mut t.data_mut()[row * cols..(row + 1) * cols];
                    for (d, a) in dst.iter_mut().zip(&adj) {
                        *d += a;
                    }
                }
                Op::MatVec { w, x } => {
                    let xv = &self.nodes[x.0].value;
                    {
                        let gw = grads.slot_mut(*w);
                        let cols = gw.cols();
                        for (r, a) in adj.iter().enumerate() {
                            if *a == 0.0 {
                                continue;
                            }
                            let row = &mut gw.data_mut()[r * cols..(r + 1) * cols];
                            for (slot, xval) in row.iter_mut().zip(xv) {
                                *slot += a * xval;
                            }
                        }
                    }
                    let wt = store.tensor(*w);
                    let gx = &mut adjoints[x.0];
                    for (r, a) in adj.iter().enumerate() {
                        if *a == 0.0 {
                            continue;
                        }
                        let row = wt.row(r);
                        for (slot, wval) in gx.iter_mut().zip(row) {
                            *slot += a * wval;
                        }
                    }
                }
                Op::Add { a, b } => {
                    for (slot, v) in adjoints[a.0].iter_mut().zip(&adj) {
                        *slot += v;
                    }
                    for (slot, v) in adjoints[b.0].iter_mut().zip(&adj) {
                        *slot += v;
                    }
                }
                Op::AddBias { bias, x } => {
                    for (slot, v) in grads.slot_mut(*bias).data_mut().iter_mut().zip(&adj) {
                        *slot += v;
                    }
                    for (slot, v) in adjoints[x.0].iter_mut().zip(&adj) {
                        *slot += v;
                    }
                }
                Op::Sigmoid { x } => {
                    let y = &self.nodes[i].value;
                    for ((slot, v), y) in adjoints[x.0].iter_mut().zip(&adj).zip(y) {
                        *slot += v * y * (1.0 - y);
                    }
                }
                Op::Tanh { x } => {
                    let y = &self.nodes[i].value;
                    for ((slot, v), y) in adjoints[x.0].iter_mut().zip(&adj).zip(y) {
                        *slot += v * (1.0 - y * y);
                    }
                }
                Op::Hadamard { a, b } => {
                    let av: Vec<f64> = self.nodes[a.0].value.clone();
                    let bv: Vec<f64> = self.nodes[b.0].value.clone();
                    for ((slot, v), bval) in adjoints[a.0].iter_mut().zip(&adj).zip(&bv) {
                        *slot += v * bval;
                    }
                    for ((slot, v), aval) in adjoints[b.0].iter_mut().zip(&adj).zip(&av) {
                        *slot += v * aval;
                    }
                }
                Op::Slice { x, start } => {
                    for (k, v) in adj.iter().enumerate() {
                        adjoints[x.0][start + k] += v;
                    }
                }
                Op::MaskedLogPick { x, probs, pick } => {
                    let a = adj[0];
                    let gx = &mut adjoints[x.0];
                    for (k, p) in probs.iter().enumerate() {
                        if *p > 0.0 || k == *pick {
                            let indicator = f64::from(k == *pick);
                            gx[k] += a * (indicator - p);
                        }
                    }
                }
                Op::ExploreLogPick {
                    x,
                    softmax: s,
                    mask,
                    sigma,
                    pick,
                } => {
                    // d log p / d logit_k with p = (s_pick + sigma) / Z,
                    // Z = sum over unmasked j of (s_j + sigma),
                    // ds_i/dl_k = s_i (delta_ik - s_k)
                    let a = adj[0];
                    let z: f64 = s
                        .iter()
                        .zip(mask)
                        .filter(|(_, &m)| m)
                        .map(|(&p, _)| p + sigma)
                        .sum();
                    let s_valid: f64 = s
                        .iter()
                        .zip(mask)
                        .filter(|(_, &m)| m)
                        .map(|(&p, _)| p)
                        .sum();
                    let coeff = s[*pick] / (s[*pick] + sigma);
                    let gx = &mut adjoints[x.0];
                    for k in 0..s.len() {
                        let d_pick = coeff * (f64::from(k == *pick) - s[k]);
                        let d_z = (if mask[k] { s[k] } else { 0.0 }) - s[k] * s_valid;
                        gx[k] += a * (d_pick - d_z / z);
                    }
                }
            }
        }
        grads
    }
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}
