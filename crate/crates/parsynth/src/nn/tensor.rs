//! Dense row-major tensors and the named parameter registry.

use rand::Rng;

/// A 1-D (cols = 1) or 2-D array of f64.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn uniform(rows: usize, cols: usize, half_range: f64, rng: &mut impl Rng) -> Self {
        let data = (0..rows * cols)
            .map(|_| rng.gen_range(-half_range..=half_range))
            .collect();
        Tensor { rows, cols, data }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Tensor { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }
}

/// Handle to one registered tensor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct ParamId(pub(crate) usize);

#[derive(Clone, Debug)]
struct ParamEntry {
    name: String,
    tensor: Tensor,
    /// Adam first/second moment buffers; checkpointed so training can be
    /// reverted or resumed exactly.
    m: Tensor,
    v: Tensor,
}

/// All trainable tensors plus optimizer state, in registration order.
#[derive(Clone, Debug)]
pub struct ParameterStore {
    entries: Vec<ParamEntry>,
    /// Adam step counter.
    pub(crate) step: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        ParameterStore {
            entries: Vec::new(),
            step: 0,
        }
    }

    pub fn register(&mut self, name: &str, tensor: Tensor) -> ParamId {
        assert!(
            self.entries.iter().all(|e| e.name != name),
            "duplicate parameter name {name}"
        );
        let id = ParamId(self.entries.len());
        let (rows, cols) = (tensor.rows, tensor.cols);
        self.entries.push(ParamEntry {
            name: name.to_string(),
            tensor,
            m: Tensor::zeros(rows, cols),
            v: Tensor::zeros(rows, cols),
        });
        id
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor {
        &self.entries[id.0].tensor
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.entries[id.0].tensor
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.entries[id.0].name
    }

    pub fn by_name(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        (0..self.entries.len()).map(ParamId).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_scalars(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.data.len()).sum()
    }

    pub fn adam_step_count(&self) -> u64 {
        self.step
    }

    pub(crate) fn moments_mut(&mut self, id: ParamId) -> (&mut Tensor, &mut Tensor, &mut Tensor) {
        let e = &mut self.entries[id.0];
        (&mut e.tensor, &mut e.m, &mut e.v)
    }

    pub(crate) fn moments(&self, id: ParamId) -> (&Tensor, &Tensor) {
        let e = &self.entries[id.0];
        (&e.m, &e.v)
    }

    pub(crate) fn set_moments(&mut self, id: ParamId, m: Tensor, v: Tensor) {
        let e = &mut self.entries[id.0];
        assert_eq!((m.rows, m.cols), (e.tensor.rows, e.tensor.cols));
        assert_eq!((v.rows, v.cols), (e.tensor.rows, e.tensor.cols));
        e.m = m;
        e.v = v;
    }

    /// Exact equality across values, moments, and the step counter; the
    /// revert tests in training lean on this.
    pub fn bit_identical(&self, other: &ParameterStore) -> bool {
        self.step == other.step
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.name == b.name && a.tensor == b.tensor && a.m == b.m && a.v == b.v)
    }
}

impl Default for ParameterStore {
    fn default() -> Self {
        Self::new()
    }
}

/// Gradient buffers aligned with a store's registration order.
#[derive(Clone, Debug)]
pub struct Gradients {
    slots: Vec<Tensor>,
}

impl Gradients {
    pub fn zeros_like(store: &ParameterStore) -> Self {
        Gradients {
            slots: store
                .entries
                .iter()
                .map(|e| Tensor::zeros(e.tensor.rows, e.tensor.cols))
                .collect(),
        }
    }

    pub fn slot(&self, id: ParamId) -> &Tensor {
        &self.slots[id.0]
    }

    pub fn slot_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.slots[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.slots.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.slots.iter_mut()
    }

    pub fn global_norm(&self) -> f64 {
        self.slots
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn assert_finite(&self, context: &str) {
        for (i, t) in self.slots.iter().enumerate() {
            assert!(
                t.data.iter().all(|x| x.is_finite()),
                "non-finite gradient in slot {i} ({context})"
            );
        }
    }
}
