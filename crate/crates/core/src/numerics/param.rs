use std::sync::atomic::{AtomicU64, Ordering};

use super::rng::Rng;
use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

static NEXT_SET_ID: AtomicU64 = AtomicU64::new(1);

/// Handle to one trainable tensor inside a [`ParamSet`]. The set id rides
/// along so a backward sweep over graphs built from several models can route
/// each gradient to the right owner.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId {
    set: u64,
    index: usize,
}

/// Handle to a non-trainable state tensor (running statistics and the like).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferId {
    set: u64,
    index: usize,
}

struct Entry<S> {
    name: String,
    value: Tensor<S>,
    grad: Tensor<S>,
}

struct BufEntry<S> {
    name: String,
    value: Tensor<S>,
}

/// Ordered collection of named parameters and state buffers for one model.
///
/// Registration order is the canonical order everywhere — optimizer state,
/// checkpoints, gradient-check reports — which is what makes runs bitwise
/// reproducible.
pub struct ParamSet<S> {
    set_id: u64,
    params: Vec<Entry<S>>,
    buffers: Vec<BufEntry<S>>,
    grads_fresh: bool,
}

impl<S: Scalar> ParamSet<S> {
    pub fn new() -> Self {
        ParamSet {
            set_id: NEXT_SET_ID.fetch_add(1, Ordering::Relaxed),
            params: Vec::new(),
            buffers: Vec::new(),
            grads_fresh: false,
        }
    }

    pub fn register(&mut self, name: impl Into<String>, value: Tensor<S>) -> ParamId {
        let name = name.into();
        assert!(
            self.params.iter().all(|e| e.name != name),
            "duplicate parameter name `{name}`"
        );
        let grad = Tensor::zeros(value.shape());
        self.params.push(Entry { name, value, grad });
        ParamId {
            set: self.set_id,
            index: self.params.len() - 1,
        }
    }

    /// Uniform init in `[-k, k]`, `k = 1/sqrt(fan_in)`.
    pub fn register_uniform(&mut self, name: impl Into<String>, shape: &[usize], fan_in: usize, rng: &mut Rng) -> ParamId {
        let k = 1.0 / (fan_in as f64).sqrt();
        let mut value = Tensor::zeros(shape);
        rng.fill_uniform(value.data_mut(), -k, k);
        self.register(name, value)
    }

    pub fn register_buffer(&mut self, name: impl Into<String>, value: Tensor<S>) -> BufferId {
        let name = name.into();
        assert!(
            self.buffers.iter().all(|e| e.name != name),
            "duplicate buffer name `{name}`"
        );
        self.buffers.push(BufEntry { name, value });
        BufferId {
            set: self.set_id,
            index: self.buffers.len() - 1,
        }
    }

    pub fn owns(&self, id: ParamId) -> bool {
        id.set == self.set_id
    }

    fn check(&self, id: ParamId) -> usize {
        assert_eq!(id.set, self.set_id, "parameter handle from a different set");
        id.index
    }

    fn check_buf(&self, id: BufferId) -> usize {
        assert_eq!(id.set, self.set_id, "buffer handle from a different set");
        id.index
    }

    pub fn value(&self, id: ParamId) -> &Tensor<S> {
        &self.params[self.check(id)].value
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        let i = self.check(id);
        &mut self.params[i].value
    }

    pub fn grad(&self, id: ParamId) -> &Tensor<S> {
        &self.params[self.check(id)].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor<S> {
        let i = self.check(id);
        &mut self.params[i].grad
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[self.check(id)].name
    }

    pub fn buffer(&self, id: BufferId) -> &Tensor<S> {
        &self.buffers[self.check_buf(id)].value
    }

    pub fn buffer_mut(&mut self, id: BufferId) -> &mut Tensor<S> {
        let i = self.check_buf(id);
        &mut self.buffers[i].value
    }

    /// Parameter handles in registration order.
    pub fn ids(&self) -> Vec<ParamId> {
        (0..self.params.len())
            .map(|index| ParamId {
                set: self.set_id,
                index,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of trainable scalars.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|e| e.value.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for e in &mut self.params {
            for g in e.grad.data_mut() {
                *g = S::zero();
            }
        }
        self.grads_fresh = false;
    }

    /// Called by the backward sweep once gradients have been accumulated.
    pub(crate) fn mark_grads_fresh(&mut self) {
        self.grads_fresh = true;
    }

    pub fn grads_fresh(&self) -> bool {
        self.grads_fresh
    }

    pub(crate) fn take_grads_fresh(&mut self) -> bool {
        std::mem::take(&mut self.grads_fresh)
    }

    /// sqrt of the summed squared gradient over every parameter.
    pub fn global_grad_norm(&self) -> f64 {
        let mut acc = 0.0;
        for e in &self.params {
            for &g in e.grad.data() {
                let g = g.as_f64();
                acc += g * g;
            }
        }
        acc.sqrt()
    }

    pub fn scale_grads(&mut self, factor: f64) {
        let f = S::from_f64(factor);
        for e in &mut self.params {
            for g in e.grad.data_mut() {
                *g *= f;
            }
        }
    }

    /// `(name, value, grad)` triples in registration order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<S>, &Tensor<S>)> {
        self.params.iter().map(|e| (e.name.as_str(), &e.value, &e.grad))
    }

    /// `(name, value)` for every parameter then every buffer — the exact
    /// tensor list a checkpoint stores.
    pub fn export(&self) -> Vec<(String, Tensor<S>)> {
        self.params
            .iter()
            .map(|e| (e.name.clone(), e.value.clone()))
            .chain(self.buffers.iter().map(|e| (e.name.clone(), e.value.clone())))
            .collect()
    }

    /// Overwrite every tensor from an exported `(name, value)` list. The
    /// list must cover exactly the parameters and buffers this set holds;
    /// names and shapes are checked before anything is written.
    pub fn import(&mut self, tensors: &[(String, Tensor<S>)]) -> Result<()> {
        let expected = self.params.len() + self.buffers.len();
        if tensors.len() != expected {
            return Err(Error::BadManifest(format!(
                "{} tensors provided, model holds {expected}",
                tensors.len()
            )));
        }
        let mut have: Vec<&str> = tensors.iter().map(|(n, _)| n.as_str()).collect();
        have.sort_unstable();
        let mut want: Vec<&str> = self
            .params
            .iter()
            .map(|e| e.name.as_str())
            .chain(self.buffers.iter().map(|e| e.name.as_str()))
            .collect();
        want.sort_unstable();
        for (h, w) in have.iter().zip(&want) {
            if h != w {
                return Err(Error::BadManifest(format!(
                    "tensor list mismatch: found `{h}` where model expects `{w}`"
                )));
            }
        }
        for (name, value) in tensors {
            let dst = self.tensor_mut_by_name(name).expect("names checked above");
            if dst.shape() != value.shape() {
                return Err(Error::CheckpointShape {
                    name: name.clone(),
                    found: value.shape().to_vec(),
                    expected: dst.shape().to_vec(),
                });
            }
        }
        for (name, value) in tensors {
            *self.tensor_mut_by_name(name).expect("names checked above") = value.clone();
        }
        Ok(())
    }

    /// Overwrite a parameter or buffer by name; `None` if no such tensor.
    /// The caller is responsible for shape checking (it has the context to
    /// produce a useful error).
    pub fn tensor_mut_by_name(&mut self, name: &str) -> Option<&mut Tensor<S>> {
        if let Some(e) = self.params.iter_mut().find(|e| e.name == name) {
            return Some(&mut e.value);
        }
        self.buffers.iter_mut().find(|e| e.name == name).map(|e| &mut e.value)
    }
}

impl<S: Scalar> Default for ParamSet<S> {
    fn default() -> Self {
        Self::new()
    }
}
