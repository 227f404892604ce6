//! Temporal building blocks: dilated temporal relation stacks and LSTMs.

pub mod dtr;
pub mod lstm;

pub use dtr::{receptive_field, time_span, DtrNetwork, DtrNetworkConfig};
pub use lstm::{BiLstm, Lstm};

use crate::numerics::{NodeId, ParamId, ParamSet, Rng, Scalar, Tape};

/// A dense affine map `y = x W + b` as a pair of registered parameters.
#[derive(Clone, Copy, Debug)]
pub struct Affine {
    w: ParamId,
    b: ParamId,
}

impl Affine {
    /// Weights uniform in `[-k, k]` with `k = 1/sqrt(fan_in)`, zero bias.
    pub fn build<S: Scalar>(
        prefix: &str,
        in_dim: usize,
        out_dim: usize,
        params: &mut ParamSet<S>,
        rng: &mut Rng,
    ) -> Self {
        let w = params.register_uniform(format!("{prefix}/w"), &[in_dim, out_dim], in_dim, rng);
        let b = params.register(format!("{prefix}/b"), crate::Tensor::zeros(&[out_dim]));
        Affine { w, b }
    }

    pub fn forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        x: NodeId,
        frozen: bool,
    ) -> NodeId {
        let w = tape.leaf(params, self.w, frozen);
        let b = tape.leaf(params, self.b, frozen);
        let xw = tape.matmul(x, w);
        tape.add_bias(xw, b)
    }
}
