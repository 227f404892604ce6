//! LSTM and bidirectional LSTM over frame sequences.
//!
//! One step reads a `[1,D]` frame, updates the `[1,H]` cell and hidden
//! states, and the layer stacks the per-frame hidden states back into a
//! `[T,H]` sequence. Gates live in one fused `[*,4H]` projection in the
//! order input, forget, cell-candidate, output.

use crate::numerics::{NodeId, ParamId, ParamSet, Rng, Scalar, Tape, Tensor};

pub struct Lstm {
    in_dim: usize,
    hidden: usize,
    w_input: ParamId,
    w_hidden: ParamId,
    bias: ParamId,
}

impl Lstm {
    /// Register parameters under `prefix`. Weights start uniform in
    /// `(-1/sqrt(H), 1/sqrt(H))`; biases start at zero except the forget
    /// gate, which starts at one so early training doesn't flush the cell.
    pub fn build<S: Scalar>(prefix: &str, in_dim: usize, hidden: usize, params: &mut ParamSet<S>, rng: &mut Rng) -> Self {
        assert!(in_dim > 0 && hidden > 0, "lstm dims must be positive");
        let w_input = params.register_uniform(format!("{prefix}/w_input"), &[in_dim, 4 * hidden], hidden, rng);
        let w_hidden = params.register_uniform(format!("{prefix}/w_hidden"), &[hidden, 4 * hidden], hidden, rng);
        let mut b = Tensor::zeros(&[4 * hidden]);
        for v in &mut b.data_mut()[hidden..2 * hidden] {
            *v = S::one();
        }
        let bias = params.register(format!("{prefix}/bias"), b);
        Lstm {
            in_dim,
            hidden,
            w_input,
            w_hidden,
            bias,
        }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Run over `x: [T, in_dim]` and return the hidden sequence `[T, H]`,
    /// rows in original frame order. With `reverse` the scan starts at the
    /// last frame, so row `t` then summarizes frames `t..T`.
    pub fn forward<S: Scalar>(&self, tape: &mut Tape<S>, params: &ParamSet<S>, x: NodeId, reverse: bool, frozen: bool) -> NodeId {
        let t_len = tape.value(x).rows();
        assert_eq!(tape.value(x).cols(), self.in_dim, "lstm input width");
        assert!(t_len > 0, "lstm over an empty sequence");
        let h = self.hidden;
        let wx = tape.leaf(params, self.w_input, frozen);
        let wh = tape.leaf(params, self.w_hidden, frozen);
        let b = tape.leaf(params, self.bias, frozen);

        let mut h_prev = tape.constant(Tensor::zeros(&[1, h]));
        let mut c_prev = tape.constant(Tensor::zeros(&[1, h]));
        let mut rows: Vec<NodeId> = Vec::with_capacity(t_len);
        let order: Vec<usize> = if reverse { (0..t_len).rev().collect() } else { (0..t_len).collect() };
        for t in order {
            let xt = tape.slice_row(x, t);
            let from_x = tape.matmul(xt, wx);
            let from_h = tape.matmul(h_prev, wh);
            let pre = tape.add(from_x, from_h);
            let z = tape.add_bias(pre, b);
            let zi = tape.slice_cols(z, 0, h);
            let zf = tape.slice_cols(z, h, 2 * h);
            let zg = tape.slice_cols(z, 2 * h, 3 * h);
            let zo = tape.slice_cols(z, 3 * h, 4 * h);
            let gi = tape.sigmoid(zi);
            let gf = tape.sigmoid(zf);
            let gg = tape.tanh(zg);
            let go = tape.sigmoid(zo);
            let keep = tape.mul(gf, c_prev);
            let write = tape.mul(gi, gg);
            let c = tape.add(keep, write);
            let c_act = tape.tanh(c);
            let h_t = tape.mul(go, c_act);
            rows.push(h_t);
            h_prev = h_t;
            c_prev = c;
        }
        if reverse {
            rows.reverse();
        }
        tape.stack_rows(rows)
    }
}

/// Forward and backward [`Lstm`] over the same input, hidden states
/// concatenated per frame into `[T, 2H]`.
pub struct BiLstm {
    fwd: Lstm,
    bwd: Lstm,
}

impl BiLstm {
    pub fn build<S: Scalar>(prefix: &str, in_dim: usize, hidden: usize, params: &mut ParamSet<S>, rng: &mut Rng) -> Self {
        BiLstm {
            fwd: Lstm::build(&format!("{prefix}/fwd"), in_dim, hidden, params, rng),
            bwd: Lstm::build(&format!("{prefix}/bwd"), in_dim, hidden, params, rng),
        }
    }

    /// Per-direction hidden width; the output is twice this.
    pub fn hidden(&self) -> usize {
        self.fwd.hidden
    }

    pub fn forward<S: Scalar>(&self, tape: &mut Tape<S>, params: &ParamSet<S>, x: NodeId, frozen: bool) -> NodeId {
        let hf = self.fwd.forward(tape, params, x, false, frozen);
        let hb = self.bwd.forward(tape, params, x, true, frozen);
        tape.concat_cols(hf, hb)
    }

    /// Collapse a `[T, 2H]` output of [`BiLstm::forward`] to `[1, 2H]` by
    /// taking each direction's whole-sequence state: the forward half of the
    /// last row and the backward half of the first row.
    pub fn pooled_ends<S: Scalar>(&self, tape: &mut Tape<S>, seq: NodeId) -> NodeId {
        let h = self.fwd.hidden;
        let t_len = tape.value(seq).rows();
        assert_eq!(tape.value(seq).cols(), 2 * h, "pooled_ends expects a [T, 2H] bilstm output");
        let last = tape.slice_row(seq, t_len - 1);
        let first = tape.slice_row(seq, 0);
        let fwd_final = tape.slice_cols(last, 0, h);
        let bwd_final = tape.slice_cols(first, h, 2 * h);
        tape.concat_cols(fwd_final, bwd_final)
    }
}

/// Plain scalar LSTM step used by tests as the independent reference.
#[cfg(test)]
fn reference_step(x: f64, wx: &[f64; 4], wh: &[f64; 4], b: &[f64; 4], h: f64, c: f64) -> (f64, f64) {
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    let i = sig(wx[0] * x + wh[0] * h + b[0]);
    let f = sig(wx[1] * x + wh[1] * h + b[1]);
    let g = (wx[2] * x + wh[2] * h + b[2]).tanh();
    let o = sig(wx[3] * x + wh[3] * h + b[3]);
    let c_new = f * c + i * g;
    (o * c_new.tanh(), c_new)
}
