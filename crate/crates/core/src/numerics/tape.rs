use crate::error::{Error, Result};

use super::param::{ParamId, ParamSet};
use super::rng::Rng;
use super::scalar::{sc, Scalar};
use super::tensor::Tensor;

/// Forward-pass mode. Dropout and batch statistics behave differently under
/// the two; everything else is identical.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

enum Op<S> {
    /// Leaf with no gradient.
    Constant,
    /// Leaf whose gradient is routed into a [`ParamSet`] slot.
    Param(ParamId),
    /// `[m,k] x [k,n] -> [m,n]`
    Matmul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    /// Elementwise product, same shapes.
    Mul(NodeId, NodeId),
    /// `[t,d] + [d]`, the vector added to every row.
    AddBias(NodeId, NodeId),
    /// `[t,d] - [d]`
    SubBias(NodeId, NodeId),
    /// `[t,d] * [d]`, every row scaled elementwise.
    MulBias(NodeId, NodeId),
    /// Multiply by a compile-time-known constant.
    ScaleConst(NodeId, S),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    /// Mean of all elements, `-> [1]`.
    Mean(NodeId),
    /// Sum of all elements, `-> [1]`.
    Sum(NodeId),
    /// Sum of squared elements, `-> [1]`.
    SumSq(NodeId),
    /// Inverted dropout; the sampled mask (already scaled by 1/keep) rides
    /// along for the backward pass.
    Dropout(NodeId, Tensor<S>),
    /// `[t,d]` rows scaled by a `[t,1]` column of per-row factors.
    RowScale { of: NodeId, by: NodeId },
    /// Column-wise concatenation `[t,d1] ++ [t,d2] -> [t,d1+d2]`.
    ConcatCols(NodeId, NodeId),
    /// Column window `[t, c1-c0]` of a `[t,d]` tensor.
    SliceCols { of: NodeId, c0: usize, c1: usize },
    /// Single row `r` as `[1,d]`.
    SliceRow { of: NodeId, r: usize },
    /// Stack `[1,d]` rows into `[n,d]`.
    StackRows(Vec<NodeId>),
    /// `out[t] = in[t - offset]`, zeros where the index falls outside.
    ShiftRows { of: NodeId, offset: isize },
    /// Rows in reverse temporal order.
    ReverseRows(NodeId),
    /// Per-column mean of `[t,d] -> [d]`.
    ColMean(NodeId),
    /// Elementwise `1/sqrt(x + eps)`.
    RsqrtShift(NodeId, S),
    /// Identity forward; multiplies the gradient by a factor on the way back.
    /// Exists purely as a negative control for the gradient checker.
    ScaleBackward(NodeId, S),
}

impl<S> Op<S> {
    fn name(&self) -> &'static str {
        use Op::*;
        match self {
            Constant => "constant",
            Param(_) => "param",
            Matmul(..) => "matmul",
            Add(..) => "add",
            Sub(..) => "sub",
            Mul(..) => "mul",
            AddBias(..) => "add_bias",
            SubBias(..) => "sub_bias",
            MulBias(..) => "mul_bias",
            ScaleConst(..) => "scale_const",
            Sigmoid(_) => "sigmoid",
            Tanh(_) => "tanh",
            Relu(_) => "relu",
            Mean(_) => "mean",
            Sum(_) => "sum",
            SumSq(_) => "sum_sq",
            Dropout(..) => "dropout",
            RowScale { .. } => "row_scale",
            ConcatCols(..) => "concat_cols",
            SliceCols { .. } => "slice_cols",
            SliceRow { .. } => "slice_row",
            StackRows(_) => "stack_rows",
            ShiftRows { .. } => "shift_rows",
            ReverseRows(_) => "reverse_rows",
            ColMean(_) => "col_mean",
            RsqrtShift(..) => "rsqrt_shift",
            ScaleBackward(..) => "scale_backward",
        }
    }

    fn backward_name(&self) -> &'static str {
        use Op::*;
        match self {
            Constant => "constant (backward)",
            Param(_) => "param (backward)",
            Matmul(..) => "matmul (backward)",
            Add(..) => "add (backward)",
            Sub(..) => "sub (backward)",
            Mul(..) => "mul (backward)",
            AddBias(..) => "add_bias (backward)",
            SubBias(..) => "sub_bias (backward)",
            MulBias(..) => "mul_bias (backward)",
            ScaleConst(..) => "scale_const (backward)",
            Sigmoid(_) => "sigmoid (backward)",
            Tanh(_) => "tanh (backward)",
            Relu(_) => "relu (backward)",
            Mean(_) => "mean (backward)",
            Sum(_) => "sum (backward)",
            SumSq(_) => "sum_sq (backward)",
            Dropout(..) => "dropout (backward)",
            RowScale { .. } => "row_scale (backward)",
            ConcatCols(..) => "concat_cols (backward)",
            SliceCols { .. } => "slice_cols (backward)",
            SliceRow { .. } => "slice_row (backward)",
            StackRows(_) => "stack_rows (backward)",
            ShiftRows { .. } => "shift_rows (backward)",
            ReverseRows(_) => "reverse_rows (backward)",
            ColMean(_) => "col_mean (backward)",
            RsqrtShift(..) => "rsqrt_shift (backward)",
            ScaleBackward(..) => "scale_backward (backward)",
        }
    }
}

struct Node<S> {
    op: Op<S>,
    value: Tensor<S>,
}

/// Reverse-mode autodiff tape.
///
/// Ops record eagerly-computed values plus enough structure to run a single
/// backward sweep in reverse creation order. Every op output is scanned for
/// NaN/Inf as it is produced; the first offender poisons the tape and
/// [`Tape::backward`] / [`Tape::loss_value`] report it by op name instead of
/// letting garbage propagate into an optimizer step.
pub struct Tape<S> {
    nodes: Vec<Node<S>>,
    mode: Mode,
    first_non_finite: Option<&'static str>,
    stochastic: bool,
}

impl<S: Scalar> Tape<S> {
    pub fn new(mode: Mode) -> Self {
        Tape {
            nodes: Vec::new(),
            mode,
            first_non_finite: None,
            stochastic: false,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn is_train(&self) -> bool {
        self.mode == Mode::Train
    }

    /// True once any op with sampled randomness (dropout with a live rate)
    /// has been recorded. The gradient checker refuses such graphs.
    pub fn is_stochastic(&self) -> bool {
        self.stochastic
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Forward value of a node.
    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.nodes[id.0].value
    }

    /// Value of a scalar node, failing if the tape was poisoned by a
    /// non-finite op output anywhere upstream.
    pub fn loss_value(&self, id: NodeId) -> Result<S> {
        self.ensure_healthy()?;
        Ok(self.value(id).item())
    }

    /// `Err` if any op so far produced a NaN/Inf, naming the first offender.
    pub fn ensure_healthy(&self) -> Result<()> {
        match self.first_non_finite {
            Some(op) => Err(Error::NonFinite { op }),
            None => Ok(()),
        }
    }

    fn push(&mut self, op: Op<S>, value: Tensor<S>) -> NodeId {
        if self.first_non_finite.is_none() && value.first_non_finite().is_some() {
            self.first_non_finite = Some(op.name());
        }
        self.nodes.push(Node { op, value });
        NodeId(self.nodes.len() - 1)
    }

    // ---- leaves ----

    pub fn constant(&mut self, value: Tensor<S>) -> NodeId {
        self.push(Op::Constant, value)
    }

    pub fn scalar(&mut self, v: S) -> NodeId {
        self.constant(Tensor::scalar(v))
    }

    /// Parameter leaf: the current value enters the graph and the backward
    /// sweep accumulates into the parameter's gradient slot.
    pub fn param(&mut self, params: &ParamSet<S>, id: ParamId) -> NodeId {
        self.push(Op::Param(id), params.value(id).clone())
    }

    /// Parameter value entering as a plain constant — used when one player's
    /// weights must not receive gradients from the other player's update.
    pub fn frozen_param(&mut self, params: &ParamSet<S>, id: ParamId) -> NodeId {
        self.push(Op::Constant, params.value(id).clone())
    }

    /// Either of the above, chosen by flag.
    pub fn leaf(&mut self, params: &ParamSet<S>, id: ParamId, frozen: bool) -> NodeId {
        if frozen {
            self.frozen_param(params, id)
        } else {
            self.param(params, id)
        }
    }

    // ---- ops ----

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        let (m, k) = (av.rows(), av.cols());
        let (k2, n) = (bv.rows(), bv.cols());
        assert_eq!(k, k2, "matmul inner dims differ: [{m},{k}] x [{k2},{n}]");
        let mut out = Tensor::zeros(&[m, n]);
        for i in 0..m {
            let arow = av.row(i);
            let orow = out.row_mut(i);
            for (kk, &aik) in arow.iter().enumerate() {
                let brow = bv.row(kk);
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        self.push(Op::Matmul(a, b), out)
    }

    fn binary_same_shape(&mut self, a: NodeId, b: NodeId, op: fn(NodeId, NodeId) -> Op<S>, f: fn(S, S) -> S) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(
            av.shape(),
            bv.shape(),
            "{} shapes differ: {:?} vs {:?}",
            op(a, b).name(),
            av.shape(),
            bv.shape()
        );
        let data = av.data().iter().zip(bv.data()).map(|(&x, &y)| f(x, y)).collect();
        let out = Tensor::from_vec(av.shape(), data);
        self.push(op(a, b), out)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, Op::Add, |x, y| x + y)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, Op::Sub, |x, y| x - y)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary_same_shape(a, b, Op::Mul, |x, y| x * y)
    }

    fn rowwise_bias(&mut self, a: NodeId, b: NodeId, op: fn(NodeId, NodeId) -> Op<S>, f: fn(S, S) -> S) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        let d = av.cols();
        assert_eq!(bv.shape(), &[d], "{}: vector {:?} vs row width {d}", op(a, b).name(), bv.shape());
        let mut out = av.clone();
        for r in 0..out.rows() {
            for (x, &y) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *x = f(*x, y);
            }
        }
        self.push(op(a, b), out)
    }

    pub fn add_bias(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.rowwise_bias(a, b, Op::AddBias, |x, y| x + y)
    }

    pub fn sub_bias(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.rowwise_bias(a, b, Op::SubBias, |x, y| x - y)
    }

    pub fn mul_bias(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.rowwise_bias(a, b, Op::MulBias, |x, y| x * y)
    }

    pub fn scale_const(&mut self, a: NodeId, c: S) -> NodeId {
        let out = self.value(a).map(|x| x * c);
        self.push(Op::ScaleConst(a, c), out)
    }

    pub fn neg(&mut self, a: NodeId) -> NodeId {
        self.scale_const(a, sc(-1.0))
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(stable_sigmoid);
        self.push(Op::Sigmoid(a), out)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(|x| x.tanh());
        self.push(Op::Tanh(a), out)
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let out = self.value(a).map(|x| if x > S::zero() { x } else { S::zero() });
        self.push(Op::Relu(a), out)
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let v = self.value(a);
        assert!(!v.is_empty(), "mean of empty tensor");
        let total: S = v.data().iter().copied().sum();
        let out = Tensor::scalar(total / sc(v.len() as f64));
        self.push(Op::Mean(a), out)
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let total: S = self.value(a).data().iter().copied().sum();
        self.push(Op::Sum(a), Tensor::scalar(total))
    }

    pub fn sum_sq(&mut self, a: NodeId) -> NodeId {
        let total: S = self.value(a).data().iter().map(|&x| x * x).sum();
        self.push(Op::SumSq(a), Tensor::scalar(total))
    }

    /// Inverted dropout. Identity in `Infer` mode or at rate zero; in `Train`
    /// mode each element is kept with probability `1 - rate` and scaled by
    /// `1/(1 - rate)`, so expectations match between modes.
    pub fn dropout(&mut self, a: NodeId, rate: f64, rng: Option<&mut Rng>) -> NodeId {
        assert!((0.0..1.0).contains(&rate), "dropout rate {rate} outside [0,1)");
        if self.mode == Mode::Infer || rate == 0.0 {
            return a;
        }
        let rng = rng.expect("train-mode dropout with a positive rate needs an rng");
        self.stochastic = true;
        let keep_scale = sc::<S>(1.0 / (1.0 - rate));
        let av = self.value(a);
        let mut mask = Tensor::zeros(av.shape());
        for m in mask.data_mut() {
            if rng.uniform() >= rate {
                *m = keep_scale;
            }
        }
        let data = av.data().iter().zip(mask.data()).map(|(&x, &m)| x * m).collect();
        let out = Tensor::from_vec(av.shape(), data);
        self.push(Op::Dropout(a, mask), out)
    }

    /// Scale row `t` of `of` (`[t,d]`) by the per-row factor in `by` (`[t,1]`).
    /// This is how a score column masks an encoded feature stream.
    pub fn row_scale(&mut self, of: NodeId, by: NodeId) -> NodeId {
        let (av, sv) = (self.value(of), self.value(by));
        assert_eq!(
            sv.shape(),
            &[av.rows(), 1],
            "row_scale: factors {:?} vs [{}, 1]",
            sv.shape(),
            av.rows()
        );
        let mut out = av.clone();
        for r in 0..out.rows() {
            let f = sv.at(r, 0);
            for x in out.row_mut(r) {
                *x = *x * f;
            }
        }
        self.push(Op::RowScale { of, by }, out)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (av, bv) = (self.value(a), self.value(b));
        assert_eq!(av.rows(), bv.rows(), "concat_cols row counts differ: {} vs {}", av.rows(), bv.rows());
        let (t, d1, d2) = (av.rows(), av.cols(), bv.cols());
        let mut out = Tensor::zeros(&[t, d1 + d2]);
        for r in 0..t {
            out.row_mut(r)[..d1].copy_from_slice(av.row(r));
            out.row_mut(r)[d1..].copy_from_slice(bv.row(r));
        }
        self.push(Op::ConcatCols(a, b), out)
    }

    pub fn slice_cols(&mut self, of: NodeId, c0: usize, c1: usize) -> NodeId {
        let av = self.value(of);
        assert!(c0 < c1 && c1 <= av.cols(), "slice_cols {c0}..{c1} of width {}", av.cols());
        let t = av.rows();
        let mut out = Tensor::zeros(&[t, c1 - c0]);
        for r in 0..t {
            out.row_mut(r).copy_from_slice(&av.row(r)[c0..c1]);
        }
        self.push(Op::SliceCols { of, c0, c1 }, out)
    }

    pub fn slice_row(&mut self, of: NodeId, r: usize) -> NodeId {
        let av = self.value(of);
        assert!(r < av.rows(), "slice_row {r} of {} rows", av.rows());
        let out = Tensor::from_vec(&[1, av.cols()], av.row(r).to_vec());
        self.push(Op::SliceRow { of, r }, out)
    }

    /// Stack `[1,d]` rows into an `[n,d]` matrix.
    pub fn stack_rows(&mut self, parts: Vec<NodeId>) -> NodeId {
        assert!(!parts.is_empty(), "stack_rows of nothing");
        let d = self.value(parts[0]).cols();
        let mut out = Tensor::zeros(&[parts.len(), d]);
        for (r, &p) in parts.iter().enumerate() {
            let pv = self.value(p);
            assert_eq!(pv.shape(), &[1, d], "stack_rows part {r} has shape {:?}", pv.shape());
            out.row_mut(r).copy_from_slice(pv.row(0));
        }
        self.push(Op::StackRows(parts), out)
    }

    /// `out[t] = in[t - offset]` with zero fill at the edges: `offset = h`
    /// reads `h` frames into the past, `offset = -h` into the future.
    pub fn shift_rows(&mut self, of: NodeId, offset: isize) -> NodeId {
        let av = self.value(of);
        let t = av.rows() as isize;
        let mut out = Tensor::zeros(&[av.rows(), av.cols()]);
        for r in 0..t {
            let src = r - offset;
            if (0..t).contains(&src) {
                out.row_mut(r as usize).copy_from_slice(av.row(src as usize));
            }
        }
        self.push(Op::ShiftRows { of, offset }, out)
    }

    pub fn reverse_rows(&mut self, a: NodeId) -> NodeId {
        let av = self.value(a);
        let t = av.rows();
        let mut out = Tensor::zeros(&[t, av.cols()]);
        for r in 0..t {
            out.row_mut(r).copy_from_slice(av.row(t - 1 - r));
        }
        self.push(Op::ReverseRows(a), out)
    }

    /// Per-column mean over rows: `[t,d] -> [d]`.
    pub fn col_mean(&mut self, a: NodeId) -> NodeId {
        let av = self.value(a);
        let (t, d) = (av.rows(), av.cols());
        assert!(t > 0, "col_mean over zero rows");
        let mut out = Tensor::zeros(&[d]);
        for r in 0..t {
            for (o, &x) in out.data_mut().iter_mut().zip(av.row(r)) {
                *o += x;
            }
        }
        let inv = sc::<S>(1.0 / t as f64);
        for o in out.data_mut() {
            *o *= inv;
        }
        self.push(Op::ColMean(a), out)
    }

    /// Elementwise `1/sqrt(x + eps)`; inputs are variances, so `x >= 0`.
    pub fn rsqrt_shift(&mut self, a: NodeId, eps: S) -> NodeId {
        let out = self.value(a).map(|x| (x + eps).sqrt().recip());
        self.push(Op::RsqrtShift(a, eps), out)
    }

    /// Identity whose backward multiplies the gradient by `factor`. With any
    /// `factor != 1` every upstream analytic gradient goes wrong by that
    /// factor — a deliberate fault for exercising the gradient checker.
    pub fn scale_backward(&mut self, a: NodeId, factor: S) -> NodeId {
        let out = self.value(a).clone();
        self.push(Op::ScaleBackward(a, factor), out)
    }

    // ---- backward ----

    /// Reverse sweep from a scalar `loss` node, accumulating parameter
    /// gradients into whichever of `sinks` owns each parameter leaf.
    ///
    /// Fails (before touching any gradient) if the forward pass produced a
    /// non-finite value, and mid-sweep if a gradient goes non-finite.
    pub fn backward(&mut self, loss: NodeId, sinks: &mut [&mut ParamSet<S>]) -> Result<S> {
        let loss_value = self.loss_value(loss)?;
        assert_eq!(self.value(loss).len(), 1, "backward from non-scalar loss");

        let mut grads: Vec<Option<Tensor<S>>> = (0..self.nodes.len()).map(|_| None).collect();
        // Seed with the loss node's own shape: elementwise backwards pass
        // gradient shapes through unchanged, so a mismatched seed would
        // surface deep in the graph.
        grads[loss.0] = Some(Tensor::filled(self.value(loss).shape(), S::one()));

        for i in (0..self.nodes.len()).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if g.first_non_finite().is_some() {
                return Err(Error::NonFinite {
                    op: node.op.backward_name(),
                });
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(pid) => {
                    let sink = sinks
                        .iter_mut()
                        .find(|s| s.owns(*pid))
                        .unwrap_or_else(|| panic!("no gradient sink for parameter leaf {pid:?}"));
                    let slot = sink.grad_mut(*pid);
                    for (dst, &src) in slot.data_mut().iter_mut().zip(g.data()) {
                        *dst += src;
                    }
                }
                Op::Matmul(a, b) => {
                    let (av, bv) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (av.rows(), av.cols(), bv.cols());
                    {
                        let ga = grad_slot(&mut grads, *a, av.shape());
                        for i in 0..m {
                            let grow = g.row(i);
                            let garow = ga.row_mut(i);
                            for kk in 0..k {
                                let brow = bv.row(kk);
                                let mut acc = S::zero();
                                for j in 0..n {
                                    acc += grow[j] * brow[j];
                                }
                                garow[kk] += acc;
                            }
                        }
                    }
                    {
                        let gb = grad_slot(&mut grads, *b, bv.shape());
                        for i in 0..m {
                            let arow = av.row(i);
                            let grow = g.row(i);
                            for kk in 0..k {
                                let aik = arow[kk];
                                let gbrow = gb.row_mut(kk);
                                for j in 0..n {
                                    gbrow[j] += aik * grow[j];
                                }
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    add_into(grad_slot(&mut grads, *a, g.shape()), g.data());
                    add_into(grad_slot(&mut grads, *b, g.shape()), g.data());
                }
                Op::Sub(a, b) => {
                    add_into(grad_slot(&mut grads, *a, g.shape()), g.data());
                    let gb = grad_slot(&mut grads, *b, g.shape());
                    for (dst, &src) in gb.data_mut().iter_mut().zip(g.data()) {
                        *dst -= src;
                    }
                }
                Op::Mul(a, b) => {
                    let (a, b) = (*a, *b);
                    let contrib_a: Vec<S> = g
                        .data()
                        .iter()
                        .zip(self.nodes[b.0].value.data())
                        .map(|(&gx, &bx)| gx * bx)
                        .collect();
                    let contrib_b: Vec<S> = g
                        .data()
                        .iter()
                        .zip(self.nodes[a.0].value.data())
                        .map(|(&gx, &ax)| gx * ax)
                        .collect();
                    add_into(grad_slot(&mut grads, a, g.shape()), &contrib_a);
                    add_into(grad_slot(&mut grads, b, g.shape()), &contrib_b);
                }
                Op::AddBias(a, b) | Op::SubBias(a, b) => {
                    let negate = matches!(node.op, Op::SubBias(..));
                    let (a, b) = (*a, *b);
                    let d = g.cols();
                    add_into(grad_slot(&mut grads, a, g.shape()), g.data());
                    let gb = grad_slot(&mut grads, b, &[d]);
                    for r in 0..g.rows() {
                        for (dst, &src) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            if negate {
                                *dst -= src;
                            } else {
                                *dst += src;
                            }
                        }
                    }
                }
                Op::MulBias(a, b) => {
                    let (a, b) = (*a, *b);
                    let av = &self.nodes[a.0].value;
                    let bv = &self.nodes[b.0].value;
                    let (t, d) = (g.rows(), g.cols());
                    {
                        let ga = grad_slot(&mut grads, a, g.shape());
                        for r in 0..t {
                            let grow = g.row(r);
                            let garow = ga.row_mut(r);
                            for c in 0..d {
                                garow[c] += grow[c] * bv.data()[c];
                            }
                        }
                    }
                    {
                        let gb = grad_slot(&mut grads, b, &[d]);
                        for r in 0..t {
                            let grow = g.row(r);
                            let arow = av.row(r);
                            for c in 0..d {
                                gb.data_mut()[c] += grow[c] * arow[c];
                            }
                        }
                    }
                }
                Op::ScaleConst(a, c) => {
                    let contrib: Vec<S> = g.data().iter().map(|&gx| gx * *c).collect();
                    add_into(grad_slot(&mut grads, *a, g.shape()), &contrib);
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    let contrib: Vec<S> = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&gx, &yx)| gx * yx * (S::one() - yx))
                        .collect();
                    add_into(grad_slot(&mut grads, *a, g.shape()), &contrib);
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    let contrib: Vec<S> = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&gx, &yx)| gx * (S::one() - yx * yx))
                        .collect();
                    add_into(grad_slot(&mut grads, *a, g.shape()), &contrib);
                }
                Op::Relu(a) => {
                    let a = *a;
                    let contrib: Vec<S> = g
                        .data()
                        .iter()
                        .zip(self.nodes[a.0].value.data())
                        .map(|(&gx, &ax)| if ax > S::zero() { gx } else { S::zero() })
                        .collect();
                    add_into(grad_slot(&mut grads, a, g.shape()), &contrib);
                }
                Op::Mean(a) => {
                    let a = *a;
                    let shape = self.nodes[a.0].value.shape().to_vec();
                    let n: usize = shape.iter().product();
                    let gx = g.item() / sc(n as f64);
                    let ga = grad_slot(&mut grads, a, &shape);
                    for dst in ga.data_mut() {
                        *dst += gx;
                    }
                }
                Op::Sum(a) => {
                    let a = *a;
                    let shape = self.nodes[a.0].value.shape().to_vec();
                    let gx = g.item();
                    let ga = grad_slot(&mut grads, a, &shape);
                    for dst in ga.data_mut() {
                        *dst += gx;
                    }
                }
                Op::SumSq(a) => {
                    let a = *a;
                    let gx = g.item();
                    let two = sc::<S>(2.0);
                    let contrib: Vec<S> = self.nodes[a.0].value.data().iter().map(|&ax| two * gx * ax).collect();
                    let shape = self.nodes[a.0].value.shape().to_vec();
                    add_into(grad_slot(&mut grads, a, &shape), &contrib);
                }
                Op::Dropout(a, mask) => {
                    let contrib: Vec<S> = g.data().iter().zip(mask.data()).map(|(&gx, &mx)| gx * mx).collect();
                    add_into(grad_slot(&mut grads, *a, g.shape()), &contrib);
                }
                Op::RowScale { of, by } => {
                    let (of, by) = (*of, *by);
                    let av = &self.nodes[of.0].value;
                    let sv = &self.nodes[by.0].value;
                    let (t, d) = (g.rows(), g.cols());
                    {
                        let ga = grad_slot(&mut grads, of, g.shape());
                        for r in 0..t {
                            let f = sv.at(r, 0);
                            let grow = g.row(r);
                            let garow = ga.row_mut(r);
                            for c in 0..d {
                                garow[c] += grow[c] * f;
                            }
                        }
                    }
                    {
                        let gs = grad_slot(&mut grads, by, &[t, 1]);
                        for r in 0..t {
                            let mut acc = S::zero();
                            for (gx, ax) in g.row(r).iter().zip(av.row(r)) {
                                acc += *gx * *ax;
                            }
                            *gs.at_mut(r, 0) += acc;
                        }
                    }
                }
                Op::ConcatCols(a, b) => {
                    let (a, b) = (*a, *b);
                    let d1 = self.nodes[a.0].value.cols();
                    let t = g.rows();
                    {
                        let ga = grad_slot(&mut grads, a, &[t, d1]);
                        for r in 0..t {
                            for (dst, &src) in ga.row_mut(r).iter_mut().zip(&g.row(r)[..d1]) {
                                *dst += src;
                            }
                        }
                    }
                    {
                        let d2 = g.cols() - d1;
                        let gb = grad_slot(&mut grads, b, &[t, d2]);
                        for r in 0..t {
                            for (dst, &src) in gb.row_mut(r).iter_mut().zip(&g.row(r)[d1..]) {
                                *dst += src;
                            }
                        }
                    }
                }
                Op::SliceCols { of, c0, c1 } => {
                    let (of, c0, c1) = (*of, *c0, *c1);
                    let shape = self.nodes[of.0].value.shape().to_vec();
                    let ga = grad_slot(&mut grads, of, &shape);
                    for r in 0..g.rows() {
                        for (dst, &src) in ga.row_mut(r)[c0..c1].iter_mut().zip(g.row(r)) {
                            *dst += src;
                        }
                    }
                }
                Op::SliceRow { of, r } => {
                    let (of, r) = (*of, *r);
                    let shape = self.nodes[of.0].value.shape().to_vec();
                    let ga = grad_slot(&mut grads, of, &shape);
                    for (dst, &src) in ga.row_mut(r).iter_mut().zip(g.row(0)) {
                        *dst += src;
                    }
                }
                Op::StackRows(parts) => {
                    let parts = parts.clone();
                    for (r, p) in parts.into_iter().enumerate() {
                        let gp = grad_slot(&mut grads, p, &[1, g.cols()]);
                        for (dst, &src) in gp.row_mut(0).iter_mut().zip(g.row(r)) {
                            *dst += src;
                        }
                    }
                }
                Op::ShiftRows { of, offset } => {
                    let (of, offset) = (*of, *offset);
                    let shape = self.nodes[of.0].value.shape().to_vec();
                    let t = shape[0] as isize;
                    let ga = grad_slot(&mut grads, of, &shape);
                    for r in 0..t {
                        let src_row = r - offset;
                        if (0..t).contains(&src_row) {
                            for (dst, &src) in ga.row_mut(src_row as usize).iter_mut().zip(g.row(r as usize)) {
                                *dst += src;
                            }
                        }
                    }
                }
                Op::ReverseRows(a) => {
                    let a = *a;
                    let t = g.rows();
                    let ga = grad_slot(&mut grads, a, g.shape());
                    for r in 0..t {
                        for (dst, &src) in ga.row_mut(t - 1 - r).iter_mut().zip(g.row(r)) {
                            *dst += src;
                        }
                    }
                }
                Op::ColMean(a) => {
                    let a = *a;
                    let shape = self.nodes[a.0].value.shape().to_vec();
                    let t = shape[0];
                    let inv = sc::<S>(1.0 / t as f64);
                    let ga = grad_slot(&mut grads, a, &shape);
                    for r in 0..t {
                        for (dst, &src) in ga.row_mut(r).iter_mut().zip(g.data()) {
                            *dst += src * inv;
                        }
                    }
                }
                Op::RsqrtShift(a, _) => {
                    // y = (x + eps)^(-1/2)  =>  dy/dx = -y^3 / 2
                    let y = &node.value;
                    let half = sc::<S>(0.5);
                    let contrib: Vec<S> = g
                        .data()
                        .iter()
                        .zip(y.data())
                        .map(|(&gx, &yx)| -half * gx * yx * yx * yx)
                        .collect();
                    add_into(grad_slot(&mut grads, *a, g.shape()), &contrib);
                }
                Op::ScaleBackward(a, factor) => {
                    let contrib: Vec<S> = g.data().iter().map(|&gx| gx * *factor).collect();
                    add_into(grad_slot(&mut grads, *a, g.shape()), &contrib);
                }
            }
        }

        for sink in sinks.iter_mut() {
            sink.mark_grads_fresh();
        }
        Ok(loss_value)
    }
}

fn grad_slot<'g, S: Scalar>(grads: &'g mut [Option<Tensor<S>>], id: NodeId, shape: &[usize]) -> &'g mut Tensor<S> {
    grads[id.0].get_or_insert_with(|| Tensor::zeros(shape))
}

fn add_into<S: Scalar>(dst: &mut Tensor<S>, src: &[S]) {
    for (d, &s) in dst.data_mut().iter_mut().zip(src) {
        *d += s;
    }
}

/// Sigmoid that never exponentiates a large positive argument.
pub fn stable_sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}
