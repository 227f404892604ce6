//! Dilated temporal relation (DTR) layers.
//!
//! A DTR unit with hole size `h` relates each frame to the frames `h` steps
//! away on either side: three full channel-mixing kernels applied at
//! `t - h, t, t + h` (zeros past the ends) plus a bias. A layer sums four
//! units with different holes, then batch-normalizes over the frame axis and
//! applies relu. Stacking layers multiplies temporal reach without touching
//! the frame rate.

use crate::error::Result;
use crate::numerics::param::BufferId;
use crate::numerics::scalar::sc;
use crate::numerics::{NodeId, ParamId, ParamSet, Rng, Scalar, Tape, Tensor};

/// Frames a single unit of hole size `hole` looks at: `hole * (kernel-1) + 1`,
/// i.e. `2h + 1` for the usual three-tap kernel.
pub fn time_span(hole: usize, kernel: usize) -> usize {
    assert!(kernel % 2 == 1, "kernel width {kernel} must be odd");
    hole * (kernel - 1) + 1
}

/// Frames visible to one output after `layers` stacked units of hole size
/// `hole`: `h * (kernel-1) * layers + 1`.
pub fn receptive_field(hole: usize, kernel: usize, layers: usize) -> usize {
    assert!(kernel % 2 == 1, "kernel width {kernel} must be odd");
    hole * (kernel - 1) * layers + 1
}

/// Variance floor inside batchnorm. Small enough that a unit-variance channel
/// normalizes to variance 1 within 1e-6, which the tests pin down.
const NORM_EPS: f64 = 1e-8;

/// Fraction of the old running statistic kept per train-mode pass.
const NORM_MOMENTUM: f64 = 0.9;

#[derive(Clone, Debug)]
pub struct DtrNetworkConfig {
    /// Feature width; DTR layers map `dim -> dim`.
    pub dim: usize,
    /// Hole size of each unit in every layer. Always four units.
    pub holes: Vec<usize>,
    pub layers: usize,
    /// Diagnostic switch: skip normalization entirely (the affine `gamma x +
    /// beta` still applies). Exists so kernel-level identities are exactly
    /// checkable in tests; training leaves it off.
    pub bypass_norm: bool,
}

impl DtrNetworkConfig {
    pub fn new(dim: usize, holes: Vec<usize>) -> Self {
        DtrNetworkConfig {
            dim,
            holes,
            layers: 3,
            bypass_norm: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.layers == 0 {
            return Err(crate::Error::InvalidConfig(format!(
                "dtr network needs dim >= 1 and layers >= 1, got dim {} layers {}",
                self.dim, self.layers
            )));
        }
        if self.holes.len() != 4 {
            return Err(crate::Error::InvalidConfig(format!(
                "a dtr layer sums exactly 4 units, got holes {:?}",
                self.holes
            )));
        }
        if self.holes.iter().any(|&h| h == 0) {
            return Err(crate::Error::InvalidConfig(format!("hole sizes must be >= 1, got {:?}", self.holes)));
        }
        Ok(())
    }
}

struct UnitWires {
    hole: usize,
    w_past: ParamId,
    w_center: ParamId,
    w_future: ParamId,
    bias: ParamId,
}

struct LayerWires {
    units: Vec<UnitWires>,
    norm_scale: ParamId,
    norm_shift: ParamId,
    running_mean: BufferId,
    running_var: BufferId,
}

/// Batch statistics produced by one train-mode normalization, to be folded
/// into the running buffers once the caller decides the pass counts as
/// training (frozen evaluations don't).
pub struct NormStats {
    layer: usize,
    mean: NodeId,
    var: NodeId,
}

pub struct DtrNetwork {
    cfg: DtrNetworkConfig,
    layers: Vec<LayerWires>,
}

impl DtrNetwork {
    /// Register all parameters under `prefix` and return the wired network.
    pub fn build<S: Scalar>(cfg: DtrNetworkConfig, prefix: &str, params: &mut ParamSet<S>, rng: &mut Rng) -> Self {
        cfg.validate().expect("invalid dtr config");
        let d = cfg.dim;
        // Three taps feed each output channel, so that's the fan-in.
        let fan_in = 3 * d;
        let mut layers = Vec::with_capacity(cfg.layers);
        for l in 0..cfg.layers {
            let units = cfg
                .holes
                .iter()
                .enumerate()
                .map(|(u, &hole)| {
                    let p = format!("{prefix}/layer{l}/unit{u}");
                    UnitWires {
                        hole,
                        w_past: params.register_uniform(format!("{p}/w_past"), &[d, d], fan_in, rng),
                        w_center: params.register_uniform(format!("{p}/w_center"), &[d, d], fan_in, rng),
                        w_future: params.register_uniform(format!("{p}/w_future"), &[d, d], fan_in, rng),
                        bias: params.register(format!("{p}/bias"), Tensor::zeros(&[d])),
                    }
                })
                .collect();
            layers.push(LayerWires {
                units,
                norm_scale: params.register(format!("{prefix}/layer{l}/norm/scale"), Tensor::filled(&[d], S::one())),
                norm_shift: params.register(format!("{prefix}/layer{l}/norm/shift"), Tensor::zeros(&[d])),
                running_mean: params.register_buffer(format!("{prefix}/layer{l}/norm/running_mean"), Tensor::zeros(&[d])),
                running_var: params.register_buffer(
                    format!("{prefix}/layer{l}/norm/running_var"),
                    Tensor::filled(&[d], S::one()),
                ),
            });
        }
        DtrNetwork { cfg, layers }
    }

    pub fn cfg(&self) -> &DtrNetworkConfig {
        &self.cfg
    }

    /// Build the forward graph. Returns one output per layer (the last is the
    /// network output) plus any train-mode batch statistics; pass those to
    /// [`DtrNetwork::commit_stats`] when the pass is a real training step.
    pub fn forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        x: NodeId,
        frozen: bool,
    ) -> (Vec<NodeId>, Vec<NormStats>) {
        assert_eq!(
            tape.value(x).cols(),
            self.cfg.dim,
            "dtr input width {} != configured dim {}",
            tape.value(x).cols(),
            self.cfg.dim
        );
        assert!(tape.value(x).rows() > 0, "dtr forward over zero frames");
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut stats = Vec::new();
        let mut cur = x;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut summed: Option<NodeId> = None;
            for unit in &layer.units {
                let y = self.unit_forward(tape, params, unit, cur, frozen);
                summed = Some(match summed {
                    Some(acc) => tape.add(acc, y),
                    None => y,
                });
            }
            let summed = summed.expect("at least one unit per layer");
            let normed = self.norm_forward(tape, params, layer, l, summed, frozen, &mut stats);
            cur = tape.relu(normed);
            outputs.push(cur);
        }
        (outputs, stats)
    }

    fn unit_forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        unit: &UnitWires,
        x: NodeId,
        frozen: bool,
    ) -> NodeId {
        let h = unit.hole as isize;
        let wp = tape.leaf(params, unit.w_past, frozen);
        let wc = tape.leaf(params, unit.w_center, frozen);
        let wf = tape.leaf(params, unit.w_future, frozen);
        let b = tape.leaf(params, unit.bias, frozen);
        let past = tape.shift_rows(x, h);
        let future = tape.shift_rows(x, -h);
        let yp = tape.matmul(past, wp);
        let yc = tape.matmul(x, wc);
        let yf = tape.matmul(future, wf);
        let s1 = tape.add(yp, yc);
        let s2 = tape.add(s1, yf);
        tape.add_bias(s2, b)
    }

    fn norm_forward<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        layer: &LayerWires,
        layer_idx: usize,
        x: NodeId,
        frozen: bool,
        stats: &mut Vec<NormStats>,
    ) -> NodeId {
        let t = tape.value(x).rows();
        let scale = tape.leaf(params, layer.norm_scale, frozen);
        let shift = tape.leaf(params, layer.norm_shift, frozen);

        // A single frame has no batch variance, and the bypass switch exists
        // for identity tests: both cases reduce to the affine part.
        if tape.is_train() && (self.cfg.bypass_norm || t == 1) {
            let scaled = tape.mul_bias(x, scale);
            return tape.add_bias(scaled, shift);
        }

        if tape.is_train() {
            let mean = tape.col_mean(x);
            let centered = tape.sub_bias(x, mean);
            let sq = tape.mul(centered, centered);
            let var = tape.col_mean(sq);
            let inv_std = tape.rsqrt_shift(var, sc(NORM_EPS));
            let normed = tape.mul_bias(centered, inv_std);
            let scaled = tape.mul_bias(normed, scale);
            stats.push(NormStats {
                layer: layer_idx,
                mean,
                var,
            });
            tape.add_bias(scaled, shift)
        } else {
            // Inference folds the running statistics into one affine map; they
            // are state, not parameters, so they enter as constants.
            let d = self.cfg.dim;
            let rm = params.buffer(layer.running_mean);
            let rv = params.buffer(layer.running_var);
            let gamma = params.value(layer.norm_scale);
            let beta = params.value(layer.norm_shift);
            let mut eff_scale = Tensor::zeros(&[d]);
            let mut eff_shift = Tensor::zeros(&[d]);
            for c in 0..d {
                let s = if self.cfg.bypass_norm {
                    gamma.data()[c]
                } else {
                    gamma.data()[c] / (rv.data()[c] + sc(NORM_EPS)).sqrt()
                };
                eff_scale.data_mut()[c] = s;
                eff_shift.data_mut()[c] = beta.data()[c]
                    - if self.cfg.bypass_norm {
                        S::zero()
                    } else {
                        rm.data()[c] * s
                    };
            }
            let sc_node = tape.constant(eff_scale);
            let sh_node = tape.constant(eff_shift);
            let scaled = tape.mul_bias(x, sc_node);
            tape.add_bias(scaled, sh_node)
        }
    }

    /// Fold batch statistics from a train-mode forward into the running
    /// buffers: `running = momentum * running + (1 - momentum) * batch`.
    pub fn commit_stats<S: Scalar>(&self, tape: &Tape<S>, params: &mut ParamSet<S>, stats: &[NormStats]) {
        let keep = sc::<S>(NORM_MOMENTUM);
        let blend = sc::<S>(1.0 - NORM_MOMENTUM);
        for st in stats {
            let layer = &self.layers[st.layer];
            let mean = tape.value(st.mean).clone();
            let var = tape.value(st.var).clone();
            for (dst, &src) in params.buffer_mut(layer.running_mean).data_mut().iter_mut().zip(mean.data()) {
                *dst = keep * *dst + blend * src;
            }
            for (dst, &src) in params.buffer_mut(layer.running_var).data_mut().iter_mut().zip(var.data()) {
                *dst = keep * *dst + blend * src;
            }
        }
    }

    /// Handles needed by tests to poke unit kernels directly.
    #[doc(hidden)]
    pub fn unit_param_ids(&self, layer: usize, unit: usize) -> (ParamId, ParamId, ParamId, ParamId) {
        let u = &self.layers[layer].units[unit];
        (u.w_past, u.w_center, u.w_future, u.bias)
    }

    #[doc(hidden)]
    pub fn norm_param_ids(&self, layer: usize) -> (ParamId, ParamId) {
        (self.layers[layer].norm_scale, self.layers[layer].norm_shift)
    }

    #[doc(hidden)]
    pub fn norm_buffer_ids(&self, layer: usize) -> (BufferId, BufferId) {
        (self.layers[layer].running_mean, self.layers[layer].running_var)
    }
}
