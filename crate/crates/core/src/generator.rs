//! The summarizer: per-frame importance scores plus an encoded feature
//! stream.
//!
//! Two temporal branches read the raw features side by side — a bidirectional
//! LSTM and a stack of dilated temporal relation layers — and their per-frame
//! outputs are concatenated into one joint representation. From that joint
//! stream an encoding head produces the compressed features `f_e` handed to
//! the critic, and a scoring head (dropout, affine, sigmoid) produces one
//! importance score per frame, strictly inside `(0, 1)`.

use crate::error::Result;
use crate::layers::{Affine, BiLstm, DtrNetwork, DtrNetworkConfig};
use crate::layers::dtr::NormStats;
use crate::numerics::{Mode, NodeId, ParamSet, Rng, Scalar, Tape, Tensor};

#[derive(Clone, Debug)]
pub struct GeneratorConfig {
    /// Width of the incoming per-frame features.
    pub in_dim: usize,
    /// Per-direction LSTM width; the recurrent branch emits `2 *
    /// lstm_hidden` channels.
    pub lstm_hidden: usize,
    /// Hole sizes of the four units in every relation layer.
    pub holes: Vec<usize>,
    /// Width of the encoded feature stream `f_e`.
    pub enc_dim: usize,
    /// Drop probability in the scoring head (train mode only).
    pub dropout: f64,
    /// Skip batch normalization in the relation stack (tests only).
    pub bypass_norm: bool,
}

impl GeneratorConfig {
    pub fn new(in_dim: usize) -> Self {
        GeneratorConfig {
            in_dim,
            lstm_hidden: 8,
            holes: vec![1, 4, 16, 64],
            enc_dim: 8,
            dropout: 0.5,
            bypass_norm: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.lstm_hidden == 0 || self.enc_dim == 0 {
            return Err(crate::Error::InvalidConfig(format!(
                "generator dims must be >= 1: in {} lstm {} enc {}",
                self.in_dim, self.lstm_hidden, self.enc_dim
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(crate::Error::InvalidConfig(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        let mut dtr = DtrNetworkConfig::new(self.in_dim, self.holes.clone());
        dtr.bypass_norm = self.bypass_norm;
        dtr.validate()
    }

    fn dtr_config(&self) -> DtrNetworkConfig {
        let mut cfg = DtrNetworkConfig::new(self.in_dim, self.holes.clone());
        cfg.bypass_norm = self.bypass_norm;
        cfg
    }

    /// Width of the concatenated [lstm, dtr] joint stream.
    pub fn joint_dim(&self) -> usize {
        2 * self.lstm_hidden + self.in_dim
    }
}

/// Nodes produced by one generator forward pass.
pub struct GeneratorPass {
    /// Encoded features `f_e`, `[T, enc_dim]`.
    pub features: NodeId,
    /// Importance scores, `[T, 1]`, each in `(0, 1)`.
    pub scores: NodeId,
    /// Batch statistics to fold into running buffers iff this pass is an
    /// unfrozen training step.
    pub stats: Vec<NormStats>,
}

pub struct Generator {
    cfg: GeneratorConfig,
    lstm: BiLstm,
    dtr: DtrNetwork,
    encode: Affine,
    score: Affine,
}

impl Generator {
    /// Parameter names live under `generator/`.
    pub fn build<S: Scalar>(cfg: GeneratorConfig, params: &mut ParamSet<S>, rng: &mut Rng) -> Self {
        cfg.validate().expect("invalid generator config");
        let lstm = BiLstm::build("generator/lstm", cfg.in_dim, cfg.lstm_hidden, params, rng);
        let dtr = DtrNetwork::build(cfg.dtr_config(), "generator/dtr", params, rng);
        let joint = cfg.joint_dim();
        let encode = Affine::build("generator/encode", joint, cfg.enc_dim, params, rng);
        let score = Affine::build("generator/score", joint, 1, params, rng);
        Generator {
            cfg,
            lstm,
            dtr,
            encode,
            score,
        }
    }

    pub fn cfg(&self) -> &GeneratorConfig {
        &self.cfg
    }

    /// Build the forward graph on `tape`. `rng` feeds the scoring head's
    /// dropout and is only touched in train mode with a positive rate.
    pub fn graph<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        x: NodeId,
        rng: Option<&mut Rng>,
        frozen: bool,
    ) -> GeneratorPass {
        let recurrent = self.lstm.forward(tape, params, x, frozen);
        let (dtr_outs, stats) = self.dtr.forward(tape, params, x, frozen);
        let joint = tape.concat_cols(recurrent, *dtr_outs.last().expect("dtr emits layers"));
        let features = self.encode.forward(tape, params, joint, frozen);
        let kept = tape.dropout(joint, self.cfg.dropout, rng);
        let logits = self.score.forward(tape, params, kept, frozen);
        let scores = tape.sigmoid(logits);
        GeneratorPass {
            features,
            scores,
            stats,
        }
    }

    /// Fold the pass's batch statistics into the running normalization
    /// buffers. Call once per optimization step that updated the generator.
    pub fn commit_stats<S: Scalar>(&self, tape: &Tape<S>, params: &mut ParamSet<S>, pass: &GeneratorPass) {
        self.dtr.commit_stats(tape, params, &pass.stats);
    }

    /// Deterministic inference: dropout off, normalization from running
    /// stats. Returns the encoded features and the per-frame scores.
    pub fn infer<S: Scalar>(&self, params: &ParamSet<S>, x: &Tensor<S>) -> Result<(Tensor<S>, Vec<S>)> {
        let mut tape = Tape::new(Mode::Infer);
        let xn = tape.constant(x.clone());
        let pass = self.graph(&mut tape, params, xn, None, true);
        tape.ensure_healthy()?;
        let features = tape.value(pass.features).clone();
        let scores = tape.value(pass.scores).data().to_vec();
        Ok((features, scores))
    }

    /// Scores only; see [`Generator::infer`].
    pub fn infer_scores<S: Scalar>(&self, params: &ParamSet<S>, x: &Tensor<S>) -> Result<Vec<S>> {
        Ok(self.infer(params, x)?.1)
    }
}
