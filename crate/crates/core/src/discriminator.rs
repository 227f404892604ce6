//! The summary critic.
//!
//! A summary reaches the critic as a masked feature stream: the encoded
//! features `f_e` with each row scaled by that frame's score (annotated
//! scores for the real summary, generated scores for the fake one, uniform
//! noise for the random baseline). One bidirectional LSTM encodes the raw
//! video, a second — shared across however many summaries are being compared
//! — encodes each masked stream. Both sequences collapse to their end states,
//! and a small dense head turns each (video, summary) pair into one score in
//! `(0, 1)`: how much the summary looks like a real one for this video.

use crate::error::Result;
use crate::layers::{Affine, BiLstm};
use crate::numerics::{NodeId, ParamSet, Rng, Scalar, Tape};

#[derive(Clone, Debug)]
pub struct DiscriminatorConfig {
    /// Raw per-frame feature width (video encoder input).
    pub feat_dim: usize,
    /// Encoded summary width (summary encoder input).
    pub enc_dim: usize,
    /// Per-direction width of both encoders.
    pub hidden: usize,
    /// Widths of the three hidden stages of the scoring head.
    pub head_dims: [usize; 3],
}

impl DiscriminatorConfig {
    pub fn new(feat_dim: usize, enc_dim: usize) -> Self {
        DiscriminatorConfig {
            feat_dim,
            enc_dim,
            hidden: 8,
            head_dims: [32, 16, 8],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feat_dim == 0 || self.enc_dim == 0 || self.hidden == 0 || self.head_dims.contains(&0) {
            return Err(crate::Error::InvalidConfig(format!(
                "discriminator dims must all be >= 1: feat {} enc {} hidden {} head {:?}",
                self.feat_dim, self.enc_dim, self.hidden, self.head_dims
            )));
        }
        Ok(())
    }
}

/// Mask an encoded feature stream by per-frame scores: row `t` of `features`
/// (`[T, enc_dim]`) times `scores[t]` (`[T, 1]`).
pub fn masked_summary<S: Scalar>(tape: &mut Tape<S>, features: NodeId, scores: NodeId) -> NodeId {
    tape.row_scale(features, scores)
}

pub struct Discriminator {
    cfg: DiscriminatorConfig,
    video_enc: BiLstm,
    summary_enc: BiLstm,
    head: Vec<Affine>,
}

impl Discriminator {
    /// Parameter names live under `discriminator/`.
    pub fn build<S: Scalar>(cfg: DiscriminatorConfig, params: &mut ParamSet<S>, rng: &mut Rng) -> Self {
        cfg.validate().expect("invalid discriminator config");
        let video_enc = BiLstm::build("discriminator/video_enc", cfg.feat_dim, cfg.hidden, params, rng);
        let summary_enc = BiLstm::build("discriminator/summary_enc", cfg.enc_dim, cfg.hidden, params, rng);
        // Pair representation: pooled video code ++ pooled summary code.
        let mut widths = vec![4 * cfg.hidden];
        widths.extend_from_slice(&cfg.head_dims);
        widths.push(1);
        let head = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| Affine::build(&format!("discriminator/head{i}"), w[0], w[1], params, rng))
            .collect();
        Discriminator {
            cfg,
            video_enc,
            summary_enc,
            head,
        }
    }

    pub fn cfg(&self) -> &DiscriminatorConfig {
        &self.cfg
    }

    /// Encode the raw video once; the result feeds every summary scored
    /// against it. `[T, feat_dim] -> [1, 2 * hidden]`.
    pub fn encode_video<S: Scalar>(&self, tape: &mut Tape<S>, params: &ParamSet<S>, x: NodeId, frozen: bool) -> NodeId {
        let seq = self.video_enc.forward(tape, params, x, frozen);
        self.video_enc.pooled_ends(tape, seq)
    }

    /// Score one masked summary (`[T, enc_dim]`) against an encoded video.
    /// Returns `[1, 1]` in `(0, 1)`.
    pub fn score_summary<S: Scalar>(
        &self,
        tape: &mut Tape<S>,
        params: &ParamSet<S>,
        video_code: NodeId,
        masked: NodeId,
        frozen: bool,
    ) -> NodeId {
        let seq = self.summary_enc.forward(tape, params, masked, frozen);
        let summary_code = self.summary_enc.pooled_ends(tape, seq);
        let mut cur = tape.concat_cols(video_code, summary_code);
        let last = self.head.len() - 1;
        for (i, affine) in self.head.iter().enumerate() {
            cur = affine.forward(tape, params, cur, frozen);
            if i < last {
                cur = tape.relu(cur);
            }
        }
        tape.sigmoid(cur)
    }
}
