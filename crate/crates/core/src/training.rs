//! Alternating adversarial training.
//!
//! Each iteration runs on one sampled shot: two summarizer updates followed
//! by one critic update. Summarizer steps build the full critic graph with
//! the critic's weights frozen, so adversarial gradients flow through the
//! critic's operations into the encoded features and scores; critic steps
//! freeze the summarizer instead, treating its outputs as constants. A fresh
//! random score vector is drawn for every critic evaluation that uses one.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::discriminator::{masked_summary, Discriminator, DiscriminatorConfig};
use crate::error::{Error, Result};
use crate::eval::{evaluate_video, EvalConfig};
use crate::generator::{Generator, GeneratorConfig};
use crate::loss::{spread_node, supervised_node};
use crate::numerics::rng::streams;
use crate::numerics::{AdamState, Mode, NodeId, ParamSet, Rng, Scalar, Tape, Tensor};

/// One video as the trainer sees it: features plus frame-level annotation.
#[derive(Clone, Debug)]
pub struct Video<S: Scalar> {
    pub id: String,
    /// `[T, D]` frame features.
    pub features: Tensor<S>,
    /// Length-`T` target scores in `[0, 1]` (binary for keyframe masks).
    pub gt_scores: Vec<S>,
    /// Length-`T` keyframe mask, used by the evaluation protocol.
    pub keyframes: Vec<bool>,
}

impl<S: Scalar> Video<S> {
    pub fn validate(&self, expect_dim: usize) -> Result<()> {
        let t = self.features.rows();
        if t == 0 {
            return Err(Error::InvalidConfig(format!("video `{}` has no frames", self.id)));
        }
        if self.features.cols() != expect_dim {
            return Err(Error::InvalidConfig(format!(
                "video `{}` has {}-dimensional features, model expects {expect_dim}",
                self.id,
                self.features.cols()
            )));
        }
        if self.gt_scores.len() != t {
            return Err(Error::BadAnnotation {
                video_id: self.id.clone(),
                message: format!("{} scores for {t} frames", self.gt_scores.len()),
            });
        }
        if self.keyframes.len() != t {
            return Err(Error::BadAnnotation {
                video_id: self.id.clone(),
                message: format!("{} keyframe flags for {t} frames", self.keyframes.len()),
            });
        }
        for (i, v) in self.gt_scores.iter().enumerate() {
            let v = v.as_f64();
            if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                return Err(Error::BadAnnotation {
                    video_id: self.id.clone(),
                    message: format!("score {v} at frame {i} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

/// Everything needed to rebuild the two networks from scratch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub in_dim: usize,
    pub lstm_hidden: usize,
    pub holes: Vec<usize>,
    pub enc_dim: usize,
    pub dropout: f64,
    pub bypass_norm: bool,
    pub disc_hidden: usize,
    pub head_dims: [usize; 3],
}

impl ModelConfig {
    pub fn new(in_dim: usize) -> Self {
        let g = GeneratorConfig::new(in_dim);
        ModelConfig {
            in_dim,
            lstm_hidden: g.lstm_hidden,
            holes: g.holes,
            enc_dim: g.enc_dim,
            dropout: g.dropout,
            bypass_norm: g.bypass_norm,
            disc_hidden: 8,
            head_dims: [32, 16, 8],
        }
    }

    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig {
            in_dim: self.in_dim,
            lstm_hidden: self.lstm_hidden,
            holes: self.holes.clone(),
            enc_dim: self.enc_dim,
            dropout: self.dropout,
            bypass_norm: self.bypass_norm,
        }
    }

    pub fn discriminator(&self) -> DiscriminatorConfig {
        DiscriminatorConfig {
            feat_dim: self.in_dim,
            enc_dim: self.enc_dim,
            hidden: self.disc_hidden,
            head_dims: self.head_dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator().validate()?;
        self.discriminator().validate()
    }
}

/// Both networks plus their parameter stores.
pub struct Models<S: Scalar> {
    pub generator: Generator,
    pub discriminator: Discriminator,
    pub g_params: ParamSet<S>,
    pub d_params: ParamSet<S>,
    pub config: ModelConfig,
}

impl<S: Scalar> Models<S> {
    /// Fresh random initialization from the seed's init stream.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::substream(seed, streams::INIT);
        let mut g_params = ParamSet::new();
        let generator = Generator::build(config.generator(), &mut g_params, &mut rng);
        let mut d_params = ParamSet::new();
        let discriminator = Discriminator::build(config.discriminator(), &mut d_params, &mut rng);
        Ok(Models {
            generator,
            discriminator,
            g_params,
            d_params,
            config,
        })
    }

    /// Overwrite all parameters and buffers from exported tensor lists.
    pub fn fill(
        &mut self,
        generator: &[(String, Tensor<S>)],
        discriminator: &[(String, Tensor<S>)],
    ) -> Result<()> {
        self.g_params.import(generator)?;
        self.d_params.import(discriminator)
    }
}

/// Which opponents the summarizer trains against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdversaryMode {
    /// Annotated, generated, and random summary pairs.
    ThreePlayer,
    /// Drop the random pair; the generated pair takes its full weight.
    TwoPlayer,
    /// No critic at all; supervised loss only.
    GeneratorOnly,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub mode: AdversaryMode,
    /// Include the supervised score loss in the summarizer objective.
    pub supervised: bool,
    pub lr_g: f64,
    pub lr_d: f64,
    /// Balance between the generated and random fake pairs.
    pub tau: f64,
    pub shot_len: usize,
    pub shot_overlap: f64,
    pub g_steps_per_iter: usize,
    pub d_steps_per_iter: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Evaluate the splits every this many epochs; 0 = only at the end.
    pub eval_every: usize,
    pub train_fraction: f64,
    /// Stop once the train-split mean F reaches this.
    pub target_train_f: Option<f64>,
    /// Optional global-norm gradient cap.
    pub clip_norm: Option<f64>,
    pub eval: EvalConfig,
}

impl TrainConfig {
    pub fn new(in_dim: usize) -> Self {
        TrainConfig {
            model: ModelConfig::new(in_dim),
            mode: AdversaryMode::ThreePlayer,
            supervised: true,
            lr_g: 1e-4,
            lr_d: 1e-3,
            tau: 0.5,
            shot_len: 1000,
            shot_overlap: 0.10,
            g_steps_per_iter: 2,
            d_steps_per_iter: 1,
            epochs: 100,
            seed: 0,
            eval_every: 5,
            train_fraction: 0.8,
            target_train_f: None,
            clip_norm: None,
            eval: EvalConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.eval.validate()?;
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::InvalidConfig(format!("tau {} outside [0, 1]", self.tau)));
        }
        for (name, lr) in [("lr_g", self.lr_g), ("lr_d", self.lr_d)] {
            if !lr.is_finite() || lr <= 0.0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {lr}")));
            }
        }
        if self.shot_len == 0 {
            return Err(Error::InvalidConfig("shot_len must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.shot_overlap) {
            return Err(Error::InvalidConfig(format!(
                "shot_overlap {} outside [0, 1)",
                self.shot_overlap
            )));
        }
        if self.g_steps_per_iter == 0 || self.d_steps_per_iter == 0 {
            return Err(Error::InvalidConfig("step counts per iteration must be >= 1".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train_fraction {} outside (0, 1]",
                self.train_fraction
            )));
        }
        if self.mode == AdversaryMode::GeneratorOnly && !self.supervised {
            return Err(Error::InvalidConfig(
                "generator-only training with the supervised loss disabled optimizes nothing".into(),
            ));
        }
        if let Some(c) = self.clip_norm {
            if !c.is_finite() || c <= 0.0 {
                return Err(Error::InvalidConfig(format!("clip_norm must be positive, got {c}")));
            }
        }
        if let Some(f) = self.target_train_f {
            if !(0.0..=100.0).contains(&f) {
                return Err(Error::InvalidConfig(format!("target_train_f {f} outside [0, 100]")));
            }
        }
        Ok(())
    }

    /// The random pair's weight disappears in two-player mode, so the
    /// generated pair carries everything.
    fn effective_tau(&self) -> f64 {
        match self.mode {
            AdversaryMode::TwoPlayer => 1.0,
            _ => self.tau,
        }
    }
}

/// Candidate shot start offsets for a `t`-frame video: fixed windows of
/// `shot_len` frames whose spacing makes neighbors overlap by `overlap`.
/// A video no longer than one shot yields the single whole-video window.
pub fn shot_starts(t: usize, shot_len: usize, overlap: f64) -> Vec<usize> {
    if t <= shot_len {
        return vec![0];
    }
    let stride = ((shot_len as f64) * (1.0 - overlap)).round().max(1.0) as usize;
    let mut starts = Vec::new();
    let mut s = 0;
    while s + shot_len <= t {
        starts.push(s);
        s += stride;
    }
    starts
}

/// Pick one shot window uniformly from the candidate grid.
pub fn sample_shot(t: usize, shot_len: usize, overlap: f64, rng: &mut Rng) -> Range<usize> {
    let starts = shot_starts(t, shot_len, overlap);
    let s = starts[rng.below(starts.len())];
    s..(s + shot_len).min(t)
}

/// Deterministic shuffled split: the first `ceil(fraction * n)` shuffled
/// indices train, the rest validate. Both halves come back sorted.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if n == 0 {
        return Err(Error::InvalidConfig("cannot split an empty dataset".into()));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    let mut rng = Rng::substream(seed, streams::SPLIT);
    rng.shuffle(&mut ids);
    let cut = ((n as f64) * train_fraction).ceil().clamp(1.0, n as f64) as usize;
    let mut val = ids.split_off(cut);
    ids.sort_unstable();
    val.sort_unstable();
    Ok((ids, val))
}

/// Per-iteration log row. Fields are `None` where the mode has no such
/// quantity (no critic in generator-only runs, no random pair in two-player
/// runs); `val_f` is filled on iterations that close an evaluated epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub epoch: usize,
    pub l_d: Option<f64>,
    pub l_g_adv: Option<f64>,
    pub l_summ: f64,
    pub d_g: Option<f64>,
    pub d_s: Option<f64>,
    pub d_r: Option<f64>,
    pub val_f: Option<f64>,
}

/// One evaluation of both splits by whole-sequence inference.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalPoint {
    pub epoch: usize,
    pub iteration: usize,
    pub train_f: f64,
    /// `None` when the validation split is empty.
    pub val_f: Option<f64>,
}

/// Exported tensors at one point of training.
#[derive(Clone, Debug)]
pub struct Snapshot<S: Scalar> {
    pub epoch: usize,
    /// Selection score (validation F, or train F without a validation
    /// split); `None` for the untouched initial state.
    pub f: Option<f64>,
    pub generator: Vec<(String, Tensor<S>)>,
    pub discriminator: Vec<(String, Tensor<S>)>,
}

impl<S: Scalar> Snapshot<S> {
    fn of(models: &Models<S>, epoch: usize, f: Option<f64>) -> Self {
        Snapshot {
            epoch,
            f,
            generator: models.g_params.export(),
            discriminator: models.d_params.export(),
        }
    }
}

pub struct TrainOutcome<S: Scalar> {
    /// State after the last update.
    pub models: Models<S>,
    pub history: Vec<IterationMetrics>,
    pub evals: Vec<EvalPoint>,
    /// Snapshot at the best evaluation (initial state if never evaluated).
    pub best: Snapshot<S>,
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub stopped_early: bool,
}

impl<S: Scalar> TrainOutcome<S> {
    /// Rebuild the networks as of the best evaluation point.
    pub fn best_models(&self) -> Result<Models<S>> {
        let mut m = Models::init(self.models.config.clone(), 0)?;
        m.fill(&self.best.generator, &self.best.discriminator)?;
        Ok(m)
    }
}

struct PairScores {
    d_g: NodeId,
    d_s: NodeId,
    d_r: Option<NodeId>,
}

struct GStep {
    adv: Option<f64>,
    summ: f64,
}

struct DStep {
    l_d: f64,
    d_g: f64,
    d_s: f64,
    d_r: Option<f64>,
}

/// Owns the models, optimizer state, and random streams of one run.
pub struct Trainer<S: Scalar> {
    cfg: TrainConfig,
    pub models: Models<S>,
    opt_g: AdamState<S>,
    opt_d: AdamState<S>,
    rng_data: Rng,
    rng_dropout: Rng,
    rng_random: Rng,
    iteration: usize,
    epoch: usize,
}

impl<S: Scalar> Trainer<S> {
    pub fn new(cfg: TrainConfig) -> Result<Self> {
        cfg.validate()?;
        let models = Models::init(cfg.model.clone(), cfg.seed)?;
        let opt_g = AdamState::new(&models.g_params, cfg.lr_g);
        let opt_d = AdamState::new(&models.d_params, cfg.lr_d);
        Ok(Trainer {
            rng_data: Rng::substream(cfg.seed, streams::DATA),
            rng_dropout: Rng::substream(cfg.seed, streams::DROPOUT),
            rng_random: Rng::substream(cfg.seed, streams::RANDOM_SUMMARY),
            models,
            opt_g,
            opt_d,
            cfg,
            iteration: 0,
            epoch: 0,
        })
    }

    pub fn cfg(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Critic scores for the annotated, generated, and (in three-player
    /// mode) freshly drawn random summary, all masking the same encoded
    /// features and sharing one encoding of the video.
    fn critic_pairs(
        models: &Models<S>,
        tape: &mut Tape<S>,
        x: NodeId,
        features: NodeId,
        scores: NodeId,
        s_g: NodeId,
        three_player: bool,
        rng_random: &mut Rng,
        frozen: bool,
    ) -> PairScores {
        let d = &models.discriminator;
        let video_code = d.encode_video(tape, &models.d_params, x, frozen);
        let masked_s = masked_summary(tape, features, scores);
        let d_s = d.score_summary(tape, &models.d_params, video_code, masked_s, frozen);
        let masked_g = masked_summary(tape, features, s_g);
        let d_g = d.score_summary(tape, &models.d_params, video_code, masked_g, frozen);
        let d_r = three_player.then(|| {
            let t = tape.value(scores).rows();
            let mut col = vec![S::zero(); t];
            rng_random.fill_uniform(&mut col, 0.0, 1.0);
            let s_r = tape.constant(Tensor::from_vec(&[t, 1], col));
            let masked_r = masked_summary(tape, features, s_r);
            d.score_summary(tape, &models.d_params, video_code, masked_r, frozen)
        });
        PairScores { d_g, d_s, d_r }
    }

    /// One summarizer update: descend the adversarial spread plus (by
    /// default) the supervised distance, critic held constant.
    fn generator_step(&mut self, x: &Tensor<S>, s_g: &[S]) -> Result<GStep> {
        let mut tape = Tape::new(Mode::Train);
        let x_node = tape.constant(x.clone());
        let pass =
            self.models
                .generator
                .graph(&mut tape, &self.models.g_params, x_node, Some(&mut self.rng_dropout), false);
        let sg_node = tape.constant(Tensor::column(s_g));
        let summ_node = supervised_node(&mut tape, pass.scores, sg_node);

        let (total, adv_node) = if self.cfg.mode == AdversaryMode::GeneratorOnly {
            (summ_node, None)
        } else {
            let pairs = Self::critic_pairs(
                &self.models,
                &mut tape,
                x_node,
                pass.features,
                pass.scores,
                sg_node,
                self.cfg.mode == AdversaryMode::ThreePlayer,
                &mut self.rng_random,
                true,
            );
            let spread = spread_node(&mut tape, pairs.d_g, pairs.d_s, pairs.d_r, self.cfg.effective_tau());
            let total = if self.cfg.supervised {
                // The spread is a [1,1] score difference, the supervised
                // term a [1] reduction; sum flattens the former to match.
                let flat = tape.sum(spread);
                tape.add(flat, summ_node)
            } else {
                spread
            };
            (total, Some(spread))
        };

        tape.backward(total, &mut [&mut self.models.g_params])?;
        if let Some(cap) = self.cfg.clip_norm {
            let norm = self.models.g_params.global_grad_norm();
            if norm > cap {
                self.models.g_params.scale_grads(cap / norm);
            }
        }
        self.opt_g.step(&mut self.models.g_params)?;
        self.models.generator.commit_stats(&tape, &mut self.models.g_params, &pass);

        Ok(GStep {
            adv: adv_node.map(|n| tape.value(n).item().as_f64()),
            summ: tape.value(summ_node).item().as_f64(),
        })
    }

    /// One critic update: ascend the spread, summarizer held constant.
    fn discriminator_step(&mut self, x: &Tensor<S>, s_g: &[S]) -> Result<DStep> {
        let mut tape = Tape::new(Mode::Train);
        let x_node = tape.constant(x.clone());
        let pass =
            self.models
                .generator
                .graph(&mut tape, &self.models.g_params, x_node, Some(&mut self.rng_dropout), true);
        let sg_node = tape.constant(Tensor::column(s_g));
        let pairs = Self::critic_pairs(
            &self.models,
            &mut tape,
            x_node,
            pass.features,
            pass.scores,
            sg_node,
            self.cfg.mode == AdversaryMode::ThreePlayer,
            &mut self.rng_random,
            false,
        );
        let spread = spread_node(&mut tape, pairs.d_g, pairs.d_s, pairs.d_r, self.cfg.effective_tau());
        let l_d = tape.neg(spread);

        tape.backward(l_d, &mut [&mut self.models.d_params])?;
        if let Some(cap) = self.cfg.clip_norm {
            let norm = self.models.d_params.global_grad_norm();
            if norm > cap {
                self.models.d_params.scale_grads(cap / norm);
            }
        }
        self.opt_d.step(&mut self.models.d_params)?;

        Ok(DStep {
            l_d: tape.value(l_d).item().as_f64(),
            d_g: tape.value(pairs.d_g).item().as_f64(),
            d_s: tape.value(pairs.d_s).item().as_f64(),
            d_r: pairs.d_r.map(|n| tape.value(n).item().as_f64()),
        })
    }

    /// The configured number of summarizer steps, then critic steps, on one
    /// shot. Reported losses come from the last step of each kind.
    pub fn train_iteration(&mut self, features: &Tensor<S>, gt_scores: &[S]) -> Result<IterationMetrics> {
        if gt_scores.len() != features.rows() {
            return Err(Error::LengthMismatch {
                context: "shot scores vs features",
                len: gt_scores.len(),
                expected: features.rows(),
            });
        }
        let mut g = GStep { adv: None, summ: 0.0 };
        for _ in 0..self.cfg.g_steps_per_iter {
            g = self.generator_step(features, gt_scores)?;
        }
        let mut d = None;
        if self.cfg.mode != AdversaryMode::GeneratorOnly {
            for _ in 0..self.cfg.d_steps_per_iter {
                d = Some(self.discriminator_step(features, gt_scores)?);
            }
        }
        self.iteration += 1;
        let d = d.as_ref();
        Ok(IterationMetrics {
            iteration: self.iteration,
            epoch: self.epoch,
            l_d: d.map(|d| d.l_d),
            l_g_adv: g.adv,
            l_summ: g.summ,
            d_g: d.map(|d| d.d_g),
            d_s: d.map(|d| d.d_s),
            d_r: d.and_then(|d| d.d_r),
            val_f: None,
        })
    }
}

/// Mean F over the listed videos by whole-sequence inference; `None` for an
/// empty list.
fn mean_f<S: Scalar>(
    models: &Models<S>,
    dataset: &[Video<S>],
    ids: &[usize],
    eval: &EvalConfig,
) -> Result<Option<f64>> {
    if ids.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for &i in ids {
        let v = &dataset[i];
        let scores = models.generator.infer_scores(&models.g_params, &v.features)?;
        total += evaluate_video(&scores, &v.keyframes, &v.features, eval)?.f;
    }
    Ok(Some(total / ids.len() as f64))
}

/// The full loop: split, iterate epochs over shuffled training videos with
/// one shot each, periodically evaluate both splits, and keep the best
/// snapshot. Stops early once `target_train_f` is reached.
pub fn train<S: Scalar>(cfg: &TrainConfig, dataset: &[Video<S>]) -> Result<TrainOutcome<S>> {
    cfg.validate()?;
    for v in dataset {
        v.validate(cfg.model.in_dim)?;
    }
    let (train_ids, val_ids) = split_indices(dataset.len(), cfg.train_fraction, cfg.seed)?;
    let mut trainer = Trainer::new(cfg.clone())?;
    let mut history: Vec<IterationMetrics> = Vec::new();
    let mut evals: Vec<EvalPoint> = Vec::new();
    let mut best: Option<Snapshot<S>> = None;
    let mut best_key: Option<(f64, f64)> = None;
    let mut stopped_early = false;

    'epochs: for epoch in 0..cfg.epochs {
        trainer.epoch = epoch;
        let mut order = train_ids.clone();
        trainer.rng_data.shuffle(&mut order);
        for &vi in &order {
            let v = &dataset[vi];
            let range = sample_shot(v.features.rows(), cfg.shot_len, cfg.shot_overlap, &mut trainer.rng_data);
            let d = v.features.cols();
            let x = Tensor::from_vec(
                &[range.len(), d],
                v.features.data()[range.start * d..range.end * d].to_vec(),
            );
            let s_g = &v.gt_scores[range.clone()];
            history.push(trainer.train_iteration(&x, s_g)?);
        }

        let due = cfg.eval_every > 0 && (epoch + 1) % cfg.eval_every == 0;
        let last = epoch + 1 == cfg.epochs;
        if due || last {
            let train_f = mean_f(&trainer.models, dataset, &train_ids, &cfg.eval)?
                .expect("train split is non-empty");
            let val_f = mean_f(&trainer.models, dataset, &val_ids, &cfg.eval)?;
            if let Some(row) = history.last_mut() {
                row.val_f = val_f;
            }
            // Select on validation F when a validation split exists, falling
            // back to train F. Ties break toward higher train F so a flat
            // validation curve does not pin the snapshot to the first,
            // weakest evaluation.
            let selection = val_f.unwrap_or(train_f);
            if best_key.map_or(true, |k| (selection, train_f) > k) {
                best = Some(Snapshot::of(&trainer.models, epoch, Some(selection)));
                best_key = Some((selection, train_f));
            }
            evals.push(EvalPoint {
                epoch,
                iteration: trainer.iteration,
                train_f,
                val_f,
            });
            if cfg.target_train_f.is_some_and(|target| train_f >= target) {
                stopped_early = !last;
                break 'epochs;
            }
        }
    }

    let best = best.unwrap_or_else(|| Snapshot::of(&trainer.models, 0, None));
    Ok(TrainOutcome {
        models: trainer.models,
        history,
        evals,
        best,
        train_ids,
        val_ids,
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Two well-separated Gaussian blobs: a key block annotated 1 inside a
    /// background annotated 0, with one keyframe at the key block's center.
    fn planted_video(seed: u64, t: usize, d: usize, key: Range<usize>) -> Video<f64> {
        let mut rng = Rng::seeded(seed);
        let mut rows = Vec::with_capacity(t);
        for i in 0..t {
            let base = if key.contains(&i) { 4.0 } else { -4.0 };
            rows.push((0..d).map(|_| base + 0.1 * rng.normal()).collect::<Vec<f64>>());
        }
        let mut keyframes = vec![false; t];
        keyframes[(key.start + key.end) / 2] = true;
        Video {
            id: format!("toy-{seed}"),
            features: Tensor::from_rows(&rows),
            gt_scores: (0..t).map(|i| if key.contains(&i) { 1.0 } else { 0.0 }).collect(),
            keyframes,
        }
    }

    fn tiny_cfg(in_dim: usize) -> TrainConfig {
        let mut cfg = TrainConfig::new(in_dim);
        cfg.model.lstm_hidden = 3;
        cfg.model.enc_dim = 3;
        cfg.model.disc_hidden = 3;
        cfg.model.head_dims = [6, 5, 4];
        cfg.epochs = 3;
        cfg.eval_every = 2;
        cfg.eval.max_segments = Some(8);
        cfg.eval.lambda = Some(0.5);
        cfg
    }

    fn exports_equal(a: &[(String, Tensor<f64>)], b: &[(String, Tensor<f64>)]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|((an, at), (bn, bt))| {
                an == bn
                    && at.shape() == bt.shape()
                    && at.data().iter().zip(bt.data()).all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    #[test]
    fn shot_grid_spaces_windows_by_ninety_percent() {
        assert_eq!(shot_starts(1900, 1000, 0.1), vec![0, 900]);
        assert_eq!(shot_starts(2000, 1000, 0.1), vec![0, 900]);
        assert_eq!(shot_starts(2800, 1000, 0.1), vec![0, 900, 1800]);
        // Anything that fits in one shot is a single whole-video window.
        assert_eq!(shot_starts(500, 1000, 0.1), vec![0]);
        assert_eq!(shot_starts(1000, 1000, 0.1), vec![0]);
    }

    #[test]
    fn shot_sampling_is_seed_deterministic() {
        let mut a = Rng::seeded(9);
        let mut b = Rng::seeded(9);
        for _ in 0..20 {
            assert_eq!(sample_shot(1900, 1000, 0.1, &mut a), sample_shot(1900, 1000, 0.1, &mut b));
        }
        let r = sample_shot(500, 1000, 0.1, &mut a);
        assert_eq!(r, 0..500);
    }

    #[test]
    fn split_takes_ceil_of_the_fraction_and_partitions() {
        let (train, val) = split_indices(10, 0.8, 3).unwrap();
        assert_eq!(train.len(), 8);
        assert_eq!(val.len(), 2);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let again = split_indices(10, 0.8, 3).unwrap();
        assert_eq!(again, (train, val));
        assert_ne!(split_indices(10, 0.8, 4).unwrap().0, split_indices(10, 0.8, 3).unwrap().0);

        assert_eq!(split_indices(1, 0.8, 0).unwrap(), (vec![0], vec![]));
        assert!(split_indices(0, 0.8, 0).is_err());
    }

    #[test]
    fn updates_touch_only_their_own_network() {
        let v = planted_video(1, 24, 4, 8..12);
        let mut trainer = Trainer::<f64>::new(tiny_cfg(4)).unwrap();

        let d_before = trainer.models.d_params.export();
        let g_before = trainer.models.g_params.export();
        trainer.generator_step(&v.features, &v.gt_scores).unwrap();
        assert!(exports_equal(&d_before, &trainer.models.d_params.export()));
        assert!(!exports_equal(&g_before, &trainer.models.g_params.export()));

        let g_after = trainer.models.g_params.export();
        trainer.discriminator_step(&v.features, &v.gt_scores).unwrap();
        assert!(exports_equal(&g_after, &trainer.models.g_params.export()));
        assert!(!exports_equal(&d_before, &trainer.models.d_params.export()));
    }

    #[test]
    fn one_iteration_moves_the_generator_twice() {
        let v = planted_video(2, 24, 4, 8..12);
        let mut trainer = Trainer::<f64>::new(tiny_cfg(4)).unwrap();
        let before = trainer.models.g_params.export();
        let m = trainer.train_iteration(&v.features, &v.gt_scores).unwrap();
        assert!(!exports_equal(&before, &trainer.models.g_params.export()));
        assert_eq!(m.iteration, 1);
        assert!(m.l_d.is_some() && m.d_r.is_some());
        assert!(m.l_summ.is_finite());
    }

    #[test]
    fn generator_only_mode_never_builds_the_critic() {
        let v = planted_video(3, 24, 4, 8..12);
        let mut cfg = tiny_cfg(4);
        cfg.mode = AdversaryMode::GeneratorOnly;
        let mut trainer = Trainer::<f64>::new(cfg).unwrap();
        let d_before = trainer.models.d_params.export();
        let m = trainer.train_iteration(&v.features, &v.gt_scores).unwrap();
        assert!(exports_equal(&d_before, &trainer.models.d_params.export()));
        assert_eq!((m.l_d, m.l_g_adv, m.d_g, m.d_s, m.d_r), (None, None, None, None, None));
        assert!(m.l_summ > 0.0);
    }

    #[test]
    fn two_player_mode_drops_the_random_pair() {
        let v = planted_video(4, 24, 4, 8..12);
        let mut cfg = tiny_cfg(4);
        cfg.mode = AdversaryMode::TwoPlayer;
        let mut trainer = Trainer::<f64>::new(cfg).unwrap();
        let m = trainer.train_iteration(&v.features, &v.gt_scores).unwrap();
        assert!(m.l_d.is_some() && m.d_g.is_some() && m.d_s.is_some());
        assert_eq!(m.d_r, None);
        // Two-player spread is d_g - d_s exactly.
        let (d_g, d_s) = (m.d_g.unwrap(), m.d_s.unwrap());
        assert_eq!(m.l_d.unwrap(), -(d_g - d_s));
    }

    #[test]
    fn critic_learns_to_favor_the_annotated_summary() {
        let v = planted_video(5, 30, 4, 10..15);
        let mut cfg = tiny_cfg(4);
        cfg.seed = 11;
        let mut trainer = Trainer::<f64>::new(cfg).unwrap();
        let mut gaps = Vec::new();
        for _ in 0..200 {
            let m = trainer.train_iteration(&v.features, &v.gt_scores).unwrap();
            gaps.push(m.d_g.unwrap() - m.d_s.unwrap());
        }
        let tail = &gaps[150..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(mean > 0.0, "mean d_g - d_s over final 50 iterations = {mean}");
    }

    #[test]
    fn identical_seeds_reproduce_the_whole_run() {
        let dataset: Vec<Video<f64>> =
            (0..3).map(|s| planted_video(s, 26 + 2 * s as usize, 4, 9..13)).collect();
        let cfg = tiny_cfg(4);
        let a = train(&cfg, &dataset).unwrap();
        let b = train(&cfg, &dataset).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.evals, b.evals);
        assert!(exports_equal(&a.models.g_params.export(), &b.models.g_params.export()));
        assert!(exports_equal(&a.models.d_params.export(), &b.models.d_params.export()));
        assert!(!a.history.is_empty());
        assert!(!a.evals.is_empty());

        let mut other = tiny_cfg(4);
        other.seed = 99;
        let c = train(&other, &dataset).unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn zero_epochs_returns_the_initialized_model() {
        let dataset = vec![planted_video(7, 24, 4, 8..12)];
        let mut cfg = tiny_cfg(4);
        cfg.epochs = 0;
        let out = train(&cfg, &dataset).unwrap();
        assert!(out.history.is_empty());
        assert!(out.evals.is_empty());
        assert_eq!(out.best.f, None);
        let fresh = Models::<f64>::init(cfg.model.clone(), cfg.seed).unwrap();
        assert!(exports_equal(&out.models.g_params.export(), &fresh.g_params.export()));
        assert!(exports_equal(&out.models.d_params.export(), &fresh.d_params.export()));
    }

    #[test]
    fn snapshot_restores_into_equal_models() {
        let dataset = vec![planted_video(8, 24, 4, 8..12), planted_video(9, 28, 4, 10..14)];
        let mut cfg = tiny_cfg(4);
        cfg.epochs = 2;
        cfg.eval_every = 1;
        let out = train(&cfg, &dataset).unwrap();
        let restored = out.best_models().unwrap();
        assert!(exports_equal(&restored.g_params.export(), &out.best.generator));
        assert!(exports_equal(&restored.d_params.export(), &out.best.discriminator));

        // Same scores from the snapshot as from the live models it copied.
        let snap = train(&cfg, &dataset).unwrap();
        let live = snap.models.generator.infer_scores(&snap.models.g_params, &dataset[0].features).unwrap();
        let best = snap.best_models().unwrap();
        let from_best = best.generator.infer_scores(&best.g_params, &dataset[0].features).unwrap();
        // Best snapshot came from the final epoch here (monotone or not, it
        // must at least be *a* valid state producing finite scores).
        assert!(from_best.iter().all(|s| s.is_finite()));
        assert_eq!(live.len(), from_best.len());
    }

    #[test]
    fn flat_validation_curve_still_tracks_training_progress() {
        // A validation video with no keyframes scores F = 0 under every
        // model state, so selection ties at every eval and only the train-F
        // tie-break can move the snapshot off the first (weakest) state.
        let mut cfg = tiny_cfg(4);
        cfg.mode = AdversaryMode::GeneratorOnly;
        cfg.train_fraction = 0.75;
        cfg.lr_g = 2e-4;
        cfg.epochs = 20;
        cfg.eval_every = 1;
        cfg.seed = 5;
        let (_, val_ids) = split_indices(4, cfg.train_fraction, cfg.seed).unwrap();
        // Each video carries two budget-sized feature blocks: a decoy at
        // 2..6 and the annotated block at 8..12. Only one fits the 15%
        // budget, so the prediction is right exactly when the scorer ranks
        // the annotated block above the decoy — something the fresh
        // initialization has no reason to do and training has to learn.
        let decoy_video = |seed: u64, t: usize| -> Video<f64> {
            let mut rng = Rng::seeded(seed);
            let key = 8..12usize;
            let rows: Vec<Vec<f64>> = (0..t)
                .map(|i| {
                    let base = if (2..6).contains(&i) || key.contains(&i) { 4.0 } else { -4.0 };
                    (0..4).map(|_| base + 0.1 * rng.normal()).collect()
                })
                .collect();
            let mut keyframes = vec![false; t];
            keyframes[10] = true;
            Video {
                id: format!("decoy-{seed}"),
                features: Tensor::from_rows(&rows),
                gt_scores: (0..t).map(|i| if key.contains(&i) { 1.0 } else { 0.0 }).collect(),
                keyframes,
            }
        };
        let mut dataset: Vec<Video<f64>> =
            (0..4).map(|s| decoy_video(40 + s, 28 + 2 * s as usize)).collect();
        for &vi in &val_ids {
            dataset[vi].keyframes.iter_mut().for_each(|k| *k = false);
        }

        let out = train(&cfg, &dataset).unwrap();
        assert!(out.evals.len() >= 2);
        assert!(out.evals.iter().all(|e| e.val_f == Some(0.0)), "val curve not flat");
        let first = &out.evals[0];
        let want = out
            .evals
            .iter()
            .fold(None::<&EvalPoint>, |acc, e| match acc {
                Some(b) if (e.val_f.unwrap(), e.train_f) <= (b.val_f.unwrap(), b.train_f) => acc,
                _ => Some(e),
            })
            .unwrap();
        let curve: Vec<f64> = out.evals.iter().map(|e| e.train_f).collect();
        assert!(
            want.train_f > first.train_f,
            "train F never improved past the first eval: {curve:?}"
        );
        assert_eq!(out.best.epoch, want.epoch);
        assert_eq!(out.best.f, want.val_f);
    }

    #[test]
    fn import_rejects_wrong_names_and_shapes() {
        let a = Models::<f64>::init(ModelConfig::new(4), 1).unwrap();
        let mut b = Models::<f64>::init(ModelConfig::new(4), 2).unwrap();
        b.fill(&a.g_params.export(), &a.d_params.export()).unwrap();
        assert!(exports_equal(&b.g_params.export(), &a.g_params.export()));

        let mut renamed = a.g_params.export();
        renamed[0].0 = "generator/no-such-tensor".into();
        assert!(matches!(
            b.g_params.import(&renamed),
            Err(Error::BadManifest(_))
        ));

        let mut reshaped = a.g_params.export();
        reshaped[0].1 = Tensor::zeros(&[1, 1]);
        assert!(matches!(
            b.g_params.import(&reshaped),
            Err(Error::CheckpointShape { .. })
        ));

        let truncated = a.g_params.export()[1..].to_vec();
        assert!(matches!(
            b.g_params.import(&truncated),
            Err(Error::BadManifest(_))
        ));
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let mut cfg = TrainConfig::new(4);
        cfg.tau = 1.5;
        assert!(cfg.validate().is_err());

        let mut cfg = TrainConfig::new(4);
        cfg.shot_overlap = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = TrainConfig::new(4);
        cfg.lr_d = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = TrainConfig::new(4);
        cfg.mode = AdversaryMode::GeneratorOnly;
        cfg.supervised = false;
        assert!(cfg.validate().is_err());

        assert!(TrainConfig::new(4).validate().is_ok());
    }
}
