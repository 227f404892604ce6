//! Full-model gradient audit.
//!
//! Rebuilds each training objective as a deterministic graph — dropout
//! disabled, the random summary drawn once and frozen — and runs the
//! central-difference checker over every parameter the objective trains:
//! the discriminator under the critic loss, the generator under the
//! adversarial, supervised, and combined losses. Gradients still flow
//! through the frozen opponent's operations, exactly as in training.

use crate::discriminator::masked_summary;
use crate::error::{Error, Result};
use crate::loss::{spread_node, supervised_node};
use crate::numerics::gradcheck::{grad_check, GradCheckConfig, GradCheckReport, RunOutcome};
use crate::numerics::rng::streams;
use crate::numerics::{Mode, NodeId, Rng, Scalar, Tape, Tensor};
use crate::training::{ModelConfig, Models};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Objective {
    Critic,
    Adversarial,
    Supervised,
    Combined,
}

impl Objective {
    const ALL: [Objective; 4] = [
        Objective::Critic,
        Objective::Adversarial,
        Objective::Supervised,
        Objective::Combined,
    ];

    fn name(self) -> &'static str {
        match self {
            Objective::Critic => "critic",
            Objective::Adversarial => "adversarial",
            Objective::Supervised => "supervised",
            Objective::Combined => "combined",
        }
    }
}

struct Setup<S: Scalar> {
    models: Models<S>,
    x: Tensor<S>,
    s_g: Tensor<S>,
    s_r: Tensor<S>,
    tau: f64,
}

fn build_loss<S: Scalar>(setup: &Setup<S>, tape: &mut Tape<S>, objective: Objective) -> NodeId {
    let g_frozen = objective == Objective::Critic;
    let x = tape.constant(setup.x.clone());
    let pass = setup.models.generator.graph(tape, &setup.models.g_params, x, None, g_frozen);
    let s_g = tape.constant(setup.s_g.clone());
    if objective == Objective::Supervised {
        return supervised_node(tape, pass.scores, s_g);
    }

    let d = &setup.models.discriminator;
    let dp = &setup.models.d_params;
    let d_frozen = !g_frozen;
    let video = d.encode_video(tape, dp, x, d_frozen);
    let m_g = masked_summary(tape, pass.features, s_g);
    let d_g = d.score_summary(tape, dp, video, m_g, d_frozen);
    let m_s = masked_summary(tape, pass.features, pass.scores);
    let d_s = d.score_summary(tape, dp, video, m_s, d_frozen);
    let s_r = tape.constant(setup.s_r.clone());
    let m_r = masked_summary(tape, pass.features, s_r);
    let d_r = d.score_summary(tape, dp, video, m_r, d_frozen);
    let spread = spread_node(tape, d_g, d_s, Some(d_r), setup.tau);

    match objective {
        Objective::Critic => tape.neg(spread),
        Objective::Adversarial => spread,
        Objective::Combined => {
            let flat = tape.sum(spread);
            let summ = supervised_node(tape, pass.scores, s_g);
            tape.add(flat, summ)
        }
        Objective::Supervised => unreachable!("handled above"),
    }
}

/// Audit every objective at the given clip length. Returns one report per
/// objective, in the order critic, adversarial, supervised, combined.
pub fn audit_gradients<S: Scalar>(
    model: ModelConfig,
    t: usize,
    tau: f64,
    seed: u64,
    check: &GradCheckConfig,
) -> Result<Vec<(&'static str, GradCheckReport)>> {
    model.validate()?;
    if model.dropout != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "gradient audit needs dropout disabled, got rate {}",
            model.dropout
        )));
    }
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidConfig(format!("tau {tau} outside [0, 1]")));
    }
    if t == 0 {
        return Err(Error::InvalidConfig("audit clip needs at least one frame".into()));
    }

    let models = Models::<S>::init(model, seed)?;
    let mut rng = Rng::substream(seed, streams::GRADCHECK);
    let mut x = Tensor::zeros(&[t, models.config.in_dim]);
    rng.fill_uniform(x.data_mut(), -1.0, 1.0);
    let mut s_g = Tensor::zeros(&[t, 1]);
    rng.fill_uniform(s_g.data_mut(), 0.0, 1.0);
    let mut s_r = Tensor::zeros(&[t, 1]);
    rng.fill_uniform(s_r.data_mut(), 0.0, 1.0);
    let mut setup = Setup { models, x, s_g, s_r, tau };

    let mut reports = Vec::with_capacity(Objective::ALL.len());
    for objective in Objective::ALL {
        let report = grad_check(
            check,
            &mut setup,
            |s| {
                if objective == Objective::Critic {
                    &mut s.models.d_params
                } else {
                    &mut s.models.g_params
                }
            },
            |s| {
                let mut tape = Tape::new(Mode::Train);
                let loss = build_loss(s, &mut tape, objective);
                let sink = if objective == Objective::Critic {
                    &mut s.models.d_params
                } else {
                    &mut s.models.g_params
                };
                let l = tape.backward(loss, &mut [sink])?;
                Ok(RunOutcome {
                    loss: l,
                    stochastic: tape.is_stochastic(),
                })
            },
        )?;
        reports.push((objective.name(), report));
    }
    Ok(reports)
}

/// The audit's reference model: every width 4, dropout off.
pub fn reference_model(in_dim: usize) -> ModelConfig {
    let mut model = ModelConfig::new(in_dim);
    model.lstm_hidden = 4;
    model.enc_dim = 4;
    model.disc_hidden = 4;
    model.head_dims = [8, 6, 4];
    model.dropout = 0.0;
    model
}
