//! Adversarial and supervised objectives.
//!
//! The critic emits three scores per video: `d_g` for the annotated summary,
//! `d_s` for the generated one, `d_r` for a random one. The shared quantity
//! is the spread `d_g - (tau * d_s + (1 - tau) * d_r)`: the critic climbs it
//! (its loss is the negation), the summarizer descends it (pushing its own
//! summary's score up), and on top of that the summarizer pays a supervised
//! squared distance between its scores and the annotation.

use crate::error::Result;
use crate::numerics::scalar::sc;
use crate::numerics::{NodeId, Scalar, Tape};

/// `d_g - (tau * d_s + (1 - tau) * d_r)`. The critic wants this large, the
/// summarizer wants it small.
pub fn adversarial_spread<S: Scalar>(d_g: S, d_s: S, d_r: S, tau: f64) -> S {
    let fake = sc::<S>(tau) * d_s + sc::<S>(1.0 - tau) * d_r;
    d_g - fake
}

/// What the summarizer minimizes adversarially: the spread itself.
pub fn generator_adversarial_loss<S: Scalar>(d_g: S, d_s: S, d_r: S, tau: f64) -> S {
    adversarial_spread(d_g, d_s, d_r, tau)
}

/// What the critic minimizes: the negated spread, so that gradient descent
/// on it maximizes the spread.
pub fn discriminator_loss<S: Scalar>(d_g: S, d_s: S, d_r: S, tau: f64) -> S {
    -adversarial_spread(d_g, d_s, d_r, tau)
}

/// Squared distance between generated and annotated per-frame scores,
/// summed over frames.
pub fn supervised_loss<S: Scalar>(s_s: &[S], s_g: &[S]) -> Result<S> {
    if s_s.len() != s_g.len() {
        return Err(crate::Error::LengthMismatch {
            context: "supervised loss scores",
            len: s_s.len(),
            expected: s_g.len(),
        });
    }
    Ok(s_s.iter().zip(s_g).map(|(&a, &b)| (a - b) * (a - b)).sum())
}

/// The summarizer's full objective: adversarial part plus supervised part,
/// unweighted.
pub fn generator_total_loss<S: Scalar>(adv: S, summ: S) -> S {
    adv + summ
}

/// Graph version of the spread over `[1,1]` score nodes. `d_r` is absent in
/// the two-player configuration, where the random pair is dropped and `tau`
/// is forced to one.
pub fn spread_node<S: Scalar>(tape: &mut Tape<S>, d_g: NodeId, d_s: NodeId, d_r: Option<NodeId>, tau: f64) -> NodeId {
    let fake = match d_r {
        Some(d_r) => {
            let a = tape.scale_const(d_s, sc(tau));
            let b = tape.scale_const(d_r, sc(1.0 - tau));
            tape.add(a, b)
        }
        None => tape.scale_const(d_s, sc(tau)),
    };
    tape.sub(d_g, fake)
}

/// Graph version of the supervised loss over `[T,1]` score nodes.
pub fn supervised_node<S: Scalar>(tape: &mut Tape<S>, s_s: NodeId, s_g: NodeId) -> NodeId {
    let diff = tape.sub(s_s, s_g);
    tape.sum_sq(diff)
}
