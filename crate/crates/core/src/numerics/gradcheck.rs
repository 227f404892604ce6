use std::fmt;

use crate::error::{Error, Result};

use super::param::ParamSet;
use super::scalar::{sc, Scalar};

/// Settings for [`grad_check`]. The step size is clamped to a sane window:
/// below 1e-7 central differences drown in rounding error, above 1e-3 the
/// truncation term dominates.
#[derive(Clone, Copy, Debug)]
pub struct GradCheckConfig {
    pub eps: f64,
    pub tol: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig { eps: 1e-5, tol: 1e-4 }
    }
}

impl GradCheckConfig {
    fn validate(&self) -> Result<()> {
        if !(1e-7..=1e-3).contains(&self.eps) {
            return Err(Error::InvalidConfig(format!(
                "gradient-check step {} outside [1e-7, 1e-3]",
                self.eps
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!("gradient-check tolerance {} must be positive", self.tol)));
        }
        Ok(())
    }
}

/// What one loss evaluation reports back to the checker.
pub struct RunOutcome<S> {
    pub loss: S,
    /// Whether the graph sampled any randomness (live dropout). Stochastic
    /// graphs are rejected — finite differences on them are meaningless.
    pub stochastic: bool,
}

/// Verdict for a single parameter tensor.
#[derive(Clone, Debug)]
pub struct ParamCheck {
    pub name: String,
    /// `|analytic - numeric| / max(1, |analytic|, |numeric|)`, worst component.
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub eps: f64,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        self.params.iter().all(|p| p.max_rel_err <= self.tol)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ParamCheck> {
        self.params.iter().filter(|p| p.max_rel_err > self.tol)
    }

    /// The single worst parameter, by relative error.
    pub fn worst(&self) -> Option<&ParamCheck> {
        self.params
            .iter()
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
    }

    /// `Ok(())` if everything passed, otherwise an error naming the worst
    /// offending parameter.
    pub fn ensure_pass(&self) -> Result<()> {
        if self.pass() {
            return Ok(());
        }
        let worst = self.worst().expect("non-passing report has entries");
        Err(Error::GradCheckFailed {
            param: worst.name.clone(),
            index: worst.worst_index,
            rel_err: worst.max_rel_err,
            tol: self.tol,
        })
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.params.iter().map(|p| p.name.len()).max().unwrap_or(5).max(5);
        writeln!(f, "{:width$}  {:>12}  {:>14}  {:>14}  verdict", "param", "max rel err", "analytic", "numeric")?;
        for p in &self.params {
            writeln!(
                f,
                "{:width$}  {:>12.3e}  {:>14.6e}  {:>14.6e}  {}",
                p.name,
                p.max_rel_err,
                p.analytic,
                p.numeric,
                if p.max_rel_err <= self.tol { "ok" } else { "FAIL" }
            )?;
        }
        write!(f, "step {:.1e}, tolerance {:.1e}: {}", self.eps, self.tol, if self.pass() { "PASS" } else { "FAIL" })
    }
}

/// Central-difference audit of every parameter gradient in one model.
///
/// `run` must build the loss graph from scratch, run the backward sweep into
/// the set returned by `params_of`, and report the loss — i.e. it is the same
/// closure a training step would use. The checker first verifies the graph is
/// deterministic (two forward passes, bitwise-equal losses, no sampled
/// randomness), then compares the analytic gradient of every scalar component
/// against `(loss(x + eps) - loss(x - eps)) / 2 eps`.
pub fn grad_check<S: Scalar, M>(
    cfg: &GradCheckConfig,
    model: &mut M,
    mut params_of: impl FnMut(&mut M) -> &mut ParamSet<S>,
    mut run: impl FnMut(&mut M) -> Result<RunOutcome<S>>,
) -> Result<GradCheckReport> {
    cfg.validate()?;

    // Analytic pass.
    params_of(model).zero_grads();
    let first = run(model)?;
    if first.stochastic {
        return Err(Error::StochasticGraph);
    }
    let ids = params_of(model).ids();
    let analytic: Vec<_> = ids.iter().map(|&id| params_of(model).grad(id).clone()).collect();

    // Determinism probe: an accidentally time- or state-dependent graph makes
    // finite differences lie, so catch it up front.
    params_of(model).zero_grads();
    let second = run(model)?;
    if second.loss != first.loss {
        return Err(Error::NondeterministicGraph {
            first: first.loss.as_f64(),
            second: second.loss.as_f64(),
        });
    }

    let mut checks = Vec::with_capacity(ids.len());
    for (slot, &id) in ids.iter().enumerate() {
        let name = params_of(model).name(id).to_string();
        let n = params_of(model).value(id).len();
        let mut worst = ParamCheck {
            name,
            max_rel_err: 0.0,
            worst_index: 0,
            analytic: analytic[slot].data().first().map(|v| v.as_f64()).unwrap_or(0.0),
            numeric: 0.0,
        };
        for i in 0..n {
            let original = params_of(model).value(id).data()[i];
            let x = original.as_f64();

            params_of(model).value_mut(id).data_mut()[i] = sc(x + cfg.eps);
            let loss_plus = run(model)?.loss.as_f64();
            params_of(model).value_mut(id).data_mut()[i] = sc(x - cfg.eps);
            let loss_minus = run(model)?.loss.as_f64();
            params_of(model).value_mut(id).data_mut()[i] = original;

            let numeric = (loss_plus - loss_minus) / (2.0 * cfg.eps);
            let exact = analytic[slot].data()[i].as_f64();
            let rel = (exact - numeric).abs() / 1.0f64.max(exact.abs()).max(numeric.abs());
            if rel > worst.max_rel_err || i == 0 {
                worst.max_rel_err = rel;
                worst.worst_index = i;
                worst.analytic = exact;
                worst.numeric = numeric;
            }
        }
        checks.push(worst);
    }

    params_of(model).zero_grads();
    Ok(GradCheckReport {
        params: checks,
        eps: cfg.eps,
        tol: cfg.tol,
    })
}
