use crate::error::{Error, Result};

use super::param::ParamSet;
use super::scalar::{sc, Scalar};
use super::tensor::Tensor;

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Adam with bias correction. One state instance per [`ParamSet`]; moment
/// tensors line up with the set's registration order.
pub struct AdamState<S> {
    lr: f64,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
    t: u64,
}

impl<S: Scalar> AdamState<S> {
    pub fn new(params: &ParamSet<S>, lr: f64) -> Self {
        assert!(lr > 0.0 && lr.is_finite(), "learning rate {lr} must be positive");
        let shapes: Vec<_> = params.iter().map(|(_, v, _)| v.shape().to_vec()).collect();
        AdamState {
            lr,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            t: 0,
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// Steps since construction.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// One update over every parameter in the set, consuming the gradients
    /// (they are zeroed afterwards). Refuses to run if no backward pass has
    /// populated gradients since the last step.
    pub fn step(&mut self, params: &mut ParamSet<S>) -> Result<()> {
        assert_eq!(params.len(), self.m.len(), "optimizer built for a different parameter set");
        if !params.take_grads_fresh() {
            return Err(Error::MissingGradients);
        }
        self.t += 1;
        let t = self.t as i32;
        let bc1 = sc::<S>(1.0 - BETA1.powi(t));
        let bc2 = sc::<S>(1.0 - BETA2.powi(t));
        let (b1, b2) = (sc::<S>(BETA1), sc::<S>(BETA2));
        let (one_m_b1, one_m_b2) = (sc::<S>(1.0 - BETA1), sc::<S>(1.0 - BETA2));
        let (lr, eps) = (sc::<S>(self.lr), sc::<S>(EPS));

        for (idx, id) in params.ids().into_iter().enumerate() {
            // Split borrows: read grad into the moment buffers, then update the value.
            let grad = params.grad(id).clone();
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for ((mi, vi), &g) in m.data_mut().iter_mut().zip(v.data_mut()).zip(grad.data()) {
                *mi = b1 * *mi + one_m_b1 * g;
                *vi = b2 * *vi + one_m_b2 * g * g;
            }
            let value = params.value_mut(id);
            for ((x, &mi), &vi) in value.data_mut().iter_mut().zip(m.data()).zip(v.data()) {
                let m_hat = mi / bc1;
                let v_hat = vi / bc2;
                *x = *x - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        params.zero_grads();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Plain-scalar Adam, written independently of the tensor version, used
    /// as the oracle below.
    fn reference_adam(grads: &[f64], lr: f64, x0: f64) -> f64 {
        let (mut x, mut m, mut v) = (x0, 0.0, 0.0);
        for (step, &g) in grads.iter().enumerate() {
            let t = (step + 1) as i32;
            m = BETA1 * m + (1.0 - BETA1) * g;
            v = BETA2 * v + (1.0 - BETA2) * g * g;
            let m_hat = m / (1.0 - BETA1.powi(t));
            let v_hat = v / (1.0 - BETA2.powi(t));
            x -= lr * m_hat / (v_hat.sqrt() + EPS);
        }
        x
    }

    fn run_with_grads(grads: &[f64], lr: f64, x0: f64) -> f64 {
        let mut params = ParamSet::new();
        let id = params.register("x", Tensor::scalar(x0));
        let mut opt = AdamState::new(&params, lr);
        for &g in grads {
            *params.grad_mut(id) = Tensor::scalar(g);
            params.mark_grads_fresh();
            opt.step(&mut params).unwrap();
        }
        params.value(id).item()
    }

    #[test]
    fn first_step_magnitude_is_the_learning_rate() {
        let x = run_with_grads(&[1.0], 0.01, 0.0);
        // bias correction makes m_hat = g, v_hat = g^2, so the move is
        // lr * g / (|g| + eps) = -lr up to eps.
        assert!((x + 0.01).abs() < 1e-9, "first step moved to {x}, expected about -0.01");
    }

    #[test]
    fn matches_scalar_reference_over_a_noisy_run() {
        let grads: Vec<f64> = (0..200).map(|i| ((i * 37 % 17) as f64 - 8.0) / 3.0).collect();
        let ours = run_with_grads(&grads, 3e-3, 1.25);
        let oracle = reference_adam(&grads, 3e-3, 1.25);
        assert_eq!(ours, oracle, "tensor Adam diverged from the scalar reference");
    }

    #[test]
    fn zero_gradient_from_clean_state_moves_nothing() {
        let x = run_with_grads(&[0.0], 0.1, 5.0);
        assert_eq!(x, 5.0);
    }

    #[test]
    fn gradients_are_zeroed_after_a_step() {
        let mut params = ParamSet::new();
        let id = params.register("x", Tensor::scalar(0.0f64));
        let mut opt = AdamState::new(&params, 0.01);
        *params.grad_mut(id) = Tensor::scalar(2.0);
        params.mark_grads_fresh();
        opt.step(&mut params).unwrap();
        assert_eq!(params.grad(id).item(), 0.0);
        assert!(!params.grads_fresh());
    }

    #[test]
    fn step_without_fresh_gradients_is_refused() {
        let mut params = ParamSet::<f64>::new();
        params.register("x", Tensor::scalar(0.0));
        let mut opt = AdamState::new(&params, 0.01);
        match opt.step(&mut params) {
            Err(Error::MissingGradients) => {}
            other => panic!("expected MissingGradients, got {other:?}"),
        }
    }
}
