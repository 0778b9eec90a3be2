//! AdaM first-order optimizer.
//!
//! Both trainers drive their parameters with bias-corrected AdaM. The state
//! always minimizes; callers maximizing an objective negate the gradient
//! before stepping. State serializes so a training run can be checkpointed
//! and resumed bit-for-bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AdamState {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    /// Standard coefficients: beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    pub fn new(dim: usize, lr: f64) -> Result<Self> {
        Self::with_coefficients(dim, lr, 0.9, 0.999, 1e-8)
    }

    pub fn with_coefficients(dim: usize, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Result<Self> {
        if !(lr > 0.0 && lr.is_finite()) {
            return Err(Error::Argument(format!("learning rate must be positive, got {}", lr)));
        }
        if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
            return Err(Error::Argument("beta coefficients must lie in [0, 1)".into()));
        }
        if !(epsilon > 0.0) {
            return Err(Error::Argument("epsilon must be positive".into()));
        }
        Ok(AdamState {
            lr,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: vec![0.0; dim],
            v: vec![0.0; dim],
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    /// One descent update of `params` in place with gradient `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grad.len() != self.m.len() {
            return Err(Error::Argument(format!(
                "adam state has {} dims, got params {} and grad {}",
                self.m.len(),
                params.len(),
                grad.len()
            )));
        }
        for (i, &g) in grad.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::NonFinite(format!("gradient[{}] = {} in adam step {}", i, g, self.t + 1)));
            }
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_moves_by_nearly_lr_against_gradient() {
        // With zero state, m_hat = g and v_hat = g^2, so the update is
        // lr * sign(g) up to the epsilon regularizer.
        let mut adam = AdamState::new(1, 0.001).unwrap();
        let mut params = vec![0.0];
        adam.step(&mut params, &[1.0]).unwrap();
        assert_relative_eq!(params[0], -0.001, max_relative = 1e-7);
        assert_eq!(adam.steps_taken(), 1);
    }

    #[test]
    fn minimizes_a_quadratic() {
        let mut adam = AdamState::new(1, 0.05).unwrap();
        let mut params = vec![3.0];
        for _ in 0..2000 {
            let grad = vec![2.0 * (params[0] - 1.0)];
            adam.step(&mut params, &grad).unwrap();
        }
        assert!((params[0] - 1.0).abs() < 1e-3, "ended at {}", params[0]);
    }

    #[test]
    fn per_index_update_magnitude_bounded_by_lr_scale() {
        // AdaM normalizes by the root second moment, so a single step never
        // travels much more than lr per coordinate.
        let mut adam = AdamState::new(3, 0.01).unwrap();
        let mut params = vec![0.0, 0.0, 0.0];
        for k in 0..50 {
            let grad = vec![1e6, -1e-3, (k as f64 - 25.0)];
            let before = params.clone();
            adam.step(&mut params, &grad).unwrap();
            for (b, a) in before.iter().zip(&params) {
                assert!((a - b).abs() <= 0.011, "step moved {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn rejects_non_finite_gradient_with_index() {
        let mut adam = AdamState::new(2, 0.01).unwrap();
        let mut params = vec![0.0, 0.0];
        let err = adam.step(&mut params, &[0.0, f64::NAN]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gradient[1]"), "message was {:?}", msg);
        // A failed step must leave state untouched.
        assert_eq!(adam.steps_taken(), 0);
        assert_eq!(params, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_shape_mismatch() {
        let mut adam = AdamState::new(2, 0.01).unwrap();
        let mut params = vec![0.0];
        assert!(adam.step(&mut params, &[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(AdamState::new(1, 0.0).is_err());
        assert!(AdamState::new(1, f64::INFINITY).is_err());
        assert!(AdamState::with_coefficients(1, 0.1, 1.0, 0.999, 1e-8).is_err());
        assert!(AdamState::with_coefficients(1, 0.1, 0.9, 0.999, 0.0).is_err());
    }

    #[test]
    fn state_serializes_and_resumes_identically() {
        let mut a = AdamState::new(2, 0.02).unwrap();
        let mut pa = vec![1.0, -1.0];
        for k in 0..10 {
            a.step(&mut pa, &[0.3 * k as f64, -0.1]).unwrap();
        }
        let text = serde_json::to_string(&a).unwrap();
        let mut b: AdamState = serde_json::from_str(&text).unwrap();
        let mut pb = pa.clone();
        for k in 10..20 {
            a.step(&mut pa, &[0.3 * k as f64, -0.1]).unwrap();
            b.step(&mut pb, &[0.3 * k as f64, -0.1]).unwrap();
        }
        assert_eq!(pa, pb);
    }
}
