use serde::{Deserialize, Serialize};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// Moment estimates; saved in checkpoints so a resumed run continues exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

/// Adaptive-moment gradient descent with a constant learning rate.
#[derive(Debug, Clone)]
pub struct Adam {
    state: AdamState,
    lr: f64,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            state: AdamState {
                m: vec![0.0; len],
                v: vec![0.0; len],
                t: 0,
            },
            lr,
        }
    }

    pub fn from_state(state: AdamState, lr: f64) -> Self {
        Self { state, lr }
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    /// One descent step on `params` along `grad`.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        let s = &mut self.state;
        s.t += 1;
        let bc1 = 1.0 - BETA1.powf(s.t as f64);
        let bc2 = 1.0 - BETA2.powf(s.t as f64);
        let step = self.lr * bc2.sqrt() / bc1;
        for (((p, g), m), v) in params.iter_mut().zip(grad).zip(&mut s.m).zip(&mut s.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= step * *m / (v.sqrt() + EPS * bc2.sqrt());
        }
    }
}
