//! Shared feed-forward stochastic policy.
//!
//! Two hidden ReLU layers feed a linear head giving the mean of a diagonal
//! Gaussian over normalized actions; the per-dimension log standard
//! deviation is a free parameter. A separate trunk of the same shape
//! estimates the state value. All trainable numbers live in one flat vector
//! so the optimizer and the checkpoint format see a single array.
//!
//! Inputs are divided by fixed per-feature scales and sampled actions are
//! multiplied by fixed per-dimension scales before clipping; both scale
//! vectors are part of the parameters but are never trained.

use std::f64::consts::PI;
use std::ops::Range;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::{AgentAction, Dimension};
use crate::error::{Error, Result};
use crate::sensing::{observation_width, ObservationVector};
use crate::Vec3;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Architecture and scaling choices for a new policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub hidden: usize,
    pub initial_log_std: f64,
    /// Physical yaw rate (1/s) of a unit normalized yaw action.
    pub yaw_rate_scale: f64,
    /// Return magnitude of a unit value-head output.
    pub value_scale: f64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            hidden: 64,
            initial_log_std: -0.5,
            yaw_rate_scale: 0.1,
            value_scale: 1000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input: usize,
    pub hidden: usize,
    pub action: usize,
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    weights: (usize, usize),
    bias: usize,
    rows: usize,
    cols: usize,
}

impl Dense {
    fn w(&self) -> Range<usize> {
        self.weights.0..self.weights.1
    }

    fn b(&self) -> Range<usize> {
        self.bias..self.bias + self.rows
    }
}

#[derive(Debug, Clone, Copy)]
struct Layout {
    policy: [Dense; 3],
    value: [Dense; 3],
    log_std: usize,
    len: usize,
}

impl Layout {
    fn new(shape: NetworkShape) -> Self {
        let mut offset = 0;
        let mut dense = |rows: usize, cols: usize| {
            let w = (offset, offset + rows * cols);
            let bias = w.1;
            offset = bias + rows;
            Dense {
                weights: w,
                bias,
                rows,
                cols,
            }
        };
        let h = shape.hidden;
        let policy = [dense(h, shape.input), dense(h, h), dense(shape.action, h)];
        let value = [dense(h, shape.input), dense(h, h), dense(1, h)];
        let log_std = offset;
        Self {
            policy,
            value,
            log_std,
            len: log_std + shape.action,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParameters {
    pub shape: NetworkShape,
    pub dimension: Dimension,
    pub input_scale: Vec<f64>,
    pub action_scale: Vec<f64>,
    pub value_scale: f64,
    pub v_max: f64,
    pub omega_max: f64,
    pub params: Vec<f64>,
}

/// Distribution parameters and value estimate for one observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyOutput {
    /// Mean of the normalized action.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Value estimate in return units.
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    /// Gaussian draw in normalized action units, before clipping.
    pub raw: Vec<f64>,
    pub action: AgentAction,
    pub log_prob: f64,
}

/// Everything the sensors and dynamics need to size a policy.
#[derive(Debug, Clone, Copy)]
pub struct PolicySpec {
    pub dimension: Dimension,
    pub k: usize,
    pub circle_radius: f64,
    pub sensor_range: f64,
    pub v_max: f64,
    pub omega_max: f64,
}

pub fn action_dim(dim: Dimension) -> usize {
    if dim.is_3d() {
        4
    } else {
        3
    }
}

/// Per-feature divisors bringing every observation entry to order one.
pub fn input_scale(spec: &PolicySpec) -> Vec<f64> {
    let r = spec.circle_radius;
    let v = spec.v_max;
    let k_range = spec.sensor_range;
    let mut s = Vec::with_capacity(observation_width(spec.dimension, spec.k));
    if spec.dimension.is_3d() {
        s.extend([r, r, r, v, v, v, 2.0 * r, PI, r]);
    } else {
        s.extend([r, r, v, v, 2.0 * r, PI]);
    }
    for _ in 0..spec.k {
        if spec.dimension.is_3d() {
            s.extend([k_range, PI, v, v, v, k_range]);
        } else {
            s.extend([k_range, PI, v, v]);
        }
    }
    s
}

impl PolicyParameters {
    /// Orthogonal initialization: gain sqrt(2) on hidden layers, 0.01 on the
    /// action head and 1 on the value head; zero biases.
    pub fn init<R: Rng>(spec: &PolicySpec, config: &PolicyConfig, rng: &mut R) -> Self {
        let shape = NetworkShape {
            input: observation_width(spec.dimension, spec.k),
            hidden: config.hidden,
            action: action_dim(spec.dimension),
        };
        let layout = Layout::new(shape);
        let mut params = vec![0.0; layout.len];
        let gains = [2f64.sqrt(), 2f64.sqrt(), 0.01];
        for (trunk, last_gain) in [(layout.policy, 0.01), (layout.value, 1.0)] {
            for (i, d) in trunk.iter().enumerate() {
                let gain = if i == 2 { last_gain } else { gains[i] };
                let w = orthogonal(d.rows, d.cols, gain, rng);
                params[d.w()].copy_from_slice(w.as_slice().expect("standard layout"));
            }
        }
        params[layout.log_std..].fill(config.initial_log_std);
        let mut action_scale = vec![spec.v_max; shape.action];
        *action_scale.last_mut().expect("non-empty action") = config.yaw_rate_scale;
        Self {
            shape,
            dimension: spec.dimension,
            input_scale: input_scale(spec),
            action_scale,
            value_scale: config.value_scale,
            v_max: spec.v_max,
            omega_max: spec.omega_max,
            params,
        }
    }

    /// A network with every trainable number zero except the log-std.
    pub fn zeros(spec: &PolicySpec, config: &PolicyConfig) -> Self {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut p = Self::init(spec, config, &mut rng);
        let layout = p.layout();
        p.params[..layout.log_std].fill(0.0);
        p
    }

    fn layout(&self) -> Layout {
        Layout::new(self.shape)
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// Range of the flat vector holding the action-head mean layer.
    pub fn mean_head_range(&self) -> Range<usize> {
        let d = self.layout().policy[2];
        d.weights.0..d.bias + d.rows
    }

    /// Range of the flat vector holding the whole policy trunk.
    pub fn policy_trunk_range(&self) -> Range<usize> {
        let l = self.layout();
        l.policy[0].weights.0..l.policy[2].bias + l.policy[2].rows
    }

    pub fn log_std(&self) -> &[f64] {
        &self.params[self.layout().log_std..]
    }

    fn clamped_log_std(&self) -> Vec<f64> {
        self.log_std()
            .iter()
            .map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX))
            .collect()
    }

    /// Clamps the log-std entries into their admissible interval.
    pub fn clamp_log_std(&mut self) {
        let start = self.layout().log_std;
        for l in &mut self.params[start..] {
            *l = l.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn normalize_input(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(&self.input_scale)
            .map(|(v, s)| v / s)
            .collect()
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.shape.input {
            return Err(Error::WidthMismatch {
                expected: self.shape.input,
                actual: width,
            });
        }
        Ok(())
    }

    pub fn forward(&self, obs: &ObservationVector) -> Result<PolicyOutput> {
        self.check_width(obs.width())?;
        let x = self.normalize_input(&obs.values);
        let layout = self.layout();
        let mean = self.mlp(&layout.policy, &x);
        let value = self.mlp(&layout.value, &x)[0] * self.value_scale;
        let std = self.clamped_log_std().iter().map(|l| l.exp()).collect();
        Ok(PolicyOutput { mean, std, value })
    }

    fn mlp(&self, trunk: &[Dense; 3], x: &[f64]) -> Vec<f64> {
        let mut h = x.to_vec();
        for (i, d) in trunk.iter().enumerate() {
            let w = &self.params[d.w()];
            let b = &self.params[d.b()];
            let mut out = b.to_vec();
            for (r, o) in out.iter_mut().enumerate() {
                let row = &w[r * d.cols..(r + 1) * d.cols];
                *o += row.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
            }
            if i < 2 {
                for o in &mut out {
                    *o = o.max(0.0);
                }
            }
            h = out;
        }
        h
    }

    /// Maps a normalized action to a physical, clipped one.
    pub fn to_action(&self, raw: &[f64]) -> AgentAction {
        let s = &self.action_scale;
        let a = |i: usize| raw[i] * s[i];
        let target_velocity = if self.dimension.is_3d() {
            Vec3::new(a(0), a(1), a(2))
        } else {
            Vec3::new(a(0), a(1), 0.0)
        };
        AgentAction {
            target_velocity,
            target_yaw_rate: a(self.shape.action - 1),
        }
        .clipped(self.v_max, self.omega_max)
    }

    pub fn sample_action<R: Rng>(
        &self,
        obs: &ObservationVector,
        rng: &mut R,
    ) -> Result<ActionSample> {
        let out = self.forward(obs)?;
        Ok(self.sample_from(&out, rng))
    }

    pub fn sample_from<R: Rng>(&self, out: &PolicyOutput, rng: &mut R) -> ActionSample {
        let raw: Vec<f64> = out
            .mean
            .iter()
            .zip(&out.std)
            .map(|(m, s)| {
                let z: f64 = StandardNormal.sample(rng);
                m + s * z
            })
            .collect();
        let log_prob = gaussian_log_prob(&raw, &out.mean, &out.std);
        ActionSample {
            action: self.to_action(&raw),
            raw,
            log_prob,
        }
    }

    /// Clipped mean action.
    pub fn act_deterministic(&self, obs: &ObservationVector) -> Result<AgentAction> {
        Ok(self.to_action(&self.forward(obs)?.mean))
    }

    /// Batched forward over already-normalized inputs, keeping activations
    /// for [`PolicyParameters::backward`].
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> BatchForward {
        let layout = self.layout();
        let (p1, p2, mean) = self.trunk_batch(&layout.policy, x);
        let (v1, v2, value) = self.trunk_batch(&layout.value, x);
        BatchForward {
            p1,
            p2,
            mean,
            v1,
            v2,
            value: value.index_axis_move(Axis(1), 0),
            log_std: Array1::from(self.clamped_log_std()),
        }
    }

    fn dense_view(&self, d: &Dense) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        (
            ArrayView2::from_shape((d.rows, d.cols), &self.params[d.w()]).expect("layout"),
            ArrayView1::from(&self.params[d.b()]),
        )
    }

    fn trunk_batch(
        &self,
        trunk: &[Dense; 3],
        x: ArrayView2<f64>,
    ) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
        let (w1, b1) = self.dense_view(&trunk[0]);
        let (w2, b2) = self.dense_view(&trunk[1]);
        let (w3, b3) = self.dense_view(&trunk[2]);
        let h1 = (x.dot(&w1.t()) + b1).mapv_into(|v| v.max(0.0));
        let h2 = (h1.dot(&w2.t()) + b2).mapv_into(|v| v.max(0.0));
        let out = h2.dot(&w3.t()) + b3;
        (h1, h2, out)
    }

    /// Accumulates parameter gradients into `grad` given the loss gradients
    /// with respect to the head outputs: `d_mean` (batch x action),
    /// `d_log_std` (action) and `d_value` (batch, w.r.t. the unscaled value
    /// head output).
    pub fn backward(
        &self,
        x: ArrayView2<f64>,
        cache: &BatchForward,
        d_mean: ArrayView2<f64>,
        d_log_std: ArrayView1<f64>,
        d_value: ArrayView1<f64>,
        grad: &mut [f64],
    ) {
        let layout = self.layout();
        self.trunk_backward(&layout.policy, x, &cache.p1, &cache.p2, d_mean, grad);
        let d_value = d_value.insert_axis(Axis(1));
        self.trunk_backward(&layout.value, x, &cache.v1, &cache.v2, d_value, grad);
        let ls = self.log_std();
        for (i, g) in grad[layout.log_std..].iter_mut().enumerate() {
            // the clamp is flat outside its interval
            if (LOG_STD_MIN..=LOG_STD_MAX).contains(&ls[i]) {
                *g += d_log_std[i];
            }
        }
    }

    fn trunk_backward(
        &self,
        trunk: &[Dense; 3],
        x: ArrayView2<f64>,
        h1: &Array2<f64>,
        h2: &Array2<f64>,
        d_out: ArrayView2<f64>,
        grad: &mut [f64],
    ) {
        let (w2, _) = self.dense_view(&trunk[1]);
        let (w3, _) = self.dense_view(&trunk[2]);

        accumulate(grad, &trunk[2], d_out, h2.view());
        let mut d2 = d_out.dot(&w3);
        d2.zip_mut_with(h2, |d, h| {
            if *h <= 0.0 {
                *d = 0.0
            }
        });
        accumulate(grad, &trunk[1], d2.view(), h1.view());
        let mut d1 = d2.dot(&w2);
        d1.zip_mut_with(h1, |d, h| {
            if *h <= 0.0 {
                *d = 0.0
            }
        });
        accumulate(grad, &trunk[0], d1.view(), x);
    }
}

fn accumulate(grad: &mut [f64], d: &Dense, d_out: ArrayView2<f64>, input: ArrayView2<f64>) {
    let gw = d_out.t().dot(&input);
    for (g, v) in grad[d.w()].iter_mut().zip(gw.iter()) {
        *g += v;
    }
    let gb = d_out.sum_axis(Axis(0));
    for (g, v) in grad[d.b()].iter_mut().zip(gb.iter()) {
        *g += v;
    }
}

/// Activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct BatchForward {
    p1: Array2<f64>,
    p2: Array2<f64>,
    /// Action means, batch x action.
    pub mean: Array2<f64>,
    v1: Array2<f64>,
    v2: Array2<f64>,
    /// Unscaled value head output.
    pub value: Array1<f64>,
    pub log_std: Array1<f64>,
}

/// Log-density of a diagonal Gaussian.
pub fn gaussian_log_prob(x: &[f64], mean: &[f64], std: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(std)
        .map(|((x, m), s)| {
            let z = (x - m) / s;
            -0.5 * z * z - s.ln() - HALF_LN_2PI
        })
        .sum()
}

/// Entropy of a diagonal Gaussian from its log-std.
pub fn gaussian_entropy(log_std: &[f64]) -> f64 {
    log_std.iter().map(|l| l + 0.5 + HALF_LN_2PI).sum()
}

/// A `rows x cols` matrix with orthonormal rows (or columns, whichever is
/// fewer) times `gain`.
fn orthogonal<R: Rng>(rows: usize, cols: usize, gain: f64, rng: &mut R) -> Array2<f64> {
    let (n, m) = if rows <= cols {
        (rows, cols)
    } else {
        (cols, rows)
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n);
    while basis.len() < n {
        let mut v: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        for b in &basis {
            let proj: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            basis.push(v);
        }
    }
    let mut w = Array2::zeros((rows, cols));
    for (i, b) in basis.iter().enumerate() {
        for (j, v) in b.iter().enumerate() {
            if rows <= cols {
                w[(i, j)] = v * gain;
            } else {
                w[(j, i)] = v * gain;
            }
        }
    }
    w
}
