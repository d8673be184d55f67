//! Clipped-surrogate PPO with an additional KL(old || new) penalty and a
//! squared-error value loss, all differentiated by hand.

use std::fmt::Write;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;

use super::adam::Adam;
use super::rollout::TransitionBatch;
use super::PpoConfig;
use crate::error::{Error, Result};
use crate::policy::{gaussian_entropy, PolicyParameters};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Loss terms averaged over a minibatch. `total = -surrogate + beta * kl +
/// vf_coeff * value`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub total: f64,
    pub surrogate: f64,
    pub kl: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    /// Mean negated surrogate.
    pub policy_loss: f64,
    pub value_loss: f64,
    pub kl: f64,
    pub entropy: f64,
    pub minibatches: usize,
}

/// Observations of the whole batch divided by the policy's input scales.
pub fn normalized_observations(params: &PolicyParameters, batch: &TransitionBatch) -> Array2<f64> {
    let w = batch.obs_width;
    Array2::from_shape_fn((batch.len(), w), |(i, j)| {
        batch.observations[i * w + j] / params.input_scale[j]
    })
}

/// Loss value on the transitions `indices`.
pub fn ppo_loss(
    params: &PolicyParameters,
    batch: &TransitionBatch,
    indices: &[usize],
    config: &PpoConfig,
) -> LossParts {
    let x = normalized_observations(params, batch).select(Axis(0), indices);
    let mut scratch = vec![0.0; params.num_params()];
    loss_and_grad(params, batch, &x, indices, config, &mut scratch)
}

/// Loss value and its gradient with respect to the flat parameter vector
/// (added into `grad`).
pub fn ppo_loss_and_grad(
    params: &PolicyParameters,
    batch: &TransitionBatch,
    indices: &[usize],
    config: &PpoConfig,
    grad: &mut [f64],
) -> LossParts {
    let x = normalized_observations(params, batch).select(Axis(0), indices);
    loss_and_grad(params, batch, &x, indices, config, grad)
}

fn loss_and_grad(
    params: &PolicyParameters,
    batch: &TransitionBatch,
    x: &Array2<f64>,
    indices: &[usize],
    config: &PpoConfig,
    grad: &mut [f64],
) -> LossParts {
    let fwd = params.forward_batch(x.view());
    let actions = params.shape.action;
    let n = indices.len() as f64;
    let log_std = &fwd.log_std;
    let var: Vec<f64> = log_std.iter().map(|l| (2.0 * l).exp()).collect();
    let old_var: Vec<f64> = batch.old_log_std.iter().map(|l| (2.0 * l).exp()).collect();
    let beta = config.kl_coeff;

    let mut d_mean = Array2::<f64>::zeros((indices.len(), actions));
    let mut d_log_std = Array1::<f64>::zeros(actions);
    let mut d_value = Array1::<f64>::zeros(indices.len());
    let mut surrogate = 0.0;
    let mut kl = 0.0;
    let mut value_loss = 0.0;

    for (row, &i) in indices.iter().enumerate() {
        let raw = batch.raw_action(i);
        let old_mean = batch.old_mean(i);
        let advantage = batch.normalized_advantages[i];

        let log_prob = log_density(
            raw,
            |d| fwd.mean[(row, d)],
            log_std.as_slice().expect("contiguous"),
            &var,
        );
        let ratio = (log_prob - batch.log_probs[i]).exp();
        let clipped = ratio.clamp(1.0 - config.clip, 1.0 + config.clip);
        let unclipped_term = ratio * advantage;
        let clipped_term = clipped * advantage;
        surrogate += unclipped_term.min(clipped_term);
        // d(-surrogate / n) / d log_prob, zero where the clipped branch wins
        let g = if unclipped_term <= clipped_term {
            -advantage * ratio / n
        } else {
            0.0
        };

        for d in 0..actions {
            let mean = fwd.mean[(row, d)];
            let diff = raw[d] - mean;
            d_mean[(row, d)] += g * diff / var[d];
            d_log_std[d] += g * (diff * diff / var[d] - 1.0);

            let shift = old_mean[d] - mean;
            let spread = old_var[d] + shift * shift;
            kl += log_std[d] - batch.old_log_std[d] + spread / (2.0 * var[d]) - 0.5;
            d_mean[(row, d)] += beta / n * (-shift / var[d]);
            d_log_std[d] += beta / n * (1.0 - spread / var[d]);
        }

        let err = fwd.value[row] - batch.returns[i] / params.value_scale;
        value_loss += err * err;
        d_value[row] = config.vf_coeff * 2.0 * err / n;
    }

    params.backward(
        x.view(),
        &fwd,
        d_mean.view(),
        d_log_std.view(),
        d_value.view(),
        grad,
    );

    let surrogate = surrogate / n;
    let kl = kl / n;
    let value = value_loss / n;
    LossParts {
        total: -surrogate + beta * kl + config.vf_coeff * value,
        surrogate,
        kl,
        value,
    }
}

fn log_density(raw: &[f64], mean: impl Fn(usize) -> f64, log_std: &[f64], var: &[f64]) -> f64 {
    let mut log_prob = 0.0;
    for d in 0..raw.len() {
        let z2 = (raw[d] - mean(d)).powi(2) / var[d];
        log_prob += -0.5 * z2 - log_std[d] - HALF_LN_2PI;
    }
    log_prob
}

/// `sgd_iterations` epochs over shuffled minibatches; every transition is
/// visited exactly once per epoch (a final short minibatch takes the
/// remainder).
///
/// `params` must be the policy that collected `batch`. Its means and
/// log-probs are recomputed with the batched forward pass, so the first step
/// sees a ratio of exactly 1 and a KL of exactly 0 instead of rounding noise
/// that Adam would amplify.
pub fn ppo_update<R: Rng>(
    params: &mut PolicyParameters,
    adam: &mut Adam,
    batch: &TransitionBatch,
    config: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats> {
    let x_all = normalized_observations(params, batch);
    let mut batch = batch.clone();
    {
        let fwd = params.forward_batch(x_all.view());
        let log_std = fwd.log_std.to_vec();
        let var: Vec<f64> = log_std.iter().map(|l| (2.0 * l).exp()).collect();
        let a = params.shape.action;
        batch.old_means = fwd.mean.iter().copied().collect();
        batch.old_log_std = log_std.clone();
        for i in 0..batch.len() {
            let mean = &batch.old_means[i * a..(i + 1) * a];
            batch.log_probs[i] = log_density(
                &batch.raw_actions[i * a..(i + 1) * a],
                |d| mean[d],
                &log_std,
                &var,
            );
        }
    }
    let batch = &batch;
    let mut order: Vec<usize> = (0..batch.len()).collect();
    let mut stats = UpdateStats::default();
    let mut grad = vec![0.0; params.num_params()];

    for epoch in 0..config.sgd_iterations {
        order.shuffle(rng);
        for (mb, chunk) in order.chunks(config.minibatch.max(1)).enumerate() {
            let x = x_all.select(Axis(0), chunk);
            grad.fill(0.0);
            let parts = loss_and_grad(params, batch, &x, chunk, config, &mut grad);
            if !parts.total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    minibatch: mb,
                    dump: dump_minibatch(batch, chunk, &parts),
                });
            }
            adam.step(&mut params.params, &grad);
            params.clamp_log_std();
            stats.policy_loss += -parts.surrogate;
            stats.value_loss += parts.value;
            stats.kl += parts.kl;
            stats.minibatches += 1;
        }
    }
    if stats.minibatches > 0 {
        let m = stats.minibatches as f64;
        stats.policy_loss /= m;
        stats.value_loss /= m;
        stats.kl /= m;
    }
    stats.entropy = gaussian_entropy(params.log_std());
    Ok(stats)
}

fn dump_minibatch(batch: &TransitionBatch, chunk: &[usize], parts: &LossParts) -> String {
    let mut s = format!("loss terms: {parts:?}\n");
    for &i in chunk.iter().take(8) {
        let _ = writeln!(
            s,
            "#{i}: obs {:?} raw {:?} logp {} adv {} ret {}",
            batch.observation(i),
            batch.raw_action(i),
            batch.log_probs[i],
            batch.normalized_advantages[i],
            batch.returns[i]
        );
    }
    if chunk.len() > 8 {
        let _ = writeln!(s, "... {} more", chunk.len() - 8);
    }
    s
}
