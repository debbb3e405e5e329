//! Deep Q-learning over the five-action placement environment: experience
//! replay, epsilon-greedy exploration and target-network bootstrapping.
//!
//! Training is single-threaded and bitwise deterministic under a fixed
//! seed.

mod mlp;
mod replay;

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Environment, Observation};
use crate::error::{Error, Result};
use crate::report::{evaluate_metrics, PlanMetrics};
use crate::utility::ChargingPlan;

pub use mlp::Mlp;
pub use replay::{ReplayBuffer, Transition};

use mlp::SgdMomentum;

const CHECKPOINT_VERSION: u32 = 1;

/// Hyperparameters of the training loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub buffer_size: usize,
    pub learning_rate: f64,
    /// SGD momentum coefficient.
    pub momentum: f64,
    pub episodes_max: usize,
    /// Discount factor in (0, 1].
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the nominal total step count over which epsilon decays
    /// linearly from start to end.
    pub epsilon_decay_fraction: f64,
    /// Copy the online network into the target network every this many
    /// environment steps.
    pub target_sync_steps: usize,
    /// Run a gradient update every this many environment steps.
    pub update_every: usize,
    pub hidden_layers: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 128,
            buffer_size: 10_000,
            learning_rate: 0.001,
            momentum: 0.9,
            episodes_max: 2_000,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.1,
            target_sync_steps: 1_000,
            update_every: 1,
            hidden_layers: vec![64, 64],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > self.buffer_size {
            return Err(Error::InvalidParams(
                "batch_size must satisfy 0 < batch_size <= buffer_size".into(),
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidParams("learning_rate must be positive".into()));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidParams("gamma must lie in (0, 1]".into()));
        }
        for (name, eps) in [("epsilon_start", self.epsilon_start), ("epsilon_end", self.epsilon_end)]
        {
            if !(0.0..=1.0).contains(&eps) {
                return Err(Error::InvalidParams(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(0.0..=1.0).contains(&self.epsilon_decay_fraction) {
            return Err(Error::InvalidParams("epsilon_decay_fraction must lie in [0, 1]".into()));
        }
        if self.target_sync_steps == 0 || self.update_every == 0 {
            return Err(Error::InvalidParams(
                "target_sync_steps and update_every must be >= 1".into(),
            ));
        }
        if self.episodes_max == 0 {
            return Err(Error::InvalidParams("episodes_max must be >= 1".into()));
        }
        Ok(())
    }

    /// Linear epsilon at a global step, given the nominal total step count.
    fn epsilon_at(&self, step: usize, total_steps: usize) -> f64 {
        let decay_steps =
            ((self.epsilon_decay_fraction * total_steps as f64).round() as usize).max(1);
        let progress = (step as f64 / decay_steps as f64).min(1.0);
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * progress
    }
}

/// The learned action-value function: an MLP from observations to one
/// value per action.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    net: Mlp,
}

#[derive(Serialize, Deserialize)]
struct CheckpointLayer {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    dims: Vec<usize>,
    layers: Vec<CheckpointLayer>,
}

impl Policy {
    pub fn new(obs_len: usize, hidden_layers: &[usize], rng: &mut impl Rng) -> Self {
        let mut dims = Vec::with_capacity(hidden_layers.len() + 2);
        dims.push(obs_len);
        dims.extend_from_slice(hidden_layers);
        dims.push(Action::COUNT);
        Self { net: Mlp::new(&dims, rng) }
    }

    pub fn observation_len(&self) -> usize {
        self.net.input_len()
    }

    /// The five action values for an observation.
    pub fn q_values(&self, obs: &Observation) -> Vec<f64> {
        self.net.values(obs.as_slice())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            dims: self.net.dims().to_vec(),
            layers: self
                .net
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    weights: l.w.iter().copied().collect(),
                    biases: l.b.iter().copied().collect(),
                })
                .collect(),
        };
        let json = serde_json::to_string_pretty(&file)
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Error::Io { path: path.into(), source: e })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io { path: path.into(), source: e })?;
        let file: CheckpointFile =
            serde_json::from_str(&text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        if file.dims.len() < 2 || *file.dims.last().unwrap() != Action::COUNT {
            return Err(Error::Checkpoint("checkpoint output size must be 5".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = Mlp::new(&file.dims, &mut rng);
        let mut flat = Vec::with_capacity(net.num_params());
        for layer in &file.layers {
            flat.extend(&layer.weights);
            flat.extend(&layer.biases);
        }
        if flat.len() != net.num_params() {
            return Err(Error::Checkpoint("parameter count does not match dims".into()));
        }
        net.assign_params(&flat);
        Ok(Self { net })
    }
}

/// Argmax over action values; ties go to the lowest action code.
pub fn greedy_action_from(values: &[f64]) -> Action {
    debug_assert_eq!(values.len(), Action::COUNT);
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    Action::from_code(best as u8).unwrap()
}

/// Epsilon-greedy action choice. With probability `epsilon` a uniformly
/// random action; otherwise the greedy one. `epsilon == 0` consumes no
/// randomness.
pub fn act(policy: &Policy, obs: &Observation, epsilon: f64, rng: &mut impl Rng) -> Action {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        return Action::from_code(rng.random_range(0..Action::COUNT as u8)).unwrap();
    }
    greedy_action_from(&policy.q_values(obs))
}

/// One row of the per-episode training log.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: u32,
    pub final_score: f64,
    pub epsilon: f64,
    pub loss_mean: f64,
}

/// The result of a training run: the best-episode policy snapshot and the
/// full per-episode log.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub policy: Policy,
    pub log: Vec<EpisodeRecord>,
    pub best_episode: usize,
    pub best_score: f64,
}

/// Temporal-difference targets: `r + gamma * max_a Q_target(s', a)`, with
/// the bootstrap term dropped past terminal transitions.
fn td_targets(target_net: &Policy, batch: &[&Transition], gamma: f64) -> Vec<f64> {
    let obs_len = target_net.observation_len();
    let mut next = Array2::zeros((batch.len(), obs_len));
    for (i, t) in batch.iter().enumerate() {
        for (j, &v) in t.next_observation.iter().enumerate() {
            next[(i, j)] = v;
        }
    }
    let next_values = target_net.net.forward(&next);
    batch
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if t.done {
                t.reward
            } else {
                let best =
                    next_values.row(i).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                t.reward + gamma * best
            }
        })
        .collect()
}

/// Standard DQN: epsilon-greedy rollouts, replay-buffer insertion,
/// mini-batch temporal-difference updates toward the target network, and
/// periodic target synchronization. Returns the policy snapshot of the
/// best-scoring episode plus the per-episode log.
pub fn train(env: &mut Environment, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut policy = Policy::new(env.observation_len(), &config.hidden_layers, &mut rng);
    let mut target = policy.clone();
    let mut optimizer = SgdMomentum::new(&policy.net, config.learning_rate, config.momentum);
    let mut buffer = ReplayBuffer::new(config.buffer_size);
    let nominal_total = config.episodes_max * env.i_max() as usize;

    let mut log = Vec::with_capacity(config.episodes_max);
    let mut best: Option<(f64, Policy, usize)> = None;
    let mut global_step = 0usize;
    let mut updates = 0usize;

    for episode in 0..config.episodes_max {
        let mut obs = env.reset()?;
        let mut steps = 0u32;
        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        loop {
            let epsilon = config.epsilon_at(global_step, nominal_total);
            let action = act(&policy, &obs, epsilon, &mut rng);
            let outcome = env.step(action)?;
            buffer.push(Transition {
                observation: obs.into_vec(),
                action: action.code(),
                reward: outcome.reward,
                next_observation: outcome.observation.as_slice().to_vec(),
                done: outcome.done,
            });
            obs = outcome.observation;
            global_step += 1;
            steps += 1;

            if buffer.len() >= config.batch_size && global_step % config.update_every == 0 {
                let batch = buffer.sample(config.batch_size, &mut rng);
                let targets = td_targets(&target, &batch, config.gamma);
                let obs_len = policy.observation_len();
                let mut x = Array2::zeros((batch.len(), obs_len));
                for (i, t) in batch.iter().enumerate() {
                    for (j, &v) in t.observation.iter().enumerate() {
                        x[(i, j)] = v;
                    }
                }
                let actions: Vec<usize> = batch.iter().map(|t| t.action as usize).collect();
                let (loss, grads) = policy.net.selected_mse_and_grads(&x, &actions, &targets);
                updates += 1;
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { step: updates });
                }
                optimizer.apply(&mut policy.net, &grads);
                loss_sum += loss;
                loss_count += 1;
            }
            if global_step % config.target_sync_steps == 0 {
                target = policy.clone();
            }
            if outcome.done {
                break;
            }
        }
        let final_score = env.state().prev_score;
        // epsilon that drove the episode's last step
        let epsilon = config.epsilon_at(global_step.saturating_sub(1), nominal_total);
        log.push(EpisodeRecord {
            episode,
            steps,
            final_score,
            epsilon,
            loss_mean: if loss_count > 0 { loss_sum / loss_count as f64 } else { 0.0 },
        });
        if best.as_ref().is_none_or(|(b, _, _)| final_score > *b) {
            best = Some((final_score, policy.clone(), episode));
        }
    }
    let (best_score, policy, best_episode) = best.expect("episodes_max >= 1");
    Ok(TrainOutcome { policy, log, best_episode, best_score })
}

/// One greedy (epsilon = 0) episode; returns the terminal plan and its
/// metrics. The policy is not modified.
pub fn evaluate_policy(policy: &Policy, env: &mut Environment) -> Result<(ChargingPlan, PlanMetrics)> {
    let mut obs = env.reset()?;
    loop {
        let action = greedy_action_from(&policy.q_values(&obs));
        let outcome = env.step(action)?;
        obs = outcome.observation;
        if outcome.done {
            break;
        }
    }
    let plan = env.state().plan.clone();
    let metrics = evaluate_metrics(&plan, env.network(), env.catalog(), env.params())?;
    Ok((plan, metrics))
}

/// Writes the per-episode log as `episode,steps,final_score,epsilon,loss_mean`.
pub fn write_log_csv(log: &[EpisodeRecord], path: &Path) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).map_err(|e| Error::Csv { path: path.into(), source: e })?;
    w.write_record(["episode", "steps", "final_score", "epsilon", "loss_mean"])
        .map_err(|e| Error::Csv { path: path.into(), source: e })?;
    for r in log {
        w.serialize((r.episode, r.steps, r.final_score, r.epsilon, r.loss_mean))
            .map_err(|e| Error::Csv { path: path.into(), source: e })?;
    }
    w.flush().map_err(|e| Error::Io { path: path.into(), source: e })
}
