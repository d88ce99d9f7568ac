//! Actor-critic training: rollout collection over vectorized environments,
//! suffix-max return targets, clipped-surrogate policy optimization, and the
//! distance-curriculum driver.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::circuit::Circuit;
use crate::env::{Done, Env, EnvConfig, EnvError};
use crate::nn::{
    argmax, log_softmax, sample_categorical, softmax_entropy, Grads, Mlp, RmsProp,
};

#[derive(Debug, Error)]
pub enum TrainerError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("non-finite loss encountered: {0}")]
    NonFiniteLoss(String),
    #[error("checkpoint format error: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Hyperparameters. Defaults follow the run configuration the acceptance
/// experiments fix: 2×256 hidden units, clip 0.2, entropy 0.01, γ=1,
/// lr 3e-4, minibatch 256, 4 optimization epochs per batch.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainerConfig {
    pub hidden: Vec<usize>,
    pub clip: f64,
    pub entropy_coef: f64,
    pub value_coef: f64,
    pub gamma: f64,
    pub lr: f64,
    pub minibatch: usize,
    pub ppo_epochs: usize,
    pub n_envs: usize,
    pub rollout_len: usize,
    pub epochs_per_stage: usize,
    pub patience: usize,
    /// Per-epoch success rate a warm-up stage must reach before the
    /// curriculum advances to the next distance.
    pub advance_success_rate: f64,
    pub seed: u64,
}

impl Default for TrainerConfig {
    fn default() -> Self {
        TrainerConfig {
            hidden: vec![256, 256],
            clip: 0.2,
            entropy_coef: 0.01,
            value_coef: 0.5,
            gamma: 1.0,
            lr: 3e-4,
            minibatch: 256,
            ppo_epochs: 4,
            n_envs: 8,
            rollout_len: 64,
            epochs_per_stage: 2000,
            patience: 500,
            advance_success_rate: 0.25,
            seed: 0,
        }
    }
}

pub struct PolicyValueNets {
    pub actor: Mlp,
    pub critic: Mlp,
}

impl PolicyValueNets {
    pub fn new(obs_len: usize, n_actions: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut actor_sizes = vec![obs_len];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(n_actions);
        let mut critic_sizes = vec![obs_len];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        PolicyValueNets {
            actor: Mlp::new(&actor_sizes, rng),
            critic: Mlp::new(&critic_sizes, rng),
        }
    }
}

/// One recorded transition.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub obs: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub log_prob: f64,
    pub value: f64,
    pub episode: usize,
    pub last_of_episode: bool,
}

/// Transitions of complete episodes only, in temporal order per episode.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryBatch {
    pub steps: Vec<StepRecord>,
    pub episodes: usize,
    pub successes: usize,
}

/// Per-collection statistics and discovered artifacts.
#[derive(Debug, Default)]
pub struct CollectStats {
    pub episodes: usize,
    pub successes: usize,
    pub mean_normalized_return: f64,
    pub mean_episode_length: f64,
    pub circuits: Vec<Circuit>,
}

fn observe_f64(obs: &[u8]) -> Vec<f64> {
    obs.iter().map(|&b| b as f64).collect()
}

/// Run E environments in lockstep for up to L steps each, sampling from the
/// softmax policy; environments reset on episode end. Episodes still open
/// when the budget runs out are dropped from the batch (truncation inside
/// the environment still terminates normally and is kept).
pub fn collect(
    nets: &PolicyValueNets,
    cfg: &EnvConfig,
    n_envs: usize,
    rollout_len: usize,
    rng: &mut impl Rng,
) -> Result<(TrajectoryBatch, CollectStats), TrainerError> {
    let mut envs = Vec::with_capacity(n_envs);
    for _ in 0..n_envs {
        let mut e = Env::new(cfg.clone())?;
        e.reset()?;
        envs.push(e);
    }
    let mut batch = TrajectoryBatch::default();
    let mut stats = CollectStats::default();
    let mut episode_id = 0usize;
    // per-env open episode buffer
    let mut open: Vec<Vec<StepRecord>> = vec![Vec::new(); n_envs];
    let mut returns_sum = 0.0;
    let mut lengths_sum = 0usize;

    for _ in 0..rollout_len {
        for (i, env) in envs.iter_mut().enumerate() {
            let obs = observe_f64(&env.observation());
            let x = Array1::from_vec(obs.clone());
            let logits = nets.actor.forward_one(x.view());
            let action = sample_categorical(logits.view(), rng);
            let log_prob = log_softmax(logits.view())[action];
            let value = nets.critic.forward_one(x.view())[0];
            let (_, reward, done) = env.step(action)?;
            open[i].push(StepRecord {
                obs,
                action,
                reward,
                log_prob,
                value,
                episode: episode_id,
                last_of_episode: done != Done::No,
            });
            if done != Done::No {
                let ep = std::mem::take(&mut open[i]);
                let ep_return: f64 = ep.iter().map(|s| s.reward).sum();
                returns_sum += ep_return / env.sigma_kl_initial();
                lengths_sum += ep.len();
                batch.steps.extend(ep);
                batch.episodes += 1;
                episode_id += 1;
                if done == Done::Success {
                    batch.successes += 1;
                    stats.circuits.push(env.export_circuit());
                }
                env.reset()?;
            }
        }
    }
    stats.episodes = batch.episodes;
    stats.successes = batch.successes;
    if batch.episodes > 0 {
        stats.mean_normalized_return = returns_sum / batch.episodes as f64;
        stats.mean_episode_length = lengths_sum as f64 / batch.episodes as f64;
    }
    Ok((batch, stats))
}

/// Suffix-max discounted targets: within each episode,
/// R̂_t = r_t + γ·max(0, R̂_{t+1}), i.e. the best discounted partial sum
/// over all stopping points j ≥ t.
pub fn max_return_targets(batch: &TrajectoryBatch, gamma: f64) -> Vec<f64> {
    let mut targets = vec![0.0; batch.steps.len()];
    let mut next: Option<f64> = None;
    for (i, step) in batch.steps.iter().enumerate().rev() {
        if step.last_of_episode {
            next = None;
        }
        let t = step.reward + gamma * next.unwrap_or(0.0).max(0.0);
        targets[i] = t;
        next = Some(t);
    }
    targets
}

/// Contribution of one sample to the clipped surrogate objective; the flag
/// says whether the unclipped branch is active (its gradient flows).
pub fn clipped_objective(ratio: f64, advantage: f64, clip: f64) -> (f64, bool) {
    let unclipped = ratio * advantage;
    let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * advantage;
    if unclipped <= clipped {
        (unclipped, true)
    } else {
        (clipped, false)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LossStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

/// One PPO update: several optimization epochs of shuffled minibatches over
/// the batch. Advantages are normalized over the whole batch.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    nets: &mut PolicyValueNets,
    actor_opt: &mut RmsProp,
    critic_opt: &mut RmsProp,
    batch: &TrajectoryBatch,
    targets: &[f64],
    cfg: &TrainerConfig,
    rng: &mut impl Rng,
) -> Result<LossStats, TrainerError> {
    assert_eq!(batch.steps.len(), targets.len(), "targets aligned with batch");
    if batch.steps.is_empty() {
        return Ok(LossStats::default());
    }
    let n = batch.steps.len();
    let advantages: Vec<f64> = batch
        .steps
        .iter()
        .zip(targets)
        .map(|(s, &t)| t - s.value)
        .collect();
    let mean = advantages.iter().sum::<f64>() / n as f64;
    let var = advantages.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt().max(1e-8);
    let advantages: Vec<f64> = advantages.iter().map(|a| (a - mean) / std).collect();

    let obs_len = nets.actor.input_len();
    let mut last = LossStats::default();
    let mut indices: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.ppo_epochs {
        indices.shuffle(rng);
        for chunk in indices.chunks(cfg.minibatch) {
            let b = chunk.len();
            let mut x = Array2::zeros((b, obs_len));
            for (row, &idx) in chunk.iter().enumerate() {
                for (col, &v) in batch.steps[idx].obs.iter().enumerate() {
                    x[(row, col)] = v;
                }
            }
            // ----- actor -----
            let (logits, cache_a) = nets.actor.forward_train(x.view());
            let mut grad_logits = Array2::zeros(logits.dim());
            let mut policy_loss = 0.0;
            let mut entropy_sum = 0.0;
            for (row, &idx) in chunk.iter().enumerate() {
                let step = &batch.steps[idx];
                let lrow = logits.index_axis(Axis(0), row);
                let logp = log_softmax(lrow);
                let probs = logp.mapv(f64::exp);
                let ratio = (logp[step.action] - step.log_prob).exp();
                let adv = advantages[idx];
                let (objective, active) = clipped_objective(ratio, adv, cfg.clip);
                policy_loss -= objective;
                let h = softmax_entropy(lrow);
                entropy_sum += h;
                // d(-objective)/dlogits: flows only through the unclipped
                // branch; dratio/dlogit_j = ratio * (1{j=a} - p_j)
                if active {
                    let coef = -adv * ratio;
                    for j in 0..probs.len() {
                        let indicator = if j == step.action { 1.0 } else { 0.0 };
                        grad_logits[(row, j)] += coef * (indicator - probs[j]);
                    }
                }
                // entropy bonus: d(-c·H)/dlogit_j = c · p_j (logp_j + H)
                for j in 0..probs.len() {
                    grad_logits[(row, j)] += cfg.entropy_coef * probs[j] * (logp[j] + h);
                }
            }
            grad_logits /= b as f64;
            let mut actor_grads = nets.actor.backward(&cache_a, grad_logits.view());
            clip_grads(&mut actor_grads);
            // ----- critic -----
            let (values, cache_c) = nets.critic.forward_train(x.view());
            let mut grad_v = Array2::zeros(values.dim());
            let mut value_loss = 0.0;
            for (row, &idx) in chunk.iter().enumerate() {
                let diff = values[(row, 0)] - targets[idx];
                value_loss += 0.5 * diff * diff;
                grad_v[(row, 0)] = cfg.value_coef * diff / b as f64;
            }
            let mut critic_grads = nets.critic.backward(&cache_c, grad_v.view());
            clip_grads(&mut critic_grads);

            last = LossStats {
                policy_loss: policy_loss / b as f64,
                value_loss: value_loss / b as f64,
                entropy: entropy_sum / b as f64,
            };
            if !last.policy_loss.is_finite() || !last.value_loss.is_finite() {
                return Err(TrainerError::NonFiniteLoss(format!(
                    "policy {} value {}",
                    last.policy_loss, last.value_loss
                )));
            }
            actor_opt.step(&mut nets.actor, &actor_grads);
            critic_opt.step(&mut nets.critic, &critic_grads);
        }
    }
    Ok(last)
}

fn clip_grads(grads: &mut Grads) {
    let max = grads.max_abs();
    let cap = 10.0;
    if max > cap {
        grads.scale(cap / max);
    }
}

/// One row of the training log.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    pub epoch: usize,
    pub stage_d: usize,
    pub mean_normalized_return: f64,
    pub success_rate: f64,
    pub mean_episode_length: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
}

#[derive(Debug, Default)]
pub struct TrainResult {
    pub log: Vec<EpochRecord>,
    pub circuits: Vec<Circuit>,
    /// Epoch (global, 1-based) of the first success at each stage distance.
    pub first_success_epoch: Vec<(usize, usize)>,
    pub stopped_early: bool,
}

impl TrainResult {
    pub fn log_csv(&self) -> String {
        let mut s = String::from(
            "epoch,stage_d,mean_normalized_return,success_rate,mean_episode_length,policy_loss,value_loss,entropy\n",
        );
        for r in &self.log {
            writeln!(
                s,
                "{},{},{:.6},{:.6},{:.3},{:.6},{:.6},{:.6}",
                r.epoch,
                r.stage_d,
                r.mean_normalized_return,
                r.success_rate,
                r.mean_episode_length,
                r.policy_loss,
                r.value_loss,
                r.entropy
            )
            .unwrap();
        }
        s
    }
}

/// Stage list for a target distance: max(3, d−2) up to d, error sets
/// recomputed per stage.
pub fn curriculum_stages(d: usize) -> Vec<usize> {
    (3.max(d.saturating_sub(2))..=d).collect()
}

/// Train through the distance curriculum, carrying parameters across
/// stages. A warm-up stage advances once its per-epoch success rate reaches
/// `advance_success_rate` (so the transferred policy is reliable, not just
/// lucky once) or after its epoch budget; a stage with no success and no
/// return improvement for `patience` epochs stops the run with partial
/// results. The run ends at the first success of the final stage.
pub fn run_curriculum(
    env_cfg: &EnvConfig,
    cfg: &TrainerConfig,
) -> Result<(PolicyValueNets, TrainResult), TrainerError> {
    run_curriculum_with(env_cfg, cfg, |_| {})
}

/// `run_curriculum` with a per-epoch observer (progress reporting).
pub fn run_curriculum_with(
    env_cfg: &EnvConfig,
    cfg: &TrainerConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(PolicyValueNets, TrainResult), TrainerError> {
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    let probe = Env::new(env_cfg.clone())?;
    let obs_len = probe.observation_len();
    let n_actions = probe.n_actions();
    drop(probe);
    let mut nets = PolicyValueNets::new(obs_len, n_actions, &cfg.hidden, &mut rng);
    let mut actor_opt = RmsProp::new(&nets.actor, cfg.lr);
    let mut critic_opt = RmsProp::new(&nets.critic, cfg.lr);
    let mut result = TrainResult::default();
    let mut epoch = 0usize;

    'stages: for stage_d in curriculum_stages(env_cfg.d) {
        let mut stage_cfg = env_cfg.clone();
        stage_cfg.d = stage_d;
        let mut best_return = f64::NEG_INFINITY;
        let mut since_improvement = 0usize;
        let mut stage_succeeded = false;
        for _ in 0..cfg.epochs_per_stage {
            epoch += 1;
            let (batch, stats) = collect(&nets, &stage_cfg, cfg.n_envs, cfg.rollout_len, &mut rng)?;
            let targets = max_return_targets(&batch, cfg.gamma);
            let losses = ppo_update(
                &mut nets,
                &mut actor_opt,
                &mut critic_opt,
                &batch,
                &targets,
                cfg,
                &mut rng,
            )?;
            let success_rate = if stats.episodes > 0 {
                stats.successes as f64 / stats.episodes as f64
            } else {
                0.0
            };
            let record = EpochRecord {
                epoch,
                stage_d,
                mean_normalized_return: stats.mean_normalized_return,
                success_rate,
                mean_episode_length: stats.mean_episode_length,
                policy_loss: losses.policy_loss,
                value_loss: losses.value_loss,
                entropy: losses.entropy,
            };
            on_epoch(&record);
            result.log.push(record);
            if stats.successes > 0 && !stage_succeeded {
                stage_succeeded = true;
                result.first_success_epoch.push((stage_d, epoch));
            }
            result.circuits.extend(stats.circuits);
            if stage_succeeded && stage_d == env_cfg.d {
                break 'stages;
            }
            if stage_succeeded && success_rate >= cfg.advance_success_rate {
                break; // the warm-up distance is mastered, advance
            }
            if stats.mean_normalized_return > best_return + 1e-9 {
                best_return = stats.mean_normalized_return;
                since_improvement = 0;
            } else {
                since_improvement += 1;
                if since_improvement > cfg.patience {
                    if stage_succeeded {
                        break; // mastery stalled; advance with what we have
                    }
                    result.stopped_early = true;
                    break 'stages;
                }
            }
        }
        if !stage_succeeded && !result.stopped_early {
            // stage budget exhausted without a success: continue to the next
            // stage anyway only if this was a warm-up distance
            if stage_d == env_cfg.d {
                result.stopped_early = true;
            }
        }
    }
    Ok((nets, result))
}

/// Greedy (argmax) evaluation episode; returns the final env for inspection.
pub fn greedy_rollout(nets: &PolicyValueNets, cfg: &EnvConfig) -> Result<(Env, Done), TrainerError> {
    let mut env = Env::new(cfg.clone())?;
    env.reset()?;
    let mut done = Done::No;
    while done == Done::No {
        let x = Array1::from_vec(observe_f64(&env.observation()));
        let logits = nets.actor.forward_one(x.view());
        let action = argmax(logits.view());
        done = env.step(action)?.2;
    }
    Ok((env, done))
}

const CHECKPOINT_MAGIC: &[u8; 4] = b"GQC1";

/// Versioned binary checkpoint: magic, config hash, actor and critic layer
/// sizes and flat parameters (little-endian f64).
pub fn save_checkpoint(
    path: &Path,
    nets: &PolicyValueNets,
    cfg: &TrainerConfig,
) -> Result<(), TrainerError> {
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&config_hash(cfg));
    for net in [&nets.actor, &nets.critic] {
        out.extend_from_slice(&(net.sizes.len() as u32).to_le_bytes());
        for &s in &net.sizes {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        for v in net.param_vec() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path, cfg: &TrainerConfig) -> Result<PolicyValueNets, TrainerError> {
    let bytes = fs::read(path)?;
    let fail = |msg: &str| TrainerError::Checkpoint(msg.to_string());
    if bytes.len() < 36 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(fail("bad magic"));
    }
    if bytes[4..36] != config_hash(cfg) {
        return Err(fail("config hash mismatch"));
    }
    let mut pos = 36;
    let read_u32 = |bytes: &[u8], pos: &mut usize| -> Result<u32, TrainerError> {
        let end = *pos + 4;
        if end > bytes.len() {
            return Err(fail("truncated"));
        }
        let v = u32::from_le_bytes(bytes[*pos..end].try_into().unwrap());
        *pos = end;
        Ok(v)
    };
    let mut nets = Vec::new();
    for _ in 0..2 {
        let n_sizes = read_u32(&bytes, &mut pos)? as usize;
        let mut sizes = Vec::with_capacity(n_sizes);
        for _ in 0..n_sizes {
            sizes.push(read_u32(&bytes, &mut pos)? as usize);
        }
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let mut net = Mlp::new(&sizes, &mut rng);
        let count = net.param_count();
        let end = pos + 8 * count;
        if end > bytes.len() {
            return Err(fail("truncated parameters"));
        }
        let params: Vec<f64> = bytes[pos..end]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        pos = end;
        net.set_param_vec(&params);
        nets.push(net);
    }
    let critic = nets.pop().unwrap();
    let actor = nets.pop().unwrap();
    Ok(PolicyValueNets { actor, critic })
}

fn config_hash(cfg: &TrainerConfig) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(format!("{cfg:?}"));
    hasher.finalize().into()
}
