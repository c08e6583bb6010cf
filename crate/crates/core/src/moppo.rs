//! Weight-scalarized PPO over vector rewards with a recurrent Gaussian
//! policy and a vector-valued critic.

use ndarray::{Array2, Axis};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{ActionVector, EnvConfig, EnvError, Environment, NUM_OBJECTIVES};
use crate::neural::{
    log_prob, log_prob_grad, sample_action, squash_to_bounds, Adam, AdamConfig, Architecture, NetSpec, NeuralError,
    PolicyNetwork, ValueNetwork, LOG_STD_MAX, LOG_STD_MIN,
};
use crate::seed::{self, Rng};

const M: usize = NUM_OBJECTIVES;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoppoError {
    #[error("invalid PPO config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss in PPO update")]
    NonFiniteLoss,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    pub epochs: usize,
    pub episodes: usize,
    pub learning_rate: f64,
    /// Truncated backpropagation length in steps; full episodes when absent.
    pub bptt: Option<usize>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            lambda: 0.95,
            clip: 0.2,
            epochs: 10,
            episodes: 4,
            learning_rate: 1e-4,
            bptt: None,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), MoppoError> {
        let bad = |m: &str| Err(MoppoError::InvalidConfig(m.into()));
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.clip > 0.0) {
            return bad("clip must be > 0");
        }
        if self.epochs == 0 || self.episodes == 0 {
            return bad("epochs and episodes must be >= 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be > 0");
        }
        if self.bptt == Some(0) {
            return bad("bptt must be >= 1 when set");
        }
        Ok(())
    }

    fn adam(&self) -> AdamConfig {
        AdamConfig {
            lr: self.learning_rate,
            ..AdamConfig::default()
        }
    }
}

/// Per-step information returned by a training environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub reward: [f64; M],
    /// Raw per-step objective contributions, both to be maximized.
    pub objectives: [f64; M],
}

/// One running episode.
pub trait EnvInstance {
    fn observe(&self) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<StepInfo, MoppoError>;
}

/// Fixed-horizon episodic environment family that tasks are trained on.
pub trait TaskEnv: Sync {
    type Instance: EnvInstance;
    fn spawn(&self, seed: u64) -> Result<Self::Instance, MoppoError>;
    fn observation_len(&self) -> usize;
    fn action_bounds(&self) -> Vec<(f64, f64)>;
    fn horizon(&self) -> usize;
}

impl EnvInstance for Environment {
    fn observe(&self) -> Vec<f64> {
        Environment::observe(self)
    }

    fn step(&mut self, action: &[f64]) -> Result<StepInfo, MoppoError> {
        let a = ActionVector::from_flat(action, self.config().n_uav)?;
        let out = Environment::step(self, &a)?;
        Ok(StepInfo {
            reward: out.reward.as_array(),
            objectives: [out.rate, -out.energy],
        })
    }
}

impl TaskEnv for EnvConfig {
    type Instance = Environment;

    fn spawn(&self, seed: u64) -> Result<Environment, MoppoError> {
        Ok(Environment::reset(self, seed)?)
    }

    fn observation_len(&self) -> usize {
        EnvConfig::observation_len(self)
    }

    fn action_bounds(&self) -> Vec<(f64, f64)> {
        EnvConfig::action_bounds(self)
    }

    fn horizon(&self) -> usize {
        self.horizon
    }
}

/// Network widths shared by a task's actor and critic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub first_hidden: usize,
    pub hidden: Vec<usize>,
    /// Replace the recurrent first layer by a dense tanh layer.
    #[serde(skip)]
    pub disable_lstm: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            first_hidden: 128,
            hidden: vec![256; 3],
            disable_lstm: false,
        }
    }
}

impl NetworkConfig {
    pub fn architecture(&self) -> Architecture {
        if self.disable_lstm {
            Architecture::Mlp
        } else {
            Architecture::Lstm
        }
    }

    pub fn policy_spec(&self, obs_len: usize, action_len: usize) -> NetSpec {
        let mut s = NetSpec::policy(obs_len, 1, self.architecture()).with_widths(self.first_hidden, self.hidden.clone());
        s.output = action_len;
        s
    }

    pub fn value_spec(&self, obs_len: usize) -> NetSpec {
        NetSpec::value(obs_len, M, self.architecture()).with_widths(self.first_hidden, self.hidden.clone())
    }
}

/// A learning task: preference weights plus actor, critic and their optimizers.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: u64,
    pub weight: [f64; M],
    pub policy: PolicyNetwork,
    pub value: ValueNetwork,
    pub policy_opt: Adam,
    pub value_opt: Adam,
    /// PPO iterations applied since the networks were created.
    pub iterations: u64,
}

impl Task {
    pub fn new<E: TaskEnv, R: rand::Rng + ?Sized>(
        id: u64,
        weight: [f64; M],
        env: &E,
        net: &NetworkConfig,
        ppo: &PpoConfig,
        rng: &mut R,
    ) -> Self {
        let obs = env.observation_len();
        let act = env.action_bounds().len();
        let policy = PolicyNetwork::new(net.policy_spec(obs, act), rng);
        let value = ValueNetwork::new(net.value_spec(obs), rng);
        Self::from_networks(id, weight, policy, value, ppo)
    }

    /// Wrap existing networks with fresh optimizer state.
    pub fn from_networks(id: u64, weight: [f64; M], policy: PolicyNetwork, value: ValueNetwork, ppo: &PpoConfig) -> Self {
        let policy_opt = Adam::new(ppo.adam(), policy.net.len());
        let value_opt = Adam::new(ppo.adam(), value.net.len());
        Self {
            id,
            weight,
            policy,
            value,
            policy_opt,
            value_opt,
            iterations: 0,
        }
    }

    pub fn scalarize(&self, v: [f64; M]) -> f64 {
        self.weight.iter().zip(v).map(|(w, x)| w * x).sum()
    }
}

/// Time-major trajectories of `episodes` lockstep episodes of `steps` slots.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBatch {
    pub episodes: usize,
    pub steps: usize,
    pub obs: Array2<f64>,
    /// Pre-squash Gaussian draws.
    pub u: Array2<f64>,
    /// Behavior log-probabilities.
    pub log_prob: Vec<f64>,
    pub rewards: Array2<f64>,
    /// Critic outputs under the behavior parameters.
    pub values: Array2<f64>,
    pub objectives: Array2<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.episodes * self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Mean undiscounted per-episode sum of each reward component.
    pub fn mean_return(&self) -> [f64; M] {
        column_means(&self.rewards, self.episodes)
    }

    pub fn mean_objectives(&self) -> [f64; M] {
        column_means(&self.objectives, self.episodes)
    }
}

fn column_means(a: &Array2<f64>, episodes: usize) -> [f64; M] {
    let s = a.sum_axis(Axis(0));
    std::array::from_fn(|m| s[m] / episodes as f64)
}

/// Run `n_episodes` full episodes in lockstep with stochastic actions.
pub fn collect_rollouts<E: TaskEnv>(
    task: &Task,
    env: &E,
    n_episodes: usize,
    rng: &mut Rng,
) -> Result<RolloutBatch, MoppoError> {
    if n_episodes == 0 {
        return Err(MoppoError::InvalidConfig("n_episodes must be >= 1".into()));
    }
    let bounds = env.action_bounds();
    let (d, a, steps) = (env.observation_len(), bounds.len(), env.horizon());
    let rows = n_episodes * steps;
    let mut instances = (0..n_episodes)
        .map(|_| env.spawn(rng.random()))
        .collect::<Result<Vec<_>, _>>()?;
    let net = &task.policy.net;
    let log_std = task.policy.log_std();
    let mut state = net.initial_state(n_episodes);
    let mut obs = Array2::zeros((rows, d));
    let mut u = Array2::zeros((rows, a));
    let mut rewards = Array2::zeros((rows, M));
    let mut objectives = Array2::zeros((rows, M));
    for t in 0..steps {
        for (e, inst) in instances.iter().enumerate() {
            obs.row_mut(t * n_episodes + e).assign(&ndarray::ArrayView1::from(&inst.observe()));
        }
        let block = obs.slice(ndarray::s![t * n_episodes..(t + 1) * n_episodes, ..]);
        let means = net.step(block, &mut state)?;
        for (e, inst) in instances.iter_mut().enumerate() {
            let row = t * n_episodes + e;
            let draw = sample_action(means.row(e).as_slice().unwrap(), &log_std, &bounds, rng);
            let info = inst.step(&draw.action)?;
            u.row_mut(row).assign(&ndarray::ArrayView1::from(&draw.u));
            rewards.row_mut(row).assign(&ndarray::ArrayView1::from(&info.reward));
            objectives.row_mut(row).assign(&ndarray::ArrayView1::from(&info.objectives));
        }
    }
    let log_prob = sequence_log_probs(&task.policy, &obs, &u, n_episodes)?;
    let values = task.value.net.forward(obs.view(), n_episodes, None)?.out;
    Ok(RolloutBatch {
        episodes: n_episodes,
        steps,
        obs,
        u,
        log_prob,
        rewards,
        values,
        objectives,
    })
}

fn sequence_log_probs(
    policy: &PolicyNetwork,
    obs: &Array2<f64>,
    u: &Array2<f64>,
    batch: usize,
) -> Result<Vec<f64>, MoppoError> {
    let means = policy.net.forward(obs.view(), batch, None)?.out;
    let ls = policy.log_std();
    Ok((0..obs.nrows())
        .map(|r| log_prob(u.row(r).as_slice().unwrap(), means.row(r).as_slice().unwrap(), &ls))
        .collect())
}

/// Componentwise generalized advantage estimates over time-major rows with a
/// zero bootstrap after the last step of every episode.
pub fn vector_gae(
    rewards: &Array2<f64>,
    values: &Array2<f64>,
    episodes: usize,
    gamma: f64,
    lambda: f64,
) -> Array2<f64> {
    let rows = rewards.nrows();
    let steps = rows / episodes;
    let m = rewards.ncols();
    let mut adv = Array2::zeros((rows, m));
    for e in 0..episodes {
        for k in 0..m {
            let mut acc = 0.0;
            for t in (0..steps).rev() {
                let row = t * episodes + e;
                let next = if t + 1 < steps { values[[row + episodes, k]] } else { 0.0 };
                let delta = rewards[[row, k]] + gamma * next - values[[row, k]];
                acc = delta + gamma * lambda * acc;
                adv[[row, k]] = acc;
            }
        }
    }
    adv
}

/// One-step value targets r[t] + γ V(s[t+1]) with V = 0 past the horizon.
pub fn value_targets(rewards: &Array2<f64>, values: &Array2<f64>, episodes: usize, gamma: f64) -> Array2<f64> {
    let rows = rewards.nrows();
    let mut out = rewards.clone();
    for row in 0..rows.saturating_sub(episodes) {
        for k in 0..rewards.ncols() {
            out[[row, k]] += gamma * values[[row + episodes, k]];
        }
    }
    out
}

/// Inner product of every advantage vector with `weight`, without normalization.
pub fn scalarize_raw(adv: &Array2<f64>, weight: &[f64]) -> Vec<f64> {
    adv.rows()
        .into_iter()
        .map(|r| r.iter().zip(weight).map(|(a, w)| a * w).sum())
        .collect()
}

/// Shift and scale to zero mean and unit (population) variance.
pub fn normalize(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in x.iter_mut() {
        *v -= mean;
        if sd > 1e-12 {
            *v /= sd;
        }
    }
}

/// Weighted-sum advantages, normalized over the batch.
pub fn scalarize_advantage(adv: &Array2<f64>, weight: &[f64]) -> Vec<f64> {
    let mut s = scalarize_raw(adv, weight);
    normalize(&mut s);
    s
}

/// Clipped surrogate loss (negated, to be minimized) and its gradient
/// w.r.t. the flat policy parameters.
pub fn policy_gradient(
    policy: &PolicyNetwork,
    batch: &RolloutBatch,
    adv: &[f64],
    clip: f64,
    bptt: Option<usize>,
) -> Result<(f64, Vec<f64>, f64), MoppoError> {
    let net = &policy.net;
    let fwd = net.forward(batch.obs.view(), batch.episodes, None)?;
    let raw_ls = net.log_std_raw().expect("policy carries log-std").to_vec();
    let ls: Vec<f64> = raw_ls.iter().map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
    let n = batch.len() as f64;
    let mut d_mean = Array2::zeros(fwd.out.dim());
    let mut d_ls = vec![0.0; ls.len()];
    let mut loss = 0.0;
    let mut clipped = 0usize;
    for row in 0..batch.len() {
        let u = batch.u.row(row);
        let u = u.as_slice().unwrap();
        let mean = fwd.out.row(row);
        let mean = mean.as_slice().unwrap();
        let lp = log_prob(u, mean, &ls);
        let ratio = (lp - batch.log_prob[row]).exp();
        let a = adv[row];
        let unclipped = ratio * a;
        let clipped_obj = ratio.clamp(1.0 - clip, 1.0 + clip) * a;
        loss -= unclipped.min(clipped_obj) / n;
        if unclipped <= clipped_obj {
            let coef = -a * ratio / n;
            let (dm, dl) = log_prob_grad(u, mean, &ls);
            d_mean.row_mut(row).iter_mut().zip(&dm).for_each(|(o, g)| *o = coef * g);
            d_ls.iter_mut().zip(&dl).for_each(|(o, g)| *o += coef * g);
        } else {
            clipped += 1;
        }
    }
    let mut grad = vec![0.0; net.len()];
    net.backward(&fwd, d_mean.view(), &mut grad, bptt)?;
    let range = net.log_std_range().unwrap();
    for ((g, d), raw) in grad[range].iter_mut().zip(&d_ls).zip(&raw_ls) {
        if (LOG_STD_MIN..=LOG_STD_MAX).contains(raw) {
            *g += d;
        }
    }
    Ok((loss, grad, clipped as f64 / n))
}

/// Mean squared vector error of the critic against fixed targets, and its gradient.
pub fn value_gradient(
    value: &ValueNetwork,
    obs: &Array2<f64>,
    episodes: usize,
    targets: &Array2<f64>,
    bptt: Option<usize>,
) -> Result<(f64, Vec<f64>), MoppoError> {
    let fwd = value.net.forward(obs.view(), episodes, None)?;
    let diff = &fwd.out - targets;
    let n = obs.nrows() as f64;
    let loss = diff.mapv(|v| v * v).sum() / n;
    let d = diff.mapv(|v| 2.0 * v / n);
    let mut grad = vec![0.0; value.net.len()];
    value.net.backward(&fwd, d.view(), &mut grad, bptt)?;
    Ok((loss, grad))
}

/// Losses observed during one [`ppo_update`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss_initial: f64,
    pub value_loss_final: f64,
    pub clip_fraction: f64,
}

/// `epochs` full-batch actor and critic steps. On a non-finite loss or
/// gradient the task is restored to its state before the call.
pub fn ppo_update(task: &mut Task, batch: &RolloutBatch, config: &PpoConfig) -> Result<UpdateStats, MoppoError> {
    if batch.is_empty() {
        return Err(MoppoError::InvalidConfig("empty rollout batch".into()));
    }
    let backup = task.clone();
    let result = ppo_epochs(task, batch, config);
    if result.is_err() {
        *task = backup;
    }
    result
}

fn ppo_epochs(task: &mut Task, batch: &RolloutBatch, config: &PpoConfig) -> Result<UpdateStats, MoppoError> {
    let adv_vec = vector_gae(&batch.rewards, &batch.values, batch.episodes, config.gamma, config.lambda);
    let adv = scalarize_advantage(&adv_vec, &task.weight);
    let targets = value_targets(&batch.rewards, &batch.values, batch.episodes, config.gamma);
    let mut stats = UpdateStats::default();
    for epoch in 0..config.epochs {
        let (pl, pg, cf) = policy_gradient(&task.policy, batch, &adv, config.clip, config.bptt)?;
        let (vl, vg) = value_gradient(&task.value, &batch.obs, batch.episodes, &targets, config.bptt)?;
        if !pl.is_finite() || !vl.is_finite() {
            return Err(MoppoError::NonFiniteLoss);
        }
        if epoch == 0 {
            stats.policy_loss = pl;
            stats.value_loss_initial = vl;
        }
        stats.value_loss_final = vl;
        stats.clip_fraction = cf;
        task.policy_opt.step(&mut task.policy.net.params, &pg)?;
        task.value_opt.step(&mut task.value.net.params, &vg)?;
    }
    task.iterations += 1;
    Ok(stats)
}

/// Telemetry line for one PPO iteration of one task.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TelemetryRow {
    pub generation: u64,
    pub task: u64,
    pub iteration: u64,
    pub scalarized_return: f64,
    pub rate_return: f64,
    pub energy_return: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    pub failed: bool,
}

/// Shared inputs of a training phase.
#[derive(Debug, Clone)]
pub struct TrainContext<'a, E: TaskEnv> {
    pub env: &'a E,
    pub ppo: &'a PpoConfig,
    pub master_seed: u64,
    pub generation: u64,
}

/// Result of [`lstm_moppo`]: trained tasks, one offspring record per task
/// per iteration (task-major order), and telemetry.
#[derive(Debug, Clone)]
pub struct MoppoOutput<R> {
    pub tasks: Vec<Task>,
    pub offspring: Vec<R>,
    pub telemetry: Vec<TelemetryRow>,
}

/// One PPO iteration of one task with its keyed RNG substream.
pub fn train_iteration<E: TaskEnv>(
    task: &mut Task,
    ctx: &TrainContext<'_, E>,
    iteration: u64,
) -> Result<TelemetryRow, MoppoError> {
    let mut rng = seed::substream(ctx.master_seed, "train", &[ctx.generation, task.id, iteration]);
    let batch = collect_rollouts(task, ctx.env, ctx.ppo.episodes, &mut rng)?;
    let ret = batch.mean_return();
    let (stats, failed) = match ppo_update(task, &batch, ctx.ppo) {
        Ok(s) => (s, false),
        Err(MoppoError::NonFiniteLoss) | Err(MoppoError::Neural(NeuralError::NonFiniteGradient(_))) => {
            log::warn!("task {} iteration {iteration}: non-finite update rolled back", task.id);
            (UpdateStats::default(), true)
        }
        Err(e) => return Err(e),
    };
    Ok(TelemetryRow {
        generation: ctx.generation,
        task: task.id,
        iteration,
        scalarized_return: task.scalarize(ret),
        rate_return: ret[0],
        energy_return: ret[1],
        policy_loss: stats.policy_loss,
        value_loss: stats.value_loss_final,
        clip_fraction: stats.clip_fraction,
        failed,
    })
}

/// Train every task for `n_iter` iterations in parallel, recording
/// `snapshot(task, iteration)` after each iteration.
pub fn lstm_moppo<E, R, F>(
    tasks: Vec<Task>,
    n_iter: usize,
    ctx: &TrainContext<'_, E>,
    snapshot: F,
) -> Result<MoppoOutput<R>, MoppoError>
where
    E: TaskEnv,
    R: Send,
    F: Fn(&Task, u64) -> Result<R, MoppoError> + Sync,
{
    if tasks.is_empty() || n_iter == 0 {
        return Err(MoppoError::InvalidConfig("lstm_moppo needs tasks and n_iter >= 1".into()));
    }
    let per_task: Vec<Result<TrainedTask<R>, MoppoError>> = tasks
        .into_par_iter()
        .map(|task| train_task(task, n_iter, ctx, &snapshot))
        .collect();
    let mut out = MoppoOutput {
        tasks: Vec::new(),
        offspring: Vec::new(),
        telemetry: Vec::new(),
    };
    for r in per_task {
        let (t, recs, tel) = r?;
        out.tasks.push(t);
        out.offspring.extend(recs);
        out.telemetry.extend(tel);
    }
    Ok(out)
}

/// A task after training, its per-iteration records and telemetry.
pub type TrainedTask<R> = (Task, Vec<R>, Vec<TelemetryRow>);

/// Sequentially train one task for `n_iter` iterations.
pub fn train_task<E, R, F>(
    mut task: Task,
    n_iter: usize,
    ctx: &TrainContext<'_, E>,
    snapshot: &F,
) -> Result<TrainedTask<R>, MoppoError>
where
    E: TaskEnv,
    F: Fn(&Task, u64) -> Result<R, MoppoError>,
{
    let mut recs = Vec::with_capacity(n_iter);
    let mut tel = Vec::with_capacity(n_iter);
    for it in 0..n_iter as u64 {
        tel.push(train_iteration(&mut task, ctx, it)?);
        recs.push(snapshot(&task, it)?);
    }
    Ok((task, recs, tel))
}

/// Deep copy of a task's networks after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub task_id: u64,
    pub iteration: u64,
    pub weight: [f64; M],
    pub policy: PolicyNetwork,
    pub value: ValueNetwork,
}

impl Snapshot {
    pub fn of(task: &Task, iteration: u64) -> Self {
        Self {
            task_id: task.id,
            iteration,
            weight: task.weight,
            policy: task.policy.clone(),
            value: task.value.clone(),
        }
    }
}

/// Mean per-episode reward and objective sums of the deterministic
/// (distribution-mean) policy over the given episode seeds.
pub fn evaluate_mean_policy<E: TaskEnv>(
    policy: &PolicyNetwork,
    env: &E,
    seeds: &[u64],
) -> Result<([f64; M], [f64; M]), MoppoError> {
    let n = seeds.len();
    if n == 0 {
        return Err(MoppoError::InvalidConfig("evaluation needs at least one seed".into()));
    }
    let bounds = env.action_bounds();
    let mut instances = seeds.iter().map(|&s| env.spawn(s)).collect::<Result<Vec<_>, _>>()?;
    let mut state = policy.net.initial_state(n);
    let mut obs = Array2::zeros((n, env.observation_len()));
    let mut reward = [0.0; M];
    let mut objectives = [0.0; M];
    for _ in 0..env.horizon() {
        for (e, inst) in instances.iter().enumerate() {
            obs.row_mut(e).assign(&ndarray::ArrayView1::from(&inst.observe()));
        }
        let means = policy.net.step(obs.view(), &mut state)?;
        for (e, inst) in instances.iter_mut().enumerate() {
            let action: Vec<f64> = means
                .row(e)
                .iter()
                .zip(&bounds)
                .map(|(&m, &(lo, hi))| squash_to_bounds(m, lo, hi))
                .collect();
            let info = inst.step(&action)?;
            for k in 0..M {
                reward[k] += info.reward[k];
                objectives[k] += info.objectives[k];
            }
        }
    }
    Ok((reward.map(|v| v / n as f64), objectives.map(|v| v / n as f64)))
}

/// One-step bandit with a single action in [-1, 1]: the first reward is
/// `1 − (a − target)²`, the second `−a²`. Used to sanity-check learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyBandit {
    pub target: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyBanditEpisode {
    target: f64,
    done: bool,
}

impl EnvInstance for ToyBanditEpisode {
    fn observe(&self) -> Vec<f64> {
        vec![1.0]
    }

    fn step(&mut self, action: &[f64]) -> Result<StepInfo, MoppoError> {
        if self.done {
            return Err(EnvError::EpisodeFinished.into());
        }
        self.done = true;
        let a = action[0];
        let r = [1.0 - (a - self.target).powi(2), -a * a];
        Ok(StepInfo {
            reward: r,
            objectives: r,
        })
    }
}

impl TaskEnv for ToyBandit {
    type Instance = ToyBanditEpisode;

    fn spawn(&self, _seed: u64) -> Result<ToyBanditEpisode, MoppoError> {
        Ok(ToyBanditEpisode {
            target: self.target,
            done: false,
        })
    }

    fn observation_len(&self) -> usize {
        1
    }

    fn action_bounds(&self) -> Vec<(f64, f64)> {
        vec![(-1.0, 1.0)]
    }

    fn horizon(&self) -> usize {
        1
    }
}
