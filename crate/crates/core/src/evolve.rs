//! Evolutionary outer loop: warm-up, performance-buffer population update,
//! hyper-sphere task selection and the external Pareto archive.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::env::{EnvConfig, NUM_OBJECTIVES};
use crate::metrics::{self, dominates, MetricsError};
use crate::moppo::{
    evaluate_mean_policy, train_task, MoppoError, NetworkConfig, PpoConfig, Task, TelemetryRow, TrainContext,
};
use crate::neural::{Checkpoint, Net, NeuralError, PolicyNetwork, ValueNetwork};
use crate::seed;

const M: usize = NUM_OBJECTIVES;

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("invalid evolution config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Moppo(#[from] MoppoError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvolveError + '_ {
    move |source| EvolveError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvolutionConfig {
    /// Number of tasks n (and weight vectors).
    pub n_tasks: usize,
    /// Generations G_max after warm-up.
    pub generations: usize,
    pub n_warm: usize,
    pub n_evo: usize,
    pub b_num: usize,
    pub b_size: usize,
    pub k_can: usize,
    /// Roulette numerator c.
    pub c: f64,
    /// Angular sectors around the candidate centroid.
    pub sectors: usize,
    /// Evaluation episodes per policy.
    pub n_eval: usize,
    /// Pick the best task per weight vector instead of sampling by sector sparsity.
    #[serde(skip)]
    pub disable_hypersphere: bool,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            n_tasks: 15,
            generations: 100,
            n_warm: 60,
            n_evo: 10,
            b_num: 50,
            b_size: 2,
            k_can: 5,
            c: 2.0,
            sectors: 8,
            n_eval: 3,
            disable_hypersphere: false,
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let bad = |m: &str| Err(EvolveError::InvalidConfig(m.into()));
        if self.n_tasks < 2 {
            return bad("n_tasks must be >= 2");
        }
        if self.n_warm == 0 || self.n_evo == 0 {
            return bad("n_warm and n_evo must be >= 1");
        }
        if self.b_num < 2 || self.b_size == 0 {
            return bad("b_num must be >= 2 and b_size >= 1");
        }
        if self.k_can == 0 {
            return bad("k_can must be >= 1");
        }
        if !(self.c > 1.0) {
            return bad("c must be > 1");
        }
        if self.sectors == 0 || self.n_eval == 0 {
            return bad("sectors and n_eval must be >= 1");
        }
        Ok(())
    }
}

/// `n` evenly spaced weights `(i/(n−1), 1 − i/(n−1))`.
pub fn make_weight_vectors(n: usize) -> Vec<[f64; M]> {
    assert!(n >= 2, "need at least two weight vectors");
    (0..n)
        .map(|i| {
            let a = i as f64 / (n - 1) as f64;
            [a, 1.0 - a]
        })
        .collect()
}

/// A trained policy as seen by the outer loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub snapshot: String,
    pub task_id: u64,
    pub generation: u64,
    pub iteration: u64,
    pub weight: [f64; M],
    /// (mean episode rate sum, −mean episode energy), both maximized.
    pub objectives: [f64; M],
}

/// Content-addressed on-disk store of actor/critic pairs.
#[derive(Debug, Clone)]
pub struct SnapshotStore {
    dir: PathBuf,
}

impl SnapshotStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, EvolveError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.ckpt"))
    }

    pub fn put(&self, ckpt: &Checkpoint) -> Result<String, EvolveError> {
        let bytes = ckpt.to_bytes();
        let digest = Sha256::digest(&bytes);
        let id: String = digest[..16].iter().map(|b| format!("{b:02x}")).collect();
        let path = self.path(&id);
        if !path.exists() {
            let tmp = self.dir.join(format!("{id}.tmp"));
            std::fs::write(&tmp, &bytes).map_err(io_err(&tmp))?;
            std::fs::rename(&tmp, &path).map_err(io_err(&path))?;
        }
        Ok(id)
    }

    pub fn get(&self, id: &str) -> Result<Checkpoint, EvolveError> {
        Ok(crate::neural::read_checkpoint(&self.path(id))?)
    }

    /// Load the networks of a snapshot.
    pub fn networks(&self, id: &str) -> Result<(PolicyNetwork, ValueNetwork), EvolveError> {
        let ck = self.get(id)?;
        let take = |name: &str| -> Result<Net, EvolveError> {
            ck.net(name)
                .cloned()
                .ok_or_else(|| NeuralError::Checkpoint(format!("snapshot {id} lacks '{name}'")).into())
        };
        Ok((PolicyNetwork { net: take("policy")? }, ValueNetwork { net: take("value")? }))
    }

    /// Delete every snapshot not in `keep`.
    pub fn retain(&self, keep: &HashSet<&str>) -> Result<usize, EvolveError> {
        let mut removed = 0;
        for entry in std::fs::read_dir(&self.dir).map_err(io_err(&self.dir))? {
            let path = entry.map_err(io_err(&self.dir))?.path();
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            if path.extension().is_some_and(|e| e == "ckpt") && !keep.contains(stem) {
                std::fs::remove_file(&path).map_err(io_err(&path))?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}

/// Checkpoint holding a task's networks and identifying metadata.
pub fn task_checkpoint(task: &Task, generation: u64, iteration: u64) -> Checkpoint {
    Checkpoint {
        metadata: serde_json::json!({
            "task_id": task.id,
            "generation": generation,
            "iteration": iteration,
            "weight": task.weight,
        }),
        nets: vec![
            ("policy".into(), task.policy.net.clone()),
            ("value".into(), task.value.net.clone()),
        ],
    }
}

/// Evaluation episode seeds shared by every policy of a run.
pub fn eval_seeds(master: u64, n_eval: usize) -> Vec<u64> {
    (0..n_eval as u64).map(|k| seed::derive_u64(master, "eval", &[k])).collect()
}

/// Objective vector F(π) of the deterministic mean policy.
pub fn evaluate_policy(policy: &PolicyNetwork, env: &EnvConfig, seeds: &[u64]) -> Result<[f64; M], EvolveError> {
    Ok(evaluate_mean_policy(policy, env, seeds)?.1)
}

/// Componentwise minimum of `points` minus `margin` of each range.
pub fn reference_origin(points: &[[f64; M]], margin: f64) -> [f64; M] {
    std::array::from_fn(|k| {
        let lo = points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
        lo - margin * (hi - lo)
    })
}

/// Min-max scaling fitted on a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinMax {
    lo: [f64; M],
    span: [f64; M],
}

impl MinMax {
    pub fn fit(points: &[[f64; M]]) -> Self {
        let lo = std::array::from_fn(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min));
        let span = std::array::from_fn(|k| {
            let hi = points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max);
            let s = hi - lo[k];
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        });
        Self { lo, span }
    }

    pub fn apply(&self, p: [f64; M]) -> [f64; M] {
        std::array::from_fn(|k| (p[k] - self.lo[k]) / self.span[k])
    }
}

fn dot(a: &[f64; M], b: &[f64; M]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Buffer whose direction has the largest normalized projection of `f_ref`.
pub fn buffer_index(f_ref: [f64; M], directions: &[[f64; M]]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (j, w) in directions.iter().enumerate() {
        let v = dot(w, &f_ref) / dot(w, w).sqrt();
        if v > best_v {
            best_v = v;
            best = j;
        }
    }
    best
}

/// Performance-buffer update on points in a fixed space: returns the kept
/// indices grouped by buffer, each buffer ordered by decreasing distance
/// from `z_ref`.
pub fn tpu_points(points: &[[f64; M]], z_ref: [f64; M], b_num: usize, b_size: usize) -> Vec<Vec<usize>> {
    let directions = make_weight_vectors(b_num);
    let mut buffers: Vec<Vec<(f64, usize)>> = vec![Vec::new(); b_num];
    for (i, p) in points.iter().enumerate() {
        if !p.iter().all(|v| v.is_finite()) {
            continue;
        }
        let f_ref: [f64; M] = std::array::from_fn(|k| p[k] - z_ref[k]);
        let dist = dot(&f_ref, &f_ref).sqrt();
        buffers[buffer_index(f_ref, &directions)].push((dist, i));
    }
    buffers
        .into_iter()
        .map(|mut b| {
            b.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            b.truncate(b_size);
            b.into_iter().map(|(_, i)| i).collect()
        })
        .collect()
}

/// Task population update over `P ∪ P'` in min-max normalized objective space.
pub fn tpu(candidates: &[Member], z_ref: [f64; M], b_num: usize, b_size: usize) -> Vec<Member> {
    let raw: Vec<[f64; M]> = candidates.iter().map(|m| m.objectives).collect();
    let scale = MinMax::fit(&raw);
    let pts: Vec<[f64; M]> = raw.iter().map(|&p| scale.apply(p)).collect();
    tpu_points(&pts, scale.apply(z_ref), b_num, b_size)
        .into_iter()
        .flatten()
        .map(|i| candidates[i].clone())
        .collect()
}

/// Indices of the `k` best points under `weight`, ties broken by index.
pub fn top_candidates(points: &[[f64; M]], weight: &[f64; M], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| dot(weight, &points[b]).total_cmp(&dot(weight, &points[a])).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Sector of each point among `sectors` equal angles around the centroid.
pub fn sector_of(points: &[[f64; M]], sectors: usize) -> Vec<usize> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = points.iter().map(|p| p[1]).sum::<f64>() / n;
    let width = 2.0 * PI / sectors as f64;
    points
        .iter()
        .map(|p| {
            let a = (p[1] - cy).atan2(p[0] - cx) + PI;
            ((a / width) as usize).min(sectors - 1)
        })
        .collect()
}

/// Roulette probabilities c/N_sector, normalized over the candidates.
pub fn selection_probabilities(points: &[[f64; M]], sectors: usize, c: f64) -> Vec<f64> {
    let s = sector_of(points, sectors);
    let mut counts = vec![0usize; sectors];
    s.iter().for_each(|&k| counts[k] += 1);
    let w: Vec<f64> = s.iter().map(|&k| c / counts[k] as f64).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn roulette<R: rand::Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if r < acc {
            return i;
        }
    }
    p.len() - 1
}

/// For each weight vector choose one population index: the top `k_can`
/// candidates under that weight are sampled with sparse sectors favored.
pub fn hypersphere_select<R: rand::Rng + ?Sized>(
    weights: &[[f64; M]],
    points: &[[f64; M]],
    k_can: usize,
    c: f64,
    sectors: usize,
    rng: &mut R,
) -> Vec<usize> {
    weights
        .iter()
        .map(|w| {
            let cand = top_candidates(points, w, k_can);
            let cp: Vec<[f64; M]> = cand.iter().map(|&i| points[i]).collect();
            let p = selection_probabilities(&cp, sectors, c);
            cand[roulette(&p, rng)]
        })
        .collect()
}

/// Best population index per weight vector.
pub fn best_per_weight(weights: &[[f64; M]], points: &[[f64; M]]) -> Vec<usize> {
    weights.iter().map(|w| top_candidates(points, w, 1)[0]).collect()
}

/// Insert each candidate that no archive member dominates or equals, and
/// evict members it dominates.
pub fn update_ep(ep: &mut Vec<Member>, candidates: &[Member]) {
    for c in candidates {
        if !c.objectives.iter().all(|v| v.is_finite()) {
            log::warn!("skipping snapshot {} with non-finite objectives", c.snapshot);
            continue;
        }
        let blocked = ep
            .iter()
            .any(|e| e.objectives == c.objectives || dominates(&e.objectives, &c.objectives).unwrap_or(false));
        if blocked {
            continue;
        }
        ep.retain(|e| !dominates(&c.objectives, &e.objectives).unwrap_or(false));
        ep.push(c.clone());
    }
}

/// Everything needed to execute one run.
#[derive(Debug, Clone)]
pub struct RunSpec<'a> {
    pub env: &'a EnvConfig,
    pub ppo: &'a PpoConfig,
    pub network: &'a NetworkConfig,
    pub evolution: &'a EvolutionConfig,
    pub master_seed: u64,
    pub out_dir: &'a Path,
    pub algorithm: &'a str,
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub generation: u64,
    pub algorithm: String,
    pub igd: f64,
    pub hv: f64,
    pub ep_size: usize,
    pub ref_f1: f64,
    pub ref_f2: f64,
    pub wall_time_s: f64,
}

/// One row of `ep_gen{g}.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpRow {
    pub snapshot: String,
    pub task_id: u64,
    pub generation: u64,
    pub iteration: u64,
    pub weight_f1: f64,
    pub weight_f2: f64,
    pub f1: f64,
    pub f2: f64,
}

impl From<&Member> for EpRow {
    fn from(m: &Member) -> Self {
        Self {
            snapshot: m.snapshot.clone(),
            task_id: m.task_id,
            generation: m.generation,
            iteration: m.iteration,
            weight_f1: m.weight[0],
            weight_f2: m.weight[1],
            f1: m.objectives[0],
            f2: m.objectives[1],
        }
    }
}

impl EpRow {
    pub fn member(&self) -> Member {
        Member {
            snapshot: self.snapshot.clone(),
            task_id: self.task_id,
            generation: self.generation,
            iteration: self.iteration,
            weight: [self.weight_f1, self.weight_f2],
            objectives: [self.f1, self.f2],
        }
    }
}

/// Archive rows sorted by objectives, then snapshot id.
pub fn sorted_rows(ep: &[Member]) -> Vec<EpRow> {
    let mut rows: Vec<EpRow> = ep.iter().map(EpRow::from).collect();
    rows.sort_by(|a, b| {
        a.f1.total_cmp(&b.f1)
            .then(a.f2.total_cmp(&b.f2))
            .then(a.snapshot.cmp(&b.snapshot))
    });
    rows
}

pub fn write_ep_csv(path: &Path, ep: &[Member]) -> Result<(), EvolveError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in sorted_rows(ep) {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_ep_csv(path: &Path) -> Result<Vec<Member>, EvolveError> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize::<EpRow>()
        .map(|row| Ok(row?.member()))
        .collect()
}

pub fn ep_csv_name(generation: u64) -> String {
    format!("ep_gen{generation}.csv")
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub archive: Vec<Member>,
    /// Archive after warm-up (index 0) and after every generation.
    pub history: Vec<Vec<Member>>,
    pub metrics: Vec<MetricsRow>,
    /// Every objective vector evaluated during the run.
    pub evaluated: Vec<[f64; M]>,
}

struct Phase<'a> {
    spec: &'a RunSpec<'a>,
    store: &'a SnapshotStore,
    seeds: &'a [u64],
}

impl Phase<'_> {
    fn fresh_task(&self, id: u64, weight: [f64; M], tag: &str, generation: u64, slot: u64) -> Task {
        let mut rng = seed::substream(self.spec.master_seed, tag, &[generation, slot]);
        Task::new(id, weight, self.spec.env, self.spec.network, self.spec.ppo, &mut rng)
    }

    /// Train tasks in parallel; a task that fails is replaced once by a
    /// fresh random task with the same weight.
    fn train(&self, tasks: Vec<Task>, n_iter: usize, generation: u64) -> Result<(Vec<Member>, Vec<TelemetryRow>), EvolveError> {
        let ctx = TrainContext {
            env: self.spec.env,
            ppo: self.spec.ppo,
            master_seed: self.spec.master_seed,
            generation,
        };
        let record = |task: &Task, it: u64| -> Result<Member, MoppoError> {
            let id = self
                .store
                .put(&task_checkpoint(task, generation, it))
                .map_err(|e| MoppoError::Snapshot(e.to_string()))?;
            let objectives = evaluate_mean_policy(&task.policy, self.spec.env, self.seeds)?.1;
            Ok(Member {
                snapshot: id,
                task_id: task.id,
                generation,
                iteration: it,
                weight: task.weight,
                objectives,
            })
        };
        let results: Vec<Result<(Vec<Member>, Vec<TelemetryRow>), EvolveError>> = tasks
            .into_par_iter()
            .enumerate()
            .map(|(slot, task)| {
                let (id, weight) = (task.id, task.weight);
                match train_task(task, n_iter, &ctx, &record) {
                    Ok((_, m, t)) => Ok((m, t)),
                    Err(e) => {
                        log::warn!("task {id} failed in generation {generation}: {e}; replacing");
                        let fresh = self.fresh_task(id, weight, "replace", generation, slot as u64);
                        let (_, m, t) = train_task(fresh, n_iter, &ctx, &record)?;
                        Ok((m, t))
                    }
                }
            })
            .collect();
        let mut members = Vec::new();
        let mut telemetry = Vec::new();
        for r in results {
            let (m, t) = r?;
            members.extend(m);
            telemetry.extend(t);
        }
        Ok((members, telemetry))
    }
}

fn append_telemetry(path: &Path, rows: &[TelemetryRow], header: bool) -> Result<(), EvolveError> {
    let f = std::fs::OpenOptions::new()
        .create(true)
        .write(true)
        .append(!header)
        .truncate(header)
        .open(path)
        .map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().has_headers(header).from_writer(f);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

/// Per-generation metrics of an archive history against a common reference.
pub fn history_metrics(
    history: &[Vec<Member>],
    reference_front: &[Vec<f64>],
    reference_point: &[f64],
    algorithm: &str,
    wall: &[f64],
) -> Result<Vec<MetricsRow>, EvolveError> {
    history
        .iter()
        .enumerate()
        .map(|(g, ep)| {
            let front: Vec<Vec<f64>> = ep.iter().map(|m| m.objectives.to_vec()).collect();
            Ok(MetricsRow {
                generation: g as u64,
                algorithm: algorithm.to_string(),
                igd: metrics::igd(&front, reference_front)?,
                hv: metrics::hypervolume(&front, reference_point)?,
                ep_size: ep.len(),
                ref_f1: reference_point[0],
                ref_f2: reference_point[1],
                wall_time_s: wall.get(g).copied().unwrap_or(f64::NAN),
            })
        })
        .collect()
}

pub fn write_metrics_csv(path: &Path, rows: &[MetricsRow]) -> Result<(), EvolveError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(io_err(path))
}

pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const METRICS_FILE: &str = "metrics.csv";
pub const TELEMETRY_FILE: &str = "telemetry.csv";

/// Warm-up followed by `generations` evolutionary generations. Writes
/// `ep_gen{g}.csv`, `telemetry.csv`, `metrics.csv` and the snapshot
/// directory under `spec.out_dir`.
pub fn run(spec: &RunSpec<'_>) -> Result<RunOutput, EvolveError> {
    let evo = spec.evolution;
    evo.validate()?;
    spec.env.validate().map_err(MoppoError::from)?;
    spec.ppo.validate()?;
    let out = spec.out_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let store = SnapshotStore::open(out.join(CHECKPOINT_DIR))?;
    let seeds = eval_seeds(spec.master_seed, evo.n_eval);
    let phase = Phase {
        spec,
        store: &store,
        seeds: &seeds,
    };
    let telemetry_path = out.join(TELEMETRY_FILE);
    let started = Instant::now();
    let weights = make_weight_vectors(evo.n_tasks);

    let tasks: Vec<Task> = weights
        .iter()
        .enumerate()
        .map(|(i, &w)| phase.fresh_task(i as u64, w, "init", 0, i as u64))
        .collect();
    let (offspring, tel) = phase.train(tasks, evo.n_warm, 0)?;
    append_telemetry(&telemetry_path, &tel, true)?;
    let mut evaluated: Vec<[f64; M]> = offspring.iter().map(|m| m.objectives).collect();
    let mut archive = Vec::new();
    update_ep(&mut archive, &offspring);
    write_ep_csv(&out.join(ep_csv_name(0)), &archive)?;
    let mut history = vec![archive.clone()];
    let mut wall = vec![started.elapsed().as_secs_f64()];
    let mut population: Vec<Member> = Vec::new();
    let mut offspring = offspring;
    let mut next_id = evo.n_tasks as u64;

    for g in 1..=evo.generations as u64 {
        let z_ref = reference_origin(&evaluated, 0.05);
        let mut pool = std::mem::take(&mut population);
        pool.extend(offspring.drain(..));
        population = tpu(&pool, z_ref, evo.b_num, evo.b_size);
        let raw: Vec<[f64; M]> = population.iter().map(|m| m.objectives).collect();
        let scale = MinMax::fit(&raw);
        let pts: Vec<[f64; M]> = raw.iter().map(|&p| scale.apply(p)).collect();
        let chosen = if evo.disable_hypersphere {
            best_per_weight(&weights, &pts)
        } else {
            let mut rng = seed::substream(spec.master_seed, "select", &[g]);
            hypersphere_select(&weights, &pts, evo.k_can, evo.c, evo.sectors, &mut rng)
        };
        let mut tasks = Vec::with_capacity(chosen.len());
        for (slot, (&j, &w)) in chosen.iter().zip(&weights).enumerate() {
            let (policy, value) = store.networks(&population[j].snapshot)?;
            tasks.push(Task::from_networks(next_id + slot as u64, w, policy, value, spec.ppo));
        }
        next_id += chosen.len() as u64;
        let (new_offspring, tel) = phase.train(tasks, evo.n_evo, g)?;
        append_telemetry(&telemetry_path, &tel, false)?;
        evaluated.extend(new_offspring.iter().map(|m| m.objectives));
        update_ep(&mut archive, &new_offspring);
        offspring = new_offspring;
        write_ep_csv(&out.join(ep_csv_name(g)), &archive)?;
        history.push(archive.clone());
        wall.push(started.elapsed().as_secs_f64());

        let keep: HashSet<&str> = population
            .iter()
            .chain(&offspring)
            .chain(&archive)
            .map(|m| m.snapshot.as_str())
            .collect();
        store.retain(&keep)?;
        log::info!(
            "{}: generation {g} archive {} population {} ({:.1}s)",
            spec.algorithm,
            archive.len(),
            population.len(),
            started.elapsed().as_secs_f64()
        );
    }
    let keep: HashSet<&str> = archive.iter().map(|m| m.snapshot.as_str()).collect();
    store.retain(&keep)?;

    let all: Vec<Vec<f64>> = history.iter().flatten().map(|m| m.objectives.to_vec()).collect();
    let ref_front = metrics::reference_front(&[all.clone()]);
    let ref_point = metrics::reference_point(&all, 0.1)?;
    let rows = history_metrics(&history, &ref_front, &ref_point, spec.algorithm, &wall)?;
    write_metrics_csv(&out.join(METRICS_FILE), &rows)?;
    Ok(RunOutput {
        archive,
        history,
        metrics: rows,
        evaluated,
    })
}

/// Objective vectors of `count` policies with random parameters, evaluated
/// on the run's evaluation seeds. The head is drawn at full fan-in scale so
/// the policies act diversely.
pub fn random_policy_objectives(
    env: &EnvConfig,
    network: &NetworkConfig,
    count: usize,
    master_seed: u64,
    n_eval: usize,
) -> Result<Vec<[f64; M]>, EvolveError> {
    let seeds = eval_seeds(master_seed, n_eval);
    let spec = network.policy_spec(env.observation_len(), env.action_len());
    (0..count as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = seed::substream(master_seed, "random-baseline", &[k]);
            let policy = PolicyNetwork {
                net: Net::init(spec.clone(), 1.0, PolicyNetwork::LOG_STD_INIT, &mut rng),
            };
            evaluate_policy(&policy, env, &seeds)
        })
        .collect()
}
