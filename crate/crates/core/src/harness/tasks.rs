use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::env::{ActionVector, EnvConfig, Environment};
use crate::evolve::{self, eval_seeds, read_ep_csv, Member, RunOutput, RunSpec, CHECKPOINT_DIR};
use crate::metrics;
use crate::moppo::evaluate_mean_policy;
use crate::neural::{read_checkpoint, squash_to_bounds, PolicyNetwork};

use super::{ExperimentConfig, HarnessError, RunManifest, MANIFEST_FILE};

/// Write the manifest, then run warm-up and evolution into `cfg.output_dir`.
pub fn train(cfg: &ExperimentConfig, threads: usize) -> Result<RunOutput, HarnessError> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| HarnessError::Runtime(format!("{}: {e}", out.display())))?;
    RunManifest::new(cfg, threads).write(out)?;
    let env = cfg.resolved_env();
    let network = cfg.resolved_network();
    let evolution = cfg.resolved_evolution();
    let spec = RunSpec {
        env: &env,
        ppo: &cfg.ppo,
        network: &network,
        evolution: &evolution,
        master_seed: cfg.seed,
        out_dir: out,
        algorithm: cfg.ablation.algorithm_tag(),
    };
    evolve::run(&spec).map_err(HarnessError::runtime)
}

/// Which policy `evaluate` rolls out.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    Checkpoint(PathBuf),
    /// Highest-rate member of the latest archive in a run directory.
    BestF1(PathBuf),
    /// Every UAV holds position at unit weight.
    Hover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeReport {
    pub seed: u64,
    pub f1: f64,
    pub f2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub source: String,
    pub episodes: Vec<EpisodeReport>,
    pub mean_f1: f64,
    pub mean_f2: f64,
}

/// Load the actor of a checkpoint and check it fits `env`.
pub fn load_policy(path: &Path, env: &EnvConfig) -> Result<PolicyNetwork, HarnessError> {
    let ck = read_checkpoint(path).map_err(|e| HarnessError::CheckpointMismatch(format!("{}: {e}", path.display())))?;
    let net = ck
        .net("policy")
        .cloned()
        .ok_or_else(|| HarnessError::CheckpointMismatch(format!("{} has no policy network", path.display())))?;
    let spec = net.spec();
    if spec.input != env.observation_len() || spec.output != env.action_len() {
        return Err(HarnessError::CheckpointMismatch(format!(
            "policy maps {} -> {}, environment needs {} -> {}",
            spec.input,
            spec.output,
            env.observation_len(),
            env.action_len()
        )));
    }
    Ok(PolicyNetwork { net })
}

/// Archive files `ep_gen{g}.csv` of a run directory, by generation.
pub fn archive_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>, HarnessError> {
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::Runtime(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(HarnessError::runtime)?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(g) = name.strip_prefix("ep_gen").and_then(|r| r.strip_suffix(".csv")) {
            if let Ok(g) = g.parse::<u64>() {
                files.push((g, path));
            }
        }
    }
    files.sort();
    Ok(files)
}

/// Member of the final archive with the largest rate objective, and its
/// checkpoint path.
pub fn select_best_f1(run_dir: &Path) -> Result<(Member, PathBuf), HarnessError> {
    let files = archive_files(run_dir)?;
    let (_, last) = files.last().ok_or_else(|| HarnessError::EmptyDirectory(run_dir.to_path_buf()))?;
    let ep = read_ep_csv(last).map_err(HarnessError::runtime)?;
    let best = ep
        .into_iter()
        .reduce(|a, b| if b.objectives[0] > a.objectives[0] { b } else { a })
        .ok_or_else(|| HarnessError::EmptyDirectory(run_dir.to_path_buf()))?;
    let path = run_dir.join(CHECKPOINT_DIR).join(format!("{}.ckpt", best.snapshot));
    Ok((best, path))
}

fn hover_episode(env: &EnvConfig, seed: u64) -> Result<[f64; 2], HarnessError> {
    let mut e = Environment::reset(env, seed).map_err(HarnessError::runtime)?;
    let action = ActionVector::hover(env.n_uav, 1.0);
    let mut f = [0.0; 2];
    while !e.is_done() {
        let out = e.step(&action).map_err(HarnessError::runtime)?;
        f[0] += out.rate;
        f[1] -= out.energy;
    }
    Ok(f)
}

/// Objective vector of a policy per evaluation episode and on average. The
/// episode seeds follow the run's evaluation rule for `seed`, so a run's
/// own seed and `n_eval` episodes reproduce the archived objectives.
pub fn evaluate(cfg: &ExperimentConfig, source: &PolicySource, episodes: usize, seed: u64) -> Result<EvalReport, HarnessError> {
    if episodes == 0 {
        return Err(HarnessError::InvalidConfig("episodes must be >= 1".into()));
    }
    let env = cfg.resolved_env();
    let seeds = eval_seeds(seed, episodes);
    let (label, per_episode, mean) = match source {
        PolicySource::Hover => {
            let per = seeds.iter().map(|&s| hover_episode(&env, s)).collect::<Result<Vec<_>, _>>()?;
            let n = per.len() as f64;
            let mean = [per.iter().map(|f| f[0]).sum::<f64>() / n, per.iter().map(|f| f[1]).sum::<f64>() / n];
            ("hover".to_string(), per, mean)
        }
        PolicySource::Checkpoint(_) | PolicySource::BestF1(_) => {
            let path = match source {
                PolicySource::Checkpoint(p) => p.clone(),
                PolicySource::BestF1(dir) => select_best_f1(dir)?.1,
                PolicySource::Hover => unreachable!(),
            };
            let policy = load_policy(&path, &env)?;
            let per = seeds
                .iter()
                .map(|&s| evaluate_mean_policy(&policy, &env, &[s]).map(|r| r.1))
                .collect::<Result<Vec<_>, _>>()
                .map_err(HarnessError::runtime)?;
            let mean = evaluate_mean_policy(&policy, &env, &seeds).map_err(HarnessError::runtime)?.1;
            (path.display().to_string(), per, mean)
        }
    };
    Ok(EvalReport {
        source: label,
        episodes: seeds
            .iter()
            .zip(per_episode)
            .map(|(&seed, f)| EpisodeReport { seed, f1: f[0], f2: f[1] })
            .collect(),
        mean_f1: mean[0],
        mean_f2: mean[1],
    })
}

/// One line per slot of an episode driven by `policy`, or by hovering.
pub fn write_env_trace<W: Write>(
    env: &EnvConfig,
    seed: u64,
    policy: Option<&PolicyNetwork>,
    mut out: W,
) -> Result<usize, HarnessError> {
    let mut e = Environment::reset(env, seed).map_err(HarnessError::runtime)?;
    let bounds = env.action_bounds();
    let mut state = policy.map(|p| p.net.initial_state(1));
    let mut lines = 0;
    while !e.is_done() {
        let action = match (policy, state.as_mut()) {
            (Some(p), Some(st)) => {
                let obs = Array2::from_shape_vec((1, env.observation_len()), e.observe()).map_err(HarnessError::runtime)?;
                let mean = p.net.step(obs.view(), st).map_err(HarnessError::runtime)?;
                let flat: Vec<f64> = mean.row(0).iter().zip(&bounds).map(|(&m, &(lo, hi))| squash_to_bounds(m, lo, hi)).collect();
                ActionVector::from_flat(&flat, env.n_uav).map_err(HarnessError::runtime)?
            }
            _ => ActionVector::hover(env.n_uav, 1.0),
        };
        let outcome = e.step(&action).map_err(HarnessError::runtime)?;
        let line = serde_json::to_string(&e.record(&action, &outcome)).map_err(HarnessError::runtime)?;
        writeln!(out, "{line}").map_err(HarnessError::runtime)?;
        lines += 1;
    }
    Ok(lines)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub algorithm: String,
    pub generation: u64,
    pub igd: f64,
    pub hv: f64,
    pub ep_size: usize,
}

/// Metrics of several runs against one shared reference front and point.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub reference_point: Vec<f64>,
    pub reference_front: Vec<Vec<f64>>,
    pub rows: Vec<SummaryRow>,
}

impl RunSummary {
    /// CSV with the reference point as a leading `#` comment line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), HarnessError> {
        writeln!(out, "# reference_point={},{}", self.reference_point[0], self.reference_point[1]).map_err(HarnessError::runtime)?;
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r).map_err(HarnessError::runtime)?;
        }
        w.flush().map_err(HarnessError::runtime)
    }
}

/// Reference front is the non-dominated union of every archive of every
/// run; the reference point is the worst of those points less 10% of range.
pub fn summarize_runs(dirs: &[PathBuf]) -> Result<RunSummary, HarnessError> {
    let mut runs = Vec::new();
    for dir in dirs {
        let files = archive_files(dir)?;
        if files.is_empty() {
            return Err(HarnessError::EmptyDirectory(dir.clone()));
        }
        let algorithm = RunManifest::read(&dir.join(MANIFEST_FILE))
            .map(|m| m.algorithm)
            .unwrap_or_else(|_| "unknown".into());
        let mut gens = Vec::new();
        for (g, path) in files {
            let ep = read_ep_csv(&path).map_err(HarnessError::runtime)?;
            gens.push((g, ep.iter().map(|m| m.objectives.to_vec()).collect::<Vec<_>>()));
        }
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| dir.display().to_string());
        runs.push((name, algorithm, gens));
    }
    let all: Vec<Vec<f64>> = runs.iter().flat_map(|r| r.2.iter().flat_map(|g| g.1.iter().cloned())).collect();
    if all.is_empty() {
        return Err(HarnessError::EmptyDirectory(dirs.first().cloned().unwrap_or_default()));
    }
    let reference_front = metrics::reference_front(&[all.clone()]);
    let reference_point = metrics::reference_point(&all, 0.1).map_err(HarnessError::runtime)?;
    let mut rows = Vec::new();
    for (run, algorithm, gens) in runs {
        for (generation, front) in gens {
            let (igd, hv) = if front.is_empty() {
                (f64::NAN, 0.0)
            } else {
                (
                    metrics::igd(&front, &reference_front).map_err(HarnessError::runtime)?,
                    metrics::hypervolume(&front, &reference_point).map_err(HarnessError::runtime)?,
                )
            };
            rows.push(SummaryRow {
                run: run.clone(),
                algorithm: algorithm.clone(),
                generation,
                igd,
                hv,
                ep_size: front.len(),
            });
        }
    }
    Ok(RunSummary {
        reference_point,
        reference_front,
        rows,
    })
}
