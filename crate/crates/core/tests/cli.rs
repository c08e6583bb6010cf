use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use uvaa_core::env::{ActionVector, EnvConfig, Environment};
use uvaa_core::evolve::{ep_csv_name, read_ep_csv, task_checkpoint, write_ep_csv, Member, SnapshotStore};
use uvaa_core::harness::{EvalReport, RunManifest, MANIFEST_FILE};
use uvaa_core::moppo::{NetworkConfig, PpoConfig, Task};

fn uvaa(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uvaa"));
    cmd.args(args).env("RUST_LOG", "warn");
    match threads {
        Some(t) => cmd.env("UVAA_THREADS", t),
        None => cmd.env_remove("UVAA_THREADS"),
    };
    cmd.output().expect("spawn uvaa")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const N_UAV: usize = 2;
const HORIZON: usize = 10;

fn config_json(out: &Path, seed: u64) -> String {
    serde_json::json!({
        "scenario": "custom",
        "seed": seed,
        "output_dir": out,
        "env": {"n_uav": N_UAV, "horizon": HORIZON},
        "evolution": {"n_tasks": 2, "n_warm": 1, "n_evo": 1, "generations": 2, "n_eval": 2},
        "network": {"first_hidden": 8, "hidden": [16, 16, 16]},
    })
    .to_string()
}

fn write_config(dir: &Path, name: &str, out: &Path, seed: u64) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, config_json(out, seed)).unwrap();
    p
}

struct Trained {
    config: PathBuf,
    out: PathBuf,
}

/// One training run shared by the tests below, kept under the target
/// directory because statics are never dropped.
fn trained() -> &'static Trained {
    static RUN: OnceLock<Trained> = OnceLock::new();
    RUN.get_or_init(|| {
        let root = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-train");
        if root.exists() {
            std::fs::remove_dir_all(&root).unwrap();
        }
        std::fs::create_dir_all(&root).unwrap();
        let out = root.join("run");
        let config = write_config(&root, "cfg.json", &out, 5);
        let o = uvaa(&["train", "--config", config.to_str().unwrap()], Some("1"));
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        Trained { config, out }
    })
}

#[test]
fn train_writes_every_declared_output_and_nothing_else() {
    let t = trained();
    let manifest = RunManifest::read(&t.out.join(MANIFEST_FILE)).unwrap();
    for entry in &manifest.outputs {
        assert!(t.out.join(entry.trim_end_matches('/')).exists(), "missing {entry}");
    }
    for entry in std::fs::read_dir(&t.out).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name().into_string().unwrap();
        assert!(manifest.declares(&name, entry.file_type().unwrap().is_dir()), "undeclared {name}");
    }
    assert_eq!(manifest.config.env.n_uav, N_UAV);
    assert_eq!(manifest.objectives.len(), 2);
    assert!(manifest.seed_derivation.iter().any(|r| r.tag == "train"));
}

#[test]
fn rerun_is_byte_identical_across_thread_counts() {
    let t = trained();
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("again");
    let config = write_config(root.path(), "cfg.json", &out, 5);
    let o = uvaa(&["train", "--config", config.to_str().unwrap()], Some("3"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for g in 0..=2 {
        let name = ep_csv_name(g);
        assert_eq!(std::fs::read(t.out.join(&name)).unwrap(), std::fs::read(out.join(&name)).unwrap(), "{name}");
    }
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, r#"{"scenario": "small", "seed": 1, "output_dir": "x", "evolution": {"n_taks": 3}}"#).unwrap();
    let o = uvaa(&["train", "--config", p.to_str().unwrap()], None);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("n_taks"), "{}", stderr(&o));
    let o = uvaa(&["train", "--config", dir.path().join("missing.json").to_str().unwrap()], None);
    assert_eq!(code(&o), 1);
}

#[test]
fn invalid_thread_count_is_rejected() {
    let t = trained();
    let o = uvaa(&["env-trace", "--config", t.config.to_str().unwrap()], Some("zero"));
    assert_eq!(code(&o), 1);
}

fn evaluate(args: &[&str]) -> EvalReport {
    let o = uvaa(args, None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn hover_evaluation_charges_hover_energy() {
    let t = trained();
    let cfg = t.config.to_str().unwrap();
    let args = ["evaluate", "--config", cfg, "--scripted", "hover", "--episodes", "3", "--seed", "9"];
    let report = evaluate(&args);
    let env = EnvConfig {
        n_uav: N_UAV,
        horizon: HORIZON,
        ..EnvConfig::default()
    };
    let e = env.hover_slot_energy();
    // Same accumulation order as the episode: UAVs within a slot, then slots.
    let mut expected = 0.0;
    for _ in 0..HORIZON {
        let mut slot = 0.0;
        for _ in 0..N_UAV {
            slot += e;
        }
        expected -= slot;
    }
    assert_eq!(report.episodes.len(), 3);
    for ep in &report.episodes {
        assert_eq!(ep.f2, expected);
        assert!((ep.f2 + (N_UAV * HORIZON) as f64 * e).abs() <= 1e-12 * expected.abs());
        let mut sim = Environment::reset(&env, ep.seed).unwrap();
        let mut rate = 0.0;
        while !sim.is_done() {
            rate += sim.step(&ActionVector::hover(N_UAV, 1.0)).unwrap().rate;
        }
        assert_eq!(ep.f1, rate);
    }
    assert_eq!(evaluate(&args), report);
}

#[test]
fn checkpoint_evaluation_reproduces_archive_objectives() {
    let t = trained();
    let ep = read_ep_csv(&t.out.join(ep_csv_name(2))).unwrap();
    let m = &ep[0];
    let ckpt = t.out.join("checkpoints").join(format!("{}.ckpt", m.snapshot));
    let report = evaluate(&["evaluate", "--config", t.config.to_str().unwrap(), "--checkpoint", ckpt.to_str().unwrap()]);
    assert_eq!([report.mean_f1, report.mean_f2], m.objectives);
}

fn tiny_task(n_uav: usize, id: u64) -> Task {
    let env = EnvConfig {
        n_uav,
        horizon: HORIZON,
        ..EnvConfig::default()
    };
    let net = NetworkConfig {
        first_hidden: 4,
        hidden: vec![4],
        disable_lstm: false,
    };
    let mut rng = uvaa_core::seed::substream(id, "init", &[]);
    Task::new(id, [0.5, 0.5], &env, &net, &PpoConfig::default(), &mut rng)
}

#[test]
fn select_best_f1_picks_highest_rate() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let store = SnapshotStore::open(dir.path().join("checkpoints")).unwrap();
    let mut ep = Vec::new();
    for (k, f) in [[3.0, -10.0], [7.0, -30.0], [5.0, -20.0]].into_iter().enumerate() {
        let snapshot = store.put(&task_checkpoint(&tiny_task(N_UAV, k as u64), 0, 0)).unwrap();
        ep.push(Member {
            snapshot,
            task_id: k as u64,
            generation: 0,
            iteration: 0,
            weight: [0.5, 0.5],
            objectives: f,
        });
    }
    write_ep_csv(&dir.path().join(ep_csv_name(0)), &ep).unwrap();
    let report = evaluate(&[
        "evaluate",
        "--config",
        t.config.to_str().unwrap(),
        "--select",
        "best-f1",
        "--run-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert!(report.source.contains(&ep[1].snapshot), "{}", report.source);
}

#[test]
fn mismatched_checkpoint_exits_3() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let store = SnapshotStore::open(dir.path()).unwrap();
    let id = store.put(&task_checkpoint(&tiny_task(N_UAV + 1, 0), 0, 0)).unwrap();
    let o = uvaa(
        &["evaluate", "--config", t.config.to_str().unwrap(), "--checkpoint", store.path(&id).to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    let garbage = dir.path().join("garbage.ckpt");
    std::fs::write(&garbage, b"not a checkpoint").unwrap();
    let o = uvaa(&["evaluate", "--config", t.config.to_str().unwrap(), "--checkpoint", garbage.to_str().unwrap()], None);
    assert_eq!(code(&o), 3);
}

fn read_summary(path: &Path) -> (String, Vec<csv::StringRecord>) {
    let text = std::fs::read_to_string(path).unwrap();
    let first = text.lines().next().unwrap().to_string();
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    (first, r.records().map(|x| x.unwrap()).collect())
}

#[test]
fn metrics_over_runs() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let single = dir.path().join("single.csv");
    let o = uvaa(&["metrics", t.out.to_str().unwrap(), "--out", single.to_str().unwrap()], None);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (_, rows) = read_summary(&single);
    assert_eq!(rows.len(), 3);
    let igd: f64 = rows[2][3].parse().unwrap();
    assert_eq!(igd, 0.0);
    let hv: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(hv.windows(2).all(|w| w[1] >= w[0]), "{hv:?}");

    // A second run made of the first run's warm-up archive.
    let other = dir.path().join("other");
    std::fs::create_dir_all(&other).unwrap();
    std::fs::copy(t.out.join(ep_csv_name(0)), other.join(ep_csv_name(0))).unwrap();
    let both = dir.path().join("both.csv");
    let o = uvaa(
        &["metrics", t.out.to_str().unwrap(), other.to_str().unwrap(), "--out", both.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&both).unwrap();
    assert_eq!(text.matches("reference_point").count(), 1);
    assert!(text.starts_with("# reference_point="));
    let (_, rows) = read_summary(&both);
    assert_eq!(rows.len(), 4);

    let empty = dir.path().join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    assert_eq!(code(&uvaa(&["metrics", empty.to_str().unwrap()], None)), 4);
}

#[test]
fn plots() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("one.csv");
    let ep = read_ep_csv(&t.out.join(ep_csv_name(0))).unwrap();
    write_ep_csv(&one, &ep[..1]).unwrap();
    let out = dir.path().join("svg");
    let o = uvaa(
        &[
            "plot",
            "--metrics",
            t.out.join("metrics.csv").to_str().unwrap(),
            "--ep",
            one.to_str().unwrap(),
            "--manifest",
            t.out.join(MANIFEST_FILE).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let scatter = std::fs::read_to_string(out.join("pareto_one.svg")).unwrap();
    assert_eq!(scatter.matches("class=\"marker\"").count(), 1);
    assert!(scatter.contains("sum rate (f1) [bit/s/Hz]"));
    assert!(scatter.contains("negative propulsion energy (f2) [J]"));
    let hv = std::fs::read_to_string(out.join("hv.svg")).unwrap();
    assert_eq!(hv.matches("<polyline").count(), 1);

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let o = uvaa(&["plot", "--metrics", empty.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 5);
    let junk = dir.path().join("junk.csv");
    std::fs::write(&junk, "generation,igd,hv\n0,abc,1\n").unwrap();
    let o = uvaa(&["plot", "--metrics", junk.to_str().unwrap(), "--out", out.to_str().unwrap()], None);
    assert_eq!(code(&o), 5);
}

#[test]
fn env_trace_writes_one_line_per_slot() {
    let t = trained();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.jsonl");
    let o = uvaa(
        &["env-trace", "--config", t.config.to_str().unwrap(), "--seed", "3", "--out", path.to_str().unwrap()],
        None,
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), HORIZON);
    assert_eq!(lines[0]["slot"], 0);
    assert_eq!(lines[0]["positions"].as_array().unwrap().len(), N_UAV);
}
