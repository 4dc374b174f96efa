//! Command implementations behind the `difflab` binary. Each command
//! writes its artifacts into a run directory and records a manifest;
//! `execute` is also the entry point for manifest replay.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::discrete::{demo_chains, discrete_demo_run, write_chain, DiscreteDemoConfig};
use crate::eval::{export_vector_field, metrics_report, MetricsReport};
use crate::forward::{dump_noising, ForwardKind};
use crate::manifest::{sha256_file, ArtifactRef, RunManifest};
use crate::sample::{
    init_particles, mlp_predictor, read_trajectory, run_sampler, write_trajectory, InitMode,
    Trajectory,
};
use crate::schedule::ScheduleSpec;
use crate::target::{default_target, read_dataset, sample, write_dataset, GmmTarget};
use crate::train::{train_run, write_loss_trace, Checkpoint, Objective, TrainConfig};
use crate::{Error, Point, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub n: usize,
    pub seed: u64,
    pub svg: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainCmdConfig {
    pub data: PathBuf,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleCmdConfig {
    pub checkpoint: PathBuf,
    /// Requested sampler kind; must match the checkpoint objective.
    pub sampler: Option<Objective>,
    pub init: InitMode,
    pub n: usize,
    pub record: Vec<usize>,
    pub seed: u64,
    pub svg: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalCmdConfig {
    pub samples: PathBuf,
    pub reference: Option<PathBuf>,
    /// Fresh-reference parameters, used when no reference file is given.
    pub ref_n: usize,
    pub ref_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldCmdConfig {
    pub checkpoint: PathBuf,
    pub t_list: Vec<usize>,
    pub grid_side: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScheduleCmdConfig {
    pub schedule: ScheduleSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisingCmdConfig {
    pub data: PathBuf,
    pub schedule: ScheduleSpec,
    pub forward: ForwardKind,
    pub t_list: Vec<usize>,
    pub seed: u64,
}

/// Tagged union of every command configuration; this is what manifests
/// store and replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum RunConfig {
    Gen(GenConfig),
    Train(TrainCmdConfig),
    Sample(SampleCmdConfig),
    Eval(EvalCmdConfig),
    Field(FieldCmdConfig),
    Schedule(ScheduleCmdConfig),
    Discrete(DiscreteDemoConfig),
    Noising(NoisingCmdConfig),
}

impl RunConfig {
    pub fn command_name(&self) -> &'static str {
        match self {
            RunConfig::Gen(_) => "gen",
            RunConfig::Train(_) => "train",
            RunConfig::Sample(_) => "sample",
            RunConfig::Eval(_) => "eval",
            RunConfig::Field(_) => "field",
            RunConfig::Schedule(_) => "schedule",
            RunConfig::Discrete(_) => "discrete",
            RunConfig::Noising(_) => "noising",
        }
    }

    fn input_paths(&self) -> Vec<&Path> {
        match self {
            RunConfig::Train(c) => vec![&c.data],
            RunConfig::Sample(c) => vec![&c.checkpoint],
            RunConfig::Field(c) => vec![&c.checkpoint],
            RunConfig::Eval(c) => {
                let mut v: Vec<&Path> = vec![&c.samples];
                if let Some(r) = &c.reference {
                    v.push(r);
                }
                v
            }
            RunConfig::Noising(c) => vec![&c.data],
            _ => vec![],
        }
    }
}

/// Execute a command into `out_dir` (created if needed) and return the
/// produced artifacts with their hashes. Does not write the manifest.
pub fn execute(config: &RunConfig, out_dir: &Path) -> Result<Vec<ArtifactRef>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let names = match config {
        RunConfig::Gen(c) => run_gen(c, out_dir)?,
        RunConfig::Train(c) => run_train(c, out_dir)?,
        RunConfig::Sample(c) => run_sample(c, out_dir)?,
        RunConfig::Eval(c) => run_eval(c, out_dir)?,
        RunConfig::Field(c) => run_field(c, out_dir)?,
        RunConfig::Schedule(c) => run_schedule(c, out_dir)?,
        RunConfig::Discrete(c) => run_discrete(c, out_dir)?,
        RunConfig::Noising(c) => run_noising(c, out_dir)?,
    };
    names
        .into_iter()
        .map(|name| {
            Ok(ArtifactRef {
                sha256: sha256_file(&out_dir.join(&name))?,
                path: name,
            })
        })
        .collect()
}

/// Execute a command and write its manifest. The binary's main path.
pub fn run_command(config: &RunConfig, out_dir: &Path) -> Result<RunManifest> {
    let inputs = config
        .input_paths()
        .into_iter()
        .map(|p| {
            if !p.exists() {
                return Err(Error::MissingInput(p.to_path_buf()));
            }
            Ok(ArtifactRef {
                path: p.to_string_lossy().into_owned(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let outputs = execute(config, out_dir)?;
    let manifest = RunManifest {
        command: config.command_name().to_string(),
        config: config.clone(),
        inputs,
        outputs,
    };
    manifest.write(out_dir)?;
    Ok(manifest)
}

fn run_gen(config: &GenConfig, out: &Path) -> Result<Vec<String>> {
    if config.n == 0 {
        return Err(Error::InvalidArgument("gen needs --n >= 1".into()));
    }
    let target = default_target();
    let dataset = sample(&target, config.n, config.seed);
    write_dataset(&dataset, &target, &out.join("dataset.csv"))?;
    let mut names = vec!["dataset.csv".to_string(), "dataset.meta.json".to_string()];
    if config.svg {
        write_scatter_svg(&dataset.points, &target, &out.join("dataset.svg"))?;
        names.push("dataset.svg".to_string());
    }
    Ok(names)
}

fn run_train(config: &TrainCmdConfig, out: &Path) -> Result<Vec<String>> {
    let points = read_dataset(&config.data)?;
    let run = train_run(&config.train, &points)?;
    Checkpoint::new(&run.mlp, &config.train).save(&out.join("checkpoint.json"))?;
    write_loss_trace(&run.epoch_loss, &out.join("loss_trace.csv"))?;
    Ok(vec![
        "checkpoint.json".to_string(),
        "loss_trace.csv".to_string(),
    ])
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryMeta {
    kind: Objective,
    init: InitMode,
    n: usize,
    seed: u64,
    schedule: ScheduleSpec,
    checkpoint_sha256: String,
}

fn run_sample(config: &SampleCmdConfig, out: &Path) -> Result<Vec<String>> {
    let ckpt = Checkpoint::load(&config.checkpoint)?;
    if let Some(requested) = config.sampler {
        if requested != ckpt.objective {
            return Err(Error::ObjectiveMismatch {
                checkpoint: ckpt.objective.to_string(),
                requested: requested.to_string(),
            });
        }
    }
    let schedule = ckpt.schedule.build()?;
    let mlp = ckpt.to_mlp()?;
    let particles = init_particles(config.init, config.n, config.seed)?;
    let predict = mlp_predictor(&mlp, &schedule);
    let trajectory = run_sampler(
        &predict,
        ckpt.objective,
        &schedule,
        &particles,
        &config.record,
        config.seed,
    )?;
    write_trajectory(&trajectory, &out.join("trajectory.csv"))?;
    let meta = TrajectoryMeta {
        kind: ckpt.objective,
        init: config.init,
        n: config.n,
        seed: config.seed,
        schedule: ckpt.schedule.clone(),
        checkpoint_sha256: sha256_file(&config.checkpoint)?,
    };
    let meta_path = out.join("trajectory.meta.json");
    std::fs::write(
        &meta_path,
        serde_json::to_string_pretty(&meta).expect("metadata serializes"),
    )
    .map_err(|e| Error::io(&meta_path, e))?;

    let mut names = vec![
        "trajectory.csv".to_string(),
        "trajectory.meta.json".to_string(),
    ];
    if config.svg {
        let target = default_target();
        for snap in &trajectory.snapshots {
            let name = format!("snapshot_{:03}.svg", snap.t);
            write_scatter_svg(&snap.points, &target, &out.join(&name))?;
            names.push(name);
        }
    }
    Ok(names)
}

/// A samples file is either a trajectory (`snapshot_t,...` header) or a
/// plain `x,y` dataset; both evaluate, but only a trajectory carries
/// positional-bias information.
fn load_samples(path: &Path) -> Result<(Vec<Point>, Option<Trajectory>)> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let head = {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        text.lines().next().unwrap_or_default().to_string()
    };
    if head.starts_with("snapshot_t") {
        let trajectory = read_trajectory(path)?;
        let samples = trajectory.last().points.clone();
        let trajectory = if trajectory.snapshots.len() >= 2 {
            Some(trajectory)
        } else {
            None
        };
        Ok((samples, trajectory))
    } else {
        Ok((read_dataset(path)?, None))
    }
}

fn run_eval(config: &EvalCmdConfig, out: &Path) -> Result<Vec<String>> {
    let (samples, trajectory) = load_samples(&config.samples)?;
    let target = default_target();
    let reference = match &config.reference {
        Some(path) => load_samples(path)?.0,
        None => {
            if config.ref_n == 0 {
                return Err(Error::InvalidArgument("eval needs --ref-n >= 1".into()));
            }
            sample(&target, config.ref_n, config.ref_seed).points
        }
    };
    let report = metrics_report(&samples, &reference, trajectory.as_ref(), &target)?;
    write_metrics(&report, &out.join("metrics.json"))?;
    Ok(vec!["metrics.json".to_string()])
}

pub fn write_metrics(report: &MetricsReport, path: &Path) -> Result<()> {
    std::fs::write(
        path,
        serde_json::to_string_pretty(report).expect("metrics serialize"),
    )
    .map_err(|e| Error::io(path, e))
}

fn run_field(config: &FieldCmdConfig, out: &Path) -> Result<Vec<String>> {
    let ckpt = Checkpoint::load(&config.checkpoint)?;
    let schedule = ckpt.schedule.build()?;
    let mlp = ckpt.to_mlp()?;
    let predict = mlp_predictor(&mlp, &schedule);
    export_vector_field(
        &predict,
        ckpt.objective,
        &schedule,
        &config.t_list,
        config.grid_side,
        &out.join("field.csv"),
    )?;
    Ok(vec!["field.csv".to_string()])
}

fn run_schedule(config: &ScheduleCmdConfig, out: &Path) -> Result<Vec<String>> {
    let schedule = config.schedule.build()?;
    crate::schedule::dump(&schedule, &out.join("schedule.csv"))?;
    Ok(vec!["schedule.csv".to_string()])
}

fn run_discrete(config: &DiscreteDemoConfig, out: &Path) -> Result<Vec<String>> {
    let metrics = discrete_demo_run(config)?;
    let path = out.join("discrete_metrics.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&metrics).expect("metrics serialize"),
    )
    .map_err(|e| Error::io(&path, e))?;
    let points = sample(&default_target(), config.n_train, config.seed).points;
    let chains = demo_chains(config, &points)?;
    write_chain(&chains[0], &out.join("chain_axis0.csv"))?;
    write_chain(&chains[1], &out.join("chain_axis1.csv"))?;
    Ok(vec![
        "discrete_metrics.json".to_string(),
        "chain_axis0.csv".to_string(),
        "chain_axis1.csv".to_string(),
    ])
}

fn run_noising(config: &NoisingCmdConfig, out: &Path) -> Result<Vec<String>> {
    let points = read_dataset(&config.data)?;
    let schedule = config.schedule.build()?;
    let target = default_target();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    dump_noising(
        &points,
        &target,
        &schedule,
        config.forward,
        &config.t_list,
        &mut rng,
        &out.join("noising.csv"),
    )?;
    Ok(vec!["noising.csv".to_string()])
}

/// Minimal deterministic scatter plot; a convenience output, never
/// load-bearing.
fn write_scatter_svg(points: &[Point], target: &GmmTarget, path: &Path) -> Result<()> {
    let means = target.means();
    let mut svg = String::from(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 500 500\" width=\"500\" height=\"500\">\n\
         <rect width=\"500\" height=\"500\" fill=\"white\"/>\n",
    );
    let to_px = |v: f64| (v + 8.0) / 16.0 * 500.0;
    for p in points {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, m) in means.iter().enumerate() {
            let d = (p[0] - m[0]).powi(2) + (p[1] - m[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = k;
            }
        }
        let color = if best == 0 { "#1f77b4" } else { "#ff7f0e" };
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"{}\" fill-opacity=\"0.6\"/>\n",
            to_px(p[0]),
            500.0 - to_px(p[1]),
            color
        ));
    }
    svg.push_str("</svg>\n");
    std::fs::write(path, svg).map_err(|e| Error::io(path, e))
}
