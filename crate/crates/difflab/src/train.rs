//! Training: Adam, the three regression objectives over the forward
//! diffusion stream, and checkpoint persistence.
//!
//! The three objectives share one loss (mean squared error over batch
//! and coordinates); only the regression target changes:
//! the injected perturbation (`Noise`), the clean point (`WholeStep`),
//! or the closed-form posterior mean of the previous state (`SingleStep`).

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::forward::{diffuse_deterministic, diffuse_gaussian, ForwardKind, NoisedBatch};
use crate::net::{Gradients, Mlp, HIDDEN, INPUT_DIM};
use crate::schedule::{Schedule, ScheduleKind, ScheduleSpec};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Predict the injected perturbation.
    Noise,
    /// Predict the clean point x_0.
    WholeStep,
    /// Predict the posterior mean of the previous state.
    SingleStep,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Noise => write!(f, "noise"),
            Objective::WholeStep => write!(f, "whole"),
            Objective::SingleStep => write!(f, "single"),
        }
    }
}

impl std::str::FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise" => Ok(Objective::Noise),
            "whole" => Ok(Objective::WholeStep),
            "single" => Ok(Objective::SingleStep),
            other => Err(Error::InvalidArgument(format!(
                "unknown objective `{other}` (expected noise|whole|single)"
            ))),
        }
    }
}

/// Adam with bias correction; defaults lr 1e-3, beta1 0.9, beta2 0.999,
/// eps_hat 1e-8.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub step_count: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps_hat: f64,
}

impl AdamState {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        AdamState {
            m: Gradients::zeros_like(mlp),
            v: Gradients::zeros_like(mlp),
            step_count: 0,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps_hat: 1e-8,
        }
    }
}

/// One Adam update in place. Shapes must match the state's.
pub fn adam_step(params: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    let shapes_match = params
        .params()
        .iter()
        .zip(grads.arrays().iter())
        .zip(state.m.arrays().iter())
        .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
    if !shapes_match {
        return Err(Error::ShapeMismatch(
            "adam_step arguments have incongruent shapes".into(),
        ));
    }
    state.step_count += 1;
    let k = state.step_count as i32;
    let bias1 = 1.0 - state.beta1.powi(k);
    let bias2 = 1.0 - state.beta2.powi(k);
    let (b1, b2, lr, eps) = (state.beta1, state.beta2, state.lr, state.eps_hat);
    for ((p, g), (m, v)) in params
        .params_mut()
        .into_iter()
        .zip(grads.arrays().into_iter())
        .zip(state.m.arrays_mut().into_iter().zip(state.v.arrays_mut()))
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

/// Posterior mean of `q(x_{t-1} | x_t, x_0)`. At t = 0 there is no
/// previous step; the target is the clean point itself.
pub fn posterior_mean(x0: Point, xt: Point, t: usize, schedule: &Schedule) -> Point {
    if t == 0 {
        return x0;
    }
    let beta = schedule.beta(t);
    let alpha = schedule.alpha(t);
    let ab = schedule.alpha_bar(t);
    let ab_prev = schedule.alpha_bar_prev(t);
    let c0 = ab_prev.sqrt() * beta / (1.0 - ab);
    let ct = alpha.sqrt() * (1.0 - ab_prev) / (1.0 - ab);
    [c0 * x0[0] + ct * xt[0], c0 * x0[1] + ct * xt[1]]
}

/// Regression targets for a noised batch under the given objective.
pub fn make_target(objective: Objective, noised: &NoisedBatch, schedule: &Schedule) -> Vec<Point> {
    match objective {
        Objective::Noise => noised.eps.clone(),
        Objective::WholeStep => noised.x0.clone(),
        Objective::SingleStep => noised
            .x0
            .iter()
            .zip(&noised.xt)
            .zip(&noised.t)
            .map(|((&x0, &xt), &t)| posterior_mean(x0, xt, t, schedule))
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub objective: Objective,
    pub forward: ForwardKind,
    pub schedule: ScheduleSpec,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl TrainConfig {
    /// The run configuration matching the reference experiment: cosine
    /// schedule, T = 100, batch 64, 50 epochs.
    pub fn standard(objective: Objective, forward: ForwardKind, seed: u64) -> Self {
        TrainConfig {
            objective,
            forward,
            schedule: ScheduleSpec::new(ScheduleKind::Cosine, 100),
            epochs: 50,
            batch_size: 64,
            lr: 1e-3,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "epochs and batch size must be positive".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::InvalidArgument("learning rate must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub mlp: Mlp,
    /// Mean loss per epoch.
    pub epoch_loss: Vec<f64>,
}

/// Run the training loop: `epochs * ceil(N / batch)` Adam steps, each on
/// a shuffled minibatch with per-item uniform timesteps. Fully
/// reproducible from the config seed; with the deterministic forward
/// kind the noise stream is never touched.
pub fn train_run(config: &TrainConfig, points: &[Point]) -> Result<TrainRun> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("training dataset is empty".into()));
    }
    let schedule = config.schedule.build()?;
    let steps = schedule.steps();

    let mut mlp = Mlp::init(config.seed);
    let mut adam = AdamState::new(&mlp, config.lr);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut t_rng = ChaCha8Rng::seed_from_u64(config.seed);
    t_rng.set_stream(2);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(3);

    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let x0: Vec<Point> = chunk.iter().map(|&i| points[i]).collect();
            let ts: Vec<usize> = chunk.iter().map(|_| t_rng.gen_range(0..steps)).collect();
            let batch = match config.forward {
                ForwardKind::GaussianNoise => {
                    diffuse_gaussian(&x0, &ts, &schedule, &mut noise_rng)?
                }
                ForwardKind::DeterministicDigits => diffuse_deterministic(&x0, &ts, &schedule)?,
            };
            let targets = make_target(config.objective, &batch, &schedule);
            let inputs: Vec<(Point, f64)> = batch
                .xt
                .iter()
                .zip(&batch.t)
                .map(|(&xt, &t)| (xt, t as f64 / steps as f64))
                .collect();
            let (loss, grads) = mlp.backward(&inputs, &targets)?;
            adam_step(&mut mlp, &grads, &mut adam)?;
            loss_sum += loss * chunk.len() as f64;
        }
        epoch_loss.push(loss_sum / points.len() as f64);
    }
    debug_assert!(mlp.all_finite());
    Ok(TrainRun { mlp, epoch_loss })
}

/// Write the per-epoch loss trace as `epoch,mean_loss` CSV.
pub fn write_loss_trace(trace: &[f64], path: &Path) -> Result<()> {
    let mut out = String::from("epoch,mean_loss\n");
    for (epoch, loss) in trace.iter().enumerate() {
        out.push_str(&format!("{epoch},{loss}\n"));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// Checkpoints.
// ---------------------------------------------------------------------------

/// On-disk network snapshot: architecture header, run provenance, and
/// the flat parameter vector in fixed layer order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub input_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub objective: Objective,
    pub forward: ForwardKind,
    pub schedule: ScheduleSpec,
    pub seed: u64,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(mlp: &Mlp, config: &TrainConfig) -> Self {
        Checkpoint {
            input_dim: INPUT_DIM,
            hidden: HIDDEN,
            out_dim: mlp.out_dim,
            objective: config.objective,
            forward: config.forward,
            schedule: config.schedule.clone(),
            seed: config.seed,
            params: mlp.to_flat(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).expect("checkpoint serializes");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingInput(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        if ckpt.input_dim != INPUT_DIM || ckpt.hidden != HIDDEN {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint architecture {}x{} does not match {}x{}",
                ckpt.input_dim, ckpt.hidden, INPUT_DIM, HIDDEN
            )));
        }
        Ok(ckpt)
    }

    /// Instantiate the network, rejecting mismatched parameter counts.
    pub fn to_mlp(&self) -> Result<Mlp> {
        Mlp::from_flat(self.out_dim, &self.params)
    }
}
