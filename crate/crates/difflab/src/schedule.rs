//! Variance schedules for the forward diffusion process.
//!
//! A schedule fixes the per-step noise variances `beta[t]` for `t` in
//! `0..T` (t = 0 is the first noising step) together with the derived
//! arrays `alpha[t] = 1 - beta[t]` and the cumulative signal coefficient
//! `alpha_bar[t] = alpha[0] * ... * alpha[t]`.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Highest admissible per-step variance. Keeps `alpha_bar` strictly
/// positive when the cosine construction would otherwise drive a step's
/// beta to exactly 1.
pub const BETA_CLIP: f64 = 0.999;

/// Conventional linear-schedule endpoints at 1000 steps; for other step
/// counts the endpoints are scaled by `1000/T` so the total noise budget
/// stays comparable.
pub const LINEAR_BETA_START_1000: f64 = 1e-4;
pub const LINEAR_BETA_END_1000: f64 = 0.02;

/// Default cosine-schedule offset.
pub const COSINE_S: f64 = 0.008;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    Linear,
    Cosine,
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScheduleKind::Linear => write!(f, "linear"),
            ScheduleKind::Cosine => write!(f, "cosine"),
        }
    }
}

impl std::str::FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(ScheduleKind::Linear),
            "cosine" => Ok(ScheduleKind::Cosine),
            other => Err(Error::InvalidArgument(format!(
                "unknown schedule kind `{other}` (expected linear|cosine)"
            ))),
        }
    }
}

/// Precomputed variance schedule. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    kind: ScheduleKind,
    beta: Vec<f64>,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

impl Schedule {
    /// Number of diffusion steps T.
    pub fn steps(&self) -> usize {
        self.beta.len()
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn beta(&self, t: usize) -> f64 {
        self.beta[t]
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// `alpha_bar[t-1]`, with the convention that the step before the
    /// first one carries full signal.
    pub fn alpha_bar_prev(&self, t: usize) -> f64 {
        if t == 0 {
            1.0
        } else {
            self.alpha_bar[t - 1]
        }
    }

    pub fn betas(&self) -> &[f64] {
        &self.beta
    }

    pub fn alpha_bars(&self) -> &[f64] {
        &self.alpha_bar
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t >= self.steps() {
            return Err(Error::StepOutOfRange {
                t,
                steps: self.steps(),
            });
        }
        Ok(())
    }

    fn from_betas(kind: ScheduleKind, beta: Vec<f64>) -> Self {
        let alpha: Vec<f64> = beta.iter().map(|b| 1.0 - b).collect();
        let mut alpha_bar = Vec::with_capacity(alpha.len());
        let mut prod = 1.0;
        for &a in &alpha {
            prod *= a;
            alpha_bar.push(prod);
        }
        Schedule {
            kind,
            beta,
            alpha,
            alpha_bar,
        }
    }
}

/// Linear schedule: `beta[t]` interpolates `beta_start..=beta_end`.
pub fn make_linear(steps: usize, beta_start: f64, beta_end: f64) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("schedule needs T >= 1".into()));
    }
    if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "linear schedule needs 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})"
        )));
    }
    let beta = if steps == 1 {
        vec![beta_start]
    } else {
        (0..steps)
            .map(|t| beta_start + (beta_end - beta_start) * t as f64 / (steps - 1) as f64)
            .collect()
    };
    Ok(Schedule::from_betas(ScheduleKind::Linear, beta))
}

/// Default linear endpoints for a given step count: the 1000-step
/// endpoints scaled by `1000/T`.
pub fn default_linear_endpoints(steps: usize) -> (f64, f64) {
    let scale = 1000.0 / steps as f64;
    (LINEAR_BETA_START_1000 * scale, LINEAR_BETA_END_1000 * scale)
}

pub fn make_linear_default(steps: usize) -> Result<Schedule> {
    let (b0, b1) = default_linear_endpoints(steps);
    make_linear(steps, b0, b1)
}

/// Cosine schedule: `alpha_bar[t]` targets `f(t+1)/f(0)` with
/// `f(u) = cos^2(((u/T + s)/(1+s)) * pi/2)`, and each step's beta is
/// clipped at [`BETA_CLIP`] before the stored arrays are rebuilt from the
/// clipped betas.
pub fn make_cosine(steps: usize, s: f64) -> Result<Schedule> {
    if steps == 0 {
        return Err(Error::InvalidArgument("schedule needs T >= 1".into()));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "cosine schedule needs s > 0, got {s}"
        )));
    }
    let t_f = steps as f64;
    let f = |u: f64| (((u / t_f + s) / (1.0 + s)) * PI / 2.0).cos().powi(2);
    let f0 = f(0.0);
    let mut beta = Vec::with_capacity(steps);
    let mut prev_target = 1.0;
    for t in 0..steps {
        let target = f((t + 1) as f64) / f0;
        let b = (1.0 - target / prev_target).min(BETA_CLIP);
        beta.push(b);
        prev_target = target;
    }
    Ok(Schedule::from_betas(ScheduleKind::Cosine, beta))
}

pub fn make_cosine_default(steps: usize) -> Result<Schedule> {
    make_cosine(steps, COSINE_S)
}

/// Serializable schedule description carried by configs, checkpoints
/// and manifests. Omitted parameters resolve to the defaults above.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
}

impl ScheduleSpec {
    pub fn new(kind: ScheduleKind, steps: usize) -> Self {
        ScheduleSpec {
            kind,
            steps,
            beta_start: None,
            beta_end: None,
            s: None,
        }
    }

    pub fn build(&self) -> Result<Schedule> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("schedule needs T >= 1".into()));
        }
        match self.kind {
            ScheduleKind::Linear => {
                let (d0, d1) = default_linear_endpoints(self.steps);
                make_linear(
                    self.steps,
                    self.beta_start.unwrap_or(d0),
                    self.beta_end.unwrap_or(d1),
                )
            }
            ScheduleKind::Cosine => make_cosine(self.steps, self.s.unwrap_or(COSINE_S)),
        }
    }
}

/// Write the schedule as CSV with columns `t,beta,alpha,alpha_bar`.
/// Floats are written in shortest round-trip form, so parsing the file
/// back reproduces the arrays bitwise.
pub fn dump(schedule: &Schedule, path: &Path) -> Result<()> {
    let mut out = String::from("t,beta,alpha,alpha_bar\n");
    for t in 0..schedule.steps() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            t,
            schedule.beta(t),
            schedule.alpha(t),
            schedule.alpha_bar(t)
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parse a file produced by [`dump`].
pub fn parse_dump(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut beta = Vec::new();
    let mut alpha = Vec::new();
    let mut alpha_bar = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, format!("expected 4 fields on line {i}")));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::parse(path, format!("line {i}: {e}")))
        };
        beta.push(parse(fields[1])?);
        alpha.push(parse(fields[2])?);
        alpha_bar.push(parse(fields[3])?);
    }
    Ok((beta, alpha, alpha_bar))
}
