//! Sample-quality evaluation: energy distance, mode statistics,
//! positional bias, and vector-field export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sample::Trajectory;
use crate::schedule::Schedule;
use crate::target::{log_density, GmmTarget};
use crate::train::Objective;
use crate::{Error, Point, Result};

/// Two-sample energy distance `2 E|a-b| - E|a-a'| - E|b-b'|` over exact
/// pairwise sums (V-statistic form, diagonal included). Arguments are
/// put in a canonical order first so the result is bitwise symmetric.
pub fn energy_distance(a: &[Point], b: &[Point]) -> f64 {
    assert!(!a.is_empty() && !b.is_empty(), "energy distance needs nonempty samples");
    let (x, y) = if canonical_order(a, b) { (a, b) } else { (b, a) };
    2.0 * cross_mean(x, y) - within_mean(x) - within_mean(y)
}

fn canonical_order(a: &[Point], b: &[Point]) -> bool {
    if a.len() != b.len() {
        return a.len() < b.len();
    }
    for (p, q) in a.iter().zip(b) {
        for d in 0..2 {
            match p[d].total_cmp(&q[d]) {
                std::cmp::Ordering::Less => return true,
                std::cmp::Ordering::Greater => return false,
                std::cmp::Ordering::Equal => {}
            }
        }
    }
    true
}

fn cross_mean(a: &[Point], b: &[Point]) -> f64 {
    let mut sum = 0.0;
    for p in a {
        for q in b {
            sum += dist(*p, *q);
        }
    }
    sum / (a.len() as f64 * b.len() as f64)
}

fn within_mean(a: &[Point]) -> f64 {
    let mut sum = 0.0;
    for p in a {
        for q in a {
            sum += dist(*p, *q);
        }
    }
    sum / (a.len() as f64 * a.len() as f64)
}

fn dist(p: Point, q: Point) -> f64 {
    let dx = p[0] - q[0];
    let dy = p[1] - q[1];
    (dx * dx + dy * dy).sqrt()
}

/// Nearest-true-mean assignment with the lowest index winning ties.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeStats {
    pub labels: Vec<usize>,
    pub fractions: Vec<f64>,
    /// Per-mode coordinate standard deviations (population form).
    pub std: Vec<Point>,
}

pub fn assign_modes(samples: &[Point], target: &GmmTarget) -> ModeStats {
    let means = target.means();
    let k = means.len();
    let mut labels = Vec::with_capacity(samples.len());
    let mut counts = vec![0usize; k];
    let mut sums = vec![[0.0; 2]; k];
    for p in samples {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (m, mean) in means.iter().enumerate() {
            let d = (p[0] - mean[0]).powi(2) + (p[1] - mean[1]).powi(2);
            if d < best_d {
                best_d = d;
                best = m;
            }
        }
        labels.push(best);
        counts[best] += 1;
        sums[best][0] += p[0];
        sums[best][1] += p[1];
    }
    let mut sq = vec![[0.0; 2]; k];
    for (p, &l) in samples.iter().zip(&labels) {
        let mean = [
            sums[l][0] / counts[l] as f64,
            sums[l][1] / counts[l] as f64,
        ];
        sq[l][0] += (p[0] - mean[0]).powi(2);
        sq[l][1] += (p[1] - mean[1]).powi(2);
    }
    let n = samples.len() as f64;
    ModeStats {
        labels,
        fractions: counts.iter().map(|&c| c as f64 / n).collect(),
        std: sq
            .iter()
            .zip(&counts)
            .map(|(s, &c)| {
                if c == 0 {
                    [0.0, 0.0]
                } else {
                    [(s[0] / c as f64).sqrt(), (s[1] / c as f64).sqrt()]
                }
            })
            .collect(),
    }
}

/// Fraction of particles whose nearest-mean label at the first snapshot
/// matches the label at the last: 0.5 means no bias, 1.0 means fully
/// positionally determined.
pub fn positional_bias(trajectory: &Trajectory, target: &GmmTarget) -> Result<f64> {
    if trajectory.snapshots.len() < 2 {
        return Err(Error::InvalidArgument(
            "positional bias needs first and last snapshots".into(),
        ));
    }
    let first = assign_modes(&trajectory.first().points, target);
    let last = assign_modes(&trajectory.last().points, target);
    if first.labels.len() != last.labels.len() {
        return Err(Error::ShapeMismatch("snapshot sizes differ".into()));
    }
    let matches = first
        .labels
        .iter()
        .zip(&last.labels)
        .filter(|(a, b)| a == b)
        .count();
    Ok(matches as f64 / first.labels.len() as f64)
}

/// Evaluation summary persisted as JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub energy_distance: f64,
    /// Mean log density of the samples under the true target.
    pub mean_log_likelihood: f64,
    pub mode_fractions: [f64; 2],
    pub per_mode_std: [[f64; 2]; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positional_bias: Option<f64>,
}

pub fn metrics_report(
    samples: &[Point],
    reference: &[Point],
    trajectory: Option<&Trajectory>,
    target: &GmmTarget,
) -> Result<MetricsReport> {
    if samples.is_empty() || reference.is_empty() {
        return Err(Error::InvalidArgument("metrics need nonempty samples".into()));
    }
    let stats = assign_modes(samples, target);
    if stats.fractions.len() != 2 {
        return Err(Error::InvalidArgument(
            "metrics report expects the two-component target".into(),
        ));
    }
    let bias = trajectory
        .map(|t| positional_bias(t, target))
        .transpose()?;
    Ok(MetricsReport {
        energy_distance: energy_distance(samples, reference),
        mean_log_likelihood: samples
            .iter()
            .map(|&p| log_density(target, p))
            .sum::<f64>()
            / samples.len() as f64,
        mode_fractions: [stats.fractions[0], stats.fractions[1]],
        per_mode_std: [stats.std[0], stats.std[1]],
        positional_bias: bias,
    })
}

/// Evaluate a field over a lattice on [-7, 7]^2 at each requested
/// timestep and write `t,x,y,u,v` rows; for the noise objective the
/// implied score `-output / sqrt(1 - alpha_bar_t)` is appended as two
/// extra columns.
pub fn export_vector_field<F>(
    field: &F,
    objective: Objective,
    schedule: &Schedule,
    t_list: &[usize],
    grid_side: usize,
    path: &Path,
) -> Result<()>
where
    F: Fn(Point, usize) -> Point,
{
    if grid_side == 0 {
        return Err(Error::InvalidArgument("grid side must be positive".into()));
    }
    for &t in t_list {
        schedule.check_step(t)?;
    }
    let coord = |i: usize| {
        if grid_side == 1 {
            0.0
        } else {
            -7.0 + 14.0 * i as f64 / (grid_side - 1) as f64
        }
    };
    let noise_columns = objective == Objective::Noise;
    let mut out = String::from(if noise_columns {
        "t,x,y,u,v,su,sv\n"
    } else {
        "t,x,y,u,v\n"
    });
    for &t in t_list {
        let scale = (1.0 - schedule.alpha_bar(t)).sqrt();
        for iy in 0..grid_side {
            for ix in 0..grid_side {
                let p = [coord(ix), coord(iy)];
                let v = field(p, t);
                if noise_columns {
                    out.push_str(&format!(
                        "{},{},{},{},{},{},{}\n",
                        t,
                        p[0],
                        p[1],
                        v[0],
                        v[1],
                        -v[0] / scale,
                        -v[1] / scale
                    ));
                } else {
                    out.push_str(&format!("{},{},{},{},{}\n", t, p[0], p[1], v[0], v[1]));
                }
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
