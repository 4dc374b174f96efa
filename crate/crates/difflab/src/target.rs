//! The analytic ground-truth distribution: a mixture of axis-aligned
//! Gaussians in the plane, with exact density, score and
//! diffused-marginal score oracles.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::schedule::Schedule;
use crate::{Error, Point, Result};

const LOG_2PI: f64 = 1.8378770664093453;

/// One mixture component with diagonal covariance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: Point,
    /// Diagonal of the covariance matrix.
    pub cov_diag: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmTarget {
    pub components: Vec<Component>,
}

impl GmmTarget {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("mixture needs >= 1 component".into()));
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, expected 1"
            )));
        }
        for c in &components {
            if !(c.weight > 0.0) || c.cov_diag[0] <= 0.0 || c.cov_diag[1] <= 0.0 {
                return Err(Error::InvalidArgument(
                    "component weights and covariance diagonals must be positive".into(),
                ));
            }
        }
        Ok(GmmTarget { components })
    }

    pub fn means(&self) -> Vec<Point> {
        self.components.iter().map(|c| c.mean).collect()
    }
}

/// The two-cluster target used throughout: equal weights, means at
/// (-4,-4) and (4,4), covariances diag(0.3, 0.1) and diag(0.2, 0.2).
pub fn default_target() -> GmmTarget {
    GmmTarget {
        components: vec![
            Component {
                weight: 0.5,
                mean: [-4.0, -4.0],
                cov_diag: [0.3, 0.1],
            },
            Component {
                weight: 0.5,
                mean: [4.0, 4.0],
                cov_diag: [0.2, 0.2],
            },
        ],
    }
}

/// A sampled training set, reproducible from its seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Point>,
    pub seed: u64,
}

/// Draw `n` i.i.d. points: pick a component by weight, then a Gaussian
/// draw with that component's diagonal covariance.
pub fn sample(target: &GmmTarget, n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(sample_one(target, &mut rng));
    }
    Dataset { points, seed }
}

pub fn sample_one<R: Rng>(target: &GmmTarget, rng: &mut R) -> Point {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut comp = &target.components[target.components.len() - 1];
    for c in &target.components {
        acc += c.weight;
        if u < acc {
            comp = c;
            break;
        }
    }
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    [
        comp.mean[0] + comp.cov_diag[0].sqrt() * z0,
        comp.mean[1] + comp.cov_diag[1].sqrt() * z1,
    ]
}

/// Per-component log density plus log weight, the shared kernel of
/// [`log_density`] and [`score`].
fn component_log_terms(target: &GmmTarget, x: Point) -> Vec<f64> {
    target
        .components
        .iter()
        .map(|c| {
            let dx = x[0] - c.mean[0];
            let dy = x[1] - c.mean[1];
            let quad = dx * dx / c.cov_diag[0] + dy * dy / c.cov_diag[1];
            let log_det = c.cov_diag[0].ln() + c.cov_diag[1].ln();
            c.weight.ln() - LOG_2PI - 0.5 * log_det - 0.5 * quad
        })
        .collect()
}

/// `log p(x)`, computed with a max-shift over component log terms so the
/// result stays finite for any representable exponent.
pub fn log_density(target: &GmmTarget, x: Point) -> f64 {
    let terms = component_log_terms(target, x);
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Exact score `grad_x log p(x)`: responsibility-weighted sum of the
/// per-component Gaussian scores, with responsibilities formed in log
/// space.
pub fn score(target: &GmmTarget, x: Point) -> Point {
    let terms = component_log_terms(target, x);
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut g = [0.0, 0.0];
    for (c, w) in target.components.iter().zip(&weights) {
        let r = w / total;
        g[0] += r * (c.mean[0] - x[0]) / c.cov_diag[0];
        g[1] += r * (c.mean[1] - x[1]) / c.cov_diag[1];
    }
    g
}

/// The diffused marginal at signal level `alpha_bar` is itself a
/// mixture: means scale by `sqrt(alpha_bar)` and covariances become
/// `alpha_bar * cov + (1 - alpha_bar) * I`.
pub fn diffused_target(target: &GmmTarget, alpha_bar: f64) -> GmmTarget {
    let root = alpha_bar.sqrt();
    GmmTarget {
        components: target
            .components
            .iter()
            .map(|c| Component {
                weight: c.weight,
                mean: [root * c.mean[0], root * c.mean[1]],
                cov_diag: [
                    alpha_bar * c.cov_diag[0] + (1.0 - alpha_bar),
                    alpha_bar * c.cov_diag[1] + (1.0 - alpha_bar),
                ],
            })
            .collect(),
    }
}

/// Exact score of the diffused marginal `q(x_t)` at step `t`.
pub fn diffused_score(target: &GmmTarget, schedule: &Schedule, t: usize, x: Point) -> Result<Point> {
    schedule.check_step(t)?;
    Ok(score(&diffused_target(target, schedule.alpha_bar(t)), x))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub seed: u64,
    pub n: usize,
    pub target: GmmTarget,
}

/// Write the dataset as `x,y` CSV plus a sidecar JSON metadata record.
pub fn write_dataset(dataset: &Dataset, target: &GmmTarget, csv_path: &Path) -> Result<()> {
    let mut out = String::from("x,y\n");
    for p in &dataset.points {
        out.push_str(&format!("{},{}\n", p[0], p[1]));
    }
    std::fs::write(csv_path, out).map_err(|e| Error::io(csv_path, e))?;
    let meta = DatasetMeta {
        seed: dataset.seed,
        n: dataset.points.len(),
        target: target.clone(),
    };
    let meta_path = csv_path.with_extension("meta.json");
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    std::fs::write(&meta_path, text).map_err(|e| Error::io(meta_path, e))
}

pub fn read_dataset(csv_path: &Path) -> Result<Vec<Point>> {
    if !csv_path.exists() {
        return Err(Error::MissingInput(csv_path.to_path_buf()));
    }
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let mut fields = line.split(',');
        let parse = |s: Option<&str>| {
            s.ok_or_else(|| Error::parse(csv_path, format!("line {i}: missing field")))?
                .parse::<f64>()
                .map_err(|e| Error::parse(csv_path, format!("line {i}: {e}")))
        };
        let x = parse(fields.next())?;
        let y = parse(fields.next())?;
        points.push([x, y]);
    }
    if points.is_empty() {
        return Err(Error::parse(csv_path, "dataset has no rows"));
    }
    Ok(points)
}
