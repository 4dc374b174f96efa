//! Reverse sampling: the three step rules matching the three training
//! objectives, particle initialization, and trajectory recording.
//!
//! A run iterates t = T-1 .. 1 with the chosen step rule, then takes a
//! noiseless step at t = 0; the t = 0 snapshot is the final output.
//! Step functions take the per-particle noise draw explicitly so the
//! noiseless variants are just `z = [0, 0]`.

use std::collections::BTreeSet;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::schedule::Schedule;
use crate::target::{diffused_score, GmmTarget};
use crate::{Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMode {
    Grid,
    Gaussian,
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitMode::Grid => write!(f, "grid"),
            InitMode::Gaussian => write!(f, "gaussian"),
        }
    }
}

impl std::str::FromStr for InitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grid" => Ok(InitMode::Grid),
            "gaussian" => Ok(InitMode::Gaussian),
            other => Err(Error::InvalidArgument(format!(
                "unknown init mode `{other}` (expected grid|gaussian)"
            ))),
        }
    }
}

/// Starting particles: a uniform lattice over [-7, 7]^2 (n must be a
/// perfect square) or standard-normal draws.
pub fn init_particles(mode: InitMode, n: usize, seed: u64) -> Result<Vec<Point>> {
    if n == 0 {
        return Err(Error::InvalidArgument("particle count must be positive".into()));
    }
    match mode {
        InitMode::Grid => {
            let side = (n as f64).sqrt().round() as usize;
            if side * side != n {
                return Err(Error::InvalidArgument(format!(
                    "grid initialization needs a perfect square, got {n}"
                )));
            }
            let coord = |i: usize| {
                if side == 1 {
                    0.0
                } else {
                    -7.0 + 14.0 * i as f64 / (side - 1) as f64
                }
            };
            let mut points = Vec::with_capacity(n);
            for iy in 0..side {
                for ix in 0..side {
                    points.push([coord(ix), coord(iy)]);
                }
            }
            Ok(points)
        }
        InitMode::Gaussian => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..n)
                .map(|_| [rng.sample(StandardNormal), rng.sample(StandardNormal)])
                .collect())
        }
    }
}

/// Noise-parametrized step:
/// `x_{t-1} = (x_t - beta_t/sqrt(1-ab_t) * eps_hat)/sqrt(alpha_t) + sqrt(beta_t) z`.
pub fn step_noise<F>(predict: &F, x: Point, t: usize, schedule: &Schedule, z: Point) -> Result<Point>
where
    F: Fn(Point, usize) -> Point,
{
    schedule.check_step(t)?;
    let eps_hat = predict(x, t);
    let beta = schedule.beta(t);
    let coeff = beta / (1.0 - schedule.alpha_bar(t)).sqrt();
    let inv_root_alpha = 1.0 / schedule.alpha(t).sqrt();
    let sigma = beta.sqrt();
    Ok([
        (x[0] - coeff * eps_hat[0]) * inv_root_alpha + sigma * z[0],
        (x[1] - coeff * eps_hat[1]) * inv_root_alpha + sigma * z[1],
    ])
}

/// Clean-point parametrized step: predict x_0, then re-noise it forward
/// by t-1 steps: `x_{t-1} = sqrt(ab_{t-1}) x0_hat + sqrt(1-ab_{t-1}) z`.
pub fn step_wholestep<F>(
    predict: &F,
    x: Point,
    t: usize,
    schedule: &Schedule,
    z: Point,
) -> Result<Point>
where
    F: Fn(Point, usize) -> Point,
{
    schedule.check_step(t)?;
    let x0_hat = predict(x, t);
    let ab_prev = schedule.alpha_bar_prev(t);
    let signal = ab_prev.sqrt();
    let noise = (1.0 - ab_prev).sqrt();
    Ok([
        signal * x0_hat[0] + noise * z[0],
        signal * x0_hat[1] + noise * z[1],
    ])
}

/// Posterior-mean parametrized step: the network output is the mean of
/// the previous state; the added noise has the fixed variance beta_t.
pub fn step_singlestep<F>(
    predict: &F,
    x: Point,
    t: usize,
    schedule: &Schedule,
    z: Point,
) -> Result<Point>
where
    F: Fn(Point, usize) -> Point,
{
    schedule.check_step(t)?;
    let mean = predict(x, t);
    let sigma = schedule.beta(t).sqrt();
    Ok([mean[0] + sigma * z[0], mean[1] + sigma * z[1]])
}

/// Particle positions recorded at a decreasing set of timesteps. The
/// first snapshot (t = T-1) holds the initial particles; the t = 0
/// snapshot holds the final output after the noiseless last step.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: usize,
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn first(&self) -> &Snapshot {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("trajectory has snapshots")
    }
}

use crate::train::Objective;

/// Run the reverse process for the given objective/sampler kind,
/// recording positions at `record_at` (plus t = T-1 and t = 0, always).
pub fn run_sampler<F>(
    predict: &F,
    kind: Objective,
    schedule: &Schedule,
    particles: &[Point],
    record_at: &[usize],
    seed: u64,
) -> Result<Trajectory>
where
    F: Fn(Point, usize) -> Point,
{
    let steps = schedule.steps();
    let mut record: BTreeSet<usize> = record_at.iter().copied().collect();
    for &t in &record {
        schedule.check_step(t)?;
    }
    record.insert(steps - 1);
    record.insert(0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = particles.to_vec();
    let mut snapshots = Vec::with_capacity(record.len());
    for t in (0..steps).rev() {
        if record.contains(&t) && t > 0 {
            snapshots.push(Snapshot {
                t,
                points: state.clone(),
            });
        }
        for p in state.iter_mut() {
            let z: Point = if t > 0 {
                [rng.sample(StandardNormal), rng.sample(StandardNormal)]
            } else {
                [0.0, 0.0]
            };
            *p = match kind {
                Objective::Noise => step_noise(predict, *p, t, schedule, z)?,
                Objective::WholeStep => step_wholestep(predict, *p, t, schedule, z)?,
                Objective::SingleStep => step_singlestep(predict, *p, t, schedule, z)?,
            };
        }
    }
    snapshots.push(Snapshot {
        t: 0,
        points: state,
    });
    Ok(Trajectory { snapshots })
}

/// Wrap a trained network as a step predictor, normalizing t by the
/// schedule length.
pub fn mlp_predictor<'a>(
    mlp: &'a crate::net::Mlp,
    schedule: &'a Schedule,
) -> impl Fn(Point, usize) -> Point + 'a {
    let steps = schedule.steps() as f64;
    move |x, t| mlp.forward2(x, t as f64 / steps)
}

/// The exact-score stand-in for a trained noise model:
/// `eps_hat = -sqrt(1 - ab_t) * grad log q_t(x)`.
pub fn oracle_eps_predictor<'a>(
    target: &'a GmmTarget,
    schedule: &'a Schedule,
) -> impl Fn(Point, usize) -> Point + 'a {
    move |x, t| {
        let s = diffused_score(target, schedule, t, x).expect("step in range");
        let scale = (1.0 - schedule.alpha_bar(t)).sqrt();
        [-scale * s[0], -scale * s[1]]
    }
}

/// Trajectory CSV: `snapshot_t,particle_id,x,y`.
pub fn write_trajectory(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let mut out = String::from("snapshot_t,particle_id,x,y\n");
    for snap in &trajectory.snapshots {
        for (id, p) in snap.points.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", snap.t, id, p[0], p[1]));
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    if !path.exists() {
        return Err(Error::MissingInput(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut snapshots: Vec<Snapshot> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(path, format!("expected 4 fields on line {i}")));
        }
        let t: usize = fields[0]
            .parse()
            .map_err(|e| Error::parse(path, format!("line {i}: {e}")))?;
        let x: f64 = fields[2]
            .parse()
            .map_err(|e| Error::parse(path, format!("line {i}: {e}")))?;
        let y: f64 = fields[3]
            .parse()
            .map_err(|e| Error::parse(path, format!("line {i}: {e}")))?;
        match snapshots.last_mut() {
            Some(snap) if snap.t == t => snap.points.push([x, y]),
            _ => snapshots.push(Snapshot {
                t,
                points: vec![[x, y]],
            }),
        }
    }
    if snapshots.is_empty() {
        return Err(Error::parse(path, "trajectory has no rows"));
    }
    Ok(Trajectory { snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::mix;
    use crate::schedule::{make_cosine_default, make_linear};
    use crate::train::posterior_mean;
    use approx::assert_abs_diff_eq;

    #[test]
    fn grid_corners_for_two_by_two() {
        let pts = init_particles(InitMode::Grid, 4, 0).unwrap();
        assert_eq!(pts, vec![[-7.0, -7.0], [7.0, -7.0], [-7.0, 7.0], [7.0, 7.0]]);
    }

    #[test]
    fn grid_lattice_spacing() {
        let pts = init_particles(InitMode::Grid, 10_000, 0).unwrap();
        assert_eq!(pts.len(), 10_000);
        let spacing = 14.0 / 99.0;
        assert_eq!(pts[0], [-7.0, -7.0]);
        assert_eq!(pts[9_999], [7.0, 7.0]);
        // Minimum spacing along both axes is the lattice pitch.
        assert_abs_diff_eq!(pts[1][0] - pts[0][0], spacing, epsilon = 1e-15);
        assert_abs_diff_eq!(pts[100][1] - pts[0][1], spacing, epsilon = 1e-15);
    }

    #[test]
    fn grid_rejects_non_square_counts() {
        assert!(init_particles(InitMode::Grid, 10, 0).is_err());
        assert!(init_particles(InitMode::Grid, 0, 0).is_err());
    }

    #[test]
    fn gaussian_init_has_identity_covariance() {
        let pts = init_particles(InitMode::Gaussian, 100_000, 1).unwrap();
        let n = pts.len() as f64;
        let mean = [
            pts.iter().map(|p| p[0]).sum::<f64>() / n,
            pts.iter().map(|p| p[1]).sum::<f64>() / n,
        ];
        let mut c = [[0.0; 2]; 2];
        for p in pts.iter() {
            let d = [p[0] - mean[0], p[1] - mean[1]];
            c[0][0] += d[0] * d[0];
            c[0][1] += d[0] * d[1];
            c[1][1] += d[1] * d[1];
        }
        let se_var = (2.0 / n).sqrt();
        let se_cov = 1.0 / n.sqrt();
        assert_abs_diff_eq!(c[0][0] / n, 1.0, epsilon = 3.0 * se_var);
        assert_abs_diff_eq!(c[1][1] / n, 1.0, epsilon = 3.0 * se_var);
        assert_abs_diff_eq!(c[0][1] / n, 0.0, epsilon = 3.0 * se_cov);
    }

    #[test]
    fn noise_step_with_tiny_beta_is_near_identity() {
        let schedule = make_linear(4, 1e-12, 1e-12).unwrap();
        let zero = |_: Point, _: usize| [0.0, 0.0];
        let x = [2.5, -1.25];
        let y = step_noise(&zero, x, 2, &schedule, [0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(y[0], x[0], epsilon = 1e-11);
        assert_abs_diff_eq!(y[1], x[1], epsilon = 1e-11);
    }

    #[test]
    fn particles_freeze_under_zero_network_and_zero_noise() {
        let schedule = make_linear(10, 1e-12, 1e-12).unwrap();
        let zero = |_: Point, _: usize| [0.0, 0.0];
        let mut x = [3.0, -4.0];
        for t in (0..10).rev() {
            x = step_noise(&zero, x, t, &schedule, [0.0, 0.0]).unwrap();
        }
        assert_abs_diff_eq!(x[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(x[1], -4.0, epsilon = 1e-10);
    }

    #[test]
    fn oracle_noise_steps_recover_clean_point() {
        // With the true conditional noise as the predictor and z = 0,
        // stepping from t=1 to the final step inverts the forward map.
        let schedule = make_cosine_default(100).unwrap();
        let x0: Point = [-3.2, 1.7];
        let eps: Point = [0.8, -1.1];
        let oracle = |x: Point, t: usize| {
            let ab = schedule.alpha_bar(t);
            let scale = (1.0 - ab).sqrt();
            [
                (x[0] - ab.sqrt() * x0[0]) / scale,
                (x[1] - ab.sqrt() * x0[1]) / scale,
            ]
        };
        let x1 = mix(x0, eps, schedule.alpha_bar(1));
        let xmid = step_noise(&oracle, x1, 1, &schedule, [0.0, 0.0]).unwrap();
        let out = step_noise(&oracle, xmid, 0, &schedule, [0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(out[0], x0[0], epsilon = 1e-10);
        assert_abs_diff_eq!(out[1], x0[1], epsilon = 1e-10);

        // Same inversion holds across the whole chain.
        let mut x = mix(x0, eps, schedule.alpha_bar(99));
        for t in (0..100).rev() {
            x = step_noise(&oracle, x, t, &schedule, [0.0, 0.0]).unwrap();
        }
        assert_abs_diff_eq!(x[0], x0[0], epsilon = 1e-9);
        assert_abs_diff_eq!(x[1], x0[1], epsilon = 1e-9);
    }

    #[test]
    fn noise_and_singlestep_parametrizations_share_the_implied_mean() {
        let schedule = make_cosine_default(100).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..200 {
            let x0: Point = [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
            let eps: Point = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let t = rng.gen_range(1..100);
            let ab = schedule.alpha_bar(t);
            let xt = mix(x0, eps, ab);

            let eps_oracle = move |_: Point, _: usize| eps;
            let from_noise = step_noise(&eps_oracle, xt, t, &schedule, [0.0, 0.0]).unwrap();

            let mean_oracle = |x: Point, tt: usize| posterior_mean(x0, x, tt, &schedule);
            let from_mean = step_singlestep(&mean_oracle, xt, t, &schedule, [0.0, 0.0]).unwrap();

            assert_abs_diff_eq!(from_noise[0], from_mean[0], epsilon = 1e-10);
            assert_abs_diff_eq!(from_noise[1], from_mean[1], epsilon = 1e-10);
        }
    }

    #[test]
    fn wholestep_final_coefficients_are_nearly_clean() {
        let schedule = make_cosine_default(100).unwrap();
        // At t=1 the re-noising coefficient is sqrt(1 - ab_0) = sqrt(beta_0).
        let noise_coeff = (1.0 - schedule.alpha_bar_prev(1)).sqrt();
        assert!(noise_coeff < 0.03, "coefficient {noise_coeff}");
        let constant = |_: Point, _: usize| [1.0, -2.0];
        let y = step_wholestep(&constant, [9.0, 9.0], 1, &schedule, [0.0, 0.0]).unwrap();
        let signal = schedule.alpha_bar(0).sqrt();
        assert_eq!(y, [signal * 1.0, signal * -2.0]);
        // And at t=0 the step returns the prediction exactly.
        let y0 = step_wholestep(&constant, [9.0, 9.0], 0, &schedule, [0.5, 0.5]).unwrap();
        assert_eq!(y0, [1.0, -2.0]);
    }

    #[test]
    fn wholestep_constant_oracle_distribution() {
        let schedule = make_cosine_default(100).unwrap();
        let c: Point = [1.0, -2.0];
        let constant = move |_: Point, _: usize| c;
        let t = 40;
        let ab_prev = schedule.alpha_bar_prev(t);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for _ in 0..n {
            let z: Point = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let y = step_wholestep(&constant, [0.0, 0.0], t, &schedule, z).unwrap();
            sum[0] += y[0];
            sum[1] += y[1];
            sq[0] += y[0] * y[0];
            sq[1] += y[1] * y[1];
        }
        let nf = n as f64;
        let var = 1.0 - ab_prev;
        for d in 0..2 {
            let mean = sum[d] / nf;
            let v = sq[d] / nf - mean * mean;
            assert_abs_diff_eq!(mean, ab_prev.sqrt() * c[d], epsilon = 3.0 * (var / nf).sqrt());
            assert_abs_diff_eq!(v, var, epsilon = 3.0 * var * (2.0 / nf).sqrt());
        }
    }

    #[test]
    fn step_noise_variance_matches_beta() {
        let schedule = make_cosine_default(100).unwrap();
        let zero = |_: Point, _: usize| [0.0, 0.0];
        let t = 60;
        let beta = schedule.beta(t);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z: Point = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let y = step_noise(&zero, [1.0, 1.0], t, &schedule, z).unwrap();
            sum += y[0];
            sq += y[0] * y[0];
        }
        let nf = n as f64;
        let mean = sum / nf;
        let var = sq / nf - mean * mean;
        assert_abs_diff_eq!(var, beta, epsilon = 3.0 * beta * (2.0 / nf).sqrt());

        // Single-step noise has the same fixed variance.
        let ident = |x: Point, _: usize| x;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let z: Point = [rng.sample(StandardNormal), rng.sample(StandardNormal)];
            let y = step_singlestep(&ident, [1.0, 1.0], t, &schedule, z).unwrap();
            sum += y[1];
            sq += y[1] * y[1];
        }
        let mean = sum / nf;
        let var = sq / nf - mean * mean;
        assert_abs_diff_eq!(var, beta, epsilon = 3.0 * beta * (2.0 / nf).sqrt());
    }

    #[test]
    fn singlestep_identity_oracle_with_zero_noise_is_identity() {
        let schedule = make_cosine_default(100).unwrap();
        let ident = |x: Point, _: usize| x;
        let x = [0.4, -0.9];
        assert_eq!(step_singlestep(&ident, x, 5, &schedule, [0.0, 0.0]).unwrap(), x);
    }

    #[test]
    fn steps_reject_out_of_range_t() {
        let schedule = make_cosine_default(10).unwrap();
        let zero = |_: Point, _: usize| [0.0, 0.0];
        assert!(step_noise(&zero, [0.0, 0.0], 10, &schedule, [0.0, 0.0]).is_err());
        assert!(step_wholestep(&zero, [0.0, 0.0], 11, &schedule, [0.0, 0.0]).is_err());
        assert!(step_singlestep(&zero, [0.0, 0.0], 99, &schedule, [0.0, 0.0]).is_err());
    }

    #[test]
    fn run_sampler_records_requested_snapshots() {
        let schedule = make_cosine_default(100).unwrap();
        let zero = |_: Point, _: usize| [0.0, 0.0];
        let particles = init_particles(InitMode::Grid, 16, 0).unwrap();
        let traj = run_sampler(&zero, Objective::Noise, &schedule, &particles, &[99, 54, 36, 18, 0], 0)
            .unwrap();
        let ts: Vec<usize> = traj.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![99, 54, 36, 18, 0]);
        assert_eq!(traj.first().t, 99);
        assert_eq!(traj.first().points, particles);
        assert_eq!(traj.last().t, 0);
        for snap in &traj.snapshots {
            assert_eq!(snap.points.len(), 16);
            assert!(snap.points.iter().all(|p| p[0].is_finite() && p[1].is_finite()));
        }
    }

    #[test]
    fn run_sampler_is_seed_reproducible() {
        let schedule = make_cosine_default(50).unwrap();
        let mlp = crate::net::Mlp::init(3);
        let predict = mlp_predictor(&mlp, &schedule);
        let particles = init_particles(InitMode::Gaussian, 64, 5).unwrap();
        let a = run_sampler(&predict, Objective::Noise, &schedule, &particles, &[25], 11).unwrap();
        let b = run_sampler(&predict, Objective::Noise, &schedule, &particles, &[25], 11).unwrap();
        assert_eq!(a, b);
        let c = run_sampler(&predict, Objective::Noise, &schedule, &particles, &[25], 12).unwrap();
        assert_ne!(a.last().points, c.last().points);
    }

    #[test]
    fn run_sampler_rejects_bad_record_steps() {
        let schedule = make_cosine_default(10).unwrap();
        let zero = |_: Point, _: usize| [0.0, 0.0];
        let particles = init_particles(InitMode::Grid, 4, 0).unwrap();
        assert!(
            run_sampler(&zero, Objective::Noise, &schedule, &particles, &[10], 0).is_err()
        );
    }

    #[test]
    fn trajectory_round_trips_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trajectory.csv");
        let schedule = make_cosine_default(20).unwrap();
        let mlp = crate::net::Mlp::init(0);
        let predict = mlp_predictor(&mlp, &schedule);
        let particles = init_particles(InitMode::Gaussian, 25, 0).unwrap();
        let traj =
            run_sampler(&predict, Objective::Noise, &schedule, &particles, &[10], 0).unwrap();
        write_trajectory(&traj, &path).unwrap();
        let loaded = read_trajectory(&path).unwrap();
        assert_eq!(loaded, traj);
    }
}
