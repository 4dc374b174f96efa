//! Discrete-state diffusion over factored categorical variables:
//! transition matrices, closed-form marginals and posteriors, the
//! group-weighted cross-entropy objective, and marginalized reverse
//! sampling. State counts stay small enough that every distribution is
//! checkable by exhaustive enumeration.

use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::net::{Gradients, Mlp};
use crate::schedule::{make_cosine_default, Schedule};
use crate::target::{default_target, sample};
use crate::train::{adam_step, AdamState};
use crate::{Error, Point, Result};

pub type Matrix = Vec<Vec<f64>>;

const ROW_TOL: f64 = 1e-12;

/// A one-hot categorical value over `d` states, stored as its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OneHot {
    d: usize,
    index: usize,
}

impl OneHot {
    pub fn new(d: usize, index: usize) -> Result<Self> {
        if d == 0 || index >= d {
            return Err(Error::InvalidArgument(format!(
                "one-hot index {index} out of range for {d} states"
            )));
        }
        Ok(OneHot { d, index })
    }

    pub fn from_vec(v: &[f64]) -> Result<Self> {
        let ones = v.iter().filter(|&&x| x == 1.0).count();
        let zeros = v.iter().filter(|&&x| x == 0.0).count();
        if ones != 1 || ones + zeros != v.len() {
            return Err(Error::InvalidArgument(
                "one-hot vector needs exactly one entry 1 and the rest 0".into(),
            ));
        }
        let index = v.iter().position(|&x| x == 1.0).unwrap();
        OneHot::new(v.len(), index)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.d];
        v[self.index] = 1.0;
        v
    }
}

/// Categorical variables in two groups (node-like and edge-like) with
/// the weight applied to the second group's loss.
#[derive(Debug, Clone)]
pub struct GroupedSample {
    pub group_a: Vec<OneHot>,
    pub group_b: Vec<OneHot>,
    pub lambda: f64,
}

/// Per-step transition matrices and their running products.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionChain {
    d: usize,
    q: Vec<Matrix>,
    q_bar: Vec<Matrix>,
}

impl TransitionChain {
    /// Build from explicit row-stochastic transition matrices.
    pub fn from_transitions(q: Vec<Matrix>) -> Result<Self> {
        if q.is_empty() {
            return Err(Error::InvalidArgument("chain needs >= 1 step".into()));
        }
        let d = q[0].len();
        if d == 0 {
            return Err(Error::InvalidArgument("chain needs >= 1 state".into()));
        }
        for (t, m) in q.iter().enumerate() {
            if m.len() != d || m.iter().any(|row| row.len() != d) {
                return Err(Error::ShapeMismatch(format!("Q[{t}] is not {d}x{d}")));
            }
            for (i, row) in m.iter().enumerate() {
                if row.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "Q[{t}] row {i} has a negative entry"
                    )));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "Q[{t}] row {i} sums to {sum}"
                    )));
                }
            }
        }
        let mut q_bar = Vec::with_capacity(q.len());
        let mut prod = q[0].clone();
        q_bar.push(prod.clone());
        for m in &q[1..] {
            prod = matmul(&prod, m);
            q_bar.push(prod.clone());
        }
        Ok(TransitionChain { d, q, q_bar })
    }

    pub fn states(&self) -> usize {
        self.d
    }

    pub fn steps(&self) -> usize {
        self.q.len()
    }

    pub fn transition(&self, t: usize) -> &Matrix {
        &self.q[t]
    }

    pub fn cumulative(&self, t: usize) -> &Matrix {
        &self.q_bar[t]
    }

    fn check_step(&self, t: usize) -> Result<()> {
        if t >= self.steps() {
            return Err(Error::StepOutOfRange {
                t,
                steps: self.steps(),
            });
        }
        Ok(())
    }
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let d = a.len();
    let mut out = vec![vec![0.0; d]; d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i][j] += aik * b[k][j];
            }
        }
    }
    out
}

/// Single uniform-target transition: `(1-beta) I + beta/d * ones`.
pub fn uniform_transition(d: usize, beta: f64) -> Matrix {
    let off = beta / d as f64;
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { 1.0 - beta + off } else { off })
                .collect()
        })
        .collect()
}

/// Single marginal-target transition: `(1-beta) I + beta * ones * m^T`.
pub fn marginal_transition(d: usize, beta: f64, marginals: &[f64]) -> Matrix {
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let m = beta * marginals[j];
                    if i == j {
                        1.0 - beta + m
                    } else {
                        m
                    }
                })
                .collect()
        })
        .collect()
}

/// Chain whose terminal distribution is uniform over `d` states.
pub fn make_uniform_chain(d: usize, schedule: &Schedule) -> Result<TransitionChain> {
    if d < 2 {
        return Err(Error::InvalidArgument("chain needs d >= 2 states".into()));
    }
    TransitionChain::from_transitions(
        (0..schedule.steps())
            .map(|t| uniform_transition(d, schedule.beta(t)))
            .collect(),
    )
}

/// Chain whose terminal distribution is the supplied marginal vector.
pub fn make_marginal_chain(
    d: usize,
    schedule: &Schedule,
    marginals: &[f64],
) -> Result<TransitionChain> {
    if d < 2 {
        return Err(Error::InvalidArgument("chain needs d >= 2 states".into()));
    }
    validate_distribution(marginals, d)?;
    TransitionChain::from_transitions(
        (0..schedule.steps())
            .map(|t| marginal_transition(d, schedule.beta(t), marginals))
            .collect(),
    )
}

fn validate_distribution(p: &[f64], d: usize) -> Result<()> {
    if p.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "distribution has {} entries, expected {d}",
            p.len()
        )));
    }
    if p.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::InvalidArgument("distribution entries must be >= 0".into()));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("distribution sums to {sum}")));
    }
    Ok(())
}

/// `q(x_t | x_0)`: the `x_0` row of the cumulative product.
pub fn marginal(x0: &OneHot, chain: &TransitionChain, t: usize) -> Result<Vec<f64>> {
    chain.check_step(t)?;
    if x0.d() != chain.states() {
        return Err(Error::ShapeMismatch("one-hot width differs from chain".into()));
    }
    Ok(chain.cumulative(t)[x0.index()].clone())
}

/// `q(x_{t-1} | x_t, x_0)` over the previous state, from Bayes' rule:
/// proportional to `q(x_t | x_{t-1}) * q(x_{t-1} | x_0)`, normalized by
/// `q(x_t | x_0)`.
pub fn posterior(
    xt: &OneHot,
    x0: &OneHot,
    chain: &TransitionChain,
    t: usize,
) -> Result<Vec<f64>> {
    chain.check_step(t)?;
    if t == 0 {
        return Err(Error::StepOutOfRange {
            t: 0,
            steps: chain.steps(),
        });
    }
    if xt.d() != chain.states() || x0.d() != chain.states() {
        return Err(Error::ShapeMismatch("one-hot width differs from chain".into()));
    }
    let denom = chain.cumulative(t)[x0.index()][xt.index()];
    if !(denom > 0.0) {
        return Err(Error::ImpossibleEvidence);
    }
    let prev = &chain.cumulative(t - 1)[x0.index()];
    let step = chain.transition(t);
    Ok((0..chain.states())
        .map(|j| step[j][xt.index()] * prev[j] / denom)
        .collect())
}

/// Unnormalized reverse weights: for each previous state `j`,
/// `q(x_t | x_{t-1}=j) * sum_i p0(i) q(x_{t-1}=j | x_0=i)`, with terms
/// where `q(x_t | x_{t-1}) = 0` zeroed explicitly.
fn reverse_weights(
    xt: &OneHot,
    predicted_p0: &[f64],
    chain: &TransitionChain,
    t: usize,
) -> Result<Vec<f64>> {
    chain.check_step(t)?;
    if t == 0 {
        return Err(Error::StepOutOfRange {
            t: 0,
            steps: chain.steps(),
        });
    }
    validate_distribution(predicted_p0, chain.states())?;
    let step = chain.transition(t);
    let prev_bar = chain.cumulative(t - 1);
    Ok((0..chain.states())
        .map(|j| {
            let q_step = step[j][xt.index()];
            if q_step == 0.0 {
                return 0.0;
            }
            let reach: f64 = (0..chain.states())
                .map(|i| predicted_p0[i] * prev_bar[i][j])
                .sum();
            q_step * reach
        })
        .collect())
}

/// `p(x_{t-1} | x_t)` marginalized over the network's clean-state
/// prediction and renormalized.
pub fn reverse_distribution(
    xt: &OneHot,
    predicted_p0: &[f64],
    chain: &TransitionChain,
    t: usize,
) -> Result<Vec<f64>> {
    let mut w = reverse_weights(xt, predicted_p0, chain, t)?;
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ImpossiblePrediction);
    }
    for v in w.iter_mut() {
        *v /= total;
    }
    Ok(w)
}

/// `sum_A CE(x_i, p_i) + lambda * sum_B CE(e_j, p_j)` with natural
/// logs. A zero predicted probability on a true class yields infinity.
pub fn grouped_cross_entropy(
    pred_a: &[Vec<f64>],
    pred_b: &[Vec<f64>],
    truth: &GroupedSample,
) -> Result<f64> {
    if pred_a.len() != truth.group_a.len() || pred_b.len() != truth.group_b.len() {
        return Err(Error::ShapeMismatch(
            "prediction counts differ from the grouped sample".into(),
        ));
    }
    if truth.lambda < 0.0 {
        return Err(Error::InvalidArgument("lambda must be nonnegative".into()));
    }
    let ce = |pred: &[Vec<f64>], truth: &[OneHot]| -> Result<f64> {
        let mut total = 0.0;
        for (p, x) in pred.iter().zip(truth) {
            validate_distribution(p, x.d())?;
            let prob = p[x.index()];
            total += if prob == 0.0 { f64::INFINITY } else { -prob.ln() };
        }
        Ok(total)
    };
    Ok(ce(pred_a, &truth.group_a)? + truth.lambda * ce(pred_b, &truth.group_b)?)
}

/// Chain dump CSV: `t,i,j,q`.
pub fn write_chain(chain: &TransitionChain, path: &Path) -> Result<()> {
    let mut out = String::from("t,i,j,q\n");
    for t in 0..chain.steps() {
        let m = chain.transition(t);
        for (i, row) in m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out.push_str(&format!("{t},{i},{j},{v}\n"));
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------------------
// End-to-end categorical demo.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChainKind {
    Uniform,
    Marginal,
}

impl fmt::Display for ChainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChainKind::Uniform => write!(f, "uniform"),
            ChainKind::Marginal => write!(f, "marginal"),
        }
    }
}

impl std::str::FromStr for ChainKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(ChainKind::Uniform),
            "marginal" => Ok(ChainKind::Marginal),
            other => Err(Error::InvalidArgument(format!(
                "unknown chain kind `{other}` (expected uniform|marginal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteDemoConfig {
    /// States per axis; kept small so everything stays enumerable.
    pub d: usize,
    pub steps: usize,
    pub chain: ChainKind,
    pub n_train: usize,
    pub n_gen: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lambda: f64,
    pub seed: u64,
}

impl DiscreteDemoConfig {
    pub fn standard(d: usize, chain: ChainKind, seed: u64) -> Self {
        DiscreteDemoConfig {
            d,
            steps: 12,
            chain,
            n_train: 4000,
            n_gen: 4000,
            epochs: 15,
            batch_size: 64,
            lr: 1e-3,
            lambda: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=8).contains(&self.d) {
            return Err(Error::InvalidArgument(format!(
                "demo needs 2 <= d <= 8, got {}",
                self.d
            )));
        }
        if self.steps == 0 || self.steps > 20 {
            return Err(Error::InvalidArgument(format!(
                "demo needs 1 <= T <= 20, got {}",
                self.steps
            )));
        }
        if self.n_train == 0 || self.n_gen == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "demo sizes and epochs must be positive".into(),
            ));
        }
        if !(self.lambda >= 0.0) || !(self.lr > 0.0) {
            return Err(Error::InvalidArgument(
                "lambda must be >= 0 and lr > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscreteDemoMetrics {
    pub d: usize,
    pub chain: ChainKind,
    pub seed: u64,
    /// Total-variation distance between generated and training
    /// marginals, per axis and averaged.
    pub tv_axis0: f64,
    pub tv_axis1: f64,
    pub tv_mean: f64,
    pub epoch_loss: Vec<f64>,
}

/// Quantize a plane point into per-axis bins over [-7, 7].
pub fn quantize(p: Point, d: usize) -> [usize; 2] {
    let bin = |x: f64| {
        let idx = ((x + 7.0) / (14.0 / d as f64)).floor() as isize;
        idx.clamp(0, d as isize - 1) as usize
    };
    [bin(p[0]), bin(p[1])]
}

fn bin_center(idx: usize, d: usize) -> f64 {
    -7.0 + (idx as f64 + 0.5) * 14.0 / d as f64
}

fn axis_marginals(states: &[[usize; 2]], d: usize) -> [Vec<f64>; 2] {
    let mut m = [vec![0.0; d], vec![0.0; d]];
    for s in states {
        m[0][s[0]] += 1.0;
        m[1][s[1]] += 1.0;
    }
    let n = states.len() as f64;
    for axis in m.iter_mut() {
        for v in axis.iter_mut() {
            *v /= n;
        }
    }
    m
}

fn categorical_draw<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Run the categorical pipeline on the standard quantized mixture data.
pub fn discrete_demo_run(config: &DiscreteDemoConfig) -> Result<DiscreteDemoMetrics> {
    let points = sample(&default_target(), config.n_train, config.seed).points;
    discrete_demo_run_on(config, &points)
}

/// The per-axis transition chains the demo uses for the given data.
pub fn demo_chains(
    config: &DiscreteDemoConfig,
    points: &[Point],
) -> Result<[TransitionChain; 2]> {
    let d = config.d;
    let states: Vec<[usize; 2]> = points.iter().map(|&p| quantize(p, d)).collect();
    let data_marginals = axis_marginals(&states, d);
    let schedule = make_cosine_default(config.steps)?;
    Ok(match config.chain {
        ChainKind::Uniform => {
            let c = make_uniform_chain(d, &schedule)?;
            [c.clone(), c]
        }
        ChainKind::Marginal => [
            make_marginal_chain(d, &schedule, &data_marginals[0])?,
            make_marginal_chain(d, &schedule, &data_marginals[1])?,
        ],
    })
}

/// Same pipeline on caller-supplied points (quantized internally):
/// corrupt per-axis categoricals, train the shared trunk with a
/// two-group softmax head, sample back through the reverse
/// distribution, and report marginal total-variation distances.
pub fn discrete_demo_run_on(
    config: &DiscreteDemoConfig,
    points: &[Point],
) -> Result<DiscreteDemoMetrics> {
    config.validate()?;
    if points.is_empty() {
        return Err(Error::InvalidArgument("demo needs training points".into()));
    }
    let d = config.d;
    let steps = config.steps;
    let states: Vec<[usize; 2]> = points.iter().map(|&p| quantize(p, d)).collect();
    let data_marginals = axis_marginals(&states, d);
    let chains = demo_chains(config, points)?;

    let mut mlp = Mlp::init_with_output(config.seed, 2 * d);
    let mut adam = AdamState::new(&mlp, config.lr);

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut t_rng = ChaCha8Rng::seed_from_u64(config.seed);
    t_rng.set_stream(2);
    let mut corrupt_rng = ChaCha8Rng::seed_from_u64(config.seed);
    corrupt_rng.set_stream(3);

    let mut order: Vec<usize> = (0..states.len()).collect();
    let mut epoch_loss = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        use rand::seq::SliceRandom;
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let mut inputs = Vec::with_capacity(chunk.len());
            let mut clean = Vec::with_capacity(chunk.len());
            for &i in chunk {
                let t = t_rng.gen_range(0..steps);
                let mut corrupted = [0usize; 2];
                for axis in 0..2 {
                    let row = &chains[axis].cumulative(t)[states[i][axis]];
                    corrupted[axis] = categorical_draw(row, &mut corrupt_rng);
                }
                inputs.push((
                    [bin_center(corrupted[0], d), bin_center(corrupted[1], d)],
                    t as f64 / steps as f64,
                ));
                clean.push(states[i]);
            }
            let norm = 1.0 / chunk.len() as f64;
            let lambda = config.lambda;
            let (loss, grads) = mlp.backward_with(&inputs, |idx, logits| {
                let truth = clean[idx];
                let (la, ga) = softmax_ce_grad(&logits[..d], truth[0]);
                let (lb, gb) = softmax_ce_grad(&logits[d..], truth[1]);
                let mut g = Vec::with_capacity(2 * d);
                g.extend(ga.iter().map(|v| v * norm));
                g.extend(gb.iter().map(|v| v * lambda * norm));
                ((la + lambda * lb) * norm, g)
            });
            adam_step(&mut mlp, &grads, &mut adam)?;
            loss_sum += loss * chunk.len() as f64;
        }
        epoch_loss.push(loss_sum / states.len() as f64);
    }

    // Reverse sampling from the chain's terminal distribution.
    let mut gen_rng = ChaCha8Rng::seed_from_u64(config.seed);
    gen_rng.set_stream(4);
    let terminal: [Vec<f64>; 2] = [
        propagate(&data_marginals[0], chains[0].cumulative(steps - 1)),
        propagate(&data_marginals[1], chains[1].cumulative(steps - 1)),
    ];
    let mut generated: Vec<[usize; 2]> = Vec::with_capacity(config.n_gen);
    for _ in 0..config.n_gen {
        let mut state = [
            categorical_draw(&terminal[0], &mut gen_rng),
            categorical_draw(&terminal[1], &mut gen_rng),
        ];
        for t in (1..steps).rev() {
            let input = [bin_center(state[0], d), bin_center(state[1], d)];
            let logits = mlp.forward(input, t as f64 / steps as f64);
            for axis in 0..2 {
                let p0 = softmax(if axis == 0 { &logits[..d] } else { &logits[d..] });
                let xt = OneHot::new(d, state[axis])?;
                let p_prev = reverse_distribution(&xt, &p0, &chains[axis], t)?;
                state[axis] = categorical_draw(&p_prev, &mut gen_rng);
            }
        }
        generated.push(state);
    }

    let gen_marginals = axis_marginals(&generated, d);
    let tv0 = total_variation(&gen_marginals[0], &data_marginals[0]);
    let tv1 = total_variation(&gen_marginals[1], &data_marginals[1]);
    Ok(DiscreteDemoMetrics {
        d,
        chain: config.chain,
        seed: config.seed,
        tv_axis0: tv0,
        tv_axis1: tv1,
        tv_mean: 0.5 * (tv0 + tv1),
        epoch_loss,
    })
}

fn propagate(dist: &[f64], m: &Matrix) -> Vec<f64> {
    let d = dist.len();
    let mut out = vec![0.0; d];
    for i in 0..d {
        if dist[i] == 0.0 {
            continue;
        }
        for j in 0..d {
            out[j] += dist[i] * m[i][j];
        }
    }
    out
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Stable cross-entropy of a softmax head against a class index,
/// returning the loss and the gradient w.r.t. the logits.
fn softmax_ce_grad(logits: &[f64], truth: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let log_sum = max + sum.ln();
    let loss = log_sum - logits[truth];
    let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
    grad[truth] -= 1.0;
    (loss, grad)
}
