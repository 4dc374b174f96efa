//! The regression network: a fixed 3-input MLP with two ReLU layers of
//! width 20 and a linear head, with hand-written forward and
//! reverse-mode passes. The head width is 2 for the continuous
//! objectives and `d`-per-group for the categorical demo.
//!
//! Input is always `(x, y, t/T)`. ReLU's derivative at exactly 0 is 0.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Point, Result};

pub const INPUT_DIM: usize = 3;
pub const HIDDEN: usize = 20;

/// Parameter count of the standard two-output network.
pub const STANDARD_PARAM_COUNT: usize =
    HIDDEN * INPUT_DIM + HIDDEN + HIDDEN * HIDDEN + HIDDEN + 2 * HIDDEN + 2;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub out_dim: usize,
    /// HIDDEN x INPUT_DIM, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// HIDDEN x HIDDEN, row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    /// out_dim x HIDDEN, row-major.
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

/// Parameter-shaped accumulator, used for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        Gradients {
            w1: vec![0.0; mlp.w1.len()],
            b1: vec![0.0; mlp.b1.len()],
            w2: vec![0.0; mlp.w2.len()],
            b2: vec![0.0; mlp.b2.len()],
            w3: vec![0.0; mlp.w3.len()],
            b3: vec![0.0; mlp.b3.len()],
        }
    }

    pub fn arrays(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn arrays_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }
}

impl Mlp {
    /// Seed-reproducible initialization: weights uniform in
    /// `(-sqrt(1/fan_in), sqrt(1/fan_in))` per layer, biases zero.
    pub fn init(seed: u64) -> Self {
        Self::init_with_output(seed, 2)
    }

    pub fn init_with_output(seed: u64, out_dim: usize) -> Self {
        assert!(out_dim >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = |rows: usize, cols: usize| -> Vec<f64> {
            let bound = (1.0 / cols as f64).sqrt();
            (0..rows * cols)
                .map(|_| rng.gen_range(-bound..bound))
                .collect()
        };
        Mlp {
            out_dim,
            w1: layer(HIDDEN, INPUT_DIM),
            b1: vec![0.0; HIDDEN],
            w2: layer(HIDDEN, HIDDEN),
            b2: vec![0.0; HIDDEN],
            w3: layer(out_dim, HIDDEN),
            b3: vec![0.0; out_dim],
        }
    }

    pub fn param_count(&self) -> usize {
        self.w1.len()
            + self.b1.len()
            + self.w2.len()
            + self.b2.len()
            + self.w3.len()
            + self.b3.len()
    }

    pub fn params(&self) -> [&Vec<f64>; 6] {
        [&self.w1, &self.b1, &self.w2, &self.b2, &self.w3, &self.b3]
    }

    pub fn params_mut(&mut self) -> [&mut Vec<f64>; 6] {
        [
            &mut self.w1,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
        ]
    }

    /// Flatten all parameters in fixed layer order (w1, b1, w2, b2, w3, b3).
    pub fn to_flat(&self) -> Vec<f64> {
        self.params().into_iter().flatten().copied().collect()
    }

    /// Rebuild a network from a flat parameter vector; rejects length
    /// mismatches against the declared head width.
    pub fn from_flat(out_dim: usize, flat: &[f64]) -> Result<Self> {
        let mut mlp = Mlp {
            out_dim,
            w1: vec![0.0; HIDDEN * INPUT_DIM],
            b1: vec![0.0; HIDDEN],
            w2: vec![0.0; HIDDEN * HIDDEN],
            b2: vec![0.0; HIDDEN],
            w3: vec![0.0; out_dim * HIDDEN],
            b3: vec![0.0; out_dim],
        };
        if flat.len() != mlp.param_count() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} parameters for out_dim {}, got {}",
                mlp.param_count(),
                out_dim,
                flat.len()
            )));
        }
        let mut offset = 0;
        for arr in mlp.params_mut() {
            arr.copy_from_slice(&flat[offset..offset + arr.len()]);
            offset += arr.len();
        }
        Ok(mlp)
    }

    pub fn all_finite(&self) -> bool {
        self.params()
            .into_iter()
            .all(|arr| arr.iter().all(|v| v.is_finite()))
    }

    fn forward_cached(&self, input: [f64; INPUT_DIM]) -> Cache {
        let mut z1 = self.b1.clone();
        for i in 0..HIDDEN {
            for j in 0..INPUT_DIM {
                z1[i] += self.w1[i * INPUT_DIM + j] * input[j];
            }
        }
        let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();

        let mut z2 = self.b2.clone();
        for k in 0..HIDDEN {
            for i in 0..HIDDEN {
                z2[k] += self.w2[k * HIDDEN + i] * a1[i];
            }
        }
        let a2: Vec<f64> = z2.iter().map(|&z| z.max(0.0)).collect();

        let mut y = self.b3.clone();
        for o in 0..self.out_dim {
            for k in 0..HIDDEN {
                y[o] += self.w3[o * HIDDEN + k] * a2[k];
            }
        }
        Cache {
            input,
            z1,
            a1,
            z2,
            a2,
            y,
        }
    }

    /// Network output for a point and a normalized timestep.
    pub fn forward(&self, x: Point, t_norm: f64) -> Vec<f64> {
        self.forward_cached([x[0], x[1], t_norm]).y
    }

    /// Two-output convenience for the continuous pipeline.
    pub fn forward2(&self, x: Point, t_norm: f64) -> Point {
        debug_assert_eq!(self.out_dim, 2);
        let y = self.forward(x, t_norm);
        [y[0], y[1]]
    }

    /// Reverse-mode pass with a caller-supplied per-item loss gradient.
    /// `loss_grad(idx, output)` returns the item's loss contribution and
    /// `dL/d output`; contributions are summed as given.
    pub fn backward_with<F>(&self, inputs: &[(Point, f64)], mut loss_grad: F) -> (f64, Gradients)
    where
        F: FnMut(usize, &[f64]) -> (f64, Vec<f64>),
    {
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        for (idx, &(x, t_norm)) in inputs.iter().enumerate() {
            let cache = self.forward_cached([x[0], x[1], t_norm]);
            let (l, gy) = loss_grad(idx, &cache.y);
            debug_assert_eq!(gy.len(), self.out_dim);
            loss += l;

            let mut ga2 = vec![0.0; HIDDEN];
            for o in 0..self.out_dim {
                grads.b3[o] += gy[o];
                for k in 0..HIDDEN {
                    grads.w3[o * HIDDEN + k] += gy[o] * cache.a2[k];
                    ga2[k] += self.w3[o * HIDDEN + k] * gy[o];
                }
            }

            let mut ga1 = vec![0.0; HIDDEN];
            for k in 0..HIDDEN {
                let gz2 = if cache.z2[k] > 0.0 { ga2[k] } else { 0.0 };
                if gz2 != 0.0 {
                    grads.b2[k] += gz2;
                    for i in 0..HIDDEN {
                        grads.w2[k * HIDDEN + i] += gz2 * cache.a1[i];
                        ga1[i] += self.w2[k * HIDDEN + i] * gz2;
                    }
                }
            }

            for i in 0..HIDDEN {
                let gz1 = if cache.z1[i] > 0.0 { ga1[i] } else { 0.0 };
                if gz1 != 0.0 {
                    grads.b1[i] += gz1;
                    for j in 0..INPUT_DIM {
                        grads.w1[i * INPUT_DIM + j] += gz1 * cache.input[j];
                    }
                }
            }
        }
        (loss, grads)
    }

    /// Mean squared error over batch and output coordinates, with exact
    /// gradients. The standard training path for the continuous
    /// objectives.
    pub fn backward(&self, inputs: &[(Point, f64)], targets: &[Point]) -> Result<(f64, Gradients)> {
        if inputs.is_empty() {
            return Err(Error::InvalidArgument("backward needs a nonempty batch".into()));
        }
        if inputs.len() != targets.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} inputs vs {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if self.out_dim != 2 {
            return Err(Error::ShapeMismatch(format!(
                "mean-squared-error path expects 2 outputs, network has {}",
                self.out_dim
            )));
        }
        let norm = 1.0 / (inputs.len() as f64 * 2.0);
        let (loss, grads) = self.backward_with(inputs, |idx, y| {
            let t = targets[idx];
            let r = [y[0] - t[0], y[1] - t[1]];
            let l = (r[0] * r[0] + r[1] * r[1]) * norm;
            (l, vec![2.0 * r[0] * norm, 2.0 * r[1] * norm])
        });
        Ok((loss, grads))
    }
}

struct Cache {
    input: [f64; INPUT_DIM],
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    y: Vec<f64>,
}
