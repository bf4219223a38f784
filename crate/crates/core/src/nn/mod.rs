//! Small dense networks with exact backpropagation.
//!
//! Everything is double precision and hand-rolled: the networks are small
//! enough that a careful batched matrix kernel on the CPU covers both
//! training and planning-time queries. Parallel sections split work over
//! independent output rows only, so results are bit-identical regardless of
//! thread count.

pub mod adam;
pub mod cvae;
pub mod distance;
pub mod paired;
pub mod validity;
pub mod weights;

pub use adam::Adam;
pub use cvae::{train_cvae, CvaeModel, CvaeTrainReport};
pub use distance::{train_distance, DistanceModel, DistanceSampleRef, DistanceTrainReport};
pub use validity::{train_validity, ValidityModel, ValiditySampleRef, ValidityTrainReport};

use crate::error::Error;
use crate::Result;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Identity,
    Relu,
    /// Slope 0.01 on the negative side.
    LeakyRelu,
    Sigmoid,
}

pub const LEAKY_SLOPE: f64 = 0.01;

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if x > 0.0 {
                    x
                } else {
                    LEAKY_SLOPE * x
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative with respect to the pre-activation. At an exactly-zero
    /// pre-activation the rectifiers use the flat-side subgradient.
    #[inline]
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if pre > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Sigmoid => {
                let s = 1.0 / (1.0 + (-pre).exp());
                s * (1.0 - s)
            }
        }
    }
}

/// One affine layer followed by its activation. Weights are row-major,
/// one row per output unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub act: Activation,
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

/// A plain multilayer perceptron.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// A row-major batch of vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Batch {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Batch {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            debug_assert_eq!(row.len(), c);
            data.extend_from_slice(&row);
        }
        Batch {
            rows: r,
            cols: c,
            data,
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Work threshold above which a kernel fans out across rows.
const PAR_FLOPS: usize = 1 << 18;

/// Forward pass caches for backpropagation.
pub struct ForwardCache {
    /// `acts[0]` is the input; `acts[k + 1]` the post-activation output of
    /// layer `k`.
    pub acts: Vec<Batch>,
    /// Pre-activations per layer.
    pub pres: Vec<Batch>,
}

impl ForwardCache {
    pub fn output(&self) -> &Batch {
        self.acts.last().expect("cache holds at least the input")
    }
}

/// Parameter gradients mirroring an [`Mlp`]'s layers.
pub struct MlpGrads {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl MlpGrads {
    pub fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads {
            layers: mlp
                .layers
                .iter()
                .map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()]))
                .collect(),
        }
    }
}

impl Mlp {
    /// Builds a network from layer sizes and activations, with seeded
    /// fan-in-scaled Gaussian weights and zero biases.
    pub fn init(dims: &[usize], acts: &[Activation], rng: &mut ChaCha8Rng) -> Self {
        assert!(dims.len() >= 2, "need input and output dims");
        assert_eq!(acts.len(), dims.len() - 1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let layers = dims
            .windows(2)
            .zip(acts)
            .map(|(pair, &act)| {
                let (in_dim, out_dim) = (pair[0], pair[1]);
                let gain: f64 = match act {
                    Activation::Relu | Activation::LeakyRelu => 2.0,
                    _ => 1.0,
                };
                let std = (gain / in_dim as f64).sqrt();
                let w = (0..in_dim * out_dim)
                    .map(|_| std * normal.sample(rng))
                    .collect();
                Layer {
                    in_dim,
                    out_dim,
                    act,
                    w,
                    b: vec![0.0; out_dim],
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.in_dim)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    pub fn assert_finite(&self) -> Result<()> {
        for l in &self.layers {
            if l.w.iter().chain(&l.b).any(|v| !v.is_finite()) {
                return Err(Error::argument("network has non-finite parameters"));
            }
        }
        Ok(())
    }

    /// Single-vector forward pass.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim() {
            return Err(Error::argument(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.len()
            )));
        }
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut next = vec![0.0; layer.out_dim];
            for (o, slot) in next.iter_mut().enumerate() {
                let pre =
                    dot(&layer.w[o * layer.in_dim..(o + 1) * layer.in_dim], &cur) + layer.b[o];
                *slot = layer.act.apply(pre);
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Batched forward pass retaining caches for backpropagation.
    pub fn forward_batch(&self, x: Batch) -> ForwardCache {
        debug_assert_eq!(x.cols, self.input_dim());
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut pres = Vec::with_capacity(self.layers.len());
        acts.push(x);
        for layer in &self.layers {
            let input = acts.last().unwrap();
            let m = input.rows;
            let mut pre = Batch::zeros(m, layer.out_dim);
            let work = m * layer.in_dim * layer.out_dim;
            let run = |(prow, xrow): (&mut [f64], &[f64])| {
                for (o, slot) in prow.iter_mut().enumerate() {
                    *slot = dot(&layer.w[o * layer.in_dim..(o + 1) * layer.in_dim], xrow)
                        + layer.b[o];
                }
            };
            if work >= PAR_FLOPS && m > 1 {
                pre.data
                    .par_chunks_mut(layer.out_dim)
                    .zip(input.data.par_chunks(layer.in_dim))
                    .for_each(run);
            } else {
                pre.data
                    .chunks_mut(layer.out_dim)
                    .zip(input.data.chunks(layer.in_dim))
                    .for_each(run);
            }
            let mut post = pre.clone();
            for v in &mut post.data {
                *v = layer.act.apply(*v);
            }
            pres.push(pre);
            acts.push(post);
        }
        ForwardCache { acts, pres }
    }

    /// Backpropagates from a gradient with respect to the final layer's
    /// pre-activation (for an identity-activated head this is simply the
    /// output gradient). Accumulates parameter gradients into `grads` and
    /// optionally returns the gradient with respect to the network input.
    pub fn backward_batch(
        &self,
        cache: &ForwardCache,
        d_last_pre: Batch,
        grads: &mut MlpGrads,
        want_input_grad: bool,
    ) -> Option<Batch> {
        let n_layers = self.layers.len();
        let mut d_pre = d_last_pre;
        for k in (0..n_layers).rev() {
            let layer = &self.layers[k];
            let input = &cache.acts[k];
            let m = input.rows;
            debug_assert_eq!(d_pre.rows, m);
            debug_assert_eq!(d_pre.cols, layer.out_dim);

            let (dw, db) = &mut grads.layers[k];
            // dW[o] += sum_s d_pre[s][o] * x[s]; db[o] += sum_s d_pre[s][o].
            let work = m * layer.in_dim * layer.out_dim;
            let in_dim = layer.in_dim;
            let out_dim = layer.out_dim;
            let d_pre_ref = &d_pre;
            let input_ref = input;
            let accumulate = |(o, (dw_row, db_o)): (usize, (&mut [f64], &mut f64))| {
                for s in 0..m {
                    let g = d_pre_ref.data[s * out_dim + o];
                    if g != 0.0 {
                        axpy(g, input_ref.row(s), dw_row);
                        *db_o += g;
                    }
                }
            };
            if work >= PAR_FLOPS && out_dim > 1 {
                dw.par_chunks_mut(in_dim)
                    .zip(db.par_iter_mut())
                    .enumerate()
                    .for_each(accumulate);
            } else {
                dw.chunks_mut(in_dim)
                    .zip(db.iter_mut())
                    .enumerate()
                    .for_each(accumulate);
            }

            let need_dx = k > 0 || want_input_grad;
            if !need_dx {
                return None;
            }
            // dX[s] = sum_o d_pre[s][o] * W[o].
            let mut dx = Batch::zeros(m, in_dim);
            let w = &layer.w;
            let compute_dx = |(dxrow, dprow): (&mut [f64], &[f64])| {
                for (o, &g) in dprow.iter().enumerate() {
                    if g != 0.0 {
                        axpy(g, &w[o * in_dim..(o + 1) * in_dim], dxrow);
                    }
                }
            };
            if work >= PAR_FLOPS && m > 1 {
                dx.data
                    .par_chunks_mut(in_dim)
                    .zip(d_pre.data.par_chunks(out_dim))
                    .for_each(compute_dx);
            } else {
                dx.data
                    .chunks_mut(in_dim)
                    .zip(d_pre.data.chunks(out_dim))
                    .for_each(compute_dx);
            }

            if k == 0 {
                return Some(dx);
            }
            // Fold the previous layer's activation derivative into dx to get
            // its pre-activation gradient.
            let prev_pre = &cache.pres[k - 1];
            let prev_act = self.layers[k - 1].act;
            for (v, &pre) in dx.data.iter_mut().zip(&prev_pre.data) {
                *v *= prev_act.derivative(pre);
            }
            d_pre = dx;
        }
        unreachable!("loop returns at layer 0");
    }

    /// Exact gradient of a scalar-output network with respect to its input.
    pub fn input_gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.output_dim() != 1 {
            return Err(Error::argument(
                "input gradient requires a scalar-output network",
            ));
        }
        if x.len() != self.input_dim() {
            return Err(Error::argument("input gradient: dimension mismatch"));
        }
        let cache = self.forward_batch(Batch::from_rows(vec![x.to_vec()]));
        // Seed with d(out)/d(pre_last) = act'(pre_last).
        let last_pre = cache.pres.last().unwrap().data[0];
        let seed = self.layers.last().unwrap().act.derivative(last_pre);
        let mut grads = MlpGrads::zeros_like(self);
        let dx = self
            .backward_batch(
                &cache,
                Batch {
                    rows: 1,
                    cols: 1,
                    data: vec![seed],
                },
                &mut grads,
                true,
            )
            .expect("input gradient requested");
        Ok(dx.data)
    }

    /// Pre-activations of every unit for a single input, used by tests to
    /// keep finite-difference probes away from rectifier kinks.
    pub fn preactivations(&self, x: &[f64]) -> Vec<f64> {
        let cache = self.forward_batch(Batch::from_rows(vec![x.to_vec()]));
        cache
            .pres
            .iter()
            .flat_map(|p| p.data.iter().copied())
            .collect()
    }
}

/// Shared training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Weight of the KL term in the variational objective.
    pub kl_weight: f64,
    /// Epochs over which the KL weight ramps linearly from zero.
    pub kl_warmup_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.003,
            batch_size: 64,
            epochs: 60,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            kl_weight: 0.01,
            kl_warmup_epochs: 10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::argument("training config must be positive"));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }
}

/// Affine per-entry input standardization `x -> (x - center) / half`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNorm {
    pub center: Vec<f64>,
    pub half: Vec<f64>,
}

impl InputNorm {
    /// Builds a normalizer from per-entry `[lo, hi]` ranges. Degenerate
    /// ranges map to a unit scale so constants pass through centered.
    pub fn from_ranges(ranges: &[(f64, f64)]) -> Self {
        let center = ranges.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        let half = ranges
            .iter()
            .map(|(lo, hi)| {
                let h = 0.5 * (hi - lo);
                if h > 0.0 {
                    h
                } else {
                    1.0
                }
            })
            .collect();
        InputNorm { center, half }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(self.center.iter().zip(&self.half))
            .map(|(v, (c, h))| (v - c) / h)
            .collect()
    }

    pub fn denormalize(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        x.iter()
            .zip(self.center.iter().zip(&self.half))
            .map(|(v, (c, h))| v * h + c)
            .collect()
    }
}

/// Deterministic Fisher-Yates shuffle of indices `0..n`.
pub(crate) fn shuffled_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        idx.swap(i, j);
    }
    idx
}
