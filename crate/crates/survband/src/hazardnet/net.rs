//! Network forward/backward passes.
//!
//! Architecture: input (standardized time prepended to the covariates) ->
//! `hidden_layers` blocks of [linear -> ReLU -> batch norm -> dropout] ->
//! scalar linear output. Batch normalization keeps running statistics
//! (momentum 0.9) which are frozen in inference mode, so inference is a
//! pure function of the parameters.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::survest::RiskFunction;

use super::NetConfig;

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.9;
/// Row cap for batched matrix evaluation.
const EVAL_CHUNK_ROWS: usize = 8192;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Linear {
    /// `[fan_in, fan_out]`
    w: Array2<f64>,
    b: Array1<f64>,
}

impl Linear {
    fn kaiming(fan_in: usize, fan_out: usize, rng: &mut SeedStream) -> Self {
        let sd = (2.0 / fan_in as f64).sqrt();
        let w = Array2::from_shape_fn((fan_in, fan_out), |_| {
            let z: f64 = StandardNormal.sample(rng);
            z * sd
        });
        Linear { w, b: Array1::zeros(fan_out) }
    }

    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.w) + &self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BatchNorm {
    gamma: Array1<f64>,
    beta: Array1<f64>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
}

impl BatchNorm {
    fn identity(width: usize) -> Self {
        BatchNorm {
            gamma: Array1::ones(width),
            beta: Array1::zeros(width),
            running_mean: Array1::zeros(width),
            running_var: Array1::ones(width),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Block {
    lin: Linear,
    bn: BatchNorm,
}

/// Forward mode of the public single-point op.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

struct BlockCache {
    /// input to the linear layer
    x: Array2<f64>,
    /// pre-activation
    z: Array2<f64>,
    /// normalized post-activation (input of the affine BN scale/shift)
    a_hat: Array2<f64>,
    /// 1/sqrt(var + eps) actually used
    inv_std: Array1<f64>,
    /// dropout mask including the 1/(1-p) scale, if dropout was applied
    mask: Option<Array2<f64>>,
    /// whether batch statistics were used (affects the backward path)
    batch_stats: bool,
}

pub(super) struct Cache {
    blocks: Vec<BlockCache>,
    last: Array2<f64>,
}

pub(super) struct Grads {
    block_w: Vec<Array2<f64>>,
    block_b: Vec<Array1<f64>>,
    block_gamma: Vec<Array1<f64>>,
    block_beta: Vec<Array1<f64>>,
    out_w: Array2<f64>,
    out_b: Array1<f64>,
}

impl Grads {
    /// Flatten in the same order as [`HazardNet::visit_params_mut`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.block_w.len() {
            out.extend(self.block_w[i].iter());
            out.extend(self.block_b[i].iter());
            out.extend(self.block_gamma[i].iter());
            out.extend(self.block_beta[i].iter());
        }
        out.extend(self.out_w.iter());
        out.extend(self.out_b.iter());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardNet {
    input_dim: usize,
    blocks: Vec<Block>,
    out: Linear,
    dropout: f64,
}

impl HazardNet {
    /// Kaiming-initialized network with `input_dim = d + 1` inputs (time
    /// first, then covariates); deterministic given the stream.
    pub fn init(cfg: &NetConfig, input_dim: usize, rng: &mut SeedStream) -> Result<Self> {
        cfg.validate()?;
        if input_dim < 2 {
            return Err(Error::Config("input_dim must be at least 2 (time + covariates)".into()));
        }
        let mut blocks = Vec::with_capacity(cfg.hidden_layers);
        let mut fan_in = input_dim;
        for _ in 0..cfg.hidden_layers {
            blocks.push(Block {
                lin: Linear::kaiming(fan_in, cfg.layer_width, rng),
                bn: BatchNorm::identity(cfg.layer_width),
            });
            fan_in = cfg.layer_width;
        }
        let out = Linear::kaiming(fan_in, 1, rng);
        Ok(HazardNet { input_dim, blocks, out, dropout: cfg.dropout_rate })
    }

    /// A network that is a single linear map `w . [t, x] + b` with no hidden
    /// blocks; used by tests and documentation examples.
    pub fn single_linear(weights: &[f64], bias: f64) -> Self {
        let n = weights.len();
        HazardNet {
            input_dim: n,
            blocks: Vec::new(),
            out: Linear {
                w: Array2::from_shape_vec((n, 1), weights.to_vec()).unwrap(),
                b: Array1::from_elem(1, bias),
            },
            dropout: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_layers(&self) -> usize {
        self.blocks.len()
    }

    pub(super) fn param_count(&self) -> usize {
        let mut n = self.out.w.len() + self.out.b.len();
        for b in &self.blocks {
            n += b.lin.w.len() + b.lin.b.len() + b.bn.gamma.len() + b.bn.beta.len();
        }
        n
    }

    /// Visit every trainable parameter mutably, in a fixed order matching
    /// [`Grads::flatten`]. Running statistics are not trainable.
    pub(super) fn visit_params_mut(&mut self, f: &mut impl FnMut(&mut f64)) {
        for b in &mut self.blocks {
            b.lin.w.iter_mut().for_each(&mut *f);
            b.lin.b.iter_mut().for_each(&mut *f);
            b.bn.gamma.iter_mut().for_each(&mut *f);
            b.bn.beta.iter_mut().for_each(&mut *f);
        }
        self.out.w.iter_mut().for_each(&mut *f);
        self.out.b.iter_mut().for_each(&mut *f);
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim {
            return Err(Error::Contract(format!(
                "input has {cols} columns, network expects {}",
                self.input_dim
            )));
        }
        Ok(())
    }

    /// Training-mode forward pass with cache. With `batch_stats`, batch
    /// normalization uses the batch moments and updates the running ones;
    /// otherwise the (frozen) running statistics are used and nothing is
    /// mutated. Dropout is applied only when a stream is supplied and the
    /// configured rate is positive.
    pub(super) fn forward_train(
        &mut self,
        inputs: ArrayView2<'_, f64>,
        batch_stats: bool,
        mut dropout_rng: Option<&mut SeedStream>,
    ) -> Result<(Array1<f64>, Cache)> {
        self.check_input(inputs.ncols())?;
        let n = inputs.nrows() as f64;
        let mut cur = inputs.to_owned();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for block in &mut self.blocks {
            let x = cur;
            let z = block.lin.forward(&x);
            let a = z.mapv(|v| v.max(0.0));

            let (mean, var) = if batch_stats {
                let mean = a.mean_axis(Axis(0)).unwrap();
                let centered = &a - &mean;
                let var = centered.mapv(|v| v * v).mean_axis(Axis(0)).unwrap();
                block.bn.running_mean =
                    BN_MOMENTUM * &block.bn.running_mean + (1.0 - BN_MOMENTUM) * &mean;
                block.bn.running_var =
                    BN_MOMENTUM * &block.bn.running_var + (1.0 - BN_MOMENTUM) * &var;
                (mean, var)
            } else {
                (block.bn.running_mean.clone(), block.bn.running_var.clone())
            };
            let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
            let a_hat = (&a - &mean) * &inv_std;
            let mut h = &a_hat * &block.bn.gamma + &block.bn.beta;

            let mask = match (&mut dropout_rng, self.dropout > 0.0) {
                (Some(rng), true) => {
                    let keep = 1.0 - self.dropout;
                    let m = Array2::from_shape_fn(h.dim(), |_| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    h = &h * &m;
                    Some(m)
                }
                _ => None,
            };
            caches.push(BlockCache { x, z, a_hat, inv_std, mask, batch_stats });
            cur = h;
        }
        let _ = n;
        let outputs = self.out.forward(&cur);
        let outputs = outputs.index_axis(Axis(1), 0).to_owned();
        Ok((outputs, Cache { blocks: caches, last: cur }))
    }

    /// Inference-mode forward pass: frozen running statistics, no dropout;
    /// a pure function of the parameters.
    pub fn infer_batch(&self, inputs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.check_input(inputs.ncols())?;
        let mut cur = inputs.to_owned();
        for block in &self.blocks {
            let z = block.lin.forward(&cur);
            let a = z.mapv(|v| v.max(0.0));
            let inv_std = block.bn.running_var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
            let a_hat = (&a - &block.bn.running_mean) * &inv_std;
            cur = &a_hat * &block.bn.gamma + &block.bn.beta;
        }
        Ok(self.out.forward(&cur).index_axis(Axis(1), 0).to_owned())
    }

    pub fn infer_one(&self, t: f64, x: &[f64]) -> Result<f64> {
        let mut row = Vec::with_capacity(x.len() + 1);
        row.push(t);
        row.extend_from_slice(x);
        let inputs = Array2::from_shape_vec((1, row.len()), row)
            .map_err(|e| Error::Contract(e.to_string()))?;
        Ok(self.infer_batch(inputs.view())?[0])
    }

    /// The single-point operation: train mode applies dropout and batch
    /// statistics (degenerate for a single row), infer mode is
    /// deterministic.
    pub fn forward(
        &mut self,
        t: f64,
        x: &[f64],
        mode: Mode,
        rng: Option<&mut SeedStream>,
    ) -> Result<f64> {
        match mode {
            Mode::Infer => self.infer_one(t, x),
            Mode::Train => {
                let mut row = vec![t];
                row.extend_from_slice(x);
                let inputs = Array2::from_shape_vec((1, row.len()), row)
                    .map_err(|e| Error::Contract(e.to_string()))?;
                let (out, _) = self.forward_train(inputs.view(), true, rng)?;
                Ok(out[0])
            }
        }
    }

    /// Exact gradients of a scalar loss with respect to every trainable
    /// parameter, given `d loss / d output` per row of the cached forward
    /// pass.
    pub(super) fn backward(&self, cache: &Cache, dout: &Array1<f64>) -> Grads {
        let n_rows = dout.len();
        let dout_col = dout.view().into_shape_with_order((n_rows, 1)).unwrap();
        let out_w = cache.last.t().dot(&dout_col);
        let out_b = Array1::from_elem(1, dout.sum());
        let mut d_cur = dout_col.dot(&self.out.w.t());

        let mut block_w = Vec::with_capacity(self.blocks.len());
        let mut block_b = Vec::with_capacity(self.blocks.len());
        let mut block_gamma = Vec::with_capacity(self.blocks.len());
        let mut block_beta = Vec::with_capacity(self.blocks.len());

        for (block, c) in self.blocks.iter().zip(&cache.blocks).rev() {
            let d_h = match &c.mask {
                Some(m) => &d_cur * m,
                None => d_cur,
            };
            let d_gamma = (&d_h * &c.a_hat).sum_axis(Axis(0));
            let d_beta = d_h.sum_axis(Axis(0));
            let d_ahat = &d_h * &block.bn.gamma;

            let d_a = if c.batch_stats {
                let mean_d = d_ahat.mean_axis(Axis(0)).unwrap();
                let mean_da = (&d_ahat * &c.a_hat).mean_axis(Axis(0)).unwrap();
                (&d_ahat - &mean_d - &(&c.a_hat * &mean_da)) * &c.inv_std
            } else {
                &d_ahat * &c.inv_std
            };

            let d_z = ndarray::Zip::from(&d_a)
                .and(&c.z)
                .map_collect(|&g, &z| if z > 0.0 { g } else { 0.0 });

            block_w.push(c.x.t().dot(&d_z));
            block_b.push(d_z.sum_axis(Axis(0)));
            block_gamma.push(d_gamma);
            block_beta.push(d_beta);
            d_cur = d_z.dot(&block.lin.w.t());
        }
        block_w.reverse();
        block_b.reverse();
        block_gamma.reverse();
        block_beta.reverse();

        Grads { block_w, block_b, block_gamma, block_beta, out_w, out_b }
    }
}

impl RiskFunction for HazardNet {
    fn eval(&self, t: f64, x: &[f64]) -> f64 {
        self.infer_one(t, x).expect("input dimension mismatch")
    }

    fn eval_matrix(&self, times: &[f64], xs: ArrayView2<'_, f64>) -> Array2<f64> {
        let n_t = times.len();
        let n_x = xs.nrows();
        let d = xs.ncols();
        assert_eq!(d + 1, self.input_dim, "input dimension mismatch");
        let mut out = Array2::zeros((n_t, n_x));
        if n_t == 0 || n_x == 0 {
            return out;
        }
        let per_chunk = (EVAL_CHUNK_ROWS / n_x).max(1);
        let mut i = 0;
        while i < n_t {
            let hi = (i + per_chunk).min(n_t);
            let rows = (hi - i) * n_x;
            let mut inputs = Array2::zeros((rows, d + 1));
            for (ti, &t) in times[i..hi].iter().enumerate() {
                for j in 0..n_x {
                    let r = ti * n_x + j;
                    inputs[[r, 0]] = t;
                    for k in 0..d {
                        inputs[[r, k + 1]] = xs[[j, k]];
                    }
                }
            }
            let g = self.infer_batch(inputs.view()).expect("dimension checked above");
            for (ti, _) in times[i..hi].iter().enumerate() {
                for j in 0..n_x {
                    out[[i + ti, j]] = g[ti * n_x + j];
                }
            }
            i = hi;
        }
        out
    }
}
