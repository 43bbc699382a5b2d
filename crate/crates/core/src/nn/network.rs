use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::layers::{self, Geometry};
use super::real::Real;
use super::NnError;
use crate::codec::Codec;

const KERNEL: usize = 3;
/// The value head output is `VALUE_BOUND·tanh(·)`, strictly inside (-1, 1).
pub const VALUE_BOUND: f64 = 1.0 - 1e-6;
/// Scale applied to the initial weights of the last value layer.
const VALUE_OUT_INIT_SCALE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub trunk_channels: usize,
    pub residual_blocks: usize,
    pub value_hidden: usize,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            trunk_channels: 32,
            residual_blocks: 4,
            value_hidden: 32,
        }
    }
}

/// Input and output extents of a network, fixed by a game's codec.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetDims {
    pub channels: usize,
    pub actions: usize,
    pub height: usize,
    pub width: usize,
}

impl NetDims {
    pub fn from_codec(codec: &Codec) -> NetDims {
        NetDims {
            channels: codec.channels(),
            actions: codec.actions(),
            height: codec.height(),
            width: codec.width(),
        }
    }

    pub fn plane(&self) -> usize {
        self.height * self.width
    }

    pub fn input_len(&self) -> usize {
        self.channels * self.plane()
    }

    pub fn logit_count(&self) -> usize {
        self.actions * self.plane()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<T>,
}

impl<T> Param<T> {
    pub fn is_weight(&self) -> bool {
        self.name.ends_with("/weight")
    }
}

/// One training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Encoded state, `C·H·W` values channel-major.
    pub input: Vec<f32>,
    /// Flat logits of the legal moves; duplicates are ignored.
    pub legal: Vec<usize>,
    /// Target probability per logit; must sum to 1 over a subset of `legal`.
    pub targets: Vec<(usize, f32)>,
    /// Outcome from the mover's perspective.
    pub z: f32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub policy: f64,
    pub value: f64,
    pub weight_decay: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Probability of each distinct legal logit.
    pub probs: BTreeMap<usize, f64>,
    pub value: f64,
}

/// Softmax over the distinct `legal` entries of `logits`, in f64.
pub fn masked_softmax(logits: &[f64], legal: &[usize]) -> BTreeMap<usize, f64> {
    softmax_map(&legal.iter().map(|&l| (l, logits[l])).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    pub config: NetworkConfig,
    pub dims: NetDims,
    pub params: Vec<Param<T>>,
}

struct BlockCache<T> {
    col1: Vec<T>,
    z1: Vec<T>,
    r1: Vec<T>,
    col2: Vec<T>,
    z2: Vec<T>,
    out: Vec<T>,
}

struct Cache<T> {
    g: Geometry,
    stem_col: Vec<T>,
    stem_z: Vec<T>,
    stem_out: Vec<T>,
    blocks: Vec<BlockCache<T>>,
    policy_hidden: Vec<T>,
    pooled: Vec<T>,
    value_hidden: Vec<T>,
    value_pre: Vec<T>,
}

fn param_shapes(config: &NetworkConfig, dims: &NetDims) -> Vec<(String, Vec<usize>)> {
    let f = config.trunk_channels;
    let kk = KERNEL * KERNEL;
    let mut out = vec![
        ("stem/conv/weight".to_string(), vec![f, dims.channels * kk]),
        ("stem/conv/bias".to_string(), vec![f]),
        ("stem/norm/scale".to_string(), vec![f]),
        ("stem/norm/offset".to_string(), vec![f]),
    ];
    for i in 0..config.residual_blocks {
        for j in 1..=2 {
            out.push((format!("block{i}/conv{j}/weight"), vec![f, f * kk]));
            out.push((format!("block{i}/conv{j}/bias"), vec![f]));
            out.push((format!("block{i}/norm{j}/scale"), vec![f]));
            out.push((format!("block{i}/norm{j}/offset"), vec![f]));
        }
    }
    let h = config.value_hidden;
    out.extend([
        ("policy/conv1/weight".to_string(), vec![f, f]),
        ("policy/conv1/bias".to_string(), vec![f]),
        ("policy/conv2/weight".to_string(), vec![dims.actions, f]),
        ("policy/conv2/bias".to_string(), vec![dims.actions]),
        ("value/dense1/weight".to_string(), vec![h, f]),
        ("value/dense1/bias".to_string(), vec![h]),
        ("value/dense2/weight".to_string(), vec![1, h]),
        ("value/dense2/bias".to_string(), vec![1]),
    ]);
    out
}

impl<T: Real> Network<T> {
    /// Seeded He-normal weights, zero biases, identity normalization, and a
    /// near-zero value output.
    pub fn new(dims: NetDims, config: NetworkConfig, seed: u64) -> Result<Network<T>, NnError> {
        if config.trunk_channels == 0 || config.value_hidden == 0 {
            return Err(NnError::Config("trunk_channels and value_hidden must be positive".into()));
        }
        if dims.channels == 0 || dims.actions == 0 || dims.plane() == 0 {
            return Err(NnError::Config(format!("degenerate dimensions {dims:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = param_shapes(&config, &dims)
            .into_iter()
            .map(|(name, shape)| {
                let len = shape.iter().product();
                let data = if name.ends_with("/weight") {
                    let mut std = (2.0 / shape[1] as f64).sqrt();
                    if name == "value/dense2/weight" {
                        std *= VALUE_OUT_INIT_SCALE;
                    }
                    let normal = Normal::new(0.0, std).expect("positive std");
                    (0..len).map(|_| T::from_f64(normal.sample(&mut rng))).collect()
                } else if name.ends_with("/scale") {
                    vec![T::one(); len]
                } else {
                    vec![T::zero(); len]
                };
                Param { name, shape, data }
            })
            .collect();
        Ok(Network { config, dims, params })
    }

    pub fn for_codec(codec: &Codec, config: NetworkConfig, seed: u64) -> Result<Network<T>, NnError> {
        Network::new(NetDims::from_codec(codec), config, seed)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    /// Same parameters in another precision.
    pub fn cast<U: Real>(&self) -> Network<U> {
        Network {
            config: self.config,
            dims: self.dims,
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    shape: p.shape.clone(),
                    data: p.data.iter().map(|&x| U::from_f64(x.as_f64())).collect(),
                })
                .collect(),
        }
    }

    fn p(&self, i: usize) -> &[T] {
        &self.params[i].data
    }

    fn block_base(i: usize) -> usize {
        4 + 8 * i
    }

    fn head_base(&self) -> usize {
        4 + 8 * self.config.residual_blocks
    }

    /// Converts `batch` sample-major inputs into the batch-interleaved layout.
    fn gather_inputs(&self, inputs: &[&[f32]]) -> Result<Vec<T>, NnError> {
        let (c, plane) = (self.dims.channels, self.dims.plane());
        let n = inputs.len() * plane;
        let mut x = vec![T::zero(); c * n];
        for (b, input) in inputs.iter().enumerate() {
            if input.len() != c * plane {
                return Err(NnError::Shape(format!(
                    "input has {} values, expected {}",
                    input.len(),
                    c * plane
                )));
            }
            for ch in 0..c {
                let dst = &mut x[ch * n + b * plane..ch * n + (b + 1) * plane];
                for (d, &s) in dst.iter_mut().zip(&input[ch * plane..(ch + 1) * plane]) {
                    *d = T::from_f64(s as f64);
                }
            }
        }
        Ok(x)
    }

    /// Returns policy logits `[A][B·HW]`, values per sample, and the cache.
    fn forward_cached(&self, x: &[T], batch: usize) -> (Vec<T>, Vec<T>, Cache<T>) {
        let g = Geometry {
            batch,
            height: self.dims.height,
            width: self.dims.width,
        };
        let n = g.n();
        let f = self.config.trunk_channels;
        let (stem_z, stem_col) = layers::conv_forward(x, self.dims.channels, f, KERNEL, g, self.p(0), self.p(1));
        let mut h = layers::affine_forward(&stem_z, self.p(2), self.p(3), n);
        layers::relu_forward(&mut h);
        let stem_out = h.clone();

        let mut blocks = Vec::with_capacity(self.config.residual_blocks);
        for i in 0..self.config.residual_blocks {
            let base = Self::block_base(i);
            let (z1, col1) = layers::conv_forward(&h, f, f, KERNEL, g, self.p(base), self.p(base + 1));
            let mut r1 = layers::affine_forward(&z1, self.p(base + 2), self.p(base + 3), n);
            layers::relu_forward(&mut r1);
            let (z2, col2) = layers::conv_forward(&r1, f, f, KERNEL, g, self.p(base + 4), self.p(base + 5));
            let mut out = layers::affine_forward(&z2, self.p(base + 6), self.p(base + 7), n);
            for (o, &skip) in out.iter_mut().zip(&h) {
                *o = *o + skip;
            }
            layers::relu_forward(&mut out);
            h = out.clone();
            blocks.push(BlockCache { col1, z1, r1, col2, z2, out });
        }

        let hb = self.head_base();
        let (mut policy_hidden, _) = layers::conv_forward(&h, f, f, 1, g, self.p(hb), self.p(hb + 1));
        layers::relu_forward(&mut policy_hidden);
        let (logits, _) = layers::conv_forward(&policy_hidden, f, self.dims.actions, 1, g, self.p(hb + 2), self.p(hb + 3));

        let hidden = self.config.value_hidden;
        let pooled = layers::pool_forward(&h, f, g);
        let mut value_hidden = layers::dense_forward(&pooled, f, hidden, batch, self.p(hb + 4), self.p(hb + 5));
        layers::relu_forward(&mut value_hidden);
        let value_pre = layers::dense_forward(&value_hidden, hidden, 1, batch, self.p(hb + 6), self.p(hb + 7));
        let bound = T::from_f64(VALUE_BOUND);
        let values = value_pre.iter().map(|&v| bound * v.tanh()).collect();

        let cache = Cache {
            g,
            stem_col,
            stem_z,
            stem_out,
            blocks,
            policy_hidden,
            pooled,
            value_hidden,
            value_pre,
        };
        (logits, values, cache)
    }

    /// Raw logits (length `A·H·W` each) and values for a batch of inputs.
    pub fn forward_batch(&self, inputs: &[&[f32]]) -> Result<(Vec<Vec<f64>>, Vec<f64>), NnError> {
        let batch = inputs.len();
        let x = self.gather_inputs(inputs)?;
        let (logits, values, cache) = self.forward_cached(&x, batch);
        let n = cache.g.n();
        let plane = self.dims.plane();
        let per_sample = (0..batch)
            .map(|b| {
                (0..self.dims.actions)
                    .flat_map(|a| logits[a * n + b * plane..a * n + (b + 1) * plane].iter().map(|v| v.as_f64()))
                    .collect()
            })
            .collect();
        Ok((per_sample, values.iter().map(|v| v.as_f64()).collect()))
    }

    /// Masked policy and value for one encoded state.
    pub fn predict(&self, input: &[f32], legal: &[usize]) -> Result<Prediction, NnError> {
        if legal.is_empty() {
            return Err(NnError::Shape("no legal logits".into()));
        }
        if let Some(&bad) = legal.iter().find(|&&l| l >= self.dims.logit_count()) {
            return Err(NnError::Shape(format!("logit {bad} out of range {}", self.dims.logit_count())));
        }
        let (logits, values) = self.forward_batch(&[input])?;
        Ok(Prediction {
            probs: masked_softmax(&logits[0], legal),
            value: values[0],
        })
    }

    /// Mean cross-entropy plus squared value error over the batch, plus
    /// `weight_decay/2 · Σ w²` over the weight tensors, and exact gradients
    /// in parameter order.
    pub fn loss_and_gradients(
        &self,
        batch: &[&Sample],
        weight_decay: f64,
    ) -> Result<(LossBreakdown, Vec<Vec<T>>), NnError> {
        if batch.is_empty() {
            return Err(NnError::Shape("empty batch".into()));
        }
        let bsz = batch.len();
        let inputs: Vec<&[f32]> = batch.iter().map(|s| s.input.as_slice()).collect();
        let x = self.gather_inputs(&inputs)?;
        let (logits, values, cache) = self.forward_cached(&x, bsz);
        let g = cache.g;
        let n = g.n();
        let plane = self.dims.plane();
        let inv_b = 1.0 / bsz as f64;

        let mut loss = LossBreakdown::default();
        let mut dlogits = vec![T::zero(); logits.len()];
        let mut dvalue_pre = vec![T::zero(); bsz];
        let flat = |l: usize, b: usize| (l / plane) * n + b * plane + l % plane;

        for (b, s) in batch.iter().enumerate() {
            if s.legal.is_empty() {
                return Err(NnError::Target(format!("sample {b} has no legal logits")));
            }
            let sample_logits: BTreeMap<usize, f64> = s
                .legal
                .iter()
                .map(|&l| {
                    if l >= self.dims.logit_count() {
                        Err(NnError::Shape(format!("logit {l} out of range")))
                    } else {
                        Ok((l, logits[flat(l, b)].as_f64()))
                    }
                })
                .collect::<Result<_, _>>()?;
            let probs = softmax_map(&sample_logits);
            let mut target_sum = 0.0;
            for &(l, t) in &s.targets {
                let p = probs
                    .get(&l)
                    .ok_or_else(|| NnError::Target(format!("sample {b}: target logit {l} is not legal")))?;
                let t = t as f64;
                target_sum += t;
                if t > 0.0 {
                    loss.policy -= inv_b * t * p.ln();
                }
            }
            if (target_sum - 1.0).abs() > 1e-4 {
                return Err(NnError::Target(format!("sample {b}: targets sum to {target_sum}")));
            }
            // d(−Σ t log p)/dL = p·Σt − t
            for (&l, &p) in &probs {
                let d = &mut dlogits[flat(l, b)];
                *d = *d + T::from_f64(inv_b * p * target_sum);
            }
            for &(l, t) in &s.targets {
                let d = &mut dlogits[flat(l, b)];
                *d = *d - T::from_f64(inv_b * t as f64);
            }

            let v = values[b].as_f64();
            let z = s.z as f64;
            loss.value += inv_b * (v - z) * (v - z);
            let th = cache.value_pre[b].as_f64().tanh();
            dvalue_pre[b] = T::from_f64(inv_b * 2.0 * (v - z) * VALUE_BOUND * (1.0 - th * th));
        }
        for p in self.params.iter().filter(|p| p.is_weight()) {
            loss.weight_decay += 0.5 * weight_decay * p.data.iter().map(|w| w.as_f64().powi(2)).sum::<f64>();
        }
        loss.total = loss.policy + loss.value + loss.weight_decay;

        let grads = self.backward(&cache, &dlogits, &dvalue_pre, weight_decay);
        Ok((loss, grads))
    }

    fn backward(&self, cache: &Cache<T>, dlogits: &[T], dvalue_pre: &[T], weight_decay: f64) -> Vec<Vec<T>> {
        let g = cache.g;
        let n = g.n();
        let f = self.config.trunk_channels;
        let hidden = self.config.value_hidden;
        let bsz = g.batch;
        let mut grads: Vec<Vec<T>> = self.params.iter().map(|p| vec![T::zero(); p.data.len()]).collect();
        let hb = self.head_base();
        let trunk_out = cache.blocks.last().map_or(&cache.stem_out, |b| &b.out);

        // Value head.
        let (mut dvh, dw, db) = layers::dense_backward(dvalue_pre, &cache.value_hidden, hidden, 1, bsz, self.p(hb + 6));
        grads[hb + 6] = dw;
        grads[hb + 7] = db;
        layers::relu_backward(&mut dvh, &cache.value_hidden);
        let (dpooled, dw, db) = layers::dense_backward(&dvh, &cache.pooled, f, hidden, bsz, self.p(hb + 4));
        grads[hb + 4] = dw;
        grads[hb + 5] = db;
        let mut dh = layers::pool_backward(&dpooled, f, g);

        // Policy head.
        let pg = layers::conv_backward(dlogits, &cache.policy_hidden, f, self.dims.actions, 1, g, self.p(hb + 2));
        grads[hb + 2] = pg.weight;
        grads[hb + 3] = pg.bias;
        let mut dph = pg.input;
        layers::relu_backward(&mut dph, &cache.policy_hidden);
        let pg = layers::conv_backward(&dph, trunk_out, f, f, 1, g, self.p(hb));
        grads[hb] = pg.weight;
        grads[hb + 1] = pg.bias;
        for (d, &e) in dh.iter_mut().zip(&pg.input) {
            *d = *d + e;
        }

        // Residual blocks, last first.
        for i in (0..self.config.residual_blocks).rev() {
            let base = Self::block_base(i);
            let c = &cache.blocks[i];
            layers::relu_backward(&mut dh, &c.out);
            let (dz2, ds, doff) = layers::affine_backward(&dh, &c.z2, self.p(base + 6), n);
            grads[base + 6] = ds;
            grads[base + 7] = doff;
            let cg = layers::conv_backward(&dz2, &c.col2, f, f, KERNEL, g, self.p(base + 4));
            grads[base + 4] = cg.weight;
            grads[base + 5] = cg.bias;
            let mut dr1 = cg.input;
            layers::relu_backward(&mut dr1, &c.r1);
            let (dz1, ds, doff) = layers::affine_backward(&dr1, &c.z1, self.p(base + 2), n);
            grads[base + 2] = ds;
            grads[base + 3] = doff;
            let cg = layers::conv_backward(&dz1, &c.col1, f, f, KERNEL, g, self.p(base));
            grads[base] = cg.weight;
            grads[base + 1] = cg.bias;
            // Skip connection passes dh through unchanged.
            for (d, &e) in dh.iter_mut().zip(&cg.input) {
                *d = *d + e;
            }
        }

        // Stem.
        layers::relu_backward(&mut dh, &cache.stem_out);
        let (dz, ds, doff) = layers::affine_backward(&dh, &cache.stem_z, self.p(2), n);
        grads[2] = ds;
        grads[3] = doff;
        let cg = layers::conv_backward(&dz, &cache.stem_col, self.dims.channels, f, KERNEL, g, self.p(0));
        grads[0] = cg.weight;
        grads[1] = cg.bias;

        let wd = T::from_f64(weight_decay);
        for (grad, p) in grads.iter_mut().zip(&self.params) {
            if p.is_weight() {
                for (g, &w) in grad.iter_mut().zip(&p.data) {
                    *g = *g + wd * w;
                }
            }
        }
        grads
    }
}

fn softmax_map(logits: &BTreeMap<usize, f64>) -> BTreeMap<usize, f64> {
    let max = logits.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: BTreeMap<usize, f64> = logits.iter().map(|(&l, &v)| (l, (v - max).exp())).collect();
    let sum: f64 = exps.values().sum();
    exps.into_iter().map(|(l, e)| (l, e / sum)).collect()
}

impl crate::search::Evaluator for Network<f32> {
    fn evaluate(
        &self,
        game: &crate::engine::Game,
        codec: &Codec,
        state: &crate::engine::GameState,
        _moves: &[crate::engine::Move],
        logits: &[usize],
    ) -> crate::search::Evaluation {
        let tensor = codec.encode_state(game.spec(), state);
        let pred = self
            .predict(&tensor.data, logits)
            .expect("network dimensions are checked before search");
        crate::search::Evaluation {
            priors: logits.iter().map(|l| pred.probs[l]).collect(),
            value: pred.value,
        }
    }

    fn check(&self, codec: &Codec) -> Result<(), crate::search::SearchError> {
        let want = NetDims::from_codec(codec);
        if self.dims == want {
            Ok(())
        } else {
            Err(crate::search::SearchError::Incompatible(format!(
                "network built for {:?}, game needs {want:?}",
                self.dims
            )))
        }
    }
}
