//! The graph autoencoder: three (GCN, leaky ReLU, Top-K) stages with power
//! normalization, and a three-layer MLP decoder ending in tanh.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    gcn_backward, gcn_layer, leaky_relu, leaky_relu_backward, pooled_size, power_normalize,
    power_normalize_backward, topk_pool, topk_pool_backward, GcnCache, LatentCode, NormCache, PoolCache,
};
use crate::channel::{draw_realization_with, transmit, transmit_grad, ChannelConfig, ChannelRealization};
use crate::cloud::{chamfer_with_gradient, Graph, PointCloud};
use crate::error::{dims, invalid, Result};
use crate::seed;

pub const STAGES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Architecture {
    pub n_points: usize,
    pub knn_k: usize,
    pub channels: [usize; STAGES],
    pub ratios: [f64; STAGES],
    pub decoder_hidden: usize,
    pub leaky_slope: f64,
    pub avg_power: f64,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            n_points: 512,
            knn_k: 8,
            channels: [24, 36, 48],
            ratios: [0.5, 0.5, 0.5],
            decoder_hidden: 48,
            leaky_slope: 0.01,
            avg_power: 1.0,
        }
    }
}

impl Architecture {
    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 || self.knn_k == 0 || self.knn_k >= self.n_points {
            return Err(invalid(format!("need 1 <= knn_k < n_points, got k={} n={}", self.knn_k, self.n_points)));
        }
        if self.channels.iter().any(|&c| c == 0) || self.decoder_hidden == 0 {
            return Err(invalid("layer widths must be positive"));
        }
        if self.ratios.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(invalid(format!("pooling ratios {:?} outside (0, 1]", self.ratios)));
        }
        if !(self.leaky_slope > 0.0 && self.leaky_slope < 1.0) {
            return Err(invalid(format!("leaky slope {} outside (0, 1)", self.leaky_slope)));
        }
        if !(self.avg_power > 0.0) {
            return Err(invalid("average power must be positive"));
        }
        Ok(())
    }

    /// Vertex count after each pooling stage.
    pub fn pooled_sizes(&self) -> [usize; STAGES] {
        let mut n = self.n_points;
        self.ratios.map(|r| {
            n = pooled_size(n, r);
            n
        })
    }

    /// Latent rows `m`.
    pub fn latent_rows(&self) -> usize {
        self.pooled_sizes()[STAGES - 1]
    }

    /// Latent reals `m L`.
    pub fn latent_len(&self) -> usize {
        self.latent_rows() * self.channels[STAGES - 1]
    }

    fn input_channels(&self, stage: usize) -> usize {
        if stage == 0 {
            3
        } else {
            self.channels[stage - 1]
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderStage {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    /// Top-K projection vector.
    pub proj: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub stages: Vec<EncoderStage>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoderParams {
    pub layers: Vec<Dense>,
}

/// All trainable tensors. Also used for gradients and optimizer moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub encoder: EncoderParams,
    pub decoder: DecoderParams,
}

fn glorot(rows: usize, cols: usize, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl Params {
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        arch.validate()?;
        let mut rng = seed::rng(seed);
        let stages = (0..STAGES)
            .map(|s| {
                let (i, o) = (arch.input_channels(s), arch.channels[s]);
                EncoderStage {
                    weight: glorot(i, o, i, o, &mut rng),
                    bias: Array1::zeros(o),
                    proj: glorot(1, o, o, 1, &mut rng).into_shape_with_order(o).expect("row vector"),
                }
            })
            .collect();
        let widths = [arch.latent_len(), arch.decoder_hidden, arch.decoder_hidden, 3 * arch.n_points];
        let layers = widths
            .windows(2)
            .map(|w| Dense { weight: glorot(w[0], w[1], w[0], w[1], &mut rng), bias: Array1::zeros(w[1]) })
            .collect();
        Ok(Self { encoder: EncoderParams { stages }, decoder: DecoderParams { layers } })
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.for_each_mut(|s| s.fill(0.0));
        z
    }

    /// Visits every tensor in a fixed order.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for s in &self.encoder.stages {
            out.push(s.weight.as_slice().expect("standard layout"));
            out.push(s.bias.as_slice().expect("contiguous"));
            out.push(s.proj.as_slice().expect("contiguous"));
        }
        for l in &self.decoder.layers {
            out.push(l.weight.as_slice().expect("standard layout"));
            out.push(l.bias.as_slice().expect("contiguous"));
        }
        out
    }

    /// Tensor shapes, `(rows, cols)`, in [`Params::tensors`] order.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for s in &self.encoder.stages {
            out.push(s.weight.dim());
            out.push((1, s.bias.len()));
            out.push((1, s.proj.len()));
        }
        for l in &self.decoder.layers {
            out.push(l.weight.dim());
            out.push((1, l.bias.len()));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for s in &mut self.encoder.stages {
            out.push(s.weight.as_slice_mut().expect("standard layout"));
            out.push(s.bias.as_slice_mut().expect("contiguous"));
            out.push(s.proj.as_slice_mut().expect("contiguous"));
        }
        for l in &mut self.decoder.layers {
            out.push(l.weight.as_slice_mut().expect("standard layout"));
            out.push(l.bias.as_slice_mut().expect("contiguous"));
        }
        out
    }

    pub fn for_each_mut(&mut self, f: impl FnMut(&mut [f64])) {
        self.tensors_mut().into_iter().for_each(f);
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn same_shape(&self, other: &Params) -> bool {
        self.shapes() == other.shapes()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    pub arch: Architecture,
    pub params: Params,
}

impl GnnModel {
    pub fn new(arch: Architecture, seed: u64) -> Result<Self> {
        let params = Params::init(&arch, seed)?;
        Ok(Self { arch, params })
    }
}

struct StageTrace {
    gcn: GcnCache,
    pre_act: Array2<f64>,
    pool: PoolCache,
}

pub struct EncoderTrace {
    stages: Vec<StageTrace>,
    norm: NormCache,
}

impl EncoderTrace {
    /// Input vertex indices kept by each pooling stage.
    pub fn kept(&self, stage: usize) -> &[usize] {
        self.stages[stage].pool.kept()
    }
}

/// Encodes a normalized cloud over its graph into a power-normalized latent.
pub fn encode(model: &GnnModel, cloud: &PointCloud, g: &Graph) -> Result<LatentCode> {
    Ok(encode_traced(model, cloud.points(), g)?.0)
}

pub fn encode_traced(model: &GnnModel, x: &Array2<f64>, g: &Graph) -> Result<(LatentCode, EncoderTrace)> {
    let arch = &model.arch;
    if x.nrows() != arch.n_points {
        return Err(dims(format!("model expects {} points, got {}", arch.n_points, x.nrows())));
    }
    let mut feats = x.clone();
    let mut graph = g.clone();
    let mut stages = Vec::with_capacity(STAGES);
    for (s, p) in model.params.encoder.stages.iter().enumerate() {
        let (pre_act, gcn) = gcn_layer(&feats, &graph, &p.weight, &p.bias)?;
        let act = leaky_relu(&pre_act, arch.leaky_slope);
        let (pooled, pool) = topk_pool(&act, &graph, &p.proj, arch.ratios[s])?;
        feats = pooled.x;
        graph = pooled.graph;
        stages.push(StageTrace { gcn, pre_act, pool });
    }
    let (z, norm) = power_normalize(&feats, arch.avg_power)?;
    Ok((z, EncoderTrace { stages, norm }))
}

/// Accumulates `weight * dL/dθ` into `grads` given `dL/dz`.
pub fn encode_backward(model: &GnnModel, trace: &EncoderTrace, dz: &Array2<f64>, grads: &mut EncoderParams, weight: f64) {
    let mut d = power_normalize_backward(&trace.norm, dz);
    for s in (0..STAGES).rev() {
        let st = &trace.stages[s];
        let (d_act, dproj) = topk_pool_backward(&st.pool, &d);
        let d_pre = leaky_relu_backward(&st.pre_act, &d_act, model.arch.leaky_slope);
        let g = gcn_backward(&st.gcn, &model.params.encoder.stages[s].weight, &d_pre, s > 0);
        let gs = &mut grads.stages[s];
        gs.weight.scaled_add(weight, &g.dweight);
        gs.bias.scaled_add(weight, &g.dbias);
        gs.proj.scaled_add(weight, &dproj);
        if let Some(dx) = g.dx {
            d = dx;
        }
    }
}

pub struct DecoderTrace {
    inputs: Vec<Array1<f64>>,
    pre: Vec<Array1<f64>>,
    out: Array1<f64>,
}

pub fn decode_traced(model: &GnnModel, z_hat: &[f64]) -> Result<(Array1<f64>, DecoderTrace)> {
    let layers = &model.params.decoder.layers;
    if z_hat.len() != layers[0].weight.nrows() {
        return Err(dims(format!("decoder expects {} latent reals, got {}", layers[0].weight.nrows(), z_hat.len())));
    }
    let mut h = Array1::from(z_hat.to_vec());
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate() {
        let mut a = l.bias.clone();
        for (&hv, w) in h.iter().zip(l.weight.rows()) {
            if hv != 0.0 {
                a.scaled_add(hv, &w);
            }
        }
        inputs.push(h);
        h = if i + 1 == layers.len() {
            a.mapv(f64::tanh)
        } else {
            a.mapv(|v| if v >= 0.0 { v } else { model.arch.leaky_slope * v })
        };
        pre.push(a);
    }
    Ok((h.clone(), DecoderTrace { inputs, pre, out: h }))
}

/// Maps received latent reals to an `n_points`×3 cloud inside (-1, 1)³.
pub fn decode(model: &GnnModel, z_hat: &[f64]) -> Result<PointCloud> {
    let (out, _) = decode_traced(model, z_hat)?;
    let n = out.len() / 3;
    let pts = out.into_shape_with_order((n, 3)).map_err(|e| invalid(e.to_string()))?;
    PointCloud::new(pts, "decoded")
}

/// Accumulates `weight * dL/dφ` into `grads` and returns `dL/dz_hat`.
pub fn decode_backward(
    model: &GnnModel,
    trace: &DecoderTrace,
    d_out: &[f64],
    grads: &mut DecoderParams,
    weight: f64,
) -> Vec<f64> {
    let layers = &model.params.decoder.layers;
    let last = layers.len() - 1;
    let mut d: Array1<f64> =
        Array1::from_iter(d_out.iter().zip(trace.out.iter()).map(|(g, y)| g * (1.0 - y * y)));
    for i in (0..layers.len()).rev() {
        if i != last {
            let slope = model.arch.leaky_slope;
            d.zip_mut_with(&trace.pre[i], |g, &p| {
                if p < 0.0 {
                    *g *= slope
                }
            });
        }
        let x = &trace.inputs[i];
        let gl = &mut grads.layers[i];
        // dW += weight * x dᵀ
        for (r, &xv) in x.iter().enumerate() {
            if xv != 0.0 {
                gl.weight.row_mut(r).scaled_add(weight * xv, &d);
            }
        }
        gl.bias.scaled_add(weight, &d);
        d = layers[i].weight.dot(&d);
    }
    d.to_vec()
}

/// One sample of the training objective: encode, send through the channel,
/// decode, and score against the input with the augmented Chamfer distance.
/// Gradients scaled by `weight` are accumulated into `grads`.
pub fn sample_loss_and_grad(
    model: &GnnModel,
    cloud: &PointCloud,
    g: &Graph,
    cfg: &ChannelConfig,
    realization: &ChannelRealization,
    grads: &mut Params,
    weight: f64,
) -> Result<f64> {
    let (z, enc) = encode_traced(model, cloud.points(), g)?;
    let flat = z.flatten();
    let (z_hat, report) = transmit(&flat, cfg, realization)?;
    let (out, dec) = decode_traced(model, &z_hat)?;
    let n = out.len() / 3;
    let recon = PointCloud::new(out.into_shape_with_order((n, 3)).map_err(|e| invalid(e.to_string()))?, "r")?;
    let (terms, d_points) = chamfer_with_gradient(cloud, &recon)?;
    let d_points = d_points.as_slice().expect("standard layout");
    let dz_hat = decode_backward(model, &dec, d_points, &mut grads.decoder, weight);
    let dz = transmit_grad(&dz_hat, &report)?;
    let dz = Array2::from_shape_vec(z.z.raw_dim(), dz).map_err(|e| invalid(e.to_string()))?;
    encode_backward(model, &enc, &dz, &mut grads.encoder, weight);
    Ok(terms.value())
}

/// Draws a realization sized for this model's latent.
pub fn draw_for_model(model: &GnnModel, cfg: &ChannelConfig, rng: &mut ChaCha8Rng) -> Result<ChannelRealization> {
    draw_realization_with(cfg, model.arch.latent_len().div_ceil(2), rng)
}
