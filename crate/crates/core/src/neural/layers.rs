//! Differentiable building blocks. Each forward returns a cache that its
//! backward consumes.

use ndarray::{Array1, Array2, Axis};

use crate::cloud::Graph;
use crate::error::{dims, invalid, Error, Result};

/// `D^{-1/2} (W + I) D^{-1/2}` with `D` the degrees of `W + I`, stored
/// row-wise as (column, weight) pairs.
#[derive(Debug, Clone)]
pub struct NormAdjacency {
    rows: Vec<Vec<(usize, f64)>>,
}

impl NormAdjacency {
    pub fn new(g: &Graph) -> Self {
        let n = g.n_vertices();
        let inv_sqrt: Vec<f64> = (0..n).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
        let rows = (0..n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> =
                    g.neighbors(i).iter().map(|&j| (j, inv_sqrt[i] * inv_sqrt[j])).collect();
                row.push((i, inv_sqrt[i] * inv_sqrt[i]));
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        Self { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `Â x`.
    pub fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        let c = x.ncols();
        let mut out = Array2::zeros((self.n(), c));
        for (i, row) in self.rows.iter().enumerate() {
            let mut o = out.row_mut(i);
            for &(j, w) in row {
                o.scaled_add(w, &x.row(j));
            }
        }
        out
    }
}

pub fn leaky_relu(x: &Array2<f64>, slope: f64) -> Array2<f64> {
    x.mapv(|v| if v >= 0.0 { v } else { slope * v })
}

/// Multiplies `d_out` by the leaky-ReLU derivative at `pre`.
pub fn leaky_relu_backward(pre: &Array2<f64>, d_out: &Array2<f64>, slope: f64) -> Array2<f64> {
    let mut d = d_out.clone();
    d.zip_mut_with(pre, |g, &p| {
        if p < 0.0 {
            *g *= slope
        }
    });
    d
}

pub struct GcnCache {
    adj: NormAdjacency,
    /// `Â x`, reused for the weight gradient.
    ax: Array2<f64>,
}

pub struct GcnGrads {
    pub dx: Option<Array2<f64>>,
    pub dweight: Array2<f64>,
    pub dbias: Array1<f64>,
}

/// Graph convolution `Â x Θ + b` with symmetric normalization and self loops.
pub fn gcn_layer(
    x: &Array2<f64>,
    g: &Graph,
    weight: &Array2<f64>,
    bias: &Array1<f64>,
) -> Result<(Array2<f64>, GcnCache)> {
    if x.nrows() != g.n_vertices() {
        return Err(dims(format!("{} feature rows for {} vertices", x.nrows(), g.n_vertices())));
    }
    if x.ncols() != weight.nrows() || weight.ncols() != bias.len() {
        return Err(dims(format!(
            "features {}x{}, weight {}x{}, bias {}",
            x.nrows(),
            x.ncols(),
            weight.nrows(),
            weight.ncols(),
            bias.len()
        )));
    }
    let adj = NormAdjacency::new(g);
    let ax = adj.apply(x);
    let out = ax.dot(weight) + bias;
    Ok((out, GcnCache { adj, ax }))
}

pub fn gcn_backward(cache: &GcnCache, weight: &Array2<f64>, d_out: &Array2<f64>, need_dx: bool) -> GcnGrads {
    let dweight = cache.ax.t().dot(d_out);
    let dbias = d_out.sum_axis(Axis(0));
    // Â is symmetric, so its transpose is itself.
    let dx = need_dx.then(|| cache.adj.apply(&d_out.dot(&weight.t())));
    GcnGrads { dx, dweight, dbias }
}

/// Number of vertices kept by pooling `n` vertices at `ratio`: `ceil(ratio n)`,
/// at least one. A tiny slack absorbs products like `0.9 * 10` that land a
/// rounding error above an integer.
pub fn pooled_size(n: usize, ratio: f64) -> usize {
    let k = (ratio * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

pub struct Pooled {
    pub x: Array2<f64>,
    pub graph: Graph,
    /// Input vertex behind each output row, best score first.
    pub kept: Vec<usize>,
}

pub struct PoolCache {
    x: Array2<f64>,
    kept: Vec<usize>,
    gates: Vec<f64>,
    p_hat: Array1<f64>,
    p_norm: f64,
}

impl PoolCache {
    pub fn kept(&self) -> &[usize] {
        &self.kept
    }
}

/// Projection-score Top-K pooling.
///
/// Scores `y = x p / |p|`; the `ceil(ratio n)` best-scoring vertices are kept
/// (ties to the lower index) in descending score order, each row gated by
/// `tanh(y)`, and the graph is restricted to them.
pub fn topk_pool(x: &Array2<f64>, g: &Graph, p: &Array1<f64>, ratio: f64) -> Result<(Pooled, PoolCache)> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(invalid(format!("pooling ratio {ratio} outside (0, 1]")));
    }
    if x.nrows() != g.n_vertices() || x.ncols() != p.len() {
        return Err(dims(format!(
            "features {}x{}, graph {} vertices, projection {}",
            x.nrows(),
            x.ncols(),
            g.n_vertices(),
            p.len()
        )));
    }
    let p_norm = p.dot(p).sqrt();
    if p_norm == 0.0 {
        return Err(invalid("pooling projection vector is zero"));
    }
    let p_hat = p / p_norm;
    let scores = x.dot(&p_hat);
    let k = pooled_size(x.nrows(), ratio);
    let mut order: Vec<usize> = (0..x.nrows()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    let gates: Vec<f64> = order.iter().map(|&i| scores[i].tanh()).collect();
    let mut out = Array2::zeros((k, x.ncols()));
    for (t, (&i, &gate)) in order.iter().zip(&gates).enumerate() {
        out.row_mut(t).assign(&(&x.row(i) * gate));
    }
    let graph = g.induced(&order);
    Ok((
        Pooled { x: out, graph, kept: order.clone() },
        PoolCache { x: x.clone(), kept: order, gates, p_hat, p_norm },
    ))
}

/// Gradients with respect to the pooling input and projection vector, with
/// the selection held fixed.
pub fn topk_pool_backward(cache: &PoolCache, d_out: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let mut dx = Array2::zeros(cache.x.raw_dim());
    let mut dp_hat = Array1::zeros(cache.p_hat.len());
    for (t, (&i, &gate)) in cache.kept.iter().zip(&cache.gates).enumerate() {
        let g_row = d_out.row(t);
        let x_row = cache.x.row(i);
        let dy = g_row.dot(&x_row) * (1.0 - gate * gate);
        let mut dxi = dx.row_mut(i);
        dxi.scaled_add(gate, &g_row);
        dxi.scaled_add(dy, &cache.p_hat);
        dp_hat.scaled_add(dy, &x_row);
    }
    let radial = cache.p_hat.dot(&dp_hat);
    let dp = (&dp_hat - &(&cache.p_hat * radial)) / cache.p_norm;
    (dx, dp)
}

/// An m×L latent code, flattened row-major for transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode {
    pub z: Array2<f64>,
}

impl LatentCode {
    pub fn m(&self) -> usize {
        self.z.nrows()
    }

    pub fn channels(&self) -> usize {
        self.z.ncols()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.z.iter().copied().collect()
    }

    pub fn energy(&self) -> f64 {
        self.z.iter().map(|v| v * v).sum()
    }
}

pub struct NormCache {
    z_raw: Array2<f64>,
    norm: f64,
    scale: f64,
}

/// Scales `z_raw` so that `|z|^2 = m L P`.
pub fn power_normalize(z_raw: &Array2<f64>, power: f64) -> Result<(LatentCode, NormCache)> {
    let norm = z_raw.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numerical(format!("cannot power-normalize a latent of norm {norm}")));
    }
    let target = (z_raw.len() as f64 * power).sqrt();
    let scale = target / norm;
    let z = z_raw * scale;
    Ok((LatentCode { z }, NormCache { z_raw: z_raw.clone(), norm, scale }))
}

/// `dz_raw = s (dz - u (u . dz))` with `u = z_raw / |z_raw|`.
pub fn power_normalize_backward(cache: &NormCache, dz: &Array2<f64>) -> Array2<f64> {
    let proj = (&cache.z_raw * dz).sum() / (cache.norm * cache.norm);
    (dz - &(&cache.z_raw * proj)) * cache.scale
}
