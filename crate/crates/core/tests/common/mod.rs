#![allow(dead_code)]

pub mod gradcheck;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use softcloud::cloud::synth::{generate_synthetic_dataset, ShapeFamily, SyntheticSpec};
use softcloud::cloud::{Graph, PointCloud};
use softcloud::seed;

pub fn rng(s: u64) -> ChaCha8Rng {
    seed::rng(s)
}

pub fn gaussian_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| StandardNormal.sample(r))
}

pub fn gaussian_vec(r: &mut ChaCha8Rng, n: usize) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| StandardNormal.sample(r))
}

pub fn random_cloud(r: &mut ChaCha8Rng, n: usize) -> PointCloud {
    let pts = Array2::from_shape_fn((n, 3), |_| r.random_range(-1.0..1.0));
    PointCloud::new(pts, "rand").unwrap()
}

pub fn random_symmetric(r: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let a = gaussian_matrix(r, n, n);
    (&a + &a.t()) * 0.5
}

/// Orthogonal factor of a Gaussian matrix by modified Gram-Schmidt.
pub fn random_orthogonal(r: &mut ChaCha8Rng, n: usize) -> Array2<f64> {
    let mut q = gaussian_matrix(r, n, n);
    for j in 0..n {
        for k in 0..j {
            let proj = q.column(j).dot(&q.column(k));
            let col_k = q.column(k).to_owned();
            q.column_mut(j).scaled_add(-proj, &col_k);
        }
        let norm = q.column(j).dot(&q.column(j)).sqrt();
        q.column_mut(j).mapv_inplace(|v| v / norm);
    }
    q
}

/// Erdos-Renyi graph with edge probability `p`.
pub fn random_graph(r: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if r.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

pub fn frob(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn synthetic(count: usize, points: usize, s: u64) -> Vec<PointCloud> {
    generate_synthetic_dataset(&SyntheticSpec {
        families: ShapeFamily::ALL.to_vec(),
        count,
        points_per_cloud: points,
        seed: s,
    })
    .unwrap()
}

/// Relative error between gradient vectors, guarded against tiny norms.
pub fn rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let scale = analytic
        .iter()
        .map(|a| a * a)
        .sum::<f64>()
        .sqrt()
        .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt())
        .max(1e-10);
    diff / scale
}

/// Central differences of `f` around `x`.
pub fn numeric_grad(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut x = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + h;
            let up = f(&x);
            x[i] = orig - h;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}
