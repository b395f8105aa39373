//! Hand-derived gradients against central finite differences. Every check
//! returns the worst relative error over its instances.

use ndarray::{Array1, Array2};
use softcloud::channel::{
    draw_realization, transmit, transmit_grad, ChannelConfig, Equalization, FadingMode,
};
use softcloud::cloud::{build_knn_graph, chamfer_distance, chamfer_with_gradient, PointCloud};
use softcloud::neural::*;

use super::*;

pub const TOL: f64 = 1e-4;
const H: f64 = 1e-6;
const INSTANCES: u64 = 20;
const E2E_H: f64 = 1e-8;

fn weighted(y: &Array2<f64>, r: &Array2<f64>) -> f64 {
    (y * r).sum()
}

fn arr(x: &[f64], rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_vec((rows, cols), x.to_vec()).unwrap()
}

pub fn gcn_layer_err() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(100 + inst);
        let (n, cin, cout) = (7 + inst as usize % 5, 3, 4);
        let g = random_graph(&mut r, n, 0.4);
        let x = gaussian_matrix(&mut r, n, cin);
        let w = gaussian_matrix(&mut r, cin, cout);
        let b = gaussian_vec(&mut r, cout);
        let up = gaussian_matrix(&mut r, n, cout);
        let (_, cache) = gcn_layer(&x, &g, &w, &b).unwrap();
        let grads = gcn_backward(&cache, &w, &up, true);

        let f_x = |v: &[f64]| weighted(&gcn_layer(&arr(v, n, cin), &g, &w, &b).unwrap().0, &up);
        let num = numeric_grad(x.as_slice().unwrap(), H, f_x);
        worst = worst.max(rel_err(grads.dx.as_ref().unwrap().as_slice().unwrap(), &num));

        let f_w = |v: &[f64]| weighted(&gcn_layer(&x, &g, &arr(v, cin, cout), &b).unwrap().0, &up);
        let num = numeric_grad(w.as_slice().unwrap(), H, f_w);
        worst = worst.max(rel_err(grads.dweight.as_slice().unwrap(), &num));

        let f_b = |v: &[f64]| weighted(&gcn_layer(&x, &g, &w, &Array1::from(v.to_vec())).unwrap().0, &up);
        let num = numeric_grad(b.as_slice().unwrap(), H, f_b);
        worst = worst.max(rel_err(grads.dbias.as_slice().unwrap(), &num));
    }
    worst
}

pub fn leaky_relu_layer_err() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(200 + inst);
        let x = gaussian_matrix(&mut r, 6, 5);
        let up = gaussian_matrix(&mut r, 6, 5);
        let analytic = leaky_relu_backward(&x, &up, 0.01);
        let num = numeric_grad(x.as_slice().unwrap(), H, |v| weighted(&leaky_relu(&arr(v, 6, 5), 0.01), &up));
        worst = worst.max(rel_err(analytic.as_slice().unwrap(), &num));
    }
    worst
}

pub fn topk_pool_fixed_selection_err() -> f64 {
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut inst = 0;
    while checked < INSTANCES {
        inst += 1;
        let mut r = rng(300 + inst);
        let (n, c) = (12, 4);
        let g = random_graph(&mut r, n, 0.3);
        let x = gaussian_matrix(&mut r, n, c);
        let p = gaussian_vec(&mut r, c);
        let ratio = 0.5;
        let (pooled, cache) = topk_pool(&x, &g, &p, ratio).unwrap();
        let up = gaussian_matrix(&mut r, pooled.x.nrows(), c);
        let (dx, dp) = topk_pool_backward(&cache, &up);
        let kept = pooled.kept.clone();

        let mut selection_stable = true;
        let mut f_x = |v: &[f64]| {
            let (o, _) = topk_pool(&arr(v, n, c), &g, &p, ratio).unwrap();
            selection_stable &= o.kept == kept;
            weighted(&o.x, &up)
        };
        let num_x = numeric_grad(x.as_slice().unwrap(), H, &mut f_x);
        let mut f_p = |v: &[f64]| {
            let (o, _) = topk_pool(&x, &g, &Array1::from(v.to_vec()), ratio).unwrap();
            selection_stable &= o.kept == kept;
            weighted(&o.x, &up)
        };
        let num_p = numeric_grad(p.as_slice().unwrap(), H, &mut f_p);
        if !selection_stable {
            continue;
        }
        worst = worst.max(rel_err(dx.as_slice().unwrap(), &num_x));
        worst = worst.max(rel_err(dp.as_slice().unwrap(), &num_p));
        checked += 1;
    }
    worst
}

pub fn power_normalization_err() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(400 + inst);
        let z = gaussian_matrix(&mut r, 5, 3);
        let up = gaussian_matrix(&mut r, 5, 3);
        let power = 0.5 + inst as f64 * 0.1;
        let (_, cache) = power_normalize(&z, power).unwrap();
        let analytic = power_normalize_backward(&cache, &up);
        let num = numeric_grad(z.as_slice().unwrap(), H, |v| {
            weighted(&power_normalize(&arr(v, 5, 3), power).unwrap().0.z, &up)
        });
        worst = worst.max(rel_err(analytic.as_slice().unwrap(), &num));
    }
    worst
}

fn small_model(seed: u64) -> GnnModel {
    GnnModel::new(
        Architecture {
            n_points: 16,
            knn_k: 3,
            channels: [4, 5, 6],
            ratios: [0.75, 0.75, 0.5],
            decoder_hidden: 7,
            ..Architecture::default()
        },
        seed,
    )
    .unwrap()
}

/// Decoder MLP including the output tanh, against its weights and input.
pub fn decoder_mlp_err() -> f64 {
    let mut worst = 0.0f64;
    for inst in 0..INSTANCES {
        let mut r = rng(500 + inst);
        let mut model = small_model(inst);
        let latent = model.arch.latent_len();
        let z: Vec<f64> = gaussian_vec(&mut r, latent).to_vec();
        let (out, trace) = decode_traced(&model, &z).unwrap();
        let up: Vec<f64> = gaussian_vec(&mut r, out.len()).to_vec();
        let mut grads = model.params.zeros_like();
        let dz = decode_backward(&model, &trace, &up, &mut grads.decoder, 1.0);

        let loss = |m: &GnnModel, z: &[f64]| -> f64 {
            decode_traced(m, z).unwrap().0.iter().zip(&up).map(|(a, b)| a * b).sum()
        };
        let num = numeric_grad(&z, H, |v| loss(&model, v));
        worst = worst.max(rel_err(&dz, &num));

        for layer in 0..3 {
            for bias in [false, true] {
                let analytic: Vec<f64> = if bias {
                    grads.decoder.layers[layer].bias.to_vec()
                } else {
                    grads.decoder.layers[layer].weight.iter().copied().collect()
                };
                let orig: Vec<f64> = if bias {
                    model.params.decoder.layers[layer].bias.to_vec()
                } else {
                    model.params.decoder.layers[layer].weight.iter().copied().collect()
                };
                let num = numeric_grad(&orig, H, |v| {
                    let l = &mut model.params.decoder.layers[layer];
                    if bias {
                        l.bias.as_slice_mut().unwrap().copy_from_slice(v);
                    } else {
                        l.weight.as_slice_mut().unwrap().copy_from_slice(v);
                    }
                    loss(&model, &z)
                });
                let l = &mut model.params.decoder.layers[layer];
                if bias {
                    l.bias.as_slice_mut().unwrap().copy_from_slice(&orig);
                } else {
                    l.weight.as_slice_mut().unwrap().copy_from_slice(&orig);
                }
                worst = worst.max(rel_err(&analytic, &num));
            }
        }
    }
    worst
}

pub fn chamfer_loss_err() -> f64 {
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut inst = 0;
    while checked < INSTANCES {
        inst += 1;
        let mut r = rng(600 + inst);
        let s = random_cloud(&mut r, 9 + (inst as usize % 4));
        let s_hat = random_cloud(&mut r, 7 + (inst as usize % 5));
        let (terms, grad) = chamfer_with_gradient(&s, &s_hat).unwrap();
        if (terms.forward - terms.backward).abs() < 1e-3 {
            continue;
        }
        let n = s_hat.len();
        let num = numeric_grad(s_hat.as_flat(), 1e-7, |v| {
            chamfer_distance(&s, &PointCloud::new(arr(v, n, 3), "p").unwrap()).unwrap()
        });
        worst = worst.max(rel_err(grad.as_slice().unwrap(), &num));
        checked += 1;
    }
    worst
}

pub fn transmit_both_equalizers_err() -> f64 {
    let mut worst = 0.0f64;
    for eq in [Equalization::Pre, Equalization::Post] {
        for inst in 0..INSTANCES {
            let mut r = rng(700 + inst);
            let cfg = ChannelConfig::new(5.0, FadingMode::Rayleigh, eq, inst % 2 == 0);
            let z: Vec<f64> = gaussian_vec(&mut r, 11).to_vec();
            let real = draw_realization(&cfg, 6, 900 + inst).unwrap();
            let up: Vec<f64> = gaussian_vec(&mut r, 11).to_vec();
            let (_, report) = transmit(&z, &cfg, &real).unwrap();
            let analytic = transmit_grad(&up, &report).unwrap();
            let num = numeric_grad(&z, H, |v| {
                transmit(v, &cfg, &real).unwrap().0.iter().zip(&up).map(|(a, b)| a * b).sum()
            });
            worst = worst.max(rel_err(&analytic, &num));
        }
    }
    worst
}

/// The whole sample objective against a subset of every parameter tensor.
/// Leaky ReLU and nearest-neighbor kinks sit closer together here than in
/// the single-layer checks, so the step is smaller.
pub fn end_to_end_sample_err() -> f64 {
    let mut worst = 0.0f64;
    let clouds = synthetic(4, 16, 5);
    let cfg = ChannelConfig::new(10.0, FadingMode::Rayleigh, Equalization::Post, true);
    for (ci, cloud) in clouds.iter().enumerate() {
        let (norm, _) = softcloud::cloud::normalize(cloud).unwrap();
        let mut model = small_model(40 + ci as u64);
        let g = build_knn_graph(&norm, model.arch.knn_k).unwrap().into_graph();
        let real = draw_realization(&cfg, model.arch.latent_len().div_ceil(2), ci as u64).unwrap();
        let mut grads = model.params.zeros_like();
        sample_loss_and_grad(&model, &norm, &g, &cfg, &real, &mut grads, 1.0).unwrap();
        let analytic: Vec<Vec<f64>> = grads.tensors().iter().map(|t| t.to_vec()).collect();
        let loss = |m: &GnnModel| {
            let mut scratch = m.params.zeros_like();
            sample_loss_and_grad(m, &norm, &g, &cfg, &real, &mut scratch, 1.0).unwrap()
        };
        let n_tensors = analytic.len();
        for t in 0..n_tensors {
            let len = analytic[t].len();
            let picks: Vec<usize> = (0..len.min(6)).map(|k| (k * 7919) % len).collect();
            let mut num = Vec::new();
            for &i in &picks {
                let orig = model.params.tensors_mut()[t][i];
                model.params.tensors_mut()[t][i] = orig + E2E_H;
                let up = loss(&model);
                model.params.tensors_mut()[t][i] = orig - E2E_H;
                let down = loss(&model);
                model.params.tensors_mut()[t][i] = orig;
                num.push((up - down) / (2.0 * E2E_H));
            }
            let a: Vec<f64> = picks.iter().map(|&i| analytic[t][i]).collect();
            worst = worst.max(rel_err(&a, &num));
        }
    }
    worst
}
