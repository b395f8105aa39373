use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::model::{draw_for_model, sample_loss_and_grad, GnnModel};
use crate::channel::ChannelConfig;
use crate::cloud::{build_knn_graph, normalize, Graph, PointCloud};
use crate::error::{dims, invalid, Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        let a = AdamConfig::default();
        Self { epochs: 500, batch_size: 10, lr: a.lr, beta1: a.beta1, beta2: a.beta2, eps: a.eps }
    }
}

impl TrainSchedule {
    pub fn adam(&self) -> AdamConfig {
        AdamConfig { lr: self.lr, beta1: self.beta1, beta2: self.beta2, eps: self.eps }
    }
}

/// Everything needed to continue training exactly where it stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainState {
    pub model: GnnModel,
    pub adam: AdamState,
    pub epochs_done: usize,
}

impl TrainState {
    pub fn new(model: GnnModel) -> Self {
        let adam = AdamState::new(&model.params);
        Self { model, adam, epochs_done: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochLog {
    /// 1-based global epoch number.
    pub epoch: usize,
    pub mean_loss: f64,
    /// Seconds since this call to [`train`] started.
    pub wall_time: f64,
}

/// Normalizes each cloud and builds its KNN graph once.
pub fn prepare_training_set(clouds: &[PointCloud], n_points: usize, k: usize) -> Result<Vec<(PointCloud, Graph)>> {
    clouds
        .iter()
        .map(|c| {
            if c.len() != n_points {
                return Err(dims(format!("cloud '{}' has {} points, model expects {n_points}", c.id, c.len())));
            }
            let (n, _) = normalize(c)?;
            let g = build_knn_graph(&n, k)?.into_graph();
            Ok((n, g))
        })
        .collect()
}

/// Runs `schedule.epochs` more epochs of minibatch ADAM on the mean
/// augmented Chamfer distance, with a fresh channel realization per sample.
///
/// Epoch `e` draws its shuffle and channel noise from `derive(seed, e)`, so
/// training split across several calls reproduces one long call.
pub fn train(
    state: &mut TrainState,
    dataset: &[PointCloud],
    cfg: &ChannelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<Vec<EpochLog>> {
    if dataset.is_empty() {
        return Err(invalid("training set is empty"));
    }
    if schedule.batch_size == 0 {
        return Err(invalid("batch size must be positive"));
    }
    cfg.validate()?;
    let arch = state.model.arch.clone();
    let prepared = prepare_training_set(dataset, arch.n_points, arch.knn_k)?;
    train_prepared(state, &prepared, cfg, schedule, seed)
}

pub fn train_prepared(
    state: &mut TrainState,
    prepared: &[(PointCloud, Graph)],
    cfg: &ChannelConfig,
    schedule: &TrainSchedule,
    seed: u64,
) -> Result<Vec<EpochLog>> {
    let adam = schedule.adam();
    let start = Instant::now();
    let mut grads = state.model.params.zeros_like();
    let mut log = Vec::with_capacity(schedule.epochs);
    for _ in 0..schedule.epochs {
        let epoch = state.epochs_done;
        let mut rng = seed::rng(seed::derive(seed, epoch as u64));
        let mut order: Vec<usize> = (0..prepared.len()).collect();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (step, batch) in order.chunks(schedule.batch_size).enumerate() {
            grads.for_each_mut(|s| s.fill(0.0));
            let w = 1.0 / batch.len() as f64;
            for &i in batch {
                let (cloud, graph) = &prepared[i];
                let real = draw_for_model(&state.model, cfg, &mut rng)?;
                let loss = sample_loss_and_grad(&state.model, cloud, graph, cfg, &real, &mut grads, w)?;
                if !loss.is_finite() {
                    return Err(Error::Diverged { epoch: epoch + 1, step, msg: format!("loss {loss} on '{}'", cloud.id) });
                }
                total += loss;
            }
            if !grads.all_finite() {
                return Err(Error::Diverged { epoch: epoch + 1, step, msg: "non-finite gradient".into() });
            }
            adam_step(&mut state.model.params, &grads, &mut state.adam, &adam)?;
        }
        state.epochs_done += 1;
        log.push(EpochLog {
            epoch: state.epochs_done,
            mean_loss: total / prepared.len() as f64,
            wall_time: start.elapsed().as_secs_f64(),
        });
        log::debug!("epoch {} loss {:.6}", state.epochs_done, total / prepared.len() as f64);
    }
    Ok(log)
}
