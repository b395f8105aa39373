use serde::Serialize;

use super::{Codec, CodecOutput};
use crate::channel::{draw_realization, transmit, ChannelConfig, OverheadReport};
use crate::cloud::{chamfer_distance, PointCloud};
use crate::error::Result;
use crate::seed;

/// One codec call over one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionReport {
    pub codec: String,
    pub snr_db: f64,
    pub overhead: OverheadReport,
    pub chamfer: f64,
    pub seed: u64,
    pub reconstruction: PointCloud,
}

/// Aggregate over realizations (and possibly clouds); one CSV row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub codec: String,
    pub snr_db: f64,
    pub equalization: String,
    pub precoding: bool,
    pub data_symbols: usize,
    pub metadata_symbols: usize,
    pub total_symbols: usize,
    pub chamfer_mean: f64,
    pub chamfer_std: f64,
    pub seed: u64,
}

/// Passes encoded data through one channel realization drawn from `seed`.
pub fn transmit_cloud(output: &CodecOutput, cfg: &ChannelConfig, seed: u64) -> Result<Vec<f64>> {
    let m = output.data_reals.len().div_ceil(2);
    let real = draw_realization(cfg, m, seed)?;
    Ok(transmit(&output.data_reals, cfg, &real)?.0)
}

/// Sends an already encoded cloud once and scores it against `original`.
pub fn transmit_encoded(
    codec: &dyn Codec,
    original: &PointCloud,
    output: &CodecOutput,
    cfg: &ChannelConfig,
    seed: u64,
) -> Result<TransmissionReport> {
    let received = transmit_cloud(output, cfg, seed)?;
    let reconstruction = codec.decode(output, &received)?;
    Ok(TransmissionReport {
        codec: codec.name(),
        snr_db: cfg.snr_db,
        overhead: output.overhead(),
        chamfer: chamfer_distance(original, &reconstruction)?,
        seed,
        reconstruction,
    })
}

/// Encodes once and averages Chamfer distance over `n_realizations`
/// independent channel draws; realization `r` uses `derive(seed, r)`.
/// The standard deviation is the population one.
pub fn run_codec_trial(
    codec: &dyn Codec,
    cloud: &PointCloud,
    cfg: &ChannelConfig,
    n_realizations: usize,
    seed: u64,
) -> Result<(Vec<f64>, OverheadReport)> {
    if n_realizations == 0 {
        return Err(crate::error::invalid("need at least one realization"));
    }
    let output = codec.encode(cloud)?;
    let chamfers = (0..n_realizations)
        .map(|r| transmit_encoded(codec, cloud, &output, cfg, seed::derive(seed, r as u64)).map(|t| t.chamfer))
        .collect::<Result<Vec<_>>>()?;
    Ok((chamfers, output.overhead()))
}

/// Mean and population standard deviation.
pub fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
