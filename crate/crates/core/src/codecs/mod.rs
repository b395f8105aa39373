//! Codec pipelines compared in the experiments: the trained graph
//! autoencoder, HoloCast (octree + graph Fourier transform, optionally with a
//! Givens-coded basis) and SoftCast (DCT on Morton-ordered points).
//!
//! Every codec normalizes the cloud first and hands the channel a real
//! sequence whose mean square equals the configured average power. The
//! normalization and power scale are error-free side information and are not
//! charged.

mod gnn;
mod holocast;
mod softcast;
mod spec;
mod trial;

pub use gnn::GnnCodec;
pub use holocast::{HoloBlock, HoloCast};
pub use softcast::{morton_code, morton_order, SoftBudget, SoftCast, CHUNK_LEN, MORTON_BITS};
pub use spec::{build_codec, CodecSpec};
pub use trial::{mean_std, run_codec_trial, transmit_cloud, transmit_encoded, TransmissionReport, TrialReport};

use crate::channel::{count_overhead, MetadataSpec, OverheadReport};
use crate::cloud::{Affine, PointCloud};
use crate::error::Result;

/// Receiver-side context delivered without errors.
#[derive(Debug, Clone, PartialEq)]
pub enum SideInfo {
    Gnn { affine: Affine },
    HoloCast { affine: Affine, power_scale: f64, n_points: usize, blocks: Vec<HoloBlock> },
    SoftCast { affine: Affine, power_scale: f64, order: Vec<usize>, kept: Vec<usize> },
}

/// What the transmitter produced for one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CodecOutput {
    pub data_reals: Vec<f64>,
    pub metadata: MetadataSpec,
    pub side_info: SideInfo,
}

impl CodecOutput {
    pub fn overhead(&self) -> OverheadReport {
        count_overhead(self.data_reals.len(), &self.metadata)
    }
}

pub trait Codec {
    /// Label used in reports, e.g. `holocast:300` or `givens:300:5`.
    fn name(&self) -> String;
    fn encode(&self, cloud: &PointCloud) -> Result<CodecOutput>;
    /// Rebuilds the cloud, in original coordinates, from received data reals.
    fn decode(&self, output: &CodecOutput, received: &[f64]) -> Result<PointCloud>;
}

/// Factor that brings the mean square of `x` to `power`.
pub(crate) fn power_scale(x: &[f64], power: f64) -> f64 {
    let ms = x.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64;
    if ms > 0.0 {
        (power / ms).sqrt()
    } else {
        1.0
    }
}
