//! Soft delivery of 3D point clouds over fading wireless channels.
//!
//! The crate bundles everything needed to simulate near-analog point cloud
//! transmission end to end:
//!
//! * [`cloud`]: point cloud model, KNN graphs, octree blocks, the augmented
//!   Chamfer metric, file I/O and synthetic datasets.
//! * [`gsp`]: Jacobi eigensolver, graph Laplacians, GFT, DCT and Givens
//!   factorization with angle quantization.
//! * [`channel`]: I/Q mapping, Rayleigh fading, pre/post equalization,
//!   precoding and overhead accounting.
//! * [`neural`]: the graph autoencoder (GCN, Top-K pooling, power
//!   normalization, MLP decoder) with hand-written gradients and ADAM.
//! * [`codecs`]: the GNN codec and the HoloCast / SoftCast baselines behind a
//!   common interface.
//! * [`harness`]: experiment configuration and the sweep drivers used by the
//!   command-line tool.

pub mod channel;
pub mod cloud;
pub mod codecs;
pub mod error;
pub mod gsp;
pub mod harness;
pub mod neural;
pub mod seed;

pub use error::{Error, Result};
