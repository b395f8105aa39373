use ndarray::Array2;

use super::{power_scale, Codec, CodecOutput, SideInfo};
use crate::channel::MetadataSpec;
use crate::cloud::{build_knn_graph, normalize, octree_decompose, PointCloud};
use crate::error::{dims, invalid, Result};
use crate::gsp::{
    build_laplacian, givens_factorize, quantize_angles, reconstruct_basis, GftBasis, LaplacianKind,
};

const EIGEN_TOL: f64 = 1e-12;

/// One octree block as the receiver knows it.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloBlock {
    /// Row indices of the block's points in the source cloud.
    pub indices: Vec<usize>,
    /// Basis used for the inverse transform; `None` when the block's
    /// coordinates were sent raw.
    pub basis: Option<Array2<f64>>,
}

/// Octree blocks, each transformed by the eigenbasis of its KNN graph
/// Laplacian. The basis travels as analog metadata (plain) or as Givens
/// angles quantized to `givens` bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoloCast {
    pub block_size: usize,
    pub knn_k: usize,
    pub givens: Option<u32>,
    pub avg_power: f64,
}

impl HoloCast {
    pub fn plain(block_size: usize, knn_k: usize) -> Self {
        Self { block_size, knn_k, givens: None, avg_power: 1.0 }
    }

    pub fn with_givens(block_size: usize, knn_k: usize, bits: u32) -> Self {
        Self { block_size, knn_k, givens: Some(bits), avg_power: 1.0 }
    }

    fn validate(&self) -> Result<()> {
        if self.block_size < 2 {
            return Err(invalid(format!("block size must be at least 2, got {}", self.block_size)));
        }
        if self.knn_k == 0 {
            return Err(invalid("HoloCast needs k >= 1"));
        }
        if let Some(b) = self.givens {
            if !(2..=16).contains(&b) {
                return Err(invalid(format!("Givens bit depth {b} outside 2..=16")));
            }
        }
        Ok(())
    }

    /// Basis and metadata cost for one block's points.
    fn block_basis(&self, pts: &PointCloud) -> Result<(Array2<f64>, Array2<f64>, MetadataSpec)> {
        let n = pts.len();
        let g = build_knn_graph(pts, self.knn_k.min(n - 1))?.into_graph();
        let lap = build_laplacian(&g, LaplacianKind::SymNormalized)?;
        let basis = GftBasis::from_laplacian(&lap, EIGEN_TOL)?;
        match self.givens {
            None => {
                let meta = MetadataSpec { analog_reals: basis.metadata_reals(), digital_bits: 0 };
                Ok((basis.basis.clone(), basis.basis, meta))
            }
            Some(bits) => {
                let f = quantize_angles(&givens_factorize(&basis.basis)?, bits)?;
                let meta = MetadataSpec { analog_reals: 0, digital_bits: f.metadata_bits() };
                Ok((basis.basis, reconstruct_basis(&f), meta))
            }
        }
    }
}

impl Codec for HoloCast {
    fn name(&self) -> String {
        match self.givens {
            None => format!("holocast:{}", self.block_size),
            Some(b) => format!("givens:{}:{b}", self.block_size),
        }
    }

    fn encode(&self, cloud: &PointCloud) -> Result<CodecOutput> {
        self.validate()?;
        let (norm, affine) = normalize(cloud)?;
        let tree = octree_decompose(&norm, self.block_size)?;
        let mut data = Vec::with_capacity(3 * norm.len());
        let mut metadata = MetadataSpec::NONE;
        let mut blocks = Vec::with_capacity(tree.blocks.len());
        for b in &tree.blocks {
            let pts = norm.select(&b.indices)?;
            if pts.len() < 2 {
                data.extend_from_slice(pts.as_flat());
                blocks.push(HoloBlock { indices: b.indices.clone(), basis: None });
                continue;
            }
            let (tx_basis, rx_basis, meta) = self.block_basis(&pts)?;
            let coeffs = tx_basis.t().dot(pts.points());
            data.extend(coeffs.t().iter().copied());
            metadata = metadata.merge(meta);
            blocks.push(HoloBlock { indices: b.indices.clone(), basis: Some(rx_basis) });
        }
        let s = power_scale(&data, self.avg_power);
        data.iter_mut().for_each(|v| *v *= s);
        Ok(CodecOutput {
            data_reals: data,
            metadata,
            side_info: SideInfo::HoloCast { affine, power_scale: s, n_points: norm.len(), blocks },
        })
    }

    fn decode(&self, output: &CodecOutput, received: &[f64]) -> Result<PointCloud> {
        let SideInfo::HoloCast { affine, power_scale, n_points, blocks } = &output.side_info else {
            return Err(invalid("side information does not belong to HoloCast"));
        };
        if received.len() != 3 * n_points {
            return Err(dims(format!("received {} reals, expected {}", received.len(), 3 * n_points)));
        }
        let mut pts = Array2::zeros((*n_points, 3));
        let mut off = 0;
        for b in blocks {
            let n = b.indices.len();
            let chunk: Vec<f64> = received[off..off + 3 * n].iter().map(|v| v / power_scale).collect();
            off += 3 * n;
            let block_pts = match &b.basis {
                None => Array2::from_shape_vec((n, 3), chunk).map_err(|e| dims(e.to_string()))?,
                Some(u) => {
                    let coeffs = Array2::from_shape_vec((3, n), chunk).map_err(|e| dims(e.to_string()))?;
                    u.dot(&coeffs.t())
                }
            };
            for (r, &i) in b.indices.iter().enumerate() {
                pts.row_mut(i).assign(&block_pts.row(r));
            }
        }
        affine.invert(&PointCloud::new(pts, "holocast")?)
    }
}
