//! Point cloud data model and geometry utilities.

mod chamfer;
pub mod io;
mod knn;
mod octree;
pub mod synth;

pub use chamfer::{chamfer_distance, chamfer_gradient, chamfer_with_gradient, ChamferTerms};
pub use knn::{build_knn_graph, Graph, KnnGraph};
pub use octree::{octree_decompose, OctreeBlock, OctreeBlocks, MAX_OCTREE_DEPTH};

use ndarray::{Array2, ArrayView1};

use crate::error::{invalid, Error, Result};

/// Margin kept between normalized coordinates and the ±1 bounds of the
/// decoder's tanh output.
pub const DEFAULT_MARGIN: f64 = 0.05;

/// An N×3 set of coordinates with an opaque label.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
    pub id: String,
}

impl PointCloud {
    /// Builds a cloud from an N×3 matrix. Rejects empty clouds and
    /// non-finite coordinates.
    pub fn new(points: Array2<f64>, id: impl Into<String>) -> Result<Self> {
        if points.ncols() != 3 {
            return Err(invalid(format!("expected 3 columns, got {}", points.ncols())));
        }
        if points.nrows() == 0 {
            return Err(invalid("point cloud must contain at least one point"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point cloud has non-finite coordinates"));
        }
        let points = if points.is_standard_layout() {
            points
        } else {
            points.as_standard_layout().to_owned()
        };
        Ok(Self { points, id: id.into() })
    }

    pub fn from_points(points: &[[f64; 3]], id: impl Into<String>) -> Result<Self> {
        let flat: Vec<f64> = points.iter().flatten().copied().collect();
        let arr = Array2::from_shape_vec((points.len(), 3), flat)
            .map_err(|e| invalid(e.to_string()))?;
        Self::new(arr, id)
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn into_points(self) -> Array2<f64> {
        self.points
    }

    /// Row-major coordinates, three per point.
    pub fn as_flat(&self) -> &[f64] {
        self.points.as_slice().expect("standard layout")
    }

    pub fn point(&self, i: usize) -> [f64; 3] {
        let f = &self.as_flat()[3 * i..3 * i + 3];
        [f[0], f[1], f[2]]
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    /// Sub-cloud made of the given point indices, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut flat = Vec::with_capacity(indices.len() * 3);
        for &i in indices {
            flat.extend_from_slice(&self.point(i));
        }
        let arr = Array2::from_shape_vec((indices.len(), 3), flat)
            .map_err(|e| invalid(e.to_string()))?;
        Self::new(arr, self.id.clone())
    }

    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for p in self.as_flat().chunks_exact(3) {
            for d in 0..3 {
                c[d] += p[d];
            }
        }
        let n = self.len() as f64;
        c.map(|v| v / n)
    }
}

/// Inverse parameters of [`normalize`]: `original = normalized / scale + center`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub center: [f64; 3],
    pub scale: f64,
}

impl Affine {
    pub const IDENTITY: Affine = Affine { center: [0.0; 3], scale: 1.0 };

    pub fn apply(&self, cloud: &PointCloud) -> Result<PointCloud> {
        let mut pts = cloud.points().clone();
        for mut row in pts.rows_mut() {
            for d in 0..3 {
                row[d] = (row[d] - self.center[d]) * self.scale;
            }
        }
        PointCloud::new(pts, cloud.id.clone())
    }

    pub fn invert(&self, cloud: &PointCloud) -> Result<PointCloud> {
        let mut pts = cloud.points().clone();
        for mut row in pts.rows_mut() {
            for d in 0..3 {
                row[d] = row[d] / self.scale + self.center[d];
            }
        }
        PointCloud::new(pts, cloud.id.clone())
    }
}

/// Centers the cloud and scales it so the largest absolute coordinate is
/// `1 - DEFAULT_MARGIN`.
pub fn normalize(cloud: &PointCloud) -> Result<(PointCloud, Affine)> {
    normalize_with_margin(cloud, DEFAULT_MARGIN)
}

pub fn normalize_with_margin(cloud: &PointCloud, margin: f64) -> Result<(PointCloud, Affine)> {
    if !(0.0..1.0).contains(&margin) {
        return Err(invalid(format!("margin {margin} outside [0, 1)")));
    }
    let center = cloud.centroid();
    let max_abs = cloud
        .as_flat()
        .chunks_exact(3)
        .flat_map(|p| (0..3).map(move |d| (p[d] - center[d]).abs()))
        .fold(0.0_f64, f64::max);
    if max_abs == 0.0 {
        return Err(Error::Degenerate("all points coincide; cannot normalize".into()));
    }
    let affine = Affine { center, scale: (1.0 - margin) / max_abs };
    Ok((affine.apply(cloud)?, affine))
}

/// Undoes [`normalize`].
pub fn denormalize(cloud: &PointCloud, affine: &Affine) -> Result<PointCloud> {
    affine.invert(cloud)
}
