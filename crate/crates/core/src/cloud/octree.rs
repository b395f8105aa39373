use log::warn;

use super::PointCloud;
use crate::error::{invalid, Result};

/// Depth at which splitting stops even if a leaf is still oversized
/// (coincident points can never be separated).
pub const MAX_OCTREE_DEPTH: usize = 24;

#[derive(Debug, Clone, PartialEq)]
pub struct OctreeBlock {
    pub indices: Vec<usize>,
    /// Lower corner of the cubic cell.
    pub origin: [f64; 3],
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OctreeBlocks {
    pub blocks: Vec<OctreeBlock>,
    pub max_block_size: usize,
    /// Leaves left above `max_block_size` because the depth cap was reached.
    pub oversized_leaves: usize,
}

impl OctreeBlocks {
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }
}

/// Splits the bounding cube of `cloud` into octants until every leaf holds at
/// most `max_block_size` points. Leaves are emitted depth first, children in
/// octant-code order (bit 0 = x upper half, bit 1 = y, bit 2 = z).
pub fn octree_decompose(cloud: &PointCloud, max_block_size: usize) -> Result<OctreeBlocks> {
    if max_block_size == 0 {
        return Err(invalid("max_block_size must be at least 1"));
    }
    let flat = cloud.as_flat();
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in flat.chunks_exact(3) {
        for d in 0..3 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let side = (0..3).map(|d| hi[d] - lo[d]).fold(0.0_f64, f64::max);
    let mut out = OctreeBlocks { blocks: Vec::new(), max_block_size, oversized_leaves: 0 };
    let all: Vec<usize> = (0..cloud.len()).collect();
    split(flat, all, lo, side, 0, &mut out);
    if out.oversized_leaves > 0 {
        warn!("octree: {} leaves exceed {} points at depth cap", out.oversized_leaves, max_block_size);
    }
    Ok(out)
}

fn split(flat: &[f64], indices: Vec<usize>, origin: [f64; 3], side: f64, depth: usize, out: &mut OctreeBlocks) {
    if indices.len() <= out.max_block_size || depth >= MAX_OCTREE_DEPTH {
        if indices.len() > out.max_block_size {
            out.oversized_leaves += 1;
        }
        out.blocks.push(OctreeBlock { indices, origin, side });
        return;
    }
    let half = side / 2.0;
    let mid = [origin[0] + half, origin[1] + half, origin[2] + half];
    let mut children: [Vec<usize>; 8] = Default::default();
    for i in indices {
        let p = &flat[3 * i..3 * i + 3];
        let code = (p[0] >= mid[0]) as usize | ((p[1] >= mid[1]) as usize) << 1 | ((p[2] >= mid[2]) as usize) << 2;
        children[code].push(i);
    }
    for (code, child) in children.into_iter().enumerate() {
        if child.is_empty() {
            continue;
        }
        let o = [
            if code & 1 != 0 { mid[0] } else { origin[0] },
            if code & 2 != 0 { mid[1] } else { origin[1] },
            if code & 4 != 0 { mid[2] } else { origin[2] },
        ];
        split(flat, child, o, half, depth + 1, out);
    }
}
