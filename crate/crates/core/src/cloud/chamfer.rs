use ndarray::Array2;

use super::PointCloud;
use crate::error::{invalid, Result};

/// The two directed mean nearest-neighbor distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChamferTerms {
    /// Mean over the reference set of the distance to the closest reconstructed point.
    pub forward: f64,
    /// Mean over the reconstructed set of the distance to the closest reference point.
    pub backward: f64,
}

impl ChamferTerms {
    pub fn value(&self) -> f64 {
        self.forward.max(self.backward)
    }
}

struct Matches {
    /// For each reference point, (closest reconstructed index, distance).
    fwd: Vec<(usize, f64)>,
    /// For each reconstructed point, (closest reference index, distance).
    bwd: Vec<(usize, f64)>,
}

/// For every query point, the nearest reference point (lowest index on ties)
/// and its squared distance. References are scanned outward in x order and
/// the scan stops once the x gap alone exceeds the best distance.
fn nearest_sq(queries: &[f64], refs: &[f64]) -> Vec<(usize, f64)> {
    let mut sorted: Vec<(f64, f64, f64, usize)> =
        refs.chunks_exact(3).enumerate().map(|(j, q)| (q[0], q[1], q[2], j)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.3.cmp(&b.3)));
    queries
        .chunks_exact(3)
        .map(|p| {
            let (px, py, pz) = (p[0], p[1], p[2]);
            let start = sorted.partition_point(|r| r.0 < px);
            let mut best = (usize::MAX, f64::INFINITY);
            let visit = |r: &(f64, f64, f64, usize), best: &mut (usize, f64)| {
                let (dx, dy, dz) = (px - r.0, py - r.1, pz - r.2);
                let d = dx * dx + dy * dy + dz * dz;
                if d < best.1 || (d == best.1 && r.3 < best.0) {
                    *best = (r.3, d);
                }
            };
            for r in &sorted[start..] {
                let dx = r.0 - px;
                if dx * dx > best.1 {
                    break;
                }
                visit(r, &mut best);
            }
            for r in sorted[..start].iter().rev() {
                let dx = px - r.0;
                if dx * dx > best.1 {
                    break;
                }
                visit(r, &mut best);
            }
            best
        })
        .collect()
}

fn nearest(a: &[f64], b: &[f64]) -> (Vec<(usize, f64)>, Vec<(usize, f64)>) {
    let mut fwd = nearest_sq(a, b);
    let mut bwd = nearest_sq(b, a);
    for m in fwd.iter_mut().chain(bwd.iter_mut()) {
        m.1 = m.1.sqrt();
    }
    (fwd, bwd)
}

fn matches(s: &PointCloud, s_hat: &PointCloud) -> Result<Matches> {
    if s.is_empty() || s_hat.is_empty() {
        return Err(invalid("chamfer distance needs nonempty clouds"));
    }
    let (fwd, bwd) = nearest(s.as_flat(), s_hat.as_flat());
    Ok(Matches { fwd, bwd })
}

fn terms(m: &Matches) -> ChamferTerms {
    let mean = |v: &[(usize, f64)]| v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64;
    ChamferTerms { forward: mean(&m.fwd), backward: mean(&m.bwd) }
}

/// Augmented Chamfer distance: the larger of the two directed mean
/// nearest-neighbor Euclidean distances.
pub fn chamfer_distance(s: &PointCloud, s_hat: &PointCloud) -> Result<f64> {
    Ok(terms(&matches(s, s_hat)?).value())
}

/// Gradient of [`chamfer_distance`] with respect to the points of `s_hat`.
pub fn chamfer_gradient(s: &PointCloud, s_hat: &PointCloud) -> Result<Array2<f64>> {
    Ok(chamfer_with_gradient(s, s_hat)?.1)
}

/// Distance terms and gradient with respect to `s_hat` in one pass.
///
/// Only the larger directed term contributes; at an exact tie both branch
/// gradients are averaged. Where a nearest pair coincides the unit direction
/// is taken as zero.
pub fn chamfer_with_gradient(s: &PointCloud, s_hat: &PointCloud) -> Result<(ChamferTerms, Array2<f64>)> {
    let m = matches(s, s_hat)?;
    let t = terms(&m);
    let (wf, wb) = if t.forward > t.backward {
        (1.0, 0.0)
    } else if t.backward > t.forward {
        (0.0, 1.0)
    } else {
        (0.5, 0.5)
    };
    let a = s.as_flat();
    let b = s_hat.as_flat();
    let mut grad = Array2::zeros((s_hat.len(), 3));
    let g = grad.as_slice_mut().expect("standard layout");
    let mut push = |j: usize, i: usize, dist: f64, w: f64| {
        if dist > 0.0 && w != 0.0 {
            for d in 0..3 {
                g[3 * j + d] += w * (b[3 * j + d] - a[3 * i + d]) / dist;
            }
        }
    };
    if wf != 0.0 {
        let w = wf / s.len() as f64;
        for (i, &(j, dist)) in m.fwd.iter().enumerate() {
            push(j, i, dist, w);
        }
    }
    if wb != 0.0 {
        let w = wb / s_hat.len() as f64;
        for (j, &(i, dist)) in m.bwd.iter().enumerate() {
            push(j, i, dist, w);
        }
    }
    Ok((t, grad))
}
