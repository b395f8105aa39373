use ndarray::Array2;

use super::{power_scale, Codec, CodecOutput, SideInfo};
use crate::channel::MetadataSpec;
use crate::cloud::{normalize, PointCloud};
use crate::error::{dims, invalid, Result};
use crate::gsp::DctPlan;

pub const CHUNK_LEN: usize = 64;
pub const MORTON_BITS: u32 = 10;

/// How many coefficients SoftCast may send.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SoftBudget {
    /// Fraction of the 3N coefficients, in (0, 1].
    Fraction(f64),
    /// Channel symbols, two coefficients each.
    Symbols(usize),
}

impl SoftBudget {
    /// Coefficients to keep for a cloud of `n` points.
    pub fn reals(self, n: usize) -> Result<usize> {
        let total = 3 * n;
        match self {
            SoftBudget::Fraction(f) if f > 0.0 && f <= 1.0 => Ok(((f * total as f64 - 1e-9).ceil() as usize).clamp(1, total)),
            SoftBudget::Fraction(f) => Err(invalid(format!("SoftCast fraction {f} outside (0, 1]"))),
            SoftBudget::Symbols(s) if s >= 3 => Ok((2 * s).min(total)),
            SoftBudget::Symbols(s) => Err(invalid(format!("SoftCast budget of {s} symbols is below 3"))),
        }
    }
}

/// Interleaves the bits of three coordinates in `[-1, 1]`, quantized to
/// [`MORTON_BITS`] bits each; x occupies the lowest bit of every triple.
pub fn morton_code(p: [f64; 3]) -> u32 {
    let levels = (1u32 << MORTON_BITS) as f64;
    let q = p.map(|v| (((v + 1.0) / 2.0 * levels).floor()).clamp(0.0, levels - 1.0) as u32);
    let mut code = 0u32;
    for bit in 0..MORTON_BITS {
        for (d, &qd) in q.iter().enumerate() {
            code |= ((qd >> bit) & 1) << (3 * bit + d as u32);
        }
    }
    code
}

/// Point indices in Z-order, ties to the lower index.
pub fn morton_order(cloud: &PointCloud) -> Vec<usize> {
    let codes: Vec<u32> = (0..cloud.len()).map(|i| morton_code(cloud.point(i))).collect();
    let mut order: Vec<usize> = (0..cloud.len()).collect();
    order.sort_by_key(|&i| (codes[i], i));
    order
}

/// DCT of each coordinate along the Z-order, keeping the highest-energy
/// 64-coefficient chunks until the budget is filled. The keep map is side
/// information; dropped coefficients decode as zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftCast {
    pub budget: SoftBudget,
    pub avg_power: f64,
}

impl SoftCast {
    pub fn new(budget: SoftBudget) -> Self {
        Self { budget, avg_power: 1.0 }
    }

    /// Flat coefficient indices (`axis * n + k`) kept for this spectrum, in
    /// transmission order.
    pub fn select_coefficients(coeffs: &[f64], n: usize, budget_reals: usize) -> Vec<usize> {
        let mut chunks: Vec<(usize, usize, f64)> = Vec::new();
        for axis in 0..3 {
            let mut start = 0;
            while start < n {
                let end = (start + CHUNK_LEN).min(n);
                let energy = coeffs[axis * n + start..axis * n + end].iter().map(|c| c * c).sum();
                chunks.push((axis * n + start, axis * n + end, energy));
                start = end;
            }
        }
        chunks.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
        let mut kept = Vec::with_capacity(budget_reals);
        for (start, end, _) in chunks {
            let room = budget_reals - kept.len();
            if room == 0 {
                break;
            }
            kept.extend(start..end.min(start + room));
        }
        kept
    }
}

impl Codec for SoftCast {
    fn name(&self) -> String {
        match self.budget {
            SoftBudget::Fraction(f) => format!("softcast:{f}"),
            SoftBudget::Symbols(s) => format!("softcast-symbols:{s}"),
        }
    }

    fn encode(&self, cloud: &PointCloud) -> Result<CodecOutput> {
        let n = cloud.len();
        let budget = self.budget.reals(n)?;
        let (norm, affine) = normalize(cloud)?;
        let order = morton_order(&norm);
        let plan = DctPlan::new(n);
        let mut coeffs = Vec::with_capacity(3 * n);
        for axis in 0..3 {
            let signal: Vec<f64> = order.iter().map(|&i| norm.points()[[i, axis]]).collect();
            coeffs.extend(plan.forward(&signal));
        }
        let kept = Self::select_coefficients(&coeffs, n, budget);
        let mut data: Vec<f64> = kept.iter().map(|&k| coeffs[k]).collect();
        let s = power_scale(&data, self.avg_power);
        data.iter_mut().for_each(|v| *v *= s);
        Ok(CodecOutput {
            data_reals: data,
            metadata: MetadataSpec::NONE,
            side_info: SideInfo::SoftCast { affine, power_scale: s, order, kept },
        })
    }

    fn decode(&self, output: &CodecOutput, received: &[f64]) -> Result<PointCloud> {
        let SideInfo::SoftCast { affine, power_scale, order, kept } = &output.side_info else {
            return Err(invalid("side information does not belong to SoftCast"));
        };
        if received.len() != kept.len() {
            return Err(dims(format!("received {} reals, expected {}", received.len(), kept.len())));
        }
        let n = order.len();
        let mut coeffs = vec![0.0; 3 * n];
        for (&k, &v) in kept.iter().zip(received) {
            coeffs[k] = v / power_scale;
        }
        let plan = DctPlan::new(n);
        let mut pts = Array2::zeros((n, 3));
        for axis in 0..3 {
            let signal = plan.inverse(&coeffs[axis * n..(axis + 1) * n]);
            for (pos, &i) in order.iter().enumerate() {
                pts[[i, axis]] = signal[pos];
            }
        }
        affine.invert(&PointCloud::new(pts, "softcast")?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn morton_interleaving() {
        assert_eq!(morton_code([-1.0, -1.0, -1.0]), 0);
        // Smallest positive step in x only sets bit 0.
        let step = 2.0 / 1024.0;
        assert_eq!(morton_code([-1.0 + step, -1.0, -1.0]), 1);
        assert_eq!(morton_code([-1.0, -1.0 + step, -1.0]), 2);
        assert_eq!(morton_code([-1.0, -1.0, -1.0 + step]), 4);
        assert_eq!(morton_code([1.0, 1.0, 1.0]), (1 << 30) - 1);
    }

    #[test]
    fn budgets() {
        assert_eq!(SoftBudget::Fraction(0.25).reals(512).unwrap(), 384);
        assert_eq!(SoftBudget::Fraction(1.0).reals(10).unwrap(), 30);
        assert_eq!(SoftBudget::Symbols(100).reals(10).unwrap(), 30);
        assert!(SoftBudget::Symbols(2).reals(10).is_err());
        assert!(SoftBudget::Fraction(0.0).reals(10).is_err());
    }

    #[test]
    fn chunk_selection_prefers_energy_and_fills_budget() {
        let n = 130;
        let mut c = vec![0.0; 3 * n];
        c[n + 70] = 5.0; // axis 1, chunk [64, 128)
        c[2] = 1.0; // axis 0, chunk [0, 64)
        let kept = SoftCast::select_coefficients(&c, n, 70);
        assert_eq!(kept.len(), 70);
        assert_eq!(kept[0], n + 64);
        assert_eq!(kept[64], 0);
        assert_eq!(kept[69], 5);
    }
}
