use std::f64::consts::PI;

/// Precomputed orthonormal DCT-II matrix for one length. `table[k * n + j]`
/// holds `alpha_k cos(pi (j + 1/2) k / n)`.
#[derive(Debug, Clone)]
pub struct DctPlan {
    n: usize,
    table: Vec<f64>,
}

impl DctPlan {
    pub fn new(n: usize) -> Self {
        let mut table = vec![0.0; n * n];
        let nf = n as f64;
        for k in 0..n {
            let alpha = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            for j in 0..n {
                table[k * n + j] = alpha * (PI * (j as f64 + 0.5) * k as f64 / nf).cos();
            }
        }
        Self { n, table }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// DCT-II. Panics if `x.len() != self.len()`.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "DCT length mismatch");
        self.table.chunks_exact(self.n).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
    }

    /// DCT-III, the inverse of [`DctPlan::forward`].
    pub fn inverse(&self, c: &[f64]) -> Vec<f64> {
        assert_eq!(c.len(), self.n, "DCT length mismatch");
        let mut out = vec![0.0; self.n];
        for (row, &ck) in self.table.chunks_exact(self.n).zip(c) {
            if ck == 0.0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(row) {
                *o += a * ck;
            }
        }
        out
    }
}

pub fn dct_forward(x: &[f64]) -> Vec<f64> {
    DctPlan::new(x.len()).forward(x)
}

pub fn dct_inverse(c: &[f64]) -> Vec<f64> {
    DctPlan::new(c.len()).inverse(c)
}
