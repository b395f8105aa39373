use std::f64::consts::PI;

use ndarray::Array2;

use crate::error::{invalid, Result};

/// Orthogonality tolerance accepted by [`givens_factorize`] (Frobenius norm of
/// `QᵀQ - I`).
pub const ORTHO_TOL: f64 = 1e-6;

/// Plane rotation acting on rows `i` and `j` by angle `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    pub i: usize,
    pub j: usize,
    pub theta: f64,
}

/// `Q = G_1ᵀ G_2ᵀ ... G_Kᵀ diag(signs)`, with one rotation per sub-diagonal
/// entry, eliminated column by column.
#[derive(Debug, Clone, PartialEq)]
pub struct GivensFactorization {
    pub n: usize,
    pub rotations: Vec<Rotation>,
    pub signs: Vec<f64>,
    /// `None` for exact angles, otherwise the quantizer bit depth.
    pub bit_depth: Option<u32>,
}

impl GivensFactorization {
    pub fn angle_count(&self) -> usize {
        self.rotations.len()
    }

    /// Digital metadata cost of the quantized angles. Zero when unquantized.
    pub fn metadata_bits(&self) -> usize {
        self.bit_depth.map_or(0, |b| self.rotations.len() * b as usize)
    }

    /// Flat layout: `n`, angle count, then `(i, j, theta)` triples, then the
    /// diagonal signs.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = vec![self.n as f64, self.rotations.len() as f64];
        for r in &self.rotations {
            out.extend([r.i as f64, r.j as f64, r.theta]);
        }
        out.extend(&self.signs);
        out
    }
}

fn rotate_rows(m: &mut Array2<f64>, i: usize, j: usize, c: f64, s: f64) {
    for k in 0..m.ncols() {
        let a = m[[i, k]];
        let b = m[[j, k]];
        m[[i, k]] = c * a + s * b;
        m[[j, k]] = -s * a + c * b;
    }
}

fn wrap_angle(theta: f64) -> f64 {
    // atan2 lands in (-pi, pi]; pi and -pi describe the same rotation.
    if theta >= PI {
        theta - 2.0 * PI
    } else {
        theta
    }
}

pub fn givens_factorize(q: &Array2<f64>) -> Result<GivensFactorization> {
    let (n, c) = q.dim();
    if n != c {
        return Err(invalid(format!("matrix must be square, got {n}x{c}")));
    }
    let gram = q.t().dot(q) - Array2::<f64>::eye(n);
    if super::frobenius(&gram) > ORTHO_TOL {
        return Err(invalid("matrix is not orthogonal"));
    }
    let mut r = q.clone();
    let mut rotations = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for col in 0..n.saturating_sub(1) {
        for row in (col + 1)..n {
            let theta = wrap_angle(r[[row, col]].atan2(r[[col, col]]));
            let (s, c) = theta.sin_cos();
            rotate_rows(&mut r, col, row, c, s);
            r[[row, col]] = 0.0;
            rotations.push(Rotation { i: col, j: row, theta });
        }
    }
    let signs = (0..n).map(|i| if r[[i, i]] < 0.0 { -1.0 } else { 1.0 }).collect();
    Ok(GivensFactorization { n, rotations, signs, bit_depth: None })
}

/// Uniform midrise quantizer on `[-pi, pi)` with `2^bits` levels.
pub fn quantize_angle(theta: f64, bits: u32) -> f64 {
    let levels = 1u64 << bits;
    let step = 2.0 * PI / levels as f64;
    let idx = ((theta + PI) / step).floor().clamp(0.0, (levels - 1) as f64);
    -PI + (idx + 0.5) * step
}

pub fn quantize_angles(f: &GivensFactorization, bits: u32) -> Result<GivensFactorization> {
    if !(2..=16).contains(&bits) {
        return Err(invalid(format!("bit depth {bits} outside [2, 16]")));
    }
    let rotations = f
        .rotations
        .iter()
        .map(|r| Rotation { theta: quantize_angle(r.theta, bits), ..*r })
        .collect();
    Ok(GivensFactorization { rotations, bit_depth: Some(bits), ..f.clone() })
}

/// Rebuilds the orthogonal matrix described by `f`.
pub fn reconstruct_basis(f: &GivensFactorization) -> Array2<f64> {
    let mut m = Array2::from_diag(&ndarray::Array1::from(f.signs.clone()));
    for rot in f.rotations.iter().rev() {
        let (s, c) = rot.theta.sin_cos();
        // Apply Gᵀ: the inverse rotation on rows (i, j).
        rotate_rows(&mut m, rot.i, rot.j, c, -s);
    }
    m
}
