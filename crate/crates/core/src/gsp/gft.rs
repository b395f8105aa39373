use ndarray::Array2;

use super::{Laplacian, LaplacianKind};
use crate::error::{dims, Result};

/// Graph Fourier basis: Laplacian eigenvectors as columns, eigenvalues
/// ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct GftBasis {
    pub eigenvalues: Vec<f64>,
    pub basis: Array2<f64>,
    pub kind: LaplacianKind,
    degrees: Vec<f64>,
}

impl GftBasis {
    pub fn from_laplacian(lap: &Laplacian, tol: f64) -> Result<Self> {
        let e = lap.matrix.eigen(tol)?;
        Ok(Self { eigenvalues: e.values, basis: e.vectors, kind: lap.kind, degrees: lap.degrees.clone() })
    }

    /// Wraps an explicit orthonormal basis (e.g. one rebuilt from quantized
    /// Givens angles).
    pub fn from_matrix(basis: Array2<f64>, eigenvalues: Vec<f64>, kind: LaplacianKind) -> Self {
        let n = basis.nrows();
        Self { eigenvalues, basis, kind, degrees: vec![1.0; n] }
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    /// Eigenvectors of the random-walk Laplacian `D^{-1} L`, i.e.
    /// `D^{-1/2} U`. Not orthogonal in general.
    pub fn random_walk_eigenvectors(&self) -> Array2<f64> {
        let mut out = self.basis.clone();
        for (i, mut row) in out.rows_mut().into_iter().enumerate() {
            row /= self.degrees[i].sqrt();
        }
        out
    }

    /// Flat metadata layout: `n`, then the basis entries row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        std::iter::once(self.n() as f64).chain(self.basis.iter().copied()).collect()
    }

    /// Number of analog reals the basis costs when sent as metadata.
    pub fn metadata_reals(&self) -> usize {
        self.n() * self.n()
    }
}

/// Spectral coefficients `Uᵀ x` of an n×c signal.
pub fn gft_forward(basis: &GftBasis, signal: &Array2<f64>) -> Result<Array2<f64>> {
    if signal.nrows() != basis.n() {
        return Err(dims(format!("signal has {} rows, basis order is {}", signal.nrows(), basis.n())));
    }
    Ok(basis.basis.t().dot(signal))
}

/// Inverse transform `U c`.
pub fn gft_inverse(basis: &GftBasis, coefficients: &Array2<f64>) -> Result<Array2<f64>> {
    if coefficients.nrows() != basis.n() {
        return Err(dims(format!("coefficients have {} rows, basis order is {}", coefficients.nrows(), basis.n())));
    }
    Ok(basis.basis.dot(coefficients))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cloud::Graph;
    use crate::gsp::build_laplacian;

    #[test]
    fn constant_signal_is_dc_only() {
        let g = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let lap = build_laplacian(&g, LaplacianKind::Combinatorial).unwrap();
        let b = GftBasis::from_laplacian(&lap, 1e-14).unwrap();
        let x = Array2::from_elem((4, 1), 2.5);
        let c = gft_forward(&b, &x).unwrap();
        assert!((c[[0, 0]] - 5.0).abs() < 1e-12);
        assert!(c.iter().skip(1).all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn random_walk_vectors_are_eigenvectors() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 2)]).unwrap();
        let lap = build_laplacian(&g, LaplacianKind::RandomWalk).unwrap();
        let b = GftBasis::from_laplacian(&lap, 1e-14).unwrap();
        let rw = b.random_walk_eigenvectors();
        let w = g.adjacency_dense();
        for k in 0..5 {
            for i in 0..5 {
                // (D^{-1} L v)_i = v_i - (1/d_i) sum_j w_ij v_j
                let lv = rw[[i, k]] - (0..5).map(|j| w[[i, j]] * rw[[j, k]]).sum::<f64>() / lap.degrees[i];
                assert!((lv - b.eigenvalues[k] * rw[[i, k]]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let b = GftBasis::from_matrix(Array2::eye(3), vec![0.0; 3], LaplacianKind::SymNormalized);
        assert!(gft_forward(&b, &Array2::zeros((2, 3))).is_err());
        assert!(gft_inverse(&b, &Array2::zeros((4, 1))).is_err());
    }
}
