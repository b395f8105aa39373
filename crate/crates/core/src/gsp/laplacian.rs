use ndarray::Array2;

use super::SymMatrix;
use crate::cloud::Graph;
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaplacianKind {
    /// `L = D - W`
    Combinatorial,
    /// `L_sym = I - D^{-1/2} W D^{-1/2}`
    SymNormalized,
    /// `L_sym` together with the degrees, from which the random-walk
    /// Laplacian `D^{-1} L = D^{-1/2} L_sym D^{1/2}` and its eigenvectors
    /// `D^{-1/2} U` are recovered.
    RandomWalk,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    pub matrix: SymMatrix,
    pub degrees: Vec<f64>,
    pub kind: LaplacianKind,
}

pub fn build_laplacian(g: &Graph, kind: LaplacianKind) -> Result<Laplacian> {
    let n = g.n_vertices();
    let degrees: Vec<f64> = (0..n).map(|i| g.degree(i) as f64).collect();
    let mut l = Array2::zeros((n, n));
    match kind {
        LaplacianKind::Combinatorial => {
            for i in 0..n {
                l[[i, i]] = degrees[i];
                for &j in g.neighbors(i) {
                    l[[i, j]] = -1.0;
                }
            }
        }
        LaplacianKind::SymNormalized | LaplacianKind::RandomWalk => {
            if let Some(i) = degrees.iter().position(|&d| d == 0.0) {
                return Err(invalid(format!("vertex {i} is isolated; normalized Laplacian undefined")));
            }
            let inv_sqrt: Vec<f64> = degrees.iter().map(|d| 1.0 / d.sqrt()).collect();
            for i in 0..n {
                l[[i, i]] = 1.0;
                for &j in g.neighbors(i) {
                    l[[i, j]] = -inv_sqrt[i] * inv_sqrt[j];
                }
            }
        }
    }
    Ok(Laplacian { matrix: SymMatrix::new(l)?, degrees, kind })
}
