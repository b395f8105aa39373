//! Dense symmetric linear algebra and the transforms behind the HoloCast and
//! SoftCast baselines.

mod dct;
mod gft;
mod givens;
mod jacobi;
mod laplacian;

pub use dct::{dct_forward, dct_inverse, DctPlan};
pub use gft::{gft_forward, gft_inverse, GftBasis};
pub use givens::{givens_factorize, quantize_angle, quantize_angles, reconstruct_basis, GivensFactorization, Rotation};
pub use jacobi::{jacobi_eigen, Eigen, MAX_SWEEPS};
pub use laplacian::{build_laplacian, Laplacian, LaplacianKind};

use ndarray::Array2;

use crate::error::{invalid, Result};

/// Symmetric matrices are accepted up to this absolute asymmetry.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// A dense real symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    a: Array2<f64>,
}

impl SymMatrix {
    /// Checks shape, finiteness and symmetry, then stores the exactly
    /// symmetrized matrix.
    pub fn new(a: Array2<f64>) -> Result<Self> {
        check_symmetric(&a)?;
        let sym = (&a + &a.t()) * 0.5;
        Ok(Self { a: sym })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.a
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.a)
    }

    pub fn eigen(&self, tol: f64) -> Result<Eigen> {
        jacobi_eigen(&self.a, tol)
    }
}

pub(crate) fn check_symmetric(a: &Array2<f64>) -> Result<()> {
    let (r, c) = a.dim();
    if r != c {
        return Err(invalid(format!("matrix must be square, got {r}x{c}")));
    }
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    for i in 0..r {
        for j in (i + 1)..r {
            if (a[[i, j]] - a[[j, i]]).abs() > SYMMETRY_TOL {
                return Err(invalid(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

pub fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}
