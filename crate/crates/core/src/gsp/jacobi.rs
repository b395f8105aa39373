use ndarray::Array2;

use super::check_symmetric;
use crate::error::{Error, Result};

pub const MAX_SWEEPS: usize = 100;

/// Eigenpairs sorted by ascending eigenvalue; `vectors` holds them as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Sweeps over all (p, q) pairs, annihilating each off-diagonal entry with a
/// plane rotation, until the largest off-diagonal magnitude drops below `tol`.
/// Each eigenvector is signed so its first non-negligible component is
/// positive.
pub fn jacobi_eigen(a: &Array2<f64>, tol: f64) -> Result<Eigen> {
    check_symmetric(a)?;
    let n = a.nrows();
    // Row-major working copies.
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(m[p * n + q].abs());
            }
        }
        if off < tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // Columns p and q, then mirror into rows.
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = m[r * n + p];
                    let arq = m[r * n + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    m[r * n + p] = np;
                    m[r * n + q] = nq;
                    m[p * n + r] = np;
                    m[q * n + r] = nq;
                }
                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::Numerical(format!("Jacobi did not converge in {MAX_SWEEPS} sweeps")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].total_cmp(&m[j * n + j]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let mut vectors = Array2::zeros((n, n));
    for (col, &src) in order.iter().enumerate() {
        let first = (0..n).map(|r| v[r * n + src]).find(|x| x.abs() > 1e-12).unwrap_or(1.0);
        let sign = if first < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vectors[[r, col]] = sign * v[r * n + src];
        }
    }
    Ok(Eigen { values, vectors })
}
