//! Polynomial root finding via balanced colleague-matrix eigenvalues.
//!
//! Polynomials arrive in the Chebyshev basis, `p(x) = sum b_k T_k(x)`.
//! Rooting in that basis directly (Good's colleague matrix) avoids the
//! precision loss of converting to monomial coefficients, whose size grows
//! combinatorially with the degree.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Roots of `p(x) = b[0] T_0(x) + b[1] T_1(x) + ... + b[n] T_n(x)`.
pub(crate) fn chebyshev_roots(b: &[f64]) -> Result<Vec<Complex64>> {
    let max_mag = b.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if max_mag == 0.0 {
        return Err(Error::InvalidInput("zero polynomial has no roots".into()));
    }
    let mut n = b.len() - 1;
    while n > 0 && b[n].abs() < 1e-14 * max_mag {
        n -= 1;
    }

    match n {
        0 => Ok(Vec::new()),
        // T_1 = x
        1 => Ok(vec![Complex64::new(-b[0] / b[1], 0.0)]),
        _ => {
            // Multiplication-by-x matrix in the Chebyshev basis, with T_n
            // eliminated through p(x) = 0 in the last column.
            let mut colleague = DMatrix::<f64>::zeros(n, n);
            colleague[(1, 0)] = 1.0;
            for j in 1..n - 1 {
                colleague[(j - 1, j)] = 0.5;
                colleague[(j + 1, j)] = 0.5;
            }
            colleague[(n - 2, n - 1)] += 0.5;
            for k in 0..n {
                colleague[(k, n - 1)] -= b[k] / (2.0 * b[n]);
            }
            balance(&mut colleague);
            let schur = nalgebra::linalg::Schur::try_new(colleague, 1e-14, 20_000)
                .ok_or_else(|| Error::Eigen("colleague Schur iteration did not converge".into()))?;
            Ok(schur.complex_eigenvalues().iter().copied().collect())
        }
    }
}

/// Parlett-Reinsch balancing with radix-2 scaling: makes row and column
/// norms comparable, which improves eigenvalue accuracy for matrices with
/// wide entry ranges.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut col: f64 = (0..n).filter(|&j| j != i).map(|j| m[(j, i)].abs()).sum();
            let mut row: f64 = (0..n).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let total = col + row;
            let mut factor = 1.0;
            while col < row / 2.0 {
                col *= 2.0;
                row /= 2.0;
                factor *= 2.0;
            }
            while col >= row * 2.0 {
                col /= 2.0;
                row *= 2.0;
                factor /= 2.0;
            }
            if factor != 1.0 && (col + row) < 0.95 * total {
                converged = false;
                for j in 0..n {
                    m[(i, j)] /= factor;
                }
                for j in 0..n {
                    m[(j, i)] *= factor;
                }
            }
        }
        if converged {
            break;
        }
    }
}
