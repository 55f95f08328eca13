//! Thomas algorithm for the per-line tridiagonal systems of the ADI sweeps.
//!
//! The ADI matrices (1 - Δt·δ²) are strictly diagonally dominant because
//! ε > 0 and Δt > 0, so elimination without pivoting is safe there; a zero
//! pivot check still guards misuse.

use crate::error::{Error, Result};

/// A tridiagonal system A·x = rhs with `lower`/`upper` of length n-1.
#[derive(Debug, Clone)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub rhs: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty tridiagonal system".into()));
        }
        if lower.len() != n - 1 || upper.len() != n - 1 || rhs.len() != n {
            return Err(Error::InvalidArgument(format!(
                "inconsistent band lengths: lower {}, diag {}, upper {}, rhs {}",
                lower.len(),
                n,
                upper.len(),
                rhs.len()
            )));
        }
        Ok(Self {
            lower,
            diag,
            upper,
            rhs,
        })
    }
}

/// Solve by the Thomas algorithm: O(n) forward elimination + back substitution.
pub fn solve_tridiagonal(sys: &TridiagonalSystem) -> Result<Vec<f64>> {
    let n = sys.diag.len();
    let mut x = sys.rhs.clone();
    let mut scratch = vec![0.0; n];
    thomas_in_place(&sys.lower, &sys.diag, &sys.upper, &mut x, &mut scratch)?;
    Ok(x)
}

/// In-place Thomas solve used by the sweep hot loops: `rhs` becomes the
/// solution, `scratch` must have length n.
#[inline]
pub fn thomas_in_place(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
) -> Result<()> {
    let n = diag.len();
    debug_assert_eq!(rhs.len(), n);
    debug_assert!(scratch.len() >= n);
    let scale = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs())).max(1.0);
    let tiny = 1e-14 * scale;

    let mut piv = diag[0];
    if piv.abs() <= tiny {
        return Err(Error::ZeroPivot { row: 0 });
    }
    rhs[0] /= piv;
    for i in 1..n {
        scratch[i] = upper[i - 1] / piv;
        piv = diag[i] - lower[i - 1] * scratch[i];
        if piv.abs() <= tiny {
            return Err(Error::ZeroPivot { row: i });
        }
        rhs[i] = (rhs[i] - lower[i - 1] * rhs[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
pub(crate) mod dense_oracle {
    //! Test-only dense Gaussian elimination with partial pivoting, kept
    //! independent of the Thomas path it cross-checks.

    pub fn solve_dense(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().cloned().collect();
        let mut x = b.to_vec();
        for col in 0..n {
            let piv_row = (col..n)
                .max_by(|&r, &s| m[r][col].abs().total_cmp(&m[s][col].abs()))
                .unwrap();
            m.swap(col, piv_row);
            x.swap(col, piv_row);
            let piv = m[col][col];
            assert!(piv.abs() > 0.0, "singular dense system");
            for row in col + 1..n {
                let f = m[row][col] / piv;
                if f != 0.0 {
                    for c in col..n {
                        m[row][c] -= f * m[col][c];
                    }
                    x[row] -= f * x[col];
                }
            }
        }
        for row in (0..n).rev() {
            let mut acc = x[row];
            for c in row + 1..n {
                acc -= m[row][c] * x[c];
            }
            x[row] = acc / m[row][row];
        }
        x
    }

    pub fn tridiag_as_dense(sys: &super::TridiagonalSystem) -> Vec<Vec<f64>> {
        let n = sys.diag.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = sys.diag[i];
            if i > 0 {
                m[i][i - 1] = sys.lower[i - 1];
            }
            if i + 1 < n {
                m[i][i + 1] = sys.upper[i];
            }
        }
        m
    }
}
