//! Ordinary least squares with an intercept.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Penalty used when the design is rank deficient.
pub const RIDGE_FALLBACK_PENALTY: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OlsModel {
    intercept: f64,
    coefficients: Vec<f64>,
    pub(crate) ridge_fallback: bool,
}

impl OlsModel {
    /// `cols` are the included columns (column-major), all of length n.
    pub fn fit(cols: &[Vec<f64>], y: &[f64]) -> Result<Self> {
        let n = y.len();
        let q = cols.len();
        if n == 0 {
            return Err(Error::validation("cannot fit OLS on zero rows"));
        }
        let y_mean = y.iter().sum::<f64>() / n as f64;
        let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
        let x = DMatrix::from_fn(n, q, |i, j| cols[j][i] - means[j]);
        let yc = DVector::from_iterator(n, y.iter().map(|v| v - y_mean));

        let (beta, ridge_fallback) = match solve_qr(&x, &yc) {
            Some(b) => (b, false),
            None => (solve_ridge(&x, &yc)?, true),
        };
        let coefficients: Vec<f64> = beta.iter().copied().collect();
        let intercept = y_mean - coefficients.iter().zip(&means).map(|(b, m)| b * m).sum::<f64>();
        Ok(OlsModel {
            intercept,
            coefficients,
            ridge_fallback,
        })
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub(crate) fn predict(&self, cols: &[&[f64]], rows: &[usize]) -> Vec<f64> {
        rows.iter()
            .map(|&i| {
                self.intercept
                    + self
                        .coefficients
                        .iter()
                        .zip(cols)
                        .map(|(b, c)| b * c[i])
                        .sum::<f64>()
            })
            .collect()
    }
}

fn solve_qr(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let (n, q) = x.shape();
    if n < q {
        return None;
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let max_diag = (0..q).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    let tol = max_diag * (n.max(q) as f64) * f64::EPSILON * 1e3;
    if max_diag == 0.0 || (0..q).any(|i| r[(i, i)].abs() <= tol) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
}

fn solve_ridge(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let (n, q) = x.shape();
    // penalty applies to the mean-squared-error objective
    let gram = x.transpose() * x + DMatrix::identity(q, q) * (RIDGE_FALLBACK_PENALTY * n as f64);
    let rhs = x.transpose() * y;
    gram.cholesky()
        .map(|c| c.solve(&rhs))
        .ok_or_else(|| Error::validation("ridge fallback failed: design matrix has zero variance columns"))
}
