//! Dense least squares via modified Gram-Schmidt QR with
//! reorthogonalization. Columns are processed left to right, so a column
//! that is (numerically) a combination of earlier ones is reported by index.

/// Relative norm below which a column counts as dependent on earlier ones.
pub const COLLINEARITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub residuals: Vec<f64>,
    pub sse: f64,
}

/// Column-major `n x p` design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub n_rows: usize,
    pub columns: Vec<Vec<f64>>,
}

impl Matrix {
    pub fn from_columns(n_rows: usize, columns: Vec<Vec<f64>>) -> Self {
        debug_assert!(columns.iter().all(|c| c.len() == n_rows));
        Matrix { n_rows, columns }
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn without_column(&self, k: usize) -> Matrix {
        let mut columns = self.columns.clone();
        columns.remove(k);
        Matrix {
            n_rows: self.n_rows,
            columns,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `min ||X b - y||`. Returns the indices of dependent columns on failure.
pub fn least_squares(x: &Matrix, y: &[f64]) -> Result<LeastSquares, Vec<usize>> {
    let n = x.n_rows;
    let p = x.n_cols();
    assert_eq!(y.len(), n, "response length must match matrix rows");
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(p);
    let mut r = vec![vec![0.0; p]; p];
    let mut dependent = Vec::new();
    for (k, col) in x.columns.iter().enumerate() {
        let norm0 = dot(col, col).sqrt();
        let mut v = col.clone();
        // two passes of MGS keep Q orthogonal to working precision
        for _ in 0..2 {
            for (i, qi) in q.iter().enumerate() {
                let c = dot(qi, &v);
                r[i][k] += c;
                for (vj, qj) in v.iter_mut().zip(qi) {
                    *vj -= c * qj;
                }
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm0 == 0.0 || norm <= COLLINEARITY_TOL * norm0 {
            dependent.push(k);
            // keep indices aligned so later columns still report correctly
            q.push(vec![0.0; n]);
            continue;
        }
        r[k][k] = norm;
        v.iter_mut().for_each(|vj| *vj /= norm);
        q.push(v);
    }
    if !dependent.is_empty() {
        return Err(dependent);
    }
    let qty: Vec<f64> = q.iter().map(|qi| dot(qi, y)).collect();
    let mut b = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = ((i + 1)..p).map(|j| r[i][j] * b[j]).sum();
        b[i] = (qty[i] - s) / r[i][i];
    }
    let fitted: Vec<f64> = (0..n)
        .map(|row| x.columns.iter().zip(&b).map(|(c, bj)| c[row] * bj).sum())
        .collect();
    let residuals: Vec<f64> = y.iter().zip(&fitted).map(|(yi, fi)| yi - fi).collect();
    let sse = dot(&residuals, &residuals);
    Ok(LeastSquares {
        coefficients: b,
        fitted,
        residuals,
        sse,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = Matrix::from_columns(4, vec![vec![1.0; 4], vec![0.0, 1.0, 2.0, 3.0]]);
        let y = [1.0, 3.0, 5.0, 7.0];
        let ls = least_squares(&x, &y).unwrap();
        assert!((ls.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((ls.coefficients[1] - 2.0).abs() < 1e-12);
        assert!(ls.sse < 1e-20);
    }

    #[test]
    fn reports_dependent_columns() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        let b: Vec<f64> = a.iter().map(|v| 2.0 * v).collect();
        let x = Matrix::from_columns(4, vec![vec![1.0; 4], a, b, vec![0.0; 4]]);
        assert_eq!(least_squares(&x, &[1.0, 0.0, 1.0, 0.0]).unwrap_err(), vec![2, 3]);
    }
}
