//! Dense row-major matrices and a Householder QR least-squares solver.

use serde::{Deserialize, Serialize};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds a matrix from a flat row-major buffer. Panics if the length does not match.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols, "buffer length must be rows * cols");
        Self { rows, cols, data }
    }

    /// Builds a matrix from equal-length rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// New matrix holding the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix::from_row_major(indices.len(), self.cols, data)
    }
}

/// Result of a Householder QR factorization, kept in compact form.
#[derive(Debug, Clone)]
pub struct Qr {
    /// Upper triangle holds R; below the diagonal, the Householder vectors (minus their leading 1).
    packed: Matrix,
    /// Scalar factors `tau` of the reflectors `I - tau v vᵀ`.
    tau: Vec<f64>,
    /// Diagonal of R.
    diag: Vec<f64>,
}

impl Qr {
    /// Factor `a` (m × n, m ≥ n) as Q·R without pivoting.
    pub fn new(a: &Matrix) -> Self {
        let (m, n) = (a.rows(), a.cols());
        assert!(m >= n, "QR needs at least as many rows as columns");
        let mut qr = a.clone();
        let mut tau = vec![0.0; n];
        let mut diag = vec![0.0; n];

        for k in 0..n {
            let norm = (k..m).map(|i| qr.get(i, k).powi(2)).sum::<f64>().sqrt();
            if norm == 0.0 {
                diag[k] = 0.0;
                continue;
            }
            let alpha = if qr.get(k, k) > 0.0 { -norm } else { norm };
            // v = x - alpha e1, scaled so v[0] = 1
            let v0 = qr.get(k, k) - alpha;
            for i in k + 1..m {
                let scaled = qr.get(i, k) / v0;
                qr.set(i, k, scaled);
            }
            tau[k] = -v0 / alpha;
            diag[k] = alpha;
            qr.set(k, k, alpha);

            for j in k + 1..n {
                let mut s = qr.get(k, j);
                for i in k + 1..m {
                    s += qr.get(i, k) * qr.get(i, j);
                }
                s *= tau[k];
                qr.set(k, j, qr.get(k, j) - s);
                for i in k + 1..m {
                    let updated = qr.get(i, j) - s * qr.get(i, k);
                    qr.set(i, j, updated);
                }
            }
        }
        Self {
            packed: qr,
            tau,
            diag,
        }
    }

    pub fn r_diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Ratio of the largest to smallest |R_ii|; infinite when a pivot vanishes.
    pub fn condition_estimate(&self) -> f64 {
        let max = self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let min = self.diag.iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Apply Qᵀ to `b` in place.
    fn apply_qt(&self, b: &mut [f64]) {
        let (m, n) = (self.packed.rows(), self.packed.cols());
        for k in 0..n {
            if self.tau[k] == 0.0 {
                continue;
            }
            let mut s = b[k];
            for i in k + 1..m {
                s += self.packed.get(i, k) * b[i];
            }
            s *= self.tau[k];
            b[k] -= s;
            for i in k + 1..m {
                b[i] -= s * self.packed.get(i, k);
            }
        }
    }

    /// Least-squares solution of `A x ≈ b` by back substitution on R.
    /// The caller is responsible for rejecting rank-deficient factors first.
    pub fn solve_least_squares(&self, b: &[f64]) -> Vec<f64> {
        let n = self.packed.cols();
        let mut qtb = b.to_vec();
        self.apply_qt(&mut qtb);
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let mut s = qtb[k];
            for j in k + 1..n {
                s -= self.packed.get(k, j) * x[j];
            }
            x[k] = s / self.diag[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_square_system() {
        let a = Matrix::from_rows(&[[2.0, 1.0], [1.0, 3.0]]);
        let x = Qr::new(&a).solve_least_squares(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-14);
        assert!((x[1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn overdetermined_line_fit() {
        // y = 1 + 2x through (0,1), (1,3), (2,5)
        let a = Matrix::from_rows(&[[1.0, 0.0], [1.0, 1.0], [1.0, 2.0]]);
        let x = Qr::new(&a).solve_least_squares(&[1.0, 3.0, 5.0]);
        assert!((x[0] - 1.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn duplicated_column_has_huge_condition() {
        let a = Matrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]);
        assert!(Qr::new(&a).condition_estimate() > 1e12);
    }

    #[test]
    fn select_rows_keeps_order() {
        let a = Matrix::from_rows(&[[1.0], [2.0], [3.0]]);
        assert_eq!(a.select_rows(&[2, 0]).as_slice(), &[3.0, 1.0]);
    }
}
