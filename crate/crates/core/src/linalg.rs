//! Minimal dense linear algebra for the interior-point solver: a flat
//! row-major matrix, null-space extraction, Cholesky solves, and rank.
//! Problem sizes stay in the hundreds, so simple O(n^3) routines suffice.

#[derive(Debug, Clone)]
pub(crate) struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            a: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.a[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.a[r * self.cols..(r + 1) * self.cols]
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T y`.
    pub fn tr_matvec(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &w) in y.iter().enumerate() {
            if w != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(r)) {
                    *o += w * a;
                }
            }
        }
        out
    }

    /// `self * other`.
    pub fn matmul(&self, other: &Mat) -> Mat {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let v = self.at(r, k);
                if v == 0.0 {
                    continue;
                }
                let orow = r * out.cols;
                let krow = k * other.cols;
                for c in 0..other.cols {
                    out.a[orow + c] += v * other.a[krow + c];
                }
            }
        }
        out
    }

    /// `self^T diag(w) self`, a symmetric `cols x cols` product.
    pub fn gram_weighted(&self, w: &[f64]) -> Mat {
        debug_assert_eq!(w.len(), self.rows);
        let mut out = Mat::zeros(self.cols, self.cols);
        for (r, &wr) in w.iter().enumerate() {
            if wr == 0.0 {
                continue;
            }
            let row = self.row(r);
            for i in 0..self.cols {
                let vi = wr * row[i];
                if vi == 0.0 {
                    continue;
                }
                let base = i * self.cols;
                for j in i..self.cols {
                    out.a[base + j] += vi * row[j];
                }
            }
        }
        // mirror upper to lower
        for i in 0..self.cols {
            for j in 0..i {
                out.a[i * self.cols + j] = out.a[j * self.cols + i];
            }
        }
        out
    }
}

/// Numeric rank by Gaussian elimination with partial pivoting.
pub(crate) fn rank(rows: &[Vec<f64>], tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let ncols = m[0].len();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == m.len() {
            break;
        }
        let pivot = (rank..m.len())
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(rank, pivot);
        let inv = 1.0 / m[rank][col];
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0.0 {
                let f = m[r][col] * inv;
                for c in col..ncols {
                    let sub = f * m[rank][c];
                    m[r][c] -= sub;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Orthonormal basis of the null space of the stacked constraint rows,
/// found by reduced row echelon form and Gram-Schmidt.
pub(crate) fn null_space(rows: &[Vec<f64>], ncols: usize, tol: f64) -> Vec<Vec<f64>> {
    let mut m: Vec<Vec<f64>> = rows.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        if r == m.len() {
            break;
        }
        let pivot = (r..m.len())
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[pivot][col].abs() <= tol {
            continue;
        }
        m.swap(r, pivot);
        let inv = 1.0 / m[r][col];
        for c in col..ncols {
            m[r][c] *= inv;
        }
        for rr in 0..m.len() {
            if rr != r && m[rr][col] != 0.0 {
                let f = m[rr][col];
                for c in col..ncols {
                    let sub = f * m[r][c];
                    m[rr][c] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        r += 1;
    }
    let free_cols: Vec<usize> = (0..ncols).filter(|c| !pivot_cols.contains(c)).collect();
    let mut basis = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut v = vec![0.0; ncols];
        v[fc] = 1.0;
        for (ri, &pc) in pivot_cols.iter().enumerate() {
            v[pc] = -m[ri][fc];
        }
        basis.push(v);
    }
    // modified Gram-Schmidt, two passes for orthogonality
    for _ in 0..2 {
        for i in 0..basis.len() {
            for j in 0..i {
                let d: f64 = basis[i].iter().zip(&basis[j]).map(|(a, b)| a * b).sum();
                for k in 0..ncols {
                    let sub = d * basis[j][k];
                    basis[i][k] -= sub;
                }
            }
            let norm: f64 = basis[i].iter().map(|a| a * a).sum::<f64>().sqrt();
            for a in basis[i].iter_mut() {
                *a /= norm;
            }
        }
    }
    basis
}

/// Solves `A x = b` for symmetric positive definite `A` in place.
/// Returns `None` when a pivot loses positivity.
pub(crate) fn cholesky_solve(a: &mut Mat, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    // factor: lower triangle of a becomes L
    for j in 0..n {
        let mut d = a.at(j, j);
        for k in 0..j {
            d -= a.at(j, k) * a.at(j, k);
        }
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        let lj = d.sqrt();
        *a.at_mut(j, j) = lj;
        for i in j + 1..n {
            let mut v = a.at(i, j);
            for k in 0..j {
                v -= a.at(i, k) * a.at(j, k);
            }
            *a.at_mut(i, j) = v / lj;
        }
    }
    // forward then backward substitution
    let mut x = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= a.at(i, k) * x[k];
        }
        x[i] /= a.at(i, i);
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            x[i] -= a.at(k, i) * x[k];
        }
        x[i] /= a.at(i, i);
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_space_of_sum_constraint() {
        let rows = vec![vec![1.0, 1.0, 1.0]];
        let basis = null_space(&rows, 3, 1e-12);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            let s: f64 = v.iter().sum();
            assert!(s.abs() < 1e-12);
        }
        let d: f64 = basis[0].iter().zip(&basis[1]).map(|(a, b)| a * b).sum();
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn rank_detects_dependence() {
        let rows = vec![
            vec![1.0, 0.0, 1.0],
            vec![0.0, 1.0, 1.0],
            vec![1.0, 1.0, 2.0],
        ];
        assert_eq!(rank(&rows, 1e-12), 2);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let mut a = Mat::zeros(2, 2);
        *a.at_mut(0, 0) = 4.0;
        *a.at_mut(0, 1) = 1.0;
        *a.at_mut(1, 0) = 1.0;
        *a.at_mut(1, 1) = 3.0;
        let x = cholesky_solve(&mut a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);

        let mut sing = Mat::zeros(2, 2);
        *sing.at_mut(0, 0) = 1.0;
        *sing.at_mut(0, 1) = 1.0;
        *sing.at_mut(1, 0) = 1.0;
        *sing.at_mut(1, 1) = 1.0;
        assert!(cholesky_solve(&mut sing, &[1.0, 1.0]).is_none());
    }

    #[test]
    fn gram_weighted_matches_direct_product() {
        let mut m = Mat::zeros(3, 2);
        let vals = [[1.0, 2.0], [0.5, -1.0], [3.0, 0.0]];
        for r in 0..3 {
            for c in 0..2 {
                *m.at_mut(r, c) = vals[r][c];
            }
        }
        let w = [2.0, 1.0, 0.5];
        let g = m.gram_weighted(&w);
        for i in 0..2 {
            for j in 0..2 {
                let direct: f64 = (0..3).map(|r| w[r] * vals[r][i] * vals[r][j]).sum();
                assert!((g.at(i, j) - direct).abs() < 1e-12);
            }
        }
    }
}
