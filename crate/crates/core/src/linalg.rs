//! Small dense matrix kernels.
//!
//! Everything here works on flat row-major `Vec<f64>` storage and targets
//! dimensions up to ~16. Gaussian elimination with partial pivoting is the
//! only factorization; singularity is decided by an explicit pivot threshold
//! supplied by the caller.

use crate::error::{Error, Result};

/// Relative tolerance used for numerical rank decisions.
pub const RANK_REL_TOL: f64 = 1e-9;

/// Gram matrices with a pivot at or below `GRAM_PIVOT_REL_TOL * trace` are singular.
pub const GRAM_PIVOT_REL_TOL: f64 = 1e-12;

/// Dense row-major matrix.
#[derive(Clone, Debug, PartialEq)]
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

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix whose rows are the given vectors.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, v) in col.iter().enumerate() {
                m.data[i * c + j] = *v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], v))
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// `self += weight * v vᵀ`.
    pub fn add_outer(&mut self, v: &[f64], weight: f64) {
        let n = self.rows;
        debug_assert_eq!(n, self.cols);
        debug_assert_eq!(v.len(), n);
        for i in 0..n {
            let wi = weight * v[i];
            if wi == 0.0 {
                continue;
            }
            let row = &mut self.data[i * n..(i + 1) * n];
            for (r, vj) in row.iter_mut().zip(v) {
                *r += wi * vj;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// LU factorization with partial pivoting of a square matrix.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
    min_pivot: f64,
}

impl Lu {
    /// Factors `m`. Returns `None` when some pivot magnitude is `<= pivot_tol`.
    pub fn factor(m: &Matrix, pivot_tol: f64) -> Option<Self> {
        assert_eq!(m.rows, m.cols, "LU needs a square matrix");
        let n = m.rows;
        let mut lu = m.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut min_pivot = f64::INFINITY;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].abs();
            for i in k + 1..n {
                let v = lu[i * n + k].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > pivot_tol) || !best.is_finite() {
                return None;
            }
            min_pivot = min_pivot.min(best);
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[k * n + k];
            for i in k + 1..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                if f != 0.0 {
                    for j in k + 1..n {
                        lu[i * n + j] -= f * lu[k * n + j];
                    }
                }
            }
        }
        Some(Self {
            n,
            lu,
            perm,
            sign,
            min_pivot,
        })
    }

    pub fn det(&self) -> f64 {
        let n = self.n;
        (0..n).map(|i| self.lu[i * n + i]).product::<f64>() * self.sign
    }

    pub fn min_pivot(&self) -> f64 {
        self.min_pivot
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            y[i] -= row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum::<f64>();
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n + i + 1..(i + 1) * n];
            let s = y[i] - row.iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum::<f64>();
            y[i] = s / self.lu[i * n + i];
        }
        y
    }
}

/// Determinant by elimination; exactly singular inputs give 0.
pub fn determinant(m: &Matrix) -> f64 {
    Lu::factor(m, 0.0).map_or(0.0, |lu| lu.det())
}

/// Numerical rank of the matrix whose rows are `rows`, tolerance relative to the largest entry.
pub fn rank(rows: &[Vec<f64>], rel_tol: f64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let mut m = Matrix::from_rows(rows);
    let tol = rel_tol * m.max_abs();
    let (r, c) = (m.rows, m.cols);
    let mut rank = 0;
    for col in 0..c {
        if rank == r {
            break;
        }
        let mut p = rank;
        let mut best = m.get(rank, col).abs();
        for i in rank + 1..r {
            if m.get(i, col).abs() > best {
                best = m.get(i, col).abs();
                p = i;
            }
        }
        if best <= tol {
            continue;
        }
        for j in 0..c {
            m.data.swap(rank * c + j, p * c + j);
        }
        let pivot = m.get(rank, col);
        for i in rank + 1..r {
            let f = m.get(i, col) / pivot;
            for j in col..c {
                let v = m.get(i, j) - f * m.get(rank, j);
                m.set(i, j, v);
            }
        }
        rank += 1;
    }
    rank
}

/// Orthonormal basis of the span of `vectors` (modified Gram–Schmidt in input order).
pub fn orthonormal_basis(vectors: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let scale = vectors.iter().map(|v| norm(v)).fold(0.0f64, f64::max);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let n = norm(&w);
        if n > rel_tol * scale && n > 0.0 {
            basis.push(w.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// Solves `[columns] · b = target` by Gaussian elimination with partial pivoting.
///
/// The system may be tall (more coordinates than columns); `target` must lie
/// in the column span, with residual below `1e-9` relative to `‖target‖`
/// (or absolute when the target is tiny).
pub fn solve_in_span(columns: &[Vec<f64>], target: &[f64]) -> Result<Vec<f64>> {
    let k = columns.len();
    let d = target.len();
    if k == 0 {
        let residual = norm(target);
        return if residual <= 1e-9 {
            Ok(Vec::new())
        } else {
            Err(Error::OutsideSpan { residual })
        };
    }
    // Augmented d × (k + 1) system.
    let w = k + 1;
    let mut a = vec![0.0; d * w];
    for i in 0..d {
        for (j, col) in columns.iter().enumerate() {
            a[i * w + j] = col[i];
        }
        a[i * w + k] = target[i];
    }
    let scale = columns
        .iter()
        .flat_map(|c| c.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = RANK_REL_TOL * scale.max(f64::MIN_POSITIVE);
    let mut pivot_rows = Vec::with_capacity(k);
    let mut row = 0;
    for col in 0..k {
        let mut p = row;
        let mut best = 0.0;
        for i in row..d {
            let v = a[i * w + col].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if best <= tol {
            return Err(Error::Model(format!(
                "basis column {col} is linearly dependent on earlier columns"
            )));
        }
        for j in 0..w {
            a.swap(row * w + j, p * w + j);
        }
        let pivot = a[row * w + col];
        for i in 0..d {
            if i == row {
                continue;
            }
            let f = a[i * w + col] / pivot;
            if f != 0.0 {
                for j in col..w {
                    a[i * w + j] -= f * a[row * w + j];
                }
            }
        }
        pivot_rows.push(row);
        row += 1;
    }
    let coeffs: Vec<f64> = (0..k)
        .map(|j| a[pivot_rows[j] * w + k] / a[pivot_rows[j] * w + j])
        .collect();
    let mut recon = vec![0.0; d];
    for (c, col) in coeffs.iter().zip(columns) {
        for (r, v) in recon.iter_mut().zip(col) {
            *r += c * v;
        }
    }
    let residual = recon
        .iter()
        .zip(target)
        .map(|(r, t)| (r - t) * (r - t))
        .sum::<f64>()
        .sqrt();
    let allowed = 1e-9 * norm(target).max(1.0);
    if residual > allowed {
        return Err(Error::OutsideSpan { residual });
    }
    Ok(coeffs)
}

/// Symmetric positive semidefinite accumulator `Σ wᵢ vᵢ vᵢᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gram {
    m: Matrix,
}

impl Gram {
    pub fn new(dim: usize) -> Self {
        Self {
            m: Matrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.rows
    }

    pub fn add(&mut self, v: &[f64], weight: f64) {
        self.m.add_outer(v, weight);
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// Factors the Gram matrix, or `None` when the smallest pivot is at or
    /// below `1e-12 · trace` (including the empty Gram).
    pub fn factor(&self) -> Option<GramFactor> {
        let tr = self.m.trace();
        if !(tr > 0.0) {
            return None;
        }
        Lu::factor(&self.m, GRAM_PIVOT_REL_TOL * tr).map(|lu| GramFactor { lu })
    }

    /// `vᵀ G⁻¹ v`, or `+∞` when `G` is singular at tolerance.
    pub fn inverse_quadratic(&self, v: &[f64]) -> f64 {
        self.factor().map_or(f64::INFINITY, |f| f.quadratic(v))
    }
}

/// A factored nonsingular Gram matrix.
#[derive(Clone, Debug)]
pub struct GramFactor {
    lu: Lu,
}

impl GramFactor {
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        let y = self.lu.solve(v);
        dot(v, &y).max(0.0)
    }

    pub fn det(&self) -> f64 {
        self.lu.det()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lu_solves_and_reports_determinant() {
        let m = Matrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let lu = Lu::factor(&m, 1e-12).unwrap();
        assert!((lu.det() - 5.0).abs() < 1e-12);
        let x = lu.solve(&[3.0, 5.0]);
        assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn determinant_sign_follows_row_swaps() {
        let m = Matrix::from_columns(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        assert_eq!(determinant(&m), -1.0);
        let singular = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(determinant(&singular), 0.0);
    }

    #[test]
    fn rank_detects_dependent_rows() {
        let rows = vec![
            vec![1.0, 1.0, 0.0],
            vec![2.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        assert_eq!(rank(&rows, RANK_REL_TOL), 2);
        assert_eq!(rank(&[vec![0.0, 0.0]], RANK_REL_TOL), 0);
    }

    #[test]
    fn tall_systems_solve_inside_the_span() {
        let cols = vec![vec![1.0, 1.0, 0.0]];
        let b = solve_in_span(&cols, &[0.5, 0.5, 0.0]).unwrap();
        assert!((b[0] - 0.5).abs() < 1e-15);
        assert!(matches!(
            solve_in_span(&cols, &[1.0, 0.0, 0.0]),
            Err(Error::OutsideSpan { .. })
        ));
    }

    #[test]
    fn gram_inverse_quadratic_is_infinite_when_singular() {
        let mut g = Gram::new(2);
        assert!(g.inverse_quadratic(&[1.0, 0.0]).is_infinite());
        g.add(&[1.0, 0.0], 1.0);
        assert!(g.inverse_quadratic(&[0.0, 1.0]).is_infinite());
        g.add(&[0.0, 1.0], 1.0);
        assert!((g.inverse_quadratic(&[1.0, 1.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_basis_spans_a_plane() {
        let v = vec![
            vec![1.0, 1.0, 0.0],
            vec![2.0, 2.0, 0.0],
            vec![0.0, 1.0, 0.0],
        ];
        let q = orthonormal_basis(&v, RANK_REL_TOL);
        assert_eq!(q.len(), 2);
        assert!(dot(&q[0], &q[1]).abs() < 1e-12);
    }
}
