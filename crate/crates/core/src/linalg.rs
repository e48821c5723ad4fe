//! Compact tridiagonal and banded operators with direct solvers.
//!
//! Nothing here pivots outside the band. The systems assembled by the scheme
//! have a positive definite symmetric part after energy-weighted row scaling,
//! so Gaussian elimination in natural order never meets a zero pivot.
//! [`DenseMatrix`] with partially pivoted elimination is the brute-force
//! reference used to cross-check the compact solvers on small systems.

use crate::error::{Error, Result};

/// Pivots smaller than this in magnitude are treated as singular.
pub const PIVOT_UNDERFLOW: f64 = 1e-300;

/// Anything that can be applied to a vector.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;

    /// `y = A x` into a caller-provided buffer. Dimensions are not checked.
    fn apply_into(&self, x: &[f64], y: &mut [f64]);

    fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.ncols(),
                got: x.len(),
            });
        }
        let mut y = vec![0.0; self.nrows()];
        self.apply_into(x, &mut y);
        Ok(y)
    }
}

/// `y = A x` for any supported operator.
pub fn matvec<A: LinearOperator + ?Sized>(a: &A, x: &[f64]) -> Result<Vec<f64>> {
    a.matvec(x)
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

// ---------------------------------------------------------------------------
// Tridiagonal

#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalMatrix {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalMatrix {
    /// `lower[i]` is entry `(i+1, i)`, `upper[i]` is entry `(i, i+1)`.
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        let off = n.saturating_sub(1);
        if lower.len() != off {
            return Err(Error::DimensionMismatch {
                expected: off,
                got: lower.len(),
            });
        }
        if upper.len() != off {
            return Err(Error::DimensionMismatch {
                expected: off,
                got: upper.len(),
            });
        }
        Ok(Self { lower, diag, upper })
    }

    /// Constant-coefficient matrix with `sub`, `main`, `sup` on the three diagonals.
    pub fn constant(n: usize, sub: f64, main: f64, sup: f64) -> Self {
        let off = n.saturating_sub(1);
        Self {
            lower: vec![sub; off],
            diag: vec![main; n],
            upper: vec![sup; off],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(n, 0.0, 1.0, 0.0)
    }

    pub fn order(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Entry `(i, j)`; zero off the three diagonals.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diag[i]
        } else if i == j + 1 {
            self.lower[j]
        } else if j == i + 1 {
            self.upper[i]
        } else {
            0.0
        }
    }

    /// `alpha * I + beta * self`.
    pub fn shifted_scaled(&self, alpha: f64, beta: f64) -> Self {
        Self {
            lower: self.lower.iter().map(|v| beta * v).collect(),
            diag: self.diag.iter().map(|v| alpha + beta * v).collect(),
            upper: self.upper.iter().map(|v| beta * v).collect(),
        }
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.order())
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s += self.lower[i - 1].abs();
                }
                if i + 1 < self.order() {
                    s += self.upper[i].abs();
                }
                s
            })
            .fold(0.0, f64::max)
    }

    pub fn is_strictly_diagonally_dominant(&self) -> bool {
        let n = self.order();
        (0..n).all(|i| {
            let mut off = 0.0;
            if i > 0 {
                off += self.lower[i - 1].abs();
            }
            if i + 1 < n {
                off += self.upper[i].abs();
            }
            self.diag[i].abs() > off
        })
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let n = self.order();
        let mut d = DenseMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = self.diag[i];
            if i + 1 < n {
                d[(i, i + 1)] = self.upper[i];
                d[(i + 1, i)] = self.lower[i];
            }
        }
        d
    }

    /// Solve `self * x = b`, see [`thomas_solve`].
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        thomas_solve(self, b)
    }
}

impl LinearOperator for TridiagonalMatrix {
    fn nrows(&self) -> usize {
        self.order()
    }

    fn ncols(&self) -> usize {
        self.order()
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        let n = self.order();
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }
}

/// Thomas algorithm (tridiagonal Gaussian elimination without pivoting).
pub fn thomas_solve(a: &TridiagonalMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.order();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c_prime = vec![0.0; n];
    let mut x = vec![0.0; n];

    let mut pivot = a.diag[0];
    check_pivot(0, pivot)?;
    if n > 1 {
        c_prime[0] = a.upper[0] / pivot;
    }
    x[0] = b[0] / pivot;
    for i in 1..n {
        pivot = a.diag[i] - a.lower[i - 1] * c_prime[i - 1];
        check_pivot(i, pivot)?;
        if i + 1 < n {
            c_prime[i] = a.upper[i] / pivot;
        }
        x[i] = (b[i] - a.lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c_prime[i] * x[i + 1];
    }
    Ok(x)
}

#[inline]
fn check_pivot(index: usize, pivot: f64) -> Result<()> {
    if pivot.abs() < PIVOT_UNDERFLOW || !pivot.is_finite() {
        Err(Error::SingularPivot {
            index,
            magnitude: pivot.abs(),
        })
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Banded

/// Square matrix with `bandwidth` sub- and super-diagonals, stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    bandwidth: usize,
    // row i, column i + k - bandwidth lives at data[i * width + k]
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self {
            n,
            bandwidth,
            data: vec![0.0; n * (2 * bandwidth + 1)],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    fn width(&self) -> usize {
        2 * self.bandwidth + 1
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && i.abs_diff(j) <= self.bandwidth
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if self.in_band(i, j) {
            self.data[i * self.width() + j + self.bandwidth - i]
        } else {
            0.0
        }
    }

    /// Panics when `(i, j)` lies outside the band.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        assert!(
            self.in_band(i, j),
            "entry ({i}, {j}) outside band of width {}",
            self.bandwidth
        );
        let w = self.width();
        self.data[i * w + j + self.bandwidth - i] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let v = self.get(i, j);
        self.set(i, j, v + value);
    }

    pub fn scale_row(&mut self, i: usize, factor: f64) {
        let w = self.width();
        for v in &mut self.data[i * w..(i + 1) * w] {
            *v *= factor;
        }
    }

    fn col_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.bandwidth)..(i + self.bandwidth + 1).min(self.n)
    }

    pub fn from_tridiagonal(t: &TridiagonalMatrix) -> Self {
        let n = t.order();
        let mut m = Self::zeros(n, 1);
        for i in 0..n {
            for j in m.col_range(i) {
                m.set(i, j, t.get(i, j));
            }
        }
        m
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in self.col_range(i) {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    /// In-band LU factorization without pivoting.
    pub fn factor(&self) -> Result<BandedLu> {
        let mut lu = self.clone();
        let n = self.n;
        let p = self.bandwidth;
        for k in 0..n {
            let pivot = lu.get(k, k);
            check_pivot(k, pivot)?;
            let last = (k + p + 1).min(n);
            for i in k + 1..last {
                let l = lu.get(i, k) / pivot;
                lu.set(i, k, l);
                if l == 0.0 {
                    continue;
                }
                for j in k + 1..last {
                    let v = lu.get(i, j) - l * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        Ok(BandedLu { lu })
    }
}

impl LinearOperator for BandedMatrix {
    fn nrows(&self) -> usize {
        self.n
    }

    fn ncols(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate().take(self.n) {
            *yi = self.col_range(i).map(|j| self.get(i, j) * x[j]).sum();
        }
    }
}

/// Packed `L\U` factors of a [`BandedMatrix`]; `L` has a unit diagonal.
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
}

impl BandedLu {
    pub fn order(&self) -> usize {
        self.lu.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    pub fn solve_in_place(&self, x: &mut [f64]) -> Result<()> {
        let n = self.lu.n;
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        let p = self.lu.bandwidth;
        for i in 0..n {
            let mut s = x[i];
            for j in i.saturating_sub(p)..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..(i + p + 1).min(n) {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        Ok(())
    }
}

/// Factor and solve in one go.
pub fn banded_lu_solve(a: &BandedMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.order() {
        return Err(Error::DimensionMismatch {
            expected: a.order(),
            got: b.len(),
        });
    }
    a.factor()?.solve(b)
}

// ---------------------------------------------------------------------------
// Dense

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

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
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dense product `self * other`.
    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl LinearOperator for DenseMatrix {
    fn nrows(&self) -> usize {
        self.rows
    }

    fn ncols(&self) -> usize {
        self.cols
    }

    fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }
}

/// Gaussian elimination with partial pivoting. O(n^3); meant for small systems.
pub fn dense_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows;
    if a.cols != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.cols,
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let (p, max) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if max < PIVOT_UNDERFLOW || !max.is_finite() {
            return Err(Error::SingularMatrix);
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let pivot = m[(k, k)];
        for i in k + 1..n {
            let l = m[(i, k)] / pivot;
            if l == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= l * m[(k, j)];
            }
            x[i] -= l * x[k];
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[(i, j)] * x[j]).sum();
        x[i] = (x[i] - s) / m[(i, i)];
    }
    Ok(x)
}
