use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::{rank, rat_from_f64, rat_to_f64, Rat};

/// Dense row-major real matrix.
///
/// When `exact` is present it is the authoritative value and `data` is its
/// rounding; otherwise `data` is authoritative and its exact value is the
/// dyadic rational each double already denotes.
#[derive(Debug, Clone)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    exact: Option<Arc<Vec<Rat>>>,
}

impl PartialEq for Matrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && match (&self.exact, &other.exact) {
                (None, None) => self.data == other.data,
                _ => self.exact_data() == other.exact_data(),
            }
    }
}

impl Matrix {
    pub fn from_f64(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::param("matrix entries must be finite"));
        }
        Ok(Matrix {
            rows,
            cols,
            data,
            exact: None,
        })
    }

    pub fn from_rat(rows: usize, cols: usize, data: Vec<Rat>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix {
            rows,
            cols,
            data: data.iter().map(rat_to_f64).collect(),
            exact: Some(Arc::new(data)),
        })
    }

    pub fn from_rows_f64(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::param("ragged matrix rows"));
        }
        Self::from_f64(r, c, rows.concat())
    }

    pub fn from_rows_rat(rows: &[Vec<Rat>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::param("ragged matrix rows"));
        }
        Self::from_rat(r, c, rows.concat())
    }

    /// Columns given as vectors (`n_rows` entries each).
    pub fn from_cols_rat(n_rows: usize, cols: &[Vec<Rat>]) -> Result<Self> {
        let c = cols.len();
        let mut data = vec![Rat::zero(); n_rows * c];
        for (j, col) in cols.iter().enumerate() {
            if col.len() != n_rows {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    got: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                data[i * c + j] = v.clone();
            }
        }
        Self::from_rat(n_rows, c, data)
    }

    pub fn from_cols_f64(n_rows: usize, cols: &[Vec<f64>]) -> Result<Self> {
        let c = cols.len();
        let mut data = vec![0.0; n_rows * c];
        for (j, col) in cols.iter().enumerate() {
            if col.len() != n_rows {
                return Err(Error::DimensionMismatch {
                    expected: n_rows,
                    got: col.len(),
                });
            }
            for (i, v) in col.iter().enumerate() {
                data[i * c + j] = *v;
            }
        }
        Self::from_f64(n_rows, c, data)
    }

    pub fn identity(n: usize) -> Self {
        let data = (0..n * n)
            .map(|k| if k / n == k % n { Rat::from_integer(1.into()) } else { Rat::zero() })
            .collect();
        Self::from_rat(n, n, data).expect("square")
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_rat(rows, cols, vec![Rat::zero(); rows * cols]).expect("shape")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact entries, row-major.
    pub fn exact_data(&self) -> Vec<Rat> {
        match &self.exact {
            Some(e) => e.as_ref().clone(),
            None => self
                .data
                .iter()
                .map(|&x| rat_from_f64(x).expect("finite"))
                .collect(),
        }
    }

    pub fn exact_rows(&self) -> Vec<Vec<Rat>> {
        let d = self.exact_data();
        d.chunks(self.cols.max(1))
            .take(self.rows)
            .map(<[Rat]>::to_vec)
            .collect()
    }

    pub fn exact_col(&self, j: usize) -> Vec<Rat> {
        let d = self.exact_data();
        (0..self.rows).map(|i| d[i * self.cols + j].clone()).collect()
    }

    pub fn col_f64(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.rows) {
            *o = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    pub fn apply_exact(&self, x: &[Rat]) -> Vec<Rat> {
        let d = self.exact_data();
        (0..self.rows)
            .map(|i| {
                d[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(x)
                    .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect()
    }

    /// `self · other`; exact when either factor carries exact entries.
    pub fn mul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let (r, c, k) = (self.rows, other.cols, self.cols);
        if self.is_exact() || other.is_exact() {
            let a = self.exact_data();
            let b = other.exact_data();
            let mut out = vec![Rat::zero(); r * c];
            for i in 0..r {
                for l in 0..k {
                    let ail = &a[i * k + l];
                    if ail.is_zero() {
                        continue;
                    }
                    for j in 0..c {
                        out[i * c + j] += ail * &b[l * c + j];
                    }
                }
            }
            Matrix::from_rat(r, c, out)
        } else {
            let mut out = vec![0.0; r * c];
            for i in 0..r {
                for l in 0..k {
                    let ail = self.data[i * k + l];
                    for j in 0..c {
                        out[i * c + j] += ail * other.data[l * c + j];
                    }
                }
            }
            Matrix::from_f64(r, c, out)
        }
    }

    pub fn transpose(&self) -> Matrix {
        let (r, c) = (self.rows, self.cols);
        let idx = |k: usize| (k % r) * c + k / r;
        match &self.exact {
            Some(e) => Matrix::from_rat(c, r, (0..r * c).map(|k| e[idx(k)].clone()).collect())
                .expect("shape"),
            None => Matrix::from_f64(c, r, (0..r * c).map(|k| self.data[idx(k)]).collect())
                .expect("shape"),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    fn combine(
        &self,
        other: &Matrix,
        fr: impl Fn(&Rat, &Rat) -> Rat,
        ff: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: other.rows * other.cols,
            });
        }
        if self.is_exact() || other.is_exact() {
            let a = self.exact_data();
            let b = other.exact_data();
            Matrix::from_rat(
                self.rows,
                self.cols,
                a.iter().zip(&b).map(|(x, y)| fr(x, y)).collect(),
            )
        } else {
            Matrix::from_f64(
                self.rows,
                self.cols,
                self.data.iter().zip(&other.data).map(|(x, y)| ff(*x, *y)).collect(),
            )
        }
    }

    pub fn scale_rat(&self, s: &Rat) -> Matrix {
        Matrix::from_rat(
            self.rows,
            self.cols,
            self.exact_data().iter().map(|x| x * s).collect(),
        )
        .expect("shape")
    }

    pub fn scale_f64(&self, s: f64) -> Matrix {
        if self.is_exact() {
            self.scale_rat(&rat_from_f64(s).expect("finite scale"))
        } else {
            Matrix::from_f64(self.rows, self.cols, self.data.iter().map(|x| x * s).collect())
                .expect("finite")
        }
    }

    /// Block `[self; other]`.
    pub fn vstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.cols,
            });
        }
        let mut d = self.exact_data();
        d.extend(other.exact_data());
        Matrix::from_rat(self.rows + other.rows, self.cols, d)
    }

    /// Block `[self, other]`.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        self.transpose().vstack(&other.transpose()).map(|m| m.transpose())
    }

    /// Block diagonal `diag(self, other)`.
    pub fn block_diag(&self, other: &Matrix) -> Matrix {
        let top = self.hstack(&Matrix::zeros(self.rows, other.cols)).expect("rows");
        let bottom = Matrix::zeros(other.rows, self.cols).hstack(other).expect("rows");
        top.vstack(&bottom).expect("cols")
    }

    pub fn to_nalgebra(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    pub fn from_nalgebra(m: &DMatrix<f64>) -> Result<Matrix> {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        Matrix::from_f64(m.nrows(), m.ncols(), data)
    }

    /// Exact rank (rational elimination).
    pub fn rank(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            return 0;
        }
        rank(&self.exact_rows())
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        match &self.exact {
            Some(e) => e.iter().all(Zero::is_zero),
            None => self.data.iter().all(|x| *x == 0.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat;

    #[test]
    fn exact_products_stay_exact() {
        let a = Matrix::from_rat(1, 2, vec![rat(1, 3), rat(2, 3)]).unwrap();
        let b = Matrix::from_f64(2, 1, vec![3.0, 1.5]).unwrap();
        let p = a.mul(&b).unwrap();
        assert!(p.is_exact());
        assert_eq!(p.exact_data(), vec![rat(2, 1)]);
        assert_eq!(a.transpose().rows(), 2);
        assert_eq!(Matrix::identity(3).rank(), 3);
    }

    #[test]
    fn blocks() {
        let i = Matrix::identity(1);
        let d = i.block_diag(&Matrix::identity(2));
        assert_eq!(d, Matrix::identity(3));
        assert!(Matrix::from_f64(1, 1, vec![f64::NAN]).is_err());
    }
}
