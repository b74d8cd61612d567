use std::ops::{Index, IndexMut};

use crate::float_core::WorkingFloat;

use super::KernelError;

/// Dense row-major matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: WorkingFloat> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, KernelError> {
        if rows * cols != data.len() {
            return Err(KernelError::DimensionMismatch(format!(
                "{rows}x{cols} matrix from {} elements",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(KernelError::NonFiniteInput);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::ONE } else { T::ZERO })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Max absolute row sum, in binary64.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|x| x.to_f64().abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub(crate) fn require_square(&self) -> Result<usize, KernelError> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(KernelError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_checks() {
        assert!(Matrix::from_vec(2, 2, vec![1.0f32; 3]).is_err());
        assert_eq!(
            Matrix::from_vec(1, 2, vec![1.0f64, f64::NAN]),
            Err(KernelError::NonFiniteInput)
        );
        let m = Matrix::from_vec(2, 3, vec![1.0f64, -2.0, 3.0, 4.0, 5.0, -6.0]).unwrap();
        assert_eq!(m[(1, 2)], -6.0);
        assert_eq!(m.row(0), &[1.0, -2.0, 3.0]);
        assert_eq!(m.norm_inf(), 15.0);
        assert!(m.require_square().is_err());
        assert_eq!(Matrix::<f32>::identity(3)[(2, 2)], 1.0);
    }
}
