use crate::error::{invalid, Result};
use crate::real::Real;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(invalid(format!(
                "matrix data length {} != {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![T::one(); n])
    }

    pub fn diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn from_rows(rows: &[&[T]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(invalid("ragged matrix rows"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Plain matrix product; not instrumented, used for checks only.
    pub fn matmul(&self, other: &Matrix<T>) -> Result<Matrix<T>> {
        if self.cols != other.rows {
            return Err(invalid(format!(
                "matmul {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn cast<U: Real>(&self) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.cast()).collect(),
        }
    }
}

/// Channel-major 1-D signal: `data[c * steps + t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor1D<T> {
    channels: usize,
    steps: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor1D<T> {
    pub fn new(channels: usize, steps: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * steps {
            return Err(invalid(format!(
                "tensor data length {} != {channels}x{steps}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            steps,
            data,
        })
    }

    pub fn zeros(channels: usize, steps: usize) -> Self {
        Self {
            channels,
            steps,
            data: vec![T::zero(); channels * steps],
        }
    }

    /// Builds a tensor from step-major rows (`rows[t][c]`).
    pub fn from_steps(channels: usize, rows: &[&[T]]) -> Result<Self> {
        let steps = rows.len();
        let mut out = Self::zeros(channels, steps);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != channels {
                return Err(invalid(format!(
                    "step {t} has {} values, expected {channels}",
                    row.len()
                )));
            }
            for (c, &v) in row.iter().enumerate() {
                out.data[c * steps + t] = v;
            }
        }
        Ok(out)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, c: usize, t: usize) -> T {
        self.data[c * self.steps + t]
    }

    #[inline]
    pub fn set(&mut self, c: usize, t: usize, v: T) {
        self.data[c * self.steps + t] = v;
    }

    #[inline]
    pub fn channel(&self, c: usize) -> &[T] {
        &self.data[c * self.steps..(c + 1) * self.steps]
    }

    /// Stacks `self` on top of `other` along the channel axis.
    pub fn concat_channels(&self, other: &Tensor1D<T>) -> Result<Tensor1D<T>> {
        if self.steps != other.steps {
            return Err(invalid(format!(
                "concat of {} and {} steps",
                self.steps, other.steps
            )));
        }
        let mut data = Vec::with_capacity(self.data.len() + other.data.len());
        data.extend_from_slice(&self.data);
        data.extend_from_slice(&other.data);
        Tensor1D::new(self.channels + other.channels, self.steps, data)
    }

    /// Channels `[start, start + count)`.
    pub fn slice_channels(&self, start: usize, count: usize) -> Tensor1D<T> {
        Tensor1D {
            channels: count,
            steps: self.steps,
            data: self.data[start * self.steps..(start + count) * self.steps].to_vec(),
        }
    }

    /// Appends `other` along the time axis.
    pub fn concat_steps(&self, other: &Tensor1D<T>) -> Result<Tensor1D<T>> {
        if self.channels != other.channels {
            return Err(invalid(format!(
                "time concat of {} and {} channels",
                self.channels, other.channels
            )));
        }
        let steps = self.steps + other.steps;
        let mut data = Vec::with_capacity(self.channels * steps);
        for c in 0..self.channels {
            data.extend_from_slice(self.channel(c));
            data.extend_from_slice(other.channel(c));
        }
        Tensor1D::new(self.channels, steps, data)
    }

    /// Steps `[start, start + count)`.
    pub fn slice_steps(&self, start: usize, count: usize) -> Tensor1D<T> {
        let mut data = Vec::with_capacity(self.channels * count);
        for c in 0..self.channels {
            data.extend_from_slice(&self.channel(c)[start..start + count]);
        }
        Tensor1D {
            channels: self.channels,
            steps: count,
            data,
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor1D<U> {
        Tensor1D {
            channels: self.channels,
            steps: self.steps,
            data: self.data.iter().map(|v| v.cast()).collect(),
        }
    }
}
