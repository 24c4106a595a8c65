//! Invertible transforms: the coefficient network (inverted residual
//! block), the windowed ConvFlow and the autoregressive GRUFlow.
//!
//! Every `generate` maps latent to audio direction; every `invert` maps back
//! and returns the log-determinant of the inverse map's Jacobian. Mutable
//! state (depthwise histories, GRU hidden state) is passed explicitly, so a
//! sequence can be processed in one call or in consecutive chunks with
//! identical results.

mod convflow;
mod gruflow;
mod irb;

pub use convflow::ConvFlowParams;
pub use gruflow::{GruFlowParams, GruFlowState};
pub use irb::{irb_coefficients, Activation, Coefficients, DwLayer, IrbBody, IrbHistory, IrbParams, PwLayer};

use crate::error::{invalid, Result};
use crate::kernels::{Matrix, Tensor1D};
use crate::real::Real;

/// A sample sequence viewed as consecutive windows of `width` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Windowed<T> {
    width: usize,
    data: Vec<T>,
}

impl<T: Real> Windowed<T> {
    pub fn new(width: usize, data: Vec<T>) -> Result<Self> {
        if width == 0 || !data.len().is_multiple_of(width) {
            return Err(invalid(format!(
                "{} samples do not split into windows of {width}",
                data.len()
            )));
        }
        Ok(Self { width, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn windows(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn window(&self, i: usize) -> &[T] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    /// Lanes as channels, windows as time steps.
    pub fn to_lanes(&self) -> Tensor1D<T> {
        let n = self.windows();
        let mut t = Tensor1D::zeros(self.width, n);
        for w in 0..n {
            for (lane, &v) in self.window(w).iter().enumerate() {
                t.set(lane, w, v);
            }
        }
        t
    }

    pub fn from_lanes(t: &Tensor1D<T>) -> Self {
        let (width, n) = (t.channels(), t.steps());
        let mut data = Vec::with_capacity(width * n);
        for w in 0..n {
            for lane in 0..width {
                data.push(t.get(lane, w));
            }
        }
        Self { width, data }
    }
}

/// Uniform access to the learnable tensors of a parameter block, in a fixed
/// canonical order. Used by serialization and by the trainer.
pub trait TensorSet<T> {
    fn visit(&self, prefix: &str, f: &mut Visitor<'_, T>);
    fn visit_mut(&mut self, prefix: &str, f: &mut VisitorMut<'_, T>);
}

/// Receives `(name, shape, data)` for each tensor.
pub type Visitor<'a, T> = dyn FnMut(&str, Vec<usize>, &[T]) + 'a;
pub type VisitorMut<'a, T> = dyn FnMut(&str, Vec<usize>, &mut [T]) + 'a;

pub(crate) fn visit_matrix<T>(
    name: &str,
    m: &Matrix<T>,
    f: &mut Visitor<'_, T>,
) where
    T: Real,
{
    f(name, vec![m.rows(), m.cols()], m.data());
}

pub(crate) fn visit_matrix_mut<T>(
    name: &str,
    m: &mut Matrix<T>,
    f: &mut VisitorMut<'_, T>,
) where
    T: Real,
{
    let shape = vec![m.rows(), m.cols()];
    f(name, shape, m.data_mut());
}
