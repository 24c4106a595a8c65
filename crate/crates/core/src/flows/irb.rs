use serde::{Deserialize, Serialize};

use super::{visit_matrix, visit_matrix_mut, TensorSet, Visitor, VisitorMut};
use crate::error::{invalid, Result};
use crate::kernels::{causal_history, depthwise_conv3, pointwise_conv, Matrix, Tensor1D, DW_HISTORY, DW_KERNEL};
use crate::real::Real;

/// Nonlinearity applied after the expansion and depthwise convolutions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Relu,
    Relu6,
}

impl Activation {
    #[inline]
    pub fn apply<T: Real>(self, v: T) -> T {
        match self {
            Activation::Relu => v.max(T::zero()),
            Activation::Relu6 => v.max(T::zero()).min(T::lit(6.0)),
        }
    }

    pub fn code(self) -> u32 {
        match self {
            Activation::Relu => 0,
            Activation::Relu6 => 1,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        match code {
            0 => Some(Activation::Relu),
            1 => Some(Activation::Relu6),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwLayer<T> {
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> PwLayer<T> {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Matrix::zeros(outputs, inputs),
            bias: vec![T::zero(); outputs],
        }
    }

    pub fn forward(&self, x: &Tensor1D<T>) -> Result<Tensor1D<T>> {
        pointwise_conv(x, &self.weight, &self.bias)
    }

    pub fn cast<U: Real>(&self) -> PwLayer<U> {
        PwLayer {
            weight: self.weight.cast(),
            bias: self.bias.iter().map(|v| v.cast()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DwLayer<T> {
    /// `channels x 3`.
    pub weight: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Real> DwLayer<T> {
    pub fn zeros(channels: usize) -> Self {
        Self {
            weight: Matrix::zeros(channels, DW_KERNEL),
            bias: vec![T::zero(); channels],
        }
    }

    pub fn cast<U: Real>(&self) -> DwLayer<U> {
        DwLayer {
            weight: self.weight.cast(),
            bias: self.bias.iter().map(|v| v.cast()).collect(),
        }
    }
}

/// Expand (C to E*C) -> depthwise-3 -> project (E*C to C), plus the skip.
/// Batch norm is already folded into each convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct IrbBody<T> {
    pub expand: PwLayer<T>,
    pub depthwise: DwLayer<T>,
    pub project: PwLayer<T>,
}

/// The coefficient network: an input projection to `C` channels, a stack of
/// inverted residual bodies, and a pointwise head producing `(log_s, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrbParams<T> {
    pub input: PwLayer<T>,
    pub bodies: Vec<IrbBody<T>>,
    pub head: PwLayer<T>,
    pub activation: Activation,
}

/// Depthwise left context, one `E*C x 2` buffer per body.
#[derive(Debug, Clone, PartialEq)]
pub struct IrbHistory<T> {
    pub bodies: Vec<Tensor1D<T>>,
}

/// Affine coupling coefficients; `s = exp(log_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients<T> {
    pub log_s: Tensor1D<T>,
    pub shift: Tensor1D<T>,
}

impl<T: Real> IrbParams<T> {
    /// All-zero parameters. The head is zero, so the coupling is the
    /// identity.
    pub fn zeros(
        in_width: usize,
        channels: usize,
        expansion: usize,
        bodies: usize,
        out_width: usize,
        activation: Activation,
    ) -> Self {
        let inner = expansion * channels;
        Self {
            input: PwLayer::zeros(in_width, channels),
            bodies: (0..bodies)
                .map(|_| IrbBody {
                    expand: PwLayer::zeros(channels, inner),
                    depthwise: DwLayer::zeros(inner),
                    project: PwLayer::zeros(inner, channels),
                })
                .collect(),
            head: PwLayer::zeros(channels, 2 * out_width),
            activation,
        }
    }

    pub fn in_width(&self) -> usize {
        self.input.weight.cols()
    }

    pub fn channels(&self) -> usize {
        self.input.weight.rows()
    }

    /// Width of each of `log_s` and `b`.
    pub fn out_width(&self) -> usize {
        self.head.weight.rows() / 2
    }

    pub fn fresh_history(&self) -> IrbHistory<T> {
        IrbHistory {
            bodies: self
                .bodies
                .iter()
                .map(|b| Tensor1D::zeros(b.depthwise.weight.rows(), DW_HISTORY))
                .collect(),
        }
    }

    /// Input projection followed by the residual bodies.
    pub fn trunk(&self, input: &Tensor1D<T>, history: &mut IrbHistory<T>) -> Result<Tensor1D<T>> {
        if history.bodies.len() != self.bodies.len() {
            return Err(invalid("IRB history does not match the number of bodies"));
        }
        let mut h = self.input.forward(input)?;
        for (body, hist) in self.bodies.iter().zip(history.bodies.iter_mut()) {
            let mut e = body.expand.forward(&h)?;
            e.data_mut()
                .iter_mut()
                .for_each(|v| *v = self.activation.apply(*v));
            let mut d = depthwise_conv3(&e, &body.depthwise.weight, &body.depthwise.bias, hist)?;
            *hist = causal_history(hist, &e)?;
            d.data_mut()
                .iter_mut()
                .for_each(|v| *v = self.activation.apply(*v));
            let p = body.project.forward(&d)?;
            h.data_mut()
                .iter_mut()
                .zip(p.data())
                .for_each(|(a, &b)| *a = *a + b);
        }
        Ok(h)
    }

    pub fn coefficients(
        &self,
        input: &Tensor1D<T>,
        history: &mut IrbHistory<T>,
    ) -> Result<Coefficients<T>> {
        if input.channels() != self.in_width() {
            return Err(invalid(format!(
                "IRB expects {} input channels, got {}",
                self.in_width(),
                input.channels()
            )));
        }
        let trunk = self.trunk(input, history)?;
        let out = self.head.forward(&trunk)?;
        let w = self.out_width();
        Ok(Coefficients {
            log_s: out.slice_channels(0, w),
            shift: out.slice_channels(w, w),
        })
    }

    pub fn cast<U: Real>(&self) -> IrbParams<U> {
        IrbParams {
            input: self.input.cast(),
            bodies: self
                .bodies
                .iter()
                .map(|b| IrbBody {
                    expand: b.expand.cast(),
                    depthwise: b.depthwise.cast(),
                    project: b.project.cast(),
                })
                .collect(),
            head: self.head.cast(),
            activation: self.activation,
        }
    }
}

/// Coefficients from `concat(z_a, f)` along channels (`z_a` first).
pub fn irb_coefficients<T: Real>(
    z_a: &Tensor1D<T>,
    features: &Tensor1D<T>,
    params: &IrbParams<T>,
    history: &mut IrbHistory<T>,
) -> Result<Coefficients<T>> {
    let input = z_a.concat_channels(features)?;
    params.coefficients(&input, history)
}

impl<T: Real> TensorSet<T> for PwLayer<T> {
    fn visit(&self, prefix: &str, f: &mut Visitor<'_, T>) {
        visit_matrix(&format!("{prefix}.weight"), &self.weight, f);
        f(&format!("{prefix}.bias"), vec![self.bias.len()], &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitorMut<'_, T>) {
        visit_matrix_mut(&format!("{prefix}.weight"), &mut self.weight, f);
        f(&format!("{prefix}.bias"), vec![self.bias.len()], &mut self.bias);
    }
}

impl<T: Real> TensorSet<T> for DwLayer<T> {
    fn visit(&self, prefix: &str, f: &mut Visitor<'_, T>) {
        visit_matrix(&format!("{prefix}.weight"), &self.weight, f);
        f(&format!("{prefix}.bias"), vec![self.bias.len()], &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitorMut<'_, T>) {
        visit_matrix_mut(&format!("{prefix}.weight"), &mut self.weight, f);
        f(&format!("{prefix}.bias"), vec![self.bias.len()], &mut self.bias);
    }
}

impl<T: Real> TensorSet<T> for IrbParams<T> {
    fn visit(&self, prefix: &str, f: &mut Visitor<'_, T>) {
        self.input.visit(&format!("{prefix}.input"), f);
        for (i, b) in self.bodies.iter().enumerate() {
            b.expand.visit(&format!("{prefix}.body{i}.expand"), f);
            b.depthwise.visit(&format!("{prefix}.body{i}.depthwise"), f);
            b.project.visit(&format!("{prefix}.body{i}.project"), f);
        }
        self.head.visit(&format!("{prefix}.head"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitorMut<'_, T>) {
        self.input.visit_mut(&format!("{prefix}.input"), f);
        for (i, b) in self.bodies.iter_mut().enumerate() {
            b.expand.visit_mut(&format!("{prefix}.body{i}.expand"), f);
            b.depthwise.visit_mut(&format!("{prefix}.body{i}.depthwise"), f);
            b.project.visit_mut(&format!("{prefix}.body{i}.project"), f);
        }
        self.head.visit_mut(&format!("{prefix}.head"), f);
    }
}
