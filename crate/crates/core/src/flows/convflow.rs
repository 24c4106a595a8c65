use super::irb::{irb_coefficients, IrbHistory, IrbParams};
use super::{visit_matrix, visit_matrix_mut, TensorSet, Visitor, VisitorMut, Windowed};
use crate::error::{invalid, Result};
use crate::kernels::{lu_invert_logdet, pointwise_conv, Matrix, Tensor1D};
use crate::real::Real;

/// Non-autoregressive coupling flow over windows of `W` samples.
///
/// Each window is split into lanes `[0, W/2)` (passed through) and
/// `[W/2, W)` (affinely transformed with coefficients computed from the
/// first half and the window's features), then mixed by the invertible
/// `W x W` matrix `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvFlowParams<T> {
    pub irb: IrbParams<T>,
    kernel: Matrix<T>,
    inverse: Matrix<T>,
    log_abs_det: f64,
}

impl<T: Real> ConvFlowParams<T> {
    pub fn new(irb: IrbParams<T>, kernel: Matrix<T>) -> Result<Self> {
        let w = kernel.rows();
        if !kernel.is_square() || !w.is_multiple_of(2) || w == 0 {
            return Err(invalid(format!(
                "ConvFlow kernel must be square with even size, got {}x{}",
                kernel.rows(),
                kernel.cols()
            )));
        }
        if irb.out_width() != w / 2 || irb.in_width() < w / 2 {
            return Err(invalid(format!(
                "IRB widths ({} in, {} out) do not fit window {w}",
                irb.in_width(),
                irb.out_width()
            )));
        }
        let mut p = Self {
            irb,
            inverse: Matrix::identity(w),
            kernel,
            log_abs_det: 0.0,
        };
        p.refresh()?;
        Ok(p)
    }

    pub fn window(&self) -> usize {
        self.kernel.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.irb.in_width() - self.window() / 2
    }

    pub fn kernel(&self) -> &Matrix<T> {
        &self.kernel
    }

    pub fn kernel_inverse(&self) -> &Matrix<T> {
        &self.inverse
    }

    /// `log|det K|`.
    pub fn kernel_log_abs_det(&self) -> f64 {
        self.log_abs_det
    }

    pub fn set_kernel(&mut self, kernel: Matrix<T>) -> Result<()> {
        if kernel.rows() != self.window() || !kernel.is_square() {
            return Err(invalid("replacement kernel has the wrong shape"));
        }
        self.kernel = kernel;
        self.refresh()
    }

    /// Recomputes the cached inverse after `K` changed in place.
    pub fn refresh(&mut self) -> Result<()> {
        let lu = lu_invert_logdet(&self.kernel)?;
        self.inverse = lu.inverse;
        self.log_abs_det = lu.log_abs_det;
        Ok(())
    }

    fn check(&self, z: &Windowed<T>, features: &Tensor1D<T>) -> Result<()> {
        if z.width() != self.window() {
            return Err(invalid(format!(
                "ConvFlow window {} applied to width {}",
                self.window(),
                z.width()
            )));
        }
        if features.steps() != z.windows() || features.channels() != self.feature_dim() {
            return Err(invalid(format!(
                "expected {}x{} window features, got {}x{}",
                self.feature_dim(),
                z.windows(),
                features.channels(),
                features.steps()
            )));
        }
        Ok(())
    }

    /// Latent to audio direction.
    pub fn generate(
        &self,
        z: &Windowed<T>,
        features: &Tensor1D<T>,
        history: &mut IrbHistory<T>,
    ) -> Result<Windowed<T>> {
        self.check(z, features)?;
        let half = self.window() / 2;
        let lanes = z.to_lanes();
        let a = lanes.slice_channels(0, half);
        let coef = irb_coefficients(&a, features, &self.irb, history)?;
        let mut b = lanes.slice_channels(half, half);
        for ((v, &ls), &sh) in b
            .data_mut()
            .iter_mut()
            .zip(coef.log_s.data())
            .zip(coef.shift.data())
        {
            *v = (*v - sh) / ls.exp();
        }
        let mixed = pointwise_conv(
            &a.concat_channels(&b)?,
            &self.kernel,
            &vec![T::zero(); self.window()],
        )?;
        Ok(Windowed::from_lanes(&mixed))
    }

    /// Audio to latent direction; returns `log|det J|` of this inverse map.
    pub fn invert(
        &self,
        x: &Windowed<T>,
        features: &Tensor1D<T>,
        history: &mut IrbHistory<T>,
    ) -> Result<(Windowed<T>, f64)> {
        self.check(x, features)?;
        let half = self.window() / 2;
        let unmixed = pointwise_conv(
            &x.to_lanes(),
            &self.inverse,
            &vec![T::zero(); self.window()],
        )?;
        let a = unmixed.slice_channels(0, half);
        let coef = irb_coefficients(&a, features, &self.irb, history)?;
        let mut b = unmixed.slice_channels(half, half);
        let mut log_s_sum = 0.0f64;
        for ((v, &ls), &sh) in b
            .data_mut()
            .iter_mut()
            .zip(coef.log_s.data())
            .zip(coef.shift.data())
        {
            *v = *v * ls.exp() + sh;
            log_s_sum += ls.as_f64();
        }
        let z = Windowed::from_lanes(&a.concat_channels(&b)?);
        let logdet = -(x.windows() as f64) * self.log_abs_det + log_s_sum;
        Ok((z, logdet))
    }

    pub fn cast<U: Real>(&self) -> ConvFlowParams<U> {
        ConvFlowParams {
            irb: self.irb.cast(),
            kernel: self.kernel.cast(),
            inverse: self.inverse.cast(),
            log_abs_det: self.log_abs_det,
        }
    }
}

impl<T: Real> TensorSet<T> for ConvFlowParams<T> {
    fn visit(&self, prefix: &str, f: &mut Visitor<'_, T>) {
        self.irb.visit(&format!("{prefix}.irb"), f);
        visit_matrix(&format!("{prefix}.kernel"), &self.kernel, f);
    }

    /// Callers that modify `kernel` must call [`ConvFlowParams::refresh`].
    fn visit_mut(&mut self, prefix: &str, f: &mut VisitorMut<'_, T>) {
        self.irb.visit_mut(&format!("{prefix}.irb"), f);
        visit_matrix_mut(&format!("{prefix}.kernel"), &mut self.kernel, f);
    }
}
