use super::irb::{IrbHistory, IrbParams};
use super::{TensorSet, Visitor, VisitorMut, Windowed};
use crate::error::{invalid, Result};
use crate::kernels::{gru_cell, GruParams, Tensor1D};
use crate::real::Real;

/// Autoregressive coupling flow over windows of `W_g` samples.
///
/// At step `t` a GRU consumes the previous output window, and the IRB turns
/// `concat(h_t, f_t)` into `(log_s_t, b_t)` for the current window.
#[derive(Debug, Clone, PartialEq)]
pub struct GruFlowParams<T> {
    pub gru: GruParams<T>,
    pub irb: IrbParams<T>,
}

/// Carried state: hidden vector, previous output window and the IRB's
/// depthwise history. Zero for a fresh utterance.
#[derive(Debug, Clone, PartialEq)]
pub struct GruFlowState<T> {
    pub hidden: Vec<T>,
    pub prev_output: Vec<T>,
    pub irb: IrbHistory<T>,
}

impl<T: Real> GruFlowParams<T> {
    pub fn new(gru: GruParams<T>, irb: IrbParams<T>) -> Result<Self> {
        gru.validate()?;
        let (window, hidden) = (gru.input_size(), gru.hidden_size());
        if window == 0 || hidden == 0 {
            return Err(invalid("GRUFlow window and hidden size must be >= 1"));
        }
        if irb.out_width() != window || irb.in_width() < hidden {
            return Err(invalid(format!(
                "IRB widths ({} in, {} out) do not fit hidden {hidden} / window {window}",
                irb.in_width(),
                irb.out_width()
            )));
        }
        Ok(Self { gru, irb })
    }

    pub fn window(&self) -> usize {
        self.gru.input_size()
    }

    pub fn hidden(&self) -> usize {
        self.gru.hidden_size()
    }

    pub fn feature_dim(&self) -> usize {
        self.irb.in_width() - self.hidden()
    }

    pub fn fresh_state(&self) -> GruFlowState<T> {
        GruFlowState {
            hidden: vec![T::zero(); self.hidden()],
            prev_output: vec![T::zero(); self.window()],
            irb: self.irb.fresh_history(),
        }
    }

    fn check(&self, z: &Windowed<T>, features: &Tensor1D<T>, state: &GruFlowState<T>) -> Result<()> {
        if z.width() != self.window() {
            return Err(invalid(format!(
                "GRUFlow window {} applied to width {}",
                self.window(),
                z.width()
            )));
        }
        if features.steps() != z.windows() || features.channels() != self.feature_dim() {
            return Err(invalid(format!(
                "expected {}x{} step features, got {}x{}",
                self.feature_dim(),
                z.windows(),
                features.channels(),
                features.steps()
            )));
        }
        if state.hidden.len() != self.hidden() || state.prev_output.len() != self.window() {
            return Err(invalid("GRUFlow state does not match parameters"));
        }
        Ok(())
    }

    /// Advances the GRU on the previous output and returns `(log_s, b)` for
    /// step `t`.
    fn step_coefficients(
        &self,
        features: &Tensor1D<T>,
        t: usize,
        state: &mut GruFlowState<T>,
    ) -> Result<(Vec<T>, Vec<T>)> {
        state.hidden = gru_cell(&state.prev_output, &state.hidden, &self.gru)?;
        let mut input = Vec::with_capacity(self.irb.in_width());
        input.extend_from_slice(&state.hidden);
        input.extend((0..features.channels()).map(|c| features.get(c, t)));
        let input = Tensor1D::new(input.len(), 1, input)?;
        let coef = self.irb.coefficients(&input, &mut state.irb)?;
        Ok((coef.log_s.data().to_vec(), coef.shift.data().to_vec()))
    }

    /// Latent to audio direction, sequential over steps.
    pub fn generate(
        &self,
        z: &Windowed<T>,
        features: &Tensor1D<T>,
        state: &mut GruFlowState<T>,
    ) -> Result<Windowed<T>> {
        self.check(z, features, state)?;
        let mut out = Vec::with_capacity(z.data().len());
        for t in 0..z.windows() {
            let (log_s, shift) = self.step_coefficients(features, t, state)?;
            let x: Vec<T> = z
                .window(t)
                .iter()
                .zip(log_s.iter().zip(&shift))
                .map(|(&zv, (&ls, &sh))| (zv - sh) / ls.exp())
                .collect();
            out.extend_from_slice(&x);
            state.prev_output = x;
        }
        Windowed::new(self.window(), out)
    }

    /// Audio to latent direction; coefficients are driven by the observed
    /// audio, so `z_t` depends only on `x_{<=t}`.
    pub fn invert(
        &self,
        x: &Windowed<T>,
        features: &Tensor1D<T>,
        state: &mut GruFlowState<T>,
    ) -> Result<(Windowed<T>, f64)> {
        self.check(x, features, state)?;
        let mut out = Vec::with_capacity(x.data().len());
        let mut logdet = 0.0f64;
        for t in 0..x.windows() {
            let (log_s, shift) = self.step_coefficients(features, t, state)?;
            let xt = x.window(t);
            for (&xv, (&ls, &sh)) in xt.iter().zip(log_s.iter().zip(&shift)) {
                out.push(xv * ls.exp() + sh);
                logdet += ls.as_f64();
            }
            state.prev_output = xt.to_vec();
        }
        Ok((Windowed::new(self.window(), out)?, logdet))
    }

    pub fn cast<U: Real>(&self) -> GruFlowParams<U> {
        GruFlowParams {
            gru: self.gru.cast(),
            irb: self.irb.cast(),
        }
    }
}

impl<T: Real> GruFlowState<T> {
    pub fn cast<U: Real>(&self) -> GruFlowState<U> {
        GruFlowState {
            hidden: self.hidden.iter().map(|v| v.cast()).collect(),
            prev_output: self.prev_output.iter().map(|v| v.cast()).collect(),
            irb: IrbHistory {
                bodies: self.irb.bodies.iter().map(|b| b.cast()).collect(),
            },
        }
    }
}

impl<T: Real> TensorSet<T> for GruFlowParams<T> {
    fn visit(&self, prefix: &str, f: &mut Visitor<'_, T>) {
        use super::visit_matrix as m;
        let g = &self.gru;
        m(&format!("{prefix}.gru.w_r"), &g.w_r, f);
        f(&format!("{prefix}.gru.b_r"), vec![g.b_r.len()], &g.b_r);
        m(&format!("{prefix}.gru.w_u"), &g.w_u, f);
        f(&format!("{prefix}.gru.b_u"), vec![g.b_u.len()], &g.b_u);
        m(&format!("{prefix}.gru.w_n"), &g.w_n, f);
        m(&format!("{prefix}.gru.u_n"), &g.u_n, f);
        f(&format!("{prefix}.gru.b_n"), vec![g.b_n.len()], &g.b_n);
        self.irb.visit(&format!("{prefix}.irb"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut VisitorMut<'_, T>) {
        use super::visit_matrix_mut as m;
        let g = &mut self.gru;
        m(&format!("{prefix}.gru.w_r"), &mut g.w_r, f);
        f(&format!("{prefix}.gru.b_r"), vec![g.b_r.len()], &mut g.b_r);
        m(&format!("{prefix}.gru.w_u"), &mut g.w_u, f);
        f(&format!("{prefix}.gru.b_u"), vec![g.b_u.len()], &mut g.b_u);
        m(&format!("{prefix}.gru.w_n"), &mut g.w_n, f);
        m(&format!("{prefix}.gru.u_n"), &mut g.u_n, f);
        f(&format!("{prefix}.gru.b_n"), vec![g.b_n.len()], &mut g.b_n);
        self.irb.visit_mut(&format!("{prefix}.irb"), f);
    }
}
