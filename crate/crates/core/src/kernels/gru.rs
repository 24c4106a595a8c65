use super::macs;
use super::tensor::Matrix;
use crate::error::{invalid, Result};
use crate::real::Real;

/// GRU parameters in reset-before-candidate form:
///
/// ```text
/// r  = sigmoid(w_r [x, h] + b_r)
/// u  = sigmoid(w_u [x, h] + b_u)
/// n  = tanh(w_n x + r * (u_n h) + b_n)
/// h' = (1 - u) * n + u * h
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruParams<T> {
    pub w_r: Matrix<T>,
    pub b_r: Vec<T>,
    pub w_u: Matrix<T>,
    pub b_u: Vec<T>,
    pub w_n: Matrix<T>,
    pub u_n: Matrix<T>,
    pub b_n: Vec<T>,
}

impl<T: Real> GruParams<T> {
    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w_r: Matrix::zeros(hidden, input + hidden),
            b_r: vec![T::zero(); hidden],
            w_u: Matrix::zeros(hidden, input + hidden),
            b_u: vec![T::zero(); hidden],
            w_n: Matrix::zeros(hidden, input),
            u_n: Matrix::zeros(hidden, hidden),
            b_n: vec![T::zero(); hidden],
        }
    }

    pub fn input_size(&self) -> usize {
        self.w_n.cols()
    }

    pub fn hidden_size(&self) -> usize {
        self.u_n.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let (i, h) = (self.input_size(), self.hidden_size());
        let ok = self.w_r.rows() == h
            && self.w_r.cols() == i + h
            && self.w_u.rows() == h
            && self.w_u.cols() == i + h
            && self.w_n.rows() == h
            && self.u_n.cols() == h
            && self.b_r.len() == h
            && self.b_u.len() == h
            && self.b_n.len() == h;
        if ok {
            Ok(())
        } else {
            Err(invalid("inconsistent GRU parameter shapes"))
        }
    }

    pub fn cast<U: Real>(&self) -> GruParams<U> {
        let v = |x: &[T]| x.iter().map(|a| a.cast()).collect();
        GruParams {
            w_r: self.w_r.cast(),
            b_r: v(&self.b_r),
            w_u: self.w_u.cast(),
            b_u: v(&self.b_u),
            w_n: self.w_n.cast(),
            u_n: self.u_n.cast(),
            b_n: v(&self.b_n),
        }
    }
}

fn sigmoid<T: Real>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

fn dot<T: Real>(w: &[T], a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (wi, &v) in w.iter().zip(a.iter().chain(b)) {
        acc = acc + *wi * v;
    }
    acc
}

/// One GRU step; returns the new hidden state.
pub fn gru_cell<T: Real>(x: &[T], h: &[T], p: &GruParams<T>) -> Result<Vec<T>> {
    let (input, hidden) = (p.input_size(), p.hidden_size());
    if x.len() != input || h.len() != hidden {
        return Err(invalid(format!(
            "gru cell expects input {input} / hidden {hidden}, got {} / {}",
            x.len(),
            h.len()
        )));
    }
    let mut out = Vec::with_capacity(hidden);
    for i in 0..hidden {
        let r = sigmoid(dot(p.w_r.row(i), x, h) + p.b_r[i]);
        let u = sigmoid(dot(p.w_u.row(i), x, h) + p.b_u[i]);
        let n = (dot(p.w_n.row(i), x, &[]) + r * dot(p.u_n.row(i), h, &[]) + p.b_n[i]).tanh();
        out.push((T::one() - u) * n + u * h[i]);
    }
    macs::record(3 * ((input + hidden) * hidden + hidden));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut ChaCha8Rng, input: usize, hidden: usize, scale: f64) -> GruParams<f64> {
        let mut p = GruParams::zeros(input, hidden);
        for m in [&mut p.w_r, &mut p.w_u, &mut p.w_n, &mut p.u_n] {
            m.data_mut().iter_mut().for_each(|v| *v = rng.random_range(-scale..scale));
        }
        for b in [&mut p.b_r, &mut p.b_u, &mut p.b_n] {
            b.iter_mut().for_each(|v| *v = rng.random_range(-scale..scale));
        }
        p
    }

    #[test]
    fn zero_params_give_zero_state() {
        let p = GruParams::<f32>::zeros(3, 4);
        let h = gru_cell(&[1.0, -2.0, 0.5], &[0.0; 4], &p).unwrap();
        assert_eq!(h, vec![0.0; 4]);
    }

    #[test]
    fn saturated_update_gate_keeps_state() {
        let mut p = GruParams::<f64>::zeros(2, 3);
        p.b_u = vec![20.0; 3];
        p.b_n = vec![0.9; 3];
        let v = [0.3, -0.7, 0.1];
        let h = gru_cell(&[0.4, 0.4], &v, &p).unwrap();
        for (a, b) in h.iter().zip(v) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = random_params(&mut rng, 3, 5, 0.5);
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let got = gru_cell(&x, &h, &p).unwrap();
        let xh: Vec<f64> = x.iter().chain(&h).copied().collect();
        for i in 0..5 {
            let mut ar = p.b_r[i];
            let mut au = p.b_u[i];
            for j in 0..8 {
                ar += p.w_r.get(i, j) * xh[j];
                au += p.w_u.get(i, j) * xh[j];
            }
            let r = 1.0 / (1.0 + (-ar).exp());
            let u = 1.0 / (1.0 + (-au).exp());
            let mut wx = 0.0;
            for j in 0..3 {
                wx += p.w_n.get(i, j) * x[j];
            }
            let mut uh = 0.0;
            for j in 0..5 {
                uh += p.u_n.get(i, j) * h[j];
            }
            let n = (wx + r * uh + p.b_n[i]).tanh();
            let expect = (1.0 - u) * n + u * h[i];
            assert!((got[i] - expect).abs() < 1e-6, "{i}: {} vs {expect}", got[i]);
        }
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let p = GruParams::<f32>::zeros(2, 3);
        assert!(gru_cell(&[0.0; 3], &[0.0; 3], &p).is_err());
        assert!(gru_cell(&[0.0; 2], &[0.0; 2], &p).is_err());
    }

    #[test]
    fn bounded_from_zero_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = random_params(&mut rng, 2, 6, 3.0).cast::<f32>();
        let mut h = vec![0.0f32; 6];
        for _ in 0..200 {
            let x = [rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)];
            h = gru_cell(&x, &h, &p).unwrap();
            assert!(h.iter().all(|v| v.is_finite() && v.abs() <= 1.0));
        }
    }
}
