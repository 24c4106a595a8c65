use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest parameter vector the finite-difference trainer accepts.
pub const PARAMETER_CAP: usize = 5000;

/// Central-difference gradient of `loss` at `theta`. The step for
/// parameter `i` is `fd_step * max(1, |theta_i|)` rounded to a power of two,
/// and the divisor is the actual distance between the perturbed values.
///
/// Evaluations run in parallel; each gradient entry depends only on its own
/// two evaluations, so the result is independent of scheduling.
pub fn fd_gradient<F>(loss: F, theta: &[f64], fd_step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if theta.len() > PARAMETER_CAP {
        return Err(Error::TooManyParameters {
            count: theta.len(),
            cap: PARAMETER_CAP,
        });
    }
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(Error::InvalidInput(format!("fd step {fd_step} must be positive")));
    }
    Ok((0..theta.len())
        .into_par_iter()
        .map(|i| {
            let h = (fd_step * theta[i].abs().max(1.0)).log2().round().exp2();
            let (hi, lo) = (theta[i] + h, theta[i] - h);
            let mut p = theta.to_vec();
            p[i] = hi;
            let up = loss(&p);
            p[i] = lo;
            let down = loss(&p);
            (up - down) / (hi - lo)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_probe() {
        let g = fd_gradient(|t| t[0] * t[0], &[3.0], 1e-3).unwrap();
        assert!((g[0] - 6.0).abs() < 1e-4);
    }

    #[test]
    fn linear_probe_is_exact() {
        let g = fd_gradient(|t| 5.0 * t[0], &[0.0], 1e-3).unwrap();
        assert_eq!(g[0], 5.0);
    }

    #[test]
    fn multivariate() {
        let g = fd_gradient(|t| t[0] * t[1] + t[2].sin(), &[2.0, -1.0, 0.5], 1e-4).unwrap();
        assert!((g[0] + 1.0).abs() < 1e-6);
        assert!((g[1] - 2.0).abs() < 1e-6);
        assert!((g[2] - 0.5f64.cos()).abs() < 1e-6);
    }

    #[test]
    fn enforces_cap() {
        let theta = vec![0.0; PARAMETER_CAP + 1];
        let err = fd_gradient(|_| 0.0, &theta, 1e-3).unwrap_err();
        assert!(matches!(err, Error::TooManyParameters { .. }));
    }
}
