use super::macs;
use super::tensor::{Matrix, Tensor1D};
use crate::error::{invalid, Result};
use crate::real::Real;

/// Taps of the depthwise kernel.
pub const DW_KERNEL: usize = 3;
/// Left context carried between calls by the causal depthwise convolution.
pub const DW_HISTORY: usize = DW_KERNEL - 1;

/// 1-D pointwise convolution: `out[c, t] = sum_j weight[c, j] * x[j, t] + bias[c]`.
pub fn pointwise_conv<T: Real>(
    x: &Tensor1D<T>,
    weight: &Matrix<T>,
    bias: &[T],
) -> Result<Tensor1D<T>> {
    if weight.cols() != x.channels() {
        return Err(invalid(format!(
            "pointwise weight has {} inputs, tensor has {} channels",
            weight.cols(),
            x.channels()
        )));
    }
    if bias.len() != weight.rows() {
        return Err(invalid(format!(
            "pointwise bias length {} != {} outputs",
            bias.len(),
            weight.rows()
        )));
    }
    let steps = x.steps();
    let mut out = Tensor1D::zeros(weight.rows(), steps);
    let mut acc = vec![T::zero(); steps];
    for (c, &b) in bias.iter().enumerate() {
        acc.iter_mut().for_each(|a| *a = T::zero());
        for (j, &w) in weight.row(c).iter().enumerate() {
            for (a, &xv) in acc.iter_mut().zip(x.channel(j)) {
                *a = *a + w * xv;
            }
        }
        for (t, &a) in acc.iter().enumerate() {
            out.set(c, t, a + b);
        }
    }
    macs::record(weight.rows() * weight.cols() * steps);
    Ok(out)
}

/// Causal depthwise convolution with a 3-tap kernel per channel.
///
/// `out[c, t] = sum_k weight[c, k] * xpad[c, t + k] + bias[c]` where
/// `xpad = history ++ x`; `history` holds the two steps preceding `x`.
pub fn depthwise_conv3<T: Real>(
    x: &Tensor1D<T>,
    weight: &Matrix<T>,
    bias: &[T],
    history: &Tensor1D<T>,
) -> Result<Tensor1D<T>> {
    let channels = x.channels();
    if weight.rows() != channels || weight.cols() != DW_KERNEL {
        return Err(invalid(format!(
            "depthwise weight is {}x{}, expected {channels}x{DW_KERNEL}",
            weight.rows(),
            weight.cols()
        )));
    }
    if bias.len() != channels {
        return Err(invalid(format!(
            "depthwise bias length {} != {channels} channels",
            bias.len()
        )));
    }
    if history.channels() != channels || history.steps() != DW_HISTORY {
        return Err(invalid(format!(
            "depthwise history is {}x{}, expected {channels}x{DW_HISTORY}",
            history.channels(),
            history.steps()
        )));
    }
    let steps = x.steps();
    let mut out = Tensor1D::zeros(channels, steps);
    let mut padded = Vec::with_capacity(steps + DW_HISTORY);
    for c in 0..channels {
        padded.clear();
        padded.extend_from_slice(history.channel(c));
        padded.extend_from_slice(x.channel(c));
        let w = weight.row(c);
        for t in 0..steps {
            let acc = w[0] * padded[t] + w[1] * padded[t + 1] + w[2] * padded[t + 2];
            out.set(c, t, acc + bias[c]);
        }
    }
    macs::record(DW_KERNEL * channels * steps);
    Ok(out)
}

/// The history to carry forward after feeding `x`: the last two steps of
/// `history ++ x`.
pub fn causal_history<T: Real>(history: &Tensor1D<T>, x: &Tensor1D<T>) -> Result<Tensor1D<T>> {
    let joined = history.concat_steps(x)?;
    Ok(joined.slice_steps(joined.steps() - DW_HISTORY, DW_HISTORY))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(rng: &mut ChaCha8Rng, channels: usize, steps: usize) -> Tensor1D<f64> {
        let data = (0..channels * steps).map(|_| rng.random_range(-1.0..1.0)).collect();
        Tensor1D::new(channels, steps, data).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix<f64> {
        let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
        Matrix::new(rows, cols, data).unwrap()
    }

    #[test]
    fn pointwise_diagonal() {
        let x = Tensor1D::new(2, 1, vec![1.0f32, 1.0]).unwrap();
        let w = Matrix::from_rows(&[&[2.0, 0.0], &[0.0, 1.0]]).unwrap();
        let y = pointwise_conv(&x, &w, &[0.0, 0.0]).unwrap();
        assert_eq!(y.data(), &[2.0, 1.0]);
    }

    #[test]
    fn pointwise_identity_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random_tensor(&mut rng, 4, 7);
        let y = pointwise_conv(&x, &Matrix::identity(4), &[0.0; 4]).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn pointwise_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_tensor(&mut rng, 3, 5);
        let w = random_matrix(&mut rng, 4, 3);
        let bias: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = pointwise_conv(&x, &w, &bias).unwrap();
        for c in 0..4 {
            for t in 0..5 {
                let mut expect = bias[c];
                for j in 0..3 {
                    expect += w.get(c, j) * x.get(j, t);
                }
                assert!((y.get(c, t) - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pointwise_rejects_mismatch() {
        let x = Tensor1D::<f32>::zeros(3, 2);
        assert!(pointwise_conv(&x, &Matrix::identity(2), &[0.0; 2]).is_err());
        assert!(pointwise_conv(&x, &Matrix::identity(3), &[0.0; 2]).is_err());
    }

    #[test]
    fn depthwise_middle_tap_shifts_by_one() {
        let x = Tensor1D::new(1, 4, vec![1.0f32, 2.0, 3.0, 4.0]).unwrap();
        let w = Matrix::new(1, 3, vec![0.0, 1.0, 0.0]).unwrap();
        let y = depthwise_conv3(&x, &w, &[0.0], &Tensor1D::zeros(1, 2)).unwrap();
        assert_eq!(y.data(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn depthwise_last_tap_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = random_tensor(&mut rng, 2, 6);
        let hist = random_tensor(&mut rng, 2, 2);
        let w = Matrix::new(2, 3, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0]).unwrap();
        let y = depthwise_conv3(&x, &w, &[0.0, 0.0], &hist).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn depthwise_matches_sliding_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = random_tensor(&mut rng, 2, 6);
        let hist = random_tensor(&mut rng, 2, 2);
        let w = random_matrix(&mut rng, 2, 3);
        let bias = [0.25, -0.5];
        let y = depthwise_conv3(&x, &w, &bias, &hist).unwrap();
        for c in 0..2 {
            let seq: Vec<f64> = hist.channel(c).iter().chain(x.channel(c)).copied().collect();
            for (t, window) in seq.windows(3).enumerate() {
                let expect: f64 =
                    window.iter().zip(w.row(c)).map(|(a, b)| a * b).sum::<f64>() + bias[c];
                assert!((y.get(c, t) - expect).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn depthwise_chunked_equals_whole() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random_tensor(&mut rng, 3, 9).cast::<f32>();
        let w = random_matrix(&mut rng, 3, 3).cast::<f32>();
        let bias = [0.1f32, 0.2, 0.3];
        let whole = depthwise_conv3(&x, &w, &bias, &Tensor1D::zeros(3, 2)).unwrap();
        let mut hist = Tensor1D::zeros(3, 2);
        let mut parts = Vec::new();
        for (start, len) in [(0, 1), (1, 4), (5, 4)] {
            let chunk = x.slice_steps(start, len);
            parts.push(depthwise_conv3(&chunk, &w, &bias, &hist).unwrap());
            hist = causal_history(&hist, &chunk).unwrap();
        }
        let joined = parts[0]
            .concat_steps(&parts[1])
            .unwrap()
            .concat_steps(&parts[2])
            .unwrap();
        assert_eq!(whole, joined);
    }

    #[test]
    fn depthwise_rejects_channel_mismatch() {
        let x = Tensor1D::<f32>::zeros(2, 3);
        let w = Matrix::zeros(3, 3);
        assert!(depthwise_conv3(&x, &w, &[0.0; 3], &Tensor1D::zeros(3, 2)).is_err());
        let w = Matrix::zeros(2, 3);
        assert!(depthwise_conv3(&x, &w, &[0.0; 2], &Tensor1D::zeros(3, 2)).is_err());
    }
}
