//! Training-time view of a model: batch normalisation after every
//! expansion, depthwise and projection convolution of each ConvFlow IRB,
//! folded into the convolutions at export.

use super::dataset::Segment;
use crate::error::Result;
use crate::flows::{IrbParams, TensorSet, Windowed};
use crate::kernels::{depthwise_conv3, pointwise_conv, Tensor1D, DW_HISTORY};
use crate::likelihood::{prior_logp, Prior};
use crate::model::{align_features_to_windows, align_with_hop, ModelWeights};

pub(crate) const BN_EPSILON: f64 = 1e-5;
/// Normalisation sites per IRB body: expand, depthwise, project.
const SITES_PER_BODY: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct BnSite {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    /// `(mean, var)`; `None` until a batch has been observed.
    pub running: Option<(Vec<f64>, Vec<f64>)>,
}

impl BnSite {
    fn new(channels: usize) -> Self {
        Self {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running: None,
        }
    }
}

pub(crate) type BatchStats = Vec<(Vec<f64>, Vec<f64>)>;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TrainModel {
    pub weights: ModelWeights<f64>,
    /// Per ConvFlow, `SITES_PER_BODY` sites per body.
    pub norms: Vec<Vec<BnSite>>,
}

fn normalized_conv_bias(name: &str) -> bool {
    name.starts_with("convflow")
        && name.contains(".body")
        && name.ends_with(".bias")
        && [".expand.", ".depthwise.", ".project."].iter().any(|k| name.contains(k))
}

impl TrainModel {
    pub fn new(weights: ModelWeights<f64>) -> Self {
        let norms = weights
            .conv_flows
            .iter()
            .map(|f| {
                f.irb
                    .bodies
                    .iter()
                    .flat_map(|b| {
                        [
                            BnSite::new(b.expand.weight.rows()),
                            BnSite::new(b.depthwise.weight.rows()),
                            BnSite::new(b.project.weight.rows()),
                        ]
                    })
                    .collect()
            })
            .collect();
        Self { weights, norms }
    }

    /// Trainable scalars: every tensor except the biases of normalised
    /// convolutions, then each site's `gamma` and `beta`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.weights.visit("", &mut |name, _, data| {
            if !normalized_conv_bias(name) {
                out.extend_from_slice(data);
            }
        });
        for site in self.norms.iter().flatten() {
            out.extend_from_slice(&site.gamma);
            out.extend_from_slice(&site.beta);
        }
        out
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        let mut pos = 0;
        self.weights.visit_mut("", &mut |name, _, data| {
            if !normalized_conv_bias(name) {
                data.copy_from_slice(&theta[pos..pos + data.len()]);
                pos += data.len();
            }
        });
        for site in self.norms.iter_mut().flatten() {
            for v in [&mut site.gamma, &mut site.beta] {
                let n = v.len();
                v.copy_from_slice(&theta[pos..pos + n]);
                pos += n;
            }
        }
        debug_assert_eq!(pos, theta.len());
        self.weights.refresh()
    }

    /// Mean per-dimension negative log-likelihood of the batch with batch
    /// statistics in every normalisation site. Normalising constants of
    /// the prior are excluded. Observed statistics are appended to `stats`
    /// in site order.
    pub fn batch_nll(&self, batch: &[&Segment], mut stats: Option<&mut BatchStats>) -> Result<f64> {
        let w = &self.weights;
        let prior = Prior::of(w, false);
        let mut signals: Vec<Vec<f64>> = batch.iter().map(|s| s.audio.clone()).collect();
        let mut logdets = vec![0.0f64; batch.len()];
        if let Some(g) = &w.gru_flow {
            for ((sig, seg), ld) in signals.iter_mut().zip(batch).zip(logdets.iter_mut()) {
                let f = align_with_hop(&seg.features, g.window(), crate::HOP)?;
                let (z, d) = g.invert(&Windowed::new(g.window(), sig.clone())?, &f, &mut g.fresh_state())?;
                *sig = z.into_data();
                *ld += d;
            }
        }
        for (fi, flow) in w.conv_flows.iter().enumerate().rev() {
            let (width, half) = (flow.window(), flow.window() / 2);
            let mut a_parts = Vec::with_capacity(batch.len());
            let mut b_parts = Vec::with_capacity(batch.len());
            let mut inputs = Vec::with_capacity(batch.len());
            for (sig, seg) in signals.iter().zip(batch) {
                let lanes = Windowed::new(width, sig.clone())?.to_lanes();
                let unmixed = pointwise_conv(&lanes, flow.kernel_inverse(), &vec![0.0; width])?;
                let a = unmixed.slice_channels(0, half);
                let f = align_features_to_windows::<f64>(&seg.features, width)?;
                inputs.push(a.concat_channels(&f)?);
                b_parts.push(unmixed.slice_channels(half, half));
                a_parts.push(a);
            }
            let trunks = batched_trunk(&flow.irb, &self.norms[fi], inputs, stats.as_deref_mut())?;
            for (s, trunk) in trunks.iter().enumerate() {
                let out = flow.irb.head.forward(trunk)?;
                let windows = trunk.steps();
                let mut b = b_parts[s].clone();
                let mut log_s_sum = 0.0;
                for (k, v) in b.data_mut().iter_mut().enumerate() {
                    let (c, t) = (k / windows, k % windows);
                    let ls = out.get(c, t);
                    *v = *v * ls.exp() + out.get(c + half, t);
                    log_s_sum += ls;
                }
                logdets[s] += log_s_sum - windows as f64 * flow.kernel_log_abs_det();
                signals[s] = Windowed::from_lanes(&a_parts[s].concat_channels(&b)?).into_data();
            }
        }
        let mut total = 0.0;
        for (z, ld) in signals.iter().zip(&logdets) {
            total += -(prior_logp(z, &prior)? + ld) / z.len() as f64;
        }
        Ok(total / batch.len() as f64)
    }

    /// Blends observed batch statistics into the running averages.
    pub fn update_running(&mut self, stats: &BatchStats, momentum: f64) {
        for (site, (mean, var)) in self.norms.iter_mut().flatten().zip(stats) {
            site.running = Some(match site.running.take() {
                None => (mean.clone(), var.clone()),
                Some((m, v)) => (
                    m.iter().zip(mean).map(|(a, b)| momentum * a + (1.0 - momentum) * b).collect(),
                    v.iter().zip(var).map(|(a, b)| momentum * a + (1.0 - momentum) * b).collect(),
                ),
            });
        }
    }

    /// Inference weights with every observed normalisation folded into the
    /// preceding convolution.
    pub fn export(&self) -> Result<ModelWeights<f64>> {
        let mut w = self.weights.clone();
        for (flow, sites) in w.conv_flows.iter_mut().zip(&self.norms) {
            for (body, trio) in flow.irb.bodies.iter_mut().zip(sites.chunks(SITES_PER_BODY)) {
                fold(&mut body.expand.weight, &mut body.expand.bias, &trio[0]);
                fold(&mut body.depthwise.weight, &mut body.depthwise.bias, &trio[1]);
                fold(&mut body.project.weight, &mut body.project.bias, &trio[2]);
            }
        }
        w.refresh()?;
        Ok(w)
    }
}

fn fold(weight: &mut crate::kernels::Matrix<f64>, bias: &mut [f64], site: &BnSite) {
    let Some((mean, var)) = &site.running else { return };
    let cols = weight.cols();
    for r in 0..weight.rows() {
        let scale = site.gamma[r] / (var[r] + BN_EPSILON).sqrt();
        for c in 0..cols {
            weight.set(r, c, weight.get(r, c) * scale);
        }
        bias[r] = scale * (bias[r] - mean[r]) + site.beta[r];
    }
}

fn batch_norm(parts: &mut [Tensor1D<f64>], site: &BnSite, stats: Option<&mut BatchStats>) {
    let channels = parts[0].channels();
    let count: usize = parts.iter().map(|p| p.steps()).sum();
    let mut mean = vec![0.0; channels];
    let mut var = vec![0.0; channels];
    for c in 0..channels {
        let m = parts.iter().flat_map(|p| p.channel(c)).sum::<f64>() / count as f64;
        let v = parts
            .iter()
            .flat_map(|p| p.channel(c))
            .map(|x| (x - m) * (x - m))
            .sum::<f64>()
            / count as f64;
        mean[c] = m;
        var[c] = v;
    }
    for p in parts.iter_mut() {
        let steps = p.steps();
        for (k, x) in p.data_mut().iter_mut().enumerate() {
            let c = k / steps;
            *x = site.gamma[c] * (*x - mean[c]) / (var[c] + BN_EPSILON).sqrt() + site.beta[c];
        }
    }
    if let Some(s) = stats {
        s.push((mean, var));
    }
}

fn batched_trunk(
    irb: &IrbParams<f64>,
    sites: &[BnSite],
    inputs: Vec<Tensor1D<f64>>,
    mut stats: Option<&mut BatchStats>,
) -> Result<Vec<Tensor1D<f64>>> {
    let act = irb.activation;
    let mut h: Vec<Tensor1D<f64>> = inputs
        .iter()
        .map(|x| irb.input.forward(x))
        .collect::<Result<_>>()?;
    for (body, trio) in irb.bodies.iter().zip(sites.chunks(SITES_PER_BODY)) {
        let mut e: Vec<_> = h.iter().map(|x| body.expand.forward(x)).collect::<Result<_>>()?;
        batch_norm(&mut e, &trio[0], stats.as_deref_mut());
        e.iter_mut()
            .for_each(|t| t.data_mut().iter_mut().for_each(|v| *v = act.apply(*v)));
        let zero = Tensor1D::zeros(body.depthwise.weight.rows(), DW_HISTORY);
        let mut d: Vec<_> = e
            .iter()
            .map(|x| depthwise_conv3(x, &body.depthwise.weight, &body.depthwise.bias, &zero))
            .collect::<Result<_>>()?;
        batch_norm(&mut d, &trio[1], stats.as_deref_mut());
        d.iter_mut()
            .for_each(|t| t.data_mut().iter_mut().for_each(|v| *v = act.apply(*v)));
        let mut p: Vec<_> = d.iter().map(|x| body.project.forward(x)).collect::<Result<_>>()?;
        batch_norm(&mut p, &trio[2], stats.as_deref_mut());
        for (hs, ps) in h.iter_mut().zip(&p) {
            hs.data_mut().iter_mut().zip(ps.data()).for_each(|(a, b)| *a += b);
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FlowConfig;
    use crate::trainer::dataset::{ToyDataset, ToyVariant};
    use crate::trainer::nll_loss;

    fn fixture() -> (TrainModel, ToyDataset) {
        let w = ModelWeights::<f64>::random(FlowConfig::micro(), 4, 0.3).unwrap();
        let d = ToyDataset::sines(4, 256, 19, ToyVariant::Clean, 2).unwrap();
        (TrainModel::new(w), d)
    }

    #[test]
    fn params_round_trip() {
        let (mut m, _) = fixture();
        let before = m.clone();
        let p = m.params();
        m.set_params(&p).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn export_without_observations_is_unchanged() {
        let (m, _) = fixture();
        assert_eq!(m.export().unwrap(), m.weights);
    }

    #[test]
    fn folded_single_segment_matches_batch_mode() {
        // With one segment and running stats equal to that segment's batch
        // statistics, inference on the folded model reproduces the
        // training-mode loss.
        let (mut m, d) = fixture();
        let seg = &d.segments()[0];
        let mut stats = Vec::new();
        let train = m.batch_nll(&[seg], Some(&mut stats)).unwrap();
        m.update_running(&stats, 0.9);
        let folded = m.export().unwrap();
        let eval = nll_loss(std::slice::from_ref(seg), &folded).unwrap();
        assert!((train - eval).abs() < 1e-9, "{train} vs {eval}");
    }
}
