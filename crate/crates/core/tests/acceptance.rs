//! Acceptance suite. Runs every criterion at its stated tolerance and
//! prints one PASS/FAIL line each; exits non-zero if any gated criterion
//! fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fbwave::costmodel::{compare_baselines, count_macs, family_search, instrumented_macs, SearchBounds};
use fbwave::model::{analyze, from_bytes, synthesize, to_bytes};
use fbwave::streaming::synthesize_seeded;
use fbwave::trainer::{format_trace, micro_fixture, nll_loss, train, ToyDataset, ToyVariant, TrainConfig};
use fbwave::verify::{discontinuity_probe, logdet_check, probe_config, round_trip_error, round_trip_error_on};
use fbwave::likelihood::log_likelihood;
use fbwave::{Error, FeatureTrack, FlowConfig, LoadError, ModelWeights, Prior, PriorKind, StreamState, HOP};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn random_micro(rng: &mut ChaCha8Rng) -> FlowConfig {
    loop {
        let cfg = FlowConfig {
            window: [4, 8, 16][rng.random_range(0..3)],
            gru_window: [2, 4][rng.random_range(0..2)],
            n_convflows: [1, 2, 4][rng.random_range(0..3)],
            channels: [2, 4, 8][rng.random_range(0..3)],
            expansion: rng.random_range(1..=2),
            hidden: [4, 8][rng.random_range(0..2)],
            gruflow: true,
            ..FlowConfig::micro()
        };
        if cfg.validate().is_ok() {
            return cfg;
        }
    }
}

fn invertibility() -> Result<Outcome, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f32;
    for trial in 0..20 {
        let cfg = random_micro(&mut rng);
        let w = ModelWeights::<f32>::random(cfg, trial, 0.3)?;
        worst = worst.max(round_trip_error(&w, 2, trial)?);
    }
    Ok(outcome(worst < 1e-4, format!("20 random micro configs, max |z' - z| = {worst:.3e} (< 1e-4)")))
}

fn jacobian_oracle() -> Result<Outcome, Error> {
    let cases = [
        ("ConvFlow-only", FlowConfig { n_convflows: 2, gruflow: false, ..FlowConfig::micro() }),
        ("GRUFlow-only", FlowConfig { n_convflows: 0, gru_window: 2, gruflow: true, ..FlowConfig::micro() }),
        ("composed", FlowConfig { n_convflows: 1, gru_window: 2, gruflow: true, ..FlowConfig::micro() }),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (name, cfg) in cases {
        let mut case_worst = 0.0f64;
        let mut dim = 0;
        for seed in 0..3 {
            let w = ModelWeights::<f64>::random(cfg, 100 + seed, 0.3)?;
            let c = logdet_check(&w, 32, seed)?;
            dim = c.dimension;
            case_worst = case_worst.max(c.error());
        }
        worst = worst.max(case_worst);
        parts.push(format!("{name} (T={dim}) {case_worst:.2e}"));
    }
    Ok(outcome(
        worst < 1e-4,
        format!("|logdet - log|det J_fd|| max {worst:.2e} (< 1e-4): {}", parts.join(", ")),
    ))
}

fn streaming_equivalence() -> Result<Outcome, Error> {
    let cfg = FlowConfig {
        n_convflows: 2,
        window: 8,
        gru_window: 4,
        gruflow: true,
        ..FlowConfig::micro()
    };
    let w = ModelWeights::<f32>::random(cfg, 7, 0.3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut mismatches = 0;
    for seq in 0..100u64 {
        let frames = rng.random_range(1..=16);
        let values = (0..frames * cfg.feature_dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
        let feat = FeatureTrack::new(frames, cfg.feature_dim, values)?;
        let offline = synthesize_seeded(&w, &feat, seq, 0.7)?;
        let mut s = StreamState::open(&w, seq, 0.7)?;
        let mut streamed = Vec::new();
        let mut start = 0;
        while start < frames {
            let len = rng.random_range(0..=(frames - start).min(5));
            streamed.extend(s.push(&w, &feat.slice_frames(start, len))?);
            start += len;
        }
        let summary = s.close();
        if streamed != offline || summary.samples_emitted != (frames * HOP) as u64 {
            mismatches += 1;
        }
    }
    Ok(outcome(mismatches == 0, format!("100 random sequences and chunkings, {mismatches} not bit-identical")))
}

fn cost_model() -> Result<Outcome, Error> {
    // 24000 samples is not a whole number of 128-sample frames, so the
    // counted run covers two seconds (375 frames) and is compared with twice
    // the per-second figure.
    let configs = [
        FlowConfig::default(),
        FlowConfig::micro(),
        probe_config(false),
        probe_config(true),
        FlowConfig {
            n_convflows: 2,
            window: 32,
            gru_window: 8,
            channels: 24,
            expansion: 3,
            hidden: 40,
            irb_bodies: 1,
            ..FlowConfig::default()
        },
    ];
    let mut exact = 0;
    for cfg in &configs {
        let report = count_macs(cfg)?;
        let counted = instrumented_macs(cfg, 375)?;
        let analytic = report.for_samples(375 * HOP);
        if counted == analytic && 2.0 * report.total() == analytic as f64 {
            exact += 1;
        } else {
            println!("    mismatch: analytic {analytic} vs counted {counted}");
        }
    }
    let mut hits = Vec::new();
    let mut family_ok = true;
    for target in [4.6, 1.7] {
        let m = family_search(target, &SearchBounds::default(), &FlowConfig::default())?;
        let got = m.report.total_gmacs();
        family_ok &= (got - target).abs() / target <= 0.02;
        hits.push(format!("{} = {got:.4} GMACs", m.name));
    }
    let r46 = compare_baselines(4.6)[0].ratio;
    let r17 = compare_baselines(1.7)[0].ratio;
    let ratios_ok = format!("{r46:.1}") == "40.1" && format!("{r17:.1}") == "108.6" && r46.round() == 40.0 && r17.round() == 109.0;
    Ok(outcome(
        exact == configs.len() && family_ok && ratios_ok,
        format!(
            "{exact}/{} configs exact; {}; WaveRNN ratios {r46:.1}x and {r17:.1}x",
            configs.len(),
            hits.join(", ")
        ),
    ))
}

fn micro_training() -> Result<Outcome, Error> {
    let cfg = TrainConfig::default();
    let fixture = micro_fixture();
    let data = ToyDataset::sines(32, cfg.segment_len, fixture.feature_dim, ToyVariant::Clean, 0)?;
    let start = ModelWeights::<f64>::init(fixture, 0)?;
    let initial = nll_loss(data.segments(), &start)?;
    let a = train(&data, &cfg, &start)?;
    let b = train(&data, &cfg, &start)?;
    let fin = nll_loss(data.segments(), &a.weights)?;
    let deterministic = format_trace(&a.trace) == format_trace(&b.trace) && a.weights == b.weights;
    // The trained model is checked on the latents it assigns to the toy
    // audio. Prior draws fall outside the coefficient network's training
    // domain (see README); their round trip is reported, not gated.
    let trained = a.weights.cast::<f32>();
    let mut rt = 0.0f32;
    for seg in data.segments() {
        let x: Vec<f32> = seg.audio.iter().map(|&v| v as f32).collect();
        let z = analyze(&x, &seg.features, &trained)?.z;
        let back = analyze(&synthesize(&z, &seg.features, &trained)?, &seg.features, &trained)?.z;
        rt = back.iter().zip(&z).map(|(p, q)| (p - q).abs()).fold(rt, f32::max);
    }
    let prior_rt = round_trip_error_on(&trained, &data.segments()[0].features, 0)?;
    let drop = initial - fin;
    Ok(outcome(
        drop >= 0.3 && deterministic && rt < 1e-4,
        format!(
            "per-dim NLL {initial:.4} -> {fin:.4} (drop {drop:.4} >= 0.3), deterministic={deterministic}, trained round trip on the 32 toy latents {rt:.2e} (< 1e-4); unit-prior latents (not gated) {prior_rt:.2e}"
        ),
    ))
}

fn serialization() -> Result<Outcome, Error> {
    let w = ModelWeights::<f32>::random(FlowConfig { gruflow: true, n_convflows: 2, ..FlowConfig::micro() }, 5, 0.5)?;
    let bytes = to_bytes(&w);
    let back = from_bytes(&bytes)?;
    let exact = to_bytes(&back) == bytes && back == w;

    let mut magic = bytes.clone();
    magic[0] ^= 0xff;
    let bad_magic = matches!(from_bytes(&magic), Err(Error::Load(LoadError::BadMagic { .. })));
    let truncated = matches!(from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Load(LoadError::Truncated(_))));
    // Header claims two ConvFlows, file carries one.
    let one = ModelWeights::<f32>::random(FlowConfig { gruflow: true, n_convflows: 1, ..FlowConfig::micro() }, 5, 0.5)?;
    let mut short = to_bytes(&one);
    short[16..20].copy_from_slice(&2u32.to_le_bytes());
    let shape = matches!(from_bytes(&short), Err(Error::Load(LoadError::ShapeMismatch { .. })));
    Ok(outcome(
        exact && bad_magic && truncated && shape,
        format!("bit-exact={exact}, bad magic={bad_magic}, truncated={truncated}, shape mismatch={shape}"),
    ))
}

/// Final per-dimension NLL (normalising constants included, so the two
/// priors are comparable) after training on the heavy-tailed toy set.
fn prior_comparison() -> Result<(f64, f64), Error> {
    let cfg = TrainConfig::default();
    let data = ToyDataset::sines(32, cfg.segment_len, 19, ToyVariant::HeavyTailed, 5)?;
    let mut finals = Vec::new();
    for prior in [PriorKind::Laplace, PriorKind::Gaussian] {
        let fixture = FlowConfig { prior, ..micro_fixture() };
        let out = train(&data, &cfg, &ModelWeights::<f64>::init(fixture, 0)?)?;
        let p = Prior::of(&out.weights, true);
        let mut total = 0.0;
        for s in data.segments() {
            total -= log_likelihood(&s.audio, &s.features, &out.weights, &p)?.per_dim;
        }
        finals.push(total / data.len() as f64);
    }
    Ok((finals[0], finals[1]))
}

fn main() -> ExitCode {
    type Check = fn() -> Result<Outcome, Error>;
    let gated: [(&str, Check, Duration); 6] = [
        ("1 invertibility", invertibility, Duration::from_secs(60)),
        ("2 jacobian oracle", jacobian_oracle, Duration::from_secs(120)),
        ("3 streaming equivalence", streaming_equivalence, Duration::from_secs(60)),
        ("4 cost model", cost_model, Duration::from_secs(60)),
        ("5 micro training", micro_training, Duration::from_secs(600)),
        ("7 serialization", serialization, Duration::from_secs(60)),
    ];
    let mut failures = 0;
    for (name, check, budget) in gated {
        let t = Instant::now();
        let result = check();
        let elapsed = t.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed < budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failures += 1;
        }
        println!(
            "[{}] criterion {name}: {detail} [{:.1}s, budget {}s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }

    match discontinuity_probe(0) {
        Ok(p) => println!(
            "[{}] criterion 6 discontinuity probe (logged, not gated): 187.5 Hz peak-to-neighbour ratio {:.3} ConvFlow-only, {:.3} with GRUFlow ({})",
            if p.convflow_only > 1.0 { "PASS" } else { "FAIL" },
            p.convflow_only,
            p.with_gruflow,
            if p.with_gruflow < p.convflow_only { "reduced" } else { "not reduced" }
        ),
        Err(e) => println!("[FAIL] criterion 6 discontinuity probe (logged, not gated): error: {e}"),
    }

    match prior_comparison() {
        Ok((laplace, gaussian)) => println!(
            "[{}] soft check laplace vs gaussian prior (logged, not gated): heavy-tailed toy NLL with normalizers {laplace:.4} vs {gaussian:.4} (laplace <= gaussian + 0.1)",
            if laplace <= gaussian + 0.1 { "PASS" } else { "FAIL" }
        ),
        Err(e) => println!("[FAIL] soft check laplace vs gaussian prior (logged, not gated): error: {e}"),
    }

    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failures} gated criteria failed");
        ExitCode::FAILURE
    }
}
