use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fbwave::costmodel::{compare_baselines, count_macs, family_search, SearchBounds};
use fbwave::io::{read_features, read_wav, write_features, write_trace, write_wav};
use fbwave::likelihood::{log_likelihood, Prior, DEFAULT_TEMPERATURE};
use fbwave::model::{load_weights, save_weights};
use fbwave::streaming::synthesize_seeded;
use fbwave::trainer::{micro_fixture, nll_loss, train, ToyDataset, ToyVariant, TrainConfig};
use fbwave::verify::{discontinuity_probe, logdet_check, probe_config, round_trip_error};
use fbwave::{Error, FlowConfig, ModelWeights, StreamState, HOP};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "fbwave", version, about = "Hybrid normalizing-flow vocoder")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize a WAV file from a feature file.
    Synth {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
        temperature: f64,
        /// Stream the features in chunks of this many frames.
        #[arg(long)]
        chunk_frames: Option<usize>,
    },
    /// Print the log-likelihood of a WAV file under a model.
    Score {
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        audio: PathBuf,
    },
    /// Run round-trip and Jacobian checks plus the spectral probe.
    Verify {
        #[command(flatten)]
        model: ModelSource,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Report multiply-accumulates per second of audio.
    Cost {
        #[command(flatten)]
        model: ModelSource,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Find a configuration with a given cost.
    Family {
        #[arg(long)]
        target_gmacs: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Train the ConvFlow-only micro model on synthetic tones.
    TrainDemo {
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Loss trace path; defaults to the weights path with `.trace.txt`.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Write a weight file.
    Init {
        /// Preset (`default`, `micro`, `probe`, `probe-gru`) or a TOML file.
        #[arg(long, default_value = "default")]
        config: String,
        #[arg(long, value_enum, default_value_t = InitKind::Init)]
        kind: InitKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Weight range for `--kind random`.
        #[arg(long, default_value_t = 0.3)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a feature file of synthetic tone features.
    ToyFeatures {
        #[arg(long)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 19)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct ModelSource {
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Preset (`default`, `micro`, `probe`, `probe-gru`) or a TOML file.
    #[arg(long)]
    config: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Kv,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitKind {
    Identity,
    Init,
    Random,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Singular { .. } | Error::Diverged { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

fn resolve_config(name: &str) -> Result<FlowConfig, Error> {
    let cfg = match name {
        "default" => FlowConfig::default(),
        "micro" => FlowConfig::micro(),
        "probe" => probe_config(false),
        "probe-gru" => probe_config(true),
        path => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{path}: {e}")))?
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

fn model_config(src: &ModelSource) -> Result<FlowConfig, Error> {
    match (&src.weights, &src.config) {
        (Some(p), _) => Ok(*load_weights(p)?.config()),
        (None, Some(c)) => resolve_config(c),
        (None, None) => unreachable!("clap enforces one source"),
    }
}

fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Synth {
            weights,
            features,
            out,
            seed,
            temperature,
            chunk_frames,
        } => synth(&weights, &features, &out, seed, temperature, chunk_frames),
        Command::Score {
            weights,
            features,
            audio,
        } => {
            let w = load_weights(&weights)?;
            let feat = read_features(&features)?;
            let x = read_wav(&audio)?;
            let ll = log_likelihood(&x, &feat, &w, &Prior::of(&w, true))?;
            println!("total={}", ll.total);
            println!("per_dim={}", ll.per_dim);
            println!("prior={}", ll.prior_term);
            println!("logdet={}", ll.logdet_term);
            Ok(())
        }
        Command::Verify { model, trials, seed } => verify(&model, trials, seed),
        Command::Cost { model, format } => {
            let report = count_macs(&model_config(&model)?)?;
            match format {
                Format::Table => println!("{report}"),
                Format::Kv => print!("{}", report.to_key_values()),
            }
            Ok(())
        }
        Command::Family { target_gmacs, format } => {
            let m = family_search(target_gmacs, &SearchBounds::default(), &FlowConfig::default())?;
            let c = &m.config;
            let ratios = compare_baselines(m.report.total_gmacs());
            match format {
                Format::Table => {
                    println!("{}: k={} W={} W_g={} C={} E={} H={}", m.name, c.n_convflows, c.window, c.gru_window, c.channels, c.expansion, c.hidden);
                    println!("{}", m.report);
                    for r in ratios {
                        println!("{:<16} {:>8.1} GMACs  {:>7.1}x", r.name, r.gmacs, r.ratio);
                    }
                }
                Format::Kv => {
                    println!("name={}", m.name);
                    for (k, v) in [
                        ("k", c.n_convflows),
                        ("W", c.window),
                        ("W_g", c.gru_window),
                        ("C", c.channels),
                        ("E", c.expansion),
                        ("H", c.hidden),
                    ] {
                        println!("config.{k}={v}");
                    }
                    print!("{}", m.report.to_key_values());
                    for r in ratios {
                        println!("ratio.{}={:.1}", r.name, r.ratio);
                    }
                }
            }
            Ok(())
        }
        Command::TrainDemo {
            steps,
            seed,
            out,
            trace,
        } => train_demo(steps, seed, &out, trace),
        Command::Init {
            config,
            kind,
            seed,
            scale,
            out,
        } => {
            let cfg = resolve_config(&config)?;
            let w = match kind {
                InitKind::Identity => ModelWeights::<f32>::identity(cfg)?,
                InitKind::Init => ModelWeights::init(cfg, seed)?,
                InitKind::Random => ModelWeights::random(cfg, seed, scale)?,
            };
            save_weights(&w, &out)?;
            println!("parameters={}", w.parameter_count());
            Ok(())
        }
        Command::ToyFeatures { frames, seed, dim, out } => {
            if frames == 0 {
                return Err(Failure::Usage("--frames must be positive".into()));
            }
            let d = ToyDataset::sines(1, frames * HOP, dim, ToyVariant::Clean, seed)?;
            write_features(&out, &d.segments()[0].features)?;
            Ok(())
        }
    }
}

fn synth(weights: &Path, features: &Path, out: &Path, seed: u64, temperature: f64, chunk: Option<usize>) -> CliResult {
    let w = load_weights(weights)?;
    let feat = read_features(features)?;
    let audio = match chunk {
        None => synthesize_seeded(&w, &feat, seed, temperature)?,
        Some(0) => return Err(Failure::Usage("--chunk-frames must be positive".into())),
        Some(n) => {
            let mut s = StreamState::open(&w, seed, temperature)?;
            let mut audio = Vec::with_capacity(feat.frames() * HOP);
            let mut start = 0;
            while start < feat.frames() {
                let len = n.min(feat.frames() - start);
                audio.extend(s.push(&w, &feat.slice_frames(start, len))?);
                start += len;
            }
            s.close();
            audio
        }
    };
    write_wav(out, &audio)?;
    println!("samples={}", audio.len());
    Ok(())
}

fn verify(src: &ModelSource, trials: usize, seed: u64) -> CliResult {
    let base = match &src.weights {
        Some(p) => Some(load_weights(p)?),
        None => None,
    };
    let cfg = model_config(src)?;
    let mut max_rt = 0.0f64;
    let mut max_ld = 0.0f64;
    for t in 0..trials.max(1) as u64 {
        let w = match &base {
            Some(w) => w.clone(),
            None => ModelWeights::<f32>::random(cfg, seed + t, 0.3)?,
        };
        max_rt = max_rt.max(round_trip_error(&w, 2, seed + t)? as f64);
        let check = logdet_check(&w.cast::<f64>(), 16, seed + t)?;
        max_ld = max_ld.max(check.error());
    }
    println!("max_round_trip_error={max_rt:e}");
    println!("max_logdet_error={max_ld:e}");
    let probe = discontinuity_probe(seed)?;
    println!("probe.convflow_only_peak_ratio={:.4}", probe.convflow_only);
    println!("probe.with_gruflow_peak_ratio={:.4}", probe.with_gruflow);
    if max_rt < TOLERANCE && max_ld < TOLERANCE {
        println!("status=pass");
        Ok(())
    } else {
        println!("status=fail");
        Err(Failure::Numeric(format!("verification exceeded tolerance {TOLERANCE}")))
    }
}

fn train_demo(steps: usize, seed: u64, out: &Path, trace: Option<PathBuf>) -> CliResult {
    let cfg = TrainConfig {
        steps,
        seed,
        ..TrainConfig::default()
    };
    let data = ToyDataset::sines(32, cfg.segment_len, micro_fixture().feature_dim, ToyVariant::Clean, seed)?;
    let start = ModelWeights::<f64>::init(micro_fixture(), seed)?;
    let initial = nll_loss(data.segments(), &start)?;
    let outcome = train(&data, &cfg, &start)?;
    let fin = nll_loss(data.segments(), &outcome.weights)?;
    save_weights(&outcome.weights.cast::<f32>(), out)?;
    let trace_path = trace.unwrap_or_else(|| {
        let mut p = out.as_os_str().to_owned();
        p.push(".trace.txt");
        PathBuf::from(p)
    });
    write_trace(&trace_path, &outcome.trace)?;
    println!("initial_nll={initial}");
    println!("final_nll={fin}");
    println!("trace={}", trace_path.display());
    Ok(())
}
