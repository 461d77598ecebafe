//! Command-line entry point: dataset synthesis, denoising, benchmarking,
//! ECG conditioning, streaming, and single-case reports.
//!
//! Exit codes: 0 success, 2 configuration error, 3 I/O error,
//! 4 adaptive-filter divergence.
//!
//! The environment variable `ANC_DSP_COEFF_DIR` overrides the embedded
//! filter coefficient sets with `<dir>/<name>.sos` files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cardiofilt::adaptive::{run_filter, AdaptiveConfig, FilterVariant};
use cardiofilt::bench::{
    report_case, run_experiment, select_burst_subset, BurstDetector, ExperimentConfig,
};
use cardiofilt::error::Error;
use cardiofilt::metrics::{evaluate, MetricsRecord};
use cardiofilt::resample::DecimatorSpec;
use cardiofilt::signal::{ReferenceSignal, Signal};
use cardiofilt::sosfilt::{designs, SosCascade};
use cardiofilt::stream::{stream_process, StreamConfig};
use cardiofilt::synth::{generate_dataset, DatasetManifest, SynthConfig};
use cardiofilt::wav;

const COEFF_DIR_ENV: &str = "ANC_DSP_COEFF_DIR";

#[derive(Parser)]
#[command(
    name = "cardiofilt",
    about = "Adaptive noise cancellation for heart-sound and ECG recordings",
    version,
    after_help = "Environment:\n  ANC_DSP_COEFF_DIR  directory of <name>.sos files overriding the built-in filter designs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a noisy evaluation dataset from clean and noise recordings.
    Synth(SynthArgs),
    /// Denoise one recording with an adaptive canceller.
    Denoise(DenoiseArgs),
    /// Compare filter configurations over a generated dataset.
    Bench(BenchArgs),
    /// Emit a single-entry case report (traces, spectrograms, metrics).
    Case(CaseArgs),
    /// Run the ECG conditioning chain over a 500 Hz recording.
    Ecg(EcgArgs),
    /// Stream a recording through the real-time block pipeline.
    Stream(StreamArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Directory with clean/normal and clean/abnormal WAV subdirectories.
    #[arg(long)]
    clean: PathBuf,
    /// Directory of noise WAV recordings.
    #[arg(long)]
    noise: PathBuf,
    /// Output directory for WAV triples and manifest.csv.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = -10.0)]
    snr_min: f64,
    #[arg(long, default_value_t = 5.0)]
    snr_max: f64,
    /// Noise-path denominator, comma separated (leading 1).
    #[arg(long, default_value = "1,-0.5", value_parser = parse_coeffs)]
    ar_coeffs: std::vec::Vec<f64>,
    /// Reference-path FIR taps, comma separated.
    #[arg(long, default_value = "2.5,-2,1,-0.5", value_parser = parse_coeffs)]
    ma_coeffs: std::vec::Vec<f64>,
    /// Worker threads (0 = serial).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Clone)]
struct FilterArgs {
    /// lms, nlms or ba-nlms.
    #[arg(long, default_value = "ba-nlms")]
    variant: FilterVariant,
    #[arg(long, default_value_t = 10)]
    taps: usize,
    #[arg(long, default_value_t = 0.05)]
    mu0: f64,
    #[arg(long, default_value_t = 0.001)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.99)]
    alpha: f64,
    #[arg(long, default_value_t = 5.0)]
    eta: f64,
    #[arg(long, default_value_t = 6.0)]
    beta: f64,
}

impl FilterArgs {
    fn to_config(&self) -> AdaptiveConfig {
        AdaptiveConfig {
            variant: self.variant,
            filter_length: self.taps,
            mu0: self.mu0,
            epsilon: self.epsilon,
            alpha: self.alpha,
            eta: self.eta,
            beta: self.beta,
        }
    }

    fn echo(&self, out: &mut String) {
        let _ = writeln!(out, "variant = {}", self.variant);
        let _ = writeln!(out, "taps = {}", self.taps);
        let _ = writeln!(out, "mu0 = {}", self.mu0);
        let _ = writeln!(out, "epsilon = {}", self.epsilon);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "eta = {}", self.eta);
        let _ = writeln!(out, "beta = {}", self.beta);
    }
}

#[derive(Args)]
struct DenoiseArgs {
    /// Noisy primary recording (WAV).
    #[arg(long)]
    input: PathBuf,
    /// Noise reference recording (WAV; channels are averaged).
    #[arg(long)]
    reference: PathBuf,
    /// Denoised output (WAV, 32-bit float).
    #[arg(long)]
    out: PathBuf,
    /// Clean ground truth; when given, metrics are written next to the
    /// output.
    #[arg(long)]
    clean: Option<PathBuf>,
    /// Apply the 20-200 Hz heart-sound band-pass after cancellation.
    #[arg(long)]
    post_bandpass: bool,
    /// Override the WAV header sample rate (Hz).
    #[arg(long)]
    rate_override: Option<f64>,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset manifest produced by `synth`.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for per_entry.csv and summary.csv.
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated filter list.
    #[arg(long, default_value = "lms,nlms,ba-nlms")]
    filters: String,
    #[arg(long)]
    post_bandpass: bool,
    /// Restrict to entries whose noise recording is burst-heavy.
    #[arg(long)]
    burst_only: bool,
    /// Burst detector: short-time energy max/median threshold.
    #[arg(long, default_value_t = 8.0)]
    burst_threshold: f64,
    /// Burst detector window (seconds).
    #[arg(long, default_value_t = 0.05)]
    burst_window_s: f64,
    /// Seconds to discard before scoring (0 = score everything).
    #[arg(long, default_value_t = 0.0)]
    transient_discard_s: f64,
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct CaseArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Manifest entry id.
    #[arg(long)]
    entry: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    post_bandpass: bool,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Args)]
struct EcgArgs {
    /// 500 Hz recording, WAV or single-column CSV.
    #[arg(long)]
    input: PathBuf,
    /// Filtered output; format follows the input extension.
    #[arg(long)]
    out: PathBuf,
    /// Sample rate for CSV input or to override the WAV header (Hz).
    #[arg(long)]
    rate_override: Option<f64>,
}

#[derive(Args)]
struct StreamArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    reference: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Timing report destination (key,value CSV).
    #[arg(long)]
    timing: Option<PathBuf>,
    /// Samples per block at the input rate.
    #[arg(long, default_value_t = 256)]
    block: usize,
    /// Decimate 8 kHz input to 2 kHz before cancellation.
    #[arg(long)]
    decimate: bool,
    #[arg(long)]
    post_bandpass: bool,
    /// Inline the producer instead of the double-buffered thread.
    #[arg(long)]
    single_thread: bool,
    #[arg(long)]
    rate_override: Option<f64>,
    #[command(flatten)]
    filter: FilterArgs,
}

fn parse_coeffs(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

fn coeff_dir_override() -> Option<PathBuf> {
    std::env::var_os(COEFF_DIR_ENV).map(PathBuf::from)
}

fn load_design(name: &str) -> Result<SosCascade, Error> {
    designs::load(name, coeff_dir_override().as_deref())
}

fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(Error::Divergence { .. }) => 4,
        Some(Error::Io(_)) | Some(Error::Wav(_)) => 3,
        Some(_) => 2,
        None => 2,
    }
}

fn write_echo(path: &Path, body: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(Error::Io)?;
        }
    }
    std::fs::write(path, body).map_err(Error::Io)?;
    Ok(())
}

fn echo_path_for_file(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".run_config.txt");
    out.with_file_name(name)
}

fn read_signal_wav(path: &Path, rate_override: Option<f64>) -> anyhow::Result<Signal> {
    let s = wav::read_wav(path)?;
    Ok(match rate_override {
        Some(rate) => Signal::new(s.into_samples(), rate)?,
        None => s,
    })
}

/// Read the reference channel; multi-channel recordings (e.g. a
/// microphone array) are averaged into one channel.
fn read_reference(path: &Path, rate_override: Option<f64>) -> anyhow::Result<ReferenceSignal> {
    let channels = wav::read_wav_channels(path)?;
    let avg = wav::average_channels(&channels)?;
    let avg = match rate_override {
        Some(rate) => Signal::new(avg.into_samples(), rate)?,
        None => avg,
    };
    Ok(ReferenceSignal::new(avg))
}

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let config = SynthConfig {
        seed: args.seed,
        snr_range_db: (args.snr_min, args.snr_max),
        ar_coeffs: args.ar_coeffs.clone(),
        ma_coeffs: args.ma_coeffs.clone(),
        jobs: args.jobs,
    };
    if !args.clean.is_dir() {
        return Err(Error::InvalidConfig(format!(
            "--clean {} is not a directory",
            args.clean.display()
        ))
        .into());
    }
    if !args.noise.is_dir() {
        return Err(Error::InvalidConfig(format!(
            "--noise {} is not a directory",
            args.noise.display()
        ))
        .into());
    }
    let manifest = generate_dataset(&args.clean, &args.noise, &args.out, &config)?;

    let mut echo = String::new();
    let _ = writeln!(echo, "command = synth");
    let _ = writeln!(echo, "clean = {}", args.clean.display());
    let _ = writeln!(echo, "noise = {}", args.noise.display());
    let _ = writeln!(echo, "out = {}", args.out.display());
    let _ = writeln!(echo, "seed = {}", args.seed);
    let _ = writeln!(echo, "snr_min = {}", args.snr_min);
    let _ = writeln!(echo, "snr_max = {}", args.snr_max);
    let _ = writeln!(echo, "ar_coeffs = {:?}", args.ar_coeffs);
    let _ = writeln!(echo, "ma_coeffs = {:?}", args.ma_coeffs);
    let _ = writeln!(echo, "jobs = {}", args.jobs);
    write_echo(&args.out.join("run_config.txt"), &echo)?;

    let failed = manifest.entries.iter().filter(|e| !e.is_ok()).count();
    println!(
        "generated {} entries ({} failed) -> {}",
        manifest.entries.len(),
        failed,
        args.out.join("manifest.csv").display()
    );
    Ok(())
}

fn cmd_denoise(args: &DenoiseArgs) -> anyhow::Result<()> {
    let config = args.filter.to_config();
    config.validate()?;
    let primary = read_signal_wav(&args.input, args.rate_override)?;
    let reference = read_reference(&args.reference, args.rate_override)?;
    let (denoised, _) = run_filter(&config, &primary, &reference)?;
    let denoised = if args.post_bandpass {
        let mut bp = load_design(designs::PCG_BANDPASS)?;
        bp.apply(&denoised)?
    } else {
        denoised
    };
    wav::write_wav_f32(&args.out, &denoised)?;

    let mut echo = String::new();
    let _ = writeln!(echo, "command = denoise");
    let _ = writeln!(echo, "input = {}", args.input.display());
    let _ = writeln!(echo, "reference = {}", args.reference.display());
    let _ = writeln!(echo, "out = {}", args.out.display());
    let _ = writeln!(echo, "post_bandpass = {}", args.post_bandpass);
    args.filter.echo(&mut echo);

    if let Some(clean_path) = &args.clean {
        let clean = read_signal_wav(clean_path, args.rate_override)?;
        let m = evaluate(&clean, &primary, &denoised)?;
        let metrics_path = args.out.with_extension("metrics.csv");
        std::fs::write(
            &metrics_path,
            format!("{}\n{}\n", MetricsRecord::CSV_HEADER, m.to_csv_row()),
        )
        .map_err(Error::Io)?;
        let _ = writeln!(echo, "clean = {}", clean_path.display());
        let _ = writeln!(echo, "metrics = {}", metrics_path.display());
        println!(
            "dSNR {:.3} dB, nmse {:.5}, cc {:.4}, nmae {:.5}",
            m.delta_snr_db, m.nmse, m.cc, m.nmae
        );
    }
    write_echo(&echo_path_for_file(&args.out), &echo)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn parse_filters(spec: &str) -> anyhow::Result<Vec<(String, AdaptiveConfig)>> {
    spec.split(',')
        .map(|name| {
            let name = name.trim();
            let variant: FilterVariant = name.parse()?;
            Ok((name.to_string(), AdaptiveConfig::new(variant)))
        })
        .collect()
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::read_csv(&args.manifest)?;
    let manifest = if args.burst_only {
        let subset = select_burst_subset(
            &manifest,
            &BurstDetector {
                window_s: args.burst_window_s,
                max_median_ratio: args.burst_threshold,
            },
        )?;
        if let Some(warning) = &subset.warning {
            eprintln!("warning: {warning}");
        }
        subset.manifest
    } else {
        manifest
    };
    let config = ExperimentConfig {
        filters: parse_filters(&args.filters)?,
        post_filter: args.post_bandpass,
        transient_discard_s: args.transient_discard_s,
        jobs: args.jobs,
    };
    let report = run_experiment(&manifest, &config, Some(&args.out))?;

    let mut echo = String::new();
    let _ = writeln!(echo, "command = bench");
    let _ = writeln!(echo, "manifest = {}", args.manifest.display());
    let _ = writeln!(echo, "out = {}", args.out.display());
    let _ = writeln!(echo, "filters = {}", args.filters);
    let _ = writeln!(echo, "post_bandpass = {}", args.post_bandpass);
    let _ = writeln!(echo, "burst_only = {}", args.burst_only);
    let _ = writeln!(echo, "burst_threshold = {}", args.burst_threshold);
    let _ = writeln!(echo, "burst_window_s = {}", args.burst_window_s);
    let _ = writeln!(echo, "transient_discard_s = {}", args.transient_discard_s);
    let _ = writeln!(echo, "jobs = {}", args.jobs);
    write_echo(&args.out.join("run_config.txt"), &echo)?;

    println!("{}", report.summary_csv());
    if report.diverged > 0 {
        eprintln!(
            "warning: {} (entry, filter) runs diverged and were excluded from aggregates",
            report.diverged
        );
    }
    Ok(())
}

fn cmd_case(args: &CaseArgs) -> anyhow::Result<()> {
    let manifest = DatasetManifest::read_csv(&args.manifest)?;
    let config = args.filter.to_config();
    let report = report_case(&manifest, &args.entry, &config, args.post_bandpass, &args.out)?;

    let mut echo = String::new();
    let _ = writeln!(echo, "command = case");
    let _ = writeln!(echo, "manifest = {}", args.manifest.display());
    let _ = writeln!(echo, "entry = {}", args.entry);
    let _ = writeln!(echo, "out = {}", args.out.display());
    let _ = writeln!(echo, "post_bandpass = {}", args.post_bandpass);
    args.filter.echo(&mut echo);
    write_echo(&args.out.join("run_config.txt"), &echo)?;

    println!(
        "dSNR {:.3} dB, cc {:.4}, burst gate fired on {} samples",
        report.metrics.delta_snr_db, report.metrics.cc, report.burst_samples
    );
    Ok(())
}

fn read_csv_signal(path: &Path, rate: f64) -> anyhow::Result<Signal> {
    let text = std::fs::read_to_string(path).map_err(Error::Io)?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => samples.push(v),
            // a single header line is tolerated
            Err(_) if i == 0 => continue,
            Err(e) => {
                return Err(Error::InvalidConfig(format!(
                    "{}:{}: bad sample '{t}': {e}",
                    path.display(),
                    i + 1
                ))
                .into())
            }
        }
    }
    Ok(Signal::new(samples, rate)?)
}

fn write_csv_signal(path: &Path, signal: &Signal) -> anyhow::Result<()> {
    let mut out = String::with_capacity(signal.len() * 20);
    for v in signal.samples() {
        let _ = writeln!(out, "{v:?}");
    }
    std::fs::write(path, out).map_err(Error::Io)?;
    Ok(())
}

fn cmd_ecg(args: &EcgArgs) -> anyhow::Result<()> {
    let is_csv = args
        .input
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    let rate = args.rate_override.unwrap_or(500.0);
    let input = if is_csv {
        read_csv_signal(&args.input, rate)?
    } else {
        read_signal_wav(&args.input, args.rate_override)?
    };

    // honor ANC_DSP_COEFF_DIR by loading each stage explicitly
    let mut hp = load_design(designs::ECG_HIGHPASS)?;
    let mut lp = load_design(designs::ECG_LOWPASS)?;
    let mut bs = load_design(designs::ECG_BANDSTOP)?;
    let filtered = bs.apply(&lp.apply(&hp.apply(&input)?)?)?;

    let out_csv = args
        .out
        .extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false);
    if out_csv {
        write_csv_signal(&args.out, &filtered)?;
    } else {
        wav::write_wav_f32(&args.out, &filtered)?;
    }

    let mut echo = String::new();
    let _ = writeln!(echo, "command = ecg");
    let _ = writeln!(echo, "input = {}", args.input.display());
    let _ = writeln!(echo, "out = {}", args.out.display());
    let _ = writeln!(echo, "rate = {rate}");
    write_echo(&echo_path_for_file(&args.out), &echo)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_stream(args: &StreamArgs) -> anyhow::Result<()> {
    let primary = read_signal_wav(&args.input, args.rate_override)?;
    let reference = read_reference(&args.reference, args.rate_override)?;
    let config = StreamConfig {
        block_size: args.block,
        decimator: if args.decimate {
            Some(DecimatorSpec::new(4, load_design(designs::DECIM_8K_TO_2K)?)?)
        } else {
            None
        },
        adaptive: args.filter.to_config(),
        post_filter: if args.post_bandpass {
            Some(load_design(designs::PCG_BANDPASS)?)
        } else {
            None
        },
        threaded: !args.single_thread,
    };
    let (denoised, timing) = stream_process(&config, &primary, &reference)?;
    wav::write_wav_f32(&args.out, &denoised)?;
    if let Some(timing_path) = &args.timing {
        std::fs::write(timing_path, timing.to_csv()).map_err(Error::Io)?;
    }

    let mut echo = String::new();
    let _ = writeln!(echo, "command = stream");
    let _ = writeln!(echo, "input = {}", args.input.display());
    let _ = writeln!(echo, "reference = {}", args.reference.display());
    let _ = writeln!(echo, "out = {}", args.out.display());
    let _ = writeln!(echo, "block = {}", args.block);
    let _ = writeln!(echo, "decimate = {}", args.decimate);
    let _ = writeln!(echo, "post_bandpass = {}", args.post_bandpass);
    let _ = writeln!(echo, "single_thread = {}", args.single_thread);
    args.filter.echo(&mut echo);
    write_echo(&echo_path_for_file(&args.out), &echo)?;

    println!(
        "wrote {} (real-time factor {:.5}, {} deadline misses over {} blocks)",
        args.out.display(),
        timing.real_time_factor(),
        timing.deadline_misses,
        timing.block_times_s.len()
    );
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Denoise(args) => cmd_denoise(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Case(args) => cmd_case(args),
        Command::Ecg(args) => cmd_ecg(args),
        Command::Stream(args) => cmd_stream(args),
    };
    if let Err(err) = result {
        eprintln!("error: {err:#}");
        std::process::exit(exit_code(&err));
    }
}
