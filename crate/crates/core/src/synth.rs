//! Noisy-dataset construction: clean recordings plus noise recordings
//! are combined into correlated (noisy, reference) pairs at controlled
//! SNR.
//!
//! Each noise recording is tiled to the clean length, then split into
//! two paths driven by the same samples: an all-pole (autoregressive)
//! path that produces the noise actually mixed into the clean recording,
//! and an FIR (moving-average) path that produces the reference channel
//! handed to the canceller. Every generated entry records its complete
//! recipe (source ids, path coefficients, target SNR, seed) in the
//! manifest so the dataset is reproducible from the manifest and source
//! files alone.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::signal::{signal_power, ReferenceSignal, Signal};
use crate::wav;

/// Default noise-path denominator: `1 / (1 - 0.5 z^-1)`.
pub const AR_DEFAULT: [f64; 2] = [1.0, -0.5];

/// Boxcar reference path: 10 equal taps of 0.1 (unit DC gain). This is
/// the module-level default. Note that the boxcar has zeros on the unit
/// circle, so a short canceller cannot fully invert it; experiment
/// configurations that want headline-scale suppression should prefer
/// [`MA_MINPHASE`].
pub const MA_BOXCAR: [f64; 10] = [0.1; 10];

/// Minimum-phase reference path (unit DC gain, zeros well inside the
/// unit circle), deconvolvable by a 10-tap canceller. Default for the
/// dataset generator and the experiment harness.
pub const MA_MINPHASE: [f64; 4] = [2.5, -2.0, 1.0, -0.5];

/// Recipe for one synthesized noisy recording.
#[derive(Debug, Clone, PartialEq)]
pub struct MixSpec {
    pub clean_id: String,
    pub noise_id: String,
    pub target_snr_db: f64,
    /// Seed that drove the SNR draw for this entry.
    pub seed: u64,
    /// Noise-path denominator coefficients, leading 1.
    pub ar_coeffs: Vec<f64>,
    /// Reference-path FIR taps.
    pub ma_coeffs: Vec<f64>,
}

impl MixSpec {
    pub fn validate(&self) -> Result<()> {
        validate_ar(&self.ar_coeffs)?;
        if self.ma_coeffs.is_empty() {
            return Err(Error::InvalidConfig("ma_coeffs must be non-empty".into()));
        }
        Ok(())
    }
}

fn validate_ar(ar: &[f64]) -> Result<()> {
    match ar {
        [] => Err(Error::InvalidConfig("ar_coeffs must be non-empty".into())),
        [a0, ..] if *a0 != 1.0 => Err(Error::InvalidConfig(format!(
            "ar_coeffs must start with 1.0, got {a0}"
        ))),
        [_] => Ok(()),
        [_, a1] => {
            if a1.abs() < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!("unstable AR: |{a1}| >= 1")))
            }
        }
        [_, a1, a2] => {
            if a2.abs() < 1.0 && a1.abs() < 1.0 + a2 {
                Ok(())
            } else {
                Err(Error::InvalidConfig(format!(
                    "unstable AR: a1={a1}, a2={a2}"
                )))
            }
        }
        _ => Err(Error::InvalidConfig(
            "ar_coeffs beyond order 2 are not supported".into(),
        )),
    }
}

/// Repeat a noise recording end-to-end and truncate to `target_len`.
pub fn tile_to_length(noise: &Signal, target_len: usize) -> Result<Signal> {
    if noise.is_empty() {
        return Err(Error::EmptySignal);
    }
    let src = noise.samples();
    let tiled: Vec<f64> = (0..target_len).map(|i| src[i % src.len()]).collect();
    Signal::new(tiled, noise.sample_rate_hz())
}

/// All-pole noise path `1 / A(z)` applied to the raw noise recording.
pub fn make_noise_path(raw_noise: &Signal, spec: &MixSpec) -> Result<Signal> {
    validate_ar(&spec.ar_coeffs)?;
    let fb = &spec.ar_coeffs[1..];
    let mut hist = vec![0.0; fb.len()];
    let mut out = Vec::with_capacity(raw_noise.len());
    for &x in raw_noise.samples() {
        let mut y = x;
        for (c, h) in fb.iter().zip(&hist) {
            y -= c * h;
        }
        for j in (1..hist.len()).rev() {
            hist[j] = hist[j - 1];
        }
        if let Some(h0) = hist.first_mut() {
            *h0 = y;
        }
        out.push(y);
    }
    Signal::new(out, raw_noise.sample_rate_hz())
}

/// Causal FIR reference path applied to the raw noise recording.
pub fn make_reference_path(raw_noise: &Signal, spec: &MixSpec) -> Result<ReferenceSignal> {
    if spec.ma_coeffs.is_empty() {
        return Err(Error::InvalidConfig("ma_coeffs must be non-empty".into()));
    }
    let taps = &spec.ma_coeffs;
    let mut hist = vec![0.0; taps.len()];
    let mut out = Vec::with_capacity(raw_noise.len());
    for &x in raw_noise.samples() {
        for j in (1..hist.len()).rev() {
            hist[j] = hist[j - 1];
        }
        hist[0] = x;
        let mut y = 0.0;
        for (c, h) in taps.iter().zip(&hist) {
            y += c * h;
        }
        out.push(y);
    }
    Ok(ReferenceSignal::new(Signal::new(
        out,
        raw_noise.sample_rate_hz(),
    )?))
}

/// Mix `noisy = clean + scale * noise` so the realized SNR equals the
/// target: `scale = sqrt(P_clean / (P_noise * 10^(target/10)))`.
pub fn mix_at_snr(clean: &Signal, noise: &Signal, target_snr_db: f64) -> Result<(Signal, f64)> {
    if clean.len() != noise.len() {
        return Err(Error::LengthMismatch {
            left: clean.len(),
            right: noise.len(),
        });
    }
    if clean.sample_rate_hz() != noise.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            expected: clean.sample_rate_hz(),
            actual: noise.sample_rate_hz(),
        });
    }
    let p_clean = signal_power(clean)?;
    let p_noise = signal_power(noise)?;
    if p_clean == 0.0 || p_noise == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let scale = (p_clean / (p_noise * 10f64.powf(target_snr_db / 10.0))).sqrt();
    let noisy: Vec<f64> = clean
        .samples()
        .iter()
        .zip(noise.samples())
        .map(|(c, n)| c + scale * n)
        .collect();
    Ok((Signal::new(noisy, clean.sample_rate_hz())?, scale))
}

/// Class label carried by each dataset entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SignalClass {
    Normal,
    Abnormal,
}

impl fmt::Display for SignalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalClass::Normal => write!(f, "normal"),
            SignalClass::Abnormal => write!(f, "abnormal"),
        }
    }
}

impl std::str::FromStr for SignalClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(SignalClass::Normal),
            "abnormal" => Ok(SignalClass::Abnormal),
            other => Err(Error::InvalidConfig(format!("unknown class '{other}'"))),
        }
    }
}

/// One manifest row.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub entry_id: String,
    pub label: SignalClass,
    pub mix: MixSpec,
    pub clean_src: PathBuf,
    pub noise_src: PathBuf,
    pub clean_path: PathBuf,
    pub noisy_path: PathBuf,
    pub reference_path: PathBuf,
    pub realized_snr_db: f64,
    pub scale: f64,
    /// `None` when the entry was generated successfully; otherwise the
    /// error message (failed entries are recorded, not dropped).
    pub failure: Option<String>,
}

impl ManifestEntry {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

pub const GENERATOR_VERSION: &str = "1";

/// The record of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub generator_version: String,
}

const MANIFEST_HEADER: &str = "entry_id,label,clean_id,noise_id,clean_src,noise_src,clean_path,noisy_path,reference_path,target_snr_db,realized_snr_db,scale,seed,ar_coeffs,ma_coeffs,status,generator_version";

fn join_coeffs(c: &[f64]) -> String {
    c.iter()
        .map(|v| format!("{v:?}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn parse_coeffs(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split(';')
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::ManifestParse {
                line,
                detail: format!("bad coefficient '{t}'"),
            })
        })
        .collect()
}

impl DatasetManifest {
    pub fn ok_entries(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(|e| e.is_ok())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(MANIFEST_HEADER);
        out.push('\n');
        for e in &self.entries {
            let status = match &e.failure {
                None => "ok".to_string(),
                Some(msg) => format!("failed: {}", msg.replace(',', ";").replace('\n', " ")),
            };
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{:?},{:?},{:?},{},{},{},{},{}\n",
                e.entry_id,
                e.label,
                e.mix.clean_id,
                e.mix.noise_id,
                e.clean_src.display(),
                e.noise_src.display(),
                e.clean_path.display(),
                e.noisy_path.display(),
                e.reference_path.display(),
                e.mix.target_snr_db,
                e.realized_snr_db,
                e.scale,
                e.mix.seed,
                join_coeffs(&e.mix.ar_coeffs),
                join_coeffs(&e.mix.ma_coeffs),
                status,
                self.generator_version,
            ));
        }
        out
    }

    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::ManifestParse {
            line: 1,
            detail: "empty manifest".into(),
        })?;
        if header != MANIFEST_HEADER {
            return Err(Error::ManifestParse {
                line: 1,
                detail: "unexpected header".into(),
            });
        }
        let mut entries = Vec::new();
        let mut version = GENERATOR_VERSION.to_string();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let line_no = idx + 1;
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 17 {
                return Err(Error::ManifestParse {
                    line: line_no,
                    detail: format!("expected 17 fields, got {}", f.len()),
                });
            }
            let parse_f64 = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| Error::ManifestParse {
                    line: line_no,
                    detail: format!("bad {what} '{s}'"),
                })
            };
            let entry = ManifestEntry {
                entry_id: f[0].to_string(),
                label: f[1].parse()?,
                mix: MixSpec {
                    clean_id: f[2].to_string(),
                    noise_id: f[3].to_string(),
                    target_snr_db: parse_f64(f[9], "target_snr_db")?,
                    seed: f[12].parse().map_err(|_| Error::ManifestParse {
                        line: line_no,
                        detail: format!("bad seed '{}'", f[12]),
                    })?,
                    ar_coeffs: parse_coeffs(f[13], line_no)?,
                    ma_coeffs: parse_coeffs(f[14], line_no)?,
                },
                clean_src: PathBuf::from(f[4]),
                noise_src: PathBuf::from(f[5]),
                clean_path: PathBuf::from(f[6]),
                noisy_path: PathBuf::from(f[7]),
                reference_path: PathBuf::from(f[8]),
                realized_snr_db: parse_f64(f[10], "realized_snr_db")?,
                scale: parse_f64(f[11], "scale")?,
                failure: match f[15] {
                    "ok" => None,
                    other => Some(other.trim_start_matches("failed: ").to_string()),
                },
            };
            version = f[16].to_string();
            entries.push(entry);
        }
        Ok(DatasetManifest {
            entries,
            generator_version: version,
        })
    }

    pub fn read_csv<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_csv(&text)
    }

    pub fn find(&self, entry_id: &str) -> Result<&ManifestEntry> {
        self.entries
            .iter()
            .find(|e| e.entry_id == entry_id)
            .ok_or_else(|| Error::EntryNotFound(entry_id.to_string()))
    }
}

/// Generator settings.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub snr_range_db: (f64, f64),
    pub ar_coeffs: Vec<f64>,
    pub ma_coeffs: Vec<f64>,
    /// Worker threads for entry generation; 0 or 1 means serial.
    pub jobs: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            snr_range_db: (-10.0, 5.0),
            ar_coeffs: AR_DEFAULT.to_vec(),
            ma_coeffs: MA_MINPHASE.to_vec(),
            jobs: 0,
        }
    }
}

fn wav_stems_sorted(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().map(|e| e == "wav").unwrap_or(false) {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            out.insert(stem, path);
        }
    }
    Ok(out.into_iter().collect())
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Generate one entry's signals from its spec. Returns (noisy, reference,
/// realized SNR, scale). Pure given the inputs, so entries can be
/// produced in parallel and regenerated for verification.
pub fn synthesize_entry(
    clean: &Signal,
    raw_noise: &Signal,
    spec: &MixSpec,
) -> Result<(Signal, ReferenceSignal, f64, f64)> {
    spec.validate()?;
    if clean.sample_rate_hz() != raw_noise.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            expected: clean.sample_rate_hz(),
            actual: raw_noise.sample_rate_hz(),
        });
    }
    let tiled = tile_to_length(raw_noise, clean.len())?;
    let noise = make_noise_path(&tiled, spec)?;
    let reference = make_reference_path(&tiled, spec)?;
    let (noisy, scale) = mix_at_snr(clean, &noise, spec.target_snr_db)?;
    // realized SNR recomputed from the mixed components
    let p_clean = signal_power(clean)?;
    let p_scaled: f64 = noise
        .samples()
        .iter()
        .map(|v| (scale * v) * (scale * v))
        .sum::<f64>()
        / noise.len() as f64;
    let realized = 10.0 * (p_clean / p_scaled).log10();
    Ok((noisy, reference, realized, scale))
}

/// Build the full dataset.
///
/// `clean_root` must contain `normal/` and `abnormal/` subdirectories of
/// single-channel WAV files; `noise_dir` holds the noise recordings.
/// Every clean recording of each class is paired with every noise
/// recording. Outputs (clean/noisy/reference WAV triple per entry, 32-bit
/// float) land in `out_dir` next to `manifest.csv`. Fully deterministic
/// for a given seed; per-entry I/O failures are recorded in the manifest
/// without aborting the run.
pub fn generate_dataset(
    clean_root: &Path,
    noise_dir: &Path,
    out_dir: &Path,
    config: &SynthConfig,
) -> Result<DatasetManifest> {
    validate_ar(&config.ar_coeffs)?;
    if config.ma_coeffs.is_empty() {
        return Err(Error::InvalidConfig("ma_coeffs must be non-empty".into()));
    }
    if config.snr_range_db.0 > config.snr_range_db.1 {
        return Err(Error::InvalidConfig(format!(
            "bad SNR range {:?}",
            config.snr_range_db
        )));
    }
    let normals = wav_stems_sorted(&clean_root.join("normal"))?;
    let abnormals = wav_stems_sorted(&clean_root.join("abnormal"))?;
    let noises = wav_stems_sorted(noise_dir)?;
    if normals.is_empty() && abnormals.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no clean recordings under {}",
            clean_root.display()
        )));
    }
    if noises.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no noise recordings under {}",
            noise_dir.display()
        )));
    }
    std::fs::create_dir_all(out_dir)?;

    struct Job {
        index: u64,
        label: SignalClass,
        clean_id: String,
        clean_src: PathBuf,
        noise_id: String,
        noise_src: PathBuf,
    }
    let mut jobs = Vec::new();
    for (label, set) in [(SignalClass::Normal, &normals), (SignalClass::Abnormal, &abnormals)] {
        for (clean_id, clean_src) in set {
            for (noise_id, noise_src) in &noises {
                jobs.push(Job {
                    index: jobs.len() as u64,
                    label,
                    clean_id: clean_id.clone(),
                    clean_src: clean_src.clone(),
                    noise_id: noise_id.clone(),
                    noise_src: noise_src.clone(),
                });
            }
        }
    }

    let run_job = |job: &Job| -> ManifestEntry {
        let entry_id = format!("{}__{}", job.clean_id, job.noise_id);
        let mut index_state = job.index;
        let mut seed_state = config.seed ^ splitmix64(&mut index_state);
        let entry_seed = splitmix64(&mut seed_state);
        let mut rng = ChaCha8Rng::seed_from_u64(entry_seed);
        let target_snr_db = rng.random_range(config.snr_range_db.0..=config.snr_range_db.1);
        let mix = MixSpec {
            clean_id: job.clean_id.clone(),
            noise_id: job.noise_id.clone(),
            target_snr_db,
            seed: entry_seed,
            ar_coeffs: config.ar_coeffs.clone(),
            ma_coeffs: config.ma_coeffs.clone(),
        };
        let clean_path = out_dir.join(format!("{entry_id}_clean.wav"));
        let noisy_path = out_dir.join(format!("{entry_id}_noisy.wav"));
        let reference_path = out_dir.join(format!("{entry_id}_ref.wav"));
        let mut entry = ManifestEntry {
            entry_id,
            label: job.label,
            mix,
            clean_src: job.clean_src.clone(),
            noise_src: job.noise_src.clone(),
            clean_path,
            noisy_path,
            reference_path,
            realized_snr_db: f64::NAN,
            scale: f64::NAN,
            failure: None,
        };
        let result = (|| -> Result<(f64, f64)> {
            let clean = wav::read_wav(&job.clean_src)?;
            let raw_noise = wav::read_wav(&job.noise_src)?;
            let (noisy, reference, realized, scale) =
                synthesize_entry(&clean, &raw_noise, &entry.mix)?;
            wav::write_wav_f32(&entry.clean_path, &clean)?;
            wav::write_wav_f32(&entry.noisy_path, &noisy)?;
            wav::write_wav_f32(&entry.reference_path, reference.as_signal())?;
            Ok((realized, scale))
        })();
        match result {
            Ok((realized, scale)) => {
                entry.realized_snr_db = realized;
                entry.scale = scale;
            }
            Err(e) => entry.failure = Some(e.to_string()),
        }
        entry
    };

    let entries: Vec<ManifestEntry> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| jobs.par_iter().map(run_job).collect())
    } else {
        jobs.iter().map(run_job).collect()
    };

    let manifest = DatasetManifest {
        entries,
        generator_version: GENERATOR_VERSION.to_string(),
    };
    manifest.write_csv(out_dir.join("manifest.csv"))?;
    Ok(manifest)
}
