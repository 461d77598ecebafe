//! Experiment harness: sweep adaptive-filter variants over a generated
//! dataset, aggregate per-class metrics, select burst-heavy subsets, and
//! emit single-case reports with plottable traces and spectrograms.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::adaptive::{run_filter, AdaptiveConfig};
use crate::error::{Error, Result};
use crate::metrics::{evaluate, MetricsRecord};
use crate::signal::{ReferenceSignal, Signal};
use crate::sosfilt::pcg_bandpass;
use crate::synth::{DatasetManifest, ManifestEntry, SignalClass};
use crate::wav;
use crate::welch::spectrogram;

/// One filter sweep configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    /// Labeled filter configurations to compare.
    pub filters: Vec<(String, AdaptiveConfig)>,
    /// Apply the 20-200 Hz band-pass to the denoised output before
    /// scoring. Off by default so scores reflect the canceller alone.
    pub post_filter: bool,
    /// Drop this many seconds from the start of each signal before
    /// scoring (adaptation transient). Default 0: score the full signal.
    pub transient_discard_s: f64,
    /// Worker threads; 0 or 1 means serial.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            filters: vec![
                ("lms".into(), AdaptiveConfig::new(crate::adaptive::FilterVariant::Lms)),
                ("nlms".into(), AdaptiveConfig::new(crate::adaptive::FilterVariant::Nlms)),
                (
                    "ba-nlms".into(),
                    AdaptiveConfig::new(crate::adaptive::FilterVariant::BaNlms),
                ),
            ],
            post_filter: false,
            transient_discard_s: 0.0,
            jobs: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty() {
            return Err(Error::InvalidConfig("no filter configs".into()));
        }
        for (_, c) in &self.filters {
            c.validate()?;
        }
        Ok(())
    }
}

/// Metrics for one (entry, filter) pair, or the divergence flag.
#[derive(Debug, Clone)]
pub struct EntryResult {
    pub entry_id: String,
    pub label: SignalClass,
    pub filter_label: String,
    pub metrics: Option<MetricsRecord>,
    pub diverged_at: Option<u64>,
}

impl EntryResult {
    pub const CSV_HEADER: &'static str =
        "entry_id,label,filter,nmse,delta_snr_db,cc,nmae,status";

    pub fn to_csv_row(&self) -> String {
        match (&self.metrics, self.diverged_at) {
            (Some(m), _) => format!(
                "{},{},{},{},ok",
                self.entry_id,
                self.label,
                self.filter_label,
                m.to_csv_row()
            ),
            (None, Some(idx)) => format!(
                "{},{},{},nan,nan,nan,nan,diverged@{idx}",
                self.entry_id, self.label, self.filter_label
            ),
            (None, None) => format!(
                "{},{},{},nan,nan,nan,nan,failed",
                self.entry_id, self.label, self.filter_label
            ),
        }
    }
}

/// Per (class, filter) aggregate: mean and population standard deviation
/// of each metric over non-diverged entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub signal_class: SignalClass,
    pub filter_label: String,
    pub nmse_mean: f64,
    pub nmse_std: f64,
    pub delta_snr_mean: f64,
    pub delta_snr_std: f64,
    pub cc_mean: f64,
    pub cc_std: f64,
    pub nmae_mean: f64,
    pub nmae_std: f64,
    pub n: usize,
}

impl SummaryRow {
    pub const CSV_HEADER: &'static str = "class,filter,nmse_mean,nmse_std,delta_snr_mean,delta_snr_std,cc_mean,cc_std,nmae_mean,nmae_std,n";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            self.signal_class,
            self.filter_label,
            self.nmse_mean,
            self.nmse_std,
            self.delta_snr_mean,
            self.delta_snr_std,
            self.cc_mean,
            self.cc_std,
            self.nmae_mean,
            self.nmae_std,
            self.n
        )
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate per-entry results into summary rows (population std).
pub fn summarize(results: &[EntryResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(SignalClass, String), Vec<&MetricsRecord>> = BTreeMap::new();
    for r in results {
        if let Some(m) = &r.metrics {
            groups
                .entry((r.label, r.filter_label.clone()))
                .or_default()
                .push(m);
        }
    }
    groups
        .into_iter()
        .map(|((class, filter), ms)| {
            let col = |f: fn(&MetricsRecord) -> f64| ms.iter().map(|m| f(m)).collect::<Vec<_>>();
            let (nmse_mean, nmse_std) = mean_std(&col(|m| m.nmse));
            let (dsnr_mean, dsnr_std) = mean_std(&col(|m| m.delta_snr_db));
            let (cc_mean, cc_std) = mean_std(&col(|m| m.cc));
            let (nmae_mean, nmae_std) = mean_std(&col(|m| m.nmae));
            SummaryRow {
                signal_class: class,
                filter_label: filter,
                nmse_mean,
                nmse_std,
                delta_snr_mean: dsnr_mean,
                delta_snr_std: dsnr_std,
                cc_mean,
                cc_std,
                nmae_mean,
                nmae_std,
                n: ms.len(),
            }
        })
        .collect()
}

fn discard_transient(signal: &Signal, seconds: f64) -> Result<Signal> {
    if seconds <= 0.0 {
        return Ok(signal.clone());
    }
    let skip = ((seconds * signal.sample_rate_hz()) as usize).min(signal.len());
    Signal::new(signal.samples()[skip..].to_vec(), signal.sample_rate_hz())
}

/// Score one manifest entry with one filter configuration.
pub fn score_entry(
    entry: &ManifestEntry,
    filter_label: &str,
    config: &AdaptiveConfig,
    post_filter: bool,
    transient_discard_s: f64,
) -> Result<EntryResult> {
    let clean = wav::read_wav(&entry.clean_path)?;
    let noisy = wav::read_wav(&entry.noisy_path)?;
    let reference = ReferenceSignal::new(wav::read_wav(&entry.reference_path)?);

    let denoised = match run_filter(config, &noisy, &reference) {
        Ok((d, _)) => d,
        Err(Error::Divergence { index }) => {
            return Ok(EntryResult {
                entry_id: entry.entry_id.clone(),
                label: entry.label,
                filter_label: filter_label.to_string(),
                metrics: None,
                diverged_at: Some(index),
            })
        }
        Err(e) => return Err(e),
    };
    let denoised = if post_filter { pcg_bandpass(&denoised)? } else { denoised };
    let metrics = evaluate(
        &discard_transient(&clean, transient_discard_s)?,
        &discard_transient(&noisy, transient_discard_s)?,
        &discard_transient(&denoised, transient_discard_s)?,
    )?;
    Ok(EntryResult {
        entry_id: entry.entry_id.clone(),
        label: entry.label,
        filter_label: filter_label.to_string(),
        metrics: Some(metrics),
        diverged_at: None,
    })
}

/// Results of one experiment run.
#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub results: Vec<EntryResult>,
    pub summaries: Vec<SummaryRow>,
    pub diverged: usize,
}

impl ExperimentReport {
    pub fn per_entry_csv(&self) -> String {
        let mut out = String::from(EntryResult::CSV_HEADER);
        out.push('\n');
        for r in &self.results {
            out.push_str(&r.to_csv_row());
            out.push('\n');
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SummaryRow::CSV_HEADER);
        out.push('\n');
        for s in &self.summaries {
            out.push_str(&s.to_csv_row());
            out.push('\n');
        }
        out
    }

    pub fn summary(&self, class: SignalClass, filter: &str) -> Option<&SummaryRow> {
        self.summaries
            .iter()
            .find(|s| s.signal_class == class && s.filter_label == filter)
    }
}

/// Run every (entry, filter) pair of the manifest, deterministically
/// ordered by entry id then filter. Diverged entries are recorded and
/// excluded from aggregates; per-entry and summary CSVs are written to
/// `out_dir` when it is given.
pub fn run_experiment(
    manifest: &DatasetManifest,
    config: &ExperimentConfig,
    out_dir: Option<&Path>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let mut entries: Vec<&ManifestEntry> = manifest.ok_entries().collect();
    entries.sort_by(|a, b| a.entry_id.cmp(&b.entry_id));
    if entries.is_empty() {
        return Err(Error::InvalidConfig(
            "manifest has no usable entries".into(),
        ));
    }

    let mut work: Vec<(&ManifestEntry, &(String, AdaptiveConfig))> = Vec::new();
    for e in &entries {
        for f in &config.filters {
            work.push((e, f));
        }
    }

    let score = |(entry, (label, cfg)): &(&ManifestEntry, &(String, AdaptiveConfig))| {
        score_entry(entry, label, cfg, config.post_filter, config.transient_discard_s)
    };
    let results: Vec<EntryResult> = if config.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        pool.install(|| work.par_iter().map(score).collect::<Result<_>>())?
    } else {
        work.iter().map(score).collect::<Result<_>>()?
    };

    let diverged = results.iter().filter(|r| r.diverged_at.is_some()).count();
    let report = ExperimentReport {
        summaries: summarize(&results),
        results,
        diverged,
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("per_entry.csv"), report.per_entry_csv())?;
        std::fs::write(dir.join("summary.csv"), report.summary_csv())?;
    }
    Ok(report)
}

/// Burst-subset detector parameters: an entry is selected when the
/// short-time energy of its noise recording has max/median ratio above
/// the threshold.
#[derive(Debug, Clone, Copy)]
pub struct BurstDetector {
    pub window_s: f64,
    pub max_median_ratio: f64,
}

impl Default for BurstDetector {
    fn default() -> Self {
        BurstDetector {
            window_s: 0.05,
            max_median_ratio: 8.0,
        }
    }
}

/// Short-time energy max/median ratio of a recording.
pub fn burst_ratio(signal: &Signal, window_s: f64) -> Result<f64> {
    let wlen = ((window_s * signal.sample_rate_hz()) as usize).max(1);
    if signal.len() < 2 * wlen {
        return Err(Error::TooShort {
            needed: 2 * wlen,
            got: signal.len(),
        });
    }
    let mut energies: Vec<f64> = signal
        .samples()
        .chunks_exact(wlen)
        .map(|w| w.iter().map(|v| v * v).sum::<f64>() / wlen as f64)
        .collect();
    let max = energies.iter().copied().fold(0.0f64, f64::max);
    energies.sort_by(|a, b| a.total_cmp(b));
    let median = energies[energies.len() / 2];
    if median == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(max / median)
}

/// Subset selection result. An empty subset is returned with
/// `warning` set rather than silently.
#[derive(Debug, Clone)]
pub struct BurstSubset {
    pub manifest: DatasetManifest,
    /// Ratio per noise id, for reporting.
    pub ratios: BTreeMap<String, f64>,
    pub warning: Option<String>,
}

/// Select the manifest entries whose noise recording is burst-heavy.
/// Deterministic; each unique noise source is analyzed once.
pub fn select_burst_subset(
    manifest: &DatasetManifest,
    detector: &BurstDetector,
) -> Result<BurstSubset> {
    let mut ratios: BTreeMap<String, f64> = BTreeMap::new();
    for entry in manifest.ok_entries() {
        if !ratios.contains_key(&entry.mix.noise_id) {
            let noise = wav::read_wav(&entry.noise_src)?;
            ratios.insert(entry.mix.noise_id.clone(), burst_ratio(&noise, detector.window_s)?);
        }
    }
    let entries: Vec<ManifestEntry> = manifest
        .ok_entries()
        .filter(|e| ratios.get(&e.mix.noise_id).copied().unwrap_or(0.0) > detector.max_median_ratio)
        .cloned()
        .collect();
    let warning = if entries.is_empty() {
        Some(format!(
            "no entries exceed max/median energy ratio {}",
            detector.max_median_ratio
        ))
    } else {
        None
    };
    Ok(BurstSubset {
        manifest: DatasetManifest {
            entries,
            generator_version: manifest.generator_version.clone(),
        },
        ratios,
        warning,
    })
}

/// Files written by [`report_case`].
#[derive(Debug, Clone)]
pub struct CaseReport {
    pub metrics: MetricsRecord,
    pub burst_samples: usize,
    pub traces_path: PathBuf,
    pub metrics_path: PathBuf,
    pub spectrogram_noisy_path: PathBuf,
    pub spectrogram_denoised_path: PathBuf,
}

fn write_spectrogram(path: &Path, sg: &crate::welch::Spectrogram) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "{} {} {:?} {:?}",
        sg.matrix.len(),
        sg.matrix.first().map(|r| r.len()).unwrap_or(0),
        sg.df_hz,
        sg.dt_s
    )?;
    for row in &sg.matrix {
        let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(f, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Emit a single-entry report: time-domain traces with the per-sample
/// burst-flag, the metrics row, and power spectrograms of the noisy and
/// denoised signals as portable text files.
pub fn report_case(
    manifest: &DatasetManifest,
    entry_id: &str,
    config: &AdaptiveConfig,
    post_filter: bool,
    out_dir: &Path,
) -> Result<CaseReport> {
    let entry = manifest.find(entry_id)?;
    let clean = wav::read_wav(&entry.clean_path)?;
    let noisy = wav::read_wav(&entry.noisy_path)?;
    let reference = ReferenceSignal::new(wav::read_wav(&entry.reference_path)?);

    let (denoised, trace) = run_filter(config, &noisy, &reference)?;
    let denoised = if post_filter { pcg_bandpass(&denoised)? } else { denoised };
    let metrics = evaluate(&clean, &noisy, &denoised)?;

    std::fs::create_dir_all(out_dir)?;
    let traces_path = out_dir.join("traces.csv");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&traces_path)?);
        writeln!(f, "index,clean,noisy,denoised,burst_flag")?;
        let (c, x, d) = (clean.samples(), noisy.samples(), denoised.samples());
        for (i, t) in trace.iter().enumerate() {
            writeln!(f, "{},{:?},{:?},{:?},{}", i, c[i], x[i], d[i], t.burst_flag as u8)?;
        }
    }
    let metrics_path = out_dir.join("metrics.csv");
    std::fs::write(
        &metrics_path,
        format!("{}\n{}\n", MetricsRecord::CSV_HEADER, metrics.to_csv_row()),
    )?;

    let nperseg = (0.128 * noisy.sample_rate_hz()) as usize;
    let spectrogram_noisy_path = out_dir.join("spectrogram_noisy.txt");
    write_spectrogram(
        &spectrogram_noisy_path,
        &spectrogram(noisy.samples(), noisy.sample_rate_hz(), nperseg)?,
    )?;
    let spectrogram_denoised_path = out_dir.join("spectrogram_denoised.txt");
    write_spectrogram(
        &spectrogram_denoised_path,
        &spectrogram(denoised.samples(), denoised.sample_rate_hz(), nperseg)?,
    )?;

    Ok(CaseReport {
        metrics,
        burst_samples: trace.iter().filter(|t| t.burst_flag).count(),
        traces_path,
        metrics_path,
        spectrogram_noisy_path,
        spectrogram_denoised_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adaptive::FilterVariant;
    use crate::corpus;
    use crate::synth::{generate_dataset, SynthConfig};

    fn tiny_dataset(dir: &Path) -> DatasetManifest {
        let (clean_root, noise_dir) =
            corpus::write_demo_corpus(dir, 1, 3, 2.0, 2.5, 2000.0, 42).unwrap();
        generate_dataset(
            &clean_root,
            &noise_dir,
            &dir.join("out"),
            &SynthConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn burst_ratio_separates_stationary_from_bursty() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let fs = 2000.0;
        let n = (10.0 * fs) as usize;
        let stationary: Vec<f64> = (0..n).map(|_| rng.random_range(-0.1..0.1)).collect();
        let s = Signal::new(stationary.clone(), fs).unwrap();
        let r = burst_ratio(&s, 0.05).unwrap();
        assert!(r < 3.0, "stationary ratio {r}");

        // one 0.2 s burst at 10x amplitude
        let mut bursty = stationary;
        let b0 = (4.0 * fs) as usize;
        for v in bursty.iter_mut().skip(b0).take((0.2 * fs) as usize) {
            *v *= 10.0;
        }
        let s = Signal::new(bursty, fs).unwrap();
        let r = burst_ratio(&s, 0.05).unwrap();
        assert!(r >= 64.0, "bursty ratio {r}");
    }

    #[test]
    fn burst_subset_selection() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_dataset(dir.path());
        // noise_002 is the bursty kind in the demo rotation
        let subset = select_burst_subset(&manifest, &BurstDetector::default()).unwrap();
        assert!(subset.warning.is_none());
        assert!(!subset.manifest.entries.is_empty());
        assert!(subset
            .manifest
            .entries
            .iter()
            .all(|e| e.mix.noise_id == "noise_002"));

        // threshold infinity selects nothing, with a warning
        let detector = BurstDetector {
            max_median_ratio: f64::INFINITY,
            ..Default::default()
        };
        let empty = select_burst_subset(&manifest, &detector).unwrap();
        assert!(empty.manifest.entries.is_empty());
        assert!(empty.warning.is_some());
    }

    #[test]
    fn identity_filter_scores_zero_delta_snr() {
        // mu0 -> 0 makes the canceller a pass-through, so denoised ==
        // noisy and the improvement is exactly 0.
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_dataset(dir.path());
        let cfg = ExperimentConfig {
            filters: vec![(
                "identity".into(),
                AdaptiveConfig {
                    variant: FilterVariant::Lms,
                    mu0: 1e-300,
                    ..Default::default()
                },
            )],
            ..Default::default()
        };
        let report = run_experiment(&manifest, &cfg, None).unwrap();
        for r in &report.results {
            let m = r.metrics.as_ref().unwrap();
            assert_eq!(m.delta_snr_db, 0.0, "{}", r.entry_id);
        }
    }

    #[test]
    fn aggregates_recompute_from_per_entry_csv() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_dataset(dir.path());
        let cfg = ExperimentConfig {
            jobs: 0,
            ..Default::default()
        };
        let report = run_experiment(&manifest, &cfg, Some(&dir.path().join("exp"))).unwrap();

        // parse the persisted CSV and recompute one aggregate
        let text = std::fs::read_to_string(dir.path().join("exp/per_entry.csv")).unwrap();
        let mut values = Vec::new();
        for line in text.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            if f[2] == "ba-nlms" && f[1] == "normal" && f[7] == "ok" {
                values.push(f[4].parse::<f64>().unwrap());
            }
        }
        let expected = report
            .summary(SignalClass::Normal, "ba-nlms")
            .unwrap()
            .delta_snr_mean;
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        assert!((mean - expected).abs() < 1e-9);
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_dataset(dir.path());
        let cfg = ExperimentConfig::default();
        let a = run_experiment(&manifest, &cfg, None).unwrap();
        let b = run_experiment(&manifest, &cfg, None).unwrap();
        assert_eq!(a.per_entry_csv(), b.per_entry_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
    }

    #[test]
    fn parallel_and_serial_agree() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_dataset(dir.path());
        let serial = run_experiment(&manifest, &ExperimentConfig::default(), None).unwrap();
        let parallel = run_experiment(
            &manifest,
            &ExperimentConfig {
                jobs: 4,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        assert_eq!(serial.results.len(), parallel.results.len());
        for (a, b) in serial.results.iter().zip(&parallel.results) {
            assert_eq!(a.entry_id, b.entry_id);
            assert_eq!(a.filter_label, b.filter_label);
            assert_eq!(
                a.metrics.as_ref().map(|m| m.to_csv_row()),
                b.metrics.as_ref().map(|m| m.to_csv_row())
            );
        }
    }

    #[test]
    fn case_report_files_exist_and_identity_matches_noisy() {
        let dir = tempfile::tempdir().unwrap();
        let manifest = tiny_dataset(dir.path());
        let entry_id = manifest.entries[0].entry_id.clone();
        let identity = AdaptiveConfig {
            variant: FilterVariant::Lms,
            mu0: 1e-300,
            ..Default::default()
        };
        let report = report_case(
            &manifest,
            &entry_id,
            &identity,
            false,
            &dir.path().join("case"),
        )
        .unwrap();
        assert_eq!(report.metrics.delta_snr_db, 0.0);
        // denoised trace equals noisy trace in the CSV
        let text = std::fs::read_to_string(&report.traces_path).unwrap();
        for line in text.lines().skip(1).take(50) {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f[2], f[3]);
        }
        assert!(report.spectrogram_noisy_path.exists());
        assert!(report.spectrogram_denoised_path.exists());

        assert!(matches!(
            report_case(&manifest, "missing", &identity, false, &dir.path().join("x")),
            Err(Error::EntryNotFound(_))
        ));
    }
}
