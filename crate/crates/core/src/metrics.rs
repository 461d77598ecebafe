//! Evaluation measures against ground truth (NMSE, SNR improvement,
//! correlation coefficient, NMAE) and the band-power SNR used for
//! recordings without ground truth.

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::welch::{band_power, welch_psd};

/// Saturation value (dB) substituted when a ratio metric would divide by
/// zero (perfect reconstruction, or an empty noise band). Batch
/// aggregation then never aborts on a degenerate entry.
pub const SATURATION_DB: f64 = 300.0;

/// Metrics for one (clean, noisy, denoised) triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    /// `sum((denoised - clean)^2) / sum(clean^2)`.
    pub nmse: f64,
    /// Output SNR minus input SNR, both against the clean ground truth.
    pub delta_snr_db: f64,
    /// Pearson correlation of clean and denoised.
    pub cc: f64,
    /// `sum(|denoised - clean|) / sum(|clean|)`.
    pub nmae: f64,
    /// True when a degenerate ratio was replaced by [`SATURATION_DB`].
    pub saturated: bool,
}

impl MetricsRecord {
    pub const CSV_HEADER: &'static str = "nmse,delta_snr_db,cc,nmae";

    /// Fixed column order: nmse, delta_snr_db, cc, nmae.
    pub fn to_csv_row(&self) -> String {
        format!("{:?},{:?},{:?},{:?}", self.nmse, self.delta_snr_db, self.cc, self.nmae)
    }
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let dx = x - ma;
        let dy = y - mb;
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

/// Score a denoised recording against ground truth, over the full signal
/// (no transient discard).
pub fn evaluate(clean: &Signal, noisy: &Signal, denoised: &Signal) -> Result<MetricsRecord> {
    let n = clean.len();
    for other in [noisy, denoised] {
        if other.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: other.len(),
            });
        }
        if other.sample_rate_hz() != clean.sample_rate_hz() {
            return Err(Error::SampleRateMismatch {
                expected: clean.sample_rate_hz(),
                actual: other.sample_rate_hz(),
            });
        }
    }
    if n == 0 {
        return Err(Error::EmptySignal);
    }
    let c = clean.samples();
    let x = noisy.samples();
    let d = denoised.samples();

    let clean_energy: f64 = c.iter().map(|v| v * v).sum();
    if clean_energy == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let out_residual: f64 = d.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
    let in_residual: f64 = x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();

    let nmse = out_residual / clean_energy;
    let clean_abs: f64 = c.iter().map(|v| v.abs()).sum();
    let nmae = d.iter().zip(c).map(|(a, b)| (a - b).abs()).sum::<f64>() / clean_abs;
    let cc = pearson(c, d);

    let (delta_snr_db, saturated) = match (out_residual > 0.0, in_residual > 0.0) {
        (true, true) => (
            10.0 * (clean_energy / out_residual).log10()
                - 10.0 * (clean_energy / in_residual).log10(),
            false,
        ),
        // Perfect reconstruction (or a noiseless input): flag and saturate.
        (false, true) => (SATURATION_DB, true),
        (true, false) => (-SATURATION_DB, true),
        (false, false) => (0.0, true),
    };

    Ok(MetricsRecord {
        nmse,
        delta_snr_db,
        cc,
        nmae,
        saturated,
    })
}

/// Frequency bands for the reference-free SNR: `lf` is the band expected
/// to contain the useful signal; `lfn` and `hf` are treated as noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub lfn: (f64, f64),
    pub lf: (f64, f64),
    pub hf: (f64, f64),
}

impl BandSpec {
    /// Heart-sound bands at the 2 kHz processing rate: noise below 20 Hz,
    /// signal 20-200 Hz, noise above 200 Hz.
    pub fn pcg() -> Self {
        BandSpec {
            lfn: (0.0, 20.0),
            lf: (20.0, 200.0),
            hf: (200.0, f64::INFINITY),
        }
    }

    /// ECG bands: noise below 0.5 Hz (baseline), signal 0.5-40 Hz, noise
    /// above 40 Hz.
    pub fn ecg() -> Self {
        BandSpec {
            lfn: (0.0, 0.5),
            lf: (0.5, 40.0),
            hf: (40.0, f64::INFINITY),
        }
    }

    pub fn validate(&self, nyquist_hz: f64) -> Result<()> {
        let ordered = self.lfn.0 < self.lfn.1
            && self.lfn.1 <= self.lf.0
            && self.lf.0 < self.lf.1
            && self.lf.1 <= self.hf.0
            && self.hf.0 < self.hf.1;
        if !ordered {
            return Err(Error::InvalidConfig(format!(
                "bands must be disjoint and ordered lfn < lf < hf: {self:?}"
            )));
        }
        if self.hf.0 >= nyquist_hz {
            return Err(Error::InvalidConfig(format!(
                "hf band starts at {} Hz, beyond Nyquist {} Hz",
                self.hf.0, nyquist_hz
            )));
        }
        Ok(())
    }
}

/// Band SNR result; `saturated` marks an empty noise band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSnr {
    pub snr_db: f64,
    pub saturated: bool,
}

/// `10 log10[ power(LF) / (power(LFN) + power(HF)) ]` from a Welch
/// periodogram with 1 s segments. The signal must be at least one
/// segment long.
pub fn band_snr(signal: &Signal, bands: &BandSpec) -> Result<BandSnr> {
    let fs = signal.sample_rate_hz();
    bands.validate(fs / 2.0)?;
    let psd = welch_psd(signal.samples(), fs)?;
    let lf = band_power(&psd, fs, bands.lf.0, bands.lf.1);
    let noise = band_power(&psd, fs, bands.lfn.0, bands.lfn.1)
        + band_power(&psd, fs, bands.hf.0, bands.hf.1.min(fs / 2.0 + 1.0));
    if noise <= 0.0 {
        return Ok(BandSnr {
            snr_db: SATURATION_DB,
            saturated: true,
        });
    }
    if lf <= 0.0 {
        return Ok(BandSnr {
            snr_db: -SATURATION_DB,
            saturated: true,
        });
    }
    Ok(BandSnr {
        snr_db: 10.0 * (lf / noise).log10(),
        saturated: false,
    })
}
