//! Averaged-periodogram spectral estimation (Welch) and STFT matrices.
//!
//! Segments are windowed with a periodic Hann window; the default
//! estimator uses 1-second segments with 50% overlap and density
//! scaling, which keeps band powers stable on recordings in the tens of
//! seconds.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// One-sided power spectral density estimate.
#[derive(Debug, Clone)]
pub struct Psd {
    /// PSD values for bins `0..=nfft/2`, density scaling (power per Hz).
    pub values: Vec<f64>,
    /// Bin spacing in Hz.
    pub df_hz: f64,
    /// Number of averaged segments.
    pub segments: usize,
}

fn hann_periodic(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

fn segment_psd(
    fft: &std::sync::Arc<dyn rustfft::Fft<f64>>,
    seg: &[f64],
    window: &[f64],
    scale: f64,
) -> Vec<f64> {
    let n = seg.len();
    let mut buf: Vec<Complex<f64>> = seg
        .iter()
        .zip(window)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    fft.process(&mut buf);
    let nbins = n / 2 + 1;
    let mut p = Vec::with_capacity(nbins);
    for (k, c) in buf.iter().take(nbins).enumerate() {
        let mut v = (c.re * c.re + c.im * c.im) * scale;
        let at_edge = k == 0 || (n.is_multiple_of(2) && k == nbins - 1);
        if !at_edge {
            v *= 2.0;
        }
        p.push(v);
    }
    p
}

/// Welch PSD with explicit segment length and 50% overlap.
pub fn welch_psd_with(x: &[f64], fs: f64, nperseg: usize) -> Result<Psd> {
    if nperseg < 2 {
        return Err(Error::InvalidConfig("nperseg must be >= 2".into()));
    }
    if x.len() < nperseg {
        return Err(Error::TooShort {
            needed: nperseg,
            got: x.len(),
        });
    }
    let window = hann_periodic(nperseg);
    let u: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (fs * u);
    let fft = FftPlanner::new().plan_fft_forward(nperseg);

    let step = nperseg / 2;
    let nbins = nperseg / 2 + 1;
    let mut acc = vec![0.0; nbins];
    let mut count = 0usize;
    let mut start = 0usize;
    while start + nperseg <= x.len() {
        let p = segment_psd(&fft, &x[start..start + nperseg], &window, scale);
        for (a, v) in acc.iter_mut().zip(&p) {
            *a += v;
        }
        count += 1;
        start += step;
    }
    for a in &mut acc {
        *a /= count as f64;
    }
    Ok(Psd {
        values: acc,
        df_hz: fs / nperseg as f64,
        segments: count,
    })
}

/// Welch PSD with 1-second segments.
pub fn welch_psd(x: &[f64], fs: f64) -> Result<Psd> {
    welch_psd_with(x, fs, fs.round() as usize)
}

/// Integrated power in `[lo_hz, hi_hz)`; the Nyquist bin is included
/// when `hi_hz` reaches it.
pub fn band_power(psd: &Psd, fs: f64, lo_hz: f64, hi_hz: f64) -> f64 {
    let nyquist = fs / 2.0;
    let mut total = 0.0;
    for (k, p) in psd.values.iter().enumerate() {
        let f = k as f64 * psd.df_hz;
        if (lo_hz <= f && f < hi_hz) || (f == nyquist && hi_hz >= nyquist) {
            total += p * psd.df_hz;
        }
    }
    total
}

/// Power spectrogram: per-segment periodograms without averaging.
/// Returns the matrix (rows = frequency bins, columns = time frames),
/// plus bin and hop spacing.
pub struct Spectrogram {
    pub matrix: Vec<Vec<f64>>,
    pub df_hz: f64,
    pub dt_s: f64,
}

pub fn spectrogram(x: &[f64], fs: f64, nperseg: usize) -> Result<Spectrogram> {
    if x.len() < nperseg {
        return Err(Error::TooShort {
            needed: nperseg,
            got: x.len(),
        });
    }
    let window = hann_periodic(nperseg);
    let u: f64 = window.iter().map(|w| w * w).sum();
    let scale = 1.0 / (fs * u);
    let fft = FftPlanner::new().plan_fft_forward(nperseg);
    let step = nperseg / 2;

    let nbins = nperseg / 2 + 1;
    let mut frames: Vec<Vec<f64>> = Vec::new();
    let mut start = 0usize;
    while start + nperseg <= x.len() {
        frames.push(segment_psd(&fft, &x[start..start + nperseg], &window, scale));
        start += step;
    }
    let mut matrix = vec![vec![0.0; frames.len()]; nbins];
    for (t, frame) in frames.iter().enumerate() {
        for (k, v) in frame.iter().enumerate() {
            matrix[k][t] = *v;
        }
    }
    Ok(Spectrogram {
        matrix,
        df_hz: fs / nperseg as f64,
        dt_s: step as f64 / fs,
    })
}
