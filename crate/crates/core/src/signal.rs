//! Signal container and basic sample arithmetic.
//!
//! A [`Signal`] is a uniformly sampled, single-channel sequence of `f64`
//! amplitudes with a sample rate. Values are immutable after construction
//! and are validated to be finite, so every downstream stage can rely on
//! clean input. Multi-channel material is handled as a collection of
//! `Signal`s by callers.

use crate::error::{Error, Result};

/// Uniformly sampled single-channel signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Signal {
    /// Build a signal, validating that the rate is positive and every
    /// sample is finite.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        if let Some(idx) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(idx));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Role tag for the noise-correlated reference channel of an adaptive
/// canceller. Same shape as [`Signal`]; the pairing constraints (equal
/// length and rate with the primary) are checked at filter time.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSignal(Signal);

impl ReferenceSignal {
    pub fn new(signal: Signal) -> Self {
        ReferenceSignal(signal)
    }

    pub fn as_signal(&self) -> &Signal {
        &self.0
    }

    pub fn into_signal(self) -> Signal {
        self.0
    }

    pub fn samples(&self) -> &[f64] {
        self.0.samples()
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.0.sample_rate_hz()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Signal> for ReferenceSignal {
    fn from(s: Signal) -> Self {
        ReferenceSignal(s)
    }
}

/// Scale a signal so its peak absolute amplitude is exactly 1.
///
/// Errors on empty or all-zero input so the scale is always well defined.
pub fn normalize(signal: &Signal) -> Result<Signal> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let peak = signal
        .samples()
        .iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let scaled = signal.samples().iter().map(|v| v / peak).collect();
    Signal::new(scaled, signal.sample_rate_hz())
}

/// Mean of squared samples (average power).
pub fn signal_power(signal: &Signal) -> Result<f64> {
    if signal.is_empty() {
        return Err(Error::EmptySignal);
    }
    let sum: f64 = signal.samples().iter().map(|v| v * v).sum();
    Ok(sum / signal.len() as f64)
}
