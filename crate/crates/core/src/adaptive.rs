//! Adaptive noise cancellation: LMS, NLMS and the burst-adaptive NLMS.
//!
//! All three variants share the same per-sample state machine. The filter
//! estimates the noise component of a primary channel from a reference
//! channel that is correlated with the noise but not with the wanted
//! signal; the error `e(n) = primary - w^T r` is simultaneously the
//! denoised output and the adaptation driver.
//!
//! ```text
//! y(n) = w^T(n) r(n)                          filter output (noise estimate)
//! e(n) = x(n) - y(n)                          denoised sample
//! LMS:     w <- w + mu0 * e * r
//! NLMS:    w <- w + mu0 / (eps + ||r||^2) * e * r
//! BA-NLMS: Ebar <- alpha*Ebar + (1-alpha)*||r||^2
//!          mu_eff = beta*mu0 if ||r||^2 > eta*Ebar else mu0
//!          w <- w + mu_eff / (eps + ||r||^2) * e * r
//! ```
//!
//! The burst gate multiplies the step size by `beta` whenever the
//! instantaneous reference energy exceeds `eta` times its running
//! average, so the filter re-converges quickly through sudden
//! high-energy noise events instead of being slowed down by the
//! normalization term.

use crate::error::{Error, Result};
use crate::signal::{ReferenceSignal, Signal};

/// Which update rule the filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterVariant {
    Lms,
    Nlms,
    BaNlms,
}

impl std::fmt::Display for FilterVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FilterVariant::Lms => write!(f, "lms"),
            FilterVariant::Nlms => write!(f, "nlms"),
            FilterVariant::BaNlms => write!(f, "ba-nlms"),
        }
    }
}

impl std::str::FromStr for FilterVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lms" => Ok(FilterVariant::Lms),
            "nlms" => Ok(FilterVariant::Nlms),
            "ba-nlms" | "ba_nlms" | "banlms" => Ok(FilterVariant::BaNlms),
            other => Err(Error::InvalidConfig(format!(
                "unknown filter variant '{other}' (expected lms, nlms or ba-nlms)"
            ))),
        }
    }
}

/// Adaptive filter parameters.
///
/// The defaults are the evaluation settings used throughout the
/// experiment harness: 10 taps, `mu0 = 0.05`, `eps = 0.001`,
/// `alpha = 0.99`, `eta = 5`, `beta = 6`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub variant: FilterVariant,
    /// Number of taps.
    pub filter_length: usize,
    /// Base step size.
    pub mu0: f64,
    /// Normalization regularizer.
    pub epsilon: f64,
    /// Energy moving-average factor, in (0, 1).
    pub alpha: f64,
    /// Burst detection threshold (ratio of instantaneous to average energy).
    pub eta: f64,
    /// Step-size scaling applied while the gate is open; > 1.
    pub beta: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            variant: FilterVariant::BaNlms,
            filter_length: 10,
            mu0: 0.05,
            epsilon: 0.001,
            alpha: 0.99,
            eta: 5.0,
            beta: 6.0,
        }
    }
}

impl AdaptiveConfig {
    pub fn new(variant: FilterVariant) -> Self {
        AdaptiveConfig {
            variant,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.filter_length == 0 {
            return Err(Error::InvalidConfig("filter_length must be >= 1".into()));
        }
        if !(self.mu0.is_finite() && self.mu0 > 0.0) {
            return Err(Error::InvalidConfig(format!("mu0 must be > 0, got {}", self.mu0)));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must be in (0, 1), got {}",
                self.alpha
            )));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::InvalidConfig(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.beta.is_finite() && self.beta > 1.0) {
            return Err(Error::InvalidConfig(format!("beta must be > 1, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Mutable state of one adaptive filter instance.
///
/// `ref_window` holds the last `filter_length` reference samples, most
/// recent first. Fields are public so tests and diagnostics can inspect
/// or construct exact states.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveFilterState {
    pub weights: Vec<f64>,
    pub ref_window: Vec<f64>,
    pub energy_avg: f64,
    pub sample_index: u64,
}

/// One denoised sample together with the gate diagnostics for that step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutput {
    /// The error signal `e(n)`: the clean-signal estimate.
    pub denoised_sample: f64,
    /// The filter output `y(n) = w^T r`.
    pub noise_estimate: f64,
    /// The step size selected for this sample: `mu0`, or `beta * mu0`
    /// while the burst gate is open.
    pub effective_step: f64,
    /// Whether the burst gate fired (always false for LMS/NLMS).
    pub burst_flag: bool,
}

/// Fresh all-zero state for the given config.
pub fn reset(config: &AdaptiveConfig) -> AdaptiveFilterState {
    AdaptiveFilterState {
        weights: vec![0.0; config.filter_length],
        ref_window: vec![0.0; config.filter_length],
        energy_avg: 0.0,
        sample_index: 0,
    }
}

/// Advance the filter by one sample.
///
/// Returns the step output and mutates the state in place. A non-finite
/// weight after the update is reported as [`Error::Divergence`] carrying
/// the sample index, so streaming callers fail fast.
pub fn step(
    state: &mut AdaptiveFilterState,
    config: &AdaptiveConfig,
    primary_sample: f64,
    reference_sample: f64,
) -> Result<StepOutput> {
    let taps = config.filter_length;
    debug_assert_eq!(state.weights.len(), taps);
    debug_assert_eq!(state.ref_window.len(), taps);

    for j in (1..taps).rev() {
        state.ref_window[j] = state.ref_window[j - 1];
    }
    state.ref_window[0] = reference_sample;

    let mut noise_estimate = 0.0;
    for j in 0..taps {
        noise_estimate += state.weights[j] * state.ref_window[j];
    }
    let denoised = primary_sample - noise_estimate;

    let mut energy = 0.0;
    for j in 0..taps {
        energy += state.ref_window[j] * state.ref_window[j];
    }

    let (effective_step, burst_flag, gain) = match config.variant {
        FilterVariant::Lms => (config.mu0, false, config.mu0),
        FilterVariant::Nlms => (config.mu0, false, config.mu0 / (config.epsilon + energy)),
        FilterVariant::BaNlms => {
            // Energy average first, then the gate compares against the
            // updated value; the order is fixed for reproducibility.
            state.energy_avg = config.alpha * state.energy_avg + (1.0 - config.alpha) * energy;
            let burst = energy > config.eta * state.energy_avg;
            let mu_eff = if burst { config.beta * config.mu0 } else { config.mu0 };
            (mu_eff, burst, mu_eff / (config.epsilon + energy))
        }
    };

    for j in 0..taps {
        state.weights[j] += gain * denoised * state.ref_window[j];
    }
    if state.weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Divergence {
            index: state.sample_index,
        });
    }
    state.sample_index += 1;

    Ok(StepOutput {
        denoised_sample: denoised,
        noise_estimate,
        effective_step,
        burst_flag,
    })
}

/// Run a filter over a whole recording from the zero state.
///
/// Returns the denoised signal and the per-sample step trace.
pub fn run_filter(
    config: &AdaptiveConfig,
    primary: &Signal,
    reference: &ReferenceSignal,
) -> Result<(Signal, Vec<StepOutput>)> {
    config.validate()?;
    if primary.len() != reference.len() {
        return Err(Error::LengthMismatch {
            left: primary.len(),
            right: reference.len(),
        });
    }
    if primary.sample_rate_hz() != reference.sample_rate_hz() {
        return Err(Error::SampleRateMismatch {
            expected: primary.sample_rate_hz(),
            actual: reference.sample_rate_hz(),
        });
    }

    let mut state = reset(config);
    let mut denoised = Vec::with_capacity(primary.len());
    let mut trace = Vec::with_capacity(primary.len());
    for (&x, &r) in primary.samples().iter().zip(reference.samples()) {
        let out = step(&mut state, config, x, r)?;
        denoised.push(out.denoised_sample);
        trace.push(out);
    }
    let denoised = Signal::new(denoised, primary.sample_rate_hz())?;
    Ok((denoised, trace))
}
