//! Adaptive noise cancellation and denoising pipelines for heart-sound
//! (PCG) and ECG recordings.
//!
//! The crate provides:
//!
//! - [`adaptive`]: LMS, NLMS and burst-adaptive NLMS cancellers as
//!   per-sample state machines plus batch drivers.
//! - [`sosfilt`]: cascaded second-order-section IIR filtering with the
//!   shipped ECG conditioning chain and the 20-200 Hz heart-sound
//!   band-pass.
//! - [`resample`]: anti-aliased integer-factor decimation (8 kHz audio
//!   down to the 2 kHz processing rate).
//! - [`synth`]: construction of noisy evaluation datasets from clean
//!   recordings and noise recordings at controlled SNR.
//! - [`metrics`]: NMSE, SNR improvement, correlation coefficient, NMAE
//!   and band-power SNR from an averaged periodogram.
//! - [`bench`]: the experiment harness comparing filter variants over a
//!   dataset, burst-subset selection and single-case reports.
//! - [`stream`]: real-time block processing with double buffering and
//!   deadline accounting.
//! - [`corpus`]: seeded synthetic heart-sound and hospital-noise
//!   generators for tests and demos.

pub mod adaptive;
pub mod bench;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod resample;
pub mod signal;
pub mod sosfilt;
pub mod stream;
pub mod synth;
pub mod wav;
pub mod welch;

pub use error::{Error, Result};
pub use signal::{normalize, signal_power, ReferenceSignal, Signal};
