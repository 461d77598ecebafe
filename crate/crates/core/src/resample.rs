//! Anti-aliased integer-factor decimation for the 8 kHz -> 2 kHz audio
//! path and dataset preprocessing.

use crate::error::{Error, Result};
use crate::signal::Signal;
use crate::sosfilt::{designs, SosCascade};

/// Decimation recipe: drop factor plus the anti-alias low-pass applied
/// before sample dropping. With `factor == 1` the anti-alias stage is
/// bypassed entirely and the output equals the input.
#[derive(Debug, Clone)]
pub struct DecimatorSpec {
    pub factor: usize,
    pub anti_alias: SosCascade,
}

impl DecimatorSpec {
    pub fn new(factor: usize, anti_alias: SosCascade) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidConfig("decimation factor must be >= 1".into()));
        }
        Ok(DecimatorSpec { factor, anti_alias })
    }

    /// The device audio path: 8 kHz in, 2 kHz out, elliptic low-pass at
    /// 800 Hz (0.8 x output Nyquist).
    pub fn pcg_8k_to_2k() -> Self {
        DecimatorSpec {
            factor: 4,
            anti_alias: designs::decim_8k_to_2k(),
        }
    }
}

/// Streaming decimator: carries filter state and drop phase across
/// blocks so block-wise processing matches one batch call bit-for-bit.
#[derive(Debug, Clone)]
pub struct Decimator {
    spec: DecimatorSpec,
    phase: usize,
    scratch: Vec<f64>,
}

impl Decimator {
    pub fn new(spec: DecimatorSpec) -> Self {
        Decimator {
            spec,
            phase: 0,
            scratch: Vec::new(),
        }
    }

    pub fn factor(&self) -> usize {
        self.spec.factor
    }

    pub fn reset(&mut self) {
        self.spec.anti_alias.reset();
        self.phase = 0;
    }

    /// Filter and drop samples from one block, appending kept samples to
    /// `out`.
    pub fn process_block(&mut self, input: &[f64], out: &mut Vec<f64>) {
        if self.spec.factor == 1 {
            out.extend_from_slice(input);
            return;
        }
        let scratch = std::mem::take(&mut self.scratch);
        let mut filtered = scratch;
        self.spec.anti_alias.process(input, &mut filtered);
        for &v in &filtered {
            if self.phase == 0 {
                out.push(v);
            }
            self.phase += 1;
            if self.phase == self.spec.factor {
                self.phase = 0;
            }
        }
        self.scratch = filtered;
    }
}

/// Decimate a whole signal from a fresh state.
///
/// The output rate is `input rate / factor` and the output length is
/// `ceil(input length / factor)`.
pub fn decimate(spec: &DecimatorSpec, signal: &Signal) -> Result<Signal> {
    if spec.factor == 1 {
        return Ok(signal.clone());
    }
    let rate = signal.sample_rate_hz();
    let factor = spec.factor as f64;
    if rate % factor != 0.0 {
        return Err(Error::InvalidConfig(format!(
            "sample rate {rate} Hz not divisible by decimation factor {}",
            spec.factor
        )));
    }
    if spec.anti_alias.sample_rate_hz != rate {
        return Err(Error::SampleRateMismatch {
            expected: spec.anti_alias.sample_rate_hz,
            actual: rate,
        });
    }
    let mut d = Decimator::new(spec.clone());
    let mut out = Vec::with_capacity(signal.len() / spec.factor + 1);
    d.process_block(signal.samples(), &mut out);
    Signal::new(out, rate / factor)
}
