//! WAV input and output: single-channel PCM 16-bit integer and 32-bit
//! float, sample rate taken from the header.

use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// Read every channel of a WAV file as a separate signal.
pub fn read_wav_channels<P: AsRef<Path>>(path: P) -> Result<Vec<Signal>> {
    let mut reader = hound::WavReader::open(&path)?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(Error::Wav("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0).map_err(Error::from))
            .collect::<Result<_>>()?,
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64).map_err(Error::from))
            .collect::<Result<_>>()?,
        (fmt, bits) => {
            return Err(Error::Wav(format!(
                "unsupported format {fmt:?}/{bits} bit (need 16-bit int or 32-bit float)"
            )))
        }
    };
    let frames = interleaved.len() / channels;
    let mut per_channel = vec![Vec::with_capacity(frames); channels];
    for (i, v) in interleaved.into_iter().enumerate() {
        per_channel[i % channels].push(v);
    }
    per_channel
        .into_iter()
        .map(|samples| Signal::new(samples, spec.sample_rate as f64))
        .collect()
}

/// Read a single-channel WAV file. Errors on multi-channel input.
pub fn read_wav<P: AsRef<Path>>(path: P) -> Result<Signal> {
    let mut channels = read_wav_channels(&path)?;
    if channels.len() != 1 {
        return Err(Error::Wav(format!(
            "expected mono, got {} channels ({})",
            channels.len(),
            path.as_ref().display()
        )));
    }
    Ok(channels.pop().unwrap())
}

/// Average a set of equally shaped channels into one signal (used to
/// collapse a multi-microphone ambient reference into a single channel).
pub fn average_channels(channels: &[Signal]) -> Result<Signal> {
    let first = channels.first().ok_or(Error::EmptySignal)?;
    let n = first.len();
    let rate = first.sample_rate_hz();
    for c in channels {
        if c.len() != n {
            return Err(Error::LengthMismatch {
                left: n,
                right: c.len(),
            });
        }
        if c.sample_rate_hz() != rate {
            return Err(Error::SampleRateMismatch {
                expected: rate,
                actual: c.sample_rate_hz(),
            });
        }
    }
    let k = channels.len() as f64;
    let mut avg = vec![0.0; n];
    for c in channels {
        for (a, v) in avg.iter_mut().zip(c.samples()) {
            *a += v;
        }
    }
    for a in &mut avg {
        *a /= k;
    }
    Signal::new(avg, rate)
}

/// Write a signal as single-channel 32-bit float WAV.
pub fn write_wav_f32<P: AsRef<Path>>(path: P, signal: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz().round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &v in signal.samples() {
        writer.write_sample(v as f32)?;
    }
    writer.finalize()?;
    Ok(())
}

/// Write a signal as single-channel 16-bit PCM WAV; samples are clamped
/// to [-1, 1] before quantization.
pub fn write_wav_i16<P: AsRef<Path>>(path: P, signal: &Signal) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate_hz().round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &v in signal.samples() {
        let clamped = v.clamp(-1.0, 1.0);
        let q = (clamped * 32767.0).round() as i16;
        writer.write_sample(q)?;
    }
    writer.finalize()?;
    Ok(())
}
