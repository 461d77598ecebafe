//! Cascaded second-order-section IIR filtering.
//!
//! Sections use the transposed direct-form II structure, which keeps the
//! very low-frequency ECG corners well conditioned at 500 Hz:
//!
//! ```text
//! y  = b0*x + z1
//! z1 = b1*x - a1*y + z2
//! z2 = b2*x - a2*y
//! ```
//!
//! Coefficients are never designed at runtime. The shipped cascades were
//! generated once with an established design tool (see
//! `tools/design_filters.py`), committed as text files under `coeffs/`,
//! and are validated in tests against stored golden impulse responses.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::signal::Signal;

/// One biquad with its delay state.
#[derive(Debug, Clone, PartialEq)]
pub struct SosSection {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    z1: f64,
    z2: f64,
}

impl SosSection {
    /// Build a section, rejecting coefficient sets whose poles are not
    /// strictly inside the unit circle (|a2| < 1 and |a1| < 1 + a2).
    pub fn new(b0: f64, b1: f64, b2: f64, a1: f64, a2: f64) -> Result<Self> {
        if !(a2.abs() < 1.0 && a1.abs() < 1.0 + a2) {
            return Err(Error::UnstableSection { index: 0, a1, a2 });
        }
        for v in [b0, b1, b2, a1, a2] {
            if !v.is_finite() {
                return Err(Error::UnstableSection { index: 0, a1, a2 });
            }
        }
        Ok(SosSection {
            b0,
            b1,
            b2,
            a1,
            a2,
            z1: 0.0,
            z2: 0.0,
        })
    }

    #[inline]
    pub fn process_sample(&mut self, x: f64) -> f64 {
        let y = self.b0 * x + self.z1;
        self.z1 = self.b1 * x - self.a1 * y + self.z2;
        self.z2 = self.b2 * x - self.a2 * y;
        y
    }

    pub fn reset(&mut self) {
        self.z1 = 0.0;
        self.z2 = 0.0;
    }
}

/// An ordered list of sections with a label and the sample rate the
/// design is valid for.
#[derive(Debug, Clone, PartialEq)]
pub struct SosCascade {
    pub sections: Vec<SosSection>,
    pub design_label: String,
    pub sample_rate_hz: f64,
}

impl SosCascade {
    pub fn new(label: &str, sample_rate_hz: f64, sections: Vec<SosSection>) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidSampleRate(sample_rate_hz));
        }
        Ok(SosCascade {
            sections,
            design_label: label.to_string(),
            sample_rate_hz,
        })
    }

    /// Filter a block of raw samples, carrying section state across calls.
    pub fn process(&mut self, input: &[f64], output: &mut Vec<f64>) {
        output.clear();
        output.reserve(input.len());
        for &x in input {
            let mut v = x;
            for section in &mut self.sections {
                v = section.process_sample(v);
            }
            output.push(v);
        }
    }

    /// Filter a signal, carrying state. Call [`SosCascade::reset`] first
    /// for a fresh run.
    pub fn apply(&mut self, signal: &Signal) -> Result<Signal> {
        if signal.sample_rate_hz() != self.sample_rate_hz {
            return Err(Error::SampleRateMismatch {
                expected: self.sample_rate_hz,
                actual: signal.sample_rate_hz(),
            });
        }
        let mut out = Vec::new();
        self.process(signal.samples(), &mut out);
        Signal::new(out, signal.sample_rate_hz())
    }

    pub fn reset(&mut self) {
        for s in &mut self.sections {
            s.reset();
        }
    }

    /// Serialize to the coefficient-file text format.
    pub fn to_file_string(&self) -> Result<String> {
        if self.design_label.contains(',') || self.design_label.contains('\n') {
            return Err(Error::InvalidConfig(
                "design label must not contain ',' or newlines".into(),
            ));
        }
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{}, {:?}, {}",
            self.design_label,
            self.sample_rate_hz,
            self.sections.len()
        );
        for sec in &self.sections {
            let _ = writeln!(
                s,
                "{:?} {:?} {:?} {:?} {:?}",
                sec.b0, sec.b1, sec.b2, sec.a1, sec.a2
            );
        }
        Ok(s)
    }
}

/// Parse a cascade from the coefficient-file text format:
/// one header line `label, sample_rate_hz, n_sections`, then one line per
/// section `b0 b1 b2 a1 a2` in full double precision.
pub fn parse_cascade(text: &str) -> Result<SosCascade> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::CoeffHeader("empty file".into()))?;
    let parts: Vec<&str> = header.split(',').map(|p| p.trim()).collect();
    if parts.len() != 3 {
        return Err(Error::CoeffHeader(format!(
            "expected 'label, sample_rate_hz, n_sections', got '{header}'"
        )));
    }
    let label = parts[0].to_string();
    let sample_rate: f64 = parts[1]
        .parse()
        .map_err(|_| Error::CoeffHeader(format!("bad sample rate '{}'", parts[1])))?;
    let n_sections: usize = parts[2]
        .parse()
        .map_err(|_| Error::CoeffHeader(format!("bad section count '{}'", parts[2])))?;

    let mut sections = Vec::with_capacity(n_sections);
    for idx in 0..n_sections {
        let line_no = idx + 2;
        let line = lines.next().ok_or(Error::CoeffParse {
            line: line_no,
            detail: "missing section line".into(),
        })?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::CoeffParse {
                    line: line_no,
                    detail: format!("bad number '{t}'"),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != 5 {
            return Err(Error::CoeffParse {
                line: line_no,
                detail: format!("expected 5 coefficients, got {}", vals.len()),
            });
        }
        let section =
            SosSection::new(vals[0], vals[1], vals[2], vals[3], vals[4]).map_err(|e| match e {
                Error::UnstableSection { a1, a2, .. } => Error::UnstableSection { index: idx, a1, a2 },
                other => other,
            })?;
        sections.push(section);
    }
    SosCascade::new(&label, sample_rate, sections)
}

/// Load a cascade from a coefficient file with zeroed state.
pub fn load_cascade<P: AsRef<Path>>(path: P) -> Result<SosCascade> {
    let text = std::fs::read_to_string(path)?;
    parse_cascade(&text)
}

/// Write a cascade to a coefficient file (bit-exact round trip).
pub fn save_cascade<P: AsRef<Path>>(cascade: &SosCascade, path: P) -> Result<()> {
    std::fs::write(path, cascade.to_file_string()?)?;
    Ok(())
}

/// The shipped coefficient sets.
pub mod designs {
    use super::{parse_cascade, SosCascade};
    use crate::error::Result;
    use std::path::Path;

    pub const ECG_HIGHPASS: &str = "ecg_highpass";
    pub const ECG_LOWPASS: &str = "ecg_lowpass";
    pub const ECG_BANDSTOP: &str = "ecg_bandstop";
    pub const PCG_BANDPASS: &str = "pcg_bandpass";
    pub const DECIM_8K_TO_2K: &str = "decim_8k_to_2k";

    pub const ALL: [&str; 5] = [
        ECG_HIGHPASS,
        ECG_LOWPASS,
        ECG_BANDSTOP,
        PCG_BANDPASS,
        DECIM_8K_TO_2K,
    ];

    fn embedded(name: &str) -> Option<&'static str> {
        match name {
            ECG_HIGHPASS => Some(include_str!("../coeffs/ecg_highpass.sos")),
            ECG_LOWPASS => Some(include_str!("../coeffs/ecg_lowpass.sos")),
            ECG_BANDSTOP => Some(include_str!("../coeffs/ecg_bandstop.sos")),
            PCG_BANDPASS => Some(include_str!("../coeffs/pcg_bandpass.sos")),
            DECIM_8K_TO_2K => Some(include_str!("../coeffs/decim_8k_to_2k.sos")),
            _ => None,
        }
    }

    /// Load a shipped design by name, optionally overriding the embedded
    /// coefficients with `<dir>/<name>.sos` (the `ANC_DSP_COEFF_DIR`
    /// mechanism of the CLI).
    pub fn load(name: &str, override_dir: Option<&Path>) -> Result<SosCascade> {
        if let Some(dir) = override_dir {
            return super::load_cascade(dir.join(format!("{name}.sos")));
        }
        match embedded(name) {
            Some(text) => parse_cascade(text),
            None => Err(crate::error::Error::InvalidConfig(format!(
                "unknown design '{name}'"
            ))),
        }
    }

    pub fn ecg_highpass() -> SosCascade {
        parse_cascade(embedded(ECG_HIGHPASS).unwrap()).expect("embedded design parses")
    }

    pub fn ecg_lowpass() -> SosCascade {
        parse_cascade(embedded(ECG_LOWPASS).unwrap()).expect("embedded design parses")
    }

    pub fn ecg_bandstop() -> SosCascade {
        parse_cascade(embedded(ECG_BANDSTOP).unwrap()).expect("embedded design parses")
    }

    pub fn pcg_bandpass() -> SosCascade {
        parse_cascade(embedded(PCG_BANDPASS).unwrap()).expect("embedded design parses")
    }

    pub fn decim_8k_to_2k() -> SosCascade {
        parse_cascade(embedded(DECIM_8K_TO_2K).unwrap()).expect("embedded design parses")
    }
}

/// The ECG conditioning chain: 0.5 Hz high-pass (baseline drift), 150 Hz
/// low-pass, 49.5-50.5 Hz bandstop (power line). Fresh zero state per
/// call; input must be at 500 Hz.
pub fn ecg_pipeline(signal: &Signal) -> Result<Signal> {
    if signal.sample_rate_hz() != 500.0 {
        return Err(Error::SampleRateMismatch {
            expected: 500.0,
            actual: signal.sample_rate_hz(),
        });
    }
    let mut hp = designs::ecg_highpass();
    let mut lp = designs::ecg_lowpass();
    let mut bs = designs::ecg_bandstop();
    let stage1 = hp.apply(signal)?;
    let stage2 = lp.apply(&stage1)?;
    bs.apply(&stage2)
}

/// The 20-200 Hz heart-sound band-pass post stage at 2 kHz. Fresh zero
/// state per call.
pub fn pcg_bandpass(signal: &Signal) -> Result<Signal> {
    if signal.sample_rate_hz() != 2000.0 {
        return Err(Error::SampleRateMismatch {
            expected: 2000.0,
            actual: signal.sample_rate_hz(),
        });
    }
    let mut bp = designs::pcg_bandpass();
    bp.apply(signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine(freq: f64, fs: f64, seconds: f64) -> Signal {
        let n = (seconds * fs) as usize;
        Signal::new(
            (0..n).map(|i| (2.0 * PI * freq * i as f64 / fs).sin()).collect(),
            fs,
        )
        .unwrap()
    }

    fn steady_state_amplitude(out: &Signal, tail: usize) -> f64 {
        let s = out.samples();
        let t = &s[s.len() - tail..];
        let p = t.iter().map(|v| v * v).sum::<f64>() / tail as f64;
        (2.0 * p).sqrt()
    }

    #[test]
    fn identity_cascade_passes_input() {
        let mut c = SosCascade::new(
            "identity",
            2000.0,
            vec![SosSection::new(1.0, 0.0, 0.0, 0.0, 0.0).unwrap()],
        )
        .unwrap();
        let s = sine(50.0, 2000.0, 0.1);
        let out = c.apply(&s).unwrap();
        assert_eq!(out.samples(), s.samples());
    }

    #[test]
    fn unstable_section_is_rejected() {
        assert!(matches!(
            SosSection::new(1.0, 0.0, 0.0, 0.0, 1.5),
            Err(Error::UnstableSection { .. })
        ));
        // Pole pair on the unit circle is rejected too.
        assert!(SosSection::new(1.0, 0.0, 0.0, -2.0, 1.0).is_err());
    }

    #[test]
    fn rate_mismatch_is_rejected() {
        let mut c = designs::pcg_bandpass();
        let s = sine(100.0, 500.0, 0.1);
        assert!(matches!(c.apply(&s), Err(Error::SampleRateMismatch { .. })));
    }

    #[test]
    fn dc_through_ecg_highpass_decays() {
        let fs = 500.0;
        let n = (60.0 * fs) as usize;
        let dc = Signal::new(vec![1.0; n], fs).unwrap();
        let mut hp = designs::ecg_highpass();
        let out = hp.apply(&dc).unwrap();
        let tail = &out.samples()[(0.8 * n as f64) as usize..];
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        assert!(mean.abs() < 1e-3, "tail mean {mean}");
    }

    #[test]
    fn bandstop_kills_50_hz() {
        let s = sine(50.0, 500.0, 20.0);
        let mut bs = designs::ecg_bandstop();
        let out = bs.apply(&s).unwrap();
        let amp = steady_state_amplitude(&out, 1000);
        assert!(amp < 0.01, "50 Hz steady-state amplitude {amp}");
    }

    #[test]
    fn ecg_pipeline_contract() {
        let fs = 500.0;
        let zero = Signal::new(vec![0.0; 1000], fs).unwrap();
        let out = ecg_pipeline(&zero).unwrap();
        assert!(out.samples().iter().all(|v| *v == 0.0));

        // in-band tone passes within the ripple budget
        let out = ecg_pipeline(&sine(10.0, fs, 20.0)).unwrap();
        let amp = steady_state_amplitude(&out, 2000);
        assert!((0.85..=1.05).contains(&amp), "10 Hz amplitude {amp}");

        // baseline wander is rejected
        let out = ecg_pipeline(&sine(0.1, fs, 60.0)).unwrap();
        let amp = steady_state_amplitude(&out, 10_000);
        assert!(amp < 0.05, "0.1 Hz amplitude {amp}");

        // wrong rate
        assert!(ecg_pipeline(&sine(10.0, 2000.0, 1.0)).is_err());
    }

    #[test]
    fn pcg_bandpass_contract() {
        let fs = 2000.0;
        let zero = Signal::new(vec![0.0; 1000], fs).unwrap();
        let out = pcg_bandpass(&zero).unwrap();
        assert!(out.samples().iter().all(|v| *v == 0.0));

        let out = pcg_bandpass(&sine(100.0, fs, 10.0)).unwrap();
        let amp = steady_state_amplitude(&out, 4000);
        assert!(amp >= 0.85, "100 Hz amplitude {amp}");

        let out = pcg_bandpass(&sine(500.0, fs, 10.0)).unwrap();
        let amp = steady_state_amplitude(&out, 4000);
        assert!(amp < 0.05, "500 Hz amplitude {amp}");

        assert!(pcg_bandpass(&sine(100.0, 500.0, 1.0)).is_err());
    }

    #[test]
    fn coefficient_file_round_trip_is_bit_exact() {
        let original = designs::ecg_bandstop();
        let text = original.to_file_string().unwrap();
        let parsed = parse_cascade(&text).unwrap();
        assert_eq!(parsed.design_label, original.design_label);
        assert_eq!(parsed.sample_rate_hz, original.sample_rate_hz);
        for (a, b) in parsed.sections.iter().zip(&original.sections) {
            assert_eq!(a.b0.to_bits(), b.b0.to_bits());
            assert_eq!(a.b1.to_bits(), b.b1.to_bits());
            assert_eq!(a.b2.to_bits(), b.b2.to_bits());
            assert_eq!(a.a1.to_bits(), b.a1.to_bits());
            assert_eq!(a.a2.to_bits(), b.a2.to_bits());
        }
    }

    #[test]
    fn file_errors_are_distinct() {
        assert!(matches!(parse_cascade(""), Err(Error::CoeffHeader(_))));
        assert!(matches!(
            parse_cascade("label only header\n"),
            Err(Error::CoeffHeader(_))
        ));
        assert!(matches!(
            parse_cascade("x, 500.0, 1\n1.0 0.0 0.0 nope 0.0\n"),
            Err(Error::CoeffParse { .. })
        ));
        assert!(matches!(
            parse_cascade("x, 500.0, 2\n1.0 0.0 0.0 0.0 0.0\n"),
            Err(Error::CoeffParse { .. })
        ));
        // pole outside the unit circle
        assert!(matches!(
            parse_cascade("x, 500.0, 1\n1.0 0.0 0.0 0.0 1.5\n"),
            Err(Error::UnstableSection { index: 0, .. })
        ));
    }

    #[test]
    fn shipped_impulse_responses_decay() {
        for name in designs::ALL {
            let mut c = designs::load(name, None).unwrap();
            let n = 200_000;
            let mut imp = vec![0.0; n];
            imp[0] = 1.0;
            let mut out = Vec::new();
            c.process(&imp, &mut out);
            assert!(out.iter().all(|v| v.is_finite()), "{name}: non-finite response");
            let tail_max = out[n - 1000..].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(tail_max < 1e-9, "{name}: tail max {tail_max}");
        }
    }

    #[test]
    fn streaming_equals_batch() {
        let s = sine(40.0, 2000.0, 2.0);
        let mut whole = designs::pcg_bandpass();
        let batch = whole.apply(&s).unwrap();

        let mut streamed = designs::pcg_bandpass();
        let mut out = Vec::new();
        for chunk in s.samples().chunks(123) {
            let mut part = Vec::new();
            streamed.process(chunk, &mut part);
            out.extend(part);
        }
        assert_eq!(batch.samples(), &out[..]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn linearity(seed in 0u64..500, c in -4.0f64..4.0) {
            use rand::{RngExt, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..400).map(|_| rng.random_range(-1.0..1.0)).collect();

            let run = |input: &[f64]| {
                let mut f = designs::pcg_bandpass();
                let mut out = Vec::new();
                f.process(input, &mut out);
                out
            };
            let fx = run(&x);
            let fy = run(&y);
            let scaled: Vec<f64> = x.iter().map(|v| c * v).collect();
            let fsx = run(&scaled);
            let summed: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + b).collect();
            let fsum = run(&summed);

            for i in 0..x.len() {
                prop_assert!((fsx[i] - c * fx[i]).abs() <= 1e-12 * (1.0 + fx[i].abs() * c.abs()));
                prop_assert!((fsum[i] - (fx[i] + fy[i])).abs() <= 1e-12 * (1.0 + (fx[i] + fy[i]).abs()));
            }
        }
    }
}
